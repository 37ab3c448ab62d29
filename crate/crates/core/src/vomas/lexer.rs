//! Tokenizer for the overlay spec language. Line-oriented UTF-8 text,
//! `#` comments; every token carries its 1-based line and column for
//! diagnostics.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Num(f64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Assign,
    Arrow,
    Dot,
    EqEq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Num(x) => write!(f, "number {x}"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::LBracket => write!(f, "`[`"),
            Tok::RBracket => write!(f, "`]`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Colon => write!(f, "`:`"),
            Tok::Assign => write!(f, "`=`"),
            Tok::Arrow => write!(f, "`->`"),
            Tok::Dot => write!(f, "`.`"),
            Tok::EqEq => write!(f, "`==`"),
            Tok::Ne => write!(f, "`!=`"),
            Tok::Lt => write!(f, "`<`"),
            Tok::Le => write!(f, "`<=`"),
            Tok::Gt => write!(f, "`>`"),
            Tok::Ge => write!(f, "`>=`"),
            Tok::Plus => write!(f, "`+`"),
            Tok::Minus => write!(f, "`-`"),
            Tok::Star => write!(f, "`*`"),
            Tok::Slash => write!(f, "`/`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

/// A positioned compile diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub pos: Pos,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pos, self.message)
    }
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line = 1usize;
    let mut col = 1usize;

    macro_rules! push {
        ($tok:expr, $pos:expr) => {
            tokens.push(Token { tok: $tok, pos: $pos })
        };
    }

    while let Some(&c) = chars.peek() {
        let pos = Pos { line, col };
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            '#' => {
                // comment to end of line
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
            }
            '(' => {
                chars.next();
                col += 1;
                push!(Tok::LParen, pos);
            }
            ')' => {
                chars.next();
                col += 1;
                push!(Tok::RParen, pos);
            }
            '[' => {
                chars.next();
                col += 1;
                push!(Tok::LBracket, pos);
            }
            ']' => {
                chars.next();
                col += 1;
                push!(Tok::RBracket, pos);
            }
            ',' => {
                chars.next();
                col += 1;
                push!(Tok::Comma, pos);
            }
            ':' => {
                chars.next();
                col += 1;
                push!(Tok::Colon, pos);
            }
            '.' => {
                chars.next();
                col += 1;
                push!(Tok::Dot, pos);
            }
            '+' => {
                chars.next();
                col += 1;
                push!(Tok::Plus, pos);
            }
            '*' => {
                chars.next();
                col += 1;
                push!(Tok::Star, pos);
            }
            '/' => {
                chars.next();
                col += 1;
                push!(Tok::Slash, pos);
            }
            '-' => {
                chars.next();
                col += 1;
                if chars.peek() == Some(&'>') {
                    chars.next();
                    col += 1;
                    push!(Tok::Arrow, pos);
                } else {
                    push!(Tok::Minus, pos);
                }
            }
            '=' => {
                chars.next();
                col += 1;
                if chars.peek() == Some(&'=') {
                    chars.next();
                    col += 1;
                    push!(Tok::EqEq, pos);
                } else {
                    push!(Tok::Assign, pos);
                }
            }
            '!' => {
                chars.next();
                col += 1;
                if chars.peek() == Some(&'=') {
                    chars.next();
                    col += 1;
                    push!(Tok::Ne, pos);
                } else {
                    return Err(Diagnostic {
                        pos,
                        message: "expected `!=`".to_string(),
                    });
                }
            }
            '<' => {
                chars.next();
                col += 1;
                if chars.peek() == Some(&'=') {
                    chars.next();
                    col += 1;
                    push!(Tok::Le, pos);
                } else {
                    push!(Tok::Lt, pos);
                }
            }
            '>' => {
                chars.next();
                col += 1;
                if chars.peek() == Some(&'=') {
                    chars.next();
                    col += 1;
                    push!(Tok::Ge, pos);
                } else {
                    push!(Tok::Gt, pos);
                }
            }
            c if c.is_ascii_digit() => {
                let mut raw = String::new();
                let mut seen_dot = false;
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() {
                        raw.push(c);
                        chars.next();
                        col += 1;
                    } else if c == '.' && !seen_dot {
                        // lookahead: `1.x` in `a.pubs` style never starts
                        // with a digit, so a dot here is a fraction only if
                        // a digit follows
                        let mut clone = chars.clone();
                        clone.next();
                        if clone.peek().is_some_and(|d| d.is_ascii_digit()) {
                            seen_dot = true;
                            raw.push(c);
                            chars.next();
                            col += 1;
                        } else {
                            break;
                        }
                    } else {
                        break;
                    }
                }
                let value: f64 = raw.parse().map_err(|_| Diagnostic {
                    pos,
                    message: format!("malformed number `{raw}`"),
                })?;
                push!(Tok::Num(value), pos);
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut name = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        name.push(c);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                push!(Tok::Ident(name), pos);
            }
            other => {
                return Err(Diagnostic {
                    pos,
                    message: format!("unexpected character `{other}`"),
                });
            }
        }
    }
    tokens.push(Token {
        tok: Tok::Eof,
        pos: Pos { line, col },
    });
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(text: &str) -> Vec<Tok> {
        tokenize(text).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn lexes_an_invariant_line() {
        let ts = toks("invariant w: count(agents[kind == wolf]) > 0");
        assert_eq!(
            ts,
            vec![
                Tok::Ident("invariant".into()),
                Tok::Ident("w".into()),
                Tok::Colon,
                Tok::Ident("count".into()),
                Tok::LParen,
                Tok::Ident("agents".into()),
                Tok::LBracket,
                Tok::Ident("kind".into()),
                Tok::EqEq,
                Tok::Ident("wolf".into()),
                Tok::RBracket,
                Tok::RParen,
                Tok::Gt,
                Tok::Num(0.0),
                Tok::Eof,
            ]
        );
    }

    #[test]
    fn comments_and_positions() {
        let tokens = tokenize("# header\n  watch x = tick").unwrap();
        assert_eq!(tokens[0].tok, Tok::Ident("watch".into()));
        assert_eq!(tokens[0].pos, Pos { line: 2, col: 3 });
    }

    #[test]
    fn arrow_vs_minus() {
        assert_eq!(toks("a -> b - c")[1], Tok::Arrow);
        assert_eq!(toks("a -> b - c")[3], Tok::Minus);
    }

    #[test]
    fn numbers_and_member_dots() {
        // `1.5` is one number; `r.pubs` is ident dot ident
        assert_eq!(toks("1.5"), vec![Tok::Num(1.5), Tok::Eof]);
        assert_eq!(
            toks("r.pubs"),
            vec![
                Tok::Ident("r".into()),
                Tok::Dot,
                Tok::Ident("pubs".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn bad_character_is_positioned() {
        let err = tokenize("watch w = $").unwrap_err();
        assert_eq!(err.pos, Pos { line: 1, col: 11 });
    }

    #[test]
    fn lone_bang_rejected() {
        assert!(tokenize("a ! b").is_err());
    }
}
