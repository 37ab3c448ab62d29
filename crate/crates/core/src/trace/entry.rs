//! The log entry hierarchy and its wire form: UTF-8 line-delimited records,
//! one self-describing JSON object per line, keys sorted lexicographically
//! so serialization is canonical and byte-stable. Entries carry no
//! wall-clock timestamps; reruns of the same configuration are
//! byte-identical.

use std::collections::BTreeMap;
use std::fmt;

use serde_json::{json, Map, Number, Value as Json};

use crate::engine::{AgentId, AttrValue, ParamValue, Params, SimAgent};
use crate::vomas::ast::Scope;
use crate::vomas::eval::Value;

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    Halted,
    Aborted,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::Halted => "halted",
            RunStatus::Aborted => "aborted",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "completed" => Some(RunStatus::Completed),
            "halted" => Some(RunStatus::Halted),
            "aborted" => Some(RunStatus::Aborted),
            _ => None,
        }
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Console message severity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Info,
    Violation,
}

impl Severity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Severity::Info => "info",
            Severity::Violation => "violation",
        }
    }

    /// Upper-case form used on the console stream itself.
    pub fn console_str(&self) -> &'static str {
        match self {
            Severity::Info => "INFO",
            Severity::Violation => "VIOLATION",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "info" => Some(Severity::Info),
            "violation" => Some(Severity::Violation),
            _ => None,
        }
    }
}

/// One agent row in a frame entry.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameAgent {
    pub id: u64,
    pub kind: String,
    pub x: f64,
    pub y: f64,
    pub color: String,
}

/// Whether an evaluation failure came from a watch or an invariant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ItemKind {
    Watch,
    Invariant,
}

impl ItemKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ItemKind::Watch => "watch",
            ItemKind::Invariant => "invariant",
        }
    }
}

/// Kind-specific payload of a log entry.
#[derive(Debug, Clone, PartialEq)]
pub enum EntryBody {
    /// A watch evaluation result.
    Watch { name: String, value: Value },
    /// An invariant whose predicate evaluated false.
    Violation {
        invariant: String,
        predicate: String,
        scope: Scope,
        /// Present for at-termination checks: why the run ended.
        reason: Option<RunStatus>,
    },
    /// Mirror of a console message.
    Console {
        severity: Severity,
        name: String,
        message: String,
    },
    /// Visual snapshot: every agent's position and color.
    Frame { agents: Vec<FrameAgent> },
    /// Full state: every agent's attribute table, plus world geometry and
    /// links, so the tick can be reconstructed offline.
    State {
        width: f64,
        height: f64,
        agents: Vec<SimAgent>,
        links: Vec<(u64, u64)>,
    },
    /// Population accounting: agents created or removed this tick.
    Event { name: String, agents: Vec<u64> },
    /// Run header: the configuration that produced this trace.
    RunStart {
        model: String,
        seed: u64,
        max_ticks: u64,
        params: Params,
    },
    /// An expression that failed to evaluate; the run continues.
    EvalFailure {
        item: ItemKind,
        name: String,
        message: String,
    },
}

/// One self-contained trace record.
#[derive(Debug, Clone, PartialEq)]
pub struct LogEntry {
    pub run_id: String,
    pub tick: u64,
    pub body: EntryBody,
}

impl LogEntry {
    pub fn kind(&self) -> &'static str {
        match &self.body {
            EntryBody::Watch { .. } => "watch",
            EntryBody::Violation { .. } => "violation",
            EntryBody::Console { .. } => "console",
            EntryBody::Frame { .. } => "frame",
            EntryBody::State { .. } => "state",
            EntryBody::Event { .. } | EntryBody::RunStart { .. } => "event",
            EntryBody::EvalFailure { .. } => "eval_failure",
        }
    }

    /// Canonical single-line form (no trailing newline).
    pub fn to_line(&self) -> String {
        // serde_json's default map is a BTreeMap, so keys come out sorted
        serde_json::to_string(&self.to_json()).expect("entry serialization cannot fail")
    }

    pub fn to_json(&self) -> Json {
        let mut map = Map::new();
        map.insert("run_id".into(), json!(self.run_id));
        map.insert("tick".into(), json!(self.tick));
        map.insert("kind".into(), json!(self.kind()));
        match &self.body {
            EntryBody::Watch { name, value } => {
                map.insert("name".into(), json!(name));
                map.insert("value".into(), value_to_json(value));
            }
            EntryBody::Violation {
                invariant,
                predicate,
                scope,
                reason,
            } => {
                map.insert("invariant".into(), json!(invariant));
                map.insert("predicate".into(), json!(predicate));
                map.insert("scope".into(), json!(scope.as_str()));
                if let Some(reason) = reason {
                    map.insert("reason".into(), json!(reason.as_str()));
                }
            }
            EntryBody::Console {
                severity,
                name,
                message,
            } => {
                map.insert("severity".into(), json!(severity.as_str()));
                map.insert("name".into(), json!(name));
                map.insert("message".into(), json!(message));
            }
            EntryBody::Frame { agents } => {
                let rows: Vec<Json> = agents
                    .iter()
                    .map(|a| {
                        json!({
                            "id": a.id,
                            "kind": a.kind,
                            "x": a.x,
                            "y": a.y,
                            "color": a.color,
                        })
                    })
                    .collect();
                map.insert("agents".into(), Json::Array(rows));
            }
            EntryBody::State {
                width,
                height,
                agents,
                links,
            } => {
                map.insert("width".into(), json!(width));
                map.insert("height".into(), json!(height));
                let rows: Vec<Json> = agents
                    .iter()
                    .map(|a| {
                        let attrs: Map<String, Json> = a
                            .attributes
                            .iter()
                            .map(|(k, v)| (k.clone(), attr_to_json(v)))
                            .collect();
                        json!({
                            "id": a.id.0,
                            "kind": a.kind,
                            "x": a.x,
                            "y": a.y,
                            "attributes": Json::Object(attrs),
                        })
                    })
                    .collect();
                map.insert("agents".into(), Json::Array(rows));
                let links: Vec<Json> = links.iter().map(|(a, b)| json!([a, b])).collect();
                map.insert("links".into(), Json::Array(links));
            }
            EntryBody::Event { name, agents } => {
                map.insert("name".into(), json!(name));
                map.insert("agents".into(), json!(agents));
            }
            EntryBody::RunStart {
                model,
                seed,
                max_ticks,
                params,
            } => {
                map.insert("name".into(), json!("run_start"));
                map.insert("model".into(), json!(model));
                map.insert("seed".into(), json!(seed));
                map.insert("max_ticks".into(), json!(max_ticks));
                let params: Map<String, Json> = params
                    .iter()
                    .map(|(k, v)| (k.clone(), param_to_json(v)))
                    .collect();
                map.insert("params".into(), Json::Object(params));
            }
            EntryBody::EvalFailure {
                item,
                name,
                message,
            } => {
                map.insert("item".into(), json!(item.as_str()));
                map.insert("name".into(), json!(name));
                map.insert("message".into(), json!(message));
            }
        }
        Json::Object(map)
    }

    pub fn from_line(line: &str) -> Result<LogEntry, String> {
        let json: Json =
            serde_json::from_str(line).map_err(|e| format!("not a JSON record: {e}"))?;
        Self::from_json(&json)
    }

    pub fn from_json(json: &Json) -> Result<LogEntry, String> {
        let obj = json.as_object().ok_or("record is not an object")?;
        let run_id = str_field(obj, "run_id")?.to_string();
        let tick = u64_field(obj, "tick")?;
        let kind = str_field(obj, "kind")?;
        let body = match kind {
            "watch" => EntryBody::Watch {
                name: str_field(obj, "name")?.to_string(),
                value: value_from_json(field(obj, "value")?)?,
            },
            "violation" => EntryBody::Violation {
                invariant: str_field(obj, "invariant")?.to_string(),
                predicate: str_field(obj, "predicate")?.to_string(),
                scope: Scope::parse(str_field(obj, "scope")?)
                    .ok_or_else(|| format!("bad scope in {json}"))?,
                reason: match obj.get("reason") {
                    None => None,
                    Some(r) => Some(
                        RunStatus::parse(r.as_str().ok_or("reason is not a string")?)
                            .ok_or("unknown reason")?,
                    ),
                },
            },
            "console" => EntryBody::Console {
                severity: Severity::parse(str_field(obj, "severity")?)
                    .ok_or("unknown severity")?,
                name: str_field(obj, "name")?.to_string(),
                message: str_field(obj, "message")?.to_string(),
            },
            "frame" => {
                let rows = arr_field(obj, "agents")?;
                let mut agents = Vec::with_capacity(rows.len());
                for row in rows {
                    let row = row.as_object().ok_or("frame agent is not an object")?;
                    agents.push(FrameAgent {
                        id: u64_field(row, "id")?,
                        kind: str_field(row, "kind")?.to_string(),
                        x: f64_field(row, "x")?,
                        y: f64_field(row, "y")?,
                        color: str_field(row, "color")?.to_string(),
                    });
                }
                EntryBody::Frame { agents }
            }
            "state" => {
                let rows = arr_field(obj, "agents")?;
                let mut agents = Vec::with_capacity(rows.len());
                for row in rows {
                    let row = row.as_object().ok_or("state agent is not an object")?;
                    let attrs = row
                        .get("attributes")
                        .and_then(|a| a.as_object())
                        .ok_or("state agent has no attribute table")?;
                    let mut attributes = BTreeMap::new();
                    for (k, v) in attrs {
                        attributes.insert(k.clone(), attr_from_json(v)?);
                    }
                    agents.push(SimAgent {
                        id: AgentId(u64_field(row, "id")?),
                        kind: str_field(row, "kind")?.to_string(),
                        x: f64_field(row, "x")?,
                        y: f64_field(row, "y")?,
                        attributes,
                    });
                }
                let mut links = Vec::new();
                for pair in arr_field(obj, "links")? {
                    let pair = pair.as_array().ok_or("link is not a pair")?;
                    if pair.len() != 2 {
                        return Err("link is not a pair".into());
                    }
                    links.push((
                        pair[0].as_u64().ok_or("link endpoint is not an id")?,
                        pair[1].as_u64().ok_or("link endpoint is not an id")?,
                    ));
                }
                EntryBody::State {
                    width: f64_field(obj, "width")?,
                    height: f64_field(obj, "height")?,
                    agents,
                    links,
                }
            }
            "event" => {
                let name = str_field(obj, "name")?.to_string();
                if name == "run_start" {
                    let mut params = Params::new();
                    for (k, v) in obj
                        .get("params")
                        .and_then(|p| p.as_object())
                        .ok_or("run_start has no params")?
                    {
                        params.set(k, param_from_json(v)?);
                    }
                    EntryBody::RunStart {
                        model: str_field(obj, "model")?.to_string(),
                        seed: u64_field(obj, "seed")?,
                        max_ticks: u64_field(obj, "max_ticks")?,
                        params,
                    }
                } else {
                    let agents = arr_field(obj, "agents")?
                        .iter()
                        .map(|v| v.as_u64().ok_or("event agent id is not an integer"))
                        .collect::<Result<Vec<u64>, _>>()?;
                    EntryBody::Event { name, agents }
                }
            }
            "eval_failure" => EntryBody::EvalFailure {
                item: match str_field(obj, "item")? {
                    "watch" => ItemKind::Watch,
                    "invariant" => ItemKind::Invariant,
                    other => return Err(format!("unknown eval_failure item `{other}`")),
                },
                name: str_field(obj, "name")?.to_string(),
                message: str_field(obj, "message")?.to_string(),
            },
            other => return Err(format!("unknown entry kind `{other}`")),
        };
        Ok(LogEntry { run_id, tick, body })
    }
}

/// Watch values: integral numbers are written as integers so traces stay
/// readable; reading maps any number back to `Value::Num`.
pub fn value_to_json(value: &Value) -> Json {
    match value {
        Value::Num(x) => num_to_json(*x),
        Value::Bool(b) => json!(b),
        Value::Sym(s) => json!(s),
    }
}

pub fn value_from_json(json: &Json) -> Result<Value, String> {
    match json {
        Json::Number(n) => Ok(Value::Num(
            n.as_f64().ok_or("number out of f64 range")?,
        )),
        Json::Bool(b) => Ok(Value::Bool(*b)),
        Json::String(s) => Ok(Value::Sym(s.clone())),
        other => Err(format!("`{other}` is not a scalar")),
    }
}

pub fn num_to_json(x: f64) -> Json {
    if x == x.trunc() && x.abs() < 9_007_199_254_740_992.0 {
        Json::Number(Number::from(x as i64))
    } else {
        Json::Number(Number::from_f64(x).expect("finite numbers only"))
    }
}

fn attr_to_json(attr: &AttrValue) -> Json {
    match attr {
        AttrValue::Int(n) => json!(n),
        AttrValue::Real(x) => json!(x),
        AttrValue::Bool(b) => json!(b),
        AttrValue::Sym(s) => json!(s),
    }
}

fn attr_from_json(json: &Json) -> Result<AttrValue, String> {
    match json {
        Json::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(AttrValue::Int(i))
            } else {
                Ok(AttrValue::Real(n.as_f64().ok_or("number out of range")?))
            }
        }
        Json::Bool(b) => Ok(AttrValue::Bool(*b)),
        Json::String(s) => Ok(AttrValue::Sym(s.clone())),
        other => Err(format!("`{other}` is not an attribute value")),
    }
}

fn param_to_json(param: &ParamValue) -> Json {
    match param {
        ParamValue::Int(n) => json!(n),
        ParamValue::Real(x) => json!(x),
    }
}

fn param_from_json(json: &Json) -> Result<ParamValue, String> {
    match json {
        Json::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(ParamValue::Int(i))
            } else {
                Ok(ParamValue::Real(n.as_f64().ok_or("number out of range")?))
            }
        }
        other => Err(format!("`{other}` is not a parameter value")),
    }
}

fn field<'a>(obj: &'a Map<String, Json>, name: &str) -> Result<&'a Json, String> {
    obj.get(name).ok_or_else(|| format!("missing field `{name}`"))
}

fn str_field<'a>(obj: &'a Map<String, Json>, name: &str) -> Result<&'a str, String> {
    field(obj, name)?
        .as_str()
        .ok_or_else(|| format!("field `{name}` is not a string"))
}

fn u64_field(obj: &Map<String, Json>, name: &str) -> Result<u64, String> {
    field(obj, name)?
        .as_u64()
        .ok_or_else(|| format!("field `{name}` is not an unsigned integer"))
}

fn f64_field(obj: &Map<String, Json>, name: &str) -> Result<f64, String> {
    field(obj, name)?
        .as_f64()
        .ok_or_else(|| format!("field `{name}` is not a number"))
}

fn arr_field<'a>(obj: &'a Map<String, Json>, name: &str) -> Result<&'a Vec<Json>, String> {
    field(obj, name)?
        .as_array()
        .ok_or_else(|| format!("field `{name}` is not an array"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn watch_entry_round_trips() {
        let entry = LogEntry {
            run_id: "abc123".into(),
            tick: 3,
            body: EntryBody::Watch {
                name: "total_pubs".into(),
                value: Value::Num(41.0),
            },
        };
        let line = entry.to_line();
        assert_eq!(
            line,
            r#"{"kind":"watch","name":"total_pubs","run_id":"abc123","tick":3,"value":41}"#
        );
        assert_eq!(LogEntry::from_line(&line).unwrap(), entry);
    }

    #[test]
    fn violation_entry_round_trips_with_reason() {
        let entry = LogEntry {
            run_id: "r".into(),
            tick: 5,
            body: EntryBody::Violation {
                invariant: "journal_ten".into(),
                predicate: "forall(agents[policy == journal], r -> r.pubs >= 10)".into(),
                scope: Scope::AtTermination,
                reason: Some(RunStatus::Completed),
            },
        };
        assert_eq!(LogEntry::from_line(&entry.to_line()).unwrap(), entry);
    }

    #[test]
    fn state_entry_preserves_attribute_types() {
        let entry = LogEntry {
            run_id: "r".into(),
            tick: 0,
            body: EntryBody::State {
                width: 50.0,
                height: 50.0,
                agents: vec![SimAgent {
                    id: AgentId(2),
                    kind: "wolf".into(),
                    x: 1.5,
                    y: 0.0,
                    attributes: BTreeMap::from([
                        ("energy".to_string(), AttrValue::Real(20.0)),
                        ("bites".to_string(), AttrValue::Int(20)),
                        ("alpha".to_string(), AttrValue::Bool(true)),
                        ("pack".to_string(), AttrValue::Sym("north".into())),
                    ]),
                }],
                links: vec![(0, 2)],
            },
        };
        let back = LogEntry::from_line(&entry.to_line()).unwrap();
        assert_eq!(back, entry);
        // Real(20.0) must not collapse into Int(20)
        let EntryBody::State { agents, .. } = &back.body else {
            unreachable!()
        };
        assert_eq!(agents[0].attr("energy"), Some(&AttrValue::Real(20.0)));
        assert_eq!(agents[0].attr("bites"), Some(&AttrValue::Int(20)));
    }

    #[test]
    fn keys_are_sorted_for_byte_stability() {
        let entry = LogEntry {
            run_id: "z".into(),
            tick: 1,
            body: EntryBody::Console {
                severity: Severity::Violation,
                name: "w".into(),
                message: "m".into(),
            },
        };
        let line = entry.to_line();
        let keys: Vec<&str> = line
            .trim_matches(|c| c == '{' || c == '}')
            .split(',')
            .map(|kv| kv.split(':').next().unwrap().trim_matches('"'))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn run_start_round_trips() {
        let mut params = Params::new();
        params.set("n_sheep", ParamValue::Int(100));
        params.set("p_journal", ParamValue::Real(0.1));
        let entry = LogEntry {
            run_id: "r".into(),
            tick: 0,
            body: EntryBody::RunStart {
                model: "wolfsheep".into(),
                seed: 42,
                max_ticks: 100,
                params,
            },
        };
        assert_eq!(LogEntry::from_line(&entry.to_line()).unwrap(), entry);
    }

    #[test]
    fn garbage_lines_are_rejected_not_panicked() {
        assert!(LogEntry::from_line("not json").is_err());
        assert!(LogEntry::from_line(r#"{"kind":"mystery","run_id":"r","tick":0}"#).is_err());
        assert!(LogEntry::from_line(r#"{"kind":"watch","run_id":"r"}"#).is_err());
    }
}
