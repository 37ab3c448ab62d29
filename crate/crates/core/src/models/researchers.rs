//! The publishing-researchers model: agents choose publication venues by
//! policy, and height above the floor encodes publication count.
//!
//! Randomness consumption, in ascending id order:
//! - init: one draw per researcher (the x coordinate);
//! - step: policy `none` draws a venue coin, then every researcher draws
//!   one acceptance Bernoulli. So `conference`/`journal` researchers
//!   consume 1 draw per tick, `none` researchers 2.

use crate::engine::{AttrValue, EngineError, ParamValue, SimAgent, World};
use crate::vomas::Ty;

use super::{attrs_map, base_params, Domain, ModelDef, ParamSpec};

/// Keeps y strictly below the world edge when publications overflow it.
const TOP_MARGIN: f64 = 1e-6;

pub const POLICIES: [&str; 3] = ["conference", "journal", "none"];

pub fn model_def() -> ModelDef {
    let mut params = base_params();
    params.extend([
        ParamSpec {
            name: "n_researchers",
            default: ParamValue::Int(30),
            domain: Domain::IntAtLeast(1),
        },
        ParamSpec {
            name: "p_conf",
            default: ParamValue::Real(0.25),
            domain: Domain::Probability,
        },
        ParamSpec {
            name: "p_journal",
            default: ParamValue::Real(0.10),
            domain: Domain::Probability,
        },
        ParamSpec {
            name: "y_scale",
            default: ParamValue::Real(1.0),
            domain: Domain::PositiveReal,
        },
    ]);
    ModelDef {
        name: "researchers",
        params,
        init,
        step,
        color_of,
        attrs: vec![
            ("policy", Ty::Sym),
            ("pubs", Ty::Num),
            ("color", Ty::Sym),
        ],
        kinds: vec!["researcher"],
    }
}

fn policy_color(policy: &str) -> &'static str {
    match policy {
        "conference" => "lime",
        "journal" => "red",
        _ => "cyan",
    }
}

fn color_of(agent: &SimAgent) -> &'static str {
    match agent.attr("policy") {
        Some(AttrValue::Sym(policy)) => policy_color(policy),
        _ => "cyan",
    }
}

fn y_for_pubs(pubs: i64, y_scale: f64, height: f64) -> f64 {
    (pubs as f64 * y_scale).min(height - TOP_MARGIN)
}

fn init(world: &mut World) -> Result<(), EngineError> {
    let n = world.params.get_number("n_researchers").unwrap() as i64;
    let y_scale = world.params.get_number("y_scale").unwrap();
    let height = world.height;
    let width = world.width;
    for i in 0..n {
        let policy = POLICIES[(i % 3) as usize];
        let x = world.rng.uniform(0.0, width);
        let y = y_for_pubs(0, y_scale, height);
        world.add_agent(
            "researcher",
            x,
            y,
            attrs_map(&[
                ("policy", AttrValue::Sym(policy.to_string())),
                ("pubs", AttrValue::Int(0)),
                ("color", AttrValue::Sym(policy_color(policy).to_string())),
            ]),
        );
    }
    Ok(())
}

fn step(world: &mut World) -> Result<(), EngineError> {
    let p_conf = world.params.get_number("p_conf").unwrap();
    let p_journal = world.params.get_number("p_journal").unwrap();
    let y_scale = world.params.get_number("y_scale").unwrap();
    let height = world.height;

    for id in world.agent_ids() {
        let policy = match world.agent(id).and_then(|a| a.attr("policy")) {
            Some(AttrValue::Sym(p)) => p.clone(),
            _ => continue,
        };
        let p_accept = match policy.as_str() {
            "conference" => p_conf,
            "journal" => p_journal,
            // undecided researchers flip a fair coin for the venue
            _ => {
                if world.rng.bernoulli(0.5) {
                    p_conf
                } else {
                    p_journal
                }
            }
        };
        let accepted = world.rng.bernoulli(p_accept);
        if accepted {
            let agent = world.agent_mut(id).expect("id from live snapshot");
            let pubs = match agent.attributes.get_mut("pubs") {
                Some(AttrValue::Int(n)) => {
                    *n += 1;
                    *n
                }
                _ => continue,
            };
            let y = y_for_pubs(pubs, y_scale, height);
            let x = agent.x;
            world.set_position(id, x, y);
        }
    }
    Ok(())
}
