//! The final outcome of a live run or an offline replay, serialized in the
//! same canonical record format as trace entries.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value as Json};

use crate::vomas::ast::Scope;
use crate::vomas::eval::Value;

use super::entry::{num_to_json, value_from_json, value_to_json, RunStatus};

/// One recorded invariant violation.
#[derive(Debug, Clone, PartialEq)]
pub struct ViolationRecord {
    pub invariant: String,
    pub tick: u64,
    pub scope: Scope,
}

/// Running statistics over one watch's logged values. Boolean values count
/// into min/max as 0/1.
#[derive(Debug, Clone, PartialEq)]
pub struct WatchStats {
    pub count: u64,
    pub min: f64,
    pub max: f64,
    pub last: Value,
}

impl WatchStats {
    pub fn observe(stats: &mut Option<WatchStats>, value: &Value) {
        let as_num = match value {
            Value::Num(x) => *x,
            Value::Bool(b) => {
                if *b {
                    1.0
                } else {
                    0.0
                }
            }
            Value::Sym(_) => return,
        };
        match stats {
            None => {
                *stats = Some(WatchStats {
                    count: 1,
                    min: as_num,
                    max: as_num,
                    last: value.clone(),
                })
            }
            Some(s) => {
                s.count += 1;
                s.min = s.min.min(as_num);
                s.max = s.max.max(as_num);
                s.last = value.clone();
            }
        }
    }
}

/// Outcome of a run: halt status, final tick, violations, watch summary.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub run_id: String,
    pub model: String,
    pub status: RunStatus,
    pub final_tick: u64,
    pub violations: Vec<ViolationRecord>,
    pub watch_stats: BTreeMap<String, WatchStats>,
    pub eval_failures: u64,
    pub console_failures: u64,
}

impl ValidationReport {
    pub fn has_violations(&self) -> bool {
        !self.violations.is_empty()
    }

    /// Canonical single-line form, keys sorted.
    pub fn to_line(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("report serialization cannot fail")
    }

    pub fn to_json(&self) -> Json {
        let mut map = Map::new();
        map.insert("kind".into(), json!("report"));
        map.insert("run_id".into(), json!(self.run_id));
        map.insert("model".into(), json!(self.model));
        map.insert("status".into(), json!(self.status.as_str()));
        map.insert("final_tick".into(), json!(self.final_tick));
        let violations: Vec<Json> = self
            .violations
            .iter()
            .map(|v| {
                json!({
                    "invariant": v.invariant,
                    "tick": v.tick,
                    "scope": v.scope.as_str(),
                })
            })
            .collect();
        map.insert("violations".into(), Json::Array(violations));
        let stats: Map<String, Json> = self
            .watch_stats
            .iter()
            .map(|(name, s)| {
                (
                    name.clone(),
                    json!({
                        "count": s.count,
                        "min": num_to_json(s.min),
                        "max": num_to_json(s.max),
                        "last": value_to_json(&s.last),
                    }),
                )
            })
            .collect();
        map.insert("watch_stats".into(), Json::Object(stats));
        map.insert("eval_failures".into(), json!(self.eval_failures));
        map.insert("console_failures".into(), json!(self.console_failures));
        Json::Object(map)
    }

    pub fn from_line(line: &str) -> Result<ValidationReport, String> {
        let json: Json =
            serde_json::from_str(line).map_err(|e| format!("not a JSON record: {e}"))?;
        let obj = json.as_object().ok_or("report is not an object")?;
        if obj.get("kind").and_then(|k| k.as_str()) != Some("report") {
            return Err("record is not a report".into());
        }
        let mut violations = Vec::new();
        for v in obj
            .get("violations")
            .and_then(|v| v.as_array())
            .ok_or("missing violations")?
        {
            let v = v.as_object().ok_or("violation is not an object")?;
            violations.push(ViolationRecord {
                invariant: v
                    .get("invariant")
                    .and_then(|s| s.as_str())
                    .ok_or("missing invariant name")?
                    .to_string(),
                tick: v.get("tick").and_then(|t| t.as_u64()).ok_or("missing tick")?,
                scope: Scope::parse(v.get("scope").and_then(|s| s.as_str()).ok_or("missing scope")?)
                    .ok_or("unknown scope")?,
            });
        }
        let mut watch_stats = BTreeMap::new();
        for (name, s) in obj
            .get("watch_stats")
            .and_then(|s| s.as_object())
            .ok_or("missing watch_stats")?
        {
            let s = s.as_object().ok_or("watch stats is not an object")?;
            watch_stats.insert(
                name.clone(),
                WatchStats {
                    count: s.get("count").and_then(|c| c.as_u64()).ok_or("missing count")?,
                    min: s.get("min").and_then(|m| m.as_f64()).ok_or("missing min")?,
                    max: s.get("max").and_then(|m| m.as_f64()).ok_or("missing max")?,
                    last: value_from_json(s.get("last").ok_or("missing last")?)?,
                },
            );
        }
        Ok(ValidationReport {
            run_id: obj
                .get("run_id")
                .and_then(|s| s.as_str())
                .ok_or("missing run_id")?
                .to_string(),
            model: obj
                .get("model")
                .and_then(|s| s.as_str())
                .ok_or("missing model")?
                .to_string(),
            status: RunStatus::parse(
                obj.get("status").and_then(|s| s.as_str()).ok_or("missing status")?,
            )
            .ok_or("unknown status")?,
            final_tick: obj
                .get("final_tick")
                .and_then(|t| t.as_u64())
                .ok_or("missing final_tick")?,
            violations,
            watch_stats,
            eval_failures: obj
                .get("eval_failures")
                .and_then(|n| n.as_u64())
                .ok_or("missing eval_failures")?,
            console_failures: obj
                .get("console_failures")
                .and_then(|n| n.as_u64())
                .unwrap_or(0),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_round_trips() {
        let report = ValidationReport {
            run_id: "deadbeef".into(),
            model: "wolfsheep".into(),
            status: RunStatus::Halted,
            final_tick: 212,
            violations: vec![ViolationRecord {
                invariant: "wolves_alive".into(),
                tick: 212,
                scope: Scope::EveryTick,
            }],
            watch_stats: BTreeMap::from([(
                "total".to_string(),
                WatchStats {
                    count: 213,
                    min: 0.0,
                    max: 115.0,
                    last: Value::Num(0.0),
                },
            )]),
            eval_failures: 0,
            console_failures: 0,
        };
        let line = report.to_line();
        assert_eq!(ValidationReport::from_line(&line).unwrap(), report);
    }

    #[test]
    fn watch_stats_track_bools_as_zero_one() {
        let mut stats = None;
        WatchStats::observe(&mut stats, &Value::Bool(true));
        WatchStats::observe(&mut stats, &Value::Bool(false));
        let s = stats.unwrap();
        assert_eq!(s.count, 2);
        assert_eq!(s.min, 0.0);
        assert_eq!(s.max, 1.0);
        assert_eq!(s.last, Value::Bool(false));
    }
}
