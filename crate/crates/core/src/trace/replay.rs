//! Offline re-checking of a recorded trace: reconstruct each tick's world
//! from full-state entries, re-run the overlay evaluation logic, and report
//! exactly what a live run with the same spec would have reported.

use thiserror::Error;

use crate::engine::World;
use crate::vomas::{builtin_attr_type, VomasManager, VomasSpec};

use super::entry::{EntryBody, LogEntry, RunStatus};
use super::report::ValidationReport;

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error(
        "trace has no full-state entries; record it with --full-state to make it replayable"
    )]
    MissingStateEntries,
    #[error("corrupt trace at line {line}: {reason}")]
    CorruptTrace { line: usize, reason: String },
    #[error("spec references attributes absent from recorded states: {}", .0.join(", "))]
    SchemaMismatch(Vec<String>),
}

/// Re-run watches and invariants over a recorded trace.
///
/// On a trace recorded live with the same spec, the returned report matches
/// the live one field for field. With a different spec, every recorded tick
/// is still checked; the replay does not stop at the first halt-policy
/// violation, since the point of offline checking is the complete picture.
pub fn replay_check(entries: &[LogEntry], spec: &VomasSpec) -> Result<ValidationReport, ReplayError> {
    let mut states: Vec<(u64, &LogEntry)> = Vec::new();
    let mut model = String::new();
    for entry in entries {
        match &entry.body {
            EntryBody::State { .. } => states.push((entry.tick, entry)),
            EntryBody::RunStart { model: m, .. } => model = m.clone(),
            _ => {}
        }
    }
    if states.is_empty() {
        return Err(ReplayError::MissingStateEntries);
    }
    check_schema(spec, states[0].1)?;

    let run_id = entries[0].run_id.clone();
    let mut manager = VomasManager::new(spec.clone(), &run_id, Vec::new());
    let mut halted_live = false;
    let mut final_tick = 0;
    let mut last_world = None;

    for (tick, entry) in states {
        let world = world_from_state(entry);
        let outcome = manager.evaluate_tick(&world, tick);
        halted_live = halted_live || outcome.halt;
        final_tick = tick;
        last_world = Some(world);
    }

    let reason = if halted_live {
        RunStatus::Halted
    } else {
        RunStatus::Completed
    };
    let world = last_world.expect("at least one state");
    manager.evaluate_termination(&world, final_tick, reason);

    Ok(ValidationReport {
        run_id,
        model,
        status: manager.run_status(),
        final_tick,
        violations: manager.violations().to_vec(),
        watch_stats: manager.watch_stats().clone(),
        eval_failures: manager.eval_failures(),
        console_failures: 0,
    })
}

fn world_from_state(entry: &LogEntry) -> World {
    let EntryBody::State {
        width,
        height,
        agents,
        links,
    } = &entry.body
    else {
        unreachable!("caller filtered state entries")
    };
    World::from_snapshot(*width, *height, entry.tick, agents.clone(), links.clone())
}

// The first recorded state carries every attribute the run exposes (kinds
// declare their attribute keys at creation and keep them), so a spec
// referencing anything else can be rejected up front. An empty initial
// population gives nothing to check against; evaluation itself then
// surfaces any problems the way a live run would.
fn check_schema(spec: &VomasSpec, first_state: &LogEntry) -> Result<(), ReplayError> {
    let EntryBody::State { agents, .. } = &first_state.body else {
        unreachable!()
    };
    if agents.is_empty() {
        return Ok(());
    }
    let mut missing: Vec<String> = spec
        .referenced_attrs()
        .into_iter()
        .filter(|attr| builtin_attr_type(attr).is_none())
        .filter(|attr| !agents.iter().any(|a| a.attributes.contains_key(attr)))
        .collect();
    missing.dedup();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(ReplayError::SchemaMismatch(missing))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_simulation_with_console, Params, RunConfig, TraceOptions};
    use crate::trace::{parse_trace, TraceWriter};
    use crate::vomas::compile_spec;

    fn record(spec_text: &str, full_state: bool) -> (ValidationReport, Vec<LogEntry>, VomasSpec) {
        let spec = compile_spec(spec_text).unwrap();
        let config = RunConfig {
            model: "wolfsheep".to_string(),
            params: Params::new(),
            seed: 5,
            max_ticks: 12,
            spec: spec.clone(),
            trace: TraceOptions {
                full_state,
                frame_period: None,
            },
        };
        let mut writer = TraceWriter::new(Vec::new());
        let (report, _) = run_simulation_with_console(&config, &mut writer, Vec::new()).unwrap();
        let text = String::from_utf8(writer.into_inner()).unwrap();
        (report, parse_trace(&text).unwrap(), spec)
    }

    #[test]
    fn live_and_replay_agree() {
        let (live, entries, spec) = record(
            "watch sheep = count(agents[kind == sheep])\n\
             watch wolf_energy = avg(agents[kind == wolf], energy) every 3\n\
             invariant some_sheep: count(agents[kind == sheep]) > 50",
            true,
        );
        let replayed = replay_check(&entries, &spec).unwrap();
        assert_eq!(replayed, live);
    }

    #[test]
    fn empty_spec_replays_clean() {
        let (_, entries, _) = record("watch n = count(agents)", true);
        let empty = compile_spec("").unwrap();
        let report = replay_check(&entries, &empty).unwrap();
        assert!(report.violations.is_empty());
        assert!(report.watch_stats.is_empty());
    }

    #[test]
    fn missing_state_entries_is_an_error() {
        let (_, entries, spec) = record("watch n = count(agents)", false);
        assert!(matches!(
            replay_check(&entries, &spec),
            Err(ReplayError::MissingStateEntries)
        ));
    }

    #[test]
    fn schema_mismatch_names_the_attribute() {
        let (_, entries, _) = record("", true);
        let stranger = compile_spec("watch w = sum(agents, pubs)").unwrap();
        match replay_check(&entries, &stranger) {
            Err(ReplayError::SchemaMismatch(attrs)) => assert_eq!(attrs, vec!["pubs"]),
            other => panic!("expected schema mismatch, got {other:?}"),
        }
    }

    #[test]
    fn stricter_spec_yields_superset_of_violations() {
        let lax = "invariant some_sheep: count(agents[kind == sheep]) > 50";
        let (live, entries, _) = record(lax, true);
        let strict = compile_spec(
            "invariant some_sheep: count(agents[kind == sheep]) > 50\n\
             invariant many_sheep: count(agents[kind == sheep]) > 1000",
        )
        .unwrap();
        let replayed = replay_check(&entries, &strict).unwrap();
        // every live violation of the shared invariant is still present
        for v in &live.violations {
            assert!(replayed.violations.contains(v));
        }
        // and the new invariant fires at every recorded tick
        let new_violations = replayed
            .violations
            .iter()
            .filter(|v| v.invariant == "many_sheep")
            .count();
        assert_eq!(new_violations, 13); // ticks 0..=12
    }
}
