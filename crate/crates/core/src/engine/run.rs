//! The run loop: interleaves model steps with overlay evaluation, streams
//! trace entries, and assembles the final report.
//!
//! Entry order within a tick: frame, state, events, watch entries in spec
//! order, violation entries in spec order, console mirrors. At the final
//! tick the at-termination batch (violations, then console mirrors) follows
//! the regular batch. The trace is flushed at the end of every tick.

use std::io::Write;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::trace::{
    frame_entry, state_entry, EntryBody, LogEntry, RunStatus, TraceError, TraceWriter,
    ValidationReport,
};
use crate::vomas::{VomasManager, VomasSpec};

use super::{init_world, step_model, EngineError, Params, StepEvents, World};

/// What extra data the trace carries.
#[derive(Debug, Clone, Default)]
pub struct TraceOptions {
    /// Record a full state entry every tick (required for offline replay).
    pub full_state: bool,
    /// Export a frame every N ticks (and at tick 0).
    pub frame_period: Option<u64>,
}

/// Everything one run needs. The seed fully determines all randomness.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: String,
    pub params: Params,
    pub seed: u64,
    pub max_ticks: u64,
    pub spec: VomasSpec,
    pub trace: TraceOptions,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("spec does not fit model: {}", .0.join("; "))]
    Spec(Vec<String>),
    #[error("invalid run configuration: {0}")]
    Config(String),
}

/// Identifies a run configuration: hex digest over (model, resolved params,
/// seed, spec source). Identical configurations collide on purpose, so a
/// rerun overwrites its predecessor's files.
pub fn compute_run_id(model: &str, params: &Params, seed: u64, spec_source: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(model.as_bytes());
    hasher.update([0]);
    for (name, value) in params.iter() {
        hasher.update(name.as_bytes());
        hasher.update([b'=']);
        hasher.update(value.to_string().as_bytes());
        hasher.update([b'\n']);
    }
    hasher.update([0]);
    hasher.update(seed.to_le_bytes());
    hasher.update([0]);
    hasher.update(spec_source.as_bytes());
    hex::encode(&hasher.finalize()[..8])
}

/// Run with the console on standard error.
pub fn run_simulation<W: Write>(
    config: &RunConfig,
    writer: &mut TraceWriter<W>,
) -> Result<ValidationReport, RunError> {
    run_simulation_with_console(config, writer, std::io::stderr()).map(|(report, _)| report)
}

/// Run with an explicit console sink; returns it for inspection.
pub fn run_simulation_with_console<W: Write, C: Write>(
    config: &RunConfig,
    writer: &mut TraceWriter<W>,
    console_sink: C,
) -> Result<(ValidationReport, C), RunError> {
    if config.max_ticks == 0 {
        return Err(RunError::Config("max_ticks must be >= 1".to_string()));
    }
    let model = crate::models::registry()
        .find(&config.model)
        .ok_or_else(|| EngineError::UnknownModel(config.model.clone()))?;
    let params = model.resolve_params(&config.params)?;
    let schema = model.schema(
        params.get_number("width").unwrap_or(50.0),
        params.get_number("height").unwrap_or(50.0),
    );
    let errors = crate::vomas::validate_spec(&config.spec, &schema);
    if !errors.is_empty() {
        return Err(RunError::Spec(errors));
    }

    let run_id = compute_run_id(&config.model, &params, config.seed, &config.spec.source);
    let mut world = init_world(&config.model, &config.params, config.seed)?;
    let mut manager = VomasManager::new(config.spec.clone(), &run_id, console_sink);

    let outcome = drive(config, &params, &run_id, &mut world, &mut manager, writer);

    let (status, final_tick) = match outcome {
        Ok((status, tick)) => (status, tick),
        Err(AbortReason::Model(tick, err)) => {
            // the world may be mid-step; skip termination evaluation
            eprintln!("run {run_id} aborted at tick {tick}: {err}");
            (RunStatus::Aborted, tick)
        }
        Err(AbortReason::Trace(tick, err)) => {
            eprintln!("run {run_id} aborted at tick {tick}: {err}");
            (RunStatus::Aborted, tick)
        }
    };

    let report = ValidationReport {
        run_id,
        model: config.model.clone(),
        status,
        final_tick,
        violations: manager.violations().to_vec(),
        watch_stats: manager.watch_stats().clone(),
        eval_failures: manager.eval_failures(),
        console_failures: manager.console_failures(),
    };
    Ok((report, manager.into_console_sink()))
}

enum AbortReason {
    Model(u64, EngineError),
    Trace(u64, TraceError),
}

fn drive<W: Write, C: Write>(
    config: &RunConfig,
    params: &Params,
    run_id: &str,
    world: &mut World,
    manager: &mut VomasManager<C>,
    writer: &mut TraceWriter<W>,
) -> Result<(RunStatus, u64), AbortReason> {
    let trace = |e: TraceError, tick: u64| AbortReason::Trace(tick, e);

    writer
        .append(&LogEntry {
            run_id: run_id.to_string(),
            tick: 0,
            body: EntryBody::RunStart {
                model: config.model.clone(),
                seed: config.seed,
                max_ticks: config.max_ticks,
                params: params.clone(),
            },
        })
        .map_err(|e| trace(e, 0))?;

    let emit_tick_data = |world: &World, tick: u64, events: Option<&StepEvents>, writer: &mut TraceWriter<W>| -> Result<(), TraceError> {
        if let Some(period) = config.trace.frame_period {
            if period > 0 && tick % period == 0 {
                writer.append(&frame_entry(run_id, world, tick))?;
            }
        }
        if config.trace.full_state {
            writer.append(&state_entry(run_id, world, tick))?;
        }
        if let Some(events) = events {
            if !events.created.is_empty() {
                writer.append(&LogEntry {
                    run_id: run_id.to_string(),
                    tick,
                    body: EntryBody::Event {
                        name: "agents_created".to_string(),
                        agents: events.created.iter().map(|id| id.0).collect(),
                    },
                })?;
            }
            if !events.removed.is_empty() {
                writer.append(&LogEntry {
                    run_id: run_id.to_string(),
                    tick,
                    body: EntryBody::Event {
                        name: "agents_removed".to_string(),
                        agents: events.removed.iter().map(|id| id.0).collect(),
                    },
                })?;
            }
        }
        Ok(())
    };

    // tick 0: evaluate the initial state before any model step
    emit_tick_data(world, 0, None, writer).map_err(|e| trace(e, 0))?;
    let outcome = manager.evaluate_tick(world, 0);
    for entry in &outcome.entries {
        writer.append(entry).map_err(|e| trace(e, 0))?;
    }
    writer.flush().map_err(|e| trace(e, 0))?;

    let mut final_tick = 0;
    let mut halted = outcome.halt;

    if !halted {
        for tick in 1..=config.max_ticks {
            let events = step_model(world).map_err(|e| AbortReason::Model(tick, e))?;
            final_tick = tick;
            emit_tick_data(world, tick, Some(&events), writer).map_err(|e| trace(e, tick))?;
            let outcome = manager.evaluate_tick(world, tick);
            for entry in &outcome.entries {
                writer.append(entry).map_err(|e| trace(e, tick))?;
            }
            writer.flush().map_err(|e| trace(e, tick))?;
            if outcome.halt {
                halted = true;
                break;
            }
        }
    }

    let reason = if halted {
        RunStatus::Halted
    } else {
        RunStatus::Completed
    };
    let entries = manager.evaluate_termination(world, final_tick, reason);
    for entry in &entries {
        writer.append(entry).map_err(|e| trace(e, final_tick))?;
    }
    writer.flush().map_err(|e| trace(e, final_tick))?;

    // status reflects halt-policy violations of any scope
    Ok((manager.run_status(), final_tick))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::ParamValue;
    use crate::trace::parse_trace;
    use crate::vomas::compile_spec;

    fn config(model: &str, spec: &str, ticks: u64, seed: u64) -> RunConfig {
        RunConfig {
            model: model.to_string(),
            params: Params::new(),
            seed,
            max_ticks: ticks,
            spec: compile_spec(spec).unwrap(),
            trace: TraceOptions::default(),
        }
    }

    fn run(config: &RunConfig) -> (ValidationReport, String) {
        let mut writer = TraceWriter::new(Vec::new());
        let (report, _) =
            run_simulation_with_console(config, &mut writer, Vec::new()).unwrap();
        writer.close().unwrap();
        (
            report,
            String::from_utf8(writer.into_inner()).unwrap(),
        )
    }

    #[test]
    fn empty_spec_completes_clean() {
        let cfg = config("researchers", "", 5, 3);
        let (report, text) = run(&cfg);
        assert_eq!(report.status, RunStatus::Completed);
        assert_eq!(report.final_tick, 5);
        assert!(report.violations.is_empty());
        assert!(report.watch_stats.is_empty());
        let entries = parse_trace(&text).unwrap();
        // only the run_start header
        assert_eq!(entries.len(), 1);
    }

    #[test]
    fn watch_entry_count_follows_period() {
        let mut cfg = config("researchers", "watch n = count(agents) every 3", 10, 1);
        cfg.trace.full_state = false;
        let (report, text) = run(&cfg);
        let entries = parse_trace(&text).unwrap();
        let watches = entries.iter().filter(|e| e.kind() == "watch").count();
        // ticks 0,3,6,9
        assert_eq!(watches, 4);
        assert_eq!(report.watch_stats["n"].count, 4);
    }

    #[test]
    fn halt_invariant_stops_the_run() {
        let mut cfg = config(
            "wolfsheep",
            "invariant wolves_alive: count(agents[kind == wolf]) > 0 on_violation halt",
            50,
            7,
        );
        cfg.params.set("n_sheep", ParamValue::Int(0));
        cfg.params.set("n_wolves", ParamValue::Int(1));
        cfg.params.set("wolf_init_energy", ParamValue::Real(3.0));
        cfg.params.set("energy_cost", ParamValue::Real(1.0));
        cfg.params.set("wolf_repro", ParamValue::Real(0.0));
        let (report, text) = run(&cfg);
        assert_eq!(report.status, RunStatus::Halted);
        assert_eq!(report.final_tick, 3);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].tick, 3);
        let entries = parse_trace(&text).unwrap();
        let max_tick = entries.iter().map(|e| e.tick).max().unwrap();
        assert_eq!(max_tick, 3);
    }

    #[test]
    fn ticks_are_monotone_and_batches_ordered() {
        let mut cfg = config(
            "wolfsheep",
            "watch sheep = count(agents[kind == sheep])\n\
             invariant impossible: count(agents) < 0",
            8,
            11,
        );
        cfg.trace.full_state = true;
        cfg.trace.frame_period = Some(2);
        let (_, text) = run(&cfg);
        let entries = parse_trace(&text).unwrap();
        let mut last_tick = 0;
        for entry in &entries {
            assert!(entry.tick >= last_tick, "tick went backwards");
            last_tick = entry.tick;
        }
        // within each tick, kind order is frame < state < event < watch
        // < violation < console
        fn rank(kind: &str) -> u8 {
            match kind {
                "frame" => 0,
                "state" => 1,
                "event" => 2,
                "watch" => 3,
                "violation" | "eval_failure" => 4,
                _ => 5,
            }
        }
        for window in entries.windows(2) {
            if window[0].tick == window[1].tick {
                // run_start is an event at tick 0 before everything else
                if matches!(window[0].body, EntryBody::RunStart { .. }) {
                    continue;
                }
                assert!(
                    rank(window[0].kind()) <= rank(window[1].kind()),
                    "order violated at tick {}: {} then {}",
                    window[0].tick,
                    window[0].kind(),
                    window[1].kind()
                );
            }
        }
    }

    #[test]
    fn zero_max_ticks_is_a_config_error() {
        let cfg = config("researchers", "", 0, 0);
        let mut writer = TraceWriter::new(Vec::new());
        assert!(matches!(
            run_simulation_with_console(&cfg, &mut writer, Vec::new()),
            Err(RunError::Config(_))
        ));
    }

    #[test]
    fn spec_model_mismatch_is_rejected_before_running() {
        let cfg = config("wolfsheep", "watch w = sum(agents, pubs)", 5, 0);
        let mut writer = TraceWriter::new(Vec::new());
        match run_simulation_with_console(&cfg, &mut writer, Vec::new()) {
            Err(RunError::Spec(errors)) => assert!(errors[0].contains("pubs")),
            other => panic!("expected spec error, got {other:?}"),
        }
    }

    #[test]
    fn identical_configs_identical_run_ids_and_traces() {
        let cfg = config("wolfsheep", "watch n = count(agents)", 10, 99);
        let (report_a, trace_a) = run(&cfg);
        let (report_b, trace_b) = run(&cfg);
        assert_eq!(report_a.run_id, report_b.run_id);
        assert_eq!(trace_a, trace_b);
        assert_eq!(report_a.to_line(), report_b.to_line());
    }

    #[test]
    fn run_id_depends_on_every_ingredient() {
        let params = Params::new();
        let base = compute_run_id("m", &params, 1, "spec");
        assert_ne!(base, compute_run_id("n", &params, 1, "spec"));
        assert_ne!(base, compute_run_id("m", &params, 2, "spec"));
        assert_ne!(base, compute_run_id("m", &params, 1, "other"));
        let mut params2 = Params::new();
        params2.set("a", ParamValue::Int(1));
        assert_ne!(base, compute_run_id("m", &params2, 1, "spec"));
    }

    #[test]
    fn tick0_halt_never_steps() {
        let mut cfg = config(
            "wolfsheep",
            "invariant wolves_alive: count(agents[kind == wolf]) > 0 on_violation halt",
            50,
            1,
        );
        cfg.params.set("n_wolves", ParamValue::Int(0));
        cfg.params.set("n_sheep", ParamValue::Int(5));
        let (report, _) = run(&cfg);
        assert_eq!(report.status, RunStatus::Halted);
        assert_eq!(report.final_tick, 0);
        assert_eq!(report.violations[0].tick, 0);
    }
}
