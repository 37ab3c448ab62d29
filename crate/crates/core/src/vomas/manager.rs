//! The VO Manager: drives watch and invariant evaluation each tick, routes
//! violations to the console, tracks running statistics, and enforces
//! violation policies.

use std::collections::BTreeMap;
use std::io::Write;

use crate::engine::World;
use crate::trace::{EntryBody, ItemKind, LogEntry, RunStatus, Severity, ViolationRecord, WatchStats};

use super::ast::{Scope, ViolationPolicy, VomasSpec};
use super::console::ConsoleAgent;
use super::eval::{EvalContext, Value};
use super::pretty::pretty_expr;

/// Result of one tick's overlay evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct TickOutcome {
    pub entries: Vec<LogEntry>,
    pub halt: bool,
}

/// Owns the compiled spec and the console for one run. Never shared; the
/// world it evaluates is read-only.
pub struct VomasManager<C: Write> {
    spec: VomasSpec,
    run_id: String,
    console: ConsoleAgent<C>,
    // pretty-printed predicate per invariant, in spec order
    predicate_texts: Vec<String>,
    watch_stats: BTreeMap<String, WatchStats>,
    violations: Vec<ViolationRecord>,
    eval_failures: u64,
    any_halt_violation: bool,
    halted: bool,
}

impl<C: Write> VomasManager<C> {
    pub fn new(spec: VomasSpec, run_id: &str, console_sink: C) -> Self {
        let predicate_texts = spec
            .invariants
            .iter()
            .map(|inv| pretty_expr(&inv.predicate))
            .collect();
        VomasManager {
            spec,
            run_id: run_id.to_string(),
            console: ConsoleAgent::new(console_sink),
            predicate_texts,
            watch_stats: BTreeMap::new(),
            violations: Vec::new(),
            eval_failures: 0,
            any_halt_violation: false,
            halted: false,
        }
    }

    pub fn spec(&self) -> &VomasSpec {
        &self.spec
    }

    pub fn halted(&self) -> bool {
        self.halted
    }

    pub fn violations(&self) -> &[ViolationRecord] {
        &self.violations
    }

    pub fn watch_stats(&self) -> &BTreeMap<String, WatchStats> {
        &self.watch_stats
    }

    pub fn eval_failures(&self) -> u64 {
        self.eval_failures
    }

    pub fn console_failures(&self) -> u64 {
        self.console.failures()
    }

    /// Halted if any halt-policy violation was recorded, in any scope.
    pub fn run_status(&self) -> RunStatus {
        if self.any_halt_violation {
            RunStatus::Halted
        } else {
            RunStatus::Completed
        }
    }

    pub fn into_console_sink(self) -> C {
        self.console.into_inner()
    }

    /// Evaluate all due watches and every-tick invariants against the world
    /// at `tick`. Entry order: watches in spec order, then violations in
    /// spec order, then console mirrors.
    ///
    /// A live run loop must stop calling this once `halt` comes back true;
    /// offline replay deliberately keeps going to find every violation.
    pub fn evaluate_tick(&mut self, world: &World, tick: u64) -> TickOutcome {
        let mut entries = Vec::new();
        let mut consoles = Vec::new();
        let mut halt = false;

        self.evaluate_watches(world, tick, &mut entries);

        for idx in 0..self.spec.invariants.len() {
            let scope = self.spec.invariants[idx].scope;
            if scope != Scope::EveryTick {
                continue;
            }
            if let Some(violated) = self.check_invariant(world, tick, idx, None, &mut entries, &mut consoles)
            {
                if violated && self.spec.invariants[idx].on_violation == ViolationPolicy::Halt {
                    halt = true;
                }
            }
        }
        entries.extend(consoles);
        if halt {
            self.halted = true;
        }
        TickOutcome { entries, halt }
    }

    /// Evaluate every at-termination invariant once against the final
    /// state. Runs even when the run halted early.
    pub fn evaluate_termination(
        &mut self,
        world: &World,
        tick: u64,
        reason: RunStatus,
    ) -> Vec<LogEntry> {
        let mut entries = Vec::new();
        let mut consoles = Vec::new();
        for idx in 0..self.spec.invariants.len() {
            if self.spec.invariants[idx].scope != Scope::AtTermination {
                continue;
            }
            self.check_invariant(world, tick, idx, Some(reason), &mut entries, &mut consoles);
        }
        entries.extend(consoles);
        entries
    }

    fn evaluate_watches(&mut self, world: &World, tick: u64, entries: &mut Vec<LogEntry>) {
        for watch in &self.spec.watches {
            if tick % watch.period != 0 {
                continue;
            }
            let ctx = EvalContext::new(world, tick).with_vo_agents(&self.spec.vo_agents);
            match ctx.eval(&watch.expr) {
                Ok(value @ (Value::Num(_) | Value::Bool(_))) => {
                    let mut slot = self.watch_stats.remove(&watch.name);
                    WatchStats::observe(&mut slot, &value);
                    if let Some(stats) = slot {
                        self.watch_stats.insert(watch.name.clone(), stats);
                    }
                    entries.push(LogEntry {
                        run_id: self.run_id.clone(),
                        tick,
                        body: EntryBody::Watch {
                            name: watch.name.clone(),
                            value,
                        },
                    });
                }
                Ok(other) => {
                    self.eval_failures += 1;
                    entries.push(LogEntry {
                        run_id: self.run_id.clone(),
                        tick,
                        body: EntryBody::EvalFailure {
                            item: ItemKind::Watch,
                            name: watch.name.clone(),
                            message: format!("watch produced a {other}, not a scalar"),
                        },
                    });
                }
                Err(err) => {
                    self.eval_failures += 1;
                    entries.push(LogEntry {
                        run_id: self.run_id.clone(),
                        tick,
                        body: EntryBody::EvalFailure {
                            item: ItemKind::Watch,
                            name: watch.name.clone(),
                            message: err.to_string(),
                        },
                    });
                }
            }
        }
    }

    /// Returns Some(violated) when the predicate evaluated, None on an
    /// evaluation failure (which is logged and does not stop the pass).
    fn check_invariant(
        &mut self,
        world: &World,
        tick: u64,
        idx: usize,
        reason: Option<RunStatus>,
        entries: &mut Vec<LogEntry>,
        consoles: &mut Vec<LogEntry>,
    ) -> Option<bool> {
        let invariant = &self.spec.invariants[idx];
        let ctx = EvalContext::new(world, tick).with_vo_agents(&self.spec.vo_agents);
        match ctx.eval(&invariant.predicate) {
            Ok(Value::Bool(true)) => Some(false),
            Ok(Value::Bool(false)) => {
                let name = invariant.name.clone();
                let scope = invariant.scope;
                let policy = invariant.on_violation;
                let predicate = self.predicate_texts[idx].clone();
                self.violations.push(ViolationRecord {
                    invariant: name.clone(),
                    tick,
                    scope,
                });
                if policy == ViolationPolicy::Halt {
                    self.any_halt_violation = true;
                }
                entries.push(LogEntry {
                    run_id: self.run_id.clone(),
                    tick,
                    body: EntryBody::Violation {
                        invariant: name.clone(),
                        predicate: predicate.clone(),
                        scope,
                        reason,
                    },
                });
                let (_, mirror) = self.console.emit(
                    &self.run_id,
                    tick,
                    Severity::Violation,
                    &name,
                    &format!("{predicate} evaluated false"),
                );
                consoles.push(mirror);
                Some(true)
            }
            Ok(other) => {
                self.eval_failures += 1;
                entries.push(LogEntry {
                    run_id: self.run_id.clone(),
                    tick,
                    body: EntryBody::EvalFailure {
                        item: ItemKind::Invariant,
                        name: invariant.name.clone(),
                        message: format!("predicate produced a {other}, not a boolean"),
                    },
                });
                None
            }
            Err(err) => {
                self.eval_failures += 1;
                entries.push(LogEntry {
                    run_id: self.run_id.clone(),
                    tick,
                    body: EntryBody::EvalFailure {
                        item: ItemKind::Invariant,
                        name: invariant.name.clone(),
                        message: err.to_string(),
                    },
                });
                None
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{AttrValue, Params};
    use crate::vomas::compile_spec;

    fn wolf_world(wolves: usize) -> World {
        let mut w = World::new("test", Params::default(), 0);
        for i in 0..wolves {
            w.add_agent(
                "wolf",
                i as f64,
                0.0,
                std::collections::BTreeMap::from([(
                    "energy".to_string(),
                    AttrValue::Real(10.0),
                )]),
            );
        }
        w
    }

    fn manager(spec_text: &str) -> VomasManager<Vec<u8>> {
        let spec = compile_spec(spec_text).unwrap();
        VomasManager::new(spec, "test_run", Vec::new())
    }

    #[test]
    fn watch_period_gates_evaluation() {
        let mut mgr = manager("watch n = count(agents) every 10");
        let world = wolf_world(2);
        assert!(mgr.evaluate_tick(&world, 7).entries.is_empty());
        let outcome = mgr.evaluate_tick(&world, 10);
        assert_eq!(outcome.entries.len(), 1);
        assert_eq!(outcome.entries[0].tick, 10);
        // tick 0 counts: every period divides 0
        let outcome = mgr.evaluate_tick(&world, 0);
        assert_eq!(outcome.entries.len(), 1);
    }

    #[test]
    fn violated_halt_invariant_halts_and_echoes_console() {
        let mut mgr =
            manager("invariant wolves_alive: count(agents[kind == wolf]) > 0 on_violation halt");
        let outcome = mgr.evaluate_tick(&wolf_world(0), 212);
        assert!(outcome.halt);
        assert_eq!(outcome.entries.len(), 2);
        assert_eq!(outcome.entries[0].kind(), "violation");
        assert_eq!(outcome.entries[1].kind(), "console");
        assert!(mgr.halted());
        assert_eq!(mgr.run_status(), RunStatus::Halted);
        let console = String::from_utf8(mgr.into_console_sink()).unwrap();
        assert_eq!(
            console,
            "[212] VIOLATION wolves_alive: count(agents[kind == wolf]) > 0 evaluated false\n"
        );
    }

    #[test]
    fn log_only_violation_does_not_halt() {
        let mut mgr = manager("invariant wolves_alive: count(agents[kind == wolf]) > 0");
        let outcome = mgr.evaluate_tick(&wolf_world(0), 3);
        assert!(!outcome.halt);
        assert_eq!(mgr.violations().len(), 1);
        assert_eq!(mgr.run_status(), RunStatus::Completed);
    }

    #[test]
    fn tautology_never_violates() {
        let mut mgr = manager("invariant always: count(agents) >= 0");
        for tick in 0..50 {
            let outcome = mgr.evaluate_tick(&wolf_world(tick as usize % 3), tick);
            assert!(outcome.entries.is_empty());
        }
        assert!(mgr.violations().is_empty());
    }

    #[test]
    fn entry_order_is_watches_then_violations_then_console() {
        let mut mgr = manager(
            "watch a = count(agents)\nwatch b = tick\ninvariant bad: count(agents) > 100",
        );
        let outcome = mgr.evaluate_tick(&wolf_world(1), 5);
        let kinds: Vec<&str> = outcome.entries.iter().map(|e| e.kind()).collect();
        assert_eq!(kinds, vec!["watch", "watch", "violation", "console"]);
        let names: Vec<&str> = outcome
            .entries
            .iter()
            .filter_map(|e| match &e.body {
                EntryBody::Watch { name, .. } => Some(name.as_str()),
                _ => None,
            })
            .collect();
        assert_eq!(names, vec!["a", "b"]);
    }

    #[test]
    fn eval_failure_is_logged_and_pass_continues() {
        let mut mgr = manager(
            "watch broken = avg(agents[kind == ghost], energy)\nwatch fine = count(agents)",
        );
        let outcome = mgr.evaluate_tick(&wolf_world(2), 1);
        assert_eq!(outcome.entries.len(), 2);
        assert_eq!(outcome.entries[0].kind(), "eval_failure");
        assert_eq!(outcome.entries[1].kind(), "watch");
        assert_eq!(mgr.eval_failures(), 1);
    }

    #[test]
    fn termination_invariants_run_once_with_reason() {
        let mut mgr = manager(
            "invariant ten: at_termination forall(agents, a -> a.energy >= 100)\n\
             invariant live: count(agents) > 0",
        );
        let world = wolf_world(2);
        // every-tick pass does not touch at_termination invariants
        let outcome = mgr.evaluate_tick(&world, 0);
        assert!(outcome.entries.is_empty());
        let entries = mgr.evaluate_termination(&world, 5, RunStatus::Completed);
        assert_eq!(entries.len(), 2); // violation + console mirror
        match &entries[0].body {
            EntryBody::Violation { reason, scope, .. } => {
                assert_eq!(*reason, Some(RunStatus::Completed));
                assert_eq!(*scope, Scope::AtTermination);
            }
            other => panic!("expected violation, got {other:?}"),
        }
    }

    #[test]
    fn empty_spec_produces_nothing() {
        let mut mgr = manager("");
        let world = wolf_world(3);
        assert!(mgr.evaluate_tick(&world, 0).entries.is_empty());
        assert!(mgr
            .evaluate_termination(&world, 9, RunStatus::Completed)
            .is_empty());
    }

    #[test]
    fn watch_stats_accumulate() {
        let mut mgr = manager("watch n = count(agents)");
        mgr.evaluate_tick(&wolf_world(3), 0);
        mgr.evaluate_tick(&wolf_world(1), 1);
        mgr.evaluate_tick(&wolf_world(2), 2);
        let stats = &mgr.watch_stats()["n"];
        assert_eq!(stats.count, 3);
        assert_eq!(stats.min, 1.0);
        assert_eq!(stats.max, 3.0);
        assert_eq!(stats.last, Value::Num(2.0));
    }
}
