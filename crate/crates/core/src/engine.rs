//! The simulation loop: discrete synchronous ticks over a single owned
//! state, with a strict determinism contract.
//!
//! Each tick processes agents in ascending id order. A participating agent
//! is handed a task, works on it immediately (so later agents in the same
//! tick see earlier agents' collaborative gains), and sends a submission
//! back to the IT structure. Every `update_period` ticks the buffered
//! submissions are flushed into the knowledge base, and once more at the
//! end of the run if anything is left in the buffer.
//!
//! Determinism: a run draws from one seeded [`DrawStream`]. Scenario
//! materialization consumes its draws strictly before tick 1; afterwards the
//! order is fixed as per tick, per agent ascending: one motivation draw,
//! then one noise draw iff the agent worked and noise is enabled. Identical
//! (scenario, seed) pairs therefore produce identical reports and traces.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};

use crate::model::{Agent, ItForm, ItStructure, KnowledgeBase, Submission, Task};
use crate::policies::{apply_work, filter_submissions, participates, WorkParams};
use crate::report::{tally, Report};
use crate::rng::DrawStream;
use crate::scenario::{materialize, validate, Scenario, ScenarioError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    Participate,
    Assign,
    Submit,
    Flush,
    Complete,
}

impl TraceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TraceKind::Participate => "Participate",
            TraceKind::Assign => "Assign",
            TraceKind::Submit => "Submit",
            TraceKind::Flush => "Flush",
            TraceKind::Complete => "Complete",
        }
    }
}

/// One row of the run's event log. Fields not meaningful for a kind are
/// `None`; events are appended in non-decreasing tick order.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub tick: u64,
    pub kind: TraceKind,
    pub agent_id: Option<u32>,
    pub task_signifier: Option<u32>,
    pub completion_level: Option<f64>,
}

/// Candidate entry of the collaborative assignment heap, ordered by
/// (completion, signifier) ascending.
#[derive(Debug, Clone)]
struct Candidate {
    completion: f64,
    signifier: u32,
    index: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.completion
            .total_cmp(&other.completion)
            .then(self.signifier.cmp(&other.signifier))
    }
}

/// Incremental index over the task pool so assignment does not rescan the
/// pool on every attempt. Selection is identical to
/// [`crate::policies::assign_task`]; only the lookup cost differs.
#[derive(Debug, Clone)]
enum TaskIndex {
    /// Cursor to the first incomplete task; everything before it is done.
    Episodic { first_incomplete: usize },
    /// Min-heap of incomplete tasks keyed by (completion, signifier). Each
    /// incomplete task has exactly one entry: picks pop it, and the entry is
    /// re-pushed with the updated completion after work.
    Collaborative { heap: BinaryHeap<Reverse<Candidate>> },
}

impl TaskIndex {
    fn new(form: ItForm, pool: &[Task], threshold: f64) -> Self {
        match form {
            ItForm::Episodic => TaskIndex::Episodic { first_incomplete: 0 },
            ItForm::Collaborative => {
                let heap = pool
                    .iter()
                    .enumerate()
                    .filter(|(_, t)| !t.is_complete(threshold))
                    .map(|(index, t)| {
                        Reverse(Candidate {
                            completion: t.completion,
                            signifier: t.signifier,
                            index,
                        })
                    })
                    .collect();
                TaskIndex::Collaborative { heap }
            }
        }
    }

    fn pick(
        &mut self,
        pool: &[Task],
        threshold: f64,
        checked_out: &mut HashSet<u32>,
    ) -> Option<usize> {
        match self {
            TaskIndex::Episodic { first_incomplete } => {
                while *first_incomplete < pool.len()
                    && pool[*first_incomplete].is_complete(threshold)
                {
                    *first_incomplete += 1;
                }
                let picked = pool[*first_incomplete..].iter().position(|t| {
                    !t.is_complete(threshold) && !checked_out.contains(&t.signifier)
                })?;
                let index = *first_incomplete + picked;
                checked_out.insert(pool[index].signifier);
                Some(index)
            }
            TaskIndex::Collaborative { heap } => {
                while let Some(Reverse(c)) = heap.pop() {
                    let task = &pool[c.index];
                    // discard entries that no longer reflect the pool
                    if task.completion.to_bits() == c.completion.to_bits()
                        && !task.is_complete(threshold)
                    {
                        return Some(c.index);
                    }
                }
                None
            }
        }
    }

    /// Re-register a task after work was applied to it.
    fn task_updated(&mut self, index: usize, task: &Task, threshold: f64) {
        if let TaskIndex::Collaborative { heap } = self {
            if !task.is_complete(threshold) {
                heap.push(Reverse(Candidate {
                    completion: task.completion,
                    signifier: task.signifier,
                    index,
                }));
            }
        }
    }
}

/// Full state of one run. Construct via [`SimState::new`] (or scenario
/// materialization) and mutate only through [`SimState::tick`] and
/// [`SimState::flush`]: the assignment index is derived from the task pool
/// at construction and direct pool edits would desynchronize it.
#[derive(Debug, Clone)]
pub struct SimState {
    pub seed: u64,
    /// Current tick number; starts at 1 and advances by exactly 1 per tick.
    pub tick: u64,
    /// Agents in ascending id order.
    pub agents: Vec<Agent>,
    pub it: ItStructure,
    pub kb: KnowledgeBase,
    pub work: WorkParams,
    pub stream: DrawStream,
    /// Event log; `None` when trace collection is disabled for the run.
    pub trace: Option<Vec<TraceEvent>>,
    tasks_remaining: usize,
    index: TaskIndex,
    checked_out: HashSet<u32>,
}

impl SimState {
    /// Build a run state with a fresh stream seeded from `seed`.
    ///
    /// Agents must be sorted by strictly ascending id and the task pool by
    /// strictly ascending signifier.
    pub fn new(
        seed: u64,
        agents: Vec<Agent>,
        it: ItStructure,
        work: WorkParams,
        collect_trace: bool,
    ) -> Self {
        Self::with_stream(seed, agents, it, work, DrawStream::from_seed(seed), collect_trace)
    }

    /// Like [`SimState::new`] but adopting an already-advanced stream (used
    /// by scenario materialization, which draws before tick 1).
    pub fn with_stream(
        seed: u64,
        agents: Vec<Agent>,
        it: ItStructure,
        work: WorkParams,
        stream: DrawStream,
        collect_trace: bool,
    ) -> Self {
        assert!(
            agents.windows(2).all(|w| w[0].id < w[1].id),
            "agent ids must be strictly ascending"
        );
        assert!(
            it.task_pool.windows(2).all(|w| w[0].signifier < w[1].signifier),
            "task signifiers must be strictly ascending"
        );
        let threshold = it.completion_threshold;
        let tasks_remaining = it
            .task_pool
            .iter()
            .filter(|t| !t.is_complete(threshold))
            .count();
        let index = TaskIndex::new(it.form, &it.task_pool, threshold);
        SimState {
            seed,
            tick: 1,
            agents,
            it,
            kb: KnowledgeBase::default(),
            work,
            stream,
            trace: if collect_trace { Some(Vec::new()) } else { None },
            tasks_remaining,
            index,
            checked_out: HashSet::new(),
        }
    }

    /// Tasks whose completion has not yet reached the threshold.
    pub fn tasks_remaining(&self) -> usize {
        self.tasks_remaining
    }

    pub fn all_tasks_complete(&self) -> bool {
        self.tasks_remaining == 0
    }

    fn record(&mut self, event: TraceEvent) {
        if let Some(trace) = &mut self.trace {
            trace.push(event);
        }
    }

    /// Execute one tick: every agent, in ascending id order, draws for
    /// participation; participants are assigned a task (if any is
    /// available), work on it immediately, and send a submission back.
    /// Advances the tick counter by 1.
    pub fn tick(&mut self) {
        self.checked_out.clear();
        let threshold = self.it.completion_threshold;
        let now = self.tick;

        for i in 0..self.agents.len() {
            if !participates(&self.agents[i], &mut self.stream) {
                continue;
            }
            let agent_id = self.agents[i].id;
            self.record(TraceEvent {
                tick: now,
                kind: TraceKind::Participate,
                agent_id: Some(agent_id),
                task_signifier: None,
                completion_level: None,
            });

            let Some(task_idx) =
                self.index
                    .pick(&self.it.task_pool, threshold, &mut self.checked_out)
            else {
                continue;
            };
            let signifier = self.it.task_pool[task_idx].signifier;
            let handed_out = self.it.task_pool[task_idx].completion;
            self.record(TraceEvent {
                tick: now,
                kind: TraceKind::Assign,
                agent_id: Some(agent_id),
                task_signifier: Some(signifier),
                completion_level: Some(handed_out),
            });

            let outcome = apply_work(
                &mut self.agents[i],
                &mut self.it.task_pool[task_idx],
                self.it.form,
                &self.work,
                &mut self.stream,
            );
            self.index
                .task_updated(task_idx, &self.it.task_pool[task_idx], threshold);

            self.it.submission_buffer.push(Submission {
                task_signifier: signifier,
                agent_id,
                tick: now,
                completion_level: outcome.submission_level,
            });
            self.kb.total_submissions += 1;
            if outcome.submission_level >= threshold {
                self.kb.completed_submissions += 1;
            }
            self.record(TraceEvent {
                tick: now,
                kind: TraceKind::Submit,
                agent_id: Some(agent_id),
                task_signifier: Some(signifier),
                completion_level: Some(outcome.submission_level),
            });

            // the pick guarantees the task was incomplete before this work,
            // so reaching the threshold here is its first crossing
            if self.it.task_pool[task_idx].is_complete(threshold) {
                self.tasks_remaining -= 1;
                self.record(TraceEvent {
                    tick: now,
                    kind: TraceKind::Complete,
                    agent_id: None,
                    task_signifier: Some(signifier),
                    completion_level: Some(outcome.new_completion),
                });
            }
        }

        self.tick += 1;
    }

    /// Move the buffered submissions into the knowledge base: the filter
    /// decides which are accepted, the organization pays the processing
    /// cost for every buffered submission regardless, and the count of
    /// completed tasks is refreshed. The buffer is empty afterwards.
    ///
    /// `at_tick` is the tick this flush accounts for (the one just
    /// executed); it only labels the trace event.
    pub fn flush(&mut self, at_tick: u64) {
        let batch = std::mem::take(&mut self.it.submission_buffer);
        let accepted = filter_submissions(self.it.filter_policy, &batch);
        self.kb.accepted_submissions += accepted.len() as u64;
        for submission in &batch {
            let cost = self
                .it
                .task_by_signifier(submission.task_signifier)
                .expect("submission references a pooled task")
                .cost;
            self.kb.total_cost += cost;
        }
        self.kb.tasks_completed = (self.it.task_pool.len() - self.tasks_remaining) as u64;
        self.record(TraceEvent {
            tick: at_tick,
            kind: TraceKind::Flush,
            agent_id: None,
            task_signifier: None,
            completion_level: None,
        });
    }
}

/// Everything a finished run yields.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: Report,
    pub trace: Option<Vec<TraceEvent>>,
}

/// A run in progress: owns the state plus the schedule (tick budget,
/// periodic flushes, early stop, final flush).
#[derive(Debug, Clone)]
pub struct Simulation {
    state: SimState,
    budget: u64,
    early_stop: bool,
    done: bool,
}

impl Simulation {
    /// Validate and materialize `scenario`, ready for stepping.
    pub fn new(
        scenario: &Scenario,
        seed: u64,
        collect_trace: bool,
    ) -> Result<Self, Vec<ScenarioError>> {
        validate(scenario)?;
        let state = materialize(scenario, seed, collect_trace);
        Ok(Simulation {
            state,
            budget: scenario.ticks,
            early_stop: scenario.early_stop,
            done: scenario.ticks == 0,
        })
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Execute the next tick plus any flush it triggers: the periodic flush
    /// on update-period boundaries, and the final flush when the run ends
    /// (budget exhausted, or every task complete with early stop enabled)
    /// with submissions still buffered.
    pub fn step(&mut self) {
        if self.done {
            return;
        }
        let executing = self.state.tick;
        self.state.tick();

        if executing % self.state.it.update_period == 0 {
            self.state.flush(executing);
        }

        let finished = executing == self.budget
            || (self.early_stop && self.state.all_tasks_complete());
        if finished {
            if !self.state.it.submission_buffer.is_empty() {
                self.state.flush(executing);
            }
            self.done = true;
        }
    }

    /// Run to completion and tally the report.
    pub fn finish(mut self) -> RunOutput {
        while !self.done {
            self.step();
        }
        RunOutput {
            report: tally(&self.state),
            trace: self.state.trace,
        }
    }
}

/// Execute one full run: validate, materialize from (scenario, seed),
/// iterate ticks and flushes, and tally. Identical (scenario, seed) pairs
/// produce identical outputs.
pub fn run(
    scenario: &Scenario,
    seed: u64,
    collect_trace: bool,
) -> Result<RunOutput, Vec<ScenarioError>> {
    Ok(Simulation::new(scenario, seed, collect_trace)?.finish())
}
