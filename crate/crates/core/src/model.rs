//! Domain types: agents, tasks, submissions, the IT structure, and the
//! knowledge base. Plain values with validated constructors; all simulation
//! dynamics live in [`crate::engine`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::policies::FilterPolicy;

/// Validation failure for a domain value.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{field} out of range: {value} (must be within {bounds})")]
    OutOfRange {
        field: &'static str,
        value: f64,
        bounds: &'static str,
    },
}

fn check_range(
    field: &'static str,
    value: f64,
    bounds: &'static str,
    ok: bool,
) -> Result<f64, ModelError> {
    if ok && value.is_finite() {
        Ok(value)
    } else {
        Err(ModelError::OutOfRange {
            field,
            value,
            bounds,
        })
    }
}

/// A crowd member. `motivation` is the per-tick probability of
/// participating; `success_rate` scales how much completion one work
/// attempt produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub id: u32,
    pub motivation: f64,
    pub success_rate: f64,
    /// Run-state counter; never decreases.
    pub attempts_made: u64,
}

impl Agent {
    pub fn new(id: u32, motivation: f64, success_rate: f64) -> Result<Self, ModelError> {
        let motivation = check_range(
            "motivation",
            motivation,
            "[0, 1]",
            (0.0..=1.0).contains(&motivation),
        )?;
        let success_rate = check_range(
            "success_rate",
            success_rate,
            "[0, 1]",
            (0.0..=1.0).contains(&success_rate),
        )?;
        Ok(Agent {
            id,
            motivation,
            success_rate,
            attempts_made: 0,
        })
    }
}

/// A knowledge task held by the IT structure.
///
/// `difficulty` lives in `[0, 1)`: difficulty exactly 1 would zero out every
/// work gain and is rejected at construction. `completion` is the overall
/// completion level in `[0, 1]`, 0.0 meaning nothing and 1.0 perfect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub signifier: u32,
    pub difficulty: f64,
    /// Processing cost the organization pays per buffered submission, in
    /// abstract units.
    pub cost: f64,
    pub completion: f64,
    pub attempts: u64,
}

impl Task {
    pub fn new(signifier: u32, difficulty: f64, cost: f64) -> Result<Self, ModelError> {
        let difficulty = check_range(
            "difficulty",
            difficulty,
            "[0, 1)",
            (0.0..1.0).contains(&difficulty),
        )?;
        let cost = check_range("cost", cost, "[0, inf)", cost >= 0.0)?;
        Ok(Task {
            signifier,
            difficulty,
            cost,
            completion: 0.0,
            attempts: 0,
        })
    }

    /// True iff this task's completion has reached `threshold`.
    /// The comparison is inclusive; callers must keep `threshold` in `(0, 1]`.
    pub fn is_complete(&self, threshold: f64) -> bool {
        debug_assert!(threshold > 0.0 && threshold <= 1.0);
        self.completion >= threshold
    }
}

/// One send-back of a task to the IT structure. `completion_level` is the
/// task's overall completion after the work that produced this submission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submission {
    pub task_signifier: u32,
    pub agent_id: u32,
    pub tick: u64,
    pub completion_level: f64,
}

/// The form coded into the IT artifact.
///
/// Collaborative structures let agents build on each other's partial work
/// (a handed-out task may already be partially completed); episodic
/// structures keep every attempt independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItForm {
    Episodic,
    Collaborative,
}

/// The mediating IT artifact: the task pool, the buffer of submissions
/// awaiting the next periodic knowledge-base update, and the update rules.
#[derive(Debug, Clone, PartialEq)]
pub struct ItStructure {
    pub form: ItForm,
    /// Tasks in creation order; signifiers strictly ascending.
    pub task_pool: Vec<Task>,
    /// Submissions received since the last flush, in arrival order.
    pub submission_buffer: Vec<Submission>,
    /// Ticks between knowledge-base updates.
    pub update_period: u64,
    pub filter_policy: FilterPolicy,
    /// Completion level at or above which a task or submission counts as
    /// complete; in `(0, 1]`.
    pub completion_threshold: f64,
}

impl ItStructure {
    pub fn new(
        form: ItForm,
        task_pool: Vec<Task>,
        update_period: u64,
        filter_policy: FilterPolicy,
        completion_threshold: f64,
    ) -> Self {
        ItStructure {
            form,
            task_pool,
            submission_buffer: Vec::new(),
            update_period,
            filter_policy,
            completion_threshold,
        }
    }

    pub fn task_by_signifier(&self, signifier: u32) -> Option<&Task> {
        self.task_pool
            .binary_search_by_key(&signifier, |t| t.signifier)
            .ok()
            .map(|i| &self.task_pool[i])
    }
}

/// Accumulated organizational knowledge counters. All counters are
/// monotonically non-decreasing over a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeBase {
    /// Every submission ever received, counted at send-back.
    pub total_submissions: u64,
    /// Submissions that passed the filter at a flush.
    pub accepted_submissions: u64,
    /// Submissions whose completion level reached the completion threshold,
    /// counted at send-back.
    pub completed_submissions: u64,
    /// Distinct tasks whose completion reached the threshold; recomputed at
    /// each flush.
    pub tasks_completed: u64,
    /// Processing cost paid at flush for every buffered submission,
    /// accepted or not.
    pub total_cost: f64,
}
