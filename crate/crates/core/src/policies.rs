//! Behavioral rules: per-tick participation, task assignment per IT form,
//! the work model, and submission filtering.
//!
//! All functions here are deterministic given their inputs and an explicit
//! [`DrawStream`]; none hold state.

use std::collections::HashSet;

use crate::model::{Agent, ItForm, ItStructure, ModelError, Submission, Task};
use crate::rng::DrawStream;

/// How a flush decides which buffered submissions enter the knowledge base.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterPolicy {
    /// Every submission is accepted unchanged.
    PassThrough,
    /// Accept submissions whose completion level is at or above the given
    /// cutoff (inclusive).
    Threshold(f64),
    /// Per task appearing in the batch, accept exactly the submission with
    /// the highest completion level; ties go to the earliest arrival.
    BestPerTask,
}

/// Knobs of the work model. `noise_epsilon` is the half-width of the
/// multiplicative jitter on work gains; 0 makes every gain deterministic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkParams {
    pub noise_epsilon: f64,
}

impl WorkParams {
    pub fn new(noise_epsilon: f64) -> Result<Self, ModelError> {
        if (0.0..1.0).contains(&noise_epsilon) {
            Ok(WorkParams { noise_epsilon })
        } else {
            Err(ModelError::OutOfRange {
                field: "noise_epsilon",
                value: noise_epsilon,
                bounds: "[0, 1)",
            })
        }
    }

    /// Noise disabled: work gains are a pure function of agent and task.
    pub fn deterministic() -> Self {
        WorkParams { noise_epsilon: 0.0 }
    }
}

impl Default for WorkParams {
    fn default() -> Self {
        Self::deterministic()
    }
}

/// Whether the agent participates this tick. Consumes exactly one draw;
/// true with probability `agent.motivation`.
pub fn participates(agent: &Agent, stream: &mut DrawStream) -> bool {
    stream.next_unit() < agent.motivation
}

/// Pick the task a participating agent receives, as an index into
/// `it.task_pool`, or `None` when no task is available.
///
/// Episodic: the lowest-signifier incomplete task not yet handed out this
/// tick; the pick is recorded in `checked_out_this_tick`, so each episodic
/// task goes to at most one agent per tick.
///
/// Collaborative: the incomplete task with the lowest current completion,
/// ties broken by lowest signifier. Several agents may receive the same task
/// in one tick; work is applied sequentially, so later agents see earlier
/// agents' gains.
pub fn assign_task(it: &ItStructure, checked_out_this_tick: &mut HashSet<u32>) -> Option<usize> {
    let theta = it.completion_threshold;
    match it.form {
        ItForm::Episodic => {
            let idx = it.task_pool.iter().position(|t| {
                !t.is_complete(theta) && !checked_out_this_tick.contains(&t.signifier)
            })?;
            checked_out_this_tick.insert(it.task_pool[idx].signifier);
            Some(idx)
        }
        ItForm::Collaborative => {
            let mut best: Option<usize> = None;
            for (i, t) in it.task_pool.iter().enumerate() {
                if t.is_complete(theta) {
                    continue;
                }
                // pool order is ascending signifier, so strict < keeps the
                // lowest signifier on ties
                match best {
                    Some(b) if it.task_pool[b].completion <= t.completion => {}
                    _ => best = Some(i),
                }
            }
            best
        }
    }
}

/// Result of one work attempt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkOutcome {
    /// The task's completion after this attempt.
    pub new_completion: f64,
    /// The completion level carried by the submission sent back.
    pub submission_level: f64,
}

/// Apply one work attempt by `agent` on `task`.
///
/// The raw gain is `success_rate * (1 - difficulty) * noise`, with noise 1
/// when `noise_epsilon` is 0 and otherwise one draw from
/// `[1 - epsilon, 1 + epsilon)`. Episodic attempts are independent: the best
/// attempt stands (`max` semantics). Collaborative attempts accumulate on the
/// handed-out completion, clamped to `[0, 1]`. Both attempt counters are
/// incremented; exactly one draw is consumed iff noise is on.
pub fn apply_work(
    agent: &mut Agent,
    task: &mut Task,
    form: ItForm,
    params: &WorkParams,
    stream: &mut DrawStream,
) -> WorkOutcome {
    let noise = if params.noise_epsilon == 0.0 {
        1.0
    } else {
        let eps = params.noise_epsilon;
        1.0 - eps + 2.0 * eps * stream.next_unit()
    };
    let raw_gain = agent.success_rate * (1.0 - task.difficulty) * noise;

    let new_completion = match form {
        ItForm::Episodic => {
            let attempt_level = raw_gain.clamp(0.0, 1.0);
            task.completion.max(attempt_level)
        }
        ItForm::Collaborative => (task.completion + raw_gain).clamp(0.0, 1.0),
    };

    task.completion = new_completion;
    task.attempts += 1;
    agent.attempts_made += 1;

    WorkOutcome {
        new_completion,
        submission_level: new_completion,
    }
}

/// Apply the filter policy to one flush window's buffer, preserving arrival
/// order among survivors. The result is always a subsequence of `batch`.
pub fn filter_submissions(policy: FilterPolicy, batch: &[Submission]) -> Vec<Submission> {
    match policy {
        FilterPolicy::PassThrough => batch.to_vec(),
        FilterPolicy::Threshold(cutoff) => batch
            .iter()
            .filter(|s| s.completion_level >= cutoff)
            .cloned()
            .collect(),
        FilterPolicy::BestPerTask => {
            // index of the best submission per task; first arrival wins ties
            let mut best: Vec<(u32, usize)> = Vec::new();
            for (i, sub) in batch.iter().enumerate() {
                match best.iter_mut().find(|(sig, _)| *sig == sub.task_signifier) {
                    Some((_, b)) => {
                        if batch[*b].completion_level < sub.completion_level {
                            *b = i;
                        }
                    }
                    None => best.push((sub.task_signifier, i)),
                }
            }
            let keep: HashSet<usize> = best.into_iter().map(|(_, i)| i).collect();
            batch
                .iter()
                .enumerate()
                .filter(|(i, _)| keep.contains(i))
                .map(|(_, s)| s.clone())
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ItForm::{Collaborative, Episodic};
    use proptest::prelude::*;

    fn agent(motivation: f64, success_rate: f64) -> Agent {
        Agent::new(0, motivation, success_rate).unwrap()
    }

    fn task(signifier: u32, difficulty: f64) -> Task {
        Task::new(signifier, difficulty, 1.0).unwrap()
    }

    fn sub(task_signifier: u32, tick: u64, level: f64) -> Submission {
        Submission {
            task_signifier,
            agent_id: 0,
            tick,
            completion_level: level,
        }
    }

    #[test]
    fn participates_certain_and_null() {
        let mut stream = DrawStream::from_seed(1);
        let always = agent(1.0, 0.5);
        let never = agent(0.0, 0.5);
        for _ in 0..1000 {
            assert!(participates(&always, &mut stream));
            assert!(!participates(&never, &mut stream));
        }
    }

    #[test]
    fn participates_frequency_matches_motivation() {
        // binomial oracle: 10_000 trials at p = 0.5, 3 sigma ~ 0.015
        let mut stream = DrawStream::from_seed(9);
        let a = agent(0.5, 0.5);
        let hits = (0..10_000).filter(|_| participates(&a, &mut stream)).count();
        let freq = hits as f64 / 10_000.0;
        assert!((0.48..=0.52).contains(&freq), "freq {freq}");
    }

    #[test]
    fn participates_consumes_one_draw() {
        let mut stream = DrawStream::from_seed(3);
        participates(&agent(0.7, 0.0), &mut stream);
        assert_eq!(stream.draws(), 1);
    }

    #[test]
    fn assign_episodic_skips_checked_out() {
        let it = ItStructure::new(
            Episodic,
            vec![task(0, 0.0), task(1, 0.0)],
            1,
            FilterPolicy::PassThrough,
            1.0,
        );
        let mut checked: HashSet<u32> = [0].into_iter().collect();
        let idx = assign_task(&it, &mut checked).unwrap();
        assert_eq!(it.task_pool[idx].signifier, 1);
        assert!(checked.contains(&1));
    }

    #[test]
    fn assign_collaborative_least_completed_lowest_signifier() {
        let mut pool = vec![task(0, 0.0), task(1, 0.0), task(2, 0.0)];
        pool[0].completion = 0.6;
        pool[1].completion = 0.2;
        pool[2].completion = 0.2;
        let it = ItStructure::new(Collaborative, pool, 1, FilterPolicy::PassThrough, 1.0);
        let idx = assign_task(&it, &mut HashSet::new()).unwrap();
        assert_eq!(it.task_pool[idx].signifier, 1);
    }

    #[test]
    fn assign_none_when_all_complete() {
        for form in [Episodic, Collaborative] {
            let mut pool = vec![task(0, 0.0)];
            pool[0].completion = 1.0;
            let it = ItStructure::new(form, pool, 1, FilterPolicy::PassThrough, 1.0);
            assert_eq!(assign_task(&it, &mut HashSet::new()), None);
        }
    }

    #[test]
    fn assign_episodic_never_repeats_within_tick() {
        let it = ItStructure::new(
            Episodic,
            (0..5).map(|i| task(i, 0.0)).collect(),
            1,
            FilterPolicy::PassThrough,
            1.0,
        );
        let mut checked = HashSet::new();
        let mut seen = HashSet::new();
        while let Some(idx) = assign_task(&it, &mut checked) {
            assert!(seen.insert(it.task_pool[idx].signifier));
        }
        assert_eq!(seen.len(), 5);
    }

    #[test]
    fn apply_work_perfect_episodic() {
        let mut a = agent(1.0, 1.0);
        let mut t = task(0, 0.0);
        let mut stream = DrawStream::from_seed(0);
        let out = apply_work(&mut a, &mut t, Episodic, &WorkParams::deterministic(), &mut stream);
        assert_eq!(out.new_completion, 1.0);
        assert_eq!(out.submission_level, 1.0);
        assert_eq!(t.attempts, 1);
        assert_eq!(a.attempts_made, 1);
        assert_eq!(stream.draws(), 0);
    }

    #[test]
    fn apply_work_zero_success_rate_changes_nothing() {
        let mut a = agent(1.0, 0.0);
        let mut t = task(0, 0.3);
        t.completion = 0.25;
        let mut stream = DrawStream::from_seed(0);
        for form in [Episodic, Collaborative] {
            let out = apply_work(&mut a, &mut t, form, &WorkParams::deterministic(), &mut stream);
            assert_eq!(out.new_completion, 0.25);
        }
    }

    #[test]
    fn apply_work_collaborative_accumulates() {
        // direct arithmetic oracle: 0.5 + 0.6 * (1 - 0.5) = 0.8
        let mut a = agent(1.0, 0.6);
        let mut t = task(0, 0.5);
        t.completion = 0.5;
        let mut stream = DrawStream::from_seed(0);
        let out = apply_work(&mut a, &mut t, Collaborative, &WorkParams::deterministic(), &mut stream);
        assert_eq!(out.new_completion, 0.5 + 0.6 * (1.0 - 0.5));
        assert!((out.new_completion - 0.8).abs() < 1e-12);
    }

    #[test]
    fn apply_work_collaborative_clamps_at_one() {
        // direct arithmetic oracle: clamp(0.8 + 0.4) = 1.0
        let mut a = agent(1.0, 0.4);
        let mut t = task(0, 0.0);
        t.completion = 0.8;
        let mut stream = DrawStream::from_seed(0);
        let out = apply_work(&mut a, &mut t, Collaborative, &WorkParams::deterministic(), &mut stream);
        assert_eq!(out.new_completion, 1.0);
    }

    #[test]
    fn apply_work_noise_draw_accounting() {
        let mut stream = DrawStream::from_seed(5);
        let params = WorkParams::new(0.2).unwrap();
        let mut a = agent(1.0, 0.5);
        let mut t = task(0, 0.0);
        apply_work(&mut a, &mut t, Collaborative, &params, &mut stream);
        assert_eq!(stream.draws(), 1);
        apply_work(&mut a, &mut t, Collaborative, &WorkParams::deterministic(), &mut stream);
        assert_eq!(stream.draws(), 1);
    }

    #[test]
    fn apply_work_bounds_fuzz() {
        // 10^6 fuzzed tuples: outputs stay in [0, 1] and respect monotonicity
        let mut stream = DrawStream::from_seed(77);
        let mut param_stream = DrawStream::from_seed(78);
        for _ in 0..1_000_000 {
            let s = param_stream.next_unit();
            let d = param_stream.next_unit() * 0.999;
            let prior = param_stream.next_unit();
            let eps = param_stream.next_unit() * 0.99;
            let form = if param_stream.next_unit() < 0.5 { Episodic } else { Collaborative };
            let mut a = agent(1.0, s);
            let mut t = task(0, d);
            t.completion = prior;
            let params = WorkParams::new(eps).unwrap();
            let out = apply_work(&mut a, &mut t, form, &params, &mut stream);
            assert!((0.0..=1.0).contains(&out.new_completion));
            assert!((0.0..=1.0).contains(&out.submission_level));
            assert!(out.new_completion >= prior);
        }
    }

    #[test]
    fn filter_pass_through_is_identity() {
        let batch = vec![sub(0, 1, 0.4), sub(1, 1, 0.5), sub(0, 2, 0.9)];
        assert_eq!(filter_submissions(FilterPolicy::PassThrough, &batch), batch);
    }

    #[test]
    fn filter_threshold_inclusive() {
        let batch = vec![sub(0, 1, 0.4), sub(1, 1, 0.5), sub(2, 1, 0.9)];
        let accepted = filter_submissions(FilterPolicy::Threshold(0.5), &batch);
        let levels: Vec<f64> = accepted.iter().map(|s| s.completion_level).collect();
        assert_eq!(levels, vec![0.5, 0.9]);
    }

    #[test]
    fn filter_best_per_task_earliest_tie() {
        let batch = vec![sub(7, 1, 0.3), sub(7, 2, 0.8), sub(7, 3, 0.8)];
        let accepted = filter_submissions(FilterPolicy::BestPerTask, &batch);
        assert_eq!(accepted.len(), 1);
        assert_eq!(accepted[0].tick, 2);
        assert_eq!(accepted[0].completion_level, 0.8);
    }

    fn arb_batch() -> impl Strategy<Value = Vec<Submission>> {
        proptest::collection::vec((0u32..6, 0.0f64..=1.0), 0..40).prop_map(|raw| {
            raw.into_iter()
                .enumerate()
                .map(|(i, (sig, level))| sub(sig, i as u64 + 1, level))
                .collect()
        })
    }

    fn is_subsequence(needle: &[Submission], haystack: &[Submission]) -> bool {
        let mut it = haystack.iter();
        needle.iter().all(|n| it.any(|h| h == n))
    }

    proptest! {
        #[test]
        fn filter_returns_subsequence(batch in arb_batch(), cutoff in 0.0f64..=1.0, which in 0u8..3) {
            let policy = match which {
                0 => FilterPolicy::PassThrough,
                1 => FilterPolicy::Threshold(cutoff),
                _ => FilterPolicy::BestPerTask,
            };
            let accepted = filter_submissions(policy, &batch);
            prop_assert!(is_subsequence(&accepted, &batch));
        }

        #[test]
        fn filter_threshold_zero_equals_pass_through(batch in arb_batch()) {
            prop_assert_eq!(
                filter_submissions(FilterPolicy::Threshold(0.0), &batch),
                filter_submissions(FilterPolicy::PassThrough, &batch)
            );
        }

        #[test]
        fn filter_best_per_task_one_per_task(batch in arb_batch()) {
            let accepted = filter_submissions(FilterPolicy::BestPerTask, &batch);
            let mut sigs: Vec<u32> = accepted.iter().map(|s| s.task_signifier).collect();
            sigs.sort_unstable();
            let before = sigs.len();
            sigs.dedup();
            prop_assert_eq!(before, sigs.len());
            let mut in_batch: Vec<u32> = batch.iter().map(|s| s.task_signifier).collect();
            in_batch.sort_unstable();
            in_batch.dedup();
            prop_assert_eq!(sigs.len(), in_batch.len());
        }

        #[test]
        fn apply_work_pure_when_noise_off(s in 0.0f64..=1.0, d in 0.0f64..0.999, prior in 0.0f64..=1.0) {
            for form in [Episodic, Collaborative] {
                let mut a1 = agent(1.0, s);
                let mut t1 = task(0, d);
                t1.completion = prior;
                let mut stream1 = DrawStream::from_seed(1);
                let out1 = apply_work(&mut a1, &mut t1, form, &WorkParams::deterministic(), &mut stream1);

                let mut a2 = agent(1.0, s);
                let mut t2 = task(0, d);
                t2.completion = prior;
                let mut stream2 = DrawStream::from_seed(999);
                let out2 = apply_work(&mut a2, &mut t2, form, &WorkParams::deterministic(), &mut stream2);

                prop_assert_eq!(out1, out2);
            }
        }

        #[test]
        fn assign_collaborative_deterministic(completions in proptest::collection::vec(0.0f64..=1.0, 1..20)) {
            let pool: Vec<Task> = completions
                .iter()
                .enumerate()
                .map(|(i, &c)| {
                    let mut t = task(i as u32, 0.0);
                    t.completion = c;
                    t
                })
                .collect();
            let it = ItStructure::new(Collaborative, pool, 1, FilterPolicy::PassThrough, 0.9);
            let a = assign_task(&it, &mut HashSet::new());
            let b = assign_task(&it, &mut HashSet::new());
            prop_assert_eq!(a, b);
            if let Some(idx) = a {
                // picked task is incomplete and minimal by (completion, signifier)
                let picked = &it.task_pool[idx];
                prop_assert!(!picked.is_complete(0.9));
                for t in it.task_pool.iter().filter(|t| !t.is_complete(0.9)) {
                    prop_assert!(
                        picked.completion < t.completion
                            || (picked.completion == t.completion && picked.signifier <= t.signifier)
                    );
                }
            }
        }
    }
}
