//! Ready-made workloads for benchmarking the simulation engine.
//!
//! The builders produce valid scenarios of controlled size so benches can
//! scale one dimension at a time: crowd size, pool size, or run length.

use crowdsim_core::model::ItForm;
use crowdsim_core::policies::FilterPolicy;
use crowdsim_core::scenario::{validate, Dist, PopulationSpec, Scenario, TaskPoolSpec};

/// A mixed-ability crowd working a uniform-difficulty pool to the end of
/// the tick budget (no early stop, so runtime is deterministic per shape).
pub fn workload(form: ItForm, agents: u64, tasks: u64, ticks: u64) -> Scenario {
    let scenario = Scenario {
        form,
        ticks,
        update_period: 10,
        completion_threshold: 1.0,
        noise_epsilon: 0.1,
        filter: FilterPolicy::BestPerTask,
        early_stop: false,
        agents: PopulationSpec::Generator {
            count: agents,
            motivation: Dist::Uniform { lo: 0.3, hi: 0.9 },
            success_rate: Dist::Uniform { lo: 0.1, hi: 0.6 },
        },
        tasks: TaskPoolSpec::Generator {
            count: tasks,
            difficulty: Dist::Uniform { lo: 0.0, hi: 0.7 },
            cost: Dist::Constant(1.0),
        },
    };
    validate(&scenario).expect("benchmark workload is valid");
    scenario
}

#[cfg(test)]
mod tests {
    use super::*;
    use crowdsim_core::engine::run;

    #[test]
    fn workloads_run_and_produce_work() {
        for form in [ItForm::Episodic, ItForm::Collaborative] {
            let scenario = workload(form, 10, 50, 30);
            let report = run(&scenario, 1, false).unwrap().report;
            assert_eq!(report.ticks_elapsed, 30);
            assert!(report.number_of_submissions > 0);
        }
    }
}
