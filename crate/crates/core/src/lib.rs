//! Deterministic agent-based simulation of crowd work flowing through an
//! IT structure into an organizational knowledge base.
//!
//! A scenario describes a crowd of agents, a pool of tasks, and an IT
//! structure that mediates between them in one of two forms: *episodic*
//! (independent attempts; a task keeps the best attempt made on it) or
//! *collaborative* (attempts accumulate on a shared artifact). The engine
//! advances the system in discrete ticks — agents decide to participate,
//! get a task, work, and submit — and periodically flushes submissions
//! through a filter into the knowledge base, which tracks counts and cost.
//!
//! Every run is a pure function of (scenario, seed): all randomness comes
//! from one counted draw stream with a fixed draw order, so results
//! reproduce bit-for-bit across runs and platforms.
//!
//! ```
//! use crowdsim_core::{engine, scenario};
//!
//! let text = r#"{
//!     "form": "collaborative",
//!     "ticks": 100,
//!     "update_period": 10,
//!     "completion_threshold": 1.0,
//!     "agents": [{"motivation": 0.9, "success_rate": 0.5}],
//!     "tasks": [{"difficulty": 0.2, "cost": 1.0}]
//! }"#;
//! let s = scenario::parse_scenario(text).expect("well-formed scenario");
//! let out = engine::run(&s, 7, false).expect("valid scenario");
//! assert_eq!(out.report.seed, 7);
//! assert!(out.report.tasks_completed <= 1);
//! ```

pub mod engine;
pub mod model;
pub mod policies;
pub mod report;
pub mod rng;
pub mod scenario;

pub use engine::{run, RunOutput, SimState, Simulation, TraceEvent, TraceKind};
pub use model::{Agent, ItForm, ItStructure, KnowledgeBase, ModelError, Submission, Task};
pub use policies::{FilterPolicy, WorkOutcome, WorkParams};
pub use report::{Report, ReportFormat};
pub use rng::DrawStream;
pub use scenario::{
    AgentSpec, Dist, PopulationSpec, Scenario, ScenarioError, TaskPoolSpec, TaskSpec,
};
