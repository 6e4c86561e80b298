//! Scenario configuration: the JSON format runs are described in, plus
//! validation and materialization into an initial simulation state.
//!
//! Parsing is strict — unknown keys are rejected — and collects every field
//! error it can find instead of stopping at the first, so a bad file is
//! fixable in one pass. Validation reports range problems the same way.
//!
//! Materialization is part of the determinism contract: generated agents are
//! drawn before generated tasks, each entity's fields in declaration order
//! (motivation then success rate; difficulty then cost), all from the run's
//! own draw stream. Constant distributions consume no draws.

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::engine::SimState;
use crate::model::{Agent, ItForm, ItStructure, Task};
use crate::policies::{FilterPolicy, WorkParams};
use crate::rng::DrawStream;

/// A value distribution for generated populations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dist {
    Constant(f64),
    /// Uniform over `[lo, hi)` (a single unit draw scaled into the range).
    Uniform { lo: f64, hi: f64 },
}

impl Dist {
    pub fn sample(&self, stream: &mut DrawStream) -> f64 {
        match *self {
            Dist::Constant(value) => value,
            Dist::Uniform { lo, hi } => lo + (hi - lo) * stream.next_unit(),
        }
    }

    /// Smallest and largest value the distribution can produce.
    fn bounds(&self) -> (f64, f64) {
        match *self {
            Dist::Constant(value) => (value, value),
            Dist::Uniform { lo, hi } => (lo, hi),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentSpec {
    pub motivation: f64,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub difficulty: f64,
    pub cost: f64,
}

/// Agent population: either spelled out or generated.
#[derive(Debug, Clone, PartialEq)]
pub enum PopulationSpec {
    List(Vec<AgentSpec>),
    Generator {
        count: u64,
        motivation: Dist,
        success_rate: Dist,
    },
}

/// Task pool: either spelled out or generated.
#[derive(Debug, Clone, PartialEq)]
pub enum TaskPoolSpec {
    List(Vec<TaskSpec>),
    Generator {
        count: u64,
        difficulty: Dist,
        cost: Dist,
    },
}

/// A complete run description.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub form: ItForm,
    /// Tick budget; the run may end earlier if `early_stop` is set and
    /// every task completes.
    pub ticks: u64,
    /// Flush the submission buffer every this many ticks. Must be >= 1.
    pub update_period: u64,
    pub completion_threshold: f64,
    pub noise_epsilon: f64,
    pub filter: FilterPolicy,
    pub early_stop: bool,
    pub agents: PopulationSpec,
    pub tasks: TaskPoolSpec,
}

/// A problem found while parsing or validating a scenario.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    /// The text is not well-formed JSON; the message carries the position.
    #[error("syntax error: {0}")]
    Syntax(String),
    /// A specific field is missing, has the wrong shape, or is out of range.
    #[error("{path}: {message}")]
    Field { path: String, message: String },
}

fn field_error(errors: &mut Vec<ScenarioError>, path: impl Into<String>, message: impl Into<String>) {
    errors.push(ScenarioError::Field {
        path: path.into(),
        message: message.into(),
    });
}

fn type_name(value: &Value) -> &'static str {
    match value {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

fn expect_u64(value: &Value, path: &str, errors: &mut Vec<ScenarioError>) -> Option<u64> {
    match value.as_u64() {
        Some(n) => Some(n),
        None => {
            field_error(
                errors,
                path,
                format!("expected a non-negative integer, got {}", type_name(value)),
            );
            None
        }
    }
}

fn expect_f64(value: &Value, path: &str, errors: &mut Vec<ScenarioError>) -> Option<f64> {
    match value.as_f64() {
        Some(x) => Some(x),
        None => {
            field_error(
                errors,
                path,
                format!("expected a number, got {}", type_name(value)),
            );
            None
        }
    }
}

fn expect_bool(value: &Value, path: &str, errors: &mut Vec<ScenarioError>) -> Option<bool> {
    match value.as_bool() {
        Some(b) => Some(b),
        None => {
            field_error(
                errors,
                path,
                format!("expected a boolean, got {}", type_name(value)),
            );
            None
        }
    }
}

fn expect_object<'v>(
    value: &'v Value,
    path: &str,
    errors: &mut Vec<ScenarioError>,
) -> Option<&'v Map<String, Value>> {
    match value.as_object() {
        Some(map) => Some(map),
        None => {
            field_error(
                errors,
                path,
                format!("expected an object, got {}", type_name(value)),
            );
            None
        }
    }
}

fn reject_unknown_keys(
    map: &Map<String, Value>,
    allowed: &[&str],
    prefix: &str,
    errors: &mut Vec<ScenarioError>,
) {
    for key in map.keys() {
        if !allowed.contains(&key.as_str()) {
            let path = if prefix.is_empty() {
                key.clone()
            } else {
                format!("{prefix}.{key}")
            };
            field_error(errors, path, "unknown key");
        }
    }
}

fn parse_form(value: &Value, errors: &mut Vec<ScenarioError>) -> Option<ItForm> {
    let text = match value.as_str() {
        Some(text) => text,
        None => {
            field_error(
                errors,
                "form",
                format!("expected a string, got {}", type_name(value)),
            );
            return None;
        }
    };
    match text {
        "episodic" => Some(ItForm::Episodic),
        "collaborative" => Some(ItForm::Collaborative),
        other => {
            field_error(
                errors,
                "form",
                format!("unknown form {other:?} (expected \"episodic\" or \"collaborative\")"),
            );
            None
        }
    }
}

fn parse_filter(value: &Value, errors: &mut Vec<ScenarioError>) -> Option<FilterPolicy> {
    let map = expect_object(value, "filter", errors)?;
    reject_unknown_keys(map, &["policy", "threshold"], "filter", errors);
    let policy = match map.get("policy") {
        Some(policy) => policy.as_str().or_else(|| {
            field_error(
                errors,
                "filter.policy",
                format!("expected a string, got {}", type_name(policy)),
            );
            None
        })?,
        None => {
            field_error(errors, "filter.policy", "missing required key");
            return None;
        }
    };
    match policy {
        "pass_through" | "best_per_task" => {
            if map.contains_key("threshold") {
                field_error(
                    errors,
                    "filter.threshold",
                    format!("only valid when policy is \"threshold\", not {policy:?}"),
                );
                return None;
            }
            Some(if policy == "pass_through" {
                FilterPolicy::PassThrough
            } else {
                FilterPolicy::BestPerTask
            })
        }
        "threshold" => {
            let cutoff = match map.get("threshold") {
                Some(cutoff) => expect_f64(cutoff, "filter.threshold", errors)?,
                None => {
                    field_error(
                        errors,
                        "filter.threshold",
                        "missing required key (the threshold policy needs a cutoff)",
                    );
                    return None;
                }
            };
            Some(FilterPolicy::Threshold(cutoff))
        }
        other => {
            field_error(
                errors,
                "filter.policy",
                format!(
                    "unknown policy {other:?} (expected \"pass_through\", \"threshold\", or \"best_per_task\")"
                ),
            );
            None
        }
    }
}

fn parse_dist(value: &Value, path: &str, errors: &mut Vec<ScenarioError>) -> Option<Dist> {
    let map = expect_object(value, path, errors)?;
    reject_unknown_keys(map, &["constant", "uniform"], path, errors);
    match (map.get("constant"), map.get("uniform")) {
        (Some(constant), None) => {
            let value = expect_f64(constant, &format!("{path}.constant"), errors)?;
            Some(Dist::Constant(value))
        }
        (None, Some(uniform)) => {
            let pair = match uniform.as_array() {
                Some(pair) if pair.len() == 2 => pair,
                _ => {
                    field_error(
                        errors,
                        format!("{path}.uniform"),
                        "expected an array of two numbers [lo, hi]",
                    );
                    return None;
                }
            };
            let lo = expect_f64(&pair[0], &format!("{path}.uniform[0]"), errors);
            let hi = expect_f64(&pair[1], &format!("{path}.uniform[1]"), errors);
            Some(Dist::Uniform {
                lo: lo?,
                hi: hi?,
            })
        }
        _ => {
            field_error(
                errors,
                path,
                "expected exactly one of \"constant\" or \"uniform\"",
            );
            None
        }
    }
}

fn parse_agents(value: &Value, errors: &mut Vec<ScenarioError>) -> Option<PopulationSpec> {
    match value {
        Value::Array(items) => {
            let mut list = Vec::with_capacity(items.len());
            let mut ok = true;
            for (i, item) in items.iter().enumerate() {
                let path = format!("agents[{i}]");
                let Some(map) = expect_object(item, &path, errors) else {
                    ok = false;
                    continue;
                };
                reject_unknown_keys(map, &["motivation", "success_rate"], &path, errors);
                let motivation = match map.get("motivation") {
                    Some(v) => expect_f64(v, &format!("{path}.motivation"), errors),
                    None => {
                        field_error(errors, format!("{path}.motivation"), "missing required key");
                        None
                    }
                };
                let success_rate = match map.get("success_rate") {
                    Some(v) => expect_f64(v, &format!("{path}.success_rate"), errors),
                    None => {
                        field_error(errors, format!("{path}.success_rate"), "missing required key");
                        None
                    }
                };
                match (motivation, success_rate) {
                    (Some(motivation), Some(success_rate)) => list.push(AgentSpec {
                        motivation,
                        success_rate,
                    }),
                    _ => ok = false,
                }
            }
            ok.then_some(PopulationSpec::List(list))
        }
        Value::Object(map) if map.contains_key("count") => {
            reject_unknown_keys(map, &["count", "motivation", "success_rate"], "agents", errors);
            let count = expect_u64(&map["count"], "agents.count", errors);
            let motivation = match map.get("motivation") {
                Some(v) => parse_dist(v, "agents.motivation", errors),
                None => {
                    field_error(errors, "agents.motivation", "missing required key");
                    None
                }
            };
            let success_rate = match map.get("success_rate") {
                Some(v) => parse_dist(v, "agents.success_rate", errors),
                None => {
                    field_error(errors, "agents.success_rate", "missing required key");
                    None
                }
            };
            Some(PopulationSpec::Generator {
                count: count?,
                motivation: motivation?,
                success_rate: success_rate?,
            })
        }
        _ => {
            field_error(
                errors,
                "agents",
                "exactly one of list or generator (an array of agent objects, or an object with \"count\")",
            );
            None
        }
    }
}

fn parse_tasks(value: &Value, errors: &mut Vec<ScenarioError>) -> Option<TaskPoolSpec> {
    match value {
        Value::Array(items) => {
            let mut list = Vec::with_capacity(items.len());
            let mut ok = true;
            for (i, item) in items.iter().enumerate() {
                let path = format!("tasks[{i}]");
                let Some(map) = expect_object(item, &path, errors) else {
                    ok = false;
                    continue;
                };
                reject_unknown_keys(map, &["difficulty", "cost"], &path, errors);
                let difficulty = match map.get("difficulty") {
                    Some(v) => expect_f64(v, &format!("{path}.difficulty"), errors),
                    None => {
                        field_error(errors, format!("{path}.difficulty"), "missing required key");
                        None
                    }
                };
                let cost = match map.get("cost") {
                    Some(v) => expect_f64(v, &format!("{path}.cost"), errors),
                    None => {
                        field_error(errors, format!("{path}.cost"), "missing required key");
                        None
                    }
                };
                match (difficulty, cost) {
                    (Some(difficulty), Some(cost)) => list.push(TaskSpec { difficulty, cost }),
                    _ => ok = false,
                }
            }
            ok.then_some(TaskPoolSpec::List(list))
        }
        Value::Object(map) if map.contains_key("count") => {
            reject_unknown_keys(map, &["count", "difficulty", "cost"], "tasks", errors);
            let count = expect_u64(&map["count"], "tasks.count", errors);
            let difficulty = match map.get("difficulty") {
                Some(v) => parse_dist(v, "tasks.difficulty", errors),
                None => {
                    field_error(errors, "tasks.difficulty", "missing required key");
                    None
                }
            };
            let cost = match map.get("cost") {
                Some(v) => parse_dist(v, "tasks.cost", errors),
                None => {
                    field_error(errors, "tasks.cost", "missing required key");
                    None
                }
            };
            Some(TaskPoolSpec::Generator {
                count: count?,
                difficulty: difficulty?,
                cost: cost?,
            })
        }
        _ => {
            field_error(
                errors,
                "tasks",
                "exactly one of list or generator (an array of task objects, or an object with \"count\")",
            );
            None
        }
    }
}

/// Parse scenario JSON. Unknown keys anywhere are errors; every field
/// problem found is reported, not just the first.
pub fn parse_scenario(text: &str) -> Result<Scenario, Vec<ScenarioError>> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| vec![ScenarioError::Syntax(e.to_string())])?;
    let mut errors = Vec::new();
    let Some(map) = value.as_object() else {
        return Err(vec![ScenarioError::Field {
            path: "$".into(),
            message: format!("scenario must be a JSON object, got {}", type_name(&value)),
        }]);
    };

    const TOP_LEVEL: [&str; 9] = [
        "form",
        "ticks",
        "update_period",
        "completion_threshold",
        "noise_epsilon",
        "filter",
        "early_stop",
        "agents",
        "tasks",
    ];
    reject_unknown_keys(map, &TOP_LEVEL, "", &mut errors);

    let required = |key: &'static str, errors: &mut Vec<ScenarioError>| match map.get(key) {
        Some(value) => Some(value),
        None => {
            field_error(errors, key, "missing required key");
            None
        }
    };

    let form = required("form", &mut errors).and_then(|v| parse_form(v, &mut errors));
    let ticks = required("ticks", &mut errors).and_then(|v| expect_u64(v, "ticks", &mut errors));
    let update_period = required("update_period", &mut errors)
        .and_then(|v| expect_u64(v, "update_period", &mut errors));
    let completion_threshold = required("completion_threshold", &mut errors)
        .and_then(|v| expect_f64(v, "completion_threshold", &mut errors));
    let noise_epsilon = match map.get("noise_epsilon") {
        Some(v) => expect_f64(v, "noise_epsilon", &mut errors),
        None => Some(0.0),
    };
    let filter = match map.get("filter") {
        Some(v) => parse_filter(v, &mut errors),
        None => Some(FilterPolicy::PassThrough),
    };
    let early_stop = match map.get("early_stop") {
        Some(v) => expect_bool(v, "early_stop", &mut errors),
        None => Some(true),
    };
    let agents = required("agents", &mut errors).and_then(|v| parse_agents(v, &mut errors));
    let tasks = required("tasks", &mut errors).and_then(|v| parse_tasks(v, &mut errors));

    match (
        form,
        ticks,
        update_period,
        completion_threshold,
        noise_epsilon,
        filter,
        early_stop,
        agents,
        tasks,
    ) {
        (
            Some(form),
            Some(ticks),
            Some(update_period),
            Some(completion_threshold),
            Some(noise_epsilon),
            Some(filter),
            Some(early_stop),
            Some(agents),
            Some(tasks),
        ) if errors.is_empty() => Ok(Scenario {
            form,
            ticks,
            update_period,
            completion_threshold,
            noise_epsilon,
            filter,
            early_stop,
            agents,
            tasks,
        }),
        _ => Err(errors),
    }
}

fn check_range(
    errors: &mut Vec<ScenarioError>,
    path: String,
    value: f64,
    ok: bool,
    bounds: &str,
) {
    if !ok {
        field_error(errors, path, format!("must be in {bounds}, got {value}"));
    }
}

fn check_dist(
    errors: &mut Vec<ScenarioError>,
    path: &str,
    dist: &Dist,
    ok: impl Fn(f64) -> bool,
    bounds: &str,
) {
    if let Dist::Uniform { lo, hi } = dist {
        if !(lo <= hi) {
            field_error(
                errors,
                path,
                format!("uniform bounds must satisfy lo <= hi, got [{lo}, {hi}]"),
            );
            return;
        }
    }
    let (lo, hi) = dist.bounds();
    if !(ok(lo) && ok(hi)) {
        field_error(errors, path, format!("must stay in {bounds}, got [{lo}, {hi}]"));
    }
}

/// Check every range constraint a parsed (or programmatically built)
/// scenario must satisfy, reporting all violations.
pub fn validate(scenario: &Scenario) -> Result<(), Vec<ScenarioError>> {
    let mut errors = Vec::new();

    if scenario.update_period == 0 {
        field_error(&mut errors, "update_period", "must be positive");
    }
    let theta = scenario.completion_threshold;
    if !(theta > 0.0 && theta <= 1.0) {
        field_error(
            &mut errors,
            "completion_threshold",
            format!("completion_threshold must be in (0,1], got {theta}"),
        );
    }
    let eps = scenario.noise_epsilon;
    check_range(
        &mut errors,
        "noise_epsilon".into(),
        eps,
        eps >= 0.0 && eps < 1.0,
        "[0, 1)",
    );
    if let FilterPolicy::Threshold(cutoff) = scenario.filter {
        check_range(
            &mut errors,
            "filter.threshold".into(),
            cutoff,
            (0.0..=1.0).contains(&cutoff),
            "[0, 1]",
        );
    }

    match &scenario.agents {
        PopulationSpec::List(list) => {
            if list.is_empty() {
                field_error(&mut errors, "agents", "at least one agent required");
            }
            for (i, agent) in list.iter().enumerate() {
                check_range(
                    &mut errors,
                    format!("agents[{i}].motivation"),
                    agent.motivation,
                    (0.0..=1.0).contains(&agent.motivation),
                    "[0, 1]",
                );
                check_range(
                    &mut errors,
                    format!("agents[{i}].success_rate"),
                    agent.success_rate,
                    (0.0..=1.0).contains(&agent.success_rate),
                    "[0, 1]",
                );
            }
        }
        PopulationSpec::Generator {
            count,
            motivation,
            success_rate,
        } => {
            if *count == 0 {
                field_error(&mut errors, "agents.count", "at least one agent required");
            }
            check_dist(
                &mut errors,
                "agents.motivation",
                motivation,
                |x| (0.0..=1.0).contains(&x),
                "[0, 1]",
            );
            check_dist(
                &mut errors,
                "agents.success_rate",
                success_rate,
                |x| (0.0..=1.0).contains(&x),
                "[0, 1]",
            );
        }
    }

    match &scenario.tasks {
        TaskPoolSpec::List(list) => {
            if list.is_empty() {
                field_error(&mut errors, "tasks", "at least one task required");
            }
            for (i, task) in list.iter().enumerate() {
                check_range(
                    &mut errors,
                    format!("tasks[{i}].difficulty"),
                    task.difficulty,
                    task.difficulty >= 0.0 && task.difficulty < 1.0,
                    "[0, 1)",
                );
                check_range(
                    &mut errors,
                    format!("tasks[{i}].cost"),
                    task.cost,
                    task.cost >= 0.0,
                    "[0, inf)",
                );
            }
        }
        TaskPoolSpec::Generator {
            count,
            difficulty,
            cost,
        } => {
            if *count == 0 {
                field_error(&mut errors, "tasks.count", "at least one task required");
            }
            check_dist(
                &mut errors,
                "tasks.difficulty",
                difficulty,
                |x| x >= 0.0 && x < 1.0,
                "[0, 1)",
            );
            check_dist(&mut errors, "tasks.cost", cost, |x| x >= 0.0, "[0, inf)");
        }
    }

    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

/// Build the initial run state from a validated scenario and a seed.
///
/// Population draws happen here, before the first tick: agents first (in id
/// order, motivation then success rate), then tasks (in signifier order,
/// difficulty then cost). The partially-consumed stream is handed to the
/// state so the tick loop continues from it.
///
/// # Panics
///
/// Panics if the scenario would produce out-of-range entities; run
/// [`validate`] first.
pub fn materialize(scenario: &Scenario, seed: u64, collect_trace: bool) -> SimState {
    let mut stream = DrawStream::from_seed(seed);

    let agents: Vec<Agent> = match &scenario.agents {
        PopulationSpec::List(list) => list
            .iter()
            .enumerate()
            .map(|(i, spec)| {
                Agent::new(i as u32, spec.motivation, spec.success_rate)
                    .expect("validated agent spec")
            })
            .collect(),
        PopulationSpec::Generator {
            count,
            motivation,
            success_rate,
        } => (0..*count)
            .map(|i| {
                let m = motivation.sample(&mut stream);
                let s = success_rate.sample(&mut stream);
                Agent::new(i as u32, m, s).expect("validated agent generator")
            })
            .collect(),
    };

    let tasks: Vec<Task> = match &scenario.tasks {
        TaskPoolSpec::List(list) => list
            .iter()
            .enumerate()
            .map(|(i, spec)| {
                Task::new(i as u32, spec.difficulty, spec.cost).expect("validated task spec")
            })
            .collect(),
        TaskPoolSpec::Generator {
            count,
            difficulty,
            cost,
        } => (0..*count)
            .map(|i| {
                let d = difficulty.sample(&mut stream);
                let c = cost.sample(&mut stream);
                Task::new(i as u32, d, c).expect("validated task generator")
            })
            .collect(),
    };

    let it = ItStructure::new(
        scenario.form,
        tasks,
        scenario.update_period,
        scenario.filter,
        scenario.completion_threshold,
    );
    SimState::with_stream(
        seed,
        agents,
        it,
        WorkParams {
            noise_epsilon: scenario.noise_epsilon,
        },
        stream,
        collect_trace,
    )
}

fn dist_value(dist: &Dist) -> Value {
    match *dist {
        Dist::Constant(value) => json!({ "constant": value }),
        Dist::Uniform { lo, hi } => json!({ "uniform": [lo, hi] }),
    }
}

/// Render a scenario back to canonical JSON text (all optional keys spelled
/// out). `parse_scenario(&emit_scenario(s))` reproduces `s` exactly.
pub fn emit_scenario(scenario: &Scenario) -> String {
    let mut root = Map::new();
    root.insert(
        "form".into(),
        json!(match scenario.form {
            ItForm::Episodic => "episodic",
            ItForm::Collaborative => "collaborative",
        }),
    );
    root.insert("ticks".into(), json!(scenario.ticks));
    root.insert("update_period".into(), json!(scenario.update_period));
    root.insert(
        "completion_threshold".into(),
        json!(scenario.completion_threshold),
    );
    root.insert("noise_epsilon".into(), json!(scenario.noise_epsilon));
    root.insert(
        "filter".into(),
        match scenario.filter {
            FilterPolicy::PassThrough => json!({ "policy": "pass_through" }),
            FilterPolicy::Threshold(cutoff) => {
                json!({ "policy": "threshold", "threshold": cutoff })
            }
            FilterPolicy::BestPerTask => json!({ "policy": "best_per_task" }),
        },
    );
    root.insert("early_stop".into(), json!(scenario.early_stop));
    root.insert(
        "agents".into(),
        match &scenario.agents {
            PopulationSpec::List(list) => Value::Array(
                list.iter()
                    .map(|a| json!({ "motivation": a.motivation, "success_rate": a.success_rate }))
                    .collect(),
            ),
            PopulationSpec::Generator {
                count,
                motivation,
                success_rate,
            } => json!({
                "count": count,
                "motivation": dist_value(motivation),
                "success_rate": dist_value(success_rate),
            }),
        },
    );
    root.insert(
        "tasks".into(),
        match &scenario.tasks {
            TaskPoolSpec::List(list) => Value::Array(
                list.iter()
                    .map(|t| json!({ "difficulty": t.difficulty, "cost": t.cost }))
                    .collect(),
            ),
            TaskPoolSpec::Generator {
                count,
                difficulty,
                cost,
            } => json!({
                "count": count,
                "difficulty": dist_value(difficulty),
                "cost": dist_value(cost),
            }),
        },
    );
    let mut text = serde_json::to_string_pretty(&Value::Object(root))
        .expect("scenario JSON serializes");
    text.push('\n');
    text
}
