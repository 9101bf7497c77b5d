//! Experiment configuration: parsing, overrides, defaults and validation.

use std::path::{Path, PathBuf};

use hdgame::cases::cti::{CtiConfig, ValueProcess};
use hdgame::cases::sisgcg::SisgcgConfig;
use hdgame::{Graph, LearningRule};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{config_error, HarnessError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    CtiFig1,
    SisFig2,
    Custom,
}

impl ExperimentKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "cti-fig1" => Ok(Self::CtiFig1),
            "sis-fig2" => Ok(Self::SisFig2),
            "custom" => Ok(Self::Custom),
            other => Err(config_error(
                "experiment",
                format!("unknown experiment `{other}`"),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Cti,
    Sis,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    #[serde(default)]
    pub kind: GraphKind,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edges: Vec<(usize, usize)>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphKind {
    #[default]
    Ring,
    Complete,
    EdgeList,
}

impl GraphSpec {
    pub fn ring(n: usize) -> Self {
        Self {
            kind: GraphKind::Ring,
            n,
            edges: Vec::new(),
        }
    }

    pub fn build(&self) -> Result<Graph> {
        if self.n == 0 || self.n > 64 {
            return Err(config_error(
                "graph.n",
                format!("must lie in 1..=64, got {}", self.n),
            ));
        }
        if self.kind != GraphKind::EdgeList && !self.edges.is_empty() {
            return Err(config_error(
                "graph.edges",
                "only valid with graph.kind = edge-list",
            ));
        }
        Ok(match self.kind {
            GraphKind::Ring => Graph::ring(self.n),
            GraphKind::Complete => Graph::complete(self.n),
            GraphKind::EdgeList => Graph::from_edges(self.n, &self.edges)
                .map_err(|e| config_error("graph.edges", e.to_string()))?,
        })
    }
}

/// Scalar cost shared by every node, or one cost per node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Costs {
    Uniform(f64),
    PerNode(Vec<f64>),
}

impl Costs {
    fn expand(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            Costs::Uniform(c) => Ok(vec![*c; n]),
            Costs::PerNode(v) if v.len() == n => Ok(v.clone()),
            Costs::PerNode(v) => Err(config_error(
                "costs",
                format!("expected {n} per-node costs, got {}", v.len()),
            )),
        }
    }
}

/// The file format. Every field is optional so that defaults can be filled
/// per experiment kind; unknown keys are rejected.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Option<ExperimentKind>,
    model: Option<ModelKind>,
    graph: Option<GraphSpec>,
    costs: Option<Costs>,
    value: Option<ValueProcess>,
    value_lower_bound: Option<f64>,
    tau: Option<f64>,
    trials: Option<usize>,
    #[serde(rename = "T")]
    horizon: Option<usize>,
    seed: Option<u64>,
    gamma: Option<f64>,
    beta0: Option<f64>,
    beta1: Option<f64>,
    lambda_epsilon: Option<f64>,
    lambda: Option<f64>,
    #[serde(rename = "S0")]
    s0: Option<f64>,
    substeps: Option<usize>,
    check_from: Option<usize>,
    parallelism: Option<usize>,
    out: Option<PathBuf>,
}

const CTI_KEYS: &[&str] = &["costs", "value", "value_lower_bound"];
const SIS_KEYS: &[&str] = &[
    "gamma",
    "beta0",
    "beta1",
    "lambda_epsilon",
    "lambda",
    "S0",
    "substeps",
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CtiParams {
    pub costs: Costs,
    pub value: ValueProcess,
    /// Value used by the static reference game.
    pub value_lower_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SisParams {
    pub gamma: f64,
    pub beta0: f64,
    pub beta1: f64,
    /// Set when `lambda` was derived as `gamma/beta1 + lambda_epsilon`.
    pub lambda_epsilon: Option<f64>,
    pub lambda: f64,
    #[serde(rename = "S0")]
    pub s0: f64,
    pub substeps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelParams {
    Cti(CtiParams),
    Sis(SisParams),
}

/// Fully resolved configuration. Serialized verbatim into `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub graph: GraphSpec,
    #[serde(flatten)]
    pub params: ModelParams,
    pub tau: f64,
    pub trials: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub seed: u64,
    /// First step at which the mean-count comparison is asserted. For the
    /// epidemic model the measured entry time is used when it is later.
    pub check_from: usize,
    /// Initial distribution; only the uniform distribution is supported.
    pub initial: String,
    /// Worker threads; 0 means the rayon default.
    pub parallelism: usize,
    pub out: PathBuf,
    /// Keys whose values were filled by defaults that the reference setup
    /// does not specify.
    pub extrapolated: Vec<String>,
}

impl ExperimentConfig {
    pub fn model(&self) -> ModelKind {
        match self.params {
            ModelParams::Cti(_) => ModelKind::Cti,
            ModelParams::Sis(_) => ModelKind::Sis,
        }
    }

    pub fn rule(&self) -> LearningRule {
        LearningRule::log_linear(self.tau).expect("validated")
    }

    pub fn cti_config(&self) -> Result<Option<CtiConfig>> {
        let ModelParams::Cti(p) = &self.params else {
            return Ok(None);
        };
        let graph = self.graph.build()?;
        let costs = p.costs.expand(graph.num_nodes())?;
        CtiConfig::new(graph, costs, p.value.clone(), p.value_lower_bound)
            .map(Some)
            .map_err(HarnessError::from_core)
    }

    pub fn sis_config(&self) -> Result<Option<SisgcgConfig>> {
        let ModelParams::Sis(p) = &self.params else {
            return Ok(None);
        };
        SisgcgConfig::new(
            self.graph.build()?,
            p.gamma,
            p.beta0,
            p.beta1,
            p.lambda,
            p.s0,
            p.substeps,
        )
        .map(Some)
        .map_err(HarnessError::from_core)
    }
}

/// Reads a JSON config file, applies `key=value` overrides, and resolves it.
pub fn parse_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| config_error("<file>", format!("{}: {e}", path.display())))?;
    resolve_value(value, overrides)
}

/// Resolves a config for a named experiment from overrides alone.
pub fn config_for(kind: ExperimentKind, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut value = serde_json::json!({});
    set_key(
        &mut value,
        "experiment",
        Value::String(kind_name(kind).into()),
    )?;
    resolve_value(value, overrides)
}

fn kind_name(kind: ExperimentKind) -> &'static str {
    match kind {
        ExperimentKind::CtiFig1 => "cti-fig1",
        ExperimentKind::SisFig2 => "sis-fig2",
        ExperimentKind::Custom => "custom",
    }
}

pub fn resolve_value(mut value: Value, overrides: &[String]) -> Result<ExperimentConfig> {
    if !value.is_object() {
        return Err(config_error("<file>", "top level must be an object"));
    }
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| config_error("--set", format!("expected key=value, got `{item}`")))?;
        let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        set_key(&mut value, key.trim(), parsed)?;
    }
    let raw: RawConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let msg = e.inner().to_string();
        let path = e.path().to_string();
        let key = match unknown_field(&msg) {
            Some(field) if path == "." => field.to_string(),
            _ => path,
        };
        config_error_owned(&key, msg)
    })?;
    resolve(raw)
}

fn config_error_owned(key: &str, reason: String) -> HarnessError {
    HarnessError::Config {
        key: key.to_string(),
        reason,
    }
}

fn unknown_field(msg: &str) -> Option<&str> {
    let rest = msg.strip_prefix("unknown field `")?;
    rest.split('`').next()
}

/// Sets a dotted key such as `graph.n` inside a JSON object.
fn set_key(root: &mut Value, key: &str, v: Value) -> Result<()> {
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(config_error_owned(key, "empty key segment".into()));
        }
        let obj = node
            .as_object_mut()
            .ok_or_else(|| config_error_owned(key, "parent is not an object".into()))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), v);
            return Ok(());
        }
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

fn resolve(raw: RawConfig) -> Result<ExperimentConfig> {
    let experiment = raw.experiment.unwrap_or(ExperimentKind::Custom);
    let model = match (experiment, raw.model) {
        (ExperimentKind::CtiFig1, None | Some(ModelKind::Cti)) => ModelKind::Cti,
        (ExperimentKind::SisFig2, None | Some(ModelKind::Sis)) => ModelKind::Sis,
        (ExperimentKind::Custom, Some(m)) => m,
        (ExperimentKind::Custom, None) => {
            return Err(config_error(
                "model",
                "custom experiments must set model = cti | sis",
            ))
        }
        (_, Some(_)) => return Err(config_error("model", "conflicts with the named experiment")),
    };
    let mut extrapolated = vec!["initial".to_string()];
    let mut default_used = |key: &str, set: bool| {
        if !set {
            extrapolated.push(key.to_string());
        }
    };

    let set_keys = raw_keys(&raw);
    let foreign = match model {
        ModelKind::Cti => SIS_KEYS,
        ModelKind::Sis => CTI_KEYS,
    };
    if let Some(k) = foreign.iter().find(|k| set_keys.contains(k)) {
        return Err(config_error_owned(
            k,
            format!(
                "does not apply to the {} model",
                if model == ModelKind::Cti {
                    "cti"
                } else {
                    "sis"
                }
            ),
        ));
    }

    let seed = raw
        .seed
        .ok_or_else(|| config_error("seed", "a seed is required"))?;
    let trials = raw.trials.unwrap_or(match model {
        ModelKind::Cti => 25,
        ModelKind::Sis => 40,
    });
    if trials == 0 {
        return Err(config_error("trials", "must be at least 1"));
    }
    default_used("T", raw.horizon.is_some());
    let horizon = raw.horizon.unwrap_or(500);
    if horizon == 0 {
        return Err(config_error("T", "must be at least 1"));
    }
    let tau = raw.tau.unwrap_or(match model {
        ModelKind::Cti => 0.1,
        ModelKind::Sis => 0.3,
    });
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(config_error("tau", format!("must be positive, got {tau}")));
    }
    let graph = raw.graph.unwrap_or(GraphSpec::ring(match model {
        ModelKind::Cti => 10,
        ModelKind::Sis => 15,
    }));
    let n = graph.build()?.num_nodes();

    let params = match model {
        ModelKind::Cti => {
            let value = raw.value.unwrap_or(ValueProcess::BoundedUniform {
                base: 0.4,
                width: 0.1,
                epsilon: 0.001,
                per_agent: false,
            });
            let value_lower_bound = raw.value_lower_bound.unwrap_or_else(|| value.lower_bound());
            let p = CtiParams {
                costs: raw.costs.unwrap_or(Costs::Uniform(0.4)),
                value,
                value_lower_bound,
            };
            let costs = p.costs.expand(n)?;
            CtiConfig::new(graph.build()?, costs, p.value.clone(), p.value_lower_bound)
                .map_err(HarnessError::from_core)?;
            ModelParams::Cti(p)
        }
        ModelKind::Sis => {
            let gamma = raw.gamma.unwrap_or(0.25);
            let beta0 = raw.beta0.unwrap_or(0.9);
            let beta1 = raw.beta1.unwrap_or(0.45);
            if !(beta1 < beta0) {
                return Err(config_error(
                    "beta1",
                    format!(
                        "infection rates need 0 < beta1 < beta0, got beta1={beta1}, beta0={beta0}"
                    ),
                ));
            }
            let (lambda, lambda_epsilon) = match (raw.lambda, raw.lambda_epsilon) {
                (Some(_), Some(_)) => {
                    return Err(config_error(
                        "lambda",
                        "set either lambda or lambda_epsilon, not both",
                    ))
                }
                (Some(l), None) => (l, None),
                (None, eps) => {
                    let eps = eps.unwrap_or(1e-3);
                    (gamma / beta1 + eps, Some(eps))
                }
            };
            default_used("S0", raw.s0.is_some());
            default_used("substeps", raw.substeps.is_some());
            let p = SisParams {
                gamma,
                beta0,
                beta1,
                lambda_epsilon,
                lambda,
                s0: raw.s0.unwrap_or(0.99),
                substeps: raw.substeps.unwrap_or(100),
            };
            if !(p.s0 < 1.0) {
                return Err(config_error(
                    "S0",
                    format!("must lie in [0, 1), got {}", p.s0),
                ));
            }
            SisgcgConfig::new(
                graph.build()?,
                p.gamma,
                p.beta0,
                p.beta1,
                p.lambda,
                p.s0,
                p.substeps,
            )
            .map_err(HarnessError::from_core)?;
            ModelParams::Sis(p)
        }
    };

    let check_from = raw.check_from.unwrap_or(match model {
        ModelKind::Cti => 50,
        ModelKind::Sis => 0,
    });
    Ok(ExperimentConfig {
        experiment,
        graph,
        params,
        tau,
        trials,
        horizon,
        seed,
        check_from,
        initial: "uniform".into(),
        parallelism: raw.parallelism.unwrap_or(0),
        out: raw.out.unwrap_or_else(|| PathBuf::from("out")),
        extrapolated,
    })
}

fn raw_keys(raw: &RawConfig) -> Vec<&'static str> {
    let mut keys = Vec::new();
    let mut mark = |set: bool, k: &'static str| {
        if set {
            keys.push(k);
        }
    };
    mark(raw.costs.is_some(), "costs");
    mark(raw.value.is_some(), "value");
    mark(raw.value_lower_bound.is_some(), "value_lower_bound");
    mark(raw.gamma.is_some(), "gamma");
    mark(raw.beta0.is_some(), "beta0");
    mark(raw.beta1.is_some(), "beta1");
    mark(raw.lambda_epsilon.is_some(), "lambda_epsilon");
    mark(raw.lambda.is_some(), "lambda");
    mark(raw.s0.is_some(), "S0");
    mark(raw.substeps.is_some(), "substeps");
    keys
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn resolve_json(v: Value) -> Result<ExperimentConfig> {
        resolve_value(v, &[])
    }

    fn key_of(e: HarnessError) -> String {
        match e {
            HarnessError::Config { key, .. } => key,
            other => panic!("expected a config error, got {other}"),
        }
    }

    #[test]
    fn minimal_cti_file_fills_defaults() {
        let cfg = resolve_json(json!({"experiment": "cti-fig1", "seed": 1})).unwrap();
        assert_eq!(cfg.horizon, 500);
        assert_eq!(cfg.trials, 25);
        assert_eq!(cfg.tau, 0.1);
        assert_eq!(cfg.graph, GraphSpec::ring(10));
        assert_eq!(cfg.initial, "uniform");
        assert!(cfg.extrapolated.contains(&"T".to_string()));
        assert!(cfg.extrapolated.contains(&"initial".to_string()));
        let ModelParams::Cti(p) = &cfg.params else {
            panic!()
        };
        assert!((p.value_lower_bound - 0.401).abs() < 1e-15);
    }

    #[test]
    fn sis_defaults_derive_lambda() {
        let cfg = resolve_json(json!({"experiment": "sis-fig2", "seed": 1})).unwrap();
        let ModelParams::Sis(p) = &cfg.params else {
            panic!()
        };
        assert!((p.lambda - (0.25 / 0.45 + 1e-3)).abs() < 1e-15);
        assert_eq!(p.s0, 0.99);
        assert!(cfg.extrapolated.contains(&"S0".to_string()));
        let explicit = resolve_value(
            json!({"experiment": "sis-fig2", "seed": 1}),
            &["lambda=0.5".into()],
        )
        .unwrap();
        let ModelParams::Sis(p) = &explicit.params else {
            panic!()
        };
        assert_eq!((p.lambda, p.lambda_epsilon), (0.5, None));
    }

    #[test]
    fn guards_name_the_key() {
        let base = || json!({"experiment": "sis-fig2", "seed": 1});
        assert_eq!(
            key_of(resolve_value(base(), &["tau=0".into()]).unwrap_err()),
            "tau"
        );
        assert_eq!(
            key_of(resolve_value(base(), &["beta1=0.9".into()]).unwrap_err()),
            "beta1"
        );
        assert_eq!(
            key_of(resolve_value(base(), &["trials=0".into()]).unwrap_err()),
            "trials"
        );
        assert_eq!(
            key_of(resolve_value(base(), &["costs=0.3".into()]).unwrap_err()),
            "costs"
        );
        assert_eq!(
            key_of(resolve_value(base(), &["bogus=1".into()]).unwrap_err()),
            "bogus"
        );
        assert_eq!(
            key_of(resolve_json(json!({"experiment": "cti-fig1"})).unwrap_err()),
            "seed"
        );
        assert_eq!(
            key_of(resolve_json(json!({"seed": 1})).unwrap_err()),
            "model"
        );
        assert_eq!(
            key_of(
                resolve_value(
                    json!({"experiment": "cti-fig1", "seed": 1}),
                    &["costs=[0.4]".into()]
                )
                .unwrap_err()
            ),
            "costs"
        );
    }

    #[test]
    fn dotted_overrides_reach_nested_keys() {
        let cfg = resolve_value(
            json!({"experiment": "cti-fig1", "seed": 3}),
            &[
                "graph.kind=complete".into(),
                "graph.n=4".into(),
                "value={\"kind\":\"constant\",\"value\":0.5}".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.graph.kind, GraphKind::Complete);
        assert_eq!(cfg.cti_config().unwrap().unwrap().graph.degree(0), 3);
    }

    #[test]
    fn edge_list_graphs() {
        let cfg = resolve_json(json!({
            "model": "cti", "seed": 1,
            "graph": {"kind": "edge-list", "n": 3, "edges": [[0, 1], [1, 2]]}
        }))
        .unwrap();
        assert_eq!(cfg.cti_config().unwrap().unwrap().graph.num_edges(), 2);
        let bad = resolve_json(json!({
            "model": "cti", "seed": 1,
            "graph": {"kind": "edge-list", "n": 3, "edges": [[0, 0]]}
        }));
        assert_eq!(key_of(bad.unwrap_err()), "graph.edges");
    }
}
