//! Paired dynamic/static experiments: execution, CSV, summary and figure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use hdgame::cases::cti::{cti_condition_check, cti_experiment};
use hdgame::cases::sisgcg::{invariance_check, sisgcg_experiment, sisgcg_hypotheses, SisgcgConfig};
use hdgame::experiment::{Dataset, MeanSe, Model};
use hdgame::InitialDistribution;
use serde::Serialize;

use crate::config::{ExperimentConfig, ModelKind};
use crate::error::{io_error, HarnessError, Result};
use crate::svg;

pub const CSV_HEADER: [&str; 6] = [
    "model",
    "trial",
    "t",
    "count_ones",
    "at_all_ones",
    "infected_fraction",
];

/// Tolerance on the mean infected fraction when comparing it with the
/// reference infection level.
pub const INFECTION_TOL: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub property: String,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    fn new(property: &str, passed: bool, detail: String) -> Self {
        Self {
            property: property.to_string(),
            passed,
            detail,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelSeries {
    pub mean_count: Vec<f64>,
    pub se_count: Vec<f64>,
    pub all_ones_rate: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_infected: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub se_infected: Option<Vec<f64>>,
}

impl ModelSeries {
    fn of(data: &Dataset, model: Model) -> Self {
        let count = data.mean_count(model);
        let infected = data.mean_infected(model);
        Self {
            mean_count: count.iter().map(|m| m.mean).collect(),
            se_count: count.iter().map(|m| m.se).collect(),
            all_ones_rate: data.all_ones_rate(model).iter().map(|m| m.mean).collect(),
            mean_infected: infected
                .as_ref()
                .map(|v| v.iter().map(|m| m.mean).collect()),
            se_infected: infected.as_ref().map(|v| v.iter().map(|m| m.se).collect()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

pub const TOOL: ToolInfo = ToolInfo {
    name: env!("CARGO_PKG_NAME"),
    version: env!("CARGO_PKG_VERSION"),
};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub tool: ToolInfo,
    pub config: ExperimentConfig,
    pub n: usize,
    /// Latest step, over all dynamic trials, at which the susceptible
    /// fraction first entered `[0, γ/β₁]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entry_time: Option<usize>,
    /// First step of the window where the mean-count comparison is asserted.
    pub compared_from: usize,
    pub dynamic: ModelSeries,
    #[serde(rename = "static")]
    pub reference: ModelSeries,
    pub verdicts: Vec<Verdict>,
    pub passed: bool,
}

pub struct ExperimentOutput {
    pub dataset: Dataset,
    pub summary: Summary,
    pub csv: PathBuf,
    pub summary_path: PathBuf,
    pub figure: PathBuf,
}

/// Runs the paired trials on a pool of `cfg.parallelism` threads. Results do
/// not depend on the thread count.
pub fn simulate(cfg: &ExperimentConfig) -> Result<Dataset> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| crate::error::config_error("parallelism", e.to_string()))?;
    let rule = cfg.rule();
    let pi = InitialDistribution::uniform(cfg.graph.n);
    pool.install(|| match cfg.model() {
        ModelKind::Cti => {
            let game = cfg.cti_config()?.expect("cti model");
            Ok(cti_experiment(
                &game,
                &rule,
                &pi,
                cfg.horizon,
                cfg.trials,
                cfg.seed,
            )?)
        }
        ModelKind::Sis => {
            let game = cfg.sis_config()?.expect("sis model");
            Ok(sisgcg_experiment(
                &game,
                &rule,
                &pi,
                cfg.horizon,
                cfg.trials,
                cfg.seed,
            )?)
        }
    })
}

/// Writes one row per (model, trial, t). Floats use the shortest
/// round-trip representation, so the bytes are a function of the data.
pub fn write_csv(data: &Dataset, out: impl Write) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in &data.records {
        for t in 0..r.len() {
            let infected = r
                .infected
                .as_ref()
                .map(|v| v[t].to_string())
                .unwrap_or_default();
            w.write_record([
                r.model.as_str(),
                &r.trial.to_string(),
                &t.to_string(),
                &r.count_ones[t].to_string(),
                if r.at_all_ones[t] { "1" } else { "0" },
                &infected,
            ])?;
        }
    }
    w.flush()
}

/// Smallest `dynamic − (static − 2·pooled SE)` over `t ≥ from`, with the
/// step where it occurs. The pooled SE is `sqrt(se_d² + se_s²)`.
pub fn count_dominance_slack(
    dynamic: &[MeanSe],
    reference: &[MeanSe],
    from: usize,
) -> Option<(usize, f64)> {
    (from..dynamic.len())
        .map(|t| {
            let (d, s) = (dynamic[t], reference[t]);
            let pooled = (d.se * d.se + s.se * s.se).sqrt();
            (t, d.mean - (s.mean - 2.0 * pooled))
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

fn dominance_verdict(data: &Dataset, from: usize) -> Verdict {
    let slack = count_dominance_slack(
        &data.mean_count(Model::Dynamic),
        &data.mean_count(Model::Static),
        from,
    );
    match slack {
        Some((t, s)) => Verdict::new(
            "mean-count-dominance",
            s >= 0.0,
            format!("for t >= {from}: smallest slack {s:.6} at t = {t}"),
        ),
        None => Verdict::new(
            "mean-count-dominance",
            false,
            format!("window t >= {from} is empty"),
        ),
    }
}

/// Latest entry time over trials and whether every trial stays inside.
pub fn entry_time(cfg: &SisgcgConfig, data: &Dataset) -> (Option<usize>, bool) {
    let mut latest = Some(0);
    let mut holds = true;
    for r in data.of(Model::Dynamic) {
        let s: Vec<f64> = r
            .infected
            .as_ref()
            .expect("dynamic side records infection")
            .iter()
            .map(|i| 1.0 - i)
            .collect();
        let report = invariance_check(cfg, &s);
        holds &= report.holds;
        latest = match (latest, report.entry_time) {
            (Some(a), Some(b)) => Some(a.max(b)),
            _ => None,
        };
    }
    (latest, holds)
}

pub fn summarize(cfg: &ExperimentConfig, data: &Dataset) -> Result<Summary> {
    let mut verdicts = Vec::new();
    let mut entry = None;
    let mut from = cfg.check_from;
    let last = data.horizon - 1;
    match cfg.model() {
        ModelKind::Cti => {
            let game = cfg.cti_config()?.expect("cti model");
            let c = cti_condition_check(&game);
            verdicts.push(Verdict::new(
                "strict-equilibrium-condition",
                c.strict_nash_guaranteed,
                "lower bound exceeds c_i/|N_i| for every firm".into(),
            ));
            verdicts.push(Verdict::new(
                "unique-maximizer-condition",
                c.unique_maximizer_guaranteed,
                "lower bound exceeds 2c_i/|N_i| for every firm".into(),
            ));
        }
        ModelKind::Sis => {
            let game = cfg.sis_config()?.expect("sis model");
            let h = sisgcg_hypotheses(&game);
            verdicts.push(Verdict::new(
                "stability-hypotheses",
                h.all(),
                format!(
                    "epidemic persists: {}, reference prefers ones: {}, initially infected: {}",
                    h.epidemic_persists, h.reference_prefers_ones, h.initially_infected
                ),
            ));
            let (t_bar, holds) = entry_time(&game, data);
            verdicts.push(Verdict::new(
                "susceptible-invariance",
                holds,
                match t_bar {
                    Some(t) => format!("every trial enters [0, gamma/beta1] by t = {t} and stays"),
                    None => "some trial never enters [0, gamma/beta1]".into(),
                },
            ));
            let infected = data
                .mean_infected(Model::Dynamic)
                .expect("dynamic side records infection");
            let threshold = game.reference_infection() - INFECTION_TOL;
            let worst = t_bar.and_then(|t| {
                (t..data.horizon)
                    .map(|s| (s, infected[s].mean))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
            });
            verdicts.push(match worst {
                Some((t, v)) => Verdict::new(
                    "mean-infection-above-reference",
                    v > threshold,
                    format!("smallest mean infection {v:.6} at t = {t}, threshold {threshold:.6}"),
                ),
                None => Verdict::new(
                    "mean-infection-above-reference",
                    false,
                    "no entry time".into(),
                ),
            });
            entry = t_bar;
            from = from.max(t_bar.unwrap_or(data.horizon));
        }
    }
    verdicts.push(dominance_verdict(data, from));
    let rate = |m| data.all_ones_rate(m)[last].mean;
    let (d, s) = (rate(Model::Dynamic), rate(Model::Static));
    verdicts.push(Verdict::new(
        "terminal-all-ones",
        d >= s,
        format!("P(all ones at t = {last}): dynamic {d:.4}, static {s:.4}"),
    ));
    let passed = verdicts.iter().all(|v| v.passed);
    Ok(Summary {
        tool: TOOL,
        config: cfg.clone(),
        n: data.n,
        entry_time: entry,
        compared_from: from,
        dynamic: ModelSeries::of(data, Model::Dynamic),
        reference: ModelSeries::of(data, Model::Static),
        verdicts,
        passed,
    })
}

/// Runs the experiment and writes `results.csv`, `summary.json` and
/// `figure.svg` into `cfg.out`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let dataset = simulate(cfg)?;
    let summary = summarize(cfg, &dataset)?;
    let dir = &cfg.out;
    fs::create_dir_all(dir).map_err(io_error(dir))?;

    let csv = dir.join("results.csv");
    let file = fs::File::create(&csv).map_err(io_error(&csv))?;
    write_csv(&dataset, std::io::BufWriter::new(file)).map_err(io_error(&csv))?;

    let summary_path = dir.join("summary.json");
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_file(&summary_path, json.as_bytes())?;

    let figure = dir.join("figure.svg");
    write_file(&figure, svg::render(&dataset, &summary).as_bytes())?;
    Ok(ExperimentOutput {
        dataset,
        summary,
        csv,
        summary_path,
        figure,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::config_for;
    use crate::config::ExperimentKind;

    fn small(kind: ExperimentKind, extra: &[&str]) -> ExperimentConfig {
        let mut o: Vec<String> = ["seed=5", "trials=4", "T=30"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        o.extend(extra.iter().map(|s| s.to_string()));
        config_for(kind, &o).unwrap()
    }

    #[test]
    fn csv_rows_and_schema() {
        let cfg = small(ExperimentKind::SisFig2, &["graph.n=5", "substeps=20"]);
        let data = simulate(&cfg).unwrap();
        let mut buf = Vec::new();
        write_csv(&data, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("model,trial,t,count_ones,at_all_ones,infected_fraction")
        );
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), 2 * 4 * 30);
        assert!(rows[..120]
            .iter()
            .all(|r| r.starts_with("dynamic,") && !r.ends_with(',')));
        assert!(rows[120..]
            .iter()
            .all(|r| r.starts_with("static,") && r.ends_with(',')));
    }

    #[test]
    fn slack_uses_pooled_standard_error() {
        let d = [MeanSe { mean: 1.0, se: 0.3 }, MeanSe { mean: 2.0, se: 0.0 }];
        let s = [MeanSe { mean: 2.0, se: 0.4 }, MeanSe { mean: 1.0, se: 0.0 }];
        let (t, slack) = count_dominance_slack(&d, &s, 0).unwrap();
        assert_eq!(t, 0);
        assert!((slack - 0.0).abs() < 1e-12);
        assert_eq!(count_dominance_slack(&d, &s, 1), Some((1, 1.0)));
        assert_eq!(count_dominance_slack(&d, &s, 2), None);
    }

    #[test]
    fn summary_records_config_and_verdicts() {
        let cfg = small(ExperimentKind::CtiFig1, &["check_from=10"]);
        let data = simulate(&cfg).unwrap();
        let summary = summarize(&cfg, &data).unwrap();
        let json: serde_json::Value = serde_json::to_value(&summary).unwrap();
        assert_eq!(json["config"]["T"], 30);
        assert_eq!(json["config"]["model"], "cti");
        assert_eq!(json["tool"]["version"], env!("CARGO_PKG_VERSION"));
        assert_eq!(json["dynamic"]["mean_count"].as_array().unwrap().len(), 30);
        let names: Vec<&str> = summary
            .verdicts
            .iter()
            .map(|v| v.property.as_str())
            .collect();
        assert!(names.contains(&"mean-count-dominance") && names.contains(&"terminal-all-ones"));
        assert!(summary.verdicts[0].passed && summary.verdicts[1].passed);
    }
}
