use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{BenchError, Config, NamedGraph};
use crate::agent::{
    baseline_rollout, exhaustive_search, infer, train, AgentError, Hyperparams, Policy,
};
use crate::compiler::{compile_log, fidelity_report, GenerationSequence, HardwareParams, Metrics};
use crate::graph::ActionRecord;
use crate::qnet::{QNetParams, Scorer};
use crate::verify::{verify_sequence, DEFAULT_CAP, DEFAULT_SEEDS};

/// Marker for a reduction ratio whose reference value is zero.
pub const NOT_APPLICABLE: &str = "NA";
/// `verified` column value when the statevector would exceed the qubit cap.
pub const SKIPPED: &str = "skipped: cap exceeded";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolicySpec {
    Rl,
    Random(u64),
    Greedy,
    Exhaustive,
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::Rl => write!(f, "rl"),
            PolicySpec::Random(seed) => write!(f, "random:{seed}"),
            PolicySpec::Greedy => write!(f, "greedy"),
            PolicySpec::Exhaustive => write!(f, "exhaustive"),
        }
    }
}

impl FromStr for PolicySpec {
    type Err = BenchError;

    /// `rl`, `greedy`, `exhaustive`, `random` (seed 0) or `random:SEED`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None => match s {
                "rl" => Ok(PolicySpec::Rl),
                "random" => Ok(PolicySpec::Random(0)),
                "greedy" => Ok(PolicySpec::Greedy),
                "exhaustive" => Ok(PolicySpec::Exhaustive),
                _ => Err(BenchError::Config(format!("unknown policy '{s}'"))),
            },
            Some(("random", seed)) => seed
                .parse()
                .map(PolicySpec::Random)
                .map_err(|_| BenchError::Config(format!("bad random seed in '{s}'"))),
            _ => Err(BenchError::Config(format!("unknown policy '{s}'"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CompileOptions {
    pub hw: HardwareParams,
    pub alpha: f64,
    pub rf_frac: f64,
    /// Largest `V + N_e` that is verified on a statevector.
    pub cap: usize,
    pub verify_seeds: u64,
    pub search_budget: usize,
    /// Required by [`PolicySpec::Rl`].
    pub params: Option<QNetParams>,
}

impl Default for CompileOptions {
    fn default() -> Self {
        let hp = Hyperparams::default();
        CompileOptions {
            hw: HardwareParams::default(),
            alpha: hp.alpha,
            rf_frac: hp.receptive_fraction,
            cap: DEFAULT_CAP,
            verify_seeds: DEFAULT_SEEDS,
            search_budget: 2_000_000,
            params: None,
        }
    }
}

/// One compiled graph. Field order is the CSV column order; `wall_ms` is the
/// only column that varies between identical runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub graph: String,
    pub source: String,
    #[serde(rename = "V")]
    pub v: usize,
    #[serde(rename = "E")]
    pub e: usize,
    pub policy: String,
    #[serde(rename = "T_gen_ns")]
    pub t_gen_ns: f64,
    #[serde(rename = "N_e")]
    pub n_e: usize,
    #[serde(rename = "N_CZ")]
    pub n_cz: usize,
    #[serde(rename = "F_de")]
    pub f_de: f64,
    #[serde(rename = "F_CZ")]
    pub f_cz: f64,
    #[serde(rename = "P_remain")]
    pub p_remain: f64,
    /// `yes` or [`SKIPPED`].
    pub verified: String,
    pub wall_ms: f64,
}

impl RunRow {
    pub const HEADER: &'static str =
        "graph,source,V,E,policy,T_gen_ns,N_e,N_CZ,F_de,F_CZ,P_remain,verified,wall_ms";
}

#[derive(Clone, Debug)]
pub struct Compiled {
    pub row: RunRow,
    pub log: Vec<ActionRecord>,
    pub sequence: GenerationSequence,
    pub metrics: Metrics,
}

fn policy_log(
    graph: &NamedGraph,
    policy: &PolicySpec,
    opts: &CompileOptions,
) -> Result<Vec<ActionRecord>, BenchError> {
    let g = &graph.graph;
    Ok(match policy {
        PolicySpec::Rl => {
            let params = opts
                .params
                .clone()
                .ok_or_else(|| BenchError::Config("policy rl requires a checkpoint".into()))?;
            let hp = Hyperparams { receptive_fraction: opts.rf_frac, alpha: opts.alpha, ..Default::default() };
            hp.validate()?;
            infer(g, &mut Scorer::new(params), &hp, &opts.hw)?.log
        }
        PolicySpec::Random(seed) => baseline_rollout(g, Policy::Random(*seed), &opts.hw, opts.alpha)?.0,
        PolicySpec::Greedy => baseline_rollout(g, Policy::Greedy, &opts.hw, opts.alpha)?.0,
        PolicySpec::Exhaustive => exhaustive_search(g, &opts.hw, opts.alpha, opts.search_budget)?.log,
    })
}

/// Compiles `graph` under `policy`, verifying whenever `V + N_e` fits the cap.
/// A failed verification is an error, never a row.
pub fn run_compile(
    graph: &NamedGraph,
    policy: &PolicySpec,
    opts: &CompileOptions,
) -> Result<Compiled, BenchError> {
    opts.hw.validate()?;
    let start = Instant::now();
    let log = policy_log(graph, policy, opts)?;
    let (sequence, metrics) = compile_log(&log, &graph.graph, &opts.hw)?;

    let verified = if graph.graph.vertex_count() + metrics.n_e <= opts.cap {
        let report = verify_sequence(&graph.graph, &log, opts.verify_seeds, opts.cap)?;
        if !report.passed {
            return Err(BenchError::VerificationFailed {
                graph: graph.name.clone(),
                policy: policy.to_string(),
                min_fidelity: report.min_fidelity(),
            });
        }
        "yes".to_string()
    } else {
        SKIPPED.to_string()
    };

    let fid = fidelity_report(&metrics, &opts.hw);
    let row = RunRow {
        graph: graph.name.clone(),
        source: graph.source.clone(),
        v: graph.graph.vertex_count(),
        e: graph.graph.edge_count(),
        policy: policy.to_string(),
        t_gen_ns: metrics.t_gen_ns(),
        n_e: metrics.n_e,
        n_cz: metrics.n_cz,
        f_de: fid.f_de,
        f_cz: fid.f_cz,
        p_remain: fid.p_remain,
        verified,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    Ok(Compiled { row, log, sequence, metrics })
}

/// `small` below 50 vertices, `medium` up to 200, `large` beyond.
pub fn size_bucket(v: usize) -> &'static str {
    match v {
        0..=49 => "small",
        50..=200 => "medium",
        _ => "large",
    }
}

fn reduction(value: f64, reference: f64) -> Option<f64> {
    (reference > 0.0).then(|| 1.0 - value / reference)
}

fn mean(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let xs: Vec<f64> = xs.flatten().collect();
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Reduction ratios of one policy against the reference; `scope` is a graph
/// name or `bucket:<size>`. Bucket rows average the applicable per-graph ratios.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub scope: String,
    pub policy: String,
    pub reference: String,
    #[serde(rename = "T_gen_reduction")]
    pub t_gen: Option<f64>,
    #[serde(rename = "N_e_reduction")]
    pub n_e: Option<f64>,
    #[serde(rename = "N_CZ_reduction")]
    pub n_cz: Option<f64>,
    pub graphs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub rows: Vec<RunRow>,
    pub ratios: Vec<RatioRow>,
    /// Least-squares slope of `N_CZ` against `N_e` over all rows; `None` when `N_e` is constant.
    pub n_cz_per_emitter: Option<f64>,
}

/// Compiles every graph under every policy and reports reductions against `reference`.
/// Rows are ordered by graph then policy.
pub fn run_compare(
    graphs: &[NamedGraph],
    policies: &[PolicySpec],
    reference: &PolicySpec,
    opts: &CompileOptions,
) -> Result<Comparison, BenchError> {
    if !policies.contains(reference) {
        return Err(BenchError::Config(format!("reference policy {reference} is not among the compared policies")));
    }
    let mut graphs: Vec<&NamedGraph> = graphs.iter().collect();
    graphs.sort_by(|a, b| a.name.cmp(&b.name));
    let mut policies: Vec<PolicySpec> = policies.to_vec();
    policies.sort_by_key(|p| p.to_string());
    policies.dedup();

    let mut rows = Vec::new();
    for g in &graphs {
        for p in &policies {
            rows.push(run_compile(g, p, opts)?.row);
        }
    }

    let reference_name = reference.to_string();
    let mut per_graph = Vec::new();
    for g in &graphs {
        let of = |p: &str| rows.iter().find(|r| r.graph == g.name && r.policy == p).expect("every pair compiled");
        let base = of(&reference_name);
        for p in &policies {
            let r = of(&p.to_string());
            per_graph.push((
                size_bucket(r.v),
                RatioRow {
                    scope: g.name.clone(),
                    policy: r.policy.clone(),
                    reference: reference_name.clone(),
                    t_gen: reduction(r.t_gen_ns, base.t_gen_ns),
                    n_e: reduction(r.n_e as f64, base.n_e as f64),
                    n_cz: reduction(r.n_cz as f64, base.n_cz as f64),
                    graphs: 1,
                },
            ));
        }
    }

    let mut ratios: Vec<RatioRow> = per_graph.iter().map(|(_, r)| r.clone()).collect();
    for bucket in ["small", "medium", "large"] {
        for p in &policies {
            let name = p.to_string();
            let members: Vec<&RatioRow> =
                per_graph.iter().filter(|(b, r)| *b == bucket && r.policy == name).map(|(_, r)| r).collect();
            if members.is_empty() {
                continue;
            }
            ratios.push(RatioRow {
                scope: format!("bucket:{bucket}"),
                policy: name,
                reference: reference_name.clone(),
                t_gen: mean(members.iter().map(|r| r.t_gen)),
                n_e: mean(members.iter().map(|r| r.n_e)),
                n_cz: mean(members.iter().map(|r| r.n_cz)),
                graphs: members.len(),
            });
        }
    }

    let n_cz_per_emitter = slope(rows.iter().map(|r| (r.n_e as f64, r.n_cz as f64)));
    Ok(Comparison { rows, ratios, n_cz_per_emitter })
}

fn slope(points: impl Iterator<Item = (f64, f64)>) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(BenchError::Config(format!("unknown format '{s}'"))),
        }
    }
}

fn na(x: Option<f64>) -> String {
    x.map_or_else(|| NOT_APPLICABLE.to_string(), |v| v.to_string())
}

fn csv_bytes(write: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> Result<String, BenchError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    write(&mut w).map_err(|e| BenchError::Report(e.to_string()))?;
    let bytes = w.into_inner().map_err(|e| BenchError::Report(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| BenchError::Report(e.to_string()))
}

fn json(value: &impl Serialize) -> Result<String, BenchError> {
    serde_json::to_string_pretty(value).map(|s| s + "\n").map_err(|e| BenchError::Report(e.to_string()))
}

/// Renders rows as CSV with [`RunRow::HEADER`] or as a JSON array of the same fields.
pub fn render_rows(rows: &[RunRow], format: OutputFormat) -> Result<String, BenchError> {
    match format {
        OutputFormat::Json => json(&rows),
        OutputFormat::Csv if rows.is_empty() => Ok(format!("{}\n", RunRow::HEADER)),
        OutputFormat::Csv => csv_bytes(|w| rows.iter().try_for_each(|r| w.serialize(r))),
    }
}

impl Comparison {
    /// CSV: the run rows, a blank line, the ratio table, a blank line and the slope diagnostic.
    pub fn render(&self, format: OutputFormat) -> Result<String, BenchError> {
        if format == OutputFormat::Json {
            return json(self);
        }
        let mut out = render_rows(&self.rows, format)?;
        out.push('\n');
        out += &csv_bytes(|w| {
            w.write_record(["scope", "policy", "reference", "T_gen_reduction", "N_e_reduction", "N_CZ_reduction", "graphs"])?;
            for r in &self.ratios {
                w.write_record([
                    r.scope.clone(),
                    r.policy.clone(),
                    r.reference.clone(),
                    na(r.t_gen),
                    na(r.n_e),
                    na(r.n_cz),
                    r.graphs.to_string(),
                ])?;
            }
            Ok(())
        })?;
        out += &format!("\ndiagnostic,value\nN_CZ_per_emitter_slope,{}\n", na(self.n_cz_per_emitter));
        Ok(out)
    }
}

#[derive(Clone, Debug)]
pub struct TrainSummary {
    pub episodes: usize,
    pub final_epsilon: f64,
    pub wall: Duration,
    pub graphs: Vec<String>,
}

/// Trains on the configured graphs and writes the checkpoint and the episode log.
/// On divergence the partial log is still written and the error is returned.
pub fn run_train(cfg: &Config, checkpoint: &Path, log_path: &Path) -> Result<TrainSummary, BenchError> {
    let graphs = cfg.load_graphs()?;
    let start = Instant::now();
    let states: Vec<_> = graphs.iter().map(|g| g.graph.clone()).collect();
    let (params, log) = match train(&states, &cfg.train, &cfg.hardware) {
        Ok(out) => out,
        Err(AgentError::Divergence { episode, source, log }) => {
            fs::write(log_path, log.to_csv()).map_err(BenchError::io(log_path))?;
            return Err(AgentError::Divergence { episode, source, log }.into());
        }
        Err(e) => return Err(e.into()),
    };
    fs::write(log_path, log.to_csv()).map_err(BenchError::io(log_path))?;
    let file = fs::File::create(checkpoint).map_err(BenchError::io(checkpoint))?;
    params.save(std::io::BufWriter::new(file)).map_err(BenchError::io(checkpoint))?;
    Ok(TrainSummary {
        episodes: log.rows.len(),
        final_epsilon: log.rows.last().map_or(cfg.train.epsilon0, |r| r.epsilon),
        wall: start.elapsed(),
        graphs: graphs.into_iter().map(|g| g.name).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{GraphKind, GraphSpec};

    fn named(kind: GraphKind, n: usize) -> NamedGraph {
        NamedGraph::from_spec(&GraphSpec::new(kind, n, 0)).unwrap()
    }

    #[test]
    fn greedy_on_path_four() {
        let c = run_compile(&named(GraphKind::Path, 4), &PolicySpec::Greedy, &CompileOptions::default()).unwrap();
        assert_eq!((c.row.n_e, c.row.n_cz), (1, 0));
        assert_eq!(c.row.verified, "yes");
        assert_eq!(c.row.source, crate::bench::SYNTHETIC);
    }

    #[test]
    fn large_graphs_skip_verification() {
        let c = run_compile(&named(GraphKind::Path, 200), &PolicySpec::Greedy, &CompileOptions::default()).unwrap();
        assert_eq!(c.row.verified, SKIPPED);
    }

    #[test]
    fn rl_without_checkpoint_is_a_config_error() {
        let err = run_compile(&named(GraphKind::Path, 4), &PolicySpec::Rl, &CompileOptions::default()).unwrap_err();
        assert!(matches!(err, BenchError::Config(_)));
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn random_rows_repeat_except_wall_time() {
        let g = named(GraphKind::Cycle, 6);
        let opts = CompileOptions::default();
        let mut a = run_compile(&g, &PolicySpec::Random(7), &opts).unwrap().row;
        let mut b = run_compile(&g, &PolicySpec::Random(7), &opts).unwrap().row;
        a.wall_ms = 0.0;
        b.wall_ms = 0.0;
        assert_eq!(render_rows(&[a], OutputFormat::Csv).unwrap(), render_rows(&[b], OutputFormat::Csv).unwrap());
    }

    #[test]
    fn csv_header_is_fixed() {
        let c = run_compile(&named(GraphKind::Star, 3), &PolicySpec::Exhaustive, &CompileOptions::default()).unwrap();
        let text = render_rows(&[c.row], OutputFormat::Csv).unwrap();
        assert_eq!(text.lines().next().unwrap(), RunRow::HEADER);
        assert_eq!(render_rows(&[], OutputFormat::Csv).unwrap().trim_end(), RunRow::HEADER);
    }

    #[test]
    fn self_comparison_has_zero_ratios() {
        let graphs = [named(GraphKind::Path, 5), named(GraphKind::Star, 4)];
        let cmp = run_compare(&graphs, &[PolicySpec::Greedy], &PolicySpec::Greedy, &CompileOptions::default()).unwrap();
        assert_eq!(cmp.rows.len(), 2);
        for r in &cmp.ratios {
            assert_eq!(r.t_gen, Some(0.0));
            assert_eq!(r.n_e, Some(0.0));
            // Neither graph needs an emitter-emitter CZ, so the ratio is undefined.
            assert_eq!(r.n_cz, None);
        }
        assert!(cmp.render(OutputFormat::Csv).unwrap().contains(",NA,"));
    }

    #[test]
    fn two_graphs_two_policies() {
        let graphs = [named(GraphKind::Cycle, 5), named(GraphKind::Path, 5)];
        let policies = [PolicySpec::Random(1), PolicySpec::Greedy];
        let cmp = run_compare(&graphs, &policies, &PolicySpec::Random(1), &CompileOptions::default()).unwrap();
        assert_eq!(cmp.rows.len(), 4);
        let order: Vec<(&str, &str)> = cmp.rows.iter().map(|r| (r.graph.as_str(), r.policy.as_str())).collect();
        assert_eq!(order, [("cycle-5", "greedy"), ("cycle-5", "random:1"), ("path-5", "greedy"), ("path-5", "random:1")]);
        assert_eq!(cmp.ratios.iter().filter(|r| r.scope == "bucket:small").count(), 2);
        assert!(run_compare(&graphs, &[PolicySpec::Greedy], &PolicySpec::Exhaustive, &CompileOptions::default()).is_err());
    }

    #[test]
    fn ratio_arithmetic() {
        assert_eq!(reduction(3.0, 4.0), Some(0.25));
        assert_eq!(reduction(3.0, 0.0), None);
        assert_eq!(mean([Some(0.5), None, Some(0.0)].into_iter()), Some(0.25));
        assert_eq!(slope([(1.0, 0.0), (2.0, 1.0), (3.0, 2.0)].into_iter()), Some(1.0));
        assert_eq!(slope([(1.0, 0.0), (1.0, 1.0)].into_iter()), None);
        assert_eq!(size_bucket(49), "small");
        assert_eq!(size_bucket(200), "medium");
        assert_eq!(size_bucket(201), "large");
    }

    #[test]
    fn policy_text_round_trips() {
        for p in [PolicySpec::Rl, PolicySpec::Random(3), PolicySpec::Greedy, PolicySpec::Exhaustive] {
            assert_eq!(p.to_string().parse::<PolicySpec>().unwrap(), p);
        }
        assert_eq!("random".parse::<PolicySpec>().unwrap(), PolicySpec::Random(0));
        assert!("random:x".parse::<PolicySpec>().is_err());
        assert!("clever".parse::<PolicySpec>().is_err());
    }
}
