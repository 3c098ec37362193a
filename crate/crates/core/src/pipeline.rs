//! End-to-end analysis: ingest or generate, then degree statistics,
//! communities, efficiency and the paired tests, in that order.
//!
//! The report is a pure function of the config. All maps are ordered and
//! every parallel reduction is index-ordered, so the serialized report is
//! byte-stable across runs and thread counts.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::communities::{
    composition, dcsbm_objective, fit_dcsbm, mixing_matrix, sweep_group_count, CompositionReport,
    MixingMatrix, ModularityScore, ModularityVariant, Partition, SweepRow, DEFAULT_RESTARTS,
};
use crate::efficiency::{assign_costs, compare_components, CostScheme, ElocPair};
use crate::error::{Error, Result};
use crate::graph::{largest_component, load_network, EcosystemGraph, IngestOptions, NodeKind};
use crate::stats::{
    bin_paired, ccdf, fit_power_law, ks_two_sample, marginal_homogeneity, wilcoxon_signed_rank,
    CcdfPoint, PairedTable, PowerLawFit, TestKind, TestResult,
};
use crate::synthgen::{generate_coupled, SynthParams};

pub const SCHEMA_VERSION: &str = "1.0.0";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputSource {
    Files { nodes: PathBuf, edges: PathBuf },
    Synthetic(SynthParams),
}

/// How the number of communities is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupSelection {
    Fixed(usize),
    /// Fit every count in `lo..=hi`; keep the highest standard modularity,
    /// the smaller count on ties.
    Sweep {
        lo: usize,
        hi: usize,
    },
}

impl Default for GroupSelection {
    fn default() -> Self {
        GroupSelection::Sweep { lo: 2, hi: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub input: InputSource,
    #[serde(default)]
    pub ingest: IngestOptions,
    #[serde(default)]
    pub scheme: CostScheme,
    #[serde(default)]
    pub groups: GroupSelection,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub seed: u64,
    /// Category count for the marginal homogeneity test.
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Power-law lower cutoff; defaults to each layer's smallest positive degree.
    #[serde(default)]
    pub xmin: Option<u64>,
}

fn default_restarts() -> usize {
    DEFAULT_RESTARTS
}

fn default_bins() -> usize {
    5
}

impl PipelineConfig {
    pub fn new(input: InputSource) -> Self {
        PipelineConfig {
            input,
            ingest: IngestOptions::default(),
            scheme: CostScheme::default(),
            groups: GroupSelection::default(),
            restarts: DEFAULT_RESTARTS,
            seed: 0,
            bins: default_bins(),
            xmin: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let InputSource::Synthetic(p) = &self.input {
            p.validate()?;
        }
        match self.groups {
            GroupSelection::Fixed(m) if m < 1 => return Err(Error::invalid("groups must be >= 1")),
            GroupSelection::Sweep { lo, hi } if lo < 2 || hi < lo => {
                return Err(Error::invalid(format!(
                    "sweep range {lo}..{hi} must satisfy 2 <= lo <= hi"
                )))
            }
            _ => {}
        }
        if self.restarts < 1 {
            return Err(Error::invalid("restarts must be >= 1"));
        }
        if self.bins < 2 {
            return Err(Error::invalid("bins must be >= 2"));
        }
        if self.xmin == Some(0) {
            return Err(Error::invalid("xmin must be >= 1"));
        }
        CostScheme::new(self.scheme.vv, self.scheme.vp, self.scheme.pp)?;
        Ok(())
    }
}

/// Pipeline stage, named in failure diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Ingest,
    Degree,
    Communities,
    Efficiency,
    Tests,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Degree => "degree",
            Stage::Communities => "communities",
            Stage::Efficiency => "efficiency",
            Stage::Tests => "tests",
            Stage::Output => "output",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
#[error("stage {stage} failed: {error}")]
pub struct PipelineError {
    pub stage: Stage,
    pub error: Error,
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, PipelineError>;
}

impl<T> AtStage<T> for Result<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, PipelineError> {
        self.map_err(|error| PipelineError { stage, error })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphSummary {
    pub nodes: usize,
    pub edges: usize,
    pub physical: usize,
    #[serde(rename = "virtual")]
    pub virtual_: usize,
    pub components: usize,
}

/// Degree distribution of one layer, degrees counted within that layer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeSection {
    pub nodes: usize,
    /// Nodes with no neighbour in the layer; left out of the CCDF and fit.
    pub isolated: usize,
    pub ccdf: Vec<CcdfPoint>,
    pub power_law: Option<PowerLawFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommunitySection {
    pub groups: usize,
    pub objective: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepRow>,
    pub modularity: BTreeMap<String, ModularityScore>,
    pub group_sizes: Vec<usize>,
    pub composition: CompositionReport,
    pub mixing: MixingMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficiencySection {
    pub scheme: CostScheme,
    pub physical_e_glob: f64,
    pub ecosystem_e_glob: f64,
    pub relative_difference: Option<f64>,
    pub difference_percent: Option<i64>,
    pub pairs: Vec<ElocPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestsSection {
    pub wilcoxon_signed_rank: TestResult,
    pub ks_two_sample: TestResult,
    pub marginal_homogeneity: TestResult,
    /// Binned table the marginal homogeneity test ran on, if any.
    pub mh_table: Option<PairedTable>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Seeds {
    pub run: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthgen: Option<u64>,
    pub restarts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub schema_version: String,
    pub config: PipelineConfig,
    pub seeds: Seeds,
    pub graph: GraphSummary,
    pub degree: BTreeMap<String, DegreeSection>,
    pub communities: CommunitySection,
    pub efficiency: EfficiencySection,
    pub tests: TestsSection,
}

/// Report plus the artifacts needed for the CSV sidecars.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub report: AnalysisReport,
    pub graph: EcosystemGraph,
    pub partition: Partition,
}

pub fn load_input(config: &PipelineConfig) -> Result<EcosystemGraph> {
    match &config.input {
        InputSource::Files { nodes, edges } => load_network(nodes, edges, config.ingest),
        InputSource::Synthetic(p) => {
            let g = generate_coupled(p)?;
            if config.ingest.restrict_to_largest_component {
                largest_component(&g)
            } else {
                Ok(g)
            }
        }
    }
}

/// Intra-layer degrees of every node of `kind`.
pub fn layer_degrees(g: &EcosystemGraph, kind: NodeKind) -> Vec<u64> {
    (0..g.node_count())
        .filter(|&i| g.kind(i) == kind)
        .map(|i| {
            g.neighbors(i)
                .iter()
                .filter(|&&j| g.kind(j) == kind)
                .count() as u64
        })
        .collect()
}

pub fn degree_section(
    g: &EcosystemGraph,
    kind: NodeKind,
    xmin: Option<u64>,
) -> Result<DegreeSection> {
    let all = layer_degrees(g, kind);
    let positive: Vec<u64> = all.iter().copied().filter(|&d| d > 0).collect();
    let mut section = DegreeSection {
        nodes: all.len(),
        isolated: all.len() - positive.len(),
        ccdf: Vec::new(),
        power_law: None,
        note: None,
    };
    if positive.is_empty() {
        section.note = Some(format!("no {kind} node has a {kind} neighbour"));
        return Ok(section);
    }
    section.ccdf = ccdf(&positive)?;
    let cut = xmin.unwrap_or_else(|| *positive.iter().min().expect("nonempty"));
    match fit_power_law(&positive, cut) {
        Ok(fit) => section.power_law = Some(fit),
        Err(e @ (Error::Degenerate(_) | Error::InvalidParameter(_))) => {
            section.note = Some(format!("power-law fit skipped: {e}"));
        }
        Err(e) => return Err(e),
    }
    Ok(section)
}

/// Fits the configured group count, or sweeps and keeps the best row.
pub fn select_partition(
    g: &EcosystemGraph,
    config: &PipelineConfig,
) -> Result<(Partition, Vec<SweepRow>)> {
    match config.groups {
        GroupSelection::Fixed(m) => {
            Ok((fit_dcsbm(g, m, config.seed, config.restarts)?, Vec::new()))
        }
        GroupSelection::Sweep { lo, hi } => {
            let hi = hi.min(g.node_count());
            let fits = sweep_group_count(g, lo, hi, config.seed, config.restarts)?;
            let mut best = 0;
            for (i, (row, _)) in fits.iter().enumerate() {
                if row.q > fits[best].0.q {
                    best = i;
                }
            }
            let rows = fits.iter().map(|(r, _)| r.clone()).collect();
            let p = fits
                .into_iter()
                .nth(best)
                .map(|(_, p)| p)
                .expect("nonempty sweep");
            Ok((p, rows))
        }
    }
}

fn community_section(
    g: &EcosystemGraph,
    config: &PipelineConfig,
) -> Result<(CommunitySection, Partition)> {
    let (p, sweep) = select_partition(g, config)?;
    let mixing = mixing_matrix(g, &p)?;
    let modularity = [ModularityVariant::Standard, ModularityVariant::PaperLiteral]
        .into_iter()
        .map(|v| {
            let key = serde_json::to_value(v)
                .expect("unit variant")
                .as_str()
                .expect("string")
                .to_owned();
            (key, ModularityScore::compute(&mixing, v))
        })
        .collect();
    let section = CommunitySection {
        groups: p.group_count(),
        objective: dcsbm_objective(g, &p)?,
        sweep,
        modularity,
        group_sizes: p.group_sizes(),
        composition: composition(g, &p)?,
        mixing,
    };
    Ok((section, p))
}

/// Marginal homogeneity on quantile-binned pairs. When fewer distinct values
/// exist than requested bins, the bin count drops to the distinct count; with
/// a single distinct value the margins are trivially equal.
fn binned_marginal_homogeneity(
    pairs: &[(f64, f64)],
    bins: usize,
) -> Result<(TestResult, Option<PairedTable>)> {
    let mut pooled: Vec<f64> = pairs.iter().flat_map(|&(x, y)| [x, y]).collect();
    pooled.sort_by(f64::total_cmp);
    pooled.dedup();
    let k = bins.min(pooled.len());
    if k < 2 {
        let r = TestResult {
            test: TestKind::MarginalHomogeneity,
            statistic: 0.0,
            p_value: 1.0,
            two_tailed: true,
            n_effective: pairs.len() as f64,
            df: Some(0),
            standardized: Some(0.0),
            notes: "all paired values identical; margins trivially equal".into(),
        };
        return Ok((r, None));
    }
    let table = bin_paired(pairs, k)?;
    let mut r = marginal_homogeneity(&table)?;
    r.notes = format!("{k} pooled-quantile bins, right-closed; {}", r.notes);
    if k < bins {
        r.notes.push_str(&format!(
            "; bins reduced from {bins} to the {k} distinct values"
        ));
    }
    Ok((r, Some(table)))
}

/// Wilcoxon and marginal homogeneity on the per-node pairs, KS on the two
/// whole-scope samples.
pub fn tests_section(
    g: &EcosystemGraph,
    config: &PipelineConfig,
    pairs: &[ElocPair],
) -> Result<TestsSection> {
    let paired: Vec<(f64, f64)> = pairs.iter().map(|p| (p.physical, p.ecosystem)).collect();
    let wilcoxon_signed_rank = wilcoxon_signed_rank(&paired)?;
    // KS compares whole distributions: every physical node's value in the
    // projection against every node's value in the full ecosystem
    let phys: Vec<f64> = paired.iter().map(|p| p.0).collect();
    let eco = assign_costs(g, &config.scheme).local_efficiencies();
    let ks_two_sample = ks_two_sample(&phys, &eco)?;
    let (marginal_homogeneity, mh_table) = binned_marginal_homogeneity(&paired, config.bins)?;
    Ok(TestsSection {
        wilcoxon_signed_rank,
        ks_two_sample,
        marginal_homogeneity,
        mh_table,
    })
}

/// Runs every stage; the first failure aborts with the stage named.
pub fn run_pipeline(config: &PipelineConfig) -> std::result::Result<Analysis, PipelineError> {
    config.validate().at(Stage::Config)?;
    let g = load_input(config).at(Stage::Ingest)?;
    if g.is_empty() {
        return Err(Error::Empty("network")).at(Stage::Ingest);
    }

    let mut degree = BTreeMap::new();
    for kind in NodeKind::ALL {
        degree.insert(
            kind.to_string(),
            degree_section(&g, kind, config.xmin).at(Stage::Degree)?,
        );
    }

    let (communities, partition) = community_section(&g, config).at(Stage::Communities)?;

    let cmp = compare_components(&g, config.scheme).at(Stage::Efficiency)?;
    let tests = tests_section(&g, config, &cmp.pairs).at(Stage::Tests)?;
    let efficiency = EfficiencySection {
        scheme: config.scheme,
        physical_e_glob: cmp.physical.e_glob,
        ecosystem_e_glob: cmp.ecosystem.e_glob,
        relative_difference: cmp.relative_difference,
        difference_percent: cmp.difference_percent,
        pairs: cmp.pairs,
    };

    let report = AnalysisReport {
        schema_version: SCHEMA_VERSION.into(),
        config: config.clone(),
        seeds: Seeds {
            run: config.seed,
            synthgen: match &config.input {
                InputSource::Synthetic(p) => Some(p.seed),
                InputSource::Files { .. } => None,
            },
            restarts: config.restarts,
        },
        graph: GraphSummary {
            nodes: g.node_count(),
            edges: g.edge_count(),
            physical: g.count_kind(NodeKind::Physical),
            virtual_: g.count_kind(NodeKind::Virtual),
            components: g.components().len(),
        },
        degree,
        communities,
        efficiency,
        tests,
    };
    Ok(Analysis {
        report,
        graph: g,
        partition,
    })
}

pub fn report_json(report: &AnalysisReport) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(report).map_err(|e| Error::invalid(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

pub fn ccdf_csv(points: &[CcdfPoint]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["k", "p"])?;
    for pt in points {
        w.write_record([pt.k.to_string(), pt.p.to_string()])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn eloc_pairs_csv(pairs: &[ElocPair]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["node_id", "e_loc_physical", "e_loc_ecosystem"])?;
    for p in pairs {
        w.write_record([
            p.node_id.clone(),
            p.physical.to_string(),
            p.ecosystem.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Serialized output files, in write order.
pub fn render_outputs(analysis: &Analysis) -> Result<Vec<(String, Vec<u8>)>> {
    let mut files = vec![("report.json".to_string(), report_json(&analysis.report)?)];
    for (kind, section) in &analysis.report.degree {
        files.push((format!("ccdf_{kind}.csv"), ccdf_csv(&section.ccdf)?));
    }
    files.push((
        "eloc_pairs.csv".into(),
        eloc_pairs_csv(&analysis.report.efficiency.pairs)?,
    ));
    let mut part = Vec::new();
    analysis.partition.write_csv(&analysis.graph, &mut part)?;
    files.push(("partition.csv".into(), part));
    Ok(files)
}

/// Writes every output into `dir`. On failure the files already written are
/// removed, so a directory never holds a partial result set.
pub fn write_files(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(Error::file(dir))?;
    let mut written = Vec::new();
    for (name, bytes) in files {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, bytes) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            let _ = fs::remove_file(&path);
            return Err(Error::file(&path)(e));
        }
        written.push(path);
    }
    Ok(written)
}

pub fn write_outputs(
    analysis: &Analysis,
    dir: &Path,
) -> std::result::Result<Vec<PathBuf>, PipelineError> {
    let files = render_outputs(analysis).at(Stage::Output)?;
    write_files(dir, &files).at(Stage::Output)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Node;

    fn synth(seed: u64, n: usize) -> PipelineConfig {
        let mut c = PipelineConfig::new(InputSource::Synthetic(SynthParams {
            n_physical: n,
            ..SynthParams::with_seed(seed)
        }));
        c.seed = seed;
        c.groups = GroupSelection::Sweep { lo: 2, hi: 4 };
        c.restarts = 4;
        c
    }

    #[test]
    fn report_is_deterministic() {
        let c = synth(42, 60);
        let a = report_json(&run_pipeline(&c).unwrap().report).unwrap();
        let b = report_json(&run_pipeline(&c).unwrap().report).unwrap();
        assert_eq!(a, b);
        let s = String::from_utf8(a).unwrap();
        assert!(s.contains("\"schema_version\": \"1.0.0\""));
    }

    #[test]
    fn all_physical_input_is_degenerate_but_complete() {
        let nodes: Vec<Node> = (0..6)
            .map(|i| Node::new(format!("p{i}"), NodeKind::Physical))
            .collect();
        let edges = [
            ("p0", "p1"),
            ("p1", "p2"),
            ("p0", "p2"),
            ("p2", "p3"),
            ("p3", "p4"),
            ("p4", "p5"),
            ("p3", "p5"),
        ];
        let dir = tempdir();
        let g = EcosystemGraph::from_parts(nodes, edges).unwrap();
        let (np, ep) = (dir.join("n.csv"), dir.join("e.csv"));
        crate::graph::write_nodes(&g, fs::File::create(&np).unwrap()).unwrap();
        crate::graph::write_edges(&g, fs::File::create(&ep).unwrap()).unwrap();
        let mut c = PipelineConfig::new(InputSource::Files {
            nodes: np,
            edges: ep,
        });
        c.groups = GroupSelection::Fixed(2);
        let r = run_pipeline(&c).unwrap().report;
        assert_eq!(r.efficiency.difference_percent, Some(0));
        assert!(r
            .communities
            .composition
            .virtual_fraction
            .iter()
            .all(|&f| f == 0.0));
        assert_eq!(r.tests.ks_two_sample.p_value, 1.0);
        assert_eq!(r.tests.wilcoxon_signed_rank.p_value, 1.0);
        assert_eq!(r.tests.marginal_homogeneity.statistic, 0.0);
        assert!(r.degree["virtual"].power_law.is_none());
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn failures_name_the_stage() {
        let mut c = synth(1, 40);
        c.bins = 1;
        assert_eq!(run_pipeline(&c).unwrap_err().stage, Stage::Config);
        let c = PipelineConfig::new(InputSource::Files {
            nodes: "/nonexistent/n.csv".into(),
            edges: "/nonexistent/e.csv".into(),
        });
        let e = run_pipeline(&c).unwrap_err();
        assert_eq!(e.stage, Stage::Ingest);
        assert!(e.to_string().starts_with("stage ingest failed"));
    }

    #[test]
    fn failed_write_leaves_nothing() {
        let dir = tempdir();
        let files = vec![
            ("a.txt".to_string(), b"x".to_vec()),
            ("missing/b.txt".to_string(), b"y".to_vec()),
        ];
        assert!(write_files(&dir, &files).is_err());
        assert!(!dir.join("a.txt").exists());
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn config_round_trips_through_json() {
        let c = synth(3, 50);
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<PipelineConfig>(&s).unwrap(), c);
    }

    fn tempdir() -> PathBuf {
        let d = std::env::temp_dir().join(format!(
            "dbe-pipeline-{}-{:?}",
            std::process::id(),
            std::thread::current().id()
        ));
        let _ = fs::remove_dir_all(&d);
        fs::create_dir_all(&d).unwrap();
        d
    }
}
