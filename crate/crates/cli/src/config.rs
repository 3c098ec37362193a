//! Flag and config-file surface. A TOML file may set any flag; flags given
//! on the command line win.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Deserialize;

use dbe_core::pipeline::{GroupSelection, InputSource, PipelineConfig};
use dbe_core::{CostScheme, IngestOptions, SynthParams};

#[derive(Debug, Default, Clone, Args)]
pub struct CommonArgs {
    /// TOML config whose keys mirror the long flags.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Node table (`id,kind[,label]`).
    #[arg(long, value_name = "FILE")]
    pub nodes: Option<PathBuf>,
    /// Edge table (`source,target`).
    #[arg(long, value_name = "FILE")]
    pub edges: Option<PathBuf>,
    /// Generate a synthetic network instead of reading files.
    #[arg(long)]
    pub synth: bool,
    #[command(flatten)]
    pub synth_params: SynthArgs,
    /// Edge costs as `vv,vp,pp`.
    #[arg(long, value_name = "VV,VP,PP")]
    pub scheme: Option<CostScheme>,
    /// Fixed number of communities.
    #[arg(long, conflicts_with = "sweep")]
    pub groups: Option<usize>,
    /// Range of community counts to try, as `lo..hi` (inclusive).
    #[arg(long, value_name = "LO..HI", value_parser = parse_sweep)]
    pub sweep: Option<(usize, usize)>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Categories for the marginal homogeneity test.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Lower cutoff of the power-law fit.
    #[arg(long)]
    pub xmin: Option<u64>,
    /// Keep only the largest connected component.
    #[arg(long)]
    pub largest_component: bool,
    /// Worker threads (results do not depend on it).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthArgs {
    #[arg(long)]
    pub n_physical: Option<usize>,
    #[arg(long)]
    pub attach_m: Option<usize>,
    #[arg(long)]
    pub p_website: Option<f64>,
    #[arg(long)]
    pub p_mirror: Option<f64>,
    #[arg(long)]
    pub p_cross: Option<f64>,
    #[arg(long)]
    pub extra_vv: Option<f64>,
    /// Generator seed; defaults to `--seed`.
    #[arg(long)]
    pub synth_seed: Option<u64>,
}

impl SynthArgs {
    fn or(self, other: SynthArgs) -> SynthArgs {
        SynthArgs {
            n_physical: self.n_physical.or(other.n_physical),
            attach_m: self.attach_m.or(other.attach_m),
            p_website: self.p_website.or(other.p_website),
            p_mirror: self.p_mirror.or(other.p_mirror),
            p_cross: self.p_cross.or(other.p_cross),
            extra_vv: self.extra_vv.or(other.extra_vv),
            synth_seed: self.synth_seed.or(other.synth_seed),
        }
    }

    fn is_set(&self) -> bool {
        self.n_physical.is_some()
            || self.attach_m.is_some()
            || self.p_website.is_some()
            || self.p_mirror.is_some()
            || self.p_cross.is_some()
            || self.extra_vv.is_some()
            || self.synth_seed.is_some()
    }

    pub fn params(&self, seed: u64) -> SynthParams {
        let d = SynthParams::default();
        SynthParams {
            n_physical: self.n_physical.unwrap_or(d.n_physical),
            attach_m: self.attach_m.unwrap_or(d.attach_m),
            p_website: self.p_website.unwrap_or(d.p_website),
            p_mirror: self.p_mirror.unwrap_or(d.p_mirror),
            p_cross: self.p_cross.unwrap_or(d.p_cross),
            extra_vv: self.extra_vv.unwrap_or(d.extra_vv),
            seed: self.synth_seed.unwrap_or(seed),
        }
    }
}

pub fn parse_sweep(s: &str) -> std::result::Result<(usize, usize), String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("expected lo..hi, got {s:?}"))?;
    let lo: usize = lo
        .trim()
        .parse()
        .map_err(|e| format!("bad lower bound: {e}"))?;
    let hi: usize = hi
        .trim()
        .trim_start_matches('=')
        .parse()
        .map_err(|e| format!("bad upper bound: {e}"))?;
    if lo > hi {
        return Err(format!("empty range {s}"));
    }
    Ok((lo, hi))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    nodes: Option<PathBuf>,
    edges: Option<PathBuf>,
    synth: Option<SynthArgs>,
    scheme: Option<String>,
    groups: Option<usize>,
    sweep: Option<String>,
    restarts: Option<usize>,
    seed: Option<u64>,
    bins: Option<usize>,
    xmin: Option<u64>,
    largest_component: Option<bool>,
    threads: Option<usize>,
    out: Option<PathBuf>,
}

/// Command line merged over the config file.
#[derive(Debug)]
pub struct Resolved {
    pub pipeline: PipelineConfig,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
}

/// Errors here are usage errors: the caller exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub anyhow::Error);

fn load_file(path: &Path) -> Result<FileConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Relative paths inside a config file are taken relative to that file.
fn anchor(base: &Path, p: PathBuf) -> PathBuf {
    if p.is_relative() {
        base.join(p)
    } else {
        p
    }
}

pub fn resolve(
    args: &CommonArgs,
    out: Option<PathBuf>,
) -> std::result::Result<Resolved, UsageError> {
    resolve_inner(args, out).map_err(UsageError)
}

fn resolve_inner(args: &CommonArgs, out: Option<PathBuf>) -> Result<Resolved> {
    let mut file = match &args.config {
        Some(p) => load_file(p)?,
        None => FileConfig::default(),
    };
    if let Some(p) = &args.config {
        let base = p.parent().unwrap_or(Path::new("")).to_path_buf();
        file.nodes = file.nodes.map(|n| anchor(&base, n));
        file.edges = file.edges.map(|e| anchor(&base, e));
        file.out = file.out.map(|o| anchor(&base, o));
    }

    let seed = args.seed.or(file.seed).unwrap_or(0);
    let cli_files = args.nodes.is_some() || args.edges.is_some();
    let cli_synth = args.synth || args.synth_params.is_set();
    if cli_files && cli_synth {
        bail!("give either --nodes/--edges or --synth, not both");
    }
    let input = if cli_synth || (!cli_files && file.synth.is_some() && file.nodes.is_none()) {
        let merged = args.synth_params.clone().or(file.synth.unwrap_or_default());
        InputSource::Synthetic(merged.params(seed))
    } else {
        if !cli_files && file.synth.is_some() {
            bail!("config sets both files and [synth]; choose one input");
        }
        let nodes = args
            .nodes
            .clone()
            .or(file.nodes)
            .context("missing --nodes (or --synth)")?;
        let edges = args
            .edges
            .clone()
            .or(file.edges)
            .context("missing --edges")?;
        InputSource::Files { nodes, edges }
    };

    let mut config = PipelineConfig::new(input);
    config.seed = seed;
    config.scheme = match (args.scheme, file.scheme) {
        (Some(s), _) => s,
        (None, Some(s)) => s.parse().map_err(|e| anyhow::anyhow!("scheme: {e}"))?,
        (None, None) => CostScheme::default(),
    };
    let file_sweep = file
        .sweep
        .as_deref()
        .map(parse_sweep)
        .transpose()
        .map_err(anyhow::Error::msg)?;
    config.groups = match (args.groups, args.sweep) {
        (Some(m), _) => GroupSelection::Fixed(m),
        (None, Some((lo, hi))) => GroupSelection::Sweep { lo, hi },
        (None, None) => match (file.groups, file_sweep) {
            (Some(_), Some(_)) => bail!("config sets both groups and sweep"),
            (Some(m), None) => GroupSelection::Fixed(m),
            (None, Some((lo, hi))) => GroupSelection::Sweep { lo, hi },
            (None, None) => GroupSelection::default(),
        },
    };
    if let Some(r) = args.restarts.or(file.restarts) {
        config.restarts = r;
    }
    if let Some(b) = args.bins.or(file.bins) {
        config.bins = b;
    }
    config.xmin = args.xmin.or(file.xmin);
    config.ingest = IngestOptions {
        restrict_to_largest_component: args.largest_component
            || file.largest_component.unwrap_or(false),
        ..IngestOptions::default()
    };
    config.validate()?;
    let threads = args.threads.or(file.threads);
    if threads == Some(0) {
        bail!("--threads must be >= 1");
    }
    Ok(Resolved {
        pipeline: config,
        threads,
        out: out.or(file.out),
    })
}
