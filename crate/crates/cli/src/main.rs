//! `dbe`: ecosystem network analysis from the command line.
//!
//! Exit status: 0 on success, 1 when a stage fails, 2 on usage errors.

mod config;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::{resolve, CommonArgs, Resolved, UsageError};
use dbe_core::communities::{composition, mixing_matrix, ModularityScore, ModularityVariant};
use dbe_core::efficiency::{compare_components, display_percent};
use dbe_core::graph::{write_edges, write_nodes};
use dbe_core::pipeline::{
    ccdf_csv, degree_section, load_input, run_pipeline, select_partition, tests_section,
    write_files, write_outputs, Analysis, InputSource, PipelineConfig, TestsSection,
};
use dbe_core::stats::TestResult;
use dbe_core::{generate_coupled, NodeKind};

#[derive(Debug, Parser)]
#[command(
    name = "dbe",
    version,
    about = "Physical/virtual ecosystem network analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every stage and write report.json plus CSV sidecars.
    Analyze {
        #[command(flatten)]
        common: CommonArgs,
        /// Output directory.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Fit communities; print modularity and composition.
    Communities {
        #[command(flatten)]
        common: CommonArgs,
        /// Directory for partition.csv.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Print global efficiency of the physical layer and the whole ecosystem.
    Efficiency {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Print the CCDF of one layer's degrees as CSV.
    Degree {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value = "physical")]
        kind: NodeKind,
        /// Write to this file instead of stdout.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Run the paired tests on local efficiencies.
    Tests {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Generate a synthetic network as nodes.csv and edges.csv.
    Synth {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let usage = e.downcast_ref::<UsageErrorMarker>().is_some();
            eprintln!("error: {e:#}");
            if usage {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

/// Context tag marking an error chain as a usage error.
#[derive(Debug)]
struct UsageErrorMarker(anyhow::Error);

impl std::fmt::Display for UsageErrorMarker {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for UsageErrorMarker {}

fn setup(common: &CommonArgs, out: Option<PathBuf>) -> Result<Resolved> {
    let r = resolve(common, out).map_err(|UsageError(e)| UsageErrorMarker(e))?;
    if let Some(n) = r.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring thread pool")?;
    }
    Ok(r)
}

fn require_out(out: Option<PathBuf>) -> Result<PathBuf> {
    out.ok_or_else(|| UsageErrorMarker(anyhow::anyhow!("missing --out DIR")).into())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Analyze { common, out } => {
            let r = setup(&common, out)?;
            let out = require_out(r.out)?;
            let analysis = run_pipeline(&r.pipeline)?;
            let written = write_outputs(&analysis, &out)?;
            summarize(&analysis, &mut io::stdout().lock())?;
            for p in written {
                eprintln!("wrote {}", p.display());
            }
            Ok(())
        }
        Command::Communities { common, out } => {
            let r = setup(&common, out)?;
            communities(&r.pipeline, r.out.as_deref())
        }
        Command::Efficiency { common } => {
            let r = setup(&common, None)?;
            let g = load_input(&r.pipeline).context("stage ingest failed")?;
            let cmp =
                compare_components(&g, r.pipeline.scheme).context("stage efficiency failed")?;
            let mut w = io::stdout().lock();
            efficiency_table(cmp.physical.e_glob, cmp.ecosystem.e_glob, &mut w)?;
            Ok(())
        }
        Command::Degree { common, kind, out } => {
            let r = setup(&common, None)?;
            let g = load_input(&r.pipeline).context("stage ingest failed")?;
            let section =
                degree_section(&g, kind, r.pipeline.xmin).context("stage degree failed")?;
            let bytes = ccdf_csv(&section.ccdf)?;
            match out {
                Some(path) => fs::write(&path, bytes)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => io::stdout().lock().write_all(&bytes)?,
            }
            match (&section.power_law, &section.note) {
                (Some(fit), _) => eprintln!(
                    "power law: alpha = {:.3} +/- {:.3} (xmin {}, {} in tail)",
                    fit.alpha, fit.sigma, fit.xmin, fit.n_tail
                ),
                (None, Some(note)) => eprintln!("{note}"),
                (None, None) => {}
            }
            Ok(())
        }
        Command::Tests { common } => {
            let r = setup(&common, None)?;
            let g = load_input(&r.pipeline).context("stage ingest failed")?;
            let cmp =
                compare_components(&g, r.pipeline.scheme).context("stage efficiency failed")?;
            let t = tests_section(&g, &r.pipeline, &cmp.pairs).context("stage tests failed")?;
            tests_table(&t, &mut io::stdout().lock())?;
            Ok(())
        }
        Command::Synth { mut common, out } => {
            common.synth = true;
            let r = setup(&common, out)?;
            let out = require_out(r.out)?;
            let InputSource::Synthetic(params) = r.pipeline.input else {
                unreachable!("synth input forced above")
            };
            let g = generate_coupled(&params)?;
            let mut nodes = Vec::new();
            let mut edges = Vec::new();
            write_nodes(&g, &mut nodes)?;
            write_edges(&g, &mut edges)?;
            write_files(
                &out,
                &[("nodes.csv".into(), nodes), ("edges.csv".into(), edges)],
            )?;
            eprintln!(
                "wrote {} nodes, {} edges to {}",
                g.node_count(),
                g.edge_count(),
                out.display()
            );
            Ok(())
        }
    }
}

fn communities(config: &PipelineConfig, out: Option<&Path>) -> Result<()> {
    let g = load_input(config).context("stage ingest failed")?;
    let (p, sweep) = select_partition(&g, config).context("stage communities failed")?;
    let mx = mixing_matrix(&g, &p)?;
    let comp = composition(&g, &p)?;
    let mut w = io::stdout().lock();
    for row in &sweep {
        writeln!(
            w,
            "sweep m={:<3} objective {:.4}  Q {:.4}  Q_norm {:.4}",
            row.groups, row.objective, row.q, row.q_norm
        )?;
    }
    writeln!(w, "groups            {}", p.group_count())?;
    for v in [ModularityVariant::Standard, ModularityVariant::PaperLiteral] {
        let s = ModularityScore::compute(&mx, v);
        let norm = s.q_norm.map_or("-".to_string(), |q| format!("{q:.4}"));
        writeln!(w, "Q {:<15} {:.4}  Q_norm {norm}", variant_name(v), s.q)?;
    }
    writeln!(w, "sizes             {:?}", p.group_sizes())?;
    let fr: Vec<String> = comp
        .virtual_fraction
        .iter()
        .map(|f| format!("{f:.3}"))
        .collect();
    writeln!(w, "virtual fraction  [{}]", fr.join(", "))?;
    writeln!(w, "mean virtual      {:.3}", comp.mean_virtual_fraction)?;
    writeln!(w, "gini              {:.3}", comp.gini)?;
    if let Some(dir) = out {
        let mut buf = Vec::new();
        p.write_csv(&g, &mut buf)?;
        write_files(dir, &[("partition.csv".into(), buf)])?;
    }
    Ok(())
}

fn variant_name(v: ModularityVariant) -> &'static str {
    match v {
        ModularityVariant::Standard => "standard",
        ModularityVariant::PaperLiteral => "paper-literal",
    }
}

fn efficiency_table(physical: f64, ecosystem: f64, w: &mut impl Write) -> io::Result<()> {
    writeln!(w, "{:<12}{:>8}", "", "E_glob")?;
    writeln!(w, "{:<12}{:>8.3}", "Physical", physical)?;
    writeln!(w, "{:<12}{:>8.3}", "Ecosystem", ecosystem)?;
    let diff = dbe_core::efficiency::relative_difference(physical, ecosystem)
        .map_or("n/a".to_string(), |d| format!("{}%", display_percent(d)));
    writeln!(w, "{:<12}{:>8}", "Difference", diff)
}

fn test_row(label: &str, t: &TestResult, w: &mut impl Write) -> io::Result<()> {
    writeln!(w, "{label:<34}{:>10.3}{:>12.4}", t.statistic, t.p_value)
}

fn tests_table(t: &TestsSection, w: &mut impl Write) -> io::Result<()> {
    writeln!(w, "{:<34}{:>10}{:>12}", "test", "statistic", "p (2-tail)")?;
    test_row("Wilcoxon signed-rank (Z)", &t.wilcoxon_signed_rank, w)?;
    test_row("Kolmogorov-Smirnov 2-sample (D)", &t.ks_two_sample, w)?;
    test_row("marginal homogeneity (chi2)", &t.marginal_homogeneity, w)?;
    if let Some(s) = t.marginal_homogeneity.standardized {
        writeln!(w, "{:<34}{:>10.3}", "marginal homogeneity (std.)", s)?;
    }
    Ok(())
}

fn summarize(a: &Analysis, w: &mut impl Write) -> io::Result<()> {
    let r = &a.report;
    writeln!(
        w,
        "{} nodes ({} physical, {} virtual), {} edges",
        r.graph.nodes, r.graph.physical, r.graph.virtual_, r.graph.edges
    )?;
    let std = &r.communities.modularity["standard"];
    writeln!(
        w,
        "{} communities, Q = {:.4}, Q_norm = {}",
        r.communities.groups,
        std.q,
        std.q_norm.map_or("-".into(), |q| format!("{q:.4}"))
    )?;
    efficiency_table(
        r.efficiency.physical_e_glob,
        r.efficiency.ecosystem_e_glob,
        w,
    )?;
    tests_table(&r.tests, w)
}
