use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crossmf::config::{self, split_pair};
use crossmf::experiment::{
    diagnose, run_experiment, summarize, ExperimentSpec, MeanFieldSetup, RunOutput,
};
use crossmf::figures::{self, Figure};
use crossmf::io::read_record;
use crossmf::OUTPUT_DIR_ENV;
use crossmf_core::meanfield::{Dimension, InitialDensity, Reemission};
use crossmf_core::params::load_preset;
use crossmf_core::{Preset, Pressures, SimulationRecord, Tier};

#[derive(Parser)]
#[command(name = "crossmf", version, about = "Cross market model simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write records plus summary.json.
    Simulate(RunArgs),
    /// Return statistics of existing t,S,ED record files.
    Analyze { files: Vec<PathBuf> },
    /// Run a mean-field experiment and report conservation and steady-state diagnostics.
    Diagnose(RunArgs),
    /// List parameter presets and figure presets.
    PresetList,
}

#[derive(Clone, Copy, ValueEnum)]
enum TierArg {
    Abm,
    Kinetic,
    MfFv,
    MfMc,
}

#[derive(Clone, Copy, ValueEnum)]
enum PressureArg {
    InactionOnly,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum DimensionArg {
    Homogeneous,
    Heterogeneous,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Block,
    NullSpace,
}

#[derive(Args)]
struct RunArgs {
    /// Figure preset (see preset-list); other flags then override its arms.
    #[arg(long, conflicts_with = "tier")]
    figure: Option<String>,
    #[arg(long, value_enum)]
    tier: Option<TierArg>,
    /// Parameter preset; defaults to the tier's preset.
    #[arg(long)]
    preset: Option<String>,
    /// key = value config file applied on top of the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override any config key, e.g. --set theta=2 --set n_m=200.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, value_enum)]
    pressures: Option<PressureArg>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    deterministic: bool,
    #[arg(long, value_enum)]
    dimension: Option<DimensionArg>,
    #[arg(long, value_enum)]
    init: Option<InitArg>,
    /// Initial excess demand of mean-field runs.
    #[arg(long)]
    ed0: Option<f64>,
    /// Re-emit switched mass at the end-of-step price (finite volume).
    #[arg(long)]
    reemit_next: bool,
    /// Number of runs; run i uses random stream i.
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    save_density: bool,
    #[arg(long, env = OUTPUT_DIR_ENV, default_value = "out")]
    output: PathBuf,
}

fn tier_of(t: TierArg) -> Tier {
    match t {
        TierArg::Abm => Tier::Abm,
        TierArg::Kinetic => Tier::Kinetic,
        TierArg::MfFv => Tier::MeanFieldFv,
        TierArg::MfMc => Tier::MeanFieldMc,
    }
}

fn default_preset(tier: Tier) -> Preset {
    match tier {
        Tier::Abm => Preset::AbmOriginal,
        Tier::Kinetic => Preset::KineticParticle,
        Tier::MeanFieldFv | Tier::MeanFieldMc => Preset::MeanField,
    }
}

/// Experiments selected by the arguments, each with its output directory.
fn specs(args: &RunArgs) -> anyhow::Result<Vec<(String, ExperimentSpec)>> {
    let mut out = Vec::new();
    if let Some(name) = &args.figure {
        let fig = Figure::from_name(name).ok_or_else(|| anyhow!("unknown figure {name:?}"))?;
        for arm in fig.arms() {
            let mut spec = arm.spec;
            spec.output = Some(args.output.join(fig.name()).join(arm.name));
            override_spec(&mut spec, args)?;
            out.push((format!("{}/{}", fig.name(), arm.name), spec));
        }
        return Ok(out);
    }
    let tier = tier_of(
        args.tier
            .ok_or_else(|| anyhow!("give --tier or --figure"))?,
    );
    let preset = match &args.preset {
        Some(p) => load_preset(p)?,
        None => default_preset(tier).config(),
    };
    let pressures = match args.pressures {
        Some(PressureArg::InactionOnly) => Pressures::InactionOnly,
        _ => Pressures::Full,
    };
    let mut spec = ExperimentSpec::new(tier, pressures, preset.params);
    if matches!(tier, Tier::MeanFieldFv | Tier::MeanFieldMc) {
        let grid = preset
            .grid
            .unwrap_or_else(|| Preset::MeanField.config().grid.unwrap());
        spec.meanfield = Some(MeanFieldSetup::new(
            grid,
            Dimension::Heterogeneous,
            InitialDensity::UniformBlock {
                ed0: figures::MF_ED0,
            },
        ));
        if !args.deterministic && tier == Tier::MeanFieldFv {
            spec.meanfield.as_mut().unwrap().grid = figures::tracking_grid(&preset.params);
        }
    }
    spec.output = Some(args.output.clone());
    override_spec(&mut spec, args)?;
    out.push((tier.name().to_string(), spec));
    Ok(out)
}

fn override_spec(spec: &mut ExperimentSpec, args: &RunArgs) -> anyhow::Result<()> {
    let mut cfg = crossmf_core::PresetConfig {
        params: spec.params,
        grid: spec.meanfield.map(|m| m.grid),
    };
    if let Some(path) = &args.config {
        cfg = config::load_config(path, cfg)?;
    }
    for kv in &args.set {
        let (k, v) = split_pair(kv).ok_or_else(|| anyhow!("expected KEY=VALUE, got {kv:?}"))?;
        config::apply(&mut cfg, k, v)?;
    }
    spec.params = cfg.params;
    if let (Some(m), Some(g)) = (spec.meanfield.as_mut(), cfg.grid) {
        m.grid = g;
    }
    if let Some(theta) = args.theta {
        spec.params.theta = theta;
    }
    if args.deterministic {
        spec.deterministic = true;
    }
    if let Some(p) = args.pressures {
        spec.pressures = match p {
            PressureArg::InactionOnly => Pressures::InactionOnly,
            PressureArg::Full => Pressures::Full,
        };
    }
    if let Some(m) = spec.meanfield.as_mut() {
        if let Some(d) = args.dimension {
            m.dimension = match d {
                DimensionArg::Homogeneous => Dimension::Homogeneous,
                DimensionArg::Heterogeneous => Dimension::Heterogeneous,
            };
        }
        let ed0 = args.ed0.unwrap_or(m.init.ed0());
        m.init = match args.init {
            Some(InitArg::Block) => InitialDensity::UniformBlock { ed0 },
            Some(InitArg::NullSpace) => InitialDensity::NullSpace { ed0 },
            None => match m.init {
                InitialDensity::UniformBlock { .. } => InitialDensity::UniformBlock { ed0 },
                InitialDensity::NullSpace { .. } => InitialDensity::NullSpace { ed0 },
            },
        };
        if args.reemit_next {
            m.reemission = Reemission::Next;
        }
        if m.dimension == Dimension::Homogeneous {
            spec.pressures = Pressures::InactionOnly;
        }
    } else if args.dimension.is_some() || args.init.is_some() || args.ed0.is_some() {
        bail!("--dimension, --init and --ed0 only apply to mean-field tiers");
    }
    if let Some(n) = args.seeds {
        spec.seeds = (0..n).collect();
    }
    if args.save_density {
        spec.save_density = true;
    }
    Ok(())
}

fn simulate(args: &RunArgs) -> anyhow::Result<()> {
    for (label, spec) in specs(args)? {
        let outcome = run_experiment(&spec).with_context(|| label.clone())?;
        let s = &outcome.summary;
        let dir = spec.output.as_deref().unwrap_or(Path::new("."));
        println!(
            "{label}: {} runs ({} failed) -> {}",
            outcome.runs.len(),
            s.failures.len(),
            dir.display()
        );
        if let Some(k) = &s.excess_kurtosis {
            println!(
                "  excess kurtosis mean {:.3} median {:.3}; |r| ACF score {:.4}",
                k.mean,
                k.median,
                s.mean_abs_acf.as_ref().map_or(f64::NAN, |a| a.mean)
            );
        }
        for f in &s.failures {
            println!("  seed {} failed: {}", f.seed, f.error);
        }
    }
    Ok(())
}

fn run_diagnose(args: &RunArgs) -> anyhow::Result<()> {
    for (label, mut spec) in specs(args)? {
        if spec.meanfield.is_none() {
            bail!("{label}: diagnose needs a mean-field tier");
        }
        spec.save_density = true;
        let outcome = run_experiment(&spec).with_context(|| label.clone())?;
        let report: Vec<_> = outcome
            .runs
            .iter()
            .filter_map(|r| diagnose(&spec, r))
            .collect();
        println!("{label}");
        println!("{}", serde_json::to_string_pretty(&report)?);
    }
    Ok(())
}

fn analyze(files: &[PathBuf]) -> anyhow::Result<()> {
    if files.is_empty() {
        bail!("no record files given");
    }
    let runs = files
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let record: SimulationRecord = read_record(f)?;
            Ok(RunOutput {
                seed: i as u64,
                record,
                field: None,
                initial_mass: None,
                converged_at: None,
                last_change: None,
                steady_state: None,
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let spec = ExperimentSpec {
        seeds: (0..files.len() as u64).collect(),
        ..ExperimentSpec::new(
            Tier::Abm,
            Pressures::Full,
            Preset::AbmOriginal.config().params,
        )
    };
    let mut s = summarize(&spec, &runs, Vec::new());
    s.tier = "external";
    s.arm = "external";
    println!("{}", serde_json::to_string_pretty(&s)?);
    Ok(())
}

fn preset_list() {
    println!("parameter presets:");
    for p in Preset::ALL {
        let c = p.config();
        let grid = c
            .grid
            .map(|g| format!(", grid {}x{}", g.n_m, g.n_c))
            .unwrap_or_default();
        println!("  {:<18} N = {}{grid}", p.name(), c.params.n_agents);
    }
    println!("figure presets:");
    for f in Figure::ALL {
        let arms: Vec<_> = f.arms().iter().map(|a| a.name).collect();
        println!(
            "  {:<27} {} [{}]",
            f.name(),
            f.description(),
            arms.join(", ")
        );
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Analyze { files } => analyze(files),
        Command::Diagnose(a) => run_diagnose(a),
        Command::PresetList => {
            preset_list();
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
