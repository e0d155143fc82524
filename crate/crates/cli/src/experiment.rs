//! Seeded ensembles of simulation runs and their summaries.
//!
//! Run `i` of an experiment draws from `rng::stream(params.seed, i)`, so every
//! run is reproducible on its own and runs never share random numbers.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crossmf_core::diagnostics::{classify_steady_state, collision_invariant_residual};
use crossmf_core::kinetic::{self, SwitchingKernel};
use crossmf_core::mc::{self, SampleEnsemble};
use crossmf_core::meanfield::{
    ConvergenceMonitor, DensityField, Dimension, FvSolver, InitialDensity, Reemission, Species,
};
use crossmf_core::stats::{self, SUMMARY_LAGS};
use crossmf_core::{abm, rng, GridSpec, ModelParams, Pressures, PriceMode, SimulationRecord, Tier};

use crate::io::{self, IoError};

/// Mean-field specific settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFieldSetup {
    pub grid: GridSpec,
    pub dimension: Dimension,
    pub init: InitialDensity,
    pub reemission: Reemission,
}

impl MeanFieldSetup {
    pub fn new(grid: GridSpec, dimension: Dimension, init: InitialDensity) -> Self {
        MeanFieldSetup {
            grid,
            dimension,
            init,
            reemission: Reemission::Current,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub tier: Tier,
    pub pressures: Pressures,
    pub deterministic: bool,
    pub params: ModelParams,
    /// Required for the mean-field tiers, rejected for the others.
    pub meanfield: Option<MeanFieldSetup>,
    /// Run indices; each selects an independent random stream.
    pub seeds: Vec<u64>,
    pub output: Option<PathBuf>,
    /// Also write the final densities of mean-field runs.
    pub save_density: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid experiment: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] crossmf_core::Error),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("all {0} runs failed")]
    AllFailed(usize),
}

impl ExperimentSpec {
    pub fn new(tier: Tier, pressures: Pressures, params: ModelParams) -> Self {
        ExperimentSpec {
            tier,
            pressures,
            deterministic: false,
            params,
            meanfield: None,
            seeds: vec![0],
            output: None,
            save_density: false,
        }
    }

    pub fn price_mode(&self) -> PriceMode {
        if self.deterministic {
            PriceMode::Deterministic
        } else {
            PriceMode::Stochastic
        }
    }

    pub fn arm(&self) -> &'static str {
        match self.meanfield {
            Some(MeanFieldSetup {
                dimension: Dimension::Homogeneous,
                ..
            }) => "homogeneous",
            _ => self.pressures.name(),
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::Invalid(m.to_string()));
        self.params.validate()?;
        if self.seeds.is_empty() {
            return bad("no seeds");
        }
        let mf = matches!(self.tier, Tier::MeanFieldFv | Tier::MeanFieldMc);
        match (&self.meanfield, mf) {
            (None, true) => return bad("mean-field tiers need a grid"),
            (Some(_), false) => return bad("a grid is only valid for mean-field tiers"),
            _ => {}
        }
        if let Some(setup) = &self.meanfield {
            setup.grid.validate(self.params.s0)?;
            if setup.dimension == Dimension::Homogeneous && self.pressures == Pressures::Full {
                return bad("the homogeneous model has no herding pressure");
            }
            if setup.grid.recenter && self.tier == Tier::MeanFieldMc {
                return bad("the Monte Carlo solver needs a fixed grid");
            }
        }
        Ok(())
    }

    /// Parameters as seen by the solver: the inaction-only arm of the
    /// kinetic and mean-field tiers has `lambda1 = 0, lambda2 = 1`.
    fn solver_params(&self) -> ModelParams {
        match (self.tier, self.pressures) {
            (Tier::MeanFieldFv | Tier::MeanFieldMc, Pressures::InactionOnly) => {
                self.params.with_weights(0.0, 1.0)
            }
            _ => self.params,
        }
    }
}

/// Result of one run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub seed: u64,
    pub record: SimulationRecord,
    pub field: Option<DensityField>,
    pub initial_mass: Option<f64>,
    /// Step at which a deterministic finite-volume run became stationary.
    pub converged_at: Option<usize>,
    pub last_change: Option<f64>,
    pub steady_state: Option<Result<&'static str, String>>,
}

pub fn run_seed(spec: &ExperimentSpec, seed: u64) -> Result<RunOutput, crossmf_core::Error> {
    let params = spec.solver_params();
    let mut rng = rng::stream(params.seed, seed);
    let mode = spec.price_mode();
    let mut out = RunOutput {
        seed,
        record: SimulationRecord::default(),
        field: None,
        initial_mass: None,
        converged_at: None,
        last_change: None,
        steady_state: None,
    };
    match spec.tier {
        Tier::Abm => {
            out.record = abm::run_abm(&params, spec.pressures, mode, &mut rng)?;
        }
        Tier::Kinetic => {
            out.record = kinetic::run_kinetic_particle(&params, spec.pressures, mode, &mut rng)?;
        }
        Tier::MeanFieldFv => {
            let setup = spec.meanfield.expect("validated");
            let mesh = setup.dimension.mesh(setup.grid);
            let field = DensityField::initial(mesh, &params, setup.init)?;
            out.initial_mass = Some(field.total_mass());
            let mut solver = FvSolver::new(field, &params, mode)?.with_reemission(setup.reemission);
            if spec.deterministic {
                solver = solver.tracking_change();
            }
            let mut monitor = ConvergenceMonitor::default();
            out.record = solver.run_with(&mut rng, params.n_steps(), |s| {
                if let Some(c) = s.last_change() {
                    monitor.push(c);
                }
            })?;
            if spec.deterministic {
                out.converged_at = monitor.converged_at();
                out.last_change = solver.last_change();
                let kernel = solver.operator().kernel;
                let m = solver.market;
                let class = classify_steady_state(
                    &solver.field,
                    m.s,
                    &kernel,
                    m.ed,
                    &monitor,
                    out.last_change.unwrap_or(f64::NAN),
                    1e-6,
                );
                out.steady_state = Some(class.map(|c| c.label()).map_err(|e| e.to_string()));
            }
            out.field = Some(solver.field);
        }
        Tier::MeanFieldMc => {
            let setup = spec.meanfield.expect("validated");
            let mut ens = SampleEnsemble::init(&params, setup.init, setup.dimension, &mut rng)?;
            out.initial_mass = Some(1.0);
            out.record = mc::run_mc(&mut ens, &params, mode, &mut rng)?;
            let rec = mc::reconstruct_density(&ens, &setup.dimension.mesh(setup.grid));
            if let Some(w) = rec.warning {
                out.record.warn(w);
            }
            out.field = Some(rec.field);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunStats {
    pub seed: u64,
    pub final_s: f64,
    pub final_ed: f64,
    pub excess_kurtosis: Option<f64>,
    pub mean_abs_acf: Option<f64>,
    pub raw_within_band: Option<f64>,
    pub stats_error: Option<String>,
    pub mass_drift: Option<f64>,
    pub converged_at: Option<usize>,
    pub steady_state: Option<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct Aggregate {
    pub n: usize,
    pub mean: f64,
    pub stddev: f64,
    pub median: f64,
    pub mean_abs: f64,
}

impl Aggregate {
    pub fn of(values: &[f64]) -> Option<Aggregate> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        Some(Aggregate {
            n,
            mean,
            stddev: var.sqrt(),
            median,
            mean_abs: values.iter().map(|x| x.abs()).sum::<f64>() / n as f64,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub tier: &'static str,
    pub arm: &'static str,
    pub theta: f64,
    pub deterministic: bool,
    pub master_seed: u64,
    pub seeds: Vec<u64>,
    pub runs: Vec<RunStats>,
    pub failures: Vec<Failure>,
    pub excess_kurtosis: Option<Aggregate>,
    pub mean_abs_acf: Option<Aggregate>,
    pub raw_within_band: Option<Aggregate>,
    /// Lag-wise means over runs, lags `0..=50`.
    pub pooled_acf_raw: Vec<f64>,
    pub pooled_acf_abs: Vec<f64>,
}

pub struct Outcome {
    pub runs: Vec<RunOutput>,
    pub summary: Summary,
}

fn lagwise_mean(rows: &[Vec<f64>]) -> Vec<f64> {
    let Some(first) = rows.first() else {
        return Vec::new();
    };
    (0..first.len())
        .map(|l| rows.iter().map(|r| r[l]).sum::<f64>() / rows.len() as f64)
        .collect()
}

/// Statistics of finished runs plus the failures.
pub fn summarize(spec: &ExperimentSpec, runs: &[RunOutput], failures: Vec<Failure>) -> Summary {
    let mut stats_rows = Vec::new();
    let mut acf_raw = Vec::new();
    let mut acf_abs = Vec::new();
    for r in runs {
        let summary =
            stats::log_returns(&r.record.s).and_then(|x| stats::summarize(&x, SUMMARY_LAGS));
        let mass_drift = match (&r.field, r.initial_mass) {
            (Some(f), Some(m0)) => Some((f.total_mass() - m0).abs() / m0),
            _ => None,
        };
        let n = r.record.len();
        let mut row = RunStats {
            seed: r.seed,
            final_s: r.record.s[n - 1],
            final_ed: r.record.ed[n - 1],
            excess_kurtosis: None,
            mean_abs_acf: None,
            raw_within_band: None,
            stats_error: None,
            mass_drift,
            converged_at: r.converged_at,
            steady_state: r.steady_state.as_ref().map(|c| match c {
                Ok(l) => l.to_string(),
                Err(e) => format!("unclassified: {e}"),
            }),
            warnings: r.record.warnings.clone(),
        };
        match summary {
            Ok(s) => {
                row.excess_kurtosis = Some(s.excess_kurtosis);
                row.mean_abs_acf = Some(s.mean_abs_acf);
                row.raw_within_band = Some(s.raw_within_band);
                acf_raw.push(s.acf_raw);
                acf_abs.push(s.acf_abs);
            }
            Err(e) => row.stats_error = Some(e.to_string()),
        }
        stats_rows.push(row);
    }
    let collect =
        |f: fn(&RunStats) -> Option<f64>| -> Vec<f64> { stats_rows.iter().filter_map(f).collect() };
    Summary {
        tier: spec.tier.name(),
        arm: spec.arm(),
        theta: spec.params.theta,
        deterministic: spec.deterministic,
        master_seed: spec.params.seed,
        seeds: spec.seeds.clone(),
        excess_kurtosis: Aggregate::of(&collect(|r| r.excess_kurtosis)),
        mean_abs_acf: Aggregate::of(&collect(|r| r.mean_abs_acf)),
        raw_within_band: Aggregate::of(&collect(|r| r.raw_within_band)),
        runs: stats_rows,
        failures,
        pooled_acf_raw: lagwise_mean(&acf_raw),
        pooled_acf_abs: lagwise_mean(&acf_abs),
    }
}

/// Runs every seed (in parallel), writes the outputs if `spec.output` is set
/// and returns the runs with their summary.
///
/// A failing seed is recorded in the summary; the experiment fails only if
/// every seed does.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Outcome, ExperimentError> {
    spec.validate()?;
    let results: Vec<_> = spec
        .seeds
        .par_iter()
        .map(|&seed| (seed, run_seed(spec, seed)))
        .collect();
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for (seed, r) in results {
        match r {
            Ok(out) => runs.push(out),
            Err(e) => failures.push(Failure {
                seed,
                error: e.to_string(),
            }),
        }
    }
    let summary = summarize(spec, &runs, failures);
    if let Some(dir) = &spec.output {
        write_outputs(dir, spec, &runs, &summary)?;
    }
    if runs.is_empty() {
        return Err(ExperimentError::AllFailed(spec.seeds.len()));
    }
    Ok(Outcome { runs, summary })
}

pub fn record_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("run-{seed:04}.csv"))
}

fn write_outputs(
    dir: &Path,
    spec: &ExperimentSpec,
    runs: &[RunOutput],
    summary: &Summary,
) -> Result<(), ExperimentError> {
    let wrap = |source| IoError::Io {
        path: dir.to_path_buf(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(wrap)?;
    for r in runs {
        io::write_record(&r.record, &record_path(dir, r.seed))?;
        if let (true, Some(f)) = (spec.save_density, &r.field) {
            for (sp, tag) in [(Species::Plus, "plus"), (Species::Minus, "minus")] {
                let p = dir.join(format!("density-{:04}-{tag}.csv", r.seed));
                io::write_density(f, sp, &p)?;
            }
        }
    }
    let path = dir.join("summary.json");
    let json = serde_json::to_string_pretty(summary).expect("summary serializes");
    std::fs::write(&path, json + "\n").map_err(|source| IoError::Io { path, source })?;
    Ok(())
}

/// Conservation and collision diagnostics of a finished mean-field run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnosis {
    pub seed: u64,
    pub mass_drift: f64,
    pub invariant_residual: f64,
    pub final_ed: f64,
    pub converged_at: Option<usize>,
    pub steady_state: Option<String>,
}

pub fn diagnose(spec: &ExperimentSpec, run: &RunOutput) -> Option<Diagnosis> {
    let field = run.field.as_ref()?;
    let m0 = run.initial_mass?;
    let params = spec.solver_params();
    let setup = spec.meanfield?;
    let kernel = match setup.dimension {
        Dimension::Heterogeneous => SwitchingKernel::new(&params),
        Dimension::Homogeneous => SwitchingKernel::new(&params).inaction_only(),
    };
    let n = run.record.len();
    let s = run.record.s[n - 1];
    let residual = collision_invariant_residual(field, s, &kernel)
        .map(|r| r.relative())
        .unwrap_or(f64::NAN);
    Some(Diagnosis {
        seed: run.seed,
        mass_drift: (field.total_mass() - m0).abs() / m0,
        invariant_residual: residual,
        final_ed: run.record.ed[n - 1],
        converged_at: run.converged_at,
        steady_state: run.steady_state.as_ref().map(|c| match c {
            Ok(l) => l.to_string(),
            Err(e) => format!("unclassified: {e}"),
        }),
    })
}
