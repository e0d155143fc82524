//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Stochastic criteria use ensembles of ten
//! seeds (streams 0..9 of the preset master seed).

use std::time::{Duration, Instant};

use crossmf::experiment::{run_seed, RunOutput};
use crossmf::figures::{cross_solver_pair, deterministic_fv, tracking_grid, Figure, MF_ED0};
use crossmf::{run_experiment, ExperimentSpec};
use crossmf_core::diagnostics::{
    collision_invariant_residual, entropy_trajectory, ConvexFn, DualWeight, EntropyConfig,
};
use crossmf_core::kinetic::{
    herding_switch_prob, inaction_switch_prob, switching_probability, switching_rate,
    SwitchingKernel,
};
use crossmf_core::mc::{self, effective_switch_prob, SampleEnsemble};
use crossmf_core::meanfield::{DensityField, Dimension, FvSolver, InitialDensity, Mesh, Species};
use crossmf_core::stats::{self, SUMMARY_LAGS};
use crossmf_core::{rng, GridSpec, ModelParams, Preset, Pressures, PriceMode, Tier};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

/// Per-seed return statistics of a stochastic ensemble.
struct Ensemble {
    label: String,
    kurtosis: Vec<f64>,
    band: Vec<f64>,
    clustering: Vec<f64>,
    tail_ratio: Vec<(f64, f64)>,
    elapsed: Duration,
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Tail check on the qq plot: over the points in the outer decile of the
/// theoretical-quantile axis (|q| >= 0.9 max|q|), mean |sample quantile| /
/// mean |Gaussian quantile|, for the lower and the upper tail.
fn tail_ratios(returns: &[f64]) -> (f64, f64) {
    let qq = stats::qq_points(returns).unwrap();
    let edge = 0.9 * qq[0].0.abs().max(qq[qq.len() - 1].0.abs());
    let ratio = |pts: Vec<&(f64, f64)>| {
        pts.iter().map(|p| p.1.abs()).sum::<f64>() / pts.iter().map(|p| p.0.abs()).sum::<f64>()
    };
    (
        ratio(qq.iter().filter(|p| p.0 <= -edge).collect()),
        ratio(qq.iter().filter(|p| p.0 >= edge).collect()),
    )
}

fn run_ensemble(label: &str, spec: &ExperimentSpec) -> Ensemble {
    let t0 = Instant::now();
    let out = run_experiment(spec).unwrap_or_else(|e| panic!("{label}: {e}"));
    let elapsed = t0.elapsed();
    assert!(
        out.summary.failures.is_empty(),
        "{label}: {:?}",
        out.summary.failures
    );
    let mut e = Ensemble {
        label: label.to_string(),
        kurtosis: vec![],
        band: vec![],
        clustering: vec![],
        tail_ratio: vec![],
        elapsed,
    };
    for run in &out.runs {
        let r = stats::log_returns(&run.record.s).unwrap();
        let s = stats::summarize(&r, SUMMARY_LAGS).unwrap();
        e.kurtosis.push(s.excess_kurtosis);
        e.band.push(s.raw_within_band);
        e.clustering.push(s.mean_abs_acf);
        e.tail_ratio.push(tail_ratios(&r));
    }
    e
}

fn arm(fig: Figure, name: &str) -> ExperimentSpec {
    fig.arms()
        .into_iter()
        .find(|a| a.name == name)
        .unwrap_or_else(|| panic!("{} has no arm {name}", fig.name()))
        .spec
}

struct Ensembles {
    abm_inaction: Ensemble,
    abm_full: Ensemble,
    abm_theta2: Ensemble,
    kin_inaction: Ensemble,
    kin_full: Ensemble,
    kin_theta2: Ensemble,
    homo: Ensemble,
    het_full: Ensemble,
    het_theta2: Ensemble,
}

impl Ensembles {
    fn run() -> Self {
        Ensembles {
            abm_inaction: run_ensemble("abm", &arm(Figure::FirstOriginal, "inaction-only")),
            abm_full: run_ensemble("abm", &arm(Figure::SecondOriginal, "theta0")),
            abm_theta2: run_ensemble("abm", &arm(Figure::SecondOriginal, "theta2")),
            kin_inaction: run_ensemble("kinetic", &arm(Figure::KineticFirst, "inaction-only")),
            kin_full: run_ensemble("kinetic", &arm(Figure::KineticSecond, "theta0")),
            kin_theta2: run_ensemble("kinetic", &arm(Figure::KineticSecond, "theta2")),
            homo: run_ensemble("homogeneous mf", &arm(Figure::Homo1, "homogeneous")),
            het_full: run_ensemble("heterogeneous mf", &arm(Figure::Hetero2, "theta0")),
            het_theta2: run_ensemble("heterogeneous mf", &arm(Figure::Hetero2, "theta2")),
        }
    }
}

fn gaussian_baseline(e: &Ensembles) -> Verdict {
    let mut pass = true;
    let mut parts = vec![];
    for x in [&e.abm_inaction, &e.kin_inaction, &e.homo] {
        let k = mean(&x.kurtosis.iter().map(|k| k.abs()).collect::<Vec<_>>());
        let b = mean(&x.band);
        let ok = k < 0.5 && b >= 0.9 && x.elapsed < Duration::from_secs(120);
        pass &= ok;
        parts.push(format!(
            "{} mean|k|={k:.3} band={b:.3} {:.0}s{}",
            x.label,
            x.elapsed.as_secs_f64(),
            if ok { "" } else { " (fail)" }
        ));
    }
    verdict(pass, parts.join("; "))
}

fn fat_tails(e: &Ensembles) -> Verdict {
    let mut pass = true;
    let mut parts = vec![];
    for x in [&e.abm_full, &e.kin_full, &e.het_full] {
        let k = median(&x.kurtosis);
        let lo = median(&x.tail_ratio.iter().map(|t| t.0).collect::<Vec<_>>());
        let hi = median(&x.tail_ratio.iter().map(|t| t.1).collect::<Vec<_>>());
        let ok = k > 1.0 && lo > 1.0 && hi > 1.0;
        pass &= ok;
        parts.push(format!(
            "{} median k={k:.2} tail ratios {lo:.3}/{hi:.3}{}",
            x.label,
            if ok { "" } else { " (fail)" }
        ));
    }
    verdict(pass, parts.join("; "))
}

fn volatility_clustering(e: &Ensembles) -> Verdict {
    let mut pass = true;
    let mut parts = vec![];
    for (base, x) in [
        (&e.abm_full, &e.abm_theta2),
        (&e.kin_full, &e.kin_theta2),
        (&e.het_full, &e.het_theta2),
    ] {
        let (s0, s2) = (mean(&base.clustering), mean(&x.clustering));
        let b = mean(&x.band);
        let ok = s2 > 0.05 && s2 > s0 && b >= 0.8;
        pass &= ok;
        parts.push(format!(
            "{} score {s2:.4} vs {s0:.4} band={b:.3}{}",
            x.label,
            if ok { "" } else { " (fail)" }
        ));
    }
    verdict(pass, parts.join("; "))
}

fn single(spec: &ExperimentSpec) -> (RunOutput, Duration) {
    let t0 = Instant::now();
    let run = run_seed(spec, 0).expect("run failed");
    (run, t0.elapsed())
}

fn final_ed(run: &RunOutput) -> f64 {
    *run.record.ed.last().unwrap()
}

fn label(run: &RunOutput) -> String {
    match &run.steady_state {
        Some(Ok(l)) => l.to_string(),
        Some(Err(e)) => format!("unclassified ({e})"),
        None => "none".into(),
    }
}

fn mass_drift(run: &RunOutput) -> f64 {
    let m0 = run.initial_mass.unwrap();
    (run.field.as_ref().unwrap().total_mass() - m0).abs() / m0
}

fn heterogeneous_equilibrium(ode2: &(RunOutput, Duration)) -> Verdict {
    let (run, dt) = ode2;
    let ed = final_ed(run);
    let l = label(run);
    let ok = ed.abs() > 0.99 && (l == "B" || l == "C") && *dt < Duration::from_secs(300);
    verdict(
        ok,
        format!(
            "ED(0.4)={ed:.8} class {l}, 400x400 in {:.1}s",
            dt.as_secs_f64()
        ),
    )
}

fn homogeneous_profile() -> Verdict {
    let (ode1, _) = single(&arm(Figure::Ode1, "homogeneous"));
    let (stab, _) = single(&arm(Figure::Stability, "homogeneous"));
    let change = ode1.last_change.unwrap();
    let l1 = label(&ode1);
    let l2 = label(&stab);
    let homogeneous = ["a-i", "a-ii", "b-i", "b-ii", "c-i", "c-ii"];
    let mixed = ["a-ii", "b-ii", "c-ii"];
    let ok = change < 1e-8 && homogeneous.contains(&l1.as_str()) && mixed.contains(&l2.as_str());
    verdict(
        ok,
        format!(
            "final change {change:.2e} class {l1}; from ED(0)=0.99: ED={:.4} class {l2}",
            final_ed(&stab)
        ),
    )
}

fn null_space_stasis() -> Verdict {
    let spec = arm(Figure::Supp, "homogeneous");
    let setup = spec.meanfield.unwrap();
    let init =
        DensityField::initial(setup.dimension.mesh(setup.grid), &spec.params, setup.init).unwrap();
    let (run, _) = single(&spec);
    let f = run.field.as_ref().unwrap();
    let drift = f
        .plus
        .iter()
        .chain(&f.minus)
        .zip(init.plus.iter().chain(&init.minus))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let (het, _) = single(&arm(Figure::SuppH, "full"));
    let ed = final_ed(&het);
    verdict(
        drift <= 1e-13 && ed.abs() > 0.99,
        format!("homogeneous max cell drift {drift:.1e}; heterogeneous ED -> {ed:.8}"),
    )
}

fn conservation(ode2: &(RunOutput, Duration)) -> Verdict {
    let fv_drift = mass_drift(&ode2.0);

    let params = Preset::MeanField.config().params;
    let mut rng = rng::stream(params.seed, 0);
    let mut ens = SampleEnsemble::init(
        &params,
        InitialDensity::UniformBlock { ed0: MF_ED0 },
        Dimension::Heterogeneous,
        &mut rng,
    )
    .unwrap();
    let mut count_ok = true;
    mc::run_mc_with(
        &mut ens,
        &params,
        PriceMode::Stochastic,
        &mut rng,
        |e, _| {
            count_ok &= e.len() == params.n_agents;
        },
    )
    .unwrap();

    // per-step collision invariant along a stochastic heterogeneous run
    let grid = GridSpec {
        n_m: 100,
        n_c: 100,
        ..tracking_grid(&params)
    };
    let field = DensityField::initial(
        Mesh::heterogeneous(grid),
        &params,
        InitialDensity::UniformBlock { ed0: MF_ED0 },
    )
    .unwrap();
    let mut solver = FvSolver::new(field, &params, PriceMode::Stochastic).unwrap();
    let mut worst: f64 = 0.0;
    solver
        .run_with(&mut rng::stream(params.seed, 0), params.n_steps(), |s| {
            let r =
                collision_invariant_residual(&s.field, s.market.s, &s.operator().kernel).unwrap();
            worst = worst.max(r.relative());
        })
        .unwrap();
    verdict(
        fv_drift <= 1e-8 && count_ok && worst <= 1e-12,
        format!(
            "FV mass drift {fv_drift:.1e}; MC sample count exact: {count_ok}; \
             worst per-step invariant residual {worst:.1e}"
        ),
    )
}

fn cross_solver() -> Verdict {
    let (fv_spec, mc_spec) = cross_solver_pair();
    let (fv, _) = single(&fv_spec);
    let (mc, _) = single(&mc_spec);
    let sup = fv
        .record
        .ed
        .iter()
        .zip(&mc.record.ed)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let same_len = fv.record.len() == mc.record.len();

    let homo = arm(Figure::Ode1, "homogeneous");
    let het = ExperimentSpec {
        pressures: Pressures::InactionOnly,
        ..deterministic_fv(
            Dimension::Heterogeneous,
            InitialDensity::UniformBlock { ed0: MF_ED0 },
        )
    };
    let (a, _) = single(&homo);
    let (b, _) = single(&het);
    let (fa, fb) = (a.field.unwrap(), b.field.unwrap());
    let l1: f64 = [Species::Plus, Species::Minus]
        .into_iter()
        .map(|sp| {
            fa.m_marginal_mass(sp)
                .iter()
                .zip(fb.m_marginal_mass(sp))
                .map(|(x, y)| (x - y).abs())
                .sum::<f64>()
        })
        .sum();
    verdict(
        same_len && sup <= 0.05 && l1 <= 1e-2,
        format!("MC vs FV sup|dED|={sup:.4}; lambda1=0 marginal L1={l1:.1e}"),
    )
}

/// Both fields evolve under one positive linear operator, so `g0 <= p0` cell
/// by cell keeps `g <= p` for all time; a reference cell that drains below
/// the smallest double then takes `g` with it.
fn entropy_monotone() -> Verdict {
    let cfg = Preset::MeanField.config();
    let params = cfg.params;
    let mut pass = true;
    let mut parts = vec![];
    for dim in [Dimension::Homogeneous, Dimension::Heterogeneous] {
        let mesh = dim.mesh(cfg.grid.unwrap());
        let p0 = DensityField::initial(
            mesh.clone(),
            &params,
            InitialDensity::UniformBlock { ed0: -0.2 },
        )
        .unwrap()
        .with_floor(1e-3);
        let mut g0 = p0.clone();
        let (n_m, n_c) = (mesh.n_m(), mesh.n_c());
        for k in 0..mesh.len() {
            let x = (k % n_m) as f64 / n_m as f64;
            let y = (k / n_m) as f64 / n_c as f64;
            g0.plus[k] *= 0.2 + 0.8 * x * (1.0 - 0.5 * y);
            g0.minus[k] *= 1.0 - 0.8 * x;
        }
        let config = EntropyConfig {
            k: ConvexFn::Quadratic,
            psi: DualWeight::Unit,
        };
        let e = entropy_trajectory(&params, &g0, &p0, &config, params.n_steps()).unwrap();
        let worst = e
            .windows(2)
            .map(|w| (w[1] - w[0]) / w[0].abs())
            .fold(f64::NEG_INFINITY, f64::max);
        let ok = worst <= 1e-10;
        pass &= ok;
        parts.push(format!(
            "{dim:?}: {} steps, H {:.4e} -> {:.4e}, worst relative increase {worst:.1e}",
            e.len() - 1,
            e[0],
            e[e.len() - 1]
        ));
    }
    verdict(pass, parts.join("; "))
}

fn worked_values() -> Verdict {
    let p = Preset::KineticParticle.config().params;
    let checks = [
        ("p(2e-3)", herding_switch_prob(2e-3, &p), 1.0 / 3.0),
        ("q(1,1.2)", inaction_switch_prob(1.0, 1.2, &p), 0.5),
        (
            "lambda_P",
            switching_probability(2e-3, 1.0, 1.2, &p),
            5.0 / 12.0,
        ),
        (
            "lambda_hat",
            effective_switch_prob(switching_rate(2e-3, 1.0, 1.2, &p), p.dt),
            // 1 - exp(-5/12) to 30 digits
            0.340759369799556253745239588987,
        ),
    ];
    let worst = checks.iter().map(|c| (c.1 - c.2).abs()).fold(0.0, f64::max);
    let k = SwitchingKernel::new(&p);
    let kernel_ok = (k.probability(2e-3, 1.0, 1.2) - 5.0 / 12.0).abs() <= 1e-12;
    let listed: Vec<String> = checks
        .iter()
        .map(|c| format!("{}={:.5}", c.0, c.1))
        .collect();
    verdict(
        worst <= 1e-12 && kernel_ok,
        format!("{} (max error {worst:.1e})", listed.join(" ")),
    )
}

/// Best of five timings of three runs per arm, both arms at the agent-based
/// preset's N and horizon.
fn kinetic_not_slower() -> Verdict {
    let abm = Preset::AbmOriginal.config().params;
    let kin = ModelParams {
        n_agents: abm.n_agents,
        t_end: abm.t_end,
        ..Preset::KineticParticle.config().params
    };
    let time = |tier, pressures, params| {
        let spec = ExperimentSpec::new(tier, pressures, params);
        (0..5)
            .map(|_| {
                let t0 = Instant::now();
                for seed in 0..3 {
                    run_seed(&spec, seed).unwrap();
                }
                t0.elapsed().as_secs_f64()
            })
            .fold(f64::INFINITY, f64::min)
    };
    let mut parts = vec![];
    let (mut tk, mut ta) = (0.0, 0.0);
    for pressures in [Pressures::InactionOnly, Pressures::Full] {
        let a = time(Tier::Abm, pressures, abm);
        let k = time(Tier::Kinetic, pressures, kin);
        parts.push(format!("{}: kinetic {k:.3}s ABM {a:.3}s", pressures.name()));
        ta += a;
        tk += k;
    }
    verdict(
        tk <= ta,
        format!(
            "N={}, 3 runs per arm: {}; total kinetic {tk:.3}s ABM {ta:.3}s",
            abm.n_agents,
            parts.join(", ")
        ),
    )
}

fn main() {
    let mut failed = 0;
    let mut report = |n: usize, v: Verdict| {
        println!(
            "criterion {n:2}: {} {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        if !v.pass {
            failed += 1;
        }
    };
    report(10, worked_values());
    report(9, entropy_monotone());
    let ode2 = single(&arm(Figure::Ode2, "full"));
    report(4, heterogeneous_equilibrium(&ode2));
    report(5, homogeneous_profile());
    report(6, null_space_stasis());
    report(7, conservation(&ode2));
    report(8, cross_solver());
    report(11, kinetic_not_slower());
    let e = Ensembles::run();
    report(1, gaussian_baseline(&e));
    report(2, fat_tails(&e));
    report(3, volatility_clustering(&e));
    println!("{failed} of 11 criteria failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
