use proptest::prelude::*;

use crossmf_core::abm::{self, Agent, AgentEnsemble};
use crossmf_core::diagnostics::collision_invariant_residual;
use crossmf_core::kinetic::{self, SwitchingKernel};
use crossmf_core::mc::{self, effective_switch_prob, SampleEnsemble};
use crossmf_core::meanfield::{
    ed_functional, CrossShape, DensityField, Dimension, InitialDensity, Mesh, Quadrature,
    StepOperator,
};
use crossmf_core::price::{
    excess_demand, price_step_deterministic, price_step_euler_maruyama, price_step_exponential,
};
use crossmf_core::rng::stream;
use crossmf_core::{
    stats, GridSpec, MarketState, ModelParams, Position, Preset, Pressures, PriceMode,
};

fn abm_params() -> ModelParams {
    Preset::AbmOriginal.config().params
}

fn small_mesh(het: bool) -> Mesh {
    let g = GridSpec::linear(0.6, 1.6, 7, 0.0, 0.01, 5);
    if het {
        Mesh::heterogeneous(g)
    } else {
        Mesh::homogeneous(g)
    }
}

fn random_field(mesh: Mesh, plus: &[f64], minus: &[f64]) -> DensityField {
    let mut f = DensityField::zeros(mesh);
    let n = f.plus.len();
    f.plus.copy_from_slice(&plus[..n]);
    f.minus.copy_from_slice(&minus[..n]);
    f
}

fn cells() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.0..10.0f64], 35)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn excess_demand_is_bounded(longs in prop::collection::vec(any::<bool>(), 1..200)) {
        let pos = longs.iter().map(|&l| if l { Position::Long } else { Position::Short });
        let ed = excess_demand(pos).unwrap();
        prop_assert!((-1.0..=1.0).contains(&ed));
        let balanced = longs.iter().flat_map(|_| [Position::Long, Position::Short]);
        prop_assert_eq!(excess_demand(balanced).unwrap(), 0.0);
    }

    #[test]
    fn exponential_step_ratio_ignores_price(
        s in 0.01..100.0f64, scale in 0.1..10.0f64, eta in -4.0..4.0f64,
        ed in -1.0..1.0f64, prev in -1.0..1.0f64, theta in 0.0..3.0f64,
    ) {
        let p = abm_params().with_theta(theta);
        let m = MarketState { s, ed, ed_prev: prev, t: 0.0 };
        let a = price_step_exponential(&m, &p, eta) / s;
        let b = price_step_exponential(&MarketState { s: s * scale, ..m }, &p, eta) / (s * scale);
        prop_assert!(a > 0.0);
        prop_assert!((a - b).abs() <= 1e-14 * a);
    }

    #[test]
    fn euler_maruyama_without_noise_is_the_drift_step(
        s in 0.01..100.0f64, ed in -1.0..1.0f64, prev in -1.0..1.0f64, theta in 0.0..3.0f64,
    ) {
        let p = abm_params().with_theta(theta);
        let m = MarketState { s, ed, ed_prev: prev, t: 0.0 };
        prop_assert_eq!(
            price_step_euler_maruyama(&m, &p, 0.0).unwrap(),
            price_step_deterministic(&m, &p)
        );
    }

    #[test]
    fn kernel_probabilities_are_probabilities(
        c in 0.0..0.01f64, m in 0.2..5.0f64, s in 0.2..5.0f64, dc in 0.0..0.01f64,
    ) {
        let k = SwitchingKernel::new(&Preset::KineticParticle.config().params);
        for v in [k.p(c), k.q(m, s), k.probability(c, m, s)] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!(k.p(c + dc) >= k.p(c));
        prop_assert_eq!(k.q(m, m), 0.0);
        let lh = effective_switch_prob(k.rate(c, m, s), 4e-5);
        prop_assert!((0.0..1.0).contains(&lh));
    }

    #[test]
    fn abm_step_invariants(seed in any::<u64>(), theta in 0.0..2.0f64, full in any::<bool>()) {
        let p = ModelParams { n_agents: 60, ..abm_params().with_theta(theta) };
        let pressures = if full { Pressures::Full } else { Pressures::InactionOnly };
        let mut rng = stream(seed, 0);
        let mut ens = abm::init_ensemble(&p, pressures, &mut rng);
        let mut market = MarketState::initial(p.s0, ens.excess_demand());
        let mut prices = vec![p.s0];
        for _ in 0..400 {
            let before = ens.agents.clone();
            let n = abm::abm_step(&mut ens, &mut market, &p, PriceMode::Stochastic, &mut rng).unwrap();
            prices.push(market.s);
            let mut net = 0.0;
            for (b, a) in before.iter().zip(&ens.agents) {
                prop_assert!(a.c >= 0.0);
                prop_assert!((a.alpha, a.beta) == (b.alpha, b.beta));
                if a.gamma != b.gamma {
                    prop_assert_eq!((a.c, a.m), (0.0, market.s));
                    net += a.gamma.sign();
                }
                prop_assert!(prices.contains(&a.m));
            }
            let moved = before.iter().zip(&ens.agents).filter(|(b, a)| a.gamma != b.gamma).count();
            prop_assert_eq!(moved, n);
            prop_assert!((market.delta_ed() - 2.0 * net / 60.0).abs() < 1e-12);
        }
    }

    #[test]
    fn inaction_only_run_ignores_herding_thresholds(seed in any::<u64>(), scale in 0.1..10.0f64) {
        let p = ModelParams { n_agents: 80, t_end: 0.04, ..abm_params() };
        let mut rng = stream(seed, 0);
        let ens = abm::init_ensemble(&p, Pressures::InactionOnly, &mut rng);
        let resampled: Vec<Agent> = ens.agents.iter().map(|a| Agent { beta: a.beta * scale, ..*a }).collect();
        let other = AgentEnsemble::new(resampled, Pressures::InactionOnly).unwrap();
        let a = abm::simulate_abm(ens, &p, PriceMode::Stochastic, &mut stream(seed, 1)).unwrap();
        let b = abm::simulate_abm(other, &p, PriceMode::Stochastic, &mut stream(seed, 1)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn kinetic_runs_are_reproducible(seed in any::<u64>()) {
        let p = ModelParams { n_agents: 200, t_end: 0.02, ..Preset::KineticParticle.config().params };
        let a = kinetic::run_kinetic_particle(&p, Pressures::Full, PriceMode::Stochastic, &mut stream(seed, 3)).unwrap();
        let b = kinetic::run_kinetic_particle(&p, Pressures::Full, PriceMode::Stochastic, &mut stream(seed, 3)).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.ed.iter().all(|e| (-1.0..=1.0).contains(e)));
    }

    #[test]
    fn kinetic_run_loop_matches_single_steps(
        seed in any::<u64>(), full in any::<bool>(), stochastic in any::<bool>(), theta in 0.0..2.0f64,
    ) {
        let p = ModelParams { n_agents: 157, t_end: 0.08, ..Preset::KineticParticle.config().params.with_theta(theta) };
        let pressures = if full { Pressures::Full } else { Pressures::InactionOnly };
        let mode = if stochastic { PriceMode::Stochastic } else { PriceMode::Deterministic };
        let k = SwitchingKernel::for_pressures(&p, pressures);
        let mut a = kinetic::init_agents(&p);
        let rec = kinetic::simulate_kinetic(&mut a, &p, &k, pressures, mode, &mut stream(seed, 0)).unwrap();
        let mut b = kinetic::init_agents(&p);
        let mut rng = stream(seed, 0);
        let mut market = MarketState::initial(p.s0, rec.ed[0]);
        for step in 1..rec.len() {
            kinetic::kinetic_step(&mut b, &mut market, &p, &k, pressures, mode, &mut rng).unwrap();
            prop_assert_eq!((market.s, market.ed), (rec.s[step], rec.ed[step]));
        }
        prop_assert_eq!(a, b);
    }

    #[test]
    fn fv_step_conserves_mass_and_positivity(
        plus in cells(), minus in cells(), s in 0.7..1.5f64, ed in -1.0..1.0f64, het in any::<bool>(),
    ) {
        let p = Preset::MeanField.config().params;
        let mesh = small_mesh(het);
        let mut f = random_field(mesh.clone(), &plus, &minus);
        let m0 = f.total_mass();
        let op = StepOperator::new(&p, &mesh);
        let co = op.coefficients(&mesh, s, ed, &CrossShape).unwrap();
        op.forward(&mut f, &co);
        prop_assert!(f.min_value() >= 0.0);
        prop_assert!((f.total_mass() - m0).abs() <= 1e-13 * m0.max(1.0));
    }

    #[test]
    fn adjoint_is_the_transpose(
        plus in cells(), minus in cells(), pp in cells(), pm in cells(),
        s in 0.7..1.5f64, ed in -1.0..1.0f64, het in any::<bool>(),
    ) {
        let p = Preset::MeanField.config().params;
        let mesh = small_mesh(het);
        let f = random_field(mesh.clone(), &plus, &minus);
        let op = StepOperator::new(&p, &mesh);
        let co = op.coefficients(&mesh, s, ed, &CrossShape).unwrap();
        let mut tf = f.clone();
        op.forward(&mut tf, &co);
        let n = mesh.len();
        let (mut a, mut b) = (pp[..n].to_vec(), pm[..n].to_vec());
        op.adjoint(&mesh, &mut a, &mut b, &co);
        // pairing with cell masses
        let lhs: f64 = (0..n).map(|k| {
            let ar = mesh.area(k % mesh.n_m(), k / mesh.n_m());
            (pp[k] * tf.plus[k] + pm[k] * tf.minus[k]) * ar
        }).sum();
        let rhs: f64 = (0..n).map(|k| {
            let ar = mesh.area(k % mesh.n_m(), k / mesh.n_m());
            (a[k] * f.plus[k] + b[k] * f.minus[k]) * ar
        }).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-11 * lhs.abs().max(1.0));
    }

    #[test]
    fn collision_conserves_mass(
        plus in cells(), minus in cells(), s in 0.65..1.55f64, het in any::<bool>(),
    ) {
        let p = Preset::MeanField.config().params;
        let f = random_field(small_mesh(het), &plus, &minus);
        let r = collision_invariant_residual(&f, s, &SwitchingKernel::new(&p)).unwrap();
        prop_assert!(r.relative() <= 1e-12, "{r:?}");
    }

    #[test]
    fn mc_preserves_sample_count(seed in any::<u64>(), het in any::<bool>()) {
        let p = ModelParams { n_agents: 500, t_end: 0.004, ..Preset::MeanField.config().params };
        let dim = if het { Dimension::Heterogeneous } else { Dimension::Homogeneous };
        let mut rng = stream(seed, 0);
        let mut ens = SampleEnsemble::init(&p, InitialDensity::UniformBlock { ed0: 0.2 }, dim, &mut rng).unwrap();
        let rec = mc::run_mc(&mut ens, &p, PriceMode::Stochastic, &mut rng).unwrap();
        prop_assert_eq!(ens.len(), 500);
        prop_assert!(ens.c.iter().all(|&c| c >= 0.0));
        let mesh = dim.mesh(GridSpec::linear(0.05, 20.0, 50, 0.0, 1.0, 10));
        let r = mc::reconstruct_density(&ens, &mesh);
        prop_assert_eq!(r.out_of_range, 0);
        let ed = ed_functional(&r.field, Quadrature::Midpoint);
        prop_assert!((ed - rec.ed[rec.len() - 1]).abs() < 1e-12);
    }

    #[test]
    fn acf_and_returns(xs in prop::collection::vec(0.5..2.0f64, 60..200), k in 0.1..10.0f64) {
        let r = stats::log_returns(&xs).unwrap();
        let scaled: Vec<f64> = xs.iter().map(|x| x * k).collect();
        let r2 = stats::log_returns(&scaled).unwrap();
        for (a, b) in r.iter().zip(&r2) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        if let Ok(rho) = stats::acf(&r, 20) {
            prop_assert!((rho[0] - 1.0).abs() < 1e-12);
            prop_assert!(rho.iter().all(|x| x.abs() <= 1.0 + 1e-12));
        }
        if let Ok(q) = stats::qq_points(&r) {
            prop_assert!(q.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1));
        }
    }
}

#[test]
fn homogeneous_mass_is_conserved_over_a_run() {
    let cfg = Preset::MeanField.config();
    let mesh = Mesh::homogeneous(cfg.grid.unwrap());
    let f = DensityField::initial(mesh, &cfg.params, InitialDensity::UniformBlock { ed0: 0.3 })
        .unwrap();
    let m0 = f.total_mass();
    let mut s =
        crossmf_core::meanfield::FvSolver::new(f, &cfg.params, PriceMode::Deterministic).unwrap();
    s.run(&mut stream(0, 0)).unwrap();
    assert!((s.field.total_mass() - m0).abs() < 1e-8 * m0);
}
