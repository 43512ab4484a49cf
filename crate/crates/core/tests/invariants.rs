use std::sync::Arc;

use proptest::prelude::*;
use yardsale::agent::AgentEnsemble;
use yardsale::boltzmann::{BoltzmannConfig, CollisionOperator};
use yardsale::fp::{self, Closure, FpConfig};
use yardsale::gini::{gini_via_lorenz, gini_via_survival, sample_gini};
use yardsale::{io, BetaDistribution, WealthDistribution, WealthGrid};

fn grid() -> Arc<WealthGrid> {
    Arc::new(WealthGrid::log_with_zero_cell(1e-3, 1e3, 160).unwrap())
}

fn bumps() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((0.1f64..3.0, 0.05f64..5.0, 0.1f64..2.0), 1..4)
}

fn state(g: Arc<WealthGrid>, bumps: &[(f64, f64, f64)]) -> WealthDistribution {
    WealthDistribution::from_fn(g, |w| bumps.iter().map(|&(s, th, a)| a * w.powf(s) * (-w / th).exp()).sum()).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn boltzmann_rhs_conserves_moments(b in bumps(), b0 in 0.02f64..0.5) {
        let d = state(grid(), &b);
        let op = CollisionOperator::new(BetaDistribution::uniform(b0).unwrap(), 8).unwrap();
        let m = op.rhs(&d).unwrap().moments();
        let scale = d.moments();
        prop_assert!(m.n.abs() <= 1e-12 * scale.n, "{m:?}");
        prop_assert!(m.w.abs() <= 1e-9 * scale.w, "{m:?}");
    }

    #[test]
    fn boltzmann_step_keeps_gini_growing(b in bumps()) {
        let d = state(grid(), &b);
        let beta = BetaDistribution::uniform(0.2).unwrap();
        let op = CollisionOperator::new(beta, 8).unwrap();
        let dt = op.suggested_dt(&d).unwrap();
        let cfg = BoltzmannConfig { beta, beta_quadrature_points: 8, dt, t_end: dt, integrator: Default::default() };
        let (next, _) = yardsale::boltzmann::step_boltzmann(&d, &cfg).unwrap();
        prop_assert!(next.density().iter().all(|&p| p >= 0.0));
        prop_assert!(gini_via_lorenz(&next).unwrap() >= gini_via_lorenz(&d).unwrap() - 1e-12);
    }

    #[test]
    fn fp_step_conserves_and_orders(b in bumps(), one_minus in any::<bool>()) {
        let g = grid();
        let d = state(g.clone(), &b);
        let gamma = 0.01;
        let closure = if one_minus { Closure::OneMinusC } else { Closure::C };
        let dt = fp::stability_bound(&d, gamma, closure).unwrap();
        let next = fp::step_fp(&d, &FpConfig { gamma, dt, t_end: dt, closure }).unwrap();
        let (m0, m1) = (d.moments(), next.moments());
        prop_assert!(close(m0.n, m1.n, 1e-12) && close(m0.w, m1.w, 1e-12));
        prop_assert!(fp::fp_gini_rate(&d, gamma, closure).unwrap() >= 0.0);
    }

    #[test]
    fn lorenz_and_gini_agree(b in bumps()) {
        let d = state(grid(), &b);
        let curve = d.lorenz_curve();
        prop_assert!(curve.violations(1e-12).is_empty());
        let g = gini_via_lorenz(&d).unwrap();
        prop_assert!((0.0..1.0).contains(&g));
        prop_assert!((g - curve.gini()).abs() < 1e-12);
        prop_assert!((g - gini_via_survival(&d).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn sample_gini_is_scale_invariant(w in prop::collection::vec(0.0f64..100.0, 2..200), c in 0.01f64..100.0) {
        prop_assume!(w.iter().sum::<f64>() > 0.0);
        let g = sample_gini(&w).unwrap();
        let scaled: Vec<f64> = w.iter().map(|x| x * c).collect();
        prop_assert!((0.0..1.0).contains(&g));
        prop_assert!((g - sample_gini(&scaled).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn agent_transactions_conserve_wealth(w in prop::collection::vec(0.0f64..10.0, 2..50), seed in any::<u64>()) {
        prop_assume!(w.iter().sum::<f64>() > 0.0);
        let mut e = AgentEnsemble::from_wealths(&w, seed).unwrap();
        let units = e.total_units();
        e.advance(&BetaDistribution::uniform(0.3).unwrap(), 500);
        prop_assert_eq!(e.total_units(), units);
        prop_assert!(e.min_wealth() >= 0.0);
    }

    #[test]
    fn distribution_csv_round_trip(b in bumps(), log in any::<bool>()) {
        let g = if log { grid() } else { Arc::new(WealthGrid::linear(50.0, 101).unwrap()) };
        let d = state(g, &b);
        let mut buf = Vec::new();
        io::write_distribution(&mut buf, &d).unwrap();
        let back = io::read_distribution(buf.as_slice()).unwrap();
        prop_assert_eq!(back.grid().spacing(), d.grid().spacing());
        prop_assert_eq!(back.grid().nodes(), d.grid().nodes());
        prop_assert_eq!(back.density(), d.density());
    }
}
