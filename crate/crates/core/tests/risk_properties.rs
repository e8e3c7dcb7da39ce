mod common;

use proptest::prelude::*;
use sysrisk_core::model::{Density, ScenarioSpace};
use sysrisk_core::optimizer::{minimize_over_simplex, SimplexOptions};
use sysrisk_core::risk::BaseRiskMeasure;
use sysrisk_core::systemic::relative_entropy;
use sysrisk_core::ExtendedReal;

fn measure() -> impl Strategy<Value = BaseRiskMeasure> {
    prop_oneof![
        (-2.0f64..2.0).prop_map(|l| BaseRiskMeasure::expectation(l).unwrap()),
        Just(BaseRiskMeasure::Entropic),
        (0.05f64..=1.0).prop_map(|b| BaseRiskMeasure::avar(b).unwrap()),
    ]
}

fn probs(n: usize) -> impl Strategy<Value = ScenarioSpace> {
    prop::collection::vec(0.05f64..1.0, n).prop_map(|raw| {
        let s: f64 = raw.iter().sum();
        ScenarioSpace::new(raw.iter().map(|v| v / s).collect()).unwrap()
    })
}

/// A space with two payoff vectors on it.
fn instance() -> impl Strategy<Value = (ScenarioSpace, Vec<f64>, Vec<f64>)> {
    (1usize..6).prop_flat_map(|n| {
        (probs(n), prop::collection::vec(-5.0f64..5.0, n), prop::collection::vec(-5.0f64..5.0, n))
    })
}

fn rho(m: &BaseRiskMeasure, s: &ScenarioSpace, y: &[f64]) -> f64 {
    m.rho(s, y).unwrap().to_f64()
}

/// AV@R by a dense grid over the Rockafellar-Uryasev variable t.
fn avar_grid(p: &[f64], y: &[f64], beta: f64) -> f64 {
    let lo = y.iter().map(|v| -v).fold(f64::INFINITY, f64::min);
    let hi = y.iter().map(|v| -v).fold(f64::NEG_INFINITY, f64::max);
    let mut candidates: Vec<f64> = (0..=20_000).map(|k| lo + (hi - lo) * k as f64 / 20_000.0).collect();
    candidates.extend(y.iter().map(|v| -v));
    candidates
        .iter()
        .map(|&t| t + p.iter().zip(y).map(|(pk, v)| pk * (-v - t).max(0.0)).sum::<f64>() / beta)
        .fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn monotone((s, y, y2) in instance(), m in measure()) {
        let hi: Vec<f64> = y.iter().zip(&y2).map(|(a, b)| a.max(*b)).collect();
        prop_assert!(rho(&m, &s, &hi) <= rho(&m, &s, &y) + 1e-9);
    }

    #[test]
    fn translative((s, y, _) in instance(), m in measure(), c in -3.0f64..3.0) {
        let shifted: Vec<f64> = y.iter().map(|v| v + c).collect();
        prop_assert!((rho(&m, &s, &shifted) - (rho(&m, &s, &y) - c)).abs() <= 1e-9);
    }

    #[test]
    fn convex((s, y, y2) in instance(), m in measure(), t in 0.0f64..1.0) {
        let mix: Vec<f64> = y.iter().zip(&y2).map(|(a, b)| t * a + (1.0 - t) * b).collect();
        prop_assert!(rho(&m, &s, &mix) <= t * rho(&m, &s, &y) + (1.0 - t) * rho(&m, &s, &y2) + 1e-9);
    }

    #[test]
    fn constant_payoffs((s, _, _) in instance(), m in measure(), c in -3.0f64..3.0) {
        let y = vec![c; s.len()];
        prop_assert!((rho(&m, &s, &y) - (m.rho_zero() - c)).abs() <= 1e-9);
    }

    #[test]
    fn avar_is_positively_homogeneous((s, y, _) in instance(), beta in 0.05f64..=1.0, g in 0.1f64..10.0) {
        let m = BaseRiskMeasure::avar(beta).unwrap();
        let scaled: Vec<f64> = y.iter().map(|v| g * v).collect();
        prop_assert!((rho(&m, &s, &scaled) - g * rho(&m, &s, &y)).abs() <= 1e-9 * (1.0 + g * rho(&m, &s, &y).abs()));
    }

    #[test]
    fn avar_matches_grid_oracle((s, y, _) in instance(), beta in 0.05f64..=1.0) {
        let m = BaseRiskMeasure::avar(beta).unwrap();
        prop_assert!((rho(&m, &s, &y) - avar_grid(s.probs(), &y, beta)).abs() <= 1e-9);
    }

    /// E^S[-Y] - alpha(S) <= rho(Y) with equality at the reported maximizer.
    #[test]
    fn penalty_dual_bound((s, y, w) in instance(), m in measure()) {
        let raw: Vec<f64> = w.iter().map(|v| v.exp()).collect();
        let total: f64 = raw.iter().zip(s.probs()).map(|(a, p)| a * p).sum();
        let dens = Density::new(&s, raw.iter().map(|v| v / total).collect()).unwrap();
        let r = rho(&m, &s, &y);
        if let ExtendedReal::Finite(a) = m.penalty(&s, &dens).unwrap() {
            let e: f64 = s.probs().iter().zip(dens.values()).zip(&y).map(|((p, d), v)| -p * d * v).sum();
            prop_assert!(e - a <= r + 1e-9);
        }
        let (value, sigma) = m.rho_with_measure(&s, &y).unwrap();
        let a = m.penalty_weights(s.probs(), &sigma).to_f64();
        let e: f64 = sigma.iter().zip(&y).map(|(sk, v)| -sk * v).sum();
        prop_assert!((e - a - value).abs() <= 1e-9 * (1.0 + value.abs()));
    }

    #[test]
    fn penalty_lower_bound((s, _, w) in instance(), m in measure()) {
        let raw: Vec<f64> = w.iter().map(|v| v.exp()).collect();
        let total: f64 = raw.iter().zip(s.probs()).map(|(a, p)| a * p).sum();
        let dens = Density::new(&s, raw.iter().map(|v| v / total).collect()).unwrap();
        prop_assert!(m.penalty(&s, &dens).unwrap().to_f64() >= -m.rho_zero() - 1e-12);
        prop_assert!(m.penalty(&s, &Density::reference(&s)).unwrap().to_f64() >= -m.rho_zero() - 1e-12);
    }

    #[test]
    fn entropic_scaling_identity((s, a, b) in instance(), w in 0.01f64..20.0) {
        let to_density = |v: &[f64]| {
            let raw: Vec<f64> = v.iter().map(|x| x.exp()).collect();
            let t: f64 = raw.iter().zip(s.probs()).map(|(r, p)| r * p).sum();
            Density::new(&s, raw.iter().map(|r| r / t).collect()).unwrap()
        };
        let (q, sm) = (to_density(&a), to_density(&b));
        let lhs = relative_entropy(&s, &q, &sm, w).unwrap().to_f64();
        let rhs = w * relative_entropy(&s, &q, &sm, 1.0).unwrap().to_f64() + w * w.ln();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }
}

/// rho(Y) = max_S E^S[-Y] - alpha(S), maximized by mirror descent.
#[test]
fn biconjugation_by_mirror_descent() {
    let mut r = common::rng(8);
    use rand::Rng;
    for _ in 0..40 {
        let n = r.gen_range(2..=4);
        let space = common::random_space(&mut r, n);
        let y: Vec<f64> = (0..n).map(|_| r.gen_range(-3.0..3.0)).collect();
        let p = space.probs().to_vec();
        for m in [BaseRiskMeasure::Entropic, BaseRiskMeasure::avar(0.3).unwrap()] {
            let caps = m.weight_caps(&p);
            let f = |s: &[f64]| {
                let mut v = 0.0;
                let mut g = vec![0.0; s.len()];
                for k in 0..s.len() {
                    v += s[k] * y[k];
                    g[k] = y[k];
                    if m == BaseRiskMeasure::Entropic {
                        let sk = s[k].max(1e-300);
                        v += sk * (sk / p[k]).ln();
                        g[k] += (sk / p[k]).ln() + 1.0;
                    }
                }
                (v, g)
            };
            let rep = minimize_over_simplex(f, &p, caps.as_deref(), &SimplexOptions::default()).unwrap();
            let exact = m.rho(&space, &y).unwrap().to_f64();
            assert!((-rep.objective - exact).abs() <= 1e-6, "{m:?}: {} vs {exact}", -rep.objective);
            assert!(rep.history.windows(2).all(|w| w[1] <= w[0]));
        }
    }
}

#[test]
fn worked_examples() {
    let half = ScenarioSpace::new(vec![0.5, 0.5]).unwrap();
    let m = BaseRiskMeasure::avar(0.5).unwrap();
    assert_eq!(m.rho(&half, &[0.0, -2.0]).unwrap(), ExtendedReal::Finite(2.0));
    let s = Density::new(&half, vec![1.8, 0.2]).unwrap();
    assert_eq!(m.penalty(&half, &s).unwrap(), ExtendedReal::Finite(0.0));
    let e = BaseRiskMeasure::expectation(0.3).unwrap();
    assert_eq!(e.penalty(&half, &Density::reference(&half)).unwrap(), ExtendedReal::Finite(0.3));
    assert_eq!(e.penalty(&half, &s).unwrap(), ExtendedReal::PosInf);
    assert!(BaseRiskMeasure::Entropic.acceptable(&half, &[0.0, 0.0]).unwrap());
    assert!(!BaseRiskMeasure::Entropic.acceptable(&half, &[-1.0, -1.0]).unwrap());
    assert!(BaseRiskMeasure::expectation(0.0).unwrap().acceptable(&half, &[1.0, 1.0]).unwrap());
}
