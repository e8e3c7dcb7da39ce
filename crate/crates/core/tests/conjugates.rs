mod common;

use rand::Rng;
use sysrisk_core::aggregation::AggregationModel;
use sysrisk_core::model::LiabilityNetwork;
use sysrisk_core::ExtendedReal;

use common::*;

/// g(z) = sup_x (Lambda(x) - z'x). For the network model and z >= 0 the
/// inner x is the smallest wealth supporting p, x_i = p_i - sum_j a_ji p_j,
/// which leaves a linear function of p over the box [0, pbar]; its maximum
/// sits at a vertex, so enumerating the 2^d vertices gives g exactly.
fn box_vertex_oracle(net: &LiabilityNetwork, z: &[f64]) -> f64 {
    let d = net.dim();
    let pbar = net.pbar();
    let mut best = f64::NEG_INFINITY;
    for mask in 0..(1u32 << d) {
        let p: Vec<f64> = (0..d).map(|i| if mask >> i & 1 == 1 { pbar[i] } else { 0.0 }).collect();
        let mut v = 0.0;
        for i in 0..d {
            let inflow: f64 = (0..d).map(|j| net.relative(j + 1, i + 1) * p[j]).sum();
            v += net.relative(i + 1, 0) * p[i] - z[i] * (p[i] - inflow);
        }
        best = best.max(v);
    }
    best
}

#[test]
fn network_conjugate_matches_box_vertices() {
    let mut r = rng(11);
    let mut checked = 0;
    for _ in 0..50 {
        let d = r.gen_range(1..=3);
        let net = random_network(&mut r, d);
        let agg = AggregationModel::eisenberg_noe(net.clone());
        for _ in 0..10 {
            let z: Vec<f64> = (0..d).map(|_| r.gen_range(0.0..3.0)).collect();
            let g = agg.conjugate(&z).unwrap().to_f64();
            let o = box_vertex_oracle(&net, &z);
            assert!((g - o).abs() <= 1e-9, "g={g} oracle={o} z={z:?}");
            checked += 1;
        }
    }
    assert_eq!(checked, 500);
}

#[test]
fn network_conjugate_two_bank_example() {
    let agg = AggregationModel::eisenberg_noe(two_bank());
    assert_eq!(agg.conjugate(&[0.0, 0.0]).unwrap(), ExtendedReal::Finite(2.0));
    assert_eq!(agg.conjugate(&[-1.0, 0.0]).unwrap(), ExtendedReal::PosInf);
}

/// Fenchel-Young: Lambda(x) <= g(z) + z'x for all x and z, with equality
/// when z is a supergradient at x.
#[test]
fn fenchel_young_for_every_model() {
    let mut r = rng(3);
    for agg in all_aggregations() {
        let d = agg.dim();
        for _ in 0..200 {
            let x: Vec<f64> = (0..d).map(|_| r.gen_range(0.0..3.0)).collect();
            let lam = agg.evaluate(&x).unwrap();
            let z = agg.sample_conjugate_domain(&mut r).unwrap();
            let g = agg.conjugate(&z).unwrap();
            assert!(g.is_finite(), "{} sample outside dom g", agg.name());
            let rhs = g.to_f64() + z.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
            assert!(lam.to_f64() <= rhs + 1e-9, "{}: {lam} > {rhs}", agg.name());
            if let sysrisk_core::aggregation::AggEval::Finite { value, supergradient } = agg.evaluate_full(&x).unwrap() {
                let gz = agg.conjugate(&supergradient).unwrap().to_f64();
                let tight = gz + supergradient.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
                assert!((tight - value).abs() <= 1e-8 * (1.0 + value.abs()), "{}: {tight} vs {value}", agg.name());
            }
        }
    }
}

/// Closed forms against a direct one-dimensional supremum.
#[test]
fn separable_conjugates_by_grid() {
    let ent = AggregationModel::entropic(1).unwrap();
    let loss = AggregationModel::total_loss(1).unwrap();
    for &z in &[0.1, 0.5, 1.0, 2.0] {
        let grid_sup = |agg: &AggregationModel| {
            (0..200_001)
                .map(|k| -20.0 + 40.0 * k as f64 / 200_000.0)
                .map(|x| agg.evaluate(&[x]).unwrap().to_f64() - z * x)
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let g = ent.conjugate(&[z]).unwrap().to_f64();
        assert!((g - grid_sup(&ent)).abs() < 1e-6, "entropic z={z}");
        if z <= 1.0 {
            assert!((loss.conjugate(&[z]).unwrap().to_f64() - grid_sup(&loss)).abs() < 1e-9);
        }
    }
}
