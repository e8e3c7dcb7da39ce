mod common;

use rand::Rng;
use sysrisk_core::clearing::{ccp_fixed_point_residual, ccp_program, ccp_transform, clear_ccp, clear_fixed_point, clear_lp};
use sysrisk_core::optimizer::solve_lp;

use common::*;

#[test]
fn fixed_point_and_lp_agree_on_random_networks() {
    let mut r = rng(2024);
    let mut cleared = 0;
    for _ in 0..200 {
        let d = r.gen_range(1..=6);
        let net = random_network(&mut r, d);
        let x: Vec<f64> = (0..d).map(|_| r.gen_range(-1.0..2.0)).collect();
        let a = clear_fixed_point(&net, &x).unwrap();
        let b = clear_lp(&net, &x).unwrap();
        assert_eq!(a.is_infeasible(), b.is_infeasible(), "x={x:?}");
        if let (Some(a), Some(b)) = (a.cleared(), b.cleared()) {
            cleared += 1;
            for (pa, pb) in a.payments.iter().zip(&b.payments) {
                assert!((pa - pb).abs() <= 1e-7, "{:?} vs {:?}", a.payments, b.payments);
            }
            assert!((a.society_equity - b.society_equity).abs() <= 1e-7);
        }
    }
    assert!(cleared > 100, "too few feasible instances: {cleared}");
}

/// Clearing vectors satisfy p = min(pbar, x + A'p) componentwise.
#[test]
fn lp_payments_are_clearing_vectors() {
    let mut r = rng(5);
    for _ in 0..100 {
        let d = r.gen_range(1..=5);
        let net = random_network(&mut r, d);
        let x: Vec<f64> = (0..d).map(|_| r.gen_range(0.0..2.0)).collect();
        let out = clear_lp(&net, &x).unwrap();
        let c = out.cleared().unwrap();
        let pbar = net.pbar();
        for i in 0..d {
            let inflow: f64 = (0..d).map(|j| net.relative(j + 1, i + 1) * c.payments[j]).sum();
            assert!((c.payments[i] - pbar[i].min(x[i] + inflow)).abs() < 1e-8);
        }
    }
}

#[test]
fn worked_two_bank_examples() {
    let net = two_bank();
    let c = clear_lp(&net, &[1.0, 0.0]).unwrap();
    let c = c.cleared().unwrap();
    assert!((c.payments[0] - 1.0).abs() < 1e-9 && (c.payments[1] - 0.5).abs() < 1e-9);
    let out = clear_lp(&net, &[-10.0, 0.0]).unwrap();
    assert!(out.is_infeasible());
    assert!(clear_fixed_point(&net, &[-10.0, 0.0]).unwrap().is_infeasible());
}

#[test]
fn ccp_repair_on_random_instances() {
    let mut r = rng(77);
    let mut checked = 0;
    for _ in 0..100 {
        let d = r.gen_range(2..=5);
        let net = random_network(&mut r, d);
        let ccp = ccp_transform(&net);
        let x: Vec<f64> = (0..=d).map(|_| r.gen_range(-0.5..2.0)).collect();
        let lp = solve_lp(&ccp_program(&ccp, &x)).unwrap();
        let out = clear_ccp(&ccp, &x).unwrap();
        if let Some(c) = out.cleared() {
            checked += 1;
            assert!(ccp_fixed_point_residual(&ccp, &x, &c.payments) <= 1e-8);
            assert!((c.society_equity - lp.objective).abs() <= 1e-10 * (1.0 + lp.objective.abs()));
        }
    }
    assert!(checked > 50, "{checked}");
}
