use proptest::prelude::*;
use sysrisk_core::optimizer::{solve_lp, LinearProgram, LpStatus, RowKind, Sense};

/// max c'x s.t. Ax <= b, 0 <= x <= u, written directly.
#[derive(Debug, Clone)]
struct Lp {
    c: Vec<f64>,
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    u: Vec<f64>,
}

impl Lp {
    fn build(&self) -> LinearProgram {
        let mut lp = LinearProgram::new(Sense::Maximize);
        for (c, u) in self.c.iter().zip(&self.u) {
            lp.add_var(0.0, *u, *c);
        }
        for (row, b) in self.a.iter().zip(&self.b) {
            lp.add_row(row.iter().cloned().enumerate().collect(), RowKind::Le, *b);
        }
        lp
    }
}

fn lp_instance(n: usize) -> impl Strategy<Value = Lp> {
    (1usize..5).prop_flat_map(move |m| {
        (
            prop::collection::vec(-3.0f64..3.0, n),
            prop::collection::vec(prop::collection::vec(-2.0f64..3.0, n), m),
            prop::collection::vec(-1.0f64..4.0, m),
            prop::collection::vec(0.5f64..5.0, n),
        )
            .prop_map(|(c, a, b, u)| Lp { c, a, b, u })
    })
}

/// Every vertex of a 2-variable LP is the intersection of two tight
/// constraints among rows and bounds.
fn brute_force_2d(lp: &Lp) -> Option<f64> {
    let mut lines: Vec<([f64; 2], f64)> = lp.a.iter().zip(&lp.b).map(|(r, b)| ([r[0], r[1]], *b)).collect();
    lines.push(([1.0, 0.0], lp.u[0]));
    lines.push(([0.0, 1.0], lp.u[1]));
    lines.push(([-1.0, 0.0], 0.0));
    lines.push(([0.0, -1.0], 0.0));
    let feasible = |x: [f64; 2]| lines.iter().all(|(r, b)| r[0] * x[0] + r[1] * x[1] <= b + 1e-9);
    let mut best: Option<f64> = None;
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            let (r1, b1) = lines[i];
            let (r2, b2) = lines[j];
            let det = r1[0] * r2[1] - r1[1] * r2[0];
            if det.abs() < 1e-12 {
                continue;
            }
            let x = [(b1 * r2[1] - b2 * r1[1]) / det, (r1[0] * b2 - r2[0] * b1) / det];
            if feasible(x) {
                let v = lp.c[0] * x[0] + lp.c[1] * x[1];
                best = Some(best.map_or(v, |b: f64| b.max(v)));
            }
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn weak_duality_from_multipliers(lp in (1usize..6).prop_flat_map(lp_instance)) {
        let sol = solve_lp(&lp.build()).unwrap();
        prop_assume!(sol.status == LpStatus::Optimal);
        // y >= 0 on the rows; reduced costs handled by the upper bounds
        let y = &sol.duals;
        prop_assert!(y.iter().all(|v| *v >= -1e-9));
        let mut bound: f64 = y.iter().zip(&lp.b).map(|(a, b)| a * b).sum();
        for j in 0..lp.c.len() {
            let aty: f64 = lp.a.iter().zip(y).map(|(r, yi)| r[j] * yi).sum();
            bound += lp.u[j] * (lp.c[j] - aty).max(0.0);
        }
        prop_assert!(sol.objective <= bound + 1e-8, "{} > {}", sol.objective, bound);
        prop_assert!((sol.objective - bound).abs() <= 1e-7 * (1.0 + bound.abs()));
        prop_assert!(sol.primal_residual < 1e-9);
        prop_assert!(sol.complementarity_residual < 1e-8);
    }

    #[test]
    fn matches_vertex_enumeration(lp in lp_instance(2)) {
        let sol = solve_lp(&lp.build()).unwrap();
        match brute_force_2d(&lp) {
            Some(v) => {
                prop_assert_eq!(sol.status, LpStatus::Optimal);
                prop_assert!((sol.objective - v).abs() <= 1e-8 * (1.0 + v.abs()), "{} vs {}", sol.objective, v);
            }
            None => {
                prop_assert_eq!(sol.status, LpStatus::Infeasible);
                let cert = sol.farkas.unwrap();
                prop_assert!(cert.evaluate(&lp.b) > 0.0);
            }
        }
    }

    #[test]
    fn deterministic(lp in (1usize..6).prop_flat_map(lp_instance)) {
        let a = solve_lp(&lp.build()).unwrap();
        let b = solve_lp(&lp.build()).unwrap();
        prop_assert_eq!(a.x, b.x);
        prop_assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    }
}
