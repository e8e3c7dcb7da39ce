//! Seeded random dual variables.
//!
//! Broad duals cover the dual space; compatible duals are built from points
//! of dom g so that alpha^sys is finite and the bounds are not vacuous.
//! Sample i always comes from its own ChaCha8 stream, so results do not
//! depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;

use crate::aggregation::AggregationModel;
use crate::error::Result;
use crate::model::{Density, DualVariable, ScenarioSpace};
use crate::risk::BaseRiskMeasure;

/// Interior clamp for sampled society measures.
pub const SOCIETY_FLOOR: f64 = 1e-6;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Symmetric Dirichlet(1) draw as normalized Exp(1) variables.
pub fn dirichlet<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

fn density_from_weights(space: &ScenarioSpace, sigma: &[f64]) -> Result<Density> {
    let s: f64 = sigma.iter().sum();
    Density::new(space, sigma.iter().zip(space.probs()).map(|(v, p)| v / s / p).collect())
}

/// Dirichlet society measure clamped away from the boundary.
pub fn interior_measure<R: Rng + ?Sized>(rng: &mut R, space: &ScenarioSpace) -> Result<Density> {
    let sigma: Vec<f64> = dirichlet(rng, space.len()).iter().map(|v| v.max(SOCIETY_FLOOR)).collect();
    density_from_weights(space, &sigma)
}

/// Society measure with finite penalty under `base`: P for shifted
/// expectations, a mixture respecting the density cap for AV@R.
pub fn admissible_measure<R: Rng + ?Sized>(
    rng: &mut R,
    space: &ScenarioSpace,
    base: &BaseRiskMeasure,
) -> Result<Density> {
    match *base {
        BaseRiskMeasure::Expectation { .. } => Ok(Density::reference(space)),
        BaseRiskMeasure::Entropic => interior_measure(rng, space),
        BaseRiskMeasure::Avar { beta } => {
            let d = interior_measure(rng, space)?;
            let peak = d.values().iter().cloned().fold(0.0, f64::max);
            let room = if peak > 1.0 { ((1.0 / beta - 1.0) / (peak - 1.0)).min(1.0) } else { 1.0 };
            let theta: f64 = rng.gen::<f64>() * room;
            Density::new(space, d.values().iter().map(|v| 1.0 - theta + theta * v).collect())
        }
    }
}

/// Q_i Dirichlet, w = |N| normalized times LogUniform[0.1, 10], S clamped Dirichlet.
pub fn broad_dual<R: Rng + ?Sized>(rng: &mut R, space: &ScenarioSpace, d: usize) -> Result<DualVariable> {
    let q = (0..d).map(|_| density_from_weights(space, &dirichlet(rng, space.len()))).collect::<Result<Vec<_>>>()?;
    let mut w: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal).abs()).collect();
    let total: f64 = w.iter().sum();
    let scale = rng.gen_range(0.1f64.ln()..10f64.ln()).exp();
    if total > 0.0 {
        w.iter_mut().for_each(|v| *v *= scale / total);
    } else {
        w = vec![scale / d as f64; d];
    }
    let s = interior_measure(rng, space)?;
    DualVariable::new(q, w, s)
}

/// Dual with Z_k = w dQ/dS(k) drawn from dom g per scenario:
/// w_i = E^S[Z_i] and dQ_i/dP = s Z_i / w_i.
pub fn compatible_dual<R: Rng + ?Sized>(
    rng: &mut R,
    space: &ScenarioSpace,
    agg: &AggregationModel,
    base: &BaseRiskMeasure,
) -> Result<DualVariable> {
    let d = agg.dim();
    let s = admissible_measure(rng, space, base)?;
    let p = space.probs();
    let z: Vec<Vec<f64>> = (0..p.len()).map(|_| agg.sample_conjugate_domain(rng)).collect::<Result<_>>()?;
    let w: Vec<f64> = (0..d).map(|i| (0..p.len()).map(|k| p[k] * s.values()[k] * z[k][i]).sum()).collect();
    let q = (0..d)
        .map(|i| {
            if w[i] > 0.0 {
                Density::new(space, (0..p.len()).map(|k| s.values()[k] * z[k][i] / w[i]).collect())
            } else {
                Ok(s.clone())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    DualVariable::new(q, w, s)
}

/// `count` duals, alternating broad and compatible draws.
pub fn sample_duals(
    space: &ScenarioSpace,
    agg: &AggregationModel,
    base: &BaseRiskMeasure,
    count: usize,
    seed: u64,
) -> Result<Vec<DualVariable>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            if i % 2 == 0 {
                broad_dual(&mut rng, space, agg.dim())
            } else {
                compatible_dual(&mut rng, space, agg, base)
            }
        })
        .collect()
}
