use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob::RandomVariable;
use crate::risk::{evaluate, RiskMeasure};

pub const BRUTEFORCE_MAX_ATOMS: usize = 6;
pub const BRUTEFORCE_MAX_GRID: usize = 41;
/// Cap on `grid^atoms`, the number of candidate splits.
pub const BRUTEFORCE_MAX_POINTS: u64 = 50_000_000;

#[derive(Clone, Debug, Serialize)]
pub struct BruteForce {
    pub value: f64,
    /// Spacing of the per-atom grid.
    pub resolution: f64,
    pub evaluations: u64,
    /// Best first component `Y`; the second is `X - Y`.
    pub split: Vec<f64>,
}

/// Minimizes `rho1(Y) + rho2(X - Y)` over `Y` with every coordinate on a
/// uniform grid spanning `[min X - range, max X + range]`.
pub fn infconv_bruteforce(rho1: &dyn RiskMeasure, rho2: &dyn RiskMeasure, x: &RandomVariable, grid: usize) -> Result<BruteForce> {
    let n = x.len();
    if n > BRUTEFORCE_MAX_ATOMS || grid > BRUTEFORCE_MAX_GRID {
        return Err(Error::TooLarge(format!(
            "brute force allows at most {BRUTEFORCE_MAX_ATOMS} atoms and {BRUTEFORCE_MAX_GRID} grid points, got {n} and {grid}"
        )));
    }
    if grid < 2 {
        return Err(Error::invalid("grid needs at least two points"));
    }
    let points = (grid as u64).checked_pow(n as u32).filter(|p| *p <= BRUTEFORCE_MAX_POINTS);
    let Some(points) = points else {
        return Err(Error::TooLarge(format!("{grid}^{n} splits exceed the cap of {BRUTEFORCE_MAX_POINTS}")));
    };
    let (lo, hi) = (x.min_value(), x.max_value());
    let range = if hi > lo { hi - lo } else { lo.abs().max(1.0) };
    let start = lo - range;
    let resolution = 3.0 * range / (grid - 1) as f64;
    let axis: Vec<f64> = (0..grid).map(|k| start + k as f64 * resolution).collect();
    let space = x.space().clone();
    let eval_index = |mut idx: u64| -> Result<(f64, Vec<f64>)> {
        let mut y = vec![0.0; n];
        for yi in y.iter_mut() {
            *yi = axis[(idx % grid as u64) as usize];
            idx /= grid as u64;
        }
        let first = RandomVariable::new(space.clone(), y.clone())?;
        let v = evaluate(rho1, &first)? + evaluate(rho2, &(x - &first))?;
        Ok((v, y))
    };
    let best = (0..points)
        .into_par_iter()
        .map(eval_index)
        .try_reduce_with(|a, b| Ok(if b.0 < a.0 { b } else { a }))
        .expect("at least one split")?;
    Ok(BruteForce { value: best.0, resolution, evaluations: points, split: best.1 })
}
