use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{associate_norm, norm, RiNorm};
use crate::error::{Error, Result};
use crate::prob::{cond_expect, FiniteSpace, Partition, RandomVariable};

/// `phi(t) = ‖1_E‖` with `P(E)` the representable probability closest to `t`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FundamentalValue {
    pub requested: f64,
    pub achieved: f64,
    #[serde(serialize_with = "crate::report::finite_or_inf")]
    pub value: f64,
    /// `false` when `t` had to be moved to a multiple of `1/atoms`.
    pub representable: bool,
}

/// Fundamental function on the uniform space with `atoms` atoms. The norm is
/// evaluated on two different sets of probability `t` (leading and trailing
/// atoms); both must agree.
pub fn fundamental_function(n: &RiNorm, t: f64, atoms: usize) -> Result<FundamentalValue> {
    indicator_value(t, atoms, |x| norm(n, x))
}

fn indicator_value(
    t: f64,
    atoms: usize,
    eval: impl Fn(&RandomVariable) -> Result<f64>,
) -> Result<FundamentalValue> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::invalid(format!("fundamental function needs t in (0,1], got {t}")));
    }
    let space = FiniteSpace::uniform(atoms)?;
    let k = ((t * atoms as f64).round() as usize).clamp(1, atoms);
    let achieved = k as f64 / atoms as f64;
    let head: Vec<usize> = (0..k).collect();
    let tail: Vec<usize> = (atoms - k..atoms).collect();
    let a = eval(&RandomVariable::indicator(space.clone(), &head))?;
    let b = eval(&RandomVariable::indicator(space, &tail))?;
    if (a - b).abs() > 1e-12 * a.max(1.0) {
        return Err(Error::ContractViolation(format!("indicator norms differ for equal-probability sets: {a} vs {b}")));
    }
    Ok(FundamentalValue { requested: t, achieved, value: a, representable: (achieved - t).abs() <= 1e-15 })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
}

/// Samples of `t -> ‖1_{A_t}‖_*` along a decreasing grid.
#[derive(Clone, Debug, Serialize)]
pub struct PropertyStarReport {
    pub norm: String,
    pub samples: Vec<FundamentalValue>,
    /// Log-log slope between the two smallest grid points.
    #[serde(serialize_with = "crate::report::finite_or_inf")]
    pub tail_slope: f64,
    pub verdict: Verdict,
}

/// Decides whether associate norms of small indicators vanish: the verdict
/// is `holds` when the values decay with a positive log-log tail slope and
/// `fails` when they stay flat.
pub fn property_star_probe(n: &RiNorm, t_grid: &[f64], atoms: usize) -> Result<PropertyStarReport> {
    if t_grid.len() < 2 || t_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("t grid must hold at least two strictly decreasing probabilities"));
    }
    let samples = t_grid
        .iter()
        .map(|&t| indicator_value(t, atoms, |x| associate_norm(n, x)))
        .collect::<Result<Vec<_>>>()?;
    let (prev, last) = (&samples[samples.len() - 2], &samples[samples.len() - 1]);
    let tail_slope = (last.value / prev.value).ln() / (last.achieved / prev.achieved).ln();
    let decays = last.value < samples[0].value;
    let verdict = if tail_slope > 1e-3 && decays { Verdict::Holds } else { Verdict::Fails };
    Ok(PropertyStarReport { norm: n.label(), samples, tail_slope, verdict })
}

/// Dyadic grid `1, 1/2, ..., 2^-levels`.
pub fn dyadic_grid(levels: u32) -> Vec<f64> {
    (0..=levels).map(|k| (-(k as f64)).exp2()).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ContractionReport {
    pub holds: bool,
    pub conditioned: f64,
    pub original: f64,
}

/// `‖E[X|pi]‖ <= ‖X‖ + 1e-9`.
pub fn verify_contraction(n: &RiNorm, x: &RandomVariable, pi: &Partition) -> Result<ContractionReport> {
    let original = norm(n, x)?;
    let conditioned = norm(n, &cond_expect(x, pi)?)?;
    Ok(ContractionReport { holds: conditioned <= original + 1e-9, conditioned, original })
}

/// Largest observed ratios `‖X‖/‖X‖_inf` and `‖X‖_1/‖X‖`.
#[derive(Clone, Debug, Serialize)]
pub struct EmbeddingConstants {
    pub norm: String,
    pub c_inf: f64,
    pub c_one: f64,
    pub trials: usize,
}

pub fn embedding_constants(n: &RiNorm, trials: usize, atoms: usize, seed: u64) -> Result<EmbeddingConstants> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut c_inf, mut c_one) = (0.0f64, 0.0f64);
    for _ in 0..trials {
        let weights: Vec<f64> = (0..atoms).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = weights.iter().sum();
        let space = FiniteSpace::new(weights.iter().map(|w| w / total).collect())?;
        let x = RandomVariable::new(space, (0..atoms).map(|_| rng.gen_range(-5.0..5.0)).collect())?;
        let nx = norm(n, &x)?;
        if nx == 0.0 {
            continue;
        }
        c_inf = c_inf.max(nx / x.sup_norm());
        c_one = c_one.max(norm(&RiNorm::Lp(1.0), &x)? / nx);
    }
    Ok(EmbeddingConstants { norm: n.label(), c_inf, c_one, trials })
}

/// Behaviour of `phi(t)` as `t -> 0`: a positive limit forces the space to
/// be `L^inf`; a vanishing limit means the order-continuous part is the
/// closure of the simple functions. Informational only.
#[derive(Clone, Debug, Serialize)]
pub struct FundamentalLimit {
    pub norm: String,
    pub smallest_t: f64,
    pub value: f64,
    pub positive_limit: bool,
    pub reading: String,
}

pub fn fundamental_limit_probe(n: &RiNorm, levels: u32) -> Result<FundamentalLimit> {
    let atoms = 1usize << levels;
    let grid = dyadic_grid(levels);
    let values = grid.iter().map(|&t| fundamental_function(n, t, atoms)).collect::<Result<Vec<_>>>()?;
    let (prev, last) = (&values[values.len() - 2], &values[values.len() - 1]);
    let positive_limit = (last.value - prev.value).abs() <= 1e-12 * prev.value.max(1.0) && last.value > 1e-6;
    let reading = if positive_limit {
        "fundamental function bounded away from 0: behaves as L^inf"
    } else {
        "fundamental function tends to 0: order-continuous part is nontrivial"
    };
    Ok(FundamentalLimit {
        norm: n.label(),
        smallest_t: last.achieved,
        value: last.value,
        positive_limit,
        reading: reading.into(),
    })
}

/// One row of the `norms table` report.
#[derive(Clone, Debug, Serialize)]
pub struct NormRow {
    pub norm: String,
    pub fundamental: Vec<FundamentalValue>,
    pub property_star: PropertyStarReport,
    pub limit: FundamentalLimit,
}

pub fn norms_table(norms: &[RiNorm], levels: u32) -> Result<Vec<NormRow>> {
    let atoms = 1usize << levels;
    let grid = dyadic_grid(levels);
    norms
        .iter()
        .map(|n| {
            Ok(NormRow {
                norm: n.label(),
                fundamental: grid.iter().map(|&t| fundamental_function(n, t, atoms)).collect::<Result<_>>()?,
                property_star: property_star_probe(n, &grid, atoms)?,
                limit: fundamental_limit_probe(n, levels)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::OrliczFunction;

    #[test]
    fn fundamental_values() {
        let v = fundamental_function(&RiNorm::Lp(2.0), 0.25, 16).unwrap();
        assert!((v.value - 0.5).abs() < 1e-12);
        assert!(v.representable);
        assert_eq!(fundamental_function(&RiNorm::LInf, 0.125, 8).unwrap().value, 1.0);
        assert!((fundamental_function(&RiNorm::Lp(3.0), 1.0, 8).unwrap().value - 1.0).abs() < 1e-12);
        let off = fundamental_function(&RiNorm::Lp(1.0), 0.3, 4).unwrap();
        assert!(!off.representable);
        assert_eq!(off.achieved, 0.25);
        assert!(fundamental_function(&RiNorm::Lp(1.0), 0.0, 4).is_err());
    }

    #[test]
    fn property_star_verdicts() {
        let grid = dyadic_grid(10);
        for p in [1.5, 2.0, 4.0] {
            let r = property_star_probe(&RiNorm::Lp(p), &grid, 1 << 10).unwrap();
            assert_eq!(r.verdict, Verdict::Holds);
            let q = p / (p - 1.0);
            for s in &r.samples {
                assert!((s.value - s.achieved.powf(1.0 / q)).abs() < 1e-9);
            }
        }
        let l1 = property_star_probe(&RiNorm::Lp(1.0), &grid, 1 << 10).unwrap();
        assert_eq!(l1.verdict, Verdict::Fails);
        assert!(l1.samples.iter().all(|s| s.value == 1.0));
        let linf = property_star_probe(&RiNorm::LInf, &grid, 1 << 10).unwrap();
        assert_eq!(linf.verdict, Verdict::Holds);
        assert!((linf.samples.last().unwrap().value - 2f64.powi(-10)).abs() < 1e-15);
        let exp = property_star_probe(&RiNorm::Orlicz(OrliczFunction::exponential()), &grid, 1 << 10).unwrap();
        assert_eq!(exp.verdict, Verdict::Holds);
    }

    #[test]
    fn contraction_example() {
        let x = RandomVariable::new(FiniteSpace::uniform(4).unwrap(), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let pi = Partition::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let r = verify_contraction(&RiNorm::Lp(2.0), &x, &pi).unwrap();
        assert!(r.holds);
        assert!((r.conditioned - 7.25f64.sqrt()).abs() < 1e-12);
        assert!((r.original - 7.5f64.sqrt()).abs() < 1e-12);
        let same = verify_contraction(&RiNorm::Lp(2.0), &x, &Partition::singletons(4)).unwrap();
        assert_eq!(same.conditioned, same.original);
    }

    #[test]
    fn embedding_constants_are_bounded() {
        let e = embedding_constants(&RiNorm::Lp(2.0), 200, 6, 1).unwrap();
        assert!(e.c_inf <= 1.0 + 1e-12 && e.c_one <= 1.0 + 1e-12);
        let o = embedding_constants(&RiNorm::Orlicz(OrliczFunction::exponential()), 50, 6, 1).unwrap();
        assert!(o.c_inf.is_finite() && o.c_one.is_finite());
    }

    #[test]
    fn limit_dichotomy() {
        assert!(fundamental_limit_probe(&RiNorm::LInf, 8).unwrap().positive_limit);
        assert!(!fundamental_limit_probe(&RiNorm::Lp(2.0), 8).unwrap().positive_limit);
    }

    #[test]
    fn fundamental_function_is_nondecreasing() {
        let norms = [RiNorm::Lp(1.0), RiNorm::Lp(2.5), RiNorm::LInf, RiNorm::Orlicz(OrliczFunction::exponential())];
        for n in &norms {
            let v: Vec<f64> = (1..=16).map(|k| fundamental_function(n, k as f64 / 16.0, 16).unwrap().value).collect();
            assert!(v.windows(2).all(|w| w[0] <= w[1] + 1e-12), "{}", n.label());
        }
    }
}
