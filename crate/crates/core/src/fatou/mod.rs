//! Lower-semicontinuity probes along almost surely convergent sequences.
//!
//! A finite space cannot host a sequence of sets with `P(A_n) -> 0`, so the
//! families live on a *ladder* space: a few base atoms plus a chain of atoms
//! `w_1, ..., w_H` with `A_n = {w_k : k >= n}` and `P(A_n)` decaying in `n`.
//! Every atom settles after finitely many steps except those in `A_H`, whose
//! mass is reported as the unsettled mass at the horizon.

mod gallery;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

pub use gallery::{
    gallery_bigexamp1, gallery_bigexamp2, pstar_consequence_probe, Bigexamp1Level, Bigexamp1Report, Bigexamp2Report,
    Bigexamp2Row, PstarReport, LCM_CAP,
};

use crate::error::{Error, Result};
use crate::norms::{norm, RiNorm};
use crate::prob::{FiniteSpace, RandomVariable, Space};
use crate::risk::{evaluate, RiskMeasure};

/// Per-atom tolerance of the pointwise-convergence check.
pub const SETTLE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// `|X_n| <= X_0` for a fixed `X_0`.
    OrderDominated,
    /// `sup_n ‖X_n‖ < inf` in the family norm.
    NormBoundedAs,
    /// Spikes on `A_n` grow like `8^n`; norms may explode.
    AsOnly,
    /// `X_n = n 1_{A_n}` with `P(A_n) = 1/n` and limit `0`.
    Bigexamp2,
}

impl FamilyKind {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "order_dominated" => Ok(FamilyKind::OrderDominated),
            "norm_bounded_as" => Ok(FamilyKind::NormBoundedAs),
            "as_only" => Ok(FamilyKind::AsOnly),
            "bigexamp2" => Ok(FamilyKind::Bigexamp2),
            other => Err(Error::invalid(format!("unknown family kind '{other}'"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SequenceFamily {
    pub kind: FamilyKind,
    /// Norm used by `NormBoundedAs` spikes and the norm-bound check.
    pub norm: RiNorm,
    /// Largest spike size `|c|` (in the family norm for `NormBoundedAs`).
    pub bound: f64,
    pub base_atoms: usize,
    pub seed: u64,
}

/// One generated sequence `X_1, ..., X_H` with its limit.
#[derive(Clone, Debug)]
pub struct SequenceSample {
    pub limit: RandomVariable,
    pub terms: Vec<RandomVariable>,
    pub dominating: Option<RandomVariable>,
    /// Upper bound on `‖X_n‖` declared by the generator.
    pub norm_bound: Option<f64>,
}

/// Outcome of checking a sample against its kind.
#[derive(Clone, Debug, Serialize)]
pub struct ConstraintCheck {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dominated: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm_bounded: Option<bool>,
    /// Mass of atoms with `|X_H - X| > 1e-9`.
    pub unsettled_mass: f64,
    /// Unsettled mass is nonincreasing along the sequence and at most `P(A_H)`.
    pub converges: bool,
}

impl ConstraintCheck {
    pub fn ok(&self) -> bool {
        self.dominated != Some(false) && self.norm_bounded != Some(false) && self.converges
    }
}

/// Base atoms share `1 - r`; chain atom `k` gets `r^k (1 - r)`, the last one `r^H`,
/// so that `P(A_n) = r^n`.
pub(crate) fn geometric_ladder(base: usize, horizon: usize, r: f64) -> Result<(Space, Vec<f64>)> {
    let mut probs = vec![(1.0 - r) / base as f64; base];
    let mut tails = Vec::with_capacity(horizon);
    for k in 1..=horizon {
        let tail = r.powi(k as i32);
        tails.push(tail);
        probs.push(if k < horizon { tail * (1.0 - r) } else { tail });
    }
    Ok((FiniteSpace::new(probs)?, tails))
}

/// Chain atom `k` gets `1/k - 1/(k+1)`, the last one `1/H`; so `P(A_n) = 1/n`.
pub(crate) fn harmonic_ladder(horizon: usize) -> Result<(Space, Vec<f64>)> {
    let probs = (1..=horizon)
        .map(|k| if k < horizon { 1.0 / k as f64 - 1.0 / (k + 1) as f64 } else { 1.0 / horizon as f64 })
        .collect();
    Ok((FiniteSpace::new(probs)?, (1..=horizon).map(|n| 1.0 / n as f64).collect()))
}

fn grid_value(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo..hi) * 64.0).round() / 64.0
}

impl SequenceFamily {
    pub fn new(kind: FamilyKind, seed: u64) -> Self {
        SequenceFamily { kind, norm: RiNorm::Lp(1.0), bound: 1.0, base_atoms: 6, seed }
    }

    pub fn with_norm(mut self, norm: RiNorm, bound: f64) -> Self {
        self.norm = norm;
        self.bound = bound;
        self
    }

    /// Deterministic in `(seed, trial)`.
    pub fn sample(&self, trial: u64, horizon: usize) -> Result<SequenceSample> {
        if horizon == 0 {
            return Err(Error::invalid("horizon must be positive"));
        }
        if self.kind == FamilyKind::Bigexamp2 {
            let (space, _) = harmonic_ladder(horizon)?;
            let terms = (1..=horizon)
                .map(|n| {
                    let atoms: Vec<usize> = (n - 1..horizon).collect();
                    RandomVariable::indicator(space.clone(), &atoms).scale(&(n as f64))
                })
                .collect();
            return Ok(SequenceSample {
                limit: RandomVariable::zero(space),
                terms,
                dominating: None,
                norm_bound: Some(1.0),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ trial.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let (space, _) = geometric_ladder(self.base_atoms, horizon, 0.25)?;
        let len = space.len();
        let base = self.base_atoms;
        let x = RandomVariable::new(space.clone(), (0..len).map(|_| grid_value(&mut rng, -5.0, 5.0)).collect())?;
        let v = RandomVariable::new(space.clone(), (0..len).map(|_| grid_value(&mut rng, -1.0, 1.0)).collect())?;
        let c = rng.gen_range(-self.bound..=self.bound);
        let mut terms = Vec::with_capacity(horizon);
        for n in 1..=horizon {
            let eta = 0.25f64.powi(n as i32 - 1);
            let chain: Vec<usize> = (base + n - 1..len).collect();
            let ind = RandomVariable::indicator(space.clone(), &chain);
            let spike = match self.kind {
                FamilyKind::OrderDominated => ind.scale(&c.clamp(-1.0, 1.0)),
                FamilyKind::NormBoundedAs => ind.scale(&(c / norm(&self.norm, &ind)?)),
                FamilyKind::AsOnly => ind.scale(&(c * 8f64.powi(n as i32 - 1))),
                FamilyKind::Bigexamp2 => unreachable!(),
            };
            terms.push(&(&x + &v.scale(&eta)) + &spike);
        }
        let (dominating, norm_bound) = match self.kind {
            FamilyKind::OrderDominated => (Some(x.abs().shift(&1.0) + v.abs()), None),
            FamilyKind::NormBoundedAs => (None, Some(norm(&self.norm, &x)? + norm(&self.norm, &v)? + c.abs())),
            _ => (None, None),
        };
        Ok(SequenceSample { limit: x, terms, dominating, norm_bound })
    }

    pub fn check(&self, sample: &SequenceSample) -> Result<ConstraintCheck> {
        let dominated = sample.dominating.as_ref().map(|d| {
            sample
                .terms
                .iter()
                .all(|t| t.values().iter().zip(d.values()).all(|(a, b)| a.abs() <= *b + 1e-12))
        });
        let norm_bounded = match sample.norm_bound {
            Some(b) => {
                let mut ok = true;
                for t in &sample.terms {
                    ok &= norm(&self.norm, t)? <= b * (1.0 + 1e-9) + 1e-12;
                }
                Some(ok)
            }
            None => None,
        };
        let unsettled: Vec<f64> = sample
            .terms
            .iter()
            .map(|t| {
                t.values()
                    .iter()
                    .zip(sample.limit.values())
                    .zip(t.space().probs())
                    .filter(|((a, b), _)| (*a - *b).abs() > SETTLE_TOL)
                    .map(|(_, p)| p)
                    .sum()
            })
            .collect();
        let last = *unsettled.last().expect("nonempty");
        let monotone = unsettled.windows(2).all(|w| w[1] <= w[0] + 1e-15);
        let bound = match self.kind {
            FamilyKind::Bigexamp2 => 1.0 / sample.terms.len() as f64,
            _ => 0.25f64.powi(sample.terms.len() as i32),
        };
        Ok(ConstraintCheck { dominated, norm_bounded, unsettled_mass: last, converges: monotone && last <= bound * (1.0 + 1e-9) })
    }
}

/// `min_{n >= ceil(H/2)} values[n]` (1-based), the finite-horizon stand-in for `liminf`.
pub fn tail_min(values: &[f64]) -> f64 {
    let start = values.len() / 2;
    values[start..].iter().cloned().fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Debug, Serialize)]
pub struct FatouReport {
    pub measure: String,
    pub kind: FamilyKind,
    pub trials: usize,
    pub horizon: usize,
    pub tol: f64,
    /// Trials with `rho(X) > tail_min rho(X_n) + tol`.
    pub violations: usize,
    #[serde(serialize_with = "crate::report::finite_or_inf")]
    pub max_violation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_trial: Option<u64>,
    /// Trials whose sample broke its kind's constraints.
    pub constraint_failures: usize,
    pub max_unsettled_mass: f64,
}

/// Searches for `rho(X) > liminf rho(X_n)` over `trials` seeded sequences.
pub fn probe(rho: &dyn RiskMeasure, family: &SequenceFamily, trials: usize, horizon: usize, tol: f64) -> Result<FatouReport> {
    let outcomes = (0..trials as u64)
        .into_par_iter()
        .map(|t| -> Result<(u64, f64, bool, f64)> {
            let s = family.sample(t, horizon)?;
            let check = family.check(&s)?;
            let values = s.terms.iter().map(|x| evaluate(rho, x)).collect::<Result<Vec<f64>>>()?;
            let excess = evaluate(rho, &s.limit)? - tail_min(&values);
            Ok((t, excess, check.ok(), check.unsettled_mass))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = FatouReport {
        measure: rho.name(),
        kind: family.kind,
        trials,
        horizon,
        tol,
        violations: 0,
        max_violation: 0.0,
        worst_trial: None,
        constraint_failures: 0,
        max_unsettled_mass: 0.0,
    };
    for (t, excess, ok, unsettled) in outcomes {
        if excess > tol {
            report.violations += 1;
        }
        if excess > report.max_violation {
            report.max_violation = excess;
            report.worst_trial = Some(t);
        }
        report.constraint_failures += usize::from(!ok);
        report.max_unsettled_mass = report.max_unsettled_mass.max(unsettled);
    }
    Ok(report)
}
