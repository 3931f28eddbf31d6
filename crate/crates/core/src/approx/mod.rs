//! Conditional-expectation approximation: refinement schemes, equidistributed
//! rearrangements, localization traces and Cesaro means.

mod equidistributed;

use serde::Serialize;

pub use equidistributed::{equidistributed_average, EquidistributedFamily, FamilyMode, DEFAULT_LCM_CAP};

use crate::error::{Error, Result};
use crate::norms::{norm, RiNorm};
use crate::prob::{cond_expect, quantile_partition, Partition, RandomVariable};
use crate::risk::{evaluate, RiskMeasure};
use crate::scalar::Scalar;

/// One step of a localization trace.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceEntry {
    pub n: usize,
    pub m_n: f64,
    pub blocks: usize,
    #[serde(serialize_with = "crate::report::finite_or_inf")]
    pub value: f64,
    #[serde(serialize_with = "crate::report::finite_or_inf")]
    pub norm_error: f64,
}

/// Step `n` of a refinement scheme.
#[derive(Clone, Debug)]
pub struct SchemeStep {
    pub n: usize,
    /// Truncation level: `‖X 1_{|X| > m_n}‖ <= 1/n`.
    pub m_n: f64,
    pub partition: Partition,
    pub conditioned: RandomVariable,
    /// `‖E[X|pi_n] - X‖` in the scheme norm.
    pub error: f64,
    pub sup_error: f64,
    /// `true` when the fresh partition was discarded because it increased the error.
    pub kept_previous: bool,
}

/// The sequence `(m_n, pi_n)` with its achieved errors.
#[derive(Clone, Debug)]
pub struct PartitionScheme {
    pub norm: String,
    pub steps: Vec<SchemeStep>,
}

impl PartitionScheme {
    pub fn errors(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.error).collect()
    }
}

/// Smallest `m` in `{0} ∪ {|x_i|}` whose tail `X 1_{|X| > m}` has norm at most `bound`.
/// The tail norm is nonincreasing in `m`, so the level is found by bisection.
fn truncation_level(x: &RandomVariable, n: &RiNorm, bound: f64) -> Result<f64> {
    let mut levels: Vec<f64> = x.values().iter().map(|v| v.abs()).collect();
    levels.push(0.0);
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let (mut lo, mut hi) = (0, levels.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        let m = levels[mid];
        if norm(n, &x.map(|v| if v.abs() > m { *v } else { 0.0 }))? <= bound {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(levels[lo])
}

/// Produces the scheme one step at a time.
struct Stepper<'a> {
    x: &'a RandomVariable,
    norm: &'a RiNorm,
    k: usize,
    prev: Option<SchemeStep>,
}

impl<'a> Stepper<'a> {
    fn new(x: &'a RandomVariable, norm: &'a RiNorm) -> Self {
        Stepper { x, norm, k: 0, prev: None }
    }

    fn next_step(&mut self) -> Result<SchemeStep> {
        self.k += 1;
        let k = self.k;
        let x = self.x;
        let m_n = truncation_level(x, self.norm, 1.0 / k as f64)?;
        let truncated = x.map(|v| if v.abs() <= m_n { *v } else { 0.0 });
        let fresh = quantile_partition(&truncated, 1u64 << k.min(62))?;
        let conditioned = cond_expect(x, &fresh)?;
        let error = norm(self.norm, &(&conditioned - x))?;
        let step = match &self.prev {
            Some(prev) if error > prev.error => SchemeStep { n: k, m_n, kept_previous: true, ..prev.clone() },
            _ => {
                let sup_error = norm(&RiNorm::LInf, &(&conditioned - x))?;
                SchemeStep { n: k, m_n, partition: fresh, conditioned, error, sup_error, kept_previous: false }
            }
        };
        self.prev = Some(step.clone());
        Ok(step)
    }
}

/// Builds `steps` stages of the truncate-then-partition scheme: `m_n` is the
/// least truncation level with tail norm at most `1/n`, and `pi_n` cuts the
/// truncated variable into `2^n` value cells (capped at `2^62`).
///
/// Refining a partition can increase the error in norms other than `L^2`;
/// when the fresh partition is worse than the previous one, the previous
/// partition is kept so the recorded errors are nonincreasing.
pub fn refine_scheme(x: &RandomVariable, n: &RiNorm, steps: usize) -> Result<PartitionScheme> {
    if steps == 0 {
        return Err(Error::invalid("a scheme needs at least one step"));
    }
    let mut stepper = Stepper::new(x, n);
    let out = (0..steps).map(|_| stepper.next_step()).collect::<Result<Vec<_>>>()?;
    Ok(PartitionScheme { norm: n.label(), steps: out })
}

/// Settings for [`localization_limit`].
#[derive(Clone, Debug)]
pub struct LocalizationOptions {
    pub norm: RiNorm,
    pub max_steps: usize,
    pub tol: f64,
}

impl Default for LocalizationOptions {
    fn default() -> Self {
        LocalizationOptions { norm: RiNorm::Lp(1.0), max_steps: 128, tol: 1e-9 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Localization {
    #[serde(serialize_with = "crate::report::finite_or_inf")]
    pub limit: f64,
    pub steps: usize,
    pub trace: Vec<TraceEntry>,
}

/// Evaluates `rho(E[X|pi_n])` along the refinement scheme.
///
/// Convergence is declared once two consecutive values differ by less than
/// `tol` and `E[X|pi_n]` is within `tol` of `X` in sup norm. The second
/// condition guards against plateaus: a tail functional such as ES can stay
/// constant over several refinements while the conditioned variable is still
/// far from `X`.
pub fn localization_limit(rho: &dyn RiskMeasure, x: &RandomVariable, opts: &LocalizationOptions) -> Result<Localization> {
    if !rho.flags().law_invariant {
        return Err(Error::Precondition(format!("{} is not declared law-invariant", rho.name())));
    }
    if opts.max_steps == 0 {
        return Err(Error::invalid("localization needs at least one step"));
    }
    let mut stepper = Stepper::new(x, &opts.norm);
    let mut trace: Vec<TraceEntry> = Vec::new();
    for _ in 0..opts.max_steps {
        let step = stepper.next_step()?;
        let value = evaluate(rho, &step.conditioned)?;
        let settled = trace.last().is_some_and(|prev| (value - prev.value).abs() < opts.tol) && step.sup_error <= opts.tol;
        trace.push(TraceEntry {
            n: step.n,
            m_n: step.m_n,
            blocks: step.partition.len(),
            value,
            norm_error: step.error,
        });
        if settled {
            return Ok(Localization { limit: value, steps: step.n, trace });
        }
    }
    Err(Error::NonConvergence { steps: opts.max_steps, trace })
}

/// `k`-th output is the mean of the first `k` inputs.
pub fn cesaro_means<T: Scalar>(seq: &[RandomVariable<T>]) -> Result<Vec<RandomVariable<T>>> {
    let Some(first) = seq.first() else {
        return Ok(Vec::new());
    };
    let mut acc = vec![T::zero(); first.len()];
    let mut out = Vec::with_capacity(seq.len());
    for (k, x) in seq.iter().enumerate() {
        if !x.same_space_as(first) {
            return Err(Error::invalid("Cesaro means need all terms on one space"));
        }
        for (a, v) in acc.iter_mut().zip(x.values()) {
            *a = a.clone() + v.clone();
        }
        let count = T::from_usize_exact(k + 1);
        out.push(RandomVariable::new(first.space().clone(), acc.iter().map(|a| a.clone() / count.clone()).collect())?);
    }
    Ok(out)
}
