//! Rearrangement-invariant norms: `L^p`, `L^inf` and Orlicz (Luxemburg).

mod probes;

use std::fmt;
use std::sync::Arc;

pub use probes::{
    dyadic_grid, embedding_constants, fundamental_function, fundamental_limit_probe, norms_table, property_star_probe,
    verify_contraction, ContractionReport, EmbeddingConstants, FundamentalLimit, FundamentalValue, NormRow,
    PropertyStarReport, Verdict,
};

use crate::error::{Error, Result};
use crate::prob::RandomVariable;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Young function `Phi` with optional complementary function `Psi` and its
/// derivative `Psi'` (the inverse of `Phi'`).
#[derive(Clone)]
pub struct OrliczFunction {
    name: String,
    phi: RealFn,
    psi: Option<RealFn>,
    psi_prime: Option<RealFn>,
}

impl fmt::Debug for OrliczFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OrliczFunction")
            .field("name", &self.name)
            .field("conjugate", &self.psi.is_some())
            .finish()
    }
}

impl OrliczFunction {
    pub fn new(name: impl Into<String>, phi: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        OrliczFunction { name: name.into(), phi: Arc::new(phi), psi: None, psi_prime: None }
    }

    pub fn with_conjugate(
        mut self,
        psi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        psi_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.psi = Some(Arc::new(psi));
        self.psi_prime = Some(Arc::new(psi_prime));
        self
    }

    /// `Phi(t) = t^2`, `Psi(s) = s^2/4`.
    pub fn square() -> Self {
        Self::new("t^2", |t| t * t).with_conjugate(|s| s * s / 4.0, |s| s / 2.0)
    }

    /// `Phi(t) = t^p` for `p > 1`.
    pub fn power(p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::invalid(format!("power Young function needs 1 < p < inf, got {p}")));
        }
        let q = p / (p - 1.0);
        Ok(Self::new(format!("t^{p}"), move |t| t.powf(p))
            .with_conjugate(move |s| (p - 1.0) * (s / p).powf(q), move |s| (s / p).powf(q - 1.0)))
    }

    /// `Phi(t) = e^t - 1`, `Psi(s) = s ln s - s + 1` for `s > 1`, else 0.
    pub fn exponential() -> Self {
        Self::new("e^t-1", f64::exp_m1).with_conjugate(
            |s| if s > 1.0 { s * s.ln() - s + 1.0 } else { 0.0 },
            |s| if s > 1.0 { s.ln() } else { 0.0 },
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn phi(&self, t: f64) -> f64 {
        (self.phi)(t)
    }

    pub fn has_conjugate(&self) -> bool {
        self.psi.is_some()
    }

    /// Checks `Phi(0) = 0`, monotonicity and midpoint convexity on a grid of `[0, top]`.
    pub fn check_shape(&self, top: f64, points: usize) -> bool {
        let h = top / points as f64;
        let v: Vec<f64> = (0..=points).map(|i| self.phi(i as f64 * h)).collect();
        v[0] == 0.0
            && v.windows(2).all(|w| w[1] >= w[0])
            && v.windows(3).all(|w| w[1] <= 0.5 * (w[0] + w[2]) + 1e-12 * w[2].abs().max(1.0))
    }
}

/// An evaluable rearrangement-invariant norm.
#[derive(Clone, Debug)]
pub enum RiNorm {
    /// `L^p` for finite `p >= 1`.
    Lp(f64),
    LInf,
    /// Luxemburg norm `inf{lambda > 0 : E[Phi(|X|/lambda)] <= 1}`.
    Orlicz(OrliczFunction),
}

impl RiNorm {
    pub fn lp(p: f64) -> Result<Self> {
        if p == f64::INFINITY {
            Ok(RiNorm::LInf)
        } else if p >= 1.0 && p.is_finite() {
            Ok(RiNorm::Lp(p))
        } else {
            Err(Error::invalid(format!("L^p needs p in [1, inf], got {p}")))
        }
    }

    pub fn label(&self) -> String {
        match self {
            RiNorm::Lp(p) => format!("L^{p}"),
            RiNorm::LInf => "L^inf".into(),
            RiNorm::Orlicz(f) => format!("Orlicz({})", f.name()),
        }
    }

    /// Conjugate exponent `q` for `L^p` norms (`inf` for `p = 1`, `1` for `L^inf`).
    pub fn conjugate_exponent(&self) -> Option<f64> {
        match self {
            RiNorm::Lp(p) if *p == 1.0 => Some(f64::INFINITY),
            RiNorm::Lp(p) => Some(p / (p - 1.0)),
            RiNorm::LInf => Some(1.0),
            RiNorm::Orlicz(_) => None,
        }
    }

    pub fn eval(&self, x: &RandomVariable) -> Result<f64> {
        norm(self, x)
    }
}

fn lp_of(p: f64, probs: &[f64], values: &[f64]) -> f64 {
    if p == f64::INFINITY {
        return values.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let terms: Vec<f64> = probs.iter().zip(values).map(|(pr, v)| pr * (v.abs() / scale).powf(p)).collect();
    scale * <f64 as crate::scalar::Scalar>::sum(&terms).powf(1.0 / p)
}

fn luxemburg(phi: &OrliczFunction, probs: &[f64], values: &[f64]) -> Result<f64> {
    let top = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if top == 0.0 {
        return Ok(0.0);
    }
    let modular = |lambda: f64| -> Result<f64> {
        let terms: Vec<f64> = probs.iter().zip(values).map(|(p, v)| p * phi.phi(v.abs() / lambda)).collect();
        let m = <f64 as crate::scalar::Scalar>::sum(&terms);
        if m.is_nan() {
            Err(Error::Evaluation(format!("Young function {} is not evaluable", phi.name())))
        } else {
            Ok(m)
        }
    };
    let (mut lo, mut hi) = (top, top);
    let mut guard = 0;
    while modular(hi)? > 1.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 2000 {
            return Err(Error::Evaluation(format!("modular of {} never drops below 1", phi.name())));
        }
    }
    guard = 0;
    while modular(lo)? <= 1.0 {
        lo /= 2.0;
        guard += 1;
        if guard > 2000 {
            return Err(Error::Evaluation(format!("modular of {} never exceeds 1", phi.name())));
        }
    }
    // Invariant: modular(lo) > 1 >= modular(hi).
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if modular(mid)? > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// `‖X‖` for any implemented norm.
pub fn norm(n: &RiNorm, x: &RandomVariable) -> Result<f64> {
    let (probs, values) = (x.space().probs(), x.values());
    match n {
        RiNorm::Lp(p) => Ok(lp_of(*p, probs, values)),
        RiNorm::LInf => Ok(lp_of(f64::INFINITY, probs, values)),
        RiNorm::Orlicz(phi) => luxemburg(phi, probs, values),
    }
}

/// Minimizes a function that is unimodal in `log s` over `s > 0`: coarse
/// scan over `scale * 2^[-60, 60]`, then golden section in the best cell.
fn minimize_log_scale(scale: f64, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
    let grid: Vec<f64> = (-240..=240).map(|i| i as f64 * 0.25).collect();
    let mut g = |e: f64| f(scale * e.exp2());
    let values: Vec<f64> = grid.iter().map(|&e| g(e)).collect();
    let best = (0..grid.len()).min_by(|&i, &j| values[i].total_cmp(&values[j])).expect("grid is nonempty");
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(grid.len() - 1)]);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut c, mut d) = (b - r * (b - a), a + r * (b - a));
    let (mut fc, mut fd) = (g(c), g(d));
    while b - a > 1e-13 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = g(d);
        }
    }
    let candidates = [(values[best], grid[best]), (fc, c), (fd, d)];
    let (v, e) = candidates.into_iter().min_by(|u, w| u.0.total_cmp(&w.0)).expect("three candidates");
    (v, scale * e.exp2())
}

/// `‖Y‖_* = sup{E[XY] : ‖X‖ <= 1}`.
///
/// `L^p` uses the `L^q` formula. Luxemburg norms use the Orlicz (Amemiya)
/// norm of the conjugate, `inf_k (1 + E[Psi(k|Y|)])/k`; without a declared
/// conjugate the query is refused.
pub fn associate_norm(n: &RiNorm, y: &RandomVariable) -> Result<f64> {
    let (probs, values) = (y.space().probs(), y.values());
    match n {
        RiNorm::Lp(_) | RiNorm::LInf => {
            let q = n.conjugate_exponent().expect("L^p norms have an exponent");
            Ok(lp_of(q, probs, values))
        }
        RiNorm::Orlicz(phi) => {
            let psi = phi
                .psi
                .clone()
                .ok_or_else(|| Error::Unsupported(format!("{} has no declared conjugate", phi.name())))?;
            let top = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if top == 0.0 {
                return Ok(0.0);
            }
            // With s = 1/k the objective s(1 + E[Psi(|Y|/s)]) is a convex perspective in s.
            let objective = |s: f64| {
                let terms: Vec<f64> = probs.iter().zip(values).map(|(p, v)| p * psi(v.abs() / s)).collect();
                let v = s * (1.0 + <f64 as crate::scalar::Scalar>::sum(&terms));
                if v.is_nan() {
                    f64::INFINITY
                } else {
                    v
                }
            };
            Ok(minimize_log_scale(top, objective).0)
        }
    }
}

/// Independent check of [`associate_norm`]: maximizes `E[X Y]/‖X‖` over the
/// one-parameter family of maximizers `X_k = sign(Y) Psi'(k|Y|)` (for `L^p`,
/// the single extremal `sign(Y)|Y|^{q-1}`), evaluating `‖X_k‖` with [`norm`].
pub fn associate_norm_verify(n: &RiNorm, y: &RandomVariable) -> Result<f64> {
    let values = y.values();
    let top = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if top == 0.0 {
        return Ok(0.0);
    }
    let ratio = |x: &RandomVariable| -> Result<f64> {
        let nx = norm(n, x)?;
        Ok(if nx > 0.0 { x.inner(y) / nx } else { f64::NEG_INFINITY })
    };
    match n {
        RiNorm::Lp(p) if *p == 1.0 => {
            let x = y.map(|v| if v.abs() == top { v.signum() } else { 0.0 });
            ratio(&x)
        }
        RiNorm::Lp(_) | RiNorm::LInf => {
            let q = n.conjugate_exponent().expect("L^p norms have an exponent");
            let x = y.map(|v| v.signum() * (v.abs() / top).powf(q - 1.0));
            ratio(&x)
        }
        RiNorm::Orlicz(phi) => {
            let psi_prime = phi
                .psi_prime
                .clone()
                .ok_or_else(|| Error::Unsupported(format!("{} has no declared conjugate", phi.name())))?;
            let mut failure = None;
            let (best, _) = minimize_log_scale(1.0 / top, |k| {
                let x = y.map(|v| v.signum() * psi_prime(k * v.abs()));
                match ratio(&x) {
                    Ok(r) => -r,
                    Err(e) => {
                        failure.get_or_insert(e);
                        f64::INFINITY
                    }
                }
            });
            match failure {
                Some(e) if !best.is_finite() => Err(e),
                _ => Ok(-best),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::FiniteSpace;

    fn rv(probs: Vec<f64>, values: Vec<f64>) -> RandomVariable {
        RandomVariable::new(FiniteSpace::new(probs).unwrap(), values).unwrap()
    }

    #[test]
    fn l2_of_two_points() {
        let x = rv(vec![0.5, 0.5], vec![3.0, 4.0]);
        assert!((norm(&RiNorm::Lp(2.0), &x).unwrap() - 12.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn luxemburg_square_is_l2() {
        let x = rv(vec![0.2, 0.3, 0.5], vec![-1.5, 0.25, 2.0]);
        let lux = norm(&RiNorm::Orlicz(OrliczFunction::square()), &x).unwrap();
        assert!((lux - norm(&RiNorm::Lp(2.0), &x).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn zero_has_zero_norm() {
        let z = RandomVariable::zero(FiniteSpace::uniform(3).unwrap());
        for n in [RiNorm::Lp(1.0), RiNorm::Lp(3.0), RiNorm::LInf, RiNorm::Orlicz(OrliczFunction::exponential())] {
            assert_eq!(norm(&n, &z).unwrap(), 0.0);
            assert_eq!(associate_norm(&n, &z).unwrap(), 0.0);
        }
    }

    #[test]
    fn associate_examples() {
        let y = rv(vec![0.5, 0.5], vec![1.0, 1.0]);
        assert!((associate_norm(&RiNorm::Lp(2.0), &y).unwrap() - 1.0).abs() < 1e-12);
        let s = FiniteSpace::uniform(8).unwrap();
        let ind = RandomVariable::indicator(s, &[2, 5]);
        assert_eq!(associate_norm(&RiNorm::Lp(1.0), &ind).unwrap(), 1.0);
    }

    #[test]
    fn amemiya_matches_verifier() {
        let y = rv(vec![0.1, 0.2, 0.3, 0.4], vec![-2.0, 0.5, 1.0, 3.0]);
        for phi in [OrliczFunction::square(), OrliczFunction::exponential(), OrliczFunction::power(3.0).unwrap()] {
            let n = RiNorm::Orlicz(phi);
            let a = associate_norm(&n, &y).unwrap();
            let b = associate_norm_verify(&n, &y).unwrap();
            assert!((a - b).abs() <= 1e-6 * a.max(1.0), "{}: {a} vs {b}", n.label());
        }
        let sq = associate_norm(&RiNorm::Orlicz(OrliczFunction::square()), &y).unwrap();
        assert!((sq - norm(&RiNorm::Lp(2.0), &y).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn power_orlicz_matches_lp() {
        let y = rv(vec![0.25; 4], vec![-2.0, 0.5, 1.0, 3.0]);
        let lux = norm(&RiNorm::Orlicz(OrliczFunction::power(3.0).unwrap()), &y).unwrap();
        assert!((lux - norm(&RiNorm::Lp(3.0), &y).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn missing_conjugate_is_refused() {
        let n = RiNorm::Orlicz(OrliczFunction::new("t^2 plain", |t| t * t));
        let y = rv(vec![1.0], vec![1.0]);
        assert!(matches!(associate_norm(&n, &y), Err(Error::Unsupported(_))));
    }

    #[test]
    fn young_function_shape() {
        assert!(OrliczFunction::exponential().check_shape(5.0, 100));
        assert!(!OrliczFunction::new("sqrt", f64::sqrt).check_shape(5.0, 100));
    }

    #[test]
    fn nan_young_function_is_an_evaluation_error() {
        let n = RiNorm::Orlicz(OrliczFunction::new("broken", |_| f64::NAN));
        let y = rv(vec![1.0], vec![1.0]);
        assert!(matches!(norm(&n, &y), Err(Error::Evaluation(_))));
    }
}
