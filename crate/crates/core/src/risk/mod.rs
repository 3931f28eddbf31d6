//! Risk functionals `rho` with the sign convention `rho(X + m) = rho(X) - m`.

mod acceptance;
mod flags;

use serde::Serialize;

pub use acceptance::{
    from_acceptance, sum_acceptance, AcceptanceMeasure, AcceptanceSet, Budget, Numeraire, SolidPositiveSet,
    SplitWitness, Threshold,
};
pub use flags::{check_flags, FlagCheck, FlagReport};

use crate::error::{Error, Result};
use crate::prob::{distribution, quantile, RandomVariable, Space};
use crate::scalar::Scalar;

/// Structural properties a measure claims. Every claim is falsifiable with
/// [`check_flags`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Flags {
    pub convex: bool,
    /// Antitone: `X <= Y` implies `rho(X) >= rho(Y)`.
    pub monotone: bool,
    pub cash_additive: bool,
    pub law_invariant: bool,
    pub surplus_invariant: bool,
    pub surplus_invariant_subject_to_positivity: bool,
    /// `rho(X + mS) = rho(X) - m` for the declared numeraire `S`.
    pub s_additive: bool,
}

impl Flags {
    /// Convex, monotone, cash-additive and law-invariant.
    pub const fn standard() -> Self {
        Flags {
            convex: true,
            monotone: true,
            cash_additive: true,
            law_invariant: true,
            surplus_invariant: false,
            surplus_invariant_subject_to_positivity: false,
            s_additive: false,
        }
    }
}

/// A proper functional `X -> (-inf, +inf]` on float random variables.
pub trait RiskMeasure: Send + Sync {
    fn name(&self) -> String;

    fn flags(&self) -> Flags;

    fn numeraire(&self) -> Option<&Numeraire> {
        None
    }

    /// Space the measure is tied to, if any (for instance through budget weights).
    fn space(&self) -> Option<&Space> {
        None
    }

    /// Value in `(-inf, +inf]`. A value of `-inf` is reported as an error.
    fn eval(&self, x: &RandomVariable) -> Result<f64>;

    /// A subgradient as a per-atom vector (`rho(X + h) ~ rho(X) + sum g_i h_i`).
    /// The default is a central finite difference.
    fn subgradient(&self, x: &RandomVariable) -> Result<Vec<f64>> {
        let scale = x.sup_norm().max(1.0) * 1e-6;
        (0..x.len())
            .map(|i| {
                let bump = |h: f64| {
                    let mut v = x.values().to_vec();
                    v[i] += h;
                    RandomVariable::new(x.space().clone(), v).and_then(|y| self.eval(&y))
                };
                Ok((bump(scale)? - bump(-scale)?) / (2.0 * scale))
            })
            .collect()
    }
}

impl<R: RiskMeasure + ?Sized> RiskMeasure for Box<R> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn flags(&self) -> Flags {
        (**self).flags()
    }
    fn numeraire(&self) -> Option<&Numeraire> {
        (**self).numeraire()
    }
    fn space(&self) -> Option<&Space> {
        (**self).space()
    }
    fn eval(&self, x: &RandomVariable) -> Result<f64> {
        (**self).eval(x)
    }
    fn subgradient(&self, x: &RandomVariable) -> Result<Vec<f64>> {
        (**self).subgradient(x)
    }
}

/// `rho.eval(x)` with properness enforced: `NaN` and `-inf` become errors.
pub fn evaluate(rho: &dyn RiskMeasure, x: &RandomVariable) -> Result<f64> {
    let value = rho.eval(x)?;
    if value.is_nan() {
        Err(Error::Evaluation(format!("{} produced NaN", rho.name())))
    } else if value == f64::NEG_INFINITY {
        Err(Error::ContractViolation(format!("{} evaluated to -inf", rho.name())))
    } else {
        Ok(value)
    }
}

/// `VaR_alpha(X) = inf{m : P(X + m < 0) <= alpha} = -q_X(alpha)` for `alpha` in `(0,1)`.
pub fn var_alpha<T: Scalar>(x: &RandomVariable<T>, alpha: &T) -> Result<T> {
    if !(*alpha > T::zero() && *alpha < T::one()) {
        return Err(Error::invalid(format!("VaR level must lie in (0,1), got {alpha}")));
    }
    Ok(-quantile(x, alpha)?)
}

/// Weight each sorted support point receives in `int_0^alpha VaR_beta d beta`.
fn tail_weights<T: Scalar>(x: &RandomVariable<T>, alpha: &T) -> Vec<(T, T)> {
    let mut below = T::zero();
    let mut out = Vec::new();
    for (v, p) in distribution(x).pairs() {
        if *alpha <= below {
            break;
        }
        let upto = T::min_of(alpha.clone(), below.clone() + p.clone());
        out.push((v.clone(), upto - below.clone()));
        below = below + p.clone();
    }
    out
}

/// `ES_alpha(X) = (1/alpha) int_0^alpha VaR_beta(X) d beta` for `alpha` in
/// `(0,1]`, integrating the quantile step function exactly.
pub fn es_alpha<T: Scalar>(x: &RandomVariable<T>, alpha: &T) -> Result<T> {
    if !(*alpha > T::zero() && *alpha <= T::one()) {
        return Err(Error::invalid(format!("ES level must lie in (0,1], got {alpha}")));
    }
    let terms: Vec<T> = tail_weights(x, alpha).into_iter().map(|(v, w)| v * w).collect();
    Ok(-T::sum(&terms) / alpha.clone())
}

/// `E[-X]`.
pub fn neg_expectation<T: Scalar>(x: &RandomVariable<T>) -> T {
    -x.expectation()
}

/// `gamma log E[exp(-X/gamma)]`, evaluated with a max shift.
pub fn entropic(x: &RandomVariable, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::invalid(format!("entropic parameter must be positive, got {gamma}")));
    }
    let z: Vec<f64> = x.values().iter().map(|v| -v / gamma).collect();
    let top = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let terms: Vec<f64> = z.iter().zip(x.space().probs()).map(|(zi, p)| p * (zi - top).exp()).collect();
    Ok(gamma * (top + <f64 as Scalar>::sum(&terms).ln()))
}

#[derive(Clone, Debug)]
pub struct ValueAtRisk {
    pub alpha: f64,
}

impl ValueAtRisk {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid(format!("VaR level must lie in (0,1), got {alpha}")));
        }
        Ok(ValueAtRisk { alpha })
    }
}

impl RiskMeasure for ValueAtRisk {
    fn name(&self) -> String {
        format!("var:{}", self.alpha)
    }
    fn flags(&self) -> Flags {
        Flags { convex: false, ..Flags::standard() }
    }
    fn eval(&self, x: &RandomVariable) -> Result<f64> {
        var_alpha(x, &self.alpha)
    }
}

#[derive(Clone, Debug)]
pub struct ExpectedShortfall {
    pub alpha: f64,
}

impl ExpectedShortfall {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::invalid(format!("ES level must lie in (0,1], got {alpha}")));
        }
        Ok(ExpectedShortfall { alpha })
    }
}

impl RiskMeasure for ExpectedShortfall {
    fn name(&self) -> String {
        format!("es:{}", self.alpha)
    }
    fn flags(&self) -> Flags {
        Flags::standard()
    }
    fn eval(&self, x: &RandomVariable) -> Result<f64> {
        es_alpha(x, &self.alpha)
    }

    /// `-w_i/alpha` where `w_i` is the share of atom `i` in the lower `alpha` tail.
    fn subgradient(&self, x: &RandomVariable) -> Result<Vec<f64>> {
        let probs = x.space().probs();
        let mut order: Vec<usize> = (0..x.len()).collect();
        order.sort_by(|&i, &j| x.value(i).total_cmp(x.value(j)));
        let mut g = vec![0.0; x.len()];
        let mut below = 0.0;
        for i in order {
            if below >= self.alpha {
                break;
            }
            let w = (self.alpha - below).min(probs[i]);
            g[i] = -w / self.alpha;
            below += probs[i];
        }
        Ok(g)
    }
}

#[derive(Clone, Debug, Default)]
pub struct NegExpectation;

impl RiskMeasure for NegExpectation {
    fn name(&self) -> String {
        "neg_expectation".into()
    }
    fn flags(&self) -> Flags {
        Flags::standard()
    }
    fn eval(&self, x: &RandomVariable) -> Result<f64> {
        Ok(neg_expectation(x))
    }
    fn subgradient(&self, x: &RandomVariable) -> Result<Vec<f64>> {
        Ok(x.space().probs().iter().map(|p| -p).collect())
    }
}

#[derive(Clone, Debug)]
pub struct Entropic {
    pub gamma: f64,
}

impl Entropic {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::invalid(format!("entropic parameter must be positive, got {gamma}")));
        }
        Ok(Entropic { gamma })
    }
}

impl RiskMeasure for Entropic {
    fn name(&self) -> String {
        format!("entropic:{}", self.gamma)
    }
    fn flags(&self) -> Flags {
        Flags::standard()
    }
    fn eval(&self, x: &RandomVariable) -> Result<f64> {
        entropic(x, self.gamma)
    }
    /// Minus the exponentially tilted probabilities.
    fn subgradient(&self, x: &RandomVariable) -> Result<Vec<f64>> {
        let z: Vec<f64> = x.values().iter().map(|v| -v / self.gamma).collect();
        let top = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = z.iter().zip(x.space().probs()).map(|(zi, p)| p * (zi - top).exp()).collect();
        let total: f64 = w.iter().sum();
        Ok(w.into_iter().map(|wi| -wi / total).collect())
    }
}

/// `X -> rho(-X^-)`.
pub struct SurplusTransform<R> {
    inner: R,
}

/// Makes `rho` surplus-invariant by evaluating it on the loss part only.
pub fn surplus_transform<R: RiskMeasure>(rho: R) -> SurplusTransform<R> {
    SurplusTransform { inner: rho }
}

impl<R: RiskMeasure> RiskMeasure for SurplusTransform<R> {
    fn name(&self) -> String {
        format!("surplus({})", self.inner.name())
    }
    fn flags(&self) -> Flags {
        let f = self.inner.flags();
        Flags {
            // An antitone convex functional of the concave map X -> -X^- is convex.
            convex: f.convex && f.monotone,
            monotone: f.monotone,
            cash_additive: false,
            law_invariant: f.law_invariant,
            surplus_invariant: true,
            surplus_invariant_subject_to_positivity: true,
            s_additive: false,
        }
    }
    fn space(&self) -> Option<&Space> {
        self.inner.space()
    }
    fn eval(&self, x: &RandomVariable) -> Result<f64> {
        self.inner.eval(&-x.neg_part())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::FiniteSpace;
    use crate::scalar::{ratio, Rational};

    fn fixture() -> RandomVariable {
        RandomVariable::new(FiniteSpace::uniform(4).unwrap(), vec![-4.0, -2.0, 1.0, 3.0]).unwrap()
    }

    fn exact_fixture() -> RandomVariable<Rational> {
        RandomVariable::from_f64s(FiniteSpace::uniform(4).unwrap(), &[-4.0, -2.0, 1.0, 3.0]).unwrap()
    }

    #[test]
    fn var_worked_values() {
        assert_eq!(var_alpha(&fixture(), &0.2).unwrap(), 4.0);
        assert_eq!(var_alpha(&fixture(), &0.5).unwrap(), -1.0);
        let c = RandomVariable::constant(FiniteSpace::uniform(3).unwrap(), 2.0);
        assert_eq!(var_alpha(&c, &0.3).unwrap(), -2.0);
        assert!(var_alpha(&fixture(), &0.0).is_err());
        assert!(var_alpha(&fixture(), &1.0).is_err());
    }

    #[test]
    fn es_worked_values_exact() {
        let x = exact_fixture();
        assert_eq!(es_alpha(&x, &ratio(1, 2)).unwrap(), ratio(3, 1));
        assert_eq!(es_alpha(&x, &ratio(1, 1)).unwrap(), ratio(1, 2));
        let c = RandomVariable::constant(FiniteSpace::<Rational>::uniform(3).unwrap(), ratio(-7, 3));
        assert_eq!(es_alpha(&c, &ratio(1, 5)).unwrap(), ratio(7, 3));
        assert!(es_alpha(&x, &ratio(0, 1)).is_err());
        assert!(es_alpha(&x, &ratio(3, 2)).is_err());
    }

    #[test]
    fn es_between_jumps() {
        // Level 0.3 takes all of -4 (0.25) and 0.05 of -2.
        let v = es_alpha(&fixture(), &0.3).unwrap();
        assert!((v - (0.25 * 4.0 + 0.05 * 2.0) / 0.3).abs() < 1e-12);
    }

    #[test]
    fn neg_expectation_values() {
        assert_eq!(neg_expectation(&exact_fixture()), ratio(1, 2));
        let z = RandomVariable::<f64>::zero(FiniteSpace::uniform(2).unwrap());
        assert_eq!(neg_expectation(&z), 0.0);
        assert_eq!(neg_expectation(&fixture().shift(&2.0)), -1.5);
    }

    #[test]
    fn entropic_values() {
        let x = RandomVariable::new(FiniteSpace::uniform(2).unwrap(), vec![0.0, -1.0]).unwrap();
        assert!((entropic(&x, 1.0).unwrap() - ((1.0 + 1f64.exp()) / 2.0).ln()).abs() < 1e-12);
        assert!((entropic(&x, 1.0).unwrap() - 0.620115).abs() < 1e-6);
        let c = RandomVariable::constant(FiniteSpace::uniform(3).unwrap(), 4.0);
        assert!((entropic(&c, 0.3).unwrap() + 4.0).abs() < 1e-12);
        assert!((entropic(&x, 1e6).unwrap() - 0.5).abs() < 1e-6);
        // The gap to E[-X] is Var(X)/(2 gamma) to first order.
        assert!((entropic(&fixture(), 1e6).unwrap() - 0.5 - 7.25 / 2e6).abs() < 1e-9);
        let big = RandomVariable::new(FiniteSpace::uniform(2).unwrap(), vec![-1e4, 1e4]).unwrap();
        assert!(entropic(&big, 1.0).unwrap().is_finite());
    }

    #[test]
    fn closed_form_subgradients_match_differences() {
        let x = RandomVariable::new(FiniteSpace::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap(), vec![-1.0, 0.5, 2.0, -3.0])
            .unwrap();
        struct Plain<'a>(&'a dyn RiskMeasure);
        impl RiskMeasure for Plain<'_> {
            fn name(&self) -> String {
                self.0.name()
            }
            fn flags(&self) -> Flags {
                self.0.flags()
            }
            fn eval(&self, x: &RandomVariable) -> Result<f64> {
                self.0.eval(x)
            }
        }
        let measures: [Box<dyn RiskMeasure>; 3] =
            [Box::new(ExpectedShortfall::new(0.35).unwrap()), Box::new(Entropic::new(0.7).unwrap()), Box::new(NegExpectation)];
        for m in &measures {
            let exact = m.subgradient(&x).unwrap();
            let fd = Plain(m.as_ref()).subgradient(&x).unwrap();
            for (a, b) in exact.iter().zip(&fd) {
                assert!((a - b).abs() < 1e-5, "{}: {a} vs {b}", m.name());
            }
        }
    }

    #[test]
    fn surplus_transform_examples() {
        let es = surplus_transform(ExpectedShortfall::new(0.5).unwrap());
        let pos = RandomVariable::new(FiniteSpace::uniform(3).unwrap(), vec![0.0, 2.0, 5.0]).unwrap();
        assert_eq!(es.eval(&pos).unwrap(), 0.0);
        let x = fixture();
        let bumped = &x + &x.pos_part();
        assert_eq!(es.eval(&x).unwrap(), es.eval(&bumped).unwrap());
        assert_eq!(surplus_transform(NegExpectation).eval(&x).unwrap(), 1.5);
        assert!(es.flags().surplus_invariant);
    }

    #[test]
    fn es_orderings() {
        let x = fixture();
        let mut prev = f64::INFINITY;
        for k in 1..=20 {
            let a = k as f64 / 20.0;
            let v = es_alpha(&x, &a).unwrap();
            assert!(v <= prev + 1e-12);
            assert!(v >= neg_expectation(&x) - 1e-12);
            prev = v;
        }
        assert!((prev - neg_expectation(&x)).abs() < 1e-12);
    }
}
