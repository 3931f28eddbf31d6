use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use super::{Flags, RiskMeasure};
use crate::error::{Error, Result};
use crate::prob::{cmp_scalar, RandomVariable, Space};
use crate::scalar::Scalar;

/// Strictly positive hedging asset `S`.
#[derive(Clone, Debug)]
pub struct Numeraire<T: Scalar = f64> {
    s: RandomVariable<T>,
}

impl<T: Scalar> Numeraire<T> {
    pub fn new(s: RandomVariable<T>) -> Result<Self> {
        if !(s.min_value() > T::zero()) {
            return Err(Error::invalid("numeraire must be strictly positive on every atom"));
        }
        Ok(Numeraire { s })
    }

    /// The riskless numeraire `S = 1`.
    pub fn cash(space: Space<T>) -> Self {
        Numeraire { s: RandomVariable::constant(space, T::one()) }
    }

    pub fn s(&self) -> &RandomVariable<T> {
        &self.s
    }

    pub fn is_constant_one(&self) -> bool {
        self.s.values().iter().all(|v| *v == T::one())
    }
}

/// `{Y >= 0 : E[w Y] <= c}` with `w >= 0`, `c >= 0`.
#[derive(Clone, Debug)]
pub struct Budget<T: Scalar = f64> {
    pub w: RandomVariable<T>,
    pub c: T,
}

impl<T: Scalar> Budget<T> {
    pub fn new(w: RandomVariable<T>, c: T) -> Result<Self> {
        if w.min_value() < T::zero() {
            return Err(Error::invalid("budget weights must be nonnegative"));
        }
        if c < T::zero() {
            return Err(Error::invalid("budget capacity must be nonnegative"));
        }
        Ok(Budget { w, c })
    }

    /// Constant weight `w` on every atom.
    pub fn flat(space: Space<T>, w: T, c: T) -> Result<Self> {
        Self::new(RandomVariable::constant(space, w), c)
    }

    /// `E[w Y]`.
    pub fn load(&self, y: &RandomVariable<T>) -> T {
        self.w.inner(y)
    }

    pub fn contains(&self, y: &RandomVariable<T>) -> bool {
        self.load(y) <= self.c
    }

    fn weighted(&self) -> Vec<T> {
        self.w.values().iter().zip(self.w.space().probs()).map(|(w, p)| w.clone() * p.clone()).collect()
    }

    fn is_flat(&self) -> bool {
        self.w.values().iter().all(|v| *v == self.w.values()[0])
    }
}

/// Split `Z = Y + W` certifying `Z` in `D1 + D2`.
#[derive(Clone, Debug)]
pub struct SplitWitness<T: Scalar = f64> {
    pub y: RandomVariable<T>,
    pub w: RandomVariable<T>,
    /// `E[w1 Y]`, the least possible load on the first budget.
    pub load1: T,
    pub load2: T,
    pub feasible: bool,
}

/// Solid convex subsets of the positive cone.
#[derive(Clone, Debug)]
pub enum SolidPositiveSet<T: Scalar = f64> {
    Budget(Budget<T>),
    Intersection(Vec<Budget<T>>),
    /// Minkowski sum `D1 + D2` of two budgets.
    Sum(Budget<T>, Budget<T>),
}

impl<T: Scalar> SolidPositiveSet<T> {
    /// Membership for `z >= 0`.
    pub fn contains(&self, z: &RandomVariable<T>) -> Result<bool> {
        if z.min_value() < T::zero() {
            return Err(Error::invalid("solid positive sets only contain nonnegative variables"));
        }
        Ok(match self {
            SolidPositiveSet::Budget(b) => b.contains(z),
            SolidPositiveSet::Intersection(bs) => bs.iter().all(|b| b.contains(z)),
            SolidPositiveSet::Sum(d1, d2) => split(d1, d2, z).feasible,
        })
    }
}

fn ratio_order<T: Scalar>(a: &[T], b: &[T], i: usize, j: usize) -> Ordering {
    cmp_scalar(&(a[i].clone() * b[j].clone()), &(a[j].clone() * b[i].clone()))
}

/// Least first-budget load over all splits `Z = Y + W`, `0 <= Y <= Z`,
/// with `W` inside the second budget. A fractional knapsack: the second
/// budget requires `sum b_i Y_i >= R`, and atoms are filled in increasing
/// order of `a_i/b_i`; atoms with equal ratio are filled proportionally.
fn split<T: Scalar>(d1: &Budget<T>, d2: &Budget<T>, z: &RandomVariable<T>) -> SplitWitness<T> {
    let (a, b) = (d1.weighted(), d2.weighted());
    let zv = z.values();
    let total: Vec<T> = b.iter().zip(zv).map(|(bi, zi)| bi.clone() * zi.clone()).collect();
    let mut remaining = T::sum(&total) - d2.c.clone();
    let mut y = vec![T::zero(); zv.len()];
    if remaining > T::zero() {
        let mut order: Vec<usize> = (0..zv.len()).filter(|&i| b[i] > T::zero() && zv[i] > T::zero()).collect();
        order.sort_by(|&i, &j| ratio_order(&a, &b, i, j));
        let mut start = 0;
        while start < order.len() && remaining > T::zero() {
            let mut end = start + 1;
            while end < order.len() && ratio_order(&a, &b, order[start], order[end]) == Ordering::Equal {
                end += 1;
            }
            let group = &order[start..end];
            let cap: Vec<T> = group.iter().map(|&i| b[i].clone() * zv[i].clone()).collect();
            let cap = T::sum(&cap);
            if cap <= remaining {
                for &i in group {
                    y[i] = zv[i].clone();
                }
                remaining = remaining - cap;
            } else {
                let f = remaining.clone() / cap;
                for &i in group {
                    y[i] = f.clone() * zv[i].clone();
                }
                remaining = T::zero();
            }
            start = end;
        }
    }
    let y = RandomVariable::new(z.space().clone(), y).expect("same space");
    let w = z - &y;
    let (load1, load2) = (d1.load(&y), d2.load(&w));
    let feasible = load1 <= d1.c && T::le_tol(&load2, &d2.c);
    SplitWitness { y, w, load1, load2, feasible }
}

type Oracle<T> = Arc<dyn Fn(&RandomVariable<T>) -> bool + Send + Sync>;

/// A monotone acceptance set.
#[derive(Clone)]
pub enum AcceptanceSet<T: Scalar = f64> {
    /// `A = X_+ - D`, i.e. `X` is accepted iff `X^-` lies in `D`.
    SurplusMonotone(SolidPositiveSet<T>),
    /// Arbitrary membership oracle, assumed monotone.
    Generic { name: String, oracle: Oracle<T> },
}

impl<T: Scalar> fmt::Debug for AcceptanceSet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AcceptanceSet::SurplusMonotone(d) => f.debug_tuple("SurplusMonotone").field(d).finish(),
            AcceptanceSet::Generic { name, .. } => f.debug_struct("Generic").field("name", name).finish(),
        }
    }
}

impl<T: Scalar> AcceptanceSet<T> {
    pub fn budget(b: Budget<T>) -> Self {
        AcceptanceSet::SurplusMonotone(SolidPositiveSet::Budget(b))
    }

    pub fn generic(name: impl Into<String>, oracle: impl Fn(&RandomVariable<T>) -> bool + Send + Sync + 'static) -> Self {
        AcceptanceSet::Generic { name: name.into(), oracle: Arc::new(oracle) }
    }

    pub fn contains(&self, x: &RandomVariable<T>) -> Result<bool> {
        match self {
            AcceptanceSet::SurplusMonotone(d) => d.contains(&x.neg_part()),
            AcceptanceSet::Generic { oracle, .. } => Ok(oracle(x)),
        }
    }

    pub fn solid_set(&self) -> Option<&SolidPositiveSet<T>> {
        match self {
            AcceptanceSet::SurplusMonotone(d) => Some(d),
            AcceptanceSet::Generic { .. } => None,
        }
    }
}

/// `A1 + A2` for surplus-monotone sets with single-budget `D1`, `D2`:
/// the result is surplus-monotone with `D = D1 + D2`.
pub fn sum_acceptance<T: Scalar>(a1: &AcceptanceSet<T>, a2: &AcceptanceSet<T>) -> Result<AcceptanceSet<T>> {
    match (a1.solid_set(), a2.solid_set()) {
        (Some(SolidPositiveSet::Budget(d1)), Some(SolidPositiveSet::Budget(d2))) => {
            if !d1.w.same_space_as(&d2.w) {
                return Err(Error::invalid("budgets live on different spaces"));
            }
            Ok(AcceptanceSet::SurplusMonotone(SolidPositiveSet::Sum(d1.clone(), d2.clone())))
        }
        (Some(_), Some(_)) => Err(Error::Unsupported("set sums are implemented for single budgets only".into())),
        _ => Err(Error::Unsupported("set sums need surplus-monotone acceptance sets".into())),
    }
}

/// Value of an acceptance-induced measure.
#[derive(Clone, Debug, PartialEq)]
pub enum Threshold<T> {
    Finite(T),
    PlusInfinity,
}

impl<T: Scalar> Threshold<T> {
    pub fn to_f64(&self) -> f64 {
        match self {
            Threshold::Finite(v) => v.to_f64_lossy(),
            Threshold::PlusInfinity => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<T> {
        match self {
            Threshold::Finite(v) => Some(v),
            Threshold::PlusInfinity => None,
        }
    }
}

/// `rho(X) = inf{m : X + mS in A}`.
#[derive(Clone, Debug)]
pub struct AcceptanceMeasure<T: Scalar = f64> {
    set: AcceptanceSet<T>,
    numeraire: Numeraire<T>,
}

pub fn from_acceptance<T: Scalar>(set: AcceptanceSet<T>, numeraire: Numeraire<T>) -> Result<AcceptanceMeasure<T>> {
    let spaces_ok = match set.solid_set() {
        Some(SolidPositiveSet::Budget(b)) => b.w.same_space_as(numeraire.s()),
        Some(SolidPositiveSet::Intersection(bs)) => bs.iter().all(|b| b.w.same_space_as(numeraire.s())),
        Some(SolidPositiveSet::Sum(b1, b2)) => b1.w.same_space_as(numeraire.s()) && b2.w.same_space_as(numeraire.s()),
        None => true,
    };
    if !spaces_ok {
        return Err(Error::invalid("acceptance set and numeraire live on different spaces"));
    }
    Ok(AcceptanceMeasure { set, numeraire })
}

impl<T: Scalar> AcceptanceMeasure<T> {
    pub fn set(&self) -> &AcceptanceSet<T> {
        &self.set
    }

    pub fn numeraire_exact(&self) -> &Numeraire<T> {
        &self.numeraire
    }

    /// `inf{m : X + mS in A}`, exactly for budget-type sets. Errors with
    /// `UnboundedBelow` when every `m` is accepted.
    pub fn threshold(&self, x: &RandomVariable<T>) -> Result<Threshold<T>> {
        if !x.same_space_as(self.numeraire.s()) {
            return Err(Error::invalid("position and numeraire live on different spaces"));
        }
        let s = self.numeraire.s();
        match &self.set {
            AcceptanceSet::SurplusMonotone(SolidPositiveSet::Budget(b)) => {
                budget_threshold(b, x, s)?.map(Threshold::Finite).ok_or_else(unbounded)
            }
            AcceptanceSet::SurplusMonotone(SolidPositiveSet::Intersection(bs)) => {
                let mut best: Option<T> = None;
                for b in bs {
                    if let Some(m) = budget_threshold(b, x, s)? {
                        best = Some(match best {
                            Some(prev) => T::max_of(prev, m),
                            None => m,
                        });
                    }
                }
                best.map(Threshold::Finite).ok_or_else(unbounded)
            }
            AcceptanceSet::SurplusMonotone(SolidPositiveSet::Sum(d1, d2)) => {
                sum_threshold(d1, d2, x, s).map(Threshold::Finite)
            }
            AcceptanceSet::Generic { oracle, .. } => bisect_threshold(oracle.as_ref(), x, s),
        }
    }

    /// Least-load split of `(X + mS)^-` between the two budgets of a sum set.
    pub fn split_at(&self, x: &RandomVariable<T>, m: &T) -> Result<SplitWitness<T>> {
        match &self.set {
            AcceptanceSet::SurplusMonotone(SolidPositiveSet::Sum(d1, d2)) => {
                Ok(split(d1, d2, &shifted(x, self.numeraire.s(), m).neg_part()))
            }
            _ => Err(Error::Unsupported("splits exist only for sums of budgets".into())),
        }
    }
}

fn unbounded() -> Error {
    Error::UnboundedBelow("every position is accepted after arbitrary withdrawals".into())
}

fn shifted<T: Scalar>(x: &RandomVariable<T>, s: &RandomVariable<T>, m: &T) -> RandomVariable<T> {
    x.zip_map(s, |xi, si| xi.clone() + m.clone() * si.clone())
}

/// Exact `inf{m : E[w (X + mS)^-] <= c}`; `None` when `w` vanishes.
///
/// `g(m) = E[w (X + mS)^-]` is piecewise linear and nonincreasing with kinks
/// at `-x_i/s_i`. Walking the kinks from the right, the first segment on
/// which `g` exceeds `c` holds the solution of `A - mB = c`.
fn budget_threshold<T: Scalar>(b: &Budget<T>, x: &RandomVariable<T>, s: &RandomVariable<T>) -> Result<Option<T>> {
    let pw = b.weighted();
    let mut atoms: Vec<(T, usize)> = (0..x.len())
        .filter(|&i| pw[i] > T::zero())
        .map(|i| (-x.value(i).clone() / s.value(i).clone(), i))
        .collect();
    if atoms.is_empty() {
        return Ok(None);
    }
    atoms.sort_by(|u, v| cmp_scalar(&v.0, &u.0));
    let (mut a, mut slope) = (T::zero(), T::zero());
    let mut j = 0;
    while j < atoms.len() {
        let kink = atoms[j].0.clone();
        while j < atoms.len() && atoms[j].0 == kink {
            let i = atoms[j].1;
            a = a + pw[i].clone() * -x.value(i).clone();
            slope = slope + pw[i].clone() * s.value(i).clone();
            j += 1;
        }
        let solve = || (a.clone() - b.c.clone()) / slope.clone();
        match atoms.get(j) {
            Some((next, _)) if a.clone() - next.clone() * slope.clone() > b.c => return Ok(Some(solve())),
            Some(_) => {}
            None => return Ok(Some(solve())),
        }
    }
    unreachable!("the last segment always returns")
}

/// Exact `inf{m : (X + mS)^- in D1 + D2}`.
///
/// `G(m)` = least first-budget load minus `c1` is continuous, piecewise
/// affine and nonincreasing in `m`. Its kinks are the activation points
/// `-x_i/s_i` and, between two of them, the points where the knapsack
/// requirement crosses a cumulative capacity. Both lists are searched by
/// bisection over candidates, then `G = 0` is solved on the final affine piece.
fn sum_threshold<T: Scalar>(d1: &Budget<T>, d2: &Budget<T>, x: &RandomVariable<T>, s: &RandomVariable<T>) -> Result<T> {
    let (a, b) = (d1.weighted(), d2.weighted());
    let relevant: Vec<usize> = (0..x.len()).filter(|&i| a[i] > T::zero() || b[i] > T::zero()).collect();
    if relevant.is_empty() {
        return Err(unbounded());
    }
    let g = |m: &T| -> T {
        let w = split(d1, d2, &shifted(x, s, m).neg_part());
        w.load1 - d1.c.clone()
    };
    let feasible = |m: &T| g(m) <= T::zero();
    let mut kinks: Vec<T> = relevant.iter().map(|&i| -x.value(i).clone() / s.value(i).clone()).collect();
    kinks.sort_by(|u, v| cmp_scalar(v, u));
    kinks.dedup();
    // Last feasible kink: kinks[0] is feasible since (X + mS)^- vanishes there.
    let last = last_true(&kinks, feasible);
    let hi = kinks[last].clone();
    let lo = kinks.get(last + 1).cloned();

    // Inside (lo, hi) the active atoms and the knapsack order are fixed.
    let active: Vec<usize> = relevant.iter().copied().filter(|&i| -x.value(i).clone() / s.value(i).clone() >= hi).collect();
    let mut order: Vec<usize> = active.iter().copied().filter(|&i| b[i] > T::zero()).collect();
    order.sort_by(|&i, &j| ratio_order(&a, &b, i, j));
    let mut candidates = vec![hi.clone()];
    // Tail sums of b_i Z_i(m) = b_i(-x_i - m s_i) over order[k..]: alpha_k + m gamma_k.
    let (mut alpha, mut gamma) = (T::zero(), T::zero());
    let mut tails = Vec::with_capacity(order.len() + 1);
    for &i in order.iter().rev() {
        alpha = alpha + b[i].clone() * -x.value(i).clone();
        gamma = gamma - b[i].clone() * s.value(i).clone();
        tails.push((alpha.clone(), gamma.clone()));
    }
    for (alpha, gamma) in tails {
        if gamma != T::zero() {
            let m = (d2.c.clone() - alpha) / gamma;
            let inside = m < hi && lo.as_ref().is_none_or(|l| m > *l);
            if inside {
                candidates.push(m);
            }
        }
    }
    if let Some(l) = &lo {
        candidates.push(l.clone());
    }
    candidates.sort_by(|u, v| cmp_scalar(v, u));
    candidates.dedup();
    let k = last_true(&candidates, feasible);
    let right = candidates[k].clone();
    let left = match candidates.get(k + 1) {
        Some(l) => l.clone(),
        None => right.clone() - T::one(),
    };
    let (g_right, g_left) = (g(&right), g(&left));
    let rise = g_left - g_right.clone();
    if rise <= T::zero() {
        return Err(unbounded());
    }
    // G(m) = G(right) + (right - m) * rise / (right - left).
    Ok(right.clone() + g_right * (right - left) / rise)
}

/// Largest index with `pred` true, given `pred(items[0])` and monotone
/// truth (true, ..., true, false, ...).
fn last_true<T>(items: &[T], pred: impl Fn(&T) -> bool) -> usize {
    let (mut lo, mut hi) = (0usize, items.len());
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if pred(&items[mid]) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Bisection for a generic monotone oracle with a doubling bracket. Every
/// bisection step also probes a point on the far side of the midpoint, so a
/// non-monotone oracle is reported instead of silently bisected.
fn bisect_threshold<T: Scalar>(
    oracle: &(dyn Fn(&RandomVariable<T>) -> bool + Send + Sync),
    x: &RandomVariable<T>,
    s: &RandomVariable<T>,
) -> Result<Threshold<T>> {
    let accept = |m: &T| oracle(&shifted(x, s, m));
    let two = T::one() + T::one();
    let radius = x.sup_norm() / s.min_value() + T::one();
    let (mut lo, mut hi) = (-radius.clone(), radius);
    let mut doublings = 0;
    while !accept(&hi) {
        hi = hi * two.clone();
        doublings += 1;
        if doublings > 60 {
            return Ok(Threshold::PlusInfinity);
        }
    }
    doublings = 0;
    while accept(&lo) {
        lo = lo * two.clone();
        doublings += 1;
        if doublings > 60 {
            return Err(unbounded());
        }
    }
    let violation = |m: &T| Error::ContractViolation(format!("acceptance is not upward closed in m near {m}"));
    let steps = if T::EXACT { 80 } else { 200 };
    for _ in 0..steps {
        let mid = T::midpoint(&lo, &hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if accept(&mid) {
            if !accept(&T::midpoint(&mid, &hi)) {
                return Err(violation(&mid));
            }
            hi = mid;
        } else {
            if accept(&T::midpoint(&lo, &mid)) {
                return Err(violation(&mid));
            }
            lo = mid;
        }
    }
    Ok(Threshold::Finite(hi))
}

impl RiskMeasure for AcceptanceMeasure<f64> {
    fn name(&self) -> String {
        match &self.set {
            AcceptanceSet::SurplusMonotone(SolidPositiveSet::Budget(_)) => "acceptance(budget)".into(),
            AcceptanceSet::SurplusMonotone(SolidPositiveSet::Intersection(_)) => "acceptance(budgets)".into(),
            AcceptanceSet::SurplusMonotone(SolidPositiveSet::Sum(..)) => "acceptance(budget sum)".into(),
            AcceptanceSet::Generic { name, .. } => format!("acceptance({name})"),
        }
    }

    fn flags(&self) -> Flags {
        let surplus = self.set.solid_set().is_some();
        let flat = match self.set.solid_set() {
            Some(SolidPositiveSet::Budget(b)) => b.is_flat(),
            Some(SolidPositiveSet::Intersection(bs)) => bs.iter().all(Budget::is_flat),
            Some(SolidPositiveSet::Sum(b1, b2)) => b1.is_flat() && b2.is_flat(),
            None => false,
        };
        let cash = self.numeraire.is_constant_one();
        Flags {
            convex: surplus,
            monotone: true,
            cash_additive: cash,
            law_invariant: surplus && flat && cash,
            surplus_invariant: false,
            surplus_invariant_subject_to_positivity: surplus,
            s_additive: true,
        }
    }

    fn numeraire(&self) -> Option<&Numeraire> {
        Some(&self.numeraire)
    }

    fn space(&self) -> Option<&Space> {
        Some(self.numeraire.s().space())
    }

    fn eval(&self, x: &RandomVariable) -> Result<f64> {
        Ok(self.threshold(x)?.to_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::FiniteSpace;
    use crate::scalar::{ratio, Rational};

    fn space() -> Space<Rational> {
        FiniteSpace::uniform(4).unwrap()
    }

    fn fixture() -> RandomVariable<Rational> {
        RandomVariable::from_f64s(space(), &[-4.0, -2.0, 1.0, 3.0]).unwrap()
    }

    fn budget_measure(c: Rational) -> AcceptanceMeasure<Rational> {
        let b = Budget::flat(space(), ratio(1, 1), c).unwrap();
        from_acceptance(AcceptanceSet::budget(b), Numeraire::cash(space())).unwrap()
    }

    #[test]
    fn budget_worked_values() {
        let rho = budget_measure(ratio(1, 2));
        assert_eq!(rho.threshold(&fixture()).unwrap(), Threshold::Finite(ratio(2, 1)));
        let one = RandomVariable::constant(space(), ratio(1, 1));
        assert_eq!(rho.threshold(&one).unwrap(), Threshold::Finite(ratio(-3, 2)));
    }

    #[test]
    fn constant_one_confirmed_on_a_grid() {
        // Brute force over m in steps of 1/100: the least accepted m is -1.5.
        let rho = budget_measure(ratio(1, 2));
        let one = RandomVariable::constant(space(), ratio(1, 1));
        let accepted: Vec<Rational> = (-300..=300)
            .map(|k| ratio(k, 100))
            .filter(|m| rho.set().contains(&one.shift(m)).unwrap())
            .collect();
        assert_eq!(accepted[0], ratio(-3, 2));
    }

    #[test]
    fn zero_weights_are_unbounded() {
        let b = Budget::flat(space(), ratio(0, 1), ratio(1, 1)).unwrap();
        let rho = from_acceptance(AcceptanceSet::budget(b), Numeraire::cash(space())).unwrap();
        assert!(matches!(rho.threshold(&fixture()), Err(Error::UnboundedBelow(_))));
        let all = from_acceptance(AcceptanceSet::generic("everything", |_| true), Numeraire::cash(space())).unwrap();
        assert!(matches!(all.threshold(&fixture()), Err(Error::UnboundedBelow(_))));
    }

    #[test]
    fn zero_capacity_is_worst_case() {
        let rho = budget_measure(ratio(0, 1));
        assert_eq!(rho.threshold(&fixture()).unwrap(), Threshold::Finite(ratio(4, 1)));
    }

    #[test]
    fn intersection_takes_the_largest_threshold() {
        let s = space();
        let w = RandomVariable::from_f64s(s.clone(), &[0.0, 4.0, 0.0, 0.0]).unwrap();
        let tight = Budget::new(w, ratio(0, 1)).unwrap();
        let loose = Budget::flat(s.clone(), ratio(1, 1), ratio(1, 2)).unwrap();
        let set = AcceptanceSet::SurplusMonotone(SolidPositiveSet::Intersection(vec![tight, loose]));
        let rho = from_acceptance(set, Numeraire::cash(s)).unwrap();
        assert_eq!(rho.threshold(&fixture()).unwrap(), Threshold::Finite(ratio(2, 1)));
    }

    #[test]
    fn generic_bisection_agrees_with_closed_form() {
        let sf = FiniteSpace::<f64>::uniform(4).unwrap();
        let b = Budget::flat(sf.clone(), 1.0, 0.5).unwrap();
        let closed = from_acceptance(AcceptanceSet::budget(b.clone()), Numeraire::cash(sf.clone())).unwrap();
        let oracle = from_acceptance(
            AcceptanceSet::generic("budget", move |x: &RandomVariable| b.contains(&x.neg_part())),
            Numeraire::cash(sf.clone()),
        )
        .unwrap();
        let x = RandomVariable::new(sf, vec![-4.0, -2.0, 1.0, 3.0]).unwrap();
        assert!((closed.eval(&x).unwrap() - oracle.eval(&x).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn generic_never_accepting_is_plus_infinity() {
        let sf = FiniteSpace::<f64>::uniform(2).unwrap();
        let rho = from_acceptance(AcceptanceSet::generic("nothing", |_| false), Numeraire::cash(sf.clone())).unwrap();
        let x = RandomVariable::new(sf, vec![1.0, 2.0]).unwrap();
        assert_eq!(rho.eval(&x).unwrap(), f64::INFINITY);
    }

    #[test]
    fn non_monotone_oracle_is_reported() {
        let sf = FiniteSpace::<f64>::uniform(1).unwrap();
        // Accepts nonnegative cash except on a hole.
        let set = AcceptanceSet::generic("holed", |x: &RandomVariable| {
            let v = x.values()[0];
            v >= 0.0 && !(1.0..1.5).contains(&v)
        });
        let rho = from_acceptance(set, Numeraire::cash(sf.clone())).unwrap();
        let x = RandomVariable::new(sf, vec![0.0]).unwrap();
        assert!(matches!(rho.eval(&x), Err(Error::ContractViolation(_))));
    }

    #[test]
    fn budget_sum_adds_equal_weight_capacities() {
        let s = space();
        let a1 = AcceptanceSet::budget(Budget::flat(s.clone(), ratio(1, 1), ratio(3, 10)).unwrap());
        let a2 = AcceptanceSet::budget(Budget::flat(s.clone(), ratio(1, 1), ratio(1, 5)).unwrap());
        let sum = from_acceptance(sum_acceptance(&a1, &a2).unwrap(), Numeraire::cash(s.clone())).unwrap();
        assert_eq!(sum.threshold(&fixture()).unwrap(), Threshold::Finite(ratio(2, 1)));
        let one = RandomVariable::constant(s.clone(), ratio(1, 1));
        assert_eq!(sum.threshold(&one).unwrap(), Threshold::Finite(ratio(-3, 2)));
    }

    #[test]
    fn zero_capacities_give_the_worst_case() {
        let s = space();
        let a1 = AcceptanceSet::budget(Budget::flat(s.clone(), ratio(1, 1), ratio(0, 1)).unwrap());
        let a2 = AcceptanceSet::budget(Budget::flat(s.clone(), ratio(2, 1), ratio(0, 1)).unwrap());
        let sum = from_acceptance(sum_acceptance(&a1, &a2).unwrap(), Numeraire::cash(s)).unwrap();
        assert_eq!(sum.threshold(&fixture()).unwrap(), Threshold::Finite(ratio(4, 1)));
    }

    #[test]
    fn zero_set_is_neutral() {
        let s = space();
        let w1 = RandomVariable::from_f64s(s.clone(), &[1.0, 3.0, 0.5, 2.0]).unwrap();
        let a1 = AcceptanceSet::budget(Budget::new(w1, ratio(1, 2)).unwrap());
        let zero = AcceptanceSet::budget(Budget::flat(s.clone(), ratio(1, 1), ratio(0, 1)).unwrap());
        let plain = from_acceptance(a1.clone(), Numeraire::cash(s.clone())).unwrap();
        let summed = from_acceptance(sum_acceptance(&a1, &zero).unwrap(), Numeraire::cash(s)).unwrap();
        assert_eq!(plain.threshold(&fixture()).unwrap(), summed.threshold(&fixture()).unwrap());
    }

    #[test]
    fn split_witness_is_valid() {
        let s = space();
        let w1 = RandomVariable::from_f64s(s.clone(), &[1.0, 3.0, 0.5, 2.0]).unwrap();
        let w2 = RandomVariable::from_f64s(s.clone(), &[2.0, 1.0, 1.0, 0.0]).unwrap();
        let a1 = AcceptanceSet::budget(Budget::new(w1.clone(), ratio(1, 2)).unwrap());
        let a2 = AcceptanceSet::budget(Budget::new(w2.clone(), ratio(1, 3)).unwrap());
        let rho = from_acceptance(sum_acceptance(&a1, &a2).unwrap(), Numeraire::cash(s)).unwrap();
        let m = rho.threshold(&fixture()).unwrap().finite().unwrap();
        let split = rho.split_at(&fixture(), &m).unwrap();
        assert!(split.feasible);
        assert_eq!(split.load1, ratio(1, 2));
        assert!(split.y.is_nonnegative() && split.w.is_nonnegative());
        assert!(w2.inner(&split.w) <= ratio(1, 3));
        // Slightly less cash is no longer acceptable.
        let below = m - ratio(1, 1_000_000);
        assert!(!rho.split_at(&fixture(), &below).unwrap().feasible);
    }

    #[test]
    fn non_budget_sums_are_unsupported() {
        let s = space();
        let a = AcceptanceSet::generic("any", |_: &RandomVariable<Rational>| true);
        let b = AcceptanceSet::budget(Budget::flat(s, ratio(1, 1), ratio(1, 1)).unwrap());
        assert!(matches!(sum_acceptance(&a, &b), Err(Error::Unsupported(_))));
    }
}
