use std::cmp::Ordering;

use super::variable::RandomVariable;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// The law of a random variable: `(value, probability)` pairs with strictly
/// increasing values.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution<T: Scalar = f64> {
    pairs: Vec<(T, T)>,
}

impl<T: Scalar> Distribution<T> {
    pub fn pairs(&self) -> &[(T, T)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = &T> {
        self.pairs.iter().map(|(v, _)| v)
    }

    /// Left-continuous generalized inverse `sup{t : P(X < t) <= u}`.
    pub fn quantile(&self, u: &T) -> Result<T> {
        if !(*u > T::zero() && *u < T::one()) {
            return Err(Error::invalid(format!("quantile level {u} outside (0,1)")));
        }
        // P(X < x_k) is the mass strictly below the k-th support point.
        let mut below = T::zero();
        let mut answer = self.pairs[0].0.clone();
        for (v, p) in &self.pairs {
            if T::le_tol(&below, u) {
                answer = v.clone();
            } else {
                break;
            }
            below = below + p.clone();
        }
        Ok(answer)
    }
}

pub(crate) fn cmp_scalar<T: Scalar>(a: &T, b: &T) -> Ordering {
    a.partial_cmp(b).unwrap_or(Ordering::Equal)
}

/// Aggregated, sorted law of `x`.
pub fn distribution<T: Scalar>(x: &RandomVariable<T>) -> Distribution<T> {
    let probs = x.space().probs();
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&i, &j| cmp_scalar(x.value(i), x.value(j)));
    let mut pairs: Vec<(T, T)> = Vec::new();
    for i in order {
        let v = x.value(i);
        match pairs.last_mut() {
            Some((last, p)) if last == v => *p = p.clone() + probs[i].clone(),
            _ => pairs.push((v.clone(), probs[i].clone())),
        }
    }
    Distribution { pairs }
}

/// Equality in law: support values within `1e-12` and probabilities within
/// `1e-12` (both exact for rational backends).
pub fn same_distribution<T: Scalar>(x: &RandomVariable<T>, y: &RandomVariable<T>) -> bool {
    let (a, b) = (distribution(x), distribution(y));
    a.len() == b.len()
        && a.pairs.iter().zip(&b.pairs).all(|((va, pa), (vb, pb))| {
            T::approx_eq(va, vb, 1e-12) && T::approx_eq(pa, pb, 1e-12)
        })
}

/// `sup{t : P(X < t) <= u}` for `u` in `(0,1)`.
pub fn quantile<T: Scalar>(x: &RandomVariable<T>, u: &T) -> Result<T> {
    distribution(x).quantile(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::FiniteSpace;
    use crate::scalar::{ratio, Rational};

    fn fixture() -> RandomVariable {
        RandomVariable::new(FiniteSpace::uniform(4).unwrap(), vec![-4.0, -2.0, 1.0, 3.0]).unwrap()
    }

    #[test]
    fn distribution_merges_ties() {
        let x = RandomVariable::new(FiniteSpace::uniform(4).unwrap(), vec![3.0, 1.0, 1.0, 3.0]).unwrap();
        assert_eq!(distribution(&x).pairs(), &[(1.0, 0.5), (3.0, 0.5)]);
        let c = RandomVariable::constant(FiniteSpace::uniform(5).unwrap(), 2.5);
        assert_eq!(distribution(&c).len(), 1);
        assert!((distribution(&c).pairs()[0].1 - 1.0).abs() < 1e-12);
        assert_eq!(distribution(&fixture()).pairs(), &[(-4.0, 0.25), (-2.0, 0.25), (1.0, 0.25), (3.0, 0.25)]);
    }

    #[test]
    fn same_distribution_cases() {
        let x = fixture();
        let y = x.permuted(&[2, 0, 3, 1]).unwrap();
        assert!(same_distribution(&x, &y));
        assert!(same_distribution(&x, &x));
        let s = FiniteSpace::new(vec![0.3, 0.7]).unwrap();
        let a = RandomVariable::new(s.clone(), vec![0.0, 1.0]).unwrap();
        let b = RandomVariable::new(s, vec![1.0, 0.0]).unwrap();
        assert!(!same_distribution(&a, &b));
    }

    #[test]
    fn quantile_worked_values() {
        let x = fixture();
        assert_eq!(quantile(&x, &0.2).unwrap(), -4.0);
        assert_eq!(quantile(&x, &0.5).unwrap(), 1.0);
        let c = RandomVariable::constant(FiniteSpace::uniform(3).unwrap(), 7.0);
        assert_eq!(quantile(&c, &0.01).unwrap(), 7.0);
        assert_eq!(quantile(&c, &0.99).unwrap(), 7.0);
        assert!(quantile(&x, &0.0).is_err());
        assert!(quantile(&x, &1.0).is_err());
    }

    #[test]
    fn quantile_exact_at_jumps() {
        let s = FiniteSpace::<Rational>::uniform(3).unwrap();
        let x = RandomVariable::from_f64s(s, &[5.0, -1.0, 2.0]).unwrap();
        assert_eq!(quantile(&x, &ratio(1, 3)).unwrap(), ratio(2, 1));
        assert_eq!(quantile(&x, &ratio(1, 4)).unwrap(), ratio(-1, 1));
        assert_eq!(quantile(&x, &ratio(2, 3)).unwrap(), ratio(5, 1));
    }
}
