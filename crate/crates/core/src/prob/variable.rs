use std::ops::{Add, Mul, Neg, Sub};

use num_traits::Zero;

use super::space::{same_space, Space};
use crate::error::{Error, Result};
use crate::scalar::{convert, Scalar};

/// A real-valued random variable on a [`FiniteSpace`](super::FiniteSpace):
/// one value per atom.
///
/// Arithmetic operators panic when the operands live on different spaces,
/// the same way shape mismatches panic for dense arrays.
#[derive(Clone, Debug)]
pub struct RandomVariable<T: Scalar = f64> {
    space: Space<T>,
    values: Vec<T>,
}

impl<T: Scalar> PartialEq for RandomVariable<T> {
    fn eq(&self, other: &Self) -> bool {
        same_space(&self.space, &other.space) && self.values == other.values
    }
}

impl<T: Scalar> RandomVariable<T> {
    pub fn new(space: Space<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::invalid(format!(
                "{} values for a space with {} atoms",
                values.len(),
                space.len()
            )));
        }
        Ok(RandomVariable { space, values })
    }

    /// Builds a variable from float data, converting exactly into the backend.
    pub fn from_f64s(space: Space<T>, values: &[f64]) -> Result<Self> {
        let values = values.iter().map(|&v| T::from_f64_exact(v)).collect::<Result<Vec<_>>>()?;
        Self::new(space, values)
    }

    pub fn constant(space: Space<T>, c: T) -> Self {
        let values = vec![c; space.len()];
        RandomVariable { space, values }
    }

    pub fn zero(space: Space<T>) -> Self {
        Self::constant(space, T::zero())
    }

    /// `1_A` for the given atoms.
    pub fn indicator(space: Space<T>, atoms: &[usize]) -> Self {
        let mut values = vec![T::zero(); space.len()];
        for &a in atoms {
            values[a] = T::one();
        }
        RandomVariable { space, values }
    }

    pub fn space(&self) -> &Space<T> {
        &self.space
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, atom: usize) -> &T {
        &self.values[atom]
    }

    pub fn same_space_as(&self, other: &Self) -> bool {
        same_space(&self.space, &other.space)
    }

    pub fn expectation(&self) -> T {
        let terms: Vec<T> = self
            .values
            .iter()
            .zip(self.space.probs())
            .map(|(x, p)| x.clone() * p.clone())
            .collect();
        T::sum(&terms)
    }

    /// `E[XY]`.
    pub fn inner(&self, other: &Self) -> T {
        self.assert_same_space(other);
        let terms: Vec<T> = self
            .values
            .iter()
            .zip(&other.values)
            .zip(self.space.probs())
            .map(|((x, y), p)| x.clone() * y.clone() * p.clone())
            .collect();
        T::sum(&terms)
    }

    pub fn map(&self, f: impl Fn(&T) -> T) -> Self {
        RandomVariable { space: self.space.clone(), values: self.values.iter().map(f).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(&T, &T) -> T) -> Self {
        self.assert_same_space(other);
        let values = self.values.iter().zip(&other.values).map(|(a, b)| f(a, b)).collect();
        RandomVariable { space: self.space.clone(), values }
    }

    /// `X + c`.
    pub fn shift(&self, c: &T) -> Self {
        self.map(|x| x.clone() + c.clone())
    }

    pub fn scale(&self, c: &T) -> Self {
        self.map(|x| x.clone() * c.clone())
    }

    /// `X^+ = max(X, 0)`.
    pub fn pos_part(&self) -> Self {
        self.map(|x| if *x > T::zero() { x.clone() } else { T::zero() })
    }

    /// `X^- = max(-X, 0)`.
    pub fn neg_part(&self) -> Self {
        self.map(|x| if *x < T::zero() { -x.clone() } else { T::zero() })
    }

    pub fn abs(&self) -> Self {
        self.map(|x| x.abs())
    }

    pub fn max_value(&self) -> T {
        self.values.iter().cloned().reduce(T::max_of).expect("nonempty space")
    }

    pub fn min_value(&self) -> T {
        self.values.iter().cloned().reduce(T::min_of).expect("nonempty space")
    }

    /// `max |X|`.
    pub fn sup_norm(&self) -> T {
        self.values.iter().map(|x| x.abs()).reduce(T::max_of).expect("nonempty space")
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|x| *x >= T::zero())
    }

    /// `Y(i) = X(perm[i])`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.len()];
        if perm.len() != self.len() || !perm.iter().all(|&j| j < seen.len() && !std::mem::replace(&mut seen[j], true)) {
            return Err(Error::invalid("not a permutation of the atoms"));
        }
        let values = perm.iter().map(|&j| self.values[j].clone()).collect();
        Ok(RandomVariable { space: self.space.clone(), values })
    }

    /// Same variable under another backend.
    pub fn convert<U: Scalar>(&self, space: Space<U>) -> Result<RandomVariable<U>> {
        let values = self.values.iter().map(convert::<T, U>).collect::<Result<Vec<_>>>()?;
        RandomVariable::new(space, values)
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.values.iter().map(|x| x.to_f64_lossy()).collect()
    }

    fn assert_same_space(&self, other: &Self) {
        assert!(self.same_space_as(other), "random variables live on different spaces");
    }
}

impl<T: Scalar> Add for &RandomVariable<T> {
    type Output = RandomVariable<T>;
    fn add(self, rhs: Self) -> RandomVariable<T> {
        self.zip_map(rhs, |a, b| a.clone() + b.clone())
    }
}

impl<T: Scalar> Sub for &RandomVariable<T> {
    type Output = RandomVariable<T>;
    fn sub(self, rhs: Self) -> RandomVariable<T> {
        self.zip_map(rhs, |a, b| a.clone() - b.clone())
    }
}

impl<T: Scalar> Mul for &RandomVariable<T> {
    type Output = RandomVariable<T>;
    fn mul(self, rhs: Self) -> RandomVariable<T> {
        self.zip_map(rhs, |a, b| a.clone() * b.clone())
    }
}

impl<T: Scalar> Neg for &RandomVariable<T> {
    type Output = RandomVariable<T>;
    fn neg(self) -> RandomVariable<T> {
        self.map(|x| -x.clone())
    }
}

impl<T: Scalar> Add for RandomVariable<T> {
    type Output = RandomVariable<T>;
    fn add(self, rhs: Self) -> RandomVariable<T> {
        &self + &rhs
    }
}

impl<T: Scalar> Sub for RandomVariable<T> {
    type Output = RandomVariable<T>;
    fn sub(self, rhs: Self) -> RandomVariable<T> {
        &self - &rhs
    }
}

impl<T: Scalar> Neg for RandomVariable<T> {
    type Output = RandomVariable<T>;
    fn neg(self) -> RandomVariable<T> {
        -&self
    }
}

/// `X^+`.
pub fn pos_part<T: Scalar>(x: &RandomVariable<T>) -> RandomVariable<T> {
    x.pos_part()
}

/// `X^-`.
pub fn neg_part<T: Scalar>(x: &RandomVariable<T>) -> RandomVariable<T> {
    x.neg_part()
}

/// Sum of several variables on one space.
pub fn sum_all<T: Scalar>(items: &[RandomVariable<T>]) -> Result<RandomVariable<T>> {
    let first = items.first().ok_or_else(|| Error::invalid("empty sum"))?;
    let mut acc = vec![T::zero(); first.len()];
    for x in items {
        if !x.same_space_as(first) {
            return Err(Error::invalid("random variables live on different spaces"));
        }
        for (a, v) in acc.iter_mut().zip(x.values()) {
            *a = a.clone() + v.clone();
        }
    }
    RandomVariable::new(first.space().clone(), acc)
}

impl<T: Scalar> RandomVariable<T> {
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(Zero::is_zero)
    }
}
