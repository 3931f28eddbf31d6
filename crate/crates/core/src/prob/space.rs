use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Shared handle to a finite probability space.
pub type Space<T = f64> = Arc<FiniteSpace<T>>;

/// Finitely many atoms, each carrying strictly positive mass.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteSpace<T: Scalar = f64> {
    probs: Vec<T>,
    uniform: bool,
}

impl<T: Scalar> FiniteSpace<T> {
    /// Builds a space from explicit atom weights.
    ///
    /// Weights must be strictly positive and sum to one (exactly for
    /// rational backends, within `1e-12` for floats).
    pub fn new(probs: Vec<T>) -> Result<Space<T>> {
        if probs.is_empty() {
            return Err(Error::invalid("a probability space needs at least one atom"));
        }
        if let Some(i) = probs.iter().position(|p| !(*p > T::zero())) {
            return Err(Error::invalid(format!("atom {i} has non-positive weight {}", probs[i])));
        }
        let total = T::sum(&probs);
        if !T::approx_eq(&total, &T::one(), 1e-12) {
            return Err(Error::invalid(format!("weights sum to {total}, not 1")));
        }
        let uniform = probs.iter().all(|p| *p == probs[0]);
        Ok(Arc::new(FiniteSpace { probs, uniform }))
    }

    /// `n` atoms of mass `1/n` each.
    pub fn uniform(n: usize) -> Result<Space<T>> {
        if n == 0 {
            return Err(Error::invalid("uniform space needs n >= 1"));
        }
        let p = T::one() / T::from_usize_exact(n);
        Ok(Arc::new(FiniteSpace { probs: vec![p; n], uniform: true }))
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, atom: usize) -> &T {
        &self.probs[atom]
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// Probability of a set of atoms.
    pub fn mass(&self, atoms: &[usize]) -> T {
        T::sum(atoms.iter().map(|&i| &self.probs[i]))
    }

    /// Groups of atoms sharing the same weight; permutations inside a
    /// group preserve every law.
    pub fn equal_weight_classes(&self) -> Vec<Vec<usize>> {
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for i in 0..self.len() {
            match classes.iter_mut().find(|c| self.probs[c[0]] == self.probs[i]) {
                Some(c) => c.push(i),
                None => classes.push(vec![i]),
            }
        }
        classes
    }
}

pub(crate) fn same_space<T: Scalar>(a: &Space<T>, b: &Space<T>) -> bool {
    Arc::ptr_eq(a, b) || a.probs == b.probs
}
