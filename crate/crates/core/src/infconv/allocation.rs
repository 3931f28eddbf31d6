use num_traits::Zero;
use serde::ser::{Serialize, SerializeStruct, Serializer};

use crate::error::{Error, Result};
use crate::prob::RandomVariable;
use crate::scalar::{rational_from_f64, Rational, Scalar};

/// Piecewise-linear split `x = sum_i f_i(x)` given by knot values.
///
/// Values are kept as rationals so that the sum-to-identity constraint holds
/// exactly at every knot.
#[derive(Clone, Debug, PartialEq)]
pub struct Allocation {
    knots: Vec<Rational>,
    /// `pieces[i][j] = f_i(knots[j])`.
    pieces: Vec<Vec<Rational>>,
}

impl Allocation {
    /// Unvalidated constructor; see [`super::certify_exactness`] for the checks.
    pub fn from_parts(knots: Vec<Rational>, pieces: Vec<Vec<Rational>>) -> Result<Self> {
        if pieces.iter().any(|p| p.len() != knots.len()) {
            return Err(Error::invalid("every piece needs one value per knot"));
        }
        Ok(Allocation { knots, pieces })
    }

    /// `f_i = w_i * id` with `w` summing to one.
    pub fn proportional(knots: Vec<Rational>, weights: &[Rational]) -> Result<Self> {
        let total = weights.iter().fold(Rational::zero(), |a, w| a + w);
        if total != Rational::from_usize_exact(1) || weights.iter().any(|w| *w < Rational::zero()) {
            return Err(Error::invalid("proportional weights must be nonnegative and sum to one"));
        }
        let pieces = weights.iter().map(|w| knots.iter().map(|k| k * w).collect()).collect();
        Ok(Allocation { knots, pieces })
    }

    pub fn identity(knots: Vec<Rational>) -> Self {
        Allocation { pieces: vec![knots.clone()], knots }
    }

    pub fn knots(&self) -> &[Rational] {
        &self.knots
    }

    pub fn pieces(&self) -> &[Vec<Rational>] {
        &self.pieces
    }

    pub fn agents(&self) -> usize {
        self.pieces.len()
    }

    pub fn knots_f64(&self) -> Vec<f64> {
        self.knots.iter().map(|k| k.to_f64_lossy()).collect()
    }

    pub fn piece_f64(&self, i: usize) -> Vec<f64> {
        self.pieces[i].iter().map(|v| v.to_f64_lossy()).collect()
    }

    /// Slope of piece `i` on every knot interval.
    pub fn slopes(&self, i: usize) -> Vec<f64> {
        self.knots
            .windows(2)
            .zip(self.pieces[i].windows(2))
            .map(|(k, v)| ((&v[1] - &v[0]) / (&k[1] - &k[0])).to_f64_lossy())
            .collect()
    }

    /// `f_i(X)`; every value of `X` must be a knot.
    pub fn apply(&self, i: usize, x: &RandomVariable) -> Result<RandomVariable> {
        let values = x
            .values()
            .iter()
            .map(|v| {
                let r = rational_from_f64(*v)?;
                let j = self
                    .knots
                    .binary_search(&r)
                    .map_err(|_| Error::invalid(format!("value {v} is not a knot of the allocation")))?;
                Ok(self.pieces[i][j].to_f64_lossy())
            })
            .collect::<Result<Vec<f64>>>()?;
        RandomVariable::new(x.space().clone(), values)
    }
}

impl Serialize for Allocation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pieces: Vec<Vec<f64>> = (0..self.agents()).map(|i| self.piece_f64(i)).collect();
        let mut st = s.serialize_struct("Allocation", 2)?;
        st.serialize_field("knots", &self.knots_f64())?;
        st.serialize_field("pieces", &pieces)?;
        st.end()
    }
}
