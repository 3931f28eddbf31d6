use crate::error::{Error, Result};
use crate::prob::RandomVariable;
use crate::risk::{from_acceptance, sum_acceptance, AcceptanceSet, Numeraire, SplitWitness, Threshold};
use crate::scalar::Scalar;

/// `rho_1 □ rho_2 (X)` for acceptance measures with budget-type `D1`, `D2`,
/// with the decomposition that attains it.
#[derive(Clone, Debug)]
pub struct SurplusConvolution<T: Scalar = f64> {
    pub value: T,
    /// Split of `(X + value S)^-` into `Y in D1` and `W in D2`.
    pub witness: SplitWitness<T>,
    /// `X = x1 + x2` with `x1 = (X + value S)^+ - Y - value S` and `x2 = -W`.
    pub pieces: (RandomVariable<T>, RandomVariable<T>),
    /// `rho_1(x1)` and `rho_2(x2)`.
    pub piece_values: (Threshold<T>, Threshold<T>),
}

/// Computes `inf{m : (X + mS)^- in D1 + D2}` exactly through the merged
/// acceptance set and returns the split at the optimum.
pub fn infconv_surplus<T: Scalar>(
    a1: &AcceptanceSet<T>,
    a2: &AcceptanceSet<T>,
    s: &Numeraire<T>,
    x: &RandomVariable<T>,
) -> Result<SurplusConvolution<T>> {
    let merged = from_acceptance(sum_acceptance(a1, a2)?, s.clone())?;
    let value = match merged.threshold(x)? {
        Threshold::Finite(m) => m,
        Threshold::PlusInfinity => return Err(Error::Evaluation("no shift makes the position acceptable".into())),
    };
    let witness = merged.split_at(x, &value)?;
    let moved = x.zip_map(s.s(), |xi, si| xi.clone() + value.clone() * si.clone());
    let x1 = &(&moved.pos_part() - &witness.y) - &s.s().scale(&value);
    let x2 = -&witness.w;
    let r1 = from_acceptance(a1.clone(), s.clone())?.threshold(&x1)?;
    let r2 = from_acceptance(a2.clone(), s.clone())?.threshold(&x2)?;
    Ok(SurplusConvolution { value, witness, pieces: (x1, x2), piece_values: (r1, r2) })
}
