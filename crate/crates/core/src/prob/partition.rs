use serde::Serialize;

use super::distribution::{cmp_scalar, distribution};
use super::variable::RandomVariable;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A finite measurable partition: disjoint nonempty blocks of atom indices
/// covering the whole space. Blocks are kept with sorted atoms.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
    #[serde(skip)]
    block_of: Vec<usize>,
}

impl Partition {
    pub fn new(atoms: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut block_of = vec![usize::MAX; atoms];
        let mut blocks = blocks;
        for (b, block) in blocks.iter_mut().enumerate() {
            if block.is_empty() {
                return Err(Error::invalid(format!("block {b} is empty")));
            }
            block.sort_unstable();
            for &a in block.iter() {
                if a >= atoms {
                    return Err(Error::invalid(format!("atom {a} out of range")));
                }
                if block_of[a] != usize::MAX {
                    return Err(Error::invalid(format!("atom {a} appears in two blocks")));
                }
                block_of[a] = b;
            }
        }
        if let Some(a) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(Error::invalid(format!("atom {a} is not covered")));
        }
        Ok(Partition { blocks, block_of })
    }

    /// One block per atom label; labels need not be contiguous.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut index: std::collections::BTreeMap<usize, usize> = Default::default();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for (a, l) in labels.iter().enumerate() {
            let b = *index.entry(*l).or_insert_with(|| {
                blocks.push(Vec::new());
                blocks.len() - 1
            });
            blocks[b].push(a);
        }
        Partition::new(labels.len(), blocks).expect("labels always define a partition")
    }

    pub fn trivial(atoms: usize) -> Self {
        Partition::new(atoms, vec![(0..atoms).collect()]).expect("nonempty space")
    }

    pub fn singletons(atoms: usize) -> Self {
        Partition::new(atoms, (0..atoms).map(|a| vec![a]).collect()).expect("nonempty space")
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn atoms(&self) -> usize {
        self.block_of.len()
    }

    pub fn block_of(&self, atom: usize) -> usize {
        self.block_of[atom]
    }

    /// `true` when every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        self.atoms() == coarser.atoms()
            && self.blocks.iter().all(|b| b.iter().all(|&a| coarser.block_of(a) == coarser.block_of(b[0])))
    }
}

/// `E[X | sigma(pi)]`: on each block the mass-weighted mean of `x`.
///
/// Blocks on which `x` is constant reproduce that constant bit-for-bit, so
/// level-set partitions recover `x` exactly in float mode too.
pub fn cond_expect<T: Scalar>(x: &RandomVariable<T>, pi: &Partition) -> Result<RandomVariable<T>> {
    if pi.atoms() != x.len() {
        return Err(Error::invalid(format!(
            "partition covers {} atoms, variable has {}",
            pi.atoms(),
            x.len()
        )));
    }
    let probs = x.space().probs();
    let mut out = vec![T::zero(); x.len()];
    for block in pi.blocks() {
        let first = x.value(block[0]);
        let mean = if block.iter().all(|&a| x.value(a) == first) {
            first.clone()
        } else {
            let weighted: Vec<T> = block.iter().map(|&a| x.value(a).clone() * probs[a].clone()).collect();
            let mass: Vec<T> = block.iter().map(|&a| probs[a].clone()).collect();
            T::sum(&weighted) / T::sum(&mass)
        };
        for &a in block {
            out[a] = mean.clone();
        }
    }
    RandomVariable::new(x.space().clone(), out)
}

/// Partition into at most `k` blocks, each a union of level sets of `x`.
///
/// With at most `k` distinct values the level sets themselves are returned,
/// so `E[X|pi] = X`. Otherwise the range `[min X, max X]` is cut into `k`
/// equal-width cells; the oscillation of `x` on each block is then at most
/// `(max X - min X)/k`, and dyadic `k` produce nested partitions.
pub fn quantile_partition<T: Scalar>(x: &RandomVariable<T>, k: u64) -> Result<Partition> {
    if k == 0 {
        return Err(Error::invalid("quantile_partition needs k >= 1"));
    }
    let law = distribution(x);
    if law.len() as u64 <= k {
        let labels: Vec<usize> = x
            .values()
            .iter()
            .map(|v| law.pairs().binary_search_by(|(u, _)| cmp_scalar(u, v)).expect("value is in support"))
            .collect();
        return Ok(Partition::from_labels(&labels));
    }
    let lo = x.min_value();
    let range = x.max_value() - lo.clone();
    let cells = T::from_u64(k).ok_or_else(|| Error::invalid("cell count too large"))?;
    let labels: Vec<usize> = x
        .values()
        .iter()
        .map(|v| {
            let cell = ((v.clone() - lo.clone()) * cells.clone() / range.clone()).floor_u64();
            cell.min(k - 1) as usize
        })
        .collect();
    Ok(Partition::from_labels(&labels))
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
    fn partition_validation() {
        assert!(Partition::new(3, vec![vec![0], vec![1, 2]]).is_ok());
        assert!(Partition::new(3, vec![vec![0], vec![]]).is_err());
        assert!(Partition::new(3, vec![vec![0, 1], vec![1, 2]]).is_err());
        assert!(Partition::new(3, vec![vec![0, 1]]).is_err());
        assert!(Partition::new(3, vec![vec![0, 1, 5]]).is_err());
    }

    #[test]
    fn block_means() {
        let s = FiniteSpace::uniform(4).unwrap();
        let x = RandomVariable::new(s, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let pi = Partition::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        assert_eq!(cond_expect(&x, &pi).unwrap().values(), &[1.5, 1.5, 3.5, 3.5]);
        assert_eq!(cond_expect(&x, &Partition::trivial(4)).unwrap().values(), &[2.5; 4]);
        assert_eq!(cond_expect(&x, &Partition::singletons(4)).unwrap(), x);
    }

    #[test]
    fn cond_expect_rejects_foreign_partition() {
        assert!(cond_expect(&fixture(), &Partition::trivial(3)).is_err());
    }

    #[test]
    fn tower_property_exact() {
        let s = FiniteSpace::new(vec![ratio(1, 7), ratio(2, 7), ratio(3, 7), ratio(1, 7)]).unwrap();
        let x = RandomVariable::<Rational>::from_f64s(s, &[0.3, -1.7, 2.25, 9.0]).unwrap();
        let pi = Partition::new(4, vec![vec![0, 2], vec![1, 3]]).unwrap();
        let y = cond_expect(&x, &pi).unwrap();
        assert_eq!(y.expectation(), x.expectation());
        assert_eq!(cond_expect(&y, &pi).unwrap(), y);
    }

    #[test]
    fn quantile_partition_examples() {
        let x = fixture();
        assert_eq!(quantile_partition(&x, 1).unwrap().len(), 1);
        let pi = quantile_partition(&x, 2).unwrap();
        assert_eq!(pi.blocks(), &[vec![0, 1], vec![2, 3]]);
        assert_eq!(cond_expect(&x, &pi).unwrap().values(), &[-3.0, -3.0, 2.0, 2.0]);
        let exact = quantile_partition(&x, 4).unwrap();
        assert_eq!(cond_expect(&x, &exact).unwrap(), x);
        assert!(quantile_partition(&x, 0).is_err());
    }

    #[test]
    fn ties_are_never_split() {
        let s = FiniteSpace::uniform(6).unwrap();
        let x = RandomVariable::new(s, vec![0.0, 0.0, 0.0, 1.0, 5.0, 10.0]).unwrap();
        let pi = quantile_partition(&x, 3).unwrap();
        assert!(pi.blocks().iter().any(|b| b.starts_with(&[0, 1, 2])));
        for k in 1..6u64 {
            let coarse = quantile_partition(&x, k).unwrap();
            let fine = quantile_partition(&x, 2 * k).unwrap();
            assert!(coarse.len() as u64 <= k);
            if k.is_power_of_two() {
                assert!(fine.refines(&coarse));
            }
        }
    }
}
