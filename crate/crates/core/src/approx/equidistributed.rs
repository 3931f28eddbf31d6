use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob::{cond_expect, Partition, RandomVariable};
use crate::scalar::Scalar;

pub const DEFAULT_LCM_CAP: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FamilyMode {
    /// Member `j` shifts every block cyclically by `j`; the count is the lcm of block sizes.
    Cyclic,
    /// Member `j` shuffles every block with a generator seeded by `(seed, j)`.
    Shuffled { seed: u64 },
}

/// Rearrangements `X_1, ..., X_N` of `X`, each equal in law to `X`, whose
/// average is (close to) `E[X|pi]`. Members are built on demand.
#[derive(Clone, Debug)]
pub struct EquidistributedFamily<T: Scalar = f64> {
    x: RandomVariable<T>,
    partition: Partition,
    count: u64,
    mode: FamilyMode,
}

impl<T: Scalar> EquidistributedFamily<T> {
    pub fn len(&self) -> u64 {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn mode(&self) -> FamilyMode {
        self.mode
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    /// The permutation of atoms used by member `j`: `X_j(w) = X(perm[w])`.
    pub fn permutation(&self, j: u64) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..self.x.len()).collect();
        match self.mode {
            FamilyMode::Cyclic => {
                for block in self.partition.blocks() {
                    let s = block.len() as u64;
                    for (r, &atom) in block.iter().enumerate() {
                        perm[atom] = block[((r as u64 + j) % s) as usize];
                    }
                }
            }
            FamilyMode::Shuffled { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ j.wrapping_mul(0x9e37_79b9_7f4a_7c15));
                for block in self.partition.blocks() {
                    let mut shuffled = block.clone();
                    shuffled.shuffle(&mut rng);
                    for (&atom, &src) in block.iter().zip(&shuffled) {
                        perm[atom] = src;
                    }
                }
            }
        }
        perm
    }

    pub fn member(&self, j: u64) -> RandomVariable<T> {
        self.x.permuted(&self.permutation(j)).expect("block permutation is a bijection")
    }

    pub fn iter(&self) -> impl Iterator<Item = RandomVariable<T>> + '_ {
        (0..self.count).map(|j| self.member(j))
    }

    /// Average of all members, accumulated member by member.
    pub fn mean(&self) -> RandomVariable<T> {
        let mut acc = vec![T::zero(); self.x.len()];
        for j in 0..self.count {
            let perm = self.permutation(j);
            for (a, &src) in acc.iter_mut().zip(&perm) {
                *a = a.clone() + self.x.value(src).clone();
            }
        }
        let n = T::from_f64_exact(self.count as f64).expect("count fits");
        RandomVariable::new(self.x.space().clone(), acc.into_iter().map(|a| a / n.clone()).collect())
            .expect("same length")
    }

    /// `‖mean - E[X|pi]‖_inf`; zero in cyclic mode.
    pub fn epsilon(&self) -> f64 {
        let target = cond_expect(&self.x, &self.partition).expect("partition matches");
        (&self.mean() - &target).sup_norm().to_f64_lossy()
    }
}

/// Builds the cyclic family whose average is exactly `E[X|pi]`. Each block
/// must consist of atoms of equal probability so that rearranging inside it
/// preserves the law. When the lcm of block sizes exceeds `cap`, `cap`
/// seeded shuffles are used instead and [`EquidistributedFamily::epsilon`]
/// reports the achieved accuracy.
pub fn equidistributed_average<T: Scalar>(
    x: &RandomVariable<T>,
    pi: &Partition,
    cap: u64,
    seed: u64,
) -> Result<EquidistributedFamily<T>> {
    if pi.atoms() != x.len() {
        return Err(Error::invalid(format!("partition has {} atoms, variable {}", pi.atoms(), x.len())));
    }
    if cap == 0 {
        return Err(Error::invalid("family size cap must be positive"));
    }
    let space = x.space();
    for block in pi.blocks() {
        let p0 = space.prob(block[0]);
        if block.iter().any(|&a| space.prob(a) != p0) {
            return Err(Error::Precondition(
                "rearrangements inside a block preserve the law only when its atoms have equal probability".into(),
            ));
        }
    }
    let mut lcm: Option<u64> = Some(1);
    for block in pi.blocks() {
        lcm = lcm.and_then(|l| {
            let s = block.len() as u64;
            (l / num_integer::gcd(l, s)).checked_mul(s).filter(|v| *v <= cap)
        });
    }
    let (count, mode) = match lcm {
        Some(n) => (n, FamilyMode::Cyclic),
        None => (cap, FamilyMode::Shuffled { seed }),
    };
    Ok(EquidistributedFamily { x: x.clone(), partition: pi.clone(), count, mode })
}
