use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::RiskMeasure;
use crate::error::Result;
use crate::prob::{FiniteSpace, RandomVariable, Space};

const TOL: f64 = 1e-9;

/// Outcome of the randomized test attached to one declared flag.
#[derive(Clone, Debug, Serialize)]
pub struct FlagCheck {
    pub flag: String,
    pub trials: usize,
    pub violations: usize,
    pub max_violation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FlagReport {
    pub measure: String,
    pub checks: Vec<FlagCheck>,
}

impl FlagReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.violations == 0)
    }

    pub fn check(&self, flag: &str) -> Option<&FlagCheck> {
        self.checks.iter().find(|c| c.flag == flag)
    }
}

fn gap(lhs: f64, rhs: f64) -> f64 {
    if lhs == rhs {
        0.0
    } else {
        (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0)
    }
}

/// Excess of `lhs` over `rhs`, relative to their size.
fn excess(lhs: f64, rhs: f64) -> f64 {
    if lhs <= rhs {
        0.0
    } else {
        (lhs - rhs) / lhs.abs().max(rhs.abs()).max(1.0)
    }
}

struct Tally {
    check: FlagCheck,
}

impl Tally {
    fn new(flag: &str) -> Self {
        Tally { check: FlagCheck { flag: flag.into(), trials: 0, violations: 0, max_violation: 0.0 } }
    }

    fn record(&mut self, violation: f64) {
        self.check.trials += 1;
        let v = if violation.is_nan() { f64::INFINITY } else { violation };
        if v > TOL {
            self.check.violations += 1;
        }
        self.check.max_violation = self.check.max_violation.max(v);
    }
}

fn sample(rng: &mut ChaCha8Rng, space: &Space) -> RandomVariable {
    let values = (0..space.len()).map(|_| (rng.gen_range(-5.0f64..5.0) * 64.0).round() / 64.0).collect();
    RandomVariable::new(space.clone(), values).expect("matching length")
}

/// Randomized falsification of every flag `rho` declares. Measures tied to
/// a space are tested there; others on random uniform spaces of 2 to 8 atoms.
/// Rearrangements only permute atoms of equal probability.
pub fn check_flags(rho: &dyn RiskMeasure, trials: usize, seed: u64) -> Result<FlagReport> {
    let flags = rho.flags();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut law = Tally::new("law_invariant");
    let mut cash = Tally::new("cash_additive");
    let mut s_add = Tally::new("s_additive");
    let mut convex = Tally::new("convex");
    let mut monotone = Tally::new("monotone");
    let mut surplus = Tally::new("surplus_invariant");
    let mut surplus_pos = Tally::new("surplus_invariant_subject_to_positivity");
    for _ in 0..trials {
        let space = match rho.space() {
            Some(s) => s.clone(),
            None => FiniteSpace::uniform(rng.gen_range(2..=8))?,
        };
        let x = sample(&mut rng, &space);
        let y = sample(&mut rng, &space);
        let rx = rho.eval(&x)?;
        let m = (rng.gen_range(-3.0f64..3.0) * 64.0).round() / 64.0;
        if flags.law_invariant {
            let mut perm: Vec<usize> = (0..space.len()).collect();
            for class in space.equal_weight_classes() {
                let mut shuffled = class.clone();
                shuffled.shuffle(&mut rng);
                for (a, b) in class.iter().zip(&shuffled) {
                    perm[*a] = *b;
                }
            }
            law.record(gap(rx, rho.eval(&x.permuted(&perm)?)?));
        }
        if flags.cash_additive {
            cash.record(gap(rho.eval(&x.shift(&m))?, rx - m));
        }
        if flags.s_additive {
            if let Some(s) = rho.numeraire() {
                let moved = &x + &s.s().scale(&m);
                s_add.record(gap(rho.eval(&moved)?, rx - m));
            }
        }
        if flags.convex {
            let lam = rng.gen_range(0.0..1.0);
            let mix = x.zip_map(&y, |a, b| lam * a + (1.0 - lam) * b);
            let rhs = lam * rx + (1.0 - lam) * rho.eval(&y)?;
            convex.record(excess(rho.eval(&mix)?, rhs));
        }
        if flags.monotone {
            let bumps: Vec<f64> = (0..x.len()).map(|_| (rng.gen_range(0.0f64..2.0) * 64.0).round() / 64.0).collect();
            let up = RandomVariable::new(space.clone(), x.values().iter().zip(&bumps).map(|(v, b)| v + b).collect())?;
            monotone.record(excess(rho.eval(&up)?, rx));
        }
        if flags.surplus_invariant {
            surplus.record(gap(rx, rho.eval(&-x.neg_part())?));
        }
        if flags.surplus_invariant_subject_to_positivity && rx > 0.0 {
            surplus_pos.record(gap(rx, rho.eval(&-x.neg_part())?));
        }
    }
    let declared = [
        (flags.law_invariant, law),
        (flags.cash_additive, cash),
        (flags.s_additive, s_add),
        (flags.convex, convex),
        (flags.monotone, monotone),
        (flags.surplus_invariant, surplus),
        (flags.surplus_invariant_subject_to_positivity, surplus_pos),
    ];
    Ok(FlagReport {
        measure: rho.name(),
        checks: declared.into_iter().filter(|(on, _)| *on).map(|(_, t)| t.check).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::risk::{
        from_acceptance, surplus_transform, AcceptanceSet, Budget, Entropic, ExpectedShortfall, Flags, NegExpectation,
        Numeraire, ValueAtRisk,
    };

    struct FirstCoordinate;

    impl RiskMeasure for FirstCoordinate {
        fn name(&self) -> String {
            "first_coordinate".into()
        }
        fn flags(&self) -> Flags {
            Flags::standard()
        }
        fn eval(&self, x: &RandomVariable) -> Result<f64> {
            Ok(-x.values()[0])
        }
    }

    #[test]
    fn stock_measures_pass() {
        let measures: Vec<Box<dyn RiskMeasure>> = vec![
            Box::new(ExpectedShortfall::new(0.3).unwrap()),
            Box::new(ExpectedShortfall::new(1.0).unwrap()),
            Box::new(Entropic::new(1.5).unwrap()),
            Box::new(NegExpectation),
            Box::new(ValueAtRisk::new(0.25).unwrap()),
            Box::new(surplus_transform(ExpectedShortfall::new(0.5).unwrap())),
        ];
        for m in &measures {
            let r = check_flags(m.as_ref(), 300, 11).unwrap();
            assert!(r.passed(), "{r:?}");
        }
    }

    #[test]
    fn coordinate_functional_fails_law_invariance() {
        let r = check_flags(&FirstCoordinate, 200, 3).unwrap();
        assert!(r.check("law_invariant").unwrap().violations > 0);
        assert_eq!(r.check("cash_additive").unwrap().violations, 0);
    }

    #[test]
    fn acceptance_measure_flags_hold() {
        let s = FiniteSpace::new(vec![0.125, 0.25, 0.125, 0.5]).unwrap();
        let w = RandomVariable::new(s.clone(), vec![1.0, 0.5, 2.0, 1.0]).unwrap();
        let num = Numeraire::new(RandomVariable::new(s.clone(), vec![1.0, 1.5, 0.75, 2.0]).unwrap()).unwrap();
        let rho = from_acceptance(AcceptanceSet::budget(Budget::new(w, 0.4).unwrap()), num).unwrap();
        let r = check_flags(&rho, 300, 5).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.check("s_additive").unwrap().trials == 300);
        assert!(r.check("surplus_invariant_subject_to_positivity").unwrap().trials > 0);
    }
}
