use num_integer::Integer;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{geometric_ladder, harmonic_ladder, tail_min};
use crate::error::{Error, Result};
use crate::norms::{associate_norm, dyadic_grid, norm, property_star_probe, RiNorm, Verdict};
use crate::prob::{FiniteSpace, RandomVariable};
use crate::scalar::{Rational, Scalar};

/// Largest `lcm(1..n_max)` used as the atom count before falling back to 1024 atoms.
pub const LCM_CAP: u64 = 100_000;

#[derive(Clone, Debug, Serialize)]
pub struct Bigexamp2Row {
    pub n: usize,
    /// Achieved `P(A_n)`.
    pub prob: f64,
    pub expectation: f64,
    pub expectation_exact: String,
    pub l1_norm: f64,
    pub representable: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Bigexamp2Report {
    pub atoms: usize,
    pub n_max: usize,
    pub representable: bool,
    pub rows: Vec<Bigexamp2Row>,
    /// Tail minimum of `E[X_n]`.
    pub liminf: f64,
    pub limit_value: f64,
    pub gap: f64,
    pub gap_exact: String,
    /// Largest possible `|gap - 1|` from rounding `P(A_n)` to multiples of `1/atoms`.
    pub rounding_bound: f64,
}

/// `X_n = -n 1_{A_n}` with decreasing `A_n`, `P(A_n) = 1/n`, on a uniform
/// space. `E[X_n] = -1` for every `n` while `X_n -> 0`, so `E` is not lower
/// semicontinuous along this norm-bounded sequence in `L^1`.
///
/// The space has `lcm(1..n_max)` atoms when that is at most [`LCM_CAP`],
/// 1024 atoms otherwise, or `atoms` when given. When `1/n` is not a
/// multiple of `1/atoms` the nearest one is used.
pub fn gallery_bigexamp2(n_max: usize, atoms: Option<usize>) -> Result<Bigexamp2Report> {
    if n_max == 0 {
        return Err(Error::invalid("n_max must be positive"));
    }
    let size = match atoms {
        Some(a) => a,
        None => {
            let mut l: u64 = 1;
            for n in 1..=n_max as u64 {
                l = l.lcm(&n);
                if l > LCM_CAP {
                    break;
                }
            }
            if l > LCM_CAP { 1024 } else { l as usize }
        }
    };
    let space = FiniteSpace::<Rational>::uniform(size)?;
    let mut rows = Vec::with_capacity(n_max);
    let mut exact = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let k = ((size as f64 / n as f64).round() as usize).clamp(1, size);
        let atoms: Vec<usize> = (0..k).collect();
        let x = RandomVariable::indicator(space.clone(), &atoms).scale(&-Rational::from_usize_exact(n));
        let e = x.expectation();
        let l1 = x.abs().expectation();
        rows.push(Bigexamp2Row {
            n,
            prob: k as f64 / size as f64,
            expectation: e.to_f64_lossy(),
            expectation_exact: e.to_string(),
            l1_norm: l1.to_f64_lossy(),
            representable: size % n == 0,
        });
        exact.push(e);
    }
    let start = exact.len() / 2;
    let liminf = exact[start..].iter().cloned().fold(exact[start].clone(), |a, b| if b < a { b } else { a });
    let gap = Rational::zero() - liminf.clone();
    Ok(Bigexamp2Report {
        atoms: size,
        n_max,
        representable: rows.iter().all(|r| r.representable),
        rows,
        liminf: liminf.to_f64_lossy(),
        limit_value: 0.0,
        gap: gap.to_f64_lossy(),
        gap_exact: gap.to_string(),
        rounding_bound: n_max as f64 / (2 * size) as f64,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Bigexamp1Level {
    pub k: u32,
    pub atoms: usize,
    pub z_l2: f64,
    pub z_inf: f64,
    /// `E[X_n Z_k]` for `n = 0..=k`, with `‖X_n‖_2 = 1` supported on the first `2^(k-n)` atoms.
    pub pairings: Vec<f64>,
    /// `‖X_n 1_{|X_n| < 1/m}‖_2 ‖Z‖_2 + M ‖Z 1_{|X_n| >= 1/m}‖_2` with `m = n + 1`, `M = 1`.
    pub bounds: Vec<f64>,
    /// `E[2^-n Z_k]`, a dominated null sequence.
    pub dominated: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Bigexamp1Report {
    pub levels: Vec<Bigexamp1Level>,
    /// Every pairing lies within its bound.
    pub bounds_hold: bool,
    /// `‖Z_k‖_inf` for consecutive levels grows without a uniform bound.
    pub z_inf_unbounded: bool,
}

/// `rho(X) = E[XZ]` with `Z(u) = u^(-1/4)`, which is in `L^2` but not in
/// `L^inf`, sampled at the right endpoints of `2^k` cells. Along a ladder of
/// levels, `‖Z_k‖_2` stays below `sqrt(2)` while `‖Z_k‖_inf = 2^(k/4)`, and at
/// each level pairings with unit-norm spikes of shrinking support decay.
pub fn gallery_bigexamp1(levels: &[u32]) -> Result<Bigexamp1Report> {
    if levels.is_empty() || levels.iter().any(|k| *k > 24) {
        return Err(Error::invalid("levels must be nonempty and at most 24"));
    }
    let mut out = Vec::with_capacity(levels.len());
    let mut bounds_hold = true;
    for &k in levels {
        let atoms = 1usize << k;
        let space = FiniteSpace::uniform(atoms)?;
        let z = RandomVariable::new(space.clone(), (1..=atoms).map(|i| (i as f64 / atoms as f64).powf(-0.25)).collect())?;
        let z_l2 = norm(&RiNorm::Lp(2.0), &z)?;
        let (mut pairings, mut bounds, mut dominated) = (Vec::new(), Vec::new(), Vec::new());
        for n in 0..=k {
            let support = atoms >> n;
            let height = (atoms as f64 / support as f64).sqrt();
            let idx: Vec<usize> = (0..support).collect();
            let x = RandomVariable::indicator(space.clone(), &idx).scale(&height);
            let pairing = x.inner(&z);
            let m = (n + 1) as f64;
            let small = x.map(|v| if v.abs() < 1.0 / m { *v } else { 0.0 });
            let big_z = z.zip_map(&x, |zv, xv| if xv.abs() >= 1.0 / m { *zv } else { 0.0 });
            let bound = norm(&RiNorm::Lp(2.0), &small)? * z_l2 + norm(&RiNorm::Lp(2.0), &big_z)?;
            bounds_hold &= pairing.abs() <= bound * (1.0 + 1e-12);
            pairings.push(pairing);
            bounds.push(bound);
            dominated.push(z.expectation() * 0.5f64.powi(n as i32));
        }
        out.push(Bigexamp1Level { k, atoms, z_l2, z_inf: z.sup_norm(), pairings, bounds, dominated });
    }
    let z_inf_unbounded = out.windows(2).all(|w| w[1].k <= w[0].k || w[1].z_inf > w[0].z_inf);
    Ok(Bigexamp1Report { levels: out, bounds_hold, z_inf_unbounded })
}

#[derive(Clone, Debug, Serialize)]
pub struct PstarReport {
    pub norm: String,
    pub verdict: Verdict,
    pub trials: usize,
    pub horizon: usize,
    /// Largest `|E[X_n]|` over the tail half, across all trials.
    pub max_tail_abs_mean: f64,
    /// Checked terms violating `|E[X_n]| <= (1/n) P(|X_n| < 1/n) + ‖X_n‖ ‖1_{|X_n| >= 1/n}‖_*`.
    pub bound_violations: usize,
    /// `-liminf E[-X_n]` for `X_n = n 1_{A_n}`, `P(A_n) = 1/n`, when the verdict fails.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample_gap: Option<f64>,
}

/// Checks `E[X_n] -> 0` for norm-bounded null sequences
/// `X_n = c 1_{A_n} / ‖1_{A_n}‖ + 2^-n V` with `P(A_n) = 2^-n`. When the
/// norm fails the small-set property, the harmonic spike family is reported
/// as a counterexample.
pub fn pstar_consequence_probe(n: &RiNorm, trials: usize, horizon: usize, seed: u64) -> Result<PstarReport> {
    if horizon < 2 {
        return Err(Error::invalid("horizon must be at least 2"));
    }
    let verdict = property_star_probe(n, &dyadic_grid(10), 1 << 10)?.verdict;
    let (space, _) = geometric_ladder(4, horizon, 0.5)?;
    let len = space.len();
    let mut max_tail = 0.0f64;
    let mut bound_violations = 0;
    for t in 0..trials as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ t.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let c = rng.gen_range(-1.0..=1.0);
        let v = RandomVariable::new(space.clone(), (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
        let mut means = Vec::with_capacity(horizon);
        for k in 1..=horizon {
            let ind = RandomVariable::indicator(space.clone(), &(4 + k - 1..len).collect::<Vec<_>>());
            let x = &ind.scale(&(c / norm(n, &ind)?)) + &v.scale(&0.5f64.powi(k as i32));
            let mean = x.expectation();
            if k == horizon || k == horizon / 2 {
                let cut = 1.0 / k as f64;
                let small_mass: f64 = x.values().iter().zip(space.probs()).filter(|(v, _)| v.abs() < cut).map(|(_, p)| p).sum();
                let big = x.map(|v| if v.abs() >= cut { 1.0 } else { 0.0 });
                let bound = cut * small_mass + norm(n, &x)? * associate_norm(n, &big)?;
                if mean.abs() > bound * (1.0 + 1e-9) + 1e-12 {
                    bound_violations += 1;
                }
            }
            means.push(mean.abs());
        }
        max_tail = max_tail.max(means[horizon / 2..].iter().cloned().fold(0.0, f64::max));
    }
    let counterexample_gap = match verdict {
        Verdict::Holds => None,
        Verdict::Fails => {
            let (h, _) = harmonic_ladder(horizon)?;
            let means: Vec<f64> = (1..=horizon)
                .map(|k| -RandomVariable::indicator(h.clone(), &(k - 1..horizon).collect::<Vec<_>>()).scale(&(k as f64)).expectation())
                .collect();
            Some(-tail_min(&means))
        }
    };
    Ok(PstarReport {
        norm: n.label(),
        verdict,
        trials,
        horizon,
        max_tail_abs_mean: max_tail,
        bound_violations,
        counterexample_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    #[test]
    fn bigexamp2_exact_on_840_atoms() {
        let r = gallery_bigexamp2(8, None).unwrap();
        assert_eq!(r.atoms, 840);
        assert!(r.representable);
        assert!(r.rows.iter().all(|row| row.expectation_exact == ratio(-1, 1).to_string() && row.l1_norm == 1.0));
        assert_eq!(r.gap, 1.0);
        assert_eq!(r.gap_exact, "1");
    }

    #[test]
    fn bigexamp2_small_and_fallback() {
        let one = gallery_bigexamp2(1, None).unwrap();
        assert_eq!(one.atoms, 1);
        assert_eq!(one.rows[0].expectation, -1.0);
        assert_eq!(one.gap, 1.0);
        let big = gallery_bigexamp2(20, None).unwrap();
        assert_eq!(big.atoms, 1024);
        assert!(!big.representable);
        assert!((big.gap - 1.0).abs() <= big.rounding_bound);
        let d = gallery_bigexamp2(8, Some(1024)).unwrap();
        assert!((d.gap - 1.0).abs() <= d.rounding_bound);
    }

    #[test]
    fn bigexamp1_ladder() {
        let r = gallery_bigexamp1(&[2, 4, 8, 12]).unwrap();
        assert!(r.bounds_hold && r.z_inf_unbounded);
        for level in &r.levels {
            assert!((level.z_inf - 2f64.powf(level.k as f64 / 4.0)).abs() < 1e-9);
            assert!(level.z_l2 <= 2f64.sqrt());
            assert!(level.pairings.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        }
        let top = r.levels.last().unwrap();
        assert!(top.pairings.last().unwrap() < &(0.2 * top.pairings[0]));
    }

    #[test]
    fn pstar_probe_dichotomy() {
        let l2 = pstar_consequence_probe(&RiNorm::Lp(2.0), 50, 200, 1).unwrap();
        assert_eq!(l2.verdict, Verdict::Holds);
        assert!(l2.max_tail_abs_mean < 1e-3);
        assert_eq!(l2.bound_violations, 0);
        let l1 = pstar_consequence_probe(&RiNorm::Lp(1.0), 10, 50, 1).unwrap();
        assert_eq!(l1.verdict, Verdict::Fails);
        assert!((l1.counterexample_gap.unwrap() - 1.0).abs() < 1e-12);
    }
}
