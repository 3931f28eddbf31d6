//! Inf-convolution `(rho_1 □ ... □ rho_d)(X) = inf{sum rho_i(X_i) : sum X_i = X}`.
//!
//! Law-invariant cash-additive measures are convolved over comonotone
//! allocations `X_i = f_i(X)`; surplus-invariant acceptance measures through
//! the sum of their acceptance sets.

mod allocation;
mod oracle;
mod surplus;

use num_traits::Zero;
use serde::Serialize;

pub use allocation::Allocation;
pub use oracle::{infconv_bruteforce, BruteForce, BRUTEFORCE_MAX_ATOMS, BRUTEFORCE_MAX_GRID, BRUTEFORCE_MAX_POINTS};
pub use surplus::{infconv_surplus, SurplusConvolution};

use crate::error::{Error, Result};
use crate::prob::RandomVariable;
use crate::risk::{evaluate, RiskMeasure};
use crate::scalar::{rational_from_f64, Rational};

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub iterations: usize,
    /// Subgradient step `step * max_gap / sqrt(t)`.
    pub step: f64,
    pub tol: f64,
    pub polish_sweeps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { iterations: 2000, step: 0.5, tol: 1e-10, polish_sweeps: 200 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InfConvResult {
    #[serde(serialize_with = "crate::report::finite_or_inf")]
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub allocation: Option<Allocation>,
    /// Objective decrease achieved by the last polishing sweep.
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `rho_i(f_i(X))` for every agent.
    pub pieces: Vec<f64>,
}

struct Problem<'a> {
    measures: &'a [&'a dyn RiskMeasure],
    x: &'a RandomVariable,
    knots: Vec<f64>,
    gaps: Vec<f64>,
    zero: usize,
    atom_knot: Vec<usize>,
}

type Increments = Vec<Vec<f64>>;

impl<'a> Problem<'a> {
    fn new(measures: &'a [&'a dyn RiskMeasure], x: &'a RandomVariable) -> Self {
        // `+ 0.0` folds `-0.0` into `0.0` so that zero has a single knot.
        let mut knots: Vec<f64> = x.values().iter().map(|v| v + 0.0).collect();
        knots.push(0.0);
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let zero = knots.binary_search_by(|k| k.total_cmp(&0.0)).expect("zero is a knot");
        let atom_knot = x.values().iter().map(|v| knots.binary_search_by(|k| k.total_cmp(&(v + 0.0))).unwrap()).collect();
        let gaps = knots.windows(2).map(|w| w[1] - w[0]).collect();
        Problem { measures, x, knots, gaps, zero, atom_knot }
    }

    fn agents(&self) -> usize {
        self.measures.len()
    }

    fn proportional(&self) -> Increments {
        let d = self.agents() as f64;
        self.gaps.iter().map(|g| vec![g / d; self.agents()]).collect()
    }

    fn knot_values(&self, delta: &Increments, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.knots.len()];
        for j in self.zero + 1..self.knots.len() {
            out[j] = out[j - 1] + delta[j - 1][i];
        }
        for j in (0..self.zero).rev() {
            out[j] = out[j + 1] - delta[j][i];
        }
        out
    }

    fn piece(&self, delta: &Increments, i: usize) -> RandomVariable {
        let kv = self.knot_values(delta, i);
        let values = self.atom_knot.iter().map(|&j| kv[j]).collect();
        RandomVariable::new(self.x.space().clone(), values).expect("same length")
    }

    fn objective(&self, delta: &Increments) -> Result<f64> {
        let mut total = 0.0;
        for (i, rho) in self.measures.iter().enumerate() {
            total += evaluate(*rho, &self.piece(delta, i))?;
        }
        Ok(total)
    }

    fn gradient(&self, delta: &Increments) -> Result<Increments> {
        let mut grad = vec![vec![0.0; self.agents()]; self.gaps.len()];
        for (i, rho) in self.measures.iter().enumerate() {
            let g = rho.subgradient(&self.piece(delta, i))?;
            for (w, &j) in self.atom_knot.iter().enumerate() {
                if j > self.zero {
                    for row in &mut grad[self.zero..j] {
                        row[i] += g[w];
                    }
                } else {
                    for row in &mut grad[j..self.zero] {
                        row[i] -= g[w];
                    }
                }
            }
        }
        Ok(grad)
    }
}

/// Euclidean projection onto `{v >= 0, sum v = total}` (sort-based).
fn project_simplex(v: &mut [f64], total: f64) {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, uk) in u.iter().enumerate() {
        cum += uk;
        let t = (cum - total) / (k + 1) as f64;
        if uk - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

/// Minimizes a convex function on `[lo, hi]`, checking both endpoints.
fn line_minimize(lo: f64, hi: f64, mut f: impl FnMut(f64) -> Result<f64>) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut best = (lo, f(lo)?);
    let fh = f(hi)?;
    if fh < best.1 {
        best = (hi, fh);
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..80 {
        if b - a <= 1e-15 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    for cand in [(c, fc), (d, fd)] {
        if cand.1 < best.1 {
            best = cand;
        }
    }
    Ok(best)
}

/// One sweep of exact line searches over pairwise transfers inside every gap.
fn polish_sweep(p: &Problem, delta: &mut Increments, mut value: f64) -> Result<f64> {
    let d = p.agents();
    for k in 0..p.gaps.len() {
        for i in 0..d {
            for j in i + 1..d {
                let (di, dj) = (delta[k][i], delta[k][j]);
                let mut trial = delta.clone();
                let (t, v) = line_minimize(-dj, di, |t| {
                    trial[k][i] = di - t;
                    trial[k][j] = dj + t;
                    p.objective(&trial)
                })?;
                if v < value {
                    delta[k][i] = (di - t).max(0.0);
                    delta[k][j] = (dj + t).max(0.0);
                    value = p.objective(delta)?;
                }
            }
        }
    }
    Ok(value)
}

/// Converts increments to an exact allocation; the last agent absorbs the
/// rounding so that every gap is split exactly.
fn exact_allocation(p: &Problem, delta: &Increments) -> Result<Allocation> {
    let knots: Vec<Rational> = p.knots.iter().map(|k| rational_from_f64(*k)).collect::<Result<_>>()?;
    let d = p.agents();
    let mut inc: Vec<Vec<Rational>> = Vec::with_capacity(p.gaps.len());
    for (k, row) in delta.iter().enumerate() {
        let gap = &knots[k + 1] - &knots[k];
        let mut r: Vec<Rational> = row[..d - 1].iter().map(|v| rational_from_f64(*v)).collect::<Result<_>>()?;
        let used = r.iter().fold(Rational::zero(), |a, v| a + v);
        let mut rest = gap - used;
        while rest < Rational::zero() {
            let (idx, _) = r.iter().enumerate().max_by(|a, b| a.1.cmp(b.1)).expect("d >= 2");
            let take = std::cmp::min(r[idx].clone(), -rest.clone());
            r[idx] -= &take;
            rest += take;
        }
        r.push(rest);
        inc.push(r);
    }
    let mut pieces = vec![vec![Rational::zero(); knots.len()]; d];
    for (i, piece) in pieces.iter_mut().enumerate() {
        for j in p.zero + 1..knots.len() {
            piece[j] = &piece[j - 1] + &inc[j - 1][i];
        }
        for j in (0..p.zero).rev() {
            piece[j] = &piece[j + 1] - &inc[j][i];
        }
    }
    Allocation::from_parts(knots, pieces)
}

fn check_preconditions(measures: &[&dyn RiskMeasure]) -> Result<()> {
    if measures.len() < 2 {
        return Err(Error::Precondition("inf-convolution needs at least two measures".into()));
    }
    for rho in measures {
        let f = rho.flags();
        if !(f.convex && f.cash_additive && f.law_invariant) {
            return Err(Error::Precondition(format!(
                "{} must be convex, cash-additive and law-invariant",
                rho.name()
            )));
        }
    }
    Ok(())
}

/// Solves the inf-convolution of law-invariant cash-additive convex measures
/// over comonotone allocations.
///
/// The variables are the increments `delta[k][i] >= 0` of `f_i` over the
/// `k`-th gap between consecutive knots (support of `X` and `0`), with
/// `sum_i delta[k][i]` equal to the gap. Projected subgradient descent from
/// the proportional split is followed by pairwise exact line searches until
/// a sweep improves the objective by less than `tol`.
pub fn infconv_law_invariant(measures: &[&dyn RiskMeasure], x: &RandomVariable, opts: &SolverOptions) -> Result<InfConvResult> {
    check_preconditions(measures)?;
    let p = Problem::new(measures, x);
    let distinct = {
        let mut v = x.values().to_vec();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v.len()
    };
    let mut delta = p.proportional();
    let mut iterations = 0;
    let mut gap = 0.0;
    let mut converged = true;
    if distinct > 1 {
        let max_gap = p.gaps.iter().cloned().fold(0.0, f64::max);
        let mut current = delta.clone();
        let mut best = p.objective(&delta)?;
        for t in 1..=opts.iterations {
            let g = p.gradient(&current)?;
            let norm = g.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            let eta = opts.step * max_gap / (t as f64).sqrt() / norm;
            for (k, row) in current.iter_mut().enumerate() {
                for (v, gv) in row.iter_mut().zip(&g[k]) {
                    *v -= eta * gv;
                }
                project_simplex(row, p.gaps[k]);
            }
            iterations = t;
            let v = p.objective(&current)?;
            if v < best {
                best = v;
                delta = current.clone();
            }
        }
        let mut value = best;
        converged = false;
        for _ in 0..opts.polish_sweeps {
            let next = polish_sweep(&p, &mut delta, value)?;
            gap = value - next;
            value = next;
            if gap <= opts.tol * value.abs().max(1.0) {
                converged = true;
                break;
            }
        }
    }
    if !x.values().contains(&0.0) && p.zero > 0 && p.zero < p.gaps.len() {
        // Only the total increment across 0 is identified (cash shifts between
        // agents); make every piece affine through 0.
        let (l, r) = (p.gaps[p.zero - 1], p.gaps[p.zero]);
        for i in 0..p.agents() {
            let s = delta[p.zero - 1][i] + delta[p.zero][i];
            delta[p.zero - 1][i] = s * l / (l + r);
            delta[p.zero][i] = s - delta[p.zero - 1][i];
        }
    }
    let allocation = exact_allocation(&p, &delta)?;
    let pieces = measures
        .iter()
        .enumerate()
        .map(|(i, rho)| evaluate(*rho, &allocation.apply(i, x)?))
        .collect::<Result<Vec<f64>>>()?;
    Ok(InfConvResult { value: pieces.iter().sum(), allocation: Some(allocation), gap, iterations, converged, pieces })
}

/// Outcome of [`certify_exactness`]; `violation` names the first failed check.
#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violation: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recomputed: Option<f64>,
    pub value: f64,
}

/// Validates the witness allocation (agents, knot coverage, `f_i(0) = 0`,
/// monotone, 1-Lipschitz, exact sum to the identity) and checks that
/// `sum_i rho_i(f_i(X))` reproduces the reported value within `tol`.
pub fn certify_exactness(result: &InfConvResult, measures: &[&dyn RiskMeasure], x: &RandomVariable, tol: f64) -> Result<Certificate> {
    let alloc = result
        .allocation
        .as_ref()
        .ok_or_else(|| Error::Precondition("result carries no allocation".into()))?;
    let fail = |what: &str| Certificate { passed: false, violation: Some(what.into()), recomputed: None, value: result.value };
    if alloc.agents() != measures.len() {
        return Ok(fail("agents"));
    }
    let knots = alloc.knots();
    if knots.windows(2).any(|w| w[0] >= w[1]) {
        return Ok(fail("knots"));
    }
    let Ok(zero) = knots.binary_search(&Rational::zero()) else {
        return Ok(fail("coverage"));
    };
    for v in x.values() {
        if knots.binary_search(&rational_from_f64(*v)?).is_err() {
            return Ok(fail("coverage"));
        }
    }
    if alloc.pieces().iter().any(|p| !p[zero].is_zero()) {
        return Ok(fail("normalization"));
    }
    for p in alloc.pieces() {
        if p.windows(2).any(|w| w[1] < w[0]) {
            return Ok(fail("monotone"));
        }
    }
    for p in alloc.pieces() {
        if p.windows(2).zip(knots.windows(2)).any(|(v, k)| &v[1] - &v[0] > &k[1] - &k[0]) {
            return Ok(fail("lipschitz"));
        }
    }
    for (j, k) in knots.iter().enumerate() {
        let total = alloc.pieces().iter().fold(Rational::zero(), |a, p| a + &p[j]);
        if total != *k {
            return Ok(fail("sum"));
        }
    }
    let mut recomputed = 0.0;
    for (i, rho) in measures.iter().enumerate() {
        recomputed += evaluate(*rho, &alloc.apply(i, x)?)?;
    }
    let passed = (recomputed - result.value).abs() <= tol;
    Ok(Certificate { passed, violation: (!passed).then(|| "value".into()), recomputed: Some(recomputed), value: result.value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::FiniteSpace;
    use crate::risk::{entropic, es_alpha, Entropic, ExpectedShortfall, NegExpectation, ValueAtRisk};
    use crate::scalar::ratio;

    fn fixture() -> RandomVariable {
        RandomVariable::new(FiniteSpace::uniform(4).unwrap(), vec![-4.0, -2.0, 1.0, 3.0]).unwrap()
    }

    #[test]
    fn simplex_projection() {
        let mut v = vec![0.5, 0.5];
        project_simplex(&mut v, 1.0);
        assert_eq!(v, vec![0.5, 0.5]);
        let mut w = vec![2.0, -1.0, 0.0];
        project_simplex(&mut w, 1.0);
        assert_eq!(w, vec![1.0, 0.0, 0.0]);
        let mut u = vec![0.3, 0.3, 0.3];
        project_simplex(&mut u, 1.2);
        assert!(u.iter().all(|x| (x - 0.4).abs() < 1e-15));
    }

    #[test]
    fn es_pair_on_the_fixture() {
        let (a, b) = (ExpectedShortfall::new(0.3).unwrap(), ExpectedShortfall::new(0.6).unwrap());
        let ms: [&dyn RiskMeasure; 2] = [&a, &b];
        let r = infconv_law_invariant(&ms, &fixture(), &Default::default()).unwrap();
        let target = es_alpha(&fixture(), &0.6).unwrap();
        assert!((r.value - target).abs() < 1e-4, "{} vs {target}", r.value);
        assert!(r.converged);
        let c = certify_exactness(&r, &ms, &fixture(), 1e-12).unwrap();
        assert!(c.passed, "{c:?}");
    }

    #[test]
    fn entropic_pair_is_proportional() {
        let (a, b) = (Entropic::new(1.0).unwrap(), Entropic::new(3.0).unwrap());
        let ms: [&dyn RiskMeasure; 2] = [&a, &b];
        let r = infconv_law_invariant(&ms, &fixture(), &Default::default()).unwrap();
        assert!((r.value - entropic(&fixture(), 4.0).unwrap()).abs() < 1e-8);
        let alloc = r.allocation.unwrap();
        assert!(alloc.slopes(0).iter().all(|s| (s - 0.25).abs() < 1e-4), "{:?}", alloc.slopes(0));
    }

    #[test]
    fn constant_position_splits_by_cash() {
        let (a, b) = (ExpectedShortfall::new(0.5).unwrap(), Entropic::new(2.0).unwrap());
        let ms: [&dyn RiskMeasure; 2] = [&a, &b];
        let c = RandomVariable::constant(FiniteSpace::uniform(3).unwrap(), 2.5);
        let r = infconv_law_invariant(&ms, &c, &Default::default()).unwrap();
        assert!((r.value + 2.5).abs() < 1e-12);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn negative_zero_in_support() {
        let (a, b) = (ExpectedShortfall::new(0.5).unwrap(), NegExpectation);
        let ms: [&dyn RiskMeasure; 2] = [&a, &b];
        let x = RandomVariable::new(FiniteSpace::uniform(3).unwrap(), vec![-0.0, -1.0, 2.0]).unwrap();
        let r = infconv_law_invariant(&ms, &x, &Default::default()).unwrap();
        assert!((r.value + x.expectation()).abs() < 1e-9);
        assert!(certify_exactness(&r, &ms, &x, 1e-9).unwrap().passed);
    }

    #[test]
    fn three_agents() {
        let (a, b, e) = (ExpectedShortfall::new(0.25).unwrap(), NegExpectation, Entropic::new(1.0).unwrap());
        let ms: [&dyn RiskMeasure; 3] = [&a, &b, &e];
        let r = infconv_law_invariant(&ms, &fixture(), &Default::default()).unwrap();
        // Neg-expectation is the smallest of the three, and every agent is normalized.
        assert!((r.value + fixture().expectation()).abs() < 1e-6);
        assert!(certify_exactness(&r, &ms, &fixture(), 1e-12).unwrap().passed);
    }

    #[test]
    fn preconditions() {
        let v = ValueAtRisk::new(0.3).unwrap();
        let e = ExpectedShortfall::new(0.3).unwrap();
        let ms: [&dyn RiskMeasure; 2] = [&v, &e];
        assert!(matches!(infconv_law_invariant(&ms, &fixture(), &Default::default()), Err(Error::Precondition(_))));
        let one: [&dyn RiskMeasure; 1] = [&e];
        assert!(infconv_law_invariant(&one, &fixture(), &Default::default()).is_err());
    }

    #[test]
    fn certificate_failures() {
        let e = Entropic::new(1.0).unwrap();
        let ms: [&dyn RiskMeasure; 2] = [&e, &e];
        let x = fixture();
        let knots: Vec<Rational> = [-4, -2, 0, 1, 3].iter().map(|k| ratio(*k, 1)).collect();
        let good = Allocation::proportional(knots.clone(), &[ratio(1, 2), ratio(1, 2)]).unwrap();
        let value = 2.0 * entropic(&x.scale(&0.5), 1.0).unwrap();
        let result = |a: Allocation| InfConvResult { value, allocation: Some(a), gap: 0.0, iterations: 0, converged: true, pieces: vec![] };
        assert!(certify_exactness(&result(good.clone()), &ms, &x, 1e-12).unwrap().passed);
        assert!((value - entropic(&x, 2.0).unwrap()).abs() < 1e-12);

        let mut p = good.pieces().to_vec();
        p[0][1] = ratio(-5, 1);
        p[1][1] = ratio(3, 1);
        let bad = Allocation::from_parts(knots.clone(), p).unwrap();
        let c = certify_exactness(&result(bad), &ms, &x, 1e-12).unwrap();
        assert_eq!(c.violation.as_deref(), Some("monotone"));

        let shifted = Allocation::from_parts(knots.clone(), good.pieces().iter().map(|p| p.iter().map(|v| v + ratio(1, 8)).collect()).collect()).unwrap();
        assert_eq!(certify_exactness(&result(shifted), &ms, &x, 1e-12).unwrap().violation.as_deref(), Some("normalization"));

        let steep = Allocation::from_parts(
            knots.clone(),
            vec![knots.iter().map(|k| k * ratio(3, 2)).collect(), knots.iter().map(|k| k * ratio(-1, 2)).collect()],
        )
        .unwrap();
        assert_eq!(certify_exactness(&result(steep), &ms, &x, 1e-12).unwrap().violation.as_deref(), Some("monotone"));

        let one: [&dyn RiskMeasure; 1] = [&e];
        let id = InfConvResult { value: entropic(&x, 1.0).unwrap(), allocation: Some(Allocation::identity(knots)), gap: 0.0, iterations: 0, converged: true, pieces: vec![] };
        assert!(certify_exactness(&id, &one, &x, 1e-12).unwrap().passed);
    }
}
