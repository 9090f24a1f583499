//! Numerical construction of certificates.
//!
//! The residual map `d -> eps(d)` has `N + 1` components in `N - 1` unknowns.
//! A zero is found with damped Gauss-Newton: each step is the least-squares
//! solution of the linearized system (QR of the Jacobian), shortened by
//! halving until the residual norm decreases. Larger `N` are warm-started by
//! extrapolating solutions for smaller `N` on a normalized index grid.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::rates::{solve_rate_params, RateError, RateParams};
use crate::recursion::{derive_full, residual, FullCertificate, RecursionError};

/// Seed of the random restarts in [`bootstrap_smallest`].
pub const BOOTSTRAP_SEED: u64 = 0x5eed_2016;
const BOOTSTRAP_RANDOM_STARTS: usize = 64;
const BOOTSTRAP_LADDER: [f64; 11] = [0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
const MAX_HALVINGS: i32 = 20;
const RANK_TOL: f64 = 1e-12;
/// Lower clamp applied to extrapolated starting points.
pub const START_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Target for `max_i |eps_i|`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-13,
            max_iter: 50,
        }
    }
}

/// Where the starting point of a solve came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StartOrigin {
    Given,
    Constant(f64),
    Random { seed: u64, attempt: usize },
    Resampled { from: usize },
    Extrapolated { from: (usize, usize) },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub params: RateParams,
    pub d: Vec<f64>,
    pub iterations: usize,
    pub residual_sup: f64,
    pub delta: f64,
    pub positive: bool,
    pub converged: bool,
    /// `|eps|_2` at the start and after every accepted step.
    pub residual_norms: Vec<f64>,
    pub rank_deficient_steps: usize,
    pub origin: StartOrigin,
}

impl SolveReport {
    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn certificate(&self) -> FullCertificate {
        derive_full(&self.params, &self.d).expect("report holds a well-shaped d")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureReason {
    MaxIterations,
    /// No step length down to `2^-20` reduced the residual norm.
    Stagnated,
    /// Residuals vanished but some multiplier is not positive.
    NotPositive,
    NonFinite,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Recursion(#[from] RecursionError),
    #[error(transparent)]
    Rates(#[from] RateError),
    #[error("Gauss-Newton did not converge for N = {n} ({reason:?}, residual {residual_sup:e})",
        n = report.n(), residual_sup = report.residual_sup)]
    NonConvergence {
        reason: FailureReason,
        report: Box<SolveReport>,
    },
    #[error("{0}")]
    InvalidInput(String),
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `J[i][k] = d eps_i / d d_k` by central differences with step
/// `max(1, |d_k|) 2^-26`. The residuals are quadratic, so only rounding error
/// remains.
pub fn jacobian(params: &RateParams, d: &[f64]) -> Result<DMatrix<f64>, RecursionError> {
    jacobian_with_step(params, d, 2f64.powi(-26))
}

pub fn jacobian_with_step(
    params: &RateParams,
    d: &[f64],
    base_step: f64,
) -> Result<DMatrix<f64>, RecursionError> {
    let n = params.n;
    residual(params, d)?;
    let mut jac = DMatrix::zeros(n + 1, n - 1);
    let mut probe = d.to_vec();
    for k in 0..n - 1 {
        let h = d[k].abs().max(1.0) * base_step;
        probe[k] = d[k] + h;
        let up = residual(params, &probe)?;
        probe[k] = d[k] - h;
        let down = residual(params, &probe)?;
        probe[k] = d[k];
        for i in 0..=n {
            jac[(i, k)] = (up[i] - down[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Least-squares solution of `J s = -eps`. Falls back to the minimum-norm
/// SVD solution when the QR factor reveals rank below the column count; the
/// flag reports that fallback.
pub fn least_squares_step(jac: &DMatrix<f64>, eps: &[f64]) -> (DVector<f64>, bool) {
    let cols = jac.ncols();
    let rhs = -DVector::from_column_slice(eps);
    let qr = jac.clone().qr();
    let rfac = qr.r();
    let diag_max = (0..cols).map(|k| rfac[(k, k)].abs()).fold(0.0, f64::max);
    let diag_min = (0..cols).map(|k| rfac[(k, k)].abs()).fold(f64::INFINITY, f64::min);

    if diag_max > 0.0 && diag_min > RANK_TOL * diag_max {
        let mut qtb = rhs.clone();
        qr.q_tr_mul(&mut qtb);
        let top = qtb.rows(0, cols).into_owned();
        if let Some(step) = rfac.solve_upper_triangular(&top) {
            return (step, false);
        }
    }
    let svd = jac.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let step = svd
        .solve(&rhs, RANK_TOL * smax)
        .unwrap_or_else(|_| DVector::zeros(cols));
    (step, true)
}

pub fn gauss_newton(params: &RateParams, d0: &[f64], opts: &SolveOptions) -> Result<SolveReport, SolveError> {
    gauss_newton_from(params, d0, opts, StartOrigin::Given)
}

pub fn gauss_newton_from(
    params: &RateParams,
    d0: &[f64],
    opts: &SolveOptions,
    origin: StartOrigin,
) -> Result<SolveReport, SolveError> {
    if !(opts.tol > 0.0) {
        return Err(SolveError::InvalidInput(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let mut d = d0.to_vec();
    let mut eps = residual(params, &d)?;
    let mut norm = norm2(&eps);
    let mut norms = vec![norm];
    let mut iterations = 0;
    let mut rank_deficient_steps = 0;

    let failure = loop {
        if !norm.is_finite() {
            break Some(FailureReason::NonFinite);
        }
        if sup(&eps) <= opts.tol {
            break None;
        }
        if iterations >= opts.max_iter {
            break Some(FailureReason::MaxIterations);
        }
        let jac = jacobian(params, &d)?;
        let (step, deficient) = least_squares_step(&jac, &eps);
        if deficient {
            rank_deficient_steps += 1;
        }

        let mut accepted = None;
        let mut t = 1.0;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = d.iter().zip(step.iter()).map(|(x, s)| x + t * s).collect();
            let trial_eps = residual(params, &trial)?;
            let trial_norm = norm2(&trial_eps);
            if trial_norm < norm {
                accepted = Some((trial, trial_eps, trial_norm));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((nd, ne, nn)) => {
                d = nd;
                eps = ne;
                norm = nn;
                norms.push(nn);
                iterations += 1;
            }
            None => break Some(FailureReason::Stagnated),
        }
    };

    let cert = derive_full(params, &d)?;
    let positive = cert.all_positive();
    let residual_sup = cert.residual_sup();
    let converged = failure.is_none() && positive;
    let report = SolveReport {
        params: *params,
        d,
        iterations,
        residual_sup,
        delta: cert.delta(),
        positive,
        converged,
        residual_norms: norms,
        rank_deficient_steps,
        origin,
    };
    match (failure, positive) {
        (None, true) => Ok(report),
        (None, false) => Err(SolveError::NonConvergence {
            reason: FailureReason::NotPositive,
            report: Box::new(report),
        }),
        (Some(reason), _) => Err(SolveError::NonConvergence {
            reason,
            report: Box::new(report),
        }),
    }
}

/// Piecewise-linear resampling of `v` onto `len` equispaced points of `[0, 1]`.
pub fn resample(v: &[f64], len: usize) -> Vec<f64> {
    if v.len() == 1 || len == 1 {
        return vec![v[0]; len];
    }
    let last = (v.len() - 1) as f64;
    (0..len)
        .map(|k| {
            let pos = k as f64 / (len - 1) as f64 * last;
            let i = (pos.floor() as usize).min(v.len() - 2);
            let w = pos - i as f64;
            v[i] + w * (v[i + 1] - v[i])
        })
        .collect()
}

/// Starting point for `target` from converged `d` at two smaller sizes: both
/// are resampled onto the target's grid `t_i = i / (target - 2)` and
/// extrapolated linearly in `N`. Entries are clamped below at
/// [`START_FLOOR`].
pub fn extrapolate_init(
    first: (usize, &[f64]),
    second: (usize, &[f64]),
    target: usize,
) -> Result<Vec<f64>, SolveError> {
    let (n1, d1) = first;
    let (n2, d2) = second;
    for &(n, d) in &[first, second] {
        if n < 3 || d.len() != n - 1 {
            return Err(SolveError::InvalidInput(format!(
                "source for N = {n} must have N >= 3 and N - 1 entries, got {}",
                d.len()
            )));
        }
    }
    if target < 3 {
        return Err(SolveError::InvalidInput(format!("target N = {target} is below 3")));
    }
    let len = target - 1;
    let r1 = resample(d1, len);
    if n1 == n2 {
        if d1 == d2 {
            return Ok(r1.into_iter().map(|x| x.max(START_FLOOR)).collect());
        }
        return Err(SolveError::InvalidInput(format!("two different sources for the same N = {n1}")));
    }
    if n2 < n1 {
        return Err(SolveError::InvalidInput(format!("sources must be ordered, got N = {n1} then N = {n2}")));
    }
    let r2 = resample(d2, len);
    let slope = (target as f64 - n1 as f64) / (n2 - n1) as f64;
    Ok(r1
        .iter()
        .zip(&r2)
        .map(|(a, b)| (a + slope * (b - a)).max(START_FLOOR))
        .collect())
}

/// Multi-start solve for `N = 3`: constant starts from a fixed ladder, then
/// seeded random positive starts.
pub fn bootstrap_smallest(params: &RateParams, opts: &SolveOptions) -> Result<SolveReport, SolveError> {
    if params.n != 3 {
        return Err(SolveError::InvalidInput(format!(
            "bootstrap applies to N = 3 only, got N = {}",
            params.n
        )));
    }
    let mut last_err = None;
    for &kappa in &BOOTSTRAP_LADDER {
        match gauss_newton_from(params, &[kappa; 2], opts, StartOrigin::Constant(kappa)) {
            Ok(report) => return Ok(report),
            Err(e @ SolveError::NonConvergence { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(BOOTSTRAP_SEED);
    for attempt in 0..BOOTSTRAP_RANDOM_STARTS {
        let start: Vec<f64> = (0..2).map(|_| rng.random_range(0.01..2.0)).collect();
        let origin = StartOrigin::Random {
            seed: BOOTSTRAP_SEED,
            attempt,
        };
        match gauss_newton_from(params, &start, opts, origin) {
            Ok(report) => return Ok(report),
            Err(e @ SolveError::NonConvergence { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.expect("ladder is non-empty"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub start: usize,
    pub stop: usize,
    pub stride: usize,
}

/// Values of `N` to solve, as strided segments. Consecutive segments may
/// share an endpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepSchedule {
    segments: Vec<Segment>,
}

impl SweepSchedule {
    pub fn new(segments: Vec<Segment>) -> Result<Self, SweepError> {
        let bad = |msg: String| Err(SweepError::InvalidSchedule(msg));
        let Some(first) = segments.first() else {
            return bad("schedule has no segments".into());
        };
        if first.start != 3 {
            return bad(format!("schedule must start at N = 3, starts at {}", first.start));
        }
        let mut prev_stop = 0;
        for s in &segments {
            if s.stride == 0 {
                return bad("stride must be positive".into());
            }
            if s.stop < s.start {
                return bad(format!("segment {}..{} is empty", s.start, s.stop));
            }
            if s.start < prev_stop {
                return bad(format!("segment starting at {} overlaps the previous one", s.start));
            }
            prev_stop = s.stop;
        }
        Ok(Self { segments })
    }

    /// Every `N` from 3 to `n_max`.
    pub fn unit(n_max: usize) -> Result<Self, SweepError> {
        Self::new(vec![Segment {
            start: 3,
            stop: n_max,
            stride: 1,
        }])
    }

    /// Stride 1 up to `stride_from`, then `stride` up to `n_max`.
    pub fn strided(n_max: usize, stride_from: usize, stride: usize) -> Result<Self, SweepError> {
        if stride_from >= n_max {
            return Self::unit(n_max);
        }
        Self::new(vec![
            Segment {
                start: 3,
                stop: stride_from,
                stride: 1,
            },
            Segment {
                start: stride_from,
                stop: n_max,
                stride,
            },
        ])
    }

    /// Stride 1 to 2240, stride 320 to 8960, stride 1600 to 20160, clipped at `n_max`.
    pub fn full_scale(n_max: usize) -> Result<Self, SweepError> {
        let segments = [(3, 2240, 1), (2240, 8960, 320), (8960, 20160, 1600)]
            .into_iter()
            .filter(|&(start, _, _)| start <= n_max)
            .map(|(start, stop, stride)| Segment {
                start,
                stop: stop.min(n_max),
                stride,
            })
            .collect();
        Self::new(segments)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Strictly increasing list of every scheduled `N`.
    pub fn values(&self) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for s in &self.segments {
            for n in (s.start..=s.stop).step_by(s.stride) {
                if out.last().is_none_or(|&last| n > last) {
                    out.push(n);
                }
            }
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("sweep stopped at N = {n}: {source}")]
    Solve {
        n: usize,
        #[source]
        source: SolveError,
        completed: Vec<SolveReport>,
    },
    #[error("could not persist the certificate for N = {n}: {source}")]
    Sink {
        n: usize,
        #[source]
        source: std::io::Error,
        completed: Vec<SolveReport>,
    },
}

impl SweepError {
    /// Reports finished before the failure.
    pub fn completed(&self) -> &[SolveReport] {
        match self {
            SweepError::InvalidSchedule(_) => &[],
            SweepError::Solve { completed, .. } | SweepError::Sink { completed, .. } => completed,
        }
    }
}

pub fn sweep(schedule: &SweepSchedule, opts: &SolveOptions) -> Result<Vec<SolveReport>, SweepError> {
    sweep_with(schedule, opts, |_| Ok(()))
}

/// Continuation over the schedule. `sink` sees each converged report in order;
/// the sweep stops at the first failure, keeping what was already finished.
pub fn sweep_with<F>(schedule: &SweepSchedule, opts: &SolveOptions, mut sink: F) -> Result<Vec<SolveReport>, SweepError>
where
    F: FnMut(&SolveReport) -> std::io::Result<()>,
{
    let mut done: Vec<SolveReport> = Vec::new();
    for n in schedule.values() {
        let result = solve_next(n, &done, opts);
        let report = match result {
            Ok(report) => report,
            Err(source) => {
                return Err(SweepError::Solve {
                    n,
                    source,
                    completed: done,
                })
            }
        };
        if let Err(source) = sink(&report) {
            return Err(SweepError::Sink {
                n,
                source,
                completed: done,
            });
        }
        done.push(report);
    }
    Ok(done)
}

/// Solves for `n` given the converged reports so far (in increasing `N`).
pub fn solve_next(n: usize, done: &[SolveReport], opts: &SolveOptions) -> Result<SolveReport, SolveError> {
    let params = solve_rate_params(n)?;
    match done {
        [] if n == 3 => bootstrap_smallest(&params, opts),
        [] => Err(SolveError::InvalidInput(format!(
            "no converged certificate to warm-start N = {n}"
        ))),
        [only] => {
            let start = resample(&only.d, n - 1);
            gauss_newton_from(&params, &start, opts, StartOrigin::Resampled { from: only.n() })
        }
        [.., older, newer] => {
            let start = extrapolate_init((older.n(), &older.d), (newer.n(), &newer.d), n)?;
            let origin = StartOrigin::Extrapolated {
                from: (older.n(), newer.n()),
            };
            match gauss_newton_from(&params, &start, opts, origin) {
                Ok(report) => Ok(report),
                Err(SolveError::NonConvergence { .. }) => {
                    let start = resample(&newer.d, n - 1);
                    gauss_newton_from(&params, &start, opts, StartOrigin::Resampled { from: newer.n() })
                }
                Err(e) => Err(e),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solved_upto(n_max: usize) -> Vec<SolveReport> {
        sweep(&SweepSchedule::unit(n_max).unwrap(), &SolveOptions::default()).unwrap()
    }

    #[test]
    fn jacobian_shape_and_directional_derivative() {
        let p = solve_rate_params(8).unwrap();
        let d: Vec<f64> = (0..7).map(|i| 0.2 + 0.05 * i as f64).collect();
        let jac = jacobian(&p, &d).unwrap();
        assert_eq!((jac.nrows(), jac.ncols()), (9, 7));

        let dir: Vec<f64> = (0..7).map(|i| ((i * 7 + 3) % 5) as f64 / 5.0 - 0.4).collect();
        let h = 1e-4;
        let plus: Vec<f64> = d.iter().zip(&dir).map(|(x, p)| x + h * p).collect();
        let minus: Vec<f64> = d.iter().zip(&dir).map(|(x, p)| x - h * p).collect();
        let (rp, rm) = (residual(&p, &plus).unwrap(), residual(&p, &minus).unwrap());
        let jp = &jac * DVector::from_vec(dir);
        for i in 0..9 {
            let fd = (rp[i] - rm[i]) / (2.0 * h);
            assert!((jp[i] - fd).abs() <= 1e-8 * (1.0 + fd.abs()), "row {i}: {} vs {fd}", jp[i]);
        }
    }

    #[test]
    fn jacobian_step_independent() {
        // No truncation error on quadratics: steps h and h/8 agree up to rounding,
        // which is ~eps/h and so only reaches 1e-9 for moderately large h.
        let p = solve_rate_params(12).unwrap();
        let d: Vec<f64> = (0..11).map(|i| 0.3 + 0.02 * i as f64).collect();
        let coarse = jacobian_with_step(&p, &d, 2f64.powi(-6)).unwrap();
        let fine = jacobian_with_step(&p, &d, 2f64.powi(-9)).unwrap();
        let scale = coarse.amax();
        let diff = (&coarse - &fine).amax();
        assert!(diff <= 1e-9 * scale, "diff {diff:e}, scale {scale:e}");

        let default = jacobian(&p, &d).unwrap();
        assert!((&default - &coarse).amax() <= 1e-6 * scale);
    }

    #[test]
    fn least_squares_normal_equations() {
        let p = solve_rate_params(10).unwrap();
        let d: Vec<f64> = (0..9).map(|i| 0.4 + 0.01 * i as f64).collect();
        let eps = residual(&p, &d).unwrap();
        let jac = jacobian(&p, &d).unwrap();
        let (s, deficient) = least_squares_step(&jac, &eps);
        assert!(!deficient);
        let e = DVector::from_vec(eps);
        let normal = jac.transpose() * (&jac * &s + &e);
        assert!(normal.norm() <= 1e-8 * jac.norm() * e.norm());
    }

    #[test]
    fn rank_deficient_falls_back_to_min_norm() {
        let jac = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 1.0, 1.0, 2.0, 2.0]);
        let (s, deficient) = least_squares_step(&jac, &[-1.0, -1.0, -2.0]);
        assert!(deficient);
        assert!((s[0] - 0.5).abs() < 1e-12 && (s[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bootstrap_converges_and_is_deterministic() {
        let p = solve_rate_params(3).unwrap();
        let opts = SolveOptions::default();
        let r1 = bootstrap_smallest(&p, &opts).unwrap();
        let r2 = bootstrap_smallest(&p, &opts).unwrap();
        assert_eq!(r1, r2);
        assert!(r1.converged && r1.positive);
        assert!(r1.residual_sup <= 1e-13);
        assert!(r1.delta <= 1e-11);
        assert!(bootstrap_smallest(&solve_rate_params(4).unwrap(), &opts).is_err());
    }

    #[test]
    fn warm_start_at_five() {
        let reports = solved_upto(4);
        let p = solve_rate_params(5).unwrap();
        let start = extrapolate_init((3, &reports[0].d), (4, &reports[1].d), 5).unwrap();
        let rep = gauss_newton(&p, &start, &SolveOptions::default()).unwrap();
        assert!(rep.residual_sup <= 1e-13);
        assert!(rep.iterations <= 20);
        assert!(rep.delta <= (6.0) * rep.residual_sup);
        assert!(rep.residual_norms.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn converged_start_is_a_fixed_point() {
        let reports = solved_upto(10);
        let last = reports.last().unwrap();
        let rep = gauss_newton(&last.params, &last.d, &SolveOptions::default()).unwrap();
        assert!(rep.iterations <= 1);
        for (x, y) in rep.d.iter().zip(&last.d) {
            assert!((x - y).abs() <= 1e-14 * x.abs().max(1.0));
        }
    }

    #[test]
    fn negative_start_never_reports_false_success() {
        let p = solve_rate_params(5).unwrap();
        let start = [0.5, -3.0, 0.5, 0.5];
        match gauss_newton(&p, &start, &SolveOptions::default()) {
            Ok(rep) => assert!(rep.converged && rep.positive),
            Err(SolveError::NonConvergence { report, .. }) => assert!(!report.converged),
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn max_iterations_is_reported() {
        let p = solve_rate_params(6).unwrap();
        let opts = SolveOptions { tol: 1e-13, max_iter: 0 };
        match gauss_newton(&p, &[1.0; 5], &opts) {
            Err(SolveError::NonConvergence { reason, report }) => {
                assert_eq!(reason, FailureReason::MaxIterations);
                assert_eq!(report.iterations, 0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
        assert!(matches!(
            gauss_newton(&p, &[1.0; 5], &SolveOptions { tol: 0.0, max_iter: 5 }),
            Err(SolveError::InvalidInput(_))
        ));
    }

    #[test]
    fn extrapolation_contracts() {
        let k = [0.7; 9];
        let j = [0.7; 10];
        let out = extrapolate_init((10, &k), (11, &j), 40).unwrap();
        assert_eq!(out.len(), 39);
        assert!(out.iter().all(|&x| (x - 0.7).abs() < 1e-15));

        let same = [0.1, 0.3, 0.2];
        let out = extrapolate_init((4, &same), (4, &same), 7).unwrap();
        assert_eq!(out, resample(&same, 6));

        assert!(extrapolate_init((4, &same), (4, &[0.1, 0.3, 0.25]), 7).is_err());
        assert!(extrapolate_init((2, &[1.0]), (4, &same), 7).is_err());

        let lo = [1.0, 1.0];
        let hi = [1.0, 0.5, 0.0];
        let out = extrapolate_init((3, &lo), (4, &hi), 5).unwrap();
        // Grid t = 0, 1/3, 2/3, 1; the second source is 1 - t there.
        assert_eq!(out[0], 1.0);
        assert!((out[1] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(&out[2..], &[START_FLOOR, START_FLOOR]);
    }

    #[test]
    fn twelve_from_ten_and_eleven() {
        let reports = solved_upto(11);
        let (a, b) = (&reports[7], &reports[8]);
        assert_eq!((a.n(), b.n()), (10, 11));
        let start = extrapolate_init((10, &a.d), (11, &b.d), 12).unwrap();
        let rep = gauss_newton(&solve_rate_params(12).unwrap(), &start, &SolveOptions::default()).unwrap();
        assert!(rep.iterations <= 10);
    }

    #[test]
    fn schedule_values() {
        let s = SweepSchedule::new(vec![
            Segment { start: 3, stop: 6, stride: 1 },
            Segment { start: 6, stop: 20, stride: 5 },
        ])
        .unwrap();
        assert_eq!(s.values(), vec![3, 4, 5, 6, 11, 16]);
        assert_eq!(SweepSchedule::unit(3).unwrap().values(), vec![3]);
        assert!(SweepSchedule::new(vec![]).is_err());
        assert!(SweepSchedule::new(vec![Segment { start: 4, stop: 9, stride: 1 }]).is_err());
        assert!(SweepSchedule::new(vec![Segment { start: 3, stop: 9, stride: 0 }]).is_err());
        let full = SweepSchedule::full_scale(20160).unwrap().values();
        assert_eq!(full.len(), 2238 + 21 + 7);
        assert_eq!(*full.last().unwrap(), 20160);
        assert!(full.contains(&2560) && full.contains(&10560));
        assert_eq!(SweepSchedule::full_scale(100).unwrap().values().len(), 98);
    }

    #[test]
    fn single_value_sweep_is_bootstrap() {
        let reports = solved_upto(3);
        assert_eq!(reports.len(), 1);
        let boot = bootstrap_smallest(&solve_rate_params(3).unwrap(), &SolveOptions::default()).unwrap();
        assert_eq!(reports[0], boot);
    }

    #[test]
    fn sweep_reports_are_certificates() {
        let reports = solved_upto(40);
        assert_eq!(reports.len(), 38);
        for r in &reports {
            assert!(r.converged && r.positive, "N = {}", r.n());
            assert!(r.delta <= 1e-11 && r.residual_sup <= 1e-13);
            assert!(r.delta <= (r.n() + 1) as f64 * r.residual_sup);
            let cert = r.certificate();
            assert!((cert.c[r.n()] - (2.0 * r.params.r).sqrt()).abs() == 0.0);
        }
    }
}
