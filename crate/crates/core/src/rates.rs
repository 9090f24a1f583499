//! Conjectured minimax stepsize and rate for constant-stepsize gradient descent.
//!
//! With the normalization `L = D = 1`, `N` steps of gradient descent with
//! stepsize `alpha` reach a final gap of `(1 - alpha)^(2N) / 2` on the quadratic
//! `x^2 / 2` and `1 / (2 (2 N alpha + 1))` on the Huber function whose breakpoint
//! is `1 / (2 N alpha + 1)`. The stepsize `alpha(N)` balances the two and `r(N)`
//! is the common value.
//!
//! The balance equation is badly conditioned in `alpha` for large `N` (the
//! quadratic term has relative sensitivity of roughly `2N`), so the root is
//! refined in double-double arithmetic and kept alongside its `f64` rounding.

use thiserror::Error;
use twofloat::TwoFloat;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RateError {
    #[error("number of steps must be at least 1")]
    ZeroSteps,
    #[error("no sign change of the balance equation on [1, 2) for N = {n}")]
    NoBracket { n: usize },
    #[error("balance equation has {count} sign changes on [1, 2) for N = {n}")]
    NotUnique { n: usize, count: usize },
}

/// Step count together with the balancing stepsize and rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateParams {
    pub n: usize,
    pub alpha: f64,
    pub r: f64,
    alpha_ext: TwoFloat,
    r_ext: TwoFloat,
}

impl RateParams {
    /// Arbitrary `(alpha, r)` pair for `n` steps. No balance is implied; this
    /// exists for exercising the certificate algebra away from the conjectured
    /// values.
    pub fn with_values(n: usize, alpha: f64, r: f64) -> Self {
        Self {
            n,
            alpha,
            r,
            alpha_ext: TwoFloat::from(alpha),
            r_ext: TwoFloat::from(r),
        }
    }

    /// Stepsize in double-double precision.
    pub fn alpha_ext(&self) -> TwoFloat {
        self.alpha_ext
    }

    /// Rate in double-double precision.
    pub fn r_ext(&self) -> TwoFloat {
        self.r_ext
    }

    /// `|huber - quadratic| / r`, both sides evaluated in double-double at the
    /// double-double stepsize.
    pub fn balance_gap(&self) -> f64 {
        let q = quadratic_rate_ext(self.n, self.alpha_ext);
        let h = huber_rate_ext(self.n, self.alpha_ext);
        f64::from((h - q).abs()) / self.r
    }

    /// Same gap with every quantity rounded to `f64` first.
    pub fn balance_gap_f64(&self) -> f64 {
        (huber_rate(self.n, self.alpha) - quadratic_rate(self.n, self.alpha)).abs() / self.r
    }
}

/// `(1 - alpha)^(2N) / 2`.
pub fn quadratic_rate(n: usize, alpha: f64) -> f64 {
    let base = (1.0 - alpha).abs();
    let power = match i32::try_from(2 * n) {
        Ok(k) if n <= 500 => base.powi(k),
        _ if base == 0.0 => 0.0,
        _ => (2.0 * n as f64 * base.ln()).exp(),
    };
    0.5 * power
}

/// `1 / (2 (2 N alpha + 1))`.
pub fn huber_rate(n: usize, alpha: f64) -> f64 {
    1.0 / (2.0 * (2.0 * n as f64 * alpha + 1.0))
}

pub fn quadratic_rate_ext(n: usize, alpha: TwoFloat) -> TwoFloat {
    let base = (TwoFloat::from(1.0) - alpha).abs();
    pow_ext(base, 2 * n) / 2.0
}

pub fn huber_rate_ext(n: usize, alpha: TwoFloat) -> TwoFloat {
    let denom = (alpha * (2.0 * n as f64) + 1.0) * 2.0;
    TwoFloat::from(1.0) / denom
}

fn pow_ext(base: TwoFloat, mut k: usize) -> TwoFloat {
    let mut acc = TwoFloat::from(1.0);
    let mut sq = base;
    while k > 0 {
        if k & 1 == 1 {
            acc *= sq;
        }
        sq = sq * sq;
        k >>= 1;
    }
    acc
}

// Log form of the balance equation, strictly increasing on (1, 2].
fn log_balance(n: usize, alpha: f64) -> f64 {
    let two_n = 2.0 * n as f64;
    if alpha <= 1.0 {
        return f64::NEG_INFINITY;
    }
    two_n * (alpha - 1.0).ln() + (two_n * alpha + 1.0).ln()
}

fn log_balance_slope(n: usize, alpha: f64) -> f64 {
    let two_n = 2.0 * n as f64;
    two_n / (alpha - 1.0) + two_n / (two_n * alpha + 1.0)
}

/// Solves `(alpha - 1)^(2N) (2 N alpha + 1) = 1` for `alpha` in `[1, 2)`.
///
/// A bisection-safeguarded Newton iteration on the log form gives the `f64`
/// root; two Newton steps in double-double on the polynomial form then fix the
/// trailing bits.
pub fn solve_rate_params(n: usize) -> Result<RateParams, RateError> {
    if n == 0 {
        return Err(RateError::ZeroSteps);
    }
    let mut lo = 1.0_f64;
    let mut hi = 2.0_f64;
    if log_balance(n, hi) <= 0.0 {
        return Err(RateError::NoBracket { n });
    }

    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = log_balance(n, x);
        if fx == 0.0 {
            break;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / log_balance_slope(n, x);
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let done = (next - x).abs() <= 2.0 * f64::EPSILON * x || hi - lo <= 2.0 * f64::EPSILON * x;
        x = next;
        if done {
            break;
        }
    }

    let two_n = TwoFloat::from(2.0 * n as f64);
    let mut a = TwoFloat::from(x);
    for _ in 0..3 {
        let base = a - 1.0;
        let p = pow_ext(base, 2 * n - 1);
        let lin = two_n * a + 1.0;
        let phi = p * base * lin - 1.0;
        let dphi = p * (two_n * lin + two_n * base);
        a -= phi / dphi;
    }

    let alpha = f64::from(a);
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(RateError::NoBracket { n });
    }
    let r_ext = huber_rate_ext(n, a);
    Ok(RateParams {
        n,
        alpha,
        r: f64::from(r_ext),
        alpha_ext: a,
        r_ext,
    })
}

/// Counts sign changes of the balance equation over a uniform grid of
/// `samples` points on `[1, 2)`; the root is unique exactly when this is 1.
pub fn count_sign_changes(n: usize, samples: usize) -> usize {
    let mut changes = 0;
    let mut prev = log_balance(n, 1.0) > 0.0;
    for k in 1..samples {
        let alpha = 1.0 + k as f64 / samples as f64;
        let cur = log_balance(n, alpha) > 0.0;
        if cur != prev {
            changes += 1;
        }
        prev = cur;
    }
    changes
}

/// Like [`solve_rate_params`] but also rejects `N` whose balance equation
/// shows more than one sign change on a fine grid.
pub fn solve_rate_params_checked(n: usize) -> Result<RateParams, RateError> {
    let params = solve_rate_params(n)?;
    match count_sign_changes(n, 4096) {
        1 => Ok(params),
        count => Err(RateError::NotUnique { n, count }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObjectiveKind {
    Quadratic,
    Huber,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    /// Huber breakpoint; ignored for the quadratic.
    pub delta: f64,
}

impl ObjectiveSpec {
    pub fn quadratic() -> Self {
        Self {
            kind: ObjectiveKind::Quadratic,
            delta: 0.0,
        }
    }

    pub fn huber(delta: f64) -> Self {
        Self {
            kind: ObjectiveKind::Huber,
            delta,
        }
    }

    /// Huber objective whose breakpoint makes the `N`-step trajectory from
    /// `x0 = 1` stay on the linear piece.
    pub fn extremal_huber(n: usize, alpha: f64) -> Self {
        Self::huber(1.0 / (2.0 * n as f64 * alpha + 1.0))
    }

    pub fn value(&self, x: f64) -> f64 {
        match self.kind {
            ObjectiveKind::Quadratic => 0.5 * x * x,
            ObjectiveKind::Huber => {
                if x.abs() <= self.delta {
                    0.5 * x * x
                } else {
                    self.delta * x.abs() - 0.5 * self.delta * self.delta
                }
            }
        }
    }

    pub fn gradient(&self, x: f64) -> f64 {
        match self.kind {
            ObjectiveKind::Quadratic => x,
            ObjectiveKind::Huber => {
                if x.abs() <= self.delta {
                    x
                } else {
                    self.delta * x.signum()
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub xs: Vec<f64>,
    pub fvals: Vec<f64>,
    pub gvals: Vec<f64>,
}

impl SimTrace {
    pub fn final_value(&self) -> f64 {
        *self.fvals.last().expect("trace has at least one point")
    }
}

/// Runs `N` steps of gradient descent `x <- x - alpha * f'(x)` on a 1-D objective.
pub fn simulate(obj: &ObjectiveSpec, x0: f64, alpha: f64, n: usize) -> SimTrace {
    let mut xs = Vec::with_capacity(n + 1);
    let mut fvals = Vec::with_capacity(n + 1);
    let mut gvals = Vec::with_capacity(n + 1);
    let mut x = x0;
    for k in 0..=n {
        let g = obj.gradient(x);
        xs.push(x);
        fvals.push(obj.value(x));
        gvals.push(g);
        if k < n {
            x -= alpha * g;
        }
    }
    SimTrace { xs, fvals, gvals }
}

/// Worst of the two extremal performances at each trial stepsize.
pub fn lower_bound_envelope(n: usize, alphas: &[f64]) -> Vec<f64> {
    alphas
        .iter()
        .map(|&a| quadratic_rate(n, a).max(huber_rate(n, a)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    // Plain bisection on the polynomial form, independent of the solver path.
    fn bisect_oracle(n: usize) -> f64 {
        let phi = |a: f64| (a - 1.0).powi(2 * n as i32) * (2.0 * n as f64 * a + 1.0) - 1.0;
        let (mut lo, mut hi) = (1.0_f64, 2.0_f64);
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if phi(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn single_step_is_the_cubic_root() {
        let p = solve_rate_params(1).unwrap();
        assert_eq!(p.alpha, 1.5);
        assert_eq!(p.r, 0.125);
        let phi = (p.alpha - 1.0).powi(2) * (2.0 * p.alpha + 1.0) - 1.0;
        assert!(phi.abs() <= 1e-14);
    }

    #[test]
    fn hundred_steps_matches_bisection() {
        let p = solve_rate_params(100).unwrap();
        let oracle = bisect_oracle(100);
        assert!((p.alpha - oracle).abs() <= 4.0 * f64::EPSILON, "{} vs {}", p.alpha, oracle);
        assert!(p.balance_gap() <= 1e-14);
        assert!(p.r < solve_rate_params(99).unwrap().r);
    }

    #[test]
    fn zero_steps_is_rejected() {
        assert_eq!(solve_rate_params(0), Err(RateError::ZeroSteps));
    }

    #[test]
    fn root_is_unique_on_bracket() {
        for n in [1, 2, 3, 10, 100, 1000, 20160] {
            assert_eq!(count_sign_changes(n, 4096), 1, "N = {n}");
            assert!(solve_rate_params_checked(n).is_ok());
        }
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(quadratic_rate(3, 1.0), 0.0);
        assert_eq!(quadratic_rate(1, 1.5), 0.125);
        assert_eq!(quadratic_rate(2, 0.5), 0.03125);
        assert!((huber_rate(2, 1.0) - 0.1).abs() < 1e-16);
        assert_eq!(huber_rate(7, 0.0), 0.5);
        assert_eq!(huber_rate(1, 1.5), 0.125);
    }

    #[test]
    fn quadratic_rate_log_path_agrees() {
        let a = 1.9;
        let direct = 0.5 * (0.9_f64).powi(1200);
        assert!((quadratic_rate(600, a) - direct).abs() <= 1e-12 * direct);
    }

    #[test]
    fn simulation_examples() {
        let q = simulate(&ObjectiveSpec::quadratic(), 1.0, 1.5, 1);
        assert_eq!(q.xs, vec![1.0, -0.5]);
        assert_eq!(q.final_value(), 0.125);

        let h = simulate(&ObjectiveSpec::extremal_huber(1, 1.5), 1.0, 1.5, 1);
        assert_eq!(h.xs[1], 0.625);
        assert!((h.final_value() - 0.125).abs() < 1e-16);

        let z = simulate(&ObjectiveSpec::quadratic(), 0.0, 1.3, 9);
        assert!(z.xs.iter().all(|&x| x == 0.0));
        assert_eq!(z.final_value(), 0.0);
    }

    #[test]
    fn trace_follows_update_rule() {
        let t = simulate(&ObjectiveSpec::huber(0.1), 1.0, 1.7, 20);
        assert_eq!(t.xs.len(), 21);
        for k in 0..20 {
            assert_eq!(t.xs[k + 1], t.xs[k] - 1.7 * t.gvals[k]);
        }
    }

    #[test]
    fn envelope_examples() {
        assert_eq!(lower_bound_envelope(1, &[1.5]), vec![0.125]);
        let v = lower_bound_envelope(1, &[1.0]);
        assert!((v[0] - 1.0 / 6.0).abs() < 1e-16);

        let r10 = solve_rate_params(10).unwrap().r;
        let grid: Vec<f64> = (0..=189).map(|k| 0.1 + 0.01 * k as f64).collect();
        assert!(lower_bound_envelope(10, &grid).iter().all(|&v| v >= r10 - 1e-12));
    }

    #[test]
    fn custom_values_are_kept() {
        let p = RateParams::with_values(4, 1.3, 0.2);
        assert_eq!((p.n, p.alpha, p.r), (4, 1.3, 0.2));
    }
}
