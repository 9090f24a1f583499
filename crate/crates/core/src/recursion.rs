//! Elimination of the certificate vectors `a`, `b`, `c` in terms of `d`.
//!
//! For a candidate `d` of length `N - 1` the multipliers are derived in a
//! fixed order: `c` is affine in `d`, then `a[N-1]`, the pair
//! `(a[N-2], b[N-2])`, and the remaining pairs `(a[i], b[i])` by a backward
//! recursion from `i = N - 3` to `0`. The residuals `eps` measure how far the
//! resulting multipliers are from an exact certificate; each one is a
//! quadratic polynomial in `d`.
//!
//! Vector indices follow the iterate indices: `a[0..N]`, `b[0..N-1]`,
//! `c[0..=N]`, `d[0..N-1]`, `eps[0..=N]`.

use thiserror::Error;

use crate::rates::RateParams;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecursionError {
    #[error("certificate recursion needs N >= 3, got N = {n}")]
    TooSmall { n: usize },
    #[error("vector `{name}` has length {got}, expected {expected}")]
    DimensionMismatch {
        name: &'static str,
        expected: usize,
        got: usize,
    },
}

/// Accumulation mode for the prefix sums of `d` and suffix sums of `c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Summation {
    #[default]
    Plain,
    /// Kahan-compensated.
    Compensated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullCertificate {
    pub params: RateParams,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub eps: Vec<f64>,
}

impl FullCertificate {
    pub fn n(&self) -> usize {
        self.params.n
    }

    /// `max_i |eps_i|`.
    pub fn residual_sup(&self) -> f64 {
        self.eps.iter().fold(0.0, |m, e| m.max(e.abs()))
    }

    /// `sum_i max(eps_i, 0)`.
    pub fn delta(&self) -> f64 {
        positive_part_sum(&self.eps)
    }

    pub fn all_positive(&self) -> bool {
        [&self.a, &self.b, &self.c, &self.d]
            .iter()
            .all(|v| v.iter().all(|&x| x > 0.0))
    }

    /// Checks that every vector has the length its index range implies.
    pub fn check_shapes(&self) -> Result<(), RecursionError> {
        let n = self.n();
        check_n(n)?;
        check_len("a", &self.a, n)?;
        check_len("b", &self.b, n - 1)?;
        check_len("c", &self.c, n + 1)?;
        check_len("d", &self.d, n - 1)?;
        check_len("eps", &self.eps, n + 1)
    }
}

pub fn positive_part_sum(eps: &[f64]) -> f64 {
    eps.iter().map(|&e| e.max(0.0)).sum()
}

fn check_n(n: usize) -> Result<(), RecursionError> {
    if n < 3 {
        Err(RecursionError::TooSmall { n })
    } else {
        Ok(())
    }
}

fn check_len(name: &'static str, v: &[f64], expected: usize) -> Result<(), RecursionError> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(RecursionError::DimensionMismatch {
            name,
            expected,
            got: v.len(),
        })
    }
}

// out[k] = v[0] + ... + v[k-1], length v.len() + 1.
fn prefix_sums(v: &[f64], mode: Summation) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len() + 1);
    out.push(0.0);
    let mut acc = 0.0;
    let mut comp = 0.0;
    for &x in v {
        match mode {
            Summation::Plain => acc += x,
            Summation::Compensated => {
                let y = x - comp;
                let t = acc + y;
                comp = (t - acc) - y;
                acc = t;
            }
        }
        out.push(acc);
    }
    out
}

// out[k] = v[k] + ... + v[len-1], length v.len() + 1 with out[len] = 0.
fn suffix_sums(v: &[f64], mode: Summation) -> Vec<f64> {
    let rev: Vec<f64> = v.iter().rev().copied().collect();
    let mut out = prefix_sums(&rev, mode);
    out.reverse();
    out
}

/// Partial sums shared by the `a`, `b` and `eps` formulas.
struct Sums {
    /// `d_pre[k] = d[0] + ... + d[k-1]`.
    d_pre: Vec<f64>,
    /// `c_suf[k] = c[k] + ... + c[N]`, with `c_suf[N+1] = 0`.
    c_suf: Vec<f64>,
}

impl Sums {
    fn new(c: &[f64], d: &[f64], mode: Summation) -> Self {
        Self {
            d_pre: prefix_sums(d, mode),
            c_suf: suffix_sums(c, mode),
        }
    }
}

pub fn c_from_d(params: &RateParams, d: &[f64]) -> Result<Vec<f64>, RecursionError> {
    c_from_d_with(params, d, Summation::Plain)
}

pub fn c_from_d_with(
    params: &RateParams,
    d: &[f64],
    mode: Summation,
) -> Result<Vec<f64>, RecursionError> {
    let n = params.n;
    check_n(n)?;
    check_len("d", d, n - 1)?;
    let (alpha, r) = (params.alpha, params.r);
    let sqrt2r = (2.0 * r).sqrt();
    let d_pre = prefix_sums(d, mode);

    let mut c = Vec::with_capacity(n + 1);
    for i in 0..n - 1 {
        c.push(2.0 * r * (alpha * d_pre[i + 1] - d[i] + alpha));
    }
    c.push(2.0 * r * (1.0 + d_pre[n - 1] + (alpha - 1.0) / sqrt2r));
    c.push(sqrt2r);
    Ok(c)
}

pub fn ab_from_cd(
    params: &RateParams,
    c: &[f64],
    d: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), RecursionError> {
    ab_from_cd_with(params, c, d, Summation::Plain)
}

pub fn ab_from_cd_with(
    params: &RateParams,
    c: &[f64],
    d: &[f64],
    mode: Summation,
) -> Result<(Vec<f64>, Vec<f64>), RecursionError> {
    let n = params.n;
    check_n(n)?;
    check_len("c", c, n + 1)?;
    check_len("d", d, n - 1)?;
    let sums = Sums::new(c, d, mode);
    Ok(ab_with_sums(params, c, d, &sums))
}

fn ab_with_sums(params: &RateParams, c: &[f64], d: &[f64], sums: &Sums) -> (Vec<f64>, Vec<f64>) {
    let n = params.n;
    let (alpha, r) = (params.alpha, params.r);
    let inv2r = 1.0 / (2.0 * r);
    let (d_pre, c_suf) = (&sums.d_pre, &sums.c_suf);

    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n - 1];

    a[n - 1] = 1.0 - c[n] * (1.0 + d_pre[n - 1]);

    let cl = c[n - 1];
    let weight = cl * (1.0 + d_pre[n - 2]);
    a[n - 2] = (cl * cl * inv2r + c[n - 2] * cl * inv2r - a[n - 1] - (1.0 + alpha) * weight) / alpha;
    b[n - 2] = ((alpha - 1.0) * inv2r * cl * cl - c[n - 2] * cl * inv2r - (alpha - 1.0) * a[n - 1]
        + weight)
        / alpha;

    for i in (0..n.saturating_sub(2)).rev() {
        let cn = c[i + 1];
        let weight = cn * (1.0 + d_pre[i]);
        let tail = d[i + 1] * c_suf[i + 3];
        let carry = b[i + 1] * (2.0 * alpha - 1.0);
        a[i] = (cn * cn * inv2r + c[i] * cn * inv2r - a[i + 1] - (1.0 + alpha) * weight - tail + carry)
            / alpha;
        b[i] = ((alpha - 1.0) * inv2r * cn * cn - c[i] * cn * inv2r - (alpha - 1.0) * a[i + 1] + weight
            - (alpha - 1.0) * tail
            + (alpha - 1.0) * carry)
            / alpha;
    }
    (a, b)
}

pub fn eps_from(
    params: &RateParams,
    a: &[f64],
    b: &[f64],
    c: &[f64],
    d: &[f64],
) -> Result<Vec<f64>, RecursionError> {
    eps_from_with(params, a, b, c, d, Summation::Plain)
}

pub fn eps_from_with(
    params: &RateParams,
    a: &[f64],
    b: &[f64],
    c: &[f64],
    d: &[f64],
    mode: Summation,
) -> Result<Vec<f64>, RecursionError> {
    let n = params.n;
    check_n(n)?;
    check_len("a", a, n)?;
    check_len("b", b, n - 1)?;
    check_len("c", c, n + 1)?;
    check_len("d", d, n - 1)?;
    let sums = Sums::new(c, d, mode);
    Ok(eps_with_sums(params, a, b, c, d, &sums))
}

fn eps_with_sums(params: &RateParams, a: &[f64], b: &[f64], c: &[f64], d: &[f64], sums: &Sums) -> Vec<f64> {
    let n = params.n;
    let alpha = params.alpha;
    let inv2r = 1.0 / (2.0 * params.r);
    let (d_pre, c_suf) = (&sums.d_pre, &sums.c_suf);

    let mut eps = Vec::with_capacity(n + 1);
    let head = d[0] * c_suf[2];
    eps.push(a[0] + head - b[0] - c[0]);
    for i in 1..n - 1 {
        eps.push(b[i - 1] + a[i] + d[i] * c_suf[i + 2] - a[i - 1] - b[i] - c[i] * (1.0 + d_pre[i - 1]));
    }
    eps.push(b[n - 2] + a[n - 1] - a[n - 2] - c[n - 1] * (1.0 + d_pre[n - 2]));
    eps.push(-c[0] - a[0] - head + (2.0 * alpha - 1.0) * b[0] + c[0] * c[0] * inv2r);
    eps
}

/// Residuals `eps(d)`, the system whose zero is a certificate.
pub fn residual(params: &RateParams, d: &[f64]) -> Result<Vec<f64>, RecursionError> {
    residual_with(params, d, Summation::Plain)
}

pub fn residual_with(params: &RateParams, d: &[f64], mode: Summation) -> Result<Vec<f64>, RecursionError> {
    Ok(derive_full_with(params, d, mode)?.eps)
}

pub fn derive_full(params: &RateParams, d: &[f64]) -> Result<FullCertificate, RecursionError> {
    derive_full_with(params, d, Summation::Plain)
}

pub fn derive_full_with(
    params: &RateParams,
    d: &[f64],
    mode: Summation,
) -> Result<FullCertificate, RecursionError> {
    let c = c_from_d_with(params, d, mode)?;
    let sums = Sums::new(&c, d, mode);
    let (a, b) = ab_with_sums(params, &c, d, &sums);
    let eps = eps_with_sums(params, &a, &b, &c, d, &sums);
    Ok(FullCertificate {
        params: *params,
        a,
        b,
        c,
        d: d.to_vec(),
        eps,
    })
}
