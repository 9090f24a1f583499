//! Independent check of a derived certificate.
//!
//! The multiplier matrix is assembled from `(a, b, c, d)`, every weighted
//! interpolation inequality is expanded symbolically over the basis
//! `(x0 - x*, g_0, ..., g_N)`, and the sum is compared coefficient by
//! coefficient against the target identity
//!
//! ```text
//! f* - f_N + r (|x0 - x*|^2 - |x0 - x* - (1/2r) sum c_i g_i|^2)
//!     + sum_{i<N} eps_i (f_i - f*) + (eps_N / 2) |g_0|^2
//! ```
//!
//! None of this reuses the elimination formulas, so agreement validates them.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::recursion::FullCertificate;

/// Row/column label of the multiplier matrix: the minimizer or an iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    Star,
    Iter(usize),
}

impl Node {
    /// Matrix position with `*` first, then iterates `0..=N`.
    pub fn position(self) -> usize {
        match self {
            Node::Star => 0,
            Node::Iter(k) => k + 1,
        }
    }

    pub fn from_position(p: usize) -> Self {
        if p == 0 {
            Node::Star
        } else {
            Node::Iter(p - 1)
        }
    }
}

/// Position of `x0 - x*` in the quadratic-form basis.
pub const H: usize = 0;

/// Position of `g_k` in the quadratic-form basis.
pub fn g(k: usize) -> usize {
    k + 1
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaMatrix {
    pub n: usize,
    pub entries: DMatrix<f64>,
}

impl LambdaMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            entries: DMatrix::zeros(n + 2, n + 2),
        }
    }

    pub fn get(&self, i: Node, j: Node) -> f64 {
        self.entries[(i.position(), j.position())]
    }

    pub fn set(&mut self, i: Node, j: Node, value: f64) {
        self.entries[(i.position(), j.position())] = value;
    }

    pub fn row_sum(&self, i: Node) -> f64 {
        self.entries.row(i.position()).sum()
    }

    pub fn column_sum(&self, j: Node) -> f64 {
        self.entries.column(j.position()).sum()
    }

    /// Whether `(i, j)` may be nonzero in the low-rank pattern.
    pub fn in_pattern(n: usize, i: Node, j: Node) -> bool {
        match (i, j) {
            (Node::Star, Node::Iter(_)) => true,
            (Node::Iter(i), Node::Iter(j)) => {
                let upper = j == i + 1 && i < n;
                let lower = i == j + 1 && j + 2 <= n;
                let block = j >= i + 2 && i + 2 <= n && j <= n;
                upper || lower || block
            }
            _ => false,
        }
    }

    /// Positions outside the pattern that hold anything other than an exact zero.
    pub fn pattern_violations(&self) -> Vec<(Node, Node)> {
        let m = self.n + 2;
        let mut out = Vec::new();
        for p in 0..m {
            for q in 0..m {
                let (i, j) = (Node::from_position(p), Node::from_position(q));
                if !Self::in_pattern(self.n, i, j) && self.entries[(p, q)] != 0.0 {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// Linear functional on `(f*, f_0, ..., f_N)` plus a symmetric bilinear form on
/// `(x0 - x*, g_0, ..., g_N)`. The form is `z^T gram z`, so an off-diagonal
/// monomial `z_p z_q` carries `2 * gram[(p, q)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticAggregate {
    pub fcoef: DVector<f64>,
    pub gram: DMatrix<f64>,
}

impl QuadraticAggregate {
    pub fn zeros(n: usize) -> Self {
        Self {
            fcoef: DVector::zeros(n + 2),
            gram: DMatrix::zeros(n + 2, n + 2),
        }
    }

    pub fn dim(&self) -> usize {
        self.fcoef.len()
    }

    /// Coefficient of the monomial `z_p z_q` in the expanded form.
    pub fn monomial(&self, p: usize, q: usize) -> f64 {
        if p == q {
            self.gram[(p, p)]
        } else {
            self.gram[(p, q)] + self.gram[(q, p)]
        }
    }

    /// Adds `w <u, v>` for basis vectors `u`, `v`.
    fn add_inner(&mut self, p: usize, q: usize, w: f64) {
        if p == q {
            self.gram[(p, p)] += w;
        } else {
            self.gram[(p, q)] += 0.5 * w;
            self.gram[(q, p)] += 0.5 * w;
        }
    }

    /// Adds `w <u, v>` for dense linear forms `u`, `v`.
    pub fn add_outer(&mut self, u: &DVector<f64>, v: &DVector<f64>, w: f64) {
        self.gram += (u * v.transpose() + v * u.transpose()) * (0.5 * w);
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let f = (&self.fcoef - &other.fcoef).amax();
        let g = (&self.gram - &other.gram).amax();
        f.max(g)
    }

    /// Largest `|gram - gram^T|` entry.
    pub fn asymmetry(&self) -> f64 {
        (&self.gram - self.gram.transpose()).amax()
    }

    pub fn symmetrize(&mut self) {
        let t = self.gram.transpose();
        self.gram = (&self.gram + t) * 0.5;
    }
}

/// Accumulates weighted interpolation inequalities in `O(1)` per term by
/// recording the contiguous gradient ranges in difference arrays.
struct Accumulator {
    n: usize,
    alpha: f64,
    agg: QuadraticAggregate,
    // ranges[(j, l)] carries the coefficient of <g_j, g_l> as a difference array in l.
    ranges: DMatrix<f64>,
}

impl Accumulator {
    fn new(n: usize, alpha: f64) -> Self {
        Self {
            n,
            alpha,
            agg: QuadraticAggregate::zeros(n),
            ranges: DMatrix::zeros(n + 1, n + 2),
        }
    }

    // w <g_j, g_l> for l in lo..hi.
    fn add_range(&mut self, j: usize, lo: usize, hi: usize, w: f64) {
        if lo < hi {
            self.ranges[(j, lo)] += w;
            self.ranges[(j, hi)] -= w;
        }
    }

    /// Adds `w * Q_ij` where
    /// `Q_ij = f_i - f_j - <g_j, x_i - x_j> - |g_i - g_j|^2 / 2`,
    /// `g_* = 0` and `x_k - x* = (x0 - x*) - alpha (g_0 + ... + g_{k-1})`.
    fn add_q(&mut self, i: Node, j: Node, w: f64) {
        let alpha = self.alpha;
        self.agg.fcoef[i.position()] += w;
        self.agg.fcoef[j.position()] -= w;

        // -<g_j, x_i - x_j>
        if let Node::Iter(jk) = j {
            match i {
                Node::Star => {
                    // x* - x_j = -(x0 - x*) + alpha sum_{l<j} g_l
                    self.agg.add_inner(g(jk), H, w);
                    self.add_range(jk, 0, jk, -alpha * w);
                }
                Node::Iter(ik) if ik < jk => {
                    // x_i - x_j = alpha sum_{l=i}^{j-1} g_l
                    self.add_range(jk, ik, jk, -alpha * w);
                }
                Node::Iter(ik) => {
                    // x_i - x_j = -alpha sum_{l=j}^{i-1} g_l
                    self.add_range(jk, jk, ik, alpha * w);
                }
            }
        }

        // -|g_i - g_j|^2 / 2
        match (i, j) {
            (Node::Iter(ik), Node::Iter(jk)) => {
                self.agg.add_inner(g(ik), g(ik), -0.5 * w);
                self.agg.add_inner(g(jk), g(jk), -0.5 * w);
                self.agg.add_inner(g(ik), g(jk), w);
            }
            (Node::Iter(k), Node::Star) | (Node::Star, Node::Iter(k)) => {
                self.agg.add_inner(g(k), g(k), -0.5 * w);
            }
            (Node::Star, Node::Star) => {}
        }
    }

    fn finish(mut self) -> QuadraticAggregate {
        for j in 0..=self.n {
            let mut run = 0.0;
            for l in 0..=self.n {
                run += self.ranges[(j, l)];
                if run != 0.0 {
                    self.agg.add_inner(g(j), g(l), run);
                }
            }
        }
        self.agg
    }
}

/// Multiplier matrix with the low-rank pattern: row `*` is `c`, the
/// superdiagonal is `a`, the subdiagonal is `b`, and `(i, j)` for `j >= i + 2`
/// is `d_i c_j`.
pub fn assemble_lambda(cert: &FullCertificate) -> LambdaMatrix {
    let n = cert.n();
    let mut lam = LambdaMatrix::zeros(n);
    for (j, &cj) in cert.c.iter().enumerate() {
        lam.set(Node::Star, Node::Iter(j), cj);
    }
    for (i, &ai) in cert.a.iter().enumerate() {
        lam.set(Node::Iter(i), Node::Iter(i + 1), ai);
    }
    for (i, &bi) in cert.b.iter().enumerate() {
        lam.set(Node::Iter(i + 1), Node::Iter(i), bi);
    }
    for (i, &di) in cert.d.iter().enumerate() {
        for j in i + 2..=n {
            lam.set(Node::Iter(i), Node::Iter(j), di * cert.c[j]);
        }
    }
    lam
}

/// Expansion of the single inequality `Q_ij` over the basis.
pub fn q_form(i: Node, j: Node, n: usize, alpha: f64) -> QuadraticAggregate {
    let mut acc = Accumulator::new(n, alpha);
    acc.add_q(i, j, 1.0);
    acc.finish()
}

/// `sum_ij lambda_ij Q_ij`, skipping zero multipliers.
pub fn aggregate(lambda: &LambdaMatrix, alpha: f64) -> QuadraticAggregate {
    let m = lambda.n + 2;
    let mut acc = Accumulator::new(lambda.n, alpha);
    for p in 0..m {
        for q in 0..m {
            let w = lambda.entries[(p, q)];
            if w != 0.0 && p != q {
                acc.add_q(Node::from_position(p), Node::from_position(q), w);
            }
        }
    }
    let mut agg = acc.finish();
    agg.symmetrize();
    agg
}

/// Expansion of the target identity including the residual terms.
pub fn rhs_with_errors(cert: &FullCertificate) -> QuadraticAggregate {
    let n = cert.n();
    let r = cert.params.r;
    let mut out = QuadraticAggregate::zeros(n);

    out.fcoef[Node::Star.position()] += 1.0;
    out.fcoef[Node::Iter(n).position()] -= 1.0;
    for (i, &e) in cert.eps.iter().take(n).enumerate() {
        out.fcoef[Node::Iter(i).position()] += e;
        out.fcoef[Node::Star.position()] -= e;
    }

    // r(|h|^2 - |h - s/2r|^2) = <h, s> - |s|^2 / 4r with s = sum c_i g_i.
    let mut s = DVector::zeros(n + 2);
    for (i, &ci) in cert.c.iter().enumerate() {
        s[g(i)] = ci;
    }
    let mut h = DVector::zeros(n + 2);
    h[H] = 1.0;
    out.add_outer(&h, &s, 1.0);
    out.add_outer(&s, &s, -1.0 / (4.0 * r));
    out.add_inner(g(0), g(0), 0.5 * cert.eps[n]);
    out
}

/// Largest coefficient mismatch between the aggregated inequalities and the
/// target identity.
pub fn oracle_check(cert: &FullCertificate) -> f64 {
    let lhs = aggregate(&assemble_lambda(cert), cert.params.alpha);
    lhs.max_abs_diff(&rhs_with_errors(cert))
}

/// Scale for the oracle tolerance, `max(1, |c|^2 / r)`.
pub fn oracle_scale(cert: &FullCertificate) -> f64 {
    let c2: f64 = cert.c.iter().map(|x| x * x).sum();
    (c2 / cert.params.r).max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaVerdict {
    pub is_cert: bool,
    pub delta: f64,
    /// Certified bound on `f_N - f*`, `r + delta / 2`.
    pub bound: f64,
}

pub fn check_delta_certificate(cert: &FullCertificate) -> DeltaVerdict {
    let delta = cert.delta();
    DeltaVerdict {
        is_cert: cert.all_positive(),
        delta,
        bound: cert.params.r + delta / 2.0,
    }
}

/// Coefficient vector `v` of the slack's linear form
/// `x0 - x* - (1/2r) sum c_i g_i`, so the slack is `r v v^T`.
pub fn slack_vector(cert: &FullCertificate) -> DVector<f64> {
    let n = cert.n();
    let mut v = DVector::zeros(n + 2);
    v[H] = 1.0;
    for (i, &ci) in cert.c.iter().enumerate() {
        v[g(i)] = -ci / (2.0 * cert.params.r);
    }
    v
}

/// Gram matrix of the slack `Z`, obtained as the difference between
/// `f* - f_N + r |x0 - x*|^2` and the target identity without residuals.
pub fn slack_gram(cert: &FullCertificate) -> DMatrix<f64> {
    let mut exact = cert.clone();
    exact.eps.iter_mut().for_each(|e| *e = 0.0);
    let target = rhs_with_errors(&exact);
    let mut full = DMatrix::zeros(cert.n() + 2, cert.n() + 2);
    full[(H, H)] = cert.params.r;
    full - target.gram
}

/// Whether `gram` equals `r v v^T` to `1e-12` relative to its largest entry.
pub fn matches_rank_one(gram: &DMatrix<f64>, v: &DVector<f64>, r: f64) -> bool {
    let expected = v * v.transpose() * r;
    let scale = expected.amax().max(1.0);
    (gram - expected).amax() <= 1e-12 * scale
}

pub fn slack_psd_check(cert: &FullCertificate) -> bool {
    slack_psd_check_gram(cert, &slack_gram(cert))
}

/// [`slack_psd_check`] against an externally supplied Gram matrix.
pub fn slack_psd_check_gram(cert: &FullCertificate, gram: &DMatrix<f64>) -> bool {
    cert.params.r > 0.0 && matches_rank_one(gram, &slack_vector(cert), cert.params.r)
}

/// Second-largest over largest eigenvalue magnitude, and the smallest eigenvalue
/// relative to the largest.
pub fn spectrum_ratios(gram: &DMatrix<f64>) -> (f64, f64) {
    let eig = SymmetricEigen::new(gram.clone());
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|x, y| y.abs().total_cmp(&x.abs()));
    let top = vals[0].abs();
    if top == 0.0 {
        return (0.0, 0.0);
    }
    let second = vals.get(1).map_or(0.0, |x| x.abs());
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    (second / top, min / top)
}

/// Per-node `row_sum - column_sum` for iterates `0..N`; equals `eps_i` for a
/// derived certificate.
pub fn row_column_balance(lambda: &LambdaMatrix) -> Vec<f64> {
    (0..lambda.n)
        .map(|i| lambda.row_sum(Node::Iter(i)) - lambda.column_sum(Node::Iter(i)))
        .collect()
}
