//! Pointwise eigenvalue algebra: the cubic functional `J`, its triple-sum
//! decomposition, the pinched lower bound, the `A_ij` spectra, the
//! comparison ODE for the pinching quantity, and a deterministic fuzzing
//! harness over random eigenvalue tuples.
//!
//! Numerical routes are kept separate on purpose:
//! * [`j_functional`] evaluates the displayed cubic formula;
//! * [`triple_sum_identity`] compares that formula against the triple-sum
//!   decomposition, both sides in double-double arithmetic so the check
//!   stays meaningful on near-Einstein tuples where the displayed form
//!   cancels catastrophically;
//! * [`j_lower_bound_check`] evaluates both sides of the inequality in
//!   difference form (the form the proof actually bounds), which vanishes
//!   identically on equal-eigenvalue tuples.
//!
//! Reported near-violations can be re-checked in exact rational arithmetic;
//! the fuzz suite does this automatically before counting a violation.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{FromPrimitive, Signed, Zero};
use rand_core::{RngCore, SeedableRng};

use crate::math;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PinchError {
    #[error("dimension must be at least 3, got {0}")]
    DimensionTooSmall(usize),
    #[error("expected {expected} eigenvalues, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("eigenvalues must be finite")]
    NonFinite,
    #[error("pinching hypothesis violated: lambda_min < eps R or R <= 0")]
    HypothesisViolated,
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

/// Sorted tuple of Ricci eigenvalues with derived scalar invariants.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenTuple {
    n: usize,
    lambda: Vec<f64>,
    pub r: f64,
    pub ric_norm_sq: f64,
    pub tr_cubed: f64,
}

impl EigenTuple {
    pub fn new(n: usize, lambda: &[f64]) -> Result<Self, PinchError> {
        if n < 3 {
            return Err(PinchError::DimensionTooSmall(n));
        }
        if lambda.len() != n {
            return Err(PinchError::WrongLength { expected: n, got: lambda.len() });
        }
        if lambda.iter().any(|v| !v.is_finite()) {
            return Err(PinchError::NonFinite);
        }
        let mut lambda = lambda.to_vec();
        lambda.sort_by(f64::total_cmp);
        let (mut r, mut rn2, mut tr3) = (0.0, 0.0, 0.0);
        for &l in &lambda {
            r += l;
            rn2 += l * l;
            tr3 += l * l * l;
        }
        Ok(EigenTuple { n, lambda, r, ric_norm_sq: rn2, tr_cubed: tr3 })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Eigenvalues in ascending order.
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// `|Rc|^2 - R^2/n` evaluated as the pair-difference sum
    /// `(1/n) sum_{i<j} (lambda_i - lambda_j)^2` (exactly zero on equal
    /// tuples).
    pub fn trace_free_norm_sq(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                let d = self.lambda[i] - self.lambda[j];
                s += d * d;
            }
        }
        s / self.n as f64
    }
}

/// `J = 2/(n-2) (n(n-1) tr(Rc^3) + R^3 - (2n-1) R |Rc|^2)`.
pub fn j_functional(t: &EigenTuple) -> f64 {
    let n = t.n as f64;
    2.0 / (n - 2.0)
        * (n * (n - 1.0) * t.tr_cubed + t.r * t.r * t.r - (2.0 * n - 1.0) * t.r * t.ric_norm_sq)
}

/// `J` through the triple-sum decomposition; vanishes identically on equal
/// tuples and is well conditioned near them.
pub fn j_from_triple_sum(t: &EigenTuple) -> f64 {
    let n = t.n as f64;
    2.0 / (n - 2.0) * 2.0 * triple_sum(&t.lambda)
}

fn triple_sum(l: &[f64]) -> f64 {
    let n = l.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let (a, b, c) = (l[i], l[j], l[k]);
                s += c * (c - a) * (c - b) + b * (b - a) * (b - c) + a * (a - c) * (a - b);
            }
        }
    }
    s
}

// ---------------------------------------------------------------------------
// double-double helpers (Dekker/Bailey)

#[derive(Clone, Copy, Debug)]
struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    let c = 134217729.0 * a; // 2^27 + 1
    let hi = c - (c - a);
    (hi, a - hi)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    (p, ((ah * bh - p) + ah * bl + al * bh) + al * bl)
}

impl Dd {
    fn from(v: f64) -> Self {
        Dd { hi: v, lo: 0.0 }
    }

    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (hi, lo) = quick_two_sum(s, e + self.lo + o.lo);
        Dd { hi, lo }
    }

    fn sub(self, o: Dd) -> Dd {
        self.add(Dd { hi: -o.hi, lo: -o.lo })
    }

    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let (hi, lo) = quick_two_sum(p, e + self.hi * o.lo + self.lo * o.hi);
        Dd { hi, lo }
    }

    fn scale(self, c: f64) -> Dd {
        self.mul(Dd::from(c))
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

/// Both sides of the triple-sum identity `((n-2)/2) J = 2 sum_{i<j<k}(...)`
/// plus their relative gap, evaluated in double-double arithmetic.
pub struct TripleSumCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_gap: f64,
}

pub fn triple_sum_identity(t: &EigenTuple) -> TripleSumCheck {
    let n = t.n as f64;
    // lhs: ((n-2)/2) * J(displayed) = n(n-1) tr3 + R^3 - (2n-1) R rn2
    let (mut r, mut rn2, mut tr3) = (Dd::from(0.0), Dd::from(0.0), Dd::from(0.0));
    for &l in t.lambda() {
        let ld = Dd::from(l);
        r = r.add(ld);
        rn2 = rn2.add(ld.mul(ld));
        tr3 = tr3.add(ld.mul(ld).mul(ld));
    }
    let lhs = tr3
        .scale(n * (n - 1.0))
        .add(r.mul(r).mul(r))
        .sub(r.mul(rn2).scale(2.0 * n - 1.0));
    // rhs: 2 sum over triples
    let l = t.lambda();
    let mut rhs = Dd::from(0.0);
    for i in 0..t.n {
        for j in i + 1..t.n {
            for k in j + 1..t.n {
                let (a, b, c) = (Dd::from(l[i]), Dd::from(l[j]), Dd::from(l[k]));
                let term = c
                    .mul(c.sub(a))
                    .mul(c.sub(b))
                    .add(b.mul(b.sub(a)).mul(b.sub(c)))
                    .add(a.mul(a.sub(c)).mul(a.sub(b)));
                rhs = rhs.add(term);
            }
        }
    }
    let rhs = rhs.scale(2.0);
    let (lv, rv) = (lhs.value(), rhs.value());
    TripleSumCheck { lhs: lv, rhs: rv, rel_gap: math::abs(lv - rv) / (1.0 + math::abs(lv)) }
}

/// Margin of the pinched lower bound `J >= (4/3) n eps R (|Rc|^2 - R^2/n)`.
/// Both sides use the difference forms, so equal-eigenvalue tuples give an
/// exact zero. Errors if `R <= 0` or `lambda_min < eps R`.
pub fn j_lower_bound_check(t: &EigenTuple, eps: f64) -> Result<f64, PinchError> {
    if !(eps > 0.0) {
        return Err(PinchError::InvalidParameter("eps must be positive"));
    }
    if !(t.r > 0.0) || t.lambda[0] < eps * t.r {
        return Err(PinchError::HypothesisViolated);
    }
    let n = t.n as f64;
    let j = j_from_triple_sum(t);
    let rhs = (4.0 / 3.0) * n * eps * t.r * t.trace_free_norm_sq();
    Ok(j - rhs)
}

/// Diagonal of the curvature form `A_ij`, both as literally assembled from
/// the displayed `B_ij` plus correction term, and via the quoted eigenvalue
/// formula `nu_i`. The two disagree on generic tuples (and the literal
/// diagonal can be negative); both are reported, nonnegativity is asserted
/// only for `nu_i`.
#[derive(Clone, Debug)]
pub struct AMatrixDiag {
    pub literal: Vec<f64>,
    pub nu: Vec<f64>,
    pub max_abs_diff: f64,
}

pub fn a_matrix_diagonal(t: &EigenTuple) -> AMatrixDiag {
    let n = t.n as f64;
    let denom = 2.0 * (n - 1.0) * (n - 2.0);
    // literal: A_ii = B_ii/(2(n-1)(n-2)) + (n lambda_i^2 - R lambda_i)/(2(n-2)),
    // which collapses to ((n-1)|Rc|^2 + R lambda_i - R^2) / (2(n-1)(n-2)).
    let literal: Vec<f64> = t
        .lambda
        .iter()
        .map(|&li| ((n - 1.0) * t.ric_norm_sq + t.r * li - t.r * t.r) / denom)
        .collect();
    let nu: Vec<f64> = (0..t.n)
        .map(|i| {
            let mut s = 0.0;
            for k in 0..t.n {
                for l in 0..k {
                    if k != i && l != i {
                        let d = t.lambda[k] - t.lambda[l];
                        s += d * d;
                    }
                }
            }
            s / denom
        })
        .collect();
    let mut max_abs_diff = 0.0f64;
    for i in 0..t.n {
        max_abs_diff = math::max(max_abs_diff, math::abs(literal[i] - nu[i]));
    }
    AMatrixDiag { literal, nu, max_abs_diff }
}

/// Numeric-vs-closed-form comparison of the reaction ODE
/// `f' = -n eps f^{1 + 1/delta}`, `delta = n eps / 3`.
#[derive(Clone, Debug)]
pub struct OdeComparison {
    pub ts: Vec<f64>,
    pub numeric: Vec<f64>,
    pub closed: Vec<f64>,
    pub max_rel_err: f64,
    /// initial data was admissible (`f0 <= (3 t0)^{-delta}`) and the decay
    /// bound `f(t) <= (3t)^{-delta}` held along the whole trajectory
    pub bound_holds: bool,
    pub delta: f64,
}

/// Integrates the comparison ODE with adaptive classical RK4 and checks it
/// against `f(t) = (3(t-t0) + f0^{-1/delta})^{-delta}`.
pub fn ode_comparison(
    eps: f64,
    n: usize,
    f0: f64,
    t0: f64,
    t1: f64,
    samples: usize,
) -> Result<OdeComparison, PinchError> {
    if n < 3 {
        return Err(PinchError::DimensionTooSmall(n));
    }
    if !(eps > 0.0) {
        return Err(PinchError::InvalidParameter("eps must be positive"));
    }
    if !(f0 >= 0.0) {
        return Err(PinchError::InvalidParameter("f0 must be nonnegative"));
    }
    if !(t0 > 0.0 && t1 > t0) {
        return Err(PinchError::InvalidParameter("need 0 < t0 < t1"));
    }
    let nf = n as f64;
    let delta = nf * eps / 3.0;
    let closed_at = |t: f64| -> f64 {
        if f0 == 0.0 {
            0.0
        } else {
            math::powf(3.0 * (t - t0) + math::powf(f0, -1.0 / delta), -delta)
        }
    };
    let rate_coef = nf * eps;
    let deriv = |f: f64| -> f64 {
        if f <= 0.0 {
            0.0
        } else {
            -rate_coef * math::powf(f, 1.0 + 1.0 / delta)
        }
    };
    // log-spaced sample times
    let ts: Vec<f64> = (0..samples)
        .map(|k| t0 * math::powf(t1 / t0, k as f64 / (samples as f64 - 1.0)))
        .collect();
    let mut numeric = vec![0.0; samples];
    let mut f = f0;
    let mut t = t0;
    numeric[0] = f;
    for (k, &target) in ts.iter().enumerate().skip(1) {
        while t < target {
            let rate = rate_coef * if f > 0.0 { math::powf(f, 1.0 / delta) } else { 0.0 };
            let mut dt = if rate > 0.0 { 0.005 / rate } else { target - t };
            dt = math::min(dt, target - t);
            let k1 = deriv(f);
            let k2 = deriv(f + 0.5 * dt * k1);
            let k3 = deriv(f + 0.5 * dt * k2);
            let k4 = deriv(f + dt * k3);
            f += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t += dt;
        }
        numeric[k] = f;
    }
    let closed: Vec<f64> = ts.iter().map(|&t| closed_at(t)).collect();
    let mut max_rel_err = 0.0f64;
    for k in 0..samples {
        let denom = if closed[k] == 0.0 { 1.0 } else { closed[k] };
        max_rel_err = math::max(max_rel_err, math::abs(numeric[k] - closed[k]) / denom);
    }
    let admissible = f0 <= math::powf(3.0 * t0, -delta) * (1.0 + 1e-12);
    let bound_holds = admissible
        && (0..samples).all(|k| numeric[k] <= math::powf(3.0 * ts[k], -delta) * (1.0 + 1e-9));
    Ok(OdeComparison { ts, numeric, closed, max_rel_err, bound_holds, delta })
}

// ---------------------------------------------------------------------------
// fuzzing

#[derive(Clone, Debug)]
pub struct FuzzConfig {
    pub samples_per_dim: u64,
    pub dims: Vec<usize>,
    pub seed: u64,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig { samples_per_dim: 1_000_000, dims: vec![3, 4, 5, 6], seed: 42 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    TripleSumGap,
    LowerBoundMargin,
    BTrace,
    Homogeneity,
    NuNegative,
    EqualTupleMarginNonzero,
    PermutationMismatch,
}

#[derive(Clone, Debug)]
pub struct Violation {
    pub kind: ViolationKind,
    pub n: usize,
    pub lambda: Vec<f64>,
    pub value: f64,
}

/// Merged outcome of a fuzz run.
#[derive(Clone, Debug, Default)]
pub struct FuzzReport {
    pub samples: u64,
    pub violations: Vec<Violation>,
    /// floating-point near-violations cleared by the exact rational recheck
    pub fp_cleared: u64,
    pub worst_triple_gap: f64,
    /// most negative normalized margin slack seen: `margin / (1 + |J|)`
    pub worst_margin_rel: f64,
    /// literal A_ii went negative somewhere (expected; reported, not a bug)
    pub literal_a_negative_seen: bool,
}

impl FuzzReport {
    pub fn merge(&mut self, other: FuzzReport) {
        self.samples += other.samples;
        self.violations.extend(other.violations);
        self.fp_cleared += other.fp_cleared;
        self.worst_triple_gap = math::max(self.worst_triple_gap, other.worst_triple_gap);
        self.worst_margin_rel = math::min(self.worst_margin_rel, other.worst_margin_rel);
        self.literal_a_negative_seen |= other.literal_a_negative_seen;
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn mix_seed(seed: u64, chunk: u64) -> u64 {
    // splitmix64 step
    let mut z = seed ^ (chunk.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn uniform(rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Draws one pinched tuple: log-uniform magnitude, pinching ratio targeted
/// into `[1/(10n), 1/n]` by blending toward the Einstein direction.
fn draw_tuple(rng: &mut rand_chacha::ChaCha8Rng, n: usize) -> (Vec<f64>, f64) {
    let scale = math::powf(10.0, 6.0 * uniform(rng) - 3.0);
    let nf = n as f64;
    let mut mu: Vec<f64> = (0..n).map(|_| 0.05 + 0.95 * uniform(rng)).collect();
    mu.sort_by(f64::total_cmp);
    let sum: f64 = mu.iter().sum();
    let mean = sum / nf;
    let lo = 1.0 / (10.0 * nf);
    let target = lo + uniform(rng) * (1.0 / nf - lo);
    let ratio0 = mu[0] / sum;
    let c = if ratio0 < target {
        ((target - ratio0) / (1.0 / nf - ratio0)).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let lambda: Vec<f64> = mu.iter().map(|&m| ((1.0 - c) * m + c * mean) * scale).collect();
    let r: f64 = lambda.iter().sum();
    let eps = (lambda[0] / r) * (1.0 - 1e-12);
    (lambda, eps)
}

/// Exact-rational margin of the lower bound (displayed formulas, no
/// floating point). Inputs are binary floats, hence exact rationals.
fn exact_margin_nonnegative(lambda: &[f64], eps: f64) -> bool {
    type Q = Ratio<BigInt>;
    let q = |v: f64| Q::from_f64(v).unwrap_or_else(Q::zero);
    let n = lambda.len();
    let nf = q(n as f64);
    let (mut r, mut rn2, mut tr3) = (Q::zero(), Q::zero(), Q::zero());
    for &l in lambda {
        let lq = q(l);
        r += lq.clone();
        rn2 += lq.clone() * lq.clone();
        tr3 += lq.clone() * lq.clone() * lq;
    }
    let one = Q::from_integer(BigInt::from(1));
    let two = Q::from_integer(BigInt::from(2));
    let j = two.clone() / (nf.clone() - two.clone())
        * (nf.clone() * (nf.clone() - one.clone()) * tr3 + r.clone() * r.clone() * r.clone()
            - (two.clone() * nf.clone() - one.clone()) * r.clone() * rn2.clone());
    let deficit = rn2 - r.clone() * r.clone() / nf.clone();
    let rhs = q(4.0) / q(3.0) * nf * q(eps) * r * deficit;
    !(j - rhs).is_negative()
}

/// One deterministic fuzz chunk; results are independent of how chunks are
/// scheduled because each chunk derives its own stream from `(seed, index)`.
pub fn fuzz_chunk(cfg: &FuzzConfig, chunk_index: u64, chunk_count: u64) -> FuzzReport {
    let mut report = FuzzReport { worst_margin_rel: f64::INFINITY, ..Default::default() };
    let per = cfg.samples_per_dim / chunk_count;
    let extra = cfg.samples_per_dim % chunk_count;
    let count = per + u64::from(chunk_index < extra);
    for &n in &cfg.dims {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(mix_seed(
            cfg.seed,
            chunk_index.wrapping_mul(1009).wrapping_add(n as u64),
        ));
        for k in 0..count {
            let (lambda, eps) = if k % 1000 == 999 {
                // exact Einstein tuple: margin must be exactly zero
                let c = math::powf(10.0, 6.0 * uniform(&mut rng) - 3.0);
                (vec![c; n], (1.0 / n as f64) * (1.0 - 1e-12))
            } else {
                draw_tuple(&mut rng, n)
            };
            let equal_tuple = lambda.windows(2).all(|w| w[0] == w[1]);
            let t = EigenTuple::new(n, &lambda).unwrap();
            check_tuple(&t, eps, equal_tuple, &mut report);
            report.samples += 1;
        }
    }
    report
}

fn check_tuple(t: &EigenTuple, eps: f64, equal_tuple: bool, report: &mut FuzzReport) {
    let n = t.n;
    let nf = n as f64;
    // triple-sum identity (double-double routes)
    let ts = triple_sum_identity(t);
    report.worst_triple_gap = math::max(report.worst_triple_gap, ts.rel_gap);
    if ts.rel_gap > 1e-12 {
        report.violations.push(Violation {
            kind: ViolationKind::TripleSumGap,
            n,
            lambda: t.lambda.clone(),
            value: ts.rel_gap,
        });
    }
    // pinched lower bound
    match j_lower_bound_check(t, eps) {
        Ok(margin) => {
            let j = j_from_triple_sum(t);
            let rel = margin / (1.0 + math::abs(j));
            report.worst_margin_rel = math::min(report.worst_margin_rel, rel);
            if margin < -1e-9 * (1.0 + math::abs(j)) {
                if exact_margin_nonnegative(&t.lambda, eps) {
                    report.fp_cleared += 1;
                } else {
                    report.violations.push(Violation {
                        kind: ViolationKind::LowerBoundMargin,
                        n,
                        lambda: t.lambda.clone(),
                        value: margin,
                    });
                }
            }
            if equal_tuple && margin != 0.0 {
                report.violations.push(Violation {
                    kind: ViolationKind::EqualTupleMarginNonzero,
                    n,
                    lambda: t.lambda.clone(),
                    value: margin,
                });
            }
        }
        Err(_) => {
            // constructed tuples always satisfy the hypothesis; reaching
            // this is itself a violation of the generator contract
            report.violations.push(Violation {
                kind: ViolationKind::LowerBoundMargin,
                n,
                lambda: t.lambda.clone(),
                value: f64::NAN,
            });
        }
    }
    // B trace in the eigenbasis
    let mut tr = 0.0;
    for &li in t.lambda() {
        tr += (nf - 1.0) * t.ric_norm_sq + nf * t.r * li - nf * (nf - 1.0) * li * li
            - t.r * t.r;
    }
    let bound = 1e-10 * (1.0 + t.r * t.r) * (1.0 + t.ric_norm_sq);
    if math::abs(tr) > bound {
        report.violations.push(Violation {
            kind: ViolationKind::BTrace,
            n,
            lambda: t.lambda.clone(),
            value: tr,
        });
    }
    // homogeneity J(c lambda) = c^3 J(lambda); tolerance scaled by the term
    // magnitudes since the displayed form cancels near Einstein tuples
    let j_plain = j_functional(t);
    let term_scale = nf * (nf - 1.0) * math::abs(t.tr_cubed)
        + math::abs(t.r * t.r * t.r)
        + (2.0 * nf - 1.0) * math::abs(t.r) * t.ric_norm_sq
        + 1.0;
    for &c in &[2.0, 10.0, 1.0 / 3.0] {
        let scaled: Vec<f64> = t.lambda.iter().map(|&l| c * l).collect();
        let tc = EigenTuple::new(n, &scaled).unwrap();
        let diff = j_functional(&tc) - c * c * c * j_plain;
        if math::abs(diff) > 1e-12 * c * c * c * term_scale {
            report.violations.push(Violation {
                kind: ViolationKind::Homogeneity,
                n,
                lambda: t.lambda.clone(),
                value: diff,
            });
        }
    }
    // permutation invariance: the constructor canonicalizes by sorting, so
    // a reversed copy must reproduce J bitwise
    let reversed: Vec<f64> = t.lambda.iter().rev().copied().collect();
    let tr_rev = EigenTuple::new(n, &reversed).unwrap();
    if j_functional(&tr_rev) != j_plain {
        report.violations.push(Violation {
            kind: ViolationKind::PermutationMismatch,
            n,
            lambda: t.lambda.clone(),
            value: j_functional(&tr_rev) - j_plain,
        });
    }
    // nu_i is a sum of squares; the literal A_ii may go negative
    let a = a_matrix_diagonal(t);
    for &v in &a.nu {
        if v < 0.0 {
            report.violations.push(Violation {
                kind: ViolationKind::NuNegative,
                n,
                lambda: t.lambda.clone(),
                value: v,
            });
        }
    }
    if a.literal.iter().any(|&v| v < 0.0) {
        report.literal_a_negative_seen = true;
    }
}

/// Sequential fuzz run over all chunks (deterministic for a fixed config).
pub fn fuzz_suite(cfg: &FuzzConfig, chunk_count: u64) -> FuzzReport {
    let mut report = FuzzReport { worst_margin_rel: f64::INFINITY, ..Default::default() };
    for chunk in 0..chunk_count {
        report.merge(fuzz_chunk(cfg, chunk, chunk_count));
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tup(n: usize, l: &[f64]) -> EigenTuple {
        EigenTuple::new(n, l).unwrap()
    }

    #[test]
    fn j_examples() {
        assert_eq!(j_functional(&tup(3, &[1.0, 1.0, 2.0])), 8.0);
        assert_eq!(j_functional(&tup(3, &[1.0, 2.0, 3.0])), 24.0);
        assert_eq!(j_functional(&tup(4, &[2.0, 2.0, 2.0, 2.0])), 0.0);
        // triple-sum route agrees on the integer examples
        assert_eq!(j_from_triple_sum(&tup(3, &[1.0, 1.0, 2.0])), 8.0);
        assert_eq!(j_from_triple_sum(&tup(3, &[1.0, 2.0, 3.0])), 24.0);
    }

    #[test]
    fn triple_sum_examples() {
        let c = triple_sum_identity(&tup(3, &[1.0, 1.0, 2.0]));
        assert_eq!(c.lhs, 4.0);
        assert_eq!(c.rhs, 4.0);
        let c = triple_sum_identity(&tup(3, &[1.0, 2.0, 3.0]));
        assert_eq!(c.lhs, 12.0);
        assert_eq!(c.rhs, 12.0);
        let c = triple_sum_identity(&tup(5, &[0.4, 0.4, 0.4, 0.4, 0.4]));
        assert!(c.rel_gap < 1e-30);
    }

    #[test]
    fn lower_bound_examples() {
        // n=3, (1,2,3), eps = 1/6: J = 24, rhs = 8, margin = 16
        let m = j_lower_bound_check(&tup(3, &[1.0, 2.0, 3.0]), 1.0 / 6.0).unwrap();
        assert!((m - 16.0).abs() < 1e-12);
        // n=3, (1,1,2), eps = 1/4: margin = 16/3
        let m = j_lower_bound_check(&tup(3, &[1.0, 1.0, 2.0]), 0.25).unwrap();
        assert!((m - 16.0 / 3.0).abs() < 1e-12);
        // equal eigenvalues: exactly zero
        let m = j_lower_bound_check(&tup(4, &[0.7, 0.7, 0.7, 0.7]), 0.2).unwrap();
        assert_eq!(m, 0.0);
        // hypothesis violation
        assert!(matches!(
            j_lower_bound_check(&tup(3, &[0.1, 2.0, 3.0]), 0.25),
            Err(PinchError::HypothesisViolated)
        ));
        assert!(matches!(
            j_lower_bound_check(&tup(3, &[-1.0, -1.0, -1.0]), 0.25),
            Err(PinchError::HypothesisViolated)
        ));
    }

    #[test]
    fn a_matrix_examples() {
        let a = a_matrix_diagonal(&tup(3, &[1.0, 1.0, 2.0]));
        assert_eq!(a.nu, vec![0.25, 0.25, 0.0]);
        assert_eq!(a.literal, vec![0.0, 0.0, 1.0]);
        assert!(a.max_abs_diff > 0.2);
        // Einstein: both vanish
        let a = a_matrix_diagonal(&tup(5, &[1.5; 5].to_vec().as_slice()));
        assert!(a.literal.iter().all(|&v| v == 0.0));
        assert!(a.nu.iter().all(|&v| v == 0.0));
        // the literal diagonal can be negative
        let a = a_matrix_diagonal(&tup(3, &[1.0, 2.0, 3.0]));
        assert!(a.literal[0] < 0.0);
        assert!(a.nu.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn ode_comparison_examples() {
        // delta = 1 (n eps = 3), f0 = 1, t0 -> 0+: f(1) = 1/4
        let c = ode_comparison(1.0, 3, 1.0, 1e-9, 1.0, 33).unwrap();
        assert!((c.delta - 1.0).abs() < 1e-15);
        let last = *c.numeric.last().unwrap();
        assert!((last - 0.25).abs() < 1e-6, "f(1) = {last}");
        assert!(c.max_rel_err < 1e-6, "err = {}", c.max_rel_err);
        // zero initial data stays zero
        let c = ode_comparison(0.5, 4, 0.0, 0.1, 10.0, 17).unwrap();
        assert!(c.numeric.iter().all(|&v| v == 0.0));
        assert!(c.closed.iter().all(|&v| v == 0.0));
        // parameter validation
        assert!(ode_comparison(-1.0, 3, 1.0, 0.1, 1.0, 9).is_err());
        assert!(ode_comparison(0.5, 3, 1.0, 0.0, 1.0, 9).is_err());
        assert!(ode_comparison(0.5, 3, -1.0, 0.1, 1.0, 9).is_err());
    }

    #[test]
    fn closed_form_inverse_power_grows_linearly() {
        // d/dt f^{-1/delta} = 3 along the closed form
        let (eps, n, f0, t0) = (0.25, 4usize, 0.4, 0.05);
        let delta = n as f64 * eps / 3.0;
        let f = |t: f64| math::powf(3.0 * (t - t0) + math::powf(f0, -1.0 / delta), -delta);
        for &t in &[0.06, 0.3, 1.7] {
            let h = 1e-6;
            let d = (math::powf(f(t + h), -1.0 / delta) - math::powf(f(t - h), -1.0 / delta))
                / (2.0 * h);
            assert!((d - 3.0).abs() < 1e-5, "d = {d}");
        }
    }

    #[test]
    fn fuzz_smoke_is_deterministic_and_clean() {
        let cfg = FuzzConfig { samples_per_dim: 4000, dims: vec![3, 4, 5, 6], seed: 42 };
        let a = fuzz_suite(&cfg, 4);
        let b = fuzz_suite(&cfg, 4);
        assert!(a.passed(), "violations: {:?}", a.violations.first());
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.worst_triple_gap, b.worst_triple_gap);
        assert_eq!(a.worst_margin_rel, b.worst_margin_rel);
        assert!(a.literal_a_negative_seen);
        // chunk-split independence
        let c = fuzz_suite(&cfg, 1);
        assert_eq!(c.samples, a.samples);
    }

    #[test]
    fn exact_recheck_accepts_true_margins() {
        assert!(exact_margin_nonnegative(&[1.0, 2.0, 3.0], 1.0 / 6.0));
        assert!(exact_margin_nonnegative(&[0.5, 0.5, 0.5], 1.0 / 3.0 * (1.0 - 1e-12)));
    }

    #[test]
    fn tuple_validation() {
        assert!(matches!(EigenTuple::new(2, &[1.0, 2.0]), Err(PinchError::DimensionTooSmall(2))));
        assert!(matches!(
            EigenTuple::new(3, &[1.0, 2.0]),
            Err(PinchError::WrongLength { expected: 3, got: 2 })
        ));
        assert!(matches!(
            EigenTuple::new(3, &[1.0, 2.0, f64::NAN]),
            Err(PinchError::NonFinite)
        ));
        // derived scalars consistent
        let t = tup(4, &[0.3, 1.2, 2.2, 5.0]);
        let r: f64 = t.lambda().iter().sum();
        assert!((t.r - r).abs() <= 1e-14 * (1.0 + r.abs()));
    }
}
