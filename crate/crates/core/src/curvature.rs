//! Closed-form curvature of `g = e^{2 phi} * delta`.
//!
//! For a radial factor the Ricci endomorphism has two eigenvalues, radial
//! (multiplicity 1) and tangential (multiplicity n-1). With `p1 = phi'`,
//! `p2 = phi''`, `q = p1/r` (its limit `p2` at the origin; `q = 0` on the
//! periodic chart) and `w = e^{-2 phi}`:
//!
//! ```text
//! R      = -w (2(n-1)(p2 + (n-1) q) + (n-1)(n-2) p1^2)
//! mu_rad = -w (n-1)(p2 + q)
//! mu_tan = -w (p2 + (2n-3) q + (n-2) p1^2)
//! ```
//!
//! The flat components of the Ricci tensor (needed by the covariant
//! calculus) are the same expressions without the `w` factor.

use alloc::vec;
use alloc::vec::Vec;

use crate::field::{Chart, ConformalField, Parity};
use crate::math;

/// Scalar curvature, Ricci eigenvalues, and derived invariants on the grid.
#[derive(Clone, Debug)]
pub struct CurvatureState {
    /// Scalar curvature.
    pub r: Vec<f64>,
    /// Radial Ricci eigenvalue (with respect to `g`), multiplicity 1.
    pub mu_rad: Vec<f64>,
    /// Tangential Ricci eigenvalue, multiplicity n-1.
    pub mu_tan: Vec<f64>,
    /// `|Rc|^2` in the metric `g`.
    pub ric_norm_sq: Vec<f64>,
    /// `tr(Rc^3)` in the metric `g`.
    pub tr_ric_cubed: Vec<f64>,
    pub lambda_min: Vec<f64>,
    pub lambda_max: Vec<f64>,
    /// Pointwise pinching ratio `lambda_min / R` where `R > 0`.
    pub eps_pt: Vec<Option<f64>>,
    /// Flat chart components of the Ricci tensor: axial `a` and transverse
    /// `b`, so `mu_rad = w a`, `mu_tan = w b`.
    pub axial_flat: Vec<f64>,
    pub trans_flat: Vec<f64>,
    /// `w = e^{-2 phi}` per node.
    pub weight: Vec<f64>,
}

/// First and second chart derivatives of `phi` plus the `phi'/r` limit term.
pub(crate) fn phi_derivatives(field: &ConformalField) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let p1 = field.phi_deriv1();
    let p2 = field.phi_deriv2();
    let nn = field.nodes();
    let mut q = vec![0.0; nn];
    if field.chart.is_radial() {
        q[0] = p2[0];
        for j in 1..nn {
            q[j] = p1[j] / field.radius(j);
        }
    }
    (p1, p2, q)
}

/// Scalar curvature per node from the conformal transformation law.
pub fn scalar_curvature(field: &ConformalField) -> Vec<f64> {
    let (p1, p2, q) = phi_derivatives(field);
    let n = field.n as f64;
    let mut out = vec![0.0; field.nodes()];
    for j in 0..field.nodes() {
        let lap = p2[j] + (n - 1.0) * q[j];
        let inner = 2.0 * (n - 1.0) * lap + (n - 1.0) * (n - 2.0) * p1[j] * p1[j];
        let w = math::exp(-2.0 * field.phi[j]);
        out[j] = w * (0.0 - inner);
    }
    out
}

/// Full curvature state: eigenvalues and derived scalars.
pub fn ricci_eigenvalues(field: &ConformalField) -> CurvatureState {
    let (p1, p2, q) = phi_derivatives(field);
    let n = field.n as f64;
    let nn = field.nodes();
    let mut st = CurvatureState {
        r: vec![0.0; nn],
        mu_rad: vec![0.0; nn],
        mu_tan: vec![0.0; nn],
        ric_norm_sq: vec![0.0; nn],
        tr_ric_cubed: vec![0.0; nn],
        lambda_min: vec![0.0; nn],
        lambda_max: vec![0.0; nn],
        eps_pt: vec![None; nn],
        axial_flat: vec![0.0; nn],
        trans_flat: vec![0.0; nn],
        weight: vec![0.0; nn],
    };
    for j in 0..nn {
        let w = math::exp(-2.0 * field.phi[j]);
        let a = 0.0 - (n - 1.0) * (p2[j] + q[j]);
        let b = 0.0 - (p2[j] + (2.0 * n - 3.0) * q[j] + (n - 2.0) * p1[j] * p1[j]);
        let mur = w * a;
        let mut_ = w * b;
        let r = mur + (n - 1.0) * mut_;
        st.weight[j] = w;
        st.axial_flat[j] = a;
        st.trans_flat[j] = b;
        st.mu_rad[j] = mur;
        st.mu_tan[j] = mut_;
        st.r[j] = r;
        st.ric_norm_sq[j] = mur * mur + (n - 1.0) * mut_ * mut_;
        st.tr_ric_cubed[j] = mur * mur * mur + (n - 1.0) * mut_ * mut_ * mut_;
        st.lambda_min[j] = math::min(mur, mut_);
        st.lambda_max[j] = math::max(mur, mut_);
        st.eps_pt[j] = if r > 0.0 { Some(st.lambda_min[j] / r) } else { None };
    }
    st
}

/// Christoffel symbols of `g = e^{2 phi} delta` at one node, in flat chart
/// coordinates adapted to the axis through that node.
#[derive(Clone, Debug)]
pub struct Christoffel {
    pub n: usize,
    coeffs: Vec<f64>,
}

impl Christoffel {
    /// `Gamma^k_ij = d_i delta_jk + d_j delta_ik - d_k delta_ij` for the
    /// gradient vector `d` of `phi`.
    pub fn from_gradient(d: &[f64]) -> Self {
        let n = d.len();
        let mut coeffs = vec![0.0; n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = 0.0;
                    if i == k {
                        v += d[j];
                    }
                    if j == k {
                        v += d[i];
                    }
                    if i == j {
                        v -= d[k];
                    }
                    coeffs[(k * n + i) * n + j] = v;
                }
            }
        }
        Christoffel { n, coeffs }
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.coeffs[(k * self.n + i) * self.n + j]
    }
}

/// Christoffel symbols at a node: the gradient of `phi` points along the
/// first axis with magnitude `phi'(r)`.
pub fn christoffel(field: &ConformalField, node: usize) -> Christoffel {
    let p1 = if field.chart == Chart::StereographicSphere {
        field.phi_deriv1()[node]
    } else {
        field.deriv1(&field.phi, Parity::Even)[node]
    };
    let mut d = vec![0.0; field.n];
    d[0] = p1;
    Christoffel::from_gradient(&d)
}
