//! Covariant calculus for radially symmetric tensors, via Christoffel
//! contractions at axis points.
//!
//! A symmetric 2-tensor with the chart's rotational symmetry is determined by
//! its axial and transverse flat components `a(r)`, `b(r)`:
//! `T = a u (x) u + b (delta - u (x) u)` with `u = x/r`. Its covariant
//! gradient at an axis point has three independent components,
//!
//! ```text
//! s1 = nabla_1 T_11,   s2 = nabla_1 T_mm,   s3 = nabla_m T_1m  (m > 1)
//! ```
//!
//! and the rough Laplacian `g^{kl} nabla_k nabla_l T` is again diagonal.
//! Everything here is assembled from the structure of the coordinate
//! partials plus Christoffel terms; the closed radial forms are kept in the
//! test suite as an independent route.

use alloc::vec;
use alloc::vec::Vec;

use crate::curvature::Christoffel;
use crate::field::{Chart, ConformalField, Parity};

/// Axis components of the covariant gradient of a radial symmetric 2-tensor.
#[derive(Clone, Debug)]
pub struct GradComponents {
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
    pub s3: Vec<f64>,
}

#[inline]
fn kron(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

/// Value of the structure tensor `S_kij` built from `(s1, s2, s3)` at an
/// axis point (axis along coordinate 0).
#[inline]
fn s_component(s1: f64, s2: f64, s3: f64, k: usize, i: usize, j: usize) -> f64 {
    let d = kron;
    s1 * d(k, 0) * d(i, 0) * d(j, 0)
        + s2 * d(k, 0) * (d(i, j) - d(i, 0) * d(j, 0))
        + s3 * ((d(k, i) - d(k, 0) * d(i, 0)) * d(j, 0) + (d(k, j) - d(k, 0) * d(j, 0)) * d(i, 0))
}

/// Coordinate partial `partial_m S_kij` (m >= 1) coming from derivatives of
/// the radial frame; proportional to `1/r`.
#[inline]
fn s_partial_m(s1: f64, s2: f64, s3: f64, inv_r: f64, m: usize, k: usize, i: usize, j: usize) -> f64 {
    let d = kron;
    let t1 = s1 * (d(k, m) * d(i, 0) * d(j, 0) + d(k, 0) * d(i, m) * d(j, 0) + d(k, 0) * d(i, 0) * d(j, m));
    let t2 = s2 * (d(k, m) * (d(i, j) - d(i, 0) * d(j, 0)) - d(k, 0) * (d(i, m) * d(j, 0) + d(i, 0) * d(j, m)));
    let t3 = s3
        * (-(d(k, m) * d(i, 0) + d(k, 0) * d(i, m)) * d(j, 0)
            + (d(k, i) - d(k, 0) * d(i, 0)) * d(j, m)
            - (d(k, m) * d(j, 0) + d(k, 0) * d(j, m)) * d(i, 0)
            + (d(k, j) - d(k, 0) * d(j, 0)) * d(i, m));
    (t1 + t2 + t3) * inv_r
}

/// Covariant gradient components of the tensor `(axial, trans)` per node.
///
/// At the origin all three components vanish by symmetry (they are odd in
/// `r`); elsewhere they come out of the Christoffel contraction
/// `nabla_k T_ij = partial_k T_ij - Gamma^l_ki T_lj - Gamma^l_kj T_il`.
pub fn covariant_gradient(
    field: &ConformalField,
    axial: &[f64],
    trans: &[f64],
) -> GradComponents {
    let n = field.n;
    let nn = field.nodes();
    let ap = field.deriv1(axial, Parity::Even);
    let bp = field.deriv1(trans, Parity::Even);
    let p1 = field.phi_deriv1();
    let radial = field.chart.is_radial();
    let mut out = GradComponents { s1: vec![0.0; nn], s2: vec![0.0; nn], s3: vec![0.0; nn] };
    let start = if radial { 1 } else { 0 };
    let mut d = vec![0.0; n];
    for jn in start..nn {
        let inv_r = if radial { 1.0 / field.radius(jn) } else { 0.0 };
        d[0] = p1[jn];
        let gamma = Christoffel::from_gradient(&d);
        let (a, b) = (axial[jn], trans[jn]);
        let t_comp = |i: usize, j: usize| {
            if i != j {
                0.0
            } else if i == 0 {
                a
            } else {
                b
            }
        };
        // partial_k T_ij at the axis point
        let dt = |k: usize, i: usize, j: usize| -> f64 {
            if k == 0 {
                ap[jn] * kron(i, 0) * kron(j, 0) + bp[jn] * (kron(i, j) - kron(i, 0) * kron(j, 0))
            } else {
                (a - b) * (kron(k, i) * kron(j, 0) + kron(k, j) * kron(i, 0)) * inv_r
            }
        };
        let nabla = |k: usize, i: usize, j: usize| -> f64 {
            let mut v = dt(k, i, j);
            for l in 0..n {
                v -= gamma.get(l, k, i) * t_comp(l, j) + gamma.get(l, k, j) * t_comp(i, l);
            }
            v
        };
        out.s1[jn] = nabla(0, 0, 0);
        out.s2[jn] = nabla(0, 1, 1);
        out.s3[jn] = nabla(1, 0, 1);
    }
    out
}

/// `|nabla T|^2` in the metric `g`, per node (`weight = e^{-2 phi}`).
pub fn grad_norm_sq(field: &ConformalField, grad: &GradComponents, weight: &[f64]) -> Vec<f64> {
    let n1 = field.n as f64 - 1.0;
    (0..field.nodes())
        .map(|j| {
            let w3 = weight[j] * weight[j] * weight[j];
            w3 * (grad.s1[j] * grad.s1[j]
                + n1 * grad.s2[j] * grad.s2[j]
                + 2.0 * n1 * grad.s3[j] * grad.s3[j])
        })
        .collect()
}

/// Rough Laplacian `(Delta T)_11`, `(Delta T)_22` per node with respect to
/// `g`, by a second Christoffel contraction of the gradient structure.
///
/// The origin value is the symmetric limit `r -> 0` expressed through the
/// odd-parity derivatives of the gradient components.
pub fn rough_laplacian(
    field: &ConformalField,
    axial: &[f64],
    trans: &[f64],
    weight: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let n = field.n;
    let nn = field.nodes();
    let grad = covariant_gradient(field, axial, trans);
    let s1p = field.deriv1(&grad.s1, Parity::Odd);
    let s2p = field.deriv1(&grad.s2, Parity::Odd);
    let s3p = field.deriv1(&grad.s3, Parity::Odd);
    let p1 = field.phi_deriv1();
    let radial = field.chart.is_radial();
    let mut l11 = vec![0.0; nn];
    let mut l22 = vec![0.0; nn];
    let mut d = vec![0.0; n];
    let nf = n as f64;
    for jn in 0..nn {
        if radial && jn == 0 {
            // limits: s/r -> s'(0), 1/r terms collapse onto derivatives
            l11[0] = weight[0] * (nf * s1p[0] - 2.0 * (nf - 1.0) * s3p[0]);
            l22[0] = weight[0] * (nf * s2p[0] + 2.0 * s3p[0]);
            continue;
        }
        let inv_r = if radial { 1.0 / field.radius(jn) } else { 0.0 };
        d[0] = p1[jn];
        let gamma = Christoffel::from_gradient(&d);
        let (s1, s2, s3) = (grad.s1[jn], grad.s2[jn], grad.s3[jn]);
        let sp = [s1p[jn], s2p[jn], s3p[jn]];
        let ds = |p: usize, k: usize, i: usize, j: usize| -> f64 {
            if p == 0 {
                sp[0] * kron(k, 0) * kron(i, 0) * kron(j, 0)
                    + sp[1] * kron(k, 0) * (kron(i, j) - kron(i, 0) * kron(j, 0))
                    + sp[2]
                        * ((kron(k, i) - kron(k, 0) * kron(i, 0)) * kron(j, 0)
                            + (kron(k, j) - kron(k, 0) * kron(j, 0)) * kron(i, 0))
            } else {
                s_partial_m(s1, s2, s3, inv_r, p, k, i, j)
            }
        };
        let sc = |k: usize, i: usize, j: usize| s_component(s1, s2, s3, k, i, j);
        let mut acc11 = 0.0;
        let mut acc22 = 0.0;
        for k in 0..n {
            let mut v11 = ds(k, k, 0, 0);
            let mut v22 = ds(k, k, 1, 1);
            for m in 0..n {
                v11 -= gamma.get(m, k, k) * sc(m, 0, 0)
                    + gamma.get(m, k, 0) * sc(k, m, 0)
                    + gamma.get(m, k, 0) * sc(k, 0, m);
                v22 -= gamma.get(m, k, k) * sc(m, 1, 1)
                    + gamma.get(m, k, 1) * sc(k, m, 1)
                    + gamma.get(m, k, 1) * sc(k, 1, m);
            }
            acc11 += v11;
            acc22 += v22;
        }
        l11[jn] = weight[jn] * acc11;
        l22[jn] = weight[jn] * acc22;
    }
    (l11, l22)
}

/// Diagonal components of `nabla_k X_i` for the radial vector field with
/// contravariant chart component `chi(r)` (so `X = chi * x/r`), lowered with
/// `g`. Returns `(nabla_1 X_1, nabla_m X_m)` per node; the off-diagonal
/// components vanish on the axis.
pub fn covariant_gradient_vector(field: &ConformalField, chi: &[f64]) -> (Vec<f64>, Vec<f64>) {
    assert!(field.chart != Chart::PeriodicBox, "radial charts only");
    let n = field.n;
    let nn = field.nodes();
    let p1 = field.phi_deriv1();
    // lowered component xi = e^{2 phi} chi
    let xi: Vec<f64> = (0..nn).map(|j| crate::math::exp(2.0 * field.phi[j]) * chi[j]).collect();
    let xip = field.deriv1(&xi, Parity::Odd);
    let mut a_out = vec![0.0; nn];
    let mut t_out = vec![0.0; nn];
    let mut d = vec![0.0; n];
    for jn in 0..nn {
        if jn == 0 {
            a_out[0] = xip[0];
            t_out[0] = xip[0];
            continue;
        }
        let inv_r = 1.0 / field.radius(jn);
        d[0] = p1[jn];
        let gamma = Christoffel::from_gradient(&d);
        let x_comp = |l: usize| if l == 0 { xi[jn] } else { 0.0 };
        let dx = |k: usize, i: usize| -> f64 {
            // partial_k X_i for X_i = xi(r) u_i on the axis
            if k == 0 && i == 0 {
                xip[jn]
            } else if k == i {
                xi[jn] * inv_r
            } else {
                0.0
            }
        };
        let nabla = |k: usize, i: usize| -> f64 {
            let mut v = dx(k, i);
            for l in 0..n {
                v -= gamma.get(l, k, i) * x_comp(l);
            }
            v
        };
        a_out[jn] = nabla(0, 0);
        t_out[jn] = nabla(1, 1);
    }
    (a_out, t_out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::ricci_eigenvalues;
    use crate::field::{build_field, Chart, Grid, Profile};
    use crate::math;

    /// Independent closed radial forms for the gradient components.
    fn closed_grad(
        field: &ConformalField,
        axial: &[f64],
        trans: &[f64],
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let ap = field.deriv1(axial, Parity::Even);
        let bp = field.deriv1(trans, Parity::Even);
        let p1 = field.phi_deriv1();
        let nn = field.nodes();
        let mut s1 = vec![0.0; nn];
        let mut s2 = vec![0.0; nn];
        let mut s3 = vec![0.0; nn];
        for j in 0..nn {
            s1[j] = ap[j] - 2.0 * p1[j] * axial[j];
            s2[j] = bp[j] - 2.0 * p1[j] * trans[j];
            s3[j] = if j == 0 {
                0.0
            } else {
                (axial[j] - trans[j]) * (1.0 / field.radius(j) + p1[j])
            };
        }
        (s1, s2, s3)
    }

    /// Independent closed radial form of the rough Laplacian.
    fn closed_laplacian(
        field: &ConformalField,
        axial: &[f64],
        trans: &[f64],
        weight: &[f64],
    ) -> (Vec<f64>, Vec<f64>) {
        let n = field.n as f64;
        let (s1, s2, s3) = closed_grad(field, axial, trans);
        let s1p = field.deriv1(&s1, Parity::Odd);
        let s2p = field.deriv1(&s2, Parity::Odd);
        let p1 = field.phi_deriv1();
        let nn = field.nodes();
        let mut l11 = vec![0.0; nn];
        let mut l22 = vec![0.0; nn];
        for j in 1..nn {
            let ir = 1.0 / field.radius(j);
            l11[j] = weight[j]
                * (s1p[j] + (n - 1.0) * s1[j] * ir + (n - 4.0) * p1[j] * s1[j]
                    - 2.0 * (n - 1.0) * (ir + p1[j]) * s3[j]);
            l22[j] = weight[j]
                * (s2p[j] + (n - 1.0) * s2[j] * ir + (n - 4.0) * p1[j] * s2[j]
                    + 2.0 * (ir + p1[j]) * s3[j]);
        }
        (l11, l22)
    }

    fn oracle_field(nodes: usize) -> ConformalField {
        let grid = Grid::radial(nodes, 1.4);
        let vals: Vec<f64> = (0..nodes)
            .map(|j| {
                let r = j as f64 * grid.spacing;
                math::ln(2.0) - math::ln(1.0 + r * r) + 0.05 * math::exp(-r * r)
            })
            .collect();
        build_field(Chart::RadialRn, 3, grid, &Profile::Table(vals)).unwrap()
    }

    #[test]
    fn christoffel_route_matches_closed_radial_forms() {
        let f = oracle_field(321);
        let st = ricci_eigenvalues(&f);
        let g = covariant_gradient(&f, &st.axial_flat, &st.trans_flat);
        let (s1, s2, s3) = closed_grad(&f, &st.axial_flat, &st.trans_flat);
        for j in 1..f.nodes() - 1 {
            assert!((g.s1[j] - s1[j]).abs() < 1e-12 * (1.0 + s1[j].abs()), "j={j}");
            assert!((g.s2[j] - s2[j]).abs() < 1e-12 * (1.0 + s2[j].abs()), "j={j}");
            assert!((g.s3[j] - s3[j]).abs() < 1e-12 * (1.0 + s3[j].abs()), "j={j}");
        }
        let (l11a, l22a) = rough_laplacian(&f, &st.axial_flat, &st.trans_flat, &st.weight);
        let (l11b, l22b) = closed_laplacian(&f, &st.axial_flat, &st.trans_flat, &st.weight);
        for j in 1..f.nodes() - 1 {
            assert!((l11a[j] - l11b[j]).abs() < 1e-11 * (1.0 + l11b[j].abs()), "j={j}");
            assert!((l22a[j] - l22b[j]).abs() < 1e-11 * (1.0 + l22b[j].abs()), "j={j}");
        }
    }

    #[test]
    fn gradient_and_laplacian_match_high_precision_oracle() {
        // Reference values at r0 = 0.7 for the Ricci tensor of the oracle
        // profile, from an independent analytic-derivative evaluation.
        let f = oracle_field(561);
        let j0 = 280;
        let st = ricci_eigenvalues(&f);
        let g = covariant_gradient(&f, &st.axial_flat, &st.trans_flat);
        let h2 = f.grid.spacing * f.grid.spacing;
        let close = |got: f64, want: f64, c: f64| (got - want).abs() < c * h2 * (1.0 + want.abs());
        assert!(close(g.s1[j0], 0.036594682994402818, 500.0), "s1={}", g.s1[j0]);
        assert!(close(g.s2[j0], 0.038272134000241188, 500.0), "s2={}", g.s2[j0]);
        assert!(close(g.s3[j0], 0.0099873962515198897, 500.0), "s3={}", g.s3[j0]);
        let (l11, l22) = rough_laplacian(&f, &st.axial_flat, &st.trans_flat, &st.weight);
        assert!(close(l11[j0], -0.46281434810197508, 3000.0), "l11={}", l11[j0]);
        assert!(close(l22[j0], -0.26181068578571744, 3000.0), "l22={}", l22[j0]);
    }

    #[test]
    fn metric_multiples_are_parallel() {
        // T = c * g has vanishing covariant derivative and Laplacian.
        let f = oracle_field(161);
        let nn = f.nodes();
        let e2p: Vec<f64> = (0..nn).map(|j| math::exp(2.0 * f.phi[j])).collect();
        let axial: Vec<f64> = e2p.iter().map(|v| 0.7 * v).collect();
        let trans = axial.clone();
        let w: Vec<f64> = e2p.iter().map(|v| 1.0 / v).collect();
        let g = covariant_gradient(&f, &axial, &trans);
        let (l11, l22) = rough_laplacian(&f, &axial, &trans, &w);
        for j in 1..nn - 2 {
            assert!(g.s1[j].abs() < 1e-8, "s1[{j}]={}", g.s1[j]);
            assert!(g.s2[j].abs() < 1e-8, "s2[{j}]={}", g.s2[j]);
            assert!(g.s3[j].abs() < 1e-13, "s3[{j}]={}", g.s3[j]);
            assert!(l11[j].abs() < 2e-4, "l11[{j}]={}", l11[j]);
            assert!(l22[j].abs() < 2e-4, "l22[{j}]={}", l22[j]);
        }
    }

    #[test]
    fn scalar_multiples_of_metric_reduce_to_laplace_beltrami() {
        // T = psi(r) g: (Delta T)_11 = (Lap_g psi) g_11.
        let f = oracle_field(401);
        let nn = f.nodes();
        let psi: Vec<f64> = (0..nn)
            .map(|j| {
                let r = f.radius(j);
                0.3 + 0.1 * math::exp(-2.0 * r * r)
            })
            .collect();
        let e2p: Vec<f64> = (0..nn).map(|j| math::exp(2.0 * f.phi[j])).collect();
        let axial: Vec<f64> = (0..nn).map(|j| psi[j] * e2p[j]).collect();
        let w: Vec<f64> = e2p.iter().map(|v| 1.0 / v).collect();
        let (l11, _) = rough_laplacian(&f, &axial, &axial, &w);
        // Laplace-Beltrami of psi
        let p1 = f.phi_deriv1();
        let psi1 = f.deriv1(&psi, Parity::Even);
        let psi2 = f.deriv2(&psi, Parity::Even);
        let n = f.n as f64;
        for j in 1..nn - 2 {
            let lap_flat = psi2[j] + (n - 1.0) * psi1[j] / f.radius(j);
            let lb = w[j] * (lap_flat + (n - 2.0) * p1[j] * psi1[j]);
            let want = lb * e2p[j];
            assert!(
                (l11[j] - want).abs() < 5e-4 * (1.0 + want.abs()),
                "j={j} got {} want {}",
                l11[j],
                want
            );
        }
    }

    #[test]
    fn dilation_field_gradient_is_identity_over_t() {
        // flat chart, X = x/t: nabla_k X_i = (1/t) delta_ik.
        let f = build_field(Chart::RadialRn, 3, Grid::radial(64, 2.0), &Profile::Flat).unwrap();
        let t = 0.7;
        let chi: Vec<f64> = (0..f.nodes()).map(|j| f.radius(j) / t).collect();
        let (a, b) = covariant_gradient_vector(&f, &chi);
        for j in 0..f.nodes() - 1 {
            assert!((a[j] - 1.0 / t).abs() < 1e-10, "a[{j}]={}", a[j]);
            assert!((b[j] - 1.0 / t).abs() < 1e-10, "b[{j}]={}", b[j]);
        }
    }
}
