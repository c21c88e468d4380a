//! Conformal fields on flat background charts.
//!
//! A field stores the log-conformal factor `phi` on a one-dimensional grid:
//! the radial coordinate of a rotationally symmetric chart, or the
//! distinguished coordinate of a periodic box (the profile varies along one
//! axis only). The metric is `g = e^{2 phi} * delta`.
//!
//! Boundary treatment:
//! * all radial charts mirror node `+h` to a ghost at `-h` (even symmetry at
//!   the origin);
//! * `RadialRn` clamps the outermost node to its initial profile value
//!   (Dirichlet) while the flow runs, and uses one-sided second-order
//!   stencils when curvature is evaluated there;
//! * `StereographicSphere` has no outer boundary: the chart covers the whole
//!   sphere, with the upper hemisphere represented through the inversion
//!   `r -> r_max^2 / r`, which is an isometry of any inversion-symmetric
//!   conformal factor. Ghost nodes beyond `r_max` carry
//!   `phi(r) = phi(r_max^2/r) + 2 ln(r_max/r)` with cubic interpolation at
//!   the reflected point;
//! * `PeriodicBox` wraps around.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

/// Background chart the conformal factor lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Chart {
    /// Radial chart on `[0, r_max]` in flat R^n, Dirichlet-clamped outer node.
    RadialRn,
    /// Stereographic chart of the round sphere; `r_max` is the inversion
    /// (mirror) radius, `r_max = 1` puts the mirror on the unit equator.
    StereographicSphere,
    /// Flat torus; the field varies along one periodic coordinate.
    PeriodicBox,
}

impl Chart {
    pub fn is_radial(self) -> bool {
        !matches!(self, Chart::PeriodicBox)
    }
}

/// Uniform grid: node count and spacing. Radial charts place nodes at
/// `r_j = j h` with `r_max = (N-1) h`; the periodic box at `x_j = j h` with
/// period `L = N h` (the identified node `x_N = x_0` is not duplicated).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub nodes: usize,
    pub spacing: f64,
}

impl Grid {
    /// Radial grid covering `[0, r_max]`.
    pub fn radial(nodes: usize, r_max: f64) -> Self {
        Grid { nodes, spacing: r_max / (nodes as f64 - 1.0) }
    }

    /// Periodic grid with the given period.
    pub fn periodic(nodes: usize, period: f64) -> Self {
        Grid { nodes, spacing: period / nodes as f64 }
    }

    pub fn r_max(&self) -> f64 {
        (self.nodes as f64 - 1.0) * self.spacing
    }

    pub fn period(&self) -> f64 {
        self.nodes as f64 * self.spacing
    }
}

/// Initial conformal-factor profiles.
#[derive(Clone, Debug, PartialEq)]
pub enum Profile {
    /// `phi = 0`.
    Flat,
    /// Unit round sphere via stereographic projection: `e^{2 phi} = 4/(1+r^2)^2`.
    SphereBubble,
    /// Poincare ball: `e^{2 phi} = 4/(1-r^2)^2` on `r < 1`.
    HyperbolicBall,
    /// `phi = amplitude * exp(-(r/width)^2)` (centered at `L/2` on the box).
    GaussianBump { amplitude: f64, width: f64 },
    /// Explicit per-node values.
    Table(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FieldError {
    #[error("dimension must be at least 3, got {0}")]
    DimensionTooSmall(usize),
    #[error("grid needs at least 16 nodes, got {0}")]
    GridTooCoarse(usize),
    #[error("grid spacing must be positive")]
    NonpositiveSpacing,
    #[error("hyperbolic ball requires r_max < 1")]
    HyperbolicRadiusTooLarge,
    #[error("profile not defined on this chart")]
    ProfileChartMismatch,
    #[error("table profile length {got} does not match node count {expected}")]
    TableLength { expected: usize, got: usize },
    #[error("conformal factor must be finite at every node")]
    NonFiniteValue,
}

/// Parity of a radially symmetric scalar at the origin. Curvature scalars
/// and tensor eigencomponents are even in `r`; components of covariant
/// gradients and radial vector fields are odd.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// Log-conformal factor over a flat chart at flow time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConformalField {
    pub n: usize,
    pub chart: Chart,
    pub grid: Grid,
    pub phi: Vec<f64>,
    pub t: f64,
}

/// Builds a field from a named profile, checking chart/grid preconditions.
pub fn build_field(
    chart: Chart,
    n: usize,
    grid: Grid,
    profile: &Profile,
) -> Result<ConformalField, FieldError> {
    if n < 3 {
        return Err(FieldError::DimensionTooSmall(n));
    }
    if grid.nodes < 16 {
        return Err(FieldError::GridTooCoarse(grid.nodes));
    }
    if !(grid.spacing > 0.0) {
        return Err(FieldError::NonpositiveSpacing);
    }
    let coord = |j: usize| j as f64 * grid.spacing;
    let phi: Vec<f64> = match profile {
        Profile::Flat => vec![0.0; grid.nodes],
        Profile::SphereBubble => {
            if !chart.is_radial() {
                return Err(FieldError::ProfileChartMismatch);
            }
            (0..grid.nodes)
                .map(|j| {
                    let r = coord(j);
                    math::ln(2.0) - math::ln(1.0 + r * r)
                })
                .collect()
        }
        Profile::HyperbolicBall => {
            if chart != Chart::RadialRn {
                return Err(FieldError::ProfileChartMismatch);
            }
            if grid.r_max() >= 1.0 {
                return Err(FieldError::HyperbolicRadiusTooLarge);
            }
            (0..grid.nodes)
                .map(|j| {
                    let r = coord(j);
                    math::ln(2.0) - math::ln(1.0 - r * r)
                })
                .collect()
        }
        Profile::GaussianBump { amplitude, width } => {
            if !(*width > 0.0) {
                return Err(FieldError::NonpositiveSpacing);
            }
            let center = if chart.is_radial() { 0.0 } else { grid.period() / 2.0 };
            (0..grid.nodes)
                .map(|j| {
                    let d = (coord(j) - center) / width;
                    amplitude * math::exp(-d * d)
                })
                .collect()
        }
        Profile::Table(values) => {
            if values.len() != grid.nodes {
                return Err(FieldError::TableLength { expected: grid.nodes, got: values.len() });
            }
            values.clone()
        }
    };
    if phi.iter().any(|v| !v.is_finite()) {
        return Err(FieldError::NonFiniteValue);
    }
    Ok(ConformalField { n, chart, grid, phi, t: 0.0 })
}

impl ConformalField {
    pub fn nodes(&self) -> usize {
        self.grid.nodes
    }

    /// Chart coordinate of node `j`.
    pub fn radius(&self, j: usize) -> f64 {
        j as f64 * self.grid.spacing
    }

    /// Adds `amplitude * exp(-(r/width)^2)` to the profile (distance from the
    /// box center on the periodic chart).
    pub fn add_gaussian_perturbation(&mut self, amplitude: f64, width: f64) {
        let center = if self.chart.is_radial() { 0.0 } else { self.grid.period() / 2.0 };
        let h = self.grid.spacing;
        for (j, p) in self.phi.iter_mut().enumerate() {
            let d = (j as f64 * h - center) / width;
            *p += amplitude * math::exp(-d * d);
        }
    }

    /// Nodes eligible for sup/inf tracking inside the flow loop (the
    /// Dirichlet clamp pollutes the outermost nodes of radial charts).
    pub fn flow_band(&self) -> core::ops::Range<usize> {
        match self.chart {
            Chart::PeriodicBox => 0..self.nodes(),
            _ => 0..self.nodes().saturating_sub(2),
        }
    }

    /// Nodes eligible for monitor sup/inf/norms: two second-derivative
    /// stencils away from the outer boundary.
    pub fn monitor_band(&self) -> core::ops::Range<usize> {
        match self.chart {
            Chart::PeriodicBox => 0..self.nodes(),
            _ => 0..self.nodes().saturating_sub(4),
        }
    }

    /// Mirror-ghost value of `phi` at `r_max + k h` for the sphere chart.
    pub fn mirror_ghost(&self, k: usize) -> f64 {
        mirror_ghost_of(&self.phi, self.grid, k)
    }

    /// First derivative of a radially symmetric node array.
    pub fn deriv1(&self, u: &[f64], parity: Parity) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.deriv1_into(u, parity, &mut out);
        out
    }

    pub fn deriv1_into(&self, u: &[f64], parity: Parity, out: &mut [f64]) {
        let nn = u.len();
        let h = self.grid.spacing;
        if self.chart == Chart::PeriodicBox {
            for j in 0..nn {
                let up = u[(j + 1) % nn];
                let um = u[(j + nn - 1) % nn];
                out[j] = (up - um) / (2.0 * h);
            }
            return;
        }
        for j in 1..nn - 1 {
            out[j] = (u[j + 1] - u[j - 1]) / (2.0 * h);
        }
        out[0] = match parity {
            Parity::Even => 0.0,
            Parity::Odd => u[1] / h,
        };
        out[nn - 1] = (3.0 * u[nn - 1] - 4.0 * u[nn - 2] + u[nn - 3]) / (2.0 * h);
    }

    /// Second derivative of a radially symmetric node array.
    pub fn deriv2(&self, u: &[f64], parity: Parity) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.deriv2_into(u, parity, &mut out);
        out
    }

    pub fn deriv2_into(&self, u: &[f64], parity: Parity, out: &mut [f64]) {
        let nn = u.len();
        let h = self.grid.spacing;
        let h2 = h * h;
        if self.chart == Chart::PeriodicBox {
            for j in 0..nn {
                let up = u[(j + 1) % nn];
                let um = u[(j + nn - 1) % nn];
                out[j] = (up - 2.0 * u[j] + um) / h2;
            }
            return;
        }
        for j in 1..nn - 1 {
            out[j] = (u[j + 1] - 2.0 * u[j] + u[j - 1]) / h2;
        }
        out[0] = match parity {
            Parity::Even => 2.0 * (u[1] - u[0]) / h2,
            Parity::Odd => -2.0 * u[0] / h2,
        };
        out[nn - 1] =
            (2.0 * u[nn - 1] - 5.0 * u[nn - 2] + 4.0 * u[nn - 3] - u[nn - 4]) / h2;
    }

    /// First derivative of `phi`, applying the chart's own outer treatment
    /// (mirror ghost on the sphere chart).
    pub fn phi_deriv1(&self) -> Vec<f64> {
        let mut out = self.deriv1(&self.phi, Parity::Even);
        if self.chart == Chart::StereographicSphere {
            let nn = self.nodes();
            let g1 = self.mirror_ghost(1);
            out[nn - 1] = (g1 - self.phi[nn - 2]) / (2.0 * self.grid.spacing);
        }
        out
    }

    /// Second derivative of `phi` with chart ghosts.
    pub fn phi_deriv2(&self) -> Vec<f64> {
        let mut out = self.deriv2(&self.phi, Parity::Even);
        if self.chart == Chart::StereographicSphere {
            let nn = self.nodes();
            let g1 = self.mirror_ghost(1);
            let h = self.grid.spacing;
            out[nn - 1] = (g1 - 2.0 * self.phi[nn - 1] + self.phi[nn - 2]) / (h * h);
        }
        out
    }
}

/// Interpolation stencil for one mirror ghost: base node and cubic Lagrange
/// weights at the reflected point, plus the conformal offset `2 ln(a/r_g)`.
#[derive(Clone, Copy, Debug)]
pub struct MirrorStencil {
    pub base: usize,
    pub weights: [f64; 4],
    pub offset: f64,
}

/// Precomputes the sphere-chart ghost stencils at `r_max + h` and
/// `r_max + 2h`. Pure grid geometry, independent of the field values.
pub fn mirror_stencils(grid: Grid) -> [MirrorStencil; 2] {
    let a = grid.r_max();
    let h = grid.spacing;
    let make = |k: usize| {
        let rg = a + k as f64 * h;
        let rm = a * a / rg;
        let j = (rm / h) as isize - 1;
        let base = j.clamp(0, grid.nodes as isize - 4) as usize;
        let xs = [
            base as f64 * h,
            (base + 1) as f64 * h,
            (base + 2) as f64 * h,
            (base + 3) as f64 * h,
        ];
        let mut weights = [1.0f64; 4];
        for i in 0..4 {
            for m in 0..4 {
                if m != i {
                    weights[i] *= (rm - xs[m]) / (xs[i] - xs[m]);
                }
            }
        }
        MirrorStencil { base, weights, offset: 2.0 * math::ln(a / rg) }
    };
    [make(1), make(2)]
}

/// Evaluates the mirror ghost `phi(r_max + k h)` for a value array. Written
/// in increment form so constant shifts of `phi` pass through exactly.
pub fn mirror_ghost_of(phi: &[f64], grid: Grid, k: usize) -> f64 {
    let st = mirror_stencils(grid)[k - 1];
    apply_mirror_stencil(&st, phi)
}

#[inline]
pub fn apply_mirror_stencil(st: &MirrorStencil, phi: &[f64]) -> f64 {
    let b = st.base;
    phi[b]
        + st.weights[1] * (phi[b + 1] - phi[b])
        + st.weights[2] * (phi[b + 2] - phi[b])
        + st.weights[3] * (phi[b + 3] - phi[b])
        + st.offset
}
