//! Explicit integrator for the Yamabe flow `d phi/dt = -R(phi)/2`.
//!
//! Second-order Runge-Kutta (midpoint) with an adaptive parabolic step
//! bound, growth-based step rejection, blow-up detection against a
//! configurable threshold, least-squares blow-up-time estimation, and
//! parabolic rescaling of stored trajectories.

use alloc::vec;
use alloc::vec::Vec;

use crate::curvature::scalar_curvature;
use crate::field::{apply_mirror_stencil, mirror_stencils, Chart, ConformalField, MirrorStencil};
use crate::math;

/// Why a run stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    ReachedTEnd,
    BlowUpReached,
    StepFailure,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FlowError {
    #[error("step size underflow: dt = {0}")]
    StepSizeUnderflow(f64),
    #[error("blow-up fit needs at least {needed} positive history points, got {got}")]
    InsufficientHistory { needed: usize, got: usize },
    #[error("scalar curvature at the base point is not positive")]
    NonpositiveCurvatureAtBasePoint,
}

/// Integration controls.
#[derive(Clone, Copy, Debug)]
pub struct FlowParams {
    /// CFL safety factor in (0, 1].
    pub cfl_safety: f64,
    /// Stop once `sup R >= blowup_factor * sup R(0)` (only when `sup R(0) > 0`).
    pub blowup_factor: f64,
    /// Steps between monitor records.
    pub record_every: u64,
    /// Steps between sup-R history appends.
    pub history_every: u64,
    /// Dirichlet value for the outer node of `RadialRn` charts; defaults to
    /// the boundary value at run start.
    pub dirichlet_clamp: Option<f64>,
    /// Hard step budget.
    pub max_steps: u64,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams {
            cfl_safety: 0.9,
            blowup_factor: 1e3,
            record_every: 100,
            history_every: 16,
            dirichlet_clamp: None,
            max_steps: 400_000_000,
        }
    }
}

/// Flow state: the evolving field plus step bookkeeping.
#[derive(Clone, Debug)]
pub struct FlowState {
    pub field: ConformalField,
    pub dt: f64,
    pub step_index: u64,
    /// Append-only `(t, sup R)` samples (decimated by `history_every`).
    pub sup_r_history: Vec<(f64, f64)>,
}

impl FlowState {
    pub fn new(field: ConformalField) -> Self {
        FlowState { field, dt: 0.0, step_index: 0, sup_r_history: Vec::new() }
    }
}

/// Parabolic step bound `sigma h^2 min(e^{2 phi}) / (2 n (n-1))`, capped by
/// `0.01 / sup |R|` when curvature is present.
pub fn adaptive_dt(state: &FlowState, params: &FlowParams) -> f64 {
    let f = &state.field;
    let r = scalar_curvature(f);
    let mut sup_abs = 0.0f64;
    for j in f.flow_band() {
        sup_abs = math::max(sup_abs, math::abs(r[j]));
    }
    let mut min_e2p = f64::INFINITY;
    for &p in f.phi.iter() {
        min_e2p = math::min(min_e2p, math::exp(2.0 * p));
    }
    dt_from(f.n, f.grid.spacing, min_e2p, sup_abs, params.cfl_safety)
}

#[inline]
fn dt_from(n: usize, h: f64, min_e2p: f64, sup_abs_r: f64, sigma: f64) -> f64 {
    let nf = n as f64;
    let mut dt = sigma * h * h * min_e2p / (2.0 * nf * (nf - 1.0));
    if sup_abs_r > 0.0 {
        dt = math::min(dt, 0.01 / sup_abs_r);
    }
    dt
}

const DT_FLOOR: f64 = 1e-15;
const MAX_HALVINGS: u32 = 40;
const W_REFRESH_STEPS: u64 = 1024;

/// Reusable integrator: scratch buffers, chart boundary data, and the cached
/// conformal weight `w = e^{-2 phi}` (updated incrementally with a Taylor
/// factor, refreshed exactly every [`W_REFRESH_STEPS`] steps).
pub struct Stepper {
    n: usize,
    chart: Chart,
    h: f64,
    clamp: Option<f64>,
    mirror: Option<[MirrorStencil; 2]>,
    inv_r: Vec<f64>,
    w: Vec<f64>,
    r_cur: Vec<f64>,
    r_scratch: Vec<f64>,
    phi_a: Vec<f64>,
    phi_b: Vec<f64>,
    w_a: Vec<f64>,
    w_b: Vec<f64>,
    cache_valid: bool,
    steps_since_refresh: u64,
    sigma: f64,
}

impl Stepper {
    pub fn new(field: &ConformalField, params: &FlowParams) -> Self {
        let nn = field.nodes();
        let mut inv_r = vec![0.0; nn];
        for (j, v) in inv_r.iter_mut().enumerate().skip(1) {
            *v = 1.0 / field.radius(j);
        }
        let clamp = match field.chart {
            Chart::RadialRn => Some(params.dirichlet_clamp.unwrap_or(field.phi[nn - 1])),
            _ => None,
        };
        let mirror = (field.chart == Chart::StereographicSphere).then(|| mirror_stencils(field.grid));
        let w = field.phi.iter().map(|&p| math::exp(-2.0 * p)).collect();
        Stepper {
            n: field.n,
            chart: field.chart,
            h: field.grid.spacing,
            clamp,
            mirror,
            inv_r,
            w,
            r_cur: vec![0.0; nn],
            r_scratch: vec![0.0; nn],
            phi_a: vec![0.0; nn],
            phi_b: vec![0.0; nn],
            w_a: vec![0.0; nn],
            w_b: vec![0.0; nn],
            cache_valid: false,
            steps_since_refresh: 0,
            sigma: params.cfl_safety,
        }
    }

    /// Scalar curvature of (`phi`, `w`) into `out`.
    fn curvature_into(&self, phi: &[f64], w: &[f64], out: &mut [f64]) {
        let nn = phi.len();
        let nf = self.n as f64;
        let c1 = 2.0 * (nf - 1.0);
        let c2 = (nf - 1.0) * (nf - 2.0);
        let inv2h = 1.0 / (2.0 * self.h);
        let invh2 = 1.0 / (self.h * self.h);
        if self.chart == Chart::PeriodicBox {
            for j in 0..nn {
                let up = phi[(j + 1) % nn];
                let um = phi[(j + nn - 1) % nn];
                let p1 = (up - um) * inv2h;
                let p2 = (up - 2.0 * phi[j] + um) * invh2;
                let inner = c1 * p2 + c2 * p1 * p1;
                out[j] = w[j] * (0.0 - inner);
            }
            return;
        }
        for j in 1..nn - 1 {
            let p1 = (phi[j + 1] - phi[j - 1]) * inv2h;
            let p2 = (phi[j + 1] - 2.0 * phi[j] + phi[j - 1]) * invh2;
            let lap = p2 + (nf - 1.0) * p1 * self.inv_r[j];
            let inner = c1 * lap + c2 * p1 * p1;
            out[j] = w[j] * (0.0 - inner);
        }
        // origin: even symmetry, Lap phi -> n phi''
        let p2_0 = 2.0 * (phi[1] - phi[0]) * invh2;
        out[0] = w[0] * (0.0 - c1 * nf * p2_0);
        // outer node
        let (p1, p2) = match (self.chart, &self.mirror) {
            (Chart::StereographicSphere, Some(st)) => {
                let g1 = apply_mirror_stencil(&st[0], phi);
                (
                    (g1 - phi[nn - 2]) * inv2h,
                    (g1 - 2.0 * phi[nn - 1] + phi[nn - 2]) * invh2,
                )
            }
            _ => (
                (3.0 * phi[nn - 1] - 4.0 * phi[nn - 2] + phi[nn - 3]) * inv2h,
                (2.0 * phi[nn - 1] - 5.0 * phi[nn - 2] + 4.0 * phi[nn - 3] - phi[nn - 4]) * invh2,
            ),
        };
        let lap = p2 + (nf - 1.0) * p1 * self.inv_r[nn - 1];
        let inner = c1 * lap + c2 * p1 * p1;
        out[nn - 1] = w[nn - 1] * (0.0 - inner);
    }

    fn ensure_cache(&mut self, field: &ConformalField) {
        if !self.cache_valid {
            for (wj, &p) in self.w.iter_mut().zip(field.phi.iter()) {
                *wj = math::exp(-2.0 * p);
            }
            let mut out = core::mem::take(&mut self.r_cur);
            self.curvature_into(&field.phi, &self.w, &mut out);
            self.r_cur = out;
            self.cache_valid = true;
            self.steps_since_refresh = 0;
        }
    }

    fn sup_signed(&self, r: &[f64], band_end: usize) -> f64 {
        let mut s = f64::NEG_INFINITY;
        for &v in &r[..band_end] {
            s = math::max(s, v);
        }
        s
    }

    fn sup_abs(&self, r: &[f64], band_end: usize) -> f64 {
        let mut s = 0.0f64;
        for &v in &r[..band_end] {
            s = math::max(s, math::abs(v));
        }
        s
    }

    fn band_end(&self, nn: usize) -> usize {
        if self.chart == Chart::PeriodicBox {
            nn
        } else {
            nn - 2
        }
    }

    /// One adaptive RK2 (midpoint) step. Halves dt on rejection (curvature
    /// sup growing more than fourfold), up to [`MAX_HALVINGS`] times.
    ///
    /// Returns the accepted dt, or `StepSizeUnderflow` / the halving budget
    /// exhaustion as errors (the caller maps exhaustion to a blow-up stop).
    pub fn step(&mut self, state: &mut FlowState) -> Result<f64, FlowError> {
        self.ensure_cache(&state.field);
        let nn = state.field.nodes();
        let band = self.band_end(nn);
        let sup_abs0 = self.sup_abs(&self.r_cur, band);
        let mut min_e2p = f64::INFINITY;
        for &wj in self.w.iter() {
            min_e2p = math::min(min_e2p, 1.0 / wj);
        }
        let mut dt = dt_from(self.n, self.h, min_e2p, sup_abs0, self.sigma);
        let phi = &state.field.phi;
        let mut halvings = 0u32;
        loop {
            if dt < DT_FLOOR {
                return Err(FlowError::StepSizeUnderflow(dt));
            }
            // midpoint stage
            for j in 0..nn {
                let dphi = -0.25 * dt * self.r_cur[j]; // (dt/2) * (-R/2)
                self.phi_a[j] = phi[j] + dphi;
                self.w_a[j] = self.w[j] * math::exp_taylor4(-2.0 * dphi);
            }
            impose_bc(self.clamp, &mut self.phi_a, &mut self.w_a);
            let mut r_half = core::mem::take(&mut self.r_scratch);
            self.curvature_into(&self.phi_a, &self.w_a, &mut r_half);
            // full step with midpoint slope
            for j in 0..nn {
                let dphi = -0.5 * dt * r_half[j];
                self.phi_b[j] = phi[j] + dphi;
                self.w_b[j] = self.w[j] * math::exp_taylor4(-2.0 * dphi);
            }
            self.r_scratch = r_half;
            impose_bc(self.clamp, &mut self.phi_b, &mut self.w_b);
            let mut r_new = core::mem::take(&mut self.r_scratch);
            self.curvature_into(&self.phi_b, &self.w_b, &mut r_new);
            let sup_abs_new = self.sup_abs(&r_new, band);
            let ok = sup_abs_new.is_finite()
                && sup_abs_new <= 4.0 * sup_abs0 + 1e-10 * (1.0 + sup_abs0);
            if ok {
                core::mem::swap(&mut state.field.phi, &mut self.phi_b);
                core::mem::swap(&mut self.w, &mut self.w_b);
                // r_new becomes the cached curvature of the accepted state
                self.r_scratch = core::mem::replace(&mut self.r_cur, r_new);
                break;
            }
            self.r_scratch = r_new;
            dt *= 0.5;
            halvings += 1;
            if halvings > MAX_HALVINGS {
                return Err(FlowError::StepSizeUnderflow(dt));
            }
        }
        state.field.t += dt;
        state.dt = dt;
        state.step_index += 1;
        self.steps_since_refresh += 1;
        if self.steps_since_refresh >= W_REFRESH_STEPS {
            for (wj, &p) in self.w.iter_mut().zip(state.field.phi.iter()) {
                *wj = math::exp(-2.0 * p);
            }
            let mut fresh = core::mem::take(&mut self.r_cur);
            self.curvature_into(&state.field.phi, &self.w, &mut fresh);
            self.r_cur = fresh;
            self.steps_since_refresh = 0;
        }
        Ok(dt)
    }

    /// Signed sup of the cached curvature over the flow band.
    pub fn sup_r(&mut self, state: &FlowState) -> f64 {
        self.ensure_cache(&state.field);
        self.sup_signed(&self.r_cur, self.band_end(state.field.nodes()))
    }
}

#[inline]
fn impose_bc(clamp: Option<f64>, phi: &mut [f64], w: &mut [f64]) {
    if let Some(c) = clamp {
        let nn = phi.len();
        phi[nn - 1] = c;
        w[nn - 1] = math::exp(-2.0 * c);
    }
}

/// One standalone adaptive step (constructs a fresh [`Stepper`]).
pub fn step(state: &mut FlowState, params: &FlowParams) -> Result<f64, FlowError> {
    let mut stepper = Stepper::new(&state.field, params);
    stepper.step(state)
}

/// Drives the flow to `t_end` or blow-up, invoking `on_record` with
/// `(previous snapshot, state)` every `record_every` steps. The previous
/// snapshot is the state one accepted step earlier, so hooks can evaluate
/// evolution residuals on consecutive pairs; it is `None` for the initial
/// and final records.
pub fn run(
    state: &mut FlowState,
    t_end: f64,
    params: &FlowParams,
    mut on_record: impl FnMut(Option<&ConformalField>, &FlowState),
) -> Result<StopReason, FlowError> {
    let mut stepper = Stepper::new(&state.field, params);
    let sup_r0 = stepper.sup_r(state);
    if state.sup_r_history.is_empty() {
        state.sup_r_history.push((state.field.t, sup_r0));
    }
    on_record(None, state);
    let mut last_recorded = state.step_index;
    let blowup_level =
        if sup_r0 > 0.0 { params.blowup_factor * sup_r0 } else { f64::INFINITY };
    let mut prev: Option<ConformalField> = None;
    loop {
        let finish = |reason: StopReason,
                      state: &FlowState,
                      on_record: &mut dyn FnMut(Option<&ConformalField>, &FlowState),
                      last_recorded: u64| {
            if last_recorded != state.step_index {
                on_record(None, state);
            }
            reason
        };
        if state.field.t >= t_end - 1e-15 {
            return Ok(finish(StopReason::ReachedTEnd, state, &mut on_record, last_recorded));
        }
        if state.step_index >= params.max_steps {
            return Ok(finish(StopReason::StepFailure, state, &mut on_record, last_recorded));
        }
        let recording = (state.step_index + 1) % params.record_every == 0;
        if recording {
            prev = Some(state.field.clone());
        }
        match stepper.step(state) {
            Ok(_) => {}
            Err(FlowError::StepSizeUnderflow(_)) => {
                return Ok(finish(StopReason::StepFailure, state, &mut on_record, last_recorded));
            }
            Err(e) => return Err(e),
        }
        let sup_r = stepper.sup_r(state);
        if state.step_index % params.history_every == 0 || recording {
            state.sup_r_history.push((state.field.t, sup_r));
        }
        if recording {
            on_record(prev.as_ref(), state);
            last_recorded = state.step_index;
        }
        if sup_r >= blowup_level {
            if state.sup_r_history.last().map(|&(t, _)| t) != Some(state.field.t) {
                state.sup_r_history.push((state.field.t, sup_r));
            }
            return Ok(finish(StopReason::BlowUpReached, state, &mut on_record, last_recorded));
        }
    }
}

/// Least-squares fit of `1/sup R` against `t` over the trailing `window`
/// positive-curvature history points; the fitted root is the blow-up time.
/// Returns `None` when the fitted slope is nonnegative (no finite-time
/// blow-up trend).
pub fn estimate_blowup_time(
    history: &[(f64, f64)],
    window: usize,
) -> Result<Option<f64>, FlowError> {
    let pts: Vec<(f64, f64)> =
        history.iter().filter(|&&(_, s)| s > 0.0).map(|&(t, s)| (t, 1.0 / s)).collect();
    if pts.len() < 8 {
        return Err(FlowError::InsufficientHistory { needed: 8, got: pts.len() });
    }
    let tail = &pts[pts.len().saturating_sub(window.max(8))..];
    let m = tail.len() as f64;
    let (mut tbar, mut ybar) = (0.0, 0.0);
    for &(t, y) in tail {
        tbar += t;
        ybar += y;
    }
    tbar /= m;
    ybar /= m;
    let (mut num, mut den) = (0.0, 0.0);
    for &(t, y) in tail {
        num += (t - tbar) * (y - ybar);
        den += (t - tbar) * (t - tbar);
    }
    if den == 0.0 {
        return Ok(None);
    }
    let slope = num / den;
    if !(slope < 0.0) {
        return Ok(None);
    }
    Ok(Some(tbar - ybar / slope))
}

/// A trajectory renormalized about a base point: `g_i(t) = Q g(t_i + t/Q)`,
/// realized as `phi -> phi + ln(Q)/2` with the clock shifted so the base
/// snapshot sits at rescaled time zero.
#[derive(Clone, Debug)]
pub struct RescaledTrajectory {
    pub q: f64,
    pub base_node: usize,
    pub base_index: usize,
    pub snapshots: Vec<ConformalField>,
}

/// Rescales a stored trajectory by the base-point curvature.
pub fn parabolic_rescale(
    trajectory: &[ConformalField],
    base_node: usize,
    base_index: usize,
) -> Result<RescaledTrajectory, FlowError> {
    let base = &trajectory[base_index];
    let q = scalar_curvature(base)[base_node];
    if !(q > 0.0) {
        return Err(FlowError::NonpositiveCurvatureAtBasePoint);
    }
    let shift = 0.5 * math::ln(q);
    let t_i = base.t;
    let snapshots = trajectory
        .iter()
        .map(|f| {
            let mut g = f.clone();
            for p in g.phi.iter_mut() {
                *p += shift;
            }
            g.t = (f.t - t_i) * q;
            g
        })
        .collect();
    Ok(RescaledTrajectory { q, base_node, base_index, snapshots })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{build_field, Grid, Profile};

    #[test]
    fn adaptive_dt_formula() {
        // flat field, h = 0.01, n = 3, sigma = 0.5 -> dt = 0.5e-4/12
        let f = build_field(
            Chart::RadialRn,
            3,
            Grid { nodes: 101, spacing: 0.01 },
            &Profile::Flat,
        )
        .unwrap();
        let st = FlowState::new(f);
        let params = FlowParams { cfl_safety: 0.5, ..Default::default() };
        let dt = adaptive_dt(&st, &params);
        assert!((dt - 0.5 * 1e-4 / 12.0).abs() < 1e-18);
    }

    #[test]
    fn adaptive_dt_shifts_with_constant_factor() {
        let mut f = build_field(
            Chart::RadialRn,
            3,
            Grid { nodes: 64, spacing: 0.01 },
            &Profile::Flat,
        )
        .unwrap();
        let params = FlowParams::default();
        let dt0 = adaptive_dt(&FlowState::new(f.clone()), &params);
        let c = 0.4;
        for p in f.phi.iter_mut() {
            *p += c;
        }
        let dt1 = adaptive_dt(&FlowState::new(f), &params);
        assert!((dt1 - dt0 * math::exp(2.0 * c)).abs() < 1e-12 * dt0.max(dt1));
    }

    #[test]
    fn adaptive_dt_caps_near_blowup() {
        // a field with sup |R| = 1e4 must get dt <= 1e-6
        let nodes = 64;
        let grid = Grid::radial(nodes, 1.0);
        // constant-curvature bubble scaled so R = 1e4: R = n(n-1) e^{-2c} * ...
        // easier: shrink the unit bubble by phi -> phi + 0.5 ln(6/1e4)
        let mut f =
            build_field(Chart::StereographicSphere, 3, grid, &Profile::SphereBubble).unwrap();
        let shift = 0.5 * math::ln(6.0 / 1.0e4);
        for p in f.phi.iter_mut() {
            *p += shift;
        }
        let dt = adaptive_dt(&FlowState::new(f), &FlowParams::default());
        assert!(dt <= 1.0000001e-6, "dt = {dt}");
    }

    #[test]
    fn flat_field_is_bitwise_stationary() {
        let f = build_field(Chart::RadialRn, 3, Grid::radial(32, 1.0), &Profile::Flat).unwrap();
        let mut st = FlowState::new(f.clone());
        let params = FlowParams::default();
        let mut stepper = Stepper::new(&st.field, &params);
        for _ in 0..50 {
            stepper.step(&mut st).unwrap();
        }
        assert_eq!(st.field.phi, f.phi);
        assert!(st.field.t > 0.0);
    }

    #[test]
    fn blowup_fit_recovers_exact_linear_series() {
        // 1/sup R = 1/6 - t
        let hist: Vec<(f64, f64)> =
            (0..32).map(|k| {
                let t = 0.001 * k as f64;
                (t, 1.0 / (1.0 / 6.0 - t))
            }).collect();
        let t_hat = estimate_blowup_time(&hist, 32).unwrap().unwrap();
        assert!((t_hat - 1.0 / 6.0).abs() < 1e-10, "t_hat = {t_hat}");
    }

    #[test]
    fn blowup_fit_undefined_for_flat_and_decaying() {
        let flat: Vec<(f64, f64)> = (0..20).map(|k| (0.01 * k as f64, 0.0)).collect();
        assert!(matches!(
            estimate_blowup_time(&flat, 16),
            Err(FlowError::InsufficientHistory { .. })
        ));
        let decaying: Vec<(f64, f64)> =
            (0..20).map(|k| (0.01 * k as f64, 1.0 / (1.0 + k as f64))).collect();
        assert_eq!(estimate_blowup_time(&decaying, 16).unwrap(), None);
    }

    #[test]
    fn rescale_normalizes_base_curvature() {
        let f = build_field(
            Chart::StereographicSphere,
            3,
            Grid::radial(128, 1.0),
            &Profile::SphereBubble,
        )
        .unwrap();
        // fake a two-snapshot trajectory by shifting the factor
        let mut later = f.clone();
        let s = 0.5 * math::ln(0.4f64); // metric shrunk by 0.4
        for p in later.phi.iter_mut() {
            *p += s;
        }
        later.t = 0.1;
        let traj = vec![f, later];
        let resc = parabolic_rescale(&traj, 0, 1).unwrap();
        let r = scalar_curvature(&resc.snapshots[1])[0];
        assert!((r - 1.0).abs() < 1e-10, "rescaled base curvature {r}");
        assert!((resc.snapshots[1].t - 0.0).abs() < 1e-15);
        // composing two rescalings is one rescaling by the product
        let resc2 = parabolic_rescale(&resc.snapshots, 0, 1).unwrap();
        assert!((resc2.q - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rescale_rejects_nonpositive_base() {
        let f = build_field(Chart::RadialRn, 3, Grid::radial(64, 0.9), &Profile::HyperbolicBall)
            .unwrap();
        let traj = vec![f];
        assert!(matches!(
            parabolic_rescale(&traj, 5, 0),
            Err(FlowError::NonpositiveCurvatureAtBasePoint)
        ));
    }
}
