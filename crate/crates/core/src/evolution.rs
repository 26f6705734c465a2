//! Right-hand sides of the evolution system and the RK4 method-of-lines driver.
//!
//! ```text
//! ∂_τ g_ij = −2 n k_ij
//! ∂_τ k_ij = −∇_i∇_j n + n (R_ij + (tr k) k_ij − 2 k_i^a k_aj)
//! ∂_τ n    = −n² tr k
//! ```

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::calculus::{hessian_with, mixed, mixed_trace, square, SliceGeometry};
use crate::causal::{max_speed, DomainSpec};
use crate::diagnostics::{evaluate, MonitorKind, ThresholdConfig};
use crate::error::{Error, Result};
use crate::grid::{collect_points, ScalarField, SymTensorField};
use crate::math;
use crate::state::{check_metric, check_positive, MonitorReport, SliceState};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolutionConfig {
    pub cfl_factor: f64,
    pub tau_end: f64,
    pub max_steps: usize,
    pub direction: Direction,
    pub dt_floor: f64,
    /// Use this step size instead of the CFL estimate.
    pub fixed_dt: Option<f64>,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            cfl_factor: 0.25,
            tau_end: 1.0,
            max_steps: 1_000_000,
            direction: Direction::Forward,
            dt_floor: 1e-12,
            fixed_dt: None,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl_factor > 0.0 && self.cfl_factor <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cfl factor {} not in (0, 1]",
                self.cfl_factor
            )));
        }
        if !(self.dt_floor > 0.0 && self.dt_floor.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dt floor {} must be positive",
                self.dt_floor
            )));
        }
        if !self.tau_end.is_finite() {
            return Err(Error::InvalidParameter(format!("tau_end {}", self.tau_end)));
        }
        if let Some(dt) = self.fixed_dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "fixed dt {dt} must be positive"
                )));
            }
        }
        Ok(())
    }
}

/// Time derivatives of the evolved fields.
#[derive(Clone, Debug, PartialEq)]
pub struct Rhs {
    pub dg: SymTensorField,
    pub dk: SymTensorField,
    pub dn: ScalarField,
}

pub(crate) fn rhs_with(s: &SliceState, geom: &SliceGeometry) -> Rhs {
    let grid = *s.grid();
    let k = s.extrinsic_curvature();
    let n = s.lapse().values();
    let hess = hessian_with(s.lapse(), &geom.christoffel);
    let m = mixed(&geom.inverse, k);
    let tr = mixed_trace(&m);
    let kk = square(k, &m);
    let dk = core::array::from_fn(|p| {
        let (r, h, kp) = (geom.ricci.plane(p), hess.plane(p), k.plane(p));
        let mut out = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            out.push(-h[i] + n[i] * (r[i] + tr[i] * kp[i] - 2.0 * kk[p][i]));
        }
        out
    });
    let dg = core::array::from_fn(|p| {
        k.plane(p)
            .iter()
            .zip(n)
            .map(|(kv, nv)| -2.0 * nv * kv)
            .collect()
    });
    let dn = n.iter().zip(&tr).map(|(nv, t)| -nv * nv * t).collect();
    Rhs {
        dg: SymTensorField::from_raw(grid, dg),
        dk: SymTensorField::from_raw(grid, dk),
        dn: ScalarField::from_raw(grid, dn),
    }
}

pub fn rhs(s: &SliceState) -> Result<Rhs> {
    Ok(rhs_with(s, &SliceGeometry::new(s.metric())?))
}

fn cfl_from_speed(v_max: f64, s: &SliceState, cfg: &EvolutionConfig) -> Result<f64> {
    let dt = cfg.cfl_factor * s.grid().spacing() / v_max;
    if !(dt >= cfg.dt_floor) {
        return Err(Error::DtUnderflow {
            dt,
            floor: cfg.dt_floor,
        });
    }
    Ok(dt)
}

/// Step size `cfl · h / v_max` with `v_max = max n √λ_max(g⁻¹)` over the grid.
/// Always positive; the sign of the step comes from the direction.
pub fn cfl_dt(s: &SliceState, cfg: &EvolutionConfig) -> Result<f64> {
    let (inv, _) = crate::calculus::metric_pointwise(s.metric())?;
    cfl_from_speed(max_speed(s, &inv, None), s, cfg)
}

fn combine(base: &[f64], terms: &[(&[f64], f64)]) -> Vec<f64> {
    collect_points(base.len(), |i| {
        let mut v = base[i];
        for (t, c) in terms {
            v += c * t[i];
        }
        v
    })
}

fn combine_state(s: &SliceState, terms: &[(&Rhs, f64)], dtau: f64) -> SliceState {
    let grid = *s.grid();
    let g = core::array::from_fn(|p| {
        let t: Vec<(&[f64], f64)> = terms.iter().map(|(r, c)| (r.dg.plane(p), *c)).collect();
        combine(s.metric().plane(p), &t)
    });
    let k = core::array::from_fn(|p| {
        let t: Vec<(&[f64], f64)> = terms.iter().map(|(r, c)| (r.dk.plane(p), *c)).collect();
        combine(s.extrinsic_curvature().plane(p), &t)
    });
    let t: Vec<(&[f64], f64)> = terms.iter().map(|(r, c)| (r.dn.values(), *c)).collect();
    let n = combine(s.lapse().values(), &t);
    SliceState::from_parts(
        SymTensorField::from_raw(grid, g),
        SymTensorField::from_raw(grid, k),
        ScalarField::from_raw(grid, n),
        s.gauge_density().clone(),
        s.tau() + dtau,
    )
}

fn check_stage(s: &SliceState, stage: usize) -> Result<()> {
    let fail = |cause| Error::StepFailed {
        stage,
        cause: alloc::boxed::Box::new(cause),
    };
    check_metric(s.metric()).map_err(fail)?;
    check_positive(s.lapse()).map_err(fail)?;
    for p in s.extrinsic_curvature().planes() {
        if let Some(index) = p.iter().position(|v| !v.is_finite()) {
            return Err(fail(Error::NonFinite { index }));
        }
    }
    Ok(())
}

fn stage_rhs(s: &SliceState, stage: usize) -> Result<Rhs> {
    check_stage(s, stage)?;
    let geom = SliceGeometry::new(s.metric()).map_err(|cause| Error::StepFailed {
        stage,
        cause: alloc::boxed::Box::new(cause),
    })?;
    Ok(rhs_with(s, &geom))
}

/// One classical RK4 step given the right-hand side at `s`.
pub(crate) fn step_with(s: &SliceState, k1: &Rhs, dt: f64) -> Result<SliceState> {
    let k2 = stage_rhs(&combine_state(s, &[(k1, 0.5 * dt)], 0.5 * dt), 2)?;
    let k3 = stage_rhs(&combine_state(s, &[(&k2, 0.5 * dt)], 0.5 * dt), 3)?;
    let k4 = stage_rhs(&combine_state(s, &[(&k3, dt)], dt), 4)?;
    let sixth = dt / 6.0;
    let third = dt / 3.0;
    let out = combine_state(
        s,
        &[(k1, sixth), (&k2, third), (&k3, third), (&k4, sixth)],
        dt,
    );
    check_stage(&out, 5)?;
    Ok(out)
}

/// Classical RK4 step of size `dt` (negative for backward evolution). Stage
/// failures report stages 2 to 4 for the intermediate states and 5 for the update.
pub fn step_rk4(s: &SliceState, dt: f64) -> Result<SliceState> {
    if dt == 0.0 || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!("step size {dt}")));
    }
    let k1 = stage_rhs(s, 1)?;
    step_with(s, &k1, dt)
}

/// What is watched during a run.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MonitorConfig {
    pub thresholds: ThresholdConfig,
    /// Restrict monitoring to a shrinking ball; the whole grid otherwise.
    pub domain: Option<DomainSpec>,
    /// Point whose proper time is tracked; defaults to the domain centre, then the origin.
    pub center: Option<[f64; 3]>,
}

impl MonitorConfig {
    fn center(&self) -> [f64; 3] {
        self.center
            .or(self.domain.map(|d| d.center()))
            .unwrap_or([0.0; 3])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    TauEnd,
    MaxSteps,
    MonitorThreshold(MonitorKind),
    DtUnderflow,
    StepFailed { stage: usize },
    DomainCrushed,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Termination::TauEnd => f.write_str("tau_end"),
            Termination::MaxSteps => f.write_str("max_steps"),
            Termination::MonitorThreshold(k) => write!(f, "monitor_threshold({})", k.as_str()),
            Termination::DtUnderflow => f.write_str("dt_underflow"),
            Termination::StepFailed { stage } => write!(f, "step_failed({stage})"),
            Termination::DomainCrushed => f.write_str("domain_crushed"),
        }
    }
}

impl Termination {
    pub fn name(&self) -> String {
        format!("{self}")
    }
}

/// Everything besides the state needed to continue a run exactly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Progress {
    pub step: usize,
    /// The report of the current slice; carries the running integrals.
    pub last: MonitorReport,
    /// Lapse at the tracked point on the current slice.
    pub center_lapse: f64,
    pub domain: Option<DomainSpec>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub final_state: SliceState,
    pub reports: Vec<MonitorReport>,
    pub termination: Termination,
    /// Proper time at the tracked point up to the stopping event.
    pub extent: f64,
    pub final_domain: Option<DomainSpec>,
    /// The error behind a `StepFailed` or `DtUnderflow` termination.
    pub failure: Option<Error>,
}

/// A run in progress. Each [`Evolver::advance`] takes one step and produces one report.
#[derive(Clone, Debug)]
pub struct Evolver {
    state: SliceState,
    cfg: EvolutionConfig,
    monitors: MonitorConfig,
    geom: SliceGeometry,
    rhs: Rhs,
    progress: Progress,
    termination: Option<Termination>,
    extent: f64,
    failure: Option<Error>,
}

fn spectrum_excess(r: &MonitorReport, t: &ThresholdConfig) -> f64 {
    let lo = math::ln(t.reference_scale / t.spectrum_bound) - math::ln(r.spectrum_min);
    let hi = math::ln(r.spectrum_max) - math::ln(t.reference_scale * t.spectrum_bound);
    lo.max(hi)
}

/// Fraction of the step from `prev` to `cur` at which monitor `kind` crossed its threshold.
fn crossing_fraction(
    kind: MonitorKind,
    prev: &MonitorReport,
    cur: &MonitorReport,
    t: &ThresholdConfig,
) -> f64 {
    let (a, b, level) = match kind {
        MonitorKind::Pointwise => (
            prev.breakdown_pointwise,
            cur.breakdown_pointwise,
            t.pointwise,
        ),
        MonitorKind::Integral => (
            prev.breakdown_integral_accum,
            cur.breakdown_integral_accum,
            t.integral,
        ),
        MonitorKind::PiL1 => (prev.pi_l1linf_accum, cur.pi_l1linf_accum, t.pi_l1),
        MonitorKind::Spectrum => (spectrum_excess(prev, t), spectrum_excess(cur, t), 0.0),
    };
    if b == a {
        return 1.0;
    }
    ((level - a) / (b - a)).clamp(0.0, 1.0)
}

fn tau_tolerance(cfg: &EvolutionConfig) -> f64 {
    1e-12 * cfg.tau_end.abs().max(1.0)
}

impl Evolver {
    /// Evaluate the initial slice (report 0) and prepare to step.
    pub fn new(s0: SliceState, cfg: &EvolutionConfig, monitors: &MonitorConfig) -> Result<Self> {
        cfg.validate()?;
        monitors.thresholds.validate()?;
        let geom = SliceGeometry::new(s0.metric())?;
        let rhs = rhs_with(&s0, &geom);
        let grid = *s0.grid();
        let center = monitors.center();
        let pts = monitors.domain.map(|d| d.points(&grid));
        let d = evaluate(&s0, &geom, &rhs.dk, pts.as_deref(), center);
        let report = MonitorReport {
            step: 0,
            tau: s0.tau(),
            dt: 0.0,
            gauge_residual: d.gauge_residual,
            ham_sup: d.ham_sup,
            ham_l2: d.ham_l2,
            mom_sup: d.mom_sup,
            mom_l2: d.mom_l2,
            breakdown_pointwise: d.breakdown.pi_sup,
            breakdown_sup: d.breakdown.sup,
            breakdown_integral_accum: 0.0,
            pi_l1linf_accum: 0.0,
            curvature_l2: d.curvature_l2,
            spectrum_min: d.spectrum_min,
            spectrum_max: d.spectrum_max,
            domain_radius: monitors.domain.map_or(f64::INFINITY, |d| d.radius()),
            wave_energy: d.wave_energy,
            proper_time: 0.0,
            speed_integral: 0.0,
            v_max: d.v_max,
            lapse_min: d.lapse_min,
            lapse_max: d.lapse_max,
            nk_sup: d.nk_sup,
            nk_integral: 0.0,
        };
        let progress = Progress {
            step: 0,
            last: report,
            center_lapse: d.center_lapse,
            domain: monitors.domain,
        };
        let mut ev = Evolver {
            state: s0,
            cfg: *cfg,
            monitors: *monitors,
            geom,
            rhs,
            progress,
            termination: None,
            extent: 0.0,
            failure: None,
        };
        if let Some(kind) = monitors.thresholds.fired(&report) {
            ev.termination = Some(Termination::MonitorThreshold(kind));
        } else {
            ev.check_tau_end();
        }
        Ok(ev)
    }

    /// Continue from a state and the progress recorded alongside it.
    pub fn resume(
        state: SliceState,
        cfg: &EvolutionConfig,
        monitors: &MonitorConfig,
        progress: Progress,
    ) -> Result<Self> {
        cfg.validate()?;
        monitors.thresholds.validate()?;
        let geom = SliceGeometry::new(state.metric())?;
        let rhs = rhs_with(&state, &geom);
        let monitors = MonitorConfig {
            domain: progress.domain,
            ..*monitors
        };
        let mut ev = Evolver {
            state,
            cfg: *cfg,
            monitors,
            geom,
            rhs,
            progress,
            termination: None,
            extent: progress.last.proper_time,
            failure: None,
        };
        ev.check_tau_end();
        Ok(ev)
    }

    fn check_tau_end(&mut self) {
        let remaining = (self.cfg.tau_end - self.state.tau()) * self.cfg.direction.sign();
        if remaining <= tau_tolerance(&self.cfg) {
            self.termination = Some(Termination::TauEnd);
            self.extent = self.progress.last.proper_time;
        }
    }

    pub fn state(&self) -> &SliceState {
        &self.state
    }

    pub fn report(&self) -> &MonitorReport {
        &self.progress.last
    }

    pub fn progress(&self) -> &Progress {
        &self.progress
    }

    pub fn termination(&self) -> Option<Termination> {
        self.termination
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn failure(&self) -> Option<&Error> {
        self.failure.as_ref()
    }

    fn stop(&mut self, t: Termination, failure: Option<Error>) -> bool {
        self.termination = Some(t);
        self.extent = self.progress.last.proper_time;
        self.failure = failure;
        false
    }

    /// Take one step. Returns `true` when a new slice and report were produced;
    /// `false` once the run has ended (see [`Evolver::termination`]).
    pub fn advance(&mut self) -> bool {
        if self.termination.is_some() {
            return false;
        }
        if self.progress.step >= self.cfg.max_steps {
            return self.stop(Termination::MaxSteps, None);
        }
        let last = self.progress.last;
        let magnitude = match self.cfg.fixed_dt {
            Some(dt) => dt,
            None => {
                let v = max_speed(&self.state, &self.geom.inverse, None);
                match cfl_from_speed(v, &self.state, &self.cfg) {
                    Ok(dt) => dt,
                    Err(e) => return self.stop(Termination::DtUnderflow, Some(e)),
                }
            }
        };
        let sign = self.cfg.direction.sign();
        let remaining = (self.cfg.tau_end - self.state.tau()).abs();
        let clipped = remaining <= magnitude * (1.0 + 1e-9);
        let dt = sign * if clipped { remaining } else { magnitude };

        let next_domain = self.progress.domain.map(|d| d.shrunk(last.v_max, dt));

        let mut next = match step_with(&self.state, &self.rhs, dt) {
            Ok(s) => s,
            Err(e) => {
                let stage = match e {
                    Error::StepFailed { stage, .. } => stage,
                    _ => 5,
                };
                return self.stop(Termination::StepFailed { stage }, Some(e));
            }
        };
        if clipped {
            next.set_tau(self.cfg.tau_end);
        }
        let geom = match SliceGeometry::new(next.metric()) {
            Ok(g) => g,
            Err(e) => {
                let e = Error::StepFailed {
                    stage: 5,
                    cause: alloc::boxed::Box::new(e),
                };
                return self.stop(Termination::StepFailed { stage: 5 }, Some(e));
            }
        };
        let rhs = rhs_with(&next, &geom);
        let center = self.monitors.center();
        let h = next.grid().spacing();
        let center_lapse = next.lapse().interpolate(center.map(|c| c / h));
        let proper_time =
            last.proper_time + 0.5 * (self.progress.center_lapse + center_lapse) * dt.abs();

        let domain = match next_domain {
            Some(Err(Error::DomainCrushed { remaining })) => {
                let r0 = last.domain_radius;
                let theta = (r0 / (r0 - remaining)).clamp(0.0, 1.0);
                self.extent = last.proper_time + theta * (proper_time - last.proper_time);
                self.state = next;
                self.geom = geom;
                self.rhs = rhs;
                self.progress.step += 1;
                self.termination = Some(Termination::DomainCrushed);
                return false;
            }
            Some(Err(e)) => return self.stop(Termination::StepFailed { stage: 5 }, Some(e)),
            Some(Ok(d)) => Some(d),
            None => None,
        };

        let pts = domain.map(|d| d.points(next.grid()));
        let d = evaluate(&next, &geom, &rhs.dk, pts.as_deref(), center);
        let adt = dt.abs();
        let q_prev = last.breakdown_sup * last.breakdown_sup * last.lapse_max;
        let q = d.breakdown.sup * d.breakdown.sup * d.breakdown.lapse_sup;
        let report = MonitorReport {
            step: self.progress.step + 1,
            tau: next.tau(),
            dt,
            gauge_residual: d.gauge_residual,
            ham_sup: d.ham_sup,
            ham_l2: d.ham_l2,
            mom_sup: d.mom_sup,
            mom_l2: d.mom_l2,
            breakdown_pointwise: d.breakdown.pi_sup,
            breakdown_sup: d.breakdown.sup,
            breakdown_integral_accum: last.breakdown_integral_accum + 0.5 * (q_prev + q) * adt,
            pi_l1linf_accum: last.pi_l1linf_accum
                + 0.5 * (last.breakdown_pointwise + d.breakdown.pi_sup) * adt,
            curvature_l2: d.curvature_l2,
            spectrum_min: d.spectrum_min,
            spectrum_max: d.spectrum_max,
            domain_radius: domain.map_or(f64::INFINITY, |d| d.radius()),
            wave_energy: d.wave_energy,
            proper_time,
            speed_integral: last.speed_integral + last.v_max * adt,
            v_max: d.v_max,
            lapse_min: d.lapse_min,
            lapse_max: d.lapse_max,
            nk_sup: d.nk_sup,
            nk_integral: last.nk_integral + 0.5 * (last.nk_sup + d.nk_sup) * adt,
        };

        self.state = next;
        self.geom = geom;
        self.rhs = rhs;
        self.progress = Progress {
            step: report.step,
            last: report,
            center_lapse,
            domain,
        };

        if let Some(kind) = self.monitors.thresholds.fired(&report) {
            let theta = crossing_fraction(kind, &last, &report, &self.monitors.thresholds);
            self.termination = Some(Termination::MonitorThreshold(kind));
            self.extent = last.proper_time + theta * (report.proper_time - last.proper_time);
        } else if clipped {
            self.termination = Some(Termination::TauEnd);
            self.extent = report.proper_time;
        }
        true
    }

    pub fn finish(self, reports: Vec<MonitorReport>) -> RunOutcome {
        RunOutcome {
            final_state: self.state,
            reports,
            termination: self.termination.unwrap_or(Termination::MaxSteps),
            extent: self.extent,
            final_domain: self.progress.domain,
            failure: self.failure,
        }
    }
}

/// Run from `s0` until a stopping condition. Configuration errors and an
/// invalid initial slice are errors; everything after is a [`Termination`].
pub fn evolve(
    s0: SliceState,
    cfg: &EvolutionConfig,
    monitors: &MonitorConfig,
) -> Result<RunOutcome> {
    let mut ev = Evolver::new(s0, cfg, monitors)?;
    let mut reports = alloc::vec![*ev.report()];
    while ev.advance() {
        reports.push(*ev.report());
    }
    Ok(ev.finish(reports))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::oracles::{flat_state, kasner_state, KasnerParams};
    use crate::tensor::Sym3;

    fn kasner() -> KasnerParams {
        KasnerParams::new(2.0 / 3.0, 2.0 / 3.0, -1.0 / 3.0, 1.0).unwrap()
    }

    #[test]
    fn flat_rhs_vanishes() {
        let s = flat_state(GridSpec::new(8, 1.0).unwrap());
        let r = rhs(&s).unwrap();
        assert_eq!(r.dg.max_abs(), 0.0);
        assert_eq!(r.dk.max_abs(), 0.0);
        assert_eq!(r.dn.max_abs(), 0.0);
    }

    #[test]
    fn kasner_rhs_at_origin() {
        let s = kasner_state(&kasner(), 0.0, GridSpec::new(8, 1.0).unwrap()).unwrap();
        let r = rhs(&s).unwrap();
        let want_dg = Sym3::diag(4.0 / 3.0, 4.0 / 3.0, -2.0 / 3.0);
        let want_dk = Sym3::diag(-2.0 / 9.0, -2.0 / 9.0, -5.0 / 9.0);
        for i in 0..6 {
            assert!((r.dg.at(5).0[i] - want_dg.0[i]).abs() < 1e-14);
            assert!((r.dk.at(5).0[i] - want_dk.0[i]).abs() < 1e-14);
        }
        assert!((r.dn.at(5) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn flat_cfl() {
        let grid = GridSpec::new(8, 1.0).unwrap();
        let dt = cfl_dt(&flat_state(grid), &EvolutionConfig::default()).unwrap();
        assert!((dt - 0.25 * grid.spacing()).abs() < 1e-15);
    }

    #[test]
    fn kasner_cfl_at_ln2() {
        let grid = GridSpec::new(8, 1.0).unwrap();
        let s = kasner_state(&kasner(), core::f64::consts::LN_2, grid).unwrap();
        let dt = cfl_dt(&s, &EvolutionConfig::default()).unwrap();
        let v = 2.0 * math::powf(2.0, 1.0 / 3.0);
        assert!((dt - 0.25 * grid.spacing() / v).abs() < 1e-12);
    }

    #[test]
    fn cfl_underflow() {
        let grid = GridSpec::new(8, 1.0).unwrap();
        let cfg = EvolutionConfig {
            dt_floor: 1.0,
            ..Default::default()
        };
        assert!(matches!(
            cfl_dt(&flat_state(grid), &cfg),
            Err(Error::DtUnderflow { .. })
        ));
    }

    #[test]
    fn flat_step_is_identity() {
        let s = flat_state(GridSpec::new(8, 1.0).unwrap());
        let s2 = step_rk4(&s, 0.3).unwrap();
        assert_eq!(s2.metric(), s.metric());
        assert_eq!(s2.extrinsic_curvature(), s.extrinsic_curvature());
        assert_eq!(s2.lapse(), s.lapse());
        assert_eq!(s2.tau(), 0.3);
    }

    #[test]
    fn collapsing_step_reports_stage() {
        // A huge backward step drives the lapse negative inside the step.
        let s = kasner_state(&kasner(), 0.0, GridSpec::new(8, 1.0).unwrap()).unwrap();
        match step_rk4(&s, -10.0) {
            Err(Error::StepFailed { stage, .. }) => assert!((2..=5).contains(&stage)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn termination_names() {
        assert_eq!(Termination::TauEnd.name(), "tau_end");
        assert_eq!(
            Termination::MonitorThreshold(MonitorKind::Pointwise).name(),
            "monitor_threshold(pointwise)"
        );
        assert_eq!(
            Termination::StepFailed { stage: 3 }.name(),
            "step_failed(3)"
        );
    }

    #[test]
    fn flat_run_reaches_tau_end() {
        let s = flat_state(GridSpec::new(8, 1.0).unwrap());
        let out = evolve(s, &EvolutionConfig::default(), &MonitorConfig::default()).unwrap();
        assert_eq!(out.termination, Termination::TauEnd);
        assert_eq!(out.final_state.tau(), 1.0);
        assert!((out.extent - 1.0).abs() < 1e-12);
        assert_eq!(out.reports[0].step, 0);
    }

    #[test]
    fn max_steps_stops() {
        let s = flat_state(GridSpec::new(8, 1.0).unwrap());
        let cfg = EvolutionConfig {
            max_steps: 3,
            ..Default::default()
        };
        let out = evolve(s, &cfg, &MonitorConfig::default()).unwrap();
        assert_eq!(out.termination, Termination::MaxSteps);
        assert_eq!(out.reports.len(), 4);
    }

    #[test]
    fn violated_initial_threshold_gives_zero_extent() {
        let s = kasner_state(&kasner(), 0.0, GridSpec::new(8, 1.0).unwrap()).unwrap();
        let monitors = MonitorConfig {
            thresholds: ThresholdConfig {
                pointwise: 1.0,
                ..Default::default()
            },
            ..Default::default()
        };
        let out = evolve(s, &EvolutionConfig::default(), &monitors).unwrap();
        assert_eq!(
            out.termination,
            Termination::MonitorThreshold(MonitorKind::Pointwise)
        );
        assert_eq!(out.extent, 0.0);
        assert_eq!(out.reports.len(), 1);
    }
}
