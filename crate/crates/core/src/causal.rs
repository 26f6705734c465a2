//! Localization of the evolution to a shrinking coordinate ball, and the
//! quantities built on top of it: the speed-integral check, the temporal
//! extent of a run and its behaviour under rescaling.

use alloc::format;
use alloc::vec::Vec;

use crate::calculus::metric_pointwise;
use crate::diagnostics::ThresholdConfig;
use crate::error::{Error, Result};
use crate::evolution::{evolve, EvolutionConfig, MonitorConfig};
use crate::grid::GridSpec;
use crate::math;
use crate::state::{MonitorReport, SliceState};

/// A coordinate ball on the periodic grid. Each step shrinks its radius by the
/// largest coordinate speed inside it times `|dt|`, plus a fixed halo that
/// absorbs the finite-difference reach.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DomainSpec {
    center: [f64; 3],
    radius: f64,
    halo: f64,
}

impl DomainSpec {
    pub fn new(center: [f64; 3], radius: f64, halo: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("domain radius {radius}")));
        }
        if !(halo >= 0.0 && halo.is_finite()) {
            return Err(Error::InvalidParameter(format!("domain halo {halo}")));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(format!("domain center {center:?}")));
        }
        Ok(DomainSpec {
            center,
            radius,
            halo,
        })
    }

    /// Halo given as a number of grid cells.
    pub fn with_halo_cells(
        grid: &GridSpec,
        center: [f64; 3],
        radius: f64,
        halo_cells: f64,
    ) -> Result<Self> {
        DomainSpec::new(center, radius, halo_cells * grid.spacing())
    }

    pub fn center(&self) -> [f64; 3] {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn halo(&self) -> f64 {
        self.halo
    }

    pub fn contains(&self, grid: &GridSpec, idx: usize) -> bool {
        grid.periodic_distance(grid.position(idx), self.center) <= self.radius
    }

    /// Grid indices inside the ball, ascending.
    pub fn points(&self, grid: &GridSpec) -> Vec<usize> {
        (0..grid.len())
            .filter(|&i| self.contains(grid, i))
            .collect()
    }

    /// The ball after a step of size `dt` at largest coordinate speed `v_max`.
    pub fn shrunk(&self, v_max: f64, dt: f64) -> Result<Self> {
        let remaining = self.radius - v_max * dt.abs() - self.halo;
        if !(remaining > 0.0) {
            return Err(Error::DomainCrushed { remaining });
        }
        Ok(DomainSpec {
            radius: remaining,
            ..*self
        })
    }
}

/// Largest coordinate speed `n / √λ_min(g)` over `points` (all when `None`).
pub(crate) fn max_speed(
    s: &SliceState,
    inv: &crate::grid::SymTensorField,
    points: Option<&[usize]>,
) -> f64 {
    let speed = |idx: usize| s.lapse().at(idx) * math::sqrt(inv.at(idx).eigenvalues()[2]);
    match points {
        Some(p) => p.iter().fold(0.0, |m, &i| m.max(speed(i))),
        None => (0..s.grid().len()).fold(0.0, |m, i| m.max(speed(i))),
    }
}

/// Shrink `domain` for a step of size `dt` taken from `s`.
pub fn shrink_domain(domain: &DomainSpec, s: &SliceState, dt: f64) -> Result<DomainSpec> {
    let (inv, _) = metric_pointwise(s.metric())?;
    let pts = domain.points(s.grid());
    domain.shrunk(max_speed(s, &inv, Some(&pts)), dt)
}

/// Result of comparing the accumulated coordinate speed with the a-priori
/// bound `20 ν |Δτ|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CausalCheck {
    /// `ν = max(sup n₀, 1 / inf n₀)`.
    pub nu: f64,
    /// Smallest `20 ν |τ_j − τ_0| − ∫ v_max` over the steps checked; infinite if none.
    pub worst_margin: f64,
    pub steps_checked: usize,
    /// Index of the first report where the spectrum left `[1/4, 4]` or the
    /// lapse left `[ν⁻¹/2, 2ν]`; checking stops there.
    pub hypotheses_failed_at: Option<usize>,
}

impl CausalCheck {
    pub fn holds(&self) -> bool {
        self.worst_margin >= 0.0
    }
}

/// Check `∫ v_max |dτ| ≤ 20 ν |Δτ|` along a run, for as long as the metric
/// spectrum stays in `[1/4, 4]` and the lapse in `[ν⁻¹/2, 2ν]`.
pub fn causal_ball_check(reports: &[MonitorReport]) -> Result<CausalCheck> {
    let first = reports
        .first()
        .ok_or_else(|| Error::InvalidParameter("no reports to check".into()))?;
    let nu = first.lapse_max.max(1.0 / first.lapse_min);
    let mut worst = f64::INFINITY;
    let mut checked = 0;
    let mut failed_at = None;
    for (j, r) in reports.iter().enumerate() {
        let spectrum_ok = r.spectrum_min >= 0.25 && r.spectrum_max <= 4.0;
        let lapse_ok = r.lapse_min >= 0.5 / nu && r.lapse_max <= 2.0 * nu;
        if !(spectrum_ok && lapse_ok) {
            failed_at = Some(j);
            break;
        }
        if j == 0 {
            continue;
        }
        let margin = 20.0 * nu * (r.tau - first.tau).abs() - r.speed_integral;
        worst = worst.min(margin);
        checked += 1;
    }
    Ok(CausalCheck {
        nu,
        worst_margin: worst,
        steps_checked: checked,
        hypotheses_failed_at: failed_at,
    })
}

/// Proper time along the integral curve through `p` until a monitor fires,
/// the domain of initial radius `r0` around `p` crushes, or the run ends.
/// The stopping crossing is interpolated linearly inside the final step; the
/// result is zero if `s0` already violates a threshold.
pub fn temporal_extent(
    s0: &SliceState,
    p: [f64; 3],
    r0: f64,
    thresholds: &ThresholdConfig,
    cfg: &EvolutionConfig,
) -> Result<f64> {
    let domain = DomainSpec::with_halo_cells(s0.grid(), p, r0, 1.0)?;
    let monitors = MonitorConfig {
        thresholds: *thresholds,
        domain: Some(domain),
        center: None,
    };
    Ok(evolve(s0.clone(), cfg, &monitors)?.extent)
}

/// Temporal extents of a run and of its rescaled copy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingCheck {
    pub lambda: f64,
    pub extent: f64,
    pub scaled_extent: f64,
}

impl ScalingCheck {
    pub fn ratio(&self) -> f64 {
        self.scaled_extent / self.extent
    }
}

/// The rescaled data `(λ² g, λ k, λ n, λ⁻² f)`. Solutions map to solutions with
/// the same coordinate time and every length, time and proper time multiplied by `λ`.
pub fn rescale_state(s: &SliceState, lambda: f64) -> Result<SliceState> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("scale factor {lambda}")));
    }
    let l2 = lambda * lambda;
    let g = s.metric().map(|m| m.scale(l2));
    let k = s.extrinsic_curvature().map(|m| m.scale(lambda));
    let grid = *s.grid();
    let n = crate::grid::ScalarField::new(
        grid,
        s.lapse().values().iter().map(|v| v * lambda).collect(),
    )?;
    let f = crate::grid::ScalarField::new(
        grid,
        s.gauge_density().values().iter().map(|v| v / l2).collect(),
    )?;
    SliceState::new(g, k, n, f, s.tau())
}

/// Extent of a run from `s` and of its `λ`-rescaling with thresholds scaled by `λ⁻¹`.
pub fn scaling_law_check(
    s: &SliceState,
    lambda: f64,
    monitors: &MonitorConfig,
    cfg: &EvolutionConfig,
) -> Result<ScalingCheck> {
    let scaled_state = rescale_state(s, lambda)?;
    let base = evolve(s.clone(), cfg, monitors)?;
    let scaled_monitors = MonitorConfig {
        thresholds: monitors.thresholds.rescaled(lambda),
        ..*monitors
    };
    let scaled = evolve(scaled_state, cfg, &scaled_monitors)?;
    Ok(ScalingCheck {
        lambda,
        extent: base.extent,
        scaled_extent: scaled.extent,
    })
}

/// Lower bound `min(T*₁, r_h T*₁)` on the extent at bound `alpha`, from a
/// harmonic radius `r_h` and a calibrated unit-scale extent `T*₁`.
pub fn extent_lower_bound(alpha: f64, harmonic_radius: f64, unit_extent: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha {alpha}")));
    }
    if !(unit_extent > 0.0 && unit_extent.is_finite()) {
        return Err(Error::InvalidParameter(format!("extent {unit_extent}")));
    }
    if !(harmonic_radius > 0.0 && harmonic_radius.is_finite()) {
        return Err(Error::InvalidParameter(format!("radius {harmonic_radius}")));
    }
    Ok(unit_extent.min(harmonic_radius * unit_extent))
}
