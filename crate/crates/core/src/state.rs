//! The dynamical state of a time slice in the time-harmonic zero-shift gauge.
//!
//! The lapse is carried as an evolved field. The gauge condition ties it to the
//! metric through a time-independent density, `n = f √det g`, which is kept as
//! a cross-check rather than imposed.

use alloc::vec::Vec;

use crate::calculus::metric_pointwise;
use crate::error::{Error, Result};
use crate::grid::{collect_points, GridSpec, ScalarField, SymTensorField};
use crate::math;
use crate::tensor::{covector_norm2, raise_first, sym_norm2, Sym3};

/// Fields on one slice. `k` follows `k(X, Y) = −g(D_X T, Y)`, so `∂_τ g = −2 n k`.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceState {
    g: SymTensorField,
    k: SymTensorField,
    n: ScalarField,
    f: ScalarField,
    tau: f64,
}

pub(crate) fn check_positive(field: &ScalarField) -> Result<()> {
    match field
        .values()
        .iter()
        .position(|v| !(*v > 0.0) || !v.is_finite())
    {
        Some(index) => Err(Error::NonPositiveLapse { index }),
        None => Ok(()),
    }
}

pub(crate) fn check_metric(g: &SymTensorField) -> Result<()> {
    let grid = g.grid();
    match (0..grid.len()).find(|&i| !g.at(i).is_positive_definite()) {
        Some(index) => Err(Error::NonPositiveDefinite { index }),
        None => Ok(()),
    }
}

impl SliceState {
    /// Assemble a state from all four fields, checking the sign invariants.
    /// The gauge identity is not enforced here; see [`gauge_residual`].
    pub fn new(
        g: SymTensorField,
        k: SymTensorField,
        n: ScalarField,
        f: ScalarField,
        tau: f64,
    ) -> Result<Self> {
        let grid = *g.grid();
        grid.same_as(k.grid())?;
        grid.same_as(n.grid())?;
        grid.same_as(f.grid())?;
        check_metric(&g)?;
        check_positive(&n)?;
        check_positive(&f)?;
        if !tau.is_finite() {
            return Err(Error::InvalidParameter(alloc::format!("tau = {tau}")));
        }
        Ok(SliceState { g, k, n, f, tau })
    }

    pub(crate) fn from_parts(
        g: SymTensorField,
        k: SymTensorField,
        n: ScalarField,
        f: ScalarField,
        tau: f64,
    ) -> Self {
        SliceState { g, k, n, f, tau }
    }

    pub(crate) fn set_tau(&mut self, tau: f64) {
        self.tau = tau;
    }

    pub fn grid(&self) -> &GridSpec {
        self.g.grid()
    }

    pub fn metric(&self) -> &SymTensorField {
        &self.g
    }

    pub fn extrinsic_curvature(&self) -> &SymTensorField {
        &self.k
    }

    pub fn lapse(&self) -> &ScalarField {
        &self.n
    }

    pub fn gauge_density(&self) -> &ScalarField {
        &self.f
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn into_parts(
        self,
    ) -> (
        SymTensorField,
        SymTensorField,
        ScalarField,
        ScalarField,
        f64,
    ) {
        (self.g, self.k, self.n, self.f, self.tau)
    }
}

/// Start a run from `(g0, k0, n0)`: fixes `f = n0 / √det g0` once and for all, `τ = 0`.
pub fn init_gauge(g0: SymTensorField, k0: SymTensorField, n0: ScalarField) -> Result<SliceState> {
    let grid = *g0.grid();
    grid.same_as(k0.grid())?;
    grid.same_as(n0.grid())?;
    let (_, det) = metric_pointwise(&g0)?;
    check_positive(&n0)?;
    let f = collect_points(grid.len(), |i| n0.at(i) / math::sqrt(det.at(i)));
    Ok(SliceState {
        g: g0,
        k: k0,
        n: n0,
        f: ScalarField::from_raw(grid, f),
        tau: 0.0,
    })
}

/// `max |n − f √det g| / n` over the grid.
pub fn gauge_residual(s: &SliceState) -> f64 {
    gauge_residual_over(s, None)
}

pub(crate) fn gauge_residual_at(s: &SliceState, idx: usize) -> f64 {
    let n = s.n.at(idx);
    (n - s.f.at(idx) * math::sqrt(s.g.at(idx).det())).abs() / n
}

pub(crate) fn gauge_residual_over(s: &SliceState, points: Option<&[usize]>) -> f64 {
    match points {
        Some(p) => p.iter().fold(0.0, |m, &i| m.max(gauge_residual_at(s, i))),
        None => (0..s.grid().len()).fold(0.0, |m, i| m.max(gauge_residual_at(s, i))),
    }
}

/// Contravariant `P^{ij} = k^{ij} − (tr k) g^{ij}`.
pub fn p_variable(s: &SliceState) -> Result<SymTensorField> {
    let (inv, _) = metric_pointwise(&s.g)?;
    let grid = *s.grid();
    let packed = collect_points(grid.len(), |idx| {
        let gi = inv.at(idx);
        let k = s.k.at(idx);
        let mixed = raise_first(&gi, &k);
        let tr = mixed[0][0] + mixed[1][1] + mixed[2][2];
        // k^{ij} = k^i_a g^{aj}
        Sym3::from_fn(|i, j| {
            (0..3).map(|a| mixed[i][a] * gi.get(a, j)).sum::<f64>() - tr * gi.get(i, j)
        })
        .0
    });
    Ok(SymTensorField::from_packed(grid, packed))
}

/// Pointwise size of the deformation tensor of the unit normal,
/// `|π| := 2|k|_g + 2|∇ log n|_g`. The factor 2 is a fixed convention; every
/// use of this quantity is relative to a configurable threshold.
pub fn deformation_norm(s: &SliceState) -> Result<ScalarField> {
    let (inv, _) = metric_pointwise(&s.g)?;
    let grad = s.n.gradient();
    let grid = *s.grid();
    let vals = collect_points(grid.len(), |idx| {
        let gi = inv.at(idx);
        let n = s.n.at(idx);
        let dl = grad.at(idx).map(|v| v / n);
        2.0 * math::sqrt(sym_norm2(&gi, &s.k.at(idx))) + 2.0 * math::sqrt(covector_norm2(&gi, &dl))
    });
    Ok(ScalarField::from_raw(grid, vals))
}

/// Per-step scalar diagnostics. Every quantity is taken over the active domain
/// (the whole grid when no domain is tracked).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MonitorReport {
    pub step: usize,
    pub tau: f64,
    /// Signed step that produced this slice (0 for the initial slice).
    pub dt: f64,
    pub gauge_residual: f64,
    pub ham_sup: f64,
    pub ham_l2: f64,
    pub mom_sup: f64,
    pub mom_l2: f64,
    /// Sup of the deformation-tensor proxy `2(|k|_g + |∇ log n|_g)`; thresholded.
    pub breakdown_pointwise: f64,
    /// Sup of `|k|_g + |∇ log n|_g` itself.
    pub breakdown_sup: f64,
    /// Trapezoidal `∫ (sup(|k| + |∇ log n|))² · sup n · |dτ|`.
    pub breakdown_integral_accum: f64,
    /// Trapezoidal `∫ sup|π| · |dτ|`.
    pub pi_l1linf_accum: f64,
    pub curvature_l2: f64,
    pub spectrum_min: f64,
    pub spectrum_max: f64,
    /// Infinite when no domain is tracked.
    pub domain_radius: f64,
    pub wave_energy: f64,
    /// `∫ n |dτ|` along the integral curve through the domain centre.
    pub proper_time: f64,
    /// `∫ v_max |dτ|`, with `v_max = sup n √λ_max(g⁻¹)` over the domain.
    pub speed_integral: f64,
    pub v_max: f64,
    pub lapse_min: f64,
    pub lapse_max: f64,
    /// Sup of `n |k|_g`; integrand of the quasi-isometry bound.
    pub nk_sup: f64,
    /// Trapezoidal `∫ nk_sup |dτ|`.
    pub nk_integral: f64,
}

impl MonitorReport {
    /// All quantities finite. `domain_radius` is infinite when no domain is tracked and is not checked.
    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }

    fn values(&self) -> Vec<f64> {
        alloc::vec![
            self.tau,
            self.dt,
            self.gauge_residual,
            self.ham_sup,
            self.ham_l2,
            self.mom_sup,
            self.mom_l2,
            self.breakdown_pointwise,
            self.breakdown_sup,
            self.breakdown_integral_accum,
            self.pi_l1linf_accum,
            self.curvature_l2,
            self.spectrum_min,
            self.spectrum_max,
            self.wave_energy,
            self.proper_time,
            self.speed_integral,
        ]
    }
}
