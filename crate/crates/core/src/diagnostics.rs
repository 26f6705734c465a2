//! Constraint residuals, the electric/magnetic split of the curvature, the
//! breakdown monitors and the geometric-assumption monitors.
//!
//! Constraints are written for a general slicing. In the maximal case
//! `tr k = 0` they reduce to `R = |k|²` and `∇^j k_ij = 0`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::calculus::{mixed, mixed_trace, norms_over, square, SliceGeometry, TensorRef};
use crate::causal::DomainSpec;
use crate::error::{Error, Result};
use crate::grid::{fd_derivative, plane, CovectorField, ScalarField, SymTensorField};
use crate::math;
use crate::state::{gauge_residual_over, SliceState};
use crate::tensor::{covector_norm2, raise_first, sym_norm2, PAIRS};

/// Thresholds that end a run. All must be positive; `f64::INFINITY` disables one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdConfig {
    /// On the sup of the deformation proxy `2(|k|_g + |∇ log n|_g)`.
    pub pointwise: f64,
    /// On the accumulated `∫ (|k| + |∇ log n|)²_∞ n dτ`.
    pub integral: f64,
    /// On the accumulated `∫ ‖π‖_∞ dτ`.
    pub pi_l1: f64,
    /// `C > 1` of the chart assumption `C⁻¹ σ ≤ g ≤ C σ`.
    pub spectrum_bound: f64,
    /// `σ`, the metric scale the spectrum is compared against (1 unless the data were rescaled).
    pub reference_scale: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig {
            pointwise: f64::INFINITY,
            integral: f64::INFINITY,
            pi_l1: f64::INFINITY,
            spectrum_bound: f64::INFINITY,
            reference_scale: 1.0,
        }
    }
}

impl ThresholdConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("pointwise", self.pointwise),
            ("integral", self.integral),
            ("pi_l1", self.pi_l1),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "threshold {name} = {v} must be positive"
                )));
            }
        }
        if !(self.spectrum_bound > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "spectrum bound {} must exceed 1",
                self.spectrum_bound
            )));
        }
        if !(self.reference_scale > 0.0 && self.reference_scale.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "reference scale {}",
                self.reference_scale
            )));
        }
        Ok(())
    }

    /// Thresholds matching the rescaled data `(λ²g, λk, λn)`: every monitor scales by `λ⁻¹`.
    pub fn rescaled(&self, lambda: f64) -> Self {
        ThresholdConfig {
            pointwise: self.pointwise / lambda,
            integral: self.integral / lambda,
            pi_l1: self.pi_l1 / lambda,
            spectrum_bound: self.spectrum_bound,
            reference_scale: self.reference_scale * lambda * lambda,
        }
    }

    /// The first monitor of `r` beyond its threshold, if any.
    pub fn fired(&self, r: &crate::state::MonitorReport) -> Option<MonitorKind> {
        if r.breakdown_pointwise > self.pointwise {
            Some(MonitorKind::Pointwise)
        } else if r.breakdown_integral_accum > self.integral {
            Some(MonitorKind::Integral)
        } else if r.pi_l1linf_accum > self.pi_l1 {
            Some(MonitorKind::PiL1)
        } else if r.spectrum_min < self.reference_scale / self.spectrum_bound
            || r.spectrum_max > self.reference_scale * self.spectrum_bound
        {
            Some(MonitorKind::Spectrum)
        } else {
            None
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MonitorKind {
    Pointwise,
    Integral,
    PiL1,
    Spectrum,
}

impl MonitorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MonitorKind::Pointwise => "pointwise",
            MonitorKind::Integral => "integral",
            MonitorKind::PiL1 => "pi_l1",
            MonitorKind::Spectrum => "spectrum",
        }
    }
}

pub(crate) fn hamiltonian_with(s: &SliceState, geom: &SliceGeometry) -> ScalarField {
    let grid = *s.grid();
    let m = mixed(&geom.inverse, s.extrinsic_curvature());
    let tr = mixed_trace(&m);
    let mut out = plane::trace(geom.inverse.planes(), geom.ricci.planes());
    plane::mul_add(&mut out, &tr, &tr);
    for a in 0..3 {
        for b in 0..3 {
            plane::mul_sub(&mut out, &m[a][b], &m[b][a]);
        }
    }
    ScalarField::from_raw(grid, out)
}

/// `H = R − |k|²_g + (tr k)²`.
pub fn hamiltonian_residual(s: &SliceState) -> Result<ScalarField> {
    Ok(hamiltonian_with(s, &SliceGeometry::new(s.metric())?))
}

pub(crate) fn momentum_with(
    s: &SliceState,
    geom: &SliceGeometry,
    nabla_k: &[SymTensorField; 3],
) -> CovectorField {
    let grid = *s.grid();
    let trk = plane::trace(geom.inverse.planes(), s.extrinsic_curvature().planes());
    let comps = core::array::from_fn(|i| {
        let mut out: Vec<f64> = fd_derivative(&grid, &trk, i).iter().map(|v| -v).collect();
        for j in 0..3 {
            for b in 0..3 {
                plane::mul_add(&mut out, geom.inverse.comp(j, b), nabla_k[b].comp(i, j));
            }
        }
        out
    });
    CovectorField::from_raw(grid, comps)
}

/// `M_i = ∇^j k_ij − ∇_i tr k`.
pub fn momentum_residual(s: &SliceState) -> Result<CovectorField> {
    let geom = SliceGeometry::new(s.metric())?;
    let nabla_k = geom.covariant_derivative(s.extrinsic_curvature());
    Ok(momentum_with(s, &geom, &nabla_k))
}

pub(crate) fn electric_magnetic_with(
    s: &SliceState,
    geom: &SliceGeometry,
    nabla_k: &[SymTensorField; 3],
) -> (SymTensorField, SymTensorField) {
    let grid = *s.grid();
    let k = s.extrinsic_curvature();
    let m = mixed(&geom.inverse, k);
    let tr = mixed_trace(&m);
    let kk = square(k, &m);
    let e = core::array::from_fn(|p| {
        let mut out = geom.ricci.plane(p).to_vec();
        plane::mul_add(&mut out, &tr, k.plane(p));
        plane::axpy(&mut out, -1.0, &kk[p]);
        out
    });
    // ε_i^{ab} ∇_a k_bj = g_im c^m_j / √det g with c^m_j = [mab] ∇_a k_bj.
    let c: [[Vec<f64>; 3]; 3] = core::array::from_fn(|mi| {
        let (a, b) = ((mi + 1) % 3, (mi + 2) % 3);
        core::array::from_fn(|j| {
            nabla_k[a]
                .comp(b, j)
                .iter()
                .zip(nabla_k[b].comp(a, j))
                .map(|(x, y)| x - y)
                .collect()
        })
    });
    let inv_vol: Vec<f64> = geom
        .det
        .values()
        .iter()
        .map(|d| 1.0 / math::sqrt(*d))
        .collect();
    let g = s.metric();
    let b = core::array::from_fn(|p| {
        let (i, j) = PAIRS[p];
        let mut out = vec![0.0; grid.len()];
        for mi in 0..3 {
            plane::mul_add(&mut out, g.comp(i, mi), c[mi][j].as_slice());
            plane::mul_add(&mut out, g.comp(j, mi), c[mi][i].as_slice());
        }
        for (o, w) in out.iter_mut().zip(&inv_vol) {
            *o *= 0.5 * w;
        }
        out
    });
    (
        SymTensorField::from_raw(grid, e),
        SymTensorField::from_raw(grid, b),
    )
}

/// Electric and magnetic parts of the spacetime curvature relative to the slice normal (vacuum):
/// `E_ij = R_ij + (tr k) k_ij − k_i^a k_aj`, `B_ij = sym ε_i^{ab} ∇_a k_bj`.
pub fn electric_magnetic(s: &SliceState) -> Result<(SymTensorField, SymTensorField)> {
    let geom = SliceGeometry::new(s.metric())?;
    let nabla_k = geom.covariant_derivative(s.extrinsic_curvature());
    Ok(electric_magnetic_with(s, &geom, &nabla_k))
}

fn domain_points(s: &SliceState, domain: Option<&DomainSpec>) -> Option<Vec<usize>> {
    domain.map(|d| d.points(s.grid()))
}

pub(crate) fn curvature_l2_with(
    e: &SymTensorField,
    b: &SymTensorField,
    geom: &SliceGeometry,
    points: Option<&[usize]>,
) -> f64 {
    let ne = norms_over(TensorRef::Sym2(e), &geom.inverse, &geom.det, points, true);
    let nb = norms_over(TensorRef::Sym2(b), &geom.inverse, &geom.det, points, true);
    ne.l2 * ne.l2 + nb.l2 * nb.l2
}

/// `∫ (|E|²_g + |B|²_g) dμ_g` over the domain (whole grid when `None`).
pub fn curvature_l2(s: &SliceState, domain: Option<&DomainSpec>) -> Result<f64> {
    let geom = SliceGeometry::new(s.metric())?;
    let nabla_k = geom.covariant_derivative(s.extrinsic_curvature());
    let (e, b) = electric_magnetic_with(s, &geom, &nabla_k);
    let pts = domain_points(s, domain);
    Ok(curvature_l2_with(&e, &b, &geom, pts.as_deref()))
}

/// Running integrals of the breakdown monitors (trapezoidal in `|τ|`).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BreakdownAccumulators {
    pub integral: f64,
    pub pi_l1: f64,
    /// Integrands at the previous sample: `(m² · sup n, sup |π|)`.
    pub last: Option<(f64, f64)>,
}

/// One evaluation of the breakdown monitors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BreakdownSample {
    /// `m = sup (|k|_g + |∇ log n|_g)` over the domain.
    pub sup: f64,
    /// Sup of the deformation proxy, `2m`.
    pub pi_sup: f64,
    /// Domain sup of the lapse.
    pub lapse_sup: f64,
}

pub(crate) fn breakdown_sample(
    s: &SliceState,
    inv: &SymTensorField,
    points: Option<&[usize]>,
) -> BreakdownSample {
    let grid = *s.grid();
    let grad = s.lapse().gradient();
    let k = s.extrinsic_curvature();
    let mut sup: f64 = 0.0;
    let mut lapse_sup: f64 = 0.0;
    let mut visit = |idx: usize| {
        let gi = inv.at(idx);
        let n = s.lapse().at(idx);
        let dl = grad.at(idx).map(|v| v / n);
        let m = math::sqrt(sym_norm2(&gi, &k.at(idx))) + math::sqrt(covector_norm2(&gi, &dl));
        sup = sup.max(m);
        lapse_sup = lapse_sup.max(n);
    };
    match points {
        Some(p) => p.iter().for_each(|&i| visit(i)),
        None => (0..grid.len()).for_each(&mut visit),
    }
    BreakdownSample {
        sup,
        pi_sup: 2.0 * sup,
        lapse_sup,
    }
}

impl BreakdownAccumulators {
    /// Fold in a sample taken `dt` after the previous one.
    pub fn update(&mut self, sample: &BreakdownSample, dt: f64) {
        let q = sample.sup * sample.sup * sample.lapse_sup;
        if let Some((q0, p0)) = self.last {
            self.integral += 0.5 * (q0 + q) * dt.abs();
            self.pi_l1 += 0.5 * (p0 + sample.pi_sup) * dt.abs();
        }
        self.last = Some((q, sample.pi_sup));
    }
}

/// Evaluate the pointwise breakdown quantity on `s` and fold it into `acc`,
/// `dt` being the signed step since the previous call (ignored on the first).
pub fn breakdown_monitors(
    s: &SliceState,
    domain: Option<&DomainSpec>,
    acc: &mut BreakdownAccumulators,
    dt: f64,
) -> Result<BreakdownSample> {
    let (inv, _) = crate::calculus::metric_pointwise(s.metric())?;
    let pts = domain_points(s, domain);
    let sample = breakdown_sample(s, &inv, pts.as_deref());
    acc.update(&sample, dt);
    Ok(sample)
}

pub(crate) fn spectrum_over(g: &SymTensorField, points: Option<&[usize]>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut visit = |idx: usize| {
        let ev = g.at(idx).eigenvalues();
        lo = lo.min(ev[0]);
        hi = hi.max(ev[2]);
    };
    match points {
        Some(p) => p.iter().for_each(|&i| visit(i)),
        None => (0..g.grid().len()).for_each(&mut visit),
    }
    (lo, hi)
}

/// Extreme eigenvalues of `g_ij` in the fixed chart over the domain.
pub fn spectrum_monitor(s: &SliceState, domain: Option<&DomainSpec>) -> (f64, f64) {
    let pts = domain_points(s, domain);
    spectrum_over(s.metric(), pts.as_deref())
}

/// Quasi-isometry constant `C' = C exp(2 ∫ ‖n k‖_∞ dτ)` from sampled `(τ, ‖n k‖_∞)`
/// pairs, trapezoidal. Since `∂_τ g = −2 n k`, the metric's spectrum relative to
/// its initial chart bound `C` stays inside `[C'⁻¹, C']`.
pub fn quasi_isometry_bound(c: f64, samples: &[(f64, f64)]) -> f64 {
    c * math::exp(2.0 * trapezoid(samples))
}

fn trapezoid(samples: &[(f64, f64)]) -> f64 {
    samples
        .windows(2)
        .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0).abs())
        .sum()
}

pub(crate) fn wave_energy_over(
    du: &SymTensorField,
    s: &SliceState,
    geom: &SliceGeometry,
    nabla_u: &[SymTensorField; 3],
    points: Option<&[usize]>,
) -> f64 {
    let grid = *s.grid();
    let dv = grid.cell_volume();
    let density = |idx: usize| {
        let gi = geom.inverse.at(idx);
        let n = s.lapse().at(idx);
        let kinetic = sym_norm2(&gi, &du.at(idx)) / (n * n);
        let m: [[[f64; 3]; 3]; 3] = core::array::from_fn(|a| raise_first(&gi, &nabla_u[a].at(idx)));
        let mut grad = 0.0;
        for a in 0..3 {
            for a2 in 0..3 {
                let w = gi.get(a, a2);
                if w == 0.0 {
                    continue;
                }
                let mut inner = 0.0;
                for b in 0..3 {
                    for c in 0..3 {
                        inner += m[a][b][c] * m[a2][c][b];
                    }
                }
                grad += w * inner;
            }
        }
        0.5 * (kinetic + grad) * math::sqrt(geom.det.at(idx)) * dv
    };
    match points {
        Some(p) => p.iter().map(|&i| density(i)).sum(),
        None => (0..grid.len()).map(density).sum(),
    }
}

/// `½ ∫ (n⁻² |∂_τ u|²_g + |∇u|²_g) dμ_g` over the domain for a symmetric 2-tensor `u`.
pub fn wave_energy(
    u: &SymTensorField,
    du_dtau: &SymTensorField,
    s: &SliceState,
    domain: Option<&DomainSpec>,
) -> Result<f64> {
    s.grid().same_as(u.grid())?;
    s.grid().same_as(du_dtau.grid())?;
    let geom = SliceGeometry::new(s.metric())?;
    let pts = domain_points(s, domain);
    let nabla_u = geom.covariant_derivative(u);
    Ok(wave_energy_over(
        du_dtau,
        s,
        &geom,
        &nabla_u,
        pts.as_deref(),
    ))
}

/// Instantaneous (non-accumulated) quantities of a slice.
#[derive(Clone, Copy, Debug)]
pub(crate) struct SliceDiagnostics {
    pub gauge_residual: f64,
    pub ham_sup: f64,
    pub ham_l2: f64,
    pub mom_sup: f64,
    pub mom_l2: f64,
    pub breakdown: BreakdownSample,
    pub curvature_l2: f64,
    pub spectrum_min: f64,
    pub spectrum_max: f64,
    pub wave_energy: f64,
    pub v_max: f64,
    pub lapse_min: f64,
    pub lapse_max: f64,
    pub nk_sup: f64,
    pub center_lapse: f64,
}

pub(crate) fn evaluate(
    s: &SliceState,
    geom: &SliceGeometry,
    dk: &SymTensorField,
    points: Option<&[usize]>,
    center: [f64; 3],
) -> SliceDiagnostics {
    let grid = *s.grid();
    let ham = hamiltonian_with(s, geom);
    let nabla_k = geom.covariant_derivative(s.extrinsic_curvature());
    let mom = momentum_with(s, geom, &nabla_k);
    let hn = norms_over(
        TensorRef::Scalar(&ham),
        &geom.inverse,
        &geom.det,
        points,
        true,
    );
    let mn = norms_over(
        TensorRef::Covector(&mom),
        &geom.inverse,
        &geom.det,
        points,
        true,
    );
    let (e, b) = electric_magnetic_with(s, geom, &nabla_k);
    let curvature = curvature_l2_with(&e, &b, geom, points);
    let (spectrum_min, spectrum_max) = spectrum_over(s.metric(), points);
    let breakdown = breakdown_sample(s, &geom.inverse, points);
    let wave = wave_energy_over(dk, s, geom, &nabla_k, points);

    let mut v_max: f64 = 0.0;
    let mut nk_sup: f64 = 0.0;
    let mut lapse_min = f64::INFINITY;
    let mut lapse_max: f64 = 0.0;
    let mut visit = |idx: usize| {
        let n = s.lapse().at(idx);
        let gi = geom.inverse.at(idx);
        v_max = v_max.max(n * math::sqrt(gi.eigenvalues()[2]));
        nk_sup = nk_sup.max(n * math::sqrt(sym_norm2(&gi, &s.extrinsic_curvature().at(idx))));
        lapse_min = lapse_min.min(n);
        lapse_max = lapse_max.max(n);
    };
    match points {
        Some(p) => p.iter().for_each(|&i| visit(i)),
        None => (0..grid.len()).for_each(&mut visit),
    }
    let h = grid.spacing();
    let center_lapse = s.lapse().interpolate(center.map(|c| c / h));

    SliceDiagnostics {
        gauge_residual: gauge_residual_over(s, points),
        ham_sup: hn.sup,
        ham_l2: hn.l2,
        mom_sup: mn.sup,
        mom_l2: mn.l2,
        breakdown,
        curvature_l2: curvature,
        spectrum_min,
        spectrum_max,
        wave_energy: wave,
        v_max,
        lapse_min,
        lapse_max,
        nk_sup,
        center_lapse,
    }
}
