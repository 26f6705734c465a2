//! Closed-form reference slices: flat space, the Kasner family in harmonic
//! time, and a small transverse-traceless metric wave on flat space.
//!
//! With proper-time Kasner `g = diag(t^{2p_i})`, unit lapse, the harmonic time
//! obeys `dτ = dt / (f t)`, so `t = e^{fτ}` and
//!
//! ```text
//! g_ii = e^{2 p_i f τ}    n = f e^{fτ}    k_ii = −p_i e^{(2p_i − 1) f τ}    tr k = −e^{−fτ}
//! ```
//!
//! The same fields come out of a direct integration of the homogeneous
//! evolution ODEs, independent of the grid code:
//!
//! ```
//! use evth_core::{kasner_state, GridSpec, KasnerParams};
//!
//! let kp = KasnerParams::new(2.0 / 3.0, 2.0 / 3.0, -1.0 / 3.0, 1.0).unwrap();
//! let p = [2.0 / 3.0, 2.0 / 3.0, -1.0 / 3.0];
//! // y = (g_11, g_22, g_33, k_11, k_22, k_33, n)
//! let rhs = |y: &[f64; 7]| {
//!     let n = y[6];
//!     let tr: f64 = (0..3).map(|i| y[3 + i] / y[i]).sum();
//!     let mut d = [0.0; 7];
//!     for i in 0..3 {
//!         d[i] = -2.0 * n * y[3 + i];
//!         d[3 + i] = n * (tr * y[3 + i] - 2.0 * y[3 + i] * y[3 + i] / y[i]);
//!     }
//!     d[6] = -n * n * tr;
//!     d
//! };
//! let mut y = [1.0, 1.0, 1.0, -p[0], -p[1], -p[2], 1.0];
//! let steps = 4000;
//! let h = std::f64::consts::LN_2 / steps as f64;
//! for _ in 0..steps {
//!     let add = |y: &[f64; 7], d: &[f64; 7], c: f64| core::array::from_fn::<f64, 7, _>(|i| y[i] + c * d[i]);
//!     let k1 = rhs(&y);
//!     let k2 = rhs(&add(&y, &k1, h / 2.0));
//!     let k3 = rhs(&add(&y, &k2, h / 2.0));
//!     let k4 = rhs(&add(&y, &k3, h));
//!     y = core::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
//! }
//! let s = kasner_state(&kp, std::f64::consts::LN_2, GridSpec::new(8, 1.0).unwrap()).unwrap();
//! for i in 0..3 {
//!     assert!((s.metric().comp(i, i)[0] - y[i]).abs() < 1e-12);
//!     assert!((s.extrinsic_curvature().comp(i, i)[0] - y[3 + i]).abs() < 1e-12);
//! }
//! assert!((s.lapse().at(0) - y[6]).abs() < 1e-12);
//! ```

use alloc::format;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField, SymTensorField};
use crate::math;
use crate::state::{init_gauge, SliceState};
use crate::tensor::Sym3;

const KASNER_TOL: f64 = 1e-12;

/// Largest amplitude accepted by [`perturbed_flat`].
pub const MAX_PERTURBATION: f64 = 1e-3;

/// Kasner exponents with `Σp = Σp² = 1` and a homogeneous gauge density `f`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KasnerParams {
    p: [f64; 3],
    f: f64,
}

impl KasnerParams {
    pub fn new(p1: f64, p2: f64, p3: f64, f: f64) -> Result<Self> {
        let p = [p1, p2, p3];
        let sum = p1 + p2 + p3;
        if (sum - 1.0).abs() > KASNER_TOL || !sum.is_finite() {
            return Err(Error::InvalidKasner(format!(
                "p1 + p2 + p3 = {sum}, expected 1"
            )));
        }
        let sq: f64 = p.iter().map(|v| v * v).sum();
        if (sq - 1.0).abs() > KASNER_TOL {
            return Err(Error::InvalidKasner(format!(
                "p1² + p2² + p3² = {sq}, expected 1"
            )));
        }
        if !(f > 0.0 && f.is_finite()) {
            return Err(Error::InvalidKasner(format!(
                "gauge density f = {f} must be positive"
            )));
        }
        Ok(KasnerParams { p, f })
    }

    /// Derive `p3 = 1 − p1 − p2` and check `Σp² = 1`.
    pub fn from_pair(p1: f64, p2: f64, f: f64) -> Result<Self> {
        KasnerParams::new(p1, p2, 1.0 - p1 - p2, f)
    }

    pub fn exponents(&self) -> [f64; 3] {
        self.p
    }

    pub fn density(&self) -> f64 {
        self.f
    }

    /// `(g_ii, k_ii, n)` at harmonic time `tau`.
    pub fn fields(&self, tau: f64) -> ([f64; 3], [f64; 3], f64) {
        let ft = self.f * tau;
        let g = self.p.map(|p| math::exp(2.0 * p * ft));
        let k = self.p.map(|p| -p * math::exp((2.0 * p - 1.0) * ft));
        (g, k, self.f * math::exp(ft))
    }
}

/// Homogeneous Kasner slice at harmonic time `tau`.
pub fn kasner_state(kp: &KasnerParams, tau: f64, grid: GridSpec) -> Result<SliceState> {
    let (g, k, n) = kp.fields(tau);
    SliceState::new(
        SymTensorField::constant(grid, Sym3::diag(g[0], g[1], g[2])),
        SymTensorField::constant(grid, Sym3::diag(k[0], k[1], k[2])),
        ScalarField::constant(grid, n),
        ScalarField::constant(grid, kp.f),
        tau,
    )
}

/// `g = δ`, `k = 0`, `n = f = 1`.
pub fn flat_state(grid: GridSpec) -> SliceState {
    SliceState::from_parts(
        SymTensorField::constant(grid, Sym3::IDENTITY),
        SymTensorField::constant(grid, Sym3::ZERO),
        ScalarField::constant(grid, 1.0),
        ScalarField::constant(grid, 1.0),
        0.0,
    )
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalized(a: [f64; 3]) -> [f64; 3] {
    let len = math::sqrt(a.iter().map(|v| v * v).sum());
    a.map(|v| v / len)
}

/// Two orthonormal vectors orthogonal to `m`. For a coordinate axis these are
/// the other two axes, in cyclic order.
fn transverse_basis(m: [i64; 3]) -> ([f64; 3], [f64; 3]) {
    let nonzero: usize = m.iter().filter(|v| **v != 0).count();
    if nonzero == 1 {
        let axis = m.iter().position(|v| *v != 0).unwrap_or(0);
        let unit = |i: usize| core::array::from_fn(|c| if c == i { 1.0 } else { 0.0 });
        return (unit((axis + 1) % 3), unit((axis + 2) % 3));
    }
    let mhat = normalized(m.map(|v| v as f64));
    let weakest = (0..3)
        .min_by(|&a, &b| mhat[a].abs().total_cmp(&mhat[b].abs()))
        .unwrap_or(0);
    let axis = core::array::from_fn(|c| if c == weakest { 1.0 } else { 0.0 });
    let ea = normalized(cross(mhat, axis));
    let eb = cross(mhat, ea);
    (ea, eb)
}

/// `g = δ + ε sin(2π⟨m, x⟩/L) (e_a⊗e_a − e_b⊗e_b)` with `e_a, e_b ⊥ m`,
/// `k = 0`, `n = 1`, `f` from [`init_gauge`]. The perturbation is
/// transverse-traceless, so the constraints are violated only at `O(ε²)`.
pub fn perturbed_flat(grid: GridSpec, amplitude: f64, wavevector: [i64; 3]) -> Result<SliceState> {
    if !(amplitude.abs() <= MAX_PERTURBATION) {
        return Err(Error::AmplitudeTooLarge {
            amplitude,
            limit: MAX_PERTURBATION,
        });
    }
    if wavevector == [0, 0, 0] {
        return Err(Error::InvalidParameter(
            "wavevector must be non-zero".into(),
        ));
    }
    let (ea, eb) = transverse_basis(wavevector);
    let dir = Sym3::from_fn(|i, j| ea[i] * ea[j] - eb[i] * eb[j]);
    let m = wavevector.map(|v| v as f64);
    let w = 2.0 * core::f64::consts::PI / grid.period();
    let g = SymTensorField::from_fn(grid, move |x| {
        let phase = w * (m[0] * x[0] + m[1] * x[1] + m[2] * x[2]);
        let s = amplitude * math::sin(phase);
        Sym3::from_fn(|i, j| if i == j { 1.0 } else { 0.0 } + s * dir.get(i, j))
    })?;
    init_gauge(
        g,
        SymTensorField::constant(grid, Sym3::ZERO),
        ScalarField::constant(grid, 1.0),
    )
}
