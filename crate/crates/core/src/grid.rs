//! Periodic uniform 3D grid, discrete fields and the fourth-order difference stencil.
//!
//! Points are stored x-fastest: `index = i + n * (j + n * k)`, with grid point
//! `(i, j, k)` sitting at coordinates `(i h, j h, k h)`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::tensor::Sym3;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Evaluate `f` at every grid index. Order of the output is the index order
/// whether or not the `parallel` feature is on.
pub(crate) fn collect_points<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

pub(crate) fn split<const N: usize>(packed: Vec<[f64; N]>) -> [Vec<f64>; N] {
    let mut out: [Vec<f64>; N] = core::array::from_fn(|_| alloc::vec![0.0; packed.len()]);
    for (i, p) in packed.iter().enumerate() {
        for c in 0..N {
            out[c][i] = p[c];
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    npts: usize,
    period: f64,
    spacing: f64,
}

impl GridSpec {
    /// Room for the five-point stencil on each side.
    pub const MIN_POINTS: usize = 8;

    pub fn new(npts: usize, period: f64) -> Result<Self> {
        if npts < Self::MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "npts_per_axis = {npts} is below the minimum {}",
                Self::MIN_POINTS
            )));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "period = {period} must be positive"
            )));
        }
        Ok(GridSpec {
            npts,
            period,
            spacing: period / npts as f64,
        })
    }

    pub fn npts(&self) -> usize {
        self.npts
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.npts * self.npts * self.npts
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing * self.spacing * self.spacing
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.npts * (j + self.npts * k)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let n = self.npts;
        [idx % n, (idx / n) % n, idx / (n * n)]
    }

    #[inline]
    pub fn position(&self, idx: usize) -> [f64; 3] {
        self.coords(idx).map(|c| c as f64 * self.spacing)
    }

    /// Index of the grid point nearest to `x` (periodic).
    pub fn nearest_index(&self, x: [f64; 3]) -> usize {
        let n = self.npts as i64;
        let c = x.map(|v| (math::round(v / self.spacing) as i64).rem_euclid(n) as usize);
        self.index(c[0], c[1], c[2])
    }

    /// Index after shifting point `idx` by an integer offset, with wraparound.
    #[inline]
    pub fn offset(&self, idx: usize, d: [i64; 3]) -> usize {
        let n = self.npts as i64;
        let c = self.coords(idx);
        let w = |a: usize, s: i64| (a as i64 + s).rem_euclid(n) as usize;
        self.index(w(c[0], d[0]), w(c[1], d[1]), w(c[2], d[2]))
    }

    /// Shortest coordinate distance on the torus.
    pub fn periodic_distance(&self, a: [f64; 3], b: [f64; 3]) -> f64 {
        let l = self.period;
        let mut s = 0.0;
        for c in 0..3 {
            let mut d = (a[c] - b[c]) % l;
            if d < 0.0 {
                d += l;
            }
            let d = if d > 0.5 * l { l - d } else { d };
            s += d * d;
        }
        math::sqrt(s)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::ShapeMismatch(format!(
                "buffer of {len} values on a grid of {} points",
                self.len()
            )));
        }
        Ok(())
    }

    pub(crate) fn same_as(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            return Err(Error::ShapeMismatch(format!(
                "grids differ: {self:?} vs {other:?}"
            )));
        }
        Ok(())
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// Fourth-order centred first derivative along `axis` (0, 1, 2) with periodic wraparound:
/// `(-f[+2] + 8 f[+1] - 8 f[-1] + f[-2]) / (12 h)`.
///
/// Evaluated as `((f[-2] - f[+2]) + 8 (f[+1] - f[-1])) / (12 h)` so that constant
/// input gives exactly zero.
pub fn fd_derivative(grid: &GridSpec, values: &[f64], axis: usize) -> Vec<f64> {
    assert!(axis < 3, "axis must be 0, 1 or 2");
    let n = grid.npts;
    let inv12h = 1.0 / (12.0 * grid.spacing);
    let wrap = |j: usize, s: isize| (j as isize + s).rem_euclid(n as isize) as usize;
    let mut out = alloc::vec![0.0; grid.len()];
    if axis == 0 {
        for_each_chunk(&mut out, n, |row, o| {
            let line = &values[row * n..(row + 1) * n];
            for i in 0..n {
                let (m2, m1, p1, p2) = if i >= 2 && i + 2 < n {
                    (line[i - 2], line[i - 1], line[i + 1], line[i + 2])
                } else {
                    (
                        line[wrap(i, -2)],
                        line[wrap(i, -1)],
                        line[wrap(i, 1)],
                        line[wrap(i, 2)],
                    )
                };
                o[i] = ((m2 - p2) + 8.0 * (p1 - m1)) * inv12h;
            }
        });
    } else {
        // Chunks are planes of constant index along `axis` (rows for axis 1, slabs for axis 2).
        let stride = if axis == 1 { n } else { n * n };
        for_each_chunk(&mut out, stride, |chunk, o| {
            let j = chunk % n;
            let base = chunk - j;
            let src = |jj: usize| &values[(base + jj) * stride..(base + jj + 1) * stride];
            let (m2, m1, p1, p2) = (
                src(wrap(j, -2)),
                src(wrap(j, -1)),
                src(wrap(j, 1)),
                src(wrap(j, 2)),
            );
            for i in 0..stride {
                o[i] = ((m2[i] - p2[i]) + 8.0 * (p1[i] - m1[i])) * inv12h;
            }
        });
    }
    out
}

fn for_each_chunk<F>(out: &mut [f64], size: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        out.par_chunks_mut(size)
            .enumerate()
            .for_each(|(c, o)| f(c, o));
    }
    #[cfg(not(feature = "parallel"))]
    {
        out.chunks_mut(size).enumerate().for_each(|(c, o)| f(c, o));
    }
}

/// Elementwise kernels over whole planes. These vectorize where per-point
/// tensor gathers do not.
pub(crate) mod plane {
    use alloc::vec::Vec;

    /// `a * b`
    pub fn product(a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x * y).collect()
    }

    /// `out += a * b`
    pub fn mul_add(out: &mut [f64], a: &[f64], b: &[f64]) {
        for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
            *o += x * y;
        }
    }

    /// `out -= a * b`
    pub fn mul_sub(out: &mut [f64], a: &[f64], b: &[f64]) {
        for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
            *o -= x * y;
        }
    }

    /// `out += c * x`
    pub fn axpy(out: &mut [f64], c: f64, x: &[f64]) {
        for (o, v) in out.iter_mut().zip(x) {
            *o += c * v;
        }
    }

    /// `out += x`
    pub fn add(out: &mut [f64], x: &[f64]) {
        for (o, v) in out.iter_mut().zip(x) {
            *o += v;
        }
    }

    /// `g^{ab} t_ab` from packed planes of a symmetric inverse and a symmetric tensor.
    pub fn trace(inv: &[Vec<f64>; 6], t: &[Vec<f64>; 6]) -> Vec<f64> {
        let mut out = product(&inv[0], &t[0]);
        mul_add(&mut out, &inv[3], &t[3]);
        mul_add(&mut out, &inv[5], &t[5]);
        for s in [1, 2, 4] {
            for ((o, x), y) in out.iter_mut().zip(&inv[s]).zip(&t[s]) {
                *o += 2.0 * x * y;
            }
        }
        out
    }
}

/// Trilinear interpolation of a periodic nodal array at a position given in cell units.
pub(crate) fn interpolate(grid: &GridSpec, values: &[f64], pos: [f64; 3]) -> f64 {
    let n = grid.npts as i64;
    let base = pos.map(math::floor);
    let frac: [f64; 3] = core::array::from_fn(|c| pos[c] - base[c]);
    let b = base.map(|v| v as i64);
    let mut acc = 0.0;
    for corner in 0..8 {
        let o = [corner & 1, (corner >> 1) & 1, (corner >> 2) & 1];
        let mut w = 1.0;
        for c in 0..3 {
            w *= if o[c] == 1 { frac[c] } else { 1.0 - frac[c] };
        }
        if w == 0.0 {
            continue;
        }
        let idx = grid.index(
            (b[0] + o[0] as i64).rem_euclid(n) as usize,
            (b[1] + o[1] as i64).rem_euclid(n) as usize,
            (b[2] + o[2] as i64).rem_euclid(n) as usize,
        );
        acc += w * values[idx];
    }
    acc
}

/// A real value per grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        grid.check_len(values.len())?;
        check_finite(&values)?;
        Ok(ScalarField { grid, values })
    }

    pub(crate) fn from_raw(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        ScalarField { grid, values }
    }

    pub fn constant(grid: GridSpec, value: f64) -> Self {
        ScalarField {
            grid,
            values: alloc::vec![value; grid.len()],
        }
    }

    /// Sample a function of the coordinate position.
    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> f64 + Sync + Send) -> Result<Self> {
        let values = collect_points(grid.len(), |idx| f(grid.position(idx)));
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn derivative(&self, axis: usize) -> ScalarField {
        ScalarField::from_raw(self.grid, fd_derivative(&self.grid, &self.values, axis))
    }

    pub fn gradient(&self) -> CovectorField {
        CovectorField::from_raw(
            self.grid,
            core::array::from_fn(|a| fd_derivative(&self.grid, &self.values, a)),
        )
    }

    pub fn interpolate(&self, pos_cells: [f64; 3]) -> f64 {
        interpolate(&self.grid, &self.values, pos_cells)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Three covariant components per grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct CovectorField {
    grid: GridSpec,
    comps: [Vec<f64>; 3],
}

impl CovectorField {
    pub(crate) fn from_raw(grid: GridSpec, comps: [Vec<f64>; 3]) -> Self {
        CovectorField { grid, comps }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        CovectorField {
            grid,
            comps: core::array::from_fn(|_| alloc::vec![0.0; grid.len()]),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn comp(&self, a: usize) -> &[f64] {
        &self.comps[a]
    }

    #[inline]
    pub fn at(&self, idx: usize) -> [f64; 3] {
        [self.comps[0][idx], self.comps[1][idx], self.comps[2][idx]]
    }
}

/// A symmetric covariant (or, where documented, contravariant) 2-tensor per grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTensorField {
    grid: GridSpec,
    comps: [Vec<f64>; 6],
}

impl SymTensorField {
    /// Components in packed order 11, 12, 13, 22, 23, 33.
    pub fn new(grid: GridSpec, comps: [Vec<f64>; 6]) -> Result<Self> {
        for c in &comps {
            grid.check_len(c.len())?;
            check_finite(c)?;
        }
        Ok(SymTensorField { grid, comps })
    }

    pub(crate) fn from_raw(grid: GridSpec, comps: [Vec<f64>; 6]) -> Self {
        SymTensorField { grid, comps }
    }

    pub(crate) fn from_packed(grid: GridSpec, packed: Vec<[f64; 6]>) -> Self {
        SymTensorField {
            grid,
            comps: split(packed),
        }
    }

    pub fn constant(grid: GridSpec, value: Sym3) -> Self {
        SymTensorField {
            grid,
            comps: core::array::from_fn(|s| alloc::vec![value.0[s]; grid.len()]),
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> Sym3 + Sync + Send) -> Result<Self> {
        let packed = collect_points(grid.len(), |idx| f(grid.position(idx)).0);
        Self::new(grid, split(packed))
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Packed component plane `s` (see [`crate::tensor::PAIRS`]).
    pub fn plane(&self, s: usize) -> &[f64] {
        &self.comps[s]
    }

    pub fn planes(&self) -> &[Vec<f64>; 6] {
        &self.comps
    }

    pub fn comp(&self, a: usize, b: usize) -> &[f64] {
        &self.comps[crate::tensor::SYM[a][b]]
    }

    #[inline]
    pub fn at(&self, idx: usize) -> Sym3 {
        Sym3(core::array::from_fn(|s| self.comps[s][idx]))
    }

    pub fn interpolate(&self, pos_cells: [f64; 3]) -> Sym3 {
        Sym3(core::array::from_fn(|s| {
            interpolate(&self.grid, &self.comps[s], pos_cells)
        }))
    }

    /// Largest absolute component over the grid.
    pub fn max_abs(&self) -> f64 {
        self.comps.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Derivative of every component along `axis`.
    pub fn derivative(&self, axis: usize) -> SymTensorField {
        SymTensorField {
            grid: self.grid,
            comps: core::array::from_fn(|s| fd_derivative(&self.grid, &self.comps[s], axis)),
        }
    }

    /// Pointwise map returning a new symmetric field.
    pub fn map(&self, f: impl Fn(Sym3) -> Sym3 + Sync + Send) -> SymTensorField {
        let packed = collect_points(self.grid.len(), |idx| f(self.at(idx)).0);
        SymTensorField::from_packed(self.grid, packed)
    }
}
