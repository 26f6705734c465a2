//! Metric algebra and curvature on the grid: inverse and determinant,
//! Christoffel symbols, Ricci tensor, covariant Hessian and tensor norms.
//!
//! Second derivatives are compositions of two first-derivative stencils.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{
    collect_points, fd_derivative, plane, CovectorField, GridSpec, ScalarField, SymTensorField,
};
use crate::math;
use crate::tensor::{covector_norm2, sym_norm2, Sym3, PAIRS, SYM};

/// Pointwise inverse and determinant of `g`.
///
/// Fails with [`Error::NonPositiveDefinite`] at the first point where a leading
/// principal minor is not strictly positive.
pub fn metric_pointwise(g: &SymTensorField) -> Result<(SymTensorField, ScalarField)> {
    let grid = *g.grid();
    let packed: Vec<Option<([f64; 6], f64)>> = collect_points(grid.len(), |idx| {
        let m = g.at(idx);
        if !m.is_positive_definite() {
            return None;
        }
        m.inverse().map(|(inv, det)| (inv.0, det))
    });
    let mut inv = Vec::with_capacity(grid.len());
    let mut det = Vec::with_capacity(grid.len());
    for (index, p) in packed.into_iter().enumerate() {
        let (i, d) = p.ok_or(Error::NonPositiveDefinite { index })?;
        inv.push(i);
        det.push(d);
    }
    Ok((
        SymTensorField::from_packed(grid, inv),
        ScalarField::from_raw(grid, det),
    ))
}

/// Christoffel symbols of the second kind, `Γ^c_{ab}`, symmetric in `ab`.
#[derive(Clone, Debug)]
pub struct Christoffel {
    grid: GridSpec,
    comps: [[Vec<f64>; 6]; 3],
}

impl Christoffel {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn get(&self, c: usize, a: usize, b: usize, idx: usize) -> f64 {
        self.comps[c][SYM[a][b]][idx]
    }

    /// All 27 values at one point, indexed `[c][a][b]`.
    pub fn at(&self, idx: usize) -> [[[f64; 3]; 3]; 3] {
        core::array::from_fn(|c| {
            core::array::from_fn(|a| core::array::from_fn(|b| self.get(c, a, b, idx)))
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flatten()
            .flatten()
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub(crate) fn christoffel_with(g: &SymTensorField, inv: &SymTensorField) -> Christoffel {
    let grid = *g.grid();
    let dg: [SymTensorField; 3] = core::array::from_fn(|a| g.derivative(a));
    // lowered symbols Γ_{dab} = ½(∂_a g_db + ∂_b g_da − ∂_d g_ab)
    let low: [[Vec<f64>; 6]; 3] = core::array::from_fn(|d| {
        core::array::from_fn(|s| {
            let (a, b) = PAIRS[s];
            let (x, y, z) = (dg[a].comp(d, b), dg[b].comp(d, a), dg[d].comp(a, b));
            x.iter()
                .zip(y)
                .zip(z)
                .map(|((x, y), z)| 0.5 * (x + y - z))
                .collect()
        })
    });
    let comps = core::array::from_fn(|c| {
        core::array::from_fn(|s| {
            let mut out = plane::product(inv.comp(c, 0), &low[0][s]);
            plane::mul_add(&mut out, inv.comp(c, 1), &low[1][s]);
            plane::mul_add(&mut out, inv.comp(c, 2), &low[2][s]);
            out
        })
    });
    Christoffel { grid, comps }
}

/// `Γ^c_{ab} = ½ g^{cd}(∂_a g_db + ∂_b g_da − ∂_d g_ab)`.
pub fn christoffel(g: &SymTensorField) -> Result<Christoffel> {
    let (inv, _) = metric_pointwise(g)?;
    Ok(christoffel_with(g, &inv))
}

pub(crate) fn ricci_from(gamma: &Christoffel) -> SymTensorField {
    let grid = gamma.grid;
    let comp = |c: usize, a: usize, b: usize| -> &[f64] { &gamma.comps[c][SYM[a][b]] };
    // V_j = Γ^c_cj
    let v: [Vec<f64>; 3] = core::array::from_fn(|j| {
        let mut out = comp(0, 0, j).to_vec();
        plane::add(&mut out, comp(1, 1, j));
        plane::add(&mut out, comp(2, 2, j));
        out
    });
    let dv: [[Vec<f64>; 3]; 3] =
        core::array::from_fn(|i| core::array::from_fn(|j| fd_derivative(&grid, &v[j], i)));
    let comps = core::array::from_fn(|s| {
        let (i, j) = PAIRS[s];
        // ∂_c Γ^c_ij
        let mut out = fd_derivative(&grid, &gamma.comps[0][s], 0);
        plane::add(&mut out, &fd_derivative(&grid, &gamma.comps[1][s], 1));
        plane::add(&mut out, &fd_derivative(&grid, &gamma.comps[2][s], 2));
        plane::axpy(&mut out, -0.5, &dv[i][j]);
        plane::axpy(&mut out, -0.5, &dv[j][i]);
        for d in 0..3 {
            plane::mul_add(&mut out, &v[d], comp(d, i, j));
            for c in 0..3 {
                plane::mul_sub(&mut out, comp(c, i, d), comp(d, c, j));
            }
        }
        out
    });
    SymTensorField::from_raw(grid, comps)
}

/// `R_ij = ∂_c Γ^c_ij − ∂_i Γ^c_cj + Γ^c_cd Γ^d_ij − Γ^c_id Γ^d_cj`, with the
/// `∂_i Γ^c_cj` term symmetrized in `ij`.
pub fn ricci(g: &SymTensorField) -> Result<SymTensorField> {
    Ok(ricci_from(&christoffel(g)?))
}

/// `R = g^{ij} R_ij`.
pub fn scalar_curvature(g: &SymTensorField) -> Result<ScalarField> {
    let geom = SliceGeometry::new(g)?;
    Ok(geom.scalar_curvature())
}

pub(crate) fn hessian_with(s: &ScalarField, gamma: &Christoffel) -> SymTensorField {
    let grid = *s.grid();
    let ds: [Vec<f64>; 3] = core::array::from_fn(|a| fd_derivative(&grid, s.values(), a));
    let comps = core::array::from_fn(|p| {
        let (i, j) = PAIRS[p];
        let mut out = fd_derivative(&grid, &ds[i], j);
        for (c, dc) in ds.iter().enumerate() {
            plane::mul_sub(&mut out, &gamma.comps[c][p], dc);
        }
        out
    });
    SymTensorField::from_raw(grid, comps)
}

/// `∇_i∇_j s = ∂_i∂_j s − Γ^c_ij ∂_c s`.
pub fn covariant_hessian(s: &ScalarField, g: &SymTensorField) -> Result<SymTensorField> {
    s.grid().same_as(g.grid())?;
    Ok(hessian_with(s, &christoffel(g)?))
}

/// Mixed components `k^a_j = g^{ab} k_bj`, indexed `[a][j]`.
pub(crate) fn mixed(inv: &SymTensorField, k: &SymTensorField) -> [[Vec<f64>; 3]; 3] {
    core::array::from_fn(|a| {
        core::array::from_fn(|j| {
            let mut out = plane::product(inv.comp(a, 0), k.comp(0, j));
            plane::mul_add(&mut out, inv.comp(a, 1), k.comp(1, j));
            plane::mul_add(&mut out, inv.comp(a, 2), k.comp(2, j));
            out
        })
    })
}

/// `tr k = k^a_a`.
pub(crate) fn mixed_trace(m: &[[Vec<f64>; 3]; 3]) -> Vec<f64> {
    let mut out = m[0][0].clone();
    plane::add(&mut out, &m[1][1]);
    plane::add(&mut out, &m[2][2]);
    out
}

/// `(k·k)_ij = k_ia k^a_j`.
pub(crate) fn square(k: &SymTensorField, m: &[[Vec<f64>; 3]; 3]) -> [Vec<f64>; 6] {
    core::array::from_fn(|s| {
        let (i, j) = PAIRS[s];
        let mut out = plane::product(k.comp(i, 0), &m[0][j]);
        plane::mul_add(&mut out, k.comp(i, 1), &m[1][j]);
        plane::mul_add(&mut out, k.comp(i, 2), &m[2][j]);
        out
    })
}

/// A tensor field whose size can be measured with the slice metric.
#[derive(Clone, Copy, Debug)]
pub enum TensorRef<'a> {
    Scalar(&'a ScalarField),
    Covector(&'a CovectorField),
    Sym2(&'a SymTensorField),
}

impl TensorRef<'_> {
    fn grid(&self) -> &GridSpec {
        match self {
            TensorRef::Scalar(f) => f.grid(),
            TensorRef::Covector(f) => f.grid(),
            TensorRef::Sym2(f) => f.grid(),
        }
    }

    #[inline]
    pub(crate) fn norm2_at(&self, inv: &Sym3, idx: usize) -> f64 {
        match self {
            TensorRef::Scalar(f) => f.at(idx) * f.at(idx),
            TensorRef::Covector(f) => covector_norm2(inv, &f.at(idx)),
            TensorRef::Sym2(f) => sym_norm2(inv, &f.at(idx)),
        }
    }
}

/// Sup and L² norms of a field, all indices contracted with `g`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Norms {
    pub sup: f64,
    pub l2: f64,
}

/// Sup and L² norms over the whole grid. With `weighted`, the L² sum carries
/// the volume element `√det g`.
pub fn norms(t: TensorRef<'_>, g: &SymTensorField, weighted: bool) -> Result<Norms> {
    t.grid().same_as(g.grid())?;
    let (inv, det) = metric_pointwise(g)?;
    Ok(norms_over(t, &inv, &det, None, weighted))
}

/// Norms restricted to `points` (all points when `None`). Summation runs in
/// index order so the result does not depend on threading.
pub(crate) fn norms_over(
    t: TensorRef<'_>,
    inv: &SymTensorField,
    det: &ScalarField,
    points: Option<&[usize]>,
    weighted: bool,
) -> Norms {
    let grid = *inv.grid();
    let dv = grid.cell_volume();
    let mut sup: f64 = 0.0;
    let mut sum = 0.0;
    let mut visit = |idx: usize| {
        let n2 = t.norm2_at(&inv.at(idx), idx);
        sup = sup.max(math::sqrt(n2));
        let w = if weighted {
            math::sqrt(det.at(idx))
        } else {
            1.0
        };
        sum += n2 * w * dv;
    };
    match points {
        Some(p) => p.iter().for_each(|&i| visit(i)),
        None => (0..grid.len()).for_each(&mut visit),
    }
    Norms {
        sup,
        l2: math::sqrt(sum),
    }
}

/// Everything derived from the metric alone that the evolution and the
/// monitors both need. Built once per state.
#[derive(Clone, Debug)]
pub struct SliceGeometry {
    pub inverse: SymTensorField,
    pub det: ScalarField,
    pub christoffel: Christoffel,
    pub ricci: SymTensorField,
}

impl SliceGeometry {
    pub fn new(g: &SymTensorField) -> Result<Self> {
        let (inverse, det) = metric_pointwise(g)?;
        let christoffel = christoffel_with(g, &inverse);
        let ricci = ricci_from(&christoffel);
        Ok(SliceGeometry {
            inverse,
            det,
            christoffel,
            ricci,
        })
    }

    pub fn scalar_curvature(&self) -> ScalarField {
        let grid = *self.ricci.grid();
        ScalarField::from_raw(
            grid,
            plane::trace(self.inverse.planes(), self.ricci.planes()),
        )
    }

    /// `∇_a t_bc` for a symmetric covariant field, as three symmetric fields indexed by `a`.
    pub fn covariant_derivative(&self, t: &SymTensorField) -> [SymTensorField; 3] {
        let grid = *t.grid();
        core::array::from_fn(|a| {
            let comps = core::array::from_fn(|s| {
                let (b, c) = PAIRS[s];
                let mut out = fd_derivative(&grid, t.plane(s), a);
                for e in 0..3 {
                    plane::mul_sub(
                        &mut out,
                        &self.christoffel.comps[e][SYM[a][b]],
                        t.comp(e, c),
                    );
                    plane::mul_sub(
                        &mut out,
                        &self.christoffel.comps[e][SYM[a][c]],
                        t.comp(b, e),
                    );
                }
                out
            });
            SymTensorField::from_raw(grid, comps)
        })
    }
}
