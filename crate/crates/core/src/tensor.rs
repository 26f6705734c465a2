//! Pointwise 3x3 algebra for symmetric tensors in the coordinate chart.

use crate::math;

/// Storage slot of component `(a, b)` in the packed order 11, 12, 13, 22, 23, 33.
pub const SYM: [[usize; 3]; 3] = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];

/// The (a, b) pair stored in each packed slot.
pub const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

pub type Mat3 = [[f64; 3]; 3];

/// Symmetric 3x3 tensor, packed as 11, 12, 13, 22, 23, 33.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Sym3(pub [f64; 6]);

/// Above this `‖g‖∞ ‖g⁻¹‖∞` the cofactor inverse gets one refinement step.
const REFINE_CONDITION: f64 = 16.0;

impl Sym3 {
    pub const IDENTITY: Sym3 = Sym3([1.0, 0.0, 0.0, 1.0, 0.0, 1.0]);
    pub const ZERO: Sym3 = Sym3([0.0; 6]);

    pub fn diag(a: f64, b: f64, c: f64) -> Self {
        Sym3([a, 0.0, 0.0, b, 0.0, c])
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> f64) -> Self {
        Sym3(core::array::from_fn(|s| {
            let (a, b) = PAIRS[s];
            f(a, b)
        }))
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.0[SYM[a][b]]
    }

    pub fn to_mat(&self) -> Mat3 {
        core::array::from_fn(|a| core::array::from_fn(|b| self.get(a, b)))
    }

    pub fn scale(&self, s: f64) -> Self {
        Sym3(self.0.map(|v| v * s))
    }

    pub fn trace(&self) -> f64 {
        self.0[0] + self.0[3] + self.0[5]
    }

    pub fn det(&self) -> f64 {
        let [a, b, c, d, e, f] = self.0;
        a * (d * f - e * e) - b * (b * f - e * c) + c * (b * e - d * c)
    }

    /// Leading principal minors, in order.
    pub fn leading_minors(&self) -> [f64; 3] {
        let [a, b, _, d, _, _] = self.0;
        [a, a * d - b * b, self.det()]
    }

    /// All leading principal minors strictly positive (and finite).
    pub fn is_positive_definite(&self) -> bool {
        self.leading_minors()
            .iter()
            .all(|m| *m > 0.0 && m.is_finite())
    }

    /// Inverse via cofactors; `None` when the determinant vanishes.
    pub fn inverse(&self) -> Option<(Sym3, f64)> {
        let [a, b, c, d, e, f] = self.0;
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let cof = [
            d * f - e * e,
            c * e - b * f,
            b * e - c * d,
            a * f - c * c,
            b * c - a * e,
            a * d - b * b,
        ];
        let inv = Sym3(cof.map(|v| v / det));
        if self.row_norm() * inv.row_norm() > REFINE_CONDITION {
            return Some((self.refine_inverse(&inv), det));
        }
        Some((inv, det))
    }

    fn row_norm(&self) -> f64 {
        (0..3)
            .map(|i| (0..3).map(|j| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// One Newton step `X + X (I − g X)` with the residual summed exactly
    /// enough (error-free products and sums) to be worth correcting with.
    fn refine_inverse(&self, x: &Sym3) -> Sym3 {
        let r: Mat3 = core::array::from_fn(|i| {
            core::array::from_fn(|j| {
                let mut s = if i == j { 1.0 } else { 0.0 };
                let mut c = 0.0;
                for k in 0..3 {
                    let (a, b) = (-self.get(i, k), x.get(k, j));
                    let p = a * b;
                    let pe = math::fma(a, b, -p);
                    let t = s + p;
                    let bb = t - s;
                    c += pe + ((s - (t - bb)) + (p - bb));
                    s = t;
                }
                s + c
            })
        });
        Sym3::from_fn(|i, j| x.get(i, j) + (0..3).map(|k| x.get(i, k) * r[k][j]).sum::<f64>())
    }

    /// Eigenvalues in ascending order (closed-form trigonometric solution).
    pub fn eigenvalues(&self) -> [f64; 3] {
        let [a, b, c, d, e, f] = self.0;
        let off = b * b + c * c + e * e;
        if off == 0.0 {
            let mut ev = [a, d, f];
            ev.sort_by(|x, y| x.total_cmp(y));
            return ev;
        }
        let q = (a + d + f) / 3.0;
        let p2 = (a - q) * (a - q) + (d - q) * (d - q) + (f - q) * (f - q) + 2.0 * off;
        let p = math::sqrt(p2 / 6.0);
        let shifted = Sym3([(a - q) / p, b / p, c / p, (d - q) / p, e / p, (f - q) / p]);
        let r = (shifted.det() / 2.0).clamp(-1.0, 1.0);
        let phi = math::acos(r) / 3.0;
        let hi = q + 2.0 * p * math::cos(phi);
        let lo = q + 2.0 * p * math::cos(phi + 2.0 * core::f64::consts::PI / 3.0);
        let mid = 3.0 * q - hi - lo;
        [lo, mid, hi]
    }
}

/// `inv · t` as a mixed tensor `t^a_b = g^{ac} t_cb`.
#[inline]
pub fn raise_first(inv: &Sym3, t: &Sym3) -> Mat3 {
    core::array::from_fn(|a| {
        core::array::from_fn(|b| (0..3).map(|c| inv.get(a, c) * t.get(c, b)).sum())
    })
}

/// `|t|²_g = g^{ac} g^{bd} t_ab t_cd` for a symmetric covariant 2-tensor.
#[inline]
pub fn sym_norm2(inv: &Sym3, t: &Sym3) -> f64 {
    let m = raise_first(inv, t);
    let mut s = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            s += m[a][b] * m[b][a];
        }
    }
    s
}

/// `|v|²_g = g^{ab} v_a v_b` for a covector.
#[inline]
pub fn covector_norm2(inv: &Sym3, v: &[f64; 3]) -> f64 {
    let mut s = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            s += inv.get(a, b) * v[a] * v[b];
        }
    }
    s
}

/// Trace `g^{ab} t_ab`.
#[inline]
pub fn trace_with(inv: &Sym3, t: &Sym3) -> f64 {
    let mut s = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            s += inv.get(a, b) * t.get(a, b);
        }
    }
    s
}

/// `t_a^c u_cb = t_ac g^{cd} u_db`, symmetrized.
#[inline]
pub fn contract_mid(inv: &Sym3, t: &Sym3, u: &Sym3) -> Sym3 {
    let tu = raise_first(inv, u);
    Sym3::from_fn(|a, b| {
        let ab: f64 = (0..3).map(|c| t.get(a, c) * tu[c][b]).sum();
        let ba: f64 = (0..3).map(|c| t.get(b, c) * tu[c][a]).sum();
        0.5 * (ab + ba)
    })
}
