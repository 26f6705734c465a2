//! Discrete Riemannian geometry of one slice: geodesic distances, ball volumes
//! and a chart-radius proxy.
//!
//! Distances come from Dijkstra on a 98-neighbour lattice graph (all primitive
//! offsets with components in `-2..=2`) with any-angle relaxation: a node may
//! also be reached by a straight segment from its predecessor's parent. On a
//! constant metric this gives exact straight-line distances.

use alloc::collections::BinaryHeap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::calculus::metric_pointwise;
use crate::error::{Error, Result};
use crate::grid::{fd_derivative, GridSpec, ScalarField, SymTensorField};
use crate::math;
use crate::tensor::Sym3;

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn neighbour_offsets() -> Vec<[i64; 3]> {
    let mut out = Vec::new();
    for z in -2..=2i64 {
        for y in -2..=2i64 {
            for x in -2..=2i64 {
                if gcd(gcd(x, y), z) == 1 {
                    out.push([x, y, z]);
                }
            }
        }
    }
    out
}

/// Metric length of the straight coordinate segment `a → b` (positions in
/// cell units), by the composite midpoint rule with one sample per cell crossed.
/// A constant metric skips the quadrature.
fn segment_length(g: &SymTensorField, uniform: Option<&Sym3>, a: [i64; 3], b: [i64; 3]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let df = d.map(|v| v as f64);
    let quad = |gm: &Sym3| {
        let mut q = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                q += gm.get(i, j) * df[i] * df[j];
            }
        }
        math::sqrt(q.max(0.0))
    };
    if let Some(gm) = uniform {
        return quad(gm) * g.grid().spacing();
    }
    let samples = d.iter().map(|v| v.abs()).max().unwrap_or(0).max(1);
    let mut len = 0.0;
    for m in 0..samples {
        let t = (m as f64 + 0.5) / samples as f64;
        let x: [f64; 3] = core::array::from_fn(|c| a[c] as f64 + t * df[c]);
        len += quad(&g.interpolate(x));
    }
    len * g.grid().spacing() / samples as f64
}

#[derive(PartialEq)]
struct Entry {
    dist: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest-path distances from the grid point nearest `p`. Points farther
/// than `cutoff` (when given) are left at infinity.
pub fn geodesic_distances(
    g: &SymTensorField,
    p: [f64; 3],
    cutoff: Option<f64>,
) -> Result<ScalarField> {
    metric_pointwise(g)?;
    let grid = *g.grid();
    let source = grid.nearest_index(p);
    let limit = cutoff.unwrap_or(f64::INFINITY);
    let offsets = neighbour_offsets();
    let first = g.at(0);
    let uniform = g
        .planes()
        .iter()
        .zip(first.0)
        .all(|(plane, v)| plane.iter().all(|x| *x == v))
        .then_some(first);
    let mut dist = vec![f64::INFINITY; grid.len()];
    let mut pos = vec![[0i64; 3]; grid.len()];
    let mut parent = vec![usize::MAX; grid.len()];
    let mut done = vec![false; grid.len()];
    let mut heap = BinaryHeap::new();

    let origin = grid.coords(source).map(|c| c as i64);
    dist[source] = 0.0;
    pos[source] = origin;
    parent[source] = source;
    heap.push(Entry {
        dist: 0.0,
        node: source,
    });

    while let Some(Entry { dist: du, node: u }) = heap.pop() {
        if done[u] || du > dist[u] {
            continue;
        }
        done[u] = true;
        let pu = pos[u];
        let par = parent[u];
        for off in &offsets {
            let v = grid.offset(u, *off);
            if done[v] {
                continue;
            }
            let pv = [pu[0] + off[0], pu[1] + off[1], pu[2] + off[2]];
            let mut best = du + segment_length(g, uniform.as_ref(), pu, pv);
            let mut via = u;
            if par != u {
                let alt = dist[par] + segment_length(g, uniform.as_ref(), pos[par], pv);
                if alt < best {
                    best = alt;
                    via = par;
                }
            }
            if best < dist[v] && best <= limit {
                dist[v] = best;
                pos[v] = pv;
                parent[v] = via;
                heap.push(Entry {
                    dist: best,
                    node: v,
                });
            }
        }
    }
    Ok(ScalarField::from_raw(grid, dist))
}

/// Ball volume ratio at one scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaleSample {
    pub scale: f64,
    /// `vol B(p, s) / s³`.
    pub ratio: f64,
    /// False below two grid cells, where the ball is a handful of points.
    pub reliable: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RadiusReport {
    pub point: [f64; 3],
    /// Minimum of the volume ratio over the reliable scales tested (all scales if none are).
    pub volume_radius_ratio: f64,
    pub chart_radius: f64,
    pub scales_tested: Vec<ScaleSample>,
}

fn min_eigenvalue(g: &SymTensorField) -> f64 {
    (0..g.grid().len()).fold(f64::INFINITY, |m, i| m.min(g.at(i).eigenvalues()[0]))
}

/// `vol B(p, s) / s³` for each scale, with `vol = Σ_{d < s} √det g h³`.
/// A scale whose ball may reach more than a quarter period in coordinates is refused.
pub fn volume_radius(g: &SymTensorField, p: [f64; 3], scales: &[f64]) -> Result<Vec<ScaleSample>> {
    let grid = *g.grid();
    if scales.is_empty() {
        return Err(Error::InvalidParameter("no scales given".into()));
    }
    let (_, det) = metric_pointwise(g)?;
    let stretch = 1.0 / math::sqrt(min_eigenvalue(g));
    let limit = 0.25 * grid.period();
    for &s in scales {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale {s}")));
        }
        if s * stretch > limit {
            return Err(Error::ScaleTooLarge {
                scale: s,
                limit: limit / stretch,
            });
        }
    }
    let largest = scales.iter().cloned().fold(0.0, f64::max);
    let dist = geodesic_distances(g, p, Some(largest))?;
    let dv = grid.cell_volume();
    Ok(scales
        .iter()
        .map(|&s| {
            let vol: f64 = (0..grid.len())
                .filter(|&i| dist.at(i) < s)
                .map(|i| math::sqrt(det.at(i)) * dv)
                .sum();
            ScaleSample {
                scale: s,
                ratio: vol / (s * s * s),
                reliable: s >= 2.0 * grid.spacing(),
            }
        })
        .collect())
}

/// Smallest ratio among reliable samples, falling back to all samples.
pub fn min_ratio(samples: &[ScaleSample]) -> f64 {
    let reliable = samples.iter().filter(|s| s.reliable).map(|s| s.ratio);
    let m = reliable.fold(f64::INFINITY, f64::min);
    if m.is_finite() {
        m
    } else {
        samples
            .iter()
            .map(|s| s.ratio)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Multi-indices `(a, b, c)` of total order `order`, as axis sequences.
fn multi_indices(order: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for a in 0..=order {
        for b in 0..=order - a {
            let c = order - a - b;
            let mut seq = vec![0; a];
            seq.extend(core::iter::repeat(1).take(b));
            seq.extend(core::iter::repeat(2).take(c));
            out.push(seq);
        }
    }
    out
}

fn frobenius2(s: &[f64; 6]) -> f64 {
    s[0] * s[0] + s[3] * s[3] + s[5] * s[5] + 2.0 * (s[1] * s[1] + s[2] * s[2] + s[4] * s[4])
}

/// Largest `r ≤ max_r` such that on the geodesic ball `B(p, r)` the chart
/// components of `g` have eigenvalues in `[1/2, 2]` and
/// `r^{|j| − 3/2} ‖∂^j g‖_{L²(B)} ≤ 2` for every multi-index with `1 ≤ |j| ≤ 2 + l`.
/// Bisection with tolerance `h`; 0 if the conditions already fail at `2h`.
///
/// Norms use the coordinate measure and the Frobenius norm of the component
/// matrix. The conditions are evaluated in the given chart, not a harmonic one.
pub fn chart_radius(g: &SymTensorField, p: [f64; 3], l: usize, max_r: f64) -> Result<f64> {
    let grid = *g.grid();
    let h = grid.spacing();
    if l > 1 {
        return Err(Error::InvalidParameter(format!(
            "derivative order l = {l} must be 0 or 1"
        )));
    }
    if !(max_r >= 2.0 * h && max_r.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "max_r {max_r} below two cells"
        )));
    }
    let dist = geodesic_distances(g, p, Some(max_r))?;
    let mut ball: Vec<usize> = (0..grid.len()).filter(|&i| dist.at(i) <= max_r).collect();
    ball.sort_by(|&a, &b| dist.at(a).total_cmp(&dist.at(b)).then(a.cmp(&b)));
    let radii: Vec<f64> = ball.iter().map(|&i| dist.at(i)).collect();

    // Prefix maxima of the spectrum violation, prefix sums of each derivative norm.
    let mut spectrum_ok = Vec::with_capacity(ball.len());
    let mut ok = true;
    for &i in &ball {
        let ev = g.at(i).eigenvalues();
        ok &= ev[0] >= 0.5 && ev[2] <= 2.0;
        spectrum_ok.push(ok);
    }
    let dv = grid.cell_volume();
    let mut norms: Vec<(i32, Vec<f64>)> = Vec::new();
    for order in 1..=2 + l {
        for seq in multi_indices(order) {
            let planes: [Vec<f64>; 6] = core::array::from_fn(|s| {
                let mut v = g.plane(s).to_vec();
                for &axis in &seq {
                    v = fd_derivative(&grid, &v, axis);
                }
                v
            });
            let mut acc = 0.0;
            let prefix = ball
                .iter()
                .map(|&i| {
                    acc += frobenius2(&core::array::from_fn(|s| planes[s][i])) * dv;
                    acc
                })
                .collect();
            norms.push((order as i32, prefix));
        }
    }

    let holds = |r: f64| -> bool {
        let count = radii.partition_point(|d| *d < r);
        if count == 0 {
            return true;
        }
        if !spectrum_ok[count - 1] {
            return false;
        }
        norms.iter().all(|(order, prefix)| {
            math::powf(r, *order as f64 - 1.5) * math::sqrt(prefix[count - 1]) <= 2.0
        })
    };

    let mut lo = 2.0 * h;
    if !holds(lo) {
        return Ok(0.0);
    }
    let mut hi = max_r;
    if holds(hi) {
        return Ok(max_r);
    }
    while hi - lo > h {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Volume ratios and chart radius at one point.
pub fn radius_report(
    g: &SymTensorField,
    p: [f64; 3],
    scales: &[f64],
    l: usize,
    max_r: f64,
) -> Result<RadiusReport> {
    let samples = volume_radius(g, p, scales)?;
    Ok(RadiusReport {
        point: p,
        volume_radius_ratio: min_ratio(&samples),
        chart_radius: chart_radius(g, p, l, max_r)?,
        scales_tested: samples,
    })
}

/// Uniform metric `c δ` on `grid`.
pub fn uniform_metric(grid: GridSpec, c: f64) -> SymTensorField {
    SymTensorField::constant(grid, Sym3::IDENTITY.scale(c))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::new(16, 1.0).unwrap()
    }

    #[test]
    fn ninety_eight_neighbours() {
        assert_eq!(neighbour_offsets().len(), 98);
    }

    #[test]
    fn axis_neighbour_is_one_cell() {
        let g = uniform_metric(grid(), 1.0);
        let d = geodesic_distances(&g, [0.0; 3], None).unwrap();
        let h = grid().spacing();
        assert_eq!(d.at(grid().index(1, 0, 0)), h);
        assert_eq!(d.at(0), 0.0);
    }

    #[test]
    fn flat_distances_are_euclidean() {
        let gr = grid();
        let g = uniform_metric(gr, 1.0);
        let d = geodesic_distances(&g, [0.0; 3], None).unwrap();
        let idx = gr.index(5, 3, 1);
        let want = math::sqrt(35.0) * gr.spacing();
        assert!((d.at(idx) - want).abs() < 1e-12, "{} vs {want}", d.at(idx));
    }

    #[test]
    fn uniform_scaling_doubles_distances() {
        let gr = grid();
        let d1 = geodesic_distances(&uniform_metric(gr, 1.0), [0.0; 3], None).unwrap();
        let d4 = geodesic_distances(&uniform_metric(gr, 4.0), [0.0; 3], None).unwrap();
        for i in 0..gr.len() {
            assert_eq!(d4.at(i), 2.0 * d1.at(i));
        }
    }

    #[test]
    fn cutoff_leaves_far_points_unreached() {
        let gr = grid();
        let d = geodesic_distances(&uniform_metric(gr, 1.0), [0.0; 3], Some(2.0 * gr.spacing()))
            .unwrap();
        assert!(d.at(gr.index(8, 8, 8)).is_infinite());
        assert!(d.at(gr.index(2, 0, 0)).is_finite());
    }

    #[test]
    fn oversized_scale_refused() {
        let gr = grid();
        let g = uniform_metric(gr, 1.0);
        assert!(matches!(
            volume_radius(&g, [0.0; 3], &[0.3]),
            Err(Error::ScaleTooLarge { .. })
        ));
    }

    #[test]
    fn small_scales_flagged() {
        let gr = grid();
        let g = uniform_metric(gr, 1.0);
        let s = volume_radius(&g, [0.0; 3], &[gr.spacing(), 3.0 * gr.spacing()]).unwrap();
        assert!(!s[0].reliable && s[1].reliable);
    }

    #[test]
    fn chart_radius_limits() {
        let gr = grid();
        assert_eq!(
            chart_radius(&uniform_metric(gr, 1.0), [0.0; 3], 1, 0.2).unwrap(),
            0.2
        );
        assert_eq!(
            chart_radius(&uniform_metric(gr, 3.0), [0.0; 3], 1, 0.2).unwrap(),
            0.0
        );
        assert!(chart_radius(&uniform_metric(gr, 1.0), [0.0; 3], 2, 0.2).is_err());
    }

    #[test]
    fn multi_index_counts() {
        assert_eq!(multi_indices(1).len(), 3);
        assert_eq!(multi_indices(2).len(), 6);
        assert_eq!(multi_indices(3).len(), 10);
    }
}
