//! Algebraic and structural invariants over randomized inputs.

use std::f64::consts::PI;

use evth_core::{
    deformation_norm, extent_lower_bound, metric_pointwise, p_variable, rescale_state, step_rk4,
    DomainSpec, GridSpec, ScalarField, SliceState, Sym3, SymTensorField,
};
use proptest::prelude::*;

/// `R diag(λ) Rᵀ` with `R` a rotation from Euler angles.
fn spd(eig: [f64; 3], angles: [f64; 3]) -> Sym3 {
    let (a, b, c) = (angles[0], angles[1], angles[2]);
    let rz = |t: f64| {
        [
            [t.cos(), -t.sin(), 0.0],
            [t.sin(), t.cos(), 0.0],
            [0.0, 0.0, 1.0],
        ]
    };
    let rx = |t: f64| {
        [
            [1.0, 0.0, 0.0],
            [0.0, t.cos(), -t.sin()],
            [0.0, t.sin(), t.cos()],
        ]
    };
    let mul = |p: [[f64; 3]; 3], q: [[f64; 3]; 3]| -> [[f64; 3]; 3] {
        core::array::from_fn(|i| core::array::from_fn(|j| (0..3).map(|k| p[i][k] * q[k][j]).sum()))
    };
    let r = mul(mul(rz(a), rx(b)), rz(c));
    Sym3::from_fn(|i, j| (0..3).map(|k| r[i][k] * eig[k] * r[j][k]).sum())
}

/// `Σ aₖbₖ − c` with error-free products and sums, so the check measures the
/// inverse and not the rounding of the product.
fn exact_residual(terms: impl Iterator<Item = (f64, f64)>, c: f64) -> f64 {
    let (mut s, mut comp) = (-c, 0.0);
    for (a, b) in terms {
        let p = a * b;
        let pe = a.mul_add(b, -p);
        let t = s + p;
        let bb = t - s;
        comp += pe + ((s - (t - bb)) + (p - bb));
        s = t;
    }
    s + comp
}

fn eigs(cond: f64) -> impl Strategy<Value = [f64; 3]> {
    (0.0..1.0f64, 0.0..1.0f64, 0.1..10.0f64)
        .prop_map(move |(u, v, s)| [s, s * cond.powf(u), s * cond.powf(v)])
}

fn angles() -> impl Strategy<Value = [f64; 3]> {
    proptest::array::uniform3(0.0..2.0 * PI)
}

/// A smooth inhomogeneous slice built from a constant background plus one Fourier mode.
fn slice(g0: Sym3, k0: Sym3, amp: f64) -> SliceState {
    let grid = GridSpec::new(8, 1.0).unwrap();
    let w = 2.0 * PI;
    let g = SymTensorField::from_fn(grid, move |x| {
        let s = 1.0 + amp * (w * (x[0] + 2.0 * x[1])).sin();
        g0.scale(s)
    })
    .unwrap();
    let k = SymTensorField::from_fn(grid, move |x| k0.scale((w * x[2]).cos())).unwrap();
    let n = ScalarField::from_fn(grid, move |x| 1.0 + amp * (w * x[0]).cos()).unwrap();
    evth_core::init_gauge(g, k, n).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inverse_is_accurate_for_moderate_condition(e in eigs(1e3), a in angles()) {
        let g = spd(e, a);
        let (inv, _) = g.inverse().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                let err = exact_residual((0..3).map(|k| (g.get(i, k), inv.get(k, j))), want);
                prop_assert!(err.abs() <= 1e-13, "({i},{j}): {err}");
            }
        }
    }

    #[test]
    fn eigenvalues_are_sorted_and_recover_the_spectrum(e in eigs(1e3), a in angles()) {
        let got = spd(e, a).eigenvalues();
        let mut want = e;
        want.sort_by(f64::total_cmp);
        prop_assert!(got[0] <= got[1] && got[1] <= got[2]);
        for i in 0..3 {
            prop_assert!((got[i] - want[i]).abs() <= 1e-9 * want[2]);
        }
    }

    #[test]
    fn field_inverse_matches_pointwise_inverse(e in eigs(1e2), a in angles()) {
        let grid = GridSpec::new(8, 1.0).unwrap();
        let g = spd(e, a);
        let (inv, det) = metric_pointwise(&SymTensorField::constant(grid, g)).unwrap();
        let (pinv, pdet) = g.inverse().unwrap();
        prop_assert_eq!(inv.at(17), pinv);
        prop_assert_eq!(det.at(17), pdet);
    }

    #[test]
    fn lower_bound_is_monotone_and_saturates(t in 0.01..10.0f64, mut r in proptest::collection::vec(0.001..5.0f64, 2..20)) {
        r.sort_by(f64::total_cmp);
        let v: Vec<f64> = r.iter().map(|&rh| extent_lower_bound(1.0, rh, t).unwrap()).collect();
        prop_assert!(v.windows(2).all(|w| w[0] <= w[1]));
        for (&rh, &b) in r.iter().zip(&v) {
            if rh >= 1.0 {
                prop_assert_eq!(b, t);
            } else {
                prop_assert_eq!(b, rh * t);
            }
        }
    }

    #[test]
    fn shrunk_domains_are_nested(
        c in proptest::array::uniform3(0.0..1.0f64),
        r in 0.1..0.6f64,
        steps in proptest::collection::vec((0.0..3.0f64, 0.0..0.02f64), 1..10),
    ) {
        let grid = GridSpec::new(8, 1.0).unwrap();
        let mut d = DomainSpec::with_halo_cells(&grid, c, r, 0.25).unwrap();
        for (v, dt) in steps {
            let Ok(next) = d.shrunk(v, dt) else { break };
            prop_assert!(next.radius() < d.radius());
            let outer = d.points(&grid);
            prop_assert!(next.points(&grid).iter().all(|i| outer.binary_search(i).is_ok()));
            d = next;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn p_variable_trace_identity(e in eigs(10.0), a in angles(), ke in proptest::array::uniform3(-1.0..1.0f64), amp in 0.0..0.3f64) {
        let g0 = spd(e, a);
        let k0 = spd(ke, [a[2], a[0], a[1]]);
        let s = slice(g0, k0, amp);
        let p = p_variable(&s).unwrap();
        let (inv, _) = metric_pointwise(s.metric()).unwrap();
        for idx in 0..s.grid().len() {
            let (g, k, pv, gi) = (s.metric().at(idx), s.extrinsic_curvature().at(idx), p.at(idx), inv.at(idx));
            let tr_pg: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| pv.get(i, j) * g.get(i, j)).sum();
            let trk: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| gi.get(i, j) * k.get(i, j)).sum();
            let scale = 1.0 + trk.abs() + k.0.iter().fold(0.0f64, |m, v| m.max(v.abs())) * gi.eigenvalues()[2];
            prop_assert!((tr_pg + 2.0 * trk).abs() <= 1e-13 * scale, "{tr_pg} vs {}", -2.0 * trk);
        }
    }

    #[test]
    fn breakdown_proxy_scales_inversely(e in eigs(10.0), a in angles(), ke in proptest::array::uniform3(-1.0..1.0f64), amp in 0.0..0.3f64) {
        let s = slice(spd(e, a), spd(ke, a), amp);
        let m = deformation_norm(&s).unwrap();
        let m2 = deformation_norm(&rescale_state(&s, 2.0).unwrap()).unwrap();
        for (x, y) in m.values().iter().zip(m2.values()) {
            prop_assert!((y - 0.5 * x).abs() <= 1e-14 * x, "{x} -> {y}");
        }
    }

    #[test]
    fn gauge_density_is_untouched_by_steps(amp in 0.0..0.3f64, ke in proptest::array::uniform3(-0.3..0.3f64)) {
        let s0 = slice(Sym3::IDENTITY, Sym3::diag(ke[0], ke[1], ke[2]), amp);
        let s1 = step_rk4(&s0, 0.01).unwrap();
        let s2 = step_rk4(&s1, -0.01).unwrap();
        prop_assert_eq!(s0.gauge_density(), s1.gauge_density());
        prop_assert_eq!(s0.gauge_density(), s2.gauge_density());
        let again = step_rk4(&s0, 0.01).unwrap();
        prop_assert_eq!(again.metric(), s1.metric());
    }
}
