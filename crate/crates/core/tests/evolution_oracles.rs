//! Evolution against the Kasner family, plus run-level invariants on
//! flat and perturbed data.

use std::f64::consts::LN_2;

use evth_core::{
    electric_magnetic, evolve, gauge_residual, hamiltonian_residual, kasner_state, perturbed_flat,
    quasi_isometry_bound, rhs, step_rk4, EvolutionConfig, GridSpec, KasnerParams, MonitorConfig,
    SliceState, Sym3, SymTensorField,
};

fn grid8() -> GridSpec {
    GridSpec::new(8, 1.0).unwrap()
}

/// Kasner exponents from the usual one-parameter family.
fn exponents(u: f64, f: f64) -> KasnerParams {
    let d = 1.0 + u + u * u;
    KasnerParams::from_pair(-u / d, (1.0 + u) / d, f).unwrap()
}

fn families() -> Vec<KasnerParams> {
    vec![
        KasnerParams::new(2.0 / 3.0, 2.0 / 3.0, -1.0 / 3.0, 1.0).unwrap(),
        KasnerParams::new(1.0, 0.0, 0.0, 0.7).unwrap(),
        exponents(1.7, 1.3),
        exponents(0.4, 0.5),
    ]
}

/// Largest relative error of the diagonal components and the lapse, and the
/// largest absolute off-diagonal value.
fn kasner_error(s: &SliceState, kp: &KasnerParams) -> f64 {
    let (g, k, n) = kp.fields(s.tau());
    let mut e = 0.0f64;
    for idx in 0..s.grid().len() {
        let (gs, ks) = (s.metric().at(idx), s.extrinsic_curvature().at(idx));
        for i in 0..3 {
            e = e.max(((gs.get(i, i) - g[i]) / g[i]).abs());
            e = e.max(((ks.get(i, i) - k[i]) / k[i]).abs());
            for j in (i + 1)..3 {
                e = e.max(gs.get(i, j).abs()).max(ks.get(i, j).abs());
            }
        }
        e = e.max(((s.lapse().at(idx) - n) / n).abs());
    }
    e
}

fn run_fixed(s0: SliceState, dt: f64, steps: usize) -> SliceState {
    let mut s = s0;
    for _ in 0..steps {
        s = step_rk4(&s, dt).unwrap();
    }
    s
}

#[test]
fn rhs_matches_time_derivative_of_closed_form() {
    for kp in families() {
        let (p, f) = (kp.exponents(), kp.density());
        for tau in [-0.5, 0.0, 0.3, LN_2] {
            let r = rhs(&kasner_state(&kp, tau, grid8()).unwrap()).unwrap();
            for i in 0..3 {
                let dg = 2.0 * p[i] * f * (2.0 * p[i] * f * tau).exp();
                let dk = -p[i] * (2.0 * p[i] - 1.0) * f * ((2.0 * p[i] - 1.0) * f * tau).exp();
                let scale_g = 1.0f64.max(dg.abs());
                let scale_k = 1.0f64.max(dk.abs());
                assert!(
                    (r.dg.at(3).get(i, i) - dg).abs() < 1e-13 * scale_g,
                    "dg {i} at {tau}"
                );
                assert!(
                    (r.dk.at(3).get(i, i) - dk).abs() < 1e-13 * scale_k,
                    "dk {i} at {tau}: {} vs {dk}",
                    r.dk.at(3).get(i, i)
                );
            }
            let dn = f * f * (f * tau).exp();
            assert!((r.dn.at(3) - dn).abs() < 1e-13 * dn.max(1.0));
        }
    }
}

#[test]
fn kasner_hamiltonian_vanishes() {
    for kp in families() {
        for tau in [-1.0, 0.0, 0.5, LN_2] {
            let h = hamiltonian_residual(&kasner_state(&kp, tau, grid8()).unwrap()).unwrap();
            assert!(
                h.max_abs() <= 1e-12,
                "{:?} at {tau}: {}",
                kp.exponents(),
                h.max_abs()
            );
        }
    }
}

#[test]
fn closed_form_obeys_the_lapse_equation() {
    let kp = exponents(0.8, 1.2);
    let tau = 0.4;
    let err = |d: f64| {
        let ln_n = |t: f64| kp.fields(t).2.ln();
        let fd = (ln_n(tau + d) - ln_n(tau - d)) / (2.0 * d);
        let (g, k, n) = kp.fields(tau);
        let trk: f64 = (0..3).map(|i| k[i] / g[i]).sum();
        (fd + n * trk).abs()
    };
    // Exact for an exponential in τ up to round-off of the difference quotient.
    assert!(err(1e-3) < 1e-9 && err(5e-4) < 1e-9);
}

#[test]
fn kasner_rk4_reproduces_closed_form() {
    let kp = families()[0];
    let coarse = run_fixed(kasner_state(&kp, 0.0, grid8()).unwrap(), LN_2 / 64.0, 64);
    let fine = run_fixed(kasner_state(&kp, 0.0, grid8()).unwrap(), LN_2 / 128.0, 128);
    let (ec, ef) = (kasner_error(&coarse, &kp), kasner_error(&fine, &kp));
    assert!(ec < 1e-8, "relative error {ec:e}");
    assert!((ec / ef - 16.0).abs() <= 2.0, "error ratio {}", ec / ef);
}

#[test]
fn gauge_residual_decays_at_fourth_order() {
    for kp in [families()[0], exponents(1.7, 1.3)] {
        let s = kasner_state(&kp, 0.0, grid8()).unwrap();
        let (dt, steps) = (LN_2 / 16.0, 16);
        let r1 = gauge_residual(&run_fixed(s.clone(), dt, steps));
        let r2 = gauge_residual(&run_fixed(s, dt / 2.0, 2 * steps));
        let p = (r1 / r2).log2();
        assert!((3.5..=4.5).contains(&p), "order {p} from {r1:e} -> {r2:e}");
    }
}

#[test]
fn homogeneous_data_stay_homogeneous() {
    let kp = exponents(0.4, 0.5);
    let cfg = EvolutionConfig {
        tau_end: 1.0,
        ..Default::default()
    };
    let out = evolve(
        kasner_state(&kp, 0.0, grid8()).unwrap(),
        &cfg,
        &MonitorConfig::default(),
    )
    .unwrap();
    let s = &out.final_state;
    let spread = |v: &[f64]| {
        let (lo, hi) = v
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
                (a.min(*x), b.max(*x))
            });
        hi - lo
    };
    for p in s
        .metric()
        .planes()
        .iter()
        .chain(s.extrinsic_curvature().planes())
    {
        assert!(spread(p) <= 1e-12);
    }
    assert!(spread(s.lapse().values()) <= 1e-12);
}

#[test]
fn constraints_stay_satisfied_over_long_runs() {
    let cases = [
        evth_core::flat_state(grid8()),
        kasner_state(&families()[0], 0.0, grid8()).unwrap(),
        kasner_state(&exponents(1.7, 1.3), 0.0, grid8()).unwrap(),
    ];
    for s0 in cases {
        // Homogeneous data carry no spatial error, so the residual is the
        // time-integration error alone; a small CFL factor keeps it tiny.
        let cfg = EvolutionConfig {
            tau_end: 1e6,
            max_steps: 500,
            cfl_factor: 0.025,
            ..Default::default()
        };
        let out = evolve(s0, &cfg, &MonitorConfig::default()).unwrap();
        assert_eq!(out.reports.len(), 501, "{}", out.termination);
        for r in &out.reports {
            assert!(
                r.ham_sup <= 1e-10 && r.mom_sup <= 1e-10,
                "step {}: {} {}",
                r.step,
                r.ham_sup,
                r.mom_sup
            );
        }
    }
}

#[test]
fn forward_then_backward_returns_to_start() {
    let s0 = perturbed_flat(
        GridSpec::new(16, 2.0 * std::f64::consts::PI).unwrap(),
        1e-3,
        [1, 2, 0],
    )
    .unwrap();
    let dt = 0.05;
    let there = run_fixed(s0.clone(), dt, 10);
    let back = run_fixed(there, -dt, 10);
    let diff = |a: &SymTensorField, b: &SymTensorField| {
        a.planes()
            .iter()
            .zip(b.planes())
            .flat_map(|(x, y)| x.iter().zip(y))
            .fold(0.0f64, |m, (u, v)| m.max((u - v).abs()))
    };
    assert!(diff(back.metric(), s0.metric()) <= 1e-9);
    assert!(diff(back.extrinsic_curvature(), s0.extrinsic_curvature()) <= 1e-9);
    let dn = back
        .lapse()
        .values()
        .iter()
        .zip(s0.lapse().values())
        .fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
    assert!(dn <= 1e-9);
}

#[test]
fn flat_kasner_has_no_spacetime_curvature() {
    let kp = KasnerParams::new(1.0, 0.0, 0.0, 1.0).unwrap();
    for tau in [0.0, 0.5, 1.0] {
        let (e, b) = electric_magnetic(&kasner_state(&kp, tau, grid8()).unwrap()).unwrap();
        assert!(
            e.max_abs() < 1e-14 && b.max_abs() < 1e-14,
            "{} {}",
            e.max_abs(),
            b.max_abs()
        );
    }
}

/// For homogeneous data the evolution equation reads `∂_τ k = n(R + tr k k − 2 k·k)`,
/// so `E = R + tr k k − k·k` must equal `∂_τ k / n + k·k`.
#[test]
fn electric_part_agrees_with_evolution_equation() {
    for kp in families() {
        let s = kasner_state(&kp, 0.3, grid8()).unwrap();
        let (e, _) = electric_magnetic(&s).unwrap();
        let dk = rhs(&s).unwrap().dk;
        let (g, k, n) = kp.fields(0.3);
        let want = Sym3::from_fn(|i, j| {
            dk.at(0).get(i, j) / n + if i == j { k[i] * k[i] / g[i] } else { 0.0 }
        });
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (e.at(0).get(i, j) - want.get(i, j)).abs() < 1e-13,
                    "E_{i}{j}"
                );
            }
        }
    }
}

#[test]
fn spectrum_stays_within_gronwall_bound() {
    let s0 = perturbed_flat(
        GridSpec::new(16, 2.0 * std::f64::consts::PI).unwrap(),
        1e-3,
        [1, 1, 1],
    )
    .unwrap();
    let cfg = EvolutionConfig {
        tau_end: 0.5,
        ..Default::default()
    };
    let out = evolve(s0, &cfg, &MonitorConfig::default()).unwrap();
    let first = out.reports[0];
    let c = first.spectrum_max.max(1.0 / first.spectrum_min);
    let mut samples = Vec::new();
    for r in &out.reports {
        samples.push((r.tau, r.nk_sup));
        let cp = quasi_isometry_bound(c, &samples);
        assert!(r.spectrum_min >= (1.0 - 1e-6) / cp && r.spectrum_max <= cp * (1.0 + 1e-6));
    }
}
