use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trimer_core::analysis::classify_P;
use trimer_core::dynamics::*;
use trimer_core::field::{Chart, Reversed};
use trimer_core::integrate::*;
use trimer_core::{ShapePotentials, SystemParams};

fn fig2() -> ShapePotentials {
    ShapePotentials::new(&SystemParams::reference_symmetric()).unwrap()
}

fn asym() -> ShapePotentials {
    ShapePotentials::new(&SystemParams::new([1.0, 1.7, 0.8], [1.0, 0.9, 1.4], [0.6, 0.5, 1.1], 6.0, 12.0, 0.0).unwrap())
        .unwrap()
}

fn tight(max_time: f64) -> IntegratorConfig {
    IntegratorConfig {
        rel_tol: 1e-13,
        abs_tol: 1e-15,
        max_step: 0.05,
        ..IntegratorConfig::default()
    }
    .with_max_time(max_time)
}

/// Zero-energy state with the given `(R, y, s)` and `w >= 0` solved from `F = 0`.
fn on_level(pot: &ShapePotentials, r: f64, y: f64, s: f64, sign: f64) -> Option<[f64; 4]> {
    let f0 = zero_energy_energy(&ZeroEnergyState::from_array(&[r, y, s, 0.0]), pot).ok()?;
    (f0 < 0.0).then(|| [r, y, s, sign * (-2.0 * f0).sqrt()])
}

#[test]
fn zero_energy_level_is_preserved() {
    for pot in [fig2(), asym()] {
        let flow = ZeroEnergyFlow { pot: &pot };
        // orbits stop once a binary has formed or R is below the escape radius
        let ev = escape_events::<4>(Chart::ZeroEnergy, &pot, &EscapeThresholds::default());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let x = Sampler::ZeroEnergy.draw(&pot, &mut rng).unwrap();
            let st = lift_reduced(&[x[0], x[1], x[2]], &pot).unwrap().to_array();
            let tr = integrate(&flow, &st, &tight(50.0), &ev).unwrap();
            assert!(tr.max_energy_residual() < 1e-8, "{}", tr.max_energy_residual());
        }
    }
}

#[test]
fn infinity_manifold_is_preserved() {
    let pot = fig2();
    let flow = InfinityZeroFlow { pot: &pot };
    let ev = escape_events::<3>(Chart::InfinityZero, &pot, &EscapeThresholds::default());
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let s: f64 = rng.random_range(-0.9..0.9);
        let g0 = admissibility(&[0.0, s, 0.0], &pot).unwrap();
        let ymax = (2.0 * g0).sqrt() / (1.0 - s * s).powi(3);
        let y = rng.random_range(-0.9..0.9) * ymax;
        let w = (2.0 * admissibility(&[y, s, 0.0], &pot).unwrap()).sqrt();
        let tr = integrate(&flow, &[y, s, w], &tight(1e4), &ev).unwrap();
        assert!(tr.max_energy_residual() < 1e-9, "{}", tr.max_energy_residual());
    }
}

#[test]
fn collision_and_infinity_sets_are_invariant() {
    let pot = asym();
    let flow = ZeroEnergyFlow { pot: &pot };
    for s in [1.0, -1.0] {
        for (r, y) in [(0.5, 0.3), (1.0, -1.0), (0.8, 2.0)] {
            let Some(x) = on_level(&pot, r, y, s, 1.0) else {
                continue;
            };
            let tr = integrate(&flow, &x, &tight(5.0), &[]).unwrap();
            assert!(tr.samples.iter().all(|p| p.state[2] == s));
            assert!(tr.max_energy_residual() < 1e-9);
        }
    }
    let x = on_level(&pot, 0.0, 0.2, 0.4, 1.0).unwrap();
    let tr = integrate(&flow, &x, &tight(5.0), &[]).unwrap();
    assert!(tr.samples.iter().all(|p| p.state[0] == 0.0));
}

#[test]
fn symmetric_line_is_invariant() {
    let pot = fig2();
    let flow = ReducedFlow { pot: &pot };
    for y in [-4.0, 0.0, 3.0] {
        let tr = integrate(&flow, &[y, 0.0, 0.0], &tight(20.0), &[]).unwrap();
        assert!(tr.samples.iter().all(|p| p.state[1] == 0.0 && p.state[2] == 0.0));
        // y runs up the heteroclinic towards P+
        assert!(tr.samples.windows(2).all(|w| w[1].state[0] >= w[0].state[0] - 1e-12));
    }
}

#[test]
fn reduced_flow_is_reversible() {
    for pot in [fig2(), asym()] {
        let flow = ReducedFlow { pot: &pot };
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..10 {
            let x = Sampler::ZeroEnergy.draw(&pot, &mut rng).unwrap();
            let fwd = integrate(&flow, &[x[0], x[1], x[2]], &tight(1.0), &[]).unwrap();
            let e = fwd.last().state;
            let back = integrate(&flow, &[-e[0], e[1], -e[2]], &tight(fwd.last().time), &[]).unwrap();
            let z = back.last().state;
            let err = (z[0] + x[0]).abs().max((z[1] - x[1]).abs()).max((z[2] + x[2]).abs());
            assert!(err < 1e-6, "{err}");
        }
    }
}

#[test]
fn reversed_field_retraces_an_orbit() {
    let pot = asym();
    let flow = ReducedFlow { pot: &pot };
    let x = [0.3, -0.2, 1.0];
    let fwd = integrate(&flow, &x, &tight(0.5), &[]).unwrap();
    let back = integrate(&Reversed(&flow), &fwd.last().state, &tight(0.5), &[]).unwrap();
    let z = back.last().state;
    assert!((0..3).all(|i| (z[i] - x[i]).abs() < 1e-8), "{z:?}");
}

#[test]
fn collision_side_orbit_escapes_right() {
    let pot = fig2();
    let thr = EscapeThresholds::default();
    let flow = ReducedFlow { pot: &pot };
    let ev = escape_events::<3>(Chart::Reduced, &pot, &thr);
    for (s, kind) in [
        (0.97f64, EscapeKind::TwoPlusOneRight),
        (-0.97, EscapeKind::TwoPlusOneLeft),
    ] {
        // moving towards the nearer double collision
        let w = s.signum() * (admissibility(&[0.0, s, 0.0], &pot).unwrap()).sqrt();
        let tr = integrate(&flow, &[0.0, s, w], &SweepConfig::default().integrator, &ev).unwrap();
        assert_eq!(classify_escape(&tr, &pot, &thr).kind, kind, "{:?}", tr.terminal_event);
    }
}

/// The slaved `R` bottoms out near `1e-3` at `P+` because `G` cancels, so the
/// radius is followed by quadrature of `(ln R)'` instead.
#[test]
fn stable_direction_of_p_plus_is_triple_escape() {
    let pot = fig2();
    let thr = EscapeThresholds::default();
    let rep = classify_P(&pot).unwrap();
    let dirs = real_eigendirections(&rep.plus, -1.0).unwrap();
    let (_, v) = dirs
        .iter()
        .max_by(|a, b| a.1[0].abs().total_cmp(&b.1[0].abs()))
        .unwrap();
    let p = &rep.plus.location;
    let k = -1e-2 * v[0].signum();
    let x = [p[0] + k * v[0], p[1] + k * v[1], p[2] + k * v[2]];
    let flow = ReducedFlow { pot: &pot };
    let cfg = tight(5.0).with_output_step(1e-3);
    let tr = integrate(&flow, &x, &cfg, &[]).unwrap();
    let ln_r = tr.physical_times(|z| log_radius_rate(z, &pot).unwrap());
    let r0 = slave_R(&x, &pot).unwrap();
    let hit = ln_r
        .iter()
        .position(|l| r0 * l.exp() < thr.r_esc)
        .expect("R falls below the escape radius");
    let z = tr.samples[hit].state;
    let full = [r0 * ln_r[hit].exp(), z[0], z[1], z[2]];
    assert_eq!(
        classify_state(Chart::ZeroEnergy, &full, &pot, &thr).unwrap(),
        EscapeKind::OneOneOne
    );
}

#[test]
fn infinity_orbit_through_symmetric_shape_reaches_binary_edge() {
    let pot = fig2();
    let thr = EscapeThresholds::default();
    let flow = InfinityZeroFlow { pot: &pot };
    let ev = escape_events::<3>(Chart::InfinityZero, &pot, &thr);
    let w = (2.0 * pot.shape_u(0.0).unwrap()).sqrt();
    let tr = integrate(&flow, &[0.0, 0.0, w], &tight(1e4), &ev).unwrap();
    assert!(tr.ended_by(EVENT_EDGE));
    let class = classify_escape(&tr, &pot, &thr);
    assert_eq!(class.kind, EscapeKind::TwoPlusOneRight);
    assert!(class.asymptotic_y < 0.0);
    assert!(tr
        .samples
        .windows(2)
        .all(|s| s[1].state[0].abs() >= s[0].state[0].abs() - 1e-12));
}

#[test]
fn unstable_manifold_of_p_plus_ends_in_binary() {
    let pot = fig2();
    let thr = EscapeThresholds::default();
    let rep = classify_P(&pot).unwrap();
    let flow = InfinityZeroFlow { pot: &pot };
    for hint in [[0.0, 1.0, 1.0], [0.0, -1.0, -1.0]] {
        let ev = escape_events::<3>(Chart::InfinityZero, &pot, &thr);
        let tr = trace_unstable_manifold(&flow, &rep.plus, &hint, &tight(1e4), &ev).unwrap();
        assert!(tr.ended_by(EVENT_EDGE), "{:?}", tr.terminal_event);
        assert!(classify_escape(&tr, &pot, &thr).kind.is_two_plus_one());
        assert!(tr.max_energy_residual() < 1e-9);
    }
}

#[test]
fn sweep_is_independent_of_worker_count() {
    let pot = fig2();
    let one = SweepConfig {
        workers: Some(1),
        ..SweepConfig::default()
    };
    let many = SweepConfig {
        workers: Some(8),
        ..SweepConfig::default()
    };
    let a = sweep(&pot, Sampler::ZeroEnergy, 24, &one).unwrap();
    let b = sweep(&pot, Sampler::ZeroEnergy, 24, &many).unwrap();
    assert_eq!(a, b);
    let c = sweep(&pot, Sampler::ZeroEnergy, 24, &SweepConfig { seed: 2, ..one }).unwrap();
    assert_ne!(a.records, c.records);
}

#[test]
fn classification_is_stable_under_threshold_doubling() {
    let pot = ShapePotentials::new(&SystemParams::reference_symmetric().with_energy(1.0).unwrap()).unwrap();
    let base = SweepConfig::default();
    let doubled = SweepConfig {
        thresholds: base.thresholds.scaled(2.0, 2.0),
        ..base.clone()
    };
    let a = sweep(&pot, Sampler::PositiveEnergy, 200, &base).unwrap();
    let b = sweep(&pot, Sampler::PositiveEnergy, 200, &doubled).unwrap();
    // at most 1% of the samples change class
    for kind in EscapeKind::ALL {
        assert!(
            a.count(kind).abs_diff(b.count(kind)) * 100 <= a.n,
            "{kind:?}: {} vs {}",
            a.count(kind),
            b.count(kind)
        );
    }
    let pot0 = fig2();
    let a = sweep(&pot0, Sampler::ZeroEnergy, 200, &base).unwrap();
    let b = sweep(&pot0, Sampler::ZeroEnergy, 200, &doubled).unwrap();
    for kind in EscapeKind::ALL {
        assert!(a.count(kind).abs_diff(b.count(kind)) * 100 <= a.n);
    }
}
