use proptest::prelude::*;

use trimer_core::dynamics::{
    lift_reduced, reduced_consistency_residual, zero_energy_from_cartesian, zero_energy_to_cartesian,
};
use trimer_core::integrate::{integrate, IntegratorConfig};
use trimer_core::model::{hamiltonian_energy, potential_energy, CartesianFlow};
use trimer_core::{CartesianState, MassGeometry, ShapePotentials, SystemParams};

fn masses() -> impl Strategy<Value = [f64; 3]> {
    [0.1f64..10.0, 0.1f64..10.0, 0.1f64..10.0]
}

fn params() -> impl Strategy<Value = SystemParams> {
    (
        masses(),
        [0.3f64..3.0, 0.3f64..3.0, 0.3f64..3.0],
        [0.3f64..3.0, 0.3f64..3.0, 0.3f64..3.0],
        4.5f64..8.0,
        1.5f64..6.0,
    )
        .prop_map(|(m, al, be, a, gap)| SystemParams::new(m, al, be, a, a + gap, 0.0).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rotation_preserves_mass_metric(m in masses(), q in [-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0]) {
        let g = MassGeometry::new(m).unwrap();
        let mt: f64 = m.iter().sum();
        let c = g.m_dot(&q, &[1.0; 3]) / mt;
        let q = q.map(|x| x - c);
        let aq = g.apply_atilde(&q);
        prop_assert!((g.m_dot(&aq, &aq) - g.m_dot(&q, &q)).abs() < 1e-12 * (1.0 + g.m_dot(&q, &q)));
        prop_assert!(g.m_dot(&q, &aq).abs() < 1e-12 * (1.0 + g.m_dot(&q, &q)));
        let aaq = g.apply_atilde(&aq);
        for i in 0..3 {
            prop_assert!((aaq[i] + q[i]).abs() < 1e-12 * (1.0 + q[i].abs()));
        }
    }

    #[test]
    fn shape_curve_is_unit_and_inverts(m in masses(), s in -0.99f64..0.99) {
        let g = MassGeometry::new(m).unwrap();
        let q = g.shape_map(s).unwrap();
        prop_assert!((g.m_dot(&q, &q) - 1.0).abs() < 1e-12);
        prop_assert!(q[0] < q[1] && q[1] < q[2]);
        prop_assert!((g.shape_inverse(&q).unwrap() - s).abs() < 1e-10);
    }

    #[test]
    fn cartesian_energy_is_conserved(p in params(), d12 in 0.9f64..2.0, d23 in 0.9f64..2.0, mom in [-0.5f64..0.5, -0.5f64..0.5]) {
        let q = [-d12, 0.0, d23];
        // total momentum zero
        let st = CartesianState::new(q, [mom[0], mom[1], -mom[0] - mom[1]]);
        let h = hamiltonian_energy(&st, &p).unwrap();
        prop_assert!(potential_energy(&q, &p).unwrap() <= h);
        let p = p.with_energy(h).unwrap();
        let cfg = IntegratorConfig { rel_tol: 1e-11, abs_tol: 1e-13, ..IntegratorConfig::default() }.with_max_time(2.0);
        let tr = integrate(&CartesianFlow { params: &p }, &st.to_array(), &cfg, &[]).unwrap();
        prop_assert!(tr.max_energy_residual() < 1e-8 * (1.0 + h.abs()), "{}", tr.max_energy_residual());
    }

    #[test]
    fn symmetric_cc_subspace_is_invariant(d in 0.9f64..2.0, v in -0.3f64..0.3) {
        let p = SystemParams::reference_symmetric();
        let st = CartesianState::new([-d, 0.0, d], [-v, 0.0, v]);
        let h = hamiltonian_energy(&st, &p).unwrap();
        let p = p.with_energy(h).unwrap();
        let cfg = IntegratorConfig::default().with_max_time(3.0);
        let tr = integrate(&CartesianFlow { params: &p }, &st.to_array(), &cfg, &[]).unwrap();
        for s in &tr.samples {
            prop_assert!(CartesianState::from_array(&s.state).cc_residual() < 1e-10);
        }
    }

    #[test]
    fn zero_energy_chart_round_trip(p in params(), s in -0.8f64..0.8, yf in -0.8f64..0.8, wf in -0.9f64..0.9) {
        let pot = ShapePotentials::new(&p).unwrap();
        let x0 = [0.0, s, 0.0];
        let g0 = trimer_core::dynamics::admissibility(&x0, &pot).unwrap();
        let ymax = (2.0 * g0).sqrt() / (1.0 - s * s).powf(0.5 * p.exp_a());
        let y = yf * ymax;
        let gy = trimer_core::dynamics::admissibility(&[y, s, 0.0], &pot).unwrap();
        let x = [y, s, wf * (2.0 * gy).sqrt()];
        let f = trimer_core::dynamics::reduced_zero_energy_field(&x, &pot).unwrap();
        let gr = trimer_core::dynamics::admissibility_gradient(&x, &pot).unwrap();
        let scale: f64 = (0..3).map(|i| (gr[i] * f[i]).abs()).sum();
        prop_assert!(reduced_consistency_residual(&x, &pot).unwrap().abs() < 1e-12 * (1.0 + scale));
        let st = lift_reduced(&x, &pot).unwrap();
        let c = zero_energy_to_cartesian(&st, &pot).unwrap();
        prop_assert!(hamiltonian_energy(&c, &p).unwrap().abs() < 1e-8 * (1.0 + c.p.iter().map(|v| v * v).sum::<f64>()));
        let back = zero_energy_from_cartesian(&c, &pot).unwrap().to_array();
        let st = st.to_array();
        for i in 0..4 {
            prop_assert!((back[i] - st[i]).abs() < 1e-8 * (1.0 + st[i].abs()), "{back:?} vs {st:?}");
        }
    }

    #[test]
    fn params_round_trip_through_json(p in params()) {
        let text = serde_json::to_string(&p).unwrap();
        let back: SystemParams = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn integrator_config_round_trip(rel in 1e-13f64..1e-6, steps in 1usize..1_000_000) {
        let cfg = IntegratorConfig { rel_tol: rel, max_steps: steps, ..IntegratorConfig::default() };
        let back: IntegratorConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
