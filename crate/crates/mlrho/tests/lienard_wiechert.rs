use mlrho::initial_data::{lw_field, retarded_residual, retarded_time, TimeSign, Worldline, WorldlineKind};
use mlrho::*;
use proptest::prelude::*;

fn circular() -> Worldline {
    Worldline::new(
        WorldlineKind::Circular {
            center: [0.0; 3],
            radius: 0.5,
            omega: 1.2,
        },
        1.0,
    )
    .unwrap()
}

#[test]
fn static_charge_is_coulomb() {
    let wl = Worldline::new(
        WorldlineKind::Static {
            center: [1.0, 0.0, 0.0],
        },
        -2.0,
    )
    .unwrap();
    let x = [4.0, 4.0, 0.0];
    for sign in [TimeSign::Retarded, TimeSign::Advanced] {
        let (e, b) = lw_field(&wl, x, 3.0, sign, 0.1).unwrap().unwrap();
        // r = (3, 4, 0), |r| = 5.
        let want = vec3::scale([3.0, 4.0, 0.0], -2.0 / 125.0);
        assert!(vec3::norm(vec3::sub(e, want)) < 1e-15);
        assert!(vec3::norm(b) < 1e-15 * vec3::norm(e));
    }
    assert!(lw_field(&wl, [1.05, 0.0, 0.0], 0.0, TimeSign::Retarded, 0.1)
        .unwrap()
        .is_none());
}

#[test]
fn retarded_and_advanced_times_bracket_t() {
    let wl = circular();
    let x = [10.0, -3.0, 2.0];
    let t = 1.5;
    let r = retarded_time(&wl, x, t, TimeSign::Retarded).unwrap();
    let a = retarded_time(&wl, x, t, TimeSign::Advanced).unwrap();
    assert!(r < t && a > t);
    let z = wl.position(r);
    assert!((vec3::norm(vec3::sub(x, z)) - (t - r)).abs() < 1e-10);
}

#[test]
fn superluminal_worldline_is_rejected() {
    let k = WorldlineKind::Uniform {
        origin: [0.0; 3],
        velocity: [0.8, 0.6, 0.0],
    };
    assert_eq!(Worldline::new(k, 1.0).unwrap_err().code(), "E_DOMAIN");
    let c = WorldlineKind::Circular {
        center: [0.0; 3],
        radius: 2.0,
        omega: 0.6,
    };
    assert!(Worldline::new(c, 1.0).is_err());
}

#[test]
fn advanced_field_of_uniform_motion_is_retarded_field() {
    // For inertial motion both fields coincide with the boosted Coulomb field.
    let wl = Worldline::new(
        WorldlineKind::Uniform {
            origin: [0.0; 3],
            velocity: [0.0, 0.0, 0.6],
        },
        1.0,
    )
    .unwrap();
    let x = [3.0, 1.0, -2.0];
    let (er, br) = lw_field(&wl, x, 0.7, TimeSign::Retarded, 0.1).unwrap().unwrap();
    let (ea, ba) = lw_field(&wl, x, 0.7, TimeSign::Advanced, 0.1).unwrap().unwrap();
    assert!(vec3::norm(vec3::sub(er, ea)) < 1e-13 * vec3::norm(er));
    assert!(vec3::norm(vec3::sub(br, ba)) < 1e-13 * vec3::norm(er));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn retarded_time_solves_the_light_cone(
        x in prop::array::uniform3(-1e3f64..1e3),
        t in -50.0f64..50.0,
        adv in any::<bool>(),
    ) {
        let wl = circular();
        let sign = if adv { TimeSign::Advanced } else { TimeSign::Retarded };
        let tau = retarded_time(&wl, x, t, sign).unwrap();
        let scale = 1.0 + vec3::norm(x) + t.abs();
        prop_assert!(retarded_residual(&wl, x, t, sign, tau).abs() < 1e-12 * scale);
    }

    #[test]
    fn radiation_field_is_transverse_far_away(theta in 0.1f64..3.0, phi in 0.0f64..std::f64::consts::TAU) {
        // At large distance B = n × E and E ⊥ n up to O(1/r²) corrections.
        let wl = circular();
        let r = 1e5;
        let n = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
        let x = vec3::scale(n, r);
        let (e, b) = lw_field(&wl, x, 0.0, TimeSign::Retarded, 0.1).unwrap().unwrap();
        let scale = vec3::norm(e);
        prop_assert!(vec3::norm(vec3::sub(b, vec3::cross(n, e))) < 1e-3 * scale);
    }
}
