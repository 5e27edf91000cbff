use mlrho::initial_data::plane_wave;
use mlrho::random::band_limited_pair;
use mlrho::spectral_field::{free_propagate, spectral_divergence};
use mlrho::weights_norms::l2_norm_sq;
use mlrho::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn max_diff(a: &FieldPair, b: &FieldPair) -> f64 {
    let mut m: f64 = 0.0;
    for (x, y) in [(a.e(), b.e()), (a.b(), b.b())] {
        for c in 0..3 {
            for (u, v) in x.component(c).iter().zip(y.component(c)) {
                m = m.max((u - v).abs());
            }
        }
    }
    m
}

#[test]
fn plane_wave_translates_at_unit_speed() {
    let grid = Grid::new(16, 10.0).unwrap();
    let a = 1.3;
    let pw = plane_wave(&grid, [2, -1, 1], [1.0, 2.0, 0.0], a).unwrap();
    let k = pw.wavevector;
    let kn = vec3::norm(k);
    let kh = vec3::scale(k, 1.0 / kn);
    let e_hat = pw.polarization;
    let b_hat = vec3::cross(kh, e_hat);
    let t = 0.37;
    let moved = free_propagate(&grid, &pw.fields, t);
    let oracle = FieldPair::new(
        VectorField::from_fn(&grid, |x| vec3::scale(e_hat, a * (vec3::dot(k, x) - kn * t).cos())),
        VectorField::from_fn(&grid, |x| vec3::scale(b_hat, a * (vec3::dot(k, x) - kn * t).cos())),
    );
    assert!(max_diff(&moved, &oracle) < 1e-12);
}

#[test]
fn projected_polarization_is_reported() {
    let grid = Grid::new(16, 10.0).unwrap();
    let pw = plane_wave(&grid, [1, 0, 0], [1.0, 1.0, 0.0], 1.0).unwrap();
    assert!(pw.corrected);
    assert!((pw.polarization[0]).abs() < 1e-15);
    let err = plane_wave(&grid, [1, 0, 0], [2.0, 0.0, 0.0], 1.0).unwrap_err();
    assert_eq!(err.code(), "E_DOMAIN");
    assert!(plane_wave(&grid, [8, 0, 0], [0.0, 1.0, 0.0], 1.0).is_err());
    assert!(plane_wave(&grid, [0, 0, 0], [0.0, 1.0, 0.0], 1.0).is_err());
}

#[test]
fn zero_time_is_identity() {
    let grid = Grid::new(8, 5.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let f = band_limited_pair(&grid, 3, 5, 1.0, &mut rng);
    assert!(max_diff(&free_propagate(&grid, &f, 0.0), &f) < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn group_law_and_reversal(seed in any::<u64>(), s in -3.0f64..3.0, t in -3.0f64..3.0) {
        let grid = Grid::new(8, 5.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = band_limited_pair(&grid, 3, 5, 1.0, &mut rng);
        let scale = f.e().max_abs().max(f.b().max_abs()).max(1.0);
        let two = free_propagate(&grid, &free_propagate(&grid, &f, s), t);
        let one = free_propagate(&grid, &f, s + t);
        prop_assert!(max_diff(&two, &one) < 1e-12 * scale);
        let back = free_propagate(&grid, &free_propagate(&grid, &f, t), -t);
        prop_assert!(max_diff(&back, &f) < 1e-12 * scale);
    }

    #[test]
    fn free_flow_keeps_energy_and_divergence(seed in any::<u64>(), t in -5.0f64..5.0) {
        let grid = Grid::new(8, 5.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = band_limited_pair(&grid, 3, 5, 1.0, &mut rng);
        let g = free_propagate(&grid, &f, t);
        let e0 = l2_norm_sq(&grid, f.e()) + l2_norm_sq(&grid, f.b());
        let e1 = l2_norm_sq(&grid, g.e()) + l2_norm_sq(&grid, g.b());
        prop_assert!((e1 - e0).abs() <= 1e-12 * e0.max(1.0));
        for (a, b) in [(f.e(), g.e()), (f.b(), g.b())] {
            let da = spectral_divergence(&grid, a);
            let db = spectral_divergence(&grid, b);
            let m = da.iter().zip(&db).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            prop_assert!(m < 1e-11);
        }
    }
}
