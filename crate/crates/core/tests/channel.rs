use srbf_core::channel::*;
use srbf_core::config::SystemConfig;
use srbf_core::numerics::Complex64;

fn cfg(kappa_db: f64) -> SystemConfig {
    SystemConfig {
        n_t: 16,
        n_r: 8,
        n_s: 1,
        kappa_db,
        ..Default::default()
    }
}

#[test]
fn nlos_second_moment_is_one() {
    let c = cfg(0.0);
    let (mut sum, mut sq, mut re2, mut n) = (Complex64::new(0.0, 0.0), 0.0, 0.0, 0.0);
    for trial in 0..800 {
        for z in draw_channel(&c, trial).h_nlos.as_slice() {
            sum += z;
            sq += z.norm_sqr();
            re2 += z.re * z.re;
            n += 1.0;
        }
    }
    assert!(n >= 1e5);
    assert!((sq / n - 1.0).abs() < 0.02, "second moment {}", sq / n);
    assert!((re2 / n - 0.5).abs() < 0.01);
    assert!((sum / n).norm() < 0.01);
}

#[test]
fn rician_split_of_average_power() {
    for kappa_db in [-10.0, 0.0, 10.0] {
        let c = cfg(kappa_db);
        let mut total = 0.0;
        for trial in 0..300 {
            total += draw_channel(&c, trial).h_full.frobenius_norm().powi(2);
        }
        // LoS entries have unit modulus, so the mean per-entry power is 1.
        let per_entry = total / (300.0 * 128.0);
        assert!(
            (per_entry - 1.0).abs() < 0.03,
            "kappa {kappa_db}: {per_entry}"
        );
    }
}

#[test]
fn seeds_and_trials_give_distinct_draws() {
    let a = cfg(0.0);
    let b = SystemConfig {
        base_seed: 2,
        ..cfg(0.0)
    };
    assert_eq!(draw_channel(&a, 5).h_full, draw_channel(&a, 5).h_full);
    assert_ne!(draw_channel(&a, 5).h_nlos, draw_channel(&a, 6).h_nlos);
    assert_ne!(draw_channel(&a, 5).h_nlos, draw_channel(&b, 5).h_nlos);
}

#[test]
fn los_component_is_rank_one() {
    let tx = ArrayGeometry::half_wavelength(6).unwrap();
    let rx = ArrayGeometry::half_wavelength(4).unwrap();
    let h = los_component(&tx, &rx, 1.0).unwrap();
    let s = srbf_core::numerics::svd(&h).unwrap();
    assert!((s.s[0] - 24f64.sqrt()).abs() < 1e-12);
    assert!(s.s[1..].iter().all(|&v| v < 1e-12));
}
