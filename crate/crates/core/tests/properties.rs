mod common;

use proptest::prelude::*;

use viscoflow::fluid_model::{BulkState, MaterialLaw, ShearState, StressTensor, Vec3};
use viscoflow::quasilinear::{
    assemble_bulk, assemble_shear, characteristic_speeds_numeric, shear_wave_speeds, SpectralOptions,
};
use viscoflow::scenario::{parse_config, parse_law, parse_override, parse_with_overrides, ScenarioConfig};
use viscoflow::stability::{bulk_dispersion, poly_roots, routh_hurwitz, Background, SweepSpec};

use common::durand_kerner;

fn direction() -> impl Strategy<Value = Vec3> {
    (0.0f64..std::f64::consts::PI, 0.0f64..2.0 * std::f64::consts::PI)
        .prop_map(|(th, ph)| [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()])
}

fn velocity() -> impl Strategy<Value = Vec3> {
    [-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0]
}

fn law() -> impl Strategy<Value = MaterialLaw> {
    (0.2f64..5.0, 1.1f64..3.0, 0.1f64..5.0, 0.1f64..5.0, 0.1f64..5.0)
        .prop_map(|(a, g, z, e, t)| MaterialLaw::constant(a, g, z, e, t).unwrap())
}

fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn poly() -> impl Strategy<Value = Vec<f64>> {
    (1usize..7).prop_flat_map(|deg| prop::collection::vec(prop_oneof![-5.0f64..-0.1, 0.1f64..5.0], deg + 1))
}

proptest! {
    #[test]
    fn bulk_speeds_shift_with_flow(law in law(), rho in 0.1f64..10.0, v in velocity(), n in direction()) {
        let opts = SpectralOptions::default();
        let rest = characteristic_speeds_numeric(&assemble_bulk(&BulkState::new(rho, [0.0; 3], 0.0), &law).unwrap(), &n, &opts);
        let moving = characteristic_speeds_numeric(&assemble_bulk(&BulkState::new(rho, v, 0.0), &law).unwrap(), &n, &opts);
        let vn = dot(&v, &n);
        for (a, b) in moving.speeds.iter().zip(&rest.speeds) {
            prop_assert!((a - b - vn).abs() <= 1e-10 * (1.0 + b.abs() + vn.abs()));
        }
    }

    #[test]
    fn shear_speeds_shift_with_flow(law in law(), rho in 0.1f64..10.0, v in velocity(), n in direction(), p in -0.05f64..1.0) {
        let opts = SpectralOptions::default();
        let stress = StressTensor::isotropic(p);
        let rest = characteristic_speeds_numeric(&assemble_shear(&ShearState::new(rho, [0.0; 3], stress), &law).unwrap(), &n, &opts);
        let moving = characteristic_speeds_numeric(&assemble_shear(&ShearState::new(rho, v, stress), &law).unwrap(), &n, &opts);
        prop_assert_eq!(rest.speeds.len(), 10);
        let vn = dot(&v, &n);
        for (a, b) in moving.speeds.iter().zip(&rest.speeds) {
            prop_assert!((a - b - vn).abs() <= 1e-9 * (1.0 + b.abs() + vn.abs()));
        }
    }

    #[test]
    fn shear_symbol_is_singular_on_characteristics(
        law in law(), rho in 0.1f64..10.0, v in velocity(), n in direction(), scale in 0.2f64..3.0,
    ) {
        let st = ShearState::new(rho, v, StressTensor::zero());
        let sys = assemble_shear(&st, &law).unwrap();
        let (shear, fast) = shear_wave_speeds(&st, &law).unwrap();
        let xi = [n[0] * scale, n[1] * scale, n[2] * scale];
        for s in [0.0, shear, -shear, fast, -fast] {
            let xi0 = -dot(&v, &xi) + s * scale;
            let sv = sys.principal_symbol(xi0, &xi).singular_values();
            prop_assert!(sv.min() <= 1e-12 * sv.max(), "s = {s}: {} / {}", sv.min(), sv.max());
        }
    }

    #[test]
    fn dispersion_shifts_by_doppler_term(
        rho0 in 0.1f64..5.0, cs in 0.1f64..5.0, zeta in 0.1f64..5.0, tau in 0.1f64..5.0,
        v0 in velocity(), n in direction(), k in 0.1f64..5.0,
    ) {
        let kv = [n[0] * k, n[1] * k, n[2] * k];
        let rest = Background { rho0, cs, zeta, eta: 1.0, tau, v0: [0.0; 3] };
        let moving = Background { v0, ..rest };
        let mut a = bulk_dispersion(&rest, &kv).omegas().unwrap();
        let mut b = bulk_dispersion(&moving, &kv).omegas().unwrap();
        let key = |z: &viscoflow::stability::Complex64| (z.im, z.re);
        a.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
        b.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
        let shift = dot(&v0, &kv);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((y.re - x.re - shift).abs() <= 1e-9 * (1.0 + x.norm() + shift.abs()));
            prop_assert!((y.im - x.im).abs() <= 1e-9 * (1.0 + x.norm()));
        }
    }

    #[test]
    fn companion_roots_match_independent_iteration(p in poly()) {
        let ours = poly_roots(&p).unwrap().roots;
        let theirs = durand_kerner(&p);
        prop_assert_eq!(ours.len(), theirs.len());
        let scale = theirs.iter().fold(1.0f64, |m, z| m.max(z.norm()));
        for z in &theirs {
            let nearest = ours.iter().map(|w| (w - z).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(nearest <= 1e-6 * scale, "{z} not found in {ours:?}");
        }
    }

    #[test]
    fn hurwitz_agrees_with_root_signs(p in poly()) {
        let roots = durand_kerner(&p);
        let scale = roots.iter().fold(1.0f64, |m, z| m.max(z.norm()));
        let max_re = roots.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        prop_assume!(max_re.abs() > 1e-9 * scale);
        prop_assert_eq!(routh_hurwitz(&p, 1e-9).unwrap().stable, max_re < 0.0);
    }

    #[test]
    fn sweep_spec_round_trips(a in -10.0f64..10.0, span in 0.0f64..10.0, n in 2usize..500) {
        let s = SweepSpec::parse(&format!("{a:?}:{:?}:{n}", a + span + 1e-3)).unwrap();
        prop_assert_eq!(SweepSpec::parse(&s.to_string()).unwrap(), s);
        let ks = s.wavenumbers();
        prop_assert_eq!(ks.len(), n);
        prop_assert_eq!(ks[0], s.k_min);
        prop_assert_eq!(ks[n - 1], s.k_max);
    }

    #[test]
    fn config_round_trips_through_text(
        zeta in 0.1f64..5.0, tau in 0.01f64..5.0, rho in 0.1f64..5.0, n in 8usize..4096,
        cfl in 0.05f64..1.0, amp in 0.0f64..0.5, cadence in 1usize..20,
    ) {
        let overrides = [
            format!("material.zeta={zeta:?}"),
            format!("material.tau={tau:?}"),
            format!("reference.rho_bar={rho:?}"),
            format!("grid.n_cells={n}"),
            format!("grid.cfl={cfl:?}"),
            format!("profile.density={amp:?}"),
            format!("run.series_cadence={cadence}"),
            "grid.x_max=1000".to_string(),
        ];
        let cfg = parse_with_overrides("system = bulk\n", &overrides).unwrap();
        let again: ScenarioConfig = parse_config(&cfg.to_text()).unwrap();
        prop_assert_eq!(again, cfg);
    }

}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1024))]

    #[test]
    fn config_parser_is_total(text in config_text()) {
        if let Ok(cfg) = parse_config(&text) {
            let printed = cfg.to_text();
            prop_assert_eq!(parse_config(&printed).unwrap().to_text(), printed);
        }
    }

    #[test]
    fn small_parsers_are_total(text in "[a-z0-9._=:(), eE+-]{0,40}") {
        if let Ok(law) = parse_law(&text) {
            prop_assert_eq!(parse_law(&law.to_string()).unwrap().to_string(), law.to_string());
        }
        if let Ok(s) = SweepSpec::parse(&text) {
            prop_assert!(s.k_min <= s.k_max && s.count > 0);
        }
        if let Ok((k, v)) = parse_override(&text) {
            prop_assert!(!k.contains('=') && text.contains(&k) && text.contains(&v));
        }
    }
}

/// Lines drawn from the config grammar, mixed with junk.
fn config_text() -> impl Strategy<Value = String> {
    let line = prop_oneof![
        Just("system = bulk".to_string()),
        Just("system = shear".to_string()),
        Just("geometry = planar".to_string()),
        "\\[(model|material|grid|run|profile|reference|tolerances|analysis|x)\\]",
        (
            "(zeta|eta|tau|A|gamma|density|velocity|stress|x_min|x_max|n_cells|t_end|cfl|R|center|grad_factor)",
            -5.0f64..5.0
        )
            .prop_map(|(k, v)| format!("{k} = {v}")),
        "(zeta|eta|tau) = (power|bulk-saturating|stress-saturating|cubic)\\([0-9.]{1,3}, ?[0-9.]{1,3}\\)",
        "(v_bar|direction|wavevector|snapshot_times|sweep) = [0-9.,: -]{0,12}",
        "[#a-z_. =\\[\\]0-9-]{0,20}",
    ];
    prop::collection::vec(line, 0..12).prop_map(|ls| ls.join("\n"))
}
