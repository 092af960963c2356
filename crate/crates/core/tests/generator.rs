mod common;

use common::{fixture, Sampler};
use fsistab::ambient::{check_cc, AmbientField, Preset};
use fsistab::generator::{charge, Generator};
use fsistab::grid::{ScalarField, State, VectorField};
use proptest::prelude::*;

#[test]
fn constant_pressure_drives_only_the_plate() {
    let f = fixture(16, Preset::Zero, 0.0);
    let g = f.calc.geom;
    let c = 2.5;
    let mut s = State::zeros(&g);
    s.p = ScalarField::constant(&g, c);
    let a = f.generator.apply(&s);
    assert!(a.p.max_abs() < 1e-12);
    assert!(a.u.u1.max_abs() < 1e-12);
    assert!(a.w.max_abs() < 1e-12);
    // the top fluid row moves with the plate, so its mass hy/2 is added to the plate's
    let expected = c / (1.0 + g.hy / 2.0);
    for i in 1..g.nx {
        assert!((a.v.0[i] - expected).abs() < 1e-12, "{} vs {expected}", a.v.0[i]);
        assert!((a.u.u2.0[g.top(i)] - expected).abs() < 1e-12);
    }
}

#[test]
fn plate_velocity_feeds_deflection() {
    for (preset, kappa) in [(Preset::Zero, 0.0), (Preset::SolenoidalVortex, 1.0)] {
        let f = fixture(16, preset, kappa);
        let g = f.calc.geom;
        let mut s = State::zeros(&g);
        s.v = g.sample_beam(|x| (std::f64::consts::PI * x).sin().powi(2));
        s.v.0[0] = 0.0;
        s.v.0[g.nx] = 0.0;
        let s = f.generator.expand_state(&f.generator.reduce(&s));
        let a = f.generator.apply(&s);
        assert!(common::max_abs_diff(&a.w.0, &s.v.0) < 1e-12);
    }
}

#[test]
fn null_vector_residuals() {
    for (n, preset, kappa) in [(16, Preset::Zero, 0.0), (32, Preset::Zero, 0.0), (16, Preset::SolenoidalVortex, 1.0)] {
        let f = fixture(n, preset, kappa);
        let r = f.null.residual(&f.calc, &f.generator).unwrap();
        assert!(r <= 1e-10, "n={n} kappa={kappa}: {r}");
    }
}

/// `U = (Sx Å⁻¹(1) · ramp(y), 0)`: tangent to every wall but violating the
/// interface compatibility condition.
fn violating_field(f: &common::Fixture) -> AmbientField {
    let g = f.calc.geom;
    let slope = f.calc.beam_slope(&f.null.n0.w);
    let mut u1 = ScalarField::zeros(&g);
    for j in 0..=g.ny {
        let ramp = (1.0 + g.y(j) / g.l2).powi(2);
        for i in 1..g.nx {
            u1.0[g.idx(i, j)] = slope.0[i] * ramp;
        }
    }
    AmbientField::from_components(&f.calc, VectorField { u1, u2: ScalarField::zeros(&g) }).unwrap()
}

#[test]
fn compatibility_violation_is_reported() {
    let f = fixture(16, Preset::Zero, 0.0);
    let amb = violating_field(&f);
    let cc = check_cc(&f.calc, &f.beam, &amb).unwrap();
    let slope = f.calc.beam_slope(&f.null.n0.w);
    let expected = slope.0.iter().fold(0.0f64, |m, v| m.max(v * v));
    assert!(!cc.pass);
    assert!((cc.max_defect - expected).abs() <= 1e-15 + 1e-12 * expected);
    let gen = Generator::assemble(&f.calc, &amb, 1.0).unwrap();
    let r = f.null.residual(&f.calc, &gen).unwrap();
    assert!(r > 1e-6, "{r}");
}

#[test]
fn vortex_passes_compatibility() {
    let f = fixture(16, Preset::SolenoidalVortex, 1.0);
    let cc = check_cc(&f.calc, &f.beam, &f.ambient).unwrap();
    assert!(cc.pass && cc.max_defect <= 1e-12);
}

#[test]
fn projecting_constant_pressure_off_null() {
    let f = fixture(32, Preset::Zero, 0.0);
    let g = f.calc.geom;
    let mut s = State::zeros(&g);
    s.p = ScalarField::constant(&g, 1.0);
    let pr = f.null.project_off(&f.calc, &s).unwrap();
    let p0 = pr.p.0[0];
    assert!(pr.p.0.iter().all(|v| (v - p0).abs() < 1e-15));
    assert!((p0 - 1.0 / 721.0).abs() < 1e-2 / 721.0, "{p0}");
    let n2 = f.calc.inner_h(&f.null.n0, &f.null.n0).unwrap();
    let w_expected: Vec<f64> = f.null.n0.w.0.iter().map(|v| -v / n2).collect();
    assert!(common::max_abs_diff(&pr.w.0, &w_expected) < 1e-15);
    assert!(pr.u.u1.max_abs() == 0.0 && pr.v.max_abs() == 0.0);
    assert!(charge(&f.calc, &pr).abs() <= 1e-12);
    let zero = f.null.project_off(&f.calc, &f.null.n0).unwrap();
    assert!(f.calc.norm_h(&zero).unwrap() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn energy_rate_decomposes_exactly(seed in any::<u64>(), vortex in any::<bool>(), kappa in 0u8..2) {
        let preset = if vortex { Preset::SolenoidalVortex } else { Preset::SmallDiv };
        let f = fixture(10, preset, f64::from(kappa));
        let r: Vec<f64> = {
            let mut rng = Sampler::new(seed);
            (0..f.generator.order()).map(|_| rng.uniform()).collect()
        };
        let rates = f.generator.energy_rates(&f.calc, &f.ambient, &r);
        prop_assert!(rates.dissipation >= 0.0);
        prop_assert!(rates.balance_residual().abs() <= 1e-11 * (1.0 + rates.dissipation), "{:?}", rates);
    }

    #[test]
    fn projection_is_idempotent_and_kills_charge(seed in any::<u64>()) {
        let f = fixture(10, Preset::Zero, 0.0);
        let s = Sampler::new(seed).state(&f.calc.geom);
        let q = charge(&f.calc, &s);
        prop_assert!((f.null.coordinate(&f.calc, &s).unwrap() - q).abs() <= 1e-12 * (1.0 + q.abs()));
        let once = f.null.project_off(&f.calc, &s).unwrap();
        let twice = f.null.project_off(&f.calc, &once).unwrap();
        let d = twice.axpy(-1.0, &once);
        prop_assert!(f.calc.norm_h(&d).unwrap() <= 1e-12 * f.calc.norm_h(&s).unwrap());
        prop_assert!(charge(&f.calc, &once).abs() <= 1e-12 * (1.0 + q.abs()));
    }

    #[test]
    fn charge_is_conserved_by_the_generator(seed in any::<u64>()) {
        let f = fixture(10, Preset::SolenoidalVortex, 0.0);
        let s = f.generator.expand_state(&f.generator.reduce(&Sampler::new(seed).state(&f.calc.geom)));
        let rate = charge(&f.calc, &f.generator.apply(&s));
        prop_assert!(rate.abs() <= 1e-10, "{}", rate);
        prop_assert!(f.generator.constraint_defect(&s) == 0.0);
    }
}
