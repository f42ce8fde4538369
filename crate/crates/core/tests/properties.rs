use proptest::prelude::*;

use drumhead::ode::integrate;
use drumhead::profiles::builtin;
use drumhead::shooting::{eigen_spectrum, find_eigenvalue, initial_conditions};
use drumhead::specfun::{bessel_j, bessel_zero};
use drumhead::spectrum::{ratio_table, FUNDAMENTAL};
use drumhead::tuner::{tune, Template, TuneProblem};
use drumhead::{
    DensityProfile, LogExpParams, MembraneSpec, ModeId, RadialState, Ring, Scheme, SearchConfig,
};

fn rings_strategy() -> impl Strategy<Value = DensityProfile> {
    (
        0.1f64..0.45,
        0.05f64..0.4,
        1.0f64..20.0,
        1.0f64..20.0,
        1.0f64..5.0,
    )
        .prop_map(|(w1, w2, d1, d2, d3)| {
            DensityProfile::step_rings(
                MembraneSpec::default(),
                vec![
                    Ring {
                        outer_radius: w1,
                        density: d1,
                    },
                    Ring {
                        outer_radius: w1 + w2,
                        density: d2,
                    },
                    Ring {
                        outer_radius: 1.0,
                        density: d3,
                    },
                ],
            )
            .unwrap()
        })
}

fn continuous_strategy() -> impl Strategy<Value = DensityProfile> {
    (
        0.0f64..20.0,
        1.0f64..40.0,
        0.2f64..0.7,
        0.01f64..0.3,
        0.0f64..8.0,
        -20.0f64..0.0,
    )
        .prop_map(|(a_log, b_log, patch_radius, gap, c_exp, d_exp)| {
            DensityProfile::continuous(
                MembraneSpec::default(),
                LogExpParams {
                    a_log,
                    b_log,
                    r0: patch_radius + gap,
                    patch_radius,
                    c_exp,
                    d_exp,
                },
            )
            .unwrap()
        })
}

fn profile_strategy() -> impl Strategy<Value = DensityProfile> {
    prop_oneof![rings_strategy(), continuous_strategy()]
}

fn coarse() -> SearchConfig {
    SearchConfig {
        step: 5e-4,
        ..SearchConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn returned_modes_have_requested_circles(p in profile_strategy(), m in 0u32..5, c in 0u32..4) {
        let r = find_eigenvalue(ModeId::new(m, c), &p, &coarse()).unwrap();
        prop_assert_eq!(r.nodes, c as usize);
        prop_assert_eq!(r.mode, ModeId::new(m, c));
        prop_assert!(r.residual.abs() < 1e-6 * r.peak);
    }

    #[test]
    fn density_scaling_rescales_kappa(p in profile_strategy(), big in any::<bool>()) {
        let s = if big { 4.0 } else { 0.25 };
        let cfg = coarse();
        let base = eigen_spectrum(&p, 3, 2, &cfg).unwrap();
        let scaled = eigen_spectrum(&p.scaled(s).unwrap(), 3, 2, &cfg).unwrap();
        for (a, b) in base.iter().zip(&scaled) {
            prop_assert_eq!(a.mode, b.mode);
            let rel = (b.kappa * s.sqrt() / a.kappa - 1.0).abs();
            prop_assert!(rel < 1e-6, "{}: {} vs {} ({:e})", a.mode, a.kappa, b.kappa, rel);
        }
        let round = |t: &drumhead::RatioTable| -> Vec<(ModeId, i64)> {
            t.entries.iter().map(|e| (e.mode, (e.ratio * 1e6).round() as i64)).collect()
        };
        let ta = ratio_table(&base, FUNDAMENTAL, 1.0).unwrap();
        let tb = ratio_table(&scaled, FUNDAMENTAL, 1.0).unwrap();
        prop_assert_eq!(round(&ta), round(&tb));
    }

    #[test]
    fn heavier_rings_lower_every_mode(p in rings_strategy(), which in 0usize..3, extra in 0.1f64..5.0) {
        let cfg = coarse();
        let drumhead::profiles::Variant::StepRings(rings) = p.variant() else { unreachable!() };
        let mut heavier = rings.clone();
        heavier[which].density += extra;
        let q = DensityProfile::step_rings(MembraneSpec::default(), heavier).unwrap();
        let a = eigen_spectrum(&p, 2, 1, &cfg).unwrap();
        let b = eigen_spectrum(&q, 2, 1, &cfg).unwrap();
        for x in &a {
            let y = b.iter().find(|y| y.mode == x.mode).unwrap();
            prop_assert!(y.kappa <= x.kappa * (1.0 + 1e-9), "{}: {} -> {}", x.mode, x.kappa, y.kappa);
        }
    }

    #[test]
    fn integration_is_linear(m in 0u32..6, k in 0.5f64..20.0, s in 1e-3f64..1e3, rk4 in any::<bool>()) {
        let p = DensityProfile::uniform(MembraneSpec::default());
        let scheme = if rk4 { Scheme::RungeKutta4 } else { Scheme::Midpoint };
        let init = initial_conditions(m, k, &p, 1e-4).unwrap();
        let scaled = RadialState::new(init.r, s * init.value, s * init.slope);
        let a = integrate(m, k, &p, 1e-4, 1e-3, init, scheme).unwrap();
        let b = integrate(m, k, &p, 1e-4, 1e-3, scaled, scheme).unwrap();
        let peak = a.max_abs_value();
        for (x, y) in a.states.iter().zip(&b.states) {
            prop_assert!((s * x.value - y.value).abs() <= 1e-12 * s * peak);
            prop_assert_eq!(x.value.signum(), y.value.signum());
        }
    }

    #[test]
    fn bessel_zeros_interlace(m in 0u32..10, k in 1u32..10) {
        let z = bessel_zero(m, k).unwrap();
        prop_assert!(bessel_j(m, z).unwrap().abs() < 1e-9);
        let next_order = bessel_zero(m + 1, k).unwrap();
        let next_zero = bessel_zero(m, k + 1).unwrap();
        prop_assert!(z < next_order && next_order < next_zero, "{} {} {}", z, next_order, next_zero);
    }

    #[test]
    fn degenerate_continuous_is_uniform(r0 in 0.2f64..1.5, patch in 0.05f64..0.95) {
        let params = LogExpParams { r0: r0.max(patch + 0.01), patch_radius: patch, ..LogExpParams::degenerate() };
        let p = DensityProfile::continuous(MembraneSpec::default(), params).unwrap();
        let u = DensityProfile::uniform(MembraneSpec::default());
        let cfg = coarse();
        let a = eigen_spectrum(&p, 2, 1, &cfg).unwrap();
        let b = eigen_spectrum(&u, 2, 1, &cfg).unwrap();
        prop_assert_eq!(a, b);
    }
}

fn endpoint_error(m: u32, k: f64, h: f64, scheme: Scheme) -> f64 {
    let p = DensityProfile::uniform(MembraneSpec::default());
    let init = initial_conditions(m, k, &p, 1e-4).unwrap();
    let t = integrate(m, k, &p, 1e-4, h, init, scheme).unwrap();
    (t.last().value - bessel_j(m, k).unwrap()).abs()
}

fn order(m: u32, k: f64, h: f64, scheme: Scheme) -> f64 {
    (endpoint_error(m, k, h, scheme) / endpoint_error(m, k, h / 2.0, scheme)).log2()
}

#[test]
fn midpoint_converges_at_second_order() {
    for m in [0, 1, 2] {
        for k in [1.0, 2.404826, 5.0] {
            let p = order(m, k, 1e-3, Scheme::Midpoint);
            assert!((1.8..=2.2).contains(&p), "m={m} k={k}: order {p}");
        }
    }
    // halving from 1e-3 cuts the error by 4 within 20%
    let ratio = endpoint_error(0, 1.0, 1e-3, Scheme::Midpoint)
        / endpoint_error(0, 1.0, 5e-4, Scheme::Midpoint);
    assert!((ratio - 4.0).abs() <= 0.8, "{ratio}");
}

#[test]
fn rk4_converges_at_fourth_order() {
    for k in [1.0, 2.404826, 5.0] {
        for h in [8e-3, 4e-3] {
            let p = order(0, k, h, Scheme::RungeKutta4);
            assert!((3.8..=4.2).contains(&p), "k={k} h={h}: order {p}");
        }
    }
}

#[test]
fn eigenvalues_settle_on_every_builtin() {
    for name in ["uniform", "default-rings", "default-continuous"] {
        let p = builtin(name).unwrap();
        let at = |step: f64| {
            eigen_spectrum(
                &p,
                2,
                1,
                &SearchConfig {
                    step,
                    ..SearchConfig::default()
                },
            )
            .unwrap()
        };
        let (coarse, fine, finer) = (at(4e-4), at(2e-4), at(1e-4));
        for ((a, b), c) in coarse.iter().zip(&fine).zip(&finer) {
            let d1 = (a.kappa - b.kappa).abs();
            let d2 = (b.kappa - c.kappa).abs();
            assert!(
                d2 < d1 || d2 < 1e-9,
                "{name} {}: {d1:e} then {d2:e}",
                a.mode
            );
            assert!(d2 / c.kappa < 1e-4, "{name} {}: {d2:e}", a.mode);
        }
    }
}

fn small_problem() -> TuneProblem {
    TuneProblem {
        budget: 60,
        search: SearchConfig {
            step: 1e-3,
            ..TuneProblem::new(Template::ContinuousLogExp).search
        },
        ..TuneProblem::new(Template::ContinuousLogExp)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(3))]

    #[test]
    fn tuner_is_deterministic_and_bounded(seed in any::<u64>()) {
        let problem = small_problem();
        let a = tune(&problem, seed).unwrap();
        let b = tune(&problem, seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.trace.len() <= problem.budget);
        for e in &a.trace {
            for (v, p) in e.params.iter().zip(&problem.parameters) {
                prop_assert!(*v >= p.lower && *v <= p.upper, "{} = {} outside [{}, {}]", p.name, v, p.lower, p.upper);
            }
            prop_assert!(problem.build(&e.params).is_ok());
        }
        let best = a.best_so_far();
        prop_assert!(best.windows(2).all(|w| w[1] <= w[0]));
        prop_assert_eq!(*best.last().unwrap(), a.objective);
        prop_assert!(a.objective < a.trace[0].objective);
    }
}
