mod common;

use common::{fd_kappa, FD_POINTS};
use drumhead::profiles::builtin;
use drumhead::shooting::{eigen_spectrum, Shooter};
use drumhead::specfun::bessel_zero;
use drumhead::{DensityProfile, MembraneSpec, Ring, SearchConfig};

#[test]
fn fd_matches_bessel_zeros() {
    let p = DensityProfile::uniform(MembraneSpec::default());
    for m in 0..4 {
        for c in 0..3 {
            let fd = fd_kappa(&p, m, c, FD_POINTS);
            let exact = bessel_zero(m, c as u32 + 1).unwrap();
            assert!(
                (fd / exact - 1.0).abs() < 1e-4,
                "({m},{c}) fd {fd} vs {exact}"
            );
        }
    }
}

#[test]
fn fd_scales_with_radius() {
    let p = DensityProfile::uniform(MembraneSpec::new(2.0).unwrap());
    let fd = fd_kappa(&p, 0, 0, FD_POINTS);
    assert!((fd - 2.404826).abs() < 1e-3, "{fd}");
}

fn agree_on_first_ten(profile: &DensityProfile) {
    let spectrum = eigen_spectrum(profile, 4, 3, &SearchConfig::default()).unwrap();
    for r in spectrum.iter().take(10) {
        let fd = fd_kappa(
            profile,
            r.mode.diameters,
            r.mode.circles as usize,
            FD_POINTS,
        );
        let rel = (r.kappa / fd - 1.0).abs();
        assert!(
            rel < 5e-3,
            "{}: shooting {} fd {} ({rel:.2e})",
            r.mode,
            r.kappa,
            fd
        );
    }
}

#[test]
fn shooting_matches_fd_on_builtins() {
    for name in ["uniform", "default-rings", "default-continuous"] {
        agree_on_first_ten(&builtin(name).unwrap());
    }
}

#[test]
fn shooting_matches_fd_on_two_rings() {
    let p = DensityProfile::step_rings(
        MembraneSpec::default(),
        vec![
            Ring {
                outer_radius: 0.4,
                density: 6.0,
            },
            Ring {
                outer_radius: 1.0,
                density: 1.5,
            },
        ],
    )
    .unwrap();
    agree_on_first_ten(&p);
}

#[test]
fn boundary_value_changes_sign_across_fd_eigenvalue() {
    let p = builtin("default-continuous").unwrap();
    let shooter = Shooter::new(&p, SearchConfig::default()).unwrap();
    let k = fd_kappa(&p, 1, 0, FD_POINTS);
    let below = shooter.boundary_value(1, 0.99 * k).unwrap();
    let above = shooter.boundary_value(1, 1.01 * k).unwrap();
    assert!(below * above < 0.0);
}
