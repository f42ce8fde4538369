//! Finite-difference reference for the radial eigenproblem.
//!
//! `-(r R')' + m^2/r R = k^2 r rho R` on `N` cell-centred points
//! `r_i = (i - 1/2) h`, with `R = 0` half a cell beyond the last centre. The
//! generalized problem `K x = lambda M x` is symmetrized to
//! `M^{-1/2} K M^{-1/2}` and its eigenvalues are isolated by Sturm-sequence
//! bisection.

#![allow(dead_code)]

use drumhead::DensityProfile;

pub const FD_POINTS: usize = 2000;

pub struct Tridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl Tridiagonal {
    pub fn radial(profile: &DensityProfile, m: u32, n: usize) -> Self {
        let a = profile.radius();
        let h = a / n as f64;
        let m2 = f64::from(m * m);
        let centre = |i: usize| (i as f64 + 0.5) * h;
        let mass: Vec<f64> = (0..n)
            .map(|i| centre(i) * h * profile.density(centre(i)).unwrap())
            .collect();
        let mut diag = Vec::with_capacity(n);
        let mut off = Vec::with_capacity(n - 1);
        for i in 0..n {
            // face flux r_face / h, the outermost face sits on the rim at h/2
            let inner = i as f64;
            let outer = if i + 1 == n {
                a / (0.5 * h)
            } else {
                (i + 1) as f64
            };
            let k = inner + outer + m2 * h / centre(i);
            diag.push(k / mass[i]);
            if i + 1 < n {
                off.push(-((i + 1) as f64) / (mass[i] * mass[i + 1]).sqrt());
            }
        }
        Tridiagonal { diag, off }
    }

    /// Eigenvalues strictly below `x`.
    fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.diag.len() {
            let prev = if q == 0.0 { f64::EPSILON } else { q };
            q = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / prev;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `index`-th smallest eigenvalue, from zero.
    pub fn eigenvalue(&self, index: usize) -> f64 {
        let upper = self
            .diag
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
                let right = self.off.get(i).map_or(0.0, |o| o.abs());
                d + left + right
            })
            .fold(0.0, f64::max);
        let (mut lo, mut hi) = (0.0, upper);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.count_below(mid) > index {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-14 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Dimensionless eigenvalue `k a` of the `(index+1)`-th mode at order `m`.
pub fn fd_kappa(profile: &DensityProfile, m: u32, index: usize, n: usize) -> f64 {
    Tridiagonal::radial(profile, m, n).eigenvalue(index).sqrt() * profile.radius()
}
