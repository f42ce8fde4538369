//! Fixed-step explicit Runge–Kutta integration of the radial equation
//!
//! ```text
//! R' = S
//! S' = -S/r - (rho(r) k'^2 - m^2/r^2) R
//! ```
//!
//! from a small start radius out to the rim. The step is adjusted down so an
//! integer number of steps lands exactly on the rim.
//!
//! For `m >= 1` the solution grows like `r^m` from the start radius, and a
//! step comparable to `r` loses a fixed fraction of amplitude that is never
//! recovered. Inside `STARTUP_FRACTION * a` such orders are therefore
//! integrated with classical RK4, each step split into substeps no longer
//! than `r / (STARTUP_REACH * m)`. Only the grid states are recorded.

use crate::error::{Error, Result};
use crate::profiles::DensityProfile;

/// Radial displacement `R` and its derivative at radius `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialState {
    pub r: f64,
    pub value: f64,
    pub slope: f64,
}

impl RadialState {
    pub fn new(r: f64, value: f64, slope: f64) -> Self {
        RadialState { r, value, slope }
    }

    fn is_finite(&self) -> bool {
        self.value.is_finite() && self.slope.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// Explicit midpoint rule, second order.
    #[default]
    Midpoint,
    /// Classical fourth-order Runge–Kutta.
    RungeKutta4,
}

impl Scheme {
    pub fn order(self) -> u32 {
        match self {
            Scheme::Midpoint => 2,
            Scheme::RungeKutta4 => 4,
        }
    }

    pub fn from_order(order: u32) -> Result<Self> {
        match order {
            2 => Ok(Scheme::Midpoint),
            4 => Ok(Scheme::RungeKutta4),
            _ => Err(Error::invalid(format!(
                "integrator order must be 2 or 4, got {order}"
            ))),
        }
    }
}

/// Every accepted step of one integration.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<RadialState>,
    /// Step actually taken.
    pub h: f64,
    /// Angular order `m`.
    pub m: u32,
    pub kprime: f64,
}

impl Trajectory {
    pub fn last(&self) -> &RadialState {
        self.states
            .last()
            .expect("trajectory holds at least two states")
    }

    pub fn max_abs_value(&self) -> f64 {
        self.states
            .iter()
            .fold(0.0, |acc, s| acc.max(s.value.abs()))
    }
}

/// Right-hand side `(R', R'')` of the first-order system.
pub fn radial_rhs(
    m: u32,
    kprime: f64,
    profile: &DensityProfile,
    state: &RadialState,
) -> Result<(f64, f64)> {
    if !(state.r > 0.0) {
        return Err(Error::invalid(format!(
            "radial equation is singular at r = {}; start from r > 0",
            state.r
        )));
    }
    let rho = profile.density(state.r)?;
    let m2 = f64::from(m * m);
    let inv_r = 1.0 / state.r;
    Ok(rhs(
        m2,
        kprime * kprime,
        rho,
        inv_r,
        state.value,
        state.slope,
    ))
}

#[inline(always)]
fn rhs(m2: f64, k2: f64, rho: f64, inv_r: f64, value: f64, slope: f64) -> (f64, f64) {
    (
        slope,
        -slope * inv_r - (rho * k2 - m2 * inv_r * inv_r) * value,
    )
}

const STARTUP_FRACTION: f64 = 0.25;
const STARTUP_REACH: f64 = 64.0;

/// A profile sampled on the fixed radial grid used by every trial `k'`.
///
/// Density and `1/r` are tabulated at half-step spacing, which covers all
/// stage radii of both schemes.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    r_start: f64,
    radius: f64,
    h: f64,
    steps: usize,
    scheme: Scheme,
    rho: Vec<f64>,
    inv_r: Vec<f64>,
    profile: DensityProfile,
}

impl RadialGrid {
    pub fn new(profile: &DensityProfile, r_start: f64, h: f64, scheme: Scheme) -> Result<Self> {
        let a = profile.radius();
        if !(r_start > 0.0 && r_start < a) {
            return Err(Error::invalid(format!(
                "start radius must lie in (0, {a}), got {r_start}"
            )));
        }
        let span = a - r_start;
        if !(h > 0.0) || h > span / 100.0 * (1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "step must lie in (0, {}], got {h}",
                span / 100.0
            )));
        }
        let steps = (span / h).round() as usize;
        let h = span / steps as f64;
        let half = 0.5 * h;
        let (rho, inv_r) = (0..=2 * steps)
            .map(|j| {
                let r = if j == 2 * steps {
                    a
                } else {
                    r_start + j as f64 * half
                };
                (profile.density_at(r), 1.0 / r)
            })
            .unzip();
        Ok(RadialGrid {
            r_start,
            radius: a,
            h,
            steps,
            scheme,
            rho,
            inv_r,
            profile: profile.clone(),
        })
    }

    pub fn r_start(&self) -> f64 {
        self.r_start
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    fn radius_at(&self, i: usize) -> f64 {
        if i == self.steps {
            self.radius
        } else {
            self.r_start + i as f64 * self.h
        }
    }

    /// RK4 across `[state.r, to]` in `n` equal pieces, densities evaluated
    /// directly.
    fn substep(&self, m2: f64, k2: f64, state: RadialState, to: f64, n: usize) -> RadialState {
        let dr = (to - state.r) / n as f64;
        let f = |r: f64, y: f64, s: f64| rhs(m2, k2, self.profile.density_at(r), 1.0 / r, y, s);
        let (mut y, mut s) = (state.value, state.slope);
        for p in 0..n {
            let r = state.r + p as f64 * dr;
            let (k1y, k1s) = f(r, y, s);
            let (k2y, k2s) = f(r + 0.5 * dr, y + 0.5 * dr * k1y, s + 0.5 * dr * k1s);
            let (k3y, k3s) = f(r + 0.5 * dr, y + 0.5 * dr * k2y, s + 0.5 * dr * k2s);
            let (k4y, k4s) = f(r + dr, y + dr * k3y, s + dr * k3s);
            y += dr * (k1y + 2.0 * (k2y + k3y) + k4y) / 6.0;
            s += dr * (k1s + 2.0 * (k2s + k3s) + k4s) / 6.0;
        }
        RadialState::new(to, y, s)
    }

    /// State at the rim, without recording the path.
    pub fn shoot(&self, m: u32, kprime: f64, init: RadialState) -> Result<RadialState> {
        self.run(m, kprime, init, |_| {})
    }

    pub fn trajectory(&self, m: u32, kprime: f64, init: RadialState) -> Result<Trajectory> {
        let mut states = Vec::with_capacity(self.steps + 1);
        self.run(m, kprime, init, |s| states.push(*s))?;
        Ok(Trajectory {
            states,
            h: self.h,
            m,
            kprime,
        })
    }

    fn run(
        &self,
        m: u32,
        kprime: f64,
        init: RadialState,
        mut visit: impl FnMut(&RadialState),
    ) -> Result<RadialState> {
        let m2 = f64::from(m * m);
        let k2 = kprime * kprime;
        let h = self.h;
        let mut state = RadialState::new(self.r_start, init.value, init.slope);
        if !state.is_finite() {
            return Err(Error::NonFinite { step: 0, kprime });
        }
        visit(&state);
        let f = |j: usize, y: f64, s: f64| rhs(m2, k2, self.rho[j], self.inv_r[j], y, s);
        let reach = STARTUP_REACH * f64::from(m);
        let startup = if m == 0 {
            0.0
        } else {
            STARTUP_FRACTION * self.radius
        };
        for i in 0..self.steps {
            let r = self.radius_at(i);
            let substeps = (reach * h / r).ceil();
            if substeps > 1.0 {
                state = self.substep(m2, k2, state, self.radius_at(i + 1), substeps as usize);
                if !state.is_finite() {
                    return Err(Error::NonFinite {
                        step: i + 1,
                        kprime,
                    });
                }
                visit(&state);
                continue;
            }
            let scheme = if r < startup {
                Scheme::RungeKutta4
            } else {
                self.scheme
            };
            let j = 2 * i;
            let (y, s) = (state.value, state.slope);
            let (dy, ds) = match scheme {
                Scheme::Midpoint => {
                    let (k1y, k1s) = f(j, y, s);
                    f(j + 1, y + 0.5 * h * k1y, s + 0.5 * h * k1s)
                }
                Scheme::RungeKutta4 => {
                    let (k1y, k1s) = f(j, y, s);
                    let (k2y, k2s) = f(j + 1, y + 0.5 * h * k1y, s + 0.5 * h * k1s);
                    let (k3y, k3s) = f(j + 1, y + 0.5 * h * k2y, s + 0.5 * h * k2s);
                    let (k4y, k4s) = f(j + 2, y + h * k3y, s + h * k3s);
                    (
                        (k1y + 2.0 * (k2y + k3y) + k4y) / 6.0,
                        (k1s + 2.0 * (k2s + k3s) + k4s) / 6.0,
                    )
                }
            };
            state = RadialState::new(self.radius_at(i + 1), y + h * dy, s + h * ds);
            if !state.is_finite() {
                return Err(Error::NonFinite {
                    step: i + 1,
                    kprime,
                });
            }
            visit(&state);
        }
        Ok(state)
    }
}

/// Integrates from `r_start` to the rim and records every step.
pub fn integrate(
    m: u32,
    kprime: f64,
    profile: &DensityProfile,
    r_start: f64,
    h: f64,
    init: RadialState,
    scheme: Scheme,
) -> Result<Trajectory> {
    RadialGrid::new(profile, r_start, h, scheme)?.trajectory(m, kprime, init)
}
