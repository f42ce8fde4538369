//! Eigenvalue search by shooting.
//!
//! For a fixed angular order `m` the rim value `R(a; k')` is sampled on a
//! grid of trial `k'`, every sign change is bisected, and the `c`-th root
//! (counting from zero) is accepted as mode `(m, c)` once its trajectory is
//! seen to cross zero exactly `c` times inside the membrane. A mismatch means
//! two roots shared a scan cell; the scan step is halved and the range
//! rescanned.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ode::{RadialGrid, RadialState, Scheme, Trajectory};
use crate::par::Execution;
use crate::profiles::DensityProfile;
use crate::specfun::{bessel_series, bessel_series_prime};

/// Terms of the Bessel series used for the start-up data.
const INITIAL_SERIES_TERMS: usize = 4;
pub const MAX_ORDER: u32 = 10;
pub const MAX_CIRCLES: u32 = 5;

/// `(nodal diameters, interior nodal circles)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeId {
    pub diameters: u32,
    pub circles: u32,
}

impl ModeId {
    pub const fn new(diameters: u32, circles: u32) -> Self {
        ModeId { diameters, circles }
    }
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.diameters, self.circles)
    }
}

impl FromStr for ModeId {
    type Err = Error;

    /// Accepts `m,c` or `(m,c)`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("mode must look like `m,c`, got `{s}`"));
        let inner = s.trim();
        let inner = inner
            .strip_prefix('(')
            .and_then(|t| t.strip_suffix(')'))
            .unwrap_or(inner);
        let (m, c) = inner.split_once(',').ok_or_else(bad)?;
        Ok(ModeId {
            diameters: m.trim().parse().map_err(|_| bad())?,
            circles: c.trim().parse().map_err(|_| bad())?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenResult {
    pub mode: ModeId,
    /// Dimensionless eigenvalue `k' a`.
    pub kappa: f64,
    pub kprime: f64,
    /// Interior sign changes of the accepted trajectory.
    pub nodes: usize,
    /// `R(a)` at the accepted root.
    pub residual: f64,
    /// `max |R|` along the accepted trajectory.
    pub peak: f64,
}

/// Search settings. Radii and wavenumbers are in units of the membrane radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    pub r_start: f64,
    pub step: f64,
    pub scheme: Scheme,
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub kappa_step: f64,
    /// Bracket width at which bisection stops.
    pub tolerance: f64,
    /// Scan-step halvings allowed after a node-count mismatch.
    pub max_refinements: u32,
    pub execution: Execution,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            r_start: 1e-4,
            step: 1e-4,
            scheme: Scheme::Midpoint,
            kappa_min: 0.1,
            kappa_max: 40.0,
            kappa_step: 0.05,
            tolerance: 1e-11,
            max_refinements: 3,
            execution: Execution::default(),
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be positive, got {v}")))
            }
        };
        positive("start radius", self.r_start)?;
        positive("step", self.step)?;
        positive("scan start", self.kappa_min)?;
        positive("scan step", self.kappa_step)?;
        positive("tolerance", self.tolerance)?;
        if !(self.r_start < 1.0) {
            return Err(Error::invalid("start radius must be below the rim"));
        }
        if self.step > (1.0 - self.r_start) / 100.0 * (1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "step {} is coarser than (1 - r_start)/100",
                self.step
            )));
        }
        if !(self.kappa_max > self.kappa_min) || !self.kappa_max.is_finite() {
            return Err(Error::invalid("scan range must be increasing"));
        }
        if self.kappa_step > self.kappa_max - self.kappa_min {
            return Err(Error::invalid("scan step exceeds the scan range"));
        }
        Ok(())
    }
}

/// Bessel-like start-up data at `r_start` with wavenumber `k' sqrt(rho(0))`.
pub fn initial_conditions(
    m: u32,
    kprime: f64,
    profile: &DensityProfile,
    r_start: f64,
) -> Result<RadialState> {
    if !(r_start > 0.0) {
        return Err(Error::invalid(format!(
            "start radius must be positive, got {r_start}"
        )));
    }
    let rho0 = profile.density(0.0)?;
    if !(rho0 > 0.0) {
        return Err(Error::InvalidProfile(format!("rho(0) = {rho0}")));
    }
    let k0 = kprime * rho0.sqrt();
    let x = (k0 * r_start).abs();
    Ok(RadialState::new(
        r_start,
        bessel_series(m, x, INITIAL_SERIES_TERMS)?,
        k0 * bessel_series_prime(m, x, INITIAL_SERIES_TERMS)?,
    ))
}

/// Interior sign changes of `R`, ignoring any crossing within two steps of the rim.
pub fn count_nodes(trajectory: &Trajectory) -> usize {
    let rim = trajectory.last().r;
    let cutoff = rim - 2.0 * trajectory.h * (1.0 + 1e-9);
    let mut nodes = 0;
    let mut sign = 0.0f64;
    for s in &trajectory.states {
        if s.value == 0.0 {
            continue;
        }
        let here = s.value.signum();
        if sign != 0.0 && here != sign && s.r < cutoff {
            nodes += 1;
        }
        sign = here;
    }
    nodes
}

/// Shooting solver bound to one profile and one radial grid.
#[derive(Debug, Clone)]
pub struct Shooter<'a> {
    profile: &'a DensityProfile,
    grid: RadialGrid,
    config: SearchConfig,
}

impl<'a> Shooter<'a> {
    pub fn new(profile: &'a DensityProfile, config: SearchConfig) -> Result<Self> {
        config.validate()?;
        let a = profile.radius();
        let grid = RadialGrid::new(profile, config.r_start * a, config.step * a, config.scheme)?;
        Ok(Shooter {
            profile,
            grid,
            config,
        })
    }

    pub fn config(&self) -> &SearchConfig {
        &self.config
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn initial_conditions(&self, m: u32, kprime: f64) -> Result<RadialState> {
        initial_conditions(m, kprime, self.profile, self.grid.r_start())
    }

    /// `R(a)` for trial `k'`.
    pub fn boundary_value(&self, m: u32, kprime: f64) -> Result<f64> {
        if !(kprime > 0.0) {
            return Err(Error::invalid(format!("k' must be positive, got {kprime}")));
        }
        let init = self.initial_conditions(m, kprime)?;
        Ok(self.grid.shoot(m, kprime, init)?.value)
    }

    pub fn trajectory(&self, m: u32, kprime: f64) -> Result<Trajectory> {
        let init = self.initial_conditions(m, kprime)?;
        self.grid.trajectory(m, kprime, init)
    }

    /// Modes `(m, 0)` through `(m, count - 1)`.
    pub fn roots(&self, m: u32, count: usize) -> Result<Vec<EigenResult>> {
        let mut kappa_step = self.config.kappa_step;
        let mut refinements = 0;
        loop {
            let found = self.scan(m, count, kappa_step)?;
            match found.iter().find(|r| r.nodes != r.mode.circles as usize) {
                None => return Ok(found),
                Some(bad) if refinements >= self.config.max_refinements => {
                    return Err(Error::NodeCountMismatch {
                        mode: bad.mode,
                        observed: bad.nodes,
                        refinements,
                    })
                }
                Some(bad) => {
                    log::debug!(
                        "mode {} shows {} nodes; rescanning with step {}",
                        bad.mode,
                        bad.nodes,
                        kappa_step / 2.0
                    );
                    kappa_step /= 2.0;
                    refinements += 1;
                }
            }
        }
    }

    pub fn find(&self, mode: ModeId) -> Result<EigenResult> {
        check_mode(mode)?;
        let roots = self
            .roots(mode.diameters, mode.circles as usize + 1)
            .map_err(|e| e.at_mode(mode))?;
        Ok(roots[mode.circles as usize])
    }

    fn scan(&self, m: u32, count: usize, kappa_step: f64) -> Result<Vec<EigenResult>> {
        let a = self.profile.radius();
        let cfg = &self.config;
        let points = ((cfg.kappa_max - cfg.kappa_min) / kappa_step).floor() as usize + 1;
        let width = cfg.execution.batch_width();
        let value = |kappa: f64| self.boundary_value(m, kappa / a);

        let mut brackets: Vec<(f64, f64, f64)> = Vec::with_capacity(count);
        let mut prev: Option<(f64, f64)> = None;
        let mut next = 0;
        'scan: while next < points && brackets.len() < count {
            let batch: Vec<f64> = (next..(next + width).min(points))
                .map(|i| cfg.kappa_min + i as f64 * kappa_step)
                .collect();
            next += batch.len();
            let values = cfg.execution.map(&batch, |&k| value(k));
            for (&kappa, v) in batch.iter().zip(values) {
                let v = v?;
                if v == 0.0 {
                    brackets.push((kappa, kappa, v));
                    prev = None;
                } else {
                    if let Some((k0, v0)) = prev {
                        if (v < 0.0) != (v0 < 0.0) {
                            brackets.push((k0, kappa, v0));
                        }
                    }
                    prev = Some((kappa, v));
                }
                if brackets.len() == count {
                    break 'scan;
                }
            }
        }
        if brackets.len() < count {
            return Err(Error::NotEnoughRoots {
                order: m,
                wanted: count,
                found: brackets.len(),
                kappa_max: cfg.kappa_max,
            });
        }

        let refined = cfg.execution.map(&brackets, |&(lo, hi, f_lo)| {
            let kappa = self.bisect(&value, lo, hi, f_lo)?;
            let trajectory = self.trajectory(m, kappa / a)?;
            Ok((kappa, trajectory))
        });
        refined
            .into_iter()
            .enumerate()
            .map(|(c, r)| {
                let (kappa, trajectory): (f64, Trajectory) = r?;
                Ok(EigenResult {
                    mode: ModeId::new(m, c as u32),
                    kappa,
                    kprime: kappa / a,
                    nodes: count_nodes(&trajectory),
                    residual: trajectory.last().value,
                    peak: trajectory.max_abs_value(),
                })
            })
            .collect()
    }

    fn bisect(
        &self,
        f: &impl Fn(f64) -> Result<f64>,
        mut lo: f64,
        mut hi: f64,
        mut f_lo: f64,
    ) -> Result<f64> {
        while hi - lo > self.config.tolerance {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let f_mid = f(mid)?;
            if f_mid == 0.0 {
                return Ok(mid);
            }
            if (f_mid < 0.0) == (f_lo < 0.0) {
                lo = mid;
                f_lo = f_mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Results for `modes`, in the order given.
    pub fn modes(&self, modes: &[ModeId]) -> Result<Vec<EigenResult>> {
        for &mode in modes {
            check_mode(mode)?;
        }
        let mut orders: Vec<(u32, u32)> = Vec::new();
        for mode in modes {
            match orders.iter_mut().find(|(m, _)| *m == mode.diameters) {
                Some((_, c)) => *c = (*c).max(mode.circles),
                None => orders.push((mode.diameters, mode.circles)),
            }
        }
        orders.sort_unstable();
        let per_order = self.config.execution.map(&orders, |&(m, c_max)| {
            self.roots(m, c_max as usize + 1)
                .map_err(|e| e.at_mode(ModeId::new(m, c_max)))
        });
        let mut all = Vec::new();
        for r in per_order {
            all.extend(r?);
        }
        Ok(modes
            .iter()
            .map(|mode| {
                *all.iter()
                    .find(|r| r.mode == *mode)
                    .expect("every requested order was solved through its largest circle count")
            })
            .collect())
    }

    /// All modes with `m <= m_max`, `c <= c_max`, sorted by `kappa`.
    pub fn spectrum(&self, m_max: u32, c_max: u32) -> Result<Vec<EigenResult>> {
        check_mode(ModeId::new(m_max, c_max))?;
        let modes: Vec<ModeId> = (0..=m_max)
            .flat_map(|m| (0..=c_max).map(move |c| ModeId::new(m, c)))
            .collect();
        let mut out = self.modes(&modes)?;
        sort_by_kappa(&mut out);
        Ok(out)
    }
}

pub(crate) fn sort_by_kappa(results: &mut [EigenResult]) {
    results.sort_by(|a, b| a.kappa.total_cmp(&b.kappa).then(a.mode.cmp(&b.mode)));
}

fn check_mode(mode: ModeId) -> Result<()> {
    if mode.diameters > MAX_ORDER || mode.circles > MAX_CIRCLES {
        return Err(Error::invalid(format!(
            "mode {mode} outside m <= {MAX_ORDER}, c <= {MAX_CIRCLES}"
        )));
    }
    Ok(())
}

/// `R(a)` for trial `k'` with a fresh solver.
pub fn boundary_value(
    m: u32,
    kprime: f64,
    profile: &DensityProfile,
    config: &SearchConfig,
) -> Result<f64> {
    Shooter::new(profile, *config)?.boundary_value(m, kprime)
}

pub fn find_eigenvalue(
    mode: ModeId,
    profile: &DensityProfile,
    config: &SearchConfig,
) -> Result<EigenResult> {
    Shooter::new(profile, *config)?.find(mode)
}

pub fn eigen_spectrum(
    profile: &DensityProfile,
    m_max: u32,
    c_max: u32,
    config: &SearchConfig,
) -> Result<Vec<EigenResult>> {
    Shooter::new(profile, *config)?.spectrum(m_max, c_max)
}
