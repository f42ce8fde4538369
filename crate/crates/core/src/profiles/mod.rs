//! Radial density models.
//!
//! Densities are dimensionless multiples of the unloaded membrane density,
//! and the tension is fixed at 1. Only frequency ratios are ever reported, so
//! both scales drop out.

mod file;

pub use file::{ProfileFile, RingDef};

use crate::error::{Error, Result};

/// Points sampled at construction to check `rho > 0`.
const VALIDATION_SAMPLES: usize = 10_000;

/// Geometry and fixed material constants of the membrane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembraneSpec {
    radius: f64,
}

impl MembraneSpec {
    pub const BASELINE_DENSITY: f64 = 1.0;
    pub const TENSION: f64 = 1.0;

    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidProfile(format!(
                "radius must be positive, got {radius}"
            )));
        }
        Ok(MembraneSpec { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

impl Default for MembraneSpec {
    fn default() -> Self {
        MembraneSpec { radius: 1.0 }
    }
}

/// One annulus of a step profile: density `density` out to `outer_radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ring {
    pub outer_radius: f64,
    pub density: f64,
}

/// Parameters of the continuous central loading
///
/// ```text
/// rho(r) = max(1, a_log * ln(r0 - r) + b_log)    for r <  patch_radius
/// rho(r) = 1 + c_exp * exp(d_exp * r)            for r >= patch_radius
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogExpParams {
    pub a_log: f64,
    pub b_log: f64,
    pub r0: f64,
    pub patch_radius: f64,
    pub c_exp: f64,
    pub d_exp: f64,
}

impl LogExpParams {
    /// Parameters that reduce to the unloaded membrane.
    pub fn degenerate() -> Self {
        LogExpParams {
            a_log: 0.0,
            b_log: 1.0,
            r0: 0.6,
            patch_radius: 0.5,
            c_exp: 0.0,
            d_exp: 0.0,
        }
    }

    fn patch(&self, r: f64) -> f64 {
        (self.a_log * (self.r0 - r).ln() + self.b_log).max(MembraneSpec::BASELINE_DENSITY)
    }

    fn periphery(&self, r: f64) -> f64 {
        MembraneSpec::BASELINE_DENSITY + self.c_exp * (self.d_exp * r).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Variant {
    Uniform,
    /// Rings ordered from the centre out; the last ends at the rim.
    StepRings(Vec<Ring>),
    ContinuousLogExp(LogExpParams),
    /// `(r, rho)` samples spanning `[0, a]`, linearly interpolated.
    Tabulated(Vec<(f64, f64)>),
}

/// A validated, immutable radial density profile.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile {
    membrane: MembraneSpec,
    variant: Variant,
    scale: f64,
    edge_jump: f64,
}

impl DensityProfile {
    pub fn uniform(membrane: MembraneSpec) -> Self {
        DensityProfile {
            membrane,
            variant: Variant::Uniform,
            scale: 1.0,
            edge_jump: 0.0,
        }
    }

    pub fn step_rings(membrane: MembraneSpec, rings: Vec<Ring>) -> Result<Self> {
        let a = membrane.radius();
        let Some(last) = rings.last() else {
            return Err(Error::InvalidProfile(
                "step profile needs at least one ring".into(),
            ));
        };
        let mut prev = 0.0;
        for ring in &rings {
            if !(ring.outer_radius > prev) {
                return Err(Error::InvalidProfile(format!(
                    "ring radii must be strictly increasing from 0 (got {} after {prev})",
                    ring.outer_radius
                )));
            }
            prev = ring.outer_radius;
        }
        if (last.outer_radius - a).abs() > 1e-12 * a {
            return Err(Error::InvalidProfile(format!(
                "last ring must end at the rim {a}, ends at {}",
                last.outer_radius
            )));
        }
        Self::validated(membrane, Variant::StepRings(rings))
    }

    pub fn continuous(membrane: MembraneSpec, params: LogExpParams) -> Result<Self> {
        let p = &params;
        let finite = [p.a_log, p.b_log, p.r0, p.patch_radius, p.c_exp, p.d_exp]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidProfile("non-finite loading parameter".into()));
        }
        if !(p.patch_radius > 0.0) {
            return Err(Error::InvalidProfile(format!(
                "patch radius must be positive, got {}",
                p.patch_radius
            )));
        }
        if !(p.r0 > p.patch_radius) {
            return Err(Error::InvalidProfile(format!(
                "log origin r0 = {} must exceed the patch radius {}",
                p.r0, p.patch_radius
            )));
        }
        let mut profile = Self::validated(membrane, Variant::ContinuousLogExp(params))?;
        if p.patch_radius < membrane.radius() {
            profile.edge_jump = p.patch(p.patch_radius) - p.periphery(p.patch_radius);
            if profile.edge_jump != 0.0 {
                log::debug!(
                    "continuous profile jumps by {:.6} at r = {}",
                    profile.edge_jump,
                    p.patch_radius
                );
            }
        }
        Ok(profile)
    }

    pub fn tabulated(membrane: MembraneSpec, samples: Vec<(f64, f64)>) -> Result<Self> {
        let a = membrane.radius();
        if samples.len() < 2 {
            return Err(Error::InvalidProfile(
                "table needs at least two samples".into(),
            ));
        }
        if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidProfile(
                "table radii must be strictly increasing".into(),
            ));
        }
        if samples
            .iter()
            .any(|&(_, rho)| !(rho > 0.0) || !rho.is_finite())
        {
            return Err(Error::InvalidProfile(
                "tabulated densities must be positive".into(),
            ));
        }
        let (first, last) = (samples[0].0, samples[samples.len() - 1].0);
        if first != 0.0 || (last - a).abs() > 1e-12 * a {
            return Err(Error::InvalidProfile(format!(
                "table must span [0, {a}], spans [{first}, {last}]"
            )));
        }
        Self::validated(membrane, Variant::Tabulated(samples))
    }

    fn validated(membrane: MembraneSpec, variant: Variant) -> Result<Self> {
        let profile = DensityProfile {
            membrane,
            variant,
            scale: 1.0,
            edge_jump: 0.0,
        };
        profile.check_positive()?;
        Ok(profile)
    }

    fn check_positive(&self) -> Result<()> {
        let a = self.radius();
        for i in 0..VALIDATION_SAMPLES {
            let r = a * i as f64 / (VALIDATION_SAMPLES - 1) as f64;
            let rho = self.density_at(r);
            if !(rho > 0.0) || !rho.is_finite() {
                return Err(Error::InvalidProfile(format!(
                    "density must be positive and finite, got {rho} at r = {r}"
                )));
            }
        }
        Ok(())
    }

    /// The same profile with every density multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(Error::invalid(format!(
                "scale factor must be positive, got {factor}"
            )));
        }
        let mut out = self.clone();
        out.scale *= factor;
        Ok(out)
    }

    pub fn membrane(&self) -> MembraneSpec {
        self.membrane
    }

    pub fn radius(&self) -> f64 {
        self.membrane.radius()
    }

    pub fn variant(&self) -> &Variant {
        &self.variant
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `rho(patch_radius-) - rho(patch_radius)` for the continuous loading; zero otherwise.
    pub fn edge_jump(&self) -> f64 {
        self.edge_jump * self.scale
    }

    /// Density at radius `r`, which must lie in `[0, a]`.
    pub fn density(&self, r: f64) -> Result<f64> {
        let a = self.radius();
        if !(0.0..=a).contains(&r) {
            return Err(Error::invalid(format!("radius {r} outside [0, {a}]")));
        }
        Ok(self.density_at(r))
    }

    /// Unchecked evaluation; radii past the rim take the outermost value.
    pub(crate) fn density_at(&self, r: f64) -> f64 {
        let base = match &self.variant {
            Variant::Uniform => MembraneSpec::BASELINE_DENSITY,
            Variant::StepRings(rings) => {
                rings
                    .iter()
                    .find(|ring| r <= ring.outer_radius)
                    .unwrap_or(&rings[rings.len() - 1])
                    .density
            }
            Variant::ContinuousLogExp(p) => {
                if r < p.patch_radius {
                    p.patch(r)
                } else {
                    p.periphery(r)
                }
            }
            Variant::Tabulated(samples) => interpolate(samples, r),
        };
        base * self.scale
    }

    /// `count` evenly spaced `(r, rho(r))` pairs over `[0, a]`, endpoints included.
    pub fn samples(&self, count: usize) -> Result<Vec<(f64, f64)>> {
        if count < 2 {
            return Err(Error::invalid("need at least two samples"));
        }
        let a = self.radius();
        let last = (count - 1) as f64;
        Ok((0..count)
            .map(|i| {
                let r = if i + 1 == count {
                    a
                } else {
                    a * i as f64 / last
                };
                (r, self.density_at(r))
            })
            .collect())
    }
}

fn interpolate(samples: &[(f64, f64)], r: f64) -> f64 {
    let idx = samples.partition_point(|&(x, _)| x <= r);
    if idx == 0 {
        return samples[0].1;
    }
    if idx == samples.len() {
        return samples[samples.len() - 1].1;
    }
    let (x0, y0) = samples[idx - 1];
    let (x1, y1) = samples[idx];
    y0 + (y1 - y0) * (r - x0) / (x1 - x0)
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 3] = ["uniform", "default-rings", "default-continuous"];

const DEFAULT_RINGS: &str = include_str!("../../profiles/default-rings.toml");
const DEFAULT_CONTINUOUS: &str = include_str!("../../profiles/default-continuous.toml");

/// The unloaded membrane or one of the shipped fitted loadings.
pub fn builtin(name: &str) -> Option<DensityProfile> {
    let text = match name {
        "uniform" => return Some(DensityProfile::uniform(MembraneSpec::default())),
        "default-rings" => DEFAULT_RINGS,
        "default-continuous" => DEFAULT_CONTINUOUS,
        _ => return None,
    };
    Some(DensityProfile::from_toml_str(text).expect("shipped profiles are valid"))
}

/// Free function form of [`DensityProfile::samples`].
pub fn profile_samples(profile: &DensityProfile, count: usize) -> Result<Vec<(f64, f64)>> {
    profile.samples(count)
}
