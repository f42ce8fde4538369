//! TOML form of a density profile.
//!
//! ```toml
//! variant = "continuous-log-exp"   # uniform | step-rings | continuous-log-exp | tabulated
//! radius = 1.0                     # optional, default 1
//! scale = 1.0                      # optional density multiplier, default 1
//! a_log = 8.5
//! b_log = 25.4
//! r0 = 0.67
//! patch_radius = 0.57
//! c_exp = 7.5
//! d_exp = -17.7
//! ```
//!
//! Step profiles list their rings from the centre out:
//!
//! ```toml
//! variant = "step-rings"
//! rings = [
//!     { outer_radius = 0.3, density = 13.5 },
//!     { outer_radius = 0.5, density = 10.4 },
//!     { outer_radius = 1.0, density = 1.6 },
//! ]
//! ```
//!
//! Tabulated profiles give `samples = [[r, rho], ...]` spanning `[0, radius]`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DensityProfile, LogExpParams, MembraneSpec, Ring, Variant};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingDef {
    pub outer_radius: f64,
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum Shape {
    Uniform,
    StepRings {
        rings: Vec<RingDef>,
    },
    ContinuousLogExp {
        a_log: f64,
        b_log: f64,
        r0: f64,
        patch_radius: f64,
        c_exp: f64,
        d_exp: f64,
    },
    Tabulated {
        samples: Vec<[f64; 2]>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileFile {
    #[serde(flatten)]
    pub shape: Shape,
    #[serde(default = "unit")]
    pub radius: f64,
    #[serde(default = "unit", skip_serializing_if = "is_unit")]
    pub scale: f64,
}

fn unit() -> f64 {
    1.0
}

fn is_unit(x: &f64) -> bool {
    *x == 1.0
}

impl ProfileFile {
    pub fn build(&self) -> Result<DensityProfile> {
        let membrane = MembraneSpec::new(self.radius)?;
        let profile = match &self.shape {
            Shape::Uniform => DensityProfile::uniform(membrane),
            Shape::StepRings { rings } => DensityProfile::step_rings(
                membrane,
                rings
                    .iter()
                    .map(|r| Ring {
                        outer_radius: r.outer_radius,
                        density: r.density,
                    })
                    .collect(),
            )?,
            &Shape::ContinuousLogExp {
                a_log,
                b_log,
                r0,
                patch_radius,
                c_exp,
                d_exp,
            } => DensityProfile::continuous(
                membrane,
                LogExpParams {
                    a_log,
                    b_log,
                    r0,
                    patch_radius,
                    c_exp,
                    d_exp,
                },
            )?,
            Shape::Tabulated { samples } => DensityProfile::tabulated(
                membrane,
                samples.iter().map(|&[r, rho]| (r, rho)).collect(),
            )?,
        };
        if self.scale == 1.0 {
            Ok(profile)
        } else {
            profile.scaled(self.scale)
        }
    }
}

impl From<&DensityProfile> for ProfileFile {
    fn from(p: &DensityProfile) -> Self {
        let shape = match p.variant() {
            Variant::Uniform => Shape::Uniform,
            Variant::StepRings(rings) => Shape::StepRings {
                rings: rings
                    .iter()
                    .map(|r| RingDef {
                        outer_radius: r.outer_radius,
                        density: r.density,
                    })
                    .collect(),
            },
            Variant::ContinuousLogExp(q) => Shape::ContinuousLogExp {
                a_log: q.a_log,
                b_log: q.b_log,
                r0: q.r0,
                patch_radius: q.patch_radius,
                c_exp: q.c_exp,
                d_exp: q.d_exp,
            },
            Variant::Tabulated(samples) => Shape::Tabulated {
                samples: samples.iter().map(|&(r, rho)| [r, rho]).collect(),
            },
        };
        ProfileFile {
            shape,
            radius: p.radius(),
            scale: p.scale(),
        }
    }
}

impl DensityProfile {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ProfileFile =
            toml::from_str(text).map_err(|e| Error::Format(format!("profile: {e}")))?;
        file.build()
    }

    pub fn to_toml_string(&self) -> String {
        let body = toml::to_string(&ProfileFile::from(self))
            .expect("profile fields are plain numbers and strings");
        format!("# drumhead density profile\n{body}")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
            e => e,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml_string()).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_each_variant() {
        let u = DensityProfile::from_toml_str("variant = \"uniform\"").unwrap();
        assert_eq!(u.variant(), &Variant::Uniform);
        assert_eq!(u.radius(), 1.0);

        let rings = DensityProfile::from_toml_str(
            r#"
            variant = "step-rings"
            radius = 2.0
            rings = [
                { outer_radius = 0.8, density = 5.0 },
                { outer_radius = 2.0, density = 1.0 },
            ]
            "#,
        )
        .unwrap();
        assert_eq!(rings.density(0.5).unwrap(), 5.0);
        assert_eq!(rings.density(1.5).unwrap(), 1.0);

        let cont = DensityProfile::from_toml_str(
            r#"
            variant = "continuous-log-exp"
            a_log = 0.0
            b_log = 1.0
            r0 = 0.7
            patch_radius = 0.6
            c_exp = 0.0
            d_exp = 0.0
            "#,
        )
        .unwrap();
        assert_eq!(cont.density(0.3).unwrap(), 1.0);

        let tab = DensityProfile::from_toml_str(
            "variant = \"tabulated\"\nsamples = [[0.0, 2.0], [1.0, 1.0]]\nscale = 2.0",
        )
        .unwrap();
        assert_eq!(tab.density(0.5).unwrap(), 3.0);
    }

    #[test]
    fn round_trips_through_text() {
        let p = DensityProfile::from_toml_str(
            "variant = \"step-rings\"\nrings = [{ outer_radius = 0.3, density = 13.561670269648532 }, { outer_radius = 1.0, density = 1.1 }]",
        )
        .unwrap();
        let again = DensityProfile::from_toml_str(&p.to_toml_string()).unwrap();
        assert_eq!(p, again);
    }

    #[test]
    fn rejects_unknown_variant_and_bad_values() {
        assert!(matches!(
            DensityProfile::from_toml_str("variant = \"spiral\""),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            DensityProfile::from_toml_str("variant = \"uniform\"\nradius = -1.0"),
            Err(Error::InvalidProfile(_))
        ));
    }
}
