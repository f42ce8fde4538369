//! Frequency-ratio tables and harmonicity measures.
//!
//! Frequencies are proportional to `kappa`, so every ratio here is a ratio of
//! eigenvalues. Two normalizations are in common use: the fundamental `(0,0)`
//! set to 1, or the first diameter mode `(1,0)` set to 2 so that a harmonic
//! series reads 2, 3, 4, ... from there on.

use crate::error::{Error, Result};
use crate::shooting::{sort_by_kappa, EigenResult, ModeId};

pub const FUNDAMENTAL: ModeId = ModeId::new(0, 0);
pub const FIRST_DIAMETER: ModeId = ModeId::new(1, 0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioEntry {
    pub mode: ModeId,
    pub kappa: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioTable {
    /// Sorted by `kappa`.
    pub entries: Vec<RatioEntry>,
    pub base: ModeId,
    pub base_value: f64,
}

impl RatioTable {
    pub fn get(&self, mode: ModeId) -> Option<&RatioEntry> {
        self.entries.iter().find(|e| e.mode == mode)
    }

    pub fn ratio(&self, mode: ModeId) -> Option<f64> {
        self.get(mode).map(|e| e.ratio)
    }
}

/// Normalizes a spectrum so that `base` maps to `base_value`.
pub fn ratio_table(spectrum: &[EigenResult], base: ModeId, base_value: f64) -> Result<RatioTable> {
    if !(base_value > 0.0) || !base_value.is_finite() {
        return Err(Error::invalid(format!(
            "base value must be positive, got {base_value}"
        )));
    }
    let base_kappa = spectrum
        .iter()
        .find(|r| r.mode == base)
        .ok_or(Error::MissingBaseMode(base))?
        .kappa;
    let mut sorted = spectrum.to_vec();
    sort_by_kappa(&mut sorted);
    let entries = sorted
        .iter()
        .map(|r| RatioEntry {
            mode: r.mode,
            kappa: r.kappa,
            ratio: if r.mode == base {
                base_value
            } else {
                base_value * (r.kappa / base_kappa)
            },
        })
        .collect();
    Ok(RatioTable {
        entries,
        base,
        base_value,
    })
}

/// Distance of one ratio from a reference value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deviation {
    pub mode: ModeId,
    pub ratio: f64,
    pub reference: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicityReport {
    pub deviations: Vec<Deviation>,
    pub rms: f64,
    pub max: f64,
}

impl HarmonicityReport {
    fn from_deviations(deviations: Vec<Deviation>) -> Self {
        let n = deviations.len().max(1) as f64;
        let rms = (deviations
            .iter()
            .map(|d| d.deviation * d.deviation)
            .sum::<f64>()
            / n)
            .sqrt();
        let max = deviations
            .iter()
            .fold(0.0, |acc: f64, d| acc.max(d.deviation));
        HarmonicityReport {
            deviations,
            rms,
            max,
        }
    }
}

/// Deviation of each selected ratio from its nearest integer.
///
/// With `exclude_base` the base mode is dropped from the subset, since its
/// ratio is fixed by construction.
pub fn harmonicity(
    table: &RatioTable,
    modes: &[ModeId],
    exclude_base: bool,
) -> Result<HarmonicityReport> {
    let selected: Vec<ModeId> = modes
        .iter()
        .copied()
        .filter(|&m| !(exclude_base && m == table.base))
        .collect();
    if selected.is_empty() {
        return Err(Error::invalid("harmonicity needs at least one mode"));
    }
    let deviations = selected
        .iter()
        .map(|&mode| {
            let ratio = table
                .ratio(mode)
                .ok_or_else(|| Error::invalid(format!("mode {mode} is not in the table")))?;
            let nearest = ratio.round();
            Ok(Deviation {
                mode,
                ratio,
                reference: nearest,
                deviation: (ratio - nearest).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HarmonicityReport::from_deviations(deviations))
}

/// Deviation of each ratio from an explicit target.
pub fn target_deviations(
    table: &RatioTable,
    targets: &[(ModeId, f64)],
) -> Result<HarmonicityReport> {
    if targets.is_empty() {
        return Err(Error::invalid("need at least one target"));
    }
    let deviations = targets
        .iter()
        .map(|&(mode, target)| {
            let ratio = table
                .ratio(mode)
                .ok_or_else(|| Error::invalid(format!("mode {mode} is not in the table")))?;
            Ok(Deviation {
                mode,
                ratio,
                reference: target,
                deviation: (ratio - target).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HarmonicityReport::from_deviations(deviations))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Audibility {
    Inaudible,
    Marginal,
    Audible,
}

impl std::fmt::Display for Audibility {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Audibility::Inaudible => "inaudible",
            Audibility::Marginal => "marginal",
            Audibility::Audible => "audible",
        })
    }
}

/// Smallest frequency difference, in Hz, a listener can resolve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub lower_hz: f64,
    pub upper_hz: f64,
}

impl Default for Threshold {
    fn default() -> Self {
        Threshold {
            lower_hz: 6.0,
            upper_hz: 7.0,
        }
    }
}

impl Threshold {
    pub fn classify(&self, hz: f64) -> Audibility {
        if hz > self.upper_hz {
            Audibility::Audible
        } else if hz >= self.lower_hz {
            Audibility::Marginal
        } else {
            Audibility::Inaudible
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AudibleDeviation {
    pub mode: ModeId,
    pub deviation: f64,
    pub hz: f64,
    pub class: Audibility,
}

/// Converts a ratio deviation to Hz at the given fundamental and classifies it.
pub fn deviation_hz(
    deviation: f64,
    fundamental_hz: f64,
    threshold: &Threshold,
) -> (f64, Audibility) {
    let hz = deviation * fundamental_hz;
    (hz, threshold.classify(hz))
}

pub fn audibility(
    report: &HarmonicityReport,
    fundamental_hz: f64,
    threshold: &Threshold,
) -> Result<Vec<AudibleDeviation>> {
    if !(fundamental_hz > 0.0) || !fundamental_hz.is_finite() {
        return Err(Error::invalid(format!(
            "fundamental must be positive, got {fundamental_hz}"
        )));
    }
    if !(threshold.lower_hz <= threshold.upper_hz) {
        return Err(Error::invalid("threshold range is inverted"));
    }
    Ok(report
        .deviations
        .iter()
        .map(|d| {
            let (hz, class) = deviation_hz(d.deviation, fundamental_hz, threshold);
            AudibleDeviation {
                mode: d.mode,
                deviation: d.deviation,
                hz,
                class,
            }
        })
        .collect())
}
