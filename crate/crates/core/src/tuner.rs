//! Fitting loading parameters to a harmonic target series.
//!
//! A [`TuneProblem`] couples a profile template with box bounds on its free
//! parameters and a set of target ratios. The objective is the RMS distance
//! of the computed ratios (base `(1,0) -> 2`) from their targets; the
//! fundamental is left free. The search is Nelder–Mead with every trial
//! point clipped into the box, and the bounds are chosen so that every point
//! in the box is a valid profile.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profiles::{DensityProfile, LogExpParams, MembraneSpec, Ring};
use crate::shooting::{ModeId, SearchConfig, Shooter};
use crate::spectrum::{ratio_table, FIRST_DIAMETER, FUNDAMENTAL};

/// Objective value reported when the spectrum cannot be computed.
pub const FAILURE_PENALTY: f64 = 1e3;
pub const MIN_BUDGET: usize = 50;

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;
const F_TOL: f64 = 1e-10;
const X_TOL: f64 = 1e-9;

/// Harmonic targets above the fundamental, with `(1,0)` pinned at 2.
pub const HARMONIC_TARGETS: [(ModeId, f64); 8] = [
    (ModeId::new(1, 0), 2.0),
    (ModeId::new(2, 0), 3.0),
    (ModeId::new(0, 1), 3.0),
    (ModeId::new(3, 0), 4.0),
    (ModeId::new(1, 1), 4.0),
    (ModeId::new(4, 0), 5.0),
    (ModeId::new(2, 1), 5.0),
    (ModeId::new(0, 2), 5.0),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Template {
    /// Free parameters `a_log, b_log, patch_radius, log_gap, c_exp, d_exp`
    /// with `r0 = patch_radius + log_gap`.
    ContinuousLogExp,
    /// `rings - 1` widths followed by `rings` densities, centre outwards.
    StepRings { rings: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub start: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Parameter {
    fn new(name: impl Into<String>, start: f64, lower: f64, upper: f64) -> Self {
        Parameter {
            name: name.into(),
            start,
            lower,
            upper,
        }
    }
}

impl Template {
    pub fn default_parameters(&self, radius: f64) -> Vec<Parameter> {
        match *self {
            Template::ContinuousLogExp => vec![
                Parameter::new("a_log", 0.0, 0.0, 30.0),
                Parameter::new("b_log", 1.0, 1.0, 80.0),
                Parameter::new("patch_radius", 0.5 * radius, 0.1 * radius, 0.9 * radius),
                Parameter::new("log_gap", 0.1 * radius, 0.005 * radius, 0.5 * radius),
                Parameter::new("c_exp", 0.0, 0.0, 10.0),
                Parameter::new("d_exp", 0.0, -20.0 / radius, 5.0 / radius),
            ],
            Template::StepRings { rings } => {
                let inner = rings.saturating_sub(1).max(1) as f64;
                let width_max = 0.9 * radius / inner;
                let mut out: Vec<Parameter> = (1..rings)
                    .map(|i| {
                        Parameter::new(
                            format!("width_{i}"),
                            0.5 * width_max,
                            0.02 * radius,
                            width_max,
                        )
                    })
                    .collect();
                out.extend((1..=rings).map(|i| {
                    let upper = if i == rings { 10.0 } else { 40.0 };
                    Parameter::new(format!("density_{i}"), 1.0, 1.0, upper)
                }));
                out
            }
        }
    }

    pub fn parameter_names(&self) -> Vec<String> {
        self.default_parameters(1.0)
            .into_iter()
            .map(|p| p.name)
            .collect()
    }

    pub fn build(&self, radius: f64, params: &[f64]) -> Result<DensityProfile> {
        let membrane = MembraneSpec::new(radius)?;
        let expected = self.parameter_names().len();
        if params.len() != expected {
            return Err(Error::invalid(format!(
                "template takes {expected} parameters, got {}",
                params.len()
            )));
        }
        match *self {
            Template::ContinuousLogExp => {
                let [a_log, b_log, patch_radius, log_gap, c_exp, d_exp] =
                    params.try_into().expect("length checked");
                DensityProfile::continuous(
                    membrane,
                    LogExpParams {
                        a_log,
                        b_log,
                        r0: patch_radius + log_gap,
                        patch_radius,
                        c_exp,
                        d_exp,
                    },
                )
            }
            Template::StepRings { rings } => {
                let (widths, densities) = params.split_at(rings - 1);
                let mut outer = 0.0;
                let mut out = Vec::with_capacity(rings);
                for (i, &density) in densities.iter().enumerate() {
                    outer = if i + 1 == rings {
                        radius
                    } else {
                        outer + widths[i]
                    };
                    out.push(Ring {
                        outer_radius: outer,
                        density,
                    });
                }
                DensityProfile::step_rings(membrane, out)
            }
        }
    }

    /// Checks that every point of the box builds a valid profile.
    fn check_bounds(&self, radius: f64, params: &[Parameter]) -> Result<()> {
        let lower = |name: &str| params.iter().find(|p| p.name == name).map(|p| p.lower);
        let fail = |msg: String| Err(Error::invalid(msg));
        match *self {
            Template::ContinuousLogExp => {
                if lower("patch_radius").is_some_and(|v| v <= 0.0) {
                    return fail("patch_radius lower bound must be positive".into());
                }
                if lower("log_gap").is_some_and(|v| v <= 0.0) {
                    return fail("log_gap lower bound must be positive".into());
                }
                if lower("c_exp").is_some_and(|v| v < 0.0) {
                    return fail("c_exp lower bound must be non-negative".into());
                }
            }
            Template::StepRings { rings } => {
                let widths = &params[..rings - 1];
                if widths.iter().any(|p| p.lower <= 0.0) {
                    return fail("ring widths must be bounded away from zero".into());
                }
                let widest: f64 = widths.iter().map(|p| p.upper).sum();
                if widest >= radius {
                    return fail(format!(
                        "ring width upper bounds sum to {widest}, reaching the rim {radius}"
                    ));
                }
                if params[rings - 1..].iter().any(|p| p.lower <= 0.0) {
                    return fail("ring densities must be bounded away from zero".into());
                }
            }
        }
        Ok(())
    }
}

/// Spectrum summary at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub objective: f64,
    pub fundamental: f64,
    /// `(mode, ratio, target)` in target order.
    pub ratios: Vec<(ModeId, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneProblem {
    pub template: Template,
    pub radius: f64,
    pub parameters: Vec<Parameter>,
    pub targets: Vec<(ModeId, f64)>,
    pub base: ModeId,
    pub base_value: f64,
    pub budget: usize,
    /// Initial simplex edge as a fraction of each parameter's range.
    pub initial_step: f64,
    pub search: SearchConfig,
}

impl TuneProblem {
    pub fn new(template: Template) -> Self {
        TuneProblem {
            template,
            radius: 1.0,
            parameters: template.default_parameters(1.0),
            targets: HARMONIC_TARGETS.to_vec(),
            base: FIRST_DIAMETER,
            base_value: 2.0,
            budget: 500,
            initial_step: 0.1,
            search: SearchConfig {
                step: 5e-4,
                ..SearchConfig::default()
            },
        }
    }

    pub fn starts(&self) -> Vec<f64> {
        self.parameters.iter().map(|p| p.start).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if let Template::StepRings { rings } = self.template {
            if rings < 2 {
                return Err(Error::invalid("step template needs at least two rings"));
            }
        }
        let names = self.template.parameter_names();
        let given: Vec<&str> = self.parameters.iter().map(|p| p.name.as_str()).collect();
        if given != names.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(Error::invalid(format!(
                "parameters must be {names:?} in order, got {given:?}"
            )));
        }
        for p in &self.parameters {
            let finite = p.lower.is_finite() && p.upper.is_finite() && p.start.is_finite();
            if !finite || p.lower > p.upper || p.start < p.lower || p.start > p.upper {
                return Err(Error::invalid(format!(
                    "parameter {} needs lower <= start <= upper, got {} <= {} <= {}",
                    p.name, p.lower, p.start, p.upper
                )));
            }
        }
        self.template.check_bounds(self.radius, &self.parameters)?;
        if self.targets.is_empty() {
            return Err(Error::invalid("tune problem needs at least one target"));
        }
        if self.budget < MIN_BUDGET {
            return Err(Error::invalid(format!(
                "budget must be at least {MIN_BUDGET} evaluations, got {}",
                self.budget
            )));
        }
        if !(self.initial_step > 0.0 && self.initial_step <= 1.0) {
            return Err(Error::invalid("initial simplex step must lie in (0, 1]"));
        }
        if !(self.base_value > 0.0) {
            return Err(Error::invalid("base value must be positive"));
        }
        self.search.validate()
    }

    pub fn build(&self, params: &[f64]) -> Result<DensityProfile> {
        self.template.build(self.radius, params)
    }

    fn modes(&self) -> Vec<ModeId> {
        let mut modes = vec![FUNDAMENTAL, self.base];
        for &(mode, _) in &self.targets {
            if !modes.contains(&mode) {
                modes.push(mode);
            }
        }
        modes
    }

    /// Full evaluation at `params`; errors if the spectrum cannot be computed.
    pub fn evaluate(&self, params: &[f64]) -> Result<Evaluation> {
        let profile = self.build(params)?;
        let shooter = Shooter::new(&profile, self.search)?;
        let results = shooter.modes(&self.modes())?;
        let table = ratio_table(&results, self.base, self.base_value)?;
        let ratio = |mode| table.ratio(mode).expect("mode was solved");
        let ratios: Vec<(ModeId, f64, f64)> = self
            .targets
            .iter()
            .map(|&(mode, target)| (mode, ratio(mode), target))
            .collect();
        let sq: f64 = ratios.iter().map(|(_, r, t)| (r - t) * (r - t)).sum();
        Ok(Evaluation {
            objective: (sq / ratios.len() as f64).sqrt(),
            fundamental: ratio(FUNDAMENTAL),
            ratios,
        })
    }

    fn penalized(&self, params: &[f64]) -> f64 {
        match self.evaluate(params) {
            Ok(e) => e.objective,
            Err(e) => {
                log::warn!("objective failed at {params:?}: {e}");
                FAILURE_PENALTY
            }
        }
    }

    fn clip(&self, x: &mut [f64]) {
        for (v, p) in x.iter_mut().zip(&self.parameters) {
            *v = v.clamp(p.lower, p.upper);
        }
    }
}

/// RMS deviation from the targets at `params`, or [`FAILURE_PENALTY`] if the
/// spectrum cannot be computed.
pub fn objective(params: &[f64], problem: &TuneProblem) -> Result<f64> {
    if params.len() != problem.parameters.len() {
        return Err(Error::invalid("wrong number of parameters"));
    }
    for (v, p) in params.iter().zip(&problem.parameters) {
        if !(p.lower..=p.upper).contains(v) {
            return Err(Error::invalid(format!(
                "{} = {v} outside [{}, {}]",
                p.name, p.lower, p.upper
            )));
        }
    }
    Ok(problem.penalized(params))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub params: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneOutcome {
    pub best: Vec<f64>,
    pub objective: f64,
    /// Every evaluation, in order.
    pub trace: Vec<TraceEntry>,
    /// The search stopped on budget rather than on convergence.
    pub budget_exhausted: bool,
}

impl TuneOutcome {
    pub fn profile(&self, problem: &TuneProblem) -> Result<DensityProfile> {
        problem.build(&self.best)
    }

    /// Running minimum of the trace.
    pub fn best_so_far(&self) -> Vec<f64> {
        self.trace
            .iter()
            .scan(f64::INFINITY, |best, e| {
                *best = best.min(e.objective);
                Some(*best)
            })
            .collect()
    }
}

struct Search<'a> {
    problem: &'a TuneProblem,
    trace: Vec<TraceEntry>,
    best: Option<(Vec<f64>, f64)>,
}

impl Search<'_> {
    fn remaining(&self) -> usize {
        self.problem.budget - self.trace.len()
    }

    fn record(&mut self, x: &[f64], f: f64) {
        self.trace.push(TraceEntry {
            params: x.to_vec(),
            objective: f,
        });
        if self.best.as_ref().is_none_or(|(_, b)| f < *b) {
            self.best = Some((x.to_vec(), f));
        }
    }

    fn eval(&mut self, x: &[f64]) -> Option<f64> {
        if self.remaining() == 0 {
            return None;
        }
        let f = self.problem.penalized(x);
        self.record(x, f);
        Some(f)
    }

    /// Evaluates as many of `points` as the budget allows, concurrently.
    fn eval_batch(&mut self, points: &[Vec<f64>]) -> Vec<f64> {
        let take = points.len().min(self.remaining());
        let values = self
            .problem
            .search
            .execution
            .map(&points[..take], |x| self.problem.penalized(x));
        for (x, &f) in points.iter().zip(&values) {
            self.record(x, f);
        }
        values
    }
}

/// Bounded Nelder–Mead from the problem's start point.
///
/// The seed jitters the initial simplex edges; a fixed seed and budget give a
/// bit-identical trace.
pub fn tune(problem: &TuneProblem, seed: u64) -> Result<TuneOutcome> {
    problem.validate()?;
    let n = problem.parameters.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0 = problem.starts();
    let mut points = vec![x0.clone()];
    for (i, p) in problem.parameters.iter().enumerate() {
        let edge = problem.initial_step * (p.upper - p.lower) * rng.random_range(0.8..1.2);
        let mut x = x0.clone();
        x[i] = if x0[i] + edge <= p.upper {
            x0[i] + edge
        } else {
            x0[i] - edge
        };
        problem.clip(&mut x);
        points.push(x);
    }

    let mut search = Search {
        problem,
        trace: Vec::with_capacity(problem.budget),
        best: None,
    };
    let values = search.eval_batch(&points);
    let mut simplex: Vec<(Vec<f64>, f64)> = points.into_iter().zip(values).collect();
    let ranges: Vec<f64> = problem
        .parameters
        .iter()
        .map(|p| (p.upper - p.lower).max(f64::MIN_POSITIVE))
        .collect();

    let mut converged = false;
    while search.remaining() > 0 {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (f_best, f_worst) = (simplex[0].1, simplex[n].1);
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .zip(&ranges)
                    .map(|((a, b), r)| (a - b).abs() / r)
            })
            .fold(0.0, f64::max);
        if f_worst - f_best <= F_TOL || diameter <= X_TOL {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let toward = |from: &[f64], coef: f64| -> Vec<f64> {
            let mut x: Vec<f64> = centroid
                .iter()
                .zip(from)
                .map(|(c, v)| c + coef * (v - c))
                .collect();
            problem.clip(&mut x);
            x
        };

        let worst = simplex[n].0.clone();
        let xr = toward(&worst, -REFLECT);
        let Some(fr) = search.eval(&xr) else { break };
        if fr < f_best {
            let xe = toward(&xr, EXPAND);
            let Some(fe) = search.eval(&xe) else { break };
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc, accept) = if fr < f_worst {
            let xc = toward(&xr, CONTRACT);
            let Some(fc) = search.eval(&xc) else { break };
            (xc, fc, fc <= fr)
        } else {
            let xc = toward(&worst, CONTRACT);
            let Some(fc) = search.eval(&xc) else { break };
            (xc, fc, fc < f_worst)
        };
        if accept {
            simplex[n] = (xc, fc);
            continue;
        }
        let anchor = simplex[0].0.clone();
        let shrunk: Vec<Vec<f64>> = simplex[1..]
            .iter()
            .map(|(x, _)| {
                let mut y: Vec<f64> = anchor
                    .iter()
                    .zip(x)
                    .map(|(a, v)| a + SHRINK * (v - a))
                    .collect();
                problem.clip(&mut y);
                y
            })
            .collect();
        let values = search.eval_batch(&shrunk);
        for (slot, (x, f)) in simplex[1..].iter_mut().zip(shrunk.into_iter().zip(values)) {
            *slot = (x, f);
        }
    }

    let (best, objective) = search.best.expect("initial simplex is always evaluated");
    Ok(TuneOutcome {
        best,
        objective,
        trace: search.trace,
        budget_exhausted: !converged,
    })
}

/// TOML form of a tune problem.
///
/// ```toml
/// template = "continuous-log-exp"   # or "step-rings"
/// rings = 3                         # step-rings only
/// budget = 500
/// seed = 1
/// step = 5e-4                       # integration step used while tuning
///
/// [[parameter]]                     # optional; overrides the template default
/// name = "a_log"
/// start = 0.0
/// lower = 0.0
/// upper = 30.0
///
/// [[target]]                        # optional; defaults to 2, 3, 3, 4, 4, 5, 5, 5
/// mode = "2,0"
/// ratio = 3.0
/// ```
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneFile {
    pub template: String,
    pub rings: Option<usize>,
    pub radius: Option<f64>,
    pub budget: Option<usize>,
    pub seed: Option<u64>,
    pub step: Option<f64>,
    pub initial_step: Option<f64>,
    pub base: Option<String>,
    pub base_value: Option<f64>,
    #[serde(default, rename = "parameter")]
    pub parameters: Vec<Parameter>,
    #[serde(default, rename = "target")]
    pub targets: Vec<TargetDef>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetDef {
    pub mode: String,
    pub ratio: f64,
}

impl TuneFile {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Format(format!("tune spec: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// The problem described, and the seed (default 0).
    pub fn problem(&self) -> Result<(TuneProblem, u64)> {
        let template = match self.template.as_str() {
            "continuous-log-exp" => Template::ContinuousLogExp,
            "step-rings" => Template::StepRings {
                rings: self.rings.unwrap_or(3),
            },
            other => {
                return Err(Error::invalid(format!(
                    "unknown template `{other}` (continuous-log-exp | step-rings)"
                )))
            }
        };
        if self.rings.is_some() && template == Template::ContinuousLogExp {
            return Err(Error::invalid(
                "`rings` only applies to the step-rings template",
            ));
        }
        if let Template::StepRings { rings } = template {
            if rings < 2 {
                return Err(Error::invalid("step template needs at least two rings"));
            }
        }
        let mut problem = TuneProblem::new(template);
        if let Some(radius) = self.radius {
            MembraneSpec::new(radius)?;
            problem.radius = radius;
            problem.parameters = template.default_parameters(radius);
        }
        for p in &self.parameters {
            let slot = problem
                .parameters
                .iter_mut()
                .find(|q| q.name == p.name)
                .ok_or_else(|| Error::invalid(format!("unknown parameter `{}`", p.name)))?;
            *slot = p.clone();
        }
        if !self.targets.is_empty() {
            problem.targets = self
                .targets
                .iter()
                .map(|t| Ok((t.mode.parse()?, t.ratio)))
                .collect::<Result<_>>()?;
        }
        if let Some(base) = &self.base {
            problem.base = base.parse()?;
        }
        if let Some(v) = self.base_value {
            problem.base_value = v;
        }
        if let Some(b) = self.budget {
            problem.budget = b;
        }
        if let Some(s) = self.step {
            problem.search.step = s;
        }
        if let Some(s) = self.initial_step {
            problem.initial_step = s;
        }
        problem.validate()?;
        Ok((problem, self.seed.unwrap_or(0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::Variant;

    #[test]
    fn continuous_template_builds_valid_profiles() {
        let t = Template::ContinuousLogExp;
        let p = t.build(1.0, &[8.0, 25.0, 0.57, 0.1, 7.5, -17.7]).unwrap();
        match p.variant() {
            Variant::ContinuousLogExp(q) => assert!((q.r0 - 0.67).abs() < 1e-12),
            v => panic!("{v:?}"),
        }
        assert!(t.build(1.0, &[1.0]).is_err());
    }

    #[test]
    fn ring_template_accumulates_widths() {
        let t = Template::StepRings { rings: 3 };
        assert_eq!(
            t.parameter_names(),
            ["width_1", "width_2", "density_1", "density_2", "density_3"]
        );
        let p = t.build(1.0, &[0.3, 0.2, 10.0, 8.0, 1.5]).unwrap();
        assert_eq!(p.density(0.1).unwrap(), 10.0);
        assert_eq!(p.density(0.45).unwrap(), 8.0);
        assert_eq!(p.density(0.9).unwrap(), 1.5);
    }

    #[test]
    fn validation_catches_unsafe_bounds() {
        let mut p = TuneProblem::new(Template::ContinuousLogExp);
        assert!(p.validate().is_ok());
        p.parameters[3].lower = 0.0;
        assert!(p.validate().is_err());

        let mut p = TuneProblem::new(Template::StepRings { rings: 3 });
        assert!(p.validate().is_ok());
        p.parameters[0].upper = 0.6;
        p.parameters[1].upper = 0.6;
        assert!(p.validate().is_err());

        let mut p = TuneProblem::new(Template::ContinuousLogExp);
        p.budget = 10;
        assert!(p.validate().is_err());
        assert!(TuneProblem::new(Template::StepRings { rings: 1 })
            .validate()
            .is_err());
    }

    #[test]
    fn objective_rejects_out_of_box_points() {
        let p = TuneProblem::new(Template::ContinuousLogExp);
        assert!(objective(&[-1.0, 1.0, 0.5, 0.1, 0.0, 0.0], &p).is_err());
        assert!(objective(&[0.0, 1.0], &p).is_err());
    }

    #[test]
    fn tune_file_overrides_defaults() {
        let f = TuneFile::from_toml_str(
            r#"
            template = "step-rings"
            rings = 2
            budget = 80
            seed = 9
            [[parameter]]
            name = "density_1"
            start = 2.0
            lower = 1.0
            upper = 5.0
            [[target]]
            mode = "2,0"
            ratio = 3.0
            "#,
        )
        .unwrap();
        let (problem, seed) = f.problem().unwrap();
        assert_eq!(seed, 9);
        assert_eq!(problem.budget, 80);
        assert_eq!(problem.template, Template::StepRings { rings: 2 });
        assert_eq!(problem.parameters[1].start, 2.0);
        assert_eq!(problem.targets, vec![(ModeId::new(2, 0), 3.0)]);

        let bad = TuneFile::from_toml_str("template = \"step-rings\"\n[[parameter]]\nname = \"zeta\"\nstart = 1.0\nlower = 0.0\nupper = 2.0");
        assert!(bad.unwrap().problem().is_err());
        assert!(TuneFile::from_toml_str("template = \"x\"")
            .unwrap()
            .problem()
            .is_err());
        assert!(TuneFile::from_toml_str("templat = \"x\"").is_err());
    }
}
