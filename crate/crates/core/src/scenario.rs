//! Scenario files: a JSON description of one analysis and everything it needs.
//!
//! Parsing, validation and execution are pure; callers decide where the
//! rendered text goes.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::charfn::{evaluate, Convention};
use crate::commensura::{jacobi_classify, strong_commensurate, Frequency, JacobiClass, StrongVerdict, DEFAULT_HEIGHT};
use crate::dynamics::{
    classify_trajectory, nonperiodicity_check_ac, recurrence_search_rule, sigma_condition_scan,
    wandering_certificate, weyl_table, NonperiodicReport, RecurrenceOptions, RecurrenceReport,
    SampleWindow, SigmaReport, TrajectoryClass, WanderingCertificate, WeylRow,
};
use crate::error::{Error, FieldError};
use crate::flow::{CountableState, FrequencyFunction, FrequencySequence, RadiiRule};
use crate::measure::{Interval, Measure};
use crate::profile::AmplitudeProfile;

pub const TOOL_NAME: &str = "torusflow";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    /// Malformed JSON or a field of the wrong shape.
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("validation failed at {0}")]
    Invalid(FieldError),
    #[error(transparent)]
    Analysis(#[from] Error),
}

impl From<FieldError> for ScenarioError {
    fn from(e: FieldError) -> Self {
        ScenarioError::Invalid(e)
    }
}

/// A frequency sequence plus the prefix length to analyse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencySpec {
    #[serde(flatten)]
    pub sequence: FrequencySequence,
    /// Defaults to the whole list for explicit frequencies; required for rules.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefix: Option<usize>,
}

impl FrequencySpec {
    pub fn prefix_len(&self) -> Result<usize, FieldError> {
        match (self.prefix, self.sequence.max_prefix()) {
            (Some(0), _) => Err(FieldError::new("prefix", "must be positive")),
            (Some(n), max) if n > max => Err(FieldError::new(
                "prefix",
                format!("only {max} frequencies are listed"),
            )),
            (Some(n), _) => Ok(n),
            (None, usize::MAX) => Err(FieldError::new("prefix", "required for a frequency rule")),
            (None, max) => Ok(max),
        }
    }
}

/// Times `t` to evaluate at: an explicit list or an evenly (or log-) spaced range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeGrid {
    List(Vec<f64>),
    Range {
        start: f64,
        stop: f64,
        samples: usize,
        #[serde(default)]
        log: bool,
    },
}

impl TimeGrid {
    pub fn points(&self) -> Vec<f64> {
        match self {
            TimeGrid::List(v) => v.clone(),
            TimeGrid::Range { start, stop, samples, log } => {
                if *samples == 1 {
                    return vec![*start];
                }
                let k = (*samples - 1) as f64;
                (0..*samples)
                    .map(|i| {
                        if i + 1 == *samples {
                            *stop
                        } else if *log {
                            start * ((stop / start).ln() * i as f64 / k).exp()
                        } else {
                            start + (stop - start) * i as f64 / k
                        }
                    })
                    .collect()
            }
        }
    }

    fn validate(&self) -> Result<(), FieldError> {
        match self {
            TimeGrid::List(v) => {
                if v.is_empty() {
                    return Err(FieldError::new("", "must not be empty"));
                }
                if let Some(i) = v.iter().position(|t| !t.is_finite()) {
                    return Err(FieldError::new(format!("[{i}]"), "must be finite"));
                }
            }
            TimeGrid::Range { start, stop, samples, log } => {
                if !(start.is_finite() && stop.is_finite()) {
                    return Err(FieldError::new("start", "start and stop must be finite"));
                }
                if *samples == 0 {
                    return Err(FieldError::new("samples", "must be positive"));
                }
                if *log && !(*start > 0.0 && *stop > 0.0) {
                    return Err(FieldError::new("start", "log spacing needs positive start and stop"));
                }
            }
        }
        Ok(())
    }
}

fn default_margin() -> f64 {
    0.01
}

fn default_bins() -> usize {
    16
}

fn default_height() -> u64 {
    DEFAULT_HEIGHT
}

fn default_scan_window() -> SampleWindow {
    SampleWindow {
        t_lo: 1e3,
        t_hi: 1e4,
        samples: 1000,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Analysis {
    /// `μ̂_u(t)` on a time grid.
    Charfn { times: TimeGrid },
    /// Commensurability of a finite frequency prefix.
    ClassifyFreqs {
        #[serde(default = "default_height")]
        height: u64,
    },
    /// Type I/II/III classification along nested prefixes.
    Classify { prefixes: Vec<usize> },
    /// Mode snapshots `(k, r_k, θ_k(t))` of the flow from the given initial phases.
    Simulate {
        times: TimeGrid,
        #[serde(default)]
        phases: Option<Vec<f64>>,
    },
    Wander {
        #[serde(default = "default_margin")]
        margin: f64,
        /// Sampled fallback when no analytic ceiling applies.
        #[serde(default)]
        window: Option<SampleWindow>,
    },
    Recur {
        epsilon: f64,
        /// Multiply `epsilon` by the torus norm `‖r‖`.
        #[serde(default)]
        relative: bool,
        #[serde(default)]
        t_min: f64,
        t_max: f64,
        #[serde(default)]
        step: Option<f64>,
    },
    Weyl {
        samples: Vec<usize>,
        #[serde(default = "default_bins")]
        bins: usize,
    },
    SigmaScan {
        depth: u32,
        sigma: f64,
        #[serde(default = "default_scan_window")]
        window: SampleWindow,
    },
    NonperiodicAc {
        /// Defaults to the support of the density.
        #[serde(default)]
        interval: Option<Interval>,
        periods: Vec<f64>,
        m_max: usize,
    },
}

impl Analysis {
    pub fn name(&self) -> &'static str {
        match self {
            Analysis::Charfn { .. } => "charfn",
            Analysis::ClassifyFreqs { .. } => "classify-freqs",
            Analysis::Classify { .. } => "classify",
            Analysis::Simulate { .. } => "simulate",
            Analysis::Wander { .. } => "wander",
            Analysis::Recur { .. } => "recur",
            Analysis::Weyl { .. } => "weyl",
            Analysis::SigmaScan { .. } => "sigma-scan",
            Analysis::NonperiodicAc { .. } => "nonperiodic-ac",
        }
    }

    /// CSV for tabular results, JSON for verdicts.
    pub fn default_format(&self) -> OutputFormat {
        match self {
            Analysis::Charfn { .. } | Analysis::Simulate { .. } | Analysis::Recur { .. } | Analysis::Weyl { .. } => {
                OutputFormat::Csv
            }
            _ => OutputFormat::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// File to write, relative to the output directory.
    #[serde(default)]
    pub path: Option<String>,
    #[serde(default)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Echoed in outputs; only randomized property suites draw from it.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub convention: Convention,
    #[serde(default)]
    pub measure: Option<Measure>,
    /// Amplitude `|u|`; the analyses use `μ_u = |u|² μ`.
    #[serde(default)]
    pub profile: Option<AmplitudeProfile>,
    #[serde(default)]
    pub frequencies: Option<FrequencySpec>,
    #[serde(default)]
    pub frequency_function: Option<FrequencyFunction>,
    #[serde(default)]
    pub torus: Option<RadiiRule>,
    #[serde(default)]
    pub analysis: Option<Analysis>,
    #[serde(default)]
    pub output: OutputSpec,
}

fn require<'a, T>(field: &'a Option<T>, path: &str, analysis: &str) -> Result<&'a T, FieldError> {
    field
        .as_ref()
        .ok_or_else(|| FieldError::new(path, format!("required by `{analysis}`")))
}

fn check(ok: bool, path: &str, message: &str) -> Result<(), FieldError> {
    if ok {
        Ok(())
    } else {
        Err(FieldError::new(path, message))
    }
}

fn check_window(w: &SampleWindow) -> Result<(), FieldError> {
    check(w.t_lo > 0.0 && w.t_hi > w.t_lo && w.t_hi.is_finite(), "t_lo", "requires 0 < t_lo < t_hi < ∞")?;
    check(w.samples >= 2, "samples", "at least 2 samples are required")
}

impl Scenario {
    /// Checks every input the requested analysis uses, reporting dotted field paths.
    pub fn validate(&self) -> Result<(), FieldError> {
        check(!self.name.trim().is_empty(), "name", "must not be empty")?;
        if let Some(m) = &self.measure {
            m.validate().map_err(|e| e.under("measure"))?;
        }
        if let Some(p) = &self.profile {
            p.validate().map_err(|e| e.under("profile"))?;
        }
        if let Some(f) = &self.frequencies {
            f.sequence.validate().map_err(|e| e.under("frequencies"))?;
            if f.prefix.is_some() {
                f.prefix_len().map_err(|e| e.under("frequencies"))?;
            }
        }
        if let Some(f) = &self.frequency_function {
            f.validate().map_err(|e| e.under("frequency_function"))?;
        }
        if let Some(t) = &self.torus {
            t.validate().map_err(|e| e.under("torus"))?;
        }
        let Some(analysis) = &self.analysis else {
            return Ok(());
        };
        let name = analysis.name();
        let at = |e: FieldError| e.under("analysis");
        match analysis {
            Analysis::Charfn { times } => {
                require(&self.measure, "measure", name)?;
                times.validate().map_err(|e| e.under("times")).map_err(at)?;
            }
            Analysis::ClassifyFreqs { height } => {
                let f = require(&self.frequencies, "frequencies", name)?;
                let n = f.prefix_len().map_err(|e| e.under("frequencies"))?;
                check((2..=12).contains(&n), "frequencies.prefix", "need between 2 and 12 frequencies")?;
                check(*height >= 1, "analysis.height", "must be positive")?;
            }
            Analysis::Classify { prefixes } => {
                let f = require(&self.frequencies, "frequencies", name)?;
                let t = require(&self.torus, "torus", name)?;
                check(!prefixes.is_empty(), "analysis.prefixes", "need at least one prefix length")?;
                check(
                    prefixes[0] > 0 && prefixes.windows(2).all(|w| w[0] < w[1]),
                    "analysis.prefixes",
                    "must be positive and strictly increasing",
                )?;
                let last = *prefixes.last().unwrap();
                check(last <= f.sequence.max_prefix(), "analysis.prefixes", "exceeds the listed frequencies")?;
                check(last <= t.max_prefix(), "analysis.prefixes", "exceeds the listed radii")?;
                check(t.is_nondegenerate(), "torus", "every radius must be positive")?;
            }
            Analysis::Simulate { times, phases } => {
                let f = require(&self.frequencies, "frequencies", name)?;
                let t = require(&self.torus, "torus", name)?;
                let n = f.prefix_len().map_err(|e| e.under("frequencies"))?;
                check(n <= t.max_prefix(), "torus", "has fewer radii than the frequency prefix")?;
                times.validate().map_err(|e| e.under("times")).map_err(at)?;
                if let Some(p) = phases {
                    check(p.len() == n, "analysis.phases", "needs one phase per mode of the prefix")?;
                    check(p.iter().all(|x| x.is_finite()), "analysis.phases", "must be finite")?;
                }
            }
            Analysis::Wander { margin, window } => {
                require(&self.measure, "measure", name)?;
                check(*margin > 0.0 && *margin < 1.0, "analysis.margin", "must lie in the open interval (0, 1)")?;
                if let Some(w) = window {
                    check_window(w).map_err(|e| e.under("window")).map_err(at)?;
                }
            }
            Analysis::Recur { epsilon, t_min, t_max, step, .. } => {
                require(&self.frequencies, "frequencies", name)?;
                require(&self.torus, "torus", name)?;
                check(*epsilon > 0.0 && epsilon.is_finite(), "analysis.epsilon", "must be positive and finite")?;
                check(t_min.is_finite() && t_max.is_finite() && t_min < t_max, "analysis.t_max", "requires finite t_min < t_max")?;
                if let Some(s) = step {
                    check(*s > 0.0, "analysis.step", "must be positive")?;
                }
            }
            Analysis::Weyl { samples, bins } => {
                let f = require(&self.frequencies, "frequencies", name)?;
                let n = f.prefix_len().map_err(|e| e.under("frequencies"))?;
                check((2..=4).contains(&n), "frequencies.prefix", "need between 2 and 4 frequencies")?;
                check((1..=256).contains(bins), "analysis.bins", "must lie in 1..=256")?;
                check(!samples.is_empty(), "analysis.samples", "must not be empty")?;
                if let Some(i) = samples.iter().position(|s| *s < bins * bins) {
                    return Err(FieldError::new(format!("analysis.samples[{i}]"), "need at least bins² samples"));
                }
            }
            Analysis::SigmaScan { depth, sigma, window } => {
                require(&self.measure, "measure", name)?;
                check(*depth <= 12, "analysis.depth", "at most 12")?;
                check(*sigma > 0.0 && *sigma < 1.0, "analysis.sigma", "must lie in the open interval (0, 1)")?;
                check_window(window).map_err(|e| e.under("window")).map_err(at)?;
            }
            Analysis::NonperiodicAc { interval, periods, m_max } => {
                let m = require(&self.measure, "measure", name)?;
                check(matches!(m, Measure::Density(_)), "measure.type", "must be a density")?;
                require(&self.frequency_function, "frequency_function", name)?;
                if let Some(iv) = interval {
                    check(iv.lo.is_finite() && iv.hi.is_finite() && iv.lo < iv.hi, "analysis.interval", "requires finite lo < hi")?;
                }
                check(!periods.is_empty(), "analysis.periods", "need at least one candidate period")?;
                if let Some(i) = periods.iter().position(|t| !(t.is_finite() && *t > 0.0)) {
                    return Err(FieldError::new(format!("analysis.periods[{i}]"), "periods must be positive"));
                }
                check(*m_max >= 2, "analysis.m_max", "must be at least 2")?;
            }
        }
        Ok(())
    }

    /// `μ_u = |u|² μ`.
    fn weighted_measure(&self) -> Result<Measure, ScenarioError> {
        let mu = self.measure.as_ref().expect("validated");
        Ok(match &self.profile {
            Some(p) => mu.amplitude_weight(p)?,
            None => mu.clone(),
        })
    }

    pub fn output_format(&self) -> OutputFormat {
        self.output
            .format
            .or_else(|| self.analysis.as_ref().map(Analysis::default_format))
            .unwrap_or(OutputFormat::Json)
    }
}

/// A parsed scenario with the SHA-256 of its source text.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub scenario: Scenario,
    pub sha256: String,
}

/// Parses and validates scenario JSON.
pub fn parse_scenario(text: &str) -> Result<ScenarioFile, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| ScenarioError::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    scenario.validate()?;
    Ok(ScenarioFile {
        scenario,
        sha256: hex::encode(Sha256::digest(text.as_bytes())),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharfnRow {
    pub t: f64,
    pub re: f64,
    pub im: f64,
    pub abs: f64,
    pub convention: Convention,
    pub truncation_k: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeRow {
    pub mode: usize,
    pub r: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub modes: Vec<ModeRow>,
}

/// The result section of an output document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AnalysisResult {
    Charfn { rows: Vec<CharfnRow> },
    ClassifyFreqs {
        frequencies: Vec<Frequency>,
        strong: StrongVerdict,
        jacobi: JacobiClass,
    },
    Classify { class: TrajectoryClass },
    Simulate { frequencies: Vec<f64>, snapshots: Vec<Snapshot> },
    Wander { certificate: Option<WanderingCertificate> },
    Recur { report: RecurrenceReport },
    Weyl { frequencies: Vec<f64>, rows: Vec<WeylRow> },
    SigmaScan { report: SigmaReport },
    NonperiodicAc { report: NonperiodicReport },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub scenario: String,
    pub scenario_sha256: String,
    pub seed: u64,
    pub analysis: String,
}

/// The JSON output document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputDocument {
    pub meta: Meta,
    pub result: AnalysisResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub format: OutputFormat,
    pub text: String,
    pub result: AnalysisResult,
}

/// Runs the scenario's analysis and renders it in its output format.
pub fn run_scenario(file: &ScenarioFile) -> Result<RunOutput, ScenarioError> {
    let s = &file.scenario;
    let analysis = s
        .analysis
        .as_ref()
        .ok_or_else(|| FieldError::new("analysis", "no analysis requested"))?;
    let result = execute(s, analysis)?;
    let format = s.output_format();
    let meta = Meta {
        tool: TOOL_NAME.into(),
        version: TOOL_VERSION.into(),
        scenario: s.name.clone(),
        scenario_sha256: file.sha256.clone(),
        seed: s.seed,
        analysis: analysis.name().into(),
    };
    let text = match format {
        OutputFormat::Json => {
            let doc = OutputDocument {
                meta,
                result: result.clone(),
            };
            let mut t = serde_json::to_string_pretty(&doc).map_err(|e| Error::NonFinite(e.to_string()))?;
            t.push('\n');
            t
        }
        OutputFormat::Csv => render_csv(&meta, &result),
    };
    Ok(RunOutput { format, text, result })
}

fn execute(s: &Scenario, analysis: &Analysis) -> Result<AnalysisResult, ScenarioError> {
    let prefix = || -> Result<(FrequencySequence, usize), ScenarioError> {
        let f = s.frequencies.as_ref().expect("validated");
        let n = f.prefix_len().map_err(|e| e.under("frequencies"))?;
        Ok((f.sequence.clone(), n))
    };
    Ok(match analysis {
        Analysis::Charfn { times } => {
            let mu = s.weighted_measure()?;
            let rows = times
                .points()
                .into_iter()
                .map(|t| {
                    let e = evaluate(&mu, t, s.convention)?;
                    Ok(CharfnRow {
                        t,
                        re: e.value.re,
                        im: e.value.im,
                        abs: e.value.norm(),
                        convention: s.convention,
                        truncation_k: e.truncation_k,
                    })
                })
                .collect::<Result<_, Error>>()?;
            AnalysisResult::Charfn { rows }
        }
        Analysis::ClassifyFreqs { height } => {
            let (seq, n) = prefix()?;
            let frequencies = seq.prefix(n)?;
            AnalysisResult::ClassifyFreqs {
                strong: strong_commensurate(&frequencies)?,
                jacobi: jacobi_classify(&frequencies, *height)?,
                frequencies,
            }
        }
        Analysis::Classify { prefixes } => {
            let seq = &s.frequencies.as_ref().expect("validated").sequence;
            let class = classify_trajectory(seq, prefixes, s.torus.as_ref().expect("validated"))?;
            AnalysisResult::Classify { class }
        }
        Analysis::Simulate { times, phases } => {
            let (seq, n) = prefix()?;
            let lambdas = seq.values(n)?;
            let torus = s.torus.as_ref().expect("validated").prefix(n)?;
            let start = match phases {
                Some(p) => CountableState::new(torus, p)?,
                None => CountableState::at_zero_phase(torus),
            };
            let snapshots = times
                .points()
                .into_iter()
                .map(|t| {
                    let st = start.evolve(&lambdas, t)?;
                    let modes = st
                        .torus
                        .radii
                        .iter()
                        .zip(&st.phases)
                        .enumerate()
                        .map(|(k, (&r, p))| ModeRow {
                            mode: k + 1,
                            r,
                            theta: p.radians(),
                        })
                        .collect();
                    Ok(Snapshot { t, modes })
                })
                .collect::<Result<_, Error>>()?;
            AnalysisResult::Simulate {
                frequencies: lambdas,
                snapshots,
            }
        }
        Analysis::Wander { margin, window } => {
            let mu = s.weighted_measure()?;
            AnalysisResult::Wander {
                certificate: wandering_certificate(&mu, *margin, s.convention, *window)?,
            }
        }
        Analysis::Recur { epsilon, relative, t_min, t_max, step } => {
            let seq = &s.frequencies.as_ref().expect("validated").sequence;
            let radii = s.torus.as_ref().expect("validated");
            let eps = if *relative {
                epsilon * radii.tail_bound(0).sqrt()
            } else {
                *epsilon
            };
            let mut opts = RecurrenceOptions::new(eps, *t_min, *t_max);
            opts.step = *step;
            AnalysisResult::Recur {
                report: recurrence_search_rule(seq, radii, &opts)?,
            }
        }
        Analysis::Weyl { samples, bins } => {
            let (seq, n) = prefix()?;
            let frequencies = seq.values(n)?;
            AnalysisResult::Weyl {
                rows: weyl_table(&frequencies, samples, *bins)?,
                frequencies,
            }
        }
        Analysis::SigmaScan { depth, sigma, window } => {
            let mu = s.weighted_measure()?;
            AnalysisResult::SigmaScan {
                report: sigma_condition_scan(&mu, *depth, *sigma, *window, s.convention)?,
            }
        }
        Analysis::NonperiodicAc { interval, periods, m_max } => {
            let Some(Measure::Density(rho)) = &s.measure else {
                return Err(FieldError::new("measure.type", "must be a density").into());
            };
            let delta = match interval {
                Some(iv) => *iv,
                None => rho
                    .hull()
                    .ok_or_else(|| Error::Degenerate("the density has empty support".into()))?,
            };
            let unit = AmplitudeProfile::unit();
            let r = s.profile.as_ref().unwrap_or(&unit);
            let lambda = s.frequency_function.as_ref().expect("validated");
            AnalysisResult::NonperiodicAc {
                report: nonperiodicity_check_ac(rho, lambda, delta, r, periods, *m_max)?,
            }
        }
    })
}

/// CSV with a `#` header block; verdict-style results fall back to one JSON line.
fn render_csv(meta: &Meta, result: &AnalysisResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# tool: {} {}", meta.tool, meta.version);
    let _ = writeln!(out, "# scenario: {}", meta.scenario);
    let _ = writeln!(out, "# scenario-sha256: {}", meta.scenario_sha256);
    let _ = writeln!(out, "# seed: {}", meta.seed);
    let _ = writeln!(out, "# analysis: {}", meta.analysis);
    match result {
        AnalysisResult::Charfn { rows } => {
            out.push_str("t,re,im,abs,convention,truncation_K\n");
            for r in rows {
                let k = r.truncation_k.map(|k| k.to_string()).unwrap_or_default();
                let _ = writeln!(out, "{},{},{},{},{},{k}", r.t, r.re, r.im, r.abs, r.convention.name());
            }
        }
        AnalysisResult::Simulate { snapshots, .. } => {
            out.push_str("t,mode,r,theta\n");
            for s in snapshots {
                for m in &s.modes {
                    let _ = writeln!(out, "{},{},{},{}", s.t, m.mode, m.r, m.theta);
                }
            }
        }
        AnalysisResult::Recur { report } => {
            let _ = writeln!(out, "# epsilon: {}", report.epsilon);
            let _ = writeln!(out, "# prefix: {}", report.prefix);
            let _ = writeln!(out, "# scan: ({}, {}] step {}", report.t_min, report.scan_horizon, report.scan_step);
            let _ = writeln!(out, "# verdict: {}", serde_json::to_value(report.verdict).unwrap().as_str().unwrap());
            out.push_str("t,distance\n");
            for r in &report.return_times {
                let _ = writeln!(out, "{},{}", r.t, r.distance);
            }
        }
        AnalysisResult::Weyl { rows, .. } => {
            out.push_str("samples,bins,discrepancy\n");
            for r in rows {
                let _ = writeln!(out, "{},{},{}", r.samples, r.bins, r.discrepancy);
            }
        }
        other => {
            out.push_str("result\n");
            let _ = writeln!(out, "\"{}\"", serde_json::to_string(other).unwrap().replace('"', "\"\""));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_out_of_range_names_field() {
        let text = r#"{"name":"b","measure":{"type":"bernoulli","eta":1.5},"analysis":{"kind":"charfn","times":[1.0]}}"#;
        match parse_scenario(text) {
            Err(ScenarioError::Invalid(e)) => assert_eq!(e.path, "measure.eta"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn structural_errors_carry_paths() {
        let text = r#"{"name":"b","analysis":{"kind":"weyl","samples":"many"}}"#;
        match parse_scenario(text) {
            Err(ScenarioError::Parse { path, .. }) => assert!(path.starts_with("analysis"), "{path}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_input_is_reported() {
        let text = r#"{"name":"w","analysis":{"kind":"wander"}}"#;
        match parse_scenario(text) {
            Err(ScenarioError::Invalid(e)) => assert_eq!(e.path, "measure"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rule_needs_prefix() {
        let text = r#"{"name":"w","frequencies":{"rule":"factorial"},"analysis":{"kind":"classify-freqs"}}"#;
        match parse_scenario(text) {
            Err(ScenarioError::Invalid(e)) => assert_eq!(e.path, "frequencies.prefix"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn log_grid_ends_exactly() {
        let g = TimeGrid::Range { start: 1.0, stop: 1e4, samples: 5, log: true }.points();
        assert_eq!(g.len(), 5);
        assert_eq!((g[0], g[4]), (1.0, 1e4));
        assert!((g[2] - 100.0).abs() < 1e-10);
    }
}
