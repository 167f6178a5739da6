//! Configuration: TOML job files → fully resolved [`JobSpec`].
//!
//! Grammar: TOML sections with `key = value` pairs and `#` comments. Every
//! knob has a default; the resolved spec records each one explicitly, and
//! [`JobSpec::resolved_toml`] emits a file that re-parses to the identical
//! spec (the bit-exact rerun artifact). Unknown keys are hard errors that
//! name the offending key and the nearest valid one.

use crate::{CliError, CliResult};
use serde::Serialize;
use shg_core::{rescale_physical, Params, PhysicalParams, ScaleReport};
use std::path::PathBuf;
use toml::value::Table;
use toml::Value;

// ---------------------------------------------------------------------------
// Resolved specification
// ---------------------------------------------------------------------------

/// How the pump amplitude was specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PumpSpec {
    /// `pump = E` given directly.
    Absolute(f64),
    /// `pump_fraction = f`: pump resolved as f·E_t once the threshold is known.
    Fraction(f64),
}

/// Initial condition of a stochastic/deterministic run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InitialKind {
    Vacuum,
    Steady,
    SteadyPerturbed,
}

impl InitialKind {
    pub fn as_str(self) -> &'static str {
        match self {
            InitialKind::Vacuum => "vacuum",
            InitialKind::Steady => "steady",
            InitialKind::SteadyPerturbed => "steady-perturbed",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSpec {
    pub dt: f64,
    pub t_transient: f64,
    /// Recorded span per trajectory; total sample time = trajectories × t_total.
    pub t_total: f64,
    pub record_stride: u64,
    pub trajectories: u64,
    pub seed: u64,
    pub blocks: usize,
    pub initial: InitialKind,
    pub perturbation_mode: i64,
    pub perturbation_amplitude: f64,
    pub noise: bool,
    pub save_snapshots: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LinearSpec {
    /// Wavenumber window [0, k_max] for the threshold maximization.
    pub k_max: f64,
    /// Pump window (lower edge fixed) for the threshold bracketing.
    pub pump_max: f64,
    /// Sample count of analytic spectra.
    pub spectrum_points: usize,
    /// Upper wavenumber of analytic spectra; 0 = auto (2.5·k_c).
    pub spectrum_k_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BifurcationSpec {
    pub delta2_min: f64,
    pub delta2_max: f64,
    pub delta2_step: f64,
}

/// Fully resolved job description: every default made explicit.
#[derive(Debug, Clone, Serialize)]
pub struct JobSpec {
    /// Dimensionless operating point. `params.pump` is the resolved absolute
    /// pump; when [`PumpSpec::Fraction`] was given it starts as NaN and is
    /// fixed by [`JobSpec::resolve_pump`].
    pub params: Params,
    pub pump: PumpSpec,
    /// Present when the job was specified through physical cavity numbers.
    pub physical: Option<(PhysicalParams, ScaleReport)>,
    pub grid_modes: usize,
    pub grid_length: f64,
    pub run: RunSpec,
    pub linear: LinearSpec,
    pub bifurcation: BifurcationSpec,
    pub analyze_inputs: Vec<PathBuf>,
    pub figure_monte_carlo: bool,
    pub figure_fractions: Vec<f64>,
    pub output_directory: Option<PathBuf>,
}

impl JobSpec {
    /// Absolute pump if already known.
    pub fn absolute_pump(&self) -> Option<f64> {
        match self.pump {
            PumpSpec::Absolute(e) => Some(e),
            PumpSpec::Fraction(_) => None,
        }
    }

    /// Fix a fractional pump against the computed threshold.
    pub fn resolve_pump(&mut self, e_threshold: f64) {
        if let PumpSpec::Fraction(f) = self.pump {
            self.params.pump = f * e_threshold;
        }
    }

    pub fn grid(&self) -> CliResult<shg_core::Grid1D> {
        Ok(shg_core::Grid1D::new(self.grid_modes, self.grid_length)?)
    }

    pub fn threshold_search(&self) -> shg_core::ThresholdSearch {
        let base = shg_core::ThresholdSearch::default();
        shg_core::ThresholdSearch {
            e_window: (base.e_window.0, self.linear.pump_max),
            k_window: (0.0, self.linear.k_max),
            ..base
        }
    }

    /// The spec re-parsed from this echo is identical to `self`; a rerun from
    /// it reproduces stochastic outputs bit-exactly. Requires the pump to be
    /// resolved to an absolute value.
    pub fn resolved_toml(&self) -> String {
        let mut s = String::new();
        assert!(
            self.params.pump.is_finite(),
            "echo requested before the fractional pump was resolved"
        );
        if let Some((ph, _)) = &self.physical {
            s.push_str("[physical]\n");
            for (k, v) in [
                ("gamma1", ph.gamma1),
                ("gamma2", ph.gamma2),
                ("detuning1", ph.detuning1),
                ("detuning2", ph.detuning2),
                ("omega1", ph.omega1),
                ("light_speed", ph.light_speed),
                ("coupling", ph.coupling),
                ("pump_in", ph.pump_in),
            ] {
                s.push_str(&format!("{k} = {}\n", fmt_f64(v)));
            }
        } else {
            s.push_str("[params]\n");
            for (k, v) in [
                ("delta1", self.params.delta1),
                ("delta2", self.params.delta2),
                ("gamma", self.params.gamma),
                ("pump", self.params.pump),
                ("n_th", self.params.n_th),
            ] {
                s.push_str(&format!("{k} = {}\n", fmt_f64(v)));
            }
        }
        s.push_str(&format!(
            "\n[grid]\nmodes = {}\nlength = {}\n",
            self.grid_modes,
            fmt_f64(self.grid_length)
        ));
        let r = &self.run;
        s.push_str(&format!(
            "\n[run]\ndt = {}\nt_transient = {}\nt_total = {}\nrecord_stride = {}\n\
             trajectories = {}\nseed = {}\nblocks = {}\ninitial = \"{}\"\n\
             perturbation_mode = {}\nperturbation_amplitude = {}\nnoise = {}\nsave_snapshots = {}\n",
            fmt_f64(r.dt),
            fmt_f64(r.t_transient),
            fmt_f64(r.t_total),
            r.record_stride,
            r.trajectories,
            r.seed,
            r.blocks,
            r.initial.as_str(),
            r.perturbation_mode,
            fmt_f64(r.perturbation_amplitude),
            r.noise,
            r.save_snapshots,
        ));
        let l = &self.linear;
        s.push_str(&format!(
            "\n[linear]\nk_max = {}\npump_max = {}\nspectrum_points = {}\nspectrum_k_max = {}\n",
            fmt_f64(l.k_max),
            fmt_f64(l.pump_max),
            l.spectrum_points,
            fmt_f64(l.spectrum_k_max)
        ));
        let b = &self.bifurcation;
        s.push_str(&format!(
            "\n[bifurcation]\ndelta2_min = {}\ndelta2_max = {}\ndelta2_step = {}\n",
            fmt_f64(b.delta2_min),
            fmt_f64(b.delta2_max),
            fmt_f64(b.delta2_step)
        ));
        if !self.analyze_inputs.is_empty() {
            let list = self
                .analyze_inputs
                .iter()
                .map(|p| format!("{:?}", p.display().to_string()))
                .collect::<Vec<_>>()
                .join(", ");
            s.push_str(&format!("\n[analyze]\ninputs = [{list}]\n"));
        }
        s.push_str(&format!(
            "\n[figure]\nmonte_carlo = {}\n",
            self.figure_monte_carlo
        ));
        if !self.figure_fractions.is_empty() {
            let list = self
                .figure_fractions
                .iter()
                .map(|f| fmt_f64(*f))
                .collect::<Vec<_>>()
                .join(", ");
            s.push_str(&format!("fractions = [{list}]\n"));
        }
        if let Some(dir) = &self.output_directory {
            s.push_str(&format!(
                "\n[output]\ndirectory = {:?}\n",
                dir.display().to_string()
            ));
        }
        s
    }
}

/// Shortest text that round-trips the value. Whole floats print without a
/// fractional part and re-parse as integers, which float-typed keys accept.
fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

// ---------------------------------------------------------------------------
// Raw (pre-default) configuration and parsing
// ---------------------------------------------------------------------------

/// Parsed configuration before defaults: `None` = key absent.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    pub delta1: Option<f64>,
    pub delta2: Option<f64>,
    pub gamma: Option<f64>,
    pub pump: Option<f64>,
    pub pump_fraction: Option<f64>,
    pub n_th: Option<f64>,
    pub physical: Option<PhysicalParams>,
    pub grid_modes: Option<usize>,
    pub grid_length: Option<f64>,
    pub dt: Option<f64>,
    pub t_transient: Option<f64>,
    pub t_total: Option<f64>,
    pub record_stride: Option<u64>,
    pub trajectories: Option<u64>,
    pub seed: Option<u64>,
    pub blocks: Option<usize>,
    pub initial: Option<InitialKind>,
    pub perturbation_mode: Option<i64>,
    pub perturbation_amplitude: Option<f64>,
    pub noise: Option<bool>,
    pub save_snapshots: Option<bool>,
    pub k_max: Option<f64>,
    pub pump_max: Option<f64>,
    pub spectrum_points: Option<usize>,
    pub spectrum_k_max: Option<f64>,
    pub delta2_min: Option<f64>,
    pub delta2_max: Option<f64>,
    pub delta2_step: Option<f64>,
    pub analyze_inputs: Option<Vec<PathBuf>>,
    pub figure_monte_carlo: Option<bool>,
    pub figure_fractions: Option<Vec<f64>>,
    pub output_directory: Option<PathBuf>,
}

const ROOT_KEYS: &[&str] = &[
    "params",
    "physical",
    "grid",
    "run",
    "linear",
    "bifurcation",
    "analyze",
    "figure",
    "output",
];
const PARAMS_KEYS: &[&str] = &["delta1", "delta2", "gamma", "pump", "pump_fraction", "n_th"];
const PHYSICAL_KEYS: &[&str] = &[
    "gamma1",
    "gamma2",
    "detuning1",
    "detuning2",
    "omega1",
    "light_speed",
    "coupling",
    "pump_in",
];
const GRID_KEYS: &[&str] = &["modes", "length"];
const RUN_KEYS: &[&str] = &[
    "dt",
    "t_transient",
    "t_total",
    "record_stride",
    "trajectories",
    "seed",
    "blocks",
    "initial",
    "perturbation_mode",
    "perturbation_amplitude",
    "noise",
    "save_snapshots",
];
const LINEAR_KEYS: &[&str] = &["k_max", "pump_max", "spectrum_points", "spectrum_k_max"];
const BIFURCATION_KEYS: &[&str] = &["delta2_min", "delta2_max", "delta2_step"];
const ANALYZE_KEYS: &[&str] = &["inputs"];
const FIGURE_KEYS: &[&str] = &["monte_carlo", "fractions"];
const OUTPUT_KEYS: &[&str] = &["directory"];

fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.to_ascii_lowercase().chars().collect();
    let b: Vec<char> = b.to_ascii_lowercase().chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn unknown_key_error(path: &str, key: &str, known: &[&str]) -> CliError {
    let mut ranked: Vec<(usize, &str)> = known
        .iter()
        .map(|cand| (levenshtein(key, cand), *cand))
        .collect();
    ranked.sort();
    let qualified = if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    };
    match ranked.first() {
        Some((_, best)) => CliError::Config(format!(
            "unknown key \"{qualified}\"; nearest valid key is \"{best}\""
        )),
        None => CliError::Config(format!("unknown key \"{qualified}\"")),
    }
}

/// One section of the document with its registry of valid keys.
struct Section<'a> {
    path: &'static str,
    known: &'static [&'static str],
    table: Option<&'a Table>,
}

impl<'a> Section<'a> {
    fn check_unknown(&self) -> CliResult<()> {
        if let Some(t) = self.table {
            for key in t.keys() {
                if !self.known.contains(&key.as_str()) {
                    return Err(unknown_key_error(self.path, key, self.known));
                }
            }
        }
        Ok(())
    }

    fn raw(&self, key: &str) -> Option<&'a Value> {
        self.table.and_then(|t| t.get(key))
    }

    fn type_err(&self, key: &str, want: &str, got: &Value) -> CliError {
        CliError::Config(format!(
            "key \"{}.{key}\" must be {want}, got {}",
            self.path,
            got.type_str()
        ))
    }

    fn f64(&self, key: &str) -> CliResult<Option<f64>> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Float(v)) => Ok(Some(*v)),
            Some(Value::Integer(v)) => Ok(Some(*v as f64)),
            Some(other) => Err(self.type_err(key, "a number", other)),
        }
    }

    fn required_f64(&self, key: &str) -> CliResult<f64> {
        self.f64(key)?.ok_or_else(|| {
            CliError::Config(format!("missing required key \"{}.{key}\"", self.path))
        })
    }

    fn integer(&self, key: &str) -> CliResult<Option<i64>> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Integer(v)) => Ok(Some(*v)),
            Some(other) => Err(self.type_err(key, "an integer", other)),
        }
    }

    fn unsigned(&self, key: &str) -> CliResult<Option<u64>> {
        match self.integer(key)? {
            None => Ok(None),
            Some(v) if v >= 0 => Ok(Some(v as u64)),
            Some(v) => Err(CliError::Config(format!(
                "key \"{}.{key}\" must be non-negative, got {v}",
                self.path
            ))),
        }
    }

    fn count(&self, key: &str) -> CliResult<Option<usize>> {
        Ok(self.unsigned(key)?.map(|v| v as usize))
    }

    fn boolean(&self, key: &str) -> CliResult<Option<bool>> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Boolean(v)) => Ok(Some(*v)),
            Some(other) => Err(self.type_err(key, "a boolean", other)),
        }
    }

    fn string(&self, key: &str) -> CliResult<Option<&'a str>> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::String(v)) => Ok(Some(v.as_str())),
            Some(other) => Err(self.type_err(key, "a string", other)),
        }
    }

    fn f64_array(&self, key: &str) -> CliResult<Option<Vec<f64>>> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Array(items)) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    match item {
                        Value::Float(v) => out.push(*v),
                        Value::Integer(v) => out.push(*v as f64),
                        other => return Err(self.type_err(key, "an array of numbers", other)),
                    }
                }
                Ok(Some(out))
            }
            Some(other) => Err(self.type_err(key, "an array of numbers", other)),
        }
    }

    fn string_array(&self, key: &str) -> CliResult<Option<Vec<String>>> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Array(items)) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    match item {
                        Value::String(v) => out.push(v.clone()),
                        other => return Err(self.type_err(key, "an array of strings", other)),
                    }
                }
                Ok(Some(out))
            }
            Some(other) => Err(self.type_err(key, "an array of strings", other)),
        }
    }
}

fn section<'a>(
    root: &'a Table,
    name: &'static str,
    known: &'static [&'static str],
) -> CliResult<Section<'a>> {
    let table = match root.get(name) {
        None => None,
        Some(Value::Table(t)) => Some(t),
        Some(other) => {
            return Err(CliError::Config(format!(
                "\"{name}\" must be a section ([{name}]), got {}",
                other.type_str()
            )))
        }
    };
    Ok(Section {
        path: name,
        known,
        table,
    })
}

/// Parse configuration text into a raw (pre-default) spec.
pub fn parse_config(text: &str) -> CliResult<RawConfig> {
    let value: Value = text
        .parse()
        .map_err(|e| CliError::Config(format!("malformed configuration: {e}")))?;
    let root = match value {
        Value::Table(t) => t,
        _ => return Err(CliError::Config("configuration root must be a table".into())),
    };
    for key in root.keys() {
        if !ROOT_KEYS.contains(&key.as_str()) {
            return Err(unknown_key_error("", key, ROOT_KEYS));
        }
    }

    let params = section(&root, "params", PARAMS_KEYS)?;
    let physical = section(&root, "physical", PHYSICAL_KEYS)?;
    let grid = section(&root, "grid", GRID_KEYS)?;
    let run = section(&root, "run", RUN_KEYS)?;
    let linear = section(&root, "linear", LINEAR_KEYS)?;
    let bifurcation = section(&root, "bifurcation", BIFURCATION_KEYS)?;
    let analyze = section(&root, "analyze", ANALYZE_KEYS)?;
    let figure = section(&root, "figure", FIGURE_KEYS)?;
    let output = section(&root, "output", OUTPUT_KEYS)?;
    for s in [
        &params,
        &physical,
        &grid,
        &run,
        &linear,
        &bifurcation,
        &analyze,
        &figure,
        &output,
    ] {
        s.check_unknown()?;
    }

    if params.table.is_some() && physical.table.is_some() {
        return Err(CliError::Config(
            "[params] and [physical] are mutually exclusive; \
             give either the dimensionless point or the cavity numbers"
                .into(),
        ));
    }

    let physical_params = if physical.table.is_some() {
        Some(PhysicalParams {
            gamma1: physical.required_f64("gamma1")?,
            gamma2: physical.required_f64("gamma2")?,
            detuning1: physical.required_f64("detuning1")?,
            detuning2: physical.required_f64("detuning2")?,
            omega1: physical.required_f64("omega1")?,
            light_speed: physical.required_f64("light_speed")?,
            coupling: physical.required_f64("coupling")?,
            pump_in: physical.required_f64("pump_in")?,
        })
    } else {
        None
    };

    let initial = match run.string("initial")? {
        None => None,
        Some("vacuum") => Some(InitialKind::Vacuum),
        Some("steady") => Some(InitialKind::Steady),
        Some("steady-perturbed") => Some(InitialKind::SteadyPerturbed),
        Some(other) => {
            return Err(CliError::Config(format!(
                "key \"run.initial\" must be one of \"vacuum\", \"steady\", \
                 \"steady-perturbed\", got \"{other}\""
            )))
        }
    };

    Ok(RawConfig {
        delta1: params.f64("delta1")?,
        delta2: params.f64("delta2")?,
        gamma: params.f64("gamma")?,
        pump: params.f64("pump")?,
        pump_fraction: params.f64("pump_fraction")?,
        n_th: params.f64("n_th")?,
        physical: physical_params,
        grid_modes: grid.count("modes")?,
        grid_length: grid.f64("length")?,
        dt: run.f64("dt")?,
        t_transient: run.f64("t_transient")?,
        t_total: run.f64("t_total")?,
        record_stride: run.unsigned("record_stride")?,
        trajectories: run.unsigned("trajectories")?,
        seed: run.unsigned("seed")?,
        blocks: run.count("blocks")?,
        initial,
        perturbation_mode: run.integer("perturbation_mode")?,
        perturbation_amplitude: run.f64("perturbation_amplitude")?,
        noise: run.boolean("noise")?,
        save_snapshots: run.boolean("save_snapshots")?,
        k_max: linear.f64("k_max")?,
        pump_max: linear.f64("pump_max")?,
        spectrum_points: linear.count("spectrum_points")?,
        spectrum_k_max: linear.f64("spectrum_k_max")?,
        delta2_min: bifurcation.f64("delta2_min")?,
        delta2_max: bifurcation.f64("delta2_max")?,
        delta2_step: bifurcation.f64("delta2_step")?,
        analyze_inputs: analyze
            .string_array("inputs")?
            .map(|v| v.into_iter().map(PathBuf::from).collect()),
        figure_monte_carlo: figure.boolean("monte_carlo")?,
        figure_fractions: figure.f64_array("fractions")?,
        output_directory: output.string("directory")?.map(PathBuf::from),
    })
}

impl RawConfig {
    /// Apply defaults and validate cross-field constraints.
    pub fn resolve(self) -> CliResult<JobSpec> {
        if self.physical.is_some() && (self.pump.is_some() || self.pump_fraction.is_some()) {
            // unreachable through parse_config (exclusive sections); kept for
            // programmatic construction
            return Err(CliError::Config(
                "physical cavity numbers already determine the pump".into(),
            ));
        }
        if self.pump.is_some() && self.pump_fraction.is_some() {
            return Err(CliError::Config(
                "\"params.pump\" and \"params.pump_fraction\" are mutually exclusive".into(),
            ));
        }

        let (params, pump, physical) = if let Some(ph) = self.physical {
            let (p, report) = rescale_physical(&ph)?;
            (p, PumpSpec::Absolute(p.pump), Some((ph, report)))
        } else {
            let pump = match (self.pump, self.pump_fraction) {
                (Some(e), None) => PumpSpec::Absolute(e),
                (None, Some(f)) => {
                    if !(f.is_finite() && f > 0.0) {
                        return Err(CliError::Config(format!(
                            "\"params.pump_fraction\" must be positive, got {f}"
                        )));
                    }
                    PumpSpec::Fraction(f)
                }
                (None, None) => PumpSpec::Absolute(7.4),
                (Some(_), Some(_)) => unreachable!(),
            };
            let params = Params {
                delta1: self.delta1.unwrap_or(2.0),
                delta2: self.delta2.unwrap_or(-2.0),
                gamma: self.gamma.unwrap_or(0.5),
                pump: match pump {
                    PumpSpec::Absolute(e) => e,
                    PumpSpec::Fraction(_) => f64::NAN,
                },
                n_th: self.n_th.unwrap_or(1e8),
            };
            (params, pump, None)
        };
        if let PumpSpec::Absolute(_) = pump {
            params.validate()?;
        }

        let run = RunSpec {
            dt: self.dt.unwrap_or(1e-3),
            t_transient: self.t_transient.unwrap_or(200.0),
            t_total: self.t_total.unwrap_or(5000.0),
            record_stride: self.record_stride.unwrap_or(50),
            trajectories: self.trajectories.unwrap_or(4),
            seed: self.seed.unwrap_or(1),
            blocks: self.blocks.unwrap_or(16),
            initial: self.initial.unwrap_or(InitialKind::Steady),
            perturbation_mode: self.perturbation_mode.unwrap_or(30),
            perturbation_amplitude: self.perturbation_amplitude.unwrap_or(1e-3),
            noise: self.noise.unwrap_or(true),
            save_snapshots: self.save_snapshots.unwrap_or(false),
        };
        for (name, v) in [("run.dt", run.dt), ("run.t_total", run.t_total)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Config(format!(
                    "\"{name}\" must be a positive number, got {v}"
                )));
            }
        }
        if !run.perturbation_amplitude.is_finite() {
            return Err(CliError::Config(
                "\"run.perturbation_amplitude\" must be finite".into(),
            ));
        }
        if !(run.t_transient.is_finite() && run.t_transient >= 0.0) {
            return Err(CliError::Config(format!(
                "\"run.t_transient\" must be non-negative, got {}",
                run.t_transient
            )));
        }
        if run.record_stride == 0 {
            return Err(CliError::Config("\"run.record_stride\" must be at least 1".into()));
        }
        if run.trajectories == 0 {
            return Err(CliError::Config("\"run.trajectories\" must be at least 1".into()));
        }
        if run.blocks < 2 {
            return Err(CliError::Config("\"run.blocks\" must be at least 2".into()));
        }

        let linear = LinearSpec {
            k_max: self.k_max.unwrap_or(4.0),
            pump_max: self.pump_max.unwrap_or(30.0),
            spectrum_points: self.spectrum_points.unwrap_or(1024),
            spectrum_k_max: self.spectrum_k_max.unwrap_or(0.0),
        };
        if !(linear.k_max.is_finite() && linear.k_max > 0.0) {
            return Err(CliError::Config(format!(
                "\"linear.k_max\" must be positive, got {}",
                linear.k_max
            )));
        }
        if linear.spectrum_points < 2 {
            return Err(CliError::Config(
                "\"linear.spectrum_points\" must be at least 2".into(),
            ));
        }

        let bifurcation = BifurcationSpec {
            delta2_min: self.delta2_min.unwrap_or(-6.0),
            delta2_max: self.delta2_max.unwrap_or(8.0),
            delta2_step: self.delta2_step.unwrap_or(0.25),
        };
        if !(bifurcation.delta2_step.is_finite() && bifurcation.delta2_step > 0.0) {
            return Err(CliError::Config(format!(
                "\"bifurcation.delta2_step\" must be positive, got {}",
                bifurcation.delta2_step
            )));
        }
        if bifurcation.delta2_max < bifurcation.delta2_min {
            return Err(CliError::Config(
                "\"bifurcation.delta2_max\" must be >= \"bifurcation.delta2_min\"".into(),
            ));
        }

        Ok(JobSpec {
            params,
            pump,
            physical,
            grid_modes: self.grid_modes.unwrap_or(256),
            grid_length: self.grid_length.unwrap_or(103.057),
            run,
            linear,
            bifurcation,
            analyze_inputs: self.analyze_inputs.unwrap_or_default(),
            figure_monte_carlo: self.figure_monte_carlo.unwrap_or(true),
            figure_fractions: self.figure_fractions.unwrap_or_default(),
            output_directory: self.output_directory,
        })
    }
}

/// Read, parse and resolve a config file; `None` resolves pure defaults.
pub fn load(path: Option<&std::path::Path>) -> CliResult<(RawConfig, JobSpec)> {
    let raw = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| {
                CliError::Config(format!("cannot read config {}: {e}", p.display()))
            })?;
            parse_config(&text)?
        }
        None => RawConfig::default(),
    };
    let spec = raw.clone().resolve()?;
    Ok((raw, spec))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_echoes_every_default() {
        let raw = parse_config(
            "[params]\ndelta1 = 2.0\ndelta2 = -2.0\ngamma = 0.5\npump = 7.4\nn_th = 1e8\n",
        )
        .unwrap();
        let spec = raw.resolve().unwrap();
        let echo = spec.resolved_toml();
        for needle in [
            "delta1 = 2",
            "pump = 7.4",
            "modes = 256",
            "length = 103.057",
            "dt = 0.001",
            "record_stride = 50",
            "blocks = 16",
            "initial = \"steady\"",
            "k_max = 4",
            "delta2_step = 0.25",
        ] {
            assert!(echo.contains(needle), "echo missing {needle:?} in:\n{echo}");
        }
        // the echo re-parses to the identical spec
        let spec2 = parse_config(&echo).unwrap().resolve().unwrap();
        assert_eq!(format!("{spec:?}"), format!("{spec2:?}"));
    }

    #[test]
    fn unknown_key_is_named_with_its_nearest_neighbor() {
        let err = parse_config("[params]\nDelta3 = 1.0\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("Delta3"), "{msg}");
        assert!(msg.contains("delta1") || msg.contains("delta2"), "{msg}");

        let err = parse_config("[gird]\nmodes = 8\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("gird") && msg.contains("grid"), "{msg}");
    }

    #[test]
    fn pump_and_fraction_are_mutually_exclusive() {
        let raw = parse_config("[params]\npump = 7.4\npump_fraction = 0.99\n").unwrap();
        assert!(raw.resolve().is_err());
    }

    #[test]
    fn fraction_resolves_against_a_supplied_threshold() {
        let raw = parse_config("[params]\npump_fraction = 0.5\n").unwrap();
        let mut spec = raw.resolve().unwrap();
        assert!(spec.absolute_pump().is_none());
        spec.resolve_pump(10.0);
        assert_eq!(spec.params.pump, 5.0);
    }

    #[test]
    fn type_errors_name_the_key() {
        let err = parse_config("[run]\nseed = \"seven\"\n").unwrap_err();
        assert!(err.to_string().contains("run.seed"), "{err}");
        let err = parse_config("[run]\nseed = -3\n").unwrap_err();
        assert!(err.to_string().contains("non-negative"), "{err}");
    }

    #[test]
    fn physical_section_excludes_dimensionless_params() {
        let text = "[params]\npump = 1.0\n\n[physical]\ngamma1 = 1e8\n";
        let err = parse_config(text).unwrap_err();
        assert!(err.to_string().contains("mutually exclusive"), "{err}");
    }
}
