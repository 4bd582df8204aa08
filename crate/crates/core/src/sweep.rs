//! Field sweeps: model → ground state → two-site density matrix →
//! concurrence and Lewenstein-Sanpera decomposition → magnetizations.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entanglement::{concurrence, ls_decompose_with, BellMode, LsOptions};
use crate::error::{Error, Result};
use crate::ground_solver::{idmrg_ground_state, lanczos_ground_state, DmrgConfig};
use crate::observables::{reduced_density_matrix, MagnetizationRecord, TwoQubitDensityMatrix, RDM_TOL};
use crate::spin_model::{build_hamiltonian, Boundary, Frame, ModelParams, MAX_ED_SITES, MAX_PIN};

/// Exact CSV header.
pub const CSV_HEADER: &str =
    "h,energy,sx,sz_stag,c_rho,c_rho_e,one_minus_lambda,a2,b2,c2,d2,separable,backend,pin_mode,error";
/// Placeholder for undefined values.
pub const UNDEFINED: &str = "NA";
/// Summary threshold on `a²`.
pub const A2_THRESHOLD: f64 = 1e-3;
/// ED pins: large enough that a 16-site chain stays in one symmetry-broken
/// branch up to the critical field.
pub const ED_PINS: [f64; 2] = [1e-2, 5e-3];
/// iDMRG pins: the infinite chain never restores the symmetry.
pub const IDMRG_PINS: [f64; 3] = [1e-2, 1e-3, 1e-4];
const LANCZOS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Ed,
    Idmrg,
}

impl Backend {
    pub fn label(self) -> &'static str {
        match self {
            Backend::Ed => "ed",
            Backend::Idmrg => "idmrg",
        }
    }

    pub fn default_pins(self) -> Vec<f64> {
        match self {
            Backend::Ed => ED_PINS.to_vec(),
            Backend::Idmrg => IDMRG_PINS.to_vec(),
        }
    }
}

impl FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "ed" => Ok(Backend::Ed),
            "idmrg" => Ok(Backend::Idmrg),
            other => Err(Error::Config(format!("unknown backend '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!("unknown format '{other}'"))),
        }
    }
}

fn parse_frame(s: &str) -> Result<Frame> {
    match s.trim() {
        "lab" => Ok(Frame::Lab),
        "ordered" => Ok(Frame::Ordered),
        other => Err(Error::Config(format!("unknown frame '{other}'"))),
    }
}

pub fn parse_boundary(s: &str) -> Result<Boundary> {
    match s.trim() {
        "open" => Ok(Boundary::Open),
        "periodic" => Ok(Boundary::Periodic),
        other => Err(Error::Config(format!("unknown boundary '{other}'"))),
    }
}

/// How the symmetry-broken branch was selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PinMode {
    Unpinned,
    /// A single pin value, no extrapolation.
    Pinned,
    /// Linear extrapolation to zero pin from the two smallest values.
    Extrapolated,
}

impl PinMode {
    pub fn label(self) -> &'static str {
        match self {
            PinMode::Unpinned => "unpinned",
            PinMode::Pinned => "pinned",
            PinMode::Extrapolated => "extrapolated",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub j_par: f64,
    pub j_perp: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub h_steps: usize,
    pub n_sites: usize,
    pub backend: Backend,
    pub kept_states: usize,
    /// `None` selects the backend default; an empty list disables pinning.
    pub pin_sequence: Option<Vec<f64>>,
    pub pair_separation: usize,
    pub output_path: Option<PathBuf>,
    pub format: OutputFormat,
    pub seed: u64,
    pub frame: Frame,
    /// Chain boundary of the ed backend.
    pub boundary: Boundary,
    /// Multi-start count of the decomposition.
    pub ls_starts: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            j_par: 0.0,
            j_perp: 1.0,
            h_min: 0.0,
            h_max: 1.0,
            h_steps: 101,
            n_sites: 16,
            backend: Backend::Ed,
            kept_states: 64,
            pin_sequence: None,
            pair_separation: 1,
            output_path: None,
            format: OutputFormat::Csv,
            seed: 0,
            frame: Frame::Ordered,
            boundary: Boundary::Open,
            ls_starts: LsOptions::default().starts,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if !(self.h_min.is_finite() && self.h_max.is_finite()) || self.h_min > self.h_max {
            return bad(format!("need h_min <= h_max, got [{}, {}]", self.h_min, self.h_max));
        }
        if self.h_steps < 1 {
            return bad("h_steps must be at least 1".into());
        }
        if !matches!(self.pair_separation, 1 | 2) {
            return bad(format!("pair separation must be 1 or 2, got {}", self.pair_separation));
        }
        if self.pair_separation == 2 && self.backend != Backend::Ed {
            return bad("pair separation 2 requires the ed backend".into());
        }
        if self.boundary == Boundary::Periodic && self.backend != Backend::Ed {
            return bad("a periodic boundary requires the ed backend".into());
        }
        let mut sorted = self.pins();
        if sorted.iter().any(|&p| !(p > 0.0 && p <= MAX_PIN)) {
            return bad(format!("pin values must lie in (0, {MAX_PIN}]"));
        }
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return bad("pin values must be distinct".into());
        }
        if self.ls_starts < 1 {
            return bad("ls_starts must be at least 1".into());
        }
        match self.backend {
            Backend::Ed => {
                if self.n_sites < 2 + self.pair_separation || self.n_sites > MAX_ED_SITES {
                    return bad(format!("ed needs {} to {MAX_ED_SITES} sites", 2 + self.pair_separation));
                }
            }
            Backend::Idmrg => DmrgConfig::default().with_kept_states(self.kept_states).validate()?,
        }
        Ok(())
    }

    pub fn fields(&self) -> Vec<f64> {
        if self.h_steps == 1 {
            return vec![self.h_min];
        }
        let step = (self.h_max - self.h_min) / (self.h_steps - 1) as f64;
        (0..self.h_steps).map(|k| self.h_min + step * k as f64).collect()
    }

    pub fn pins(&self) -> Vec<f64> {
        self.pin_sequence.clone().unwrap_or_else(|| self.backend.default_pins())
    }

    pub fn pin_mode(&self) -> PinMode {
        match self.pins().len() {
            0 => PinMode::Unpinned,
            1 => PinMode::Pinned,
            _ => PinMode::Extrapolated,
        }
    }

    /// Site pair probed on the ED chain (0-based).
    pub fn ed_pair(&self) -> (usize, usize) {
        let i = self.n_sites / 2 - 1;
        (i, i + self.pair_separation)
    }
}

/// Optional settings from a config file or the command line; set fields
/// override those of the configuration they are applied to.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigOverrides {
    pub j_par: Option<f64>,
    pub j_perp: Option<f64>,
    pub h_min: Option<f64>,
    pub h_max: Option<f64>,
    pub h_steps: Option<usize>,
    pub n_sites: Option<usize>,
    pub backend: Option<Backend>,
    pub kept_states: Option<usize>,
    pub pin_sequence: Option<Vec<f64>>,
    pub pair_separation: Option<usize>,
    pub output_path: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub seed: Option<u64>,
    pub frame: Option<Frame>,
    pub boundary: Option<Boundary>,
    pub ls_starts: Option<usize>,
}

impl ConfigOverrides {
    pub fn apply(&self, mut cfg: SweepConfig) -> SweepConfig {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = &self.$f { cfg.$f = v.clone(); } )* };
        }
        set!(j_par, j_perp, h_min, h_max, h_steps, n_sites, backend, kept_states, pair_separation, format, seed, frame, boundary, ls_starts);
        if let Some(p) = &self.pin_sequence {
            cfg.pin_sequence = Some(p.clone());
        }
        if let Some(p) = &self.output_path {
            cfg.output_path = Some(p.clone());
        }
        cfg
    }

    /// Flat `key = value` text; `#` starts a comment. Keys are the long flag
    /// names, with `-` or `_`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim().replace('_', "-");
            let value = value.trim();
            let num = |what: &str| -> Result<f64> {
                value.parse::<f64>().map_err(|_| Error::Config(format!("line {}: bad {what} '{value}'", lineno + 1)))
            };
            let int = |what: &str| -> Result<usize> {
                value.parse::<usize>().map_err(|_| Error::Config(format!("line {}: bad {what} '{value}'", lineno + 1)))
            };
            match key.as_str() {
                "j-par" => out.j_par = Some(num("j-par")?),
                "j-perp" => out.j_perp = Some(num("j-perp")?),
                "h-min" => out.h_min = Some(num("h-min")?),
                "h-max" => out.h_max = Some(num("h-max")?),
                "h-steps" => out.h_steps = Some(int("h-steps")?),
                "sites" => out.n_sites = Some(int("sites")?),
                "backend" => out.backend = Some(value.parse()?),
                "kept-states" => out.kept_states = Some(int("kept-states")?),
                "pin" => out.pin_sequence = Some(parse_pin_list(value)?),
                "separation" => out.pair_separation = Some(int("separation")?),
                "out" => out.output_path = Some(PathBuf::from(value)),
                "format" => out.format = Some(value.parse()?),
                "seed" => {
                    out.seed = Some(
                        value.parse().map_err(|_| Error::Config(format!("line {}: bad seed", lineno + 1)))?,
                    )
                }
                "frame" => out.frame = Some(parse_frame(value)?),
                "boundary" => out.boundary = Some(parse_boundary(value)?),
                "ls-starts" => out.ls_starts = Some(int("ls-starts")?),
                other => return Err(Error::Config(format!("line {}: unknown key '{other}'", lineno + 1))),
            }
        }
        Ok(out)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }
}

/// Comma-separated pin values; an empty list or `none` disables pinning.
pub fn parse_pin_list(s: &str) -> Result<Vec<f64>> {
    let s = s.trim();
    if s.is_empty() || s == "none" {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad pin value '{v}'"))))
        .collect()
}

/// Observables at one pin value, before extrapolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawPoint {
    pub pin: f64,
    pub energy: f64,
    pub sx: f64,
    pub sz_stag: f64,
    pub c_rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub h: f64,
    /// Energy per site.
    pub energy: Option<f64>,
    pub sx: Option<f64>,
    pub sz_stag: Option<f64>,
    pub c_rho: Option<f64>,
    pub c_rho_e: Option<f64>,
    pub one_minus_lambda: Option<f64>,
    pub a2: Option<f64>,
    pub b2: Option<f64>,
    pub c2: Option<f64>,
    pub d2: Option<f64>,
    pub separable: Option<bool>,
    pub backend: Backend,
    pub pin_mode: PinMode,
    pub error: Option<String>,
    pub raw: Vec<RawPoint>,
}

impl SweepRow {
    fn failed(h: f64, backend: Backend, pin_mode: PinMode, err: &Error) -> Self {
        Self {
            h,
            energy: None,
            sx: None,
            sz_stag: None,
            c_rho: None,
            c_rho_e: None,
            one_minus_lambda: None,
            a2: None,
            b2: None,
            c2: None,
            d2: None,
            separable: None,
            backend,
            pin_mode,
            error: Some(err.to_string()),
            raw: Vec::new(),
        }
    }

    pub fn weights(&self) -> Option<[f64; 4]> {
        Some([self.a2?, self.b2?, self.c2?, self.d2?])
    }

    /// `|C(ρ) − (1 − Λ) C(ρ_e)|` on an inseparable row.
    pub fn certificate_gap(&self) -> Option<f64> {
        Some((self.c_rho? - self.one_minus_lambda? * self.c_rho_e?).abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub argmax_c_rho_e: Option<f64>,
    /// Deepest interior local minimum over inseparable rows.
    pub argmin_one_minus_lambda: Option<f64>,
    pub argmax_c_rho: Option<f64>,
    /// First field at which `a²` drops below [`A2_THRESHOLD`].
    pub a2_vanishes_at: Option<f64>,
    pub error_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub summary: SweepSummary,
}

struct PointState {
    energy: f64,
    rho: TwoQubitDensityMatrix,
}

fn solve_point(cfg: &SweepConfig, h: f64, pin: f64) -> Result<PointState> {
    let params = ModelParams::new(cfg.j_par, cfg.j_perp, h, cfg.n_sites).with_pin(pin).with_frame(cfg.frame);
    match cfg.backend {
        Backend::Ed => {
            let hamiltonian = build_hamiltonian(&params.with_boundary(cfg.boundary))?;
            let ground = lanczos_ground_state(&hamiltonian, LANCZOS_TOL, cfg.seed)?;
            let (i, j) = cfg.ed_pair();
            Ok(PointState { energy: ground.energy / cfg.n_sites as f64, rho: reduced_density_matrix(&ground, i, j)? })
        }
        Backend::Idmrg => {
            let dmrg = DmrgConfig { kept_states: cfg.kept_states, seed: cfg.seed, ..Default::default() };
            let result = idmrg_ground_state(&params, &dmrg)?;
            Ok(PointState { energy: result.energy_per_site, rho: result.central_rdm })
        }
    }
}

/// Value at zero from values at `e1` and `e2`.
pub fn extrapolate_to_zero(e1: f64, v1: f64, e2: f64, v2: f64) -> f64 {
    v1 - e1 * (v2 - v1) / (e2 - e1)
}

fn compute_row(cfg: &SweepConfig, h: f64) -> Result<SweepRow> {
    let mut pins = cfg.pins();
    pins.sort_by(f64::total_cmp);
    if pins.is_empty() {
        pins.push(0.0);
    }
    let mut raw = Vec::with_capacity(pins.len());
    let mut states = Vec::with_capacity(pins.len());
    for &pin in &pins {
        let s = solve_point(cfg, h, pin)?;
        let m = MagnetizationRecord::from_rdm(&s.rho);
        raw.push(RawPoint { pin, energy: s.energy, sx: m.sx_uniform, sz_stag: m.sz_staggered, c_rho: concurrence(&s.rho)? });
        states.push(s);
    }

    let (energy, rho) = if states.len() >= 2 {
        let (e1, e2) = (pins[0], pins[1]);
        let m = states[0].rho.elements - (states[1].rho.elements - states[0].rho.elements) * Complex64::from(e1 / (e2 - e1));
        let rho = TwoQubitDensityMatrix::from_matrix(m, states[0].rho.site_pair);
        (extrapolate_to_zero(e1, states[0].energy, e2, states[1].energy), rho)
    } else {
        (states[0].energy, states[0].rho.clone())
    };
    let rho = if rho.validate().is_ok() { rho } else { rho.project_to_physical() };
    if rho.min_eigenvalue() < -RDM_TOL {
        return Err(Error::Numerical("density matrix not physical after projection".into()));
    }

    let mags = MagnetizationRecord::from_rdm(&rho);
    let opts = LsOptions { mode: BellMode::Real, starts: cfg.ls_starts, seed: cfg.seed, ..Default::default() };
    let ls = ls_decompose_with(&rho, &opts)?;
    let weights = ls.bell.map(|b| b.weights());
    Ok(SweepRow {
        h,
        energy: Some(energy),
        sx: Some(mags.sx_uniform),
        sz_stag: Some(mags.sz_staggered),
        c_rho: Some(if ls.separable { 0.0 } else { ls.c_rho }),
        c_rho_e: ls.c_rho_e,
        one_minus_lambda: Some(ls.one_minus_lambda()),
        a2: weights.map(|w| w[0]),
        b2: weights.map(|w| w[1]),
        c2: weights.map(|w| w[2]),
        d2: weights.map(|w| w[3]),
        separable: Some(ls.separable),
        backend: cfg.backend,
        pin_mode: cfg.pin_mode(),
        error: None,
        raw,
    })
}

/// One row per field value, in grid order; per-point failures are recorded
/// in the row's `error` and the sweep continues.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let rows: Vec<SweepRow> = cfg
        .fields()
        .into_par_iter()
        .map(|h| {
            compute_row(cfg, h).unwrap_or_else(|e| SweepRow::failed(h, cfg.backend, cfg.pin_mode(), &e))
        })
        .collect();
    let summary = summarize(&rows);
    Ok(SweepOutput { rows, summary })
}

fn arg_extreme(rows: &[SweepRow], key: impl Fn(&SweepRow) -> Option<f64>, max: bool) -> Option<f64> {
    rows.iter()
        .filter_map(|r| key(r).map(|v| (r.h, v)))
        .fold(None, |best: Option<(f64, f64)>, (h, v)| match best {
            Some((_, bv)) if (max && v <= bv) || (!max && v >= bv) => best,
            _ => Some((h, v)),
        })
        .map(|(h, _)| h)
}

pub fn summarize(rows: &[SweepRow]) -> SweepSummary {
    let inseparable = |r: &SweepRow| r.separable == Some(false);
    let omega = |r: &SweepRow| if inseparable(r) { r.one_minus_lambda } else { None };

    // Interior local minima of 1 − Λ along the grid.
    let local_minima: Vec<SweepRow> = rows
        .windows(3)
        .filter(|w| match (omega(&w[0]), omega(&w[1]), omega(&w[2])) {
            (Some(a), Some(b), Some(c)) => b <= a && b <= c && (b < a || b < c),
            _ => false,
        })
        .map(|w| w[1].clone())
        .collect();
    let argmin_one_minus_lambda = if local_minima.is_empty() {
        arg_extreme(rows, omega, false)
    } else {
        arg_extreme(&local_minima, omega, false)
    };

    SweepSummary {
        argmax_c_rho_e: arg_extreme(rows, |r| if inseparable(r) { r.c_rho_e } else { None }, true),
        argmin_one_minus_lambda,
        argmax_c_rho: arg_extreme(rows, |r| r.c_rho, true),
        a2_vanishes_at: rows.iter().find(|r| r.a2.is_some_and(|a| a < A2_THRESHOLD)).map(|r| r.h),
        error_rows: rows.iter().filter(|r| r.error.is_some()).count(),
    }
}

/// `%.12g`-style rendering: 12 significant digits, trailing zeros trimmed.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{:.*}", decimals, x);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let m = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

struct Cell<'a>(Option<&'a f64>);

impl fmt::Display for Cell<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(v) => f.write_str(&format_number(*v)),
            None => f.write_str(UNDEFINED),
        }
    }
}

fn csv_text(s: &str) -> String {
    s.chars().map(|c| match c {
        ',' => ';',
        '\n' | '\r' => ' ',
        c => c,
    })
    .collect()
}

pub fn render_csv(rows: &[SweepRow]) -> String {
    let mut out = String::with_capacity(128 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let sep = match r.separable {
            Some(true) => "true",
            Some(false) => "false",
            None => UNDEFINED,
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            format_number(r.h),
            Cell(r.energy.as_ref()),
            Cell(r.sx.as_ref()),
            Cell(r.sz_stag.as_ref()),
            Cell(r.c_rho.as_ref()),
            Cell(r.c_rho_e.as_ref()),
            Cell(r.one_minus_lambda.as_ref()),
            Cell(r.a2.as_ref()),
            Cell(r.b2.as_ref()),
            Cell(r.c2.as_ref()),
            Cell(r.d2.as_ref()),
            sep,
            r.backend.label(),
            r.pin_mode.label(),
            r.error.as_deref().map(csv_text).unwrap_or_default(),
        ));
    }
    out
}

pub fn render_json(output: &SweepOutput) -> Result<String> {
    let mut s = serde_json::to_string_pretty(output)?;
    s.push('\n');
    Ok(s)
}

pub fn render(output: &SweepOutput, format: OutputFormat) -> Result<String> {
    if output.rows.is_empty() {
        return Err(Error::InvalidParams("no rows to emit".into()));
    }
    match format {
        OutputFormat::Csv => Ok(render_csv(&output.rows)),
        OutputFormat::Json => render_json(output),
    }
}

/// Writes the rendered output to `path`.
pub fn emit(output: &SweepOutput, format: OutputFormat, path: &Path) -> Result<()> {
    fs::write(path, render(output, format)?)?;
    Ok(())
}
