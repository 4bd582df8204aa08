use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use chainent::spin_model::Frame;
use chainent::sweep::{parse_boundary, parse_pin_list, render, run_sweep, Backend, ConfigOverrides, OutputFormat, SweepConfig};
use chainent::{Error, Result};

/// Sweep the transverse field of an XXZ chain and report two-site
/// entanglement (concurrence, Lewenstein-Sanpera decomposition).
#[derive(Debug, Parser)]
#[command(name = "chainent", version)]
struct Cli {
    #[arg(long, allow_hyphen_values = true)]
    j_par: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    j_perp: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    h_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    h_max: Option<f64>,
    #[arg(long)]
    h_steps: Option<usize>,
    /// Chain length (ed) or ignored (idmrg).
    #[arg(long)]
    sites: Option<usize>,
    /// `ed` or `idmrg`.
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    kept_states: Option<usize>,
    /// Comma-separated pin fields, or `none`.
    #[arg(long)]
    pin: Option<String>,
    /// Distance between the probed sites: 1 or 2.
    #[arg(long)]
    separation: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `csv` or `json`.
    #[arg(long)]
    format: Option<String>,
    /// `key = value` file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// `ordered` or `lab`.
    #[arg(long)]
    frame: Option<String>,
    /// `open` or `periodic` (ed only).
    #[arg(long)]
    boundary: Option<String>,
    #[arg(long)]
    ls_starts: Option<usize>,
}

impl Cli {
    fn overrides(&self) -> Result<ConfigOverrides> {
        Ok(ConfigOverrides {
            j_par: self.j_par,
            j_perp: self.j_perp,
            h_min: self.h_min,
            h_max: self.h_max,
            h_steps: self.h_steps,
            n_sites: self.sites,
            backend: self.backend.as_deref().map(str::parse::<Backend>).transpose()?,
            kept_states: self.kept_states,
            pin_sequence: self.pin.as_deref().map(parse_pin_list).transpose()?,
            pair_separation: self.separation,
            output_path: self.out.clone(),
            format: self.format.as_deref().map(str::parse::<OutputFormat>).transpose()?,
            seed: self.seed,
            frame: match self.frame.as_deref() {
                None => None,
                Some("ordered") => Some(Frame::Ordered),
                Some("lab") => Some(Frame::Lab),
                Some(other) => return Err(Error::Config(format!("unknown frame '{other}'"))),
            },
            boundary: self.boundary.as_deref().map(parse_boundary).transpose()?,
            ls_starts: self.ls_starts,
        })
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let mut cfg = SweepConfig::default();
    if let Some(path) = &cli.config {
        cfg = ConfigOverrides::from_file(path)?.apply(cfg);
    }
    cfg = cli.overrides()?.apply(cfg);

    let output = run_sweep(&cfg)?;
    let text = render(&output, cfg.format)?;
    match &cfg.output_path {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    eprintln!("{}", serde_json::to_string(&output.summary)?);
    Ok(output.summary.error_rows == 0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
