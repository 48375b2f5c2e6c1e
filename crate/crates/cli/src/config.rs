//! Run configuration shared by the JSON config file and the command-line flags.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    PsffFinite,
    PsffTdl,
    Reference,
    VerifyGates,
    VerifyTransfer,
    DeviationReport,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::PsffFinite => "psff-finite",
            Command::PsffTdl => "psff-tdl",
            Command::Reference => "reference",
            Command::VerifyGates => "verify-gates",
            Command::VerifyTransfer => "verify-transfer",
            Command::DeviationReport => "deviation-report",
        }
    }

    /// Keys a command reads; anything else set in the config is an error.
    fn keys(self) -> &'static [&'static str] {
        match self {
            Command::PsffFinite => {
                &["d", "L", "l", "t_min", "t_max", "t_stride", "J", "sigma", "seed", "n_samples", "output"]
            }
            Command::PsffTdl => {
                &["d", "l", "t_min", "t_max", "t_stride", "output", "dump_gram", "dump_weingarten", "dump_tmatrix"]
            }
            Command::Reference => &["d", "L", "l", "t_min", "t_max", "t_stride", "model", "finite_d", "output"],
            Command::VerifyGates => &["d", "J", "sigma", "seed", "n_samples", "output"],
            Command::VerifyTransfer => &["d", "t_max", "J", "sigma", "seed", "n_samples", "realizations", "output"],
            Command::DeviationReport => &["d", "l", "t_max", "output"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    CueFinite,
    CueTdl,
    PoissonProduct,
    PoissonCueStates,
}

/// Flat run configuration. Every key is optional so that a file and the
/// flags can each supply part of it; [`RunConfig::resolve`] fills defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    /// Local Hilbert-space dimension.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// Number of two-site cells; the ring has 2L sites.
    #[arg(long = "L")]
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub half_chain: Option<usize>,
    /// Subsystem half-size; A holds the first 2l sites.
    #[arg(long = "l")]
    #[serde(rename = "l", skip_serializing_if = "Option::is_none")]
    pub half_subsystem: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_min: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_stride: Option<u64>,
    /// Ising coupling of the base gate, in (0, pi].
    #[arg(long = "J")]
    #[serde(rename = "J", skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    /// Standard deviation of the on-site disorder angles.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
    /// Disorder realizations for the network identity in verify-transfer.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub realizations: Option<usize>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<Model>,
    /// Use the finite-dimension value of the Haar-state Poisson model.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finite_d: Option<bool>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dump_gram: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dump_weingarten: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dump_tmatrix: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),+) => {
        RunConfig { $($field: $top.$field.clone().or($base.$field.clone())),+ }
    };
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("reading {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Fields set in `top` win over those in `self`.
    pub fn overlay(&self, top: &RunConfig) -> RunConfig {
        overlay!(
            self,
            top,
            command,
            d,
            half_chain,
            half_subsystem,
            t_min,
            t_max,
            t_stride,
            coupling,
            sigma,
            seed,
            n_samples,
            realizations,
            model,
            finite_d,
            output,
            dump_gram,
            dump_weingarten,
            dump_tmatrix
        )
    }

    fn set_keys(&self) -> Vec<String> {
        match serde_json::to_value(self).expect("config serializes") {
            serde_json::Value::Object(map) => map.keys().filter(|k| *k != "command").cloned().collect(),
            _ => Vec::new(),
        }
    }

    /// Checks the keys against `command`, fills defaults and validates ranges.
    pub fn resolve(&self, command: Command) -> Result<RunConfig, CliError> {
        if let Some(c) = self.command {
            if c != command {
                return Err(CliError::Config(format!("config is for {}, not {}", c.name(), command.name())));
            }
        }
        let allowed = command.keys();
        let stray: Vec<String> = self.set_keys().into_iter().filter(|k| !allowed.contains(&k.as_str())).collect();
        if !stray.is_empty() {
            return Err(CliError::Config(format!("{} does not use: {}", command.name(), stray.join(", "))));
        }
        let mut c = self.clone();
        c.command = Some(command);
        let default_t_max = match command {
            Command::PsffFinite => 2048,
            Command::VerifyTransfer => 3,
            Command::DeviationReport => 60,
            _ => 200,
        };
        let default_samples = match command {
            Command::PsffFinite => 100,
            Command::VerifyGates => 20,
            _ => 500,
        };
        let fill = |key: &str| allowed.contains(&key);
        macro_rules! default {
            ($field:ident, $key:expr, $value:expr) => {
                if fill($key) && c.$field.is_none() {
                    c.$field = Some($value);
                }
            };
        }
        default!(d, "d", 2);
        default!(half_chain, "L", 4);
        default!(half_subsystem, "l", 1);
        default!(t_min, "t_min", 1);
        default!(t_max, "t_max", default_t_max);
        default!(t_stride, "t_stride", 1);
        default!(coupling, "J", 0.2);
        default!(sigma, "sigma", 1.0);
        default!(seed, "seed", 1);
        default!(n_samples, "n_samples", default_samples);
        default!(realizations, "realizations", 20);
        default!(model, "model", Model::CueFinite);
        default!(finite_d, "finite_d", false);
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if let Some(d) = self.d {
            if !(2..=16).contains(&d) {
                return bad(format!("d={d} outside 2..=16"));
            }
        }
        if let Some(n) = self.half_chain {
            if n == 0 {
                return bad("L must be positive".into());
            }
            if let Some(l) = self.half_subsystem {
                if l > n {
                    return bad(format!("l={l} exceeds L={n}"));
                }
            }
        }
        if let (Some(lo), Some(hi)) = (self.t_min, self.t_max) {
            if lo == 0 || lo > hi {
                return bad(format!("need 1 <= t_min <= t_max, got {lo}..{hi}"));
            }
        }
        if self.t_max == Some(0) {
            return bad("t_max must be positive".into());
        }
        if self.t_stride == Some(0) {
            return bad("t_stride must be positive".into());
        }
        if let Some(j) = self.coupling {
            if !(j > 0.0 && j <= std::f64::consts::PI) {
                return bad(format!("J={j} outside (0, pi]"));
            }
        }
        if let Some(s) = self.sigma {
            if !(s >= 0.0 && s.is_finite()) {
                return bad(format!("sigma={s} must be finite and non-negative"));
            }
        }
        if self.n_samples == Some(0) || self.realizations == Some(0) {
            return bad("sample counts must be positive".into());
        }
        Ok(())
    }
}
