//! Tables of PSFF values and their CSV form.

use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

/// How a PSFF value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Finite,
    Tdl,
    CueFinite,
    CueTdl,
    PoissonProduct,
    PoissonCueStates,
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::Finite => "finite",
            Method::Tdl => "tdl",
            Method::CueFinite => "cue-finite",
            Method::CueTdl => "cue-tdl",
            Method::PoissonProduct => "poisson-product",
            Method::PoissonCueStates => "poisson-cue-states",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// One row; exact methods report `stderr = 0` and `n_samples = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsffRow {
    pub t: u64,
    pub value: f64,
    pub stderr: f64,
    pub n_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsffSeries {
    pub method: Method,
    pub rows: Vec<PsffRow>,
}

pub const CSV_HEADER: &str = "t,value,stderr,n_samples,method";

impl PsffSeries {
    pub fn new(method: Method) -> Self {
        PsffSeries { method, rows: Vec::new() }
    }

    pub fn push(&mut self, t: u64, value: f64, stderr: f64, n_samples: usize) {
        self.rows.push(PsffRow { t, value, stderr, n_samples });
    }

    pub fn value_at(&self, t: u64) -> Option<&PsffRow> {
        self.rows.iter().find(|r| r.t == t)
    }

    /// Writes `#`-prefixed comment lines, the header and one line per row.
    /// Values use Rust's shortest round-trip float formatting.
    pub fn write_csv<W: Write + ?Sized>(&self, out: &mut W, comments: &[String]) -> io::Result<()> {
        for c in comments {
            for line in c.lines() {
                writeln!(out, "# {line}")?;
            }
        }
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(out, "{},{:e},{:e},{},{}", r.t, r.value, r.stderr, r.n_samples, self.method)?;
        }
        Ok(())
    }
}

/// Inclusive `t` grid `t_min, t_min + stride, ... <= t_max`.
pub fn time_grid(t_min: u64, t_max: u64, stride: u64) -> Vec<u64> {
    if stride == 0 || t_min > t_max {
        return Vec::new();
    }
    (t_min..=t_max).step_by(stride as usize).collect()
}
