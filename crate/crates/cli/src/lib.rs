//! Subcommands of the `psff` binary.

pub mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use matrix_csv::write_matrix;
use psff::circuit::{psff_ensemble, CircuitSpec};
use psff::gates::{
    disordered_gate, dual_unitarity_residual, random_du_gate, unitality_residuals, unitarity_residual, DisorderSpec,
};
use psff::linalg::MemoryBudget;
use psff::rmt::{
    psff_cue_finite, psff_cue_tdl, psff_poisson_cue_states, psff_poisson_cue_states_finite, psff_poisson_product,
    EnsembleParams,
};
use psff::rng::{stream_rng, Stream};
use psff::series::{time_grid, Method, PsffSeries};
use psff::tdl::{deviation_report, gram, psff_tdl, t_matrix, weingarten};
use psff::transfer::{certificates, CertificateConfig};
use psff::PsffError;
use serde::Serialize;
use thiserror::Error;

pub use config::{Command, Model, RunConfig};

/// Gate certificates pass below this residual.
pub const GATE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Numeric(#[from] PsffError),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    /// A verification ran to completion and found failing checks.
    #[error("{0}")]
    ChecksFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ChecksFailed(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

/// Runs a resolved configuration and returns a one-line summary.
pub fn run(cfg: &RunConfig) -> Result<String, CliError> {
    let command = cfg.command.ok_or_else(|| CliError::Config("no command".into()))?;
    match command {
        Command::PsffFinite => psff_finite(cfg),
        Command::PsffTdl => psff_tdl_cmd(cfg),
        Command::Reference => reference(cfg),
        Command::VerifyGates => verify_gates(cfg),
        Command::VerifyTransfer => verify_transfer(cfg),
        Command::DeviationReport => deviation(cfg),
    }
}

/// Diagnostic document printed when a numerical kernel fails.
pub fn diagnostic(cfg: &RunConfig, error: &CliError) -> String {
    serde_json::json!({
        "status": "numeric-failure",
        "command": cfg.command.map(Command::name),
        "error": error.to_string(),
        "detail": format!("{error:?}"),
        "config": cfg,
    })
    .to_string()
}

fn get<T: Copy>(value: Option<T>, key: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Config(format!("missing {key}")))
}

fn with_output<F>(path: Option<&Path>, body: F) -> Result<String, CliError>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            body(&mut w)?;
            w.flush()?;
            Ok(format!(" -> {}", p.display()))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock)?;
            lock.flush()?;
            Ok(String::new())
        }
    }
}

/// Header comments: the configuration without file paths, and the seed.
fn provenance(cfg: &RunConfig) -> Vec<String> {
    let mut bare = cfg.clone();
    bare.output = None;
    bare.dump_gram = None;
    bare.dump_weingarten = None;
    bare.dump_tmatrix = None;
    let mut lines = vec![format!("config: {}", bare.to_json())];
    if let Some(seed) = cfg.seed {
        lines.push(format!("seed: {seed}"));
    }
    lines
}

fn grid(cfg: &RunConfig) -> Result<Vec<u64>, CliError> {
    Ok(time_grid(get(cfg.t_min, "t_min")?, get(cfg.t_max, "t_max")?, get(cfg.t_stride, "t_stride")?))
}

fn write_series(cfg: &RunConfig, series: &PsffSeries) -> Result<String, CliError> {
    let comments = provenance(cfg);
    with_output(cfg.output.as_deref(), |w| series.write_csv(w, &comments))
}

fn psff_finite(cfg: &RunConfig) -> Result<String, CliError> {
    let spec = CircuitSpec::new(
        get(cfg.d, "d")?,
        get(cfg.half_chain, "L")?,
        get(cfg.half_subsystem, "l")?,
        get(cfg.coupling, "J")?,
        get(cfg.sigma, "sigma")?,
        get(cfg.seed, "seed")?,
        get(cfg.n_samples, "n_samples")?,
    )?;
    let series = psff_ensemble(&spec, &grid(cfg)?)?;
    let dest = write_series(cfg, &series)?;
    Ok(format!("psff-finite: {} rows, D={}, N={}{dest}", series.rows.len(), spec.dim()?, spec.n_samples))
}

mod matrix_csv {
    use std::io::{self, Write};
    use std::path::Path;

    /// Writes a real matrix as comma-separated rows.
    pub fn write_matrix(
        path: &Path,
        title: &str,
        rows: usize,
        cols: usize,
        entry: impl Fn(usize, usize) -> f64,
    ) -> io::Result<()> {
        let mut w = io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "# {title}")?;
        for r in 0..rows {
            let line: Vec<String> = (0..cols).map(|c| format!("{:e}", entry(r, c))).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        w.flush()
    }
}

fn psff_tdl_cmd(cfg: &RunConfig) -> Result<String, CliError> {
    let d = get(cfg.d, "d")?;
    let l = get(cfg.half_subsystem, "l")?;
    let mut series = PsffSeries::new(Method::Tdl);
    for t in grid(cfg)? {
        series.push(t, psff_tdl(t as usize, l, d)?, 0.0, 0);
    }
    let t = get(cfg.t_max, "t_max")? as usize;
    if let Some(p) = &cfg.dump_gram {
        let g = gram(t, d)?;
        write_matrix(p, &format!("Gram matrix, t={t}, d={d}"), t, t, |r, s| g.entries[(r, s)])?;
    }
    if let Some(p) = &cfg.dump_weingarten {
        let w = weingarten(t, d)?;
        write_matrix(p, &format!("Weingarten matrix, t={t}, d={d}"), t, t, |r, s| w.entries[(r, s)])?;
    }
    if let Some(p) = &cfg.dump_tmatrix {
        let tm = t_matrix(t, l, d)?;
        write_matrix(p, &format!("T matrix, t={t}, l={l}, d={d}"), t, t, |r, s| tm.value(r, s))?;
    }
    let dest = write_series(cfg, &series)?;
    Ok(format!("psff-tdl: {} rows, l={l}, d={d}{dest}", series.rows.len()))
}

type Curve = Box<dyn Fn(u64) -> Result<f64, PsffError>>;

fn reference(cfg: &RunConfig) -> Result<String, CliError> {
    let d = get(cfg.d, "d")?;
    let sites = 2 * get(cfg.half_chain, "L")?;
    let sub_sites = 2 * get(cfg.half_subsystem, "l")?;
    let params = EnsembleParams::for_chain(d, sites, sub_sites)?;
    let model = get(cfg.model, "model")?;
    let finite_d = get(cfg.finite_d, "finite_d")?;
    let (method, value): (Method, Curve) = match model {
        Model::CueFinite => (Method::CueFinite, Box::new(move |t| psff_cue_finite(t, &params))),
        Model::CueTdl => (Method::CueTdl, Box::new(move |t| Ok(psff_cue_tdl(t, params.subsystem())))),
        Model::PoissonProduct => (Method::PoissonProduct, Box::new(move |_| Ok(psff_poisson_product(params.total())))),
        Model::PoissonCueStates if finite_d => {
            (Method::PoissonCueStates, Box::new(move |_| psff_poisson_cue_states_finite(&params)))
        }
        Model::PoissonCueStates => (
            Method::PoissonCueStates,
            Box::new(move |_| Ok(psff_poisson_cue_states(params.subsystem(), params.complement()))),
        ),
    };
    let mut series = PsffSeries::new(method);
    for t in grid(cfg)? {
        series.push(t, value(t)?, 0.0, 0);
    }
    let dest = write_series(cfg, &series)?;
    Ok(format!(
        "reference {method}: {} rows, D={}, D_A={}{dest}",
        series.rows.len(),
        params.total(),
        params.subsystem()
    ))
}

#[derive(Debug, Serialize)]
struct GateCertificate {
    index: usize,
    unitarity: f64,
    dual_unitarity: f64,
    /// Largest of the four folded unitality residuals of a disordered copy.
    unitality: f64,
    pass: bool,
}

fn verify_gates(cfg: &RunConfig) -> Result<String, CliError> {
    let d = get(cfg.d, "d")?;
    let coupling = get(cfg.coupling, "J")?;
    let seed = get(cfg.seed, "seed")?;
    let disorder = DisorderSpec::new(d, get(cfg.sigma, "sigma")?)?;
    let mut rows = Vec::new();
    for i in 0..get(cfg.n_samples, "n_samples")? {
        let gate = random_du_gate(d, coupling, &mut stream_rng(seed, Stream::BaseGate, i as u64))?;
        let dressed = disordered_gate(&gate, &disorder, &mut stream_rng(seed, Stream::Disorder, i as u64));
        let unitarity = unitarity_residual(gate.matrix());
        let dual_unitarity = dual_unitarity_residual(gate.matrix());
        let unitality = unitality_residuals(&dressed)?.max();
        let pass = unitarity < GATE_TOLERANCE && dual_unitarity < GATE_TOLERANCE && unitality < GATE_TOLERANCE;
        rows.push(GateCertificate { index: i, unitarity, dual_unitarity, unitality, pass });
    }
    let mut table = String::from("index  unitarity  dual_unitarity  unitality  pass\n");
    for r in &rows {
        table += &format!(
            "{:5}  {:9.2e}  {:14.2e}  {:9.2e}  {}\n",
            r.index, r.unitarity, r.dual_unitarity, r.unitality, r.pass
        );
    }
    print!("{table}");
    if let Some(p) = &cfg.output {
        std::fs::write(p, serde_json::to_string_pretty(&rows).expect("rows serialize"))?;
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    let summary = format!("verify-gates: {} gates, {failed} failed", rows.len());
    if failed > 0 {
        return Err(CliError::ChecksFailed(summary));
    }
    Ok(summary)
}

fn verify_transfer(cfg: &RunConfig) -> Result<String, CliError> {
    let certs = certificates(&CertificateConfig {
        d: get(cfg.d, "d")?,
        t_max: get(cfg.t_max, "t_max")? as usize,
        coupling: get(cfg.coupling, "J")?,
        sigma: get(cfg.sigma, "sigma")?,
        seed: get(cfg.seed, "seed")?,
        n_samples: get(cfg.n_samples, "n_samples")?,
        realizations: get(cfg.realizations, "realizations")?,
        budget: MemoryBudget::default(),
    })?;
    let text = serde_json::to_string_pretty(&certs).expect("certificates serialize");
    let dest = with_output(cfg.output.as_deref(), |w| writeln!(w, "{text}"))?;
    let failed = certs.iter().filter(|c| !c.pass).count();
    let summary = format!("verify-transfer: {} certificates, {failed} failed{dest}", certs.len());
    if failed > 0 {
        return Err(CliError::ChecksFailed(summary));
    }
    Ok(summary)
}

fn deviation(cfg: &RunConfig) -> Result<String, CliError> {
    let d = get(cfg.d, "d")?;
    let l = get(cfg.half_subsystem, "l")?;
    let rows = deviation_report(get(cfg.t_max, "t_max")? as usize, l, d)?;
    let comments = provenance(cfg);
    let dest = with_output(cfg.output.as_deref(), |w| {
        for c in &comments {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "t,value,cue,abs_deviation,bound,bound_applies,violation")?;
        for r in &rows {
            writeln!(
                w,
                "{},{:e},{:e},{:e},{:e},{},{}",
                r.t, r.value, r.cue, r.abs_deviation, r.bound, r.bound_applies, r.violation
            )?;
        }
        Ok(())
    })?;
    let violations = rows.iter().filter(|r| r.violation).count();
    let summary = format!("deviation-report: {} rows, {violations} bound violations{dest}", rows.len());
    if violations > 0 {
        return Err(CliError::ChecksFailed(summary));
    }
    Ok(summary)
}
