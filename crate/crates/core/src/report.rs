//! CSV tables, key=value summaries and run metadata.
//!
//! Floats are written in the shortest form that parses back to the same
//! double. Row order and formatting depend only on the results, so two
//! identical runs produce byte-identical tables.

use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::micro::MicroSolution;
use crate::multiscale::MacroTrajectory;
use crate::resolved::ResolvedTrajectory;
use crate::study::{ConvergenceSample, FitResult, SpeedupEstimate, StudyRow, TolPRow};

/// Shortest round-trip decimal form; non-finite values become an empty field.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        ryu::Buffer::new().format_finite(x).to_string()
    } else {
        String::new()
    }
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(w)
}

/// `# key=value` lines followed by `t,v_1..v_m`.
pub fn write_micro_csv<W: Write>(mut w: W, sol: &MicroSolution) -> Result<()> {
    write!(
        w,
        "# u_frozen={}\r\n# residual={}\r\n# cycles_used={}\r\n",
        fmt_f64(sol.u_frozen()),
        fmt_f64(sol.periodicity_residual()),
        sol.cycles_used()
    )?;
    let mut out = csv_writer(w);
    let mut header = vec!["t".to_string()];
    header.extend((1..=sol.dim()).map(|i| format!("v_{i}")));
    out.write_record(&header)?;
    let grid = sol.grid();
    for (m, v) in sol.samples().enumerate() {
        let mut row = vec![fmt_f64(grid.time(m))];
        row.extend(v.iter().map(|&x| fmt_f64(x)));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// `T_n,U_n,R_bar,cycles_used`; the last row has no reaction or cycle count.
pub fn write_macro_csv<W: Write>(w: W, traj: &MacroTrajectory) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["T_n", "U_n", "R_bar", "cycles_used"])?;
    for (n, (&t, &u)) in traj.times.iter().zip(&traj.values).enumerate() {
        let (r, c) = match (traj.reactions.get(n), traj.cycles.get(n)) {
            (Some(&r), Some(&c)) => (fmt_f64(r), c.to_string()),
            _ => (String::new(), String::new()),
        };
        out.write_record([fmt_f64(t), fmt_f64(u), r, c])?;
    }
    out.flush()?;
    Ok(())
}

/// `t,u,v_1..v_m` at the stored nodes.
pub fn write_resolved_csv<W: Write>(w: W, traj: &ResolvedTrajectory) -> Result<()> {
    let mut out = csv_writer(w);
    let mut header = vec!["t".to_string(), "u".to_string()];
    header.extend((1..=traj.dim()).map(|i| format!("v_{i}")));
    out.write_record(&header)?;
    for j in 0..traj.len() {
        let mut row = vec![fmt_f64(traj.times[j]), fmt_f64(traj.slow[j])];
        row.extend(traj.fast_slice(j).iter().map(|&x| fmt_f64(x)));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub const STUDY_COLUMNS: [&str; 8] = ["epsilon", "k", "K", "tol_P", "U_T", "error", "E_ms", "cycles_total"];

pub fn write_study_csv<W: Write>(w: W, rows: &[StudyRow]) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(STUDY_COLUMNS)?;
    for r in rows {
        out.write_record([
            fmt_f64(r.epsilon),
            fmt_f64(r.k),
            fmt_f64(r.macro_step),
            fmt_f64(r.tol_p),
            fmt_f64(r.u_t),
            fmt_f64(r.error),
            r.e_ms.to_string(),
            r.cycles_total.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_tolp_csv<W: Write>(w: W, rows: &[TolPRow]) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["tol_P", "U_T", "difference", "cycles_total", "E_ms"])?;
    for r in rows {
        out.write_record([
            fmt_f64(r.tol_p),
            fmt_f64(r.u_t),
            fmt_f64(r.difference),
            r.total_cycles.to_string(),
            r.cn_steps.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Reads (k, K, U_T) samples from a table with the study columns.
pub fn read_study_samples<R: Read>(r: R) -> Result<Vec<ConvergenceSample>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::config(name, None, format!("input table has no `{name}` column")))
    };
    let (ik, ikk, iu) = (col("k")?, col("K")?, col("U_T")?);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |j: usize| -> Result<f64> {
            rec.get(j).unwrap_or("").trim().parse::<f64>().map_err(|e| {
                Error::config(headers.get(j).unwrap_or("?"), Some(i + 2), format!("not a number: {e}"))
            })
        };
        out.push(ConvergenceSample {
            k: field(ik)?,
            macro_step: field(ikk)?,
            value: field(iu)?,
        });
    }
    Ok(out)
}

/// Ordered `key=value` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    entries: Vec<(String, String)>,
}

impl Summary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    pub fn push_f64(&mut self, key: impl Into<String>, value: f64) -> &mut Self {
        let v = if value.is_finite() { fmt_f64(value) } else { value.to_string() };
        self.entries.push((key.into(), v));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    pub fn parse(text: &str) -> Self {
        let entries = text
            .lines()
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Self { entries }
    }
}

pub fn summarize_macro(traj: &MacroTrajectory) -> Summary {
    let mut s = Summary::new();
    s.push("status", status_name(traj.is_completed()))
        .push("steps", traj.values.len() - 1)
        .push_f64("t_final", *traj.times.last().expect("non-empty"))
        .push_f64("u_final", traj.final_value())
        .push("total_cycles", traj.total_cycles())
        .push_f64("mean_cycles", traj.mean_cycles())
        .push("max_cycles", traj.max_cycles())
        .push("total_cn_steps", traj.cn_steps);
    s
}

pub fn summarize_resolved(traj: &ResolvedTrajectory) -> Summary {
    let mut s = Summary::new();
    s.push("status", status_name(traj.is_completed()))
        .push_f64("t_final", traj.final_time())
        .push_f64("u_final", traj.final_u)
        .push("total_steps", traj.steps)
        .push("stored_nodes", traj.len());
    s
}

fn status_name(completed: bool) -> &'static str {
    if completed {
        "completed"
    } else {
        "domain_exhausted"
    }
}

pub fn summarize_fit(fit: &FitResult) -> Summary {
    let mut s = Summary::new();
    s.push_f64("u_star", fit.u_star)
        .push_f64("c_k", fit.c_micro)
        .push_f64("q_k", fit.q_micro)
        .push_f64("c_K", fit.c_macro)
        .push_f64("q_K", fit.q_macro)
        .push_f64("residual_norm", fit.residual_norm)
        .push("iterations", fit.iterations);
    for (name, c) in ["u_star", "c_k", "q_k", "c_K", "q_K"].iter().zip(fit.confidence) {
        s.push_f64(format!("rel_err_{name}"), c);
    }
    s
}

/// Parameter table with relative standard errors in percent.
pub fn fit_report(fit: &FitResult) -> String {
    let mut s = String::from("U(k,K) = U* + C_k k^q_k + C_K K^q_K\n\n");
    let rows = [
        ("U*", fit.u_star, fit.confidence[0]),
        ("C_k", fit.c_micro, fit.confidence[1]),
        ("q_k", fit.q_micro, fit.confidence[2]),
        ("C_K", fit.c_macro, fit.confidence[3]),
        ("q_K", fit.q_macro, fit.confidence[4]),
    ];
    for (name, v, c) in rows {
        let _ = writeln!(s, "{name:<4} = {v:>22.15e}  +/- {:.3}%", 100.0 * c);
    }
    let _ = writeln!(
        s,
        "\nresidual norm {:e} after {} iterations",
        fit.residual_norm, fit.iterations
    );
    s
}

pub fn summarize_speedup(est: &SpeedupEstimate) -> Summary {
    let mut s = Summary::new();
    s.push_f64("e_fwd", est.e_fwd)
        .push_f64("e_ms", est.e_ms)
        .push_f64("ratio", est.ratio);
    if let Some(r) = est.epsilon_form {
        s.push_f64("ratio_epsilon_form", r);
    }
    s
}

/// Hex SHA-256 of a config echo.
pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .fold(String::with_capacity(64), |mut acc, b| {
            let _ = write!(acc, "{b:02x}");
            acc
        })
}

/// Reproducibility record written next to every result.
#[derive(Debug, Clone, PartialEq)]
pub struct Metadata {
    pub command: String,
    pub config_hash: String,
    pub wall_time_s: f64,
    pub cn_steps: u64,
}

impl Metadata {
    pub fn render(&self) -> String {
        let mut s = Summary::new();
        s.push("command", &self.command)
            .push("package", env!("CARGO_PKG_NAME"))
            .push("version", env!("CARGO_PKG_VERSION"))
            .push("config_sha256", &self.config_hash)
            .push_f64("wall_time_s", self.wall_time_s)
            .push("cn_steps", self.cn_steps);
        s.render()
    }
}

/// An output directory; created on first use.
#[derive(Debug, Clone)]
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(&root)?;
        Ok(Self { root })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<PathBuf> {
        let p = self.path(name);
        fs::write(&p, text)?;
        Ok(p)
    }

    pub fn write_with<F>(&self, name: &str, f: F) -> Result<PathBuf>
    where
        F: FnOnce(&mut Vec<u8>) -> Result<()>,
    {
        let mut buf = Vec::new();
        f(&mut buf)?;
        let p = self.path(name);
        fs::write(&p, buf)?;
        Ok(p)
    }
}
