//! CSV output, schema `v1`.
//!
//! Every command writes the same columns. Cells that do not apply to a row
//! are left empty. Floats carry 17 significant digits.
//!
//! | column | meaning |
//! |---|---|
//! | `command` | subcommand that produced the row |
//! | `model` | transmitter process |
//! | `fading` | interferer fading; `desired/interferer` when they differ |
//! | `alpha`, `nu`, `noise` | path-loss exponent, `θ/ℓ(R)`, noise power |
//! | `lambda` | transmitter density |
//! | `order` | expansion order `k` of the row |
//! | `term`, `term_se` | `k`-th expansion term and its Monte Carlo standard error |
//! | `partial_sum` | sum of terms `0..=k` |
//! | `error_bound` | bound on `|partial_sum - P_s|`, Monte Carlo truncation included |
//! | `reference_term` | independent value of `term` (closed form or printed table) |
//! | `reference_kind` | `exact`, `taylor` or `printed` |
//! | `reference` | exact success probability when known |
//! | `rel_diff` | `(term - reference_term) / |reference_term|` |
//! | `sim_p_hat`, `sim_ci95`, `sim_trials` | simulated success probability, 95% half-width, trials |
//! | `agree` | agreement flag of the comparison made by the command |
//! | `status` | `ok` or the error that made the row infeasible |
//! | `wall_time_s` | seconds spent on the row |

use std::io::Write;

use serde::Serialize;

use crate::error::Result;

pub const SCHEMA: &str = "v1";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultRow {
    pub command: String,
    pub model: String,
    pub fading: String,
    pub alpha: f64,
    pub nu: f64,
    pub noise: f64,
    pub lambda: Option<f64>,
    pub order: Option<usize>,
    pub term: Option<f64>,
    pub term_se: Option<f64>,
    pub partial_sum: Option<f64>,
    pub error_bound: Option<f64>,
    pub reference_term: Option<f64>,
    pub reference_kind: Option<String>,
    pub reference: Option<f64>,
    pub rel_diff: Option<f64>,
    pub sim_p_hat: Option<f64>,
    pub sim_ci95: Option<f64>,
    pub sim_trials: Option<usize>,
    pub agree: Option<bool>,
    pub status: String,
    pub wall_time_s: f64,
}

/// Float with 17 significant digits; empty for absent values.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

#[derive(Serialize)]
struct Record {
    command: String,
    model: String,
    fading: String,
    alpha: String,
    nu: String,
    noise: String,
    lambda: String,
    order: String,
    term: String,
    term_se: String,
    partial_sum: String,
    error_bound: String,
    reference_term: String,
    reference_kind: String,
    reference: String,
    rel_diff: String,
    sim_p_hat: String,
    sim_ci95: String,
    sim_trials: String,
    agree: String,
    status: String,
    wall_time_s: String,
}

impl From<&ResultRow> for Record {
    fn from(r: &ResultRow) -> Self {
        Record {
            command: r.command.clone(),
            model: r.model.clone(),
            fading: r.fading.clone(),
            alpha: fmt_float(r.alpha),
            nu: fmt_float(r.nu),
            noise: fmt_float(r.noise),
            lambda: opt(r.lambda),
            order: r.order.map(|o| o.to_string()).unwrap_or_default(),
            term: opt(r.term),
            term_se: opt(r.term_se),
            partial_sum: opt(r.partial_sum),
            error_bound: opt(r.error_bound),
            reference_term: opt(r.reference_term),
            reference_kind: r.reference_kind.clone().unwrap_or_default(),
            reference: opt(r.reference),
            rel_diff: opt(r.rel_diff),
            sim_p_hat: opt(r.sim_p_hat),
            sim_ci95: opt(r.sim_ci95),
            sim_trials: r.sim_trials.map(|t| t.to_string()).unwrap_or_default(),
            agree: r.agree.map(|a| a.to_string()).unwrap_or_default(),
            status: r.status.clone(),
            wall_time_s: format!("{:.3}", r.wall_time_s),
        }
    }
}

/// Writes the `# seed=` and `# schema=` header lines, then the rows.
pub fn write_csv<W: Write>(mut out: W, seed: u64, rows: &[ResultRow]) -> Result<()> {
    writeln!(out, "# seed={seed}")?;
    writeln!(out, "# schema={SCHEMA}")?;
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(Record::from(r))?;
    }
    if rows.is_empty() {
        w.write_record(COLUMNS)?;
    }
    w.flush()?;
    Ok(())
}

pub const COLUMNS: [&str; 22] = [
    "command",
    "model",
    "fading",
    "alpha",
    "nu",
    "noise",
    "lambda",
    "order",
    "term",
    "term_se",
    "partial_sum",
    "error_bound",
    "reference_term",
    "reference_kind",
    "reference",
    "rel_diff",
    "sim_p_hat",
    "sim_ci95",
    "sim_trials",
    "agree",
    "status",
    "wall_time_s",
];
