//! Command orchestration. Each sweep point runs independently; rows come
//! back in grid order whatever the completion order.

use std::time::Instant;

use fme_core::exec::map_indexed;
use fme_core::montecarlo::{estimate_success, SimConfig, SimEstimate};
use fme_core::reference;
use fme_core::series::{check_condition, fme_success_probability, higher_order_term};
use fme_core::{Execution, FadingModel, FmeRequest, FmeResult, IntegrationPolicy, LinkConfig, PathLoss, PointProcess};

use crate::error::{CliError, Result};
use crate::output::ResultRow;
use crate::spec::{Command, ExperimentSpec, ModelSpec, Resolved};

/// Target tail shift `ν · E[I_outside]` for the automatic PPP window.
const WINDOW_TAIL_SHIFT: f64 = 1e-4;
const MAX_AUTO_WINDOW: f64 = 200.0;

pub fn run(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    let r = spec.resolve()?;
    match spec.command {
        Command::Series => Ok(run_series(spec, &r)),
        Command::Simulate => Ok(run_simulate(spec, &r)),
        Command::Compare => Ok(run_compare(spec, &r, false)),
        Command::Sweep => Ok(run_compare(spec, &r, true)),
        Command::Tables => run_tables(spec, &r),
    }
}

fn base_row(spec: &ExperimentSpec, r: &Resolved, lambda: f64) -> ResultRow {
    let fading = if r.desired == r.interferer {
        r.interferer.to_string()
    } else {
        format!("{}/{}", r.desired, r.interferer)
    };
    ResultRow {
        command: spec.command.to_string(),
        model: r.model.to_string(),
        fading,
        alpha: r.pathloss.alpha(),
        nu: r.nu,
        noise: r.link.noise,
        lambda: (!lambda.is_nan()).then_some(lambda),
        status: "ok".into(),
        ..Default::default()
    }
}

fn failed(mut row: ResultRow, e: CliError, t0: Instant) -> ResultRow {
    row.status = format!("error: {e}");
    row.wall_time_s = t0.elapsed().as_secs_f64();
    row
}

fn point_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add(index as u64)
}

fn policy(spec: &ExperimentSpec, index: usize) -> IntegrationPolicy {
    IntegrationPolicy {
        samples: spec.samples,
        seed: point_seed(spec.seed, index),
        rmax: spec.rmax,
        target_rel_se: spec.target_rel_se,
        ..Default::default()
    }
}

fn request(spec: &ExperimentSpec, r: &Resolved, model: PointProcess, index: usize) -> Result<FmeRequest> {
    Ok(FmeRequest::success(model, r.interferer, r.desired, r.pathloss, r.link, spec.order)?
        .with_policy(policy(spec, index)))
}

/// Expansion at one sweep point. `None` stands for an empty network, where
/// every term beyond the first vanishes.
fn series_at(spec: &ExperimentSpec, r: &Resolved, lambda: f64, index: usize) -> Result<Option<FmeResult>> {
    if lambda == 0.0 && r.model.uses_lambda() {
        return Ok(None);
    }
    let req = request(spec, r, r.point_process(lambda)?, index)?;
    Ok(Some(fme_success_probability(&req)?))
}

fn is_integer(m: f64) -> bool {
    m >= 1.0 && m.fract() == 0.0
}

/// Exact success probability and per-order terms of Poisson networks with a
/// known closed form.
struct PoissonOracle {
    terms: Vec<f64>,
    exact: f64,
}

fn poisson_oracle(r: &Resolved, lambda: f64, order: usize) -> Option<PoissonOracle> {
    if r.model != ModelSpec::Poisson {
        return None;
    }
    let noise_factor = (-r.nu * r.link.noise).exp();
    match (r.desired, r.interferer) {
        (FadingModel::Rayleigh, FadingModel::Rayleigh) => {
            let exact = reference::rayleigh_ppp_success(lambda, r.nu, r.link.noise, &r.pathloss).ok()?;
            let terms = reference::rayleigh_ppp_terms(lambda, r.nu, r.link.noise, &r.pathloss, order).ok()?;
            Some(PoissonOracle { terms, exact })
        }
        (FadingModel::Nakagami { m }, h)
            if is_integer(m) && r.link.noise == 0.0 && matches!(r.pathloss, PathLoss::Singular { .. }) =>
        {
            let alpha = r.pathloss.alpha();
            let term = |j: usize| reference::ppp_nakagami_term(j, lambda, r.nu, m, &h, alpha).ok();
            let terms: Option<Vec<f64>> = (0..=order).map(term).collect();
            let mut exact = 0.0;
            for j in 0..400 {
                let t = term(j)?;
                exact += t;
                if j > order + 2 && t.abs() < 1e-18 {
                    break;
                }
            }
            Some(PoissonOracle {
                terms: terms?,
                exact: exact * noise_factor,
            })
        }
        _ => None,
    }
}

fn series_rows(spec: &ExperimentSpec, r: &Resolved, lambda: f64, index: usize) -> Vec<ResultRow> {
    let t0 = Instant::now();
    let base = base_row(spec, r, lambda);
    let res = match series_at(spec, r, lambda, index) {
        Ok(res) => res,
        Err(e) => return vec![failed(base, e, t0)],
    };
    let oracle = if lambda.is_nan() { None } else { poisson_oracle(r, lambda, spec.order) };
    let elapsed = t0.elapsed().as_secs_f64();
    let f0 = r.desired.ccdf(r.nu * r.link.noise);
    (0..=spec.order)
        .map(|k| {
            let mut row = base.clone();
            row.order = Some(k);
            match &res {
                Some(res) => {
                    row.term = Some(res.terms[k]);
                    row.term_se = Some(res.term_std_errors[k]);
                    row.partial_sum = Some(res.partial_sums[k]);
                    row.error_bound = res.order_bounds[k];
                    if k == spec.order && !res.diagnostics.warnings.is_empty() {
                        row.status = format!("ok; {}", res.diagnostics.warnings.join("; "));
                    }
                }
                None => {
                    row.term = Some(if k == 0 { f0 } else { 0.0 });
                    row.term_se = Some(0.0);
                    row.partial_sum = Some(f0);
                    row.error_bound = Some(0.0);
                }
            }
            if let Some(o) = &oracle {
                row.reference_term = Some(o.terms[k]);
                row.reference_kind = Some("exact".into());
                row.reference = Some(o.exact);
                row.rel_diff = rel_diff(row.term, row.reference_term);
            }
            row.wall_time_s = elapsed;
            row
        })
        .collect()
}

fn rel_diff(value: Option<f64>, reference: Option<f64>) -> Option<f64> {
    match (value, reference) {
        (Some(v), Some(r)) if r != 0.0 => Some((v - r) / r.abs()),
        (Some(v), Some(_)) if v == 0.0 => Some(0.0),
        _ => None,
    }
}

fn run_series(spec: &ExperimentSpec, r: &Resolved) -> Vec<ResultRow> {
    let grid = spec.lambda_points(r);
    map_indexed(Execution::Parallel, grid.len(), |i| series_rows(spec, r, grid[i], i))
        .into_iter()
        .flatten()
        .collect()
}

fn sim_config(spec: &ExperimentSpec, r: &Resolved, model: PointProcess, index: usize) -> SimConfig {
    let mut cfg = SimConfig::new(model, r.interferer, r.desired, r.pathloss, r.link);
    cfg.trials = spec.trials;
    cfg.seed = point_seed(spec.seed, index);
    cfg.window = match (spec.window, r.model) {
        (Some(w), _) => w,
        (None, ModelSpec::Matern { .. }) => 20.0,
        (None, ModelSpec::Ginibre | ModelSpec::Dpp(_)) => {
            let s2 = match &cfg.model {
                PointProcess::Determinantal(d) => d.kernel.gaussian_variance().unwrap_or(1.0),
                _ => 1.0,
            };
            (6.0 * s2.sqrt()).max(r.link.distance * 1.5)
        }
        (None, ModelSpec::Poisson) => {
            let mut w = (25.0f64).max(4.0 * r.link.distance);
            cfg.window = w;
            while r.nu * cfg.tail_interference() > WINDOW_TAIL_SHIFT && w < MAX_AUTO_WINDOW {
                w = (2.0 * w).min(MAX_AUTO_WINDOW);
                cfg.window = w;
            }
            w
        }
    };
    cfg
}

fn simulate_at(spec: &ExperimentSpec, r: &Resolved, lambda: f64, index: usize) -> Result<Option<SimEstimate>> {
    if lambda == 0.0 && r.model.uses_lambda() {
        return Ok(None);
    }
    let cfg = sim_config(spec, r, r.point_process(lambda)?, index);
    Ok(Some(estimate_success(&cfg)?))
}

fn fill_sim(row: &mut ResultRow, est: &Option<SimEstimate>, r: &Resolved, trials: usize) {
    match est {
        Some(e) => {
            row.sim_p_hat = Some(e.p_hat);
            row.sim_ci95 = Some(e.ci95);
            row.sim_trials = Some(e.trials);
            if !e.tail_ok {
                let note = format!("window tail shift {:.1e}", e.tail_threshold_shift);
                row.status = if row.status == "ok" {
                    format!("ok; {note}")
                } else {
                    format!("{}; {note}", row.status)
                };
            }
        }
        None => {
            row.sim_p_hat = Some(r.desired.ccdf(r.nu * r.link.noise));
            row.sim_ci95 = Some(0.0);
            row.sim_trials = Some(trials);
        }
    }
}

fn run_simulate(spec: &ExperimentSpec, r: &Resolved) -> Vec<ResultRow> {
    let grid = spec.lambda_points(r);
    map_indexed(Execution::Parallel, grid.len(), |i| {
        let t0 = Instant::now();
        let lambda = grid[i];
        let mut row = base_row(spec, r, lambda);
        match simulate_at(spec, r, lambda, i) {
            Ok(est) => {
                fill_sim(&mut row, &est, r, spec.trials);
                if !lambda.is_nan() {
                    if let Some(o) = poisson_oracle(r, lambda, 0) {
                        row.reference = Some(o.exact);
                        row.reference_kind = Some("exact".into());
                        row.agree = row
                            .sim_p_hat
                            .zip(row.sim_ci95)
                            .map(|(p, ci)| (p - o.exact).abs() <= 1.5 * ci.max(1e-12));
                    }
                }
                row.wall_time_s = t0.elapsed().as_secs_f64();
                row
            }
            Err(e) => failed(row, e, t0),
        }
    })
}

/// Series and simulation side by side. `all_orders` emits every partial
/// sum; otherwise only the highest order.
fn run_compare(spec: &ExperimentSpec, r: &Resolved, all_orders: bool) -> Vec<ResultRow> {
    let grid = spec.lambda_points(r);
    map_indexed(Execution::Parallel, grid.len(), |i| {
        let t0 = Instant::now();
        let lambda = grid[i];
        let mut rows = series_rows(spec, r, lambda, i);
        let sim = simulate_at(spec, r, lambda, i);
        if !all_orders {
            rows.retain(|row| row.order.is_none() || row.order == Some(spec.order));
        }
        let elapsed = t0.elapsed().as_secs_f64();
        for row in rows.iter_mut() {
            row.wall_time_s = elapsed;
            if row.order.is_none() {
                continue;
            }
            match &sim {
                Ok(est) => {
                    fill_sim(row, est, r, spec.trials);
                    row.agree = agreement(row);
                }
                Err(e) => row.status = format!("{}; simulation error: {e}", row.status),
            }
        }
        rows
    })
    .into_iter()
    .flatten()
    .collect()
}

/// `|partial_sum - p̂| ≤ bound + CI + 3 SE` where SE is the Monte Carlo error
/// of the partial sum.
fn agreement(row: &ResultRow) -> Option<bool> {
    let s = row.partial_sum?;
    let p = row.sim_p_hat?;
    let b = row.error_bound?;
    let se = row.term_se.unwrap_or(0.0);
    Some((s - p).abs() <= b + row.sim_ci95.unwrap_or(0.0) + 3.0 * se)
}

/// Third term (`i = 2`) at `table1_alpha` and fourth term (`i = 3`) at
/// `table2_alpha` for Nakagami `m ∈ {2, 3, 4}` on every link of a Poisson
/// network without noise, against the printed closed forms and against the
/// exact Taylor coefficients.
fn run_tables(spec: &ExperimentSpec, r: &Resolved) -> Result<Vec<ResultRow>> {
    let lambda = *spec
        .lambda
        .first()
        .ok_or_else(|| CliError::config("tables need a lambda value"))?;
    if !(lambda > 0.0) {
        return Err(CliError::config("tables need a positive lambda"));
    }
    let mut cases = Vec::new();
    for (i, alpha) in [(2usize, spec.table1_alpha), (3usize, spec.table2_alpha)] {
        for m in [2u32, 3, 4] {
            cases.push((i, alpha, m));
        }
    }
    let target = spec.target_rel_se.unwrap_or(0.01);
    let rows = map_indexed(Execution::Parallel, cases.len(), |c| {
        let (i, alpha, m) = cases[c];
        let t0 = Instant::now();
        let h = FadingModel::Nakagami { m: m as f64 };
        let pl = PathLoss::Singular { alpha };
        let mut base = ResultRow {
            command: spec.command.to_string(),
            model: ModelSpec::Poisson.to_string(),
            fading: h.to_string(),
            alpha,
            nu: r.nu,
            noise: 0.0,
            lambda: Some(lambda),
            order: Some(i),
            status: "ok".into(),
            ..Default::default()
        };
        let estimate = (|| -> Result<(f64, f64)> {
            let link = LinkConfig::from_nu(r.nu, r.link.distance, 0.0, &pl)?;
            let mut pol = policy(spec, c);
            pol.target_rel_se = Some(target);
            let req = FmeRequest::success(PointProcess::poisson(lambda)?, h, h, pl, link, i)?.with_policy(pol);
            check_condition(&req)?;
            let est = higher_order_term(&req, i)?;
            Ok((est.value, est.std_error))
        })();
        let (value, se) = match estimate {
            Ok(v) => v,
            Err(e) => return vec![failed(base, e, t0)],
        };
        base.term = Some(value);
        base.term_se = Some(se);
        base.wall_time_s = t0.elapsed().as_secs_f64();
        let printed = match i {
            2 => reference::table_third_term_printed(m, alpha, lambda, r.nu),
            _ => reference::table_fourth_term_printed(m, alpha, lambda, r.nu),
        };
        let taylor = reference::ppp_nakagami_term(i, lambda, r.nu, m as f64, &h, alpha);
        [("printed", printed), ("taylor", taylor)]
            .into_iter()
            .map(|(kind, v)| {
                let mut row = base.clone();
                row.reference_kind = Some(kind.into());
                match v {
                    Ok(v) => {
                        row.reference_term = Some(v);
                        row.rel_diff = rel_diff(Some(value), Some(v));
                        row.agree = Some((value - v).abs() <= 3.0 * se);
                    }
                    Err(e) => row.status = format!("error: {e}"),
                }
                row
            })
            .collect::<Vec<_>>()
    });
    Ok(rows.into_iter().flatten().collect())
}
