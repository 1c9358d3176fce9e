use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::config::{ConfigError, SystemConfig};
use crate::crb::crb_simplified;
use crate::format::fmt_g;
use crate::rate::{average_otas_rate_over_delta, average_rate_over_delta, stas_rate, RateError};
use crate::sensing::{run_monte_carlo_rmse, write_trial_errors, MonteCarloOptions, RmseReport};

use super::{CsvSink, Experiment, RunnerError, FIG3_POWERS_DBM};

/// A sweep point is either resolved or skipped with a reason.
enum Point {
    Ready(SystemConfig),
    Skip(String),
}

/// Invariant violations at a swept value (e.g. a scan that no longer fits in
/// the coherence time) skip the point. Anything else aborts the run.
fn point(exp: &Experiment, assignments: &[(&str, String)]) -> Result<Point, RunnerError> {
    match exp.derive(assignments) {
        Ok(cfg) => Ok(Point::Ready(cfg)),
        Err(RunnerError::Config(e @ ConfigError::InvariantViolation { .. })) => {
            let at: Vec<String> = assignments.iter().map(|(k, v)| format!("{k}={v}")).collect();
            Ok(Point::Skip(format!("skipped {}: {e}", at.join(" "))))
        }
        Err(e) => Err(e),
    }
}

fn monte_carlo(exp: &Experiment, cfg: &SystemConfig, keep: bool) -> Result<RmseReport, RunnerError> {
    let opts = MonteCarloOptions {
        grid_points: exp.spec.grid_points,
        workers: exp.spec.workers,
        keep_outcomes: keep,
        inject_noise: true,
    };
    Ok(run_monte_carlo_rmse(cfg, cfg.mc_trials, &opts)?)
}

fn rcrb(cfg: &SystemConfig) -> Result<f64, RunnerError> {
    Ok(crb_simplified(cfg, cfg.theta_it)?.rcrb)
}

/// Codebook sizes for the scan-time figures, ascending.
fn codebook_sizes(exp: &Experiment) -> Vec<String> {
    let mut sizes: Vec<f64> = match &exp.spec.sweep {
        Some(axis) => axis.values(),
        None => {
            let m = exp.base.n_res as f64;
            vec![m, 2.0 * m, 4.0 * m, 8.0 * m]
        }
    };
    sizes.sort_by(f64::total_cmp);
    sizes.dedup();
    sizes.into_iter().map(fmt_g).collect()
}

pub(super) fn fig3<W: Write>(
    exp: &Experiment,
    out: W,
    comments: &[String],
    dump_dir: Option<&Path>,
) -> Result<(usize, usize), RunnerError> {
    let mut sink = CsvSink::new(
        out,
        comments,
        &["pt_dbm", "theta_deg", "rmse_rad", "rcrb_rad", "trials"],
    )?;
    // The configured angle always comes first; the theta set adds curves.
    let mut thetas = vec![exp.base.theta_it.to_degrees()];
    for t in &exp.spec.theta_set_deg {
        if !thetas.iter().any(|u| (u - t).abs() < 1e-9) {
            thetas.push(*t);
        }
    }
    for theta in thetas {
        for pt in FIG3_POWERS_DBM {
            let cfg = exp.derive(&[("tx_power_dbm", fmt_g(pt)), ("theta_it_deg", fmt_g(theta))])?;
            let report = monte_carlo(exp, &cfg, dump_dir.is_some())?;
            if let (Some(dir), Some(outcomes)) = (dump_dir, &report.outcomes) {
                let name = format!("theta{}_pt{}.csv", fmt_g(theta), fmt_g(pt));
                write_trial_errors(outcomes, BufWriter::new(File::create(dir.join(name))?))?;
            }
            sink.row(&[
                pt.into(),
                theta.into(),
                report.rmse.into(),
                rcrb(&cfg)?.into(),
                report.trials.into(),
            ])?;
        }
    }
    Ok((sink.rows(), sink.warnings()))
}

pub(super) fn fig4<W: Write>(
    exp: &Experiment,
    out: W,
    comments: &[String],
) -> Result<(usize, usize), RunnerError> {
    let mut sink = CsvSink::new(
        out,
        comments,
        &[
            "tau_symbols",
            "rate_delta0",
            "rate_deltamax",
            "rate_avg",
            "rcrb_rad",
        ],
    )?;
    for l in codebook_sizes(exp) {
        let cfg = match point(exp, &[("codebook_size", l)])? {
            Point::Ready(cfg) => cfg,
            Point::Skip(why) => {
                sink.warning(&why)?;
                continue;
            }
        };
        let l = cfg.codebook_size;
        let tau = cfg.scan_time();
        sink.row(&[
            tau.into(),
            stas_rate(&cfg, 0.0, tau)?.into(),
            stas_rate(&cfg, 1.0 / l as f64, tau)?.into(),
            average_rate_over_delta(&cfg, l)?.into(),
            rcrb(&cfg)?.into(),
        ])?;
    }
    Ok((sink.rows(), sink.warnings()))
}

/// Rows come out in descending RCRB because the codebook grows down the file.
pub(super) fn fig5<W: Write>(
    exp: &Experiment,
    out: W,
    comments: &[String],
) -> Result<(usize, usize), RunnerError> {
    let mut sink = CsvSink::new(out, comments, &["rcrb_rad", "rate_stas_avg", "rate_otas_avg"])?;
    for l in codebook_sizes(exp) {
        let cfg = match point(exp, &[("codebook_size", l)])? {
            Point::Ready(cfg) => cfg,
            Point::Skip(why) => {
                sink.warning(&why)?;
                continue;
            }
        };
        let l = cfg.codebook_size;
        // The orthogonal scheme senses for as long as it scans.
        let tau = cfg.scan_time();
        let otas = match average_otas_rate_over_delta(&cfg, l, tau) {
            Ok(r) => r,
            Err(e @ RateError::DurationOverflow { .. }) => {
                sink.warning(&format!("skipped codebook_size={l}: {e}"))?;
                continue;
            }
        };
        sink.row(&[
            rcrb(&cfg)?.into(),
            average_rate_over_delta(&cfg, l)?.into(),
            otas.into(),
        ])?;
    }
    Ok((sink.rows(), sink.warnings()))
}

pub(super) fn custom_sweep<W: Write>(
    exp: &Experiment,
    out: W,
    comments: &[String],
) -> Result<(usize, usize), RunnerError> {
    let label = exp.spec.sweep.as_ref().map_or("point", |a| a.key.as_str());
    let mut sink = CsvSink::new(
        out,
        comments,
        &[
            label,
            "rmse_rad",
            "rcrb_rad",
            "rate_bpshz_delta0",
            "rate_bpshz_deltamax",
            "rate_bpshz_avg",
            "rate_otas_bpshz",
            "trials",
        ],
    )?;
    let values = exp.spec.sweep.as_ref().map_or_else(|| vec![0.0], |a| a.values());
    for v in values {
        let assignments: Vec<(&str, String)> = exp
            .spec
            .sweep
            .as_ref()
            .map(|a| vec![(a.key.as_str(), fmt_g(v))])
            .unwrap_or_default();
        let cfg = match point(exp, &assignments)? {
            Point::Ready(cfg) => cfg,
            Point::Skip(why) => {
                sink.warning(&why)?;
                continue;
            }
        };
        let l = cfg.codebook_size;
        let tau = cfg.scan_time();
        let otas = match average_otas_rate_over_delta(&cfg, l, cfg.sense_time()) {
            Ok(r) => r,
            Err(e @ RateError::DurationOverflow { .. }) => {
                sink.warning(&format!("skipped {label}={}: {e}", fmt_g(v)))?;
                continue;
            }
        };
        let report = monte_carlo(exp, &cfg, false)?;
        sink.row(&[
            v.into(),
            report.rmse.into(),
            rcrb(&cfg)?.into(),
            stas_rate(&cfg, 0.0, tau)?.into(),
            stas_rate(&cfg, 1.0 / l as f64, tau)?.into(),
            average_rate_over_delta(&cfg, l)?.into(),
            otas.into(),
            report.trials.into(),
        ])?;
    }
    Ok((sink.rows(), sink.warnings()))
}
