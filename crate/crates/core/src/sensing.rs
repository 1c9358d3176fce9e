//! Echo collection at the IRS sensing elements and maximum-likelihood
//! estimation of the target angle.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::{self, Write};

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::array::{response, scaled_offsets};
use crate::beam::{dft_codebook, Codebook, CodebookError};
use crate::channel::{build_channels, transmit_beamformer, ChannelSet};
use crate::config::SystemConfig;
use crate::format::fmt_g;
use crate::noise::{NoiseStream, Phase};

/// Coarse search resolution used when none is given.
pub const DEFAULT_GRID_POINTS: usize = 2048;
/// Golden-section search stops once the bracket is narrower than this (rad).
pub const REFINE_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimationError {
    #[error("echo block is identically zero; the objective carries no angle information")]
    DegenerateBlock,
    #[error("grid needs at least 3 points, got {0}")]
    InvalidGrid(usize),
    #[error("trial count must be positive")]
    NoTrials,
    #[error(transparent)]
    Codebook(#[from] CodebookError),
    #[error("worker pool: {0}")]
    Pool(String),
}

/// The part of the array geometry the sensing receiver knows in advance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingGeometry {
    pub n_ses: usize,
    pub sin_theta_bi: f64,
}

impl SensingGeometry {
    pub fn from_config(cfg: &SystemConfig) -> Self {
        SensingGeometry {
            n_ses: cfg.n_ses,
            sin_theta_bi: cfg.theta_bi.sin(),
        }
    }

    /// Effective RE-side response q(θ) = a_r with sine sin θ_BI − sin θ.
    pub fn q(&self, theta: f64, m: usize) -> Array1<Complex64> {
        response(self.sin_theta_bi - theta.sin(), m)
    }

    /// dq/dθ = −jπ cos θ · ζ · q(θ).
    pub fn q_derivative(&self, theta: f64, m: usize) -> Array1<Complex64> {
        scaled_offsets(&self.q(theta, m), -PI * theta.cos())
    }
}

/// Everything received at the SEs over one scan.
#[derive(Debug, Clone)]
pub struct EchoBlock {
    /// Received samples, M_s × (K·L).
    pub y: Array2<Complex64>,
    /// Probing matrix √(N·P_t)·α_g·[φ(1) … φ(L)], M × (K·L).
    pub x: Array2<Complex64>,
    pub sigma2: f64,
    pub geometry: SensingGeometry,
}

/// √(N·P_t)·α_g times the scanned beams, one column per transmitted symbol.
pub fn probing_matrix(ch: &ChannelSet, cb: &Codebook, cfg: &SystemConfig) -> Array2<Complex64> {
    let k = cfg.symbols_per_beam;
    let scale = ch.alpha_g.value() * (cfg.n_bs_antennas as f64 * cfg.tx_power).sqrt();
    let m = cb.n_elements();
    Array2::from_shape_fn((m, cb.len() * k), |(i, col)| scale * cb.beam(col / k)[i])
}

pub fn simulate_echo_scan(
    ch: &ChannelSet,
    cb: &Codebook,
    cfg: &SystemConfig,
    noise: &mut NoiseStream,
) -> EchoBlock {
    let k = cfg.symbols_per_beam;
    let w = transmit_beamformer(cfg);
    let incident = ch.g.dot(&w).mapv(|x| x * cfg.tx_power.sqrt());
    let n_ses = ch.h_t.nrows();
    let mut y = Array2::<Complex64>::zeros((n_ses, cb.len() * k));
    for (t, phi) in cb.beams().iter().enumerate() {
        let clean = ch.h_t.dot(&(phi * &incident));
        for s in 0..k {
            let col = t * k + s;
            for r in 0..n_ses {
                y[[r, col]] = clean[r] + noise.sample();
            }
        }
    }
    EchoBlock {
        y,
        x: probing_matrix(ch, cb, cfg),
        sigma2: noise.sigma2(),
        geometry: SensingGeometry::from_config(cfg),
    }
}

/// |a_s^H(θ)·Y·X^H·q*(θ)|² with Y·X^H precomputed.
#[derive(Debug, Clone)]
pub struct MleObjective {
    yxh: Array2<Complex64>,
    geometry: SensingGeometry,
}

impl MleObjective {
    pub fn new(block: &EchoBlock) -> Self {
        let xh = block.x.t().mapv(|v| v.conj());
        MleObjective {
            yxh: block.y.dot(&xh),
            geometry: block.geometry,
        }
    }

    /// a_s^H(θ)·Y·X^H·q*(θ).
    pub fn correlation(&self, theta: f64) -> Complex64 {
        let (n_ses, m) = self.yxh.dim();
        let a_s = response(theta.sin(), n_ses);
        let q = self.geometry.q(theta, m);
        let mut acc = Complex64::new(0.0, 0.0);
        for (s, row) in self.yxh.outer_iter().enumerate() {
            let proj: Complex64 = row.iter().zip(q.iter()).map(|(z, q)| z * q.conj()).sum();
            acc += a_s[s].conj() * proj;
        }
        acc
    }

    pub fn value(&self, theta: f64) -> f64 {
        self.correlation(theta).norm_sqr()
    }
}

pub fn mle_objective(theta: f64, block: &EchoBlock) -> f64 {
    MleObjective::new(block).value(theta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub theta_hat: f64,
    pub alpha_hat: Complex64,
    pub objective: f64,
    pub grid_points: usize,
    pub refined: bool,
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while hi - lo >= tol {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Least-squares gain for a fixed angle: vec(u)^H·vec(Y)/‖vec(u)‖².
pub fn alpha_estimate(theta: f64, block: &EchoBlock) -> Complex64 {
    let (n_ses, _) = block.y.dim();
    let q = block.geometry.q(theta, block.x.nrows());
    let r = block.x.t().dot(&q);
    let a_s = response(theta.sin(), n_ses);
    let mut num = Complex64::new(0.0, 0.0);
    for (s, row) in block.y.outer_iter().enumerate() {
        for (t, y) in row.iter().enumerate() {
            num += (a_s[s] * r[t]).conj() * y;
        }
    }
    let den = n_ses as f64 * r.iter().map(|v| v.norm_sqr()).sum::<f64>();
    num / den
}

/// Exhaustive grid search over [−π/2, π/2] followed by golden-section
/// refinement inside the bracket around the best grid point.
pub fn estimate_angle(block: &EchoBlock, grid_points: usize) -> Result<EstimationResult, EstimationError> {
    if grid_points < 3 {
        return Err(EstimationError::InvalidGrid(grid_points));
    }
    if block.y.iter().all(|v| v.norm_sqr() == 0.0) {
        return Err(EstimationError::DegenerateBlock);
    }
    let objective = MleObjective::new(block);
    let step = PI / (grid_points - 1) as f64;
    let angle = |i: usize| (-FRAC_PI_2 + i as f64 * step).min(FRAC_PI_2);
    let (best_i, best_val) =
        (0..grid_points)
            .map(|i| (i, objective.value(angle(i))))
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, cur| if cur.1 > acc.1 { cur } else { acc },
            );

    let lo = angle(best_i.saturating_sub(1));
    let hi = angle((best_i + 1).min(grid_points - 1));
    let candidate = golden_section_max(|t| objective.value(t), lo, hi, REFINE_TOLERANCE);
    let candidate_val = objective.value(candidate);
    let (theta_hat, value, refined) = if candidate_val >= best_val {
        (candidate, candidate_val, true)
    } else {
        (angle(best_i), best_val, false)
    };
    Ok(EstimationResult {
        theta_hat,
        alpha_hat: alpha_estimate(theta_hat, block),
        objective: value,
        grid_points,
        refined,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloOptions {
    pub grid_points: usize,
    /// Worker threads; 1 runs on the calling thread.
    pub workers: usize,
    pub keep_outcomes: bool,
    /// When false the echoes are noiseless.
    pub inject_noise: bool,
}

impl Default for MonteCarloOptions {
    fn default() -> Self {
        MonteCarloOptions {
            grid_points: DEFAULT_GRID_POINTS,
            workers: 1,
            keep_outcomes: false,
            inject_noise: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub trial: u64,
    pub theta_hat: f64,
    /// θ_IT − θ̂.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RmseReport {
    pub rmse: f64,
    pub mean_error: f64,
    pub trials: usize,
    pub outcomes: Option<Vec<TrialOutcome>>,
}

fn run_trial(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    cb: &Codebook,
    opts: &MonteCarloOptions,
    trial: u64,
) -> Result<TrialOutcome, EstimationError> {
    let mut noise = if opts.inject_noise {
        NoiseStream::new(cfg.rng_seed, trial, Phase::EchoScan, cfg.noise_power)
    } else {
        NoiseStream::silent()
    };
    let block = simulate_echo_scan(ch, cb, cfg, &mut noise);
    let est = estimate_angle(&block, opts.grid_points)?;
    Ok(TrialOutcome {
        trial,
        theta_hat: est.theta_hat,
        error: cfg.theta_it - est.theta_hat,
    })
}

/// RMSE of the angle estimate over independent noise realizations with the
/// channels held fixed. The reduction runs in trial order, so the result does
/// not depend on the worker count.
pub fn run_monte_carlo_rmse(
    cfg: &SystemConfig,
    trials: usize,
    opts: &MonteCarloOptions,
) -> Result<RmseReport, EstimationError> {
    if trials == 0 {
        return Err(EstimationError::NoTrials);
    }
    let ch = build_channels(cfg);
    let cb = dft_codebook(cfg.n_res, cfg.codebook_size)?;
    let run = || -> Result<Vec<TrialOutcome>, EstimationError> {
        if opts.workers <= 1 {
            (0..trials as u64)
                .map(|t| run_trial(cfg, &ch, &cb, opts, t))
                .collect()
        } else {
            (0..trials as u64)
                .into_par_iter()
                .map(|t| run_trial(cfg, &ch, &cb, opts, t))
                .collect()
        }
    };
    let outcomes = if opts.workers <= 1 {
        run()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers)
            .build()
            .map_err(|e| EstimationError::Pool(e.to_string()))?
            .install(run)?
    };
    let n = outcomes.len() as f64;
    let sq: f64 = outcomes.iter().map(|o| o.error * o.error).sum();
    let mean: f64 = outcomes.iter().map(|o| o.error).sum::<f64>() / n;
    Ok(RmseReport {
        rmse: (sq / n).sqrt(),
        mean_error: mean,
        trials,
        outcomes: opts.keep_outcomes.then_some(outcomes),
    })
}

/// Writes `trial,theta_hat_rad,error_rad` rows.
pub fn write_trial_errors<W: Write>(outcomes: &[TrialOutcome], mut out: W) -> io::Result<()> {
    writeln!(out, "trial,theta_hat_rad,error_rad")?;
    for o in outcomes {
        writeln!(out, "{},{},{}", o.trial, fmt_g(o.theta_hat), fmt_g(o.error))?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::dbm_to_watts;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(cfg: &SystemConfig) -> (ChannelSet, Codebook) {
        (
            build_channels(cfg),
            dft_codebook(cfg.n_res, cfg.codebook_size).unwrap(),
        )
    }

    fn noiseless(cfg: &SystemConfig) -> EchoBlock {
        let (ch, cb) = setup(cfg);
        simulate_echo_scan(&ch, &cb, cfg, &mut NoiseStream::silent())
    }

    fn frob(m: &Array2<Complex64>) -> f64 {
        m.iter().map(|x| x.norm_sqr()).sum()
    }

    #[test]
    fn noiseless_block_matches_model() {
        let cfg = SystemConfig::default();
        let (ch, _) = setup(&cfg);
        let block = noiseless(&cfg);
        let a_s = response(cfg.theta_it.sin(), cfg.n_ses);
        let q = block.geometry.q(cfg.theta_it, cfg.n_res);
        let qx = q.dot(&block.x);
        let scale = frob(&block.y).sqrt();
        for s in 0..cfg.n_ses {
            for t in 0..cfg.codebook_size {
                let model = ch.alpha_s.value() * a_s[s] * qx[t];
                assert!((block.y[[s, t]] - model).norm() <= 1e-10 * scale);
            }
        }
        // Rows proportional to the first.
        for s in 1..cfg.n_ses {
            let ratio = block.y[[s, 0]] / block.y[[0, 0]];
            for t in 0..cfg.codebook_size {
                assert!((block.y[[s, t]] - ratio * block.y[[0, t]]).norm() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn noiseless_energy_by_direct_summation() {
        let cfg = SystemConfig::default();
        let (ch, cb) = setup(&cfg);
        let block = noiseless(&cfg);
        let q = block.geometry.q(cfg.theta_it, cfg.n_res);
        let per_beam: f64 = cb
            .beams()
            .iter()
            .map(|phi| {
                q.iter()
                    .zip(phi)
                    .map(|(a, b)| a * b)
                    .sum::<Complex64>()
                    .norm_sqr()
            })
            .sum();
        let expected = cfg.n_ses as f64
            * per_beam
            * cfg.n_bs_antennas as f64
            * cfg.tx_power
            * ch.alpha_g.power()
            * ch.alpha_s.power();
        assert!((frob(&block.y) / expected - 1.0).abs() < 1e-10);
    }

    #[test]
    fn probing_covariance_is_scaled_identity() {
        let cfg = SystemConfig::default();
        let (ch, cb) = setup(&cfg);
        let x = probing_matrix(&ch, &cb, &cfg);
        let l = x.ncols() as f64;
        let c = cfg.n_bs_antennas as f64 * cfg.tx_power * ch.alpha_g.power();
        let r = x.dot(&x.t().mapv(|v| v.conj())).mapv(|v| v / l);
        for i in 0..cfg.n_res {
            for j in 0..cfg.n_res {
                let target = if i == j { c } else { 0.0 };
                assert!((r[[i, j]] - target).norm() < 1e-9 * c);
            }
        }
    }

    #[test]
    fn objective_basic_properties() {
        let cfg = SystemConfig::default();
        let (ch, _) = setup(&cfg);
        let block = noiseless(&cfg);
        let mut zero = block.clone();
        zero.y.fill(Complex64::new(0.0, 0.0));
        assert_eq!(mle_objective(0.3, &zero), 0.0);
        assert_eq!(
            estimate_angle(&zero, 64).unwrap_err(),
            EstimationError::DegenerateBlock
        );
        assert_eq!(
            estimate_angle(&block, 2).unwrap_err(),
            EstimationError::InvalidGrid(2)
        );

        // Peak value |α_s|²·(L·N·P_t·|α_g|²)²·M_s²·M².
        let l = cfg.codebook_size as f64;
        let c = cfg.n_bs_antennas as f64 * cfg.tx_power * ch.alpha_g.power();
        let expected =
            ch.alpha_s.power() * (l * c).powi(2) * (cfg.n_ses as f64).powi(2) * (cfg.n_res as f64).powi(2);
        let peak = mle_objective(cfg.theta_it, &block);
        assert!((peak / expected - 1.0).abs() < 1e-10);

        let mut rotated = block.clone();
        rotated.y.mapv_inplace(|v| v * Complex64::cis(1.234));
        for theta in [-1.0, 0.2, 0.7] {
            let a = mle_objective(theta, &block);
            let b = mle_objective(theta, &rotated);
            assert!((a - b).abs() <= 1e-12 * peak);
        }
    }

    #[test]
    fn noiseless_global_maximum_is_the_target() {
        for theta_it in [40f64, -60.0, 12.5] {
            let cfg = SystemConfig {
                theta_it: theta_it.to_radians(),
                ..SystemConfig::default()
            };
            let obj = MleObjective::new(&noiseless(&cfg));
            let n = 100_000;
            let best = (0..n)
                .map(|i| -FRAC_PI_2 + PI * i as f64 / (n - 1) as f64)
                .max_by(|a, b| obj.value(*a).total_cmp(&obj.value(*b)))
                .unwrap();
            assert!((best - cfg.theta_it).abs() < PI / (n - 1) as f64);
        }
    }

    #[test]
    fn residual_identity_for_random_observations() {
        let cfg = SystemConfig::default();
        let (ch, _) = setup(&cfg);
        let mut block = noiseless(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let l = block.x.ncols() as f64;
        let c = cfg.n_bs_antennas as f64 * cfg.tx_power * ch.alpha_g.power();
        for _ in 0..20 {
            block
                .y
                .mapv_inplace(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            let theta = rng.random_range(-1.5..1.5);
            let alpha = alpha_estimate(theta, &block);
            let a_s = response(theta.sin(), cfg.n_ses);
            let r = block.x.t().dot(&block.geometry.q(theta, cfg.n_res));
            let mut resid = 0.0;
            for s in 0..cfg.n_ses {
                for t in 0..block.y.ncols() {
                    resid += (block.y[[s, t]] - alpha * a_s[s] * r[t]).norm_sqr();
                }
            }
            let rhs =
                frob(&block.y) - mle_objective(theta, &block) / (l * c * (cfg.n_res * cfg.n_ses) as f64);
            assert!((resid / rhs - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn noiseless_estimates_are_exact() {
        for theta_deg in [40.0f64, 0.0] {
            let cfg = SystemConfig {
                theta_it: theta_deg.to_radians(),
                ..SystemConfig::default()
            };
            let (ch, _) = setup(&cfg);
            let block = noiseless(&cfg);
            let est = estimate_angle(&block, DEFAULT_GRID_POINTS).unwrap();
            assert!((est.theta_hat - cfg.theta_it).abs() < 1e-5);
            assert!((est.alpha_hat - ch.alpha_s.value()).norm() < 1e-6 * ch.alpha_s.magnitude());
            assert!(est.refined);
            assert_eq!(est.grid_points, DEFAULT_GRID_POINTS);
            let obj = mle_objective(est.theta_hat, &block);
            assert!((est.objective / obj - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_monte_carlo_floor() {
        let cfg = SystemConfig::default();
        let opts = MonteCarloOptions {
            inject_noise: false,
            ..MonteCarloOptions::default()
        };
        let report = run_monte_carlo_rmse(&cfg, 3, &opts).unwrap();
        assert!(report.rmse < 1e-5);
        assert_eq!(
            run_monte_carlo_rmse(&cfg, 0, &opts).unwrap_err(),
            EstimationError::NoTrials
        );
    }

    #[test]
    fn single_trial_rmse_is_abs_error() {
        let cfg = SystemConfig {
            tx_power: dbm_to_watts(5.0),
            ..SystemConfig::default()
        };
        let opts = MonteCarloOptions {
            keep_outcomes: true,
            ..MonteCarloOptions::default()
        };
        let report = run_monte_carlo_rmse(&cfg, 1, &opts).unwrap();
        let outcome = report.outcomes.unwrap()[0];
        assert_eq!(report.rmse, outcome.error.abs());
        assert!(((cfg.theta_it - outcome.theta_hat) - outcome.error).abs() == 0.0);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let cfg = SystemConfig {
            tx_power: dbm_to_watts(10.0),
            ..SystemConfig::default()
        };
        let serial = run_monte_carlo_rmse(&cfg, 40, &MonteCarloOptions::default()).unwrap();
        let again = run_monte_carlo_rmse(&cfg, 40, &MonteCarloOptions::default()).unwrap();
        let parallel = run_monte_carlo_rmse(
            &cfg,
            40,
            &MonteCarloOptions {
                workers: 4,
                ..MonteCarloOptions::default()
            },
        )
        .unwrap();
        assert_eq!(serial.rmse.to_bits(), again.rmse.to_bits());
        assert!((serial.rmse - parallel.rmse).abs() <= 1e-15 * serial.rmse);
    }

    #[test]
    fn trial_dump_format() {
        let outcomes = [TrialOutcome {
            trial: 0,
            theta_hat: 0.7,
            error: -0.001,
        }];
        let mut buf = Vec::new();
        write_trial_errors(&outcomes, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "trial,theta_hat_rad,error_rad\n0,0.7,-0.001\n"
        );
    }
}
