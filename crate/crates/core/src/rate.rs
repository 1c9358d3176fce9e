//! Achievable user rates for simultaneous (STAS) and orthogonal (OTAS)
//! training and sensing.

use std::f64::consts::PI;
use std::sync::OnceLock;

use thiserror::Error;

use crate::beam::gain_ratio;
use crate::channel::{path_gain_one_way, PathGain};
use crate::config::SystemConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum RateError {
    #[error("scan time {tau} plus sensing time {tau_s} exceeds the coherence time {coherence}")]
    DurationOverflow {
        tau: usize,
        tau_s: usize,
        coherence: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    Stas,
    Otas,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Misalignment {
    Fixed(f64),
    /// Uniform over [0, 1/L].
    Averaged,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub tau: usize,
    pub rate: f64,
    pub delta: Misalignment,
    pub protocol: Protocol,
}

/// Number of nodes used for δ-averaging.
pub const QUADRATURE_NODES: usize = 64;

/// Receive SNR before IRS beamforming gain: N·P_t·|α_g|²·|α_h|²/σ².
pub fn pre_beamforming_snr(cfg: &SystemConfig) -> f64 {
    let lambda = cfg.wavelength();
    let alpha_g: PathGain = path_gain_one_way(cfg.d_bs_irs, lambda);
    let alpha_h: PathGain = path_gain_one_way(cfg.d_irs_user, lambda);
    cfg.n_bs_antennas as f64 * cfg.tx_power * alpha_g.power() * alpha_h.power() / cfg.noise_power
}

fn spectral_efficiency(cfg: &SystemConfig, delta: f64) -> f64 {
    let g = gain_ratio(delta, cfg.n_res);
    (1.0 + pre_beamforming_snr(cfg) * g * g).log2()
}

fn check_budget(cfg: &SystemConfig, tau: usize, tau_s: usize) -> Result<(), RateError> {
    if tau + tau_s > cfg.coherence_time {
        Err(RateError::DurationOverflow {
            tau,
            tau_s,
            coherence: cfg.coherence_time,
        })
    } else {
        Ok(())
    }
}

/// STAS rate in bits/s/Hz after a scan of `tau` symbols.
pub fn stas_rate(cfg: &SystemConfig, delta: f64, tau: usize) -> Result<f64, RateError> {
    otas_rate(cfg, delta, tau, 0)
}

/// OTAS rate: the data phase also loses the `tau_s` sensing symbols.
pub fn otas_rate(cfg: &SystemConfig, delta: f64, tau: usize, tau_s: usize) -> Result<f64, RateError> {
    check_budget(cfg, tau, tau_s)?;
    let t = cfg.coherence_time as f64;
    let prefactor = (t - tau as f64 - tau_s as f64) / t;
    Ok(prefactor * spectral_efficiency(cfg, delta))
}

/// Gauss–Legendre nodes and weights on [−1, 1], by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn default_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(QUADRATURE_NODES))
}

/// Mean of `f` over δ ~ U(0, width) with an `n`-node rule.
pub fn mean_over_interval(width: f64, nodes: &[f64], weights: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    let half = width / 2.0;
    let integral: f64 = nodes
        .iter()
        .zip(weights)
        .map(|(x, w)| w * f(half * (x + 1.0)))
        .sum::<f64>()
        * half;
    integral / width
}

/// STAS rate averaged over δ ~ U(0, 1/L) for a codebook of `l` beams.
pub fn average_rate_over_delta(cfg: &SystemConfig, l: usize) -> Result<f64, RateError> {
    average_otas_rate_over_delta(cfg, l, 0)
}

/// OTAS rate averaged the same way.
pub fn average_otas_rate_over_delta(cfg: &SystemConfig, l: usize, tau_s: usize) -> Result<f64, RateError> {
    let tau = cfg.symbols_per_beam * l;
    check_budget(cfg, tau, tau_s)?;
    let t = cfg.coherence_time as f64;
    let prefactor = (t - tau as f64 - tau_s as f64) / t;
    let (nodes, weights) = default_rule();
    let mean_se = mean_over_interval(1.0 / l as f64, nodes, weights, |d| spectral_efficiency(cfg, d));
    Ok(prefactor * mean_se)
}
