//! Fisher information and Cramér-Rao bounds for the target angle with the
//! complex echo gain as a nuisance parameter.
//!
//! Three routes are provided: a Schur complement on the assembled 3×3 FIM
//! (valid for any probing matrix), the diagonal-covariance simplification
//! for DFT scanning, and its analytic reduction via Σζ² = m(m²−1)/12.

use std::f64::consts::{FRAC_PI_2, PI};

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use thiserror::Error;

use crate::array::{response, steering_derivative, zeta_energy};
use crate::channel::{path_gain_one_way, path_gain_roundtrip};
use crate::config::SystemConfig;
use crate::sensing::SensingGeometry;

/// Absolute floor below which the Schur complement counts as singular.
pub const SINGULAR_FLOOR: f64 = 1e-300;
/// Relative angular curvature (rad⁻²) below which information is considered
/// lost, e.g. at endfire where cos θ underflows to ~1e-17 instead of 0.
pub const SINGULAR_CURVATURE: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum CrbError {
    #[error("Fisher information about the angle is singular at theta = {theta} rad")]
    SingularInformation { theta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrbMethod {
    General,
    Simplified,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrbResult {
    /// Variance bound, rad².
    pub crb: f64,
    /// Root bound, rad.
    pub rcrb: f64,
    pub method: CrbMethod,
}

impl CrbResult {
    fn new(crb: f64, method: CrbMethod) -> Self {
        CrbResult {
            crb,
            rcrb: crb.sqrt(),
            method,
        }
    }
}

/// Noise-free echo shape u(θ) = a_s(θ)·q^T(θ)·X and its angle derivative.
#[derive(Debug, Clone)]
pub struct UMatrix {
    pub u: Array2<Complex64>,
    pub u_dot: Array2<Complex64>,
}

fn outer_t(a: &Array1<Complex64>, b: &Array1<Complex64>) -> Array2<Complex64> {
    Array2::from_shape_fn((a.len(), b.len()), |(i, j)| a[i] * b[j])
}

pub fn u_matrix(theta: f64, x: &Array2<Complex64>, geometry: &SensingGeometry) -> UMatrix {
    let m = x.nrows();
    let a_s = response(theta.sin(), geometry.n_ses);
    let a_s_dot =
        steering_derivative(theta.clamp(-FRAC_PI_2, FRAC_PI_2), geometry.n_ses).expect("clamped angle");
    let r = x.t().dot(&geometry.q(theta, m));
    let r_dot = x.t().dot(&geometry.q_derivative(theta, m));
    UMatrix {
        u: outer_t(&a_s, &r),
        u_dot: outer_t(&a_s_dot, &r) + outer_t(&a_s, &r_dot),
    }
}

/// tr(A·B^H).
fn trace_ab_h(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y.conj()).sum()
}

/// FIM for ξ = (θ, Re α_s, Im α_s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherMatrix {
    pub f: [[f64; 3]; 3],
    /// Gain at which the FIM was evaluated.
    pub alpha_s: Complex64,
}

impl FisherMatrix {
    pub fn theta_theta(&self) -> f64 {
        self.f[0][0]
    }

    pub fn theta_alpha(&self) -> [f64; 2] {
        [self.f[0][1], self.f[0][2]]
    }

    /// Common diagonal of the 2×2 gain block.
    pub fn alpha_alpha(&self) -> f64 {
        self.f[1][1]
    }
}

pub fn fisher_matrix(
    theta: f64,
    alpha_s: Complex64,
    x: &Array2<Complex64>,
    sigma2: f64,
    geometry: &SensingGeometry,
) -> FisherMatrix {
    let um = u_matrix(theta, x, geometry);
    let k = 2.0 / sigma2;
    let tt = k * alpha_s.norm_sqr() * trace_ab_h(&um.u_dot, &um.u_dot).re;
    let cross = alpha_s.conj() * trace_ab_h(&um.u, &um.u_dot);
    let t_re = k * cross.re;
    let t_im = k * (cross * Complex64::i()).re;
    let aa = k * trace_ab_h(&um.u, &um.u).re;
    FisherMatrix {
        f: [[tt, t_re, t_im], [t_re, aa, 0.0], [t_im, 0.0, aa]],
        alpha_s,
    }
}

/// Schur complement of the gain block, with the 2×2 block inverted as a
/// scalar multiple of the identity.
pub fn crb_general(fm: &FisherMatrix, theta: f64) -> Result<CrbResult, CrbError> {
    let aa = fm.alpha_alpha();
    if aa <= SINGULAR_FLOOR {
        return Err(CrbError::SingularInformation { theta });
    }
    let [b0, b1] = fm.theta_alpha();
    let schur = fm.theta_theta() - (b0 * b0 + b1 * b1) / aa;
    if schur <= SINGULAR_FLOOR || schur <= SINGULAR_CURVATURE * fm.alpha_s.norm_sqr() * aa {
        return Err(CrbError::SingularInformation { theta });
    }
    Ok(CrbResult::new(1.0 / schur, CrbMethod::General))
}

/// σ² / (2|α_s|²·(tr(u̇u̇^H) − |tr(u u̇^H)|²/tr(u u^H))).
pub fn crb_trace_form(
    theta: f64,
    alpha_s: Complex64,
    x: &Array2<Complex64>,
    sigma2: f64,
    geometry: &SensingGeometry,
) -> Result<CrbResult, CrbError> {
    let um = u_matrix(theta, x, geometry);
    let uu = trace_ab_h(&um.u, &um.u).re;
    let dd = trace_ab_h(&um.u_dot, &um.u_dot).re;
    let ud = trace_ab_h(&um.u, &um.u_dot).norm_sqr();
    let curvature = dd - ud / uu;
    if uu.is_nan() || uu <= 0.0 || curvature <= SINGULAR_CURVATURE * uu {
        return Err(CrbError::SingularInformation { theta });
    }
    Ok(CrbResult::new(
        sigma2 / (2.0 * alpha_s.norm_sqr() * curvature),
        CrbMethod::General,
    ))
}

/// N·P_t·|α_g|²·|α_s|²/σ² times the number of scanned symbols.
fn scan_snr(cfg: &SystemConfig) -> f64 {
    let lambda = cfg.wavelength();
    let ag = path_gain_one_way(cfg.d_bs_irs, lambda).power();
    let as_ = path_gain_roundtrip(cfg.d_irs_target, lambda, cfg.rcs).power();
    cfg.scan_time() as f64 * cfg.n_bs_antennas as f64 * cfg.tx_power * ag * as_ / cfg.noise_power
}

fn check_not_endfire(theta: f64) -> Result<(), CrbError> {
    if !theta.is_finite() || theta.abs() >= FRAC_PI_2 || theta.cos().abs() < 1e-12 {
        Err(CrbError::SingularInformation { theta })
    } else {
        Ok(())
    }
}

/// CRB for DFT scanning, where the cross term vanishes:
/// σ²/(2·L·N·P_t·|α_s|²·|α_g|²·(M‖ȧ_s‖² + M_s‖q̇‖²)).
pub fn crb_simplified(cfg: &SystemConfig, theta: f64) -> Result<CrbResult, CrbError> {
    check_not_endfire(theta)?;
    let geometry = SensingGeometry::from_config(cfg);
    let a_s_dot = steering_derivative(theta, cfg.n_ses).expect("checked angle");
    let q_dot = geometry.q_derivative(theta, cfg.n_res);
    let norm = |v: &Array1<Complex64>| v.iter().map(|x| x.norm_sqr()).sum::<f64>();
    let info = cfg.n_res as f64 * norm(&a_s_dot) + cfg.n_ses as f64 * norm(&q_dot);
    Ok(CrbResult::new(
        1.0 / (2.0 * scan_snr(cfg) * info),
        CrbMethod::Simplified,
    ))
}

/// 6σ²/(L·N·P_t·|α_s|²·|α_g|²·π²cos²θ·M·M_s·(M² + M_s² − 2)).
pub fn crb_closed_form(cfg: &SystemConfig, theta: f64) -> Result<CrbResult, CrbError> {
    check_not_endfire(theta)?;
    let (m, ms) = (cfg.n_res as f64, cfg.n_ses as f64);
    let cos2 = theta.cos().powi(2);
    // M·‖ζ_Ms‖² + M_s·‖ζ_M‖² = M·M_s·(M² + M_s² − 2)/12
    let zeta_terms = m * zeta_energy(cfg.n_ses) + ms * zeta_energy(cfg.n_res);
    debug_assert!((zeta_terms - m * ms * (m * m + ms * ms - 2.0) / 12.0).abs() <= 1e-9 * zeta_terms);
    let crb = 1.0 / (2.0 * scan_snr(cfg) * PI * PI * cos2 * zeta_terms);
    Ok(CrbResult::new(crb, CrbMethod::ClosedForm))
}
