//! Line-of-sight channels of the BS → IRS → {user, target → IRS SEs} links.

use std::f64::consts::PI;

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::array::{response, SpatialFrequency};
use crate::config::SystemConfig;

/// Complex amplitude of one propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathGain(pub Complex64);

impl PathGain {
    pub fn value(self) -> Complex64 {
        self.0
    }

    pub fn magnitude(self) -> f64 {
        self.0.norm()
    }

    pub fn power(self) -> f64 {
        self.0.norm_sqr()
    }
}

/// Free-space gain λ/(4πd)·e^{j2πd/λ}.
pub fn path_gain_one_way(d: f64, lambda: f64) -> PathGain {
    let magnitude = lambda / (4.0 * PI * d);
    let phase = (2.0 * PI * d / lambda).rem_euclid(2.0 * PI);
    PathGain(Complex64::from_polar(magnitude, phase))
}

/// Radar round-trip gain √(λ²κ/(64π³d⁴))·e^{j4πd/λ}.
pub fn path_gain_roundtrip(d: f64, lambda: f64, kappa: f64) -> PathGain {
    let magnitude = (lambda * lambda * kappa / (64.0 * PI.powi(3) * d.powi(4))).sqrt();
    let phase = (4.0 * PI * d / lambda).rem_euclid(2.0 * PI);
    PathGain(Complex64::from_polar(magnitude, phase))
}

#[derive(Debug, Clone)]
pub struct ChannelSet {
    /// BS → IRS REs, M×N.
    pub g: Array2<Complex64>,
    /// IRS REs → user, length M.
    pub h_u: Array1<Complex64>,
    /// IRS REs → target → IRS SEs, M_s×M.
    pub h_t: Array2<Complex64>,
    pub alpha_g: PathGain,
    pub alpha_h: PathGain,
    pub alpha_s: PathGain,
    /// Effective user direction sin θ_IU − sin θ_BI.
    pub psi_iu: SpatialFrequency,
    /// Effective target direction sin θ_BI − sin θ_IT.
    pub psi_it: SpatialFrequency,
}

fn outer(a: &Array1<Complex64>, b_conj: &Array1<Complex64>) -> Array2<Complex64> {
    Array2::from_shape_fn((a.len(), b_conj.len()), |(i, j)| a[i] * b_conj[j].conj())
}

pub fn build_channels(cfg: &SystemConfig) -> ChannelSet {
    let lambda = cfg.wavelength();
    let alpha_g = path_gain_one_way(cfg.d_bs_irs, lambda);
    let alpha_h = path_gain_one_way(cfg.d_irs_user, lambda);
    let alpha_s = path_gain_roundtrip(cfg.d_irs_target, lambda, cfg.rcs);

    let a_r_bi = response(cfg.theta_bi.sin(), cfg.n_res);
    let a_b = response(cfg.vartheta_bi.sin(), cfg.n_bs_antennas);
    let a_r_iu = response(cfg.theta_iu.sin(), cfg.n_res);
    let a_r_it = response(cfg.theta_it.sin(), cfg.n_res);
    let a_s_it = response(cfg.theta_it.sin(), cfg.n_ses);

    // Angles are validated to (-π/2, π/2), so both differences lie in [-2, 2].
    let psi_iu = SpatialFrequency::new(cfg.theta_iu.sin() - cfg.theta_bi.sin()).expect("validated angles");
    let psi_it = SpatialFrequency::new(cfg.theta_bi.sin() - cfg.theta_it.sin()).expect("validated angles");

    ChannelSet {
        g: outer(&a_r_bi, &a_b).mapv(|x| alpha_g.0 * x),
        h_u: a_r_iu.mapv(|x| alpha_h.0 * x),
        h_t: outer(&a_s_it, &a_r_it).mapv(|x| alpha_s.0 * x),
        alpha_g,
        alpha_h,
        alpha_s,
        psi_iu,
        psi_it,
    }
}

/// Matched BS beamformer a_b(ϑ_BI)/√N.
pub fn transmit_beamformer(cfg: &SystemConfig) -> Array1<Complex64> {
    let n = cfg.n_bs_antennas;
    response(cfg.vartheta_bi.sin(), n).mapv(|x| x / (n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::wavelength;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const LAMBDA_28GHZ: f64 = 0.010_706_873_5;

    fn frob(m: &Array2<Complex64>) -> f64 {
        m.iter().map(|x| x.norm_sqr()).sum()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn one_way_gain_values() {
        let lambda = 0.37;
        assert!((path_gain_one_way(lambda / (4.0 * PI), lambda).magnitude() - 1.0).abs() < 1e-14);
        // λ/(4π·30), λ/(4π·10) at 28 GHz
        let lambda = wavelength(28e9);
        assert!(rel(path_gain_one_way(30.0, lambda).magnitude(), 2.840_086_404_3e-5) < 1e-9);
        assert!(rel(path_gain_one_way(10.0, lambda).magnitude(), 8.520_259_212_9e-5) < 1e-9);
        let g = path_gain_one_way(30.0, lambda);
        let expected_phase = (2.0 * PI * 30.0 / lambda).rem_euclid(2.0 * PI);
        let phase = g.value().arg().rem_euclid(2.0 * PI);
        assert!((phase - expected_phase).abs() < 1e-9);
    }

    #[test]
    fn roundtrip_gain_values() {
        let a = path_gain_roundtrip(5.0, LAMBDA_28GHZ, 5.011_87);
        assert!(rel(a.power(), 4.633e-10) < 1e-3);
        let b = path_gain_roundtrip(5.0, LAMBDA_28GHZ, 4.0 * 5.011_87);
        assert!(rel(b.magnitude(), 2.0 * a.magnitude()) < 1e-12);
        let c = path_gain_roundtrip(10.0, LAMBDA_28GHZ, 5.011_87);
        assert!(rel(c.magnitude(), a.magnitude() / 4.0) < 1e-12);
    }

    #[test]
    fn baseline_effective_directions() {
        let ch = build_channels(&SystemConfig::default());
        assert!((ch.psi_iu.value() - 0.5).abs() < 1e-15);
        // −0.5 − sin 40°
        assert!((ch.psi_it.value() - (-1.142_787_609_686_539_3)).abs() < 1e-12);
    }

    /// Rank one checked via all 2×2 minors vanishing.
    fn is_rank_one(m: &Array2<Complex64>) -> bool {
        let scale = frob(m);
        let (r, c) = m.dim();
        for i in 1..r {
            for j in 1..c {
                let minor = m[[0, 0]] * m[[i, j]] - m[[0, j]] * m[[i, 0]];
                if minor.norm_sqr() > 1e-20 * scale * scale {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn channels_are_rank_one_with_expected_energy() {
        let cfg = SystemConfig::default();
        let ch = build_channels(&cfg);
        assert!(is_rank_one(&ch.g));
        assert!(is_rank_one(&ch.h_t));
        let (m, n, ms) = (cfg.n_res as f64, cfg.n_bs_antennas as f64, cfg.n_ses as f64);
        assert!(rel(frob(&ch.g), ch.alpha_g.power() * m * n) < 1e-9);
        assert!(rel(ch.h_u.iter().map(|x| x.norm_sqr()).sum(), ch.alpha_h.power() * m) < 1e-9);
        assert!(rel(frob(&ch.h_t), ch.alpha_s.power() * m * ms) < 1e-9);
    }

    #[test]
    fn beamformer_is_matched() {
        let cfg = SystemConfig {
            vartheta_bi: 0.3,
            ..SystemConfig::default()
        };
        let ch = build_channels(&cfg);
        let w = transmit_beamformer(&cfg);
        let norm: f64 = w.iter().map(|x| x.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        assert!(w.iter().all(|x| (x.norm() - 0.125).abs() < 1e-15));
        let gw = ch.g.dot(&w);
        let expected = response(cfg.theta_bi.sin(), cfg.n_res)
            .mapv(|x| x * ch.alpha_g.0 * (cfg.n_bs_antennas as f64).sqrt());
        for (a, b) in gw.iter().zip(expected.iter()) {
            assert!((a - b).norm() < 1e-12 * b.norm());
        }
    }

    fn random_phases(rng: &mut ChaCha8Rng, m: usize) -> Array1<Complex64> {
        Array1::from_iter((0..m).map(|_| Complex64::cis(rng.random_range(0.0..2.0 * PI))))
    }

    #[test]
    fn cascade_identities_hold_for_random_reflections() {
        let cfg = SystemConfig::default();
        let ch = build_channels(&cfg);
        let w = transmit_beamformer(&cfg);
        let gw = ch.g.dot(&w);
        let sqrt_n = (cfg.n_bs_antennas as f64).sqrt();
        let q_iu = response(ch.psi_iu.value(), cfg.n_res);
        let q_it = response(ch.psi_it.value(), cfg.n_res);
        let a_s = response(cfg.theta_it.sin(), cfg.n_ses);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let phi = random_phases(&mut rng, cfg.n_res);
            let reflected = &phi * &gw;

            let raw_user: Complex64 = ch.h_u.iter().zip(&reflected).map(|(h, r)| h.conj() * r).sum();
            let ip: Complex64 = q_iu.iter().zip(&phi).map(|(q, p)| q.conj() * p).sum();
            let reduced_user = ch.alpha_g.0 * ch.alpha_h.0.conj() * sqrt_n * ip;
            assert!((raw_user - reduced_user).norm() <= 1e-10 * reduced_user.norm().max(1e-30));

            let raw_echo = ch.h_t.dot(&reflected);
            let ipt: Complex64 = q_it.iter().zip(&phi).map(|(q, p)| q * p).sum();
            let scale = ch.alpha_g.0 * ch.alpha_s.0 * sqrt_n * ipt;
            let energy: f64 = raw_echo.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            for (r, a) in raw_echo.iter().zip(a_s.iter()) {
                assert!((r - scale * a).norm() <= 1e-10 * energy);
            }
        }
    }

    proptest! {
        #[test]
        fn gains_scale_with_distance(d in 0.5f64..500.0, f_ghz in 1.0f64..100.0, k in 0.01f64..100.0) {
            let lambda = wavelength(f_ghz * 1e9);
            let g = path_gain_one_way(d, lambda);
            prop_assert!(rel(g.magnitude(), lambda / (4.0 * PI * d)) < 1e-12);
            let s = path_gain_roundtrip(d, lambda, k);
            let s2 = path_gain_roundtrip(2.0 * d, lambda, k);
            prop_assert!(rel(s2.magnitude() * 4.0, s.magnitude()) < 1e-12);
        }
    }
}
