//! DFT beam scanning at the IRS and best-beam selection at the user.

use std::f64::consts::PI;

use ndarray::Array1;
use num_complex::Complex64;
use thiserror::Error;

use crate::array::{response, SpatialFrequency};
use crate::channel::{transmit_beamformer, ChannelSet};
use crate::config::SystemConfig;
use crate::noise::NoiseStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum CodebookError {
    #[error("codebook size {beams} must be at least the array size {elements} (and both positive)")]
    InvalidSize { elements: usize, beams: usize },
}

/// `L` reflection vectors whose spatial frequencies tile [−1, 1] uniformly.
#[derive(Debug, Clone)]
pub struct Codebook {
    beams: Vec<Array1<Complex64>>,
    psi_grid: Vec<f64>,
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.beams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beams.is_empty()
    }

    pub fn n_elements(&self) -> usize {
        self.beams.first().map_or(0, |b| b.len())
    }

    pub fn beams(&self) -> &[Array1<Complex64>] {
        &self.beams
    }

    pub fn beam(&self, i: usize) -> &Array1<Complex64> {
        &self.beams[i]
    }

    /// Spatial frequency of beam `i` (0-based): −1 + (2i+1)/L.
    pub fn psi(&self, i: usize) -> f64 {
        self.psi_grid[i]
    }

    pub fn psi_grid(&self) -> &[f64] {
        &self.psi_grid
    }

    /// Physical pointing angle of beam `i`.
    pub fn angle(&self, i: usize) -> f64 {
        self.psi_grid[i].asin()
    }
}

pub fn dft_codebook(m: usize, l: usize) -> Result<Codebook, CodebookError> {
    if m == 0 || l < m {
        return Err(CodebookError::InvalidSize {
            elements: m,
            beams: l,
        });
    }
    let psi_grid: Vec<f64> = (0..l).map(|i| -1.0 + (2 * i + 1) as f64 / l as f64).collect();
    let beams = psi_grid.iter().map(|&psi| response(psi, m)).collect();
    Ok(Codebook { beams, psi_grid })
}

/// Outcome of one downlink scan as seen by the user.
#[derive(Debug, Clone)]
pub struct ScanObservation {
    /// Received samples, beam-major: `K` consecutive samples per beam.
    pub y_user: Vec<Complex64>,
    /// Selected beam, 0-based.
    pub best_index: usize,
    /// Spatial-frequency distance between the user direction and the
    /// selected beam.
    pub delta: SpatialFrequency,
}

/// Relative tolerance under which two beam energies count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

/// Index of the largest entry; near-exact ties go to the lowest index.
pub fn select_best(energies: &[f64]) -> usize {
    let max = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    energies
        .iter()
        .position(|&e| e >= max - TIE_TOLERANCE * max.abs())
        .unwrap_or(0)
}

/// |x| folded onto the 2-periodic spatial-frequency circle, in [0, 1].
pub fn wrapped_distance(a: f64, b: f64) -> f64 {
    let d = a - b;
    (d - 2.0 * (d / 2.0).round()).abs()
}

pub fn simulate_user_scan(
    ch: &ChannelSet,
    cb: &Codebook,
    cfg: &SystemConfig,
    noise: &mut NoiseStream,
) -> ScanObservation {
    let k = cfg.symbols_per_beam;
    let w = transmit_beamformer(cfg);
    // √P_t·G·w reaches the REs; each beam applies diag(φ) then h_u^H.
    let incident = ch.g.dot(&w).mapv(|x| x * cfg.tx_power.sqrt());
    let mut y_user = Vec::with_capacity(cb.len() * k);
    let mut energies = Vec::with_capacity(cb.len());
    for phi in cb.beams() {
        let clean: Complex64 = ch
            .h_u
            .iter()
            .zip(phi.iter().zip(incident.iter()))
            .map(|(h, (p, x))| h.conj() * p * x)
            .sum();
        let mut energy = 0.0;
        for _ in 0..k {
            let y = clean + noise.sample();
            energy += y.norm_sqr();
            y_user.push(y);
        }
        energies.push(energy);
    }
    let best_index = select_best(&energies);
    let delta = wrapped_distance(ch.psi_iu.value(), cb.psi(best_index));
    ScanObservation {
        y_user,
        best_index,
        delta: SpatialFrequency::new(delta).expect("wrapped distance is at most 1"),
    }
}

/// IRS beamforming gain |sin(πmδ/2) / sin(πδ/2)| for a misalignment δ.
pub fn gain_ratio(delta: f64, m: usize) -> f64 {
    let m_f = m as f64;
    let den = (PI * delta / 2.0).sin();
    if den.abs() < 1e-12 {
        // Removable singularity; m·δ is near an even integer so the limit is m.
        return m_f;
    }
    ((PI * m_f * delta / 2.0).sin() / den).abs().min(m_f)
}
