//! Half-wavelength ULA responses, centered at the array midpoint.
//!
//! Everything here works on the spatial frequency ψ = sin θ (or a difference
//! of sines). Cascaded IRS links produce effective directions whose "sine"
//! can exceed 1, so physical angles are only converted at the boundary.

use std::f64::consts::{FRAC_PI_2, PI};

use ndarray::Array1;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeometryError {
    #[error("angle {0} rad outside [-pi/2, pi/2]")]
    InvalidAngle(f64),
    #[error("spatial frequency {0} outside [-2, 2]")]
    InvalidSpatialFrequency(f64),
}

/// A ULA spatial frequency: the sine of an angle, or a difference of two.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SpatialFrequency(f64);

impl SpatialFrequency {
    pub fn new(psi: f64) -> Result<Self, GeometryError> {
        if psi.is_finite() && psi.abs() <= 2.0 {
            Ok(SpatialFrequency(psi))
        } else {
            Err(GeometryError::InvalidSpatialFrequency(psi))
        }
    }

    pub fn from_angle(theta: f64) -> Result<Self, GeometryError> {
        check_angle(theta)?;
        Ok(SpatialFrequency(theta.sin()))
    }

    /// `sin(a) - sin(b)` for two physical angles.
    pub fn between(a: f64, b: f64) -> Result<Self, GeometryError> {
        check_angle(a)?;
        check_angle(b)?;
        Ok(SpatialFrequency(a.sin() - b.sin()))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// The physical angle with this sine, when one exists.
    pub fn angle(self) -> Option<f64> {
        (self.0.abs() <= 1.0).then(|| self.0.asin())
    }
}

fn check_angle(theta: f64) -> Result<(), GeometryError> {
    if theta.is_finite() && theta.abs() <= FRAC_PI_2 {
        Ok(())
    } else {
        Err(GeometryError::InvalidAngle(theta))
    }
}

/// Element offsets from the array center, `-(m-1)/2 ..= (m-1)/2`.
#[inline]
fn offset(k: usize, m: usize) -> f64 {
    k as f64 - (m as f64 - 1.0) / 2.0
}

/// Writes the response for spatial frequency `psi` into `out` (length m).
pub fn fill_response(psi: f64, out: &mut [Complex64]) {
    let m = out.len();
    for (k, v) in out.iter_mut().enumerate() {
        *v = Complex64::cis(PI * psi * offset(k, m));
    }
}

/// Unchecked response vector for spatial frequency `psi`.
pub fn response(psi: f64, m: usize) -> Array1<Complex64> {
    let mut out = Array1::zeros(m);
    fill_response(psi, out.as_slice_mut().expect("contiguous"));
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    elements: Array1<Complex64>,
    psi: SpatialFrequency,
}

impl SteeringVector {
    pub fn elements(&self) -> &Array1<Complex64> {
        &self.elements
    }

    pub fn into_elements(self) -> Array1<Complex64> {
        self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn spatial_frequency(&self) -> SpatialFrequency {
        self.psi
    }

    pub fn angle(&self) -> Option<f64> {
        self.psi.angle()
    }
}

/// Response of an `m`-element ULA towards `theta`.
pub fn steering_vector(theta: f64, m: usize) -> Result<SteeringVector, GeometryError> {
    let psi = SpatialFrequency::from_angle(theta)?;
    Ok(steering_from_psi(psi, m))
}

pub fn steering_from_psi(psi: SpatialFrequency, m: usize) -> SteeringVector {
    SteeringVector {
        elements: response(psi.value(), m),
        psi,
    }
}

/// Diagonal of the element-offset matrix ζ for an `m`-element array.
pub fn zeta(m: usize) -> Array1<f64> {
    Array1::from_iter((0..m).map(|k| offset(k, m)))
}

/// d a(θ)/dθ = jπ cos θ · ζ · a(θ).
pub fn steering_derivative(theta: f64, m: usize) -> Result<Array1<Complex64>, GeometryError> {
    check_angle(theta)?;
    let a = response(theta.sin(), m);
    Ok(scaled_offsets(&a, PI * theta.cos()))
}

/// Returns `j·scale·ζ·v`.
pub(crate) fn scaled_offsets(v: &Array1<Complex64>, scale: f64) -> Array1<Complex64> {
    let m = v.len();
    Array1::from_iter(
        v.iter()
            .enumerate()
            .map(|(k, x)| Complex64::new(0.0, scale * offset(k, m)) * x),
    )
}

/// Σ ζ_k² = m(m²−1)/12.
pub fn zeta_energy(m: usize) -> f64 {
    let m = m as f64;
    m * (m * m - 1.0) / 12.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn norm_sqr(v: &Array1<Complex64>) -> f64 {
        v.iter().map(|x| x.norm_sqr()).sum()
    }

    fn inner(a: &Array1<Complex64>, b: &Array1<Complex64>) -> Complex64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn broadside_is_all_ones() {
        let a = steering_vector(0.0, 4).unwrap();
        assert!(a
            .elements()
            .iter()
            .all(|x| close(*x, Complex64::new(1.0, 0.0), 1e-15)));
    }

    #[test]
    fn endfire_two_elements() {
        let a = steering_vector(FRAC_PI_2, 2).unwrap();
        let e = a.elements();
        assert!(close(e[0], Complex64::new(0.0, -1.0), 1e-15));
        assert!(close(e[1], Complex64::new(0.0, 1.0), 1e-15));
    }

    #[test]
    fn norm_equals_length() {
        let a = steering_vector(PI / 6.0, 8).unwrap();
        assert!((inner(a.elements(), a.elements()).re - 8.0).abs() < 1e-12);
        assert!(a.elements().iter().all(|x| (x.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn out_of_domain_angle() {
        assert_eq!(
            steering_vector(2.0, 4).unwrap_err(),
            GeometryError::InvalidAngle(2.0)
        );
        assert!(SpatialFrequency::new(2.5).is_err());
    }

    #[test]
    fn psi_form_matches_angle_form() {
        let psi = SpatialFrequency::between(0.0, (-30f64).to_radians()).unwrap();
        assert!((psi.value() - 0.5).abs() < 1e-15);
        let a = steering_from_psi(psi, 4);
        let b = steering_vector(0.5f64.asin(), 4).unwrap();
        for (x, y) in a.elements().iter().zip(b.elements()) {
            assert!(close(*x, *y, 1e-14));
        }
    }

    #[test]
    fn psi_beyond_one() {
        let a = steering_from_psi(SpatialFrequency::new(1.2).unwrap(), 2);
        assert!(a.angle().is_none());
        assert!(close(a.elements()[0], Complex64::cis(-0.6 * PI), 1e-15));
        assert!(close(a.elements()[1], Complex64::cis(0.6 * PI), 1e-15));
    }

    #[test]
    fn zeta_entries() {
        assert_eq!(zeta(2).to_vec(), vec![-0.5, 0.5]);
        assert_eq!(zeta(3).to_vec(), vec![-1.0, 0.0, 1.0]);
        let z8 = zeta(8);
        assert_eq!(z8.sum(), 0.0);
        let direct: f64 = z8.iter().map(|z| z * z).sum();
        assert_eq!(direct, 42.0);
        assert_eq!(zeta_energy(8), 42.0);
    }

    fn finite_difference(theta: f64, m: usize) -> Array1<Complex64> {
        let h = 1e-6;
        let plus = response((theta + h).sin(), m);
        let minus = response((theta - h).sin(), m);
        (plus - minus).mapv(|x| x / (2.0 * h))
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for (theta, m, expected_norm) in [
            // π²·2·3/12
            (0.0, 2, 4.934_802_200_544_679),
            // π²·cos²(40°)·42, evaluated independently
            (40f64.to_radians(), 8, 243.252_307_612_272_87),
        ] {
            let d = steering_derivative(theta, m).unwrap();
            let fd = finite_difference(theta, m);
            for (x, y) in d.iter().zip(fd.iter()) {
                assert!((x - y).norm() < 1e-5);
            }
            assert!((norm_sqr(&d) - expected_norm).abs() < 1e-9 * expected_norm);
            assert!((norm_sqr(&fd) - expected_norm).abs() < 1e-5 * expected_norm);
        }
        let d = steering_derivative(FRAC_PI_2, 16).unwrap();
        assert!(norm_sqr(&d) < 1e-25);
    }

    #[test]
    fn orthogonal_to_derivative_on_grid() {
        for i in 0..181 {
            let theta = (-90.0 + i as f64).to_radians().clamp(-FRAC_PI_2, FRAC_PI_2);
            for m in [8, 64] {
                let a = response(theta.sin(), m);
                let d = steering_derivative(theta, m).unwrap();
                let ip = inner(&a, &d);
                assert!(ip.re.abs() < 1e-9 && ip.im.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn dft_grid_is_orthogonal() {
        let l = 16;
        let beams: Vec<_> = (1..=l)
            .map(|i| response(-1.0 + (2 * i - 1) as f64 / l as f64, l))
            .collect();
        for i in 0..l {
            for j in 0..l {
                if i != j {
                    assert!(inner(&beams[i], &beams[j]).norm() < 1e-9 * l as f64);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn mirrored_angle_conjugates(theta in -FRAC_PI_2..FRAC_PI_2, m in 1usize..40) {
            let a = steering_vector(theta, m).unwrap();
            let b = steering_vector(-theta, m).unwrap();
            for (x, y) in a.elements().iter().zip(b.elements()) {
                prop_assert!((x.conj() - y).norm() < 1e-12);
            }
        }

        #[test]
        fn unit_modulus_and_norm(psi in -2.0f64..2.0, m in 1usize..128) {
            let a = steering_from_psi(SpatialFrequency::new(psi).unwrap(), m);
            prop_assert!(a.elements().iter().all(|x| (x.norm() - 1.0).abs() < 1e-12));
            prop_assert!((norm_sqr(a.elements()) / m as f64 - 1.0).abs() < 1e-9);
        }
    }
}
