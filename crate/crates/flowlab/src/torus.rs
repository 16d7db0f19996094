//! Flat torus base geometry: grid, volume, integration, and the Wirtinger
//! coefficients feeding the finite-difference operators.
//!
//! The torus is C/(Z + tau Z) with Im tau > 0, parametrized by chart
//! coordinates (x, y) in [0,1)^2 via z = x + tau y. The Kahler form is
//! fixed as omega = (i/2) dz ∧ dzbar, so vol = Im tau and the contraction
//! satisfies Lambda_omega(omega) = 1.

use num_complex::Complex64 as C64;

use crate::error::Error;
use crate::field::MatrixField;

/// Discretized flat torus C/(Z + tau Z).
#[derive(Debug, Clone, PartialEq)]
pub struct TorusDomain {
    tau: C64,
    n: usize,
}

impl TorusDomain {
    /// Grid point count per axis must be even and at least 8 so the
    /// 4th-order stencils never wrap onto themselves.
    pub fn new(tau: C64, n: usize) -> Result<Self, Error> {
        if !(tau.im > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidTorus(format!(
                "modulus must satisfy Im tau > 0, got {tau}"
            )));
        }
        if n < 8 {
            return Err(Error::InvalidTorus(format!("resolution {n} below minimum 8")));
        }
        if n % 2 != 0 {
            return Err(Error::InvalidTorus(format!("resolution {n} must be even")));
        }
        Ok(TorusDomain { tau, n })
    }

    pub fn tau(&self) -> C64 {
        self.tau
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Volume of the fundamental domain with respect to omega.
    pub fn vol(&self) -> f64 {
        self.tau.im
    }

    pub fn cell_area(&self) -> f64 {
        self.vol() / (self.n * self.n) as f64
    }

    /// Chart spacing along each axis.
    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Grid point z = x_j + tau y_k for any (possibly out-of-domain) indices.
    /// The chart is centered, x_j = (j - N/2)/N and likewise for y, which
    /// halves the coordinate range the canonical Gaussian metrics see and
    /// keeps their finite-difference constants small.
    pub fn point(&self, j: isize, k: isize) -> C64 {
        C64::new(self.x(j), 0.0) + self.tau * self.y(k)
    }

    pub fn x(&self, j: isize) -> f64 {
        (j as f64 - self.n as f64 / 2.0) / self.n as f64
    }

    pub fn y(&self, k: isize) -> f64 {
        (k as f64 - self.n as f64 / 2.0) / self.n as f64
    }
}

/// 4th-order centered first-derivative weights for offsets -2..=2, per unit
/// grid spacing (divide by dx is folded in by the caller).
pub(crate) const D1_W: [f64; 5] = [
    1.0 / 12.0,
    -2.0 / 3.0,
    0.0,
    2.0 / 3.0,
    -1.0 / 12.0,
];

/// 4th-order centered second-derivative weights for offsets -2..=2.
pub(crate) const D2_W: [f64; 5] = [
    -1.0 / 12.0,
    4.0 / 3.0,
    -5.0 / 2.0,
    4.0 / 3.0,
    -1.0 / 12.0,
];

/// Coefficients (cx, cy) with d_z = cx * D_x + cy * D_y in chart coordinates.
pub(crate) fn dz_coeffs(tau: C64) -> (C64, C64) {
    let alpha = C64::new(0.0, 1.0) * (2.0 * tau.im);
    let alpha = C64::new(1.0, 0.0) / alpha; // 1/(2i Im tau)
    (-tau.conj() * alpha, alpha)
}

/// Coefficients (cx, cy) with d_zbar = cx * D_x + cy * D_y.
pub(crate) fn dzbar_coeffs(tau: C64) -> (C64, C64) {
    let alpha = C64::new(1.0, 0.0) / (C64::new(0.0, 2.0) * tau.im);
    (tau * alpha, -alpha)
}

/// Coefficients (cxx, cyy, cxy) with
/// d_zbar d_z = cxx * D_xx + cyy * D_yy + cxy * D_xy. All three are real.
pub(crate) fn dzbar_dz_coeffs(tau: C64) -> (f64, f64, f64) {
    let t2 = tau.im;
    let denom = 4.0 * t2 * t2;
    (
        tau.norm_sqr() / denom,
        1.0 / denom,
        -2.0 * tau.re / denom,
    )
}

/// Riemann sum of a scalar (1x1) field against the volume form. Exact for
/// constants and for any pure Fourier mode other than the constant one.
pub fn integrate(domain: &TorusDomain, f: &MatrixField) -> Result<C64, Error> {
    if f.rows() != 1 || f.cols() != 1 {
        return Err(Error::ShapeMismatch(format!(
            "integrate expects a scalar field, got {}x{}",
            f.rows(),
            f.cols()
        )));
    }
    if f.n() != domain.n() {
        return Err(Error::ShapeMismatch(format!(
            "field resolution {} does not match domain {}",
            f.n(),
            domain.n()
        )));
    }
    let sum: C64 = f.data().iter().sum();
    Ok(sum * domain.cell_area())
}

/// Contraction with the Kahler form: a (1,1)-form coefficient field F_{z zbar}
/// maps to Lambda_omega F = -2i F_{z zbar}, normalized so omega contracts to 1.
pub fn lambda_contract(f: &MatrixField) -> MatrixField {
    let mut out = f.clone();
    let c = C64::new(0.0, -2.0);
    for v in out.data_mut() {
        *v *= c;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::MatrixField;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn construction_and_volume() {
        let d = TorusDomain::new(c(0.0, 1.0), 64).unwrap();
        assert_eq!(d.vol(), 1.0);
        let d2 = TorusDomain::new(c(0.0, 2.0), 32).unwrap();
        assert_eq!(d2.vol(), 2.0);
        assert!(TorusDomain::new(c(0.0, 1.0), 7).is_err());
        assert!(TorusDomain::new(c(0.0, 1.0), 4).is_err());
        assert!(TorusDomain::new(c(0.0, -1.0), 64).is_err());
        assert!(TorusDomain::new(c(1.0, 0.0), 64).is_err());
    }

    #[test]
    fn volume_matches_cell_sum() {
        for tau in [c(0.0, 1.0), c(0.5, 1.3)] {
            let d = TorusDomain::new(tau, 32).unwrap();
            let total = d.cell_area() * (d.n() * d.n()) as f64;
            assert!((total - d.vol()).abs() <= 1e-12 * d.vol());
        }
    }

    #[test]
    fn integrate_constants_exactly() {
        let d = TorusDomain::new(c(0.0, 1.0), 64).unwrap();
        let f = MatrixField::constant(64, 1, 1, c(1.0, 0.0));
        let v = integrate(&d, &f).unwrap();
        assert!((v - c(1.0, 0.0)).norm() < 1e-14);

        let d2 = TorusDomain::new(c(0.0, 2.0), 64).unwrap();
        let v2 = integrate(&d2, &f).unwrap();
        assert!((v2 - c(2.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn integrate_kills_pure_modes() {
        let d = TorusDomain::new(c(0.0, 1.0), 64).unwrap();
        let f = MatrixField::from_fn(64, 1, 1, |j, k, _, _| {
            let x = j as f64 / 64.0;
            let _ = k;
            c((2.0 * PI * x).sin(), 0.0)
        });
        let v = integrate(&d, &f).unwrap();
        assert!(v.norm() < 1e-12);
    }

    #[test]
    fn lambda_contract_normalization() {
        // omega itself has coefficient i/2 and must contract to 1.
        let f = MatrixField::constant(8, 1, 1, c(0.0, 0.5));
        let g = lambda_contract(&f);
        for v in g.data() {
            assert!((v - c(1.0, 0.0)).norm() < 1e-15);
        }
        let zero = MatrixField::constant(8, 1, 1, c(0.0, 0.0));
        let gz = lambda_contract(&zero);
        assert!(gz.data().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn wirtinger_coefficients_square_torus() {
        let (cx, cy) = dz_coeffs(c(0.0, 1.0));
        assert!((cx - c(0.5, 0.0)).norm() < 1e-15);
        assert!((cy - c(0.0, -0.5)).norm() < 1e-15);
        let (bx, by) = dzbar_coeffs(c(0.0, 1.0));
        assert!((bx - c(0.5, 0.0)).norm() < 1e-15);
        assert!((by - c(0.0, 0.5)).norm() < 1e-15);
        let (cxx, cyy, cxy) = dzbar_dz_coeffs(c(0.0, 1.0));
        assert!((cxx - 0.25).abs() < 1e-15);
        assert!((cyy - 0.25).abs() < 1e-15);
        assert!(cxy.abs() < 1e-15);
    }
}
