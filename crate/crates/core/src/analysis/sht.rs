//! Real orthonormal spherical harmonics and an exact transform on the
//! Gauss × uniform grid.
//!
//! Basis: `Y_{ℓ0} = q_{ℓ0}(cos θ)`, `Y_{ℓm} = √2 q_{ℓm}(cos θ) cos mφ` and
//! `Y_{ℓ,-m} = √2 q_{ℓm}(cos θ) sin mφ` for `m > 0`, where `q_{ℓm}` is the
//! associated Legendre function normalized to `∫ q² dΩ/(2π) = 1`, without
//! the Condon–Shortley phase. Transforms use the reference-sphere weights of
//! the mesh, so on an ellipsoid they act in the chart parameters.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::surface::{Density, SurfaceMesh};

/// Coefficients `φ̂_{ℓm}` for `ℓ ≤ lmax`, stored at `ℓ² + ℓ + m`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralCoeffs {
    lmax: usize,
    coeffs: Vec<f64>,
}

#[inline]
fn index(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

impl SpectralCoeffs {
    pub fn zeros(lmax: usize) -> Self {
        Self { lmax, coeffs: vec![0.0; (lmax + 1) * (lmax + 1)] }
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn get(&self, l: usize, m: i64) -> f64 {
        assert!(l <= self.lmax && m.unsigned_abs() as usize <= l);
        self.coeffs[index(l, m)]
    }

    pub fn set(&mut self, l: usize, m: i64, v: f64) {
        assert!(l <= self.lmax && m.unsigned_abs() as usize <= l);
        self.coeffs[index(l, m)] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }

    /// Sum of squared coefficients of degree `l`.
    pub fn degree_power(&self, l: usize) -> f64 {
        self.coeffs[l * l..(l + 1) * (l + 1)].iter().map(|c| c * c).sum()
    }

    /// Multiplies every degree-`ℓ` block by `f(ℓ)`.
    pub fn map_degrees(&self, f: impl Fn(usize) -> f64) -> Self {
        let mut out = self.clone();
        for l in 0..=self.lmax {
            let g = f(l);
            for c in &mut out.coeffs[l * l..(l + 1) * (l + 1)] {
                *c *= g;
            }
        }
        out
    }
}

/// `q_{ℓm}(x)` for `0 ≤ m ≤ ℓ ≤ lmax` at `x = cos θ`, stored at
/// `ℓ(ℓ+1)/2 + m`.
pub fn normalized_legendre(lmax: usize, x: f64) -> Vec<f64> {
    let tri = |l: usize, m: usize| l * (l + 1) / 2 + m;
    let mut q = vec![0.0; (lmax + 1) * (lmax + 2) / 2];
    let sin = (1.0 - x * x).max(0.0).sqrt();
    let mut qmm = 1.0 / (4.0 * PI).sqrt();
    for m in 0..=lmax {
        if m > 0 {
            qmm *= ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * sin;
        }
        q[tri(m, m)] = qmm;
        if m < lmax {
            q[tri(m + 1, m)] = x * ((2 * m + 3) as f64).sqrt() * qmm;
        }
        for l in (m + 2)..=lmax {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            q[tri(l, m)] = a * (x * q[tri(l - 1, m)] - b * q[tri(l - 2, m)]);
        }
    }
    q
}

/// Real orthonormal `Y_{ℓm}(θ, φ)`.
pub fn real_harmonic(l: usize, m: i64, theta: f64, phi: f64) -> f64 {
    let am = m.unsigned_abs() as usize;
    assert!(am <= l, "|m| must not exceed l");
    let q = normalized_legendre(l, theta.cos())[l * (l + 1) / 2 + am];
    match m {
        0 => q,
        m if m > 0 => 2f64.sqrt() * q * (m as f64 * phi).cos(),
        m => 2f64.sqrt() * q * (-m as f64 * phi).sin(),
    }
}

fn check_band(mesh: &SurfaceMesh, lmax: usize) -> Result<()> {
    let (nlat, nlon) = mesh.resolution();
    if nlat < lmax + 1 || nlon < 2 * lmax + 1 {
        return Err(Error::Aliasing { lmax, nlat, nlon });
    }
    Ok(())
}

/// Analysis `φ̂_{ℓm} = ∫ φ Y_{ℓm} dΩ` by the grid rule; exact for
/// band-limited `φ` of degree `≤ lmax` when the band check passes.
pub fn sht_forward(mesh: &SurfaceMesh, phi: &Density, lmax: usize) -> Result<SpectralCoeffs> {
    phi.check_mesh(mesh)?;
    forward_values(mesh, phi.values(), lmax)
}

pub fn forward_values(mesh: &SurfaceMesh, values: &[f64], lmax: usize) -> Result<SpectralCoeffs> {
    check_band(mesh, lmax)?;
    if values.len() != mesh.len() {
        return Err(Error::SizeMismatch { expected: mesh.len(), got: values.len() });
    }
    let (nlat, nlon) = mesh.resolution();
    let dphi = 2.0 * PI / nlon as f64;
    let mut out = SpectralCoeffs::zeros(lmax);
    let mut cos_part = vec![0.0; lmax + 1];
    let mut sin_part = vec![0.0; lmax + 1];
    for i in 0..nlat {
        let ring = &values[i * nlon..(i + 1) * nlon];
        for m in 0..=lmax {
            let (mut c, mut s) = (0.0, 0.0);
            for (k, v) in ring.iter().enumerate() {
                let (sn, cs) = (m as f64 * k as f64 * dphi).sin_cos();
                c += v * cs;
                s += v * sn;
            }
            cos_part[m] = c * dphi;
            sin_part[m] = s * dphi;
        }
        let w = mesh.latitude_weights()[i];
        let q = normalized_legendre(lmax, mesh.colatitudes()[i].cos());
        for l in 0..=lmax {
            let base = l * (l + 1) / 2;
            out.coeffs[l * l + l] += w * q[base] * cos_part[0];
            for m in 1..=l {
                let f = w * 2f64.sqrt() * q[base + m];
                out.coeffs[l * l + l + m] += f * cos_part[m];
                out.coeffs[l * l + l - m] += f * sin_part[m];
            }
        }
    }
    Ok(out)
}

/// Synthesis of nodal values on `mesh`.
pub fn sht_inverse(coeffs: &SpectralCoeffs, mesh: &SurfaceMesh) -> Result<Density> {
    let values = inverse_values(coeffs, mesh)?;
    Density::new(mesh, values)
}

pub fn inverse_values(coeffs: &SpectralCoeffs, mesh: &SurfaceMesh) -> Result<Vec<f64>> {
    let lmax = coeffs.lmax;
    check_band(mesh, lmax)?;
    let (nlat, nlon) = mesh.resolution();
    let dphi = 2.0 * PI / nlon as f64;
    let mut values = vec![0.0; mesh.len()];
    let mut cos_part = vec![0.0; lmax + 1];
    let mut sin_part = vec![0.0; lmax + 1];
    for i in 0..nlat {
        let q = normalized_legendre(lmax, mesh.colatitudes()[i].cos());
        cos_part.iter_mut().for_each(|v| *v = 0.0);
        sin_part.iter_mut().for_each(|v| *v = 0.0);
        for l in 0..=lmax {
            let base = l * (l + 1) / 2;
            cos_part[0] += q[base] * coeffs.coeffs[l * l + l];
            for m in 1..=l {
                let f = 2f64.sqrt() * q[base + m];
                cos_part[m] += f * coeffs.coeffs[l * l + l + m];
                sin_part[m] += f * coeffs.coeffs[l * l + l - m];
            }
        }
        for k in 0..nlon {
            let mut v = cos_part[0];
            for m in 1..=lmax {
                let (sn, cs) = (m as f64 * k as f64 * dphi).sin_cos();
                v += cos_part[m] * cs + sin_part[m] * sn;
            }
            values[i * nlon + k] = v;
        }
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mesh(nlat: usize) -> SurfaceMesh {
        SurfaceMesh::sphere(1.0, [0.0; 3], nlat, 2 * nlat).unwrap()
    }

    #[test]
    fn single_mode_is_recovered() {
        let m = mesh(12);
        let phi = Density::from_fn(&m, |_, [t, p]| real_harmonic(2, 1, t, p));
        let c = sht_forward(&m, &phi, 6).unwrap();
        for l in 0..=6 {
            for mm in -(l as i64)..=(l as i64) {
                let expect = if (l, mm) == (2, 1) { 1.0 } else { 0.0 };
                assert!((c.get(l, mm) - expect).abs() < 1e-12, "({l},{mm}) {}", c.get(l, mm));
            }
        }
    }

    #[test]
    fn constant_function() {
        let m = mesh(8);
        let c = sht_forward(&m, &Density::constant(&m, 1.0), 4).unwrap();
        assert_relative_eq!(c.get(0, 0), (4.0 * PI).sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn explicit_low_degree_harmonics() {
        // Y_10 = √(3/4π) cos θ, Y_11 = √(3/4π) sin θ cos φ, Y_{2,-2} = √(15/16π) sin²θ sin 2φ
        let (t, p) = (0.7, 2.1);
        let n1 = (3.0 / (4.0 * PI)).sqrt();
        assert_relative_eq!(real_harmonic(1, 0, t, p), n1 * t.cos(), max_relative = 1e-14);
        assert_relative_eq!(real_harmonic(1, 1, t, p), n1 * t.sin() * p.cos(), max_relative = 1e-14);
        let n22 = (15.0 / (16.0 * PI)).sqrt();
        assert_relative_eq!(
            real_harmonic(2, -2, t, p),
            n22 * t.sin().powi(2) * (2.0 * p).sin(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn rejects_aliasing() {
        let m = mesh(8);
        assert!(matches!(sht_forward(&m, &Density::zeros(&m), 8), Err(Error::Aliasing { .. })));
    }

    #[test]
    fn parseval() {
        let m = mesh(16);
        let phi = Density::from_fn(&m, |x, _| x[0] * x[1] - 0.3 * x[2] * x[2] * x[2] + 1.0);
        let c = sht_forward(&m, &phi, 15).unwrap();
        let energy: f64 = c.as_slice().iter().map(|v| v * v).sum();
        let direct = m.surface_integral(&phi.values().iter().map(|v| v * v).collect::<Vec<_>>()).unwrap();
        assert_relative_eq!(energy, direct, max_relative = 1e-12);
    }
}
