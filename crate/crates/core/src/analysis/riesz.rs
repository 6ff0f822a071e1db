//! Riesz volume potentials `I_s f = Γ_s * f` of gridded functions, with
//! radial and Fourier oracles.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::BumpSpec;
use crate::grid::{Grid3, MAX_ORDER};
use crate::kernel::riesz_constant;
use crate::quadrature::{composite_gauss, cutoff, gauss_jacobi_power, gauss_legendre, integrate_adaptive, lagrange_weights};
use crate::surface::{dist_sq, Point};

/// Quadrature parameters of [`riesz_potential_apply_with`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RieszParams {
    /// Radius of the locally corrected ball, in grid steps.
    pub cutoff_cells: f64,
    /// Gauss–Jacobi nodes in the radial direction of the local ball.
    pub radial_nodes: usize,
    /// Gauss–Legendre nodes in `cos θ`; twice as many are used in azimuth.
    pub polar_nodes: usize,
    /// Order of the tensor Lagrange interpolant of the grid.
    pub interp_order: usize,
}

impl Default for RieszParams {
    fn default() -> Self {
        Self { cutoff_cells: 12.0, radial_nodes: 48, polar_nodes: 24, interp_order: 8 }
    }
}

/// [`riesz_potential_apply_with`] with default parameters.
pub fn riesz_potential_apply(f: &Grid3, s: f64, points: &[Point]) -> Result<Vec<f64>> {
    riesz_potential_apply_with(f, s, points, RieszParams::default())
}

/// `I_s f(x) = ∫ Γ_s(x - y) f(y) dy` for `0 < s < 3` at each point, where `f`
/// is given by its samples and vanishes near the edge of its box.
///
/// The kernel is split with a smooth cutoff `χ(|x - y| / ρ₀)`. The smooth
/// remainder `(1 - χ) Γ_s f` is summed on the grid, which also covers points
/// far outside the box. The singular part is integrated in polar coordinates
/// about `x`: Gauss–Jacobi in `ρ` absorbs `ρ^{s-1}`, and `f` off the grid is
/// taken from the tensor Lagrange interpolant.
pub fn riesz_potential_apply_with(f: &Grid3, s: f64, points: &[Point], params: RieszParams) -> Result<Vec<f64>> {
    let c = riesz_constant(3, s)?;
    let order = params.interp_order;
    if order < 2 || !order.is_multiple_of(2) || order > MAX_ORDER {
        return Err(Error::Domain(format!("interpolation order {order} must be even and in [2, {MAX_ORDER}]")));
    }
    if !(params.cutoff_cells >= 1.0) || params.radial_nodes < 4 || params.polar_nodes < 4 {
        return Err(Error::Domain("local correction needs cutoff_cells >= 1 and at least 4 nodes".into()));
    }
    let rho0 = params.cutoff_cells * f.step;
    let cell = f.cell_volume();
    let support: Vec<(Point, f64)> = (0..f.len())
        .filter(|&idx| f.values[idx] != 0.0)
        .map(|idx| (f.point(idx), f.values[idx] * cell))
        .collect();

    // directions on S² with weights summing to 4π, radial nodes on [0, ρ₀]
    let mu = gauss_legendre(params.polar_nodes);
    let nphi = 2 * params.polar_nodes;
    let mut dirs = Vec::with_capacity(mu.nodes.len() * nphi);
    for (&m, &wm) in mu.nodes.iter().zip(&mu.weights) {
        let st = (1.0 - m * m).sqrt();
        for k in 0..nphi {
            let ph = 2.0 * PI * k as f64 / nphi as f64;
            dirs.push(([st * ph.cos(), st * ph.sin(), m], wm * 2.0 * PI / nphi as f64));
        }
    }
    let jac = gauss_jacobi_power(params.radial_nodes, s - 1.0);
    let radial: Vec<(f64, f64)> = jac
        .nodes
        .iter()
        .zip(&jac.weights)
        .map(|(&u, &w)| (rho0 * u, w * rho0.powf(s) * cutoff(u)))
        .collect();

    let half = 0.5 * f.side();
    let reach = rho0 + order as f64 * f.step;
    let exponent = 0.5 * (s - 3.0);
    let values = points
        .par_iter()
        .map(|x| {
            let far: f64 = support
                .iter()
                .map(|(y, v)| {
                    let r2 = dist_sq(x, y);
                    let w = 1.0 - cutoff(r2.sqrt() / rho0);
                    if w == 0.0 {
                        0.0
                    } else {
                        v * w * r2.powf(exponent)
                    }
                })
                .sum();
            let outside = (0..3).any(|d| (x[d] - f.center[d]).abs() > half + reach);
            let mut near = 0.0;
            if !outside {
                for (dir, wd) in &dirs {
                    let mut acc = 0.0;
                    for &(rho, wr) in &radial {
                        let p = [x[0] + rho * dir[0], x[1] + rho * dir[1], x[2] + rho * dir[2]];
                        acc += wr * f.interpolate(&p, order);
                    }
                    near += wd * acc;
                }
            }
            c * (far + near)
        })
        .collect();
    Ok(values)
}

/// Mean of `|x - y|^{s-3}` over the sphere `|y| = t` for `|x| = r`.
pub fn shell_mean(s: f64, r: f64, t: f64) -> f64 {
    if r == 0.0 {
        return t.powf(s - 3.0);
    }
    if t == 0.0 {
        return r.powf(s - 3.0);
    }
    shell_mean_gap(s, r, t, (r - t).abs())
}

/// [`shell_mean`] with `|r - t|` supplied exactly by the caller.
fn shell_mean_gap(s: f64, r: f64, t: f64, diff: f64) -> f64 {
    let sum = r + t;
    if (s - 1.0).abs() < 1e-12 {
        (sum.ln() - diff.ln()) / (2.0 * r * t)
    } else {
        (sum.powf(s - 1.0) - diff.powf(s - 1.0)) / (2.0 * r * t * (s - 1.0))
    }
}

/// `I_s f` at distance `r` from the center of a radial `f(y) = profile(|y|)`
/// supported in `|y| ≤ support`, by adaptive integration of shell means.
pub fn radial_riesz_potential(profile: impl Fn(f64) -> f64, support: f64, s: f64, r: f64) -> Result<f64> {
    let c = riesz_constant(3, s)?;
    let integrand = |t: f64| profile(t) * 4.0 * PI * t * t * shell_mean(s, r, t);
    let value = if r > 0.0 && r < support {
        // |r - t| = w^{1/s} removes the |r - t|^{s-1} singularity of the shell mean
        let p = 1.0 / s.min(1.0);
        let side = |sign: f64, len: f64| {
            integrate_adaptive(
                |w: f64| {
                    let u = w.powf(p);
                    if u == 0.0 {
                        return 0.0;
                    }
                    let t = r + sign * u;
                    profile(t) * 4.0 * PI * t * t * shell_mean_gap(s, r, t, u) * p * u / w
                },
                0.0,
                len.powf(1.0 / p),
                1e-15,
                1e-13,
            )
            .value
        };
        side(-1.0, r) + side(1.0, support - r)
    } else {
        integrate_adaptive(integrand, 0.0, support, 1e-15, 1e-13).value
    };
    Ok(c * value)
}

/// `I_s(e^{-π|·|²})(x) = ∫ |ξ|^{-s} e^{-π|ξ|²} e^{2πiξ·x} dξ
/// = 4π ∫₀^∞ k^{2-s} e^{-πk²} sinc(2πk|x|) dk`.
pub fn gaussian_riesz_oracle(s: f64, r: f64) -> Result<f64> {
    if !(s > 0.0 && s < 3.0) {
        return Err(Error::Domain(format!("kernel order s = {s} must lie in (0, 3)")));
    }
    let integrand = |k: f64| {
        let u = 2.0 * PI * k * r;
        let sinc = if u.abs() < 1e-8 { 1.0 - u * u / 6.0 } else { u.sin() / u };
        k.powf(2.0 - s) * (-PI * k * k).exp() * sinc
    };
    Ok(4.0 * PI * integrate_adaptive(integrand, 0.0, 8.0, 1e-16, 1e-13).value)
}

/// Grid resolutions of [`riesz_semigroup_check`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SemigroupGrids {
    /// Points per side of the grid carrying `f`.
    pub n: usize,
    /// Points per side of the grid carrying the truncated inner potential.
    pub inner_n: usize,
}

impl Default for SemigroupGrids {
    fn default() -> Self {
        Self { n: 64, inner_n: 128 }
    }
}

impl SemigroupGrids {
    /// Both grids at half the resolution.
    pub fn coarsened(&self) -> Self {
        Self { n: self.n / 2, inner_n: self.inner_n / 2 }
    }
}

/// `I_{s1}(I_{s2} f)` against `I_{s1+s2} f` at a list of points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RieszSemigroupReport {
    pub s1: f64,
    pub s2: f64,
    pub points: Vec<Point>,
    /// `I_{s1}(I_{s2} f)`.
    pub composed: Vec<f64>,
    /// `I_{s1+s2} f`.
    pub direct: Vec<f64>,
    /// `I_{s1+s2} f` from the radial oracle.
    pub oracle: Vec<f64>,
    /// `max |composed / direct - 1|`.
    pub max_relative_gap: f64,
    /// `max |direct / oracle - 1|`.
    pub max_oracle_error: f64,
}

/// Checks the semigroup law for the radial bump `f`, with every potential
/// computed by [`riesz_potential_apply`].
///
/// `g = I_{s2} f` is radial and decays like `|y|^{s2-3}`, so it is split by a
/// radial cutoff equal to 1 inside `2a` and 0 outside `4a` (`a` the bump
/// radius). The inner piece is sampled on a grid — from a radial table of
/// `g` — and potentialized by the grid routine. For the outer piece the
/// angular integral of the kernel is exact, leaving a radial integral of
/// `g` evaluated pointwise, plus a far tail with `g`'s leading term.
/// Points must lie within `2a` of the bump center.
pub fn riesz_semigroup_check(
    bump: &BumpSpec,
    s1: f64,
    s2: f64,
    points: &[Point],
    grids: SemigroupGrids,
) -> Result<RieszSemigroupReport> {
    let s = s1 + s2;
    if !(s1 > 0.0 && s2 > 0.0 && s < 3.0) {
        return Err(Error::Domain(format!("orders {s1}, {s2} must be positive with sum below 3")));
    }
    let a = bump.radius;
    let center = bump.center;
    let (r1, r2) = (2.0 * a, 4.0 * a);
    let radius_of = |x: &Point| dist_sq(x, &center).sqrt();
    if let Some(x) = points.iter().find(|x| radius_of(x) >= r1) {
        return Err(Error::Precondition(format!("point {x:?} lies outside the inner ball of radius {r1}")));
    }
    let c1 = riesz_constant(3, s1)?;
    let c2 = riesz_constant(3, s2)?;
    let on_axis = |rho: f64| [center[0] + rho, center[1], center[2]];

    let f = Grid3::from_fn(center, grids.n, 2.5 * a, |y| bump.value(y))?;
    let params = RieszParams::default();

    // radial table of g on ρ_k = kΔ, even in ρ
    let order = params.interp_order;
    let delta = 0.5 * f.step;
    let count = ((r2 / delta).ceil() as usize) + order + 1;
    let table_points: Vec<Point> = (0..count).map(|k| on_axis(k as f64 * delta)).collect();
    let table = riesz_potential_apply(&f, s2, &table_points)?;
    let g_of = |rho: f64| -> f64 {
        let t = rho / delta;
        let first = t.floor() as i64 - (order as i64 / 2 - 1);
        let mut nodes = [0.0; MAX_ORDER];
        let mut w = [0.0; MAX_ORDER];
        for (k, node) in nodes[..order].iter_mut().enumerate() {
            *node = (first + k as i64) as f64;
        }
        lagrange_weights(&nodes[..order], t, &mut w[..order]);
        (0..order).map(|k| w[k] * table[(first + k as i64).unsigned_abs() as usize]).sum()
    };
    let chi = |rho: f64| cutoff((rho - r1) / (r2 - r1));

    let inner = Grid3::from_fn(center, grids.inner_n, 2.2 * r2, |y| {
        let rho = radius_of(y);
        if rho >= r2 {
            0.0
        } else {
            chi(rho) * g_of(rho)
        }
    })?;
    let inner_part = riesz_potential_apply(&inner, s1, points)?;

    // outer piece ∫_{ρ > 2a} (1 - χ) g(ρ) 4πρ² M_{s1}(r, ρ) dρ
    let transition = composite_gauss(r1, r2, 8, 16);
    let far_end = 1e4 * r2;
    let graded = composite_gauss(0.0, (far_end / r2).ln(), 40, 16);
    let graded_rho: Vec<f64> = graded.nodes.iter().map(|v| r2 * v.exp()).collect();
    let graded_g = riesz_potential_apply(&f, s2, &graded_rho.iter().map(|&r| on_axis(r)).collect::<Vec<_>>())?;
    let mass = f.integral();
    let tail = c1 * c2 * mass * 4.0 * PI * far_end.powf(s - 3.0) / (3.0 - s);

    let composed: Vec<f64> = points
        .iter()
        .zip(&inner_part)
        .map(|(x, inner_value)| {
            let r = radius_of(x);
            let mid = transition.integrate(|rho| (1.0 - chi(rho)) * g_of(rho) * 4.0 * PI * rho * rho * shell_mean(s1, r, rho));
            let far: f64 = graded
                .weights
                .iter()
                .zip(&graded_rho)
                .zip(&graded_g)
                .map(|((w, &rho), g)| w * rho * g * 4.0 * PI * rho * rho * shell_mean(s1, r, rho))
                .sum();
            inner_value + c1 * (mid + far) + tail
        })
        .collect();

    let direct = riesz_potential_apply(&f, s, points)?;
    let oracle = points
        .iter()
        .map(|x| radial_riesz_potential(|t| bump.profile(t), a, s, radius_of(x)))
        .collect::<Result<Vec<f64>>>()?;
    let max_rel = |u: &[f64], v: &[f64]| u.iter().zip(v).fold(0.0f64, |m, (p, q)| m.max((p / q - 1.0).abs()));
    Ok(RieszSemigroupReport {
        s1,
        s2,
        points: points.to_vec(),
        max_relative_gap: max_rel(&composed, &direct),
        max_oracle_error: max_rel(&direct, &oracle),
        composed,
        direct,
        oracle,
    })
}

/// `I_s` of the Gaussian `e^{-π|x|²}` on the grid against the Fourier oracle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierGaussianReport {
    pub s: f64,
    pub radii: Vec<f64>,
    pub computed: Vec<f64>,
    pub oracle: Vec<f64>,
    pub max_relative_error: f64,
}

/// Samples the Gaussian on an `n³` grid of side 8 and evaluates `I_s` at
/// `(r, 0, 0)` for each radius.
pub fn fourier_gaussian_check(s: f64, radii: &[f64], n: usize) -> Result<FourierGaussianReport> {
    let gauss = Grid3::from_fn([0.0; 3], n, 8.0, |x| (-PI * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp())?;
    let points: Vec<Point> = radii.iter().map(|&r| [r, 0.0, 0.0]).collect();
    let computed = riesz_potential_apply(&gauss, s, &points)?;
    let oracle = radii.iter().map(|&r| gaussian_riesz_oracle(s, r)).collect::<Result<Vec<f64>>>()?;
    let max_relative_error = computed.iter().zip(&oracle).fold(0.0f64, |m, (p, q)| m.max((p / q - 1.0).abs()));
    Ok(FourierGaussianReport { s, radii: radii.to_vec(), computed, oracle, max_relative_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use statrs::function::gamma::gamma;

    #[test]
    fn zero_function_has_zero_potential() {
        let f = Grid3::new([0.0; 3], 16, 4.0).unwrap();
        let v = riesz_potential_apply(&f, 1.4, &[[0.0; 3], [0.3, 0.1, -0.2], [50.0, 0.0, 0.0]]).unwrap();
        assert!(v.iter().all(|&x| x == 0.0));
        assert!(riesz_potential_apply(&f, 3.0, &[[0.0; 3]]).is_err());
        assert!(riesz_potential_apply(&f, 0.0, &[[0.0; 3]]).is_err());
    }

    #[test]
    fn gaussian_oracle_at_origin() {
        // 4π ∫ k^{2-s} e^{-πk²} dk = 2 π^{(s-1)/2} Γ((3-s)/2)
        for &s in &[0.6, 1.4, 2.0, 2.5] {
            let exact = 2.0 * PI.powf(0.5 * (s - 1.0)) * gamma(0.5 * (3.0 - s));
            assert_relative_eq!(gaussian_riesz_oracle(s, 0.0).unwrap(), exact, max_relative = 1e-11);
        }
    }

    #[test]
    fn shell_mean_matches_quadrature() {
        for &(s, r, t) in &[(0.6, 0.3, 0.8), (1.4, 2.0, 0.5), (1.0, 0.4, 0.9), (2.2, 0.0, 0.7)] {
            let q = gauss_legendre(200).integrate(|m: f64| 0.5 * (r * r + t * t - 2.0 * r * t * m).powf(0.5 * (s - 3.0)));
            assert_relative_eq!(shell_mean(s, r, t), q, max_relative = 1e-10);
        }
    }

    #[test]
    fn newtonian_potential_of_uniform_ball() {
        // Γ_2 = π/|x|: the unit ball gives π·4π·½ at its center and π·vol/r outside
        let v = radial_riesz_potential(|_| 1.0, 1.0, 2.0, 0.0).unwrap();
        assert_relative_eq!(v, 2.0 * PI * PI, max_relative = 1e-12);
        let out = radial_riesz_potential(|_| 1.0, 1.0, 2.0, 3.0).unwrap();
        assert_relative_eq!(out, PI * 4.0 * PI / 3.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn bump_potential_matches_radial_oracle() {
        let bump = BumpSpec::new([0.0; 3], 1.0).unwrap();
        let f = Grid3::from_fn([0.0; 3], 64, 2.5, |y| bump.value(y)).unwrap();
        let points = [[0.0, 0.0, 0.0], [0.3, -0.2, 0.1], [0.0, 0.9, 0.0], [3.0, 0.0, 0.0]];
        for &s in &[0.6, 1.4] {
            let v = riesz_potential_apply(&f, s, &points).unwrap();
            for (x, value) in points.iter().zip(&v) {
                let r = dist_sq(x, &[0.0; 3]).sqrt();
                let exact = radial_riesz_potential(|t| bump.profile(t), 1.0, s, r).unwrap();
                assert!((value / exact - 1.0).abs() < 2e-4, "s = {s}, x = {x:?}: {value} vs {exact}");
            }
        }
    }

    #[test]
    fn gaussian_potential_matches_fourier_oracle() {
        for &s in &[0.6, 1.4] {
            let r = fourier_gaussian_check(s, &[0.0, 1.0], 64).unwrap();
            assert!(r.max_relative_error < 1e-4, "{r:?}");
        }
    }

    #[test]
    fn semigroup_on_coarse_grids() {
        let bump = BumpSpec::new([0.2, 0.0, -0.1], 1.0).unwrap();
        let points = [[0.2, 0.0, -0.1], [0.6, 0.3, 0.0]];
        let r = riesz_semigroup_check(&bump, 0.6, 0.8, &points, SemigroupGrids { n: 32, inner_n: 64 }).unwrap();
        assert!(r.max_relative_gap < 5e-3 && r.max_oracle_error < 1e-3, "{r:?}");
        assert!(riesz_semigroup_check(&bump, 0.6, 0.8, &[[3.0, 0.0, 0.0]], SemigroupGrids::default()).is_err());
        assert!(riesz_semigroup_check(&bump, 1.6, 1.5, &points, SemigroupGrids::default()).is_err());
    }
}
