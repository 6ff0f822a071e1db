//! Off-surface evaluation of the single-layer potential
//! `u(x) = ∫ Γ_{2α}(x - Q) φ(Q) dS(Q)`, its far-field decay, and the weak
//! α-harmonicity residual `∫ u Δᵅψ` against compactly supported bumps.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid3;
use crate::kernel::{fractional_laplacian_constant, fractional_symbol, KernelSpec};
use crate::quadrature::{composite_gauss, cutoff, gauss_jacobi_power, gauss_legendre, Rule};
use crate::surface::{dist_sq, norm, sub, Density, Point, SurfaceMesh};

/// Refinement factor applied to the mesh for evaluation points near the surface.
pub const UPSAMPLE_FACTOR: usize = 4;

/// Which quadrature produced a field value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldQuadrature {
    Base,
    Upsampled,
}

/// One evaluation of the potential.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub point: Point,
    pub value: f64,
    pub dist: f64,
    pub quadrature: FieldQuadrature,
}

fn kernel_for(alpha: f64) -> Result<KernelSpec> {
    if !(alpha > 0.5 && alpha <= 1.0) {
        return Err(Error::Domain(format!("alpha = {alpha} must lie in (1/2, 1]")));
    }
    KernelSpec::order(2.0 * alpha)
}

/// Evaluates `u` for one density, upsampling lazily for near-surface points.
///
/// Points closer than `2h` use the mesh refined by [`UPSAMPLE_FACTOR`] with
/// the density carried over by local Lagrange interpolation; points closer
/// than half the refined spacing are rejected. `h` is the largest
/// nearest-neighbour node distance of the base mesh.
pub struct FieldEvaluator<'a> {
    mesh: &'a SurfaceMesh,
    values: Vec<f64>,
    kernel: KernelSpec,
    h: f64,
    fine: OnceLock<Result<(SurfaceMesh, Vec<f64>)>>,
}

impl<'a> FieldEvaluator<'a> {
    pub fn new(mesh: &'a SurfaceMesh, phi: &Density, alpha: f64) -> Result<Self> {
        phi.check_mesh(mesh)?;
        let kernel = kernel_for(alpha)?;
        let values: Vec<f64> = phi.values().iter().zip(mesh.weights()).map(|(f, w)| f * w).collect();
        Ok(Self { mesh, values, kernel, h: mesh.spacing(), fine: OnceLock::new() })
    }

    /// Near-surface threshold `h`.
    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Distance below which evaluation is refused.
    pub fn min_distance(&self) -> f64 {
        0.5 * self.h / UPSAMPLE_FACTOR as f64
    }

    fn fine(&self) -> Result<&(SurfaceMesh, Vec<f64>)> {
        let cached = self.fine.get_or_init(|| {
            let fine = self.mesh.refine(UPSAMPLE_FACTOR)?;
            let (nlat, nlon) = self.mesh.resolution();
            let order = 10.min(nlat).min(nlon);
            let phi: Vec<f64> = self.values.iter().zip(self.mesh.weights()).map(|(v, w)| v / w).collect();
            let mut stencil = Vec::new();
            let values = fine
                .params()
                .iter()
                .zip(fine.weights())
                .map(|(p, w)| {
                    self.mesh.interpolation_stencil_into(p[0], p[1], order, &mut stencil);
                    w * stencil.iter().map(|(j, c)| c * phi[*j]).sum::<f64>()
                })
                .collect();
            Ok((fine, values))
        });
        cached.as_ref().map_err(|e| Error::Resolution(e.to_string()))
    }

    fn sum(&self, nodes: &[Point], values: &[f64], x: &Point) -> f64 {
        nodes.iter().zip(values).map(|(q, v)| self.kernel.eval_sq(dist_sq(x, q)) * v).sum()
    }

    pub fn eval(&self, x: &Point) -> Result<FieldSample> {
        let dist = self.mesh.surface().distance(x);
        let limit = self.min_distance();
        if !(dist >= limit) {
            return Err(Error::TooClose { dist, limit });
        }
        if dist < 2.0 * self.h {
            let (fine, values) = self.fine()?;
            let value = self.sum(fine.nodes(), values, x);
            Ok(FieldSample { point: *x, value, dist, quadrature: FieldQuadrature::Upsampled })
        } else {
            let value = self.sum(self.mesh.nodes(), &self.values, x);
            Ok(FieldSample { point: *x, value, dist, quadrature: FieldQuadrature::Base })
        }
    }

    /// Like [`eval`](Self::eval), but points closer than the refusal limit
    /// are first pushed along the ray from the surface center to that
    /// distance, staying on the same side. Used where a volume integrand
    /// needs `u` on a grid that cuts through the surface; `u` is continuous
    /// there, so the displacement costs `O(limit^{2α-1})`.
    pub fn eval_clamped(&self, x: &Point) -> Result<FieldSample> {
        let surface = self.mesh.surface();
        let limit = self.min_distance();
        let dist = surface.distance(x);
        if dist >= limit {
            return self.eval(x);
        }
        let c = surface.center();
        let d = sub(x, &c);
        let inside = surface.contains(x);
        // bisection on the ray parameter t in x(t) = c + t d
        let (mut lo, mut hi) = if inside { (0.0, 1.0) } else { (1.0, 2.0) };
        let at = |t: f64| -> Point { std::array::from_fn(|i| c[i] + t * d[i]) };
        let target = 1.5 * limit;
        if !inside {
            while surface.distance(&at(hi)) < target {
                hi *= 2.0;
            }
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            let far_enough = surface.distance(&at(mid)) >= target;
            // inside: small t is far from the surface; outside: large t is
            if inside == far_enough {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = if inside { lo } else { hi };
        let mut sample = self.eval(&at(t))?;
        sample.point = *x;
        sample.dist = dist;
        Ok(sample)
    }
}

/// Potential `u = Σ_j Γ_{2α}(x - Q_j) φ_j w_j` at each point.
pub fn eval_potential(mesh: &SurfaceMesh, phi: &Density, alpha: f64, points: &[Point]) -> Result<Vec<FieldSample>> {
    let ev = FieldEvaluator::new(mesh, phi, alpha)?;
    points.par_iter().map(|x| ev.eval(x)).collect()
}

/// Least-squares power-law fit `|u| ≈ prefactor · r^exponent`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub exponent: f64,
    pub prefactor: f64,
    /// Expected exponent `2α - 3`.
    pub expected_exponent: f64,
    /// Expected prefactor `c(3, 2α) Σ φ_j w_j`.
    pub expected_prefactor: f64,
}

/// Directions at which the far field is sampled: the six axes and the
/// eight cube diagonals.
fn fit_directions() -> Vec<Point> {
    let mut dirs = Vec::with_capacity(14);
    for d in 0..3 {
        for sgn in [1.0, -1.0] {
            let mut v = [0.0; 3];
            v[d] = sgn;
            dirs.push(v);
        }
    }
    let s = 1.0 / 3f64.sqrt();
    for a in [-s, s] {
        for b in [-s, s] {
            for c in [-s, s] {
                dirs.push([a, b, c]);
            }
        }
    }
    dirs
}

/// Fits the far-field decay of `u` from its direction-averaged magnitude at
/// the given distances from the surface center.
pub fn decay_fit(mesh: &SurfaceMesh, phi: &Density, alpha: f64, radii: &[f64]) -> Result<DecayFit> {
    let kernel = kernel_for(alpha)?;
    phi.check_mesh(mesh)?;
    if radii.len() < 2 {
        return Err(Error::Precondition("decay fit needs at least two radii".into()));
    }
    let diameter = 2.0 * mesh.surface().outer_radius();
    if let Some(r) = radii.iter().find(|&&r| !(r >= 5.0 * diameter * (1.0 - 1e-12))) {
        return Err(Error::Precondition(format!(
            "radius {r} is below five surface diameters ({})",
            5.0 * diameter
        )));
    }
    let mass = mesh.surface_integral(phi.values())?;
    let scale = mesh.surface_integral(&phi.values().iter().map(|v| v.abs()).collect::<Vec<_>>())?;
    if !(mass.abs() > 1e-12 * scale) {
        return Err(Error::ZeroMass);
    }
    let ev = FieldEvaluator::new(mesh, phi, alpha)?;
    let c = mesh.surface().center();
    let dirs = fit_directions();
    let mut xs = Vec::with_capacity(radii.len());
    let mut ys = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut acc = 0.0;
        for d in &dirs {
            let x = [c[0] + r * d[0], c[1] + r * d[1], c[2] + r * d[2]];
            acc += ev.eval(&x)?.value.abs();
        }
        xs.push(r.ln());
        ys.push((acc / dirs.len() as f64).ln());
    }
    let (slope, intercept) = least_squares_line(&xs, &ys);
    Ok(DecayFit {
        exponent: slope,
        prefactor: intercept.exp(),
        expected_exponent: 2.0 * alpha - 3.0,
        expected_prefactor: kernel.constant() * mass.abs(),
    })
}

/// Slope and intercept of the least-squares line through `(x, y)`.
pub fn least_squares_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Closed-form potential of the unit density on a sphere of radius `a` at
/// distance `r` from its center, for kernel order `s ≠ 1`:
/// `2π c a ((r+a)^{s-1} - |r-a|^{s-1}) / (r (s-1))`, and `4π c a^{s-1}` at `r = 0`.
pub fn uniform_sphere_potential(s: f64, a: f64, r: f64) -> Result<f64> {
    let k = KernelSpec::order(s)?;
    if r == 0.0 {
        return Ok(4.0 * PI * k.constant() * a * a * a.powf(s - 3.0));
    }
    Ok(2.0 * PI * k.constant() * a * ((r + a).powf(s - 1.0) - (r - a).abs().powf(s - 1.0)) / (r * (s - 1.0)))
}

/// Smooth bump `ψ(x) = exp(-1 / (1 - |x - center|²/radius²))` supported in
/// the closed ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub center: Point,
    pub radius: f64,
}

impl BumpSpec {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Domain(format!("bump radius {radius} must be positive")));
        }
        Ok(Self { center, radius })
    }

    /// Radial profile at distance `rho` from the center.
    #[inline]
    pub fn profile(&self, rho: f64) -> f64 {
        let t = rho / self.radius;
        if t >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - t * t)).exp()
        }
    }

    pub fn value(&self, x: &Point) -> f64 {
        self.profile(dist_sq(x, &self.center).sqrt())
    }

    /// `∫ ψ dx`.
    pub fn mass(&self) -> f64 {
        let r = self.radius;
        4.0 * PI * composite_gauss(0.0, r, 8, 24).integrate(|rho| rho * rho * self.profile(rho))
    }
}

/// Grid resolution for spectral evaluation of `Δᵅψ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    /// Points per axis.
    pub n: usize,
    /// Box side as a multiple of the bump radius.
    pub side_factor: f64,
    /// The FFT box is this many times wider than the output box.
    pub padding: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n: 128, side_factor: 8.0, padding: 2 }
    }
}

fn check_alpha_open(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    Ok(())
}

/// `Δᵅψ = F⁻¹[(2π|ξ|)^{2α} ψ̂]` on a cube centered at the bump, by FFT on
/// the zero-padded grid. The box must cover at least four support diameters.
pub fn frac_laplacian_bump(bump: &BumpSpec, alpha: f64, grid: &GridSpec) -> Result<Grid3> {
    check_alpha_open(alpha)?;
    if !(grid.side_factor >= 8.0 * (1.0 - 1e-12)) {
        return Err(Error::Precondition(format!(
            "grid side {} radii covers less than four support diameters",
            grid.side_factor
        )));
    }
    if grid.n < 16 {
        return Err(Error::Resolution(format!("grid size {} is below 16", grid.n)));
    }
    let psi = Grid3::from_fn(bump.center, grid.n, grid.side_factor * bump.radius, |x| bump.value(x))?;
    psi.apply_multiplier(grid.padding, |xi| fractional_symbol(alpha, xi))
}

/// `Δᵅψ` at one point from the singular-integral form
/// `C ∫ (2ψ(x) - ψ(x+y) - ψ(x-y)) / (2|y|^{3+2α}) dy`.
///
/// `ψ` is radial, so the direction integral reduces to the polar angle about
/// the axis through `x` and the bump center; the radial integral uses a
/// Gauss–Jacobi rule for `ρ^{1-2α}` near the origin and an exact tail beyond
/// the point where both shifted bumps vanish.
pub fn frac_laplacian_direct(bump: &BumpSpec, alpha: f64, x: &Point) -> Result<f64> {
    check_alpha_open(alpha)?;
    let cst = fractional_laplacian_constant(3, alpha)?;
    let r = bump.radius;
    let d = dist_sq(x, &bump.center).sqrt();
    let psi_x = bump.profile(d);
    let rho_max = d + r;
    let shifted = |rho: f64, mu: f64| -> f64 {
        let plus = (d * d + rho * rho + 2.0 * d * rho * mu).max(0.0).sqrt();
        let minus = (d * d + rho * rho - 2.0 * d * rho * mu).max(0.0).sqrt();
        2.0 * psi_x - bump.profile(plus) - bump.profile(minus)
    };
    if d > r {
        // x outside the support: only the cone of directions through the
        // ball and the radii crossing it contribute
        let mu_edge = (1.0 - (r / d).powi(2)).sqrt();
        let mus = gauss_legendre(64).mapped(mu_edge, 1.0);
        let rhos = composite_gauss(d - r, d + r, 32, 16);
        let radial: f64 = mus
            .nodes
            .iter()
            .zip(&mus.weights)
            .map(|(&mu, &wmu)| wmu * rhos.integrate(|rho| shifted(rho, mu) * rho.powf(-1.0 - 2.0 * alpha)))
            .sum();
        return Ok(cst * 2.0 * PI * radial);
    }
    // near-origin panel: second difference / ρ² is smooth, weight ρ^{1-2α}
    let head = 0.125 * r;
    let jac = gauss_jacobi_power(40, 1.0 - 2.0 * alpha);
    let body = composite_gauss(head, rho_max, 64, 16);
    let mus = gauss_legendre(64).mapped(0.0, 1.0);
    let mut radial = 0.0;
    for (&mu, &wmu) in mus.nodes.iter().zip(&mus.weights) {
        let mut acc = 0.0;
        for (&t, &w) in jac.nodes.iter().zip(&jac.weights) {
            let rho = head * t;
            acc += w * head.powf(2.0 - 2.0 * alpha) * shifted(rho, mu) / (rho * rho);
        }
        acc += body.integrate(|rho| shifted(rho, mu) * rho.powf(-1.0 - 2.0 * alpha));
        radial += wmu * acc;
    }
    let tail = 2.0 * psi_x * rho_max.powf(-2.0 * alpha) / (2.0 * alpha);
    Ok(cst * 2.0 * PI * (radial + tail))
}

/// `Δᵅψ` at distance `big_r > radius` from the bump center, where the
/// second difference reduces to `-C ∫ ψ(y) |x - y|^{-3-2α} dy`; the sphere
/// average of `|x - y|^{-p}` over `|y - center| = ρ` is
/// `((R-ρ)^{2-p} - (R+ρ)^{2-p}) / (2Rρ(p-2))`.
pub fn frac_laplacian_exterior(bump: &BumpSpec, alpha: f64, big_r: f64) -> Result<f64> {
    check_alpha_open(alpha)?;
    if !(big_r > bump.radius) {
        return Err(Error::Domain(format!("distance {big_r} is inside the bump support")));
    }
    let cst = fractional_laplacian_constant(3, alpha)?;
    let p = 3.0 + 2.0 * alpha;
    let rule = composite_gauss(0.0, bump.radius, 8, 24);
    let val = rule.integrate(|rho| {
        if rho == 0.0 {
            return 0.0;
        }
        let avg = ((big_r - rho).powf(2.0 - p) - (big_r + rho).powf(2.0 - p)) / (2.0 * big_r * rho * (p - 2.0));
        4.0 * PI * rho * rho * bump.profile(rho) * avg
    });
    Ok(-cst * val)
}

/// Outcome of the weak α-harmonicity test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakResidualReport {
    /// `|∫ u Δᵅψ| / (max|u| ‖Δᵅψ‖_{L¹})`.
    pub residual: f64,
    /// Part of `∫ u Δᵅψ` from grid quadrature inside the box.
    pub grid_integral: f64,
    /// Part from the radial exterior quadrature.
    pub exterior_integral: f64,
    /// Upper bound on `|∫ u Δᵅψ|` over the region beyond the box, from the
    /// decay of both factors, normalized like `residual`.
    pub tail_bound: f64,
    pub max_u: f64,
    pub l1_norm: f64,
    pub grid_points_evaluated: usize,
}

/// Evaluates `∫ u Δᵅψ dx` for the single-layer potential `u` of `phi`.
///
/// `Δᵅψ` is radial about the bump center. The integral is split with a
/// smooth radial partition `χ(R)` (equal to 1 up to half the box radius,
/// 0 at the inscribed sphere): `χ u Δᵅψ` is summed on the spectral grid, and
/// `(1-χ) u Δᵅψ` is integrated over radius using the exact exterior value of
/// `Δᵅψ` and the closed-form sphere means of `u`.
pub fn weak_residual(
    mesh: &SurfaceMesh,
    phi: &Density,
    alpha: f64,
    bump: &BumpSpec,
    grid: &GridSpec,
) -> Result<WeakResidualReport> {
    let ev = FieldEvaluator::new(mesh, phi, alpha)?;
    let surface = mesh.surface();
    let gap = surface.distance(&bump.center);
    if !(gap > bump.radius) {
        return Err(Error::Precondition(format!(
            "bump support (radius {}) meets the surface (center at distance {gap})",
            bump.radius
        )));
    }
    let lap = frac_laplacian_bump(bump, alpha, grid)?;
    let outer = 0.5 * lap.side();
    let inner = 0.5 * outer;
    let chi = |big_r: f64| cutoff((big_r - inner) / (outer - inner));

    // grid part
    let cell = lap.cell_volume();
    let indices: Vec<usize> = (0..lap.len())
        .filter(|&idx| dist_sq(&lap.point(idx), &bump.center) < outer * outer)
        .collect();
    let parts: Vec<(f64, f64, f64)> = indices
        .par_iter()
        .map(|&idx| {
            let x = lap.point(idx);
            let w = chi(dist_sq(&x, &bump.center).sqrt());
            let u = ev.eval_clamped(&x)?.value;
            let d = lap.values[idx];
            Ok((w * u * d * cell, w * d.abs() * cell, u.abs()))
        })
        .collect::<Result<_>>()?;
    let grid_integral: f64 = parts.iter().map(|p| p.0).sum();
    let grid_l1: f64 = parts.iter().map(|p| p.1).sum();
    let mut max_u = parts.iter().fold(0.0f64, |m, p| m.max(p.2));

    // exterior part: ∫ (1-χ(R)) D(R) 4πR² ū(R) dR
    let s = 2.0 * alpha;
    let kernel = KernelSpec::order(s)?;
    let rel: Vec<(f64, f64)> = mesh
        .nodes()
        .iter()
        .zip(mesh.weights())
        .zip(phi.values())
        .map(|((q, w), f)| (norm(&sub(q, &bump.center)), w * f))
        .collect();
    let sphere_mean = |big_r: f64| -> f64 {
        kernel.constant()
            * rel
                .iter()
                .map(|&(d, m)| {
                    let avg = if d == 0.0 {
                        big_r.powf(s - 3.0)
                    } else {
                        ((big_r + d).powf(s - 1.0) - (big_r - d).abs().powf(s - 1.0)) / (2.0 * (s - 1.0) * big_r * d)
                    };
                    m * avg
                })
                .sum::<f64>()
    };
    let shell = composite_gauss(inner, outer, 64, 8);
    let tail = tail_rule(outer);
    let mut exterior_integral = 0.0;
    let mut exterior_l1 = 0.0;
    for rule in [&shell, &tail] {
        for (&big_r, &w) in rule.nodes.iter().zip(&rule.weights) {
            let weight = 1.0 - chi(big_r);
            let d = frac_laplacian_exterior(bump, alpha, big_r)?;
            let u = sphere_mean(big_r);
            let area = 4.0 * PI * big_r * big_r;
            exterior_integral += w * weight * d * area * u;
            exterior_l1 += w * weight * d.abs() * area;
            if big_r < 2.0 * outer {
                max_u = max_u.max(u.abs());
            }
        }
    }

    // a-priori bound beyond the box: |u| ≤ c Σ|φ_j| w_j (R - d_max)^{s-3}
    // once R exceeds the farthest node by one unit, max|u| before that;
    // |Δᵅψ(R)| ≤ C M (R - r)^{-3-2α}
    let d_max = rel.iter().fold(0.0f64, |m, r| m.max(r.0));
    let abs_mass: f64 = rel.iter().map(|r| r.1.abs()).sum();
    let cst = fractional_laplacian_constant(3, alpha)?;
    let bump_mass = bump.mass();
    let tail_bound_abs = tail.integrate(|big_r| {
        let u_bound = if big_r > d_max + 1.0 {
            kernel.constant() * abs_mass * (big_r - d_max).powf(s - 3.0)
        } else {
            max_u
        };
        let d_bound = cst * bump_mass * (big_r - bump.radius).powf(-3.0 - 2.0 * alpha);
        4.0 * PI * big_r * big_r * u_bound * d_bound
    });

    let l1_norm = grid_l1 + exterior_l1;
    let scale = max_u * l1_norm;
    Ok(WeakResidualReport {
        residual: (grid_integral + exterior_integral).abs() / scale,
        grid_integral,
        exterior_integral,
        tail_bound: tail_bound_abs / scale,
        max_u,
        l1_norm,
        grid_points_evaluated: indices.len(),
    })
}

/// Rule for `∫_a^∞ f(R) dR` with integrands decaying at least like `R^{-3}`:
/// `R = a / t` on `t ∈ (0, 1]`.
fn tail_rule(a: f64) -> Rule {
    let base = composite_gauss(0.0, 1.0, 16, 12);
    Rule {
        nodes: base.nodes.iter().map(|t| a / t).collect(),
        weights: base.nodes.iter().zip(&base.weights).map(|(t, w)| w * a / (t * t)).collect(),
    }
}
