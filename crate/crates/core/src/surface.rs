//! Parametric quadrature meshes for smooth closed surfaces.
//!
//! Every supported surface is the image of the unit sphere under a smooth
//! map `F`, so a single reference grid serves all of them: Gauss–Legendre
//! nodes in `cos θ` times uniform nodes in longitude. Poles are never grid
//! nodes. Node `k * nlon + l` sits at colatitude `θ_k` and longitude
//! `2πl / nlon`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, lagrange_weights};

pub type Point = [f64; 3];

#[inline]
pub fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn dist_sq(a: &Point, b: &Point) -> f64 {
    let d0 = a[0] - b[0];
    let d1 = a[1] - b[1];
    let d2 = a[2] - b[2];
    d0 * d0 + d1 * d1 + d2 * d2
}

#[inline]
pub fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

/// Unit vector at colatitude `theta`, longitude `phi`.
#[inline]
pub fn unit_vector(theta: f64, phi: f64) -> Point {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [st * cp, st * sp, ct]
}

/// `(θ, φ)` of a unit vector, with `φ ∈ [0, 2π)`.
#[inline]
pub fn angles(x: &Point) -> (f64, f64) {
    let theta = x[2].clamp(-1.0, 1.0).acos();
    let mut phi = x[1].atan2(x[0]);
    if phi < 0.0 {
        phi += 2.0 * PI;
    }
    (theta, phi)
}

#[inline]
pub fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Distance to the ellipsoid `Σ (x_i/a_i)² = 1` via the nearest-point
/// condition `p_i = a_i² x_i / (a_i² + t)`, `Σ (a_i x_i / (a_i² + t))² = 1`,
/// whose largest root gives the closest point. Degenerate configurations
/// (points on a symmetry plane inside the body) fall back to the best of
/// the candidates found.
fn ellipsoid_distance(axes: [f64; 3], x: &Point) -> f64 {
    let f = |t: f64| -> f64 {
        (0..3).map(|i| (axes[i] * x[i] / (axes[i] * axes[i] + t)).powi(2)).sum::<f64>() - 1.0
    };
    let amin2 = axes.iter().map(|a| a * a).fold(f64::INFINITY, f64::min);
    let mut lo = -amin2;
    let mut hi = norm(x) * axes.iter().cloned().fold(0.0, f64::max) + 1.0;
    let mut best = f64::INFINITY;
    // f decreases on (-a_min², ∞); a sign change brackets the largest root
    let lo_probe = lo * (1.0 - 1e-15) + 1e-300;
    if f(lo_probe) > 0.0 || f(lo_probe).is_nan() {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = 0.5 * (lo + hi);
        let p: Point = std::array::from_fn(|i| axes[i] * axes[i] * x[i] / (axes[i] * axes[i] + t));
        best = norm(&sub(x, &p));
    }
    // candidates along the axes of a point on a coordinate plane
    for i in 0..3 {
        for sign in [-1.0, 1.0] {
            let mut p = [0.0; 3];
            p[i] = sign * axes[i];
            best = best.min(norm(&sub(x, &p)));
        }
    }
    best
}

/// Surface family and shape parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Surface {
    Sphere { center: Point, radius: f64 },
    Ellipsoid { axes: [f64; 3] },
}

/// Image of a reference point: position, area-element ratio, unit normal.
#[derive(Clone, Copy, Debug)]
pub struct MappedPoint {
    pub point: Point,
    pub jacobian: f64,
    pub normal: Point,
}

impl Surface {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Surface::Sphere { radius, center } => {
                if !(radius > 0.0) || center.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Domain(format!("sphere radius {radius} must be positive")));
                }
            }
            Surface::Ellipsoid { axes } => {
                if axes.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
                    return Err(Error::Domain(format!("ellipsoid axes {axes:?} must be positive")));
                }
            }
        }
        Ok(())
    }

    /// Maps a point of the unit sphere onto the surface.
    #[inline]
    pub fn map(&self, x: &Point) -> MappedPoint {
        match *self {
            Surface::Sphere { center, radius } => MappedPoint {
                point: [
                    center[0] + radius * x[0],
                    center[1] + radius * x[1],
                    center[2] + radius * x[2],
                ],
                jacobian: radius * radius,
                normal: *x,
            },
            Surface::Ellipsoid { axes: [a, b, c] } => {
                let g = [x[0] / a, x[1] / b, x[2] / c];
                let gn = norm(&g);
                MappedPoint {
                    point: [a * x[0], b * x[1], c * x[2]],
                    jacobian: a * b * c * gn,
                    normal: [g[0] / gn, g[1] / gn, g[2] / gn],
                }
            }
        }
    }

    /// Whether the surface is invariant under rotations about the vertical
    /// axis through its center (the polar axis of the parametrization).
    pub fn is_axisymmetric(&self) -> bool {
        match *self {
            Surface::Sphere { .. } => true,
            Surface::Ellipsoid { axes: [a, b, _] } => a == b,
        }
    }

    /// Unsigned distance from `x` to the surface.
    pub fn distance(&self, x: &Point) -> f64 {
        match *self {
            Surface::Sphere { center, radius } => (norm(&sub(x, &center)) - radius).abs(),
            Surface::Ellipsoid { axes } => ellipsoid_distance(axes, x),
        }
    }

    /// Whether `x` lies strictly inside the enclosed region.
    pub fn contains(&self, x: &Point) -> bool {
        match *self {
            Surface::Sphere { center, radius } => dist_sq(x, &center) < radius * radius,
            Surface::Ellipsoid { axes } => (0..3).map(|i| (x[i] / axes[i]).powi(2)).sum::<f64>() < 1.0,
        }
    }

    /// Center of the enclosed region.
    pub fn center(&self) -> Point {
        match *self {
            Surface::Sphere { center, .. } => center,
            Surface::Ellipsoid { .. } => [0.0; 3],
        }
    }

    /// Largest distance from the center to the surface.
    pub fn outer_radius(&self) -> f64 {
        match *self {
            Surface::Sphere { radius, .. } => radius,
            Surface::Ellipsoid { axes } => axes.iter().cloned().fold(0.0, f64::max),
        }
    }

    /// Smallest distance from the center to the surface.
    pub fn inner_radius(&self) -> f64 {
        match *self {
            Surface::Sphere { radius, .. } => radius,
            Surface::Ellipsoid { axes } => axes.iter().cloned().fold(f64::INFINITY, f64::min),
        }
    }

    /// Exact surface area where a closed form exists (spheres and spheroids).
    pub fn area(&self) -> Option<f64> {
        match *self {
            Surface::Sphere { radius, .. } => Some(4.0 * PI * radius * radius),
            Surface::Ellipsoid { axes: [a, b, c] } => {
                if (a - b).abs() > 1e-15 * a.max(b) {
                    return None;
                }
                Some(spheroid_area(a, c))
            }
        }
    }
}

/// Area of the spheroid with equatorial radius `a` and polar semi-axis `c`.
pub fn spheroid_area(a: f64, c: f64) -> f64 {
    if (a - c).abs() < 1e-15 * a {
        return 4.0 * PI * a * a;
    }
    if c < a {
        let e = (1.0 - c * c / (a * a)).sqrt();
        2.0 * PI * a * a * (1.0 + (1.0 - e * e) / e * e.atanh())
    } else {
        let e = (1.0 - a * a / (c * c)).sqrt();
        2.0 * PI * a * a * (1.0 + c / (a * e) * e.asin())
    }
}

/// Quadrature mesh on a smooth closed surface.
#[derive(Clone, Debug)]
pub struct SurfaceMesh {
    surface: Surface,
    nlat: usize,
    nlon: usize,
    colatitudes: Vec<f64>,
    lat_weights: Vec<f64>,
    reference: Vec<Point>,
    nodes: Vec<Point>,
    weights: Vec<f64>,
    normals: Vec<Point>,
    params: Vec<[f64; 2]>,
    key: u64,
}

impl SurfaceMesh {
    /// Gauss × uniform mesh on any supported surface.
    pub fn new(surface: Surface, nlat: usize, nlon: usize) -> Result<Self> {
        surface.validate()?;
        if nlat < 4 || nlon < 8 {
            return Err(Error::Resolution(format!(
                "need nlat >= 4 and nlon >= 8, got {nlat} x {nlon}"
            )));
        }
        let gl = gauss_legendre(nlat);
        // nodes ascend in cos θ, so reverse to get ascending colatitude
        let colatitudes: Vec<f64> = gl.nodes.iter().rev().map(|t| t.acos()).collect();
        let lat_weights: Vec<f64> = gl.weights.iter().rev().cloned().collect();
        let dphi = 2.0 * PI / nlon as f64;
        let n = nlat * nlon;
        let mut reference = Vec::with_capacity(n);
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        let mut normals = Vec::with_capacity(n);
        let mut params = Vec::with_capacity(n);
        for (k, &theta) in colatitudes.iter().enumerate() {
            for l in 0..nlon {
                let phi = l as f64 * dphi;
                let x = unit_vector(theta, phi);
                let m = surface.map(&x);
                reference.push(x);
                nodes.push(m.point);
                weights.push(lat_weights[k] * dphi * m.jacobian);
                normals.push(m.normal);
                params.push([theta, phi]);
            }
        }
        let key = mesh_key(&surface, nlat, nlon);
        Ok(Self {
            surface,
            nlat,
            nlon,
            colatitudes,
            lat_weights,
            reference,
            nodes,
            weights,
            normals,
            params,
            key,
        })
    }

    pub fn sphere(radius: f64, center: Point, nlat: usize, nlon: usize) -> Result<Self> {
        Self::new(Surface::Sphere { center, radius }, nlat, nlon)
    }

    pub fn ellipsoid(a: f64, b: f64, c: f64, nlat: usize, nlon: usize) -> Result<Self> {
        Self::new(Surface::Ellipsoid { axes: [a, b, c] }, nlat, nlon)
    }

    /// Rebuilds a mesh from stored per-node data (used by the file readers).
    pub(crate) fn from_parts(
        surface: Surface,
        nlat: usize,
        nlon: usize,
        nodes: Vec<Point>,
        weights: Vec<f64>,
        normals: Vec<Point>,
        params: Vec<[f64; 2]>,
    ) -> Result<Self> {
        let mut mesh = Self::new(surface, nlat, nlon)?;
        let n = mesh.len();
        for len in [nodes.len(), weights.len(), normals.len(), params.len()] {
            if len != n {
                return Err(Error::SizeMismatch { expected: n, got: len });
            }
        }
        mesh.reference = params.iter().map(|p| unit_vector(p[0], p[1])).collect();
        mesh.nodes = nodes;
        mesh.weights = weights;
        mesh.normals = normals;
        mesh.params = params;
        Ok(mesh)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn surface(&self) -> &Surface {
        &self.surface
    }

    pub fn resolution(&self) -> (usize, usize) {
        (self.nlat, self.nlon)
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn normals(&self) -> &[Point] {
        &self.normals
    }

    /// Parametric chart coordinates `(θ, φ)` per node.
    pub fn params(&self) -> &[[f64; 2]] {
        &self.params
    }

    /// Preimages of the nodes on the unit sphere.
    pub fn reference_points(&self) -> &[Point] {
        &self.reference
    }

    pub fn colatitudes(&self) -> &[f64] {
        &self.colatitudes
    }

    /// Gauss weights in `cos θ`, one per latitude ring.
    pub fn latitude_weights(&self) -> &[f64] {
        &self.lat_weights
    }

    /// Quadrature weights of the underlying unit-sphere grid.
    pub fn reference_weight(&self, idx: usize) -> f64 {
        self.lat_weights[idx / self.nlon] * 2.0 * PI / self.nlon as f64
    }

    /// Identity used to match densities and operators to their mesh.
    pub fn key(&self) -> u64 {
        self.key
    }

    /// Hex SHA-256 digest of node positions and weights.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.nlat as u64).to_le_bytes());
        h.update((self.nlon as u64).to_le_bytes());
        for (p, w) in self.nodes.iter().zip(&self.weights) {
            for v in p {
                h.update(v.to_le_bytes());
            }
            h.update(w.to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Nominal grid step on the unit sphere, `π / nlat`.
    pub fn reference_spacing(&self) -> f64 {
        PI / self.nlat as f64
    }

    /// Largest nearest-neighbour distance over all nodes.
    pub fn spacing(&self) -> f64 {
        (0..self.len()).map(|i| self.nearest_neighbour_distance(i)).fold(0.0, f64::max)
    }

    /// Smallest distance between two distinct nodes.
    pub fn min_spacing(&self) -> f64 {
        (0..self.len())
            .map(|i| self.nearest_neighbour_distance(i))
            .fold(f64::INFINITY, f64::min)
    }

    fn nearest_neighbour_distance(&self, i: usize) -> f64 {
        let (k, l) = (i / self.nlon, i % self.nlon);
        let p = &self.nodes[i];
        let mut best = f64::INFINITY;
        let mut visit = |kk: usize, ll: usize| {
            let j = kk * self.nlon + ll;
            if j != i {
                best = best.min(dist_sq(p, &self.nodes[j]));
            }
        };
        for dl in [1, self.nlon - 1] {
            visit(k, (l + dl) % self.nlon);
        }
        // across the pole on the first and last rings
        if k == 0 || k + 1 == self.nlat {
            visit(k, (l + self.nlon / 2) % self.nlon);
        }
        for kk in [k.wrapping_sub(1), k + 1] {
            if kk < self.nlat {
                for dl in 0..3 {
                    visit(kk, (l + self.nlon - 1 + dl) % self.nlon);
                }
            }
        }
        best.sqrt()
    }

    /// Same surface at `factor` times the resolution in both directions.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        if factor < 2 {
            return Err(Error::Resolution(format!("refinement factor {factor} must be >= 2")));
        }
        Self::new(self.surface, self.nlat * factor, self.nlon * factor)
    }

    /// `Σ_j w_j f_j`.
    pub fn surface_integral(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.len() {
            return Err(Error::SizeMismatch { expected: self.len(), got: values.len() });
        }
        Ok(self.weights.iter().zip(values).map(|(w, f)| w * f).sum())
    }

    /// Samples `f(point, (θ, φ))` at every node.
    pub fn sample(&self, f: impl Fn(&Point, [f64; 2]) -> f64) -> Vec<f64> {
        self.nodes.iter().zip(&self.params).map(|(p, a)| f(p, *a)).collect()
    }

    /// Tensor-product Lagrange stencil of `order × order` nodes for
    /// interpolating a nodal function at `(theta, phi)`.
    ///
    /// Rows that cross a pole are continued through it: the ring at
    /// colatitude `θ_j` seen from the far side of the pole is the point set
    /// `(-θ_j, φ + π)`.
    pub fn interpolation_stencil(&self, theta: f64, phi: f64, order: usize) -> Vec<(usize, f64)> {
        let mut out = Vec::with_capacity(order * order);
        self.interpolation_stencil_into(theta, phi, order, &mut out);
        out
    }

    /// Allocation-free form of [`interpolation_stencil`](Self::interpolation_stencil);
    /// clears `out` first.
    pub fn interpolation_stencil_into(&self, theta: f64, phi: f64, order: usize, out: &mut Vec<(usize, f64)>) {
        assert!(
            (2..=MAX_STENCIL).contains(&order) && order <= self.nlat && order <= self.nlon,
            "interpolation order {order} not supported on a {}x{} grid",
            self.nlat,
            self.nlon
        );
        out.clear();
        let half = (order / 2) as isize;
        let below = self.colatitudes.partition_point(|&t| t <= theta) as isize - 1;
        let start = below + 1 - half;
        let nlat = self.nlat as isize;
        let mut thetas = [0.0; MAX_STENCIL];
        let mut rings = [(0usize, false); MAX_STENCIL];
        for r in 0..order {
            let k = start + r as isize;
            let (angle, ring, flipped) = if k < 0 {
                let j = (-k - 1) as usize;
                (-self.colatitudes[j], j, true)
            } else if k >= nlat {
                let j = (2 * nlat - 1 - k) as usize;
                (2.0 * PI - self.colatitudes[j], j, true)
            } else {
                (self.colatitudes[k as usize], k as usize, false)
            };
            thetas[r] = angle;
            rings[r] = (ring, flipped);
        }
        let mut wt = [0.0; MAX_STENCIL];
        lagrange_weights(&thetas[..order], theta, &mut wt[..order]);

        let dphi = 2.0 * PI / self.nlon as f64;
        let nlon = self.nlon as isize;
        let lon_stencil = |phi: f64, w: &mut [f64; MAX_STENCIL]| -> isize {
            let u = phi.rem_euclid(2.0 * PI) / dphi;
            let first = u.floor() as isize + 1 - half;
            let mut offsets = [0.0; MAX_STENCIL];
            for (j, o) in offsets.iter_mut().enumerate().take(order) {
                *o = (first + j as isize) as f64;
            }
            lagrange_weights(&offsets[..order], u, &mut w[..order]);
            first
        };
        let mut w_direct = [0.0; MAX_STENCIL];
        let mut w_flipped = [0.0; MAX_STENCIL];
        let first_direct = lon_stencil(phi, &mut w_direct);
        let first_flipped = lon_stencil(phi + PI, &mut w_flipped);

        for r in 0..order {
            let (ring, flip) = rings[r];
            let (first, w) = if flip { (first_flipped, &w_flipped) } else { (first_direct, &w_direct) };
            for (j, wl) in w.iter().enumerate().take(order) {
                let col = (first + j as isize).rem_euclid(nlon) as usize;
                out.push((ring * self.nlon + col, wt[r] * wl));
            }
        }
    }

    /// Interpolates nodal `values` at `(theta, phi)`.
    pub fn interpolate(&self, values: &[f64], theta: f64, phi: f64, order: usize) -> f64 {
        self.interpolation_stencil(theta, phi, order)
            .iter()
            .map(|(j, w)| w * values[*j])
            .sum()
    }
}

fn mesh_key(surface: &Surface, nlat: usize, nlon: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(surface).unwrap_or_default());
    h.update((nlat as u64).to_le_bytes());
    h.update((nlon as u64).to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

/// Largest supported interpolation stencil width.
pub const MAX_STENCIL: usize = 16;

/// Nodal samples of a scalar function on a mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct Density {
    mesh_key: u64,
    values: Vec<f64>,
}

impl Density {
    pub fn new(mesh: &SurfaceMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.len() {
            return Err(Error::SizeMismatch { expected: mesh.len(), got: values.len() });
        }
        Ok(Self { mesh_key: mesh.key(), values })
    }

    pub fn from_fn(mesh: &SurfaceMesh, f: impl Fn(&Point, [f64; 2]) -> f64) -> Self {
        Self { mesh_key: mesh.key(), values: mesh.sample(f) }
    }

    pub fn constant(mesh: &SurfaceMesh, value: f64) -> Self {
        Self { mesh_key: mesh.key(), values: vec![value; mesh.len()] }
    }

    pub fn zeros(mesh: &SurfaceMesh) -> Self {
        Self::constant(mesh, 0.0)
    }

    pub(crate) fn from_parts(mesh_key: u64, values: Vec<f64>) -> Self {
        Self { mesh_key, values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mesh_key(&self) -> u64 {
        self.mesh_key
    }

    pub fn check_mesh(&self, mesh: &SurfaceMesh) -> Result<()> {
        if self.mesh_key != mesh.key() || self.values.len() != mesh.len() {
            return Err(Error::MeshMismatch);
        }
        Ok(())
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &Density, b: f64) -> Result<Density> {
        if self.mesh_key != other.mesh_key {
            return Err(Error::MeshMismatch);
        }
        Ok(Density {
            mesh_key: self.mesh_key,
            values: self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect(),
        })
    }

    pub fn scaled(&self, a: f64) -> Density {
        Density { mesh_key: self.mesh_key, values: self.values.iter().map(|v| a * v).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unit_sphere_area() {
        for &(nlat, nlon) in &[(4, 8), (16, 32), (23, 40)] {
            let m = SurfaceMesh::sphere(1.0, [0.0; 3], nlat, nlon).unwrap();
            assert_relative_eq!(m.weights().iter().sum::<f64>(), 4.0 * PI, max_relative = 1e-12);
            assert_eq!(m.len(), nlat * nlon);
        }
    }

    #[test]
    fn sphere_radius_two_area() {
        let m = SurfaceMesh::sphere(2.0, [1.0, -1.0, 0.5], 12, 24).unwrap();
        assert_relative_eq!(m.weights().iter().sum::<f64>(), 16.0 * PI, max_relative = 1e-12);
    }

    #[test]
    fn odd_moment_vanishes_and_second_moment() {
        let m = SurfaceMesh::sphere(1.0, [0.0; 3], 16, 32).unwrap();
        let fx = m.sample(|p, _| p[0]);
        assert!(m.surface_integral(&fx).unwrap().abs() < 1e-12);
        let fz2 = m.sample(|p, _| p[2] * p[2]);
        assert_relative_eq!(m.surface_integral(&fz2).unwrap(), 4.0 * PI / 3.0, max_relative = 1e-10);
        let zero = vec![0.0; m.len()];
        assert_eq!(m.surface_integral(&zero).unwrap(), 0.0);
        assert!(m.surface_integral(&[1.0]).is_err());
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(SurfaceMesh::sphere(1.0, [0.0; 3], 3, 8).is_err());
        assert!(SurfaceMesh::sphere(1.0, [0.0; 3], 8, 6).is_err());
        assert!(SurfaceMesh::sphere(-1.0, [0.0; 3], 8, 16).is_err());
        assert!(SurfaceMesh::ellipsoid(1.0, 0.0, 1.0, 8, 16).is_err());
    }

    #[test]
    fn ellipsoid_reduces_to_sphere() {
        let e = SurfaceMesh::ellipsoid(1.0, 1.0, 1.0, 10, 20).unwrap();
        let s = SurfaceMesh::sphere(1.0, [0.0; 3], 10, 20).unwrap();
        for i in 0..e.len() {
            assert!(dist_sq(&e.nodes()[i], &s.nodes()[i]).sqrt() < 1e-12);
            assert!((e.weights()[i] - s.weights()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn oblate_spheroid_area() {
        let m = SurfaceMesh::ellipsoid(1.0, 1.0, 0.5, 32, 64).unwrap();
        let exact = spheroid_area(1.0, 0.5);
        assert_relative_eq!(m.weights().iter().sum::<f64>(), exact, max_relative = 1e-6);
        let prolate = SurfaceMesh::ellipsoid(0.5, 0.5, 1.0, 32, 64).unwrap();
        assert_relative_eq!(
            prolate.weights().iter().sum::<f64>(),
            spheroid_area(0.5, 1.0),
            max_relative = 1e-6
        );
    }

    #[test]
    fn ellipsoid_normals_are_tangent_orthogonal() {
        let (a, b, c) = (1.3, 0.8, 0.5);
        let m = SurfaceMesh::ellipsoid(a, b, c, 12, 24).unwrap();
        for (n, p) in m.normals().iter().zip(m.params()) {
            let [t, f] = *p;
            let dq = [a * t.cos() * f.cos(), b * t.cos() * f.sin(), -c * t.sin()];
            assert!(dot(n, &dq).abs() < 1e-10);
            assert!((norm(n) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn refine_doubles_resolution() {
        let m = SurfaceMesh::sphere(1.0, [0.0; 3], 16, 32).unwrap();
        let r = m.refine(2).unwrap();
        assert_eq!(r.resolution(), (32, 64));
        assert!((r.weights().iter().sum::<f64>() - m.weights().iter().sum::<f64>()).abs() < 1e-10);
        assert!(r.spacing() < m.spacing());
        assert!(r.min_spacing() < m.min_spacing());
        assert!(m.refine(1).is_err());
    }

    #[test]
    fn spacing_matches_brute_force() {
        let m = SurfaceMesh::ellipsoid(1.0, 0.7, 0.4, 6, 12).unwrap();
        let mut min = f64::INFINITY;
        let mut max_nn: f64 = 0.0;
        for i in 0..m.len() {
            let mut nn = f64::INFINITY;
            for j in 0..m.len() {
                if i != j {
                    nn = nn.min(dist_sq(&m.nodes()[i], &m.nodes()[j]).sqrt());
                }
            }
            min = min.min(nn);
            max_nn = max_nn.max(nn);
        }
        assert_relative_eq!(m.min_spacing(), min, max_relative = 1e-14);
        assert_relative_eq!(m.spacing(), max_nn, max_relative = 1e-14);
    }

    #[test]
    fn interpolation_is_accurate_across_poles() {
        let m = SurfaceMesh::sphere(1.0, [0.0; 3], 24, 48).unwrap();
        let f = |p: &Point| (1.3 * p[0] - 0.4 * p[1] + 0.9 * p[2]).sin() + p[0] * p[2];
        let values = m.sample(|p, _| f(p));
        for &(theta, phi) in &[(0.01, 0.3), (0.05, 4.0), (1.3, 2.2), (PI - 0.02, 5.9), (PI / 2.0, 0.0)] {
            let got = m.interpolate(&values, theta, phi, 8);
            let exact = f(&unit_vector(theta, phi));
            assert!((got - exact).abs() < 1e-6, "({theta}, {phi}): {got} vs {exact}");
        }
    }

    #[test]
    fn density_requires_matching_length() {
        let m = SurfaceMesh::sphere(1.0, [0.0; 3], 8, 16).unwrap();
        assert!(Density::new(&m, vec![1.0; 3]).is_err());
        let d = Density::constant(&m, 2.0);
        let other = SurfaceMesh::sphere(1.0, [0.0; 3], 9, 16).unwrap();
        assert!(d.check_mesh(&other).is_err());
        assert!(d.check_mesh(&m).is_ok());
    }
}
