//! Nyström discretization of the single-layer boundary operator
//! `(S_s φ)(P) = ∫_∂Ω Γ_s(P - Q) φ(Q) dQ` on a [`SurfaceMesh`].
//!
//! Row `i` is split with a smooth cutoff `χ_i` centred on the target node
//! (a function of reference-sphere chord distance, equal to 1 at the
//! target and 0 beyond the cutoff radius):
//!
//! * the smooth remainder `Γ_s (1 - χ_i)` is integrated with the mesh rule,
//!   so well-separated pairs get exactly `A_ij = Γ_s(P_i - Q_j) w_j`;
//! * the singular part `Γ_s χ_i` is integrated in geodesic polar coordinates
//!   about the target, Gauss–Jacobi in the radius (weight `ρ^{s-2}` absorbs
//!   the singularity together with the polar Jacobian) and trapezoidal in
//!   the angle. Densities at the polar points come from tensor Lagrange
//!   interpolation on the grid, so the correction lands on the nodal columns
//!   of the interpolation stencils.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::quadrature::{cutoff, gauss_jacobi_power, Rule};
use crate::surface::{angles, dist_sq, Density, Point, Surface, SurfaceMesh};

/// Parameters of the local singular correction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrectionParams {
    /// Cutoff radius in units of the reference grid step `π / nlat`.
    pub cutoff: f64,
    /// Gauss–Jacobi points in the polar radius.
    pub radial: usize,
    /// Trapezoidal points in the polar angle.
    pub angular: usize,
    /// Points per direction of the Lagrange interpolation stencil.
    pub interp_order: usize,
    /// Patches that reach a pole use `pole_density · nlon` angular and
    /// `pole_density · nlon / 2` radial points (if more than the base rule).
    /// Near the poles the longitude rings crowd together, so grid-scale
    /// density components vary on a scale that shrinks like `1/nlon` relative
    /// to the patch; under-resolving them makes the operator indefinite.
    pub pole_density: f64,
}

impl Default for CorrectionParams {
    fn default() -> Self {
        Self { cutoff: 5.0, radial: 10, angular: 20, interp_order: 10, pole_density: 5.0 }
    }
}

/// Which entries received the local correction, and how.
#[derive(Clone, Debug, Serialize)]
pub struct CorrectionInfo {
    pub scheme: &'static str,
    pub params: CorrectionParams,
    /// Cutoff radius as a chord length on the unit reference sphere.
    pub cutoff_chord: f64,
    /// Sorted corrected columns per row.
    #[serde(skip)]
    pub near: Vec<Vec<u32>>,
}

impl CorrectionInfo {
    pub fn is_corrected(&self, i: usize, j: usize) -> bool {
        self.near[i].binary_search(&(j as u32)).is_ok()
    }

    pub fn corrected_entries(&self) -> usize {
        self.near.iter().map(|r| r.len()).sum()
    }
}

/// Dense Nyström matrix of `S_s` on a mesh.
#[derive(Clone, Debug)]
pub struct BoundaryOperator {
    matrix: DMatrix<f64>,
    spec: KernelSpec,
    mesh_key: u64,
    weights: Vec<f64>,
    correction: CorrectionInfo,
}

/// Maximum weighted asymmetry, split by whether an entry pair was corrected.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SymmetryReport {
    /// `max |B_ij - B_ji|` over pairs where neither entry was corrected.
    pub far_field: f64,
    /// `max |B_ij - B_ji| / max |B|` over pairs with a corrected entry.
    pub near_field: f64,
    /// Same as `near_field` without normalization.
    pub near_field_abs: f64,
    pub max_entry: f64,
}

fn check_order(s: f64) -> Result<()> {
    if s <= 1.0 {
        return Err(Error::NonIntegrable(s));
    }
    if s > 2.0 {
        return Err(Error::Domain(format!("operator order s = {s} must lie in (1, 2]")));
    }
    Ok(())
}

/// Precomputed pieces shared by every row of one assembly.
struct RowContext<'a> {
    mesh: &'a SurfaceMesh,
    surface: Surface,
    kernel: KernelSpec,
    params: CorrectionParams,
    cutoff_chord: f64,
    max_angle: f64,
    radial: Rule,
    trig: Vec<(f64, f64)>,
    polar_radial: Rule,
    polar_trig: Vec<(f64, f64)>,
    /// Rows with colatitude (or its supplement) below this use the refined rule.
    polar_zone: f64,
}

impl<'a> RowContext<'a> {
    fn new(mesh: &'a SurfaceMesh, s: f64, params: CorrectionParams) -> Result<Self> {
        check_order(s)?;
        let kernel = KernelSpec::order(s)?;
        let cutoff_chord = params.cutoff * mesh.reference_spacing();
        let (nlat, nlon) = mesh.resolution();
        if params.radial == 0 || params.angular < 3 || params.cutoff <= 0.0 || !(params.pole_density >= 0.0) {
            return Err(Error::Domain(format!("invalid correction parameters {params:?}")));
        }
        if cutoff_chord >= 2.0 || params.interp_order > nlat || params.interp_order > nlon {
            return Err(Error::Resolution(format!(
                "mesh {nlat}x{nlon} is too coarse for the correction stencil"
            )));
        }
        let max_angle = 2.0 * (0.5 * cutoff_chord).asin();
        let angle_nodes = |count: usize| -> Vec<(f64, f64)> {
            (0..count).map(|m| (2.0 * PI * (m as f64 + 0.5) / count as f64).sin_cos()).collect()
        };
        let radial = gauss_jacobi_power(params.radial, s - 2.0);
        let trig = angle_nodes(params.angular);
        let polar_radial = gauss_jacobi_power(
            params.radial.max((0.5 * params.pole_density * nlon as f64).ceil() as usize),
            s - 2.0,
        );
        let polar_trig = angle_nodes(params.angular.max((params.pole_density * nlon as f64).ceil() as usize));
        let polar_zone = max_angle + 2.0 * mesh.colatitudes()[0];
        Ok(Self {
            mesh,
            surface: *mesh.surface(),
            kernel,
            params,
            cutoff_chord,
            max_angle,
            radial,
            trig,
            polar_radial,
            polar_trig,
            polar_zone,
        })
    }

    /// Row of the operator for a target given by its reference point.
    /// `self_index` names the node coinciding with the target, if any.
    fn row(&self, x: &Point, self_index: Option<usize>, stencil: &mut Vec<(usize, f64)>) -> (Vec<f64>, Vec<u32>) {
        let mesh = self.mesh;
        let n = mesh.len();
        let target = self.surface.map(x).point;
        let mut row = vec![0.0; n];
        let mut near = Vec::new();
        let r2cut = self.cutoff_chord * self.cutoff_chord;
        let refs = mesh.reference_points();
        let weights = mesh.weights();
        let nodes = mesh.nodes();
        for j in 0..n {
            if Some(j) == self_index {
                near.push(j as u32);
                continue;
            }
            let c2 = dist_sq(x, &refs[j]);
            let k = self.kernel.eval_sq(dist_sq(&target, &nodes[j])) * weights[j];
            if c2 >= r2cut {
                row[j] = k;
            } else {
                row[j] = k * (1.0 - cutoff(c2.sqrt() / self.cutoff_chord));
                near.push(j as u32);
            }
        }

        // local polar patch around the target
        let s = self.kernel.s();
        let (theta, phi) = angles(x);
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        let e1 = [ct * cp, ct * sp, -st];
        let e2 = [-sp, cp, 0.0];
        let (radial, trig) = if theta.min(PI - theta) < self.polar_zone {
            (&self.polar_radial, &self.polar_trig)
        } else {
            (&self.radial, &self.trig)
        };
        let dpsi = 2.0 * PI / trig.len() as f64;
        let radial_scale = self.max_angle.powf(s - 1.0);
        for (u, wu) in radial.nodes.iter().zip(&radial.weights) {
            let rho = self.max_angle * u;
            let (sr, cr) = rho.sin_cos();
            let chi = cutoff(2.0 * (0.5 * rho).sin() / self.cutoff_chord);
            if chi == 0.0 {
                continue;
            }
            let base = wu * radial_scale * dpsi * chi * sr / rho.powf(s - 2.0);
            for &(sin_psi, cos_psi) in trig {
                let q = [
                    cr * x[0] + sr * (cos_psi * e1[0] + sin_psi * e2[0]),
                    cr * x[1] + sr * (cos_psi * e1[1] + sin_psi * e2[1]),
                    cr * x[2] + sr * (cos_psi * e1[2] + sin_psi * e2[2]),
                ];
                let m = self.surface.map(&q);
                let w = base * m.jacobian * self.kernel.eval_sq(dist_sq(&target, &m.point));
                let (tq, pq) = angles(&q);
                mesh.interpolation_stencil_into(tq, pq, self.params.interp_order, stencil);
                for &(j, l) in stencil.iter() {
                    row[j] += w * l;
                    near.push(j as u32);
                }
                // keep the column list short; duplicates are removed at the end
                if near.len() > 8 * n {
                    near.sort_unstable();
                    near.dedup();
                }
            }
        }
        near.sort_unstable();
        near.dedup();
        (row, near)
    }
}

fn rows_to_matrix(rows: &[Vec<f64>], ncols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

/// Every row computed independently.
fn assemble_rows(ctx: &RowContext) -> (DMatrix<f64>, Vec<Vec<u32>>) {
    let refs = ctx.mesh.reference_points();
    let rows: Vec<(Vec<f64>, Vec<u32>)> = (0..ctx.mesh.len())
        .into_par_iter()
        .map_init(Vec::new, |buf, i| ctx.row(&refs[i], Some(i), buf))
        .collect();
    let (values, near): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    (rows_to_matrix(&values, ctx.mesh.len()), near)
}

/// Surfaces of revolution about the polar axis: the rows of one latitude
/// ring are rotations of each other by whole grid longitudes, so one row per
/// ring is computed and the rest are cyclic shifts of it.
fn assemble_by_rings(ctx: &RowContext) -> (DMatrix<f64>, Vec<Vec<u32>>) {
    let (nlat, nlon) = ctx.mesh.resolution();
    let refs = ctx.mesh.reference_points();
    let rings: Vec<(Vec<f64>, Vec<u32>)> = (0..nlat)
        .into_par_iter()
        .map_init(Vec::new, |buf, r| ctx.row(&refs[r * nlon], Some(r * nlon), buf))
        .collect();
    let n = ctx.mesh.len();
    let matrix = DMatrix::from_fn(n, n, |i, j| {
        let (r, k) = (i / nlon, i % nlon);
        let (rj, c) = (j / nlon, j % nlon);
        rings[r].0[rj * nlon + (c + nlon - k) % nlon]
    });
    let near = (0..n)
        .map(|i| {
            let (r, k) = (i / nlon, i % nlon);
            let mut cols: Vec<u32> = rings[r]
                .1
                .iter()
                .map(|&j| {
                    let (rj, c) = (j as usize / nlon, j as usize % nlon);
                    (rj * nlon + (c + k) % nlon) as u32
                })
                .collect();
            cols.sort_unstable();
            cols
        })
        .collect();
    (matrix, near)
}

impl BoundaryOperator {
    /// Assembles `S_s` with the default correction parameters.
    pub fn assemble(mesh: &SurfaceMesh, s: f64) -> Result<Self> {
        Self::assemble_with(mesh, s, CorrectionParams::default())
    }

    pub fn assemble_with(mesh: &SurfaceMesh, s: f64, params: CorrectionParams) -> Result<Self> {
        let ctx = RowContext::new(mesh, s, params)?;
        let (matrix, near) = if mesh.surface().is_axisymmetric() {
            assemble_by_rings(&ctx)
        } else {
            assemble_rows(&ctx)
        };
        Ok(Self {
            matrix,
            spec: ctx.kernel,
            mesh_key: mesh.key(),
            weights: mesh.weights().to_vec(),
            correction: CorrectionInfo {
                scheme: "partition-of-unity polar correction",
                params,
                cutoff_chord: ctx.cutoff_chord,
                near,
            },
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn correction(&self) -> &CorrectionInfo {
        &self.correction
    }

    pub fn mesh_key(&self) -> u64 {
        self.mesh_key
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodal values of `S_s φ`.
    pub fn apply(&self, phi: &Density) -> Result<Density> {
        if phi.mesh_key() != self.mesh_key || phi.len() != self.len() {
            return Err(Error::MeshMismatch);
        }
        let out = self.apply_slice(phi.values());
        Ok(Density::from_parts(self.mesh_key, out))
    }

    pub fn apply_slice(&self, values: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(values);
        (&self.matrix * v).as_slice().to_vec()
    }

    /// Rayleigh quotient in the quadrature inner product,
    /// `⟨v, A v⟩_w / ⟨v, v⟩_w`.
    pub fn rayleigh_quotient(&self, values: &[f64]) -> f64 {
        let av = self.apply_slice(values);
        let num: f64 = values.iter().zip(&av).zip(&self.weights).map(|((v, a), w)| v * a * w).sum();
        let den: f64 = values.iter().zip(&self.weights).map(|(v, w)| v * v * w).sum();
        num / den
    }

    /// `B = W^{1/2} K W^{1/2}` where `A = K W`.
    pub fn weighted_symmetrize(&self) -> DMatrix<f64> {
        let sq: Vec<f64> = self.weights.iter().map(|w| w.sqrt()).collect();
        DMatrix::from_fn(self.len(), self.len(), |i, j| self.matrix[(i, j)] * sq[i] / sq[j])
    }

    pub fn symmetry_report(&self) -> SymmetryReport {
        let b = self.weighted_symmetrize();
        let n = self.len();
        let max_entry = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut far = 0.0f64;
        let mut near = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = (b[(i, j)] - b[(j, i)]).abs();
                if self.correction.is_corrected(i, j) || self.correction.is_corrected(j, i) {
                    near = near.max(d);
                } else {
                    far = far.max(d);
                }
            }
        }
        SymmetryReport {
            far_field: far,
            near_field: near / max_entry,
            near_field_abs: near,
            max_entry,
        }
    }

    /// Writes the matrix as row-major little-endian doubles after a
    /// length-prefixed JSON header.
    pub fn write_binary(&self, path: &Path, mesh_hash: &str) -> Result<()> {
        let header = OperatorHeader {
            n: self.len(),
            s: self.spec.s(),
            mesh_hash: mesh_hash.to_string(),
            correction: self.correction.params,
        };
        let json = serde_json::to_vec(&header)?;
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(&(json.len() as u64).to_le_bytes())?;
        w.write_all(&json)?;
        for i in 0..self.len() {
            for j in 0..self.len() {
                w.write_all(&self.matrix[(i, j)].to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads an operator written by [`write_binary`](Self::write_binary)
    /// and checks it against `mesh`.
    pub fn read_binary(path: &Path, mesh: &SurfaceMesh) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let (header, matrix) = read_operator_file(&mut r)?;
        if header.n != mesh.len() {
            return Err(Error::SizeMismatch { expected: mesh.len(), got: header.n });
        }
        if header.mesh_hash != mesh.fingerprint() {
            return Err(Error::MeshMismatch);
        }
        // the near-field pattern is not stored; rebuild it from the parameters
        let ctx = RowContext::new(mesh, header.s, header.correction)?;
        let near = near_pattern(&ctx);
        Ok(Self {
            matrix,
            spec: ctx.kernel,
            mesh_key: mesh.key(),
            weights: mesh.weights().to_vec(),
            correction: CorrectionInfo {
                scheme: "partition-of-unity polar correction",
                params: header.correction,
                cutoff_chord: ctx.cutoff_chord,
                near,
            },
        })
    }
}

fn near_pattern(ctx: &RowContext) -> Vec<Vec<u32>> {
    if ctx.mesh.surface().is_axisymmetric() {
        assemble_by_rings(ctx).1
    } else {
        assemble_rows(ctx).1
    }
}

/// JSON header of the binary operator format.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OperatorHeader {
    pub n: usize,
    pub s: f64,
    pub mesh_hash: String,
    pub correction: CorrectionParams,
}

pub fn read_operator_file(r: &mut impl Read) -> Result<(OperatorHeader, DMatrix<f64>)> {
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let len = u64::from_le_bytes(len) as usize;
    if len > 1 << 20 {
        return Err(Error::Format(format!("implausible header length {len}")));
    }
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)?;
    let header: OperatorHeader = serde_json::from_slice(&json)?;
    let n = header.n;
    let mut buf = vec![0u8; n * n * 8];
    r.read_exact(&mut buf)?;
    let matrix = DMatrix::from_fn(n, n, |i, j| {
        let k = 8 * (i * n + j);
        f64::from_le_bytes(buf[k..k + 8].try_into().expect("8-byte chunk"))
    });
    Ok((header, matrix))
}

/// Rows of `S_s` (sources on `mesh`) at arbitrary on-surface targets given
/// by reference points. Used to build boundary data by over-resolved
/// quadrature.
pub fn assemble_at_targets(
    mesh: &SurfaceMesh,
    s: f64,
    params: CorrectionParams,
    targets: &[Point],
) -> Result<DMatrix<f64>> {
    let ctx = RowContext::new(mesh, s, params)?;
    let rows: Vec<Vec<f64>> = targets
        .par_iter()
        .map_init(Vec::new, |buf, x| {
            let coincident = mesh.reference_points().iter().position(|r| dist_sq(r, x) < 1e-28);
            ctx.row(x, coincident, buf).0
        })
        .collect();
    Ok(rows_to_matrix(&rows, mesh.len()))
}

/// Dense product `op1 · op2` (each factor carries its quadrature weights).
pub fn compose(op1: &BoundaryOperator, op2: &BoundaryOperator) -> Result<DMatrix<f64>> {
    if op1.mesh_key != op2.mesh_key {
        return Err(Error::MeshMismatch);
    }
    Ok(&op1.matrix * &op2.matrix)
}

/// Rayleigh quotient of an arbitrary nodal matrix in the weighted inner product.
pub fn matrix_rayleigh_quotient(matrix: &DMatrix<f64>, weights: &[f64], values: &[f64]) -> f64 {
    let av = matrix * DVector::from_column_slice(values);
    let num: f64 = values.iter().zip(av.iter()).zip(weights).map(|((v, a), w)| v * a * w).sum();
    let den: f64 = values.iter().zip(weights).map(|(v, w)| v * v * w).sum();
    num / den
}
