//! The non-check subcommands: mesh, assemble, solve, field, convergence
//! and the end-to-end exterior problem.

use fraclayer::analysis::real_harmonic;
use fraclayer::field::{decay_fit, eval_potential, uniform_sphere_potential};
use fraclayer::io::{read_density_column, write_field, write_json, write_mesh, write_table, MeshDescriptor};
use fraclayer::surface::{norm, sub};
use fraclayer::{condition_report, definiteness, solve_density, Density, SurfaceMesh};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::checks::{field_points, require_sphere, spectral_error, sphere_eigenvalue, trace_error};
use crate::config::{ConvergenceQuantity, Datum, ExperimentConfig};
use crate::{CheckReport, CliError, Relation, Result, Session};

type Outcome = (Vec<CheckReport>, Vec<String>);

/// Samples a datum on the mesh; `random` draws from the config seed.
pub fn datum_density(datum: &Datum, mesh: &SurfaceMesh, config: &ExperimentConfig) -> Result<Density> {
    match datum {
        Datum::Constant { value } => Ok(Density::constant(mesh, *value)),
        Datum::Harmonic { l, m, amplitude } => {
            if m.unsigned_abs() as usize > *l {
                return Err(CliError::Schema(format!("harmonic order m = {m} exceeds degree l = {l}")));
            }
            Ok(Density::from_fn(mesh, |_, [t, p]| amplitude * real_harmonic(*l, *m, t, p)))
        }
        Datum::Random { lmax } => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let mut terms = Vec::new();
            for l in 1..=*lmax {
                for m in -(l as i64)..=(l as i64) {
                    let c: f64 = rng.random_range(-1.0..=1.0);
                    terms.push((l, m, c / ((1 + l) * (1 + l)) as f64));
                }
            }
            Ok(Density::from_fn(mesh, |_, [t, p]| {
                1.0 + terms.iter().map(|&(l, m, c)| c * real_harmonic(l, m, t, p)).sum::<f64>()
            }))
        }
        Datum::File { path, column } => Ok(read_density_column(path, mesh, column)?),
    }
}

/// Exact density solving `S φ = g` for constant or single-harmonic `g` on a
/// sphere: `g / (a^{s-1} λ_ℓ(s))`.
fn closed_form_density(datum: &Datum, mesh: &SurfaceMesh, config: &ExperimentConfig) -> Result<Option<Density>> {
    let Some((_, radius)) = config.sphere() else { return Ok(None) };
    let s = 2.0 * config.alpha;
    Ok(match *datum {
        Datum::Constant { value } => Some(Density::constant(mesh, value / sphere_eigenvalue(s, 0, radius)?)),
        Datum::Harmonic { l, m, amplitude } => {
            let scale = amplitude / sphere_eigenvalue(s, l, radius)?;
            Some(Density::from_fn(mesh, |_, [t, p]| scale * real_harmonic(l, m, t, p)))
        }
        Datum::Random { .. } | Datum::File { .. } => None,
    })
}

/// `max |a - b| / max |b|`.
fn max_relative_gap(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

pub fn mesh(session: &Session) -> Result<Outcome> {
    let config = &session.config;
    let mesh = session.mesh(config.resolution)?;
    let mut columns = Vec::new();
    for (name, datum) in [("g", &config.boundary), ("phi", &config.density)] {
        if !matches!(datum, Datum::File { .. }) {
            columns.push((name, datum_density(datum, &mesh, config)?));
        }
    }
    let refs: Vec<(&str, &Density)> = columns.iter().map(|(n, d)| (*n, d)).collect();
    write_mesh(&session.artifact("mesh.csv"), &mesh, &refs)?;
    let report = CheckReport::new("mesh", "surface-quadrature").with_details(json!({
        "descriptor": MeshDescriptor::of(&mesh),
        "spacing": mesh.spacing(),
        "area": mesh.surface_integral(&vec![1.0; mesh.len()])?,
        "exact_area": config.surface.area(),
    }));
    Ok((vec![report], vec!["mesh.csv".into(), "mesh.json".into()]))
}

pub fn assemble(session: &Session) -> Result<Outcome> {
    let config = &session.config;
    let mesh = session.mesh(config.resolution)?;
    let op = session.operator(&mesh, 2.0 * config.alpha)?;
    op.write_binary(&session.artifact("operator.bin"), &mesh.fingerprint())?;
    let c = condition_report(&op)?;
    let d = definiteness(&op);
    let mut report = CheckReport::new("assemble", "operator-bijectivity");
    report.at_least("sigma_min / sigma_max", c.sigma_min / c.sigma_max, config.tolerances.singular_ratio_min);
    report.require("positive definite", f64::from(u8::from(d.positive_definite)), Relation::Exactly, 1.0);
    let report = report.with_details(json!({
        "alpha": config.alpha,
        "nodes": mesh.len(),
        "mesh_fingerprint": mesh.fingerprint(),
        "correction": op.correction(),
        "condition": c,
        "definiteness": d,
        "symmetry": op.symmetry_report(),
    }));
    write_json(&session.artifact("condition.json"), &report.details)?;
    Ok((vec![report], vec!["operator.bin".into(), "condition.json".into()]))
}

pub fn solve(session: &Session) -> Result<Outcome> {
    let config = &session.config;
    let mesh = session.mesh(config.resolution)?;
    let op = session.operator(&mesh, 2.0 * config.alpha)?;
    let g = datum_density(&config.boundary, &mesh, config)?;
    let solved = solve_density(&op, &g, config.solver)?;
    let mut report = CheckReport::new("solve", "boundary-density-solve");
    report.below("relative residual", solved.residual, config.tolerances.solve_residual);
    let mut density_error = None;
    if let Some(exact) = closed_form_density(&config.boundary, &mesh, config)? {
        let err = max_relative_gap(solved.density.values(), exact.values());
        report.below("density vs closed form", err, config.tolerances.bvp_density);
        density_error = Some(err);
    }
    write_mesh(&session.artifact("density.csv"), &mesh, &[("g", &g), ("phi", &solved.density)])?;
    let report = report.with_details(json!({"alpha": config.alpha, "solve": solved, "density_error": density_error}));
    Ok((vec![report], vec!["density.csv".into(), "density.json".into()]))
}

pub fn field(session: &Session) -> Result<Outcome> {
    let config = &session.config;
    let mesh = session.mesh(config.resolution)?;
    let phi = datum_density(&config.density, &mesh, config)?;
    let points = field_points(config);
    let samples = eval_potential(&mesh, &phi, config.alpha, &points)?;
    write_field(&session.artifact("field.csv"), &samples)?;
    let mut report = CheckReport::new("field", "single-layer-potential");
    if let (Some((center, radius)), Datum::Constant { value }) = (config.sphere(), &config.density) {
        for sample in &samples {
            let r = norm(&sub(&sample.point, &center));
            let exact = value * uniform_sphere_potential(2.0 * config.alpha, radius, r)?;
            report.below(format!("field at r = {r:.4} vs closed form"), (sample.value / exact - 1.0).abs(), config.tolerances.closed_form);
        }
    }
    let report = report.with_details(json!({"alpha": config.alpha, "points": samples.len()}));
    Ok((vec![report], vec!["field.csv".into()]))
}

pub fn convergence(session: &Session) -> Result<Outcome> {
    let config = &session.config;
    let (_, radius) = require_sphere(config, "convergence")?;
    let s = 2.0 * config.alpha;
    let quantity = config.convergence.quantity;
    let mut rows = Vec::new();
    for &nlat in &config.convergence.nlats {
        let res = config.resolution.with_nlat(nlat);
        let mesh = session.mesh(res)?;
        let op = session.operator(&mesh, s)?;
        let error = match quantity {
            ConvergenceQuantity::Spectral => spectral_error(&op, &mesh, s, radius, config.spectral.lmax)?,
            ConvergenceQuantity::Trace => trace_error(&op, &mesh, s, radius)?,
        };
        rows.push(vec![nlat as f64, res.nlon as f64, mesh.spacing(), error]);
    }
    let orders: Vec<f64> = rows
        .windows(2)
        .map(|w| (w[0][3] / w[1][3]).ln() / (w[0][2] / w[1][2]).ln())
        .collect();
    let (first, last) = (rows[0][3], rows[rows.len() - 1][3]);
    let tol = match quantity {
        ConvergenceQuantity::Spectral => config.tolerances.spectral,
        ConvergenceQuantity::Trace => config.tolerances.trace,
    };
    let mut report = CheckReport::new("convergence", "discretization-convergence");
    report.below("error at the finest resolution", last, tol);
    report.require("error reduction coarsest / finest", first / last, Relation::Above, 1.0);
    let report = report.with_details(json!({"alpha": config.alpha, "quantity": quantity, "observed_orders": orders}));
    write_table(
        &session.artifact("convergence.csv"),
        &json!({"alpha": config.alpha, "quantity": quantity}),
        &["nlat", "nlon", "h", "error"],
        &rows,
    )?;
    Ok((vec![report], vec!["convergence.csv".into()]))
}

pub fn bvp(session: &Session) -> Result<Outcome> {
    let config = &session.config;
    let tol = &config.tolerances;
    let alpha = config.alpha;
    let s = 2.0 * alpha;
    let mesh = session.mesh(config.resolution)?;
    let op = session.operator(&mesh, s)?;
    let g = datum_density(&config.boundary, &mesh, config)?;
    let solved = solve_density(&op, &g, config.solver)?;
    let phi = &solved.density;
    let mut report = CheckReport::new("bvp", "exterior-dirichlet-pipeline");
    report.below("relative residual", solved.residual, tol.solve_residual);

    let mut density_error = None;
    if let Some(exact) = closed_form_density(&config.boundary, &mesh, config)? {
        let err = max_relative_gap(phi.values(), exact.values());
        report.below("density vs closed form", err, tol.bvp_density);
        density_error = Some(err);
    }

    let exterior: Vec<_> = field_points(config).into_iter().filter(|p| !config.surface.contains(p)).collect();
    let samples = eval_potential(&mesh, phi, alpha, &exterior)?;
    let mut field_rows = Vec::new();
    for sample in &samples {
        let mut row = json!({"point": sample.point, "u": sample.value});
        if let (Some((center, radius)), Datum::Constant { value }) = (config.sphere(), &config.boundary) {
            let r = norm(&sub(&sample.point, &center));
            let exact = value * uniform_sphere_potential(s, radius, r)? / sphere_eigenvalue(s, 0, radius)?;
            report.below(format!("field at r = {r:.4} vs closed form"), (sample.value / exact - 1.0).abs(), tol.bvp_field);
            row["exact"] = json!(exact);
        }
        field_rows.push(row);
    }

    let fit = decay_fit(&mesh, phi, alpha, &config.field.decay_radii)?;
    report.below("|decay exponent - (2α - 3)|", (fit.exponent - fit.expected_exponent).abs(), tol.decay_exponent);
    let report = report.with_details(json!({
        "alpha": alpha,
        "solve": solved,
        "density_error": density_error,
        "field": field_rows,
        "decay": fit,
        "decay_radii": config.field.decay_radii,
    }));
    Ok((vec![report], vec![]))
}
