//! The numerical checks. Each returns a [`CheckReport`] with one
//! measurement per tolerance and the files it wrote.

use std::f64::consts::PI;

use fraclayer::analysis::{
    besov_seminorm_patch, composition_spectrum_report, flat_semigroup_check, fourier_gaussian_check,
    frozen_gain_envelope, funk_hecke_eigenvalue, linear_seminorm_exact, mapping_gains, real_harmonic,
    riesz_semigroup_check,
};
use fraclayer::assembly::{compose, matrix_rayleigh_quotient};
use fraclayer::field::{eval_potential, uniform_sphere_potential, weak_residual};
use fraclayer::io::write_table;
use fraclayer::{
    condition_report, definiteness, BoundaryOperator, BumpSpec, Density, PatchSamples, Point, SurfaceMesh,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{CheckName, ExperimentConfig};
use crate::{CheckReport, CliError, Relation, Result, Session};

pub fn run_check(session: &Session, name: CheckName) -> Result<(CheckReport, Vec<String>)> {
    match name {
        CheckName::FunkHecke => funk_hecke(session),
        CheckName::Spectral => spectral(session).map(|r| (r, vec![])),
        CheckName::ClosedForm => closed_form(session).map(|r| (r, vec![])),
        CheckName::Conditioning => conditioning(session).map(|r| (r, vec![])),
        CheckName::Symmetry => symmetry(session).map(|r| (r, vec![])),
        CheckName::SemigroupFlat => semigroup_flat(&session.config).map(|r| (r, vec![])),
        CheckName::Composition => composition(session),
        CheckName::Weak => weak(session).map(|r| (r, vec![])),
        CheckName::RieszSemigroup => riesz_semigroup(&session.config).map(|r| (r, vec![])),
        CheckName::FourierGaussian => fourier_gaussian(&session.config).map(|r| (r, vec![])),
        CheckName::NormEquivalence => norm_equivalence(session),
        CheckName::Besov => besov(&session.config).map(|r| (r, vec![])),
    }
}

/// Center and radius of the configured sphere; the spectral oracles need one.
pub(crate) fn require_sphere(config: &ExperimentConfig, what: &str) -> Result<(Point, f64)> {
    config.sphere().ok_or_else(|| CliError::Schema(format!("{what} requires a sphere surface")))
}

/// Eigenvalue of `S_s` on degree-`ℓ` harmonics of a sphere of radius `a`.
pub(crate) fn sphere_eigenvalue(s: f64, l: usize, a: f64) -> Result<f64> {
    Ok(a.powf(s - 1.0) * funk_hecke_eigenvalue(s, l)?)
}

/// Worst `|⟨Y, A Y⟩_w / ⟨Y, Y⟩_w / λ_ℓ - 1|` over real harmonics of degree
/// at most `lmax`.
pub fn spectral_error(op: &BoundaryOperator, mesh: &SurfaceMesh, s: f64, radius: f64, lmax: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for l in 0..=lmax {
        let lambda = sphere_eigenvalue(s, l, radius)?;
        for m in -(l as i64)..=(l as i64) {
            let y = mesh.sample(|_, [t, p]| real_harmonic(l, m, t, p));
            worst = worst.max((op.rayleigh_quotient(&y) / lambda - 1.0).abs());
        }
    }
    Ok(worst)
}

/// Worst nodal relative error of `A·1` against the closed-form trace.
pub fn trace_error(op: &BoundaryOperator, mesh: &SurfaceMesh, s: f64, radius: f64) -> Result<f64> {
    let exact = uniform_sphere_potential(s, radius, radius)?;
    let a1 = op.apply(&Density::constant(mesh, 1.0))?;
    Ok(a1.values().iter().fold(0.0f64, |m, v| m.max((v / exact - 1.0).abs())))
}

fn funk_hecke(session: &Session) -> Result<(CheckReport, Vec<String>)> {
    let config = &session.config;
    let mut report = CheckReport::new("funk-hecke", "riesz-eigenvalue-oracle");
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for l in 0..=config.funk_hecke_lmax {
        let lambda = funk_hecke_eigenvalue(2.0, l)?;
        let exact = 4.0 * PI * PI / (2 * l + 1) as f64;
        let err = (lambda / exact - 1.0).abs();
        worst = worst.max(err);
        rows.push(vec![l as f64, lambda, exact, err]);
    }
    report.below("max relative error vs 4π²/(2ℓ+1)", worst, config.tolerances.funk_hecke);
    let file = "funk-hecke.csv";
    write_table(
        &session.artifact(file),
        &json!({"s": 2.0, "lmax": config.funk_hecke_lmax}),
        &["l", "lambda", "exact", "relative_error"],
        &rows,
    )?;
    Ok((report.with_details(json!({"s": 2.0, "lmax": config.funk_hecke_lmax})), vec![file.into()]))
}

fn spectral(session: &Session) -> Result<CheckReport> {
    let config = &session.config;
    let (_, radius) = require_sphere(config, "the spectral check")?;
    let tol = &config.tolerances;
    let mut report = CheckReport::new("spectral", "operator-spectral-accuracy");
    if config.spectral.coarse_nlat >= config.resolution.nlat {
        return Err(CliError::Schema("spectral.coarse_nlat must be below resolution.nlat".into()));
    }
    let resolutions = [config.resolution.with_nlat(config.spectral.coarse_nlat), config.resolution];
    let mut details = Vec::new();
    for &alpha in &config.alphas {
        let s = 2.0 * alpha;
        let mut errors = Vec::new();
        for res in resolutions {
            let mesh = session.mesh(res)?;
            let op = session.operator(&mesh, s)?;
            errors.push(spectral_error(&op, &mesh, s, radius, config.spectral.lmax)?);
        }
        let ratio = errors[0] / errors[1];
        report.below(format!("alpha {alpha}: error at nlat {}", config.resolution.nlat), errors[1], tol.spectral);
        report.at_least(format!("alpha {alpha}: refinement ratio"), ratio, tol.spectral_ratio_min);
        details.push(json!({"alpha": alpha, "nlat": [resolutions[0].nlat, resolutions[1].nlat], "errors": errors, "ratio": ratio}));
    }
    Ok(report.with_details(json!({"lmax": config.spectral.lmax, "orders": details})))
}

/// Evaluation points along the configured direction plus explicit points.
pub(crate) fn field_points(config: &ExperimentConfig) -> Vec<Point> {
    let c = config.surface.center();
    let d = config.field.direction;
    let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    let mut points: Vec<Point> = config
        .field
        .radii
        .iter()
        .map(|r| std::array::from_fn(|k| c[k] + r * d[k] / n))
        .collect();
    points.extend_from_slice(&config.field.points);
    points
}

fn closed_form(session: &Session) -> Result<CheckReport> {
    let config = &session.config;
    let (center, radius) = require_sphere(config, "the closed-form check")?;
    let (alpha, s) = (config.alpha, 2.0 * config.alpha);
    let tol = &config.tolerances;
    let mut report = CheckReport::new("closed-form", "closed-form-sphere-potential");
    let mesh = session.mesh(config.resolution)?;
    let one = Density::constant(&mesh, 1.0);
    let points = field_points(config);
    let samples = eval_potential(&mesh, &one, alpha, &points)?;
    let mut rows = Vec::new();
    for sample in &samples {
        let r = fraclayer::surface::norm(&fraclayer::surface::sub(&sample.point, &center));
        let exact = uniform_sphere_potential(s, radius, r)?;
        let err = (sample.value / exact - 1.0).abs();
        report.below(format!("field at r = {r:.4}"), err, tol.closed_form);
        rows.push(json!({"r": r, "u": sample.value, "exact": exact, "quadrature": sample.quadrature}));
    }
    let op = session.operator(&mesh, s)?;
    let trace = trace_error(&op, &mesh, s, radius)?;
    report.below("surface trace A·1", trace, tol.trace);
    let exact_trace = uniform_sphere_potential(s, radius, radius)?;
    Ok(report.with_details(json!({"alpha": alpha, "field": rows, "trace_exact": exact_trace, "trace_error": trace})))
}

fn conditioning(session: &Session) -> Result<CheckReport> {
    let config = &session.config;
    let tol = &config.tolerances;
    let mut report = CheckReport::new("conditioning", "operator-bijectivity");
    let nlats = &config.conditioning.nlats;
    let mut details = Vec::new();
    for &alpha in &config.alphas {
        let s = 2.0 * alpha;
        let mut conds = Vec::new();
        let mut rows = Vec::new();
        for &nlat in nlats {
            let mesh = session.mesh(config.resolution.with_nlat(nlat))?;
            let op = session.operator(&mesh, s)?;
            let c = condition_report(&op)?;
            let d = definiteness(&op);
            report.at_least(format!("alpha {alpha} nlat {nlat}: sigma_min / sigma_max"), c.sigma_min / c.sigma_max, tol.singular_ratio_min);
            report.require(
                format!("alpha {alpha} nlat {nlat}: positive definite"),
                f64::from(u8::from(d.positive_definite)),
                Relation::Exactly,
                1.0,
            );
            conds.push(c.cond);
            rows.push(json!({"nlat": nlat, "condition": c, "definiteness": d}));
        }
        let (first, last) = (nlats[0], nlats[nlats.len() - 1]);
        let growth = conds[conds.len() - 1] / conds[0];
        let expected = (last as f64 / first as f64).powf(2.0 * alpha - 1.0);
        let deviation = (growth / expected).max(expected / growth);
        let asserted = config.conditioning.growth_alphas.contains(&alpha);
        if asserted {
            report.below(
                format!("alpha {alpha}: cond growth {first}->{last} deviation factor"),
                deviation,
                tol.condition_growth_factor,
            );
        }
        details.push(json!({
            "alpha": alpha, "resolutions": rows, "growth": growth, "expected_growth": expected,
            "deviation_factor": deviation, "growth_asserted": asserted,
        }));
    }
    Ok(report.with_details(json!({"orders": details})))
}

fn symmetry(session: &Session) -> Result<CheckReport> {
    let config = &session.config;
    let tol = &config.tolerances;
    let mut report = CheckReport::new("symmetry", "weighted-symmetry");
    let mesh = session.mesh(config.resolution)?;
    let op = session.operator(&mesh, 2.0 * config.alpha)?;
    let sym = op.symmetry_report();
    report.below("far-field asymmetry", sym.far_field, tol.far_field_asymmetry);
    report.below("near-field asymmetry / max|B|", sym.near_field, tol.near_field_asymmetry);
    let corrected = op.correction().corrected_entries();
    Ok(report.with_details(json!({
        "alpha": config.alpha, "report": sym, "corrected_entries": corrected, "entries": op.len() * op.len(),
    })))
}

fn semigroup_flat(config: &ExperimentConfig) -> Result<CheckReport> {
    let tol = &config.tolerances;
    let mut report = CheckReport::new("semigroup-flat", "planar-convolution-identity");
    let mut details = Vec::new();
    for &alpha in &config.alphas {
        for &d in &config.flat.separations {
            let r = flat_semigroup_check(alpha, [0.0, 0.0], [d, 0.0])?;
            report.below(format!("alpha {alpha} separation {d}: |lhs/rhs - 1|"), r.relative_gap.abs(), tol.flat_semigroup);
            if d == 1.0 {
                report.below(format!("alpha {alpha}: |rhs/π - 1| at separation 1"), (r.rhs / PI - 1.0).abs(), tol.flat_rhs);
            }
            details.push(r);
        }
    }
    Ok(report.with_details(json!({"cases": details})))
}

fn composition(session: &Session) -> Result<(CheckReport, Vec<String>)> {
    let config = &session.config;
    let (_, radius) = require_sphere(config, "the composition check")?;
    let tol = &config.tolerances;
    let mut report = CheckReport::new("composition", "composition-structure");
    let mesh = session.mesh(config.resolution)?;
    let mut rows = Vec::new();
    let mut details = Vec::new();
    for &alpha in &config.alphas {
        let table = composition_spectrum_report(alpha, config.composition.lmax)?;
        report.at_least(format!("alpha {alpha}: log-log slope gap"), table.slope_gap, tol.composition_slope_gap_min);
        rows.extend(table.rows.iter().map(|r| vec![alpha, r.l as f64, r.lambda_2a, r.lambda_3m2a, r.lambda_2, r.ratio]));

        let (s1, s2) = (2.0 * alpha, 3.0 - 2.0 * alpha);
        let a = session.operator(&mesh, s1)?;
        let b = session.operator(&mesh, s2)?;
        let product = compose(&a, &b)?;
        let mut worst: f64 = 0.0;
        for l in 0..=config.composition.compose_lmax {
            let expected = sphere_eigenvalue(s1, l, radius)? * sphere_eigenvalue(s2, l, radius)?;
            for m in -(l as i64)..=(l as i64) {
                let y = mesh.sample(|_, [t, p]| real_harmonic(l, m, t, p));
                let q = matrix_rayleigh_quotient(&product, mesh.weights(), &y);
                worst = worst.max((q / expected - 1.0).abs());
            }
        }
        report.below(format!("alpha {alpha}: matrix compose vs oracle products"), worst, tol.compose);
        details.push(json!({
            "alpha": alpha,
            "fit_from": table.fit_from,
            "reference_slope": table.reference_slope,
            "difference_slope": table.difference_slope,
            "slope_gap": table.slope_gap,
            "limit_ratio": table.limit_ratio,
            "rescaled_difference_slope": table.rescaled_difference_slope,
            "rescaled_slope_gap": table.rescaled_slope_gap,
            "compose_max_relative_error": worst,
        }));
    }
    let file = "composition.csv";
    write_table(
        &session.artifact(file),
        &json!({"lmax": config.composition.lmax}),
        &["alpha", "l", "lambda_2a", "lambda_3m2a", "lambda_2", "ratio"],
        &rows,
    )?;
    Ok((report.with_details(json!({"orders": details})), vec![file.into()]))
}

fn weak(session: &Session) -> Result<CheckReport> {
    let config = &session.config;
    let mut report = CheckReport::new("weak", "weak-fractional-harmonicity");
    let mesh = session.mesh(config.resolution.with_nlat(config.weak.nlat))?;
    let phi = crate::commands::datum_density(&config.density, &mesh, config)?;
    let mut details = Vec::new();
    for &center in &config.weak.bump_centers {
        let bump = BumpSpec::new(center, config.weak.bump_radius)?;
        let r = weak_residual(&mesh, &phi, config.alpha, &bump, &config.weak.grid)?;
        report.below(format!("bump at {center:?}: normalized residual"), r.residual, config.tolerances.weak_residual);
        details.push(json!({"center": center, "report": r}));
    }
    Ok(report.with_details(json!({"alpha": config.alpha, "grid": config.weak.grid, "bumps": details})))
}

/// The bump center followed by seeded points uniform in the ball of radius
/// `1.5 a` around it.
pub fn riesz_points(config: &ExperimentConfig) -> Vec<Point> {
    let r = &config.riesz;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut points = vec![r.bump_center];
    let reach = 1.5 * r.bump_radius;
    while points.len() < r.points {
        let v: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        if v.iter().map(|x| x * x).sum::<f64>() < 1.0 {
            points.push(std::array::from_fn(|k| r.bump_center[k] + reach * v[k]));
        }
    }
    points
}

fn riesz_semigroup(config: &ExperimentConfig) -> Result<CheckReport> {
    let r = &config.riesz;
    let mut report = CheckReport::new("riesz-semigroup", "riesz-semigroup");
    let bump = BumpSpec::new(r.bump_center, r.bump_radius)?;
    let points = riesz_points(config);
    let result = riesz_semigroup_check(&bump, r.s1, r.s2, &points, r.grids)?;
    report.below(
        format!("max |I_{}(I_{} f) / I_{} f - 1|", r.s1, r.s2, r.s1 + r.s2),
        result.max_relative_gap,
        config.tolerances.riesz_semigroup,
    );
    Ok(report.with_details(json!({"grids": r.grids, "report": result})))
}

fn fourier_gaussian(config: &ExperimentConfig) -> Result<CheckReport> {
    let r = &config.riesz;
    let mut report = CheckReport::new("fourier-gaussian", "riesz-fourier-symbol");
    let mut details = Vec::new();
    for &s in &r.gaussian_orders {
        let result = fourier_gaussian_check(s, &r.gaussian_radii, r.gaussian_n)?;
        report.below(format!("s {s}: max relative error vs Fourier oracle"), result.max_relative_error, config.tolerances.fourier_gaussian);
        details.push(result);
    }
    Ok(report.with_details(json!({"n": r.gaussian_n, "orders": details})))
}

fn norm_equivalence(session: &Session) -> Result<(CheckReport, Vec<String>)> {
    let config = &session.config;
    let mut report = CheckReport::new("norm-equivalence", "sobolev-norm-equivalence");
    let mut rows = Vec::new();
    let mut details = Vec::new();
    for &alpha in &config.alphas {
        let gains = mapping_gains(alpha, config.norm_lmax)?;
        rows.extend(gains.gains.iter().enumerate().map(|(l, g)| vec![alpha, l as f64, *g]));
        match frozen_gain_envelope(alpha) {
            Some((lo, hi)) => {
                let excess = ((lo - gains.lower) / lo).max((gains.upper - hi) / hi).max(0.0);
                report.below(format!("alpha {alpha}: relative excursion beyond frozen envelope"), excess, config.tolerances.gain_envelope);
                details.push(json!({"alpha": alpha, "lower": gains.lower, "upper": gains.upper, "envelope": [lo, hi]}));
            }
            None => {
                report.require(format!("alpha {alpha}: frozen envelope available"), 0.0, Relation::Exactly, 1.0);
                details.push(json!({"alpha": alpha, "lower": gains.lower, "upper": gains.upper, "envelope": null}));
            }
        }
    }
    let file = "norm-equivalence.csv";
    write_table(&session.artifact(file), &json!({"lmax": config.norm_lmax}), &["alpha", "l", "gain"], &rows)?;
    Ok((report.with_details(json!({"lmax": config.norm_lmax, "orders": details})), vec![file.into()]))
}

fn besov(config: &ExperimentConfig) -> Result<CheckReport> {
    let b = &config.besov;
    let tol = &config.tolerances;
    let mut report = CheckReport::new("besov", "besov-seminorm");
    let constant = PatchSamples::from_fn(b.side, b.n, |_, _| 3.5)?;
    let linear = PatchSamples::from_fn(b.side, b.n, |x, _| x)?;
    let refined = PatchSamples::from_fn(b.side, 2 * b.n - 1, |x, _| x)?;
    let smooth = PatchSamples::from_fn(b.side, b.n, |x, y| (3.0 * x).sin() * y + x * x)?;
    let doubled = smooth.scaled(2.0);
    let mut details = Vec::new();
    for &(s, p) in &b.orders {
        let zero = besov_seminorm_patch(&constant, s, p)?;
        report.require(format!("s {s} p {p}: constant"), zero, Relation::Exactly, 0.0);
        let value = besov_seminorm_patch(&linear, s, p)?;
        let fine = besov_seminorm_patch(&refined, s, p)?;
        let exact = linear_seminorm_exact(b.side, s, p)?;
        report.below(format!("s {s} p {p}: x₁ vs refined patch"), (value / fine - 1.0).abs(), tol.besov_linear);
        report.below(format!("s {s} p {p}: x₁ vs exact value"), (value / exact - 1.0).abs(), tol.besov_linear);
        let one = besov_seminorm_patch(&smooth, s, p)?;
        let two = besov_seminorm_patch(&doubled, s, p)?;
        report.below(format!("s {s} p {p}: homogeneity"), (two / (2.0 * one) - 1.0).abs(), tol.besov_homogeneity);
        details.push(json!({"s": s, "p": p, "linear": value, "linear_refined": fine, "linear_exact": exact, "smooth": one, "smooth_doubled": two}));
    }
    Ok(report.with_details(json!({"side": b.side, "n": b.n, "orders": details})))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn riesz_points_are_seeded_and_inside_the_reach() {
        let mut config = ExperimentConfig::default();
        config.seed = 11;
        let a = riesz_points(&config);
        assert_eq!(a, riesz_points(&config));
        assert_eq!(a.len(), 5);
        assert_eq!(a[0], config.riesz.bump_center);
        for p in &a {
            assert!(fraclayer::surface::norm(p) < 1.5);
        }
        config.seed = 12;
        assert_ne!(a, riesz_points(&config));
    }

    #[test]
    fn field_points_follow_the_direction() {
        let config = ExperimentConfig::default();
        let pts = field_points(&config);
        assert_eq!(pts.len(), config.field.radii.len());
        assert!((fraclayer::surface::norm(&pts[3]) - 2.0).abs() < 1e-14);
    }
}
