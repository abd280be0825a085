//! Task execution and dry-run validation.

use std::path::{Path, PathBuf};

use crate::config::{ExperimentConfig, Task};
use crate::report;
use warplab::mesh::{build_mesh, fake_distance, solve_green, IdentityReport, Perturbation};
use warplab::model::{
    brooks_upper_bound, green_kernel_model, solve_warping, ModelGeometry, WarpingParams,
};
use warplab::numeric::SplitMix64;
use warplab::spectrum::{
    bottom_spectrum_estimate, classify_embedded, dirichlet_eigenvalues, ClassifyOptions,
    EigenMethod, SchrodingerForm, SpectralReport,
};
use warplab::weyl::{decay_scan, reports_to_csv, WeylParams};

#[derive(Debug, thiserror::Error)]
pub enum TaskError {
    #[error("config invalid: {0}")]
    Config(String),
    #[error("task {task}: {message}")]
    Module { task: &'static str, message: String },
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl TaskError {
    fn module(task: &'static str, err: impl std::fmt::Display) -> Self {
        TaskError::Module {
            task,
            message: err.to_string(),
        }
    }
}

fn warping_params(config: &ExperimentConfig) -> WarpingParams {
    let defaults = WarpingParams::default();
    WarpingParams {
        nodes_per_unit: config.model.nodes_per_unit.unwrap_or(defaults.nodes_per_unit),
        substeps: config.model.substeps.unwrap_or(defaults.substeps),
        tol: config.model.tol.unwrap_or(defaults.tol),
    }
}

fn build_geometry(config: &ExperimentConfig, with_green: bool) -> Result<ModelGeometry, TaskError> {
    let profile = config
        .build_profile()
        .map_err(|e| TaskError::Config(e.to_string()))?;
    let mut geom = solve_warping(
        &profile,
        config.dimension,
        config.model.r_max,
        warping_params(config),
    )
    .map_err(|e| TaskError::module("model", e))?;
    if with_green {
        green_kernel_model(&mut geom).map_err(|e| TaskError::module("model", e))?;
    }
    Ok(geom)
}

/// Pre-run resolution of every grid and window; returns the diagnostics
/// listing without computing anything heavy.
pub fn validate(config: &ExperimentConfig) -> Result<Vec<String>, TaskError> {
    let profile = config
        .build_profile()
        .map_err(|e| TaskError::Config(e.to_string()))?;
    profile
        .validate(config.model.r_max)
        .map_err(|e| TaskError::Config(e.to_string()))?;
    let mut lines = Vec::new();
    lines.push(format!(
        "profile {} ({:?}), dimension {}",
        profile.family_name(),
        profile.asymptotic_class(),
        config.dimension
    ));
    let params = warping_params(config);
    let nodes = (params.nodes_per_unit as f64 * config.model.r_max).ceil() as usize;
    lines.push(format!(
        "model grid: {} nodes to r = {}, {} substeps, tol {:.1e}",
        nodes, config.model.r_max, params.substeps, params.tol
    ));
    lines.push(format!(
        "model memory: ~{:.1} MB",
        (nodes * 8 * 6) as f64 / 1e6
    ));

    match config.task {
        Task::Model => {}
        Task::Spectrum => {
            let s = config.spectrum.as_ref().unwrap();
            if s.s_max > config.model.r_max {
                return Err(TaskError::Config(format!(
                    "spectrum.s_max = {} exceeds model.r_max = {}",
                    s.s_max, config.model.r_max
                )));
            }
            if !matches!(s.method.as_str(), "matrix" | "shooting") {
                return Err(TaskError::Config(format!(
                    "spectrum.method must be \"matrix\" or \"shooting\", got \"{}\"",
                    s.method
                )));
            }
            if let Some(radii) = &s.radii {
                if radii.len() < 3 || radii.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(TaskError::Config(
                        "spectrum.radii must be at least 3 increasing values".into(),
                    ));
                }
                if radii.last().copied().unwrap_or(0.0) > config.model.r_max {
                    return Err(TaskError::Config(
                        "spectrum.radii exceed model.r_max".into(),
                    ));
                }
            }
            lines.push(format!(
                "spectrum domain [{}, {}], {} eigenvalue(s) by {}",
                s.s_min, s.s_max, s.eigen_count, s.method
            ));
        }
        Task::Weyl => {
            let w = config.weyl.as_ref().unwrap();
            if !profile.is_pinching() {
                return Err(TaskError::Config(format!(
                    "task = \"weyl\" needs an integrable curvature deviation; profile {} is {:?}",
                    profile.family_name(),
                    profile.asymptotic_class()
                )));
            }
            let threshold =
                ((config.dimension - 1) * (config.dimension - 1)) as f64 / 4.0;
            if !(w.lambda > threshold) {
                return Err(TaskError::Config(format!(
                    "weyl.lambda = {} is not above the threshold {}",
                    w.lambda, threshold
                )));
            }
            for &t in &w.t_grid {
                if !(t > w.t0 + 1.0) {
                    return Err(TaskError::Config(format!(
                        "weyl.t_grid entry {t} is not above t0 + 1 = {}",
                        w.t0 + 1.0
                    )));
                }
                for &l in &w.l_grid {
                    let cap = t + l + w.s_gap;
                    if cap + 1.0 > config.model.r_max {
                        return Err(TaskError::Config(format!(
                            "window (t={t}, L={l}) needs the model tabulated to {} but model.r_max = {}",
                            cap + 1.0,
                            config.model.r_max
                        )));
                    }
                }
            }
            lines.push(format!(
                "weyl scan: {} x {} windows, lambda {}, S = s + {}",
                w.t_grid.len(),
                w.l_grid.len(),
                w.lambda,
                w.s_gap
            ));
        }
        Task::Mesh => {
            let m = config.mesh.as_ref().unwrap();
            if config.dimension != 2 {
                return Err(TaskError::Config(
                    "task = \"mesh\" needs dimension = 2".into(),
                ));
            }
            if !profile.is_pinching() {
                return Err(TaskError::Config(format!(
                    "task = \"mesh\" needs an integrable curvature deviation; profile {} is {:?}",
                    profile.family_name(),
                    profile.asymptotic_class()
                )));
            }
            if config.model.r_max < m.r_max + 2.0 {
                return Err(TaskError::Config(format!(
                    "model.r_max must reach mesh.r_max + 2 = {}",
                    m.r_max + 2.0
                )));
            }
            if m.delta > 0.0 {
                let support = m.support.ok_or_else(|| {
                    TaskError::Config("mesh.delta > 0 needs mesh.support".into())
                })?;
                if !(support[0] > 1.0 && support[1] > support[0] && support[1] < m.r_max - 2.0)
                {
                    return Err(TaskError::Config(format!(
                        "mesh.support [{}, {}] must sit inside (1, mesh.r_max - 2)",
                        support[0], support[1]
                    )));
                }
                if m.ntheta < 16 * m.mode_m {
                    return Err(TaskError::Config(format!(
                        "mesh.ntheta = {} cannot resolve mode m = {}",
                        m.ntheta, m.mode_m
                    )));
                }
            }
            if !m.ntheta.is_power_of_two() || m.ntheta < 16 {
                return Err(TaskError::Config(
                    "mesh.ntheta must be a power of two >= 16".into(),
                ));
            }
            if m.exhaustion.is_empty()
                || m.exhaustion.windows(2).any(|w| w[1] <= w[0])
                || m.exhaustion.last().copied().unwrap_or(0.0) > m.r_max
            {
                return Err(TaskError::Config(
                    "mesh.exhaustion must be increasing and end at or below mesh.r_max".into(),
                ));
            }
            if !(m.band[0] < m.band[1])
                || m.band[1] + 1.0 > m.exhaustion[m.exhaustion.len().saturating_sub(2)]
            {
                return Err(TaskError::Config(format!(
                    "mesh.band [{}, {}] must stay one unit inside the second-to-last exhaustion radius",
                    m.band[0], m.band[1]
                )));
            }
            let vertices = 1 + m.nr * m.ntheta;
            lines.push(format!(
                "mesh: {} x {} grid ({} vertices), {} exhaustion level(s)",
                m.nr,
                m.ntheta,
                vertices,
                m.exhaustion.len()
            ));
            lines.push(format!(
                "mesh memory: ~{:.1} MB",
                (vertices * 8 * (8 + 2 * m.exhaustion.len())) as f64 / 1e6
            ));
        }
        Task::Explore => {
            let e = config.explore.as_ref().unwrap();
            if e.scan_max + 1.0 > config.model.r_max {
                return Err(TaskError::Config(format!(
                    "explore.scan_max = {} needs model.r_max >= {}",
                    e.scan_max,
                    e.scan_max + 1.0
                )));
            }
            if e.lambdas.is_empty() {
                return Err(TaskError::Config("explore.lambdas is empty".into()));
            }
            lines.push(format!(
                "explore: {} energie(s), scan to {}",
                e.lambdas.len(),
                e.scan_max
            ));
        }
    }
    lines.push("OK".to_string());
    Ok(lines)
}

fn write_file(dir: &Path, name: &str, body: &str) -> Result<PathBuf, TaskError> {
    std::fs::create_dir_all(dir).map_err(|e| TaskError::Io {
        path: dir.display().to_string(),
        source: e,
    })?;
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(|e| TaskError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    Ok(path)
}

/// Execute the configured task; returns the list of files written.
pub fn run(
    config: &ExperimentConfig,
    hash: u64,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, TaskError> {
    validate(config)?;
    let mut written = Vec::new();
    match config.task {
        Task::Model => {
            let geom = build_geometry(config, true)?;
            let mut csv = report::csv_header_block(hash);
            csv.push_str(&geom.to_csv());
            written.push(write_file(out_dir, "model.csv", &csv)?);
            if let Ok(bound) = brooks_upper_bound(&geom) {
                eprintln!("volume-growth bound on inf sigma_ess: {bound:.6}");
            }
        }
        Task::Spectrum => {
            let section = config.spectrum.clone().unwrap();
            let geom = build_geometry(config, false)?;
            let form = SchrodingerForm::from_geometry(&geom, section.s_min, section.s_max)
                .map_err(|e| TaskError::module("spectrum", e))?;
            let method = if section.method == "shooting" {
                EigenMethod::Shooting
            } else {
                EigenMethod::Matrix
            };
            let mut report: SpectralReport =
                dirichlet_eigenvalues(&form, section.eigen_count, method)
                    .map_err(|e| TaskError::module("spectrum", e))?;
            if let Some(radii) = &section.radii {
                let bottom = bottom_spectrum_estimate(&geom, radii)
                    .map_err(|e| TaskError::module("spectrum", e))?;
                report.bottom_estimates = bottom.bottom_estimates;
                report.extrapolation = bottom.extrapolation;
                let mut csv = report::csv_header_block(hash);
                csv.push_str(&report.bottom_csv());
                written.push(write_file(out_dir, "bottom.csv", &csv)?);
            }
            written.push(write_file(
                out_dir,
                "spectrum.json",
                &report::spectrum_json(hash, &report),
            )?);
        }
        Task::Weyl => {
            let section = config.weyl.clone().unwrap();
            let geom = build_geometry(config, false)?;
            let params = WeylParams {
                t0: section.t0,
                ..WeylParams::default()
            };
            let scan = decay_scan(
                &geom,
                section.lambda,
                &section.t_grid,
                &section.l_grid,
                section.s_gap,
                &params,
            )
            .map_err(|e| TaskError::module("weyl", e))?;
            let reports = scan.flat_reports();
            let mut csv = report::csv_header_block(hash);
            csv.push_str(&reports_to_csv(&reports));
            written.push(write_file(out_dir, "weyl.csv", &csv)?);
            written.push(write_file(
                out_dir,
                "weyl.json",
                &report::weyl_reports_json(hash, &reports),
            )?);
            for (eps, pick) in &scan.selections {
                match pick {
                    Some((t, s, q)) => eprintln!(
                        "eps = {eps:.0e}: window t = {t}, s = {s} reaches quotient {q:.3e}"
                    ),
                    None => eprintln!("eps = {eps:.0e}: not reached within the scan"),
                }
            }
        }
        Task::Mesh => {
            let section = config.mesh.clone().unwrap();
            let geom = build_geometry(config, true)?;
            let perturbation = if section.delta > 0.0 {
                let support = section.support.unwrap();
                Perturbation::new(
                    section.delta,
                    support[0],
                    support[1],
                    section.mode_m,
                    section.envelope,
                )
            } else {
                Perturbation::none()
            };
            let mesh = build_mesh(&geom, perturbation, section.nr, section.ntheta, section.r_max)
                .map_err(|e| TaskError::module("mesh", e))?;
            let kernel = solve_green(&mesh, &geom, &section.exhaustion)
                .map_err(|e| TaskError::module("mesh", e))?;
            // the perturbed mesh is compared against its curvature envelope
            let comparison = if section.delta > 0.0 {
                mesh.envelope_geometry(&geom)
                    .map_err(|e| TaskError::module("mesh", e))?
            } else {
                geom.clone()
            };
            let field = fake_distance(&mesh, &kernel, &comparison)
                .map_err(|e| TaskError::module("mesh", e))?;
            let identities = IdentityReport::evaluate(
                &mesh,
                &kernel,
                &field,
                &comparison,
                section.band[0],
                section.band[1],
            )
            .map_err(|e| TaskError::module("mesh", e))?;

            // seeded random-vector self-adjointness probe
            let mut rng = SplitMix64::new(config.seed);
            let nv = mesh.vertex_count();
            let unknowns = 1 + (mesh.nr - 1) * mesh.ntheta;
            let mut x = vec![0.0; nv];
            let mut y = vec![0.0; nv];
            for v in x.iter_mut().take(unknowns) {
                *v = rng.next_sym();
            }
            for v in y.iter_mut().take(unknowns) {
                *v = rng.next_sym();
            }
            let mut ax = vec![0.0; nv];
            let mut ay = vec![0.0; nv];
            mesh.apply_a(mesh.nr, &x, &mut ax);
            mesh.apply_a(mesh.nr, &y, &mut ay);
            let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
            let gap = (dot(&ax, &y) - dot(&x, &ay)).abs() / dot(&ax, &y).abs().max(1e-300);

            let mut csv = report::csv_header_block(hash);
            csv.push_str(&mesh.to_csv(&kernel, &field));
            written.push(write_file(out_dir, "mesh.csv", &csv)?);
            written.push(write_file(
                out_dir,
                "identities.json",
                &report::mesh_json(
                    hash,
                    &identities,
                    field.window,
                    kernel.ell_estimate,
                    gap,
                    field.max_b_minus_r_rel,
                ),
            )?);
        }
        Task::Explore => {
            let section = config.explore.clone().unwrap();
            let geom = build_geometry(config, false)?;
            let form = SchrodingerForm::from_geometry(&geom, section.s_min, section.scan_max)
                .map_err(|e| TaskError::module("explore", e))?;
            let opts = ClassifyOptions::for_form(&form);
            let records: Vec<_> = section
                .lambdas
                .iter()
                .map(|&lambda| classify_embedded(&form, lambda, &opts))
                .collect();
            written.push(write_file(
                out_dir,
                "classify.json",
                &report::classification_json(hash, &records),
            )?);
        }
    }
    Ok(written)
}
