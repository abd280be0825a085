//! Exhaustion Green kernels on the mesh.
//!
//! For each exhaustion radius the Dirichlet problem with a unit point
//! source at the pole is solved by preconditioned conjugate gradients.
//! The preconditioner inverts the angularly averaged operator exactly:
//! an FFT in theta decouples it into one tridiagonal system per angular
//! mode, which keeps the iteration count flat in the perturbation size.

use super::fft::FftPlan;
use super::DiscreteManifold;
use crate::error::MeshError;
use crate::model::ModelGeometry;

#[derive(Clone, Copy, Debug)]
pub struct SolveStats {
    pub radius: f64,
    pub iterations: usize,
    pub rel_residual: f64,
}

#[derive(Clone, Debug)]
pub struct GreenLevel {
    pub radius: f64,
    pub ring: usize,
    /// Raw Dirichlet kernel, zero outside the sub-disk.
    pub g: Vec<f64>,
}

/// Exhaustion solution plus the completed kernel estimate.
#[derive(Clone, Debug)]
pub struct DiscreteGreenKernel {
    pub levels: Vec<GreenLevel>,
    /// Final kernel estimate: last level plus the model tail value at the
    /// truncation (the mesh agrees with the model outside the perturbation
    /// support, so the angular average of the true kernel is the model
    /// kernel there). NaN outside the last sub-disk, +inf at the pole.
    pub g_final: Vec<f64>,
    pub lift: f64,
    /// Radius below which the kernel is spliced with the log asymptotic.
    pub pole_radius: f64,
    /// Radial window (inner, outer) on which the exhaustion has converged.
    pub window: (f64, f64),
    /// Sup of the completed kernel on the outer monitoring ring.
    pub ell_estimate: f64,
    pub stats: Vec<SolveStats>,
}

// ---------------------------------------------------------------------------
// preconditioner

struct ModeFactors {
    /// Cholesky-free symmetric Thomas data: pivots d[i] and eliminated
    /// off-diagonals e[i] (e[i] couples unknown i and i+1).
    d: Vec<f64>,
    e: Vec<f64>,
}

impl ModeFactors {
    fn factor(diag: Vec<f64>, off: Vec<f64>) -> Self {
        let n = diag.len();
        let mut d = diag;
        for i in 1..n {
            let l = off[i - 1] / d[i - 1];
            d[i] -= l * off[i - 1];
            debug_assert!(d[i] > 0.0);
        }
        Self { d, e: off }
    }

    fn solve(&self, rhs: &mut [f64]) {
        let n = self.d.len();
        for i in 1..n {
            let l = self.e[i - 1] / self.d[i - 1];
            rhs[i] -= l * rhs[i - 1];
        }
        rhs[n - 1] /= self.d[n - 1];
        for i in (0..n - 1).rev() {
            rhs[i] = (rhs[i] - self.e[i] * rhs[i + 1]) / self.d[i];
        }
    }
}

/// Exact inverse of the theta-averaged stencil on the sub-disk with
/// Dirichlet ring `j_ring`.
struct RadialPreconditioner {
    j_ring: usize,
    ntheta: usize,
    plan: FftPlan,
    /// factors[m] solves rings 1..j_ring-1 for angular mode m >= 1.
    factors: Vec<ModeFactors>,
    /// Mode 0 includes the pole as the first unknown (scaled by sqrt N).
    mode0: ModeFactors,
}

impl RadialPreconditioner {
    fn build(mesh: &DiscreteManifold, j_ring: usize) -> Self {
        let nt = mesh.ntheta;
        let nd = j_ring - 1;
        // theta means of the face weights
        let wr_mean: Vec<f64> = (0..j_ring)
            .map(|i| (0..nt).map(|j| mesh.wr_face(i, j)).sum::<f64>() / nt as f64)
            .collect();
        let wt_mean: Vec<f64> = (0..j_ring)
            .map(|i| {
                if i == 0 {
                    0.0
                } else {
                    (0..nt).map(|j| mesh.wt[i * nt + j]).sum::<f64>() / nt as f64
                }
            })
            .collect();

        let mut factors = Vec::with_capacity(nt);
        for m in 0..nt {
            let sigma = 2.0 - 2.0 * (2.0 * std::f64::consts::PI * m as f64 / nt as f64).cos();
            let diag: Vec<f64> = (1..=nd)
                .map(|i| {
                    let outer = if i < j_ring { wr_mean[i] } else { 0.0 };
                    wr_mean[i - 1] + outer + sigma * wt_mean[i]
                })
                .collect();
            let off: Vec<f64> = (1..nd).map(|i| -wr_mean[i]).collect();
            factors.push(ModeFactors::factor(diag, off));
        }
        // mode 0 with the pole unknown scaled by sqrt(N) to stay symmetric
        let sqrt_n = (nt as f64).sqrt();
        let mut diag0 = Vec::with_capacity(nd + 1);
        let mut off0 = Vec::with_capacity(nd);
        diag0.push(nt as f64 * wr_mean[0]);
        off0.push(-sqrt_n * wr_mean[0]);
        for i in 1..=nd {
            let outer = if i < j_ring { wr_mean[i] } else { 0.0 };
            diag0.push(wr_mean[i - 1] + outer);
            if i < nd {
                off0.push(-wr_mean[i]);
            }
        }
        let mode0 = ModeFactors::factor(diag0, off0);

        Self {
            j_ring,
            ntheta: nt,
            plan: FftPlan::new(nt),
            factors,
            mode0,
        }
    }

    /// z = M^{-1} r; both are full vertex arrays.
    fn apply(&self, mesh: &DiscreteManifold, r: &[f64], z: &mut [f64]) {
        let nt = self.ntheta;
        let nd = self.j_ring - 1;
        let mut spec_re = vec![0.0; nd * nt];
        let mut spec_im = vec![0.0; nd * nt];
        let mut row_re = vec![0.0; nt];
        let mut row_im = vec![0.0; nt];
        for i in 1..=nd {
            for j in 0..nt {
                row_re[j] = r[mesh.idx(i, j)];
                row_im[j] = 0.0;
            }
            self.plan.forward(&mut row_re, &mut row_im);
            for m in 0..nt {
                spec_re[(i - 1) * nt + m] = row_re[m];
                spec_im[(i - 1) * nt + m] = row_im[m];
            }
        }
        // mode 0 (real): unknowns [pole * sqrt N, rings]
        let sqrt_n = (nt as f64).sqrt();
        let mut rhs0 = Vec::with_capacity(nd + 1);
        rhs0.push(sqrt_n * r[0]);
        for i in 1..=nd {
            rhs0.push(spec_re[(i - 1) * nt]);
        }
        self.mode0.solve(&mut rhs0);
        z[0] = rhs0[0] / sqrt_n;
        for i in 1..=nd {
            spec_re[(i - 1) * nt] = rhs0[i];
            spec_im[(i - 1) * nt] = 0.0;
        }
        // higher modes: real tridiagonal, real and imaginary parts separately
        let mut buf_re = vec![0.0; nd];
        let mut buf_im = vec![0.0; nd];
        for m in 1..nt {
            for i in 0..nd {
                buf_re[i] = spec_re[i * nt + m];
                buf_im[i] = spec_im[i * nt + m];
            }
            self.factors[m].solve(&mut buf_re);
            self.factors[m].solve(&mut buf_im);
            for i in 0..nd {
                spec_re[i * nt + m] = buf_re[i];
                spec_im[i * nt + m] = buf_im[i];
            }
        }
        for i in 1..=nd {
            for m in 0..nt {
                row_re[m] = spec_re[(i - 1) * nt + m];
                row_im[m] = spec_im[(i - 1) * nt + m];
            }
            self.plan.inverse(&mut row_re, &mut row_im);
            for j in 0..nt {
                z[mesh.idx(i, j)] = row_re[j];
            }
        }
        for i in self.j_ring..=mesh.nr {
            for j in 0..nt {
                z[mesh.idx(i, j)] = 0.0;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// conjugate gradients

fn pcg(
    mesh: &DiscreteManifold,
    j_ring: usize,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveStats), MeshError> {
    let nv = mesh.vertex_count();
    let pc = RadialPreconditioner::build(mesh, j_ring);
    let dot = |a: &[f64], c: &[f64]| -> f64 { a.iter().zip(c).map(|(x, y)| x * y).sum() };
    let norm_b = dot(b, b).sqrt();
    let mut x = vec![0.0; nv];
    let mut r = b.to_vec();
    let mut z = vec![0.0; nv];
    pc.apply(mesh, &r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; nv];
    let mut rel = 1.0;
    for iter in 0..max_iter {
        mesh.apply_a(j_ring, &p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for k in 0..nv {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        rel = dot(&r, &r).sqrt() / norm_b;
        if rel < tol {
            return Ok((
                x,
                SolveStats {
                    radius: j_ring as f64 * mesh.dr,
                    iterations: iter + 1,
                    rel_residual: rel,
                },
            ));
        }
        pc.apply(mesh, &r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..nv {
            p[k] = z[k] + beta * p[k];
        }
    }
    Err(MeshError::SolverFailure(rel, max_iter))
}

// ---------------------------------------------------------------------------
// exhaustion driver

/// Solve the exhaustion Dirichlet problems and assemble the completed
/// kernel estimate.
pub fn solve_green(
    mesh: &DiscreteManifold,
    geom: &ModelGeometry,
    exhaustion_radii: &[f64],
) -> Result<DiscreteGreenKernel, MeshError> {
    if exhaustion_radii.is_empty() {
        return Err(MeshError::BadInput("need at least one exhaustion radius".into()));
    }
    if exhaustion_radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(MeshError::BadInput("exhaustion radii must increase".into()));
    }
    let nv = mesh.vertex_count();
    let mut levels: Vec<GreenLevel> = Vec::new();
    let mut stats = Vec::new();
    for &radius in exhaustion_radii {
        let ring = (radius / mesh.dr).round() as usize;
        if ring < 8 || ring > mesh.nr {
            return Err(MeshError::BadInput(format!(
                "exhaustion radius {radius} maps to ring {ring} outside [8, {}]",
                mesh.nr
            )));
        }
        let mut b = vec![0.0; nv];
        b[0] = 1.0; // unit total source at the pole cell
        let (g, st) = pcg(mesh, ring, &b, 1e-10, 800)?;
        stats.push(st);
        if let Some(prev) = levels.last() {
            let mut min_inc: f64 = 0.0;
            for k in 0..nv {
                min_inc = min_inc.min(g[k] - prev.g[k]);
            }
            if min_inc < -1e-10 * g[0].abs().max(1.0) {
                return Err(MeshError::NonmonotoneExhaustion(min_inc));
            }
        }
        levels.push(GreenLevel { radius, ring, g });
    }

    let last = levels.last().unwrap();
    let lift = geom
        .green_at(last.radius)
        .map_err(MeshError::Geometry)?;
    let mut g_final = vec![f64::NAN; nv];
    g_final[0] = f64::INFINITY;
    for i in 1..=last.ring {
        for j in 0..mesh.ntheta {
            let c = mesh.idx(i, j);
            g_final[c] = if i == last.ring { lift } else { last.g[c] + lift };
        }
    }

    // splice the under-resolved core with the 2-D log asymptotic
    let splice_ring = 4usize;
    let pole_radius = splice_ring as f64 * mesh.dr;
    let g_bar: f64 = (0..mesh.ntheta)
        .map(|j| g_final[mesh.idx(splice_ring, j)])
        .sum::<f64>()
        / mesh.ntheta as f64;
    for i in 1..splice_ring {
        let r = mesh.r_ring(i);
        let v = g_bar - (r / pole_radius).ln() / (2.0 * std::f64::consts::PI);
        for j in 0..mesh.ntheta {
            g_final[mesh.idx(i, j)] = v;
        }
    }

    // convergence window: compare the completed estimates of the last two
    // levels ring by ring
    let tol_window = 1e-3;
    let mut window_outer = (last.ring - 1) as f64 * mesh.dr;
    if levels.len() >= 2 {
        let prev = &levels[levels.len() - 2];
        let prev_lift = geom.green_at(prev.radius).map_err(MeshError::Geometry)?;
        let mut converged_to = splice_ring;
        'rings: for i in (splice_ring + 1)..prev.ring {
            let mut scale = 0.0f64;
            let mut diff = 0.0f64;
            for j in 0..mesh.ntheta {
                let c = mesh.idx(i, j);
                let a = last.g[c] + lift;
                let b2 = prev.g[c] + prev_lift;
                scale = scale.max(a.abs());
                diff = diff.max((a - b2).abs());
            }
            if diff > tol_window * scale {
                break 'rings;
            }
            converged_to = i;
        }
        window_outer = converged_to as f64 * mesh.dr;
    }
    let window = ((splice_ring + 2) as f64 * mesh.dr, window_outer);

    let monitor_ring = ((last.radius - 1.0) / mesh.dr).round() as usize;
    let ell_estimate = (0..mesh.ntheta)
        .map(|j| g_final[mesh.idx(monitor_ring.min(last.ring), j)])
        .fold(f64::NEG_INFINITY, f64::max);

    Ok(DiscreteGreenKernel {
        levels,
        g_final,
        lift,
        pole_radius,
        window,
        ell_estimate,
        stats,
    })
}

// ---------------------------------------------------------------------------
// kernel identities

/// Cell-binned coarea sum: int_{t1 <= G <= t2} |grad G|^2 against t2 - t1.
/// Returns (value, expected).
pub fn coarea_check(
    mesh: &DiscreteManifold,
    kernel: &DiscreteGreenKernel,
    t1: f64,
    t2: f64,
) -> Result<(f64, f64), MeshError> {
    let (sum, cells) = band_gradsq_sum(mesh, kernel, t1, t2);
    if cells == 0 {
        return Err(MeshError::EmptyBand(t1, t2));
    }
    Ok((sum, t2 - t1))
}

/// Thin-band flux estimate at kernel level t: the band average of
/// |grad G|^2 over {|G - t| <= eps} divided by 2 eps approximates the unit
/// flux through the level set.
pub fn flux_check(
    mesh: &DiscreteManifold,
    kernel: &DiscreteGreenKernel,
    t: f64,
    eps: f64,
) -> Result<f64, MeshError> {
    let (sum, cells) = band_gradsq_sum(mesh, kernel, t - eps, t + eps);
    if cells == 0 {
        return Err(MeshError::EmptyBand(t - eps, t + eps));
    }
    Ok(sum / (2.0 * eps))
}

/// Cell sum of |grad G|^2 over {lo <= G <= hi}. Cells straddling the band
/// edges contribute the fraction of their corner range inside the band,
/// which removes the alignment bias of sharp center binning.
fn band_gradsq_sum(
    mesh: &DiscreteManifold,
    kernel: &DiscreteGreenKernel,
    lo: f64,
    hi: f64,
) -> (f64, usize) {
    let g = &kernel.g_final;
    let nt = mesh.ntheta;
    let mut sum = 0.0;
    let mut cells = 0usize;
    for i in 1..mesh.nr {
        for j in 0..nt {
            let jp = (j + 1) % nt;
            let c00 = g[mesh.idx(i, j)];
            let c01 = g[mesh.idx(i, jp)];
            let c10 = g[mesh.idx(i + 1, j)];
            let c11 = g[mesh.idx(i + 1, jp)];
            if !(c00.is_finite() && c01.is_finite() && c10.is_finite() && c11.is_finite()) {
                continue;
            }
            let cover = overlap_fraction(&[c00, c01, c10, c11], lo, hi);
            if cover == 0.0 {
                continue;
            }
            let dr_g = ((c10 + c11) - (c00 + c01)) / (2.0 * mesh.dr);
            let f_c = mesh.f_cell(i, j);
            let dt_g = ((c01 + c11) - (c00 + c10)) / (2.0 * mesh.dtheta * f_c);
            let vol = f_c * mesh.dr * mesh.dtheta;
            sum += (dr_g * dr_g + dt_g * dt_g) * vol * cover;
            cells += 1;
        }
    }
    (sum, cells)
}

/// Fraction of the corner-value range [min, max] lying inside [lo, hi].
pub(crate) fn overlap_fraction(corners: &[f64; 4], lo: f64, hi: f64) -> f64 {
    let mut cmin = corners[0];
    let mut cmax = corners[0];
    for &c in &corners[1..] {
        cmin = cmin.min(c);
        cmax = cmax.max(c);
    }
    if cmax <= cmin {
        let center = 0.5 * (cmin + cmax);
        return if center >= lo && center <= hi { 1.0 } else { 0.0 };
    }
    let overlap = (cmax.min(hi) - cmin.max(lo)).max(0.0);
    overlap / (cmax - cmin)
}

impl DiscreteManifold {
    /// Warping factor at the center of the cell with corners on rings
    /// i, i+1 and angles j, j+1.
    pub(crate) fn f_cell(&self, i: usize, j: usize) -> f64 {
        let r_half = (i as f64 + 0.5) * self.dr;
        let theta_half = (j as f64 + 0.5) * self.dtheta;
        let (chi, _, _) = self.perturbation.chi(r_half);
        let cos_m = (self.perturbation.mode_m as f64 * theta_half).cos();
        self.h_half[i] * (1.0 + self.perturbation.delta * chi * cos_m)
    }
}

#[cfg(test)]
mod tests {
    use super::super::test_support::hyperbolic_geom;
    use super::super::{build_mesh, Perturbation};
    use super::*;

    #[test]
    fn radial_green_matches_truncated_model_kernel() {
        let geom = hyperbolic_geom(12.0);
        let mesh = build_mesh(&geom, Perturbation::none(), 200, 64, 8.0).unwrap();
        let kernel = solve_green(&mesh, &geom, &[6.0, 7.0, 8.0]).unwrap();
        // raw level vs one-dimensional truncated kernel G(r) - G(R)
        let last = kernel.levels.last().unwrap();
        for i in (8..195).step_by(17) {
            let r = mesh.r_ring(i);
            let expected = geom.green_at(r).unwrap() - geom.green_at(8.0).unwrap();
            for j in [0usize, 13, 40] {
                let got = last.g[mesh.idx(i, j)];
                assert!(
                    (got - expected).abs() <= 0.02 * expected.abs().max(1e-12) + 1e-9,
                    "r={r} j={j}: {got:.6e} vs {expected:.6e}"
                );
            }
        }
        // completed kernel matches the model kernel itself
        for i in (8..195).step_by(29) {
            let r = mesh.r_ring(i);
            let expected = geom.green_at(r).unwrap();
            let got = kernel.g_final[mesh.idx(i, 5)];
            assert!(
                (got - expected).abs() <= 0.02 * expected,
                "lifted at r={r}: {got:.6e} vs {expected:.6e}"
            );
        }
    }

    #[test]
    fn exhaustion_is_monotone_and_obeys_maximum_principle() {
        let geom = hyperbolic_geom(12.0);
        let pert = Perturbation::new(0.1, 3.0, 5.5, 3, 1.6);
        let mesh = build_mesh(&geom, pert, 160, 64, 8.0).unwrap();
        let kernel = solve_green(&mesh, &geom, &[6.0, 7.0, 8.0]).unwrap();
        for pair in kernel.levels.windows(2) {
            for k in 0..mesh.vertex_count() {
                assert!(pair[1].g[k] >= pair[0].g[k] - 1e-10);
            }
        }
        for level in &kernel.levels {
            let peak = level.g[0];
            assert!(level.g.iter().all(|&v| v <= peak + 1e-12));
            assert!(level.g.iter().all(|&v| v >= -1e-12));
        }
        // the certified window stays well inside the second-to-last level
        assert!(kernel.window.1 > 4.5, "window {:?}", kernel.window);
        assert!(kernel.window.1 <= kernel.levels[1].radius);
        assert!(kernel.ell_estimate.is_finite());
    }

    #[test]
    fn coarea_and_flux_identities_hold_on_perturbed_mesh() {
        let geom = hyperbolic_geom(12.0);
        let pert = Perturbation::new(0.1, 3.0, 6.0, 3, 1.6);
        let mesh = build_mesh(&geom, pert, 300, 128, 10.0).unwrap();
        let kernel = solve_green(&mesh, &geom, &[8.0, 9.0, 10.0]).unwrap();
        let t1 = geom.green_at(7.0).unwrap();
        let t2 = geom.green_at(3.0).unwrap();
        let (value, expected) = coarea_check(&mesh, &kernel, t1, t2).unwrap();
        let rel = (value - expected).abs() / expected;
        assert!(rel < 0.02, "coarea rel err {rel:.4}");
        for b_level in [3.5f64, 5.0, 6.5] {
            let t = geom.green_at(b_level).unwrap();
            let eps = geom.green_at(b_level - 2.0 * mesh.dr).unwrap() - t;
            let flux = flux_check(&mesh, &kernel, t, eps).unwrap();
            assert!((flux - 1.0).abs() < 0.02, "flux at b={b_level}: {flux:.4}");
        }
    }

    #[test]
    fn empty_band_is_reported() {
        let geom = hyperbolic_geom(12.0);
        let mesh = build_mesh(&geom, Perturbation::none(), 100, 32, 8.0).unwrap();
        let kernel = solve_green(&mesh, &geom, &[7.0, 8.0]).unwrap();
        assert!(matches!(
            coarea_check(&mesh, &kernel, 100.0, 200.0),
            Err(MeshError::EmptyBand(_, _))
        ));
    }
}
