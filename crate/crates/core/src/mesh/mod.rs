//! Discrete potential theory on a perturbed surface of revolution.
//!
//! The surface is the polar-grid metric dr^2 + f(r,theta)^2 dtheta^2 with
//! f = h(r) (1 + delta chi(r) cos(m theta)): the 2-D model warped by a
//! compactly supported, mean-zero angular perturbation. The submodules
//! build the divergence-form Laplacian stencil, solve the exhaustion
//! Dirichlet problems for the Green kernel, and derive the fake-distance
//! field with its identity checks.

mod fake;
mod fft;
mod green;

pub use fake::{
    fake_distance, lemma_integrals, level_identities, FakeDistanceField, IdentityReport,
    LemmaIntegrals, LevelIdentityReport,
};
pub use fft::FftPlan;
pub use green::{coarea_check, flux_check, solve_green, DiscreteGreenKernel, SolveStats};

use crate::cutoff::SmoothstepOrder;
use crate::error::MeshError;
use crate::model::ModelGeometry;

/// Compactly supported angular perturbation of the warping factor.
#[derive(Clone, Copy, Debug)]
pub struct Perturbation {
    pub delta: f64,
    pub r_lo: f64,
    pub r_hi: f64,
    pub mode_m: usize,
    /// Declared bound for the effective curvature magnitude
    /// max_theta(-K); exceeding it is a build error.
    pub envelope: f64,
}

impl Perturbation {
    pub fn new(delta: f64, r_lo: f64, r_hi: f64, mode_m: usize, envelope: f64) -> Self {
        Self {
            delta,
            r_lo,
            r_hi,
            mode_m,
            envelope,
        }
    }

    pub fn none() -> Self {
        Self {
            delta: 0.0,
            r_lo: 2.0,
            r_hi: 3.0,
            mode_m: 1,
            envelope: f64::INFINITY,
        }
    }

    /// C^2 bump: smoothstep up over the first half of the support and
    /// back down over the second half. Returns (chi, chi', chi'').
    fn chi(&self, r: f64) -> (f64, f64, f64) {
        let w = 0.5 * (self.r_hi - self.r_lo);
        if r <= self.r_lo || r >= self.r_hi || w <= 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let q = SmoothstepOrder::Quintic;
        if r < self.r_lo + w {
            let x = (r - self.r_lo) / w;
            (q.p(x), q.dp(x) / w, q.d2p(x) / (w * w))
        } else {
            let y = (self.r_hi - r) / w;
            (q.p(y), -q.dp(y) / w, q.d2p(y) / (w * w))
        }
    }
}

/// Polar-grid surface of revolution with its Laplacian stencil.
///
/// Vertex layout: index 0 is the pole, then ring-major storage
/// idx = 1 + (i-1) ntheta + j for ring i in 1..=nr and angle j. Ring nr is
/// the outer Dirichlet ring.
#[derive(Clone, Debug)]
pub struct DiscreteManifold {
    pub nr: usize,
    pub ntheta: usize,
    pub r_max: f64,
    pub dr: f64,
    pub dtheta: f64,
    pub perturbation: Perturbation,
    /// Warping factor at the vertices (0 at the pole).
    pub f: Vec<f64>,
    /// Gauss curvature at the vertices.
    pub k_gauss: Vec<f64>,
    /// Vertex control volumes f dr dtheta (disk approximation at the pole).
    pub vol: Vec<f64>,
    /// Radial face weights f(r_{i+1/2}, theta_j) dtheta / dr, i in 0..nr.
    wr: Vec<f64>,
    /// Angular face weights dr / (f(r_i, theta_{j+1/2}) dtheta), i in 1..nr.
    wt: Vec<f64>,
    /// Unperturbed warping h at the ring radii (for the preconditioner).
    pub h_node: Vec<f64>,
    pub(crate) h_half: Vec<f64>,
    /// Reported effective curvature profile max_theta max(-K, 1) per ring.
    pub h_eff: Vec<f64>,
    /// Non-increasing majorant of h_eff (reverse running maximum).
    pub h_env: Vec<f64>,
}

/// Assemble the mesh for an n = 2 model geometry.
pub fn build_mesh(
    geom: &ModelGeometry,
    perturbation: Perturbation,
    nr: usize,
    ntheta: usize,
    r_max: f64,
) -> Result<DiscreteManifold, MeshError> {
    if geom.dimension() != 2 {
        return Err(MeshError::BadInput(format!(
            "mesh construction needs a 2-dimensional model, got n = {}",
            geom.dimension()
        )));
    }
    if !geom.has_green() {
        return Err(MeshError::BadInput(
            "model geometry must carry its Green kernel".into(),
        ));
    }
    if geom.r_max() < r_max + 2.0 {
        return Err(MeshError::BadInput(format!(
            "model tabulated to {} but the mesh needs r_max + 2 = {}",
            geom.r_max(),
            r_max + 2.0
        )));
    }
    if nr < 16 || !(r_max > 0.0) {
        return Err(MeshError::BadInput("need nr >= 16 and r_max > 0".into()));
    }
    if !ntheta.is_power_of_two() || ntheta < 16 {
        return Err(MeshError::BadInput(format!(
            "ntheta must be a power of two >= 16, got {ntheta}"
        )));
    }
    let p = perturbation;
    if p.delta < 0.0 {
        return Err(MeshError::BadInput(
            "perturbation amplitude must be >= 0".into(),
        ));
    }
    if p.delta > 0.0 {
        if !(p.r_lo > 1.0 && p.r_hi > p.r_lo && p.r_hi < r_max - 2.0) {
            return Err(MeshError::BadInput(format!(
                "perturbation support [{}, {}] must sit inside (1, r_max - 2)",
                p.r_lo, p.r_hi
            )));
        }
        if ntheta < 16 * p.mode_m {
            return Err(MeshError::BadInput(format!(
                "ntheta = {ntheta} cannot resolve angular mode m = {} (need >= {})",
                p.mode_m,
                16 * p.mode_m
            )));
        }
    }

    let dr = r_max / nr as f64;
    let dtheta = 2.0 * std::f64::consts::PI / ntheta as f64;
    let nv = 1 + nr * ntheta;
    let h0 = geom.profile().evaluate(0.0);

    let h_of = |r: f64| -> f64 {
        if r <= 0.0 {
            0.0
        } else {
            geom.log_h_at(r).exp()
        }
    };
    let h_node: Vec<f64> = (0..=nr).map(|i| h_of(i as f64 * dr)).collect();
    let h_half: Vec<f64> = (0..nr).map(|i| h_of((i as f64 + 0.5) * dr)).collect();

    let mut f = vec![0.0; nv];
    let mut k_gauss = vec![-h0; nv];
    let mut vol = vec![0.0; nv];
    let mut wr = vec![0.0; nr * ntheta];
    let mut wt = vec![0.0; nr * ntheta];
    let mut h_eff = vec![1.0; nr + 1];
    let mut h_env = vec![1.0; nr + 1];

    let warp = |r: f64, cos_m: f64| -> f64 {
        let (chi, _, _) = p.chi(r);
        1.0 + p.delta * chi * cos_m
    };

    // -K = [H (1 + d chi c) + 2 u d chi' c + d chi'' c] / (1 + d chi c),
    // from K = -f_rr / f with h'' = H h
    let minus_k = |r: f64, cos_m: f64| -> f64 {
        let (chi, dchi, d2chi) = p.chi(r);
        let hh = geom.profile().evaluate(r);
        let u = geom.u_at(r);
        let denom = 1.0 + p.delta * chi * cos_m;
        (hh * denom + 2.0 * u * p.delta * dchi * cos_m + p.delta * d2chi * cos_m) / denom
    };

    vol[0] = std::f64::consts::PI * (0.5 * dr) * (0.5 * dr);
    for i in 1..=nr {
        let r = i as f64 * dr;
        let mut ring_max: f64 = 1.0;
        for j in 0..ntheta {
            let theta = j as f64 * dtheta;
            let cos_m = (p.mode_m as f64 * theta).cos();
            let idx = 1 + (i - 1) * ntheta + j;
            let fv = h_node[i] * warp(r, cos_m);
            if fv <= 0.0 {
                return Err(MeshError::BadInput(format!(
                    "warping factor vanishes at r = {r:.3}, theta index {j}"
                )));
            }
            f[idx] = fv;
            let mk = minus_k(r, cos_m);
            k_gauss[idx] = -mk;
            ring_max = ring_max.max(mk);
            vol[idx] = fv * dr * dtheta;
        }
        h_eff[i] = ring_max;
        if ring_max > p.envelope {
            return Err(MeshError::CurvatureViolation(ring_max, p.envelope));
        }
    }
    h_eff[0] = h0.max(1.0);
    // reverse running maximum makes the reported envelope non-increasing
    let mut running: f64 = 1.0;
    for i in (0..=nr).rev() {
        running = running.max(h_eff[i]);
        h_env[i] = running;
    }

    for i in 0..nr {
        let r_half = (i as f64 + 0.5) * dr;
        for j in 0..ntheta {
            let theta = j as f64 * dtheta;
            let cos_m = (p.mode_m as f64 * theta).cos();
            wr[i * ntheta + j] = h_half[i] * warp(r_half, cos_m) * dtheta / dr;
        }
    }
    for i in 1..nr {
        let r = i as f64 * dr;
        for j in 0..ntheta {
            let theta_half = (j as f64 + 0.5) * dtheta;
            let cos_m = (p.mode_m as f64 * theta_half).cos();
            let fv = h_node[i] * warp(r, cos_m);
            wt[i * ntheta + j] = dr / (fv * dtheta);
        }
    }

    Ok(DiscreteManifold {
        nr,
        ntheta,
        r_max,
        dr,
        dtheta,
        perturbation: p,
        f,
        k_gauss,
        vol,
        wr,
        wt,
        h_node,
        h_half,
        h_eff,
        h_env,
    })
}

impl DiscreteManifold {
    /// The measured curvature envelope as a model profile: the smallest
    /// non-increasing H with Ric >= -(n-1) H on the whole mesh. The
    /// gradient bound for the fake distance holds against this model, not
    /// against the unperturbed one.
    pub fn envelope_profile(&self) -> Result<crate::profile::CurvatureProfile, MeshError> {
        let mut values = self.h_env.clone();
        // the envelope settles to exactly 1 outside the perturbation
        if let Some(last) = values.last_mut() {
            if (*last - 1.0).abs() < 1e-9 {
                *last = 1.0;
            }
        }
        crate::profile::CurvatureProfile::tabulated_envelope(values, self.dr)
            .map_err(MeshError::Geometry)
    }

    /// Tabulate the envelope comparison model out to the base model's
    /// radius, Green kernel included. The envelope is piecewise linear, so
    /// the integrator loses its formal order at the sample kinks; the
    /// verification tolerance reflects that and still sits three orders
    /// below the mesh identity tolerances.
    pub fn envelope_geometry(&self, base: &ModelGeometry) -> Result<ModelGeometry, MeshError> {
        let profile = self.envelope_profile()?;
        // tabulate at least as finely as the mesh so the interpolation
        // floor refines together with the mesh
        let nodes_per_unit = ((1.0 / self.dr).ceil() as usize).max(20);
        let params = crate::model::WarpingParams {
            nodes_per_unit,
            substeps: 12,
            tol: 1e-5,
        };
        let mut geom = crate::model::solve_warping(&profile, 2, base.r_max(), params)
            .map_err(MeshError::Geometry)?;
        crate::model::green_kernel_model(&mut geom).map_err(MeshError::Geometry)?;
        Ok(geom)
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i >= 1 && i <= self.nr);
        1 + (i - 1) * self.ntheta + j
    }

    pub fn vertex_count(&self) -> usize {
        1 + self.nr * self.ntheta
    }

    pub fn r_ring(&self, i: usize) -> f64 {
        i as f64 * self.dr
    }

    pub fn theta(&self, j: usize) -> f64 {
        j as f64 * self.dtheta
    }

    /// Analytic warping factor at arbitrary (r, theta).
    pub fn f_at(&self, geom: &ModelGeometry, r: f64, theta: f64) -> f64 {
        let (chi, _, _) = self.perturbation.chi(r);
        let cos_m = (self.perturbation.mode_m as f64 * theta).cos();
        geom.log_h_at(r).exp() * (1.0 + self.perturbation.delta * chi * cos_m)
    }

    #[inline]
    pub(crate) fn wr_face(&self, i: usize, j: usize) -> f64 {
        self.wr[i * self.ntheta + j]
    }

    /// Apply the negative volume-weighted Laplacian (the SPD stencil
    /// matrix) on unknowns {pole} + rings 1..j_ring-1, reading x as a full
    /// vertex array whose other entries must be zero.
    pub fn apply_a(&self, j_ring: usize, x: &[f64], out: &mut [f64]) {
        let nt = self.ntheta;
        out[..self.vertex_count()].iter_mut().for_each(|v| *v = 0.0);
        let mut acc = 0.0;
        for j in 0..nt {
            acc += self.wr[j] * (x[0] - x[self.idx(1, j)]);
        }
        out[0] = acc;
        for i in 1..j_ring {
            for j in 0..nt {
                let c = self.idx(i, j);
                let inner = if i == 1 { x[0] } else { x[self.idx(i - 1, j)] };
                let outer = if i + 1 <= self.nr {
                    x[self.idx(i + 1, j)]
                } else {
                    0.0
                };
                let jp = (j + 1) % nt;
                let jm = (j + nt - 1) % nt;
                let mut sum = self.wr[(i - 1) * nt + j] * (x[c] - inner)
                    + self.wr[i * nt + j] * (x[c] - outer);
                sum += self.wt[i * nt + j] * (x[c] - x[self.idx(i, jp)]);
                sum += self.wt[i * nt + jm] * (x[c] - x[self.idx(i, jm)]);
                out[c] = sum;
            }
        }
    }

    /// Pointwise Laplacian of a full vertex field at interior vertex (i, j).
    pub fn laplacian_at(&self, u: &[f64], i: usize, j: usize) -> f64 {
        let nt = self.ntheta;
        let c = self.idx(i, j);
        let inner = if i == 1 { u[0] } else { u[self.idx(i - 1, j)] };
        let outer = u[self.idx(i + 1, j)];
        let jp = (j + 1) % nt;
        let jm = (j + nt - 1) % nt;
        let flux = self.wr[(i - 1) * nt + j] * (inner - u[c])
            + self.wr[i * nt + j] * (outer - u[c])
            + self.wt[i * nt + j] * (u[self.idx(i, jp)] - u[c])
            + self.wt[i * nt + jm] * (u[self.idx(i, jm)] - u[c]);
        flux / self.vol[c]
    }

    /// CSV export `r,theta,f,K,G,b,gradb`, row-major in r then theta.
    pub fn to_csv(&self, kernel: &DiscreteGreenKernel, field: &FakeDistanceField) -> String {
        use std::fmt::Write;
        let fmt = crate::numeric::fmt_sig12;
        let mut out = String::from("r,theta,f,K,G,b,gradb\n");
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt(0.0),
            fmt(0.0),
            fmt(0.0),
            fmt(self.k_gauss[0]),
            fmt(kernel.g_final[0]),
            fmt(field.b[0]),
            fmt(f64::NAN),
        )
        .unwrap();
        for i in 1..=self.nr {
            for j in 0..self.ntheta {
                let c = self.idx(i, j);
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    fmt(self.r_ring(i)),
                    fmt(self.theta(j)),
                    fmt(self.f[c]),
                    fmt(self.k_gauss[c]),
                    fmt(kernel.g_final[c]),
                    fmt(field.b[c]),
                    fmt(field.grad_vertex[c]),
                )
                .unwrap();
            }
        }
        out
    }
}


#[cfg(test)]
mod tests {
    use super::test_support::hyperbolic_geom;
    use super::*;
    use crate::numeric::SplitMix64;

    #[test]
    fn radial_mesh_curvature_is_minus_h() {
        let geom = hyperbolic_geom(12.0);
        let mesh = build_mesh(&geom, Perturbation::none(), 100, 16, 8.0).unwrap();
        for i in 1..=mesh.nr {
            for j in 0..mesh.ntheta {
                let k = mesh.k_gauss[mesh.idx(i, j)];
                assert!((k + 1.0).abs() < 1e-9, "K = {k} at ring {i}");
            }
        }
    }

    #[test]
    fn perturbed_mesh_reports_curvature_budget() {
        let geom = hyperbolic_geom(12.0);
        let pert = Perturbation::new(0.1, 3.0, 6.0, 3, 1.6);
        let mesh = build_mesh(&geom, pert, 200, 64, 10.0).unwrap();
        let max_eff = mesh.h_eff.iter().cloned().fold(0.0f64, f64::max);
        assert!(max_eff > 1.0 && max_eff <= 1.6, "H_eff max {max_eff}");
        for w in mesh.h_env.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        // outside the support the curvature is exactly -1
        for j in 0..mesh.ntheta {
            let k = mesh.k_gauss[mesh.idx(180, j)];
            assert!((k + 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn curvature_violation_is_detected() {
        let geom = hyperbolic_geom(12.0);
        let pert = Perturbation::new(0.5, 3.0, 4.0, 3, 1.5);
        match build_mesh(&geom, pert, 200, 64, 10.0) {
            Err(MeshError::CurvatureViolation(seen, bound)) => {
                assert!(seen > bound);
            }
            other => panic!("expected curvature violation, got {other:?}"),
        }
    }

    #[test]
    fn coarse_angular_grid_is_rejected() {
        let geom = hyperbolic_geom(12.0);
        let pert = Perturbation::new(0.1, 3.0, 6.0, 3, 1.6);
        assert!(matches!(
            build_mesh(&geom, pert, 100, 32, 10.0),
            Err(MeshError::BadInput(_))
        ));
    }

    #[test]
    fn stencil_annihilates_constants_and_is_self_adjoint() {
        let geom = hyperbolic_geom(12.0);
        let pert = Perturbation::new(0.1, 3.0, 6.0, 3, 1.6);
        let mesh = build_mesh(&geom, pert, 80, 64, 10.0).unwrap();
        let nv = mesh.vertex_count();
        let ones = vec![1.0; nv];
        for i in 1..mesh.nr {
            for j in 0..mesh.ntheta {
                assert!(mesh.laplacian_at(&ones, i, j).abs() < 1e-12);
            }
        }
        // <A x, y> = <x, A y> for random vectors supported on the unknowns
        let mut rng = SplitMix64::new(7);
        let j_ring = mesh.nr;
        let mut x = vec![0.0; nv];
        let mut y = vec![0.0; nv];
        for v in x.iter_mut().take(1 + (j_ring - 1) * mesh.ntheta) {
            *v = rng.next_sym();
        }
        for v in y.iter_mut().take(1 + (j_ring - 1) * mesh.ntheta) {
            *v = rng.next_sym();
        }
        let mut ax = vec![0.0; nv];
        let mut ay = vec![0.0; nv];
        mesh.apply_a(j_ring, &x, &mut ax);
        mesh.apply_a(j_ring, &y, &mut ay);
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
        let lhs = dot(&ax, &y);
        let rhs = dot(&x, &ay);
        assert!(
            (lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0),
            "{lhs} vs {rhs}"
        );
        // A agrees with -vol * laplacian on interior rows
        for i in 1..j_ring {
            for j in 0..mesh.ntheta {
                let c = mesh.idx(i, j);
                let expected = -mesh.vol[c] * mesh.laplacian_at(&x, i, j);
                assert!((ax[c] - expected).abs() < 1e-10 * expected.abs().max(1e-6));
            }
        }
    }
}
