//! Fake distance field b = G_H^{-1}(G) and its identity checks.

use super::green::DiscreteGreenKernel;
use super::DiscreteManifold;
use crate::error::MeshError;
use crate::model::{inverse_green, ModelGeometry};

/// Per-vertex fake distance with cell-centered gradient data.
#[derive(Clone, Debug)]
pub struct FakeDistanceField {
    /// b at the vertices; NaN where the kernel is outside the invertible
    /// range, 0 at the pole.
    pub b: Vec<f64>,
    /// |grad b| at the vertices by central differences (NaN near edges).
    pub grad_vertex: Vec<f64>,
    /// Stencil Laplacian of b at the vertices (NaN where unavailable).
    pub laplacian_b: Vec<f64>,
    /// |grad b|^2 at cell centers, indexed i * ntheta + j for the cell
    /// with corners on rings i, i+1 (NaN if any corner is masked).
    pub gradsq_cell: Vec<f64>,
    /// b at cell centers (corner mean).
    pub b_cell: Vec<f64>,
    /// Kernel value at cell centers (corner mean).
    pub g_cell: Vec<f64>,
    /// Cell volumes.
    pub vol_cell: Vec<f64>,
    /// Radial window on which the field is trusted (kernel convergence
    /// window away from the pole splice).
    pub window: (f64, f64),
    /// max |grad b| over window cells.
    pub max_grad: f64,
    /// Relative L2 residual of Delta b = (v'/v)(b) |grad b|^2 over the window.
    pub deltab_resid: f64,
    /// max |b - r| / r over window vertices.
    pub max_b_minus_r_rel: f64,
}

/// Invert the kernel vertex-wise and assemble the gradient fields.
pub fn fake_distance(
    mesh: &DiscreteManifold,
    kernel: &DiscreteGreenKernel,
    geom: &ModelGeometry,
) -> Result<FakeDistanceField, MeshError> {
    if kernel.window.1 <= kernel.window.0 {
        return Err(MeshError::BadInput(
            "kernel has an empty convergence window".into(),
        ));
    }
    let nv = mesh.vertex_count();
    let nt = mesh.ntheta;
    let mut b = vec![f64::NAN; nv];
    b[0] = 0.0;
    for i in 1..=mesh.nr {
        for j in 0..nt {
            let c = mesh.idx(i, j);
            let g = kernel.g_final[c];
            if g.is_finite() {
                if let Ok(radius) = inverse_green(geom, g) {
                    b[c] = radius;
                }
            }
        }
    }

    // cell-centered gradient squared
    let mut gradsq_cell = vec![f64::NAN; mesh.nr * nt];
    let mut b_cell = vec![f64::NAN; mesh.nr * nt];
    let mut g_cell = vec![f64::NAN; mesh.nr * nt];
    let mut vol_cell = vec![0.0; mesh.nr * nt];
    for i in 1..mesh.nr {
        for j in 0..nt {
            let jp = (j + 1) % nt;
            let c00 = b[mesh.idx(i, j)];
            let c01 = b[mesh.idx(i, jp)];
            let c10 = b[mesh.idx(i + 1, j)];
            let c11 = b[mesh.idx(i + 1, jp)];
            let f_c = mesh.f_cell(i, j);
            vol_cell[i * nt + j] = f_c * mesh.dr * mesh.dtheta;
            if !(c00.is_finite() && c01.is_finite() && c10.is_finite() && c11.is_finite()) {
                continue;
            }
            let dr_b = ((c10 + c11) - (c00 + c01)) / (2.0 * mesh.dr);
            let dt_b = ((c01 + c11) - (c00 + c10)) / (2.0 * mesh.dtheta * f_c);
            gradsq_cell[i * nt + j] = dr_b * dr_b + dt_b * dt_b;
            b_cell[i * nt + j] = 0.25 * (c00 + c01 + c10 + c11);
            let g00 = kernel.g_final[mesh.idx(i, j)];
            let g01 = kernel.g_final[mesh.idx(i, jp)];
            let g10 = kernel.g_final[mesh.idx(i + 1, j)];
            let g11 = kernel.g_final[mesh.idx(i + 1, jp)];
            g_cell[i * nt + j] = 0.25 * (g00 + g01 + g10 + g11);
        }
    }

    // vertex gradient and stencil Laplacian
    let mut grad_vertex = vec![f64::NAN; nv];
    let mut laplacian_b = vec![f64::NAN; nv];
    for i in 2..mesh.nr {
        for j in 0..nt {
            let c = mesh.idx(i, j);
            let jp = (j + 1) % nt;
            let jm = (j + nt - 1) % nt;
            let neigh = [
                b[mesh.idx(i - 1, j)],
                b[mesh.idx(i + 1, j)],
                b[mesh.idx(i, jp)],
                b[mesh.idx(i, jm)],
                b[c],
            ];
            if neigh.iter().any(|v| !v.is_finite()) {
                continue;
            }
            let dr_b = (neigh[1] - neigh[0]) / (2.0 * mesh.dr);
            let dt_b = (b[mesh.idx(i, jp)] - b[mesh.idx(i, jm)])
                / (2.0 * mesh.dtheta * mesh.f[c]);
            grad_vertex[c] = (dr_b * dr_b + dt_b * dt_b).sqrt();
            laplacian_b[c] = mesh.laplacian_at(&b, i, j);
        }
    }

    let window = (
        kernel.window.0.max(kernel.pole_radius + 2.0 * mesh.dr),
        kernel.window.1,
    );

    // diagnostics over the window
    let nf = geom.dimension() as f64;
    let mut max_grad = 0.0f64;
    for i in 1..mesh.nr {
        for j in 0..nt {
            let bc = b_cell[i * nt + j];
            if bc.is_finite() && bc >= window.0 && bc <= window.1 {
                max_grad = max_grad.max(gradsq_cell[i * nt + j].sqrt());
            }
        }
    }
    let mut resid_num = 0.0;
    let mut resid_den = 0.0;
    let mut max_rel_b = 0.0f64;
    for i in 2..mesh.nr {
        let r = mesh.r_ring(i);
        if r < window.0 || r > window.1 {
            continue;
        }
        for j in 0..nt {
            let c = mesh.idx(i, j);
            if !laplacian_b[c].is_finite() || !b[c].is_finite() {
                continue;
            }
            let vpv = (nf - 1.0) * geom.u_at(b[c]);
            let rhs = vpv * grad_vertex[c] * grad_vertex[c];
            let diff = laplacian_b[c] - rhs;
            resid_num += diff * diff * mesh.vol[c];
            resid_den += laplacian_b[c] * laplacian_b[c] * mesh.vol[c];
            max_rel_b = max_rel_b.max((b[c] - r).abs() / r);
        }
    }
    let deltab_resid = if resid_den > 0.0 {
        (resid_num / resid_den).sqrt()
    } else {
        f64::NAN
    };

    Ok(FakeDistanceField {
        b,
        grad_vertex,
        laplacian_b,
        gradsq_cell,
        b_cell,
        g_cell,
        vol_cell,
        window,
        max_grad,
        deltab_resid,
        max_b_minus_r_rel: max_rel_b,
    })
}

impl FakeDistanceField {
    /// max |grad b| over cells with b in [lo, hi].
    pub fn max_grad_in(&self, mesh: &DiscreteManifold, lo: f64, hi: f64) -> f64 {
        let nt = mesh.ntheta;
        let mut max_grad = 0.0f64;
        for i in 1..mesh.nr {
            for j in 0..nt {
                let bc = self.b_cell[i * nt + j];
                let gsq = self.gradsq_cell[i * nt + j];
                if bc.is_finite() && gsq.is_finite() && bc >= lo && bc <= hi {
                    max_grad = max_grad.max(gsq.sqrt());
                }
            }
        }
        max_grad
    }

    /// Fraction of cell (i, j) lying in the band {lo <= b <= hi}.
    pub fn cell_cover_in(
        &self,
        mesh: &DiscreteManifold,
        i: usize,
        j: usize,
        lo: f64,
        hi: f64,
    ) -> f64 {
        cell_cover(mesh, self, i, j, lo, hi)
    }

    /// Relative L2 residual of Delta b = (v'/v)(b) |grad b|^2 over
    /// vertices with b in [lo, hi].
    pub fn deltab_resid_in(
        &self,
        mesh: &DiscreteManifold,
        geom: &ModelGeometry,
        lo: f64,
        hi: f64,
    ) -> f64 {
        let nf = geom.dimension() as f64;
        let nt = mesh.ntheta;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 2..mesh.nr {
            for j in 0..nt {
                let c = mesh.idx(i, j);
                let bv = self.b[c];
                if !self.laplacian_b[c].is_finite() || !bv.is_finite() || bv < lo || bv > hi {
                    continue;
                }
                let vpv = (nf - 1.0) * geom.u_at(bv);
                let rhs = vpv * self.grad_vertex[c] * self.grad_vertex[c];
                let diff = self.laplacian_b[c] - rhs;
                num += diff * diff * mesh.vol[c];
                den += self.laplacian_b[c] * self.laplacian_b[c] * mesh.vol[c];
            }
        }
        if den > 0.0 {
            (num / den).sqrt()
        } else {
            f64::NAN
        }
    }
}

/// Band and thin-band level identities for b.
#[derive(Clone, Copy, Debug)]
pub struct LevelIdentityReport {
    /// int_{s <= b <= t} |grad b|^2 by cell sums.
    pub band_value: f64,
    /// V_H(t) - V_H(s).
    pub band_expected: f64,
    pub band_rel_err: f64,
    /// Thin-band average of |grad b|^2 / width at level t.
    pub sphere_value: f64,
    /// v_H(t).
    pub sphere_expected: f64,
    pub sphere_rel_err: f64,
}

pub fn level_identities(
    mesh: &DiscreteManifold,
    field: &FakeDistanceField,
    geom: &ModelGeometry,
    s: f64,
    t: f64,
) -> Result<LevelIdentityReport, MeshError> {
    if t < s {
        return Err(MeshError::BadInput("need s <= t".into()));
    }
    if t == s {
        return Ok(LevelIdentityReport {
            band_value: 0.0,
            band_expected: 0.0,
            band_rel_err: 0.0,
            sphere_value: f64::NAN,
            sphere_expected: f64::NAN,
            sphere_rel_err: f64::NAN,
        });
    }
    let (band_value, cells) = band_sum(mesh, field, s, t);
    if cells == 0 {
        return Err(MeshError::EmptyBand(s, t));
    }
    let band_expected = geom.big_v_at(t) - geom.big_v_at(s);
    let band_rel_err = (band_value - band_expected).abs() / band_expected.abs().max(1e-300);

    // thin band of total width 4 dr centered at level t
    let half = 2.0 * mesh.dr;
    let (thin, thin_cells) = band_sum(mesh, field, t - half, t + half);
    let sphere_value = if thin_cells > 0 {
        thin / (2.0 * half)
    } else {
        f64::NAN
    };
    let sphere_expected = geom.v_at(t);
    let sphere_rel_err = (sphere_value - sphere_expected).abs() / sphere_expected;
    Ok(LevelIdentityReport {
        band_value,
        band_expected,
        band_rel_err,
        sphere_value,
        sphere_expected,
        sphere_rel_err,
    })
}

/// Cell-binned integral of |grad b|^2 over {lo <= b <= hi}, with
/// fractional coverage for cells straddling the band edges.
fn band_sum(mesh: &DiscreteManifold, field: &FakeDistanceField, lo: f64, hi: f64) -> (f64, usize) {
    let nt = mesh.ntheta;
    let mut sum = 0.0;
    let mut cells = 0usize;
    for i in 1..mesh.nr {
        for j in 0..nt {
            let gsq = field.gradsq_cell[i * nt + j];
            if !gsq.is_finite() {
                continue;
            }
            let cover = cell_cover(mesh, field, i, j, lo, hi);
            if cover == 0.0 {
                continue;
            }
            sum += gsq * field.vol_cell[i * nt + j] * cover;
            cells += 1;
        }
    }
    (sum, cells)
}

fn cell_cover(
    mesh: &DiscreteManifold,
    field: &FakeDistanceField,
    i: usize,
    j: usize,
    lo: f64,
    hi: f64,
) -> f64 {
    let nt = mesh.ntheta;
    let jp = (j + 1) % nt;
    let corners = [
        field.b[mesh.idx(i, j)],
        field.b[mesh.idx(i, jp)],
        field.b[mesh.idx(i + 1, j)],
        field.b[mesh.idx(i + 1, jp)],
    ];
    if corners.iter().any(|v| !v.is_finite()) {
        return 0.0;
    }
    super::green::overlap_fraction(&corners, lo, hi)
}

/// Weighted band integrals of the gradient deficit.
#[derive(Clone, Copy, Debug)]
pub struct LemmaIntegrals {
    /// int G^2 e^{(n-1) b} (1 - |grad b|^2)_+ over the band.
    pub i_plus: f64,
    /// int e^{-(n-1) b} (1 - |grad b|^2)_+ over the band.
    pub i_minus: f64,
    /// max over band cells of G^2 e^{(n-1)b} / e^{-(n-1)b}.
    pub weight_ratio: f64,
    /// Clamped negative mass relative to the band volume.
    pub clamped_fraction: f64,
    pub band_volume: f64,
}

pub fn lemma_integrals(
    mesh: &DiscreteManifold,
    field: &FakeDistanceField,
    geom: &ModelGeometry,
    t: f64,
    s: f64,
) -> Result<LemmaIntegrals, MeshError> {
    if s <= t {
        return Err(MeshError::BadInput("need t < s".into()));
    }
    let nm1 = geom.dimension() as f64 - 1.0;
    let nt = mesh.ntheta;
    let mut i_plus = 0.0;
    let mut i_minus = 0.0;
    let mut weight_ratio = 0.0f64;
    let mut clamped = 0.0;
    let mut band_volume = 0.0;
    let mut cells = 0usize;
    for i in 1..mesh.nr {
        for j in 0..nt {
            let bc = field.b_cell[i * nt + j];
            let gsq = field.gradsq_cell[i * nt + j];
            let gc = field.g_cell[i * nt + j];
            if !bc.is_finite() || !gsq.is_finite() {
                continue;
            }
            let cover = cell_cover(mesh, field, i, j, t, s);
            if cover == 0.0 {
                continue;
            }
            let vol = field.vol_cell[i * nt + j] * cover;
            let deficit = 1.0 - gsq;
            let clamped_deficit = deficit.max(0.0);
            if deficit < 0.0 {
                clamped += -deficit * vol;
            }
            i_plus += gc * gc * (nm1 * bc).exp() * clamped_deficit * vol;
            i_minus += (-nm1 * bc).exp() * clamped_deficit * vol;
            weight_ratio = weight_ratio.max((gc * (nm1 * bc).exp()).powi(2));
            band_volume += vol;
            cells += 1;
        }
    }
    if cells == 0 {
        return Err(MeshError::EmptyBand(t, s));
    }
    Ok(LemmaIntegrals {
        i_plus,
        i_minus,
        weight_ratio,
        clamped_fraction: clamped / band_volume,
        band_volume,
    })
}

/// Summary record for one mesh run (the JSON identity report).
#[derive(Clone, Copy, Debug)]
pub struct IdentityReport {
    pub coarea_err: f64,
    pub flux_err: f64,
    pub deltab_resid: f64,
    pub max_gradb: f64,
    pub i_plus: f64,
    pub i_minus: f64,
    pub clamped_fraction: f64,
}

impl IdentityReport {
    /// Evaluate the standard battery over the band [b_lo, b_hi].
    pub fn evaluate(
        mesh: &DiscreteManifold,
        kernel: &DiscreteGreenKernel,
        field: &FakeDistanceField,
        geom: &ModelGeometry,
        b_lo: f64,
        b_hi: f64,
    ) -> Result<Self, MeshError> {
        let t1 = geom.green_at(b_hi).map_err(MeshError::Geometry)?;
        let t2 = geom.green_at(b_lo).map_err(MeshError::Geometry)?;
        let (value, expected) = super::green::coarea_check(mesh, kernel, t1, t2)?;
        let coarea_err = (value - expected).abs() / expected;
        let mut flux_err = 0.0f64;
        // fixed physical probe width so the thin-band statistics do not
        // degrade as the grid refines
        let half_width = (2.0 * mesh.dr).max(0.05);
        for frac in [0.25, 0.5, 0.75] {
            let level = b_lo + frac * (b_hi - b_lo);
            let g_hi = geom.green_at(level - half_width).map_err(MeshError::Geometry)?;
            let g_lo = geom.green_at(level + half_width).map_err(MeshError::Geometry)?;
            let t = 0.5 * (g_hi + g_lo);
            let eps = 0.5 * (g_hi - g_lo);
            let flux = super::green::flux_check(mesh, kernel, t, eps)?;
            flux_err = flux_err.max((flux - 1.0).abs());
        }
        let lemma = lemma_integrals(mesh, field, geom, b_lo, b_hi)?;
        Ok(Self {
            coarea_err,
            flux_err,
            deltab_resid: field.deltab_resid_in(mesh, geom, b_lo, b_hi),
            max_gradb: field.max_grad_in(mesh, b_lo, b_hi),
            i_plus: lemma.i_plus,
            i_minus: lemma.i_minus,
            clamped_fraction: lemma.clamped_fraction,
        })
    }

    pub fn to_json(&self) -> String {
        let fmt = crate::numeric::fmt_sig12;
        format!(
            "{{\n  \"coarea_err\": {},\n  \"flux_err\": {},\n  \"deltab_resid\": {},\n  \"max_gradb\": {},\n  \"I_plus\": {},\n  \"I_minus\": {},\n  \"clamped_fraction\": {}\n}}\n",
            fmt(self.coarea_err),
            fmt(self.flux_err),
            fmt(self.deltab_resid),
            fmt(self.max_gradb),
            fmt(self.i_plus),
            fmt(self.i_minus),
            fmt(self.clamped_fraction),
        )
    }
}
