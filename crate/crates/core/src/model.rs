//! One-dimensional model-manifold tabulation.
//!
//! A model is R^n with metric dr^2 + h(r)^2 g_S, where h solves the warping
//! equation h'' = H h, h(0) = 0, h'(0) = 1. Everything downstream (sphere
//! and ball volumes, Green kernel, comparison functions, the radial
//! Schrodinger potential) is derived from that solution.
//!
//! Tables are kept in overflow-safe variables: log h, u = h'/h, m = V/v and
//! the kernel-volume product g = G * v. The raw quantities h, v, V, G grow or
//! decay like e^{(n-1) r} and overflow f64 near r ~ 700/(n-1), while the
//! stored variables stay O(r); long tabulations (r in the thousands) are
//! routine for the spectral scans.

use crate::error::GeometryError;
use crate::numeric::{lsq_slope, simpson, unit_sphere_area};
use crate::ode::{rk5_span, rk5_step};
use crate::profile::{CurvatureProfile, ProfileFamily};

/// Integration parameters for [`solve_warping`].
#[derive(Clone, Copy, Debug)]
pub struct WarpingParams {
    /// Grid nodes per unit radius (uniform grid).
    pub nodes_per_unit: usize,
    /// Fixed RK5 substeps per grid interval.
    pub substeps: usize,
    /// Relative tolerance for the global step-halving verification.
    pub tol: f64,
}

impl Default for WarpingParams {
    fn default() -> Self {
        Self {
            nodes_per_unit: 20,
            substeps: 6,
            tol: 1e-8,
        }
    }
}

const ORIGIN_FLOOR: f64 = 1e-4;

/// Tabulated model geometry.
#[derive(Clone, Debug)]
pub struct ModelGeometry {
    profile: CurvatureProfile,
    n: usize,
    dr: f64,
    /// ln h at the grid nodes; node 0 carries -inf.
    log_h: Vec<f64>,
    /// w = h'/h - 1/r at the nodes (smooth through the origin); node 0 is 0.
    w: Vec<f64>,
    /// m = V / v; node 0 is 0 (limit r/n).
    m: Vec<f64>,
    /// g = G * v (kernel-volume product); empty until the kernel is built.
    g: Vec<f64>,
    /// Suffix quadrature int_{r_i}^{r_switch} ds/v on the raw zone, built
    /// from per-interval increments so small kernel values never arise as
    /// differences of large cumulative sums.
    w_green: Vec<f64>,
    /// Last node of the raw-variable zone; log-space integration beyond it.
    i_switch: usize,
    /// Analytic tail coefficient: kernel value at r_max under the tail model.
    tail_green: f64,
    sphere_area: f64,
    pinch: f64,
    /// Measured step-halving disagreement from the integration.
    integration_error: f64,
}

fn log_sinh(r: f64) -> f64 {
    r - std::f64::consts::LN_2 + (-(-2.0 * r).exp()).ln_1p()
}

/// Cubic Hermite value at x in [0, 1] with endpoint values y and slopes m
/// (slopes already scaled to the unit interval).
fn hermite(y0: f64, y1: f64, m0: f64, m1: f64, x: f64) -> f64 {
    let x2 = x * x;
    let x3 = x2 * x;
    (2.0 * x3 - 3.0 * x2 + 1.0) * y0
        + (x3 - 2.0 * x2 + x) * m0
        + (-2.0 * x3 + 3.0 * x2) * y1
        + (x3 - x2) * m1
}

fn coth(r: f64) -> f64 {
    1.0 / r.tanh()
}

/// sinh^{n-1}(x) * int_x^inf sinh^{1-n}(s) ds, stable for any x > 0.
/// Tends to 1/(n-1) as x -> infinity.
fn sinh_tail_product(n: usize, x: f64) -> f64 {
    match n {
        2 => {
            if x > 350.0 {
                1.0
            } else {
                2.0 * (-x).exp().atanh() * x.sinh()
            }
        }
        3 => 0.5 * (1.0 - (-2.0 * x).exp()),
        _ => {
            if x >= 20.0 {
                1.0 / (n as f64 - 1.0)
            } else {
                // substitute e^{-s}: int = int_0^{e^{-x}} 2^{n-1} t^{n-2} (1-t^2)^{1-n} dt
                let top = (-x).exp();
                let m = 4000;
                let dt = top / m as f64;
                let vals: Vec<f64> = (0..=m)
                    .map(|i| {
                        let t = i as f64 * dt;
                        2f64.powi(n as i32 - 1) * t.powi(n as i32 - 2)
                            * (1.0 - t * t).powi(1 - n as i32)
                    })
                    .collect();
                simpson(&vals, dt) * x.sinh().powi(n as i32 - 1)
            }
        }
    }
}

struct Tables {
    log_h: Vec<f64>,
    w: Vec<f64>,
    m: Vec<f64>,
    /// Suffix integrals int_{r_i}^{r_switch} ds/v(s) on the raw zone.
    w_green: Vec<f64>,
    i_switch: usize,
}

fn integrate_tables(
    profile: &CurvatureProfile,
    n: usize,
    node_count: usize,
    dr: f64,
    substeps: usize,
    sphere_area: f64,
) -> Tables {
    let nf = n as f64;
    let cn = sphere_area;
    let h0 = profile.evaluate(0.0);
    // raw zone cap keeps h^{n-1} and V representable
    let switch_r = (600.0 / (nf - 1.0)).min(250.0);
    let i_switch = (((switch_r / dr) as usize).max(1)).min(node_count);

    let mut log_h = vec![f64::NEG_INFINITY; node_count + 1];
    let mut w = vec![0.0; node_count + 1];
    let mut m = vec![0.0; node_count + 1];
    // per-interval increments of int ds/v, turned into suffix sums below
    let mut dw = vec![0.0; i_switch + 1];

    // phase 1: series start, raw state (h, h', V) to the first node
    let r0 = ORIGIN_FLOOR;
    let f_raw = |r: f64, y: &[f64; 3]| {
        let hh = profile.evaluate(r);
        [y[1], hh * y[0], cn * y[0].powi(n as i32 - 1)]
    };
    let y0 = [
        r0 + h0 * r0 * r0 * r0 / 6.0,
        1.0 + h0 * r0 * r0 / 2.0,
        cn * r0.powi(n as i32) / nf,
    ];
    let y1 = rk5_span(&f_raw, r0, y0, dr, substeps.max(4));
    log_h[1] = y1[0].ln();
    w[1] = y1[1] / y1[0] - 1.0 / dr;
    m[1] = y1[2] / (cn * y1[0].powi(n as i32 - 1));

    // phase 2: raw state (h, h', V, W) node by node up to the switch radius
    let f_raw4 = |r: f64, y: &[f64; 4]| {
        let hh = profile.evaluate(r);
        let v = cn * y[0].powi(n as i32 - 1);
        [y[1], hh * y[0], v, 1.0 / v]
    };
    let mut y = [y1[0], y1[1], y1[2], 0.0];
    for i in 1..i_switch {
        let mut t = i as f64 * dr;
        let hstep = dr / substeps as f64;
        for _ in 0..substeps {
            y = rk5_step(&f_raw4, t, &y, hstep);
            t += hstep;
        }
        log_h[i + 1] = y[0].ln();
        w[i + 1] = y[1] / y[0] - 1.0 / ((i + 1) as f64 * dr);
        m[i + 1] = y[2] / (cn * y[0].powi(n as i32 - 1));
        dw[i] = y[3];
        y[3] = 0.0;
    }
    let mut w_green = vec![0.0; i_switch + 1];
    for i in (1..i_switch).rev() {
        w_green[i] = w_green[i + 1] + dw[i];
    }

    // phase 3: log-space state beyond the switch radius. The first
    // component is log h - r, which stays O(1); carrying log h itself
    // would accumulate additive roundoff proportional to its magnitude.
    if i_switch < node_count {
        let f_log = |r: f64, z: &[f64; 3]| {
            let hh = profile.evaluate(r);
            [z[1] - 1.0, hh - z[1] * z[1], 1.0 - (nf - 1.0) * z[1] * z[2]]
        };
        let mut z = [
            log_h[i_switch] - i_switch as f64 * dr,
            w[i_switch] + 1.0 / (i_switch as f64 * dr),
            m[i_switch],
        ];
        for i in i_switch..node_count {
            let mut t = i as f64 * dr;
            let hstep = dr / substeps as f64;
            for _ in 0..substeps {
                z = rk5_step(&f_log, t, &z, hstep);
                t += hstep;
            }
            log_h[i + 1] = z[0] + (i + 1) as f64 * dr;
            w[i + 1] = z[1] - 1.0 / ((i + 1) as f64 * dr);
            m[i + 1] = z[2];
        }
    }

    Tables {
        log_h,
        w,
        m,
        w_green,
        i_switch,
    }
}

/// Solve the warping IVP and tabulate h, h'/h, sphere/ball volumes.
///
/// The returned geometry has no Green kernel yet; see [`green_kernel_model`].
pub fn solve_warping(
    profile: &CurvatureProfile,
    n: usize,
    r_max: f64,
    params: WarpingParams,
) -> Result<ModelGeometry, GeometryError> {
    if n < 2 || n > 16 {
        return Err(GeometryError::InvalidProfile(format!(
            "dimension n = {n} outside the supported range 2..=16"
        )));
    }
    if !(r_max > 0.0) || !(params.tol > 0.0) {
        return Err(GeometryError::InvalidProfile(
            "need r_max > 0 and tol > 0".into(),
        ));
    }
    profile.validate(r_max)?;

    let node_count = ((params.nodes_per_unit as f64 * r_max).ceil() as usize).max(4);
    let dr = r_max / node_count as f64;
    let sphere_area = unit_sphere_area(n);

    let base = integrate_tables(profile, n, node_count, dr, params.substeps, sphere_area);
    let refined = integrate_tables(profile, n, node_count, dr, params.substeps * 2, sphere_area);
    let mut disagreement: f64 = 0.0;
    for i in 1..=node_count {
        disagreement = disagreement
            .max((base.log_h[i] - refined.log_h[i]).abs())
            .max((base.w[i] - refined.w[i]).abs());
    }
    if disagreement > params.tol {
        return Err(GeometryError::NonconvergentIntegration {
            disagreement,
            tol: params.tol,
        });
    }

    let mut geom = ModelGeometry {
        profile: profile.clone(),
        n,
        dr,
        log_h: refined.log_h,
        w: refined.w,
        m: refined.m,
        g: Vec::new(),
        w_green: refined.w_green,
        i_switch: refined.i_switch,
        tail_green: f64::NAN,
        sphere_area,
        pinch: f64::NAN,
        integration_error: disagreement,
    };
    geom.pinch = (geom.log_h[node_count] - log_sinh(r_max)).exp();

    // Sturm lower bound h >= sinh whenever H >= 1
    if geom.profile.is_pinching() {
        for i in 1..=node_count {
            let r = i as f64 * dr;
            if geom.log_h[i] < log_sinh(r) - 1e-9 {
                return Err(GeometryError::InvalidProfile(format!(
                    "Sturm comparison h >= sinh violated at r = {r:.4}"
                )));
            }
        }
    }
    Ok(geom)
}

/// True iff the kernel integral converges under the declared tail model.
pub fn check_nonparabolic(geom: &ModelGeometry) -> bool {
    match geom.profile.family() {
        ProfileFamily::Constant { k } if *k == 0.0 => geom.n >= 3,
        _ => true,
    }
}

/// Fill the Green kernel table: truncated quadrature plus the analytic
/// tail scaled by the pinching constant.
pub fn green_kernel_model(geom: &mut ModelGeometry) -> Result<(), GeometryError> {
    if !check_nonparabolic(geom) {
        return Err(GeometryError::ParabolicModel);
    }
    let node_count = geom.node_count();
    let n = geom.n;
    let nf = n as f64;
    let dr = geom.dr;
    let r_max = node_count as f64 * dr;
    let i_switch = geom.i_switch;

    // tail model value of G*v at r_max
    let g_seed = match geom.profile.family() {
        ProfileFamily::Constant { k } if *k == 0.0 => r_max / (nf - 2.0),
        ProfileFamily::Constant { k } => {
            let sk = k.sqrt();
            sinh_tail_product(n, sk * r_max) / sk
        }
        _ => sinh_tail_product(n, r_max),
    };

    let mut g = vec![0.0; node_count + 1];
    g[node_count] = g_seed;

    // backward sweep on g' = (n-1) u g - 1 over the log zone; backward
    // integration damps the exponentially growing homogeneous mode
    if i_switch < node_count {
        let substeps = 8;
        let f_back = |r: f64, y: &[f64; 1]| [(nf - 1.0) * geom.u_at(r) * y[0] - 1.0];
        let mut y = [g_seed];
        for i in (i_switch..node_count).rev() {
            let mut t = (i + 1) as f64 * dr;
            let hstep = -dr / substeps as f64;
            for _ in 0..substeps {
                y = rk5_step(&f_back, t, &y, hstep);
                t += hstep;
            }
            g[i] = y[0];
        }
    }

    // raw zone via the suffix quadrature table
    let green_switch = g[i_switch] / geom.v_node(i_switch);
    for i in 1..i_switch {
        let green_i = green_switch + geom.w_green[i];
        g[i] = green_i * geom.v_node(i);
    }

    geom.tail_green = (g_seed.ln() - geom.log_v_node(node_count)).exp();
    geom.g = g;
    Ok(())
}

/// Kernel inversion: radius b with G_H(b) = gval.
///
/// Values below the tabulated range are inverted through the analytic tail
/// (the returned radius then exceeds r_max, flagging the tail regime).
pub fn inverse_green(geom: &ModelGeometry, gval: f64) -> Result<f64, GeometryError> {
    let k = geom.node_count();
    assert!(!geom.g.is_empty(), "green kernel not tabulated");
    if !(gval > 0.0) || gval > geom.green_node(1) {
        return Err(GeometryError::OutOfRange(gval));
    }
    let log_target = gval.ln();
    if gval >= geom.green_node(k) {
        // binary search on the strictly decreasing log-kernel
        let (mut lo, mut hi) = (1usize, k);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if geom.log_green_node(mid) >= log_target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // Hermite interpolation of r as a function of log G, with the
        // exact nodal slopes dr/dlog G = -G v. The C^1 interpolant keeps
        // second differences of derived fields free of grid kinks.
        let la = geom.log_green_node(lo);
        let lb = geom.log_green_node(hi);
        if !(lb < la) {
            return Ok(geom.r_node(lo));
        }
        let span = lb - la;
        let x = (log_target - la) / span;
        let r0 = geom.r_node(lo);
        let r1 = geom.r_node(hi);
        let m0 = -geom.gv_node(lo) * span;
        let m1 = -geom.gv_node(hi) * span;
        let x2 = x * x;
        let x3 = x2 * x;
        let r = (2.0 * x3 - 3.0 * x2 + 1.0) * r0
            + (x3 - 2.0 * x2 + x) * m0
            + (-2.0 * x3 + 3.0 * x2) * r1
            + (x3 - x2) * m1;
        return Ok(r);
    }
    // tail regime: bisection on the analytic tail model
    let tail_green_at = |r: f64| -> f64 {
        match geom.profile.family() {
            ProfileFamily::Constant { k } if *k == 0.0 => {
                r.powi(2 - geom.n as i32) / ((geom.n as f64 - 2.0) * geom.sphere_area)
            }
            ProfileFamily::Constant { k } => {
                let sk = k.sqrt();
                sinh_tail_product(geom.n, sk * r) / sk
                    / (geom.sphere_area * (sk * r).sinh().powi(geom.n as i32 - 1) / sk.powi(geom.n as i32 - 1))
            }
            _ => {
                let nf = geom.n as f64;
                sinh_tail_product(geom.n, r)
                    * (-(nf - 1.0) * (log_sinh(r) + geom.pinch.ln())).exp()
                    / geom.sphere_area
            }
        }
    };
    let r_max = k as f64 * geom.dr;
    let mut lo = r_max;
    let mut hi = r_max;
    while tail_green_at(hi) > gval {
        hi *= 2.0;
        if hi > 1e7 {
            return Err(GeometryError::OutOfRange(gval));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tail_green_at(mid) > gval {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-10 * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Comparison data against the curvature -1 model.
#[derive(Clone, Debug)]
pub struct Comparison {
    pub zeta: Vec<f64>,
    pub zeta_integral: f64,
    pub zeta_tail: f64,
    pub pinch_constant: f64,
    /// (min, max) of v_H / sinh^{n-1} on [1, r_max].
    pub sandwich: (f64, f64),
}

/// Compute zeta = h'/h - coth, the pinching constant and the volume
/// sandwich constants. Refuses profiles whose deviation is not integrable.
pub fn comparison_functions(geom: &ModelGeometry) -> Result<Comparison, GeometryError> {
    if !geom.profile.is_pinching() {
        return Err(GeometryError::InvalidProfile(format!(
            "comparison functions need an integrable-deviation profile, got class {:?}",
            geom.profile.asymptotic_class()
        )));
    }
    let k = geom.node_count();
    let mut zeta = vec![0.0; k + 1];
    let mut min_zeta = f64::INFINITY;
    for i in 1..=k {
        let z = geom.zeta_node(i);
        zeta[i] = z;
        min_zeta = min_zeta.min(z);
    }
    if min_zeta < -1e-8 {
        return Err(GeometryError::NotPinching(min_zeta));
    }
    let integral = simpson(&zeta, geom.dr);
    let tail_start = 3 * k / 4;
    let zeta_tail = simpson(&zeta[tail_start..], geom.dr);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in geom.node_index_at_or_above(1.0)..=k {
        let ratio = geom.sphere_area
            * ((geom.n as f64 - 1.0) * (geom.log_h[i] - log_sinh(i as f64 * geom.dr))).exp();
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    Ok(Comparison {
        zeta,
        zeta_integral: integral,
        zeta_tail,
        pinch_constant: geom.pinch,
        sandwich: (lo, hi),
    })
}

/// Radial and tangential Ricci eigenvalues at radius r.
pub fn ricci_eigenvalues(geom: &ModelGeometry, r: f64) -> Result<(f64, f64), GeometryError> {
    if !(r > 0.0) {
        return Err(GeometryError::SingularOrigin(r, 0.0));
    }
    let nf = geom.n as f64;
    let hcurv = geom.profile.evaluate(r);
    let radial = -(nf - 1.0) * hcurv;
    // (1 - h'^2)/h^2 = 1/h^2 - u^2, with the series limit -H(0) at the origin
    let sec_tan = if r < geom.dr {
        -geom.profile.evaluate(0.0)
    } else {
        (-2.0 * geom.log_h_at(r)).exp() - geom.u_at(r).powi(2)
    };
    let tangential = radial + (nf - 2.0) * (hcurv + sec_tan);
    Ok((radial, tangential))
}

/// Upper bound (1/4) (liminf log |B_r| / r)^2 for the bottom of the
/// essential spectrum, with plateau detection on the volume slope.
pub fn brooks_upper_bound(geom: &ModelGeometry) -> Result<f64, GeometryError> {
    let k = geom.node_count();
    let quarter = k / 4;
    let start = k - quarter;
    let mid = k - quarter / 2;
    let window = |a: usize, b: usize| -> f64 {
        let xs: Vec<f64> = (a..=b).map(|i| i as f64 * geom.dr).collect();
        let ys: Vec<f64> = (a..=b).map(|i| geom.log_big_v_node(i)).collect();
        lsq_slope(&xs, &ys)
    };
    let s1 = window(start, mid);
    let s2 = window(mid, k);
    let bound1 = 0.25 * s1 * s1;
    let bound2 = 0.25 * s2 * s2;
    if (bound1 - bound2).abs() > 1e-3 {
        return Err(GeometryError::NoPlateau((bound1 - bound2).abs()));
    }
    let s = window(start, k);
    Ok(0.25 * s * s)
}

impl ModelGeometry {
    pub fn profile(&self) -> &CurvatureProfile {
        &self.profile
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn grid_step(&self) -> f64 {
        self.dr
    }

    pub fn node_count(&self) -> usize {
        self.log_h.len() - 1
    }

    pub fn r_max(&self) -> f64 {
        self.node_count() as f64 * self.dr
    }

    pub fn r_node(&self, i: usize) -> f64 {
        i as f64 * self.dr
    }

    pub fn sphere_area(&self) -> f64 {
        self.sphere_area
    }

    pub fn pinch_constant(&self) -> f64 {
        self.pinch
    }

    pub fn integration_error(&self) -> f64 {
        self.integration_error
    }

    pub fn has_green(&self) -> bool {
        !self.g.is_empty()
    }

    /// (n-1)^2/4, the spectral threshold of the limit model.
    pub fn threshold(&self) -> f64 {
        let nf = self.n as f64;
        (nf - 1.0) * (nf - 1.0) / 4.0
    }

    pub fn origin_floor(&self) -> f64 {
        ORIGIN_FLOOR
    }

    pub fn h_node(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.log_h[i].exp()
        }
    }

    pub fn hp_node(&self, i: usize) -> f64 {
        if i == 0 {
            1.0
        } else {
            self.u_node(i) * self.h_node(i)
        }
    }

    pub fn u_node(&self, i: usize) -> f64 {
        if i == 0 {
            f64::INFINITY
        } else {
            self.w[i] + 1.0 / self.r_node(i)
        }
    }

    pub fn v_node(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.sphere_area * ((self.n as f64 - 1.0) * self.log_h[i]).exp()
        }
    }

    pub fn log_v_node(&self, i: usize) -> f64 {
        self.sphere_area.ln() + (self.n as f64 - 1.0) * self.log_h[i]
    }

    pub fn big_v_node(&self, i: usize) -> f64 {
        self.m[i] * self.v_node(i)
    }

    pub fn log_big_v_node(&self, i: usize) -> f64 {
        self.m[i].ln() + self.log_v_node(i)
    }

    pub fn green_node(&self, i: usize) -> f64 {
        if i == 0 {
            f64::INFINITY
        } else {
            self.g[i] / self.v_node(i)
        }
    }

    pub fn log_green_node(&self, i: usize) -> f64 {
        self.g[i].ln() - self.log_v_node(i)
    }

    /// Kernel-volume product G * v at a node.
    pub fn gv_node(&self, i: usize) -> f64 {
        self.g[i]
    }

    pub fn zeta_node(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            let r = self.r_node(i);
            // coth(r) - 1/r is smooth through the origin
            self.w[i] - (coth(r) - 1.0 / r)
        }
    }

    fn node_index_at_or_above(&self, r: f64) -> usize {
        ((r / self.dr).ceil() as usize).min(self.node_count())
    }

    /// h'/h at arbitrary radius; series below the first node, Hermite
    /// interpolation (with the exact slope u' = H - u^2) above it.
    pub fn u_at(&self, s: f64) -> f64 {
        let h0 = self.profile.evaluate(0.0);
        if s < self.dr {
            return 1.0 / s + h0 * s / 3.0;
        }
        let k = self.node_count();
        let idx = ((s / self.dr).floor() as usize).clamp(1, k - 1);
        let x = s / self.dr - idx as f64;
        let up = |i: usize| -> f64 {
            let u = self.u_node(i);
            (self.profile.evaluate(self.r_node(i)) - u * u) * self.dr
        };
        hermite(self.u_node(idx), self.u_node(idx + 1), up(idx), up(idx + 1), x)
    }

    /// ln h at arbitrary radius; Hermite interpolation with the exact
    /// slope (ln h)' = u.
    pub fn log_h_at(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return f64::NEG_INFINITY;
        }
        if s < self.dr {
            let h0 = self.profile.evaluate(0.0);
            return (s + h0 * s * s * s / 6.0).ln();
        }
        let k = self.node_count();
        let idx = ((s / self.dr).floor() as usize).clamp(1, k - 1);
        let x = s / self.dr - idx as f64;
        hermite(
            self.log_h[idx],
            self.log_h[idx + 1],
            self.u_node(idx) * self.dr,
            self.u_node(idx + 1) * self.dr,
            x,
        )
    }

    pub fn log_v_at(&self, s: f64) -> f64 {
        self.sphere_area.ln() + (self.n as f64 - 1.0) * self.log_h_at(s)
    }

    pub fn v_at(&self, s: f64) -> f64 {
        self.log_v_at(s).exp()
    }

    /// Ball volume V(s) via the tabulated ratio m = V / v, interpolated
    /// with the exact slope m' = 1 - (n-1) u m.
    pub fn big_v_at(&self, s: f64) -> f64 {
        let k = self.node_count();
        if s <= 0.0 {
            return 0.0;
        }
        let idx = ((s / self.dr).floor() as usize).min(k - 1);
        let x = s / self.dr - idx as f64;
        let nf = self.n as f64;
        let mp = |i: usize| -> f64 {
            if i == 0 {
                self.dr / nf
            } else {
                (1.0 - (nf - 1.0) * self.u_node(i) * self.m[i]) * self.dr
            }
        };
        let m = hermite(self.m[idx], self.m[idx + 1], mp(idx), mp(idx + 1), x);
        m * self.v_at(s)
    }

    /// zeta = h'/h - coth at arbitrary radius.
    pub fn zeta_at(&self, s: f64) -> f64 {
        self.u_at(s) - coth(s)
    }

    /// Schrodinger potential a(s), evaluated algebraically from u and H.
    pub fn a_at(&self, s: f64) -> Result<f64, GeometryError> {
        if s < ORIGIN_FLOOR {
            return Err(GeometryError::SingularOrigin(s, ORIGIN_FLOOR));
        }
        let nf = self.n as f64;
        let u = self.u_at(s);
        let hh = self.profile.evaluate(s);
        Ok((nf - 1.0) * (nf - 1.0) / 4.0 + (nf - 1.0) * (nf - 1.0) * u * u / 4.0
            - (nf - 1.0) * hh / 2.0
            - (nf - 1.0) * (nf - 2.0) * u * u / 2.0)
    }

    /// Potential samples at the grid nodes from the first node on.
    pub fn a_samples(&self) -> Vec<f64> {
        (1..=self.node_count())
            .map(|i| self.a_at(self.r_node(i)).expect("node above floor"))
            .collect()
    }

    /// Green kernel at arbitrary radius: Hermite interpolation of log G
    /// with the exact slope (log G)' = -1/(G v), the same data the kernel
    /// inversion uses.
    pub fn green_at(&self, s: f64) -> Result<f64, GeometryError> {
        assert!(self.has_green(), "green kernel not tabulated");
        let k = self.node_count();
        if s < self.dr || s > self.r_max() {
            return Err(GeometryError::OutOfRange(s));
        }
        let idx = ((s / self.dr).floor() as usize).clamp(1, k - 1);
        let x = s / self.dr - idx as f64;
        let slope = |i: usize| -> f64 { -self.dr / self.g[i] };
        let lg = hermite(
            self.log_green_node(idx),
            self.log_green_node(idx + 1),
            slope(idx),
            slope(idx + 1),
            x,
        );
        Ok(lg.exp())
    }

    /// Largest measured G * v on [1, r_max] together with the node where it
    /// is attained; the product must stay bounded for the weighted
    /// integral estimates downstream.
    pub fn kernel_volume_sup(&self) -> (f64, f64) {
        assert!(self.has_green());
        let start = self.node_index_at_or_above(1.0);
        let mut best = (0.0, 0.0);
        for i in start..=self.node_count() {
            if self.g[i] > best.0 {
                best = (self.g[i], self.r_node(i));
            }
        }
        best
    }

    /// CSV export with header `r,h,hp,v,V,G,a,zeta`. Rows stop where the raw
    /// quantities overflow f64 (beyond r ~ 700/(n-1)).
    pub fn to_csv(&self) -> String {
        use std::fmt::Write;
        let mut out = String::from("r,h,hp,v,V,G,a,zeta\n");
        let has_green = self.has_green();
        for i in 1..=self.node_count() {
            let h = self.h_node(i);
            let v = self.v_node(i);
            let big_v = self.big_v_node(i);
            if !h.is_finite() || !v.is_finite() || !big_v.is_finite() {
                break;
            }
            let g = if has_green { self.green_node(i) } else { f64::NAN };
            let a = self.a_at(self.r_node(i)).unwrap_or(f64::NAN);
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                crate::numeric::fmt_sig12(self.r_node(i)),
                crate::numeric::fmt_sig12(h),
                crate::numeric::fmt_sig12(self.hp_node(i)),
                crate::numeric::fmt_sig12(v),
                crate::numeric::fmt_sig12(big_v),
                crate::numeric::fmt_sig12(g),
                crate::numeric::fmt_sig12(a),
                crate::numeric::fmt_sig12(self.zeta_node(i)),
            )
            .unwrap();
        }
        out
    }
}
