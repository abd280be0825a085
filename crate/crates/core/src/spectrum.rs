//! Radial spectral reduction.
//!
//! On a model manifold the radial part of the Laplacian, conjugated by
//! sqrt(v_H), becomes the half-line Schrodinger operator -phi'' + Q phi
//! with Q(s) = (n-1)^2/4 - a(s). This module computes its Dirichlet
//! spectra on truncated intervals by two independent routes (oscillation
//! counting along shot solutions, and a symmetric tridiagonal matrix with
//! Sturm-sequence bisection), estimates the bottom of the spectrum on
//! growing truncations, and classifies candidate embedded eigenvalues from
//! the decay of the oscillation envelope.

use crate::error::{GeometryError, SpectrumError};
use crate::model::ModelGeometry;
use crate::numeric::{
    lerp_uniform, lsq_affine, lsq_slope, tridiag_count_below, tridiag_eigenvalue, tridiag_solve,
};
use crate::ode::rk5_step;

/// Potential form -phi'' + Q phi on [s_min, s_max], Dirichlet at both ends.
#[derive(Clone, Debug)]
pub struct SchrodingerForm {
    q: Vec<f64>,
    s_min: f64,
    s_max: f64,
    ds: f64,
    threshold: f64,
}

impl SchrodingerForm {
    /// Sample Q = (n-1)^2/4 - a(s) from a tabulated geometry.
    pub fn from_geometry(
        geom: &ModelGeometry,
        s_min: f64,
        s_max: f64,
    ) -> Result<Self, GeometryError> {
        if !(s_min >= geom.origin_floor()) || !(s_max > s_min) {
            return Err(GeometryError::SingularOrigin(s_min, geom.origin_floor()));
        }
        if s_max > geom.r_max() + 1e-12 {
            return Err(GeometryError::OutOfRange(s_max));
        }
        let threshold = geom.threshold();
        let ds = (geom.grid_step() / 4.0).min(0.0125);
        let count = ((s_max - s_min) / ds).ceil() as usize + 1;
        let q = (0..count)
            .map(|i| {
                let s = (s_min + i as f64 * ds).min(s_max);
                Ok(threshold - geom.a_at(s)?)
            })
            .collect::<Result<Vec<_>, GeometryError>>()?;
        Ok(Self {
            q,
            s_min,
            s_max,
            ds,
            threshold,
        })
    }

    /// Explicit samples; used for surrogate potentials in tests and for
    /// the a = 0 test mode.
    pub fn from_samples(q: Vec<f64>, s_min: f64, s_max: f64, threshold: f64) -> Self {
        assert!(q.len() >= 2);
        let ds = (s_max - s_min) / (q.len() - 1) as f64;
        Self {
            q,
            s_min,
            s_max,
            ds,
            threshold,
        }
    }

    pub fn constant(value: f64, s_min: f64, s_max: f64, threshold: f64) -> Self {
        Self::from_samples(vec![value; 2], s_min, s_max, threshold)
    }

    pub fn q_at(&self, s: f64) -> f64 {
        lerp_uniform(&self.q, self.s_min, self.ds, s)
    }

    pub fn q_min(&self) -> f64 {
        self.q.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.s_min, self.s_max)
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Shifted copy (Q + c); Dirichlet eigenvalues shift by exactly c.
    pub fn shifted(&self, c: f64) -> Self {
        let mut out = self.clone();
        for q in &mut out.q {
            *q += c;
        }
        out
    }

    /// Restriction to [s_min, radius].
    fn truncated(&self, radius: f64) -> Self {
        let keep = ((radius - self.s_min) / self.ds).ceil() as usize + 1;
        Self {
            q: self.q.iter().cloned().take(keep.min(self.q.len())).collect(),
            s_min: self.s_min,
            s_max: radius,
            ds: self.ds,
            threshold: self.threshold,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EigenMethod {
    Shooting,
    Matrix,
}

#[derive(Clone, Copy, Debug)]
pub struct EigenvalueEstimate {
    pub value: f64,
    /// Estimated discretization error (Richardson difference).
    pub error: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct BottomEstimate {
    pub radius: f64,
    pub lambda1: f64,
    pub error: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct Extrapolation {
    /// Fitted limit of lambda_1(R) under the L + c/R^2 model.
    pub limit: f64,
    pub coefficient: f64,
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    BelowThreshold,
    CandidateEigenvalue,
    NotEmbedded,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::BelowThreshold => "BELOW_THRESHOLD",
            Verdict::CandidateEigenvalue => "CANDIDATE_EIGENVALUE",
            Verdict::NotEmbedded => "NOT_EMBEDDED",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ClassificationRecord {
    pub lambda: f64,
    pub verdict: Verdict,
    /// max/end ratio of the oscillation envelope over the scan.
    pub amplitude_ratio: f64,
    /// Dense-matrix route: localized eigenvalue found at both truncations.
    pub oracle_candidate: bool,
}

/// Aggregated results; operations fill the sections they produce.
#[derive(Clone, Debug, Default)]
pub struct SpectralReport {
    pub eigenvalues: Vec<EigenvalueEstimate>,
    pub bottom_estimates: Vec<BottomEstimate>,
    pub extrapolation: Option<Extrapolation>,
    pub threshold: f64,
    pub classifications: Vec<ClassificationRecord>,
}

impl SpectralReport {
    /// CSV export with header `lambda,R,lambda1,err`: one row per
    /// truncation radius, `lambda` holding the fitted limit.
    pub fn bottom_csv(&self) -> String {
        use std::fmt::Write;
        let mut out = String::from("lambda,R,lambda1,err\n");
        let limit = self.extrapolation.map(|e| e.limit).unwrap_or(f64::NAN);
        for b in &self.bottom_estimates {
            writeln!(
                out,
                "{},{},{},{}",
                crate::numeric::fmt_sig12(limit),
                crate::numeric::fmt_sig12(b.radius),
                crate::numeric::fmt_sig12(b.lambda1),
                crate::numeric::fmt_sig12(b.error),
            )
            .unwrap();
        }
        out
    }
}

// ---------------------------------------------------------------------------
// matrix route

fn assemble(form: &SchrodingerForm, cells: usize) -> (Vec<f64>, Vec<f64>) {
    let (s_min, s_max) = form.domain();
    let d = (s_max - s_min) / cells as f64;
    let n = cells - 1;
    let diag: Vec<f64> = (1..=n)
        .map(|i| 2.0 / (d * d) + form.q_at(s_min + i as f64 * d))
        .collect();
    let off = vec![-1.0 / (d * d); n - 1];
    (diag, off)
}

/// First `count` Dirichlet eigenvalues from the central-difference matrix,
/// Richardson-extrapolated over a doubled grid.
pub fn matrix_eigenvalues(
    form: &SchrodingerForm,
    count: usize,
    n_cells: usize,
) -> Vec<EigenvalueEstimate> {
    let solve = |cells: usize| -> Vec<f64> {
        let (diag, off) = assemble(form, cells);
        (0..count)
            .map(|k| tridiag_eigenvalue(&diag, &off, k))
            .collect()
    };
    let coarse = solve(n_cells);
    let fine = solve(2 * n_cells);
    coarse
        .iter()
        .zip(&fine)
        .map(|(&c, &f)| EigenvalueEstimate {
            value: (4.0 * f - c) / 3.0,
            error: ((f - c) / 3.0).abs().max(f64::EPSILON * f.abs()),
        })
        .collect()
}

/// Interior eigenvector for the eigenvalue nearest `lambda` on the given
/// grid, by inverse iteration.
pub fn matrix_eigenvector(form: &SchrodingerForm, lambda: f64, cells: usize) -> Vec<f64> {
    let (diag, off) = assemble(form, cells);
    let shifted: Vec<f64> = diag.iter().map(|&d| d - lambda - 1e-9).collect();
    let mut x = vec![1.0; shifted.len()];
    for _ in 0..3 {
        x = tridiag_solve(&shifted, &off, &x);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut x {
            *v /= norm;
        }
    }
    x
}

// ---------------------------------------------------------------------------
// shooting route

/// Number of sign changes of the solution of phi'' = (Q - lambda) phi on
/// (s_min, s_max], shooting from phi(s_min) = 0, phi'(s_min) = 1. By
/// oscillation theory this counts the Dirichlet eigenvalues below lambda.
pub fn oscillation_count(form: &SchrodingerForm, lambda: f64) -> usize {
    let (s_min, s_max) = form.domain();
    let freq = (lambda - form.q_min()).max(1.0).sqrt();
    let step = (0.005f64).min(0.2 / freq);
    let steps = ((s_max - s_min) / step).ceil() as usize;
    let h = (s_max - s_min) / steps as f64;
    let f = |s: f64, y: &[f64; 2]| [y[1], (form.q_at(s) - lambda) * y[0]];
    let mut y = [0.0, 1.0];
    let mut s = s_min;
    let mut count = 0;
    let mut prev_sign = 0.0f64;
    for _ in 0..steps {
        y = rk5_step(&f, s, &y, h);
        s += h;
        if y[0] != 0.0 {
            if prev_sign != 0.0 && y[0].signum() != prev_sign {
                count += 1;
            }
            prev_sign = y[0].signum();
        }
        let mag = y[0].abs().max(y[1].abs());
        if mag > 1e120 {
            y[0] /= mag;
            y[1] /= mag;
        }
    }
    count
}

/// k-th (1-based) Dirichlet eigenvalue by bisection on the oscillation
/// count; the count is monotone in lambda so the bracket is exact.
fn shooting_eigenvalue(form: &SchrodingerForm, k: usize) -> f64 {
    let (s_min, s_max) = form.domain();
    let len = s_max - s_min;
    let lo0 = form.q_min();
    let mut hi = form.threshold() + 4.0 * (k as f64 * std::f64::consts::PI / len).powi(2) + 4.0;
    while oscillation_count(form, hi) < k {
        hi = lo0 + 2.0 * (hi - lo0);
    }
    let mut lo = lo0;
    // bisection capped at 60 iterations
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if oscillation_count(form, mid) >= k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// First `k` Dirichlet eigenvalues.
///
/// The matrix route always runs; with `Shooting` the count-bisection values
/// are returned after cross-checking against the matrix values, and a
/// disagreement beyond the combined tolerance is an error.
pub fn dirichlet_eigenvalues(
    form: &SchrodingerForm,
    k: usize,
    method: EigenMethod,
) -> Result<SpectralReport, SpectrumError> {
    if k == 0 {
        return Err(SpectrumError::BadInput("need k >= 1".into()));
    }
    let (s_min, s_max) = form.domain();
    let cells = (((s_max - s_min) / 0.005).ceil() as usize).max(64);
    let matrix = matrix_eigenvalues(form, k, cells);
    let report = |eigs: Vec<EigenvalueEstimate>| SpectralReport {
        eigenvalues: eigs,
        threshold: form.threshold(),
        ..Default::default()
    };
    match method {
        EigenMethod::Matrix => Ok(report(matrix)),
        EigenMethod::Shooting => {
            let mut eigs = Vec::with_capacity(k);
            for i in 1..=k {
                let value = shooting_eigenvalue(form, i);
                let est = &matrix[i - 1];
                let tol = 10.0 * est.error + 1e-6 * est.value.abs().max(1.0);
                let disagreement = (value - est.value).abs();
                if disagreement > tol {
                    return Err(SpectrumError::ResolutionTooCoarse { disagreement, tol });
                }
                eigs.push(EigenvalueEstimate {
                    value,
                    error: disagreement.max(est.error),
                });
            }
            Ok(report(eigs))
        }
    }
}

/// Bottom of the Dirichlet spectrum on [0.01, R] for each radius in
/// `r_list`, plus the fitted limit under the lambda_1(R) ~ L + c/R^2 model.
pub fn bottom_spectrum_estimate(
    geom: &ModelGeometry,
    r_list: &[f64],
) -> Result<SpectralReport, SpectrumError> {
    if r_list.len() < 3 {
        return Err(SpectrumError::BadInput(
            "need at least 3 truncation radii".into(),
        ));
    }
    if r_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SpectrumError::BadInput("radii must be increasing".into()));
    }
    let s_min = 0.01;
    let mut bottoms = Vec::with_capacity(r_list.len());
    for &radius in r_list {
        let form = SchrodingerForm::from_geometry(geom, s_min, radius)
            .map_err(|e| SpectrumError::BadInput(e.to_string()))?;
        let cells = (((radius - s_min) / 0.005).ceil() as usize).max(64);
        let est = matrix_eigenvalues(&form, 1, cells)[0];
        bottoms.push(BottomEstimate {
            radius,
            lambda1: est.value,
            error: est.error,
        });
    }
    for w in bottoms.windows(2) {
        let jump = w[1].lambda1 - w[0].lambda1;
        if jump > 1e-9 {
            return Err(SpectrumError::Nonmonotone(jump));
        }
    }
    let z: Vec<f64> = bottoms
        .iter()
        .map(|b| 1.0 / (b.radius * b.radius))
        .collect();
    let y: Vec<f64> = bottoms.iter().map(|b| b.lambda1).collect();
    let (limit, coefficient, residual) = lsq_affine(&z, &y);
    Ok(SpectralReport {
        bottom_estimates: bottoms,
        extrapolation: Some(Extrapolation {
            limit,
            coefficient,
            residual,
        }),
        threshold: geom.threshold(),
        ..Default::default()
    })
}

// ---------------------------------------------------------------------------
// oscillation envelope and classification

/// Envelope trace rho(s) = sqrt(phi^2 + (phi'/beta)^2) in log form, for the
/// solution with regular data at s_min.
#[derive(Clone, Debug)]
pub struct AmplitudeTrace {
    pub s: Vec<f64>,
    /// ln rho at the sample points (log form survives exponential growth).
    pub log_rho: Vec<f64>,
    pub beta: f64,
    pub overflowed: bool,
}

impl AmplitudeTrace {
    /// max rho / final rho over the trace beyond the core region.
    pub fn decay_ratio(&self, skip_below: f64) -> f64 {
        let mut max_lr = f64::NEG_INFINITY;
        for (s, lr) in self.s.iter().zip(&self.log_rho) {
            if *s >= skip_below {
                max_lr = max_lr.max(*lr);
            }
        }
        (max_lr - self.log_rho[self.log_rho.len() - 1]).exp()
    }

    /// Relative spread of rho over the last quarter of the trace.
    pub fn tail_spread(&self) -> f64 {
        let start = 3 * self.log_rho.len() / 4;
        let tail = &self.log_rho[start..];
        let hi = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
        (hi - lo).exp() - 1.0
    }

    /// Least-squares growth rate of ln rho over the last half.
    pub fn growth_rate(&self) -> f64 {
        let start = self.log_rho.len() / 2;
        lsq_slope(&self.s[start..], &self.log_rho[start..])
    }
}

/// Integrate the oscillation envelope up to s_hi. Never fails; overflow of
/// the raw solution is recorded on the trace.
pub fn amplitude_scan(form: &SchrodingerForm, lambda: f64, s_hi: f64) -> AmplitudeTrace {
    let (s_min, s_max) = form.domain();
    let s_hi = s_hi.min(s_max);
    let beta = (lambda - form.threshold()).abs().sqrt().max(1e-6);
    let freq = (lambda - form.q_min()).max(1.0).sqrt();
    let step = (0.005f64).min(0.2 / freq);
    let steps = ((s_hi - s_min) / step).ceil() as usize;
    let h = (s_hi - s_min) / steps as f64;
    let f = |s: f64, y: &[f64; 2]| [y[1], (form.q_at(s) - lambda) * y[0]];
    let stride = (steps / 4000).max(1);
    let mut y = [0.0, 1.0];
    let mut s = s_min;
    let mut log_scale = 0.0f64;
    let mut out_s = Vec::new();
    let mut out_lr = Vec::new();
    let mut overflowed = false;
    for i in 0..steps {
        y = rk5_step(&f, s, &y, h);
        s += h;
        let mag = y[0].abs().max(y[1].abs());
        if mag > 1e120 {
            y[0] /= mag;
            y[1] /= mag;
            log_scale += mag.ln();
            if log_scale > 345.0 {
                // rho itself left the representable range
                overflowed = true;
            }
        }
        if i % stride == 0 || i + 1 == steps {
            let rho2 = y[0] * y[0] + (y[1] / beta) * (y[1] / beta);
            out_s.push(s);
            out_lr.push(0.5 * rho2.ln() + log_scale);
        }
    }
    AmplitudeTrace {
        s: out_s,
        log_rho: out_lr,
        beta,
        overflowed,
    }
}

/// Envelope samples for an oscillatory energy; errors out when the
/// solution grows beyond the representable range (sub-threshold regime).
pub fn prufer_amplitude(
    form: &SchrodingerForm,
    lambda: f64,
    s_hi: f64,
) -> Result<AmplitudeTrace, SpectrumError> {
    let trace = amplitude_scan(form, lambda, s_hi);
    if trace.overflowed {
        return Err(SpectrumError::OverflowGrowth(
            *trace.s.last().unwrap_or(&s_hi),
        ));
    }
    Ok(trace)
}

/// Decision constants for the embedded-eigenvalue classifier; the decay
/// factor and the two-radius confirmation are calibrated on the curvature
/// -1 negative control.
#[derive(Clone, Copy, Debug)]
pub struct ClassifyOptions {
    pub scan_hi: f64,
    pub decay_factor: f64,
    pub stabilize_spread: f64,
    pub oracle_tol: f64,
    pub oracle_concentration: f64,
    /// Skip the core transient below this radius when measuring decay.
    pub skip_below: f64,
}

impl ClassifyOptions {
    pub fn for_form(form: &SchrodingerForm) -> Self {
        Self {
            scan_hi: form.domain().1,
            decay_factor: 1e3,
            stabilize_spread: 0.25,
            oracle_tol: 2e-3,
            oracle_concentration: 0.9,
            skip_below: 5.0,
        }
    }
}

/// Dense-matrix cross-check: does a localized eigenvalue sit within
/// `oracle_tol` of lambda at both truncation radii?
pub fn oracle_verdict(form: &SchrodingerForm, lambda: f64, opts: &ClassifyOptions) -> bool {
    let (s_min, _) = form.domain();
    for frac in [0.6, 1.0] {
        let radius = s_min + (opts.scan_hi - s_min) * frac;
        let sub = form.truncated(radius);
        let cells = (((radius - s_min) / 0.01).ceil() as usize).max(64);
        let (diag, off) = assemble(&sub, cells);
        let below = tridiag_count_below(&diag, &off, lambda - opts.oracle_tol);
        let above = tridiag_count_below(&diag, &off, lambda + opts.oracle_tol);
        if above == below {
            return false; // no eigenvalue in the window at this truncation
        }
        let nearest = tridiag_eigenvalue(&diag, &off, below);
        if (nearest - lambda).abs() > opts.oracle_tol {
            return false;
        }
        let vec = matrix_eigenvector(&sub, nearest, cells);
        let half = vec.len() / 2;
        let total: f64 = vec.iter().map(|v| v * v).sum();
        let inner: f64 = vec[..half].iter().map(|v| v * v).sum();
        if inner / total < opts.oracle_concentration {
            return false;
        }
    }
    true
}

/// Classify a single energy against the essential-spectrum threshold.
pub fn classify_embedded(
    form: &SchrodingerForm,
    lambda: f64,
    opts: &ClassifyOptions,
) -> ClassificationRecord {
    let threshold = form.threshold();
    if lambda < threshold - 1e-6 {
        return ClassificationRecord {
            lambda,
            verdict: Verdict::BelowThreshold,
            amplitude_ratio: f64::NAN,
            oracle_candidate: false,
        };
    }
    let trace = amplitude_scan(form, lambda, opts.scan_hi);
    if trace.overflowed {
        // growth beyond the representable range only happens below the
        // essential spectrum; reported, not fatal
        return ClassificationRecord {
            lambda,
            verdict: Verdict::BelowThreshold,
            amplitude_ratio: f64::INFINITY,
            oracle_candidate: false,
        };
    }
    let ratio = trace.decay_ratio(opts.skip_below);
    let decayed = ratio >= opts.decay_factor;
    let stabilized = trace.tail_spread() <= opts.stabilize_spread;
    let oracle = oracle_verdict(form, lambda, opts);
    let verdict = if decayed {
        if oracle {
            Verdict::CandidateEigenvalue
        } else {
            Verdict::NotEmbedded
        }
    } else if stabilized {
        Verdict::NotEmbedded
    } else {
        Verdict::Inconclusive
    };
    ClassificationRecord {
        lambda,
        verdict,
        amplitude_ratio: ratio,
        oracle_candidate: oracle,
    }
}
