//! Radial curvature profiles H(r).
//!
//! A profile prescribes the lower Ricci bound -(n-1) H(r) and drives the
//! warping equation h'' = H h. The shipped families are
//! `constant(k)`, `exp_decay(c, alpha)` (H = 1 + c e^{-alpha r}),
//! `power_decay(c, p)` (H = 1 + c (1+r)^{-p}) and
//! `wigner(c, beta)` (H = 1 + c sin(2 beta r) / (1+r)).

use crate::error::GeometryError;

/// Declared decay class of H - 1 at infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AsymptoticClass {
    /// H - 1 is absolutely integrable on [0, infinity).
    L1Integrable,
    /// H -> 1 but H - 1 is not integrable (e.g. ~ 1/r decay).
    SlowlyDecaying,
    /// H is constant (not necessarily 1).
    Constant,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProfileFamily {
    Constant { k: f64 },
    ExpDecay { c: f64, alpha: f64 },
    PowerDecay { c: f64, p: f64 },
    Wigner { c: f64, beta: f64 },
    /// Non-increasing samples on a uniform grid, 1 beyond the last node.
    /// Used for measured curvature envelopes.
    Tabulated { values: Vec<f64>, step: f64 },
}

/// A curvature profile with its declared asymptotic class.
#[derive(Clone, Debug)]
pub struct CurvatureProfile {
    family: ProfileFamily,
    class: AsymptoticClass,
    /// Radius beyond which |H - 1| stays below `deviation_envelope`.
    support_of_deviation: f64,
    deviation_envelope: f64,
}

const DEVIATION_ENVELOPE: f64 = 1e-6;

impl CurvatureProfile {
    pub fn constant(k: f64) -> Result<Self, GeometryError> {
        if !(k >= 0.0) {
            return Err(GeometryError::InvalidProfile(format!(
                "constant profile needs k >= 0, got {k}"
            )));
        }
        Ok(Self {
            family: ProfileFamily::Constant { k },
            class: AsymptoticClass::Constant,
            support_of_deviation: 0.0,
            deviation_envelope: DEVIATION_ENVELOPE,
        })
    }

    pub fn exp_decay(c: f64, alpha: f64) -> Result<Self, GeometryError> {
        if !(c >= 0.0) || !(alpha > 0.0) {
            return Err(GeometryError::InvalidProfile(format!(
                "exp_decay needs c >= 0 and alpha > 0, got c={c}, alpha={alpha}"
            )));
        }
        let support = if c == 0.0 {
            0.0
        } else {
            ((c / DEVIATION_ENVELOPE).ln() / alpha).max(0.0)
        };
        Ok(Self {
            family: ProfileFamily::ExpDecay { c, alpha },
            class: AsymptoticClass::L1Integrable,
            support_of_deviation: support,
            deviation_envelope: DEVIATION_ENVELOPE,
        })
    }

    pub fn power_decay(c: f64, p: f64) -> Result<Self, GeometryError> {
        if !(c >= 0.0) || !(p > 0.0) {
            return Err(GeometryError::InvalidProfile(format!(
                "power_decay needs c >= 0 and p > 0, got c={c}, p={p}"
            )));
        }
        let class = if p > 1.0 {
            AsymptoticClass::L1Integrable
        } else {
            AsymptoticClass::SlowlyDecaying
        };
        let support = if c == 0.0 {
            0.0
        } else {
            ((c / DEVIATION_ENVELOPE).powf(1.0 / p) - 1.0).max(0.0)
        };
        Ok(Self {
            family: ProfileFamily::PowerDecay { c, p },
            class,
            support_of_deviation: support,
            deviation_envelope: DEVIATION_ENVELOPE,
        })
    }

    pub fn wigner(c: f64, beta: f64) -> Result<Self, GeometryError> {
        if !(beta > 0.0) || !(c >= 0.0) {
            return Err(GeometryError::InvalidProfile(format!(
                "wigner needs c >= 0 and beta > 0, got c={c}, beta={beta}"
            )));
        }
        let support = if c == 0.0 { 0.0 } else { (c / DEVIATION_ENVELOPE - 1.0).max(0.0) };
        Ok(Self {
            family: ProfileFamily::Wigner { c, beta },
            class: AsymptoticClass::SlowlyDecaying,
            support_of_deviation: support,
            deviation_envelope: DEVIATION_ENVELOPE,
        })
    }

    /// Monotone non-increasing envelope from uniform samples (H = 1 past
    /// the last node). Samples must be >= 1, non-increasing, and end at 1.
    pub fn tabulated_envelope(values: Vec<f64>, step: f64) -> Result<Self, GeometryError> {
        if values.len() < 2 || !(step > 0.0) {
            return Err(GeometryError::InvalidProfile(
                "envelope needs at least two samples and a positive step".into(),
            ));
        }
        if values.windows(2).any(|w| w[1] > w[0] + 1e-12) {
            return Err(GeometryError::InvalidProfile(
                "envelope samples must be non-increasing".into(),
            ));
        }
        if values.iter().any(|&v| v < 1.0 - 1e-12) {
            return Err(GeometryError::InvalidProfile(
                "envelope samples must stay >= 1".into(),
            ));
        }
        if (values[values.len() - 1] - 1.0).abs() > 1e-9 {
            return Err(GeometryError::InvalidProfile(
                "envelope must settle to 1 at its last sample".into(),
            ));
        }
        let support = step * values.len() as f64;
        Ok(Self {
            family: ProfileFamily::Tabulated { values, step },
            class: AsymptoticClass::L1Integrable,
            support_of_deviation: support,
            deviation_envelope: DEVIATION_ENVELOPE,
        })
    }

    /// H(r).
    pub fn evaluate(&self, r: f64) -> f64 {
        match &self.family {
            ProfileFamily::Constant { k } => *k,
            ProfileFamily::ExpDecay { c, alpha } => 1.0 + c * (-alpha * r).exp(),
            ProfileFamily::PowerDecay { c, p } => 1.0 + c * (1.0 + r).powf(-p),
            ProfileFamily::Wigner { c, beta } => 1.0 + c * (2.0 * beta * r).sin() / (1.0 + r),
            ProfileFamily::Tabulated { values, step } => {
                crate::numeric::lerp_uniform(values, 0.0, *step, r)
            }
        }
    }

    pub fn family(&self) -> &ProfileFamily {
        &self.family
    }

    pub fn asymptotic_class(&self) -> AsymptoticClass {
        self.class
    }

    pub fn support_of_deviation(&self) -> f64 {
        self.support_of_deviation
    }

    pub fn deviation_envelope(&self) -> f64 {
        self.deviation_envelope
    }

    /// True when H - 1 is integrable with H >= 1, so the pinching
    /// comparison against hyperbolic space applies. The constant profile
    /// qualifies only at k = 1.
    pub fn is_pinching(&self) -> bool {
        match self.family {
            ProfileFamily::Constant { k } => k == 1.0,
            _ => self.class == AsymptoticClass::L1Integrable,
        }
    }

    /// True for monotone non-increasing families (everything but `wigner`).
    pub fn is_non_increasing(&self) -> bool {
        !matches!(self.family, ProfileFamily::Wigner { .. })
    }

    /// Limit of H at infinity under the declared class.
    pub fn limit_at_infinity(&self) -> f64 {
        match self.family {
            ProfileFamily::Constant { k } => k,
            _ => 1.0,
        }
    }

    /// Short name of the family (for reports).
    pub fn family_name(&self) -> &'static str {
        match self.family {
            ProfileFamily::Constant { .. } => "constant",
            ProfileFamily::ExpDecay { .. } => "exp_decay",
            ProfileFamily::PowerDecay { .. } => "power_decay",
            ProfileFamily::Wigner { .. } => "wigner",
            ProfileFamily::Tabulated { .. } => "tabulated",
        }
    }

    /// Structural validation: H >= 0 everywhere it will be sampled, the
    /// monotone families really are non-increasing, and profiles declared
    /// integrable have a Cauchy tail for int (H - 1).
    pub fn validate(&self, r_max: f64) -> Result<(), GeometryError> {
        let samples = 4096;
        let dr = r_max / samples as f64;
        let mut prev = self.evaluate(0.0);
        if !prev.is_finite() {
            return Err(GeometryError::InvalidProfile("H(0) is not finite".into()));
        }
        for i in 0..=samples {
            let h = self.evaluate(i as f64 * dr);
            if h < 0.0 {
                return Err(GeometryError::InvalidProfile(format!(
                    "H({:.4}) = {h:.4} < 0",
                    i as f64 * dr
                )));
            }
            if self.is_non_increasing() && h > prev + 1e-12 {
                return Err(GeometryError::InvalidProfile(format!(
                    "H increases near r = {:.4}",
                    i as f64 * dr
                )));
            }
            if self.class == AsymptoticClass::L1Integrable && h < 1.0 - 1e-12 {
                return Err(GeometryError::InvalidProfile(format!(
                    "H({:.4}) = {h:.6} < 1 contradicts the integrable-deviation class",
                    i as f64 * dr
                )));
            }
            prev = h;
        }
        if self.class == AsymptoticClass::L1Integrable {
            // Cauchy tail of int (H-1) over successive dyadic windows
            let tail = |a: f64, b: f64| {
                let m = 512;
                let d = (b - a) / m as f64;
                let vals: Vec<f64> = (0..=m)
                    .map(|i| self.evaluate(a + i as f64 * d) - 1.0)
                    .collect();
                crate::numeric::simpson(&vals, d)
            };
            let t1 = tail(r_max.max(8.0), 2.0 * r_max.max(8.0));
            let t2 = tail(2.0 * r_max.max(8.0), 4.0 * r_max.max(8.0));
            if !(t1 + t2).is_finite() || t1 + t2 > 1e-2 {
                return Err(GeometryError::InvalidProfile(
                    "declared integrable deviation has a non-Cauchy tail".into(),
                ));
            }
        }
        Ok(())
    }
}
