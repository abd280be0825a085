//! C^2 cutoff profiles for the approximate-eigenfunction windows.
//!
//! eta rises from 0 to 1 over [t-1, t] along a smoothstep polynomial,
//! holds 1 on [t, s], and falls back to 0 over [s, S]. Both transition
//! polynomials have vanishing first and second derivatives at their
//! endpoints, so eta is C^2 across the gluing points.

use crate::error::WeylError;

/// Transition polynomial family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SmoothstepOrder {
    /// 6x^5 - 15x^4 + 10x^3
    Quintic,
    /// 35x^4 - 84x^5 + 70x^6 - 20x^7
    Septic,
}

impl SmoothstepOrder {
    pub(crate) fn p(self, x: f64) -> f64 {
        match self {
            SmoothstepOrder::Quintic => x * x * x * (10.0 + x * (-15.0 + 6.0 * x)),
            SmoothstepOrder::Septic => {
                x * x * x * x * (35.0 + x * (-84.0 + x * (70.0 - 20.0 * x)))
            }
        }
    }

    pub(crate) fn dp(self, x: f64) -> f64 {
        match self {
            SmoothstepOrder::Quintic => 30.0 * x * x * (1.0 - x) * (1.0 - x),
            SmoothstepOrder::Septic => 140.0 * x * x * x * (1.0 - x) * (1.0 - x) * (1.0 - x),
        }
    }

    pub(crate) fn d2p(self, x: f64) -> f64 {
        match self {
            SmoothstepOrder::Quintic => 60.0 * x * (2.0 * x - 1.0) * (x - 1.0),
            SmoothstepOrder::Septic => 420.0 * x * x * (1.0 - x) * (1.0 - x) * (1.0 - 2.0 * x),
        }
    }

    /// Exact extremum of |p'| on [0, 1].
    pub fn max_dp(self) -> f64 {
        match self {
            // 30 (1/2)^2 (1/2)^2
            SmoothstepOrder::Quintic => 15.0 / 8.0,
            // 140 (1/2)^3 (1/2)^3
            SmoothstepOrder::Septic => 35.0 / 16.0,
        }
    }

    /// Exact extremum of |p''| on [0, 1].
    pub fn max_d2p(self) -> f64 {
        match self {
            // attained at x = 1/2 -+ sqrt(3)/6
            SmoothstepOrder::Quintic => 10.0 / 3.0f64.sqrt(),
            // attained where 5x^2 - 5x + 1 = 0, so x(1-x) = 1/5
            SmoothstepOrder::Septic => 84.0 * 5.0f64.sqrt() / 25.0,
        }
    }

    /// Frozen bound on |eta''| + |eta'| over a unit transition band.
    pub fn c0_unit(self) -> f64 {
        self.max_dp() + self.max_d2p()
    }
}

/// Window cutoff: 0 outside (t-1, S), 1 on (t, s).
#[derive(Clone, Copy, Debug)]
pub struct CutoffSpec {
    pub t: f64,
    pub s: f64,
    pub cap_s: f64,
    pub order: SmoothstepOrder,
    /// Bound on |eta''| + |eta'| over the unit rise band; the fall band
    /// obeys the same bound divided by its width S - s.
    pub c0: f64,
}

/// Construct the cutoff for a window t < s <= S - 1 (rise band [t-1, t]).
pub fn build_cutoff(
    t: f64,
    s: f64,
    cap_s: f64,
    order: SmoothstepOrder,
) -> Result<CutoffSpec, WeylError> {
    if !(t - 1.0 > 0.0) || !(t < s) || !(s <= cap_s - 1.0) {
        return Err(WeylError::BadWindow { t, s, cap_s });
    }
    Ok(CutoffSpec {
        t,
        s,
        cap_s,
        order,
        c0: order.c0_unit(),
    })
}

impl CutoffSpec {
    pub fn fall_width(&self) -> f64 {
        self.cap_s - self.s
    }

    pub fn eta(&self, r: f64) -> f64 {
        if r <= self.t - 1.0 || r >= self.cap_s {
            0.0
        } else if r < self.t {
            self.order.p(r - (self.t - 1.0))
        } else if r <= self.s {
            1.0
        } else {
            self.order.p((self.cap_s - r) / self.fall_width())
        }
    }

    pub fn eta_p(&self, r: f64) -> f64 {
        if r <= self.t - 1.0 || r >= self.cap_s {
            0.0
        } else if r < self.t {
            self.order.dp(r - (self.t - 1.0))
        } else if r <= self.s {
            0.0
        } else {
            -self.order.dp((self.cap_s - r) / self.fall_width()) / self.fall_width()
        }
    }

    pub fn eta_pp(&self, r: f64) -> f64 {
        if r <= self.t - 1.0 || r >= self.cap_s {
            0.0
        } else if r < self.t {
            self.order.d2p(r - (self.t - 1.0))
        } else if r <= self.s {
            0.0
        } else {
            let w = self.fall_width();
            self.order.d2p((self.cap_s - r) / w) / (w * w)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoint_conditions_hold_exactly() {
        for order in [SmoothstepOrder::Quintic, SmoothstepOrder::Septic] {
            assert_eq!(order.p(0.0), 0.0);
            assert_eq!(order.p(1.0), 1.0);
            assert_eq!(order.dp(0.0), 0.0);
            assert_eq!(order.dp(1.0), 0.0);
            assert_eq!(order.d2p(0.0), 0.0);
            assert_eq!(order.d2p(1.0), 0.0);
        }
    }

    #[test]
    fn frozen_extrema_match_dense_sampling() {
        for order in [SmoothstepOrder::Quintic, SmoothstepOrder::Septic] {
            let mut max_dp = 0.0f64;
            let mut max_d2p = 0.0f64;
            let samples = 10_000;
            for i in 0..=samples {
                let x = i as f64 / samples as f64;
                max_dp = max_dp.max(order.dp(x).abs());
                max_d2p = max_d2p.max(order.d2p(x).abs());
            }
            assert!(max_dp <= order.max_dp() + 1e-12);
            assert!(
                max_dp > order.max_dp() - 1e-4,
                "sampling should approach the extremum"
            );
            assert!(max_d2p <= order.max_d2p() + 1e-12);
            assert!(max_d2p > order.max_d2p() - 1e-3);
        }
    }

    #[test]
    fn derivative_bounds_scale_with_fall_width() {
        let cutoff = build_cutoff(8.0, 12.0, 22.0, SmoothstepOrder::Quintic).unwrap();
        let w = cutoff.fall_width();
        assert_eq!(w, 10.0);
        let samples = 10_000;
        for band in [(7.0, 8.0), (12.0, 22.0)] {
            let mut worst = 0.0f64;
            for i in 0..=samples {
                let r = band.0 + (band.1 - band.0) * i as f64 / samples as f64;
                worst = worst.max(cutoff.eta_pp(r).abs() + cutoff.eta_p(r).abs());
            }
            let bound = if band.0 < 8.0 { cutoff.c0 } else { cutoff.c0 / w };
            assert!(worst <= bound + 1e-12, "band {band:?}: {worst} vs {bound}");
        }
    }

    #[test]
    fn cutoff_is_c2_at_gluing_points() {
        let cutoff = build_cutoff(8.0, 12.0, 14.0, SmoothstepOrder::Quintic).unwrap();
        let eps = 1e-7;
        for x in [7.0f64, 8.0, 12.0, 14.0] {
            for f in [
                &(|r| cutoff.eta(r)) as &dyn Fn(f64) -> f64,
                &|r| cutoff.eta_p(r),
                &|r| cutoff.eta_pp(r),
            ] {
                let jump = (f(x + eps) - f(x - eps)).abs();
                assert!(jump < 1e-4, "discontinuity at {x}: {jump}");
            }
        }
    }

    #[test]
    fn bad_windows_are_rejected() {
        assert!(build_cutoff(0.5, 3.0, 5.0, SmoothstepOrder::Quintic).is_err());
        assert!(build_cutoff(3.0, 2.0, 5.0, SmoothstepOrder::Quintic).is_err());
        assert!(build_cutoff(3.0, 4.5, 5.0, SmoothstepOrder::Quintic).is_err());
    }
}
