//! Fixed-step explicit Runge-Kutta steppers.
//!
//! The primary stepper is the 6-stage, order-5 Dormand-Prince scheme used
//! with a fixed step; accuracy is certified globally by re-integrating at
//! half the step and comparing endpoints, which keeps runs reproducible.
//! A classical RK4 is kept as an independent cross-check of different order.

/// One Dormand-Prince order-5 step for y' = f(t, y).
pub fn rk5_step<const D: usize, F>(f: &F, t: f64, y: &[f64; D], h: f64) -> [f64; D]
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
{
    let k1 = f(t, y);
    let k2 = f(t + h / 5.0, &combine(y, h, &[(1.0 / 5.0, &k1)]));
    let k3 = f(
        t + 3.0 * h / 10.0,
        &combine(y, h, &[(3.0 / 40.0, &k1), (9.0 / 40.0, &k2)]),
    );
    let k4 = f(
        t + 4.0 * h / 5.0,
        &combine(
            y,
            h,
            &[(44.0 / 45.0, &k1), (-56.0 / 15.0, &k2), (32.0 / 9.0, &k3)],
        ),
    );
    let k5 = f(
        t + 8.0 * h / 9.0,
        &combine(
            y,
            h,
            &[
                (19372.0 / 6561.0, &k1),
                (-25360.0 / 2187.0, &k2),
                (64448.0 / 6561.0, &k3),
                (-212.0 / 729.0, &k4),
            ],
        ),
    );
    let k6 = f(
        t + h,
        &combine(
            y,
            h,
            &[
                (9017.0 / 3168.0, &k1),
                (-355.0 / 33.0, &k2),
                (46732.0 / 5247.0, &k3),
                (49.0 / 176.0, &k4),
                (-5103.0 / 18656.0, &k5),
            ],
        ),
    );
    combine(
        y,
        h,
        &[
            (35.0 / 384.0, &k1),
            (500.0 / 1113.0, &k3),
            (125.0 / 192.0, &k4),
            (-2187.0 / 6784.0, &k5),
            (11.0 / 84.0, &k6),
        ],
    )
}

/// One classical RK4 step.
pub fn rk4_step<const D: usize, F>(f: &F, t: f64, y: &[f64; D], h: f64) -> [f64; D]
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
{
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &combine(y, h, &[(0.5, &k1)]));
    let k3 = f(t + 0.5 * h, &combine(y, h, &[(0.5, &k2)]));
    let k4 = f(t + h, &combine(y, h, &[(1.0, &k3)]));
    combine(
        y,
        h,
        &[
            (1.0 / 6.0, &k1),
            (1.0 / 3.0, &k2),
            (1.0 / 3.0, &k3),
            (1.0 / 6.0, &k4),
        ],
    )
}

fn combine<const D: usize>(y: &[f64; D], h: f64, terms: &[(f64, &[f64; D])]) -> [f64; D] {
    let mut out = *y;
    for &(c, k) in terms {
        for i in 0..D {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrate from (t0, y0) to t1 with `steps` equal RK5 steps.
pub fn rk5_span<const D: usize, F>(f: &F, t0: f64, y0: [f64; D], t1: f64, steps: usize) -> [f64; D]
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
{
    let h = (t1 - t0) / steps as f64;
    let mut y = y0;
    let mut t = t0;
    for _ in 0..steps {
        y = rk5_step(f, t, &y, h);
        t += h;
    }
    y
}
