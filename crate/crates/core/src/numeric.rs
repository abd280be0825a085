//! Small numerical utilities shared across the crate.

/// Area of the unit sphere S^{n-1} in R^n, i.e. 2 pi^{n/2} / Gamma(n/2).
pub fn unit_sphere_area(n: usize) -> f64 {
    assert!(n >= 2, "dimension must be >= 2");
    let half = n as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(half) / gamma_half_integer(n)
}

/// Gamma(n/2) for integer n >= 1.
fn gamma_half_integer(n: usize) -> f64 {
    if n % 2 == 0 {
        // Gamma(k) = (k-1)! with k = n/2
        let k = n / 2;
        (1..k).map(|i| i as f64).product()
    } else {
        // Gamma(k + 1/2) = (2k)! sqrt(pi) / (4^k k!) with k = (n-1)/2
        let k = (n - 1) / 2;
        let mut g = std::f64::consts::PI.sqrt();
        for i in 0..k {
            g *= i as f64 + 0.5;
        }
        g
    }
}

/// Composite Simpson rule over uniformly spaced samples.
///
/// Requires an odd sample count (even interval count); falls back to a
/// trapezoid correction on the last interval otherwise.
pub fn simpson(values: &[f64], dx: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    if n == 2 {
        return 0.5 * dx * (values[0] + values[1]);
    }
    let m = if n % 2 == 1 { n } else { n - 1 };
    let mut sum = values[0] + values[m - 1];
    for (i, &v) in values.iter().enumerate().take(m - 1).skip(1) {
        sum += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    let mut total = sum * dx / 3.0;
    if n % 2 == 0 {
        total += 0.5 * dx * (values[n - 2] + values[n - 1]);
    }
    total
}

/// Linear interpolation of y(x) on a uniform grid starting at `x0` with step `dx`.
/// Clamps to the table range.
pub fn lerp_uniform(y: &[f64], x0: f64, dx: f64, x: f64) -> f64 {
    let t = (x - x0) / dx;
    if t <= 0.0 {
        return y[0];
    }
    let max = (y.len() - 1) as f64;
    if t >= max {
        return y[y.len() - 1];
    }
    let i = t.floor() as usize;
    let frac = t - i as f64;
    y[i] * (1.0 - frac) + y[i + 1] * frac
}

/// Least-squares slope of (x, y) samples.
pub fn lsq_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let xm = x.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        num += (xi - xm) * (yi - ym);
        den += (xi - xm) * (xi - xm);
    }
    num / den
}

/// Fit y = a + b*z by least squares, returning (a, b, rms residual).
pub fn lsq_affine(z: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let b = lsq_slope(z, y);
    let n = z.len() as f64;
    let a = (y.iter().sum::<f64>() - b * z.iter().sum::<f64>()) / n;
    let mut ss = 0.0;
    for (&zi, &yi) in z.iter().zip(y) {
        let r = yi - a - b * zi;
        ss += r * r;
    }
    (a, b, (ss / n).sqrt())
}

/// Number of eigenvalues of the symmetric tridiagonal matrix (diag, off)
/// that are strictly below `lambda` (Sturm sequence / LDL^T inertia count).
pub fn tridiag_count_below(diag: &[f64], off: &[f64], lambda: f64) -> usize {
    let n = diag.len();
    debug_assert_eq!(off.len() + 1, n);
    let mut count = 0;
    let mut q = diag[0] - lambda;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..n {
        let e = off[i - 1];
        let mut denom = q;
        if denom == 0.0 {
            denom = f64::MIN_POSITIVE.sqrt();
        }
        q = (diag[i] - lambda) - e * e / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// k-th (0-based) eigenvalue of a symmetric tridiagonal matrix by bisection
/// on the Sturm count.
pub fn tridiag_eigenvalue(diag: &[f64], off: &[f64], k: usize) -> f64 {
    let n = diag.len();
    assert!(k < n);
    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let mut radius = 0.0;
        if i > 0 {
            radius += off[i - 1].abs();
        }
        if i + 1 < n {
            radius += off[i].abs();
        }
        lo = lo.min(diag[i] - radius);
        hi = hi.max(diag[i] + radius);
    }
    let scale = (hi - lo).max(1.0);
    for _ in 0..120 {
        let mid = 0.5 * (lo + hi);
        if tridiag_count_below(diag, off, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-14 * scale {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Solve the tridiagonal system (diag, off) x = b with partial pivoting.
/// Used by inverse iteration, where the matrix is nearly singular.
///
/// Rows carry bands (l_i, d_i, u_i, v_i) acting on x_{i-1}..x_{i+2}; the
/// second superdiagonal v appears when rows are swapped.
pub fn tridiag_solve(diag: &[f64], off: &[f64], b: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut d = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut l = vec![0.0; n];
    let mut r = b.to_vec();
    for i in 0..n {
        d[i] = diag[i];
        if i + 1 < n {
            u[i] = off[i];
        }
        if i > 0 {
            l[i] = off[i - 1];
        }
    }
    for i in 0..n - 1 {
        if l[i + 1].abs() > d[i].abs() {
            // pivot: swap row i and i+1
            let (di, ui, vi, ri) = (d[i], u[i], v[i], r[i]);
            d[i] = l[i + 1];
            u[i] = d[i + 1];
            v[i] = u[i + 1];
            r[i] = r[i + 1];
            // row i+1 receives old row i shifted: its x_i coeff is old d, x_{i+1} old u
            l[i + 1] = di;
            d[i + 1] = ui;
            u[i + 1] = vi;
            r[i + 1] = ri;
        }
        let mut piv = d[i];
        if piv == 0.0 {
            piv = f64::MIN_POSITIVE.sqrt();
        }
        let factor = l[i + 1] / piv;
        d[i + 1] -= factor * u[i];
        u[i + 1] -= factor * v[i];
        r[i + 1] -= factor * r[i];
        l[i + 1] = 0.0;
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = r[i];
        if i + 1 < n {
            s -= u[i] * x[i + 1];
        }
        if i + 2 < n {
            s -= v[i] * x[i + 2];
        }
        let mut piv = d[i];
        if piv == 0.0 {
            piv = f64::MIN_POSITIVE.sqrt();
        }
        x[i] = s / piv;
    }
    x
}

/// Format a float with 12 significant digits (report/golden-file precision).
pub fn fmt_sig12(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    format!("{x:.11e}")
}

/// Deterministic 64-bit generator (splitmix64); used for randomized
/// self-adjointness probes so runs are reproducible from a seed.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [-1, 1).
    pub fn next_sym(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 52) as f64 * 2.0 - 1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas_match_closed_forms() {
        assert!((unit_sphere_area(2) - 2.0 * std::f64::consts::PI).abs() < 1e-14);
        assert!((unit_sphere_area(3) - 4.0 * std::f64::consts::PI).abs() < 1e-13);
        // |S^3| = 2 pi^2
        assert!((unit_sphere_area(4) - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-13);
    }

    #[test]
    fn simpson_integrates_cubics_exactly() {
        let n = 101;
        let dx = 0.01;
        let vals: Vec<f64> = (0..n).map(|i| (i as f64 * dx).powi(3)).collect();
        let exact = 0.25f64;
        assert!((simpson(&vals, dx) - exact).abs() < 1e-12);
    }

    #[test]
    fn tridiag_eigenvalues_of_discrete_laplacian() {
        // -u'' on (0,1), Dirichlet, N interior nodes: lambda_k = (2/h^2)(1 - cos(k pi h))
        let n = 50;
        let h = 1.0 / (n as f64 + 1.0);
        let diag = vec![2.0 / (h * h); n];
        let off = vec![-1.0 / (h * h); n - 1];
        for k in 0..3 {
            let exact = 2.0 / (h * h) * (1.0 - ((k + 1) as f64 * std::f64::consts::PI * h).cos());
            let got = tridiag_eigenvalue(&diag, &off, k);
            assert!((got - exact).abs() < 1e-8 * exact.max(1.0), "k={k}: {got} vs {exact}");
        }
    }

    #[test]
    fn tridiag_solve_recovers_manufactured_solution() {
        let n = 40;
        let diag: Vec<f64> = (0..n).map(|i| 3.0 + 0.01 * i as f64).collect();
        let off = vec![-1.0; n - 1];
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut b = vec![0.0; n];
        for i in 0..n {
            b[i] = diag[i] * x_true[i];
            if i > 0 {
                b[i] += off[i - 1] * x_true[i - 1];
            }
            if i + 1 < n {
                b[i] += off[i] * x_true[i + 1];
            }
        }
        let x = tridiag_solve(&diag, &off, &b);
        for i in 0..n {
            assert!((x[i] - x_true[i]).abs() < 1e-10);
        }
    }
}
