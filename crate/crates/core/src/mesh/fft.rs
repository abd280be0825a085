//! Minimal iterative radix-2 complex FFT.
//!
//! Only used by the angular-mode preconditioner, which needs power-of-two
//! transforms of modest length; twiddle factors are precomputed once per
//! plan so the hot loop is pure arithmetic.

pub struct FftPlan {
    n: usize,
    // e^{-2 pi i k / n} for k < n/2
    tw_re: Vec<f64>,
    tw_im: Vec<f64>,
}

impl FftPlan {
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two() && n >= 2, "fft length must be a power of two");
        let half = n / 2;
        let mut tw_re = Vec::with_capacity(half);
        let mut tw_im = Vec::with_capacity(half);
        for k in 0..half {
            let ang = -2.0 * std::f64::consts::PI * k as f64 / n as f64;
            tw_re.push(ang.cos());
            tw_im.push(ang.sin());
        }
        Self { n, tw_re, tw_im }
    }

    /// In-place forward transform.
    pub fn forward(&self, re: &mut [f64], im: &mut [f64]) {
        self.transform(re, im, false);
    }

    /// In-place inverse transform, including the 1/n normalization.
    pub fn inverse(&self, re: &mut [f64], im: &mut [f64]) {
        self.transform(re, im, true);
        let scale = 1.0 / self.n as f64;
        for v in re.iter_mut() {
            *v *= scale;
        }
        for v in im.iter_mut() {
            *v *= scale;
        }
    }

    fn transform(&self, re: &mut [f64], im: &mut [f64], inverse: bool) {
        let n = self.n;
        assert_eq!(re.len(), n);
        assert_eq!(im.len(), n);
        // bit reversal
        let mut j = 0usize;
        for i in 0..n {
            if i < j {
                re.swap(i, j);
                im.swap(i, j);
            }
            let mut mask = n >> 1;
            while mask > 0 && j & mask != 0 {
                j ^= mask;
                mask >>= 1;
            }
            j |= mask;
        }
        // butterflies
        let mut len = 2;
        while len <= n {
            let stride = n / len;
            let half = len / 2;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let (wr, wi0) = (self.tw_re[k * stride], self.tw_im[k * stride]);
                    let wi = if inverse { -wi0 } else { wi0 };
                    let a = start + k;
                    let b = a + half;
                    let tr = re[b] * wr - im[b] * wi;
                    let ti = re[b] * wi + im[b] * wr;
                    re[b] = re[a] - tr;
                    im[b] = im[a] - ti;
                    re[a] += tr;
                    im[a] += ti;
                }
            }
            len <<= 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(re: &[f64], im: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = re.len();
        let mut or = vec![0.0; n];
        let mut oi = vec![0.0; n];
        for m in 0..n {
            for k in 0..n {
                let ang = -2.0 * std::f64::consts::PI * (m * k) as f64 / n as f64;
                or[m] += re[k] * ang.cos() - im[k] * ang.sin();
                oi[m] += re[k] * ang.sin() + im[k] * ang.cos();
            }
        }
        (or, oi)
    }

    #[test]
    fn matches_naive_dft() {
        let n = 64;
        let plan = FftPlan::new(n);
        let mut re: Vec<f64> = (0..n).map(|i| ((i * 7 + 3) % 13) as f64 - 6.0).collect();
        let mut im: Vec<f64> = (0..n).map(|i| ((i * 5 + 1) % 11) as f64 - 5.0).collect();
        let (er, ei) = naive_dft(&re, &im);
        plan.forward(&mut re, &mut im);
        for i in 0..n {
            assert!((re[i] - er[i]).abs() < 1e-9, "re[{i}]");
            assert!((im[i] - ei[i]).abs() < 1e-9, "im[{i}]");
        }
    }

    #[test]
    fn round_trip_is_identity() {
        let n = 256;
        let plan = FftPlan::new(n);
        let orig: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut re = orig.clone();
        let mut im = vec![0.0; n];
        plan.forward(&mut re, &mut im);
        plan.inverse(&mut re, &mut im);
        for i in 0..n {
            assert!((re[i] - orig[i]).abs() < 1e-12);
            assert!(im[i].abs() < 1e-12);
        }
    }
}
