//! Discrete convolution: a quadratic reference, a radix-2 FFT version, sums of
//! independent integer-valued variables and same-length signal smoothing.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, Mul, Sub};

use crate::math::sin_cos;
use crate::{DiscreteDistribution, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub const fn new(re: f64, im: f64) -> Self {
        Complex { re, im }
    }

    pub fn conj(self) -> Self {
        Complex::new(self.re, -self.im)
    }

    /// `e^{iθ}`
    pub fn cis(theta: f64) -> Self {
        let (s, c) = sin_cos(theta);
        Complex::new(c, s)
    }
}

impl Add for Complex {
    type Output = Complex;
    fn add(self, o: Complex) -> Complex {
        Complex::new(self.re + o.re, self.im + o.im)
    }
}

impl Sub for Complex {
    type Output = Complex;
    fn sub(self, o: Complex) -> Complex {
        Complex::new(self.re - o.re, self.im - o.im)
    }
}

impl Mul for Complex {
    type Output = Complex;
    fn mul(self, o: Complex) -> Complex {
        Complex::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }
}

fn check_coeffs(name: &str, x: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::validation(format!("{name} is empty")));
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::validation(format!("{name}[{i}] is not finite")));
    }
    Ok(())
}

/// `c_k = Σ_i a_i b_{k−i}`, length `|a| + |b| − 1`.
pub fn conv_naive(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    check_coeffs("a", a)?;
    check_coeffs("b", b)?;
    // fixed operand order makes the floating-point sums order-independent
    let (a, b) = if canonical_order(a, b) { (a, b) } else { (b, a) };
    let mut c = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            c[i + j] += x * y;
        }
    }
    Ok(c)
}

fn canonical_order(a: &[f64], b: &[f64]) -> bool {
    match a.len().cmp(&b.len()) {
        core::cmp::Ordering::Equal => a
            .iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .is_none_or(|o| o.is_lt()),
        o => o.is_lt(),
    }
}

/// Power-of-two transform plan with precomputed twiddle factors.
struct Fft {
    n: usize,
    /// `e^{−2πik/n}` for `k < n/2`
    twiddles: Vec<Complex>,
}

impl Fft {
    fn new(n: usize) -> Self {
        debug_assert!(n.is_power_of_two());
        let twiddles = (0..n / 2).map(|k| Complex::cis(-2.0 * PI * k as f64 / n as f64)).collect();
        Fft { n, twiddles }
    }

    fn bit_reverse(&self, x: &mut [Complex]) {
        let bits = self.n.trailing_zeros();
        if bits == 0 {
            return;
        }
        for i in 0..self.n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if i < j {
                x.swap(i, j);
            }
        }
    }

    /// Unscaled transform; `inverse` conjugates the twiddles.
    fn run(&self, x: &mut [Complex], inverse: bool) {
        self.bit_reverse(x);
        let mut len = 2;
        while len <= self.n {
            let half = len / 2;
            let stride = self.n / len;
            for start in (0..self.n).step_by(len) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let u = x[start + k];
                    let t = w * x[start + k + half];
                    x[start + k] = u + t;
                    x[start + k + half] = u - t;
                }
            }
            len <<= 1;
        }
    }
}

/// FFT convolution: pad to a power of two, evaluate both polynomials at the
/// roots of unity, multiply pointwise and interpolate back.
pub fn conv_fft(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    check_coeffs("a", a)?;
    check_coeffs("b", b)?;
    let out_len = a.len() + b.len() - 1;
    let n = out_len.next_power_of_two();
    let plan = Fft::new(n);
    let pad = |x: &[f64]| -> Vec<Complex> {
        let mut v: Vec<Complex> = x.iter().map(|&r| Complex::new(r, 0.0)).collect();
        v.resize(n, Complex::default());
        v
    };
    let mut fa = pad(a);
    let mut fb = pad(b);
    plan.run(&mut fa, false);
    plan.run(&mut fb, false);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x = *x * *y;
    }
    plan.run(&mut fa, true);
    let scale = 1.0 / n as f64;
    let scale_in = a.iter().map(|x| x.abs()).fold(0.0, f64::max) * b.iter().map(|x| x.abs()).fold(0.0, f64::max);
    debug_assert!(
        fa[..out_len].iter().all(|z| (z.im * scale).abs() < 1e-9 * scale_in.max(1.0) * n as f64),
        "imaginary residue too large"
    );
    Ok(fa[..out_len].iter().map(|z| z.re * scale).collect())
}

/// Distribution of `X + Y` for independent `X ~ pA`, `Y ~ pB` on `0..n`.
pub fn distribution_sum(pa: &DiscreteDistribution, pb: &DiscreteDistribution) -> Result<DiscreteDistribution> {
    let raw = if pa.len() * pb.len() <= 4096 {
        conv_naive(pa.probs(), pb.probs())?
    } else {
        conv_fft(pa.probs(), pb.probs())?
    };
    // transform round-off can leave tiny negatives
    let clamped: Vec<f64> = raw.into_iter().map(|p| p.max(0.0)).collect();
    DiscreteDistribution::from_weights(&clamped)
}

/// Same-length smoothing `g = f * h` with the kernel centred on offset
/// `(K − 1) / 2` and zeros assumed outside the signal.
pub fn smooth_signal(signal: &[f64], kernel: &[f64]) -> Result<Vec<f64>> {
    check_coeffs("kernel", kernel)?;
    if signal.is_empty() {
        return Ok(Vec::new());
    }
    let full = if signal.len() * kernel.len() <= 1 << 16 {
        conv_naive(signal, kernel)?
    } else {
        conv_fft(signal, kernel)?
    };
    let centre = (kernel.len() - 1) / 2;
    Ok(full[centre..centre + signal.len()].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::RngStream;
    use proptest::prelude::*;

    fn max_abs(a: &[f64], b: &[f64]) -> f64 {
        assert_eq!(a.len(), b.len());
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn naive_examples() {
        assert_eq!(conv_naive(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), vec![3.0, 10.0, 8.0]);
        assert_eq!(conv_naive(&[0.5, -1.5, 2.0], &[1.0]).unwrap(), vec![0.5, -1.5, 2.0]);
        assert_eq!(conv_naive(&[0.0; 4], &[1.0, 2.0]).unwrap(), vec![0.0; 5]);
        assert!(conv_naive(&[], &[1.0]).is_err());
        assert!(conv_fft(&[1.0], &[]).is_err());
    }

    #[test]
    fn fft_examples() {
        let c = conv_fft(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert!(max_abs(&c, &[3.0, 10.0, 8.0]) < 1e-12);
        assert!(max_abs(&conv_fft(&[1.0], &[1.0]).unwrap(), &[1.0]) < 1e-15);
        let mut rng = RngStream::new(1024, 0);
        let a: Vec<f64> = (0..1024).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
        let b: Vec<f64> = (0..1024).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
        assert!(max_abs(&conv_fft(&a, &b).unwrap(), &conv_naive(&a, &b).unwrap()) < 1e-9);
    }

    /// Direct DFT evaluation as an independent transform oracle.
    #[test]
    fn forward_transform_matches_dft() {
        let n = 16;
        let mut rng = RngStream::new(5, 0);
        let x: Vec<Complex> = (0..n).map(|_| Complex::new(rng.uniform(), rng.uniform())).collect();
        let mut y = x.clone();
        Fft::new(n).run(&mut y, false);
        for (k, yk) in y.iter().enumerate() {
            let mut s = Complex::default();
            for (j, xj) in x.iter().enumerate() {
                s = s + *xj * Complex::cis(-2.0 * PI * (j * k) as f64 / n as f64);
            }
            assert!((s.re - yk.re).abs() < 1e-12 && (s.im - yk.im).abs() < 1e-12);
        }
    }

    #[test]
    fn distribution_sum_examples() {
        let coin = DiscreteDistribution::uniform(2).unwrap();
        assert_eq!(distribution_sum(&coin, &coin).unwrap().probs(), &[0.25, 0.5, 0.25]);
        let p = DiscreteDistribution::new(vec![0.2, 0.5, 0.3]).unwrap();
        let delta = DiscreteDistribution::point_mass(1, 0).unwrap();
        assert_eq!(distribution_sum(&delta, &p).unwrap().probs(), p.probs());
        let die = DiscreteDistribution::uniform(6).unwrap();
        let two = distribution_sum(&die, &die).unwrap();
        // faces 1..6 map to indices 0..5, so the sum 7 sits at index 5
        assert_eq!(two.len(), 11);
        assert!((two.probs()[5] - 6.0 / 36.0).abs() < 1e-15);
        for (k, &q) in two.probs().iter().enumerate() {
            let ways = 6 - (k as i64 - 5).abs();
            assert!((q - ways as f64 / 36.0).abs() < 1e-15);
        }
    }

    #[test]
    fn large_distribution_sum_uses_fft_and_stays_valid() {
        let mut rng = RngStream::new(9, 0);
        let w1: Vec<f64> = (0..300).map(|_| rng.uniform()).collect();
        let w2: Vec<f64> = (0..200).map(|_| rng.uniform()).collect();
        let p = DiscreteDistribution::from_weights(&w1).unwrap();
        let q = DiscreteDistribution::from_weights(&w2).unwrap();
        let s = distribution_sum(&p, &q).unwrap();
        assert!((s.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((s.index_mean() - p.index_mean() - q.index_mean()).abs() < 1e-10);
    }

    #[test]
    fn smooth_examples() {
        let f = [1.0, -2.0, 3.5];
        assert_eq!(smooth_signal(&f, &[1.0]).unwrap(), f.to_vec());
        let box3 = [1.0 / 3.0; 3];
        let g = smooth_signal(&[2.0; 8], &box3).unwrap();
        for v in &g[1..7] {
            assert!((v - 2.0).abs() < 1e-15);
        }
        assert!((g[0] - 4.0 / 3.0).abs() < 1e-15);
        let step = [0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let g = smooth_signal(&step, &box3).unwrap();
        assert!((g[2] - 1.0 / 3.0).abs() < 1e-15);
        assert!((g[3] - 2.0 / 3.0).abs() < 1e-15);
        assert!((g[4] - 1.0).abs() < 1e-15);
        assert!(smooth_signal(&step, &[]).is_err());
    }

    fn coeffs() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-1.0f64..1.0, 1..64)
    }

    proptest! {
        #[test]
        fn commutative(a in coeffs(), b in coeffs()) {
            prop_assert_eq!(conv_naive(&a, &b).unwrap(), conv_naive(&b, &a).unwrap());
            prop_assert!(max_abs(&conv_fft(&a, &b).unwrap(), &conv_fft(&b, &a).unwrap()) < 1e-12);
        }

        #[test]
        fn linear(a in coeffs(), bc in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..64), alpha in -3.0f64..3.0) {
            let b: Vec<f64> = bc.iter().map(|p| p.0).collect();
            let c: Vec<f64> = bc.iter().map(|p| p.1).collect();
            let mix: Vec<f64> = b.iter().zip(&c).map(|(x, y)| alpha * x + y).collect();
            for conv in [conv_naive, conv_fft] {
                let lhs = conv(&a, &mix).unwrap();
                let ab = conv(&a, &b).unwrap();
                let ac = conv(&a, &c).unwrap();
                let rhs: Vec<f64> = ab.iter().zip(&ac).map(|(x, y)| alpha * x + y).collect();
                prop_assert!(max_abs(&lhs, &rhs) < 1e-10);
            }
        }

        #[test]
        fn fft_matches_naive(a in coeffs(), b in coeffs()) {
            prop_assert!(max_abs(&conv_fft(&a, &b).unwrap(), &conv_naive(&a, &b).unwrap()) < 1e-12);
        }

        #[test]
        fn sum_preserves_mean(w1 in proptest::collection::vec(0.01f64..1.0, 1..20), w2 in proptest::collection::vec(0.01f64..1.0, 1..20)) {
            let p = DiscreteDistribution::from_weights(&w1).unwrap();
            let q = DiscreteDistribution::from_weights(&w2).unwrap();
            let s = distribution_sum(&p, &q).unwrap();
            prop_assert!((s.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!((s.index_mean() - p.index_mean() - q.index_mean()).abs() < 1e-10);
        }
    }
}
