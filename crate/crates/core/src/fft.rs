//! Small DFT engine with an explicit complex-multiply counter.
//!
//! Used by the fast pulsone ambiguity path, whose cost is asserted by tests.
//! Radix-2 for powers of two, direct evaluation for short odd lengths and
//! Bluestein's chirp-z otherwise.

use std::f64::consts::PI;

use crate::grid::C64;

enum Plan {
    Radix2 { twiddles: Vec<C64>, bitrev: Vec<usize> },
    Direct { table: Vec<C64> },
    Bluestein { chirp: Vec<C64>, kernel_hat: Vec<C64>, inner: Box<CountedDft> },
}

/// Forward DFT `X[f] = Σ x[t] e^{-j2π f t / n}` of a fixed length.
pub(crate) struct CountedDft {
    n: usize,
    plan: Plan,
}

fn direct_threshold(n: usize) -> bool {
    (n as f64) <= 8.0 * (n as f64).log2()
}

impl CountedDft {
    pub(crate) fn new(n: usize) -> Self {
        assert!(n >= 1);
        let plan = if n.is_power_of_two() {
            let bits = n.trailing_zeros();
            let bitrev = (0..n)
                .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
                .collect();
            let twiddles = (0..n / 2).map(|t| C64::from_polar(1.0, -2.0 * PI * t as f64 / n as f64)).collect();
            Plan::Radix2 { twiddles, bitrev }
        } else if direct_threshold(n) {
            let table = (0..n).map(|t| C64::from_polar(1.0, -2.0 * PI * t as f64 / n as f64)).collect();
            Plan::Direct { table }
        } else {
            let len = (2 * n - 1).next_power_of_two();
            let chirp: Vec<C64> = (0..n)
                .map(|t| {
                    let r = ((t as u128 * t as u128) % (2 * n as u128)) as f64;
                    C64::from_polar(1.0, -PI * r / n as f64)
                })
                .collect();
            let mut kernel = vec![C64::new(0.0, 0.0); len];
            kernel[0] = chirp[0].conj();
            for t in 1..n {
                kernel[t] = chirp[t].conj();
                kernel[len - t] = chirp[t].conj();
            }
            let inner = Box::new(CountedDft::new(len));
            let mut dummy = 0;
            inner.forward(&mut kernel, &mut dummy);
            Plan::Bluestein { chirp, kernel_hat: kernel, inner }
        };
        Self { n, plan }
    }

    pub(crate) fn len(&self) -> usize {
        self.n
    }

    /// In-place forward transform; adds the number of complex multiplies to `count`.
    pub(crate) fn forward(&self, x: &mut [C64], count: &mut u64) {
        assert_eq!(x.len(), self.n);
        match &self.plan {
            Plan::Radix2 { twiddles, bitrev } => {
                let n = self.n;
                for i in 0..n {
                    let j = bitrev[i];
                    if j > i {
                        x.swap(i, j);
                    }
                }
                let mut size = 2;
                while size <= n {
                    let half = size / 2;
                    let step = n / size;
                    for start in (0..n).step_by(size) {
                        for t in 0..half {
                            let w = twiddles[t * step];
                            let a = x[start + t];
                            let b = x[start + t + half] * w;
                            x[start + t] = a + b;
                            x[start + t + half] = a - b;
                        }
                    }
                    *count += (n / 2) as u64;
                    size *= 2;
                }
            }
            Plan::Direct { table } => {
                let n = self.n;
                let input = x.to_vec();
                for (f, out) in x.iter_mut().enumerate() {
                    let mut acc = C64::new(0.0, 0.0);
                    for (t, v) in input.iter().enumerate() {
                        acc += v * table[(f * t) % n];
                    }
                    *out = acc;
                }
                *count += (n * n) as u64;
            }
            Plan::Bluestein { chirp, kernel_hat, inner } => {
                let n = self.n;
                let len = inner.len();
                let mut buf = vec![C64::new(0.0, 0.0); len];
                for t in 0..n {
                    buf[t] = x[t] * chirp[t];
                }
                inner.forward(&mut buf, count);
                for (b, k) in buf.iter_mut().zip(kernel_hat) {
                    *b *= k;
                }
                // Inverse via conjugation.
                buf.iter_mut().for_each(|b| *b = b.conj());
                inner.forward(&mut buf, count);
                let scale = 1.0 / len as f64;
                for f in 0..n {
                    x[f] = buf[f].conj() * chirp[f] * scale;
                }
                *count += (len + 2 * n) as u64;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(x: &[C64]) -> Vec<C64> {
        let n = x.len();
        (0..n)
            .map(|f| {
                x.iter()
                    .enumerate()
                    .map(|(t, v)| v * C64::from_polar(1.0, -2.0 * PI * ((f * t) % n) as f64 / n as f64))
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft_for_all_plan_kinds() {
        for n in [1usize, 2, 3, 5, 8, 16, 37, 45, 64, 97, 100] {
            let x: Vec<C64> = (0..n).map(|i| C64::new((i as f64).sin(), (3.0 * i as f64).cos())).collect();
            let mut y = x.clone();
            let mut count = 0;
            CountedDft::new(n).forward(&mut y, &mut count);
            let r = naive(&x);
            let err = y.iter().zip(&r).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-9 * (n as f64), "n={n} err={err}");
        }
    }

    #[test]
    fn radix2_count_is_half_n_log_n() {
        let mut x = vec![C64::new(1.0, 0.0); 16];
        let mut count = 0;
        CountedDft::new(16).forward(&mut x, &mut count);
        assert_eq!(count, 8 * 4);
    }
}
