//! Frame geometry, quasi-periodic DD arrays and MN-periodic time sequences.

use std::f64::consts::PI;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub type C64 = Complex<f64>;

/// `exp(j 2π num / den)` with the ratio reduced exactly before conversion to floating point.
pub fn cis_ratio(num: i128, den: i128) -> C64 {
    debug_assert!(den > 0);
    let r = num.rem_euclid(den);
    C64::from_polar(1.0, 2.0 * PI * (r as f64) / (den as f64))
}

/// Delay-Doppler frame geometry. Only `M`, `N` and `nu_p` are stored.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    m: usize,
    n: usize,
    nu_p: f64,
}

impl GridParams {
    pub fn new(m: usize, n: usize, nu_p: f64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(invalid(format!("grid dimensions must be positive (M={m}, N={n})")));
        }
        if !(nu_p > 0.0 && nu_p.is_finite()) {
            return Err(invalid(format!("Doppler period must be positive, got {nu_p}")));
        }
        Ok(Self { m, n, nu_p })
    }

    /// Grid with unit Doppler period, for purely discrete work.
    pub fn discrete(m: usize, n: usize) -> Result<Self> {
        Self::new(m, n, 1.0)
    }

    pub fn m(&self) -> usize {
        self.m
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn mn(&self) -> usize {
        self.m * self.n
    }
    /// Doppler period in Hz.
    pub fn nu_p(&self) -> f64 {
        self.nu_p
    }
    /// Delay period in seconds.
    pub fn tau_p(&self) -> f64 {
        1.0 / self.nu_p
    }
    /// Bandwidth `B = M nu_p`.
    pub fn bandwidth(&self) -> f64 {
        self.m as f64 * self.nu_p
    }
    /// Frame duration `T = N tau_p`.
    pub fn duration(&self) -> f64 {
        self.n as f64 / self.nu_p
    }
    /// Delay bin width `1/B`.
    pub fn delay_res(&self) -> f64 {
        1.0 / self.bandwidth()
    }
    /// Doppler bin width `1/T`.
    pub fn doppler_res(&self) -> f64 {
        1.0 / self.duration()
    }
}

pub fn make_grid(m: usize, n: usize, nu_p: f64) -> Result<GridParams> {
    GridParams::new(m, n, nu_p)
}

/// An M×N complex array on the fundamental period, extended quasi-periodically.
#[derive(Clone, Debug, PartialEq)]
pub struct DDArray {
    grid: GridParams,
    data: Vec<C64>,
}

impl DDArray {
    pub fn zeros(grid: GridParams) -> Self {
        Self { grid, data: vec![C64::new(0.0, 0.0); grid.mn()] }
    }

    pub fn from_fn(grid: GridParams, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let (m, n) = (grid.m(), grid.n());
        let mut data = Vec::with_capacity(m * n);
        for k in 0..m {
            for l in 0..n {
                data.push(f(k, l));
            }
        }
        Self { grid, data }
    }

    /// Unit impulse at `(k0, l0)` of the core.
    pub fn impulse(grid: GridParams, k0: usize, l0: usize) -> Self {
        let mut x = Self::zeros(grid);
        x.set(k0 % grid.m(), l0 % grid.n(), C64::new(1.0, 0.0));
        x
    }

    pub fn grid(&self) -> &GridParams {
        &self.grid
    }
    pub fn get(&self, k: usize, l: usize) -> C64 {
        self.data[k * self.grid.n() + l]
    }
    pub fn set(&mut self, k: usize, l: usize, v: C64) {
        let n = self.grid.n();
        self.data[k * n + l] = v;
    }
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }
    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    /// Value forced at any integer `(k, l)` by quasi-periodicity.
    pub fn quasi_extend(&self, k: i64, l: i64) -> C64 {
        let (m, n) = (self.grid.m() as i64, self.grid.n() as i64);
        let km = k.rem_euclid(m);
        let lm = l.rem_euclid(n);
        let wraps = k.div_euclid(m);
        let v = self.data[(km * n + lm) as usize];
        if wraps == 0 || lm == 0 {
            v
        } else {
            v * cis_ratio(wraps as i128 * lm as i128, n as i128)
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `⟨self, other⟩ = Σ self · conj(other)`.
    pub fn inner(&self, other: &DDArray) -> C64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b.conj()).sum()
    }

    pub fn scale(&mut self, s: C64) {
        self.data.iter_mut().for_each(|z| *z *= s);
    }
}

/// `v[kN + l] = X[k, l]`.
pub fn dd_to_vector(x: &DDArray) -> Vec<C64> {
    x.data.clone()
}

pub fn vector_to_dd(v: &[C64], grid: GridParams) -> Result<DDArray> {
    if v.len() != grid.mn() {
        return Err(invalid(format!("vector length {} does not match MN = {}", v.len(), grid.mn())));
    }
    Ok(DDArray { grid, data: v.to_vec() })
}

/// One period of an MN-periodic sequence sampled at rate `B`.
#[derive(Clone, Debug, PartialEq)]
pub struct TDSequence {
    grid: GridParams,
    samples: Vec<C64>,
}

impl TDSequence {
    pub fn new(grid: GridParams, samples: Vec<C64>) -> Result<Self> {
        if samples.len() != grid.mn() {
            return Err(invalid(format!("sequence length {} does not match MN = {}", samples.len(), grid.mn())));
        }
        Ok(Self { grid, samples })
    }

    pub fn zeros(grid: GridParams) -> Self {
        Self { grid, samples: vec![C64::new(0.0, 0.0); grid.mn()] }
    }

    pub fn grid(&self) -> &GridParams {
        &self.grid
    }
    pub fn len(&self) -> usize {
        self.samples.len()
    }
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
    pub fn as_slice(&self) -> &[C64] {
        &self.samples
    }
    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.samples
    }
    pub fn into_vec(self) -> Vec<C64> {
        self.samples
    }

    /// Sample at any integer index, read periodically.
    pub fn at(&self, n: i64) -> C64 {
        self.samples[n.rem_euclid(self.samples.len() as i64) as usize]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `⟨self, other⟩ = Σ self · conj(other)`.
    pub fn inner(&self, other: &TDSequence) -> C64 {
        self.samples.iter().zip(&other.samples).map(|(a, b)| a * b.conj()).sum()
    }

    pub fn scaled(&self, s: C64) -> TDSequence {
        TDSequence { grid: self.grid, samples: self.samples.iter().map(|z| z * s).collect() }
    }

    pub fn add(&self, other: &TDSequence) -> TDSequence {
        TDSequence {
            grid: self.grid,
            samples: self.samples.iter().zip(&other.samples).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn normalized(&self) -> TDSequence {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 {
            self.clone()
        } else {
            self.scaled(C64::new(1.0 / n, 0.0))
        }
    }
}
