//! Separable delay-Doppler pulse-shaping filters.
//!
//! Every filter factors as `w(τ,ν) = w₁(τ) w₂(ν)` with `w₁(τ) = √B g₁(Bτ)` and
//! `w₂(ν) = √T g₂(Tν)`, each factor of unit energy. The time-domain chain uses
//! the Fourier transforms `ĝ₁` (delay-factor spectrum) and `ĝ₂` (Doppler-factor
//! time window), which are available in closed form for every family.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::grid::{GridParams, C64};

/// Gaussian shape giving no bandwidth or time expansion.
pub const GAUSSIAN_ALPHA: f64 = 1.584;
/// Gaussian-sinc shape and normalization giving no bandwidth or time expansion.
pub const GAUSSIAN_SINC_ALPHA: f64 = 0.044;
pub const GAUSSIAN_SINC_OMEGA: f64 = 1.0278;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FilterFamily {
    Sinc,
    Rrc { beta_tau: f64, beta_nu: f64 },
    Gaussian { alpha_tau: f64, alpha_nu: f64 },
    GaussianSinc { alpha_tau: f64, alpha_nu: f64, omega_tau: f64, omega_nu: f64 },
    /// Coefficients of the even-order terms `φ₀, φ₂, φ₄, …`; widths are relative to `Bτ` and `Tν`.
    Hermite { c: Vec<f64>, d: Vec<f64>, sigma_tau: f64, sigma_nu: f64 },
}

impl FilterFamily {
    pub fn rrc(beta: f64) -> Self {
        Self::Rrc { beta_tau: beta, beta_nu: beta }
    }
    pub fn gaussian() -> Self {
        Self::Gaussian { alpha_tau: GAUSSIAN_ALPHA, alpha_nu: GAUSSIAN_ALPHA }
    }
    pub fn gaussian_sinc() -> Self {
        Self::GaussianSinc {
            alpha_tau: GAUSSIAN_SINC_ALPHA,
            alpha_nu: GAUSSIAN_SINC_ALPHA,
            omega_tau: GAUSSIAN_SINC_OMEGA,
            omega_nu: GAUSSIAN_SINC_OMEGA,
        }
    }
    /// Three even terms with equal weights, unit energy, and the `n = 0` width matched to the Gaussian.
    pub fn hermite_default() -> Self {
        let c = vec![1.0 / 3f64.sqrt(); 3];
        let sigma = (2.0 * GAUSSIAN_ALPHA).sqrt();
        Self::Hermite { c: c.clone(), d: c, sigma_tau: sigma, sigma_nu: sigma }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Sinc => "sinc",
            Self::Rrc { .. } => "rrc",
            Self::Gaussian { .. } => "gaussian",
            Self::GaussianSinc { .. } => "gaussian_sinc",
            Self::Hermite { .. } => "hermite",
        }
    }
}

/// A filter bound to a grid, with truncation half-widths for sampled use.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub family: FilterFamily,
    pub grid: GridParams,
    pub trunc_delay_bins: usize,
    pub trunc_doppler_bins: usize,
}

impl FilterSpec {
    pub fn new(family: FilterFamily, grid: GridParams) -> Self {
        Self { family, grid, trunc_delay_bins: 4, trunc_doppler_bins: 4 }
    }
}

#[derive(Clone, Copy)]
enum Axis {
    Delay,
    Doppler,
}

pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Root-raised-cosine pulse with roll-off `beta`, removable singularities filled by their limits.
pub fn rrc(beta: f64, x: f64) -> f64 {
    if beta == 0.0 {
        return sinc(x);
    }
    if x.abs() < 1e-12 {
        return 1.0 - beta + 4.0 * beta / PI;
    }
    let q = 4.0 * beta * x;
    if (q.abs() - 1.0).abs() < 1e-10 {
        let a = PI / (4.0 * beta);
        return beta / SQRT_2 * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    ((PI * x * (1.0 - beta)).sin() + q * (PI * x * (1.0 + beta)).cos()) / (PI * x * (1.0 - q * q))
}

/// Spectrum of [`rrc`]: flat passband, cosine roll-off, `1/√2` at `|u| = 1/2`.
pub fn rrc_spectrum(beta: f64, u: f64) -> f64 {
    let a = u.abs();
    let lo = (1.0 - beta) / 2.0;
    let hi = (1.0 + beta) / 2.0;
    if beta == 0.0 {
        return if a < 0.5 {
            1.0
        } else if a == 0.5 {
            1.0 / SQRT_2
        } else {
            0.0
        };
    }
    if a <= lo {
        1.0
    } else if a <= hi {
        (PI / (2.0 * beta) * (a - lo)).cos()
    } else {
        0.0
    }
}

/// Normalized Hermite function `π^{-1/4} (2ⁿ n!)^{-1/2} Hₙ(x) e^{-x²/2}` for all orders up to `nmax`.
pub fn hermite_functions(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(nmax + 1);
    let p0 = PI.powf(-0.25) * (-x * x / 2.0).exp();
    out.push(p0);
    if nmax >= 1 {
        out.push(SQRT_2 * x * p0);
    }
    for n in 1..nmax {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}

fn hermite_sum(coef: &[f64], sigma: f64, x: f64) -> f64 {
    if coef.is_empty() {
        return 0.0;
    }
    let h = hermite_functions(2 * (coef.len() - 1), sigma * x);
    sigma.sqrt() * coef.iter().enumerate().map(|(i, c)| c * h[2 * i]).sum::<f64>()
}

fn hermite_sum_spectrum(coef: &[f64], sigma: f64, u: f64) -> f64 {
    if coef.is_empty() {
        return 0.0;
    }
    let h = hermite_functions(2 * (coef.len() - 1), 2.0 * PI * u / sigma);
    let scale = (2.0 * PI).sqrt() / sigma.sqrt();
    scale
        * coef
            .iter()
            .enumerate()
            .map(|(i, c)| if i % 2 == 0 { c * h[2 * i] } else { -c * h[2 * i] })
            .sum::<f64>()
}

impl FilterSpec {
    /// Normalized factor `g(x)` on one axis (`x = Bτ` or `x = Tν`).
    fn shape(&self, axis: Axis, x: f64) -> f64 {
        let pick = |a: f64, b: f64| match axis {
            Axis::Delay => a,
            Axis::Doppler => b,
        };
        match &self.family {
            FilterFamily::Sinc => sinc(x),
            FilterFamily::Rrc { beta_tau, beta_nu } => rrc(pick(*beta_tau, *beta_nu), x),
            FilterFamily::Gaussian { alpha_tau, alpha_nu } => {
                let a = pick(*alpha_tau, *alpha_nu);
                (2.0 * a / PI).powf(0.25) * (-a * x * x).exp()
            }
            FilterFamily::GaussianSinc { alpha_tau, alpha_nu, omega_tau, omega_nu } => {
                let a = pick(*alpha_tau, *alpha_nu);
                pick(*omega_tau, *omega_nu) * sinc(x) * (-a * x * x).exp()
            }
            FilterFamily::Hermite { c, d, sigma_tau, sigma_nu } => match axis {
                Axis::Delay => hermite_sum(c, *sigma_tau, x),
                Axis::Doppler => hermite_sum(d, *sigma_nu, x),
            },
        }
    }

    /// Fourier transform `ĝ(u) = ∫ g(x) e^{-j2πux} dx` of the normalized factor.
    fn shape_spectrum(&self, axis: Axis, u: f64) -> f64 {
        let pick = |a: f64, b: f64| match axis {
            Axis::Delay => a,
            Axis::Doppler => b,
        };
        match &self.family {
            FilterFamily::Sinc => rrc_spectrum(0.0, u),
            FilterFamily::Rrc { beta_tau, beta_nu } => rrc_spectrum(pick(*beta_tau, *beta_nu), u),
            FilterFamily::Gaussian { alpha_tau, alpha_nu } => {
                let a = pick(*alpha_tau, *alpha_nu);
                (2.0 * a / PI).powf(0.25) * (PI / a).sqrt() * (-PI * PI * u * u / a).exp()
            }
            FilterFamily::GaussianSinc { alpha_tau, alpha_nu, omega_tau, omega_nu } => {
                let a = pick(*alpha_tau, *alpha_nu);
                let s = a.sqrt();
                pick(*omega_tau, *omega_nu) * 0.5 * (libm::erf(PI * (u + 0.5) / s) - libm::erf(PI * (u - 0.5) / s))
            }
            FilterFamily::Hermite { c, d, sigma_tau, sigma_nu } => match axis {
                Axis::Delay => hermite_sum_spectrum(c, *sigma_tau, u),
                Axis::Doppler => hermite_sum_spectrum(d, *sigma_nu, u),
            },
        }
    }

    /// Delay factor `w₁(τ)`.
    pub fn delay_factor(&self, tau: f64) -> f64 {
        let b = self.grid.bandwidth();
        b.sqrt() * self.shape(Axis::Delay, b * tau)
    }

    /// Doppler factor `w₂(ν)`.
    pub fn doppler_factor(&self, nu: f64) -> f64 {
        let t = self.grid.duration();
        t.sqrt() * self.shape(Axis::Doppler, t * nu)
    }

    /// Normalized delay-factor spectrum at `u = f/B`.
    pub fn delay_spectrum(&self, u: f64) -> f64 {
        self.shape_spectrum(Axis::Delay, u)
    }

    /// Normalized Doppler-factor time window at `u = t/T`.
    pub fn doppler_window(&self, u: f64) -> f64 {
        self.shape_spectrum(Axis::Doppler, u)
    }

    /// Support half-width, in units of `u`, outside which both spectra are negligible.
    pub fn spectral_half_width(&self) -> f64 {
        match &self.family {
            FilterFamily::Sinc => 0.5,
            FilterFamily::Rrc { beta_tau, beta_nu } => (1.0 + beta_tau.max(*beta_nu)) / 2.0,
            FilterFamily::Gaussian { alpha_tau, alpha_nu } => 2.5 * alpha_tau.max(*alpha_nu).sqrt(),
            FilterFamily::GaussianSinc { alpha_tau, alpha_nu, .. } => 0.5 + 2.5 * alpha_tau.max(*alpha_nu).sqrt(),
            FilterFamily::Hermite { c, d, sigma_tau, sigma_nu } => {
                let n = 2.0 * (c.len().max(d.len()) as f64);
                (n + 12.0).sqrt() * sigma_tau.max(*sigma_nu) / (2.0 * PI) * 1.5
            }
        }
    }
}

/// `w(τ,ν)`.
pub fn eval_filter(spec: &FilterSpec, tau: f64, nu: f64) -> C64 {
    C64::new(spec.delay_factor(tau) * spec.doppler_factor(nu), 0.0)
}

/// Evaluator of the matched receive filter `w_rx(τ,ν) = conj(w_tx(−τ,−ν)) e^{j2πντ}`.
#[derive(Clone, Debug)]
pub struct MatchedFilter {
    pub tx: FilterSpec,
}

impl MatchedFilter {
    pub fn eval(&self, tau: f64, nu: f64) -> C64 {
        eval_filter(&self.tx, -tau, -nu).conj() * C64::from_polar(1.0, 2.0 * PI * nu * tau)
    }
}

pub fn matched_filter(spec: &FilterSpec) -> MatchedFilter {
    MatchedFilter { tx: spec.clone() }
}

/// Quality metrics of a filter.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FilterMetrics {
    pub orthogonality_residual: f64,
    pub max_sidelobe_db: f64,
    pub band_energy_fraction: f64,
    pub time_energy_fraction: f64,
}

/// Sub-samples per bin used by the metric quadratures.
pub const QUAD_OVERSAMPLE: usize = 16;
const QUAD_SPAN_BINS: usize = 256;

/// Normalized autocorrelation `⟨g, g(·−a)⟩/‖g‖²` at integer `a`, by trapezoidal quadrature of `|ĝ|²`.
/// The integrand oscillates `a` times per unit of `u`, so the step shrinks with `max_shift`.
fn lattice_autocorr(spec: &FilterSpec, axis: Axis, a: i64, max_shift: i64) -> f64 {
    let half = spec.spectral_half_width().max(0.5) + 1.0;
    let per_unit = QUAD_OVERSAMPLE * max_shift.max(1) as usize;
    let steps = (2.0 * half).ceil() as usize * per_unit;
    let half = (2.0 * half).ceil() / 2.0;
    let h = 2.0 * half / steps as f64;
    let mut num = C64::new(0.0, 0.0);
    let mut den = 0.0;
    for i in 0..=steps {
        let u = -half + i as f64 * h;
        let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
        let p = spec.shape_spectrum(axis, u).powi(2) * w;
        num += C64::from_polar(p, 2.0 * PI * u * a as f64);
        den += p;
    }
    (num / den).norm()
}

/// Fraction of the factor's energy in `|u| ≤ 1/2` of its spectrum, from a fine-grid DFT of time samples.
fn in_band_fraction(spec: &FilterSpec, axis: Axis) -> f64 {
    let q = QUAD_OVERSAMPLE;
    let len = 2 * QUAD_SPAN_BINS * q;
    let mut buf: Vec<C64> = (0..len)
        .map(|i| {
            let x = (i as f64 - (len / 2) as f64) / q as f64;
            C64::new(spec.shape(axis, x), 0.0)
        })
        .collect();
    rustfft::FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let df = q as f64 / len as f64;
    let mut inside = 0.0;
    let mut total = 0.0;
    for (i, v) in buf.iter().enumerate() {
        let f = if i <= len / 2 { i as f64 } else { i as f64 - len as f64 } * df;
        let e = v.norm_sqr();
        total += e;
        if f.abs() < 0.5 - 1e-12 {
            inside += e;
        } else if (f.abs() - 0.5).abs() <= 1e-12 {
            inside += 0.5 * e;
        }
    }
    inside / total
}

fn max_sidelobe_db(spec: &FilterSpec) -> f64 {
    let q = QUAD_OVERSAMPLE;
    let span = 16 * q;
    let mags: Vec<f64> = (0..=span).map(|i| spec.shape(Axis::Delay, i as f64 / q as f64).abs()).collect();
    let peak = mags[0];
    let mut i = 1;
    while i < mags.len() && mags[i] <= mags[i - 1] {
        i += 1;
    }
    if i >= mags.len() {
        return f64::NEG_INFINITY;
    }
    let side = mags[i - 1..].iter().cloned().fold(0.0, f64::max);
    20.0 * (side / peak).log10()
}

pub fn filter_metrics(spec: &FilterSpec) -> FilterMetrics {
    let (m, n) = (spec.grid.m() as i64, spec.grid.n() as i64);
    let delay = (1..=3 * m).map(|a| lattice_autocorr(spec, Axis::Delay, a, 3 * m)).fold(0.0, f64::max);
    let doppler = (1..=3 * n).map(|b| lattice_autocorr(spec, Axis::Doppler, b, 3 * n)).fold(0.0, f64::max);
    FilterMetrics {
        orthogonality_residual: delay.max(doppler),
        max_sidelobe_db: max_sidelobe_db(spec),
        band_energy_fraction: in_band_fraction(spec, Axis::Delay),
        time_energy_fraction: in_band_fraction(spec, Axis::Doppler),
    }
}

/// Delay cross-section `(Bτ, |w₁(τ)|/|w₁(0)|)` sampled `per_bin` times per bin over `±half_bins`.
pub fn delay_cross_section(spec: &FilterSpec, half_bins: usize, per_bin: usize) -> Vec<(f64, f64)> {
    let n = (2 * half_bins * per_bin) as i64;
    let peak = spec.delay_factor(0.0).abs();
    (0..=n)
        .map(|i| {
            let x = (i - n / 2) as f64 / per_bin as f64;
            (x, spec.delay_factor(x / spec.grid.bandwidth()).abs() / peak)
        })
        .collect()
}
