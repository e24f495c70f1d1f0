//! Doubly-selective channels: Veh-A sampling, the oversampled time-domain
//! chain (pulse shaping, LTV channel, matched front end), discrete twisted
//! convolution, effective-channel probing and channel matrices.
//!
//! The time-domain chain runs on a buffer of at least `frames` consecutive
//! frames sampled at `Q·B`, centred on `t = 0`. The transmitted Zak pulse train
//! is infinite and periodic, so a windowed copy spanning several frames holds
//! the whole filtered signal; the receiver folds the decimated samples back
//! onto one period before the Zak transform. The buffer holds an odd number of
//! pulse slots so that no spectral sample falls on the band edge `|f| = B/2`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::ambiguity::BoxSpec;
use crate::error::{invalid, Result, ZakError};
use crate::filters::{FilterSpec, MatchedFilter};
use crate::grid::{cis_ratio, DDArray, GridParams, TDSequence, C64};
use crate::seed;
use crate::transforms::{dzt, idzt};

/// One propagation path of `h(τ,ν) = Σ hᵢ δ(τ−τᵢ) δ(ν−νᵢ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "PathJson", into = "PathJson")]
pub struct PathSpec {
    pub gain: C64,
    pub delay: f64,
    pub doppler: f64,
}

#[derive(Clone, Copy, Serialize, Deserialize)]
struct PathJson {
    gain_re: f64,
    gain_im: f64,
    delay_s: f64,
    doppler_hz: f64,
}

impl From<PathJson> for PathSpec {
    fn from(p: PathJson) -> Self {
        Self { gain: C64::new(p.gain_re, p.gain_im), delay: p.delay_s, doppler: p.doppler_hz }
    }
}

impl From<PathSpec> for PathJson {
    fn from(p: PathSpec) -> Self {
        Self { gain_re: p.gain.re, gain_im: p.gain.im, delay_s: p.delay, doppler_hz: p.doppler }
    }
}

/// A physical channel realization.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ChannelInstance {
    pub paths: Vec<PathSpec>,
}

impl ChannelInstance {
    pub fn new(paths: Vec<PathSpec>) -> Result<Self> {
        if let Some(p) = paths.iter().find(|p| !(p.delay >= 0.0)) {
            return Err(ZakError::InvalidChannel(format!("negative delay {}", p.delay)));
        }
        Ok(Self { paths })
    }
    pub fn identity() -> Self {
        Self { paths: vec![PathSpec { gain: C64::new(1.0, 0.0), delay: 0.0, doppler: 0.0 }] }
    }
    pub fn tau_max(&self) -> f64 {
        self.paths.iter().map(|p| p.delay).fold(0.0, f64::max)
    }
    pub fn nu_max(&self) -> f64 {
        self.paths.iter().map(|p| p.doppler.abs()).fold(0.0, f64::max)
    }
    /// `τ_max < τ_p` and `2ν_max < ν_p`.
    pub fn crystallization_holds(&self, grid: &GridParams) -> bool {
        self.tau_max() < grid.tau_p() && 2.0 * self.nu_max() < grid.nu_p()
    }
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }
    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s).map_err(|e| ZakError::InvalidChannel(e.to_string()))?;
        Self::new(c.paths)
    }
}

/// Veh-A delays in seconds.
pub const VEH_A_DELAYS: [f64; 6] = [0.0, 0.31e-6, 0.71e-6, 1.09e-6, 1.73e-6, 2.51e-6];
/// Veh-A relative powers in dB.
pub const VEH_A_POWERS_DB: [f64; 6] = [0.0, -1.0, -9.0, -10.0, -15.0, -20.0];

/// Complex Gaussian sample with variance `var`.
pub fn complex_gaussian<R: Rng>(rng: &mut R, var: f64) -> C64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re * s, im * s)
}

/// Veh-A realization with Rayleigh gains of unit total mean power and Jakes Dopplers.
pub fn sample_veh_a(nu_max: f64, rng_seed: u64) -> Result<ChannelInstance> {
    if !(nu_max >= 0.0) {
        return Err(invalid(format!("nu_max must be non-negative, got {nu_max}")));
    }
    let mut rng = seed::rng(rng_seed);
    let lin: Vec<f64> = VEH_A_POWERS_DB.iter().map(|d| 10f64.powf(d / 10.0)).collect();
    let total: f64 = lin.iter().sum();
    let angle = Uniform::new(0.0, 2.0 * PI).expect("valid range");
    let paths = VEH_A_DELAYS
        .iter()
        .zip(&lin)
        .map(|(&delay, &p)| {
            let gain = complex_gaussian(&mut rng, p / total);
            let theta: f64 = angle.sample(&mut rng);
            PathSpec { gain, delay, doppler: nu_max * theta.cos() }
        })
        .collect();
    Ok(ChannelInstance { paths })
}

/// Oversampled time-domain signal on a multi-frame buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct TdSignal {
    pub grid: GridParams,
    pub q: usize,
    pub frames: usize,
    pub samples: Vec<C64>,
}

impl TdSignal {
    /// Buffer index of `t = 0`.
    pub fn origin(&self) -> usize {
        origin(self.q, self.samples.len())
    }
    /// Sample time in seconds.
    pub fn time(&self, i: usize) -> f64 {
        (i as f64 - self.origin() as f64) / (self.q as f64 * self.grid.bandwidth())
    }
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v.norm_sqr()).sum()
    }
}

fn origin(q: usize, len: usize) -> usize {
    q * (len / q / 2)
}

/// Pulse slots in the buffer: at least `frames` frames and 512 slots, rounded up to odd.
fn pulse_slots(grid: &GridParams, frames: usize) -> usize {
    (frames * grid.mn()).max(512) | 1
}

/// Default minimum number of frames in the time-domain buffer.
pub const DEFAULT_FRAMES: usize = 4;
/// Default oversampling factor.
pub const DEFAULT_Q: usize = 16;

/// Precomputed transmit and receive stages for one filter and sampling setup.
pub struct TdChain {
    grid: GridParams,
    filter: FilterSpec,
    q: usize,
    frames: usize,
    spectrum: Vec<f64>,
    window: Vec<f64>,
    gain: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl TdChain {
    pub fn new(filter: FilterSpec, q: usize, frames: usize) -> Result<Self> {
        if q < 4 {
            return Err(invalid(format!("oversampling factor must be at least 4, got {q}")));
        }
        if frames == 0 {
            return Err(invalid("buffer must hold at least one frame"));
        }
        let grid = filter.grid;
        let len = q * pulse_slots(&grid, frames);
        let o = origin(q, len) as f64;
        let spectrum = (0..len)
            .map(|b| {
                let f = if b < len.div_ceil(2) { b as f64 } else { b as f64 - len as f64 };
                filter.delay_spectrum(f * q as f64 / len as f64)
            })
            .collect();
        let window = (0..len)
            .map(|i| filter.doppler_window((i as f64 - o) / (q * grid.mn()) as f64))
            .collect();
        let mut planner = FftPlanner::new();
        let mut chain = Self {
            grid,
            filter,
            q,
            frames,
            spectrum,
            window,
            gain: 1.0,
            fwd: planner.plan_fft_forward(len),
            inv: planner.plan_fft_inverse(len),
        };
        let probe = chain.receive(&chain.transmit(&DDArray::impulse(grid, 0, 0)));
        chain.gain = 1.0 / probe.get(0, 0).norm();
        Ok(chain)
    }

    pub fn grid(&self) -> &GridParams {
        &self.grid
    }
    pub fn filter(&self) -> &FilterSpec {
        &self.filter
    }
    pub fn q(&self) -> usize {
        self.q
    }
    pub fn frames(&self) -> usize {
        self.frames
    }
    fn len(&self) -> usize {
        self.spectrum.len()
    }

    fn filter_delay(&self, buf: &mut [C64]) {
        self.fwd.process(buf);
        let s = 1.0 / buf.len() as f64;
        for (v, g) in buf.iter_mut().zip(&self.spectrum) {
            *v *= g * s;
        }
        self.inv.process(buf);
    }

    /// Zak pulse train of `x`, windowed by the Doppler factor, then filtered by the delay factor.
    pub fn transmit(&self, x: &DDArray) -> TdSignal {
        let mn = self.grid.mn();
        let td = idzt(x);
        let o = origin(self.q, self.len());
        let mut buf = vec![C64::new(0.0, 0.0); self.len()];
        for (i, v) in buf.iter_mut().enumerate().skip(o % self.q).step_by(self.q) {
            let n = (i as i64 - o as i64) / self.q as i64;
            *v = td.as_slice()[n.rem_euclid(mn as i64) as usize] * self.window[i];
        }
        self.filter_delay(&mut buf);
        TdSignal { grid: self.grid, q: self.q, frames: self.frames, samples: buf }
    }

    /// Matched delay filter, conjugate Doppler window, decimation, folding onto one period and Zak transform.
    pub fn receive(&self, y: &TdSignal) -> DDArray {
        let mn = self.grid.mn();
        let mut buf = y.samples.clone();
        assert_eq!(buf.len(), self.len(), "signal does not match the chain buffer");
        self.filter_delay(&mut buf);
        let o = origin(self.q, self.len());
        let mut folded = vec![C64::new(0.0, 0.0); mn];
        for i in (o % self.q..buf.len()).step_by(self.q) {
            let n = (i as i64 - o as i64) / self.q as i64;
            folded[n.rem_euclid(mn as i64) as usize] += buf[i] * self.window[i];
        }
        let mut out = dzt(&TDSequence::new(self.grid, folded).expect("length MN"));
        out.scale(C64::new(self.gain, 0.0));
        out
    }
}

/// Oversampled transmit signal of `x` with the default buffer length.
pub fn shape_and_modulate(x: &DDArray, w_tx: &FilterSpec, q: usize) -> Result<TdSignal> {
    Ok(TdChain::new(w_tx.clone(), q, DEFAULT_FRAMES)?.transmit(x))
}

/// Matched-filter front end returning the DD array on the core.
pub fn receive_front_end(y: &TdSignal, w_rx: &MatchedFilter) -> Result<DDArray> {
    Ok(TdChain::new(w_rx.tx.clone(), y.q, y.frames)?.receive(y))
}

/// `y(t) = Σ hᵢ s(t − τᵢ) e^{j2πνᵢ(t−τᵢ)}` with delays rounded to the sample grid and wrapped over the buffer.
pub fn apply_ltv(s: &TdSignal, ch: &ChannelInstance) -> Result<TdSignal> {
    let t_frame = s.grid.duration();
    if let Some(p) = ch.paths.iter().find(|p| p.delay > t_frame) {
        return Err(ZakError::InvalidChannel(format!("delay {} exceeds the frame duration {}", p.delay, t_frame)));
    }
    let fs = s.q as f64 * s.grid.bandwidth();
    let len = s.samples.len();
    let mut out = vec![C64::new(0.0, 0.0); len];
    for p in &ch.paths {
        let d = (p.delay * fs).round() as usize;
        for (i, o) in out.iter_mut().enumerate() {
            let t = s.time(i);
            *o += p.gain * s.samples[(i + len - d % len) % len] * C64::from_polar(1.0, 2.0 * PI * p.doppler * (t - p.delay));
        }
    }
    Ok(TdSignal { samples: out, ..s.clone() })
}

/// Circular complex Gaussian noise of variance `sigma2` per entry, added in place.
pub fn add_noise_in_place(y: &mut [C64], sigma2: f64, rng_seed: u64) {
    if sigma2 <= 0.0 {
        return;
    }
    let mut rng = seed::rng(rng_seed);
    for v in y.iter_mut() {
        *v += complex_gaussian(&mut rng, sigma2);
    }
}

/// Noise variance giving a per-symbol SNR of `snr_db` for unit-energy symbols; zero for `+∞`.
pub fn noise_variance(snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        10f64.powf(-snr_db / 10.0)
    }
}

/// `y` plus AWGN at the given per-symbol SNR; `snr_db = +∞` leaves `y` unchanged.
pub fn add_awgn(y: &DDArray, snr_db: f64, rng_seed: u64) -> DDArray {
    let mut out = y.clone();
    add_noise_in_place(out.as_mut_slice(), noise_variance(snr_db), rng_seed);
    out
}

/// Discrete effective channel `h_eff[k,l]` with finite support.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveChannel {
    pub grid: GridParams,
    pub taps: BTreeMap<(i64, i64), C64>,
    pub window: BoxSpec,
}

/// Relative magnitude below which taps are pruned.
pub const TAP_FLOOR: f64 = 1e-7;

impl EffectiveChannel {
    /// Builds a channel from taps, pruning entries below `TAP_FLOOR` of the peak.
    pub fn new(grid: GridParams, taps: impl IntoIterator<Item = ((i64, i64), C64)>) -> Self {
        let mut map = BTreeMap::new();
        for (key, v) in taps {
            *map.entry(key).or_insert(C64::new(0.0, 0.0)) += v;
        }
        let peak = map.values().map(|v| v.norm()).fold(0.0, f64::max);
        map.retain(|_, v| v.norm() > TAP_FLOOR * peak && v.norm() > 0.0);
        let window = bounding_box(map.keys());
        Self { grid, taps: map, window }
    }

    pub fn identity(grid: GridParams) -> Self {
        Self::new(grid, [((0, 0), C64::new(1.0, 0.0))])
    }

    /// Taps of an on-grid physical channel: `h` at `(τB, νT)` for each path.
    pub fn from_on_grid(grid: GridParams, ch: &ChannelInstance) -> Self {
        Self::new(
            grid,
            ch.paths.iter().map(|p| {
                (((p.delay * grid.bandwidth()).round() as i64, (p.doppler * grid.duration()).round() as i64), p.gain)
            }),
        )
    }

    pub fn tap(&self, k: i64, l: i64) -> C64 {
        self.taps.get(&(k, l)).copied().unwrap_or_default()
    }

    pub fn energy(&self) -> f64 {
        self.taps.values().map(|v| v.norm_sqr()).sum()
    }
}

fn bounding_box<'a>(keys: impl Iterator<Item = &'a (i64, i64)>) -> BoxSpec {
    let mut b = BoxSpec { k_min: 0, k_max: 0, l_min: 0, l_max: 0 };
    for &(k, l) in keys {
        b.k_min = b.k_min.min(k);
        b.k_max = b.k_max.max(k);
        b.l_min = b.l_min.min(l);
        b.l_max = b.l_max.max(l);
    }
    b
}

/// `Y[k,l] = Σ h[a,b] X(k−a, l−b) e^{j2π(k−a)b/MN}` over the tap support, with `X` quasi-periodically extended.
pub fn twisted_conv(h: &EffectiveChannel, x: &DDArray) -> DDArray {
    let g = *x.grid();
    let mn = g.mn() as i128;
    DDArray::from_fn(g, |k, l| {
        h.taps
            .iter()
            .map(|(&(a, b), &v)| {
                let ks = k as i64 - a;
                v * x.quasi_extend(ks, l as i64 - b) * cis_ratio(ks as i128 * b as i128, mn)
            })
            .sum()
    })
}

/// Non-zero entries `(row, col, value)` of the DD channel matrix, duplicates summed.
pub fn channel_matrix_entries(h: &EffectiveChannel) -> Vec<(usize, usize, C64)> {
    let g = h.grid;
    let (m, n) = (g.m() as i64, g.n() as i64);
    let mn = g.mn() as i128;
    let mut acc: BTreeMap<(usize, usize), C64> = BTreeMap::new();
    for (&(a, b), &v) in &h.taps {
        for k in 0..m {
            let kp = (k + a).rem_euclid(m);
            let wraps = (kp - k - a).div_euclid(m);
            for l in 0..n {
                let lp = (l + b).rem_euclid(n);
                let phase = cis_ratio(wraps as i128 * l as i128, n as i128) * cis_ratio(b as i128 * (k + wraps * m) as i128, mn);
                *acc.entry(((kp * n + lp) as usize, (k * n + l) as usize)).or_default() += v * phase;
            }
        }
    }
    acc.into_iter().map(|((r, c), v)| (r, c, v)).collect()
}

/// Dense `MN×MN` channel matrix with `H·vec(X) = vec(twisted_conv(h, X))`.
pub fn build_channel_matrix(h: &EffectiveChannel) -> DMatrix<C64> {
    let mn = h.grid.mn();
    let mut mat = DMatrix::zeros(mn, mn);
    for (r, c, v) in channel_matrix_entries(h) {
        mat[(r, c)] += v;
    }
    mat
}

/// `MN×MN` matrix of the cyclic time-domain action `y = Σ h[k,l] x[n−k] e^{j2π l(n−k)/MN}`.
pub fn td_channel_matrix(h: &EffectiveChannel) -> DMatrix<C64> {
    let mn = h.grid.mn();
    let mut mat = DMatrix::zeros(mn, mn);
    for (&(k, l), &v) in &h.taps {
        for j in 0..mn {
            let row = (j as i64 + k).rem_euclid(mn as i64) as usize;
            mat[(row, j)] += v * cis_ratio(l as i128 * j as i128, mn as i128);
        }
    }
    mat
}

/// Default probe window: delays `[−4, ⌈τ_max B⌉+4]`, Dopplers `±(⌈ν_max T⌉+4)`.
pub fn default_probe_window(grid: &GridParams, ch: &ChannelInstance) -> BoxSpec {
    let kd = (ch.tau_max() * grid.bandwidth()).ceil() as i64;
    let ld = (ch.nu_max() * grid.duration()).ceil() as i64;
    let (m, n) = (grid.m() as i64, grid.n() as i64);
    let k_min = -(4.min((m - 1 - kd).max(0) / 2));
    let k_max = (kd + 4).min(k_min + m - 1);
    let lh = (ld + 4).min((n - 1) / 2);
    BoxSpec { k_min, k_max, l_min: -lh, l_max: lh }
}

fn check_window(grid: &GridParams, w: &BoxSpec) -> Result<()> {
    let dk = w.k_max - w.k_min + 1;
    let dl = w.l_max - w.l_min + 1;
    if w.k_min > w.k_max || w.l_min > w.l_max || dk > grid.m() as i64 || dl > grid.n() as i64 {
        return Err(invalid(format!(
            "window {}x{} exceeds the fundamental period {}x{}",
            dk,
            dl,
            grid.m(),
            grid.n()
        )));
    }
    Ok(())
}

/// Pilot position used by probing and pilot-based estimation.
pub fn pilot_position(grid: &GridParams) -> (usize, usize) {
    (grid.m() / 2, grid.n() / 2)
}

/// Reads `h[a,b] = Y(k_p+a, l_p+b) e^{−j2π k_p b/MN}` over `window`, as received for a unit pilot at `(k_p, l_p)`.
pub fn read_taps(y: &DDArray, pilot: (usize, usize), window: &BoxSpec) -> Result<EffectiveChannel> {
    let g = *y.grid();
    check_window(&g, window)?;
    let (kp, lp) = (pilot.0 as i64, pilot.1 as i64);
    let mn = g.mn() as i128;
    let taps = window
        .points()
        .into_iter()
        .map(|(a, b)| ((a, b), y.quasi_extend(kp + a, lp + b) * cis_ratio(-(kp as i128) * b as i128, mn)))
        .collect::<Vec<_>>();
    let mut h = EffectiveChannel::new(g, taps);
    h.window = *window;
    Ok(h)
}

/// Effective channel seen through `chain`, probed with a noiseless point pilot.
pub fn probe_with_chain(chain: &TdChain, ch: &ChannelInstance, window: Option<BoxSpec>) -> Result<EffectiveChannel> {
    let g = *chain.grid();
    let window = window.unwrap_or_else(|| default_probe_window(&g, ch));
    check_window(&g, &window)?;
    let p = pilot_position(&g);
    let y = chain.receive(&apply_ltv(&chain.transmit(&DDArray::impulse(g, p.0, p.1)), ch)?);
    read_taps(&y, p, &window)
}

/// Effective channel `w_rx ∗σ h ∗σ w_tx` sampled on the information grid.
pub fn probe_effective_channel(
    grid: &GridParams,
    w_tx: &FilterSpec,
    ch: &ChannelInstance,
    q: usize,
    window: Option<BoxSpec>,
) -> Result<EffectiveChannel> {
    if w_tx.grid != *grid {
        return Err(invalid("filter grid differs from the probe grid"));
    }
    probe_with_chain(&TdChain::new(w_tx.clone(), q, DEFAULT_FRAMES)?, ch, window)
}

/// Boundary handling of discrete time-domain channel action.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelAction {
    /// Delays wrap modulo `MN`.
    Cyclic,
    /// The sequence is zero outside one period; delayed energy beyond `MN` is dropped.
    ZeroPad,
}

/// `y[n] = Σ h[k,l] x[n−k] e^{j2π l(n−k)/MN}` on a length-`MN` sequence.
pub fn apply_discrete(x: &TDSequence, taps: &[((i64, i64), C64)], action: ChannelAction) -> TDSequence {
    let mn = x.len() as i64;
    let out = (0..mn)
        .map(|n| {
            taps.iter()
                .map(|&((k, l), h)| {
                    let src = n - k;
                    if action == ChannelAction::ZeroPad && !(0..mn).contains(&src) {
                        C64::new(0.0, 0.0)
                    } else {
                        h * x.at(src) * cis_ratio(l as i128 * src as i128, mn as i128)
                    }
                })
                .sum()
        })
        .collect();
    TDSequence::new(*x.grid(), out).expect("length MN")
}
