//! Frame-level signaling schemes.
//!
//! * Differential communication: detected data frames double as pilots
//!   ([`estimate_from_data`], [`differential_run`]).
//! * MUB faster-than-Nyquist: two TCM-coded frames superposed on mutually
//!   unbiased bases, detected by SIC with turbo iterations ([`MubSystem`]).
//! * The effective-rate model, the interference bound on `δ` and ARQ throughput.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ambiguity::{cross_ambiguity, BoxSpec};
use crate::channel::{
    add_noise_in_place, default_probe_window, noise_variance, pilot_position, read_taps, td_channel_matrix,
    twisted_conv, ChannelInstance, EffectiveChannel,
};
use crate::error::{invalid, Result};
use crate::grid::{vector_to_dd, DDArray, GridParams, TDSequence, C64};
use crate::rxchain::{count_bit_errors, equalize_dd_frame, qam_demap, qam_map, qr_precode, random_bits, rx_combine};
use crate::seed;
use crate::transforms::{gdaft_matrix, idzt, SymplecticParams};

/// Channel estimate from a detected frame: `A_{y,x̂}[k,l] / Σ|x̂|²` over `window`.
pub fn estimate_from_data(y: &TDSequence, x_hat: &TDSequence, window: &BoxSpec) -> Result<EffectiveChannel> {
    if y.grid() != x_hat.grid() {
        return Err(invalid("received and detected frames are on different grids"));
    }
    let e = x_hat.norm_sqr();
    if e == 0.0 {
        return Err(invalid("detected frame has zero energy"));
    }
    let surf = cross_ambiguity(y, x_hat, &window.points());
    let mut h = EffectiveChannel::new(*y.grid(), surf.iter().map(|(&kl, &v)| (kl, v / e)));
    h.window = *window;
    Ok(h)
}

/// `Σ|ĥ − h|² / Σ|h|²` over the union of both supports.
pub fn tap_nmse(est: &EffectiveChannel, truth: &EffectiveChannel) -> f64 {
    let mut err: f64 = est.taps.iter().map(|(&(k, l), &v)| (v - truth.tap(k, l)).norm_sqr()).sum();
    err += truth.taps.iter().filter(|(kl, _)| !est.taps.contains_key(kl)).map(|(_, v)| v.norm_sqr()).sum::<f64>();
    err / truth.energy()
}

pub const DEFAULT_PILOT_PERIOD: usize = 30;

/// Forced symbol errors in one data frame before it is reused as a pilot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorInjection {
    pub frame: usize,
    pub rate: f64,
}

/// Differential run over a slowly varying channel.
///
/// Frames follow the pattern pilot, `pilot_period` data frames, pilot, ...
/// Path gains are fixed and rotate by `exp(j2π ν_i · frame_interval)` per frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DifferentialConfig {
    pub grid: GridParams,
    pub channel: ChannelInstance,
    pub n_frames: usize,
    pub pilot_period: usize,
    pub snr_db: f64,
    pub frame_interval: f64,
    pub window: Option<BoxSpec>,
    pub seed: u64,
    pub inject: Option<ErrorInjection>,
}

impl DifferentialConfig {
    pub fn new(grid: GridParams, channel: ChannelInstance, n_frames: usize, snr_db: f64, seed: u64) -> Self {
        Self {
            grid,
            channel,
            n_frames,
            pilot_period: DEFAULT_PILOT_PERIOD,
            snr_db,
            frame_interval: grid.duration(),
            window: None,
            seed,
            inject: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pilot_period == 0 {
            return Err(invalid("pilot_period must be at least 1"));
        }
        if !(self.frame_interval >= 0.0) {
            return Err(invalid("frame_interval must be non-negative"));
        }
        if let Some(inj) = self.inject {
            if !(0.0..=1.0).contains(&inj.rate) {
                return Err(invalid("injected error rate must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    /// On-grid taps of frame `f`.
    pub fn frame_channel(&self, f: usize) -> EffectiveChannel {
        let g = self.grid;
        let t = f as f64 * self.frame_interval;
        EffectiveChannel::new(
            g,
            self.channel.paths.iter().map(|p| {
                let kl = ((p.delay * g.bandwidth()).round() as i64, (p.doppler * g.duration()).round() as i64);
                (kl, p.gain * C64::from_polar(1.0, 2.0 * PI * p.doppler * t))
            }),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameKind {
    Pilot,
    Data,
}

/// Per-frame outcome. For data frames `tap_nmse` scores the estimate used
/// to detect the frame; for pilot frames it scores the fresh pilot estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub index: usize,
    pub kind: FrameKind,
    pub estimate_source: FrameKind,
    pub ber: Option<f64>,
    pub perfect_csi_ber: Option<f64>,
    pub tap_nmse: f64,
}

/// Pilot frame, then data frames each detected with the estimate from the
/// previous frame and re-estimated from their own decisions.
pub fn differential_run(cfg: &DifferentialConfig) -> Result<Vec<FrameReport>> {
    cfg.validate()?;
    let g = cfg.grid;
    let mn = g.mn();
    let sigma2 = noise_variance(cfg.snr_db);
    let window = cfg.window.unwrap_or_else(|| default_probe_window(&g, &cfg.channel));
    let pilot = pilot_position(&g);
    let amp = (mn as f64).sqrt();
    let mut held: Option<(EffectiveChannel, FrameKind)> = None;
    let mut out = Vec::with_capacity(cfg.n_frames);
    for f in 0..cfg.n_frames {
        let truth = cfg.frame_channel(f);
        let fs = |i: u64| seed::derive_seed(cfg.seed, 4 * f as u64 + i);
        if f % (cfg.pilot_period + 1) == 0 {
            let mut x = DDArray::zeros(g);
            x.set(pilot.0, pilot.1, C64::new(amp, 0.0));
            let mut y = twisted_conv(&truth, &x);
            add_noise_in_place(y.as_mut_slice(), sigma2, fs(1));
            y.scale(C64::new(1.0 / amp, 0.0));
            let h = read_taps(&y, pilot, &window)?;
            out.push(FrameReport {
                index: f,
                kind: FrameKind::Pilot,
                estimate_source: FrameKind::Pilot,
                ber: None,
                perfect_csi_ber: None,
                tap_nmse: tap_nmse(&h, &truth),
            });
            held = Some((h, FrameKind::Pilot));
            continue;
        }
        let (h, source) = held.take().expect("frame 0 is a pilot frame");
        let bits = random_bits(&mut seed::rng(fs(0)), 2 * mn);
        let x = vector_to_dd(&qam_map(&bits)?, g)?;
        let mut y = twisted_conv(&truth, &x);
        add_noise_in_place(y.as_mut_slice(), sigma2, fs(1));
        let detect = |hh: &EffectiveChannel| -> Result<Vec<u8>> {
            Ok(qam_demap(equalize_dd_frame(hh, &y, sigma2)?.as_slice()))
        };
        let decided = detect(&h)?;
        let perfect = detect(&truth)?;
        let n_bits = bits.len() as f64;
        let mut symbols = qam_map(&decided)?;
        if let Some(inj) = cfg.inject.filter(|i| i.frame == f) {
            let mut rng = seed::rng(fs(2));
            for s in symbols.iter_mut() {
                if rng.random::<f64>() < inj.rate {
                    *s = C64::new(-s.re, s.im);
                }
            }
        }
        let x_hat = idzt(&vector_to_dd(&symbols, g)?);
        let next = estimate_from_data(&idzt(&y), &x_hat, &window)?;
        out.push(FrameReport {
            index: f,
            kind: FrameKind::Data,
            estimate_source: source,
            ber: Some(count_bit_errors(&bits, &decided) as f64 / n_bits),
            perfect_csi_ber: Some(count_bit_errors(&bits, &perfect) as f64 / n_bits),
            tap_nmse: tap_nmse(&h, &truth),
        });
        held = Some((next, FrameKind::Data));
    }
    Ok(out)
}

/// Generator taps selecting the middle bit of the window.
pub const TCM_G11: [u8; 3] = [0, 1, 0];
/// Generator taps forming the window parity.
pub const TCM_G12: [u8; 3] = [1, 1, 1];
/// Squared free distance of the default code on the `{±1, ±2}` alphabet.
pub const TCM_D2_FREE: f64 = 20.0;
/// Mean energy of one complex symbol on the `{±1, ±2}` alphabet.
pub const TCM_SYMBOL_ENERGY: f64 = 5.0;

/// Rate-1 real trellis code, one bit per real level, two levels per complex symbol.
///
/// The window is `[b_{t−2}, b_{t−1}, b_t]`, newest bit last. The level is
/// `((−1)^{g11·b} − 3(−1)^{g12·b}) / 2`, real parts from even and imaginary
/// parts from odd positions, scaled by `1/√5` to unit mean energy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TcmCodec {
    pub g11: [u8; 3],
    pub g12: [u8; 3],
}

impl Default for TcmCodec {
    fn default() -> Self {
        Self { g11: TCM_G11, g12: TCM_G12 }
    }
}

/// Complex symbols needed for `n_bits` payload bits plus termination.
pub fn coded_len(n_bits: usize) -> usize {
    (n_bits + 3) / 2
}

/// Payload bits carried by a terminated block of `n_symbols` complex symbols.
pub fn payload_bits(n_symbols: usize) -> usize {
    (2 * n_symbols).saturating_sub(2)
}

impl TcmCodec {
    /// Level for state `(b_{t−2}, b_{t−1})` packed as `2·b_{t−2} + b_{t−1}` and input `b`.
    pub fn level(&self, state: usize, b: u8) -> f64 {
        let w = [(state >> 1) as u8 & 1, state as u8 & 1, b & 1];
        let parity = |g: &[u8; 3]| g.iter().zip(&w).map(|(a, c)| a & c).sum::<u8>() & 1;
        let sign = |p: u8| if p == 0 { 1.0 } else { -1.0 };
        (sign(parity(&self.g11)) - 3.0 * sign(parity(&self.g12))) / 2.0
    }

    fn next_state(state: usize, b: u8) -> usize {
        ((state << 1) | b as usize) & 3
    }

    /// Terminated level stream: zeros are appended until the last two inputs
    /// are zero and the length is even.
    pub fn encode_levels(&self, bits: &[u8]) -> Vec<f64> {
        let total = 2 * coded_len(bits.len());
        let mut state = 0;
        (0..total)
            .map(|t| {
                let b = bits.get(t).copied().unwrap_or(0);
                let v = self.level(state, b);
                state = Self::next_state(state, b);
                v
            })
            .collect()
    }

    pub fn encode(&self, bits: &[u8]) -> Vec<C64> {
        let s = 1.0 / TCM_SYMBOL_ENERGY.sqrt();
        self.encode_levels(bits).chunks_exact(2).map(|p| C64::new(p[0] * s, p[1] * s)).collect()
    }

    /// Maximum-likelihood sequence decision for a terminated block carrying `n_bits`.
    pub fn decode(&self, symbols: &[C64], n_bits: usize) -> Result<Vec<u8>> {
        if coded_len(n_bits) != symbols.len() {
            return Err(invalid(format!(
                "{} payload bits need {} symbols, got {}",
                n_bits,
                coded_len(n_bits),
                symbols.len()
            )));
        }
        let s = TCM_SYMBOL_ENERGY.sqrt();
        let r: Vec<f64> = symbols.iter().flat_map(|z| [z.re * s, z.im * s]).collect();
        let mut metric = [0.0, f64::INFINITY, f64::INFINITY, f64::INFINITY];
        let mut back: Vec<[(u8, u8); 4]> = Vec::with_capacity(r.len());
        for (t, &rt) in r.iter().enumerate() {
            let mut next = [f64::INFINITY; 4];
            let mut from = [(0u8, 0u8); 4];
            let inputs: &[u8] = if t < n_bits { &[0, 1] } else { &[0] };
            for (st, &m) in metric.iter().enumerate() {
                if !m.is_finite() {
                    continue;
                }
                for &b in inputs {
                    let ns = Self::next_state(st, b);
                    let cand = m + (rt - self.level(st, b)).powi(2);
                    if cand < next[ns] {
                        next[ns] = cand;
                        from[ns] = (st as u8, b);
                    }
                }
            }
            metric = next;
            back.push(from);
        }
        let mut state = 0usize;
        let mut bits = vec![0u8; r.len()];
        for t in (0..r.len()).rev() {
            let (prev, b) = back[t][state];
            bits[t] = b;
            state = prev as usize;
        }
        bits.truncate(n_bits);
        Ok(bits)
    }

    /// Minimum squared Euclidean distance over path pairs that leave a common
    /// state and meet again within `max_len` levels.
    pub fn free_distance_sq(&self, max_len: usize) -> f64 {
        let mut best = f64::INFINITY;
        let mut dist = [[f64::INFINITY; 4]; 4];
        for s in 0..4 {
            for (ba, bb) in [(0u8, 1u8), (1, 0)] {
                let (na, nb) = (Self::next_state(s, ba), Self::next_state(s, bb));
                let d = (self.level(s, ba) - self.level(s, bb)).powi(2);
                dist[na][nb] = dist[na][nb].min(d);
            }
        }
        for _ in 1..max_len {
            let mut next = [[f64::INFINITY; 4]; 4];
            for (sa, row) in dist.iter().enumerate() {
                for (sb, &d) in row.iter().enumerate() {
                    if !d.is_finite() {
                        continue;
                    }
                    if sa == sb {
                        best = best.min(d);
                        continue;
                    }
                    for ba in 0..2u8 {
                        for bb in 0..2u8 {
                            let (na, nb) = (Self::next_state(sa, ba), Self::next_state(sb, bb));
                            let step = (self.level(sa, ba) - self.level(sb, bb)).powi(2);
                            next[na][nb] = next[na][nb].min(d + step);
                        }
                    }
                }
            }
            dist = next;
        }
        for (s, row) in dist.iter().enumerate() {
            best = best.min(row[s]);
        }
        best
    }
}

pub fn tcm_encode(bits: &[u8]) -> Vec<C64> {
    TcmCodec::default().encode(bits)
}

pub fn tcm_viterbi_decode(symbols: &[C64], n_bits: usize) -> Result<Vec<u8>> {
    TcmCodec::default().decode(symbols, n_bits)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectOrder {
    FullFirst,
    SparseFirst,
}

/// Power split and occupancy of the two superposed frames.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MubConfig {
    pub alpha: f64,
    pub delta: f64,
    pub turbo_iters: usize,
    pub detect_order: DetectOrder,
    pub params: SymplecticParams,
}

/// Tolerance on `| |S1ᴴS2|·√MN − 1 |`.
pub const MUB_TOL: f64 = 1e-8;

impl MubConfig {
    /// `turbo_iters = 2`, full frame first, default CAZAC parameters.
    pub fn new(grid: &GridParams, alpha: f64, delta: f64) -> Result<Self> {
        let cfg = Self {
            alpha,
            delta,
            turbo_iters: 2,
            detect_order: DetectOrder::FullFirst,
            params: SymplecticParams::cazac_default(grid)?,
        };
        cfg.validate(grid)?;
        Ok(cfg)
    }

    pub fn validate(&self, grid: &GridParams) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(invalid(format!("alpha = {} outside (0, 1]", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(invalid(format!("delta = {} outside [0, 1]", self.delta)));
        }
        if self.params.mn as usize != grid.mn() {
            return Err(invalid("symplectic parameters do not match the grid"));
        }
        Ok(())
    }

    pub fn beta1(&self) -> f64 {
        self.alpha.sqrt()
    }

    pub fn beta2(&self) -> f64 {
        (1.0 - self.alpha).max(0.0).sqrt()
    }

    /// `⌊δ·MN⌋`; the second frame occupies the first indices of its basis.
    pub fn second_frame_len(&self, grid: &GridParams) -> usize {
        (self.delta * grid.mn() as f64).floor() as usize
    }
}

/// Decisions of [`MubSystem::detect`]; a frame with no power or no symbols decodes to empty vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct MubDetection {
    pub bits1: Vec<u8>,
    pub bits2: Vec<u8>,
    pub x1: Vec<C64>,
    pub x2: Vec<C64>,
}

/// Pulsone basis `S1` and its GDAFT image `S2`, with basis index `i = k + lM`.
#[derive(Clone, Debug)]
pub struct MubSystem {
    grid: GridParams,
    cfg: MubConfig,
    s2: DMatrix<C64>,
    k2: usize,
    deviation: f64,
}

impl MubSystem {
    /// Builds both bases and rejects pairs that are not mutually unbiased.
    pub fn new(grid: GridParams, cfg: MubConfig) -> Result<Self> {
        cfg.validate(&grid)?;
        let (m, n, mn) = (grid.m(), grid.n(), grid.mn());
        let gmat = gdaft_matrix(&cfg.params);
        let amp = 1.0 / (n as f64).sqrt();
        let mut s2 = DMatrix::zeros(mn, mn);
        for i in 0..mn {
            let (k0, l0) = (i % m, i / m);
            for d in 0..n {
                let c = crate::grid::cis_ratio((d * l0) as i128, n as i128) * amp;
                let src = gmat.column(k0 + d * m);
                let mut dst = s2.column_mut(i);
                dst.axpy(c, &src, C64::new(1.0, 0.0));
            }
        }
        let mut sys = Self { grid, cfg, s2, k2: cfg.second_frame_len(&grid), deviation: 0.0 };
        let scale = (mn as f64).sqrt();
        let mut dev: f64 = 0.0;
        for j in 0..mn {
            let col: Vec<C64> = sys.s2.column(j).iter().copied().collect();
            for v in sys.s1_adjoint(&col) {
                dev = dev.max((v.norm() * scale - 1.0).abs());
            }
        }
        if dev > MUB_TOL {
            return Err(invalid(format!("bases are not mutually unbiased: max deviation {dev:.3e}")));
        }
        sys.deviation = dev;
        Ok(sys)
    }

    pub fn grid(&self) -> &GridParams {
        &self.grid
    }

    pub fn config(&self) -> &MubConfig {
        &self.cfg
    }

    /// Max of `| |S1ᴴS2|·√MN − 1 |` measured at construction.
    pub fn unbiasedness_deviation(&self) -> f64 {
        self.deviation
    }

    pub fn second_frame_len(&self) -> usize {
        self.k2
    }

    pub fn s2(&self) -> &DMatrix<C64> {
        &self.s2
    }

    /// `S1 x`.
    pub fn s1_apply(&self, x: &[C64]) -> Vec<C64> {
        let (m, n, mn) = (self.grid.m(), self.grid.n(), self.grid.mn());
        let amp = 1.0 / (n as f64).sqrt();
        let mut out = vec![C64::new(0.0, 0.0); mn];
        for (i, &xi) in x.iter().enumerate() {
            let (k0, l0) = (i % m, i / m);
            for d in 0..n {
                out[k0 + d * m] += xi * crate::grid::cis_ratio((d * l0) as i128, n as i128) * amp;
            }
        }
        out
    }

    /// `S1ᴴ v`.
    pub fn s1_adjoint(&self, v: &[C64]) -> Vec<C64> {
        let (m, n, mn) = (self.grid.m(), self.grid.n(), self.grid.mn());
        let amp = 1.0 / (n as f64).sqrt();
        (0..mn)
            .map(|i| {
                let (k0, l0) = (i % m, i / m);
                (0..n).map(|d| v[k0 + d * m] * crate::grid::cis_ratio(-((d * l0) as i128), n as i128)).sum::<C64>() * amp
            })
            .collect()
    }

    /// `S2[:, ..len] x`.
    pub fn s2_apply(&self, x: &[C64]) -> Vec<C64> {
        let v = self.s2.columns(0, x.len()) * DVector::from_column_slice(x);
        v.as_slice().to_vec()
    }

    /// First `len` entries of `S2ᴴ v`.
    pub fn s2_adjoint(&self, v: &[C64], len: usize) -> Vec<C64> {
        let r = self.s2.columns(0, len).adjoint() * DVector::from_column_slice(v);
        r.as_slice().to_vec()
    }

    /// `1/√(α MN + (1−α)K)`, which gives unit energy for unit-modulus symbols.
    pub fn tx_scale(&self) -> f64 {
        let a = self.cfg.alpha;
        1.0 / (a * self.grid.mn() as f64 + (1.0 - a) * self.k2 as f64).sqrt()
    }

    /// `c·Q(√α S1 x1 + √(1−α) S2 x2)` with `c` from [`Self::tx_scale`]; `Q = I` when absent.
    pub fn transmit(&self, x1: &[C64], x2: &[C64], q: Option<&DMatrix<C64>>) -> Result<TDSequence> {
        let mn = self.grid.mn();
        if x1.len() != mn || x2.len() != self.k2 {
            return Err(invalid(format!(
                "frame lengths ({}, {}) differ from ({mn}, {})",
                x1.len(),
                x2.len(),
                self.k2
            )));
        }
        let c = self.tx_scale();
        let (b1, b2) = (self.cfg.beta1(), self.cfg.beta2());
        let mut v = self.s1_apply(x1);
        if b2 > 0.0 && self.k2 > 0 {
            for (a, b) in v.iter_mut().zip(self.s2_apply(x2)) {
                *a = *a * b1 + b * b2;
            }
        } else {
            v.iter_mut().for_each(|a| *a *= b1);
        }
        v.iter_mut().for_each(|a| *a *= c);
        if let Some(q) = q {
            v = (q * DVector::from_column_slice(&v)).as_slice().to_vec();
        }
        TDSequence::new(self.grid, v)
    }

    /// SIC detection of both TCM-coded frames from the combined vector `y'`.
    pub fn detect(&self, y: &[C64], codec: &TcmCodec) -> Result<MubDetection> {
        let mn = self.grid.mn();
        if y.len() != mn {
            return Err(invalid(format!("received vector has length {}, expected {mn}", y.len())));
        }
        let inv = 1.0 / self.tx_scale();
        let z: Vec<C64> = y.iter().map(|v| v * inv).collect();
        let (b1, b2) = (self.cfg.beta1(), self.cfg.beta2());
        let active2 = b2 > 0.0 && self.k2 > 0;
        let mut det = MubDetection { bits1: vec![], bits2: vec![], x1: vec![], x2: vec![] };
        let order: &[u8] = match self.cfg.detect_order {
            DetectOrder::FullFirst => &[1, 2],
            DetectOrder::SparseFirst => &[2, 1],
        };
        for _ in 0..=self.cfg.turbo_iters {
            for &frame in order {
                if frame == 1 {
                    let mut r = z.clone();
                    if !det.x2.is_empty() {
                        for (a, b) in r.iter_mut().zip(self.s2_apply(&det.x2)) {
                            *a -= b * b2;
                        }
                    }
                    let proj: Vec<C64> = self.s1_adjoint(&r).into_iter().map(|v| v / b1).collect();
                    det.bits1 = codec.decode(&proj, payload_bits(mn))?;
                    det.x1 = codec.encode(&det.bits1);
                } else if active2 {
                    let mut r = z.clone();
                    if !det.x1.is_empty() {
                        for (a, b) in r.iter_mut().zip(self.s1_apply(&det.x1)) {
                            *a -= b * b1;
                        }
                    }
                    let proj: Vec<C64> = self.s2_adjoint(&r, self.k2).into_iter().map(|v| v / b2).collect();
                    det.bits2 = codec.decode(&proj, payload_bits(self.k2))?;
                    det.x2 = codec.encode(&det.bits2);
                }
            }
        }
        Ok(det)
    }
}

/// Bit counts of one MUB frame pair.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MubTrial {
    pub bits1: u64,
    pub errors1: u64,
    pub bits2: u64,
    pub errors2: u64,
}

/// One TCM-coded frame pair over an optional DD channel with QR precoding.
///
/// `snr_db` is the ratio of unit symbol energy to the noise variance seen by
/// each symbol after the transmit scaling is undone.
pub fn mub_trial(
    sys: &MubSystem,
    codec: &TcmCodec,
    channel: Option<&EffectiveChannel>,
    snr_db: f64,
    trial_seed: u64,
) -> Result<MubTrial> {
    let mn = sys.grid.mn();
    let k2 = sys.k2;
    let mut rng = seed::rng(seed::derive_seed(trial_seed, 0));
    let bits1 = random_bits(&mut rng, payload_bits(mn));
    let bits2 = random_bits(&mut rng, payload_bits(k2));
    let x1 = codec.encode(&bits1);
    let x2 = if k2 > 0 { codec.encode(&bits2) } else { vec![] };
    let sigma2 = noise_variance(snr_db) * sys.tx_scale().powi(2);
    let noise_seed = seed::derive_seed(trial_seed, 1);
    let y_comb = match channel {
        Some(h) => {
            let hm = td_channel_matrix(h);
            let prec = qr_precode(&hm)?;
            let s = sys.transmit(&x1, &x2, Some(&prec.q))?;
            let mut y = (&hm * DVector::from_column_slice(s.as_slice())).as_slice().to_vec();
            add_noise_in_place(&mut y, sigma2, noise_seed);
            rx_combine(&prec.r, &y, sigma2)?
        }
        None => {
            let mut y = sys.transmit(&x1, &x2, None)?.into_vec();
            add_noise_in_place(&mut y, sigma2, noise_seed);
            y
        }
    };
    let det = sys.detect(&y_comb, codec)?;
    let errors2 = if det.bits2.is_empty() { bits2.len() as u64 } else { count_bit_errors(&bits2, &det.bits2) };
    Ok(MubTrial {
        bits1: bits1.len() as u64,
        errors1: count_bit_errors(&bits1, &det.bits1),
        bits2: bits2.len() as u64,
        errors2,
    })
}

/// Gaussian tail probability `Q(x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Terms of the effective-rate model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub sinr1: f64,
    pub ps1: f64,
    pub sinr2: f64,
    pub r1: f64,
    pub r2: f64,
    pub r_eff: f64,
}

/// Effective rate of the two-frame scheme with `P = snr_linear` and `σ² = 1`.
pub fn effective_rate(alpha: f64, delta: f64, snr_linear: f64, d_free: f64, m: usize, n: usize) -> Result<RateReport> {
    if !(0.0..=1.0).contains(&alpha) || !(0.0..=1.0).contains(&delta) {
        return Err(invalid("alpha and delta must lie in [0, 1]"));
    }
    if !(snr_linear >= 0.0) || m * n == 0 {
        return Err(invalid("SNR must be non-negative and the grid non-empty"));
    }
    let (p, s2, mn) = (snr_linear, 1.0, (m * n) as f64);
    let sinr1 = alpha * p / (s2 + delta * (1.0 - alpha) * p / mn);
    let ps1 = q_function((2.0 * d_free * sinr1).sqrt());
    let sinr2 = (1.0 - alpha) * p / (s2 + alpha * p * ps1 / mn);
    let r1 = (1.0 + sinr1).log2();
    let r2 = (1.0 + sinr2).log2();
    Ok(RateReport { sinr1, ps1, sinr2, r1, r2, r_eff: r1 + delta * r2 })
}

/// Largest second-frame occupancy keeping the first frame above SINR `γ`, clamped to `[0, 1]`.
pub fn delta_bound(alpha: f64, gamma: f64, sigma2: f64) -> Result<f64> {
    if !(gamma > 1.0) {
        return Err(invalid(format!("gamma = {gamma} must exceed 1")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha = {alpha} outside (0, 1)")));
    }
    Ok(((alpha - gamma * sigma2) / (gamma * (1.0 - alpha))).clamp(0.0, 1.0))
}

/// ARQ throughput `R(1 − p_b)^L` for packets of `packet_bits` bits.
pub fn arq_throughput(rate: f64, p_b: f64, packet_bits: f64) -> f64 {
    rate * (1.0 - p_b).powf(packet_bits)
}
