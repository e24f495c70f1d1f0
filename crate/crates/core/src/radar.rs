//! Discrete radar on the MN-periodic sequence model.
//!
//! * Imaging by cross-ambiguity, with fast paths for pulsone and chirp
//!   transmit waveforms ([`radar_image`]).
//! * Subgroup-driven waveform selection and symplectic waveform libraries.
//! * PAPR accounting, the phase-coded comparison waveform and ROC estimation.
//! * Instantaneous dual-polarization scattering estimation.

use std::f64::consts::PI;

use nalgebra::Matrix2;
use rand::Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::ambiguity::{
    cross_ambiguity, crystallization_check, fast_cross_ambiguity_pulsone, search_compliant_line, AmbiguitySurface,
    BoxSpec,
};
use crate::channel::{add_noise_in_place, apply_discrete, complex_gaussian, noise_variance, ChannelAction, EffectiveChannel, PathSpec};
use crate::error::{invalid, Result, ZakError};
use crate::grid::{cis_ratio, GridParams, TDSequence, C64};
use crate::seed;
use crate::transforms::{gcd, gdaft, SymplecticParams};
use crate::waveforms::{chirp, pulsone, subgroup_index_set, SubgroupSpec};

/// Relative tolerance used to recognise pulsone and chirp structure.
const STRUCTURE_TOL: f64 = 1e-9;

/// Constant-γ clutter: `n_scatterers` iid cells drawn uniformly from `region`
/// with total power `10^{γ/10}` relative to a unit target.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClutterSpec {
    pub gamma_db: f64,
    pub n_scatterers: usize,
    pub region: BoxSpec,
}

pub const DEFAULT_SCATTERERS: usize = 64;
/// Metropolitan terrain clutter level.
pub const METRO_GAMMA_DB: f64 = -1.99;

impl ClutterSpec {
    pub fn new(gamma_db: f64, region: BoxSpec) -> Self {
        Self { gamma_db, n_scatterers: DEFAULT_SCATTERERS, region }
    }

    pub fn draw<R: Rng>(&self, rng: &mut R) -> Vec<((i64, i64), C64)> {
        if self.n_scatterers == 0 {
            return vec![];
        }
        let var = 10f64.powf(self.gamma_db / 10.0) / self.n_scatterers as f64;
        let b = self.region;
        (0..self.n_scatterers)
            .map(|_| {
                let k = rng.random_range(b.k_min..=b.k_max);
                let l = rng.random_range(b.l_min..=b.l_max);
                ((k, l), complex_gaussian(rng, var))
            })
            .collect()
    }
}

/// Targets (gain = reflectivity) and optional clutter.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub targets: Vec<PathSpec>,
    pub clutter: Option<ClutterSpec>,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if let Some(p) = self.targets.iter().find(|p| !(p.delay >= 0.0)) {
            return Err(ZakError::InvalidChannel(format!("target delay {} is negative", p.delay)));
        }
        if let Some(c) = &self.clutter {
            if c.region.k_min < 0 || c.region.k_min > c.region.k_max || c.region.l_min > c.region.l_max {
                return Err(invalid("clutter region must be a non-empty box with non-negative delays"));
            }
        }
        Ok(())
    }

    /// Discrete taps: targets at `(round(τB), round(νT))` plus one clutter draw.
    pub fn taps(&self, grid: &GridParams, rng_seed: u64) -> Result<Vec<((i64, i64), C64)>> {
        self.validate()?;
        let mut taps: Vec<_> = self
            .targets
            .iter()
            .map(|p| {
                (((p.delay * grid.bandwidth()).round() as i64, (p.doppler * grid.duration()).round() as i64), p.gain)
            })
            .collect();
        if let Some(c) = &self.clutter {
            taps.extend(c.draw(&mut seed::rng(rng_seed)));
        }
        Ok(taps)
    }
}

/// Received echo `Σ h x[n−k] e^{j2πl(n−k)/MN}` plus noise of variance `10^{−snr/10}` per sample.
pub fn simulate_echo(
    tx: &TDSequence,
    taps: &[((i64, i64), C64)],
    action: ChannelAction,
    snr_db: f64,
    rng_seed: u64,
) -> TDSequence {
    let mut y = apply_discrete(tx, taps, action);
    add_noise_in_place(y.as_mut_slice(), noise_variance(snr_db), rng_seed);
    y
}

/// Structure of a transmit waveform exploited by [`radar_image`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TxStructure {
    /// `c · pulsone(k0, l0)`.
    Pulsone { k0: usize, l0: usize, c: C64 },
    /// `c · exp(jπ(A n² + B n)/MN)` with the quadratic phase MN-periodic.
    Chirp { a: i64, b: i64, c: C64 },
    Generic,
}

/// Imaging route taken by [`radar_image_with_path`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImagingPath {
    FastPulsone,
    FastChirp,
    Direct,
}

fn detect_pulsone(x: &[C64], grid: &GridParams) -> Option<TxStructure> {
    let (m, n) = (grid.m(), grid.n());
    let peak = x.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return None;
    }
    let k0 = x.iter().position(|v| v.norm() > STRUCTURE_TOL * peak)?;
    if k0 >= m {
        return None;
    }
    let c = x[k0] * (n as f64).sqrt();
    let ratio = x[k0 + m] / x[k0];
    let l0 = ((ratio.arg() / (2.0 * PI) * n as f64).round() as i64).rem_euclid(n as i64) as usize;
    let p = pulsone(*grid, k0, l0);
    let ok = x.iter().zip(p.as_slice()).all(|(a, b)| (a - c * b).norm() <= STRUCTURE_TOL * peak);
    ok.then_some(TxStructure::Pulsone { k0, l0, c })
}

fn detect_chirp(x: &[C64]) -> Option<TxStructure> {
    let mn = x.len() as i64;
    if mn < 3 {
        return None;
    }
    let amp = x[0].norm();
    if amp == 0.0 || x.iter().any(|v| (v.norm() - amp).abs() > STRUCTURE_TOL * amp) {
        return None;
    }
    let r0 = x[1] / x[0];
    let r1 = x[2] / x[1];
    let a = (((r1 / r0).arg() / (2.0 * PI) * mn as f64).round() as i64).rem_euclid(mn);
    let ab = ((r0.arg() / PI * mn as f64).round() as i64).rem_euclid(2 * mn);
    let b = (ab - a).rem_euclid(2 * mn);
    if (a * mn + b) % 2 != 0 {
        return None;
    }
    let c = x[0];
    let two = 2 * mn as i128;
    let ok = x.iter().enumerate().all(|(i, v)| {
        let i = i as i128;
        (v - c * cis_ratio(a as i128 * i * i + b as i128 * i, two)).norm() <= STRUCTURE_TOL * amp
    });
    ok.then_some(TxStructure::Chirp { a, b, c })
}

/// Classifies `tx` as a scaled pulsone, a periodic chirp, or neither.
pub fn tx_structure(tx: &TDSequence) -> TxStructure {
    detect_pulsone(tx.as_slice(), tx.grid())
        .or_else(|| detect_chirp(tx.as_slice()))
        .unwrap_or(TxStructure::Generic)
}

/// `A_{rx,tx}` for a chirp tx via one length-MN FFT of the dechirped echo.
fn chirp_image(rx: &TDSequence, a: i64, b: i64, c: C64, region: &[(i64, i64)]) -> AmbiguitySurface {
    let mn = rx.len();
    let two = 2 * mn as i128;
    let mut u: Vec<C64> = rx
        .as_slice()
        .iter()
        .enumerate()
        .map(|(n, v)| {
            let n = n as i128;
            v * cis_ratio(-(a as i128 * n * n + b as i128 * n), two)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(mn).process(&mut u);
    let cc = c.conj();
    let values = region
        .iter()
        .map(|&(k, l)| {
            let (k, l) = (k as i128, l as i128);
            let bin = (l - a as i128 * k).rem_euclid(mn as i128) as usize;
            let phase = cis_ratio(-(a as i128 * k * k - b as i128 * k - 2 * l * k), two);
            cc * phase * u[bin]
        })
        .collect();
    AmbiguitySurface::new(*rx.grid(), region.to_vec(), values)
}

/// Radar image `A_{rx,tx}` over `region`, with the route taken.
pub fn radar_image_with_path(
    tx: &TDSequence,
    rx: &TDSequence,
    region: &[(i64, i64)],
) -> Result<(AmbiguitySurface, ImagingPath)> {
    if tx.grid() != rx.grid() {
        return Err(invalid("transmit and receive sequences are on different grids"));
    }
    Ok(match tx_structure(tx) {
        TxStructure::Pulsone { k0, l0, c } => {
            let (mut surf, _) = fast_cross_ambiguity_pulsone(rx, k0, l0, region);
            surf.values.iter_mut().for_each(|v| *v *= c.conj());
            (surf, ImagingPath::FastPulsone)
        }
        TxStructure::Chirp { a, b, c } => (chirp_image(rx, a, b, c, region), ImagingPath::FastChirp),
        TxStructure::Generic => (cross_ambiguity(rx, tx, region), ImagingPath::Direct),
    })
}

pub fn radar_image(tx: &TDSequence, rx: &TDSequence, region: &[(i64, i64)]) -> Result<AmbiguitySurface> {
    radar_image_with_path(tx, rx, region).map(|(s, _)| s)
}

/// Rows `(k, l, 20 log10 |A|)` for heatmap export.
pub fn image_rows(surf: &AmbiguitySurface) -> Vec<(i64, i64, f64)> {
    surf.iter().map(|(&(k, l), v)| (k, l, 20.0 * v.norm().log10())).collect()
}

/// First subgroup (rectangular lattice, then lines by increasing slope) whose
/// translates of `c` are disjoint, with one of its eigenvectors.
pub fn select_waveform(c: &BoxSpec, grid: &GridParams) -> Result<(SubgroupSpec, TDSequence)> {
    let lattice = subgroup_index_set(&SubgroupSpec::RectLattice, grid)?;
    if crystallization_check(&lattice, c, grid) {
        return Ok((SubgroupSpec::RectLattice, pulsone(*grid, 0, 0)));
    }
    let alpha = search_compliant_line(c, grid).ok_or(ZakError::NotFound)?;
    Ok((SubgroupSpec::Line { alpha }, chirp(*grid, alpha, 0)))
}

/// GDAFT images of `template`, one per parameter set.
pub fn waveform_library(template: &TDSequence, params: &[SymplecticParams]) -> Result<Vec<TDSequence>> {
    params.iter().map(|p| gdaft(template, p)).collect()
}

/// `10 log10(max|x|² / mean|x|²)` of raw samples.
pub fn papr_samples(x: &[C64]) -> Result<f64> {
    let peak = x.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    if peak == 0.0 || x.is_empty() {
        return Err(invalid("PAPR of an all-zero waveform is undefined"));
    }
    let mean = x.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len() as f64;
    Ok(10.0 * (peak / mean).log10())
}

pub fn papr(x: &TDSequence) -> Result<f64> {
    papr_samples(x.as_slice())
}

/// Empirical `P(PAPR > t)` at each threshold over `n_draws` waveforms `gen(draw_seed)`.
pub fn papr_ccdf<F>(mut gen: F, n_draws: usize, master_seed: u64, thresholds_db: &[f64]) -> Result<Vec<(f64, f64)>>
where
    F: FnMut(u64) -> Result<Vec<C64>>,
{
    if n_draws == 0 {
        return Err(invalid("papr_ccdf needs at least one draw"));
    }
    let values = (0..n_draws as u64)
        .map(|i| papr_samples(&gen(seed::derive_seed(master_seed, i))?))
        .collect::<Result<Vec<f64>>>()?;
    Ok(thresholds_db
        .iter()
        .map(|&t| (t, values.iter().filter(|&&v| v > t).count() as f64 / n_draws as f64))
        .collect())
}

/// Zadoff-Chu sequence `exp(−jπ u n (n + L mod 2) / L)` of length `L`.
pub fn zadoff_chu(root: i64, len: usize) -> Result<Vec<C64>> {
    let l = len as i64;
    if len == 0 || root.rem_euclid(l) == 0 || gcd(root, l) != 1 {
        return Err(invalid(format!("Zadoff-Chu root {root} is not coprime to length {len}")));
    }
    let cf = l % 2;
    Ok((0..l as i128)
        .map(|n| cis_ratio(-(root as i128 * n * (n + cf as i128)), 2 * l as i128))
        .collect())
}

/// Rectangular-chip phase-coded waveform: each code value held for `MN / len` samples, unit energy.
pub fn phase_coded_waveform(code: &[C64], grid: &GridParams) -> Result<TDSequence> {
    let mn = grid.mn();
    if code.is_empty() || mn % code.len() != 0 {
        return Err(invalid(format!("code length {} does not divide MN = {mn}", code.len())));
    }
    let chip = mn / code.len();
    let samples: Vec<C64> = code.iter().flat_map(|&z| std::iter::repeat_n(z, chip)).collect();
    let x = TDSequence::new(*grid, samples)?;
    if x.norm_sqr() == 0.0 {
        return Err(invalid("code is all zero"));
    }
    Ok(x.normalized())
}

/// Length-N Zadoff-Chu code on rectangular chips of M samples.
pub fn phase_coded_baseline(root: i64, grid: &GridParams) -> Result<TDSequence> {
    phase_coded_waveform(&zadoff_chu(root, grid.n())?, grid)
}

/// One operating point of a detector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub pfa: f64,
    pub pd: f64,
}

/// Single-target detection experiment at a known cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocConfig {
    pub target: (i64, i64),
    pub gain: f64,
    pub clutter: Option<ClutterSpec>,
    pub snr_db: f64,
    pub n_trials: usize,
    pub seed: u64,
    pub action: ChannelAction,
}

/// Thresholds `|image(target)|` under target-present (random phase) and
/// target-absent draws of the same clutter model.
pub fn detection_roc(cfg: &RocConfig, tx: &TDSequence, thresholds: &[f64]) -> Result<Vec<RocPoint>> {
    if cfg.n_trials == 0 {
        return Err(invalid("detection_roc needs at least one trial"));
    }
    if cfg.target.0 < 0 {
        return Err(invalid("target delay must be non-negative"));
    }
    let cell = [cfg.target];
    let mut h1 = Vec::with_capacity(cfg.n_trials);
    let mut h0 = Vec::with_capacity(cfg.n_trials);
    for t in 0..cfg.n_trials as u64 {
        for present in [true, false] {
            let s = seed::derive_seed(cfg.seed, 2 * t + u64::from(!present));
            let mut rng = seed::rng(s);
            let mut taps = match &cfg.clutter {
                Some(c) => c.draw(&mut rng),
                None => vec![],
            };
            if present {
                let ph: f64 = rng.random::<f64>() * 2.0 * PI;
                taps.push((cfg.target, C64::from_polar(cfg.gain, ph)));
            }
            let y = simulate_echo(tx, &taps, cfg.action, cfg.snr_db, seed::derive_seed(s, 1));
            let v = radar_image(tx, &y, &cell)?.values[0].norm();
            if present { h1.push(v) } else { h0.push(v) }
        }
    }
    let frac = |v: &[f64], t: f64| v.iter().filter(|&&x| x > t).count() as f64 / v.len() as f64;
    Ok(thresholds.iter().map(|&t| RocPoint { threshold: t, pfa: frac(&h0, t), pd: frac(&h1, t) }).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pol {
    H,
    V,
}

impl Pol {
    fn idx(self) -> usize {
        match self {
            Pol::H => 0,
            Pol::V => 1,
        }
    }
}

/// Point scatterer with a 2×2 polarimetric response `Σ_p` (rows: receive, columns: transmit).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolTarget {
    pub delay_bin: i64,
    pub doppler_bin: i64,
    pub scattering: Matrix2<C64>,
}

/// Four effective channels `h^{(rx,tx)}` built from `H_p = C_RX Σ_p C_TX`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolChannel {
    pub h: [[EffectiveChannel; 2]; 2],
    pub c_tx: Matrix2<C64>,
    pub c_rx: Matrix2<C64>,
}

impl PolChannel {
    pub fn new(grid: GridParams, targets: &[PolTarget], c_tx: Matrix2<C64>, c_rx: Matrix2<C64>) -> Self {
        let h = std::array::from_fn(|j| {
            std::array::from_fn(|i| {
                EffectiveChannel::new(
                    grid,
                    targets.iter().map(|t| ((t.delay_bin, t.doppler_bin), (c_rx * t.scattering * c_tx)[(j, i)])),
                )
            })
        });
        Self { h, c_tx, c_rx }
    }

    pub fn get(&self, rx: Pol, tx: Pol) -> &EffectiveChannel {
        &self.h[rx.idx()][tx.idx()]
    }
}

fn taps_of(h: &EffectiveChannel) -> Vec<((i64, i64), C64)> {
    h.taps.iter().map(|(&kl, &v)| (kl, v)).collect()
}

/// `y^{(j)} = Σ_i h^{(j,i)} ⋆ x^{(i)} + n^{(j)}` with independent noise per receive polarization.
pub fn dual_pol_simulate(
    x_h: &TDSequence,
    x_v: &TDSequence,
    pol: &PolChannel,
    snr_db: f64,
    rng_seed: u64,
    action: ChannelAction,
) -> Result<(TDSequence, TDSequence)> {
    if x_h.grid() != x_v.grid() {
        return Err(invalid("polarization waveforms are on different grids"));
    }
    let xs = [x_h, x_v];
    let out: Vec<TDSequence> = (0..2)
        .map(|j| {
            let mut y = TDSequence::zeros(*x_h.grid());
            for (i, x) in xs.iter().enumerate() {
                y = y.add(&apply_discrete(x, &taps_of(&pol.h[j][i]), action));
            }
            add_noise_in_place(y.as_mut_slice(), noise_variance(snr_db), seed::derive_seed(rng_seed, j as u64));
            y
        })
        .collect();
    let mut it = out.into_iter();
    Ok((it.next().expect("two outputs"), it.next().expect("two outputs")))
}

/// Pulsone for H and its GDAFT image for V: a mutually unbiased transmit pair.
pub fn polarimetry_waveforms(grid: &GridParams) -> Result<(TDSequence, TDSequence)> {
    let p = pulsone(*grid, 0, 0);
    let c = gdaft(&p, &SymplecticParams::cazac_default(grid)?)?;
    Ok((p, c))
}

/// `ĥ^{(j,i)} = A_{y_j, x_i} / ‖x_i‖²` over `window`, indexed `[rx][tx]`.
pub fn instant_polarimetry(
    y_h: &TDSequence,
    y_v: &TDSequence,
    x_h: &TDSequence,
    x_v: &TDSequence,
    window: &BoxSpec,
) -> Result<[[EffectiveChannel; 2]; 2]> {
    let region = window.points();
    let g = *y_h.grid();
    let ys = [y_h, y_v];
    let xs = [x_h, x_v];
    let mut est: [[EffectiveChannel; 2]; 2] = std::array::from_fn(|_| std::array::from_fn(|_| EffectiveChannel::new(g, [])));
    for (j, y) in ys.iter().enumerate() {
        for (i, x) in xs.iter().enumerate() {
            let e = x.norm_sqr();
            let mut h = if e == 0.0 {
                EffectiveChannel::new(g, [])
            } else {
                let surf = radar_image(x, y, &region)?;
                EffectiveChannel::new(g, surf.iter().map(|(&kl, &v)| (kl, v / e)))
            };
            h.window = *window;
            est[j][i] = h;
        }
    }
    Ok(est)
}
