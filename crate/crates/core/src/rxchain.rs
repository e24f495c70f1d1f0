//! Receiver processing: 4-QAM mapping, MMSE and one-tap equalizers, QR
//! precoding, the frequency-domain (FD) system with modulo-banded storage and
//! the conjugate-gradient solver, pilot-based estimation and BER harnesses.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ambiguity::BoxSpec;
use crate::channel::{
    self, apply_ltv, channel_matrix_entries, complex_gaussian, probe_with_chain, read_taps,
    sample_veh_a, EffectiveChannel, TdChain,
};
use crate::error::{invalid, Result, ZakError};
use crate::filters::FilterSpec;
use crate::grid::{cis_ratio, dd_to_vector, vector_to_dd, DDArray, GridParams, C64};
use crate::seed;
use crate::transforms::{idfzt, idfzt_adjoint, FDSequence};

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Gray 4-QAM: the first bit picks the sign of I, the second the sign of Q; `0 ↦ +`.
pub fn qam_map(bits: &[u8]) -> Result<Vec<C64>> {
    if bits.len() % 2 != 0 {
        return Err(invalid(format!("4-QAM needs an even number of bits, got {}", bits.len())));
    }
    Ok(bits
        .chunks_exact(2)
        .map(|b| {
            let s = |v: u8| if v == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
            C64::new(s(b[0]), s(b[1]))
        })
        .collect())
}

/// Hard-decision inverse of [`qam_map`].
pub fn qam_demap(symbols: &[C64]) -> Vec<u8> {
    symbols.iter().flat_map(|s| [u8::from(s.re < 0.0), u8::from(s.im < 0.0)]).collect()
}

pub fn random_bits<R: Rng>(rng: &mut R, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.random_range(0..2u8)).collect()
}

pub fn count_bit_errors(a: &[u8], b: &[u8]) -> u64 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as u64
}

/// Condition-number estimate above which dense solves log a warning.
pub const CONDITION_WARN: f64 = 1e12;

/// Cholesky-based solver of `(A + σ²I) x = b` for a fixed Hermitian `A`.
pub struct NormalSolver {
    a: DMatrix<C64>,
}

impl NormalSolver {
    pub fn new(a: DMatrix<C64>) -> Self {
        Self { a }
    }

    /// Normal matrix `HᴴH` of a channel matrix.
    pub fn from_channel(h: &DMatrix<C64>) -> Self {
        Self::new(h.adjoint() * h)
    }

    /// Normal matrix of an effective channel, accumulated from its sparse rows.
    pub fn from_taps(h: &EffectiveChannel) -> Self {
        let mn = h.grid.mn();
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); mn];
        for (r, c, v) in channel_matrix_entries(h) {
            rows[r].push((c, v));
        }
        let mut a = DMatrix::zeros(mn, mn);
        for row in &rows {
            for &(i, vi) in row {
                let ci = vi.conj();
                for &(j, vj) in row {
                    a[(i, j)] += ci * vj;
                }
            }
        }
        Self::new(a)
    }

    pub fn solve(&self, rhs: &[C64], sigma2: f64) -> Result<Vec<C64>> {
        let n = self.a.nrows();
        let mut a = self.a.clone();
        for i in 0..n {
            a[(i, i)] += sigma2;
        }
        let chol = a.cholesky().ok_or_else(|| ZakError::Solver("normal matrix is not positive definite".into()))?;
        let l = chol.l_dirty();
        let (lo, hi) = (0..n).map(|i| l[(i, i)].re).fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
        if (hi / lo).powi(2) > CONDITION_WARN {
            log::warn!("ill-conditioned MMSE system (condition estimate {:.2e})", (hi / lo).powi(2));
        }
        Ok(chol.solve(&DVector::from_column_slice(rhs)).as_slice().to_vec())
    }
}

/// `x̂ = (HᴴH + σ²I)⁻¹ Hᴴ y` by Cholesky factorization of the normal equations.
pub fn mmse_equalize(h: &DMatrix<C64>, y: &[C64], sigma2: f64) -> Result<Vec<C64>> {
    if !h.is_square() || h.nrows() != y.len() {
        return Err(invalid("channel matrix must be square and match the received vector"));
    }
    if sigma2 < 0.0 {
        return Err(invalid("noise variance must be non-negative"));
    }
    let hy = h.adjoint() * DVector::from_column_slice(y);
    NormalSolver::from_channel(h).solve(hy.as_slice(), sigma2)
}

/// `Hᴴy` for the channel matrix of `h`, without materializing it.
pub fn adjoint_apply(h: &EffectiveChannel, y: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); y.len()];
    for (r, c, v) in channel_matrix_entries(h) {
        out[c] += v.conj() * y[r];
    }
    out
}

/// Per-entry scalar MMSE `conj(h) y / (|h|² + σ²)`; zero where both vanish.
pub fn one_tap_equalize(h: &[C64], y: &[C64], sigma2: f64) -> Vec<C64> {
    h.iter()
        .zip(y)
        .map(|(h, y)| {
            let d = h.norm_sqr() + sigma2;
            if d == 0.0 {
                C64::new(0.0, 0.0)
            } else {
                h.conj() * y / d
            }
        })
        .collect()
}

/// `Hᴴ = Q R` with the diagonal of `R` real and non-negative.
#[derive(Clone, Debug)]
pub struct QrPrecoder {
    pub q: DMatrix<C64>,
    pub r: DMatrix<C64>,
}

pub fn qr_precode(h: &DMatrix<C64>) -> Result<QrPrecoder> {
    if !h.is_square() {
        return Err(invalid("channel matrix must be square"));
    }
    let qr = h.adjoint().qr();
    let (mut q, mut r) = (qr.q(), qr.r());
    for i in 0..r.nrows() {
        let d = r[(i, i)];
        if d.norm() > 0.0 {
            let ph = d / d.norm();
            r.row_mut(i).iter_mut().for_each(|v| *v *= ph.conj());
            q.column_mut(i).iter_mut().for_each(|v| *v *= ph);
        }
    }
    Ok(QrPrecoder { q, r })
}

/// `x' = Q x`.
pub fn apply_precoder(q: &DMatrix<C64>, x: &[C64]) -> Vec<C64> {
    (q * DVector::from_column_slice(x)).as_slice().to_vec()
}

/// Combining matrix `W = (R Rᴴ + σ²I)⁻¹ R`.
pub fn combiner(r: &DMatrix<C64>, sigma2: f64) -> Result<DMatrix<C64>> {
    let n = r.nrows();
    let a = r * r.adjoint() + DMatrix::identity(n, n) * C64::new(sigma2, 0.0);
    a.cholesky().map(|c| c.solve(r)).ok_or_else(|| ZakError::Solver("RRᴴ + σ²I is singular".into()))
}

/// `y' = W y`.
pub fn rx_combine(r: &DMatrix<C64>, y: &[C64], sigma2: f64) -> Result<Vec<C64>> {
    Ok((combiner(r, sigma2)? * DVector::from_column_slice(y)).as_slice().to_vec())
}

/// Matrix `R` of the IDFZT acting on vectorized DD arrays.
pub fn idfzt_matrix(grid: &GridParams) -> DMatrix<C64> {
    let mn = grid.mn();
    let mut r = DMatrix::zeros(mn, mn);
    for c in 0..mn {
        let s = idfzt(&DDArray::impulse(*grid, c / grid.n(), c % grid.n()));
        for (i, v) in s.as_slice().iter().enumerate() {
            r[(i, c)] = *v;
        }
    }
    r
}

/// `H_FD = R H Rᴴ` and `r = R y` for a dense DD system.
pub fn to_fd_system(grid: &GridParams, h_dd: &DMatrix<C64>, y_dd: &[C64]) -> Result<(DMatrix<C64>, FDSequence)> {
    if h_dd.nrows() != grid.mn() || !h_dd.is_square() || y_dd.len() != grid.mn() {
        return Err(invalid("DD system does not match the grid"));
    }
    let r = idfzt_matrix(grid);
    let hfd = &r * h_dd * r.adjoint();
    Ok((hfd, idfzt(&vector_to_dd(y_dd, *grid)?)))
}

fn wrap_offset(d: i64, mn: i64) -> i64 {
    let w = d.rem_euclid(mn);
    if w > mn / 2 {
        w - mn
    } else {
        w
    }
}

/// Modulo-banded FD matrix: `diagonals[o + b][i] = H[i, (i+o) mod MN]` for `|o| ≤ b`.
#[derive(Clone, Debug, PartialEq)]
pub struct BandedFDMatrix {
    pub grid: GridParams,
    pub b: usize,
    pub diagonals: Vec<Vec<C64>>,
}

impl BandedFDMatrix {
    pub fn zeros(grid: GridParams, b: usize) -> Self {
        let b = b.min(grid.mn() / 2);
        Self { grid, b, diagonals: vec![vec![C64::new(0.0, 0.0); grid.mn()]; 2 * b + 1] }
    }

    /// Keeps the band of a dense matrix; returns the discarded fraction of `‖H‖²_F`.
    pub fn from_dense(grid: GridParams, h: &DMatrix<C64>, b: usize) -> (Self, f64) {
        let mut out = Self::zeros(grid, b);
        let mn = grid.mn() as i64;
        let (mut total, mut outside) = (0.0, 0.0);
        for i in 0..h.nrows() {
            for j in 0..h.ncols() {
                let e = h[(i, j)].norm_sqr();
                total += e;
                let o = wrap_offset(j as i64 - i as i64, mn);
                if o.unsigned_abs() as usize <= out.b {
                    out.diagonals[(o + out.b as i64) as usize][i] = h[(i, j)];
                } else {
                    outside += e;
                }
            }
        }
        (out, if total > 0.0 { outside / total } else { 0.0 })
    }

    /// FD matrix of an effective channel directly from its taps: tap `(a, b)` contributes
    /// `h e^{−j2π f a/MN}` at `(f, f−b)`. Returns the discarded energy fraction.
    pub fn from_taps(h: &EffectiveChannel, b: usize) -> (Self, f64) {
        let grid = h.grid;
        let mut out = Self::zeros(grid, b);
        let mn = grid.mn() as i64;
        let (mut total, mut outside) = (0.0, 0.0);
        for (&(ka, lb), &v) in &h.taps {
            let e = v.norm_sqr();
            total += e;
            let o = wrap_offset(-lb, mn);
            if o.unsigned_abs() as usize > out.b {
                outside += e;
                continue;
            }
            let diag = &mut out.diagonals[(o + out.b as i64) as usize];
            for (f, d) in diag.iter_mut().enumerate() {
                *d += v * cis_ratio(-(f as i128) * ka as i128, mn as i128);
            }
        }
        (out, if total > 0.0 { outside / total } else { 0.0 })
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let o = wrap_offset(j as i64 - i as i64, self.grid.mn() as i64);
        if o.unsigned_abs() as usize <= self.b {
            self.diagonals[(o + self.b as i64) as usize][i]
        } else {
            C64::new(0.0, 0.0)
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mn = self.grid.mn();
        let mut h = DMatrix::zeros(mn, mn);
        for (d, diag) in self.diagonals.iter().enumerate() {
            let o = d as i64 - self.b as i64;
            for (i, v) in diag.iter().enumerate() {
                h[(i, (i as i64 + o).rem_euclid(mn as i64) as usize)] += v;
            }
        }
        h
    }
}

/// Square operator with an adjoint, as consumed by [`cgm_solve`].
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64]) -> Vec<C64>;
    fn apply_adjoint(&self, x: &[C64]) -> Vec<C64>;
}

impl LinearOperator for BandedFDMatrix {
    fn dim(&self) -> usize {
        self.grid.mn()
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mn = x.len();
        let mut y = vec![C64::new(0.0, 0.0); mn];
        for (d, diag) in self.diagonals.iter().enumerate() {
            let o = (d as i64 - self.b as i64).rem_euclid(mn as i64) as usize;
            for (i, (yi, h)) in y.iter_mut().zip(diag).enumerate() {
                let j = if i + o >= mn { i + o - mn } else { i + o };
                *yi += h * x[j];
            }
        }
        y
    }
    fn apply_adjoint(&self, x: &[C64]) -> Vec<C64> {
        let mn = x.len();
        let mut y = vec![C64::new(0.0, 0.0); mn];
        for (d, diag) in self.diagonals.iter().enumerate() {
            let o = (d as i64 - self.b as i64).rem_euclid(mn as i64) as usize;
            for (i, (xi, h)) in x.iter().zip(diag).enumerate() {
                let j = if i + o >= mn { i + o - mn } else { i + o };
                y[j] += h.conj() * xi;
            }
        }
        y
    }
}

impl LinearOperator for DMatrix<C64> {
    fn dim(&self) -> usize {
        self.nrows()
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        (self * DVector::from_column_slice(x)).as_slice().to_vec()
    }
    fn apply_adjoint(&self, x: &[C64]) -> Vec<C64> {
        (self.adjoint() * DVector::from_column_slice(x)).as_slice().to_vec()
    }
}

/// Noise covariance `R_n` entering the CGM normal equations.
#[derive(Clone, Debug, PartialEq)]
pub enum NoiseCovariance {
    White(f64),
    Explicit(DMatrix<C64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CgmConfig {
    pub max_iters: usize,
    pub tolerance: f64,
    pub half_bandwidth: usize,
    pub noise: NoiseCovariance,
}

impl CgmConfig {
    /// `k = 250`, `ε = 1e−6`, `b = ⌈ν_max T⌉ + 1`, white noise.
    pub fn for_channel(grid: &GridParams, nu_max: f64, sigma2: f64) -> Self {
        Self {
            max_iters: 250,
            tolerance: 1e-6,
            half_bandwidth: half_bandwidth(grid, nu_max),
            noise: NoiseCovariance::White(sigma2),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(invalid("CGM needs at least one iteration"));
        }
        if !(self.tolerance > 0.0) {
            return Err(invalid("CGM tolerance must be positive"));
        }
        Ok(())
    }
}

/// `⌈ν_max T⌉ + 1`.
pub fn half_bandwidth(grid: &GridParams, nu_max: f64) -> usize {
    (nu_max * grid.duration()).ceil() as usize + 1
}

#[derive(Clone, Debug)]
pub struct CgmResult {
    pub s: Vec<C64>,
    pub iterations: usize,
    pub converged: bool,
    /// `c_norm` before the first iteration and after each iteration.
    pub residual_norms: Vec<f64>,
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Conjugate gradients on `(HᴴH + R_n) s = Hᴴ r`, with `HᴴH p` applied as `Hᴴ(H p)`.
pub fn cgm_solve(h: &impl LinearOperator, r: &[C64], cfg: &CgmConfig) -> Result<CgmResult> {
    cfg.validate()?;
    let n = h.dim();
    if r.len() != n {
        return Err(invalid("received vector does not match the operator"));
    }
    let rn = |p: &[C64]| -> Vec<C64> {
        match &cfg.noise {
            NoiseCovariance::White(s2) => p.iter().map(|v| v * *s2).collect(),
            NoiseCovariance::Explicit(m) => m.apply(p),
        }
    };
    let b = h.apply_adjoint(r);
    let mut s = vec![C64::new(0.0, 0.0); n];
    let mut c = b.clone();
    let mut p = c.clone();
    let mut c_norm: f64 = c.iter().map(|v| v.norm_sqr()).sum();
    let mut norms = vec![c_norm];
    let mut converged = c_norm < cfg.tolerance.powi(2);
    let mut iterations = 0;
    while !converged && iterations < cfg.max_iters {
        iterations += 1;
        let hp = h.apply_adjoint(&h.apply(&p));
        let ap: Vec<C64> = hp.iter().zip(rn(&p)).map(|(a, b)| a + b).collect();
        let alpha = c_norm / dot(&p, &ap);
        for (si, pi) in s.iter_mut().zip(&p) {
            *si += alpha * pi;
        }
        for (ci, ai) in c.iter_mut().zip(&ap) {
            *ci -= alpha * ai;
        }
        let new_norm: f64 = c.iter().map(|v| v.norm_sqr()).sum();
        norms.push(new_norm);
        if new_norm < cfg.tolerance.powi(2) {
            converged = true;
            break;
        }
        let beta = new_norm / c_norm;
        for (pi, ci) in p.iter_mut().zip(&c) {
            *pi = ci + *pi * beta;
        }
        c_norm = new_norm;
    }
    Ok(CgmResult { s, iterations, converged, residual_norms: norms })
}

/// Taps read from a pilot-only frame with a unit pilot at `pilot`.
pub fn estimate_channel_pilot(y_dd: &DDArray, pilot: (usize, usize), window: &BoxSpec) -> Result<EffectiveChannel> {
    read_taps(y_dd, pilot, window)
}

/// Equalizers compared by the BER harness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Equalizer {
    DdMmse,
    FdCgm,
}

impl Equalizer {
    pub fn name(&self) -> &'static str {
        match self {
            Self::DdMmse => "dd-mmse",
            Self::FdCgm => "fd-cgm",
        }
    }
}

/// One BER measurement.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BerPoint {
    pub snr_db: f64,
    pub trials: u64,
    pub bits: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub scheme: String,
    pub filter: String,
    pub seed: u64,
}

impl BerPoint {
    /// Binomial standard error of the BER estimate.
    pub fn std_error(&self) -> f64 {
        (self.ber * (1.0 - self.ber) / self.bits as f64).sqrt()
    }
}

/// Setup of the DD-versus-FD equalizer comparison.
#[derive(Clone, Debug)]
pub struct EqualizerStudy {
    pub filter: FilterSpec,
    pub nu_max: f64,
    pub snr_db: Vec<f64>,
    pub frames: usize,
    pub q: usize,
    pub seed: u64,
    pub equalizers: Vec<Equalizer>,
    pub cgm_max_iters: usize,
    pub cgm_tolerance: f64,
}

/// Per-frame outcome, one entry per `(snr, equalizer)`.
struct FrameOutcome {
    errors: Vec<Vec<u64>>,
}

fn run_frame(study: &EqualizerStudy, chain: &TdChain, frame: u64) -> Result<FrameOutcome> {
    let grid = *chain.grid();
    let mn = grid.mn();
    let ch = sample_veh_a(study.nu_max, seed::derive_seed(study.seed, 3 * frame))?;
    let h = probe_with_chain(chain, &ch, None)?;
    let mut rng = seed::rng(seed::derive_seed(study.seed, 3 * frame + 1));
    let bits = random_bits(&mut rng, 2 * mn);
    let x = vector_to_dd(&qam_map(&bits)?, grid)?;
    let clean = chain.receive(&apply_ltv(&chain.transmit(&x), &ch)?);
    let mut nrng = seed::rng(seed::derive_seed(study.seed, 3 * frame + 2));
    let unit_noise: Vec<C64> = (0..mn).map(|_| complex_gaussian(&mut nrng, 1.0)).collect();

    let normal = study.equalizers.contains(&Equalizer::DdMmse).then(|| NormalSolver::from_taps(&h));
    let b = half_bandwidth(&grid, study.nu_max);
    let banded = study.equalizers.contains(&Equalizer::FdCgm).then(|| BandedFDMatrix::from_taps(&h, b).0);

    let mut errors = Vec::with_capacity(study.snr_db.len());
    for &snr in &study.snr_db {
        let sigma2 = channel::noise_variance(snr);
        let sd = sigma2.sqrt();
        let y: Vec<C64> = clean.as_slice().iter().zip(&unit_noise).map(|(c, w)| c + w * sd).collect();
        let mut row = Vec::with_capacity(study.equalizers.len());
        for eq in &study.equalizers {
            let xhat = match eq {
                Equalizer::DdMmse => {
                    let hy = adjoint_apply(&h, &y);
                    normal.as_ref().expect("built above").solve(&hy, sigma2)?
                }
                Equalizer::FdCgm => {
                    let r = idfzt(&vector_to_dd(&y, grid)?);
                    let cfg = CgmConfig {
                        max_iters: study.cgm_max_iters,
                        tolerance: study.cgm_tolerance,
                        half_bandwidth: b,
                        noise: NoiseCovariance::White(sigma2),
                    };
                    let res = cgm_solve(banded.as_ref().expect("built above"), r.as_slice(), &cfg)?;
                    dd_to_vector(&idfzt_adjoint(&FDSequence::new(grid, res.s)?))
                }
            };
            row.push(count_bit_errors(&bits, &qam_demap(&xhat)));
        }
        errors.push(row);
    }
    Ok(FrameOutcome { errors })
}

/// Runs the comparison; frame `f` uses seeds derived from `(seed, f)` only, so results do not depend on
/// how frames are scheduled. `frame_map` evaluates frames, serially or in parallel, in index order.
pub fn run_equalizer_study_with<F>(study: &EqualizerStudy, frame_map: F) -> Result<Vec<BerPoint>>
where
    F: Fn(&(dyn Fn(u64) -> Result<Vec<Vec<u64>>> + Sync), u64) -> Vec<Result<Vec<Vec<u64>>>>,
{
    if study.frames == 0 || study.snr_db.is_empty() || study.equalizers.is_empty() {
        return Err(invalid("study needs frames, SNR points and equalizers"));
    }
    let chain = TdChain::new(study.filter.clone(), study.q, channel::DEFAULT_FRAMES)?;
    let grid = *chain.grid();
    let per_frame = |f: u64| run_frame(study, &chain, f).map(|o| o.errors);
    let outcomes = frame_map(&per_frame, study.frames as u64);
    let mut totals = vec![vec![0u64; study.equalizers.len()]; study.snr_db.len()];
    for o in outcomes {
        for (t, e) in totals.iter_mut().zip(o?) {
            for (a, b) in t.iter_mut().zip(e) {
                *a += b;
            }
        }
    }
    let bits = (study.frames * 2 * grid.mn()) as u64;
    let mut out = Vec::new();
    for (si, &snr) in study.snr_db.iter().enumerate() {
        for (ei, eq) in study.equalizers.iter().enumerate() {
            let errs = totals[si][ei];
            out.push(BerPoint {
                snr_db: snr,
                trials: study.frames as u64,
                bits,
                bit_errors: errs,
                ber: errs as f64 / bits as f64,
                scheme: eq.name().to_string(),
                filter: study.filter.family.name().to_string(),
                seed: study.seed,
            });
        }
    }
    Ok(out)
}

/// Serial [`run_equalizer_study_with`].
pub fn run_equalizer_study(study: &EqualizerStudy) -> Result<Vec<BerPoint>> {
    run_equalizer_study_with(study, |f, n| (0..n).map(f).collect())
}

/// Dense-matrix DD MMSE of a whole frame, for small grids and cross-checks.
pub fn equalize_dd_frame(h: &EffectiveChannel, y: &DDArray, sigma2: f64) -> Result<DDArray> {
    if sigma2 < 0.0 {
        return Err(invalid("noise variance must be non-negative"));
    }
    let x = NormalSolver::from_taps(h).solve(&adjoint_apply(h, &dd_to_vector(y)), sigma2)?;
    vector_to_dd(&x, h.grid)
}
