//! Discrete cross-ambiguity functions and the support predicates built on them.
//!
//! `A_{x,y}[k,l] = Σ_n x[n] conj(y[n−k]) e^{−j2π l (n−k)/MN}` over `Z_MN × Z_MN`.
//! The pulsone fast path evaluates one length-N DFT per delay residue.

use std::collections::{HashMap, HashSet};

use rustfft::FftPlanner;

use crate::error::{Result, ZakError};
use crate::fft::CountedDft;
use crate::grid::{cis_ratio, GridParams, TDSequence, C64};
use crate::transforms::gcd;
use crate::waveforms::{subgroup_index_set, SubgroupSpec};

/// Ambiguity values over a caller-chosen set of DD points.
#[derive(Clone, Debug)]
pub struct AmbiguitySurface {
    pub grid: GridParams,
    pub region: Vec<(i64, i64)>,
    pub values: Vec<C64>,
    index: HashMap<(i64, i64), usize>,
}

impl AmbiguitySurface {
    pub(crate) fn new(grid: GridParams, region: Vec<(i64, i64)>, values: Vec<C64>) -> Self {
        let mn = grid.mn() as i64;
        let index = region.iter().enumerate().map(|(i, &(k, l))| ((k.rem_euclid(mn), l.rem_euclid(mn)), i)).collect();
        Self { grid, region, values, index }
    }

    /// Value at `(k, l)` (reduced mod MN), if the point is in the region.
    pub fn get(&self, k: i64, l: i64) -> Option<C64> {
        let mn = self.grid.mn() as i64;
        self.index.get(&(k.rem_euclid(mn), l.rem_euclid(mn))).map(|&i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(i64, i64), &C64)> {
        self.region.iter().zip(&self.values)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// `{(k, l) : 0 ≤ k < M, 0 ≤ l < N}`.
pub fn core_region(grid: &GridParams) -> Vec<(i64, i64)> {
    let (m, n) = (grid.m() as i64, grid.n() as i64);
    (0..m).flat_map(|k| (0..n).map(move |l| (k, l))).collect()
}

/// Rectangle `[k_min, k_max] × [l_min, l_max]`, bounds inclusive.
pub fn box_region(k_min: i64, k_max: i64, l_min: i64, l_max: i64) -> Vec<(i64, i64)> {
    (k_min..=k_max).flat_map(|k| (l_min..=l_max).map(move |l| (k, l))).collect()
}

/// All of `Z_MN × Z_MN`.
pub fn full_region(grid: &GridParams) -> Vec<(i64, i64)> {
    let mn = grid.mn() as i64;
    (0..mn).flat_map(|k| (0..mn).map(move |l| (k, l))).collect()
}

fn amb_point(x: &[C64], y: &[C64], k: i64, l: i64) -> C64 {
    let mn = x.len() as i64;
    let mut acc = C64::new(0.0, 0.0);
    for (n, xv) in x.iter().enumerate() {
        let s = n as i64 - k;
        let yv = y[s.rem_euclid(mn) as usize];
        if yv.re == 0.0 && yv.im == 0.0 {
            continue;
        }
        acc += xv * yv.conj() * cis_ratio(-(l as i128 * s as i128), mn as i128);
    }
    acc
}

/// Direct evaluation of the cross-ambiguity at each region point, `O(MN)` per point.
pub fn cross_ambiguity(x: &TDSequence, y: &TDSequence, region: &[(i64, i64)]) -> AmbiguitySurface {
    let values = region.iter().map(|&(k, l)| amb_point(x.as_slice(), y.as_slice(), k, l)).collect();
    AmbiguitySurface::new(*x.grid(), region.to_vec(), values)
}

/// Complete `MN × MN` surface via one length-MN FFT per delay; row-major in `k`.
pub fn full_surface(x: &TDSequence, y: &TDSequence) -> Vec<C64> {
    let mn = x.len();
    let fft = FftPlanner::new().plan_fft_forward(mn);
    let mut out = vec![C64::new(0.0, 0.0); mn * mn];
    let (xs, ys) = (x.as_slice(), y.as_slice());
    for k in 0..mn {
        let row = &mut out[k * mn..(k + 1) * mn];
        for n in 0..mn {
            row[n] = xs[n] * ys[(n + mn - k) % mn].conj();
        }
        fft.process(row);
        for (l, v) in row.iter_mut().enumerate() {
            *v *= cis_ratio((l * k) as i128, mn as i128);
        }
    }
    out
}

/// Cross-ambiguity against `pulsone(k0, l0)`: the inner sum over the pulse
/// train is a length-N DFT of `x[r + l̄M]`, computed once per delay residue
/// `r = (k + k0) mod M`. Returns the surface and the number of complex multiplies.
pub fn fast_cross_ambiguity_pulsone(
    x: &TDSequence,
    k0: usize,
    l0: usize,
    region: &[(i64, i64)],
) -> (AmbiguitySurface, u64) {
    let g = *x.grid();
    let (m, n, mn) = (g.m() as i64, g.n() as i64, g.mn() as i128);
    let (k0, l0) = (k0 as i64 % m, l0 as i64 % n);
    let dft = CountedDft::new(n as usize);
    let mut cache: HashMap<i64, Vec<C64>> = HashMap::new();
    let mut count = 0u64;
    let scale = 1.0 / (n as f64).sqrt();
    let xs = x.as_slice();
    let mut values = Vec::with_capacity(region.len());
    for &(k, l) in region {
        let r = (k + k0).rem_euclid(m);
        let f = (k + k0).div_euclid(m);
        let spec = cache.entry(r).or_insert_with(|| {
            let mut col: Vec<C64> = (0..n).map(|lb| xs[(r + lb * m) as usize]).collect();
            dft.forward(&mut col, &mut count);
            col
        });
        let s = spec[(l + l0).rem_euclid(n) as usize];
        let phase = cis_ratio(-(l as i128 * (r - k) as i128), mn) * cis_ratio(f as i128 * l0 as i128, n as i128);
        values.push(phase * scale * s);
        count += 1;
    }
    (AmbiguitySurface::new(g, region.to_vec(), values), count)
}

/// Both sides of Moyal's identity: `(1/MN) Σ conj(A_x) A_y` and `|⟨x, y⟩|²`.
#[derive(Clone, Copy, Debug)]
pub struct MoyalReport {
    pub lhs: C64,
    pub rhs: f64,
}

pub fn moyal_check(x: &TDSequence, y: &TDSequence) -> MoyalReport {
    let ax = full_surface(x, x);
    let ay = full_surface(y, y);
    let mn = x.len() as f64;
    let lhs = ax.iter().zip(&ay).map(|(a, b)| a.conj() * b).sum::<C64>() / mn;
    MoyalReport { lhs, rhs: x.inner(y).norm_sqr() }
}

/// Inclusive rectangle of DD indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct BoxSpec {
    pub k_min: i64,
    pub k_max: i64,
    pub l_min: i64,
    pub l_max: i64,
}

impl BoxSpec {
    pub fn points(&self) -> Vec<(i64, i64)> {
        box_region(self.k_min, self.k_max, self.l_min, self.l_max)
    }
}

/// A set of DD points, optionally described by a bounding rectangle.
#[derive(Clone, Debug, Default)]
pub struct SupportSet {
    pub points: Vec<(i64, i64)>,
    pub boxed: Option<BoxSpec>,
}

impl SupportSet {
    pub fn from_points(points: Vec<(i64, i64)>) -> Self {
        Self { points, boxed: None }
    }
    pub fn from_box(b: BoxSpec) -> Self {
        Self { points: b.points(), boxed: Some(b) }
    }
}

/// `K_S = {s1 − s2}` reduced mod MN, sorted.
pub fn channel_support_kset(s: &SupportSet, grid: &GridParams) -> SupportSet {
    let mn = grid.mn() as i64;
    let mut set = HashSet::new();
    for &(k1, l1) in &s.points {
        for &(k2, l2) in &s.points {
            set.insert(((k1 - k2).rem_euclid(mn), (l1 - l2).rem_euclid(mn)));
        }
    }
    let mut points: Vec<_> = set.into_iter().collect();
    points.sort_unstable();
    SupportSet::from_points(points)
}

pub const PREDICTABILITY_TOL: f64 = 1e-6;

/// True iff `A[0,0] = 1` and `A` vanishes on `K_S \ {0}` (tolerance 1e-6).
pub fn predictability_check(selfamb: &AmbiguitySurface, s: &SupportSet) -> Result<bool> {
    let ks = channel_support_kset(s, &selfamb.grid);
    let mut ok = true;
    for &(k, l) in &ks.points {
        let v = selfamb.get(k, l).ok_or(ZakError::Coverage(k, l))?;
        if k == 0 && l == 0 {
            ok &= (v - C64::new(1.0, 0.0)).norm() < PREDICTABILITY_TOL;
        } else {
            ok &= v.norm() < PREDICTABILITY_TOL;
        }
    }
    Ok(ok)
}

fn in_centered_range(v: i64, half: i64, mn: i64) -> bool {
    if 2 * half + 1 >= mn {
        return true;
    }
    let r = v.rem_euclid(mn);
    r <= half || r >= mn - half
}

/// True iff the translates `C + s`, `s ∈ S`, are pairwise disjoint on the MN torus.
pub fn crystallization_check(subgroup: &[(i64, i64)], c: &BoxSpec, grid: &GridParams) -> bool {
    let mn = grid.mn() as i64;
    let wk = c.k_max - c.k_min;
    let wl = c.l_max - c.l_min;
    let diffs = channel_support_kset(&SupportSet::from_points(subgroup.to_vec()), grid);
    !diffs
        .points
        .iter()
        .any(|&(k, l)| (k, l) != (0, 0) && in_centered_range(k, wk, mn) && in_centered_range(l, wl, mn))
}

/// Smallest `α ∈ [1, MN)` coprime to MN whose line subgroup passes [`crystallization_check`].
pub fn search_compliant_line(c: &BoxSpec, grid: &GridParams) -> Option<i64> {
    let mn = grid.mn() as i64;
    (1..mn).filter(|&a| gcd(a, mn) == 1).find(|&alpha| {
        subgroup_index_set(&SubgroupSpec::Line { alpha }, grid)
            .map(|s| crystallization_check(&s, c, grid))
            .unwrap_or(false)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveforms::pulsone;

    fn g(m: usize, n: usize) -> GridParams {
        GridParams::discrete(m, n).unwrap()
    }

    fn pseudo(gr: GridParams, seed: f64) -> TDSequence {
        TDSequence::new(
            gr,
            (0..gr.mn()).map(|i| C64::new((seed * i as f64 + 0.3).sin(), (seed * 1.7 * i as f64).cos())).collect(),
        )
        .unwrap()
        .normalized()
    }

    #[test]
    fn self_ambiguity_at_origin_is_one() {
        let x = pseudo(g(3, 4), 0.9);
        let a = cross_ambiguity(&x, &x, &[(0, 0)]);
        assert!((a.values[0] - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn full_surface_matches_direct() {
        let gr = g(3, 4);
        let (x, y) = (pseudo(gr, 0.9), pseudo(gr, 1.3));
        let full = full_surface(&x, &y);
        let direct = cross_ambiguity(&x, &y, &full_region(&gr));
        for (i, v) in direct.values.iter().enumerate() {
            assert!((full[i] - v).norm() < 1e-12);
        }
    }

    #[test]
    fn fast_matches_direct_on_windows() {
        let gr = g(5, 6);
        let x = pseudo(gr, 0.4);
        let region = box_region(-7, 12, -8, 9);
        let (fast, _) = fast_cross_ambiguity_pulsone(&x, 3, 4, &region);
        let direct = cross_ambiguity(&x, &pulsone(gr, 3, 4), &region);
        for (a, b) in fast.values.iter().zip(&direct.values) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn kset_examples() {
        let gr = g(2, 3);
        let k = channel_support_kset(&SupportSet::from_points(vec![(0, 0)]), &gr);
        assert_eq!(k.points, vec![(0, 0)]);
        let k = channel_support_kset(&SupportSet::from_points(vec![(0, 0), (1, 0)]), &gr);
        assert_eq!(k.points, vec![(0, 0), (1, 0), (5, 0)]);
    }

    #[test]
    fn predictability_examples() {
        let gr = g(5, 8);
        let p = pulsone(gr, 2, 3);
        let surf = cross_ambiguity(&p, &p, &full_region(&gr));
        let inside = SupportSet::from_box(BoxSpec { k_min: 0, k_max: 3, l_min: -3, l_max: 3 });
        assert!(predictability_check(&surf, &inside).unwrap());
        let wide = SupportSet::from_box(BoxSpec { k_min: 0, k_max: 5, l_min: 0, l_max: 0 });
        assert!(!predictability_check(&surf, &wide).unwrap());
        let partial = cross_ambiguity(&p, &p, &[(0, 0)]);
        assert!(predictability_check(&partial, &inside).is_err());
    }

    #[test]
    fn crystallization_examples() {
        let gr = g(5, 6);
        let rect = subgroup_index_set(&SubgroupSpec::RectLattice, &gr).unwrap();
        assert!(crystallization_check(&rect, &BoxSpec { k_min: 0, k_max: 3, l_min: -2, l_max: 2 }, &gr));
        assert!(!crystallization_check(&rect, &BoxSpec { k_min: 0, k_max: 5, l_min: -2, l_max: 2 }, &gr));
        let all = BoxSpec { k_min: 0, k_max: 29, l_min: 0, l_max: 29 };
        assert!(!crystallization_check(&rect, &all, &gr));
    }
}
