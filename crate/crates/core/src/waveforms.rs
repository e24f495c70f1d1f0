//! Carrier families, discrete Heisenberg-Weyl operators and maximal
//! commutative subgroups.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, ZakError};
use crate::grid::{cis_ratio, DDArray, GridParams, TDSequence, C64};
use crate::transforms::{gcd, gdaft, SymplecticParams};

/// Modulation basis families.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BasisFamily {
    Ofdm,
    /// Chirp constants `c1 = c1_num/(2MN)`, `c2 = c2_num/(2MN)`.
    Afdm { c1_num: i64, c2_num: i64 },
    Oddm,
    Otsm,
    ZakPulsone,
    SpreadCazac(SymplecticParams),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasisSpec {
    pub family: BasisFamily,
    pub grid: GridParams,
}

impl BasisSpec {
    pub fn new(family: BasisFamily, grid: GridParams) -> Result<Self> {
        match family {
            BasisFamily::Otsm if !grid.n().is_power_of_two() => {
                return Err(invalid(format!("OTSM needs N a power of two, got N = {}", grid.n())))
            }
            BasisFamily::SpreadCazac(p) if p.mn as usize != grid.mn() => {
                return Err(invalid("symplectic parameters do not match the grid"))
            }
            _ => {}
        }
        Ok(Self { family, grid })
    }
}

/// Zak pulsone at DD point `(k0, l0)`: a pulse train of period M modulated by a tone.
pub fn pulsone(grid: GridParams, k0: usize, l0: usize) -> TDSequence {
    let (m, n) = (grid.m(), grid.n());
    let mut v = vec![C64::new(0.0, 0.0); grid.mn()];
    let amp = 1.0 / (n as f64).sqrt();
    for d in 0..n {
        v[k0 % m + d * m] = cis_ratio((d * (l0 % n)) as i128, n as i128) * amp;
    }
    TDSequence::new(grid, v).expect("length MN")
}

/// Chirp `(MN)^{-1/2} exp(j2π(α n² + β n)/MN)`, an eigenvector of the line subgroup of slope 2α.
pub fn chirp(grid: GridParams, alpha: i64, beta: i64) -> TDSequence {
    let mn = grid.mn() as i128;
    let amp = 1.0 / (mn as f64).sqrt();
    let v = (0..mn)
        .map(|n| cis_ratio(alpha as i128 * n * n + beta as i128 * n, mn) * amp)
        .collect();
    TDSequence::new(grid, v).expect("length MN")
}

/// The `i`-th element of a basis family.
pub fn basis_element(spec: &BasisSpec, i: usize) -> Result<TDSequence> {
    let g = spec.grid;
    let (m, n, mn) = (g.m(), g.n(), g.mn());
    if i >= mn {
        return Err(ZakError::IndexOutOfRange { index: i, len: mn });
    }
    let zero = C64::new(0.0, 0.0);
    let v: Vec<C64> = match spec.family {
        BasisFamily::ZakPulsone => return Ok(pulsone(g, i % m, i / m)),
        BasisFamily::SpreadCazac(p) => return gdaft(&pulsone(g, i % m, i / m), &p),
        BasisFamily::Oddm => {
            let amp = 1.0 / (n as f64).sqrt();
            (0..mn)
                .map(|s| if s % m == i % m { cis_ratio(((i / m) * (s / m)) as i128, n as i128) * amp } else { zero })
                .collect()
        }
        BasisFamily::Otsm => {
            let amp = 1.0 / (n as f64).sqrt();
            (0..mn)
                .map(|s| {
                    if s % m != i % m {
                        zero
                    } else if ((i / m) & (s / m)).count_ones() % 2 == 0 {
                        C64::new(amp, 0.0)
                    } else {
                        C64::new(-amp, 0.0)
                    }
                })
                .collect()
        }
        BasisFamily::Ofdm => {
            let amp = 1.0 / (m as f64).sqrt();
            (0..mn)
                .map(|s| if s / m == i / m { cis_ratio((i * s) as i128, m as i128) * amp } else { zero })
                .collect()
        }
        BasisFamily::Afdm { c1_num, c2_num } => {
            let den = 2 * mn as i128;
            let amp = 1.0 / (mn as f64).sqrt();
            let (ii, c1, c2) = (i as i128, c1_num as i128, c2_num as i128);
            (0..mn as i128)
                .map(|s| cis_ratio(c1 * s * s + c2 * ii * ii + 2 * s * ii, den) * amp)
                .collect()
        }
    };
    TDSequence::new(g, v)
}

/// All MN elements of a basis.
pub fn basis_set(spec: &BasisSpec) -> Result<Vec<TDSequence>> {
    (0..spec.grid.mn()).map(|i| basis_element(spec, i)).collect()
}

/// `(D_{(k,l)} x)[n] = x[(n−k) mod MN] exp(j2π l (n−k)/MN)`.
pub fn heisenberg_shift(x: &TDSequence, k: i64, l: i64) -> TDSequence {
    let mn = x.len() as i64;
    let out = (0..mn)
        .map(|n| x.at(n - k) * cis_ratio(l as i128 * (n - k) as i128, mn as i128))
        .collect();
    TDSequence::new(*x.grid(), out).expect("length MN")
}

/// DD-domain image of a Heisenberg shift:
/// `Y[k',l'] = X[(k'−k)_M, (l'−l)_N] e^{j2π(l'−l)⌊(k'−k)/M⌋/N} e^{j2π l(k'−k)/MN}`.
pub fn dd_shift(x: &DDArray, k: i64, l: i64) -> DDArray {
    let g = *x.grid();
    let (m, n, mn) = (g.m() as i64, g.n() as i64, g.mn() as i128);
    DDArray::from_fn(g, |kp, lp| {
        let (dk, dl) = (kp as i64 - k, lp as i64 - l);
        let core = x.get(dk.rem_euclid(m) as usize, dl.rem_euclid(n) as usize);
        core * cis_ratio(dl as i128 * dk.div_euclid(m) as i128, n as i128) * cis_ratio(l as i128 * dk as i128, mn)
    })
}

/// Maximal commutative subgroups of the discrete Heisenberg-Weyl group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubgroupSpec {
    /// `{(aM, bN)}`; eigenvectors are pulsones.
    RectLattice,
    /// `{(k, 2αk mod MN)}`; eigenvectors are chirps.
    Line { alpha: i64 },
}

/// Index set of the subgroup in `Z_MN × Z_MN`.
pub fn subgroup_index_set(sg: &SubgroupSpec, grid: &GridParams) -> Result<Vec<(i64, i64)>> {
    let (m, n, mn) = (grid.m() as i64, grid.n() as i64, grid.mn() as i64);
    let set: Vec<(i64, i64)> = match *sg {
        SubgroupSpec::RectLattice => {
            let mut s = Vec::with_capacity(mn as usize);
            for a in 0..n {
                for b in 0..m {
                    s.push((a * m, b * n));
                }
            }
            s
        }
        SubgroupSpec::Line { alpha } => {
            if gcd(alpha, mn) != 1 {
                return Err(invalid(format!("line slope parameter {alpha} is not coprime to MN = {mn}")));
            }
            (0..mn).map(|k| (k, ((2 * alpha as i128 * k as i128).rem_euclid(mn as i128)) as i64)).collect()
        }
    };
    let mut uniq = set.clone();
    uniq.sort_unstable();
    uniq.dedup();
    if uniq.len() != mn as usize {
        return Err(invalid(format!("subgroup enumerates {} distinct points, expected {mn}", uniq.len())));
    }
    Ok(set)
}

/// Outcome of [`eigen_check`].
#[derive(Clone, Debug)]
pub struct EigenReport {
    pub is_eigenvector: bool,
    /// `((k, l), λ)` for every subgroup element, `λ = ⟨D x, x⟩`.
    pub eigenvalues: Vec<((i64, i64), C64)>,
    pub max_residual: f64,
    pub max_off_subgroup: f64,
}

pub const EIGEN_TOL: f64 = 1e-8;

/// Tests whether `x` is a common eigenvector of the subgroup and orthogonal to its off-subgroup shifts.
pub fn eigen_check(x: &TDSequence, sg: &SubgroupSpec) -> Result<EigenReport> {
    let g = *x.grid();
    let mn = g.mn() as i64;
    let set = subgroup_index_set(sg, &g)?;
    let mut eigenvalues = Vec::with_capacity(set.len());
    let mut max_residual: f64 = 0.0;
    for &(k, l) in &set {
        let dx = heisenberg_shift(x, k, l);
        let lambda = dx.inner(x);
        let res = dx
            .as_slice()
            .iter()
            .zip(x.as_slice())
            .map(|(a, b)| (a - lambda * b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        max_residual = max_residual.max(res);
        eigenvalues.push(((k, l), lambda));
    }
    let mut members = set.clone();
    members.sort_unstable();
    let off: Vec<(i64, i64)> = if mn * mn <= 1 << 16 {
        (0..mn).flat_map(|k| (0..mn).map(move |l| (k, l))).filter(|p| members.binary_search(p).is_err()).collect()
    } else {
        let mut state = 0x5EED_u64;
        let mut pts = Vec::with_capacity(512);
        while pts.len() < 512 {
            state = crate::seed::splitmix64(state);
            let p = ((state % mn as u64) as i64, ((state >> 32) % mn as u64) as i64);
            if members.binary_search(&p).is_err() {
                pts.push(p);
            }
        }
        pts
    };
    let max_off = off
        .iter()
        .map(|&(k, l)| x.inner(&heisenberg_shift(x, k, l)).norm())
        .fold(0.0, f64::max);
    Ok(EigenReport {
        is_eigenvector: max_residual < EIGEN_TOL && max_off < EIGEN_TOL,
        eigenvalues,
        max_residual,
        max_off_subgroup: max_off,
    })
}

/// For each pulsone index `i`, the chirp index `β` with `|⟨gdaft(pulsone_i), chirp(α, β)⟩| = 1`.
/// Returns `None` when the transform does not carry the pulsone basis onto the chirp basis of slope `2α`.
pub fn pulsone_to_chirp_permutation(grid: GridParams, p: &SymplecticParams, alpha: i64) -> Result<Option<Vec<usize>>> {
    let mn = grid.mn();
    let chirps: Vec<TDSequence> = (0..mn as i64).map(|b| chirp(grid, alpha, b)).collect();
    let mut perm = Vec::with_capacity(mn);
    for i in 0..mn {
        let v = gdaft(&pulsone(grid, i % grid.m(), i / grid.m()), p)?;
        match chirps.iter().position(|c| (v.inner(c).norm() - 1.0).abs() < 1e-8) {
            Some(b) => perm.push(b),
            None => return Ok(None),
        }
    }
    Ok(Some(perm))
}
