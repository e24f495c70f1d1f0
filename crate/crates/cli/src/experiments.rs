//! Experiment runners: each turns a validated configuration into tables and a JSON summary.

use nalgebra::Matrix2;
use rayon::prelude::*;
use serde_json::json;
use rand::Rng;
use zakdd::ambiguity::{core_region, full_surface, BoxSpec};
use zakdd::channel::{
    complex_gaussian, noise_variance, probe_with_chain, EffectiveChannel, TdChain, DEFAULT_FRAMES,
};
use zakdd::filters::{delay_cross_section, filter_metrics, FilterFamily};
use zakdd::grid::{dd_to_vector, vector_to_dd};
use zakdd::radar::{
    detection_roc, dual_pol_simulate, instant_polarimetry, papr_ccdf, papr_samples, phase_coded_baseline,
    polarimetry_waveforms, radar_image_with_path, select_waveform, simulate_echo, PolChannel, PolTarget, RocConfig,
};
use zakdd::rxchain::{
    adjoint_apply, cgm_solve, count_bit_errors, half_bandwidth, qam_demap, qam_map, random_bits,
    run_equalizer_study_with, BandedFDMatrix, CgmConfig, EqualizerStudy, NoiseCovariance, NormalSolver,
};
use zakdd::schemes::{
    differential_run, effective_rate, mub_trial, DifferentialConfig, ErrorInjection, MubConfig, MubSystem, MubTrial,
    TcmCodec, TCM_D2_FREE,
};
use zakdd::seed::{derive_seed, rng};
use zakdd::transforms::{gdaft, idfzt, idfzt_adjoint, idzt};
use zakdd::waveforms::pulsone;
use zakdd::{FDSequence, FilterSpec, GridParams, SymplecticParams, TDSequence, C64};

use crate::config::{roc_clutter, Experiment, ExperimentConfig, MubChannel, PaprFamily, WaveformConfig};
use crate::error::{runtime, CliError};
use crate::output::{num, Report, Table};

/// Runs the configured experiment; the configuration must already be validated.
pub fn run(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let grid = cfg.grid.build()?;
    match cfg.experiment {
        Experiment::Ambiguity => ambiguity(cfg, grid),
        Experiment::Filters => filters(cfg, grid),
        Experiment::Ber => ber(cfg, grid),
        Experiment::Fde => fde(cfg, grid),
        Experiment::Diffcomm => diffcomm(cfg, grid),
        Experiment::Mub => mub(cfg, grid),
        Experiment::Radar => radar(cfg, grid),
        Experiment::Polarimetry => polarimetry(cfg, grid),
        Experiment::Papr => papr(cfg, grid),
    }
}

fn db20(x: f64) -> f64 {
    20.0 * x.max(1e-15).log10()
}

/// Bounding box of the channel support in bins, delays from zero.
fn channel_box(cfg: &ExperimentConfig, grid: &GridParams) -> BoxSpec {
    let k = (cfg.channel.tau_max() * grid.bandwidth()).ceil() as i64;
    let l = (cfg.channel.nu_max() * grid.duration()).ceil() as i64;
    BoxSpec { k_min: 0, k_max: k, l_min: -l, l_max: l }
}

fn points_box(points: impl IntoIterator<Item = (i64, i64)>) -> BoxSpec {
    let mut b = BoxSpec { k_min: 0, k_max: 0, l_min: 0, l_max: 0 };
    for (k, l) in points {
        b.k_min = b.k_min.min(k);
        b.k_max = b.k_max.max(k);
        b.l_min = b.l_min.min(l);
        b.l_max = b.l_max.max(l);
    }
    b
}

/// Transmit waveform; `support` is used by `auto` selection.
pub fn build_waveform(w: &WaveformConfig, grid: GridParams, support: &BoxSpec) -> Result<TDSequence, CliError> {
    let in_range = |k0: usize, l0: usize| {
        if k0 >= grid.m() || l0 >= grid.n() {
            Err(CliError::Invalid(format!("waveform point ({k0}, {l0}) outside the {}x{} grid", grid.m(), grid.n())))
        } else {
            Ok(())
        }
    };
    Ok(match *w {
        WaveformConfig::Pulsone { k0, l0 } => {
            in_range(k0, l0)?;
            pulsone(grid, k0, l0)
        }
        WaveformConfig::Chirp { alpha, beta } => zakdd::waveforms::chirp(grid, alpha, beta),
        WaveformConfig::Cazac { k0, l0 } => {
            in_range(k0, l0)?;
            gdaft(&pulsone(grid, k0, l0), &SymplecticParams::cazac_default(&grid)?)?
        }
        WaveformConfig::ZadoffChu { root } => phase_coded_baseline(root, &grid)?,
        WaveformConfig::Auto => select_waveform(support, &grid)?.1,
    })
}

fn ambiguity(cfg: &ExperimentConfig, grid: GridParams) -> Result<Report, CliError> {
    let x = build_waveform(&cfg.ambiguity.waveform, grid, &channel_box(cfg, &grid))?;
    let mn = grid.mn();
    let surf = full_surface(&x, &x);
    let peak = surf.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut t = Table::new("ambiguity", &["k", "l", "magnitude", "magnitude_db"]);
    let (mut nonzero, mut unimodular) = (0usize, 0usize);
    for k in 0..mn {
        for l in 0..mn {
            let a = surf[k * mn + l].norm();
            nonzero += usize::from(a > 1e-9 * peak);
            unimodular += usize::from((a - 1.0).abs() < 1e-9);
            t.push(vec![k.to_string(), l.to_string(), num(a), num(db20(a))]);
        }
    }
    Ok(Report {
        tables: vec![t],
        summary: json!({ "energy": x.norm_sqr(), "peak": peak, "nonzero_cells": nonzero, "unimodular_cells": unimodular }),
    })
}

fn filters(cfg: &ExperimentConfig, grid: GridParams) -> Result<Report, CliError> {
    let mut families = vec![
        FilterFamily::Sinc,
        FilterFamily::rrc(0.6),
        FilterFamily::gaussian(),
        FilterFamily::gaussian_sinc(),
        FilterFamily::hermite_default(),
    ];
    if !families.contains(&cfg.filter) {
        families.push(cfg.filter.clone());
    }
    let cols = ["family", "orthogonality_residual", "max_sidelobe_db", "band_energy_fraction", "time_energy_fraction"];
    let mut t = Table::new("filters", &cols);
    let mut xs = Table::new("filters_cross_section", &["family", "tau_bins", "magnitude_db"]);
    let mut summary = serde_json::Map::new();
    let results: Vec<_> = families
        .par_iter()
        .map(|f| {
            let spec = FilterSpec::new(f.clone(), grid);
            (filter_metrics(&spec), delay_cross_section(&spec, 8, 8))
        })
        .collect();
    for (f, (m, section)) in families.iter().zip(results) {
        let label = filter_label(f);
        t.push(vec![
            label.clone(),
            num(m.orthogonality_residual),
            num(m.max_sidelobe_db),
            num(m.band_energy_fraction),
            num(m.time_energy_fraction),
        ]);
        for (tau, db) in section {
            xs.push(vec![label.clone(), num(tau), num(db)]);
        }
        summary.insert(label, serde_json::to_value(m).map_err(|e| CliError::Runtime(e.to_string()))?);
    }
    Ok(Report { tables: vec![t, xs], summary: summary.into() })
}

fn filter_label(f: &FilterFamily) -> String {
    match f {
        FilterFamily::Rrc { beta_tau, beta_nu } if beta_tau == beta_nu => format!("rrc_{beta_tau}"),
        FilterFamily::Rrc { beta_tau, beta_nu } => format!("rrc_{beta_tau}_{beta_nu}"),
        other => other.name().to_string(),
    }
}

fn ber(cfg: &ExperimentConfig, grid: GridParams) -> Result<Report, CliError> {
    let study = EqualizerStudy {
        filter: FilterSpec::new(cfg.filter.clone(), grid),
        nu_max: cfg.channel.nu_max,
        snr_db: cfg.snr_db.clone(),
        frames: cfg.trials,
        q: cfg.ber.q,
        seed: cfg.channel.seed.unwrap_or(cfg.seed),
        equalizers: cfg.ber.equalizers.clone(),
        cgm_max_iters: cfg.ber.cgm_max_iters,
        cgm_tolerance: cfg.ber.cgm_tolerance,
    };
    let points = run_equalizer_study_with(&study, |f, n| (0..n).into_par_iter().map(f).collect()).map_err(runtime)?;
    let mut cols = vec!["snr_db".to_string(), "frames".into(), "bits".into()];
    for e in &study.equalizers {
        let n = e.name().replace('-', "_");
        cols.extend([format!("errors_{n}"), format!("ber_{n}"), format!("se_{n}")]);
    }
    let mut t = Table::with_columns("ber", cols);
    let per = study.equalizers.len();
    for chunk in points.chunks(per) {
        let mut row = vec![num(chunk[0].snr_db), chunk[0].trials.to_string(), chunk[0].bits.to_string()];
        for p in chunk {
            row.extend([p.bit_errors.to_string(), num(p.ber), num(p.std_error())]);
        }
        t.push(row);
    }
    let summary = serde_json::to_value(&points).map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(Report { tables: vec![t], summary: json!({ "points": summary }) })
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn fde(cfg: &ExperimentConfig, grid: GridParams) -> Result<Report, CliError> {
    let chain = TdChain::new(FilterSpec::new(cfg.filter.clone(), grid), cfg.ber.q, DEFAULT_FRAMES)?;
    let mn = grid.mn();
    let cols = [
        "trial",
        "snr_db",
        "half_bandwidth",
        "band_energy_fraction",
        "cgm_iterations",
        "cgm_converged",
        "cgm_final_residual",
        "relative_difference",
        "ber_dd_mmse",
        "ber_fd_cgm",
    ];
    let rows: Vec<Vec<Vec<String>>> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| -> Result<Vec<Vec<String>>, CliError> {
            let ch = cfg.channel.instance(cfg.seed, t)?;
            let h = probe_with_chain(&chain, &ch, None).map_err(runtime)?;
            let b = half_bandwidth(&grid, ch.nu_max());
            let (band, lost) = BandedFDMatrix::from_taps(&h, b);
            let normal = NormalSolver::from_taps(&h);
            let mut r = rng(derive_seed(cfg.seed, 2 * t + 1_000_000));
            let bits = random_bits(&mut r, 2 * mn);
            let x = vector_to_dd(&qam_map(&bits).map_err(runtime)?, grid).map_err(runtime)?;
            let clean = chain.receive(&zakdd::channel::apply_ltv(&chain.transmit(&x), &ch).map_err(runtime)?);
            let mut nr = rng(derive_seed(cfg.seed, 2 * t + 1_000_001));
            let unit: Vec<C64> = (0..mn).map(|_| complex_gaussian(&mut nr, 1.0)).collect();
            let mut out = vec![];
            for &snr in &cfg.snr_db {
                let s2 = noise_variance(snr);
                let y: Vec<C64> = clean.as_slice().iter().zip(&unit).map(|(c, w)| c + w * s2.sqrt()).collect();
                let x_dd = normal.solve(&adjoint_apply(&h, &y), s2).map_err(runtime)?;
                let rfd = idfzt(&vector_to_dd(&y, grid).map_err(runtime)?);
                let cg = CgmConfig {
                    max_iters: cfg.ber.cgm_max_iters,
                    tolerance: cfg.ber.cgm_tolerance,
                    half_bandwidth: b,
                    noise: NoiseCovariance::White(s2),
                };
                let res = cgm_solve(&band, rfd.as_slice(), &cg).map_err(runtime)?;
                let x_fd = dd_to_vector(&idfzt_adjoint(&FDSequence::new(grid, res.s).map_err(runtime)?));
                let diff: Vec<C64> = x_fd.iter().zip(&x_dd).map(|(a, b)| a - b).collect();
                let nbits = bits.len() as f64;
                out.push(vec![
                    t.to_string(),
                    num(snr),
                    b.to_string(),
                    num(1.0 - lost),
                    res.iterations.to_string(),
                    res.converged.to_string(),
                    num(*res.residual_norms.last().unwrap_or(&0.0)),
                    num(norm(&diff) / norm(&x_dd).max(f64::MIN_POSITIVE)),
                    num(count_bit_errors(&bits, &qam_demap(&x_dd)) as f64 / nbits),
                    num(count_bit_errors(&bits, &qam_demap(&x_fd)) as f64 / nbits),
                ]);
            }
            Ok(out)
        })
        .collect::<Result<_, _>>()?;
    let mut t = Table::new("fde", &cols);
    rows.into_iter().flatten().for_each(|r| t.push(r));
    let col = |name: &str| t.column(name).expect("known column");
    let (fi, ci) = (col("band_energy_fraction"), col("cgm_converged"));
    let min_band = t.rows.iter().map(|r| r[fi].parse::<f64>().unwrap_or(f64::NAN)).fold(f64::INFINITY, f64::min);
    let converged = t.rows.iter().filter(|r| r[ci] == "true").count();
    Ok(Report { summary: json!({ "min_band_energy_fraction": min_band, "converged": converged, "solves": t.rows.len() }), tables: vec![t] })
}

fn diffcomm(cfg: &ExperimentConfig, grid: GridParams) -> Result<Report, CliError> {
    let d = &cfg.diffcomm;
    let ch = cfg.channel.instance(cfg.seed, 0)?;
    let cols = ["snr_db", "frame", "kind", "estimate_source", "ber", "perfect_csi_ber", "tap_nmse"];
    let mut t = Table::new("diffcomm", &cols);
    let mut summary = vec![];
    let runs: Vec<_> = cfg
        .snr_db
        .par_iter()
        .enumerate()
        .map(|(i, &snr)| -> Result<_, CliError> {
            let mut dc = DifferentialConfig::new(grid, ch.clone(), d.frames, snr, derive_seed(cfg.seed, i as u64));
            dc.pilot_period = d.pilot_period;
            if let Some(fi) = d.frame_interval {
                dc.frame_interval = fi;
            }
            dc.window = d.window;
            dc.inject = d.inject_frame.map(|frame| ErrorInjection { frame, rate: d.inject_rate });
            dc.validate()?;
            Ok((snr, differential_run(&dc).map_err(runtime)?))
        })
        .collect::<Result<_, _>>()?;
    for (snr, reports) in runs {
        let opt = |v: Option<f64>| v.map_or(String::new(), num);
        let kind = |k| serde_json::to_value(k).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        let (mut ber_sum, mut perf_sum, mut count) = (0.0, 0.0, 0usize);
        for r in &reports {
            if let (Some(b), Some(p)) = (r.ber, r.perfect_csi_ber) {
                ber_sum += b;
                perf_sum += p;
                count += 1;
            }
            t.push(vec![
                num(snr),
                r.index.to_string(),
                kind(r.kind),
                kind(r.estimate_source),
                opt(r.ber),
                opt(r.perfect_csi_ber),
                num(r.tap_nmse),
            ]);
        }
        let c = count.max(1) as f64;
        summary.push(json!({ "snr_db": snr, "data_frames": count, "mean_ber": ber_sum / c, "mean_perfect_csi_ber": perf_sum / c }));
    }
    Ok(Report { tables: vec![t], summary: json!({ "per_snr": summary }) })
}

fn mub(cfg: &ExperimentConfig, grid: GridParams) -> Result<Report, CliError> {
    let s = &cfg.mub;
    let mut mc = MubConfig::new(&grid, s.alpha, s.delta)?;
    mc.turbo_iters = s.turbo_iters;
    mc.detect_order = s.detect_order;
    let sys = MubSystem::new(grid, mc).map_err(runtime)?;
    let codec = TcmCodec::default();
    let channels: Vec<Option<EffectiveChannel>> = (0..cfg.trials as u64)
        .map(|t| -> Result<_, CliError> {
            Ok(match s.channel {
                MubChannel::Awgn => None,
                MubChannel::Dd => Some(EffectiveChannel::from_on_grid(grid, &cfg.channel.instance(cfg.seed, t)?)),
            })
        })
        .collect::<Result<_, _>>()?;
    let cols = [
        "snr_db", "trials", "bits1", "errors1", "ber1", "bits2", "errors2", "ber2", "sinr1", "sinr2", "r1", "r2", "r_eff",
    ];
    let mut t = Table::new("mub", &cols);
    for (si, &snr) in cfg.snr_db.iter().enumerate() {
        let trials: Vec<MubTrial> = (0..cfg.trials)
            .into_par_iter()
            .map(|i| {
                let seed = derive_seed(cfg.seed, (si * cfg.trials + i) as u64);
                mub_trial(&sys, &codec, channels[i].as_ref(), snr, seed)
            })
            .collect::<Result<_, _>>()
            .map_err(runtime)?;
        let tot = trials.iter().fold(MubTrial::default(), |a, b| MubTrial {
            bits1: a.bits1 + b.bits1,
            errors1: a.errors1 + b.errors1,
            bits2: a.bits2 + b.bits2,
            errors2: a.errors2 + b.errors2,
        });
        let ratio = |e: u64, b: u64| if b == 0 { f64::NAN } else { e as f64 / b as f64 };
        let rate = effective_rate(s.alpha, s.delta, 10f64.powf(snr / 10.0), TCM_D2_FREE.sqrt(), grid.m(), grid.n())
            .map_err(runtime)?;
        t.push(vec![
            num(snr),
            cfg.trials.to_string(),
            tot.bits1.to_string(),
            tot.errors1.to_string(),
            num(ratio(tot.errors1, tot.bits1)),
            tot.bits2.to_string(),
            tot.errors2.to_string(),
            num(ratio(tot.errors2, tot.bits2)),
            num(rate.sinr1),
            num(rate.sinr2),
            num(rate.r1),
            num(rate.r2),
            num(rate.r_eff),
        ]);
    }
    Ok(Report {
        tables: vec![t],
        summary: json!({
            "unbiasedness_deviation": sys.unbiasedness_deviation(),
            "second_frame_len": sys.second_frame_len(),
            "tx_scale": sys.tx_scale(),
        }),
    })
}

fn first_snr(cfg: &ExperimentConfig) -> f64 {
    cfg.snr_db.first().copied().unwrap_or(f64::INFINITY)
}

fn radar(cfg: &ExperimentConfig, grid: GridParams) -> Result<Report, CliError> {
    let r = &cfg.radar;
    let taps = r.scene.taps(&grid, derive_seed(cfg.seed, 0)).map_err(runtime)?;
    let support = points_box(taps.iter().map(|&(kl, _)| kl));
    let tx = build_waveform(&r.waveform, grid, &support)?;
    let rx = simulate_echo(&tx, &taps, r.action, first_snr(cfg), derive_seed(cfg.seed, 1));
    let region = match &r.image {
        Some(b) => b.points(),
        None => core_region(&grid),
    };
    let (surf, path) = radar_image_with_path(&tx, &rx, &region).map_err(runtime)?;
    let mut t = Table::new("radar", &["k", "l", "magnitude", "magnitude_db"]);
    for (&(k, l), v) in surf.iter() {
        t.push(vec![k.to_string(), l.to_string(), num(v.norm()), num(db20(v.norm()))]);
    }
    let targets: Vec<_> = r
        .scene
        .targets
        .iter()
        .map(|p| {
            let k = (p.delay * grid.bandwidth()).round() as i64;
            let l = (p.doppler * grid.duration()).round() as i64;
            json!({ "k": k, "l": l, "gain_abs": p.gain.norm(), "image_abs": surf.get(k, l).map(|v| v.norm()) })
        })
        .collect();
    let mut tables = vec![t];
    if let Some(roc) = &r.roc {
        let rc = RocConfig {
            target: (roc.target_k, roc.target_l),
            gain: roc.gain,
            clutter: Some(r.scene.clutter.clone().unwrap_or_else(roc_clutter)),
            snr_db: first_snr(cfg),
            n_trials: cfg.trials,
            seed: cfg.seed,
            action: r.action,
        };
        let baseline = phase_coded_baseline(1, &grid)?;
        let zak = detection_roc(&rc, &tx, &roc.thresholds).map_err(runtime)?;
        let pc = detection_roc(&rc, &baseline, &roc.thresholds).map_err(runtime)?;
        let mut rt = Table::new("radar_roc", &["threshold", "pfa_zak", "pd_zak", "pfa_phase_coded", "pd_phase_coded"]);
        for (a, b) in zak.iter().zip(&pc) {
            rt.push(vec![num(a.threshold), num(a.pfa), num(a.pd), num(b.pfa), num(b.pd)]);
        }
        tables.push(rt);
    }
    Ok(Report {
        tables,
        summary: json!({ "imaging_path": format!("{path:?}"), "peak": surf.max_abs(), "targets": targets }),
    })
}

fn polarimetry(cfg: &ExperimentConfig, grid: GridParams) -> Result<Report, CliError> {
    let p = &cfg.polarimetry;
    let targets: Vec<PolTarget> = p
        .targets
        .iter()
        .map(|t| PolTarget { delay_bin: t.k, doppler_bin: t.l, scattering: t.scattering() })
        .collect();
    let c = C64::new(p.coupling, 0.0);
    let one = C64::new(1.0, 0.0);
    let coupling = Matrix2::new(one, c, c, one);
    let pol = PolChannel::new(grid, &targets, coupling, coupling);
    let (xh, xv) = polarimetry_waveforms(&grid).map_err(runtime)?;
    let (yh, yv) = dual_pol_simulate(&xh, &xv, &pol, first_snr(cfg), derive_seed(cfg.seed, 0), p.action).map_err(runtime)?;
    let est = instant_polarimetry(&yh, &yv, &xh, &xv, &p.window).map_err(runtime)?;
    let cols = ["rx", "tx", "k", "l", "estimate_re", "estimate_im", "truth_re", "truth_im", "error_abs"];
    let mut t = Table::new("polarimetry", &cols);
    let names = ["h", "v"];
    let mut max_err = serde_json::Map::new();
    for (j, rx) in names.iter().enumerate() {
        for (i, tx) in names.iter().enumerate() {
            let mut worst = 0.0f64;
            for (k, l) in p.window.points() {
                let e = est[j][i].tap(k, l);
                let h = pol.h[j][i].tap(k, l);
                worst = worst.max((e - h).norm());
                t.push(vec![
                    rx.to_string(),
                    tx.to_string(),
                    k.to_string(),
                    l.to_string(),
                    num(e.re),
                    num(e.im),
                    num(h.re),
                    num(h.im),
                    num((e - h).norm()),
                ]);
            }
            max_err.insert(format!("{rx}{tx}"), worst.into());
        }
    }
    Ok(Report { tables: vec![t], summary: json!({ "max_abs_error": max_err }) })
}

fn papr_draw(family: PaprFamily, grid: GridParams, seed: u64) -> zakdd::Result<Vec<C64>> {
    let mut r = rng(seed);
    let point = |r: &mut dyn rand::RngCore| (r.random_range(0..grid.m()), r.random_range(0..grid.n()));
    Ok(match family {
        PaprFamily::Pulsone => {
            let (k0, l0) = point(&mut r);
            pulsone(grid, k0, l0).into_vec()
        }
        PaprFamily::Cazac => {
            let (k0, l0) = point(&mut r);
            gdaft(&pulsone(grid, k0, l0), &SymplecticParams::cazac_default(&grid)?)?.into_vec()
        }
        PaprFamily::ZakOtfsQam => {
            let bits = random_bits(&mut r, 2 * grid.mn());
            idzt(&vector_to_dd(&qam_map(&bits)?, grid)?).into_vec()
        }
        PaprFamily::ZadoffChu => phase_coded_baseline(1, &grid)?.into_vec(),
    })
}

fn papr_family_name(f: PaprFamily) -> &'static str {
    match f {
        PaprFamily::Pulsone => "pulsone",
        PaprFamily::Cazac => "cazac",
        PaprFamily::ZakOtfsQam => "zak_otfs_qam",
        PaprFamily::ZadoffChu => "zadoff_chu",
    }
}

fn papr(cfg: &ExperimentConfig, grid: GridParams) -> Result<Report, CliError> {
    let fams = &cfg.papr.families;
    let mut cols = vec!["threshold_db".to_string()];
    cols.extend(fams.iter().map(|f| format!("ccdf_{}", papr_family_name(*f))));
    let mut t = Table::with_columns("papr", cols);
    let mut curves = vec![];
    let mut summary = serde_json::Map::new();
    for (fi, &f) in fams.iter().enumerate() {
        let seed = derive_seed(cfg.seed, fi as u64);
        curves.push(papr_ccdf(|s| papr_draw(f, grid, s), cfg.trials, seed, &cfg.papr.thresholds_db).map_err(runtime)?);
        let values = (0..cfg.trials as u64)
            .map(|i| papr_samples(&papr_draw(f, grid, derive_seed(seed, i))?))
            .collect::<zakdd::Result<Vec<f64>>>()
            .map_err(runtime)?;
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        summary.insert(papr_family_name(f).into(), json!({ "mean_papr_db": mean, "max_papr_db": max }));
    }
    for (ti, &th) in cfg.papr.thresholds_db.iter().enumerate() {
        let mut row = vec![num(th)];
        row.extend(curves.iter().map(|c| num(c[ti].1)));
        t.push(row);
    }
    Ok(Report { tables: vec![t], summary: summary.into() })
}
