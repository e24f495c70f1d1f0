use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use zakdd_cli::{demo, load_config, run_config, CliError, Experiment};

const OUTPUT_HELP: &str = "\
OUTPUT
  `run` writes <output>/<table>.csv for every table and <output>/<experiment>.json with
  the resolved configuration and a summary. Each CSV starts with '#' lines holding the tool
  version, experiment, seed and the full configuration as TOML. Reruns with the same
  configuration produce byte-identical files.

CSV COLUMNS
  ambiguity        k, l, magnitude, magnitude_db (full MN x MN self-ambiguity)
  filters          family, orthogonality_residual, max_sidelobe_db, band_energy_fraction,
                   time_energy_fraction
  filters_cross_section
                   family, tau_bins, magnitude_db
  ber              snr_db, frames, bits, then errors_<eq>, ber_<eq>, se_<eq> per equalizer
  fde              trial, snr_db, half_bandwidth, band_energy_fraction, cgm_iterations,
                   cgm_converged, cgm_final_residual, relative_difference, ber_dd_mmse,
                   ber_fd_cgm
  diffcomm         snr_db, frame, kind, estimate_source, ber, perfect_csi_ber, tap_nmse
  mub              snr_db, trials, bits1, errors1, ber1, bits2, errors2, ber2, sinr1, sinr2,
                   r1, r2, r_eff
  radar            k, l, magnitude, magnitude_db
  radar_roc        threshold, pfa_zak, pd_zak, pfa_phase_coded, pd_phase_coded
  polarimetry      rx, tx, k, l, estimate_re, estimate_im, truth_re, truth_im, error_abs
  papr             threshold_db, ccdf_<family> per family

ERRORS
  Failures print one JSON line on stderr: {\"error\": kind, \"message\": ...}.
  Exit codes: 2 invalid or unparsable configuration, 3 I/O failure, 1 runtime failure.";

#[derive(Parser)]
#[command(name = "zakdd", version, about = "Delay-Doppler waveform, equalizer and radar experiments", after_long_help = OUTPUT_HELP)]
struct Cli {
    /// Worker threads for trial-parallel experiments (default: all cores).
    #[arg(long, global = true, env = "ZAKDD_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML configuration.
    Run {
        config: PathBuf,
        /// Override the output directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check a configuration and print crystallization warnings.
    Validate { config: PathBuf },
    /// Print a ready-to-run configuration for an experiment.
    Demo {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(Experiment::ALL.map(|e| e.name())))]
        experiment: String,
    },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    }
    let mut out = std::io::stdout().lock();
    let io = |e| CliError::io("<stdout>", e);
    match cli.command {
        Command::Run { config, output } => {
            let mut cfg = load_config(&config)?;
            if let Some(o) = output {
                cfg.output = o;
            }
            for w in cfg.warnings() {
                eprintln!("warning: {w}");
            }
            for p in run_config(&cfg)? {
                writeln!(out, "{}", p.display()).map_err(io)?;
            }
        }
        Command::Validate { config } => {
            let cfg = load_config(&config)?;
            cfg.validate()?;
            for w in cfg.warnings() {
                writeln!(out, "warning: {w}").map_err(io)?;
            }
        }
        Command::Demo { experiment } => {
            let e = Experiment::parse(&experiment).expect("restricted by clap");
            write!(out, "{}", demo(e).to_compact_toml()).map_err(io)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
