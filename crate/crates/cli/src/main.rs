use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use fbmc_pevd::experiment::{
    bench_csv, bench_design, design_precoders, results_csv, run_with_precoders, summarize_for, sweep, BenchAxis,
    LinkConfig, PrecoderChoice, SweepAxis, TruncationMode,
};
use fbmc_pevd::pevd::Algorithm;
use fbmc_pevd::precoder::{export_precoders, import_precoders, Precoder};

/// PEVD-based precoding experiments for optical FBMC/OQAM links.
#[derive(Parser)]
#[command(name = "fbmc-pevd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design precoders for every subcarrier and export them as text.
    Design {
        #[command(flatten)]
        common: Common,
    },
    /// Run one experiment cell and print a CSV row.
    Run {
        #[command(flatten)]
        common: Common,
        /// Reuse precoders exported by `design` instead of designing anew.
        #[arg(long)]
        precoders: Option<PathBuf>,
    },
    /// Run one cell per value of a swept parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// snr, fiber_length, iterations, delay or subcarriers.
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Time precoder design, proposed against conventional.
    Bench {
        #[command(flatten)]
        common: Common,
        /// subcarriers or iterations.
        #[arg(long)]
        axis: BenchAxis,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    subcarriers: Option<usize>,
    #[arg(long)]
    qam_order: Option<usize>,
    /// SNR in dB; `inf` disables noise.
    #[arg(long)]
    snr_db: Option<f64>,
    #[arg(long)]
    length_km: Option<f64>,
    /// none, proposed or conventional.
    #[arg(long)]
    precoder: Option<PrecoderChoice>,
    #[arg(long)]
    symbols: Option<usize>,
    /// sbr2 or smd.
    #[arg(long)]
    algorithm: Option<Algorithm>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    delay: Option<usize>,
    /// none, mu or adaptive.
    #[arg(long)]
    truncation: Option<TruncationMode>,
}

impl Common {
    fn config(&self) -> Result<LinkConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                LinkConfig::from_toml(&text).with_context(|| format!("in {}", path.display()))?
            }
            None => LinkConfig::default(),
        };
        macro_rules! set {
            ($flag:expr => $field:expr) => {
                if let Some(v) = $flag {
                    $field = v;
                }
            };
        }
        set!(self.seed => cfg.seed);
        set!(self.subcarriers => cfg.subcarriers);
        set!(self.qam_order => cfg.qam_order);
        set!(self.snr_db => cfg.snr_db);
        set!(self.length_km => cfg.fiber.length_km);
        set!(self.precoder => cfg.precoder);
        set!(self.symbols => cfg.symbols_per_run);
        set!(self.algorithm => cfg.pevd.algorithm);
        set!(self.iterations => cfg.pevd.iterations);
        set!(self.delay => cfg.inversion.delay);
        set!(self.truncation => cfg.truncation.mode);
        cfg.validate()?;
        Ok(cfg)
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Design { common } => {
            let cfg = common.config()?;
            let Some(kind) = cfg.precoder.kind() else {
                bail!("precoder = \"none\" has nothing to design");
            };
            let (pre, summary) = design_precoders(&cfg, kind)?;
            let mut text = format!(
                "# {} precoders, {} retained taps, median chi {:.2} dB\n",
                kind,
                summary.retained_taps,
                summary.median_chi_db()
            );
            for line in cfg.to_toml().lines() {
                text.push_str(&format!("# {line}\n"));
            }
            text.push_str(&export_precoders(&pre));
            common.emit(&text)
        }
        Command::Run { common, precoders } => {
            let cfg = common.config()?;
            let design = match (&precoders, cfg.precoder.kind()) {
                (Some(path), _) => {
                    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                    let pre = import_precoders(&text).with_context(|| format!("in {}", path.display()))?;
                    check_imported(&cfg, &pre)?;
                    let summary = summarize_for(&cfg, &pre)?;
                    Some((pre, summary))
                }
                (None, Some(kind)) => Some(design_precoders(&cfg, kind)?),
                (None, None) => None,
            };
            let cell = run_with_precoders(&cfg, 0, design)?;
            common.emit(&results_csv(&cfg, &[], &[cell]))
        }
        Command::Sweep { common, axis, values } => {
            let cfg = common.config()?;
            let cells = sweep(&cfg, axis, &values)?;
            let note = format!("sweep over {axis}");
            common.emit(&results_csv(&cfg, &[note], &cells))
        }
        Command::Bench { common, axis, values } => {
            let cfg = common.config()?;
            let rows = bench_design(&cfg, axis, &values)?;
            common.emit(&bench_csv(&cfg, &rows))
        }
    }
}

fn check_imported(cfg: &LinkConfig, pre: &[Precoder]) -> Result<()> {
    if pre.len() != cfg.subcarriers {
        bail!("precoder file holds {} precoders, config has {} subcarriers", pre.len(), cfg.subcarriers);
    }
    let kind = pre[0].kind;
    if pre.iter().any(|p| p.kind != kind) {
        bail!("precoder file mixes precoder kinds");
    }
    if cfg.precoder.kind().is_some_and(|k| k != kind) {
        bail!("config asks for {} precoders but the file holds {kind} ones", cfg.precoder);
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
