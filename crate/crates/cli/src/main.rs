mod config;
mod report;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cdp_core::audit::run_audit;
use cdp_core::{grid_search_cdp, grid_search_scdp, probe_scdp_convexity, sweep_surface, KernelGrid, Tradeoff};
use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::{check_step, Mode, RunConfig};
use report::{KernelDump, KernelEntry, Num};

const DEFAULT_ORACLE_STEP: f64 = 0.05;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("size error: {0}")]
    Size(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Size(_) => 4,
        }
    }
}

#[derive(Parser)]
#[command(name = "cdp", version, about = "Classification-distortion-perception tradeoff surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output file; overrides `output_path`, stdout when neither is set.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve every grid cell and write CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Cross-check Optimal cells against the lattice oracle at this step.
        #[arg(long)]
        oracle_step: Option<f64>,
        /// Also write the optimal kernels to `<out>.kernels.json`.
        #[arg(long)]
        dump_kernels: bool,
    },
    /// Run the randomized property suites and write a JSON report.
    Audit {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
    },
    /// Look for midpoint-convexity violations of the strong tradeoff with the
    /// lattice oracle.
    ProbeScdpConvexity {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        oracle_step: Option<f64>,
    },
}

struct Loaded {
    cfg: RunConfig,
    out: Option<PathBuf>,
}

fn load(common: &Common) -> Result<Loaded, CliError> {
    let mut cfg = config::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let out = common.out.clone().or_else(|| cfg.output_path.clone());
    Ok(Loaded { cfg, out })
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

fn oracle_step(flag: Option<f64>, cfg: &RunConfig) -> Result<Option<f64>, CliError> {
    match flag {
        Some(step) => check_step("--oracle-step", step).map(|_| Some(step)),
        None => Ok(cfg.oracle_check),
    }
}

fn sweep(common: Common, step: Option<f64>, dump: bool) -> Result<(), CliError> {
    let Loaded { cfg, out } = load(&common)?;
    let step = oracle_step(step, &cfg)?;
    let prob = &cfg.instance;
    let modes: &[Tradeoff] = match cfg.mode {
        Mode::Cdp => &[Tradeoff::Cdp],
        Mode::Scdp => &[Tradeoff::Scdp],
        Mode::Both => &[Tradeoff::Cdp, Tradeoff::Scdp],
    };
    let kernel_path = if dump {
        let base = out
            .as_ref()
            .ok_or_else(|| CliError::Config("--dump-kernels needs --out or output_path".into()))?;
        Some(PathBuf::from(format!("{}.kernels.json", base.display())))
    } else {
        None
    };
    let grid = step
        .map(|s| KernelGrid::new(prob.observed_alphabet(), prob.restore_alphabet(), s))
        .transpose()?;

    let mut csv = String::from(report::CSV_HEADER);
    csv.push('\n');
    let mut kernels = Vec::new();
    let mut disagreements = Vec::new();
    for &which in modes {
        let table = sweep_surface(prob, &cfg.d_grid, &cfg.p_grid, which)?;
        for (i, j, r) in table.iter() {
            let (d, p) = (cfg.d_grid[i], cfg.p_grid[j]);
            csv.push_str(&report::csv_row(which.name(), d, p, r));
            csv.push('\n');
            let (Some(value), Some(kernel)) = (r.value, r.kernel.as_ref()) else { continue };
            if !r.status.is_optimal() {
                continue;
            }
            if kernel_path.is_some() {
                kernels.push(KernelEntry {
                    mode: which.name(),
                    d_index: i,
                    p_index: j,
                    d: Num(d),
                    p: Num(p),
                    value: Num(value),
                    kernel: kernel.rows().iter().map(|row| row.mass().to_vec()).collect(),
                });
            }
            if let Some(grid) = &grid {
                let o = match which {
                    Tradeoff::Cdp => grid_search_cdp(prob, d, p, grid)?,
                    Tradeoff::Scdp => grid_search_scdp(prob, d, p, grid)?,
                };
                let above = o.value.is_some_and(|ov| value > ov + 1e-9);
                let below = o.lower_bound.is_some_and(|lb| value < lb - 1e-9);
                if above || below || o.lower_bound.is_none() {
                    disagreements.push(format!(
                        "{} D={} P={}: solver {value}, lattice {:?}, lower bound {:?}",
                        which.name(),
                        report::fmt_num(d),
                        report::fmt_num(p),
                        o.value,
                        o.lower_bound
                    ));
                }
            }
        }
    }
    write_output(out.as_deref(), &csv)?;
    if let Some(path) = kernel_path {
        let text = serde_json::to_string_pretty(&KernelDump { kernels }).expect("serializable") + "\n";
        write_output(Some(&path), &text)?;
    }
    if !disagreements.is_empty() {
        return Err(CliError::Failed(format!("oracle check failed:\n{}", disagreements.join("\n"))));
    }
    Ok(())
}

fn audit(common: Common, trials: u64) -> Result<(), CliError> {
    let Loaded { cfg, out } = load(&common)?;
    let report = run_audit(&cfg.instance, trials as usize, cfg.seed)?;
    write_output(out.as_deref(), &report::audit_json(&report))?;
    if report.pass() {
        Ok(())
    } else {
        Err(CliError::Failed("audit failed".into()))
    }
}

fn probe(common: Common, step: Option<f64>) -> Result<(), CliError> {
    let Loaded { cfg, out } = load(&common)?;
    let step = oracle_step(step, &cfg)?.unwrap_or(DEFAULT_ORACLE_STEP);
    let prob = &cfg.instance;
    let grid = KernelGrid::new(prob.observed_alphabet(), prob.restore_alphabet(), step)?;
    let result = probe_scdp_convexity(prob, &cfg.d_grid, &cfg.p_grid, &grid)?;
    write_output(out.as_deref(), &report::probe_json(&result, step))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep {
            common,
            oracle_step,
            dump_kernels,
        } => sweep(common, oracle_step, dump_kernels),
        Command::Audit { common, trials } => audit(common, trials),
        Command::ProbeScdpConvexity { common, oracle_step } => probe(common, oracle_step),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cdp: {e}");
            ExitCode::from(e.code())
        }
    }
}
