use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use collest::harness::{
    self, default_arena_points, default_delta_prec_grid, default_switch_grid, ExperimentSpec,
    Sweep, SweepSummary,
};
use collest::{Result, SwitchMode};

#[derive(Parser)]
#[command(name = "collest", version = harness::BUILD_DESCRIPTION, about = "Collective estimation swarm experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Repetition-averaged error time series under the configured switch mode.
    Run(Common),
    /// Final errors against a globally fixed switching time.
    SweepSwitch {
        #[command(flatten)]
        common: Common,
        /// Switching times; defaults to 21 points spanning [0, t_f].
        #[arg(long, value_delimiter = ',')]
        t_sw: Vec<u64>,
    },
    /// Adaptive switching across precision thresholds and horizons.
    SweepAdaptive {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        delta_prec: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        horizons: Vec<u64>,
    },
    /// Adaptive switching across square arena sizes.
    SweepArena {
        #[command(flatten)]
        common: Common,
    },
    /// A single run's initial and final positions.
    Snapshot(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment file; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for CSV files and the manifest.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    t_f: Option<u64>,
    #[arg(long)]
    n_agents: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    stride: Option<u64>,
    /// Also emit square roots of the error columns.
    #[arg(long)]
    sqrt_errors: bool,
}

impl Common {
    fn load(&self) -> Result<ExperimentSpec> {
        let mut spec = match &self.config {
            Some(path) => ExperimentSpec::from_json_file(path)?,
            None => ExperimentSpec::default(),
        };
        if let Some(v) = self.seed {
            spec.base.seed = v;
        }
        if let Some(v) = &self.out {
            spec.out_dir = Some(v.clone());
        }
        if let Some(v) = self.reps {
            spec.repetitions = v;
        }
        if let Some(v) = self.t_f {
            spec.base.t_f = v;
        }
        if let Some(v) = self.n_agents {
            spec.base.n_agents = v;
        }
        if let Some(v) = self.sigma {
            spec.base.sigma = v;
        }
        if let Some(v) = self.stride {
            spec.record_stride = v;
        }
        spec.sqrt_errors |= self.sqrt_errors;
        Ok(spec)
    }
}

fn print_summary(summary: &SweepSummary) {
    println!("point\tt_sw\tdelta_prec\tt_f\tarena\tE_T\tE_P\tE_A\tdecision_time\tnever_switched");
    for (k, p) in summary.points.iter().enumerate() {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
        println!(
            "{k}\t{}\t{}\t{}\t{}x{}\t{:.4e}\t{:.4e}\t{:.4e}\t{}\t{}",
            opt(p.t_sw.map(|v| v.to_string())),
            opt(p.delta_prec.map(|v| format!("{v:e}"))),
            p.t_f,
            p.arena_width,
            p.arena_height,
            p.final_e_t.mean,
            p.final_e_p.mean,
            p.final_e_a.mean,
            opt(p.decision_time.map(|d| format!("{:.1}", d.mean))),
            p.never_switched,
        );
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(common) => {
            let spec = common.load()?;
            let series = harness::run_timeseries(&spec)?;
            println!("t\tE_T\tE_P\tE_A\tswitched");
            for r in &series.rows {
                println!(
                    "{}\t{:.4e}\t{:.4e}\t{:.4e}\t{:.3}",
                    r.t, r.e_t, r.e_p, r.e_a, r.frac_switched
                );
            }
        }
        Command::SweepSwitch { common, t_sw } => {
            let mut spec = common.load()?;
            if !t_sw.is_empty() {
                spec.sweep = Sweep::SwitchTime { values: t_sw };
            } else if !matches!(spec.sweep, Sweep::SwitchTime { .. }) {
                spec.sweep = Sweep::SwitchTime {
                    values: default_switch_grid(spec.base.t_f, 21),
                };
            }
            print_summary(&harness::sweep_switch_time(&spec)?);
        }
        Command::SweepAdaptive {
            common,
            delta_prec,
            horizons,
        } => {
            let mut spec = common.load()?;
            spec.base.switch_mode = SwitchMode::Adaptive;
            let (mut values, mut hs) = match spec.sweep {
                Sweep::DeltaPrec { values, horizons } => (values, horizons),
                _ => (default_delta_prec_grid(), vec![5000, 50000]),
            };
            if !delta_prec.is_empty() {
                values = delta_prec;
            }
            if !horizons.is_empty() {
                hs = horizons;
            }
            spec.sweep = Sweep::DeltaPrec {
                values,
                horizons: hs,
            };
            print_summary(&harness::sweep_adaptive(&spec)?);
        }
        Command::SweepArena { common } => {
            let mut spec = common.load()?;
            spec.base.switch_mode = SwitchMode::Adaptive;
            if !matches!(spec.sweep, Sweep::ArenaSize { .. }) {
                spec.sweep = Sweep::ArenaSize {
                    arenas: default_arena_points(),
                };
            }
            print_summary(&harness::sweep_arena(&spec)?.summary);
        }
        Command::Snapshot(common) => {
            let spec = common.load()?;
            let record = harness::run_snapshot(&spec)?;
            let last = record.final_sample();
            println!(
                "z_gt {:.6} collective mean {:.6} E_A {:.4e}",
                record.z_gt, last.collective_mean, last.e_a
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("collest: {e}");
            ExitCode::FAILURE
        }
    }
}
