use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mrlocal::{MrError, MrLocalConfig, Tau0Mode};

mod commands;

#[derive(Parser)]
#[command(name = "mrlocal", version, about = "Mendelian randomization with locally valid instruments")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the causal effect from a summary-statistics TSV
    Analyze {
        #[arg(long)]
        input: PathBuf,
        /// Result file; the grid profile goes next to it as <stem>.profile.tsv
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        mr: MrArgs,
    },
    /// Simulate a dataset and its truth sidecar
    Simulate {
        #[command(flatten)]
        setting: SettingArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Dataset TSV; the truth goes to <stem>.truth.tsv and the setting to <stem>.setting.txt
        #[arg(long)]
        output: PathBuf,
    },
    /// Monte Carlo benchmark of several methods on one setting
    Benchmark {
        #[command(flatten)]
        setting: SettingArgs,
        #[arg(long, default_value_t = 200)]
        reps: usize,
        /// Comma-separated: MRLocal, MRLocalPlus, dIVW_all, IVW_all, cluster_median
        #[arg(long, default_value = "MRLocal,dIVW_all,IVW_all")]
        methods: String,
        /// Report TSV; per-replicate rows go to <stem>.per_rep.tsv and the
        /// configuration to <stem>.config.txt
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        mr: MrArgs,
    },
    /// Ratio estimates and the grid profile, ready for plotting
    Density {
        #[arg(long)]
        input: PathBuf,
        /// Ratio TSV; the grid profile goes to <stem>.profile.tsv
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        mr: MrArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Tau0ModeArg {
    Fixed,
    Theory,
}

#[derive(Args, Clone)]
struct MrArgs {
    /// Half-range of the candidate grid
    #[arg(long, default_value_t = 1.0)]
    c_beta: f64,
    #[arg(long, default_value_t = 1.6)]
    tau0: f64,
    #[arg(long, value_enum, default_value_t = Tau0ModeArg::Fixed)]
    tau0_mode: Tau0ModeArg,
    /// Grid size (default: max(p, 2000))
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Add the skewness gate (MR-Local+)
    #[arg(long)]
    plus: bool,
    /// Keep weak instruments
    #[arg(long)]
    no_screen: bool,
    /// Bootstrap replicates for the plurality-path SE (0 disables)
    #[arg(long, default_value_t = 200)]
    bootstrap: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Slack in the Q test (default: 1/log p)
    #[arg(long)]
    slack: Option<f64>,
}

impl MrArgs {
    fn config(&self) -> MrLocalConfig {
        MrLocalConfig {
            c_beta: self.c_beta,
            tau0: self.tau0,
            tau0_mode: match self.tau0_mode {
                Tau0ModeArg::Fixed => Tau0Mode::Fixed,
                Tau0ModeArg::Theory => Tau0Mode::Theory,
            },
            grid_size: self.grid,
            alpha: self.alpha,
            use_plus: self.plus,
            screen: !self.no_screen,
            bootstrap_reps: self.bootstrap,
            seed: self.seed,
            slack: self.slack,
            with_ks: false,
        }
    }
}

#[derive(Args, Clone)]
struct SettingArgs {
    /// a-e, or `file` to read a key = value setting from --input
    #[arg(long)]
    setting: String,
    /// Setting file when --setting file
    #[arg(long)]
    input: Option<PathBuf>,
    /// True causal effect (default 0 for named settings, the file's value otherwise)
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    nd: Option<u64>,
    #[arg(long)]
    ny: Option<u64>,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<MrError>() {
        Some(e) if e.is_degeneracy() => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot set up {n} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Analyze { input, output, mr } => commands::analyze(input, output, &mr.config()),
        Command::Simulate { setting, seed, output } => commands::simulate(setting, *seed, output),
        Command::Benchmark {
            setting,
            reps,
            methods,
            output,
            mr,
        } => commands::benchmark(setting, *reps, methods, output, &mr.config()),
        Command::Density { input, output, mr } => commands::density(input, output, &mr.config()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
