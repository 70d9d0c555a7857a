use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "kpos", version, about = "k-positivity certification and positive-map generation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Master RNG seed. `workflow` also accepts a map reference here.
    #[arg(long, global = true, default_value = "0")]
    pub seed: String,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Write the report to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Interior-point solver tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Relative decomposability threshold.
    #[arg(long = "eps-d", global = true)]
    pub eps_d: Option<f64>,
    /// Absolute eigenvalue sign threshold.
    #[arg(long = "eps-psd", global = true)]
    pub eps_psd: Option<f64>,
    #[arg(long, global = true)]
    pub restarts: Option<usize>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true)]
    pub grid: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MapArgs {
    /// `seeds:<name>[:param]` or `file:<path>`.
    #[arg(long)]
    pub map: String,
    /// Dimension for parametric catalog maps.
    #[arg(long)]
    pub d: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Ppt2Mode {
    Joint,
    Scan,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify or refute k-positivity.
    Test {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Reference positive map for the sufficient test at k = 1.
        #[arg(long, requires = "inverse")]
        reference: Option<String>,
        /// Inverse of the reference map.
        #[arg(long, requires = "reference")]
        inverse: Option<String>,
    },
    /// Distance from the decomposable cone.
    Decomp {
        #[command(flatten)]
        map: MapArgs,
    },
    /// Conditional complete positivity test.
    Ccp {
        #[command(flatten)]
        map: MapArgs,
    },
    /// Ky Fan k-norm by semidefinite program and by eigenvalues.
    Kyfan {
        /// `file:<path>` holding a PSD matrix as nested `[re, im]` rows.
        #[arg(long, conflicts_with = "map")]
        matrix: Option<String>,
        /// Use the Choi matrix of this map.
        #[arg(long)]
        map: Option<String>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long, default_value_t = 1)]
        k: usize,
    },
    /// One layer of the semigroup generation workflow.
    Workflow {
        /// Seed map; alternatively pass the reference to `--seed`.
        #[arg(long)]
        map: Option<String>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Random generators drawn besides K = 0.
        #[arg(long, default_value_t = 0)]
        nk: usize,
        #[arg(long, default_value_t = 3.0)]
        tmax: f64,
    },
    /// PPT-square tests on the link product with CP and co-CP maps.
    Ppt2 {
        #[arg(long)]
        psi: String,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long, value_enum, default_value_t = Ppt2Mode::Both)]
        mode: Ppt2Mode,
    },
    /// Catalog of seed maps.
    Seeds {
        #[command(subcommand)]
        action: SeedsAction,
    },
    /// Numerical checks of the lambda_prime positivity, CCP and witness arguments.
    VerifyAppendixD {
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
    },
    /// Compare the heuristic k-positivity bounds on one map.
    Bench {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value_t = 1)]
        k: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum SeedsAction {
    List,
    /// Emit a catalog map in the JSON map format.
    Get {
        name: String,
        #[arg(long)]
        param: Option<f64>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Test { .. } => "test",
            Command::Decomp { .. } => "decomp",
            Command::Ccp { .. } => "ccp",
            Command::Kyfan { .. } => "kyfan",
            Command::Workflow { .. } => "workflow",
            Command::Ppt2 { .. } => "ppt2",
            Command::Seeds { .. } => "seeds",
            Command::VerifyAppendixD { .. } => "verify-appendix-d",
            Command::Bench { .. } => "bench",
        }
    }
}
