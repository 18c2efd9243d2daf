mod commands;
mod workspace;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Failure;

/// Transplant features between C codebases.
#[derive(Debug, Parser)]
#[command(name = "transplantc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Create the workspace and an empty platform.
    Init(WorkspaceArgs),
    /// Remove feature code from a host and store it as a product base.
    ReduceHost(ReduceHostArgs),
    /// Slice a feature out of a donor and store the over-organ.
    Extract(ExtractArgs),
    /// Reduce and adapt a stored over-organ to a product base.
    Adapt(AdaptArgs),
    /// Implant an adapted organ into the postoperative project.
    Implant(ImplantArgs),
    /// Run regression, regression++ and acceptance suites.
    Validate(ValidateArgs),
    /// Extract, adapt, implant and validate in one run.
    Transplant(TransplantArgs),
    /// Inspect the platform.
    Platform {
        #[command(subcommand)]
        command: PlatformCommand,
    },
}

#[derive(Debug, Subcommand)]
enum PlatformCommand {
    /// List stored artifacts.
    Ls(WorkspaceArgs),
}

#[derive(Debug, Clone, Args)]
pub struct WorkspaceArgs {
    /// Working directory for the platform and all outputs.
    #[arg(long = "workspace")]
    pub workspace: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct HostArgs {
    /// Host program directory.
    #[arg(long = "host_project")]
    pub host_project: PathBuf,
    /// Features to remove from the host, one per line.
    #[arg(long = "features_file")]
    pub features_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DonorArgs {
    /// Donor program directory.
    #[arg(long = "donor_folder")]
    pub donor_folder: PathBuf,
    /// Function implementing the feature.
    #[arg(long = "core_function_target")]
    pub core_function_target: String,
    /// Donor file defining the core function, when the name is ambiguous.
    #[arg(long = "donor_target")]
    pub donor_target: Option<PathBuf>,
    /// Write the donor's dependency graph as DOT.
    #[arg(long = "emit-sdg")]
    pub emit_sdg: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GpArgs {
    /// Seeds for the genetic search, one integer per line.
    #[arg(long = "seeds_file")]
    pub seeds_file: PathBuf,
    /// Population size.
    #[arg(long = "gp-pop", default_value_t = 40)]
    pub gp_pop: usize,
    /// Generation budget per seed.
    #[arg(long = "gp-gens", default_value_t = 100)]
    pub gp_gens: usize,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Upper bound on parallel builds and test runs.
    #[arg(long = "jobs", default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub jobs: u32,
    /// Per-test timeout.
    #[arg(long = "test-timeout-secs", default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    pub test_timeout_secs: u64,
    /// Build command template with {out} and {sources}.
    #[arg(long = "build-command", default_value = transplant_core::sandbox::DEFAULT_BUILD)]
    pub build_command: String,
}

#[derive(Debug, Clone, Args)]
pub struct ReduceHostArgs {
    #[command(flatten)]
    pub ws: WorkspaceArgs,
    #[command(flatten)]
    pub host: HostArgs,
    /// Product base id; defaults to the host directory name.
    #[arg(long = "product-base")]
    pub product_base: Option<String>,
    /// Replace an existing product base.
    #[arg(long = "force")]
    pub force: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub ws: WorkspaceArgs,
    #[command(flatten)]
    pub donor: DonorArgs,
    /// Feature id; defaults to the core function name.
    #[arg(long = "feature")]
    pub feature: Option<String>,
    /// Ice-box suite directory to store with the over-organ.
    #[arg(long = "icebox")]
    pub icebox: Option<PathBuf>,
    #[arg(long = "force")]
    pub force: bool,
}

#[derive(Debug, Clone, Args)]
pub struct AdaptArgs {
    #[command(flatten)]
    pub ws: WorkspaceArgs,
    /// Feature id of the stored organ.
    #[arg(long = "feature")]
    pub feature: String,
    /// Product base id.
    #[arg(long = "product-base")]
    pub product_base: String,
    /// Host file holding the insertion marker.
    #[arg(long = "host_target")]
    pub host_target: Option<PathBuf>,
    #[command(flatten)]
    pub gp: GpArgs,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ImplantArgs {
    #[command(flatten)]
    pub ws: WorkspaceArgs,
    /// Feature id of the stored organ.
    #[arg(long = "feature")]
    pub feature: String,
    /// Product base id.
    #[arg(long = "product-base")]
    pub product_base: String,
    /// Guard the organ with #ifdef FEATURE_<flag>.
    #[arg(long = "flag")]
    pub flag: Option<String>,
    /// Write the clone report into the workspace.
    #[arg(long = "emit-report")]
    pub emit_report: bool,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub ws: WorkspaceArgs,
    /// Product base id.
    #[arg(long = "product-base")]
    pub product_base: String,
    /// Directory holding regression/, regression++/ and acceptance/.
    #[arg(long = "suites")]
    pub suites: PathBuf,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TransplantArgs {
    #[command(flatten)]
    pub ws: WorkspaceArgs,
    #[command(flatten)]
    pub host: HostArgs,
    #[command(flatten)]
    pub donor: DonorArgs,
    /// Host file holding the insertion marker.
    #[arg(long = "host_target")]
    pub host_target: PathBuf,
    /// Feature id; defaults to the core function name.
    #[arg(long = "feature")]
    pub feature: Option<String>,
    /// Directory holding icebox/, regression/, regression++/ and
    /// acceptance/; defaults to `tests` beside the host directory.
    #[arg(long = "suites")]
    pub suites: Option<PathBuf>,
    /// Guard the organ with #ifdef FEATURE_<flag>.
    #[arg(long = "flag")]
    pub flag: Option<String>,
    /// Write the clone report into the workspace.
    #[arg(long = "emit-report")]
    pub emit_report: bool,
    /// Replace artifacts left by an earlier run in the workspace.
    #[arg(long = "force")]
    pub force: bool,
    #[command(flatten)]
    pub gp: GpArgs,
    #[command(flatten)]
    pub run: RunArgs,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Init(a) => commands::init(&a),
        Command::ReduceHost(a) => commands::reduce_host(&a),
        Command::Extract(a) => commands::extract(&a),
        Command::Adapt(a) => commands::adapt(&a),
        Command::Implant(a) => commands::implant(&a),
        Command::Validate(a) => commands::validate(&a),
        Command::Transplant(a) => commands::transplant(&a),
        Command::Platform { command: PlatformCommand::Ls(a) } => commands::platform_ls(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Broken(msg)) => {
            eprintln!("transplantc: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("transplantc: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("transplantc: {e:#}");
            ExitCode::from(3)
        }
    }
}
