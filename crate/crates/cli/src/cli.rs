use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::commands::{Command, RunConfig};
use selftest_core::Tolerance;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(
    name = "selftest",
    version,
    about = "Verification commands for bipartite correlation models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
    /// Absolute-plus-relative tolerance for every approximate comparison.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    /// Seed for randomized subroutines.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Assert that the correlation is extreme (recorded, never checked).
    #[arg(long, global = true)]
    pub assert_extremal: bool,
    /// Convex decomposition file used to refute extremality.
    #[arg(long, global = true)]
    pub decomposition: Option<PathBuf>,
    /// Tilt parameter for `tilted-sos`, in [0, 2).
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Check POVM and state well-formedness.
    Validate { model: PathBuf },
    /// Correlation table p(a,b|x,y).
    Correlation { model: PathBuf },
    /// Schmidt decomposition of the state.
    Schmidt { model: PathBuf },
    /// Support projections, support model and both central-support criteria.
    Support { model: PathBuf },
    /// Naimark dilation of every measurement.
    Naimark { model: PathBuf },
    /// Round a binary POVM model to a PVM model.
    RoundBinary { model: PathBuf },
    /// Synchronous-model checks.
    SyncVerify { model: PathBuf },
    /// XOR matrix of a correlation or model file.
    Xor { input: PathBuf },
    /// Even-rank commuting-operator self-test certificate.
    XorCertify { input: PathBuf },
    /// Decide whether two models induce the same state.
    StateEqual { first: PathBuf, second: PathBuf },
    /// Construct a local dilation from SOURCE onto an irreducible TARGET.
    FindDilation { source: PathBuf, target: PathBuf },
    /// Check a dilation witness file.
    VerifyDilation {
        source: PathBuf,
        target: PathBuf,
        witness: PathBuf,
    },
    /// Irreducible decomposition of both local representations.
    Irrep { model: PathBuf },
    /// Restrict to the cyclic subspace of the state.
    Cyclic { model: PathBuf },
    /// Tilted-CHSH SOS identities and residuals; without MODEL the optimizer supplies one.
    TiltedSos { model: Option<PathBuf> },
}

impl Cli {
    pub fn into_config(self) -> Result<(RunConfig, Format), String> {
        let tol = Tolerance::new(self.tol).map_err(|e| format!("--tol: {e}"))?;
        if let Some(a) = self.alpha {
            if !(0.0..2.0).contains(&a) {
                return Err(format!("--alpha: {a} is outside [0, 2)"));
            }
        }
        let command = match self.command {
            CliCommand::Validate { model } => Command::Validate { model },
            CliCommand::Correlation { model } => Command::Correlation { model },
            CliCommand::Schmidt { model } => Command::Schmidt { model },
            CliCommand::Support { model } => Command::Support { model },
            CliCommand::Naimark { model } => Command::Naimark { model },
            CliCommand::RoundBinary { model } => Command::RoundBinary { model },
            CliCommand::SyncVerify { model } => Command::SyncVerify { model },
            CliCommand::Xor { input } => Command::Xor { input },
            CliCommand::XorCertify { input } => Command::XorCertify { input },
            CliCommand::StateEqual { first, second } => Command::StateEqual { first, second },
            CliCommand::FindDilation { source, target } => Command::FindDilation { source, target },
            CliCommand::VerifyDilation {
                source,
                target,
                witness,
            } => Command::VerifyDilation {
                source,
                target,
                witness,
            },
            CliCommand::Irrep { model } => Command::Irrep { model },
            CliCommand::Cyclic { model } => Command::Cyclic { model },
            CliCommand::TiltedSos { model } => Command::TiltedSos { model },
        };
        Ok((
            RunConfig {
                command,
                tol,
                seed: self.seed,
                assert_extremal: self.assert_extremal,
                decomposition: self.decomposition,
                alpha: self.alpha,
            },
            self.format,
        ))
    }
}
