//! The `basisrisk` command line: reproducible runs that write tidy CSV tables
//! and a JSON manifest per invocation.
//!
//! Exit codes are a stable contract: 0 success, 1 validation error, 2 numerical
//! failure (including a failed `gaussian-check`), 3 I/O error.

pub mod commands;
pub mod output;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

pub const OUT_DIR_ENV: &str = "BASISRISK_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Numerical,
    Io,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Validation => 1,
            ErrorKind::Numerical => 2,
            ErrorKind::Io => 3,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Validation,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Numerical,
            message: message.into(),
        }
    }

    pub fn io(context: impl Into<String>, err: std::io::Error) -> Self {
        Self {
            kind: ErrorKind::Io,
            message: format!("{}: {err}", context.into()),
        }
    }

    /// Serialization of our own types failed; reported as an output error.
    pub fn internal(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Io,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<basisrisk::Error> for CliError {
    fn from(err: basisrisk::Error) -> Self {
        use basisrisk::Error as E;
        let kind = match &err {
            E::Numerical(_) => ErrorKind::Numerical,
            E::Io(_) => ErrorKind::Io,
            E::Csv(e) if e.is_io_error() => ErrorKind::Io,
            _ => ErrorKind::Validation,
        };
        Self {
            kind,
            message: err.to_string(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "basisrisk", version, about = "Basis risk experiments for parametric insurance")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a loss/payout sample from the copula model and write it as CSV.
    Simulate(commands::SimulateArgs),
    /// Compute the gap curves behind one figure (fig1..fig4).
    Figures(commands::FiguresArgs),
    /// Peaks-over-threshold GPD fit of one CSV column, with a QQ table.
    FitGpd(commands::FitGpdArgs),
    /// Flood pipeline: load, deflate, cross-validate a regression tree, RMSE by decile.
    Floods(commands::FloodsArgs),
    /// Compare Monte Carlo gap estimates with the bivariate Gaussian closed forms.
    GaussianCheck(commands::GaussianCheckArgs),
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML config file, or a manifest JSON from an earlier run to replay it.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Directory for output tables and the manifest.
    #[arg(long, value_name = "DIR", env = OUT_DIR_ENV, default_value = "out")]
    pub out_dir: PathBuf,
}

/// Load a command's settings: built-in defaults, overlaid by the config file.
/// A `.json` file is read as a run manifest and its `config` field is used.
pub fn load_settings<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("cannot read {}", path.display()), e))?;
    let bad = |e: &dyn fmt::Display| CliError::validation(format!("invalid config {}: {e}", path.display()));
    let is_json = path.extension().is_some_and(|ext| ext.eq_ignore_ascii_case("json"));
    if is_json {
        let mut value: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(&e))?;
        if let Some(config) = value.get_mut("config") {
            value = config.take();
        }
        serde_json::from_value(value).map_err(|e| bad(&e))
    } else {
        toml::from_str(&text).map_err(|e| bad(&e))
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(args) => commands::simulate(args),
        Command::Figures(args) => commands::figures(args),
        Command::FitGpd(args) => commands::fit_gpd(args),
        Command::Floods(args) => commands::floods(args),
        Command::GaussianCheck(args) => commands::gaussian_check(args),
    }
}

/// Parse `args`, run, report errors on stderr and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            // --help and --version land here too.
            return if err.use_stderr() { ErrorKind::Validation.exit_code() } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn core_errors_map_to_exit_codes() {
        let code = |e: basisrisk::Error| CliError::from(e).exit_code();
        assert_eq!(code(basisrisk::Error::Numerical("x".into())), 2);
        assert_eq!(code(basisrisk::Error::MissingColumn("year".into())), 1);
        assert_eq!(code(basisrisk::Error::Domain("x".into())), 1);
        assert_eq!(code(basisrisk::Error::Io(std::io::Error::other("x"))), 3);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn settings_come_from_toml_or_manifest() {
        use basisrisk::simlab::MainSettingConfig;
        let dir = tempfile::tempdir().unwrap();
        let toml_path = dir.path().join("c.toml");
        std::fs::write(&toml_path, "tau = 0.5\nfamily = \"gumbel\"\n").unwrap();
        let cfg: MainSettingConfig = load_settings(Some(&toml_path)).unwrap();
        assert_eq!(cfg.tau, 0.5);
        assert_eq!(cfg.shape, MainSettingConfig::default().shape);

        let json_path = dir.path().join("m.json");
        std::fs::write(&json_path, r#"{"command": "simulate", "config": {"n": 5000}}"#).unwrap();
        let cfg: MainSettingConfig = load_settings(Some(&json_path)).unwrap();
        assert_eq!(cfg.n, 5000);

        std::fs::write(&toml_path, "tua = 0.5\n").unwrap();
        let err = load_settings::<MainSettingConfig>(Some(&toml_path)).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.message.contains("tua"));
    }
}
