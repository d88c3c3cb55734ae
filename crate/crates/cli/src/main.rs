//! `git-historian` command line.

mod commands;
mod state;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use git_historian::db::BranchFilter;
use git_historian::Error;

/// Exit codes. Every termination path maps to one of these.
pub mod exit {
    pub const OK: u8 = 0;
    pub const FOUND: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const MISSING: u8 = 3;
    pub const STORAGE: u8 = 4;
    pub const REPOSITORY: u8 = 5;
    pub const NETWORK: u8 = 6;
    pub const OTHER: u8 = 7;
}

#[derive(Parser, Debug)]
#[command(name = "git-historian", version, about = "Audit Git repositories for history alterations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GroupBy {
    Branch,
    Category,
    LicenseChange,
}

#[derive(clap::Args, Debug, Clone)]
pub struct CheckArgs {
    /// Origin URL to audit.
    pub url: String,
    /// main, dev or all.
    #[arg(long, default_value = "main", value_parser = parse_branch)]
    pub branch: BranchFilter,
    #[arg(long, short)]
    pub verbose: bool,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

fn parse_branch(text: &str) -> Result<BranchFilter, String> {
    text.parse()
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ingest an alteration dataset (newline-delimited JSON) into the local database.
    Load {
        path: PathBuf,
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
    },
    /// Report known history alterations of a repository.
    Check(CheckArgs),
    /// Like `check`, answering from the result cache when the dataset has not changed.
    CheckCached {
        #[command(flatten)]
        args: CheckArgs,
        /// Hook that triggered the check (post-merge, post-checkout).
        #[arg(long)]
        event: Option<String>,
    },
    /// Install post-merge and post-checkout hooks that run `check-cached`.
    Attach {
        repo: PathBuf,
        #[arg(long, default_value = "main", value_parser = parse_branch)]
        branch: BranchFilter,
        #[arg(long, short)]
        verbose: bool,
    },
    /// Capture a snapshot of a remote into the archive.
    Snapshot {
        url: String,
        #[arg(long)]
        archive_root: Option<PathBuf>,
    },
    /// Detect and categorize alterations across all archived snapshot pairs.
    Detect {
        #[arg(long)]
        archive_root: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Secret and license findings; defaults to `<out>.findings.jsonl`.
        #[arg(long)]
        findings: Option<PathBuf>,
    },
    /// Percentage distribution of a dataset.
    Report {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum)]
        group_by: GroupBy,
        /// Findings file for license-change grouping; defaults to `<dataset>.findings.jsonl`.
        #[arg(long)]
        findings: Option<PathBuf>,
    },
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let Some(err) = err.chain().find_map(|e| e.downcast_ref::<Error>()) else {
        if err.chain().any(|e| e.downcast_ref::<std::io::Error>().is_some()) {
            return exit::STORAGE;
        }
        return exit::OTHER;
    };
    match err {
        Error::MalformedRecord { .. } | Error::MalformedId(_) => exit::USAGE,
        Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => exit::MISSING,
        Error::Io { .. } | Error::StorageFailure(_) => exit::STORAGE,
        Error::NotARepository(_) | Error::NoRemoteConfigured(_) => exit::REPOSITORY,
        Error::NetworkFailure { .. } => exit::NETWORK,
        _ => exit::OTHER,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Load { path, workers } => commands::load(&path, workers),
        Command::Check(args) => commands::check(&args),
        Command::CheckCached { args, event } => commands::check_cached(&args, event.as_deref()),
        Command::Attach { repo, branch, verbose } => commands::attach(&repo, branch, verbose),
        Command::Snapshot { url, archive_root } => commands::snapshot(&url, archive_root),
        Command::Detect {
            archive_root,
            out,
            findings,
        } => commands::detect(archive_root, &out, findings),
        Command::Report {
            dataset,
            group_by,
            findings,
        } => commands::report(&dataset, group_by, findings),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("git-historian: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
