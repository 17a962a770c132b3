//! Command-line flags merged over an optional JSON config file.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mvpoisson_core::pattern::{parse_pattern_list, PatternGraph};
use mvpoisson_core::urn::UrnSpec;
use serde::Deserialize;

use crate::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "mvpoisson",
    version,
    about = "Multivariate Poisson approximation experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Opts,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Automorphisms, density, balance, exponents and overlap statistics.
    PatternInfo,
    /// Exact moments, the moment bound and the explicit bracket per n.
    BoundGraph,
    /// Empirical distance of simulated counts to the product Poisson law.
    Simulate,
    /// Empirical distances and brackets along p = c n^(-1/alpha), with slopes.
    RateSweep,
    /// The hypergeometric bound, with the exact distance when it is feasible.
    BoundUrn,
    /// Exhaustive check of the size-biased identity, optionally with
    /// Monte Carlo coupling terms.
    VerifyCoupling,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::PatternInfo => "pattern-info",
            Command::BoundGraph => "bound-graph",
            Command::Simulate => "simulate",
            Command::RateSweep => "rate-sweep",
            Command::BoundUrn => "bound-urn",
            Command::VerifyCoupling => "verify-coupling",
        }
    }
}

#[derive(ValueEnum, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Default)]
pub struct Opts {
    /// Comma-separated builtins (edge, triangle, path_k, cycle_k, complete_k,
    /// star_k) or one edge list "v=4; edges=1-2,2-3,3-4".
    #[arg(long, global = true)]
    pub patterns: Option<String>,
    #[arg(long, global = true)]
    pub n: Option<u64>,
    /// Comma-separated vertex counts.
    #[arg(long, global = true, value_delimiter = ',')]
    pub n_list: Option<Vec<u64>>,
    #[arg(long, global = true)]
    pub p: Option<f64>,
    #[arg(long, global = true)]
    pub c: Option<f64>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub eps_trunc: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// JSON file with any of the flags above (snake_case keys).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Total number of balls.
    #[arg(long = "N", global = true)]
    pub big_n: Option<u64>,
    /// Number of balls drawn.
    #[arg(long, global = true)]
    pub m: Option<u64>,
    /// Comma-separated ball counts per color.
    #[arg(long, global = true, value_delimiter = ',')]
    pub colors: Option<Vec<u64>>,
}

#[derive(Deserialize, Debug, Default)]
#[serde(untagged)]
enum PatternField {
    #[default]
    None,
    One(String),
    Many(Vec<String>),
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    command: Option<String>,
    #[serde(default)]
    patterns: PatternField,
    n: Option<u64>,
    n_list: Option<Vec<u64>>,
    p: Option<f64>,
    c: Option<f64>,
    alpha: Option<f64>,
    trials: Option<u64>,
    seed: Option<u64>,
    eps_trunc: Option<f64>,
    format: Option<Format>,
    out: Option<PathBuf>,
    #[serde(rename = "N")]
    big_n: Option<u64>,
    m: Option<u64>,
    colors: Option<Vec<u64>>,
}

/// How the edge probability is chosen.
#[derive(Debug, Clone, Copy)]
pub enum EdgeProb {
    Fixed(f64),
    Path { c: f64, alpha: f64 },
}

pub const DEFAULT_TRIALS: u64 = 10_000;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_EPS_TRUNC: f64 = 1e-8;

/// The resolved experiment settings.
#[derive(Debug)]
pub struct ExperimentConfig {
    pub command: Command,
    pub patterns: Option<String>,
    pub n: Option<u64>,
    pub n_list: Option<Vec<u64>>,
    pub p: Option<f64>,
    pub c: Option<f64>,
    pub alpha: Option<f64>,
    pub trials: Option<u64>,
    pub seed: u64,
    pub eps_trunc: f64,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub big_n: Option<u64>,
    pub m: Option<u64>,
    pub colors: Option<Vec<u64>>,
}

impl ExperimentConfig {
    pub fn resolve(command: Command, opts: Opts) -> Result<Self, CliError> {
        let file = match &opts.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str::<FileConfig>(&text)
                    .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };
        if let Some(name) = &file.command {
            if name != command.name() {
                return Err(CliError::usage(format!(
                    "config is for `{name}` but `{}` was requested",
                    command.name()
                )));
            }
        }
        let file_patterns = match file.patterns {
            PatternField::None => None,
            PatternField::One(s) => Some(s),
            PatternField::Many(v) => Some(v.join(",")),
        };
        let cfg = ExperimentConfig {
            command,
            patterns: opts.patterns.or(file_patterns),
            n: opts.n.or(file.n),
            n_list: opts.n_list.or(file.n_list),
            p: opts.p.or(file.p),
            c: opts.c.or(file.c),
            alpha: opts.alpha.or(file.alpha),
            trials: opts.trials.or(file.trials),
            seed: opts.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            eps_trunc: opts
                .eps_trunc
                .or(file.eps_trunc)
                .unwrap_or(DEFAULT_EPS_TRUNC),
            format: opts.format.or(file.format).unwrap_or(Format::Csv),
            out: opts.out.or(file.out),
            big_n: opts.big_n.or(file.big_n),
            m: opts.m.or(file.m),
            colors: opts.colors.or(file.colors),
        };
        if cfg.trials == Some(0) {
            return Err(CliError::usage("--trials must be at least 1"));
        }
        Ok(cfg)
    }

    pub fn patterns(&self) -> Result<Vec<PatternGraph>, CliError> {
        let text = self
            .patterns
            .as_deref()
            .ok_or_else(|| CliError::usage("--patterns is required"))?;
        Ok(parse_pattern_list(text)?)
    }

    /// `--n-list` if given, otherwise the single `--n`.
    pub fn ns(&self) -> Result<Vec<u64>, CliError> {
        match (&self.n_list, self.n) {
            (Some(_), Some(_)) => Err(CliError::usage("give either --n or --n-list, not both")),
            (Some(list), None) if !list.is_empty() => Ok(list.clone()),
            (None, Some(n)) => Ok(vec![n]),
            _ => Err(CliError::usage("--n or --n-list is required")),
        }
    }

    /// Exactly one of `--p` and the pair `--c`, `--alpha`.
    pub fn edge_prob(&self) -> Result<EdgeProb, CliError> {
        match (self.p, self.c, self.alpha) {
            (Some(p), None, None) => Ok(EdgeProb::Fixed(p)),
            (None, Some(c), Some(alpha)) => Ok(EdgeProb::Path { c, alpha }),
            (None, None, None) => Err(CliError::usage("give --p or both --c and --alpha")),
            (Some(_), _, _) => Err(CliError::usage("--p cannot be combined with --c/--alpha")),
            _ => Err(CliError::usage("--c and --alpha must be given together")),
        }
    }

    pub fn trials(&self) -> u64 {
        self.trials.unwrap_or(DEFAULT_TRIALS)
    }

    pub fn urn(&self) -> Result<UrnSpec, CliError> {
        let colors = self
            .colors
            .clone()
            .ok_or_else(|| CliError::usage("--colors is required"))?;
        let m = self.m.ok_or_else(|| CliError::usage("--m is required"))?;
        Ok(match self.big_n {
            Some(total) => UrnSpec::with_total(total, colors, m)?,
            None => UrnSpec::new(colors, m)?,
        })
    }
}
