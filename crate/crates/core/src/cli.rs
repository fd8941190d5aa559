//! Command-line front end. `main` only forwards to [`run`].

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use walkdir::WalkDir;

use crate::check::{check_path, Dumps, FileReport};
use crate::config::{Config, StageSelection};
use crate::duration::{validate_min_unit, NoteType};
use crate::ingest::IngestError;
use crate::report::{aggregate, render_json, render_stats, render_text, Stage};

pub const EXIT_CLEAN: i32 = 0;
pub const EXIT_ERRORS: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

const SCORE_EXTENSIONS: [&str; 3] = ["xml", "musicxml", "mxl"];

#[derive(Debug, Parser)]
#[command(name = "scorelint", version, about = "Finds rhythm and notation errors in MusicXML scores")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check scores and report every finding.
    Validate(ValidateArgs),
    /// Summarize error repartition over a corpus directory.
    Stats(StatsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StageArg {
    Individual,
    Contextual,
    All,
}

#[derive(Debug, Args)]
struct RuleArgs {
    /// Shortest rest value used to decompose skips and gaps.
    #[arg(long, value_name = "NOTE_TYPE", default_value = "128th")]
    min_unit: String,
    /// Reject duplicate pitches in a chord (default).
    #[arg(long, overrides_with = "no_piano_rules")]
    piano_rules: bool,
    #[arg(long)]
    no_piano_rules: bool,
    /// Let voices run past the time signature.
    #[arg(long)]
    allow_overflow: bool,
    /// Do not warn about tuplets inside tuplets.
    #[arg(long)]
    allow_nested_tuplets: bool,
    /// Run contextual checks even when duration checks failed.
    #[arg(long)]
    force_contextual: bool,
    #[arg(long, value_enum, default_value = "all")]
    stage: StageArg,
    /// Refuse scores with more than one part.
    #[arg(long)]
    single_part: bool,
    /// Worker threads; 0 picks one per core.
    #[arg(long, short = 'j', default_value_t = 0)]
    jobs: usize,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Score files or directories to search.
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Print the token sequence of each part.
    #[arg(long)]
    dump_tokens: bool,
    /// Print every state machine transition.
    #[arg(long)]
    dump_state: bool,
    #[command(flatten)]
    rules: RuleArgs,
}

#[derive(Debug, Args)]
struct StatsArgs {
    corpus: PathBuf,
    /// Also write one row per score with the flagged measure labels.
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
    #[command(flatten)]
    rules: RuleArgs,
}

impl RuleArgs {
    fn config(&self) -> Result<Config, String> {
        let unit: NoteType = self
            .min_unit
            .parse()
            .map_err(|e| format!("--min-unit: {e}"))?;
        validate_min_unit(unit.quarters()).map_err(|e| format!("--min-unit: {e}"))?;
        Ok(Config {
            min_unit: unit.quarters(),
            piano_rules: !self.no_piano_rules,
            allow_overflow: self.allow_overflow,
            allow_nested_tuplets: self.allow_nested_tuplets,
            force_contextual: self.force_contextual,
            single_part: self.single_part,
            stages: match self.stage {
                StageArg::Individual => StageSelection::Individual,
                StageArg::Contextual => StageSelection::Contextual,
                StageArg::All => StageSelection::All,
            },
        })
    }
}

fn is_hidden(name: &std::ffi::OsStr) -> bool {
    name.to_str().is_some_and(|s| s.starts_with('.') && s != "." && s != "..")
}

fn has_score_extension(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| SCORE_EXTENSIONS.iter().any(|x| x.eq_ignore_ascii_case(e)))
}

/// Score files under `root`, sorted, hidden entries skipped. A file given
/// directly is returned whatever its extension.
pub fn discover(root: &Path) -> Vec<PathBuf> {
    if !root.is_dir() {
        return vec![root.to_path_buf()];
    }
    let mut out: Vec<PathBuf> = WalkDir::new(root)
        .follow_links(true)
        .into_iter()
        .filter_entry(|e| e.depth() == 0 || !is_hidden(e.file_name()))
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file() && has_score_extension(e.path()))
        .map(|e| e.into_path())
        .collect();
    out.sort();
    out
}

/// Checks every path, in parallel, returning results in input order.
fn check_all(
    paths: &[PathBuf],
    config: &Config,
    dumps: Dumps,
    jobs: usize,
) -> Vec<Result<FileReport, IngestError>> {
    let work = || {
        paths
            .par_iter()
            .map(|p| check_path(p, &p.display().to_string(), config, dumps))
            .collect()
    };
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(work),
        Err(_) => work(),
    }
}

fn validate(args: &ValidateArgs, out: &mut dyn Write, err: &mut dyn Write) -> std::io::Result<i32> {
    let config = match args.rules.config() {
        Ok(c) => c,
        Err(e) => {
            writeln!(err, "error: {e}")?;
            return Ok(EXIT_FAILURE);
        }
    };
    let mut paths = Vec::new();
    for p in &args.paths {
        paths.extend(discover(p));
    }
    let dumps = Dumps {
        tokens: args.dump_tokens,
        state: args.dump_state,
    };

    let mut status = EXIT_CLEAN;
    for result in check_all(&paths, &config, dumps, args.rules.jobs) {
        match result {
            Err(e) => {
                writeln!(err, "error: {e}")?;
                status = EXIT_FAILURE;
            }
            Ok(report) => {
                if let Some(d) = &report.token_dump {
                    out.write_all(d.as_bytes())?;
                }
                if let Some(d) = &report.state_dump {
                    out.write_all(d.as_bytes())?;
                }
                match args.format {
                    Format::Text => out.write_all(render_text(&report.diagnostics).as_bytes())?,
                    Format::Json => {
                        out.write_all(&render_json(&report.file, &report.diagnostics))?;
                        out.write_all(b"\n")?;
                    }
                }
                if report.has_errors() && status == EXIT_CLEAN {
                    status = EXIT_ERRORS;
                }
            }
        }
    }
    Ok(status)
}

fn write_csv(path: &Path, reports: &[FileReport]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "file",
        "individual_bars",
        "individual_flagged",
        "contextual_bars",
        "contextual_flagged",
    ])?;
    for r in reports {
        let bars = |o: &Option<crate::report::StageOutcome>| o.as_ref().map_or_else(String::new, |o| o.total_bars.to_string());
        w.write_record([
            r.file.clone(),
            bars(&r.outcome.individual),
            r.flagged_labels(Stage::Individual).join(" "),
            bars(&r.outcome.contextual),
            r.flagged_labels(Stage::Contextual).join(" "),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn stats(args: &StatsArgs, out: &mut dyn Write, err: &mut dyn Write) -> std::io::Result<i32> {
    let config = match args.rules.config() {
        Ok(c) => c,
        Err(e) => {
            writeln!(err, "error: {e}")?;
            return Ok(EXIT_FAILURE);
        }
    };
    if !args.corpus.is_dir() {
        writeln!(err, "error: {} is not a directory", args.corpus.display())?;
        return Ok(EXIT_FAILURE);
    }
    let paths = discover(&args.corpus);
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for (path, result) in paths.iter().zip(check_all(&paths, &config, Dumps::default(), args.rules.jobs)) {
        let name = path
            .strip_prefix(&args.corpus)
            .unwrap_or(path)
            .display()
            .to_string();
        match result {
            Err(e) => failures.push((name, e.to_string())),
            Ok(r) => match &r.rejected {
                Some(reason) => failures.push((name, reason.clone())),
                None => reports.push(FileReport { file: name, ..r }),
            },
        }
    }
    let outcomes: Vec<_> = reports.iter().map(|r| r.outcome.clone()).collect();
    out.write_all(render_stats(&aggregate(&outcomes, &failures)).as_bytes())?;
    if let Some(csv_path) = &args.csv {
        if let Err(e) = write_csv(csv_path, &reports) {
            writeln!(err, "error: writing {}: {e}", csv_path.display())?;
            return Ok(EXIT_FAILURE);
        }
    }
    Ok(EXIT_CLEAN)
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return EXIT_FAILURE;
            }
            let _ = write!(out, "{e}");
            return EXIT_CLEAN;
        }
    };
    let result = match &cli.command {
        Command::Validate(a) => validate(a, out, err),
        Command::Stats(a) => stats(a, out, err),
    };
    result.unwrap_or_else(|e| {
        let _ = writeln!(err, "error: {e}");
        EXIT_FAILURE
    })
}
