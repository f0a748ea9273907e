//! The `procviz` command line: capture editing sessions, record code runs,
//! analyze sessions into bundles, and serve bundles to the viewer.

pub mod capture;
pub mod error;
pub mod exec;
pub mod passcode;
pub mod serve;
pub mod storage;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, OnceLock};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use procviz_core::store::{self, DEFAULT_KDF_ITERATIONS};
use procviz_core::{
    build_bundle, render_stats_table, AnalysisParams, MatchingRule, PvBundle, SegmentationConfig,
    SessionKind,
};

use crate::capture::{Capture, SystemClock};
use crate::error::{exit, CliError};
use crate::passcode::PasscodeSource;
use crate::storage::SessionStore;

pub use crate::error::exit as exit_codes;

#[derive(Debug, Parser)]
#[command(
    name = "procviz",
    version,
    about = "Writing and coding process analytics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Poll a file and record a snapshot whenever its content changes.
    Capture(CaptureArgs),
    /// Run a command and record its outcome in a session.
    Run(RunArgs),
    /// Print descriptive statistics and write a visualization bundle.
    Analyze(AnalyzeArgs),
    /// Serve a bundle and the viewer on a loopback port.
    Serve(ServeArgs),
    /// Encrypt a plaintext session file.
    Encrypt(EncryptArgs),
    /// Decrypt an encrypted session file.
    Decrypt(DecryptArgs),
}

#[derive(Debug, Args)]
pub struct PasscodeArgs {
    /// Read the passcode from PF_PASSCODE instead of prompting.
    #[arg(long, global = true)]
    pub passcode_env: bool,
}

impl PasscodeArgs {
    fn source(&self) -> PasscodeSource {
        PasscodeSource::from_flag(self.passcode_env)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Text,
    Code,
}

impl From<KindArg> for SessionKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Text => SessionKind::Text,
            KindArg::Code => SessionKind::Code,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MatchingArg {
    /// Each passage version is claimed at most once, best pairs first.
    OneToOne,
    /// Each passage independently adopts its most similar predecessor.
    PerPassage,
}

impl From<MatchingArg> for MatchingRule {
    fn from(m: MatchingArg) -> Self {
        match m {
            MatchingArg::OneToOne => MatchingRule::OneToOne,
            MatchingArg::PerPassage => MatchingRule::PerPassage,
        }
    }
}

#[derive(Debug, Args)]
pub struct CaptureArgs {
    /// File to watch.
    pub path: PathBuf,
    /// Session file to write; resumed if it exists.
    #[arg(short, long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 5000, value_parser = clap::value_parser!(u64).range(500..))]
    pub interval_ms: u64,
    #[arg(long, value_enum, default_value_t = KindArg::Text)]
    pub kind: KindArg,
    /// Write the session as an encrypted container.
    #[arg(long)]
    pub encrypt: bool,
    #[arg(long, hide = true, default_value_t = DEFAULT_KDF_ITERATIONS)]
    pub kdf_iterations: u32,
    #[command(flatten)]
    pub passcode: PasscodeArgs,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Session file to append the execution event to.
    #[arg(short, long)]
    pub session: PathBuf,
    #[command(flatten)]
    pub passcode: PasscodeArgs,
    /// Command and its arguments.
    #[arg(required = true, trailing_var_arg = true, allow_hyphen_values = true)]
    pub command: Vec<String>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Session file, plaintext or encrypted.
    pub session: PathBuf,
    /// Bundle output path [default: <session>.pvbundle.json]
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    pub ngram_n: u64,
    /// Similarity a passage must exceed to keep its identity, in [0, 1].
    #[arg(long, default_value_t = 0.5, value_parser = parse_threshold)]
    pub threshold: f64,
    /// Gaps between snapshots longer than this count as idle.
    #[arg(long, default_value_t = 60_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub idle_gap_ms: u64,
    /// Word delimiter characters; \t \n \r and \\ escapes are understood.
    #[arg(long, default_value = " \\t\\n", value_parser = parse_delims)]
    pub word_delims: Delims,
    /// Sentence delimiter characters.
    #[arg(long, default_value = ".!?", value_parser = parse_delims)]
    pub sentence_delims: Delims,
    #[arg(long, default_value_t = 25, value_parser = clap::value_parser!(u64).range(1..))]
    pub top_k: u64,
    #[arg(long, value_enum, default_value_t = MatchingArg::OneToOne)]
    pub matching: MatchingArg,
    #[command(flatten)]
    pub passcode: PasscodeArgs,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Bundle written by `analyze`.
    pub bundle: PathBuf,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Directory holding the built viewer; a minimal page is served otherwise.
    #[arg(long)]
    pub viewer_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EncryptArgs {
    pub input: PathBuf,
    /// Output path [default: input with a .pfb extension]
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    #[arg(long, hide = true, default_value_t = DEFAULT_KDF_ITERATIONS)]
    pub kdf_iterations: u32,
    #[command(flatten)]
    pub passcode: PasscodeArgs,
}

#[derive(Debug, Args)]
pub struct DecryptArgs {
    pub input: PathBuf,
    #[arg(short, long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub passcode: PasscodeArgs,
}

fn parse_threshold(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

/// A delimiter set given on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delims(pub Vec<char>);

fn parse_delims(s: &str) -> Result<Delims, String> {
    let mut out = Vec::new();
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        out.push(match chars.next() {
            Some('t') => '\t',
            Some('n') => '\n',
            Some('r') => '\r',
            Some('\\') => '\\',
            Some(other) => return Err(format!("unknown escape `\\{other}`")),
            None => return Err("trailing backslash".into()),
        });
    }
    if out.is_empty() {
        return Err("delimiter set must not be empty".into());
    }
    Ok(Delims(out))
}

impl AnalyzeArgs {
    pub fn params(&self) -> Result<AnalysisParams, CliError> {
        let segmentation = SegmentationConfig::new(
            self.word_delims.0.iter().copied(),
            self.sentence_delims.0.iter().copied(),
            self.ngram_n as usize,
        )
        .map_err(|e| CliError::Usage(e.to_string()))?;
        let params = AnalysisParams {
            segmentation,
            threshold: self.threshold,
            idle_gap_ms: self.idle_gap_ms,
            top_k: self.top_k as usize,
            matching: self.matching.into(),
        };
        params
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(params)
    }

    pub fn out_path(&self) -> PathBuf {
        self.out
            .clone()
            .unwrap_or_else(|| self.session.with_extension("pvbundle.json"))
    }
}

/// Set by Ctrl-C. Installed once per process.
fn interrupt_flag() -> Arc<AtomicBool> {
    static FLAG: OnceLock<Arc<AtomicBool>> = OnceLock::new();
    FLAG.get_or_init(|| {
        let flag = Arc::new(AtomicBool::new(false));
        let f = flag.clone();
        if let Err(e) = ctrlc::set_handler(move || f.store(true, Ordering::SeqCst)) {
            warn!("cannot install interrupt handler: {e}");
        }
        flag
    })
    .clone()
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::reading(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

fn cmd_capture(a: &CaptureArgs) -> Result<(), CliError> {
    if !a.path.is_file() {
        return Err(CliError::FileNotFound(a.path.clone()));
    }
    let source = a.passcode.source();
    let encrypt = a.encrypt.then_some((&source, a.kdf_iterations));
    let (store, file) =
        SessionStore::create_or_resume(&a.out, a.kind.into(), a.interval_ms, encrypt)?;
    let existing = file.into_raw().snapshots;
    let mut cap = Capture::new(&a.path, store, &existing, SystemClock)?;
    let stop = interrupt_flag();
    eprintln!(
        "capturing {} into {} every {} ms; press Ctrl-C to stop",
        a.path.display(),
        a.out.display(),
        a.interval_ms
    );
    cap.run(Duration::from_millis(a.interval_ms), &stop)?;
    eprintln!(
        "stopped; {} snapshots in {}",
        cap.snapshot_count(),
        a.out.display()
    );
    Ok(())
}

fn cmd_run(a: &RunArgs) -> Result<i32, CliError> {
    let (store, file) = SessionStore::open(&a.session, &a.passcode.source())?;
    let outcome = exec::run_and_record(&store, file.kind, &a.command, &SystemClock)?;
    info!(
        "recorded execution at {} (success: {})",
        outcome.event.t, outcome.event.success
    );
    // Mirror the child's status so `procviz run` composes in scripts.
    Ok(outcome.status.code().unwrap_or(exit::IO))
}

/// Load a session file, plaintext or encrypted, and validate it.
pub fn load_history(
    path: &Path,
    passcode: &PasscodeSource,
) -> Result<procviz_core::Validated, CliError> {
    let bytes = read_file(path)?;
    let pass = if store::is_container(&bytes) {
        Some(passcode.get()?)
    } else {
        None
    };
    Ok(procviz_core::load_session(&bytes, pass.as_deref())?)
}

/// Build the bundle for `a`; returns the stats table and the bundle.
pub fn analyze(a: &AnalyzeArgs) -> Result<(String, PvBundle), CliError> {
    let params = a.params()?;
    let v = load_history(&a.session, &a.passcode.source())?;
    for w in &v.warnings {
        warn!("{w}");
    }
    let bundle = build_bundle(&v.history, &params).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok((render_stats_table(&bundle.stats), bundle))
}

fn cmd_analyze(a: &AnalyzeArgs) -> Result<(), CliError> {
    let (table, bundle) = analyze(a)?;
    let out = a.out_path();
    write_file(&out, bundle.to_json().as_bytes())?;
    print!("{table}");
    println!("\nbundle written to {}", out.display());
    Ok(())
}

fn cmd_serve(a: &ServeArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&a.bundle).map_err(|e| CliError::reading(&a.bundle, e))?;
    let bundle = PvBundle::from_json(&text).map_err(|e| CliError::Malformed(e.to_string()))?;
    if let Some(dir) = &a.viewer_dir {
        if !dir.is_dir() {
            return Err(CliError::FileNotFound(dir.clone()));
        }
    }
    let handle = serve::start(
        serve::App::new(bundle, a.viewer_dir.clone()),
        a.port,
        interrupt_flag(),
    )?;
    eprintln!(
        "serving on http://{}/ ; press Ctrl-C to stop",
        handle.addr()
    );
    handle.wait();
    Ok(())
}

fn cmd_encrypt(a: &EncryptArgs) -> Result<(), CliError> {
    let plain = read_file(&a.input)?;
    if store::is_container(&plain) {
        return Err(CliError::Usage(format!(
            "{} is already encrypted",
            a.input.display()
        )));
    }
    procviz_core::SessionFile::parse(&plain).map_err(|e| CliError::Malformed(e.to_string()))?;
    let out = a
        .out
        .clone()
        .unwrap_or_else(|| a.input.with_extension(store::FILE_EXTENSION));
    let c = store::encrypt_with_iterations(&plain, &a.passcode.source().get()?, a.kdf_iterations)?;
    write_file(&out, &c.to_bytes())
}

fn cmd_decrypt(a: &DecryptArgs) -> Result<(), CliError> {
    let bytes = read_file(&a.input)?;
    if !store::is_container(&bytes) {
        return Err(CliError::Malformed(format!(
            "{} is not an encrypted session",
            a.input.display()
        )));
    }
    let plain = store::decrypt_bytes(&bytes, &a.passcode.source().get()?)?;
    write_file(&a.out, &plain)
}

pub fn execute(cli: &Cli) -> Result<i32, CliError> {
    match &cli.command {
        Cmd::Capture(a) => cmd_capture(a).map(|_| exit::SUCCESS),
        Cmd::Run(a) => cmd_run(a),
        Cmd::Analyze(a) => cmd_analyze(a).map(|_| exit::SUCCESS),
        Cmd::Serve(a) => cmd_serve(a).map(|_| exit::SUCCESS),
        Cmd::Encrypt(a) => cmd_encrypt(a).map(|_| exit::SUCCESS),
        Cmd::Decrypt(a) => cmd_decrypt(a).map(|_| exit::SUCCESS),
    }
}

/// Usage line of the subcommand named in `args`, or of the whole tool.
fn usage_for(args: &[OsString]) -> String {
    use clap::CommandFactory;
    let mut cmd = Cli::command();
    let name = args
        .iter()
        .skip(1)
        .filter_map(|a| a.to_str())
        .find(|a| cmd.find_subcommand(a).is_some())
        .map(str::to_owned);
    cmd.build();
    match name.and_then(|n| cmd.find_subcommand_mut(&n).map(|c| c.render_usage())) {
        Some(u) => u.to_string(),
        None => cmd.render_usage().to_string(),
    }
}

/// Parse `args` (including the program name) and run, returning the exit
/// code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            if !e.use_stderr() {
                return exit::SUCCESS;
            }
            if !e.to_string().contains("Usage:") {
                eprintln!("\n{}", usage_for(&args));
            }
            return exit::USAGE;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("procviz: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("procviz").chain(args.iter().copied()))
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn threshold_bounds() {
        assert!(parse(&["analyze", "s", "--threshold", "1.5"]).is_err());
        assert!(parse(&["analyze", "s", "--threshold", "-0.1"]).is_err());
        assert!(parse(&["analyze", "s", "--threshold", "1"]).is_ok());
        assert!(parse(&["analyze", "s", "--threshold", "0"]).is_ok());
    }

    #[test]
    fn interval_lower_bound() {
        assert!(parse(&["capture", "f", "-o", "s", "--interval-ms", "499"]).is_err());
        assert!(parse(&["capture", "f", "-o", "s", "--interval-ms", "500"]).is_ok());
    }

    #[test]
    fn analyze_defaults_match_core_defaults() {
        let Cmd::Analyze(a) = parse(&["analyze", "s.pfs"]).unwrap().command else {
            panic!()
        };
        assert_eq!(a.params().unwrap(), AnalysisParams::default());
        assert_eq!(a.out_path(), PathBuf::from("s.pvbundle.json"));
    }

    #[test]
    fn delimiter_escapes() {
        assert_eq!(parse_delims(" \\t\\n").unwrap().0, vec![' ', '\t', '\n']);
        assert_eq!(parse_delims(";\\\\").unwrap().0, vec![';', '\\']);
        assert!(parse_delims("\\q").is_err());
        assert!(parse_delims("").is_err());
        assert!(parse_delims("a\\").is_err());
    }

    #[test]
    fn run_keeps_hyphenated_arguments() {
        let Cmd::Run(a) = parse(&["run", "-s", "x", "--", "python", "-c", "1"])
            .unwrap()
            .command
        else {
            panic!()
        };
        assert_eq!(a.command, ["python", "-c", "1"]);
    }

    #[test]
    fn usage_errors_exit_2_and_help_exits_0() {
        assert_eq!(
            run_cli(["procviz", "analyze", "s", "--threshold", "1.5"]),
            exit::USAGE
        );
        assert_eq!(run_cli(["procviz", "bogus"]), exit::USAGE);
        assert_eq!(run_cli(["procviz", "--help"]), exit::SUCCESS);
    }
}
