mod cli;
mod commands;
mod config;
mod manifest;

use std::ffi::OsString;
use std::fmt;

use clap::{ArgMatches, CommandFactory, FromArgMatches};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use cli::{Cli, Command, GalleryCommand};
use lve_core::exec::with_workers;
use lve_core::Execution;
use manifest::RunManifest;

/// Exit codes: usage 2, data 3, numerical state 4.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(lve_core::Error),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_numerical() || matches!(e, lve_core::Error::Objective(_)) => 4,
            CliError::Core(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => e.fmt(f),
        }
    }
}

impl From<lve_core::Error> for CliError {
    fn from(e: lve_core::Error) -> Self {
        CliError::Core(e)
    }
}

/// Per-run context handed to every subcommand.
pub struct Ctx {
    pub subcommand: String,
    pub seed: u64,
    pub execution: Execution,
    record: Map<String, Value>,
}

impl Ctx {
    /// Writes the run manifest into `out`.
    pub fn finish(&self, out: &std::path::Path, inputs: &[&std::path::Path]) -> Result<(), CliError> {
        RunManifest::write(&self.subcommand, self.record.clone(), self.seed, inputs, out)?;
        eprintln!("wrote {}", out.join(manifest::MANIFEST_FILE).display());
        Ok(())
    }
}

fn main() {
    std::process::exit(run(std::env::args_os().collect()));
}

fn run(argv: Vec<OsString>) -> i32 {
    let parsed = Cli::command()
        .try_get_matches_from(&argv)
        .and_then(|m| Cli::from_arg_matches(&m).map(|cli| (cli, m)));
    let (cli, matches) = match parsed {
        Ok(v) => v,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Command::Rerun(args) = &cli.command {
        return match RunManifest::load(&args.manifest) {
            Ok(m) => {
                let mut argv: Vec<OsString> = vec!["lve".into()];
                argv.extend(m.subcommand.split(' ').map(OsString::from));
                argv.extend(["--config".into(), args.manifest.clone().into_os_string()]);
                if let Some(out) = &args.out {
                    argv.extend(["--out".into(), out.clone().into_os_string()]);
                }
                run(argv)
            }
            Err(e) => report(e),
        };
    }
    match execute(&cli, &matches) {
        Ok(()) => 0,
        Err(e) => report(e),
    }
}

fn report(e: CliError) -> i32 {
    eprintln!("error: {e}");
    e.exit_code()
}

/// Innermost subcommand matches and the space-joined subcommand path.
fn leaf(matches: &ArgMatches) -> (String, &ArgMatches) {
    let mut names = Vec::new();
    let mut m = matches;
    while let Some((name, sub)) = m.subcommand() {
        names.push(name);
        m = sub;
    }
    (names.join(" "), m)
}

fn execute(cli: &Cli, matches: &ArgMatches) -> Result<(), CliError> {
    let config = match &cli.globals.config {
        Some(path) => config::load(path)?,
        None => Map::new(),
    };
    let (globals, _) = config::merge(&cli.globals, matches, &config)?;
    let (subcommand, sub) = leaf(matches);
    let base = Base { subcommand, sub, config, globals };
    match &cli.command {
        Command::Gallery(GalleryCommand::Build(a)) => base.dispatch(a, commands::gallery::build),
        Command::Gallery(GalleryCommand::Synth(a)) => base.dispatch(a, commands::gallery::synth),
        Command::Calibrate(a) => base.dispatch(a, commands::calibrate::run),
        Command::Evolve(a) => base.dispatch(a, commands::evolve::run),
        Command::Evaluate(a) => base.dispatch(a, commands::evaluate::run),
        Command::GenSample(a) => base.dispatch(a, commands::generator::sample),
        Command::GenFixture(a) => base.dispatch(a, commands::generator::fixture),
        Command::Rerun(_) => unreachable!("handled before dispatch"),
    }
}

struct Base<'a> {
    subcommand: String,
    sub: &'a ArgMatches,
    config: Map<String, Value>,
    globals: cli::Globals,
}

impl Base<'_> {
    fn dispatch<T>(self, args: &T, command: fn(&T, &Ctx) -> Result<(), CliError>) -> Result<(), CliError>
    where
        T: Serialize + DeserializeOwned + Send + Sync,
    {
        let (args, _) = config::merge(args, self.sub, &self.config)?;
        let mut record = to_map(&self.globals);
        record.extend(to_map(&args));
        for key in self.config.keys().filter(|k| !record.contains_key(*k)) {
            eprintln!("warning: config key {key:?} is not an option of `lve {}`", self.subcommand);
        }
        let ctx = Ctx {
            subcommand: self.subcommand,
            seed: self.globals.seed,
            execution: Execution::Parallel,
            record,
        };
        if self.globals.workers == Some(0) {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        with_workers(self.globals.workers, || command(&args, &ctx))
    }
}

fn to_map<T: Serialize>(value: &T) -> Map<String, Value> {
    match serde_json::to_value(value) {
        Ok(Value::Object(m)) => m,
        _ => Map::new(),
    }
}
