//! Argument parsing and dispatch; returns the exit code instead of exiting.

use std::fs;
use std::path::PathBuf;

use clap::{Arg, ArgAction, ArgMatches, Command};

use mequi::Error;

use crate::commands::{self, Outcome, SUBCOMMANDS};
use crate::config::{RunConfig, DEFAULTS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_ORACLE: i32 = 3;
pub const EXIT_SAMPLER: i32 = 4;
pub const EXIT_ACCEPTANCE: i32 = 5;
pub const EXIT_IO: i32 = 1;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::OracleExhausted { .. } | Error::BoundaryAmbiguity { .. } => EXIT_ORACLE,
        Error::SamplerExhausted(_) => EXIT_SAMPLER,
        _ => EXIT_INVALID,
    }
}

pub fn command() -> Command {
    let keyed = |name: &'static str, about: &'static str| {
        DEFAULTS.iter().filter(|(k, _, _)| *k != "seed").fold(
            Command::new(name).about(about),
            |c, (k, v, m)| {
                c.arg(
                    Arg::new(*k)
                        .long(*k)
                        .value_name("VALUE")
                        .allow_hyphen_values(true)
                        .help(format!("{m} [default: {v}]")),
                )
            },
        )
    };
    SUBCOMMANDS.iter().fold(
        Command::new("mequi")
            .version(crate::report::VERSION)
            .about("Mean equicontinuity laboratory")
            .subcommand_required(true)
            .arg(Arg::new("seed").long("seed").global(true).value_name("U64").help("master seed"))
            .arg(Arg::new("out").long("out").global(true).value_name("PATH").help("write the JSON report here"))
            .arg(Arg::new("config").long("config").global(true).value_name("PATH").help("key = value file"))
            .arg(
                Arg::new("threads")
                    .long("threads")
                    .global(true)
                    .value_name("N")
                    .value_parser(clap::value_parser!(usize))
                    .help("worker threads; results do not depend on it"),
            )
            .arg(Arg::new("quiet").long("quiet").global(true).action(ArgAction::SetTrue).help("no stdout report")),
        |c, (name, about)| c.subcommand(keyed(name, about)),
    )
}

fn resolve(sub: &ArgMatches) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::default();
    if let Some(path) = sub.get_one::<String>("config") {
        let text = fs::read_to_string(path).map_err(|e| Error::invalid(format!("config file {path}: {e}")))?;
        cfg.apply_text(&text)?;
    }
    for (k, _, _) in DEFAULTS {
        if let Some(v) = sub.get_one::<String>(k) {
            cfg.set(k, v)?;
        }
    }
    cfg.seed()?;
    Ok(cfg)
}

/// What a run printed and how it ended.
pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run<I, T>(args: I) -> Run
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                Run { code, stdout: text, stderr: String::new() }
            } else {
                Run { code, stdout: String::new(), stderr: text }
            };
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let fail = |code: i32, msg: String| Run { code, stdout: String::new(), stderr: msg + "\n" };
    let cfg = match resolve(sub) {
        Ok(c) => c,
        Err(e) => return fail(exit_code(&e), format!("error: {e}")),
    };
    let work = || commands::run(name, &cfg);
    let outcome = match sub.get_one::<usize>("threads") {
        Some(&n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(work),
            Err(e) => return fail(EXIT_INVALID, format!("error: thread pool: {e}")),
        },
        None => work(),
    };
    let Outcome { report, table } = match outcome {
        Ok(o) => o,
        Err(e) => return fail(exit_code(&e), format!("error: {e}")),
    };
    let json = report.to_json();
    let mut stderr = commands::check_lines(&report.checks);
    if let Some(path) = sub.get_one::<String>("out") {
        if let Err(e) = fs::write(PathBuf::from(path), &json) {
            return fail(EXIT_IO, format!("error: writing {path}: {e}"));
        }
    }
    if let (Some(path), Some(table)) = (cfg.optional::<String>("csv").ok().flatten(), &table) {
        if let Err(e) = fs::write(&path, table) {
            return fail(EXIT_IO, format!("error: writing {path}: {e}"));
        }
        stderr.push_str(&format!("wrote {path}\n"));
    }
    let stdout = if sub.get_flag("quiet") {
        String::new()
    } else if name == "defaults" {
        table.unwrap_or_default()
    } else {
        json
    };
    let code = if report.all_passed() { EXIT_OK } else { EXIT_ACCEPTANCE };
    Run { code, stdout, stderr }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builder_is_consistent() {
        command().debug_assert();
    }

    #[test]
    fn error_classes_map_to_codes() {
        assert_eq!(exit_code(&Error::invalid("x")), EXIT_INVALID);
        assert_eq!(exit_code(&Error::exhausted(3, "x")), EXIT_ORACLE);
        assert_eq!(exit_code(&Error::BoundaryAmbiguity { index: 0, epsilon: 1e-15 }), EXIT_ORACLE);
        assert_eq!(exit_code(&Error::SamplerExhausted("x".into())), EXIT_SAMPLER);
        assert_eq!(exit_code(&Error::Mismatch("x".into())), EXIT_INVALID);
    }

    #[test]
    fn unknown_flag_is_invalid() {
        assert_eq!(run(["mequi", "gen", "--bogus", "1"]).code, EXIT_INVALID);
        assert_eq!(run(["mequi", "gen", "--window", "3..1"]).code, EXIT_INVALID);
    }
}
