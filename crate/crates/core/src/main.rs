use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches};

use wgfrac::cli::{self, config::KEYS, parse_config};

fn command() -> clap::Command {
    let mut cmd = clap::Command::new("wgfrac")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Weighted generalized fractional operators with Mittag-Leffler kernels")
        .after_help(
            "Every config key is also accepted as a flag (`--n 256`, `--x-a 0`); flags override the file.\n\
             Exit codes: 0 success, 1 error, 2 threshold exceeded.",
        )
        .arg(
            Arg::new("config")
                .long("config")
                .short('c')
                .value_name("PATH")
                .value_parser(clap::value_parser!(PathBuf))
                .help("Config file with `key = value` lines"),
        )
        .arg(
            Arg::new("verbose")
                .long("verbose")
                .short('v')
                .action(ArgAction::Count)
                .help("Log more (repeat for debug output)"),
        );
    for key in KEYS {
        let long = key.replace('_', "-");
        cmd = cmd.arg(
            Arg::new(*key)
                .long(long)
                .value_name("VALUE")
                .allow_hyphen_values(true)
                .hide(true),
        );
    }
    cmd
}

fn flags(m: &ArgMatches) -> Vec<(String, String)> {
    KEYS.iter()
        .filter_map(|k| m.get_one::<String>(k).map(|v| (k.to_string(), v.clone())))
        .collect()
}

fn main() -> ExitCode {
    let m = command().get_matches();
    let level = match m.get_count("verbose") {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let cfg = match parse_config(m.get_one::<PathBuf>("config").map(PathBuf::as_path), &flags(&m)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(cli::EXIT_ERROR as u8);
        }
    };
    ExitCode::from(cli::run(&cfg) as u8)
}
