//! The experiment driver: `workbench <experiment> --config <path> [--seed N]
//! [--out DIR]`. Exit code 0 = all checks pass, 1 = inconclusive, 2 =
//! failure.

use harness_cli::experiments::{cutting, euler_limit, kinetic_limit, mc_scaling, nsf_limit};
use harness_cli::{Config, RunReport};
use std::path::PathBuf;
use std::process::ExitCode;

fn usage() -> ! {
    eprintln!(
        "usage: workbench <kinetic-limit|nsf-limit|euler-limit|cutting-props|mc-scaling> \
         [--config PATH] [--seed N] [--out DIR]"
    );
    std::process::exit(2)
}

fn main() -> ExitCode {
    let mut args = std::env::args().skip(1);
    let Some(experiment) = args.next() else { usage() };
    let mut config_path: Option<PathBuf> = None;
    let mut seed: u64 = 1;
    let mut out_dir = PathBuf::from("out");
    while let Some(flag) = args.next() {
        match flag.as_str() {
            "--config" => config_path = Some(PathBuf::from(args.next().unwrap_or_else(|| usage()))),
            "--seed" => {
                seed = args
                    .next()
                    .and_then(|s| s.parse().ok())
                    .unwrap_or_else(|| usage())
            }
            "--out" => out_dir = PathBuf::from(args.next().unwrap_or_else(|| usage())),
            _ => usage(),
        }
    }
    let cfg = match config_path {
        Some(p) => match Config::load(&p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("{e}");
                return ExitCode::from(2);
            }
        },
        None => Config::default(),
    };
    if let Err(e) = cfg.validate_ranges() {
        eprintln!("{e}");
        return ExitCode::from(2);
    }
    let result: harness_cli::Result<RunReport> = match experiment.as_str() {
        "kinetic-limit" => kinetic_limit::KineticLimitParams::from_config(&cfg, seed)
            .and_then(|p| kinetic_limit::run(&p, &out_dir)),
        "nsf-limit" => nsf_limit::NsfLimitParams::from_config(&cfg, seed)
            .and_then(|p| nsf_limit::run(&p, &out_dir)),
        "euler-limit" => euler_limit::EulerLimitParams::from_config(&cfg, seed)
            .and_then(|p| euler_limit::run(&p, &out_dir)),
        "cutting-props" => cutting::CuttingParams::from_config(&cfg, seed)
            .and_then(|p| cutting::run(&p, &out_dir)),
        "mc-scaling" => mc_scaling::McScalingParams::from_config(&cfg, seed)
            .and_then(|p| mc_scaling::run(&p, &out_dir)),
        _ => usage(),
    };
    match result {
        Ok(report) => {
            print!("{}", report.render());
            let _ = std::fs::create_dir_all(&out_dir);
            let _ = std::fs::write(
                out_dir.join(format!("{experiment}_report.txt")),
                report.render(),
            );
            ExitCode::from(report.verdict().exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
