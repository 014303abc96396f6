//! Configuration parsing and bit-reproducibility: identical config and seed
//! must produce identical CSV artifacts.

use harness_cli::experiments::mc_scaling;
use harness_cli::Config;

#[test]
fn config_parses_sections_and_validates_ranges() {
    let text = "\
# a comment
[kinetic-limit]
epsilon_list = 0.05, 0.02
alpha = 1.0
runs = 10

[nsf-limit]
delta = 0.2
x_cells = 64
";
    let cfg = Config::parse(text).unwrap();
    assert_eq!(cfg.get("kinetic-limit", "alpha"), Some("1.0"));
    assert_eq!(
        cfg.f64_list_or("kinetic-limit", "epsilon_list", &[]).unwrap(),
        vec![0.05, 0.02]
    );
    assert_eq!(cfg.usize_or("kinetic-limit", "runs", 0).unwrap(), 10);
    cfg.validate_ranges().unwrap();

    let bad = Config::parse("[nsf-limit]\nx_cells = 48\n").unwrap();
    assert!(bad.validate_ranges().is_err(), "48 is not a power of two");
    let bad_eps = Config::parse("[a]\nepsilon = 0.7\n").unwrap();
    assert!(bad_eps.validate_ranges().is_err(), "epsilon must be < 1/2");
}

#[test]
fn identical_config_and_seed_reproduce_artifacts_bitwise() {
    let params = mc_scaling::McScalingParams {
        eps_list: vec![1e-4, 1e-3, 1e-2, 1e-1],
        samples: 20_000,
        seed: 99,
        mu: 0.25,
        slope_tol: 10.0, // the campaign may be inconclusive at this size
    };
    let base = std::env::temp_dir().join("workbench_repro");
    let dir_a = base.join("a");
    let dir_b = base.join("b");
    let _ = std::fs::remove_dir_all(&base);
    mc_scaling::run(&params, &dir_a).unwrap();
    mc_scaling::run(&params, &dir_b).unwrap();
    let a = std::fs::read(dir_a.join("mc_scaling.csv")).unwrap();
    let b = std::fs::read(dir_b.join("mc_scaling.csv")).unwrap();
    assert_eq!(a, b, "identical config + seed must give identical CSV bytes");
}
