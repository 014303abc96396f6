//! Monte Carlo scaling campaigns: fitted log-log slopes of the elementary
//! integrals against the claimed excess exponents (the double-root volume
//! and the long-bond separation both scale like eps^{d-1}).

use crate::report::RunReport;
use crate::{Config, Result};
use mc_integrals::{csv_row, estimate_j, scaling_exponent, IntegralSpec, ScalingVerdict};
use molecule::{cut, Bound, CutMode, HistoryBuilder, Molecule, Rational, Restriction};
use particle_system::PhasePoint;
use std::collections::BTreeMap;
use std::path::Path;
use torus_core::TorusVec;

pub struct McScalingParams {
    pub eps_list: Vec<f64>,
    pub samples: u64,
    pub seed: u64,
    pub mu: f64,
    pub slope_tol: f64,
}

impl McScalingParams {
    pub fn from_config(cfg: &Config, seed: u64) -> Result<Self> {
        Ok(Self {
            eps_list: cfg.f64_list_or(
                "mc-scaling",
                "epsilon_list",
                &[1e-4, 3.16e-4, 1e-3, 3.16e-3, 1e-2],
            )?,
            samples: cfg.u64_or("mc-scaling", "samples", 4_000_000)?,
            seed,
            mu: cfg.f64_or("mc-scaling", "mu", 0.25)?,
            slope_tol: cfg.f64_or("mc-scaling", "slope_tol", 0.3)?,
        })
    }
}

fn phase(x: [f64; 2], v: [f64; 2]) -> PhasePoint<2> {
    PhasePoint {
        x: TorusVec::new(x),
        v,
    }
}

fn fixed_end_ids(m: &Molecule) -> Vec<molecule::EdgeId> {
    m.edges_iter()
        .filter_map(|(id, e)| match e {
            molecule::Edge::End {
                status: molecule::EndStatus::Fixed,
                ..
            } => Some(id),
            _ => None,
        })
        .collect()
}

fn three_molecule() -> Molecule {
    let m = HistoryBuilder::new(3).collide(0, 1).collide(1, 2).build();
    cut(&m, &[1].into(), CutMode::Free).unwrap().rest
}

fn a33_molecule() -> Molecule {
    let m = HistoryBuilder::new(5)
        .collide(0, 1)
        .collide(0, 2)
        .collide(1, 3)
        .collide(2, 4)
        .build();
    cut(&m, &[2, 3].into(), CutMode::Free).unwrap().rest
}

fn base_spec(m: Molecule, fixed: Vec<PhasePoint<2>>, eps: f64) -> IntegralSpec<2> {
    let ids = fixed_end_ids(&m);
    let windows = m.atom_ids().map(|a| (a, (0.0, 1.0))).collect();
    IntegralSpec {
        fixed_ends: ids.into_iter().zip(fixed).collect(),
        externals: Vec::new(),
        epsilon: eps,
        v_cut: 2.0,
        windows,
        molecule: m,
        t_range: 1.5,
        params: BTreeMap::new(),
    }
}

/// {3} with the double-root restriction on the incoming pair.
pub fn double_root_spec(eps: f64) -> IntegralSpec<2> {
    let mut m = three_molecule();
    let atom = m.atom_ids().next().unwrap();
    let slots = m.slots(atom).unwrap();
    m.restrictions.push(Restriction::DoubleRoot {
        e1: slots[2],
        e2: slots[3],
    });
    base_spec(m, vec![phase([0.31, 0.47], [0.4, 0.1])], eps)
}

/// {33A} with the time-separation restriction at a fixed mu.
pub fn a33_long_bond_spec(eps: f64, mu: f64) -> IntegralSpec<2> {
    let mut m = a33_molecule();
    let atoms: Vec<u32> = m.atom_ids().collect();
    m.restrictions.push(Restriction::TimeSepAtLeast {
        a: atoms[0],
        b: atoms[1],
        bound: Bound::Dyadic {
            name: "mu".into(),
            min_pow: Rational::from_integer(1),
        },
    });
    let mut spec = base_spec(
        m,
        vec![
            phase([0.21, 0.35], [0.5, 0.4]),
            phase([0.61, 0.58], [-0.4, 0.3]),
        ],
        eps,
    );
    spec.params.insert("mu".into(), mu);
    spec
}

/// Unrestricted {3} (epsilon-independent after reduction).
pub fn flat_spec(eps: f64) -> IntegralSpec<2> {
    base_spec(three_molecule(), vec![phase([0.31, 0.47], [0.4, 0.1])], eps)
}

pub fn run(p: &McScalingParams, out_dir: &Path) -> Result<RunReport> {
    let start = std::time::Instant::now();
    let mut report = RunReport {
        experiment: "mc-scaling".into(),
        seed: p.seed,
        config_echo: format!(
            "epsilon_list = {:?}\nsamples = {}\nmu = {}\nslope_tol = {}\n",
            p.eps_list, p.samples, p.mu, p.slope_tol
        ),
        ..Default::default()
    };
    let d = 2.0f64;
    let mut csv_rows = Vec::new();

    let run_family = |name: &str,
                          make: &dyn Fn(f64) -> IntegralSpec<2>,
                          expected: f64,
                          tol: f64,
                          report: &mut RunReport,
                          csv_rows: &mut Vec<String>|
     -> Result<()> {
        match scaling_exponent(make, &p.eps_list, p.samples, p.seed)? {
            ScalingVerdict::Fitted(fit) => {
                for (eps, r) in &fit.points {
                    csv_rows.push(format!("{name},{}", csv_row(&make(*eps), r, p.seed)));
                }
                report.check(
                    &format!("slope-{name}"),
                    (fit.slope - expected).abs() <= tol,
                    format!(
                        "slope {:.3} +- {:.3} vs expected {expected} +- {tol}",
                        fit.slope, fit.slope_std_error
                    ),
                );
            }
            ScalingVerdict::Inconclusive { reason, points } => {
                for (eps, r) in &points {
                    csv_rows.push(format!("{name},{}", csv_row(&make(*eps), r, p.seed)));
                }
                report.inconclusive(&format!("slope-{name}"), reason);
            }
        }
        Ok(())
    };

    run_family(
        "double-root",
        &double_root_spec,
        d - 1.0,
        p.slope_tol,
        &mut report,
        &mut csv_rows,
    )?;
    let mu = p.mu;
    run_family(
        "a33-long-bond",
        &|eps| a33_long_bond_spec(eps, mu),
        d - 1.0,
        p.slope_tol,
        &mut report,
        &mut csv_rows,
    )?;
    run_family(
        "unrestricted-three",
        &flat_spec,
        0.0,
        0.2,
        &mut report,
        &mut csv_rows,
    )?;

    // the analytic envelope for the restricted {33A}
    {
        let eps = *p.eps_list.last().unwrap();
        let spec = a33_long_bond_spec(eps, p.mu);
        let r = estimate_j(&spec, p.samples / 4, p.seed ^ 0x99)?;
        let claimed = eps.powf(d - 1.0) * p.mu.powf(-d);
        let margin = (-eps.ln()).powf(3.0);
        report.check(
            "a33-estimate-below-excess-bound",
            r.value <= claimed * margin,
            format!("J = {:.3e} vs bound {:.3e} x log-margin", r.value, claimed),
        );
    }

    let csv = report.write_csv(
        out_dir,
        "mc_scaling.csv",
        "family,kind,restrictions,epsilon,estimate,stderr,samples,seed",
        &csv_rows,
    )?;
    report.write_plot_script(
        out_dir,
        "mc_scaling.gp",
        csv.file_name().unwrap().to_str().unwrap(),
        "J vs epsilon",
        true,
    )?;
    report.wall_clock_s = start.elapsed().as_secs_f64();
    Ok(report)
}
