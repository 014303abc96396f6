//! Line-oriented plain-text molecule format with a versioned header, plus a
//! DOT export for visualization.
//!
//! ```text
//! molecule v1
//! atom <id> <layer>
//! bond <eid> <parent> <pslot> <child> <cslot>
//! end <eid> <atom> <slot> <top|bottom> <free|fixed>
//! serial <atom> <top0> <bot0> <top1> <bot1>
//! timeorder <id> <id> ...
//! restriction <kind> <args...>
//! ```

use crate::excess::Rational;
use crate::restriction::{Bound, Restriction, Target};
use crate::{Atom, Edge, EndDir, EndStatus, Molecule, MoleculeError, Result};
use std::fmt::Write as _;

pub fn write_molecule(m: &Molecule) -> String {
    let mut out = String::from("molecule v1\n");
    for (id, atom) in &m.atoms {
        let _ = writeln!(out, "atom {id} {}", atom.layer);
    }
    for (id, e) in &m.edges {
        match e {
            Edge::Bond {
                parent,
                p_slot,
                child,
                c_slot,
            } => {
                let _ = writeln!(out, "bond {id} {parent} {p_slot} {child} {c_slot}");
            }
            Edge::End {
                at,
                slot,
                dir,
                status,
            } => {
                let d = match dir {
                    EndDir::Top => "top",
                    EndDir::Bottom => "bottom",
                };
                let s = match status {
                    EndStatus::Free => "free",
                    EndStatus::Fixed => "fixed",
                };
                let _ = writeln!(out, "end {id} {at} {slot} {d} {s}");
            }
            Edge::Replaced { .. } => {}
        }
    }
    for (id, atom) in &m.atoms {
        let _ = writeln!(
            out,
            "serial {id} {} {} {} {}",
            atom.top[0], atom.bot[0], atom.top[1], atom.bot[1]
        );
    }
    if !m.time_order.is_empty() {
        let order: Vec<String> = m.time_order.iter().map(|a| a.to_string()).collect();
        let _ = writeln!(out, "timeorder {}", order.join(" "));
    }
    for r in &m.restrictions {
        let _ = writeln!(out, "restriction {}", restriction_to_string(r));
    }
    out
}

fn bound_to_string(b: &Bound) -> String {
    match b {
        Bound::Eps(r) => format!("eps^{}/{}", r.numer(), r.denom()),
        Bound::EpsStar => "eps*".into(),
        Bound::Dyadic { name, min_pow } => {
            format!("dyadic:{name}:{}/{}", min_pow.numer(), min_pow.denom())
        }
    }
}

fn target_to_string(t: &Target) -> String {
    match t {
        Target::Edge(e) => format!("edge:{e}"),
        Target::External(i) => format!("ext:{i}"),
    }
}

pub fn restriction_to_string(r: &Restriction) -> String {
    match r {
        Restriction::TimeSepAtLeast { a, b, bound } => {
            format!("timesep-geq {a} {b} {}", bound_to_string(bound))
        }
        Restriction::TimeSepAtMost { a, b, bound } => {
            format!("timesep-leq {a} {b} {}", bound_to_string(bound))
        }
        Restriction::PhaseProxAtMost { e1, to, bound } => {
            format!(
                "phaseprox-leq {e1} {} {}",
                target_to_string(to),
                bound_to_string(bound)
            )
        }
        Restriction::PhaseSepAtLeast { e1, to, bound } => {
            format!(
                "phasesep-geq {e1} {} {}",
                target_to_string(to),
                bound_to_string(bound)
            )
        }
        Restriction::PhaseProxBothAtMost { e1, to, bound } => {
            format!(
                "phaseboth-leq {e1} {} {}",
                target_to_string(to),
                bound_to_string(bound)
            )
        }
        Restriction::VelProxAtMost { e1, to, bound } => {
            format!(
                "velprox-leq {e1} {} {}",
                target_to_string(to),
                bound_to_string(bound)
            )
        }
        Restriction::VelSepAtLeast { e1, to, bound } => {
            format!(
                "velsep-geq {e1} {} {}",
                target_to_string(to),
                bound_to_string(bound)
            )
        }
        Restriction::DoubleRoot { e1, e2 } => format!("doubleroot {e1} {e2}"),
        Restriction::LineSepAtLeast { e1, to, bound } => {
            format!(
                "linesep-geq {e1} {} {}",
                target_to_string(to),
                bound_to_string(bound)
            )
        }
        Restriction::LineProxAtMost { e1, to, bound } => {
            format!(
                "lineprox-leq {e1} {} {}",
                target_to_string(to),
                bound_to_string(bound)
            )
        }
        Restriction::LongBond { a, b } => format!("longbond {a} {b}"),
        Restriction::StrongDegeneracy {
            n,
            n_prime,
            e,
            e_prime,
        } => format!("strongdegen {n} {n_prime} {e} {e_prime}"),
    }
}

fn parse_bound(s: &str, lineno: usize) -> Result<Bound> {
    if s == "eps*" {
        return Ok(Bound::EpsStar);
    }
    if let Some(rest) = s.strip_prefix("eps^") {
        let (n, d) = rest
            .split_once('/')
            .ok_or_else(|| MoleculeError::Parse(lineno, format!("bad bound `{s}`")))?;
        let n: i64 = n
            .parse()
            .map_err(|_| MoleculeError::Parse(lineno, format!("bad bound `{s}`")))?;
        let d: i64 = d
            .parse()
            .map_err(|_| MoleculeError::Parse(lineno, format!("bad bound `{s}`")))?;
        return Ok(Bound::Eps(Rational::new(n, d)));
    }
    if let Some(rest) = s.strip_prefix("dyadic:") {
        let mut it = rest.splitn(2, ':');
        let name = it
            .next()
            .ok_or_else(|| MoleculeError::Parse(lineno, format!("bad bound `{s}`")))?;
        let pow = it
            .next()
            .ok_or_else(|| MoleculeError::Parse(lineno, format!("bad bound `{s}`")))?;
        let (n, d) = pow
            .split_once('/')
            .ok_or_else(|| MoleculeError::Parse(lineno, format!("bad bound `{s}`")))?;
        return Ok(Bound::Dyadic {
            name: name.to_string(),
            min_pow: Rational::new(
                n.parse()
                    .map_err(|_| MoleculeError::Parse(lineno, format!("bad bound `{s}`")))?,
                d.parse()
                    .map_err(|_| MoleculeError::Parse(lineno, format!("bad bound `{s}`")))?,
            ),
        });
    }
    Err(MoleculeError::Parse(lineno, format!("bad bound `{s}`")))
}

fn parse_target(s: &str, lineno: usize) -> Result<Target> {
    if let Some(e) = s.strip_prefix("edge:") {
        return Ok(Target::Edge(e.parse().map_err(|_| {
            MoleculeError::Parse(lineno, format!("bad target `{s}`"))
        })?));
    }
    if let Some(i) = s.strip_prefix("ext:") {
        return Ok(Target::External(i.parse().map_err(|_| {
            MoleculeError::Parse(lineno, format!("bad target `{s}`"))
        })?));
    }
    Err(MoleculeError::Parse(lineno, format!("bad target `{s}`")))
}

pub fn parse_molecule(text: &str) -> Result<Molecule> {
    let mut m = Molecule::default();
    let mut saw_header = false;
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            if line != "molecule v1" {
                return Err(MoleculeError::Parse(lineno, "missing `molecule v1` header".into()));
            }
            saw_header = true;
            continue;
        }
        let toks: Vec<&str> = line.split_ascii_whitespace().collect();
        let parse_u32 = |s: &str| -> Result<u32> {
            s.parse()
                .map_err(|_| MoleculeError::Parse(lineno, format!("bad integer `{s}`")))
        };
        match toks[0] {
            "atom" => {
                let id = parse_u32(toks[1])?;
                m.atoms.insert(
                    id,
                    Atom {
                        layer: parse_u32(toks[2])?,
                        top: [u32::MAX; 2],
                        bot: [u32::MAX; 2],
                    },
                );
            }
            "bond" => {
                let id = parse_u32(toks[1])?;
                let e = Edge::Bond {
                    parent: parse_u32(toks[2])?,
                    p_slot: parse_u32(toks[3])? as u8,
                    child: parse_u32(toks[4])?,
                    c_slot: parse_u32(toks[5])? as u8,
                };
                m.edges.insert(id, e);
                m.next_edge = m.next_edge.max(id + 1);
            }
            "end" => {
                let id = parse_u32(toks[1])?;
                let dir = match toks[4] {
                    "top" => EndDir::Top,
                    "bottom" => EndDir::Bottom,
                    other => {
                        return Err(MoleculeError::Parse(lineno, format!("bad dir `{other}`")))
                    }
                };
                let status = match toks[5] {
                    "free" => EndStatus::Free,
                    "fixed" => EndStatus::Fixed,
                    other => {
                        return Err(MoleculeError::Parse(lineno, format!("bad status `{other}`")))
                    }
                };
                let e = Edge::End {
                    at: parse_u32(toks[2])?,
                    slot: parse_u32(toks[3])? as u8,
                    dir,
                    status,
                };
                m.edges.insert(id, e);
                m.next_edge = m.next_edge.max(id + 1);
            }
            "serial" => {
                let id = parse_u32(toks[1])?;
                let atom = m
                    .atoms
                    .get_mut(&id)
                    .ok_or(MoleculeError::MissingAtom(id))?;
                atom.top[0] = parse_u32(toks[2])?;
                atom.bot[0] = parse_u32(toks[3])?;
                atom.top[1] = parse_u32(toks[4])?;
                atom.bot[1] = parse_u32(toks[5])?;
            }
            "timeorder" => {
                for t in &toks[1..] {
                    m.time_order.push(parse_u32(t)?);
                }
            }
            "restriction" => {
                let r = match toks[1] {
                    "timesep-geq" => Restriction::TimeSepAtLeast {
                        a: parse_u32(toks[2])?,
                        b: parse_u32(toks[3])?,
                        bound: parse_bound(toks[4], lineno)?,
                    },
                    "timesep-leq" => Restriction::TimeSepAtMost {
                        a: parse_u32(toks[2])?,
                        b: parse_u32(toks[3])?,
                        bound: parse_bound(toks[4], lineno)?,
                    },
                    "phaseprox-leq" => Restriction::PhaseProxAtMost {
                        e1: parse_u32(toks[2])?,
                        to: parse_target(toks[3], lineno)?,
                        bound: parse_bound(toks[4], lineno)?,
                    },
                    "phasesep-geq" => Restriction::PhaseSepAtLeast {
                        e1: parse_u32(toks[2])?,
                        to: parse_target(toks[3], lineno)?,
                        bound: parse_bound(toks[4], lineno)?,
                    },
                    "phaseboth-leq" => Restriction::PhaseProxBothAtMost {
                        e1: parse_u32(toks[2])?,
                        to: parse_target(toks[3], lineno)?,
                        bound: parse_bound(toks[4], lineno)?,
                    },
                    "velprox-leq" => Restriction::VelProxAtMost {
                        e1: parse_u32(toks[2])?,
                        to: parse_target(toks[3], lineno)?,
                        bound: parse_bound(toks[4], lineno)?,
                    },
                    "velsep-geq" => Restriction::VelSepAtLeast {
                        e1: parse_u32(toks[2])?,
                        to: parse_target(toks[3], lineno)?,
                        bound: parse_bound(toks[4], lineno)?,
                    },
                    "doubleroot" => Restriction::DoubleRoot {
                        e1: parse_u32(toks[2])?,
                        e2: parse_u32(toks[3])?,
                    },
                    "linesep-geq" => Restriction::LineSepAtLeast {
                        e1: parse_u32(toks[2])?,
                        to: parse_target(toks[3], lineno)?,
                        bound: parse_bound(toks[4], lineno)?,
                    },
                    "lineprox-leq" => Restriction::LineProxAtMost {
                        e1: parse_u32(toks[2])?,
                        to: parse_target(toks[3], lineno)?,
                        bound: parse_bound(toks[4], lineno)?,
                    },
                    "longbond" => Restriction::LongBond {
                        a: parse_u32(toks[2])?,
                        b: parse_u32(toks[3])?,
                    },
                    "strongdegen" => Restriction::StrongDegeneracy {
                        n: parse_u32(toks[2])?,
                        n_prime: parse_u32(toks[3])?,
                        e: parse_u32(toks[4])?,
                        e_prime: parse_u32(toks[5])?,
                    },
                    other => {
                        return Err(MoleculeError::Parse(
                            lineno,
                            format!("unknown restriction `{other}`"),
                        ))
                    }
                };
                m.restrictions.push(r);
            }
            other => {
                return Err(MoleculeError::Parse(lineno, format!("unknown record `{other}`")))
            }
        }
    }
    let violations = m.validate();
    if !violations.is_empty() {
        return Err(MoleculeError::Invalid(violations));
    }
    Ok(m)
}

/// DOT export: atoms as nodes labelled with layer, bonds as solid arrows
/// (parent to child), ends as half-edges to point nodes.
pub fn to_dot(m: &Molecule) -> String {
    let mut out = String::from("digraph molecule {\n  rankdir=BT;\n");
    for (id, atom) in &m.atoms {
        let _ = writeln!(out, "  a{id} [label=\"{id} (l{})\" shape=diamond];", atom.layer);
    }
    for (id, e) in &m.edges {
        match e {
            Edge::Bond { parent, child, .. } => {
                let _ = writeln!(out, "  a{parent} -> a{child} [label=\"e{id}\"];");
            }
            Edge::End {
                at, dir, status, ..
            } => {
                let style = match status {
                    EndStatus::Free => "solid",
                    EndStatus::Fixed => "dashed",
                };
                let _ = writeln!(out, "  e{id} [shape=point];");
                match dir {
                    EndDir::Top => {
                        let _ = writeln!(out, "  e{id} -> a{at} [style={style} label=\"e{id}\"];");
                    }
                    EndDir::Bottom => {
                        let _ = writeln!(out, "  a{at} -> e{id} [style={style} label=\"e{id}\"];");
                    }
                }
            }
            Edge::Replaced { .. } => {}
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::HistoryBuilder;
    use proptest::prelude::*;

    #[test]
    fn round_trip_with_restrictions() {
        let mut m = HistoryBuilder::new(3)
            .collide(0, 1)
            .collide(1, 2)
            .collide(0, 2)
            .build();
        m.restrictions.push(Restriction::LongBond { a: 1, b: 2 });
        m.restrictions.push(Restriction::PhaseSepAtLeast {
            e1: 0,
            to: Target::Edge(2),
            bound: Bound::eps(15, 16),
        });
        let text = write_molecule(&m);
        let parsed = parse_molecule(&text).unwrap();
        assert_eq!(parsed.atom_count(), m.atom_count());
        assert_eq!(parsed.restrictions, m.restrictions);
        assert_eq!(parsed.time_order, m.time_order);
        assert_eq!(write_molecule(&parsed), text);
    }

    #[test]
    fn dot_export_mentions_every_atom() {
        let m = HistoryBuilder::new(3).collide(0, 1).collide(1, 2).build();
        let dot = to_dot(&m);
        assert!(dot.contains("a0") && dot.contains("a1"));
        assert!(dot.starts_with("digraph"));
    }

    #[test]
    fn header_required() {
        assert!(matches!(
            parse_molecule("atom 0 1\n"),
            Err(MoleculeError::Parse(1, _))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn round_trip_random_histories(seed in 0u64..10_000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
            let lines = rng.random_range(2usize..6);
            let n = rng.random_range(1usize..8);
            let mut b = HistoryBuilder::new(lines);
            for _ in 0..n {
                let a = rng.random_range(0..lines);
                let mut c = rng.random_range(0..lines);
                while c == a {
                    c = rng.random_range(0..lines);
                }
                b.push(a, c, 1);
            }
            let m = b.build();
            prop_assert!(m.validate().is_empty());
            let parsed = parse_molecule(&write_molecule(&m)).unwrap();
            prop_assert_eq!(write_molecule(&parsed), write_molecule(&m));
        }
    }
}
