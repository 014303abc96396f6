//! The basic cutting algorithm UP and its dual DOWN: repeatedly clear deg-2
//! atoms, pick a lowest deg-3 atom, and carve its descendant set from the
//! top, pairing adjacent deg-3 atoms into {33} components. The options
//! struct carries the small modifications the special-case proofs make
//! (forced first atom, protected atoms, preferred partners, cross-set
//! partners).

use crate::outcome::CutOutcome;
use crate::runner::{Engine, Orient};
use crate::Error;
use molecule::{AtomId, Molecule};
use std::collections::BTreeSet;

#[derive(Debug, Clone, Default)]
pub struct UpOptions {
    /// Force this atom as the first step-2 choice.
    pub first: Option<AtomId>,
    /// Atoms excluded from the step-2/step-3 selections (they are still cut
    /// as pair partners, or swept at the end if the plan failed).
    pub avoid_select: BTreeSet<AtomId>,
    /// Pair partners to prefer, in priority order.
    pub prefer_partner: Vec<AtomId>,
    /// Additional pair-partner candidates outside `within`.
    pub extra_partners: BTreeSet<AtomId>,
    /// Restrict the {33}-pair rule to the extra partner set (the TRANS
    /// algorithms pair only against X_0^±).
    pub pair_only_with_extras: bool,
}

/// Runs UP (or DOWN) on the alive atoms of `within`, mutating the engine.
/// The working set is tracked locally so selection costs scale with the
/// degree fronts, not the molecule.
pub fn run_up(
    engine: &mut Engine,
    within: &BTreeSet<AtomId>,
    orient: Orient,
    mut opts: UpOptions,
) -> Result<(), Error> {
    // local selection queues over within, keyed by time position; entries
    // are validated lazily on pop and refreshed from the engine's
    // degree-change events
    let mut remaining: BTreeSet<(usize, AtomId)> = within
        .iter()
        .filter(|&&a| engine.is_alive(a))
        .map(|&a| (engine.position(a), a))
        .collect();
    let mut deg2q: BTreeSet<(usize, AtomId)> = remaining
        .iter()
        .copied()
        .filter(|&(_, a)| engine.deg(a) == 2)
        .collect();
    let mut deg3q: BTreeSet<(usize, AtomId)> = remaining
        .iter()
        .copied()
        .filter(|&(_, a)| engine.deg(a) == 3)
        .collect();
    engine.drain_dirty();
    let refresh = |engine: &mut Engine,
                   deg2q: &mut BTreeSet<(usize, AtomId)>,
                   deg3q: &mut BTreeSet<(usize, AtomId)>| {
        for a in engine.drain_dirty() {
            if within.contains(&a) && engine.is_alive(a) {
                let key = (engine.position(a), a);
                match engine.deg(a) {
                    2 => {
                        deg2q.insert(key);
                        deg3q.remove(&key);
                    }
                    3 => {
                        deg3q.insert(key);
                    }
                    _ => {}
                }
            }
        }
    };
    let pop = |engine: &Engine,
               q: &mut BTreeSet<(usize, AtomId)>,
               want: usize,
               orient: Orient,
               avoid: &BTreeSet<AtomId>|
     -> Option<AtomId> {
        loop {
            let key = match orient {
                Orient::Up => q.iter().next().copied(),
                Orient::Down => q.iter().next_back().copied(),
            }?;
            if engine.is_alive(key.1) && engine.deg(key.1) == want {
                if avoid.contains(&key.1) {
                    // skip without consuming (it may become a partner)
                    let alt = match orient {
                        Orient::Up => q.range((
                            std::ops::Bound::Excluded(key),
                            std::ops::Bound::Unbounded,
                        ))
                        .find(|&&(_, a)| {
                            engine.is_alive(a) && engine.deg(a) == want && !avoid.contains(&a)
                        }),
                        Orient::Down => q
                            .range((
                                std::ops::Bound::Unbounded,
                                std::ops::Bound::Excluded(key),
                            ))
                            .rev()
                            .find(|&&(_, a)| {
                                engine.is_alive(a) && engine.deg(a) == want && !avoid.contains(&a)
                            }),
                    };
                    return alt.map(|&(_, a)| a);
                }
                return Some(key.1);
            }
            q.remove(&key);
        }
    };
    loop {
        refresh(engine, &mut deg2q, &mut deg3q);
        // step 1: deg-2 cleanup
        while let Some(a) = pop(engine, &mut deg2q, 2, orient, &opts.avoid_select) {
            engine.cut_singleton(a)?;
            deg2q.remove(&(engine.position(a), a));
            remaining.remove(&(engine.position(a), a));
            refresh(engine, &mut deg2q, &mut deg3q);
        }
        // lazy emptiness check on the remaining set
        loop {
            let Some(&key) = (match orient {
                Orient::Up => remaining.iter().next(),
                Orient::Down => remaining.iter().next_back(),
            }) else {
                break;
            };
            if engine.is_alive(key.1) {
                break;
            }
            remaining.remove(&key);
        }
        if remaining.is_empty() {
            return Ok(());
        }
        // step 2: lowest deg-3 atom (or lowest atom if only deg-4 remain)
        let n = if let Some(first) = opts.first.take() {
            first
        } else if let Some(n) = pop(engine, &mut deg3q, 3, orient, &opts.avoid_select) {
            n
        } else {
            let any = match orient {
                Orient::Up => remaining
                    .iter()
                    .find(|(_, a)| engine.is_alive(*a) && !opts.avoid_select.contains(a)),
                Orient::Down => remaining
                    .iter()
                    .rev()
                    .find(|(_, a)| engine.is_alive(*a) && !opts.avoid_select.contains(a)),
            };
            match any {
                Some(&(_, n)) => n,
                None => {
                    // plan exhausted except protected atoms: sweep
                    let leftovers: Vec<AtomId> = remaining
                        .iter()
                        .map(|&(_, a)| a)
                        .filter(|&a| engine.is_alive(a))
                        .collect();
                    for a in leftovers {
                        if engine.is_alive(a) {
                            engine.cut_singleton(a)?;
                        }
                    }
                    return Ok(());
                }
            }
        };
        // step 3: carve S_n from the top
        let s_n = engine.oriented_descendants(n, orient);
        descend(engine, within, orient, &s_n, &opts)?;
        for a in &s_n {
            remaining.remove(&(engine.position(*a), *a));
        }
    }
}

/// The step-3 inner loop: carve the descendant set from the top, pairing
/// deg-3 atoms per the {33} rule.
pub(crate) fn descend(
    engine: &mut Engine,
    within: &BTreeSet<AtomId>,
    orient: Orient,
    s_n: &BTreeSet<AtomId>,
    opts: &UpOptions,
) -> Result<(), Error> {
    loop {
        let candidates: BTreeSet<AtomId> = s_n
            .iter()
            .copied()
            .filter(|a| {
                within.contains(a) && engine.is_alive(*a) && !opts.avoid_select.contains(a)
            })
            .collect();
        let Some(m) = engine.extreme_high(&candidates, orient) else {
            return Ok(());
        };
        if engine.deg(m) == 3 {
            if let Some(p) = pick_partner(engine, m, within, orient, opts) {
                engine.cut_component(&[m, p].into())?;
                continue;
            }
        }
        engine.cut_singleton(m)?;
    }
}

/// Resumes a run whose opening cuts already consumed part of a descent set
/// (the double-bond and triangle variants): finish carving `initial_s`,
/// then continue with the standard loop.
pub fn run_up_resuming(
    engine: &mut Engine,
    within: &BTreeSet<AtomId>,
    orient: Orient,
    initial_s: &BTreeSet<AtomId>,
    opts: UpOptions,
) -> Result<(), Error> {
    descend(engine, within, orient, initial_s, &opts)?;
    run_up(engine, within, orient, opts)
}

/// Partner selection for the {33} pair rule: a deg-3 atom joined to `m` by
/// exactly one bond, preferring the explicit preference list, then parents,
/// then children (each in min-id order), then the extra partner set.
fn pick_partner(
    engine: &Engine,
    m: AtomId,
    within: &BTreeSet<AtomId>,
    orient: Orient,
    opts: &UpOptions,
) -> Option<AtomId> {
    let eligible = |p: AtomId| -> bool {
        engine.is_alive(p)
            && engine.deg(p) == 3
            && engine.molecule().bond_multiplicity(m, p) == 1
            && if opts.pair_only_with_extras {
                opts.extra_partners.contains(&p)
            } else {
                within.contains(&p)
                    || opts.extra_partners.contains(&p)
                    || opts.prefer_partner.contains(&p)
            }
    };
    if !opts.pair_only_with_extras {
        for &p in &opts.prefer_partner {
            if p != m && engine.molecule().bond_multiplicity(m, p) >= 1 && eligible(p) {
                return Some(p);
            }
        }
    }
    let mut parents = engine.oriented_parents(m, orient);
    parents.sort_unstable();
    parents.dedup();
    for p in parents {
        if eligible(p) {
            return Some(p);
        }
    }
    let mut children = engine.oriented_children(m, orient);
    children.sort_unstable();
    children.dedup();
    for c in children {
        if eligible(c) {
            return Some(c);
        }
    }
    None
}

/// Runs UP per connected component (in min-atom-id order) of the given set.
pub fn run_up_componentwise(
    engine: &mut Engine,
    set: &BTreeSet<AtomId>,
    orient: Orient,
) -> Result<(), Error> {
    let alive: BTreeSet<AtomId> = set
        .iter()
        .copied()
        .filter(|&a| engine.is_alive(a))
        .collect();
    if alive.is_empty() {
        return Ok(());
    }
    let mut comps = engine.molecule().components(&alive);
    comps.sort_by_key(|c| *c.iter().next().unwrap());
    for comp in comps {
        let live: BTreeSet<AtomId> = comp
            .iter()
            .copied()
            .filter(|&a| engine.is_alive(a))
            .collect();
        if !live.is_empty() {
            run_up(engine, &live, orient, UpOptions::default())?;
        }
    }
    Ok(())
}

/// The public algorithm UP on a molecule with no top fixed end.
pub fn algorithm_up(m: &Molecule, d: i64) -> Result<CutOutcome, Error> {
    algorithm_oriented(m, d, Orient::Up)
}

/// The dual algorithm DOWN (no bottom fixed end).
pub fn algorithm_down(m: &Molecule, d: i64) -> Result<CutOutcome, Error> {
    algorithm_oriented(m, d, Orient::Down)
}

fn algorithm_oriented(m: &Molecule, d: i64, orient: Orient) -> Result<CutOutcome, Error> {
    let bad = match orient {
        Orient::Up => m.has_top_fixed_end(),
        Orient::Down => m.has_bottom_fixed_end(),
    };
    if bad {
        return Err(Error::Precondition(format!(
            "{:?} requires no {} fixed end",
            orient,
            if orient == Orient::Up { "top" } else { "bottom" }
        )));
    }
    let mut engine = Engine::new(m.clone(), d);
    let all = engine.molecule().all_atoms();
    run_up_componentwise(&mut engine, &all, orient)?;
    Ok(engine.finish(None))
}

/// Contract of the UP proposition, checked by the campaigns: everything
/// elementary; no {33B}/{44}; at most one {4}, exactly one iff the input is
/// full (per connected component); tree inputs with at most one deg-3 atom
/// yield only a {4} plus {3}s; inputs with no deg-2 atom and a cycle or two
/// deg-3 atoms yield a {33A} or a good component.
pub fn check_up_contract(input: &Molecule, out: &CutOutcome) -> Result<(), String> {
    out.validate(input)?;
    if out.counters.b33 != 0 || out.counters.ff44 != 0 {
        return Err(format!(
            "UP must not produce {{33B}}/{{44}} (got {} / {})",
            out.counters.b33, out.counters.ff44
        ));
    }
    let comps = input.components(&input.all_atoms()).len();
    let expected_fours = if input.is_full() { comps } else { 0 };
    if input.is_full() && comps == 1 && out.counters.four != 1 {
        return Err(format!(
            "UP on a full connected molecule must produce exactly one {{4}} (got {})",
            out.counters.four
        ));
    }
    if !input.is_full() && comps == 1 && out.counters.four != 0 {
        return Err("UP on a non-full connected molecule must produce no {4}".into());
    }
    let _ = expected_fours;
    let degs: Vec<usize> = input
        .atom_ids()
        .map(|a| input.degree(a).unwrap())
        .collect();
    let no_deg2 = degs.iter().all(|&d| d != 2);
    let deg3s = degs.iter().filter(|&&d| d == 3).count();
    let has_cycle = input.rho(&input.all_atoms()) > 0;
    if comps == 1 && no_deg2 && (has_cycle || deg3s >= 2) {
        let has_gain = out.counters.a33 > 0
            || out.components.iter().any(|c| c.good.is_some());
        if !has_gain {
            return Err("UP guarantee: expected a {33A} or good component".into());
        }
    }
    if comps == 1 && no_deg2 && deg3s <= 1 && !has_cycle {
        // tree: only {4} + {3}s
        if out.counters.two != 0
            || out.counters.a33 != 0
            || out.counters.triple_a != 0
            || out.counters.triple_t != 0
        {
            return Err("UP on a proper tree must produce only {4} and {3} components".into());
        }
    }
    Ok(())
}
