//! The triangle-with-long-bond lemma: reduce a tall pile of triangles to a
//! short one (branching over which pile bond the separation argument
//! forces long), then carve with a modified UP that frees the triangle top
//! as the {4} and the remaining edge as a long-bond {33A} (or, with a
//! common child, a {334T} with its indicator branches).

use crate::outcome::{CutOutcome, MasterCase};
use crate::runner::Engine;

use crate::Error;
use molecule::{AtomId, Bound, ElementaryKind, ExcessTag, Molecule, Rational, Restriction};
use std::collections::BTreeSet;

/// Orients a triangle: (top, mid, bottom) with top the common parent.
fn orient_triangle(m: &Molecule, tri: [AtomId; 3]) -> Option<(AtomId, AtomId, AtomId)> {
    for &t in &tri {
        let children: Vec<AtomId> = m
            .children(t)
            .ok()?
            .into_iter()
            .filter(|c| tri.contains(c))
            .collect();
        if children.len() == 2 {
            let others: Vec<AtomId> = tri.iter().copied().filter(|&x| x != t).collect();
            let (a, b) = (others[0], others[1]);
            // mid is the parent among the remaining two
            if m.children(a).ok()?.contains(&b) {
                return Some((t, a, b));
            }
            if m.children(b).ok()?.contains(&a) {
                return Some((t, b, a));
            }
        }
    }
    None
}

/// The pile of triangles above a triangle edge: `t_{j+1}` is the common
/// parent of `t_j` and `t_{j-1}`.
fn pile_above(m: &Molecule, mid: AtomId, top: AtomId) -> Vec<AtomId> {
    let mut ladder = vec![mid, top];
    loop {
        let a = ladder[ladder.len() - 2];
        let b = ladder[ladder.len() - 1];
        let pa: BTreeSet<AtomId> = m.parents(a).unwrap_or_default().into_iter().collect();
        let pb: BTreeSet<AtomId> = m.parents(b).unwrap_or_default().into_iter().collect();
        let common: Vec<AtomId> = pa.intersection(&pb).copied().collect();
        match common.first() {
            Some(&c) => ladder.push(c),
            None => break,
        }
    }
    ladder.drain(..2);
    ladder // the m_j sequence, j = 1..r
}

/// Cuts a molecule containing the given triangle with a long bond. Errors if
/// the triangle is not pairwise bonded or carries no long-bond restriction.
pub fn triangle_longbond_cut(
    m: &Molecule,
    tri: [AtomId; 3],
    d: i64,
) -> Result<Vec<CutOutcome>, Error> {
    for (i, &a) in tri.iter().enumerate() {
        for &b in &tri[i + 1..] {
            if m.bond_multiplicity(a, b) == 0 {
                return Err(Error::Precondition(format!(
                    "atoms {a} and {b} are not bonded: not a triangle"
                )));
            }
        }
    }
    let long_bonds: BTreeSet<(AtomId, AtomId)> = m
        .restrictions
        .iter()
        .filter_map(|r| r.as_long_bond())
        .collect();
    let has_long = |a: AtomId, b: AtomId| long_bonds.contains(&(a.min(b), a.max(b)));
    let (top, mid, bot) = orient_triangle(m, tri)
        .ok_or_else(|| Error::Precondition("triangle orientation not derivable".into()))?;

    if has_long(mid, bot) {
        return carve(m, top, mid, bot, d, "triangle");
    }
    // The long bond sits on another triangle edge: |t_i - t_j| >= eps*
    // forces at least one of the two remaining edge separations to be at
    // least eps* as well (up to the factor 2 the margins absorb); branch
    // over which.
    if has_long(top, mid) || has_long(top, bot) {
        let mut outcomes = Vec::new();
        for (label, a, b) in [("tri-split/mid-bot", mid, bot), ("tri-split/top-mid", top, mid)] {
            let mut mol = m.clone();
            mol.restrictions.push(Restriction::LongBond { a, b });
            if a == mid && b == bot {
                outcomes.extend(carve(&mol, top, mid, bot, d, label)?);
            } else {
                // long bond on (top, mid): the reversed molecule turns it
                // into the (mid, bottom) edge of the reflected triangle
                let rev = mol.reversed();
                outcomes.extend(carve(&rev, bot, mid, top, d, label)?);
            }
        }
        return Ok(outcomes);
    }
    Err(Error::Precondition(
        "triangle carries no long-bond restriction".into(),
    ))
}

fn carve(
    m: &Molecule,
    top: AtomId,
    mid: AtomId,
    bot: AtomId,
    d: i64,
    label: &str,
) -> Result<Vec<CutOutcome>, Error> {
    let pile = pile_above(m, mid, top);
    let r = pile.len();
    if r > 20 {
        // branch over which pile bond the fundamental-domain displacement
        // argument makes long; the reduced triangle has r' <= 15
        let mut outcomes = Vec::new();
        for j in (r - 15)..=(r - 5) {
            // ladder indices: pile[j] exists for j < r; the new triangle is
            // (pile[j], pile[j-1], pile[j-2]) with the long bond on the two
            // lower atoms
            let t_top = pile[j];
            let t_mid = pile[j - 1];
            let t_bot = pile[j - 2];
            let mut mol = m.clone();
            mol.restrictions.push(Restriction::LongBond { a: t_mid, b: t_bot });
            let sub = carve(&mol, t_top, t_mid, t_bot, d, &format!("{label}/pile{j}"))?;
            outcomes.extend(sub);
        }
        return Ok(outcomes);
    }

    // common child of (mid, bot)?
    let cm: BTreeSet<AtomId> = m.children(mid).map_err(Error::Molecule)?.into_iter().collect();
    let cb: BTreeSet<AtomId> = m.children(bot).map_err(Error::Molecule)?.into_iter().collect();
    let common_child = cm.intersection(&cb).copied().next();

    let run = |keep_t: bool, extra_label: &str| -> Result<Engine, Error> {
        let mut engine = Engine::new(m.clone(), d);
        engine.branch.push(format!("{label}/{extra_label}"));
        // forced opening: {top} as the {4}, continuing within its
        // descendant set afterwards
        let s_n = engine.oriented_descendants(top, crate::runner::Orient::Up);
        engine.cut_singleton(top)?;
        match common_child {
            Some(n4) if keep_t => {
                engine.cut_component(&[mid, bot, n4].into())?;
            }
            _ => {
                engine.cut_component(&[mid, bot].into())?;
            }
        }
        // the pile atoms have deg 2 now; cut them in ladder order
        for &mj in &pile {
            if engine.is_alive(mj) {
                engine.cut_singleton(mj)?;
            }
        }
        let all: BTreeSet<AtomId> = m.all_atoms();
        crate::up::run_up_resuming(
            &mut engine,
            &all,
            crate::runner::Orient::Up,
            &s_n,
            crate::up::UpOptions::default(),
        )?;
        Ok(engine)
    };

    let record_33a_route = |engine: &mut Engine| -> Result<(), Error> {
        let pair: BTreeSet<AtomId> = [mid, bot].into();
        let pc = engine
            .components
            .iter()
            .position(|c| c.atoms == pair)
            .ok_or_else(|| Error::PlanFailed("triangle pair not cut".into()))?;
        if engine.components[pc].kind != Some(ElementaryKind::ThreeThreeA) {
            return Err(Error::PlanFailed(format!(
                "expected long-bond {{33A}}, got {:?}",
                engine.components[pc].kind
            )));
        }
        engine.record_excess(pc, ExcessTag::A33TimeSep(Bound::EpsStar));
        let gain = (0..engine.components.len())
            .find(|&i| {
                i != pc
                    && (engine.components[i].kind == Some(ElementaryKind::ThreeThreeA)
                        || engine.components[i].good.is_some())
            })
            .ok_or_else(|| Error::PlanFailed("no second gain after the triangle cut".into()))?;
        if engine.components[gain].good.is_none() {
            engine.mark_good(gain, ExcessTag::Good);
        }
        engine.record_excess(gain, ExcessTag::Good);
        Ok(())
    };

    match common_child {
        None => {
            // {33A} + second {33A} route
            let mut engine = run(false, "33a")?;
            record_33a_route(&mut engine)?;
            Ok(vec![engine.finish(Some(MasterCase::Three))])
        }
        Some(n4) => {
            // three indicator branches on the {4}'s severed pair (e1, e7)
            let mut outcomes = Vec::new();
            // (a) endpoint proximity: the {4} is good; split the triple
            {
                let mut engine = run(false, "proximal-good4")?;
                let four = engine
                    .components
                    .iter()
                    .position(|c| c.atoms == [top].into())
                    .ok_or_else(|| Error::PlanFailed("missing {4}".into()))?;
                engine.mark_good(four, ExcessTag::Good);
                engine.record_excess(four, ExcessTag::Good);
                let pair: BTreeSet<AtomId> = [mid, bot].into();
                let pc = engine
                    .components
                    .iter()
                    .position(|c| c.atoms == pair)
                    .ok_or_else(|| Error::PlanFailed("triangle pair not cut".into()))?;
                engine.record_excess(pc, ExcessTag::A33TimeSep(Bound::EpsStar));
                outcomes.push(engine.finish(Some(MasterCase::Three)));
            }
            // (b) separated: keep the {334T} with the triple excess
            {
                let mut engine = run(true, "334t")?;
                let triple: BTreeSet<AtomId> = [mid, bot, n4].into();
                let tc = engine
                    .components
                    .iter()
                    .position(|c| c.atoms == triple)
                    .ok_or_else(|| Error::PlanFailed("missing {334T}".into()))?;
                if engine.components[tc].kind != Some(ElementaryKind::TripleT) {
                    return Err(Error::PlanFailed(format!(
                        "expected {{334T}}, got {:?}",
                        engine.components[tc].kind
                    )));
                }
                engine.record_excess(
                    tc,
                    ExcessTag::Triple {
                        mu: Bound::EpsStar,
                        mu_prime: Bound::Eps(Rational::new(1, 8 * d)),
                    },
                );
                outcomes.push(engine.finish(Some(MasterCase::Three)));
            }
            // (c) line proximity: an integer-direction constraint makes the
            // {4} good again; split the triple
            {
                let mut engine = run(false, "lineprox-good4")?;
                let four = engine
                    .components
                    .iter()
                    .position(|c| c.atoms == [top].into())
                    .ok_or_else(|| Error::PlanFailed("missing {4}".into()))?;
                engine.mark_good(four, ExcessTag::Good);
                engine.record_excess(four, ExcessTag::Good);
                let pair: BTreeSet<AtomId> = [mid, bot].into();
                let pc = engine
                    .components
                    .iter()
                    .position(|c| c.atoms == pair)
                    .ok_or_else(|| Error::PlanFailed("triangle pair not cut".into()))?;
                engine.record_excess(pc, ExcessTag::A33TimeSep(Bound::EpsStar));
                outcomes.push(engine.finish(Some(MasterCase::Three)));
            }
            Ok(outcomes)
        }
    }
}

/// Convenience: run the lemma on the first long-bond triangle the feature
/// scan reports.
pub fn cut_first_long_bond_triangle(m: &Molecule, d: i64) -> Result<Vec<CutOutcome>, Error> {
    let feats = molecule::detect_features(m, d);
    let tri = feats
        .long_bond_triangles
        .first()
        .copied()
        .ok_or_else(|| Error::Precondition("no long-bond triangle present".into()))?;
    triangle_longbond_cut(m, tri, d)
}

