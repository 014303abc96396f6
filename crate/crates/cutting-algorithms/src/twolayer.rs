//! The two-layer procedure: a molecule split into an upper and a lower part
//! with every cross bond a long bond. The dispatcher finds a long-bond
//! {33A} (or a {333A}/{334T} extension) when some side has no canonical
//! cycle, and otherwise harvests separated {33A} gains from both cluster
//! sets, down to the terminal six-particle-line configuration.

use crate::outcome::CutOutcome;
use crate::runner::{Engine, Orient};
use crate::up::{run_up, run_up_componentwise, UpOptions};
use crate::Error;
use molecule::{
    AtomId, Bound, EdgeId, ElementaryKind, ExcessTag, Molecule, Rational, Restriction,
};
use std::collections::{BTreeMap, BTreeSet};

/// The derived objects of the two-cluster decomposition.
#[derive(Debug, Clone)]
pub struct TwoLayerData {
    pub upper: BTreeSet<AtomId>,
    pub lower: BTreeSet<AtomId>,
    pub m0: AtomId,
    pub n0: AtomId,
    /// the two particle lines through `m0`
    pub p_lines: (usize, usize),
    pub p_sets: (BTreeSet<usize>, BTreeSet<usize>),
    pub a_sets: (BTreeSet<AtomId>, BTreeSet<AtomId>),
    pub m_plus: (Option<AtomId>, Option<AtomId>),
    pub n_minus: (Option<AtomId>, Option<AtomId>),
    pub atom_lines: BTreeMap<AtomId, (usize, usize)>,
    pub line_count: usize,
}

/// The two particle lines through each atom, as indices into
/// `particle_lines()`.
pub fn atom_line_map(m: &Molecule) -> Result<BTreeMap<AtomId, (usize, usize)>, Error> {
    let lines = m.particle_lines().map_err(Error::Molecule)?;
    let mut edge_line: BTreeMap<EdgeId, usize> = BTreeMap::new();
    for (i, line) in lines.iter().enumerate() {
        for &e in line {
            edge_line.insert(e, i);
        }
    }
    let mut out = BTreeMap::new();
    for a in m.atom_ids() {
        let slots = m.slots(a).map_err(Error::Molecule)?;
        let l0 = edge_line[&slots[0]];
        let l1 = edge_line[&slots[1]];
        out.insert(a, (l0, l1));
    }
    Ok(out)
}

impl TwoLayerData {
    /// Derives the decomposition, validating the two-layer invariants. The
    /// highest lower atom may be overridden (the dual derivation needs it).
    pub fn derive(
        m: &Molecule,
        upper: &BTreeSet<AtomId>,
        m0_override: Option<AtomId>,
    ) -> Result<Self, Error> {
        let all = m.all_atoms();
        if !upper.is_subset(&all) || upper.is_empty() || upper.len() == all.len() {
            return Err(Error::Precondition("upper set must be a proper subset".into()));
        }
        let lower: BTreeSet<AtomId> = all.difference(upper).copied().collect();
        // (1) no lower atom is a parent of an upper atom
        for &u in upper {
            for parent_of_u in m.parents(u).map_err(Error::Molecule)? {
                if lower.contains(&parent_of_u) {
                    return Err(Error::Precondition(
                        "a lower atom is a parent of an upper atom".into(),
                    ));
                }
            }
        }
        if m.components(upper).len() != 1 || m.components(&lower).len() != 1 {
            return Err(Error::Precondition("both layers must be connected".into()));
        }
        // (2) every particle line meets both layers
        let atom_lines = atom_line_map(m)?;
        let line_count = m.particle_lines().map_err(Error::Molecule)?.len();
        let mut in_upper = vec![false; line_count];
        let mut in_lower = vec![false; line_count];
        for (&a, &(l0, l1)) in &atom_lines {
            let dest = if upper.contains(&a) {
                &mut in_upper
            } else {
                &mut in_lower
            };
            dest[l0] = true;
            dest[l1] = true;
        }
        if !(0..line_count).all(|l| in_upper[l] && in_lower[l]) {
            return Err(Error::Precondition(
                "every particle line must intersect both layers".into(),
            ));
        }
        // (3) every cross bond carries the long-bond restriction
        let long_bonds: BTreeSet<(AtomId, AtomId)> = m
            .restrictions
            .iter()
            .filter_map(|r| r.as_long_bond())
            .collect();
        for (_, e) in m.edges_iter() {
            if let molecule::Edge::Bond { parent, child, .. } = e {
                let cross = upper.contains(parent) != upper.contains(child);
                if cross {
                    let key = (*parent.min(child), *parent.max(child));
                    if !long_bonds.contains(&key) {
                        return Err(Error::Precondition(format!(
                            "cross bond ({parent},{child}) lacks a long-bond restriction"
                        )));
                    }
                }
            }
        }

        let order = m.effective_time_order();
        let pos: BTreeMap<AtomId, usize> =
            order.iter().enumerate().map(|(i, &a)| (a, i)).collect();
        let m0 = match m0_override {
            Some(a) => {
                if !lower.contains(&a)
                    || m.parents(a)
                        .map_err(Error::Molecule)?
                        .iter()
                        .any(|p| lower.contains(p))
                {
                    return Err(Error::Precondition(
                        "m0 override must be a lower atom with no lower parent".into(),
                    ));
                }
                a
            }
            None => *lower.iter().max_by_key(|a| pos[a]).expect("lower nonempty"),
        };
        let (p1, p2) = atom_lines[&m0];

        // cluster evolution over upper atoms in time order
        let mut uf: Vec<usize> = (0..line_count).collect();
        fn find(uf: &mut Vec<usize>, a: usize) -> usize {
            if uf[a] != a {
                let r = find(uf, uf[a]);
                uf[a] = r;
            }
            uf[a]
        }
        let mut n0 = None;
        let mut pre_uf: Vec<usize> = uf.clone();
        for &a in &order {
            if !upper.contains(&a) {
                continue;
            }
            let (l0, l1) = atom_lines[&a];
            let snapshot = uf.clone();
            let r0 = find(&mut uf, l0);
            let r1 = find(&mut uf, l1);
            if r0 != r1 {
                uf[r0] = r1;
            }
            if find(&mut uf, p1) == find(&mut uf, p2) {
                n0 = Some(a);
                pre_uf = snapshot;
                break;
            }
        }
        let n0 = n0.ok_or_else(|| {
            Error::Precondition("the two lines of m0 never join in the upper layer".into())
        })?;
        let mut pre = pre_uf;
        let c1 = find(&mut pre, p1);
        let c2 = find(&mut pre, p2);
        let mut p_set_1 = BTreeSet::new();
        let mut p_set_2 = BTreeSet::new();
        for l in 0..line_count {
            let c = find(&mut pre, l);
            if c == c1 {
                p_set_1.insert(l);
            } else if c == c2 {
                p_set_2.insert(l);
            }
        }
        let before_n0 = |a: AtomId| -> bool { upper.contains(&a) && pos[&a] < pos[&n0] };
        let atoms_of = |ps: &BTreeSet<usize>| -> BTreeSet<AtomId> {
            atom_lines
                .iter()
                .filter(|(a, (l0, l1))| before_n0(**a) && (ps.contains(l0) || ps.contains(l1)))
                .map(|(&a, _)| a)
                .collect()
        };
        let a1 = atoms_of(&p_set_1);
        let a2 = atoms_of(&p_set_2);

        // m_j^+ = m0's parent along p_j when it lies in A_j
        let parent_along = |line: usize| -> Option<AtomId> {
            let slots = m.slots(m0).ok()?;
            let (l0, _l1) = atom_lines[&m0];
            for (k, &e) in slots[..2].iter().enumerate() {
                let this_line = if k == 0 { l0 } else { atom_lines[&m0].1 };
                if this_line == line {
                    if let Ok(molecule::Edge::Bond { parent, .. }) = m.edge(e) {
                        return Some(*parent);
                    }
                }
            }
            None
        };
        let m1p = parent_along(p1).filter(|a| a1.contains(a));
        let m2p = parent_along(p2).filter(|a| a2.contains(a));
        // n_j^- = n0's child along its line in P_j
        let child_along_in = |ps: &BTreeSet<usize>, aset: &BTreeSet<AtomId>| -> Option<AtomId> {
            let slots = m.slots(n0).ok()?;
            let (l0, l1) = atom_lines[&n0];
            for (k, &e) in slots[2..].iter().enumerate() {
                let this_line = if k == 0 { l0 } else { l1 };
                if ps.contains(&this_line) {
                    if let Ok(molecule::Edge::Bond { child, .. }) = m.edge(e) {
                        if aset.contains(child) {
                            return Some(*child);
                        }
                    }
                }
            }
            None
        };
        let n1m = child_along_in(&p_set_1, &a1);
        let n2m = child_along_in(&p_set_2, &a2);

        Ok(TwoLayerData {
            upper: upper.clone(),
            lower,
            m0,
            n0,
            p_lines: (p1, p2),
            p_sets: (p_set_1, p_set_2),
            a_sets: (a1, a2),
            m_plus: (m1p, m2p),
            n_minus: (n1m, n2m),
            atom_lines,
            line_count,
        })
    }

    fn swapped(mut self) -> Self {
        std::mem::swap(&mut self.p_sets.0, &mut self.p_sets.1);
        std::mem::swap(&mut self.a_sets.0, &mut self.a_sets.1);
        self.p_lines = (self.p_lines.1, self.p_lines.0);
        self.m_plus = (self.m_plus.1, self.m_plus.0);
        self.n_minus = (self.n_minus.1, self.n_minus.0);
        self
    }
}

/// Attaches the long-bond restrictions every upper-lower bond must carry.
pub fn insert_ud_long_bonds(m: &mut Molecule, upper: &BTreeSet<AtomId>) {
    let mut add: Vec<(AtomId, AtomId)> = Vec::new();
    for (_, e) in m.edges_iter() {
        if let molecule::Edge::Bond { parent, child, .. } = e {
            if upper.contains(parent) != upper.contains(child) {
                add.push((*parent, *child));
            }
        }
    }
    for (a, b) in add {
        m.restrictions.push(Restriction::LongBond { a, b });
    }
}

/// Does `set` contain two internally-vertex-disjoint ancestor paths from
/// `bottom` to a common top atom (a canonical cycle with that bottom)?
pub fn has_canonical_cycle(m: &Molecule, set: &BTreeSet<AtomId>, bottom: AtomId) -> bool {
    canonical_cycle(m, set, bottom).is_some()
}

/// Finds a canonical cycle with the given bottom atom, returning its atom
/// set (both paths, endpoints included).
pub fn canonical_cycle(
    m: &Molecule,
    set: &BTreeSet<AtomId>,
    bottom: AtomId,
) -> Option<BTreeSet<AtomId>> {
    if !set.contains(&bottom) {
        return None;
    }
    for &top in set.iter() {
        if top == bottom {
            continue;
        }
        if let Some(cycle) = two_disjoint_ancestor_paths(m, set, bottom, top) {
            return Some(cycle);
        }
    }
    None
}

/// Two internally-vertex-disjoint parent-paths bottom -> top within `set`:
/// unit-vertex-capacity max flow limited to two augmentations.
pub fn two_disjoint_ancestor_paths(
    m: &Molecule,
    set: &BTreeSet<AtomId>,
    bottom: AtomId,
    top: AtomId,
) -> Option<BTreeSet<AtomId>> {
    if !set.contains(&bottom) || !set.contains(&top) || bottom == top {
        return None;
    }
    let nodes: Vec<AtomId> = set.iter().copied().collect();
    let index: BTreeMap<AtomId, usize> =
        nodes.iter().enumerate().map(|(i, &a)| (a, i)).collect();
    let n = nodes.len();
    // vertex split: in = 2k, out = 2k+1
    let mut arcs: Vec<(usize, usize, i32)> = Vec::new();
    for (k, &a) in nodes.iter().enumerate() {
        let c = if a == bottom || a == top { 2 } else { 1 };
        arcs.push((2 * k, 2 * k + 1, c));
        for p in m.parents(a).unwrap_or_default() {
            if let Some(&pk) = index.get(&p) {
                arcs.push((2 * k + 1, 2 * pk, 1));
            }
        }
    }
    let source = 2 * index[&bottom];
    let sink = 2 * index[&top] + 1;
    // residual arc list: forward/backward interleaved
    let mut heads: Vec<usize> = Vec::new();
    let mut caps: Vec<i32> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); 2 * n];
    for &(u, v, c) in &arcs {
        adj[u].push(heads.len());
        heads.push(v);
        caps.push(c);
        adj[v].push(heads.len());
        heads.push(u);
        caps.push(0);
    }
    let mut flow = 0;
    let mut flow_arcs: BTreeSet<usize> = BTreeSet::new();
    for _ in 0..2 {
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; 2 * n]; // (node, arc)
        let mut seen = vec![false; 2 * n];
        seen[source] = true;
        let mut queue = std::collections::VecDeque::from([source]);
        'bfs: while let Some(u) = queue.pop_front() {
            for &ai in &adj[u] {
                let v = heads[ai];
                if caps[ai] > 0 && !seen[v] {
                    seen[v] = true;
                    prev[v] = Some((u, ai));
                    if v == sink {
                        break 'bfs;
                    }
                    queue.push_back(v);
                }
            }
        }
        if !seen[sink] {
            break;
        }
        let mut v = sink;
        while v != source {
            let (u, ai) = prev[v].unwrap();
            caps[ai] -= 1;
            caps[ai ^ 1] += 1;
            if ai % 2 == 0 {
                flow_arcs.insert(ai);
            } else {
                flow_arcs.remove(&(ai - 1));
            }
            v = u;
        }
        flow += 1;
    }
    if flow < 2 {
        return None;
    }
    // atoms used by the final flow
    let mut used: BTreeSet<AtomId> = [bottom, top].into();
    for ai in flow_arcs {
        let (u, v, _) = arcs[ai / 2];
        used.insert(nodes[u / 2]);
        used.insert(nodes[v / 2]);
    }
    Some(used)
}

/// The two-layer dispatcher (dimension defaults to 3, the harder case).
pub fn two_layer_cut(m: &Molecule, data: &TwoLayerData) -> Result<Vec<CutOutcome>, Error> {
    two_layer_cut_dim(m, data, 3)
}

pub fn two_layer_cut_dim(
    m: &Molecule,
    data: &TwoLayerData,
    d: i64,
) -> Result<Vec<CutOutcome>, Error> {
    let feats = molecule::detect_features(m, d);
    if !feats.double_bonds.is_empty() {
        return Err(Error::Precondition(
            "two-layer input must have no double bond".into(),
        ));
    }
    if !feats.long_bond_triangles.is_empty() {
        return Err(Error::Precondition(
            "triangles with long bonds are handled by the triangle lemma".into(),
        ));
    }
    if !feats.strong_degenerate_primitive.is_empty() {
        return Err(Error::Precondition(
            "strongly degenerate primitive pairs are handled upstream".into(),
        ));
    }

    let cc1 = data
        .m_plus
        .0
        .map(|mp| has_canonical_cycle(m, &data.a_sets.0, mp))
        .unwrap_or(false);
    let cc2 = data
        .m_plus
        .1
        .map(|mp| has_canonical_cycle(m, &data.a_sets.1, mp))
        .unwrap_or(false);

    if data.a_sets.0.is_empty() || !cc1 {
        return newcase_one(m, data.clone(), d);
    }
    if data.a_sets.1.is_empty() || !cc2 {
        return newcase_one(m, data.clone().swapped(), d);
    }
    newcase_two(m, data, d)
}

/// Locates the sealed component holding exactly this atom set.
fn component_with_atoms(engine: &Engine, atoms: &BTreeSet<AtomId>) -> Option<usize> {
    engine.components.iter().position(|c| &c.atoms == atoms)
}

/// Resolves the fixed ends of a sealed component to the earlier components
/// carrying their paired free ends.
fn fixed_end_homes(engine: &Engine, comp: usize) -> Vec<(EdgeId, usize)> {
    let atoms = engine.components[comp].atoms.clone();
    let mol = engine.molecule();
    let mut out = Vec::new();
    for (id, e) in mol.edges_iter() {
        if let molecule::Edge::End {
            at,
            status: molecule::EndStatus::Fixed,
            ..
        } = e
        {
            if atoms.contains(at) {
                if let Some(home) = engine.component_of_fixed_end(id) {
                    out.push((id, home));
                }
            }
        }
    }
    out
}

/// Records the matched-end excess pair for a {33A}: the component gets
/// `eps * mu^{-1}` and the later of its two end-homes gets `mu` (a fresh
/// dyadic parameter; the two cancel in the product leaving exactly `eps`).
fn record_matched_33a(engine: &mut Engine, comp: usize, mu_name: &str) -> Result<(), Error> {
    let homes = fixed_end_homes(engine, comp);
    if homes.len() != 2 {
        return Err(Error::PlanFailed(format!(
            "matched-end {{33A}} needs 2 resolved fixed ends, found {}",
            homes.len()
        )));
    }
    let mu = Bound::Dyadic {
        name: mu_name.to_string(),
        min_pow: Rational::from_integer(1),
    };
    engine.record_excess(comp, ExcessTag::A33Separation(mu.clone()));
    let later = homes.iter().map(|&(_, h)| h).max().unwrap();
    engine.record_excess(later, ExcessTag::Lambda(mu));
    Ok(())
}

fn first_33a_from(engine: &Engine, from: usize) -> Option<usize> {
    (from..engine.components.len())
        .find(|&i| engine.components[i].kind == Some(ElementaryKind::ThreeThreeA))
}

fn first_gain_from(engine: &Engine, from: usize, exclude: usize) -> Option<usize> {
    (from..engine.components.len()).find(|&i| {
        i != exclude
            && (engine.components[i].kind == Some(ElementaryKind::ThreeThreeA)
                || engine.components[i].good.is_some())
    })
}

/// The no-canonical-cycle side: the long-bond {33A} `{m_1^+ (or n_0), m_0}`
/// plus a second gaining component, or the {333A} extension with its
/// indicator branches.
fn newcase_one(m: &Molecule, data: TwoLayerData, d: i64) -> Result<Vec<CutOutcome>, Error> {
    let pair_hi = data.m_plus.0.unwrap_or(data.n0);
    let start = data.m_plus.1.unwrap_or(data.n0);
    if start == pair_hi {
        return Err(Error::PlanFailed(
            "degenerate two-layer data: both roles fall on one atom".into(),
        ));
    }
    let mut b: BTreeSet<AtomId> = data.a_sets.0.union(&data.a_sets.1).copied().collect();
    b.insert(data.m0);
    b.insert(data.n0);

    let pair_set: BTreeSet<AtomId> = [pair_hi, data.m0].into();
    let mut case2_p = None;
    let mut case3_p = None;
    for a in m.atom_ids() {
        if b.contains(&a) {
            continue;
        }
        let nb: BTreeSet<AtomId> = m
            .neighbours(a)
            .map_err(Error::Molecule)?
            .into_iter()
            .filter(|x| b.contains(x))
            .collect();
        if nb.len() < 2 {
            continue;
        }
        let in_pair = nb.intersection(&pair_set).count();
        if in_pair == 0 && case2_p.is_none() {
            case2_p = Some(a);
        } else if in_pair == 1 && case3_p.is_none() {
            case3_p = Some(a);
        }
    }

    if case2_p.is_some() || case3_p.is_none() {
        let label = if case2_p.is_some() {
            "newcase1/case2"
        } else {
            "newcase1/case1"
        };
        let out = run_newcase1_plan(m, &data, d, &b, start, pair_hi, case2_p, None, label)?;
        return Ok(vec![out]);
    }

    // Case 3: probe whether the triple forms
    let p = case3_p.unwrap();
    let probe = run_newcase1_plan(
        m,
        &data,
        d,
        &b,
        start,
        pair_hi,
        Some(p),
        Some(p),
        "newcase1/case3",
    );
    match probe {
        Ok(out) => {
            let has_triple = out
                .components
                .iter()
                .any(|c| c.kind == Some(ElementaryKind::TripleA));
            if !has_triple {
                // Case 3.1: already a two-{33A} certificate
                return Ok(vec![out]);
            }
            // Case 3.2: indicator branches
            let mut outcomes = vec![out]; // 3.2.1: the separated branch keeps the triple
            for label in ["newcase1/case3.2.2", "newcase1/case3.2.3"] {
                outcomes.push(run_split_branch(m, &data, d, &b, start, pair_hi, p, label)?);
            }
            Ok(outcomes)
        }
        Err(e) => Err(e),
    }
}

/// One run of the modified UP plan over B (plus the optional witness atom).
#[allow(clippy::too_many_arguments)]
fn run_newcase1_plan(
    m: &Molecule,
    data: &TwoLayerData,
    d: i64,
    b: &BTreeSet<AtomId>,
    start: AtomId,
    pair_hi: AtomId,
    extra: Option<AtomId>,
    triple_with: Option<AtomId>,
    label: &str,
) -> Result<CutOutcome, Error> {
    let mut engine = Engine::new(m.clone(), d);
    engine.branch.push(label.to_string());
    let mut cut_set = b.clone();
    if let Some(p) = extra {
        cut_set.insert(p);
    }
    engine.cut_zone(&cut_set)?;
    let mut avoid: BTreeSet<AtomId> = [data.m0].into();
    let mut prefer = vec![data.m0];
    if let Some(p) = extra {
        avoid.insert(p);
        prefer.push(p);
    }
    modified_up(
        &mut engine,
        &cut_set,
        start,
        &avoid,
        &prefer,
        (pair_hi, data.m0),
        triple_with,
    )?;
    let pair_set: BTreeSet<AtomId> = [pair_hi, data.m0].into();
    let pair_comp = component_with_atoms(&engine, &pair_set);
    let triple_comp = engine.components.iter().position(|c| {
        c.atoms.contains(&pair_hi) && c.atoms.contains(&data.m0) && c.atoms.len() == 3
    });
    finish_layers(&mut engine, data)?;
    match (pair_comp, triple_comp) {
        (Some(pc), _) => {
            if engine.components[pc].kind != Some(ElementaryKind::ThreeThreeA) {
                return Err(Error::PlanFailed(format!(
                    "expected a {{33A}} at the long-bond pair, got {:?}",
                    engine.components[pc].kind
                )));
            }
            engine.record_excess(pc, ExcessTag::A33TimeSep(Bound::EpsStar));
            let gain = first_gain_from(&engine, 0, pc).ok_or_else(|| {
                Error::PlanFailed("no second gaining component materialized".into())
            })?;
            if engine.components[gain].good.is_none() {
                engine.mark_good(gain, ExcessTag::Good);
            }
            engine.record_excess(gain, ExcessTag::Good);
        }
        (None, Some(tc)) => {
            if engine.components[tc].kind != Some(ElementaryKind::TripleA) {
                return Err(Error::PlanFailed(format!(
                    "expected a {{333A}}, got {:?}",
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
        }
        (None, None) => {
            return Err(Error::PlanFailed(
                "the long-bond pair was not cut as a component".into(),
            ))
        }
    }
    Ok(engine.finish(Some(crate::outcome::MasterCase::Three)))
}

/// Case 3.2.2/3.2.3: the triple is split into the long-bond {33A} plus a
/// {2}; the proximity indicator grants the extra gain through the matched
/// free ends.
#[allow(clippy::too_many_arguments)]
fn run_split_branch(
    m: &Molecule,
    data: &TwoLayerData,
    d: i64,
    b: &BTreeSet<AtomId>,
    start: AtomId,
    pair_hi: AtomId,
    p: AtomId,
    label: &str,
) -> Result<CutOutcome, Error> {
    let mut engine = Engine::new(m.clone(), d);
    engine.branch.push(label.to_string());
    let mut cut_set = b.clone();
    cut_set.insert(p);
    engine.cut_zone(&cut_set)?;
    let avoid: BTreeSet<AtomId> = [data.m0, p].into();
    modified_up(
        &mut engine,
        &cut_set,
        start,
        &avoid,
        &[data.m0, p],
        (pair_hi, data.m0),
        None, // split: never form the triple
    )?;
    let pair_set: BTreeSet<AtomId> = [pair_hi, data.m0].into();
    let pc = component_with_atoms(&engine, &pair_set)
        .ok_or_else(|| Error::PlanFailed("split branch: pair component missing".into()))?;
    engine.record_excess(pc, ExcessTag::A33TimeSep(Bound::EpsStar));
    let homes = fixed_end_homes(&engine, pc);
    if homes.len() < 2 {
        return Err(Error::PlanFailed("split branch: unresolved fixed ends".into()));
    }
    let later = homes.iter().map(|&(_, h)| h).max().unwrap();
    let earlier = homes.iter().map(|&(_, h)| h).min().unwrap();
    let mu_prime = Bound::Dyadic {
        name: "mu'".into(),
        min_pow: Rational::new(1, 8 * d),
    };
    engine.record_excess(
        later,
        ExcessTag::MuRatio {
            mu: Bound::Eps(Rational::new(1, 8 * d)),
            mu_prime: mu_prime.clone(),
        },
    );
    engine.record_excess(earlier, ExcessTag::Lambda(mu_prime));
    finish_layers(&mut engine, data)?;
    Ok(engine.finish(Some(crate::outcome::MasterCase::Three)))
}

/// Cuts whatever remains of the two layers: upper with UP, lower with DOWN.
fn finish_layers(engine: &mut Engine, data: &TwoLayerData) -> Result<(), Error> {
    let upper_rest: BTreeSet<AtomId> = data
        .upper
        .iter()
        .copied()
        .filter(|a| engine.is_alive(*a))
        .collect();
    run_up_componentwise(engine, &upper_rest, Orient::Up)?;
    let lower_rest: BTreeSet<AtomId> = data
        .lower
        .iter()
        .copied()
        .filter(|a| engine.is_alive(*a))
        .collect();
    run_up_componentwise(engine, &lower_rest, Orient::Down)?;
    Ok(())
}

/// The modified UP of the no-cycle case: forced first atom, protected pair
/// target (paired with priority, never selected), and an optional triple
/// intercept forming the {333A}.
fn modified_up(
    engine: &mut Engine,
    within: &BTreeSet<AtomId>,
    first: AtomId,
    avoid: &BTreeSet<AtomId>,
    prefer: &[AtomId],
    pair: (AtomId, AtomId),
    triple_with: Option<AtomId>,
) -> Result<(), Error> {
    let mut forced_first = Some(first);
    loop {
        loop {
            let deg2 = engine
                .alive_atoms()
                .find(|&a| within.contains(&a) && !avoid.contains(&a) && engine.deg(a) == 2);
            match deg2 {
                Some(a) => {
                    engine.cut_singleton(a)?;
                }
                None => break,
            }
        }
        let alive_in: BTreeSet<AtomId> = engine
            .alive_atoms()
            .filter(|a| within.contains(a))
            .collect();
        if alive_in.is_empty() {
            return Ok(());
        }
        let selectable: BTreeSet<AtomId> = alive_in
            .iter()
            .copied()
            .filter(|a| !avoid.contains(a))
            .collect();
        let n = if let Some(f) = forced_first.take() {
            f
        } else if selectable.is_empty() {
            // leftovers: pair adjacent deg-3 survivors, then sweep
            let leftovers: Vec<AtomId> = alive_in.iter().copied().collect();
            'outer: for (i, &x) in leftovers.iter().enumerate() {
                for &y in &leftovers[i + 1..] {
                    if engine.is_alive(x)
                        && engine.is_alive(y)
                        && engine.deg(x) == 3
                        && engine.deg(y) == 3
                        && engine.molecule().bond_multiplicity(x, y) == 1
                    {
                        engine.cut_component(&[x, y].into())?;
                        continue 'outer;
                    }
                }
            }
            let rest: BTreeSet<AtomId> = engine
                .alive_atoms()
                .filter(|a| within.contains(a))
                .collect();
            for a in rest {
                engine.cut_singleton(a)?;
            }
            return Ok(());
        } else {
            let deg3: BTreeSet<AtomId> = selectable
                .iter()
                .copied()
                .filter(|&a| engine.deg(a) == 3)
                .collect();
            engine
                .extreme_low(&deg3, Orient::Up)
                .or_else(|| engine.extreme_low(&selectable, Orient::Up))
                .unwrap()
        };
        let s_n = engine.oriented_descendants(n, Orient::Up);
        loop {
            let candidates: BTreeSet<AtomId> = s_n
                .iter()
                .copied()
                .filter(|a| engine.is_alive(*a) && !avoid.contains(a))
                .collect();
            let Some(mm) = engine.extreme_high(&candidates, Orient::Up) else {
                break;
            };
            if engine.deg(mm) == 3 {
                if mm == pair.0 && engine.is_alive(pair.1) && engine.deg(pair.1) == 3 {
                    if let Some(p) = triple_with {
                        let adj = engine.molecule().bond_multiplicity(p, pair.0) == 1
                            || engine.molecule().bond_multiplicity(p, pair.1) == 1;
                        if engine.is_alive(p) && engine.deg(p) == 3 && adj {
                            engine.cut_component(&[pair.0, pair.1, p].into())?;
                            continue;
                        }
                    }
                    engine.cut_component(&[pair.0, pair.1].into())?;
                    continue;
                }
                let mut partner = None;
                for &pref in prefer {
                    if pref != mm
                        && engine.is_alive(pref)
                        && engine.deg(pref) == 3
                        && engine.molecule().bond_multiplicity(mm, pref) == 1
                    {
                        partner = Some(pref);
                        break;
                    }
                }
                if partner.is_none() {
                    let mut cands: Vec<AtomId> = engine
                        .alive_neighbours(mm)
                        .into_iter()
                        .filter(|&q| {
                            within.contains(&q)
                                && !avoid.contains(&q)
                                && engine.deg(q) == 3
                                && engine.molecule().bond_multiplicity(mm, q) == 1
                        })
                        .collect();
                    cands.sort_unstable();
                    partner = cands.first().copied();
                }
                match partner {
                    Some(q) => {
                        engine.cut_component(&[mm, q].into())?;
                    }
                    None => {
                        engine.cut_singleton(mm)?;
                    }
                }
            } else {
                engine.cut_singleton(mm)?;
            }
        }
    }
}

/// Both cluster sets have canonical cycles.
fn newcase_two(m: &Molecule, data: &TwoLayerData, d: i64) -> Result<Vec<CutOutcome>, Error> {
    let all_lines: BTreeSet<usize> = (0..data.line_count).collect();
    let covered: BTreeSet<usize> = data.p_sets.0.union(&data.p_sets.1).copied().collect();
    let extra_line_exists = covered != all_lines;
    if extra_line_exists || data.p_sets.0.len() != 3 || data.p_sets.1.len() != 3 {
        return Ok(vec![newcase_two_main(m, data, d)?]);
    }
    terminal_six_lines(m, data, d)
}

/// Cases 1 and 2 of the cycle-cycle side: harvest a matched-end {33A} from
/// each cluster set, then a third gain from the remainder (which meets a
/// particle line outside P_1 ∪ P_2, or carries extra cycles).
fn newcase_two_main(m: &Molecule, data: &TwoLayerData, d: i64) -> Result<CutOutcome, Error> {
    let mut engine = Engine::new(m.clone(), d);
    engine.branch.push("newcase2/main".into());
    let mut union_set: BTreeSet<AtomId> = data.a_sets.0.union(&data.a_sets.1).copied().collect();
    union_set.insert(data.n0);
    engine.cut_zone(&union_set)?;
    engine.cut_zone(&data.a_sets.0)?;
    run_up(&mut engine, &data.a_sets.0, Orient::Up, UpOptions::default())?;
    let x1 = first_33a_from(&engine, 0).ok_or_else(|| {
        Error::PlanFailed("A_1 produced no {33A} despite its canonical cycle".into())
    })?;
    record_matched_33a(&mut engine, x1, "mu1")?;
    let start2 = engine.components.len();
    let mut a2n0: BTreeSet<AtomId> = data.a_sets.1.clone();
    a2n0.insert(data.n0);
    run_up(&mut engine, &a2n0, Orient::Up, UpOptions::default())?;
    let x2 = first_33a_from(&engine, start2).ok_or_else(|| {
        Error::PlanFailed("A_2 ∪ {n0} produced no {33A} despite its canonical cycle".into())
    })?;
    record_matched_33a(&mut engine, x2, "mu2")?;

    let start3 = engine.components.len();
    loop {
        let deg2 = engine.alive_atoms().find(|&a| engine.deg(a) == 2);
        match deg2 {
            Some(a) => {
                engine.cut_singleton(a)?;
            }
            None => break,
        }
    }
    let upper_rest: BTreeSet<AtomId> = data
        .upper
        .iter()
        .copied()
        .filter(|a| engine.is_alive(*a))
        .collect();
    let lower_alive: BTreeSet<AtomId> = data
        .lower
        .iter()
        .copied()
        .filter(|a| engine.is_alive(*a))
        .collect();
    if !upper_rest.is_empty() {
        run_up(
            &mut engine,
            &upper_rest,
            Orient::Up,
            UpOptions {
                extra_partners: lower_alive,
                ..UpOptions::default()
            },
        )?;
    }
    let lower_rest: BTreeSet<AtomId> = data
        .lower
        .iter()
        .copied()
        .filter(|a| engine.is_alive(*a))
        .collect();
    run_up_componentwise(&mut engine, &lower_rest, Orient::Down)?;
    let gain = first_gain_from(&engine, start3, usize::MAX)
        .ok_or_else(|| Error::PlanFailed("remainder produced no third {33A}".into()))?;
    if engine.components[gain].good.is_none() {
        engine.mark_good(gain, ExcessTag::Good);
    }
    engine.record_excess(gain, ExcessTag::Good);
    Ok(engine.finish(Some(crate::outcome::MasterCase::Three)))
}

/// The terminal |P| = 6 configuration: dual decomposition on the lower
/// layer; cut A_1, A_1', A_2' in order for two matched-end harvests plus a
/// third {33A} from the doubly-fixed A_2'.
fn terminal_six_lines(
    m: &Molecule,
    data: &TwoLayerData,
    d: i64,
) -> Result<Vec<CutOutcome>, Error> {
    let rev = m.reversed();
    let q0 = {
        let order = m.effective_time_order();
        let pos: BTreeMap<AtomId, usize> =
            order.iter().enumerate().map(|(i, &a)| (a, i)).collect();
        *data
            .a_sets
            .0
            .iter()
            .min_by_key(|a| pos[a])
            .ok_or_else(|| Error::PlanFailed("A_1 empty in terminal case".into()))?
    };
    let dual = TwoLayerData::derive(&rev, &data.lower, Some(q0))?;
    let dcc1 = dual
        .m_plus
        .0
        .map(|mp| has_canonical_cycle(&rev, &dual.a_sets.0, mp))
        .unwrap_or(false);
    let dcc2 = dual
        .m_plus
        .1
        .map(|mp| has_canonical_cycle(&rev, &dual.a_sets.1, mp))
        .unwrap_or(false);
    if dual.a_sets.0.is_empty() || !dcc1 {
        return newcase_one(&rev, dual, d);
    }
    if dual.a_sets.1.is_empty() || !dcc2 {
        return newcase_one(&rev, dual.swapped(), d);
    }
    let dual_covered: BTreeSet<usize> = dual.p_sets.0.union(&dual.p_sets.1).copied().collect();
    let dual_all: BTreeSet<usize> = (0..dual.line_count).collect();
    if dual_covered != dual_all || dual.p_sets.0.len() != 3 || dual.p_sets.1.len() != 3 {
        return Ok(vec![newcase_two_main(&rev, &dual, d)?]);
    }

    let bonds_between = |x: &BTreeSet<AtomId>, y: &BTreeSet<AtomId>| -> usize {
        m.edges_iter()
            .filter(|(_, e)| match e {
                molecule::Edge::Bond { parent, child, .. } => {
                    (x.contains(parent) && y.contains(child))
                        || (x.contains(child) && y.contains(parent))
                }
                _ => false,
            })
            .count()
    };
    let a1 = &data.a_sets.0;
    let (a1p, a2p) = {
        let c1 = bonds_between(a1, &dual.a_sets.0);
        let c2 = bonds_between(a1, &dual.a_sets.1);
        if c1 == 1 && c2 == 2 {
            (dual.a_sets.0.clone(), dual.a_sets.1.clone())
        } else if c2 == 1 && c1 == 2 {
            (dual.a_sets.1.clone(), dual.a_sets.0.clone())
        } else {
            return Err(Error::PlanFailed(format!(
                "terminal case bond counts must be {{1,2}}, got {c1} and {c2}"
            )));
        }
    };

    let mut engine = Engine::new(m.clone(), d);
    engine.branch.push("new2layer/terminal".into());
    engine.cut_zone(a1)?;
    engine.cut_zone(&a1p)?;
    engine.cut_zone(&a2p)?;
    run_up(&mut engine, a1, Orient::Up, UpOptions::default())?;
    let x1 = first_33a_from(&engine, 0)
        .ok_or_else(|| Error::PlanFailed("A_1 produced no {33A}".into()))?;
    record_matched_33a(&mut engine, x1, "nu1")?;
    let s2 = engine.components.len();
    run_up_componentwise(&mut engine, &a1p, Orient::Down)?;
    let x2 = first_33a_from(&engine, s2)
        .ok_or_else(|| Error::PlanFailed("A_1' produced no {33A}".into()))?;
    record_matched_33a(&mut engine, x2, "nu2")?;
    let s3 = engine.components.len();
    run_up_componentwise(&mut engine, &a2p, Orient::Down)?;
    let x3 = first_33a_from(&engine, s3)
        .ok_or_else(|| Error::PlanFailed("A_2' produced no {33A}".into()))?;
    if engine.components[x3].good.is_none() {
        engine.mark_good(x3, ExcessTag::Good);
    }
    engine.record_excess(x3, ExcessTag::Good);
    finish_layers(&mut engine, data)?;
    Ok(vec![engine.finish(Some(crate::outcome::MasterCase::Three))])
}
