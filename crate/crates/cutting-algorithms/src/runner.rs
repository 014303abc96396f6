//! The shared cutting engine: wraps a `CutSequence` with degree tracking,
//! time-order bookkeeping, component finalization/classification, automatic
//! good-component detection (double bonds, weak degeneracies), and the
//! UP/DOWN orientation dual.

use crate::outcome::{ComponentRecord, Counters, CutOutcome, MasterCase};
use crate::Error;
use molecule::features::FeatureReport;
use molecule::{
    classify_elementary, Bound, CutSequence, ElementaryKind, EndPairing, ExcessLedger,
    ExcessTag, Molecule, Rational, Restriction,
};
use molecule::{AtomId, EdgeId};
use std::collections::{BTreeMap, BTreeSet};

/// UP works bottom-up (lowest = earliest in time); DOWN is the exact dual.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orient {
    Up,
    Down,
}

impl Orient {
    pub fn dual(self) -> Orient {
        match self {
            Orient::Up => Orient::Down,
            Orient::Down => Orient::Up,
        }
    }
}

pub struct Engine {
    pub seq: CutSequence,
    pub d: i64,
    /// time-order position per atom (children before parents)
    pos: BTreeMap<AtomId, usize>,
    /// alive (uncut) atoms keyed by position
    alive: BTreeSet<(usize, AtomId)>,
    /// alive atoms currently at degree 2 / 3 (kept in sync with `deg`)
    deg2_alive: BTreeSet<(usize, AtomId)>,
    deg3_alive: BTreeSet<(usize, AtomId)>,
    deg: BTreeMap<AtomId, usize>,
    pub components: Vec<ComponentRecord>,
    pub ledger: ExcessLedger,
    /// component index per cut atom
    comp_of: BTreeMap<AtomId, usize>,
    features: FeatureReport,
    /// weak pairs and atoms snapshot (from the input's restriction records)
    weak_atoms: BTreeSet<AtomId>,
    weak_pairs: Vec<(AtomId, AtomId)>,
    pub branch: Vec<String>,
    /// atoms whose degree changed since the last drain (selection queues in
    /// the algorithms refresh from this)
    dirty: Vec<AtomId>,
}

impl Engine {
    pub fn new(m: Molecule, d: i64) -> Self {
        let order = m.effective_time_order();
        let pos: BTreeMap<AtomId, usize> =
            order.iter().enumerate().map(|(i, &a)| (a, i)).collect();
        let alive: BTreeSet<(usize, AtomId)> = pos.iter().map(|(&a, &p)| (p, a)).collect();
        let deg: BTreeMap<AtomId, usize> = m
            .atom_ids()
            .map(|a| (a, m.degree(a).unwrap_or(0)))
            .collect();
        let deg2_alive: BTreeSet<(usize, AtomId)> = deg
            .iter()
            .filter(|(_, &d)| d == 2)
            .map(|(&a, _)| (pos[&a], a))
            .collect();
        let deg3_alive: BTreeSet<(usize, AtomId)> = deg
            .iter()
            .filter(|(_, &d)| d == 3)
            .map(|(&a, _)| (pos[&a], a))
            .collect();
        let features = molecule::detect_features(&m, d);
        let weak_atoms: BTreeSet<AtomId> =
            features.weakly_degenerate_atoms.iter().copied().collect();
        let weak_pairs = features.weakly_degenerate_pairs.clone();
        Self {
            seq: CutSequence::new(m),
            d,
            pos,
            alive,
            deg2_alive,
            deg3_alive,
            deg,
            components: Vec::new(),
            ledger: ExcessLedger::default(),
            comp_of: BTreeMap::new(),
            features,
            weak_atoms,
            weak_pairs,
            branch: Vec::new(),
            dirty: Vec::new(),
        }
    }

    /// Takes the accumulated degree-change events.
    pub fn drain_dirty(&mut self) -> Vec<AtomId> {
        std::mem::take(&mut self.dirty)
    }

    pub fn molecule(&self) -> &Molecule {
        self.seq.molecule()
    }

    pub fn features(&self) -> &FeatureReport {
        &self.features
    }

    pub fn is_alive(&self, a: AtomId) -> bool {
        self.alive.contains(&(self.pos[&a], a))
    }

    pub fn alive_count(&self) -> usize {
        self.alive.len()
    }

    pub fn alive_atoms(&self) -> impl Iterator<Item = AtomId> + '_ {
        self.alive.iter().map(|&(_, a)| a)
    }

    pub fn deg(&self, a: AtomId) -> usize {
        self.deg[&a]
    }

    pub fn position(&self, a: AtomId) -> usize {
        self.pos[&a]
    }

    /// Alive neighbours (deduplicated) of an alive atom.
    pub fn alive_neighbours(&self, a: AtomId) -> Vec<AtomId> {
        let mut ns = self
            .molecule()
            .neighbours(a)
            .unwrap_or_default()
            .into_iter()
            .filter(|&n| self.is_alive(n))
            .collect::<Vec<_>>();
        ns.sort_unstable();
        ns.dedup();
        ns
    }

    /// Alive parents/children under an orientation ("children" of Down =
    /// parents).
    pub fn oriented_children(&self, a: AtomId, o: Orient) -> Vec<AtomId> {
        let v = match o {
            Orient::Up => self.molecule().children(a).unwrap_or_default(),
            Orient::Down => self.molecule().parents(a).unwrap_or_default(),
        };
        v.into_iter().filter(|&n| self.is_alive(n)).collect()
    }

    pub fn oriented_parents(&self, a: AtomId, o: Orient) -> Vec<AtomId> {
        self.oriented_children(a, o.dual())
    }

    /// Earliest alive atom of `set` under Up (= a lowest atom), or the
    /// latest under Down (= dual). `None` if the set has no alive atom.
    /// Scans the smaller of the set and the alive index.
    pub fn extreme_low(&self, set: &BTreeSet<AtomId>, o: Orient) -> Option<AtomId> {
        if set.len() * 4 < self.alive.len() {
            let keyed = set
                .iter()
                .filter(|&&a| self.is_alive(a))
                .map(|&a| (self.pos[&a], a));
            return match o {
                Orient::Up => keyed.min().map(|(_, a)| a),
                Orient::Down => keyed.max().map(|(_, a)| a),
            };
        }
        match o {
            Orient::Up => self
                .alive
                .iter()
                .find(|(_, a)| set.contains(a))
                .map(|&(_, a)| a),
            Orient::Down => self
                .alive
                .iter()
                .rev()
                .find(|(_, a)| set.contains(a))
                .map(|&(_, a)| a),
        }
    }

    pub fn extreme_high(&self, set: &BTreeSet<AtomId>, o: Orient) -> Option<AtomId> {
        self.extreme_low(set, o.dual())
    }

    /// Alive descendants of `n` (inclusive) under the orientation.
    pub fn oriented_descendants(&self, n: AtomId, o: Orient) -> BTreeSet<AtomId> {
        let mut out = BTreeSet::new();
        let mut stack = vec![n];
        while let Some(a) = stack.pop() {
            if out.insert(a) {
                stack.extend(self.oriented_children(a, o));
            }
        }
        out
    }

    fn decrement_degree(&mut self, at: AtomId) {
        self.dirty.push(at);
        let pos = self.pos[&at];
        if let Some(d) = self.deg.get_mut(&at) {
            match *d {
                3 => {
                    self.deg3_alive.remove(&(pos, at));
                    self.deg2_alive.insert((pos, at));
                }
                4 => {
                    self.deg3_alive.insert((pos, at));
                }
                2 => {
                    self.deg2_alive.remove(&(pos, at));
                }
                _ => {}
            }
            *d -= 1;
        }
    }

    fn remove_alive(&mut self, a: AtomId) {
        let pos = self.pos[&a];
        self.alive.remove(&(pos, a));
        self.deg2_alive.remove(&(pos, a));
        self.deg3_alive.remove(&(pos, a));
    }

    /// Earliest (Up) or latest (Down) alive deg-2 atom passing the filter.
    pub fn first_deg2_where<F: Fn(AtomId) -> bool>(
        &self,
        orient: Orient,
        f: F,
    ) -> Option<AtomId> {
        match orient {
            Orient::Up => self
                .deg2_alive
                .iter()
                .find(|(_, a)| f(*a))
                .map(|&(_, a)| a),
            Orient::Down => self
                .deg2_alive
                .iter()
                .rev()
                .find(|(_, a)| f(*a))
                .map(|&(_, a)| a),
        }
    }

    pub fn first_deg3_where<F: Fn(AtomId) -> bool>(
        &self,
        orient: Orient,
        f: F,
    ) -> Option<AtomId> {
        match orient {
            Orient::Up => self
                .deg3_alive
                .iter()
                .find(|(_, a)| f(*a))
                .map(|&(_, a)| a),
            Orient::Down => self
                .deg3_alive
                .iter()
                .rev()
                .find(|(_, a)| f(*a))
                .map(|&(_, a)| a),
        }
    }

    /// Severs `atoms` into a fresh unsealed zone (they stay alive and get
    /// carved by subsequent cuts); degrees on the fixed-end side drop.
    pub fn cut_zone(&mut self, atoms: &BTreeSet<AtomId>) -> Result<usize, Error> {
        let pair_start = self.seq.pairings().len();
        let zone = self.seq.cut_free(atoms).map_err(Error::Molecule)?;
        let pairs = self.seq.pairings()[pair_start..].to_vec();
        for p in &pairs {
            self.decrement_degree(p.fixed_at);
        }
        Ok(zone)
    }

    /// Cuts a component as free, classifies and seals it, updates degrees,
    /// applies the automatic good-component rules, and returns its index.
    pub fn cut_component(&mut self, atoms: &BTreeSet<AtomId>) -> Result<usize, Error> {
        debug_assert!(atoms.iter().all(|&a| self.is_alive(a)));
        let pair_start = self.seq.pairings().len();
        let zone = self.seq.cut_free(atoms).map_err(Error::Molecule)?;
        self.seq.seal(zone);
        let new_pairs: Vec<EndPairing> = self.seq.pairings()[pair_start..].to_vec();
        // degree updates: the fixed-end side loses degree
        for p in &new_pairs {
            self.decrement_degree(p.fixed_at);
        }
        for &a in atoms {
            self.remove_alive(a);
        }
        let _ = zone;
        let comp_mol = molecule::cut::extract(self.seq.molecule(), atoms);
        let kind = classify_elementary(&comp_mol);
        let idx = self.components.len();
        for &a in atoms {
            self.comp_of.insert(a, idx);
        }
        let good = self.auto_good(atoms, kind, &new_pairs);
        self.components.push(ComponentRecord {
            atoms: atoms.clone(),
            kind,
            good,
        });
        Ok(idx)
    }

    pub fn cut_singleton(&mut self, a: AtomId) -> Result<usize, Error> {
        self.cut_component(&[a].into())
    }

    /// Automatic goodness rules applied to every new component:
    /// - a double bond severed by this cut leaves the double-root
    ///   restriction on the freed side ({3}/{4} double-root gains);
    /// - a weakly degenerate atom in a {3}/{4};
    /// - a weakly degenerate pair whose partner was cut earlier;
    /// - a {33B} with no weakly degenerate atom (the complementary
    ///   indicators make it good).
    fn auto_good(
        &mut self,
        atoms: &BTreeSet<AtomId>,
        kind: Option<ElementaryKind>,
        new_pairs: &[EndPairing],
    ) -> Option<ExcessTag> {
        let kind = kind?;
        // double bonds severed by this cut: two pairings with the same
        // (free_at, fixed_at) atom pair
        let mut seen: BTreeMap<(AtomId, AtomId), Vec<EdgeId>> = BTreeMap::new();
        for p in new_pairs {
            seen.entry((p.free_at, p.fixed_at))
                .or_default()
                .push(p.free_end);
        }
        let double_pairs: Vec<Vec<EdgeId>> = seen
            .values()
            .filter(|v| v.len() >= 2)
            .cloned()
            .collect();
        match kind {
            ElementaryKind::Three | ElementaryKind::Four => {
                if !double_pairs.is_empty() {
                    let two = double_pairs.len() >= 2 && kind == ElementaryKind::Four;
                    return Some(if two {
                        ExcessTag::DoubleRootTwoPair
                    } else {
                        ExcessTag::DoubleRoot
                    });
                }
                let a = *atoms.iter().next().unwrap();
                if self.weak_atoms.contains(&a) {
                    return Some(ExcessTag::Good);
                }
                for &(x, y) in &self.weak_pairs {
                    let partner = if x == a {
                        Some(y)
                    } else if y == a {
                        Some(x)
                    } else {
                        None
                    };
                    if let Some(p) = partner {
                        if self.comp_of.contains_key(&p) {
                            return Some(ExcessTag::Good);
                        }
                    }
                }
                None
            }
            ElementaryKind::ThreeThreeB => {
                let clean = atoms.iter().all(|a| {
                    !self.weak_atoms.contains(a)
                        && !self.weak_pairs.iter().any(|&(x, y)| x == *a || y == *a)
                });
                clean.then_some(ExcessTag::Good)
            }
            _ => None,
        }
    }

    pub fn mark_good(&mut self, idx: usize, tag: ExcessTag) {
        self.components[idx].good = Some(tag);
    }

    pub fn record_excess(&mut self, idx: usize, tag: ExcessTag) {
        let kind = self.components[idx]
            .kind
            .expect("excess recorded on a classified component");
        self.ledger.record(idx, kind, tag, self.d);
    }

    pub fn component_of(&self, a: AtomId) -> Option<usize> {
        self.comp_of.get(&a).copied()
    }

    /// Resolves a fixed end of a sealed component to the component holding
    /// the paired free end.
    pub fn component_of_fixed_end(&self, fixed: EdgeId) -> Option<usize> {
        let free = self.seq.paired_free_end(fixed)?;
        let at = match self.molecule().edge(free).ok()? {
            molecule::Edge::End { at, .. } => *at,
            _ => return None,
        };
        self.component_of(at)
    }

    /// Finalizes into a `CutOutcome`, putting the component records in
    /// `≺_cut` order and remapping ledger indices accordingly.
    pub fn finish(mut self, case: Option<MasterCase>) -> CutOutcome {
        // any leftover alive atoms become (non-elementary) trailing records;
        // validation will flag them
        let leftovers: Vec<BTreeSet<AtomId>> = {
            let alive: BTreeSet<AtomId> = self.alive_atoms().collect();
            self.molecule().components(&alive)
        };
        for set in leftovers {
            if set.is_empty() {
                continue;
            }
            let _ = self.cut_component(&set);
        }
        // map creation-order component index -> ≺_cut position
        let ordered = self.seq.ordered_components();
        let mut perm: BTreeMap<usize, usize> = BTreeMap::new();
        let mut records: Vec<ComponentRecord> = Vec::with_capacity(self.components.len());
        for (_zone, atoms) in ordered {
            if atoms.is_empty() {
                continue;
            }
            let rep = *atoms.iter().next().unwrap();
            if let Some(&old_idx) = self.comp_of.get(&rep) {
                perm.insert(old_idx, records.len());
                records.push(self.components[old_idx].clone());
            }
        }
        let mut ledger = ExcessLedger::default();
        for entry in self.ledger.entries {
            let mut e = entry;
            e.component = perm.get(&e.component).copied().unwrap_or(e.component);
            ledger.entries.push(e);
        }
        let counters = Counters::from_components(&records);
        let treat_33a_as_good = self.features.strong_degenerate_primitive.is_empty();
        CutOutcome {
            case,
            components: records,
            counters,
            ledger,
            branch: self.branch,
            treat_33a_as_good,
        }
    }
}

/// Inserts the complementary weak-degeneracy restrictions implied by one
/// indicator branch: atoms/pairs in `y1` are declared degenerate (<= bound),
/// which `detect_features` picks up.
pub fn attach_weak_degeneracies(
    m: &mut Molecule,
    atoms: &[AtomId],
    pairs: &[(AtomId, AtomId)],
    d: i64,
) {
    let bound = Bound::Eps(Rational::new(1, 8 * d));
    for &a in atoms {
        // two distinct edges at the atom with close velocities
        if let Ok(slots) = m.slots(a) {
            m.restrictions.push(Restriction::VelProxAtMost {
                e1: slots[0],
                to: molecule::Target::Edge(slots[1]),
                bound: bound.clone(),
            });
        }
    }
    for &(a, b) in pairs {
        m.restrictions.push(Restriction::TimeSepAtMost {
            a,
            b,
            bound: bound.clone(),
        });
    }
}
