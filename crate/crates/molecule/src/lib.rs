//! The layered-molecule graph model: C-atoms with two incoming (top) and two
//! outgoing (bottom) edge slots, directed bonds running parent-to-child,
//! free/fixed ends, and the positional serial pairing (top slot k is serial
//! with bottom slot k) that encodes particle lines.
//!
//! Molecules are immutable after construction; cutting returns new values
//! (see [`cut`] and [`CutSequence`]).

use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

pub mod builder;
pub mod classify;
pub mod cut;
pub mod excess;
pub mod features;
pub mod restriction;
pub mod serialize;

pub use builder::HistoryBuilder;
pub use classify::{classify_elementary, ElementaryKind};
pub use cut::{cut, CutMode, CutOutput, CutSequence, EndPairing};
pub use excess::{Excess, ExcessLedger, ExcessTag, LedgerEntry, Rational};
pub use features::{detect_features, FeatureReport};
pub use restriction::{Bound, Restriction, Target};

pub type AtomId = u32;
pub type EdgeId = u32;

#[derive(Debug, Error, PartialEq)]
pub enum MoleculeError {
    #[error("atom {0} not present")]
    MissingAtom(AtomId),
    #[error("edge {0} not present or removed")]
    MissingEdge(EdgeId),
    #[error("cut set must be a nonempty subset of live atoms")]
    BadCutSet,
    #[error("molecule invalid: {0:?}")]
    Invalid(Vec<Violation>),
    #[error("parse error at line {0}: {1}")]
    Parse(usize, String),
}

pub type Result<T> = std::result::Result<T, MoleculeError>;

/// Whether an end points up (incoming/top) or down (outgoing/bottom).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EndDir {
    Top,
    Bottom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EndStatus {
    Free,
    Fixed,
}

/// An edge: a bond occupies a bottom slot of its parent and a top slot of
/// its child; an end occupies one slot of one atom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Edge {
    Bond {
        parent: AtomId,
        p_slot: u8,
        child: AtomId,
        c_slot: u8,
    },
    End {
        at: AtomId,
        slot: u8,
        dir: EndDir,
        status: EndStatus,
    },
    /// A bond replaced by a (free, fixed) end pair during cutting. Kept so
    /// the original edge multiset stays reconstructible.
    Replaced {
        by_free: EdgeId,
        by_fixed: EdgeId,
    },
}

#[derive(Debug, Clone)]
pub struct Atom {
    pub layer: u32,
    /// Incoming (top) slots; slot k is serial with bottom slot k.
    pub top: [EdgeId; 2],
    /// Outgoing (bottom) slots.
    pub bot: [EdgeId; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    SlotCount(AtomId),
    DirectedCycle,
    LayerOrder { parent: AtomId, child: AtomId },
    SerialBroken(AtomId),
    DanglingEdge(EdgeId),
    AmbiguousClassification(String),
}

/// A layered molecule of C-atoms.
#[derive(Debug, Clone, Default)]
pub struct Molecule {
    pub(crate) atoms: BTreeMap<AtomId, Atom>,
    pub(crate) edges: BTreeMap<EdgeId, Edge>,
    pub(crate) next_edge: EdgeId,
    /// Restriction records attached by indicator decompositions.
    pub restrictions: Vec<Restriction>,
    /// A linear extension of the descendant order (children before
    /// parents); used by the two-layer machinery as the fixed time order.
    pub time_order: Vec<AtomId>,
}

impl Molecule {
    pub fn atom_ids(&self) -> impl Iterator<Item = AtomId> + '_ {
        self.atoms.keys().copied()
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn atom(&self, id: AtomId) -> Result<&Atom> {
        self.atoms.get(&id).ok_or(MoleculeError::MissingAtom(id))
    }

    pub fn edge(&self, id: EdgeId) -> Result<&Edge> {
        self.edges.get(&id).ok_or(MoleculeError::MissingEdge(id))
    }

    pub fn contains_atom(&self, id: AtomId) -> bool {
        self.atoms.contains_key(&id)
    }

    pub fn edges_iter(&self) -> impl Iterator<Item = (EdgeId, &Edge)> + '_ {
        self.edges.iter().map(|(k, v)| (*k, v))
    }

    /// The four slot edges of an atom in a fixed order (top0, top1, bot0,
    /// bot1).
    pub fn slots(&self, id: AtomId) -> Result<[EdgeId; 4]> {
        let a = self.atom(id)?;
        Ok([a.top[0], a.top[1], a.bot[0], a.bot[1]])
    }

    /// Bonds plus free ends at the atom (fixed ends excluded).
    pub fn degree(&self, id: AtomId) -> Result<usize> {
        let mut deg = 0;
        for e in self.slots(id)? {
            match self.edge(e)? {
                Edge::Bond { .. } => deg += 1,
                Edge::End {
                    status: EndStatus::Free,
                    ..
                } => deg += 1,
                _ => {}
            }
        }
        Ok(deg)
    }

    /// Parents of an atom (atoms on the other side of its top bonds).
    pub fn parents(&self, id: AtomId) -> Result<Vec<AtomId>> {
        let a = self.atom(id)?;
        let mut out = Vec::new();
        for &e in &a.top {
            if let Edge::Bond { parent, .. } = self.edge(e)? {
                out.push(*parent);
            }
        }
        Ok(out)
    }

    /// Children of an atom (other side of its bottom bonds).
    pub fn children(&self, id: AtomId) -> Result<Vec<AtomId>> {
        let a = self.atom(id)?;
        let mut out = Vec::new();
        for &e in &a.bot {
            if let Edge::Bond { child, .. } = self.edge(e)? {
                out.push(*child);
            }
        }
        Ok(out)
    }

    /// Undirected bond neighbours (with multiplicity).
    pub fn neighbours(&self, id: AtomId) -> Result<Vec<AtomId>> {
        let mut out = self.parents(id)?;
        out.extend(self.children(id)?);
        Ok(out)
    }

    /// Number of bonds joining two atoms (2 = double bond).
    pub fn bond_multiplicity(&self, a: AtomId, b: AtomId) -> usize {
        self.neighbours(a)
            .map(|ns| ns.iter().filter(|&&n| n == b).count())
            .unwrap_or(0)
    }

    /// Descendants of `n`, including `n` itself.
    pub fn descendants(&self, n: AtomId) -> Result<BTreeSet<AtomId>> {
        let mut out = BTreeSet::new();
        let mut stack = vec![n];
        while let Some(a) = stack.pop() {
            if out.insert(a) {
                stack.extend(self.children(a)?);
            }
        }
        Ok(out)
    }

    /// Ancestors of `n`, including `n` itself.
    pub fn ancestors(&self, n: AtomId) -> Result<BTreeSet<AtomId>> {
        let mut out = BTreeSet::new();
        let mut stack = vec![n];
        while let Some(a) = stack.pop() {
            if out.insert(a) {
                stack.extend(self.parents(a)?);
            }
        }
        Ok(out)
    }

    /// Bonds with both endpoints inside `set`.
    pub fn internal_bonds(&self, set: &BTreeSet<AtomId>) -> Vec<EdgeId> {
        self.edges
            .iter()
            .filter_map(|(id, e)| match e {
                Edge::Bond { parent, child, .. }
                    if set.contains(parent) && set.contains(child) =>
                {
                    Some(*id)
                }
                _ => None,
            })
            .collect()
    }

    /// Connected components of `set` viewed as an undirected subgraph.
    pub fn components(&self, set: &BTreeSet<AtomId>) -> Vec<BTreeSet<AtomId>> {
        let mut seen: BTreeSet<AtomId> = BTreeSet::new();
        let mut out = Vec::new();
        for &start in set {
            if seen.contains(&start) {
                continue;
            }
            let mut comp = BTreeSet::new();
            let mut stack = vec![start];
            while let Some(a) = stack.pop() {
                if !comp.insert(a) {
                    continue;
                }
                seen.insert(a);
                for n in self.neighbours(a).unwrap_or_default() {
                    if set.contains(&n) && !comp.contains(&n) {
                        stack.push(n);
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    /// `rho(A) = |B(A)| - |A| + |F(A)|`: the cycle rank of `A` as an
    /// undirected subgraph.
    pub fn rho(&self, set: &BTreeSet<AtomId>) -> i64 {
        self.internal_bonds(set).len() as i64 - set.len() as i64
            + self.components(set).len() as i64
    }

    pub fn all_atoms(&self) -> BTreeSet<AtomId> {
        self.atoms.keys().copied().collect()
    }

    /// No fixed end anywhere.
    pub fn is_full(&self) -> bool {
        !self.edges.values().any(|e| {
            matches!(
                e,
                Edge::End {
                    status: EndStatus::Fixed,
                    ..
                }
            )
        })
    }

    pub fn is_connected(&self) -> bool {
        let all = self.all_atoms();
        all.is_empty() || self.components(&all).len() == 1
    }

    pub fn has_top_fixed_end(&self) -> bool {
        self.edges.values().any(|e| {
            matches!(
                e,
                Edge::End {
                    dir: EndDir::Top,
                    status: EndStatus::Fixed,
                    ..
                }
            )
        })
    }

    pub fn has_bottom_fixed_end(&self) -> bool {
        self.edges.values().any(|e| {
            matches!(
                e,
                Edge::End {
                    dir: EndDir::Bottom,
                    status: EndStatus::Fixed,
                    ..
                }
            )
        })
    }

    /// Follows the serial pairing from every top end down to a bottom end.
    /// Every edge lies on exactly one of the returned lines.
    pub fn particle_lines(&self) -> Result<Vec<Vec<EdgeId>>> {
        let mut lines = Vec::new();
        for (id, e) in self.edges.iter() {
            let (at, slot) = match e {
                Edge::End {
                    at,
                    slot,
                    dir: EndDir::Top,
                    ..
                } => (*at, *slot),
                _ => continue,
            };
            let mut line = vec![*id];
            let mut cur = (at, slot);
            loop {
                let atom = self.atom(cur.0)?;
                let down = atom.bot[cur.1 as usize];
                line.push(down);
                match self.edge(down)? {
                    Edge::Bond { child, c_slot, .. } => {
                        cur = (*child, *c_slot);
                    }
                    Edge::End {
                        dir: EndDir::Bottom,
                        ..
                    } => break,
                    _ => {
                        return Err(MoleculeError::Invalid(vec![Violation::SerialBroken(
                            cur.0,
                        )]));
                    }
                }
            }
            lines.push(line);
        }
        Ok(lines)
    }

    /// Checks every structural invariant, listing each violated clause.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        // slot bookkeeping: each slot edge must reference the atom back
        for (&id, atom) in &self.atoms {
            for (k, &e) in atom.top.iter().enumerate() {
                match self.edges.get(&e) {
                    Some(Edge::Bond { child, c_slot, .. })
                        if *child == id && *c_slot as usize == k => {}
                    Some(Edge::End {
                        at,
                        slot,
                        dir: EndDir::Top,
                        ..
                    }) if *at == id && *slot as usize == k => {}
                    _ => out.push(Violation::SlotCount(id)),
                }
            }
            for (k, &e) in atom.bot.iter().enumerate() {
                match self.edges.get(&e) {
                    Some(Edge::Bond { parent, p_slot, .. })
                        if *parent == id && *p_slot as usize == k => {}
                    Some(Edge::End {
                        at,
                        slot,
                        dir: EndDir::Bottom,
                        ..
                    }) if *at == id && *slot as usize == k => {}
                    _ => out.push(Violation::SlotCount(id)),
                }
            }
        }
        // every live edge attached to a live atom
        for (&id, e) in &self.edges {
            let ok = match e {
                Edge::Bond { parent, child, .. } => {
                    self.atoms.contains_key(parent) && self.atoms.contains_key(child)
                }
                Edge::End { at, .. } => self.atoms.contains_key(at),
                Edge::Replaced { by_free, by_fixed } => {
                    self.edges.contains_key(by_free) && self.edges.contains_key(by_fixed)
                }
            };
            if !ok {
                out.push(Violation::DanglingEdge(id));
            }
        }
        // layer monotonicity along bonds
        for e in self.edges.values() {
            if let Edge::Bond { parent, child, .. } = e {
                if let (Some(p), Some(c)) = (self.atoms.get(parent), self.atoms.get(child)) {
                    if p.layer < c.layer {
                        out.push(Violation::LayerOrder {
                            parent: *parent,
                            child: *child,
                        });
                    }
                }
            }
        }
        // no directed cycle: Kahn over parent -> child arcs
        if self.topological_order().is_none() {
            out.push(Violation::DirectedCycle);
        }
        out
    }

    /// Children-first topological order (a valid time order), `None` if the
    /// directed graph has a cycle. Ties break toward smaller atom ids.
    pub fn topological_order(&self) -> Option<Vec<AtomId>> {
        let mut deg: BTreeMap<AtomId, usize> = BTreeMap::new();
        for &id in self.atoms.keys() {
            deg.insert(id, self.children(id).ok()?.len());
        }
        let mut ready: BTreeSet<AtomId> = deg
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(&a, _)| a)
            .collect();
        let mut order = Vec::with_capacity(self.atoms.len());
        while let Some(&a) = ready.iter().next() {
            ready.remove(&a);
            order.push(a);
            for p in self.parents(a).ok()? {
                let d = deg.get_mut(&p).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.insert(p);
                }
            }
        }
        (order.len() == self.atoms.len()).then_some(order)
    }

    /// The stored time order if it covers the live atoms, else a
    /// deterministic topological order.
    pub fn effective_time_order(&self) -> Vec<AtomId> {
        if self.time_order.len() == self.atoms.len()
            && self.time_order.iter().all(|a| self.atoms.contains_key(a))
        {
            self.time_order.clone()
        } else {
            self.topological_order().unwrap_or_default()
        }
    }

    /// The time-reversed molecule: bonds flip parent/child, ends flip
    /// top/bottom, the time order reverses, layers are relabeled so they
    /// stay monotone. Elementary kinds and excesses are invariant under
    /// reversal, which is how the DOWN-side case analyses reuse the UP-side
    /// code.
    pub fn reversed(&self) -> Molecule {
        let mut m = self.clone();
        let max_layer = self.atoms.values().map(|a| a.layer).max().unwrap_or(1);
        for atom in m.atoms.values_mut() {
            std::mem::swap(&mut atom.top, &mut atom.bot);
            atom.layer = max_layer + 1 - atom.layer;
        }
        for e in m.edges.values_mut() {
            match e {
                Edge::Bond {
                    parent,
                    p_slot,
                    child,
                    c_slot,
                } => {
                    std::mem::swap(parent, child);
                    std::mem::swap(p_slot, c_slot);
                }
                Edge::End { dir, .. } => {
                    *dir = match dir {
                        EndDir::Top => EndDir::Bottom,
                        EndDir::Bottom => EndDir::Top,
                    };
                }
                Edge::Replaced { .. } => {}
            }
        }
        m.time_order = self.effective_time_order();
        m.time_order.reverse();
        m
    }

    pub(crate) fn alloc_edge(&mut self, e: Edge) -> EdgeId {
        let id = self.next_edge;
        self.next_edge += 1;
        self.edges.insert(id, e);
        id
    }

    /// Restricts the molecule to an atom subset, dropping all other atoms
    /// and the edges touching them (used to materialize components). Bonds
    /// to removed atoms must already have been cut.
    pub(crate) fn restricted_to(&self, set: &BTreeSet<AtomId>) -> Molecule {
        let mut m = self.clone();
        m.atoms.retain(|id, _| set.contains(id));
        m.edges.retain(|_, e| match e {
            Edge::Bond { parent, child, .. } => set.contains(parent) && set.contains(child),
            Edge::End { at, .. } => set.contains(at),
            Edge::Replaced { .. } => false,
        });
        m.time_order.retain(|a| set.contains(a));
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::HistoryBuilder;

    #[test]
    fn single_atom_molecule_is_valid_and_full() {
        let m = HistoryBuilder::new(2).collide(0, 1).build();
        assert!(m.validate().is_empty());
        assert!(m.is_full());
        assert_eq!(m.atom_count(), 1);
        assert_eq!(m.degree(0).unwrap(), 4);
        assert_eq!(m.particle_lines().unwrap().len(), 2);
    }

    #[test]
    fn path_rho_is_zero() {
        // 3 collisions forming a path: (0,1), (1,2), (2,3) over 4 lines.
        let m = HistoryBuilder::new(4)
            .collide(0, 1)
            .collide(1, 2)
            .collide(2, 3)
            .build();
        assert!(m.validate().is_empty());
        let all = m.all_atoms();
        assert_eq!(m.rho(&all), 0); // 2 - 3 + 1
        assert_eq!(m.internal_bonds(&all).len(), 2);
    }

    #[test]
    fn triangle_rho_is_one() {
        // 3 pairwise collisions among 3 lines: an undirected triangle.
        let m = HistoryBuilder::new(3)
            .collide(0, 1)
            .collide(1, 2)
            .collide(0, 2)
            .build();
        assert!(m.validate().is_empty());
        let all = m.all_atoms();
        assert_eq!(m.internal_bonds(&all).len(), 3);
        assert_eq!(m.rho(&all), 1); // 3 - 3 + 1
    }

    #[test]
    fn parent_layer_at_least_child_layer() {
        let m = HistoryBuilder::new(3)
            .collide_in_layer(0, 1, 1)
            .collide_in_layer(1, 2, 2)
            .build();
        assert!(m.validate().is_empty());
        // atom 1 is later, hence the parent of atom 0 along line 1
        assert_eq!(m.parents(0).unwrap(), vec![1]);
        assert_eq!(m.children(1).unwrap(), vec![0]);
    }

    #[test]
    fn particle_lines_partition_edges() {
        let m = HistoryBuilder::new(4)
            .collide(0, 1)
            .collide(1, 2)
            .collide(2, 3)
            .collide(0, 2)
            .build();
        let lines = m.particle_lines().unwrap();
        assert_eq!(lines.len(), 4); // = number of bottom ends
        let mut seen = BTreeSet::new();
        for line in &lines {
            for e in line {
                assert!(seen.insert(*e), "edge {e} on two particle lines");
            }
        }
        let live_edges = m
            .edges_iter()
            .filter(|(_, e)| !matches!(e, Edge::Replaced { .. }))
            .count();
        assert_eq!(seen.len(), live_edges);
    }

    #[test]
    fn double_bond_detected_by_multiplicity() {
        let m = HistoryBuilder::new(2).collide(0, 1).collide(0, 1).build();
        assert!(m.validate().is_empty());
        assert_eq!(m.bond_multiplicity(0, 1), 2);
        let all = m.all_atoms();
        assert_eq!(m.rho(&all), 1); // 2 bonds - 2 atoms + 1
    }
}
