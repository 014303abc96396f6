//! Molecule construction from abstract collision histories: atoms are
//! collisions between particle lines, entered in time order (earliest
//! first). This is the canonical way to obtain a valid full molecule; every
//! structural invariant holds by construction.

use crate::{Atom, AtomId, Edge, EdgeId, EndDir, EndStatus, Molecule};
use std::collections::BTreeMap;

/// Time-ordered collision list over a fixed set of particle lines.
#[derive(Debug, Clone)]
pub struct HistoryBuilder {
    lines: usize,
    collisions: Vec<(usize, usize, u32)>, // (line a, line b, layer)
}

impl HistoryBuilder {
    pub fn new(lines: usize) -> Self {
        Self {
            lines,
            collisions: Vec::new(),
        }
    }

    /// Appends a collision between two distinct lines in layer 1.
    pub fn collide(self, a: usize, b: usize) -> Self {
        self.collide_in_layer(a, b, 1)
    }

    /// Appends a collision in the given layer. Layers must be non-decreasing
    /// along the sequence for the result to be valid.
    pub fn collide_in_layer(mut self, a: usize, b: usize, layer: u32) -> Self {
        assert!(a != b && a < self.lines && b < self.lines);
        self.collisions.push((a, b, layer));
        self
    }

    pub fn push(&mut self, a: usize, b: usize, layer: u32) {
        assert!(a != b && a < self.lines && b < self.lines);
        self.collisions.push((a, b, layer));
    }

    pub fn len(&self) -> usize {
        self.collisions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.collisions.is_empty()
    }

    pub fn collisions(&self) -> &[(usize, usize, u32)] {
        &self.collisions
    }

    /// Builds the molecule: atom ids are collision indices (0 = earliest);
    /// the time order is the insertion order.
    pub fn build(&self) -> Molecule {
        let mut m = Molecule::default();
        // Pending top slot per line: the (atom, slot) waiting for the line's
        // next (later) collision, or None if the line has not collided yet.
        let mut pending: Vec<Option<(AtomId, u8)>> = vec![None; self.lines];

        for (idx, &(la, lb, layer)) in self.collisions.iter().enumerate() {
            let id = idx as AtomId;
            let mut top = [0; 2];
            let mut bot = [0; 2];
            for (slot, &line) in [la, lb].iter().enumerate() {
                let slot = slot as u8;
                // Bottom edge: bond to the line's previous collision, or a
                // bottom free end.
                let bot_edge = match pending[line] {
                    Some((child, c_slot)) => {
                        let e = m.alloc_edge(Edge::Bond {
                            parent: id,
                            p_slot: slot,
                            child,
                            c_slot,
                        });
                        // rewire the child's pending top slot to this bond
                        let child_atom = m.atoms.get_mut(&child).expect("child exists");
                        child_atom.top[c_slot as usize] = e;
                        e
                    }
                    None => m.alloc_edge(Edge::End {
                        at: id,
                        slot,
                        dir: EndDir::Bottom,
                        status: EndStatus::Free,
                    }),
                };
                bot[slot as usize] = bot_edge;
                // Top edge: provisionally a free end; replaced if the line
                // collides again later.
                let top_edge = m.alloc_edge(Edge::End {
                    at: id,
                    slot,
                    dir: EndDir::Top,
                    status: EndStatus::Free,
                });
                top[slot as usize] = top_edge;
                pending[line] = Some((id, slot));
            }
            m.atoms.insert(id, Atom { layer, top, bot });
            m.time_order.push(id);
        }
        // Drop the provisional top ends that were superseded by bonds.
        let supersede: Vec<EdgeId> = m
            .edges
            .iter()
            .filter_map(|(&eid, e)| match e {
                Edge::End {
                    at,
                    slot,
                    dir: EndDir::Top,
                    ..
                } if m.atoms[at].top[*slot as usize] != eid => Some(eid),
                _ => None,
            })
            .collect();
        for e in supersede {
            m.edges.remove(&e);
        }
        m
    }

    /// The two particle lines through each atom, in slot order.
    pub fn atom_lines(&self) -> BTreeMap<AtomId, (usize, usize)> {
        self.collisions
            .iter()
            .enumerate()
            .map(|(i, &(a, b, _))| (i as AtomId, (a, b)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_of_collisions_on_one_pair() {
        let m = HistoryBuilder::new(2)
            .collide(0, 1)
            .collide(0, 1)
            .collide(0, 1)
            .build();
        assert!(m.validate().is_empty());
        assert_eq!(m.atom_count(), 3);
        // atom 2 (latest) is a parent of atom 1, atom 1 of atom 0
        assert_eq!(m.parents(0).unwrap(), vec![1, 1]);
        assert_eq!(m.parents(1).unwrap(), vec![2, 2]);
        assert_eq!(m.particle_lines().unwrap().len(), 2);
    }

    #[test]
    fn time_order_is_children_first() {
        let m = HistoryBuilder::new(3).collide(0, 1).collide(1, 2).build();
        let order = m.effective_time_order();
        assert_eq!(order, vec![0, 1]);
        let topo = m.topological_order().unwrap();
        // atom 0 has no children
        assert_eq!(topo[0], 0);
    }
}
