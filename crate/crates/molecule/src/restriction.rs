//! Restriction records: symbolic predicates attached to molecules by
//! indicator decompositions. The combinatorial layer never inspects real
//! phase points; numeric evaluation lives in the Monte Carlo crate.

use crate::excess::Rational;
use crate::{AtomId, EdgeId};

/// A symbolic magnitude in (0, 1]: a rational power of epsilon, the
/// sub-polynomial quantity `eps* = exp(-sqrt(|log eps|))`, or a named dyadic
/// parameter ranging over `[eps^min_pow, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum Bound {
    Eps(Rational),
    EpsStar,
    Dyadic { name: String, min_pow: Rational },
}

impl Bound {
    pub fn eps(num: i64, den: i64) -> Self {
        Bound::Eps(Rational::new(num, den))
    }

    /// Numeric value at a configured epsilon; dyadic parameters resolve
    /// through the supplied assignment.
    pub fn value(&self, eps: f64, params: &dyn Fn(&str) -> f64) -> f64 {
        match self {
            Bound::Eps(r) => eps.powf(*r.numer() as f64 / *r.denom() as f64),
            Bound::EpsStar => eps_star(eps),
            Bound::Dyadic { name, .. } => params(name),
        }
    }
}

/// `eps* = exp(-sqrt(|log eps|))`: vanishes slower than any power of eps and
/// faster than any negative power of `|log eps|`.
pub fn eps_star(eps: f64) -> f64 {
    (-(-eps.ln()).sqrt()).exp()
}

/// The second operand of a binary predicate: another edge of the molecule or
/// an external phase point (index into the restriction set's external list).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Edge(EdgeId),
    External(usize),
}

/// Predicate templates used by the propositions. `|.|_T` is the torus norm;
/// edge values `z_e = (x_e, v_e)`; fixed ends carry the value of their
/// paired free end.
#[derive(Debug, Clone, PartialEq)]
pub enum Restriction {
    /// `|t_a - t_b| >= bound`
    TimeSepAtLeast { a: AtomId, b: AtomId, bound: Bound },
    /// `|t_a - t_b| <= bound` (weak degeneracy of a pair when bound = eps^{1/(8d)})
    TimeSepAtMost { a: AtomId, b: AtomId, bound: Bound },
    /// `min(|x_e1 - x_.|_T, |v_e1 - v_.|) <= bound`
    PhaseProxAtMost { e1: EdgeId, to: Target, bound: Bound },
    /// `max(|x_e1 - x_.|_T, |v_e1 - v_.|) >= bound`
    PhaseSepAtLeast { e1: EdgeId, to: Target, bound: Bound },
    /// `max(|x_e1 - x_.|_T, |v_e1 - v_.|) <= bound` (strong degeneracy, good {44})
    PhaseProxBothAtMost { e1: EdgeId, to: Target, bound: Bound },
    /// `|v_e1 - v_.| <= bound` (weak degeneracy at one atom)
    VelProxAtMost { e1: EdgeId, to: Target, bound: Bound },
    /// `|v_e1 - v_.| >= bound`
    VelSepAtLeast { e1: EdgeId, to: Target, bound: Bound },
    /// at least two admissible contact roots for the trajectories of e1, e2
    DoubleRoot { e1: EdgeId, e2: EdgeId },
    /// `inf_t |x_e1 - x_. + t (v_e1 - v_.)|_T >= bound`
    LineSepAtLeast { e1: EdgeId, to: Target, bound: Bound },
    /// `inf_t |x_e1 - x_. + t (v_e1 - v_.)|_T <= bound`
    LineProxAtMost { e1: EdgeId, to: Target, bound: Bound },
    /// long bond: `|t_a - t_b| >= eps*`
    LongBond { a: AtomId, b: AtomId },
    /// strong degeneracy marker for the pair (n, n') with witness edges
    StrongDegeneracy {
        n: AtomId,
        n_prime: AtomId,
        e: EdgeId,
        e_prime: EdgeId,
    },
}

impl Restriction {
    /// The long-bond time separation if this restriction is one, normalized
    /// so `a < b`.
    pub fn as_long_bond(&self) -> Option<(AtomId, AtomId)> {
        match self {
            Restriction::LongBond { a, b } => Some((*a.min(b), *a.max(b))),
            Restriction::TimeSepAtLeast {
                a,
                b,
                bound: Bound::EpsStar,
            } => Some((*a.min(b), *a.max(b))),
            _ => None,
        }
    }
}
