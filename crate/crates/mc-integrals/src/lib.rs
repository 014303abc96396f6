//! Monte Carlo estimation of the integrals attached to elementary
//! molecules, and empirical verification of their epsilon-scaling (excess)
//! exponents.
//!
//! Sampling is uniform on the reduced coordinates (times within layer
//! windows, impact directions uniform on the sphere, velocities uniform in
//! the speed ball, positions uniform on the torus where integrated), so
//! weights stay explicit. Collision indicators are evaluated by the
//! hard-sphere root solver over enumerated periodic images.

use molecule::{classify_elementary, ElementaryKind, Molecule};
use particle_system::PhasePoint;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;
use torus_core::vec::{axpy, norm, scale, sub};
use torus_core::TorusVec;

mod restrictions;
mod scaling;

pub use restrictions::{evaluate_restrictions, Assignment};
pub use scaling::{scaling_exponent, ScalingFit, ScalingVerdict};

#[derive(Debug, Error)]
pub enum Error {
    #[error("spec molecule is not elementary")]
    NotElementary,
    #[error("fixed-end assignment must cover exactly the fixed ends ({0})")]
    FixedEndMismatch(String),
    #[error("velocity cutoff {0} below a fixed-end speed {1}")]
    CutoffTooSmall(f64, f64),
    #[error(transparent)]
    Torus(#[from] torus_core::TorusError),
    #[error(transparent)]
    Molecule(#[from] molecule::MoleculeError),
    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// A fully specified elementary-molecule integral.
#[derive(Clone)]
pub struct IntegralSpec<const D: usize> {
    pub molecule: Molecule,
    /// Values carried by the fixed ends (and referenced external points).
    pub fixed_ends: std::collections::BTreeMap<molecule::EdgeId, PhasePoint<D>>,
    pub externals: Vec<PhasePoint<D>>,
    pub epsilon: f64,
    /// Velocity cutoff V for the integrated velocities.
    pub v_cut: f64,
    /// Per-atom time windows `[(l-1) tau, l tau]`.
    pub windows: std::collections::BTreeMap<molecule::AtomId, (f64, f64)>,
    /// Time range for double-root and line-proximity searches.
    pub t_range: f64,
    /// Numeric values of named dyadic parameters in restriction bounds.
    pub params: std::collections::BTreeMap<String, f64>,
}

#[derive(Debug, Clone)]
pub struct EstimateResult {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
    pub acceptance_rate: f64,
    /// Zero acceptance over all samples: the estimate degenerated and the
    /// trivial bound is reported instead of a confidence interval.
    pub degenerate: Option<f64>,
}

impl<const D: usize> IntegralSpec<D> {
    pub fn kind(&self) -> Result<ElementaryKind> {
        classify_elementary(&self.molecule).ok_or(Error::NotElementary)
    }

    fn validate(&self) -> Result<ElementaryKind> {
        let kind = self.kind()?;
        let fixed: std::collections::BTreeSet<molecule::EdgeId> = self
            .molecule
            .edges_iter()
            .filter_map(|(id, e)| match e {
                molecule::Edge::End {
                    status: molecule::EndStatus::Fixed,
                    ..
                } => Some(id),
                _ => None,
            })
            .collect();
        let assigned: std::collections::BTreeSet<molecule::EdgeId> =
            self.fixed_ends.keys().copied().collect();
        if fixed != assigned {
            return Err(Error::FixedEndMismatch(format!(
                "fixed {fixed:?} vs assigned {assigned:?}"
            )));
        }
        for z in self.fixed_ends.values() {
            let speed = norm(&z.v);
            if speed > self.v_cut {
                return Err(Error::CutoffTooSmall(self.v_cut, speed));
            }
        }
        Ok(kind)
    }

    fn images(&self) -> Result<Vec<torus_core::ImageShift<D>>> {
        let horizon = self
            .windows
            .values()
            .map(|w| w.1.abs().max(w.0.abs()))
            .fold(self.t_range, f64::max);
        Ok(torus_core::enumerate_images::<D>(self.v_cut, horizon)?)
    }
}

/// Streaming mean/variance accumulator (merge order changes results only by
/// floating reassociation).
#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
    accepted: u64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        if x != 0.0 {
            self.accepted += 1;
        }
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn result(&self, scale: f64) -> EstimateResult {
        let var = if self.n > 1 {
            self.m2 / (self.n as f64 - 1.0)
        } else {
            0.0
        };
        EstimateResult {
            value: self.mean * scale,
            std_error: (var / self.n as f64).sqrt() * scale,
            samples: self.n,
            acceptance_rate: self.accepted as f64 / self.n.max(1) as f64,
            degenerate: None,
        }
    }
}

fn sample_sphere<const D: usize, R: Rng>(rng: &mut R) -> [f64; D] {
    loop {
        let mut v = [0.0; D];
        for c in v.iter_mut() {
            *c = rng.random::<f64>() * 2.0 - 1.0;
        }
        let n = norm(&v);
        if n > 1e-9 && n <= 1.0 {
            return scale(&v, 1.0 / n);
        }
    }
}

fn sample_ball<const D: usize, R: Rng>(rng: &mut R, radius: f64) -> [f64; D] {
    loop {
        let mut v = [0.0; D];
        for c in v.iter_mut() {
            *c = (rng.random::<f64>() * 2.0 - 1.0) * radius;
        }
        if norm(&v) <= radius {
            return v;
        }
    }
}

fn sphere_area(d: usize) -> f64 {
    match d {
        2 => 2.0 * std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI,
        _ => unreachable!("d in {{2,3}}"),
    }
}

fn ball_volume(d: usize, r: f64) -> f64 {
    match d {
        2 => std::f64::consts::PI * r * r,
        3 => 4.0 / 3.0 * std::f64::consts::PI * r * r * r,
        _ => unreachable!("d in {{2,3}}"),
    }
}

/// The one-collision kinematics of the reduced forms: given the fixed
/// pre-collision value `z1` and sampled `(t1, omega, v2)`, the remaining
/// edge values of the atom.
#[derive(Debug, Clone, Copy)]
pub struct AtomSample<const D: usize> {
    pub t1: f64,
    pub z1: PhasePoint<D>,
    pub z2: PhasePoint<D>,
    pub z3: PhasePoint<D>,
    pub z4: PhasePoint<D>,
    pub omega: [f64; D],
    /// the collision weight `[(v1 - v2)·ω]_-`
    pub weight: f64,
}

pub fn atom_kinematics<const D: usize>(
    z1: &PhasePoint<D>,
    t1: f64,
    omega: &[f64; D],
    v2: &[f64; D],
    epsilon: f64,
) -> AtomSample<D> {
    let x1 = *z1.x.coords();
    let v1 = z1.v;
    let dv = sub(&v1, v2);
    let p = torus_core::dot(&dv, omega);
    let weight = (-p).max(0.0);
    // x2 = x1 + t1 (v1 - v2) - eps*omega
    let x2 = {
        let mut x = axpy(&x1, t1, &dv);
        for k in 0..D {
            x[k] -= epsilon * omega[k];
        }
        TorusVec::new(x)
    };
    let x3 = {
        let x = axpy(&x1, t1 * p, omega);
        TorusVec::new(x)
    };
    let v3 = {
        let mut v = v1;
        for k in 0..D {
            v[k] -= p * omega[k];
        }
        v
    };
    let x4 = {
        let mut drift = dv;
        for k in 0..D {
            drift[k] -= p * omega[k];
        }
        let mut x = axpy(&x1, t1, &drift);
        for k in 0..D {
            x[k] -= epsilon * omega[k];
        }
        TorusVec::new(x)
    };
    let v4 = {
        let mut v = *v2;
        for k in 0..D {
            v[k] += p * omega[k];
        }
        v
    };
    AtomSample {
        t1,
        z1: *z1,
        z2: PhasePoint { x: x2, v: *v2 },
        z3: PhasePoint { x: x3, v: v3 },
        z4: PhasePoint { x: x4, v: v4 },
        omega: *omega,
        weight,
    }
}

/// Unbiased Monte Carlo estimate of the reduced integral of the spec.
pub fn estimate_j<const D: usize>(
    spec: &IntegralSpec<D>,
    n_samples: u64,
    seed: u64,
) -> Result<EstimateResult> {
    let kind = spec.validate()?;
    match kind {
        ElementaryKind::Two => estimate_two(spec),
        ElementaryKind::Three => estimate_one_atom(spec, n_samples, seed, false),
        ElementaryKind::Four => estimate_one_atom(spec, n_samples, seed, true),
        ElementaryKind::ThreeThreeA | ElementaryKind::ThreeThreeB => {
            estimate_two_atom(spec, n_samples, seed, false)
        }
        ElementaryKind::FourFour => estimate_two_atom(spec, n_samples, seed, true),
        ElementaryKind::TripleA | ElementaryKind::TripleT => {
            estimate_triple(spec, n_samples, seed)
        }
    }
}

/// The atom's fixed end and bond layout, normalized so the fixed value
/// plays the z1 role of the reduced form.
fn single_atom_layout<const D: usize>(
    spec: &IntegralSpec<D>,
    atom: molecule::AtomId,
) -> Result<(Option<PhasePoint<D>>, (f64, f64))> {
    let window = spec
        .windows
        .get(&atom)
        .copied()
        .unwrap_or((0.0, 1.0));
    let fixed = spec
        .molecule
        .slots(atom)?
        .into_iter()
        .find_map(|e| spec.fixed_ends.get(&e).copied());
    Ok((fixed, window))
}

/// {2}: a discrete sum over the admissible contact roots of the two fixed
/// values; deterministic.
fn estimate_two<const D: usize>(spec: &IntegralSpec<D>) -> Result<EstimateResult> {
    let atom = spec.molecule.atom_ids().next().expect("one atom");
    let window = spec.windows.get(&atom).copied().unwrap_or((0.0, 1.0));
    let mut fixed = spec.fixed_ends.values();
    let z1 = *fixed.next().expect("two fixed ends");
    let z2 = *fixed.next().expect("two fixed ends");
    let images = spec.images()?;
    let roots = particle_system::contact_roots(&z1, &z2, spec.epsilon, window, &images);
    let mut value = 0.0;
    for root in &roots {
        let sample = atom_kinematics(&z1, root.t, &root.omega, &z2.v, spec.epsilon);
        let q = evaluate_restrictions(spec, &assignment_for_atom(spec, atom, &sample))?;
        value += q;
    }
    Ok(EstimateResult {
        value,
        std_error: 0.0,
        samples: roots.len() as u64,
        acceptance_rate: if roots.is_empty() { 0.0 } else { 1.0 },
        degenerate: None,
    })
}

fn assignment_for_atom<const D: usize>(
    spec: &IntegralSpec<D>,
    atom: molecule::AtomId,
    sample: &AtomSample<D>,
) -> Assignment<D> {
    // slot mapping: the fixed (or z1-role) edge is bottom slot 0 under the
    // reduced-form convention; z2 bottom slot 1; z3/z4 the serial tops.
    let slots = spec.molecule.slots(atom).expect("atom");
    let mut a = Assignment::new();
    // bottom = slots[2], slots[3]; top = slots[0], slots[1] per Molecule
    // convention [top0, top1, bot0, bot1]; the reduced form puts (z1, z2)
    // on the incoming pair and (z3, z4) on the outgoing pair with z3 serial
    // to z1.
    a.set_edge(slots[2], sample.z1);
    a.set_edge(slots[3], sample.z2);
    a.set_edge(slots[0], sample.z3);
    a.set_edge(slots[1], sample.z4);
    a.set_time(atom, sample.t1);
    a
}

/// {3} (and {4} with the extra position/velocity integration and the
/// eps^{-(d-1)} prefactor).
fn estimate_one_atom<const D: usize>(
    spec: &IntegralSpec<D>,
    n_samples: u64,
    seed: u64,
    is_four: bool,
) -> Result<EstimateResult> {
    use rand::SeedableRng;
    let atom = spec.molecule.atom_ids().next().expect("one atom");
    let (fixed, window) = single_atom_layout(spec, atom)?;
    let z1_fixed = match (fixed, is_four) {
        (Some(z), false) => Some(z),
        (None, true) => None,
        (Some(_), true) => return Err(Error::Unsupported("{4} has no fixed end".into())),
        (None, false) => return Err(Error::Unsupported("{3} needs one fixed end".into())),
    };
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut acc = Welford::default();
    let span = window.1 - window.0;
    let mut measure = span * sphere_area(D) * ball_volume(D, spec.v_cut);
    if is_four {
        measure *= ball_volume(D, spec.v_cut); // v1 ball; x1 torus volume = 1
        measure *= spec.epsilon.powi(-(D as i32 - 1));
    }
    for _ in 0..n_samples {
        let t1 = window.0 + rng.random::<f64>() * span;
        let omega = sample_sphere::<D, _>(&mut rng);
        let v2 = sample_ball::<D, _>(&mut rng, spec.v_cut);
        let z1 = match z1_fixed {
            Some(z) => z,
            None => {
                let mut x = [0.0; D];
                for c in x.iter_mut() {
                    *c = rng.random::<f64>();
                }
                PhasePoint {
                    x: TorusVec::new(x),
                    v: sample_ball::<D, _>(&mut rng, spec.v_cut),
                }
            }
        };
        let sample = atom_kinematics(&z1, t1, &omega, &v2, spec.epsilon);
        if sample.weight == 0.0 {
            acc.push(0.0);
            continue;
        }
        let q = evaluate_restrictions(spec, &assignment_for_atom(spec, atom, &sample))?;
        acc.push(sample.weight * q);
    }
    let mut out = acc.result(measure);
    if acc.accepted == 0 {
        out.degenerate = Some(trivial_bound(spec, is_four));
    }
    Ok(out)
}

fn trivial_bound<const D: usize>(spec: &IntegralSpec<D>, is_four: bool) -> f64 {
    let span: f64 = spec
        .windows
        .values()
        .map(|w| w.1 - w.0)
        .fold(1.0, f64::max);
    let base = span * sphere_area(D) * ball_volume(D, spec.v_cut) * 2.0 * spec.v_cut;
    if is_four {
        base * ball_volume(D, spec.v_cut) * spec.epsilon.powi(-(D as i32 - 1))
    } else {
        base
    }
}

/// Identifies the two-atom structure: (parent atom, child atom, the bond's
/// role j in {2,3,4} at the parent per the reduced-form labeling).
struct PairLayout<const D: usize> {
    parent: molecule::AtomId,
    child: molecule::AtomId,
    parent_fixed: Option<PhasePoint<D>>,
    child_fixed: Option<PhasePoint<D>>,
    /// which of the parent-sample values rides the bond (2, 3 or 4)
    bond_role: u8,
}

fn pair_layout<const D: usize>(spec: &IntegralSpec<D>) -> Result<PairLayout<D>> {
    let atoms: Vec<molecule::AtomId> = spec.molecule.atom_ids().collect();
    let (parent, child) = {
        let a = atoms[0];
        let b = atoms[1];
        if spec.molecule.children(a)?.contains(&b) {
            (a, b)
        } else {
            (b, a)
        }
    };
    let slots = spec.molecule.slots(parent)?;
    // find the bond edge and the fixed edge at the parent
    let bond_slot = slots
        .iter()
        .position(|e| matches!(spec.molecule.edge(*e), Ok(molecule::Edge::Bond { .. })))
        .ok_or_else(|| Error::Unsupported("pair without bond".into()))?;
    let fixed_slot = slots
        .iter()
        .position(|e| spec.fixed_ends.contains_key(e));
    // reduced-form roles at the parent: bottom slots are (z1, z2); top are
    // (z3, z4) with z3 serial to z1. slots = [top0, top1, bot0, bot1].
    // Normalize: the fixed end (or an arbitrary bottom end for {44}) plays
    // z1 = bottom slot; role of any slot index:
    let role_of = |slot: usize, z1_slot: usize| -> u8 {
        // z1's serial partner (same line) is z3
        match (slot, z1_slot) {
            _ if slot == z1_slot => 1,
            // same column = serial
            (0, 2) | (2, 0) | (1, 3) | (3, 1) => 3,
            _ => {
                // the other bottom-or-top of the same row as z1 is z2; the
                // remaining one z4
                let same_row = (slot < 2) == (z1_slot < 2);
                if same_row {
                    2
                } else {
                    4
                }
            }
        }
    };
    let z1_slot = fixed_slot.unwrap_or(2.min(bond_slot ^ 1));
    let bond_role = role_of(bond_slot, z1_slot);
    let parent_fixed = fixed_slot.map(|s| spec.fixed_ends[&slots[s]]);
    let child_fixed = spec
        .molecule
        .slots(child)?
        .into_iter()
        .find_map(|e| spec.fixed_ends.get(&e).copied());
    Ok(PairLayout {
        parent,
        child,
        parent_fixed,
        child_fixed,
        bond_role,
    })
}

/// {33A}/{33B} (and {44} with the extra endpoint integrations): the outer
/// atom is sampled in reduced coordinates and the inner atom contributes
/// the collision indicator evaluated by the root solver, summed over
/// admissible roots.
fn estimate_two_atom<const D: usize>(
    spec: &IntegralSpec<D>,
    n_samples: u64,
    seed: u64,
    is_44: bool,
) -> Result<EstimateResult> {
    use rand::SeedableRng;
    let layout = pair_layout(spec)?;
    let images = spec.images()?;
    let w1 = spec
        .windows
        .get(&layout.parent)
        .copied()
        .unwrap_or((0.0, 1.0));
    let w2 = spec
        .windows
        .get(&layout.child)
        .copied()
        .unwrap_or((0.0, 1.0));
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut acc = Welford::default();
    let span = w1.1 - w1.0;
    let mut measure = span * sphere_area(D) * ball_volume(D, spec.v_cut);
    if is_44 {
        // extra (x1, v1, x7, v7) integrations and the eps^{-2(d-1)} prefactor
        measure *= ball_volume(D, spec.v_cut) * ball_volume(D, spec.v_cut);
        measure *= spec.epsilon.powi(-2 * (D as i32 - 1));
    }
    for _ in 0..n_samples {
        let (z1, z7) = if is_44 {
            let rand_point = |rng: &mut ChaCha12Rng| {
                let mut x = [0.0; D];
                for c in x.iter_mut() {
                    *c = rng.random::<f64>();
                }
                PhasePoint {
                    x: TorusVec::new(x),
                    v: sample_ball::<D, _>(rng, spec.v_cut),
                }
            };
            (rand_point(&mut rng), rand_point(&mut rng))
        } else {
            (
                layout.parent_fixed.expect("{33} parent fixed end"),
                layout.child_fixed.expect("{33} child fixed end"),
            )
        };
        let t1 = w1.0 + rng.random::<f64>() * span;
        let omega = sample_sphere::<D, _>(&mut rng);
        let v2 = sample_ball::<D, _>(&mut rng, spec.v_cut);
        let sample = atom_kinematics(&z1, t1, &omega, &v2, spec.epsilon);
        if sample.weight == 0.0 {
            acc.push(0.0);
            continue;
        }
        let z_bond = match layout.bond_role {
            2 => sample.z2,
            3 => sample.z3,
            _ => sample.z4,
        };
        // inner collision: roots before t1 within the child's window
        let window = (w2.0, w2.1.min(t1));
        let roots =
            particle_system::contact_roots(&z_bond, &z7, spec.epsilon, window, &images);
        let mut q_sum = 0.0;
        for root in &roots {
            let inner = atom_kinematics(&z_bond, root.t, &root.omega, &z7.v, spec.epsilon);
            let mut a = assignment_for_atom(spec, layout.parent, &sample);
            merge_atom_assignment(spec, layout.child, &inner, &mut a);
            q_sum += evaluate_restrictions(spec, &a)?;
        }
        acc.push(sample.weight * q_sum);
    }
    let mut out = acc.result(measure);
    if acc.accepted == 0 {
        out.degenerate = Some(trivial_bound(spec, false));
    }
    Ok(out)
}

fn merge_atom_assignment<const D: usize>(
    spec: &IntegralSpec<D>,
    atom: molecule::AtomId,
    sample: &AtomSample<D>,
    a: &mut Assignment<D>,
) {
    let slots = spec.molecule.slots(atom).expect("atom");
    a.set_edge_keep(slots[2], sample.z1);
    a.set_edge_keep(slots[3], sample.z2);
    a.set_edge_keep(slots[0], sample.z3);
    a.set_edge_keep(slots[1], sample.z4);
    a.set_time(atom, sample.t1);
}

/// {333A}/{334T}: the {33A} pair machinery plus the third atom's collision
/// indicator.
fn estimate_triple<const D: usize>(
    spec: &IntegralSpec<D>,
    n_samples: u64,
    seed: u64,
) -> Result<EstimateResult> {
    use rand::SeedableRng;
    // identify (n1 parent, n2 child, n3 third)
    let atoms: Vec<molecule::AtomId> = spec.molecule.atom_ids().collect();
    // the {33A} pair is the two atoms with fixed ends in the TripleT case;
    // for TripleA the third also has one. Find the bonded deg-3 pair whose
    // bond is unique; delegate per-branch kinematics to the pair machinery
    // plus the extra indicator.
    let kind = spec.kind()?;
    let third = match kind {
        ElementaryKind::TripleT => atoms
            .iter()
            .copied()
            .find(|&a| spec.molecule.degree(a).unwrap_or(0) == 4)
            .ok_or_else(|| Error::Unsupported("no deg-4 atom in {334T}".into()))?,
        _ => {
            // TripleA: the third atom is bonded to exactly one pair atom;
            // take the endpoint of the 2-bond path
            let mut third = None;
            for &a in &atoms {
                let nbrs = spec.molecule.neighbours(a)?;
                if nbrs.len() == 1 {
                    third = Some(a);
                }
            }
            // a path has two endpoints; either labeling gives the same
            // integral; take the smaller id deterministically
            third.ok_or_else(|| Error::Unsupported("no path endpoint in {333A}".into()))?
        }
    };
    let pair: Vec<molecule::AtomId> = atoms.iter().copied().filter(|&a| a != third).collect();
    let (n1, n2) = {
        let (a, b) = (pair[0], pair[1]);
        if spec.molecule.children(a)?.contains(&b) {
            (a, b)
        } else {
            (b, a)
        }
    };
    let images = spec.images()?;
    let w1 = spec.windows.get(&n1).copied().unwrap_or((0.0, 1.0));
    let w2 = spec.windows.get(&n2).copied().unwrap_or((0.0, 1.0));
    let w3 = spec.windows.get(&third).copied().unwrap_or((0.0, 1.0));
    let z1 = spec
        .molecule
        .slots(n1)?
        .into_iter()
        .find_map(|e| spec.fixed_ends.get(&e).copied())
        .ok_or_else(|| Error::Unsupported("triple: n1 fixed end missing".into()))?;
    let z7 = spec
        .molecule
        .slots(n2)?
        .into_iter()
        .find_map(|e| spec.fixed_ends.get(&e).copied())
        .ok_or_else(|| Error::Unsupported("triple: n2 fixed end missing".into()))?;
    let z10 = spec
        .molecule
        .slots(third)
        .ok()
        .and_then(|slots| slots.into_iter().find_map(|e| spec.fixed_ends.get(&e).copied()));

    // bond role of n1 -> n2 at n1
    let slots_n1 = spec.molecule.slots(n1)?;
    let bond_to_n2 = slots_n1
        .iter()
        .position(|e| match spec.molecule.edge(*e) {
            Ok(molecule::Edge::Bond { parent, child, .. }) => {
                (*parent == n1 && *child == n2) || (*parent == n2 && *child == n1)
            }
            _ => false,
        })
        .ok_or_else(|| Error::Unsupported("triple: n1-n2 bond missing".into()))?;
    let fixed_slot_n1 = slots_n1
        .iter()
        .position(|e| spec.fixed_ends.contains_key(e))
        .expect("n1 fixed end located");
    let role_of = |slot: usize, z1_slot: usize| -> u8 {
        match (slot, z1_slot) {
            _ if slot == z1_slot => 1,
            (0, 2) | (2, 0) | (1, 3) | (3, 1) => 3,
            _ => {
                if (slot < 2) == (z1_slot < 2) {
                    2
                } else {
                    4
                }
            }
        }
    };
    let bond_role = role_of(bond_to_n2, fixed_slot_n1);
    // third attachment: bonded to n1, n2 or both
    let third_to_n1 = spec.molecule.bond_multiplicity(third, n1) > 0;
    let third_to_n2 = spec.molecule.bond_multiplicity(third, n2) > 0;

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut acc = Welford::default();
    let span = w1.1 - w1.0;
    let measure = span * sphere_area(D) * ball_volume(D, spec.v_cut);
    for _ in 0..n_samples {
        let t1 = w1.0 + rng.random::<f64>() * span;
        let omega = sample_sphere::<D, _>(&mut rng);
        let v2 = sample_ball::<D, _>(&mut rng, spec.v_cut);
        let sample = atom_kinematics(&z1, t1, &omega, &v2, spec.epsilon);
        if sample.weight == 0.0 {
            acc.push(0.0);
            continue;
        }
        let z_bond = match bond_role {
            2 => sample.z2,
            3 => sample.z3,
            _ => sample.z4,
        };
        let window2 = (w2.0, w2.1.min(t1));
        let roots =
            particle_system::contact_roots(&z_bond, &z7, spec.epsilon, window2, &images);
        let mut q_sum = 0.0;
        for root in &roots {
            let inner = atom_kinematics(&z_bond, root.t, &root.omega, &z7.v, spec.epsilon);
            // the third collision partner values
            let (za, zb) = if third_to_n1 && third_to_n2 {
                // {334T}: the bond n1->third carries a parent-sample value;
                // the bond n2->third carries an inner-sample value
                let z_l = if bond_role == 3 { sample.z4 } else { sample.z3 };
                (inner.z3, z_l)
            } else if third_to_n2 {
                // {333A} case (a): third collides with z10 from n2's side
                let Some(z10) = z10 else {
                    acc.push(0.0);
                    continue;
                };
                (inner.z3, z10)
            } else {
                // {333A} case (c): third collides with z10 from n1's side
                let Some(z10) = z10 else {
                    acc.push(0.0);
                    continue;
                };
                let z_l = if bond_role == 3 { sample.z4 } else { sample.z3 };
                (z_l, z10)
            };
            let window3 = (w3.0, w3.1.min(root.t.min(t1)));
            let roots3 =
                particle_system::contact_roots(&za, &zb, spec.epsilon, window3, &images);
            if roots3.is_empty() {
                continue;
            }
            let mut a = assignment_for_atom(spec, n1, &sample);
            merge_atom_assignment(spec, n2, &inner, &mut a);
            let third_sample =
                atom_kinematics(&za, roots3[0].t, &roots3[0].omega, &zb.v, spec.epsilon);
            merge_atom_assignment(spec, third, &third_sample, &mut a);
            q_sum += evaluate_restrictions(spec, &a)? * roots3.len() as f64;
        }
        acc.push(sample.weight * q_sum);
    }
    let mut out = acc.result(measure);
    if acc.accepted == 0 {
        out.degenerate = Some(trivial_bound(spec, false));
    }
    Ok(out)
}

/// CSV row for the results table.
pub fn csv_row<const D: usize>(
    spec: &IntegralSpec<D>,
    result: &EstimateResult,
    seed: u64,
) -> String {
    let kind = spec
        .kind()
        .map(|k| k.to_string())
        .unwrap_or_else(|_| "?".into());
    let restr: Vec<String> = spec
        .molecule
        .restrictions
        .iter()
        .map(molecule::serialize::restriction_to_string)
        .collect();
    format!(
        "{kind},{},{:.6e},{:.6e},{:.6e},{},{}",
        restr.join(";"),
        spec.epsilon,
        result.value,
        result.std_error,
        result.samples,
        seed
    )
}
