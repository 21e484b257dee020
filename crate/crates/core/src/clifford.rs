//! The 24-element single-qubit Clifford group.
//!
//! Elements are stored as SU(2) matrices modulo global phase. Each element
//! carries a decomposition into native operations: physical equatorial pulses
//! (axis a multiple of π/2, angle ±π/2 or π) and zero-cost virtual Z
//! rotations. Decompositions minimise the number of physical pulses, then the
//! total number of operations.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::Rng;

pub type Unitary = [[Complex64; 2]; 2];

/// One native operation, in execution order within a decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NativeOp {
    /// Rotation by `angle` about the equatorial axis at `quarter · π/2`.
    Pulse { quarter: u8, angle: f64 },
    /// Frame update by `angle` about Z.
    VirtualZ(f64),
}

impl NativeOp {
    pub fn is_physical(&self) -> bool {
        matches!(self, NativeOp::Pulse { .. })
    }

    pub fn unitary(&self) -> Unitary {
        match *self {
            NativeOp::Pulse { quarter, angle } => {
                let phi = f64::from(quarter) * FRAC_PI_2;
                rotation(angle, [phi.cos(), phi.sin(), 0.0])
            }
            NativeOp::VirtualZ(angle) => rotation(angle, [0.0, 0.0, 1.0]),
        }
    }
}

/// `exp(−i θ n·σ / 2)`.
pub fn rotation(theta: f64, n: [f64; 3]) -> Unitary {
    let (s, c) = (theta / 2.0).sin_cos();
    let i = Complex64::i();
    [
        [Complex64::new(c, 0.0) - i * s * n[2], (-i * n[0] - n[1]) * s],
        [(-i * n[0] + n[1]) * s, Complex64::new(c, 0.0) + i * s * n[2]],
    ]
}

pub fn matmul(a: &Unitary, b: &Unitary) -> Unitary {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn identity() -> Unitary {
    let (o, z) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    [[o, z], [z, o]]
}

/// `|tr(A†B)|/2`: 1 exactly when the two agree up to global phase.
pub fn phase_insensitive_overlap(a: &Unitary, b: &Unitary) -> f64 {
    let mut tr = Complex64::new(0.0, 0.0);
    for i in 0..2 {
        for k in 0..2 {
            tr += a[k][i].conj() * b[k][i];
        }
    }
    tr.norm() / 2.0
}

pub fn equal_up_to_phase(a: &Unitary, b: &Unitary, tol: f64) -> bool {
    (1.0 - phase_insensitive_overlap(a, b)).abs() < tol
}

#[derive(Debug, Clone)]
pub struct CliffordElement {
    pub index: usize,
    pub unitary: Unitary,
    /// Native operations, first to last.
    pub decomposition: Vec<NativeOp>,
}

impl CliffordElement {
    pub fn physical_pulses(&self) -> usize {
        self.decomposition.iter().filter(|op| op.is_physical()).count()
    }
}

/// The group with precomputed multiplication and inverse tables.
#[derive(Debug, Clone)]
pub struct CliffordGroup {
    elements: Vec<CliffordElement>,
    /// `product[a][b]`: apply `a`, then `b`.
    product: Vec<[usize; 24]>,
    inverse: [usize; 24],
}

fn native_ops() -> Vec<(NativeOp, u32)> {
    let mut ops = vec![
        (NativeOp::VirtualZ(FRAC_PI_2), 0),
        (NativeOp::VirtualZ(-FRAC_PI_2), 0),
        (NativeOp::VirtualZ(PI), 0),
    ];
    for quarter in 0..4 {
        for angle in [FRAC_PI_2, -FRAC_PI_2, PI] {
            ops.push((NativeOp::Pulse { quarter, angle }, 1));
        }
    }
    ops
}

impl CliffordGroup {
    pub fn new() -> Self {
        let ops = native_ops();
        let find = |list: &[Unitary], u: &Unitary| list.iter().position(|v| equal_up_to_phase(v, u, 1e-9));

        // Closure of the native set; the identity is element 0.
        let mut unitaries = vec![identity()];
        let mut frontier = 0;
        while frontier < unitaries.len() {
            let u = unitaries[frontier];
            for (op, _) in &ops {
                let v = matmul(&op.unitary(), &u);
                if find(&unitaries, &v).is_none() {
                    unitaries.push(v);
                }
            }
            frontier += 1;
        }
        assert_eq!(unitaries.len(), 24, "native set must generate the Clifford group");

        // Cheapest decompositions by relaxation on (pulses, ops) cost.
        let mut best: Vec<Option<((u32, usize), Vec<NativeOp>)>> = vec![None; 24];
        best[0] = Some(((0, 0), Vec::new()));
        let mut changed = true;
        while changed {
            changed = false;
            for from in 0..24 {
                let Some((cost, seq)) = best[from].clone() else { continue };
                for (op, c) in &ops {
                    let to = find(&unitaries, &matmul(&op.unitary(), &unitaries[from])).unwrap();
                    let cand = (cost.0 + c, cost.1 + 1);
                    if best[to].as_ref().is_none_or(|(old, _)| cand < *old) {
                        let mut s = seq.clone();
                        s.push(*op);
                        best[to] = Some((cand, s));
                        changed = true;
                    }
                }
            }
        }

        let elements: Vec<CliffordElement> = unitaries
            .iter()
            .zip(best)
            .enumerate()
            .map(|(index, (u, b))| CliffordElement {
                index,
                unitary: *u,
                decomposition: b.expect("all elements reachable").1,
            })
            .collect();

        let mut product = vec![[0usize; 24]; 24];
        let mut inverse = [0usize; 24];
        for a in 0..24 {
            for b in 0..24 {
                let ab = matmul(&unitaries[b], &unitaries[a]);
                product[a][b] = find(&unitaries, &ab).expect("group closure");
                if product[a][b] == 0 {
                    inverse[a] = b;
                }
            }
        }
        Self {
            elements,
            product,
            inverse,
        }
    }

    /// Process-wide instance.
    pub fn shared() -> &'static CliffordGroup {
        static GROUP: OnceLock<CliffordGroup> = OnceLock::new();
        GROUP.get_or_init(CliffordGroup::new)
    }

    pub fn elements(&self) -> &[CliffordElement] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &CliffordElement {
        &self.elements[i]
    }

    /// Index of "apply `first`, then `second`".
    pub fn compose(&self, first: usize, second: usize) -> usize {
        self.product[first][second]
    }

    pub fn inverse(&self, i: usize) -> usize {
        self.inverse[i]
    }

    pub fn find(&self, u: &Unitary) -> Option<usize> {
        self.elements
            .iter()
            .position(|e| equal_up_to_phase(&e.unitary, u, 1e-9))
    }

    /// Mean physical pulses per element.
    pub fn gates_per_clifford(&self) -> f64 {
        let total: usize = self.elements.iter().map(CliffordElement::physical_pulses).sum();
        total as f64 / self.elements.len() as f64
    }

    /// `L` uniform draws plus the recovery element that undoes them.
    pub fn random_sequence<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> (Vec<usize>, usize) {
        let seq: Vec<usize> = (0..len).map(|_| rng.random_range(0..24)).collect();
        let net = seq.iter().fold(0, |acc, &g| self.compose(acc, g));
        (seq, self.inverse(net))
    }
}

impl Default for CliffordGroup {
    fn default() -> Self {
        Self::new()
    }
}

/// The 24 elements with their decompositions.
pub fn clifford_table() -> Vec<CliffordElement> {
    CliffordGroup::shared().elements().to_vec()
}
