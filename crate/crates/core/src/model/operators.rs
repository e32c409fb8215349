//! Qubit operators embedded into the joint Hilbert space.
//!
//! Mode 0 is the emitter, modes 1 and 2 the sensors. The joint space is
//! `mode0 ⊗ mode1 ⊗ mode2`, so mode 0 is the most significant bit of a state
//! index. Each local space has `|0> = ground`, `|1> = excited`.

use nalgebra::DMatrix;

use crate::C64;

pub type ComplexMatrix = DMatrix<C64>;

/// The four single-qubit operators spanning all 2x2 matrices, in basis order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LocalOp {
    Identity = 0,
    Lower = 1,
    Raise = 2,
    Number = 3,
}

impl LocalOp {
    pub const ALL: [LocalOp; 4] = [LocalOp::Identity, LocalOp::Lower, LocalOp::Raise, LocalOp::Number];

    pub fn from_digit(d: usize) -> Self {
        Self::ALL[d]
    }

    pub fn matrix(self) -> ComplexMatrix {
        let (o, l) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
        match self {
            LocalOp::Identity => DMatrix::from_row_slice(2, 2, &[l, o, o, l]),
            LocalOp::Lower => DMatrix::from_row_slice(2, 2, &[o, l, o, o]),
            LocalOp::Raise => DMatrix::from_row_slice(2, 2, &[o, o, l, o]),
            LocalOp::Number => DMatrix::from_row_slice(2, 2, &[o, o, o, l]),
        }
    }

    /// Number of lowering/raising factors; the number operator counts twice.
    pub fn order(self) -> u32 {
        match self {
            LocalOp::Identity => 0,
            LocalOp::Lower | LocalOp::Raise => 1,
            LocalOp::Number => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            LocalOp::Identity => "1",
            LocalOp::Lower => "a",
            LocalOp::Raise => "a†",
            LocalOp::Number => "a†a",
        }
    }
}

pub fn identity(dim: usize) -> ComplexMatrix {
    DMatrix::identity(dim, dim)
}

/// Embeds a local 2x2 operator acting on `mode` into an `n_modes`-qubit space.
pub fn embed(local: &ComplexMatrix, mode: usize, n_modes: usize) -> ComplexMatrix {
    assert!(mode < n_modes, "mode {mode} outside {n_modes}-mode space");
    assert_eq!(local.shape(), (2, 2));
    let mut out = DMatrix::identity(1, 1);
    for m in 0..n_modes {
        out = if m == mode { out.kronecker(local) } else { out.kronecker(&identity(2)) };
    }
    out
}

/// Lowering operator of `mode` in the joint space.
pub fn lowering(mode: usize, n_modes: usize) -> ComplexMatrix {
    embed(&LocalOp::Lower.matrix(), mode, n_modes)
}

/// Tensor product of one local operator per mode.
pub fn product(ops: &[LocalOp]) -> ComplexMatrix {
    ops.iter().fold(DMatrix::identity(1, 1), |acc: ComplexMatrix, op| acc.kronecker(&op.matrix()))
}

pub fn dagger(m: &ComplexMatrix) -> ComplexMatrix {
    m.adjoint()
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
