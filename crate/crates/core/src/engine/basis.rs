//! Complete operator basis for a set of qubit modes.
//!
//! Element `i` has base-4 digits `d_m = (i / 4^m) % 4`, one per mode, each
//! selecting `1, a, a†, a†a` on that mode. The emitter is the least
//! significant digit, so the emitter-only basis is `(1, σ, σ†, σ†σ)`.

use crate::model::{product, ComplexMatrix, LocalOp};
use crate::{JointModel, Mode, C64};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObservableBasis {
    n_modes: usize,
}

impl ObservableBasis {
    pub fn new(n_modes: usize) -> Self {
        assert!((1..=3).contains(&n_modes), "basis supports 1 to 3 qubit modes");
        Self { n_modes }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn len(&self) -> usize {
        1 << (2 * self.n_modes)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn identity_index(&self) -> usize {
        0
    }

    fn stride(&self, mode: Mode) -> usize {
        let m = mode.index();
        assert!(m < self.n_modes, "{mode} is not part of this basis");
        1 << (2 * m)
    }

    pub fn lowering_index(&self, mode: Mode) -> usize {
        self.stride(mode)
    }

    pub fn raising_index(&self, mode: Mode) -> usize {
        2 * self.stride(mode)
    }

    /// Index of `a†a` for the given mode.
    pub fn number_index(&self, mode: Mode) -> usize {
        3 * self.stride(mode)
    }

    /// Local operators of element `i`, ordered by mode.
    pub fn ops(&self, i: usize) -> Vec<LocalOp> {
        (0..self.n_modes).map(|m| LocalOp::from_digit((i >> (2 * m)) & 3)).collect()
    }

    pub fn index_of(&self, ops: &[LocalOp]) -> usize {
        assert_eq!(ops.len(), self.n_modes);
        ops.iter().enumerate().map(|(m, op)| (*op as usize) << (2 * m)).sum()
    }

    pub fn label(&self, i: usize) -> String {
        let names = ["σ", "ζ1", "ζ2"];
        let parts: Vec<String> = self
            .ops(i)
            .iter()
            .zip(names)
            .filter(|(op, _)| **op != LocalOp::Identity)
            .map(|(op, name)| match op {
                LocalOp::Lower => name.to_string(),
                LocalOp::Raise => format!("{name}†"),
                LocalOp::Number => format!("{name}†{name}"),
                LocalOp::Identity => unreachable!(),
            })
            .collect();
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join(" ")
        }
    }

    /// Joint-space matrix of element `i`.
    pub fn matrix(&self, i: usize) -> ComplexMatrix {
        product(&self.ops(i))
    }

    /// Number of sensor lowering/raising factors in element `i` (`a†a` counts twice).
    pub fn sensor_order(&self, i: usize) -> u32 {
        self.ops(i).iter().skip(1).map(|op| op.order()).sum()
    }

    /// Coefficients of `x` in this basis. Exact: the basis spans all matrices.
    pub fn expand(&self, x: &ComplexMatrix) -> Vec<C64> {
        let n = self.n_modes;
        let dim = 1usize << n;
        assert_eq!(x.shape(), (dim, dim));
        let mut coef = vec![C64::default(); self.len()];
        // |r><c| on one qubit: |0><0| = 1 - a†a, |0><1| = a, |1><0| = a†, |1><1| = a†a
        let local: [[&[(usize, f64)]; 2]; 2] = [[&[(0, 1.0), (3, -1.0)], &[(1, 1.0)]], [&[(2, 1.0)], &[(3, 1.0)]]];
        for r in 0..dim {
            for c in 0..dim {
                let v = x[(r, c)];
                if v == C64::default() {
                    continue;
                }
                let mut terms: Vec<(usize, f64)> = vec![(0, 1.0)];
                for m in 0..n {
                    let bit = n - 1 - m;
                    let pieces = local[(r >> bit) & 1][(c >> bit) & 1];
                    terms = terms
                        .iter()
                        .flat_map(|&(idx, w)| pieces.iter().map(move |&(d, pw)| (idx + (d << (2 * m)), w * pw)))
                        .collect();
                }
                for (idx, w) in terms {
                    coef[idx] += v * w;
                }
            }
        }
        coef
    }

    /// Expectation values `Tr(rho c_i)` of every element.
    pub fn moments_of(&self, rho: &ComplexMatrix) -> Vec<C64> {
        (0..self.len()).map(|i| (rho * self.matrix(i)).trace()).collect()
    }
}

/// Complete basis for the modes of `model`.
pub fn build_basis(model: &JointModel) -> ObservableBasis {
    ObservableBasis::new(model.n_modes())
}
