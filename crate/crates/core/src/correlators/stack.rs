//! Assembly of block systems built from copies of the moment generator.

use crate::engine::{LinearSystem, MomentSystem};
use crate::model::ComplexMatrix;
use crate::C64;

/// Block-structured generator: moment blocks evolve with `M(t)`, may be fed by
/// other blocks through constant maps, and scalar accumulators integrate
/// single components.
pub(crate) struct StackBuilder<'a> {
    sys: &'a MomentSystem,
    blocks: Vec<(usize, usize)>,
    scale: Vec<f64>,
    couplings: Vec<(usize, usize, ComplexMatrix, f64)>,
    reads: Vec<(usize, usize, usize, f64)>,
}

impl<'a> StackBuilder<'a> {
    pub fn new(sys: &'a MomentSystem) -> Self {
        Self { sys, blocks: Vec::new(), scale: Vec::new(), couplings: Vec::new(), reads: Vec::new() }
    }

    /// Adds a block evolving with `M(t)` whose entries are of order `magnitude * moment_scale`.
    pub fn moment_block(&mut self, magnitude: f64) -> usize {
        let n = self.sys.dim();
        self.blocks.push((self.scale.len(), n));
        self.scale.extend(self.sys.moment_scale().iter().map(|s| s * magnitude));
        self.blocks.len() - 1
    }

    /// Adds a scalar of order `magnitude`.
    pub fn scalar(&mut self, magnitude: f64) -> usize {
        self.blocks.push((self.scale.len(), 1));
        self.scale.push(magnitude);
        self.blocks.len() - 1
    }

    /// `d(to)/dt += factor * map * from`.
    pub fn couple(&mut self, to: usize, from: usize, map: &ComplexMatrix, factor: f64) {
        self.couplings.push((to, from, map.clone(), factor));
    }

    /// `d(to)/dt += factor * from[index]` for a scalar `to`.
    pub fn read(&mut self, to: usize, from: usize, index: usize, factor: f64) {
        self.reads.push((to, from, index, factor));
    }

    pub fn offset(&self, block: usize) -> usize {
        self.blocks[block].0
    }

    /// Scale of component `index` of `block`.
    pub fn magnitude(&self, block: usize, index: usize) -> f64 {
        self.scale[self.blocks[block].0 + index]
    }

    pub fn dim(&self) -> usize {
        self.scale.len()
    }

    pub fn build(&self) -> LinearSystem {
        let n = self.dim();
        let mut a_s = ComplexMatrix::zeros(n, n);
        let mut a_d = ComplexMatrix::zeros(n, n);
        let m = &self.sys.matrix;
        for &(off, len) in &self.blocks {
            if len == self.sys.dim() {
                a_s.view_mut((off, off), (len, len)).copy_from(&m.m_static);
                a_d.view_mut((off, off), (len, len)).copy_from(&m.m_drive);
            }
        }
        for (to, from, map, factor) in &self.couplings {
            let (ot, lt) = self.blocks[*to];
            let (of, lf) = self.blocks[*from];
            let mut v = a_s.view_mut((ot, of), (lt, lf));
            v += map * C64::from(*factor);
        }
        for &(to, from, index, factor) in &self.reads {
            let ot = self.blocks[to].0;
            let of = self.blocks[from].0;
            a_s[(ot, of + index)] += C64::from(factor);
        }
        self.sys.stacked_system(&a_s, &a_d, self.scale.clone())
    }

    /// State with `init` in `block` and zeros elsewhere.
    pub fn initial(&self, block: usize, init: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::default(); self.dim()];
        let off = self.offset(block);
        y[off..off + init.len()].copy_from_slice(init);
        y
    }

    pub fn slice<'y>(&self, y: &'y [C64], block: usize) -> &'y [C64] {
        let (off, len) = self.blocks[block];
        &y[off..off + len]
    }
}
