use crate::data::Dims;
use crate::error::Result;

use super::{BiasTables, Gradient, LatentModel, ModelKind, ModelShape, Table, TableRole};

/// Sum of `rank` rank-1 terms `U[i,r]·V[j,r]·W[k,r]` plus biases.
#[derive(Debug, Clone, PartialEq)]
pub struct CpModel {
    rank: usize,
    /// U, V, W.
    tables: Vec<Table>,
    pub biases: BiasTables,
}

impl CpModel {
    pub fn zeros(dims: Dims, rank: usize) -> Result<Self> {
        Ok(Self {
            rank,
            tables: (0..3)
                .map(|f| Table::zeros(TableRole::Factor(f), dims[f], rank))
                .collect(),
            biases: BiasTables::zeros(dims),
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }
}

impl LatentModel for CpModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Cp
    }
    fn shape(&self) -> ModelShape {
        ModelShape::Cp { rank: self.rank }
    }
    fn biases(&self) -> &BiasTables {
        &self.biases
    }
    fn biases_mut(&mut self) -> &mut BiasTables {
        &mut self.biases
    }
    fn tables(&self) -> &[Table] {
        &self.tables
    }
    fn tables_mut(&mut self) -> &mut [Table] {
        &mut self.tables
    }

    #[inline]
    fn interaction(&self, i: usize, j: usize, k: usize) -> f64 {
        let (u, v, w) = (self.tables[0].row(i), self.tables[1].row(j), self.tables[2].row(k));
        u.iter()
            .zip(v)
            .zip(w)
            .map(|((a, b), c)| a * b * c)
            .sum()
    }

    fn interaction_grad(&self, i: usize, j: usize, k: usize, out: &mut Gradient) {
        let (u, v, w) = (self.tables[0].row(i), self.tables[1].row(j), self.tables[2].row(k));
        let r = self.rank;
        for (g, (b, c)) in out.push(0, i, r).iter_mut().zip(v.iter().zip(w)) {
            *g = b * c;
        }
        for (g, (a, c)) in out.push(1, j, r).iter_mut().zip(u.iter().zip(w)) {
            *g = a * c;
        }
        for (g, (a, b)) in out.push(2, k, r).iter_mut().zip(u.iter().zip(v)) {
            *g = a * b;
        }
    }
}
