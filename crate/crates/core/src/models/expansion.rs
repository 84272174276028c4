//! Diagonal trilinear expansions over C⊥ and ℝ³ shared by the NCLF models.
//!
//! Each term owns three factor tables (one per factor class) and one
//! single-row coefficient table. A C⊥ term of rank `R` stores rows of `2R`
//! coefficients `(c1, c3)` per rank slot and a `2R` ζ row; the ℝ³ term of rank
//! `R` stores `3R` per row and an `R` wide α row. Factor tables come first, in
//! term order, followed by the coefficient tables in the same order.

use serde::{Deserialize, Serialize};

use crate::algebra::{component_j, component_s, mu, triple_product, CPerpElement, JacobiTag, Vec3};
use crate::data::Dims;
use crate::error::Result;

use super::{BiasTables, Gradient, LatentModel, ModelKind, ModelShape, Table, TableRole};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Mu,
    S,
    J(JacobiTag),
}

impl Op {
    #[inline]
    fn eval(self, u: CPerpElement, v: CPerpElement, w: CPerpElement) -> CPerpElement {
        match self {
            Op::Mu => mu(u, v, w),
            Op::S => component_s(u, v, w),
            Op::J(tag) => component_j(tag, u, v, w),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Part {
    CPerp(Op, usize),
    Triple(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Term {
    part_is_triple: bool,
    op: Op,
    rank: usize,
    factors: [usize; 3],
    coef: usize,
}

#[derive(Debug, Clone, PartialEq)]
struct Expansion {
    terms: Vec<Term>,
    tables: Vec<Table>,
}

#[inline]
fn cperp_at(row: &[f64], r: usize) -> CPerpElement {
    CPerpElement::new(row[2 * r], row[2 * r + 1])
}

#[inline]
fn vec3_at(row: &[f64], r: usize) -> Vec3 {
    Vec3::from_slice(&row[3 * r..3 * r + 3])
}

impl Expansion {
    fn new(dims: Dims, parts: &[Part]) -> Self {
        let mut tables = Vec::new();
        let mut terms = Vec::new();
        for part in parts {
            let (width, op, rank, triple) = match *part {
                Part::CPerp(op, rank) => (2 * rank, op, rank, false),
                Part::Triple(rank) => (3 * rank, Op::Mu, rank, true),
            };
            let base = tables.len();
            for (f, &d) in dims.iter().enumerate() {
                tables.push(Table::zeros(TableRole::Factor(f), d, width));
            }
            terms.push(Term {
                part_is_triple: triple,
                op,
                rank,
                factors: [base, base + 1, base + 2],
                coef: 0,
            });
        }
        for term in terms.iter_mut() {
            term.coef = tables.len();
            let width = if term.part_is_triple {
                term.rank
            } else {
                2 * term.rank
            };
            tables.push(Table::zeros(TableRole::Coefficient, 1, width));
        }
        Self { terms, tables }
    }

    #[inline]
    fn rows(&self, t: &Term, i: usize, j: usize, k: usize) -> (&[f64], &[f64], &[f64], &[f64]) {
        (
            self.tables[t.factors[0]].row(i),
            self.tables[t.factors[1]].row(j),
            self.tables[t.factors[2]].row(k),
            self.tables[t.coef].row(0),
        )
    }

    #[inline]
    fn interaction(&self, i: usize, j: usize, k: usize) -> f64 {
        let mut acc = 0.0;
        for t in &self.terms {
            let (u, v, w, c) = self.rows(t, i, j, k);
            if t.part_is_triple {
                for r in 0..t.rank {
                    acc += c[r] * triple_product(vec3_at(u, r), vec3_at(v, r), vec3_at(w, r));
                }
            } else {
                for r in 0..t.rank {
                    let x = t.op.eval(cperp_at(u, r), cperp_at(v, r), cperp_at(w, r));
                    acc += x.dot([c[2 * r], c[2 * r + 1]]);
                }
            }
        }
        acc
    }

    fn interaction_grad(&self, i: usize, j: usize, k: usize, out: &mut Gradient) {
        const BASIS: [CPerpElement; 2] = [CPerpElement::SIGMA1, CPerpElement::SIGMA3];
        for t in &self.terms {
            let (u, v, w, c) = self.rows(t, i, j, k);
            let rank = t.rank;
            if t.part_is_triple {
                let g = out.push(t.factors[0], i, 3 * rank);
                for r in 0..rank {
                    let d = vec3_at(v, r).cross(vec3_at(w, r));
                    g[3 * r..3 * r + 3].copy_from_slice(&[c[r] * d.x, c[r] * d.y, c[r] * d.z]);
                }
                let g = out.push(t.factors[1], j, 3 * rank);
                for r in 0..rank {
                    let d = vec3_at(w, r).cross(vec3_at(u, r));
                    g[3 * r..3 * r + 3].copy_from_slice(&[c[r] * d.x, c[r] * d.y, c[r] * d.z]);
                }
                let g = out.push(t.factors[2], k, 3 * rank);
                for r in 0..rank {
                    let d = vec3_at(u, r).cross(vec3_at(v, r));
                    g[3 * r..3 * r + 3].copy_from_slice(&[c[r] * d.x, c[r] * d.y, c[r] * d.z]);
                }
                let g = out.push(t.coef, 0, rank);
                for (r, gr) in g.iter_mut().enumerate() {
                    *gr = triple_product(vec3_at(u, r), vec3_at(v, r), vec3_at(w, r));
                }
            } else {
                // trilinearity: the partial along a basis direction is the
                // operator evaluated with that basis element in the slot
                let zeta = |r: usize| [c[2 * r], c[2 * r + 1]];
                let g = out.push(t.factors[0], i, 2 * rank);
                for r in 0..rank {
                    let (vr, wr) = (cperp_at(v, r), cperp_at(w, r));
                    for (b, e) in BASIS.iter().enumerate() {
                        g[2 * r + b] = t.op.eval(*e, vr, wr).dot(zeta(r));
                    }
                }
                let g = out.push(t.factors[1], j, 2 * rank);
                for r in 0..rank {
                    let (ur, wr) = (cperp_at(u, r), cperp_at(w, r));
                    for (b, e) in BASIS.iter().enumerate() {
                        g[2 * r + b] = t.op.eval(ur, *e, wr).dot(zeta(r));
                    }
                }
                let g = out.push(t.factors[2], k, 2 * rank);
                for r in 0..rank {
                    let (ur, vr) = (cperp_at(u, r), cperp_at(v, r));
                    for (b, e) in BASIS.iter().enumerate() {
                        g[2 * r + b] = t.op.eval(ur, vr, *e).dot(zeta(r));
                    }
                }
                let g = out.push(t.coef, 0, 2 * rank);
                for r in 0..rank {
                    let x = t.op.eval(cperp_at(u, r), cperp_at(v, r), cperp_at(w, r));
                    g[2 * r] = x.c1;
                    g[2 * r + 1] = x.c3;
                }
            }
        }
    }
}

/// Ranks of the six NCLF components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NclfRanks {
    pub s: usize,
    pub a: usize,
    pub j31m: usize,
    pub j31p: usize,
    pub j23m: usize,
    pub j23p: usize,
}

impl NclfRanks {
    pub fn uniform(r: usize) -> Self {
        Self::from_array([r; 6])
    }

    /// Order: S, A, J31−, J31+, J23−, J23+.
    pub fn as_array(&self) -> [usize; 6] {
        [self.s, self.a, self.j31m, self.j31p, self.j23m, self.j23p]
    }

    pub fn from_array(r: [usize; 6]) -> Self {
        Self {
            s: r[0],
            a: r[1],
            j31m: r[2],
            j31p: r[3],
            j23m: r[4],
            j23p: r[5],
        }
    }

    /// Latent parameters per entity: two per C⊥ slot, three per ℝ³ slot.
    pub fn per_entity_params(&self) -> usize {
        2 * (self.s + self.j31m + self.j31p + self.j23m + self.j23p) + 3 * self.a
    }
}

/// Full NCLF model: `S`, `A` and the four Jacobi components, each with its own
/// latent tables and coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct NclfModel {
    ranks: NclfRanks,
    expansion: Expansion,
    pub biases: BiasTables,
}

impl NclfModel {
    pub fn zeros(dims: Dims, ranks: NclfRanks) -> Result<Self> {
        let parts = [
            Part::CPerp(Op::S, ranks.s),
            Part::Triple(ranks.a),
            Part::CPerp(Op::J(JacobiTag::J31Minus), ranks.j31m),
            Part::CPerp(Op::J(JacobiTag::J31Plus), ranks.j31p),
            Part::CPerp(Op::J(JacobiTag::J23Minus), ranks.j23m),
            Part::CPerp(Op::J(JacobiTag::J23Plus), ranks.j23p),
        ];
        Ok(Self {
            ranks,
            expansion: Expansion::new(dims, &parts),
            biases: BiasTables::zeros(dims),
        })
    }

    pub fn ranks(&self) -> NclfRanks {
        self.ranks
    }

    /// Index of the coefficient table of component `c` (0 = S, 1 = A, 2.. = J31−, J31+, J23−, J23+).
    pub fn coefficient_table(&self, c: usize) -> usize {
        self.expansion.terms[c].coef
    }

    /// Indices of the U, V, W tables of component `c`.
    pub fn factor_tables(&self, c: usize) -> [usize; 3] {
        self.expansion.terms[c].factors
    }
}

impl LatentModel for NclfModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Nclf
    }
    fn shape(&self) -> ModelShape {
        ModelShape::Nclf(self.ranks)
    }
    fn biases(&self) -> &BiasTables {
        &self.biases
    }
    fn biases_mut(&mut self) -> &mut BiasTables {
        &mut self.biases
    }
    fn tables(&self) -> &[Table] {
        &self.expansion.tables
    }
    fn tables_mut(&mut self) -> &mut [Table] {
        &mut self.expansion.tables
    }
    #[inline]
    fn interaction(&self, i: usize, j: usize, k: usize) -> f64 {
        self.expansion.interaction(i, j, k)
    }
    fn interaction_grad(&self, i: usize, j: usize, k: usize, out: &mut Gradient) {
        self.expansion.interaction_grad(i, j, k, out)
    }
}

/// `μ` expansion of rank `mu_rank` plus a triple-product term of rank `a_rank`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimitiveNclfModel {
    mu_rank: usize,
    a_rank: usize,
    expansion: Expansion,
    pub biases: BiasTables,
}

impl PrimitiveNclfModel {
    pub fn zeros(dims: Dims, mu_rank: usize, a_rank: usize) -> Result<Self> {
        let parts = [Part::CPerp(Op::Mu, mu_rank), Part::Triple(a_rank)];
        Ok(Self {
            mu_rank,
            a_rank,
            expansion: Expansion::new(dims, &parts),
            biases: BiasTables::zeros(dims),
        })
    }
}

impl LatentModel for PrimitiveNclfModel {
    fn kind(&self) -> ModelKind {
        ModelKind::PrimitiveNclf
    }
    fn shape(&self) -> ModelShape {
        ModelShape::PrimitiveNclf {
            mu_rank: self.mu_rank,
            a_rank: self.a_rank,
        }
    }
    fn biases(&self) -> &BiasTables {
        &self.biases
    }
    fn biases_mut(&mut self) -> &mut BiasTables {
        &mut self.biases
    }
    fn tables(&self) -> &[Table] {
        &self.expansion.tables
    }
    fn tables_mut(&mut self) -> &mut [Table] {
        &mut self.expansion.tables
    }
    #[inline]
    fn interaction(&self, i: usize, j: usize, k: usize) -> f64 {
        self.expansion.interaction(i, j, k)
    }
    fn interaction_grad(&self, i: usize, j: usize, k: usize, out: &mut Gradient) {
        self.expansion.interaction_grad(i, j, k, out)
    }
}
