//! Trilinear algebra on the traceless symmetric 2×2 matrices and the
//! permutation-symmetry decomposition of cubical three-way arrays.
//!
//! An element of C⊥ is `c1·σ1 + c3·σ3`, i.e. the matrix
//!
//! ```text
//! [ c3   c1 ]
//! [ c1  -c3 ]
//! ```
//!
//! The space is not closed under the binary matrix product (`uv` lands in
//! span{I, iσ2}) but it is closed under the triple product `μ(u, v, w) = uvw`,
//! which is symmetric under exchanging its first and last arguments and not
//! under any exchange involving the middle one.
//!
//! The six symmetrizers act on the orbit vector
//! `(T_ijk, T_jki, T_kij, T_ikj, T_jik, T_kji)`. Rows for `J23∓` are chosen so
//! that each component has the pair-exchange eigenvalue its name advertises.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Point of C⊥ stored by its σ1 and σ3 coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CPerpElement {
    pub c1: f64,
    pub c3: f64,
}

impl CPerpElement {
    pub const ZERO: Self = Self { c1: 0.0, c3: 0.0 };
    pub const SIGMA1: Self = Self { c1: 1.0, c3: 0.0 };
    pub const SIGMA3: Self = Self { c1: 0.0, c3: 1.0 };

    pub const fn new(c1: f64, c3: f64) -> Self {
        Self { c1, c3 }
    }

    /// Contraction with a coefficient pair `(ζ¹, ζ³)`.
    #[inline]
    pub fn dot(self, zeta: [f64; 2]) -> f64 {
        zeta[0] * self.c1 + zeta[1] * self.c3
    }

    pub fn norm(self) -> f64 {
        self.c1.hypot(self.c3)
    }

    /// The represented 2×2 matrix, row-major.
    pub fn to_matrix(self) -> [[f64; 2]; 2] {
        [[self.c3, self.c1], [self.c1, -self.c3]]
    }

    /// Reads off the σ1/σ3 coefficients of an arbitrary 2×2 matrix, discarding
    /// its identity and iσ2 parts.
    pub fn project_matrix(m: [[f64; 2]; 2]) -> Self {
        Self {
            c1: 0.5 * (m[0][1] + m[1][0]),
            c3: 0.5 * (m[0][0] - m[1][1]),
        }
    }
}

impl Add for CPerpElement {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.c1 + rhs.c1, self.c3 + rhs.c3)
    }
}

impl Sub for CPerpElement {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.c1 - rhs.c1, self.c3 - rhs.c3)
    }
}

impl Neg for CPerpElement {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.c1, -self.c3)
    }
}

impl Mul<CPerpElement> for f64 {
    type Output = CPerpElement;
    fn mul(self, rhs: CPerpElement) -> CPerpElement {
        CPerpElement::new(self * rhs.c1, self * rhs.c3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_slice(s: &[f64]) -> Self {
        Self::new(s[0], s[1], s[2])
    }

    #[inline]
    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }
}

/// `μ(u, v, w) = uvw` in closed form.
#[inline]
pub fn mu(u: CPerpElement, v: CPerpElement, w: CPerpElement) -> CPerpElement {
    let (u1, u3, v1, v3, w1, w3) = (u.c1, u.c3, v.c1, v.c3, w.c1, w.c3);
    CPerpElement {
        c1: u1 * v1 * w1 + u3 * v3 * w1 - u3 * v1 * w3 + u1 * v3 * w3,
        c3: u3 * v3 * w3 + u1 * v1 * w3 - u1 * v3 * w1 + u3 * v1 * w1,
    }
}

/// `det[u v w] = u·(v×w)`.
#[inline]
pub fn triple_product(u: Vec3, v: Vec3, w: Vec3) -> f64 {
    u.dot(v.cross(w))
}

/// Totally symmetric component: the sum of `μ` over all six argument orders.
#[inline]
pub fn component_s(u: CPerpElement, v: CPerpElement, w: CPerpElement) -> CPerpElement {
    let (u1, u3, v1, v3, w1, w3) = (u.c1, u.c3, v.c1, v.c3, w.c1, w.c3);
    CPerpElement {
        c1: 2.0 * (3.0 * u1 * v1 * w1 + u1 * v3 * w3 + u3 * v1 * w3 + u3 * v3 * w1),
        c3: 2.0 * (3.0 * u3 * v3 * w3 + u3 * v1 * w1 + u1 * v3 * w1 + u1 * v1 * w3),
    }
}

/// Selects one of the four Jacobi components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JacobiTag {
    J31Minus,
    J31Plus,
    J23Minus,
    J23Plus,
}

impl JacobiTag {
    pub const ALL: [JacobiTag; 4] = [
        JacobiTag::J31Minus,
        JacobiTag::J31Plus,
        JacobiTag::J23Minus,
        JacobiTag::J23Plus,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            JacobiTag::J31Minus => "31-",
            JacobiTag::J31Plus => "31+",
            JacobiTag::J23Minus => "23-",
            JacobiTag::J23Plus => "23+",
        }
    }

    /// Row of the symmetrizer matrix producing this component.
    pub fn row(self) -> usize {
        match self {
            JacobiTag::J31Minus => 2,
            JacobiTag::J31Plus => 3,
            JacobiTag::J23Minus => 4,
            JacobiTag::J23Plus => 5,
        }
    }
}

impl fmt::Display for JacobiTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for JacobiTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().trim_start_matches(['J', 'j']);
        let t = t.replace('−', "-").replace("minus", "-").replace("plus", "+");
        match t.as_str() {
            "31-" => Ok(JacobiTag::J31Minus),
            "31+" => Ok(JacobiTag::J31Plus),
            "23-" => Ok(JacobiTag::J23Minus),
            "23+" => Ok(JacobiTag::J23Plus),
            _ => Err(Error::Usage(format!(
                "unknown Jacobi component tag {s:?} (expected one of 31-, 31+, 23-, 23+)"
            ))),
        }
    }
}

/// Closed-form Jacobi component selected by `tag`.
#[inline]
pub fn component_j(
    tag: JacobiTag,
    u: CPerpElement,
    v: CPerpElement,
    w: CPerpElement,
) -> CPerpElement {
    let (u1, u3, v1, v3, w1, w3) = (u.c1, u.c3, v.c1, v.c3, w.c1, w.c3);
    let (c1, c3) = match tag {
        JacobiTag::J31Minus => (u1 * v3 * w3 - u3 * v3 * w1, u3 * v1 * w1 - u1 * v1 * w3),
        JacobiTag::J31Plus => (
            u1 * v3 * w3 - 2.0 * u3 * v1 * w3 + u3 * v3 * w1,
            u3 * v1 * w1 - 2.0 * u1 * v3 * w1 + u1 * v1 * w3,
        ),
        JacobiTag::J23Minus => (u3 * v3 * w1 - u3 * v1 * w3, u1 * v1 * w3 - u1 * v3 * w1),
        JacobiTag::J23Plus => (
            -2.0 * u1 * v3 * w3 + u3 * v1 * w3 + u3 * v3 * w1,
            -2.0 * u3 * v1 * w1 + u1 * v3 * w1 + u1 * v1 * w3,
        ),
    };
    CPerpElement::new(2.0 * c1, 2.0 * c3)
}

/// `uvw + vwu + wuv − wvu − uwv − vuw`; identically zero on C⊥.
pub fn antisym_combination(u: CPerpElement, v: CPerpElement, w: CPerpElement) -> CPerpElement {
    mu(u, v, w) + mu(v, w, u) + mu(w, u, v) - mu(w, v, u) - mu(u, w, v) - mu(v, u, w)
}

/// Symmetrizer matrix acting on `(T_ijk, T_jki, T_kij, T_ikj, T_jik, T_kji)`.
/// Rows: S, A, J31−, J31+, J23−, J23+.
pub const SYMMETRIZER: [[f64; 6]; 6] = [
    [1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
    [1.0, 1.0, 1.0, -1.0, -1.0, -1.0],
    [1.0, 0.0, -1.0, 1.0, 0.0, -1.0],
    [1.0, 0.0, -1.0, -1.0, 0.0, 1.0],
    [0.0, -1.0, 1.0, 0.0, -1.0, 1.0],
    [0.0, -1.0, 1.0, 0.0, 1.0, -1.0],
];

/// Exact inverse of [`SYMMETRIZER`], scaled by 12.
const SYMMETRIZER_INV_X12: [[f64; 6]; 6] = [
    [2.0, 2.0, 4.0, 4.0, 2.0, 2.0],
    [2.0, 2.0, -2.0, -2.0, -4.0, -4.0],
    [2.0, 2.0, -2.0, -2.0, 2.0, 2.0],
    [2.0, -2.0, 4.0, -4.0, 2.0, -2.0],
    [2.0, -2.0, -2.0, 2.0, -4.0, 4.0],
    [2.0, -2.0, -2.0, 2.0, 2.0, -2.0],
];

pub fn symmetrizer_inverse() -> [[f64; 6]; 6] {
    let mut out = SYMMETRIZER_INV_X12;
    for row in out.iter_mut() {
        for x in row.iter_mut() {
            *x /= 12.0;
        }
    }
    out
}

/// Spectral condition number of [`SYMMETRIZER`] (ratio of extreme singular values).
pub fn symmetrizer_condition_number() -> f64 {
    let mut gram = [[0.0; 6]; 6];
    for (a, row) in gram.iter_mut().enumerate() {
        for (b, g) in row.iter_mut().enumerate() {
            *g = (0..6).map(|r| SYMMETRIZER[r][a] * SYMMETRIZER[r][b]).sum();
        }
    }
    let eig = symmetric_eigenvalues(gram);
    let max = eig.iter().cloned().fold(f64::MIN, f64::max);
    let min = eig.iter().cloned().fold(f64::MAX, f64::min);
    (max / min).sqrt()
}

// Cyclic Jacobi rotations; fine for a fixed 6×6.
fn symmetric_eigenvalues<const N: usize>(mut a: [[f64; N]; N]) -> [f64; N] {
    for _sweep in 0..100 {
        let off: f64 = (0..N)
            .flat_map(|p| (0..N).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[p][q] * a[p][q])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..N {
                    let (arp, arq) = (a[r][p], a[r][q]);
                    a[r][p] = c * arp - s * arq;
                    a[r][q] = s * arp + c * arq;
                }
                for r in 0..N {
                    let (apr, aqr) = (a[p][r], a[q][r]);
                    a[p][r] = c * apr - s * aqr;
                    a[q][r] = s * apr + c * aqr;
                }
            }
        }
    }
    std::array::from_fn(|i| a[i][i])
}

/// Index permutations of a cubical array. `P(T)_ijk` reads `T` at the
/// permuted index triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexPermutation {
    Identity,
    /// `T_jki`
    Cyclic,
    /// `T_kij`
    AntiCyclic,
    /// `T_ikj`
    Swap23,
    /// `T_jik`
    Swap12,
    /// `T_kji`
    Swap31,
}

impl IndexPermutation {
    /// Orbit order used by the symmetrizer matrix.
    pub const ORBIT: [IndexPermutation; 6] = [
        IndexPermutation::Identity,
        IndexPermutation::Cyclic,
        IndexPermutation::AntiCyclic,
        IndexPermutation::Swap23,
        IndexPermutation::Swap12,
        IndexPermutation::Swap31,
    ];

    #[inline]
    pub fn apply(self, i: usize, j: usize, k: usize) -> (usize, usize, usize) {
        match self {
            IndexPermutation::Identity => (i, j, k),
            IndexPermutation::Cyclic => (j, k, i),
            IndexPermutation::AntiCyclic => (k, i, j),
            IndexPermutation::Swap23 => (i, k, j),
            IndexPermutation::Swap12 => (j, i, k),
            IndexPermutation::Swap31 => (k, j, i),
        }
    }
}

/// Dense `n × n × n` array, `(i, j, k)` stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicalTensor {
    n: usize,
    data: Vec<f64>,
}

impl CubicalTensor {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Dimension("side length must be positive".into()));
        }
        if data.len() != n * n * n {
            return Err(Error::Dimension(format!(
                "expected {} entries for side length {n}, got {}",
                n * n * n,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::Usage(format!("non-finite tensor entry at flat index {pos}")));
        }
        Ok(Self { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    data.push(f(i, j, k));
                }
            }
        }
        Self { n, data }
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.offset(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) {
        let o = self.offset(i, j, k);
        self.data[o] = value;
    }

    pub fn permuted(&self, p: IndexPermutation) -> Self {
        Self::from_fn(self.n, |i, j, k| {
            let (a, b, c) = p.apply(i, j, k);
            self.get(a, b, c)
        })
    }

    /// `T_ijk + T_jki + T_kij`.
    pub fn jacobi_sum(&self) -> Self {
        Self::from_fn(self.n, |i, j, k| self.get(i, j, k) + self.get(j, k, i) + self.get(k, i, j))
    }

    pub fn inner(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.inner(self)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.n, other.n, "side length mismatch");
        Self {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect(),
        }
    }

    #[inline]
    fn orbit(&self, i: usize, j: usize, k: usize) -> [f64; 6] {
        IndexPermutation::ORBIT.map(|p| {
            let (a, b, c) = p.apply(i, j, k);
            self.get(a, b, c)
        })
    }
}

/// Output of [`decompose`]: `S`, `A` and the four Jacobi components.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryComponents {
    pub s: CubicalTensor,
    pub a: CubicalTensor,
    pub j31m: CubicalTensor,
    pub j31p: CubicalTensor,
    pub j23m: CubicalTensor,
    pub j23p: CubicalTensor,
}

impl SymmetryComponents {
    pub const NAMES: [&'static str; 6] = ["S", "A", "J31-", "J31+", "J23-", "J23+"];

    pub fn as_array(&self) -> [&CubicalTensor; 6] {
        [&self.s, &self.a, &self.j31m, &self.j31p, &self.j23m, &self.j23p]
    }

    pub fn jacobi(&self, tag: JacobiTag) -> &CubicalTensor {
        match tag {
            JacobiTag::J31Minus => &self.j31m,
            JacobiTag::J31Plus => &self.j31p,
            JacobiTag::J23Minus => &self.j23m,
            JacobiTag::J23Plus => &self.j23p,
        }
    }

    fn from_array(mut parts: [CubicalTensor; 6]) -> Self {
        let take = |t: &mut CubicalTensor| std::mem::replace(t, CubicalTensor::zeros(0));
        Self {
            s: take(&mut parts[0]),
            a: take(&mut parts[1]),
            j31m: take(&mut parts[2]),
            j31p: take(&mut parts[3]),
            j23m: take(&mut parts[4]),
            j23p: take(&mut parts[5]),
        }
    }
}

fn require_side(t: &CubicalTensor) -> Result<()> {
    if t.n < 3 {
        return Err(Error::Dimension(format!(
            "cubical decomposition needs side length >= 3, got {}",
            t.n
        )));
    }
    Ok(())
}

/// Applies the six symmetrizers entrywise.
pub fn decompose(t: &CubicalTensor) -> Result<SymmetryComponents> {
    require_side(t)?;
    let n = t.n;
    let mut parts: [CubicalTensor; 6] = std::array::from_fn(|_| CubicalTensor::zeros(n));
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let orbit = t.orbit(i, j, k);
                let o = t.offset(i, j, k);
                for (part, row) in parts.iter_mut().zip(SYMMETRIZER.iter()) {
                    part.data[o] = row.iter().zip(orbit.iter()).map(|(m, x)| m * x).sum();
                }
            }
        }
    }
    Ok(SymmetryComponents::from_array(parts))
}

/// Inverts [`decompose`].
pub fn recompose(c: &SymmetryComponents) -> Result<CubicalTensor> {
    let parts = c.as_array();
    let n = parts[0].n;
    if parts.iter().any(|p| p.n != n) {
        let sides: Vec<usize> = parts.iter().map(|p| p.n).collect();
        return Err(Error::Dimension(format!("component side lengths differ: {sides:?}")));
    }
    let inv = symmetrizer_inverse();
    let mut out = CubicalTensor::zeros(n);
    for (o, x) in out.data.iter_mut().enumerate() {
        // only the T_ijk row of the inverse is needed
        *x = inv[0].iter().zip(parts.iter()).map(|(m, p)| m * p.data[o]).sum();
    }
    Ok(out)
}

/// Orthogonal split into totally symmetric, totally antisymmetric and Jacobi parts.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalParts {
    pub sym: CubicalTensor,
    pub antisym: CubicalTensor,
    pub jacobi: CubicalTensor,
}

pub fn project_orthogonal(t: &CubicalTensor) -> Result<OrthogonalParts> {
    require_side(t)?;
    let n = t.n;
    let mut sym = CubicalTensor::zeros(n);
    let mut antisym = CubicalTensor::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let p = t.orbit(i, j, k);
                let even = p[0] + p[1] + p[2];
                let odd = p[3] + p[4] + p[5];
                let o = t.offset(i, j, k);
                sym.data[o] = (even + odd) / 6.0;
                antisym.data[o] = (even - odd) / 6.0;
            }
        }
    }
    let jacobi = CubicalTensor {
        n,
        data: t
            .data
            .iter()
            .zip(sym.data.iter().zip(&antisym.data))
            .map(|(x, (s, a))| x - s - a)
            .collect(),
    };
    Ok(OrthogonalParts {
        sym,
        antisym,
        jacobi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matmul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
        let mut c = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        c
    }

    fn mu_oracle(u: CPerpElement, v: CPerpElement, w: CPerpElement) -> CPerpElement {
        CPerpElement::project_matrix(matmul(matmul(u.to_matrix(), v.to_matrix()), w.to_matrix()))
    }

    fn close(a: CPerpElement, b: CPerpElement, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
    }

    fn cperp() -> impl Strategy<Value = CPerpElement> {
        (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(a, b)| CPerpElement::new(a, b))
    }

    #[test]
    fn mu_examples() {
        let s1 = CPerpElement::SIGMA1;
        let s3 = CPerpElement::SIGMA3;
        assert_eq!(mu(s1, s1, s1), s1);
        assert_eq!(mu(s1, s3, s1), CPerpElement::new(0.0, -1.0));
        assert_eq!(mu_oracle(s1, s3, s1), CPerpElement::new(0.0, -1.0));
    }

    #[test]
    fn materialized_matrix_is_traceless_symmetric() {
        let m = CPerpElement::new(0.3, -1.7).to_matrix();
        assert_eq!(m[0][0] + m[1][1], 0.0);
        assert_eq!(m[0][1], m[1][0]);
    }

    #[test]
    fn binary_product_leaves_cperp() {
        let u = CPerpElement::new(0.4, 1.3);
        let v = CPerpElement::new(-2.0, 0.7);
        let p = matmul(u.to_matrix(), v.to_matrix());
        let proj = CPerpElement::project_matrix(p);
        assert!(proj.norm() < 1e-15, "uv has C⊥ part {proj:?}");
        // and it is of the form c0·I + c2·iσ2
        assert!((p[0][0] - p[1][1]).abs() < 1e-15);
        assert!((p[0][1] + p[1][0]).abs() < 1e-15);
    }

    #[test]
    fn middle_exchange_witness() {
        let s1 = CPerpElement::SIGMA1;
        let s3 = CPerpElement::SIGMA3;
        let a = mu_oracle(s1, s1, s3);
        let b = mu_oracle(s1, s3, s1);
        assert_ne!(a, b);
        assert_eq!(mu(s1, s1, s3), a);
        assert_eq!(mu(s1, s3, s1), b);
    }

    #[test]
    fn triple_product_examples() {
        let e1 = Vec3::new(1.0, 0.0, 0.0);
        let e2 = Vec3::new(0.0, 1.0, 0.0);
        let e3 = Vec3::new(0.0, 0.0, 1.0);
        assert_eq!(triple_product(e1, e2, e3), 1.0);
        assert_eq!(triple_product(e1, e1, e3), 0.0);
        assert_eq!(triple_product(e2, e1, e3), -1.0);
    }

    #[test]
    fn component_examples() {
        let s1 = CPerpElement::SIGMA1;
        let s3 = CPerpElement::SIGMA3;
        assert_eq!(component_s(s1, s1, s1), CPerpElement::new(6.0, 0.0));
        assert_eq!(
            component_j(JacobiTag::J31Minus, s1, s3, s3),
            CPerpElement::new(2.0, 0.0)
        );
        assert_eq!(antisym_combination(s1, s3, s1), CPerpElement::ZERO);
    }

    #[test]
    fn jacobi_tag_parsing() {
        for tag in JacobiTag::ALL {
            assert_eq!(tag.as_str().parse::<JacobiTag>().unwrap(), tag);
        }
        assert_eq!("J23−".parse::<JacobiTag>().unwrap(), JacobiTag::J23Minus);
        assert!(matches!("12+".parse::<JacobiTag>(), Err(Error::Usage(_))));
    }

    #[test]
    fn inverse_is_exact() {
        let inv = symmetrizer_inverse();
        for a in 0..6 {
            for b in 0..6 {
                let x: f64 = (0..6).map(|r| SYMMETRIZER[a][r] * inv[r][b]).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((x - want).abs() < 1e-15, "({a},{b}) = {x}");
            }
        }
    }

    #[test]
    fn condition_number_is_sqrt3() {
        let c = symmetrizer_condition_number();
        assert!(c.is_finite());
        assert!((c - 3f64.sqrt()).abs() < 1e-10, "cond = {c}");
    }

    #[test]
    fn decompose_rejects_small_sides() {
        let t = CubicalTensor::zeros(2);
        assert!(matches!(decompose(&t), Err(Error::Dimension(_))));
        assert!(matches!(project_orthogonal(&t), Err(Error::Dimension(_))));
    }

    #[test]
    fn recompose_rejects_mismatched_sides() {
        let mut c = decompose(&CubicalTensor::zeros(3)).unwrap();
        c.j23p = CubicalTensor::zeros(4);
        assert!(matches!(recompose(&c), Err(Error::Dimension(_))));
    }

    #[test]
    fn tensor_constructor_validates() {
        assert!(CubicalTensor::new(2, vec![0.0; 7]).is_err());
        assert!(CubicalTensor::new(1, vec![f64::NAN]).is_err());
        assert!(CubicalTensor::new(2, vec![1.0; 8]).is_ok());
    }

    #[test]
    fn symmetric_tensor_has_only_s_part() {
        let x = [0.3, -1.2, 0.8, 2.0];
        let t = CubicalTensor::from_fn(4, |i, j, k| x[i] * x[j] * x[k]);
        let c = decompose(&t).unwrap();
        assert!(c.s.max_abs_diff(&t.scaled(6.0)) < 1e-12);
        for part in [&c.a, &c.j31m, &c.j31p, &c.j23m, &c.j23p] {
            assert!(part.max_abs() < 1e-12);
        }
        assert!(recompose(&c).unwrap().max_abs_diff(&t) < 1e-12);
    }

    #[test]
    fn zero_components_recompose_to_zero() {
        let c = decompose(&CubicalTensor::zeros(3)).unwrap();
        assert_eq!(recompose(&c).unwrap(), CubicalTensor::zeros(3));
    }

    #[test]
    fn antisymmetric_orbit_has_no_s_part() {
        // T_123 = 1, T_213 = -1 (zero-based (0,1,2) and (1,0,2))
        let mut t = CubicalTensor::zeros(3);
        t.set(0, 1, 2, 1.0);
        t.set(1, 0, 2, -1.0);
        let c = decompose(&t).unwrap();
        let orbit = [(0, 1, 2), (1, 2, 0), (2, 0, 1), (0, 2, 1), (1, 0, 2), (2, 1, 0)];
        for (i, j, k) in orbit {
            assert_eq!(c.s.get(i, j, k), 0.0);
        }
        // hand application of the A row at (0,1,2): (1 + 0 + 0) - (0 + (-1) + 0) = 2
        assert_eq!(c.a.get(0, 1, 2), 2.0);
    }

    #[test]
    fn totally_antisymmetric_projects_onto_itself() {
        let t = CubicalTensor::from_fn(3, |i, j, k| {
            let (i, j, k) = (i as i64, j as i64, k as i64);
            ((j - i) * (k - i) * (k - j)) as f64 / 2.0
        });
        let parts = project_orthogonal(&t).unwrap();
        assert!(parts.sym.max_abs() < 1e-15);
        assert!(parts.jacobi.max_abs() < 1e-15);
        assert!(parts.antisym.max_abs_diff(&t) < 1e-15);
    }

    proptest! {
        #[test]
        fn mu_matches_matrix_product(u in cperp(), v in cperp(), w in cperp()) {
            prop_assert!(close(mu(u, v, w), mu_oracle(u, v, w), 1e-12));
        }

        #[test]
        fn mu_outer_exchange_symmetry(u in cperp(), v in cperp(), w in cperp()) {
            prop_assert!(close(mu(u, v, w), mu(w, v, u), 1e-14));
        }

        #[test]
        fn mu_is_trilinear(
            u in cperp(), u2 in cperp(), v in cperp(), w in cperp(),
            a in -2.0..2.0f64, b in -2.0..2.0f64,
        ) {
            let lhs = mu(a * u + b * u2, v, w);
            let rhs = a * mu(u, v, w) + b * mu(u2, v, w);
            prop_assert!(close(lhs, rhs, 1e-12));
            let lhs = mu(v, a * u + b * u2, w);
            let rhs = a * mu(v, u, w) + b * mu(v, u2, w);
            prop_assert!(close(lhs, rhs, 1e-12));
            let lhs = mu(v, w, a * u + b * u2);
            let rhs = a * mu(v, w, u) + b * mu(v, w, u2);
            prop_assert!(close(lhs, rhs, 1e-12));
        }

        #[test]
        fn s_is_permutation_invariant(u in cperp(), v in cperp(), w in cperp()) {
            let s = component_s(u, v, w);
            for other in [component_s(v, w, u), component_s(w, u, v),
                          component_s(u, w, v), component_s(v, u, w), component_s(w, v, u)] {
                prop_assert!(close(s, other, 1e-12));
            }
        }

        #[test]
        fn j31_minus_vanishes_on_equal_outer_args(u in cperp(), v in cperp()) {
            prop_assert!(component_j(JacobiTag::J31Minus, u, v, u).norm() < 1e-12);
        }

        #[test]
        fn antisym_vanishes(u in cperp(), v in cperp(), w in cperp()) {
            prop_assert!(antisym_combination(u, v, w).norm() < 1e-12);
            prop_assert_eq!(antisym_combination(CPerpElement::ZERO, v, w), CPerpElement::ZERO);
        }

        #[test]
        fn triple_product_antisymmetry(
            a in prop::array::uniform3(-2.0..2.0f64),
            b in prop::array::uniform3(-2.0..2.0f64),
            c in prop::array::uniform3(-2.0..2.0f64),
        ) {
            let (u, v, w) = (Vec3::from_slice(&a), Vec3::from_slice(&b), Vec3::from_slice(&c));
            let d = triple_product(u, v, w);
            prop_assert!((d + triple_product(v, u, w)).abs() < 1e-12);
            prop_assert!((d + triple_product(u, w, v)).abs() < 1e-12);
            prop_assert!((d + triple_product(w, v, u)).abs() < 1e-12);
        }
    }
}
