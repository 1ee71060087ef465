//! Dense exact linear algebra over GF(q).
//!
//! Everything is built on one Gauss-Jordan routine: pivots are the first
//! nonzero entry in column order (there is no conditioning to worry about in
//! exact arithmetic). Dimensions in this crate are small, so dense row-major
//! storage and cubic elimination are the whole story.

use crate::field::{FieldElement, FieldError, FieldModulus};
use rand::Rng;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("matrices live in different fields ({left} vs {right})")]
    FieldMismatch {
        left: FieldModulus,
        right: FieldModulus,
    },
    #[error("{op}: incompatible shapes {left:?} and {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("singular {dim}x{dim} matrix (rank {rank}){}", seed_suffix(*.seed))]
    Singular {
        dim: usize,
        rank: usize,
        seed: Option<u64>,
    },
    #[error("{given} vectors span only {rank} dimensions; a basis must be independent")]
    DependentVectors { given: usize, rank: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
}

fn seed_suffix(seed: Option<u64>) -> String {
    seed.map(|s| format!(", trial seed {s:#018x}"))
        .unwrap_or_default()
}

impl LinalgError {
    /// Attach the seed of the enclosing trial to a singularity error so the
    /// event can be replayed.
    pub fn with_seed(self, trial_seed: u64) -> Self {
        match self {
            LinalgError::Singular { dim, rank, .. } => LinalgError::Singular {
                dim,
                rank,
                seed: Some(trial_seed),
            },
            other => other,
        }
    }
}

pub type Result<T, E = LinalgError> = std::result::Result<T, E>;

#[derive(Clone, PartialEq, Eq)]
pub struct Matrix {
    field: FieldModulus,
    rows: usize,
    cols: usize,
    data: Vec<FieldElement>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} over {}", self.rows, self.cols, self.field)?;
        for r in 0..self.rows {
            writeln!(
                f,
                "  {:?}",
                self.row(r).iter().map(|x| x.value()).collect::<Vec<_>>()
            )?;
        }
        Ok(())
    }
}

/// Reduced row-echelon form together with its pivot columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rref {
    pub matrix: Matrix,
    pub pivots: Vec<usize>,
}

impl Rref {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

impl Matrix {
    pub fn zeros(field: FieldModulus, rows: usize, cols: usize) -> Self {
        Matrix {
            field,
            rows,
            cols,
            data: vec![FieldElement::ZERO; rows * cols],
        }
    }

    pub fn identity(field: FieldModulus, n: usize) -> Self {
        let mut m = Matrix::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, FieldElement::ONE);
        }
        m
    }

    /// Build from row-major data. Entries must already be canonical.
    pub fn from_vec(
        field: FieldModulus,
        rows: usize,
        cols: usize,
        data: Vec<FieldElement>,
    ) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch {
                op: "from_vec",
                left: (rows, cols),
                right: (data.len(), 1),
            });
        }
        for x in &data {
            field.element(x.value())?;
        }
        Ok(Matrix {
            field,
            rows,
            cols,
            data,
        })
    }

    /// Stack row vectors. An empty list gives a `0 x cols` matrix.
    pub fn from_rows(field: FieldModulus, cols: usize, rows: &[Vec<FieldElement>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(LinalgError::DimensionMismatch {
                    op: "from_rows",
                    left: (rows.len(), cols),
                    right: (1, row.len()),
                });
            }
            data.extend_from_slice(row);
        }
        Matrix::from_vec(field, rows.len(), cols, data)
    }

    /// Place vectors side by side as columns.
    pub fn from_columns(
        field: FieldModulus,
        rows: usize,
        columns: &[Vec<FieldElement>],
    ) -> Result<Self> {
        Ok(Matrix::from_rows(field, rows, columns)?.transpose())
    }

    /// Integer entries (possibly negative) mapped canonically into the field.
    pub fn from_signed(field: FieldModulus, rows: &[&[i64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let rows: Vec<_> = rows.iter().map(|r| field.signed_vector(r)).collect();
        Matrix::from_rows(field, cols, &rows)
    }

    pub fn random<R: Rng + ?Sized>(
        field: FieldModulus,
        rows: usize,
        cols: usize,
        rng: &mut R,
    ) -> Self {
        Matrix {
            field,
            rows,
            cols,
            data: field.rand_vector(rows * cols, rng),
        }
    }

    #[inline]
    pub fn field(&self) -> FieldModulus {
        self.field
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[FieldElement] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> FieldElement {
        assert!(
            r < self.rows && c < self.cols,
            "index ({r},{c}) out of {}x{}",
            self.rows,
            self.cols
        );
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: FieldElement) {
        assert!(
            r < self.rows && c < self.cols,
            "index ({r},{c}) out of {}x{}",
            self.rows,
            self.cols
        );
        debug_assert!(v.value() < self.field.q());
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[FieldElement] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<FieldElement> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn row_vectors(&self) -> Vec<Vec<FieldElement>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn column_vectors(&self) -> Vec<Vec<FieldElement>> {
        (0..self.cols).map(|c| self.column(c)).collect()
    }

    /// Raw residues per row, for serialization.
    pub fn to_u64_rows(&self) -> Vec<Vec<u64>> {
        (0..self.rows)
            .map(|r| self.row(r).iter().map(|x| x.value()).collect())
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn is_identity(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|r| {
                (0..self.cols).all(|c| {
                    self.get(r, c)
                        == if r == c {
                            FieldElement::ONE
                        } else {
                            FieldElement::ZERO
                        }
                })
            })
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    /// Sub-matrix made of the given columns (0-based), in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(self.field, self.rows, columns.len());
        for r in 0..self.rows {
            for (j, &c) in columns.iter().enumerate() {
                out.data[r * columns.len() + j] = self.get(r, c);
            }
        }
        out
    }

    pub fn select_rows(&self, rows: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Matrix {
            field: self.field,
            rows: rows.len(),
            cols: self.cols,
            data,
        }
    }

    fn same_field(&self, other: &Matrix) -> Result<()> {
        if self.field != other.field {
            return Err(LinalgError::FieldMismatch {
                left: self.field,
                right: other.field,
            });
        }
        Ok(())
    }

    pub fn mat_mul(&self, rhs: &Matrix) -> Result<Matrix> {
        self.same_field(rhs)?;
        if self.cols != rhs.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "mat_mul",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        let f = self.field;
        let mut out = Matrix::zeros(f, self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                let rhs_row = rhs.row(k);
                let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o = f.mul_add(*o, a, b);
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product `A x`.
    pub fn mul_vec(&self, x: &[FieldElement]) -> Result<Vec<FieldElement>> {
        if x.len() != self.cols {
            return Err(LinalgError::DimensionMismatch {
                op: "mul_vec",
                left: self.shape(),
                right: (x.len(), 1),
            });
        }
        Ok((0..self.rows)
            .map(|r| self.field.dot(self.row(r), x))
            .collect())
    }

    /// Row-vector product `x^T A`.
    pub fn vec_mul(&self, x: &[FieldElement]) -> Result<Vec<FieldElement>> {
        if x.len() != self.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "vec_mul",
                left: (1, x.len()),
                right: self.shape(),
            });
        }
        let f = self.field;
        let mut out = vec![FieldElement::ZERO; self.cols];
        for (r, &a) in x.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (o, &b) in out.iter_mut().zip(self.row(r)) {
                *o = f.mul_add(*o, a, b);
            }
        }
        Ok(out)
    }

    pub fn vstack(parts: &[&Matrix]) -> Result<Matrix> {
        let first = parts.first().ok_or(LinalgError::DimensionMismatch {
            op: "vstack",
            left: (0, 0),
            right: (0, 0),
        })?;
        let mut data = Vec::new();
        let mut rows = 0;
        for p in parts {
            first.same_field(p)?;
            if p.cols != first.cols {
                return Err(LinalgError::DimensionMismatch {
                    op: "vstack",
                    left: first.shape(),
                    right: p.shape(),
                });
            }
            data.extend_from_slice(&p.data);
            rows += p.rows;
        }
        Ok(Matrix {
            field: first.field,
            rows,
            cols: first.cols,
            data,
        })
    }

    pub fn hstack(parts: &[&Matrix]) -> Result<Matrix> {
        let transposed: Vec<Matrix> = parts.iter().map(|p| p.transpose()).collect();
        let refs: Vec<&Matrix> = transposed.iter().collect();
        Matrix::vstack(&refs)
            .map(|m| m.transpose())
            .map_err(|e| match e {
                LinalgError::DimensionMismatch { left, right, .. } => {
                    LinalgError::DimensionMismatch {
                        op: "hstack",
                        left: (left.1, left.0),
                        right: (right.1, right.0),
                    }
                }
                other => other,
            })
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    /// `row[dst] -= factor * row[src]`, touching columns from `start` on.
    fn eliminate(&mut self, dst: usize, src: usize, factor: FieldElement, start: usize) {
        let f = self.field;
        let cols = self.cols;
        for c in start..cols {
            let s = self.data[src * cols + c];
            let d = &mut self.data[dst * cols + c];
            *d = f.sub(*d, f.mul(factor, s));
        }
    }

    fn scale_row(&mut self, r: usize, factor: FieldElement, start: usize) {
        let f = self.field;
        for c in start..self.cols {
            let d = &mut self.data[r * self.cols + c];
            *d = f.mul(*d, factor);
        }
    }

    /// Gauss-Jordan in place on the first `limit` columns, returning the
    /// pivot columns. Row operations are applied across the full width, so
    /// an augmented block to the right of `limit` is carried along.
    fn gauss_jordan(&mut self, limit: usize) -> Vec<usize> {
        let f = self.field;
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..limit.min(self.cols) {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !self.get(i, c).is_zero()) else {
                continue;
            };
            self.swap_rows(r, p);
            let inv = f.inv(self.get(r, c)).expect("pivot is nonzero");
            self.scale_row(r, inv, c);
            for i in 0..self.rows {
                if i != r {
                    let factor = self.get(i, c);
                    if !factor.is_zero() {
                        self.eliminate(i, r, factor, c);
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rref(&self) -> Rref {
        let mut m = self.clone();
        let pivots = m.gauss_jordan(self.cols);
        Rref { matrix: m, pivots }
    }

    /// Rank by forward elimination only.
    pub fn rank(&self) -> usize {
        let f = self.field;
        let mut m = self.clone();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m.get(i, c).is_zero()) else {
                continue;
            };
            m.swap_rows(r, p);
            let inv = f.inv(m.get(r, c)).expect("pivot is nonzero");
            for i in r + 1..m.rows {
                let factor = m.get(i, c);
                if !factor.is_zero() {
                    m.eliminate(i, r, f.mul(factor, inv), c);
                }
            }
            r += 1;
        }
        r
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank() == self.rows.min(self.cols)
    }

    pub fn inverse(&self) -> Result<Matrix> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        let mut aug = Matrix::hstack(&[self, &Matrix::identity(self.field, n)])?;
        let pivots = aug.gauss_jordan(n);
        if pivots.len() < n {
            return Err(LinalgError::Singular {
                dim: n,
                rank: pivots.len(),
                seed: None,
            });
        }
        Ok(aug.select_columns(&(n..2 * n).collect::<Vec<_>>()))
    }

    /// Solve `A X = B` for square, invertible `A`.
    pub fn solve(&self, b: &Matrix) -> Result<Matrix> {
        self.same_field(b)?;
        if !self.is_square() {
            return Err(LinalgError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        if b.rows != self.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "solve",
                left: self.shape(),
                right: b.shape(),
            });
        }
        let n = self.rows;
        let mut aug = Matrix::hstack(&[self, b])?;
        let pivots = aug.gauss_jordan(n);
        if pivots.len() < n {
            return Err(LinalgError::Singular {
                dim: n,
                rank: pivots.len(),
                seed: None,
            });
        }
        Ok(aug.select_columns(&(n..n + b.cols).collect::<Vec<_>>()))
    }

    /// Basis of the right null space `{x : A x = 0}` in the free-variable
    /// parameterization of the RREF, so the result is a function of `A`.
    pub fn null_space_basis(&self) -> SubspaceBasis {
        let f = self.field;
        let Rref { matrix: r, pivots } = self.rref();
        let mut is_pivot = vec![false; self.cols];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let vectors = (0..self.cols)
            .filter(|&c| !is_pivot[c])
            .map(|free| {
                let mut x = vec![FieldElement::ZERO; self.cols];
                x[free] = FieldElement::ONE;
                for (row, &p) in pivots.iter().enumerate() {
                    x[p] = f.neg(r.get(row, free));
                }
                x
            })
            .collect();
        SubspaceBasis {
            field: f,
            ambient_dim: self.cols,
            vectors,
        }
    }

    /// Independent columns of `A` (those at the RREF pivots), spanning `C(A)`.
    pub fn column_space_basis(&self) -> Matrix {
        let pivots = self.rref().pivots;
        self.select_columns(&pivots)
    }
}

/// Linearly independent vectors of a common ambient dimension.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubspaceBasis {
    field: FieldModulus,
    ambient_dim: usize,
    vectors: Vec<Vec<FieldElement>>,
}

impl SubspaceBasis {
    pub fn new(
        field: FieldModulus,
        ambient_dim: usize,
        vectors: Vec<Vec<FieldElement>>,
    ) -> Result<Self> {
        let rank = span_dim(field, ambient_dim, &vectors)?;
        if rank != vectors.len() {
            return Err(LinalgError::DependentVectors {
                given: vectors.len(),
                rank,
            });
        }
        Ok(SubspaceBasis {
            field,
            ambient_dim,
            vectors,
        })
    }

    pub fn empty(field: FieldModulus, ambient_dim: usize) -> Self {
        SubspaceBasis {
            field,
            ambient_dim,
            vectors: Vec::new(),
        }
    }

    pub fn field(&self) -> FieldModulus {
        self.field
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<FieldElement>] {
        &self.vectors
    }

    /// The basis vectors as the rows of a `dim x ambient_dim` matrix.
    pub fn to_row_matrix(&self) -> Matrix {
        Matrix::from_rows(self.field, self.ambient_dim, &self.vectors)
            .expect("basis vectors share the ambient dimension")
    }

    pub fn contains(&self, v: &[FieldElement]) -> Result<bool> {
        is_in_span(self.field, v, &self.vectors)
    }

    /// Whether both bases span the same subspace.
    pub fn same_span(&self, other: &SubspaceBasis) -> Result<bool> {
        if self.dim() != other.dim() {
            return Ok(false);
        }
        for v in other.vectors() {
            if !self.contains(v)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Linear combination `sum_i coeffs[i] * b_i`.
    pub fn combine(&self, coeffs: &[FieldElement]) -> Vec<FieldElement> {
        assert_eq!(coeffs.len(), self.dim(), "one coefficient per basis vector");
        let f = self.field;
        let mut out = vec![FieldElement::ZERO; self.ambient_dim];
        for (&c, v) in coeffs.iter().zip(&self.vectors) {
            for (o, &x) in out.iter_mut().zip(v) {
                *o = f.mul_add(*o, c, x);
            }
        }
        out
    }
}

/// Dimension of the span of `vectors`, all of length `ambient_dim`.
pub fn span_dim(
    field: FieldModulus,
    ambient_dim: usize,
    vectors: &[Vec<FieldElement>],
) -> Result<usize> {
    Ok(Matrix::from_rows(field, ambient_dim, vectors)?.rank())
}

/// True iff appending `v` to `basis` does not raise the rank.
pub fn is_in_span(
    field: FieldModulus,
    v: &[FieldElement],
    basis: &[Vec<FieldElement>],
) -> Result<bool> {
    let n = v.len();
    let base = span_dim(field, n, basis)?;
    let mut all = basis.to_vec();
    all.push(v.to_vec());
    Ok(span_dim(field, n, &all)? == base)
}

/// Columns spanning `C(A_1) ∩ ... ∩ C(A_l)`, found by repeated kernel
/// stacking: for a current basis `C` and the next matrix `B`, every kernel
/// vector `(x, y)` of `[C | -B]` gives an intersection vector `C x`.
pub fn column_space_intersection(mats: &[&Matrix]) -> Result<Matrix> {
    let first = mats.first().ok_or(LinalgError::DimensionMismatch {
        op: "intersect_column_spaces",
        left: (0, 0),
        right: (0, 0),
    })?;
    let f = first.field;
    let m = first.rows;
    let mut current = first.column_space_basis();
    for b in &mats[1..] {
        first.same_field(b)?;
        if b.rows != m {
            return Err(LinalgError::DimensionMismatch {
                op: "intersect_column_spaces",
                left: first.shape(),
                right: b.shape(),
            });
        }
        if current.cols == 0 {
            break;
        }
        let neg_b = Matrix::from_vec(
            f,
            b.rows,
            b.cols,
            b.data.iter().map(|&x| f.neg(x)).collect(),
        )?;
        let stacked = Matrix::hstack(&[&current, &neg_b])?;
        let kernel = stacked.null_space_basis();
        let c = current.cols;
        let images: Vec<Vec<FieldElement>> = kernel
            .vectors()
            .iter()
            .map(|xy| current.mul_vec(&xy[..c]))
            .collect::<Result<_>>()?;
        current = Matrix::from_columns(f, m, &images)?.column_space_basis();
    }
    Ok(current)
}

/// Dimension of `C(A_1) ∩ ... ∩ C(A_l)`.
pub fn intersect_column_spaces(mats: &[&Matrix]) -> Result<usize> {
    Ok(column_space_intersection(mats)?.cols())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::DEFAULT_Q;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gf(q: u64) -> FieldModulus {
        FieldModulus::new(q).unwrap()
    }

    const EXAMPLE_F: [&[i64]; 4] = [&[1, 1, 1, 1], &[1, 2, 3, 4], &[1, 0, 2, 3], &[1, 2, 1, 4]];

    #[test]
    fn rref_of_identity_and_zero() {
        let f = gf(7);
        let i3 = Matrix::identity(f, 3);
        let r = i3.rref();
        assert_eq!(r.matrix, i3);
        assert_eq!(r.pivots, vec![0, 1, 2]);

        let z = Matrix::zeros(f, 2, 3);
        let r = z.rref();
        assert_eq!(r.matrix, z);
        assert!(r.pivots.is_empty());
    }

    #[test]
    fn rref_of_demand_matrix_is_identity() {
        let f = gf(101);
        let fm = Matrix::from_signed(f, &EXAMPLE_F).unwrap();
        let r = fm.rref();
        assert!(r.matrix.is_identity());
        assert_eq!(r.rank(), 4);
    }

    #[test]
    fn rref_pivots_strictly_increase_and_rows_are_reduced() {
        let f = gf(7);
        let a = Matrix::from_signed(f, &[&[0, 2, 4, 1], &[0, 1, 2, 0], &[0, 3, 6, 5]]).unwrap();
        let Rref { matrix, pivots } = a.rref();
        assert_eq!(pivots, vec![1, 3]);
        for (row, &p) in pivots.iter().enumerate() {
            assert_eq!(matrix.get(row, p), FieldElement::ONE);
            for other in 0..matrix.rows() {
                if other != row {
                    assert!(matrix.get(other, p).is_zero());
                }
            }
        }
        assert!(matrix.row(2).iter().all(|x| x.is_zero()));
    }

    #[test]
    fn inverse_of_identity_and_singular() {
        let f = gf(11);
        assert_eq!(
            Matrix::identity(f, 4).inverse().unwrap(),
            Matrix::identity(f, 4)
        );
        let s = Matrix::from_signed(f, &[&[1, 2], &[2, 4]]).unwrap();
        assert!(matches!(
            s.inverse(),
            Err(LinalgError::Singular {
                dim: 2,
                rank: 1,
                seed: None
            })
        ));
        let err = s.inverse().unwrap_err().with_seed(99);
        assert!(matches!(err, LinalgError::Singular { seed: Some(99), .. }));
        assert!(err.to_string().contains("0x0000000000000063"));
        assert!(matches!(
            Matrix::zeros(f, 2, 3).inverse(),
            Err(LinalgError::NotSquare { rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn random_inverse_round_trips() {
        let f = gf(DEFAULT_Q);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut checked = 0;
        while checked < 100 {
            let a = Matrix::random(f, 6, 6, &mut rng);
            let Ok(inv) = a.inverse() else { continue };
            assert!(a.mat_mul(&inv).unwrap().is_identity());
            assert!(inv.mat_mul(&a).unwrap().is_identity());
            checked += 1;
        }
    }

    #[test]
    fn null_space_examples() {
        let f = gf(101);
        assert!(Matrix::identity(f, 4).null_space_basis().is_empty());
        let z = Matrix::zeros(f, 2, 3).null_space_basis();
        assert_eq!(z.dim(), 3);

        // (F̄_1)^T: columns {3,4} of F, transposed.
        let fm = Matrix::from_signed(f, &EXAMPLE_F).unwrap();
        let fbar_t = fm.select_columns(&[2, 3]).transpose();
        let basis = fbar_t.null_space_basis();
        assert_eq!(basis.dim(), 2);
        for v in basis.vectors() {
            assert!(fbar_t.mul_vec(v).unwrap().iter().all(|x| x.is_zero()));
        }
        assert!(basis.contains(&f.signed_vector(&[0, -5, 8, -1])).unwrap());
        assert!(basis.contains(&f.signed_vector(&[5, 0, -3, 1])).unwrap());
        assert!(!basis.contains(&f.signed_vector(&[1, 0, 0, 0])).unwrap());
    }

    #[test]
    fn span_dim_and_membership() {
        let f = gf(7);
        let e1 = f.signed_vector(&[1, 0, 0]);
        let e2 = f.signed_vector(&[0, 1, 0]);
        let sum = f.signed_vector(&[1, 1, 0]);
        assert_eq!(
            span_dim(f, 3, &[e1.clone(), e2.clone(), sum.clone()]).unwrap(),
            2
        );
        assert!(is_in_span(f, &sum, &[e1.clone(), e2.clone()]).unwrap());
        assert!(!is_in_span(f, &f.signed_vector(&[0, 0, 1]), &[e1.clone(), e2]).unwrap());
        assert!(matches!(
            span_dim(f, 3, &[e1, vec![FieldElement::ONE; 2]]),
            Err(LinalgError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn example_u_vectors_span_everything() {
        let f = gf(101);
        let u: Vec<Vec<FieldElement>> = [
            [0, -5, 8, -1],
            [5, 0, -3, 1],
            [0, -1, 0, 1],
            [-1, -2, 3, 0],
            [2, 3, -1, -4],
            [-6, -2, 3, 5],
            [0, -1, 1, 1],
            [4, -4, 3, 2],
        ]
        .iter()
        .map(|v| f.signed_vector(v))
        .collect();
        assert_eq!(span_dim(f, 4, &u).unwrap(), 4);
    }

    #[test]
    fn subspace_basis_rejects_dependent_vectors() {
        let f = gf(7);
        let v = f.signed_vector(&[1, 2]);
        let w = f.signed_vector(&[2, 4]);
        assert!(matches!(
            SubspaceBasis::new(f, 2, vec![v, w]),
            Err(LinalgError::DependentVectors { given: 2, rank: 1 })
        ));
    }

    #[test]
    fn intersection_examples() {
        let f = gf(101);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = loop {
            let a = Matrix::random(f, 5, 3, &mut rng);
            if a.rank() == 3 {
                break a;
            }
        };
        assert_eq!(intersect_column_spaces(&[&a, &a]).unwrap(), 3);
        assert_eq!(intersect_column_spaces(&[&a]).unwrap(), 3);

        let axes_a = Matrix::from_signed(f, &[&[1, 0], &[0, 1], &[0, 0], &[0, 0]]).unwrap();
        let axes_b = Matrix::from_signed(f, &[&[0, 0], &[0, 0], &[1, 0], &[0, 1]]).unwrap();
        assert_eq!(intersect_column_spaces(&[&axes_a, &axes_b]).unwrap(), 0);

        let bad = Matrix::zeros(f, 3, 2);
        assert!(intersect_column_spaces(&[&axes_a, &bad]).is_err());
    }

    #[test]
    fn intersection_of_demand_columns() {
        let f = gf(101);
        let fm = Matrix::from_signed(f, &EXAMPLE_F).unwrap();
        let fbar1 = fm.select_columns(&[2, 3]);
        let fbar2 = fm.select_columns(&[0, 3]);
        let fbar3 = fm.select_columns(&[0, 1]);
        assert_eq!(intersect_column_spaces(&[&fbar1, &fbar2]).unwrap(), 1);
        assert_eq!(
            intersect_column_spaces(&[&fbar1, &fbar2, &fbar3]).unwrap(),
            0
        );
        let basis = column_space_intersection(&[&fbar1, &fbar2]).unwrap();
        assert!(is_in_span(f, &fm.column(3), &basis.column_vectors()).unwrap());
    }

    #[test]
    fn solve_examples() {
        let f = gf(DEFAULT_Q);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b = Matrix::random(f, 4, 3, &mut rng);
        assert_eq!(Matrix::identity(f, 4).solve(&b).unwrap(), b);

        let a = Matrix::random(f, 4, 4, &mut rng);
        let x = Matrix::random(f, 4, 3, &mut rng);
        let b = a.mat_mul(&x).unwrap();
        assert_eq!(a.solve(&b).unwrap(), x);

        let s = Matrix::from_signed(f, &[&[1, 1], &[1, 1]]).unwrap();
        assert!(matches!(
            s.solve(&Matrix::zeros(f, 2, 1)),
            Err(LinalgError::Singular { .. })
        ));
    }

    #[test]
    fn field_mismatch_is_reported() {
        let a = Matrix::identity(gf(7), 2);
        let b = Matrix::identity(gf(11), 2);
        assert!(matches!(
            a.mat_mul(&b),
            Err(LinalgError::FieldMismatch { .. })
        ));
    }

    #[test]
    fn stacking_and_selection() {
        let f = gf(7);
        let a = Matrix::from_signed(f, &[&[1, 2, 3]]).unwrap();
        let b = Matrix::from_signed(f, &[&[4, 5, 6]]).unwrap();
        let v = Matrix::vstack(&[&a, &b]).unwrap();
        assert_eq!(v.shape(), (2, 3));
        let h = Matrix::hstack(&[&a, &b]).unwrap();
        assert_eq!(h.to_u64_rows(), vec![vec![1, 2, 3, 4, 5, 6]]);
        assert_eq!(
            v.select_columns(&[2, 0]).to_u64_rows(),
            vec![vec![3, 1], vec![6, 4]]
        );
        assert_eq!(v.select_rows(&[1]).to_u64_rows(), vec![vec![4, 5, 6]]);
        assert!(Matrix::hstack(&[&a, &v]).is_err());
    }
}
