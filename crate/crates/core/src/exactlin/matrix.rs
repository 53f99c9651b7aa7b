use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use num_traits::{One, Signed, Zero};

use super::{LinError, Rational, Subspace};

/// Dense rational matrix in row-major order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RMatrix {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rational::one();
        }
        m
    }

    /// Builds a matrix from row vectors. All rows must share a length; an empty
    /// list gives a `0 x cols` matrix.
    pub fn from_rows(rows: Vec<Vec<Rational>>, cols: usize) -> Result<Self, LinError> {
        let r = rows.len();
        let mut data = Vec::with_capacity(r * cols);
        for row in rows {
            if row.len() != cols {
                return Err(LinError::Shape(format!(
                    "row of length {} in {}-column matrix",
                    row.len(),
                    cols
                )));
            }
            data.extend(row);
        }
        Ok(RMatrix {
            rows: r,
            cols,
            data,
        })
    }

    pub fn from_i64(rows: &[Vec<i64>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let data = rows
            .iter()
            .flat_map(|r| {
                assert_eq!(r.len(), cols, "ragged integer matrix");
                r.iter().map(|&v| super::int(v))
            })
            .collect();
        RMatrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Rational]> {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn column(&self, j: usize) -> Vec<Rational> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn push_row(&mut self, row: Vec<Rational>) {
        assert_eq!(row.len(), self.cols);
        self.data.extend(row);
        self.rows += 1;
    }

    /// Vertical concatenation.
    pub fn stack(&self, other: &RMatrix) -> Result<RMatrix, LinError> {
        if self.cols != other.cols {
            return Err(LinError::Shape(format!(
                "stacking {} and {} columns",
                self.cols, other.cols
            )));
        }
        let mut data = self.data.clone();
        data.extend(other.data.iter().cloned());
        Ok(RMatrix {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn transpose(&self) -> RMatrix {
        let mut t = RMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn mul_vec(&self, v: &[Rational]) -> Vec<Rational> {
        assert_eq!(v.len(), self.cols);
        self.rows().map(|r| super::dot(r, v)).collect()
    }

    /// Reduced row-echelon form together with the pivot columns.
    pub fn rref_with_pivots(&self) -> (RMatrix, Vec<usize>) {
        let mut m = self.clone();
        let pivots = m.rref_in_place();
        (m, pivots)
    }

    pub fn rref(&self) -> RMatrix {
        self.rref_with_pivots().0
    }

    fn rref_in_place(&mut self) -> Vec<usize> {
        let (rows, cols) = (self.rows, self.cols);
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..cols {
            if r == rows {
                break;
            }
            let Some(p) = (r..rows).find(|&i| !self[(i, c)].is_zero()) else {
                continue;
            };
            self.swap_rows(r, p);
            let inv = self[(r, c)].recip();
            if !inv.is_one() {
                for j in c..cols {
                    let v = &self.data[r * cols + j] * &inv;
                    self.data[r * cols + j] = v;
                }
            }
            for i in 0..rows {
                if i == r || self[(i, c)].is_zero() {
                    continue;
                }
                let factor = self[(i, c)].clone();
                for j in c..cols {
                    if self.data[r * cols + j].is_zero() {
                        continue;
                    }
                    let v = &self.data[r * cols + j] * &factor;
                    self.data[i * cols + j] -= v;
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn rank(&self) -> usize {
        self.rref_with_pivots().1.len()
    }

    /// Drops the zero rows of an echelon matrix.
    pub(crate) fn without_zero_rows(&self) -> RMatrix {
        let rows: Vec<Vec<Rational>> = self
            .rows()
            .filter(|r| r.iter().any(|x| !x.is_zero()))
            .map(|r| r.to_vec())
            .collect();
        RMatrix::from_rows(rows, self.cols).expect("row lengths preserved")
    }

    /// Null space `{x : self * x = 0}` as a canonical subspace of `Q^cols`.
    pub fn kernel(&self) -> Subspace {
        Subspace::from_span(&self.kernel_basis())
    }

    /// One basis vector per free column, read off the reduced echelon form.
    pub(crate) fn kernel_basis(&self) -> RMatrix {
        let (r, pivots) = self.rref_with_pivots();
        let cols = self.cols;
        let mut is_pivot = vec![false; cols];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let mut basis = RMatrix::zeros(0, cols);
        for free in (0..cols).filter(|&c| !is_pivot[c]) {
            let mut v = vec![Rational::zero(); cols];
            v[free] = Rational::one();
            for (i, &p) in pivots.iter().enumerate() {
                v[p] = -r[(i, free)].clone();
            }
            basis.push_row(v);
        }
        basis
    }

    /// Exact determinant by fraction elimination.
    pub fn determinant(&self) -> Result<Rational, LinError> {
        if self.rows != self.cols {
            return Err(LinError::Shape(format!(
                "determinant of {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let mut m = self.clone();
        let mut det = Rational::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&i| !m[(i, c)].is_zero()) else {
                return Ok(Rational::zero());
            };
            if p != c {
                m.swap_rows(p, c);
                det = -det;
            }
            let pivot = m[(c, c)].clone();
            det *= &pivot;
            for i in c + 1..n {
                if m[(i, c)].is_zero() {
                    continue;
                }
                let factor = &m[(i, c)] / &pivot;
                for j in c..n {
                    let v = &m[(c, j)] * &factor;
                    m[(i, j)] -= v;
                }
            }
        }
        Ok(det)
    }

    pub fn inverse(&self) -> Result<RMatrix, LinError> {
        if self.rows != self.cols {
            return Err(LinError::Shape(format!(
                "inverse of {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let mut aug = RMatrix::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, n + i)] = Rational::one();
        }
        let (r, pivots) = aug.rref_with_pivots();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return Err(LinError::Singular);
        }
        let mut inv = RMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv[(i, j)] = r[(i, n + j)].clone();
            }
        }
        Ok(inv)
    }

    /// Largest denominator bit length; used to watch coefficient growth.
    pub fn max_denominator_bits(&self) -> u64 {
        self.data
            .iter()
            .map(|x| x.denom().bits())
            .max()
            .unwrap_or(0)
    }

    pub fn all_reduced(&self) -> bool {
        use num_integer::Integer;
        self.data
            .iter()
            .all(|x| x.denom().is_positive() && x.numer().gcd(x.denom()).is_one())
    }
}

impl Index<(usize, usize)> for RMatrix {
    type Output = Rational;
    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for RMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &RMatrix {
    type Output = RMatrix;
    fn mul(self, rhs: &RMatrix) -> RMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out = RMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = &rhs[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a * b;
                    }
                }
            }
        }
        out
    }
}

/// `num/den` form, or just `num` for integers.
pub fn rational_to_string(x: &Rational) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

impl fmt::Debug for RMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RMatrix {}x{} [", self.rows, self.cols)?;
        for r in self.rows() {
            let cells: Vec<String> = r.iter().map(rational_to_string).collect();
            writeln!(f, "  [{}]", cells.join(", "))?;
        }
        write!(f, "]")
    }
}
