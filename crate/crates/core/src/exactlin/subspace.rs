use std::hash::{Hash, Hasher};

use num_traits::Zero;

use super::{LinError, RMatrix, Rational};

/// Linear subspace of `Q^d` in canonical form.
///
/// `basis` is the reduced row-echelon form of any spanning set with zero rows
/// dropped, so two subspaces are equal iff their bases are equal. The
/// annihilator (defining forms) is kept alongside in the same canonical form.
#[derive(Clone)]
pub struct Subspace {
    ambient_dim: usize,
    basis: RMatrix,
    annihilator: RMatrix,
}

impl Subspace {
    pub fn from_span(span: &RMatrix) -> Self {
        let basis = span.rref().without_zero_rows();
        let annihilator = basis.kernel_basis().rref().without_zero_rows();
        Subspace {
            ambient_dim: span.ncols(),
            basis,
            annihilator,
        }
    }

    /// Common zero set of the rows of `forms`.
    pub fn from_forms(forms: &RMatrix) -> Self {
        let annihilator = forms.rref().without_zero_rows();
        let basis = annihilator.kernel_basis().rref().without_zero_rows();
        Subspace {
            ambient_dim: forms.ncols(),
            basis,
            annihilator,
        }
    }

    pub fn full(d: usize) -> Self {
        Subspace {
            ambient_dim: d,
            basis: RMatrix::identity(d),
            annihilator: RMatrix::zeros(0, d),
        }
    }

    pub fn zero(d: usize) -> Self {
        Subspace {
            ambient_dim: d,
            basis: RMatrix::zeros(0, d),
            annihilator: RMatrix::identity(d),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn codim(&self) -> usize {
        self.ambient_dim - self.dim()
    }

    pub fn basis(&self) -> &RMatrix {
        &self.basis
    }

    /// Canonical defining forms: `x` lies in the subspace iff every row dotted with `x` is zero.
    pub fn annihilator(&self) -> &RMatrix {
        &self.annihilator
    }

    pub fn contains_vector(&self, v: &[Rational]) -> bool {
        self.annihilator.rows().all(|f| super::dot(f, v).is_zero())
    }

    /// `other ⊆ self`.
    pub fn contains(&self, other: &Subspace) -> bool {
        other.ambient_dim == self.ambient_dim && other.basis.rows().all(|b| self.contains_vector(b))
    }

    pub fn intersect(&self, other: &Subspace) -> Result<Subspace, LinError> {
        if self.ambient_dim != other.ambient_dim {
            return Err(LinError::AmbientMismatch(
                self.ambient_dim,
                other.ambient_dim,
            ));
        }
        if self.contains(other) {
            return Ok(other.clone());
        }
        if other.contains(self) {
            return Ok(self.clone());
        }
        Ok(Subspace::from_forms(
            &self.annihilator.stack(&other.annihilator)?,
        ))
    }

    pub fn sum(&self, other: &Subspace) -> Result<Subspace, LinError> {
        if self.ambient_dim != other.ambient_dim {
            return Err(LinError::AmbientMismatch(
                self.ambient_dim,
                other.ambient_dim,
            ));
        }
        Ok(Subspace::from_span(&self.basis.stack(&other.basis)?))
    }

    /// Image under a linear map given as a square matrix acting on column vectors.
    pub fn image(&self, map: &RMatrix) -> Subspace {
        assert_eq!(map.ncols(), self.ambient_dim);
        let rows: Vec<Vec<Rational>> = self.basis.rows().map(|b| map.mul_vec(b)).collect();
        Subspace::from_span(&RMatrix::from_rows(rows, map.nrows()).expect("consistent shape"))
    }

    /// Matrix of `map` restricted to this subspace, in coordinates of the
    /// canonical basis. Requires `map` to leave the subspace invariant.
    pub fn restricted_action(&self, map: &RMatrix) -> Result<RMatrix, LinError> {
        let d = self.dim();
        let mut out = RMatrix::zeros(d, d);
        let pivots: Vec<usize> = self.basis.rref_with_pivots().1;
        for (col, b) in self.basis.rows().enumerate() {
            let img = map.mul_vec(b);
            if !self.contains_vector(&img) {
                return Err(LinError::Shape("map does not preserve the subspace".into()));
            }
            // In rref, the coordinate on basis row i is the entry at its pivot column.
            for (i, &p) in pivots.iter().enumerate() {
                out[(i, col)] = img[p].clone();
            }
        }
        Ok(out)
    }
}

impl PartialEq for Subspace {
    fn eq(&self, other: &Self) -> bool {
        self.ambient_dim == other.ambient_dim && self.basis == other.basis
    }
}

impl Eq for Subspace {}

impl Hash for Subspace {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.ambient_dim.hash(state);
        self.basis.hash(state);
    }
}

impl std::fmt::Debug for Subspace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Subspace(dim {} of {}) {:?}",
            self.dim(),
            self.ambient_dim,
            self.basis
        )
    }
}
