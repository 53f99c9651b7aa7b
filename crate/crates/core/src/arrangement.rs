//! Representation spaces `Mat = Mat_{(m-1) x n}` and `W = W_n^{⊕(m-1)}`, the
//! dihedral action on them, the subspace `L(α)` and the invariant arrangement
//! `𝒜(α)` it generates.
//!
//! Vectors of `Mat` are stored column-block major: entry `(row r, column i)`
//! lives at coordinate `i * (m-1) + r`, matching the column decomposition
//! `Mat = L_1 ⊕ ... ⊕ L_n`.

use std::collections::HashMap;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::exactlin::{int, LinError, RMatrix, Rational, Subspace};
use crate::qgroup::{DElement, GroupError, GroupSpec, QElement};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ArrangementError {
    #[error("invalid representation: {0}")]
    InvalidRep(String),
    #[error("invalid alpha vector: {0}")]
    InvalidAlpha(String),
    #[error("p = {p} out of range 1..={max}")]
    POutOfRange { p: usize, max: usize },
    #[error(transparent)]
    Lin(#[from] LinError),
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// Shape of the test space: `n` columns, `m` measures (so `m-1` rows).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RepSpec {
    n: usize,
    m: usize,
}

impl RepSpec {
    pub fn new(n: usize, m: usize) -> Result<Self, ArrangementError> {
        if n == 0 {
            return Err(ArrangementError::InvalidRep("n must be positive".into()));
        }
        if m < 2 {
            return Err(ArrangementError::InvalidRep(
                "need at least two measures".into(),
            ));
        }
        Ok(RepSpec { n, m })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn rows(&self) -> usize {
        self.m - 1
    }

    pub fn mat_dim(&self) -> usize {
        self.rows() * self.n
    }

    pub fn w_dim(&self) -> usize {
        self.rows() * (self.n - 1)
    }

    /// Coordinate of entry (`row`, `col`), both zero-based; `col` is taken mod `n`.
    pub fn index(&self, row: usize, col: i64) -> usize {
        col.rem_euclid(self.n as i64) as usize * self.rows() + row
    }

    pub fn group(&self) -> Result<GroupSpec, GroupError> {
        GroupSpec::new(self.n as u32)
    }

    /// Row-sum forms; `W` is their common kernel.
    pub fn w_forms(&self) -> RMatrix {
        let mut f = RMatrix::zeros(self.rows(), self.mat_dim());
        for r in 0..self.rows() {
            for c in 0..self.n {
                f[(r, self.index(r, c as i64))] = Rational::one();
            }
        }
        f
    }

    pub fn w(&self) -> Subspace {
        Subspace::from_forms(&self.w_forms())
    }

    /// The `m-1` coordinate forms of column `col` (the projection `π_col`).
    pub fn column_forms(&self, col: i64) -> RMatrix {
        let mut f = RMatrix::zeros(self.rows(), self.mat_dim());
        for r in 0..self.rows() {
            f[(r, self.index(r, col))] = Rational::one();
        }
        f
    }

    /// Column `col` of a vector of `Mat`.
    pub fn column(&self, x: &[Rational], col: i64) -> Vec<Rational> {
        (0..self.rows())
            .map(|r| x[self.index(r, col)].clone())
            .collect()
    }
}

/// `α = (a_1/n, ..., a_k/n)` with positive integer numerators summing to `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AlphaVector {
    parts: Vec<usize>,
}

impl AlphaVector {
    pub fn new(parts: Vec<usize>) -> Result<Self, ArrangementError> {
        if parts.is_empty() {
            return Err(ArrangementError::InvalidAlpha("empty".into()));
        }
        if parts.contains(&0) {
            return Err(ArrangementError::InvalidAlpha(format!(
                "{parts:?} has a zero entry"
            )));
        }
        Ok(AlphaVector { parts })
    }

    /// `(p/n, (n-p)/n)`
    pub fn two_fan(n: usize, p: usize) -> Result<Self, ArrangementError> {
        if p == 0 || p >= n {
            return Err(ArrangementError::POutOfRange {
                p,
                max: n.saturating_sub(1),
            });
        }
        Self::new(vec![p, n - p])
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn k(&self) -> usize {
        self.parts.len()
    }

    pub fn n(&self) -> usize {
        self.parts.iter().sum()
    }

    /// Zero-based column ranges of the consecutive blocks.
    pub fn blocks(&self) -> Vec<std::ops::Range<usize>> {
        let mut start = 0;
        self.parts
            .iter()
            .map(|&a| {
                let r = start..start + a;
                start += a;
                r
            })
            .collect()
    }

    pub fn pairwise_distinct(&self) -> bool {
        let mut v = self.parts.clone();
        v.sort_unstable();
        v.windows(2).all(|w| w[0] != w[1])
    }
}

/// Permutation matrix of `g = E^a J^b` on `Mat`, with
/// `E(x_1..x_n) = (x_2..x_n, x_1)` and `J(x_1..x_n) = (x_n..x_1)` on columns.
pub fn action_matrix(g: DElement, spec: &RepSpec) -> RMatrix {
    let n = spec.n as i64;
    let mut m = RMatrix::zeros(spec.mat_dim(), spec.mat_dim());
    for k in 0..n {
        // (E^a y)_k = y_{k+a};  (J x)_l = x_{n-1-l}
        let l = (k + g.e_exp as i64).rem_euclid(n);
        let src = if g.j_flag { n - 1 - l } else { l };
        for r in 0..spec.rows() {
            m[(spec.index(r, k), spec.index(r, src))] = Rational::one();
        }
    }
    m
}

/// Defining forms `z_1, ..., z_k` of `L(α)`, each contributing `m-1` rows.
pub fn alpha_forms(alpha: &AlphaVector, spec: &RepSpec) -> Result<RMatrix, ArrangementError> {
    if alpha.n() != spec.n {
        return Err(ArrangementError::InvalidAlpha(format!(
            "numerators sum to {} but n = {}",
            alpha.n(),
            spec.n
        )));
    }
    let mut f = RMatrix::zeros(0, spec.mat_dim());
    for block in alpha.blocks() {
        for r in 0..spec.rows() {
            let mut row = vec![Rational::zero(); spec.mat_dim()];
            for c in block.clone() {
                row[spec.index(r, c as i64)] = Rational::one();
            }
            f.push_row(row);
        }
    }
    Ok(f)
}

/// `L(α) = {x ∈ W : z_1(x) = ... = z_k(x) = 0}`.
pub fn build_l_alpha(alpha: &AlphaVector, spec: &RepSpec) -> Result<Subspace, ArrangementError> {
    let forms = alpha_forms(alpha, spec)?;
    Ok(Subspace::from_forms(&spec.w_forms().stack(&forms)?))
}

/// Ordered defining forms of `L(α)` inside `W`: `z_1, ..., z_{k-1}` (the last
/// block is redundant on `W`).
fn oriented_base_forms(alpha: &AlphaVector, spec: &RepSpec) -> Result<RMatrix, ArrangementError> {
    let all = alpha_forms(alpha, spec)?;
    let keep = (alpha.k() - 1) * spec.rows();
    let rows = all.rows().take(keep).map(|r| r.to_vec()).collect();
    Ok(RMatrix::from_rows(rows, spec.mat_dim())?)
}

/// Small bitset over maximal subspaces.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GenSet(Vec<u64>);

impl GenSet {
    fn new(len: usize) -> Self {
        GenSet(vec![0; len.div_ceil(64).max(1)])
    }
    fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    pub fn contains(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }
    pub fn is_subset(&self, other: &GenSet) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & !b == 0)
    }
    pub fn len(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A maximal subspace of the arrangement with its orientation data.
#[derive(Debug, Clone)]
pub struct MaximalSubspace {
    pub subspace: Subspace,
    /// `g` with `g · L(α) = subspace`, fixed once per orbit element.
    pub coset_rep: DElement,
    /// Ordered defining forms transported from `L(α)` by `coset_rep`.
    pub oriented_forms: RMatrix,
    /// Setwise stabilizer in `D2n`.
    pub stabilizer: Vec<DElement>,
}

/// The smallest `D2n`-invariant arrangement containing `L(α)`, closed under
/// intersections.
#[derive(Debug, Clone)]
pub struct InvArrangement {
    pub spec: RepSpec,
    pub alpha: AlphaVector,
    pub group: GroupSpec,
    pub w: Subspace,
    pub maximal: Vec<MaximalSubspace>,
    /// All members; the first `maximal.len()` entries are the maximal ones.
    pub subspaces: Vec<Subspace>,
    /// For each member, the maximal subspaces containing it. Containment in the
    /// arrangement is reverse inclusion of these sets.
    pub supports: Vec<GenSet>,
    /// `perms[g]` sends maximal index `i` to the index of `g · S_i`.
    perms: HashMap<DElement, Vec<usize>>,
    index: HashMap<Subspace, usize>,
}

impl InvArrangement {
    pub fn maximal_index(&self, s: &Subspace) -> Option<usize> {
        self.index
            .get(s)
            .copied()
            .filter(|&i| i < self.maximal.len())
    }

    pub fn member_index(&self, s: &Subspace) -> Option<usize> {
        self.index.get(s).copied()
    }

    /// Index of `g · S_i`.
    pub fn act(&self, g: DElement, i: usize) -> usize {
        self.perms[&g][i]
    }

    pub fn permutation(&self, g: DElement) -> &[usize] {
        &self.perms[&g]
    }

    /// `a ⊆ b` for member indices.
    pub fn is_below(&self, a: usize, b: usize) -> bool {
        self.supports[b].is_subset(&self.supports[a])
    }

    /// Cover relations of the intersection poset as `(smaller, larger)` pairs.
    pub fn hasse_edges(&self) -> Vec<(usize, usize)> {
        let n = self.subspaces.len();
        let mut edges = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if a == b || !self.is_below(a, b) {
                    continue;
                }
                let covered =
                    (0..n).any(|c| c != a && c != b && self.is_below(a, c) && self.is_below(c, b));
                if !covered {
                    edges.push((a, b));
                }
            }
        }
        edges
    }

    /// Stabilizer of a maximal subspace pulled back along `hom: Q4n -> D2n`.
    pub fn q_stabilizer(&self, i: usize, hom: impl Fn(QElement) -> DElement) -> Vec<QElement> {
        let stab = &self.maximal[i].stabilizer;
        self.group
            .q_elements()
            .into_iter()
            .filter(|&h| stab.contains(&hom(h)))
            .collect()
    }

    pub fn codim_in_w(&self, s: &Subspace) -> usize {
        self.w.dim() - s.dim()
    }
}

/// Orbit of `L(α)` only: the maximal subspaces with stabilizers, orientation
/// data and the action permutation. `subspaces` holds just the orbit.
pub fn build_orbit(
    alpha: &AlphaVector,
    spec: &RepSpec,
) -> Result<InvArrangement, ArrangementError> {
    let group = spec.group()?;
    let base = build_l_alpha(alpha, spec)?;
    let base_forms = oriented_base_forms(alpha, spec)?;
    let elements = group.d_elements();
    let matrices: HashMap<DElement, RMatrix> = elements
        .iter()
        .map(|&g| (g, action_matrix(g, spec)))
        .collect();

    let mut maximal: Vec<MaximalSubspace> = Vec::new();
    let mut index: HashMap<Subspace, usize> = HashMap::new();
    for &g in &elements {
        let img = base.image(&matrices[&g]);
        if index.contains_key(&img) {
            continue;
        }
        let ginv = &matrices[&group.d_inverse(g)];
        index.insert(img.clone(), maximal.len());
        maximal.push(MaximalSubspace {
            subspace: img,
            coset_rep: g,
            oriented_forms: &base_forms * ginv,
            stabilizer: Vec::new(),
        });
    }

    let mut perms = HashMap::new();
    for &g in &elements {
        let perm: Vec<usize> = maximal
            .iter()
            .map(|s| index[&s.subspace.image(&matrices[&g])])
            .collect();
        perms.insert(g, perm);
    }
    for (i, s) in maximal.iter_mut().enumerate() {
        s.stabilizer = elements
            .iter()
            .copied()
            .filter(|g| perms[g][i] == i)
            .collect();
    }

    let count = maximal.len();
    let subspaces: Vec<Subspace> = maximal.iter().map(|s| s.subspace.clone()).collect();
    let supports = (0..count)
        .map(|i| {
            let mut set = GenSet::new(count);
            set.insert(i);
            set
        })
        .collect();
    Ok(InvArrangement {
        spec: *spec,
        alpha: alpha.clone(),
        group,
        w: spec.w(),
        maximal,
        subspaces,
        supports,
        perms,
        index,
    })
}

/// Full arrangement: the orbit of `L(α)` closed under intersections.
pub fn build_arrangement(
    alpha: &AlphaVector,
    spec: &RepSpec,
) -> Result<InvArrangement, ArrangementError> {
    let mut arr = build_orbit(alpha, spec)?;
    let gens: Vec<Subspace> = arr.maximal.iter().map(|s| s.subspace.clone()).collect();
    let count = gens.len();
    // Supports of the generators may be larger than a singleton only if one
    // generator contains another, which cannot happen inside one orbit.
    let mut cursor = 0;
    while cursor < arr.subspaces.len() {
        for (g, gen) in gens.iter().enumerate() {
            if arr.supports[cursor].contains(g) {
                continue;
            }
            let meet = arr.subspaces[cursor].intersect(gen)?;
            if arr.index.contains_key(&meet) {
                continue;
            }
            let mut support = GenSet::new(count);
            for (h, other) in gens.iter().enumerate() {
                if arr.supports[cursor].contains(h) || h == g || other.contains(&meet) {
                    support.insert(h);
                }
            }
            arr.index.insert(meet.clone(), arr.subspaces.len());
            arr.subspaces.push(meet);
            arr.supports.push(support);
        }
        cursor += 1;
    }
    Ok(arr)
}

/// Outcome of checking the hypotheses on the arrangement side.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionReport {
    /// Maximal subspaces have codimension 2 in `W` and distinct ones meet in codimension ≥ 4.
    pub a1: bool,
    pub maximal_codims: Vec<usize>,
    pub min_pairwise_codim: Option<usize>,
    /// Pair of maximal indices realizing `min_pairwise_codim` when A1 fails.
    pub a1_witness: Option<(usize, usize)>,
    /// Every element of `D2n` acts on `W` with determinant +1.
    pub a2: bool,
    pub a2_witness: Option<String>,
    /// Every stabilizer element preserves the orientation of its subspace.
    pub a3: bool,
    pub a3_witness: Option<(usize, String)>,
    /// Every stabilizer element preserves the ordered normal forms (the
    /// orientation convention used for curves).
    pub a3_normal: bool,
    pub a3_normal_witness: Option<(usize, String)>,
}

impl ConditionReport {
    pub fn all(&self) -> bool {
        self.a1 && self.a2 && self.a3
    }
}

/// Solves `T * m = rhs` for `T`, where `m` has full row rank.
fn solve_left(m: &RMatrix, rhs: &RMatrix) -> Option<RMatrix> {
    // Transposed: m^T T^T = rhs^T.
    let mt = m.transpose();
    let rt = rhs.transpose();
    let (rows, k) = (mt.nrows(), mt.ncols());
    let mut aug = RMatrix::zeros(rows, k + rt.ncols());
    for i in 0..rows {
        for j in 0..k {
            aug[(i, j)] = mt[(i, j)].clone();
        }
        for j in 0..rt.ncols() {
            aug[(i, k + j)] = rt[(i, j)].clone();
        }
    }
    let (r, pivots) = aug.rref_with_pivots();
    if pivots.len() != k || pivots.iter().any(|&p| p >= k) {
        return None;
    }
    let mut tt = RMatrix::zeros(k, rt.ncols());
    for i in 0..k {
        for j in 0..rt.ncols() {
            tt[(i, j)] = r[(i, k + j)].clone();
        }
    }
    Some(tt.transpose())
}

/// Restriction of a form matrix to `W`, in coordinates of `W`'s canonical basis.
fn forms_on_w(forms: &RMatrix, w: &Subspace) -> RMatrix {
    forms * &w.basis().transpose()
}

pub fn check_conditions(arr: &InvArrangement) -> Result<ConditionReport, ArrangementError> {
    let spec = &arr.spec;
    let w = &arr.w;
    let codims: Vec<usize> = arr
        .maximal
        .iter()
        .map(|s| arr.codim_in_w(&s.subspace))
        .collect();

    let mut min_pair: Option<(usize, (usize, usize))> = None;
    for i in 0..arr.maximal.len() {
        for j in i + 1..arr.maximal.len() {
            let meet = arr.maximal[i]
                .subspace
                .intersect(&arr.maximal[j].subspace)?;
            let c = arr.codim_in_w(&meet);
            if min_pair.is_none_or(|(m, _)| c < m) {
                min_pair = Some((c, (i, j)));
            }
        }
    }
    let a1 = codims.iter().all(|&c| c == 2) && min_pair.is_none_or(|(c, _)| c >= 4);

    let mut a2_witness = None;
    for g in arr.group.d_elements() {
        let det = w
            .restricted_action(&action_matrix(g, spec))?
            .determinant()?;
        if !det.is_one() {
            a2_witness = Some(format!("{g}: det {det}"));
            break;
        }
    }

    let mut a3_witness = None;
    let mut a3_normal_witness = None;
    for (i, s) in arr.maximal.iter().enumerate() {
        let normal = forms_on_w(&s.oriented_forms, w);
        for &g in &s.stabilizer {
            let mat = action_matrix(g, spec);
            let det = s.subspace.restricted_action(&mat)?.determinant()?;
            if !det.is_positive() && a3_witness.is_none() {
                a3_witness = Some((i, format!("{g}: det {det}")));
            }
            let moved = forms_on_w(
                &(&s.oriented_forms * &action_matrix(arr.group.d_inverse(g), spec)),
                w,
            );
            let ok = solve_left(&normal, &moved)
                .and_then(|t| t.determinant().ok())
                .is_some_and(|d| d.is_positive());
            if !ok && a3_normal_witness.is_none() {
                a3_normal_witness = Some((i, g.to_string()));
            }
        }
    }

    Ok(ConditionReport {
        a1,
        maximal_codims: codims,
        min_pairwise_codim: min_pair.map(|(c, _)| c),
        a1_witness: if a1 { None } else { min_pair.map(|(_, p)| p) },
        a2: a2_witness.is_none(),
        a2_witness,
        a3: a3_witness.is_none(),
        a3_witness,
        a3_normal: a3_normal_witness.is_none(),
        a3_normal_witness,
    })
}

/// Result of checking the intertwiner `C` between `𝒜(1/n, (n-1)/n)` and `𝒜(p/n, (n-p)/n)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropTwoReport {
    pub n: usize,
    pub p: usize,
    /// `EC = CE`
    pub commutes_with_e: bool,
    /// `CJ = J E^{-p-1} C`
    pub twisted_j: bool,
    /// The automorphism's image of `J`.
    pub theta_j: DElement,
    /// For odd `p = 2s-1`, `JE^{-p-1} = E^s J E^{-s}` (inner automorphism).
    pub inner_when_p_odd: Option<bool>,
    pub determinant: String,
    pub nonsingular: bool,
    /// `{C^{-1}(R_i)}` equals the maximal subspaces of `𝒜(p/n, (n-p)/n)`; only when nonsingular.
    pub arrangements_correspond: Option<bool>,
}

impl PropTwoReport {
    pub fn identities_hold(&self) -> bool {
        self.commutes_with_e && self.twisted_j && self.inner_when_p_odd.unwrap_or(true)
    }
}

/// `(Cx)_i = x_{i+1} + ... + x_{i+p}` on `Mat_{2 x n}` columns.
pub fn prop_two_matrix(spec: &RepSpec, p: usize) -> RMatrix {
    let mut c = RMatrix::zeros(spec.mat_dim(), spec.mat_dim());
    for i in 0..spec.n as i64 {
        for l in 1..=p as i64 {
            for r in 0..spec.rows() {
                c[(spec.index(r, i), spec.index(r, i + l))] += int(1);
            }
        }
    }
    c
}

pub fn verify_prop_two(n: usize, p: usize) -> Result<PropTwoReport, ArrangementError> {
    if p == 0 || p >= n {
        return Err(ArrangementError::POutOfRange {
            p,
            max: n.saturating_sub(1),
        });
    }
    let spec = RepSpec::new(n, 3)?;
    let group = spec.group()?;
    let c = prop_two_matrix(&spec, p);
    let e = action_matrix(group.big_e(), &spec);
    let j = action_matrix(group.big_j(), &spec);
    let theta_j = group.d_mul(group.big_j(), group.d(-(p as i64) - 1, false));
    let twisted = action_matrix(theta_j, &spec);

    let commutes_with_e = &e * &c == &c * &e;
    let twisted_j = &c * &j == &twisted * &c;
    let inner_when_p_odd = (p % 2 == 1).then(|| {
        let s = (p as i64 + 1) / 2;
        let conj = group.d_mul(
            group.d_mul(group.d(s, false), group.big_j()),
            group.d(-s, false),
        );
        conj == theta_j
    });

    let det = c.determinant()?;
    let nonsingular = !det.is_zero();
    let arrangements_correspond = if nonsingular {
        let cinv = c.inverse()?;
        let alpha_one = build_orbit(&AlphaVector::two_fan(n, 1)?, &spec)?;
        let beta = build_orbit(&AlphaVector::two_fan(n, p)?, &spec)?;
        let pulled: std::collections::HashSet<Subspace> = alpha_one
            .maximal
            .iter()
            .map(|s| s.subspace.image(&cinv))
            .collect();
        let target: std::collections::HashSet<Subspace> =
            beta.maximal.iter().map(|s| s.subspace.clone()).collect();
        Some(pulled == target)
    } else {
        None
    };

    Ok(PropTwoReport {
        n,
        p,
        commutes_with_e,
        twisted_j,
        theta_j,
        inner_when_p_odd,
        determinant: crate::exactlin::rational_to_string(&det),
        nonsingular,
        arrangements_correspond,
    })
}
