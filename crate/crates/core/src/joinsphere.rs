//! The join `P = P(1) * P(2)` of two regular `2n`-gons, a triangulation of
//! `S^3`, with the free `Q4n` action in either vertex convention.
//!
//! Tetrahedra are `a_p a_{p+1} b_q b_{q+1}` labelled `(p, q)`. Every triangle is
//! mixed: `A(p, q) = a_p a_{p+1} b_q` or `B(p, q) = a_p b_q b_{q+1}`.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::qgroup::{DElement, GroupError, GroupSpec, QElement};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum JoinError {
    #[error("the join needs n >= 2 to be simplicial, got {0}")]
    TooSmall(u32),
    #[error(transparent)]
    Group(#[from] GroupError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Vertex {
    pub family: Family,
    pub index: u32,
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self.family {
            Family::A => 'a',
            Family::B => 'b',
        };
        write!(f, "{c}{}", self.index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TetraLabel {
    pub p: u32,
    pub q: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Triangle {
    /// `a_p a_{p+1} b_q`
    A { p: u32, q: u32 },
    /// `a_p b_q b_{q+1}`
    B { p: u32, q: u32 },
}

impl fmt::Display for Triangle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Triangle::A { p, q } => write!(f, "A({p},{q})"),
            Triangle::B { p, q } => write!(f, "B({p},{q})"),
        }
    }
}

/// Vertex enumeration convention.
///
/// `TwoFan`: `ε a_p = a_{p+1}`, `ε b_q = b_{q-1}`, `j a_p = b_p`, `j b_q = a_{q+n}`.
/// `ThreeFan`: `ε a_p = a_{p+1}`, `ε b_q = b_{q+1}`, `j a_p = b_{n-p+1}`, `j b_q = a_{1-q}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Convention {
    TwoFan,
    ThreeFan,
}

impl Convention {
    /// Homomorphism `Q4n -> D2n` through which the target space is acted on.
    ///
    /// `TwoFan` uses `θ`. Under `ThreeFan` the map `a_p ↦ v_p` intertwines `ε` with
    /// `E^{-1}`, so `θ` is precomposed with the automorphism `ε ↦ ε^{-1}, j ↦ j`.
    pub fn target_hom(self, spec: &GroupSpec, g: QElement) -> DElement {
        match self {
            Convention::TwoFan => spec.theta(g),
            Convention::ThreeFan => spec.theta(spec.q(-(g.eps_exp as i64), g.j_flag)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct JoinComplex {
    pub n: u32,
    pub convention: Convention,
    pub group: GroupSpec,
    orientation: Vec<i8>,
}

fn sort_with_sign<const N: usize>(mut v: [Vertex; N]) -> ([Vertex; N], i8) {
    let mut sign = 1;
    for i in 0..N {
        for j in 0..N - 1 - i {
            if v[j] > v[j + 1] {
                v.swap(j, j + 1);
                sign = -sign;
            }
        }
    }
    (v, sign)
}

impl JoinComplex {
    pub fn build(n: u32, convention: Convention) -> Result<Self, JoinError> {
        if n < 2 {
            return Err(JoinError::TooSmall(n));
        }
        let group = GroupSpec::new(n)?;
        let mut c = JoinComplex {
            n,
            convention,
            group,
            orientation: vec![1; (4 * n * n) as usize],
        };
        if c.coherence_defect().is_some() {
            c.orientation = c.propagate_orientation();
        }
        Ok(c)
    }

    fn m(&self) -> i64 {
        2 * self.n as i64
    }

    fn r(&self, x: i64) -> u32 {
        x.rem_euclid(self.m()) as u32
    }

    pub fn a(&self, p: i64) -> Vertex {
        Vertex {
            family: Family::A,
            index: self.r(p),
        }
    }

    pub fn b(&self, q: i64) -> Vertex {
        Vertex {
            family: Family::B,
            index: self.r(q),
        }
    }

    pub fn label(&self, p: i64, q: i64) -> TetraLabel {
        TetraLabel {
            p: self.r(p),
            q: self.r(q),
        }
    }

    pub fn tri_a(&self, p: i64, q: i64) -> Triangle {
        Triangle::A {
            p: self.r(p),
            q: self.r(q),
        }
    }

    pub fn tri_b(&self, p: i64, q: i64) -> Triangle {
        Triangle::B {
            p: self.r(p),
            q: self.r(q),
        }
    }

    pub fn vertices(&self) -> Vec<Vertex> {
        let m = self.m();
        (0..m)
            .map(|p| self.a(p))
            .chain((0..m).map(|q| self.b(q)))
            .collect()
    }

    pub fn tetra_count(&self) -> usize {
        (4 * self.n * self.n) as usize
    }

    pub fn tetra_index(&self, t: TetraLabel) -> usize {
        (t.p * 2 * self.n + t.q) as usize
    }

    pub fn tetras(&self) -> Vec<TetraLabel> {
        let m = self.m();
        (0..m)
            .flat_map(|p| (0..m).map(move |q| (p, q)))
            .map(|(p, q)| self.label(p, q))
            .collect()
    }

    pub fn triangles(&self) -> Vec<Triangle> {
        let m = self.m();
        let mut out = Vec::with_capacity((2 * m * m) as usize);
        for p in 0..m {
            for q in 0..m {
                out.push(self.tri_a(p, q));
                out.push(self.tri_b(p, q));
            }
        }
        out
    }

    pub fn edges(&self) -> Vec<[Vertex; 2]> {
        let m = self.m();
        let mut out = Vec::new();
        for p in 0..m {
            out.push([self.a(p), self.a(p + 1)]);
            out.push([self.b(p), self.b(p + 1)]);
            for q in 0..m {
                out.push([self.a(p), self.b(q)]);
            }
        }
        out
    }

    /// Ordered vertices `(a_p, a_{p+1}, b_q, b_{q+1})`.
    pub fn tetra_vertices(&self, t: TetraLabel) -> [Vertex; 4] {
        let (p, q) = (t.p as i64, t.q as i64);
        [self.a(p), self.a(p + 1), self.b(q), self.b(q + 1)]
    }

    pub fn triangle_vertices(&self, tri: Triangle) -> [Vertex; 3] {
        match tri {
            Triangle::A { p, q } => [self.a(p as i64), self.a(p as i64 + 1), self.b(q as i64)],
            Triangle::B { p, q } => [self.a(p as i64), self.b(q as i64), self.b(q as i64 + 1)],
        }
    }

    /// The four triangles of a tetrahedron.
    pub fn faces(&self, t: TetraLabel) -> [Triangle; 4] {
        let (p, q) = (t.p as i64, t.q as i64);
        [
            self.tri_a(p, q),
            self.tri_a(p, q + 1),
            self.tri_b(p, q),
            self.tri_b(p + 1, q),
        ]
    }

    /// The two tetrahedra containing a triangle.
    pub fn cofaces(&self, tri: Triangle) -> [TetraLabel; 2] {
        match tri {
            Triangle::A { p, q } => [
                self.label(p as i64, q as i64),
                self.label(p as i64, q as i64 - 1),
            ],
            Triangle::B { p, q } => [
                self.label(p as i64, q as i64),
                self.label(p as i64 - 1, q as i64),
            ],
        }
    }

    pub fn euler_characteristic(&self) -> i64 {
        let v = self.vertices().len() as i64;
        let e = self.edges().len() as i64;
        let f = self.triangles().len() as i64;
        let t = self.tetra_count() as i64;
        v - e + f - t
    }

    /// Orientation sign of the ordered tetrahedron `(a_p, a_{p+1}, b_q, b_{q+1})`.
    pub fn orientation(&self, t: TetraLabel) -> i8 {
        self.orientation[self.tetra_index(t)]
    }

    /// Induced boundary orientations `(sorted face, sign)` of an oriented tetrahedron.
    fn boundary(&self, t: TetraLabel, sign: i8) -> [([Vertex; 3], i8); 4] {
        let v = self.tetra_vertices(t);
        std::array::from_fn(|skip| {
            let face: Vec<Vertex> = (0..4).filter(|&i| i != skip).map(|i| v[i]).collect();
            let (sorted, s) = sort_with_sign([face[0], face[1], face[2]]);
            let alt = if skip % 2 == 0 { 1 } else { -1 };
            (sorted, sign * s * alt)
        })
    }

    /// A triangle whose two cofaces do not induce opposite orientations, if any.
    pub fn coherence_defect(&self) -> Option<[Vertex; 3]> {
        let mut acc: HashMap<[Vertex; 3], (i32, u32)> = HashMap::new();
        for t in self.tetras() {
            for (face, s) in self.boundary(t, self.orientation(t)) {
                let e = acc.entry(face).or_insert((0, 0));
                e.0 += s as i32;
                e.1 += 1;
            }
        }
        acc.into_iter()
            .find(|(_, (sum, count))| *sum != 0 || *count != 2)
            .map(|(f, _)| f)
    }

    pub fn is_coherent(&self) -> bool {
        self.coherence_defect().is_none()
    }

    fn propagate_orientation(&self) -> Vec<i8> {
        let mut signs = vec![0i8; self.tetra_count()];
        let start = self.label(0, 0);
        signs[self.tetra_index(start)] = 1;
        let mut queue = VecDeque::from([start]);
        while let Some(t) = queue.pop_front() {
            let st = signs[self.tetra_index(t)];
            for (tri, (face, s)) in self.faces(t).into_iter().zip(self.boundary_by_face(t, st)) {
                let other = self
                    .cofaces(tri)
                    .into_iter()
                    .find(|&u| u != t)
                    .expect("two cofaces");
                let oi = self.tetra_index(other);
                if signs[oi] != 0 {
                    continue;
                }
                let induced = self
                    .boundary(other, 1)
                    .into_iter()
                    .find(|(f, _)| *f == face)
                    .expect("shared face")
                    .1;
                signs[oi] = -s * induced;
                queue.push_back(other);
            }
        }
        signs
    }

    /// Boundary orientations listed in the order of [`Self::faces`].
    fn boundary_by_face(&self, t: TetraLabel, sign: i8) -> [([Vertex; 3], i8); 4] {
        let b = self.boundary(t, sign);
        self.faces(t).map(|tri| {
            let (key, _) = sort_with_sign(self.triangle_vertices(tri));
            *b.iter().find(|(f, _)| *f == key).expect("face of tetra")
        })
    }

    pub fn act_vertex(&self, g: QElement, v: Vertex) -> Vertex {
        let n = self.n as i64;
        let mut v = v;
        if g.j_flag {
            let i = v.index as i64;
            v = match (self.convention, v.family) {
                (Convention::TwoFan, Family::A) => self.b(i),
                (Convention::TwoFan, Family::B) => self.a(i + n),
                (Convention::ThreeFan, Family::A) => self.b(n - i + 1),
                (Convention::ThreeFan, Family::B) => self.a(1 - i),
            };
        }
        let a = g.eps_exp as i64;
        let i = v.index as i64;
        match (self.convention, v.family) {
            (_, Family::A) => self.a(i + a),
            (Convention::TwoFan, Family::B) => self.b(i - a),
            (Convention::ThreeFan, Family::B) => self.b(i + a),
        }
    }

    /// Label of the tetrahedron with the given vertex set.
    pub fn tetra_from_vertices(&self, vs: &[Vertex]) -> Option<TetraLabel> {
        let a: Vec<i64> = vs
            .iter()
            .filter(|v| v.family == Family::A)
            .map(|v| v.index as i64)
            .collect();
        let b: Vec<i64> = vs
            .iter()
            .filter(|v| v.family == Family::B)
            .map(|v| v.index as i64)
            .collect();
        if a.len() != 2 || b.len() != 2 {
            return None;
        }
        Some(self.label(self.lower_end(a[0], a[1])?, self.lower_end(b[0], b[1])?))
    }

    pub fn triangle_from_vertices(&self, vs: &[Vertex]) -> Option<Triangle> {
        let a: Vec<i64> = vs
            .iter()
            .filter(|v| v.family == Family::A)
            .map(|v| v.index as i64)
            .collect();
        let b: Vec<i64> = vs
            .iter()
            .filter(|v| v.family == Family::B)
            .map(|v| v.index as i64)
            .collect();
        match (a.len(), b.len()) {
            (2, 1) => Some(self.tri_a(self.lower_end(a[0], a[1])?, b[0])),
            (1, 2) => Some(self.tri_b(a[0], self.lower_end(b[0], b[1])?)),
            _ => None,
        }
    }

    /// For an edge `{x, x+1}` of a `2n`-gon, returns `x`.
    fn lower_end(&self, x: i64, y: i64) -> Option<i64> {
        if self.r(x + 1) == self.r(y) {
            Some(x)
        } else if self.r(y + 1) == self.r(x) {
            Some(y)
        } else {
            None
        }
    }

    pub fn act_on_label(&self, g: QElement, t: TetraLabel) -> TetraLabel {
        let vs = self.tetra_vertices(t).map(|v| self.act_vertex(g, v));
        self.tetra_from_vertices(&vs)
            .expect("action maps tetrahedra to tetrahedra")
    }

    pub fn act_on_triangle(&self, g: QElement, tri: Triangle) -> Triangle {
        let vs = self.triangle_vertices(tri).map(|v| self.act_vertex(g, v));
        self.triangle_from_vertices(&vs)
            .expect("action maps triangles to triangles")
    }

    /// Sign with which `g` carries the oriented tetrahedron `t` onto `g·t`.
    pub fn orientation_sign(&self, g: QElement, t: TetraLabel) -> i8 {
        let img = self.tetra_vertices(t).map(|v| self.act_vertex(g, v));
        let gt = self.tetra_from_vertices(&img).expect("tetra image");
        let canon = self.tetra_vertices(gt);
        let perm: [usize; 4] =
            img.map(|v| canon.iter().position(|&c| c == v).expect("same vertex set"));
        let mut parity = 1i8;
        for i in 0..4 {
            for j in i + 1..4 {
                if perm[i] > perm[j] {
                    parity = -parity;
                }
            }
        }
        parity * self.orientation(t) * self.orientation(gt)
    }

    pub fn preserves_orientation(&self) -> bool {
        let tetras = self.tetras();
        self.group
            .q_elements()
            .into_iter()
            .all(|g| tetras.iter().all(|&t| self.orientation_sign(g, t) == 1))
    }

    /// No nontrivial element fixes any simplex setwise (and hence has no fixed point).
    pub fn check_free_action(&self) -> bool {
        self.free_action_witness().is_none()
    }

    pub fn free_action_witness(&self) -> Option<(QElement, String)> {
        let mut simplices: Vec<Vec<Vertex>> =
            self.vertices().into_iter().map(|v| vec![v]).collect();
        simplices.extend(self.edges().into_iter().map(|e| e.to_vec()));
        simplices.extend(
            self.triangles()
                .into_iter()
                .map(|t| self.triangle_vertices(t).to_vec()),
        );
        simplices.extend(
            self.tetras()
                .into_iter()
                .map(|t| self.tetra_vertices(t).to_vec()),
        );
        for g in self
            .group
            .q_elements()
            .into_iter()
            .filter(|&g| g != QElement::IDENTITY)
        {
            for s in &simplices {
                let mut img: Vec<Vertex> = s.iter().map(|&v| self.act_vertex(g, v)).collect();
                let mut orig = s.clone();
                img.sort();
                orig.sort();
                if img == orig {
                    let names: Vec<String> = s.iter().map(|v| v.to_string()).collect();
                    return Some((g, names.join(" ")));
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        for n in 2..6 {
            let c = JoinComplex::build(n, Convention::TwoFan).unwrap();
            let n = n as usize;
            assert_eq!(c.vertices().len(), 4 * n);
            assert_eq!(c.tetras().len(), 4 * n * n);
            assert_eq!(c.triangles().len(), 8 * n * n);
            assert_eq!(c.edges().len(), 4 * n + 4 * n * n);
            assert_eq!(c.euler_characteristic(), 0);
        }
    }

    #[test]
    fn too_small_rejected() {
        assert_eq!(
            JoinComplex::build(1, Convention::TwoFan).unwrap_err(),
            JoinError::TooSmall(1)
        );
    }

    #[test]
    fn faces_and_cofaces_agree() {
        let c = JoinComplex::build(3, Convention::ThreeFan).unwrap();
        for t in c.tetras() {
            for f in c.faces(t) {
                assert!(c.cofaces(f).contains(&t));
            }
        }
    }

    #[test]
    fn naive_orientation_is_coherent() {
        for conv in [Convention::TwoFan, Convention::ThreeFan] {
            let c = JoinComplex::build(3, conv).unwrap();
            assert!(c.is_coherent());
            assert!(c.tetras().iter().all(|&t| c.orientation(t) == 1));
        }
    }

    #[test]
    fn propagation_reproduces_a_coherent_orientation() {
        let c = JoinComplex::build(4, Convention::TwoFan).unwrap();
        let mut d = c.clone();
        d.orientation = c.propagate_orientation();
        assert!(d.is_coherent());
    }

    #[test]
    fn two_fan_label_rules() {
        let c = JoinComplex::build(3, Convention::TwoFan).unwrap();
        let g = c.group;
        assert_eq!(c.act_on_label(g.eps(), c.label(0, 2)), c.label(1, 1));
        assert_eq!(c.act_on_label(g.j(), c.label(1, 4)), c.label(1, 1));
        for t in c.tetras() {
            let (p, q) = (t.p as i64, t.q as i64);
            assert_eq!(c.act_on_label(g.eps(), t), c.label(p + 1, q - 1));
            assert_eq!(c.act_on_label(g.j(), t), c.label(q + 3, p));
        }
    }

    #[test]
    fn three_fan_label_rules() {
        let c = JoinComplex::build(5, Convention::ThreeFan).unwrap();
        let g = c.group;
        for t in c.tetras() {
            let (p, q) = (t.p as i64, t.q as i64);
            assert_eq!(c.act_on_label(g.eps(), t), c.label(p + 1, q + 1));
            assert_eq!(c.act_on_label(g.j(), t), c.label(-q, 5 - p));
        }
    }

    #[test]
    fn action_is_free_and_orientation_preserving() {
        for conv in [Convention::TwoFan, Convention::ThreeFan] {
            for n in [3, 5] {
                let c = JoinComplex::build(n, conv).unwrap();
                assert!(c.check_free_action(), "{conv:?} n={n}");
                assert!(c.preserves_orientation(), "{conv:?} n={n}");
            }
        }
    }

    #[test]
    fn target_hom_is_homomorphism() {
        let g = GroupSpec::new(5).unwrap();
        for conv in [Convention::TwoFan, Convention::ThreeFan] {
            for x in g.q_elements() {
                for y in g.q_elements() {
                    let lhs = conv.target_hom(&g, g.q_mul(x, y));
                    let rhs = g.d_mul(conv.target_hom(&g, x), conv.target_hom(&g, y));
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }
}
