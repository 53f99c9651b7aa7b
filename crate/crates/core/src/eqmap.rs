//! Equivariant simplicial test maps `P -> W`, their good triangles and the
//! oriented singular set `Δ(f)`.

use std::collections::{BTreeSet, HashMap};

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arrangement::{action_matrix, AlphaVector, ArrangementError, InvArrangement, RepSpec};
use crate::exactlin::{dot, int, rat, rational_to_string, RMatrix, Rational, Subspace};
use crate::joinsphere::{Convention, Family, JoinComplex, JoinError, TetraLabel, Triangle, Vertex};
use crate::qgroup::QElement;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EqMapError {
    #[error("n must be odd, got {0}")]
    EvenN(u32),
    #[error("base vector must be nonzero")]
    ZeroBase,
    #[error("incompatible inputs: {0}")]
    Mismatch(String),
    #[error("transversality failure at {triangle} against subspace {subspace}: {reason}")]
    Transversality {
        triangle: Triangle,
        subspace: usize,
        reason: String,
    },
    #[error("tetrahedron ({}, {}) holds {count} crossings of subspace {subspace}", tetra.p, tetra.q)]
    CrossingCount {
        tetra: TetraLabel,
        subspace: usize,
        count: usize,
    },
    #[error("orientation failure: {0}")]
    Orientation(String),
    #[error("action does not preserve the singular set: {0}")]
    Equivariance(String),
    #[error(transparent)]
    Join(#[from] JoinError),
    #[error(transparent)]
    Arrangement(#[from] ArrangementError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FanCase {
    Fan2,
    Fan3,
}

/// Vertex images of a simplicial map `P -> Mat`.
#[derive(Debug, Clone)]
pub struct VertexMap {
    pub case: FanCase,
    pub n: u32,
    pub spec: RepSpec,
    pub convention: Convention,
    /// `v_0, ..., v_{n-1}`: polygon vertices in `R^2` (2-fan) or simplex vertices in `W_n` (3-fan).
    pub base: Vec<Vec<Rational>>,
    images: HashMap<Vertex, Vec<Rational>>,
}

impl VertexMap {
    pub fn image(&self, v: Vertex) -> &[Rational] {
        &self.images[&v]
    }

    /// Overwrites one vertex image; used to build negative controls.
    pub fn set_image(&mut self, v: Vertex, x: Vec<Rational>) {
        assert_eq!(x.len(), self.spec.mat_dim());
        self.images.insert(v, x);
    }

    pub fn images_in_w(&self) -> bool {
        let w = self.spec.w();
        self.images.values().all(|x| w.contains_vector(x))
    }

    /// Image of a point given by barycentric weights on `vs`.
    pub fn point(&self, vs: &[Vertex], weights: &[Rational]) -> Vec<Rational> {
        let mut x = vec![Rational::zero(); self.spec.mat_dim()];
        for (v, w) in vs.iter().zip(weights) {
            for (xi, yi) in x.iter_mut().zip(self.image(*v)) {
                *xi += w * yi;
            }
        }
        x
    }
}

fn check_odd(n: u32) -> Result<(), EqMapError> {
    if n % 2 == 0 {
        Err(EqMapError::EvenN(n))
    } else {
        Ok(())
    }
}

/// Integer approximation of the regular `n`-gon through `v0`, scaled so
/// that the vertex sum is exactly zero. Any points work for equivariance;
/// the zero sum puts the images in `W`.
pub fn rational_ngon(n: u32, v0: [i64; 2]) -> Result<Vec<[Rational; 2]>, EqMapError> {
    if v0 == [0, 0] {
        return Err(EqMapError::ZeroBase);
    }
    let (x0, y0) = (v0[0] as f64, v0[1] as f64);
    let scale = 1e6 / x0.hypot(y0);
    let raw: Vec<[i64; 2]> = (0..n)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / n as f64;
            let (s, c) = a.sin_cos();
            [
                ((c * x0 - s * y0) * scale).round() as i64,
                ((s * x0 + c * y0) * scale).round() as i64,
            ]
        })
        .collect();
    let sx: i64 = raw.iter().map(|v| v[0]).sum();
    let sy: i64 = raw.iter().map(|v| v[1]).sum();
    let n = n as i64;
    Ok(raw
        .iter()
        .map(|v| [int(n * v[0] - sx), int(n * v[1] - sy)])
        .collect())
}

/// `0` lies strictly inside the hull of regular `n`-gon vertices `idx` iff no
/// closed half-plane holds them, i.e. every circular gap is under `n/2`.
pub fn arc_contains_origin(n: u32, idx: [i64; 3]) -> bool {
    let n = n as i64;
    let mut r: Vec<i64> = idx.iter().map(|i| i.rem_euclid(n)).collect();
    r.sort_unstable();
    r.dedup();
    if r.len() < 3 {
        return false;
    }
    let gaps = [r[1] - r[0], r[2] - r[1], n - r[2] + r[0]];
    gaps.iter().all(|&g| 2 * g < n)
}

/// Column `c` (zero-based) of `f(v)` in the 2-fan map is `v_{fan2_index(v, c)}`.
pub fn fan2_index(n: u32, v: Vertex, c: u32) -> i64 {
    let (n, c, i) = (n as i64, c as i64, v.index as i64);
    match v.family {
        Family::A => i + c,
        Family::B => i + n - 1 - c,
    }
}

/// `f(a_p)` has column `i` equal to `v_{p+i-1}` and `f(b_q)` has column `i`
/// equal to `v_{q+n-i}`; the polygon comes from [`rational_ngon`].
pub fn build_map_fan2(n: u32, v0: [i64; 2]) -> Result<VertexMap, EqMapError> {
    check_odd(n)?;
    let spec = RepSpec::new(n as usize, 3)?;
    let poly = rational_ngon(n, v0)?;
    let complex = JoinComplex::build(n, Convention::TwoFan)?;
    let mut images = HashMap::new();
    for v in complex.vertices() {
        let mut x = vec![Rational::zero(); spec.mat_dim()];
        for c in 0..n {
            let p = &poly[fan2_index(n, v, c).rem_euclid(n as i64) as usize];
            for r in 0..2 {
                x[spec.index(r, c as i64)] = p[r].clone();
            }
        }
        images.insert(v, x);
    }
    Ok(VertexMap {
        case: FanCase::Fan2,
        n,
        spec,
        convention: Convention::TwoFan,
        base: poly.into_iter().map(|p| p.to_vec()).collect(),
        images,
    })
}

/// `f(a_p) = v_p`, `f(b_q) = v_q` with `v_i = e_i - (1/n)Σ e_j`, indices mod `n`
/// (one-based, so `v_n = v_0`).
pub fn build_map_fan3(n: u32) -> Result<VertexMap, EqMapError> {
    check_odd(n)?;
    let spec = RepSpec::new(n as usize, 2)?;
    let base: Vec<Vec<Rational>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|c| {
                    if c == i {
                        rat(n as i64 - 1, n as i64)
                    } else {
                        rat(-1, n as i64)
                    }
                })
                .collect()
        })
        .collect();
    let complex = JoinComplex::build(n, Convention::ThreeFan)?;
    let images = complex
        .vertices()
        .into_iter()
        .map(|v| (v, base[fan3_index(n, v)].clone()))
        .collect();
    Ok(VertexMap {
        case: FanCase::Fan3,
        n,
        spec,
        convention: Convention::ThreeFan,
        base,
        images,
    })
}

/// Zero-based coordinate of the simplex vertex that `v` maps to.
pub fn fan3_index(n: u32, v: Vertex) -> usize {
    (v.index as i64 - 1).rem_euclid(n as i64) as usize
}

fn check_compatible(map: &VertexMap, complex: &JoinComplex) -> Result<(), EqMapError> {
    if map.n != complex.n || map.convention != complex.convention {
        return Err(EqMapError::Mismatch(format!(
            "map n={} {:?}, complex n={} {:?}",
            map.n, map.convention, complex.n, complex.convention
        )));
    }
    Ok(())
}

/// First vertex and generator at which equivariance fails, if any.
pub fn equivariance_witness(map: &VertexMap, complex: &JoinComplex) -> Option<(QElement, Vertex)> {
    let g = complex.group;
    for h in [g.eps(), g.j()] {
        let m = action_matrix(complex.convention.target_hom(&g, h), &map.spec);
        for v in complex.vertices() {
            if map.image(complex.act_vertex(h, v)) != m.mul_vec(map.image(v)).as_slice() {
                return Some((h, v));
            }
        }
    }
    None
}

pub fn check_equivariance(map: &VertexMap, complex: &JoinComplex) -> bool {
    check_compatible(map, complex).is_ok() && equivariance_witness(map, complex).is_none()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Crossing {
    pub triangle: Triangle,
    /// Index into the arrangement's maximal subspaces.
    pub subspace: usize,
    /// Weights on the triangle's vertices in [`JoinComplex::triangle_vertices`] order.
    #[serde(with = "rational_array")]
    pub barycentric: [Rational; 3],
}

mod rational_array {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &[Rational; 3], s: S) -> Result<S::Ok, S::Error> {
        x.iter()
            .map(rational_to_string)
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[Rational; 3], D::Error> {
        let v: Vec<String> = Vec::deserialize(d)?;
        let parsed: Result<Vec<Rational>, _> = v.iter().map(|s| s.parse::<Rational>()).collect();
        let parsed = parsed.map_err(serde::de::Error::custom)?;
        parsed
            .try_into()
            .map_err(|_| serde::de::Error::custom("expected three rationals"))
    }
}

enum Solve {
    None,
    Unique([Rational; 3]),
    Degenerate(String),
}

/// Solves `Σ λ_k A w_k = 0, Σ λ_k = 1` and classifies the hit of the closed triangle.
fn solve_triangle(ann: &RMatrix, w: [&[Rational]; 3]) -> Solve {
    let cols: Vec<Vec<Rational>> = w.iter().map(|x| ann.mul_vec(x)).collect();
    let mut aug = RMatrix::zeros(ann.nrows() + 1, 4);
    for r in 0..ann.nrows() {
        for k in 0..3 {
            aug[(r, k)] = cols[k][r].clone();
        }
    }
    let last = ann.nrows();
    for k in 0..3 {
        aug[(last, k)] = Rational::one();
    }
    aug[(last, 3)] = Rational::one();
    let (red, pivots) = aug.rref_with_pivots();
    if pivots.contains(&3) {
        return Solve::None;
    }
    if pivots.len() == 3 {
        let lam = [
            red[(0, 3)].clone(),
            red[(1, 3)].clone(),
            red[(2, 3)].clone(),
        ];
        if lam.iter().any(|x| x.is_negative()) {
            return Solve::None;
        }
        if lam.iter().any(|x| x.is_zero()) {
            return Solve::Degenerate(format!("hit on the boundary at {}", fmt_weights(&lam)));
        }
        return Solve::Unique(lam);
    }
    // Non-unique: decide whether the affine solution set meets λ ≥ 0.
    let free: Vec<usize> = (0..3).filter(|c| !pivots.contains(c)).collect();
    if free.len() >= 2 {
        return Solve::Degenerate("whole triangle lies in the subspace".into());
    }
    // One free column t: λ_piv = rhs - coef * t, λ_free = t.
    let f = free[0];
    let (mut lo, mut hi) = (Rational::zero(), None::<Rational>);
    for (row, &p) in pivots.iter().enumerate() {
        let (b, c) = (red[(row, 3)].clone(), red[(row, f)].clone());
        // b - c t >= 0
        if c.is_positive() {
            let bound = &b / &c;
            hi = Some(hi.map_or(bound.clone(), |h: Rational| h.min(bound)));
        } else if c.is_negative() {
            lo = lo.max(&b / &c);
        } else if b.is_negative() {
            return Solve::None;
        }
        let _ = p;
    }
    if hi.is_none_or(|h| lo <= h) {
        Solve::Degenerate("segment of solutions meets the triangle".into())
    } else {
        Solve::None
    }
}

fn fmt_weights(w: &[Rational]) -> String {
    let s: Vec<String> = w.iter().map(rational_to_string).collect();
    format!("({})", s.join(", "))
}

/// Exact crossings of every mixed triangle with every maximal subspace.
pub fn find_good_triangles(
    map: &VertexMap,
    complex: &JoinComplex,
    arr: &InvArrangement,
) -> Result<Vec<Crossing>, EqMapError> {
    check_compatible(map, complex)?;
    if arr.spec != map.spec {
        return Err(EqMapError::Mismatch(
            "arrangement and map live over different spaces".into(),
        ));
    }
    let anns: Vec<&RMatrix> = arr
        .maximal
        .iter()
        .map(|s| s.subspace.annihilator())
        .collect();
    let per_triangle: Result<Vec<Vec<Crossing>>, EqMapError> = complex
        .triangles()
        .par_iter()
        .map(|&tri| {
            let vs = complex.triangle_vertices(tri);
            let w = vs.map(|v| map.image(v));
            let mut out = Vec::new();
            for (s, ann) in anns.iter().enumerate() {
                match solve_triangle(ann, w) {
                    Solve::None => {}
                    Solve::Degenerate(reason) => {
                        return Err(EqMapError::Transversality {
                            triangle: tri,
                            subspace: s,
                            reason,
                        })
                    }
                    Solve::Unique(lam) => {
                        let x = map.point(&vs, &lam);
                        if let Some(other) = (0..anns.len())
                            .find(|&o| o != s && arr.maximal[o].subspace.contains_vector(&x))
                        {
                            return Err(EqMapError::Transversality {
                                triangle: tri,
                                subspace: s,
                                reason: format!("image point also lies on subspace {other}"),
                            });
                        }
                        out.push(Crossing {
                            triangle: tri,
                            subspace: s,
                            barycentric: lam,
                        });
                    }
                }
            }
            Ok(out)
        })
        .collect();
    Ok(per_triangle?.into_iter().flatten().collect())
}

/// A closed oriented component of the singular set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Component {
    pub subspace: usize,
    /// Crossing indices in the order of the orientation.
    pub cycle: Vec<usize>,
    /// `tetras[i]` contains the segment from `cycle[i]` to `cycle[i+1]`.
    pub tetras: Vec<TetraLabel>,
    /// Setwise stabilizer with the cyclic shift each element induces.
    pub stabilizer: Vec<(QElement, usize)>,
    /// Stabilizer element with the smallest positive shift.
    pub monodromy: QElement,
    pub orbit: usize,
}

impl Component {
    pub fn stabilizer_elements(&self) -> Vec<QElement> {
        self.stabilizer.iter().map(|(g, _)| *g).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SingularSet {
    pub n: u32,
    pub crossings: Vec<Crossing>,
    pub components: Vec<Component>,
    /// One component index per orbit, smallest index first.
    pub orbit_representatives: Vec<usize>,
    /// Whether the orientation rule was negated.
    pub flipped: bool,
}

impl SingularSet {
    pub fn components_on(&self, subspace: usize) -> impl Iterator<Item = &Component> {
        self.components
            .iter()
            .filter(move |c| c.subspace == subspace)
    }
}

/// Barycentric weights of a face point on the tetrahedron's ordered vertices.
fn lift_to_tetra(complex: &JoinComplex, t: TetraLabel, c: &Crossing) -> [Rational; 4] {
    let tv = complex.tetra_vertices(t);
    let fv = complex.triangle_vertices(c.triangle);
    let mut mu: [Rational; 4] = std::array::from_fn(|_| Rational::zero());
    for (v, w) in fv.iter().zip(&c.barycentric) {
        let k = tv.iter().position(|x| x == v).expect("face of tetra");
        mu[k] = w.clone();
    }
    mu
}

fn det3(m: [[Rational; 3]; 3]) -> Rational {
    &m[0][0] * (&m[1][1] * &m[2][2] - &m[1][2] * &m[2][1])
        - &m[0][1] * (&m[1][0] * &m[2][2] - &m[1][2] * &m[2][0])
        + &m[0][2] * (&m[1][0] * &m[2][1] - &m[1][1] * &m[2][0])
}

/// Sign of the step `x -> y` inside `t`: `s · det[∇φ₁; ∇φ₂; y - x]` in the
/// local chart `(μ₁, μ₂, μ₃)` with `s` the tetrahedron's orientation.
fn step_sign(
    map: &VertexMap,
    complex: &JoinComplex,
    forms: &RMatrix,
    t: TetraLabel,
    x: &Crossing,
    y: &Crossing,
) -> Result<i8, EqMapError> {
    if forms.nrows() != 2 {
        return Err(EqMapError::Orientation(format!(
            "need two normal forms, have {}",
            forms.nrows()
        )));
    }
    let tv = complex.tetra_vertices(t);
    let grad = |row: usize| -> [Rational; 3] {
        let vals: Vec<Rational> = tv
            .iter()
            .map(|&v| dot(forms.row(row), map.image(v)))
            .collect();
        std::array::from_fn(|k| &vals[k + 1] - &vals[0])
    };
    let (mx, my) = (lift_to_tetra(complex, t, x), lift_to_tetra(complex, t, y));
    let tangent: [Rational; 3] = std::array::from_fn(|k| &my[k + 1] - &mx[k + 1]);
    let d = det3([grad(0), grad(1), tangent]) * int(complex.orientation(t) as i64);
    if d.is_zero() {
        return Err(EqMapError::Orientation(format!(
            "degenerate normal framing in tetra ({}, {})",
            t.p, t.q
        )));
    }
    Ok(if d.is_positive() { 1 } else { -1 })
}

/// Image of a crossing under `g`, with the weights carried along.
pub fn act_on_crossing(
    complex: &JoinComplex,
    arr: &InvArrangement,
    g: QElement,
    c: &Crossing,
) -> Crossing {
    let vs = complex.triangle_vertices(c.triangle);
    let img: Vec<Vertex> = vs.iter().map(|&v| complex.act_vertex(g, v)).collect();
    let tri = complex
        .triangle_from_vertices(&img)
        .expect("triangle image");
    let canon = complex.triangle_vertices(tri);
    let mut bary: [Rational; 3] = std::array::from_fn(|_| Rational::zero());
    for (v, w) in img.iter().zip(&c.barycentric) {
        bary[canon.iter().position(|x| x == v).expect("same vertices")] = w.clone();
    }
    let subspace = arr.act(complex.convention.target_hom(&complex.group, g), c.subspace);
    Crossing {
        triangle: tri,
        subspace,
        barycentric: bary,
    }
}

/// Traces crossings into oriented cycles and computes stabilizers, shifts,
/// monodromies and component orbits. `flip` negates the orientation rule.
pub fn trace_components(
    map: &VertexMap,
    complex: &JoinComplex,
    arr: &InvArrangement,
    crossings: Vec<Crossing>,
    flip: bool,
) -> Result<SingularSet, EqMapError> {
    check_compatible(map, complex)?;
    let key: HashMap<(Triangle, usize), usize> = crossings
        .iter()
        .enumerate()
        .map(|(i, c)| ((c.triangle, c.subspace), i))
        .collect();
    if key.len() != crossings.len() {
        return Err(EqMapError::Mismatch("duplicate crossing".into()));
    }

    let mut in_tetra: HashMap<(TetraLabel, usize), Vec<usize>> = HashMap::new();
    for (i, c) in crossings.iter().enumerate() {
        for t in complex.cofaces(c.triangle) {
            in_tetra.entry((t, c.subspace)).or_default().push(i);
        }
    }
    let mut cells: Vec<_> = in_tetra.iter().collect();
    cells.sort_by_key(|((t, s), _)| (*t, *s));
    if let Some(((t, s), v)) = cells.into_iter().find(|(_, v)| v.len() != 2) {
        return Err(EqMapError::CrossingCount {
            tetra: *t,
            subspace: *s,
            count: v.len(),
        });
    }
    let partner = |i: usize, t: TetraLabel| -> usize {
        let v = &in_tetra[&(t, crossings[i].subspace)];
        if v[0] == i {
            v[1]
        } else {
            v[0]
        }
    };

    // Trace raw cycles.
    let mut component_of = vec![usize::MAX; crossings.len()];
    let mut raw: Vec<(Vec<usize>, Vec<TetraLabel>)> = Vec::new();
    for start in 0..crossings.len() {
        if component_of[start] != usize::MAX {
            continue;
        }
        let id = raw.len();
        let (mut cycle, mut tetras) = (vec![start], Vec::new());
        component_of[start] = id;
        let mut cur = start;
        let mut t = complex.cofaces(crossings[start].triangle)[0];
        loop {
            let next = partner(cur, t);
            tetras.push(t);
            if next == start {
                break;
            }
            if component_of[next] != usize::MAX {
                return Err(EqMapError::Mismatch(format!(
                    "crossing {next} reached twice while tracing"
                )));
            }
            component_of[next] = id;
            cycle.push(next);
            let cof = complex.cofaces(crossings[next].triangle);
            t = if cof[0] == t { cof[1] } else { cof[0] };
            cur = next;
        }
        raw.push((cycle, tetras));
    }

    // Orient each cycle and check consistency along it.
    let sgn = if flip { -1 } else { 1 };
    let mut components = Vec::with_capacity(raw.len());
    for (mut cycle, mut tetras) in raw {
        let s = crossings[cycle[0]].subspace;
        let forms = &arr.maximal[s].oriented_forms;
        let len = cycle.len();
        let first = sgn
            * step_sign(
                map,
                complex,
                forms,
                tetras[0],
                &crossings[cycle[0]],
                &crossings[cycle[1 % len]],
            )?;
        if first < 0 {
            // Reverse: new order c0, c_{L-1}, ..., c1 with tetras t_{L-1}, ..., t_0.
            cycle[1..].reverse();
            tetras.reverse();
        }
        for i in 0..len {
            let sign = sgn
                * step_sign(
                    map,
                    complex,
                    forms,
                    tetras[i],
                    &crossings[cycle[i]],
                    &crossings[cycle[(i + 1) % len]],
                )?;
            if sign < 0 {
                return Err(EqMapError::Orientation(format!(
                    "step {i} of the cycle through crossing {} runs against the orientation",
                    cycle[0]
                )));
            }
        }
        components.push(Component {
            subspace: s,
            cycle,
            tetras,
            stabilizer: Vec::new(),
            monodromy: QElement::IDENTITY,
            orbit: usize::MAX,
        });
    }
    let mut position = vec![0usize; crossings.len()];
    for comp in &components {
        for (k, &c) in comp.cycle.iter().enumerate() {
            position[c] = k;
        }
    }

    // Equivariance of the crossing set under generators.
    for h in [complex.group.eps(), complex.group.j()] {
        for c in &crossings {
            let img = act_on_crossing(complex, arr, h, c);
            match key.get(&(img.triangle, img.subspace)) {
                Some(&i) if crossings[i].barycentric == img.barycentric => {}
                _ => {
                    return Err(EqMapError::Equivariance(format!(
                        "{h} moves crossing on {} off the set",
                        c.triangle
                    )))
                }
            }
        }
    }

    // Stabilizers, shifts and monodromy.
    let group = complex.group;
    let elements = group.q_elements();
    for ci in 0..components.len() {
        let comp = &components[ci];
        let len = comp.cycle.len();
        let mut stab = Vec::new();
        for &g in &elements {
            let img0 = act_on_crossing(complex, arr, g, &crossings[comp.cycle[0]]);
            let i0 = key[&(img0.triangle, img0.subspace)];
            if component_of[i0] != ci {
                continue;
            }
            let shift = position[i0];
            for (k, &c) in comp.cycle.iter().enumerate() {
                let img = act_on_crossing(complex, arr, g, &crossings[c]);
                let idx = key[&(img.triangle, img.subspace)];
                if position[idx] != (k + shift) % len || component_of[idx] != ci {
                    return Err(EqMapError::Orientation(format!(
                        "{g} does not act on component {ci} by an oriented rotation"
                    )));
                }
            }
            if g != QElement::IDENTITY && shift == 0 {
                return Err(EqMapError::Equivariance(format!(
                    "{g} fixes a crossing of component {ci}"
                )));
            }
            stab.push((g, shift));
        }
        let monodromy = stab
            .iter()
            .filter(|(_, s)| *s > 0)
            .min_by_key(|(_, s)| *s)
            .map_or(QElement::IDENTITY, |x| x.0);
        components[ci].stabilizer = stab;
        components[ci].monodromy = monodromy;
    }

    // Orbits of components.
    let mut orbit_representatives = Vec::new();
    for ci in 0..components.len() {
        if components[ci].orbit != usize::MAX {
            continue;
        }
        let orbit = orbit_representatives.len();
        orbit_representatives.push(ci);
        let c0 = components[ci].cycle[0];
        for &g in &elements {
            let img = act_on_crossing(complex, arr, g, &crossings[c0]);
            let target = component_of[key[&(img.triangle, img.subspace)]];
            components[target].orbit = orbit;
        }
    }

    Ok(SingularSet {
        n: map.n,
        crossings,
        components,
        orbit_representatives,
        flipped: flip,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ValidationError {
    #[error("crossing {0} has a non-positive weight or weights not summing to 1")]
    Weights(usize),
    #[error("crossing {0} does not map into its subspace")]
    OffSubspace(usize),
    #[error("crossing {0} appears in {1} components")]
    Multiplicity(usize, usize),
    #[error("component {0}: step {1} is not inside its recorded tetrahedron")]
    BrokenStep(usize, usize),
    #[error("component {0} mixes subspaces")]
    MixedSubspace(usize),
}

/// Independent re-check of a traced singular set against the map.
pub fn validate_singular_set(
    set: &SingularSet,
    map: &VertexMap,
    complex: &JoinComplex,
    arr: &InvArrangement,
) -> Result<(), ValidationError> {
    for (i, c) in set.crossings.iter().enumerate() {
        let sum: Rational = c.barycentric.iter().sum();
        if !sum.is_one() || c.barycentric.iter().any(|w| !w.is_positive()) {
            return Err(ValidationError::Weights(i));
        }
        let x = map.point(&complex.triangle_vertices(c.triangle), &c.barycentric);
        if !arr.maximal[c.subspace].subspace.contains_vector(&x) {
            return Err(ValidationError::OffSubspace(i));
        }
    }
    let mut seen = vec![0usize; set.crossings.len()];
    for (ci, comp) in set.components.iter().enumerate() {
        let len = comp.cycle.len();
        for (k, &c) in comp.cycle.iter().enumerate() {
            seen[c] += 1;
            if set.crossings[c].subspace != comp.subspace {
                return Err(ValidationError::MixedSubspace(ci));
            }
            let next = comp.cycle[(k + 1) % len];
            let t = comp.tetras[k];
            let faces = complex.faces(t);
            if !faces.contains(&set.crossings[c].triangle)
                || !faces.contains(&set.crossings[next].triangle)
            {
                return Err(ValidationError::BrokenStep(ci, k));
            }
        }
    }
    if let Some((i, &m)) = seen.iter().enumerate().find(|(_, &m)| m != 1) {
        return Err(ValidationError::Multiplicity(i, m));
    }
    Ok(())
}

/// Pairs of segments from different subspaces meeting inside a tetrahedron:
/// points where `f` hits an intersection of two maximal subspaces.
pub fn interior_double_points(
    set: &SingularSet,
    complex: &JoinComplex,
) -> Vec<(TetraLabel, usize, usize)> {
    let mut segs: HashMap<TetraLabel, Vec<(usize, [Rational; 4], [Rational; 4])>> = HashMap::new();
    for comp in &set.components {
        let len = comp.cycle.len();
        for (k, &t) in comp.tetras.iter().enumerate() {
            let x = lift_to_tetra(complex, t, &set.crossings[comp.cycle[k]]);
            let y = lift_to_tetra(complex, t, &set.crossings[comp.cycle[(k + 1) % len]]);
            segs.entry(t).or_default().push((comp.subspace, x, y));
        }
    }
    let mut out = Vec::new();
    let mut tetras: Vec<_> = segs.keys().copied().collect();
    tetras.sort();
    for t in tetras {
        let list = &segs[&t];
        for i in 0..list.len() {
            for j in i + 1..list.len() {
                let (s1, x1, y1) = &list[i];
                let (s2, x2, y2) = &list[j];
                if s1 != s2 && segments_meet(x1, y1, x2, y2) {
                    out.push((t, (*s1).min(*s2), (*s1).max(*s2)));
                }
            }
        }
    }
    out
}

/// Whether `x1 + s(y1-x1) = x2 + t(y2-x2)` has a solution with `s, t ∈ [0,1]`.
fn segments_meet(
    x1: &[Rational; 4],
    y1: &[Rational; 4],
    x2: &[Rational; 4],
    y2: &[Rational; 4],
) -> bool {
    let mut m = RMatrix::zeros(4, 3);
    for k in 0..4 {
        m[(k, 0)] = &y1[k] - &x1[k];
        m[(k, 1)] = &x2[k] - &y2[k];
        m[(k, 2)] = &x2[k] - &x1[k];
    }
    let (r, piv) = m.rref_with_pivots();
    if piv.contains(&2) {
        return false;
    }
    let in_unit = |v: &Rational| !v.is_negative() && *v <= Rational::one();
    match piv.len() {
        2 => in_unit(&r[(0, 2)]) && in_unit(&r[(1, 2)]),
        // Collinear overlap cannot happen for transverse segments of distinct subspaces.
        _ => true,
    }
}

/// Triangle-pair label: `a_p a_{p+1} b_q` and `a_{p+1} b_q b_{q+1}` both carry `(p, q)`.
pub fn pair_label(complex: &JoinComplex, tri: Triangle) -> TetraLabel {
    match tri {
        Triangle::A { p, q } => complex.label(p as i64, q as i64),
        Triangle::B { p, q } => complex.label(p as i64 - 1, q as i64),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubspaceLabels {
    pub subspace: usize,
    pub labels: usize,
    /// Values of `q - p mod 2n` on the labels.
    pub residues: Vec<u32>,
    /// `Some(c)` when the labels are exactly `θ⁻¹(c) ∪ θ⁻¹(c+n)`.
    pub constant: Option<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelReport {
    pub per_subspace: Vec<SubspaceLabels>,
    /// Observed constant for the base subspace (the set `O`).
    pub base_constant: Option<u32>,
    /// Every subspace class has the two-residue structure.
    pub two_residue_structure: bool,
    /// `γ = θ mod n` takes a different value on each subspace class.
    pub gamma_separates: bool,
    /// Residues of `q - p mod 2n` over tetrahedra containing a segment of `O`.
    pub base_tetra_residues: Vec<u32>,
}

pub fn label_invariants(
    set: &SingularSet,
    complex: &JoinComplex,
    base: usize,
    subspaces: usize,
) -> LabelReport {
    let n = complex.n;
    let m = 2 * n;
    let mut per_subspace = Vec::new();
    for s in 0..subspaces {
        let labels: BTreeSet<TetraLabel> = set
            .crossings
            .iter()
            .filter(|c| c.subspace == s)
            .map(|c| pair_label(complex, c.triangle))
            .collect();
        let residues: BTreeSet<u32> = labels.iter().map(|t| (t.q + m - t.p) % m).collect();
        let residues: Vec<u32> = residues.into_iter().collect();
        let constant = match residues.as_slice() {
            [a, b] if b - a == n && labels.len() as u32 == 2 * m => Some(*a),
            _ => None,
        };
        per_subspace.push(SubspaceLabels {
            subspace: s,
            labels: labels.len(),
            residues,
            constant,
        });
    }
    let two_residue_structure = per_subspace.iter().all(|s| s.constant.is_some());
    let gammas: BTreeSet<u32> = per_subspace
        .iter()
        .filter_map(|s| s.constant.map(|c| c % n))
        .collect();
    let gamma_separates = two_residue_structure && gammas.len() == subspaces;
    let base_tetra_residues: BTreeSet<u32> = set
        .components_on(base)
        .flat_map(|c| c.tetras.iter())
        .map(|t| (t.q + m - t.p) % m)
        .collect();
    LabelReport {
        base_constant: per_subspace.get(base).and_then(|s| s.constant),
        per_subspace,
        two_residue_structure,
        gamma_separates,
        base_tetra_residues: base_tetra_residues.into_iter().collect(),
    }
}

/// Corrected form of the 3-fan goodness claim: the triangle's image indices
/// meet each block of `α`, and the crossing weights are the block sizes over `n`.
pub fn fan3_claim(
    alpha: &AlphaVector,
    complex: &JoinComplex,
    tri: Triangle,
) -> Option<[Rational; 3]> {
    let n = complex.n;
    let blocks = alpha.blocks();
    let vs = complex.triangle_vertices(tri);
    let which: Vec<usize> = vs
        .iter()
        .map(|&v| {
            blocks
                .iter()
                .position(|b| b.contains(&fan3_index(n, v)))
                .expect("covered")
        })
        .collect();
    let distinct: BTreeSet<usize> = which.iter().copied().collect();
    if distinct.len() != 3 {
        return None;
    }
    Some(std::array::from_fn(|k| {
        rat(alpha.parts()[which[k]] as i64, n as i64)
    }))
}

/// The base subspace `L(α)` among the arrangement's maximal subspaces.
pub fn base_index(arr: &InvArrangement) -> Option<usize> {
    let l = crate::arrangement::build_l_alpha(&arr.alpha, &arr.spec).ok()?;
    arr.maximal_index(&l)
}

/// Point of `Mat` a crossing maps to.
pub fn crossing_image(map: &VertexMap, complex: &JoinComplex, c: &Crossing) -> Vec<Rational> {
    map.point(&complex.triangle_vertices(c.triangle), &c.barycentric)
}

/// True iff every `f(v)` lies in `subspace`; a sanity helper for tests.
pub fn all_images_in(map: &VertexMap, subspace: &Subspace) -> bool {
    map.images.values().all(|x| subspace.contains_vector(x))
}
