//! End-to-end verification runs producing [`Report`]s.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::arrangement::{
    build_orbit, check_conditions, verify_prop_two, AlphaVector, ArrangementError, InvArrangement,
};
use crate::bordism::{
    classify, classify_with_representatives, is_nontrivial, omega1, BordismClass, BordismError,
};
use crate::eqmap::{
    base_index, build_map_fan2, build_map_fan3, equivariance_witness, fan3_claim,
    find_good_triangles, interior_double_points, label_invariants, trace_components,
    validate_singular_set, EqMapError, SingularSet, VertexMap,
};
use crate::joinsphere::{Convention, JoinComplex, JoinError};
use crate::qgroup::{GroupError, GroupSpec, QElement};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_V0: [i64; 2] = [1, 0];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("n = {0} must be odd and at least 3")]
    BadN(u32),
    #[error("p = {p} must lie in 1..{n}")]
    BadP { n: u32, p: u32 },
    #[error("alpha {0:?} must be positive integers summing to n")]
    BadAlpha(Vec<usize>),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Join(#[from] JoinError),
    #[error(transparent)]
    Arrangement(#[from] ArrangementError),
    #[error(transparent)]
    EqMap(#[from] EqMapError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Recorded for the reader; does not affect the verdict.
    pub informational: bool,
    pub detail: String,
    /// Concrete evidence, present whenever a gating check fails.
    pub witness: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub parameters: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    pub data: BTreeMap<String, Value>,
    /// Wall-clock milliseconds per stage; the only non-deterministic field.
    pub timings_ms: BTreeMap<String, f64>,
    pub version: String,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report {
            command: command.into(),
            parameters: BTreeMap::new(),
            checks: Vec::new(),
            data: BTreeMap::new(),
            timings_ms: BTreeMap::new(),
            version: VERSION.into(),
        }
    }

    pub fn param(&mut self, key: &str, v: impl Serialize) {
        self.parameters
            .insert(key.into(), serde_json::to_value(v).expect("serializable"));
    }

    pub fn datum(&mut self, key: &str, v: impl Serialize) {
        self.data
            .insert(key.into(), serde_json::to_value(v).expect("serializable"));
    }

    pub fn check(
        &mut self,
        name: &str,
        passed: bool,
        detail: impl Into<String>,
        witness: Option<String>,
    ) {
        let witness = if passed {
            None
        } else {
            witness.or_else(|| Some("no witness recorded".into()))
        };
        self.checks.push(Check {
            name: name.into(),
            passed,
            informational: false,
            detail: detail.into(),
            witness,
        });
    }

    pub fn note(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            informational: true,
            detail: detail.into(),
            witness: None,
        });
    }

    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.timings_ms
            .insert(stage.into(), t.elapsed().as_secs_f64() * 1e3);
        out
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn passed(&self) -> bool {
        self.checks
            .iter()
            .filter(|c| !c.informational)
            .all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.informational && !c.passed)
    }

    /// Copy with timings cleared, for comparing runs.
    pub fn without_timings(&self) -> Report {
        Report {
            timings_ms: BTreeMap::new(),
            ..self.clone()
        }
    }
}

fn check_odd(n: u32) -> Result<(), PipelineError> {
    if n < 3 || n % 2 == 0 {
        return Err(PipelineError::BadN(n));
    }
    Ok(())
}

fn elements(v: &[QElement]) -> String {
    let s: Vec<String> = v.iter().map(|g| g.to_string()).collect();
    format!("{{{}}}", s.join(", "))
}

/// Traced singular set together with the objects it was computed from.
pub struct Traced {
    pub map: VertexMap,
    pub complex: JoinComplex,
    pub arr: InvArrangement,
    pub set: SingularSet,
    pub base: usize,
}

/// Builds the arrangement, checks equivariance and transversality, traces
/// and validates. Failures become checks; `None` means later stages cannot run.
fn run_common(
    report: &mut Report,
    map: VertexMap,
    alpha: &AlphaVector,
    flip: bool,
    gate_conditions: bool,
) -> Result<Option<Traced>, PipelineError> {
    let n = map.n;
    let complex = report.time("complex", || JoinComplex::build(n, map.convention))?;
    let arr = report.time("arrangement", || build_orbit(alpha, &map.spec))?;
    report.datum("maximal_subspaces", arr.maximal.len());

    let cond = report.time("conditions", || check_conditions(&arr))?;
    let a1_detail = format!(
        "maximal codims {:?}, least pairwise codim {:?}",
        cond.maximal_codims, cond.min_pairwise_codim
    );
    let a1_witness = cond.a1_witness.map(|(a, b)| {
        format!(
            "subspaces {a} and {b} meet in codim {:?}",
            cond.min_pairwise_codim
        )
    });
    let a2_witness = cond.a2_witness.clone();
    let a3_witness = cond
        .a3_witness
        .as_ref()
        .map(|(s, g)| format!("{g} reverses subspace {s}"));
    if gate_conditions {
        report.check("condition_A1", cond.a1, a1_detail, a1_witness);
        report.check(
            "condition_A2",
            cond.a2,
            "every group element has determinant +1 on W",
            a2_witness,
        );
        report.check(
            "condition_A3",
            cond.a3,
            "stabilizers preserve subspace orientations",
            a3_witness,
        );
    } else {
        let w = |x: Option<String>| x.map(|s| format!(" ({s})")).unwrap_or_default();
        report.note(
            "condition_A1",
            cond.a1,
            format!("{a1_detail}{}", w(a1_witness)),
        );
        report.note(
            "condition_A2",
            cond.a2,
            format!("determinant +1 on W{}", w(a2_witness)),
        );
        report.note(
            "condition_A3",
            cond.a3,
            format!("orientation preserved{}", w(a3_witness)),
        );
    }

    let eq = report.time("equivariance", || equivariance_witness(&map, &complex));
    report.check(
        "equivariance",
        eq.is_none(),
        "f(g v) = θ(g) f(v) for generators on every vertex",
        eq.map(|(g, v)| format!("generator {g} at vertex {v}")),
    );
    if eq.is_some() {
        return Ok(None);
    }

    let crossings = match report.time("crossings", || find_good_triangles(&map, &complex, &arr)) {
        Ok(c) => c,
        Err(e @ EqMapError::Transversality { .. }) => {
            report.check(
                "transversality",
                false,
                "unique interior crossing per good triangle",
                Some(e.to_string()),
            );
            return Ok(None);
        }
        Err(e) => return Err(e.into()),
    };
    report.check(
        "transversality",
        true,
        format!(
            "{} crossings, all strictly interior, none on a second subspace",
            crossings.len()
        ),
        None,
    );
    report.datum("crossings", crossings.len());

    let set = match report.time("trace", || {
        trace_components(&map, &complex, &arr, crossings, flip)
    }) {
        Ok(s) => s,
        Err(
            e @ (EqMapError::CrossingCount { .. }
            | EqMapError::Orientation(_)
            | EqMapError::Equivariance(_)),
        ) => {
            report.check(
                "tracing",
                false,
                "every tetrahedron meets each subspace in 0 or 2 crossings",
                Some(e.to_string()),
            );
            return Ok(None);
        }
        Err(e) => return Err(e.into()),
    };
    let valid = validate_singular_set(&set, &map, &complex, &arr);
    report.check(
        "singular_set_valid",
        valid.is_ok(),
        "independent re-check of weights, subspace membership and cycle steps",
        valid.err().map(|e| e.to_string()),
    );
    let base = base_index(&arr)
        .ok_or_else(|| EqMapError::Mismatch("base subspace missing from orbit".into()))?;
    Ok(Some(Traced {
        map,
        complex,
        arr,
        set,
        base,
    }))
}

fn component_summary(set: &SingularSet) -> Value {
    set.components
        .iter()
        .map(|c| {
            json!({
                "subspace": c.subspace,
                "length": c.cycle.len(),
                "stabilizer": c.stabilizer.iter().map(|(g, s)| json!([g.to_string(), s])).collect::<Vec<_>>(),
                "monodromy": c.monodromy.to_string(),
                "orbit": c.orbit,
            })
        })
        .collect()
}

fn class_value(class: &Result<BordismClass, BordismError>) -> Value {
    match class {
        Ok(c) => json!(c.describe()),
        Err(e) => json!(format!("error: {e}")),
    }
}

/// 2-fan pipeline for `α = (p/n, (n-p)/n)` and three measures.
pub fn verify_fan2(n: u32, p: u32, v0: [i64; 2]) -> Result<Report, PipelineError> {
    check_odd(n)?;
    if p == 0 || p >= n {
        return Err(PipelineError::BadP { n, p });
    }
    let mut report = Report::new("verify-fan2");
    report.param("n", n);
    report.param("p", p);
    report.param("v0", v0);
    let spec = GroupSpec::new_odd(n)?;

    if p > 1 {
        let two = report.time("prop_two", || verify_prop_two(n as usize, p as usize))?;
        report.check(
            "reduction_identities",
            two.identities_hold(),
            format!("EC = CE and CJ = J E^(-p-1) C for p = {p}"),
            Some(format!(
                "commutes_with_e = {}, twisted_j = {}",
                two.commutes_with_e, two.twisted_j
            )),
        );
        report.check(
            "reduction_nonsingular",
            two.nonsingular,
            format!("det C = {}", two.determinant),
            Some(format!("det C = {}", two.determinant)),
        );
        if let Some(ok) = two.arrangements_correspond {
            report.check(
                "reduction_arrangements",
                ok,
                "C carries the maximal subspaces for 1/n onto those for p/n",
                Some("subspace sets differ".into()),
            );
        }
        report.datum("determinant", &two.determinant);
        if !two.nonsingular {
            return Ok(report);
        }
    }

    let map = build_map_fan2(n, v0)?;
    let alpha = AlphaVector::two_fan(n as usize, 1)?;
    let Some(t) = run_common(&mut report, map, &alpha, false, true)? else {
        return Ok(report);
    };
    let set = &t.set;

    let on_base = set.components_on(t.base).count();
    report.check(
        "O_components",
        on_base == 2,
        format!("{on_base} circles over the base subspace (expected 2)"),
        Some(format!("{on_base} components")),
    );
    let total = set.components.len();
    report.check(
        "total_components",
        total == 2 * n as usize,
        format!(
            "{total} components in the singular set (expected {})",
            2 * n
        ),
        Some(format!("{total} components")),
    );

    let labels = label_invariants(set, &t.complex, t.base, t.arr.maximal.len());
    let c = labels.base_constant;
    report.check(
        "label_structure",
        labels.two_residue_structure && labels.gamma_separates,
        format!(
            "labels over each subspace fill two residues n apart; observed base constant c = {c:?}"
        ),
        Some(format!(
            "residues {:?}",
            labels
                .per_subspace
                .iter()
                .map(|s| s.residues.clone())
                .collect::<Vec<_>>()
        )),
    );
    report.datum("label_constant", c);

    // Expected: every component stabilized exactly by ±1, with -1 turning it halfway.
    let mut stab_witness = None;
    for (i, comp) in set.components.iter().enumerate() {
        let els = comp.stabilizer_elements();
        let half = comp.cycle.len() / 2;
        let ok = els.len() == 2
            && els.contains(&spec.minus_one())
            && comp
                .stabilizer
                .iter()
                .any(|&(g, s)| g == spec.minus_one() && s == half);
        if !ok {
            stab_witness = Some(format!(
                "component {i}: stabilizer {} of order {}, monodromy {} turning by {}/{}",
                elements(&els),
                els.len(),
                comp.monodromy,
                comp.stabilizer
                    .iter()
                    .find(|(g, _)| *g == comp.monodromy)
                    .map_or(0, |x| x.1),
                comp.cycle.len()
            ));
            break;
        }
    }
    report.check(
        "stabilizer_pm1_half_turn",
        stab_witness.is_none(),
        "each component stabilizer is {1, -1} acting by a half turn",
        stab_witness,
    );

    let class = report.time("bordism", || classify(set, &spec));
    let flipped = report.time("bordism_flipped", || {
        let crossings = set.crossings.clone();
        trace_components(&t.map, &t.complex, &t.arr, crossings, true).map(|s| classify(&s, &spec))
    })?;
    report.datum("class", class_value(&class));
    report.datum("class_flipped", class_value(&flipped));
    report.datum("components", component_summary(set));
    match &class {
        Ok(cl) => {
            report.check(
                "class_is_two",
                cl.value == vec![2] && is_nontrivial(cl),
                "bordism class equals 2 in Z/4",
                Some(format!("class {}", cl.describe())),
            );
        }
        Err(e) => report.check(
            "class_is_two",
            false,
            "bordism class equals 2 in Z/4",
            Some(e.to_string()),
        ),
    }
    if let (Ok(a), Ok(b)) = (&class, &flipped) {
        report.check(
            "class_flip_invariant",
            a == b || a == &b.neg(),
            "flipping the orientation convention changes the class at most by sign",
            Some(format!("{} vs {}", a.describe(), b.describe())),
        );
        report.note(
            "class_equals_flipped",
            a == b,
            format!("{} and {} after flip", a.describe(), b.describe()),
        );
    }
    let doubles = interior_double_points(set, &t.complex).len();
    report.note(
        "no_interior_double_points",
        doubles == 0,
        format!("{doubles} interior double points"),
    );
    Ok(report)
}

/// 3-fan pipeline for `α = (p, q, r)/n` and two measures.
pub fn verify_fan3(n: u32, parts: [usize; 3]) -> Result<Report, PipelineError> {
    check_odd(n)?;
    if parts.contains(&0) || parts.iter().sum::<usize>() != n as usize {
        return Err(PipelineError::BadAlpha(parts.to_vec()));
    }
    let mut report = Report::new("verify-fan3");
    report.param("n", n);
    report.param("alpha", parts);
    let spec = GroupSpec::new_odd(n)?;
    let alpha = AlphaVector::new(parts.to_vec())?;
    let distinct = alpha.pairwise_distinct();
    let all_equal = parts[0] == parts[1] && parts[1] == parts[2];

    let map = build_map_fan3(n)?;
    if all_equal {
        // L(α) is the zero subspace; only the stabilizer structure is examined.
        let arr = build_orbit(&alpha, &map.spec)?;
        let base =
            base_index(&arr).ok_or_else(|| EqMapError::Mismatch("base subspace missing".into()))?;
        let q = arr.q_stabilizer(base, |g| Convention::ThreeFan.target_hom(&spec, g));
        let d = &arr.maximal[base].stabilizer;
        let nonabelian = d
            .iter()
            .any(|&x| d.iter().any(|&y| spec.d_mul(x, y) != spec.d_mul(y, x)));
        report.check(
            "subspace_stabilizer",
            d.len() == 6 && nonabelian && q.len() == 12,
            format!(
                "stabilizer of L(α) has order {} in D and {} in Q; non-abelian: {nonabelian}",
                d.len(),
                q.len()
            ),
            Some(format!("orders {} and {}", d.len(), q.len())),
        );
        report.note(
            "class_skipped",
            true,
            "equal entries: L(α) = 0 has a non-cyclic stabilizer, so no class is computed",
        );
        return Ok(report);
    }

    let Some(t) = run_common(&mut report, map, &alpha, false, false)? else {
        return Ok(report);
    };
    let set = &t.set;
    let on_base = set.components_on(t.base).count();
    report.check(
        "O_components",
        on_base == 2,
        format!("{on_base} circles over L(α) (expected 2)"),
        Some(format!("{on_base} components")),
    );
    report.note(
        "total_components",
        true,
        format!("{} components in the singular set", set.components.len()),
    );
    let claim_ok = set
        .crossings
        .iter()
        .filter(|c| c.subspace == t.base)
        .all(|c| fan3_claim(&alpha, &t.complex, c.triangle).as_ref() == Some(&c.barycentric));
    report.check(
        "good_triangle_rule",
        claim_ok,
        "crossings over L(α) are exactly the block-meeting triangles with block weights",
        None,
    );

    let sub_stab = t
        .arr
        .q_stabilizer(t.base, |g| Convention::ThreeFan.target_hom(&spec, g));
    report.datum("subspace_stabilizer", elements(&sub_stab));
    if distinct {
        let mut witness = None;
        for (i, comp) in set.components.iter().enumerate() {
            let els = comp.stabilizer_elements();
            if els.len() != 1 {
                witness = Some(format!("component {i}: stabilizer {}", elements(&els)));
                break;
            }
        }
        report.check(
            "component_stabilizers_trivial",
            witness.is_none(),
            "every component has trivial stabilizer",
            witness,
        );
        let orders: Vec<usize> = set
            .orbit_representatives
            .iter()
            .map(|&r| set.components[r].stabilizer.len())
            .collect();
        report.note(
            "component_orbits",
            true,
            format!("{} orbits with stabilizer orders {orders:?}", orders.len()),
        );
    } else {
        let minus = spec.minus_one();
        let cyclic = sub_stab.len() == 4
            && sub_stab.contains(&minus)
            && sub_stab.iter().filter(|g| g.j_flag).count() == 2
            && sub_stab.iter().any(|&g| spec.q_order_of(g) == 4);
        report.check(
            "subspace_stabilizer",
            cyclic,
            format!(
                "stabilizer of L(α) is {} (cyclic of order 4 expected)",
                elements(&sub_stab)
            ),
            Some(elements(&sub_stab)),
        );
    }

    let class = report.time("bordism", || classify(set, &spec));
    report.datum("class", class_value(&class));
    report.datum("components", component_summary(set));
    if distinct {
        match &class {
            Ok(cl) => report.check(
                "class_is_zero",
                !is_nontrivial(cl),
                "bordism class equals 0 in Z/4",
                Some(cl.describe()),
            ),
            Err(e) => report.check(
                "class_is_zero",
                false,
                "bordism class equals 0 in Z/4",
                Some(e.to_string()),
            ),
        }
    } else {
        report.note(
            "class",
            class.is_ok(),
            format!("class {}", class_value(&class)),
        );
    }
    let doubles = interior_double_points(set, &t.complex).len();
    report.note(
        "no_interior_double_points",
        doubles == 0,
        format!("{doubles} interior double points"),
    );
    Ok(report)
}

/// Bordism class computed from a non-default choice of orbit representatives.
pub fn class_with_last_representatives(
    set: &SingularSet,
    spec: &GroupSpec,
) -> Result<BordismClass, BordismError> {
    let reps: Vec<usize> = (0..set.orbit_representatives.len())
        .map(|o| {
            set.components
                .iter()
                .rposition(|c| c.orbit == o)
                .expect("orbit is nonempty")
        })
        .collect();
    classify_with_representatives(set, spec, &reps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub n: u32,
    pub odd: bool,
    pub group: String,
    pub invariant_factors: Vec<u64>,
    /// Odd `n` is the case the fan results concern.
    pub in_scope: bool,
}

pub fn bordism_table(max_n: u32) -> Result<(Report, Vec<TableRow>), PipelineError> {
    if max_n == 0 {
        return Err(PipelineError::BadN(0));
    }
    let mut report = Report::new("bordism-table");
    report.param("max_n", max_n);
    let mut rows = Vec::new();
    for n in 1..=max_n {
        let ab = omega1(&GroupSpec::new(n)?);
        let odd = n % 2 == 1;
        let expected: Vec<u64> = if odd { vec![4] } else { vec![2, 2] };
        report.check(
            &format!("omega1_n{n}"),
            ab.invariant_factors == expected,
            format!("Ab(Q{}) = {}", 4 * n, ab.describe()),
            Some(format!("invariant factors {:?}", ab.invariant_factors)),
        );
        rows.push(TableRow {
            n,
            odd,
            group: ab.describe(),
            invariant_factors: ab.invariant_factors.clone(),
            in_scope: odd,
        });
    }
    report.datum("rows", &rows);
    Ok((report, rows))
}
