use fanatic_core::exactlin::{int, smith_normal_form, RMatrix};
use fanatic_core::fanmeasure::{default_frame, normalize, sector_masses, Fan, MeasureCloud};
use fanatic_core::qgroup::{GroupSpec, Which};
use num_traits::{Signed, Zero};
use proptest::prelude::*;

fn small_matrix(rows: usize, cols: usize) -> impl Strategy<Value = Vec<Vec<i64>>> {
    proptest::collection::vec(proptest::collection::vec(-4i64..=4, cols), rows)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn group_axioms(n in 1u32..=9, a in 0i64..40, b: bool, c in 0i64..40, d: bool, e in 0i64..40, f: bool) {
        let g = GroupSpec::new(n).unwrap();
        let (x, y, z) = (g.q(a, b), g.q(c, d), g.q(e, f));
        prop_assert_eq!(g.q_mul(g.q_mul(x, y), z), g.q_mul(x, g.q_mul(y, z)));
        prop_assert_eq!(g.q_mul(x, g.q_inverse(x)), g.q(0, false));
        prop_assert_eq!(g.theta(g.q_mul(x, y)), g.d_mul(g.theta(x), g.theta(y)));
        let ab = g.abelianize(Which::Q);
        prop_assert_eq!(ab.project_q(g.q_mul(x, y)), ab.add(&ab.project_q(x), &ab.project_q(y)));
    }

    #[test]
    fn rank_nullity_and_kernel(m in small_matrix(4, 6)) {
        let a = RMatrix::from_i64(&m);
        let k = a.kernel();
        prop_assert_eq!(a.rank() + k.dim(), 6);
        for v in k.basis().rows() {
            prop_assert!(a.mul_vec(v).iter().all(|x| x.is_zero()));
        }
        // rref preserves the row space
        let r = a.rref();
        prop_assert_eq!(r.rank(), a.rank());
        prop_assert_eq!(a.stack(&r).unwrap().rank(), a.rank());
    }

    #[test]
    fn snf_factors_multiply_to_determinant(m in small_matrix(3, 3)) {
        let a = RMatrix::from_i64(&m);
        let det = a.determinant().unwrap();
        let s = smith_normal_form(&m);
        let prod = s.factors.iter().fold(num_bigint::BigInt::from(1), |acc, f| acc * f);
        if det.is_zero() {
            prop_assert!(s.factors.len() < 3 || s.factors.iter().any(|f| f.is_zero()));
        } else {
            prop_assert_eq!(int(1) * num_rational::BigRational::from_integer(prod), det.abs());
            for w in s.factors.windows(2) {
                prop_assert!((&w[1] % &w[0]).is_zero());
            }
        }
    }

    #[test]
    fn sector_masses_sum_to_one(
        seed in 0u64..1000,
        cx in -1.0f64..1.0, cy in -1.0f64..1.0, cz in 0.2f64..1.0,
        mut az in proptest::collection::vec(0.0f64..6.2, 1..5),
        smooth: bool,
    ) {
        az.sort_by(f64::total_cmp);
        az.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
        let center = normalize([cx, cy, cz]);
        let fan = Fan::new(center, default_frame(center), az).unwrap();
        let cloud = fanatic_core::fanmeasure::sample_mixture(seed, 200, 3, 0.5)
            .with_smoothing(if smooth { Some(1e-3) } else { None })
            .unwrap();
        if let Ok(m) = sector_masses(&fan, &[cloud]) {
            let total: f64 = m.masses[0].iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-9, "total {}", total);
            prop_assert!(m.masses[0].iter().all(|&x| x >= -1e-15));
        }
    }

    #[test]
    fn json_normalization(ws in proptest::collection::vec(0.1f64..5.0, 1..6)) {
        let pts: Vec<[f64; 3]> = (0..ws.len()).map(|i| [1.0 + i as f64, 2.0, -0.5]).collect();
        let text = serde_json::json!({ "points": pts, "weights": ws }).to_string();
        let c = MeasureCloud::from_json(&text).unwrap();
        prop_assert!((c.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(c.points().iter().all(|p| ((p[0]*p[0] + p[1]*p[1] + p[2]*p[2]).sqrt() - 1.0).abs() < 1e-12));
    }
}
