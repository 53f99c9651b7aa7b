//! `Ω₁(Q4n) ≅ Ab(Q4n)` and the class of a free oriented 1-dimensional
//! `Q4n`-manifold given as a traced singular set.
//!
//! A component orbit with cyclic stabilizer `⟨h⟩`, `h` turning the circle by
//! the minimal positive step, is `G ×_⟨h⟩ S¹`; its class is the image of `h`.

use serde::{Deserialize, Serialize};

use crate::eqmap::SingularSet;
use crate::qgroup::{AbelianStructure, GroupSpec, QElement, Which};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BordismError {
    #[error(
        "component {component}: {element} fixes the circle pointwise or setwise without turning it"
    )]
    NotFree { component: usize, element: String },
    #[error("component {0}: stabilizer is not generated by its monodromy")]
    NotCyclic(usize),
    #[error("singular set is over n = {set} but the group has n = {group}")]
    Mismatch { set: u32, group: u32 },
    #[error("component {0} is not an orbit representative")]
    NotRepresentative(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BordismClass {
    pub ambient: AbelianStructure,
    pub value: Vec<u64>,
}

impl BordismClass {
    pub fn zero(ambient: AbelianStructure) -> Self {
        let value = ambient.zero();
        BordismClass { ambient, value }
    }

    pub fn neg(&self) -> Self {
        BordismClass {
            ambient: self.ambient.clone(),
            value: self.ambient.neg(&self.value),
        }
    }

    /// e.g. `2 in Z/4`
    pub fn describe(&self) -> String {
        let v: Vec<String> = self.value.iter().map(|x| x.to_string()).collect();
        format!("({}) in {}", v.join(","), self.ambient.describe())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentOrbitDatum {
    pub representative: usize,
    pub stabilizer: Vec<QElement>,
    pub monodromy: QElement,
    pub contribution: Vec<u64>,
}

pub fn omega1(spec: &GroupSpec) -> AbelianStructure {
    spec.abelianize(Which::Q)
}

/// Per-orbit data, checking freeness and cyclicity of each stabilizer.
pub fn orbit_data(
    set: &SingularSet,
    spec: &GroupSpec,
) -> Result<Vec<ComponentOrbitDatum>, BordismError> {
    orbit_data_with(set, spec, &set.orbit_representatives)
}

fn orbit_data_with(
    set: &SingularSet,
    spec: &GroupSpec,
    reps: &[usize],
) -> Result<Vec<ComponentOrbitDatum>, BordismError> {
    if set.n != spec.n() {
        return Err(BordismError::Mismatch {
            set: set.n,
            group: spec.n(),
        });
    }
    let ab = omega1(spec);
    reps.iter()
        .map(|&r| {
            let comp = &set.components[r];
            for &(g, shift) in &comp.stabilizer {
                if g != QElement::IDENTITY && shift == 0 {
                    return Err(BordismError::NotFree {
                        component: r,
                        element: g.to_string(),
                    });
                }
            }
            let order = comp.stabilizer.len();
            if spec.q_order_of(comp.monodromy) != order {
                return Err(BordismError::NotCyclic(r));
            }
            Ok(ComponentOrbitDatum {
                representative: r,
                stabilizer: comp.stabilizer_elements(),
                monodromy: comp.monodromy,
                contribution: ab.project_q(comp.monodromy),
            })
        })
        .collect()
}

pub fn classify(set: &SingularSet, spec: &GroupSpec) -> Result<BordismClass, BordismError> {
    classify_with_representatives(set, spec, &set.orbit_representatives)
}

/// Same as [`classify`] with an explicit choice of one component per orbit.
pub fn classify_with_representatives(
    set: &SingularSet,
    spec: &GroupSpec,
    reps: &[usize],
) -> Result<BordismClass, BordismError> {
    for (i, &r) in reps.iter().enumerate() {
        if set.components.get(r).map(|c| c.orbit) != Some(i) {
            return Err(BordismError::NotRepresentative(r));
        }
    }
    let ab = omega1(spec);
    let mut value = ab.zero();
    for d in orbit_data_with(set, spec, reps)? {
        value = ab.add(&value, &d.contribution);
    }
    Ok(BordismClass { ambient: ab, value })
}

pub fn is_nontrivial(c: &BordismClass) -> bool {
    c.value.iter().any(|&x| x != 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega1_examples() {
        assert_eq!(
            omega1(&GroupSpec::new(3).unwrap()).invariant_factors,
            vec![4]
        );
        assert_eq!(
            omega1(&GroupSpec::new(1).unwrap()).invariant_factors,
            vec![4]
        );
        assert_eq!(
            omega1(&GroupSpec::new(4).unwrap()).invariant_factors,
            vec![2, 2]
        );
    }

    #[test]
    fn empty_set_is_zero() {
        let spec = GroupSpec::new(5).unwrap();
        let set = SingularSet {
            n: 5,
            crossings: vec![],
            components: vec![],
            orbit_representatives: vec![],
            flipped: false,
        };
        let c = classify(&set, &spec).unwrap();
        assert!(!is_nontrivial(&c));
        assert_eq!(c, BordismClass::zero(omega1(&spec)));
    }

    #[test]
    fn two_is_its_own_negative() {
        let ab = omega1(&GroupSpec::new(7).unwrap());
        let two = BordismClass {
            ambient: ab.clone(),
            value: vec![2],
        };
        assert!(is_nontrivial(&two));
        assert_eq!(two.neg(), two);
        assert_eq!(
            ab.project_q(GroupSpec::new(7).unwrap().minus_one()),
            vec![2]
        );
    }
}
