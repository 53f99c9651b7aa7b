//! The generalized quaternion group `Q4n` and the dihedral group `D2n`.
//!
//! Elements of `Q4n` are kept in the canonical form `ε^a j^b` with
//! `a ∈ [0, 2n)` and `b ∈ {0, 1}`, subject to `ε^n = j^2` and `εjε = j`.
//! Elements of `D2n` are `E^a J^b` with `a ∈ [0, n)`, `E^n = 1`, `JEJ = E^{n-1}`.

use std::fmt;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::exactlin::smith_normal_form;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GroupError {
    #[error("group parameter n must be at least 1")]
    ZeroOrder,
    #[error("n = {0} is even; this construction requires odd n")]
    EvenOrder(u32),
}

/// Parameter of `Q4n` / `D2n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupSpec {
    n: u32,
}

/// `ε^eps_exp j^j_flag` in `Q4n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QElement {
    pub eps_exp: u32,
    pub j_flag: bool,
}

/// `E^e_exp J^j_flag` in `D2n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DElement {
    pub e_exp: u32,
    pub j_flag: bool,
}

impl QElement {
    pub const IDENTITY: QElement = QElement {
        eps_exp: 0,
        j_flag: false,
    };
}

impl DElement {
    pub const IDENTITY: DElement = DElement {
        e_exp: 0,
        j_flag: false,
    };
}

impl fmt::Display for QElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.eps_exp, self.j_flag) {
            (0, false) => write!(f, "1"),
            (0, true) => write!(f, "j"),
            (a, false) => write!(f, "e^{a}"),
            (a, true) => write!(f, "e^{a}j"),
        }
    }
}

impl fmt::Display for DElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.e_exp, self.j_flag) {
            (0, false) => write!(f, "I"),
            (0, true) => write!(f, "J"),
            (a, false) => write!(f, "E^{a}"),
            (a, true) => write!(f, "E^{a}J"),
        }
    }
}

/// Which group an abelianization refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Which {
    Q,
    D,
}

impl GroupSpec {
    pub fn new(n: u32) -> Result<Self, GroupError> {
        if n == 0 {
            return Err(GroupError::ZeroOrder);
        }
        Ok(GroupSpec { n })
    }

    /// Like [`GroupSpec::new`] but additionally rejects even `n`.
    pub fn new_odd(n: u32) -> Result<Self, GroupError> {
        let spec = Self::new(n)?;
        if n % 2 == 0 {
            return Err(GroupError::EvenOrder(n));
        }
        Ok(spec)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn q_order(&self) -> usize {
        4 * self.n as usize
    }

    pub fn d_order(&self) -> usize {
        2 * self.n as usize
    }

    fn modq(&self, a: i64) -> u32 {
        a.rem_euclid(2 * self.n as i64) as u32
    }

    fn modd(&self, a: i64) -> u32 {
        a.rem_euclid(self.n as i64) as u32
    }

    /// `ε^a j^b` with the exponent reduced.
    pub fn q(&self, a: i64, b: bool) -> QElement {
        QElement {
            eps_exp: self.modq(a),
            j_flag: b,
        }
    }

    pub fn d(&self, a: i64, b: bool) -> DElement {
        DElement {
            e_exp: self.modd(a),
            j_flag: b,
        }
    }

    pub fn eps(&self) -> QElement {
        self.q(1, false)
    }

    pub fn j(&self) -> QElement {
        self.q(0, true)
    }

    /// The central element `-1 = ε^n`.
    pub fn minus_one(&self) -> QElement {
        self.q(self.n as i64, false)
    }

    pub fn big_e(&self) -> DElement {
        self.d(1, false)
    }

    pub fn big_j(&self) -> DElement {
        self.d(0, true)
    }

    /// All `4n` elements, `ε`-exponent major.
    pub fn q_elements(&self) -> Vec<QElement> {
        (0..2 * self.n)
            .flat_map(|a| {
                [false, true].map(|b| QElement {
                    eps_exp: a,
                    j_flag: b,
                })
            })
            .collect()
    }

    pub fn d_elements(&self) -> Vec<DElement> {
        (0..self.n)
            .flat_map(|a| {
                [false, true].map(|b| DElement {
                    e_exp: a,
                    j_flag: b,
                })
            })
            .collect()
    }

    /// Product in `Q4n` using `j ε^c = ε^{-c} j` and `j^2 = ε^n`.
    pub fn q_mul(&self, x: QElement, y: QElement) -> QElement {
        let (a, c) = (x.eps_exp as i64, y.eps_exp as i64);
        if !x.j_flag {
            return self.q(a + c, y.j_flag);
        }
        let base = a - c;
        if y.j_flag {
            self.q(base + self.n as i64, false)
        } else {
            self.q(base, true)
        }
    }

    pub fn q_inverse(&self, x: QElement) -> QElement {
        if x.j_flag {
            // (ε^a j)^{-1} = j^{-1} ε^{-a} = ε^n j ε^{-a} = ε^{n+a} j
            self.q(x.eps_exp as i64 + self.n as i64, true)
        } else {
            self.q(-(x.eps_exp as i64), false)
        }
    }

    pub fn q_pow(&self, x: QElement, k: u32) -> QElement {
        (0..k).fold(QElement::IDENTITY, |acc, _| self.q_mul(acc, x))
    }

    pub fn q_order_of(&self, x: QElement) -> usize {
        let mut acc = x;
        let mut k = 1;
        while acc != QElement::IDENTITY {
            acc = self.q_mul(acc, x);
            k += 1;
        }
        k
    }

    /// Product in `D2n` using `J E^c = E^{-c} J` and `J^2 = 1`.
    pub fn d_mul(&self, x: DElement, y: DElement) -> DElement {
        let (a, c) = (x.e_exp as i64, y.e_exp as i64);
        if !x.j_flag {
            self.d(a + c, y.j_flag)
        } else {
            self.d(a - c, !y.j_flag)
        }
    }

    pub fn d_inverse(&self, x: DElement) -> DElement {
        if x.j_flag {
            x
        } else {
            self.d(-(x.e_exp as i64), false)
        }
    }

    /// Quotient map `Q4n -> D2n`, `ε ↦ E`, `j ↦ J`, kernel `{1, -1}`.
    pub fn theta(&self, g: QElement) -> DElement {
        self.d(g.eps_exp as i64, g.j_flag)
    }

    /// Full preimage of a dihedral element (always two elements).
    pub fn theta_preimage(&self, g: DElement) -> [QElement; 2] {
        let a = g.e_exp as i64;
        [self.q(a, g.j_flag), self.q(a + self.n as i64, g.j_flag)]
    }

    pub fn abelianize(&self, which: Which) -> AbelianStructure {
        AbelianStructure::compute(*self, which)
    }
}

/// `G/[G,G]` as a product of cyclic groups plus the projection of the two generators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbelianStructure {
    pub spec: GroupSpec,
    pub which: Which,
    /// Invariant factors `>= 2`, each dividing the next.
    pub invariant_factors: Vec<u64>,
    /// Images of the generators (`ε`, `j`) or (`E`, `J`), one residue per factor.
    generator_images: [Vec<u64>; 2],
}

impl AbelianStructure {
    fn compute(spec: GroupSpec, which: Which) -> Self {
        let n = spec.n as i64;
        // Rows are relations in the abelianized generators (e, j).
        let relations: Vec<Vec<i64>> = match which {
            // ε^n = j^2 and εjε = j.
            Which::Q => vec![vec![n, -2], vec![2, 0]],
            // E^n = 1, J^2 = 1 and JEJ = E^{n-1}.
            Which::D => vec![vec![n, 0], vec![0, 2], vec![2 - n, 2]],
        };
        let snf = smith_normal_form(&relations);
        // x ↦ x V sends the relation lattice onto the diagonal lattice.
        let diag: Vec<BigInt> = (0..2)
            .map(|i| {
                snf.diagonal
                    .get(i)
                    .map_or(BigInt::from(0), |r| r[i].clone())
            })
            .collect();
        let mut factors = Vec::new();
        let mut images: [Vec<u64>; 2] = [Vec::new(), Vec::new()];
        for (col, d) in diag.iter().enumerate() {
            let d = d.to_u64().expect("small invariant factor");
            assert!(d != 0, "abelianization of a finite group has no free part");
            if d == 1 {
                continue;
            }
            factors.push(d);
            for (g, img) in images.iter_mut().enumerate() {
                let v = snf.right[g][col].to_i64().expect("small transform entry");
                img.push(v.rem_euclid(d as i64) as u64);
            }
        }
        let mut out = AbelianStructure {
            spec,
            which,
            invariant_factors: factors,
            generator_images: images,
        };
        out.normalize_generator();
        out
    }

    /// When cyclic, rescale so the second generator (`j` or `J`) maps to 1 if it is a unit.
    fn normalize_generator(&mut self) {
        if self.invariant_factors.len() != 1 {
            return;
        }
        let d = self.invariant_factors[0];
        let jimg = self.generator_images[1][0];
        if let Some(inv) = (1..d).find(|&u| (u * jimg) % d == 1) {
            for img in self.generator_images.iter_mut() {
                img[0] = (img[0] * inv) % d;
            }
        }
    }

    pub fn order(&self) -> u64 {
        self.invariant_factors.iter().product()
    }

    pub fn is_cyclic(&self) -> bool {
        self.invariant_factors.len() <= 1
    }

    fn combine(&self, a: u32, b: bool) -> Vec<u64> {
        self.invariant_factors
            .iter()
            .enumerate()
            .map(|(i, &d)| {
                (a as u64 * self.generator_images[0][i] + b as u64 * self.generator_images[1][i])
                    % d
            })
            .collect()
    }

    pub fn project_q(&self, g: QElement) -> Vec<u64> {
        assert_eq!(self.which, Which::Q);
        self.combine(g.eps_exp, g.j_flag)
    }

    pub fn project_d(&self, g: DElement) -> Vec<u64> {
        assert_eq!(self.which, Which::D);
        self.combine(g.e_exp, g.j_flag)
    }

    pub fn add(&self, x: &[u64], y: &[u64]) -> Vec<u64> {
        self.invariant_factors
            .iter()
            .enumerate()
            .map(|(i, &d)| (x[i] + y[i]) % d)
            .collect()
    }

    pub fn neg(&self, x: &[u64]) -> Vec<u64> {
        self.invariant_factors
            .iter()
            .enumerate()
            .map(|(i, &d)| (d - x[i] % d) % d)
            .collect()
    }

    pub fn zero(&self) -> Vec<u64> {
        vec![0; self.invariant_factors.len()]
    }

    /// Human-readable group, e.g. `Z/4` or `Z/2+Z/2`.
    pub fn describe(&self) -> String {
        if self.invariant_factors.is_empty() {
            return "0".into();
        }
        self.invariant_factors
            .iter()
            .map(|d| format!("Z/{d}"))
            .collect::<Vec<_>>()
            .join("+")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j_squared_is_minus_one() {
        for n in 1..=6 {
            let s = GroupSpec::new(n).unwrap();
            assert_eq!(s.q_mul(s.j(), s.j()), s.minus_one());
        }
    }

    #[test]
    fn identity_is_neutral() {
        let s = GroupSpec::new(4).unwrap();
        for g in s.q_elements() {
            assert_eq!(s.q_mul(QElement::IDENTITY, g), g);
            assert_eq!(s.q_mul(g, QElement::IDENTITY), g);
        }
    }

    #[test]
    fn inverse_examples() {
        let s = GroupSpec::new(3).unwrap();
        assert_eq!(s.q_inverse(QElement::IDENTITY), QElement::IDENTITY);
        assert_eq!(s.q_inverse(s.eps()), s.q(5, false));
        let g = s.q(2, true);
        let h: Vec<_> = s
            .q_elements()
            .into_iter()
            .filter(|&h| s.q_mul(g, h) == QElement::IDENTITY)
            .collect();
        assert_eq!(h, vec![s.q_inverse(g)]);
    }

    #[test]
    fn theta_examples() {
        let s = GroupSpec::new(3).unwrap();
        assert_eq!(s.theta(s.eps()), s.big_e());
        assert_eq!(s.theta(s.j()), s.big_j());
        assert_eq!(s.theta(s.minus_one()), DElement::IDENTITY);
        assert_eq!(s.theta(s.q(4, true)), s.d(1, true));
    }

    #[test]
    fn zero_n_rejected() {
        assert_eq!(GroupSpec::new(0), Err(GroupError::ZeroOrder));
        assert_eq!(GroupSpec::new_odd(4), Err(GroupError::EvenOrder(4)));
    }

    #[test]
    fn abelianization_examples() {
        let ab = |n| {
            GroupSpec::new(n)
                .unwrap()
                .abelianize(Which::Q)
                .invariant_factors
        };
        assert_eq!(ab(3), vec![4]);
        assert_eq!(ab(1), vec![4]);
        assert_eq!(ab(2), vec![2, 2]);
        let s = GroupSpec::new(3).unwrap();
        let a = s.abelianize(Which::Q);
        assert_eq!(a.project_q(s.j()), vec![1]);
        assert_eq!(a.project_q(s.minus_one()), vec![2]);
        assert_eq!(a.project_q(s.q(2, false)), vec![0]);
        assert_eq!(s.abelianize(Which::D).invariant_factors, vec![2]);
        assert_eq!(
            GroupSpec::new(4)
                .unwrap()
                .abelianize(Which::D)
                .invariant_factors,
            vec![2, 2]
        );
    }
}
