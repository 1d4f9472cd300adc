//! U(1) representations generated by integer-spectrum number operators.
//!
//! Every operator in this crate is written in the number eigenbasis, so a
//! representation is just the list of eigenvalues of `N` on the basis
//! vectors and `U(θ) = e^{iNθ}` is diagonal.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qla::{op_norm, Effect, Operator, C64, ZERO};
use crate::random;
use crate::tol;

/// Reduces an angle into `[−π, π)`.
pub fn reduce_angle(theta: f64) -> f64 {
    let r = (theta + PI).rem_euclid(TAU) - PI;
    // rem_euclid can round up to exactly TAU
    if r >= PI {
        r - TAU
    } else {
        r
    }
}

/// Number operator spectrum on a basis; `U(θ) = diag(e^{i n_k θ})`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RepJson", into = "RepJson")]
pub struct U1Representation {
    spectrum: Vec<i64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RepJson {
    dim: usize,
    #[serde(default)]
    spectrum: Option<Vec<i64>>,
}

impl TryFrom<RepJson> for U1Representation {
    type Error = Error;
    fn try_from(j: RepJson) -> Result<Self> {
        match j.spectrum {
            None => U1Representation::contiguous(j.dim),
            Some(s) if s.len() == j.dim => U1Representation::new(s),
            Some(s) => Err(Error::DimensionMismatch {
                expected: j.dim,
                got: s.len(),
            }),
        }
    }
}

impl From<U1Representation> for RepJson {
    fn from(r: U1Representation) -> Self {
        RepJson {
            dim: r.dim(),
            spectrum: Some(r.spectrum),
        }
    }
}

impl U1Representation {
    pub fn new(spectrum: Vec<i64>) -> Result<Self> {
        if spectrum.is_empty() {
            return Err(Error::InvalidParameter("empty spectrum".into()));
        }
        Ok(Self { spectrum })
    }

    /// Spectrum `0, 1, …, dim − 1`.
    pub fn contiguous(dim: usize) -> Result<Self> {
        Self::new((0..dim as i64).collect())
    }

    pub fn dim(&self) -> usize {
        self.spectrum.len()
    }

    pub fn spectrum(&self) -> &[i64] {
        &self.spectrum
    }

    pub fn min(&self) -> i64 {
        *self.spectrum.iter().min().unwrap()
    }

    pub fn max(&self) -> i64 {
        *self.spectrum.iter().max().unwrap()
    }

    /// `max n − min n`: the largest Fourier frequency a conjugated operator can carry.
    pub fn spread(&self) -> usize {
        (self.max() - self.min()) as usize
    }

    /// `‖N‖ = max |n|`.
    pub fn norm(&self) -> f64 {
        self.spectrum.iter().map(|n| n.unsigned_abs()).max().unwrap() as f64
    }

    pub fn number_operator(&self) -> Operator {
        let d: Vec<f64> = self.spectrum.iter().map(|&n| n as f64).collect();
        Operator::diag(&d)
    }

    /// Distinct eigenvalues (ascending) with the basis indices spanning each eigenspace.
    pub fn eigenspaces(&self) -> Vec<(i64, Vec<usize>)> {
        let mut map: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        for (k, &n) in self.spectrum.iter().enumerate() {
            map.entry(n).or_default().push(k);
        }
        map.into_iter().collect()
    }

    /// `P_n`; the zero operator if `n` is not an eigenvalue.
    pub fn eigenprojection(&self, n: i64) -> Operator {
        let d: Vec<f64> = self
            .spectrum
            .iter()
            .map(|&m| if m == n { 1.0 } else { 0.0 })
            .collect();
        Operator::diag(&d)
    }

    /// First basis index carrying eigenvalue `n`.
    pub fn index_of(&self, n: i64) -> Option<usize> {
        self.spectrum.iter().position(|&m| m == n)
    }

    fn check(&self, a: &Operator) -> Result<()> {
        if a.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: a.dim(),
            });
        }
        Ok(())
    }
}

/// System and reference representations; `N = N_S ⊗ I + I ⊗ N_R`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointRepresentation {
    pub sys: U1Representation,
    #[serde(rename = "ref")]
    pub reference: U1Representation,
}

impl JointRepresentation {
    pub fn new(sys: U1Representation, reference: U1Representation) -> Self {
        Self { sys, reference }
    }

    pub fn dim(&self) -> usize {
        self.sys.dim() * self.reference.dim()
    }

    /// Total eigenvalue `s_i + r_j` at joint index `i * d_R + j`.
    pub fn total(&self) -> U1Representation {
        let mut s = Vec::with_capacity(self.dim());
        for &a in self.sys.spectrum() {
            for &b in self.reference.spectrum() {
                s.push(a + b);
            }
        }
        U1Representation { spectrum: s }
    }

    pub fn number_operator(&self) -> Operator {
        self.total().number_operator()
    }
}

/// `U(θ) = e^{iNθ}`, with `θ` reduced into `[−π, π)`.
pub fn unitary_at(rep: &U1Representation, theta: f64) -> Operator {
    let theta = reduce_angle(theta);
    let n = rep.dim();
    let mut m = DMatrix::zeros(n, n);
    for (k, &s) in rep.spectrum.iter().enumerate() {
        m[(k, k)] = C64::from_polar(1.0, s as f64 * theta);
    }
    Operator::from_matrix_unchecked(m)
}

/// `U(θ) A U(θ)*`: entry `(k, l)` picks up the phase `e^{i(n_k − n_l)θ}`.
pub fn conjugate(rep: &U1Representation, theta: f64, a: &Operator) -> Result<Operator> {
    rep.check(a)?;
    let theta = reduce_angle(theta);
    let s = &rep.spectrum;
    Ok(Operator::from_fn(a.dim(), |k, l| {
        a.get(k, l) * C64::from_polar(1.0, (s[k] - s[l]) as f64 * theta)
    }))
}

/// `‖[E, N]‖ / max(1, ‖E‖·‖N‖)`.
pub fn invariance_defect(joint: &JointRepresentation, e: &Operator) -> Result<f64> {
    let total = joint.total();
    total.check(e)?;
    Ok(commutant_defect(&total, e))
}

pub(crate) fn commutant_defect(rep: &U1Representation, e: &Operator) -> f64 {
    let s = &rep.spectrum;
    let comm = Operator::from_fn(e.dim(), |a, b| e.get(a, b) * ((s[b] - s[a]) as f64));
    let scale = (op_norm(e) * rep.norm()).max(1.0);
    op_norm(&comm) / scale
}

/// Keeps the entries between equal eigenvalues of `rep` and zeroes the rest.
///
/// This is the group average `(1/2π)∫ U(θ) X U(θ)* dθ`, computed exactly.
pub fn twirl_operator(rep: &U1Representation, x: &Operator) -> Result<Operator> {
    rep.check(x)?;
    let s = &rep.spectrum;
    Ok(Operator::from_fn(x.dim(), |a, b| {
        if s[a] == s[b] {
            x.get(a, b)
        } else {
            ZERO
        }
    }))
}

/// Twirl of a joint effect with respect to the total number operator.
pub fn twirl(joint: &JointRepresentation, e: &Effect) -> Result<Effect> {
    let t = twirl_operator(&joint.total(), e.op())?;
    Effect::new(t)
}

/// Block-diagonal random effect: an independent random effect on each
/// total-number eigenspace.
pub fn random_invariant_effect(joint: &JointRepresentation, seed: u64) -> Effect {
    let mut rng = random::rng(seed);
    let total = joint.total();
    let mut out = Operator::zeros(total.dim());
    for (_, idx) in total.eigenspaces() {
        let block = random::effect(idx.len(), &mut rng);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                out.set(i, j, block.op().get(a, b));
            }
        }
    }
    let e = Effect::new(out).expect("blockwise effect");
    debug_assert!(commutant_defect(&total, e.op()) <= tol::INVARIANCE);
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qla::tensor;

    fn rep(s: &[i64]) -> U1Representation {
        U1Representation::new(s.to_vec()).unwrap()
    }

    #[test]
    fn angle_reduction() {
        assert_eq!(reduce_angle(PI), -PI);
        assert_eq!(reduce_angle(-PI), -PI);
        assert!((reduce_angle(3.0 * PI + 0.25) - (-PI + 0.25)).abs() < 1e-12);
        assert!((reduce_angle(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn unitary_trivial_points() {
        let r = rep(&[0, 1]);
        assert_eq!(unitary_at(&r, 0.0), Operator::identity(2));
        let u = unitary_at(&r, PI);
        assert!((u.get(0, 0) - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((u.get(1, 1) - C64::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn conjugate_fixes_number_operator() {
        let r = rep(&[0, 1, 2, 5]);
        let n = r.number_operator();
        assert_eq!(conjugate(&r, 1.234, &n).unwrap(), n);
        let a = Operator::from_fn(4, |i, j| C64::new(i as f64, j as f64));
        assert_eq!(conjugate(&r, 0.0, &a).unwrap(), a);
    }

    #[test]
    fn eigenprojections_resolve_identity() {
        let r = rep(&[0, 2, 2, 1, 0]);
        let spaces = r.eigenspaces();
        assert_eq!(spaces.len(), 3);
        let mut sum = Operator::zeros(5);
        for (n, _) in &spaces {
            let p = r.eigenprojection(*n);
            assert_eq!(&p * &p, p);
            sum = &sum + &p;
        }
        assert_eq!(sum, Operator::identity(5));
        let p0 = r.eigenprojection(0);
        let p2 = r.eigenprojection(2);
        assert_eq!(&p0 * &p2, Operator::zeros(5));
    }

    #[test]
    fn joint_total_spectrum() {
        let j = JointRepresentation::new(rep(&[0, 1]), rep(&[0, 1, 2]));
        assert_eq!(j.total().spectrum(), &[0, 1, 2, 1, 2, 3]);
    }

    #[test]
    fn invariance_defect_cases() {
        let j = JointRepresentation::new(rep(&[0, 1]), rep(&[0, 1]));
        let p = j.total().eigenprojection(1);
        assert!(invariance_defect(&j, &p).unwrap() < 1e-15);
        let x = Operator::from_real_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let ax = tensor(&x, &Operator::identity(2));
        // [A⊗I, N] has entries ±½ on the (0,1),(1,0) blocks: norm ½, scaled by ‖A⊗I‖‖N‖ = 2
        let d = invariance_defect(&j, &ax).unwrap();
        assert!((d - 0.25).abs() < 1e-12, "{d}");
    }

    #[test]
    fn twirl_keeps_diagonal_product_effects() {
        let j = JointRepresentation::new(rep(&[0, 1, 2]), rep(&[0, 1]));
        let a = Effect::new(tensor(&Operator::diag(&[0.2, 0.7, 1.0]), &Operator::identity(2))).unwrap();
        assert_eq!(twirl(&j, &a).unwrap(), a);
    }

    #[test]
    fn random_invariant_effect_is_deterministic_and_invariant() {
        let j = JointRepresentation::new(rep(&[0, 1, 2]), rep(&[0, 1, 2, 3]));
        let a = random_invariant_effect(&j, 42);
        let b = random_invariant_effect(&j, 42);
        assert_eq!(a, b);
        assert!(invariance_defect(&j, a.op()).unwrap() <= 1e-10);
        assert_ne!(a, random_invariant_effect(&j, 43));
    }

    #[test]
    fn representation_json() {
        let r: U1Representation = serde_json::from_str(r#"{"dim":3}"#).unwrap();
        assert_eq!(r.spectrum(), &[0, 1, 2]);
        let r: U1Representation = serde_json::from_str(r#"{"dim":2,"spectrum":[3,-1]}"#).unwrap();
        assert_eq!(r.spectrum(), &[3, -1]);
        assert_eq!(serde_json::to_string(&r).unwrap(), r#"{"dim":2,"spectrum":[3,-1]}"#);
        assert!(serde_json::from_str::<U1Representation>(r#"{"dim":2,"spectrum":[1]}"#).is_err());
    }
}
