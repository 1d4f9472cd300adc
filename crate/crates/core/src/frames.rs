//! Restriction and relativisation.
//!
//! [`RestrictionChannel`] contracts the reference factor of a joint operator
//! against a fixed reference state, `Γ_ω(A ⊗ B) = A·ω(B)`. [`Relativiser`]
//! goes the other way: it turns a system operator into an invariant joint
//! operator `¥(A) = (1/2π)∫ U_S A U_S* ⊗ U_R T U_R* dθ`. Both are computed in
//! closed form; the integrals only appear as test oracles.

use crate::error::{Error, Result};
use crate::phasepovm::{CovariantPhasePovm, PhaseMeasure};
use crate::qla::{tensor, Effect, Operator, State, C64, ZERO};
use crate::symmetry::{reduce_angle, JointRepresentation, U1Representation};
use crate::tol;

/// A linear map between operator algebras in the Heisenberg picture.
pub trait HeisenbergChannel: Sync {
    /// Dimension of the Hilbert space the inputs act on.
    fn domain_dim(&self) -> usize;
    /// Dimension of the Hilbert space the outputs act on.
    fn codomain_dim(&self) -> usize;
    fn apply(&self, x: &Operator) -> Result<Operator>;
}

/// Choi matrix `Σ_{ij} |i⟩⟨j| ⊗ Λ(|i⟩⟨j|)`; positive iff `Λ` is completely positive.
pub fn choi_matrix(channel: &dyn HeisenbergChannel) -> Result<Operator> {
    let (n, m) = (channel.domain_dim(), channel.codomain_dim());
    let mut out = Operator::zeros(n * m);
    for i in 0..n {
        for j in 0..n {
            let img = channel.apply(&Operator::unit(n, i, j))?;
            for a in 0..m {
                for b in 0..m {
                    out.set(i * m + a, j * m + b, img.get(a, b));
                }
            }
        }
    }
    Ok(out)
}

/// `Γ_ω`: joint operators on `H_S ⊗ H_R` to system operators.
#[derive(Clone, Debug, PartialEq)]
pub struct RestrictionChannel {
    omega: State,
    sys_dim: usize,
}

impl RestrictionChannel {
    pub fn new(omega: State, sys_dim: usize) -> Self {
        Self { omega, sys_dim }
    }

    pub fn omega(&self) -> &State {
        &self.omega
    }

    pub fn sys_dim(&self) -> usize {
        self.sys_dim
    }

    pub fn ref_dim(&self) -> usize {
        self.omega.dim()
    }

    fn check(&self, e: &Operator) -> Result<()> {
        let want = self.sys_dim * self.ref_dim();
        if e.dim() != want {
            return Err(Error::DimensionMismatch {
                expected: want,
                got: e.dim(),
            });
        }
        Ok(())
    }

    /// `Γ(E)_{ik} = Σ_{jl} E_{(i,j),(k,l)} ρ_{lj}`.
    pub fn restrict(&self, e: &Operator) -> Result<Operator> {
        self.check(e)?;
        let (ds, dr) = (self.sys_dim, self.ref_dim());
        let rho = self.omega.op();
        Ok(Operator::from_fn(ds, |i, k| {
            let mut acc = ZERO;
            for j in 0..dr {
                for l in 0..dr {
                    acc += e.get(i * dr + j, k * dr + l) * rho.get(l, j);
                }
            }
            acc
        }))
    }

    pub fn restrict_effect(&self, e: &Effect) -> Result<Effect> {
        Effect::new(self.restrict(e.op())?)
    }

    /// Hilbert–Schmidt adjoint, `Γ*(X) = X ⊗ ρ`.
    pub fn adjoint(&self, x: &Operator) -> Result<Operator> {
        if x.dim() != self.sys_dim {
            return Err(Error::DimensionMismatch {
                expected: self.sys_dim,
                got: x.dim(),
            });
        }
        Ok(tensor(x, self.omega.op()))
    }
}

impl HeisenbergChannel for RestrictionChannel {
    fn domain_dim(&self) -> usize {
        self.sys_dim * self.ref_dim()
    }
    fn codomain_dim(&self) -> usize {
        self.sys_dim
    }
    fn apply(&self, x: &Operator) -> Result<Operator> {
        self.restrict(x)
    }
}

/// `¥`: system operators to invariant joint operators, through a covariant
/// phase POVM on the reference.
#[derive(Clone, Debug, PartialEq)]
pub struct Relativiser {
    sys: U1Representation,
    povm: CovariantPhasePovm,
}

impl Relativiser {
    pub fn new(sys: U1Representation, povm: CovariantPhasePovm) -> Self {
        Self { sys, povm }
    }

    pub fn sys_rep(&self) -> &U1Representation {
        &self.sys
    }

    pub fn povm(&self) -> &CovariantPhasePovm {
        &self.povm
    }

    pub fn joint(&self) -> JointRepresentation {
        JointRepresentation::new(self.sys.clone(), self.povm.ref_rep().clone())
    }

    fn check(&self, a: &Operator) -> Result<()> {
        if a.dim() != self.sys.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.sys.dim(),
                got: a.dim(),
            });
        }
        Ok(())
    }

    /// `¥(A)_{(n,k),(m,l)} = A_nm T_kl [s_n + r_k = s_m + r_l]`.
    pub fn relativise(&self, a: &Operator) -> Result<Operator> {
        self.check(a)?;
        let s = self.sys.spectrum();
        let r = self.povm.ref_rep().spectrum();
        let t = self.povm.generator();
        let dr = r.len();
        Ok(Operator::from_fn(s.len() * dr, |x, y| {
            let (n, k) = (x / dr, x % dr);
            let (m, l) = (y / dr, y % dr);
            if s[n] + r[k] == s[m] + r[l] {
                a.get(n, m) * t.get(k, l)
            } else {
                ZERO
            }
        }))
    }

    pub fn relativise_effect(&self, a: &Effect) -> Result<Effect> {
        Effect::new(self.relativise(a.op())?)
    }

    /// `¥_θ₀(A) = (I ⊗ U_R(θ₀)) ¥(A) (I ⊗ U_R(θ₀))*`.
    pub fn relativise_deformed(&self, a: &Operator, theta0: f64) -> Result<Operator> {
        let base = self.relativise(a)?;
        let theta0 = reduce_angle(theta0);
        let r = self.povm.ref_rep().spectrum();
        let dr = r.len();
        Ok(Operator::from_fn(base.dim(), |x, y| {
            base.get(x, y) * C64::from_polar(1.0, (r[x % dr] - r[y % dr]) as f64 * theta0)
        }))
    }

    /// `Γ_ω(¥(A))` in closed form: entry `(n, m)` is `A_nm ĉ_{s_n − s_m}`.
    pub fn restricted_relativised(&self, ch: &RestrictionChannel, a: &Operator) -> Result<Operator> {
        self.check(a)?;
        let measure = self.povm.phase_measure(ch.omega())?;
        Ok(self.pinch_with(&measure, a))
    }

    /// `∫ μ(dθ) U_S(θ) A U_S(θ)*` for a given phase measure.
    pub fn pinch_with(&self, measure: &PhaseMeasure, a: &Operator) -> Operator {
        let s = self.sys.spectrum();
        Operator::from_fn(a.dim(), |n, m| a.get(n, m) * measure.coefficient(s[n] - s[m]))
    }

    /// Center of the ε-support of the reference phase measure: the angle
    /// at which `¥_θ₀` is best aligned with `ω_R`.
    pub fn support_angle(&self, ch: &RestrictionChannel, eps: f64) -> Result<f64> {
        let measure = self.povm.phase_measure(ch.omega())?;
        Ok(measure.epsilon_support(eps)?.center())
    }
}

/// Recovers `ω_R` from a channel satisfying `Γ(A ⊗ I) = A` by probing
/// `I ⊗ |j⟩⟨l|`: each image must be `ω_R(|j⟩⟨l|)·I = ρ_lj·I`.
pub fn infer_reference_state(
    gamma: &dyn HeisenbergChannel,
    sys_dim: usize,
    ref_dim: usize,
) -> Result<State> {
    if gamma.domain_dim() != sys_dim * ref_dim || gamma.codomain_dim() != sys_dim {
        return Err(Error::DimensionMismatch {
            expected: sys_dim * ref_dim,
            got: gamma.domain_dim(),
        });
    }
    let id = Operator::identity(sys_dim);
    let mut rho = Operator::zeros(ref_dim);
    for j in 0..ref_dim {
        for l in 0..ref_dim {
            let img = gamma.apply(&tensor(&id, &Operator::unit(ref_dim, j, l)))?;
            let scalar = img.trace() / sys_dim as f64;
            let residual = (&img - &id.scale_c(scalar)).max_abs();
            if residual > 1e-8 {
                return Err(Error::NotARestriction(format!(
                    "image of I⊗|{j}⟩⟨{l}| deviates from a scalar by {residual:.3e}"
                )));
            }
            rho.set(l, j, scalar);
        }
    }
    let rho = rho.hermitian_part();
    let tr = rho.trace().re;
    let min = rho.eigenvalues().first().copied().unwrap_or(0.0);
    if (tr - 1.0).abs() > tol::DERIVED_EQ || min < -tol::DERIVED_EQ {
        return Err(Error::NotARestriction(format!(
            "recovered functional is not a state (trace {tr}, min eigenvalue {min:.3e})"
        )));
    }
    let renorm = Operator::from_spectral(
        &rho.eigenvalues().iter().map(|x| x.max(0.0)).collect::<Vec<_>>(),
        &rho.eigh().1,
    );
    let total = renorm.trace().re;
    State::new(if min >= 0.0 && (tr - 1.0).abs() <= tol::TRACE {
        rho
    } else {
        renorm.scale(1.0 / total)
    })
}
