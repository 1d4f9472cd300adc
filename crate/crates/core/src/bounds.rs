//! Named checkers for the localisation and trade-off inequalities.
//!
//! Each checker evaluates both sides of one inequality and returns a
//! [`BoundReport`] whose `slack` is oriented so that `slack ≥ 0` means the
//! inequality holds. Checkers whose hypotheses fail still report the
//! numbers, but with `applicable = false`.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::frames::{HeisenbergChannel, Relativiser, RestrictionChannel};
use crate::phasepovm::CovariantPhasePovm;
use crate::qla::{effect_unsharpness, op_norm, operator_distance, tensor, Effect, Operator, State, C64, ONE};
use crate::random;
use crate::symmetry::{conjugate, invariance_defect, JointRepresentation, U1Representation};
use crate::tol;

/// Which side is expected to be larger.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    /// `lhs ≤ rhs`
    Upper,
    /// `lhs ≥ rhs`
    Lower,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
    pub applicable: bool,
    pub digest: String,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, f64>,
}

impl BoundReport {
    pub fn evaluate(
        name: &str,
        lhs: f64,
        rhs: f64,
        orientation: Orientation,
        tolerance: f64,
        digest: String,
    ) -> Self {
        let slack = match orientation {
            Orientation::Upper => rhs - lhs,
            Orientation::Lower => lhs - rhs,
        };
        Self {
            name: name.to_string(),
            lhs,
            rhs,
            slack,
            pass: slack >= -tolerance,
            applicable: true,
            digest,
            tolerance,
            details: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.details.insert(key.to_string(), value);
        self
    }

    /// Folds in a further slack that must also be non-negative.
    pub fn tighten(mut self, key: &str, slack: f64) -> Self {
        self.details.insert(format!("{key}_slack"), slack);
        if slack < self.slack {
            self.slack = slack;
        }
        self.pass = self.slack >= -self.tolerance;
        self
    }

    pub fn applicable_if(mut self, applicable: bool) -> Self {
        self.applicable = applicable;
        self
    }

    pub fn is_failure(&self) -> bool {
        self.applicable && !self.pass
    }
}

/// SHA-256 over the bit patterns of a checker's inputs.
#[derive(Clone)]
pub struct InputDigest(Sha256);

impl InputDigest {
    pub fn new(name: &str) -> Self {
        let mut h = Sha256::new();
        h.update(name.as_bytes());
        Self(h)
    }

    pub fn real(mut self, x: f64) -> Self {
        self.0.update(x.to_bits().to_le_bytes());
        self
    }

    pub fn bytes(mut self, b: &[u8]) -> Self {
        self.0.update((b.len() as u64).to_le_bytes());
        self.0.update(b);
        self
    }

    pub fn ints(mut self, xs: &[i64]) -> Self {
        self.0.update((xs.len() as u64).to_le_bytes());
        for x in xs {
            self.0.update(x.to_le_bytes());
        }
        self
    }

    pub fn op(mut self, a: &Operator) -> Self {
        self.0.update((a.dim() as u64).to_le_bytes());
        for z in a.matrix().iter() {
            self.0.update(z.re.to_bits().to_le_bytes());
            self.0.update(z.im.to_bits().to_le_bytes());
        }
        self
    }

    pub fn rep(self, r: &U1Representation) -> Self {
        self.ints(r.spectrum())
    }

    pub fn povm(self, p: &CovariantPhasePovm) -> Self {
        self.rep(p.ref_rep()).op(p.generator())
    }

    pub fn relativiser(self, rel: &Relativiser) -> Self {
        self.rep(rel.sys_rep()).povm(rel.povm())
    }

    pub fn finish(self) -> String {
        self.0.finalize()[..16].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// `½(|0⟩ + |1⟩)(⟨0| + ⟨1|)` on the levels of `N_S` with eigenvalues 0 and 1.
pub fn plus_effect(sys: &U1Representation) -> Result<Effect> {
    let i0 = sys.index_of(0).ok_or(Error::MissingLevel(0))?;
    let i1 = sys.index_of(1).ok_or(Error::MissingLevel(1))?;
    let mut a = Operator::zeros(sys.dim());
    for &i in &[i0, i1] {
        for &j in &[i0, i1] {
            a.set(i, j, C64::new(0.5, 0.0));
        }
    }
    Effect::new(a)
}

/// Smallest `D` with `½ ≤ D + 2√2·σ·√D`, the root of the quadratic in `√D`.
pub fn example_distance_lower_bound(sigma: f64) -> f64 {
    let x = -SQRT_2 * sigma + (2.0 * sigma * sigma + 0.5).sqrt();
    x * x
}

fn check_frame(rel: &Relativiser, ch: &RestrictionChannel) -> Result<()> {
    if rel.sys_rep().dim() != ch.sys_dim() {
        return Err(Error::DimensionMismatch {
            expected: rel.sys_rep().dim(),
            got: ch.sys_dim(),
        });
    }
    if rel.povm().dim() != ch.ref_dim() {
        return Err(Error::DimensionMismatch {
            expected: rel.povm().dim(),
            got: ch.ref_dim(),
        });
    }
    Ok(())
}

fn relativised_distance(rel: &Relativiser, ch: &RestrictionChannel, a: &Operator) -> Result<f64> {
    let approx = ch.restrict(&rel.relativise(a)?)?;
    operator_distance(a, &approx)
}

/// `D(A, Γ(¥(A))) ≤ ‖[N_S, A]‖·(½·W⁰_ε·(1−ε) + πε)`.
pub fn check_prop1(rel: &Relativiser, ch: &RestrictionChannel, a: &Effect, eps: f64) -> Result<BoundReport> {
    check_frame(rel, ch)?;
    let measure = rel.povm().phase_measure(ch.omega())?;
    let w0 = measure.overall_width_around_zero(eps)?;
    let lhs = relativised_distance(rel, ch, a.op())?;
    let comm = op_norm(&rel.sys_rep().number_operator().commutator(a.op())?);
    let rhs = comm * (0.5 * w0 * (1.0 - eps) + PI * eps);
    let digest = InputDigest::new("prop1")
        .relativiser(rel)
        .op(ch.omega().op())
        .op(a.op())
        .real(eps)
        .finish();
    Ok(BoundReport::evaluate("prop1", lhs, rhs, Orientation::Upper, tol::PASS, digest)
        .with("w0", w0)
        .with("commutator_norm", comm))
}

/// `D(A, Γ(¥(A))) ≥ (ε/2)(1 − cos(W⁰_ε/2))` for the fixed plus effect.
///
/// The distance is computed as an operator norm and as `|1 − ĉ₁|/2`; the
/// two must agree to `1e-10`.
pub fn check_prop2(rel: &Relativiser, ch: &RestrictionChannel, eps: f64) -> Result<BoundReport> {
    check_frame(rel, ch)?;
    let a = plus_effect(rel.sys_rep())?;
    let measure = rel.povm().phase_measure(ch.omega())?;
    let w0 = measure.overall_width_around_zero(eps)?;
    let lhs = relativised_distance(rel, ch, a.op())?;
    let c = ONE - measure.coefficient(1);
    let via_fourier = 0.5 * c.norm();
    let gap = (lhs - via_fourier).abs();
    if gap > 1e-10 {
        return Err(Error::RouteMismatch(gap));
    }
    let rhs = 0.5 * eps * (1.0 - (0.5 * w0).cos());
    let digest = InputDigest::new("prop2")
        .relativiser(rel)
        .op(ch.omega().op())
        .real(eps)
        .finish();
    Ok(BoundReport::evaluate("prop2", lhs, rhs, Orientation::Lower, tol::PASS, digest)
        .with("w0", w0)
        .with("c_re", c.re)
        .with("c_im", c.im)
        .with("half_abs_c", via_fourier))
}

/// `D(A, Γ(¥(A))) ≥ t·ε·‖P_n A P_m‖` for `q = n − m = 1` and
/// `D(A, Γ(¥(A))) ≥ t·max(0, μ([−π/q, π/q]) − (1 − ε))·‖P_n A P_m‖` for `q ≥ 2`,
/// where `t = 1 − cos(q·W⁰_ε/2)`.
///
/// Applicable when the block `P_n A P_m` is nonzero and `W⁰_ε ≤ 2π/q`. For
/// `q ≥ 2` the `t·ε·‖P_n A P_m‖` form can fail (mass outside `[−π/q, π/q]`
/// wraps around under `e^{iqθ}`); it is kept in `details.stated_rhs`.
pub fn check_general_lower_bound(
    rel: &Relativiser,
    ch: &RestrictionChannel,
    a: &Effect,
    n: i64,
    m: i64,
    eps: f64,
) -> Result<BoundReport> {
    check_frame(rel, ch)?;
    if n <= m {
        return Err(Error::InvalidParameter(format!("need n > m, got n = {n}, m = {m}")));
    }
    let sys = rel.sys_rep();
    for level in [n, m] {
        if sys.index_of(level).is_none() {
            return Err(Error::MissingLevel(level));
        }
    }
    let q = (n - m) as f64;
    let block = &(&sys.eigenprojection(n) * a.op()) * &sys.eigenprojection(m);
    let coherence = op_norm(&block);

    let measure = rel.povm().phase_measure(ch.omega())?;
    let w0 = measure.overall_width_around_zero(eps)?;
    let lhs = relativised_distance(rel, ch, a.op())?;
    let t = 1.0 - (0.5 * q * w0).cos();
    let stated = t * eps * coherence;

    let c_nm = ONE - measure.coefficient(n - m);
    let inner = measure.centered_mass(0.0, 2.0 * PI / q);
    let proven = t * (inner - (1.0 - eps)).max(0.0) * coherence;
    let rhs = if n - m == 1 { stated } else { proven };
    let applicable = coherence > tol::STRUCTURAL && w0 <= 2.0 * PI / q + tol::STRUCTURAL;

    let digest = InputDigest::new("general_lower_bound")
        .relativiser(rel)
        .op(ch.omega().op())
        .op(a.op())
        .ints(&[n, m])
        .real(eps)
        .finish();
    Ok(
        BoundReport::evaluate("general_lower_bound", lhs, rhs, Orientation::Lower, tol::PASS, digest)
            .applicable_if(applicable)
            .with("w0", w0)
            .with("coherence", coherence)
            .with("c_nm_re", c_nm.re)
            .with("c_nm_im", c_nm.im)
            .with("coherence_bound", c_nm.norm() * coherence)
            .with("inner_mass", inner)
            .with("proven_rhs", proven)
            .with("stated_rhs", stated),
    )
}

/// `1 − ε ≤ (dim H_R / 2π)·W⁰_ε`.
pub fn check_dim_lemma(povm: &CovariantPhasePovm, omega: &State, eps: f64) -> Result<BoundReport> {
    let measure = povm.phase_measure(omega)?;
    let w0 = measure.overall_width_around_zero(eps)?;
    let lhs = 1.0 - eps;
    let rhs = povm.dim() as f64 * w0 / (2.0 * PI);
    let digest = InputDigest::new("dim_lemma").povm(povm).op(omega.op()).real(eps).finish();
    Ok(BoundReport::evaluate("dim_lemma", lhs, rhs, Orientation::Upper, tol::PASS, digest).with("w0", w0))
}

/// `cos(ΔN·W⁰_ε) ≤ √(ε(1−ε)) + √ε`, applicable when `W⁰_ε ≤ π` and
/// `ΔN·W⁰_ε ≤ π/2`.
///
/// Both steps of the chain `cos(ΔN·W) ≤ F(ρ, ρ_{−W}) ≤ √(ε(1−ε)) + √ε` are
/// evaluated, with `ρ_{−W} = e^{iNW} ρ e^{−iNW}`; the reported slack is the
/// smallest of the three.
pub fn check_mt_width_lemma(povm: &CovariantPhasePovm, omega: &State, eps: f64) -> Result<BoundReport> {
    let measure = povm.phase_measure(omega)?;
    let w0 = measure.overall_width_around_zero(eps)?;
    let rep = povm.ref_rep();
    let dn = omega.std_dev(&rep.number_operator());
    let lhs = (dn * w0).cos();
    let rhs = (eps * (1.0 - eps)).sqrt() + eps.sqrt();
    let shifted = State::new(conjugate(rep, w0, omega.op())?)?;
    let fid = crate::qla::fidelity(omega, &shifted)?;
    let applicable = w0 <= PI && dn * w0 <= 0.5 * PI;
    let digest = InputDigest::new("mt_width_lemma").povm(povm).op(omega.op()).real(eps).finish();
    Ok(
        BoundReport::evaluate("mt_width_lemma", lhs, rhs, Orientation::Upper, tol::PASS, digest)
            .applicable_if(applicable)
            .with("w0", w0)
            .with("delta_n", dn)
            .with("fidelity", fid)
            .tighten("fidelity_step", rhs - fid)
            .tighten("mandelstam_tamm", fid - lhs),
    )
}

/// Lower bounds on `D(A, Γ(¥(A)))` for the plus effect in terms of `ΔN_R`:
/// `> 1/32` when `ΔN < 1/6`, else `≥ (1/32)(1 − cos(π/(12ΔN)))`.
///
/// The case split at `ε = 1/16` is recorded in `details.branch` (1, 2 or 3)
/// and the branch's own bound is folded into the slack.
pub fn check_sec4_theorem(rel: &Relativiser, ch: &RestrictionChannel) -> Result<BoundReport> {
    check_frame(rel, ch)?;
    let a = plus_effect(rel.sys_rep())?;
    let d = relativised_distance(rel, ch, a.op())?;
    let dn = ch.omega().std_dev(&rel.povm().ref_rep().number_operator());
    let eps = 1.0 / 16.0;
    let w = rel.povm().phase_measure(ch.omega())?.overall_width_around_zero(eps)?;

    let rhs = if dn < 1.0 / 6.0 {
        1.0 / 32.0
    } else {
        (1.0 - (PI / (12.0 * dn)).cos()) / 32.0
    };
    let (branch, branch_bound) = if w > PI {
        (3.0, 1.0 / 32.0)
    } else if dn * w > 0.5 * PI {
        (1.0, (1.0 - (PI / (4.0 * dn)).cos()) / 32.0)
    } else {
        (2.0, (1.0 - (PI / (12.0 * dn)).cos()) / 32.0)
    };
    let digest = InputDigest::new("sec4_theorem")
        .relativiser(rel)
        .op(ch.omega().op())
        .finish();
    Ok(
        BoundReport::evaluate("sec4_theorem", d, rhs, Orientation::Lower, tol::PASS, digest)
            .with("delta_n", dn)
            .with("w0_1_16", w)
            .with("branch", branch)
            .with("branch_bound", branch_bound)
            .with("strict", if dn < 1.0 / 6.0 { 1.0 } else { 0.0 })
            .tighten("branch", d - branch_bound),
    )
}

struct TradeoffTerms {
    distance: f64,
    commutator: f64,
    ns_norm: f64,
    nr_norm: f64,
    sigma: f64,
    gg: f64,
    two_positivity: f64,
}

fn tradeoff_terms(
    joint: &JointRepresentation,
    ch: &RestrictionChannel,
    e: &Effect,
    a: &Effect,
) -> Result<TradeoffTerms> {
    if ch.sys_dim() != joint.sys.dim() || ch.ref_dim() != joint.reference.dim() {
        return Err(Error::DimensionMismatch {
            expected: joint.dim(),
            got: ch.sys_dim() * ch.ref_dim(),
        });
    }
    if a.dim() != joint.sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: joint.sys.dim(),
            got: a.dim(),
        });
    }
    let defect = invariance_defect(joint, e.op())?;
    if defect > tol::INVARIANCE_PRECONDITION {
        return Err(Error::NotInvariant(defect));
    }
    let g = ch.restrict(e.op())?;
    let g2 = ch.restrict(&(e.op() * e.op()))?;
    let var = &g2 - &(&g * &g);
    Ok(TradeoffTerms {
        distance: operator_distance(&g, a.op())?,
        commutator: op_norm(&a.op().commutator(&joint.sys.number_operator())?),
        ns_norm: joint.sys.norm(),
        nr_norm: joint.reference.norm(),
        sigma: ch.omega().std_dev(&joint.reference.number_operator()),
        gg: op_norm(&var),
        two_positivity: var.hermitian_part().eigenvalues()[0],
    })
}

fn tradeoff_digest(name: &str, joint: &JointRepresentation, ch: &RestrictionChannel, e: &Effect, a: &Effect) -> String {
    InputDigest::new(name)
        .rep(&joint.sys)
        .rep(&joint.reference)
        .op(ch.omega().op())
        .op(e.op())
        .op(a.op())
        .finish()
}

/// `‖[A, N_S]‖ ≤ 2D‖N_S‖ + 2σ(N_R)(2D + V(A))^{1/2}` with `D = D(Γ(E), A)`,
/// for invariant `E`.
pub fn check_main_theorem(
    joint: &JointRepresentation,
    ch: &RestrictionChannel,
    e: &Effect,
    a: &Effect,
) -> Result<BoundReport> {
    let t = tradeoff_terms(joint, ch, e, a)?;
    let v = effect_unsharpness(a);
    let rhs = 2.0 * t.distance * t.ns_norm + 2.0 * t.sigma * (2.0 * t.distance + v).sqrt();
    let digest = tradeoff_digest("main_theorem", joint, ch, e, a);
    Ok(
        BoundReport::evaluate("main_theorem", t.commutator, rhs, Orientation::Upper, tol::PASS, digest)
            .with("distance", t.distance)
            .with("sigma_nr", t.sigma)
            .with("unsharpness", v)
            .with("gg_lhs", t.gg)
            .with("gg_rhs", 2.0 * t.distance + v)
            .with("two_positivity_min_eig", t.two_positivity),
    )
}

/// The main inequality with `‖N_R‖` in place of `σ(N_R)`.
pub fn check_corollary_norm(
    joint: &JointRepresentation,
    ch: &RestrictionChannel,
    e: &Effect,
    a: &Effect,
) -> Result<BoundReport> {
    let t = tradeoff_terms(joint, ch, e, a)?;
    let v = effect_unsharpness(a);
    let root = (2.0 * t.distance + v).sqrt();
    let base = 2.0 * t.distance * t.ns_norm;
    let rhs = base + 2.0 * t.nr_norm * root;
    let rhs_theorem = base + 2.0 * t.sigma * root;
    let digest = tradeoff_digest("corollary_norm", joint, ch, e, a);
    Ok(
        BoundReport::evaluate("corollary_norm", t.commutator, rhs, Orientation::Upper, tol::PASS, digest)
            .with("distance", t.distance)
            .with("rhs_theorem", rhs_theorem)
            .tighten("weaker_than_theorem", rhs - rhs_theorem),
    )
}

/// For a projection `P`: `‖[P, N_S]‖ ≤ 2D‖N_S‖ + 2√2·σ(N_R)·D^{1/2}`.
pub fn check_corollary_sharp(
    joint: &JointRepresentation,
    ch: &RestrictionChannel,
    e: &Effect,
    p: &Effect,
) -> Result<BoundReport> {
    let v = effect_unsharpness(p);
    if v > tol::SHARP {
        return Err(Error::NotAProjection(v));
    }
    let t = tradeoff_terms(joint, ch, e, p)?;
    let rhs = 2.0 * t.distance * t.ns_norm + 2.0 * SQRT_2 * t.sigma * t.distance.sqrt();
    let digest = tradeoff_digest("corollary_sharp", joint, ch, e, p);
    Ok(
        BoundReport::evaluate("corollary_sharp", t.commutator, rhs, Orientation::Upper, tol::PASS, digest)
            .with("distance", t.distance)
            .with("sigma_nr", t.sigma),
    )
}

/// `(P ⊗ I) E (P ⊗ I)` with `P` the projection onto the levels 0 and 1.
pub fn compress_to_qubit(joint: &JointRepresentation, e: &Effect) -> Result<Effect> {
    let sys = &joint.sys;
    let i0 = sys.index_of(0).ok_or(Error::MissingLevel(0))?;
    let i1 = sys.index_of(1).ok_or(Error::MissingLevel(1))?;
    let weights: Vec<f64> = (0..sys.dim()).map(|i| if i == i0 || i == i1 { 1.0 } else { 0.0 }).collect();
    let p = tensor(&Operator::diag(&weights), &Operator::identity(joint.reference.dim()));
    p.check_dim(e.op())?;
    Effect::new(&(&p * e.op()) * &p)
}

/// `½ ≤ D + 2√2·σ(N_R)·D^{1/2}` for the plus effect, with `E` first
/// compressed onto the levels 0 and 1. `details.d_lower` is the implied
/// lower bound on `D`.
pub fn check_example_tight_bound(
    joint: &JointRepresentation,
    ch: &RestrictionChannel,
    e: &Effect,
) -> Result<BoundReport> {
    let a = plus_effect(&joint.sys)?;
    let compressed = compress_to_qubit(joint, e)?;
    let t = tradeoff_terms(joint, ch, &compressed, &a)?;
    let d = t.distance;
    let rhs = d + 2.0 * SQRT_2 * t.sigma * d.sqrt();
    let uncompressed = operator_distance(&ch.restrict(e.op())?, a.op())?;
    let digest = tradeoff_digest("example_tight_bound", joint, ch, e, &a);
    Ok(
        BoundReport::evaluate("example_tight_bound", t.commutator, rhs, Orientation::Upper, tol::PASS, digest)
            .with("distance", d)
            .with("sigma_nr", t.sigma)
            .with("d_lower", example_distance_lower_bound(t.sigma))
            .with("uncompressed_distance", uncompressed)
            .tighten("compression", uncompressed - d),
    )
}

/// A unital completely positive map `Λ(A) = V*(A ⊗ I)V` given by a
/// Stinespring isometry `V: K → H ⊗ H'`, and the sesquilinear form
/// `⟨A, B⟩ = Λ(A*B) − Λ(A*)Λ(B)` it induces.
#[derive(Clone, Debug, PartialEq)]
pub struct OpInnerProduct {
    v: DMatrix<C64>,
    domain_dim: usize,
    ancilla_dim: usize,
}

impl OpInnerProduct {
    pub fn new(v: DMatrix<C64>, domain_dim: usize, ancilla_dim: usize) -> Result<Self> {
        if v.nrows() != domain_dim * ancilla_dim {
            return Err(Error::DimensionMismatch {
                expected: domain_dim * ancilla_dim,
                got: v.nrows(),
            });
        }
        let gram = v.adjoint() * &v;
        let defect = (gram - DMatrix::<C64>::identity(v.ncols(), v.ncols()))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if defect > 1e-10 {
            return Err(Error::NotAnIsometry(defect));
        }
        Ok(Self {
            v,
            domain_dim,
            ancilla_dim,
        })
    }

    /// Random isometry from orthonormalising a seeded Gaussian matrix.
    pub fn random(domain_dim: usize, codomain_dim: usize, ancilla_dim: usize, seed: u64) -> Result<Self> {
        if domain_dim * ancilla_dim < codomain_dim {
            return Err(Error::InvalidParameter(format!(
                "no isometry from dimension {codomain_dim} into {domain_dim} x {ancilla_dim}"
            )));
        }
        let v = random::isometry(domain_dim * ancilla_dim, codomain_dim, &mut random::rng(seed));
        Self::new(v, domain_dim, ancilla_dim)
    }

    /// Dilation of `Γ_ω`: `V|ψ⟩ = |ψ⟩ ⊗ |Ω⟩` with `|Ω⟩ ∈ H_R ⊗ H_R'`
    /// purifying `ω_R`.
    pub fn from_restriction(ch: &RestrictionChannel) -> Result<Self> {
        let (ds, dr) = (ch.sys_dim(), ch.ref_dim());
        let (vals, vecs) = ch.omega().op().eigh();
        let mut v = DMatrix::zeros(ds * dr * dr, ds);
        for s in 0..ds {
            for r in 0..dr {
                for (i, &lam) in vals.iter().enumerate() {
                    v[((s * dr + r) * dr + i, s)] = vecs[(r, i)] * lam.max(0.0).sqrt();
                }
            }
        }
        Self::new(v, ds * dr, dr)
    }

    pub fn isometry(&self) -> &DMatrix<C64> {
        &self.v
    }

    pub fn ancilla_dim(&self) -> usize {
        self.ancilla_dim
    }

    pub fn apply(&self, a: &Operator) -> Result<Operator> {
        if a.dim() != self.domain_dim {
            return Err(Error::DimensionMismatch {
                expected: self.domain_dim,
                got: a.dim(),
            });
        }
        let lifted = a.matrix().kronecker(&DMatrix::<C64>::identity(self.ancilla_dim, self.ancilla_dim));
        Operator::from_matrix(self.v.adjoint() * lifted * &self.v)
    }
}

impl HeisenbergChannel for OpInnerProduct {
    fn domain_dim(&self) -> usize {
        self.domain_dim
    }
    fn codomain_dim(&self) -> usize {
        self.v.ncols()
    }
    fn apply(&self, x: &Operator) -> Result<Operator> {
        OpInnerProduct::apply(self, x)
    }
}

/// `⟨A, B⟩ = Λ(A*B) − Λ(A*)Λ(B)`.
pub fn cs_inner(ip: &OpInnerProduct, a: &Operator, b: &Operator) -> Result<Operator> {
    let ad = a.adjoint();
    Ok(&ip.apply(&(&ad * b))? - &(&ip.apply(&ad)? * &ip.apply(b)?))
}

fn cs_digest(name: &str, ip: &OpInnerProduct, a: &Operator, b: &Operator) -> String {
    let mut d = InputDigest::new(name).ints(&[
        ip.domain_dim as i64,
        ip.ancilla_dim as i64,
        ip.v.ncols() as i64,
    ]);
    for z in ip.v.iter() {
        d = d.real(z.re).real(z.im);
    }
    d.op(a).op(b).finish()
}

/// `⟨A,B⟩⟨B,A⟩ ≤ ‖⟨B,B⟩‖·⟨A,A⟩` as an operator inequality: `lhs` is the
/// smallest eigenvalue of the difference.
pub fn check_cs_lemma(ip: &OpInnerProduct, a: &Operator, b: &Operator) -> Result<BoundReport> {
    let aa = cs_inner(ip, a, a)?;
    let ab = cs_inner(ip, a, b)?;
    let ba = cs_inner(ip, b, a)?;
    let bb = cs_inner(ip, b, b)?;
    let gap = &aa.scale(op_norm(&bb)) - &(&ab * &ba);
    let min_eig = gap.hermitian_part().eigenvalues()[0];
    let digest = cs_digest("cs_lemma", ip, a, b);
    Ok(
        BoundReport::evaluate("cs_lemma", min_eig, 0.0, Orientation::Lower, tol::ORDERING, digest)
            .with("aa_min_eig", aa.hermitian_part().eigenvalues()[0])
            .with("symmetry_defect", (&ab.adjoint() - &ba).max_abs()),
    )
}

/// `‖⟨A,B⟩‖² ≤ ‖⟨A,A⟩‖·‖⟨B,B⟩‖`.
pub fn check_cs_norm(ip: &OpInnerProduct, a: &Operator, b: &Operator) -> Result<BoundReport> {
    let ab = op_norm(&cs_inner(ip, a, b)?);
    let aa = op_norm(&cs_inner(ip, a, a)?);
    let bb = op_norm(&cs_inner(ip, b, b)?);
    let digest = cs_digest("cs_norm", ip, a, b);
    Ok(BoundReport::evaluate("cs_norm", ab * ab, aa * bb, Orientation::Upper, tol::PASS, digest))
}

/// For commuting `A, B`:
/// `‖[Λ(A), Λ(B)]‖ ≤ ‖⟨A,A⟩‖^{1/2}‖⟨B*,B*⟩‖^{1/2} + ‖⟨A*,A*⟩‖^{1/2}‖⟨B,B⟩‖^{1/2}`.
pub fn check_commutator_lemma(ip: &OpInnerProduct, a: &Operator, b: &Operator) -> Result<BoundReport> {
    let comm_in = op_norm(&a.commutator(b)?);
    let la = ip.apply(a)?;
    let lb = ip.apply(b)?;
    let lhs = op_norm(&la.commutator(&lb)?);
    let (ad, bd) = (a.adjoint(), b.adjoint());
    let n = |x: &Operator, y: &Operator| -> Result<f64> { Ok(op_norm(&cs_inner(ip, x, y)?).sqrt()) };
    let rhs = n(a, a)? * n(&bd, &bd)? + n(&ad, &ad)? * n(b, b)?;
    let digest = cs_digest("commutator_lemma", ip, a, b);
    Ok(
        BoundReport::evaluate("commutator_lemma", lhs, rhs, Orientation::Upper, tol::PASS, digest)
            .applicable_if(comm_in <= 1e-10)
            .with("input_commutator", comm_in),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmetry::random_invariant_effect;

    fn rep(d: usize) -> U1Representation {
        U1Representation::contiguous(d).unwrap()
    }

    fn uniform_superposition(d: usize) -> State {
        State::pure(&vec![ONE; d]).unwrap()
    }

    fn frame(ds: usize, omega: State) -> (Relativiser, RestrictionChannel) {
        let dr = omega.dim();
        (
            Relativiser::new(rep(ds), CovariantPhasePovm::canonical(rep(dr))),
            RestrictionChannel::new(omega, ds),
        )
    }

    #[test]
    fn orientation_and_tolerance() {
        let up = BoundReport::evaluate("x", 1.0, 1.0 - 5e-10, Orientation::Upper, tol::PASS, String::new());
        assert!(up.pass);
        let up = BoundReport::evaluate("x", 1.0, 1.0 - 2e-9, Orientation::Upper, tol::PASS, String::new());
        assert!(!up.pass && up.is_failure());
        let lo = BoundReport::evaluate("x", 2.0, 1.0, Orientation::Lower, tol::PASS, String::new());
        assert_eq!(lo.slack, 1.0);
        let na = lo.clone().tighten("other", -1.0).applicable_if(false);
        assert!(!na.pass && !na.is_failure());
    }

    #[test]
    fn report_json_round_trip() {
        let (rel, ch) = frame(2, uniform_superposition(4));
        let r = check_prop2(&rel, &ch, 0.5).unwrap();
        let text = serde_json::to_string(&r).unwrap();
        let back: BoundReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn plus_effect_shape() {
        let a = plus_effect(&rep(3)).unwrap();
        assert!(a.is_projection());
        assert!(plus_effect(&U1Representation::new(vec![1, 2]).unwrap()).is_err());
    }

    #[test]
    fn prop1_diagonal_is_trivial() {
        let (rel, ch) = frame(3, random::state(4, &mut random::rng(1)));
        let a = Effect::new(Operator::diag(&[0.2, 0.5, 0.9])).unwrap();
        let r = check_prop1(&rel, &ch, &a, 0.3).unwrap();
        assert!(r.lhs < 1e-14 && r.rhs == 0.0 && r.pass);
    }

    #[test]
    fn prop1_plus_with_number_eigenstate() {
        // uniform phase measure: W⁰_{1/2} = π, D = 1/2, ‖[N, A]‖ = 1/2
        let (rel, ch) = frame(2, State::basis(4, 2));
        let a = plus_effect(&rep(2)).unwrap();
        let r = check_prop1(&rel, &ch, &a, 0.5).unwrap();
        assert!((r.lhs - 0.5).abs() < 1e-12);
        assert!((r.rhs - 0.5 * (0.25 * PI + 0.5 * PI)).abs() < 1e-9);
    }

    #[test]
    fn prop2_closed_forms() {
        for d in [2usize, 4, 8] {
            let (rel, ch) = frame(2, uniform_superposition(d));
            let r = check_prop2(&rel, &ch, 0.5).unwrap();
            assert!((r.lhs - 0.5 / d as f64).abs() < 1e-12);
            assert!(r.pass);
        }
        let (rel, ch) = frame(2, State::basis(3, 0));
        let r = check_prop2(&rel, &ch, 0.25).unwrap();
        assert!((r.lhs - 0.5).abs() < 1e-12);
        // W⁰ = 2π(1 − ε) for the uniform measure
        let want = 0.125 * (1.0 - (PI * 0.75).cos());
        assert!((r.rhs - want).abs() < 1e-9);
    }

    #[test]
    fn general_bound_specialises_to_prop2() {
        let omega = random::state(5, &mut random::rng(4));
        let (rel, ch) = frame(2, omega);
        let a = plus_effect(&rep(2)).unwrap();
        let g = check_general_lower_bound(&rel, &ch, &a, 1, 0, 0.4).unwrap();
        let p = check_prop2(&rel, &ch, 0.4).unwrap();
        assert!((g.lhs - p.lhs).abs() < 1e-14);
        assert!((g.rhs - p.rhs).abs() < 1e-12);
        assert!((g.details["proven_rhs"] - g.rhs).abs() < 1e-8);
    }

    #[test]
    fn general_bound_uses_mass_form_beyond_adjacent_levels() {
        let sys = U1Representation::new(vec![0, 1, 2]).unwrap();
        for seed in 0..20 {
            let mut r = random::rng(seed);
            let omega = random::state(4, &mut r);
            let a = random::effect(3, &mut r);
            let (rel, ch) = (
                Relativiser::new(sys.clone(), CovariantPhasePovm::canonical(rep(4))),
                RestrictionChannel::new(omega, 3),
            );
            let g = check_general_lower_bound(&rel, &ch, &a, 2, 0, 0.3).unwrap();
            assert_eq!(g.rhs, g.details["proven_rhs"]);
            assert!(g.details["proven_rhs"] <= g.details["stated_rhs"] + 1e-15);
            assert!(!g.is_failure(), "{g:?}");
        }
    }

    #[test]
    fn general_bound_not_applicable_for_diagonal() {
        let (rel, ch) = frame(3, uniform_superposition(3));
        let a = Effect::new(Operator::diag(&[0.1, 0.4, 0.7])).unwrap();
        let r = check_general_lower_bound(&rel, &ch, &a, 2, 0, 0.5).unwrap();
        assert!(!r.applicable && !r.is_failure());
        assert!(check_general_lower_bound(&rel, &ch, &a, 0, 2, 0.5).is_err());
        assert!(matches!(
            check_general_lower_bound(&rel, &ch, &a, 5, 0, 0.5),
            Err(Error::MissingLevel(5))
        ));
    }

    #[test]
    fn dim_lemma_cases() {
        let povm = CovariantPhasePovm::canonical(rep(4));
        let r = check_dim_lemma(&povm, &uniform_superposition(4), 0.0).unwrap();
        assert!((r.rhs - 4.0).abs() < 1e-9 && r.pass);
        let r = check_dim_lemma(&povm, &uniform_superposition(4), 0.5).unwrap();
        assert!(r.pass);
        assert!(r.details["w0"] >= PI / 4.0 - 1e-9);
    }

    #[test]
    fn mt_lemma_paths() {
        let povm = CovariantPhasePovm::canonical(rep(4));
        let r = check_mt_width_lemma(&povm, &State::basis(4, 1), 0.2).unwrap();
        assert!(!r.applicable);
        assert_eq!(r.details["delta_n"], 0.0);
        // ε = 0.64: √(ε(1−ε)) + √ε = 0.48 + 0.8 ≥ 1
        let povm = CovariantPhasePovm::canonical(rep(16));
        let r = check_mt_width_lemma(&povm, &uniform_superposition(16), 0.64).unwrap();
        assert!(r.rhs >= 1.0 && r.pass);
    }

    #[test]
    fn sec4_theorem_cases() {
        let (rel, ch) = frame(2, State::basis(4, 0));
        let r = check_sec4_theorem(&rel, &ch).unwrap();
        assert!((r.lhs - 0.5).abs() < 1e-12);
        assert!(r.slack >= 0.46 && r.details["branch"] == 3.0);

        let (rel, ch) = frame(2, uniform_superposition(4));
        let r = check_sec4_theorem(&rel, &ch).unwrap();
        assert!((r.lhs - 0.125).abs() < 1e-12);
        assert!((r.details["delta_n"] - 1.25f64.sqrt()).abs() < 1e-12);
        assert_eq!(r.details["strict"], 0.0);
        assert!(r.pass);
    }

    #[test]
    fn main_theorem_with_relativised_effect() {
        let (rel, ch) = frame(3, uniform_superposition(6));
        let joint = rel.joint();
        let a = random::effect(3, &mut random::rng(2));
        let e = rel.relativise_effect(&a).unwrap();
        let r = check_main_theorem(&joint, &ch, &e, &a).unwrap();
        assert!(r.pass);
        assert!(r.details["gg_lhs"] <= r.details["gg_rhs"] + 1e-9);
        assert!(r.details["two_positivity_min_eig"] >= -1e-9);

        let diag = Effect::new(Operator::diag(&[0.3, 0.1, 0.6])).unwrap();
        let r = check_main_theorem(&joint, &ch, &e, &diag).unwrap();
        assert!(r.lhs < 1e-12 && r.pass);
    }

    #[test]
    fn main_theorem_rejects_non_invariant() {
        let (_, ch) = frame(2, uniform_superposition(2));
        let joint = JointRepresentation::new(rep(2), rep(2));
        let a = plus_effect(&rep(2)).unwrap();
        let e = Effect::new(tensor(a.op(), &Operator::identity(2))).unwrap();
        assert!(matches!(
            check_main_theorem(&joint, &ch, &e, &a),
            Err(Error::NotInvariant(_))
        ));
    }

    #[test]
    fn corollaries() {
        let (rel, ch) = frame(2, random::state(5, &mut random::rng(6)));
        let joint = rel.joint();
        let e = random_invariant_effect(&joint, 3);
        let a = plus_effect(&rep(2)).unwrap();
        let norm = check_corollary_norm(&joint, &ch, &e, &a).unwrap();
        assert!(norm.pass && norm.rhs >= norm.details["rhs_theorem"]);
        let sharp = check_corollary_sharp(&joint, &ch, &e, &a).unwrap();
        assert!(sharp.pass);
        let diag = Effect::new(Operator::diag(&[1.0, 0.0])).unwrap();
        assert!(check_corollary_sharp(&joint, &ch, &e, &diag).unwrap().lhs < 1e-15);
        let soft = Effect::new(Operator::diag(&[0.5, 0.0])).unwrap();
        assert!(matches!(
            check_corollary_sharp(&joint, &ch, &e, &soft),
            Err(Error::NotAProjection(_))
        ));
    }

    #[test]
    fn example_bound_with_relativised_plus() {
        for d in [2usize, 4, 8] {
            let (rel, ch) = frame(2, uniform_superposition(d));
            let joint = rel.joint();
            let e = rel.relativise_effect(&plus_effect(&rep(2)).unwrap()).unwrap();
            let r = check_example_tight_bound(&joint, &ch, &e).unwrap();
            assert!((r.details["distance"] - 0.5 / d as f64).abs() < 1e-12);
            assert!(r.pass);
            assert!(r.details["d_lower"] <= r.details["distance"] + 1e-12);
        }
    }

    #[test]
    fn example_lower_bound_quadratic() {
        assert!((example_distance_lower_bound(0.0) - 0.5).abs() < 1e-15);
        for s in [0.1, 0.5, 2.0, 7.0] {
            let d = example_distance_lower_bound(s);
            assert!((d + 2.0 * SQRT_2 * s * d.sqrt() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_channel_has_zero_form() {
        let ip = OpInnerProduct::new(DMatrix::identity(3, 3), 3, 1).unwrap();
        let mut r = random::rng(3);
        let a = random::hermitian(3, &mut r);
        let b = random::hermitian(3, &mut r);
        assert!(cs_inner(&ip, &a, &b).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn form_is_unital_and_hermitian_symmetric() {
        let ip = OpInnerProduct::random(4, 3, 2, 9).unwrap();
        let mut r = random::rng(4);
        let a = Operator::from_matrix(random::gaussian_matrix(4, 4, &mut r)).unwrap();
        let b = Operator::from_matrix(random::gaussian_matrix(4, 4, &mut r)).unwrap();
        assert!(cs_inner(&ip, &Operator::identity(4), &b).unwrap().max_abs() < 1e-12);
        let ab = cs_inner(&ip, &a, &b).unwrap();
        let ba = cs_inner(&ip, &b, &a).unwrap();
        assert!((&ab.adjoint() - &ba).max_abs() < 1e-12);
        assert!(cs_inner(&ip, &a, &a).unwrap().hermitian_part().eigenvalues()[0] > -1e-9);
    }

    #[test]
    fn form_matches_defect_operator_route() {
        // ⟨A,B⟩ = V*(A*⊗I) ξ*ξ (B⊗I) V with ξ = √(I − VV*)
        let ip = OpInnerProduct::random(3, 3, 2, 12).unwrap();
        let mut r = random::rng(8);
        let a = Operator::from_matrix(random::gaussian_matrix(3, 3, &mut r)).unwrap();
        let b = Operator::from_matrix(random::gaussian_matrix(3, 3, &mut r)).unwrap();
        let v = ip.isometry();
        let n = v.nrows();
        let xi = Operator::from_matrix(DMatrix::identity(n, n) - v * v.adjoint()).unwrap().sqrt_psd();
        let lift = |x: &Operator| x.matrix().kronecker(&DMatrix::<C64>::identity(2, 2));
        let m = v.adjoint() * lift(&a.adjoint()) * xi.matrix().adjoint() * xi.matrix() * lift(&b) * v;
        let want = Operator::from_matrix(m).unwrap();
        assert!((&cs_inner(&ip, &a, &b).unwrap() - &want).max_abs() < 1e-12);
    }

    #[test]
    fn restriction_dilation_reproduces_channel() {
        let omega = random::mixed_state(3, 2, &mut random::rng(5));
        let ch = RestrictionChannel::new(omega, 2);
        let ip = OpInnerProduct::from_restriction(&ch).unwrap();
        let x = random::hermitian(6, &mut random::rng(6));
        assert!((&ip.apply(&x).unwrap() - &ch.restrict(&x).unwrap()).max_abs() < 1e-12);
    }

    #[test]
    fn commutator_lemma_equal_inputs() {
        let ip = OpInnerProduct::random(4, 2, 2, 1).unwrap();
        let a = random::hermitian(4, &mut random::rng(2));
        let r = check_commutator_lemma(&ip, &a, &a).unwrap();
        assert!(r.applicable && r.lhs < 1e-12 && r.pass);
        let b = random::hermitian(4, &mut random::rng(3));
        assert!(!check_commutator_lemma(&ip, &a, &b).unwrap().applicable);
    }

    #[test]
    fn checkers_are_pure() {
        let (rel, ch) = frame(2, random::state(4, &mut random::rng(11)));
        let a = random::effect(2, &mut random::rng(12));
        let r1 = check_prop1(&rel, &ch, &a, 0.2).unwrap();
        let r2 = check_prop1(&rel, &ch, &a, 0.2).unwrap();
        assert_eq!(r1, r2);
        let r3 = check_prop1(&rel, &ch, &a, 0.3).unwrap();
        assert_ne!(r1.digest, r3.digest);
    }
}
