//! Minimisation of `D(Γ_ω(E), A)` over invariant effects `E`.
//!
//! The feasible set `{E : 0 ≤ E ≤ I, [E, N] = 0}` is block diagonal in the
//! eigenspaces of the total number operator, so its Frobenius projection is a
//! twirl followed by a spectral clamp of each block. The objective
//! `E ↦ ‖Γ(E) − A‖` is convex; it is driven down first by projected
//! subgradient steps and then by projected gradient steps on a log-sum-exp
//! smoothing of the spectral norm with a decreasing temperature, which gets
//! past the kinks where the top eigenvalue is degenerate.
//!
//! The reported distance is an upper bound on the infimum; lower bounds come
//! from the checkers in [`crate::bounds`].

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    check_main_theorem, example_distance_lower_bound, plus_effect, BoundReport, InputDigest,
};
use crate::error::{Error, Result};
use crate::frames::{Relativiser, RestrictionChannel};
use crate::phasepovm::CovariantPhasePovm;
use crate::qla::{effect_unsharpness, op_norm, operator_distance, Effect, Operator, State, C64};
use crate::random;
use crate::symmetry::{random_invariant_effect, twirl_operator, JointRepresentation, U1Representation};

/// Log-sum-exp temperatures for the smoothing phase.
const TEMPERATURES: [f64; 7] = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5];
/// Halvings tried before a subgradient step is given up.
const BACKTRACK: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchOptions {
    pub max_iters: usize,
    /// Step sizes are `step_a / (1 + k / step_b)`.
    pub step_a: f64,
    pub step_b: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Relative improvement over `window` iterates below which a phase stops.
    pub tol: f64,
    pub window: usize,
    pub max_sys_dim: usize,
    pub max_ref_dim: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            step_a: 0.5,
            step_b: 50.0,
            restarts: 8,
            seed: 0,
            tol: 1e-8,
            window: 25,
            max_sys_dim: 8,
            max_ref_dim: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchProblem {
    pub joint: JointRepresentation,
    pub omega_ref: State,
    pub target: Effect,
    pub options: SearchOptions,
}

impl SearchProblem {
    pub fn new(joint: JointRepresentation, omega_ref: State, target: Effect, options: SearchOptions) -> Result<Self> {
        if target.dim() != joint.sys.dim() {
            return Err(Error::DimensionMismatch {
                expected: joint.sys.dim(),
                got: target.dim(),
            });
        }
        if omega_ref.dim() != joint.reference.dim() {
            return Err(Error::DimensionMismatch {
                expected: joint.reference.dim(),
                got: omega_ref.dim(),
            });
        }
        Ok(Self {
            joint,
            omega_ref,
            target,
            options,
        })
    }

    pub fn channel(&self) -> RestrictionChannel {
        RestrictionChannel::new(self.omega_ref.clone(), self.joint.sys.dim())
    }

    fn check_caps(&self) -> Result<()> {
        let o = &self.options;
        if self.joint.sys.dim() > o.max_sys_dim {
            return Err(Error::DimensionCap {
                dim: self.joint.sys.dim(),
                cap: o.max_sys_dim,
            });
        }
        if self.joint.reference.dim() > o.max_ref_dim {
            return Err(Error::DimensionCap {
                dim: self.joint.reference.dim(),
                cap: o.max_ref_dim,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best_e: Effect,
    pub best_d: f64,
    /// `(iteration, D)` each time a restart improved its best value.
    pub trace: Vec<(usize, f64)>,
    pub certificate: BoundReport,
    /// Index of the winning start: 0 is the relativised target, then the
    /// random invariant starts.
    pub start: usize,
    pub digest: String,
}

/// Frobenius projection onto invariant effects: twirl, then clamp each
/// total-number block to `[0, 1]`.
pub fn project_invariant(joint: &JointRepresentation, x: &Operator) -> Result<Operator> {
    let total = joint.total();
    let blocks: Vec<Vec<usize>> = total.eigenspaces().into_iter().map(|(_, idx)| idx).collect();
    let t = twirl_operator(&total, &x.hermitian_part())?;
    Ok(clamp_blocks(&blocks, &t))
}

fn clamp_blocks(blocks: &[Vec<usize>], x: &Operator) -> Operator {
    let mut out = Operator::zeros(x.dim());
    for idx in blocks {
        let block = x.submatrix(idx).map_spectrum(|v| v.clamp(0.0, 1.0));
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                out.set(i, j, block.get(a, b));
            }
        }
    }
    out
}

/// An invariant operator stored as its total-number blocks.
#[derive(Clone, Debug)]
struct Blocks(Vec<Operator>);

impl Blocks {
    fn axpy(&self, s: f64, g: &Blocks) -> Blocks {
        Blocks(self.0.iter().zip(&g.0).map(|(x, y)| x - &y.scale(s)).collect())
    }

    fn sub(&self, other: &Blocks) -> Blocks {
        Blocks(self.0.iter().zip(&other.0).map(|(x, y)| x - y).collect())
    }

    fn frobenius(&self) -> f64 {
        self.0
            .iter()
            .flat_map(|b| b.matrix().iter())
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    fn real_inner(&self, other: &Blocks) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .flat_map(|(x, y)| x.matrix().iter().zip(y.matrix().iter()))
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }
}

struct Objective {
    rho: Operator,
    target: Operator,
    sys_dim: usize,
    ref_dim: usize,
    /// joint indices of each block, split into `(system, reference)` pairs
    blocks: Vec<Vec<(usize, usize)>>,
    index: Vec<Vec<usize>>,
}

impl Objective {
    fn new(problem: &SearchProblem) -> Self {
        let dr = problem.joint.reference.dim();
        let index: Vec<Vec<usize>> = problem
            .joint
            .total()
            .eigenspaces()
            .into_iter()
            .map(|(_, idx)| idx)
            .collect();
        let blocks = index.iter().map(|idx| idx.iter().map(|&x| (x / dr, x % dr)).collect()).collect();
        Self {
            rho: problem.omega_ref.op().clone(),
            target: problem.target.op().clone(),
            sys_dim: problem.joint.sys.dim(),
            ref_dim: dr,
            blocks,
            index,
        }
    }

    /// Twirl of a joint operator, as blocks.
    fn split(&self, x: &Operator) -> Blocks {
        Blocks(self.index.iter().map(|idx| x.submatrix(idx)).collect())
    }

    fn assemble(&self, b: &Blocks) -> Operator {
        let mut out = Operator::zeros(self.sys_dim * self.ref_dim);
        for (idx, blk) in self.index.iter().zip(&b.0) {
            for (a, &i) in idx.iter().enumerate() {
                for (c, &j) in idx.iter().enumerate() {
                    out.set(i, j, blk.get(a, c));
                }
            }
        }
        out
    }

    fn project(&self, b: &Blocks) -> Blocks {
        Blocks(b.0.iter().map(|x| x.map_spectrum(|v| v.clamp(0.0, 1.0))).collect())
    }

    /// `Γ(E)_{ik} = Σ E_{(i,j),(k,l)} ρ_{lj}`, summed over block entries only.
    fn restrict(&self, b: &Blocks) -> Operator {
        let mut out = Operator::zeros(self.sys_dim);
        for (pairs, blk) in self.blocks.iter().zip(&b.0) {
            for (a, &(i, j)) in pairs.iter().enumerate() {
                for (c, &(k, l)) in pairs.iter().enumerate() {
                    let v = out.get(i, k) + blk.get(a, c) * self.rho.get(l, j);
                    out.set(i, k, v);
                }
            }
        }
        out
    }

    fn residual(&self, b: &Blocks) -> Operator {
        (&self.restrict(b) - &self.target).hermitian_part()
    }

    fn value(&self, b: &Blocks) -> f64 {
        op_norm(&self.residual(b))
    }

    /// `Γ*(X) = X ⊗ ρ`, kept on the blocks.
    fn lift(&self, x: &Operator) -> Blocks {
        Blocks(
            self.blocks
                .iter()
                .map(|pairs| {
                    Operator::from_fn(pairs.len(), |a, c| {
                        let ((i, j), (k, l)) = (pairs[a], pairs[c]);
                        x.get(i, k) * self.rho.get(j, l)
                    })
                })
                .collect(),
        )
    }

    /// Objective and a subgradient from the eigenpair of largest `|λ|`.
    fn subgradient(&self, b: &Blocks) -> (f64, Blocks) {
        let (vals, vecs) = self.residual(b).eigh();
        let n = vals.len();
        let (k, lam) = if vals[n - 1].abs() >= vals[0].abs() {
            (n - 1, vals[n - 1])
        } else {
            (0, vals[0])
        };
        let v: Vec<C64> = (0..n).map(|i| vecs[(i, k)]).collect();
        let proj = Operator::outer(&v, &v).expect("same length");
        (lam.abs(), self.lift(&proj.scale(lam.signum())))
    }

    /// `μ·log tr(e^{R/μ} + e^{−R/μ})` and its gradient.
    fn smoothed(&self, b: &Blocks, mu: f64) -> (f64, Blocks) {
        let (vals, vecs) = self.residual(b).eigh();
        let top = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut z = 0.0;
        let mut weights = Vec::with_capacity(vals.len());
        for &v in &vals {
            let p = ((v - top) / mu).exp();
            let q = ((-v - top) / mu).exp();
            z += p + q;
            weights.push(p - q);
        }
        let w: Vec<f64> = weights.iter().map(|x| x / z).collect();
        (top + mu * z.ln(), self.lift(&Operator::from_spectral(&w, &vecs)))
    }

    fn smoothed_value(&self, b: &Blocks, mu: f64) -> f64 {
        let vals = self.residual(b).eigenvalues();
        let top = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let z: f64 = vals.iter().map(|&v| ((v - top) / mu).exp() + ((-v - top) / mu).exp()).sum();
        top + mu * z.ln()
    }
}

struct Run {
    best: Blocks,
    best_d: f64,
    trace: Vec<(usize, f64)>,
}

impl Run {
    fn offer(&mut self, iter: usize, e: &Blocks, d: f64) {
        if d < self.best_d {
            self.best = e.clone();
            self.best_d = d;
            self.trace.push((iter, d));
        }
    }
}

fn stalled(history: &[f64], window: usize, tol: f64) -> bool {
    if history.len() <= window {
        return false;
    }
    let old = history[history.len() - 1 - window];
    let new = history[history.len() - 1];
    old - new <= tol * old.abs().max(f64::MIN_POSITIVE)
}

fn run_from(obj: &Objective, start: &Operator, opts: &SearchOptions) -> Run {
    let mut e = obj.project(&obj.split(start));
    let mut d = obj.value(&e);
    let mut run = Run {
        best: e.clone(),
        best_d: d,
        trace: vec![(0, d)],
    };
    let mut iter = 0;

    // projected subgradient, monotone: a step is taken only if it does not
    // increase the objective
    let mut history = vec![d];
    for k in 0..opts.max_iters {
        iter += 1;
        let (_, g) = obj.subgradient(&e);
        let gn = g.frobenius();
        if gn <= f64::EPSILON {
            break;
        }
        let mut step = opts.step_a / (1.0 + k as f64 / opts.step_b);
        for _ in 0..BACKTRACK {
            let cand = obj.project(&e.axpy(step / gn, &g));
            let dc = obj.value(&cand);
            if dc <= d {
                e = cand;
                d = dc;
                break;
            }
            step *= 0.5;
        }
        run.offer(iter, &e, d);
        history.push(d);
        if d == 0.0 || stalled(&history, opts.window, opts.tol) {
            break;
        }
    }

    // projected gradient with Armijo backtracking on the smoothed objective
    e = run.best.clone();
    let per_stage = opts.max_iters / TEMPERATURES.len() + 1;
    let mut step = 1.0;
    for &mu in &TEMPERATURES {
        if run.best_d == 0.0 {
            break;
        }
        let mut f = obj.smoothed_value(&e, mu);
        let mut history = vec![f];
        for _ in 0..per_stage {
            iter += 1;
            let (_, g) = obj.smoothed(&e, mu);
            let mut moved = false;
            for _ in 0..40 {
                let cand = obj.project(&e.axpy(step, &g));
                let diff = e.sub(&cand);
                let fc = obj.smoothed_value(&cand, mu);
                if fc <= f - 1e-4 * g.real_inner(&diff) && diff.frobenius() > 0.0 {
                    e = cand;
                    f = fc;
                    moved = true;
                    step *= 1.5;
                    break;
                }
                step *= 0.5;
            }
            if !moved {
                step = 1.0;
                break;
            }
            let dc = obj.value(&e);
            run.offer(iter, &e, dc);
            history.push(f);
            if stalled(&history, opts.window, opts.tol) {
                break;
            }
        }
    }
    run
}

/// Best invariant approximant found from the relativised target and
/// `options.restarts` random invariant starts, run in parallel.
pub fn minimize(problem: &SearchProblem) -> Result<SearchResult> {
    problem.check_caps()?;
    let opts = &problem.options;
    let obj = Objective::new(problem);
    let rel = Relativiser::new(
        problem.joint.sys.clone(),
        CovariantPhasePovm::canonical(problem.joint.reference.clone()),
    );
    let mut starts = vec![rel.relativise(problem.target.op())?];
    for i in 0..opts.restarts {
        let seed = random::substream(opts.seed, i as u64);
        starts.push(random_invariant_effect(&problem.joint, seed).into_op());
    }

    let runs: Vec<(usize, Operator, Run, String)> = starts
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let run = run_from(&obj, s, opts);
            let best = obj.assemble(&run.best);
            let digest = InputDigest::new("search").op(&best).finish();
            (i, best, run, digest)
        })
        .collect();
    let (start, best, run, digest) = runs
        .into_iter()
        .min_by(|a, b| a.2.best_d.total_cmp(&b.2.best_d).then_with(|| a.3.cmp(&b.3)))
        .expect("at least one start");

    let best_e = Effect::new(best)?;
    let ch = problem.channel();
    let best_d = operator_distance(&ch.restrict(best_e.op())?, problem.target.op())?;
    let certificate = check_main_theorem(&problem.joint, &ch, &best_e, &problem.target)?;
    Ok(SearchResult {
        best_e,
        best_d,
        trace: run.trace,
        certificate,
        start,
        digest,
    })
}

/// `D(Γ(E), A)` for a candidate `E`.
pub fn objective(problem: &SearchProblem, e: &Operator) -> Result<f64> {
    let ch = problem.channel();
    operator_distance(&ch.restrict(e)?, problem.target.op())
}

/// Reference states indexed by dimension.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ReferenceFamily {
    /// `d^{-1/2} Σ_k |k⟩`
    UniformSuperposition,
    /// `|0⟩`
    NumberEigenstate,
    /// amplitudes `√(C(d−1, k) p^k (1−p)^{d−1−k})`
    Binomial(f64),
    /// amplitudes `∝ exp(−(k − (d−1)/2)² / 4σ²)`, so `|ψ_k|²` has width `σ`
    Gaussian(f64),
}

impl ReferenceFamily {
    pub fn state(&self, dim: usize) -> Result<State> {
        if dim == 0 {
            return Err(Error::InvalidParameter("reference dimension must be positive".into()));
        }
        let amps: Vec<f64> = match *self {
            Self::UniformSuperposition => vec![1.0; dim],
            Self::NumberEigenstate => (0..dim).map(|k| if k == 0 { 1.0 } else { 0.0 }).collect(),
            Self::Binomial(p) => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidParameter(format!("binomial p = {p} outside [0, 1]")));
                }
                let n = dim - 1;
                let mut binom = 1.0f64;
                (0..dim)
                    .map(|k| {
                        if k > 0 {
                            binom *= (n - k + 1) as f64 / k as f64;
                        }
                        (binom * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)).sqrt()
                    })
                    .collect()
            }
            Self::Gaussian(sigma) => {
                if !(sigma > 0.0) {
                    return Err(Error::InvalidParameter(format!("gaussian sigma = {sigma} must be positive")));
                }
                let mid = (dim as f64 - 1.0) / 2.0;
                (0..dim)
                    .map(|k| (-(k as f64 - mid).powi(2) / (4.0 * sigma * sigma)).exp())
                    .collect()
            }
        };
        let amps: Vec<C64> = amps.into_iter().map(|a| C64::new(a, 0.0)).collect();
        State::pure(&amps)
    }
}

impl fmt::Display for ReferenceFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::UniformSuperposition => write!(f, "uniform-superposition"),
            Self::NumberEigenstate => write!(f, "number-eigenstate"),
            Self::Binomial(p) => write!(f, "binomial({p})"),
            Self::Gaussian(s) => write!(f, "gaussian({s})"),
        }
    }
}

impl FromStr for ReferenceFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let param = |prefix: &str| -> Option<Result<f64>> {
            let inner = s.strip_prefix(prefix)?.strip_prefix('(')?.strip_suffix(')')?;
            Some(
                inner
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidParameter(format!("bad family parameter in {s:?}"))),
            )
        };
        match s {
            "uniform-superposition" => Ok(Self::UniformSuperposition),
            "number-eigenstate" => Ok(Self::NumberEigenstate),
            _ => {
                if let Some(p) = param("binomial") {
                    Ok(Self::Binomial(p?))
                } else if let Some(sigma) = param("gaussian") {
                    Ok(Self::Gaussian(sigma?))
                } else {
                    Err(Error::InvalidParameter(format!("unknown reference family {s:?}")))
                }
            }
        }
    }
}

/// Confidence level used for the width column of trade-off tables.
pub const TRADEOFF_EPS: f64 = 1.0 / 16.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRow {
    pub dim: usize,
    pub sigma_nr: f64,
    pub width0_eps: f64,
    pub best_d: f64,
    /// Lower bound on `D` implied by the trade-off inequality at this `σ`.
    pub thm_rhs: f64,
    /// `(ε/2)(1 − cos(W⁰_ε/2))` at `ε = 1/16`.
    pub prop2_lb: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffTable {
    pub family: String,
    pub rows: Vec<TradeoffRow>,
    pub results: Vec<SearchResult>,
}

impl TradeoffTable {
    pub const CSV_HEADER: &'static str = "dim,sigma_NR,width0_eps,best_D,thm_rhs,prop2_lb";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}\n",
                r.dim, r.sigma_nr, r.width0_eps, r.best_d, r.thm_rhs, r.prop2_lb
            ));
        }
        out
    }

    pub fn min_certificate_slack(&self) -> f64 {
        self.results.iter().map(|r| r.certificate.slack).fold(f64::INFINITY, f64::min)
    }
}

/// Smallest `D ≥ 0` consistent with
/// `c ≤ 2D‖N_S‖ + 2σ(2D + V)^{1/2}`, found by bisection.
pub fn main_theorem_distance_lower_bound(commutator: f64, ns_norm: f64, sigma: f64, unsharpness: f64) -> f64 {
    let rhs = |d: f64| 2.0 * d * ns_norm + 2.0 * sigma * (2.0 * d + unsharpness).sqrt();
    if rhs(0.0) >= commutator {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while rhs(hi) < commutator {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if rhs(mid) < commutator {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 {
            break;
        }
    }
    hi
}

/// Runs [`minimize`] for the family state at each reference dimension.
///
/// The reference cap in `options` is raised to the largest requested
/// dimension. For the plus effect the `thm_rhs` column is the sharper
/// two-level bound; otherwise it is the general one.
pub fn tradeoff_curve(
    family: ReferenceFamily,
    sys: &U1Representation,
    target: &Effect,
    dims: &[usize],
    options: &SearchOptions,
) -> Result<TradeoffTable> {
    let mut opts = options.clone();
    opts.max_ref_dim = opts.max_ref_dim.max(dims.iter().copied().max().unwrap_or(0));
    let is_plus = plus_effect(sys).map(|p| &p == target).unwrap_or(false);

    let mut rows = Vec::with_capacity(dims.len());
    let mut results = Vec::with_capacity(dims.len());
    for &dim in dims {
        let ref_rep = U1Representation::contiguous(dim)?;
        let omega = family.state(dim)?;
        let povm = CovariantPhasePovm::canonical(ref_rep.clone());
        let w0 = povm.phase_measure(&omega)?.overall_width_around_zero(TRADEOFF_EPS)?;
        let sigma = omega.std_dev(&ref_rep.number_operator());
        let joint = JointRepresentation::new(sys.clone(), ref_rep);
        let problem = SearchProblem::new(joint, omega, target.clone(), opts.clone())?;
        let result = minimize(&problem)?;

        let thm_rhs = if is_plus {
            example_distance_lower_bound(sigma)
        } else {
            let comm = op_norm(&target.op().commutator(&sys.number_operator())?);
            main_theorem_distance_lower_bound(comm, sys.norm(), sigma, effect_unsharpness(target))
        };
        rows.push(TradeoffRow {
            dim,
            sigma_nr: sigma,
            width0_eps: w0,
            best_d: result.best_d,
            thm_rhs,
            prop2_lb: 0.5 * TRADEOFF_EPS * (1.0 - (0.5 * w0).cos()),
        });
        results.push(result);
    }
    Ok(TradeoffTable {
        family: family.to_string(),
        rows,
        results,
    })
}
