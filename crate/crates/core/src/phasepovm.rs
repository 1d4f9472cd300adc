//! Covariant phase POVMs and the localisation of the phase measures they
//! induce.
//!
//! A covariant phase POVM on the reference is fixed by a positive generator
//! `T`: `F(X) = (1/2π) ∫_X U_R(θ) T U_R(θ)* dθ`. Because the number spectrum
//! is integer, every quantity below is a trigonometric polynomial in `θ` of
//! degree at most the spectral spread, and arc masses are evaluated through
//! its exact antiderivative.
//!
//! Fourier convention: `ĉ_k = ∫ e^{ikθ} μ(dθ)`, so that the density is
//! `f(θ) = (1/2π) Σ_k ĉ_k e^{−ikθ}` and `ĉ_{−k} = conj(ĉ_k)`.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qla::{Effect, Operator, State, C64, ONE, ZERO};
use crate::symmetry::{reduce_angle, U1Representation};
use crate::tol;

/// Centers scanned by [`PhaseMeasure::overall_width`].
pub const CENTER_GRID: usize = 4096;
/// Bisection tolerance on the width during the coarse center scan.
pub const SCAN_TOL: f64 = 1e-9;
/// Golden-section tolerance on the center during refinement.
pub const CENTER_TOL: f64 = 1e-9;
/// Bisection tolerance on reported widths.
pub const WIDTH_TOL: f64 = 1e-12;

/// A closed arc `{θ mod 2π : lo ≤ θ ≤ hi}` with `0 ≤ hi − lo ≤ 2π`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    lo: f64,
    hi: f64,
}

impl Arc {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || hi < lo || hi - lo > TAU * (1.0 + 1e-15) {
            return Err(Error::MalformedArc { lo, hi });
        }
        let start = reduce_angle(lo);
        Ok(Self {
            lo: start,
            hi: start + (hi - lo).min(TAU),
        })
    }

    /// `I(center, width)`.
    pub fn centered(center: f64, width: f64) -> Result<Self> {
        if !(0.0..=TAU).contains(&width) {
            return Err(Error::MalformedArc {
                lo: center - width / 2.0,
                hi: center + width / 2.0,
            });
        }
        Self::new(center - width / 2.0, center + width / 2.0)
    }

    pub fn full() -> Self {
        Self { lo: -PI, hi: PI }
    }

    /// Start angle, in `[−π, π)`.
    pub fn lo(&self) -> f64 {
        self.lo
    }

    /// End angle, `lo() + length()`; may exceed π when the arc wraps.
    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn center(&self) -> f64 {
        reduce_angle(0.5 * (self.lo + self.hi))
    }

    /// `X ∔ θ`.
    pub fn shifted(&self, theta: f64) -> Self {
        let start = reduce_angle(self.lo + theta);
        Self {
            lo: start,
            hi: start + self.length(),
        }
    }

    pub fn contains(&self, theta: f64) -> bool {
        let t = reduce_angle(theta);
        (t >= self.lo && t <= self.hi) || (t + TAU >= self.lo && t + TAU <= self.hi)
    }

    /// Pieces inside `[−π, π]`.
    fn pieces(&self) -> Vec<(f64, f64)> {
        if self.hi <= PI {
            vec![(self.lo, self.hi)]
        } else {
            vec![(self.lo, PI), (-PI, self.hi - TAU)]
        }
    }
}

/// A finite union of closed arcs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ArcSet {
    arcs: Vec<Arc>,
}

impl ArcSet {
    pub fn new(arcs: Vec<Arc>) -> Self {
        Self { arcs }
    }

    pub fn single(arc: Arc) -> Self {
        Self { arcs: vec![arc] }
    }

    pub fn full() -> Self {
        Self::single(Arc::full())
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn shifted(&self, theta: f64) -> Self {
        Self {
            arcs: self.arcs.iter().map(|a| a.shifted(theta)).collect(),
        }
    }

    /// Disjoint sorted intervals of `[−π, π]` covering the union.
    pub fn intervals(&self) -> Vec<(f64, f64)> {
        let mut pieces: Vec<(f64, f64)> = self.arcs.iter().flat_map(|a| a.pieces()).collect();
        pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pieces.len());
        for (a, b) in pieces {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        merged
    }

    /// Lebesgue measure `|X|`.
    pub fn measure(&self) -> f64 {
        self.intervals().iter().map(|(a, b)| b - a).sum()
    }

    /// `∫_X e^{iqθ} dθ`.
    pub fn fourier_integral(&self, q: i64) -> C64 {
        self.intervals()
            .iter()
            .map(|&(a, b)| exp_integral(q as f64, a, b))
            .sum()
    }
}

/// `∫_a^b e^{iqθ} dθ`.
fn exp_integral(q: f64, a: f64, b: f64) -> C64 {
    if q == 0.0 {
        return C64::new(b - a, 0.0);
    }
    // e^{iq(a+b)/2} · 2 sin(q(b−a)/2) / q
    C64::from_polar(2.0 * (0.5 * q * (b - a)).sin() / q, 0.5 * q * (a + b))
}

/// A covariant phase POVM on the reference, `F(X) = (1/2π)∫_X U T U* dθ`.
#[derive(Clone, Debug, PartialEq)]
pub struct CovariantPhasePovm {
    ref_rep: U1Representation,
    t: Operator,
}

impl CovariantPhasePovm {
    /// Validates positivity of `T` and the normalisation condition: the
    /// blocks of `T` between equal number eigenvalues are identity blocks.
    pub fn new(ref_rep: U1Representation, t: Operator) -> Result<Self> {
        if t.dim() != ref_rep.dim() {
            return Err(Error::DimensionMismatch {
                expected: ref_rep.dim(),
                got: t.dim(),
            });
        }
        let defect = t.hermitian_defect();
        if defect > tol::STRUCTURAL * (1.0 + t.max_abs()) {
            return Err(Error::NotHermitian(defect));
        }
        let t = t.hermitian_part();
        let min = t.eigenvalues().first().copied().unwrap_or(0.0);
        if min < -tol::SPECTRUM {
            return Err(Error::InvalidGenerator(format!("T has eigenvalue {min:.3e}")));
        }
        let s = ref_rep.spectrum();
        for a in 0..t.dim() {
            for b in 0..t.dim() {
                if s[a] == s[b] {
                    let want = if a == b { ONE } else { ZERO };
                    if (t.get(a, b) - want).norm() > tol::SPECTRUM {
                        return Err(Error::InvalidGenerator(format!(
                            "T[{a}][{b}] = {} inside a number eigenspace",
                            t.get(a, b)
                        )));
                    }
                }
            }
        }
        Ok(Self { ref_rep, t })
    }

    /// The canonical generator.
    ///
    /// For a nondegenerate spectrum this is the all-ones matrix. With
    /// degeneracies, basis vector `k` gets a copy index `r(k)` (its rank
    /// among the vectors sharing its eigenvalue) and `T_kl = [r(k) = r(l)]`,
    /// which is positive and has identity blocks on every eigenspace.
    pub fn canonical(ref_rep: U1Representation) -> Self {
        let mut copy = vec![0usize; ref_rep.dim()];
        for (_, idx) in ref_rep.eigenspaces() {
            for (r, &k) in idx.iter().enumerate() {
                copy[k] = r;
            }
        }
        let t = Operator::from_fn(ref_rep.dim(), |a, b| if copy[a] == copy[b] { ONE } else { ZERO });
        Self { ref_rep, t }
    }

    pub fn ref_rep(&self) -> &U1Representation {
        &self.ref_rep
    }

    pub fn generator(&self) -> &Operator {
        &self.t
    }

    pub fn dim(&self) -> usize {
        self.t.dim()
    }

    /// `F(X)`, entrywise `T_kl · (1/2π) ∫_X e^{i(n_k − n_l)θ} dθ`.
    pub fn povm_element(&self, x: &ArcSet) -> Result<Effect> {
        let s = self.ref_rep.spectrum();
        let spread = self.ref_rep.spread() as i64;
        let integrals: Vec<C64> = (-spread..=spread).map(|q| x.fourier_integral(q) / TAU).collect();
        let op = Operator::from_fn(self.dim(), |k, l| {
            self.t.get(k, l) * integrals[(s[k] - s[l] + spread) as usize]
        });
        Effect::new(op)
    }

    /// The phase measure `μ(X) = ω(F(X))` of a reference state.
    pub fn phase_measure(&self, omega: &State) -> Result<PhaseMeasure> {
        if omega.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: omega.dim(),
            });
        }
        let s = self.ref_rep.spectrum();
        let degree = self.ref_rep.spread();
        let mut coeffs = vec![ZERO; degree + 1];
        let rho = omega.op();
        for a in 0..self.dim() {
            for b in 0..self.dim() {
                let k = s[b] - s[a];
                if k >= 0 {
                    coeffs[k as usize] += self.t.get(a, b) * rho.get(b, a);
                }
            }
        }
        PhaseMeasure::new(coeffs)
    }
}

/// Result of a width search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Width {
    pub width: f64,
    pub center: f64,
}

/// An absolutely continuous probability measure on the circle with
/// trigonometric-polynomial density, stored as `ĉ_0, …, ĉ_D`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureJson", into = "MeasureJson")]
pub struct PhaseMeasure {
    coeffs: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureJson {
    degree: usize,
    fourier_re: Vec<f64>,
    fourier_im: Vec<f64>,
}

impl TryFrom<MeasureJson> for PhaseMeasure {
    type Error = Error;
    fn try_from(j: MeasureJson) -> Result<Self> {
        if j.fourier_re.len() != j.degree + 1 || j.fourier_im.len() != j.degree + 1 {
            return Err(Error::DimensionMismatch {
                expected: j.degree + 1,
                got: j.fourier_re.len().min(j.fourier_im.len()),
            });
        }
        PhaseMeasure::new(
            j.fourier_re
                .iter()
                .zip(&j.fourier_im)
                .map(|(&re, &im)| C64::new(re, im))
                .collect(),
        )
    }
}

impl From<PhaseMeasure> for MeasureJson {
    fn from(m: PhaseMeasure) -> Self {
        MeasureJson {
            degree: m.degree(),
            fourier_re: m.coeffs.iter().map(|z| z.re).collect(),
            fourier_im: m.coeffs.iter().map(|z| z.im).collect(),
        }
    }
}

impl PhaseMeasure {
    /// Validates `ĉ_0 = 1` and nonnegativity of the density on a
    /// [`tol::DENSITY_GRID`]-point grid; negative dips are rejected, not clamped.
    pub fn new(mut coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidParameter("no Fourier coefficients".into()));
        }
        if (coeffs[0] - ONE).norm() > tol::TRACE {
            return Err(Error::InvalidParameter(format!("zeroth coefficient {}", coeffs[0])));
        }
        coeffs[0] = ONE;
        let m = Self { coeffs };
        let n = tol::DENSITY_GRID;
        for i in 0..n {
            let theta = -PI + TAU * i as f64 / n as f64;
            let f = m.density(theta);
            if f < -tol::DENSITY_FLOOR {
                return Err(Error::NegativeDensity { theta, value: f });
            }
        }
        Ok(m)
    }

    /// Lebesgue measure normalised to one.
    pub fn uniform() -> Self {
        Self { coeffs: vec![ONE] }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `ĉ_k` for any integer `k`; zero beyond the degree.
    pub fn coefficient(&self, k: i64) -> C64 {
        let idx = k.unsigned_abs() as usize;
        match self.coeffs.get(idx) {
            Some(c) if k >= 0 => *c,
            Some(c) => c.conj(),
            None => ZERO,
        }
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coeffs
    }

    /// `f(θ) = (1/2π)(1 + 2 Re Σ_{k≥1} ĉ_k e^{−ikθ})`.
    pub fn density(&self, theta: f64) -> f64 {
        let z = C64::from_polar(1.0, -theta);
        let mut zk = ONE;
        let mut acc = 0.0;
        for c in &self.coeffs[1..] {
            zk *= z;
            acc += (c * zk).re;
        }
        (1.0 + 2.0 * acc) / TAU
    }

    /// `(θ_i, f(θ_i))` on `n` points of `[−π, π)`.
    pub fn sample_density(&self, n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let theta = -PI + TAU * i as f64 / n as f64;
                (theta, self.density(theta))
            })
            .collect()
    }

    /// `μ(I(center, width))` through the exact antiderivative.
    pub fn centered_mass(&self, center: f64, width: f64) -> f64 {
        let w = width.clamp(0.0, TAU);
        let z = C64::from_polar(1.0, -center);
        let mut zk = ONE;
        let mut acc = 0.0;
        for (k, c) in self.coeffs.iter().enumerate().skip(1) {
            zk *= z;
            let kf = k as f64;
            acc += (c * zk).re * (0.5 * kf * w).sin() / kf;
        }
        w / TAU + 2.0 * acc / PI
    }

    /// `μ(X)`.
    pub fn mass(&self, x: &ArcSet) -> f64 {
        // ∫_X f = (1/2π) Σ_k ĉ_k ∫_X e^{−ikθ}
        let mut acc = x.measure();
        for (k, c) in self.coeffs.iter().enumerate().skip(1) {
            acc += 2.0 * (c * x.fourier_integral(-(k as i64))).re;
        }
        acc / TAU
    }

    /// The measure pushed forward by `θ ↦ θ + shift`.
    pub fn shifted(&self, shift: f64) -> Self {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * C64::from_polar(1.0, k as f64 * shift))
                .collect(),
        }
    }

    fn check_eps(eps: f64) -> Result<()> {
        if !(0.0..1.0).contains(&eps) {
            return Err(Error::EpsilonOutOfRange(eps));
        }
        Ok(())
    }

    /// Smallest `w` (to `tol`) with `μ(I(center, w)) ≥ 1 − ε`.
    fn min_width_at(&self, center: f64, eps: f64, tol: f64) -> f64 {
        if eps == 0.0 {
            return TAU;
        }
        let target = 1.0 - eps;
        let (mut lo, mut hi) = (0.0, TAU);
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if self.centered_mass(center, mid) >= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// Overall width `W_ε` with an achieving center.
    ///
    /// Coarse scan over [`CENTER_GRID`] centers, golden-section refinement of
    /// the best one, then a final bisection at [`WIDTH_TOL`]. Among equal
    /// scan widths the smallest center wins; refinement only moves the
    /// center if it strictly shrinks the width. `ε = 0` returns `2π` centred
    /// at `−π`: no state is strictly localised.
    pub fn overall_width(&self, eps: f64) -> Result<Width> {
        Self::check_eps(eps)?;
        if eps == 0.0 {
            return Ok(Width {
                width: TAU,
                center: -PI,
            });
        }
        let h = TAU / CENTER_GRID as f64;
        let (best_idx, _) = (0..CENTER_GRID)
            .into_par_iter()
            .map(|i| (i, self.min_width_at(-PI + h * i as f64, eps, SCAN_TOL)))
            .reduce(
                || (usize::MAX, f64::INFINITY),
                |a, b| match a.1.total_cmp(&b.1) {
                    std::cmp::Ordering::Less => a,
                    std::cmp::Ordering::Greater => b,
                    std::cmp::Ordering::Equal => {
                        if a.0 <= b.0 {
                            a
                        } else {
                            b
                        }
                    }
                },
            );
        let grid_center = -PI + h * best_idx as f64;
        let grid_width = self.min_width_at(grid_center, eps, WIDTH_TOL);

        let objective = |c: f64| self.min_width_at(c, eps, WIDTH_TOL);
        let refined = golden_section(objective, grid_center - h, grid_center + h, CENTER_TOL);
        let refined_width = objective(refined);
        let (center, width) = if refined_width < grid_width - 4.0 * WIDTH_TOL {
            (reduce_angle(refined), refined_width)
        } else {
            (grid_center, grid_width)
        };
        Ok(Width { width, center })
    }

    /// Overall width around zero, `W⁰_ε`.
    pub fn overall_width_around_zero(&self, eps: f64) -> Result<f64> {
        Self::check_eps(eps)?;
        Ok(self.min_width_at(0.0, eps, WIDTH_TOL))
    }

    /// An ε-support: `I(center, W_ε)` from [`Self::overall_width`].
    pub fn epsilon_support(&self, eps: f64) -> Result<Arc> {
        let w = self.overall_width(eps)?;
        Arc::centered(w.center, w.width)
    }
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
