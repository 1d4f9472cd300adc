//! Dense complex operator algebra.
//!
//! [`Operator`] is a square complex matrix. [`Effect`] and [`State`] are
//! validated wrappers: their spectra are checked and clamped exactly once, at
//! construction, and never touched again.
//!
//! Tensor products use the system-first layout throughout the crate: basis
//! index `(i, j)` of `H_S ⊗ H_R` is stored at `i * dim_R + j`.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tol;

pub use num_complex::Complex64 as C64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// A square complex matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OperatorJson", into = "OperatorJson")]
pub struct Operator {
    m: DMatrix<C64>,
}

impl Operator {
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        Ok(Self { m })
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<C64>) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        Self { m }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            m: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: DMatrix::identity(dim, dim),
        }
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self {
            m: DMatrix::from_fn(dim, dim, f),
        }
    }

    /// Real diagonal operator.
    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, |i, j| {
            if i == j {
                C64::new(values[i], 0.0)
            } else {
                ZERO
            }
        })
    }

    /// Builds an operator from real rows; every row must have `rows.len()` entries.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        for r in rows {
            if r.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    cols: r.len(),
                });
            }
        }
        Ok(Self::from_fn(n, |i, j| C64::new(rows[i][j], 0.0)))
    }

    /// The rank-one operator `|u⟩⟨v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::DimensionMismatch {
                expected: u.len(),
                got: v.len(),
            });
        }
        Ok(Self::from_fn(u.len(), |i, j| u[i] * v[j].conj()))
    }

    /// The matrix unit `|i⟩⟨j|`.
    pub fn unit(dim: usize, i: usize, j: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        m[(i, j)] = ONE;
        Self { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.m[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: C64) {
        self.m[(i, j)] = value;
    }

    pub fn adjoint(&self) -> Self {
        Self {
            m: self.m.adjoint(),
        }
    }

    /// `(A + A*) / 2`. Exact (bit-for-bit) on already Hermitian input.
    pub fn hermitian_part(&self) -> Self {
        let n = self.dim();
        Self::from_fn(n, |i, j| (self.m[(i, j)] + self.m[(j, i)].conj()) * 0.5)
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max_ij |a_ij − conj(a_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.m[(i, j)] - self.m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_defect() <= tol::STRUCTURAL * (1.0 + self.max_abs())
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { m: &self.m * C64::new(s, 0.0) }
    }

    pub fn scale_c(&self, s: C64) -> Self {
        Self { m: &self.m * s }
    }

    /// `[A, B] = AB − BA`.
    pub fn commutator(&self, other: &Operator) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self {
            m: &self.m * &other.m - &other.m * &self.m,
        })
    }

    pub fn check_dim(&self, other: &Operator) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(())
    }

    /// Spectral decomposition of the Hermitian part, eigenvalues ascending.
    pub fn eigh(&self) -> (Vec<f64>, DMatrix<C64>) {
        let n = self.dim();
        if n == 0 {
            return (Vec::new(), DMatrix::zeros(0, 0));
        }
        let eig = SymmetricEigen::new(self.hermitian_part().m);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        (values, vectors)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigh().0
    }

    /// `V diag(values) V*`.
    pub fn from_spectral(values: &[f64], vectors: &DMatrix<C64>) -> Self {
        let n = values.len();
        let mut scaled = vectors.clone();
        for (j, &v) in values.iter().enumerate() {
            for i in 0..n {
                scaled[(i, j)] *= v;
            }
        }
        Self {
            m: &scaled * vectors.adjoint(),
        }
        .hermitian_part()
    }

    /// Applies `f` to the spectrum of the Hermitian part.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Self {
        let (vals, vecs) = self.eigh();
        let mapped: Vec<f64> = vals.into_iter().map(f).collect();
        Self::from_spectral(&mapped, &vecs)
    }

    /// Principal square root of the (clamped) positive part.
    pub fn sqrt_psd(&self) -> Self {
        self.map_spectrum(|x| x.max(0.0).sqrt())
    }

    /// The submatrix on the given basis indices.
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), |a, b| self.m[(idx[a], idx[b])])
    }

    /// `⟨φ|A|φ⟩`.
    pub fn expectation_vec(&self, phi: &[C64]) -> C64 {
        let n = self.dim();
        let mut acc = ZERO;
        for i in 0..n {
            let mut row = ZERO;
            for j in 0..n {
                row += self.m[(i, j)] * phi[j];
            }
            acc += phi[i].conj() * row;
        }
        acc
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator { m: &self.m + &rhs.m }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator { m: &self.m - &rhs.m }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator { m: &self.m * &rhs.m }
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator { m: -&self.m }
    }
}

/// Wire format `{"dim": n, "re": [[..]], "im": [[..]]}`. `im` may be omitted.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

impl TryFrom<OperatorJson> for Operator {
    type Error = Error;

    fn try_from(j: OperatorJson) -> Result<Self> {
        let n = j.dim;
        let check = |rows: &Vec<Vec<f64>>| -> Result<()> {
            if rows.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: rows.len(),
                });
            }
            for r in rows {
                if r.len() != n {
                    return Err(Error::NotSquare {
                        rows: n,
                        cols: r.len(),
                    });
                }
            }
            Ok(())
        };
        check(&j.re)?;
        if let Some(im) = &j.im {
            check(im)?;
        }
        Ok(Operator::from_fn(n, |a, b| {
            C64::new(j.re[a][b], j.im.as_ref().map_or(0.0, |im| im[a][b]))
        }))
    }
}

impl From<Operator> for OperatorJson {
    fn from(op: Operator) -> Self {
        let n = op.dim();
        let re = (0..n).map(|a| (0..n).map(|b| op.m[(a, b)].re).collect()).collect();
        let im = (0..n).map(|a| (0..n).map(|b| op.m[(a, b)].im).collect()).collect();
        OperatorJson {
            dim: n,
            re,
            im: Some(im),
        }
    }
}

/// Kronecker product `a ⊗ b`, system factor first.
pub fn tensor(a: &Operator, b: &Operator) -> Operator {
    Operator {
        m: a.m.kronecker(&b.m),
    }
}

/// Operator norm: largest singular value, or largest `|λ|` for Hermitian input.
pub fn op_norm(a: &Operator) -> f64 {
    if a.dim() == 0 {
        return 0.0;
    }
    if a.is_hermitian() {
        let vals = a.eigenvalues();
        vals.first()
            .map(|x| x.abs())
            .unwrap_or(0.0)
            .max(vals.last().map(|x| x.abs()).unwrap_or(0.0))
    } else {
        a.m.clone().singular_values().max()
    }
}

/// `V(A) = ‖A − A²‖`, zero exactly for projections.
pub fn effect_unsharpness(a: &Effect) -> f64 {
    let op = a.op();
    op_norm(&(op - &(op * op)))
}

/// `D(A, B) = ‖A − B‖`.
pub fn distance(a: &Effect, b: &Effect) -> Result<f64> {
    operator_distance(a.op(), b.op())
}

/// `‖A − B‖` for arbitrary Hermitian operators.
pub fn operator_distance(a: &Operator, b: &Operator) -> Result<f64> {
    a.check_dim(b)?;
    Ok(op_norm(&(a - b).hermitian_part()))
}

/// Uhlmann fidelity `tr[(√ρ₀ ρ₁ √ρ₀)^{1/2}]`, evaluated as the trace norm
/// of `√ρ₀ √ρ₁`.
pub fn fidelity(r0: &State, r1: &State) -> Result<f64> {
    r0.op().check_dim(r1.op())?;
    let prod = &support_sqrt(r0.op()) * &support_sqrt(r1.op());
    let f: f64 = prod.m.singular_values().iter().sum();
    Ok(f.clamp(0.0, 1.0))
}

// Eigenvalues at rounding level are set to zero before the square root,
// which would otherwise inflate them to ~1e-8.
fn support_sqrt(rho: &Operator) -> Operator {
    let floor = 64.0 * f64::EPSILON * rho.dim() as f64;
    rho.map_spectrum(|x| if x > floor { x.sqrt() } else { 0.0 })
}

/// A Hermitian operator with `0 ≤ A ≤ I`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Operator", into = "Operator")]
pub struct Effect {
    op: Operator,
    spectrum: Vec<f64>,
}

impl Effect {
    /// Validates and, if needed, clamps the spectrum into `[0, 1]`.
    ///
    /// The operator is only rebuilt from its eigendecomposition when some
    /// eigenvalue actually lies outside `[0, 1]`; otherwise the Hermitised
    /// input is stored as is.
    pub fn new(op: Operator) -> Result<Self> {
        let defect = op.hermitian_defect();
        if defect > tol::STRUCTURAL * (1.0 + op.max_abs()) {
            return Err(Error::NotHermitian(defect));
        }
        let op = op.hermitian_part();
        let (vals, vecs) = op.eigh();
        let (min, max) = (
            vals.first().copied().unwrap_or(0.0),
            vals.last().copied().unwrap_or(0.0),
        );
        if min < -tol::SPECTRUM || max > 1.0 + tol::SPECTRUM {
            return Err(Error::NotAnEffect { min, max });
        }
        if min < 0.0 || max > 1.0 {
            let clamped: Vec<f64> = vals.iter().map(|x| x.clamp(0.0, 1.0)).collect();
            let op = Operator::from_spectral(&clamped, &vecs);
            return Ok(Self {
                op,
                spectrum: clamped,
            });
        }
        Ok(Self { op, spectrum: vals })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            op: Operator::identity(dim),
            spectrum: vec![1.0; dim],
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            op: Operator::zeros(dim),
            spectrum: vec![0.0; dim],
        }
    }

    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn into_op(self) -> Operator {
        self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// Eigenvalues, ascending, clamped into `[0, 1]`.
    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn is_projection(&self) -> bool {
        effect_unsharpness(self) <= tol::SHARP
    }
}

/// A density operator: Hermitian, positive, unit trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Operator", into = "Operator")]
pub struct State {
    op: Operator,
    purity: f64,
}

impl State {
    /// Validates; negative eigenvalues within tolerance are clamped to zero
    /// and the result renormalised.
    pub fn new(op: Operator) -> Result<Self> {
        let defect = op.hermitian_defect();
        if defect > tol::STRUCTURAL * (1.0 + op.max_abs()) {
            return Err(Error::NotHermitian(defect));
        }
        let op = op.hermitian_part();
        let tr = op.trace().re;
        if (tr - 1.0).abs() > tol::TRACE {
            return Err(Error::NotAState(format!("trace {tr}")));
        }
        let (vals, vecs) = op.eigh();
        let min = vals.first().copied().unwrap_or(0.0);
        if min < -tol::SPECTRUM {
            return Err(Error::NotAState(format!("eigenvalue {min:.3e}")));
        }
        let op = if min < 0.0 {
            let clamped: Vec<f64> = vals.iter().map(|x| x.max(0.0)).collect();
            let total: f64 = clamped.iter().sum();
            let renorm: Vec<f64> = clamped.iter().map(|x| x / total).collect();
            Operator::from_spectral(&renorm, &vecs)
        } else {
            op
        };
        let purity = (&op * &op).trace().re;
        Ok(Self { op, purity })
    }

    /// `|φ⟩⟨φ|` for a (not necessarily normalised) nonzero vector.
    pub fn pure(amplitudes: &[C64]) -> Result<Self> {
        let norm2: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if !(norm2 > 0.0) || !norm2.is_finite() {
            return Err(Error::NotAState("zero vector".into()));
        }
        let s = 1.0 / norm2.sqrt();
        let phi: Vec<C64> = amplitudes.iter().map(|z| z * s).collect();
        Self::new(Operator::outer(&phi, &phi)?)
    }

    /// Basis state `|k⟩⟨k|`.
    pub fn basis(dim: usize, k: usize) -> Self {
        Self {
            op: Operator::unit(dim, k, k),
            purity: 1.0,
        }
    }

    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn purity(&self) -> f64 {
        self.purity
    }

    /// `tr[ρ X]`.
    pub fn expect(&self, x: &Operator) -> C64 {
        let n = self.dim();
        let mut acc = ZERO;
        for i in 0..n {
            for j in 0..n {
                acc += self.op.m[(i, j)] * x.m[(j, i)];
            }
        }
        acc
    }

    /// `(ω(X²) − ω(X)²)^{1/2}` for Hermitian `X`.
    pub fn std_dev(&self, x: &Operator) -> f64 {
        let mean = self.expect(x).re;
        let second = self.expect(&(x * x)).re;
        (second - mean * mean).max(0.0).sqrt()
    }
}

impl TryFrom<Operator> for Effect {
    type Error = Error;
    fn try_from(op: Operator) -> Result<Self> {
        Effect::new(op)
    }
}

impl From<Effect> for Operator {
    fn from(e: Effect) -> Self {
        e.op
    }
}

impl TryFrom<Operator> for State {
    type Error = Error;
    fn try_from(op: Operator) -> Result<Self> {
        State::new(op)
    }
}

impl From<State> for Operator {
    fn from(s: State) -> Self {
        s.op
    }
}
