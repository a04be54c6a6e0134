//! Dense linear-algebra kernels. Dimensions are tiny, so everything is a
//! direct method and every tolerance is relative to the matrix scale.

use nalgebra::{DMatrix, DVector};

use crate::error::{param, Error, Result};

/// Condition-number estimate above which a system is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

const SYMMETRY_TOL: f64 = 1e-12;

/// A finite real matrix that is symmetric to within `1e-12` of its scale.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Validates symmetry and finiteness, then exactly symmetrizes.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension { expected: m.nrows(), got: m.ncols() });
        }
        check_finite(&m)?;
        let scale = m.amax().max(f64::MIN_POSITIVE);
        let asym = (&m - m.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(param(format!("matrix is not symmetric (asymmetry {asym:.3e})")));
        }
        Ok(Self((&m + m.transpose()) * 0.5))
    }

    /// Symmetrizes `m` without checking; for matrices built by formulas that
    /// are symmetric in exact arithmetic.
    pub fn symmetrized(m: &DMatrix<f64>) -> Result<Self> {
        check_finite(m)?;
        Ok(Self((m + m.transpose()) * 0.5))
    }

    pub fn order(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// All eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.order() == 0 {
            return Vec::new();
        }
        let mut ev: Vec<f64> = self.0.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

fn check_finite(m: &DMatrix<f64>) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite("matrix has non-finite entries".into()))
    }
}

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max)
}

/// Solves `Mv = b` by partial-pivot LU.
///
/// Rejects systems whose 1-norm condition estimate exceeds [`MAX_CONDITION`].
pub fn solve_linear(m: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if !m.is_square() {
        return Err(Error::Dimension { expected: m.nrows(), got: m.ncols() });
    }
    if b.len() != m.nrows() {
        return Err(Error::Dimension { expected: m.nrows(), got: b.len() });
    }
    check_finite(m)?;
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("right-hand side has non-finite entries".into()));
    }
    let lu = m.clone().lu();
    let inv = lu.try_inverse().ok_or(Error::Singular { condition: f64::INFINITY })?;
    let condition = norm1(m) * norm1(&inv);
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::Singular { condition });
    }
    lu.solve(b).ok_or(Error::Singular { condition: f64::INFINITY })
}

/// Inverse of a well-conditioned square matrix.
pub fn inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let cols: Vec<DVector<f64>> =
        (0..n).map(|j| solve_linear(m, &DMatrix::identity(n, n).column(j).into_owned())).collect::<Result<_>>()?;
    Ok(DMatrix::from_columns(&cols))
}

pub fn sym_eig_min(m: &SymMatrix) -> Result<f64> {
    m.eigenvalues().first().copied().ok_or_else(|| param("empty matrix"))
}

pub fn sym_eig_max(m: &SymMatrix) -> Result<f64> {
    m.eigenvalues().last().copied().ok_or_else(|| param("empty matrix"))
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> Result<f64> {
    check_finite(m)?;
    if m.is_empty() {
        return Ok(0.0);
    }
    Ok(m.clone().singular_values().max())
}

/// Central-difference gradient of `f` at `v` with steps
/// `max(1, |vᵢ|)·ε^exponent`.
pub fn central_gradient(
    f: &dyn Fn(&DVector<f64>) -> Result<f64>,
    v: &DVector<f64>,
    exponent: f64,
) -> Result<DVector<f64>> {
    let mut g = DVector::zeros(v.len());
    for i in 0..v.len() {
        let h = v[i].abs().max(1.0) * f64::EPSILON.powf(exponent);
        let mut p = v.clone();
        p[i] += h;
        let fp = f(&p)?;
        p[i] = v[i] - h;
        let fm = f(&p)?;
        g[i] = (fp - fm) / (2.0 * h);
    }
    Ok(g)
}

/// Central-difference Jacobian of `g` at `v`; column `i` is the derivative
/// along coordinate `i`.
pub fn central_jacobian(
    g: &dyn Fn(&DVector<f64>) -> Result<DVector<f64>>,
    v: &DVector<f64>,
    exponent: f64,
) -> Result<DMatrix<f64>> {
    let mut cols = Vec::with_capacity(v.len());
    for i in 0..v.len() {
        let h = v[i].abs().max(1.0) * f64::EPSILON.powf(exponent);
        let mut p = v.clone();
        p[i] += h;
        let gp = g(&p)?;
        p[i] = v[i] - h;
        let gm = g(&p)?;
        cols.push((gp - gm) / (2.0 * h));
    }
    Ok(DMatrix::from_columns(&cols))
}

/// Serde adapter writing a `DVector` as a plain array of numbers.
pub(crate) mod serde_vector {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
        Ok(DVector::from_vec(Vec::<f64>::deserialize(d)?))
    }
}
