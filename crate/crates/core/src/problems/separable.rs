use nalgebra::{DMatrix, DVector};

use super::{BoxDomain, Constants, MinimaxProblem, Polynomial, SplitPoint};
use crate::error::{param, Result};

/// `L(x, y) = Σᵢ f(xᵢ) + xᵀAy − Σⱼ g(yⱼ)` with polynomial `f`, `g`.
///
/// Quartic terms have unbounded curvature, so the certified constants are
/// computed exactly on a declared box (extrema of `f''`, `g''`, `f'''`, `g'''`
/// are found at endpoints and critical points). Without a box, both
/// polynomials must have degree at most two.
#[derive(Clone, Debug)]
pub struct CoupledSeparable {
    f: Polynomial,
    g: Polynomial,
    df: Polynomial,
    dg: Polynomial,
    d2f: Polynomial,
    d2g: Polynomial,
    interaction: DMatrix<f64>,
    constants: Constants,
    name: String,
}

impl CoupledSeparable {
    pub fn new(
        f: Polynomial,
        g: Polynomial,
        interaction: DMatrix<f64>,
        domain: Option<BoxDomain>,
    ) -> Result<Self> {
        let (n, m) = interaction.shape();
        if n == 0 || m == 0 {
            return Err(param("interaction matrix must be at least 1x1"));
        }
        if interaction.iter().chain(f.coeffs()).chain(g.coeffs()).any(|v| !v.is_finite()) {
            return Err(param("non-finite coefficient"));
        }
        let (d2f, d2g) = (f.derivative().derivative(), g.derivative().derivative());
        let (d3f, d3g) = (d2f.derivative(), d2g.derivative());
        let a_norm = crate::numerics::spectral_norm(&interaction)?;

        let (min_f2, max_f2, max_f3, min_g2, max_g2, max_g3) = match &domain {
            Some(b) => {
                if b.dim() != n + m {
                    return Err(param(format!("box has dimension {}, expected {}", b.dim(), n + m)));
                }
                let fold = |p: &Polynomial, range: std::ops::Range<usize>| {
                    range.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), k| {
                        let (a, c) = p.range_on(b.lo[k], b.hi[k]);
                        (lo.min(a), hi.max(c))
                    })
                };
                let (f2lo, f2hi) = fold(&d2f, 0..n);
                let (g2lo, g2hi) = fold(&d2g, n..n + m);
                let f3 = (0..n).map(|k| d3f.abs_max_on(b.lo[k], b.hi[k])).fold(0.0, f64::max);
                let g3 = (n..n + m).map(|k| d3g.abs_max_on(b.lo[k], b.hi[k])).fold(0.0, f64::max);
                (f2lo, f2hi, f3, g2lo, g2hi, g3)
            }
            None => {
                if f.degree() > 2 || g.degree() > 2 {
                    return Err(param("polynomials of degree > 2 need a box for their constants"));
                }
                let (cf, cg) = (d2f.eval(0.0), d2g.eval(0.0));
                (cf, cf, 0.0, cg, cg, 0.0)
            }
        };
        let rho = -min_f2.min(min_g2);
        let beta = min_f2.abs().max(max_f2.abs()).max(min_g2.abs()).max(max_g2.abs()) + a_norm;
        let constants = Constants {
            rho,
            beta,
            lipschitz_hessian: Some(max_f3.max(max_g3)),
            interaction_bound: Some(a_norm),
            interaction_lipschitz: Some(0.0),
            domain,
        };
        Ok(Self {
            df: f.derivative(),
            dg: g.derivative(),
            f,
            g,
            d2f,
            d2g,
            interaction,
            constants,
            name: "coupled_separable".to_string(),
        })
    }

    /// `L(x, y) = a·xy` on the real line.
    pub fn bilinear(a: f64) -> Result<Self> {
        let mut p = Self::new(Polynomial::zero(), Polynomial::zero(), DMatrix::from_element(1, 1, a), None)?;
        p.name = "bilinear".to_string();
        Ok(p)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn f(&self) -> &Polynomial {
        &self.f
    }

    pub fn g(&self) -> &Polynomial {
        &self.g
    }

    pub fn interaction(&self) -> &DMatrix<f64> {
        &self.interaction
    }
}

/// The two-dimensional quartic instance with `f = g = (t+3)(t+1)(t−1)(t−3)`
/// and interaction `a`. Its constants hold on `[−4, 4]²`: `ρ = 20`,
/// `β = 172 + |a|`.
pub fn make_figure1_problem(a: f64) -> Result<CoupledSeparable> {
    if !a.is_finite() {
        return Err(param("interaction must be finite"));
    }
    let quartic = Polynomial::new(vec![9.0, 0.0, -10.0, 0.0, 1.0]);
    Ok(CoupledSeparable::new(
        quartic.clone(),
        quartic,
        DMatrix::from_element(1, 1, a),
        Some(BoxDomain::cube(2, -4.0, 4.0)),
    )?
    .with_name("figure1"))
}

impl MinimaxProblem for CoupledSeparable {
    fn name(&self) -> &str {
        &self.name
    }

    fn dims(&self) -> (usize, usize) {
        self.interaction.shape()
    }

    fn value(&self, z: &SplitPoint) -> Result<f64> {
        let (n, m) = self.dims();
        z.check(n, m)?;
        let fx: f64 = z.x.iter().map(|&t| self.f.eval(t)).sum();
        let gy: f64 = z.y.iter().map(|&t| self.g.eval(t)).sum();
        Ok(fx + z.x.dot(&(&self.interaction * &z.y)) - gy)
    }

    fn grad_x(&self, z: &SplitPoint) -> Result<DVector<f64>> {
        let (n, m) = self.dims();
        z.check(n, m)?;
        Ok(z.x.map(|t| self.df.eval(t)) + &self.interaction * &z.y)
    }

    fn grad_y(&self, z: &SplitPoint) -> Result<DVector<f64>> {
        let (n, m) = self.dims();
        z.check(n, m)?;
        Ok(self.interaction.tr_mul(&z.x) - z.y.map(|t| self.dg.eval(t)))
    }

    fn hess_xx(&self, z: &SplitPoint) -> Result<DMatrix<f64>> {
        let (n, m) = self.dims();
        z.check(n, m)?;
        Ok(DMatrix::from_diagonal(&z.x.map(|t| self.d2f.eval(t))))
    }

    fn hess_yy(&self, z: &SplitPoint) -> Result<DMatrix<f64>> {
        let (n, m) = self.dims();
        z.check(n, m)?;
        Ok(DMatrix::from_diagonal(&z.y.map(|t| -self.d2g.eval(t))))
    }

    fn hess_xy(&self, _z: &SplitPoint) -> Result<DMatrix<f64>> {
        Ok(self.interaction.clone())
    }

    fn constants(&self) -> &Constants {
        &self.constants
    }

    fn constant_hessian(&self) -> bool {
        self.f.degree() <= 2 && self.g.degree() <= 2
    }
}
