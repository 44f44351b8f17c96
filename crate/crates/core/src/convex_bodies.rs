//! Strictly convex control sets and their support functions.
//!
//! The maximized Hamiltonian of the time-optimal problem is the support
//! function `H(h) = max_{v in U} <v, h>` of the control set `U`, and the
//! extremal control is its gradient. Every family here has a closed-form
//! gradient that is smooth away from `h = 0`.

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Vectors shorter than this are treated as the origin, where `H` is not
/// differentiable.
pub const ZERO_GUARD: f64 = 1e-300;

const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum ControlBody {
    /// `U = { v : v^T A^{-1} v <= 1 }`, support `sqrt(h^T A h)`.
    Ellipsoid { shape: DMatrix<f64> },
    /// `U = { v : ||v||_p <= r }`, support `r ||h||_q` with `1/p + 1/q = 1`.
    LpBall { dim: usize, p: f64, radius: f64 },
    /// Ellipsoid shifted by `center`, support `<c, h> + sqrt(h^T A h)`.
    TranslatedEllipsoid { shape: DMatrix<f64>, center: DVector<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EmptyDimension,
    NotSquare { rows: usize, cols: usize },
    NonFinite,
    NotSymmetric { asymmetry: f64 },
    NotPositiveDefinite { min_eigenvalue: f64 },
    NotStrictlyConvex { p: f64 },
    NonPositiveRadius { radius: f64 },
    CenterDimension { expected: usize, got: usize },
    OriginNotInterior { gauge: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyDimension => write!(f, "dimension must be at least 1"),
            Violation::NotSquare { rows, cols } => {
                write!(f, "shape matrix must be square, got {rows}x{cols}")
            }
            Violation::NonFinite => write!(f, "body parameters must be finite"),
            Violation::NotSymmetric { asymmetry } => {
                write!(f, "shape matrix is not symmetric (max |A_ij - A_ji| = {asymmetry:e})")
            }
            Violation::NotPositiveDefinite { min_eigenvalue } => write!(
                f,
                "shape matrix is not positive definite (min eigenvalue {min_eigenvalue:e})"
            ),
            Violation::NotStrictlyConvex { p } => {
                write!(f, "strict convexity: exponent p must exceed 1 and be finite (got {p})")
            }
            Violation::NonPositiveRadius { radius } => {
                write!(f, "radius must be positive (got {radius})")
            }
            Violation::CenterDimension { expected, got } => {
                write!(f, "center has length {got}, expected {expected}")
            }
            Violation::OriginNotInterior { gauge } => write!(
                f,
                "origin not interior: c^T A^-1 c = {gauge} must be < 1"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn messages(&self) -> Vec<String> {
        self.violations.iter().map(ToString::to_string).collect()
    }
}

fn check_shape(shape: &DMatrix<f64>, out: &mut Vec<Violation>) -> bool {
    let (rows, cols) = shape.shape();
    if rows == 0 {
        out.push(Violation::EmptyDimension);
        return false;
    }
    if rows != cols {
        out.push(Violation::NotSquare { rows, cols });
        return false;
    }
    if shape.iter().any(|x| !x.is_finite()) {
        out.push(Violation::NonFinite);
        return false;
    }
    let scale = shape.amax().max(1.0);
    let mut asym: f64 = 0.0;
    for i in 0..rows {
        for j in (i + 1)..rows {
            asym = asym.max((shape[(i, j)] - shape[(j, i)]).abs());
        }
    }
    if asym > SYMMETRY_TOL * scale {
        out.push(Violation::NotSymmetric { asymmetry: asym });
        return false;
    }
    let sym = (shape + shape.transpose()) * 0.5;
    let min_eig = SymmetricEigen::new(sym).eigenvalues.min();
    if !(min_eig > 0.0) {
        out.push(Violation::NotPositiveDefinite { min_eigenvalue: min_eig });
        return false;
    }
    true
}

fn quadratic_form(shape: &DMatrix<f64>, h: &[f64]) -> f64 {
    let n = h.len();
    let mut acc = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += shape[(i, j)] * h[j];
        }
        acc += h[i] * row;
    }
    acc.max(0.0)
}

/// `(max_i |h_i|, ||h / max_i |h_i| ||_q)`; the scaling keeps powers in range.
fn scaled_norm(h: &[f64], q: f64) -> (f64, f64) {
    let m = h.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    if m == 0.0 {
        return (0.0, 0.0);
    }
    let s: f64 = h.iter().map(|x| (x.abs() / m).powf(q)).sum();
    (m, s.powf(1.0 / q))
}

impl ControlBody {
    pub fn ellipsoid(shape: DMatrix<f64>) -> Self {
        ControlBody::Ellipsoid { shape }
    }

    /// Euclidean unit ball in `R^k` (the sub-Riemannian case).
    pub fn unit_ball(k: usize) -> Self {
        ControlBody::Ellipsoid { shape: DMatrix::identity(k, k) }
    }

    pub fn lp_ball(dim: usize, p: f64, radius: f64) -> Self {
        ControlBody::LpBall { dim, p, radius }
    }

    pub fn translated_ellipsoid(shape: DMatrix<f64>, center: DVector<f64>) -> Self {
        ControlBody::TranslatedEllipsoid { shape, center }
    }

    pub fn dim(&self) -> usize {
        match self {
            ControlBody::Ellipsoid { shape } | ControlBody::TranslatedEllipsoid { shape, .. } => {
                shape.nrows()
            }
            ControlBody::LpBall { dim, .. } => *dim,
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            ControlBody::Ellipsoid { .. } => "ellipsoid",
            ControlBody::LpBall { .. } => "lp_ball",
            ControlBody::TranslatedEllipsoid { .. } => "translated_ellipsoid",
        }
    }

    /// True when the gradient of `H` loses smoothness on the coordinate
    /// hyperplanes `h_i = 0` (lp balls with `p != 2`).
    pub fn has_coordinate_kinks(&self) -> bool {
        matches!(self, ControlBody::LpBall { p, .. } if *p != 2.0)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        match self {
            ControlBody::Ellipsoid { shape } => {
                check_shape(shape, &mut violations);
            }
            ControlBody::LpBall { dim, p, radius } => {
                if *dim == 0 {
                    violations.push(Violation::EmptyDimension);
                }
                if !(*p > 1.0 && p.is_finite()) {
                    violations.push(Violation::NotStrictlyConvex { p: *p });
                }
                if !(*radius > 0.0 && radius.is_finite()) {
                    violations.push(Violation::NonPositiveRadius { radius: *radius });
                }
            }
            ControlBody::TranslatedEllipsoid { shape, center } => {
                let shape_ok = check_shape(shape, &mut violations);
                if center.len() != shape.nrows() {
                    violations.push(Violation::CenterDimension {
                        expected: shape.nrows(),
                        got: center.len(),
                    });
                } else if center.iter().any(|x| !x.is_finite()) {
                    violations.push(Violation::NonFinite);
                } else if shape_ok {
                    let gauge = match shape.clone().cholesky() {
                        Some(chol) => center.dot(&chol.solve(center)),
                        None => f64::INFINITY,
                    };
                    if !(gauge < 1.0) {
                        violations.push(Violation::OriginNotInterior { gauge });
                    }
                }
            }
        }
        ValidationReport { violations }
    }

    /// Returns the body if it passes validation.
    pub fn validated(self) -> Result<Self> {
        let report = self.validate();
        if report.passed() {
            Ok(self)
        } else {
            Err(Error::InvalidBody(report.messages()))
        }
    }

    fn check_input(&self, h: &[f64]) -> Result<()> {
        if h.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: h.len() });
        }
        if h.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("covector has non-finite entries".into()));
        }
        Ok(())
    }

    /// Support function `H(h)`.
    pub fn support(&self, h: &[f64]) -> Result<f64> {
        self.check_input(h)?;
        Ok(self.support_unchecked(h))
    }

    pub(crate) fn support_unchecked(&self, h: &[f64]) -> f64 {
        match self {
            ControlBody::Ellipsoid { shape } => quadratic_form(shape, h).sqrt(),
            ControlBody::LpBall { p, radius, .. } => {
                let q = p / (p - 1.0);
                let (m, n) = scaled_norm(h, q);
                radius * m * n
            }
            ControlBody::TranslatedEllipsoid { shape, center } => {
                let lin: f64 = center.iter().zip(h).map(|(c, x)| c * x).sum();
                lin + quadratic_form(shape, h).sqrt()
            }
        }
    }

    /// Gradient of the support function, i.e. the maximizing control.
    pub fn support_gradient(&self, h: &[f64]) -> Result<Vec<f64>> {
        self.check_input(h)?;
        let mut out = vec![0.0; h.len()];
        self.gradient_into(h, &mut out)?;
        Ok(out)
    }

    pub(crate) fn gradient_into(&self, h: &[f64], out: &mut [f64]) -> Result<()> {
        let norm = h.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm >= ZERO_GUARD) {
            return Err(Error::NonDifferentiable);
        }
        match self {
            ControlBody::Ellipsoid { shape } => ellipsoid_gradient(shape, h, out),
            ControlBody::LpBall { p, radius, .. } => {
                let q = p / (p - 1.0);
                let (m, n) = scaled_norm(h, q);
                for (o, x) in out.iter_mut().zip(h) {
                    let ratio = x.abs() / m / n;
                    // 0^(q-1) = 0 for q > 1
                    let mag = if ratio == 0.0 { 0.0 } else { ratio.powf(q - 1.0) };
                    *o = radius * mag * x.signum();
                }
            }
            ControlBody::TranslatedEllipsoid { shape, center } => {
                ellipsoid_gradient(shape, h, out);
                for (o, c) in out.iter_mut().zip(center.iter()) {
                    *o += c;
                }
            }
        }
        Ok(())
    }

    /// Scales `h0` onto the level set `H = 1`.
    pub fn normalize_to_level(&self, h0: &[f64]) -> Result<Vec<f64>> {
        self.check_input(h0)?;
        let norm = h0.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm >= ZERO_GUARD) {
            return Err(Error::AbnormalCovector);
        }
        let value = self.support_unchecked(h0);
        if !(value > 0.0) {
            return Err(Error::AbnormalCovector);
        }
        Ok(h0.iter().map(|x| x / value).collect())
    }

    /// Value of the defining function of `U` at `v`, normalized so that the
    /// boundary is the zero set: negative inside, positive outside.
    pub fn boundary_residual(&self, v: &[f64]) -> Result<f64> {
        self.check_input(v)?;
        match self {
            ControlBody::Ellipsoid { shape } => Ok(inverse_form(shape, v)? - 1.0),
            ControlBody::LpBall { p, radius, .. } => {
                let (m, n) = scaled_norm(v, *p);
                Ok(m * n / radius - 1.0)
            }
            ControlBody::TranslatedEllipsoid { shape, center } => {
                let shifted: Vec<f64> = v.iter().zip(center.iter()).map(|(a, c)| a - c).collect();
                Ok(inverse_form(shape, &shifted)? - 1.0)
            }
        }
    }
}

fn ellipsoid_gradient(shape: &DMatrix<f64>, h: &[f64], out: &mut [f64]) {
    let n = h.len();
    let mut qf = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += shape[(i, j)] * h[j];
        }
        out[i] = row;
        qf += h[i] * row;
    }
    let s = qf.max(0.0).sqrt();
    for o in out.iter_mut() {
        *o /= s;
    }
}

fn inverse_form(shape: &DMatrix<f64>, v: &[f64]) -> Result<f64> {
    let chol = shape
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidBody(vec!["shape matrix is not positive definite".into()]))?;
    let v = DVector::from_column_slice(v);
    Ok(v.dot(&chol.solve(&v)))
}
