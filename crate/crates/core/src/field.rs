//! Scalar fields sampled by the agents.
//!
//! Every field here is a bivariate polynomial, so values, gradients and
//! Hessians are exact. Finite differences only appear in
//! [`check_gradient_fd`], which exists as a self-test.

use serde::{Deserialize, Serialize};

use crate::error::{FlockError, Result};
use crate::types::{Mat2, Vec2};

/// Highest total degree accepted for [`FieldModel::Polynomial2D`].
pub const MAX_POLY_DEGREE: u32 = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldModel {
    /// `J = -x² - y²`
    QuadraticBowl,
    /// `J = -y³ - 2(x² + y)`
    CubicBench,
    /// `J = Σ c · xⁱ yʲ` over `(i, j, c)` terms.
    #[serde(rename = "polynomial")]
    Polynomial2D { terms: Vec<(u32, u32, f64)> },
}

impl FieldModel {
    pub fn polynomial(terms: Vec<(u32, u32, f64)>) -> Result<Self> {
        let f = FieldModel::Polynomial2D { terms };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if let FieldModel::Polynomial2D { terms } = self {
            for &(i, j, c) in terms {
                if i + j > MAX_POLY_DEGREE {
                    return Err(FlockError::InvalidArgument(format!(
                        "polynomial term x^{i} y^{j} exceeds degree cap {MAX_POLY_DEGREE}"
                    )));
                }
                if !c.is_finite() {
                    return Err(FlockError::InvalidArgument(format!(
                        "polynomial term x^{i} y^{j} has non-finite coefficient"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Coefficients equivalent to this field.
    pub fn terms(&self) -> Vec<(u32, u32, f64)> {
        match self {
            FieldModel::QuadraticBowl => vec![(2, 0, -1.0), (0, 2, -1.0)],
            FieldModel::CubicBench => vec![(0, 3, -1.0), (2, 0, -2.0), (0, 1, -2.0)],
            FieldModel::Polynomial2D { terms } => terms.clone(),
        }
    }
}

/// `xⁿ` with `0⁰ = 1`.
fn ipow(x: f64, n: u32) -> f64 {
    x.powi(n as i32)
}

/// `d/dx xⁿ = n xⁿ⁻¹`, zero for `n = 0`.
fn dpow(x: f64, n: u32) -> f64 {
    if n == 0 {
        0.0
    } else {
        n as f64 * ipow(x, n - 1)
    }
}

fn ddpow(x: f64, n: u32) -> f64 {
    if n < 2 {
        0.0
    } else {
        (n * (n - 1)) as f64 * ipow(x, n - 2)
    }
}

pub fn eval(field: &FieldModel, p: Vec2) -> f64 {
    let Vec2 { x, y } = p;
    match field {
        FieldModel::QuadraticBowl => -x * x - y * y,
        FieldModel::CubicBench => -y * y * y - 2.0 * (x * x + y),
        FieldModel::Polynomial2D { terms } => terms
            .iter()
            .map(|&(i, j, c)| c * ipow(x, i) * ipow(y, j))
            .sum(),
    }
}

pub fn gradient(field: &FieldModel, p: Vec2) -> Vec2 {
    let Vec2 { x, y } = p;
    match field {
        FieldModel::QuadraticBowl => Vec2::new(-2.0 * x, -2.0 * y),
        FieldModel::CubicBench => Vec2::new(-4.0 * x, -3.0 * y * y - 2.0),
        FieldModel::Polynomial2D { terms } => terms.iter().fold(Vec2::ZERO, |g, &(i, j, c)| {
            g + Vec2::new(c * dpow(x, i) * ipow(y, j), c * ipow(x, i) * dpow(y, j))
        }),
    }
}

pub fn hessian(field: &FieldModel, p: Vec2) -> Mat2 {
    let Vec2 { x, y } = p;
    match field {
        FieldModel::QuadraticBowl => Mat2::diag(-2.0, -2.0),
        FieldModel::CubicBench => Mat2::diag(-4.0, -6.0 * y),
        FieldModel::Polynomial2D { terms } => {
            let (mut xx, mut xy, mut yy) = (0.0, 0.0, 0.0);
            for &(i, j, c) in terms {
                xx += c * ddpow(x, i) * ipow(y, j);
                xy += c * dpow(x, i) * dpow(y, j);
                yy += c * ipow(x, i) * ddpow(y, j);
            }
            Mat2::new(xx, xy, xy, yy)
        }
    }
}

/// Outcome of comparing analytic derivatives against central differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdReport {
    pub analytic_gradient: Vec2,
    pub numeric_gradient: Vec2,
    pub analytic_hessian: Mat2,
    pub numeric_hessian: Mat2,
    /// Worst of the gradient and Hessian relative errors. Falls back to the
    /// absolute error when the analytic quantity is exactly zero.
    pub rel_error: f64,
}

fn rel_or_abs(err: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        err
    } else {
        err / scale
    }
}

fn frob(m: &Mat2) -> f64 {
    m.m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

/// Central-difference check of [`gradient`] (differencing `J`) and
/// [`hessian`] (differencing the analytic gradient).
pub fn check_gradient_fd(field: &FieldModel, p: Vec2, h: f64) -> Result<FdReport> {
    if !(h > 0.0) {
        return Err(FlockError::InvalidArgument(format!("step h = {h} must be positive")));
    }
    let ex = Vec2::new(h, 0.0);
    let ey = Vec2::new(0.0, h);
    let numeric_gradient = Vec2::new(
        (eval(field, p + ex) - eval(field, p - ex)) / (2.0 * h),
        (eval(field, p + ey) - eval(field, p - ey)) / (2.0 * h),
    );
    let gx = (gradient(field, p + ex) - gradient(field, p - ex)) * (0.5 / h);
    let gy = (gradient(field, p + ey) - gradient(field, p - ey)) * (0.5 / h);
    // column k of the Hessian is ∂∇J/∂p_k
    let numeric_hessian = Mat2::new(gx.x, gy.x, gx.y, gy.y);

    let analytic_gradient = gradient(field, p);
    let analytic_hessian = hessian(field, p);
    let g_err = rel_or_abs((numeric_gradient - analytic_gradient).norm(), analytic_gradient.norm());
    let mut diff = analytic_hessian;
    for r in 0..2 {
        for c in 0..2 {
            diff.m[r][c] -= numeric_hessian.m[r][c];
        }
    }
    let h_err = rel_or_abs(frob(&diff), frob(&analytic_hessian));
    Ok(FdReport {
        analytic_gradient,
        numeric_gradient,
        analytic_hessian,
        numeric_hessian,
        rel_error: g_err.max(h_err),
    })
}
