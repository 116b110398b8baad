//! Adaptive spacing policy.
//!
//! Each edge carries an auxiliary state `d` driven by `ḋ = tanh(e/2)`. The
//! scaling factor `s = exp(λ tanh((d - d_nom)/2))` stretches the nominal gap
//! into the desired gap `D* = d_nom s`, and `e = μ - D*` is the spacing
//! error. `s` stays inside `(e^-λ, e^λ)` for every finite `d`, and freezes
//! as soon as `e = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{FlockError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacingParams {
    pub d_nom: f64,
    pub lambda: f64,
}

impl SpacingParams {
    pub fn new(d_nom: f64, lambda: f64) -> Result<Self> {
        if !(d_nom > 0.0) || !d_nom.is_finite() {
            return Err(FlockError::InvalidArgument(format!("d_nom = {d_nom} must be positive")));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(FlockError::InvalidArgument(format!("lambda = {lambda} must be positive")));
        }
        Ok(SpacingParams { d_nom, lambda })
    }

    /// Open interval `(e^-λ, e^λ)` containing every scaling factor.
    pub fn scale_bounds(&self) -> (f64, f64) {
        ((-self.lambda).exp(), self.lambda.exp())
    }

    /// Open interval containing every desired gap.
    pub fn gap_bounds(&self) -> (f64, f64) {
        let (lo, hi) = self.scale_bounds();
        (self.d_nom * lo, self.d_nom * hi)
    }

    /// Largest λ for which `D*` can never reach the sensing range `r`.
    pub fn lambda_bound(d_nom: f64, r: f64) -> f64 {
        (r / d_nom).ln()
    }
}

/// Initial value of `d` for a fresh edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DInitRepr", into = "DInitRepr")]
pub enum DInit {
    /// `d(t₀) = d_nom`, so `s(t₀) = 1`.
    Nominal,
    Zero,
    Value(f64),
}

impl DInit {
    pub fn resolve(self, params: &SpacingParams) -> f64 {
        match self {
            DInit::Nominal => params.d_nom,
            DInit::Zero => 0.0,
            DInit::Value(v) => v,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum DInitRepr {
    Name(String),
    Value(f64),
}

impl TryFrom<DInitRepr> for DInit {
    type Error = String;

    fn try_from(r: DInitRepr) -> std::result::Result<Self, String> {
        match r {
            DInitRepr::Name(s) if s == "nominal" => Ok(DInit::Nominal),
            DInitRepr::Name(s) if s == "zero" => Ok(DInit::Zero),
            DInitRepr::Name(s) => Err(format!("d_init must be \"nominal\", \"zero\" or a number, got {s:?}")),
            DInitRepr::Value(v) if v.is_finite() => Ok(DInit::Value(v)),
            DInitRepr::Value(v) => Err(format!("d_init {v} is not finite")),
        }
    }
}

impl From<DInit> for DInitRepr {
    fn from(d: DInit) -> Self {
        match d {
            DInit::Nominal => DInitRepr::Name("nominal".into()),
            DInit::Zero => DInitRepr::Name("zero".into()),
            DInit::Value(v) => DInitRepr::Value(v),
        }
    }
}

/// Snapshot of one edge: the integrated state `d` plus everything derived
/// from it and the current gap `mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeState {
    pub d: f64,
    pub s: f64,
    pub d_star: f64,
    pub mu: f64,
    pub e: f64,
}

impl EdgeState {
    pub fn new(d: f64, mu: f64, params: &SpacingParams) -> Self {
        let s = scaling_factor(d, params);
        let d_star = params.d_nom * s;
        EdgeState { d, s, d_star, mu, e: spacing_error(mu, d_star) }
    }

    /// Edge with the desired gap pinned to `d_nom` (`s ≡ 1`), as used by the
    /// fixed-spacing baseline.
    pub fn fixed(mu: f64, params: &SpacingParams) -> Self {
        EdgeState { d: params.d_nom, s: 1.0, d_star: params.d_nom, mu, e: mu - params.d_nom }
    }

    pub fn with_mu(self, mu: f64) -> Self {
        EdgeState { mu, e: spacing_error(mu, self.d_star), ..self }
    }
}

pub fn scaling_factor(d: f64, params: &SpacingParams) -> f64 {
    (params.lambda * ((d - params.d_nom) / 2.0).tanh()).exp()
}

/// `D* = d_nom s`. Rejects `s` outside the open band `(e^-λ, e^λ)`.
pub fn desired_gap(s: f64, params: &SpacingParams) -> Result<f64> {
    let (lo, hi) = params.scale_bounds();
    if !(s > lo && s < hi) {
        return Err(FlockError::InvalidArgument(format!(
            "scaling factor {s} outside ({lo}, {hi})"
        )));
    }
    Ok(params.d_nom * s)
}

pub fn spacing_error(mu: f64, d_star: f64) -> f64 {
    mu - d_star
}

/// `ḋ = tanh(e/2)`.
pub fn d_rate(e: f64) -> f64 {
    (e / 2.0).tanh()
}

/// `ds/dd = s λ / (2 cosh²((d - d_nom)/2))`, strictly positive.
pub fn ds_dd(d: f64, params: &SpacingParams) -> f64 {
    let c = ((d - params.d_nom) / 2.0).cosh();
    scaling_factor(d, params) * params.lambda / (2.0 * c * c)
}

/// `ṡ = (ds/dd) ḋ`.
pub fn s_rate(edge: &EdgeState, params: &SpacingParams) -> f64 {
    ds_dd(edge.d, params) * d_rate(edge.e)
}
