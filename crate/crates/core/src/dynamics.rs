//! Time-dependent out-degree field and node-count saturation.
//!
//! The field obeys the first-order linear equation
//!
//! ```text
//! tau * d(phi)/dt = d(phi)/dx - (alpha / c^alpha) (x + lambda)^(alpha - 1)
//! ```
//!
//! Integrating along the characteristics `x + t/tau = const` with the
//! initial condition `phi(x, 0) = eta` gives
//!
//! ```text
//! phi(x, t) = eta + ((x + lambda)/c)^alpha - ((x + lambda + t/tau)/c)^alpha
//! ```
//!
//! which relaxes to the static Zipf form as `t -> infinity` when `alpha < 0`.
//! Time is measured in units of `tau`; only `t / tau` enters any formula.

use crate::model::{ratio_pow, ModelError, ModelParams};
use crate::quadrature::adaptive_simpson;

/// Relative tolerance of [`n_out_quadrature`].
pub const QUADRATURE_REL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EvolutionConfig {
    /// `alpha`, `eta`, `lambda`, `c`; `mu` must be -1.
    pub params: ModelParams,
    /// Representative evolution time scale.
    pub tau: f64,
    /// Maximum link count.
    pub x_m: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DynamicsError {
    #[error("growth requires alpha < 0, got {0}")]
    NoGrowth(f64),
    #[error("invalid evolution config: {0}")]
    InvalidConfig(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl EvolutionConfig {
    pub fn new(params: ModelParams, tau: f64, x_m: f64) -> Result<Self, DynamicsError> {
        let cfg = EvolutionConfig { params, tau, x_m };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        self.params.validate()?;
        if self.params.mu != -1.0 {
            return Err(DynamicsError::InvalidConfig(format!(
                "the evolution model fixes mu = -1, got {}",
                self.params.mu
            )));
        }
        if !(self.params.alpha < 0.0) {
            return Err(DynamicsError::NoGrowth(self.params.alpha));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(DynamicsError::InvalidConfig(format!(
                "tau must be > 0, got {}",
                self.tau
            )));
        }
        if !(self.x_m > 1.0 && self.x_m.is_finite()) {
            return Err(DynamicsError::InvalidConfig(format!(
                "x_m must be > 1, got {}",
                self.x_m
            )));
        }
        Ok(())
    }

    fn scaled_time(&self, t: f64) -> f64 {
        t / self.tau
    }
}

fn check_point(x: f64, t: f64, cfg: &EvolutionConfig) -> Result<(), DynamicsError> {
    let y = x + cfg.params.lambda;
    if !(y > 0.0) || !(y + cfg.scaled_time(t) > 0.0) {
        return Err(DynamicsError::Domain(format!(
            "x + lambda and x + lambda + t/tau must be positive (x = {x}, t = {t})"
        )));
    }
    Ok(())
}

/// `phi(x, t)`. Exactly `eta` at `t = 0`.
pub fn eval_phi_xt(x: f64, t: f64, cfg: &EvolutionConfig) -> Result<f64, DynamicsError> {
    Ok(cfg.params.eta + growth(x, t, cfg)?)
}

/// `phi(x, t) - eta`.
fn growth(x: f64, t: f64, cfg: &EvolutionConfig) -> Result<f64, DynamicsError> {
    if !(cfg.params.alpha < 0.0) {
        return Err(DynamicsError::NoGrowth(cfg.params.alpha));
    }
    check_point(x, t, cfg)?;
    let p = &cfg.params;
    let y = x + p.lambda;
    let current = ratio_pow(y, p.c, p.alpha);
    let shifted = ratio_pow(y + cfg.scaled_time(t), p.c, p.alpha);
    Ok(current - shifted)
}

/// Source term `(alpha / c^alpha) (x + lambda)^(alpha - 1)`.
pub fn pde_source(x: f64, cfg: &EvolutionConfig) -> f64 {
    let p = &cfg.params;
    p.alpha / p.c * ratio_pow(x + p.lambda, p.c, p.alpha - 1.0)
}

/// `tau phi_t - phi_x + source` for an arbitrary field, with central
/// differences of step `1e-4 * max(1, |x|)` and `1e-4 * max(1, |t|)`.
pub fn pde_residual_of<F>(
    x: f64,
    t: f64,
    cfg: &EvolutionConfig,
    field: F,
) -> Result<f64, DynamicsError>
where
    F: Fn(f64, f64) -> Result<f64, DynamicsError>,
{
    let hx = 1e-4 * x.abs().max(1.0);
    let ht = 1e-4 * t.abs().max(1.0);
    let phi_x = (field(x + hx, t)? - field(x - hx, t)?) / (2.0 * hx);
    let phi_t = (field(x, t + ht)? - field(x, t - ht)?) / (2.0 * ht);
    Ok(cfg.tau * phi_t - phi_x + pde_source(x, cfg))
}

/// Residual of [`eval_phi_xt`]. The constant `eta` drops out of both
/// derivatives, so the differences are taken on the field without it;
/// otherwise they cancel catastrophically once the power-law terms fall
/// far below `eta` (for `alpha = -4` at `x ~ 10^3`, by about 14 digits).
pub fn pde_residual(x: f64, t: f64, cfg: &EvolutionConfig) -> Result<f64, DynamicsError> {
    pde_residual_of(x, t, cfg, |x, t| growth(x, t, cfg))
}

/// Early-time linearisation
/// `eta - alpha (x + lambda)^(alpha - 1) c^(-alpha) (t / tau)`.
pub fn early_time_phi(x: f64, t: f64, cfg: &EvolutionConfig) -> f64 {
    let p = &cfg.params;
    p.eta - pde_source(x, cfg) * cfg.scaled_time(t)
}

/// `phi(x, t) - eta - ((x + lambda)/c)^alpha`; tends to
/// [`late_time_asymptote`] as `t -> infinity`.
pub fn late_time_deviation(x: f64, t: f64, cfg: &EvolutionConfig) -> Result<f64, DynamicsError> {
    let p = &cfg.params;
    let phi = eval_phi_xt(x, t, cfg)?;
    Ok(phi - p.eta - ratio_pow(x + p.lambda, p.c, p.alpha))
}

/// `-(t / tau)^alpha / c^alpha`.
pub fn late_time_asymptote(t: f64, cfg: &EvolutionConfig) -> f64 {
    -ratio_pow(cfg.scaled_time(t), cfg.params.c, cfg.params.alpha)
}

/// Zeroth-order scaling of the dressed `c`:
/// `[1 - (1 + t/(x tau))^alpha]^(-1/alpha)`.
pub fn zeta(x: f64, t: f64, alpha: f64, tau: f64) -> f64 {
    let bracket = 1.0 - (1.0 + t / (x * tau)).powf(alpha);
    bracket.powf(-1.0 / alpha)
}

/// Zeroth-order (in `x / lambda`) scaling of the dressed `lambda`,
/// `nu = zeta * [1 - (1 + t/(lambda tau))^alpha]^(1/alpha)`.
///
/// For `alpha < 0` the bracket vanishes at `t = 0`, so `nu` diverges there
/// and decreases towards `zeta` as `t` grows.
pub fn nu_zeroth_order(
    t: f64,
    lambda: f64,
    alpha: f64,
    tau: f64,
    zeta_value: f64,
) -> Result<f64, DynamicsError> {
    if !(lambda > 0.0) {
        return Err(DynamicsError::Domain(format!(
            "lambda must be > 0, got {lambda}"
        )));
    }
    if !(zeta_value > 0.0) {
        return Err(DynamicsError::Domain(format!(
            "zeta must be > 0, got {zeta_value}"
        )));
    }
    let bracket = 1.0 - (1.0 + t / (lambda * tau)).powf(alpha);
    Ok(zeta_value * bracket.powf(1.0 / alpha))
}

/// Time-dependent ("dressed") parameters casting `phi(x, t)` in static
/// form `eta + ((x + lambda_dressed) / c_dressed)^alpha`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DressedParams {
    pub lambda_dressed: f64,
    pub c_dressed: f64,
    pub zeta: f64,
    pub nu: f64,
}

/// Dressed parameters in the scale-free regime `x >> lambda`, where `nu`
/// is 1 to zeroth order in `lambda / x` and `zeta` follows [`zeta`].
pub fn dressed_params(x: f64, t: f64, cfg: &EvolutionConfig) -> DressedParams {
    let p = &cfg.params;
    let z = zeta(x, t, p.alpha, cfg.tau);
    DressedParams {
        lambda_dressed: p.lambda,
        c_dressed: p.c * z,
        zeta: z,
        nu: 1.0,
    }
}

pub fn eval_phi_dressed(x: f64, dressed: &DressedParams, cfg: &EvolutionConfig) -> f64 {
    cfg.params.eta
        + ratio_pow(
            x + dressed.lambda_dressed,
            dressed.c_dressed,
            cfg.params.alpha,
        )
}

/// The three terms of the closed-form node count:
/// `[eta x_m, c^2/(1 + lambda), -c^2/(1 + lambda + t/tau)]`.
pub fn n_out_terms(t: f64, cfg: &EvolutionConfig) -> Result<[f64; 3], DynamicsError> {
    let p = &cfg.params;
    if p.alpha != -2.0 {
        return Err(ModelError::NotZipf {
            alpha: p.alpha,
            mu: p.mu,
        }
        .into());
    }
    let c2 = p.c * p.c;
    Ok([
        p.eta * cfg.x_m,
        c2 / (1.0 + p.lambda),
        -c2 / (1.0 + p.lambda + cfg.scaled_time(t)),
    ])
}

/// Closed-form estimate
/// `N_out(t) ~ eta x_m + c^2/(1 + lambda) - c^2 (1 + lambda + t/tau)^(-1)`
/// (`alpha = -2` only). Exactly `eta x_m` at `t = 0`.
pub fn n_out_closed(t: f64, cfg: &EvolutionConfig) -> Result<f64, DynamicsError> {
    let [saturation, a, b] = n_out_terms(t, cfg)?;
    Ok(saturation + (a + b))
}

/// Upper bound of [`n_out_closed`], reached as `t -> infinity`.
pub fn n_out_limit(cfg: &EvolutionConfig) -> Result<f64, DynamicsError> {
    let [saturation, a, _] = n_out_terms(0.0, cfg)?;
    Ok(saturation + a)
}

/// `N_out(t)` as the integral of `phi(x, t)` over `[1, x_m]`, by adaptive
/// quadrature to [`QUADRATURE_REL_TOL`].
pub fn n_out_quadrature(t: f64, cfg: &EvolutionConfig) -> Result<f64, DynamicsError> {
    check_point(1.0, t, cfg)?;
    let q = adaptive_simpson(
        |x| eval_phi_xt(x, t, cfg).expect("checked domain"),
        1.0,
        cfg.x_m,
        QUADRATURE_REL_TOL * 1e-2,
    );
    Ok(q.value)
}

/// One row of an `N_out` time series.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct NOutRow {
    pub t: f64,
    pub n_out_closed: f64,
    pub n_out_quadrature: f64,
}

pub fn n_out_series(ts: &[f64], cfg: &EvolutionConfig) -> Result<Vec<NOutRow>, DynamicsError> {
    ts.iter()
        .map(|&t| {
            Ok(NOutRow {
                t,
                n_out_closed: n_out_closed(t, cfg)?,
                n_out_quadrature: n_out_quadrature(t, cfg)?,
            })
        })
        .collect()
}
