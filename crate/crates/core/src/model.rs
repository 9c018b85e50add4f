//! The static saturation model and its analytic diagnostics.
//!
//! The model is the logistic-type equation
//!
//! ```text
//! (x + lambda) phi'(x) = alpha * phi * (1 - eta * phi^mu)
//! ```
//!
//! whose integral solution, for `mu != 0`, is
//!
//! ```text
//! phi(x) = [eta + ((x + lambda) / c)^(-mu * alpha)]^(-1 / mu)
//! ```
//!
//! With the Zipf values `alpha = -2`, `mu = -1` this collapses to
//! `phi(x) = eta + (c / (x + lambda))^2`: a power law that saturates at
//! `eta` for richly linked nodes and is held finite by `lambda` for poorly
//! linked ones.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ModelParams {
    /// Power-law exponent.
    pub alpha: f64,
    /// Nonlinear saturation exponent.
    pub mu: f64,
    /// Saturation (nonhomogeneity) level.
    pub eta: f64,
    /// Low-x offset, `>= 0`.
    pub lambda: f64,
    /// Integration constant, `> 0`.
    pub c: f64,
}

pub const ZIPF_ALPHA: f64 = -2.0;
pub const ZIPF_MU: f64 = -1.0;

impl ModelParams {
    pub fn new(alpha: f64, mu: f64, eta: f64, lambda: f64, c: f64) -> Self {
        ModelParams {
            alpha,
            mu,
            eta,
            lambda,
            c,
        }
    }

    /// Zipf specialization (`alpha = -2`, `mu = -1`).
    pub fn zipf(eta: f64, lambda: f64, c: f64) -> Self {
        ModelParams::new(ZIPF_ALPHA, ZIPF_MU, eta, lambda, c)
    }

    pub fn is_zipf(&self) -> bool {
        self.alpha == ZIPF_ALPHA && self.mu == ZIPF_MU
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let all_finite = [self.alpha, self.mu, self.eta, self.lambda, self.c]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(ModelError::InvalidParams(format!(
                "non-finite value in {self}"
            )));
        }
        if self.c <= 0.0 {
            return Err(ModelError::InvalidParams(format!(
                "c must be > 0, got {}",
                self.c
            )));
        }
        if self.lambda < 0.0 {
            return Err(ModelError::InvalidParams(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.alpha, self.mu, self.eta, self.lambda, self.c]
    }
}

impl fmt::Display for ModelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "alpha={} mu={} eta={} lambda={} c={}",
            self.alpha, self.mu, self.eta, self.lambda, self.c
        )
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("mu = 0 is not supported by the integral solution")]
    UnsupportedMu,
    #[error("model undefined at x = {x}: bracket {bracket} <= 0 (zero crossing at x = {zero_crossing:?})")]
    Domain {
        x: f64,
        bracket: f64,
        zero_crossing: Option<f64>,
    },
    #[error("x + lambda must be > 0, got x = {x}, lambda = {lambda}")]
    OffsetDomain { x: f64, lambda: f64 },
    #[error("operation requires alpha = -2 and mu = -1, got alpha = {alpha}, mu = {mu}")]
    NotZipf { alpha: f64, mu: f64 },
    #[error("eta = 0: no saturation scale")]
    NoSaturation,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// `(y / c)^e` for `y, c > 0`.
///
/// Integer exponents go through `powi` on the ratio oriented so that the
/// exponent is positive, which keeps the Zipf specialisation bit-identical
/// across the direct and series forms. Other exponents use
/// `exp(e * ln(y / c))`.
pub(crate) fn ratio_pow(y: f64, c: f64, e: f64) -> f64 {
    if e == 0.0 {
        return 1.0;
    }
    if e.fract() == 0.0 && e.abs() <= 16.0 {
        let n = e.abs() as i32;
        return if e > 0.0 {
            (y / c).powi(n)
        } else {
            (c / y).powi(n)
        };
    }
    (e * (y / c).ln()).exp()
}

fn real_pow(base: f64, e: f64) -> f64 {
    if e == 1.0 {
        base
    } else if e.fract() == 0.0 && e.abs() <= 16.0 {
        base.powi(e as i32)
    } else {
        (e * base.ln()).exp()
    }
}

fn shifted(x: f64, p: &ModelParams) -> Result<f64, ModelError> {
    let y = x + p.lambda;
    if y > 0.0 {
        Ok(y)
    } else {
        Err(ModelError::OffsetDomain {
            x,
            lambda: p.lambda,
        })
    }
}

fn require_zipf(p: &ModelParams) -> Result<(), ModelError> {
    if p.is_zipf() {
        Ok(())
    } else {
        Err(ModelError::NotZipf {
            alpha: p.alpha,
            mu: p.mu,
        })
    }
}

/// General integral solution
/// `[eta + ((x + lambda)/c)^(-mu*alpha)]^(-1/mu)`.
pub fn eval_phi_general(x: f64, p: &ModelParams) -> Result<f64, ModelError> {
    if p.mu == 0.0 {
        return Err(ModelError::UnsupportedMu);
    }
    let y = shifted(x, p)?;
    let bracket = p.eta + ratio_pow(y, p.c, -p.mu * p.alpha);
    if !(bracket > 0.0) {
        return Err(ModelError::Domain {
            x,
            bracket,
            zero_crossing: general_zero_crossing(p),
        });
    }
    Ok(real_pow(bracket, -1.0 / p.mu))
}

/// Zipf specialization `eta + (c / (x + lambda))^2`. Defined for every
/// `x > -lambda` and negative beyond the zero crossing when `eta < 0`.
pub fn eval_phi_zipf(x: f64, p: &ModelParams) -> Result<f64, ModelError> {
    require_zipf(p)?;
    let y = shifted(x, p)?;
    Ok(p.eta + ratio_pow(y, p.c, p.alpha))
}

/// Fast evaluation used inside objective loops: Zipf form when applicable,
/// general form otherwise; `None` outside the domain.
pub(crate) fn eval_phi(x: f64, p: &ModelParams) -> Option<f64> {
    if p.is_zipf() {
        let r = p.c / (x + p.lambda);
        (x + p.lambda > 0.0).then_some(p.eta + r * r)
    } else {
        eval_phi_general(x, p).ok()
    }
}

/// Step used by [`ode_residual`]'s central difference.
pub fn ode_step(x: f64) -> f64 {
    (1e-6 * x).max(1e-8)
}

/// Residual of the logistic equation for the field `phi`, with `phi'`
/// from a central difference of step [`ode_step`].
pub fn ode_residual_of<F>(x: f64, p: &ModelParams, phi: F) -> Result<f64, ModelError>
where
    F: Fn(f64) -> Result<f64, ModelError>,
{
    let h = ode_step(x);
    let value = phi(x)?;
    let derivative = (phi(x + h)? - phi(x - h)?) / (2.0 * h);
    let saturation = 1.0 - p.eta * real_pow(value, p.mu);
    Ok((x + p.lambda) * derivative - p.alpha * value * saturation)
}

/// `(x + lambda) phi'(x) - alpha phi (1 - eta phi^mu)` for the integral
/// solution; vanishes up to finite-difference error.
pub fn ode_residual(x: f64, p: &ModelParams) -> Result<f64, ModelError> {
    ode_residual_of(x, p, |x| eval_phi_general(x, p))
}

/// Partial sum of the power-series expansion of the integral solution,
/// up to three terms:
///
/// ```text
/// r^alpha - (eta/mu) r^(alpha(mu+1)) + ((mu+1)/2)(eta/mu)^2 r^(alpha(2mu+1)),  r = (x+lambda)/c
/// ```
///
/// For `mu = -1` the third coefficient vanishes and two terms reproduce the
/// Zipf form exactly.
pub fn series_phi(x: f64, p: &ModelParams, n_terms: usize) -> Result<f64, ModelError> {
    if p.mu == 0.0 {
        return Err(ModelError::UnsupportedMu);
    }
    if !(1..=3).contains(&n_terms) {
        return Err(ModelError::InvalidParams(format!(
            "series supports 1 to 3 terms, got {n_terms}"
        )));
    }
    let y = shifted(x, p)?;
    let ratio = p.eta / p.mu;
    let mut sum = ratio_pow(y, p.c, p.alpha);
    if n_terms >= 2 {
        sum -= ratio * ratio_pow(y, p.c, p.alpha * (p.mu + 1.0));
    }
    if n_terms >= 3 {
        let coeff = (p.mu + 1.0) / 2.0;
        if coeff != 0.0 {
            sum += coeff * ratio * ratio * ratio_pow(y, p.c, p.alpha * (2.0 * p.mu + 1.0));
        }
    }
    Ok(sum)
}

/// Link-count scale where saturation sets in.
///
/// With `include_c = false` this is `|eta|^(-1/(mu*alpha))`; with
/// `include_c = true` it is `c * |eta|^(-1/(mu*alpha))`, the point where the
/// two bracketed terms of the integral solution are equal.
pub fn saturation_scale(p: &ModelParams, include_c: bool) -> Result<f64, ModelError> {
    if p.eta == 0.0 {
        return Err(ModelError::NoSaturation);
    }
    let mu_alpha = p.mu * p.alpha;
    if mu_alpha == 0.0 {
        return Err(ModelError::InvalidParams("mu * alpha = 0".into()));
    }
    let scale = real_pow(p.eta.abs(), -1.0 / mu_alpha);
    Ok(if include_c { p.c * scale } else { scale })
}

/// Upper bound on the count of the sparsest nodes, `(c / (1 + lambda))^2`.
/// The admissible range of the Zipf form is `eta <= phi <~ bound`.
pub fn sparse_upper_bound(p: &ModelParams) -> f64 {
    let r = p.c / (1.0 + p.lambda);
    r * r
}

fn general_zero_crossing(p: &ModelParams) -> Option<f64> {
    if p.eta >= 0.0 || p.mu * p.alpha <= 0.0 {
        return None;
    }
    Some(p.c * real_pow(-p.eta, -1.0 / (p.mu * p.alpha)) - p.lambda)
}

/// Root of the Zipf form, `c / sqrt(-eta) - lambda`, when `eta < 0`.
pub fn zero_crossing(p: &ModelParams) -> Result<Option<f64>, ModelError> {
    require_zipf(p)?;
    Ok((p.eta < 0.0).then(|| p.c / (-p.eta).sqrt() - p.lambda))
}

/// Largest `x` at which the model stays positive, if bounded: the
/// crossing for `eta < 0` in any specialization where it exists.
pub fn positive_domain_limit(p: &ModelParams) -> Option<f64> {
    general_zero_crossing(p)
}

/// Whether a power law with exponent `alpha` lies in the Lévy-stable range
/// `0 < -alpha <= 2`.
pub fn levy_stable(alpha: f64) -> bool {
    -alpha > 0.0 && -alpha <= 2.0
}

/// Parameter sets quoted for the published degree-distribution figures.
pub mod published {
    use super::ModelParams;

    /// Incoming links, etch.
    pub const ETCH_IN: ModelParams = ModelParams {
        alpha: -2.0,
        mu: -1.0,
        eta: -8.0,
        lambda: 1.5,
        c: 190.0,
    };
    /// Outgoing links, etch.
    pub const ETCH_OUT: ModelParams = ModelParams {
        alpha: -2.0,
        mu: -1.0,
        eta: 1.0,
        lambda: 0.25,
        c: 80.0,
    };
    /// Incoming links, lenny.
    pub const LENNY_IN: ModelParams = ModelParams {
        alpha: -2.0,
        mu: -1.0,
        eta: -15.0,
        lambda: 1.6,
        c: 210.0,
    };
    /// Outgoing links, lenny.
    pub const LENNY_OUT: ModelParams = ModelParams {
        alpha: -2.0,
        mu: -1.0,
        eta: 1.0,
        lambda: 0.35,
        c: 90.0,
    };
    /// Conflicts, etch.
    pub const ETCH_CONFLICTS: ModelParams = ModelParams {
        alpha: -4.0,
        mu: -1.0,
        eta: 1.0,
        lambda: 1.6,
        c: 19.0,
    };
    /// Outgoing links, squeeze.
    pub const SQUEEZE_OUT: ModelParams = ModelParams {
        alpha: -2.0,
        mu: -1.0,
        eta: 1.0,
        lambda: 0.45,
        c: 110.0,
    };

    pub const ALL: [(&str, ModelParams); 6] = [
        ("etch-in", ETCH_IN),
        ("etch-out", ETCH_OUT),
        ("lenny-in", LENNY_IN),
        ("lenny-out", LENNY_OUT),
        ("etch-conflicts", ETCH_CONFLICTS),
        ("squeeze-out", SQUEEZE_OUT),
    ];
}

#[cfg(test)]
mod tests {
    use super::published::*;
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    // Independent oracle: the Zipf form written out by hand.
    fn zipf_oracle(x: f64, eta: f64, lambda: f64, c: f64) -> f64 {
        eta + (c / (x + lambda)) * (c / (x + lambda))
    }

    #[test]
    fn general_pure_power_law() {
        let p = ModelParams::zipf(0.0, 0.0, 1.0);
        assert_eq!(eval_phi_general(1.0, &p).unwrap(), 1.0);
        for x in [2.0, 7.5, 100.0] {
            let v = eval_phi_general(x, &p).unwrap();
            assert!(close(v, x.powi(-2), 1e-15 * v.abs().max(1.0)));
        }
    }

    #[test]
    fn general_matches_frozen_values() {
        let v = eval_phi_general(9025.0, &ETCH_OUT).unwrap();
        assert!(close(v, zipf_oracle(9025.0, 1.0, 0.25, 80.0), 1e-12));
        assert!(close(v, 1.000_078_6, 5e-8));
        let v = eval_phi_general(10.0, &ETCH_IN).unwrap();
        assert!(close(v, zipf_oracle(10.0, -8.0, 1.5, 190.0), 1e-9));
        assert!(close(v, 264.97, 5e-3));
    }

    #[test]
    fn general_errors() {
        let mut p = ETCH_OUT;
        p.mu = 0.0;
        assert_eq!(eval_phi_general(1.0, &p), Err(ModelError::UnsupportedMu));
        match eval_phi_general(100.0, &ETCH_IN) {
            Err(ModelError::Domain { zero_crossing, .. }) => {
                assert!(close(
                    zero_crossing.unwrap(),
                    190.0 / 8f64.sqrt() - 1.5,
                    1e-12
                ))
            }
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn zipf_examples() {
        assert_eq!(eval_phi_zipf(1.0, &ETCH_IN).unwrap(), 5768.0);
        for p in [ETCH_OUT, LENNY_OUT, SQUEEZE_OUT] {
            assert!((eval_phi_zipf(1e9, &p).unwrap() - p.eta).abs() < 1e-9);
        }
        assert!(matches!(
            eval_phi_zipf(1.0, &ETCH_CONFLICTS),
            Err(ModelError::NotZipf { .. })
        ));
        // Negative past the zero crossing.
        assert!(eval_phi_zipf(100.0, &ETCH_IN).unwrap() < 0.0);
    }

    #[test]
    fn ode_residual_vanishes() {
        for x in [1.0, 10.0, 50.0] {
            let phi = eval_phi_general(x, &ETCH_IN).unwrap();
            let r = ode_residual(x, &ETCH_IN).unwrap();
            assert!((r / (ETCH_IN.alpha * phi)).abs() < 1e-6, "x={x} r={r}");
        }
        let pure = ModelParams::new(-2.0, -1.0, 0.0, 0.0, 3.0);
        for x in [1.0, 33.0, 1e4] {
            let phi = eval_phi_general(x, &pure).unwrap();
            assert!((ode_residual(x, &pure).unwrap() / (2.0 * phi)).abs() < 1e-6);
        }
    }

    #[test]
    fn ode_residual_detects_perturbed_field() {
        // With mu = -1 the equation is linear, so scaling phi by k leaves a
        // residual of alpha*eta*(1 - k): relative size eta(1 - 1/k)/phi,
        // largest where phi has saturated near eta.
        let p = ETCH_OUT;
        let k = 1.1;
        for x in [1.0, 10.0, 50.0, 1000.0, 9025.0] {
            let scaled = |x: f64| eval_phi_general(x, &p).map(|v| k * v);
            let r = ode_residual_of(x, &p, scaled).unwrap();
            let phi = eval_phi_general(x, &p).unwrap();
            let expected = p.eta * (1.0 - 1.0 / k) / phi;
            let rel = (r / (p.alpha * k * phi)).abs();
            assert!(
                close(rel, expected, 1e-6),
                "x={x} rel={rel} expected={expected}"
            );
            if x >= 1000.0 {
                assert!(rel > 1e-2, "x={x} rel={rel}");
            }
        }
    }

    #[test]
    fn series_truncation() {
        for p in [ETCH_IN, ETCH_OUT, LENNY_IN, LENNY_OUT, SQUEEZE_OUT] {
            for x in [1.0, 3.7, 42.0, 9025.0] {
                let zipf = eval_phi_zipf(x, &p).unwrap();
                assert_eq!(series_phi(x, &p, 2).unwrap(), zipf);
                assert_eq!(series_phi(x, &p, 3).unwrap(), zipf);
            }
        }
        assert!(series_phi(1.0, &ETCH_OUT, 0).is_err());
        assert!(series_phi(1.0, &ETCH_OUT, 4).is_err());
    }

    #[test]
    fn series_improves_in_power_law_regime() {
        // Non-integer -1/mu, so the expansion is a genuine truncation. Its
        // small parameter is eta ((x + lambda)/c)^(mu*alpha).
        let p = ModelParams::new(-2.0, -1.5, 1.0, 0.25, 80.0);
        let error =
            |x: f64, n| (series_phi(x, &p, n).unwrap() - eval_phi_general(x, &p).unwrap()).abs();
        let three: Vec<f64> = [40.0, 20.0, 10.0, 5.0]
            .iter()
            .map(|&x| error(x, 3))
            .collect();
        assert!(three.windows(2).all(|w| w[1] < w[0]), "{three:?}");
        for x in [40.0, 20.0, 10.0, 5.0] {
            assert!(
                error(x, 3) < error(x, 2) && error(x, 2) < error(x, 1),
                "x={x}"
            );
        }
    }

    #[test]
    fn saturation_scales() {
        assert_eq!(saturation_scale(&ETCH_OUT, false).unwrap(), 1.0);
        // Oracle: solve eta = ((x + lambda)/c)^(-mu*alpha) for x + lambda.
        let oracle = ETCH_OUT.c * ETCH_OUT.eta.powf(1.0 / (-ETCH_OUT.mu * ETCH_OUT.alpha));
        assert!(close(
            saturation_scale(&ETCH_OUT, true).unwrap(),
            oracle,
            1e-12
        ));
        assert!(close(
            saturation_scale(&ETCH_OUT, true).unwrap(),
            80.0,
            1e-12
        ));
        assert!(close(
            saturation_scale(&ETCH_IN, false).unwrap(),
            8f64.powf(-0.5),
            1e-15
        ));
        assert!(close(
            saturation_scale(&ETCH_IN, false).unwrap(),
            0.3536,
            1e-4
        ));
        let mut p = ETCH_OUT;
        p.eta = 0.0;
        assert_eq!(saturation_scale(&p, false), Err(ModelError::NoSaturation));
    }

    #[test]
    fn sparse_bounds() {
        assert_eq!(sparse_upper_bound(&ETCH_IN), 5776.0);
        assert_eq!(sparse_upper_bound(&ETCH_OUT), 4096.0);
        assert_eq!(sparse_upper_bound(&ModelParams::zipf(0.0, 0.0, 1.0)), 1.0);
    }

    fn bisect_root(p: &ModelParams) -> f64 {
        let (mut lo, mut hi) = (1.0, 1e6);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if zipf_oracle(mid, p.eta, p.lambda, p.c) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn zero_crossings() {
        let x0 = zero_crossing(&ETCH_IN).unwrap().unwrap();
        assert!(close(x0, bisect_root(&ETCH_IN), 1e-9));
        assert!(close(x0, 65.68, 5e-3));
        let x0 = zero_crossing(&LENNY_IN).unwrap().unwrap();
        assert!(close(x0, bisect_root(&LENNY_IN), 1e-9));
        assert!(close(x0, 52.62, 5e-3));
        assert_eq!(zero_crossing(&ETCH_OUT).unwrap(), None);
        assert_eq!(positive_domain_limit(&ETCH_IN), Some(x0_of(&ETCH_IN)));
    }

    fn x0_of(p: &ModelParams) -> f64 {
        zero_crossing(p).unwrap().unwrap()
    }

    #[test]
    fn levy() {
        assert!(levy_stable(-2.0));
        assert!(!levy_stable(-4.0));
        assert!(!levy_stable(1.0));
        assert!(!levy_stable(0.0));
    }

    #[test]
    fn validate_params() {
        assert!(ETCH_OUT.validate().is_ok());
        assert!(ModelParams::zipf(1.0, -0.1, 1.0).validate().is_err());
        assert!(ModelParams::zipf(1.0, 0.1, 0.0).validate().is_err());
        assert!(ModelParams::zipf(f64::NAN, 0.1, 1.0).validate().is_err());
    }

    proptest! {
        #[test]
        fn general_equals_zipf(
            x in 1.0f64..1e5, eta in -20.0f64..5.0, lambda in 0.0f64..3.0, c in 1.0f64..500.0
        ) {
            let p = ModelParams::zipf(eta, lambda, c);
            let zipf = eval_phi_zipf(x, &p).unwrap();
            match eval_phi_general(x, &p) {
                Ok(general) => prop_assert!((general - zipf).abs() <= 1e-12 * zipf.abs()),
                Err(_) => prop_assert!(zipf <= 0.0),
            }
        }

        #[test]
        fn zipf_strictly_decreasing(
            x in 0.0f64..1e4, dx in 1e-3f64..10.0, eta in -20.0f64..5.0,
            lambda in 0.01f64..3.0, c in 1.0f64..500.0
        ) {
            let p = ModelParams::zipf(eta, lambda, c);
            prop_assert!(eval_phi_zipf(x + dx, &p).unwrap() < eval_phi_zipf(x, &p).unwrap());
        }
    }
}
