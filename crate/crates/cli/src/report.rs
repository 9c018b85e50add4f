//! Fit reports: flat `key=value` text plus a JSON sidecar.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use depnet_core::fit::FitResult;
use depnet_core::model::{positive_domain_limit, saturation_scale, sparse_upper_bound};
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Diagnostics {
    /// `|eta|^(-1/(mu alpha))`.
    pub x_sat: Option<f64>,
    /// `c |eta|^(-1/(mu alpha))`.
    pub x_sat_c: Option<f64>,
    /// `(c / (1 + lambda))^2`; Zipf form only.
    pub phi_ub: Option<f64>,
    pub zero_crossing: Option<f64>,
}

impl Diagnostics {
    pub fn of(r: &FitResult) -> Self {
        let p = &r.params;
        Diagnostics {
            x_sat: saturation_scale(p, false).ok(),
            x_sat_c: saturation_scale(p, true).ok(),
            phi_ub: p.is_zipf().then(|| sparse_upper_bound(p)),
            zero_crossing: positive_domain_limit(p),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct FitReport<'a> {
    pub manifest_digest: &'a str,
    pub input: String,
    pub seed: u64,
    pub result: &'a FitResult,
    pub diagnostics: Diagnostics,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |v| v.to_string())
}

impl FitReport<'_> {
    pub fn to_text(&self) -> String {
        let r = self.result;
        let p = &r.params;
        let d = &self.diagnostics;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("manifest_digest", self.manifest_digest.to_string());
        kv("input", self.input.clone());
        kv("seed", self.seed.to_string());
        kv("alpha", p.alpha.to_string());
        kv("mu", p.mu.to_string());
        kv("eta", p.eta.to_string());
        kv("lambda", p.lambda.to_string());
        kv("c", p.c.to_string());
        kv("free_parameters", r.free_parameters.join(","));
        kv("mu_free_experimental", r.mu_free_experimental.to_string());
        kv("objective", "log_sse".to_string());
        kv("objective_value", r.objective_value.to_string());
        kv("rmse", r.rmse.to_string());
        kv("n_points_used", r.n_points_used.to_string());
        kv("domain_min", r.domain_used.0.to_string());
        kv("domain_max", r.domain_used.1.to_string());
        kv("domain_cap", opt(r.domain_cap));
        kv("converged", r.converged.to_string());
        kv("iterations", r.iterations.to_string());
        kv("levy_stable", r.levy_stable.to_string());
        kv("x_sat", opt(d.x_sat));
        kv("x_sat_c", opt(d.x_sat_c));
        kv("phi_ub", opt(d.phi_ub));
        kv("zero_crossing", opt(d.zero_crossing));
        s
    }

    /// Writes the text report to `path` and the JSON one beside it
    /// (`.json` extension); returns the JSON path.
    pub fn write(&self, path: &Path) -> Result<PathBuf, CliError> {
        fs::write(path, self.to_text()).map_err(|e| CliError::io(path, e))?;
        let json_path = if path.extension().is_some_and(|e| e == "json") {
            crate::manifest::sidecar(path, "json")
        } else {
            path.with_extension("json")
        };
        let json = serde_json::to_string_pretty(self).expect("report serializes");
        fs::write(&json_path, json + "\n").map_err(|e| CliError::io(&json_path, e))?;
        Ok(json_path)
    }
}
