//! Run specifications: command-line flags optionally layered over a JSON file.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use compgn_core::{CompositeProblem, SolverConfig};
use serde::Deserialize;

use crate::registry::{self, Params, RegistryEntry};

/// Everything needed to launch one solve. Unset fields fall back to the
/// problem's defaults and then to [`SolverConfig::default`].
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunSpec {
    pub problem: Option<String>,
    pub params: Params,
    pub mu0: Option<f64>,
    pub tau: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub max_backtracks: Option<usize>,
    pub divergence_bound: Option<f64>,
    pub inner_tol: Option<f64>,
    /// Start each iteration from `μ_{k−1}/τ` instead of `μ₀`.
    pub warm_mu: Option<bool>,
    pub x0: Option<Vec<f64>>,
    pub trace: Option<PathBuf>,
    pub seed: Option<u64>,
    pub no_timestamp: Option<bool>,
}

impl RunSpec {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).context("invalid run spec")
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::from_json_str(&text)
    }

    /// `self` with every field set in `over` replaced by it. Parameters are
    /// merged key by key.
    pub fn overridden_by(mut self, over: RunSpec) -> RunSpec {
        macro_rules! take {
            ($($f:ident),*) => { $( if over.$f.is_some() { self.$f = over.$f; } )* };
        }
        take!(problem, mu0, tau, tol, max_iter, max_backtracks, divergence_bound, inner_tol, warm_mu, x0, trace, seed, no_timestamp);
        self.params.extend(over.params);
        self
    }

    pub fn resolve(&self) -> Result<ResolvedRun> {
        let name = self.problem.as_deref().ok_or_else(|| anyhow!("no problem given"))?;
        let entry = registry::find(name).ok_or_else(|| anyhow!("unknown problem {name:?}; see `compgn list`"))?;
        let problem = entry.build(&self.params)?;
        let mut config = entry.default_config();
        if let Some(v) = self.mu0 {
            config.mu0 = v;
        }
        if let Some(v) = self.tau {
            config.tau = v;
        }
        if let Some(v) = self.tol {
            config.step_tolerance = v;
        }
        if let Some(v) = self.max_iter {
            config.max_outer_iterations = v;
        }
        if let Some(v) = self.max_backtracks {
            config.max_backtracks_per_iteration = v;
        }
        if let Some(v) = self.divergence_bound {
            config.divergence_norm_bound = v;
        }
        if let Some(v) = self.inner_tol {
            config.inner.tolerance = v;
        }
        if let Some(v) = self.warm_mu {
            config.reset_mu_each_iteration = !v;
        }
        config.validate()?;
        let x0 = self.x0.clone().unwrap_or_else(|| entry.default_x0.clone());
        if x0.len() != problem.n() {
            return Err(anyhow!("x0 has {} entries, problem {name} needs {}", x0.len(), problem.n()));
        }
        Ok(ResolvedRun {
            entry,
            problem,
            config,
            x0,
            trace: self.trace.clone(),
            seed: self.seed.unwrap_or(0),
            timestamp: !self.no_timestamp.unwrap_or(false),
        })
    }
}

#[derive(Debug)]
pub struct ResolvedRun {
    pub entry: RegistryEntry,
    pub problem: CompositeProblem,
    pub config: SolverConfig,
    pub x0: Vec<f64>,
    pub trace: Option<PathBuf>,
    pub seed: u64,
    pub timestamp: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file = RunSpec::from_json_str(r#"{"problem": "rosenbrock-ls", "mu0": 3.0, "tau": 4.0, "params": {"a": 1.0}}"#)
            .unwrap();
        let mut flags = RunSpec { mu0: Some(0.5), ..RunSpec::default() };
        flags.params.insert("b".into(), 2.0);
        let merged = file.overridden_by(flags);
        assert_eq!(merged.mu0, Some(0.5));
        assert_eq!(merged.tau, Some(4.0));
        assert_eq!(merged.problem.as_deref(), Some("rosenbrock-ls"));
        assert_eq!(merged.params.len(), 2);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(RunSpec::from_json_str(r#"{"problme": "x"}"#).is_err());
    }

    #[test]
    fn resolve_applies_defaults_and_checks() {
        let spec = RunSpec { problem: Some("linear-unbounded".into()), ..RunSpec::default() };
        assert_eq!(spec.resolve().unwrap().config.mu0, 1e-8);
        let spec = RunSpec { problem: Some("nope".into()), ..RunSpec::default() };
        assert!(spec.resolve().is_err());
        let spec = RunSpec { problem: Some("rosenbrock-ls".into()), tau: Some(0.5), ..RunSpec::default() };
        assert!(spec.resolve().is_err());
        let spec = RunSpec { problem: Some("rosenbrock-ls".into()), x0: Some(vec![1.0]), ..RunSpec::default() };
        assert!(spec.resolve().is_err());
    }
}
