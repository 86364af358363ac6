//! Randomized sweep of the integer-`n` Gram inequalities, which hold for
//! every state; a failure here is a numerical bug, not physics.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gram::{self, check_psd, schur_power, THEOREM_TOL};
use crate::modular::{purify, DensityMatrix};
use crate::random::trial_rng;
use crate::reflected::{self, SubsystemSplit};
use crate::{Error, Result};

/// Total dimension `d` (split drawn at random per subsystem) or a fixed
/// `d_A x d_B` split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DimSpec {
    Total(usize),
    Split(usize, usize),
}

impl DimSpec {
    pub fn dim(&self) -> usize {
        match *self {
            DimSpec::Total(d) => d,
            DimSpec::Split(a, b) => a * b,
        }
    }

    /// Splits `(a, b)` with `a, b ≥ 2`, or the fixed split.
    pub fn factorizations(&self) -> Vec<(usize, usize)> {
        match *self {
            DimSpec::Split(a, b) => vec![(a, b)],
            DimSpec::Total(d) => (2..d).filter(|a| d % a == 0 && d / a >= 2).map(|a| (a, d / a)).collect(),
        }
    }
}

fn default_dims() -> Vec<DimSpec> {
    [4, 6, 8, 9, 16].into_iter().map(DimSpec::Total).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub instances: u64,
    pub master_seed: u64,
    pub dims: Vec<DimSpec>,
    /// Number of subsystems `m + 1` per instance, drawn uniformly.
    pub subsystem_counts: Vec<usize>,
    pub n_values: Vec<u32>,
    /// Integer Schur powers checked on each Gram matrix.
    pub schur_powers: Vec<u32>,
    /// Extra `λ ≠ n − 1` values; reported, never failing.
    pub experimental_lambdas: Vec<f64>,
    pub tolerance: f64,
    pub spectrum_floor: f64,
    pub max_recorded: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            instances: 1000,
            master_seed: 0,
            dims: default_dims(),
            subsystem_counts: vec![2, 3, 4],
            n_values: vec![2, 3, 4, 5],
            schur_powers: vec![2, 3],
            experimental_lambdas: Vec::new(),
            tolerance: THEOREM_TOL,
            spectrum_floor: 1e-6,
            max_recorded: 16,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.instances == 0 {
            return fail("instances must be at least 1".into());
        }
        if self.dims.is_empty() || self.subsystem_counts.is_empty() || self.n_values.is_empty() {
            return fail("dims, subsystem_counts and n_values must be non-empty".into());
        }
        for d in &self.dims {
            if d.factorizations().is_empty() || d.factorizations().iter().any(|&(a, b)| a == 0 || b == 0) {
                return fail(format!("dimension {d:?} has no split with both factors ≥ 2"));
            }
        }
        if let Some(c) = self.subsystem_counts.iter().find(|&&c| c < 2) {
            return fail(format!("subsystem count {c} < 2"));
        }
        if let Some(n) = self.n_values.iter().find(|&&n| n < 2) {
            return fail(format!("Renyi index {n} < 2; the theorem covers n ≥ 2"));
        }
        if self.schur_powers.contains(&0) {
            return fail("Schur powers must be ≥ 1".into());
        }
        if let Some(l) = self.experimental_lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return fail(format!("lambda {l} must be positive"));
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return fail(format!("tolerance must be in (0, 1), got {}", self.tolerance));
        }
        let dmax = self.dims.iter().map(DimSpec::dim).max().unwrap_or(0);
        if !(self.spectrum_floor >= 0.0 && self.spectrum_floor * (dmax as f64) < 1.0) {
            return fail(format!("spectrum_floor {} infeasible", self.spectrum_floor));
        }
        Ok(())
    }
}

/// One Gram matrix checked in the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCheck {
    pub instance: u64,
    pub dim: usize,
    pub splits: Vec<(usize, usize)>,
    pub n: u32,
    pub lambda: f64,
    /// 1 for the plain Gram matrix, otherwise the Schur power.
    pub schur_power: u32,
    pub min_eigenvalue: f64,
    pub spectral_norm: f64,
    pub slack: f64,
    pub passed: bool,
    pub witness: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlackStats {
    pub n: u32,
    pub lambda: f64,
    pub schur_power: u32,
    pub checks: u64,
    pub failures: u64,
    pub min_slack: f64,
    pub min_slack_instance: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config: SweepConfig,
    pub instances_run: u64,
    pub checks_run: u64,
    pub failures: u64,
    pub passed: bool,
    /// Theorem checks grouped by `(n, schur_power)`.
    pub by_index: Vec<SlackStats>,
    /// `e^{−λ S_n}` with `λ ≠ n−1`; failures here are not theorem violations.
    pub experimental: Vec<SlackStats>,
    /// Failing theorem checks, most negative first.
    pub failing: Vec<SweepCheck>,
    /// Every plain (`schur_power = 1`) theorem check, in instance order.
    pub rows: Vec<SweepCheck>,
}

struct InstanceResult {
    theorem: Vec<SweepCheck>,
    experimental: Vec<SweepCheck>,
}

fn run_instance(cfg: &SweepConfig, index: u64) -> Result<InstanceResult> {
    let mut rng = trial_rng(cfg.master_seed, index);
    let spec = cfg.dims[rng.random_range(0..cfg.dims.len())];
    let count = cfg.subsystem_counts[rng.random_range(0..cfg.subsystem_counts.len())];
    let options = spec.factorizations();
    let dim = spec.dim();
    let rho = DensityMatrix::random(&mut rng, dim, cfg.spectrum_floor)?;
    let psi = purify(&rho)?;
    let splits: Vec<SubsystemSplit> = (0..count)
        .map(|i| {
            let (a, b) = options[rng.random_range(0..options.len())];
            SubsystemSplit::random(&mut rng, format!("A{}", i + 1), a, b)
        })
        .collect();
    let shape: Vec<(usize, usize)> = splits.iter().map(|s| (s.dim_a, s.dim_b)).collect();
    let table = reflected::reflected_table(&psi, &splits)?;

    let check = |g: &gram::GramRecord, power: u32| -> Result<SweepCheck> {
        let v = check_psd(g, cfg.tolerance)?;
        Ok(SweepCheck {
            instance: index,
            dim,
            splits: shape.clone(),
            n: g.n,
            lambda: g.lambda,
            schur_power: power,
            min_eigenvalue: v.min_eigenvalue,
            spectral_norm: v.spectral_norm,
            slack: g.relative_slack(),
            passed: v.passed,
            witness: v.witness,
        })
    };
    let mut theorem = Vec::new();
    let mut experimental = Vec::new();
    for &n in &cfg.n_values {
        let g = gram::gram_from_reflected(&table, n, None)?;
        theorem.push(check(&g, 1)?);
        for &s in &cfg.schur_powers {
            if s > 1 {
                theorem.push(check(&schur_power(&g, s)?, s)?);
            }
        }
        for &lambda in &cfg.experimental_lambdas {
            experimental.push(check(&gram::gram_from_reflected(&table, n, Some(lambda))?, 1)?);
        }
    }
    Ok(InstanceResult { theorem, experimental })
}

fn group(checks: &[&SweepCheck]) -> Vec<SlackStats> {
    let mut out: Vec<SlackStats> = Vec::new();
    for c in checks {
        let slot = out.iter_mut().find(|s| {
            s.n == c.n
                && s.schur_power == c.schur_power
                && s.lambda.to_bits() == (c.lambda / c.schur_power as f64).to_bits()
        });
        match slot {
            Some(s) => {
                s.checks += 1;
                s.failures += u64::from(!c.passed);
                if c.slack < s.min_slack {
                    s.min_slack = c.slack;
                    s.min_slack_instance = c.instance;
                }
            }
            None => out.push(SlackStats {
                n: c.n,
                lambda: c.lambda / c.schur_power as f64,
                schur_power: c.schur_power,
                checks: 1,
                failures: u64::from(!c.passed),
                min_slack: c.slack,
                min_slack_instance: c.instance,
            }),
        }
    }
    out
}

/// Run the sweep on the current rayon pool; results are merged in instance
/// order, so the report does not depend on the thread count.
pub fn theorem_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let results: Vec<InstanceResult> =
        (0..cfg.instances).into_par_iter().map(|i| run_instance(cfg, i)).collect::<Result<_>>()?;
    let theorem: Vec<&SweepCheck> = results.iter().flat_map(|r| &r.theorem).collect();
    let experimental: Vec<&SweepCheck> = results.iter().flat_map(|r| &r.experimental).collect();
    let mut failing: Vec<SweepCheck> = theorem.iter().filter(|c| !c.passed).map(|c| (*c).clone()).collect();
    let failures = failing.len() as u64;
    failing.sort_by(|a, b| a.slack.total_cmp(&b.slack).then(a.instance.cmp(&b.instance)));
    failing.truncate(cfg.max_recorded);
    let rows = theorem.iter().filter(|c| c.schur_power == 1).map(|c| (*c).clone()).collect();
    Ok(SweepReport {
        config: cfg.clone(),
        instances_run: cfg.instances,
        checks_run: theorem.len() as u64,
        failures,
        passed: failures == 0,
        by_index: group(&theorem),
        experimental: group(&experimental),
        failing,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorizations() {
        assert_eq!(DimSpec::Total(4).factorizations(), vec![(2, 2)]);
        assert_eq!(DimSpec::Total(8).factorizations(), vec![(2, 4), (4, 2)]);
        assert!(DimSpec::Total(7).factorizations().is_empty());
        assert_eq!(DimSpec::Split(1, 4).factorizations(), vec![(1, 4)]);
    }

    #[test]
    fn config_checks() {
        assert!(SweepConfig::default().validate().is_ok());
        let bad = SweepConfig { dims: vec![DimSpec::Total(5)], ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = SweepConfig { n_values: vec![1], ..Default::default() };
        assert!(bad.validate().is_err());
        let text = r#"{"dims": [4, [2, 3]], "instances": 3}"#;
        let cfg: SweepConfig = serde_json::from_str(text).unwrap();
        assert_eq!(cfg.dims, vec![DimSpec::Total(4), DimSpec::Split(2, 3)]);
        assert!(serde_json::from_str::<SweepConfig>(r#"{"instance": 3}"#).is_err());
    }

    #[test]
    fn small_sweep_passes_and_counts() {
        let cfg = SweepConfig {
            instances: 30,
            dims: vec![DimSpec::Split(2, 2)],
            subsystem_counts: vec![3],
            n_values: vec![2, 3],
            experimental_lambdas: vec![0.5],
            ..Default::default()
        };
        let r = theorem_sweep(&cfg).unwrap();
        assert!(r.passed);
        assert_eq!(r.instances_run, 30);
        // per instance: 2 n values x (plain + Schur 2 + Schur 3)
        assert_eq!(r.checks_run, 30 * 2 * 3);
        assert_eq!(r.rows.len(), 60);
        assert_eq!(r.by_index.len(), 6);
        assert_eq!(r.experimental.iter().map(|s| s.checks).sum::<u64>(), 60);
    }
}
