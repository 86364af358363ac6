use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::divisibility::{divisibility_matrix, DivisibilityRecord};
use super::gram::{self, GramRecord};
use crate::json::ComplexMatrixJson;
use crate::linalg::{self, RMatrix};
use crate::modular::{purify, DensityMatrix, PurifiedState};
use crate::random::trial_rng;
use crate::reflected::{self, ReflectedDensity, SubsystemSplit};
use crate::{Error, Result};

/// Which inequality family a search probes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchTarget {
    /// Proven `tr ρⁿ` Gram matrices; any violation is a numerics bug.
    IntegerN,
    /// Entries `e^{-λ S}` with the von Neumann entropy.
    EntropyN1,
    /// Infinite divisibility (`s → 0`), via `B` unless `literal_s` is set.
    SchurSFraction,
}

fn default_tolerance() -> f64 {
    1e-6
}
fn default_n() -> u32 {
    2
}
fn default_lambda() -> f64 {
    1.0
}
fn default_b_index() -> u32 {
    1
}
fn default_floor() -> f64 {
    1e-6
}
fn default_max_recorded() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// `(d_A, d_B)` per subsystem; every product must be the same `d`.
    pub dims: Vec<(usize, usize)>,
    pub num_subsystems: usize,
    pub trials: u64,
    pub master_seed: u64,
    pub target: SearchTarget,
    /// A trial counts as a violation when the relative slack is below
    /// `-tolerance`.
    pub tolerance: f64,
    /// Renyi index for `integer_n` and for the base Gram matrix of a
    /// literal `schur_s_fraction` power.
    pub n: u32,
    /// Renyi index of the entropies in the `B` matrix; 1 is von Neumann.
    pub b_index: u32,
    /// `λ` in `e^{-λ S}` for `entropy_n1`.
    pub lambda: f64,
    /// Literal entrywise power for `schur_s_fraction` instead of the `B` test.
    pub literal_s: Option<f64>,
    pub spectrum_floor: f64,
    /// Violations kept in full in the report (the most negative first).
    pub max_recorded: usize,
}

impl Default for SearchConfig {
    /// Three `2x2` splits of `d = 4` in entropy mode, 1000 trials.
    fn default() -> Self {
        Self::uniform(2, 2, 3, SearchTarget::EntropyN1)
    }
}

impl SearchConfig {
    /// `count` copies of the same split shape.
    pub fn uniform(dim_a: usize, dim_b: usize, count: usize, target: SearchTarget) -> Self {
        Self {
            dims: vec![(dim_a, dim_b); count],
            num_subsystems: count,
            trials: 1000,
            master_seed: 0,
            target,
            tolerance: default_tolerance(),
            n: default_n(),
            b_index: default_b_index(),
            lambda: default_lambda(),
            literal_s: None,
            spectrum_floor: default_floor(),
            max_recorded: default_max_recorded(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dims.first().map_or(0, |(a, b)| a * b)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if self.num_subsystems == 0 || self.dims.len() != self.num_subsystems {
            return fail(format!("num_subsystems = {} but {} dims were given", self.num_subsystems, self.dims.len()));
        }
        let d = self.dim();
        if d < 2 || self.dims.iter().any(|&(a, b)| a == 0 || b == 0 || a * b != d) {
            return fail(format!("inconsistent subsystem dims {:?}", self.dims));
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return fail(format!("tolerance must be in (0, 1), got {}", self.tolerance));
        }
        if self.n == 0 || (self.target == SearchTarget::IntegerN && self.n < 2) {
            return fail(format!("invalid Renyi index n = {} for {:?}", self.n, self.target));
        }
        if self.b_index == 0 {
            return fail("b_index must be at least 1".into());
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return fail(format!("lambda must be positive, got {}", self.lambda));
        }
        if let Some(s) = self.literal_s {
            if !(s > 0.0 && s.is_finite()) {
                return fail(format!("literal_s must be positive, got {s}"));
            }
        }
        if !(self.spectrum_floor >= 0.0 && self.spectrum_floor * (d as f64) < 1.0) {
            return fail(format!("spectrum_floor {} is infeasible for d = {d}", self.spectrum_floor));
        }
        Ok(())
    }
}

/// Everything needed to rebuild a trial without the random stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchInstance {
    pub state: PurifiedState,
    pub splits: Vec<SubsystemSplit>,
    /// `β` of each split relative to `state` (informational).
    pub betas: Vec<ComplexMatrixJson>,
}

impl SearchInstance {
    pub fn draw(cfg: &SearchConfig, trial: u64) -> Result<Self> {
        let mut rng = trial_rng(cfg.master_seed, trial);
        let rho = DensityMatrix::random(&mut rng, cfg.dim(), cfg.spectrum_floor)?;
        let state = purify(&rho)?;
        let splits: Vec<SubsystemSplit> = cfg
            .dims
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| SubsystemSplit::random(&mut rng, format!("A{}", i + 1), a, b))
            .collect();
        let betas =
            splits.iter().map(|s| s.beta(&state).map(|b| ComplexMatrixJson::from(&b))).collect::<Result<_>>()?;
        Ok(Self { state, splits, betas })
    }
}

/// Evaluation of one instance under one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    /// `min eigenvalue / ‖M‖₂` of the tested matrix (Gram or `B`).
    pub slack: f64,
    pub gram: Option<GramRecord>,
    pub divisibility: Option<DivisibilityRecord>,
    /// Eigenvector of the smallest eigenvalue (sign fixed so the first
    /// nonzero entry is positive).
    pub witness: Vec<f64>,
}

fn witness_of(m: &RMatrix) -> Vec<f64> {
    let (_, vecs) = linalg::symmetric_eigen(m);
    let mut w: Vec<f64> = vecs.column(0).iter().copied().collect();
    if w.iter().find(|x| x.abs() > 1e-12).is_some_and(|&x| x < 0.0) {
        w.iter_mut().for_each(|x| *x = -*x);
    }
    w
}

fn single_entropies(state: &PurifiedState, splits: &[SubsystemSplit], n: u32) -> Result<Vec<f64>> {
    let rho = state.reduced_first();
    splits.iter().map(|s| reflected::renyi_entropy(&linalg::hermitian_eigenvalues(&s.reduce(&rho)), n)).collect()
}

fn entropy_table(table: &[Vec<ReflectedDensity>], n: u32) -> Result<RMatrix> {
    gram::entropy_table(table, n)
}

pub fn evaluate(cfg: &SearchConfig, instance: &SearchInstance) -> Result<TrialOutcome> {
    let table = reflected::reflected_table(&instance.state, &instance.splits)?;
    let from_gram = |g: GramRecord| TrialOutcome {
        slack: g.relative_slack(),
        witness: witness_of(&g.entries),
        gram: Some(g),
        divisibility: None,
    };
    match (cfg.target, cfg.literal_s) {
        (SearchTarget::IntegerN, _) => Ok(from_gram(gram::gram_from_reflected(&table, cfg.n, None)?)),
        (SearchTarget::EntropyN1, _) => Ok(from_gram(gram::gram_from_reflected(&table, 1, Some(cfg.lambda))?)),
        (SearchTarget::SchurSFraction, Some(s)) => {
            let base = gram::gram_from_reflected(&table, cfg.n, None)?;
            Ok(from_gram(gram::fractional_power(&base, s)?))
        }
        (SearchTarget::SchurSFraction, None) => {
            let s = entropy_table(&table, cfg.b_index)?;
            let singles = single_entropies(&instance.state, &instance.splits, cfg.b_index)?;
            let rec = divisibility_matrix(&s, Some(&singles))?;
            Ok(TrialOutcome {
                slack: rec.relative_slack(),
                witness: witness_of(&rec.b_matrix),
                gram: None,
                divisibility: Some(rec),
            })
        }
    }
}

/// A recorded violating trial; serialises to a self-contained fixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub trial: u64,
    pub target: SearchTarget,
    pub n: u32,
    #[serde(default = "default_b_index")]
    pub b_index: u32,
    pub lambda: f64,
    pub literal_s: Option<f64>,
    pub instance: SearchInstance,
    pub outcome: TrialOutcome,
}

impl Violation {
    /// Config fragment that reproduces the evaluation of this instance.
    pub fn replay_config(&self) -> SearchConfig {
        let dims = self.instance.splits.iter().map(|s| (s.dim_a, s.dim_b)).collect::<Vec<_>>();
        SearchConfig {
            num_subsystems: dims.len(),
            dims,
            target: self.target,
            n: self.n,
            b_index: self.b_index,
            lambda: self.lambda,
            literal_s: self.literal_s,
            ..SearchConfig::uniform(1, 1, 0, self.target)
        }
    }

    /// Recompute the slack from the stored instance.
    pub fn replay(&self) -> Result<f64> {
        Ok(evaluate(&self.replay_config(), &self.instance)?.slack)
    }

    /// True when the stored instance still violates by more than
    /// `10 * tolerance`.
    pub fn reverifies(&self, tolerance: f64) -> Result<bool> {
        Ok(self.replay()? < -10.0 * tolerance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    NoneFound,
    Found,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlackSummary {
    pub min_slack: f64,
    pub min_slack_trial: u64,
    pub mean_slack: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub config: SearchConfig,
    pub status: SearchStatus,
    pub trials_run: u64,
    pub violation_count: u64,
    pub first_violation_trial: Option<u64>,
    /// Trial indices of every violation, ascending.
    pub violating_trials: Vec<u64>,
    pub summary: SlackSummary,
    /// Up to `max_recorded` full instances, most negative slack first.
    pub violations: Vec<Violation>,
}

/// Run the randomized search. Trials are evaluated in parallel on the
/// current rayon pool and merged by trial index.
pub fn counterexample_search(cfg: &SearchConfig) -> Result<SearchReport> {
    cfg.validate()?;
    let threshold = -cfg.tolerance;
    let slacks: Vec<(u64, f64)> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let inst = SearchInstance::draw(cfg, t)?;
            Ok((t, evaluate(cfg, &inst)?.slack))
        })
        .collect::<Result<_>>()?;

    let violating_trials: Vec<u64> = slacks.iter().filter(|(_, s)| *s < threshold).map(|(t, _)| *t).collect();
    let (min_slack_trial, min_slack) =
        slacks.iter().copied().reduce(|a, b| if b.1 < a.1 { b } else { a }).expect("trials ≥ 1");
    let mean_slack = slacks.iter().map(|(_, s)| s).sum::<f64>() / slacks.len() as f64;

    let mut ranked: Vec<(u64, f64)> = slacks.iter().copied().filter(|(_, s)| *s < threshold).collect();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    ranked.truncate(cfg.max_recorded);
    let violations = ranked
        .par_iter()
        .map(|&(trial, _)| {
            let instance = SearchInstance::draw(cfg, trial)?;
            let outcome = evaluate(cfg, &instance)?;
            Ok(Violation {
                trial,
                target: cfg.target,
                n: cfg.n,
                b_index: cfg.b_index,
                lambda: cfg.lambda,
                literal_s: cfg.literal_s,
                instance,
                outcome,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SearchReport {
        config: cfg.clone(),
        status: if violating_trials.is_empty() { SearchStatus::NoneFound } else { SearchStatus::Found },
        trials_run: cfg.trials,
        violation_count: violating_trials.len() as u64,
        first_violation_trial: violating_trials.first().copied(),
        violating_trials,
        summary: SlackSummary { min_slack, min_slack_trial, mean_slack, threshold },
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let mut cfg = SearchConfig::uniform(2, 2, 3, SearchTarget::IntegerN);
        assert!(cfg.validate().is_ok());
        cfg.dims[1] = (3, 2);
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let mut cfg = SearchConfig::uniform(2, 2, 3, SearchTarget::IntegerN);
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
        cfg.trials = 1;
        cfg.n = 1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn integer_n_control_is_clean() {
        let mut cfg = SearchConfig::uniform(2, 2, 3, SearchTarget::IntegerN);
        cfg.trials = 40;
        cfg.master_seed = 5;
        let report = counterexample_search(&cfg).unwrap();
        assert_eq!(report.status, SearchStatus::NoneFound);
        assert_eq!(report.trials_run, 40);
        assert!(report.summary.min_slack >= -1e-10);
    }

    #[test]
    fn search_is_deterministic() {
        let mut cfg = SearchConfig::uniform(3, 2, 3, SearchTarget::EntropyN1);
        cfg.trials = 30;
        cfg.master_seed = 9;
        let a = serde_json::to_string(&counterexample_search(&cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&counterexample_search(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn stored_instance_replays_exactly() {
        let mut cfg = SearchConfig::uniform(2, 3, 3, SearchTarget::SchurSFraction);
        cfg.master_seed = 3;
        let inst = SearchInstance::draw(&cfg, 11).unwrap();
        let outcome = evaluate(&cfg, &inst).unwrap();
        let v = Violation {
            trial: 11,
            target: cfg.target,
            n: cfg.n,
            b_index: 1,
            lambda: cfg.lambda,
            literal_s: None,
            instance: inst,
            outcome,
        };
        let text = serde_json::to_string(&v).unwrap();
        let back: Violation = serde_json::from_str(&text).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.replay().unwrap(), v.outcome.slack);
    }
}
