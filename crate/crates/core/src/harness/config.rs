//! Per-command configuration, JSON loading with positioned diagnostics, and
//! command-line overrides.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::positivity::{DimSpec, SearchConfig, SearchTarget, SweepConfig};
use crate::{Error, Result};

/// Parse a JSON config; syntax and schema errors carry line and column.
pub fn parse_config<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        let suffix = format!(" at line {} column {}", e.line(), e.column());
        let msg = msg.strip_suffix(&suffix).unwrap_or(&msg);
        Error::Config(format!("{origin}:{}:{}: {msg}", e.line(), e.column()))
    })
}

pub fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text =
                std::fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
            parse_config(&text, &p.display().to_string())
        }
    }
}

/// Values given on the command line; each wins over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub dims: Option<String>,
    pub lambdas: Option<Vec<f64>>,
    pub ns: Option<Vec<f64>>,
    pub tolerance: Option<f64>,
    pub target: Option<SearchTarget>,
}

/// Comma-separated reals; `inf` is accepted.
pub fn parse_list(text: &str, flag: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|item| {
            let item = item.trim();
            match item {
                "inf" | "infinity" => Ok(f64::INFINITY),
                _ => item.parse::<f64>().map_err(|_| Error::Config(format!("{flag}: cannot parse {item:?}"))),
            }
        })
        .collect()
}

/// `"4,6,2x3"`: totals or `d_A x d_B` splits.
pub fn parse_dims(text: &str) -> Result<Vec<DimSpec>> {
    text.split(',')
        .map(|item| {
            let item = item.trim();
            let bad = || Error::Config(format!("--dims: cannot parse {item:?} (expected D or AxB)"));
            match item.split_once(['x', 'X']) {
                Some((a, b)) => {
                    Ok(DimSpec::Split(a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
                }
                None => Ok(DimSpec::Total(item.parse().map_err(|_| bad())?)),
            }
        })
        .collect()
}

fn to_indices(ns: &[f64], flag: &str) -> Result<Vec<u32>> {
    ns.iter()
        .map(|&n| {
            if n.fract() == 0.0 && n >= 1.0 && n <= u32::MAX as f64 {
                Ok(n as u32)
            } else {
                Err(Error::Config(format!("{flag}: {n} is not a positive integer")))
            }
        })
        .collect()
}

fn single<T: Copy>(values: &[T], flag: &str, command: &str) -> Result<T> {
    match values {
        [v] => Ok(*v),
        _ => Err(Error::Config(format!("{command} takes a single {flag} value, got {}", values.len()))),
    }
}

fn unsupported(flag: &str, command: &str) -> Error {
    Error::Config(format!("{flag} has no meaning for {command}"))
}

pub trait ApplyOverrides {
    fn apply(&mut self, o: &Overrides) -> Result<()>;
}

impl ApplyOverrides for SweepConfig {
    fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(s) = o.seed {
            self.master_seed = s;
        }
        if let Some(t) = o.trials {
            self.instances = t;
        }
        if let Some(d) = &o.dims {
            self.dims = parse_dims(d)?;
        }
        if let Some(l) = &o.lambdas {
            self.experimental_lambdas = l.clone();
        }
        if let Some(n) = &o.ns {
            self.n_values = to_indices(n, "--n")?;
        }
        if let Some(t) = o.tolerance {
            self.tolerance = t;
        }
        if o.target.is_some() {
            return Err(unsupported("--target", "gram-sweep"));
        }
        self.validate()
    }
}

impl ApplyOverrides for SearchConfig {
    fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(s) = o.seed {
            self.master_seed = s;
        }
        if let Some(t) = o.trials {
            self.trials = t;
        }
        if let Some(d) = &o.dims {
            self.dims = parse_dims(d)?
                .into_iter()
                .map(|spec| match spec {
                    DimSpec::Split(a, b) => Ok((a, b)),
                    DimSpec::Total(d) => Err(Error::Config(format!("search needs AxB splits, got {d}"))),
                })
                .collect::<Result<_>>()?;
            self.num_subsystems = self.dims.len();
        }
        if let Some(l) = &o.lambdas {
            self.lambda = single(l, "--lambda", "search")?;
        }
        if let Some(n) = &o.ns {
            self.n = single(&to_indices(n, "--n")?, "--n", "search")?;
        }
        if let Some(t) = o.tolerance {
            self.tolerance = t;
        }
        if let Some(t) = o.target {
            self.target = t;
        }
        self.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FermionConfig {
    pub seed: u64,
    /// Random interval sets for the correlator identities.
    pub configurations: u64,
    pub max_intervals: usize,
    pub length: f64,
    pub cutoff: f64,
    /// `λ` values for the vertex representation and the divisibility witness.
    pub lambdas: Vec<f64>,
    /// Renyi indices for the factor `(1+n)/(2n)`; `null` in JSON is not
    /// accepted, use a large value or `--n inf`.
    pub renyi_indices: Vec<f64>,
    pub witness_families: u64,
    /// Sets per witness family drawn from `2..=witness_max_sets`.
    pub witness_max_sets: usize,
    pub witness_max_intervals: usize,
    pub tolerance: f64,
}

impl Default for FermionConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            configurations: 200,
            max_intervals: 6,
            length: 10.0,
            cutoff: 1.0,
            lambdas: vec![0.1, 1.0, 6.0, 10.0],
            renyi_indices: vec![1.0, 2.0, 3.0, 4.0],
            witness_families: 1000,
            witness_max_sets: 4,
            witness_max_intervals: 3,
            tolerance: 1e-10,
        }
    }
}

impl FermionConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.configurations == 0 && self.witness_families == 0 {
            return fail("nothing to do: configurations and witness_families are both 0".into());
        }
        if self.max_intervals == 0 || self.max_intervals > crate::fermion::MAX_WICK_INTERVALS {
            return fail(format!("max_intervals must be in 1..={}", crate::fermion::MAX_WICK_INTERVALS));
        }
        if self.witness_max_sets < 2 || self.witness_max_intervals == 0 {
            return fail("witness families need at least 2 sets of at least 1 interval".into());
        }
        if !(self.length > 0.0 && self.cutoff > 0.0) {
            return fail("length and cutoff must be positive".into());
        }
        if self.lambdas.is_empty() || self.lambdas.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return fail("lambdas must be a non-empty list of positive values".into());
        }
        if self.renyi_indices.iter().any(|n| !(*n > 0.0)) {
            return fail("Renyi indices must be positive".into());
        }
        if !(self.tolerance > 0.0) {
            return fail("tolerance must be positive".into());
        }
        Ok(())
    }
}

impl ApplyOverrides for FermionConfig {
    fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(t) = o.trials {
            self.configurations = t;
        }
        if o.dims.is_some() {
            return Err(unsupported("--dims", "fermion"));
        }
        if o.target.is_some() {
            return Err(unsupported("--target", "fermion"));
        }
        if let Some(l) = &o.lambdas {
            self.lambdas = l.clone();
        }
        if let Some(n) = &o.ns {
            self.renyi_indices = n.clone();
        }
        if let Some(t) = o.tolerance {
            self.tolerance = t;
        }
        self.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoundTripConfig {
    pub p_min: f64,
    pub p_max: f64,
    pub grid_size: usize,
    /// `(grid index, weight)` spikes of the synthetic density.
    pub spikes: Vec<(usize, f64)>,
    pub x_min: f64,
    pub x_max: f64,
    pub samples: usize,
}

impl Default for RoundTripConfig {
    fn default() -> Self {
        Self {
            p_min: 0.05,
            p_max: 20.0,
            grid_size: 60,
            spikes: vec![(17, 1.0), (38, 0.5)],
            x_min: 0.1,
            x_max: 10.0,
            samples: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerLawTriple {
    pub lambda: f64,
    pub n: f64,
    pub central_charge: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KlConfig {
    pub round_trip: RoundTripConfig,
    pub round_trip_tolerance: f64,
    pub gapped_masses: Vec<f64>,
    pub decay_tolerance: f64,
    pub power_law: Vec<PowerLawTriple>,
    pub power_law_tolerance: f64,
    /// Relative sign threshold of the derivative checks.
    pub derivative_tolerance: f64,
    /// Optional `x,S` CSV fitted and checked alongside the built-in curves.
    pub curve_csv: Option<PathBuf>,
    pub curve_lambda: f64,
}

impl Default for KlConfig {
    fn default() -> Self {
        Self {
            round_trip: RoundTripConfig::default(),
            round_trip_tolerance: 1e-6,
            gapped_masses: vec![0.5, 1.0, 2.0],
            decay_tolerance: 0.02,
            power_law: vec![
                PowerLawTriple { lambda: 6.0, n: 1.0, central_charge: 2.0 },
                PowerLawTriple { lambda: 3.0, n: 2.0, central_charge: 4.0 },
                PowerLawTriple { lambda: 12.0, n: 1.0, central_charge: 1.5 },
            ],
            power_law_tolerance: 0.05,
            derivative_tolerance: 1e-6,
            curve_csv: None,
            curve_lambda: 1.0,
        }
    }
}

impl KlConfig {
    pub fn validate(&self) -> Result<()> {
        let rt = &self.round_trip;
        if rt.spikes.iter().any(|&(j, w)| j >= rt.grid_size || !(w >= 0.0 && w.is_finite())) {
            return Err(Error::Config("round_trip spikes need grid indices below grid_size and weights ≥ 0".into()));
        }
        if rt.spikes.iter().all(|s| s.1 == 0.0) {
            return Err(Error::Config("round_trip density has no weight".into()));
        }
        if !(rt.x_min > 0.0 && rt.x_max > rt.x_min) || rt.samples < 4 {
            return Err(Error::Config("round_trip needs 0 < x_min < x_max and at least 4 samples".into()));
        }
        if !(self.curve_lambda > 0.0) {
            return Err(Error::Config("curve_lambda must be positive".into()));
        }
        Ok(())
    }
}

impl ApplyOverrides for KlConfig {
    fn apply(&mut self, o: &Overrides) -> Result<()> {
        for (set, flag) in [
            (o.seed.is_some(), "--seed"),
            (o.trials.is_some(), "--trials"),
            (o.dims.is_some(), "--dims"),
            (o.ns.is_some(), "--n"),
            (o.lambdas.is_some(), "--lambda"),
            (o.target.is_some(), "--target"),
        ] {
            if set {
                return Err(unsupported(flag, "kl (deterministic; edit the config file instead)"));
            }
        }
        if let Some(t) = o.tolerance {
            self.round_trip_tolerance = t;
        }
        self.validate()
    }
}

/// Cross-ratio function selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Unit,
    /// `(1−x)^{2q}`, expected to fail the derivative check.
    Violator,
    /// Two-column CSV `x,F`.
    Table {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CftConfig {
    pub seed: u64,
    pub central_charge: f64,
    pub n_values: Vec<u32>,
    pub function: FunctionSpec,
    pub grid_points: usize,
    pub pairs: usize,
    /// Pairs are drawn from `[margin, 1 − margin]`.
    pub margin: f64,
    pub tolerance: f64,
    pub symmetry_tolerance: f64,
    /// Endpoints `a₁ < b₁ < a₂ < b₂` for the reported entropy example.
    pub endpoints: [f64; 4],
}

impl Default for CftConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            central_charge: 1.0,
            n_values: vec![2],
            function: FunctionSpec::Unit,
            grid_points: 1000,
            pairs: 1000,
            margin: 1e-3,
            tolerance: 1e-10,
            symmetry_tolerance: 1e-9,
            endpoints: [0.0, 1.0, 2.0, 3.0],
        }
    }
}

impl CftConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.central_charge > 0.0) {
            return Err(Error::Config("central_charge must be positive".into()));
        }
        if self.n_values.is_empty() || self.n_values.iter().any(|&n| n < 2) {
            return Err(Error::Config("n_values must be integers ≥ 2".into()));
        }
        if self.grid_points == 0 || self.pairs == 0 {
            return Err(Error::Config("grid_points and pairs must be positive".into()));
        }
        if !(self.margin > 0.0 && self.margin < 0.5) {
            return Err(Error::Config("margin must be in (0, 0.5)".into()));
        }
        Ok(())
    }
}

impl ApplyOverrides for CftConfig {
    fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(t) = o.trials {
            self.pairs = t as usize;
        }
        if let Some(n) = &o.ns {
            self.n_values = to_indices(n, "--n")?;
        }
        if let Some(t) = o.tolerance {
            self.tolerance = t;
        }
        for (set, flag) in
            [(o.dims.is_some(), "--dims"), (o.lambdas.is_some(), "--lambda"), (o.target.is_some(), "--target")]
        {
            if set {
                return Err(unsupported(flag, "cft"));
            }
        }
        self.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn malformed_json_reports_position() {
        let err = parse_config::<SweepConfig>("{\n  \"instances\": 3,\n  oops\n}", "cfg.json").unwrap_err();
        let Error::Config(msg) = err else { panic!() };
        assert!(msg.starts_with("cfg.json:3:3:"), "{msg}");
        let err = parse_config::<SweepConfig>("{\"instancez\": 3}", "c").unwrap_err();
        assert!(err.to_string().contains("c:1:"));
    }

    #[test]
    fn dims_and_lists() {
        assert_eq!(parse_dims("4, 2x3").unwrap(), vec![DimSpec::Total(4), DimSpec::Split(2, 3)]);
        assert!(parse_dims("2y3").is_err());
        assert_eq!(parse_list("1,inf", "--n").unwrap(), vec![1.0, f64::INFINITY]);
        assert!(parse_list("1,a", "--n").is_err());
    }

    #[test]
    fn overrides_apply() {
        let mut s = SearchConfig::default();
        let o = Overrides { dims: Some("3x2,2x3".into()), trials: Some(5), ..Default::default() };
        s.apply(&o).unwrap();
        assert_eq!((s.num_subsystems, s.trials), (2, 5));
        let o = Overrides { lambdas: Some(vec![1.0, 2.0]), ..Default::default() };
        assert!(s.apply(&o).is_err());
        let mut k = KlConfig::default();
        assert!(k.apply(&Overrides { seed: Some(1), ..Default::default() }).is_err());
        let mut g = SweepConfig::default();
        assert!(g.apply(&Overrides { ns: Some(vec![2.5]), ..Default::default() }).is_err());
    }

    #[test]
    fn function_spec_json() {
        let c: CftConfig = parse_config(r#"{"function": {"table": {"path": "f.csv"}}}"#, "c").unwrap();
        assert_eq!(c.function, FunctionSpec::Table { path: "f.csv".into() });
        let c: CftConfig = parse_config(r#"{"function": "violator"}"#, "c").unwrap();
        assert_eq!(c.function, FunctionSpec::Violator);
    }
}
