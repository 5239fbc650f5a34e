//! Experiment configuration: TOML ingestion, defaults, and itemized
//! validation.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use uhlmann_dmrg::models::SpinChainKind;
use uhlmann_dmrg::truncation::{PolicyKind, TruncationPolicy};

use crate::error::{ValidationIssue, ValidationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    CrossingScan,
    PecComparison,
    DmrgBenchmark,
    GaugeDiagnostics,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::CrossingScan => "crossing_scan",
            ExperimentKind::PecComparison => "pec_comparison",
            ExperimentKind::DmrgBenchmark => "dmrg_benchmark",
            ExperimentKind::GaugeDiagnostics => "gauge_diagnostics",
        }
    }
}

/// Avoided-crossing model and its time traversal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoLevelSection {
    pub coupling: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub points: usize,
    /// Insert `+-1/sqrt(2)` into the grid when they fall inside it.
    pub include_crossings: bool,
    /// Duration of the linear traversal `lambda_min -> lambda_max`.
    pub sweep_duration: f64,
    /// Largest propagation step.
    pub max_dt: f64,
}

impl Default for TwoLevelSection {
    fn default() -> Self {
        Self {
            coupling: 0.1,
            lambda_min: -2.0,
            lambda_max: 2.0,
            points: 401,
            include_crossings: true,
            sweep_duration: 200.0,
            max_dt: 0.01,
        }
    }
}

/// Spin chain scanned over its field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpinChainSection {
    pub kind: SpinChainKind,
    pub sites: usize,
    pub coupling: f64,
    pub field_min: f64,
    pub field_max: f64,
    pub points: usize,
}

impl Default for SpinChainSection {
    fn default() -> Self {
        Self {
            kind: SpinChainKind::Tfim,
            sites: 8,
            coupling: 1.0,
            field_min: 0.6,
            field_max: 1.4,
            points: 17,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DmrgSection {
    pub max_bond: usize,
    pub num_sweeps: usize,
    pub energy_tol: f64,
    pub lanczos_tol: f64,
    pub dense_limit: usize,
    /// Weight of the coherence penalty in the logged objective.
    pub penalty_lambda1: f64,
    /// Weight of the curvature penalty in the logged objective.
    pub penalty_lambda2: f64,
}

impl Default for DmrgSection {
    fn default() -> Self {
        Self {
            max_bond: 4,
            num_sweeps: 20,
            energy_tol: 1e-10,
            lanczos_tol: 1e-11,
            dense_limit: 4096,
            penalty_lambda1: 0.0,
            penalty_lambda2: 0.0,
        }
    }
}

/// A named truncation policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub kind: PolicyKind,
    #[serde(default)]
    pub gamma1: f64,
    #[serde(default)]
    pub gamma2: f64,
    #[serde(default)]
    pub lambda1: f64,
    #[serde(default)]
    pub lambda2: f64,
    #[serde(default)]
    pub max_kept: Option<usize>,
    #[serde(default = "default_cutoff")]
    pub cutoff: f64,
    #[serde(default = "default_true")]
    pub second_order_multiplicity: bool,
}

fn default_cutoff() -> f64 {
    1e-14
}

fn default_true() -> bool {
    true
}

impl PolicyConfig {
    pub fn of_kind(kind: PolicyKind) -> Self {
        Self {
            name: None,
            kind,
            gamma1: 0.0,
            gamma2: 0.0,
            lambda1: 0.0,
            lambda2: 0.0,
            max_kept: None,
            cutoff: default_cutoff(),
            second_order_multiplicity: true,
        }
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.kind.as_str().to_string())
    }

    pub fn to_policy(&self) -> TruncationPolicy {
        TruncationPolicy {
            kind: self.kind,
            gamma1: self.gamma1,
            gamma2: self.gamma2,
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            max_kept: self.max_kept.unwrap_or(usize::MAX),
            cutoff: self.cutoff,
            second_order_multiplicity: self.second_order_multiplicity,
        }
    }
}

/// The four comparison rows: standard, uhlmann, categorified, and the
/// second-order coherence-eigenvalue policy.
pub fn default_policies() -> Vec<PolicyConfig> {
    [
        PolicyKind::Standard,
        PolicyKind::Uhlmann,
        PolicyKind::Categorified,
        PolicyKind::CoherenceEigenvalue2,
    ]
    .into_iter()
    .map(PolicyConfig::of_kind)
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoefficientGrids {
    pub gamma1: Vec<f64>,
    pub gamma2: Vec<f64>,
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
}

impl Default for CoefficientGrids {
    fn default() -> Self {
        Self {
            gamma1: vec![0.0],
            gamma2: vec![0.0],
            lambda1: vec![0.0],
            lambda2: vec![0.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SearchObjective {
    /// Minimize the window energy error.
    #[default]
    EnergyError,
    /// Maximize the smallest window fidelity.
    Fidelity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSection {
    pub enabled: bool,
    pub objective: SearchObjective,
}

/// Region over which the crossing error is measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowSection {
    /// Window centers; defaults to `+-1/sqrt(2)` for the two-level model
    /// and `field = coupling` for spin chains.
    pub centers: Option<Vec<f64>>,
    pub half_width: f64,
}

impl Default for WindowSection {
    fn default() -> Self {
        Self { centers: None, half_width: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkSection {
    pub kind: SpinChainKind,
    pub sites: Vec<usize>,
    pub fields: Vec<f64>,
    pub coupling: f64,
    pub max_bond: usize,
}

impl Default for BenchmarkSection {
    fn default() -> Self {
        Self {
            kind: SpinChainKind::Tfim,
            sites: vec![6, 8, 10],
            fields: vec![0.5, 1.0, 1.5],
            coupling: 1.0,
            max_bond: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsSection {
    pub families: usize,
    pub dim: usize,
    /// Points per random family.
    pub grid_points: usize,
    pub spacing: f64,
    /// Spacing used for the gauge-covariance check.
    pub covariance_spacing: f64,
    /// Grid halvings in the refinement table.
    pub refinement_levels: usize,
    pub base_spacing: f64,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        Self {
            families: 100,
            dim: 3,
            grid_points: 11,
            spacing: 0.05,
            covariance_spacing: 1e-5,
            refinement_levels: 4,
            base_spacing: 0.05,
        }
    }
}

/// A fully defaulted experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub two_level: TwoLevelSection,
    #[serde(default)]
    pub spin_chain: SpinChainSection,
    #[serde(default)]
    pub dmrg: DmrgSection,
    #[serde(default = "default_policies")]
    pub policies: Vec<PolicyConfig>,
    #[serde(default)]
    pub coefficient_grids: CoefficientGrids,
    #[serde(default)]
    pub search: SearchSection,
    #[serde(default)]
    pub window: WindowSection,
    #[serde(default)]
    pub benchmark: BenchmarkSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
}

const TOP_KEYS: &[&str] = &[
    "experiment",
    "seed",
    "output_dir",
    "two_level",
    "spin_chain",
    "dmrg",
    "policies",
    "coefficient_grids",
    "search",
    "window",
    "benchmark",
    "diagnostics",
];

const SECTION_KEYS: &[(&str, &[&str])] = &[
    (
        "two_level",
        &["coupling", "lambda_min", "lambda_max", "points", "include_crossings", "sweep_duration", "max_dt"],
    ),
    ("spin_chain", &["kind", "sites", "coupling", "field_min", "field_max", "points"]),
    (
        "dmrg",
        &["max_bond", "num_sweeps", "energy_tol", "lanczos_tol", "dense_limit", "penalty_lambda1", "penalty_lambda2"],
    ),
    ("coefficient_grids", &["gamma1", "gamma2", "lambda1", "lambda2"]),
    ("search", &["enabled", "objective"]),
    ("window", &["centers", "half_width"]),
    ("benchmark", &["kind", "sites", "fields", "coupling", "max_bond"]),
    (
        "diagnostics",
        &["families", "dim", "grid_points", "spacing", "covariance_spacing", "refinement_levels", "base_spacing"],
    ),
];

const POLICY_KEYS: &[&str] = &[
    "name",
    "kind",
    "gamma1",
    "gamma2",
    "lambda1",
    "lambda2",
    "max_kept",
    "cutoff",
    "second_order_multiplicity",
];

fn issue(field: impl Into<String>, message: impl Into<String>) -> ValidationIssue {
    ValidationIssue { field: field.into(), message: message.into() }
}

fn unknown_keys(table: &toml::Table) -> Vec<ValidationIssue> {
    let mut out = Vec::new();
    for (key, value) in table {
        if !TOP_KEYS.contains(&key.as_str()) {
            out.push(issue(key.clone(), "unknown key"));
            continue;
        }
        if let Some((_, allowed)) = SECTION_KEYS.iter().find(|(s, _)| s == key) {
            if let toml::Value::Table(t) = value {
                for k in t.keys() {
                    if !allowed.contains(&k.as_str()) {
                        out.push(issue(format!("{key}.{k}"), "unknown key"));
                    }
                }
            }
        }
        if key == "policies" {
            if let toml::Value::Array(items) = value {
                for (i, item) in items.iter().enumerate() {
                    if let toml::Value::Table(t) = item {
                        for k in t.keys() {
                            if !POLICY_KEYS.contains(&k.as_str()) {
                                out.push(issue(format!("policies[{i}].{k}"), "unknown key"));
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Parse TOML text into a validated config.
///
/// Unknown keys are all reported together; type errors and semantic
/// violations are itemized the same way. Nothing is partially accepted.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ValidationReport> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| ValidationReport { issues: vec![issue("<document>", e.message().to_string())] })?;
    let unknown = unknown_keys(&table);
    if !unknown.is_empty() {
        return Err(ValidationReport { issues: unknown });
    }
    if !table.contains_key("experiment") {
        return Err(ValidationReport { issues: vec![issue("experiment", "missing required key")] });
    }
    let cfg: ExperimentConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| ValidationReport { issues: vec![issue("<document>", e.message().to_string())] })?;
    cfg.validate()?;
    Ok(cfg)
}

fn check_positive(issues: &mut Vec<ValidationIssue>, field: &str, x: f64) {
    if !(x.is_finite() && x > 0.0) {
        issues.push(issue(field, format!("must be finite and positive, got {x}")));
    }
}

fn check_finite(issues: &mut Vec<ValidationIssue>, field: &str, x: f64) {
    if !x.is_finite() {
        issues.push(issue(field, format!("must be finite, got {x}")));
    }
}

impl ExperimentConfig {
    /// Defaults for `kind`.
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            experiment: kind,
            seed: 0,
            output_dir: None,
            two_level: TwoLevelSection::default(),
            spin_chain: SpinChainSection::default(),
            dmrg: DmrgSection::default(),
            policies: default_policies(),
            coefficient_grids: CoefficientGrids::default(),
            search: SearchSection::default(),
            window: WindowSection::default(),
            benchmark: BenchmarkSection::default(),
            diagnostics: DiagnosticsSection::default(),
        }
    }

    /// Collect every violated invariant.
    pub fn validate(&self) -> Result<(), ValidationReport> {
        let mut issues = Vec::new();
        let tl = &self.two_level;
        check_positive(&mut issues, "two_level.coupling", tl.coupling);
        check_finite(&mut issues, "two_level.lambda_min", tl.lambda_min);
        check_finite(&mut issues, "two_level.lambda_max", tl.lambda_max);
        if !(tl.lambda_max > tl.lambda_min) {
            issues.push(issue("two_level.lambda_max", "must exceed two_level.lambda_min"));
        }
        if tl.points < 3 {
            issues.push(issue("two_level.points", "need at least 3 points"));
        }
        check_positive(&mut issues, "two_level.sweep_duration", tl.sweep_duration);
        check_positive(&mut issues, "two_level.max_dt", tl.max_dt);

        let sc = &self.spin_chain;
        if sc.sites < 2 {
            issues.push(issue("spin_chain.sites", "need at least 2 sites"));
        } else if sc.sites > 12 {
            issues.push(issue("spin_chain.sites", "exact reference limited to 12 sites; use fewer sites"));
        }
        check_finite(&mut issues, "spin_chain.coupling", sc.coupling);
        check_finite(&mut issues, "spin_chain.field_min", sc.field_min);
        check_finite(&mut issues, "spin_chain.field_max", sc.field_max);
        if !(sc.field_max > sc.field_min) {
            issues.push(issue("spin_chain.field_max", "must exceed spin_chain.field_min"));
        }
        if sc.points < 1 {
            issues.push(issue("spin_chain.points", "need at least 1 point"));
        }

        let d = &self.dmrg;
        if d.max_bond == 0 {
            issues.push(issue("dmrg.max_bond", "must be positive"));
        }
        if d.num_sweeps == 0 {
            issues.push(issue("dmrg.num_sweeps", "must be positive"));
        }
        check_positive(&mut issues, "dmrg.energy_tol", d.energy_tol);
        check_positive(&mut issues, "dmrg.lanczos_tol", d.lanczos_tol);
        if d.dense_limit == 0 {
            issues.push(issue("dmrg.dense_limit", "must be positive"));
        }
        check_finite(&mut issues, "dmrg.penalty_lambda1", d.penalty_lambda1);
        check_finite(&mut issues, "dmrg.penalty_lambda2", d.penalty_lambda2);

        if self.policies.is_empty() {
            issues.push(issue("policies", "need at least one policy"));
        }
        let mut labels: Vec<String> = Vec::new();
        for (i, p) in self.policies.iter().enumerate() {
            let label = p.label();
            if label.is_empty() || label.contains(|c: char| c == ',' || c == '"' || c.is_whitespace()) {
                issues.push(issue(format!("policies[{i}].name"), "must be non-empty without commas, quotes or spaces"));
            }
            if labels.contains(&label) {
                issues.push(issue(format!("policies[{i}].name"), format!("duplicate policy label `{label}`")));
            }
            labels.push(label);
            if p.max_kept == Some(0) {
                issues.push(issue(format!("policies[{i}].max_kept"), "must be positive"));
            }
            if let Err(e) = p.to_policy().validate() {
                issues.push(issue(format!("policies[{i}]"), e.to_string()));
            }
        }
        if self.experiment == ExperimentKind::PecComparison && self.policies.first().map(|p| p.kind) != Some(PolicyKind::Standard) {
            issues.push(issue("policies[0].kind", "the comparison baseline must be the standard policy"));
        }

        let g = &self.coefficient_grids;
        for (name, grid) in [("gamma1", &g.gamma1), ("gamma2", &g.gamma2), ("lambda1", &g.lambda1), ("lambda2", &g.lambda2)] {
            let field = format!("coefficient_grids.{name}");
            if grid.is_empty() {
                issues.push(issue(field, "grid is empty"));
            } else if !grid.contains(&0.0) {
                issues.push(issue(
                    field,
                    "grid must contain 0 so the searched policy can never do worse than the standard policy",
                ));
            } else if grid.iter().any(|x| !x.is_finite() || *x < 0.0) {
                issues.push(issue(field, "entries must be finite and non-negative"));
            }
        }

        check_positive(&mut issues, "window.half_width", self.window.half_width);
        if let Some(centers) = &self.window.centers {
            if centers.is_empty() {
                issues.push(issue("window.centers", "need at least one center"));
            }
            for c in centers {
                check_finite(&mut issues, "window.centers", *c);
            }
        }

        if self.experiment == ExperimentKind::PecComparison && issues.is_empty() {
            let grid = uhlmann_dmrg::models::linspace(sc.field_min, sc.field_max, sc.points).unwrap_or_default();
            let centers = self.window_centers();
            if !grid.iter().any(|x| centers.iter().any(|c| (x - c).abs() <= self.window.half_width)) {
                issues.push(issue("window", "no spin_chain grid point lies inside the crossing window"));
            }
        }

        let b = &self.benchmark;
        if b.sites.is_empty() || b.sites.iter().any(|&n| !(2..=12).contains(&n)) {
            issues.push(issue("benchmark.sites", "need site counts between 2 and 12"));
        }
        if b.fields.is_empty() {
            issues.push(issue("benchmark.fields", "need at least one field"));
        }
        for f in &b.fields {
            check_finite(&mut issues, "benchmark.fields", *f);
        }
        check_finite(&mut issues, "benchmark.coupling", b.coupling);
        if b.max_bond == 0 {
            issues.push(issue("benchmark.max_bond", "must be positive"));
        }

        let dg = &self.diagnostics;
        if dg.families == 0 {
            issues.push(issue("diagnostics.families", "must be positive"));
        }
        if !(2..=8).contains(&dg.dim) {
            issues.push(issue("diagnostics.dim", "must lie in 2..=8"));
        }
        if dg.grid_points < 5 {
            issues.push(issue("diagnostics.grid_points", "need at least 5 points"));
        }
        check_positive(&mut issues, "diagnostics.spacing", dg.spacing);
        check_positive(&mut issues, "diagnostics.covariance_spacing", dg.covariance_spacing);
        check_positive(&mut issues, "diagnostics.base_spacing", dg.base_spacing);
        if dg.refinement_levels == 0 || dg.refinement_levels > 8 {
            issues.push(issue("diagnostics.refinement_levels", "must lie in 1..=8"));
        }

        if issues.is_empty() {
            Ok(())
        } else {
            Err(ValidationReport { issues })
        }
    }

    /// Window centers after applying the per-experiment default.
    pub fn window_centers(&self) -> Vec<f64> {
        match &self.window.centers {
            Some(c) => c.clone(),
            None => match self.experiment {
                ExperimentKind::CrossingScan => vec![-(0.5f64.sqrt()), 0.5f64.sqrt()],
                _ => vec![self.spin_chain.coupling],
            },
        }
    }

    /// Canonical JSON of the resolved config, keys sorted.
    pub fn canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        serde_json::to_string(&value).expect("value serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_crossing_config_gets_documented_defaults() {
        let cfg = parse_config("experiment = \"crossing_scan\"\n").unwrap();
        assert_eq!(cfg.two_level.coupling, 0.1);
        assert_eq!((cfg.two_level.lambda_min, cfg.two_level.lambda_max), (-2.0, 2.0));
        assert_eq!(cfg.two_level.points, 401);
        assert_eq!(cfg.policies.len(), 4);
    }

    #[test]
    fn unknown_keys_are_all_named() {
        let err = parse_config(
            "experiment = \"crossing_scan\"\ncolour = 1\n[two_level]\ncouplng = 0.2\n[[policies]]\nkind = \"standard\"\ngama1 = 1.0\n",
        )
        .unwrap_err();
        let fields: Vec<_> = err.issues.iter().map(|i| i.field.as_str()).collect();
        assert_eq!(fields, vec!["colour", "policies[0].gama1", "two_level.couplng"]);
    }

    #[test]
    fn grids_without_zero_are_rejected() {
        let err = parse_config("experiment = \"pec_comparison\"\n[coefficient_grids]\ngamma1 = [0.5, 1.0]\nlambda2 = []\n")
            .unwrap_err();
        assert_eq!(err.issues.len(), 2);
        assert!(err.issues[0].message.contains("contain 0"));
        assert_eq!(err.issues[1].field, "coefficient_grids.lambda2");
    }

    #[test]
    fn semantic_issues_are_itemized() {
        let err = parse_config("experiment = \"crossing_scan\"\n[two_level]\ncoupling = -1.0\npoints = 2\n").unwrap_err();
        let fields: Vec<_> = err.issues.iter().map(|i| i.field.as_str()).collect();
        assert_eq!(fields, vec!["two_level.coupling", "two_level.points"]);
    }

    #[test]
    fn missing_experiment_and_type_errors_are_reported() {
        assert_eq!(parse_config("seed = 3\n").unwrap_err().issues[0].field, "experiment");
        assert!(parse_config("experiment = \"nope\"\n").is_err());
        assert!(parse_config("experiment = \"crossing_scan\"\nseed = \"x\"\n").is_err());
    }

    #[test]
    fn window_must_contain_grid_points() {
        let err = parse_config("experiment = \"pec_comparison\"\n[window]\ncenters = [5.0]\n").unwrap_err();
        assert_eq!(err.issues[0].field, "window");
    }

    #[test]
    fn canonical_json_is_stable() {
        let a = parse_config("experiment = \"dmrg_benchmark\"\nseed = 4\n").unwrap();
        let b = parse_config("seed = 4\nexperiment = \"dmrg_benchmark\"\n").unwrap();
        assert_eq!(a.canonical_json(), b.canonical_json());
    }
}
