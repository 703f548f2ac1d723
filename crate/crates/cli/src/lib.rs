//! Problem-spec ingestion, analysis orchestration and report emission.
//!
//! A problem spec is a single JSON document (strict schema, versioned with
//! `spec_version: 1`) naming an algebra, a Gram matrix, the invariant
//! field X, a profile function phi and the tasks to run. Reports come in
//! a human text format and a machine (JSON) format that round-trips
//! losslessly and is byte-deterministic for a fixed (spec, seed).

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use finsler_core::{
    admissibility_scaling, catalog, commutation_check, converse_probe, exp_derivation,
    field_invariance_check, homomorphism_residual, isometry_invariance_check, k_prime,
    lift_to_group, max_admissible_b, random_orthogonal, regularity_margin, AutomorphismMatrix,
    ConverseOutcome, CoreError, FinslerStructure, InnerProduct, InvariantVectorField,
    LieAlgebraSpec, MatrixGroupModel, PhiFunction, PhiKind, CATALOG_NAMES,
};

pub const SPEC_VERSION: u32 = 1;

/// Default ceilings for the verdicts; overrides looser than these are
/// flagged in the report.
pub const DEFAULT_INVARIANCE_TOL: f64 = 1e-8;
pub const DEFAULT_HOMOMORPHISM_TOL: f64 = 1e-9;
pub const DEFAULT_FIELD_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error at {path}: {reason}")]
    Schema { path: String, reason: String },
    #[error(transparent)]
    Core(#[from] CoreError),
}

// ---------------------------------------------------------------------
// problem spec
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BracketEntry {
    /// 1-based basis indices with i < j.
    pub i: usize,
    pub j: usize,
    pub coeffs: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CustomAlgebra {
    pub dim: usize,
    pub brackets: Vec<BracketEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum AlgebraSpec {
    Catalog(String),
    Custom(CustomAlgebra),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum GramSpec {
    Named(String),
    Matrix(Vec<Vec<f64>>),
}

impl Default for GramSpec {
    fn default() -> Self {
        GramSpec::Named("identity".into())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum TaskName {
    Validate,
    Regularity,
    Norms,
    Convexity,
    Symmetry,
    Invariance,
    Scaling,
    Lift,
    All,
}

impl TaskName {
    pub fn label(&self) -> &'static str {
        match self {
            TaskName::Validate => "validate",
            TaskName::Regularity => "regularity",
            TaskName::Norms => "norms",
            TaskName::Convexity => "convexity",
            TaskName::Symmetry => "symmetry",
            TaskName::Invariance => "invariance",
            TaskName::Scaling => "scaling",
            TaskName::Lift => "lift",
            TaskName::All => "all",
        }
    }

    /// Dependency-ordered expansion of `all`.
    pub fn all_tasks() -> Vec<TaskName> {
        vec![
            TaskName::Validate,
            TaskName::Regularity,
            TaskName::Norms,
            TaskName::Convexity,
            TaskName::Symmetry,
            TaskName::Invariance,
            TaskName::Scaling,
            TaskName::Lift,
        ]
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invariance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub homomorphism: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field_invariance: Option<f64>,
}

fn default_tasks() -> Vec<TaskName> {
    vec![TaskName::All]
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub spec_version: u32,
    pub algebra: AlgebraSpec,
    #[serde(default)]
    pub gram: GramSpec,
    pub x: Vec<f64>,
    pub phi: PhiKind,
    #[serde(default = "default_tasks")]
    pub tasks: Vec<TaskName>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub allow_inadmissible: bool,
}

/// Parse and schema-validate a problem spec from UTF-8 text.
pub fn parse_spec(text: &str) -> Result<ProblemSpec, CliError> {
    let spec: ProblemSpec =
        serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    if spec.spec_version != SPEC_VERSION {
        return Err(CliError::Schema {
            path: "spec_version".into(),
            reason: format!("expected {SPEC_VERSION}, got {}", spec.spec_version),
        });
    }
    // semantic checks with precise paths
    let dim = match &spec.algebra {
        AlgebraSpec::Catalog(name) => match catalog(name) {
            Some(entry) => entry.algebra.dim(),
            None => {
                return Err(CliError::Schema {
                    path: "algebra".into(),
                    reason: format!(
                        "unknown catalog name `{name}` (known: {})",
                        CATALOG_NAMES.join(", ")
                    ),
                })
            }
        },
        AlgebraSpec::Custom(c) => {
            if c.dim == 0 {
                return Err(CliError::Schema {
                    path: "algebra.dim".into(),
                    reason: "dimension must be positive".into(),
                });
            }
            for (idx, b) in c.brackets.iter().enumerate() {
                if b.i == 0 || b.j == 0 || b.i > c.dim || b.j > c.dim {
                    return Err(CliError::Schema {
                        path: format!("algebra.brackets[{idx}]"),
                        reason: format!(
                            "indices ({}, {}) out of range 1..={}",
                            b.i, b.j, c.dim
                        ),
                    });
                }
                if b.i >= b.j {
                    return Err(CliError::Schema {
                        path: format!("algebra.brackets[{idx}]"),
                        reason: "bracket entries require i < j".into(),
                    });
                }
                if b.coeffs.len() != c.dim {
                    return Err(CliError::Schema {
                        path: format!("algebra.brackets[{idx}].coeffs"),
                        reason: format!("expected {} coefficients, got {}", c.dim, b.coeffs.len()),
                    });
                }
            }
            c.dim
        }
    };
    match &spec.gram {
        GramSpec::Named(name) if name == "identity" => {}
        GramSpec::Named(name) => {
            return Err(CliError::Schema {
                path: "gram".into(),
                reason: format!("unknown gram name `{name}`; use \"identity\" or a matrix"),
            })
        }
        GramSpec::Matrix(rows) => {
            if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                return Err(CliError::Schema {
                    path: "gram".into(),
                    reason: format!("expected a {dim}x{dim} matrix"),
                });
            }
            for i in 0..dim {
                for j in 0..dim {
                    if rows[i][j] != rows[j][i] {
                        return Err(CliError::Schema {
                            path: format!("gram[{i}][{j}]"),
                            reason: "gram matrix must be symmetric".into(),
                        });
                    }
                }
            }
        }
    }
    if spec.x.len() != dim {
        return Err(CliError::Schema {
            path: "x".into(),
            reason: format!("expected {dim} coordinates, got {}", spec.x.len()),
        });
    }
    if let PhiKind::Series { coeffs, b0 } = &spec.phi {
        if coeffs.is_empty() {
            return Err(CliError::Schema {
                path: "phi.coeffs".into(),
                reason: "series needs at least one coefficient".into(),
            });
        }
        if !(*b0 > 0.0) {
            return Err(CliError::Schema {
                path: "phi.b0".into(),
                reason: "b0 must be positive".into(),
            });
        }
    }
    if spec.tasks.is_empty() {
        return Err(CliError::Schema {
            path: "tasks".into(),
            reason: "at least one task required".into(),
        });
    }
    Ok(spec)
}

/// Expand `all` and put the requested tasks in dependency order.
pub fn expand_tasks(tasks: &[TaskName]) -> Vec<TaskName> {
    if tasks.contains(&TaskName::All) {
        return TaskName::all_tasks();
    }
    let mut out: Vec<TaskName> = TaskName::all_tasks()
        .into_iter()
        .filter(|t| tasks.contains(t))
        .collect();
    // validate always runs first: everything depends on it
    if !out.contains(&TaskName::Validate) {
        out.insert(0, TaskName::Validate);
    }
    out
}

// ---------------------------------------------------------------------
// report
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Pass,
    Fail,
    NotApplicable,
    Skipped,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TaskSection {
    pub task: String,
    pub status: TaskStatus,
    pub values: BTreeMap<String, Value>,
    pub messages: Vec<String>,
}

impl TaskSection {
    fn new(task: TaskName) -> Self {
        Self {
            task: task.label().to_string(),
            status: TaskStatus::Pass,
            values: BTreeMap::new(),
            messages: Vec::new(),
        }
    }

    fn put(&mut self, key: &str, value: Value) {
        self.values.insert(key.to_string(), value);
    }

    fn fail(&mut self, msg: impl Into<String>) {
        self.status = TaskStatus::Fail;
        self.messages.push(msg.into());
    }

    fn note(&mut self, msg: impl Into<String>) {
        self.messages.push(msg.into());
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Report {
    pub spec_version: u32,
    /// Input spec with `all` expanded, so the report is self-describing.
    pub input: ProblemSpec,
    pub sections: Vec<TaskSection>,
    pub overall: TaskStatus,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.overall == TaskStatus::Pass
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Machine,
}

/// Serialize a report. The machine format mirrors the report exactly and
/// is byte-deterministic; the text format adds wall time for humans.
pub fn emit(report: &Report, format: ReportFormat, wall_ms: f64) -> Vec<u8> {
    match format {
        ReportFormat::Machine => {
            let mut bytes = serde_json::to_vec_pretty(report).expect("report serializes");
            bytes.push(b'\n');
            bytes
        }
        ReportFormat::Text => {
            let mut out = String::new();
            out.push_str(&format!(
                "(alpha,beta)-metric analysis — spec_version {}\n",
                report.spec_version
            ));
            for section in &report.sections {
                let status = match section.status {
                    TaskStatus::Pass => "PASS",
                    TaskStatus::Fail => "FAIL",
                    TaskStatus::NotApplicable => "N/A ",
                    TaskStatus::Skipped => "SKIP",
                };
                out.push_str(&format!("[{status}] {}\n", section.task));
                for (k, v) in &section.values {
                    out.push_str(&format!("    {k} = {v}\n"));
                }
                for m in &section.messages {
                    out.push_str(&format!("    note: {m}\n"));
                }
            }
            let overall = if report.all_pass() { "PASS" } else { "FAIL" };
            out.push_str(&format!("overall: {overall}  ({wall_ms:.1} ms)\n"));
            out.into_bytes()
        }
    }
}

// ---------------------------------------------------------------------
// runner
// ---------------------------------------------------------------------

struct Workspace {
    alg: LieAlgebraSpec,
    ip: InnerProduct,
    x: DVector<f64>,
    phi: PhiFunction,
    model: Option<MatrixGroupModel>,
    fs: Option<FinslerStructure>,
}

fn build_workspace(spec: &ProblemSpec) -> Result<Workspace, CliError> {
    let (alg, model) = match &spec.algebra {
        AlgebraSpec::Catalog(name) => {
            let entry = catalog(name).expect("validated catalog name");
            (entry.algebra, entry.model)
        }
        AlgebraSpec::Custom(c) => {
            let brackets: Vec<(usize, usize, Vec<f64>)> = c
                .brackets
                .iter()
                .map(|b| (b.i - 1, b.j - 1, b.coeffs.clone()))
                .collect();
            (
                LieAlgebraSpec::from_brackets(c.dim, &brackets, None)?,
                None,
            )
        }
    };
    let ip = match &spec.gram {
        GramSpec::Named(_) => InnerProduct::identity(alg.dim()),
        GramSpec::Matrix(rows) => {
            let n = alg.dim();
            InnerProduct::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))?
        }
    };
    let x = DVector::from_vec(spec.x.clone());
    let phi = PhiFunction::from_kind(&spec.phi)?;
    Ok(Workspace {
        alg,
        ip,
        x,
        phi,
        model,
        fs: None,
    })
}

/// Execute the requested tasks in dependency order. Failures halt
/// dependent tasks but completed sections stay in the report.
pub fn run(spec: &ProblemSpec) -> Result<Report, CliError> {
    let mut echoed = spec.clone();
    echoed.tasks = expand_tasks(&spec.tasks);
    let tasks = echoed.tasks.clone();

    let mut sections = Vec::new();
    let mut halted = false;
    let mut ws: Option<Workspace> = None;

    for task in &tasks {
        let mut section = TaskSection::new(*task);
        if halted {
            section.status = TaskStatus::Skipped;
            section.note("skipped: a prerequisite task failed");
            sections.push(section);
            continue;
        }
        match task {
            TaskName::Validate => match run_validate(spec, &mut section) {
                Ok(w) => ws = Some(w),
                Err(_) => halted = true,
            },
            TaskName::Regularity => run_regularity(ws.as_ref().unwrap(), &mut section),
            TaskName::Norms => run_norms(ws.as_ref().unwrap(), spec, &mut section),
            TaskName::Convexity => run_convexity(ws.as_ref().unwrap(), spec, &mut section),
            TaskName::Symmetry => {
                run_symmetry(ws.as_ref().unwrap(), &mut section);
                if section.status == TaskStatus::Fail {
                    halted = true;
                }
            }
            TaskName::Invariance => run_invariance(ws.as_ref().unwrap(), spec, &mut section),
            TaskName::Scaling => run_scaling(ws.as_ref().unwrap(), &mut section),
            TaskName::Lift => run_lift(ws.as_ref().unwrap(), spec, &mut section),
            TaskName::All => unreachable!("expand_tasks removes the alias"),
        }
        sections.push(section);
    }

    let overall = if sections
        .iter()
        .all(|s| matches!(s.status, TaskStatus::Pass | TaskStatus::NotApplicable))
    {
        TaskStatus::Pass
    } else {
        TaskStatus::Fail
    };
    Ok(Report {
        spec_version: SPEC_VERSION,
        input: echoed,
        sections,
        overall,
    })
}

fn flag_loose_tolerances(spec: &ProblemSpec, section: &mut TaskSection) {
    let checks = [
        ("invariance", spec.tolerances.invariance, DEFAULT_INVARIANCE_TOL),
        (
            "homomorphism",
            spec.tolerances.homomorphism,
            DEFAULT_HOMOMORPHISM_TOL,
        ),
        (
            "field_invariance",
            spec.tolerances.field_invariance,
            DEFAULT_FIELD_TOL,
        ),
    ];
    for (name, value, default) in checks {
        if let Some(v) = value {
            if v > default {
                section.note(format!(
                    "tolerance override `{name}` = {v:.3e} is LOOSER than the default {default:.3e}"
                ));
            }
        }
    }
}

fn run_validate(spec: &ProblemSpec, section: &mut TaskSection) -> Result<Workspace, ()> {
    flag_loose_tolerances(spec, section);
    let mut ws = match build_workspace(spec) {
        Ok(w) => w,
        Err(e) => {
            section.fail(e.to_string());
            return Err(());
        }
    };
    section.put("dim", json!(ws.alg.dim()));
    section.put("jacobi_residual", json!(ws.alg.jacobi_residual()));
    let b = ws.ip.norm(&ws.x).expect("dims validated");
    section.put("x_norm", json!(b));
    let bound = max_admissible_b(&ws.phi, 1e-6).ok();
    section.put("regularity_bound", json!(bound));
    section.put("phi_kind", json!(ws.phi.kind_name()));
    section.put("phi_injective", json!(ws.phi.injective()));
    if !ws.phi.regular_candidate() {
        section.note("phi is kropina: permanently flagged non-regular");
    }
    let x_field = match InvariantVectorField::new(ws.x.clone()) {
        Ok(x) => x,
        Err(e) => {
            section.fail(e.to_string());
            return Err(());
        }
    };
    match FinslerStructure::new(
        ws.alg.clone(),
        ws.ip.clone(),
        x_field,
        ws.phi.clone(),
        spec.allow_inadmissible,
    ) {
        Ok(fs) => {
            section.put("admissible", json!(fs.admissible()));
            if !fs.admissible() && ws.phi.regular_candidate() {
                section.note("inadmissible structure accepted under allow_inadmissible override");
            }
            ws.fs = Some(fs);
            Ok(ws)
        }
        Err(CoreError::Inadmissible { b, bound }) => {
            section.fail(format!(
                "|X| = {b:.6} violates the regularity inequality bound {bound:.6}; \
                 set allow_inadmissible to analyze anyway"
            ));
            Err(())
        }
        Err(e) => {
            section.fail(e.to_string());
            Err(())
        }
    }
}

fn run_regularity(ws: &Workspace, section: &mut TaskSection) {
    if !ws.phi.regular_candidate() {
        section.status = TaskStatus::NotApplicable;
        section.note("kropina is not a regular Finsler metric; regularity certification skipped");
        return;
    }
    match max_admissible_b(&ws.phi, 1e-6) {
        Ok(bound) => {
            section.put("max_admissible_b", json!(bound));
            let fs = ws.fs.as_ref().expect("validate ran");
            let b = fs.b();
            if b < bound {
                match regularity_margin(&ws.phi, b) {
                    Ok(m) => {
                        section.put("margin_at_x_norm", json!(m));
                        if m <= 0.0 {
                            section.fail(format!("margin at |X| = {b:.6} is non-positive: {m:.3e}"));
                        }
                    }
                    Err(e) => section.fail(e.to_string()),
                }
            } else {
                section.note(format!(
                    "|X| = {b:.6} is at or beyond the bound; margin not evaluated"
                ));
                if !fs.admissible() {
                    section.fail("structure inadmissible at this |X|");
                }
            }
        }
        Err(e) => section.fail(e.to_string()),
    }
}

fn sphere_samples(n: usize, count: usize, seed: u64) -> Vec<DVector<f64>> {
    use rand::Rng;
    use rand_distr::StandardNormal;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let v = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = v.norm();
        if norm > 1e-6 {
            out.push(v / norm);
        }
    }
    out
}

fn run_norms(ws: &Workspace, spec: &ProblemSpec, section: &mut TaskSection) {
    use rand::Rng;
    let fs = ws.fs.as_ref().expect("validate ran");
    let n = ws.alg.dim();
    let mut values = Vec::new();
    for y in sphere_samples(n, 5, spec.seed ^ 0x4e4f524d) {
        if fs.on_singular_locus(&y) {
            values.push(json!(null));
            continue;
        }
        match fs.minkowski_norm(&y) {
            Ok(f) => values.push(json!(f)),
            Err(e) => {
                section.fail(format!("norm evaluation failed: {e}"));
                return;
            }
        }
    }
    section.put("sampled_norms", Value::Array(values));
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x484f4d4f);
    let mut worst: f64 = 0.0;
    for y in sphere_samples(n, 20, spec.seed ^ 0x484f4d31) {
        if fs.on_singular_locus(&y) {
            continue;
        }
        let lambda = rng.gen_range(0.05..20.0);
        match fs.homogeneity_check(&y, lambda) {
            Ok(r) => worst = worst.max(r),
            Err(e) => {
                section.fail(format!("homogeneity check failed: {e}"));
                return;
            }
        }
    }
    section.put("max_homogeneity_residual", json!(worst));
    if worst > 1e-10 {
        section.fail(format!("homogeneity residual {worst:.3e} exceeds 1e-10"));
    }
}

fn run_convexity(ws: &Workspace, spec: &ProblemSpec, section: &mut TaskSection) {
    let fs = ws.fs.as_ref().expect("validate ran");
    if !ws.phi.regular_candidate() {
        section.status = TaskStatus::NotApplicable;
        section.note("strong convexity is not certified for the non-regular kropina profile");
        return;
    }
    let n = ws.alg.dim();
    let mut min_eig = f64::INFINITY;
    let mut violations = 0u32;
    for y in sphere_samples(n, 50, spec.seed ^ 0x434f4e56) {
        match fs.min_convexity_eigenvalue(&y) {
            Ok(eig) => {
                min_eig = min_eig.min(eig);
                if !fs.is_strongly_convex(&y).unwrap_or(false) {
                    violations += 1;
                }
            }
            Err(e) => {
                section.fail(format!("fundamental tensor failed: {e}"));
                return;
            }
        }
    }
    section.put("min_eigenvalue", json!(min_eig));
    section.put("violations", json!(violations));
    if violations > 0 {
        section.fail(format!(
            "{violations}/50 sampled directions violate strong convexity"
        ));
    }
}

fn run_symmetry(ws: &Workspace, section: &mut TaskSection) {
    match k_prime(&ws.alg, &ws.ip, &ws.x) {
        Ok(report) => {
            section.put("dim_der", json!(report.der.dim()));
            section.put("dim_x_fixing", json!(report.x_fixing.dim()));
            section.put("dim_skew", json!(report.skew.dim()));
            section.put("dim_k_prime", json!(report.k_prime.dim()));
            section.put("k_prime_basis", json!(report.k_prime.rows()));
            section.put("derivation_residual", json!(report.derivation_residual));
            section.put(
                "bracket_closure_residual",
                json!(report.bracket_closure_residual),
            );
            section.put("compact_type_residual", json!(report.compact_type_residual));
            section.put("nesting_residual", json!(report.nesting_residual));
            if report.derivation_residual > 1e-9 {
                section.fail("derivation residual exceeds 1e-9");
            }
            if report.bracket_closure_residual > 1e-9 {
                section.fail("k' is not closed under the commutator to 1e-9");
            }
            if report.compact_type_residual > 1e-9 {
                section.fail("k' basis is not skew to 1e-9; compact-type witness failed");
            }
            if report.nesting_residual > 1e-10 {
                section.fail("subspace nesting residual exceeds 1e-10");
            }
        }
        Err(e) => section.fail(e.to_string()),
    }
}

fn run_invariance(ws: &Workspace, spec: &ProblemSpec, section: &mut TaskSection) {
    let fs = ws.fs.as_ref().expect("validate ran");
    let tol = spec.tolerances.invariance.unwrap_or(DEFAULT_INVARIANCE_TOL);
    let report = match k_prime(&ws.alg, &ws.ip, &ws.x) {
        Ok(r) => r,
        Err(e) => {
            section.fail(e.to_string());
            return;
        }
    };
    // forward probes from the k' generators
    let mut forward_max: f64 = 0.0;
    for d in report.k_prime.mats() {
        for t in [0.3, 1.7] {
            let a = match exp_derivation(&ws.alg, d, t) {
                Ok(a) => a,
                Err(e) => {
                    section.fail(format!("exp of k' generator failed: {e}"));
                    return;
                }
            };
            match isometry_invariance_check(fs, &a, 100, spec.seed ^ 0x494e5641) {
                Ok(dev) => forward_max = forward_max.max(dev),
                Err(e) => {
                    section.fail(format!("forward probe failed: {e}"));
                    return;
                }
            }
        }
    }
    section.put("forward_max_deviation", json!(forward_max));
    section.put("forward_generators", json!(report.k_prime.dim()));
    if forward_max > tol {
        section.fail(format!(
            "forward isometry deviation {forward_max:.3e} exceeds {tol:.1e}"
        ));
    }
    // converse probe with a seeded orthogonal map moving X, when phi is
    // injective and X is nonzero
    if fs.phi().injective() && ws.x.norm() > 1e-9 {
        let chol = ws.ip.gram().clone().cholesky().expect("gram is PD");
        let l = chol.l();
        let l_inv_t = l
            .transpose()
            .try_inverse()
            .expect("cholesky factor invertible");
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x434f4e50);
        let mut probe_done = false;
        for _ in 0..50 {
            let q = random_orthogonal(ws.alg.dim(), &mut rng);
            // conjugate a Euclidean-orthogonal Q into O(gram)
            let a_mat = &l_inv_t * q * l.transpose();
            if (&a_mat * &ws.x - &ws.x).norm() < 0.1 * (1.0 + ws.x.norm()) {
                continue;
            }
            let a = AutomorphismMatrix::new_unchecked(a_mat);
            match converse_probe(fs, &a, 1000, spec.seed ^ 0x434f4e51) {
                Ok(ConverseOutcome::Witness { relative_gap, .. }) => {
                    section.put("converse_witness_gap", json!(relative_gap));
                }
                Ok(ConverseOutcome::NotFound { samples }) => {
                    section.fail(format!(
                        "converse witness not found in {samples} samples (inconclusive run, reported as failure)"
                    ));
                }
                Err(e) => section.fail(format!("converse probe failed: {e}")),
            }
            probe_done = true;
            break;
        }
        if !probe_done {
            section.note("no orthogonal map moving X was found; converse probe skipped");
        }
    } else {
        section.note("converse probe requires injective phi and nonzero X; skipped");
    }
}

fn run_scaling(ws: &Workspace, section: &mut TaskSection) {
    match admissibility_scaling(&ws.ip, &ws.x, &ws.phi) {
        Ok((n, ip_scaled)) => {
            section.put("n", json!(n));
            let before = k_prime(&ws.alg, &ws.ip, &ws.x);
            let after = k_prime(&ws.alg, &ip_scaled, &ws.x);
            match (before, after) {
                (Ok(b), Ok(a)) => {
                    let res = b
                        .k_prime
                        .containment_residual(&a.k_prime)
                        .max(a.k_prime.containment_residual(&b.k_prime));
                    section.put("k_prime_span_residual", json!(res));
                    if b.k_prime.dim() != a.k_prime.dim() || res > 1e-10 {
                        section.fail("k' span changed under metric scaling");
                    }
                }
                _ => section.fail("k' computation failed during scaling check"),
            }
        }
        Err(CoreError::NonRegular) | Err(CoreError::SingularInStrip { .. }) => {
            section.status = TaskStatus::NotApplicable;
            section.note("no admissible bound exists for this phi; scaling undefined");
        }
        Err(e) => section.fail(e.to_string()),
    }
}

fn run_lift(ws: &Workspace, spec: &ProblemSpec, section: &mut TaskSection) {
    let Some(model) = &ws.model else {
        section.status = TaskStatus::NotApplicable;
        section.note("no matrix model for this algebra; group lifts unavailable");
        return;
    };
    if !model.log_available() {
        section.status = TaskStatus::NotApplicable;
        section.note(format!(
            "model `{}` has no polynomial logarithm; lifts restricted to nilpotent models",
            model.name()
        ));
        return;
    }
    let hom_tol = spec
        .tolerances
        .homomorphism
        .unwrap_or(DEFAULT_HOMOMORPHISM_TOL);
    let field_tol = spec.tolerances.field_invariance.unwrap_or(DEFAULT_FIELD_TOL);
    let report = match k_prime(&ws.alg, &ws.ip, &ws.x) {
        Ok(r) => r,
        Err(e) => {
            section.fail(e.to_string());
            return;
        }
    };
    if report.k_prime.dim() == 0 {
        section.status = TaskStatus::NotApplicable;
        section.note("k' is trivial; nothing to lift");
        return;
    }
    let mut worst_hom: f64 = 0.0;
    let mut worst_comm: f64 = 0.0;
    let mut worst_field: f64 = 0.0;
    for d in report.k_prime.mats() {
        let a = match exp_derivation(&ws.alg, d, 0.9) {
            Ok(a) => a,
            Err(e) => {
                section.fail(format!("exp of k' generator failed: {e}"));
                return;
            }
        };
        let psi = match lift_to_group(model, &a) {
            Ok(p) => p,
            Err(e) => {
                section.fail(format!("lift rejected: {e}"));
                return;
            }
        };
        let hom = homomorphism_residual(&psi, 50, spec.seed ^ 0x4c494654);
        let comm = commutation_check(model, &psi, 50, spec.seed ^ 0x4c494655);
        let field = field_invariance_check(model, &psi, &ws.x, 50, spec.seed ^ 0x4c494656);
        match (hom, comm, field) {
            (Ok(h), Ok(c), Ok(f)) => {
                worst_hom = worst_hom.max(h);
                worst_comm = worst_comm.max(c);
                worst_field = worst_field.max(f);
            }
            _ => {
                section.fail("residual computation failed on the lifted map");
                return;
            }
        }
    }
    section.put("homomorphism_residual", json!(worst_hom));
    section.put("commutation_residual", json!(worst_comm));
    section.put("field_invariance_residual", json!(worst_field));
    if worst_hom > hom_tol {
        section.fail(format!("homomorphism residual {worst_hom:.3e} exceeds {hom_tol:.1e}"));
    }
    if worst_comm > hom_tol {
        section.fail(format!("commutation residual {worst_comm:.3e} exceeds {hom_tol:.1e}"));
    }
    if worst_field > field_tol {
        section.fail(format!(
            "field invariance residual {worst_field:.3e} exceeds {field_tol:.1e}"
        ));
    }
}

// ---------------------------------------------------------------------
// examples
// ---------------------------------------------------------------------

/// A ready-to-run ProblemSpec for each catalog algebra.
pub fn example_spec(name: &str) -> Option<ProblemSpec> {
    let (x, phi): (Vec<f64>, PhiKind) = match name {
        "heisenberg3" => (vec![0.0, 0.0, 0.5], PhiKind::Randers),
        "abelian3" => (vec![0.0, 0.0, 0.5], PhiKind::Randers),
        "so3" => (vec![0.0, 0.0, 0.4], PhiKind::Matsumoto),
        "aff1" => (vec![0.0, 0.3], PhiKind::Randers),
        _ => return None,
    };
    Some(ProblemSpec {
        spec_version: SPEC_VERSION,
        algebra: AlgebraSpec::Catalog(name.to_string()),
        gram: GramSpec::default(),
        x,
        phi,
        tasks: vec![TaskName::All],
        seed: 42,
        tolerances: Tolerances::default(),
        allow_inadmissible: false,
    })
}

/// Full analyze pipeline: parse, run, emit. Returns (bytes, exit code).
pub fn analyze(text: &str, format: ReportFormat, seed_override: Option<u64>) -> (Vec<u8>, i32) {
    let started = Instant::now();
    let mut spec = match parse_spec(text) {
        Ok(s) => s,
        Err(e) => return (format!("error: {e}\n").into_bytes(), 2),
    };
    if let Some(seed) = seed_override {
        spec.seed = seed;
    }
    match run(&spec) {
        Ok(report) => {
            let wall_ms = started.elapsed().as_secs_f64() * 1e3;
            let code = if report.all_pass() { 0 } else { 1 };
            (emit(&report, format, wall_ms), code)
        }
        Err(e) => (format!("error: {e}\n").into_bytes(), 2),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_spec() -> String {
        serde_json::to_string(&example_spec("heisenberg3").unwrap()).unwrap()
    }

    #[test]
    fn parses_minimal_catalog_spec() {
        let spec = parse_spec(&minimal_spec()).unwrap();
        assert!(matches!(spec.algebra, AlgebraSpec::Catalog(ref n) if n == "heisenberg3"));
    }

    #[test]
    fn unknown_key_rejected() {
        let mut v: Value = serde_json::from_str(&minimal_spec()).unwrap();
        v["tolerances"]["typo_tolerance"] = json!(1.0);
        let err = parse_spec(&serde_json::to_string(&v).unwrap());
        assert!(matches!(err, Err(CliError::Parse(_))), "{err:?}");
        let mut v: Value = serde_json::from_str(&minimal_spec()).unwrap();
        v["unknown_top_level"] = json!(true);
        assert!(parse_spec(&serde_json::to_string(&v).unwrap()).is_err());
    }

    #[test]
    fn asymmetric_gram_names_the_entry() {
        let mut v: Value = serde_json::from_str(&minimal_spec()).unwrap();
        v["gram"] = json!([[1.0, 0.1, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        match parse_spec(&serde_json::to_string(&v).unwrap()) {
            Err(CliError::Schema { path, .. }) => assert!(path.starts_with("gram[")),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn bracket_index_out_of_range_named() {
        let text = r#"{
            "spec_version": 1,
            "algebra": {"dim": 3, "brackets": [{"i": 1, "j": 4, "coeffs": [0, 0, 1]}]},
            "x": [0, 0, 0.5],
            "phi": {"kind": "randers"}
        }"#;
        match parse_spec(text) {
            Err(CliError::Schema { path, reason }) => {
                assert_eq!(path, "algebra.brackets[0]");
                assert!(reason.contains("out of range"));
            }
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_spec_version_rejected() {
        let mut v: Value = serde_json::from_str(&minimal_spec()).unwrap();
        v["spec_version"] = json!(2);
        assert!(matches!(
            parse_spec(&serde_json::to_string(&v).unwrap()),
            Err(CliError::Schema { .. })
        ));
    }

    #[test]
    fn heisenberg_all_tasks_report() {
        let spec = parse_spec(&minimal_spec()).unwrap();
        let report = run(&spec).unwrap();
        assert!(report.all_pass(), "{report:?}");
        let sym = report
            .sections
            .iter()
            .find(|s| s.task == "symmetry")
            .unwrap();
        assert_eq!(sym.values["dim_der"], json!(6));
        assert_eq!(sym.values["dim_k_prime"], json!(1));
        let inv = report
            .sections
            .iter()
            .find(|s| s.task == "invariance")
            .unwrap();
        assert_eq!(inv.status, TaskStatus::Pass);
    }

    #[test]
    fn kropina_flags_but_still_runs_symmetry() {
        let mut spec = example_spec("heisenberg3").unwrap();
        spec.phi = PhiKind::Kropina;
        let report = run(&spec).unwrap();
        let reg = report
            .sections
            .iter()
            .find(|s| s.task == "regularity")
            .unwrap();
        assert_eq!(reg.status, TaskStatus::NotApplicable);
        let sym = report
            .sections
            .iter()
            .find(|s| s.task == "symmetry")
            .unwrap();
        assert_eq!(sym.status, TaskStatus::Pass);
    }

    #[test]
    fn inadmissible_without_override_refused_at_validate() {
        let mut spec = example_spec("heisenberg3").unwrap();
        spec.x = vec![0.0, 0.0, 1.2];
        let report = run(&spec).unwrap();
        assert!(!report.all_pass());
        let validate = &report.sections[0];
        assert_eq!(validate.status, TaskStatus::Fail);
        assert!(validate.messages.iter().any(|m| m.contains("regularity")));
        // dependents skipped
        assert!(report.sections[1..]
            .iter()
            .all(|s| s.status == TaskStatus::Skipped));
    }

    #[test]
    fn machine_report_roundtrips() {
        let spec = parse_spec(&minimal_spec()).unwrap();
        let report = run(&spec).unwrap();
        let bytes = emit(&report, ReportFormat::Machine, 0.0);
        let back: Report = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn catalog_examples_validate_cleanly() {
        for name in CATALOG_NAMES {
            let mut spec = example_spec(name).unwrap();
            spec.tasks = vec![TaskName::Validate];
            let report = run(&spec).unwrap();
            assert!(report.all_pass(), "{name}: {report:?}");
            let validate = &report.sections[0];
            assert_eq!(
                validate.values["jacobi_residual"],
                json!(0.0),
                "{name} must spend zero residual budget"
            );
        }
    }
}
