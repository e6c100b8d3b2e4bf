//! JSON problem registry.
//!
//! Each entry carries the id, name, dimension and reference failure
//! probability, plus at most one source for the limit state: a builtin key,
//! an inline `expression`, or a `definition` file holding the expression
//! text. Expressions use the evalexpr syntax with inputs `x1..xM`; write
//! numeric literals with a decimal point since `1/2` is integer division.
//! Entries without a source are stubs that can be ranked but not run.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use alr_core::input::{MarginalDistribution, RandomVector};
use alr_core::problems::{builtin_lsf, registry, tower_displacement_problem, tower_stress_problem, BenchmarkProblem, LimitStateFn, Origin};
use alr_core::special::beta_from_pf;
use alr_core::truss::TrussModel;
use evalexpr::{build_operator_tree, ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Node, Value};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, BenchError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemEntry {
    pub id: u32,
    pub name: String,
    pub dim: usize,
    pub pf_ref: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marginals: Option<Vec<MarginalDistribution>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expression: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub definition: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegistryFile {
    pub problems: Vec<ProblemEntry>,
}

impl RegistryFile {
    /// The compiled-in registry as a file.
    pub fn builtin() -> Self {
        let problems = registry()
            .into_iter()
            .map(|p| ProblemEntry {
                id: p.id,
                name: p.name.clone(),
                dim: p.dim,
                pf_ref: p.pf_ref,
                marginals: p.input.as_ref().map(|rv| rv.marginals().to_vec()),
                builtin: p.builtin.clone(),
                expression: None,
                definition: None,
            })
            .collect();
        Self { problems }
    }
}

/// Limit state compiled from an evalexpr expression over `x1..xM`.
pub fn expression_lsf(id: u32, expr: &str, dim: usize) -> Result<LimitStateFn> {
    let bad = |msg: String| BenchError::Expression { id, msg };
    let tree: Node<DefaultNumericTypes> = build_operator_tree(expr).map_err(|e| bad(e.to_string()))?;
    let names: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
    for v in tree.iter_variable_identifiers() {
        if !names.iter().any(|n| n == v) {
            return Err(bad(format!("unknown variable `{v}` (inputs are x1..x{dim})")));
        }
    }
    let tree = Arc::new(tree);
    Ok(Arc::new(move |x: &[f64]| {
        let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
        for (n, v) in names.iter().zip(x) {
            // only fails for type changes of an existing variable
            let _ = ctx.set_value(n.clone(), Value::Float(*v));
        }
        tree.eval_number_with_context(&ctx).unwrap_or(f64::NAN)
    }))
}

fn entry_to_problem(e: &ProblemEntry, base: &Path) -> Result<BenchmarkProblem> {
    let cfg = |m: String| BenchError::Config(format!("problem {}: {m}", e.id));
    if !(e.pf_ref > 0.0 && e.pf_ref < 1.0) {
        return Err(cfg(format!("pf_ref {} outside (0, 1)", e.pf_ref)));
    }
    let sources = e.builtin.is_some() as u8 + e.expression.is_some() as u8 + e.definition.is_some() as u8;
    if sources > 1 {
        return Err(cfg("give only one of builtin, expression, definition".into()));
    }
    let input = match &e.marginals {
        Some(m) => {
            if m.len() != e.dim {
                return Err(cfg(format!("{} marginals for dimension {}", m.len(), e.dim)));
            }
            Some(RandomVector::new(m.clone())?)
        }
        None => None,
    };
    let mut p = BenchmarkProblem {
        id: e.id,
        name: e.name.clone(),
        dim: e.dim,
        input: None,
        lsf: None,
        pf_ref: e.pf_ref,
        beta_ref: beta_from_pf(e.pf_ref),
        origin: Origin::Stub,
        builtin: None,
    };
    if let Some(key) = &e.builtin {
        let (rv, lsf) = builtin_lsf(key).ok_or_else(|| cfg(format!("unknown builtin `{key}`")))?;
        if input.as_ref().is_some_and(|i| *i != rv) {
            return Err(cfg(format!("marginals differ from the builtin `{key}` input model")));
        }
        p = p.with_definition(rv, lsf)?;
        p.origin = Origin::Builtin;
        p.builtin = Some(key.clone());
        return Ok(p);
    }
    let expr = match (&e.expression, &e.definition) {
        (Some(x), _) => Some(x.clone()),
        (None, Some(path)) => {
            let full = base.join(path);
            Some(std::fs::read_to_string(&full).map_err(io_err(full))?)
        }
        (None, None) => None,
    };
    if let Some(expr) = expr {
        let rv = input.ok_or_else(|| cfg("an expression needs marginals".into()))?;
        let lsf = expression_lsf(e.id, expr.trim(), e.dim)?;
        let means: Vec<f64> = rv.marginals().iter().map(|m| m.mean()).collect();
        let g0 = lsf(&means);
        if !g0.is_finite() {
            return Err(BenchError::Expression { id: e.id, msg: format!("non-finite value {g0} at the input means") });
        }
        p = p.with_definition(rv, lsf)?;
    } else if let Some(rv) = input {
        p.input = Some(rv);
    }
    Ok(p)
}

/// Builds problems from registry text; relative definition paths resolve
/// against `base`.
pub fn parse_registry(text: &str, base: &Path) -> Result<Vec<BenchmarkProblem>> {
    let file: RegistryFile = serde_json::from_str(text)?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(file.problems.len());
    for e in &file.problems {
        if !seen.insert(e.id) {
            return Err(BenchError::Config(format!("problem {} listed twice", e.id)));
        }
        out.push(entry_to_problem(e, base)?);
    }
    out.sort_by_key(|p| p.id);
    Ok(out)
}

pub fn load_registry(path: &Path) -> Result<Vec<BenchmarkProblem>> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_registry(&text, path.parent().unwrap_or(Path::new(".")))
}

/// Rebinds the tower problems to another geometry.
pub fn with_tower_geometry(problems: Vec<BenchmarkProblem>, model: &TrussModel) -> Result<Vec<BenchmarkProblem>> {
    problems
        .into_iter()
        .map(|p| {
            let def = match p.builtin.as_deref() {
                Some("tower-displacement") => tower_displacement_problem(model.clone())?,
                Some("tower-stress") => tower_stress_problem(model.clone())?,
                _ => return Ok(p),
            };
            Ok(p.with_definition(def.0, def.1)?)
        })
        .collect()
}
