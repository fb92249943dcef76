//! Problem-file schema and the solve dispatch.
//!
//! A problem file is strict JSON: a "kind" string plus named data functions
//! mapping vertex labels to numbers (plain reals or {"re","im"} objects).
//! Unknown fields are rejected so typos fail loudly.

use std::collections::{BTreeMap, BTreeSet};

use serde::Deserialize;
use serde_json::{json, Value};

use netlap_core::markov::green_restricted;
use netlap_core::{
    balayage, bi_blocks, bi_d2n, bi_n2d, dirichlet_to_neumann, normal_derivative, solve_bidirichlet,
    solve_bineumann, solve_dirichlet, solve_dirichlet_potential, solve_iterated_dirichlet,
    solve_iterated_poisson, solve_mixed, solve_neumann, solve_plate1, solve_plate2, solve_poisson,
    solve_poisson_potential, solve_robin, Cx, FieldFunction, Network, NormalDerivativeKind,
    Partition, PotentialTransform, Solution, TransitionSystem,
};

use crate::{CliError, CliResult, NormalArg};

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum NumberLike {
    Real(f64),
    Complex { re: f64, im: f64 },
}

impl NumberLike {
    fn to_cx(self) -> Cx {
        match self {
            NumberLike::Real(x) => Cx::new(x, 0.0),
            NumberLike::Complex { re, im } => Cx::new(re, im),
        }
    }
}

type DataMap = BTreeMap<String, NumberLike>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub kind: String,
    #[serde(default)]
    pub f: Option<DataMap>,
    #[serde(default)]
    pub g: Option<DataMap>,
    #[serde(default)]
    pub g1: Option<DataMap>,
    #[serde(default)]
    pub g2: Option<DataMap>,
    #[serde(default)]
    pub v: Option<DataMap>,
    #[serde(default)]
    pub alpha: Option<DataMap>,
    #[serde(default)]
    pub beta: Option<DataMap>,
    #[serde(default)]
    pub u: Option<DataMap>,
    #[serde(default)]
    pub ground: Option<String>,
    #[serde(default)]
    pub anchor: Option<String>,
    #[serde(default)]
    pub c: Option<NumberLike>,
    #[serde(default)]
    pub dirichlet_part: Option<Vec<String>>,
    #[serde(default)]
    pub subset: Option<Vec<String>>,
    #[serde(default)]
    pub normal: Option<String>,
    /// Full replacement transition rows for boundary vertices, keyed by
    /// label, each a length-|X| stochastic vector in vertex order.
    #[serde(default)]
    pub override_rows: Option<BTreeMap<String, Vec<f64>>>,
    #[serde(default)]
    pub tol: Option<f64>,
}

/// Command-line values that take precedence over the problem file.
#[derive(Debug, Default)]
pub struct SolveOverrides {
    pub ground: Option<String>,
    pub anchor: Option<String>,
    pub normal: Option<NormalArg>,
}

pub struct SolveOutcome {
    pub document: Value,
    /// Largest reported residual or condition value, for the CLI gate.
    pub worst: f64,
}

pub fn parse_problem(text: &str) -> CliResult<ProblemSpec> {
    serde_json::from_str(text).map_err(|e| CliError::Input(format!("problem file: {e}")))
}

fn index_of(ts: &TransitionSystem, label: &str, what: &str) -> CliResult<usize> {
    ts.index_of(label)
        .ok_or_else(|| CliError::Input(format!("unknown vertex label {label:?} in {what}")))
}

fn to_field(ts: &TransitionSystem, map: &DataMap, what: &str) -> CliResult<FieldFunction> {
    let mut pairs = Vec::with_capacity(map.len());
    for (label, value) in map {
        pairs.push((index_of(ts, label, what)?, value.to_cx()));
    }
    Ok(FieldFunction::new(pairs)?)
}

fn require<'a>(opt: &'a Option<DataMap>, kind: &str, name: &str) -> CliResult<&'a DataMap> {
    opt.as_ref()
        .ok_or_else(|| CliError::Input(format!("problem kind {kind:?} needs the {name:?} data")))
}

pub fn cx_to_json(value: Cx) -> Value {
    if value.im.abs() <= 1e-12 {
        json!(value.re)
    } else {
        json!({"re": value.re, "im": value.im})
    }
}

pub fn field_to_json(ts: &TransitionSystem, f: &FieldFunction) -> Value {
    let mut out = serde_json::Map::new();
    for (x, value) in f.iter() {
        out.insert(ts.label(x).to_string(), cx_to_json(value));
    }
    Value::Object(out)
}

fn residual_map(values: &BTreeMap<String, f64>) -> Value {
    let mut out = serde_json::Map::new();
    for (k, v) in values {
        out.insert(k.clone(), json!(v));
    }
    Value::Object(out)
}

fn worst_of(sol: &Solution) -> f64 {
    sol.residuals
        .values()
        .chain(sol.conditions.values())
        .fold(0.0f64, |a, &v| a.max(v))
}

fn solution_document(
    ts: &TransitionSystem,
    kind: &str,
    sol: &Solution,
    report: Value,
) -> SolveOutcome {
    let document = json!({
        "kind": kind,
        "degrees_of_freedom": sol.degrees_of_freedom,
        "solution": field_to_json(ts, &sol.u),
        "residuals": residual_map(&sol.residuals),
        "conditions": residual_map(&sol.conditions),
        "condition_report": report,
    });
    SolveOutcome { document, worst: worst_of(sol) }
}

fn interior_kernel_report(ts: &TransitionSystem, part: &Partition) -> Value {
    match green_restricted(ts, part.interior(), Cx::new(1.0, 0.0)) {
        Ok(kernel) => json!({
            "interior_kernel_condition": kernel.condition(),
            "interior_kernel_residual": kernel.residual(),
        }),
        Err(_) => Value::Null,
    }
}

fn grounded_report(ts: &TransitionSystem, ground: usize) -> Value {
    let subset: Vec<usize> = (0..ts.n()).filter(|&x| x != ground).collect();
    match green_restricted(ts, &subset, Cx::new(1.0, 0.0)) {
        Ok(kernel) => json!({
            "grounded_kernel_condition": kernel.condition(),
            "grounded_kernel_residual": kernel.residual(),
        }),
        Err(_) => Value::Null,
    }
}

fn potential_report(ts: &TransitionSystem, v: &FieldFunction) -> Value {
    match PotentialTransform::new(ts, v) {
        Ok(transform) => json!({
            "transformed_kernel_condition": transform.report().condition,
        }),
        Err(_) => Value::Null,
    }
}

fn fourth_order_report(ts: &TransitionSystem, part: &Partition) -> Value {
    match bi_blocks(ts, part) {
        Ok(blocks) => json!({
            "s_condition": blocks.s_report().condition,
            "s_min_pivot": blocks.s_report().min_pivot,
            "ir_condition": blocks.ir_report().condition,
            "ir_min_pivot": blocks.ir_report().min_pivot,
            "regular": blocks.invertible(),
        }),
        Err(_) => Value::Null,
    }
}

fn resolve_ground(
    ts: &TransitionSystem,
    net: &Network,
    spec: &ProblemSpec,
    overrides: &SolveOverrides,
) -> CliResult<usize> {
    if let Some(label) = overrides.ground.as_deref().or(spec.ground.as_deref()) {
        index_of(ts, label, "ground")
    } else {
        Ok(net.root())
    }
}

fn resolve_normal(spec: &ProblemSpec, overrides: &SolveOverrides) -> CliResult<Option<NormalArg>> {
    if overrides.normal.is_some() {
        return Ok(overrides.normal);
    }
    match spec.normal.as_deref() {
        None => Ok(None),
        Some("standard") => Ok(Some(NormalArg::Standard)),
        Some("reversed") => Ok(Some(NormalArg::Reversed)),
        Some("subnetwork") => Ok(Some(NormalArg::Subnetwork)),
        Some("star") => Ok(Some(NormalArg::Star)),
        Some("override") => Ok(Some(NormalArg::Override)),
        Some(other) => Err(CliError::Input(format!(
            "unknown normal-derivative variant {other:?} (expected standard, reversed, subnetwork, star, or override)"
        ))),
    }
}

fn resolve_subset(ts: &TransitionSystem, spec: &ProblemSpec, kind: &str) -> CliResult<Vec<usize>> {
    let labels = spec
        .subset
        .as_ref()
        .ok_or_else(|| CliError::Input(format!("problem kind {kind:?} needs the \"subset\" option")))?;
    let mut subset = Vec::with_capacity(labels.len());
    for label in labels {
        subset.push(index_of(ts, label, "subset")?);
    }
    subset.sort_unstable();
    subset.dedup();
    Ok(subset)
}

fn override_table(
    ts: &TransitionSystem,
    spec: &ProblemSpec,
) -> CliResult<BTreeMap<usize, Vec<f64>>> {
    let rows = spec.override_rows.as_ref().ok_or_else(|| {
        CliError::Input(
            "the override variant needs \"override_rows\": {label: [row in vertex order]}"
                .to_string(),
        )
    })?;
    let mut table = BTreeMap::new();
    for (label, row) in rows {
        table.insert(index_of(ts, label, "override_rows")?, row.clone());
    }
    Ok(table)
}

pub fn run_solve(
    net: &Network,
    spec: &ProblemSpec,
    overrides: &SolveOverrides,
) -> CliResult<SolveOutcome> {
    let base = TransitionSystem::from_network(net)?;
    let part = Partition::from_network(net);
    let kind = spec.kind.as_str();
    let normal = resolve_normal(spec, overrides)?;

    // The override variant replaces boundary transition rows and re-solves
    // the stationary distribution; it applies to the flux-data problems and
    // to the normal-derivative map. The remaining variants only make sense
    // for the normal-derivative map itself.
    let overridden = matches!(normal, Some(NormalArg::Override));
    if overridden && !matches!(kind, "neumann" | "bineumann" | "normal-derivative") {
        return Err(CliError::Input(format!(
            "the override variant applies to neumann, bineumann, or normal-derivative, not {kind:?}"
        )));
    }
    if matches!(
        normal,
        Some(NormalArg::Reversed) | Some(NormalArg::Subnetwork) | Some(NormalArg::Star)
    ) && kind != "normal-derivative"
    {
        return Err(CliError::Input(format!(
            "the {} variant applies only to the normal-derivative problem",
            normal_name(normal.unwrap())
        )));
    }
    let ts = if overridden {
        base.with_boundary_override(&override_table(&base, spec)?, &part)?
    } else {
        base
    };

    match kind {
        "poisson" => {
            let f = to_field(&ts, require(&spec.f, kind, "f")?, "f")?;
            let ground = resolve_ground(&ts, net, spec, overrides)?;
            let sol = solve_poisson(&ts, &f, ground)?;
            Ok(solution_document(&ts, kind, &sol, grounded_report(&ts, ground)))
        }
        "neumann" => {
            let f = to_field(&ts, require(&spec.f, kind, "f")?, "f")?;
            let g = to_field(&ts, require(&spec.g, kind, "g")?, "g")?;
            let ground = resolve_ground(&ts, net, spec, overrides)?;
            let sol = solve_neumann(&ts, &part, &f, &g, ground)?;
            Ok(solution_document(&ts, kind, &sol, interior_kernel_report(&ts, &part)))
        }
        "dirichlet" => {
            let f = to_field(&ts, require(&spec.f, kind, "f")?, "f")?;
            let g = to_field(&ts, require(&spec.g, kind, "g")?, "g")?;
            let sol = solve_dirichlet(&ts, &part, &f, &g)?;
            Ok(solution_document(&ts, kind, &sol, interior_kernel_report(&ts, &part)))
        }
        "mixed" => {
            let f = to_field(&ts, require(&spec.f, kind, "f")?, "f")?;
            let g = to_field(&ts, require(&spec.g, kind, "g")?, "g")?;
            let labels = spec.dirichlet_part.as_ref().ok_or_else(|| {
                CliError::Input("problem kind \"mixed\" needs the \"dirichlet_part\" option".to_string())
            })?;
            let mut dpart = BTreeSet::new();
            for label in labels {
                dpart.insert(index_of(&ts, label, "dirichlet_part")?);
            }
            let sol = solve_mixed(&ts, &part, &f, &g, &dpart)?;
            Ok(solution_document(&ts, kind, &sol, interior_kernel_report(&ts, &part)))
        }
        "robin" => {
            let f = to_field(&ts, require(&spec.f, kind, "f")?, "f")?;
            let g = to_field(&ts, require(&spec.g, kind, "g")?, "g")?;
            let alpha = to_field(&ts, require(&spec.alpha, kind, "alpha")?, "alpha")?;
            let beta = to_field(&ts, require(&spec.beta, kind, "beta")?, "beta")?;
            let sol = solve_robin(&ts, &part, &f, &g, &alpha, &beta)?;
            Ok(solution_document(&ts, kind, &sol, interior_kernel_report(&ts, &part)))
        }
        "poisson-potential" => {
            let f = to_field(&ts, require(&spec.f, kind, "f")?, "f")?;
            let v = to_field(&ts, require(&spec.v, kind, "v")?, "v")?;
            let sol = solve_poisson_potential(&ts, &f, &v)?;
            Ok(solution_document(&ts, kind, &sol, potential_report(&ts, &v)))
        }
        "dirichlet-potential" => {
            let f = to_field(&ts, require(&spec.f, kind, "f")?, "f")?;
            let g = to_field(&ts, require(&spec.g, kind, "g")?, "g")?;
            let v = to_field(&ts, require(&spec.v, kind, "v")?, "v")?;
            let sol = solve_dirichlet_potential(&ts, &part, &f, &g, &v)?;
            Ok(solution_document(&ts, kind, &sol, potential_report(&ts, &v)))
        }
        "d2n" => {
            let g = to_field(&ts, require(&spec.g, kind, "g")?, "g")?;
            let flux = dirichlet_to_neumann(&ts, &part, &g)?;
            let document = json!({
                "kind": kind,
                "flux": field_to_json(&ts, &flux),
                "condition_report": interior_kernel_report(&ts, &part),
            });
            Ok(SolveOutcome { document, worst: 0.0 })
        }
        "balayage" => {
            let f = to_field(&ts, require(&spec.f, kind, "f")?, "f")?;
            let subset: BTreeSet<usize> = resolve_subset(&ts, spec, kind)?.into_iter().collect();
            let ground = resolve_ground(&ts, net, spec, overrides)?;
            let result = balayage(&ts, &f, &subset, ground)?;
            let document = json!({
                "kind": kind,
                "reduite": field_to_json(&ts, &result.reduite),
                "balayee": field_to_json(&ts, &result.balayee),
                "residuals": {"equation": result.residual},
                "condition_report": grounded_report(&ts, ground),
            });
            Ok(SolveOutcome { document, worst: result.residual })
        }
        "iterated-poisson" => {
            let f = to_field(&ts, require(&spec.f, kind, "f")?, "f")?;
            let ground = resolve_ground(&ts, net, spec, overrides)?;
            let sol = solve_iterated_poisson(&ts, &f, ground)?;
            Ok(solution_document(&ts, kind, &sol, grounded_report(&ts, ground)))
        }
        "bineumann" => {
            let f = to_field(&ts, require(&spec.f, kind, "f")?, "f")?;
            let g = to_field(&ts, require(&spec.g, kind, "g")?, "g")?;
            let ground = resolve_ground(&ts, net, spec, overrides)?;
            let sol = solve_bineumann(&ts, &part, &f, &g, ground)?;
            Ok(solution_document(&ts, kind, &sol, fourth_order_report(&ts, &part)))
        }
        "bidirichlet" => {
            let f = to_field(&ts, require(&spec.f, kind, "f")?, "f")?;
            let g = to_field(&ts, require(&spec.g, kind, "g")?, "g")?;
            let sol = solve_bidirichlet(&ts, &part, &f, &g)?;
            Ok(solution_document(&ts, kind, &sol, fourth_order_report(&ts, &part)))
        }
        "plate1" => {
            let f = to_field(&ts, require(&spec.f, kind, "f")?, "f")?;
            let g1 = to_field(&ts, require(&spec.g1, kind, "g1")?, "g1")?;
            let g2 = to_field(&ts, require(&spec.g2, kind, "g2")?, "g2")?;
            let sol = solve_plate1(&ts, &part, &f, &g1, &g2)?;
            Ok(solution_document(&ts, kind, &sol, fourth_order_report(&ts, &part)))
        }
        "plate2" => {
            let f = to_field(&ts, require(&spec.f, kind, "f")?, "f")?;
            let g1 = to_field(&ts, require(&spec.g1, kind, "g1")?, "g1")?;
            let g2 = to_field(&ts, require(&spec.g2, kind, "g2")?, "g2")?;
            let sol = solve_plate2(&ts, &part, &f, &g1, &g2)?;
            Ok(solution_document(&ts, kind, &sol, fourth_order_report(&ts, &part)))
        }
        "iterated-dirichlet" => {
            let f = to_field(&ts, require(&spec.f, kind, "f")?, "f")?;
            let g1 = to_field(&ts, require(&spec.g1, kind, "g1")?, "g1")?;
            let g2 = to_field(&ts, require(&spec.g2, kind, "g2")?, "g2")?;
            let sol = solve_iterated_dirichlet(&ts, &part, &f, &g1, &g2)?;
            Ok(solution_document(&ts, kind, &sol, fourth_order_report(&ts, &part)))
        }
        "bi-d2n" => {
            let f = to_field(&ts, require(&spec.f, kind, "f")?, "f")?;
            let g2 = to_field(&ts, require(&spec.g2, kind, "g2")?, "g2")?;
            let flux = bi_d2n(&ts, &part, &g2, &f)?;
            let document = json!({
                "kind": kind,
                "flux": field_to_json(&ts, &flux),
                "condition_report": fourth_order_report(&ts, &part),
            });
            Ok(SolveOutcome { document, worst: 0.0 })
        }
        "bi-n2d" => {
            let f = to_field(&ts, require(&spec.f, kind, "f")?, "f")?;
            let g1 = to_field(&ts, require(&spec.g1, kind, "g1")?, "g1")?;
            let anchor_label = overrides
                .anchor
                .as_deref()
                .or(spec.anchor.as_deref())
                .ok_or_else(|| {
                    CliError::Input("problem kind \"bi-n2d\" needs an anchor vertex".to_string())
                })?;
            let anchor = index_of(&ts, anchor_label, "anchor")?;
            let value = spec.c.map(NumberLike::to_cx).unwrap_or_else(|| Cx::new(0.0, 0.0));
            let g2 = bi_n2d(&ts, &part, &g1, &f, anchor, value)?;
            let document = json!({
                "kind": kind,
                "boundary_values": field_to_json(&ts, &g2),
                "condition_report": fourth_order_report(&ts, &part),
            });
            Ok(SolveOutcome { document, worst: 0.0 })
        }
        "normal-derivative" => {
            let u = to_field(&ts, require(&spec.u, kind, "u")?, "u")?;
            let variant = normal.unwrap_or(NormalArg::Standard);
            let subset;
            let derivative_kind = match variant {
                NormalArg::Standard => NormalDerivativeKind::Standard,
                NormalArg::Reversed => NormalDerivativeKind::Reversed,
                NormalArg::Override => NormalDerivativeKind::Overridden,
                NormalArg::Subnetwork => {
                    subset = resolve_subset(&ts, spec, kind)?;
                    NormalDerivativeKind::Subnetwork(&subset)
                }
                NormalArg::Star => {
                    subset = resolve_subset(&ts, spec, kind)?;
                    NormalDerivativeKind::ExteriorStar(&subset)
                }
            };
            let out = normal_derivative(&ts, &part, &u, derivative_kind)?;
            let document = json!({
                "kind": kind,
                "variant": normal_name(variant),
                "normal_derivative": field_to_json(&ts, &out),
            });
            Ok(SolveOutcome { document, worst: 0.0 })
        }
        other => Err(CliError::Input(format!("unknown problem kind {other:?}"))),
    }
}

pub fn normal_name(variant: NormalArg) -> &'static str {
    match variant {
        NormalArg::Standard => "standard",
        NormalArg::Reversed => "reversed",
        NormalArg::Subnetwork => "subnetwork",
        NormalArg::Star => "star",
        NormalArg::Override => "override",
    }
}
