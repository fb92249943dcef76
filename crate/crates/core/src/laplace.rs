//! First-order boundary value problems for the normalized Laplacian
//! Δ = P − I: Poisson, Neumann, Dirichlet, mixed, Robin, equations with a
//! complex potential, the Dirichlet-to-Neumann map, and balayage.
//!
//! Every solver verifies its own defining equations before returning; a
//! residual above the gate is an internal error, not a warning.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::field::{Cx, FieldFunction};
use crate::linalg::{self, LuReport};
use crate::markov::{self, block, Partition, TransitionSystem};
use crate::tol;

/// A solved problem: the solution itself, the dimension of the full solution
/// family (the returned representative grounds any free constants), the
/// verified residuals of the defining equations, and the residuals of any
/// solvability conditions that were checked.
#[derive(Debug, Clone)]
pub struct Solution {
    pub u: FieldFunction,
    pub degrees_of_freedom: usize,
    pub residuals: BTreeMap<String, f64>,
    pub conditions: BTreeMap<String, f64>,
}

/// max(1, data magnitudes); residual gates are relative to this.
pub(crate) fn data_scale(parts: &[&FieldFunction]) -> f64 {
    parts.iter().map(|f| f.max_abs()).fold(1.0, f64::max)
}

pub(crate) fn gate(what: &str, residual: f64, tolerance: f64) -> Result<f64> {
    if residual.is_finite() && residual <= tolerance {
        Ok(residual)
    } else {
        Err(Error::ResidualCheck {
            what: what.to_string(),
            residual,
            tolerance,
        })
    }
}

pub(crate) fn full_order(n: usize) -> Vec<usize> {
    (0..n).collect()
}

/// Σ_{x in subset} π(x) f(x).
pub(crate) fn pi_integral(ts: &TransitionSystem, f: &FieldFunction, subset: &[usize]) -> Result<Cx> {
    let mut acc = Cx::new(0.0, 0.0);
    for &x in subset {
        acc += ts.pi()[x] * f.at(x, "charge data")?;
    }
    Ok(acc)
}

/// (Δu)(x) = Σ_y p(x,y) u(y) − u(x), evaluated on all vertices.
pub fn apply_laplacian(ts: &TransitionSystem, u: &FieldFunction) -> Result<FieldFunction> {
    let order = full_order(ts.n());
    let v = u.vector_for(&order, "Laplacian argument")?;
    let lap = linalg::apply_real(ts.p(), &v) - &v;
    Ok(FieldFunction::from_vector(&order, &lap))
}

/// Splits a subset of the vertex range into its boundary (vertices with a
/// transition leaving the subset) and interior, judged by the chain.
pub(crate) fn subset_split(ts: &TransitionSystem, subset: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    markov::check_subset(ts.n(), subset)?;
    let inside: BTreeSet<usize> = subset.iter().copied().collect();
    let mut boundary = Vec::new();
    let mut interior = Vec::new();
    for &x in subset {
        let exterior_mass: f64 = (0..ts.n())
            .filter(|z| !inside.contains(z))
            .map(|z| ts.prob(x, z))
            .sum();
        if exterior_mass > 0.0 {
            boundary.push(x);
        } else {
            interior.push(x);
        }
    }
    Ok((boundary, interior))
}

/// Orientation of the derivative at the boundary.
#[derive(Debug, Clone, Copy)]
pub enum NormalDerivativeKind<'a> {
    /// −Δu on ∂X, using the rows of the chain itself.
    Standard,
    /// −Δ̂u on ∂X, using the reversed chain.
    Reversed,
    /// −Δu with overridden boundary rows; requires the system to carry an
    /// override.
    Overridden,
    /// −Δ_Y u on ∂Y for the renormalized chain of the given subset.
    Subnetwork(&'a [usize]),
    /// Average outward difference over the edges leaving the subset:
    /// (1/p(y, outside)) Σ_z p(y,z) (u(z) − u(y)).
    ExteriorStar(&'a [usize]),
}

/// Outer normal derivative of u on ∂X (or on ∂Y for the subset variants).
pub fn normal_derivative(
    ts: &TransitionSystem,
    part: &Partition,
    u: &FieldFunction,
    kind: NormalDerivativeKind<'_>,
) -> Result<FieldFunction> {
    let minus_delta_rows = |p: &DMatrix<f64>, at: &[usize]| -> Result<FieldFunction> {
        let order = full_order(ts.n());
        let v = u.vector_for(&order, "normal derivative argument")?;
        let pairs: Vec<(usize, Cx)> = at
            .iter()
            .map(|&y| {
                let mut stepped = Cx::new(0.0, 0.0);
                for z in 0..ts.n() {
                    stepped += p[(y, z)] * v[z];
                }
                (y, v[y] - stepped)
            })
            .collect();
        FieldFunction::new(pairs)
    };
    match kind {
        NormalDerivativeKind::Standard => minus_delta_rows(ts.p(), part.boundary()),
        NormalDerivativeKind::Reversed => minus_delta_rows(ts.reverse().p(), part.boundary()),
        NormalDerivativeKind::Overridden => {
            if ts.overridden_rows().is_none() {
                return Err(Error::BadParameter(
                    "overridden normal derivative needs a system with replaced boundary rows"
                        .to_string(),
                ));
            }
            minus_delta_rows(ts.p(), part.boundary())
        }
        NormalDerivativeKind::Subnetwork(subset) => {
            let sub = markov::restricted_transition(ts, subset)?;
            let (sub_boundary, _) = subset_split(ts, subset)?;
            let pairs: Vec<(usize, Cx)> = sub_boundary
                .iter()
                .map(|&y| {
                    let i = subset.binary_search(&y).expect("boundary lies in subset");
                    let mut stepped = Cx::new(0.0, 0.0);
                    for (j, &z) in subset.iter().enumerate() {
                        if sub.prob(i, j) > 0.0 {
                            stepped += sub.prob(i, j) * u.at(z, "normal derivative argument")?;
                        }
                    }
                    Ok((y, u.at(y, "normal derivative argument")? - stepped))
                })
                .collect::<Result<_>>()?;
            FieldFunction::new(pairs)
        }
        NormalDerivativeKind::ExteriorStar(subset) => {
            let inside: BTreeSet<usize> = subset.iter().copied().collect();
            let (sub_boundary, _) = subset_split(ts, subset)?;
            let pairs: Vec<(usize, Cx)> = sub_boundary
                .iter()
                .map(|&y| {
                    let uy = u.at(y, "normal derivative argument")?;
                    let mut mass = 0.0;
                    let mut acc = Cx::new(0.0, 0.0);
                    for z in 0..ts.n() {
                        if !inside.contains(&z) && ts.prob(y, z) > 0.0 {
                            mass += ts.prob(y, z);
                            acc += ts.prob(y, z)
                                * (u.at(z, "normal derivative argument")? - uy);
                        }
                    }
                    if mass <= 0.0 {
                        return Err(Error::BadParameter(format!(
                            "vertex {} has no transitions leaving the subset",
                            ts.label(y)
                        )));
                    }
                    Ok((y, acc / mass))
                })
                .collect::<Result<_>>()?;
            FieldFunction::new(pairs)
        }
    }
}

/// Grounded solution of Δu = f for a balanced charge: u(ground) = 0 and
/// u = −G_{X \ ground} f elsewhere.
pub fn solve_poisson(ts: &TransitionSystem, f: &FieldFunction, ground: usize) -> Result<Solution> {
    let n = ts.n();
    if ground >= n {
        return Err(Error::BadParameter(format!(
            "ground vertex index {ground} out of range"
        )));
    }
    let order = full_order(n);
    let scale = data_scale(&[f]);
    let charge = pi_integral(ts, f, &order)?;
    if charge.norm() > tol::GATE * scale {
        return Err(Error::Unsolvable {
            what: "balanced charge (stationary integral of f must vanish)",
            residual: charge.norm(),
        });
    }
    let rest: Vec<usize> = (0..n).filter(|&x| x != ground).collect();
    let (g, _report) = markov::green_block(ts, &rest)?;
    let f_rest = f.vector_for(&rest, "Poisson charge")?;
    let u_rest = -linalg::apply_real(&g, &f_rest);
    let u = FieldFunction::from_vector(&rest, &u_rest)
        .union(&FieldFunction::zero([ground]))?;
    let lap = apply_laplacian(ts, &u)?;
    let mut worst = 0.0f64;
    for &x in &order {
        worst = worst.max((lap.at(x, "residual")? - f.at(x, "residual")?).norm());
    }
    let mut residuals = BTreeMap::new();
    residuals.insert(
        "equation".to_string(),
        gate("Poisson equation residual", worst, tol::GATE * scale)?,
    );
    let mut conditions = BTreeMap::new();
    conditions.insert("charge".to_string(), charge.norm());
    Ok(Solution {
        u,
        degrees_of_freedom: 1,
        residuals,
        conditions,
    })
}

/// Neumann problem: Δu = f on the interior, outward derivative g on the
/// boundary. Reduces to a Poisson problem for the charge that equals f
/// inside and −g on the boundary.
pub fn solve_neumann(
    ts: &TransitionSystem,
    part: &Partition,
    f: &FieldFunction,
    g: &FieldFunction,
    ground: usize,
) -> Result<Solution> {
    let interior = part.interior_nonempty()?;
    let boundary = part.boundary();
    let scale = data_scale(&[f, g]);
    let compat = pi_integral(ts, f, interior)? - pi_integral(ts, g, boundary)?;
    if compat.norm() > tol::GATE * scale {
        return Err(Error::Unsolvable {
            what: "Neumann compatibility (interior charge must equal boundary flux)",
            residual: compat.norm(),
        });
    }
    let mut charge: Vec<(usize, Cx)> = Vec::with_capacity(ts.n());
    for &x in interior {
        charge.push((x, f.at(x, "Neumann interior data")?));
    }
    for &y in boundary {
        charge.push((y, -g.at(y, "Neumann boundary data")?));
    }
    let combined = FieldFunction::new(charge)?;
    let inner = solve_poisson(ts, &combined, ground)?;
    let u = inner.u;
    let lap = apply_laplacian(ts, &u)?;
    let mut interior_res = 0.0f64;
    for &x in interior {
        interior_res = interior_res.max((lap.at(x, "residual")? - f.at(x, "residual")?).norm());
    }
    let flux = normal_derivative(ts, part, &u, NormalDerivativeKind::Standard)?;
    let mut flux_res = 0.0f64;
    for &y in boundary {
        flux_res = flux_res.max((flux.at(y, "residual")? - g.at(y, "residual")?).norm());
    }
    let mut residuals = BTreeMap::new();
    residuals.insert(
        "interior".to_string(),
        gate("Neumann interior residual", interior_res, tol::GATE * scale)?,
    );
    residuals.insert(
        "boundary_flux".to_string(),
        gate("Neumann flux residual", flux_res, tol::GATE * scale)?,
    );
    let mut conditions = BTreeMap::new();
    conditions.insert("compatibility".to_string(), compat.norm());
    Ok(Solution {
        u,
        degrees_of_freedom: 1,
        residuals,
        conditions,
    })
}

/// Dirichlet problem: Δu = f on the interior, u = g on the boundary.
pub fn solve_dirichlet(
    ts: &TransitionSystem,
    part: &Partition,
    f: &FieldFunction,
    g: &FieldFunction,
) -> Result<Solution> {
    let interior = part.interior_nonempty()?;
    let boundary = part.boundary();
    let scale = data_scale(&[f, g]);
    let (green, _report) = markov::green_block(ts, interior)?;
    let g_vec = g.vector_for(boundary, "Dirichlet boundary data")?;
    let f_vec = f.vector_for(interior, "Dirichlet interior data")?;
    let coupled = linalg::apply_real(&block(ts.p(), interior, boundary), &g_vec);
    let u_int = -linalg::apply_real(&green, &(f_vec - coupled));
    let u = FieldFunction::from_vector(interior, &u_int)
        .union(&FieldFunction::new(
            boundary.iter().enumerate().map(|(j, &y)| (y, g_vec[j])),
        )?)?;
    let lap = apply_laplacian(ts, &u)?;
    let mut interior_res = 0.0f64;
    for &x in interior {
        interior_res = interior_res.max((lap.at(x, "residual")? - f.at(x, "residual")?).norm());
    }
    let mut residuals = BTreeMap::new();
    residuals.insert(
        "interior".to_string(),
        gate("Dirichlet interior residual", interior_res, tol::GATE * scale)?,
    );
    residuals.insert("boundary_values".to_string(), 0.0);
    Ok(Solution {
        u,
        degrees_of_freedom: 0,
        residuals,
        conditions: BTreeMap::new(),
    })
}

/// Mixed problem: prescribed values g on D, prescribed outward derivative g
/// on N, where D and N partition the boundary. Solved as a Dirichlet-style
/// problem on interior ∪ N with the flux folded into the charge.
pub fn solve_mixed(
    ts: &TransitionSystem,
    part: &Partition,
    f: &FieldFunction,
    g: &FieldFunction,
    dirichlet_part: &BTreeSet<usize>,
) -> Result<Solution> {
    let interior = part.interior_nonempty()?;
    let boundary = part.boundary();
    if dirichlet_part.is_empty() {
        return Err(Error::EmptySubset("mixed problem needs a non-empty value part".to_string()));
    }
    if let Some(&bad) = dirichlet_part.iter().find(|x| !part.is_boundary(**x)) {
        return Err(Error::BadParameter(format!(
            "mixed value vertex {bad} is not a boundary vertex"
        )));
    }
    let neumann_part: Vec<usize> = boundary
        .iter()
        .copied()
        .filter(|x| !dirichlet_part.contains(x))
        .collect();
    if neumann_part.is_empty() {
        return Err(Error::EmptySubset(
            "mixed problem needs a non-empty flux part".to_string(),
        ));
    }
    let d: Vec<usize> = dirichlet_part.iter().copied().collect();
    let mut w: Vec<usize> = interior.iter().copied().chain(neumann_part.iter().copied()).collect();
    w.sort_unstable();
    let scale = data_scale(&[f, g]);
    let (green, _report) = markov::green_block(ts, &w)?;
    let mut charge = DVector::<Cx>::zeros(w.len());
    for (i, &x) in w.iter().enumerate() {
        charge[i] = if part.is_boundary(x) {
            -g.at(x, "mixed flux data")?
        } else {
            f.at(x, "mixed interior data")?
        };
    }
    let g_d = g.vector_for(&d, "mixed value data")?;
    let coupled = linalg::apply_real(&block(ts.p(), &w, &d), &g_d);
    let u_w = -linalg::apply_real(&green, &(charge - coupled));
    let u = FieldFunction::from_vector(&w, &u_w).union(&FieldFunction::new(
        d.iter().enumerate().map(|(j, &y)| (y, g_d[j])),
    )?)?;
    let lap = apply_laplacian(ts, &u)?;
    let mut interior_res = 0.0f64;
    for &x in interior {
        interior_res = interior_res.max((lap.at(x, "residual")? - f.at(x, "residual")?).norm());
    }
    let flux = normal_derivative(ts, part, &u, NormalDerivativeKind::Standard)?;
    let mut flux_res = 0.0f64;
    for &y in &neumann_part {
        flux_res = flux_res.max((flux.at(y, "residual")? - g.at(y, "residual")?).norm());
    }
    let mut residuals = BTreeMap::new();
    residuals.insert(
        "interior".to_string(),
        gate("mixed interior residual", interior_res, tol::GATE * scale)?,
    );
    residuals.insert(
        "boundary_flux".to_string(),
        gate("mixed flux residual", flux_res, tol::GATE * scale)?,
    );
    residuals.insert("boundary_values".to_string(), 0.0);
    Ok(Solution {
        u,
        degrees_of_freedom: 0,
        residuals,
        conditions: BTreeMap::new(),
    })
}

/// Maps boundary values to the outward derivative of their harmonic
/// extension: g ↦ (I − Q) g with Q the boundary chain.
pub fn dirichlet_to_neumann(
    ts: &TransitionSystem,
    part: &Partition,
    g: &FieldFunction,
) -> Result<FieldFunction> {
    let app = markov::boundary_chain(ts, part)?;
    let boundary = part.boundary();
    let g_vec = g.vector_for(boundary, "boundary values")?;
    let out = &g_vec - linalg::apply_real(app.q(), &g_vec);
    Ok(FieldFunction::from_vector(boundary, &out))
}

/// The substochastic transformation that turns Δu − v·u = f into a plain
/// Poisson-type system: rows of P are scaled by 1/(1+v(x)) and charges by
/// the same factor. Requires |1+v| ≥ 1 everywhere with strict inequality
/// somewhere, which makes I − P̃ invertible.
#[derive(Debug, Clone)]
pub struct PotentialTransform {
    v: FieldFunction,
    p_tilde: DMatrix<Cx>,
    g_tilde: DMatrix<Cx>,
    report: LuReport,
}

impl PotentialTransform {
    pub fn new(ts: &TransitionSystem, v: &FieldFunction) -> Result<Self> {
        let n = ts.n();
        let order = full_order(n);
        let v_vec = v.vector_for(&order, "potential")?;
        check_potential(ts, &v_vec, &order, true)?;
        let p_tilde = DMatrix::from_fn(n, n, |x, y| {
            Cx::new(ts.prob(x, y), 0.0) / (Cx::new(1.0, 0.0) + v_vec[x])
        });
        let a = DMatrix::<Cx>::identity(n, n) - &p_tilde;
        let (g_tilde, report) = linalg::invert(&a, "potential kernel")?;
        gate("potential kernel inverse residual", report.residual, tol::GATE)?;
        Ok(Self {
            v: v.clone(),
            p_tilde,
            g_tilde,
            report,
        })
    }

    pub fn v(&self) -> &FieldFunction {
        &self.v
    }

    pub fn p_tilde(&self) -> &DMatrix<Cx> {
        &self.p_tilde
    }

    /// (I − P̃)^{-1}, indexed by vertex.
    pub fn g_tilde(&self) -> &DMatrix<Cx> {
        &self.g_tilde
    }

    pub fn report(&self) -> LuReport {
        self.report
    }

    /// f̃(x) = f(x) / (1 + v(x)).
    pub fn transform_charge(&self, f: &FieldFunction) -> Result<FieldFunction> {
        let pairs: Vec<(usize, Cx)> = f
            .iter()
            .map(|(x, fx)| Ok((x, fx / (Cx::new(1.0, 0.0) + self.v.at(x, "potential")?))))
            .collect::<Result<_>>()?;
        FieldFunction::new(pairs)
    }
}

/// |1+v| ≥ 1 on the given vertices; when `strict` also |1+v| > 1 somewhere.
fn check_potential(
    ts: &TransitionSystem,
    v_vec: &DVector<Cx>,
    at: &[usize],
    strict: bool,
) -> Result<()> {
    let mut max_mod = 0.0f64;
    for (i, &x) in at.iter().enumerate() {
        let m = (Cx::new(1.0, 0.0) + v_vec[i]).norm();
        if m < 1.0 - tol::EXACT {
            return Err(Error::Hypothesis {
                what: "potential admissibility",
                detail: format!(
                    "|1 + v({})| = {m} < 1; the transformed chain would gain mass",
                    ts.label(x)
                ),
            });
        }
        max_mod = max_mod.max(m);
    }
    if strict && max_mod <= 1.0 + tol::EXACT {
        return Err(Error::Hypothesis {
            what: "potential admissibility",
            detail: "|1 + v| = 1 everywhere; the transformed chain loses no mass and the \
                     kernel does not converge"
                .to_string(),
        });
    }
    Ok(())
}

/// Solves Δu − v·u = f on all of X for an admissible potential v.
pub fn solve_poisson_potential(
    ts: &TransitionSystem,
    f: &FieldFunction,
    v: &FieldFunction,
) -> Result<Solution> {
    let order = full_order(ts.n());
    let transform = PotentialTransform::new(ts, v)?;
    let f_tilde = transform.transform_charge(f)?.vector_for(&order, "charge")?;
    let u_vec = -(transform.g_tilde() * f_tilde);
    let u = FieldFunction::from_vector(&order, &u_vec);
    let lap = apply_laplacian(ts, &u)?;
    let mut worst = 0.0f64;
    let mut scale = data_scale(&[f]);
    for &x in &order {
        let vu = v.at(x, "potential")? * u.at(x, "residual")?;
        scale = scale.max(vu.norm());
        worst = worst.max((lap.at(x, "residual")? - vu - f.at(x, "residual")?).norm());
    }
    let mut residuals = BTreeMap::new();
    residuals.insert(
        "equation".to_string(),
        gate("potential equation residual", worst, tol::GATE * scale)?,
    );
    Ok(Solution {
        u,
        degrees_of_freedom: 0,
        residuals,
        conditions: BTreeMap::new(),
    })
}

/// Dirichlet problem with potential: Δu − v·u = f on the interior, u = g on
/// the boundary. The potential only needs to be admissible on the interior
/// (no strictness required; the boundary already absorbs mass).
pub fn solve_dirichlet_potential(
    ts: &TransitionSystem,
    part: &Partition,
    f: &FieldFunction,
    g: &FieldFunction,
    v: &FieldFunction,
) -> Result<Solution> {
    let interior = part.interior_nonempty()?;
    let boundary = part.boundary();
    let v_vec = v.vector_for(interior, "potential")?;
    check_potential(ts, &v_vec, interior, false)?;
    let scale = data_scale(&[f, g]);
    let k = interior.len();
    let one = Cx::new(1.0, 0.0);
    let p_tilde_int = DMatrix::from_fn(k, k, |i, j| {
        Cx::new(ts.prob(interior[i], interior[j]), 0.0) / (one + v_vec[i])
    });
    let a = DMatrix::<Cx>::identity(k, k) - &p_tilde_int;
    let (g_tilde, report) = linalg::invert(&a, "restricted potential kernel")?;
    gate("potential kernel inverse residual", report.residual, tol::GATE)?;
    let g_vec = g.vector_for(boundary, "Dirichlet boundary data")?;
    let p_tilde_couple = DMatrix::from_fn(k, boundary.len(), |i, j| {
        Cx::new(ts.prob(interior[i], boundary[j]), 0.0) / (one + v_vec[i])
    });
    let mut rhs = f.vector_for(interior, "Dirichlet interior data")?;
    for i in 0..k {
        rhs[i] /= one + v_vec[i];
    }
    rhs -= p_tilde_couple * &g_vec;
    let u_int = -(g_tilde * rhs);
    let u = FieldFunction::from_vector(interior, &u_int)
        .union(&FieldFunction::new(
            boundary.iter().enumerate().map(|(j, &y)| (y, g_vec[j])),
        )?)?;
    let lap = apply_laplacian(ts, &u)?;
    let mut interior_res = 0.0f64;
    for (i, &x) in interior.iter().enumerate() {
        let vu = v_vec[i] * u.at(x, "residual")?;
        interior_res =
            interior_res.max((lap.at(x, "residual")? - vu - f.at(x, "residual")?).norm());
    }
    let mut residuals = BTreeMap::new();
    residuals.insert(
        "interior".to_string(),
        gate("potential Dirichlet residual", interior_res, tol::GATE * scale)?,
    );
    residuals.insert("boundary_values".to_string(), 0.0);
    Ok(Solution {
        u,
        degrees_of_freedom: 0,
        residuals,
        conditions: BTreeMap::new(),
    })
}

/// Robin problem: Δu = f on the interior and α·u + β·∂u = g on the boundary
/// (∂ the standard outward derivative). Boundary points with β = 0 carry
/// pure value conditions; elsewhere the condition is folded into the chain
/// by scaling the row at x with β(x)/(α(x)+β(x)).
pub fn solve_robin(
    ts: &TransitionSystem,
    part: &Partition,
    f: &FieldFunction,
    g: &FieldFunction,
    alpha: &FieldFunction,
    beta: &FieldFunction,
) -> Result<Solution> {
    let interior = part.interior_nonempty()?;
    let boundary = part.boundary();
    let one = Cx::new(1.0, 0.0);
    let mut value_part: Vec<usize> = Vec::new();
    let mut flux_part: Vec<usize> = Vec::new();
    for &x in boundary {
        let a = alpha.at(x, "Robin coefficient alpha")?;
        let b = beta.at(x, "Robin coefficient beta")?;
        if b.norm() == 0.0 {
            if a.norm() == 0.0 {
                return Err(Error::Hypothesis {
                    what: "Robin coefficients",
                    detail: format!("alpha and beta both vanish at {}", ts.label(x)),
                });
            }
            value_part.push(x);
        } else {
            if (a + b).norm() < b.norm() * (1.0 - tol::EXACT) {
                return Err(Error::Hypothesis {
                    what: "Robin coefficients",
                    detail: format!(
                        "|alpha + beta| < |beta| at {}; the folded chain would gain mass",
                        ts.label(x)
                    ),
                });
            }
            flux_part.push(x);
        }
    }
    if value_part.is_empty() {
        let strict = flux_part.iter().any(|&x| {
            let a = alpha.get(x).unwrap();
            let b = beta.get(x).unwrap();
            (a + b).norm() > b.norm() * (1.0 + tol::EXACT)
        });
        if !strict {
            return Err(Error::Hypothesis {
                what: "Robin coefficients",
                detail: "no pure value points and |alpha + beta| = |beta| everywhere; \
                         the folded chain loses no mass"
                    .to_string(),
            });
        }
    }
    let mut w: Vec<usize> = interior.iter().copied().chain(flux_part.iter().copied()).collect();
    w.sort_unstable();
    let scale = data_scale(&[f, g, alpha, beta]);
    // Row scale: 1 on the interior, beta/(alpha+beta) on folded boundary rows.
    let row_scale = |x: usize| -> Cx {
        if part.is_boundary(x) {
            let a = alpha.get(x).unwrap();
            let b = beta.get(x).unwrap();
            b / (a + b)
        } else {
            one
        }
    };
    let m = DMatrix::from_fn(w.len(), w.len(), |i, j| {
        let d = if i == j { one } else { Cx::new(0.0, 0.0) };
        d - row_scale(w[i]) * ts.prob(w[i], w[j])
    });
    let (green, report) = linalg::invert(&m, "Robin kernel")?;
    gate("Robin kernel inverse residual", report.residual, tol::GATE)?;
    let mut charge = DVector::<Cx>::zeros(w.len());
    for (i, &x) in w.iter().enumerate() {
        charge[i] = if part.is_boundary(x) {
            let a = alpha.get(x).unwrap();
            let b = beta.get(x).unwrap();
            -g.at(x, "Robin data")? / (a + b)
        } else {
            f.at(x, "Robin interior data")?
        };
    }
    if !value_part.is_empty() {
        let g_d = DVector::from_fn(value_part.len(), |j, _| {
            g.get(value_part[j]).unwrap() / alpha.get(value_part[j]).unwrap()
        });
        let couple = DMatrix::from_fn(w.len(), value_part.len(), |i, j| {
            row_scale(w[i]) * ts.prob(w[i], value_part[j])
        });
        charge -= couple * &g_d;
    }
    let u_w = -(green * charge);
    let mut u = FieldFunction::from_vector(&w, &u_w);
    if !value_part.is_empty() {
        let values: Vec<(usize, Cx)> = value_part
            .iter()
            .map(|&x| (x, g.get(x).unwrap() / alpha.get(x).unwrap()))
            .collect();
        u = u.union(&FieldFunction::new(values)?)?;
    }
    let lap = apply_laplacian(ts, &u)?;
    let mut interior_res = 0.0f64;
    for &x in interior {
        interior_res = interior_res.max((lap.at(x, "residual")? - f.at(x, "residual")?).norm());
    }
    let flux = normal_derivative(ts, part, &u, NormalDerivativeKind::Standard)?;
    let mut robin_res = 0.0f64;
    for &y in boundary {
        let lhs = alpha.get(y).unwrap() * u.at(y, "residual")?
            + beta.get(y).unwrap() * flux.at(y, "residual")?;
        robin_res = robin_res.max((lhs - g.at(y, "residual")?).norm());
    }
    let mut residuals = BTreeMap::new();
    residuals.insert(
        "interior".to_string(),
        gate("Robin interior residual", interior_res, tol::GATE * scale)?,
    );
    residuals.insert(
        "boundary_robin".to_string(),
        gate("Robin boundary residual", robin_res, tol::GATE * scale)?,
    );
    Ok(Solution {
        u,
        degrees_of_freedom: 0,
        residuals,
        conditions: BTreeMap::new(),
    })
}

/// Sweeping a balanced charge onto a subset: the réduite agrees with the
/// grounded solution on Y and continues harmonically outside; the balayée is
/// the Laplacian of the réduite, supported on Y.
#[derive(Debug, Clone)]
pub struct BalayageResult {
    pub reduite: FieldFunction,
    pub balayee: FieldFunction,
    /// Max-norm gap between Δ(réduite) and the closed-form balayée.
    pub residual: f64,
}

pub fn balayage(
    ts: &TransitionSystem,
    f: &FieldFunction,
    y: &BTreeSet<usize>,
    ground: usize,
) -> Result<BalayageResult> {
    let n = ts.n();
    if y.is_empty() {
        return Err(Error::EmptySubset("sweep target is empty".to_string()));
    }
    if y.len() == n {
        return Err(Error::BadParameter(
            "sweep target must be a strict subset".to_string(),
        ));
    }
    if let Some(&bad) = y.iter().find(|&&x| x >= n) {
        return Err(Error::BadParameter(format!("vertex index {bad} out of range")));
    }
    let y_sorted: Vec<usize> = y.iter().copied().collect();
    let complement: Vec<usize> = (0..n).filter(|x| !y.contains(x)).collect();
    let solution = solve_poisson(ts, f, ground)?;
    let u = solution.u;
    // Harmonic continuation off Y: w = G_{X\Y} P_{X\Y, Y} u|_Y.
    let (green_out, _) = markov::green_block(ts, &complement)?;
    let u_y = u.vector_for(&y_sorted, "réduite")?;
    let coupled = linalg::apply_real(&block(ts.p(), &complement, &y_sorted), &u_y);
    let w = linalg::apply_real(&green_out, &coupled);
    let reduite = FieldFunction::from_vector(&y_sorted, &u_y)
        .union(&FieldFunction::from_vector(&complement, &w))?;
    // Closed form for the swept charge: f inside, a one-step correction on
    // the subset boundary, zero outside.
    let (y_boundary, _y_interior) = subset_split(ts, &y_sorted)?;
    let f_out = f.vector_for(&complement, "swept charge")?;
    let correction = linalg::apply_real(
        &(block(ts.p(), &y_boundary, &complement) * &green_out),
        &f_out,
    );
    let mut pairs: Vec<(usize, Cx)> = Vec::with_capacity(n);
    for &x in &y_sorted {
        let base = f.at(x, "swept charge")?;
        let corr = y_boundary
            .binary_search(&x)
            .ok()
            .map(|i| correction[i])
            .unwrap_or_else(|| Cx::new(0.0, 0.0));
        pairs.push((x, base + corr));
    }
    for &x in &complement {
        pairs.push((x, Cx::new(0.0, 0.0)));
    }
    let balayee = FieldFunction::new(pairs)?;
    let lap = apply_laplacian(ts, &reduite)?;
    let mut worst = 0.0f64;
    for x in 0..n {
        worst = worst.max((lap.at(x, "residual")? - balayee.at(x, "residual")?).norm());
    }
    let residual = gate(
        "balayage consistency (Laplacian of réduite vs closed form)",
        worst,
        tol::SOLVE * data_scale(&[f]),
    )?;
    Ok(BalayageResult {
        reduite,
        balayee,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{funnel_b, path_a};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn path_ts(n: usize) -> (TransitionSystem, Partition) {
        let net = path_a(n).unwrap();
        let part = Partition::from_network(&net);
        (TransitionSystem::from_network(&net).unwrap(), part)
    }

    fn funnel_ts(ps: &[f64]) -> TransitionSystem {
        let n = ps.len();
        let p = DMatrix::from_fn(n, n, |x, y| {
            if x == 0 {
                ps[y]
            } else if y + 1 == x {
                1.0
            } else {
                0.0
            }
        });
        let labels: Vec<String> = (1..=n).map(|k| k.to_string()).collect();
        TransitionSystem::from_stochastic_matrix(labels, p).unwrap()
    }

    fn real_field(vals: &[f64]) -> FieldFunction {
        FieldFunction::from_real(vals.iter().enumerate().map(|(i, &v)| (i, v))).unwrap()
    }

    #[test]
    fn laplacian_of_constants_vanishes() {
        let (ts, _) = path_ts(4);
        let u = FieldFunction::constant(0..5, Cx::new(3.5, -1.0));
        let lap = apply_laplacian(&ts, &u).unwrap();
        assert!(lap.max_abs() < 1e-14);
    }

    #[test]
    fn laplacian_direct_evaluation() {
        let (ts, _) = path_ts(2);
        let lap = apply_laplacian(&ts, &real_field(&[0.0, 2.0, 2.0])).unwrap();
        let expect = [2.0, -1.0, 0.0];
        for (x, e) in expect.iter().enumerate() {
            assert_relative_eq!(lap.get(x).unwrap().re, e, epsilon = 1e-14);
        }
        // Columns of the Laplacian read off the transition probabilities.
        let delta = real_field(&[0.0, 1.0, 0.0]);
        let lap = apply_laplacian(&ts, &delta).unwrap();
        assert_relative_eq!(lap.get(0).unwrap().re, 1.0, epsilon = 1e-14);
        assert_relative_eq!(lap.get(1).unwrap().re, -1.0, epsilon = 1e-14);
        assert_relative_eq!(lap.get(2).unwrap().re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn normal_derivative_variants() {
        let (ts, part) = path_ts(4);
        let constant = FieldFunction::constant(0..5, Cx::new(2.0, 0.0));
        for kind in [
            NormalDerivativeKind::Standard,
            NormalDerivativeKind::Reversed,
            NormalDerivativeKind::Subnetwork(&[1, 2, 3]),
            NormalDerivativeKind::ExteriorStar(&[1, 2, 3]),
        ] {
            let d = normal_derivative(&ts, &part, &constant, kind).unwrap();
            assert!(d.max_abs() < 1e-14, "constant should have zero derivative");
        }
        let linear = real_field(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let d = normal_derivative(&ts, &part, &linear, NormalDerivativeKind::Standard).unwrap();
        assert_relative_eq!(d.get(0).unwrap().re, -1.0, epsilon = 1e-14);
        assert_relative_eq!(d.get(4).unwrap().re, 1.0, epsilon = 1e-14);
        let square = real_field(&[0.0, 1.0, 4.0, 9.0, 16.0]);
        let star =
            normal_derivative(&ts, &part, &square, NormalDerivativeKind::ExteriorStar(&[1, 2, 3]))
                .unwrap();
        assert_eq!(star.support(), &[1, 3]);
        assert_relative_eq!(star.get(3).unwrap().re, 7.0, epsilon = 1e-14);
        assert_relative_eq!(star.get(1).unwrap().re, -1.0, epsilon = 1e-14);
        // Overridden variant demands an actual override.
        assert!(normal_derivative(&ts, &part, &linear, NormalDerivativeKind::Overridden).is_err());
    }

    #[test]
    fn poisson_small_path() {
        let (ts, _) = path_ts(2);
        let f = real_field(&[2.0, -1.0, 0.0]);
        let sol = solve_poisson(&ts, &f, 0).unwrap();
        let expect = [0.0, 2.0, 2.0];
        for (x, e) in expect.iter().enumerate() {
            assert_relative_eq!(sol.u.get(x).unwrap().re, e, epsilon = 1e-12);
        }
        assert_eq!(sol.degrees_of_freedom, 1);
        assert!(sol.residuals["equation"] < 1e-12);
    }

    #[test]
    fn poisson_rejects_unbalanced_charge() {
        let (ts, _) = path_ts(2);
        let f = real_field(&[1.0, 1.0, 1.0]);
        match solve_poisson(&ts, &f, 0) {
            Err(Error::Unsolvable { residual, .. }) => assert_relative_eq!(residual, 1.0),
            other => panic!("expected unsolvable, got {other:?}"),
        }
    }

    #[test]
    fn poisson_funnel_closed_form() {
        let ps = [0.5, 0.25, 0.25];
        let ts = funnel_ts(&ps);
        // Balanced: pi = (4/7, 2/7, 1/7).
        let f = real_field(&[1.0, -2.0, 0.0]);
        let sol = solve_poisson(&ts, &f, 0).unwrap();
        // Downward-chain kernel gives u(k) = -sum of f over 2..=k.
        assert_relative_eq!(sol.u.get(1).unwrap().re, 2.0, epsilon = 1e-12);
        assert_relative_eq!(sol.u.get(2).unwrap().re, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn dirichlet_interpolates_boundary_values() {
        let (ts, part) = path_ts(2);
        let f = FieldFunction::zero([1]);
        let g = real_field(&[0.0]).union(&FieldFunction::from_real([(2, 1.0)]).unwrap()).unwrap();
        let sol = solve_dirichlet(&ts, &part, &f, &g).unwrap();
        assert_relative_eq!(sol.u.get(1).unwrap().re, 0.5, epsilon = 1e-12);
        // Constants are harmonic.
        let c = FieldFunction::constant([0, 2], Cx::new(4.0, 1.0));
        let sol = solve_dirichlet(&ts, &part, &FieldFunction::zero([1]), &c).unwrap();
        for x in 0..3 {
            assert_relative_eq!((sol.u.get(x).unwrap() - Cx::new(4.0, 1.0)).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn dirichlet_funnel_harmonic_average() {
        let ps = [0.5, 0.2, 0.3];
        let ts = funnel_ts(&ps);
        let part = Partition::new(3, [1, 2]).unwrap();
        let g = FieldFunction::from_real([(1, 5.0), (2, -3.0)]).unwrap();
        let sol = solve_dirichlet(&ts, &part, &FieldFunction::zero([0]), &g).unwrap();
        let expect = (0.2 * 5.0 + 0.3 * (-3.0)) / 0.5;
        assert_relative_eq!(sol.u.get(0).unwrap().re, expect, epsilon = 1e-12);
    }

    #[test]
    fn dirichlet_deterministic_and_sensitive() {
        let (ts, part) = path_ts(4);
        let f = FieldFunction::from_real([(1, 0.3), (2, -0.1), (3, 0.7)]).unwrap();
        let g = FieldFunction::from_real([(0, 1.0), (4, -2.0)]).unwrap();
        let a = solve_dirichlet(&ts, &part, &f, &g).unwrap();
        let b = solve_dirichlet(&ts, &part, &f, &g).unwrap();
        for x in 0..5 {
            assert_eq!(a.u.get(x), b.u.get(x), "reruns must be bit-identical");
        }
        let g2 = FieldFunction::from_real([(0, 1.0 + 1e-6), (4, -2.0)]).unwrap();
        let c = solve_dirichlet(&ts, &part, &f, &g2).unwrap();
        assert!((c.u.get(2).unwrap() - a.u.get(2).unwrap()).norm() > 0.0);
    }

    #[test]
    fn neumann_reduces_to_poisson() {
        let (ts, part) = path_ts(2);
        let f = FieldFunction::from_real([(1, -1.0)]).unwrap();
        let g = FieldFunction::from_real([(0, -2.0), (2, 0.0)]).unwrap();
        let sol = solve_neumann(&ts, &part, &f, &g, 0).unwrap();
        let expect = [0.0, 2.0, 2.0];
        for (x, e) in expect.iter().enumerate() {
            assert_relative_eq!(sol.u.get(x).unwrap().re, e, epsilon = 1e-12);
        }
        assert_eq!(sol.degrees_of_freedom, 1);
        // Incompatible flux is refused with the imbalance reported.
        let bad = FieldFunction::from_real([(0, 1.0), (2, 0.0)]).unwrap();
        assert!(matches!(
            solve_neumann(&ts, &part, &f, &bad, 0),
            Err(Error::Unsolvable { .. })
        ));
    }

    #[test]
    fn neumann_with_overridden_rows_uses_their_stationary_measure() {
        let (ts, part) = path_ts(3);
        let mut rows = BTreeMap::new();
        rows.insert(0usize, vec![0.0, 0.25, 0.0, 0.75]);
        let over = ts.with_boundary_override(&rows, &part).unwrap();
        // Data balanced for the overridden chain, not the original one.
        let f = FieldFunction::from_real([(1, 1.0), (2, -0.5)]).unwrap();
        let flux = (over.pi()[1] * 1.0 - over.pi()[2] * 0.5) / over.pi()[0];
        let g = FieldFunction::from_real([(0, flux), (3, 0.0)]).unwrap();
        let sol = solve_neumann(&over, &part, &f, &g, 0).unwrap();
        assert!(sol.residuals["boundary_flux"] < 1e-10);
        assert!(matches!(
            solve_neumann(&ts, &part, &f, &g, 0),
            Err(Error::Unsolvable { .. })
        ));
    }

    #[test]
    fn mixed_matches_equivalent_dirichlet_on_funnel() {
        let ps = [0.5, 0.25, 0.25];
        let ts = funnel_ts(&ps);
        let part = Partition::new(3, [1, 2]).unwrap();
        let f = FieldFunction::from_real([(0, 0.4)]).unwrap();
        let g = FieldFunction::from_real([(1, 2.0), (2, -1.0)]).unwrap();
        let d: BTreeSet<usize> = [1].into_iter().collect();
        let mixed = solve_mixed(&ts, &part, &f, &g, &d).unwrap();
        // Deterministic last row turns the flux condition into a value.
        let g_equiv = FieldFunction::from_real([(1, 2.0), (2, 2.0 + -1.0)]).unwrap();
        let dir = solve_dirichlet(&ts, &part, &f, &g_equiv).unwrap();
        for x in 0..3 {
            assert_relative_eq!(
                (mixed.u.get(x).unwrap() - dir.u.get(x).unwrap()).norm(),
                0.0,
                epsilon = 1e-12
            );
        }
        // Degenerate splits are rejected.
        let all: BTreeSet<usize> = [1, 2].into_iter().collect();
        assert!(solve_mixed(&ts, &part, &f, &g, &all).is_err());
        assert!(solve_mixed(&ts, &part, &f, &g, &BTreeSet::new()).is_err());
    }

    #[test]
    fn mixed_residuals_on_path() {
        let (ts, part) = path_ts(4);
        let f = FieldFunction::from_real([(1, 0.2), (2, 0.0), (3, -0.3)]).unwrap();
        let g = FieldFunction::from_real([(0, 1.5), (4, 0.25)]).unwrap();
        let d: BTreeSet<usize> = [0].into_iter().collect();
        let sol = solve_mixed(&ts, &part, &f, &g, &d).unwrap();
        assert_relative_eq!(sol.u.get(0).unwrap().re, 1.5, epsilon = 1e-14);
        assert!(sol.residuals["interior"] < 1e-10);
        assert!(sol.residuals["boundary_flux"] < 1e-10);
    }

    #[test]
    fn dirichlet_to_neumann_path() {
        let (ts, part) = path_ts(4);
        let g = FieldFunction::from_real([(0, 1.0), (4, 0.0)]).unwrap();
        let d2n = dirichlet_to_neumann(&ts, &part, &g).unwrap();
        assert_relative_eq!(d2n.get(0).unwrap().re, 0.25, epsilon = 1e-12);
        assert_relative_eq!(d2n.get(4).unwrap().re, -0.25, epsilon = 1e-12);
        let c = FieldFunction::constant([0, 4], Cx::new(7.0, 0.0));
        let z = dirichlet_to_neumann(&ts, &part, &c).unwrap();
        assert!(z.max_abs() < 1e-12);
        // The map's output is the derivative of the harmonic extension.
        let h = solve_dirichlet(&ts, &part, &FieldFunction::zero([1, 2, 3]), &g).unwrap();
        let flux = normal_derivative(&ts, &part, &h.u, NormalDerivativeKind::Standard).unwrap();
        for &y in part.boundary() {
            assert_relative_eq!(
                (flux.get(y).unwrap() - d2n.get(y).unwrap()).norm(),
                0.0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn potential_strictness_and_residual() {
        let (ts, _) = path_ts(3);
        // All-zero potential keeps the chain mass-preserving: inadmissible
        // for the full-domain problem.
        let zero = FieldFunction::zero(0..4);
        assert!(matches!(
            PotentialTransform::new(&ts, &zero),
            Err(Error::Hypothesis { .. })
        ));
        // |1 + v| = 0 is rejected outright.
        let bad = FieldFunction::from_real([(0, -1.0), (1, 0.0), (2, 0.0), (3, 0.0)]).unwrap();
        assert!(PotentialTransform::new(&ts, &bad).is_err());
        // Purely imaginary potential is admissible: |1+i| > 1.
        let v = FieldFunction::new((0..4).map(|x| {
            (x, if x == 1 { Cx::new(0.0, 1.0) } else { Cx::new(0.0, 0.0) })
        }))
        .unwrap();
        let f = FieldFunction::from_real((0..4).map(|x| (x, (x as f64) - 1.0))).unwrap();
        let sol = solve_poisson_potential(&ts, &f, &v).unwrap();
        assert!(sol.residuals["equation"] < 1e-10);
        assert!(!sol.u.is_real_within(1e-12));
    }

    #[test]
    fn dirichlet_potential_reduces_to_dirichlet_at_zero() {
        let (ts, part) = path_ts(3);
        let f = FieldFunction::from_real([(1, 0.5), (2, -0.25)]).unwrap();
        let g = FieldFunction::from_real([(0, 1.0), (3, 2.0)]).unwrap();
        let v = FieldFunction::zero([1, 2]);
        let with = solve_dirichlet_potential(&ts, &part, &f, &g, &v).unwrap();
        let plain = solve_dirichlet(&ts, &part, &f, &g).unwrap();
        for x in 0..4 {
            assert_relative_eq!(
                (with.u.get(x).unwrap() - plain.u.get(x).unwrap()).norm(),
                0.0,
                epsilon = 1e-12
            );
        }
        let spiked = FieldFunction::new([(1, Cx::new(1.5, 0.0)), (2, Cx::new(0.0, -2.0))]).unwrap();
        let sol = solve_dirichlet_potential(&ts, &part, &f, &g, &spiked).unwrap();
        assert!(sol.residuals["interior"] < 1e-10);
    }

    #[test]
    fn robin_pure_value_reduction() {
        let (ts, part) = path_ts(3);
        let f = FieldFunction::from_real([(1, 0.5), (2, -0.25)]).unwrap();
        let g = FieldFunction::from_real([(0, 2.0), (3, -4.0)]).unwrap();
        let alpha = FieldFunction::from_real([(0, 2.0), (3, 4.0)]).unwrap();
        let beta = FieldFunction::zero([0, 3]);
        let robin = solve_robin(&ts, &part, &f, &g, &alpha, &beta).unwrap();
        let g_over_alpha = FieldFunction::from_real([(0, 1.0), (3, -1.0)]).unwrap();
        let dir = solve_dirichlet(&ts, &part, &f, &g_over_alpha).unwrap();
        for x in 0..4 {
            assert_relative_eq!(
                (robin.u.get(x).unwrap() - dir.u.get(x).unwrap()).norm(),
                0.0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn robin_equal_coefficients_kernel() {
        // alpha = beta = 1 on both endpoints: the folded kernel has the
        // closed form 2(k+1)(N+1-m)/(N+2) for k <= m.
        let n = 2;
        let (ts, part) = path_ts(n);
        let ones = FieldFunction::constant([0, n], Cx::new(1.0, 0.0));
        let kernel_entry = |k: usize, m: usize| -> f64 {
            let (k, m) = if k <= m { (k, m) } else { (m, k) };
            2.0 * (k as f64 + 1.0) * (n as f64 + 1.0 - m as f64) / (n as f64 + 2.0)
        };
        // Interior unit charge: u = kernel column (charge -delta_m).
        let f = FieldFunction::from_real([(1, -1.0)]).unwrap();
        let g = FieldFunction::zero([0, n]);
        let sol = solve_robin(&ts, &part, &f, &g, &ones, &ones).unwrap();
        for k in 0..=n {
            assert_relative_eq!(sol.u.get(k).unwrap().re, kernel_entry(k, 1), epsilon = 1e-12);
        }
        // Boundary data column: g(0) = -(alpha+beta) picks out column 0.
        let f0 = FieldFunction::zero([1]);
        let g0 = FieldFunction::from_real([(0, -2.0), (n, 0.0)]).unwrap();
        let sol = solve_robin(&ts, &part, &f0, &g0, &ones, &ones).unwrap();
        for k in 0..=n {
            assert_relative_eq!(sol.u.get(k).unwrap().re, -kernel_entry(k, 0), epsilon = 1e-12);
        }
    }

    #[test]
    fn robin_rejects_mass_gaining_coefficients() {
        let (ts, part) = path_ts(2);
        let f = FieldFunction::zero([1]);
        let g = FieldFunction::zero([0, 2]);
        // alpha + beta = 0 with beta nonzero: |alpha+beta| < |beta|.
        let alpha = FieldFunction::from_real([(0, -1.0), (2, 1.0)]).unwrap();
        let beta = FieldFunction::from_real([(0, 1.0), (2, 1.0)]).unwrap();
        assert!(matches!(
            solve_robin(&ts, &part, &f, &g, &alpha, &beta),
            Err(Error::Hypothesis { .. })
        ));
        // alpha = 0 everywhere with beta = 1: pure flux, no mass loss.
        let zero = FieldFunction::zero([0, 2]);
        let ones = FieldFunction::constant([0, 2], Cx::new(1.0, 0.0));
        assert!(matches!(
            solve_robin(&ts, &part, &f, &g, &zero, &ones),
            Err(Error::Hypothesis { .. })
        ));
    }

    #[test]
    fn balayage_one_step_example() {
        let (ts, _) = path_ts(2);
        let f = real_field(&[2.0, -1.0, 0.0]);
        let y: BTreeSet<usize> = [1, 2].into_iter().collect();
        let result = balayage(&ts, &f, &y, 0).unwrap();
        // Swept solution is constant, so the swept charge vanishes.
        for x in 0..3 {
            assert_relative_eq!(result.reduite.get(x).unwrap().re, 2.0, epsilon = 1e-12);
            assert_relative_eq!(result.balayee.get(x).unwrap().norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn balayage_keeps_charges_already_inside() {
        let net = path_a(5).unwrap();
        let ts = TransitionSystem::from_network(&net).unwrap();
        // Charge supported on {2,3}, swept onto Y = {1,2,3,4}: interior of Y
        // contains the support, so the balayée equals f there.
        let pi = ts.pi();
        let f2 = 1.0;
        let f3 = -f2 * pi[2] / pi[3];
        let f = FieldFunction::from_real([
            (0, 0.0),
            (1, 0.0),
            (2, f2),
            (3, f3),
            (4, 0.0),
            (5, 0.0),
        ])
        .unwrap();
        let y: BTreeSet<usize> = [1, 2, 3, 4].into_iter().collect();
        let result = balayage(&ts, &f, &y, 0).unwrap();
        for x in [2usize, 3] {
            assert_relative_eq!(
                (result.balayee.get(x).unwrap() - f.get(x).unwrap()).norm(),
                0.0,
                epsilon = 1e-12
            );
        }
        for x in [0usize, 5] {
            assert_relative_eq!(result.balayee.get(x).unwrap().norm(), 0.0, epsilon = 1e-12);
        }
        // Swept charge remains balanced.
        let total: Cx = (0..6).map(|x| ts.pi()[x] * result.balayee.get(x).unwrap()).sum();
        assert!(total.norm() < 1e-12);
    }

    #[test]
    fn maximum_principle_small_cases() {
        let (ts, part) = path_ts(4);
        let g = FieldFunction::from_real([(0, -1.0), (4, 3.0)]).unwrap();
        let sol = solve_dirichlet(&ts, &part, &FieldFunction::zero([1, 2, 3]), &g).unwrap();
        for x in 0..5 {
            let v = sol.u.get(x).unwrap().re;
            assert!((-1.0 - 1e-12..=3.0 + 1e-12).contains(&v));
        }
    }
}
