//! Second-order problems for Δ²: iterated Poisson, bi-Laplace Neumann and
//! Dirichlet problems, both plate variants, the iterated Dirichlet problem,
//! boundary data maps, and bi-harmonic Green kernels.
//!
//! Writing Δ² in block form over (interior, boundary) gives
//! [[S, −U], [−U′, S′]]; the interior block S and the boundary return
//! operator R = P_{∂,°} G² P_{°,∂} control solvability: S is invertible
//! exactly when I + R is.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::field::{Cx, FieldFunction};
use crate::laplace::{
    apply_laplacian, data_scale, full_order, gate, normal_derivative, pi_integral, subset_split,
    NormalDerivativeKind, Solution,
};
use crate::linalg::{self, LuReport};
use crate::markov::{self, block, Partition, TransitionSystem};
use crate::tol;

/// The block decomposition of Δ² together with the kernels needed by the
/// second-order solvers. All pieces are real; data stays complex.
#[derive(Debug, Clone)]
pub struct BiLaplaceBlocks {
    partition: Partition,
    green_interior: DMatrix<f64>,
    upsilon: DMatrix<f64>,
    q: DMatrix<f64>,
    nu_pi: DVector<f64>,
    r: DMatrix<f64>,
    s: DMatrix<f64>,
    s_prime: DMatrix<f64>,
    u: DMatrix<f64>,
    u_prime: DMatrix<f64>,
    k: Option<DMatrix<f64>>,
    ir_inverse: Option<DMatrix<f64>>,
    s_report: LuReport,
    ir_report: LuReport,
}

impl BiLaplaceBlocks {
    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn green_interior(&self) -> &DMatrix<f64> {
        &self.green_interior
    }

    pub fn upsilon(&self) -> &DMatrix<f64> {
        &self.upsilon
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// R = P_{∂,°} G² P_{°,∂} over the boundary.
    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    /// S = (I−P_°)² + P_{°,∂} P_{∂,°} over the interior.
    pub fn s(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn s_prime(&self) -> &DMatrix<f64> {
        &self.s_prime
    }

    /// U = (I−P_°) P_{°,∂} + P_{°,∂} (I−P_∂): interior rows, boundary columns.
    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn u_prime(&self) -> &DMatrix<f64> {
        &self.u_prime
    }

    /// K = (I − P_° + Υ P_{∂,°})^{-1}; S^{-1} = K G when it exists.
    pub fn k(&self) -> Option<&DMatrix<f64>> {
        self.k.as_ref()
    }

    pub fn ir_inverse(&self) -> Option<&DMatrix<f64>> {
        self.ir_inverse.as_ref()
    }

    pub fn invertible(&self) -> bool {
        self.k.is_some()
    }

    pub fn s_report(&self) -> LuReport {
        self.s_report
    }

    pub fn ir_report(&self) -> LuReport {
        self.ir_report
    }

    pub(crate) fn nu_pi(&self) -> &DVector<f64> {
        &self.nu_pi
    }

    fn interior(&self) -> &[usize] {
        self.partition.interior()
    }

    fn boundary(&self) -> &[usize] {
        self.partition.boundary()
    }

    /// G applied to data on the interior, extended by zero on the boundary.
    fn green_extended(&self, data: &DVector<Cx>) -> Result<FieldFunction> {
        let inside = linalg::apply_real(&self.green_interior, data);
        FieldFunction::from_vector(self.interior(), &inside)
            .union(&FieldFunction::zero(self.boundary().iter().copied()))
    }

    /// Harmonic extension of boundary values: g on ∂X, Υg inside.
    fn harmonic_extension(&self, g: &FieldFunction) -> Result<FieldFunction> {
        let g_vec = g.vector_for(self.boundary(), "boundary values")?;
        let inside = linalg::apply_real(&self.upsilon, &g_vec);
        FieldFunction::from_vector(self.interior(), &inside).union(&FieldFunction::from_vector(
            self.boundary(),
            &g_vec,
        ))
    }
}

/// Assembles the Δ² block apparatus. Singularity of S (equivalently of
/// I + R) is reported through the flags, not as an error.
pub fn bi_blocks(ts: &TransitionSystem, part: &Partition) -> Result<BiLaplaceBlocks> {
    let app = markov::boundary_chain(ts, part)?;
    let interior = part.interior();
    let boundary = part.boundary();
    let p = ts.p();
    let p_int = block(p, interior, interior);
    let p_bnd = block(p, boundary, boundary);
    let p_ib = block(p, interior, boundary);
    let p_bi = block(p, boundary, interior);
    let id_int = DMatrix::<f64>::identity(interior.len(), interior.len());
    let id_bnd = DMatrix::<f64>::identity(boundary.len(), boundary.len());
    let a_int = &id_int - &p_int;
    let a_bnd = &id_bnd - &p_bnd;
    let green = app.green_interior().clone();
    let r = &p_bi * &green * &green * &p_ib;
    let s = &a_int * &a_int + &p_ib * &p_bi;
    let s_prime = &a_bnd * &a_bnd + &p_bi * &p_ib;
    let u = &a_int * &p_ib + &p_ib * &a_bnd;
    let u_prime = &p_bi * &a_int + &a_bnd * &p_bi;
    let (_, s_report) = linalg::try_invert(&s, "interior bi-Laplace block");
    let k_arg = &a_int + app.upsilon() * &p_bi;
    let (k, _k_report) = linalg::try_invert(&k_arg, "bi-Laplace Dirichlet kernel");
    let (ir_inverse, ir_report) = linalg::try_invert(&(&id_bnd + &r), "boundary return operator");
    Ok(BiLaplaceBlocks {
        partition: part.clone(),
        green_interior: green,
        upsilon: app.upsilon().clone(),
        q: app.q().clone(),
        nu_pi: app.nu_pi_vector().clone(),
        r,
        s,
        s_prime,
        u,
        u_prime,
        k,
        ir_inverse,
        s_report,
        ir_report,
    })
}

/// T = (I+R)^{-1}(I−Q): maps boundary values of a bi-harmonic function to
/// its outward derivative. Kills constants.
pub fn transfer_matrix(blocks: &BiLaplaceBlocks) -> Result<DMatrix<f64>> {
    let ir_inv = blocks.ir_inverse.as_ref().ok_or_else(|| Error::Singular {
        what: "boundary return operator I + R".to_string(),
        condition: blocks.ir_report.condition,
        min_pivot: blocks.ir_report.min_pivot,
    })?;
    let b = blocks.boundary().len();
    Ok(ir_inv * (DMatrix::<f64>::identity(b, b) - &blocks.q))
}

/// Grounded solution of Δ²u = f on all of X for a balanced charge;
/// two nested one-vertex-grounded solves with the intermediate stage
/// rebalanced by a constant.
pub fn solve_iterated_poisson(
    ts: &TransitionSystem,
    f: &FieldFunction,
    ground: usize,
) -> Result<Solution> {
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
    let (green, _) = markov::green_block(ts, &rest)?;
    let f_rest = f.vector_for(&rest, "charge")?;
    let w = linalg::apply_real(&green, &f_rest);
    // Rebalance the first stage so the second solve is admissible.
    let mut c = Cx::new(0.0, 0.0);
    for (i, &x) in rest.iter().enumerate() {
        c += ts.pi()[x] * w[i];
    }
    let shifted = DVector::from_fn(rest.len(), |i, _| w[i] - c);
    let u_rest = linalg::apply_real(&green, &shifted);
    let u = FieldFunction::from_vector(&rest, &u_rest).union(&FieldFunction::zero([ground]))?;
    let lap = apply_laplacian(ts, &u)?;
    let bilap = apply_laplacian(ts, &lap)?;
    let mut worst = 0.0f64;
    for &x in &order {
        worst = worst.max((bilap.at(x, "residual")? - f.at(x, "residual")?).norm());
    }
    let mut residuals = BTreeMap::new();
    residuals.insert(
        "equation".to_string(),
        gate("iterated Poisson residual", worst, tol::GATE * scale)?,
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

/// Bi-Laplace Neumann problem: Δ²u = f on the interior and ∂u = g on the
/// boundary. Solvable iff the combined charge G_° f + (harmonic extension
/// of g) is balanced; the solution is one more grounded kernel application.
pub fn solve_bineumann(
    ts: &TransitionSystem,
    part: &Partition,
    f: &FieldFunction,
    g: &FieldFunction,
    ground: usize,
) -> Result<Solution> {
    let n = ts.n();
    if ground >= n {
        return Err(Error::BadParameter(format!(
            "ground vertex index {ground} out of range"
        )));
    }
    let blocks = bi_blocks(ts, part)?;
    let interior = part.interior();
    let boundary = part.boundary();
    let scale = data_scale(&[f, g]);
    let f_vec = f.vector_for(interior, "interior charge")?;
    let w_inside = linalg::apply_real(&blocks.green_interior, &f_vec);
    let mut condition = Cx::new(0.0, 0.0);
    for (i, &x) in interior.iter().enumerate() {
        condition += ts.pi()[x] * w_inside[i];
    }
    for (j, &y) in boundary.iter().enumerate() {
        condition += blocks.nu_pi()[j] * g.at(y, "boundary flux")?;
    }
    if condition.norm() > tol::GATE * scale {
        return Err(Error::Unsolvable {
            what: "bi-Laplace Neumann condition (swept charge must be balanced)",
            residual: condition.norm(),
        });
    }
    let h = blocks.harmonic_extension(g)?;
    let w = FieldFunction::from_vector(interior, &w_inside)
        .union(&FieldFunction::zero(boundary.iter().copied()))?
        .add(&h)?;
    let rest: Vec<usize> = (0..n).filter(|&x| x != ground).collect();
    let (green_rest, _) = markov::green_block(ts, &rest)?;
    let u_rest = linalg::apply_real(&green_rest, &w.vector_for(&rest, "combined charge")?);
    let u = FieldFunction::from_vector(&rest, &u_rest).union(&FieldFunction::zero([ground]))?;
    let lap = apply_laplacian(ts, &u)?;
    let bilap = apply_laplacian(ts, &lap)?;
    let mut interior_res = 0.0f64;
    for &x in interior {
        interior_res =
            interior_res.max((bilap.at(x, "residual")? - f.at(x, "residual")?).norm());
    }
    let flux = normal_derivative(ts, part, &u, NormalDerivativeKind::Standard)?;
    let mut flux_res = 0.0f64;
    for &y in boundary {
        flux_res = flux_res.max((flux.at(y, "residual")? - g.at(y, "residual")?).norm());
    }
    let mut residuals = BTreeMap::new();
    residuals.insert(
        "interior".to_string(),
        gate("bi-Neumann interior residual", interior_res, tol::GATE * scale)?,
    );
    residuals.insert(
        "boundary_flux".to_string(),
        gate("bi-Neumann flux residual", flux_res, tol::GATE * scale)?,
    );
    let mut conditions = BTreeMap::new();
    conditions.insert("bineumann".to_string(), condition.norm());
    Ok(Solution {
        u,
        degrees_of_freedom: 1,
        residuals,
        conditions,
    })
}

/// Bi-Laplace Dirichlet problem: Δ²u = f on the interior, u = g on the
/// boundary. Unique when S is invertible; u|_° = K G (f + U g).
pub fn solve_bidirichlet(
    ts: &TransitionSystem,
    part: &Partition,
    f: &FieldFunction,
    g: &FieldFunction,
) -> Result<Solution> {
    let blocks = bi_blocks(ts, part)?;
    solve_bidirichlet_with(ts, &blocks, f, g)
}

/// Same as `solve_bidirichlet` but reuses an assembled block apparatus.
pub fn solve_bidirichlet_with(
    ts: &TransitionSystem,
    blocks: &BiLaplaceBlocks,
    f: &FieldFunction,
    g: &FieldFunction,
) -> Result<Solution> {
    let part = blocks.partition();
    let interior = part.interior();
    let boundary = part.boundary();
    let k = blocks.k().ok_or_else(|| Error::Singular {
        what: "interior bi-Laplace block S (boundary return operator I + R is \
               singular as well)"
            .to_string(),
        condition: blocks.s_report.condition,
        min_pivot: blocks.s_report.min_pivot,
    })?;
    let scale = data_scale(&[f, g]);
    let f_vec = f.vector_for(interior, "interior charge")?;
    let g_vec = g.vector_for(boundary, "boundary values")?;
    let rhs = f_vec + linalg::apply_real(&blocks.u, &g_vec);
    let u_int = linalg::apply_real(&(k * &blocks.green_interior), &rhs);
    let u = FieldFunction::from_vector(interior, &u_int)
        .union(&FieldFunction::from_vector(boundary, &g_vec))?;
    let lap = apply_laplacian(ts, &u)?;
    let bilap = apply_laplacian(ts, &lap)?;
    let mut worst = 0.0f64;
    for &x in interior {
        worst = worst.max((bilap.at(x, "residual")? - f.at(x, "residual")?).norm());
    }
    let mut residuals = BTreeMap::new();
    residuals.insert(
        "interior".to_string(),
        gate("bi-Dirichlet residual", worst, tol::GATE * scale)?,
    );
    residuals.insert("boundary_values".to_string(), 0.0);
    Ok(Solution {
        u,
        degrees_of_freedom: 0,
        residuals,
        conditions: BTreeMap::new(),
    })
}

/// Compatibility of plate data: the plate problem with charge f, derivative
/// data g1 and value data g2 is solvable iff
/// (Q − I) g2 + P_{∂,°} G² f + (I + R) g1 = 0 on the boundary.
#[derive(Debug, Clone)]
pub struct PlateCondition {
    pub residual: FieldFunction,
    pub satisfied: bool,
    pub tolerance: f64,
}

pub fn plate1_condition(
    ts: &TransitionSystem,
    part: &Partition,
    f: &FieldFunction,
    g1: &FieldFunction,
    g2: &FieldFunction,
) -> Result<PlateCondition> {
    let blocks = bi_blocks(ts, part)?;
    plate1_condition_with(ts, &blocks, f, g1, g2)
}

fn plate1_condition_with(
    _ts: &TransitionSystem,
    blocks: &BiLaplaceBlocks,
    f: &FieldFunction,
    g1: &FieldFunction,
    g2: &FieldFunction,
) -> Result<PlateCondition> {
    let part = blocks.partition();
    let interior = part.interior();
    let boundary = part.boundary();
    let b = boundary.len();
    let f_vec = f.vector_for(interior, "plate charge")?;
    let g1_vec = g1.vector_for(boundary, "plate derivative data")?;
    let g2_vec = g2.vector_for(boundary, "plate value data")?;
    let id = DMatrix::<f64>::identity(b, b);
    let boundary_lap = &blocks.q - &id;
    let swept = block(_ts.p(), boundary, interior)
        * &blocks.green_interior
        * &blocks.green_interior;
    let ir = &id + &blocks.r;
    let res_vec = linalg::apply_real(&boundary_lap, &g2_vec)
        + linalg::apply_real(&swept, &f_vec)
        + linalg::apply_real(&ir, &g1_vec);
    let residual = FieldFunction::from_vector(boundary, &res_vec);
    let tolerance = tol::GATE * data_scale(&[f, g1, g2]);
    let satisfied = residual.max_abs() <= tolerance;
    Ok(PlateCondition {
        residual,
        satisfied,
        tolerance,
    })
}

/// Plate problem, first variant: Δ²u = f on the interior with both value
/// data (u = g2) and derivative data (∂u = g1) on the boundary. Solvable
/// only when the plate condition holds. Two independent closed forms are
/// computed and cross-checked.
pub fn solve_plate1(
    ts: &TransitionSystem,
    part: &Partition,
    f: &FieldFunction,
    g1: &FieldFunction,
    g2: &FieldFunction,
) -> Result<Solution> {
    let blocks = bi_blocks(ts, part)?;
    let cond = plate1_condition_with(ts, &blocks, f, g1, g2)?;
    if !cond.satisfied {
        return Err(Error::Unsolvable {
            what: "plate compatibility (boundary data must match the swept charge)",
            residual: cond.residual.max_abs(),
        });
    }
    let interior = part.interior();
    let boundary = part.boundary();
    let scale = data_scale(&[f, g1, g2]);
    let f_vec = f.vector_for(interior, "plate charge")?;
    let h1 = blocks.harmonic_extension(g1)?;
    let h2 = blocks.harmonic_extension(g2)?;
    // First form: G² f + G h1 + h2, the kernels extended by zero.
    let gf = linalg::apply_real(&blocks.green_interior, &f_vec);
    let ggf = blocks.green_extended(&gf)?;
    let gh1 = blocks.green_extended(&h1.vector_for(interior, "derivative extension")?)?;
    let u_a = ggf.add(&gh1)?.add(&h2)?;
    // Second form: ground the combined charge at one boundary vertex.
    let z = boundary[0];
    let rest: Vec<usize> = (0..ts.n()).filter(|&x| x != z).collect();
    let (green_rest, _) = markov::green_block(ts, &rest)?;
    let combined = blocks
        .green_extended(&f_vec)?
        .add(&h1)?
        .vector_for(&rest, "combined plate charge")?;
    let shift = g2.at(z, "plate value data")?;
    let u_b_rest = linalg::apply_real(&green_rest, &combined);
    let u_b = FieldFunction::from_vector(&rest, &u_b_rest)
        .union(&FieldFunction::zero([z]))?
        .shift(shift);
    let mut gap = 0.0f64;
    for x in 0..ts.n() {
        gap = gap.max((u_a.at(x, "cross-check")? - u_b.at(x, "cross-check")?).norm());
    }
    gate("plate closed forms disagree", gap, tol::CROSS_CHECK * scale)?;
    let lap = apply_laplacian(ts, &u_a)?;
    let bilap = apply_laplacian(ts, &lap)?;
    let mut interior_res = 0.0f64;
    for &x in interior {
        interior_res =
            interior_res.max((bilap.at(x, "residual")? - f.at(x, "residual")?).norm());
    }
    let mut flux_res = 0.0f64;
    for &y in boundary {
        flux_res = flux_res.max((-lap.at(y, "residual")? - g1.at(y, "residual")?).norm());
    }
    let mut residuals = BTreeMap::new();
    residuals.insert(
        "interior".to_string(),
        gate("plate interior residual", interior_res, tol::GATE * scale)?,
    );
    residuals.insert(
        "boundary_flux".to_string(),
        gate("plate flux residual", flux_res, tol::GATE * scale)?,
    );
    residuals.insert("boundary_values".to_string(), 0.0);
    residuals.insert("closed_form_gap".to_string(), gap);
    let mut conditions = BTreeMap::new();
    conditions.insert("plate".to_string(), cond.residual.max_abs());
    Ok(Solution {
        u: u_a,
        degrees_of_freedom: 0,
        residuals,
        conditions,
    })
}

/// Derivative data of the plate problem determined by its value data:
/// g1 = −(I+R)^{-1}((Q−I) g2 + P_{∂,°} G² f). With f = 0 this is the
/// transfer matrix applied to g2.
pub fn bi_d2n(
    ts: &TransitionSystem,
    part: &Partition,
    g2: &FieldFunction,
    f: &FieldFunction,
) -> Result<FieldFunction> {
    let blocks = bi_blocks(ts, part)?;
    let ir_inv = blocks.ir_inverse().ok_or_else(|| Error::Singular {
        what: "boundary return operator I + R".to_string(),
        condition: blocks.ir_report.condition,
        min_pivot: blocks.ir_report.min_pivot,
    })?;
    let interior = part.interior();
    let boundary = part.boundary();
    let b = boundary.len();
    let f_vec = f.vector_for(interior, "plate charge")?;
    let g2_vec = g2.vector_for(boundary, "plate value data")?;
    let boundary_lap = &blocks.q - DMatrix::<f64>::identity(b, b);
    let swept =
        block(ts.p(), boundary, interior) * &blocks.green_interior * &blocks.green_interior;
    let rhs = linalg::apply_real(&boundary_lap, &g2_vec) + linalg::apply_real(&swept, &f_vec);
    let g1 = -linalg::apply_real(ir_inv, &rhs);
    Ok(FieldFunction::from_vector(boundary, &g1))
}

/// Value data of the plate problem determined by its derivative data, up to
/// an additive constant fixed by prescribing g2(anchor) = c. Solvable iff
/// the boundary charge is balanced for the boundary chain.
pub fn bi_n2d(
    ts: &TransitionSystem,
    part: &Partition,
    g1: &FieldFunction,
    f: &FieldFunction,
    anchor: usize,
    c: Cx,
) -> Result<FieldFunction> {
    if !part.is_boundary(anchor) {
        return Err(Error::BadParameter(format!(
            "anchor vertex {anchor} is not a boundary vertex"
        )));
    }
    let blocks = bi_blocks(ts, part)?;
    let interior = part.interior();
    let boundary = part.boundary();
    let b = boundary.len();
    let scale = data_scale(&[f, g1]);
    let f_vec = f.vector_for(interior, "plate charge")?;
    let g1_vec = g1.vector_for(boundary, "plate derivative data")?;
    let swept =
        block(ts.p(), boundary, interior) * &blocks.green_interior * &blocks.green_interior;
    let ir = DMatrix::<f64>::identity(b, b) + &blocks.r;
    let rhs = linalg::apply_real(&swept, &f_vec) + linalg::apply_real(&ir, &g1_vec);
    // Solvability: the boundary charge must be balanced for the stationary
    // measure restricted to the boundary.
    let mut condition = Cx::new(0.0, 0.0);
    for (j, &y) in boundary.iter().enumerate() {
        condition += ts.pi()[y] * rhs[j];
    }
    if condition.norm() > tol::GATE * scale {
        return Err(Error::Unsolvable {
            what: "plate boundary condition (boundary charge must be balanced)",
            residual: condition.norm(),
        });
    }
    let anchor_pos = boundary.binary_search(&anchor).expect("anchor is boundary");
    let rest_pos: Vec<usize> = (0..b).filter(|&j| j != anchor_pos).collect();
    let q_rest = DMatrix::from_fn(rest_pos.len(), rest_pos.len(), |i, j| {
        blocks.q[(rest_pos[i], rest_pos[j])]
    });
    let m = DMatrix::<f64>::identity(rest_pos.len(), rest_pos.len()) - q_rest;
    let (m_inv, _) = linalg::invert(&m, "restricted boundary chain")?;
    let rhs_rest = DVector::from_fn(rest_pos.len(), |i, _| rhs[rest_pos[i]]);
    let g0 = linalg::apply_real(&m_inv, &rhs_rest);
    let mut g2_vec = DVector::<Cx>::from_element(b, c);
    for (i, &j) in rest_pos.iter().enumerate() {
        g2_vec[j] += g0[i];
    }
    // Verify all boundary rows, including the anchor row dropped above.
    let check = &g2_vec - linalg::apply_real(&blocks.q, &g2_vec) - &rhs;
    let worst = check.iter().fold(0.0f64, |a, v| a.max(v.norm()));
    gate("plate value data residual", worst, tol::GATE * scale)?;
    Ok(FieldFunction::from_vector(boundary, &g2_vec))
}

/// Plate problem, second variant: value data g2 on ∂X, derivative data g1 on
/// the second boundary ∂Y of Y = X°, with the derivative taken along edges
/// leaving Y. Reduces to a bi-Laplace Dirichlet problem for the renormalized
/// chain on Y.
pub fn solve_plate2(
    ts: &TransitionSystem,
    part: &Partition,
    f: &FieldFunction,
    g1: &FieldFunction,
    g2: &FieldFunction,
) -> Result<Solution> {
    let y = part.interior_nonempty()?;
    let boundary = part.boundary();
    let sub_ts = markov::restricted_transition(ts, y)?;
    let (y_boundary, _y_interior) = subset_split(ts, y)?;
    if y_boundary.len() == y.len() {
        return Err(Error::EmptySubset(
            "second interior is empty, every interior vertex touches the boundary".to_string(),
        ));
    }
    let scale = data_scale(&[f, g1, g2]);
    // Fold the outer values and the derivative data into boundary values for
    // the sub-problem: ∂*u(y) = g1(y) pins u(y) once the exterior values are
    // known.
    let mut g_sub_pairs: Vec<(usize, Cx)> = Vec::with_capacity(y_boundary.len());
    for &v in &y_boundary {
        let mut mass = 0.0;
        let mut acc = Cx::new(0.0, 0.0);
        for &z in boundary {
            if ts.prob(v, z) > 0.0 {
                mass += ts.prob(v, z);
                acc += ts.prob(v, z) * g2.at(z, "outer value data")?;
            }
        }
        g_sub_pairs.push((v, acc / mass - g1.at(v, "derivative data")?));
    }
    let g_sub_parent = FieldFunction::new(g_sub_pairs)?;
    // Reindex everything to sub-positions.
    let sub_part = Partition::new(
        y.len(),
        y_boundary
            .iter()
            .map(|&v| y.binary_search(&v).expect("boundary is inside the subset")),
    )?;
    let to_sub = |f: &FieldFunction, at: &[usize]| -> Result<FieldFunction> {
        let pairs: Vec<(usize, Cx)> = at
            .iter()
            .map(|&i| Ok((i, f.at(y[i], "sub-problem data")?)))
            .collect::<Result<_>>()?;
        FieldFunction::new(pairs)
    };
    let f_sub = to_sub(f, sub_part.interior())?;
    let g_sub = to_sub(&g_sub_parent, sub_part.boundary())?;
    let sub_blocks = bi_blocks(&sub_ts, &sub_part)?;
    let inner = solve_bidirichlet_with(&sub_ts, &sub_blocks, &f_sub, &g_sub)?;
    // Assemble: solved values on Y, prescribed values on ∂X.
    let mut pairs: Vec<(usize, Cx)> = Vec::with_capacity(ts.n());
    for (i, &v) in y.iter().enumerate() {
        pairs.push((v, inner.u.at(i, "sub-problem solution")?));
    }
    for &z in boundary {
        pairs.push((z, g2.at(z, "outer value data")?));
    }
    let u = FieldFunction::new(pairs)?;
    // Residuals: the sub-chain bi-Laplacian on the second interior and the
    // exterior-edge derivative on ∂Y.
    let u_y = u.vector_for(y, "solution on the subset")?;
    let lap_y = linalg::apply_real(sub_ts.p(), &u_y) - &u_y;
    let bilap_y = linalg::apply_real(sub_ts.p(), &lap_y) - &lap_y;
    let mut interior_res = 0.0f64;
    for (i, &v) in y.iter().enumerate() {
        if y_boundary.binary_search(&v).is_err() {
            interior_res = interior_res.max((bilap_y[i] - f.at(v, "residual")?).norm());
        }
    }
    let star = normal_derivative(ts, part, &u, NormalDerivativeKind::ExteriorStar(y))?;
    let mut flux_res = 0.0f64;
    for &v in &y_boundary {
        flux_res = flux_res.max((star.at(v, "residual")? - g1.at(v, "residual")?).norm());
    }
    let mut residuals = BTreeMap::new();
    residuals.insert(
        "second_interior".to_string(),
        gate("plate interior residual", interior_res, tol::GATE * scale)?,
    );
    residuals.insert(
        "second_boundary_flux".to_string(),
        gate("plate exterior derivative residual", flux_res, tol::GATE * scale)?,
    );
    residuals.insert("boundary_values".to_string(), 0.0);
    Ok(Solution {
        u,
        degrees_of_freedom: 0,
        residuals,
        conditions: BTreeMap::new(),
    })
}

/// Iterated Dirichlet problem: Δ²u = f on the second interior, Δu = g1 on
/// the second boundary ∂Y of Y = X°, u = g2 on ∂X. Two nested Dirichlet
/// solves.
pub fn solve_iterated_dirichlet(
    ts: &TransitionSystem,
    part: &Partition,
    f: &FieldFunction,
    g1: &FieldFunction,
    g2: &FieldFunction,
) -> Result<Solution> {
    let y = part.interior_nonempty()?;
    let boundary = part.boundary();
    let (y_boundary, y_interior) = subset_split(ts, y)?;
    if y_interior.is_empty() {
        return Err(Error::EmptySubset(
            "second interior is empty, every interior vertex touches the boundary".to_string(),
        ));
    }
    let scale = data_scale(&[f, g1, g2]);
    // Inner Dirichlet problem on Y: Δv = f on Y°, v = g1 on ∂Y.
    let (green_inner, _) = markov::green_block(ts, &y_interior)?;
    let f_vec = f.vector_for(&y_interior, "inner charge")?;
    let g1_vec = g1.vector_for(&y_boundary, "inner boundary data")?;
    let coupled = linalg::apply_real(&block(ts.p(), &y_interior, &y_boundary), &g1_vec);
    let v_inner = -linalg::apply_real(&green_inner, &(f_vec - coupled));
    let v = FieldFunction::from_vector(&y_interior, &v_inner)
        .union(&FieldFunction::from_vector(&y_boundary, &g1_vec))?;
    // Outer Dirichlet problem on X: Δu = v on X°, u = g2 on ∂X.
    let (green_outer, _) = markov::green_block(ts, y)?;
    let v_vec = v.vector_for(y, "intermediate charge")?;
    let g2_vec = g2.vector_for(boundary, "outer boundary data")?;
    let coupled = linalg::apply_real(&block(ts.p(), y, boundary), &g2_vec);
    let u_y = -linalg::apply_real(&green_outer, &(v_vec - coupled));
    let u = FieldFunction::from_vector(y, &u_y)
        .union(&FieldFunction::from_vector(boundary, &g2_vec))?;
    let lap = apply_laplacian(ts, &u)?;
    let bilap = apply_laplacian(ts, &lap)?;
    let mut interior_res = 0.0f64;
    for &x in &y_interior {
        interior_res =
            interior_res.max((bilap.at(x, "residual")? - f.at(x, "residual")?).norm());
    }
    let mut middle_res = 0.0f64;
    for &x in &y_boundary {
        middle_res = middle_res.max((lap.at(x, "residual")? - g1.at(x, "residual")?).norm());
    }
    let mut residuals = BTreeMap::new();
    residuals.insert(
        "second_interior".to_string(),
        gate("iterated Dirichlet residual", interior_res, tol::GATE * scale)?,
    );
    residuals.insert(
        "second_boundary".to_string(),
        gate("iterated Dirichlet middle residual", middle_res, tol::GATE * scale)?,
    );
    residuals.insert("boundary_values".to_string(), 0.0);
    Ok(Solution {
        u,
        degrees_of_freedom: 0,
        residuals,
        conditions: BTreeMap::new(),
    })
}

/// The three bi-harmonic Green kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiharmonicKind {
    /// G_{X°} G_{Y°}: interior rows, second-interior columns.
    Iterated,
    /// G_{X°}²: entrywise non-negative.
    Squared,
    /// K G_{X°} = S^{-1}: may change sign.
    Plate2,
}

#[derive(Debug, Clone)]
pub struct BiharmonicGreen {
    pub kind: BiharmonicKind,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub matrix: DMatrix<f64>,
    pub entrywise_nonnegative: bool,
}

pub fn biharmonic_green(
    ts: &TransitionSystem,
    part: &Partition,
    kind: BiharmonicKind,
) -> Result<BiharmonicGreen> {
    let interior = part.interior_nonempty()?;
    let (green, _) = markov::green_block(ts, interior)?;
    let (rows, cols, matrix) = match kind {
        BiharmonicKind::Squared => (interior.to_vec(), interior.to_vec(), &green * &green),
        BiharmonicKind::Iterated => {
            let (_, y_interior) = subset_split(ts, interior)?;
            if y_interior.is_empty() {
                return Err(Error::EmptySubset(
                    "second interior is empty, every interior vertex touches the boundary"
                        .to_string(),
                ));
            }
            let (green_inner, _) = markov::green_block(ts, &y_interior)?;
            let col_pos: Vec<usize> = y_interior
                .iter()
                .map(|v| interior.binary_search(v).expect("second interior is interior"))
                .collect();
            let projected = DMatrix::from_fn(interior.len(), y_interior.len(), |i, j| {
                green[(i, col_pos[j])]
            });
            (interior.to_vec(), y_interior.clone(), projected * green_inner)
        }
        BiharmonicKind::Plate2 => {
            let blocks = bi_blocks(ts, part)?;
            let k = blocks.k().ok_or_else(|| Error::Singular {
                what: "interior bi-Laplace block S".to_string(),
                condition: blocks.s_report.condition,
                min_pivot: blocks.s_report.min_pivot,
            })?;
            (interior.to_vec(), interior.to_vec(), k * &green)
        }
    };
    let entrywise_nonnegative = matrix.iter().all(|&v| v >= -tol::EXACT);
    Ok(BiharmonicGreen {
        kind,
        rows,
        cols,
        matrix,
        entrywise_nonnegative,
    })
}
