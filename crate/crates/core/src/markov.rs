//! Transition systems and their potential-theoretic kernels.
//!
//! The normalized chain of a network moves from `x` to `y` with probability
//! `p(x,y) = a(x,y)/m(x)`, `m(x)` the total outgoing weight. Everything else
//! in the library is built from restrictions of `P`: restricted Green
//! kernels, hitting distributions on the boundary, and the induced boundary
//! chain `Q`.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::field::{Cx, FieldMeasure};
use crate::linalg::{self, LuReport};
use crate::network::{strongly_connected, Network, SubNetwork};
use crate::tol;

/// A boundary/interior split of the vertex index range `0..n`.
///
/// The boundary must be non-empty; the interior may be empty (pure Poisson
/// problems on the full vertex set do not need one).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    n: usize,
    boundary: Vec<usize>,
    interior: Vec<usize>,
}

impl Partition {
    pub fn new(n: usize, boundary: impl IntoIterator<Item = usize>) -> Result<Self> {
        let set: BTreeSet<usize> = boundary.into_iter().collect();
        if set.is_empty() {
            return Err(Error::EmptySubset("boundary is empty".to_string()));
        }
        if let Some(&bad) = set.iter().find(|&&i| i >= n) {
            return Err(Error::BadParameter(format!(
                "boundary vertex index {bad} out of range for {n} vertices"
            )));
        }
        let boundary: Vec<usize> = set.iter().copied().collect();
        let interior: Vec<usize> = (0..n).filter(|i| !set.contains(i)).collect();
        Ok(Self {
            n,
            boundary,
            interior,
        })
    }

    pub fn from_network(net: &Network) -> Self {
        Self::new(net.vertex_count(), net.boundary().iter().copied())
            .expect("network boundary is validated")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Boundary indices, increasing.
    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    /// Interior indices, increasing.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn is_boundary(&self, x: usize) -> bool {
        self.boundary.binary_search(&x).is_ok()
    }

    /// Requires a non-empty interior.
    pub fn interior_nonempty(&self) -> Result<&[usize]> {
        if self.interior.is_empty() {
            Err(Error::EmptySubset(
                "interior is empty, operation needs interior vertices".to_string(),
            ))
        } else {
            Ok(&self.interior)
        }
    }
}

/// Extracts the block of `p` with the given row and column index sets.
pub(crate) fn block(p: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| p[(rows[i], cols[j])])
}

/// Solves pi^T P = pi^T, sum pi = 1 by replacing the last row of P^T - I
/// with the all-ones row. Verifies stationarity and positivity.
pub fn stationary(p: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = p.nrows();
    let mut a = p.transpose() - DMatrix::<f64>::identity(n, n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let lu = a.lu();
    let pi = lu
        .solve(&b)
        .ok_or(Error::Stationary { residual: f64::INFINITY })?;
    let residual = (p.transpose() * &pi - &pi).amax();
    if residual > tol::SOLVE {
        return Err(Error::Stationary { residual });
    }
    if pi.iter().any(|&v| v <= 0.0) {
        return Err(Error::Stationary { residual: f64::NAN });
    }
    Ok(pi)
}

/// A transition matrix with labels and its stationary distribution.
#[derive(Debug, Clone)]
pub struct TransitionSystem {
    labels: Vec<String>,
    p: DMatrix<f64>,
    masses: DVector<f64>,
    pi: DVector<f64>,
    overridden: Option<BTreeSet<usize>>,
}

impl TransitionSystem {
    /// Normalized chain of a network.
    pub fn from_network(net: &Network) -> Result<Self> {
        let n = net.vertex_count();
        let mut p = DMatrix::<f64>::zeros(n, n);
        let mut masses = DVector::<f64>::zeros(n);
        for (x, y, w) in net.edges() {
            p[(x, y)] = w;
            masses[x] += w;
        }
        for x in 0..n {
            for y in 0..n {
                p[(x, y)] /= masses[x];
            }
        }
        let pi = stationary(&p)?;
        Ok(Self {
            labels: net.labels().to_vec(),
            p,
            masses,
            pi,
            overridden: None,
        })
    }

    /// Builds directly from a row-stochastic matrix. Unlike networks, a
    /// matrix may carry retention probabilities on the diagonal. The chain
    /// must be irreducible.
    pub fn from_stochastic_matrix(labels: Vec<String>, p: DMatrix<f64>) -> Result<Self> {
        let n = p.nrows();
        if n == 0 || p.ncols() != n {
            return Err(Error::BadParameter(
                "transition matrix must be square and non-empty".to_string(),
            ));
        }
        if labels.len() != n {
            return Err(Error::BadParameter(format!(
                "{} labels for {} states",
                labels.len(),
                n
            )));
        }
        for x in 0..n {
            let mut sum = 0.0;
            for y in 0..n {
                let v = p[(x, y)];
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::BadParameter(format!(
                        "transition probability p({x},{y}) = {v} is invalid"
                    )));
                }
                sum += v;
            }
            if (sum - 1.0).abs() > tol::EXACT {
                return Err(Error::BadParameter(format!(
                    "row {x} sums to {sum}, expected 1"
                )));
            }
        }
        let mut edges = Vec::new();
        for x in 0..n {
            for y in 0..n {
                if y != x && p[(x, y)] > 0.0 {
                    edges.push((x, y));
                }
            }
        }
        if n > 1 && !strongly_connected(n, &edges) {
            return Err(Error::NotStronglyConnected(
                crate::network::strongly_connected_components(n, &edges),
            ));
        }
        let pi = stationary(&p)?;
        Ok(Self {
            labels,
            p,
            masses: DVector::from_element(n, 1.0),
            pi,
            overridden: None,
        })
    }

    /// Replaces boundary rows with the given probability rows and recomputes
    /// the stationary distribution of the modified chain.
    pub fn with_boundary_override(
        &self,
        rows: &BTreeMap<usize, Vec<f64>>,
        part: &Partition,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::BadParameter(
                "boundary override table is empty".to_string(),
            ));
        }
        let n = self.n();
        let mut p = self.p.clone();
        for (&x, row) in rows {
            if !part.is_boundary(x) {
                return Err(Error::BadParameter(format!(
                    "override row {x} is not a boundary vertex"
                )));
            }
            if row.len() != n {
                return Err(Error::BadParameter(format!(
                    "override row {x} has {} entries for {n} vertices",
                    row.len()
                )));
            }
            let mut sum = 0.0;
            for (y, &v) in row.iter().enumerate() {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::BadParameter(format!(
                        "override probability p'({x},{y}) = {v} is invalid"
                    )));
                }
                sum += v;
            }
            if (sum - 1.0).abs() > tol::EXACT {
                return Err(Error::BadParameter(format!(
                    "override row {x} sums to {sum}, expected 1"
                )));
            }
            for y in 0..n {
                p[(x, y)] = row[y];
            }
        }
        let pi = stationary(&p)?;
        Ok(Self {
            labels: self.labels.clone(),
            p,
            masses: self.masses.clone(),
            pi,
            overridden: Some(rows.keys().copied().collect()),
        })
    }

    pub fn n(&self) -> usize {
        self.p.nrows()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, x: usize) -> &str {
        &self.labels[x]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.p[(x, y)]
    }

    /// Vertex mass m(x) (total outgoing weight; 1 for matrix-built systems).
    pub fn mass(&self, x: usize) -> f64 {
        self.masses[x]
    }

    pub fn pi(&self) -> &DVector<f64> {
        &self.pi
    }

    /// Stationary distribution as a measure on all vertices.
    pub fn stationary_measure(&self) -> FieldMeasure {
        FieldMeasure::from_real((0..self.n()).map(|x| (x, self.pi[x])))
            .expect("indices are distinct")
    }

    /// Rows that were replaced by an override, if any.
    pub fn overridden_rows(&self) -> Option<&BTreeSet<usize>> {
        self.overridden.as_ref()
    }

    /// Time reversal: p̂(x,y) = π(y) p(y,x) / π(x). Shares the stationary
    /// distribution of the original chain.
    pub fn reverse(&self) -> Self {
        let n = self.n();
        let p = DMatrix::from_fn(n, n, |x, y| self.pi[y] * self.p[(y, x)] / self.pi[x]);
        Self {
            labels: self.labels.clone(),
            p,
            masses: DVector::from_element(n, 1.0),
            pi: self.pi.clone(),
            overridden: None,
        }
    }

    /// True when π(x) p(x,y) = π(y) p(y,x) for all pairs.
    pub fn is_reversible(&self) -> bool {
        let n = self.n();
        (0..n).all(|x| {
            (0..n).all(|y| {
                (self.pi[x] * self.p[(x, y)] - self.pi[y] * self.p[(y, x)]).abs() <= tol::EXACT
            })
        })
    }
}

fn check_lambda(lambda: Cx) -> Result<()> {
    let ok = if lambda.im == 0.0 {
        lambda.re >= 1.0 - tol::EXACT
    } else {
        lambda.norm() > 1.0
    };
    if ok {
        Ok(())
    } else {
        Err(Error::BadParameter(format!(
            "resolvent location {lambda} outside the admissible region (real >= 1 or |lambda| > 1)"
        )))
    }
}

pub(crate) fn check_subset(n: usize, subset: &[usize]) -> Result<()> {
    if subset.is_empty() {
        return Err(Error::EmptySubset("kernel subset is empty".to_string()));
    }
    if subset.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::BadParameter(
            "kernel subset must be sorted and duplicate-free".to_string(),
        ));
    }
    if *subset.last().unwrap() >= n {
        return Err(Error::BadParameter(format!(
            "kernel subset index {} out of range",
            subset.last().unwrap()
        )));
    }
    Ok(())
}

/// Real restricted Green kernel (I_A - P_A)^{-1} with LU diagnostics.
/// Requires A to be a strict subset so that the restriction is strictly
/// substochastic somewhere.
pub(crate) fn green_block(ts: &TransitionSystem, subset: &[usize]) -> Result<(DMatrix<f64>, LuReport)> {
    check_subset(ts.n(), subset)?;
    if subset.len() == ts.n() {
        return Err(Error::BadParameter(
            "restricted Green kernel needs a strict subset".to_string(),
        ));
    }
    let pa = block(ts.p(), subset, subset);
    let a = DMatrix::<f64>::identity(subset.len(), subset.len()) - pa;
    linalg::invert(&a, "restricted Green kernel")
}

/// Restricted Green kernel at a resolvent location.
#[derive(Debug, Clone)]
pub struct GreenKernel {
    subset: Vec<usize>,
    matrix: DMatrix<Cx>,
    lambda: Cx,
    condition: f64,
    residual: f64,
}

impl GreenKernel {
    pub fn subset(&self) -> &[usize] {
        &self.subset
    }

    pub fn matrix(&self) -> &DMatrix<Cx> {
        &self.matrix
    }

    pub fn lambda(&self) -> Cx {
        self.lambda
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Kernel entry by vertex index.
    pub fn entry(&self, x: usize, y: usize) -> Option<Cx> {
        let i = self.subset.binary_search(&x).ok()?;
        let j = self.subset.binary_search(&y).ok()?;
        Some(self.matrix[(i, j)])
    }
}

/// G_A(lambda) = (lambda I_A - P_A)^{-1} for a strict subset A. At lambda = 1
/// this is the expected-visits kernel of the chain killed outside A.
pub fn green_restricted(ts: &TransitionSystem, subset: &[usize], lambda: Cx) -> Result<GreenKernel> {
    check_lambda(lambda)?;
    check_subset(ts.n(), subset)?;
    if subset.len() == ts.n() && lambda == Cx::new(1.0, 0.0) {
        return Err(Error::BadParameter(
            "Green kernel at lambda = 1 needs a strict subset".to_string(),
        ));
    }
    let pa = linalg::complexify(&block(ts.p(), subset, subset));
    let a = DMatrix::<Cx>::identity(subset.len(), subset.len()) * lambda - pa;
    let (matrix, report) = linalg::invert(&a, "restricted Green kernel")?;
    Ok(GreenKernel {
        subset: subset.to_vec(),
        matrix,
        lambda,
        condition: report.condition,
        residual: report.residual,
    })
}

/// Hitting matrix: row x (interior order) is the distribution of the first
/// boundary vertex reached from x. Equals G_interior * P_{interior,boundary}.
pub fn hitting_matrix(ts: &TransitionSystem, part: &Partition) -> Result<DMatrix<f64>> {
    let interior = part.interior_nonempty()?;
    let (g, _) = green_block(ts, interior)?;
    let upsilon = g * block(ts.p(), interior, part.boundary());
    for i in 0..upsilon.nrows() {
        let s: f64 = upsilon.row(i).iter().sum();
        if (s - 1.0).abs() > tol::SOLVE || upsilon.row(i).iter().any(|&v| v < -tol::EXACT) {
            return Err(Error::ResidualCheck {
                what: format!("hitting matrix row {} (vertex {})", i, interior[i]),
                residual: (s - 1.0).abs(),
                tolerance: tol::SOLVE,
            });
        }
    }
    Ok(upsilon)
}

/// The boundary process apparatus: hitting matrices of the chain and its
/// reversal, the induced boundary chain Q, the stationary hitting measure,
/// and the exit/entrance split of the boundary.
#[derive(Debug, Clone)]
pub struct BoundaryApparatus {
    partition: Partition,
    green_interior: DMatrix<f64>,
    green_report: LuReport,
    upsilon: DMatrix<f64>,
    upsilon_reversed: DMatrix<f64>,
    q: DMatrix<f64>,
    nu_pi: DVector<f64>,
    exit: Vec<usize>,
    entrance: Vec<usize>,
}

impl BoundaryApparatus {
    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    /// Interior Green kernel (I - P_interior)^{-1} in interior order.
    pub fn green_interior(&self) -> &DMatrix<f64> {
        &self.green_interior
    }

    pub fn green_report(&self) -> LuReport {
        self.green_report
    }

    /// Hitting matrix, interior rows by boundary columns.
    pub fn upsilon(&self) -> &DMatrix<f64> {
        &self.upsilon
    }

    /// Hitting matrix of the reversed chain.
    pub fn upsilon_reversed(&self) -> &DMatrix<f64> {
        &self.upsilon_reversed
    }

    /// Boundary chain Q: first-return distribution on the boundary.
    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// nu_pi(y) = pi(y) + sum over interior x of pi(x) nu_x(y); the hitting
    /// distribution started from stationarity. A probability measure.
    pub fn nu_pi(&self) -> FieldMeasure {
        FieldMeasure::from_real(
            self.partition
                .boundary()
                .iter()
                .enumerate()
                .map(|(j, &y)| (y, self.nu_pi[j])),
        )
        .expect("boundary indices are distinct")
    }

    pub(crate) fn nu_pi_vector(&self) -> &DVector<f64> {
        &self.nu_pi
    }

    /// Hitting measure of a single vertex: the Upsilon row for interior x,
    /// the point mass at x for boundary x.
    pub fn hitting_measure(&self, x: usize) -> Result<FieldMeasure> {
        if self.partition.is_boundary(x) {
            return FieldMeasure::from_real([(x, 1.0)]);
        }
        let i = self
            .partition
            .interior()
            .binary_search(&x)
            .map_err(|_| Error::BadParameter(format!("vertex {x} out of range")))?;
        FieldMeasure::from_real(
            self.partition
                .boundary()
                .iter()
                .enumerate()
                .map(|(j, &y)| (y, self.upsilon[(i, j)])),
        )
    }

    /// Boundary vertices reachable in one step from the interior.
    pub fn exit_boundary(&self) -> &[usize] {
        &self.exit
    }

    /// Boundary vertices with an edge into the interior.
    pub fn entrance_boundary(&self) -> &[usize] {
        &self.entrance
    }
}

/// Builds the boundary apparatus. Needs a non-empty interior.
pub fn boundary_chain(ts: &TransitionSystem, part: &Partition) -> Result<BoundaryApparatus> {
    let interior = part.interior_nonempty()?;
    let boundary = part.boundary();
    let (green_interior, green_report) = green_block(ts, interior)?;
    let p = ts.p();
    let p_ib = block(p, interior, boundary);
    let p_bi = block(p, boundary, interior);
    let p_bb = block(p, boundary, boundary);
    let upsilon = &green_interior * &p_ib;
    let q = &p_bb + &p_bi * &upsilon;
    for i in 0..q.nrows() {
        let s: f64 = q.row(i).iter().sum();
        if (s - 1.0).abs() > tol::SOLVE || q.row(i).iter().any(|&v| v < -tol::EXACT) {
            return Err(Error::ResidualCheck {
                what: format!("boundary chain row {} (vertex {})", i, boundary[i]),
                residual: (s - 1.0).abs(),
                tolerance: tol::SOLVE,
            });
        }
    }
    let reversed = ts.reverse();
    let (green_rev, _) = green_block(&reversed, interior)?;
    let upsilon_reversed = green_rev * block(reversed.p(), interior, boundary);
    let pi = ts.pi();
    let nu_pi = DVector::from_fn(boundary.len(), |j, _| {
        pi[boundary[j]]
            + interior
                .iter()
                .enumerate()
                .map(|(i, &x)| pi[x] * upsilon[(i, j)])
                .sum::<f64>()
    });
    let exit: Vec<usize> = boundary
        .iter()
        .copied()
        .filter(|&y| interior.iter().any(|&x| p[(x, y)] > 0.0))
        .collect();
    let entrance: Vec<usize> = boundary
        .iter()
        .copied()
        .filter(|&z| interior.iter().any(|&x| p[(z, x)] > 0.0))
        .collect();
    Ok(BoundaryApparatus {
        partition: part.clone(),
        green_interior,
        green_report,
        upsilon,
        upsilon_reversed,
        q,
        nu_pi,
        exit,
        entrance,
    })
}

/// Boundary-chain resolvents: Q(lambda) = P_bb + P_bi G(lambda) P_ib and
/// R(lambda) = P_bi G(lambda)^2 P_ib.
pub fn boundary_resolvents(
    ts: &TransitionSystem,
    part: &Partition,
    lambda: Cx,
) -> Result<(DMatrix<Cx>, DMatrix<Cx>)> {
    let interior = part.interior_nonempty()?;
    let boundary = part.boundary();
    let g = green_restricted(ts, interior, lambda)?;
    let p_ib = linalg::complexify(&block(ts.p(), interior, boundary));
    let p_bi = linalg::complexify(&block(ts.p(), boundary, interior));
    let p_bb = linalg::complexify(&block(ts.p(), boundary, boundary));
    let q = &p_bb + &p_bi * g.matrix() * &p_ib;
    let r = &p_bi * g.matrix() * g.matrix() * &p_ib;
    Ok((q, r))
}

/// Transition system of the induced sub-network: weights within the subset
/// renormalized by the remaining outgoing mass (eq. p_[Y]).
pub fn subnetwork_transition(sub: &SubNetwork<'_>) -> Result<TransitionSystem> {
    let net = sub.parent();
    let vertices = sub.vertices();
    let k = vertices.len();
    let pos: BTreeMap<usize, usize> = vertices.iter().enumerate().map(|(i, &x)| (x, i)).collect();
    let mut weights = DMatrix::<f64>::zeros(k, k);
    for (x, y, w) in net.edges() {
        if let (Some(&i), Some(&j)) = (pos.get(&x), pos.get(&y)) {
            weights[(i, j)] = w;
        }
    }
    build_renormalized(sub.vertices(), &weights, net.labels())
}

/// Row-renormalized restriction of an existing chain to a subset:
/// p_Y(x,y) = p(x,y) / p(x, Y). Identical to the conductance-based
/// sub-network chain, since both divide out the lost mass.
pub fn restricted_transition(ts: &TransitionSystem, subset: &[usize]) -> Result<TransitionSystem> {
    check_subset(ts.n(), subset)?;
    let k = subset.len();
    let mut weights = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            weights[(i, j)] = ts.prob(subset[i], subset[j]);
        }
    }
    build_renormalized(subset, &weights, ts.labels())
}

fn build_renormalized(
    vertices: &[usize],
    weights: &DMatrix<f64>,
    parent_labels: &[String],
) -> Result<TransitionSystem> {
    let k = vertices.len();
    let mut edges = Vec::new();
    for i in 0..k {
        for j in 0..k {
            if j != i && weights[(i, j)] > 0.0 {
                edges.push((i, j));
            }
        }
    }
    if k > 1 && !strongly_connected(k, &edges) {
        return Err(Error::NotStronglyConnected(
            crate::network::strongly_connected_components(k, &edges),
        ));
    }
    let mut masses = DVector::<f64>::zeros(k);
    for i in 0..k {
        masses[i] = weights.row(i).iter().sum();
        if masses[i] <= 0.0 {
            return Err(Error::EmptySubset(format!(
                "vertex {} has no edges within the subset",
                parent_labels[vertices[i]]
            )));
        }
    }
    let p = DMatrix::from_fn(k, k, |i, j| weights[(i, j)] / masses[i]);
    let pi = stationary(&p)?;
    Ok(TransitionSystem {
        labels: vertices.iter().map(|&x| parent_labels[x].clone()).collect(),
        p,
        masses,
        pi,
        overridden: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{cycle, funnel_b, path_a};
    use approx::assert_relative_eq;

    /// Verbatim funnel chain: row 1 is the probability vector itself
    /// (retention p_1 at vertex 1 included), row k steps down to k-1.
    pub(crate) fn funnel_matrix(ps: &[f64]) -> DMatrix<f64> {
        let n = ps.len();
        DMatrix::from_fn(n, n, |x, y| {
            if x == 0 {
                ps[y]
            } else if y + 1 == x {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Independent stationary formula for the funnel chain:
    /// pi(k) proportional to the tail sum of the probability vector.
    fn funnel_pi(ps: &[f64]) -> Vec<f64> {
        let z: f64 = ps.iter().enumerate().map(|(i, p)| (i + 1) as f64 * p).sum();
        (0..ps.len())
            .map(|k| ps[k..].iter().sum::<f64>() / z)
            .collect()
    }

    fn labels(n: usize) -> Vec<String> {
        (1..=n).map(|k| k.to_string()).collect()
    }

    #[test]
    fn path_transition_and_stationary() {
        let net = path_a(4).unwrap();
        let ts = TransitionSystem::from_network(&net).unwrap();
        assert_eq!(ts.prob(0, 1), 1.0);
        assert_eq!(ts.prob(2, 1), 0.5);
        assert_eq!(ts.prob(2, 3), 0.5);
        // Endpoints carry half the interior mass.
        assert_relative_eq!(ts.pi()[0], 1.0 / 8.0, epsilon = 1e-14);
        assert_relative_eq!(ts.pi()[2], 1.0 / 4.0, epsilon = 1e-14);
        assert!(ts.is_reversible());
    }

    #[test]
    fn funnel_verbatim_stationary_matches_tail_formula() {
        let ps = [0.5, 0.25, 0.25];
        let ts = TransitionSystem::from_stochastic_matrix(labels(3), funnel_matrix(&ps)).unwrap();
        let expected = funnel_pi(&ps);
        assert_relative_eq!(expected[0], 4.0 / 7.0, epsilon = 1e-15);
        for k in 0..3 {
            assert_relative_eq!(ts.pi()[k], expected[k], epsilon = 1e-12);
        }
        assert!(!ts.is_reversible());
    }

    #[test]
    fn loop_free_funnel_network_matches_tail_formula_with_zero_retention() {
        let net = funnel_b(&[0.5, 0.5]).unwrap();
        let ts = TransitionSystem::from_network(&net).unwrap();
        let expected = funnel_pi(&[0.0, 0.5, 0.5]);
        for k in 0..3 {
            assert_relative_eq!(ts.pi()[k], expected[k], epsilon = 1e-12);
        }
    }

    #[test]
    fn from_matrix_validation() {
        let bad_row = DMatrix::from_row_slice(2, 2, &[0.5, 0.6, 1.0, 0.0]);
        assert!(TransitionSystem::from_stochastic_matrix(labels(2), bad_row).is_err());
        let negative = DMatrix::from_row_slice(2, 2, &[1.5, -0.5, 1.0, 0.0]);
        assert!(TransitionSystem::from_stochastic_matrix(labels(2), negative).is_err());
        let reducible = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 0.5]);
        assert!(matches!(
            TransitionSystem::from_stochastic_matrix(labels(2), reducible),
            Err(Error::NotStronglyConnected(_))
        ));
    }

    #[test]
    fn reversal_is_stochastic_and_involutive() {
        let ps = [0.2, 0.3, 0.5];
        let ts = TransitionSystem::from_stochastic_matrix(labels(3), funnel_matrix(&ps)).unwrap();
        let rev = ts.reverse();
        for x in 0..3 {
            let s: f64 = rev.p().row(x).iter().sum();
            assert_relative_eq!(s, 1.0, epsilon = 1e-12);
        }
        for x in 0..3 {
            assert_relative_eq!(rev.pi()[x], ts.pi()[x], epsilon = 1e-15);
        }
        let back = rev.reverse();
        for x in 0..3 {
            for y in 0..3 {
                assert_relative_eq!(back.prob(x, y), ts.prob(x, y), epsilon = 1e-12);
            }
        }
        // Reversible chain: reversal is the chain itself.
        let path = TransitionSystem::from_network(&path_a(3).unwrap()).unwrap();
        let path_rev = path.reverse();
        for x in 0..4 {
            for y in 0..4 {
                assert_relative_eq!(path_rev.prob(x, y), path.prob(x, y), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn green_kernel_small_path() {
        // Path 0-1-2, A = {1,2}: expected visits in closed form.
        let ts = TransitionSystem::from_network(&path_a(2).unwrap()).unwrap();
        let g = green_restricted(&ts, &[1, 2], Cx::new(1.0, 0.0)).unwrap();
        let expect = [[2.0, 1.0], [2.0, 2.0]];
        for i in 0..2 {
            for j in 0..2 {
                let v = g.matrix()[(i, j)];
                assert_relative_eq!(v.re, expect[i][j], epsilon = 1e-12);
                assert_eq!(v.im, 0.0);
            }
        }
        assert!(g.residual() < 1e-12);
        assert!(green_restricted(&ts, &[0, 1, 2], Cx::new(1.0, 0.0)).is_err());
        assert!(green_restricted(&ts, &[1], Cx::new(0.5, 0.0)).is_err());
    }

    #[test]
    fn green_kernel_matches_neumann_series() {
        let ts = TransitionSystem::from_network(&path_a(3).unwrap()).unwrap();
        let subset = [1, 2, 3];
        let g = green_restricted(&ts, &subset, Cx::new(1.0, 0.0)).unwrap();
        // Independent route: partial sums of P_A^n.
        let pa = block(ts.p(), &subset, &subset);
        let mut sum = DMatrix::<f64>::identity(3, 3);
        let mut term = DMatrix::<f64>::identity(3, 3);
        for _ in 0..2000 {
            term *= &pa;
            sum += &term;
            if term.amax() < 1e-16 {
                break;
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(g.matrix()[(i, j)].re, sum[(i, j)], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn hitting_matrix_path_closed_form() {
        let net = path_a(4).unwrap();
        let ts = TransitionSystem::from_network(&net).unwrap();
        let part = Partition::from_network(&net);
        let upsilon = hitting_matrix(&ts, &part).unwrap();
        for (i, &k) in part.interior().iter().enumerate() {
            assert_relative_eq!(upsilon[(i, 0)], (4.0 - k as f64) / 4.0, epsilon = 1e-12);
            assert_relative_eq!(upsilon[(i, 1)], k as f64 / 4.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn boundary_chain_path() {
        let net = path_a(4).unwrap();
        let ts = TransitionSystem::from_network(&net).unwrap();
        let part = Partition::from_network(&net);
        let app = boundary_chain(&ts, &part).unwrap();
        let q = app.q();
        assert_relative_eq!(q[(0, 0)], 0.75, epsilon = 1e-12);
        assert_relative_eq!(q[(0, 1)], 0.25, epsilon = 1e-12);
        assert_relative_eq!(q[(1, 0)], 0.25, epsilon = 1e-12);
        // Path is reversible, so both hitting matrices coincide.
        assert_relative_eq!(
            (app.upsilon() - app.upsilon_reversed()).amax(),
            0.0,
            epsilon = 1e-12
        );
        assert!(app.nu_pi().is_probability(1e-12));
        assert_eq!(app.exit_boundary(), &[0, 4]);
        assert_eq!(app.entrance_boundary(), &[0, 4]);
    }

    #[test]
    fn funnel_boundary_split() {
        let ps = [0.5, 0.2, 0.15, 0.15];
        let ts = TransitionSystem::from_stochastic_matrix(labels(4), funnel_matrix(&ps)).unwrap();
        let part = Partition::new(4, [2, 3]).unwrap();
        let app = boundary_chain(&ts, &part).unwrap();
        // Exit: both boundary vertices receive branch edges from vertex 1.
        assert_eq!(app.exit_boundary(), &[2, 3]);
        // Entrance: only N-1 steps back into the interior.
        assert_eq!(app.entrance_boundary(), &[2]);
        // Reversed hitting concentrates on the entrance vertex.
        for i in 0..app.upsilon_reversed().nrows() {
            assert_relative_eq!(app.upsilon_reversed()[(i, 0)], 1.0, epsilon = 1e-12);
            assert_relative_eq!(app.upsilon_reversed()[(i, 1)], 0.0, epsilon = 1e-12);
        }
        assert!(app.nu_pi().is_probability(1e-12));
    }

    #[test]
    fn override_recomputes_stationary() {
        let net = path_a(3).unwrap();
        let ts = TransitionSystem::from_network(&net).unwrap();
        let part = Partition::from_network(&net);
        let mut rows = BTreeMap::new();
        // Send the left endpoint straight to the far end.
        rows.insert(0usize, vec![0.0, 0.5, 0.0, 0.5]);
        let over = ts.with_boundary_override(&rows, &part).unwrap();
        assert_eq!(over.overridden_rows().unwrap().len(), 1);
        assert_relative_eq!(over.prob(0, 3), 0.5);
        assert!((over.pi() - ts.pi()).amax() > 1e-3);
        let res = (over.p().transpose() * over.pi() - over.pi()).amax();
        assert!(res < 1e-12);

        rows.insert(1, vec![0.0, 0.0, 1.0, 0.0]);
        assert!(ts.with_boundary_override(&rows, &part).is_err());
    }

    #[test]
    fn subnetwork_transition_renormalizes_boundary_rows() {
        let net = path_a(4).unwrap();
        let y: BTreeSet<usize> = [1, 2, 3].into_iter().collect();
        let sub = net.subnetwork(&y).unwrap();
        let ts_sub = subnetwork_transition(&sub).unwrap();
        assert_eq!(ts_sub.prob(0, 1), 1.0);
        assert_eq!(ts_sub.prob(1, 0), 0.5);
        assert_eq!(ts_sub.prob(1, 2), 0.5);
        assert_eq!(ts_sub.prob(2, 1), 1.0);
        // Interior rows agree with the unrestricted chain.
        let ts = TransitionSystem::from_network(&net).unwrap();
        assert_eq!(ts_sub.prob(1, 0), ts.prob(2, 1));
        // Row-renormalized route gives the same chain.
        let ts_rows = restricted_transition(&ts, &[1, 2, 3]).unwrap();
        assert_relative_eq!((ts_sub.p() - ts_rows.p()).amax(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn subnetwork_transition_rejects_disconnected_piece() {
        let net = cycle(8).unwrap();
        let y: BTreeSet<usize> = (0..6).collect();
        let sub = net.subnetwork(&y).unwrap();
        assert!(!sub.is_strongly_connected());
        assert!(matches!(
            subnetwork_transition(&sub),
            Err(Error::NotStronglyConnected(_))
        ));
        // Singleton: no edges within the subset at all.
        let single: BTreeSet<usize> = [0].into_iter().collect();
        let sub = net.subnetwork(&single).unwrap();
        assert!(matches!(
            subnetwork_transition(&sub),
            Err(Error::EmptySubset(_))
        ));
    }

    #[test]
    fn resolvent_reduces_to_green_at_one() {
        let net = path_a(3).unwrap();
        let ts = TransitionSystem::from_network(&net).unwrap();
        let part = Partition::from_network(&net);
        let (q1, _r1) = boundary_resolvents(&ts, &part, Cx::new(1.0, 0.0)).unwrap();
        let app = boundary_chain(&ts, &part).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(q1[(i, j)].re, app.q()[(i, j)], epsilon = 1e-12);
                assert_eq!(q1[(i, j)].im, 0.0);
            }
        }
        // Complex location is accepted and produces a genuinely complex kernel.
        let (qc, rc) = boundary_resolvents(&ts, &part, Cx::new(1.0, 0.5)).unwrap();
        assert!(qc.iter().any(|v| v.im.abs() > 1e-6));
        assert!(rc.iter().any(|v| v.im.abs() > 1e-6));
    }
}
