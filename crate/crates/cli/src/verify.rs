//! Verification suites: seeded identity checks and Monte Carlo cross-checks.
//!
//! Each check prints one machine-readable line, `PASS <name> ...` or
//! `FAIL <name> ...`, followed by a summary. A failing suite exits with
//! code 4 so scripts can gate on it.

use nalgebra::DMatrix;

use netlap_core::markov::green_restricted;
use netlap_core::{
    apply_laplacian, bi_blocks, boundary_chain, estimate_boundary_chain, estimate_green,
    estimate_hitting, hitting_matrix, linalg, markov::boundary_resolvents, normal_derivative,
    Cx, FieldFunction, Network, NormalDerivativeKind, Partition, Rng, TransitionSystem,
};

use crate::{CliError, CliResult};

const FD_STEP: f64 = 1e-6;
const FD_TOL: f64 = 1e-4;

fn c(x: f64) -> Cx {
    Cx::new(x, 0.0)
}

fn random_field(rng: &mut Rng, support: &[usize]) -> FieldFunction {
    FieldFunction::from_fn(support.iter().copied(), |_| c(0.5 * rng.next_unit() - 0.25))
}

struct Tally {
    passed: usize,
    failed: usize,
}

impl Tally {
    fn new() -> Self {
        Tally { passed: 0, failed: 0 }
    }

    fn record(&mut self, name: &str, value: f64, tol: f64) {
        if value <= tol {
            self.passed += 1;
            println!("PASS {name} value={value:.3e} tol={tol:.1e}");
        } else {
            self.failed += 1;
            println!("FAIL {name} value={value:.3e} tol={tol:.1e}");
        }
    }

    fn finish(self, suite: &str, seed: u64) -> i32 {
        let total = self.passed + self.failed;
        println!("{suite}: {}/{} checks passed (seed {seed})", self.passed, total);
        if self.failed == 0 {
            0
        } else {
            4
        }
    }
}

fn chain_parts(net: &Network) -> CliResult<(TransitionSystem, Partition)> {
    let ts = TransitionSystem::from_network(net)?;
    let part = Partition::from_network(net);
    if part.boundary().is_empty() {
        return Err(CliError::Input(
            "verification needs a network with at least one boundary vertex".to_string(),
        ));
    }
    if part.interior().is_empty() {
        return Err(CliError::Input(
            "verification needs a network with at least one interior vertex".to_string(),
        ));
    }
    Ok((ts, part))
}

/// Algebraic identities of the chain, its reversal, and the boundary
/// operators, evaluated on data drawn from the given seed.
pub fn run_identities(net: &Network, seed: u64, tol: f64) -> CliResult<i32> {
    let (ts, part) = chain_parts(net)?;
    let mut rng = Rng::new(seed);
    let n = ts.n();
    let all: Vec<usize> = (0..n).collect();
    let interior: Vec<usize> = part.interior().to_vec();
    let boundary: Vec<usize> = part.boundary().to_vec();
    let pi = ts.pi().clone();
    let mut tally = Tally::new();

    let stat = (ts.p().transpose() * &pi - &pi).amax();
    tally.record("stationarity", stat, tol);

    // Interior pairing of the operator against its time reversal equals the
    // boundary pairing of the respective outward derivatives.
    let f = random_field(&mut rng, &all);
    let g = random_field(&mut rng, &all);
    let rev = ts.reverse();
    let lg = apply_laplacian(&ts, &g)?;
    let lf_hat = apply_laplacian(&rev, &f)?;
    let mut lhs = c(0.0);
    for &x in &interior {
        lhs += (f.get(x).unwrap() * lg.get(x).unwrap()
            - g.get(x).unwrap() * lf_hat.get(x).unwrap())
            * pi[x];
    }
    let ndg = normal_derivative(&ts, &part, &g, NormalDerivativeKind::Standard)?;
    let ndf_hat = normal_derivative(&ts, &part, &f, NormalDerivativeKind::Reversed)?;
    let mut rhs = c(0.0);
    for &b in &boundary {
        rhs += (f.get(b).unwrap() * ndg.get(b).unwrap()
            - g.get(b).unwrap() * ndf_hat.get(b).unwrap())
            * pi[b];
    }
    tally.record("pairing-identity", (lhs - rhs).norm(), tol);

    // pi(y) (P G)(y, z) = pi(z) Ups_hat(z, y) entrywise.
    let app = boundary_chain(&ts, &part)?;
    let p_bi =
        DMatrix::from_fn(boundary.len(), interior.len(), |i, j| ts.prob(boundary[i], interior[j]));
    let p_bi_g = &p_bi * app.green_interior();
    let mut duality = 0.0f64;
    for (bi, &y) in boundary.iter().enumerate() {
        for (ii, &z) in interior.iter().enumerate() {
            let gap = (pi[y] * p_bi_g[(bi, ii)] - pi[z] * app.upsilon_reversed()[(ii, bi)]).abs();
            duality = duality.max(gap);
        }
    }
    tally.record("kernel-duality", duality, tol);

    // Boundary pairing through the return operator equals the interior
    // pairing of the two hitting maps.
    let blocks = bi_blocks(&ts, &part)?;
    let g1 = random_field(&mut rng, &boundary);
    let g2 = random_field(&mut rng, &boundary);
    let g1v = g1.vector_for(&boundary, "pairing")?;
    let g2v = g2.vector_for(&boundary, "pairing")?;
    let rg2 = linalg::apply_real(blocks.r(), &g2v);
    let mut lhs = c(0.0);
    for (bi, &b) in boundary.iter().enumerate() {
        lhs += g1v[bi] * rg2[bi] * pi[b];
    }
    let ug2 = linalg::apply_real(app.upsilon(), &g2v);
    let ug1_rev = linalg::apply_real(app.upsilon_reversed(), &g1v);
    let mut rhs = c(0.0);
    for (ii, &z) in interior.iter().enumerate() {
        rhs += ug1_rev[ii] * ug2[ii] * pi[z];
    }
    tally.record("return-pairing", (lhs - rhs).norm(), tol);

    // Fourth-order blocks against the squared one-step operator.
    let eye = DMatrix::<f64>::identity(n, n);
    let m1 = ts.p() - &eye;
    let sq = &m1 * &m1;
    let mut assembly = 0.0f64;
    for (i, &a) in interior.iter().enumerate() {
        for (j, &b) in interior.iter().enumerate() {
            assembly = assembly.max((sq[(a, b)] - blocks.s()[(i, j)]).abs());
        }
        for (j, &b) in boundary.iter().enumerate() {
            assembly = assembly.max((sq[(a, b)] + blocks.u()[(i, j)]).abs());
        }
    }
    for (i, &a) in boundary.iter().enumerate() {
        for (j, &b) in interior.iter().enumerate() {
            assembly = assembly.max((sq[(a, b)] + blocks.u_prime()[(i, j)]).abs());
        }
        for (j, &b) in boundary.iter().enumerate() {
            assembly = assembly.max((sq[(a, b)] - blocks.s_prime()[(i, j)]).abs());
        }
    }
    tally.record("block-assembly", assembly, tol);

    // Solvability functional: volume form equals boundary form.
    let f_any = random_field(&mut rng, &interior);
    let g_any = random_field(&mut rng, &boundary);
    let f_int = f_any.vector_for(&interior, "condition")?;
    let gf = linalg::apply_real(app.green_interior(), &f_int);
    let mut cond = c(0.0);
    for (ii, &z) in interior.iter().enumerate() {
        cond += gf[ii] * pi[z];
    }
    cond += app.nu_pi().integrate(&g_any)?;
    let gsq = app.green_interior() * app.green_interior();
    let pbig2 = &p_bi * &gsq;
    let pbig2f = linalg::apply_real(&pbig2, &f_int);
    let ir = DMatrix::<f64>::identity(boundary.len(), boundary.len()) + blocks.r();
    let irg = linalg::apply_real(&ir, &g_any.vector_for(&boundary, "condition")?);
    let mut cond_boundary = c(0.0);
    for (bi, &b) in boundary.iter().enumerate() {
        cond_boundary += (pbig2f[bi] + irg[bi]) * pi[b];
    }
    tally.record("solvability-functionals", (cond - cond_boundary).norm(), tol);

    // d/dlambda of the boundary pencil at 1 is I + R; forward difference
    // because the admissible real locations sit at or above 1.
    let (q1, r1) = boundary_resolvents(&ts, &part, c(1.0))?;
    let (qh, _) = boundary_resolvents(&ts, &part, c(1.0 + FD_STEP))?;
    let b = q1.nrows();
    let eye_b = DMatrix::<Cx>::identity(b, b);
    let fd = ((&eye_b * c(1.0 + FD_STEP) - &qh) - (&eye_b - &q1)) * c(1.0 / FD_STEP);
    let target = &eye_b + &r1;
    let mut worst = 0.0f64;
    for i in 0..b {
        for j in 0..b {
            worst = worst.max((fd[(i, j)] - target[(i, j)]).norm());
        }
    }
    tally.record("resolvent-derivative", worst, tol.max(FD_TOL));

    Ok(tally.finish("identities", seed))
}

struct McTally {
    passed: usize,
    failed: usize,
}

impl McTally {
    fn new() -> Self {
        McTally { passed: 0, failed: 0 }
    }

    /// Gate each estimate at four standard errors; report the largest
    /// deviation in standard-error units.
    fn record(&mut self, name: &str, gaps: &[(f64, f64)], trials: u64) {
        let mut ok = true;
        let mut max_sigma = 0.0f64;
        for &(gap, se) in gaps {
            if gap > 4.0 * se + 1e-12 {
                ok = false;
            }
            let sigma = if se > 0.0 {
                gap / se
            } else if gap == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            max_sigma = max_sigma.max(sigma);
        }
        if ok {
            self.passed += 1;
            println!("PASS {name} max_sigma={max_sigma:.2} trials={trials}");
        } else {
            self.failed += 1;
            println!("FAIL {name} max_sigma={max_sigma:.2} trials={trials}");
        }
    }

    fn finish(self, seed: u64) -> i32 {
        let total = self.passed + self.failed;
        println!("montecarlo: {}/{} checks passed (seed {seed})", self.passed, total);
        if self.failed == 0 {
            0
        } else {
            4
        }
    }
}

/// Walk-based estimates against the exact kernels: exit distributions,
/// expected visit counts, and the induced boundary chain.
pub fn run_montecarlo(net: &Network, seed: u64, trials: u64) -> CliResult<i32> {
    let (ts, part) = chain_parts(net)?;
    let interior: Vec<usize> = part.interior().to_vec();
    let boundary: Vec<usize> = part.boundary().to_vec();
    let mut tally = McTally::new();

    let hm = hitting_matrix(&ts, &part)?;
    for (i, &x) in interior.iter().enumerate().take(4) {
        let rep = estimate_hitting(&ts, &part, x, trials, seed)?;
        let mut gaps = Vec::new();
        for (j, &b) in boundary.iter().enumerate() {
            let key = ts.label(b).to_string();
            let est = rep.point_estimates[&key];
            let se = rep.standard_errors[&key];
            gaps.push(((est - hm[(i, j)]).abs(), se));
        }
        tally.record(&format!("mc-hitting-from-{}", ts.label(x)), &gaps, trials);
    }

    let kernel = green_restricted(&ts, &interior, c(1.0))?;
    let x = interior[0];
    let y = interior[interior.len().min(2) - 1];
    let rep = estimate_green(&ts, &interior, x, y, trials, seed)?;
    let est = rep.point_estimates["visits"];
    let se = rep.standard_errors["visits"];
    let exact = kernel.entry(x, y).unwrap().re;
    tally.record(
        &format!("mc-visits-{}-{}", ts.label(x), ts.label(y)),
        &[((est - exact).abs(), se)],
        trials,
    );

    let app = boundary_chain(&ts, &part)?;
    let rep = estimate_boundary_chain(&ts, &part, trials, seed)?;
    let mut gaps = Vec::new();
    for (i, &from) in boundary.iter().enumerate() {
        for (j, &to) in boundary.iter().enumerate() {
            let key = format!("{}->{}", ts.label(from), ts.label(to));
            let est = rep.point_estimates[&key];
            let se = rep.standard_errors[&key];
            gaps.push(((est - app.q()[(i, j)]).abs(), se));
        }
    }
    tally.record("mc-boundary-chain", &gaps, trials);

    Ok(tally.finish(seed))
}
