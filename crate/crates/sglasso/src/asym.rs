use crate::error::{Error, Result};
use crate::mat::{inverse, sym_eigen, Matrix, SymBoolMatrix, SymMatrix};
use crate::penalty::{weighted_degrees, DegreeVector};
use crate::rng::RngStream;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

/// Step-change threshold below which the proximal iteration is declared
/// converged.
const STEP_TOL: f64 = 1e-9;
const MAX_ITERS: usize = 100_000;

pub const DEFAULT_MASS_ZERO_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitFlavor {
    SglassoLimit,
    GlassoLimit,
}

/// Everything fixed about a scaled-estimation-error limit: the truth Ω₀ and
/// its inverse, the penalty level λ₀, weighted degrees, and where the true
/// zeros sit (the entries whose limiting sign is free).
#[derive(Debug, Clone)]
pub struct LimitProblem {
    pub omega0: SymMatrix,
    pub sigma0: SymMatrix,
    pub lambda0: f64,
    pub degrees: DegreeVector,
    pub zero_pattern: SymBoolMatrix,
}

impl LimitProblem {
    pub fn new(omega0: SymMatrix, lambda0: f64) -> Result<Self> {
        if lambda0 < 0.0 {
            return Err(Error::InvalidArgument("lambda0 must be ≥ 0".into()));
        }
        let sigma0 = inverse(&omega0)?;
        let p = omega0.dim();
        let prod = sigma0.to_matrix().matmul(&omega0.to_matrix());
        for i in 0..p {
            for j in 0..p {
                let expect = if i == j { 1.0 } else { 0.0 };
                if (prod[(i, j)] - expect).abs() > 1e-8 {
                    return Err(Error::NotPositiveDefinite(
                        "precision matrix too ill-conditioned to invert reliably".into(),
                    ));
                }
            }
        }
        let degrees = weighted_degrees(&omega0);
        let mut zero_pattern = SymBoolMatrix::new(p);
        for i in 0..p {
            for j in 0..=i {
                zero_pattern.set(i, j, omega0[(i, j)] == 0.0);
            }
        }
        Ok(LimitProblem {
            omega0,
            sigma0,
            lambda0,
            degrees,
            zero_pattern,
        })
    }

    pub fn dim(&self) -> usize {
        self.omega0.dim()
    }
}

#[derive(Debug, Clone)]
pub struct LimitDraw {
    pub w: SymMatrix,
    pub u_star: SymMatrix,
}

/// Half-vectorization order: columns of the lower triangle, so pair (i,j)
/// with i ≥ j sits at j·p − j(j−1)/2 + (i − j).
pub fn vech_index(p: usize, i: usize, j: usize) -> usize {
    assert!(i >= j && i < p);
    j * (2 * p - j + 1) / 2 + (i - j)
}

pub fn vech_pairs(p: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(p * (p + 1) / 2);
    for j in 0..p {
        for i in j..p {
            pairs.push((i, j));
        }
    }
    pairs
}

/// Fourth-moment covariance of the sampling noise of a Gaussian covariance
/// estimate: Cov(W_ij, W_kl) = Σ_ik Σ_jl + Σ_il Σ_jk over vech pairs.
pub fn isserlis_lambda(sigma0: &SymMatrix) -> SymMatrix {
    let pairs = vech_pairs(sigma0.dim());
    SymMatrix::from_fn(pairs.len(), |a, b| {
        let (i, j) = pairs[a];
        let (k, l) = pairs[b];
        sigma0[(i, k)] * sigma0[(j, l)] + sigma0[(i, l)] * sigma0[(j, k)]
    })
}

/// Square-root factor of a PSD matrix for sampling: columns scaled by the
/// root eigenvalues, negatives clamped at zero.
fn psd_factor(m: &SymMatrix) -> Matrix {
    let (vals, q) = sym_eigen(m);
    let dim = m.dim();
    Matrix::from_fn(dim, dim, |i, k| q[(i, k)] * vals[k].max(0.0).sqrt())
}

fn draw_w_with(p: usize, factor: &Matrix, rng: &RngStream) -> SymMatrix {
    let m = factor.rows();
    let mut gen = rng.generator();
    let z: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut gen)).collect();
    let pairs = vech_pairs(p);
    let mut vech = vec![0.0; m];
    for (row, v) in vech.iter_mut().enumerate() {
        *v = (0..m).map(|k| factor[(row, k)] * z[k]).sum();
    }
    let mut w = SymMatrix::zeros(p);
    for (idx, &(i, j)) in pairs.iter().enumerate() {
        w.set(i, j, vech[idx]);
    }
    w
}

/// One draw of the symmetric noise matrix W with vech(W) ~ N(0, Λ).
pub fn draw_w(lambda_matrix: &SymMatrix, rng: &RngStream) -> SymMatrix {
    let m = lambda_matrix.dim();
    // m = p(p+1)/2 determines p.
    let p = (((8 * m + 1) as f64).sqrt() as usize - 1) / 2;
    assert_eq!(p * (p + 1) / 2, m, "not a vech-sized matrix");
    draw_w_with(p, &psd_factor(lambda_matrix), rng)
}

fn tr_usus(u: &SymMatrix, sigma0: &SymMatrix) -> f64 {
    let m = u.to_matrix().matmul(&sigma0.to_matrix());
    let p = u.dim();
    let mut tr = 0.0;
    for i in 0..p {
        for j in 0..p {
            tr += m[(i, j)] * m[(j, i)];
        }
    }
    tr
}

/// The limiting criterion evaluated in its written form: quadratic term,
/// noise pairing, and the degree-tilted penalty summed over ordered pairs.
pub fn limit_objective(
    problem: &LimitProblem,
    w: &SymMatrix,
    flavor: LimitFlavor,
    u: &SymMatrix,
) -> f64 {
    let p = problem.dim();
    let mut pen = 0.0;
    for i in 0..p {
        for j in 0..p {
            let g = if problem.zero_pattern.get(i, j) {
                u[(i, j)].abs()
            } else {
                u[(i, j)] * problem.omega0[(i, j)].signum()
            };
            pen += match flavor {
                LimitFlavor::SglassoLimit => 2.0 * problem.lambda0 * g * problem.degrees.d[j],
                LimitFlavor::GlassoLimit => problem.lambda0 * g,
            };
        }
    }
    tr_usus(u, &problem.sigma0) + u.trace_product(w) + pen
}

/// Per ordered entry, the prox weight of the symmetric split of the penalty.
fn entry_weight(problem: &LimitProblem, flavor: LimitFlavor, i: usize, j: usize) -> f64 {
    match flavor {
        LimitFlavor::SglassoLimit => {
            problem.lambda0 * (problem.degrees.d[i] + problem.degrees.d[j])
        }
        LimitFlavor::GlassoLimit => problem.lambda0,
    }
}

fn minimize_inner(
    problem: &LimitProblem,
    w: &SymMatrix,
    flavor: LimitFlavor,
) -> Result<(SymMatrix, Vec<f64>)> {
    let p = problem.dim();
    let spectral = problem.sigma0.spectral_norm();
    let step = 1.0 / (2.0 * spectral * spectral);
    let s = problem.sigma0.to_matrix();
    let mut u = SymMatrix::zeros(p);
    let mut objectives = Vec::new();

    for it in 0..MAX_ITERS {
        // Gradient of tr(UΣ₀UΣ₀) + tr(UW) at symmetric U.
        let su = s.matmul(&u.to_matrix()).matmul(&s);
        let grad = SymMatrix::symmetrize(&su).scale(2.0).add(w);
        let v = u.sub(&grad.scale(step));
        let next = SymMatrix::from_fn(p, |i, j| {
            let t = step * entry_weight(problem, flavor, i, j);
            if problem.zero_pattern.get(i, j) {
                let shrunk = v[(i, j)].abs() - t;
                if shrunk > 0.0 {
                    v[(i, j)].signum() * shrunk
                } else {
                    0.0
                }
            } else {
                v[(i, j)] - t * problem.omega0[(i, j)].signum()
            }
        });
        let delta = next.sub(&u).frobenius_norm();
        u = next;
        if it % 16 == 0 {
            objectives.push(limit_objective(problem, w, flavor, &u));
        }
        if delta <= STEP_TOL {
            objectives.push(limit_objective(problem, w, flavor, &u));
            return Ok((u, objectives));
        }
    }
    Err(Error::NonConvergence {
        iterations: MAX_ITERS,
    })
}

/// Minimizes the limiting criterion over symmetric U by proximal gradient:
/// gradient step on the smooth part at rate 1/(2‖Σ₀‖₂²), then the exact
/// entrywise prox of the tilt-or-threshold penalty. Zeros produced by the
/// threshold are exact.
pub fn minimize_v(problem: &LimitProblem, w: &SymMatrix, flavor: LimitFlavor) -> Result<SymMatrix> {
    if w.dim() != problem.dim() {
        return Err(Error::DimensionMismatch(format!(
            "noise matrix is {}x{} but the problem is {p}x{p}",
            w.dim(),
            w.dim(),
            p = problem.dim()
        )));
    }
    minimize_inner(problem, w, flavor).map(|(u, _)| u)
}

/// Draws n_draws noise matrices (streams offset from `rng`) and minimizes
/// each; results come back in draw order.
pub fn limit_draws(
    problem: &LimitProblem,
    flavor: LimitFlavor,
    n_draws: usize,
    rng: &RngStream,
) -> Result<Vec<LimitDraw>> {
    if n_draws < 1 {
        return Err(Error::InvalidArgument("n_draws must be ≥ 1".into()));
    }
    let lambda_matrix = isserlis_lambda(&problem.sigma0);
    let factor = psd_factor(&lambda_matrix);
    let p = problem.dim();
    (0..n_draws)
        .into_par_iter()
        .map(|k| {
            let w = draw_w_with(p, &factor, &rng.offset(k as u64));
            let u_star = minimize_v(problem, &w, flavor)?;
            Ok(LimitDraw { w, u_star })
        })
        .collect()
}

/// Per entry with Ω₀,ij = 0: the fraction of draws whose minimizer is zero
/// there (|u*| within zero_tol of an exact zero). Entries with Ω₀,ij ≠ 0
/// report mass 0.
pub fn zero_mass(
    problem: &LimitProblem,
    flavor: LimitFlavor,
    n_draws: usize,
    rng: &RngStream,
    zero_tol: f64,
) -> Result<SymMatrix> {
    let draws = limit_draws(problem, flavor, n_draws, rng)?;
    Ok(mass_from_draws(problem, &draws, zero_tol))
}

/// The zero-mass tally for draws already in hand.
pub fn mass_from_draws(problem: &LimitProblem, draws: &[LimitDraw], zero_tol: f64) -> SymMatrix {
    let p = problem.dim();
    SymMatrix::from_fn(p, |i, j| {
        if !problem.zero_pattern.get(i, j) {
            return 0.0;
        }
        let hits = draws
            .iter()
            .filter(|d| d.u_star[(i, j)].abs() <= zero_tol)
            .count();
        hits as f64 / draws.len() as f64
    })
}

/// Two chosen entries of each minimizer as CSV for plotting, one draw per
/// row; columns labeled with 1-based entry positions.
pub fn scatter_csv(draws: &[LimitDraw], a: (usize, usize), b: (usize, usize)) -> String {
    let mut out = format!("u_{}_{},u_{}_{}\n", a.0 + 1, a.1 + 1, b.0 + 1, b.1 + 1);
    for d in draws {
        out.push_str(&format!("{},{}\n", d.u_star[a], d.u_star[b]));
    }
    out
}
