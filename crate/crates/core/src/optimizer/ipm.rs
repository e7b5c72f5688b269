//! Primal log-barrier interior-point method for [`ConvexSubproblem`].
//!
//! Barrier: `−Σ log det(X_b + εI) − Σ log(x_s − lb_s) − Σ log(−f_i(x))`.
//! Each general constraint contributes a rank-one Hessian term `∇f∇fᵀ/f²`
//! and, when it has a log part, a second rank-one term from the curvature of
//! `−log2(d + c·x)`. The Newton system is solved densely for small problems
//! and by Woodbury over the block-diagonal part for large ones.

use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, DVector, DVectorViewMut, Dyn};

use super::problem::{ConstraintKind, ConstraintTag, ConvexSubproblem, ScalarRole, Sense};
use crate::error::{Error, Result};
use crate::linalg::{hpd_cholesky, hpd_inverse, ln_det_from_cholesky, trace_coef, vec_to_herm, CMatrix};

const LN2: f64 = std::f64::consts::LN_2;

#[derive(Clone, Debug)]
pub struct SolverSettings {
    /// Target duality-gap bound `m/t`.
    pub tolerance: f64,
    /// Barrier parameter growth factor.
    pub mu: f64,
    /// Newton steps allowed per centering.
    pub max_newton: usize,
    /// Blocks live in `{X : X + psd_shift·I ≻ 0}`.
    pub psd_shift: f64,
    pub armijo: f64,
    pub backtrack: f64,
    /// Centering stops once `λ²/2` drops below this.
    pub newton_tolerance: f64,
    pub deadline: Option<Instant>,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-7,
            mu: 10.0,
            max_newton: 200,
            psd_shift: 1e-9,
            armijo: 0.3,
            backtrack: 0.5,
            newton_tolerance: 1e-8,
            deadline: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveOutput {
    pub x: Vec<f64>,
    /// Objective in the problem's own sense.
    pub objective: f64,
    /// Certified bound on the distance to the optimum.
    pub gap: f64,
    pub newton_steps: usize,
}

/// Solves `sub`, starting from `x0` when it is strictly feasible and running
/// a phase-I search otherwise.
pub fn solve_convex(sub: &ConvexSubproblem, x0: Option<&[f64]>, settings: &SolverSettings) -> Result<SolveOutput> {
    let mut x = match x0 {
        Some(x0) if x0.len() == sub.n => x0.to_vec(),
        Some(x0) => return Err(Error::InvalidInput(format!("start has length {} but problem has {}", x0.len(), sub.n))),
        None => default_start(sub),
    };
    let mut steps = 0;
    if !strictly_feasible(sub, &x, settings.psd_shift) {
        let (xf, s) = phase_one(sub, &x, settings)?;
        x = xf;
        steps += s;
    }
    let run = barrier_method(sub, x, settings, None)?;
    Ok(SolveOutput { objective: sub.objective_value(&run.x), x: run.x, gap: run.gap, newton_steps: steps + run.steps })
}

/// Blocks at the identity, scalars one unit above their bounds.
pub fn default_start(sub: &ConvexSubproblem) -> Vec<f64> {
    let mut x = vec![0.0; sub.n];
    for b in &sub.blocks {
        for i in 0..b.dim {
            x[b.offset + i] = 1.0;
        }
    }
    for s in &sub.scalars {
        x[s.offset] = s.lower + 1.0;
    }
    x
}

pub fn strictly_feasible(sub: &ConvexSubproblem, x: &[f64], shift: f64) -> bool {
    sub.scalars.iter().all(|s| x[s.offset] > s.lower)
        && sub.blocks.iter().all(|b| block_logdet(&x[b.range()], b.dim, shift).is_some())
        && sub.constraints.iter().all(|c| c.value(x) < 0.0)
}

fn block_matrix(v: &[f64], m: usize, shift: f64) -> CMatrix {
    let mut q = vec_to_herm(v, m);
    for i in 0..m {
        q[(i, i)].re += shift;
    }
    q
}

fn block_logdet(v: &[f64], m: usize, shift: f64) -> Option<f64> {
    hpd_cholesky(&block_matrix(v, m, shift)).map(|l| ln_det_from_cholesky(&l))
}

fn objective_sign(sub: &ConvexSubproblem) -> f64 {
    match sub.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    }
}

/// `t·c·x + φ(x)`, or `None` outside the barrier domain.
fn barrier_value(sub: &ConvexSubproblem, x: &[f64], t: f64, shift: f64) -> Option<f64> {
    let mut v = t * objective_sign(sub) * sub.objective_value(x);
    for s in &sub.scalars {
        let d = x[s.offset] - s.lower;
        if !(d > 0.0) {
            return None;
        }
        v -= d.ln();
    }
    for c in &sub.constraints {
        let f = c.value(x);
        if !(f < 0.0) {
            return None;
        }
        v -= (-f).ln();
    }
    for b in &sub.blocks {
        v -= block_logdet(&x[b.range()], b.dim, shift)?;
    }
    Some(v)
}

/// Hessian of `−log det X` in Hermitian coordinates, given `Y = X⁻¹`:
/// `H[p][q] = tr(Y E_p Y E_q)`.
fn logdet_hessian(y: &CMatrix) -> DMatrix<f64> {
    let m = y.nrows();
    let d = m * m;
    let mut h = DMatrix::zeros(d, d);
    // basis element p as (kind, i, j): 0 = diagonal, 1 = real part, 2 = imaginary part
    let mut basis = Vec::with_capacity(d);
    for i in 0..m {
        basis.push((0u8, i, i));
    }
    for i in 0..m {
        for j in (i + 1)..m {
            basis.push((1u8, i, j));
            basis.push((2u8, i, j));
        }
    }
    let mut z = CMatrix::zeros(m, m);
    let iu = num_complex::Complex64::new(0.0, 1.0);
    for (p, &(kind, i, j)) in basis.iter().enumerate() {
        for a in 0..m {
            for b in a..m {
                z[(a, b)] = match kind {
                    0 => y[(a, i)] * y[(i, b)],
                    1 => y[(a, i)] * y[(j, b)] + y[(a, j)] * y[(i, b)],
                    _ => iu * (y[(a, i)] * y[(j, b)] - y[(a, j)] * y[(i, b)]),
                };
            }
        }
        let mut row = vec![0.0; d];
        trace_coef(&z, &mut row);
        for q in 0..d {
            h[(p, q)] = row[q];
        }
    }
    // symmetrize against rounding
    let ht = h.transpose();
    (h + ht) * 0.5
}

/// One rank-one Hessian term `u uᵀ` supported on a constraint's indices.
struct RankOne {
    constraint: usize,
    u: Vec<f64>,
}

enum Factorization {
    /// Cholesky of the Jacobi-equilibrated Hessian `S H S` with `S = diag(H)^{-1/2}`.
    Dense(Cholesky<f64, Dyn>, Vec<f64>),
    Woodbury(Box<WoodburyFactor>),
}

struct WoodburyFactor {
    n: usize,
    blocks: Vec<(usize, usize, Cholesky<f64, Dyn>)>,
    scalar_diag: Vec<(usize, f64)>,
    terms: Vec<RankOne>,
    /// `D⁻¹ u_j` for every term.
    dinv_u: Vec<Vec<f64>>,
    capacitance: CapacitanceSolver,
}

enum CapacitanceSolver {
    Chol(Cholesky<f64, Dyn>),
    Lu(nalgebra::LU<f64, Dyn, Dyn>),
}

impl WoodburyFactor {
    fn apply_dinv(&self, v: &mut [f64]) {
        for (off, len, chol) in &self.blocks {
            let part = &mut v[*off..off + len];
            if part.iter().all(|x| *x == 0.0) {
                continue;
            }
            chol.solve_mut(&mut DVectorViewMut::from_slice(part, *len));
        }
        for &(i, d) in &self.scalar_diag {
            v[i] /= d;
        }
    }
}

impl Factorization {
    fn solve(&self, sub: &ConvexSubproblem, rhs: &[f64]) -> Vec<f64> {
        match self {
            Factorization::Dense(chol, scale) => {
                let r = DVector::from_iterator(rhs.len(), rhs.iter().zip(scale).map(|(a, s)| a * s));
                chol.solve(&r).iter().zip(scale).map(|(a, s)| a * s).collect()
            }
            Factorization::Woodbury(w) => {
                let mut z = rhs.to_vec();
                w.apply_dinv(&mut z);
                let p = w.terms.len();
                let mut small = DVector::zeros(p);
                for (j, term) in w.terms.iter().enumerate() {
                    let idx = &sub.constraints[term.constraint].idx;
                    small[j] = idx.iter().zip(&term.u).map(|(&i, u)| u * z[i]).sum();
                }
                let y = match &w.capacitance {
                    CapacitanceSolver::Chol(c) => c.solve(&small),
                    CapacitanceSolver::Lu(lu) => lu.solve(&small).unwrap_or(small),
                };
                for (j, du) in w.dinv_u.iter().enumerate() {
                    let yj = y[j];
                    if yj != 0.0 {
                        for i in 0..w.n {
                            z[i] -= yj * du[i];
                        }
                    }
                }
                z
            }
        }
    }
}

/// Gradient of the barrier (without the objective) plus the factorized Hessian.
fn newton_system(sub: &ConvexSubproblem, x: &[f64], shift: f64) -> Result<(Vec<f64>, Factorization)> {
    let n = sub.n;
    let mut grad = vec![0.0; n];
    let mut block_hess = Vec::with_capacity(sub.blocks.len());
    for b in &sub.blocks {
        let xm = block_matrix(&x[b.range()], b.dim, shift);
        let y = hpd_inverse(&xm).ok_or_else(|| Error::Numerical("block left the PSD interior".into()))?;
        let mut g = vec![0.0; b.len()];
        trace_coef(&y, &mut g);
        for (k, v) in g.iter().enumerate() {
            grad[b.offset + k] -= v;
        }
        block_hess.push(logdet_hessian(&y));
    }
    let mut scalar_diag = Vec::with_capacity(sub.scalars.len());
    for s in &sub.scalars {
        let d = x[s.offset] - s.lower;
        grad[s.offset] -= 1.0 / d;
        scalar_diag.push((s.offset, 1.0 / (d * d)));
    }
    let mut terms = Vec::with_capacity(2 * sub.constraints.len());
    for (ci, c) in sub.constraints.iter().enumerate() {
        let f = c.value(x);
        if !(f < 0.0) {
            return Err(Error::Numerical("constraint left the interior".into()));
        }
        let neg = -f;
        let u_arg = c.log_arg(x);
        let df: Vec<f64> = match &c.log_coef {
            Some(lc) => c.lin.iter().zip(lc).map(|(a, l)| a - l / (u_arg * LN2)).collect(),
            None => c.lin.clone(),
        };
        for (&i, v) in c.idx.iter().zip(&df) {
            grad[i] += v / neg;
        }
        terms.push(RankOne { constraint: ci, u: df.iter().map(|v| v / neg).collect() });
        if let Some(lc) = &c.log_coef {
            let w = (1.0 / (neg * u_arg * u_arg * LN2)).sqrt();
            if lc.iter().any(|v| *v != 0.0) {
                terms.push(RankOne { constraint: ci, u: lc.iter().map(|v| v * w).collect() });
            }
        }
    }

    let nnz2: f64 = terms.iter().map(|t| (t.u.len() as f64).powi(2)).sum();
    let dense_cost = (n as f64).powi(3) / 3.0 + nnz2.min(terms.len() as f64 * (n * n) as f64);
    let p = terms.len() as f64;
    let block_cost: f64 = sub.blocks.iter().map(|b| (b.len() as f64).powi(3) / 3.0).sum::<f64>();
    let block_solve: f64 = sub.blocks.iter().map(|b| 2.0 * (b.len() as f64).powi(2)).sum::<f64>();
    let avg_nnz = if terms.is_empty() { 0.0 } else { terms.iter().map(|t| t.u.len() as f64).sum::<f64>() / p };
    let wood_cost = block_cost + p * (block_solve + n as f64) + p * p * avg_nnz + p.powi(3) / 3.0;

    if dense_cost <= wood_cost || n < 64 {
        let mut h = DMatrix::zeros(n, n);
        for (b, hb) in sub.blocks.iter().zip(&block_hess) {
            let o = b.offset;
            let l = b.len();
            h.view_mut((o, o), (l, l)).copy_from(hb);
        }
        for &(i, d) in &scalar_diag {
            h[(i, i)] += d;
        }
        let mut u = DMatrix::zeros(terms.len(), n);
        for (r, t) in terms.iter().enumerate() {
            for (&i, v) in sub.constraints[t.constraint].idx.iter().zip(&t.u) {
                u[(r, i)] += v;
            }
        }
        h += u.transpose() * &u;
        let scale: Vec<f64> = (0..n).map(|i| if h[(i, i)] > 0.0 { 1.0 / h[(i, i)].sqrt() } else { 1.0 }).collect();
        for j in 0..n {
            for i in 0..n {
                h[(i, j)] *= scale[i] * scale[j];
            }
        }
        return Ok((grad, Factorization::Dense(cholesky_with_ridge(h)?, scale)));
    }

    let mut blocks = Vec::with_capacity(sub.blocks.len());
    for (b, hb) in sub.blocks.iter().zip(block_hess) {
        blocks.push((b.offset, b.len(), cholesky_with_ridge(hb)?));
    }
    let mut wf = WoodburyFactor {
        n,
        blocks,
        scalar_diag,
        terms,
        dinv_u: Vec::new(),
        capacitance: CapacitanceSolver::Chol(Cholesky::new(DMatrix::identity(1, 1)).expect("identity")),
    };
    let mut dinv_u = Vec::with_capacity(wf.terms.len());
    for t in &wf.terms {
        let mut v = vec![0.0; n];
        for (&i, u) in sub.constraints[t.constraint].idx.iter().zip(&t.u) {
            v[i] = *u;
        }
        wf.apply_dinv(&mut v);
        dinv_u.push(v);
    }
    let pn = wf.terms.len();
    let mut cap = DMatrix::identity(pn, pn);
    for (i, t) in wf.terms.iter().enumerate() {
        let idx = &sub.constraints[t.constraint].idx;
        for (j, du) in dinv_u.iter().enumerate().skip(i) {
            let v: f64 = idx.iter().zip(&t.u).map(|(&k, u)| u * du[k]).sum();
            cap[(i, j)] += v;
            if i != j {
                cap[(j, i)] += v;
            }
        }
    }
    wf.dinv_u = dinv_u;
    wf.capacitance = match Cholesky::new(cap.clone()) {
        Some(c) => CapacitanceSolver::Chol(c),
        None => CapacitanceSolver::Lu(cap.lu()),
    };
    Ok((grad, Factorization::Woodbury(Box::new(wf))))
}

fn cholesky_with_ridge(h: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(h.clone()) {
        return Ok(c);
    }
    let scale = (0..h.nrows()).map(|i| h[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    let mut ridge = 1e-14 * scale;
    for _ in 0..12 {
        let mut hr = h.clone();
        for i in 0..hr.nrows() {
            hr[(i, i)] += ridge;
        }
        if let Some(c) = Cholesky::new(hr) {
            return Ok(c);
        }
        ridge *= 100.0;
    }
    Err(Error::Numerical("Newton system is not positive definite".into()))
}

struct BarrierRun {
    x: Vec<f64>,
    gap: f64,
    steps: usize,
}

/// Initial `t` minimizing `‖t·c + ∇φ‖` in the Hessian's inverse norm.
fn initial_t(sub: &ConvexSubproblem, x: &[f64], shift: f64, c: &[f64]) -> f64 {
    let Ok((g, fact)) = newton_system(sub, x, shift) else {
        return 1.0;
    };
    let hc = fact.solve(sub, c);
    let num: f64 = -g.iter().zip(&hc).map(|(a, b)| a * b).sum::<f64>();
    let den: f64 = c.iter().zip(&hc).map(|(a, b)| a * b).sum();
    let t = num / den;
    if t.is_finite() && t > 0.0 {
        t.clamp(1e-3, 1e6)
    } else {
        1.0
    }
}

/// Barrier path-following from a strictly feasible `x`. When `early_exit`
/// is `(i, v)`, returns as soon as `x[i] < v`.
fn barrier_method(sub: &ConvexSubproblem, mut x: Vec<f64>, settings: &SolverSettings, early_exit: Option<(usize, f64)>) -> Result<BarrierRun> {
    let shift = settings.psd_shift;
    let sign = objective_sign(sub);
    let c: Vec<f64> = sub.objective.iter().map(|v| sign * v).collect();
    let m = sub.barrier_parameter().max(1.0);
    let mut t = initial_t(sub, &x, shift, &c);
    let mut steps = 0usize;
    let mut last_good_gap = f64::INFINITY;
    loop {
        let mut inner = 0usize;
        let centered;
        loop {
            if let Some(d) = settings.deadline {
                if Instant::now() > d {
                    return Err(Error::Timeout);
                }
            }
            let (g_bar, fact) = newton_system(sub, &x, shift)?;
            let g: Vec<f64> = g_bar.iter().zip(&c).map(|(a, b)| a + t * b).collect();
            let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
            let dx = fact.solve(sub, &neg_g);
            let lambda2: f64 = -g.iter().zip(&dx).map(|(a, b)| a * b).sum::<f64>();
            if !lambda2.is_finite() || lambda2 / 2.0 <= settings.newton_tolerance {
                centered = lambda2.is_finite();
                break;
            }
            let psi = barrier_value(sub, &x, t, shift).ok_or_else(|| Error::Numerical("iterate left the domain".into()))?;
            let mut alpha: f64 = 1.0;
            for s in &sub.scalars {
                let d = dx[s.offset];
                if d < 0.0 {
                    alpha = alpha.min(0.99 * (x[s.offset] - s.lower) / -d);
                }
            }
            let mut accepted = false;
            let mut trial = vec![0.0; x.len()];
            for _ in 0..80 {
                for i in 0..x.len() {
                    trial[i] = x[i] + alpha * dx[i];
                }
                if let Some(v) = barrier_value(sub, &trial, t, shift) {
                    if v <= psi - settings.armijo * alpha * lambda2 {
                        accepted = true;
                        break;
                    }
                }
                alpha *= settings.backtrack;
            }
            if !accepted {
                // no descent available at working precision: treat as centered
                centered = true;
                break;
            }
            let psi_new = barrier_value(sub, &trial, t, shift).unwrap_or(psi);
            std::mem::swap(&mut x, &mut trial);
            steps += 1;
            inner += 1;
            if let Some((i, v)) = early_exit {
                if x[i] < v {
                    return Ok(BarrierRun { x, gap: m / t, steps });
                }
            }
            if psi - psi_new <= 1e-14 * psi.abs().max(1.0) {
                // progress below working precision
                centered = true;
                break;
            }
            if inner >= settings.max_newton {
                centered = lambda2 < 1e-4;
                break;
            }
        }
        if !centered {
            if last_good_gap < 1e3 * settings.tolerance {
                log::debug!("centering stalled at t = {t:e}; keeping gap bound {last_good_gap:e}");
                return Ok(BarrierRun { x, gap: last_good_gap, steps });
            }
            return Err(Error::Numerical(format!("centering did not converge at t = {t:e}")));
        }
        let gap = m / t;
        last_good_gap = gap;
        if let Some((i, v)) = early_exit {
            if x[i] < v || (gap < settings.tolerance && x[i] < 0.0) {
                return Ok(BarrierRun { x, gap, steps });
            }
        }
        if gap < settings.tolerance {
            return Ok(BarrierRun { x, gap, steps });
        }
        t *= settings.mu;
    }
}

/// Finds a strictly feasible point by minimizing the common slack `s` in
/// `f_i(x) ≤ s`.
fn phase_one(sub: &ConvexSubproblem, x0: &[f64], settings: &SolverSettings) -> Result<(Vec<f64>, usize)> {
    let (x, s, steps) = phase_one_run(sub, x0, settings)?;
    if s >= 0.0 {
        return Err(Error::Infeasible(format!("phase I stopped at slack {s:e}")));
    }
    Ok((x, steps))
}

/// Minimizes the largest constraint value from `x0`, stopping early once it
/// is clearly negative. Returns the point and the attained common slack.
pub fn minimize_violation(sub: &ConvexSubproblem, x0: &[f64], settings: &SolverSettings) -> Result<(Vec<f64>, f64)> {
    let (x, s, _) = phase_one_run(sub, x0, settings)?;
    Ok((x, s))
}

fn phase_one_run(sub: &ConvexSubproblem, x0: &[f64], settings: &SolverSettings) -> Result<(Vec<f64>, f64, usize)> {
    let mut aug = sub.clone();
    aug.sense = Sense::Minimize;
    for v in aug.objective.iter_mut() {
        *v = 0.0;
    }
    let s_idx = aug.add_scalar(ScalarRole::Infeasibility, -1.0);
    aug.objective[s_idx] = 1.0;
    for c in aug.constraints.iter_mut() {
        c.idx.push(s_idx);
        c.lin.push(-1.0);
        if let Some(lc) = c.log_coef.as_mut() {
            lc.push(0.0);
        }
    }
    let mut x = x0.to_vec();
    let shift = settings.psd_shift;
    for b in &sub.blocks {
        if block_logdet(&x[b.range()], b.dim, shift).is_none() {
            let q = crate::linalg::project_psd(&vec_to_herm(&x[b.range()], b.dim));
            let mut v = vec![0.0; b.len()];
            crate::linalg::herm_to_vec(&q, &mut v);
            let scale = q.diagonal().iter().map(|z| z.re).fold(0.0, f64::max).max(1.0);
            for i in 0..b.dim {
                v[i] += 1e-3 * scale;
            }
            x[b.range()].copy_from_slice(&v);
        }
    }
    for s in &sub.scalars {
        if !(x[s.offset] > s.lower) {
            x[s.offset] = s.lower + 1e-3;
        }
    }
    let worst = sub.max_violation(&x);
    if !worst.is_finite() {
        return Err(Error::Numerical("phase-I start outside the log domain".into()));
    }
    x.push(worst.max(0.0) + 1.0);
    let run = barrier_method(&aug, x, settings, Some((s_idx, -1e-3)))?;
    let s = run.x[s_idx];
    let mut x = run.x;
    x.truncate(sub.n);
    Ok((x, s, run.steps))
}

/// Count of general constraints by kind, used by census checks.
pub fn constraint_kinds(sub: &ConvexSubproblem) -> (usize, usize, usize) {
    let mut out = (0, 0, 0);
    for c in &sub.constraints {
        match c.kind {
            ConstraintKind::LinearInequality => out.0 += 1,
            ConstraintKind::LogAffineInequality => out.1 += 1,
            ConstraintKind::TraceBudget => out.2 += 1,
        }
    }
    out
}

/// Adds `Σ_b tr(X_b) ≤ budget` over all blocks.
pub fn add_trace_budget(sub: &mut ConvexSubproblem, budget: f64, tag: ConstraintTag) {
    let mut b = super::problem::ConstraintBuilder::new();
    for blk in &sub.blocks {
        for i in 0..blk.dim {
            b.lin(blk.offset + i, 1.0);
        }
    }
    b.constant(-budget);
    let c = b.build(ConstraintKind::TraceBudget, tag);
    sub.constraints.push(c);
}
