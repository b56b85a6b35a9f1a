//! Conjugate gradient preconditioned by one V-cycle per iteration.

use super::level::Work;
use super::multigrid::Hierarchy;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    NotConverged,
    Diverged,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOutcome {
    /// Compact unknown vector.
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final ‖r‖₂ / ‖b‖₂.
    pub residual: f64,
    pub status: SolveStatus,
    /// Relative residual after each iteration, starting with the initial guess.
    pub history: Vec<f64>,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Fixed-order blocked summation keeps results bitwise reproducible.
    let mut total = 0.0;
    for (ca, cb) in a.chunks(4096).zip(b.chunks(4096)) {
        let mut s = 0.0;
        for (x, y) in ca.iter().zip(cb) {
            s += x * y;
        }
        total += s;
    }
    total
}

/// Operates on stacked face vectors that are zero on Dirichlet faces.
pub(crate) fn pcg(
    h: &mut Hierarchy,
    work: &mut Work,
    b: &[f64],
    mut x: Vec<f64>,
    tol: f64,
    max_iters: usize,
) -> SolveOutcome {
    let n = b.len();
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return SolveOutcome { x: vec![0.0; n], iterations: 0, residual: 0.0, status: SolveStatus::Converged, history: vec![0.0] };
    }
    let mut r = vec![0.0; n];
    h.fine().apply(&x, &mut r, work);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut res = dot(&r, &r).sqrt() / b_norm;
    let mut history = vec![res];
    if !res.is_finite() {
        return SolveOutcome { x, iterations: 0, residual: res, status: SolveStatus::Diverged, history };
    }
    if res <= tol {
        return SolveOutcome { x, iterations: 0, residual: res, status: SolveStatus::Converged, history };
    }
    let mut z = vec![0.0; n];
    h.precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_iters {
        h.fine().apply(&p, &mut ap, work);
        let pap = dot(&p, &ap);
        if !(pap.is_finite() && rz.is_finite()) || pap <= 0.0 {
            return SolveOutcome { x, iterations: it, residual: res, status: SolveStatus::Diverged, history };
        }
        let alpha = rz / pap;
        for ((xi, ri), (pi, api)) in x.iter_mut().zip(r.iter_mut()).zip(p.iter().zip(&ap)) {
            *xi += alpha * pi;
            *ri -= alpha * api;
        }
        res = dot(&r, &r).sqrt() / b_norm;
        history.push(res);
        if !res.is_finite() {
            return SolveOutcome { x, iterations: it, residual: res, status: SolveStatus::Diverged, history };
        }
        if res <= tol {
            return SolveOutcome { x, iterations: it, residual: res, status: SolveStatus::Converged, history };
        }
        h.precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    SolveOutcome { x, iterations: max_iters, residual: res, status: SolveStatus::NotConverged, history }
}
