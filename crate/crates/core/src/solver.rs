//! First-order solver for the Gram programs: ADMM alternating between the
//! affine constraint set and the cone `PSD × {ε ≤ cap}`.
//!
//! Variables are `x = (svec Q, ε)` with off-diagonal entries scaled by √2 so
//! that the Euclidean norm of `svec Q` is the Frobenius norm of `Q`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{parse_err, Error, Result};
use crate::rat;
use crate::sos::SosProblem;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Primal/dual residual tolerance.
    pub tolerance: f64,
    /// Initial penalty; adapted by residual balancing.
    pub rho: f64,
    /// Over-relaxation parameter in `[1, 2)`.
    pub alpha: f64,
    /// Recorded for reproducibility; the iteration itself is deterministic.
    pub seed: u64,
    /// Largest Gram size accepted.
    pub max_gram_size: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: 50_000,
            tolerance: 1e-9,
            rho: 1.0,
            alpha: 1.6,
            seed: 0,
            max_gram_size: 4_000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) || !(self.rho > 0.0) || !(1.0..2.0).contains(&self.alpha) {
            return Err(Error::ShapeMismatch(format!(
                "invalid solver configuration: tolerance {}, rho {}, alpha {}",
                self.tolerance, self.rho, self.alpha
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIter,
    Diverged,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    /// ∞-norm of `A(Q) - c₀ - ε c₁`.
    pub primal: f64,
    /// Last ADMM dual residual (0 for imported solutions without one).
    pub dual: f64,
    /// `max(0, -λ_min(Q))`.
    pub psd_violation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramSolution {
    pub q: DMatrix<f64>,
    pub epsilon: f64,
    pub residuals: Residuals,
    pub iterations: usize,
    pub status: SolveStatus,
}

/// Dense affine data `M x = c₀` with `M = [A | -c₁]` in svec coordinates.
struct Affine {
    m: DMatrix<f64>,
    c0: DVector<f64>,
    /// Pseudo-inverse of `M Mᵀ`.
    gram_pinv: DMatrix<f64>,
}

fn svec_index(p: usize, q: usize) -> usize {
    // column-major upper triangle: (p, q) with p ≤ q
    q * (q + 1) / 2 + p
}

fn svec_len(n: usize) -> usize {
    n * (n + 1) / 2
}

fn smat(v: &[f64], n: usize) -> DMatrix<f64> {
    let mut q = DMatrix::zeros(n, n);
    for col in 0..n {
        for row in 0..=col {
            let x = v[svec_index(row, col)];
            if row == col {
                q[(row, col)] = x;
            } else {
                q[(row, col)] = x / std::f64::consts::SQRT_2;
                q[(col, row)] = q[(row, col)];
            }
        }
    }
    q
}

fn svec_into(q: &DMatrix<f64>, out: &mut [f64]) {
    let n = q.nrows();
    for col in 0..n {
        for row in 0..=col {
            let x = if row == col {
                q[(row, col)]
            } else {
                (q[(row, col)] + q[(col, row)]) / std::f64::consts::SQRT_2
            };
            out[svec_index(row, col)] = x;
        }
    }
}

fn pinv_sym(a: DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    if n == 0 {
        return a;
    }
    let eig = SymmetricEigen::new(a);
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let cut = top * 1e-12 * n as f64;
    let inv = eig
        .eigenvalues
        .map(|x| if x.abs() > cut { 1.0 / x } else { 0.0 });
    &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose()
}

impl Affine {
    fn new(p: &SosProblem) -> Self {
        let n = p.gram_size();
        let nv = svec_len(n) + 1;
        let rows = p.constraints.len();
        let mut m = DMatrix::zeros(rows, nv);
        let mut c0 = DVector::zeros(rows);
        for (i, c) in p.constraints.iter().enumerate() {
            for (a, b, coef) in &c.terms {
                let scale = if a == b { 1.0 } else { 1.0 / std::f64::consts::SQRT_2 };
                m[(i, svec_index(*a, *b))] += rat::to_f64(coef) * scale;
            }
            m[(i, nv - 1)] = -rat::to_f64(&c.c1);
            c0[i] = rat::to_f64(&c.c0);
        }
        let gram_pinv = pinv_sym(&m * m.transpose());
        Affine { m, c0, gram_pinv }
    }

    fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        if self.m.nrows() == 0 {
            return v.clone();
        }
        let r = &self.m * v - &self.c0;
        v - self.m.transpose() * (&self.gram_pinv * r)
    }
}

/// Projects `(svec Q, ε)` onto `PSD × (-∞, cap]`.
fn project_cone(v: &mut DVector<f64>, n: usize, cap: f64) {
    let last = v.len() - 1;
    v[last] = v[last].min(cap);
    if n == 0 {
        return;
    }
    let q = smat(&v.as_slice()[..last], n);
    let eig = SymmetricEigen::new(q);
    let clamped = eig.eigenvalues.map(|x| x.max(0.0));
    let q = &eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose();
    svec_into(&q, &mut v.as_mut_slice()[..last]);
}

fn min_eigenvalue(q: &DMatrix<f64>) -> f64 {
    if q.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(q.clone())
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |m, &x| m.min(x))
}

/// Recomputes `‖A(Q) - c₀ - ε c₁‖∞` directly from the constraint table.
pub fn constraint_residual(p: &SosProblem, q: &DMatrix<f64>, eps: f64) -> f64 {
    p.constraints
        .iter()
        .map(|c| {
            let lhs: f64 = c.terms.iter().map(|(a, b, coef)| rat::to_f64(coef) * q[(*a, *b)]).sum();
            (lhs - rat::to_f64(&c.c0) - eps * rat::to_f64(&c.c1)).abs()
        })
        .fold(0.0, f64::max)
}

fn finish(p: &SosProblem, q: DMatrix<f64>, epsilon: f64, dual: f64, iterations: usize, status: SolveStatus) -> GramSolution {
    let residuals = Residuals {
        primal: constraint_residual(p, &q, epsilon),
        dual,
        psd_violation: (-min_eigenvalue(&q)).max(0.0),
    };
    GramSolution {
        q,
        epsilon,
        residuals,
        iterations,
        status,
    }
}

/// Maximises ε subject to the Gram constraints and `Q ⪰ 0`.
pub fn solve(p: &SosProblem, cfg: &SolverConfig) -> GramSolution {
    let n = p.gram_size();
    let cap = rat::to_f64(&p.eps_cap);
    if p.degenerate {
        return finish(p, DMatrix::zeros(n, n), cap, 0.0, 0, SolveStatus::Degenerate);
    }
    if n > cfg.max_gram_size {
        return finish(p, DMatrix::zeros(n, n), 0.0, 0.0, 0, SolveStatus::Diverged);
    }
    let affine = Affine::new(p);
    let nv = svec_len(n) + 1;
    let eps_i = nv - 1;
    let scale = affine.c0.amax().max(1.0);
    let mut rho = cfg.rho;
    let mut z = DVector::<f64>::zeros(nv);
    let mut u = DVector::<f64>::zeros(nv);
    let mut dual = f64::INFINITY;
    for it in 1..=cfg.max_iterations {
        // x-update: minimise -ε + ρ/2 |x - z + u|² over the affine set
        let mut v = &z - &u;
        v[eps_i] += 1.0 / rho;
        let x = affine.project(&v);
        let xh = &x * cfg.alpha + &z * (1.0 - cfg.alpha);
        let z_old = z.clone();
        let mut w = &xh + &u;
        project_cone(&mut w, n, cap);
        z = w;
        u += &xh - &z;

        let primal = (&x - &z).amax();
        dual = rho * (&z - &z_old).amax();
        if !primal.is_finite() || !dual.is_finite() || z.amax() > 1e12 * scale {
            return finish(p, DMatrix::zeros(n, n), 0.0, dual, it, SolveStatus::Diverged);
        }
        if primal <= cfg.tolerance && dual <= cfg.tolerance * scale {
            let q = smat(&z.as_slice()[..eps_i], n);
            if constraint_residual(p, &q, z[eps_i]) <= cfg.tolerance {
                return finish(p, q, z[eps_i], dual, it, SolveStatus::Converged);
            }
        }
        if it % 10 == 0 {
            if primal > 10.0 * dual {
                rho *= 2.0;
                u /= 2.0;
            } else if dual > 10.0 * primal {
                rho /= 2.0;
                u *= 2.0;
            }
        }
    }
    let q = smat(&z.as_slice()[..eps_i], n);
    finish(p, q, z[eps_i], dual, cfg.max_iterations, SolveStatus::MaxIter)
}

/// Plain-text solution: `epsilon <float>` then the lower triangle of `Q`
/// row by row, one entry per line.
pub fn export_solution(s: &GramSolution) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "epsilon {:e}", s.epsilon);
    let _ = writeln!(out, "# iterations {} dual {:e}", s.iterations, s.residuals.dual);
    for i in 0..s.q.nrows() {
        for j in 0..=i {
            let _ = writeln!(out, "{:e}", s.q[(i, j)]);
        }
    }
    out
}

/// Reads a solution for `p`, recomputing residuals and status with tolerance `tol`.
pub fn import_solution(p: &SosProblem, text: &str, tol: f64) -> Result<GramSolution> {
    let n = p.gram_size();
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (ln, first) = lines.next().ok_or_else(|| parse_err(1, "empty solution file"))?;
    let epsilon: f64 = first
        .strip_prefix("epsilon")
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| parse_err(ln, "expected `epsilon <float>`"))?;
    let mut iterations = 0;
    let mut dual = 0.0;
    let mut values = Vec::with_capacity(svec_len(n));
    for (ln, l) in lines {
        if let Some(rest) = l.strip_prefix('#') {
            let f: Vec<&str> = rest.split_whitespace().collect();
            if let ["iterations", it, "dual", d] = f[..] {
                iterations = it.parse().map_err(|_| parse_err(ln, "bad iteration count"))?;
                dual = d.parse().map_err(|_| parse_err(ln, "bad dual residual"))?;
            }
            continue;
        }
        values.push(l.parse::<f64>().map_err(|_| parse_err(ln, format!("bad entry `{l}`")))?);
    }
    if values.len() != svec_len(n) {
        if values.len() < svec_len(n) {
            return Err(parse_err(
                0,
                format!("truncated solution: {} of {} entries", values.len(), svec_len(n)),
            ));
        }
        return Err(Error::DimensionMismatch(format!(
            "solution has {} entries, problem needs {}",
            values.len(),
            svec_len(n)
        )));
    }
    let mut q = DMatrix::zeros(n, n);
    let mut it = values.into_iter();
    for i in 0..n {
        for j in 0..=i {
            let v = it.next().unwrap_or(0.0);
            q[(i, j)] = v;
            q[(j, i)] = v;
        }
    }
    let mut s = finish(p, q, epsilon, dual, iterations, SolveStatus::Converged);
    let finite = s.epsilon.is_finite() && s.q.iter().all(|x| x.is_finite());
    s.status = if !finite || s.residuals.psd_violation > tol {
        SolveStatus::Diverged
    } else if s.residuals.primal > tol {
        SolveStatus::MaxIter
    } else {
        SolveStatus::Converged
    };
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::int;
    use crate::sos::{BasisKind, Constraint, SosMode, SupportBasis};

    fn scalar_problem(c: i64) -> SosProblem {
        SosProblem {
            mode: SosMode::BracketTn(1),
            fingerprint: String::new(),
            basis: SupportBasis {
                kind: BasisKind::Group,
                half_radius: 0,
                module_rank: 1,
                entries: vec![(0, 0)],
            },
            constraints: vec![Constraint {
                block: (0, 0),
                element: 0,
                terms: vec![(0, 0, int(1))],
                c0: int(c),
                c1: int(-1),
            }],
            eps_cap: int(100),
            degenerate: false,
        }
    }

    #[test]
    fn scalar_closed_form() {
        let s = solve(&scalar_problem(3), &SolverConfig::default());
        assert_eq!(s.status, SolveStatus::Converged);
        assert!((s.epsilon - 3.0).abs() < 1e-9, "{}", s.epsilon);
        assert!(s.residuals.primal <= 1e-9);
    }

    #[test]
    fn svec_roundtrip() {
        let q = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 5.0, 6.0, 3.0, 6.0, 9.0]);
        let mut v = vec![0.0; 6];
        svec_into(&q, &mut v);
        assert!((smat(&v, 3) - &q).amax() < 1e-12);
        let frob: f64 = q.iter().map(|x| x * x).sum();
        let norm: f64 = v.iter().map(|x| x * x).sum();
        assert!((frob - norm).abs() < 1e-9);
    }

    #[test]
    fn solution_text_roundtrip() {
        let p = scalar_problem(3);
        let s = solve(&p, &SolverConfig::default());
        let back = import_solution(&p, &export_solution(&s), 1e-8).unwrap();
        assert_eq!(back.residuals, s.residuals);
        assert_eq!(back.q, s.q);
        assert!(import_solution(&p, "epsilon 1\n", 1e-8).is_err());
        let neg = import_solution(&p, "epsilon 4.001\n-1e-3\n", 1e-8).unwrap();
        assert_eq!(neg.status, SolveStatus::Diverged);
        assert!((neg.residuals.psd_violation - 1e-3).abs() < 1e-15);
    }

    fn encoded(src: &str, radius: crate::ball::Radius, mode: SosMode, d: Option<usize>) -> SosProblem {
        use crate::ball::Ball;
        use crate::resolution::{build_presentation_complex, cyclic_resolution};
        use std::sync::Arc;
        let p = Arc::new(crate::group::parse_presentation(src).unwrap());
        let b = Ball::enumerate(p.clone(), radius, 10_000).unwrap();
        let c = match p.backend {
            crate::group::Backend::Cyclic(n) => cyclic_resolution(n, 3, &b).unwrap(),
            _ => build_presentation_complex(p, &b).unwrap(),
        };
        let opts = crate::sos::EncodeOptions {
            half_radius: d,
            ..Default::default()
        };
        crate::sos::encode(&c, mode, &opts).unwrap()
    }

    #[test]
    fn cyclic_three_optima() {
        use crate::ball::Radius;
        for mode in [SosMode::OzawaT, SosMode::BracketTn(1), SosMode::BracketTn(2), SosMode::ParenTn(1)] {
            let p = encoded("gens t; backend cyclic 3", Radius::Full, mode, None);
            let s = solve(&p, &SolverConfig::default());
            assert_eq!(s.status, SolveStatus::Converged, "{mode:?}");
            assert!((s.epsilon - 3.0).abs() < 1e-6, "{mode:?}: {}", s.epsilon);
        }
    }

    #[test]
    fn integers_have_no_gap() {
        use crate::ball::Radius;
        for d in 1..=3 {
            let p = encoded("gens t; backend free", Radius::Finite(1), SosMode::OzawaT, Some(d));
            let s = solve(&p, &SolverConfig::default());
            assert!(s.epsilon <= 1e-6, "d = {d}: {} after {} ({:?})", s.epsilon, s.iterations, s.status);
        }
    }
}
