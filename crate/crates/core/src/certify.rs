//! Exact certificates: rounding a numeric Gram solution to rationals, repairing
//! it so the identity holds exactly, checking positivity by exact LDLᵀ, and
//! re-verifying certificate files independently of the encoder and solver.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_traits::{Signed, Zero};

use crate::ball::Ball;
use crate::error::{parse_err, Error, Result};
use crate::linalg::{ldl_psd, LdlOutcome};
use crate::rat::{self, Rat};
use crate::resolution::ChainComplexData;
use crate::ring::{GroupRingElement, GroupRingMatrix};
use crate::solver::{solve, SolveStatus, SolverConfig};
use crate::sos::{
    build_support_basis, order_unit, problem_ball, target_pair, Constraint, SosMode, SosProblem, SupportBasis,
    CONVENTION,
};

#[derive(Debug, Clone, PartialEq)]
pub struct CertifierConfig {
    /// Gram entries are rounded to multiples of `2^-bits`.
    pub bits: u32,
    pub max_retries: usize,
    /// Overrides the retreat `μ = 10·residual + 1e-7` of the first retry.
    pub margin: Option<f64>,
    /// Re-solve for an interior Gram matrix at fixed ε when the shifted solution fails.
    pub centering: bool,
    /// Solver settings for the centering re-solve.
    pub solver: SolverConfig,
}

impl Default for CertifierConfig {
    fn default() -> Self {
        CertifierConfig {
            bits: 48,
            max_retries: 8,
            margin: None,
            centering: true,
            solver: SolverConfig {
                max_iterations: 20_000,
                ..SolverConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub mode: SosMode,
    pub epsilon: Rat,
    /// Symmetric rational Gram matrix.
    pub gram: Vec<Vec<Rat>>,
    pub basis: SupportBasis,
    pub fingerprint: String,
    pub convention: String,
}

impl Certificate {
    pub fn degree(&self) -> usize {
        self.mode.degree()
    }

    pub fn gram_size(&self) -> usize {
        self.gram.len()
    }
}

/// Exact solution of the underdetermined system `A δ = r`, pivoting per row on
/// the lexicographically first variable of maximal absolute coefficient.
fn repair(constraints: &[Constraint], rhs: Vec<Rat>) -> Result<BTreeMap<(usize, usize), Rat>> {
    type Row = BTreeMap<(usize, usize), Rat>;
    let mut pivots: Vec<((usize, usize), Row, Rat)> = Vec::new();
    for (c, b) in constraints.iter().zip(rhs) {
        let mut row: Row = c.terms.iter().map(|(p, q, a)| ((*p, *q), a.clone())).collect();
        let mut b = b;
        for (col, prow, pb) in &pivots {
            let Some(f) = row.get(col).cloned() else {
                continue;
            };
            for (k, v) in prow {
                let e = row.entry(*k).or_insert_with(Rat::zero);
                *e -= &f * v;
                if e.is_zero() {
                    row.remove(k);
                }
            }
            b -= &f * pb;
        }
        if row.is_empty() {
            if !b.is_zero() {
                return Err(Error::RepairSingular(format!(
                    "constraint at block {:?}, element {} is a combination of earlier ones with a different right-hand side",
                    c.block, c.element
                )));
            }
            continue;
        }
        let (col, coef) = row
            .iter()
            .fold(None::<(&(usize, usize), &Rat)>, |best, (k, v)| match best {
                Some((_, bv)) if bv.abs() >= v.abs() => best,
                _ => Some((k, v)),
            })
            .map(|(k, v)| (*k, v.clone()))
            .expect("row is nonempty");
        for v in row.values_mut() {
            *v /= &coef;
        }
        pivots.push((col, row, b / coef));
    }
    let mut delta: BTreeMap<(usize, usize), Rat> = BTreeMap::new();
    for (col, row, b) in pivots.iter().rev() {
        let mut v = b.clone();
        for (k, a) in row {
            if k != col {
                if let Some(d) = delta.get(k) {
                    v -= a * d;
                }
            }
        }
        if !v.is_zero() {
            delta.insert(*col, v);
        }
    }
    Ok(delta)
}

fn round_gram(q: &DMatrix<f64>, bits: u32) -> Vec<Vec<Rat>> {
    let n = q.nrows();
    let mut out = vec![vec![Rat::zero(); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let v = rat::round_dyadic((q[(i, j)] + q[(j, i)]) / 2.0, bits);
            out[i][j] = v.clone();
            out[j][i] = v;
        }
    }
    out
}

/// Rounds, repairs and checks one candidate at `eps`; `Some` if it is an exact certificate.
fn try_candidate(p: &SosProblem, q: &DMatrix<f64>, eps: &Rat, bits: u32) -> Result<Option<Vec<Vec<Rat>>>> {
    if q.iter().any(|x| !x.is_finite()) {
        return Ok(None);
    }
    let mut gram = round_gram(q, bits);
    let rhs: Vec<Rat> = p.residuals(&gram, eps).into_iter().map(|r| -r).collect();
    let delta = repair(&p.constraints, rhs)?;
    for ((a, b), d) in delta {
        gram[a][b] += &d;
        if a != b {
            gram[b][a] = gram[a][b].clone();
        }
    }
    debug_assert!(p.residuals(&gram, eps).iter().all(Zero::is_zero));
    Ok(matches!(ldl_psd(&gram), LdlOutcome::Psd { .. }).then_some(gram))
}

/// Interior point of the feasible set at fixed ε: maximise τ with `Q - τI ⪰ 0`.
fn centered(p: &SosProblem, eps: &Rat, cfg: &SolverConfig) -> Option<DMatrix<f64>> {
    let n = p.gram_size();
    let constraints = p
        .constraints
        .iter()
        .map(|c| {
            let trace: Rat = c.terms.iter().filter(|t| t.0 == t.1).map(|t| t.2.clone()).sum();
            Constraint {
                c0: &c.c0 + eps * &c.c1,
                c1: -trace,
                ..c.clone()
            }
        })
        .collect();
    let shifted = SosProblem {
        constraints,
        degenerate: false,
        ..p.clone()
    };
    let s = solve(&shifted, cfg);
    if s.status == SolveStatus::Diverged || !(s.epsilon > 0.0) {
        return None;
    }
    Some(s.q + DMatrix::identity(n, n) * s.epsilon)
}

/// Turns a numeric solution into an exact certificate, retreating ε if needed.
pub fn round_and_repair(
    s: &crate::solver::GramSolution,
    p: &SosProblem,
    c: &ChainComplexData,
    cfg: &CertifierConfig,
) -> Result<Certificate> {
    let n = p.gram_size();
    let make = |epsilon: Rat, gram: Vec<Vec<Rat>>| Certificate {
        mode: p.mode,
        epsilon,
        gram,
        basis: p.basis.clone(),
        fingerprint: p.fingerprint.clone(),
        convention: CONVENTION.to_string(),
    };
    if p.degenerate {
        // the target does not depend on ε; Q = 0 works iff the target vanishes
        let zero = vec![vec![Rat::zero(); n]; n];
        if p.constraints.iter().all(|c| c.c0.is_zero()) {
            return Ok(make(rat::int(1), zero));
        }
        return Err(Error::RepairSingular("degenerate problem with nonzero target".into()));
    }
    if s.status != SolveStatus::Converged {
        return Err(Error::NotConverged(format!("solver status {:?}", s.status)));
    }
    let unit = order_unit(c, p)?;
    let unit_f = DMatrix::from_fn(n, n, |i, j| rat::to_f64(&unit[i][j]));
    let eps_num = s.epsilon;
    let residual = s.residuals.primal.max(s.residuals.psd_violation);
    let mu = cfg.margin.unwrap_or(10.0 * residual + 1e-7);
    let mut last = String::from("no attempt made");
    let mut eps_hat = Rat::zero();
    for attempt in 0..=cfg.max_retries {
        eps_hat = match attempt {
            0 => rat::floor_dyadic(&rat::from_f64_exact(eps_num), cfg.bits),
            1 => rat::floor_dyadic(&rat::from_f64_exact(eps_num - mu), cfg.bits),
            _ => &eps_hat / rat::int(2),
        };
        if !eps_hat.is_positive() {
            last = format!("retreat reached ε̂ = {} ≤ 0 at attempt {attempt}", rat::fmt(&eps_hat));
            break;
        }
        let shift = eps_num - rat::to_f64(&eps_hat);
        let shifted = &s.q + &unit_f * shift.max(0.0);
        if let Some(gram) = try_candidate(p, &shifted, &eps_hat, cfg.bits)? {
            return Ok(make(eps_hat, gram));
        }
        if cfg.centering {
            if let Some(q) = centered(p, &eps_hat, &cfg.solver) {
                if let Some(gram) = try_candidate(p, &q, &eps_hat, cfg.bits)? {
                    return Ok(make(eps_hat, gram));
                }
            }
        }
        last = format!("exact PSD check failed at ε̂ = {}", rat::fmt(&eps_hat));
    }
    Err(Error::PsdFailedAfterRetries {
        half_radius: p.half_radius(),
        detail: format!(
            "{last}; numeric ε = {eps_num:e}, residual {:e}, PSD violation {:e}",
            s.residuals.primal, s.residuals.psd_violation
        ),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub identity_ok: bool,
    pub psd_ok: bool,
    pub epsilon: Rat,
    pub first_failure: Option<String>,
    pub elapsed: Duration,
    /// The certified degree lies beyond the proven part of the complex.
    pub truncated: bool,
}

impl VerificationReport {
    pub fn accepted(&self) -> bool {
        self.identity_ok && self.psd_ok
    }

    /// 0 accepted, 2 identity failure, 3 positivity failure.
    pub fn exit_code(&self) -> i32 {
        if !self.identity_ok {
            2
        } else if !self.psd_ok {
            3
        } else {
            0
        }
    }
}

/// `Σ_{p,q} Q[p,q] w_p* w_q` as an `m x m` matrix over `ball`.
pub fn gram_expansion(basis: &SupportBasis, gram: &[Vec<Rat>], ball: &Arc<Ball>) -> Result<GroupRingMatrix> {
    let m = basis.module_rank;
    let mut out = GroupRingMatrix::zeros(ball, m, m);
    let ws: Vec<GroupRingElement> = (0..basis.len()).map(|p| basis.element(p, ball)).collect();
    for (p, row) in gram.iter().enumerate() {
        let wp_star = ws[p].star();
        for (q, x) in row.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            let (i, j) = (basis.entries[p].1, basis.entries[q].1);
            let term = wp_star.mul(&ws[q], ball)?.scale(x);
            let sum = out.get(i, j).add(&term)?;
            out.set(i, j, sum)?;
        }
    }
    Ok(out)
}

/// Re-derives the target from the complex and checks the certificate exactly.
pub fn verify_certificate(cert: &Certificate, c: &ChainComplexData) -> Result<VerificationReport> {
    let start = Instant::now();
    if cert.convention != CONVENTION {
        return Err(Error::ConventionMismatch {
            expected: cert.convention.clone(),
            found: CONVENTION.into(),
        });
    }
    let fp = c.fingerprint();
    if cert.fingerprint != fp {
        return Err(Error::FingerprintMismatch {
            expected: cert.fingerprint.clone(),
            found: fp,
        });
    }
    let k = cert.degree();
    let mut report = VerificationReport {
        identity_ok: false,
        psd_ok: false,
        epsilon: cert.epsilon.clone(),
        first_failure: None,
        elapsed: Duration::ZERO,
        truncated: !(c.has_full_laplacian(k) && c.is_exact_at(k)),
    };
    let finish = |mut r: VerificationReport| {
        r.elapsed = start.elapsed();
        Ok(r)
    };

    report.psd_ok = match ldl_psd(&cert.gram) {
        LdlOutcome::Psd { .. } => true,
        LdlOutcome::NotPsd { index, pivot } => {
            report.first_failure = Some(format!("pivot {index} is {}", rat::fmt(&pivot)));
            false
        }
    };
    let identity = check_identity(cert, c);
    match identity {
        Ok(None) => report.identity_ok = true,
        Ok(Some(w)) | Err(w) => report.first_failure = Some(w),
    }
    finish(report)
}

fn check_identity(cert: &Certificate, c: &ChainComplexData) -> std::result::Result<Option<String>, String> {
    let k = cert.degree();
    if !cert.epsilon.is_positive() {
        return Ok(Some(format!("ε = {} is not positive", rat::fmt(&cert.epsilon))));
    }
    if k > c.top_degree() {
        return Ok(Some(format!("degree {k} exceeds the complex's top degree {}", c.top_degree())));
    }
    let d = cert.basis.half_radius;
    let ball = problem_ball(c, d).map_err(|e| e.to_string())?;
    if d == 0 || (d > 1 && ball.prefix_len(d - 1) == ball.prefix_len(d)) {
        return Ok(Some(format!("half radius {d} is not canonical for this group")));
    }
    let m = match cert.mode {
        SosMode::OzawaT => 1,
        _ => c.rank(k),
    };
    let canonical = build_support_basis(&ball, d, cert.mode.basis_kind(), m);
    if cert.basis != canonical {
        return Ok(Some("support basis differs from the canonical basis".into()));
    }
    let n = canonical.len();
    if cert.gram.len() != n || cert.gram.iter().any(|r| r.len() != n) {
        return Ok(Some(format!("Gram matrix is not {n} x {n}")));
    }
    for i in 0..n {
        for j in 0..i {
            if cert.gram[i][j] != cert.gram[j][i] {
                return Ok(Some(format!("Gram matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    let (c0, c1, _) = target_pair(c, cert.mode).map_err(|e| e.to_string())?;
    let target = match c0
        .add(&c1.scale(&cert.epsilon))
        .and_then(|t| t.transfer(&ball))
    {
        Ok(t) => t,
        Err(e) => return Ok(Some(format!("target does not fit the radius-{} ball: {e}", 2 * d))),
    };
    let lhs = gram_expansion(&cert.basis, &cert.gram, &ball).map_err(|e| e.to_string())?;
    for i in 0..m {
        for j in 0..m {
            let diff = lhs.get(i, j).sub(target.get(i, j)).map_err(|e| e.to_string())?;
            let first = diff.terms().next().map(|(g, _)| g);
            if let Some(g) = first {
                return Ok(Some(format!(
                    "identity fails at block ({i}, {j}), element g[{g}] = {}: Gram form gives {}, target {}",
                    ball.element(g),
                    rat::fmt(&lhs.get(i, j).coeff(g)),
                    rat::fmt(&target.get(i, j).coeff(g))
                )));
            }
        }
    }
    Ok(None)
}

/// A summand `pivot · y* y` of the certificate, `y` a row vector over QΓ.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub pivot: Rat,
    pub row: Vec<GroupRingElement>,
}

/// Splits the Gram form into `Σ pivotᵢ yᵢ* yᵢ` using the exact LDLᵀ factorisation.
pub fn extract_factors(cert: &Certificate, ball: &Arc<Ball>) -> Result<Vec<Factor>> {
    let LdlOutcome::Psd { pivots, l } = ldl_psd(&cert.gram) else {
        return Err(Error::PsdFailedAfterRetries {
            half_radius: cert.basis.half_radius,
            detail: "Gram matrix is not positive semidefinite".into(),
        });
    };
    let basis = &cert.basis;
    let ws: Vec<GroupRingElement> = (0..basis.len()).map(|p| basis.element(p, ball)).collect();
    let mut factors = Vec::new();
    for (i, pivot) in pivots.into_iter().enumerate() {
        if !pivot.is_positive() {
            continue;
        }
        let mut row = vec![GroupRingElement::zero(ball); basis.module_rank];
        for p in i..basis.len() {
            let coef = &l[i][p];
            if coef.is_zero() {
                continue;
            }
            let j = basis.entries[p].1;
            row[j] = row[j].add(&ws[p].scale(coef))?;
        }
        factors.push(Factor { pivot, row });
    }
    Ok(factors)
}

/// `Σ pivotᵢ yᵢ* yᵢ` re-expanded over `ball`.
pub fn factor_sum(factors: &[Factor], m: usize, ball: &Arc<Ball>) -> Result<GroupRingMatrix> {
    let mut out = GroupRingMatrix::zeros(ball, m, m);
    for f in factors {
        for i in 0..m {
            let yi = f.row[i].star();
            for j in 0..m {
                let term = yi.mul(&f.row[j], ball)?.scale(&f.pivot);
                let sum = out.get(i, j).add(&term)?;
                out.set(i, j, sum)?;
            }
        }
    }
    Ok(out)
}

const HEADER: &str = "kazcert certificate v1";

impl Certificate {
    /// Canonical text form.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{HEADER}");
        let _ = writeln!(s, "mode {}", self.mode.name());
        let _ = writeln!(s, "degree {}", self.degree());
        let _ = writeln!(s, "epsilon {}", rat::fmt(&self.epsilon));
        let _ = writeln!(s, "convention {}", self.convention);
        let _ = writeln!(s, "fingerprint {}", self.fingerprint);
        let _ = writeln!(s, "half-radius {}", self.basis.half_radius);
        let _ = writeln!(s, "module-rank {}", self.basis.module_rank);
        let _ = writeln!(s, "basis-kind {}", self.basis.kind);
        let _ = writeln!(s, "gram-size {}", self.gram.len());
        for (p, (g, j)) in self.basis.entries.iter().enumerate() {
            let _ = writeln!(s, "basis {p} {g} {j}");
        }
        for (i, row) in self.gram.iter().enumerate() {
            for (j, x) in row.iter().enumerate().take(i + 1) {
                let _ = writeln!(s, "gram {i} {j} {}", rat::fmt(x));
            }
        }
        let _ = writeln!(s, "end");
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let mut next = || lines.next().ok_or_else(|| parse_err(0, "unexpected end of certificate"));
        let (ln, l) = next()?;
        if l != HEADER {
            return Err(parse_err(ln, format!("expected `{HEADER}`")));
        }
        let mut field = |key: &str| -> Result<(usize, String)> {
            let (ln, l) = next()?;
            let v = l
                .strip_prefix(key)
                .and_then(|v| v.strip_prefix(' '))
                .ok_or_else(|| parse_err(ln, format!("expected `{key}`")))?;
            Ok((ln, v.trim().to_string()))
        };
        let num = |(ln, v): (usize, String)| -> Result<usize> {
            v.parse().map_err(|_| parse_err(ln, format!("bad number `{v}`")))
        };
        let (mode_ln, mode_name) = field("mode")?;
        let degree = num(field("degree")?)?;
        let mode = SosMode::from_parts(&mode_name, degree)
            .ok_or_else(|| parse_err(mode_ln, format!("bad mode `{mode_name}` at degree {degree}")))?;
        let (eln, ev) = field("epsilon")?;
        let epsilon = rat::parse(&ev).ok_or_else(|| parse_err(eln, "bad epsilon"))?;
        let convention = field("convention")?.1;
        let fingerprint = field("fingerprint")?.1;
        let half_radius = num(field("half-radius")?)?;
        let module_rank = num(field("module-rank")?)?;
        let (kln, kv) = field("basis-kind")?;
        let kind = kv.parse().map_err(|_| parse_err(kln, "bad basis kind"))?;
        let n = num(field("gram-size")?)?;
        let mut entries = Vec::with_capacity(n);
        for p in 0..n {
            let (ln, v) = field("basis")?;
            let f: Vec<usize> = v
                .split_whitespace()
                .map(|x| x.parse().map_err(|_| parse_err(ln, "bad basis line")))
                .collect::<Result<_>>()?;
            if f.len() != 3 || f[0] != p {
                return Err(parse_err(ln, format!("expected basis entry {p}")));
            }
            entries.push((f[1], f[2]));
        }
        let mut gram = vec![vec![Rat::zero(); n]; n];
        for i in 0..n {
            for j in 0..=i {
                let (ln, v) = field("gram")?;
                let mut it = v.split_whitespace();
                let (a, b) = (it.next(), it.next());
                if a != Some(&i.to_string()[..]) || b != Some(&j.to_string()[..]) {
                    return Err(parse_err(ln, format!("expected gram entry ({i}, {j})")));
                }
                let x = it
                    .next()
                    .and_then(rat::parse)
                    .ok_or_else(|| parse_err(ln, "bad gram entry"))?;
                gram[i][j] = x.clone();
                gram[j][i] = x;
            }
        }
        let (ln, l) = next()?;
        if l != "end" {
            return Err(parse_err(ln, "expected `end`"));
        }
        Ok(Certificate {
            mode,
            epsilon,
            gram,
            basis: SupportBasis {
                kind,
                half_radius,
                module_rank,
                entries,
            },
            fingerprint,
            convention,
        })
    }
}
