//! Truncated free QΓ-resolutions of the trivial module and their Laplacians.
//!
//! Differentials are stored as `m_{k-1} x m_k` matrices `d_k`. Elements of the
//! free module `P_k` are row vectors and the differential acts by right
//! multiplication with the transpose `D_k = d_kᵀ`, so `d_k ∘ d_{k+1} = 0` reads
//! `D_{k+1} D_k = 0`. With this orientation the second differential of a
//! presentation has entries `d_2[s, r] = ∂r/∂s` and the fundamental formula
//! `Σ_s (∂r/∂s)(s - 1) = r - 1` is exactly the composition `D_2 D_1`.

use std::fmt;
use std::sync::Arc;

use num_traits::Zero;
use sha2::{Digest, Sha256};

use crate::ball::{Ball, Radius, DEFAULT_BALL_CAP};
use crate::error::{parse_err, Error, Result};
use crate::group::{parse_presentation, Backend, FreeWord, Presentation};
use crate::linalg::{self, SparseEchelon, SparseVec};
use crate::rat::{self, Rat};
use crate::ring::{GroupRingElement, GroupRingMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    PresentationComplex,
    CyclicPeriodic,
    UserSupplied,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::PresentationComplex => "presentation",
            Origin::CyclicPeriodic => "cyclic-periodic",
            Origin::UserSupplied => "user-supplied",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "presentation" => Some(Origin::PresentationComplex),
            "cyclic-periodic" => Some(Origin::CyclicPeriodic),
            "user-supplied" => Some(Origin::UserSupplied),
            _ => None,
        }
    }
}

/// A complex `P_K → … → P_1 → P_0` of free QΓ-modules with `P_0 = QΓ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainComplexData {
    ball: Arc<Ball>,
    ranks: Vec<usize>,
    /// `differentials[k - 1]` is `d_k`.
    differentials: Vec<GroupRingMatrix>,
    origin: Origin,
    /// The complex is known to be exact at `P_j` for all `j ≤ exact_through`.
    exact_through: usize,
    /// `P_{K+1} = 0` is part of the resolution (nothing was truncated).
    terminal: bool,
}

/// Fox derivative `∂w/∂s` evaluated in QΓ over `ball`.
pub fn fox_derivative(w: &FreeWord, s: usize, ball: &Arc<Ball>) -> Result<GroupRingElement> {
    let group = ball.group().clone();
    let too_small = || Error::RadiusTooSmall {
        what: format!("Fox derivative of a word of length {} needs radius {}", w.len(), w.len()),
        minimal: Some(w.len()),
    };
    let mut prefix = group.identity();
    let mut terms = Vec::new();
    for &l in &w.0 {
        let next = group.mul(&prefix, &group.letter(l));
        if l.gen == s {
            if l.inv {
                // ∂s⁻¹/∂s = -s⁻¹, so the term is -(prefix · s⁻¹)
                terms.push((ball.index_of(&next).ok_or_else(too_small)?, rat::int(-1)));
            } else {
                terms.push((ball.index_of(&prefix).ok_or_else(too_small)?, rat::int(1)));
            }
        }
        prefix = next;
    }
    Ok(GroupRingElement::from_terms(ball, terms))
}

fn generator_minus_one(ball: &Arc<Ball>, s: usize) -> Result<GroupRingElement> {
    let g = GroupRingElement::from_element(ball, &ball.group().generator(s))?;
    g.sub(&GroupRingElement::one(ball))
}

/// The complex of the presentation: `d_1` is the row `(s - 1)`, `d_2[s, r] = ∂r/∂s`.
///
/// A free presentation without relators yields the complete resolution `P_1 → P_0`.
pub fn build_presentation_complex(p: Arc<Presentation>, ball: &Arc<Ball>) -> Result<ChainComplexData> {
    if ball.group() != &p {
        return Err(Error::BallMismatch);
    }
    let need = p.max_relator_len().max(1);
    if ball.radius() < need && !ball.is_full() {
        return Err(Error::RadiusTooSmall {
            what: format!("presentation complex needs a ball of radius {need}"),
            minimal: Some(need),
        });
    }
    let n = p.rank();
    let mut d1 = GroupRingMatrix::zeros(ball, 1, n);
    for s in 0..n {
        d1.set(0, s, generator_minus_one(ball, s)?)?;
    }
    let mut ranks = vec![1, n];
    let mut differentials = vec![d1];
    let terminal = p.relators.is_empty() && p.backend == Backend::Free;
    if !p.relators.is_empty() {
        let mut d2 = GroupRingMatrix::zeros(ball, n, p.relators.len());
        for (j, r) in p.relators.iter().enumerate() {
            for s in 0..n {
                d2.set(s, j, fox_derivative(r, s, ball)?)?;
            }
        }
        ranks.push(p.relators.len());
        differentials.push(d2);
    }
    let mut c = ChainComplexData {
        ball: ball.clone(),
        ranks,
        differentials,
        origin: Origin::PresentationComplex,
        exact_through: 1,
        terminal,
    };
    if terminal {
        c.exact_through = usize::MAX;
    } else if ball.is_full() {
        c.exact_through = c.verified_exactness()?;
    }
    Ok(c)
}

/// Periodic resolution of Q over Z/n: `d_odd = t - 1`, `d_even = 1 + t + … + t^{n-1}`.
///
/// For the trivial group (`n = 1`) the even differentials are the identity `1`,
/// which keeps the complex exact.
pub fn cyclic_resolution(n: u64, top: usize, ball: &Arc<Ball>) -> Result<ChainComplexData> {
    let p = ball.group();
    if p.backend != Backend::Cyclic(n) || p.rank() != 1 || !ball.is_full() {
        return Err(Error::Backend(format!(
            "periodic resolution needs the full ball of the cyclic group of order {n}"
        )));
    }
    let t_minus_one = generator_minus_one(ball, 0)?;
    let norm = GroupRingElement::from_terms(ball, (0..ball.len()).map(|i| (i, rat::int(1))));
    let differentials = (1..=top)
        .map(|k| {
            let e = if k % 2 == 1 { t_minus_one.clone() } else { norm.clone() };
            GroupRingMatrix::from_rows(ball, vec![vec![e]])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ChainComplexData {
        ball: ball.clone(),
        ranks: vec![1; top + 1],
        differentials,
        origin: Origin::CyclicPeriodic,
        exact_through: top.saturating_sub(1),
        terminal: false,
    })
}

/// Appends `d_k` (shape `m_{k-1} x m_k`) to a complex of top degree `k - 1`.
pub fn attach_user_differential(c: &ChainComplexData, k: usize, d: &GroupRingMatrix) -> Result<ChainComplexData> {
    if k != c.top_degree() + 1 {
        return Err(Error::ShapeMismatch(format!(
            "can only attach d_{} to a complex of top degree {}",
            c.top_degree() + 1,
            c.top_degree()
        )));
    }
    if d.rows() != c.ranks[k - 1] {
        return Err(Error::ShapeMismatch(format!(
            "d_{k} must have {} rows, got {}",
            c.ranks[k - 1],
            d.rows()
        )));
    }
    let d = d.transfer(&c.ball)?;
    let prev = &c.differentials[k - 2];
    let out = c.product_ball(prev.support_radius() + d.support_radius())?;
    let comp = d.transpose().mul(&prev.transpose(), &out)?;
    if let Some((i, j, e)) = comp.first_nonzero() {
        return Err(Error::NotAComplex(format!(
            "d_{} ∘ d_{k} has nonzero entry ({j}, {i}) = {}",
            k - 1,
            describe(e)
        )));
    }
    let mut out = c.clone();
    out.ranks.push(d.cols());
    out.differentials.push(d);
    out.origin = Origin::UserSupplied;
    out.terminal = false;
    if out.ball.is_full() {
        out.exact_through = out.verified_exactness()?;
    }
    Ok(out)
}

/// Extends a complex over a finite group by one degree with QΓ-module
/// generators of `ker d_K`, making it exact at `P_K`.
pub fn extend_finite_resolution(c: &ChainComplexData) -> Result<ChainComplexData> {
    if !c.ball.is_full() {
        return Err(Error::Backend("kernel extension needs a finite group with a full ball".into()));
    }
    let n = c.ball.len();
    let k = c.top_degree();
    let mk = c.ranks[k];
    let a = q_matrix(&c.differentials[k - 1].transpose(), &c.ball)?;
    // rows of `a` index the source basis (i, g); the kernel is {x : x a = 0}
    let cols = mk * n;
    let at: Vec<Vec<Rat>> = (0..a.first().map_or(0, Vec::len))
        .map(|c2| (0..cols).map(|r| a[r][c2].clone()).collect())
        .collect();
    let kernel = if at.is_empty() {
        (0..cols)
            .map(|i| {
                let mut v = vec![Rat::zero(); cols];
                v[i] = rat::int(1);
                v
            })
            .collect()
    } else {
        linalg::nullspace(&at, cols)
    };
    let mut span = SparseEchelon::new();
    let mut generators: Vec<Vec<Rat>> = Vec::new();
    for v in kernel.iter() {
        if span.rank() == kernel.len() {
            break;
        }
        let sv = linalg::sparse_from_dense(v);
        if span.contains(&sv) {
            continue;
        }
        for g in 0..n {
            let mut moved = SparseVec::new();
            for (&idx, q) in &sv {
                let (i, h) = (idx / n, idx % n);
                moved.insert(i * n + c.ball.product_index(g, h)?, q.clone());
            }
            span.insert(moved);
        }
        generators.push(v.clone());
    }
    let mut d = GroupRingMatrix::zeros(&c.ball, mk, generators.len());
    for (col, v) in generators.iter().enumerate() {
        for i in 0..mk {
            let e = GroupRingElement::from_terms(&c.ball, (0..n).map(|g| (g, v[i * n + g].clone())));
            d.set(i, col, e)?;
        }
    }
    let mut out = c.clone();
    out.ranks.push(generators.len());
    out.differentials.push(d);
    out.exact_through = out.exact_through.max(k);
    out.terminal = false;
    Ok(out)
}

/// Rational matrix of right multiplication by `m` on `QΓ^{rows}` for a full ball:
/// row `(i, g)` maps to `Σ_j g · m[i][j]`, column index `j * |Γ| + h`.
fn q_matrix(m: &GroupRingMatrix, ball: &Arc<Ball>) -> Result<Vec<Vec<Rat>>> {
    let n = ball.len();
    let mut a = vec![vec![Rat::zero(); m.cols() * n]; m.rows() * n];
    for (i, j, e) in m.entries() {
        let e = e.transfer(ball)?;
        for g in 0..n {
            for (h, q) in e.terms() {
                a[i * n + g][j * n + ball.product_index(g, h)?] += q;
            }
        }
    }
    Ok(a)
}

fn describe(e: &GroupRingElement) -> String {
    let ball = e.ball();
    let parts: Vec<String> = e
        .terms()
        .map(|(i, q)| format!("{}*{}", rat::fmt(q), ball.element(i)))
        .collect();
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ")
    }
}

/// `Δ_k = D_k D_k* + D_{k+1}* D_{k+1}`; in degree 0 this is `Σ_s (2 - s - s⁻¹)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix {
    pub degree: usize,
    pub matrix: GroupRingMatrix,
    pub support_radius: usize,
    /// `d_{k+1}` was missing and replaced by 0 although the resolution continues.
    pub truncated: bool,
}

/// One identity checked by [`check_complex`].
#[derive(Debug, Clone, PartialEq)]
pub struct CheckItem {
    pub name: String,
    pub ok: bool,
    pub witness: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComplexReport {
    pub items: Vec<CheckItem>,
}

impl ComplexReport {
    pub fn all_ok(&self) -> bool {
        self.items.iter().all(|i| i.ok)
    }
}

impl fmt::Display for ComplexReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for item in &self.items {
            write!(f, "[{}] {}", if item.ok { "ok" } else { "FAIL" }, item.name)?;
            if let Some(w) = &item.witness {
                write!(f, ": {w}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl ChainComplexData {
    pub fn ball(&self) -> &Arc<Ball> {
        &self.ball
    }

    pub fn presentation(&self) -> &Arc<Presentation> {
        self.ball.group()
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn rank(&self, k: usize) -> usize {
        self.ranks.get(k).copied().unwrap_or(0)
    }

    pub fn top_degree(&self) -> usize {
        self.ranks.len() - 1
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn exact_through(&self) -> usize {
        self.exact_through
    }

    pub fn is_terminal(&self) -> bool {
        self.terminal
    }

    /// `d_k` in storage shape `m_{k-1} x m_k`.
    pub fn differential(&self, k: usize) -> Option<&GroupRingMatrix> {
        if k == 0 {
            return None;
        }
        self.differentials.get(k - 1)
    }

    /// Whether degree-`k` cohomology can be read off this complex.
    pub fn is_exact_at(&self, k: usize) -> bool {
        self.terminal || k <= self.exact_through
    }

    /// Whether `Δ_k` uses a genuine `d_{k+1}` (or the resolution really stops at `k`).
    pub fn has_full_laplacian(&self, k: usize) -> bool {
        k < self.top_degree() || (k == self.top_degree() && self.terminal)
    }

    /// A ball containing all products of supports up to `radius`.
    pub fn product_ball(&self, radius: usize) -> Result<Arc<Ball>> {
        if self.ball.is_full() || radius <= self.ball.radius() {
            return Ok(self.ball.clone());
        }
        Ball::enumerate(self.ball.group().clone(), Radius::Finite(radius), DEFAULT_BALL_CAP)
    }

    /// Support radius of `Δ_k` as a sum of differential radii.
    pub fn laplacian_radius(&self, k: usize) -> usize {
        let r = |j: usize| self.differential(j).map_or(0, GroupRingMatrix::support_radius);
        (2 * r(k)).max(2 * r(k + 1))
    }

    /// `Δ_k` written into a ball large enough to hold it.
    pub fn laplacian_auto(&self, k: usize) -> Result<LaplacianMatrix> {
        let out = self.product_ball(self.laplacian_radius(k))?;
        laplacian(self, k, &out)
    }

    /// Exactness degree computed by rational ranks (finite groups only).
    fn verified_exactness(&self) -> Result<usize> {
        let n = self.ball.len();
        let rank_of = |k: usize| -> Result<usize> {
            let a = q_matrix(&self.differentials[k - 1].transpose(), &self.ball)?;
            Ok(linalg::rank(a.iter().map(|r| linalg::sparse_from_dense(r))))
        };
        let mut ranks = vec![0usize];
        for k in 1..=self.top_degree() {
            ranks.push(rank_of(k)?);
        }
        // exact at P_0 iff the image of D_1 is the augmentation ideal
        if ranks.get(1).copied().unwrap_or(0) + 1 != n {
            return Ok(0);
        }
        let mut through = 0;
        for k in 1..self.top_degree() {
            let kernel = self.ranks[k] * n - ranks[k];
            if ranks[k + 1] != kernel {
                break;
            }
            through = k;
        }
        Ok(through)
    }

    /// Canonical text serialization.
    pub fn to_text(&self) -> String {
        let mut s = String::from("complex v1\n");
        s.push_str(&format!("origin {}\n", self.origin.as_str()));
        if self.exact_through == usize::MAX {
            s.push_str("exact-through all\n");
        } else {
            s.push_str(&format!("exact-through {}\n", self.exact_through));
        }
        s.push_str(&format!("terminal {}\n", self.terminal as u8));
        s.push_str(&format!("ball-radius {}\n", self.ball.radius()));
        s.push_str("presentation-begin\n");
        s.push_str(&self.presentation().to_text());
        s.push_str("presentation-end\n");
        let ranks: Vec<String> = self.ranks.iter().map(usize::to_string).collect();
        s.push_str(&format!("ranks {}\n", ranks.join(" ")));
        for (k, d) in self.differentials.iter().enumerate() {
            for (i, j, e) in d.entries() {
                if !e.is_zero() {
                    s.push_str(&format!("d {} {i} {j} {e}\n", k + 1));
                }
            }
        }
        s.push_str("end\n");
        s
    }

    /// SHA-256 of the canonical text, in hex.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let mut next = |what: &str| -> Result<(usize, &str)> {
            lines
                .next()
                .ok_or_else(|| parse_err(0, format!("unexpected end of complex file, expected {what}")))
        };
        let (n, l) = next("header")?;
        if l != "complex v1" {
            return Err(parse_err(n, "expected `complex v1`"));
        }
        let field = |line: (usize, &str), key: &str| -> Result<String> {
            line.1
                .strip_prefix(key)
                .map(|v| v.trim().to_string())
                .ok_or_else(|| parse_err(line.0, format!("expected `{key}`")))
        };
        let origin_line = next("origin")?;
        let origin = Origin::parse(&field(origin_line, "origin")?)
            .ok_or_else(|| parse_err(origin_line.0, "unknown origin"))?;
        let et_line = next("exact-through")?;
        let et = field(et_line, "exact-through")?;
        let exact_through = if et == "all" {
            usize::MAX
        } else {
            et.parse().map_err(|_| parse_err(et_line.0, "bad exact-through"))?
        };
        let term_line = next("terminal")?;
        let terminal = match field(term_line, "terminal")?.as_str() {
            "0" => false,
            "1" => true,
            _ => return Err(parse_err(term_line.0, "bad terminal flag")),
        };
        let radius_line = next("ball-radius")?;
        let radius: usize = field(radius_line, "ball-radius")?
            .parse()
            .map_err(|_| parse_err(radius_line.0, "bad ball radius"))?;
        let begin = next("presentation-begin")?;
        if begin.1 != "presentation-begin" {
            return Err(parse_err(begin.0, "expected `presentation-begin`"));
        }
        let mut ptext = String::new();
        loop {
            let (_, l) = next("presentation-end")?;
            if l == "presentation-end" {
                break;
            }
            ptext.push_str(l);
            ptext.push('\n');
        }
        let p = Arc::new(parse_presentation(&ptext)?);
        let ball = Ball::enumerate(p, Radius::Finite(radius), DEFAULT_BALL_CAP)?;
        let ranks_line = next("ranks")?;
        let ranks: Vec<usize> = field(ranks_line, "ranks")?
            .split_whitespace()
            .map(|x| x.parse().map_err(|_| parse_err(ranks_line.0, "bad rank")))
            .collect::<Result<_>>()?;
        if ranks.first() != Some(&1) {
            return Err(parse_err(ranks_line.0, "rank of P_0 must be 1"));
        }
        let mut differentials: Vec<GroupRingMatrix> = (1..ranks.len())
            .map(|k| GroupRingMatrix::zeros(&ball, ranks[k - 1], ranks[k]))
            .collect();
        loop {
            let (n, l) = next("end")?;
            if l == "end" {
                break;
            }
            let mut parts = l.splitn(5, ' ');
            if parts.next() != Some("d") {
                return Err(parse_err(n, "expected a differential entry"));
            }
            let mut num = || -> Result<usize> {
                parts
                    .next()
                    .and_then(|x| x.parse().ok())
                    .ok_or_else(|| parse_err(n, "bad differential index"))
            };
            let (k, i, j) = (num()?, num()?, num()?);
            let e = parts.next().ok_or_else(|| parse_err(n, "missing element"))?;
            if k == 0 || k > differentials.len() || i >= ranks[k - 1] || j >= ranks[k] {
                return Err(parse_err(n, "differential entry out of range"));
            }
            let e = GroupRingElement::parse(e, &ball).map_err(|err| match err {
                Error::Parse { msg, .. } => parse_err(n, msg),
                other => other,
            })?;
            differentials[k - 1].set(i, j, e)?;
        }
        Ok(ChainComplexData {
            ball,
            ranks,
            differentials,
            origin,
            exact_through,
            terminal,
        })
    }
}

/// The Laplacian `Δ_k`, computed into `out`.
pub fn laplacian(c: &ChainComplexData, k: usize, out: &Arc<Ball>) -> Result<LaplacianMatrix> {
    if k > c.top_degree() {
        return Err(Error::TruncatedDegree {
            degree: k,
            reason: format!("complex has top degree {}", c.top_degree()),
        });
    }
    let m = c.rank(k);
    let mut matrix = GroupRingMatrix::zeros(out, m, m);
    if let Some(d) = c.differential(k) {
        let dk = d.transpose();
        matrix = matrix.add(&dk.mul(&dk.star(), out)?)?;
    }
    if let Some(d) = c.differential(k + 1) {
        let dk1 = d.transpose();
        matrix = matrix.add(&dk1.star().mul(&dk1, out)?)?;
    }
    Ok(LaplacianMatrix {
        degree: k,
        support_radius: matrix.support_radius(),
        truncated: !c.has_full_laplacian(k),
        matrix,
    })
}

fn check(name: impl Into<String>, witness: Option<String>) -> CheckItem {
    CheckItem {
        name: name.into(),
        ok: witness.is_none(),
        witness,
    }
}

/// Verifies the defining identities of the complex exactly.
pub fn check_complex(c: &ChainComplexData) -> ComplexReport {
    let mut report = ComplexReport::default();
    for k in 1..c.top_degree() {
        let (a, b) = (&c.differentials[k - 1], &c.differentials[k]);
        let name = format!("d_{k} ∘ d_{} = 0", k + 1);
        let witness = c
            .product_ball(a.support_radius() + b.support_radius())
            .and_then(|out| b.transpose().mul(&a.transpose(), &out))
            .map(|comp| {
                comp.first_nonzero()
                    .map(|(i, j, e)| format!("entry ({j}, {i}) = {}", describe(e)))
            })
            .unwrap_or_else(|e| Some(e.to_string()));
        report.items.push(check(name, witness));
    }
    if let Some(d1) = c.differential(1) {
        let bad = d1
            .entries()
            .find(|(_, _, e)| !e.augmentation().is_zero())
            .map(|(_, j, e)| format!("column {j} = {} has augmentation {}", describe(e), rat::fmt(&e.augmentation())));
        report.items.push(check("augmentation of d_1 vanishes", bad));
    }
    if c.origin == Origin::PresentationComplex {
        report.items.push(check_generator_column(c));
        report.items.extend(check_fundamental_formula(c));
    }
    report
}

fn check_generator_column(c: &ChainComplexData) -> CheckItem {
    let Some(d1) = c.differential(1) else {
        return check("d_1 column for s equals s - 1", Some("missing d_1".into()));
    };
    let mut witness = None;
    for s in 0..c.presentation().rank() {
        let expected = generator_minus_one(&c.ball, s);
        if expected.as_ref().ok() != Some(d1.get(0, s)) {
            witness = Some(format!(
                "column {} is {}",
                c.presentation().generators[s],
                describe(d1.get(0, s))
            ));
            break;
        }
    }
    check("d_1 column for s equals s - 1", witness)
}

/// `Σ_s (∂r/∂s)(s - 1) = r - 1` in the free group ring, relator by relator,
/// and agreement of `d_2` with the Fox derivatives evaluated in Γ.
fn check_fundamental_formula(c: &ChainComplexData) -> Vec<CheckItem> {
    let p = c.presentation();
    let mut items = Vec::new();
    let free = match Presentation::new(p.generators.clone(), vec![], Backend::Free) {
        Ok(f) => Arc::new(f),
        Err(e) => return vec![check("fundamental formula", Some(e.to_string()))],
    };
    let len = p.max_relator_len();
    let fball = match Ball::enumerate(free.clone(), Radius::Finite(len + 1), DEFAULT_BALL_CAP) {
        Ok(b) => b,
        Err(e) => return vec![check("fundamental formula", Some(e.to_string()))],
    };
    let d2 = c.differential(2);
    for (j, r) in p.relators.iter().enumerate() {
        let name = format!("fundamental formula for relator {}", r.display(&p.generators));
        let result = (|| -> Result<Option<String>> {
            let mut sum = GroupRingElement::zero(&fball);
            for s in 0..p.rank() {
                let fox = fox_derivative(r, s, &fball)?;
                sum = sum.add(&fox.mul(&generator_minus_one(&fball, s)?, &fball)?)?;
            }
            let r_minus_one = GroupRingElement::from_element(&fball, &free.eval_word(r))?
                .sub(&GroupRingElement::one(&fball))?;
            if sum != r_minus_one {
                return Ok(Some(format!("Σ_s (∂r/∂s)(s - 1) = {} differs from r - 1", describe(&sum))));
            }
            let Some(d2) = d2 else {
                return Ok(Some("missing d_2".into()));
            };
            for s in 0..p.rank() {
                let fox = fox_derivative(r, s, &c.ball)?;
                if &fox != d2.get(s, j) {
                    return Ok(Some(format!(
                        "entry ({s}, {j}) = {} but ∂r/∂{} = {}",
                        describe(d2.get(s, j)),
                        p.generators[s],
                        describe(&fox)
                    )));
                }
            }
            Ok(None)
        })()
        .unwrap_or_else(|e| Some(e.to_string()));
        items.push(check(name, result));
    }
    items
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::Element;
    use crate::rat::int;

    fn setup(src: &str, radius: Radius) -> (Arc<Presentation>, Arc<Ball>) {
        let p = Arc::new(parse_presentation(src).unwrap());
        let b = Ball::enumerate(p.clone(), radius, 10_000).unwrap();
        (p, b)
    }

    fn elem(b: &Arc<Ball>, p: &Presentation, terms: &[(i64, &str)]) -> GroupRingElement {
        GroupRingElement::from_terms(
            b,
            terms.iter().map(|&(c, w)| {
                let x = p.eval_word(&p.parse_word(w).unwrap());
                (b.index_of(&x).unwrap(), int(c))
            }),
        )
    }

    #[test]
    fn fox_axioms() {
        let (p, b) = setup("gens a b; backend free", Radius::Finite(4));
        let w = |s: &str| p.parse_word(s).unwrap();
        assert_eq!(fox_derivative(&w("a b"), 0, &b).unwrap(), elem(&b, &p, &[(1, "1")]));
        assert_eq!(fox_derivative(&w("a^-1"), 0, &b).unwrap(), elem(&b, &p, &[(-1, "a^-1")]));
        assert!(fox_derivative(&w("b"), 0, &b).unwrap().is_zero());
        let comm = w("a b a^-1 b^-1");
        assert_eq!(
            fox_derivative(&comm, 0, &b).unwrap(),
            elem(&b, &p, &[(1, "1"), (-1, "a b a^-1")])
        );
        assert_eq!(
            fox_derivative(&comm, 1, &b).unwrap(),
            elem(&b, &p, &[(1, "a"), (-1, "a b a^-1 b^-1")])
        );
        let small = Ball::enumerate(p.clone(), Radius::Finite(2), 100).unwrap();
        assert!(matches!(
            fox_derivative(&comm, 0, &small),
            Err(Error::RadiusTooSmall { minimal: Some(4), .. })
        ));
    }

    #[test]
    fn presentation_complexes() {
        let (p, b) = setup("gens t; backend free", Radius::Finite(1));
        let c = build_presentation_complex(p.clone(), &b).unwrap();
        assert_eq!(c.ranks(), &[1, 1]);
        assert_eq!(c.differential(1).unwrap().get(0, 0), &elem(&b, &p, &[(1, "t"), (-1, "1")]));

        let (p, b) = setup("gens a b; rel a b a^-1 b^-1; backend free-abelian", Radius::Finite(4));
        let c = build_presentation_complex(p.clone(), &b).unwrap();
        assert_eq!(c.ranks(), &[1, 2, 1]);
        let d2 = c.differential(2).unwrap();
        assert_eq!(d2.get(0, 0), &elem(&b, &p, &[(1, "1"), (-1, "b")]));
        assert_eq!(d2.get(1, 0), &elem(&b, &p, &[(1, "a"), (-1, "1")]));
        assert!(check_complex(&c).all_ok());

        let (p, b) = setup("gens t; backend cyclic 3", Radius::Full);
        let c = build_presentation_complex(p.clone(), &b).unwrap();
        let n = elem(&b, &p, &[(1, "1"), (1, "t"), (1, "t^2")]);
        assert_eq!(c.differential(2).unwrap().get(0, 0), &n);
        assert_eq!(c.exact_through(), 1);
    }

    #[test]
    fn cyclic_periodic() {
        for n in 1..=6u64 {
            let (_, b) = setup(&format!("gens t; backend cyclic {n}"), Radius::Full);
            let c = cyclic_resolution(n, 4, &b).unwrap();
            assert!(check_complex(&c).all_ok(), "n = {n}");
            assert_eq!(c.exact_through(), 3);
        }
        let (p, b) = setup("gens t; backend cyclic 3", Radius::Full);
        let c = cyclic_resolution(3, 3, &b).unwrap();
        assert_eq!(c.differential(3).unwrap().get(0, 0), &elem(&b, &p, &[(1, "t"), (-1, "1")]));
    }

    #[test]
    fn attaching_differentials() {
        let (p, b) = setup("gens t; backend cyclic 3", Radius::Full);
        let c = cyclic_resolution(3, 2, &b).unwrap();
        let good = GroupRingMatrix::from_rows(&b, vec![vec![elem(&b, &p, &[(1, "t"), (-1, "1")])]]).unwrap();
        let ext = attach_user_differential(&c, 3, &good).unwrap();
        assert_eq!(ext.top_degree(), 3);
        assert_eq!(ext.exact_through(), 2);
        let bad = GroupRingMatrix::from_rows(&b, vec![vec![elem(&b, &p, &[(1, "t")])]]).unwrap();
        assert!(matches!(attach_user_differential(&c, 3, &bad), Err(Error::NotAComplex(_))));
        let wrong = GroupRingMatrix::zeros(&b, 2, 1);
        assert!(matches!(attach_user_differential(&c, 3, &wrong), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn laplacian_examples() {
        let (p, b) = setup("gens t; backend free", Radius::Finite(2));
        let c = build_presentation_complex(p.clone(), &b).unwrap();
        let l0 = laplacian(&c, 0, &b).unwrap();
        assert_eq!(l0.matrix.get(0, 0), &elem(&b, &p, &[(2, "1"), (-1, "t"), (-1, "t^-1")]));
        assert!(!l0.truncated);

        let (p, b) = setup("gens t; backend cyclic 3", Radius::Full);
        let c = cyclic_resolution(3, 3, &b).unwrap();
        let l1 = laplacian(&c, 1, &b).unwrap();
        assert_eq!(l1.matrix.get(0, 0), &elem(&b, &p, &[(5, "1"), (2, "t"), (2, "t^2")]));
        assert!(laplacian(&c, 3, &b).unwrap().truncated);
    }

    #[test]
    fn corrupted_differential_has_witness() {
        let (p, b) = setup("gens t; backend cyclic 3", Radius::Full);
        let mut c = cyclic_resolution(3, 3, &b).unwrap();
        c.differentials[1]
            .set(0, 0, elem(&b, &p, &[(1, "1"), (1, "t")]))
            .unwrap();
        let report = check_complex(&c);
        assert!(!report.all_ok());
        let w = report.items.iter().find(|i| !i.ok).unwrap().witness.clone().unwrap();
        assert!(w.contains("entry (0, 0)"), "{w}");
        assert!(w.contains(&Element::Residue(2).to_string()));
    }

    #[test]
    fn s3_kernel_extension() {
        let (p, b) = setup(
            "gens a b; rel a^2; rel b^2; rel a b a b a b; backend perm a=(1 2) b=(2 3)",
            Radius::Full,
        );
        let c = build_presentation_complex(p, &b).unwrap();
        assert_eq!(c.exact_through(), 1);
        let ext = extend_finite_resolution(&c).unwrap();
        assert!(check_complex(&ext).all_ok());
        assert_eq!(ext.exact_through(), 2);
        assert_eq!(ext.verified_exactness().unwrap(), 2);
    }

    #[test]
    fn text_roundtrip_and_fingerprint() {
        let (p, b) = setup("gens a b; rel a b a^-1 b^-1; backend free-abelian", Radius::Finite(4));
        let c = build_presentation_complex(p, &b).unwrap();
        let back = ChainComplexData::from_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.fingerprint(), c.fingerprint());
        let (_, b3) = setup("gens t; backend cyclic 3", Radius::Full);
        let z3 = cyclic_resolution(3, 4, &b3).unwrap();
        assert_ne!(z3.fingerprint(), c.fingerprint());
        assert_eq!(ChainComplexData::from_text(&z3.to_text()).unwrap(), z3);
    }
}
