//! Gram-matrix encodings of the three sum-of-squares identities
//!
//! * `Δ₀(Δ₀ - ε) = Σ xᵢ* xᵢ` (Ozawa mode, scalar),
//! * `Δ_k - ε = Σ xᵢ* xᵢ` (bracket mode),
//! * `Δ₀(Δ_k - ε)Δ₀ = Σ xᵢ* xᵢ` (parenthesised mode),
//!
//! as linear constraints on a symmetric matrix `Q` indexed by a support basis,
//! with the target written affinely as `c₀ + ε c₁`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_traits::Zero;

use crate::ball::{Ball, Radius, DEFAULT_BALL_CAP};
use crate::error::{Error, Result};
use crate::rat::{self, Rat};
use crate::resolution::ChainComplexData;
use crate::ring::{GroupRingElement, GroupRingMatrix};

/// Normalisation of `Δ₀` recorded in every certificate.
pub const CONVENTION: &str = "delta0=sum_{s in S}(2-s-s^-1);delta_k=D_k*D_k^*+D_{k+1}^**D_{k+1}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SosMode {
    OzawaT,
    BracketTn(usize),
    ParenTn(usize),
}

impl SosMode {
    pub fn degree(self) -> usize {
        match self {
            SosMode::OzawaT => 0,
            SosMode::BracketTn(k) | SosMode::ParenTn(k) => k,
        }
    }

    pub fn basis_kind(self) -> BasisKind {
        match self {
            SosMode::BracketTn(_) => BasisKind::Group,
            SosMode::OzawaT | SosMode::ParenTn(_) => BasisKind::Ideal,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SosMode::OzawaT => "ozawa",
            SosMode::BracketTn(_) => "bracket",
            SosMode::ParenTn(_) => "paren",
        }
    }

    pub fn from_parts(name: &str, degree: usize) -> Option<Self> {
        match name {
            "ozawa" if degree == 0 => Some(SosMode::OzawaT),
            "bracket" => Some(SosMode::BracketTn(degree)),
            "paren" => Some(SosMode::ParenTn(degree)),
            _ => None,
        }
    }

    /// The identity in readable notation, e.g. `Δ₀(Δ₁ - ε)Δ₀`.
    pub fn identity_text(self, eps: &str) -> String {
        match self {
            SosMode::OzawaT => format!("Δ₀(Δ₀ - {eps}) = Σᵢ pᵢ yᵢ* yᵢ"),
            SosMode::BracketTn(k) => format!("Δ{} - {eps} = Σᵢ pᵢ yᵢ* yᵢ", subscript(k)),
            SosMode::ParenTn(k) => format!("Δ₀(Δ{} - {eps})Δ₀ = Σᵢ pᵢ yᵢ* yᵢ", subscript(k)),
        }
    }
}

fn subscript(k: usize) -> String {
    k.to_string()
        .chars()
        .map(|c| char::from_u32('₀' as u32 + c.to_digit(10).unwrap_or(0)).unwrap_or(c))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisKind {
    /// `w_p = g` for `g ∈ B_d`.
    Group,
    /// `w_p = g - e` for `g ∈ B_d \ {e}`.
    Ideal,
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BasisKind::Group => "group",
            BasisKind::Ideal => "ideal",
        })
    }
}

impl FromStr for BasisKind {
    type Err = ();
    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s {
            "group" => Ok(BasisKind::Group),
            "ideal" => Ok(BasisKind::Ideal),
            _ => Err(()),
        }
    }
}

/// Ordered list of `(w_p, j_p)`: a ring element placed in module row `j_p`.
///
/// Elements are indices into the radius-`2d` ball of the group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportBasis {
    pub kind: BasisKind,
    pub half_radius: usize,
    pub module_rank: usize,
    /// `(element index, module row)`
    pub entries: Vec<(usize, usize)>,
}

impl SupportBasis {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The ring element `w_p` over `ball`.
    pub fn element(&self, p: usize, ball: &Arc<Ball>) -> GroupRingElement {
        let (g, _) = self.entries[p];
        match self.kind {
            BasisKind::Group => GroupRingElement::basis(ball, g),
            BasisKind::Ideal => GroupRingElement::from_terms(ball, [(g, rat::int(1)), (0, rat::int(-1))]),
        }
    }
}

/// The basis of size `|B_d|·m` (group) or `(|B_d| - 1)·m` (ideal), row-major in the module index.
pub fn build_support_basis(ball: &Ball, half_radius: usize, kind: BasisKind, m: usize) -> SupportBasis {
    let n = ball.prefix_len(half_radius);
    let first = match kind {
        BasisKind::Group => 0,
        BasisKind::Ideal => 1,
    };
    let entries = (0..m).flat_map(|j| (first..n).map(move |g| (g, j))).collect();
    SupportBasis {
        kind,
        half_radius,
        module_rank: m,
        entries,
    }
}

/// One scalar equation `Σ coef·Q[p,q] = c₀ + ε c₁` for the coefficient of
/// element `g` in block `(i, j)`; variables are `(p, q)` with `p ≤ q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub block: (usize, usize),
    pub element: usize,
    pub terms: Vec<(usize, usize, Rat)>,
    pub c0: Rat,
    pub c1: Rat,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SosProblem {
    pub mode: SosMode,
    pub fingerprint: String,
    pub basis: SupportBasis,
    pub constraints: Vec<Constraint>,
    pub eps_cap: Rat,
    /// `c₁ ≡ 0`: every ε is feasible iff `ε = 0` is.
    pub degenerate: bool,
}

impl SosProblem {
    pub fn gram_size(&self) -> usize {
        self.basis.len()
    }

    pub fn degree(&self) -> usize {
        self.mode.degree()
    }

    pub fn half_radius(&self) -> usize {
        self.basis.half_radius
    }

    /// Evaluates `A(Q) - c₀ - ε c₁` exactly, constraint by constraint.
    pub fn residuals(&self, q: &[Vec<Rat>], eps: &Rat) -> Vec<Rat> {
        self.constraints
            .iter()
            .map(|c| {
                let lhs: Rat = c.terms.iter().map(|(p, r, a)| a * &q[*p][*r]).sum();
                lhs - &c.c0 - eps * &c.c1
            })
            .collect()
    }
}

#[derive(Debug, Clone, Default)]
pub struct EncodeOptions {
    /// Half radius `d`; defaults to the smallest admissible value.
    pub half_radius: Option<usize>,
    /// Accept truncated or unproven degrees.
    pub assert_resolution: bool,
    /// Upper bound for ε; defaults to twice the ℓ¹ norm of the Laplacian.
    pub eps_cap: Option<Rat>,
}

/// The ball over which problems of half radius `d` are expressed.
pub fn problem_ball(c: &ChainComplexData, half_radius: usize) -> Result<Arc<Ball>> {
    Ball::enumerate(
        c.presentation().clone(),
        Radius::Finite(2 * half_radius),
        DEFAULT_BALL_CAP,
    )
}

/// Target `c₀ + ε c₁` as the pair `(c₀, c₁)`, plus the Laplacian that bounds ε.
pub fn target_pair(c: &ChainComplexData, mode: SosMode) -> Result<(GroupRingMatrix, GroupRingMatrix, GroupRingMatrix)> {
    let k = mode.degree();
    let delta0 = c.laplacian_auto(0)?.matrix;
    let d0_radius = delta0.support_radius();
    match mode {
        SosMode::OzawaT => {
            let out = c.product_ball(2 * d0_radius)?;
            let d0 = delta0.get(0, 0).transfer(&out)?;
            let c0 = GroupRingMatrix::scalar(&d0.mul(&d0, &out)?, 1);
            let c1 = GroupRingMatrix::scalar(&d0.neg(), 1);
            Ok((c0, c1, delta0))
        }
        SosMode::BracketTn(_) => {
            let lap = c.laplacian_auto(k)?.matrix;
            let m = lap.rows();
            let c1 = GroupRingMatrix::scalar(&GroupRingElement::one(lap.ball()).neg(), m);
            Ok((lap.clone(), c1, lap))
        }
        SosMode::ParenTn(_) => {
            let lap = c.laplacian_auto(k)?.matrix;
            let out = c.product_ball(lap.support_radius() + 2 * d0_radius)?;
            let d0 = delta0.get(0, 0).transfer(&out)?;
            let inner = lap.transfer(&out)?;
            let c0 = inner.left_scalar_mul(&d0, &out)?.right_scalar_mul(&d0, &out)?;
            let c1 = GroupRingMatrix::scalar(&d0.mul(&d0, &out)?.neg(), lap.rows());
            Ok((c0, c1, lap))
        }
    }
}

fn check_degree(c: &ChainComplexData, mode: SosMode, assert_resolution: bool) -> Result<()> {
    let k = mode.degree();
    if let SosMode::BracketTn(0) | SosMode::ParenTn(0) = mode {
        if !assert_resolution {
            return Err(Error::TruncatedDegree {
                degree: 0,
                reason: "degree-0 bracket/paren modes need the assert-resolution override".into(),
            });
        }
    }
    if k > c.top_degree() {
        return Err(Error::TruncatedDegree {
            degree: k,
            reason: format!("complex has top degree {}", c.top_degree()),
        });
    }
    if assert_resolution {
        return Ok(());
    }
    if !c.has_full_laplacian(k) {
        return Err(Error::TruncatedDegree {
            degree: k,
            reason: format!("d_{} is missing, so Δ_{k} would only describe a truncation", k + 1),
        });
    }
    if !c.is_exact_at(k) {
        return Err(Error::TruncatedDegree {
            degree: k,
            reason: format!(
                "the complex is only known to be exact through degree {}",
                c.exact_through()
            ),
        });
    }
    Ok(())
}

/// Smallest half radius whose ball equals `B_d`; larger radii add no basis elements.
pub fn canonical_half_radius(c: &ChainComplexData, d: usize) -> Result<usize> {
    let ball = problem_ball(c, d)?;
    let mut d = d;
    while d > 1 && ball.prefix_len(d - 1) == ball.prefix_len(d) {
        d -= 1;
    }
    Ok(d)
}

/// Builds the semidefinite program for `mode` on the complex `c`.
pub fn encode(c: &ChainComplexData, mode: SosMode, opts: &EncodeOptions) -> Result<SosProblem> {
    check_degree(c, mode, opts.assert_resolution)?;
    let (c0, c1, lap) = target_pair(c, mode)?;
    let target_radius = c0.support_radius().max(c1.support_radius());
    let minimal = target_radius.div_ceil(2).max(1);
    let d = opts.half_radius.unwrap_or(minimal);
    if d < minimal {
        return Err(Error::RadiusTooSmall {
            what: format!("target has support radius {target_radius}, half radius {d} is too small"),
            minimal: Some(minimal),
        });
    }
    let d = canonical_half_radius(c, d)?;
    let ball = problem_ball(c, d)?;
    let c0 = c0.transfer(&ball)?;
    let c1 = c1.transfer(&ball)?;
    let m = c0.rows();
    let basis = build_support_basis(&ball, d, mode.basis_kind(), m);

    // (i, j, g) -> (p, q) -> coefficient
    let mut table: BTreeMap<(usize, usize, usize), BTreeMap<(usize, usize), Rat>> = BTreeMap::new();
    let ws: Vec<GroupRingElement> = (0..basis.len()).map(|p| basis.element(p, &ball)).collect();
    let stars: Vec<GroupRingElement> = ws.iter().map(GroupRingElement::star).collect();
    for p in 0..basis.len() {
        let jp = basis.entries[p].1;
        for q in 0..basis.len() {
            let jq = basis.entries[q].1;
            if jp > jq {
                continue;
            }
            let prod = stars[p].mul(&ws[q], &ball)?;
            let var = (p.min(q), p.max(q));
            for (g, a) in prod.terms() {
                let e = table
                    .entry((jp, jq, g))
                    .or_default()
                    .entry(var)
                    .or_insert_with(Rat::zero);
                *e += a;
            }
        }
    }
    for i in 0..m {
        for j in i..m {
            for (g, _) in c0.get(i, j).terms().chain(c1.get(i, j).terms()) {
                table.entry((i, j, g)).or_default();
            }
        }
    }

    let mut constraints = Vec::with_capacity(table.len());
    for ((i, j, g), vars) in table {
        let terms: Vec<(usize, usize, Rat)> = vars
            .into_iter()
            .filter(|(_, a)| !a.is_zero())
            .map(|((p, q), a)| (p, q, a))
            .collect();
        let t0 = c0.get(i, j).coeff(g);
        let t1 = c1.get(i, j).coeff(g);
        if terms.is_empty() {
            if t0.is_zero() && t1.is_zero() {
                continue;
            }
            return Err(Error::IncompleteSupport(format!(
                "target coefficient at block ({i}, {j}), element {} has no Gram contribution",
                ball.element(g)
            )));
        }
        constraints.push(Constraint {
            block: (i, j),
            element: g,
            terms,
            c0: t0,
            c1: t1,
        });
    }
    let degenerate = constraints.iter().all(|c| c.c1.is_zero());
    let eps_cap = opts
        .eps_cap
        .clone()
        .unwrap_or_else(|| rat::int(2) * lap.l1_norm());
    Ok(SosProblem {
        mode,
        fingerprint: c.fingerprint(),
        basis,
        constraints,
        eps_cap,
        degenerate,
    })
}

/// An exact PSD matrix `U` with `A(U) = -c₁`, so that `Q + t·U` certifies `ε - t`
/// whenever `Q` certifies `ε`.
pub fn order_unit(c: &ChainComplexData, problem: &SosProblem) -> Result<Vec<Vec<Rat>>> {
    let basis = &problem.basis;
    let n = basis.len();
    let mut u = vec![vec![Rat::zero(); n]; n];
    let pos = |g: usize, j: usize| basis.entries.iter().position(|&e| e == (g, j));
    let ball = problem_ball(c, basis.half_radius)?;
    match problem.mode {
        SosMode::BracketTn(_) => {
            let size = rat::int(ball.prefix_len(basis.half_radius) as i64);
            for (p, row) in u.iter_mut().enumerate() {
                row[p] = rat::int(1) / &size;
            }
        }
        SosMode::OzawaT => {
            let p = c.presentation();
            for s in 0..p.rank() {
                let g = ball
                    .index_of(&p.generator(s))
                    .expect("generators lie in every ball of radius at least 1");
                if g != 0 {
                    let i = pos(g, 0).expect("generator in support basis");
                    u[i][i] += rat::int(1);
                }
            }
        }
        SosMode::ParenTn(_) => {
            let delta0 = c.laplacian_auto(0)?.matrix.get(0, 0).transfer(&ball)?;
            for j in 0..basis.module_rank {
                let v: Vec<(usize, Rat)> = delta0
                    .terms()
                    .filter(|(g, _)| *g != 0)
                    .map(|(g, a)| (pos(g, j).expect("Δ₀ support in basis"), a.clone()))
                    .collect();
                for (a, x) in &v {
                    for (b, y) in &v {
                        u[*a][*b] += x * y;
                    }
                }
            }
        }
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::parse_presentation;
    use crate::rat::int;
    use crate::resolution::{build_presentation_complex, cyclic_resolution};

    fn cyclic(n: u64, top: usize) -> ChainComplexData {
        let p = Arc::new(parse_presentation(&format!("gens t; backend cyclic {n}")).unwrap());
        let b = Ball::enumerate(p, Radius::Full, 1000).unwrap();
        cyclic_resolution(n, top, &b).unwrap()
    }

    fn integers() -> ChainComplexData {
        let p = Arc::new(parse_presentation("gens t; backend free").unwrap());
        let b = Ball::enumerate(p.clone(), Radius::Finite(1), 1000).unwrap();
        build_presentation_complex(p, &b).unwrap()
    }

    #[test]
    fn basis_sizes() {
        let c = cyclic(3, 2);
        let ball = problem_ball(&c, 1).unwrap();
        let b = build_support_basis(&ball, 1, BasisKind::Ideal, 1);
        assert_eq!(b.entries, vec![(1, 0), (2, 0)]);
        let z = integers();
        let zb = problem_ball(&z, 1).unwrap();
        assert_eq!(build_support_basis(&zb, 1, BasisKind::Group, 1).len(), 3);
        assert_eq!(build_support_basis(&zb, 1, BasisKind::Ideal, 2).len(), 4);
    }

    #[test]
    fn z3_ozawa_table() {
        let c = cyclic(3, 2);
        let p = encode(&c, SosMode::OzawaT, &EncodeOptions::default()).unwrap();
        assert_eq!(p.gram_size(), 2);
        assert_eq!(p.constraints.len(), 3);
        // every variable contributes 2e - t - t² to the form
        let e = &p.constraints[0];
        assert_eq!(e.element, 0);
        assert_eq!(e.terms, vec![(0, 0, int(2)), (0, 1, int(2)), (1, 1, int(2))]);
        assert_eq!((e.c0.clone(), e.c1.clone()), (int(6), int(-2)));
        for c in &p.constraints[1..] {
            assert_eq!(c.terms, vec![(0, 0, int(-1)), (0, 1, int(-1)), (1, 1, int(-1))]);
            assert_eq!((c.c0.clone(), c.c1.clone()), (int(-3), int(1)));
        }
        assert!(!p.degenerate);
        assert_eq!(p.eps_cap, int(8));
    }

    #[test]
    fn z3_bracket_target() {
        let c = cyclic(3, 2);
        let p = encode(&c, SosMode::BracketTn(1), &EncodeOptions::default()).unwrap();
        let targets: Vec<(usize, Rat, Rat)> = p
            .constraints
            .iter()
            .map(|c| (c.element, c.c0.clone(), c.c1.clone()))
            .collect();
        assert_eq!(
            targets,
            vec![(0, int(5), int(-1)), (1, int(2), int(0)), (2, int(2), int(0))]
        );
    }

    #[test]
    fn trivial_group_is_degenerate() {
        let c = cyclic(1, 2);
        let p = encode(&c, SosMode::OzawaT, &EncodeOptions::default()).unwrap();
        assert!(p.degenerate);
        assert!(p.constraints.is_empty());
    }

    #[test]
    fn radius_checks() {
        let z = integers();
        let opts = EncodeOptions {
            half_radius: Some(1),
            ..Default::default()
        };
        // Δ₀² has support radius 2, so d = 1 is enough
        assert!(encode(&z, SosMode::OzawaT, &opts).is_ok());
        let c = cyclic(3, 2);
        let err = encode(&c, SosMode::BracketTn(2), &EncodeOptions::default()).unwrap_err();
        assert!(matches!(err, Error::TruncatedDegree { degree: 2, .. }));
        let forced = EncodeOptions {
            assert_resolution: true,
            ..Default::default()
        };
        assert!(encode(&c, SosMode::BracketTn(2), &forced).is_ok());
    }

    #[test]
    fn order_unit_matches_c1() {
        let c = cyclic(3, 3);
        for mode in [SosMode::OzawaT, SosMode::BracketTn(1), SosMode::ParenTn(1), SosMode::ParenTn(2)] {
            let p = encode(&c, mode, &EncodeOptions::default()).unwrap();
            let u = order_unit(&c, &p).unwrap();
            for (r, con) in p.residuals(&u, &int(0)).iter().zip(&p.constraints) {
                assert_eq!(r + &con.c0, -con.c1.clone(), "{mode:?}");
            }
        }
    }
}
