//! Exact arithmetic in the rational group ring QΓ and in matrices over it.
//!
//! Elements are finitely supported on a [`Ball`]; products are written into an
//! explicitly supplied output ball so that support growth stays visible.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_traits::{Signed, Zero};

use crate::ball::Ball;
use crate::error::{parse_err, Error, Result};
use crate::group::Element;
use crate::rat::{self, Rat};

#[derive(Clone, Debug)]
pub struct GroupRingElement {
    ball: Arc<Ball>,
    coeffs: BTreeMap<usize, Rat>,
}

impl PartialEq for GroupRingElement {
    fn eq(&self, other: &Self) -> bool {
        self.ball.same_as(&other.ball) && self.coeffs == other.coeffs
    }
}

fn check_ball(a: &Ball, b: &Ball) -> Result<()> {
    if a.same_as(b) {
        Ok(())
    } else {
        Err(Error::BallMismatch)
    }
}

fn outside(ball: &Ball, x: &Element) -> Error {
    Error::RadiusTooSmall {
        what: format!("element {x} lies outside the radius-{} ball", ball.radius()),
        minimal: None,
    }
}

impl GroupRingElement {
    pub fn zero(ball: &Arc<Ball>) -> Self {
        GroupRingElement {
            ball: ball.clone(),
            coeffs: BTreeMap::new(),
        }
    }

    pub fn one(ball: &Arc<Ball>) -> Self {
        Self::basis(ball, 0)
    }

    pub fn basis(ball: &Arc<Ball>, index: usize) -> Self {
        Self::from_terms(ball, [(index, rat::int(1))])
    }

    /// Sums the given terms; repeated indices accumulate and zeros are dropped.
    pub fn from_terms(ball: &Arc<Ball>, terms: impl IntoIterator<Item = (usize, Rat)>) -> Self {
        let mut coeffs: BTreeMap<usize, Rat> = BTreeMap::new();
        for (i, q) in terms {
            assert!(i < ball.len(), "index {i} outside ball of size {}", ball.len());
            *coeffs.entry(i).or_insert_with(Rat::zero) += q;
        }
        coeffs.retain(|_, q| !q.is_zero());
        GroupRingElement {
            ball: ball.clone(),
            coeffs,
        }
    }

    pub fn from_element(ball: &Arc<Ball>, x: &Element) -> Result<Self> {
        let i = ball.index_of(x).ok_or_else(|| outside(ball, x))?;
        Ok(Self::basis(ball, i))
    }

    pub fn ball(&self) -> &Arc<Ball> {
        &self.ball
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, &Rat)> {
        self.coeffs.iter().map(|(&i, q)| (i, q))
    }

    pub fn coeff(&self, i: usize) -> Rat {
        self.coeffs.get(&i).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn support_len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest word length in the support (0 for the zero element).
    pub fn support_radius(&self) -> usize {
        self.coeffs
            .keys()
            .map(|&i| self.ball.word_length(i))
            .max()
            .unwrap_or(0)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_ball(&self.ball, &other.ball)?;
        let mut out = self.clone();
        for (&i, q) in &other.coeffs {
            let e = out.coeffs.entry(i).or_insert_with(Rat::zero);
            *e += q;
            if e.is_zero() {
                out.coeffs.remove(&i);
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&rat::int(-1))
    }

    pub fn scale(&self, q: &Rat) -> Self {
        if q.is_zero() {
            return Self::zero(&self.ball);
        }
        GroupRingElement {
            ball: self.ball.clone(),
            coeffs: self.coeffs.iter().map(|(&i, c)| (i, c * q)).collect(),
        }
    }

    /// Convolution product `Σ a(x) b(y) · xy`, written into `out`.
    pub fn mul(&self, other: &Self, out: &Arc<Ball>) -> Result<Self> {
        let group = out.group();
        let mut coeffs: BTreeMap<usize, Rat> = BTreeMap::new();
        for (&x, a) in &self.coeffs {
            let xe = self.ball.element(x);
            for (&y, b) in &other.coeffs {
                let z = group.mul(xe, other.ball.element(y));
                let zi = out.index_of(&z).ok_or_else(|| Error::RadiusTooSmall {
                    what: format!(
                        "product of supports of radius {} and {} does not fit the radius-{} output ball",
                        self.support_radius(),
                        other.support_radius(),
                        out.radius()
                    ),
                    minimal: None,
                })?;
                *coeffs.entry(zi).or_insert_with(Rat::zero) += a * b;
            }
        }
        coeffs.retain(|_, q| !q.is_zero());
        Ok(GroupRingElement {
            ball: out.clone(),
            coeffs,
        })
    }

    /// The involution `(Σ a_g g)* = Σ a_g g⁻¹` (rational coefficients).
    pub fn star(&self) -> Self {
        GroupRingElement {
            ball: self.ball.clone(),
            coeffs: self
                .coeffs
                .iter()
                .map(|(&i, q)| (self.ball.inverse_index(i), q.clone()))
                .collect(),
        }
    }

    pub fn l1_norm(&self) -> Rat {
        self.coeffs.values().map(|q| q.abs()).sum()
    }

    /// Sum of coefficients.
    pub fn augmentation(&self) -> Rat {
        self.coeffs.values().sum()
    }

    /// Re-expresses the element over another ball of the same group.
    pub fn transfer(&self, to: &Arc<Ball>) -> Result<Self> {
        if Arc::ptr_eq(&self.ball, to) {
            return Ok(self.clone());
        }
        let mut coeffs = BTreeMap::new();
        for (&i, q) in &self.coeffs {
            let j = to
                .transfer_index(&self.ball, i)
                .ok_or_else(|| outside(to, self.ball.element(i)))?;
            coeffs.insert(j, q.clone());
        }
        Ok(GroupRingElement {
            ball: to.clone(),
            coeffs,
        })
    }

    /// Parses `q1*g[i1] + q2*g[i2] + ...` (or `0`) against `ball`.
    pub fn parse(text: &str, ball: &Arc<Ball>) -> Result<Self> {
        let text = text.trim();
        if text == "0" {
            return Ok(Self::zero(ball));
        }
        let mut terms = Vec::new();
        let normalized = text.replace(" - ", " + -");
        for term in normalized.split(" + ") {
            let term = term.trim();
            let (q, g) = term
                .split_once("*g[")
                .ok_or_else(|| parse_err(0, format!("bad group ring term `{term}`")))?;
            let q = rat::parse(q).ok_or_else(|| parse_err(0, format!("bad coefficient `{q}`")))?;
            let i: usize = g
                .strip_suffix(']')
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| parse_err(0, format!("bad element index in `{term}`")))?;
            if i >= ball.len() {
                return Err(parse_err(0, format!("element index {i} outside ball of size {}", ball.len())));
            }
            terms.push((i, q));
        }
        Ok(Self::from_terms(ball, terms))
    }
}

impl fmt::Display for GroupRingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .map(|(i, q)| format!("{}*g[{i}]", rat::fmt(q)))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Dense matrix of group ring elements over one shared ball.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupRingMatrix {
    rows: usize,
    cols: usize,
    ball: Arc<Ball>,
    entries: Vec<GroupRingElement>,
}

impl GroupRingMatrix {
    pub fn zeros(ball: &Arc<Ball>, rows: usize, cols: usize) -> Self {
        GroupRingMatrix {
            rows,
            cols,
            ball: ball.clone(),
            entries: vec![GroupRingElement::zero(ball); rows * cols],
        }
    }

    pub fn identity(ball: &Arc<Ball>, n: usize) -> Self {
        Self::scalar(&GroupRingElement::one(ball), n)
    }

    /// `a` times the `n x n` identity.
    pub fn scalar(a: &GroupRingElement, n: usize) -> Self {
        let mut m = Self::zeros(a.ball(), n, n);
        for i in 0..n {
            m.entries[i * n + i] = a.clone();
        }
        m
    }

    pub fn from_rows(ball: &Arc<Ball>, rows: Vec<Vec<GroupRingElement>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut entries = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::ShapeMismatch("ragged rows".into()));
            }
            for e in row {
                check_ball(ball, e.ball())?;
                entries.push(e);
            }
        }
        Ok(GroupRingMatrix {
            rows: r,
            cols: c,
            ball: ball.clone(),
            entries,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn ball(&self) -> &Arc<Ball> {
        &self.ball
    }

    pub fn get(&self, i: usize, j: usize) -> &GroupRingElement {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: GroupRingElement) -> Result<()> {
        check_ball(&self.ball, value.ball())?;
        self.entries[i * self.cols + j] = value;
        Ok(())
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &GroupRingElement)> {
        self.entries
            .iter()
            .enumerate()
            .map(move |(k, e)| (k / self.cols.max(1), k % self.cols.max(1), e))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(GroupRingElement::is_zero)
    }

    /// First nonzero entry in row-major order.
    pub fn first_nonzero(&self) -> Option<(usize, usize, &GroupRingElement)> {
        self.entries().find(|(_, _, e)| !e.is_zero())
    }

    pub fn support_radius(&self) -> usize {
        self.entries.iter().map(|e| e.support_radius()).max().unwrap_or(0)
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch(format!(
                "{:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        check_ball(&self.ball, &other.ball)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.add(b))
            .collect::<Result<_>>()?;
        Ok(GroupRingMatrix { entries, ..self.clone() })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&rat::int(-1)))
    }

    pub fn scale(&self, q: &Rat) -> Self {
        GroupRingMatrix {
            entries: self.entries.iter().map(|e| e.scale(q)).collect(),
            ..self.clone()
        }
    }

    /// Matrix product over QΓ, written into `out`.
    pub fn mul(&self, other: &Self, out: &Arc<Ball>) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch(format!(
                "cannot multiply {:?} by {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let mut result = Self::zeros(out, self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = GroupRingElement::zero(out);
                for k in 0..self.cols {
                    let (a, b) = (self.get(i, k), other.get(k, j));
                    if a.is_zero() || b.is_zero() {
                        continue;
                    }
                    acc = acc.add(&a.mul(b, out)?)?;
                }
                result.entries[i * other.cols + j] = acc;
            }
        }
        Ok(result)
    }

    /// Left multiplication of every entry by the scalar `a`.
    pub fn left_scalar_mul(&self, a: &GroupRingElement, out: &Arc<Ball>) -> Result<Self> {
        let entries = self
            .entries
            .iter()
            .map(|e| a.mul(e, out))
            .collect::<Result<_>>()?;
        Ok(GroupRingMatrix {
            rows: self.rows,
            cols: self.cols,
            ball: out.clone(),
            entries,
        })
    }

    /// Right multiplication of every entry by the scalar `a`.
    pub fn right_scalar_mul(&self, a: &GroupRingElement, out: &Arc<Ball>) -> Result<Self> {
        let entries = self
            .entries
            .iter()
            .map(|e| e.mul(a, out))
            .collect::<Result<_>>()?;
        Ok(GroupRingMatrix {
            rows: self.rows,
            cols: self.cols,
            ball: out.clone(),
            entries,
        })
    }

    /// Plain transpose, without the involution.
    pub fn transpose(&self) -> Self {
        let mut entries = Vec::with_capacity(self.entries.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                entries.push(self.get(i, j).clone());
            }
        }
        GroupRingMatrix {
            rows: self.cols,
            cols: self.rows,
            ball: self.ball.clone(),
            entries,
        }
    }

    /// Transpose followed by the entrywise involution.
    pub fn star(&self) -> Self {
        let mut t = self.transpose();
        for e in t.entries.iter_mut() {
            *e = e.star();
        }
        t
    }

    /// Max over rows of the summed ℓ¹ norms of the entries.
    pub fn l1_norm(&self) -> Rat {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j).l1_norm()).sum::<Rat>())
            .max()
            .unwrap_or_else(Rat::zero)
    }

    pub fn transfer(&self, to: &Arc<Ball>) -> Result<Self> {
        let entries = self
            .entries
            .iter()
            .map(|e| e.transfer(to))
            .collect::<Result<_>>()?;
        Ok(GroupRingMatrix {
            rows: self.rows,
            cols: self.cols,
            ball: to.clone(),
            entries,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ball::Radius;
    use crate::group::parse_presentation;
    use crate::rat::{frac, int};

    fn ball(src: &str, r: usize) -> Arc<Ball> {
        Ball::enumerate(Arc::new(parse_presentation(src).unwrap()), Radius::Finite(r), 10_000).unwrap()
    }

    fn z_elem(b: &Arc<Ball>, terms: &[(i64, i64)]) -> GroupRingElement {
        // (exponent of t, coefficient) in the integers
        use crate::group::Letter;
        let g = b.group().clone();
        GroupRingElement::from_terms(
            b,
            terms.iter().map(|&(e, c)| {
                let l = Letter::new(0, e < 0);
                let mut x = g.identity();
                for _ in 0..e.unsigned_abs() {
                    x = g.mul(&x, &g.letter(l));
                }
                (b.index_of(&x).unwrap(), int(c))
            }),
        )
    }

    #[test]
    fn add_examples() {
        let b = ball("gens t; backend free", 2);
        let x = z_elem(&b, &[(0, 1), (1, -1)]);
        let y = z_elem(&b, &[(0, 1), (-1, -1)]);
        assert_eq!(x.add(&y).unwrap(), z_elem(&b, &[(0, 2), (1, -1), (-1, -1)]));
        assert!(x.add(&x.neg()).unwrap().is_zero());
        let h = GroupRingElement::from_terms(&b, [(0, frac(3, 2))]);
        let k = GroupRingElement::from_terms(&b, [(0, frac(1, 2))]);
        assert_eq!(h.add(&k).unwrap(), GroupRingElement::from_terms(&b, [(0, int(2))]));
    }

    #[test]
    fn ball_mismatch() {
        let b1 = ball("gens t; backend free", 1);
        let b2 = ball("gens t; backend free", 2);
        let e1 = GroupRingElement::one(&b1);
        let e2 = GroupRingElement::one(&b2);
        assert_eq!(e1.add(&e2), Err(Error::BallMismatch));
    }

    #[test]
    fn mul_examples() {
        let b = ball("gens t; backend free", 2);
        let one_minus_t = z_elem(&b, &[(0, 1), (1, -1)]);
        let p = one_minus_t.mul(&one_minus_t.star(), &b).unwrap();
        assert_eq!(p, z_elem(&b, &[(0, 2), (1, -1), (-1, -1)]));
        let e = GroupRingElement::one(&b);
        assert_eq!(e.mul(&one_minus_t, &b).unwrap(), one_minus_t);

        let z3 = ball("gens t; backend cyclic 3", 1);
        let n = GroupRingElement::from_terms(&z3, (0..3).map(|i| (i, int(1))));
        assert_eq!(n.mul(&n, &z3).unwrap(), n.scale(&int(3)));
    }

    #[test]
    fn mul_radius_too_small() {
        let b = ball("gens t; backend free", 1);
        let t = z_elem(&b, &[(1, 1)]);
        assert!(matches!(t.mul(&t, &b), Err(Error::RadiusTooSmall { .. })));
    }

    #[test]
    fn star_and_norms() {
        let b = ball("gens t; backend free", 2);
        let t2 = z_elem(&b, &[(1, 2)]);
        assert_eq!(t2.star(), z_elem(&b, &[(-1, 2)]));
        let lap = z_elem(&b, &[(0, 2), (1, -1), (-1, -1)]);
        assert_eq!(lap.star(), lap);
        assert_eq!(lap.l1_norm(), int(4));
        assert_eq!(GroupRingElement::zero(&b).l1_norm(), int(0));
        assert_eq!(lap.augmentation(), int(0));
        assert_eq!(z_elem(&b, &[(0, 1), (1, -1)]).augmentation(), int(0));
    }

    #[test]
    fn serialization_roundtrip() {
        let b = ball("gens t; backend free", 2);
        let x = GroupRingElement::from_terms(&b, [(0, frac(-3, 4)), (3, int(2))]);
        let s = x.to_string();
        assert_eq!(s, "-3/4*g[0] + 2*g[3]");
        assert_eq!(GroupRingElement::parse(&s, &b).unwrap(), x);
        assert!(GroupRingElement::parse("0", &b).unwrap().is_zero());
        assert!(GroupRingElement::parse("1*g[99]", &b).is_err());
    }

    #[test]
    fn matrix_identity_and_star() {
        let b = ball("gens t; backend cyclic 3", 1);
        let x = GroupRingElement::from_terms(&b, [(1, int(2)), (0, int(-1))]);
        let a = GroupRingMatrix::from_rows(
            &b,
            vec![vec![x.clone(), GroupRingElement::one(&b)], vec![x.star(), x.clone()]],
        )
        .unwrap();
        let id = GroupRingMatrix::identity(&b, 2);
        assert_eq!(id.mul(&a, &b).unwrap(), a);
        assert_eq!(a.star().star(), a);
        assert_eq!(a.l1_norm(), int(6));
        let bad = GroupRingMatrix::zeros(&b, 3, 1);
        assert!(matches!(a.mul(&bad, &b), Err(Error::ShapeMismatch(_))));
    }
}
