//! Breadth-first balls in the Cayley graph of a presented group.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::group::{Element, Letter, Presentation};

pub const DEFAULT_BALL_CAP: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Radius {
    Finite(usize),
    /// The whole group; only terminates for finite groups.
    Full,
}

/// Elements of word length at most `radius` with respect to `S ∪ S⁻¹`.
///
/// Elements are ordered by (word length, discovery order); index 0 is the identity.
#[derive(Debug)]
pub struct Ball {
    group: Arc<Presentation>,
    radius: usize,
    full: bool,
    elements: Vec<Element>,
    word_length: Vec<usize>,
    index: HashMap<Element, usize>,
    inverse: Vec<usize>,
    /// `edges[x][2 * s + inv]` is the index of `x · s^{±1}` when it lies in the ball.
    edges: Vec<Vec<Option<usize>>>,
}

impl Ball {
    pub fn enumerate(group: Arc<Presentation>, radius: Radius, cap: usize) -> Result<Arc<Ball>> {
        let letters: Vec<Letter> = (0..group.rank())
            .flat_map(|g| [Letter::new(g, false), Letter::new(g, true)])
            .collect();
        let letter_elems: Vec<Element> = letters.iter().map(|&l| group.letter(l)).collect();
        let limit = match radius {
            Radius::Finite(r) => r,
            Radius::Full => usize::MAX,
        };

        let id = group.identity();
        let mut elements = vec![id.clone()];
        let mut word_length = vec![0usize];
        let mut index = HashMap::from([(id, 0usize)]);
        let mut frontier = vec![0usize];
        let mut depth = 0usize;
        while !frontier.is_empty() && depth < limit {
            let mut next = Vec::new();
            for &x in &frontier {
                for s in &letter_elems {
                    let y = group.mul(&elements[x], s);
                    if !index.contains_key(&y) {
                        if elements.len() >= cap {
                            return Err(Error::BallBudgetExceeded { cap });
                        }
                        index.insert(y.clone(), elements.len());
                        next.push(elements.len());
                        elements.push(y);
                        word_length.push(depth + 1);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
            depth += 1;
        }
        let radius = match radius {
            Radius::Finite(r) => r,
            Radius::Full => depth,
        };

        let inverse = elements
            .iter()
            .map(|x| index[&group.inverse(x)])
            .collect();
        let edges: Vec<Vec<Option<usize>>> = elements
            .iter()
            .map(|x| {
                letter_elems
                    .iter()
                    .map(|s| index.get(&group.mul(x, s)).copied())
                    .collect()
            })
            .collect();
        // closed under multiplication by generators means it is the whole group
        let full = edges.iter().all(|row| row.iter().all(Option::is_some));
        Ok(Arc::new(Ball {
            group,
            radius,
            full,
            elements,
            word_length,
            index,
            inverse,
            edges,
        }))
    }

    pub fn group(&self) -> &Arc<Presentation> {
        &self.group
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// True when the ball is known to contain the whole (finite) group.
    pub fn is_full(&self) -> bool {
        self.full
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element(&self, i: usize) -> &Element {
        &self.elements[i]
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn index_of(&self, x: &Element) -> Option<usize> {
        self.index.get(x).copied()
    }

    pub fn word_length(&self, i: usize) -> usize {
        self.word_length[i]
    }

    pub fn inverse_index(&self, i: usize) -> usize {
        self.inverse[i]
    }

    pub fn generator_edge(&self, x: usize, gen: usize, inv: bool) -> Option<usize> {
        self.edges[x][2 * gen + inv as usize]
    }

    /// Number of elements of word length at most `r` (a prefix of the ordering).
    pub fn prefix_len(&self, r: usize) -> usize {
        self.word_length.partition_point(|&l| l <= r)
    }

    /// Index of `x · y` for indices of this ball.
    pub fn product_index(&self, x: usize, y: usize) -> Result<usize> {
        let z = self.group.mul(&self.elements[x], &self.elements[y]);
        self.index_of(&z).ok_or_else(|| Error::RadiusTooSmall {
            what: format!(
                "product of elements of length {} and {} leaves the radius-{} ball",
                self.word_length[x], self.word_length[y], self.radius
            ),
            minimal: None,
        })
    }

    /// Index in this ball of an element given by its index in `other` (same group).
    pub fn transfer_index(&self, other: &Ball, i: usize) -> Option<usize> {
        if std::ptr::eq(self, other) {
            return Some(i);
        }
        self.index_of(other.element(i))
    }

    /// Same group and same enumeration.
    pub fn same_as(&self, other: &Ball) -> bool {
        std::ptr::eq(self, other)
            || (self.group == other.group && self.elements == other.elements)
    }
}

impl PartialEq for Ball {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::parse_presentation;

    fn group(src: &str) -> Arc<Presentation> {
        Arc::new(parse_presentation(src).unwrap())
    }

    #[test]
    fn cyclic_three_radius_one() {
        let b = Ball::enumerate(group("gens t; backend cyclic 3"), Radius::Finite(1), 100).unwrap();
        assert_eq!(b.len(), 3);
        assert_eq!(b.element(0), &Element::Residue(0));
        assert!(b.is_full());
    }

    #[test]
    fn integers_radius_two() {
        let b = Ball::enumerate(group("gens t; backend free"), Radius::Finite(2), 100).unwrap();
        assert_eq!(b.len(), 5);
        assert_eq!(b.prefix_len(1), 3);
        assert!(!b.is_full());
    }

    #[test]
    fn s3_full() {
        let g = group("gens a b; rel a^2; rel b^2; rel a b a b a b; backend perm a=(1 2) b=(2 3)");
        let b = Ball::enumerate(g.clone(), Radius::Full, 100).unwrap();
        assert_eq!(b.len(), 6);
        assert_eq!(b.radius(), 3);
        let r5 = Ball::enumerate(g, Radius::Finite(5), 100).unwrap();
        assert_eq!(r5.elements(), b.elements());
    }

    #[test]
    fn budget_exceeded() {
        let err = Ball::enumerate(group("gens a b; backend free"), Radius::Finite(10), 50).unwrap_err();
        assert_eq!(err, Error::BallBudgetExceeded { cap: 50 });
        assert!(Ball::enumerate(group("gens t; backend free"), Radius::Full, 1000).is_err());
    }

    #[test]
    fn product_index_laws() {
        let b = Ball::enumerate(group("gens t; backend cyclic 3"), Radius::Finite(2), 100).unwrap();
        let t = b.index_of(&Element::Residue(1)).unwrap();
        let t2 = b.index_of(&Element::Residue(2)).unwrap();
        assert_eq!(b.product_index(t, t2).unwrap(), 0);
        for x in 0..b.len() {
            assert_eq!(b.product_index(0, x).unwrap(), x);
            assert_eq!(b.product_index(x, b.inverse_index(x)).unwrap(), 0);
        }
        let z = Ball::enumerate(group("gens t; backend free"), Radius::Finite(1), 100).unwrap();
        let t = z.index_of(&Element::Word(vec![Letter::new(0, false)])).unwrap();
        assert!(matches!(z.product_index(t, t), Err(Error::RadiusTooSmall { .. })));
    }

    #[test]
    fn generator_edges_complete() {
        let b = Ball::enumerate(group("gens a b; backend free-abelian"), Radius::Finite(2), 100).unwrap();
        assert_eq!(b.len(), 13);
        for x in 0..b.len() {
            for gen in 0..2 {
                for inv in [false, true] {
                    let inside = b.word_length(x) < 2;
                    if inside {
                        assert!(b.generator_edge(x, gen, inv).is_some());
                    }
                }
            }
        }
    }
}
