use std::collections::HashSet;
use std::sync::Arc;

use kazcert::ball::{Ball, Radius};
use kazcert::certify::gram_expansion;
use kazcert::group::{FreeWord, Letter, Presentation};
use kazcert::presets::{build_complex, preset_presentation};
use kazcert::rat::{int, Rat};
use kazcert::resolution::laplacian;
use kazcert::ring::{GroupRingElement, GroupRingMatrix};
use kazcert::sos::{encode, problem_ball, EncodeOptions, SosMode};
use num_traits::Zero;
use proptest::prelude::*;

const GROUPS: &[&str] = &["z", "z2", "s3", "free:2", "cyclic:5"];

fn group(name: &str) -> Arc<Presentation> {
    Arc::new(preset_presentation(name).unwrap())
}

fn ball(name: &str, r: usize) -> Arc<Ball> {
    Ball::enumerate(group(name), Radius::Finite(r), 100_000).unwrap()
}

fn word(rank: usize) -> impl Strategy<Value = FreeWord> {
    prop::collection::vec((0..rank, any::<bool>()), 0..8)
        .prop_map(|ls| FreeWord(ls.into_iter().map(|(g, inv)| Letter::new(g, inv)).collect()))
}

/// Element with support in the radius-1 ball, written into `b`.
fn element(b: Arc<Ball>) -> impl Strategy<Value = GroupRingElement> {
    let n = b.prefix_len(1);
    prop::collection::vec((0..n, -3i64..=3), 0..5)
        .prop_map(move |ts| GroupRingElement::from_terms(&b, ts.into_iter().map(|(g, c)| (g, int(c)))))
}

fn triple() -> impl Strategy<Value = (Arc<Ball>, GroupRingElement, GroupRingElement, GroupRingElement)> {
    (0..GROUPS.len()).prop_flat_map(|gi| {
        let b = ball(GROUPS[gi], 3);
        (Just(b.clone()), element(b.clone()), element(b.clone()), element(b))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ring_axioms((b, x, y, z) in triple()) {
        let xy = x.mul(&y, &b).unwrap();
        let yz = y.mul(&z, &b).unwrap();
        prop_assert_eq!(xy.mul(&z, &b).unwrap(), x.mul(&yz, &b).unwrap());
        let left = x.mul(&y.add(&z).unwrap(), &b).unwrap();
        prop_assert_eq!(left, xy.add(&x.mul(&z, &b).unwrap()).unwrap());
        // (xy)* = y* x*, x** = x
        prop_assert_eq!(xy.star(), y.star().mul(&x.star(), &b).unwrap());
        prop_assert_eq!(x.star().star(), x.clone());
        prop_assert_eq!(xy.augmentation(), x.augmentation() * y.augmentation());
        let one = GroupRingElement::one(&b);
        prop_assert_eq!(x.mul(&one, &b).unwrap(), x);
    }

    #[test]
    fn evaluation_respects_concatenation(gi in 0..GROUPS.len(), u in word(2), v in word(2)) {
        let p = group(GROUPS[gi]);
        let clamp = |w: &FreeWord| FreeWord(w.0.iter().map(|l| Letter::new(l.gen % p.rank(), l.inv)).collect());
        let (u, v) = (clamp(&u), clamp(&v));
        prop_assert_eq!(p.eval_word(&u.concat(&v)), p.mul(&p.eval_word(&u), &p.eval_word(&v)));
        prop_assert_eq!(p.eval_word(&u.inverse()), p.inverse(&p.eval_word(&u)));
    }

    #[test]
    fn balls_are_closed_under_inversion(gi in 0..GROUPS.len(), r in 0usize..4) {
        let b = ball(GROUPS[gi], r);
        for i in 0..b.len() {
            let j = b.inverse_index(i);
            prop_assert_eq!(b.word_length(i), b.word_length(j));
            prop_assert_eq!(b.inverse_index(j), i);
        }
    }

    #[test]
    fn gram_expansion_matches_constraints(
        mi in 0usize..3,
        n in 2u64..6,
        entries in prop::collection::vec(-4i64..=4, 64),
    ) {
        let mode = [SosMode::OzawaT, SosMode::BracketTn(1), SosMode::ParenTn(1)][mi];
        let c = build_complex(preset_presentation(&format!("cyclic:{n}")).unwrap(), 1).unwrap();
        let p = encode(&c, mode, &EncodeOptions::default()).unwrap();
        let size = p.gram_size();
        let mut q = vec![vec![Rat::zero(); size]; size];
        let mut it = entries.iter().cycle();
        for i in 0..size {
            for j in 0..=i {
                let x = int(*it.next().unwrap());
                q[i][j] = x.clone();
                q[j][i] = x;
            }
        }
        let b = problem_ball(&c, p.half_radius()).unwrap();
        let expansion = gram_expansion(&p.basis, &q, &b).unwrap();
        let mut seen = HashSet::new();
        for con in &p.constraints {
            let (i, j) = con.block;
            let lhs: Rat = con.terms.iter().map(|(a, b, x)| x * &q[*a][*b]).sum();
            prop_assert_eq!(expansion.get(i, j).coeff(con.element), lhs);
            seen.insert((i, j, con.element));
            // the Gram form is self-adjoint
            let ginv = b.inverse_index(con.element);
            prop_assert_eq!(expansion.get(j, i).coeff(ginv), expansion.get(i, j).coeff(con.element));
        }
        for (i, j, e) in expansion.entries() {
            if i <= j {
                for (g, _) in e.terms() {
                    prop_assert!(seen.contains(&(i, j, g)));
                }
            }
        }
    }
}

#[test]
fn laplacians_are_self_adjoint_and_commute_with_differentials() {
    for name in ["trivial", "cyclic:2", "cyclic:4", "z", "z2", "s3", "free:2"] {
        let c = build_complex(preset_presentation(name).unwrap(), 2).unwrap();
        for k in 0..=c.top_degree() {
            let lap = c.laplacian_auto(k).unwrap().matrix;
            assert_eq!(lap.star(), lap, "{name} Δ_{k}");
        }
        for k in 1..=c.top_degree() {
            if !(c.has_full_laplacian(k) && c.has_full_laplacian(k - 1)) {
                continue;
            }
            let radius = c.laplacian_radius(k).max(c.laplacian_radius(k - 1))
                + c.differential(k).unwrap().support_radius();
            let out = c.product_ball(radius).unwrap();
            let dk = c.differential(k).unwrap().transpose().transfer(&out).unwrap();
            let lk = laplacian(&c, k, &out).unwrap().matrix;
            let lk1 = laplacian(&c, k - 1, &out).unwrap().matrix;
            assert_eq!(lk.mul(&dk, &out).unwrap(), dk.mul(&lk1, &out).unwrap(), "{name} degree {k}");
        }
    }
}

#[test]
fn periodic_differentials_repeat() {
    for n in 1..=6u64 {
        let c = build_complex(preset_presentation(&format!("cyclic:{n}")).unwrap(), 5).unwrap();
        for k in 1..=c.top_degree() - 2 {
            assert_eq!(c.differential(k), c.differential(k + 2), "cyclic:{n} degree {k}");
        }
        let out = c.ball();
        let d1: &GroupRingMatrix = c.differential(1).unwrap();
        let d2 = c.differential(2).unwrap();
        assert!(d1.mul(d2, out).unwrap().is_zero());
    }
}
