//! Sparse SDPA (`.dat-s`) export and import of [`SosProblem`]s.
//!
//! The Gram matrix is block 1. ε is split as `ε⁺ - ε⁻` over two 1x1 blocks so
//! the file stays in standard dual form: maximise `F₀ • Y` subject to
//! `Fᵢ • Y = cᵢ`. Problem metadata and exact values of non-decimal rationals
//! travel in `*@` comment lines that other readers ignore.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::Zero;

use crate::error::{parse_err, Error, Result};
use crate::rat::{self, Rat};
use crate::sos::{BasisKind, Constraint, SosMode, SosProblem, SupportBasis};

/// Decimal text for `q` if it has one, otherwise a float approximation plus
/// the exact value to be recorded separately.
fn number(q: &Rat) -> (String, Option<String>) {
    match rat::fmt_decimal(q) {
        Some(s) => (s, None),
        None => (format!("{:e}", rat::to_f64(q)), Some(rat::fmt(q))),
    }
}

pub fn export_sdpa(p: &SosProblem) -> String {
    let mut s = String::new();
    let n = p.gram_size();
    let _ = writeln!(s, "* sum-of-squares Gram problem: maximise eps = e+ - e-");
    let _ = writeln!(s, "*@mode {} {}", p.mode.name(), p.degree());
    let _ = writeln!(s, "*@fingerprint {}", p.fingerprint);
    let _ = writeln!(s, "*@eps-cap {}", rat::fmt(&p.eps_cap));
    let _ = writeln!(s, "*@degenerate {}", p.degenerate as u8);
    let _ = writeln!(
        s,
        "*@basis {} {} {}",
        p.basis.kind, p.basis.half_radius, p.basis.module_rank
    );
    for chunk in p.basis.entries.chunks(16) {
        let items: Vec<String> = chunk.iter().map(|(g, j)| format!("{g}:{j}")).collect();
        let _ = writeln!(s, "*@basis-entries {}", items.join(" "));
    }
    for c in &p.constraints {
        let _ = writeln!(s, "*@constraint {} {} {}", c.block.0, c.block.1, c.element);
    }
    let _ = writeln!(s, "{}", p.constraints.len());
    let _ = writeln!(s, "3");
    let _ = writeln!(s, "{} 1 1", n);
    let mut cvec = Vec::with_capacity(p.constraints.len());
    for (i, c) in p.constraints.iter().enumerate() {
        let (text, exact) = number(&c.c0);
        if let Some(e) = exact {
            let _ = writeln!(s, "*@exact-c {} {e}", i + 1);
        }
        cvec.push(text);
    }
    let _ = writeln!(s, "{}", cvec.join(" "));
    let _ = writeln!(s, "0 2 1 1 1");
    let _ = writeln!(s, "0 3 1 1 -1");
    let half = rat::frac(1, 2);
    for (i, c) in p.constraints.iter().enumerate() {
        let mut line = |block: usize, r: usize, col: usize, v: &Rat| {
            let (text, exact) = number(v);
            if let Some(e) = exact {
                let _ = writeln!(s, "*@exact {e}");
            }
            let _ = writeln!(s, "{} {block} {r} {col} {text}", i + 1);
        };
        for (pp, q, a) in &c.terms {
            let v = if pp == q { a.clone() } else { a * &half };
            line(1, pp + 1, q + 1, &v);
        }
        if !c.c1.is_zero() {
            line(2, 1, 1, &-c.c1.clone());
            line(3, 1, 1, &c.c1);
        }
    }
    s
}

struct Meta {
    mode: Option<SosMode>,
    fingerprint: Option<String>,
    eps_cap: Option<Rat>,
    degenerate: Option<bool>,
    basis: Option<(BasisKind, usize, usize)>,
    entries: Vec<(usize, usize)>,
    ids: Vec<(usize, usize, usize)>,
    exact_c: BTreeMap<usize, Rat>,
}

fn parse_usize(s: Option<&str>, line: usize, what: &str) -> Result<usize> {
    s.and_then(|x| x.parse().ok())
        .ok_or_else(|| parse_err(line, format!("bad {what}")))
}

/// Reads a problem written by [`export_sdpa`]; the result equals the original.
pub fn import_sdpa(text: &str) -> Result<SosProblem> {
    let mut meta = Meta {
        mode: None,
        fingerprint: None,
        eps_cap: None,
        degenerate: None,
        basis: None,
        entries: Vec::new(),
        ids: Vec::new(),
        exact_c: BTreeMap::new(),
    };
    let mut data: Vec<(usize, &str, Option<Rat>)> = Vec::new();
    let mut pending_exact: Option<Rat> = None;
    for (idx, raw) in text.lines().enumerate() {
        let ln = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("*@") {
            let mut it = rest.split_whitespace();
            let key = it.next().unwrap_or("");
            match key {
                "mode" => {
                    let name = it.next().unwrap_or("");
                    let k = parse_usize(it.next(), ln, "degree")?;
                    meta.mode = Some(SosMode::from_parts(name, k).ok_or_else(|| parse_err(ln, "bad mode"))?);
                }
                "fingerprint" => meta.fingerprint = it.next().map(str::to_string),
                "eps-cap" => {
                    meta.eps_cap = Some(it.next().and_then(rat::parse).ok_or_else(|| parse_err(ln, "bad cap"))?)
                }
                "degenerate" => meta.degenerate = Some(it.next() == Some("1")),
                "basis" => {
                    let kind = it
                        .next()
                        .and_then(|k| k.parse().ok())
                        .ok_or_else(|| parse_err(ln, "bad basis kind"))?;
                    let d = parse_usize(it.next(), ln, "half radius")?;
                    let m = parse_usize(it.next(), ln, "module rank")?;
                    meta.basis = Some((kind, d, m));
                }
                "basis-entries" => {
                    for item in it {
                        let (g, j) = item.split_once(':').ok_or_else(|| parse_err(ln, "bad basis entry"))?;
                        meta.entries.push((
                            parse_usize(Some(g), ln, "basis element")?,
                            parse_usize(Some(j), ln, "basis row")?,
                        ));
                    }
                }
                "constraint" => {
                    let i = parse_usize(it.next(), ln, "block row")?;
                    let j = parse_usize(it.next(), ln, "block column")?;
                    let g = parse_usize(it.next(), ln, "element")?;
                    meta.ids.push((i, j, g));
                }
                "exact" => {
                    pending_exact = Some(it.next().and_then(rat::parse).ok_or_else(|| parse_err(ln, "bad exact value"))?);
                }
                "exact-c" => {
                    let i = parse_usize(it.next(), ln, "index")?;
                    let v = it.next().and_then(rat::parse).ok_or_else(|| parse_err(ln, "bad exact value"))?;
                    meta.exact_c.insert(i, v);
                }
                _ => {}
            }
            continue;
        }
        if line.starts_with('*') || line.starts_with('"') {
            continue;
        }
        data.push((ln, line, pending_exact.take()));
    }

    let missing = |what: &str| parse_err(0, format!("missing {what} metadata"));
    let mode = meta.mode.ok_or_else(|| missing("mode"))?;
    let (kind, half_radius, module_rank) = meta.basis.ok_or_else(|| missing("basis"))?;
    let mut rows = data.into_iter();
    let mut next = |what: &str| rows.next().ok_or_else(|| parse_err(0, format!("truncated file: expected {what}")));

    let (ln, l, _) = next("constraint count")?;
    let m: usize = l.split_whitespace().next().and_then(|x| x.parse().ok()).ok_or_else(|| parse_err(ln, "bad constraint count"))?;
    let (ln, l, _) = next("block count")?;
    if l.split_whitespace().next() != Some("3") {
        return Err(parse_err(ln, "expected 3 blocks"));
    }
    let (ln, l, _) = next("block structure")?;
    let sizes: Vec<&str> = l.split(|c: char| c.is_whitespace() || c == ',').filter(|x| !x.is_empty()).collect();
    let n: usize = parse_usize(sizes.first().copied(), ln, "gram block size")?;
    if sizes.get(1..3) != Some(&["1", "1"][..]) {
        return Err(parse_err(ln, "expected block structure `N 1 1`"));
    }
    if m != meta.ids.len() {
        return Err(Error::DimensionMismatch(format!(
            "{m} constraints but {} constraint ids",
            meta.ids.len()
        )));
    }
    if n != meta.entries.len() {
        return Err(Error::DimensionMismatch(format!(
            "gram block {n} but {} basis entries",
            meta.entries.len()
        )));
    }

    let mut c0 = Vec::with_capacity(m);
    if m > 0 {
        let (ln, l, _) = next("objective vector")?;
        for (i, tok) in l.split(|c: char| c.is_whitespace() || c == ',' || c == '{' || c == '}').filter(|x| !x.is_empty()).enumerate() {
            let v = match meta.exact_c.get(&(i + 1)) {
                Some(v) => v.clone(),
                None => rat::parse(tok).ok_or_else(|| parse_err(ln, format!("bad value `{tok}`")))?,
            };
            c0.push(v);
        }
        if c0.len() != m {
            return Err(parse_err(ln, format!("expected {m} objective entries, found {}", c0.len())));
        }
    }

    let mut terms: Vec<BTreeMap<(usize, usize), Rat>> = vec![BTreeMap::new(); m];
    let mut c1: Vec<Rat> = vec![Rat::zero(); m];
    for (ln, l, exact) in rows {
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 5 {
            return Err(parse_err(ln, "expected `matrix block row col value`"));
        }
        let k = parse_usize(Some(f[0]), ln, "matrix index")?;
        let block = parse_usize(Some(f[1]), ln, "block")?;
        let r = parse_usize(Some(f[2]), ln, "row")?;
        let c = parse_usize(Some(f[3]), ln, "column")?;
        let v = match exact {
            Some(v) => v,
            None => rat::parse(f[4]).ok_or_else(|| parse_err(ln, format!("bad value `{}`", f[4])))?,
        };
        if k == 0 {
            continue;
        }
        if k > m {
            return Err(parse_err(ln, "matrix index out of range"));
        }
        match block {
            1 => {
                if r == 0 || c == 0 || r > n || c > n {
                    return Err(parse_err(ln, "entry outside the gram block"));
                }
                let (p, q) = ((r - 1).min(c - 1), (r - 1).max(c - 1));
                let coef = if p == q { v } else { v * rat::int(2) };
                terms[k - 1].insert((p, q), coef);
            }
            2 => c1[k - 1] = -v,
            3 => {}
            _ => return Err(parse_err(ln, "unknown block")),
        }
    }

    let constraints = meta
        .ids
        .iter()
        .zip(terms)
        .zip(c0.into_iter().zip(c1))
        .map(|((&(i, j, g), t), (c0, c1))| Constraint {
            block: (i, j),
            element: g,
            terms: t.into_iter().map(|((p, q), a)| (p, q, a)).collect(),
            c0,
            c1,
        })
        .collect();
    Ok(SosProblem {
        mode,
        fingerprint: meta.fingerprint.unwrap_or_default(),
        basis: SupportBasis {
            kind,
            half_radius,
            module_rank,
            entries: meta.entries,
        },
        constraints,
        eps_cap: meta.eps_cap.ok_or_else(|| missing("eps-cap"))?,
        degenerate: meta.degenerate.unwrap_or(false),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{frac, int};

    fn toy() -> SosProblem {
        SosProblem {
            mode: SosMode::ParenTn(1),
            fingerprint: "ab".into(),
            basis: SupportBasis {
                kind: BasisKind::Ideal,
                half_radius: 1,
                module_rank: 1,
                entries: vec![(1, 0), (2, 0)],
            },
            constraints: vec![
                Constraint {
                    block: (0, 0),
                    element: 0,
                    terms: vec![(0, 0, int(2)), (0, 1, frac(1, 3))],
                    c0: frac(7, 3),
                    c1: int(-1),
                },
                Constraint {
                    block: (0, 0),
                    element: 1,
                    terms: vec![(1, 1, frac(-5, 4))],
                    c0: int(0),
                    c1: int(0),
                },
            ],
            eps_cap: int(8),
            degenerate: false,
        }
    }

    #[test]
    fn roundtrip_exact() {
        let p = toy();
        let text = export_sdpa(&p);
        assert!(text.contains("\n2\n3\n2 1 1\n"));
        assert_eq!(import_sdpa(&text).unwrap(), p);
        assert_eq!(export_sdpa(&import_sdpa(&text).unwrap()), text);
    }

    #[test]
    fn empty_problem_is_header_only() {
        let mut p = toy();
        p.constraints.clear();
        p.basis.entries.clear();
        p.degenerate = true;
        let text = export_sdpa(&p);
        assert!(!text.lines().any(|l| l.starts_with("1 ")));
        assert_eq!(import_sdpa(&text).unwrap(), p);
    }

    #[test]
    fn truncated_file_rejected() {
        let text = export_sdpa(&toy());
        let cut: String = text.lines().take_while(|l| l.starts_with('*')).map(|l| format!("{l}\n")).collect();
        assert!(import_sdpa(&(cut + "2\n3\n")).is_err());
    }
}
