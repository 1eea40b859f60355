//! Finite presentations and exact group arithmetic for the supported backends.
//!
//! A [`Presentation`] names generators and relators and carries a backend that
//! gives every group element a canonical form ([`Element`]), so equality of
//! elements is decidable. Supported backends are free groups (reduced words),
//! free abelian groups (exponent vectors), cyclic groups (residues),
//! permutation groups and integer matrix groups.
//!
//! Text grammar, one statement per line or separated by `;`, `#` starts a
//! comment:
//!
//! ```text
//! gens a b
//! rel a b a^-1 b^-1
//! backend free | free-abelian | cyclic <n> | perm a=(1 2) b=(2 3) | zmat a=[1 1; 0 1] ...
//! ```

use std::collections::HashMap;
use std::fmt;

use crate::error::{parse_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub gen: usize,
    pub inv: bool,
}

impl Letter {
    pub fn new(gen: usize, inv: bool) -> Self {
        Letter { gen, inv }
    }

    pub fn inverse(self) -> Self {
        Letter {
            gen: self.gen,
            inv: !self.inv,
        }
    }
}

/// A word in the generators and their inverses. The empty word is the identity.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct FreeWord(pub Vec<Letter>);

impl FreeWord {
    pub fn identity() -> Self {
        FreeWord(Vec::new())
    }

    pub fn letter(gen: usize) -> Self {
        FreeWord(vec![Letter::new(gen, false)])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_reduced(&self) -> bool {
        self.0.windows(2).all(|w| w[0] != w[1].inverse())
    }

    pub fn reduced(&self) -> FreeWord {
        let mut out: Vec<Letter> = Vec::with_capacity(self.0.len());
        for &l in &self.0 {
            if out.last() == Some(&l.inverse()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        FreeWord(out)
    }

    pub fn inverse(&self) -> FreeWord {
        FreeWord(self.0.iter().rev().map(|l| l.inverse()).collect())
    }

    pub fn concat(&self, other: &FreeWord) -> FreeWord {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        FreeWord(v)
    }

    /// Renders with the given generator names, collapsing runs into powers.
    pub fn display(&self, names: &[String]) -> String {
        if self.0.is_empty() {
            return "1".to_string();
        }
        let mut parts = Vec::new();
        let mut i = 0;
        while i < self.0.len() {
            let l = self.0[i];
            let mut run = 1;
            while i + run < self.0.len() && self.0[i + run] == l {
                run += 1;
            }
            let exp = if l.inv { -(run as i64) } else { run as i64 };
            if exp == 1 {
                parts.push(names[l.gen].clone());
            } else {
                parts.push(format!("{}^{}", names[l.gen], exp));
            }
            i += run;
        }
        parts.join(" ")
    }
}

/// Canonical form of a group element. Equal values denote equal elements.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Element {
    Word(Vec<Letter>),
    Exponents(Vec<i64>),
    Residue(u64),
    Perm(Vec<u32>),
    Matrix(Vec<i64>),
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Word(w) => {
                let s: Vec<String> = w
                    .iter()
                    .map(|l| format!("x{}{}", l.gen, if l.inv { "'" } else { "" }))
                    .collect();
                write!(f, "[{}]", s.join(" "))
            }
            Element::Exponents(v) => write!(f, "{v:?}"),
            Element::Residue(r) => write!(f, "{r}"),
            Element::Perm(p) => {
                let p: Vec<u32> = p.iter().map(|x| x + 1).collect();
                write!(f, "{p:?}")
            }
            Element::Matrix(m) => write!(f, "{m:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Backend {
    Free,
    FreeAbelian,
    Cyclic(u64),
    /// Images of the generators as 0-based image arrays on `degree` points.
    Permutation { degree: usize, images: Vec<Vec<u32>> },
    /// Row-major `dim x dim` integer matrices of determinant ±1, with inverses.
    IntegerMatrix {
        dim: usize,
        images: Vec<Vec<i64>>,
        inverses: Vec<Vec<i64>>,
    },
}

impl Backend {
    pub fn is_finite(&self) -> bool {
        matches!(self, Backend::Cyclic(_) | Backend::Permutation { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Presentation {
    pub generators: Vec<String>,
    pub relators: Vec<FreeWord>,
    pub backend: Backend,
    /// Relators from this index on were added by the backend (e.g. `t^n` for cyclic groups).
    implicit_from: usize,
}

impl Presentation {
    /// Builds and validates a presentation from parts.
    pub fn new(generators: Vec<String>, relators: Vec<FreeWord>, backend: Backend) -> Result<Self> {
        let mut p = Presentation {
            implicit_from: relators.len(),
            generators,
            relators,
            backend,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn explicit_relators(&self) -> &[FreeWord] {
        &self.relators[..self.implicit_from]
    }

    pub fn max_relator_len(&self) -> usize {
        self.relators.iter().map(FreeWord::len).max().unwrap_or(0)
    }

    fn validate(&mut self) -> Result<()> {
        let n = self.generators.len();
        for (i, g) in self.generators.iter().enumerate() {
            if self.generators[..i].contains(g) {
                return Err(Error::Backend(format!("generator `{g}` declared twice")));
            }
        }
        for (index, r) in self.relators.iter().enumerate() {
            if let Some(l) = r.0.iter().find(|l| l.gen >= n) {
                return Err(Error::UndeclaredGenerator(format!("#{}", l.gen)));
            }
            if !r.is_reduced() {
                return Err(Error::UnreducedRelator {
                    index,
                    text: r.display(&self.generators),
                });
            }
        }
        match &self.backend {
            Backend::Cyclic(order) => {
                if n != 1 {
                    return Err(Error::Backend("cyclic backend needs exactly one generator".into()));
                }
                if *order == 0 {
                    return Err(Error::Backend("cyclic order must be positive".into()));
                }
                let power = FreeWord(vec![Letter::new(0, false); *order as usize]);
                if !self.relators.contains(&power) {
                    self.relators.push(power);
                }
            }
            Backend::Permutation { degree, images } => {
                if images.len() != n {
                    return Err(Error::Backend("every generator needs a permutation image".into()));
                }
                for img in images {
                    if img.len() != *degree {
                        return Err(Error::Backend("permutation images of unequal degree".into()));
                    }
                }
            }
            Backend::IntegerMatrix { dim, images, inverses } => {
                if images.len() != n || inverses.len() != n {
                    return Err(Error::Backend("every generator needs a matrix image".into()));
                }
                for (m, mi) in images.iter().zip(inverses) {
                    if m.len() != dim * dim || mi.len() != dim * dim {
                        return Err(Error::Backend("matrix images of unequal size".into()));
                    }
                }
            }
            Backend::Free | Backend::FreeAbelian => {}
        }
        for (index, r) in self.relators.iter().enumerate() {
            if self.eval_word(r) != self.identity() {
                return Err(Error::BackendRelatorViolation {
                    index,
                    text: r.display(&self.generators),
                });
            }
        }
        Ok(())
    }

    pub fn identity(&self) -> Element {
        match &self.backend {
            Backend::Free => Element::Word(Vec::new()),
            Backend::FreeAbelian => Element::Exponents(vec![0; self.rank()]),
            Backend::Cyclic(_) => Element::Residue(0),
            Backend::Permutation { degree, .. } => Element::Perm((0..*degree as u32).collect()),
            Backend::IntegerMatrix { dim, .. } => {
                let mut m = vec![0; dim * dim];
                for i in 0..*dim {
                    m[i * dim + i] = 1;
                }
                Element::Matrix(m)
            }
        }
    }

    pub fn letter(&self, l: Letter) -> Element {
        match &self.backend {
            Backend::Free => Element::Word(vec![l]),
            Backend::FreeAbelian => {
                let mut v = vec![0; self.rank()];
                v[l.gen] = if l.inv { -1 } else { 1 };
                Element::Exponents(v)
            }
            Backend::Cyclic(n) => Element::Residue(if l.inv { (n - 1) % n } else { 1 % n }),
            Backend::Permutation { images, .. } => {
                let p = images[l.gen].clone();
                Element::Perm(if l.inv { invert_perm(&p) } else { p })
            }
            Backend::IntegerMatrix { images, inverses, .. } => Element::Matrix(if l.inv {
                inverses[l.gen].clone()
            } else {
                images[l.gen].clone()
            }),
        }
    }

    pub fn generator(&self, gen: usize) -> Element {
        self.letter(Letter::new(gen, false))
    }

    pub fn mul(&self, x: &Element, y: &Element) -> Element {
        match (x, y) {
            (Element::Word(a), Element::Word(b)) => {
                let mut out = a.clone();
                for &l in b {
                    if out.last() == Some(&l.inverse()) {
                        out.pop();
                    } else {
                        out.push(l);
                    }
                }
                Element::Word(out)
            }
            (Element::Exponents(a), Element::Exponents(b)) => {
                Element::Exponents(a.iter().zip(b).map(|(s, t)| s + t).collect())
            }
            (Element::Residue(a), Element::Residue(b)) => {
                let n = match self.backend {
                    Backend::Cyclic(n) => n,
                    _ => unreachable!("residue element outside cyclic backend"),
                };
                Element::Residue((a + b) % n)
            }
            // x then y
            (Element::Perm(a), Element::Perm(b)) => {
                Element::Perm(a.iter().map(|&i| b[i as usize]).collect())
            }
            (Element::Matrix(a), Element::Matrix(b)) => {
                let dim = (a.len() as f64).sqrt() as usize;
                let mut c = vec![0i64; dim * dim];
                for i in 0..dim {
                    for k in 0..dim {
                        let aik = a[i * dim + k];
                        if aik == 0 {
                            continue;
                        }
                        for j in 0..dim {
                            let t = aik
                                .checked_mul(b[k * dim + j])
                                .and_then(|t| t.checked_add(c[i * dim + j]))
                                .expect("integer matrix entry overflow");
                            c[i * dim + j] = t;
                        }
                    }
                }
                Element::Matrix(c)
            }
            _ => panic!("elements from different backends"),
        }
    }

    pub fn inverse(&self, x: &Element) -> Element {
        match x {
            Element::Word(w) => Element::Word(w.iter().rev().map(|l| l.inverse()).collect()),
            Element::Exponents(v) => Element::Exponents(v.iter().map(|e| -e).collect()),
            Element::Residue(r) => {
                let n = match self.backend {
                    Backend::Cyclic(n) => n,
                    _ => unreachable!(),
                };
                Element::Residue((n - r % n) % n)
            }
            Element::Perm(p) => Element::Perm(invert_perm(p)),
            Element::Matrix(m) => {
                let dim = (m.len() as f64).sqrt() as usize;
                Element::Matrix(int_matrix_inverse(m, dim).expect("group element not invertible"))
            }
        }
    }

    /// Canonical element of the image of `w` in the group.
    pub fn eval_word(&self, w: &FreeWord) -> Element {
        let mut acc = self.identity();
        for &l in &w.0 {
            acc = self.mul(&acc, &self.letter(l));
        }
        acc
    }

    /// Parses a word in this presentation's generators.
    pub fn parse_word(&self, text: &str) -> Result<FreeWord> {
        parse_word(text, &self.generators)
    }

    /// Canonical text form; re-parsing yields an equal presentation.
    pub fn to_text(&self) -> String {
        let mut s = format!("gens {}\n", self.generators.join(" "));
        for r in self.explicit_relators() {
            s.push_str(&format!("rel {}\n", r.display(&self.generators)));
        }
        s.push_str("backend ");
        match &self.backend {
            Backend::Free => s.push_str("free"),
            Backend::FreeAbelian => s.push_str("free-abelian"),
            Backend::Cyclic(n) => s.push_str(&format!("cyclic {n}")),
            Backend::Permutation { images, .. } => {
                s.push_str("perm");
                for (name, img) in self.generators.iter().zip(images) {
                    s.push_str(&format!(" {name}={}", cycle_notation(img)));
                }
            }
            Backend::IntegerMatrix { dim, images, .. } => {
                s.push_str("zmat");
                for (name, m) in self.generators.iter().zip(images) {
                    let rows: Vec<String> = m
                        .chunks(*dim)
                        .map(|r| r.iter().map(i64::to_string).collect::<Vec<_>>().join(" "))
                        .collect();
                    s.push_str(&format!(" {name}=[{}]", rows.join(", ")));
                }
            }
        }
        s.push('\n');
        s
    }
}

fn invert_perm(p: &[u32]) -> Vec<u32> {
    let mut inv = vec![0u32; p.len()];
    for (i, &j) in p.iter().enumerate() {
        inv[j as usize] = i as u32;
    }
    inv
}

fn cycle_notation(p: &[u32]) -> String {
    let mut seen = vec![false; p.len()];
    let mut out = String::new();
    for start in 0..p.len() {
        if seen[start] || p[start] as usize == start {
            continue;
        }
        let mut cycle = Vec::new();
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            cycle.push((i + 1).to_string());
            i = p[i] as usize;
        }
        out.push_str(&format!("({})", cycle.join(" ")));
    }
    if out.is_empty() {
        "()".to_string()
    } else {
        out
    }
}

/// Exact inverse of an integer matrix with determinant ±1.
fn int_matrix_inverse(m: &[i64], dim: usize) -> Option<Vec<i64>> {
    use crate::rat::{int, Rat};
    use num_traits::{ToPrimitive, Zero};
    let mut a: Vec<Vec<Rat>> = (0..dim)
        .map(|i| {
            let mut row: Vec<Rat> = (0..dim).map(|j| int(m[i * dim + j])).collect();
            row.extend((0..dim).map(|j| int((i == j) as i64)));
            row
        })
        .collect();
    for col in 0..dim {
        let piv = (col..dim).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        let p = a[col][col].clone();
        for x in a[col].iter_mut() {
            *x /= &p;
        }
        for r in 0..dim {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                let pivot_row = a[col].clone();
                for (x, y) in a[r].iter_mut().zip(pivot_row) {
                    *x -= &f * y;
                }
            }
        }
    }
    let mut out = Vec::with_capacity(dim * dim);
    for row in &a {
        for x in &row[dim..] {
            if !x.is_integer() {
                return None;
            }
            out.push(x.to_integer().to_i64()?);
        }
    }
    Some(out)
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parses juxtaposed generator letters with optional `^<int>` exponents.
/// Longest-match lexing lets `aba^-1` and `a b a^-1` denote the same word.
pub fn parse_word(text: &str, names: &[String]) -> Result<FreeWord> {
    let mut letters = Vec::new();
    for token in text.split_whitespace() {
        if token == "1" {
            continue;
        }
        let mut rest = token;
        while !rest.is_empty() {
            let gen = names
                .iter()
                .enumerate()
                .filter(|(_, n)| rest.starts_with(n.as_str()))
                .max_by_key(|(_, n)| n.len())
                .map(|(i, _)| i);
            let Some(gen) = gen else {
                let name: String = rest
                    .chars()
                    .take_while(|c| c.is_ascii_alphanumeric() || *c == '_')
                    .collect();
                return Err(Error::UndeclaredGenerator(if name.is_empty() {
                    rest.to_string()
                } else {
                    name
                }));
            };
            rest = &rest[names[gen].len()..];
            let mut exp: i64 = 1;
            if let Some(after) = rest.strip_prefix('^') {
                let end = after
                    .char_indices()
                    .find(|&(i, c)| !(c.is_ascii_digit() || (i == 0 && (c == '-' || c == '+'))))
                    .map(|(i, _)| i)
                    .unwrap_or(after.len());
                exp = after[..end]
                    .parse()
                    .map_err(|_| Error::UndeclaredGenerator(format!("bad exponent in `{token}`")))?;
                rest = &after[end..];
            }
            let l = Letter::new(gen, exp < 0);
            letters.extend(std::iter::repeat_n(l, exp.unsigned_abs() as usize));
        }
    }
    Ok(FreeWord(letters))
}

/// Splits on `;` and newlines outside brackets, dropping `#` comments.
fn statements(text: &str) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        let mut depth = 0i32;
        let mut cur = String::new();
        for c in line.chars() {
            match c {
                '[' | '(' => depth += 1,
                ']' | ')' => depth -= 1,
                _ => {}
            }
            if c == ';' && depth <= 0 {
                out.push((lineno + 1, std::mem::take(&mut cur)));
            } else {
                cur.push(c);
            }
        }
        out.push((lineno + 1, cur));
    }
    out.retain(|(_, s)| !s.trim().is_empty());
    out
}

/// Splits `a=<value> b=<value> ...` into (name, value) pairs.
fn assignments(text: &str, line: usize) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    let bytes: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
            i += 1;
        }
        let name: String = bytes[start..i].iter().collect();
        if !is_ident(&name) || i >= bytes.len() || bytes[i] != '=' {
            return Err(parse_err(line, format!("expected `name=` in `{}`", text.trim())));
        }
        i += 1;
        let vstart = i;
        while i < bytes.len() && !(bytes[i].is_ascii_alphabetic() || bytes[i] == '_') {
            i += 1;
        }
        out.push((name, bytes[vstart..i].iter().collect::<String>().trim().to_string()));
    }
    Ok(out)
}

fn parse_cycles(value: &str, line: usize) -> Result<Vec<Vec<u32>>> {
    let mut cycles = Vec::new();
    let mut rest = value.trim();
    while !rest.is_empty() {
        let open = rest
            .strip_prefix('(')
            .ok_or_else(|| parse_err(line, format!("bad cycle notation `{value}`")))?;
        let close = open
            .find(')')
            .ok_or_else(|| parse_err(line, format!("unclosed cycle in `{value}`")))?;
        let pts: Vec<u32> = open[..close]
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<u32>().map_err(|_| parse_err(line, format!("bad point `{s}`"))))
            .collect::<Result<_>>()?;
        if pts.contains(&0) {
            return Err(parse_err(line, "permutation points are 1-based"));
        }
        cycles.push(pts);
        rest = open[close + 1..].trim_start();
    }
    Ok(cycles)
}

fn cycles_to_images(cycles: &[Vec<u32>], degree: usize, line: usize) -> Result<Vec<u32>> {
    let mut img: Vec<u32> = (0..degree as u32).collect();
    let mut used = vec![false; degree];
    for c in cycles {
        for (k, &p) in c.iter().enumerate() {
            let p0 = (p - 1) as usize;
            if used[p0] {
                return Err(parse_err(line, format!("point {p} repeated in cycle notation")));
            }
            used[p0] = true;
            img[p0] = c[(k + 1) % c.len()] - 1;
        }
    }
    Ok(img)
}

/// Parses the presentation text grammar.
pub fn parse_presentation(text: &str) -> Result<Presentation> {
    let mut gens: Option<Vec<String>> = None;
    let mut rel_texts: Vec<(usize, String)> = Vec::new();
    let mut backend_text: Option<(usize, String)> = None;
    for (line, stmt) in statements(text) {
        let stmt = stmt.trim();
        let (kw, rest) = stmt.split_once(char::is_whitespace).unwrap_or((stmt, ""));
        match kw {
            "gens" => {
                if gens.is_some() {
                    return Err(parse_err(line, "duplicate `gens` statement"));
                }
                let names: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
                if let Some(bad) = names.iter().find(|n| !is_ident(n)) {
                    return Err(parse_err(line, format!("invalid generator name `{bad}`")));
                }
                gens = Some(names);
            }
            "rel" => rel_texts.push((line, rest.to_string())),
            "backend" => {
                if backend_text.is_some() {
                    return Err(parse_err(line, "duplicate `backend` statement"));
                }
                backend_text = Some((line, rest.trim().to_string()));
            }
            other => return Err(parse_err(line, format!("unknown statement `{other}`"))),
        }
    }
    let gens = gens.ok_or_else(|| parse_err(0, "missing `gens` statement"))?;
    let relators = rel_texts
        .iter()
        .map(|(_, t)| parse_word(t, &gens))
        .collect::<Result<Vec<_>>>()?;
    let (bline, btext) = backend_text.unwrap_or((0, "free".to_string()));
    let (bkw, brest) = btext.split_once(char::is_whitespace).unwrap_or((&btext, ""));
    let backend = match bkw {
        "free" => Backend::Free,
        "free-abelian" => Backend::FreeAbelian,
        "cyclic" => {
            let n: u64 = brest
                .trim()
                .parse()
                .map_err(|_| parse_err(bline, format!("bad cyclic order `{brest}`")))?;
            Backend::Cyclic(n)
        }
        "perm" => {
            let assigns = assignments(brest, bline)?;
            let by_name: HashMap<&str, Vec<Vec<u32>>> = assigns
                .iter()
                .map(|(n, v)| Ok((n.as_str(), parse_cycles(v, bline)?)))
                .collect::<Result<_>>()?;
            for (n, _) in &assigns {
                if !gens.contains(n) {
                    return Err(Error::UndeclaredGenerator(n.clone()));
                }
            }
            let degree = by_name
                .values()
                .flatten()
                .flatten()
                .copied()
                .max()
                .unwrap_or(1) as usize;
            let images = gens
                .iter()
                .map(|g| {
                    let cycles = by_name
                        .get(g.as_str())
                        .ok_or_else(|| Error::Backend(format!("no permutation image for `{g}`")))?;
                    cycles_to_images(cycles, degree, bline)
                })
                .collect::<Result<Vec<_>>>()?;
            Backend::Permutation { degree, images }
        }
        "zmat" => {
            let assigns = assignments(brest, bline)?;
            for (n, _) in &assigns {
                if !gens.contains(n) {
                    return Err(Error::UndeclaredGenerator(n.clone()));
                }
            }
            let mut dim = None;
            let mut images = Vec::new();
            let mut inverses = Vec::new();
            for g in &gens {
                let (_, v) = assigns
                    .iter()
                    .find(|(n, _)| n == g)
                    .ok_or_else(|| Error::Backend(format!("no matrix image for `{g}`")))?;
                let entries: Vec<i64> = v
                    .split(|c: char| !(c.is_ascii_digit() || c == '-'))
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<i64>().map_err(|_| parse_err(bline, format!("bad entry `{s}`"))))
                    .collect::<Result<_>>()?;
                let k = (entries.len() as f64).sqrt().round() as usize;
                if k == 0 || k * k != entries.len() {
                    return Err(parse_err(bline, format!("matrix for `{g}` is not square")));
                }
                if *dim.get_or_insert(k) != k {
                    return Err(Error::Backend("matrix images of unequal size".into()));
                }
                let inv = int_matrix_inverse(&entries, k)
                    .ok_or_else(|| Error::Backend(format!("matrix for `{g}` is not invertible over Z")))?;
                images.push(entries);
                inverses.push(inv);
            }
            Backend::IntegerMatrix {
                dim: dim.unwrap_or(1),
                images,
                inverses,
            }
        }
        other => return Err(parse_err(bline, format!("unknown backend `{other}`"))),
    };
    Presentation::new(gens, relators, backend)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s3() -> Presentation {
        parse_presentation("gens a b; rel a^2; rel b^2; rel a b a b a b; backend perm a=(1 2) b=(2 3)")
            .unwrap()
    }

    #[test]
    fn parses_free_abelian_z2() {
        let p = parse_presentation("gens a b; rel a b a^-1 b^-1; backend free-abelian").unwrap();
        assert_eq!(p.generators, vec!["a", "b"]);
        assert_eq!(p.relators.len(), 1);
        assert_eq!(p.backend, Backend::FreeAbelian);
    }

    #[test]
    fn cyclic_adds_implicit_relator() {
        let p = parse_presentation("gens t; backend cyclic 3").unwrap();
        assert_eq!(p.relators, vec![FreeWord(vec![Letter::new(0, false); 3])]);
        assert!(p.explicit_relators().is_empty());
        let q = parse_presentation("gens t; rel t^3; backend cyclic 3").unwrap();
        assert_eq!(q.relators.len(), 1);
    }

    #[test]
    fn undeclared_generator_rejected() {
        let err = parse_presentation("gens a; rel b").unwrap_err();
        assert_eq!(err, Error::UndeclaredGenerator("b".into()));
    }

    #[test]
    fn unreduced_relator_rejected() {
        let err = parse_presentation("gens a b; rel a b b^-1 a^-1; backend free").unwrap_err();
        assert!(matches!(err, Error::UnreducedRelator { index: 0, .. }));
    }

    #[test]
    fn backend_violation_detected() {
        let err = parse_presentation("gens a b; rel a^3; backend perm a=(1 2) b=(2 3)").unwrap_err();
        assert!(matches!(err, Error::BackendRelatorViolation { index: 0, .. }));
        let err = parse_presentation("gens a; rel a^2; backend free-abelian").unwrap_err();
        assert!(matches!(err, Error::BackendRelatorViolation { .. }));
    }

    #[test]
    fn eval_word_examples() {
        let z3 = parse_presentation("gens t; backend cyclic 3").unwrap();
        let t4 = z3.parse_word("t^4").unwrap();
        assert_eq!(z3.eval_word(&t4), z3.generator(0));

        let f2 = parse_presentation("gens a b; backend free").unwrap();
        let w = f2.parse_word("a b b^-1").unwrap();
        assert_eq!(f2.eval_word(&w), f2.generator(0));

        let s3 = s3();
        let w = s3.parse_word("a b a b a b").unwrap();
        assert_eq!(s3.eval_word(&w), s3.identity());
        // (1 2)(2 3) applied left to right sends 1 -> 2 -> 3
        let ab = s3.eval_word(&s3.parse_word("a b").unwrap());
        assert_eq!(ab, Element::Perm(vec![2, 0, 1]));
    }

    #[test]
    fn juxtaposed_letters_lex() {
        let f2 = parse_presentation("gens a b; backend free").unwrap();
        assert_eq!(f2.parse_word("aba^-1").unwrap(), f2.parse_word("a b a^-1").unwrap());
        assert_eq!(f2.parse_word("a^-2").unwrap().len(), 2);
        assert!(f2.parse_word("1").unwrap().is_empty());
    }

    #[test]
    fn zmat_backend() {
        let p = parse_presentation("gens x y; backend zmat x=[1 1; 0 1] y=[1 0; 1 1]").unwrap();
        let x = p.generator(0);
        let xi = p.inverse(&x);
        assert_eq!(xi, Element::Matrix(vec![1, -1, 0, 1]));
        assert_eq!(p.mul(&x, &xi), p.identity());
        assert!(parse_presentation("gens x; backend zmat x=[2 0; 0 1]").is_err());
    }

    #[test]
    fn text_roundtrip() {
        for src in [
            "gens a b; rel a b a^-1 b^-1; backend free-abelian",
            "gens t; backend cyclic 5",
            "gens a b; rel a^2; rel b^2; rel a b a b a b; backend perm a=(1 2) b=(2 3)",
            "gens x; backend zmat x=[1 1; 0 1]",
        ] {
            let p = parse_presentation(src).unwrap();
            let q = parse_presentation(&p.to_text()).unwrap();
            assert_eq!(p, q);
        }
    }
}
