//! Brute-force (co)homology and specialized Laplacian spectra for finite groups.
//!
//! Modules are finite-dimensional and rational. Every image is closed in finite
//! dimensions, so reduced and ordinary (co)homology agree and the reports test
//! the reduced statements directly.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::ball::Ball;
use crate::error::{Error, Result};
use crate::group::{Backend, Element};
use crate::linalg::{self, SparseEchelon, SparseVec};
use crate::rat::{self, Rat};
use crate::resolution::ChainComplexData;

pub const DEFAULT_BAR_CAP: usize = 1_000_000;
/// Eigenvalues of absolute value at most this count towards the kernel.
pub const KERNEL_THRESHOLD: f64 = 1e-10;

/// Square rational matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct QMat {
    n: usize,
    a: Vec<Rat>,
}

impl QMat {
    pub fn identity(n: usize) -> Self {
        let mut a = vec![Rat::zero(); n * n];
        for i in 0..n {
            a[i * n + i] = Rat::one();
        }
        QMat { n, a }
    }

    pub fn from_rows(rows: Vec<Vec<Rat>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch(format!("matrix with {n} rows is not square")));
        }
        Ok(QMat {
            n,
            a: rows.into_iter().flatten().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Rat {
        &self.a[i * self.n + j]
    }

    pub fn mul(&self, o: &QMat) -> QMat {
        let n = self.n;
        let mut a = vec![Rat::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let x = self.get(i, k);
                if x.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let y = o.get(k, j);
                    if !y.is_zero() {
                        a[i * n + j] += x * y;
                    }
                }
            }
        }
        QMat { n, a }
    }

    pub fn transpose(&self) -> QMat {
        let n = self.n;
        QMat {
            n,
            a: (0..n * n).map(|t| self.get(t % n, t / n).clone()).collect(),
        }
    }

    fn sub(&self, o: &QMat) -> QMat {
        QMat {
            n: self.n,
            a: self.a.iter().zip(&o.a).map(|(x, y)| x - y).collect(),
        }
    }

    fn rows(&self) -> Vec<Vec<Rat>> {
        self.a.chunks(self.n).map(<[Rat]>::to_vec).collect()
    }

    fn rank(&self) -> usize {
        linalg::rank(self.rows().iter().map(|r| linalg::sparse_from_dense(r)))
    }

    fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| rat::to_f64(self.get(i, j)))
    }
}

/// A finite group enumerated from a full ball, with its multiplication table.
#[derive(Debug, Clone)]
pub struct FiniteGroup {
    ball: Arc<Ball>,
    mult: Vec<Vec<usize>>,
}

impl FiniteGroup {
    pub fn new(ball: &Arc<Ball>) -> Result<Self> {
        if !ball.is_full() || !ball.group().backend.is_finite() {
            return Err(Error::Backend("the oracle needs the full ball of a finite group".into()));
        }
        let n = ball.len();
        let mut mult = vec![vec![0; n]; n];
        for (x, row) in mult.iter_mut().enumerate() {
            for (y, z) in row.iter_mut().enumerate() {
                *z = ball.product_index(x, y)?;
            }
        }
        Ok(FiniteGroup { ball: ball.clone(), mult })
    }

    pub fn order(&self) -> usize {
        self.mult.len()
    }

    pub fn ball(&self) -> &Arc<Ball> {
        &self.ball
    }

    fn generator_index(&self, s: usize) -> usize {
        self.ball.generator_edge(0, s, false).expect("full ball contains the generators")
    }
}

/// A finite-dimensional rational Γ-module with an invariant positive definite form.
#[derive(Debug, Clone)]
pub struct FiniteModule {
    pub name: String,
    /// Action of every group element, indexed like the group's ball.
    images: Vec<QMat>,
    form: QMat,
    /// Orthonormal real realization of the action.
    unitary: Option<Vec<DMatrix<f64>>>,
}

impl FiniteModule {
    /// Builds the module from generator actions; checks that they define an action of Γ.
    pub fn from_generators(group: &FiniteGroup, name: &str, gens: Vec<QMat>, form: Option<QMat>) -> Result<Self> {
        let rank = group.ball.group().rank();
        if gens.len() != rank {
            return Err(Error::DimensionMismatch(format!("{} generator matrices for {rank} generators", gens.len())));
        }
        let dim = gens.first().map_or(1, QMat::dim);
        if gens.iter().any(|g| g.dim() != dim) {
            return Err(Error::DimensionMismatch("generator matrices of unequal size".into()));
        }
        let n = group.order();
        let mut images: Vec<Option<QMat>> = vec![None; n];
        images[0] = Some(QMat::identity(dim));
        let mut queue = vec![0usize];
        while let Some(x) = queue.pop() {
            for (s, gs) in gens.iter().enumerate() {
                let z = group.mult[x][group.generator_index(s)];
                let img = images[x].as_ref().expect("queued elements have images").mul(gs);
                match &images[z] {
                    None => {
                        images[z] = Some(img);
                        queue.push(z);
                    }
                    Some(prev) if *prev != img => {
                        return Err(Error::Backend(format!(
                            "module `{name}` is not a Γ-action: element {} has two images",
                            group.ball.element(z)
                        )));
                    }
                    Some(_) => {}
                }
            }
        }
        let images: Vec<QMat> = images
            .into_iter()
            .map(|m| m.ok_or_else(|| Error::Backend("generators do not reach every element".into())))
            .collect::<Result<_>>()?;
        let form = form.unwrap_or_else(|| QMat::identity(dim));
        if form.dim() != dim {
            return Err(Error::DimensionMismatch("invariant form has the wrong size".into()));
        }
        let mut module = FiniteModule {
            name: name.to_string(),
            images,
            form,
            unitary: None,
        };
        module.unitary = module.orthonormal_realization();
        Ok(module)
    }

    pub fn trivial(group: &FiniteGroup) -> Result<Self> {
        let r = group.ball.group().rank();
        Self::from_generators(group, "trivial", vec![QMat::identity(1); r], None)
    }

    /// Left regular module QΓ with basis the group elements.
    pub fn regular(group: &FiniteGroup) -> Result<Self> {
        let n = group.order();
        let gens = (0..group.ball.group().rank())
            .map(|s| {
                let g = group.generator_index(s);
                let mut a = vec![Rat::zero(); n * n];
                for x in 0..n {
                    a[group.mult[g][x] * n + x] = Rat::one();
                }
                QMat { n, a }
            })
            .collect();
        Self::from_generators(group, "reg", gens, None)
    }

    /// Augmentation kernel of QΓ with basis `g - e`, `g ≠ e`.
    pub fn augmentation_kernel(group: &FiniteGroup) -> Result<Self> {
        let n = group.order();
        let dim = n - 1;
        let gens = (0..group.ball.group().rank())
            .map(|s| {
                let h = group.generator_index(s);
                // h(g - e) = (hg - e) - (h - e)
                let mut a = vec![Rat::zero(); dim * dim];
                for g in 1..n {
                    let hg = group.mult[h][g];
                    if hg != 0 {
                        a[(hg - 1) * dim + g - 1] += Rat::one();
                    }
                    if h != 0 {
                        a[(h - 1) * dim + g - 1] -= Rat::one();
                    }
                }
                QMat { n: dim, a }
            })
            .collect();
        let form = QMat {
            n: dim,
            a: (0..dim * dim)
                .map(|t| if t / dim == t % dim { rat::int(2) } else { Rat::one() })
                .collect(),
        };
        Self::from_generators(group, "reg0", gens, Some(form))
    }

    /// One-dimensional sign character: permutation parity, or `t ↦ -1` for even cyclic groups.
    pub fn sign(group: &FiniteGroup) -> Result<Self> {
        let p = group.ball.group();
        let signs: Vec<i64> = match &p.backend {
            Backend::Permutation { .. } => (0..p.rank())
                .map(|s| match group.ball.element(group.generator_index(s)) {
                    Element::Perm(img) => parity(img),
                    _ => 1,
                })
                .collect(),
            Backend::Cyclic(n) if n % 2 == 0 => vec![-1],
            _ => return Err(Error::Backend("no sign character for this group".into())),
        };
        let gens = signs.into_iter().map(|s| QMat { n: 1, a: vec![rat::int(s)] }).collect();
        Self::from_generators(group, "sign", gens, None)
    }

    /// Built-in module by name: `trivial`, `reg`, `reg0` or `sign`.
    pub fn builtin(group: &FiniteGroup, name: &str) -> Result<Self> {
        match name {
            "trivial" => Self::trivial(group),
            "reg" => Self::regular(group),
            "reg0" => Self::augmentation_kernel(group),
            "sign" => Self::sign(group),
            _ => Err(Error::Backend(format!("unknown module `{name}`"))),
        }
    }

    pub fn dim(&self) -> usize {
        self.form.dim()
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary.is_some()
    }

    pub fn action(&self, g: usize) -> &QMat {
        &self.images[g]
    }

    /// `R ρ(g) R⁻¹` with `form = RᵀR`, if the form is invariant and positive definite.
    fn orthonormal_realization(&self) -> Option<Vec<DMatrix<f64>>> {
        for img in &self.images {
            if img.transpose().mul(&self.form).mul(img) != self.form {
                return None;
            }
        }
        let chol = self.form.to_f64().cholesky()?;
        let r = chol.l().transpose();
        let r_inv = r.clone().try_inverse()?;
        let out: Vec<DMatrix<f64>> = self.images.iter().map(|m| &r * m.to_f64() * &r_inv).collect();
        let id = DMatrix::<f64>::identity(self.dim(), self.dim());
        let orthogonal = out.iter().all(|u| (u.transpose() * u - &id).amax() <= 1e-12);
        orthogonal.then_some(out)
    }
}

fn parity(img: &[u32]) -> i64 {
    let mut seen = vec![false; img.len()];
    let mut sign = 1;
    for start in 0..img.len() {
        let mut len = 0;
        let mut x = start;
        while !seen[x] {
            seen[x] = true;
            x = img[x] as usize;
            len += 1;
        }
        if len > 0 && len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

fn check_cap(group: &FiniteGroup, v: &FiniteModule, k: usize, cap: usize) -> Result<()> {
    let needed = (group.order() as u128).pow(k as u32) * v.dim() as u128;
    if needed > cap as u128 {
        return Err(Error::CapExceeded {
            needed: needed.min(usize::MAX as u128) as usize,
            cap,
        });
    }
    Ok(())
}

fn tuples(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..n.pow(k as u32)).map(move |mut t| {
        let mut v = vec![0; k];
        for slot in v.iter_mut().rev() {
            *slot = t % n;
            t /= n;
        }
        v
    })
}

fn tuple_index(n: usize, t: &[usize]) -> usize {
    t.iter().fold(0, |acc, &g| acc * n + g)
}

fn add_entry(v: &mut SparseVec, key: usize, x: Rat) {
    if x.is_zero() {
        return;
    }
    let e = v.entry(key).or_insert_with(Rat::zero);
    *e += x;
    if e.is_zero() {
        v.remove(&key);
    }
}

/// Rank of the inhomogeneous bar coboundary `δ^k: C^k(Γ,V) → C^{k+1}(Γ,V)`.
fn coboundary_rank(group: &FiniteGroup, v: &FiniteModule, k: usize) -> usize {
    let n = group.order();
    let dv = v.dim();
    let mut ech = SparseEchelon::new();
    for t in tuples(n, k) {
        for b in 0..dv {
            // image of the cochain supported at t with value e_b
            let mut col = SparseVec::new();
            for g1 in 0..n {
                let mut full = vec![g1];
                full.extend(&t);
                let base = tuple_index(n, &full) * dv;
                let img = v.action(g1);
                for r in 0..dv {
                    add_entry(&mut col, base + r, img.get(r, b).clone());
                }
            }
            for i in 1..=k {
                // (δf)(.., g_i, g_{i+1}, ..) picks f(.., g_i g_{i+1}, ..)
                let sign = if i % 2 == 0 { Rat::one() } else { -Rat::one() };
                for gi in 0..n {
                    let inv = group.ball.inverse_index(gi);
                    let gj = group.mult[inv][t[i - 1]];
                    let mut full = t[..i - 1].to_vec();
                    full.extend([gi, gj]);
                    full.extend(&t[i..]);
                    add_entry(&mut col, tuple_index(n, &full) * dv + b, sign.clone());
                }
            }
            let sign = if (k + 1) % 2 == 0 { Rat::one() } else { -Rat::one() };
            for g in 0..n {
                let mut full = t.clone();
                full.push(g);
                add_entry(&mut col, tuple_index(n, &full) * dv + b, sign.clone());
            }
            ech.insert(col);
        }
    }
    ech.rank()
}

/// Rank of the bar boundary `∂_k: C_k(Γ,V) → C_{k-1}(Γ,V)` with `v·g = g⁻¹v`.
fn boundary_rank(group: &FiniteGroup, v: &FiniteModule, k: usize) -> usize {
    if k == 0 {
        return 0;
    }
    let n = group.order();
    let dv = v.dim();
    let mut ech = SparseEchelon::new();
    for t in tuples(n, k) {
        for b in 0..dv {
            let mut col = SparseVec::new();
            let img = v.action(group.ball.inverse_index(t[0]));
            let base = tuple_index(n, &t[1..]) * dv;
            for r in 0..dv {
                add_entry(&mut col, base + r, img.get(r, b).clone());
            }
            for i in 1..k {
                let sign = if i % 2 == 0 { Rat::one() } else { -Rat::one() };
                let mut merged = t[..i - 1].to_vec();
                merged.push(group.mult[t[i - 1]][t[i]]);
                merged.extend(&t[i + 1..]);
                add_entry(&mut col, tuple_index(n, &merged) * dv + b, sign);
            }
            let sign = if k % 2 == 0 { Rat::one() } else { -Rat::one() };
            add_entry(&mut col, tuple_index(n, &t[..k - 1]) * dv + b, sign);
            ech.insert(col);
        }
    }
    ech.rank()
}

/// `dim H^k(Γ, V)` from the inhomogeneous bar complex, `k ≤ 2`.
pub fn bar_cohomology(group: &FiniteGroup, v: &FiniteModule, k: usize, cap: usize) -> Result<usize> {
    if k > 2 {
        return Err(Error::TruncatedDegree {
            degree: k,
            reason: "the bar oracle stops at degree 2".into(),
        });
    }
    check_cap(group, v, k, cap)?;
    let dim = group.order().pow(k as u32) * v.dim();
    let below = if k == 0 { 0 } else { coboundary_rank(group, v, k - 1) };
    Ok(dim - coboundary_rank(group, v, k) - below)
}

/// `dim H_k(Γ, V)` from the bar complex, `k ≤ 2`.
pub fn bar_homology(group: &FiniteGroup, v: &FiniteModule, k: usize, cap: usize) -> Result<usize> {
    if k > 2 {
        return Err(Error::TruncatedDegree {
            degree: k,
            reason: "the bar oracle stops at degree 2".into(),
        });
    }
    check_cap(group, v, k, cap)?;
    let dim = group.order().pow(k as u32) * v.dim();
    Ok(dim - boundary_rank(group, v, k) - boundary_rank(group, v, k + 1))
}

/// `dim H^k(Z/n, V)` from the periodic formulas with `t` the generator and `N = Σ tⁱ`.
pub fn cyclic_cohomology(group: &FiniteGroup, v: &FiniteModule, k: usize) -> Result<usize> {
    let Backend::Cyclic(_) = group.ball.group().backend else {
        return Err(Error::Backend("periodic cohomology needs a cyclic group".into()));
    };
    let d = v.dim();
    let t = v.action(group.generator_index(0));
    let t_minus_1 = t.sub(&QMat::identity(d));
    let mut norm = QMat { n: d, a: vec![Rat::zero(); d * d] };
    for img in &v.images {
        norm.a.iter_mut().zip(&img.a).for_each(|(x, y)| *x += y);
    }
    let (r_t, r_n) = (t_minus_1.rank(), norm.rank());
    // odd degrees: ker N / im(t - 1); even positive degrees: ker(t - 1) / im N
    Ok(if k == 0 { d - r_t } else { d - r_t - r_n })
}

/// `Δ_k` with each group element replaced by its orthonormal module action.
pub fn specialized_laplacian(c: &ChainComplexData, v: &FiniteModule, k: usize) -> Result<DMatrix<f64>> {
    let unitary = v
        .unitary
        .as_ref()
        .ok_or_else(|| Error::NotUnitary(format!("module `{}` has no invariant positive definite form", v.name)))?;
    if k > c.top_degree() {
        return Err(Error::TruncatedDegree {
            degree: k,
            reason: format!("complex has top degree {}", c.top_degree()),
        });
    }
    let lap = c.laplacian_auto(k)?;
    let group = c.ball();
    let d = v.dim();
    let m = c.rank(k);
    let mut out = DMatrix::<f64>::zeros(m * d, m * d);
    for (i, j, e) in lap.matrix.entries() {
        for (g, x) in e.terms() {
            let idx = group
                .transfer_index(e.ball(), g)
                .ok_or_else(|| Error::Backend("Laplacian support outside the group".into()))?;
            let block = &unitary[idx] * rat::to_f64(x);
            let mut view = out.view_mut((i * d, j * d), (d, d));
            view += block;
        }
    }
    Ok(out)
}

/// Sorted eigenvalues of the specialized Laplacian.
pub fn laplacian_spectrum(c: &ChainComplexData, v: &FiniteModule, k: usize) -> Result<Vec<f64>> {
    let m = specialized_laplacian(c, v, k)?;
    Ok(spectrum(&m))
}

fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).amax()
}

fn spectrum(m: &DMatrix<f64>) -> Vec<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub ok: bool,
    pub witness: Option<String>,
}

fn verdict(name: &str, ok: bool, witness: impl FnOnce() -> String) -> Verdict {
    Verdict {
        name: name.into(),
        ok,
        witness: (!ok).then(witness),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeReport {
    pub degree: usize,
    pub cohomology: usize,
    pub cohomology_source: String,
    pub homology: Option<usize>,
    pub spectrum: Vec<f64>,
    pub kernel_dim: usize,
    pub min_abs_eigenvalue: f64,
    pub asymmetry: f64,
    pub exact_at_degree: bool,
    pub verdicts: Vec<Verdict>,
}

impl DegreeReport {
    pub fn pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.ok)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub group_order: usize,
    pub module: String,
    pub module_dim: usize,
    /// Images are closed in finite dimensions, so reduced and ordinary (co)homology coincide.
    pub reduced_equals_ordinary: bool,
    pub degrees: Vec<DegreeReport>,
}

impl OracleReport {
    pub fn pass(&self) -> bool {
        self.degrees.iter().all(DegreeReport::pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "oracle: |Γ| = {}, module {} (dim {}); reduced = ordinary in finite dimensions",
            self.group_order, self.module, self.module_dim
        )?;
        for d in &self.degrees {
            let spec: Vec<String> = d.spectrum.iter().map(|x| format!("{x:.6}")).collect();
            writeln!(
                f,
                "degree {}: H^{} = {} ({}), H_{} = {}, dim ker Δ = {}, min |λ| = {:.6e} [{}]",
                d.degree,
                d.degree,
                d.cohomology,
                d.cohomology_source,
                d.degree,
                d.homology.map_or("-".into(), |h| h.to_string()),
                d.kernel_dim,
                d.min_abs_eigenvalue,
                if d.pass() { "PASS" } else { "FAIL" }
            )?;
            writeln!(f, "  spectrum: {}", spec.join(" "))?;
            for v in &d.verdicts {
                match &v.witness {
                    None => writeln!(f, "  ok   {}", v.name)?,
                    Some(w) => writeln!(f, "  FAIL {}: {w}", v.name)?,
                }
            }
        }
        Ok(())
    }
}

/// Compares Laplacian kernels and spectra with brute-force (co)homology.
pub fn cross_check(c: &ChainComplexData, v: &FiniteModule, degrees: &[usize], cap: usize) -> Result<OracleReport> {
    let group = FiniteGroup::new(c.ball())?;
    let mut out = Vec::new();
    for &k in degrees {
        let (cohomology, source, homology) = if k <= 2 {
            (
                bar_cohomology(&group, v, k, cap)?,
                "bar",
                Some(bar_homology(&group, v, k, cap)?),
            )
        } else {
            (cyclic_cohomology(&group, v, k)?, "cyclic-periodic", None)
        };
        let m = specialized_laplacian(c, v, k)?;
        let asym = asymmetry(&m);
        let spec = spectrum(&m);
        let kernel_dim = spec.iter().filter(|x| x.abs() <= KERNEL_THRESHOLD).count();
        let min_abs = spec.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
        let min_eig = spec.first().copied().unwrap_or(0.0);
        let invertible = min_abs > KERNEL_THRESHOLD;
        let verdicts = vec![
            verdict("self-adjoint", asym <= 1e-12, || format!("max |Δ - Δᵀ| = {asym:e}")),
            verdict("nonnegative spectrum", min_eig >= -KERNEL_THRESHOLD, || {
                format!("eigenvalue {min_eig:e}")
            }),
            verdict("dim ker Δ = dim H^k", kernel_dim == cohomology, || {
                format!("dim ker Δ_{k} = {kernel_dim}, dim H^{k} = {cohomology}")
            }),
            verdict("min |spec| > 0 iff H^k = 0", invertible == (cohomology == 0), || {
                format!("min |λ| = {min_abs:e}, dim H^{k} = {cohomology}")
            }),
            verdict(
                "invertible implies both vanish",
                !invertible || (cohomology == 0 && homology.unwrap_or(0) == 0),
                || format!("H^{k} = {cohomology}, H_{k} = {homology:?}"),
            ),
        ];
        out.push(DegreeReport {
            degree: k,
            cohomology,
            cohomology_source: source.into(),
            homology,
            spectrum: spec,
            kernel_dim,
            min_abs_eigenvalue: min_abs,
            asymmetry: asym,
            exact_at_degree: c.is_exact_at(k),
            verdicts,
        });
    }
    Ok(OracleReport {
        group_order: group.order(),
        module: v.name.clone(),
        module_dim: v.dim(),
        reduced_equals_ordinary: true,
        degrees: out,
    })
}

/// Parses a user module: one `dim`-line block of rational rows per generator,
/// blocks separated by blank lines; an optional trailing block `form` gives the invariant form.
pub fn parse_user_module(group: &FiniteGroup, name: &str, text: &str) -> Result<FiniteModule> {
    let mut blocks: Vec<Vec<Vec<Rat>>> = Vec::new();
    let mut current: Vec<Vec<Rat>> = Vec::new();
    let mut form_start = None;
    for (ln, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() || line == "form" {
            if !current.is_empty() {
                blocks.push(std::mem::take(&mut current));
            }
            if line == "form" {
                form_start = Some(blocks.len());
            }
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|x| rat::parse(x).ok_or_else(|| crate::error::parse_err(ln + 1, format!("bad entry `{x}`"))))
            .collect::<Result<Vec<_>>>()?;
        current.push(row);
    }
    if !current.is_empty() {
        blocks.push(current);
    }
    let form = match form_start {
        Some(i) if i + 1 == blocks.len() => Some(QMat::from_rows(blocks.pop().expect("form block"))?),
        Some(_) => return Err(crate::error::parse_err(0, "`form` must be the last block")),
        None => None,
    };
    let gens = blocks.into_iter().map(QMat::from_rows).collect::<Result<Vec<_>>>()?;
    if let Some(f) = &form {
        let ok = linalg::ldl_psd(&f.rows());
        let definite = matches!(&ok, linalg::LdlOutcome::Psd { pivots, .. } if pivots.iter().all(Signed::is_positive));
        if !definite {
            return Err(Error::NotUnitary("invariant form is not positive definite".into()));
        }
    }
    let m = FiniteModule::from_generators(group, name, gens, form)?;
    if !m.is_unitary() {
        return Err(Error::NotUnitary(format!("module `{name}` does not preserve its form")));
    }
    Ok(m)
}
