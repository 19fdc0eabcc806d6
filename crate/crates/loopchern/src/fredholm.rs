//! Finite-dimensional Fredholm modules `(H, Q, c)`, their curvature
//! components, the perturbative Chern character and Bismut–Chern chains.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::barcx::{BarChain, CMatrix};
use crate::multiform::{FormElement, FormError, GeneratorTable, Monomial};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FredholmError {
    #[error("matrix has shape {0}x{1}, expected {2}x{2}")]
    Shape(usize, usize, usize),
    #[error("Q is not odd for the grading")]
    QNotOdd,
    #[error("Q is not hermitian")]
    QNotHermitian,
    #[error("c({0}) has the wrong parity")]
    CParity(String),
    #[error("c is only defined on sigma-free forms")]
    SigmaInC,
    #[error("t must be positive, got {0}")]
    NonPositiveT(f64),
    #[error("p is not idempotent")]
    NotIdempotent,
    #[error("form matrices have incompatible sizes")]
    SizeMismatch,
    #[error("quadrature supports at most {0} insertions")]
    TooManyInsertions(usize),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error("bad model description: {0}")]
    BadModel(String),
}

const PARITY_TOL: f64 = 1e-12;

fn c64(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Grading operator `diag(1, ..., 1, -1, ..., -1)`.
pub fn grading(dim_plus: usize, dim_minus: usize) -> CMatrix {
    let n = dim_plus + dim_minus;
    DMatrix::from_fn(n, n, |i, j| if i != j { c64(0.0) } else if i < dim_plus { c64(1.0) } else { c64(-1.0) })
}

fn block_norms(m: &CMatrix, dim_plus: usize) -> (f64, f64) {
    let mut even = 0.0f64;
    let mut odd = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let v = m[(i, j)].norm();
            if (i < dim_plus) == (j < dim_plus) {
                even = even.max(v);
            } else {
                odd = odd.max(v);
            }
        }
    }
    (even, odd)
}

/// `H = C^{dim_plus} + C^{dim_minus}` with an odd hermitian `Q` and a linear
/// map `c` given on monomials (unassigned monomials map to 0, except `1`
/// which defaults to the identity).
#[derive(Clone, Debug)]
pub struct FredholmModel {
    table: Arc<GeneratorTable>,
    dim_plus: usize,
    dim_minus: usize,
    q: CMatrix,
    c: BTreeMap<Monomial, CMatrix>,
    gamma: CMatrix,
}

impl FredholmModel {
    pub fn new(table: &Arc<GeneratorTable>, dim_plus: usize, dim_minus: usize, q: CMatrix) -> Result<Self, FredholmError> {
        let n = dim_plus + dim_minus;
        if q.nrows() != n || q.ncols() != n {
            return Err(FredholmError::Shape(q.nrows(), q.ncols(), n));
        }
        let scale = 1.0 + q.norm();
        if block_norms(&q, dim_plus).0 > PARITY_TOL * scale {
            return Err(FredholmError::QNotOdd);
        }
        if (&q - q.adjoint()).norm() > PARITY_TOL * scale {
            return Err(FredholmError::QNotHermitian);
        }
        let mut c = BTreeMap::new();
        c.insert(Monomial::one(), DMatrix::identity(n, n));
        Ok(FredholmModel { table: table.clone(), dim_plus, dim_minus, q, c, gamma: grading(dim_plus, dim_minus) })
    }

    /// Sets `c(form) = m` for a single-term, sigma-free form.
    pub fn assign(&mut self, form: &FormElement, m: CMatrix) -> Result<(), FredholmError> {
        let n = self.dim();
        if m.nrows() != n || m.ncols() != n {
            return Err(FredholmError::Shape(m.nrows(), m.ncols(), n));
        }
        let mut terms = form.terms();
        let (mono, coeff) = match (terms.next(), terms.next()) {
            (Some(t), None) => t,
            _ => return Err(FredholmError::BadModel(format!("c key `{form}` is not a single monomial"))),
        };
        if mono.sigma {
            return Err(FredholmError::SigmaInC);
        }
        let (even, odd) = block_norms(&m, self.dim_plus);
        let bad = if self.table.parity_of(mono) { even } else { odd };
        if bad > PARITY_TOL * (1.0 + m.norm()) {
            return Err(FredholmError::CParity(self.table.format_monomial(mono)));
        }
        self.c.insert(mono.clone(), m / coeff.to_c64());
        Ok(())
    }

    pub fn table(&self) -> &Arc<GeneratorTable> {
        &self.table
    }

    /// Explicitly assigned values of `c`, including `c(1)`.
    pub fn assigned(&self) -> impl Iterator<Item = (&Monomial, &CMatrix)> {
        self.c.iter()
    }

    pub fn dim(&self) -> usize {
        self.dim_plus + self.dim_minus
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.dim_plus, self.dim_minus)
    }

    pub fn q(&self) -> &CMatrix {
        &self.q
    }

    pub fn gamma(&self) -> &CMatrix {
        &self.gamma
    }

    pub fn supertrace(&self, a: &CMatrix) -> Complex64 {
        (&self.gamma * a).trace()
    }

    pub fn c_monomial(&self, m: &Monomial) -> CMatrix {
        assert!(!m.sigma, "c applied to a sigma monomial");
        self.c.get(m).cloned().unwrap_or_else(|| DMatrix::zeros(self.dim(), self.dim()))
    }

    /// `c` extended linearly; sigma terms are rejected.
    pub fn c(&self, f: &FormElement) -> Result<CMatrix, FredholmError> {
        let mut out = DMatrix::zeros(self.dim(), self.dim());
        for (m, v) in f.terms() {
            if m.sigma {
                return Err(FredholmError::SigmaInC);
            }
            if let Some(cm) = self.c.get(m) {
                out += cm * v.to_c64();
            }
        }
        Ok(out)
    }

    /// Model `(tQ, c_t)` with `c_t(theta) = t^{|theta|} c(theta)`.
    pub fn rescaled(&self, t: f64) -> FredholmModel {
        let mut out = self.clone();
        out.q = &self.q * c64(t);
        for (m, v) in out.c.iter_mut() {
            *v *= c64(t.powi(self.table.form_degree(m)));
        }
        out
    }

    /// Largest violation of `[Q, c(f)] = c(df)` and `c(f theta) = c(f) c(theta)`
    /// over degree-0 generators `f` and assigned monomials `theta`.
    pub fn relation_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for g in 0..self.table.len() {
            if self.table.degree(g) != 0 {
                continue;
            }
            let f = FormElement::gen(&self.table, g);
            let cf = self.c(&f).expect("sigma-free");
            let lhs = &self.q * &cf - &cf * &self.q;
            let rhs = self.c(&f.d()).expect("sigma-free");
            worst = worst.max((lhs - rhs).norm());
            for m in self.c.keys() {
                let th = FormElement::monomial(&self.table, m.clone(), Scalar::one());
                let prod = self.c(&(&f * &th)).expect("sigma-free");
                worst = worst.max((prod - &cf * self.c_monomial(m)).norm());
            }
        }
        worst
    }

    pub fn curvature(&self) -> Curvature<'_> {
        Curvature { model: self }
    }
}

/// Curvature components `F(empty) = Q^2`, `F(theta)`, `F(theta_1, theta_2)`.
pub struct Curvature<'a> {
    model: &'a FredholmModel,
}

impl Curvature<'_> {
    pub fn f0(&self) -> CMatrix {
        &self.model.q * &self.model.q
    }

    /// `F(m) = c(dm) - [Q, c(m)]` for sigma-free `m`, `F(sigma m) = -c(m)`.
    pub fn f1_monomial(&self, m: &Monomial) -> CMatrix {
        let model = self.model;
        if m.sigma {
            return -model.c_monomial(&m.without_sigma());
        }
        let f = FormElement::monomial(&model.table, m.clone(), Scalar::one());
        let dm = model.c(&f.d()).expect("sigma-free");
        let cm = model.c_monomial(m);
        let comm = if model.table.parity_of(m) { &model.q * &cm + &cm * &model.q } else { &model.q * &cm - &cm * &model.q };
        dm - comm
    }

    /// `F(m1, m2) = (-1)^{|m1|} (c(m1 m2) - c(m1) c(m2))`, zero if either
    /// entry contains sigma.
    pub fn f2_monomial(&self, m1: &Monomial, m2: &Monomial) -> CMatrix {
        let model = self.model;
        let n = model.dim();
        if m1.sigma || m2.sigma {
            return DMatrix::zeros(n, n);
        }
        let prod = match model.table.mul_monomials(m1, m2) {
            Some((s, m)) => model.c_monomial(&m) * c64(s as f64),
            None => DMatrix::zeros(n, n),
        };
        let out = prod - model.c_monomial(m1) * model.c_monomial(m2);
        if model.table.parity_of(m1) {
            -out
        } else {
            out
        }
    }

    pub fn f1(&self, theta: &FormElement) -> CMatrix {
        let n = self.model.dim();
        theta.terms().fold(DMatrix::zeros(n, n), |acc, (m, v)| acc + self.f1_monomial(m) * v.to_c64())
    }

    pub fn f2(&self, a: &FormElement, b: &FormElement) -> CMatrix {
        let n = self.model.dim();
        let mut out = DMatrix::zeros(n, n);
        for (m1, v1) in a.terms() {
            for (m2, v2) in b.terms() {
                out += self.f2_monomial(m1, m2) * (v1 * v2).to_c64();
            }
        }
        out
    }

    /// Component of the given arity on a monomial word (zero for arity >= 3).
    pub fn on_word(&self, w: &[Monomial]) -> CMatrix {
        match w {
            [] => self.f0(),
            [a] => self.f1_monomial(a),
            [a, b] => self.f2_monomial(a, b),
            _ => DMatrix::zeros(self.model.dim(), self.model.dim()),
        }
    }
}

/// How simplex integrals `int_{Delta_k} e^{-tau_0 L} A_1 ... A_k e^{-tau_k L}`
/// are evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Integrator {
    #[default]
    /// Divided differences of `e^{-x}` in an eigenbasis of `L` (hermitian).
    DividedDifferences,
    /// Iterated Gauss–Legendre quadrature with the given number of nodes.
    GaussLegendre(usize),
    /// Exponential of a block upper-triangular transfer matrix.
    Transfer,
}

pub const GL_MAX_INSERTIONS: usize = 4;

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            dp = n as f64 * (x * p - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        xs[i] = 0.5 * (1.0 - x);
        ws[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (xs, ws)
}

/// `int_{Delta_k} exp(-sum tau_j x_j)`, which is `(-1)^k f[x_0, ..., x_k]`
/// for `f(x) = e^{-x}`.
pub fn exp_divided_difference(xs: &[f64]) -> f64 {
    let mut pts = xs.to_vec();
    pts.sort_by(|a, b| a.total_cmp(b));
    dd_sorted(&pts)
}

fn dd_sorted(pts: &[f64]) -> f64 {
    let k = pts.len() - 1;
    let spread = pts[k] - pts[0];
    if spread <= 1.0 {
        return dd_taylor(pts);
    }
    (dd_sorted(&pts[1..]) - dd_sorted(&pts[..k])) / (pts[0] - pts[k])
}

fn dd_taylor(pts: &[f64]) -> f64 {
    const TERMS: usize = 40;
    let k = pts.len() - 1;
    let mu = pts.iter().sum::<f64>() / pts.len() as f64;
    // h[j] = complete homogeneous symmetric polynomial of degree j in the shifted points
    let mut h = vec![0.0; TERMS];
    h[0] = 1.0;
    for &x in pts {
        let y = x - mu;
        for j in 1..TERMS {
            h[j] += y * h[j - 1];
        }
    }
    let mut fact = (1..=k).fold(1.0, |a, i| a * i as f64);
    let mut sum = 0.0;
    for (j, hj) in h.iter().enumerate() {
        let m = k + j;
        if j > 0 {
            fact *= m as f64;
        }
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * hj / fact;
    }
    sum * (-mu).exp()
}

/// `int_{Delta_k} e^{-tau_0 L} A_1 e^{-tau_1 L} ... A_k e^{-tau_k L}`.
pub fn simplex_integral(l: &CMatrix, ops: &[CMatrix], integrator: Integrator) -> Result<CMatrix, FredholmError> {
    match integrator {
        Integrator::DividedDifferences => Ok(simplex_dd(l, ops)),
        Integrator::GaussLegendre(n) => {
            if ops.len() > GL_MAX_INSERTIONS {
                return Err(FredholmError::TooManyInsertions(GL_MAX_INSERTIONS));
            }
            Ok(simplex_gl(l, ops, n))
        }
        Integrator::Transfer => Ok(simplex_transfer(l, ops)),
    }
}

fn hermitian_eigen(l: &CMatrix) -> (Vec<f64>, CMatrix) {
    let h = (l + l.adjoint()) * c64(0.5);
    let eig = h.symmetric_eigen();
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

fn simplex_dd(l: &CMatrix, ops: &[CMatrix]) -> CMatrix {
    let n = l.nrows();
    let (lam, u) = hermitian_eigen(l);
    let ut = u.adjoint();
    let tops: Vec<CMatrix> = ops.iter().map(|a| &ut * a * &u).collect();
    let mut out = DMatrix::<Complex64>::zeros(n, n);
    let mut idx = vec![0usize; ops.len() + 1];
    fn rec(
        depth: usize,
        acc: Complex64,
        idx: &mut Vec<usize>,
        lam: &[f64],
        tops: &[CMatrix],
        out: &mut CMatrix,
    ) {
        if depth == tops.len() {
            let xs: Vec<f64> = idx.iter().map(|&i| lam[i]).collect();
            out[(idx[0], idx[depth])] += acc * exp_divided_difference(&xs);
            return;
        }
        let a = &tops[depth];
        for j in 0..lam.len() {
            let v = a[(idx[depth], j)];
            if v.norm() == 0.0 {
                continue;
            }
            idx[depth + 1] = j;
            rec(depth + 1, acc * v, idx, lam, tops, out);
        }
    }
    for i0 in 0..n {
        idx[0] = i0;
        rec(0, c64(1.0), &mut idx, &lam, &tops, &mut out);
    }
    &u * out * &ut
}

fn simplex_gl(l: &CMatrix, ops: &[CMatrix], nodes: usize) -> CMatrix {
    let n = l.nrows();
    let (lam, u) = hermitian_eigen(l);
    let ut = u.adjoint();
    let tops: Vec<CMatrix> = ops.iter().map(|a| &ut * a * &u).collect();
    let (xs, ws) = gauss_legendre(nodes);
    let scale_cols = |m: &CMatrix, tau: f64| {
        let mut m = m.clone();
        for (j, mut col) in m.column_iter_mut().enumerate() {
            col *= c64((-tau * lam[j]).exp());
        }
        m
    };
    // Nested variables 0 <= u_1 <= ... <= u_k <= 1, tau_j = u_{j+1} - u_j.
    fn rec(
        depth: usize,
        lower: f64,
        prefix: CMatrix,
        weight: f64,
        tops: &[CMatrix],
        xs: &[f64],
        ws: &[f64],
        scale_cols: &dyn Fn(&CMatrix, f64) -> CMatrix,
    ) -> CMatrix {
        if depth == tops.len() {
            return scale_cols(&prefix, 1.0 - lower) * c64(weight);
        }
        let mut acc = DMatrix::zeros(prefix.nrows(), prefix.ncols());
        for (x, w) in xs.iter().zip(ws) {
            let u = lower + (1.0 - lower) * x;
            let next = scale_cols(&prefix, u - lower) * &tops[depth];
            acc += rec(depth + 1, u, next, weight * (1.0 - lower) * w, tops, xs, ws, scale_cols);
        }
        acc
    }
    let id = DMatrix::<Complex64>::identity(n, n);
    let out = if tops.is_empty() {
        scale_cols(&id, 1.0)
    } else {
        let parts: Vec<CMatrix> = xs
            .par_iter()
            .zip(ws.par_iter())
            .map(|(x, w)| {
                let first = scale_cols(&id, *x) * &tops[0];
                rec(1, *x, first, *w, &tops, &xs, &ws, &scale_cols)
            })
            .collect();
        parts.into_iter().fold(DMatrix::zeros(n, n), |a, b| a + b)
    };
    &u * out * &ut
}

fn simplex_transfer(l: &CMatrix, ops: &[CMatrix]) -> CMatrix {
    // exp(-[[L, -A_1, 0, ...], [0, L, -A_2, ...], ...]) has (0, k) block
    // equal to the simplex integral.
    let n = l.nrows();
    let k = ops.len();
    let mut big = DMatrix::<Complex64>::zeros((k + 1) * n, (k + 1) * n);
    for j in 0..=k {
        big.view_mut((j * n, j * n), (n, n)).copy_from(l);
        if j < k {
            big.view_mut((j * n, (j + 1) * n), (n, n)).copy_from(&(-&ops[j]));
        }
    }
    let e = (-big).exp();
    e.view((0, k * n), (n, n)).into_owned()
}

/// Compositions of `n` into parts of size 1 and 2.
pub fn gap_patterns(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in [1usize, 2] {
        if first > n {
            continue;
        }
        for mut rest in gap_patterns(n - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// `Ch_t` on a monomial word: the sum over patterns of consecutive single
/// and double insertions of `(-1)^k int_{Delta_k} Str(...)` for the model
/// `(tQ, c_t)`.
pub fn chern_t(model: &FredholmModel, t: f64, word: &[Monomial], integrator: Integrator) -> Result<Complex64, FredholmError> {
    if t <= 0.0 || !t.is_finite() {
        return Err(FredholmError::NonPositiveT(t));
    }
    let mt = model.rescaled(t);
    let curv = mt.curvature();
    let l = curv.f0();
    if integrator == Integrator::Transfer {
        return Ok(chern_transfer(&mt, word));
    }
    let mut total = c64(0.0);
    for pattern in gap_patterns(word.len()) {
        let mut ops = Vec::with_capacity(pattern.len());
        let mut pos = 0;
        for &g in &pattern {
            ops.push(curv.on_word(&word[pos..pos + g]));
            pos += g;
        }
        if ops.iter().any(|a| a.iter().all(|z| z.norm() == 0.0)) {
            continue;
        }
        let sign = if pattern.len() % 2 == 0 { 1.0 } else { -1.0 };
        total += mt.supertrace(&simplex_integral(&l, &ops, integrator)?) * sign;
    }
    Ok(total)
}

fn chern_transfer(mt: &FredholmModel, word: &[Monomial]) -> Complex64 {
    let curv = mt.curvature();
    let n = mt.dim();
    let len = word.len();
    let l = curv.f0();
    let mut big = DMatrix::<Complex64>::zeros((len + 1) * n, (len + 1) * n);
    for j in 0..=len {
        big.view_mut((j * n, j * n), (n, n)).copy_from(&l);
        if j < len {
            big.view_mut((j * n, (j + 1) * n), (n, n)).copy_from(&curv.on_word(&word[j..j + 1]));
        }
        if j + 1 < len {
            big.view_mut((j * n, (j + 2) * n), (n, n)).copy_from(&curv.on_word(&word[j..j + 2]));
        }
    }
    let e = (-big).exp();
    mt.supertrace(&e.view((0, len * n), (n, n)).into_owned())
}

/// `Ch_t` extended linearly to chains.
pub fn chern_chain(model: &FredholmModel, t: f64, chain: &BarChain, integrator: Integrator) -> Result<Complex64, FredholmError> {
    let mut total = c64(0.0);
    for (w, c) in chain.terms() {
        total += chern_t(model, t, w, integrator)? * c.to_c64();
    }
    Ok(total)
}

/// Truncated Duhamel series `sum_{k <= order} (-1)^k int_{Delta_k} e^{-tau_0 L} V ... V e^{-tau_k L}`.
pub fn duhamel_series(l: &CMatrix, v: &CMatrix, order: usize, integrator: Integrator) -> Result<CMatrix, FredholmError> {
    let mut out = DMatrix::zeros(l.nrows(), l.ncols());
    for k in 0..=order {
        let ops = vec![v.clone(); k];
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        out += simplex_integral(l, &ops, integrator)? * c64(sign);
    }
    Ok(out)
}

/// Square matrix with entries in a form algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct FormMatrix {
    n: usize,
    entries: Vec<FormElement>,
}

impl FormMatrix {
    pub fn new(n: usize, entries: Vec<FormElement>) -> Result<Self, FredholmError> {
        if entries.len() != n * n || n == 0 {
            return Err(FredholmError::SizeMismatch);
        }
        let t = entries[0].table().clone();
        if entries.iter().any(|e| !Arc::ptr_eq(e.table(), &t)) {
            return Err(FormError::TableMismatch.into());
        }
        Ok(FormMatrix { n, entries })
    }

    pub fn parse(table: &Arc<GeneratorTable>, rows: &[Vec<String>]) -> Result<Self, FredholmError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(FredholmError::SizeMismatch);
        }
        let entries = rows.iter().flatten().map(|s| FormElement::parse(table, s)).collect::<Result<Vec<_>, _>>()?;
        Self::new(n, entries)
    }

    pub fn identity(table: &Arc<GeneratorTable>, n: usize) -> Self {
        let entries = (0..n * n)
            .map(|k| if k / n == k % n { FormElement::one(table) } else { FormElement::zero(table) })
            .collect();
        FormMatrix { n, entries }
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> FormElement) -> Result<Self, FredholmError> {
        Self::new(n, (0..n * n).map(|k| f(k / n, k % n)).collect())
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        FormMatrix { n, entries: (0..n * n).map(|k| self.get(k % n, k / n).clone()).collect() }
    }

    /// `(M + M^T) / 2`.
    pub fn symmetrize(&self) -> Self {
        self.add(&self.transpose()).scale(&Scalar::ratio(1, 2))
    }

    pub fn trace(&self) -> FormElement {
        (0..self.n).fold(FormElement::zero(self.table()), |acc, a| &acc + self.get(a, a))
    }

    /// Matrix of constant coefficients.
    pub fn constant_part(&self) -> Vec<Vec<Scalar>> {
        (0..self.n).map(|a| (0..self.n).map(|b| self.get(a, b).constant()).collect()).collect()
    }

    /// `M` minus its constant part.
    pub fn nilpotent_part(&self) -> Self {
        self.map(|e| e - &FormElement::scalar(e.table(), e.constant()))
    }

    pub fn from_scalars(table: &Arc<GeneratorTable>, m: &[Vec<Scalar>]) -> Self {
        let n = m.len();
        FormMatrix { n, entries: (0..n * n).map(|k| FormElement::scalar(table, m[k / n][k % n].clone())).collect() }
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.entries.iter().map(FormElement::max_abs_coeff).fold(0.0, f64::max)
    }

    pub fn table(&self) -> &Arc<GeneratorTable> {
        self.entries[0].table()
    }

    pub fn get(&self, a: usize, b: usize) -> &FormElement {
        &self.entries[a * self.n + b]
    }

    pub fn map(&self, f: impl Fn(&FormElement) -> FormElement) -> Self {
        FormMatrix { n: self.n, entries: self.entries.iter().map(f).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        FormMatrix { n: self.n, entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        FormMatrix { n: self.n, entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect() }
    }

    pub fn scale(&self, s: &Scalar) -> Self {
        self.map(|e| e.scale(s))
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let t = self.table().clone();
        let entries = (0..n * n)
            .map(|k| {
                let (a, c) = (k / n, k % n);
                (0..n).fold(FormElement::zero(&t), |acc, b| &acc + &(self.get(a, b) * other.get(b, c)))
            })
            .collect();
        FormMatrix { n, entries }
    }

    /// Entrywise differential.
    pub fn d(&self) -> Self {
        self.map(FormElement::d)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(FormElement::is_zero)
    }

    pub fn is_idempotent(&self) -> bool {
        self.mul(self) == *self
    }

    /// `(2p - 1) dp + sigma (dp)^2`.
    pub fn bismut_r(&self) -> Self {
        let t = self.table().clone();
        let dp = self.d();
        let two_p_minus_one = self.scale(&Scalar::int(2)).sub(&Self::identity(&t, self.n));
        let sigma = FormElement::sigma(&t);
        two_p_minus_one.mul(&dp).add(&dp.mul(&dp).map(|e| &sigma * e))
    }

    /// Operator `sum_ab E_ab (x) c(theta_ab)` on `C^n (x) H`.
    pub fn lift_c(&self, model: &FredholmModel) -> Result<CMatrix, FredholmError> {
        self.lift(model.dim(), |e| model.c(e))
    }

    fn lift(&self, h: usize, f: impl Fn(&FormElement) -> Result<CMatrix, FredholmError>) -> Result<CMatrix, FredholmError> {
        let n = self.n;
        let mut out = DMatrix::zeros(n * h, n * h);
        for a in 0..n {
            for b in 0..n {
                let e = self.get(a, b);
                if !e.is_zero() {
                    out.view_mut((a * h, b * h), (h, h)).copy_from(&f(e)?);
                }
            }
        }
        Ok(out)
    }
}

impl std::fmt::Display for FormMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for a in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|b| self.get(a, b).to_string()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Truncation of the cyclic chain `sum_N (-1)^N sum_k tr(R^k, sigma p, R^{N-k})`.
#[derive(Clone, Debug)]
pub struct BismutChern {
    pub chain: BarChain,
    pub r: FormMatrix,
    pub n_max: usize,
    /// True when `R = 0`, so that no terms were dropped.
    pub exact: bool,
}

/// Index trace `sum tr(Theta_1, ..., Theta_M)` expanded into monomial words.
pub fn trace_word(entries: &[&FormMatrix]) -> BarChain {
    let table = entries[0].table().clone();
    let n = entries[0].size();
    let m = entries.len();
    let mut out = BarChain::zero(&table);
    let mut idx = vec![0usize; m];
    loop {
        let forms: Vec<FormElement> = (0..m).map(|j| entries[j].get(idx[j], idx[(j + 1) % m]).clone()).collect();
        if forms.iter().all(|f| !f.is_zero()) {
            out = out.add(&BarChain::from_forms(&table, &forms));
        }
        let mut j = 0;
        while j < m {
            idx[j] += 1;
            if idx[j] < n {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
        if j == m {
            break;
        }
    }
    out
}

pub fn bismut_chern(p: &FormMatrix, n_max: usize) -> Result<BismutChern, FredholmError> {
    if !p.is_idempotent() {
        return Err(FredholmError::NotIdempotent);
    }
    let table = p.table().clone();
    let r = p.bismut_r();
    let sigma = FormElement::sigma(&table);
    let sp = p.map(|e| &sigma * e);
    let exact = r.is_zero();
    let top = if exact { 0 } else { n_max };
    let mut chain = BarChain::zero(&table);
    for n in 0..=top {
        let sign = Scalar::int(if n % 2 == 0 { 1 } else { -1 });
        for k in 0..=n {
            let mut entries: Vec<&FormMatrix> = vec![&r; n + 1];
            entries[k] = &sp;
            chain = chain.add(&trace_word(&entries).scale(&sign));
        }
    }
    Ok(BismutChern { chain, r, n_max: top, exact })
}

#[derive(Clone, Debug, Serialize)]
pub struct McKeanSingerReport {
    pub t: f64,
    pub lhs: [f64; 2],
    pub rhs: [f64; 2],
    pub difference: f64,
    /// Terms `(-1)^N sum_k Ch(R^k, sigma p, R^{N-k})` for `N = 0, 1, ...`.
    pub terms: Vec<[f64; 2]>,
    pub tail_estimate: f64,
    /// `Str(c(p) e^{-D_p})`, the other exponent sometimes written.
    pub rhs_linear_exponent: [f64; 2],
    pub tolerance: f64,
    pub pass: bool,
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

/// Compares `Ch_t(Ch(p))`, summed order by order in `N` until the tail is
/// below `tol`, with `Str(c(p) exp(-D_p^2))` where `D_p = tQ + c_t((2p-1)dp)`.
pub fn mckean_singer_check(model: &FredholmModel, p: &FormMatrix, t: f64, tol: f64) -> Result<McKeanSingerReport, FredholmError> {
    if t <= 0.0 || !t.is_finite() {
        return Err(FredholmError::NonPositiveT(t));
    }
    if !p.is_idempotent() {
        return Err(FredholmError::NotIdempotent);
    }
    let mt = model.rescaled(t);
    let table = p.table().clone();
    let n = p.size();
    let h = mt.dim();
    let big = n * h;
    let gamma = DMatrix::<Complex64>::identity(n, n).kronecker(mt.gamma());
    let curv = mt.curvature();
    let r = p.bismut_r();
    let sigma = FormElement::sigma(&table);
    let sp = p.map(|e| &sigma * e);

    let lift1 = |m: &FormMatrix| m.lift(h, |e| Ok(curv.f1(e)));
    let lift2 = |a: &FormMatrix, b: &FormMatrix| {
        let mut out = DMatrix::<Complex64>::zeros(big, big);
        for i in 0..n {
            for j in 0..n {
                let mut blk = DMatrix::<Complex64>::zeros(h, h);
                for k in 0..n {
                    blk += curv.f2(a.get(i, k), b.get(k, j));
                }
                out.view_mut((i * h, j * h), (h, h)).copy_from(&blk);
            }
        }
        out
    };
    let d2 = DMatrix::<Complex64>::identity(n, n).kronecker(&curv.f0());
    let f_r = lift1(&r)?;
    let f_sp = lift1(&sp)?;
    let f_rr = lift2(&r, &r);
    let f_rsp = lift2(&r, &sp);
    let f_spr = lift2(&sp, &r);

    let c_p = p.lift_c(&mt)?;
    let a = p.scale(&Scalar::int(2)).sub(&FormMatrix::identity(&table, n)).mul(&p.d());
    let d = DMatrix::<Complex64>::identity(n, n).kronecker(mt.q());
    let dp = &d + a.lift_c(&mt)?;
    let rhs = (&gamma * &c_p * (-(&dp * &dp)).exp()).trace();
    let rhs_lin = (&gamma * &c_p * (-&dp).exp()).trace();

    // Layered automaton: layer j counts consumed R entries, state A/B
    // records whether sigma p has been consumed. Each R carries a sign -1.
    let b2 = 2 * big;
    let block = |aa: &CMatrix, ab: &CMatrix, bb: &CMatrix| {
        let mut out = DMatrix::<Complex64>::zeros(b2, b2);
        out.view_mut((0, 0), (big, big)).copy_from(aa);
        out.view_mut((0, big), (big, big)).copy_from(ab);
        out.view_mut((big, big), (big, big)).copy_from(bb);
        out
    };
    let zero = DMatrix::<Complex64>::zeros(big, big);
    // -M as a polynomial in the layer shift with (A, B) blocks
    let gen = [
        block(&-&d2, &-&f_sp, &-&d2),
        block(&f_r, &(&f_rsp + &f_spr), &f_r),
        block(&-&f_rr, &zero, &-&f_rr),
    ];
    let mut n_max = 8usize;
    loop {
        let layers = n_max + 1;
        let e = shift_poly_exp(&gen, layers);
        let terms: Vec<Complex64> =
            e.iter().map(|c| (&gamma * c.view((0, big), (big, big))).trace()).collect();
        let tail = terms[layers - 1].norm() + terms[layers - 2].norm();
        if tail < tol * 1e-2 || n_max >= 48 {
            let lhs: Complex64 = terms.iter().sum();
            let difference = (lhs - rhs).norm();
            return Ok(McKeanSingerReport {
                t,
                lhs: pair(lhs),
                rhs: pair(rhs),
                difference,
                terms: terms.into_iter().map(pair).collect(),
                tail_estimate: tail,
                rhs_linear_exponent: pair(rhs_lin),
                tolerance: tol,
                pass: difference < tol,
            });
        }
        n_max *= 2;
    }
}

fn shift_poly_mul(a: &[CMatrix], b: &[CMatrix]) -> Vec<CMatrix> {
    let n = a[0].nrows();
    (0..a.len())
        .into_par_iter()
        .map(|k| {
            let mut acc = DMatrix::<Complex64>::zeros(n, n);
            for i in 0..=k {
                acc += &a[i] * &b[k - i];
            }
            acc
        })
        .collect()
}

/// `exp(sum_j x_j S^j)` truncated at `S^layers`, where `S` is a nilpotent
/// shift commuting with the coefficients. Scaling and squaring with a Taylor
/// core.
fn shift_poly_exp(x: &[CMatrix], layers: usize) -> Vec<CMatrix> {
    let n = x[0].nrows();
    let mut scaled: Vec<CMatrix> = (0..layers).map(|j| x.get(j).cloned().unwrap_or_else(|| DMatrix::zeros(n, n))).collect();
    let norm: f64 = scaled.iter().map(|c| c.norm()).sum();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let f = c64(0.5f64.powi(squarings as i32));
    for c in scaled.iter_mut() {
        *c *= f;
    }
    let mut result: Vec<CMatrix> = (0..layers).map(|j| if j == 0 { DMatrix::identity(n, n) } else { DMatrix::zeros(n, n) }).collect();
    let mut term = result.clone();
    for k in 1..40 {
        term = shift_poly_mul(&term, &scaled);
        let inv = c64(1.0 / k as f64);
        let mut size = 0.0;
        for (r, t) in result.iter_mut().zip(term.iter_mut()) {
            *t *= inv;
            *r += &*t;
            size += t.norm();
        }
        if size < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = shift_poly_mul(&result, &result);
    }
    result
}

/// Random models and idempotents for tests and the CLI.
pub mod random {
    use super::*;
    use rand::Rng;

    fn entry<R: Rng>(rng: &mut R, scale: f64) -> Complex64 {
        Complex64::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
    }

    /// Random matrix of the requested parity.
    pub fn graded_matrix<R: Rng>(rng: &mut R, dim_plus: usize, dim_minus: usize, odd: bool, scale: f64) -> CMatrix {
        let n = dim_plus + dim_minus;
        DMatrix::from_fn(n, n, |i, j| if ((i < dim_plus) != (j < dim_plus)) == odd { entry(rng, scale) } else { c64(0.0) })
    }

    /// Odd hermitian `Q`.
    pub fn odd_hermitian<R: Rng>(rng: &mut R, dim_plus: usize, dim_minus: usize, scale: f64) -> CMatrix {
        let a = graded_matrix(rng, dim_plus, dim_minus, true, scale);
        (&a + a.adjoint()) * c64(0.5)
    }

    /// Table with closed odd generators `e_k`, pairs `d a_k = y_k` with `a_k`
    /// of degree 2, in ambient dimension `dim`.
    pub fn model_table<R: Rng>(rng: &mut R, dim: usize, pairs: usize) -> Arc<GeneratorTable> {
        let mut t = GeneratorTable::new(dim);
        for k in 0..rng.gen_range(1..=2) {
            t.add(&format!("e{k}"), 1).unwrap();
        }
        for k in 0..pairs {
            let a = t.add(&format!("a{k}"), 2).unwrap();
            let y = t.add(&format!("y{k}"), 3).unwrap();
            t.set_d(a, &[(Scalar::one(), vec![y])]);
        }
        Arc::new(t)
    }

    /// Model with `c` assigned on every generator and every product of two
    /// generators.
    pub fn model<R: Rng>(
        rng: &mut R,
        table: &Arc<GeneratorTable>,
        dim_plus: usize,
        dim_minus: usize,
        scale: f64,
    ) -> FredholmModel {
        let q = odd_hermitian(rng, dim_plus, dim_minus, 1.0);
        let mut m = FredholmModel::new(table, dim_plus, dim_minus, q).expect("valid Q");
        let gens: Vec<FormElement> = (0..table.len()).map(|g| FormElement::gen(table, g)).collect();
        let mut monos: Vec<FormElement> = gens.clone();
        for i in 0..gens.len() {
            for j in i..gens.len() {
                let pr = &gens[i] * &gens[j];
                if !pr.is_zero() {
                    monos.push(pr);
                }
            }
        }
        for f in monos {
            let odd = f.parity() == Some(true);
            let mat = graded_matrix(rng, dim_plus, dim_minus, odd, scale);
            m.assign(&f, mat).expect("parity respected");
        }
        m
    }

    /// `g e g^{-1}` with `e = diag(1, .., 1, 0, .., 0)` and `g = 1 + X`, `X`
    /// built from the even generators, so `g^{-1}` is a finite series.
    pub fn idempotent<R: Rng>(rng: &mut R, table: &Arc<GeneratorTable>, n: usize) -> FormMatrix {
        let even: Vec<usize> = (0..table.len()).filter(|&g| table.degree(g) % 2 == 0 && table.degree(g) > 0).collect();
        let rank = rng.gen_range(1..n.max(2));
        let mut x_entries = Vec::with_capacity(n * n);
        for _ in 0..n * n {
            let mut f = FormElement::zero(table);
            for &g in &even {
                if rng.gen_bool(0.5) {
                    let c = Scalar::ratio(rng.gen_range(-2..=2), 4);
                    f = &f + &FormElement::gen(table, g).scale(&c);
                }
            }
            x_entries.push(f);
        }
        let x = FormMatrix::new(n, x_entries).unwrap();
        let id = FormMatrix::identity(table, n);
        let g = id.add(&x);
        let mut g_inv = id.clone();
        let mut power = id.clone();
        for _ in 0..table.dim() {
            power = power.mul(&x).scale(&Scalar::int(-1));
            if power.is_zero() {
                break;
            }
            g_inv = g_inv.add(&power);
        }
        let e = FormMatrix::new(
            n,
            (0..n * n)
                .map(|k| if k / n == k % n && k / n < rank { FormElement::one(table) } else { FormElement::zero(table) })
                .collect(),
        )
        .unwrap();
        let p = g.mul(&e).mul(&g_inv);
        debug_assert!(p.is_idempotent());
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barcx::{cyclic_symmetrize, Cochain};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(seed: u64) -> (FredholmModel, ChaCha8Rng) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table = random::model_table(&mut rng, 6, 2);
        let m = random::model(&mut rng, &table, 2, 2, 0.4);
        (m, rng)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn divided_differences_match_closed_forms() {
        let e = |x: f64| (-x).exp();
        assert!((exp_divided_difference(&[0.3]) - e(0.3)).abs() < 1e-15);
        let v = exp_divided_difference(&[0.3, 2.5]);
        assert!((v - (e(0.3) - e(2.5)) / (2.5 - 0.3)).abs() < 1e-14);
        // confluent: f[x, x] = -f'(x), f[x, x, x] = f''(x)/2
        assert!((exp_divided_difference(&[1.2, 1.2]) - e(1.2)).abs() < 1e-14);
        assert!((exp_divided_difference(&[1.2, 1.2, 1.2]) - e(1.2) / 2.0).abs() < 1e-14);
        let near = exp_divided_difference(&[0.5, 0.5 + 1e-9, 4.0]);
        let exact = exp_divided_difference(&[0.5, 0.5, 4.0]);
        assert!((near - exact).abs() < 1e-9);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (xs, ws) = gauss_legendre(8);
        let s: f64 = xs.iter().zip(&ws).map(|(x, w)| w * x.powi(15)).sum();
        assert!((s - 1.0 / 16.0).abs() < 1e-15);
        assert!((ws.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn curvature_matches_cochain_algebra() {
        for seed in 0..4 {
            let (m, mut rng) = setup(seed);
            let table = m.table().clone();
            let n = m.dim();
            let mq = m.clone();
            let omega = Cochain::new(&table, true, DMatrix::zeros(n, n), move |w: &[Monomial]| match w {
                [] => -mq.q().clone(),
                [a] if !a.sigma => mq.c_monomial(a),
                _ => DMatrix::zeros(n, n),
            });
            let f = omega.beta().add(&omega.mul(&omega));
            let curv = m.curvature();
            for len in 0..=3 {
                for _ in 0..6 {
                    let w = crate::barcx::random::word(&mut rng, &table, len);
                    let expect = curv.on_word(&w);
                    let got = f.eval_word(&w);
                    assert!((got - expect).norm() < 1e-12, "seed {seed} word len {}", w.len());
                }
            }
        }
    }

    #[test]
    fn bianchi_identity() {
        let (m, mut rng) = setup(11);
        let table = m.table().clone();
        let n = m.dim();
        let (m1, m2) = (m.clone(), m.clone());
        let omega = Cochain::new(&table, true, DMatrix::zeros(n, n), move |w: &[Monomial]| match w {
            [] => -m1.q().clone(),
            [a] if !a.sigma => m1.c_monomial(a),
            _ => DMatrix::zeros(n, n),
        });
        let f = Cochain::new(&table, false, DMatrix::zeros(n, n), move |w: &[Monomial]| m2.curvature().on_word(w));
        let lhs = f.beta();
        let rhs = f.mul(&omega).sub(&omega.mul(&f));
        for len in 0..=4 {
            for _ in 0..5 {
                let w = crate::barcx::random::word(&mut rng, &table, len);
                assert!((lhs.eval_word(&w) - rhs.eval_word(&w)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn integrators_agree() {
        let (m, mut rng) = setup(3);
        let table = m.table().clone();
        for len in 0..=3 {
            let w = crate::barcx::random::word(&mut rng, &table, len);
            let dd = chern_t(&m, 0.8, &w, Integrator::DividedDifferences).unwrap();
            let gl = chern_t(&m, 0.8, &w, Integrator::GaussLegendre(16)).unwrap();
            let tr = chern_t(&m, 0.8, &w, Integrator::Transfer).unwrap();
            assert!(close(dd, tr, 1e-11), "{dd} vs {tr}");
            assert!(close(gl, tr, 1e-10), "{gl} vs {tr}");
        }
    }

    #[test]
    fn empty_word_and_trivial_words() {
        let (m, _) = setup(5);
        let expect = m.supertrace(&(-(m.q() * m.q()) * c64(0.49)).exp());
        let got = chern_t(&m, 0.7, &[], Integrator::DividedDifferences).unwrap();
        assert!(close(got, expect, 1e-12));
        let table = m.table().clone();
        // a sigma-free word on which c vanishes and no differential is hit
        let mut bare = FredholmModel::new(&table, 2, 2, m.q().clone()).unwrap();
        bare.assign(&FormElement::one(&table), DMatrix::identity(4, 4)).unwrap();
        let e0 = Monomial { sigma: false, gens: vec![table.id("e0").unwrap() as u16] };
        assert_eq!(chern_t(&bare, 1.0, &[e0], Integrator::DividedDifferences).unwrap(), c64(0.0));
        assert!(chern_t(&m, 0.0, &[], Integrator::DividedDifferences).is_err());
    }

    #[test]
    fn central_laplacian_closed_form() {
        let lam: f64 = 1.7;
        let q = DMatrix::from_fn(4, 4, |i, j| if (i < 2) != (j < 2) && i % 2 == j % 2 { c64(lam.sqrt()) } else { c64(0.0) });
        let l = &q * &q;
        assert!((&l - DMatrix::<Complex64>::identity(4, 4) * c64(lam)).norm() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ops: Vec<CMatrix> = (0..3).map(|_| random::graded_matrix(&mut rng, 2, 2, false, 1.0)).collect();
        let prod = ops.iter().fold(DMatrix::<Complex64>::identity(4, 4), |a, b| a * b);
        let expect = prod * c64((-lam).exp() / 6.0);
        for integ in [Integrator::DividedDifferences, Integrator::GaussLegendre(12), Integrator::Transfer] {
            let got = simplex_integral(&l, &ops, integ).unwrap();
            assert!((got - &expect).norm() < 1e-12, "{integ:?}");
        }
    }

    #[test]
    fn duhamel_series_converges() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let q = random::odd_hermitian(&mut rng, 2, 2, 1.0);
        let l = &q * &q;
        let v = random::graded_matrix(&mut rng, 2, 2, false, 0.3);
        let exact = (-(&l + &v)).exp();
        let mut last = f64::INFINITY;
        for order in 1..=6 {
            let err = (duhamel_series(&l, &v, order, Integrator::DividedDifferences).unwrap() - &exact).norm();
            assert!(err < last);
            last = err;
        }
        assert!(last < 1e-6);
    }

    #[test]
    fn chern_vanishes_on_boundaries_of_cyclic_chains() {
        let (m, mut rng) = setup(17);
        let table = m.table().clone();
        for len in 1..=3 {
            let w = crate::barcx::random::word(&mut rng, &table, len);
            let x = cyclic_symmetrize(&table, &w);
            let v = chern_chain(&m, 0.9, &x.b(), Integrator::Transfer).unwrap();
            assert!(v.norm() < 1e-10, "len {len}: {v}");
        }
    }

    #[test]
    fn bismut_chern_trivial_cases() {
        let (m, _) = setup(2);
        let table = m.table().clone();
        let one = FormMatrix::identity(&table, 1);
        let bc = bismut_chern(&one, 4).unwrap();
        assert!(bc.exact);
        assert_eq!(bc.chain, BarChain::word(&table, vec![Monomial::sigma()], Scalar::one()));
        let c = FormMatrix::parse(&table, &[vec!["1".into(), "0".into()], vec!["0".into(), "1".into()]]).unwrap();
        assert_eq!(bismut_chern(&c, 3).unwrap().chain, BarChain::word(&table, vec![Monomial::sigma()], Scalar::int(2)));
        let bad = FormMatrix::parse(&table, &[vec!["2".into()]]).unwrap();
        assert_eq!(bismut_chern(&bad, 1).unwrap_err(), FredholmError::NotIdempotent);
    }

    #[test]
    fn bismut_chern_is_even_and_cyclic() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let table = random::model_table(&mut rng, 6, 2);
        let p = random::idempotent(&mut rng, &table, 2);
        assert!(p.is_idempotent());
        let bc = bismut_chern(&p, 3).unwrap();
        assert!(!bc.exact);
        assert!(bc.chain.is_cyclic());
        assert_eq!(bc.chain.parity(), Some(false));
    }

    #[test]
    fn mckean_singer_matches_chain_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let table = random::model_table(&mut rng, 6, 2);
        let m = random::model(&mut rng, &table, 2, 2, 0.2);
        let p = random::idempotent(&mut rng, &table, 2);
        let rep = mckean_singer_check(&m, &p, 1.0, 1e-8).unwrap();
        assert!(rep.pass, "{rep:?}");
        let bc = bismut_chern(&p, 2).unwrap();
        let direct = chern_chain(&m, 1.0, &bc.chain, Integrator::Transfer).unwrap();
        let partial: Complex64 = rep.terms[..3].iter().map(|z| Complex64::new(z[0], z[1])).sum();
        assert!(close(direct, partial, 1e-10), "{direct} vs {partial}");
    }

    #[test]
    fn mckean_singer_trivial_idempotents() {
        let (m, _) = setup(6);
        let table = m.table().clone();
        for p in [FormMatrix::identity(&table, 1), FormMatrix::identity(&table, 2)] {
            let rep = mckean_singer_check(&m, &p, 1.0, 1e-10).unwrap();
            let n = p.size() as f64;
            let expect = m.supertrace(&(-(m.q() * m.q())).exp()) * n;
            assert!(close(Complex64::new(rep.lhs[0], rep.lhs[1]), expect, 1e-10));
            assert!(rep.pass);
        }
    }
}
