//! Finitely generated graded-commutative algebras with a square-zero odd
//! variable `sigma` of degree -1.
//!
//! A [`GeneratorTable`] lists named generators with integer degrees and
//! assigned differentials. A [`FormElement`] is a sparse combination of
//! canonical monomials. Invariants:
//! - monomials keep generator ids sorted, odd generators appear at most once,
//!   `sigma` is stored as a flag and sits leftmost;
//! - no stored term has zero coefficient or non-`sigma` degree above the
//!   ambient dimension (such terms are dropped silently).

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use thiserror::Error;

use crate::scalar::Scalar;

pub const SIGMA: &str = "sigma";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormError {
    #[error("operands live over different generator tables")]
    TableMismatch,
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("generator name `{0}` is reserved or duplicated")]
    BadName(String),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Monomial `sigma^s * g_1 * ... * g_k` with `g_i` sorted by id.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial {
    pub sigma: bool,
    pub gens: Vec<u16>,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial::default()
    }

    pub fn sigma() -> Self {
        Monomial { sigma: true, gens: Vec::new() }
    }

    pub fn is_one(&self) -> bool {
        !self.sigma && self.gens.is_empty()
    }

    pub fn without_sigma(&self) -> Monomial {
        Monomial { sigma: false, gens: self.gens.clone() }
    }
}

#[derive(Clone, Debug)]
struct Generator {
    name: String,
    degree: i32,
    differential: BTreeMap<Monomial, Scalar>,
}

/// Generators with degrees and differentials, plus the ambient dimension used
/// as the top-degree cutoff.
#[derive(Clone, Debug)]
pub struct GeneratorTable {
    dim: usize,
    gens: Vec<Generator>,
}

impl GeneratorTable {
    pub fn new(dim: usize) -> Self {
        GeneratorTable { dim, gens: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    /// Adds a generator with zero differential and returns its id.
    pub fn add(&mut self, name: &str, degree: i32) -> Result<usize, FormError> {
        if name == SIGMA || self.id(name).is_some() || !valid_name(name) {
            return Err(FormError::BadName(name.to_string()));
        }
        self.gens.push(Generator { name: name.to_string(), degree, differential: BTreeMap::new() });
        Ok(self.gens.len() - 1)
    }

    /// Sets `d(g)` to a combination of products; each product lists generator
    /// ids in written order and is normalised with its Koszul sign.
    pub fn set_d(&mut self, g: usize, terms: &[(Scalar, Vec<usize>)]) {
        let mut out: BTreeMap<Monomial, Scalar> = BTreeMap::new();
        for (c, ids) in terms {
            if let Some((sign, m)) = self.product_of_ids(ids) {
                let v = if sign < 0 { -c } else { c.clone() };
                add_term(&mut out, m, &v);
            }
        }
        self.gens[g].differential = out;
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.gens.iter().position(|g| g.name == name)
    }

    pub fn name(&self, g: usize) -> &str {
        &self.gens[g].name
    }

    pub fn degree(&self, g: usize) -> i32 {
        self.gens[g].degree
    }

    fn odd(&self, g: u16) -> bool {
        self.gens[g as usize].degree.rem_euclid(2) == 1
    }

    /// Degree ignoring `sigma`.
    pub fn form_degree(&self, m: &Monomial) -> i32 {
        m.gens.iter().map(|&g| self.gens[g as usize].degree).sum()
    }

    /// Total degree, `sigma` counting -1.
    pub fn degree_of(&self, m: &Monomial) -> i32 {
        self.form_degree(m) - m.sigma as i32
    }

    pub fn parity_of(&self, m: &Monomial) -> bool {
        self.degree_of(m).rem_euclid(2) == 1
    }

    fn product_of_ids(&self, ids: &[usize]) -> Option<(i8, Monomial)> {
        let mut acc = (1i8, Monomial::one());
        for &g in ids {
            let m = Monomial { sigma: false, gens: vec![g as u16] };
            let (s, p) = self.mul_monomials(&acc.1, &m)?;
            acc = (acc.0 * s, p);
        }
        Some(acc)
    }

    /// Product of canonical monomials: `None` when it vanishes (repeated odd
    /// factor, two sigmas, or degree above the cutoff).
    pub fn mul_monomials(&self, a: &Monomial, b: &Monomial) -> Option<(i8, Monomial)> {
        if a.sigma && b.sigma {
            return None;
        }
        let mut sign = 1i8;
        if b.sigma && self.form_degree(a).rem_euclid(2) == 1 {
            sign = -sign;
        }
        let mut gens = Vec::with_capacity(a.gens.len() + b.gens.len());
        let (mut i, mut j) = (0, 0);
        // odd factors of `a` not yet emitted, used to count transpositions
        let mut odd_left_in_a = a.gens.iter().filter(|&&g| self.odd(g)).count();
        while i < a.gens.len() || j < b.gens.len() {
            let take_a = j == b.gens.len() || (i < a.gens.len() && a.gens[i] <= b.gens[j]);
            if take_a {
                if j < b.gens.len() && a.gens[i] == b.gens[j] && self.odd(a.gens[i]) {
                    return None;
                }
                if self.odd(a.gens[i]) {
                    odd_left_in_a -= 1;
                }
                gens.push(a.gens[i]);
                i += 1;
            } else {
                if self.odd(b.gens[j]) && odd_left_in_a % 2 == 1 {
                    sign = -sign;
                }
                gens.push(b.gens[j]);
                j += 1;
            }
        }
        let m = Monomial { sigma: a.sigma || b.sigma, gens };
        if self.form_degree(&m) > self.dim as i32 {
            return None;
        }
        Some((sign, m))
    }

    pub fn format_monomial(&self, m: &Monomial) -> String {
        let mut parts: Vec<String> = Vec::new();
        if m.sigma {
            parts.push(SIGMA.to_string());
        }
        let mut k = 0;
        while k < m.gens.len() {
            let g = m.gens[k];
            let mut p = 1;
            while k + p < m.gens.len() && m.gens[k + p] == g {
                p += 1;
            }
            let name = &self.gens[g as usize].name;
            parts.push(if p == 1 { name.clone() } else { format!("{name}^{p}") });
            k += p;
        }
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join("*")
        }
    }

    /// Parses a plain-text table:
    ///
    /// ```text
    /// # comment
    /// dim 4
    /// x 2 = y
    /// y 3
    /// ```
    pub fn parse(text: &str) -> Result<Arc<GeneratorTable>, FormError> {
        let mut dim = None;
        let mut decls = Vec::new();
        for raw in text.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (head, diff) = match line.split_once('=') {
                Some((h, d)) => (h.trim(), Some(d.trim().to_string())),
                None => (line, None),
            };
            let words: Vec<&str> = head.split_whitespace().collect();
            match words.as_slice() {
                ["dim", n] | ["dimension", n] => {
                    dim = Some(n.parse::<usize>().map_err(|_| FormError::Parse(line.to_string()))?)
                }
                [name, deg] => {
                    let deg: i32 = deg.parse().map_err(|_| FormError::Parse(line.to_string()))?;
                    decls.push((name.to_string(), deg, diff));
                }
                _ => return Err(FormError::Parse(line.to_string())),
            }
        }
        let mut table = GeneratorTable::new(dim.ok_or_else(|| FormError::Parse("missing `dim`".into()))?);
        for (name, deg, _) in &decls {
            table.add(name, *deg)?;
        }
        let shell = Arc::new(table.clone());
        for (k, (_, _, diff)) in decls.iter().enumerate() {
            if let Some(expr) = diff {
                let f = FormElement::parse(&shell, expr)?;
                table.gens[k].differential = f.terms;
            }
        }
        Ok(Arc::new(table))
    }

    /// Text form accepted by [`GeneratorTable::parse`].
    pub fn to_text(self: &Arc<Self>) -> String {
        let mut s = format!("dim {}\n", self.dim);
        for (k, g) in self.gens.iter().enumerate() {
            let d = self.differential_of(k);
            if d.is_zero() {
                s.push_str(&format!("{} {}\n", g.name, g.degree));
            } else {
                s.push_str(&format!("{} {} = {}\n", g.name, g.degree, d));
            }
        }
        s
    }

    pub fn differential_of(self: &Arc<Self>, g: usize) -> FormElement {
        FormElement { table: self.clone(), terms: self.gens[g].differential.clone() }
    }
}

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

fn add_term(map: &mut BTreeMap<Monomial, Scalar>, m: Monomial, c: &Scalar) {
    if c.is_zero() {
        return;
    }
    match map.get_mut(&m) {
        Some(v) => {
            *v += c;
            if v.is_zero() {
                map.remove(&m);
            }
        }
        None => {
            map.insert(m, c.clone());
        }
    }
}

/// Sparse element of the algebra generated by a [`GeneratorTable`] and `sigma`.
#[derive(Clone, Debug)]
pub struct FormElement {
    table: Arc<GeneratorTable>,
    terms: BTreeMap<Monomial, Scalar>,
}

impl PartialEq for FormElement {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.table, &other.table) && self.terms == other.terms
    }
}

impl FormElement {
    pub fn zero(table: &Arc<GeneratorTable>) -> Self {
        FormElement { table: table.clone(), terms: BTreeMap::new() }
    }

    pub fn scalar(table: &Arc<GeneratorTable>, c: Scalar) -> Self {
        Self::monomial(table, Monomial::one(), c)
    }

    pub fn one(table: &Arc<GeneratorTable>) -> Self {
        Self::scalar(table, Scalar::one())
    }

    pub fn sigma(table: &Arc<GeneratorTable>) -> Self {
        Self::monomial(table, Monomial::sigma(), Scalar::one())
    }

    pub fn gen(table: &Arc<GeneratorTable>, g: usize) -> Self {
        Self::monomial(table, Monomial { sigma: false, gens: vec![g as u16] }, Scalar::one())
    }

    pub fn named(table: &Arc<GeneratorTable>, name: &str) -> Result<Self, FormError> {
        if name == SIGMA {
            return Ok(Self::sigma(table));
        }
        let g = table.id(name).ok_or_else(|| FormError::UnknownGenerator(name.to_string()))?;
        Ok(Self::gen(table, g))
    }

    /// Single term; dropped if above the cutoff or zero.
    pub fn monomial(table: &Arc<GeneratorTable>, m: Monomial, c: Scalar) -> Self {
        let mut terms = BTreeMap::new();
        if table.form_degree(&m) <= table.dim as i32 {
            add_term(&mut terms, m, &c);
        }
        FormElement { table: table.clone(), terms }
    }

    pub fn from_terms(table: &Arc<GeneratorTable>, it: impl IntoIterator<Item = (Monomial, Scalar)>) -> Self {
        let mut f = Self::zero(table);
        for (m, c) in it {
            if table.form_degree(&m) <= table.dim as i32 {
                add_term(&mut f.terms, m, &c);
            }
        }
        f
    }

    pub fn table(&self) -> &Arc<GeneratorTable> {
        &self.table
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Scalar)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, m: &Monomial) -> Scalar {
        self.terms.get(m).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn same_table(&self, other: &FormElement) -> bool {
        Arc::ptr_eq(&self.table, &other.table)
    }

    pub fn is_exact(&self) -> bool {
        self.terms.values().all(Scalar::is_exact)
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        if c.is_zero() {
            return Self::zero(&self.table);
        }
        let mut out = Self::zero(&self.table);
        for (m, v) in &self.terms {
            add_term(&mut out.terms, m.clone(), &(v * c));
        }
        out
    }

    pub fn try_add(&self, other: &FormElement) -> Result<Self, FormError> {
        if !self.same_table(other) {
            return Err(FormError::TableMismatch);
        }
        let mut out = self.clone();
        for (m, c) in &other.terms {
            add_term(&mut out.terms, m.clone(), c);
        }
        Ok(out)
    }

    /// Graded-commutative product, truncated above the ambient dimension.
    pub fn wedge(&self, other: &FormElement) -> Result<Self, FormError> {
        if !self.same_table(other) {
            return Err(FormError::TableMismatch);
        }
        let mut out = Self::zero(&self.table);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                if let Some((s, m)) = self.table.mul_monomials(a, b) {
                    let c = ca * cb;
                    add_term(&mut out.terms, m, &if s < 0 { -c } else { c });
                }
            }
        }
        Ok(out)
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one(&self.table);
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// `theta = theta' + sigma * theta''` with neither part containing sigma.
    pub fn split_sigma(&self) -> (FormElement, FormElement) {
        let mut p = Self::zero(&self.table);
        let mut pp = Self::zero(&self.table);
        for (m, c) in &self.terms {
            if m.sigma {
                pp.terms.insert(m.without_sigma(), c.clone());
            } else {
                p.terms.insert(m.clone(), c.clone());
            }
        }
        (p, pp)
    }

    pub fn prime(&self) -> FormElement {
        self.split_sigma().0
    }

    pub fn double_prime(&self) -> FormElement {
        self.split_sigma().1
    }

    pub fn has_sigma(&self) -> bool {
        self.terms.keys().any(|m| m.sigma)
    }

    /// The derivation `d` extending the generator table, with `d(sigma) = 0`.
    pub fn d(&self) -> FormElement {
        let t = &self.table;
        let mut out = Self::zero(t);
        for (m, c) in &self.terms {
            let mut prefix_deg = 0;
            for (k, &g) in m.gens.iter().enumerate() {
                let dg = t.differential_of(g as usize);
                if !dg.is_zero() {
                    let pre = Self::monomial(t, Monomial { sigma: false, gens: m.gens[..k].to_vec() }, Scalar::one());
                    let post = Self::monomial(t, Monomial { sigma: false, gens: m.gens[k + 1..].to_vec() }, Scalar::one());
                    let mut term = &(&pre * &dg) * &post;
                    let mut sign = if prefix_deg % 2 == 1 { -1 } else { 1 };
                    if m.sigma {
                        term = &Self::sigma(t) * &term;
                        sign = -sign;
                    }
                    out = &out + &term.scale(&(if sign < 0 { -c } else { c.clone() }));
                }
                prefix_deg += t.degree(g as usize);
            }
        }
        out
    }

    /// `iota(theta' + sigma theta'') = theta''`.
    pub fn iota(&self) -> FormElement {
        self.double_prime()
    }

    /// `d_T = d - iota`.
    pub fn d_t(&self) -> FormElement {
        &self.d() - &self.iota()
    }

    /// Total degree when homogeneous.
    pub fn degree(&self) -> Option<i32> {
        let mut degs = self.terms.keys().map(|m| self.table.degree_of(m));
        let first = degs.next()?;
        degs.all(|x| x == first).then_some(first)
    }

    /// Parity when all terms share one (`None` for zero or mixed parity).
    pub fn parity(&self) -> Option<bool> {
        let mut ps = self.terms.keys().map(|m| self.table.parity_of(m));
        let first = ps.next()?;
        ps.all(|x| x == first).then_some(first)
    }

    /// Components by total degree.
    pub fn homogeneous_components(&self) -> BTreeMap<i32, FormElement> {
        let mut out: BTreeMap<i32, FormElement> = BTreeMap::new();
        for (m, c) in &self.terms {
            out.entry(self.table.degree_of(m))
                .or_insert_with(|| Self::zero(&self.table))
                .terms
                .insert(m.clone(), c.clone());
        }
        out
    }

    /// Component of non-sigma degree `k`.
    pub fn form_degree_part(&self, k: i32) -> FormElement {
        Self::from_terms(
            &self.table,
            self.terms.iter().filter(|(m, _)| self.table.form_degree(m) == k).map(|(m, c)| (m.clone(), c.clone())),
        )
    }

    /// Sigma-free component of degree equal to the ambient dimension.
    pub fn top(&self) -> FormElement {
        Self::from_terms(
            &self.table,
            self.terms
                .iter()
                .filter(|(m, _)| !m.sigma && self.table.form_degree(m) == self.table.dim as i32)
                .map(|(m, c)| (m.clone(), c.clone())),
        )
    }

    /// Constant term.
    pub fn constant(&self) -> Scalar {
        self.coeff(&Monomial::one())
    }

    pub fn map_coeffs(&self, f: impl Fn(&Scalar) -> Scalar) -> FormElement {
        Self::from_terms(&self.table, self.terms.iter().map(|(m, c)| (m.clone(), f(c))))
    }

    /// Scales each homogeneous component of degree `k` by `t^k`.
    pub fn scale_by_degree(&self, t: &Scalar) -> FormElement {
        Self::from_terms(
            &self.table,
            self.terms.iter().map(|(m, c)| (m.clone(), c * &t.powi(self.table.degree_of(m)))),
        )
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(Scalar::abs).fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &FormElement, tol: f64) -> bool {
        (self - other).max_abs_coeff() <= tol
    }

    pub fn to_float(&self) -> FormElement {
        self.map_coeffs(Scalar::to_float)
    }

    /// Re-expresses the element over another table whose generators include
    /// every generator used here, matched by name.
    pub fn transport(&self, target: &Arc<GeneratorTable>) -> Result<FormElement, FormError> {
        let mut out = FormElement::zero(target);
        for (m, c) in &self.terms {
            let mut f = FormElement::scalar(target, c.clone());
            if m.sigma {
                f = &f * &FormElement::sigma(target);
            }
            for &g in &m.gens {
                f = &f * &FormElement::named(target, self.table.name(g as usize))?;
            }
            out = &out + &f;
        }
        Ok(out)
    }

    /// Parses the canonical text form, e.g. `3/2 * sigma*x*y^2 + -1 * z`.
    pub fn parse(table: &Arc<GeneratorTable>, text: &str) -> Result<FormElement, FormError> {
        let text = text.trim();
        let mut out = Self::zero(table);
        if text == "0" || text.is_empty() {
            return Ok(out);
        }
        for term in split_top_level_plus(text) {
            let term = term.trim();
            if term.is_empty() {
                return Err(FormError::Parse(text.to_string()));
            }
            let (coeff, mono) = match term.split_once(" * ") {
                Some((c, m)) => (
                    c.trim().parse::<Scalar>().map_err(|e| FormError::Parse(e.to_string()))?,
                    m.trim(),
                ),
                None => match term.parse::<Scalar>() {
                    Ok(c) => (c, "1"),
                    Err(_) => match term.strip_prefix('-') {
                        Some(rest) => (Scalar::int(-1), rest.trim()),
                        None => (Scalar::one(), term),
                    },
                },
            };
            out = &out + &parse_monomial(table, mono)?.scale(&coeff);
        }
        Ok(out)
    }
}

fn split_top_level_plus(s: &str) -> Vec<&str> {
    let bytes = s.as_bytes();
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for k in 0..bytes.len() {
        match bytes[k] {
            b'(' => depth += 1,
            b')' => depth -= 1,
            b'+' if depth == 0 && k > 0 && !matches!(bytes[k - 1], b'e' | b'E') => {
                parts.push(&s[start..k]);
                start = k + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

fn parse_monomial(table: &Arc<GeneratorTable>, s: &str) -> Result<FormElement, FormError> {
    let mut acc = FormElement::one(table);
    if s == "1" {
        return Ok(acc);
    }
    for factor in s.split('*') {
        let factor = factor.trim();
        let (name, power) = match factor.split_once('^') {
            Some((n, p)) => (n.trim(), p.trim().parse::<u32>().map_err(|_| FormError::Parse(factor.to_string()))?),
            None => (factor, 1),
        };
        acc = &acc * &FormElement::named(table, name)?.pow(power);
    }
    Ok(acc)
}

impl fmt::Display for FormElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| format!("{} * {}", c, self.table.format_monomial(m)))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl<'a> Mul<&'a FormElement> for &'a FormElement {
    type Output = FormElement;
    fn mul(self, rhs: &FormElement) -> FormElement {
        self.wedge(rhs).expect("wedge over mismatched tables")
    }
}

impl<'a> Add<&'a FormElement> for &'a FormElement {
    type Output = FormElement;
    fn add(self, rhs: &FormElement) -> FormElement {
        self.try_add(rhs).expect("sum over mismatched tables")
    }
}

impl<'a> Sub<&'a FormElement> for &'a FormElement {
    type Output = FormElement;
    fn sub(self, rhs: &FormElement) -> FormElement {
        self.try_add(&-rhs).expect("difference over mismatched tables")
    }
}

impl Neg for &FormElement {
    type Output = FormElement;
    fn neg(self) -> FormElement {
        self.scale(&Scalar::int(-1))
    }
}

/// Outcome of [`check_dga`].
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct DgaReport {
    pub ok: bool,
    pub failures: Vec<DgaFailure>,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct DgaFailure {
    pub generator: String,
    pub reason: String,
}

/// Checks degrees and `d^2 = 0` on every generator.
pub fn check_dga(table: &Arc<GeneratorTable>) -> DgaReport {
    let mut failures = Vec::new();
    for g in 0..table.len() {
        let name = table.name(g).to_string();
        let deg = table.degree(g);
        let fail = |reason: String| DgaFailure { generator: name.clone(), reason };
        if deg < 1 {
            failures.push(fail(format!("degree {deg} < 1")));
        }
        let dg = table.differential_of(g);
        if dg.has_sigma() {
            failures.push(fail("differential contains sigma".into()));
        }
        if !dg.is_zero() && dg.degree() != Some(deg + 1) {
            failures.push(fail(format!("differential is not homogeneous of degree {}", deg + 1)));
        }
        let ddg = dg.d();
        if !ddg.is_zero() {
            failures.push(fail(format!("d^2 {name} = {ddg}")));
        }
    }
    DgaReport { ok: failures.is_empty(), failures }
}

/// Random tables and elements for tests and the CLI self-checks.
pub mod random {
    use super::*;
    use rand::Rng;

    /// A table passing [`check_dga`]: closed generators, contractible pairs
    /// `d(x) = y`, and generators whose differential is a closed polynomial.
    pub fn dga_table<R: Rng>(rng: &mut R, dim: usize) -> Arc<GeneratorTable> {
        let mut t = GeneratorTable::new(dim);
        let mut closed: Vec<usize> = Vec::new();
        let n_closed = rng.gen_range(1..=3);
        for k in 0..n_closed {
            closed.push(t.add(&format!("a{k}"), rng.gen_range(1..=3)).unwrap());
        }
        for k in 0..rng.gen_range(1..=2) {
            let deg = rng.gen_range(1..=2);
            let x = t.add(&format!("x{k}"), deg).unwrap();
            let y = t.add(&format!("y{k}"), deg + 1).unwrap();
            t.set_d(x, &[(Scalar::one(), vec![y])]);
            closed.push(y);
        }
        for k in 0..rng.gen_range(0..=2) {
            let a = closed[rng.gen_range(0..closed.len())];
            let b = closed[rng.gen_range(0..closed.len())];
            let deg = t.degree(a) + t.degree(b) - 1;
            if deg < 1 {
                continue;
            }
            let z = t.add(&format!("z{k}"), deg).unwrap();
            let c = Scalar::int(rng.gen_range(1..=3));
            t.set_d(z, &[(c, vec![a, b])]);
        }
        let t = Arc::new(t);
        debug_assert!(check_dga(&t).ok);
        t
    }

    pub fn monomial<R: Rng>(rng: &mut R, table: &Arc<GeneratorTable>, max_factors: usize) -> Monomial {
        let mut f = FormElement::one(table);
        if rng.gen_bool(0.5) {
            f = FormElement::sigma(table);
        }
        for _ in 0..rng.gen_range(0..=max_factors) {
            if table.is_empty() {
                break;
            }
            let g = FormElement::gen(table, rng.gen_range(0..table.len()));
            let next = &f * &g;
            if !next.is_zero() {
                f = next;
            }
        }
        let m = f.terms().next().map(|(m, _)| m.clone()).unwrap_or_default();
        m
    }

    pub fn small_int<R: Rng>(rng: &mut R) -> Scalar {
        let mut v = 0;
        while v == 0 {
            v = rng.gen_range(-3..=3);
        }
        Scalar::int(v)
    }

    /// Random element with small integer coefficients.
    pub fn element<R: Rng>(rng: &mut R, table: &Arc<GeneratorTable>, n_terms: usize) -> FormElement {
        let mut f = FormElement::zero(table);
        for _ in 0..n_terms {
            let m = monomial(rng, table, 3);
            f = &f + &FormElement::monomial(table, m, small_int(rng));
        }
        f
    }

    /// Random element of a single total degree, if one can be found.
    pub fn homogeneous<R: Rng>(rng: &mut R, table: &Arc<GeneratorTable>, n_terms: usize) -> FormElement {
        let f = element(rng, table, n_terms);
        let comps = f.homogeneous_components();
        match comps.into_iter().max_by_key(|(_, c)| c.num_terms()) {
            Some((_, c)) => c,
            None => FormElement::one(table),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_gen_table() -> Arc<GeneratorTable> {
        let mut t = GeneratorTable::new(4);
        let x = t.add("x", 1).unwrap();
        let y = t.add("y", 2).unwrap();
        t.set_d(x, &[(Scalar::one(), vec![y])]);
        Arc::new(t)
    }

    #[test]
    fn sigma_squares_to_zero() {
        let t = two_gen_table();
        let s = FormElement::sigma(&t);
        assert!((&s * &s).is_zero());
    }

    #[test]
    fn unit_is_identity() {
        let t = two_gen_table();
        let a = FormElement::parse(&t, "2 * x + 1/3 * sigma*y").unwrap();
        assert_eq!(&FormElement::one(&t) * &a, a);
    }

    #[test]
    fn odd_generators_anticommute() {
        let mut t = GeneratorTable::new(4);
        t.add("e1", 1).unwrap();
        t.add("e2", 1).unwrap();
        let t = Arc::new(t);
        let e1 = FormElement::named(&t, "e1").unwrap();
        let e2 = FormElement::named(&t, "e2").unwrap();
        assert!((&(&e1 * &e2) + &(&e2 * &e1)).is_zero());
        assert!((&e1 * &e1).is_zero());
    }

    #[test]
    fn split_sigma_cases() {
        let t = two_gen_table();
        let f = FormElement::parse(&t, "y").unwrap();
        let sf = &FormElement::sigma(&t) * &f;
        assert_eq!(sf.split_sigma(), (FormElement::zero(&t), f.clone()));
        assert_eq!(f.split_sigma(), (f.clone(), FormElement::zero(&t)));
    }

    #[test]
    fn d_t_on_sigma_multiple() {
        // d(sigma a) = -sigma d(a) for the odd variable sigma
        let t = two_gen_table();
        let x = FormElement::named(&t, "x").unwrap();
        let s = FormElement::sigma(&t);
        let lhs = (&s * &x).d_t();
        let rhs = &(-&(&s * &x.d())) - &x;
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn truncation_is_silent() {
        let t = two_gen_table();
        let y = FormElement::named(&t, "y").unwrap();
        assert!(!(&y * &y).is_zero());
        assert!(y.pow(3).is_zero());
    }

    #[test]
    fn check_dga_examples() {
        let mut ok = GeneratorTable::new(6);
        let x = ok.add("x", 1).unwrap();
        let y = ok.add("y", 2).unwrap();
        ok.set_d(x, &[(Scalar::one(), vec![y])]);
        assert!(check_dga(&Arc::new(ok)).ok);

        let mut bad = GeneratorTable::new(6);
        let x = bad.add("x", 2).unwrap();
        let y = bad.add("y", 2).unwrap();
        bad.set_d(x, &[(Scalar::one(), vec![y])]);
        bad.set_d(y, &[(Scalar::one(), vec![x])]);
        let r = check_dga(&Arc::new(bad));
        assert!(!r.ok);
        assert!(r.failures.iter().any(|f| f.reason.starts_with("d^2")));

        assert!(check_dga(&Arc::new(GeneratorTable::new(2))).ok);
    }

    #[test]
    fn table_text_round_trip() {
        let text = "dim 4\nx 1 = 1 * y\ny 2\nz 2 = 2 * x*y\n";
        let t = GeneratorTable::parse(text).unwrap();
        assert_eq!(t.to_text(), text);
    }

    #[test]
    fn form_text_round_trip() {
        let t = two_gen_table();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let f = random::element(&mut rng, &t, 4);
            let g = FormElement::parse(&t, &f.to_string()).unwrap();
            assert_eq!(f, g);
        }
    }

    #[test]
    fn mismatched_tables_rejected() {
        let a = FormElement::one(&two_gen_table());
        let b = FormElement::one(&two_gen_table());
        assert_eq!(a.wedge(&b), Err(FormError::TableMismatch));
    }
}
