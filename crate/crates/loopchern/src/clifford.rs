//! Clifford algebra of euclidean `R^d` with `e_i e_j + e_j e_i = -2 delta_ij`.
//!
//! Elements are sparse maps from blades (bit sets over `{1..d}`) to
//! coefficients in a commutative algebra. The quantization map sends
//! `e_{i_1} ^ ... ^ e_{i_k}` to the blade `e_{i_1} ... e_{i_k}`; the symbol is
//! its inverse.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::multiform::{FormElement, GeneratorTable, Monomial};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliffordError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("form contains sigma")]
    SigmaPresent,
    #[error("form is not over the exterior algebra of dimension {0}")]
    NotExterior(usize),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Commutative coefficient ring for Clifford elements.
pub trait Coeff: Clone + PartialEq + fmt::Display {
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn scale(&self, s: &Scalar) -> Self;
    fn is_zero(&self) -> bool;
}

impl Coeff for Scalar {
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn scale(&self, s: &Scalar) -> Self {
        self * s
    }
    fn is_zero(&self) -> bool {
        Scalar::is_zero(self)
    }
}

/// Form coefficients are assumed even, so they commute with every blade.
impl Coeff for FormElement {
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn scale(&self, s: &Scalar) -> Self {
        FormElement::scale(self, s)
    }
    fn is_zero(&self) -> bool {
        FormElement::is_zero(self)
    }
}

/// Sign and blade of `e_a e_b`.
pub fn blade_product(a: u32, b: u32) -> (i32, u32) {
    let mut swaps = 0;
    let mut rest = a >> 1;
    while rest != 0 {
        swaps += (rest & b).count_ones();
        rest >>= 1;
    }
    swaps += (a & b).count_ones();
    (if swaps % 2 == 0 { 1 } else { -1 }, a ^ b)
}

pub fn top_blade(d: usize) -> u32 {
    if d == 0 {
        0
    } else {
        (1u32 << d) - 1
    }
}

/// `(2/i)^{d/2}`.
pub fn str_constant(d: usize) -> Scalar {
    (Scalar::int(2) / Scalar::i()).powi((d / 2) as i32)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CliffordElement<C: Coeff> {
    d: usize,
    terms: BTreeMap<u32, C>,
}

impl<C: Coeff> CliffordElement<C> {
    pub fn zero(d: usize) -> Self {
        assert!(d <= 31, "dimension too large");
        CliffordElement { d, terms: BTreeMap::new() }
    }

    pub fn blade(d: usize, bits: u32, c: C) -> Self {
        let mut out = Self::zero(d);
        out.add_term(bits, c);
        out
    }

    /// Blade from a list of 1-based indices in written order.
    pub fn product_of(d: usize, indices: &[usize], c: C) -> Self {
        let mut sign = 1;
        let mut bits = 0u32;
        for &i in indices {
            assert!((1..=d).contains(&i), "index {i} outside 1..={d}");
            let (s, b) = blade_product(bits, 1 << (i - 1));
            sign *= s;
            bits = b;
        }
        Self::blade(d, bits, c.scale(&Scalar::int(sign as i64)))
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn terms(&self) -> impl Iterator<Item = (&u32, &C)> {
        self.terms.iter()
    }

    pub fn coeff(&self, bits: u32) -> Option<&C> {
        self.terms.get(&bits)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, bits: u32, c: C) {
        if c.is_zero() {
            return;
        }
        let merged = match self.terms.remove(&bits) {
            Some(v) => v.add(&c),
            None => c,
        };
        if !merged.is_zero() {
            self.terms.insert(bits, merged);
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, CliffordError> {
        if self.d != other.d {
            return Err(CliffordError::DimensionMismatch(self.d, other.d));
        }
        let mut out = self.clone();
        for (b, c) in &other.terms {
            out.add_term(*b, c.clone());
        }
        Ok(out)
    }

    pub fn scale(&self, s: &Scalar) -> Self {
        let mut out = Self::zero(self.d);
        for (b, c) in &self.terms {
            out.add_term(*b, c.scale(s));
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Result<Self, CliffordError> {
        self.add(&other.scale(&Scalar::int(-1)))
    }

    pub fn mul(&self, other: &Self) -> Result<Self, CliffordError> {
        if self.d != other.d {
            return Err(CliffordError::DimensionMismatch(self.d, other.d));
        }
        let mut out = Self::zero(self.d);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let (s, bits) = blade_product(*a, *b);
                out.add_term(bits, ca.mul(cb).scale(&Scalar::int(s as i64)));
            }
        }
        Ok(out)
    }

    /// Largest blade size with nonzero coefficient (0 for the zero element).
    pub fn order(&self) -> usize {
        self.terms.keys().map(|b| b.count_ones() as usize).max().unwrap_or(0)
    }

    /// Parity of the blades present, if all agree.
    pub fn parity(&self) -> Option<bool> {
        let mut ps = self.terms.keys().map(|b| b.count_ones() % 2 == 1);
        let first = ps.next()?;
        ps.all(|p| p == first).then_some(first)
    }

    /// Part of blade size `k`.
    pub fn grade(&self, k: usize) -> Self {
        let mut out = Self::zero(self.d);
        for (b, c) in &self.terms {
            if b.count_ones() as usize == k {
                out.add_term(*b, c.clone());
            }
        }
        out
    }

    /// `(2/i)^{d/2}` times the coefficient of `e_1 ... e_d`.
    pub fn berezin_str(&self) -> Option<C> {
        self.terms.get(&top_blade(self.d)).map(|c| c.scale(&str_constant(self.d)))
    }

    /// Graded commutator `ab - (-1)^{|a||b|} ba` for homogeneous inputs.
    pub fn graded_commutator(&self, other: &Self) -> Result<Self, CliffordError> {
        let both_odd = self.parity() == Some(true) && other.parity() == Some(true);
        let ab = self.mul(other)?;
        let ba = other.mul(self)?;
        if both_odd {
            ab.add(&ba)
        } else {
            ab.sub(&ba)
        }
    }
}

impl CliffordElement<Scalar> {
    pub fn one(d: usize) -> Self {
        Self::blade(d, 0, Scalar::one())
    }

    /// `c(e_i)`, 1-based.
    pub fn e(d: usize, i: usize) -> Self {
        Self::product_of(d, &[i], Scalar::one())
    }

    /// Berezin supertrace as a scalar (zero when there is no top blade).
    pub fn berezin(&self) -> Scalar {
        self.berezin_str().unwrap_or_else(Scalar::zero)
    }

    pub fn parse(d: usize, text: &str) -> Result<Self, CliffordError> {
        let err = || CliffordError::Parse(text.to_string());
        let mut out = Self::zero(d);
        let text = text.trim();
        if text == "0" {
            return Ok(out);
        }
        for term in text.split(" + ") {
            let (c, b) = term.split_once(" * ").ok_or_else(err)?;
            let c: Scalar = c.trim().parse().map_err(|_| err())?;
            let inner = b.trim().strip_prefix("e{").and_then(|r| r.strip_suffix('}')).ok_or_else(err)?;
            let idx: Vec<usize> = if inner.trim().is_empty() {
                Vec::new()
            } else {
                inner.split(',').map(|x| x.trim().parse().map_err(|_| err())).collect::<Result<_, _>>()?
            };
            if idx.iter().any(|&i| i == 0 || i > d) {
                return Err(err());
            }
            out = out.add(&Self::product_of(d, &idx, c))?;
        }
        Ok(out)
    }

    /// Image under the spinor representation of dimension `2^{d/2}`.
    pub fn to_matrix(&self, rep: &SpinorRep) -> DMatrix<Complex64> {
        let n = rep.size();
        let mut out = DMatrix::<Complex64>::zeros(n, n);
        for (b, c) in &self.terms {
            let mut m = DMatrix::<Complex64>::identity(n, n);
            for i in 0..self.d {
                if b & (1 << i) != 0 {
                    m *= &rep.gens[i];
                }
            }
            out += m * c.to_c64();
        }
        out
    }
}

impl<C: Coeff> fmt::Display for CliffordElement<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(b, c)| {
                let idx: Vec<String> = (0..self.d).filter(|i| b & (1 << i) != 0).map(|i| (i + 1).to_string()).collect();
                format!("{} * e{{{}}}", c, idx.join(","))
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Exterior algebra `Lambda R^d` with degree-1 generators `e1..ed`, the
/// domain of quantization.
#[derive(Clone, Debug)]
pub struct Exterior {
    d: usize,
    table: Arc<GeneratorTable>,
}

impl Exterior {
    pub fn new(d: usize) -> Self {
        let mut t = GeneratorTable::new(d);
        for i in 1..=d {
            t.add(&format!("e{i}"), 1).expect("fresh names");
        }
        Exterior { d, table: Arc::new(t) }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn table(&self) -> &Arc<GeneratorTable> {
        &self.table
    }

    /// The basis form `e_{i_1} ^ ... ^ e_{i_k}` of a blade.
    pub fn basis_form(&self, bits: u32) -> FormElement {
        let gens: Vec<u16> = (0..self.d as u16).filter(|i| bits & (1 << i) != 0).collect();
        FormElement::monomial(&self.table, Monomial { sigma: false, gens }, Scalar::one())
    }

    pub fn quantize(&self, w: &FormElement) -> Result<CliffordElement<Scalar>, CliffordError> {
        if !Arc::ptr_eq(w.table(), &self.table) {
            return Err(CliffordError::NotExterior(self.d));
        }
        let mut out = CliffordElement::zero(self.d);
        for (m, c) in w.terms() {
            if m.sigma {
                return Err(CliffordError::SigmaPresent);
            }
            let bits = m.gens.iter().fold(0u32, |acc, &g| acc | (1 << g));
            out.add_term(bits, c.clone());
        }
        Ok(out)
    }

    /// The full symbol `[a]`.
    pub fn full_symbol(&self, a: &CliffordElement<Scalar>) -> FormElement {
        let mut out = FormElement::zero(&self.table);
        for (b, c) in a.terms() {
            out = &out + &self.basis_form(*b).scale(c);
        }
        out
    }

    /// The `k`-form component `[a]_k`.
    pub fn symbol(&self, a: &CliffordElement<Scalar>, k: usize) -> FormElement {
        self.full_symbol(&a.grade(k))
    }
}

/// Matrices `c(e_i)` on spinors of `R^d` and the chirality operator
/// `gamma = i^{d/2} c(e_1) ... c(e_d)`.
#[derive(Clone, Debug)]
pub struct SpinorRep {
    pub gens: Vec<DMatrix<Complex64>>,
    pub gamma: DMatrix<Complex64>,
}

impl SpinorRep {
    pub fn new(d: usize) -> Self {
        assert!(d % 2 == 0 && d > 0, "spinors need even positive dimension");
        let i = Complex64::new(0.0, 1.0);
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let s1 = DMatrix::from_row_slice(2, 2, &[zero, one, one, zero]);
        let s2 = DMatrix::from_row_slice(2, 2, &[zero, -i, i, zero]);
        let s3 = DMatrix::from_row_slice(2, 2, &[one, zero, zero, -one]);
        let id = DMatrix::<Complex64>::identity(2, 2);
        let m = d / 2;
        let kron_all = |parts: Vec<&DMatrix<Complex64>>| {
            parts.into_iter().fold(DMatrix::<Complex64>::identity(1, 1), |acc, p| acc.kronecker(p))
        };
        let mut gens = Vec::with_capacity(d);
        for j in 0..m {
            for s in [&s1, &s2] {
                let parts: Vec<&DMatrix<Complex64>> =
                    (0..m).map(|k| if k < j { &s3 } else if k == j { s } else { &id }).collect();
                gens.push(kron_all(parts) * i);
            }
        }
        let n = 1 << m;
        let mut gamma = DMatrix::<Complex64>::identity(n, n) * i.powi(m as i32);
        for g in &gens {
            gamma *= g;
        }
        SpinorRep { gens, gamma }
    }

    pub fn size(&self) -> usize {
        self.gamma.nrows()
    }

    /// Matrix supertrace `tr(gamma A)`.
    pub fn supertrace(&self, a: &DMatrix<Complex64>) -> Complex64 {
        (&self.gamma * a).trace()
    }
}

/// Factor of an operator word for Getzler-order accounting.
#[derive(Clone, Debug, PartialEq)]
pub enum Factor {
    Nabla(usize),
    Clifford { order: usize },
    Scalar,
    Identity,
}

impl Factor {
    pub fn clifford<C: Coeff>(a: &CliffordElement<C>) -> Self {
        Factor::Clifford { order: a.order() }
    }

    pub fn order(&self) -> usize {
        match self {
            Factor::Nabla(_) => 1,
            Factor::Clifford { order } => *order,
            Factor::Scalar | Factor::Identity => 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OperatorWord(pub Vec<Factor>);

pub fn getzler_order(w: &OperatorWord) -> usize {
    w.0.iter().map(Factor::order).sum()
}
