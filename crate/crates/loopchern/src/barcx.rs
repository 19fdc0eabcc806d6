//! Bar complex of the sigma-extended algebra, its cyclic subspace, the
//! restriction map, and bar cochains with product and codifferential.
//!
//! Chains are stored over words of monomials, so every entry is homogeneous
//! and all signs use `n_k = |theta_1| + ... + |theta_k| - k`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::multiform::{FormElement, GeneratorTable, Monomial};
use crate::scalar::Scalar;

pub type Word = Vec<Monomial>;

fn sign_of(odd: bool) -> i32 {
    if odd {
        -1
    } else {
        1
    }
}

/// `n_k` for the first `k` entries of `w`.
pub fn n_k(table: &GeneratorTable, w: &[Monomial], k: usize) -> i32 {
    w[..k].iter().map(|m| table.degree_of(m)).sum::<i32>() - k as i32
}

/// Finite linear combination of bar words.
#[derive(Clone, Debug)]
pub struct BarChain {
    table: Arc<GeneratorTable>,
    terms: BTreeMap<Word, Scalar>,
}

impl PartialEq for BarChain {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.table, &other.table) && self.terms == other.terms
    }
}

impl BarChain {
    pub fn zero(table: &Arc<GeneratorTable>) -> Self {
        BarChain { table: table.clone(), terms: BTreeMap::new() }
    }

    pub fn empty_word(table: &Arc<GeneratorTable>) -> Self {
        Self::word(table, Vec::new(), Scalar::one())
    }

    pub fn word(table: &Arc<GeneratorTable>, w: Word, c: Scalar) -> Self {
        let mut out = Self::zero(table);
        out.add_term(w, &c);
        out
    }

    /// Multilinear expansion of `(theta_1, ..., theta_N)`.
    pub fn from_forms(table: &Arc<GeneratorTable>, entries: &[FormElement]) -> Self {
        let mut acc: Vec<(Word, Scalar)> = vec![(Vec::new(), Scalar::one())];
        for e in entries {
            assert!(Arc::ptr_eq(e.table(), table), "entry over a different table");
            let mut next = Vec::with_capacity(acc.len() * e.num_terms());
            for (w, c) in &acc {
                for (m, v) in e.terms() {
                    let mut w2 = w.clone();
                    w2.push(m.clone());
                    next.push((w2, c * v));
                }
            }
            acc = next;
        }
        let mut out = Self::zero(table);
        for (w, c) in acc {
            out.add_term(w, &c);
        }
        out
    }

    pub fn table(&self) -> &Arc<GeneratorTable> {
        &self.table
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Scalar)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, w: &Word) -> Scalar {
        self.terms.get(w).cloned().unwrap_or_else(Scalar::zero)
    }

    fn add_term(&mut self, w: Word, c: &Scalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&w) {
            Some(v) => {
                *v += c;
                if v.is_zero() {
                    self.terms.remove(&w);
                }
            }
            None => {
                self.terms.insert(w, c.clone());
            }
        }
    }

    pub fn add(&self, other: &BarChain) -> BarChain {
        assert!(Arc::ptr_eq(&self.table, &other.table), "chains over different tables");
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), c);
        }
        out
    }

    pub fn scale(&self, s: &Scalar) -> BarChain {
        let mut out = Self::zero(&self.table);
        for (w, c) in &self.terms {
            out.add_term(w.clone(), &(c * s));
        }
        out
    }

    pub fn sub(&self, other: &BarChain) -> BarChain {
        self.add(&other.scale(&Scalar::int(-1)))
    }

    /// Replaces entry `k` of `w` by `f`, adding `c * (..., f, ...)`.
    fn add_replaced(&mut self, w: &Word, k: usize, f: &FormElement, c: &Scalar) {
        for (m, v) in f.terms() {
            let mut w2 = w.clone();
            w2[k] = m.clone();
            self.add_term(w2, &(c * v));
        }
    }

    /// `b_0(theta_1..theta_N) = sum_k (-1)^{n_{k-1}} (.., d_T theta_k, ..)`.
    pub fn b0(&self) -> BarChain {
        let t = &self.table;
        let mut out = Self::zero(t);
        for (w, c) in &self.terms {
            for k in 0..w.len() {
                let dt = FormElement::monomial(t, w[k].clone(), Scalar::one()).d_t();
                let s = Scalar::int(sign_of(n_k(t, w, k).rem_euclid(2) == 1) as i64);
                out.add_replaced(w, k, &dt, &(c * &s));
            }
        }
        out
    }

    /// `b_1(theta_1..theta_N) = -sum_k (-1)^{n_k} (.., theta_k theta_{k+1}, ..)`.
    pub fn b1(&self) -> BarChain {
        let t = &self.table;
        let mut out = Self::zero(t);
        for (w, c) in &self.terms {
            for k in 1..w.len() {
                if let Some((s, m)) = t.mul_monomials(&w[k - 1], &w[k]) {
                    let sign = -sign_of(n_k(t, w, k).rem_euclid(2) == 1) * s as i32;
                    let mut w2 = w[..k - 1].to_vec();
                    w2.push(m);
                    w2.extend_from_slice(&w[k + 1..]);
                    out.add_term(w2, &(c * &Scalar::int(sign as i64)));
                }
            }
        }
        out
    }

    pub fn b(&self) -> BarChain {
        self.b0().add(&self.b1())
    }

    /// Signed rotation moving the first entry to the end.
    pub fn rotate(&self) -> BarChain {
        let t = &self.table;
        let mut out = Self::zero(t);
        for (w, c) in &self.terms {
            if w.is_empty() {
                out.add_term(w.clone(), c);
                continue;
            }
            let mut w2 = w[1..].to_vec();
            w2.push(w[0].clone());
            out.add_term(w2, &(c * &Scalar::int(rotation_sign(t, w, 1) as i64)));
        }
        out
    }

    /// Membership in the cyclic span: invariance under the signed rotation.
    pub fn is_cyclic(&self) -> bool {
        self.rotate() == *self
    }

    /// Applies [`cyclic_symmetrize`] word by word.
    pub fn cyclic_symmetrize(&self) -> BarChain {
        let mut out = Self::zero(&self.table);
        for (w, c) in &self.terms {
            out = out.add(&cyclic_symmetrize(&self.table, w).scale(c));
        }
        out
    }

    /// Restriction `i(theta_1..theta_N) = theta''_1 ... theta''_N / N!`.
    pub fn restrict_i(&self) -> FormElement {
        let t = &self.table;
        let mut out = FormElement::zero(t);
        for (w, c) in &self.terms {
            if w.iter().any(|m| !m.sigma) {
                continue;
            }
            let mut prod = FormElement::one(t);
            for m in w {
                prod = &prod * &FormElement::monomial(t, m.without_sigma(), Scalar::one());
            }
            out = &out + &prod.scale(&(c / &factorial(w.len())));
        }
        out
    }

    pub fn max_len(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    /// Parity of the chain in the shifted grading, when homogeneous.
    pub fn parity(&self) -> Option<bool> {
        let mut ps = self.terms.keys().map(|w| n_k(&self.table, w, w.len()).rem_euclid(2) == 1);
        let first = ps.next()?;
        ps.all(|p| p == first).then_some(first)
    }
}

pub fn factorial(n: usize) -> Scalar {
    Scalar::int((1..=n as i64).product())
}

/// `(-1)^{n_k (n_N - n_k)}` for rotating the first `k` entries to the end.
pub fn rotation_sign(table: &GeneratorTable, w: &[Monomial], k: usize) -> i32 {
    let nk = n_k(table, w, k);
    let nn = n_k(table, w, w.len());
    sign_of((nk * (nn - nk)).rem_euclid(2) == 1)
}

/// `sum_k (-1)^{n_k (n_N - n_k)} (theta_{k+1}, .., theta_N, theta_1, .., theta_k)`
/// over the `N` distinct rotations.
pub fn cyclic_symmetrize(table: &Arc<GeneratorTable>, w: &[Monomial]) -> BarChain {
    let mut out = BarChain::zero(table);
    if w.is_empty() {
        out.add_term(Vec::new(), &Scalar::one());
        return out;
    }
    for k in 0..w.len() {
        let mut w2 = w[k..].to_vec();
        w2.extend_from_slice(&w[..k]);
        out.add_term(w2, &Scalar::int(rotation_sign(table, w, k) as i64));
    }
    out
}

impl fmt::Display for BarChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (w, c) in &self.terms {
            if !first {
                writeln!(f)?;
            }
            first = false;
            let entries: Vec<String> = w.iter().map(|m| self.table.format_monomial(m)).collect();
            write!(f, "{} * [{}]", c, entries.join(", "))?;
        }
        Ok(())
    }
}

/// Values a cochain can take.
pub trait CochainValue: Clone + Send + Sync + 'static {
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn scale(&self, s: &Scalar) -> Self;
    fn max_abs(&self) -> f64;
}

impl CochainValue for Scalar {
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn scale(&self, s: &Scalar) -> Self {
        self * s
    }
    fn max_abs(&self) -> f64 {
        self.abs()
    }
}

pub type CMatrix = DMatrix<Complex64>;

impl CochainValue for CMatrix {
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn scale(&self, s: &Scalar) -> Self {
        self * s.to_c64()
    }
    fn max_abs(&self) -> f64 {
        self.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

type EvalFn<V> = dyn Fn(&[Monomial]) -> V + Send + Sync;

/// Multilinear functional on bar words with a declared parity.
#[derive(Clone)]
pub struct Cochain<V: CochainValue> {
    table: Arc<GeneratorTable>,
    odd: bool,
    zero: V,
    eval: Arc<EvalFn<V>>,
}

impl<V: CochainValue> Cochain<V> {
    /// Cochain given by a rule on monomial words.
    pub fn new(
        table: &Arc<GeneratorTable>,
        odd: bool,
        zero: V,
        f: impl Fn(&[Monomial]) -> V + Send + Sync + 'static,
    ) -> Self {
        Cochain { table: table.clone(), odd, zero, eval: Arc::new(f) }
    }

    /// Finitely supported cochain; words outside `support` evaluate to zero.
    pub fn finite(table: &Arc<GeneratorTable>, odd: bool, zero: V, support: BTreeMap<Word, V>) -> Self {
        let z = zero.clone();
        Self::new(table, odd, zero, move |w| support.get(w).cloned().unwrap_or_else(|| z.clone()))
    }

    /// Arity-0 value `one`, zero elsewhere.
    pub fn unit(table: &Arc<GeneratorTable>, zero: V, one: V) -> Self {
        let z = zero.clone();
        Self::new(table, false, zero, move |w| if w.is_empty() { one.clone() } else { z.clone() })
    }

    pub fn is_odd(&self) -> bool {
        self.odd
    }

    pub fn table(&self) -> &Arc<GeneratorTable> {
        &self.table
    }

    pub fn zero_value(&self) -> &V {
        &self.zero
    }

    pub fn eval_word(&self, w: &[Monomial]) -> V {
        (self.eval)(w)
    }

    pub fn eval_chain(&self, c: &BarChain) -> V {
        let mut acc = self.zero.clone();
        for (w, coeff) in c.terms() {
            acc = acc.add(&self.eval_word(w).scale(coeff));
        }
        acc
    }

    pub fn eval_forms(&self, entries: &[FormElement]) -> V {
        self.eval_chain(&BarChain::from_forms(&self.table, entries))
    }

    /// `(l1 l2)(theta) = sum_k (-1)^{n_k |l2|} l1(theta_1..theta_k) l2(theta_{k+1}..theta_N)`.
    pub fn mul(&self, other: &Cochain<V>) -> Cochain<V> {
        let (a, b) = (self.clone(), other.clone());
        let table = self.table.clone();
        Self::new(&self.table, self.odd ^ other.odd, self.zero.clone(), move |w| {
            let mut acc = a.zero.clone();
            for k in 0..=w.len() {
                let mut term = a.eval_word(&w[..k]).mul(&b.eval_word(&w[k..]));
                if b.odd && n_k(&table, w, k).rem_euclid(2) == 1 {
                    term = term.scale(&Scalar::int(-1));
                }
                acc = acc.add(&term);
            }
            acc
        })
    }

    /// `(beta l)(theta) = -(-1)^{|l|} l(b theta)`.
    pub fn beta(&self) -> Cochain<V> {
        let a = self.clone();
        let table = self.table.clone();
        let s = Scalar::int(if self.odd { 1 } else { -1 });
        Self::new(&self.table, !self.odd, self.zero.clone(), move |w| {
            let chain = BarChain::word(&table, w.to_vec(), Scalar::one()).b();
            a.eval_chain(&chain).scale(&s)
        })
    }

    pub fn add(&self, other: &Cochain<V>) -> Cochain<V> {
        let (a, b) = (self.clone(), other.clone());
        Self::new(&self.table, self.odd, self.zero.clone(), move |w| a.eval_word(w).add(&b.eval_word(w)))
    }

    pub fn scale(&self, s: &Scalar) -> Cochain<V> {
        let (a, s) = (self.clone(), s.clone());
        Self::new(&self.table, self.odd, self.zero.clone(), move |w| a.eval_word(w).scale(&s))
    }

    pub fn sub(&self, other: &Cochain<V>) -> Cochain<V> {
        self.add(&other.scale(&Scalar::int(-1)))
    }
}

/// Outcome of [`check_bar`]: number of violations of each law.
#[derive(Clone, Debug, Default, PartialEq, serde::Serialize)]
pub struct BarReport {
    pub chains: usize,
    pub b0_squared: usize,
    pub b1_squared: usize,
    pub anticommutator: usize,
    pub b_squared: usize,
    pub cyclic_not_stable: usize,
    pub cochain_words: usize,
    pub beta_not_derivation: usize,
    pub beta_squared: usize,
    pub dga_failures: Vec<crate::multiform::DgaFailure>,
    pub pass: bool,
}

/// Runs the bar-complex laws on `chains` random chains over `table`, and
/// the cochain laws on as many random words.
pub fn check_bar<R: rand::Rng>(rng: &mut R, table: &Arc<GeneratorTable>, chains: usize, max_len: usize) -> BarReport {
    let mut rep = BarReport { chains, cochain_words: chains, ..Default::default() };
    rep.dga_failures = crate::multiform::check_dga(table).failures;
    for _ in 0..chains {
        let c = random::chain(rng, table, 3, max_len);
        let (b0, b1) = (c.b0(), c.b1());
        rep.b0_squared += !b0.b0().is_zero() as usize;
        rep.b1_squared += !b1.b1().is_zero() as usize;
        rep.anticommutator += !b0.b1().add(&b1.b0()).is_zero() as usize;
        rep.b_squared += !c.b().b().is_zero() as usize;
        let cyc = cyclic_symmetrize(table, &random::word(rng, table, max_len));
        rep.cyclic_not_stable += !cyc.b().is_cyclic() as usize;
    }
    for _ in 0..chains {
        let odd1 = rng.gen_bool(0.5);
        let l1 = random::dense_scalar_cochain(rng, table, odd1, max_len);
        let odd2 = rng.gen_bool(0.5);
        let l2 = random::dense_scalar_cochain(rng, table, odd2, max_len);
        let w = random::word(rng, table, max_len);
        let lhs = l1.mul(&l2).beta().eval_word(&w);
        let s = Scalar::int(if odd1 { -1 } else { 1 });
        let rhs = &l1.beta().mul(&l2).eval_word(&w) + &(&s * &l1.mul(&l2.beta()).eval_word(&w));
        rep.beta_not_derivation += !(&lhs - &rhs).is_zero() as usize;
        rep.beta_squared += !l1.beta().beta().eval_word(&w).is_zero() as usize;
    }
    rep.pass = rep.dga_failures.is_empty()
        && rep.b0_squared + rep.b1_squared + rep.anticommutator + rep.b_squared + rep.cyclic_not_stable == 0
        && rep.beta_not_derivation + rep.beta_squared == 0;
    rep
}

/// Random chains for property checks.
pub mod random {
    use super::*;
    use crate::multiform::random as rf;
    use rand::Rng;

    pub fn word<R: Rng>(rng: &mut R, table: &Arc<GeneratorTable>, max_len: usize) -> Word {
        (0..rng.gen_range(0..=max_len)).map(|_| rf::monomial(rng, table, 2)).collect()
    }

    pub fn chain<R: Rng>(rng: &mut R, table: &Arc<GeneratorTable>, n_words: usize, max_len: usize) -> BarChain {
        let mut c = BarChain::zero(table);
        for _ in 0..n_words {
            c = c.add(&BarChain::word(table, word(rng, table, max_len), rf::small_int(rng)));
        }
        c
    }

    /// Finitely supported scalar cochain on random words of length `<= max_len`.
    pub fn scalar_cochain<R: Rng>(
        rng: &mut R,
        table: &Arc<GeneratorTable>,
        odd: bool,
        n_words: usize,
        max_len: usize,
    ) -> Cochain<Scalar> {
        let mut support = BTreeMap::new();
        for _ in 0..n_words {
            support.insert(word(rng, table, max_len), rf::small_int(rng));
        }
        Cochain::finite(table, odd, Scalar::zero(), support)
    }

    /// Scalar cochain nonzero on most words up to `max_arity`: a product of
    /// small integers hashed from `(seed, position, entry)`.
    pub fn dense_scalar_cochain<R: Rng>(
        rng: &mut R,
        table: &Arc<GeneratorTable>,
        odd: bool,
        max_arity: usize,
    ) -> Cochain<Scalar> {
        use std::hash::{Hash, Hasher};
        let seed: u64 = rng.gen();
        Cochain::new(table, odd, Scalar::zero(), move |w| {
            if w.len() > max_arity {
                return Scalar::zero();
            }
            let mut v = 1i64;
            for (i, m) in w.iter().enumerate() {
                let mut h = std::collections::hash_map::DefaultHasher::new();
                (seed, i, w.len(), m).hash(&mut h);
                v *= (h.finish() % 7) as i64 - 3;
            }
            let mut h = std::collections::hash_map::DefaultHasher::new();
            (seed, w.len()).hash(&mut h);
            Scalar::int(v * ((h.finish() % 5) as i64 - 2))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiform::{check_dga, random as rf};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn table() -> Arc<GeneratorTable> {
        let mut t = GeneratorTable::new(6);
        let x = t.add("x", 1).unwrap();
        let y = t.add("y", 2).unwrap();
        t.add("f", 2).unwrap();
        t.add("g", 2).unwrap();
        t.set_d(x, &[(Scalar::one(), vec![y])]);
        Arc::new(t)
    }

    fn form(t: &Arc<GeneratorTable>, s: &str) -> FormElement {
        FormElement::parse(t, s).unwrap()
    }

    #[test]
    fn b0_small_cases() {
        let t = table();
        assert!(BarChain::empty_word(&t).b0().is_zero());
        let th = form(&t, "x + sigma*y");
        assert_eq!(BarChain::from_forms(&t, &[th.clone()]).b0(), BarChain::from_forms(&t, &[th.d_t()]));
    }

    #[test]
    fn b1_small_cases() {
        let t = table();
        let f = form(&t, "f");
        let g = form(&t, "g");
        assert!(BarChain::from_forms(&t, &[f.clone()]).b1().is_zero());
        // n_1 = |f| - 1 = 1, so the sign is -(-1)^1 = +1
        let expected = BarChain::from_forms(&t, &[&f * &g]);
        assert_eq!(BarChain::from_forms(&t, &[f, g]).b1(), expected);
    }

    #[test]
    fn cyclic_symmetrize_two_entries() {
        let t = table();
        let w = BarChain::from_forms(&t, &[form(&t, "x"), form(&t, "sigma*f")]);
        let (word, _) = w.terms().next().unwrap();
        let n1 = n_k(&t, word, 1);
        let n2 = n_k(&t, word, 2);
        let s = if (n1 * (n2 - n1)).rem_euclid(2) == 1 { -1 } else { 1 };
        let swapped = BarChain::word(&t, vec![word[1].clone(), word[0].clone()], Scalar::int(s));
        assert_eq!(cyclic_symmetrize(&t, word), w.add(&swapped));
        assert!(cyclic_symmetrize(&t, word).is_cyclic());
    }

    #[test]
    fn restriction_examples() {
        let t = table();
        let c = BarChain::from_forms(&t, &[form(&t, "sigma*f"), form(&t, "sigma*g")]);
        assert_eq!(c.restrict_i(), (&form(&t, "f") * &form(&t, "g")).scale(&Scalar::ratio(1, 2)));
        let c = BarChain::from_forms(&t, &[form(&t, "x"), form(&t, "sigma*g")]);
        assert!(c.restrict_i().is_zero());
        assert_eq!(BarChain::empty_word(&t).restrict_i(), FormElement::one(&t));
    }

    #[test]
    fn differentials_square_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let t = rf::dga_table(&mut rng, 6);
            assert!(check_dga(&t).ok);
            for _ in 0..20 {
                let c = random::chain(&mut rng, &t, 3, 4);
                assert!(c.b0().b0().is_zero());
                assert!(c.b1().b1().is_zero());
                assert!(c.b0().b1().add(&c.b1().b0()).is_zero());
                assert!(c.b().b().is_zero());
            }
        }
    }

    #[test]
    fn cyclic_span_is_b_stable() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..5 {
            let t = rf::dga_table(&mut rng, 6);
            for _ in 0..20 {
                let w = random::word(&mut rng, &t, 4);
                let s = cyclic_symmetrize(&t, &w);
                assert!(s.is_cyclic());
                assert!(s.b().is_cyclic(), "b of {s} not cyclic");
            }
        }
    }

    #[test]
    fn restriction_of_sigma_pure_symmetrization() {
        let t = table();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..30 {
            let w: Word = (0..rng.gen_range(1..4))
                .map(|_| {
                    let mut m = rf::monomial(&mut rng, &t, 2);
                    m.sigma = true;
                    m
                })
                .collect();
            let single = BarChain::word(&t, w.clone(), Scalar::one());
            let lhs = cyclic_symmetrize(&t, &w).restrict_i();
            let rhs = single.restrict_i().scale(&Scalar::int(w.len() as i64));
            assert_eq!(lhs, rhs);
        }
    }

    use rand::Rng;

    #[test]
    fn cochain_product_unit_and_associativity() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let t = rf::dga_table(&mut rng, 6);
        let unit = Cochain::unit(&t, Scalar::zero(), Scalar::one());
        for _ in 0..10 {
            let odd = [rng.gen_bool(0.5), rng.gen_bool(0.5), rng.gen_bool(0.5)];
            let l: Vec<_> = odd.iter().map(|&o| random::dense_scalar_cochain(&mut rng, &t, o, 3)).collect();
            let lhs = l[0].mul(&l[1]).mul(&l[2]);
            let rhs = l[0].mul(&l[1].mul(&l[2]));
            let one = l[0].mul(&unit);
            for _ in 0..30 {
                let w = random::word(&mut rng, &t, 4);
                assert_eq!(lhs.eval_word(&w), rhs.eval_word(&w));
                assert_eq!(one.eval_word(&w), l[0].eval_word(&w));
            }
        }
    }

    #[test]
    fn beta_is_a_square_zero_derivation() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let t = rf::dga_table(&mut rng, 6);
        let unit = Cochain::unit(&t, Scalar::zero(), Scalar::one());
        for _ in 0..10 {
            let (o1, o2) = (rng.gen_bool(0.5), rng.gen_bool(0.5));
            let l1 = random::dense_scalar_cochain(&mut rng, &t, o1, 3);
            let l2 = random::dense_scalar_cochain(&mut rng, &t, o2, 3);
            let lhs = l1.mul(&l2).beta();
            let s = Scalar::int(if o1 { -1 } else { 1 });
            let rhs = l1.beta().mul(&l2).add(&l1.mul(&l2.beta()).scale(&s));
            let bb = l1.beta().beta();
            for _ in 0..30 {
                let w = random::word(&mut rng, &t, 3);
                assert_eq!(lhs.eval_word(&w), rhs.eval_word(&w));
                assert!(bb.eval_word(&w).is_zero());
                assert!(unit.beta().eval_word(&w).is_zero());
            }
        }
    }

    #[test]
    fn check_bar_suite() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let table = rf::dga_table(&mut rng, 4);
        let rep = check_bar(&mut rng, &table, 20, 3);
        assert!(rep.pass, "{rep:?}");
    }
}
