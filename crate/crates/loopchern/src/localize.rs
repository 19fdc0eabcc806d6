//! The `t -> 0` limit of `Ch_t(theta_1, ..., theta_N)` evaluated on the
//! symbol level: single insertions `F(theta)` have symbol `-theta''`, double
//! insertions have symbol 0, and the heat factors convolve to `H_1`.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::barcx::factorial;
use crate::clifford::{getzler_order, str_constant, Factor, OperatorWord};
use crate::mehler::{a_hat, mehler_kernel, twisted_convolve, CurvatureMatrix, GaussianKernel, MehlerError, PiScalar};
use crate::multiform::FormElement;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LocalizeError {
    #[error("F vanishes identically on {0} arguments")]
    TooManySlots(usize),
    #[error("invalid gap pattern {0:?} for a word of length {1}")]
    InvalidPattern(Vec<usize>, usize),
    #[error("word entries must be homogeneous")]
    NotHomogeneous,
    #[error(transparent)]
    Mehler(#[from] MehlerError),
}

/// How the simplex integral of the (time independent) integrand is taken.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum TimeMode {
    /// Exact volume `1/N!`, with the heat factors convolved at equally spaced times.
    Symbolic,
    /// Heat factors convolved at random rational times and the volume
    /// estimated by Monte Carlo.
    Sampled { samples: usize, seed: u64 },
}

#[derive(Clone, Debug)]
pub struct LocalizationCase {
    pub r: CurvatureMatrix,
    pub word: Vec<FormElement>,
    /// Block ends `1 <= i_1 < ... < i_k = N`.
    pub ends: Vec<usize>,
    pub mode: TimeMode,
}

/// Symbol at `t = 0` of `F(theta)` (`-theta''`) or `F(theta_1, theta_2)` (0).
pub fn symbol_of_f(thetas: &[FormElement]) -> Result<FormElement, LocalizeError> {
    match thetas {
        [th] => Ok(-&th.double_prime()),
        [a, _] => Ok(FormElement::zero(a.table())),
        _ => Err(LocalizeError::TooManySlots(thetas.len())),
    }
}

fn validate(ends: &[usize], n: usize) -> Result<(), LocalizeError> {
    let bad = || LocalizeError::InvalidPattern(ends.to_vec(), n);
    if n == 0 {
        return if ends.is_empty() { Ok(()) } else { Err(bad()) };
    }
    if ends.last() != Some(&n) {
        return Err(bad());
    }
    let mut prev = 0;
    for &e in ends {
        if e <= prev || e - prev > 2 {
            return Err(bad());
        }
        prev = e;
    }
    Ok(())
}

/// Block ends of every admissible pattern for a word of length `n`.
pub fn admissible_patterns(n: usize) -> Vec<Vec<usize>> {
    crate::fredholm::gap_patterns(n)
        .into_iter()
        .map(|sizes| {
            sizes
                .iter()
                .scan(0, |acc, s| {
                    *acc += s;
                    Some(*acc)
                })
                .collect()
        })
        .collect()
}

fn degree(th: &FormElement) -> Result<i32, LocalizeError> {
    if th.is_zero() {
        return Ok(0);
    }
    th.degree().ok_or(LocalizeError::NotHomogeneous)
}

/// Getzler orders `l_0, ..., l_k` of the heat factor and the insertions:
/// `|theta| + 1` for a single slot, `|theta_1| + |theta_2|` for a double one.
/// Their sum is `|theta| + 2k - N`.
pub fn getzler_orders(word: &[FormElement], ends: &[usize]) -> Result<Vec<i32>, LocalizeError> {
    validate(ends, word.len())?;
    let mut out = vec![0];
    let mut prev = 0;
    for &e in ends {
        let block = &word[prev..e];
        let l = if block.len() == 1 {
            let ord = degree(&block[0])? + 1;
            if ord >= 0 {
                getzler_order(&OperatorWord(vec![Factor::Clifford { order: ord as usize }])) as i32
            } else {
                ord
            }
        } else {
            degree(&block[0])? + degree(&block[1])?
        };
        out.push(l);
        prev = e;
    }
    let total: i32 = word.iter().map(degree).sum::<Result<i32, _>>()?;
    let k = ends.len() as i32;
    assert_eq!(out.iter().sum::<i32>(), total + 2 * k - word.len() as i32, "Getzler bookkeeping");
    Ok(out)
}

/// Monte Carlo estimate of `vol(Delta_n) = 1/n!` from points of `[0,1]^n`.
pub fn simplex_volume_mc<R: Rng>(rng: &mut R, n: usize, samples: usize) -> f64 {
    let hits = (0..samples).filter(|_| (0..n).map(|_| rng.gen::<f64>()).sum::<f64>() <= 1.0).count();
    hits as f64 / samples as f64
}

/// `H_{tau_0} * H_{tau_1} * ... * H_{tau_N}`.
pub fn convolve_chain(r: &CurvatureMatrix, taus: &[Scalar]) -> Result<GaussianKernel, MehlerError> {
    let mut acc = mehler_kernel(&taus[0], r)?;
    for t in &taus[1..] {
        acc = twisted_convolve(&acc, &mehler_kernel(t, r)?, r)?;
    }
    Ok(acc)
}

/// Localized value: `norm * top`, `top` a top-degree form.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalizedTerm {
    pub norm: PiScalar,
    pub top: FormElement,
}

impl LocalizedTerm {
    /// `norm.coeff * top`, the coefficient form multiplying `pi^{norm.pi_power}`.
    pub fn scaled(&self) -> FormElement {
        self.top.scale(&self.norm.coeff)
    }
}

pub fn localized_term(case: &LocalizationCase) -> Result<LocalizedTerm, LocalizeError> {
    let n = case.word.len();
    validate(&case.ends, n)?;
    getzler_orders(&case.word, &case.ends)?;
    let d = case.r.dim();
    let table = case.r.table().clone();
    let k = case.ends.len();
    let mut wedge = FormElement::one(&table);
    let mut prev = 0;
    for &e in &case.ends {
        wedge = &wedge * &symbol_of_f(&case.word[prev..e])?;
        prev = e;
    }
    if k % 2 == 1 {
        wedge = -&wedge;
    }
    let h = (d / 2) as i32;
    if k < n || wedge.is_zero() {
        return Ok(LocalizedTerm { norm: PiScalar::new(Scalar::zero(), -h), top: FormElement::zero(&table) });
    }
    let (kernel, volume) = match case.mode {
        TimeMode::Symbolic => {
            let taus = vec![Scalar::ratio(1, n as i64 + 1); n + 1];
            (convolve_chain(&case.r, &taus)?, factorial(n).inv())
        }
        TimeMode::Sampled { samples, seed } => {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let first = convolve_chain(&case.r, &random_times(&mut rng, n))?;
            for _ in 1..samples.min(4) {
                let other = convolve_chain(&case.r, &random_times(&mut rng, n))?;
                assert_eq!(other.residual(&first), 0.0, "integrand depends on the simplex point");
            }
            (first, Scalar::float(simplex_volume_mc(&mut rng, n, samples)))
        }
    };
    let (norm, g) = kernel.at_origin();
    let top = (&g * &wedge).top().scale(&(&str_constant(d) * &volume));
    Ok(LocalizedTerm { norm, top })
}

/// Random point of the simplex with rational coordinates, as `N + 1` gaps.
fn random_times<R: Rng>(rng: &mut R, n: usize) -> Vec<Scalar> {
    const DEN: i64 = 997;
    let mut cuts: Vec<i64> = (0..n).map(|_| rng.gen_range(1..DEN)).collect();
    cuts.sort_unstable();
    cuts.dedup();
    while cuts.len() < n {
        cuts.push(rng.gen_range(1..DEN));
        cuts.sort_unstable();
        cuts.dedup();
    }
    let mut out = Vec::with_capacity(n + 1);
    let mut prev = 0;
    for c in cuts.into_iter().chain(std::iter::once(DEN)) {
        out.push(Scalar::ratio(c - prev, DEN));
        prev = c;
    }
    out
}

/// Splits each entry into homogeneous components and returns every
/// resulting word of homogeneous entries.
pub fn homogeneous_runs(word: &[FormElement]) -> Vec<Vec<FormElement>> {
    let mut runs: Vec<Vec<FormElement>> = vec![Vec::new()];
    for th in word {
        let comps: Vec<FormElement> = th.homogeneous_components().into_values().collect();
        let mut next = Vec::new();
        for run in &runs {
            for c in &comps {
                let mut r = run.clone();
                r.push(c.clone());
                next.push(r);
            }
        }
        runs = next;
    }
    runs
}

/// `(2 pi i)^{-d/2} (1/N!) [A-hat(R) ^ theta_1'' ^ ... ^ theta_N'']_top`.
pub fn rhs_integrand(r: &CurvatureMatrix, word: &[FormElement]) -> LocalizedTerm {
    let d = r.dim();
    let h = (d / 2) as i32;
    let mut f = a_hat(r);
    for th in word {
        f = &f * &th.double_prime();
    }
    let coeff = (Scalar::int(2) * Scalar::i()).powi(-h) * factorial(word.len()).inv();
    LocalizedTerm { norm: PiScalar::new(coeff, -h), top: f.top() }
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitReport {
    pub d: usize,
    pub n: usize,
    pub lhs: String,
    pub rhs: String,
    pub pi_power: i32,
    pub residual: f64,
    pub exact: bool,
    /// Patterns with fewer than `N` blocks that evaluated to something nonzero.
    pub nonzero_lower_patterns: usize,
    pub patterns: usize,
    pub pass: bool,
}

/// Sums [`localized_term`] over every admissible pattern of every homogeneous
/// run and compares with [`rhs_integrand`].
pub fn limit_theorem_check(r: &CurvatureMatrix, word: &[FormElement], mode: TimeMode) -> Result<LimitReport, LocalizeError> {
    let d = r.dim();
    let n = word.len();
    let h = (d / 2) as i32;
    let table = r.table().clone();
    let mut lhs = FormElement::zero(&table);
    let mut nonzero_lower = 0;
    let mut patterns = 0;
    for run in homogeneous_runs(word) {
        for ends in admissible_patterns(n) {
            patterns += 1;
            let case = LocalizationCase { r: r.clone(), word: run.clone(), ends: ends.clone(), mode };
            let term = localized_term(&case)?;
            assert_eq!(term.norm.pi_power, -h);
            if ends.len() < n && !term.top.is_zero() {
                nonzero_lower += 1;
            }
            lhs = &lhs + &term.scaled();
        }
    }
    let rhs = rhs_integrand(r, word).scaled();
    let residual = (&lhs - &rhs).max_abs_coeff();
    let exact = lhs.is_exact() && rhs.is_exact();
    let tol = if exact { 0.0 } else { 1e-12 };
    Ok(LimitReport {
        d,
        n,
        lhs: lhs.to_string(),
        rhs: rhs.to_string(),
        pi_power: -h,
        residual,
        exact,
        nonzero_lower_patterns: nonzero_lower,
        patterns,
        pass: residual <= tol && nonzero_lower == 0,
    })
}

/// Random localization data for tests and the CLI.
pub mod random {
    use super::*;
    use crate::multiform::GeneratorTable;
    use std::sync::Arc;

    /// Table of dimension `d` with 2-forms `r1, r2` for the curvature and
    /// generators `u1, u2` (degree 1) and `w` (degree 2) for the word.
    pub fn table(d: usize) -> Arc<GeneratorTable> {
        let mut t = GeneratorTable::new(d);
        for (name, deg) in [("r1", 2), ("r2", 2), ("u1", 1), ("u2", 1), ("w", 2)] {
            t.add(name, deg).expect("fresh name");
        }
        Arc::new(t)
    }

    /// Entry `sigma * a + b` with `a, b` random small forms.
    pub fn entry<R: Rng>(rng: &mut R, table: &Arc<GeneratorTable>) -> FormElement {
        let gens = ["u1", "u2", "w", "r1"];
        let pick = |rng: &mut R| {
            let mut f = FormElement::scalar(table, Scalar::int(rng.gen_range(1..=3)));
            for _ in 0..rng.gen_range(0..=2) {
                let g = FormElement::named(table, gens[rng.gen_range(0..gens.len())]).expect("known");
                f = &f * &g;
            }
            f
        };
        let mut a = FormElement::zero(table);
        for _ in 0..rng.gen_range(1..=3) {
            a = &a + &pick(rng);
        }
        let b = pick(rng);
        &(&FormElement::sigma(table) * &a) + &b
    }

    pub fn case<R: Rng>(rng: &mut R, d: usize, n: usize) -> (CurvatureMatrix, Vec<FormElement>) {
        let t = table(d);
        let r = crate::mehler::random::curvature(rng, &t, d);
        let word = (0..n).map(|_| entry(rng, &t)).collect();
        (r, word)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn symbols() {
        let t = random::table(2);
        let w = FormElement::named(&t, "w").unwrap();
        let th = &FormElement::sigma(&t) * &w;
        assert_eq!(symbol_of_f(&[th.clone()]).unwrap(), -&w);
        assert!(symbol_of_f(&[th.clone(), th.clone()]).unwrap().is_zero());
        assert!(symbol_of_f(&[w.clone()]).unwrap().is_zero());
        assert_eq!(symbol_of_f(&[th.clone(), th.clone(), th]).unwrap_err(), LocalizeError::TooManySlots(3));
    }

    #[test]
    fn patterns_and_orders() {
        assert_eq!(admissible_patterns(3), vec![vec![1, 2, 3], vec![1, 3], vec![2, 3]]);
        let t = random::table(4);
        let s = FormElement::sigma(&t);
        let u = FormElement::named(&t, "u1").unwrap();
        let w = FormElement::named(&t, "w").unwrap();
        let word = vec![&s * &w, u.clone(), &s * &u];
        for ends in admissible_patterns(3) {
            getzler_orders(&word, &ends).unwrap();
        }
        assert_eq!(getzler_orders(&word, &[1, 2, 3]).unwrap(), vec![0, 2, 2, 1]);
        assert!(getzler_orders(&word, &[3]).is_err());
    }

    #[test]
    fn lower_patterns_vanish_and_n0() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (r, word) = random::case(&mut rng, 4, 2);
        let run = &homogeneous_runs(&word)[0];
        let case = LocalizationCase { r: r.clone(), word: run.clone(), ends: vec![2], mode: TimeMode::Symbolic };
        assert!(localized_term(&case).unwrap().top.is_zero());
        let empty = LocalizationCase { r: r.clone(), word: vec![], ends: vec![], mode: TimeMode::Symbolic };
        let got = localized_term(&empty).unwrap();
        assert_eq!(got.scaled(), rhs_integrand(&r, &[]).scaled());
        assert_eq!(got.scaled(), a_hat(&r).top().scale(&Scalar::ratio(-1, 4)));
    }

    #[test]
    fn flat_d2_single_insertion() {
        let t = random::table(2);
        let r = CurvatureMatrix::zero(&t, 2);
        let w = FormElement::named(&t, "w").unwrap();
        let alpha = Scalar::ratio(3, 5);
        let th = (&FormElement::sigma(&t) * &w).scale(&alpha);
        let case = LocalizationCase { r: r.clone(), word: vec![th], ends: vec![1], mode: TimeMode::Symbolic };
        let got = localized_term(&case).unwrap();
        assert_eq!(got.norm.pi_power, -1);
        // (2 pi i)^{-1} alpha w
        let expect = w.scale(&(&alpha * &(Scalar::int(2) * Scalar::i()).inv()));
        assert_eq!(got.scaled(), expect);
    }

    #[test]
    fn limit_theorem_random_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut nontrivial = 0;
        for _ in 0..6 {
            for (d, n) in [(2, 0), (2, 1), (2, 2), (4, 1), (4, 2), (4, 3)] {
                let (r, word) = random::case(&mut rng, d, n);
                let rep = limit_theorem_check(&r, &word, TimeMode::Symbolic).unwrap();
                assert!(rep.pass && rep.exact, "{rep:?}");
                if rep.rhs != "0" {
                    nontrivial += 1;
                }
            }
        }
        assert!(nontrivial >= 10, "{nontrivial}");
    }

    #[test]
    fn sampled_mode_agrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (r, word) = random::case(&mut rng, 4, 2);
        let run = homogeneous_runs(&word).into_iter().find(|w| {
            let c = LocalizationCase { r: r.clone(), word: w.clone(), ends: vec![1, 2], mode: TimeMode::Symbolic };
            !localized_term(&c).unwrap().top.is_zero()
        });
        if let Some(w) = run {
            let sym = LocalizationCase { r: r.clone(), word: w.clone(), ends: vec![1, 2], mode: TimeMode::Symbolic };
            let smp = LocalizationCase { mode: TimeMode::Sampled { samples: 200_000, seed: 5 }, ..sym.clone() };
            let a = localized_term(&sym).unwrap().scaled();
            let b = localized_term(&smp).unwrap().scaled();
            assert!((&a - &b).max_abs_coeff() < 0.01 * (1.0 + a.max_abs_coeff()));
        }
        let v = simplex_volume_mc(&mut rng, 3, 400_000);
        assert!((v - 1.0 / 6.0).abs() < 3e-3);
    }
}
