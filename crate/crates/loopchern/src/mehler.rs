//! Gaussian kernels on `R^d` with nilpotent form-valued coefficients: the
//! A-hat form, Mehler's kernel, twisted convolution and `Str_0`.
//!
//! A kernel is `norm * G * exp(-X^T A X + X^T B Y - Y^T C Y)` where `norm`
//! is a scalar times a power of pi, `G` a form and `A, B, C` matrices of forms
//! whose constant parts carry the Gaussian decay.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::clifford::str_constant;
use crate::fredholm::{FormMatrix, FredholmError};
use crate::multiform::{FormElement, GeneratorTable};
use crate::scalar::{Scalar, Q};

/// Constant `c` in `[kappa(X, Y)] = c * sum_ij R_ij X_i Y_j`.
pub const KAPPA: (i64, i64) = (-1, 2);

pub fn kappa_constant() -> Scalar {
    Scalar::ratio(KAPPA.0, KAPPA.1)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MehlerError {
    #[error("tau must be positive")]
    NonPositiveTau,
    #[error("curvature matrix is not antisymmetric with degree-2 entries")]
    BadCurvature,
    #[error("dimension mismatch")]
    DimensionMismatch,
    #[error("numeric part of the quadratic form is not positive definite")]
    NotIntegrable,
    #[error("kernel depends on Y where a one-variable kernel is required")]
    NotOneVariable,
    #[error("order-one matching is inconsistent")]
    InconsistentMatching,
    #[error(transparent)]
    Matrix(#[from] FredholmError),
}

/// `coeff * pi^pi_power`.
#[derive(Clone, Debug, PartialEq)]
pub struct PiScalar {
    pub coeff: Scalar,
    pub pi_power: i32,
}

impl PiScalar {
    pub fn new(coeff: Scalar, pi_power: i32) -> Self {
        PiScalar { coeff, pi_power }
    }

    pub fn mul(&self, other: &PiScalar) -> PiScalar {
        PiScalar { coeff: &self.coeff * &other.coeff, pi_power: self.pi_power + other.pi_power }
    }

    pub fn to_c64(&self) -> num_complex::Complex64 {
        self.coeff.to_c64() * std::f64::consts::PI.powi(self.pi_power)
    }
}

impl fmt::Display for PiScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} * pi^{}", self.coeff, self.pi_power)
    }
}

/// Truncated power series with rational coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Series(pub Vec<Q>);

impl Series {
    fn zero(len: usize) -> Self {
        Series(vec![Q::from_integer(0.into()); len])
    }

    fn len(&self) -> usize {
        self.0.len()
    }

    pub fn mul(&self, other: &Series) -> Series {
        let n = self.len().min(other.len());
        let mut out = Series::zero(n);
        for i in 0..n {
            for j in 0..n - i {
                out.0[i + j] += &self.0[i] * &other.0[j];
            }
        }
        out
    }

    /// Multiplicative inverse; needs a nonzero constant term.
    pub fn inverse(&self) -> Series {
        let n = self.len();
        let mut out = Series::zero(n);
        out.0[0] = Q::from_integer(1.into()) / &self.0[0];
        for k in 1..n {
            let mut s = Q::from_integer(0.into());
            for j in 1..=k {
                s += &self.0[j] * &out.0[k - j];
            }
            out.0[k] = -s / &self.0[0];
        }
        out
    }

    /// `log(f)` for `f` with constant term 1.
    pub fn log(&self) -> Series {
        let n = self.len();
        let mut u = self.clone();
        u.0[0] = Q::from_integer(0.into());
        let mut out = Series::zero(n);
        let mut power = u.clone();
        for k in 1..n {
            let c = Q::new(if k % 2 == 1 { 1.into() } else { (-1).into() }, (k as i64).into());
            for i in 0..n {
                out.0[i] += &power.0[i] * &c;
            }
            power = power.mul(&u);
        }
        out
    }

    fn from_fn(n: usize, f: impl Fn(usize) -> Q) -> Series {
        Series((0..n).map(f).collect())
    }

    fn factorial(k: usize) -> Q {
        Q::from_integer((1..=k as u64).product::<u64>().max(1).into())
    }

    pub fn exp_x(n: usize) -> Series {
        Series::from_fn(n, |k| Q::from_integer(1.into()) / Series::factorial(k))
    }

    pub fn cosh(n: usize) -> Series {
        Series::from_fn(n, |k| if k % 2 == 0 { Q::from_integer(1.into()) / Series::factorial(k) } else { Q::from_integer(0.into()) })
    }

    /// `sinh(x) / x`.
    pub fn sinhc(n: usize) -> Series {
        Series::from_fn(n, |k| if k % 2 == 0 { Q::from_integer(1.into()) / Series::factorial(k + 1) } else { Q::from_integer(0.into()) })
    }

    /// `x / sinh(x)`.
    pub fn x_over_sinh(n: usize) -> Series {
        Series::sinhc(n).inverse()
    }

    /// `x coth(x)`.
    pub fn x_coth(n: usize) -> Series {
        Series::cosh(n).mul(&Series::x_over_sinh(n))
    }

    /// `e^x x / sinh(x)`.
    pub fn exp_x_over_sinh(n: usize) -> Series {
        Series::exp_x(n).mul(&Series::x_over_sinh(n))
    }
}

/// `sum_k c_k M^k` for a matrix with nilpotent entries.
pub fn apply_series(s: &Series, m: &FormMatrix) -> FormMatrix {
    let table = m.table().clone();
    let mut out = FormMatrix::identity(&table, m.size()).scale(&Scalar::rational(s.0[0].clone()));
    let mut power = FormMatrix::identity(&table, m.size());
    for c in s.0.iter().skip(1) {
        power = power.mul(m);
        if power.is_zero() {
            break;
        }
        out = out.add(&power.scale(&Scalar::rational(c.clone())));
    }
    out
}

/// `exp(f)` for a form with zero constant term.
pub fn exp_nilpotent(f: &FormElement) -> FormElement {
    assert!(f.constant().is_zero(), "exp_nilpotent needs zero constant term");
    let table = f.table();
    let mut out = FormElement::one(table);
    let mut power = FormElement::one(table);
    for k in 1..=table.dim() + 1 {
        power = (&power * f).scale(&Scalar::ratio(1, k as i64));
        if power.is_zero() {
            break;
        }
        out = &out + &power;
    }
    out
}

/// Euler operator counting curvature factors: multiplies the form-degree-`k`
/// component by `k/2`.
pub fn curvature_degree(f: &FormElement) -> FormElement {
    let t = f.table().clone();
    FormElement::from_terms(&t, f.terms().map(|(m, c)| (m.clone(), c * &Scalar::ratio(t.form_degree(m) as i64, 2))))
}

/// `d x d` antisymmetric matrix of mutually commuting 2-forms.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureMatrix {
    r: FormMatrix,
}

impl CurvatureMatrix {
    pub fn new(r: FormMatrix) -> Result<Self, MehlerError> {
        let t = r.table().clone();
        let n = r.size();
        for i in 0..n {
            for j in 0..n {
                let e = r.get(i, j);
                if e.terms().any(|(m, _)| m.sigma || t.form_degree(m) != 2) {
                    return Err(MehlerError::BadCurvature);
                }
                if *e != -r.get(j, i) {
                    return Err(MehlerError::BadCurvature);
                }
            }
        }
        Ok(CurvatureMatrix { r })
    }

    pub fn zero(table: &Arc<GeneratorTable>, d: usize) -> Self {
        CurvatureMatrix { r: FormMatrix::from_fn(d, |_, _| FormElement::zero(table)).expect("d > 0") }
    }

    pub fn dim(&self) -> usize {
        self.r.size()
    }

    pub fn table(&self) -> &Arc<GeneratorTable> {
        self.r.table()
    }

    pub fn matrix(&self) -> &FormMatrix {
        &self.r
    }

    fn series_len(&self) -> usize {
        self.table().dim() + 2
    }
}

/// `A-hat(R) = det^{1/2}((R/2) / sinh(R/2)) = exp(1/2 tr log((R/2)/sinh(R/2)))`.
pub fn a_hat(r: &CurvatureMatrix) -> FormElement {
    det_half_x_over_sinh(r, &Scalar::ratio(1, 2))
}

/// `det^{1/2}(x / sinh x)` at `x = s R`.
fn det_half_x_over_sinh(r: &CurvatureMatrix, s: &Scalar) -> FormElement {
    let n = r.series_len();
    let log = Series::x_over_sinh(n).log();
    let x = r.matrix().scale(s);
    let tr = apply_series(&log, &x).trace().scale(&Scalar::ratio(1, 2));
    exp_nilpotent(&tr)
}

/// `norm * G * exp(-X^T A X + X^T B Y - Y^T C Y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianKernel {
    pub norm: PiScalar,
    pub prefactor: FormElement,
    pub a: FormMatrix,
    pub b: FormMatrix,
    pub c: FormMatrix,
}

impl GaussianKernel {
    pub fn dim(&self) -> usize {
        self.a.size()
    }

    pub fn one_variable(norm: PiScalar, prefactor: FormElement, a: FormMatrix) -> Self {
        let zero = a.map(|e| FormElement::zero(e.table()));
        GaussianKernel { norm, prefactor, a: a.symmetrize(), b: zero.clone(), c: zero }
    }

    pub fn is_one_variable(&self) -> bool {
        self.b.is_zero() && self.c.is_zero()
    }

    /// Value at `X = Y = 0`.
    pub fn at_origin(&self) -> (PiScalar, FormElement) {
        (self.norm.clone(), self.prefactor.clone())
    }

    /// Largest coefficient difference after bringing both kernels to the
    /// same pi power; zero means exact equality.
    pub fn residual(&self, other: &GaussianKernel) -> f64 {
        let shift = other.norm.pi_power - self.norm.pi_power;
        let lhs = self.prefactor.scale(&self.norm.coeff);
        let rhs = other.prefactor.scale(&(&other.norm.coeff * &pi_power_or_float(shift)));
        let mut worst = (&lhs - &rhs).max_abs_coeff();
        let pairs = [(&self.a, &other.a), (&self.b, &other.b), (&self.c, &other.c)];
        for (x, y) in pairs {
            worst = worst.max(x.sub(y).max_abs_coeff());
        }
        worst
    }

    /// Float evaluation of the scalar part of a kernel over a table with no
    /// generators in use, at numeric `X`, `Y`.
    pub fn eval_numeric(&self, x: &[f64], y: &[f64]) -> num_complex::Complex64 {
        let q = |m: &FormMatrix, u: &[f64], v: &[f64]| {
            let mut s = num_complex::Complex64::new(0.0, 0.0);
            for i in 0..u.len() {
                for j in 0..v.len() {
                    s += m.get(i, j).constant().to_c64() * u[i] * v[j];
                }
            }
            s
        };
        let e = -q(&self.a, x, x) + q(&self.b, x, y) - q(&self.c, y, y);
        self.norm.to_c64() * self.prefactor.constant().to_c64() * e.exp()
    }
}

fn pi_power_or_float(k: i32) -> Scalar {
    if k == 0 {
        Scalar::one()
    } else {
        Scalar::float(std::f64::consts::PI.powi(k))
    }
}

fn check_tau(tau: &Scalar) -> Result<(), MehlerError> {
    match tau.as_real_rational() {
        Some(t) if t > Q::from_integer(0.into()) => Ok(()),
        None if tau.to_c64().im == 0.0 && tau.to_c64().re > 0.0 => Ok(()),
        _ => Err(MehlerError::NonPositiveTau),
    }
}

/// `(4 pi tau)^{-d/2}`.
fn heat_norm(d: usize, tau: &Scalar) -> PiScalar {
    let h = (d / 2) as i32;
    let mut coeff = (Scalar::int(4) * tau.clone()).powi(-h);
    if d % 2 == 1 {
        coeff = coeff * (Scalar::int(4) * tau.clone()).sqrt_real().inv();
    }
    PiScalar::new(coeff, -h)
}

/// `(R/8) coth(tau R/2)`.
pub fn mehler_a(tau: &Scalar, r: &CurvatureMatrix) -> FormMatrix {
    let x = r.matrix().scale(&(tau * &Scalar::ratio(1, 2)));
    apply_series(&Series::x_coth(r.series_len()), &x).scale(&(Scalar::int(4) * tau.clone()).inv())
}

/// `e^{tau R/2} (R/4) cosech(tau R/2)`.
pub fn mehler_b(tau: &Scalar, r: &CurvatureMatrix) -> FormMatrix {
    let x = r.matrix().scale(&(tau * &Scalar::ratio(1, 2)));
    apply_series(&Series::exp_x_over_sinh(r.series_len()), &x).scale(&(Scalar::int(2) * tau.clone()).inv())
}

/// `H_tau(X) = (4 pi tau)^{-d/2} det^{1/2}(tau R/2 / sinh(tau R/2)) exp(-X^T (R/8) coth(tau R/2) X)`.
pub fn mehler_kernel(tau: &Scalar, r: &CurvatureMatrix) -> Result<GaussianKernel, MehlerError> {
    check_tau(tau)?;
    let d = r.dim();
    let g = det_half_x_over_sinh(r, &(tau * &Scalar::ratio(1, 2)));
    Ok(GaussianKernel::one_variable(heat_norm(d, tau), g, mehler_a(tau, r)))
}

/// Two-point kernel of `e^{-tau L}`.
pub fn mehler_kernel_full(tau: &Scalar, r: &CurvatureMatrix) -> Result<GaussianKernel, MehlerError> {
    let mut k = mehler_kernel(tau, r)?;
    k.b = mehler_b(tau, r);
    k.c = k.a.clone();
    Ok(k)
}

/// `[kappa(X, Y)] = c sum_ij R_ij X_i Y_j` with `c` from [`KAPPA`].
pub fn kappa_form(x: &[Scalar], y: &[Scalar], r: &CurvatureMatrix) -> FormElement {
    let d = r.dim();
    assert!(x.len() == d && y.len() == d, "vector length must match R");
    let mut out = FormElement::zero(r.table());
    for i in 0..d {
        for j in 0..d {
            out = &out + &r.matrix().get(i, j).scale(&(&x[i] * &y[j]));
        }
    }
    out.scale(&kappa_constant())
}

/// Solves the order-one (in `R`) comparison of the two-point kernel with
/// `H_tau(X - Y) exp(-1/2 c X^T R Y)` for `c`.
pub fn derive_kappa_constant(tau: &Scalar, r: &CurvatureMatrix) -> Result<Scalar, MehlerError> {
    let a = mehler_a(tau, r);
    let b = mehler_b(tau, r);
    // X^T B Y = 2 X^T A Y - (c/2) X^T R Y at linear order in R
    let defect = b.sub(&a.scale(&Scalar::int(2))).map(|e| e.form_degree_part(2));
    let mut found: Option<Scalar> = None;
    for i in 0..r.dim() {
        for j in 0..r.dim() {
            let rij = r.matrix().get(i, j);
            let dij = defect.get(i, j);
            for (m, v) in rij.terms() {
                let ratio = &dij.coeff(m) / v;
                match &found {
                    None => found = Some(ratio),
                    Some(f) if *f != ratio => return Err(MehlerError::InconsistentMatching),
                    _ => {}
                }
            }
            if rij.is_zero() && !dij.is_zero() {
                return Err(MehlerError::InconsistentMatching);
            }
        }
    }
    let lambda = found.ok_or(MehlerError::InconsistentMatching)?;
    Ok(lambda * Scalar::int(-2))
}

/// Exact inverse of a scalar matrix by Gauss–Jordan elimination.
pub fn scalar_inverse(m: &[Vec<Scalar>]) -> Option<Vec<Vec<Scalar>>> {
    let n = m.len();
    let mut a: Vec<Vec<Scalar>> = m.to_vec();
    let mut inv: Vec<Vec<Scalar>> = (0..n).map(|i| (0..n).map(|j| if i == j { Scalar::one() } else { Scalar::zero() }).collect()).collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].is_zero() {
            return None;
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let p = a[col][col].inv();
        for j in 0..n {
            a[col][j] = &a[col][j] * &p;
            inv[col][j] = &inv[col][j] * &p;
        }
        for i in 0..n {
            if i != col && !a[i][col].is_zero() {
                let f = a[i][col].clone();
                for j in 0..n {
                    let (x, y) = (&a[col][j] * &f, &inv[col][j] * &f);
                    a[i][j] -= &x;
                    inv[i][j] -= &y;
                }
            }
        }
    }
    Some(inv)
}

fn scalar_det(m: &[Vec<Scalar>]) -> Scalar {
    let n = m.len();
    let mut a = m.to_vec();
    let mut det = Scalar::one();
    for col in 0..n {
        let piv = match (col..n).find(|&i| !a[i][col].is_zero()) {
            Some(p) => p,
            None => return Scalar::zero(),
        };
        if piv != col {
            a.swap(col, piv);
            det = -det;
        }
        det = &det * &a[col][col];
        for i in col + 1..n {
            let f = &a[i][col] / &a[col][col];
            for j in col..n {
                let x = &a[col][j] * &f;
                a[i][j] -= &x;
            }
        }
    }
    det
}

fn positive_definite(m: &[Vec<Scalar>]) -> bool {
    let n = m.len();
    let h = nalgebra::DMatrix::from_fn(n, n, |i, j| (m[i][j].to_c64() + m[j][i].to_c64().conj()) * 0.5);
    h.symmetric_eigen().eigenvalues.iter().all(|&l| l > 1e-14)
}

/// For symmetric `T` with positive definite constant part: `det(T)^{-1/2}` as
/// scalar times form, and `T^{-1}`.
pub fn gaussian_data(t: &FormMatrix) -> Result<(Scalar, FormElement, FormMatrix), MehlerError> {
    let table = t.table().clone();
    let t0 = t.constant_part();
    if !positive_definite(&t0) {
        return Err(MehlerError::NotIntegrable);
    }
    let t0_inv = scalar_inverse(&t0).ok_or(MehlerError::NotIntegrable)?;
    let det0 = scalar_det(&t0);
    let det0_inv_half = det0.sqrt_real().inv();
    let t0_inv_m = FormMatrix::from_scalars(&table, &t0_inv);
    let u = t0_inv_m.mul(&t.nilpotent_part());
    // det(1 + U)^{-1/2} = exp(-1/2 tr log(1 + U))
    let len = table.dim() + 2;
    let log1p = Series(
        (0..len)
            .map(|k| if k == 0 { Q::from_integer(0.into()) } else { Q::new(if k % 2 == 1 { 1.into() } else { (-1).into() }, (k as i64).into()) })
            .collect(),
    );
    let det_part = exp_nilpotent(&apply_series(&log1p, &u).trace().scale(&Scalar::ratio(-1, 2)));
    let neg_geom = Series((0..len).map(|k| Q::from_integer(if k % 2 == 0 { 1.into() } else { (-1).into() })).collect());
    let inv = apply_series(&neg_geom, &u).mul(&t0_inv_m);
    Ok((det0_inv_half, det_part, inv))
}

/// `int exp(-1/2 Z^T M Z + b^T Z) dZ = (2 pi)^{d/2} det(M)^{-1/2} exp(1/2 b^T M^{-1} b)`
/// for a constant vector `b`; returns the normalization and the form factor.
pub fn gaussian_integral(m: &FormMatrix, b: &[FormElement]) -> Result<(PiScalar, FormElement), MehlerError> {
    let d = m.size();
    if b.len() != d {
        return Err(MehlerError::DimensionMismatch);
    }
    let (det_scalar, det_form, inv) = gaussian_data(m)?;
    let table = m.table().clone();
    let mut quad = FormElement::zero(&table);
    for i in 0..d {
        for j in 0..d {
            quad = &quad + &(&(&b[i] * inv.get(i, j)) * &b[j]);
        }
    }
    let half = quad.scale(&Scalar::ratio(1, 2));
    let c0 = half.constant();
    let e = exp_nilpotent(&(&half - &FormElement::scalar(&table, c0.clone())));
    let scalar_exp = if c0.is_zero() { Scalar::one() } else { Scalar::cfloat(c0.to_c64().exp()) };
    let h = (d / 2) as i32;
    let mut coeff = Scalar::int(2).powi(h) * det_scalar * scalar_exp;
    if d % 2 == 1 {
        coeff = coeff * Scalar::float((2.0 * std::f64::consts::PI).sqrt());
    }
    Ok((PiScalar::new(coeff, h), &det_form * &e))
}

/// `(f * g)(X) = int f(X - Y) g(Y) exp(-1/2 [kappa(X, Y)]) dY`.
pub fn twisted_convolve(f: &GaussianKernel, g: &GaussianKernel, r: &CurvatureMatrix) -> Result<GaussianKernel, MehlerError> {
    twisted_convolve_with(f, g, r, &kappa_constant())
}

/// Twisted convolution with an explicit `kappa` constant.
pub fn twisted_convolve_with(
    f: &GaussianKernel,
    g: &GaussianKernel,
    r: &CurvatureMatrix,
    c: &Scalar,
) -> Result<GaussianKernel, MehlerError> {
    let d = f.dim();
    if g.dim() != d || r.dim() != d {
        return Err(MehlerError::DimensionMismatch);
    }
    if !f.is_one_variable() || !g.is_one_variable() {
        return Err(MehlerError::NotOneVariable);
    }
    // exponent -(X^T P X + 2 X^T S Y + Y^T T Y)
    let p = f.a.clone();
    let t = f.a.add(&g.a);
    let s = f.a.scale(&Scalar::int(-1)).add(&r.matrix().scale(&(c * &Scalar::ratio(1, 4))));
    let (det_scalar, det_form, t_inv) = gaussian_data(&t)?;
    let a_new = p.sub(&s.mul(&t_inv).mul(&s.transpose())).symmetrize();
    let h = (d / 2) as i32;
    let mut coeff = &(&f.norm.coeff * &g.norm.coeff) * &det_scalar;
    if d % 2 == 1 {
        coeff = coeff * Scalar::float(std::f64::consts::PI.sqrt());
    }
    let norm = PiScalar::new(coeff, f.norm.pi_power + g.norm.pi_power + h);
    let prefactor = &(&f.prefactor * &g.prefactor) * &det_form;
    Ok(GaussianKernel::one_variable(norm, prefactor, a_new))
}

/// `(2/i)^{d/2}` times the top-degree part of a form.
pub fn str_zero_form(f: &FormElement, d: usize) -> FormElement {
    f.top().scale(&str_constant(d))
}

/// `Str_0` of a kernel: its value at the origin, scaled by `(2/i)^{d/2}`,
/// reduced to the top-degree coefficient.
pub fn str_zero(k: &GaussianKernel) -> (PiScalar, FormElement) {
    let (n, g) = k.at_origin();
    (n, str_zero_form(&g, k.dim()))
}

#[derive(Clone, Debug, Serialize)]
pub struct SemigroupReport {
    pub d: usize,
    pub tau: String,
    pub tau_prime: String,
    pub exact: bool,
    pub max_residual: f64,
}

pub fn semigroup_check(r: &CurvatureMatrix, tau: &Scalar, tau_prime: &Scalar) -> Result<SemigroupReport, MehlerError> {
    let lhs = twisted_convolve(&mehler_kernel(tau, r)?, &mehler_kernel(tau_prime, r)?, r)?;
    let rhs = mehler_kernel(&(tau + tau_prime), r)?;
    let exact = lhs.prefactor.is_exact() && lhs.norm.coeff.is_exact();
    Ok(SemigroupReport {
        d: r.dim(),
        tau: tau.to_string(),
        tau_prime: tau_prime.to_string(),
        exact,
        max_residual: lhs.residual(&rhs),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HeatReport {
    pub d: usize,
    pub tau: String,
    /// Residuals of `G' = G tr K`, `-A' = sym(K^T K)`, `B' = 2 K^T B`, `-C' = sym(B^T B)`.
    pub residuals: [f64; 4],
    pub pass: bool,
}

/// Checks `d/dtau H = sum_i (d/dX_i - 1/4 sum_j R_ij X_j)^2 H` for the
/// two-point kernel `H = N G exp(-X^T A X + X^T B Y - Y^T A Y)`.
///
/// With `V = K X + B Y`, `K = -2A - R/4`, the right side is
/// `(tr K + V^T V) H`, so the equation splits into coefficient identities.
/// Every coefficient is `tau^{-w} f(tau R)`, whose `tau`-derivative is
/// `(E f - w f) / tau` with `E` the curvature-degree operator.
pub fn heat_equation_check(tau: &Scalar, r: &CurvatureMatrix) -> Result<HeatReport, MehlerError> {
    let k = mehler_kernel_full(tau, r)?;
    let d = r.dim();
    let tau_inv = tau.inv();
    let deriv = |m: &FormMatrix, w: i64| m.map(curvature_degree).sub(&m.scale(&Scalar::int(w))).scale(&tau_inv);
    let a_dot = deriv(&k.a, 1);
    let b_dot = deriv(&k.b, 1);
    let c_dot = deriv(&k.c, 1);
    // the normalization (4 pi tau)^{-d/2} contributes -d/2 to the weight
    let g = &k.prefactor;
    let g_dot = (&curvature_degree(g) - &g.scale(&Scalar::ratio(d as i64, 2))).scale(&tau_inv);
    let kk = k.a.scale(&Scalar::int(-2)).sub(&r.matrix().scale(&Scalar::ratio(1, 4)));
    let res = [
        (&g_dot - &(g * &kk.trace())).max_abs_coeff(),
        a_dot.scale(&Scalar::int(-1)).sub(&kk.transpose().mul(&kk).symmetrize()).max_abs_coeff(),
        b_dot.sub(&kk.transpose().mul(&k.b).scale(&Scalar::int(2))).max_abs_coeff(),
        c_dot.scale(&Scalar::int(-1)).sub(&k.b.transpose().mul(&k.b).symmetrize()).max_abs_coeff(),
    ];
    Ok(HeatReport { d, tau: tau.to_string(), residuals: res, pass: res.iter().all(|&x| x == 0.0) })
}

/// Random curvature matrices for tests and the CLI.
pub mod random {
    use super::*;
    use rand::Rng;

    /// Table of dimension `d` with `n_gens` closed 2-form generators `r1, r2, ...`.
    pub fn curvature_table(d: usize, n_gens: usize) -> Arc<GeneratorTable> {
        let mut t = GeneratorTable::new(d);
        for k in 1..=n_gens {
            t.add(&format!("r{k}"), 2).expect("fresh name");
        }
        Arc::new(t)
    }

    pub fn curvature<R: Rng>(rng: &mut R, table: &Arc<GeneratorTable>, d: usize) -> CurvatureMatrix {
        let gens: Vec<usize> = (0..table.len()).filter(|&g| table.degree(g) == 2).collect();
        let mut upper = vec![FormElement::zero(table); d * d];
        for i in 0..d {
            for j in i + 1..d {
                let mut e = FormElement::zero(table);
                for &g in &gens {
                    let c = rng.gen_range(-2..=2);
                    if c != 0 {
                        e = &e + &FormElement::gen(table, g).scale(&Scalar::int(c));
                    }
                }
                upper[i * d + j] = e;
            }
        }
        let r = FormMatrix::from_fn(d, |i, j| {
            if i < j {
                upper[i * d + j].clone()
            } else if i > j {
                -&upper[j * d + i]
            } else {
                FormElement::zero(table)
            }
        })
        .expect("d > 0");
        CurvatureMatrix::new(r).expect("antisymmetric by construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn taus() -> Vec<Scalar> {
        vec![Scalar::ratio(1, 4), Scalar::ratio(1, 2), Scalar::one(), Scalar::int(2)]
    }

    #[test]
    fn series_coefficients() {
        let xc = Series::x_coth(6);
        assert_eq!(xc.0[0], q(1, 1));
        assert_eq!(xc.0[2], q(1, 3));
        assert_eq!(xc.0[4], q(-1, 45));
        let l = Series::x_over_sinh(6).log();
        assert_eq!(l.0[2], q(-1, 6));
        assert_eq!(l.0[4], q(1, 180));
    }

    #[test]
    fn a_hat_degree_four() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in [4, 6, 8] {
            let table = random::curvature_table(d, 2);
            let r = random::curvature(&mut rng, &table, d);
            let ah = a_hat(&r);
            assert_eq!(ah.constant(), Scalar::one());
            let r2 = r.matrix().mul(r.matrix()).trace();
            assert_eq!(ah.form_degree_part(4), r2.scale(&Scalar::ratio(-1, 48)));
            for k in [2, 6] {
                assert!(ah.form_degree_part(k).is_zero());
            }
        }
        let table = random::curvature_table(4, 1);
        assert_eq!(a_hat(&CurvatureMatrix::zero(&table, 4)), FormElement::one(&table));
    }

    /// det of a matrix of commuting forms by the Leibniz formula.
    fn leibniz_det(m: &FormMatrix) -> FormElement {
        fn perms(n: usize) -> Vec<(Vec<usize>, i64)> {
            if n == 1 {
                return vec![(vec![0], 1)];
            }
            let mut out = Vec::new();
            for (p, s) in perms(n - 1) {
                for pos in 0..n {
                    let mut q = p.clone();
                    q.insert(pos, n - 1);
                    let sign = if (n - 1 - pos) % 2 == 0 { s } else { -s };
                    out.push((q, sign));
                }
            }
            out
        }
        let n = m.size();
        let mut out = FormElement::zero(m.table());
        for (p, s) in perms(n) {
            let mut term = FormElement::scalar(m.table(), Scalar::int(s));
            for i in 0..n {
                term = &term * m.get(i, p[i]);
            }
            out = &out + &term;
        }
        out
    }

    #[test]
    fn a_hat_squares_to_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for d in [2, 4, 6] {
            let table = random::curvature_table(d, 3);
            let r = random::curvature(&mut rng, &table, d);
            let x = r.matrix().scale(&Scalar::ratio(1, 2));
            let m = apply_series(&Series::x_over_sinh(d + 2), &x);
            let ah = a_hat(&r);
            assert_eq!(&ah * &ah, leibniz_det(&m));
        }
    }

    #[test]
    fn flat_kernel_is_euclidean_heat_kernel() {
        let table = random::curvature_table(2, 1);
        let r = CurvatureMatrix::zero(&table, 2);
        let k = mehler_kernel(&Scalar::ratio(1, 2), &r).unwrap();
        assert_eq!(k.norm, PiScalar::new(Scalar::ratio(1, 2), -1));
        assert_eq!(k.prefactor, FormElement::one(&table));
        assert_eq!(k.a.get(0, 0).constant(), Scalar::ratio(1, 2));
        assert!(k.a.get(0, 1).is_zero());
        assert!(mehler_kernel(&Scalar::zero(), &r).is_err());
        let full = mehler_kernel_full(&Scalar::ratio(1, 2), &r).unwrap();
        let v = full.eval_numeric(&[0.3, -0.2], &[0.1, 0.4]);
        let dist2 = 0.2f64.powi(2) + 0.6f64.powi(2);
        let expect = (-dist2 / 2.0).exp() / (2.0 * std::f64::consts::PI);
        assert!((v.re - expect).abs() < 1e-15 && v.im.abs() < 1e-15);
    }

    #[test]
    fn diagonal_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let table = random::curvature_table(4, 2);
        let r = random::curvature(&mut rng, &table, 4);
        let tau = Scalar::ratio(1, 2);
        let k = mehler_kernel(&tau, &r).unwrap();
        let x = r.matrix().scale(&Scalar::ratio(1, 4));
        let m = apply_series(&Series::x_over_sinh(6), &x);
        assert_eq!(&k.prefactor * &k.prefactor, leibniz_det(&m));
        assert_eq!(k.norm, PiScalar::new(Scalar::ratio(1, 4), -2));
    }

    #[test]
    fn kappa_from_order_one_matching() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for d in [2, 4] {
            let table = random::curvature_table(d, 2);
            let r = random::curvature(&mut rng, &table, d);
            for tau in taus() {
                assert_eq!(derive_kappa_constant(&tau, &r).unwrap(), kappa_constant());
            }
        }
    }

    #[test]
    fn kappa_antisymmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let table = random::curvature_table(4, 2);
        let r = random::curvature(&mut rng, &table, 4);
        let x: Vec<Scalar> = (0..4).map(|_| Scalar::int(rand::Rng::gen_range(&mut rng, -5..=5))).collect();
        let y: Vec<Scalar> = (0..4).map(|_| Scalar::int(rand::Rng::gen_range(&mut rng, -5..=5))).collect();
        assert!(kappa_form(&x, &x, &r).is_zero());
        assert_eq!(kappa_form(&x, &y, &r), -&kappa_form(&y, &x, &r));
        assert!(kappa_form(&x, &y, &CurvatureMatrix::zero(&table, 4)).is_zero());
    }

    #[test]
    fn semigroup_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for d in [2, 4] {
            let table = random::curvature_table(d, 2);
            let r = random::curvature(&mut rng, &table, d);
            for t1 in taus() {
                for t2 in taus() {
                    let rep = semigroup_check(&r, &t1, &t2).unwrap();
                    assert!(rep.exact);
                    assert_eq!(rep.max_residual, 0.0, "{rep:?}");
                }
            }
        }
    }

    #[test]
    fn semigroup_fails_for_other_kappa() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let table = random::curvature_table(4, 2);
        let r = random::curvature(&mut rng, &table, 4);
        let (t1, t2) = (Scalar::ratio(1, 2), Scalar::one());
        let f = mehler_kernel(&t1, &r).unwrap();
        let g = mehler_kernel(&t2, &r).unwrap();
        let target = mehler_kernel(&(&t1 + &t2), &r).unwrap();
        for c in [Scalar::zero(), Scalar::one(), Scalar::ratio(1, 4)] {
            let k = twisted_convolve_with(&f, &g, &r, &c).unwrap();
            assert!(k.residual(&target) > 0.0);
        }
        let zero = GaussianKernel { prefactor: FormElement::zero(&table), ..f.clone() };
        assert!(twisted_convolve(&zero, &g, &r).unwrap().prefactor.is_zero());
    }

    #[test]
    fn heat_equation_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for d in [2, 4, 6] {
            let table = random::curvature_table(d, 2);
            let r = random::curvature(&mut rng, &table, d);
            for tau in taus() {
                let rep = heat_equation_check(&tau, &r).unwrap();
                assert!(rep.pass, "{rep:?}");
            }
        }
    }

    #[test]
    fn str_zero_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for d in [2, 4] {
            let table = random::curvature_table(d, 2);
            let r = random::curvature(&mut rng, &table, d);
            let (n, top) = str_zero(&mehler_kernel(&Scalar::one(), &r).unwrap());
            let lhs = top.scale(&n.coeff);
            let two_pi_i = PiScalar::new((Scalar::int(2) * Scalar::i()).powi(-((d / 2) as i32)), -((d / 2) as i32));
            assert_eq!(n.pi_power, two_pi_i.pi_power);
            assert_eq!(lhs, a_hat(&r).top().scale(&two_pi_i.coeff));
        }
        let table = random::curvature_table(2, 1);
        let (_, top) = str_zero(&mehler_kernel(&Scalar::one(), &CurvatureMatrix::zero(&table, 2)).unwrap());
        assert!(top.is_zero());
    }

    #[test]
    fn gaussian_integral_numeric() {
        let table = random::curvature_table(2, 1);
        let m = [[1.3, 0.4], [0.4, 0.7]];
        let b = [0.5, -0.8];
        let mm = FormMatrix::from_fn(2, |i, j| FormElement::scalar(&table, Scalar::float(m[i][j]))).unwrap();
        let bb: Vec<FormElement> = b.iter().map(|&x| FormElement::scalar(&table, Scalar::float(x))).collect();
        let (n, f) = gaussian_integral(&mm, &bb).unwrap();
        let got = (n.to_c64() * f.constant().to_c64()).re;
        let (xs, ws) = crate::fredholm::gauss_legendre(160);
        let lim = 14.0;
        let mut brute = 0.0;
        for (x, wx) in xs.iter().zip(&ws) {
            for (y, wy) in xs.iter().zip(&ws) {
                let z = [lim * (2.0 * x - 1.0), lim * (2.0 * y - 1.0)];
                let quad = 0.5 * (m[0][0] * z[0] * z[0] + 2.0 * m[0][1] * z[0] * z[1] + m[1][1] * z[1] * z[1]);
                brute += wx * wy * (b[0] * z[0] + b[1] * z[1] - quad).exp();
            }
        }
        brute *= 4.0 * lim * lim;
        assert!((got - brute).abs() / brute < 1e-12, "{got} vs {brute}");
    }
}
