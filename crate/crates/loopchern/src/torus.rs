//! Spectral Dirac operator on a flat 2-torus and the `t -> 0` behaviour of
//! `Ch_t(sigma theta'')` for a 2-form `theta''` given by a Fourier series.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::clifford::SpinorRep;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TorusError {
    #[error("parameter must be positive, got {0}")]
    NonPositive(f64),
    #[error("Fourier cutoff must be at least 1")]
    ZeroCutoff,
    #[error("t grid must be positive and strictly decreasing")]
    BadGrid,
    #[error("unknown spin structure `{0}` (periodic|antiperiodic)")]
    UnknownSpin(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Spin {
    Periodic,
    Antiperiodic,
}

impl Spin {
    fn shift(self) -> f64 {
        match self {
            Spin::Periodic => 0.0,
            Spin::Antiperiodic => 0.5,
        }
    }
}

impl FromStr for Spin {
    type Err = TorusError;
    fn from_str(s: &str) -> Result<Self, TorusError> {
        match s {
            "periodic" | "p" => Ok(Spin::Periodic),
            "antiperiodic" | "a" => Ok(Spin::Antiperiodic),
            _ => Err(TorusError::UnknownSpin(s.to_string())),
        }
    }
}

/// Density `f` of `theta'' = f dx1 ^ dx2` as
/// `f(x) = sum_m f_m exp(2 pi i (m1 x1 / L1 + m2 x2 / L2))`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Density {
    pub coeffs: BTreeMap<(i64, i64), Complex64>,
}

impl Density {
    pub fn constant(beta: f64) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert((0, 0), Complex64::new(beta, 0.0));
        Density { coeffs }
    }

    pub fn with(mut self, m: (i64, i64), c: Complex64) -> Self {
        *self.coeffs.entry(m).or_default() += c;
        self
    }

    pub fn mean(&self) -> Complex64 {
        self.coeffs.get(&(0, 0)).copied().unwrap_or_default()
    }

    pub fn coeff(&self, m: (i64, i64)) -> Complex64 {
        self.coeffs.get(&m).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.values().all(|c| c.norm() == 0.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TorusModel {
    pub lengths: [f64; 2],
    pub cutoff: usize,
    pub spin: [Spin; 2],
}

impl TorusModel {
    pub fn new(lengths: [f64; 2], cutoff: usize, spin: [Spin; 2]) -> Result<Self, TorusError> {
        for l in lengths {
            if !(l > 0.0 && l.is_finite()) {
                return Err(TorusError::NonPositive(l));
            }
        }
        if cutoff == 0 {
            return Err(TorusError::ZeroCutoff);
        }
        Ok(TorusModel { lengths, cutoff, spin })
    }

    /// Square torus of side `2 pi`, periodic spin structure.
    pub fn standard(cutoff: usize) -> Self {
        TorusModel { lengths: [2.0 * PI; 2], cutoff, spin: [Spin::Periodic; 2] }
    }

    pub fn area(&self) -> f64 {
        self.lengths[0] * self.lengths[1]
    }

    fn wavenumber(&self, axis: usize, n: i64) -> f64 {
        2.0 * PI / self.lengths[axis] * (n as f64 + self.spin[axis].shift())
    }

    /// Lattice indices `(n1, n2)` with `|n_i| <= K`.
    pub fn indices(&self) -> Vec<(i64, i64)> {
        let k = self.cutoff as i64;
        (-k..=k).flat_map(|a| (-k..=k).map(move |b| (a, b))).collect()
    }

    pub fn momentum(&self, n: (i64, i64)) -> [f64; 2] {
        [self.wavenumber(0, n.0), self.wavenumber(1, n.1)]
    }

    pub fn zero_modes(&self) -> usize {
        if self.spin == [Spin::Periodic; 2] {
            2
        } else {
            0
        }
    }

    /// Sum of `f(n1, n2)` over the truncated lattice: rows in parallel, then
    /// added in a fixed order.
    fn lattice_sum<T, F>(&self, zero: T, f: F) -> T
    where
        T: Send + Sync + Copy + std::ops::Add<Output = T>,
        F: Fn((i64, i64)) -> T + Sync,
    {
        let k = self.cutoff as i64;
        let rows: Vec<T> = (-k..=k).into_par_iter().map(|a| (-k..=k).fold(zero, |acc, b| acc + f((a, b)))).collect();
        rows.into_iter().fold(zero, |acc, r| acc + r)
    }
}

/// Symbol of `D` on the mode with momentum `k`: `sum_j c(e_j) (i k_j)`.
pub fn dirac_symbol(spin: &SpinorRep, k: [f64; 2]) -> DMatrix<Complex64> {
    &spin.gens[0] * Complex64::new(0.0, k[0]) + &spin.gens[1] * Complex64::new(0.0, k[1])
}

fn check_positive(x: f64) -> Result<(), TorusError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(TorusError::NonPositive(x))
    }
}

/// `tr e^{-s D^2}` over the truncated lattice, both spinor components.
pub fn heat_trace(model: &TorusModel, s: f64) -> Result<f64, TorusError> {
    check_positive(s)?;
    Ok(model.lattice_sum(0.0, |n| {
        let k = model.momentum(n);
        2.0 * (-s * (k[0] * k[0] + k[1] * k[1])).exp()
    }))
}

/// `sum_n exp(-s c^2 (n + a)^2)` over all integers by Poisson summation.
fn poisson_1d(s: f64, c: f64, a: f64) -> f64 {
    let w = s * c * c;
    let mut total = 0.0;
    let mut m = 0i64;
    loop {
        let g = (-PI * PI * (m * m) as f64 / w).exp();
        let term = if m == 0 { g } else { 2.0 * g * (2.0 * PI * m as f64 * a).cos() };
        total += term;
        if m > 0 && g < 1e-18 {
            break;
        }
        m += 1;
    }
    (PI / w).sqrt() * total
}

/// Untruncated heat trace from the Poisson dual sum.
pub fn heat_trace_poisson(model: &TorusModel, s: f64) -> Result<f64, TorusError> {
    check_positive(s)?;
    let f = |axis: usize| poisson_1d(s, 2.0 * PI / model.lengths[axis], model.spin[axis].shift());
    Ok(2.0 * f(0) * f(1))
}

/// `Str e^{-s D^2}` with the heat operator exponentiated mode by mode.
pub fn supertrace_heat(model: &TorusModel, s: f64) -> Result<f64, TorusError> {
    check_positive(s)?;
    let spin = SpinorRep::new(2);
    let z = model.lattice_sum(Complex64::new(0.0, 0.0), |n| {
        let dk = dirac_symbol(&spin, model.momentum(n));
        let heat = (-(&dk * &dk) * Complex64::new(s, 0.0)).exp();
        (&spin.gamma * heat).trace()
    });
    Ok(z.re)
}

/// Largest deviation of `Str e^{-s D^2}` from its value at the first point.
pub fn mckean_singer_variation(model: &TorusModel, s_grid: &[f64]) -> Result<f64, TorusError> {
    let vals = s_grid.iter().map(|&s| supertrace_heat(model, s)).collect::<Result<Vec<_>, _>>()?;
    Ok(vals.iter().map(|v| (v - vals[0]).abs()).fold(0.0, f64::max))
}

/// `Ch_t(sigma theta'') = t^2 Str(c(theta'') e^{-t^2 D^2})`. Multiplication
/// by `f` shifts Fourier modes by `m`, so only `f_0` meets the diagonal of
/// the heat operator.
pub fn chern_t_torus(model: &TorusModel, t: f64, theta: &Density) -> Result<Complex64, TorusError> {
    check_positive(t)?;
    let f0 = theta.mean();
    if f0.norm() == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let spin = SpinorRep::new(2);
    let vol = &spin.gamma * &spin.gens[0] * &spin.gens[1];
    let s = Complex64::new(t * t, 0.0);
    let z = model.lattice_sum(Complex64::new(0.0, 0.0), |n| {
        let dk = dirac_symbol(&spin, model.momentum(n));
        (&vol * (-(&dk * &dk) * s).exp()).trace()
    });
    Ok(z * f0 * (t * t))
}

/// `(2 pi i)^{-1} int theta''`.
pub fn limit_value(model: &TorusModel, theta: &Density) -> Complex64 {
    theta.mean() * model.area() / Complex64::new(0.0, 2.0 * PI)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub t: f64,
    pub value: [f64; 2],
    pub residual: f64,
    pub relative: f64,
    pub target: [f64; 2],
}

pub fn convergence_report(model: &TorusModel, theta: &Density, t_grid: &[f64]) -> Result<Vec<ConvergenceRow>, TorusError> {
    if t_grid.iter().any(|&t| t.is_nan() || t <= 0.0) || t_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(TorusError::BadGrid);
    }
    let target = limit_value(model, theta);
    t_grid
        .iter()
        .map(|&t| {
            let v = chern_t_torus(model, t, theta)?;
            let residual = (v - target).norm();
            let relative = if target.norm() > 0.0 { residual / target.norm() } else { residual };
            Ok(ConvergenceRow { t, value: [v.re, v.im], residual, relative, target: [target.re, target.im] })
        })
        .collect()
}
