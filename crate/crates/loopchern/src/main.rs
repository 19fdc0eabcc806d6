use std::collections::BTreeMap;
use std::error::Error;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use loopchern::barcx::check_bar;
use loopchern::fredholm::{self, bismut_chern, mckean_singer_check, FormMatrix, FredholmModel};
use loopchern::localize::{self, limit_theorem_check, TimeMode};
use loopchern::mehler::{self, CurvatureMatrix};
use loopchern::multiform::{random as rf, FormElement, GeneratorTable};
use loopchern::scalar::Scalar;
use loopchern::torus::{self, Density, Spin, TorusModel};

type Res<T> = Result<T, Box<dyn Error>>;

#[derive(Parser)]
#[command(name = "loopchern", version, about = "Checks for bar complexes, Fredholm Chern characters, Mehler kernels and localization")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Bar-complex and cochain laws on random chains over a generator table.
    CheckBar {
        /// Generator table file (`dim n` then `name degree [= differential]` lines).
        /// A random DGA table is used when omitted.
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        dim: usize,
        #[arg(long, default_value_t = 200)]
        chains: usize,
        #[arg(long, default_value_t = 3)]
        max_len: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Compare Ch_t(Ch(p)) with Str(c(p) exp(-D_p^2)).
    MckeanSinger {
        /// Model file (JSON). A random model is used when omitted.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Write the model used to this path.
        #[arg(long)]
        dump: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Expand the Bismut-Chern chain of the idempotent in a model file.
    BismutChern {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        n_max: usize,
        #[arg(long)]
        json: bool,
    },
    /// Semigroup, heat-equation and A-hat checks for the Mehler kernel.
    Mehler {
        #[arg(long, default_value_t = 4)]
        d: usize,
        /// Number of 2-form generators r1, r2, ...
        #[arg(long, default_value_t = 2)]
        gens: usize,
        /// Curvature entry `i,j=form` (1-based, i < j). Random when none given.
        #[arg(long = "entry")]
        entries: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "1/4,1/2,1")]
        tau: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Symbol-level t -> 0 limit against the A-hat integrand.
    Localize {
        /// Case file (JSON). Random cases are used when omitted.
        #[arg(long)]
        cases: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        random: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Evaluate at random simplex points with a Monte Carlo volume.
        #[arg(long)]
        sampled: bool,
        #[arg(long)]
        json: bool,
    },
    /// Spectral Ch_t(sigma theta'') on a flat 2-torus.
    Torus {
        #[arg(long, default_value_t = 2.0 * std::f64::consts::PI)]
        l1: f64,
        #[arg(long, default_value_t = 2.0 * std::f64::consts::PI)]
        l2: f64,
        #[arg(long, default_value_t = 64)]
        k: usize,
        /// Spin structure per circle: periodic|antiperiodic.
        #[arg(long, value_delimiter = ',', default_value = "periodic,periodic")]
        spin: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "0.5,0.2,0.1,0.05")]
        t: Vec<f64>,
        /// Fourier coefficient `m1,m2=re[,im]` of the density. Default: constant 1.
        #[arg(long = "coeff")]
        coeffs: Vec<String>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
enum Entry {
    Re(f64),
    Complex([f64; 2]),
}

impl From<Entry> for Complex64 {
    fn from(e: Entry) -> Self {
        match e {
            Entry::Re(x) => Complex64::new(x, 0.0),
            Entry::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    forms: String,
    dim_plus: usize,
    dim_minus: usize,
    q: Vec<Vec<Entry>>,
    #[serde(default)]
    c: BTreeMap<String, Vec<Vec<Entry>>>,
    p: Vec<Vec<String>>,
    #[serde(default)]
    t: Option<f64>,
}

fn to_matrix(rows: &[Vec<Entry>]) -> Res<DMatrix<Complex64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err("matrix must be square".into());
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j].into()))
}

fn from_matrix(m: &DMatrix<Complex64>) -> Vec<Vec<Entry>> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| {
                    let z = m[(i, j)];
                    if z.im == 0.0 {
                        Entry::Re(z.re)
                    } else {
                        Entry::Complex([z.re, z.im])
                    }
                })
                .collect()
        })
        .collect()
}

impl ModelFile {
    fn load(path: &PathBuf) -> Res<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    fn build(&self) -> Res<(FredholmModel, FormMatrix)> {
        let table = GeneratorTable::parse(&self.forms)?;
        let mut model = FredholmModel::new(&table, self.dim_plus, self.dim_minus, to_matrix(&self.q)?)?;
        for (key, rows) in &self.c {
            model.assign(&FormElement::parse(&table, key)?, to_matrix(rows)?)?;
        }
        let p = FormMatrix::parse(&table, &self.p)?;
        Ok((model, p))
    }

    fn from_model(model: &FredholmModel, p: &FormMatrix, t: f64) -> Self {
        let table = model.table();
        let (dim_plus, dim_minus) = model.dims();
        let c = model
            .assigned()
            .filter(|(m, _)| !m.is_one())
            .map(|(m, v)| (table.format_monomial(m), from_matrix(v)))
            .collect();
        let n = p.size();
        let p = (0..n).map(|i| (0..n).map(|j| p.get(i, j).to_string()).collect()).collect();
        ModelFile { forms: table.to_text(), dim_plus, dim_minus, q: from_matrix(model.q()), c, p, t: Some(t) }
    }
}

fn random_model(seed: u64) -> (FredholmModel, FormMatrix) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let table = fredholm::random::model_table(&mut rng, 6, 2);
    let model = fredholm::random::model(&mut rng, &table, 2, 2, 0.2);
    let p = fredholm::random::idempotent(&mut rng, &table, 2);
    (model, p)
}

fn load_model(path: &Option<PathBuf>, seed: u64) -> Res<(FredholmModel, FormMatrix, Option<f64>)> {
    match path {
        Some(path) => {
            let file = ModelFile::load(path)?;
            let (m, p) = file.build()?;
            Ok((m, p, file.t))
        }
        None => {
            let (m, p) = random_model(seed);
            Ok((m, p, None))
        }
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn print_json<T: Serialize>(v: &T) -> Res<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn check_bar_cmd(table: Option<PathBuf>, dim: usize, chains: usize, max_len: usize, seed: u64, json: bool) -> Res<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let table = match table {
        Some(path) => GeneratorTable::parse(&std::fs::read_to_string(path)?)?,
        None => rf::dga_table(&mut rng, dim),
    };
    let rep = check_bar(&mut rng, &table, chains, max_len);
    if json {
        print_json(&rep)?;
    } else {
        print!("{}", table.to_text());
        println!("chains checked        {}", rep.chains);
        println!("b0^2 != 0             {}", rep.b0_squared);
        println!("b1^2 != 0             {}", rep.b1_squared);
        println!("b0 b1 + b1 b0 != 0    {}", rep.anticommutator);
        println!("b^2 != 0              {}", rep.b_squared);
        println!("b(cyclic) not cyclic  {}", rep.cyclic_not_stable);
        println!("beta not derivation   {}", rep.beta_not_derivation);
        println!("beta^2 != 0           {}", rep.beta_squared);
        for f in &rep.dga_failures {
            println!("table: {}: {}", f.generator, f.reason);
        }
        println!("{}", verdict(rep.pass));
    }
    Ok(rep.pass)
}

fn mckean_singer_cmd(path: Option<PathBuf>, seed: u64, t: Option<f64>, tol: f64, dump: Option<PathBuf>, json: bool) -> Res<bool> {
    let (model, p, file_t) = load_model(&path, seed)?;
    let t = t.or(file_t).unwrap_or(1.0);
    if let Some(out) = dump {
        std::fs::write(out, serde_json::to_string_pretty(&ModelFile::from_model(&model, &p, t))?)?;
    }
    let rep = mckean_singer_check(&model, &p, t, tol)?;
    if json {
        print_json(&rep)?;
    } else {
        println!("t          {}", rep.t);
        println!("lhs        {:+.15e} {:+.15e}i", rep.lhs[0], rep.lhs[1]);
        println!("rhs        {:+.15e} {:+.15e}i", rep.rhs[0], rep.rhs[1]);
        println!("difference {:.3e}  (tolerance {:.1e})", rep.difference, rep.tolerance);
        println!("orders     {}  tail {:.3e}", rep.terms.len(), rep.tail_estimate);
        println!("{}", verdict(rep.pass));
    }
    Ok(rep.pass)
}

#[derive(Serialize)]
struct BismutOut {
    n_max: usize,
    exact: bool,
    terms: usize,
    chain: String,
    restricted: String,
}

fn bismut_cmd(path: Option<PathBuf>, seed: u64, n_max: usize, json: bool) -> Res<bool> {
    let (_, p, _) = load_model(&path, seed)?;
    let bc = bismut_chern(&p, n_max)?;
    let out = BismutOut {
        n_max: bc.n_max,
        exact: bc.exact,
        terms: bc.chain.num_terms(),
        chain: bc.chain.to_string(),
        restricted: bc.chain.restrict_i().to_string(),
    };
    if json {
        print_json(&out)?;
    } else {
        println!("p =\n{p}");
        println!("terms      {} (orders 0..={}{})", out.terms, out.n_max, if out.exact { ", exact" } else { "" });
        println!("chain      {}", out.chain);
        println!("i(Ch(p))   {}", out.restricted);
    }
    Ok(true)
}

#[derive(Serialize)]
struct MehlerOut {
    d: usize,
    curvature: String,
    a_hat: String,
    kappa: String,
    kappa_expected: String,
    semigroup: Vec<mehler::SemigroupReport>,
    heat: Vec<mehler::HeatReport>,
    pass: bool,
}

fn parse_entry(s: &str) -> Res<(usize, usize, String)> {
    let (ij, form) = s.split_once('=').ok_or("entry must be `i,j=form`")?;
    let (i, j) = ij.split_once(',').ok_or("entry must be `i,j=form`")?;
    Ok((i.trim().parse()?, j.trim().parse()?, form.trim().to_string()))
}

fn curvature_from_entries(table: &Arc<GeneratorTable>, d: usize, entries: &[String]) -> Res<CurvatureMatrix> {
    let mut cells = vec![FormElement::zero(table); d * d];
    for e in entries {
        let (i, j, form) = parse_entry(e)?;
        if i == 0 || j == 0 || i > d || j > d || i == j {
            return Err(format!("bad curvature index in `{e}`").into());
        }
        let f = FormElement::parse(table, &form)?;
        cells[(j - 1) * d + (i - 1)] = -&f;
        cells[(i - 1) * d + (j - 1)] = f;
    }
    Ok(CurvatureMatrix::new(FormMatrix::new(d, cells)?)?)
}

fn mehler_cmd(d: usize, gens: usize, entries: Vec<String>, taus: Vec<String>, seed: u64, json: bool) -> Res<bool> {
    let table = mehler::random::curvature_table(d, gens);
    let r = if entries.is_empty() {
        mehler::random::curvature(&mut ChaCha8Rng::seed_from_u64(seed), &table, d)
    } else {
        curvature_from_entries(&table, d, &entries)?
    };
    let taus: Vec<Scalar> = taus.iter().map(|s| s.parse::<Scalar>()).collect::<Result<_, _>>()?;
    let mut semigroup = Vec::new();
    for a in &taus {
        for b in &taus {
            semigroup.push(mehler::semigroup_check(&r, a, b)?);
        }
    }
    let heat = taus.iter().map(|t| mehler::heat_equation_check(t, &r)).collect::<Result<Vec<_>, _>>()?;
    let kappa = mehler::derive_kappa_constant(&taus[0], &r).map(|k| k.to_string()).unwrap_or_else(|e| format!("({e})"));
    let expected = mehler::kappa_constant().to_string();
    let pass = semigroup.iter().all(|s| s.max_residual == 0.0) && heat.iter().all(|h| h.pass);
    let out = MehlerOut {
        d,
        curvature: r.matrix().to_string(),
        a_hat: mehler::a_hat(&r).to_string(),
        kappa,
        kappa_expected: expected,
        semigroup,
        heat,
        pass,
    };
    if json {
        print_json(&out)?;
    } else {
        println!("R =\n{}", out.curvature);
        println!("A-hat(R)   {}", out.a_hat);
        println!("kappa      {} (expected {})", out.kappa, out.kappa_expected);
        for s in &out.semigroup {
            println!("H_{} * H_{} = H_sum   residual {:.3e}", s.tau, s.tau_prime, s.max_residual);
        }
        for h in &out.heat {
            println!("heat equation tau={}   residuals {:?}", h.tau, h.residuals);
        }
        println!("{}", verdict(out.pass));
    }
    Ok(pass)
}

#[derive(Deserialize)]
struct CaseFile {
    cases: Vec<CaseEntry>,
}

#[derive(Deserialize)]
struct CaseEntry {
    d: usize,
    /// Generator table; defaults to 2-forms r1, r2, w and 1-forms u1, u2.
    #[serde(default)]
    forms: Option<String>,
    #[serde(default)]
    r: Vec<String>,
    word: Vec<String>,
}

fn localize_cmd(cases: Option<PathBuf>, random: usize, seed: u64, sampled: bool, json: bool) -> Res<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::new();
    match cases {
        Some(path) => {
            let file: CaseFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
            for c in file.cases {
                let table = match &c.forms {
                    Some(text) => GeneratorTable::parse(text)?,
                    None => localize::random::table(c.d),
                };
                let r = curvature_from_entries(&table, c.d, &c.r)?;
                let word = c.word.iter().map(|w| FormElement::parse(&table, w)).collect::<Result<Vec<_>, _>>()?;
                data.push((r, word));
            }
        }
        None => {
            for k in 0..random {
                let d = if k % 2 == 0 { 2 } else { 4 };
                data.push(localize::random::case(&mut rng, d, k % 4));
            }
        }
    }
    let mode = if sampled { TimeMode::Sampled { samples: 200_000, seed } } else { TimeMode::Symbolic };
    let reports = data.iter().map(|(r, w)| limit_theorem_check(r, w, mode)).collect::<Result<Vec<_>, _>>()?;
    let pass = if sampled {
        reports.iter().all(|r| r.nonzero_lower_patterns == 0)
    } else {
        reports.iter().all(|r| r.pass)
    };
    if json {
        print_json(&reports)?;
    } else {
        for (k, r) in reports.iter().enumerate() {
            println!("case {k}: d={} N={} patterns={} pi^{}", r.d, r.n, r.patterns, r.pi_power);
            println!("  lhs {}", r.lhs);
            println!("  rhs {}", r.rhs);
            println!("  residual {:.3e}  {}", r.residual, verdict(r.pass));
        }
        println!("{}", verdict(pass));
    }
    Ok(pass)
}

fn parse_coeff(s: &str) -> Res<((i64, i64), Complex64)> {
    let (m, v) = s.split_once('=').ok_or("coefficient must be `m1,m2=re[,im]`")?;
    let (m1, m2) = m.split_once(',').ok_or("coefficient must be `m1,m2=re[,im]`")?;
    let (re, im) = match v.split_once(',') {
        Some((a, b)) => (a.trim().parse()?, b.trim().parse()?),
        None => (v.trim().parse()?, 0.0),
    };
    Ok(((m1.trim().parse()?, m2.trim().parse()?), Complex64::new(re, im)))
}

#[derive(Serialize)]
struct TorusOut {
    area: f64,
    target: [f64; 2],
    supertrace_variation: f64,
    rows: Vec<torus::ConvergenceRow>,
}

fn torus_cmd(l1: f64, l2: f64, k: usize, spin: Vec<String>, t: Vec<f64>, coeffs: Vec<String>, json: bool) -> Res<bool> {
    if spin.len() != 2 {
        return Err("need two spin structures".into());
    }
    let model = TorusModel::new([l1, l2], k, [spin[0].parse::<Spin>()?, spin[1].parse::<Spin>()?])?;
    let mut theta = Density::default();
    if coeffs.is_empty() {
        theta = Density::constant(1.0);
    }
    for c in &coeffs {
        let (m, z) = parse_coeff(c)?;
        theta = theta.with(m, z);
    }
    let rows = torus::convergence_report(&model, &theta, &t)?;
    let grid: Vec<f64> = (0..=10).map(|j| 0.01 * 100f64.powf(j as f64 / 10.0)).collect();
    let target = torus::limit_value(&model, &theta);
    let out = TorusOut {
        area: model.area(),
        target: [target.re, target.im],
        supertrace_variation: torus::mckean_singer_variation(&model, &grid)?,
        rows,
    };
    if json {
        print_json(&out)?;
    } else {
        println!("target (2 pi i)^-1 int theta'' = {:+.12e} {:+.12e}i", out.target[0], out.target[1]);
        println!("{:>8}  {:>22}  {:>22}  {:>10}  {:>10}", "t", "Re Ch_t", "Im Ch_t", "residual", "relative");
        for r in &out.rows {
            println!(
                "{:>8}  {:>22.15e}  {:>22.15e}  {:>10.3e}  {:>10.3e}",
                r.t, r.value[0], r.value[1], r.residual, r.relative
            );
        }
        println!("max |Str e^(-sD^2) - Str e^(-0.01 D^2)| over s in [0.01, 1]: {:.3e}", out.supertrace_variation);
    }
    Ok(true)
}

fn run(cli: Cli) -> Res<bool> {
    match cli.cmd {
        Cmd::CheckBar { table, dim, chains, max_len, seed, json } => check_bar_cmd(table, dim, chains, max_len, seed, json),
        Cmd::MckeanSinger { model, seed, t, tol, dump, json } => mckean_singer_cmd(model, seed, t, tol, dump, json),
        Cmd::BismutChern { model, seed, n_max, json } => bismut_cmd(model, seed, n_max, json),
        Cmd::Mehler { d, gens, entries, tau, seed, json } => mehler_cmd(d, gens, entries, tau, seed, json),
        Cmd::Localize { cases, random, seed, sampled, json } => localize_cmd(cases, random, seed, sampled, json),
        Cmd::Torus { l1, l2, k, spin, t, coeffs, json } => torus_cmd(l1, l2, k, spin, t, coeffs, json),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
