//! Command-line front end for the exact semiclassical Hodge library.
//!
//! All input and output is JSON with sorted keys and canonical rational
//! strings, so identical inputs produce byte-identical outputs.  Exit
//! codes: 0 on success, 1 on a domain error, 2 on malformed input.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use shodge_core::gysin::{gysin_weight_graded, GysinInput};
use shodge_core::qtorus::{
    centre_generators_torsion, extension_class, gauss_manin_transport, hodge_class_torsion,
    qt_mul, ExpCoeff, QTorusElement, QTorusParams,
};
use shodge_core::scalars::{ExpValue, Rational, TauFraction, TauScalar};
use shodge_core::series::{compare_exp, q_parameter, TruncatedSeries};
use shodge_core::toric::{
    poisson_hodge_flag, quantum_parameter, torelli_equal, zero_obstruction,
    ToricPoissonStructure,
};

#[derive(Parser)]
#[command(name = "shodge", version, about = "Exact semiclassical Hodge computations")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Quantum parameters q_ij = Exp(λ_ij) of a log-constant Poisson torus,
    /// cross-checked through the extension-class construction.
    Qparam {
        /// Torus dimension.
        #[arg(long)]
        n: usize,
        /// Upper-triangular log-parameters as JSON, e.g. '{"1,2":[[0,"1/2"]]}'
        /// (each value is a list of [τ-degree, rational] terms).
        #[arg(long)]
        lambda: String,
    },
    /// The deformed Hodge flag of a Poisson torus.
    Flag {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        lambda: String,
        /// 0 for the even (K⁰) model, 1 for the odd (K¹) model.
        #[arg(long, default_value_t = 0)]
        parity: u8,
    },
    /// Decide whether two Poisson tori have equal quantum parameters.
    Torelli {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        lambda: String,
        #[arg(long)]
        lambda2: String,
    },
    /// The obstruction values whose joint vanishing characterizes the
    /// flat (undeformed) flag.
    Zeros {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        lambda: String,
    },
    /// Quantum-torus computations.
    Qtorus {
        #[command(subcommand)]
        cmd: QtorusCmd,
    },
    /// Weight-graded K-theory of a complement from Gysin pushforward data.
    Gysin {
        /// Path to a GysinInput JSON file.
        input: PathBuf,
    },
    /// The q-parameter q(ħ) = w(ħ)/w(−ħ) of a truncated series.
    StarQ {
        /// Path to a series JSON file.
        #[arg(long)]
        w: PathBuf,
        /// Compare the result against a named series ("exp").
        #[arg(long)]
        expect: Option<String>,
    },
    /// Run the committed reproduction suite against the shipped fixtures.
    Verify,
}

#[derive(Subcommand)]
enum QtorusCmd {
    /// Multiply two quantum-torus elements.
    Mul {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        lambda: String,
        /// First factor as JSON: [{"k":[1,0],"c":"1/1"}, …].
        #[arg(long)]
        a: String,
        /// Second factor, same format.
        #[arg(long)]
        b: String,
    },
    /// Hermite basis and index of the central sublattice (torsion case).
    Centre {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        lambda: String,
    },
    /// The Gauss–Manin transport matrix on the even cohomology block.
    Transport {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        lambda: String,
        #[arg(long, default_value_t = 0)]
        parity: u8,
    },
    /// Extension classes of the K-lattice and their torsion order.
    Class {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        lambda: String,
        /// Powers checked before declaring the class non-torsion.
        #[arg(long, default_value_t = 100)]
        bound: u64,
    },
}

/// Error carrying the process exit code: 1 = domain, 2 = malformed.
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn domain(message: impl Into<String>) -> Self {
        CliError { code: 1, message: message.into() }
    }

    fn malformed(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }
}

impl From<shodge_core::Error> for CliError {
    fn from(e: shodge_core::Error) -> Self {
        match e {
            shodge_core::Error::Malformed(_) => CliError::malformed(e.to_string()),
            _ => CliError::domain(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::malformed(format!("invalid JSON: {e}"))
    }
}

type CliResult<T> = Result<T, CliError>;

fn parse_lambda(n: usize, s: &str) -> CliResult<Vec<(usize, usize, TauScalar)>> {
    let raw: BTreeMap<String, TauScalar> = serde_json::from_str(s)?;
    let mut out = Vec::new();
    for (key, value) in raw {
        let (i, j) = key
            .split_once(',')
            .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
            .ok_or_else(|| {
                CliError::malformed(format!("bad index pair '{key}' (expected \"i,j\")"))
            })?;
        if !(1 <= i && i < j && j <= n) {
            return Err(CliError::malformed(format!(
                "index pair ({i},{j}) out of range for n = {n}"
            )));
        }
        out.push((i, j, value));
    }
    Ok(out)
}

fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::malformed(format!("reading {}: {e}", path.display())))
}

fn print_json<T: Serialize>(value: &T) -> CliResult<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}

fn pair_key(i: usize, j: usize) -> String {
    format!("{i},{j}")
}

// --- qtorus element JSON -----------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MonomialIn {
    k: Vec<i64>,
    c: Rational,
}

#[derive(Serialize)]
struct CoeffTermOut {
    exp: ExpValue,
    val: TauFraction,
}

#[derive(Serialize)]
struct MonomialOut {
    k: Vec<i64>,
    coeff: Vec<CoeffTermOut>,
}

fn parse_element(params: &QTorusParams, s: &str) -> CliResult<QTorusElement> {
    let raw: Vec<MonomialIn> = serde_json::from_str(s)?;
    let mut out = QTorusElement::zero(params.clone());
    for term in raw {
        if term.k.len() != params.n() {
            return Err(CliError::malformed(format!(
                "monomial exponent of length {} on a {}-torus",
                term.k.len(),
                params.n()
            )));
        }
        let mono = QTorusElement::monomial(
            params.clone(),
            term.k,
            ExpCoeff::from_frac(TauFraction::from_rational(term.c)),
        );
        out = out.add(&mono)?;
    }
    Ok(out)
}

fn element_json(e: &QTorusElement) -> Vec<MonomialOut> {
    e.terms()
        .map(|(k, c)| MonomialOut {
            k: k.clone(),
            coeff: c
                .terms()
                .map(|(exp, val)| CoeffTermOut {
                    exp: exp.clone(),
                    val: val.clone(),
                })
                .collect(),
        })
        .collect()
}

// --- subcommands --------------------------------------------------------------

fn cmd_qparam(n: usize, lambda: &str) -> CliResult<()> {
    let sigma = ToricPoissonStructure::new(n, &parse_lambda(n, lambda)?)?;
    let params = quantum_parameter(&sigma)?;
    let out: BTreeMap<String, ExpValue> = params
        .into_iter()
        .map(|((i, j), q)| (pair_key(i, j), q))
        .collect();
    print_json(&out)
}

#[derive(Serialize)]
struct FlagStepOut {
    level: i64,
    dim: usize,
    basis: Vec<Vec<TauFraction>>,
}

fn cmd_flag(n: usize, lambda: &str, parity: u8) -> CliResult<()> {
    let sigma = ToricPoissonStructure::new(n, &parse_lambda(n, lambda)?)?;
    let flag = poisson_hodge_flag(&sigma, parity)?;
    let out: Vec<FlagStepOut> = flag
        .iter()
        .map(|(p, s)| {
            let b = s.basis();
            FlagStepOut {
                level: *p,
                dim: s.dim(),
                basis: (0..b.nrows())
                    .map(|i| (0..b.ncols()).map(|j| b[(i, j)].clone()).collect())
                    .collect(),
            }
        })
        .collect();
    print_json(&out)
}

fn cmd_torelli(n: usize, lambda: &str, lambda2: &str) -> CliResult<()> {
    let a = ToricPoissonStructure::new(n, &parse_lambda(n, lambda)?)?;
    let b = ToricPoissonStructure::new(n, &parse_lambda(n, lambda2)?)?;
    let mut out = BTreeMap::new();
    out.insert("equal", torelli_equal(&a, &b)?);
    print_json(&out)
}

#[derive(Serialize)]
struct ZerosOut {
    flat: bool,
    obstruction: BTreeMap<String, TauScalar>,
}

fn cmd_zeros(n: usize, lambda: &str) -> CliResult<()> {
    let sigma = ToricPoissonStructure::new(n, &parse_lambda(n, lambda)?)?;
    let (values, flat) = zero_obstruction(&sigma)?;
    print_json(&ZerosOut {
        flat,
        obstruction: values
            .into_iter()
            .map(|((i, j), v)| (pair_key(i, j), v))
            .collect(),
    })
}

fn cmd_qtorus(cmd: QtorusCmd) -> CliResult<()> {
    match cmd {
        QtorusCmd::Mul { n, lambda, a, b } => {
            let params = QTorusParams::new(n, &parse_lambda(n, &lambda)?)?;
            let x = parse_element(&params, &a)?;
            let y = parse_element(&params, &b)?;
            print_json(&element_json(&qt_mul(&x, &y)?))
        }
        QtorusCmd::Centre { n, lambda } => {
            let params = QTorusParams::new(n, &parse_lambda(n, &lambda)?)?;
            let basis = centre_generators_torsion(&params)?;
            let rows: Vec<Vec<String>> = (0..basis.nrows())
                .map(|i| (0..basis.ncols()).map(|j| basis[(i, j)].to_string()).collect())
                .collect();
            let index = basis.det().magnitude().to_string();
            let mut out = BTreeMap::new();
            out.insert("basis", serde_json::to_value(rows)?);
            out.insert("index", serde_json::Value::String(index));
            print_json(&out)
        }
        QtorusCmd::Transport { n, lambda, parity } => {
            let params = QTorusParams::new(n, &parse_lambda(n, &lambda)?)?;
            let m = gauss_manin_transport(&params).matrix(parity)?;
            let rows: Vec<Vec<TauFraction>> = (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| m[(i, j)].clone()).collect())
                .collect();
            print_json(&rows)
        }
        QtorusCmd::Class { n, lambda, bound } => {
            let params = QTorusParams::new(n, &parse_lambda(n, &lambda)?)?;
            let classes: BTreeMap<String, ExpValue> = extension_class(&params)?
                .into_iter()
                .map(|((i, j), q)| (pair_key(i, j), q))
                .collect();
            let torsion = hodge_class_torsion(&params, bound)?;
            let mut out = BTreeMap::new();
            out.insert("classes", serde_json::to_value(classes)?);
            out.insert("torsion", serde_json::to_value(torsion)?);
            print_json(&out)
        }
    }
}

fn cmd_gysin(input: &Path) -> CliResult<()> {
    let data: GysinInput = serde_json::from_str(&read_file(input)?)?;
    print_json(&gysin_weight_graded(&data)?)
}

fn cmd_star_q(w: &Path, expect: Option<&str>) -> CliResult<()> {
    let series: TruncatedSeries = serde_json::from_str(&read_file(w)?)?;
    let q = q_parameter(&series)?;
    print_json(&q)?;
    match expect {
        None => Ok(()),
        Some("exp") => {
            let cmp = compare_exp(&q);
            if cmp.matches {
                println!("MATCH e^ħ through ħ^{}", q.order());
                Ok(())
            } else {
                let (k, got, want) = cmp.first_mismatch.unwrap();
                Err(CliError::domain(format!(
                    "MISMATCH at ħ^{k}: got {got}, expected {want}"
                )))
            }
        }
        Some(other) => Err(CliError::malformed(format!(
            "unknown --expect target '{other}' (supported: exp)"
        ))),
    }
}

// --- verify --------------------------------------------------------------------

fn fixtures_dir() -> PathBuf {
    std::env::var_os("SHODGE_FIXTURES")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("fixtures"))
}

fn verify_series(name: &str) -> CliResult<()> {
    let path = fixtures_dir().join(name);
    let w: TruncatedSeries = serde_json::from_str(&read_file(&path)?)?;
    let q = q_parameter(&w)?;
    if compare_exp(&q).matches {
        Ok(())
    } else {
        Err(CliError::domain(format!("{name}: q-parameter is not e^ħ")))
    }
}

fn verify_gysin(name: &str, torsion: u32, odd_rank: usize) -> CliResult<()> {
    let path = fixtures_dir().join(name);
    let input: GysinInput = serde_json::from_str(&read_file(&path)?)?;
    let out = gysin_weight_graded(&input)?;
    let expected = format!(
        "{{\"w0\":{{\"free\":1,\"torsion\":[{torsion}]}},\"w1\":{{\"free\":{odd_rank}}}}}"
    );
    let got = serde_json::to_string(&out)?;
    if got == expected {
        Ok(())
    } else {
        Err(CliError::domain(format!("{name}: got {got}, expected {expected}")))
    }
}

fn verify_q_exp() -> CliResult<()> {
    for (n, entries) in [
        (2usize, vec![(1, 2, TauScalar::from_terms([
            (0, Rational::new(3, 7)),
            (1, Rational::new(1, 2)),
        ]))]),
        (3, vec![
            (1, 2, TauScalar::from_rational(Rational::new(-2, 5))),
            (1, 3, TauScalar::from_int(1)),
            (2, 3, TauScalar::term(1, Rational::new(1, 3))),
        ]),
    ] {
        let params = QTorusParams::new(n, &entries)?;
        if !shodge_core::qtorus::compare_with_poisson(&params)? {
            return Err(CliError::domain(format!(
                "extension class ≠ quantum parameter at n = {n}"
            )));
        }
    }
    Ok(())
}

fn verify_root_of_unity() -> CliResult<()> {
    let params = QTorusParams::new(2, &[(1, 2, TauScalar::term(1, Rational::new(1, 3)))])?;
    if params.q(1, 2).torsion_order() != Some(3) {
        return Err(CliError::domain("q = Exp(τ/3) is not 3-torsion"));
    }
    let basis = centre_generators_torsion(&params)?;
    if basis.det().magnitude().to_string() != "9" {
        return Err(CliError::domain("central sublattice index ≠ 9"));
    }
    if hodge_class_torsion(&params, 10)? != Some(3) {
        return Err(CliError::domain("Hodge class is not exactly 3-torsion"));
    }
    Ok(())
}

fn verify_torelli() -> CliResult<()> {
    let lam = TauScalar::from_terms([(0, Rational::new(1, 4)), (1, Rational::new(2, 3))]);
    let a = ToricPoissonStructure::new(2, &[(1, 2, lam.clone())])?;
    let b = ToricPoissonStructure::new(2, &[(1, 2, &lam + &TauScalar::term(1, Rational::from_int(5)))])?;
    let c = ToricPoissonStructure::new(2, &[(1, 2, &lam + &TauScalar::from_int(1))])?;
    if !torelli_equal(&a, &b)? {
        return Err(CliError::domain("τℤ-shifted structure not recognized as equal"));
    }
    if torelli_equal(&a, &c)? {
        return Err(CliError::domain("distinct parameters reported equal"));
    }
    Ok(())
}

fn cmd_verify() -> CliResult<()> {
    let checks: Vec<(&str, Box<dyn Fn() -> CliResult<()>>)> = vec![
        ("q-parameter of w-at.json is e^ħ through ħ^6", Box::new(|| verify_series("w-at.json"))),
        ("q-parameter of w-kz.json is e^ħ through ħ^6", Box::new(|| verify_series("w-kz.json"))),
        ("q-parameter of w-3d.json is e^ħ through ħ^4", Box::new(|| verify_series("w-3d.json"))),
        ("cubic-p2.json gives grW₀ = ℤ ⊕ ℤ/3, grW₁ = ℤ²", Box::new(|| verify_gysin("cubic-p2.json", 3, 2))),
        ("sklyanin-p3.json gives grW₀ = ℤ ⊕ ℤ/4", Box::new(|| verify_gysin("sklyanin-p3.json", 4, 2))),
        ("extension classes equal quantum parameters (q = e^ħ)", Box::new(verify_q_exp)),
        ("Exp(τ/3): 3-torsion class, central sublattice index 9", Box::new(verify_root_of_unity)),
        ("quantum parameters separate tori up to τℤ shifts", Box::new(verify_torelli)),
    ];
    let mut failed = 0usize;
    for (name, check) in &checks {
        match check() {
            Ok(()) => println!("PASS  {name}"),
            Err(e) => {
                println!("FAIL  {name}: {}", e.message);
                failed += 1;
            }
        }
    }
    println!("{} passed, {failed} failed", checks.len() - failed);
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::domain(format!("{failed} verification check(s) failed")))
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.cmd {
        Cmd::Qparam { n, lambda } => cmd_qparam(n, &lambda),
        Cmd::Flag { n, lambda, parity } => cmd_flag(n, &lambda, parity),
        Cmd::Torelli { n, lambda, lambda2 } => cmd_torelli(n, &lambda, &lambda2),
        Cmd::Zeros { n, lambda } => cmd_zeros(n, &lambda),
        Cmd::Qtorus { cmd } => cmd_qtorus(cmd),
        Cmd::Gysin { input } => cmd_gysin(&input),
        Cmd::StarQ { w, expect } => cmd_star_q(&w, expect.as_deref()),
        Cmd::Verify => cmd_verify(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
