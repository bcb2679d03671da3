use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crnf_core::fischer::{chain_decompose, compute_w, fischer_divide};
use crnf_core::io::{self, result_to_json, surface_to_json};
use crnf_core::normalform::{
    first_difference, normalize, solve_linear_gate, verify_normal_form, NormalFormResult,
    NormalizeOptions, Resonance, Strategy, DEFAULT_PARAM_DEGREE_CAP,
};
use crnf_core::random::{gen_random_map, random_homogeneous, random_surface, rng};
use crnf_core::scalar::parse_rat;
use crnf_core::surface::{push_forward, transform_residual, Surface};
use crnf_core::{fischer_pair, BiPoly, Error, GaussRat};

const CAP_VAR: &str = "CRNF_PARAM_DEGREE_CAP";

#[derive(Parser)]
#[command(name = "crnf", version, about = "Exact normal forms of real surfaces at a CR singularity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fischer division by Q = z² + z̄² and related operations.
    Fischer {
        #[command(subcommand)]
        op: FischerOp,
    },
    /// Degree-2 consistency check for the linear part of a map.
    Gate {
        #[arg(long, allow_hyphen_values = true)]
        f10: String,
        #[arg(long, allow_hyphen_values = true, default_value = "0")]
        f10_im: String,
        #[arg(long, allow_hyphen_values = true)]
        g01: String,
        #[arg(long, allow_hyphen_values = true, default_value = "0")]
        g01_im: String,
        #[command(flatten)]
        out: OutArg,
    },
    /// Compute the normal form of a surface.
    Normalize {
        #[arg(long)]
        order: Option<u32>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Check that a surface is in normal form.
    Verify {
        #[arg(long, default_value = "ortho")]
        strategy: Strategy,
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Push a surface forward under a map.
    Pushforward {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        map: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Compare NF(M) with NF(φ(M)).
    Invariance {
        /// Surface; defaults to w = Q + z³ + z²z̄/2.
        #[arg(long = "in")]
        input: Option<PathBuf>,
        /// Fixed map to test; otherwise random kernel-free maps are drawn.
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        trials: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        order: u32,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Seeded property trials of the core identities.
    Randtest {
        #[arg(long, default_value_t = 20)]
        trials: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        order: u32,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Subcommand)]
enum FischerOp {
    /// P = Q·A + R with tr R = 0.
    Divide {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Iterated division of the quotients.
    Chain {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Invariant cubic of a degree-3 polynomial.
    #[command(name = "W")]
    W {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value = "ortho")]
    strategy: Strategy,
    #[arg(long, default_value = "w-chain")]
    resonance: Resonance,
}

#[derive(Args)]
struct OutArg {
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::DegenerateW) => 2,
        Some(Error::NonAffineResolution { .. }) => 3,
        Some(Error::Parse(_) | Error::NotHomogeneous | Error::DegreeMismatch { .. } | Error::InvalidDegree(_)) => 4,
        _ => 1,
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load<T>(path: &Path, parse: impl Fn(&str) -> crnf_core::Result<T>) -> Result<T> {
    let text = read(path)?;
    // keep the typed error for exit-code mapping
    parse(&text).map_err(|e| anyhow::Error::new(e).context(path.display().to_string()))
}

fn emit(out: &OutArg, value: &Value) -> Result<()> {
    let text = io::to_json_string(value);
    match &out.out {
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
        Some(path) => write_atomic(path, &text),
    }
}

fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn param_cap() -> Result<u32> {
    match std::env::var(CAP_VAR) {
        Ok(v) => v.trim().parse().with_context(|| format!("{CAP_VAR}={v:?} is not a nonnegative integer")),
        Err(_) => Ok(DEFAULT_PARAM_DEGREE_CAP),
    }
}

fn options(order: u32, solver: &SolverArgs) -> Result<NormalizeOptions> {
    Ok(NormalizeOptions::new(order).strategy(solver.strategy).resonance(solver.resonance).param_cap(param_cap()?))
}

fn gauss(re: &str, im: &str) -> Result<GaussRat> {
    Ok(GaussRat::new(parse_rat(re)?, parse_rat(im)?))
}

fn seed_surface(order: u32) -> Result<Surface<GaussRat>> {
    Ok(Surface::new(
        order,
        BiPoly::from_terms([((3, 0), GaussRat::from_int(1)), ((2, 1), GaussRat::from_ratio(1, 2))]),
    )?)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Fischer { op } => match op {
            FischerOp::Divide { input, out } => {
                let p = load(&input, io::parse_poly)?;
                let split = fischer_divide(&p)?;
                emit(&out, &json!({
                    "quotient": io::poly_to_json(&split.quotient),
                    "remainder": io::poly_to_json(&split.remainder),
                }))
            }
            FischerOp::Chain { input, out } => {
                let p = load(&input, io::parse_poly)?;
                let chain = chain_decompose(&p)?;
                let quotients: Vec<_> = chain.quotients.iter().map(io::poly_to_json).collect();
                let remainders: Vec<_> = chain.remainders.iter().map(io::poly_to_json).collect();
                emit(&out, &json!({
                    "degree": chain.degree,
                    "quotients": quotients,
                    "remainders": remainders,
                    "final_quotient": io::poly_to_json(&chain.final_quotient()),
                }))
            }
            FischerOp::W { input, out } => {
                let p = load(&input, io::parse_poly)?;
                let w = compute_w(&p)?;
                emit(&out, &json!({ "w": io::poly_to_json(&w), "degenerate": w.is_zero() }))
            }
        },
        Command::Gate { f10, f10_im, g01, g01_im, out } => {
            let f10 = gauss(&f10, &f10_im)?;
            let g01 = gauss(&g01, &g01_im)?;
            let v = solve_linear_gate(&f10, &g01);
            let normalizer = v.normalizer.as_ref().map(|(f, g)| {
                json!({ "z_scale": to_value(&io::JsonScalar::to_value(f)), "w_scale": to_value(&io::JsonScalar::to_value(g)) })
            });
            emit(&out, &json!({ "accepted": v.accepted, "violated": v.violated, "normalizer": normalizer }))
        }
        Command::Normalize { order, solver, input, out } => {
            let m = load(&input, io::parse_surface)?;
            let opts = options(order.unwrap_or(m.truncation()), &solver)?;
            let result = normalize(&m, &opts)?;
            emit(&out, &to_value(&result_to_json(&result)))
        }
        Command::Verify { strategy, input, out } => {
            let m = load(&input, io::parse_surface)?;
            let report = verify_normal_form(&m, strategy)?;
            let degrees: Vec<Value> = report
                .degrees
                .iter()
                .map(|d| {
                    let mut v = json!({ "degree": d.degree, "pass": d.pass });
                    if let (Some(re), Some(im)) = (d.re_pass, d.im_pass) {
                        v["re_in_S_p"] = json!(re);
                        v["im_in_S_p"] = json!(im);
                        v["im_in_S_p_minus_1_depth_reading"] = json!(im);
                    }
                    v
                })
                .collect();
            emit(&out, &json!({
                "strategy": strategy.name(),
                "pass": report.all_pass(),
                "first_failure": report.first_failure(),
                "degrees": degrees,
            }))
        }
        Command::Pushforward { input, map, out } => {
            let m = load(&input, io::parse_surface)?;
            let phi = load(&map, io::parse_map)?;
            let image = push_forward(&m, &phi)?;
            emit(&out, &to_value(&surface_to_json(&image)))
        }
        Command::Invariance { input, map, trials, seed, order, solver, out } => {
            let m = match &input {
                Some(p) => load(p, io::parse_surface)?,
                None => seed_surface(order)?,
            };
            let opts = options(order, &solver)?;
            let original = normalize(&m, &opts)?;
            let maps: Vec<(Option<u64>, _)> = match &map {
                Some(p) => vec![(None, load(p, io::parse_map)?.with_truncation(m.truncation()))],
                None => (0..trials as u64)
                    .map(|i| {
                        let s = seed.wrapping_add(i);
                        Ok((Some(s), gen_random_map(s, m.truncation(), true)?))
                    })
                    .collect::<crnf_core::Result<_>>()?,
            };
            let mut reports = Vec::new();
            let mut all_equal = true;
            for (trial_seed, phi) in maps {
                let image = push_forward(&m, &phi)?;
                let transformed = normalize(&image, &opts)?;
                let first = first_difference(&original, &transformed);
                all_equal &= first.is_none();
                let mut r = json!({
                    "seed": trial_seed,
                    "map": to_value(&io::map_to_json(&phi)),
                    "equal": first.is_none(),
                    "first_discrepancy": first,
                });
                if first.is_some() {
                    r["original"] = ledger(&original);
                    r["transformed"] = ledger(&transformed);
                }
                reports.push(r);
            }
            emit(&out, &json!({
                "order": order,
                "strategy": solver.strategy.name(),
                "resonance": solver.resonance.name(),
                "surface": to_value(&surface_to_json(&m)),
                "normal_form": to_value(&surface_to_json(&original.surface)),
                "all_equal": all_equal,
                "trials": reports,
            }))
        }
        Command::Randtest { trials, seed, order, out } => randtest(trials, seed, order, &out),
    }
}

fn ledger(r: &NormalFormResult) -> Value {
    let j = result_to_json(r);
    json!({
        "surface": to_value(&j.surface),
        "parameters": to_value(&j.parameters),
        "unresolved": j.unresolved,
    })
}

fn randtest(trials: u32, seed: u64, order: u32, out: &OutArg) -> Result<()> {
    let mut r = rng(seed);
    let mut division = 0;
    let mut adjoint = 0;
    let mut coherence = 0;
    let q = BiPoly::<GaussRat>::quadric();
    let opts = NormalizeOptions::new(order).param_cap(param_cap()?);
    for _ in 0..trials {
        let d = 3 + (division % 8);
        let p = random_homogeneous(&mut r, d);
        let split = fischer_divide(&p)?;
        let qa = &q * &split.quotient;
        let zero = GaussRat::from_int(0);
        if qa.clone() + split.remainder.clone() == p
            && split.remainder.trace().is_zero()
            && fischer_pair(&qa, &split.remainder)? == zero
        {
            division += 1;
        }
        let a = random_homogeneous(&mut r, d - 2);
        let b = random_homogeneous(&mut r, d);
        if fischer_pair(&(&q * &a), &b)? == fischer_pair(&a, &b.trace())? {
            adjoint += 1;
        }
        let m = random_surface(&mut r, order)?;
        let nf = normalize(&m, &opts)?;
        if transform_residual(&m.to_param(), &nf.map, &nf.surface, order).is_zero() {
            coherence += 1;
        }
    }
    let ok = division == trials && adjoint == trials && coherence == trials;
    emit(out, &json!({
        "seed": seed,
        "trials": trials,
        "order": order,
        "division_exact": division,
        "adjointness": adjoint,
        "solver_coherence": coherence,
        "pass": ok,
    }))?;
    if ok {
        Ok(())
    } else {
        Err(anyhow::anyhow!("randtest failures"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_taxonomy() {
        let code = |e: Error| exit_code(&anyhow::Error::new(e).context("ctx"));
        assert_eq!(code(Error::DegenerateW), 2);
        assert_eq!(code(Error::NonAffineResolution { degree: 6, depth: 1 }), 3);
        assert_eq!(code(Error::Parse("x".into())), 4);
        assert_eq!(code(Error::NotHomogeneous), 4);
        assert_eq!(code(Error::ParameterCapExceeded { degree: 4, found: 5, cap: 4 }), 1);
        assert_eq!(exit_code(&anyhow::anyhow!("io")), 1);
    }
}
