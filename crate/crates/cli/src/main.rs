use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use supercocycle_cli::report::{emit_report, Check, Format, Report, Residual, Status};
use supercocycle_cli::spec::{parse_chern_spec, parse_cocycle_spec, parse_euler_spec};
use supercocycle_cli::verify::{run_verify, Params, SUITES};
use supercocycle_core::chern::{chern_components, transgression_check};
use supercocycle_core::cocycles::{is_cocycle_e, is_cocycle_k, make_k_element, reduce_class};
use supercocycle_core::euler::{euler_cocycle, euler_form, holomorphy_defect, modular_defect, pontryagin_p1, ModularTarget, Sl2};
use supercocycle_core::eisenstein::{g2_completed, g_series, EisKind};
use supercocycle_core::Error;

#[derive(Parser)]
#[command(name = "supercocycle", version, about = "Exact checks for super Euclidean cocycles, Chern characters and elliptic Euler forms")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: FormatArg,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a verification suite.
    Verify {
        #[arg(default_value = "all", value_parser = clap::builder::PossibleValuesParser::new(SUITES))]
        suite: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Random instances per randomized check.
        #[arg(long, default_value_t = 100)]
        count: u64,
        /// Include per-check wall-clock times (makes output run-dependent).
        #[arg(long)]
        timings: bool,
    },
    /// Chern character of a superconnection given as JSON.
    Chern { spec: PathBuf },
    /// Elliptic Euler form and cocycle of a curvature given as JSON.
    Euler { spec: PathBuf },
    /// Evaluate an Eisenstein series and its modular defect under S and T.
    Modular {
        /// Point in the upper half plane, e.g. 0.3+1.1i.
        #[arg(long, allow_hyphen_values = true)]
        tau: String,
        /// 2 (completed), 2hol, 4 or 6.
        #[arg(long, value_parser = ["2", "2hol", "4", "6"])]
        weight: String,
        #[arg(long, default_value_t = 50)]
        q_terms: usize,
    },
    /// Reduce a K-cocycle on a chart to its constant class.
    Reduce { cocycle: PathBuf },
}

/// Input problems exit with 2, failed checks with 1.
enum Failure {
    Usage(String),
    Check(String),
}

fn classify(e: Error) -> Failure {
    match e {
        Error::ParseError { .. } | Error::ValidationError(_) | Error::IoError(_) | Error::UnknownMonomial(_) => Failure::Usage(e.to_string()),
        Error::ParityViolation(_) | Error::NotSquare | Error::NotAntisymmetric | Error::OddDimension | Error::RingMismatch(_) => {
            Failure::Usage(e.to_string())
        }
        _ => Failure::Check(e.to_string()),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn check(id: &str, anchor: &str, ok: bool, residual: Residual) -> Check {
    Check { id: id.into(), anchor: anchor.into(), status: if ok { Status::Pass } else { Status::Fail }, residual, elapsed_ms: None }
}

fn form_check(id: &str, anchor: &str, r: &supercocycle_core::forms::Form) -> Check {
    let res = if r.is_zero() { Residual::zero() } else { Residual::Exact(r.to_string()) };
    check(id, anchor, r.is_zero(), res)
}

fn run(cli: &Cli) -> Result<Report, Failure> {
    let u = classify;
    Ok(match &cli.cmd {
        Cmd::Verify { suite, seed, count, timings } => {
            let mut r = run_verify(suite, Params { seed: *seed, count: *count }).map_err(u)?;
            if !timings {
                r.checks.iter_mut().for_each(|c| c.elapsed_ms = None);
            }
            r
        }
        Cmd::Chern { spec } => {
            let a = parse_chern_spec(&read(spec)?).map_err(u)?;
            let (z, l) = chern_components(&a, None).map_err(u)?;
            let mut r = Report::new("chern", 0, 1);
            r.values.insert("Z".into(), z.to_string());
            r.values.insert("L".into(), l.to_string());
            r.checks.push(form_check("chern.transgression", "∂_ℓZ − dL", &transgression_check(&a, None).map_err(u)?));
            let ok = is_cocycle_k(&make_k_element(&z, &l).map_err(u)?).map_err(u)?;
            r.checks.push(check("chern.cocycle", "d_tot(Z, L) = 0", ok, Residual::zero()));
            r
        }
        Cmd::Euler { spec } => {
            let input = parse_euler_spec(&read(spec)?).map_err(u)?;
            let c = &input.curvature;
            let mut r = Report::new("euler", 0, 1);
            r.values.insert("p1".into(), pontryagin_p1(c).map_err(u)?.to_string());
            r.values.insert("Eu".into(), euler_form(c).map_err(u)?.to_string());
            r.checks.push(form_check("euler.holomorphy", "∂_τ̄Eu − κ·Eu", &holomorphy_defect(c).map_err(u)?));
            match euler_cocycle(c, input.h.as_ref()) {
                Ok(k) => {
                    r.values.insert("H".into(), k.h.to_string());
                    r.values.insert("Z_taubar".into(), k.element.ztb.to_string());
                    r.values.insert("constant".into(), k.constant.to_string());
                    let ok = is_cocycle_e(&k.element).map_err(u)?;
                    r.checks.push(check("euler.cocycle", "(Eu, 0, Z_τ̄) is a cocycle of Tot(E)", ok, Residual::zero()));
                }
                Err(e @ (Error::NoWitness | Error::NotStringStructure)) => {
                    r.checks.push(check("euler.cocycle", "(Eu, 0, Z_τ̄) is a cocycle of Tot(E)", false, Residual::Exact(e.to_string())));
                }
                Err(e) => return Err(u(e)),
            }
            r
        }
        Cmd::Modular { tau, weight, q_terms } => {
            let t: Complex64 = tau.replace(' ', "").parse().map_err(|_| Failure::Usage(format!("cannot parse tau '{tau}'")))?;
            let target = match weight.as_str() {
                "2hol" => ModularTarget::E2Hol,
                k => ModularTarget::Weight(k.parse().expect("restricted by clap")),
            };
            let value = match target {
                ModularTarget::E2Hol => g_series(EisKind::E2hol, t, *q_terms),
                ModularTarget::Weight(2) => g2_completed(t, *q_terms),
                ModularTarget::Weight(4) => g_series(EisKind::E4, t, *q_terms),
                _ => g_series(EisKind::E6, t, *q_terms),
            }
            .map_err(u)?;
            let mut r = Report::new("modular", 0, *q_terms as u64);
            r.values.insert("value".into(), format!("{value}"));
            for (name, g) in [("S", Sl2::S), ("T", Sl2::T)] {
                let d = modular_defect(target, t, g, *q_terms).map_err(u)?;
                r.checks.push(check(&format!("modular.{name}"), "|f(γτ) − (cτ+d)^k f(τ)|", d < 1e-8, Residual::numeric(d)));
            }
            r
        }
        Cmd::Reduce { cocycle } => {
            let k = parse_cocycle_spec(&read(cocycle)?).map_err(u)?;
            let mut r = Report::new("reduce", 0, 1);
            match reduce_class(&k) {
                Ok(red) => {
                    r.values.insert("class".into(), red.class.to_string());
                    r.values.insert("primitive".into(), red.primitive.base.to_string());
                    if let Some(g) = red.primitive.parts.values().next() {
                        r.values.insert("primitive_dell".into(), g.to_string());
                    }
                    r.checks.push(check("reduce.constant", "class is a constant", red.class.as_constant().is_some(), Residual::zero()));
                }
                Err(Error::NotCocycle) => {
                    r.checks.push(check("reduce.cocycle", "input is a cocycle", false, Residual::Exact("not a cocycle".into())));
                }
                Err(e) => return Err(u(e)),
            }
            r
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = match cli.format {
        FormatArg::Json => Format::Json,
        FormatArg::Text => Format::Text,
    };
    match run(&cli) {
        Ok(r) => {
            if let Err(e) = emit_report(&r, format, cli.output.as_deref()) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            if r.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Check(m)) => {
            eprintln!("check failed: {m}");
            ExitCode::from(1)
        }
    }
}
