//! Command-line interface.

use std::ffi::OsString;
use std::io::Write;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::coverings::{build_lagrangian_covering, build_potential_covering, covering_defect, verify_covering_consistency};
use crate::error::Error;
use crate::expr::{equals, Expr, Rational};
use crate::jet::{change_independent_system, PdeSystem};
use crate::kovalevskaya::{to_kovalevskaya, validate_kovalevskaya, Hint};
use crate::operators::linearize;
use crate::oracle::{Oracle, OracleConfig, DEFAULT_SEED, DEFAULT_TOL, DEFAULT_TRIALS};
use crate::report::{Check, Input, Report};
use crate::syslang::{format_expr, format_operator, parse, parse_expr, print, SystemFile};
use crate::variational::{degeneracy_check, euler, is_symmetry, is_variational_with_shift, noether_map, symplectic_check, symplectic_defect};

#[derive(Parser, Debug)]
#[command(name = "jetcalc", version, about = "Symbolic jet-space calculus for systems of PDEs")]
pub struct Cli {
    /// Emit the structured JSON report instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Sample points per randomized identity test.
    #[arg(long, global = true, default_value_t = DEFAULT_TRIALS)]
    pub trials: usize,
    /// Relative tolerance for floating-point comparisons.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Seed of the numeric oracle.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum CoverType {
    Lagrangian,
    Potential,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the universal linearization of the equations.
    Linearize { file: String },
    /// Print the formal adjoint of a declared operator.
    Adjoint {
        file: String,
        #[arg(long)]
        operator: String,
    },
    /// Print the Euler-Lagrange expressions of the file's Lagrangian.
    Euler { file: String },
    /// Helmholtz test, with a homotopy Lagrangian when one exists.
    CheckVariational {
        file: String,
        /// Base point of the homotopy, one constant expression per dependent
        /// variable, e.g. `1` or `1,0`. Needed when the equations are
        /// singular at `u = 0`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        shift: Option<Vec<String>>,
    },
    /// Search for an extended Kovalevskaya form.
    Kovalevskaya {
        file: String,
        #[arg(long)]
        direction: String,
        /// Pivots to apply first, e.g. `4:w_z,1:u_zz`.
        #[arg(long)]
        hints: Option<String>,
        /// Linear change of independent variables `x_new = M x_old`, rows
        /// separated by `;`, e.g. `1,1;1,-1`.
        #[arg(long)]
        change: Option<String>,
        /// Names of the new independent variables (with `--change`).
        #[arg(long, value_delimiter = ',')]
        names: Option<Vec<String>>,
        /// Use the Euler-Lagrange equations of the Lagrangian block as the
        /// system.
        #[arg(long)]
        from_lagrangian: bool,
    },
    /// Emit a covering of the system as a `.pde` file.
    Cover {
        file: String,
        #[arg(long = "type", value_enum)]
        kind: CoverType,
        #[arg(long)]
        density: Option<String>,
        #[arg(long, value_delimiter = ',')]
        velocity: Option<Vec<String>>,
        #[arg(long)]
        law: Option<String>,
        /// Write the covering here instead of standard output.
        #[arg(long, short)]
        output: Option<String>,
    },
    /// Check that the covering's defining equations are consistent.
    VerifyCovering { file: String },
    /// Check Δ*∘l = l*∘Δ on solutions.
    Symplectic {
        file: String,
        #[arg(long)]
        operator: String,
    },
    /// Map a symmetry to a cosymmetry through an operator.
    Noether {
        file: String,
        #[arg(long)]
        operator: String,
        #[arg(long)]
        symmetry: String,
    },
    /// Decide whether an operator annihilates the fiber symmetries.
    Degeneracy {
        file: String,
        #[arg(long)]
        operator: String,
        #[arg(long, value_delimiter = ',')]
        fiber_symmetries: Option<Vec<String>>,
    },
    /// Compare two expressions in the file's context.
    Oracle {
        file: String,
        #[arg(long, allow_hyphen_values = true)]
        lhs: String,
        #[arg(long, allow_hyphen_values = true)]
        rhs: String,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Linearize { .. } => "linearize",
            Command::Adjoint { .. } => "adjoint",
            Command::Euler { .. } => "euler",
            Command::CheckVariational { .. } => "check-variational",
            Command::Kovalevskaya { .. } => "kovalevskaya",
            Command::Cover { .. } => "cover",
            Command::VerifyCovering { .. } => "verify-covering",
            Command::Symplectic { .. } => "symplectic",
            Command::Noether { .. } => "noether",
            Command::Degeneracy { .. } => "degeneracy",
            Command::Oracle { .. } => "oracle",
        }
    }

    fn file(&self) -> &str {
        match self {
            Command::Linearize { file }
            | Command::Adjoint { file, .. }
            | Command::Euler { file }
            | Command::CheckVariational { file, .. }
            | Command::Kovalevskaya { file, .. }
            | Command::Cover { file, .. }
            | Command::VerifyCovering { file }
            | Command::Symplectic { file, .. }
            | Command::Noether { file, .. }
            | Command::Degeneracy { file, .. }
            | Command::Oracle { file, .. } => file,
        }
    }
}

/// Errors that make the invocation itself invalid (exit code 2).
enum Failure {
    Usage(String),
    Check(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) | Error::UnknownName { .. } | Error::UndeclaredVariable(_) => Failure::Usage(e.to_string()),
            e => Failure::Check(e),
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Runs the CLI with `args` (including the program name) and returns the
/// exit code: 0 when every verdict holds, 1 when a check fails, 2 on usage
/// or parse errors.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let color = std::env::var_os("NO_COLOR").is_none() && !cli.json && is_terminal();
    let config = OracleConfig { seed: cli.seed, trials: cli.trials.max(1), tol: cli.tol };
    let mut report = Report::new(cli.command.name(), config.clone());
    let start = Instant::now();
    let outcome = execute(&cli.command, &config, &mut report);
    report.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    let code = match outcome {
        Ok(()) if report.passed => 0,
        Ok(()) => 1,
        Err(Failure::Check(e)) => {
            report.fail(e.to_string());
            1
        }
        Err(Failure::Usage(msg)) => {
            report.fail(msg.clone());
            if !cli.json {
                let _ = writeln!(err, "jetcalc: {msg}");
                return 2;
            }
            2
        }
    };
    if cli.json {
        let _ = writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("serializable report"));
    } else {
        let _ = write!(out, "{}", report.render(color));
    }
    code
}

fn is_terminal() -> bool {
    use std::io::IsTerminal;
    std::io::stdout().is_terminal()
}

fn load(path: &str, report: &mut Report) -> std::result::Result<SystemFile, Failure> {
    let bytes = std::fs::read(path).map_err(|e| usage(format!("cannot read {path}: {e}")))?;
    report.inputs.push(Input::new(path, &bytes));
    let text = String::from_utf8(bytes).map_err(|_| usage(format!("{path}: not UTF-8")))?;
    parse(&text).map_err(|e| usage(format!("{path}:{e}")))
}

fn oracle_for(file: &SystemFile, config: &OracleConfig) -> Oracle {
    file.context.oracle(config.clone())
}

fn format_vector(v: &[Expr], file: &SystemFile) -> String {
    let parts: Vec<String> = v.iter().map(|e| format_expr(e, &file.context)).collect();
    format!("({})", parts.join(", "))
}

fn parse_hints(text: &str, system: &PdeSystem) -> std::result::Result<Vec<Hint>, Failure> {
    let mut hints = Vec::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, jet) = part.split_once(':').ok_or_else(|| usage(format!("hint `{part}` is not of the form N:jet")))?;
        let k: usize = k.trim().parse().ok().filter(|&k| k >= 1).ok_or_else(|| usage(format!("bad equation number in `{part}`")))?;
        let pivot = match system.context.resolve_leaf(jet.trim()) {
            Ok(crate::expr::Atom::Jet(j)) => j,
            _ => return Err(usage(format!("`{}` is not a jet coordinate", jet.trim()))),
        };
        hints.push(Hint { equation: k - 1, pivot });
    }
    Ok(hints)
}

fn parse_matrix(text: &str) -> std::result::Result<Vec<Vec<Rational>>, Failure> {
    text.split(';')
        .map(|row| {
            row.split(',')
                .map(|x| x.trim().parse::<Rational>().map_err(|_| usage(format!("bad matrix entry `{}`", x.trim()))))
                .collect()
        })
        .collect()
}

fn execute(cmd: &Command, config: &OracleConfig, report: &mut Report) -> std::result::Result<(), Failure> {
    let file = load(cmd.file(), report)?;
    let ctx = &file.context;
    let oracle = oracle_for(&file, config);
    match cmd {
        Command::Linearize { .. } => {
            let op = linearize(&file.system());
            report.output("linearization", format_operator(&op, ctx));
        }
        Command::Adjoint { operator, .. } => {
            let op = file.operator(operator)?;
            report.output("adjoint", format_operator(&op.adjoint(), ctx));
        }
        Command::Euler { .. } => {
            let l = file.lagrangian.as_ref().ok_or_else(|| usage("file has no lagrangian block"))?;
            let e = euler(l, ctx);
            for (j, ej) in e.iter().enumerate() {
                report.output(&format!("E_{}", ctx.dependents[j]), format_expr(ej, ctx));
            }
            let f = file.system().equations;
            if f.len() == e.len() {
                let mut matches = crate::expr::Verdict::ProvedEqual;
                for (ej, fj) in e.iter().zip(&f) {
                    let same = equals(ej, fj, &oracle)?;
                    let v = if same.holds() { same } else { equals(ej, &-fj, &oracle)? };
                    matches = matches.and(v);
                }
                report.check(Check::from_verdict("euler matches equations up to sign", &matches));
            }
        }
        Command::CheckVariational { shift, .. } => {
            let shift = match shift {
                Some(s) => {
                    let base = s
                        .iter()
                        .map(|e| parse_expr(e, ctx).map_err(|err| usage(format!("--shift: {err}"))))
                        .collect::<Result<Vec<_>, _>>()?;
                    if base.len() != ctx.m() {
                        return Err(usage(format!("--shift needs {} value(s), one per dependent variable", ctx.m())));
                    }
                    Some(base)
                }
                None => None,
            };
            let r = is_variational_with_shift(&file.system(), shift.as_deref(), &oracle)?;
            let mut c = Check::from_verdict("helmholtz (l_F = l_F*)", &r.verdict);
            if let Some((i, j)) = r.violation {
                c = c.with_detail(format!("entry ({}, {}) of l_F - l_F* is nonzero", i + 1, j + 1));
                report.output("l_F - l_F*", format_operator(&r.difference, ctx));
            }
            report.check(c);
            report.output("variational", if r.is_variational() { "yes" } else { "no" });
            if let Some(l) = &r.lagrangian {
                report.output("lagrangian", format_expr(l, ctx));
            }
            if let Some(e) = &r.lagrangian_error {
                report.output("lagrangian", format!("unavailable: {e}"));
            }
        }
        Command::Kovalevskaya { direction, hints, change, names, from_lagrangian, .. } => {
            let mut system = file.system();
            system.kovalevskaya = None;
            if *from_lagrangian {
                let l = file.lagrangian.as_ref().ok_or_else(|| usage("file has no lagrangian block"))?;
                system.equations = euler(l, ctx);
            }
            if let Some(m) = change {
                let m = parse_matrix(m)?;
                system = change_independent_system(&system, &m, names.as_deref())?;
            } else if names.is_some() {
                return Err(usage("--names requires --change"));
            }
            let ctx = &system.context;
            let d = ctx.indep_index(direction).ok_or_else(|| usage(format!("`{direction}` is not an independent variable")))?;
            let hints = match (hints, &file.kovalevskaya) {
                (Some(h), _) => parse_hints(h, &system)?,
                (None, Some(k)) if k.direction == d && change.is_none() => k.hints.clone(),
                _ => Vec::new(),
            };
            let form = to_kovalevskaya(&system, d, &hints)?;
            let b: Vec<String> = form.orders.iter().map(u32::to_string).collect();
            report.output("b", format!("({})", b.join(",")));
            for e in &form.trail {
                report.audit.push(format!(
                    "equation {}: eliminate {} (coefficient {})",
                    e.equation + 1,
                    ctx.jet_name(&e.pivot),
                    format_expr(&e.coefficient, ctx)
                ));
            }
            let solved: Vec<String> = (0..ctx.m())
                .filter_map(|j| form.data().pivot(j, ctx.n()).map(|p| format!("{} = {}", ctx.jet_name(&p), format_expr(&form.rhs[j], ctx))))
                .collect();
            report.output("form", solved.join("\n"));
            let oracle = ctx.oracle(config.clone());
            let v = validate_kovalevskaya(&form.data(), &system, &oracle)?;
            let independence = match &v.violation {
                None => crate::expr::Verdict::ProvedEqual,
                Some(_) => crate::expr::Verdict::ProvedUnequal { witness: None },
            };
            let mut c = Check::from_verdict("right sides free of leading coordinates", &independence);
            if let Some((i, j)) = &v.violation {
                c = c.with_detail(format!("right side {} contains {}", i + 1, ctx.jet_name(j)));
            }
            report.check(c);
            if let Some(o) = &v.originals_vanish {
                report.check(Check::from_verdict("original equations reduce to zero", o));
            }
            if let Some(s) = &v.sampled {
                report.check(Check::from_verdict("original equations vanish at sampled solutions", s));
            }
            report.data = json!({
                "direction": direction,
                "orders": form.orders,
                "trail": form.trail.iter().map(|e| json!({
                    "equation": e.equation + 1,
                    "pivot": ctx.jet_name(&e.pivot),
                })).collect::<Vec<_>>(),
            });
        }
        Command::Cover { kind, density, velocity, law, output, .. } => {
            let base = file.resolved_system()?;
            let (cov, law_name) = match kind {
                CoverType::Lagrangian => {
                    let rho = density.as_deref().ok_or_else(|| usage("--density is required"))?;
                    let v: Vec<&str> = velocity.iter().flatten().map(String::as_str).collect();
                    (build_lagrangian_covering(&base, rho, &v)?, String::new())
                }
                CoverType::Potential => {
                    let name = law.as_deref().ok_or_else(|| usage("--law is required"))?;
                    (build_potential_covering(&base, file.law(name)?)?, name.to_string())
                }
            };
            let text = print(&SystemFile::from_covering(&cov, &law_name));
            match output {
                Some(path) => {
                    std::fs::write(path, &text).map_err(|e| usage(format!("cannot write {path}: {e}")))?;
                    report.output("written", path.clone());
                }
                None => report.output("file", text),
            }
        }
        Command::VerifyCovering { .. } => {
            if file.covering.is_none() {
                return Err(usage("file has no covering block"));
            }
            let cov = file.covering_system()?;
            let defect = covering_defect(&cov)?;
            report.output("defect", format_expr(&defect, ctx));
            report.check(Check::from_verdict("covering consistency", &verify_covering_consistency(&cov, &oracle)?));
        }
        Command::Symplectic { operator, .. } => {
            let system = file.resolved_system()?;
            let op = file.operator(operator)?;
            let v = symplectic_check(op, &system, &oracle)?;
            if !v.holds() {
                report.output("defect", format_operator(&symplectic_defect(op, &system)?, ctx));
            }
            report.check(
                Check::from_verdict("symplectic (Δ*∘l = l*∘Δ on solutions)", &v)
                    .with_detail("checks this representative; equivalence modulo ∇∘l_E is not decided"),
            );
        }
        Command::Noether { operator, symmetry, .. } => {
            let system = file.resolved_system()?;
            let op = file.operator(operator)?;
            let phi = &file.symmetry(symmetry)?.components;
            report.check(Check::from_verdict("symmetry", &is_symmetry(phi, &system, &oracle)?));
            let image = noether_map(op, phi, &system, &oracle)?;
            report.output("cosymmetry", format_vector(&image.cosymmetry, &file));
            report.check(Check::from_verdict("cosymmetry", &image.verdict));
        }
        Command::Degeneracy { operator, fiber_symmetries, .. } => {
            let system = file.resolved_system()?;
            let op = file.operator(operator)?;
            let names: Vec<String> = match fiber_symmetries {
                Some(n) => n.clone(),
                None => file.symmetries.iter().filter(|s| s.fiber).map(|s| s.name.clone()).collect(),
            };
            if names.is_empty() {
                return Err(usage("no fiber symmetries given or declared"));
            }
            let mut syms = Vec::new();
            for n in &names {
                syms.push((n.clone(), file.symmetry(n)?.components.clone()));
            }
            let nonlocal: Option<Vec<usize>> =
                file.covering.as_ref().map(|c| (ctx.m() - c.nonlocal..ctx.m()).collect());
            let r = degeneracy_check(op, &syms, nonlocal.as_deref(), &system, &oracle)?;
            for e in &r.entries {
                report.check(Check::from_verdict(&format!("{} is a symmetry", e.name), &e.symmetry));
                report.output(&format!("{}(φ) for {}", operator, e.name), format_vector(&e.image, &file));
                report.check(Check::from_verdict(&format!("{} annihilated", e.name), &e.vanishes).with_detail(e.describe()));
            }
            report.output("result", if r.not_a_lift() { "not a lift" } else { "lift-compatible" });
        }
        Command::Oracle { lhs, rhs, .. } => {
            let a = parse_expr(lhs, ctx).map_err(|e| usage(format!("--lhs: {e}")))?;
            let b = parse_expr(rhs, ctx).map_err(|e| usage(format!("--rhs: {e}")))?;
            report.check(Check::from_verdict("lhs = rhs", &equals(&a, &b, &oracle)?));
        }
    }
    Ok(())
}
