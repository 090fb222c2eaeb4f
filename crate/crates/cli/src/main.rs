use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use muckenhoupt::constants::{
    a1_constant, ap_constant, rhinf_constant, rhr_constant, ConstantEstimate, SearchFamily, Status, DEFAULT_CAP,
};
use muckenhoupt::distributional::{check_sub_level, check_super_level, verify_moment_identity};
use muckenhoupt::dyadic::{a1k_constant, dyadic_cover, rhinfk_constant, Cube, DyadicGrid, GridSet};
use muckenhoupt::factorization::{
    certify_ap_factorization_with, certify_rh_factorization_with, predict_ranges, CertifyOptions, Factorization,
};
use muckenhoupt::scan::{parse_grid, predicted_range, scan_indices, ScanKind};
use muckenhoupt::sharp_ranges::{
    ap_range_from_rhinf, kinnunen_residual, kinnunen_upper_index, nd_ap_range_from_rhinfk, nd_rh_range_from_a1k,
    rh_range_from_a1,
};
use muckenhoupt::{parse_weight, Error, Interval, Weight};
use serde_json::{json, Value};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  2  weight-spec or command-line parse error
  3  invalid parameters
  4  an estimate stopped at resolution (cap reached without divergence evidence)
  5  factorization certificate rejected";

#[derive(Parser)]
#[command(name = "aprh", version, about = "A_p / RH_r characteristic constants, index ranges and covering checks")]
#[command(after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate one characteristic constant of a weight.
    Constant(ConstantArgs),
    /// Index ranges implied by a constant or by a declared factorization.
    Range(RangeArgs),
    /// Membership table over an index grid.
    Scan(ScanArgs),
    /// Level-set inequalities on one interval.
    VerifyIneq(VerifyArgs),
    /// Dyadic cover of a grid set with its certificate.
    Cover(CoverArgs),
    /// Upper index solving c·((p-r)/r)·(p')^r = 1.
    Kinnunen(KinnunenArgs),
}

#[derive(Args, Clone)]
struct OutputArgs {
    /// JSON report (the default).
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    /// CSV projection (scan and verify-ineq tables only).
    #[arg(long)]
    csv: bool,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Leave out the timestamp so identical runs give identical bytes.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Args, Clone)]
struct SearchArgs {
    /// Refinement depth of the interval search.
    #[arg(long, default_value_t = 4)]
    depth: usize,
    /// Finite values above this cap need growth under refinement to count as divergent.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: f64,
}

impl SearchArgs {
    fn family(&self, w: &Weight) -> Result<SearchFamily, Error> {
        if !(self.cap.is_finite() && self.cap > 1.0) {
            return Err(Error::InvalidParameter(format!("cap must exceed 1, got {}", self.cap)));
        }
        Ok(SearchFamily::for_weight(w).with_refinement(self.depth).with_cap(self.cap))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Class {
    A1,
    Rhinf,
    Ap,
    #[value(alias = "rh")]
    Rhr,
    A1k,
    Rhinfk,
}

#[derive(Args)]
struct ConstantArgs {
    #[arg(long)]
    weight: String,
    #[arg(long, value_enum)]
    class: Class,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    /// Dilation factor for a1k / rhinfk.
    #[arg(long, default_value_t = 3)]
    k: u32,
    /// Raise the weight to this power first.
    #[arg(long)]
    tau: Option<f64>,
    /// Only intervals not containing the origin in their interior.
    #[arg(long)]
    punctured: bool,
    #[command(flatten)]
    search: SearchArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum FromClass {
    A1,
    Rhinf,
    A1k,
    Rhinfk,
}

#[derive(Clone, Copy, ValueEnum)]
enum Form {
    Rh,
    Ap,
}

#[derive(Args)]
struct RangeArgs {
    /// Weight whose constant drives the range, or target of a factorization.
    #[arg(long)]
    weight: Option<String>,
    /// Constant the range is computed from.
    #[arg(long, value_enum)]
    from: Option<FromClass>,
    /// Use this constant value instead of estimating it.
    #[arg(long)]
    constant: Option<f64>,
    /// Declared factorization form: rh (w = u·v^{1/r}) or ap (w = u·v^{1-p}).
    #[arg(long, value_enum, requires_all = ["u", "v", "weight"])]
    form: Option<Form>,
    #[arg(long)]
    u: Option<String>,
    #[arg(long)]
    v: Option<String>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, default_value_t = 3)]
    k: u32,
    #[command(flatten)]
    search: SearchArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScanClass {
    Ap,
    #[value(alias = "rh")]
    Rhr,
    Tau,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long)]
    weight: String,
    #[arg(long, value_enum)]
    class: ScanClass,
    /// Index grid lo:hi:n.
    #[arg(long, allow_hyphen_values = true)]
    grid: String,
    /// Fixed p for a tau scan.
    #[arg(long)]
    p: Option<f64>,
    #[command(flatten)]
    search: SearchArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Level {
    Super,
    Sub,
    Moment,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    weight: String,
    /// Interval a:b.
    #[arg(long, allow_hyphen_values = true)]
    interval: String,
    #[arg(long, value_enum, default_value = "super")]
    level: Level,
    /// Number of λ values.
    #[arg(long, default_value_t = 256)]
    lambdas: usize,
    /// Moment check: exponent r > 2.
    #[arg(long)]
    r: Option<f64>,
    /// Moment check: truncation level.
    #[arg(long)]
    beta: Option<f64>,
    /// Moment check: sub-level constant.
    #[arg(long)]
    c: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CoverArgs {
    /// Grid set in the GSET run-length format.
    #[arg(long, conflicts_with = "random")]
    gridset: Option<PathBuf>,
    /// Seed of a random grid set.
    #[arg(long)]
    random: Option<u64>,
    /// Dimension of a random grid set.
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Dyadic depth of a random grid set.
    #[arg(long, default_value_t = 8)]
    depth: u32,
    #[arg(long, default_value_t = 3)]
    k: u32,
    /// Save the grid set used.
    #[arg(long)]
    save: Option<PathBuf>,
    /// Include every cube in the report.
    #[arg(long)]
    entries: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct KinnunenArgs {
    #[arg(long)]
    c: f64,
    #[arg(long)]
    r: f64,
    #[command(flatten)]
    output: OutputArgs,
}

/// A command failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse { .. } => 2,
            Error::AtResolution { .. } => 4,
            Error::Rejected(_) => 5,
            _ => 3,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure {
        code: 3,
        message: msg.into(),
    }
}

type Run = Result<(Value, Option<String>, u8), Failure>;

fn weight(spec: &str) -> Result<Weight, Failure> {
    Ok(parse_weight(spec)?)
}

fn status_code(s: Status) -> u8 {
    if s == Status::AtResolution {
        4
    } else {
        0
    }
}

fn need(v: Option<f64>, name: &str) -> Result<f64, Failure> {
    v.ok_or_else(|| invalid(format!("--{name} is required here")))
}

fn parse_interval(s: &str) -> Result<Interval, Failure> {
    let (a, b) = s.split_once(':').ok_or_else(|| invalid(format!("interval `{s}` is not a:b")))?;
    let a: f64 = a.trim().parse().map_err(|_| invalid(format!("bad interval start `{a}`")))?;
    let b: f64 = b.trim().parse().map_err(|_| invalid(format!("bad interval end `{b}`")))?;
    Ok(Interval::new(a, b)?)
}

fn constant(a: &ConstantArgs) -> Run {
    let mut w = weight(&a.weight)?;
    if let Some(t) = a.tau {
        w = w.powered(t)?;
    }
    let mut fam = a.search.family(&w)?;
    if a.punctured {
        fam = SearchFamily::punctured_for(&w).with_refinement(a.search.depth).with_cap(a.search.cap);
    }
    let (name, est): (&str, ConstantEstimate) = match a.class {
        Class::A1 => ("a1", a1_constant(&w, &fam)?),
        Class::Rhinf => ("rhinf", rhinf_constant(&w, &fam)?),
        Class::Ap => ("ap", ap_constant(&w, need(a.p, "p")?, &fam)?),
        Class::Rhr => ("rhr", rhr_constant(&w, need(a.r, "r")?, &fam)?),
        Class::A1k => ("a1k", a1k_constant(&w, a.k, &fam)?),
        Class::Rhinfk => ("rhinfk", rhinfk_constant(&w, a.k, &fam)?),
    };
    let code = status_code(est.status);
    let input = json!({
        "weight": w.to_string(), "class": name, "p": a.p, "r": a.r, "k": a.k,
        "punctured": a.punctured, "refinement_depth": a.search.depth, "cap": a.search.cap,
    });
    Ok((json!({ "input": input, "result": est }), None, code))
}

fn range(a: &RangeArgs) -> Run {
    if let Some(form) = a.form {
        let target = weight(a.weight.as_deref().unwrap_or_default())?;
        let u = weight(a.u.as_deref().unwrap_or_default())?;
        let v = weight(a.v.as_deref().unwrap_or_default())?;
        let opts = CertifyOptions {
            refinement_depth: a.search.depth,
            cap: a.search.cap,
        };
        let f = match form {
            Form::Rh => Factorization::Rh(certify_rh_factorization_with(&target, &u, &v, need(a.r, "r")?, opts)?),
            Form::Ap => Factorization::Ap(certify_ap_factorization_with(&target, &u, &v, need(a.p, "p")?, opts)?),
        };
        let ranges = predict_ranges(&f)?;
        return Ok((json!({ "input": { "form": form_name(form) }, "result": { "factorization": f, "ranges": ranges } }), None, 0));
    }
    let from = a.from.ok_or_else(|| invalid("give --from with --weight or --constant, or --form with --u/--v"))?;
    let (c, estimate, code) = match (a.constant, &a.weight) {
        (Some(c), _) => (c, None, 0),
        (None, Some(spec)) => {
            let w = weight(spec)?;
            let fam = a.search.family(&w)?;
            let est = match from {
                FromClass::A1 => a1_constant(&w, &fam)?,
                FromClass::Rhinf => rhinf_constant(&w, &fam)?,
                FromClass::A1k => a1k_constant(&w, a.k, &fam)?,
                FromClass::Rhinfk => rhinfk_constant(&w, a.k, &fam)?,
            };
            if est.status != Status::Converged {
                let code = status_code(est.status);
                let msg = format!("constant is {:?}: no range follows", est.status);
                return Ok((json!({ "input": { "weight": w.to_string() }, "result": { "estimate": est, "ranges": [], "note": msg } }), None, code));
            }
            (est.value, Some(est), 0)
        }
        (None, None) => return Err(invalid("give --weight or --constant")),
    };
    let (class, r) = match from {
        FromClass::A1 => ("rh", rh_range_from_a1(c)?),
        FromClass::Rhinf => ("ap", ap_range_from_rhinf(c)?),
        FromClass::A1k => ("rh", nd_rh_range_from_a1k(c)?),
        FromClass::Rhinfk => ("ap", nd_ap_range_from_rhinfk(c)?),
    };
    let input = json!({ "weight": a.weight.as_deref().map(|s| parse_weight(s).map(|w| w.to_string()).unwrap_or_default()), "constant": c });
    Ok((
        json!({ "input": input, "result": { "estimate": estimate, "ranges": [ { "class": class, "range": r } ] } }),
        None,
        code,
    ))
}

fn form_name(f: Form) -> &'static str {
    match f {
        Form::Rh => "rh",
        Form::Ap => "ap",
    }
}

fn scan(a: &ScanArgs) -> Run {
    let w = weight(&a.weight)?;
    let indices = parse_grid(&a.grid)?;
    let fam = a.search.family(&w)?;
    let kind = match a.class {
        ScanClass::Ap => ScanKind::Ap,
        ScanClass::Rhr => ScanKind::Rhr,
        ScanClass::Tau => ScanKind::Tau { p: need(a.p, "p")? },
    };
    let predicted = predicted_range(&w, kind, &fam)?;
    let table = scan_indices(&w, kind, &indices, &fam, predicted)?;
    let code = table.rows.iter().map(|r| status_code(r.status)).max().unwrap_or(0);
    let csv = table.to_csv();
    let input = json!({ "weight": w.to_string(), "grid": a.grid, "refinement_depth": a.search.depth, "cap": a.search.cap });
    Ok((json!({ "input": input, "result": table }), Some(csv), code))
}

fn verify(a: &VerifyArgs) -> Run {
    let w = weight(&a.weight)?;
    let i = parse_interval(&a.interval)?;
    let input = json!({ "weight": w.to_string(), "interval": i, "lambdas": a.lambdas });
    match a.level {
        Level::Super | Level::Sub => {
            let scan = match a.level {
                Level::Super => check_super_level(&w, &i, a.lambdas)?,
                _ => check_sub_level(&w, &i, a.lambdas)?,
            };
            let csv = scan.to_csv();
            Ok((json!({ "input": input, "result": scan }), Some(csv), 0))
        }
        Level::Moment => {
            let rep = verify_moment_identity(&w, &i, need(a.r, "r")?, need(a.beta, "beta")?, a.c)?;
            Ok((json!({ "input": input, "result": rep }), None, 0))
        }
    }
}

fn cover(a: &CoverArgs) -> Run {
    let g = match (&a.gridset, a.random) {
        (Some(path), _) => {
            let bytes = fs::read(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
            GridSet::from_bytes(&bytes)?
        }
        (None, Some(seed)) => {
            if a.dim == 0 {
                return Err(invalid("--dim must be at least 1"));
            }
            GridSet::random(DyadicGrid::new(Cube::unit(a.dim), a.depth)?, seed)
        }
        (None, None) => return Err(invalid("give --gridset FILE or --random SEED")),
    };
    if let Some(path) = &a.save {
        fs::write(path, g.to_bytes()).map_err(|e| invalid(format!("cannot write {}: {e}", path.display())))?;
    }
    let cert = dyadic_cover(&g, a.k)?;
    let mut summary = json!({
        "k": cert.k, "branch": cert.branch, "dimension": g.grid().dim(), "depth": g.grid().depth(),
        "set_cells": cert.set_cells, "set_measure": g.measure(), "cover_cells": cert.cover_cells,
        "cubes": cert.entries.len(), "non_overlapping": cert.non_overlapping, "covers_set": cert.covers_set,
        "inside": cert.inside, "escapes": cert.escapes, "valid": cert.is_valid(), "note": cert.note,
    });
    if a.entries {
        summary["entries"] = serde_json::to_value(&cert.entries).expect("serializable");
    }
    let code = if cert.is_valid() { 0 } else { 5 };
    Ok((json!({ "input": { "source": a.gridset.as_ref().map(|p| p.display().to_string()), "random": a.random }, "result": summary }), None, code))
}

fn kinnunen(a: &KinnunenArgs) -> Run {
    let p = kinnunen_upper_index(a.c, a.r)?;
    let residual = kinnunen_residual(a.c, a.r, p);
    Ok((json!({ "input": { "c": a.c, "r": a.r }, "result": { "p": p, "residual": residual } }), None, 0))
}

fn emit(command: &str, output: &OutputArgs, run: Run) -> ExitCode {
    let (body, csv, code) = match run {
        Ok(x) => x,
        Err(f) => {
            eprintln!("error: {}", f.message);
            return ExitCode::from(f.code);
        }
    };
    let text = if output.csv {
        match csv {
            Some(t) => t,
            None => {
                eprintln!("error: --csv is only available for scan and verify-ineq tables");
                return ExitCode::from(3);
            }
        }
    } else {
        let mut doc = json!({ "command": command, "version": env!("CARGO_PKG_VERSION") });
        if !output.no_timestamp {
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            doc["timestamp"] = json!(secs);
        }
        doc["input"] = body["input"].clone();
        doc["result"] = body["result"].clone();
        serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
    };
    match &output.out {
        Some(path) => {
            if let Err(e) = fs::write(path, text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(3);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Constant(a) => emit("constant", &a.output, constant(a)),
        Command::Range(a) => emit("range", &a.output, range(a)),
        Command::Scan(a) => emit("scan", &a.output, scan(a)),
        Command::VerifyIneq(a) => emit("verify-ineq", &a.output, verify(a)),
        Command::Cover(a) => emit("cover", &a.output, cover(a)),
        Command::Kinnunen(a) => emit("kinnunen", &a.output, kinnunen(a)),
    }
}
