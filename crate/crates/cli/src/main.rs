//! `sysrisk`: command-line front end for sysrisk-core.
//!
//! Exit codes: 0 success, 1 validation or usage error, 2 a mathematically
//! meaningful negative result (infeasible clearing, unbounded scalarization,
//! empty risk measure, failed duality check).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use sysrisk_core::clearing::{clear_fixed_point, clear_lp, ClearingOutcome, ClearingResult};
use sysrisk_core::io::{ModelFile, NetworkFile};
use sysrisk_core::model::LiabilityNetwork;
use sysrisk_core::sampling::sample_duals;
use sysrisk_core::systemic::{
    optimize_dual, r_sen_outer_approx, region_directions, rho_ins, rho_sen_report, weak_duality_check,
    DirectionStatus, SystemicModel,
};
use sysrisk_core::tolerances as tol;
use sysrisk_core::{Error, ExtendedReal};

#[derive(Parser)]
#[command(name = "sysrisk", version, about = "Systemic risk measures on finite scenario spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clear an Eisenberg-Noe network by fixed point and by LP.
    Clear(ClearArgs),
    /// Insensitive systemic risk measure rho(Lambda(X)).
    RhoIns(ModelArgs),
    /// Sensitive scalarization inf { w'z : z in R^sen(X) }.
    RhoSen(RhoSenArgs),
    /// Weak duality (and optionally strong duality) on sampled duals.
    DualCheck(DualCheckArgs),
    /// Supporting halfspaces of R^sen over a grid of directions.
    Region(RegionArgs),
}

#[derive(Args)]
struct Common {
    /// Write the JSON report here instead of stdout (region: CSV path).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Clearing agreement tolerance; may only be tightened.
    #[arg(long)]
    tol_clearing: Option<f64>,
    /// Weak-duality slack tolerance; may only be tightened.
    #[arg(long)]
    tol_weak_duality: Option<f64>,
    /// Strong-duality gap tolerance; may only be tightened.
    #[arg(long)]
    tol_duality_gap: Option<f64>,
}

#[derive(Args)]
struct ClearArgs {
    #[arg(long)]
    network: PathBuf,
    /// Inline wealth of the institutions, e.g. `1,0`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    wealth: Option<Vec<f64>>,
    /// Model file whose scenarios supply the wealth vectors.
    #[arg(long)]
    model: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long)]
    model: PathBuf,
    /// Liability matrix for network aggregations without an inline one.
    #[arg(long)]
    network: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct RhoSenArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    w: Vec<f64>,
}

#[derive(Args)]
struct DualCheckArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Also maximize the dual bound to estimate the duality gap.
    #[arg(long)]
    optimize: bool,
}

#[derive(Args)]
struct RegionArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 32)]
    directions: usize,
}

#[derive(Debug, Clone, Copy, Serialize)]
struct Tolerances {
    clearing: f64,
    weak_duality: f64,
    duality_gap: f64,
}

impl Tolerances {
    fn from(c: &Common) -> anyhow::Result<Self> {
        let pick = |name: &str, v: Option<f64>, default: f64| -> anyhow::Result<f64> {
            match v {
                None => Ok(default),
                Some(t) if t.is_finite() && t > 0.0 && t <= default => Ok(t),
                Some(t) => bail!("--tol-{name} {t} must lie in (0, {default:e}]; tolerances may only be tightened"),
            }
        };
        Ok(Self {
            clearing: pick("clearing", c.tol_clearing, tol::CLEARING_AGREEMENT)?,
            weak_duality: pick("weak-duality", c.tol_weak_duality, tol::WEAK_DUALITY)?,
            duality_gap: pick("duality-gap", c.tol_duality_gap, tol::DUALITY_GAP)?,
        })
    }
}

/// Errors reaching `main` exit with 1; negative results carry a report.
enum Outcome {
    Success(Value),
    Negative(Value),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    let (common, result) = match &cli.command {
        Command::Clear(a) => (&a.common, cmd_clear(a)),
        Command::RhoIns(a) => (&a.common, cmd_rho_ins(a)),
        Command::RhoSen(a) => (&a.model.common, cmd_rho_sen(a)),
        Command::DualCheck(a) => (&a.model.common, cmd_dual_check(a)),
        Command::Region(a) => (&a.model.common, cmd_region(a)),
    };
    let (value, code) = match result {
        Ok(Outcome::Success(v)) => (v, 0),
        Ok(Outcome::Negative(v)) => (v, 2),
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let mut text = serde_json::to_string_pretty(&value).expect("report serializes");
    text.push('\n');
    let json_target = match &cli.command {
        Command::Region(_) => None,
        _ => common.out.as_deref(),
    };
    match json_target {
        Some(path) => {
            if let Err(e) = fs::write(path, text) {
                eprintln!("error: writing {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(code)
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("SYSRISK_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| anyhow!("SYSRISK_THREADS must be a positive integer, got {v:?}"))?;
        if n == 0 {
            bail!("SYSRISK_THREADS must be a positive integer, got 0");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_network(path: &Path) -> anyhow::Result<LiabilityNetwork> {
    let file = NetworkFile::parse(&read(path)?).with_context(|| path.display().to_string())?;
    Ok(file.network().with_context(|| path.display().to_string())?)
}

fn load_model(a: &ModelArgs) -> anyhow::Result<SystemicModel> {
    let file = ModelFile::parse(&read(&a.model)?).with_context(|| a.model.display().to_string())?;
    let net = a.network.as_deref().map(load_network).transpose()?;
    let model = file.build(net.as_ref().map(|n| n.liabilities())).with_context(|| a.model.display().to_string())?;
    Ok(model)
}

fn model_info(m: &SystemicModel) -> Value {
    json!({
        "aggregation": m.aggregation().name(),
        "risk_measure": m.base().name(),
        "dimension": m.dim(),
        "scenarios": m.space().len(),
        "assumption_holds": m.assumption_holds(),
    })
}

fn ext(v: ExtendedReal) -> Value {
    serde_json::to_value(v).expect("extended real serializes")
}

#[derive(Serialize)]
struct MethodReport<'a> {
    payments: &'a [f64],
    society_equity: f64,
    defaulted: Vec<usize>,
    method: sysrisk_core::clearing::ClearingMethod,
    iterations: usize,
}

fn method_report<'a>(r: &'a ClearingResult, pbar: &[f64], tol: f64) -> MethodReport<'a> {
    let defaulted = r.payments.iter().zip(pbar).enumerate().filter(|(_, (p, b))| **p < **b - tol).map(|(i, _)| i + 1).collect();
    MethodReport { payments: &r.payments, society_equity: r.society_equity, defaulted, method: r.method, iterations: r.iterations }
}

fn cmd_clear(a: &ClearArgs) -> anyhow::Result<Outcome> {
    let tols = Tolerances::from(&a.common)?;
    let net = load_network(&a.network)?;
    let wealths: Vec<Vec<f64>> = match (&a.wealth, &a.model) {
        (Some(w), None) => vec![w.clone()],
        (None, Some(path)) => {
            let file = ModelFile::parse(&read(path)?).with_context(|| path.display().to_string())?;
            file.wealth().with_context(|| path.display().to_string())?.rows().to_vec()
        }
        _ => bail!("clear needs exactly one of --wealth and --model"),
    };
    let pbar = net.pbar();
    let mut scenarios = Vec::with_capacity(wealths.len());
    let mut any_infeasible = false;
    for x in &wealths {
        let fp = clear_fixed_point(&net, x)?;
        let lp = clear_lp(&net, x)?;
        let entry = match (&fp, &lp) {
            (ClearingOutcome::Cleared(f), ClearingOutcome::Cleared(l)) => {
                let dp = f.payments.iter().zip(&l.payments).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
                let de = (f.society_equity - l.society_equity).abs();
                if dp > tols.clearing || de > tols.clearing {
                    return Err(anyhow!(Error::Numeric(format!(
                        "fixed-point and LP clearing disagree at wealth {x:?}: payments {dp:e}, equity {de:e}"
                    ))));
                }
                json!({
                    "wealth": x,
                    "status": "cleared",
                    "payments": l.payments,
                    "society_equity": l.society_equity,
                    "defaulted": method_report(l, &pbar, tols.clearing).defaulted,
                    "methods": [method_report(f, &pbar, tols.clearing), method_report(l, &pbar, tols.clearing)],
                    "agreement": {"payments_max_abs_diff": dp, "society_equity_abs_diff": de},
                })
            }
            (f, l) if f.is_infeasible() && l.is_infeasible() => {
                any_infeasible = true;
                json!({"wealth": x, "status": "infeasible"})
            }
            _ => {
                return Err(anyhow!(Error::Numeric(format!(
                    "fixed-point and LP clearing disagree on feasibility at wealth {x:?}"
                ))))
            }
        };
        scenarios.push(entry);
    }
    let report = json!({
        "command": "clear",
        "status": if any_infeasible { "infeasible" } else { "cleared" },
        "institutions": net.dim(),
        "scenarios": scenarios,
        "diagnostics": {"tolerances": tols, "total_liabilities": pbar},
    });
    Ok(if any_infeasible { Outcome::Negative(report) } else { Outcome::Success(report) })
}

fn cmd_rho_ins(a: &ModelArgs) -> anyhow::Result<Outcome> {
    let tols = Tolerances::from(&a.common)?;
    let m = load_model(a)?;
    let v = rho_ins(&m)?;
    let (status, negative) = match v {
        ExtendedReal::Finite(_) => ("finite", false),
        ExtendedReal::PosInf => ("empty", true),
        ExtendedReal::NegInf => ("unbounded", true),
    };
    let report = json!({
        "command": "rho-ins",
        "status": status,
        "value": ext(v),
        "model": model_info(&m),
        "diagnostics": {"tolerances": tols},
    });
    Ok(if negative { Outcome::Negative(report) } else { Outcome::Success(report) })
}

fn cmd_rho_sen(a: &RhoSenArgs) -> anyhow::Result<Outcome> {
    let tols = Tolerances::from(&a.model.common)?;
    let m = load_model(&a.model)?;
    let rep = rho_sen_report(&m, &a.w)?;
    let negative = !rep.value.is_finite();
    let status = if rep.unbounded_direction.is_some() {
        "unbounded direction"
    } else if negative {
        "unbounded"
    } else {
        "finite"
    };
    let report = json!({
        "command": "rho-sen",
        "status": status,
        "w": a.w,
        "value": ext(rep.value),
        "z": rep.point,
        "unbounded_direction": rep.unbounded_direction,
        "model": model_info(&m),
        "diagnostics": {
            "tolerances": tols,
            "solver": {
                "slater_point": rep.slater_point,
                "lambda": rep.lambda,
                "dual_bound": rep.dual_bound,
                "gap": rep.gap,
                "cutting_plane_value": rep.cutting_plane_value,
                "exact_lp_value": rep.exact_lp_value,
                "iterations": rep.iterations,
                "cuts": rep.cuts,
                "box_active": rep.box_active,
            },
            "boundary_suspect": rep.accepted_with_loose_gap || rep.box_active,
        },
    });
    Ok(if negative { Outcome::Negative(report) } else { Outcome::Success(report) })
}

fn cmd_dual_check(a: &DualCheckArgs) -> anyhow::Result<Outcome> {
    let tols = Tolerances::from(&a.model.common)?;
    if a.samples == 0 {
        bail!("--samples 0: nothing to check");
    }
    let m = load_model(&a.model)?;
    let seed = a.model.common.seed;
    let duals = sample_duals(m.space(), m.aggregation(), m.base(), a.samples, seed)?;
    let weak = weak_duality_check(&m, &duals)?;
    let slack_ok = match weak.min_slack {
        ExtendedReal::Finite(s) => s >= -tols.weak_duality,
        ExtendedReal::PosInf => true,
        ExtendedReal::NegInf => false,
    };
    let strong = if a.optimize {
        let opt = optimize_dual(&m, None, &duals, 4000)?;
        let gap = match (weak.rho_ins, opt.value) {
            (ExtendedReal::Finite(r), ExtendedReal::Finite(v)) => Some(r - v),
            _ => None,
        };
        Some(json!({
            "optimized_value": ext(opt.value),
            "start_value": ext(opt.start_value),
            "gap": gap,
            "gap_within_tolerance": gap.map(|g| g <= tols.duality_gap),
            "restarts": opt.restarts,
        }))
    } else {
        None
    };
    let report = json!({
        "command": "dual-check",
        "status": if slack_ok { "passed" } else { "violated" },
        "rho_ins": ext(weak.rho_ins),
        "max_dual_value": ext(weak.max_dual_value),
        "min_slack": ext(weak.min_slack),
        "samples": a.samples,
        "seed": seed,
        "violations": weak.violations,
        "strong_duality": strong,
        "model": model_info(&m),
        "diagnostics": {"tolerances": tols, "finite_bounds": weak.finite_bounds},
    });
    Ok(if slack_ok { Outcome::Success(report) } else { Outcome::Negative(report) })
}

fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else if v > 0.0 {
        "+inf".into()
    } else {
        "-inf".into()
    }
}

fn status_name(s: DirectionStatus) -> &'static str {
    match s {
        DirectionStatus::Finite => "finite",
        DirectionStatus::Unbounded => "unbounded",
        DirectionStatus::Failed => "failed",
    }
}

fn polyline_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "region".into());
    out.with_file_name(format!("{stem}.polyline.csv"))
}

fn cmd_region(a: &RegionArgs) -> anyhow::Result<Outcome> {
    let tols = Tolerances::from(&a.model.common)?;
    let m = load_model(&a.model)?;
    let d = m.dim();
    let directions = region_directions(d, a.directions, a.model.common.seed)?;
    let set = r_sen_outer_approx(&m, &directions)?;
    if set.all_failed() {
        bail!("scalarization failed in every direction");
    }
    let polyline = (d == 2).then(|| set.polyline());
    let mut files = Vec::new();
    if let Some(out) = &a.model.common.out {
        let mut csv = (1..=d).map(|i| format!("w{i}")).collect::<Vec<_>>().join(",");
        csv.push_str(",offset,status\n");
        for e in &set.entries {
            let row: Vec<String> = e.normal.iter().map(|v| fmt_f64(*v)).collect();
            csv.push_str(&format!("{},{},{}\n", row.join(","), fmt_f64(e.offset.to_f64()), status_name(e.status)));
        }
        fs::write(out, csv).with_context(|| format!("writing {}", out.display()))?;
        files.push(out.display().to_string());
        if let Some(points) = &polyline {
            let path = polyline_path(out);
            let mut csv = String::from("z1,z2\n");
            for p in points {
                csv.push_str(&format!("{},{}\n", fmt_f64(p[0]), fmt_f64(p[1])));
            }
            fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
            files.push(path.display().to_string());
        }
    }
    let count = |s: DirectionStatus| set.entries.iter().filter(|e| e.status == s).count();
    let report = json!({
        "command": "region",
        "status": "ok",
        "directions": set.entries.len(),
        "finite": count(DirectionStatus::Finite),
        "unbounded": count(DirectionStatus::Unbounded),
        "failed": count(DirectionStatus::Failed),
        "halfspaces": set.entries,
        "polyline": polyline,
        "files": files,
        "model": model_info(&m),
        "diagnostics": {"tolerances": tols, "seed": a.model.common.seed},
    });
    Ok(Outcome::Success(report))
}
