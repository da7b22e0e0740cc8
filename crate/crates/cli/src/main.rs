//! `rtep`: robust AC expansion planning from the command line.
//!
//! Every subcommand writes its artifacts under `--out` and a short summary to
//! stdout. Set `RTEP_LOG=info` (or `debug`) for solver progress.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rtep::benders::{benders_solve, cost_breakdown, duality_gap_report, BendersOptions, BendersState, CostBreakdown, InitTopology, TepPlan};
use rtep::formulation::{assemble_compact, build_uncertain_tep, CompactRobustModel};
use rtep::netcase::{build_uncertainty_box, bundled_case, parse_case, NetworkCase, UncertaintyBox, BUNDLED};
use rtep::verify::{mcs_verify, AcopfStatus, McsMode};

#[derive(Parser)]
#[command(name = "rtep", version, about = "Robust AC transmission expansion planning")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Plan for the nominal injections only.
    SolveDet(SolveArgs),
    /// Plan that covers the whole uncertainty box.
    SolveRobust(RobustArgs),
    /// Monte-Carlo check of a plan with the nonconvex ACOPF.
    Verify(VerifyArgs),
    /// Primal and dual slave objectives on the base and fully built topologies.
    Dualgap(CaseArgs),
    /// Robust solves over a grid of uncertainty levels.
    Sweep(SweepArgs),
    /// Writes a bundled case as TOML.
    ExportCase(CaseArgs),
}

#[derive(Args, Clone)]
struct CaseArgs {
    /// TOML file or bundled name (three-bus, garver6).
    #[arg(long)]
    case: String,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct SolveArgs {
    #[command(flatten)]
    case: CaseArgs,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    /// Relative Benders gap; the case value when omitted.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum, default_value_t = InitMode::All)]
    init_topology: InitMode,
}

#[derive(Args, Clone)]
struct RobustArgs {
    #[command(flatten)]
    solve: SolveArgs,
    /// Load uncertainty, percent of nominal.
    #[arg(long, default_value_t = 0.0)]
    ud: f64,
    /// RES uncertainty, percent of nominal.
    #[arg(long, default_value_t = 0.0)]
    ur: f64,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    case: CaseArgs,
    /// Plan file from solve-robust; `<out>/plan.json` by default.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Box to sample; the plan's own box when omitted.
    #[arg(long)]
    ud: Option<f64>,
    #[arg(long)]
    ur: Option<f64>,
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Count curtailment beyond the plan's worst case as a failure.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    solve: SolveArgs,
    /// Comma-separated load uncertainty levels, percent.
    #[arg(long, value_delimiter = ',', default_value = "0,5,10,15,20,25,30")]
    ud: Vec<f64>,
    /// Comma-separated RES uncertainty levels, percent.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    ur: Vec<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitMode {
    All,
    Deterministic,
}

/// Plan file schema.
#[derive(Serialize, Deserialize)]
struct PlanFile {
    case: String,
    u_d_pct: f64,
    u_r_pct: f64,
    /// Candidate lines in model order, 0 or 1.
    y_m: Vec<f64>,
    /// `n_{i-j}=k` summary.
    plan: String,
    costs_usd_per_yr: Costs,
    worst_case_xi_pu: Vec<f64>,
    worst_case_cp_d_pu: f64,
    worst_case_cp_r_pu: f64,
    benders_iterations: usize,
    benders_converged: bool,
    lb_usd_per_yr: f64,
    ub_usd_per_yr: f64,
    relative_gap: f64,
}

#[derive(Serialize, Deserialize)]
struct Costs {
    investment: f64,
    generation: f64,
    load_curtailment: f64,
    res_curtailment: f64,
    total: f64,
}

impl From<&CostBreakdown> for Costs {
    fn from(c: &CostBreakdown) -> Self {
        Self { investment: c.investment, generation: c.generation, load_curtailment: c.load_curtailment, res_curtailment: c.res_curtailment, total: c.total }
    }
}

fn load_case(spec: &str) -> Result<NetworkCase> {
    if let Some(c) = bundled_case(spec) {
        return Ok(c);
    }
    if Path::new(spec).exists() {
        return Ok(parse_case(spec)?);
    }
    bail!("case '{spec}' is neither a file nor a bundled case ({})", BUNDLED.join(", "))
}

fn check_pct(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        bail!("--{name} must be a non-negative percentage, got {v}");
    }
    Ok(())
}

fn write(out: &Path, name: &str, text: &str) -> Result<PathBuf> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let p = out.join(name);
    fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
    Ok(p)
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn model(case: &NetworkCase, bx: &UncertaintyBox) -> Result<CompactRobustModel> {
    Ok(assemble_compact(&build_uncertain_tep(case, bx)?))
}

struct RobustRun {
    file: PlanFile,
    state: BendersState,
}

fn run_robust(case: &NetworkCase, a: &SolveArgs, ud: f64, ur: f64) -> Result<RobustRun> {
    check_pct("ud", ud)?;
    check_pct("ur", ur)?;
    if a.max_iters == 0 {
        bail!("--max-iters must be positive");
    }
    let bx = build_uncertainty_box(case, ud, ur)?;
    let opts = BendersOptions {
        max_iter: a.max_iters,
        tol: a.tol,
        init: match a.init_topology {
            InitMode::All => InitTopology::All,
            InitMode::Deterministic => InitTopology::Deterministic,
        },
        ..Default::default()
    };
    let (plan, state, worst) = benders_solve(case, &bx, &opts)?;
    let m = model(case, &bx)?;
    let costs = cost_breakdown(&m, &plan, &worst.xi)?;
    let ann = case.system.annualization;
    let file = PlanFile {
        case: case.system.name.clone(),
        u_d_pct: ud,
        u_r_pct: ur,
        plan: plan.describe(&m),
        y_m: plan.y_m.clone(),
        costs_usd_per_yr: (&costs).into(),
        worst_case_xi_pu: worst.xi.clone(),
        worst_case_cp_d_pu: costs.cp_d,
        worst_case_cp_r_pu: costs.cp_r,
        benders_iterations: state.iteration,
        benders_converged: state.converged,
        lb_usd_per_yr: state.lb * ann,
        ub_usd_per_yr: state.ub * ann,
        relative_gap: state.gap(),
    };
    Ok(RobustRun { file, state })
}

fn trace_csv(state: &BendersState, ann: f64) -> String {
    let mut s = String::from("iteration,lb_usd_per_yr,ub_usd_per_yr,relative_gap,slave_usd_per_yr\n");
    for p in &state.snapshots {
        let gap = (p.ub - p.lb) / p.ub.abs().max(1e-12);
        s += &format!("{},{:.6},{:.6},{:.3e},{:.6}\n", p.p, p.lb * ann, p.ub * ann, gap, p.sd * ann);
    }
    s
}

fn cmd_solve(case: &NetworkCase, a: &SolveArgs, ud: f64, ur: f64) -> Result<ExitCode> {
    let run = run_robust(case, a, ud, ur)?;
    let out = &a.case.out;
    write(out, "plan.json", &json(&run.file))?;
    write(out, "trace.csv", &trace_csv(&run.state, case.system.annualization))?;
    write(out, "worst_case.json", &json(&serde_json::json!({ "xi_pu": run.file.worst_case_xi_pu })))?;
    let f = &run.file;
    let c = &f.costs_usd_per_yr;
    println!("case {} u_d {}% u_r {}%", f.case, f.u_d_pct, f.u_r_pct);
    println!("plan: {}", f.plan);
    println!("investment {:.2} $/yr, generation {:.2} $/yr, curtailment {:.2} $/yr, total {:.2} $/yr", c.investment, c.generation, c.load_curtailment + c.res_curtailment, c.total);
    println!("worst-case curtailment: load {:.4} pu, RES {:.4} pu", f.worst_case_cp_d_pu, f.worst_case_cp_r_pu);
    println!("benders: {} iterations, gap {:.2e}", f.benders_iterations, f.relative_gap);
    if !f.benders_converged {
        eprintln!("error: Benders stopped at the iteration cap without reaching the gap tolerance");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(case: &NetworkCase, a: &VerifyArgs) -> Result<ExitCode> {
    let plan_path = a.plan.clone().unwrap_or_else(|| a.case.out.join("plan.json"));
    let text = fs::read_to_string(&plan_path).with_context(|| format!("reading plan file {}", plan_path.display()))?;
    let plan: PlanFile = serde_json::from_str(&text).with_context(|| format!("parsing plan file {}", plan_path.display()))?;
    let (ud, ur) = (a.ud.unwrap_or(plan.u_d_pct), a.ur.unwrap_or(plan.u_r_pct));
    check_pct("ud", ud)?;
    check_pct("ur", ur)?;
    let bx = build_uncertainty_box(case, ud, ur)?;
    let mode = if a.strict { McsMode::Strict { curtailment_allowance: plan.worst_case_cp_d_pu + plan.worst_case_cp_r_pu } } else { McsMode::Recourse };
    let r = mcs_verify(case, &plan.y_m, &bx, a.samples, a.seed, mode)?;
    let n_xi = bx.len();
    let mut csv = String::from("sample,status,objective_usd_per_h,max_violation_pu,curtailment_pu,feasible");
    for k in 0..n_xi {
        csv += &format!(",xi{k}_pu");
    }
    csv.push('\n');
    for s in &r.records {
        let status = if s.status == AcopfStatus::Converged { "converged" } else { "not-converged" };
        csv += &format!("{},{},{:.9},{:.3e},{:.9},{}", s.id, status, s.objective, s.max_violation, s.curtailment, s.feasible);
        for x in &s.xi {
            csv += &format!(",{x:.9}");
        }
        csv.push('\n');
    }
    write(&a.case.out, "mcs_samples.csv", &csv)?;
    let summary = serde_json::json!({
        "case": case.system.name,
        "u_d_pct": ud,
        "u_r_pct": ur,
        "samples": r.samples,
        "seed": r.seed,
        "mode": r.mode,
        "converged": r.converged,
        "feasible": r.feasible,
        "robustness_fraction": r.robustness,
        "worst_violation_pu": r.worst_violation,
        "failures": r.failures,
    });
    write(&a.case.out, "mcs_summary.json", &json(&summary))?;
    match r.robustness {
        None => {
            println!("no samples drawn; robustness undefined");
            Ok(ExitCode::SUCCESS)
        }
        Some(f) => {
            println!("robustness {:.4} ({} of {} samples feasible, {} converged), worst violation {:.2e} pu", f, r.feasible, r.samples, r.converged, r.worst_violation);
            Ok(if f < 1.0 { ExitCode::from(1) } else { ExitCode::SUCCESS })
        }
    }
}

fn cmd_dualgap(case: &NetworkCase, a: &CaseArgs) -> Result<ExitCode> {
    let bx = UncertaintyBox::zero(case.n_buses());
    let m = model(case, &bx)?;
    let xi = vec![0.0; m.n_xi()];
    let mut csv = String::from("system,topology,primal_usd_per_yr,dual_usd_per_yr,relative_gap\n");
    println!("{:<10} {:<10} {:>18} {:>18} {:>10}", "system", "topology", "primal $/yr", "dual $/yr", "gap");
    for (name, plan) in [("base", TepPlan::empty(&m)), ("augmented", TepPlan::all(&m))] {
        let g = duality_gap_report(&m, &plan.y_m, &xi, name)?;
        println!("{:<10} {:<10} {:>18.4} {:>18.4} {:>10.2e}", g.system, g.topology, g.primal, g.dual, g.relative_gap);
        csv += &format!("{},{},{:.6},{:.6},{:.3e}\n", g.system, g.topology, g.primal, g.dual, g.relative_gap);
    }
    write(&a.out, "dualgap.csv", &csv)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(case: &NetworkCase, a: &SweepArgs) -> Result<ExitCode> {
    let grid: Vec<(f64, f64)> = a.ur.iter().flat_map(|&ur| a.ud.iter().map(move |&ud| (ud, ur))).collect();
    let runs: Vec<Result<RobustRun>> = grid.par_iter().map(|&(ud, ur)| run_robust(case, &a.solve, ud, ur)).collect();
    let mut rows = Vec::new();
    for (r, (ud, ur)) in runs.into_iter().zip(&grid) {
        rows.push(r.with_context(|| format!("u_d {ud}%, u_r {ur}%"))?);
    }
    let mut csv = String::from("u_d_pct,u_r_pct,investment_usd_per_yr,generation_usd_per_yr,curtailment_usd_per_yr,total_usd_per_yr,increase_pct,cp_d_pu,cp_r_pu,converged,plan\n");
    let mut ok = true;
    // Increase relative to the first grid point.
    let base = rows.first().map_or(1.0, |r| r.file.costs_usd_per_yr.total);
    for r in &rows {
        let f = &r.file;
        let c = &f.costs_usd_per_yr;
        let inc = 100.0 * (c.total - base) / base;
        ok &= f.benders_converged;
        csv += &format!(
            "{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.6},{:.6},{},\"{}\"\n",
            f.u_d_pct,
            f.u_r_pct,
            c.investment,
            c.generation,
            c.load_curtailment + c.res_curtailment,
            c.total,
            inc,
            f.worst_case_cp_d_pu,
            f.worst_case_cp_r_pu,
            f.benders_converged,
            f.plan
        );
        println!("u_d {:>5}% u_r {:>5}%: total {:>14.2} $/yr (+{:.2}%), CP_d {:.4} pu, plan {}", f.u_d_pct, f.u_r_pct, c.total, inc, f.worst_case_cp_d_pu, f.plan);
    }
    write(&a.solve.case.out, "sweep.csv", &csv)?;
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_export(case: &NetworkCase, a: &CaseArgs) -> Result<ExitCode> {
    let name = format!("{}.toml", case.system.name.replace('-', "_"));
    let p = write(&a.out, &name, &case.to_toml())?;
    println!("wrote {}", p.display());
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match &cli.cmd {
        Cmd::SolveDet(a) => cmd_solve(&load_case(&a.case.case)?, a, 0.0, 0.0),
        Cmd::SolveRobust(a) => cmd_solve(&load_case(&a.solve.case.case)?, &a.solve, a.ud, a.ur),
        Cmd::Verify(a) => cmd_verify(&load_case(&a.case.case)?, a),
        Cmd::Dualgap(a) => cmd_dualgap(&load_case(&a.case)?, a),
        Cmd::Sweep(a) => cmd_sweep(&load_case(&a.solve.case.case)?, a),
        Cmd::ExportCase(a) => cmd_export(&load_case(&a.case)?, a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("RTEP_LOG")).format_timestamp(None).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
