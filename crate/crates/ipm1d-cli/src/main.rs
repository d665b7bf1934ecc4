//! Command-line driver: `simulate`, `operator-check`, `kernel-check`, `sweep`.
//!
//! Exit codes: 0 on success (including runs that stop on a blow-up proxy),
//! 1 for validation and parameter errors, 2 for numerical failures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ipm1d::diagnostics::{fit_riccati, record_for_state, DiagnosticsRecord, RiccatiFit};
use ipm1d::grid::PeriodicGrid;
use ipm1d::kernels::kernel_report;
use ipm1d::operators::{operator_property_suite, OperatorSuiteOptions};
use ipm1d::solver::{run, RunOutcome, StopReason};
use ipm1d::Error;

use ipm1d_cli::config::{resolve_run_config, ConfigFile, RunConfig, OUT_DIR_ENV};
use ipm1d_cli::output::{
    diagnostics_csv, run_summary, snapshot_text, sweep_summary_csv, write_text, SweepRow,
    SUMMARY_HEADER,
};
use ipm1d_cli::plot::{line_chart, Series};

#[derive(Parser)]
#[command(name = "ipm1d", version, about = "1D boundary-model simulator and checks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a simulation and write diagnostics, snapshots, and plots.
    Simulate(SimArgs),
    /// Verify velocity-operator identities against the quadrature oracle.
    OperatorCheck(OpArgs),
    /// Verify kernel difference sign, shape, and comparison inequalities.
    KernelCheck(KernelArgs),
    /// Run a grid of simulations over a, g, or n and summarize them.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SimArgs {
    /// TOML config file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    g: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    cfl: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    t_end: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    slope_stop: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    tail_stop: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    output_every: Option<f64>,
    /// Initial profile: one-minus-cos or one-minus-cos-squared.
    #[arg(long)]
    profile: Option<String>,
    /// Sobolev index for the diagnostics norm column.
    #[arg(long)]
    s: Option<u32>,
    /// Weight offset for the origin-weighted functional.
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; also settable via IPM1D_OUT_DIR.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl SimArgs {
    fn overlay(&self) -> ConfigFile {
        ConfigFile {
            n: self.n,
            a: self.a,
            g: self.g,
            cfl: self.cfl,
            t_end: self.t_end,
            slope_stop: self.slope_stop,
            tail_stop: self.tail_stop,
            output_every: self.output_every,
            profile: self.profile.clone(),
            coefficients: None,
            s: self.s,
            delta: self.delta,
            q: None,
            sigma: None,
            out_dir: None,
            seed: self.seed,
        }
    }
}

#[derive(Args)]
struct OpArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Layer thicknesses to test, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    a: Option<Vec<f64>>,
    /// Grid size for the spectral side.
    #[arg(long)]
    n: Option<usize>,
    /// Points per field checked against the quadrature oracle.
    #[arg(long, default_value_t = 16)]
    points: usize,
    /// Random band-limited fields beyond the trigonometric battery.
    #[arg(long, default_value_t = 3)]
    random_fields: usize,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct KernelArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Layer thicknesses to test, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    a: Option<Vec<f64>>,
    /// Exponent for the difference-kernel claims, in (1, 2).
    #[arg(long, allow_negative_numbers = true)]
    q: Option<f64>,
    /// Weight exponent for the coercivity constant, in (1, 2).
    #[arg(long, allow_negative_numbers = true)]
    sigma: Option<f64>,
    /// Sample count for the inequality grids.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Values of a to sweep, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    a: Option<Vec<f64>>,
    /// Values of g to sweep, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    g: Option<Vec<f64>>,
    /// Values of n to sweep, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long, allow_negative_numbers = true)]
    t_end: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    cfl: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    slope_stop: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    tail_stop: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    output_every: Option<f64>,
    #[arg(long)]
    profile: Option<String>,
    /// Root directory; each run writes to a subdirectory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) {
                0
            } else {
                1
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.cmd {
        Cmd::Simulate(args) => cmd_simulate(args),
        Cmd::OperatorCheck(args) => cmd_operator_check(args),
        Cmd::KernelCheck(args) => cmd_kernel_check(args),
        Cmd::Sweep(args) => cmd_sweep(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}

fn exit_for(e: &Error) -> u8 {
    match e {
        Error::Numeric(_) => 2,
        _ => 1,
    }
}

/// Completed-run artifacts shared by `simulate` and `sweep`.
struct RunArtifacts {
    outcome: RunOutcome,
    records: Vec<DiagnosticsRecord>,
    fit: Option<RiccatiFit>,
}

fn execute_run(rc: &RunConfig) -> ipm1d::Result<RunArtifacts> {
    let grid = PeriodicGrid::new(rc.solver.n)?;
    let rho0 = rc.initial.build(&grid)?;
    let outcome = run(&rc.solver, &rho0)?;
    let records: Vec<DiagnosticsRecord> = outcome
        .trajectory
        .iter()
        .map(|st| record_for_state(st, rc.s, rc.delta))
        .collect::<ipm1d::Result<_>>()?;
    let j_series: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.j_value.is_finite())
        .map(|r| (r.t, r.j_value))
        .collect();
    let fit = if j_series.len() >= 8 {
        fit_riccati(&j_series).ok()
    } else {
        None
    };
    Ok(RunArtifacts {
        outcome,
        records,
        fit,
    })
}

fn write_run_outputs(rc: &RunConfig, art: &RunArtifacts) -> ipm1d::Result<()> {
    let dir = &rc.out_dir;
    write_text(
        &dir.join("diagnostics.csv"),
        &diagnostics_csv(&art.records),
    )?;
    if let Some(first) = art.outcome.trajectory.first() {
        write_text(
            &dir.join("snapshot_initial.txt"),
            &snapshot_text(&first.field, first.t),
        )?;
    }
    if let Some(last) = art.outcome.trajectory.last() {
        write_text(
            &dir.join("snapshot_final.txt"),
            &snapshot_text(&last.field, last.t),
        )?;
    }
    write_text(
        &dir.join("summary.txt"),
        &run_summary(&art.outcome, &art.records, art.fit.as_ref()),
    )?;
    write_text(&dir.join("rho.svg"), &rho_chart(&art.outcome))?;
    write_text(&dir.join("diagnostics.svg"), &diagnostics_chart(&art.records))?;
    Ok(())
}

/// Profile snapshots at up to five evenly spaced output times.
fn rho_chart(outcome: &RunOutcome) -> String {
    let traj = &outcome.trajectory;
    let len = traj.len();
    let mut idxs: Vec<usize> = if len <= 5 {
        (0..len).collect()
    } else {
        (0..5).map(|i| i * (len - 1) / 4).collect()
    };
    idxs.dedup();
    let series: Vec<Series> = idxs
        .into_iter()
        .map(|i| {
            let st = &traj[i];
            let pts = st
                .field
                .grid()
                .points()
                .iter()
                .zip(st.field.values())
                .map(|(&x, &v)| (x, v))
                .collect();
            Series::new(format!("t = {:.3}", st.t), pts)
        })
        .collect();
    line_chart("density profile", "x", &series, false)
}

/// Growth diagnostics on a log axis: max slope, the blow-up criterion
/// integral, and the origin-weighted functional where defined.
fn diagnostics_chart(records: &[DiagnosticsRecord]) -> String {
    let slope = records.iter().map(|r| (r.t, r.slope_max)).collect();
    let bkm = records.iter().map(|r| (r.t, r.bkm)).collect();
    let j = records
        .iter()
        .filter(|r| r.j_value.is_finite())
        .map(|r| (r.t, r.j_value))
        .collect();
    let series = vec![
        Series::new("max slope", slope),
        Series::new("criterion integral", bkm),
        Series::new("origin functional", j),
    ];
    line_chart("growth diagnostics", "t", &series, true)
}

fn cmd_simulate(args: SimArgs) -> ipm1d::Result<u8> {
    let file = ConfigFile::load(args.config.as_deref())?;
    let merged = file.merged(args.overlay());
    let rc = resolve_run_config(merged, args.out_dir.clone())?;
    std::fs::create_dir_all(&rc.out_dir)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", rc.out_dir.display())))?;
    let art = match execute_run(&rc) {
        Ok(art) => art,
        Err(e) => {
            let doc = format!(
                "{SUMMARY_HEADER}\nreason error\nerror {}\n",
                e.to_string().replace('\n', " ")
            );
            let _ = write_text(&rc.out_dir.join("summary.txt"), &doc);
            return Err(e);
        }
    };
    write_run_outputs(&rc, &art)?;
    let t_stop = art.outcome.trajectory.last().map_or(f64::NAN, |s| s.t);
    println!(
        "wrote {}: initial {} reason={} t_stop={} outputs={}",
        rc.out_dir.display(),
        rc.initial.describe(),
        art.outcome.reason,
        t_stop,
        art.records.len()
    );
    if matches!(art.outcome.reason, StopReason::NonfiniteValue) {
        return Err(Error::Numeric("run produced non-finite values".into()));
    }
    Ok(0)
}

fn cmd_operator_check(args: OpArgs) -> ipm1d::Result<u8> {
    let file = ConfigFile::load(args.config.as_deref())?;
    let a_list = args
        .a
        .or_else(|| file.a.map(|a| vec![a]))
        .unwrap_or_else(|| vec![0.1, 1.0, 10.0]);
    let options = OperatorSuiteOptions {
        n: args.n.or(file.n).unwrap_or(256),
        seed: args.seed.or(file.seed).unwrap_or(0),
        oracle_points: args.points,
        random_fields: args.random_fields,
    };
    let mut all_passed = true;
    for &a in &a_list {
        let outcomes = operator_property_suite(a, &options)?;
        for c in &outcomes {
            let status = if c.passed() { "PASS" } else { "FAIL" };
            all_passed &= c.passed();
            println!(
                "a={a} {} {status} observed={} margin={} at {}",
                c.name, c.observed, c.margin, c.location
            );
        }
    }
    if all_passed {
        println!("operator-check: all properties hold");
        Ok(0)
    } else {
        eprintln!("operator-check: at least one property failed");
        Ok(1)
    }
}

fn cmd_kernel_check(args: KernelArgs) -> ipm1d::Result<u8> {
    let file = ConfigFile::load(args.config.as_deref())?;
    let a_list = args
        .a
        .or_else(|| file.a.map(|a| vec![a]))
        .unwrap_or_else(|| vec![1.0]);
    let q = args.q.or(file.q).unwrap_or(1.5);
    let sigma = args.sigma.or(file.sigma).unwrap_or(1.5);
    let mut all_passed = true;
    for &a in &a_list {
        let report = kernel_report(a, q, sigma, args.samples)?;
        for c in &report.checks {
            let status = if c.passed() { "PASS" } else { "FAIL" };
            all_passed &= c.passed();
            println!(
                "a={a} {} {status} margin={} at {}",
                c.name, c.margin, c.location
            );
        }
    }
    if all_passed {
        println!("kernel-check: all inequalities hold");
        Ok(0)
    } else {
        eprintln!("kernel-check: at least one inequality failed");
        Ok(1)
    }
}

fn cmd_sweep(args: SweepArgs) -> ipm1d::Result<u8> {
    let file = ConfigFile::load(args.config.as_deref())?;
    let base = file.merged(ConfigFile {
        t_end: args.t_end,
        cfl: args.cfl,
        slope_stop: args.slope_stop,
        tail_stop: args.tail_stop,
        output_every: args.output_every,
        profile: args.profile.clone(),
        ..ConfigFile::default()
    });
    if args.a.is_none() && args.g.is_none() && args.n.is_none() {
        return Err(Error::Param(
            "sweep grid is empty: pass at least one of --a, --g, --n".into(),
        ));
    }
    let a_list = args.a.unwrap_or_else(|| vec![base.a.unwrap_or(1.0)]);
    let g_list = args.g.unwrap_or_else(|| vec![base.g.unwrap_or(1.0)]);
    let n_list = args.n.unwrap_or_else(|| vec![base.n.unwrap_or(1024)]);
    if a_list.is_empty() || g_list.is_empty() || n_list.is_empty() {
        return Err(Error::Param("sweep grid is empty".into()));
    }

    let root = args
        .out_dir
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .or_else(|| base.out_dir.as_deref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("ipm1d-out"));
    std::fs::create_dir_all(&root)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", root.display())))?;

    let mut handles = Vec::new();
    for &a in &a_list {
        for &g in &g_list {
            for &n in &n_list {
                let name = format!("a{a}_g{g}_n{n}");
                let mut point = base.clone();
                point.a = Some(a);
                point.g = Some(g);
                point.n = Some(n);
                let dir = root.join(&name);
                handles.push(std::thread::spawn(move || sweep_point(point, dir, name, a, g, n)));
            }
        }
    }
    let rows: Vec<SweepRow> = handles
        .into_iter()
        .map(|h| {
            h.join().unwrap_or_else(|_| SweepRow {
                dir: "?".into(),
                a: f64::NAN,
                g: f64::NAN,
                n: 0,
                status: "error".into(),
                reason: "worker panicked".into(),
                t_stop: f64::NAN,
                bkm: f64::NAN,
                c_hat: f64::NAN,
            })
        })
        .collect();
    let summary_path = root.join("sweep_summary.csv");
    write_text(&summary_path, &sweep_summary_csv(&rows))?;
    let failures = rows.iter().filter(|r| r.status != "ok").count();
    println!(
        "wrote {}: {} runs, {} failed",
        summary_path.display(),
        rows.len(),
        failures
    );
    Ok(0)
}

fn sweep_point(point: ConfigFile, dir: PathBuf, name: String, a: f64, g: f64, n: usize) -> SweepRow {
    let failed = |reason: String| SweepRow {
        dir: name.clone(),
        a,
        g,
        n,
        status: "error".into(),
        reason,
        t_stop: f64::NAN,
        bkm: f64::NAN,
        c_hat: f64::NAN,
    };
    let rc = match resolve_run_config(point, Some(dir)) {
        Ok(rc) => rc,
        Err(e) => return failed(e.to_string()),
    };
    if let Err(e) = std::fs::create_dir_all(&rc.out_dir) {
        return failed(format!("cannot create {}: {e}", rc.out_dir.display()));
    }
    let art = match execute_run(&rc) {
        Ok(art) => art,
        Err(e) => return failed(e.to_string()),
    };
    if let Err(e) = write_run_outputs(&rc, &art) {
        return failed(e.to_string());
    }
    SweepRow {
        dir: name,
        a,
        g,
        n,
        status: "ok".into(),
        reason: art.outcome.reason.to_string(),
        t_stop: art.outcome.trajectory.last().map_or(f64::NAN, |s| s.t),
        bkm: art.outcome.trajectory.last().map_or(f64::NAN, |s| s.bkm),
        c_hat: art.fit.as_ref().map_or(f64::NAN, |f| f.c_hat),
    }
}
