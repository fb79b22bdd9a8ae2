use std::fmt::Write as _;
use std::path::Path as FsPath;
use std::process::ExitCode;

use anyhow::{bail, Result};
use mopkit::asymptotics::{interlacing_scan, moment_gap_experiment, zero_threshold};
use mopkit::equilibrium::{limit_measure, minimize, InteractionSpec, MinimizeOptions};
use mopkit::kernel::{nevai_run, random_tuples, support_grid};
use mopkit::scalar::parse_ratio;
use mopkit::{build_j, build_j_from_nnrr, BigReal, CDKernel, Exact, Interval, MultiIndex, Scalar};
use serde_json::{json, Value};

use crate::setup::Setup;
use crate::{
    AsymptoticsCommand, Command, DetposArgs, DiagnoseArgs, EquilibriumArgs, EquilibriumCommand, EquilibriumPreset,
    GapsArgs, JmatrixArgs, KernelCommand, KernelDiagArgs, NevaiArgs, NevaiCommand, PolyArgs, PolyKind,
};

/// Diagnostics that ran but did not pass.
const EXIT_DIAGNOSTIC: u8 = 3;

macro_rules! dispatch {
    ($setup:expr, $f:ident($($arg:expr),*)) => {
        if $setup.exact() { $f::<Exact>($($arg),*) } else { $f::<BigReal>($($arg),*) }
    };
}

pub fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Poly(a) => {
            let s = a.system.resolve()?;
            dispatch!(s, poly(&s, &a))
        }
        Command::Jmatrix(a) => {
            let s = a.system.resolve()?;
            dispatch!(s, jmatrix(&s, &a))
        }
        Command::Gaps(a) | Command::Asymptotics(AsymptoticsCommand::Gaps(a)) => {
            let s = a.system.resolve()?;
            dispatch!(s, gaps(&s, &a))
        }
        Command::Kernel(KernelCommand::Diag(a)) => {
            let s = a.system.resolve()?;
            dispatch!(s, kernel_diag(&s, &a))
        }
        Command::Kernel(KernelCommand::Detpos(a)) => {
            let s = a.system.resolve()?;
            dispatch!(s, detpos(&s, &a))
        }
        Command::Nevai(NevaiCommand::Run(a)) => {
            let s = a.system.resolve()?;
            dispatch!(s, nevai(&s, &a))
        }
        Command::Equilibrium(EquilibriumCommand::Solve(a)) => equilibrium(&a),
        Command::Diagnose(a) => {
            let s = a.system.resolve()?;
            dispatch!(s, diagnose(&s, &a))
        }
    }
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

/// Writes the CSV to `out` and prints the summary, or prints the CSV alone.
fn emit(csv: &str, out: Option<&FsPath>, summary: Value) -> Result<ExitCode> {
    match out {
        Some(path) => {
            std::fs::write(path, csv).map_err(mopkit::Error::from)?;
            print_json(&summary);
        }
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_scalar<S: Scalar>(text: &str) -> Result<S> {
    Ok(S::from_ratio(&parse_ratio(text.trim())?))
}

fn check_ns(ns: &[usize]) -> Result<()> {
    if ns.is_empty() || ns.contains(&0) {
        bail!(mopkit::Error::Config("n values must be positive".into()));
    }
    Ok(())
}

fn poly<S: Scalar>(s: &Setup, a: &PolyArgs) -> Result<ExitCode> {
    let index = match (&a.index, a.step) {
        (Some(text), _) => {
            let entries = text
                .split(',')
                .map(|t| t.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| mopkit::Error::Config(format!("multi-index '{text}': {e}")))?;
            if entries.len() != s.system.r() {
                bail!(mopkit::Error::Config(format!("multi-index has {} entries for r = {}", entries.len(), s.system.r())));
            }
            MultiIndex::new(entries)
        }
        (None, Some(step)) => s.config.build_path(s.system.r(), step)?.index(step)?,
        (None, None) => bail!(mopkit::Error::Config("give --index or --step".into())),
    };
    let mop = s.mop::<S>();
    let mut out = json!({ "system": s.summary(), "index": index.entries() });
    if a.kind != PolyKind::Type1 {
        let p = mop.type2(&index)?;
        out["type2"] = serde_json::to_value(p.export(s.digits))?;
        if a.roots {
            let roots = mopkit::roots::real_roots(&p.poly, a.root_bits)?;
            out["roots"] = serde_json::to_value(roots.export(s.digits))?;
        }
    }
    if a.kind != PolyKind::Type2 {
        out["type1"] = serde_json::to_value(mop.type1(&index)?.export(s.digits))?;
    }
    print_json(&out);
    Ok(ExitCode::SUCCESS)
}

fn jmatrix<S: Scalar>(s: &Setup, a: &JmatrixArgs) -> Result<ExitCode> {
    check_ns(&[a.n])?;
    let j = if a.nnrr {
        let path = s.config.build_path(s.system.r(), a.n + 1)?;
        build_j_from_nnrr(&s.mop::<S>(), &path, a.n)?
    } else {
        build_j(&*s.family::<S>(a.n + 1)?, a.n)?
    };
    let summary = json!({ "system": s.summary(), "rows": j.size(), "route": if a.nnrr { "nnrr" } else { "pairing" } });
    emit(&j.to_csv(s.digits), a.out.as_deref(), summary)
}

fn gaps<S: Scalar>(s: &Setup, a: &GapsArgs) -> Result<ExitCode> {
    let ns: Vec<usize> = if a.ns.is_empty() { (1..=a.nmax).collect() } else { a.ns.clone() };
    check_ns(&ns)?;
    let size = ns.iter().max().expect("nonempty") + a.lmax.max(1);
    let j = build_j(&*s.family::<S>(size)?, size)?;
    let table = moment_gap_experiment(&j, &ns, a.lmax)?;
    let summary = json!({ "system": s.summary(), "ns": ns, "lmax": a.lmax, "fits": table.fits });
    emit(&table.to_csv(s.digits), a.out.as_deref(), summary)
}

fn kernel_diag<S: Scalar>(s: &Setup, a: &KernelDiagArgs) -> Result<ExitCode> {
    check_ns(&a.n)?;
    let kernel = CDKernel::new(s.family::<S>(*a.n.iter().max().expect("nonempty"))?);
    let grid: Vec<S> = support_grid(&s.system, a.grid);
    let mut csv = String::from("# mopkit kernel-diag v1\nn,x,value\n");
    let (mut negative, mut zero, mut positive) = (0usize, 0usize, 0usize);
    let mut min: Option<S> = None;
    for &n in &a.n {
        for x in &grid {
            let v = kernel.diag(n, x)?;
            match v.partial_cmp(&S::zero()) {
                Some(std::cmp::Ordering::Less) => negative += 1,
                Some(std::cmp::Ordering::Equal) => zero += 1,
                _ => positive += 1,
            }
            if min.as_ref().is_none_or(|m| v < *m) {
                min = Some(v.clone());
            }
            writeln!(csv, "{n},{},{}", x.to_decimal(s.digits), v.to_decimal(s.digits)).expect("string write");
        }
    }
    let summary = json!({
        "system": s.summary(),
        "ns": a.n,
        "points": grid.len(),
        "signs": { "negative": negative, "zero": zero, "positive": positive },
        "min": min.map(|m| m.to_decimal(s.digits)),
    });
    emit(&csv, a.out.as_deref(), summary)
}

fn detpos<S: Scalar>(s: &Setup, a: &DetposArgs) -> Result<ExitCode> {
    check_ns(&a.n)?;
    let kernel = CDKernel::new(s.family::<S>(*a.n.iter().max().expect("nonempty"))?);
    let mut csv = String::from("# mopkit detpos v1\nn,x,value\n");
    let (mut negative, mut zero, mut positive) = (0usize, 0usize, 0usize);
    let mut min = f64::INFINITY;
    for &n in &a.n {
        let seed = s.config.run.seed.wrapping_add(n as u64);
        for tuple in random_tuples(&s.system, n, a.tuples, seed) {
            let pts: Vec<S> = tuple.iter().map(|&v| S::from_f64(v)).collect();
            let rep = kernel.detpos_check(n, &pts)?;
            match rep.sign {
                -1 => negative += 1,
                0 => zero += 1,
                _ => positive += 1,
            }
            min = min.min(rep.determinant);
            let xs: Vec<String> = tuple.iter().map(|v| format!("{v:e}")).collect();
            writeln!(csv, "{n},{},{}", xs.join(";"), rep.determinant_decimal).expect("string write");
        }
    }
    let summary = json!({
        "system": s.summary(),
        "ns": a.n,
        "tuples": a.tuples,
        "seed": s.config.run.seed,
        "signs": { "negative": negative, "zero": zero, "positive": positive },
        "min_determinant": min,
    });
    emit(&csv, a.out.as_deref(), summary)
}

fn nevai<S: Scalar>(s: &Setup, a: &NevaiArgs) -> Result<ExitCode> {
    check_ns(&a.n)?;
    let x: S = parse_scalar(&a.x)?;
    let nmax = *a.n.iter().max().expect("nonempty");
    let size = nmax + a.k.max(a.width) + 1;
    let family = s.family::<S>(size)?;
    let j = build_j(&family, size - 1)?;
    let kernel = CDKernel::new(family);
    let report = nevai_run(&kernel, &j, &x, a.k, &a.n, a.width)?;
    let grid: Vec<S> = support_grid(&s.system, a.grid);
    let signs = a.n.iter().map(|&n| kernel.product_sign_scan(n, &x, &grid)).collect::<mopkit::Result<Vec<_>>>()?;
    let mut csv = String::from("# mopkit nevai v1\nn,x,value\n");
    for &n in &a.n {
        let g = kernel.nevai_g(&j, n, &x, a.k)?;
        writeln!(csv, "{n},{},{}", x.to_decimal(s.digits), g.to_decimal(s.digits)).expect("string write");
    }
    let summary = json!({
        "system": s.summary(),
        "k": a.k,
        "report": report,
        "sign_census": signs,
    });
    emit(&csv, a.out.as_deref(), summary)
}

fn equilibrium(a: &EquilibriumArgs) -> Result<ExitCode> {
    let intervals = a
        .intervals
        .split(';')
        .filter(|t| !t.trim().is_empty())
        .map(Interval::parse)
        .collect::<mopkit::Result<Vec<_>>>()?;
    let r = intervals.len();
    let shares: Vec<f64> = match &a.s {
        Some(text) => text
            .split(',')
            .map(|t| parse_ratio(t.trim()).map(|q| num_traits::ToPrimitive::to_f64(&q).unwrap_or(f64::NAN)))
            .collect::<mopkit::Result<_>>()?,
        None => vec![1.0 / r as f64; r],
    };
    if shares.len() != r {
        bail!(mopkit::Error::Config(format!("--s has {} entries for {r} intervals", shares.len())));
    }
    let spec = match a.preset {
        EquilibriumPreset::Angelesco => InteractionSpec::angelesco(&shares)?,
        EquilibriumPreset::Nikishin => InteractionSpec::nikishin(&shares)?,
    };
    let opts = MinimizeOptions { grid_size: a.grid, tol: a.tol, max_iter: a.max_iter };
    let sol = minimize(&spec, &intervals, &opts)?;
    let summary = json!({
        "preset": format!("{:?}", spec.preset).to_lowercase(),
        "intervals": intervals.iter().map(|iv| iv.to_string()).collect::<Vec<_>>(),
        "masses": spec.masses,
        "grid": a.grid,
        "energy": sol.energy,
        "iterations": sol.iterations,
        "converged": sol.converged,
        "monotone": sol.monotone,
        "residuals": sol.residuals,
        "max_residual": sol.max_residual,
        "limit_moments": limit_measure(&sol, &spec, a.lmax),
        "diagnostic": sol.diagnostic,
        "warnings": spec.warnings.iter().chain(&sol.warnings).collect::<Vec<_>>(),
    });
    emit(&sol.to_csv(), a.out.as_deref(), summary)
}

fn diagnose<S: Scalar>(s: &Setup, a: &DiagnoseArgs) -> Result<ExitCode> {
    if a.nmax < 2 {
        bail!(mopkit::Error::Config("diagnose needs --nmax of at least 2".into()));
    }
    let family = s.family::<S>(a.nmax + 1)?;
    let floor = zero_threshold::<S>();

    let j = build_j(&family, a.nmax)?;
    let trace = j.ndb_trace(a.radius, &[a.nmax / 2, a.nmax])?;
    let (early, late) = (trace[0].export(), trace[1].export());
    let mut ndb_change = 0.0f64;
    for (x, y) in early.suprema.iter().zip(&late.suprema) {
        let (x, y) = (if x.abs() <= floor { 0.0 } else { *x }, if y.abs() <= floor { 0.0 } else { *y });
        if x.max(y) > 0.0 {
            ndb_change = ndb_change.max((x - y).abs() / x.max(y));
        }
    }
    let ndb_passed = late.suprema.iter().all(|v| v.is_finite()) && ndb_change < 1e-2;

    let interlacing = interlacing_scan(&family, a.nmax, 64)?;
    let failures: Vec<_> = interlacing.iter().filter(|r| !r.passed()).collect();

    let kernel = CDKernel::new(family.clone());
    let grid: Vec<S> = support_grid(&s.system, a.grid);
    let mut min = f64::INFINITY;
    let mut negatives = 0;
    for n in 1..=a.nmax {
        let rep = kernel.positivity_scan(n, &grid)?;
        min = min.min(rep.min.unwrap_or(f64::INFINITY));
        negatives += rep.negative_count;
    }
    let positivity_passed = min >= -floor;

    let all = ndb_passed && failures.is_empty() && positivity_passed;
    print_json(&json!({
        "system": s.summary(),
        "nmax": a.nmax,
        "ndb": { "passed": ndb_passed, "max_relative_change": ndb_change, "profiles": [early, late] },
        "interlacing": { "passed": failures.is_empty(), "checked": interlacing.len(), "failures": failures },
        "positivity": { "passed": positivity_passed, "min": min, "negatives": negatives, "grid": grid.len() },
        "all_passed": all,
    }));
    Ok(if all { ExitCode::SUCCESS } else { ExitCode::from(EXIT_DIAGNOSTIC) })
}
