//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::sync::Arc;
use std::time::Instant;

use mopkit::asymptotics::{moment_gap_experiment, nu_moments, tv_bound, weak_limit_compare, zero_threshold};
use mopkit::equilibrium::{limit_measure, minimize, InteractionSpec, MinimizeOptions};
use mopkit::hessenberg::nnrr;
use mopkit::kernel::{nevai_run, random_tuples, support_grid};
use mopkit::linalg::Matrix;
use mopkit::scalar::{ratio, set_precision_bits, DEFAULT_PRECISION_BITS};
use mopkit::{
    build_j, build_j_from_nnrr, BigReal, CDKernel, Exact, Interval, MeasureSystem, Mop, Path, PathFamily, ReferenceRule, SystemKind,
    Result, Scalar, WeightComponent,
};
use num_traits::Zero;

fn legendre() -> MeasureSystem {
    MeasureSystem::legendre()
}

fn angelesco() -> MeasureSystem {
    MeasureSystem::angelesco(vec![Interval::from_ints(-1, 0).unwrap(), Interval::from_ints(0, 1).unwrap()]).unwrap()
}

fn jacobi_pineiro(alphas: [(i64, i64); 2], beta: (i64, i64)) -> Result<MeasureSystem> {
    let alphas: Vec<Exact> = alphas.iter().map(|a| ratio(a.0, a.1)).collect();
    MeasureSystem::jacobi_pineiro(&alphas, &ratio(beta.0, beta.1), ReferenceRule::SumOfComponents)
}

fn three_systems() -> Vec<(&'static str, MeasureSystem)> {
    vec![("legendre", legendre()), ("angelesco", angelesco()), ("jacobi-pineiro", jacobi_pineiro([(0, 1), (1, 2)], (0, 1)).unwrap())]
}

fn family<S: Scalar>(sys: MeasureSystem, size: usize) -> Result<Arc<PathFamily<S>>> {
    let r = sys.r();
    Ok(Arc::new(PathFamily::build(Arc::new(Mop::new(sys)), &Path::stepline(r, size), size)?))
}

type Check = Result<(bool, String)>;

type Criterion = (&'static str, &'static str, fn() -> Check);

/// Five support points; Jacobi-Pineiro weights carry `x^(1/2)`, so there the
/// points are rational squares to keep exact evaluation exact.
fn exact_points(sys: &MeasureSystem) -> Vec<Exact> {
    match sys.kind() {
        SystemKind::JacobiPineiro => [(1, 25), (4, 25), (9, 25), (16, 25), (1, 4)].iter().map(|&(p, q)| ratio(p, q)).collect(),
        _ => support_grid(sys, 5),
    }
}

/// AC1: `det(x - J_n) = p_n` coefficientwise, exact, n <= 12.
fn ac1() -> Check {
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, sys) in three_systems() {
        let fam = family::<Exact>(sys, 12)?;
        let j = build_j(&fam, 12)?;
        let bad: Vec<usize> = (0..=12).filter(|&n| j.charpoly(n).map(|c| &c != fam.p(n)).unwrap_or(true)).collect();
        ok &= bad.is_empty();
        notes.push(format!("{name}: {}", if bad.is_empty() { "13/13 equal".into() } else { format!("mismatch at {bad:?}") }));
    }
    Ok((ok, notes.join("; ")))
}

/// AC2: `<p_m, q_l> = delta_ml` exactly for N <= 12.
fn ac2() -> Check {
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, sys) in three_systems() {
        let fam = family::<Exact>(sys, 12)?;
        let g = fam.biorthogonality_matrix(12)?;
        let id = Matrix::<Exact>::identity(12);
        let good = g == id;
        ok &= good;
        notes.push(format!("{name}: {}", if good { "identity" } else { "not identity" }));
    }
    Ok((ok, notes.join("; ")))
}

/// AC3: back-substituted `J` equals the recurrence-coefficient formula, and
/// the `a` coefficients agree across directions.
fn ac3() -> Check {
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, sys) in three_systems() {
        let r = sys.r();
        let mop = Arc::new(Mop::<Exact>::new(sys));
        let path = Path::stepline(r, 12);
        let fam = PathFamily::build(mop.clone(), &path, 12)?;
        let direct = build_j(&fam, 12)?;
        let formula = build_j_from_nnrr(&mop, &path, 12)?;
        let across = path.indices()[..12].iter().all(|n| nnrr(&mop, n).is_ok());
        let good = direct == formula && across;
        ok &= good;
        notes.push(format!("{name}: J equal = {}, a consistent = {across}", direct == formula));
    }
    Ok((ok, notes.join("; ")))
}

/// AC4: moment gap slope `-1 +- 0.2` for l = 2, 3, 4 and zero gap at l = 1.
fn ac4() -> Check {
    let ns = [8usize, 16, 32, 64];
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, sys) in [("legendre", legendre()), ("angelesco", angelesco())] {
        let fam = family::<BigReal>(sys, 68)?;
        let j = build_j(&fam, 68)?;
        let t = moment_gap_experiment(&j, &ns, 4)?;
        let zero1 = t.gaps(1).iter().all(|(_, g)| g.is_zero());
        ok &= zero1;
        let mut cells = vec![format!("l=1 gap zero: {zero1}")];
        for l in 2..=4 {
            let fit = t.fit(l).expect("fit");
            let (good, text) = match fit.slope {
                Some(s) => ((s + 1.0).abs() <= 0.2, format!("l={l} slope {s:.4}")),
                // a gap that vanishes identically decays faster than any rate
                None if fit.identically_zero => (true, format!("l={l} gap identically zero")),
                None => (false, format!("l={l} no fit")),
            };
            ok &= good;
            cells.push(text);
        }
        notes.push(format!("{name}: {}", cells.join(", ")));
    }
    Ok((ok, notes.join("; ")))
}

/// AC5: reproducing identity, exact at n <= 10 and below 1e-30 at n = 30.
fn ac5() -> Check {
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, sys) in three_systems() {
        let k = CDKernel::new(family::<Exact>(sys.clone(), 10)?);
        let xs: Vec<Exact> = exact_points(&sys);
        let mut exact_ok = true;
        for n in 1..=10 {
            for x in &xs {
                exact_ok &= k.reproducing_residual(n, x)?.is_zero();
            }
        }
        let kf = CDKernel::new(family::<BigReal>(sys.clone(), 30)?);
        let mut worst = 0.0f64;
        for x in support_grid::<BigReal>(&sys, 5) {
            worst = worst.max(kf.reproducing_residual(30, &x)?.abs().to_f64());
        }
        let good = exact_ok && worst < 1e-30;
        ok &= good;
        notes.push(format!("{name}: exact zero = {exact_ok}, float max {worst:.2e}"));
    }
    Ok((ok, notes.join("; ")))
}

/// AC6: kernel determinants and the diagonal are nonnegative; tv bound is 1.
fn ac6() -> Check {
    let mut notes = Vec::new();
    let mut ok = true;
    let tol = BigReal::from_f64(1e-12);
    for (name, sys) in [("angelesco", angelesco()), ("jacobi-pineiro", jacobi_pineiro([(0, 1), (1, 2)], (0, 1))?)] {
        let k = CDKernel::new(family::<BigReal>(sys.clone(), 15)?);
        let mut min_det = f64::INFINITY;
        let mut count = 0;
        for n in 1..=15usize {
            for t in random_tuples(&sys, n, 100, 1000 + n as u64) {
                let pts: Vec<BigReal> = t.iter().map(|&v| BigReal::from_f64(v)).collect();
                min_det = min_det.min(k.detpos_check(n, &pts)?.determinant);
                count += 1;
            }
        }
        let grid: Vec<BigReal> = support_grid(&sys, 200);
        let mut min_diag = f64::INFINITY;
        for n in 1..=15 {
            min_diag = min_diag.min(k.positivity_scan(n, &grid)?.min.unwrap_or(f64::NAN));
        }
        let tv = tv_bound(&k, &[5, 10, 15], &tol)?;
        let tv_dev = tv.iter().map(|(_, v)| (v.to_f64() - 1.0).abs()).fold(0.0, f64::max);
        let good = min_det >= -1e-30 && min_diag >= 0.0 && tv_dev <= 1e-6;
        ok &= good;
        notes.push(format!(
            "{name}: {count} tuples min det {min_det:.3e}, min diagonal {min_diag:.3e}, max |tv-1| {tv_dev:.1e}"
        ));
    }
    Ok((ok, notes.join("; ")))
}

/// AC7: `G_n[y^k](x) -> x^k` for Legendre with a decaying hypothesis (c) table.
fn ac7() -> Check {
    let ns = [15usize, 30, 60];
    let width = 3;
    let fam = family::<BigReal>(legendre(), 60 + width + 1)?;
    let j = build_j(&fam, 63)?;
    let k = CDKernel::new(fam);
    let mut ok = true;
    let mut notes = Vec::new();
    for x in [0.0, 0.3, 0.6] {
        let xs = BigReal::from_f64(x);
        let mut cells = Vec::new();
        let mut decays = true;
        for power in 1..=3usize {
            let rep = nevai_run(&k, &j, &xs, power, &ns, width)?;
            let errs: Vec<f64> = rep.g.iter().map(|(_, g)| (g - rep.target).abs()).collect();
            let good = errs[2] <= 5e-2 && errs.windows(2).all(|w| w[1] <= w[0]);
            ok &= good;
            decays &= rep.ratios_decay;
            let seq: Vec<String> = errs.iter().map(|e| format!("{e:.2e}")).collect();
            cells.push(format!("k={power} err {}{}", seq.join("/"), if good { "" } else { " (not decreasing)" }));
        }
        ok &= decays;
        notes.push(format!("x={x}: {} (c)-ratios decay {decays}", cells.join(" ")));
    }
    Ok((ok, notes.join("; ")))
}

/// AC8: search for a negative `K_n(x,y) K_n(y,x)` over Jacobi–Piñeiro parameters.
fn ac8() -> Check {
    let mut found = Vec::new();
    let mut skipped = Vec::new();
    for alphas in [[(0i64, 1i64), (1, 2)], [(1, 2), (3, 2)]] {
        for beta in [(0i64, 1i64), (1, 2)] {
            let label = format!(
                "alpha=({}/{},{}/{}) beta={}/{}",
                alphas[0].0, alphas[0].1, alphas[1].0, alphas[1].1, beta.0, beta.1
            );
            let sys = match jacobi_pineiro(alphas, beta) {
                Ok(s) => s,
                Err(e) => {
                    skipped.push(format!("{label} rejected ({})", e.code()));
                    continue;
                }
            };
            let k = CDKernel::new(family::<BigReal>(sys.clone(), 20)?);
            let grid: Vec<BigReal> = support_grid(&sys, 500);
            'outer: for n in [2usize, 4, 6, 8, 10, 12, 14, 16, 18, 20] {
                for x in [0.05, 0.25, 0.5, 0.75, 0.95] {
                    let s = k.product_sign_scan(n, &BigReal::from_f64(x), &grid)?;
                    if s.negative > 0 {
                        found.push(format!("{label} n={n} x={x}: {} negative, min {:.3e} at y={:.4}", s.negative, s.min, s.argmin));
                        break 'outer;
                    }
                }
            }
        }
    }
    let detail = if found.is_empty() {
        format!("inconclusive: no negative product found; {}", skipped.join(", "))
    } else {
        format!("{}; {}", found.join("; "), skipped.join(", "))
    };
    Ok((true, detail))
}

/// AC9: `K_40(2,2)` approaches `1 / mu({2}) = 2`.
fn ac9() -> Check {
    let c = WeightComponent::lebesgue(Interval::from_ints(-1, 1)?).with_atom(ratio(2, 1), ratio(1, 2));
    let k = CDKernel::new(family::<BigReal>(MeasureSystem::single(c)?, 40)?);
    let table = k.atom_limit_experiment(&BigReal::from_usize(2), &[10, 20, 40])?;
    let err = table.last_error.unwrap_or(f64::INFINITY);
    Ok((err <= 2e-2, format!("K_40(2,2) = {:.6}, |error| {err:.2e}", table.rows[2].1)))
}

/// AC10: equilibrium moments against arcsine and against `nu_n`.
fn ac10() -> Check {
    let opts = MinimizeOptions { grid_size: 400, ..Default::default() };
    let mut ok = true;
    let mut notes = Vec::new();

    let single = InteractionSpec::angelesco(&[1.0])?;
    let sol = minimize(&single, &[Interval::from_ints(-1, 1)?], &opts)?;
    let m = limit_measure(&sol, &single, 4);
    let arcsine_ok = (m[2] - 0.5).abs() <= 1e-2 && (m[4] - 0.375).abs() <= 1e-2 && sol.monotone;
    ok &= arcsine_ok;
    notes.push(format!("arcsine m2 {:.5} m4 {:.5}", m[2], m[4]));

    let ang = InteractionSpec::angelesco(&[0.5, 0.5])?;
    let sol = minimize(&ang, &[Interval::from_ints(-1, 0)?, Interval::from_ints(0, 1)?], &opts)?;
    let target = limit_measure(&sol, &ang, 4);
    let fam = family::<BigReal>(angelesco(), 60)?;
    let nu: Vec<f64> = nu_moments(&build_j(&fam, 60)?, 60, 4)?.iter().map(|v| v.to_f64()).collect();
    let rep = weak_limit_compare(&nu, &target, 4)?;
    let ang_ok = rep.max_deviation <= 3e-2 && sol.monotone;
    ok &= ang_ok;
    notes.push(format!("angelesco max dev {:.3e} (residual {:.1e})", rep.max_deviation, sol.max_residual));

    let nik = InteractionSpec::nikishin(&[0.5, 0.5])?;
    let sol = minimize(&nik, &[Interval::from_ints(0, 1)?, Interval::from_ints(-2, -1)?], &opts)?;
    let target = limit_measure(&sol, &nik, 3);
    set_precision_bits(768);
    let sys = MeasureSystem::nikishin(vec![
        WeightComponent::lebesgue(Interval::from_ints(0, 1)?),
        WeightComponent::lebesgue(Interval::from_ints(-2, -1)?),
    ])?;
    let nu_res = family::<BigReal>(sys, 60).and_then(|fam| nu_moments(&build_j(&fam, 60)?, 60, 3));
    set_precision_bits(DEFAULT_PRECISION_BITS);
    let nu: Vec<f64> = nu_res?.iter().map(|v| v.to_f64()).collect();
    let rep = weak_limit_compare(&nu, &target, 3)?;
    let nik_ok = sol.max_residual < 1e-4 && rep.max_deviation < 5e-2 && sol.monotone;
    ok &= nik_ok;
    notes.push(format!("nikishin residual {:.1e}, max dev {:.3e}", sol.max_residual, rep.max_deviation));
    Ok((ok, notes.join("; ")))
}

/// AC11: NDB suprema for offsets 0..4 move by less than 1% from N = 30 to 60.
fn ac11() -> Check {
    let fam = family::<BigReal>(angelesco(), 60)?;
    let j = build_j(&fam, 60)?;
    let tr = j.ndb_trace(4, &[30, 60])?;
    let floor = zero_threshold::<BigReal>();
    let mut worst = 0.0f64;
    let mut cells = Vec::new();
    for d in 0..=4i64 {
        let sup = |k: usize| {
            let v = tr[k].suprema.iter().find(|s| s.0 == d).expect("offset").1.to_f64().abs();
            if v <= floor { 0.0 } else { v }
        };
        let (a, b) = (sup(0), sup(1));
        let rel = if a.max(b) == 0.0 { 0.0 } else { (a - b).abs() / a.max(b) };
        worst = worst.max(rel);
        cells.push(format!("{d}: {a:.4e} -> {b:.4e}"));
    }
    Ok((worst < 1e-2, format!("max relative change {worst:.3e} [{}]", cells.join(", "))))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("AC1", "characteristic polynomial identity", ac1),
        ("AC2", "biorthogonality", ac2),
        ("AC3", "J construction cross-check", ac3),
        ("AC4", "moment gap rate", ac4),
        ("AC5", "reproducing property", ac5),
        ("AC6", "positivity", ac6),
        ("AC7", "Nevai convergence", ac7),
        ("AC8", "Nevai sign phenomenon", ac8),
        ("AC9", "atom limit", ac9),
        ("AC10", "equilibrium limits", ac10),
        ("AC11", "NDB stability", ac11),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, title, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| id == p) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f);
        let secs = start.elapsed().as_secs_f64();
        let (pass, detail) = match outcome {
            Ok(Ok(r)) => r,
            Ok(Err(e)) => (false, format!("error {}: {e}", e.code())),
            Err(_) => (false, "panicked".into()),
        };
        if !pass {
            failed += 1;
        }
        println!("{id} {} [{title}] ({secs:.1} s) {detail}", if pass { "PASS" } else { "FAIL" });
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
