use std::sync::Arc;

use mopkit::asymptotics::{eta_moment, eta_moment_rows, nu_moment, nu_moment_rows};
use mopkit::equilibrium::{minimize, InteractionSpec, MinimizeOptions};
use mopkit::linalg::Matrix;
use mopkit::scalar::ratio;
use mopkit::{
    build_j, BigReal, CDKernel, Exact, Interval, MeasureSystem, Mop, MultiIndex, Path, PathFamily, Scalar,
    WeightComponent,
};
use num_traits::{One, Zero};
use proptest::prelude::*;

fn angelesco() -> MeasureSystem {
    MeasureSystem::angelesco(vec![Interval::from_ints(-1, 0).unwrap(), Interval::from_ints(0, 1).unwrap()]).unwrap()
}

fn direction(weights: &[u32]) -> Vec<Exact> {
    let total: i64 = weights.iter().map(|&w| w as i64).sum();
    weights.iter().map(|&w| ratio(w as i64, total)).collect()
}

fn deviation(path: &Path, s: &[Exact]) -> Exact {
    let mut n = vec![0i64; path.r()];
    let mut worst = Exact::zero();
    for (l, &step) in path.steps().iter().enumerate() {
        n[step] += 1;
        for (i, si) in s.iter().enumerate() {
            let d = num_traits::Signed::abs(&(Exact::from_integer(n[i].into()) - si * Exact::from_integer((l as i64 + 1).into())));
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn direction_paths_stay_close(weights in prop::collection::vec(1u32..20, 1..5), len in 1usize..400) {
        let s = direction(&weights);
        let path = Path::direction(&s, len).unwrap();
        let report = path.validate();
        prop_assert!(report.nested);
        for (l, idx) in path.indices().iter().enumerate() {
            prop_assert_eq!(idx.size(), l);
        }
        prop_assert!(deviation(&path, &s) <= Exact::from_integer((s.len() as i64).into()));
    }

    #[test]
    fn cauchy_transform_decreases_right_of_support(a in -5i64..5, w in 1i64..4, gaps in prop::array::uniform3(1u32..1000)) {
        let c = WeightComponent::lebesgue(Interval::from_ints(a, a + w).unwrap());
        let b = (a + w) as f64;
        let mut xs: Vec<f64> = gaps.iter().map(|&g| b + g as f64 / 100.0).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let vals: Vec<f64> = xs.iter().map(|&x| c.cauchy_transform(&x).unwrap()).collect();
        for v in vals.windows(2) {
            prop_assert!(v[1] < v[0]);
        }
    }

    #[test]
    fn exact_orthogonality_angelesco(n1 in 0usize..4, n2 in 0usize..4) {
        prop_assume!(n1 + n2 > 0);
        let mop: Mop<Exact> = Mop::new(angelesco());
        let idx = MultiIndex::new(vec![n1, n2]);
        let p = mop.type2(&idx).unwrap();
        prop_assert!(p.poly.is_monic());
        prop_assert!(mop.type2_residuals(&p).unwrap().iter().all(|r| r.is_zero()));
        let a = mop.type1(&idx).unwrap();
        let res = mop.type1_residuals(&a).unwrap();
        let last = res.len() - 1;
        for (k, r) in res.iter().enumerate() {
            prop_assert_eq!(r.is_one(), k == last);
            prop_assert_eq!(r.is_zero(), k != last);
        }
    }

    #[test]
    fn classical_kernel_is_symmetric(x in -0.99f64..0.99, y in -0.99f64..0.99, n in 1usize..12) {
        let fam = PathFamily::<BigReal>::build(Arc::new(Mop::new(MeasureSystem::legendre())), &Path::stepline(1, 14), 14).unwrap();
        let k = CDKernel::new(Arc::new(fam));
        let (x, y) = (BigReal::from_f64(x), BigReal::from_f64(y));
        let xy = k.eval(n, &x, &y).unwrap().value;
        let yx = k.eval(n, &y, &x).unwrap().value;
        prop_assert!((xy - &yx).abs().to_f64() < 1e-60);
    }

    #[test]
    fn nevai_of_constant_is_one(x in -0.95f64..0.95, n in 1usize..10) {
        let fam = Arc::new(PathFamily::<BigReal>::build(Arc::new(Mop::new(angelesco())), &Path::stepline(2, 12), 12).unwrap());
        let j = build_j(&fam, 12).unwrap();
        let k = CDKernel::new(fam);
        let x = BigReal::from_f64(x);
        prop_assume!(!k.diag(n, &x).unwrap().is_zero());
        let g = k.nevai_g(&j, n, &x, 0).unwrap();
        prop_assert!((g - BigReal::one()).abs().to_f64() < 1e-50);
    }
}

#[test]
fn greedy_deviation_bounded_to_ten_thousand() {
    for weights in [vec![1u32, 1], vec![2, 1], vec![1, 2, 3], vec![5, 3, 1, 1]] {
        let s = direction(&weights);
        let path = Path::direction(&s, 10_000).unwrap();
        assert!(deviation(&path, &s) <= Exact::from_integer((s.len() as i64).into()), "{weights:?}");
        assert_eq!(path.index(10_000).unwrap().size(), 10_000);
    }
}

#[test]
fn nikishin_transform_has_constant_sign() {
    let sigma2 = WeightComponent::lebesgue(Interval::from_ints(-2, -1).unwrap());
    let signs: Vec<bool> = (1..100).map(|i| sigma2.cauchy_transform(&(i as f64 / 100.0)).unwrap() > 0.0).collect();
    assert!(signs.iter().all(|&s| s));
    let sigma2 = WeightComponent::lebesgue(Interval::from_ints(2, 3).unwrap());
    assert!((1..100).all(|i| sigma2.cauchy_transform(&(i as f64 / 100.0)).unwrap() < 0.0));
}

#[test]
fn moment_identities_on_exact_j() {
    let fam = PathFamily::<Exact>::build(Arc::new(Mop::new(angelesco())), &Path::stepline(2, 10), 10).unwrap();
    let j = build_j(&fam, 10).unwrap();
    for n in 1..=6 {
        assert_eq!(nu_moment(&j, n, 1).unwrap(), eta_moment(&j, n, 1).unwrap());
        for l in 2..=4 {
            let from = n.saturating_sub(l);
            let full = nu_moment(&j, n, l).unwrap() - eta_moment(&j, n, l).unwrap();
            let tail = nu_moment_rows(&j, n, l, from).unwrap() - eta_moment_rows(&j, n, l, from).unwrap();
            assert_eq!(full, tail, "n={n} l={l}");
        }
    }
}

#[test]
fn powers_respect_band() {
    let fam = PathFamily::<Exact>::build(Arc::new(Mop::new(angelesco())), &Path::stepline(2, 9), 9).unwrap();
    let j = build_j(&fam, 8).unwrap();
    let m = j.truncate(8).unwrap();
    let mut p = Matrix::identity(8);
    for l in 1..=4 {
        p = p.mul(&m);
        for i in 0..8 {
            for c in i + l + 1..8 {
                assert!(p[(i, c)].is_zero(), "l={l} ({i},{c})");
            }
        }
    }
}

#[test]
fn equilibrium_masses_and_grid_stability() {
    let ivs = [Interval::from_ints(-1, 0).unwrap(), Interval::from_ints(0, 1).unwrap()];
    let spec = InteractionSpec::angelesco(&[0.5, 0.5]).unwrap();
    let coarse = minimize(&spec, &ivs, &MinimizeOptions { grid_size: 100, ..Default::default() }).unwrap();
    let fine = minimize(&spec, &ivs, &MinimizeOptions { grid_size: 200, ..Default::default() }).unwrap();
    for c in coarse.components.iter().chain(&fine.components) {
        assert!(c.weights.iter().all(|&w| w >= 0.0));
        assert!((c.weights.iter().sum::<f64>() - 0.5).abs() < 1e-12);
    }
    assert!(coarse.monotone && fine.monotone);
    assert!((coarse.energy - fine.energy).abs() / fine.energy.abs() < 5e-3);
}
