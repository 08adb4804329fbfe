use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rkhs_flm_core::kernels::gram_points;
use rkhs_flm_core::rkhs::{loeve_predict, rkhs_inner, rkhs_norm_sq, rkhs_norm_sq_spectral};
use rkhs_flm_core::{CovarianceKernel, DiscreteOperator, Grid, GridFunction, KernelExpansion};

fn kernel_strategy() -> impl Strategy<Value = CovarianceKernel> {
    prop_oneof![
        Just(CovarianceKernel::Brownian),
        (0.05f64..0.95).prop_map(|h| CovarianceKernel::fbm(h).unwrap()),
    ]
}

fn terms() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0f64..=1.0, -5.0f64..5.0), 1..8)
}

fn expansion(kernel: &CovarianceKernel, terms: &[(f64, f64)]) -> KernelExpansion {
    let (pts, coefs): (Vec<f64>, Vec<f64>) = terms.iter().copied().unzip();
    KernelExpansion::new(kernel.clone(), pts, coefs).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn reproducing_property(kernel in kernel_strategy(), s in 0.0f64..=1.0, t in 0.0f64..=1.0) {
        let ks = KernelExpansion::representer(kernel.clone(), s).unwrap();
        let kt = KernelExpansion::representer(kernel.clone(), t).unwrap();
        prop_assert!((rkhs_inner(&ks, &kt).unwrap() - kernel.eval(s, t).unwrap()).abs() <= 1e-12);
        // Evaluation is the inner product with the representer.
        prop_assert!((ks.eval(t).unwrap() - kernel.eval(s, t).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn cauchy_schwarz(kernel in kernel_strategy(), a in terms(), b in terms()) {
        let (a, b) = (expansion(&kernel, &a), expansion(&kernel, &b));
        let ab = rkhs_inner(&a, &b).unwrap();
        let aa = rkhs_norm_sq(&a).unwrap();
        let bb = rkhs_norm_sq(&b).unwrap();
        prop_assert!(ab * ab <= aa * bb * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn bilinearity(kernel in kernel_strategy(), a in terms(), b in terms(), c in terms(), x in -3.0f64..3.0) {
        let (a, b, c) = (expansion(&kernel, &a), expansion(&kernel, &b), expansion(&kernel, &c));
        let lhs = rkhs_inner(&a.combine(x, &b, 1.0).unwrap(), &c).unwrap();
        let rhs = x * rkhs_inner(&a, &c).unwrap() + rkhs_inner(&b, &c).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
        prop_assert!((rkhs_inner(&a, &c).unwrap() - rkhs_inner(&c, &a).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn loeve_predict_is_linear(
        a in prop::collection::vec(-5.0f64..5.0, 3),
        b in prop::collection::vec(-5.0f64..5.0, 3),
        x in prop::collection::vec(-2.0f64..2.0, 11),
        w in -3.0f64..3.0,
    ) {
        let grid = Grid::uniform(11).unwrap();
        let pts = vec![0.1, 0.5, 0.9];
        let k = CovarianceKernel::Brownian;
        let ea = KernelExpansion::new(k.clone(), pts.clone(), a.clone()).unwrap();
        let eb = KernelExpansion::new(k.clone(), pts.clone(), b.clone()).unwrap();
        let combined = ea.combine(w, &eb, 1.0).unwrap();
        let lhs = loeve_predict(&combined, &grid, &x).unwrap();
        let rhs = w * loeve_predict(&ea, &grid, &x).unwrap() + loeve_predict(&eb, &grid, &x).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        let direct: f64 = a.iter().zip([x[1], x[5], x[9]]).map(|(c, v)| c * v).sum();
        prop_assert!((loeve_predict(&ea, &grid, &x).unwrap() - direct).abs() <= 1e-12);
    }

    #[test]
    fn norm_is_quadratic_form_on_gram(kernel in kernel_strategy(), a in terms()) {
        let e = expansion(&kernel, &a);
        let gram = gram_points(&kernel, e.points()).unwrap();
        let c = nalgebra::DVector::from_column_slice(e.coefficients());
        let q = (c.transpose() * gram * &c)[(0, 0)];
        prop_assert!((rkhs_norm_sq(&e).unwrap() - q.max(0.0)).abs() <= 1e-12 * (1.0 + q.abs()));
    }
}

#[test]
fn spectral_and_kernel_norms_agree_on_fine_grid() {
    let m = 1000;
    let grid = Grid::uniform(m).unwrap();
    let kernel = CovarianceKernel::Brownian;
    let es = DiscreteOperator::discretize(&kernel, &grid)
        .unwrap()
        .eigen(1e-10)
        .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let k = rng.random_range(1..6);
        let pts: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
        let coefs: Vec<f64> = (0..k).map(|_| rng.random_range(-3.0..3.0)).collect();
        let e = KernelExpansion::new(kernel.clone(), pts, coefs).unwrap();
        let f = GridFunction::new(grid.clone(), e.sample(&grid).unwrap()).unwrap();
        let direct = rkhs_norm_sq(&e).unwrap();
        let spectral = rkhs_norm_sq_spectral(&f, &es, 100).unwrap();
        assert!(
            (spectral - direct).abs() / direct < 0.02,
            "{spectral} vs {direct}"
        );
    }
}
