use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;
use vdmkit::reduce::{lda_fit, lda_transform, pca_fit, pca_transform};
use vdmkit::rng::{stream, ChaCha8Rng};
use vdmkit::{fvd, FeatureMatrix, LabeledFeatures};

fn gaussian(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, d, |_, _| rng.sample(StandardNormal))
}

fn fm(m: &DMatrix<f64>) -> FeatureMatrix {
    FeatureMatrix::from_dmatrix(m).unwrap()
}

fn orthogonal(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    gaussian(rng, d, d).qr().q()
}

fn shift(m: &DMatrix<f64>, t: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] + t[j])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fd_invariant_to_rigid_motions(seed in any::<u64>(), d in 2usize..7) {
        let mut rng = stream(seed);
        let x = gaussian(&mut rng, 200, d);
        let y = shift(&(gaussian(&mut rng, 180, d) * 1.5), &vec![0.3; d]);
        let q = orthogonal(&mut rng, d);
        let t: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
        let base = fvd(&fm(&x), &fm(&y)).unwrap().value;
        let moved = fvd(&fm(&shift(&(&x * &q), &t)), &fm(&shift(&(&y * &q), &t))).unwrap().value;
        prop_assert!((base - moved).abs() <= 1e-9 * base.max(1.0));
    }

    #[test]
    fn fd_scales_quadratically(seed in any::<u64>(), s in 0.1f64..10.0) {
        let mut rng = stream(seed);
        let x = gaussian(&mut rng, 150, 3);
        let y = shift(&gaussian(&mut rng, 150, 3), &[1.0, 0.0, -1.0]);
        let base = fvd(&fm(&x), &fm(&y)).unwrap().value;
        let scaled = fvd(&fm(&(&x * s)), &fm(&(&y * s))).unwrap().value;
        prop_assert!((scaled - s * s * base).abs() <= 1e-9 * (s * s * base).max(1.0));
    }

    /// On data of exact rank r, PCA to r components is an isometry of the
    /// support, so it leaves FD unchanged.
    #[test]
    fn pca_to_full_rank_preserves_fd(seed in any::<u64>(), r in 2usize..5) {
        let mut rng = stream(seed);
        let d = r + 4;
        let basis = gaussian(&mut rng, r, d);
        let x = gaussian(&mut rng, 300, r) * &basis;
        let y = shift(&(gaussian(&mut rng, 250, r) * 1.3), &vec![0.5; r]) * &basis;
        let model = pca_fit(&fm(&x), r).unwrap();
        let px = pca_transform(&model, &fm(&x)).unwrap();
        let py = pca_transform(&model, &fm(&y)).unwrap();
        let full = fvd(&fm(&x), &fm(&y)).unwrap().value;
        let reduced = fvd(&px, &py).unwrap().value;
        prop_assert!((full - reduced).abs() <= 1e-6 * full.max(1.0), "{full} vs {reduced}");
    }

    #[test]
    fn pca_retains_more_variance_than_random_bases(seed in any::<u64>(), k in 1usize..4) {
        let mut rng = stream(seed);
        let d = 6;
        let scales = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(d, |i, _| (d - i) as f64));
        let x = gaussian(&mut rng, 400, d) * scales * orthogonal(&mut rng, d);
        let model = pca_fit(&fm(&x), k).unwrap();
        let retained = |z: &FeatureMatrix| {
            let m = z.to_dmatrix();
            let mean = m.row_mean();
            m.row_iter().map(|r| (r - &mean).norm_squared()).sum::<f64>()
        };
        let best = retained(&pca_transform(&model, &fm(&x)).unwrap());
        for _ in 0..20 {
            let basis = orthogonal(&mut rng, d).columns(0, k).into_owned();
            let other = retained(&fm(&(&x * basis)));
            prop_assert!(best >= other - 1e-9 * best);
        }
    }
}

fn silhouette(z: &FeatureMatrix, labels: &[i64]) -> f64 {
    let n = z.rows();
    let dist = |i: usize, j: usize| {
        z.row(i).iter().zip(z.row(j)).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
    };
    let classes: Vec<i64> = {
        let mut c = labels.to_vec();
        c.sort();
        c.dedup();
        c
    };
    let mut total = 0.0;
    for i in 0..n {
        let mean_to = |c: i64| {
            let (s, k) = (0..n)
                .filter(|&j| j != i && labels[j] == c)
                .fold((0.0, 0usize), |(s, k), j| (s + dist(i, j), k + 1));
            s / k as f64
        };
        let a = mean_to(labels[i]);
        let b = classes
            .iter()
            .filter(|&&c| c != labels[i])
            .map(|&c| mean_to(c))
            .fold(f64::INFINITY, f64::min);
        total += (b - a) / a.max(b);
    }
    total / n as f64
}

/// Eleven classes whose means differ in a 10-D subspace of a noisier 30-D
/// space; LDA should recover well-separated clusters.
#[test]
fn lda_separates_eleven_classes() {
    let mut rng = stream(9);
    let (classes, per, d) = (11usize, 60usize, 30usize);
    let means = gaussian(&mut rng, classes, 10) * 3.0;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for c in 0..classes {
        for _ in 0..per {
            let mut r: Vec<f64> = (0..d).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
            for j in 0..10 {
                r[j] = means[(c, j)] + rng.sample::<f64, _>(StandardNormal);
            }
            rows.push(r);
            labels.push(c as i64);
        }
    }
    let x = FeatureMatrix::from_rows(&rows).unwrap();
    let data = LabeledFeatures::new(x.clone(), labels.clone()).unwrap();
    let model = lda_fit(&data, classes - 1).unwrap();
    let z = lda_transform(&model, &x).unwrap();
    assert_eq!(z.cols(), 10);
    let s = silhouette(&z, &labels);
    assert!(s > 0.3, "silhouette {s}");
}
