//! Acceptance criteria. Each prints one PASS/FAIL line with the measured
//! numbers; the process exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde_json::Value;
use vdmkit::align::{align_score, invert_renormalize, priority_vector, PairwiseMatrix, PriorityVector};
use vdmkit::normality::{normality_test, NormalityTest};
use vdmkit::protocols::{
    convergence_sample_size, spearman, sweep, synth_gmm, synth_mg, ConvergenceConfig, Preprocess,
};
use vdmkit::reduce::{
    ae_loss_and_grads, ae_reconstruct, ae_split, ae_train, AeArchitecture, AeModel, AePlan,
    AeTrainConfig,
};
use vdmkit::rng::{derive_seed, stream, ChaCha8Rng};
use vdmkit::{
    discrete_ot, energy_distance, fvd, mmd2_unbiased, mw2_sq, standardize, FeatureMatrix,
    GaussianMoments, GmmModel, Gamma, KernelSpec, MetricId, MetricSpec,
};

type Check = Result<(bool, String), String>;

struct Outcome {
    pass: bool,
}

fn criterion(id: u32, name: &str, budget: Option<Duration>, f: impl FnOnce() -> Check) -> Outcome {
    let start = Instant::now();
    let res = f();
    let took = start.elapsed();
    let (mut pass, mut detail) = match res {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    if let Some(b) = budget {
        if took > b {
            pass = false;
            detail.push_str(&format!("; over the {:.0} s budget", b.as_secs_f64()));
        }
    }
    println!(
        "[{}] {id:02} {name}: {detail} ({:.2} s)",
        if pass { "PASS" } else { "FAIL" },
        took.as_secs_f64()
    );
    Outcome { pass }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize, d: usize) -> FeatureMatrix {
    let data = (0..n * d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    FeatureMatrix::new(n, d, data).unwrap()
}

// 01

fn semi_metric() -> Check {
    let id = |mean: &[f64], var: f64| GaussianMoments::isotropic(mean, var).map_err(e);
    let fd = |a: &GaussianMoments, b: &GaussianMoments| {
        vdmkit::frechet_distance(a, b).map(|r| r.value).map_err(e)
    };
    let (a, b, c) = (id(&[0.0, 0.0], 1.0)?, id(&[1.0, 1.0], 1.0)?, id(&[5.0, 5.0], 1.0)?);
    let mean_direct = fd(&a, &c)?;
    let mean_path = fd(&a, &b)? + fd(&b, &c)?;
    let (a, b, c) = (id(&[0.0, 0.0], 1.0)?, id(&[0.0, 0.0], 4.0)?, id(&[0.0, 0.0], 9.0)?);
    let cov_direct = fd(&a, &c)?;
    let cov_path = fd(&a, &b)? + fd(&b, &c)?;
    let ok = (mean_direct - 50.0).abs() <= 1e-9
        && (mean_path - 34.0).abs() <= 1e-9
        && (cov_direct - 8.0).abs() <= 1e-9
        && (cov_path - 4.0).abs() <= 1e-9;
    Ok((
        ok,
        format!("mean {mean_direct} vs {mean_path}, cov {cov_direct} vs {cov_path}"),
    ))
}

// 02

/// FD between N(0, diag(1..5)) and N(mu2, A Aᵀ), from scipy.linalg.sqrtm.
const FD5_ORACLE: f64 = 8.948378942402726;

fn fd_closed_form() -> Check {
    let n = 50_000;
    let sd1 = [1.0f64, 2.0, 3.0, 4.0, 5.0].map(f64::sqrt);
    let mu2 = [1.0, 0.0, -1.0, 0.5, 2.0];
    let a = [
        [1.0, 0.0, 0.0, 0.0, 0.0],
        [0.5, 1.0, 0.0, 0.0, 0.0],
        [0.0, -0.3, 1.5, 0.0, 0.0],
        [0.2, 0.0, 0.4, 0.8, 0.0],
        [0.0, 0.6, 0.0, -0.5, 1.2],
    ];
    let mut rng = stream(20);
    let mut x = Vec::with_capacity(n * 5);
    let mut y = Vec::with_capacity(n * 5);
    for _ in 0..n {
        for s in sd1 {
            x.push(s * rng.sample::<f64, _>(StandardNormal));
        }
        let z: Vec<f64> = (0..5).map(|_| rng.sample(StandardNormal)).collect();
        for i in 0..5 {
            y.push(mu2[i] + (0..5).map(|j| a[i][j] * z[j]).sum::<f64>());
        }
    }
    let x = FeatureMatrix::new(n, 5, x).map_err(e)?;
    let y = FeatureMatrix::new(n, 5, y).map_err(e)?;
    let v = fvd(&x, &y).map_err(e)?.value;
    let rel = (v - FD5_ORACLE).abs() / FD5_ORACLE;
    Ok((rel <= 0.02, format!("fvd {v:.5} vs analytic {FD5_ORACLE:.5}, rel error {rel:.2e}")))
}

// 03

fn naive_kernel(spec: &KernelSpec, d: usize, x: &[f64], y: &[f64]) -> f64 {
    let gamma = match spec.gamma {
        Gamma::Auto => 1.0 / d as f64,
        Gamma::Value(g) => g,
    };
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    let l1: f64 = x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum();
    match spec.family {
        vdmkit::KernelFamily::Linear => dot,
        vdmkit::KernelFamily::Polynomial => (gamma * dot + spec.coef).powi(spec.degree as i32),
        vdmkit::KernelFamily::Rbf => (-gamma * sq).exp(),
        vdmkit::KernelFamily::Laplacian => (-gamma * l1).exp(),
    }
}

fn naive_mmd(spec: &KernelSpec, x: &FeatureMatrix, y: &FeatureMatrix) -> f64 {
    let (m, n, d) = (x.rows(), y.rows(), x.cols());
    let k = |a: &[f64], b: &[f64]| naive_kernel(spec, d, a, b);
    let mut kxx = 0.0;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                kxx += k(x.row(i), x.row(j));
            }
        }
    }
    let mut kyy = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                kyy += k(y.row(i), y.row(j));
            }
        }
    }
    let mut kxy = 0.0;
    for i in 0..m {
        for j in 0..n {
            kxy += k(x.row(i), y.row(j));
        }
    }
    let (mf, nf) = (m as f64, n as f64);
    kxx / (mf * (mf - 1.0)) + kyy / (nf * (nf - 1.0)) - 2.0 * kxy / (mf * nf)
}

fn naive_energy(x: &FeatureMatrix, y: &FeatureMatrix) -> f64 {
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    let mean = |a: &FeatureMatrix, b: &FeatureMatrix| {
        let mut s = 0.0;
        for i in 0..a.rows() {
            for j in 0..b.rows() {
                s += dist(a.row(i), b.row(j));
            }
        }
        s / (a.rows() * b.rows()) as f64
    };
    2.0 * mean(x, y) - mean(x, x) - mean(y, y)
}

fn brute_force_equivalence() -> Check {
    let kernels = [
        KernelSpec::linear(),
        KernelSpec::jedi(),
        KernelSpec::polynomial(3, 0.5, 1.0),
        KernelSpec::rbf(Gamma::Auto),
        KernelSpec::laplacian(Gamma::Value(0.3)),
    ];
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for case in 0..100u64 {
        let mut rng = stream(derive_seed(3, &[case]));
        let m = rng.random_range(2..=30usize);
        let n = rng.random_range(2..=30usize);
        let d = rng.random_range(1..=8usize);
        let x = gaussian(&mut rng, m, d);
        let y = gaussian(&mut rng, n, d).map(|v| v + 0.3).map_err(e)?;
        for spec in &kernels {
            let fast = mmd2_unbiased(&x, &y, spec).map_err(e)?.value;
            worst = worst.max((fast - naive_mmd(spec, &x, &y)).abs());
        }
        let fast = energy_distance(&x, &y).map_err(e)?.value;
        worst = worst.max((fast - naive_energy(&x, &y)).abs());
        cases += 1;
    }
    Ok((
        worst <= 1e-12,
        format!("{cases} cases x 6 statistics, max |blocked - naive| = {worst:.2e}"),
    ))
}

// 04

fn converged(cfg: &ConvergenceConfig, real: &FeatureMatrix, gen: &FeatureMatrix) -> Result<Option<usize>, String> {
    Ok(convergence_sample_size(real, gen, cfg).map_err(e)?.converged_at)
}

fn fmt_at(v: Option<usize>) -> String {
    v.map_or("never".into(), |n| n.to_string())
}

fn toy_ordering() -> Check {
    let real = synth_mg(5000, 0).map_err(e)?;
    let gen = synth_mg(5000, 1).map_err(e)?;
    let mmd = converged(&ConvergenceConfig::new(MetricId::MmdPoly), &real, &gen)?;
    let fd = converged(&ConvergenceConfig::new(MetricId::Fd), &real, &gen)?;
    let pca_cfg = ConvergenceConfig {
        preprocess: Preprocess {
            standardize: false,
            pca: Some(50),
        },
        ..ConvergenceConfig::new(MetricId::Fd)
    };
    let fd_pca = converged(&pca_cfg, &real, &gen)?;
    let key = |v: Option<usize>| v.unwrap_or(usize::MAX);
    let ordering = key(mmd) < key(fd);
    let reduction = key(fd_pca) < key(fd);
    Ok((
        ordering && reduction,
        format!(
            "converged_at mmd-poly {} vs fd {} ({}), fd with PCA-50 {} ({})",
            fmt_at(mmd),
            fmt_at(fd),
            if ordering { "ok" } else { "not ordered" },
            fmt_at(fd_pca),
            if reduction { "reduced" } else { "not strictly reduced" },
        ),
    ))
}

// 05

fn gmm_vs_mg() -> Check {
    let mut parts = Vec::new();
    let mut ok = true;
    for seed in 0..3u64 {
        let real = synth_gmm(5000, 100 + seed).map_err(e)?;
        let gen = synth_mg(5000, 200 + seed).map_err(e)?;
        let cfg = |m| ConvergenceConfig {
            master_seed: seed,
            ..ConvergenceConfig::new(m)
        };
        let mmd = converged(&cfg(MetricId::MmdPoly), &real, &gen)?;
        let fd = converged(&cfg(MetricId::Fd), &real, &gen)?;
        let pass = match (mmd, fd) {
            (Some(a), Some(b)) => a as f64 <= 0.5 * b as f64,
            _ => false,
        };
        ok &= pass;
        parts.push(format!("seed {seed}: mmd-poly {} vs fd {}", fmt_at(mmd), fmt_at(fd)));
    }
    Ok((ok, format!("{} (need mmd-poly <= 0.5 fd)", parts.join(", "))))
}

// 06

/// Two unit-covariance components centred at ±5·1. The weights are unequal:
/// an equal-weight mixture is symmetric and has zero population skewness,
/// which no skewness test can detect.
fn two_blob_gmm(rng: &mut ChaCha8Rng, n: usize, d: usize) -> FeatureMatrix {
    let mut x = gaussian(rng, n, d).into_vec();
    for i in 0..n {
        let c = if rng.random_bool(0.3) { 5.0 } else { -5.0 };
        x[i * d..(i + 1) * d].iter_mut().for_each(|v| *v += c);
    }
    FeatureMatrix::new(n, d, x).unwrap()
}

fn normality_battery() -> Check {
    let mut accept = [0usize; 3];
    let mut reject = [0usize; 3];
    for seed in 0..10u64 {
        let mut rng = stream(derive_seed(6, &[seed]));
        let base = gaussian(&mut rng, 5000, 5);
        let mix = two_blob_gmm(&mut rng, 5000, 5);
        for (t, test) in NormalityTest::ALL.into_iter().enumerate() {
            accept[t] += usize::from(!normality_test(&base, test, true).map_err(e)?.reject_at_005);
            reject[t] += usize::from(normality_test(&mix, test, true).map_err(e)?.reject_at_005);
        }
    }
    let mut type1 = [0usize; 3];
    for seed in 0..200u64 {
        let mut rng = stream(derive_seed(66, &[seed]));
        let x = gaussian(&mut rng, 1000, 5);
        for (t, test) in NormalityTest::ALL.into_iter().enumerate() {
            type1[t] += usize::from(normality_test(&x, test, true).map_err(e)?.reject_at_005);
        }
    }
    let rates = type1.map(|r| r as f64 / 200.0);
    let ok = accept.iter().all(|&a| a >= 9)
        && reject.iter().all(|&r| r == 10)
        && rates.iter().all(|r| (0.02..=0.09).contains(r));
    Ok((
        ok,
        format!(
            "skew/kurt/hz: baseline accepted {accept:?}/10, mixture rejected {reject:?}/10, type-I rates {rates:?}"
        ),
    ))
}

// 07

/// Minimum cost over every basic solution of the transportation polytope:
/// each choice of `m + n - 1` cells whose equality system has a unique
/// non-negative solution.
fn lp_vertex_oracle(cost: &DMatrix<f64>, a: &[f64], b: &[f64]) -> f64 {
    let (m, n) = cost.shape();
    let cells: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let k = m + n - 1;
    let mut best = f64::INFINITY;
    let mut pick: Vec<usize> = (0..k).collect();
    loop {
        let mut sys = DMatrix::<f64>::zeros(m + n, k);
        for (c, &idx) in pick.iter().enumerate() {
            let (i, j) = cells[idx];
            sys[(i, c)] = 1.0;
            sys[(m + j, c)] = 1.0;
        }
        let rhs = DVector::from_iterator(m + n, a.iter().chain(b).copied());
        let svd = sys.clone().svd(true, true);
        if svd.rank(1e-10) == k {
            if let Ok(sol) = svd.solve(&rhs, 1e-12) {
                let residual = (&sys * &sol - &rhs).norm();
                if residual < 1e-10 && sol.iter().all(|&v| v >= -1e-12) {
                    let c: f64 = pick
                        .iter()
                        .zip(sol.iter())
                        .map(|(&idx, v)| cost[cells[idx]] * v)
                        .sum();
                    best = best.min(c);
                }
            }
        }
        // Next k-combination of cells.
        let mut i = k;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if pick[i] < cells.len() - k + i {
                break;
            }
            if i == 0 {
                return best;
            }
        }
        pick[i] += 1;
        for j in i + 1..k {
            pick[j] = pick[j - 1] + 1;
        }
    }
}

fn random_simplex(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

fn random_gmm(rng: &mut ChaCha8Rng, c: usize, d: usize) -> GmmModel {
    let weights = random_simplex(rng, c);
    let means = (0..c)
        .map(|_| DVector::from_fn(d, |_, _| rng.random_range(-3.0..3.0)))
        .collect();
    let covs = (0..c)
        .map(|_| {
            let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
            &a * a.transpose() + DMatrix::identity(d, d) * 0.5
        })
        .collect();
    GmmModel::new(weights, means, covs).unwrap()
}

fn mw2_reductions() -> Check {
    let mut rng = stream(7);
    let p = random_gmm(&mut rng, 4, 3);
    let self_dist = mw2_sq(&p, &p.clone()).map_err(e)?.value;

    let x = gaussian(&mut rng, 400, 4);
    let y = gaussian(&mut rng, 300, 4).map(|v| 1.5 * v + 0.2).map_err(e)?;
    let mut spec = MetricSpec::new(MetricId::Mw2);
    spec.clusters = 1;
    let c1 = spec.compute(&x, &y).map_err(e)?.value;
    let f = fvd(&x, &y).map_err(e)?.value;

    let mut worst: f64 = 0.0;
    for case in 0..25 {
        let (m, n) = if case % 2 == 0 { (3, 3) } else { (2, 4) };
        let cost = DMatrix::from_fn(m, n, |_, _| rng.random_range(0.0..10.0));
        let a = random_simplex(&mut rng, m);
        let b = random_simplex(&mut rng, n);
        let got = discrete_ot(&cost, &a, &b).map_err(e)?.cost;
        worst = worst.max((got - lp_vertex_oracle(&cost, &a, &b)).abs());
    }
    let ok = self_dist.abs() <= 1e-10 && c1.to_bits() == f.to_bits() && worst <= 1e-9;
    Ok((
        ok,
        format!(
            "identical mixtures {self_dist:.2e}, c=1 {c1} vs fvd {f} ({}), OT vs LP oracle max diff {worst:.2e} over 25 instances",
            if c1.to_bits() == f.to_bits() { "bit-identical" } else { "differ" }
        ),
    ))
}

// 08

/// Exact rational evaluation of the column-normalize / row-average procedure
/// on the UCF-101 pairwise table.
const TABLE3_PRIORITY: [f64; 4] = [
    0.04563492063492063,
    0.3655753968253968,
    0.16417500140079566,
    0.4246146811388869,
];

fn ahp_pipeline() -> Check {
    let labels: Vec<String> = ["blur-high", "blur-med", "elastic-med", "salt-pepper"]
        .map(String::from)
        .to_vec();
    let uniform: Vec<Vec<f64>> = (0..4)
        .map(|i| (0..4).map(|j| if i == j { 0.0 } else { 0.5 }).collect())
        .collect();
    let u = priority_vector(&PairwiseMatrix::new(labels.clone(), uniform).map_err(e)?).map_err(e)?;
    let uniform_err = u.values.iter().map(|v| (v - 0.25).abs()).fold(0.0, f64::max);

    let table = vec![
        vec![0.00, 0.00, 12.50, 2.50],
        vec![93.75, 0.00, 68.75, 16.25],
        vec![81.25, 16.25, 0.00, 3.75],
        vec![95.00, 69.68, 93.75, 0.00],
    ];
    let human = PairwiseMatrix::new(labels.clone(), table).map_err(e)?;
    let pv = priority_vector(&human).map_err(e)?;
    let table_err = pv
        .values
        .iter()
        .zip(TABLE3_PRIORITY)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let v = PriorityVector {
        labels: labels.clone(),
        values: vec![0.1, 0.2, 0.3, 0.4],
    };
    let twice = invert_renormalize(&invert_renormalize(&v).map_err(e)?).map_err(e)?;
    let involution_err = twice
        .values
        .iter()
        .zip(&v.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let metric: BTreeMap<String, f64> = labels.iter().cloned().zip([3.0, 1.2, 2.2, 0.7]).collect();
    let scaled: BTreeMap<String, f64> = metric.iter().map(|(k, v)| (k.clone(), v * 37.5)).collect();
    let s1 = align_score(&human, &metric).map_err(e)?;
    let s2 = align_score(&human, &scaled).map_err(e)?;
    let scale_err = (s1 - s2).abs();

    let ok = uniform_err <= 1e-10 && involution_err <= 1e-12 && table_err <= 1e-10 && scale_err <= 1e-12;
    Ok((
        ok,
        format!(
            "uniform {uniform_err:.1e}, involution {involution_err:.1e}, table vs oracle {table_err:.1e}, scale invariance {scale_err:.1e}"
        ),
    ))
}

// 09

fn spearman_cases() -> Check {
    let rho = spearman(&[1.0, 2.0, 3.0, 4.0, 5.0], &[1.0, 3.0, 2.0, 5.0, 4.0]).map_err(e)?;
    let steps: Vec<f64> = (1..=8).map(|s| s as f64 * 1000.0).collect();
    let metric: Vec<f64> = steps.iter().map(|s| 500.0 / s + 3.0).collect();
    let decreasing = spearman(&steps, &metric).map_err(e)?;
    let ok = (rho - 0.8).abs() <= 1e-12 && decreasing == -1.0;
    Ok((ok, format!("hand case {rho}, decreasing stub {decreasing}")))
}

// 10

fn sweep_monotone() -> Check {
    // Each level degrades the reference set itself with the same noise
    // draw scaled up, like distorting the same clips more strongly.
    let real = synth_mg(1000, 40).map_err(e)?;
    let levels = [0.0, 0.5, 1.0, 1.5, 2.0];
    let noise = gaussian(&mut stream(42), real.rows(), real.cols());
    let series: Vec<FeatureMatrix> = levels
        .iter()
        .map(|&s| {
            let data = real.as_slice().iter().zip(noise.as_slice()).map(|(b, z)| b + s * z).collect();
            FeatureMatrix::new(real.rows(), real.cols(), data).unwrap()
        })
        .collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for id in [MetricId::Fd, MetricId::Energy, MetricId::MmdPoly] {
        let r = sweep(&real, &series, Some(&levels), &MetricSpec::new(id), 0, None).map_err(e)?;
        let inc = r.values.windows(2).all(|w| w[1] > w[0]);
        ok &= inc;
        let vals: Vec<String> = r.values.iter().map(|v| format!("{v:.4}")).collect();
        parts.push(format!("{id} [{}]", vals.join(", ")));
    }
    Ok((ok, parts.join("; ")))
}

// 11

fn autoencoder() -> Check {
    let dims = |d, plan| AeArchitecture::new(d, plan).map(|a| a.encoder_dims()).map_err(e);
    let i3d = dims(400, AePlan::I3d)?;
    let vmae = dims(1408, AePlan::Vit)?;
    let vjepa = dims(1280, AePlan::Vit)?;
    let dims_ok = i3d == [400, 200, 100, 66] && vmae == [1408, 469, 352, 176] && vjepa == [1280, 426, 320, 160];

    // Central differences against the analytic gradient on a small net.
    let arch = AeArchitecture::new(6, AePlan::Custom(vec![4, 3])).map_err(e)?;
    let mut model = AeModel::init(arch, 5);
    let mut rng = stream(55);
    for l in &mut model.layers {
        l.bias.apply(|b| *b = rng.random_range(-0.5..0.5));
    }
    let batch = gaussian(&mut rng, 7, 6);
    let (_, grads) = ae_loss_and_grads(&model, &batch).map_err(e)?;
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for l in 0..model.layers.len() {
        for which in 0..2 {
            let len = if which == 0 { model.layers[l].weight.len() } else { model.layers[l].bias.len() };
            for i in 0..len {
                let probe = |delta: f64| {
                    let mut m = model.clone();
                    let p = if which == 0 {
                        &mut m.layers[l].weight.as_mut_slice()[i]
                    } else {
                        &mut m.layers[l].bias.as_mut_slice()[i]
                    };
                    *p += delta;
                    ae_loss_and_grads(&m, &batch).unwrap().0
                };
                let numeric = (probe(eps) - probe(-eps)) / (2.0 * eps);
                let analytic = if which == 0 {
                    grads[l].weight.as_slice()[i]
                } else {
                    grads[l].bias.as_slice()[i]
                };
                let scale = numeric.abs().max(analytic.abs()).max(1e-6);
                worst = worst.max((numeric - analytic).abs() / scale);
            }
        }
    }

    // Rank-10 data at the I3D feature width, default training settings.
    let (n, d, r) = (5000, 400, 10);
    let z = gaussian(&mut rng, n, r);
    let w = gaussian(&mut rng, r, d);
    let mut x = vec![0.0; n * d];
    for i in 0..n {
        for j in 0..d {
            x[i * d + j] = (0..r).map(|k| z.row(i)[k] * w.row(k)[j]).sum::<f64>() / (r as f64).sqrt();
        }
    }
    let x = standardize(&FeatureMatrix::new(n, d, x).map_err(e)?, None).map_err(e)?.0;
    let arch = AeArchitecture::new(d, AePlan::I3d).map_err(e)?;
    let cfg = AeTrainConfig::default();
    let seed = 11;
    let trained = ae_train(&x, arch, &cfg, seed).map_err(e)?;
    let (_, val) = ae_split(n, cfg.val_fraction, seed);
    let xv = x.select_rows(&val).map_err(e)?;
    let rec = ae_reconstruct(&trained, &xv).map_err(e)?;
    let mse = rec
        .as_slice()
        .iter()
        .zip(xv.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / xv.as_slice().len() as f64;
    let ok = dims_ok && worst <= 1e-4 && mse < 0.05;
    Ok((
        ok,
        format!(
            "dims {i3d:?} {vmae:?} {vjepa:?}, gradient max rel error {worst:.1e}, rank-10 validation MSE {mse:.4}"
        ),
    ))
}

// 12

fn strip_elapsed(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.remove("elapsed_ms");
            m.values_mut().for_each(strip_elapsed);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_elapsed),
        _ => {}
    }
}

fn cli_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(e)?;
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let exe = env!("CARGO_BIN_EXE_vdmkit");
    let run = |args: &[String], threads: &str| -> Result<String, String> {
        let out = Command::new(exe)
            .env("RUST_LOG", "warn")
            .arg("--threads")
            .arg(threads)
            .args(args)
            .output()
            .map_err(e)?;
        if !out.status.success() {
            return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)));
        }
        let mut v: Value = serde_json::from_slice(&out.stdout).map_err(e)?;
        strip_elapsed(&mut v);
        Ok(serde_json::to_string(&v).map_err(e)?)
    };
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let (a, b, g) = (p("a.npy"), p("b.npy"), p("g.npy"));
    let setup = [
        s(&["synth", "--dist", "mg", "--n", "800", "--seed", "1", "--out", &a]),
        s(&["synth", "--dist", "mg", "--n", "800", "--seed", "2", "--out", &b]),
        s(&["synth", "--dist", "gmm", "--n", "800", "--seed", "3", "--out", &g, "--labels-out", &p("l.npy")]),
    ];
    for cmd in &setup {
        run(cmd, "1")?;
    }
    let commands = [
        s(&["dist", "--metric", "fd", "--real", &a, "--gen", &g]),
        s(&["dist", "--metric", "jedi", "--real", &a, "--gen", &b, "--n-sub", "500", "--seed", "3"]),
        s(&["dist", "--metric", "mmd-lap", "--real", &a, "--gen", &g]),
        s(&["dist", "--metric", "energy", "--real", &a, "--gen", &g]),
        s(&["dist", "--metric", "mw2", "--real", &a, "--gen", &g, "--clusters", "3", "--seed", "8"]),
        s(&["converge", "--metric", "mmd-poly", "--real", &a, "--gen", &g, "--target-n", "600", "--seed", "4"]),
        s(&["rate-curve", "--metric", "fd", "--real", &a, "--gen", &b, "--target-n", "600", "--seed", "5"]),
        s(&["sweep", "--metric", "energy", "--real", &a, "--gen", &b, "--gen", &g, "--n-sub", "400", "--seed", "6"]),
        s(&["normality", "--in", &g]),
        s(&["reduce", "--method", "ae", "--in", &a, "--epochs", "3", "--seed", "7"]),
        s(&["reduce", "--method", "lda", "--in", &g, "--labels", &p("l.npy")]),
        s(&["fit-gmm", "--in", &g, "--seed", "9"]),
        s(&["rankcorr", "--xs", "1,2,3,4", "--ys", "4,2,3,1"]),
        s(&["info"]),
    ];
    let mut mismatched = Vec::new();
    for cmd in &commands {
        let outs = [run(cmd, "1")?, run(cmd, "1")?, run(cmd, "4")?];
        if outs[0] != outs[1] || outs[0] != outs[2] {
            mismatched.push(cmd[0].clone());
        }
    }
    let mut files_ok = true;
    for name in ["s1.npy", "s2.npy"] {
        run(&s(&["synth", "--dist", "gmm", "--n", "500", "--seed", "7", "--out", &p(name)]), "3")?;
    }
    files_ok &= std::fs::read(p("s1.npy")).map_err(e)? == std::fs::read(p("s2.npy")).map_err(e)?;
    Ok((
        mismatched.is_empty() && files_ok,
        format!(
            "{} commands x (2 runs at 1 thread + 1 at 4 threads): {} mismatches; synth files identical: {files_ok}",
            commands.len(),
            mismatched.len()
        ),
    ))
}

fn main() {
    let outcomes = [
        criterion(1, "semi-metric counterexamples", Some(Duration::from_secs(1)), semi_metric),
        criterion(2, "closed-form FD oracle at n=50000", Some(Duration::from_secs(30)), fd_closed_form),
        criterion(3, "MMD/energy blocked vs naive", None, brute_force_equivalence),
        criterion(4, "toy ordering and PCA speedup", Some(Duration::from_secs(300)), toy_ordering),
        criterion(5, "sample-efficiency substitute (gmm vs mg)", None, gmm_vs_mg),
        criterion(6, "normality battery", None, normality_battery),
        criterion(7, "MW2 reductions", None, mw2_reductions),
        criterion(8, "AHP pipeline", None, ahp_pipeline),
        criterion(9, "Spearman substitutes", None, spearman_cases),
        criterion(10, "sweep monotonicity", None, sweep_monotone),
        criterion(11, "autoencoder", None, autoencoder),
        criterion(12, "CLI determinism", None, cli_determinism),
    ];
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!("acceptance: {passed}/{} criteria passed", outcomes.len());
    if passed != outcomes.len() {
        std::process::exit(1);
    }
}
