//! Feature sets: the n×d matrices every metric consumes, plus the manifest that
//! describes where they came from.

use std::fmt;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, invalid, Error, Result};
use crate::rng::{sample_indices, stream};

/// Lower bound applied to per-column standard deviations.
pub const STD_FLOOR: f64 = 1e-8;

/// An n×d matrix of per-clip feature vectors, stored row-major in f64.
#[derive(Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for FeatureMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FeatureMatrix")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .finish_non_exhaustive()
    }
}

impl FeatureMatrix {
    /// Builds a matrix from row-major data, rejecting empty shapes and
    /// non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid(format!(
                "feature matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(invalid(format!(
                "data length {} does not match shape {rows}x{cols}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n * d);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != d {
                return Err(invalid(format!(
                    "row {i} has length {}, expected {d}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(n, d, data)
    }

    /// Converts a column-major nalgebra matrix (one sample per row).
    pub fn from_dmatrix(m: &DMatrix<f64>) -> Result<Self> {
        let (n, d) = m.shape();
        let mut data = Vec::with_capacity(n * d);
        for i in 0..n {
            data.extend(m.row(i).iter().copied());
        }
        Self::new(n, d, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.cols)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.iter_rows().map(|r| r[j]).collect()
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    /// Copies the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(invalid("row selection is empty"));
        }
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            if i >= self.rows {
                return Err(invalid(format!("row index {i} out of range {}", self.rows)));
            }
            data.extend_from_slice(self.row(i));
        }
        Ok(Self {
            rows: indices.len(),
            cols: self.cols,
            data,
        })
    }

    /// Stacks matrices vertically.
    pub fn vstack(parts: &[FeatureMatrix]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| invalid("nothing to stack"))?;
        let mut data = Vec::new();
        let mut rows = 0;
        for p in parts {
            check_dims(first.cols, p.cols)?;
            data.extend_from_slice(&p.data);
            rows += p.rows;
        }
        Ok(Self {
            rows,
            cols: first.cols,
            data,
        })
    }

    /// Applies `f` to every entry. The result is re-validated.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.rows, self.cols, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.cols];
        for r in self.iter_rows() {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        let n = self.rows as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }
}

/// Features with one integer class label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFeatures {
    pub matrix: FeatureMatrix,
    pub labels: Vec<i64>,
}

impl LabeledFeatures {
    pub fn new(matrix: FeatureMatrix, labels: Vec<i64>) -> Result<Self> {
        check_dims(matrix.rows(), labels.len())?;
        Ok(Self { matrix, labels })
    }

    /// Distinct labels in ascending order.
    pub fn classes(&self) -> Vec<i64> {
        let mut c = self.labels.clone();
        c.sort_unstable();
        c.dedup();
        c
    }
}

/// Pretrained networks whose features the toolkit understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extractor {
    I3d,
    VideomaePt,
    VideomaeSsv2,
    VjepaPt,
    VjepaSsv2,
    Synthetic,
}

impl Extractor {
    pub const ALL: [Extractor; 6] = [
        Extractor::I3d,
        Extractor::VideomaePt,
        Extractor::VideomaeSsv2,
        Extractor::VjepaPt,
        Extractor::VjepaSsv2,
        Extractor::Synthetic,
    ];

    /// Feature dimension emitted by the extractor; `None` for synthetic data.
    pub fn expected_dim(self) -> Option<usize> {
        match self {
            Extractor::I3d => Some(400),
            Extractor::VideomaePt | Extractor::VideomaeSsv2 => Some(1408),
            Extractor::VjepaPt | Extractor::VjepaSsv2 => Some(1280),
            Extractor::Synthetic => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Extractor::I3d => "i3d",
            Extractor::VideomaePt => "videomae_pt",
            Extractor::VideomaeSsv2 => "videomae_ssv2",
            Extractor::VjepaPt => "vjepa_pt",
            Extractor::VjepaSsv2 => "vjepa_ssv2",
            Extractor::Synthetic => "synthetic",
        }
    }
}

/// Describes a feature set on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub dataset: String,
    pub extractor: Extractor,
    pub clip_len: usize,
    pub dim: usize,
    pub files: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::IoAt {
            path: path.to_owned(),
            source,
        })?;
        let m: Manifest = serde_json::from_str(&text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_string_pretty(self)?).map_err(|source| {
            Error::IoAt {
                path: path.to_owned(),
                source,
            }
        })
    }

    /// Checks the declared dimension against the extractor table.
    pub fn validate(&self) -> Result<()> {
        if let Some(d) = self.extractor.expected_dim() {
            check_dims(d, self.dim)?;
        }
        if self.dim == 0 {
            return Err(invalid("manifest dim must be positive"));
        }
        Ok(())
    }

    /// Checks a loaded matrix against the manifest.
    pub fn check_matrix(&self, m: &FeatureMatrix) -> Result<()> {
        self.validate()?;
        check_dims(self.dim, m.cols())
    }

    /// Reads every referenced file (relative paths resolve against `base`)
    /// and stacks them.
    pub fn load_features(&self, base: impl AsRef<Path>) -> Result<FeatureMatrix> {
        self.validate()?;
        if self.files.is_empty() {
            return Err(invalid("manifest lists no files"));
        }
        let parts = self
            .files
            .iter()
            .map(|f| {
                let p = if f.is_absolute() {
                    f.clone()
                } else {
                    base.as_ref().join(f)
                };
                let m = crate::npy::read_array(&p)?;
                check_dims(self.dim, m.cols())?;
                Ok(m)
            })
            .collect::<Result<Vec<_>>>()?;
        FeatureMatrix::vstack(&parts)
    }
}

/// Per-column location and scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Columns whose standard deviation was raised to [`STD_FLOOR`].
    #[serde(default)]
    pub floored: Vec<usize>,
}

impl ScalingStats {
    pub fn fit(m: &FeatureMatrix) -> Self {
        let mean = m.column_means();
        let mut var = vec![0.0; m.cols()];
        for r in m.iter_rows() {
            for ((v, x), mu) in var.iter_mut().zip(r).zip(&mean) {
                let c = x - mu;
                *v += c * c;
            }
        }
        let n = m.rows() as f64;
        let mut floored = Vec::new();
        let std = var
            .into_iter()
            .enumerate()
            .map(|(j, v)| {
                let s = (v / n).sqrt();
                if s < STD_FLOOR {
                    floored.push(j);
                    STD_FLOOR
                } else {
                    s
                }
            })
            .collect();
        Self { mean, std, floored }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Standardizes columns to zero mean and unit variance.
///
/// Without `stats`, the statistics are estimated from `m` (training path) and
/// returned. With `stats`, they are applied as given (test path).
pub fn standardize(
    m: &FeatureMatrix,
    stats: Option<&ScalingStats>,
) -> Result<(FeatureMatrix, ScalingStats)> {
    let stats = match stats {
        Some(s) => {
            check_dims(s.dim(), m.cols())?;
            if s.std.len() != s.dim() || s.std.iter().any(|&v| !(v >= STD_FLOOR)) {
                return Err(invalid("scaling stats std must be >= the floor"));
            }
            s.clone()
        }
        None => {
            let s = ScalingStats::fit(m);
            for &j in &s.floored {
                log::warn!("column {j} has zero variance; std floored to {STD_FLOOR:e}");
            }
            s
        }
    };
    let d = m.cols();
    let mut data = Vec::with_capacity(m.rows() * d);
    for r in m.iter_rows() {
        data.extend(
            r.iter()
                .zip(&stats.mean)
                .zip(&stats.std)
                .map(|((x, mu), s)| (x - mu) / s),
        );
    }
    Ok((FeatureMatrix::new(m.rows(), d, data)?, stats))
}

/// Draws `n_sub` rows without replacement. The same `(m, n_sub, seed)` always
/// yields the same rows in the same order.
pub fn subsample(m: &FeatureMatrix, n_sub: usize, seed: u64) -> Result<FeatureMatrix> {
    let mut rng = stream(seed);
    subsample_with(m, n_sub, &mut rng)
}

pub(crate) fn subsample_with(
    m: &FeatureMatrix,
    n_sub: usize,
    rng: &mut crate::rng::ChaCha8Rng,
) -> Result<FeatureMatrix> {
    if n_sub == 0 || n_sub > m.rows() {
        return Err(invalid(format!(
            "subsample size {n_sub} must be in 1..={}",
            m.rows()
        )));
    }
    let idx = sample_indices(rng, m.rows(), n_sub);
    m.select_rows(&idx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gaussian(n: usize, d: usize, shift: f64, seed: u64) -> FeatureMatrix {
        let mut rng = stream(seed);
        let data = (0..n * d)
            .map(|_| rng.sample::<f64, _>(StandardNormal) + shift)
            .collect();
        FeatureMatrix::new(n, d, data).unwrap()
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(FeatureMatrix::new(0, 3, vec![]).is_err());
        match FeatureMatrix::new(2, 2, vec![0.0, 1.0, f64::NAN, 0.0]) {
            Err(Error::NonFinite { row, col }) => assert_eq!((row, col), (1, 0)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn constant_column_is_floored() {
        let m = FeatureMatrix::from_rows(&[[5.0, 1.0], [5.0, 2.0], [5.0, 3.0]]).unwrap();
        let (z, stats) = standardize(&m, None).unwrap();
        assert_eq!(stats.floored, vec![0]);
        assert_eq!(stats.std[0], STD_FLOOR);
        assert!(z.column(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn restandardizing_is_idempotent() {
        let m = gaussian(500, 4, 3.0, 1);
        let (z, _) = standardize(&m, None).unwrap();
        let (z2, stats) = standardize(&z, None).unwrap();
        for j in 0..4 {
            assert!(stats.mean[j].abs() < 1e-12);
            assert!((stats.std[j] - 1.0).abs() < 1e-12);
        }
        assert_eq!(z2.shape(), z.shape());
    }

    #[test]
    fn test_split_keeps_train_statistics() {
        // Train and test come from different Gaussians; applying the train
        // statistics must not re-center the test set.
        let train = gaussian(400, 3, 0.0, 2);
        let test = gaussian(400, 3, 1.5, 3);
        let (_, stats) = standardize(&train, None).unwrap();
        let (applied, _) = standardize(&test, Some(&stats)).unwrap();
        let (refit, _) = standardize(&test, None).unwrap();
        let applied_mean = applied.column_means();
        let refit_mean = refit.column_means();
        for j in 0..3 {
            assert!(refit_mean[j].abs() < 1e-12);
            assert!(applied_mean[j] > 1.0, "column {j}: {}", applied_mean[j]);
        }
    }

    #[test]
    fn stats_dimension_is_checked() {
        let m = gaussian(10, 3, 0.0, 4);
        let (_, stats) = standardize(&gaussian(10, 2, 0.0, 5), None).unwrap();
        assert!(matches!(
            standardize(&m, Some(&stats)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn subsample_contract() {
        let m = gaussian(20, 2, 0.0, 6);
        let all = subsample(&m, 20, 9).unwrap();
        let mut a: Vec<_> = all.iter_rows().map(|r| r[0].to_bits()).collect();
        let mut b: Vec<_> = m.iter_rows().map(|r| r[0].to_bits()).collect();
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);

        assert_eq!(subsample(&m, 7, 11).unwrap(), subsample(&m, 7, 11).unwrap());
        assert!(subsample(&m, 21, 1).is_err());
        assert!(subsample(&m, 0, 1).is_err());
    }

    #[test]
    fn different_seeds_select_different_rows() {
        let m = gaussian(5000, 1, 0.0, 7);
        let key = |s: &FeatureMatrix| {
            let mut v: Vec<u64> = s.iter_rows().map(|r| r[0].to_bits()).collect();
            v.sort_unstable();
            v
        };
        assert_ne!(
            key(&subsample(&m, 100, 1).unwrap()),
            key(&subsample(&m, 100, 2).unwrap())
        );
    }

    #[test]
    fn single_row_draws_are_uniform() {
        let m = FeatureMatrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]).unwrap();
        let mut counts = [0usize; 4];
        for seed in 0..10_000u64 {
            let s = subsample(&m, 1, seed).unwrap();
            counts[s.row(0)[0] as usize] += 1;
        }
        for c in counts {
            assert!((2350..=2650).contains(&c), "{counts:?}");
        }
    }

    #[test]
    fn manifest_dimension_table() {
        let mut man = Manifest {
            dataset: "ucf101".into(),
            extractor: Extractor::I3d,
            clip_len: 16,
            dim: 400,
            files: vec![],
            seed: None,
        };
        assert!(man.validate().is_ok());
        assert!(man.check_matrix(&gaussian(3, 400, 0.0, 1)).is_ok());
        assert!(matches!(
            man.check_matrix(&gaussian(3, 1280, 0.0, 1)),
            Err(Error::DimensionMismatch {
                expected: 400,
                found: 1280
            })
        ));
        man.dim = 1280;
        assert!(man.validate().is_err());
        man.extractor = Extractor::VjepaSsv2;
        assert!(man.validate().is_ok());
        man.extractor = Extractor::Synthetic;
        man.dim = 7;
        assert!(man.validate().is_ok());
    }

    #[test]
    fn manifest_json_field_names() {
        let text = r#"{"dataset":"sky","extractor":"videomae_ssv2","clip_len":32,
                       "dim":1408,"files":["a.npy"],"seed":3}"#;
        let m: Manifest = serde_json::from_str(text).unwrap();
        assert_eq!(m.extractor, Extractor::VideomaeSsv2);
        assert_eq!(m.seed, Some(3));
        m.validate().unwrap();
    }
}
