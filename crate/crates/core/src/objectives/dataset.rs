//! Tabular datasets: CSV ingestion, synthetic generators, label noise.

use std::path::Path;

use crate::error::{Error, Result};
use crate::numkit::RngStream;
use crate::scalar::Real;

/// Feature matrix with integer labels and a mask marking corrupted labels.
#[derive(Clone, Debug)]
pub struct Dataset<R> {
    features: Vec<R>, // n x p, row-major
    labels: Vec<usize>,
    noise_mask: Vec<bool>,
    n: usize,
    p: usize,
    n_classes: usize,
}

impl<R: Real> Dataset<R> {
    pub fn new(features: Vec<R>, labels: Vec<usize>, p: usize, n_classes: usize) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::invalid("dataset must contain at least one example"));
        }
        if features.len() != n * p {
            return Err(Error::DimMismatch {
                context: "dataset features",
                expected: n * p,
                got: features.len(),
            });
        }
        if n_classes == 0 || labels.iter().any(|&l| l >= n_classes) {
            return Err(Error::invalid("labels must lie in [0, n_classes)"));
        }
        Ok(Dataset {
            features,
            labels,
            noise_mask: vec![false; n],
            n,
            p,
            n_classes,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn feature_row(&self, i: usize) -> &[R] {
        &self.features[i * self.p..(i + 1) * self.p]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn noise_mask(&self) -> &[bool] {
        &self.noise_mask
    }

    /// Split off the last `n_tail` rows (row order preserved on both sides).
    pub fn split_tail(&self, n_tail: usize) -> Result<(Dataset<R>, Dataset<R>)> {
        if n_tail == 0 || n_tail >= self.n {
            return Err(Error::invalid(format!(
                "split_tail: n_tail = {n_tail} must be in 1..{}",
                self.n
            )));
        }
        let cut = self.n - n_tail;
        let head = Dataset {
            features: self.features[..cut * self.p].to_vec(),
            labels: self.labels[..cut].to_vec(),
            noise_mask: self.noise_mask[..cut].to_vec(),
            n: cut,
            p: self.p,
            n_classes: self.n_classes,
        };
        let tail = Dataset {
            features: self.features[cut * self.p..].to_vec(),
            labels: self.labels[cut..].to_vec(),
            noise_mask: self.noise_mask[cut..].to_vec(),
            n: n_tail,
            p: self.p,
            n_classes: self.n_classes,
        };
        Ok((head, tail))
    }

    /// Parse `p` float columns plus one integer label column per row.
    /// A first line whose first field is non-numeric is treated as a header
    /// and skipped. Errors carry 1-based line numbers.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset<R>> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::Parse {
            line: 0,
            message: format!("cannot read {}: {e}", path.as_ref().display()),
        })?;
        Self::parse_csv(&text)
    }

    pub fn parse_csv(text: &str) -> Result<Dataset<R>> {
        let mut features: Vec<R> = Vec::new();
        let mut labels: Vec<usize> = Vec::new();
        let mut p: Option<usize> = None;

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if idx == 0 && fields[0].parse::<f64>().is_err() {
                continue; // header row
            }
            if fields.len() < 2 {
                return Err(Error::Parse {
                    line: line_no,
                    message: "expected at least one feature and a label".into(),
                });
            }
            let row_p = fields.len() - 1;
            match p {
                None => p = Some(row_p),
                Some(expected) if expected != row_p => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("ragged row: {row_p} features, expected {expected}"),
                    });
                }
                _ => {}
            }
            for field in &fields[..row_p] {
                let v: f64 = field.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("non-numeric feature {field:?}"),
                })?;
                features.push(R::of(v));
            }
            let label: i64 = fields[row_p].parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("non-integer label {:?}", fields[row_p]),
            })?;
            if label < 0 {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("negative label {label}"),
                });
            }
            labels.push(label as usize);
        }

        let p = p.ok_or(Error::Parse {
            line: 0,
            message: "empty file".into(),
        })?;
        let n_classes = labels.iter().max().map_or(0, |m| m + 1);
        Dataset::new(features, labels, p, n_classes.max(1))
    }

    /// Corrupt exactly `round(fraction * n)` labels, each replaced by a
    /// uniformly chosen *different* label; the mask records which rows were
    /// touched. Deterministic given the stream.
    pub fn inject_label_noise(&self, fraction: f64, rng: &mut RngStream) -> Result<Dataset<R>> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::invalid(format!(
                "noise fraction {fraction} outside [0, 1]"
            )));
        }
        if self.n_classes < 2 {
            return Err(Error::invalid("label noise requires at least 2 classes"));
        }
        let k = (fraction * self.n as f64).round() as usize;
        let mut out = self.clone();
        out.noise_mask = vec![false; self.n];

        // Partial Fisher-Yates: the first k entries of `order` are a
        // uniform sample without replacement.
        let mut order: Vec<usize> = (0..self.n).collect();
        for i in 0..k.min(self.n) {
            let j = i + rng.next_index(self.n - i);
            order.swap(i, j);
        }
        for &row in order.iter().take(k) {
            let old = out.labels[row];
            let mut new = rng.next_index(self.n_classes - 1);
            if new >= old {
                new += 1;
            }
            out.labels[row] = new;
            out.noise_mask[row] = true;
        }
        Ok(out)
    }
}

/// Isotropic Gaussian blobs with class means spread on a circle of radius
/// `separation` (first two coordinates; higher coordinates are pure noise).
/// Labels cycle deterministically, features come from the stream.
pub fn gaussian_blobs<R: Real>(
    n: usize,
    p: usize,
    n_classes: usize,
    separation: f64,
    rng: &mut RngStream,
) -> Dataset<R> {
    assert!(n >= 1 && p >= 1 && n_classes >= 2);
    let mut features = Vec::with_capacity(n * p);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % n_classes;
        let angle = 2.0 * std::f64::consts::PI * class as f64 / n_classes as f64;
        for j in 0..p {
            let mean = match j {
                0 => separation * angle.cos(),
                1 => separation * angle.sin(),
                _ => 0.0,
            };
            features.push(R::of(mean + rng.next_gaussian()));
        }
        labels.push(class);
    }
    Dataset::new(features, labels, p, n_classes).expect("generator invariants")
}

/// Gaussian features labeled by the argmax logit of a random one-hidden
/// layer tanh teacher network.
pub fn teacher_mlp_data<R: Real>(
    n: usize,
    p: usize,
    hidden: usize,
    n_classes: usize,
    rng: &mut RngStream,
) -> Dataset<R> {
    assert!(n >= 1 && p >= 1 && hidden >= 1 && n_classes >= 2);
    let w1: Vec<f64> = (0..hidden * p).map(|_| rng.next_gaussian()).collect();
    let w2: Vec<f64> = (0..n_classes * hidden)
        .map(|_| rng.next_gaussian())
        .collect();

    let mut features = Vec::with_capacity(n * p);
    let mut labels = Vec::with_capacity(n);
    let mut row = vec![0.0_f64; p];
    for _ in 0..n {
        for x in row.iter_mut() {
            *x = rng.next_gaussian();
        }
        let mut best = (0usize, f64::NEG_INFINITY);
        for c in 0..n_classes {
            let mut logit = 0.0;
            for j in 0..hidden {
                let pre: f64 = (0..p).map(|k| w1[j * p + k] * row[k]).sum();
                logit += w2[c * hidden + j] * pre.tanh();
            }
            if logit > best.1 {
                best = (c, logit);
            }
        }
        features.extend(row.iter().map(|&x| R::of(x)));
        labels.push(best.0);
    }
    Dataset::new(features, labels, p, n_classes).expect("generator invariants")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_plain_rows() {
        let ds: Dataset<f64> = Dataset::parse_csv("1.0,2.0,0\n3.0,4.0,1").unwrap();
        assert_eq!(ds.n(), 2);
        assert_eq!(ds.p(), 2);
        assert_eq!(ds.label(0), 0);
        assert_eq!(ds.label(1), 1);
        assert_eq!(ds.feature_row(1), &[3.0, 4.0]);
    }

    #[test]
    fn header_row_is_skipped() {
        let ds: Dataset<f64> = Dataset::parse_csv("x1,x2,label\n1.0,2.0,0\n3.0,4.0,1").unwrap();
        assert_eq!(ds.n(), 2);
    }

    #[test]
    fn ragged_row_names_the_line() {
        let err = Dataset::<f64>::parse_csv("1.0,2.0,0\n3.0,1").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn non_numeric_field_is_reported() {
        let err = Dataset::<f64>::parse_csv("1.0,2.0,0\nfoo,4.0,1").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_an_error() {
        assert!(Dataset::<f64>::parse_csv("").is_err());
    }

    #[test]
    fn zero_noise_is_identity() {
        let ds: Dataset<f64> = Dataset::parse_csv("1,0\n2,1\n3,0\n4,1").unwrap();
        let noisy = ds.inject_label_noise(0.0, &mut RngStream::new(1)).unwrap();
        assert_eq!(noisy.labels, ds.labels);
        assert!(noisy.noise_mask().iter().all(|&m| !m));
    }

    #[test]
    fn full_noise_flips_binary_labels() {
        let ds: Dataset<f64> = Dataset::parse_csv("1,0\n2,1\n3,0\n4,1").unwrap();
        let noisy = ds.inject_label_noise(1.0, &mut RngStream::new(1)).unwrap();
        for i in 0..ds.n() {
            assert_ne!(noisy.label(i), ds.label(i));
            assert!(noisy.noise_mask()[i]);
        }
    }

    #[test]
    fn noise_count_follows_rounding() {
        let mut rng = RngStream::new(3);
        let ds: Dataset<f64> = gaussian_blobs(10, 2, 2, 3.0, &mut rng);
        let noisy = ds.inject_label_noise(0.4, &mut rng).unwrap();
        assert_eq!(noisy.noise_mask().iter().filter(|&&m| m).count(), 4);
    }

    #[test]
    fn noise_is_deterministic_given_seed() {
        let ds: Dataset<f64> = gaussian_blobs(50, 2, 3, 3.0, &mut RngStream::new(9));
        let a = ds.inject_label_noise(0.3, &mut RngStream::new(4)).unwrap();
        let b = ds.inject_label_noise(0.3, &mut RngStream::new(4)).unwrap();
        assert_eq!(a.labels, b.labels);
    }

    #[test]
    fn blobs_are_separable_by_construction() {
        let ds: Dataset<f64> = gaussian_blobs(100, 2, 2, 8.0, &mut RngStream::new(5));
        // With separation 8 the clusters sit 16 apart; a mean split on x is clean.
        for i in 0..ds.n() {
            let x = ds.feature_row(i)[0];
            if ds.label(i) == 0 {
                assert!(x > 0.0);
            } else {
                assert!(x < 0.0);
            }
        }
    }
}
