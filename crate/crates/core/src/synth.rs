//! Seeded synthetic problem generators for tests, verification and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::data::{self, RawDataset, SimilarityMatrix};
use crate::error::Result;
use crate::model::{Dataset, SignMask};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceSpec {
    pub n: usize,
    pub d: usize,
    /// Scale every example to unit norm (R = 1).
    pub normalize: bool,
    /// Probability that a feature is constrained (split evenly between signs).
    pub constrained_fraction: f64,
    /// Label noise: probability of flipping the planted label.
    pub flip: f64,
}

impl InstanceSpec {
    pub fn new(n: usize, d: usize) -> Self {
        InstanceSpec {
            n,
            d,
            normalize: true,
            constrained_fraction: 0.5,
            flip: 0.1,
        }
    }
}

/// A generated problem in both raw and preprocessed form.
#[derive(Debug, Clone)]
pub struct Instance {
    pub raw: RawDataset,
    pub pos: Vec<usize>,
    pub neg: Vec<usize>,
    pub data: Dataset,
    pub mask: SignMask,
}

/// Gaussian features with labels from a planted hyperplane plus flips.
pub fn random_instance<R: Rng>(rng: &mut R, spec: &InstanceSpec) -> Result<Instance> {
    let (n, d) = (spec.n, spec.d);
    let planted: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let mut row: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        if spec.normalize {
            let nrm = crate::linalg::norm(&row).max(1e-300);
            row.iter_mut().for_each(|x| *x /= nrm);
        }
        let s = crate::linalg::dot(&row, &planted);
        let mut y = if s >= 0.0 { 1.0 } else { -1.0 };
        if rng.random::<f64>() < spec.flip {
            y = -y;
        }
        // keep both classes present
        if i == 0 {
            y = 1.0;
        } else if i == 1 {
            y = -1.0;
        }
        labels.push(y);
        features.extend(row);
    }
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for h in 0..d {
        if rng.random::<f64>() < spec.constrained_fraction {
            if rng.random::<bool>() {
                pos.push(h);
            } else {
                neg.push(h);
            }
        }
    }
    let raw = RawDataset::new(d, labels, features)?;
    let (data, mask) = data::apply_sign_mask(&raw, &pos, &neg)?;
    Ok(Instance {
        raw,
        pos,
        neg,
        data,
        mask,
    })
}

pub const DIGIT_SIDE: usize = 28;

struct Stroke {
    from: (f64, f64),
    to: (f64, f64),
}

fn digit_prototypes<R: Rng>(rng: &mut R) -> Vec<Vec<Stroke>> {
    (0..10)
        .map(|_| {
            let k = rng.random_range(2..=4);
            (0..k)
                .map(|_| Stroke {
                    from: (rng.random_range(6.0..22.0), rng.random_range(5.0..23.0)),
                    to: (rng.random_range(6.0..22.0), rng.random_range(5.0..23.0)),
                })
                .collect()
        })
        .collect()
}

fn segment_distance_sq(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (a.0 + t * dx - p.0, a.1 + t * dy - p.1);
    cx * cx + cy * cy
}

/// Handwritten-digit-like 28×28 images: ten stroke prototypes, each sample a
/// jittered, shifted, noisy rendering. Odd digits are positive, even negative.
/// Rows are unit-normalized.
pub fn mnist_style(n: usize, seed: u64) -> Result<RawDataset> {
    let mut rng = rng(seed);
    let protos = digit_prototypes(&mut rng);
    let jitter = Normal::new(0.0, 1.2).expect("valid normal");
    let pixel_noise = Normal::new(0.0, 0.08).expect("valid normal");
    let d = DIGIT_SIDE * DIGIT_SIDE;
    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let digit = rng.random_range(0..10);
        let (sx, sy) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let thickness: f64 = rng.random_range(0.8..1.8);
        let strokes: Vec<Stroke> = protos[digit]
            .iter()
            .map(|s| Stroke {
                from: (
                    s.from.0 + sx + jitter.sample(&mut rng),
                    s.from.1 + sy + jitter.sample(&mut rng),
                ),
                to: (
                    s.to.0 + sx + jitter.sample(&mut rng),
                    s.to.1 + sy + jitter.sample(&mut rng),
                ),
            })
            .collect();
        let start = features.len();
        for r in 0..DIGIT_SIDE {
            for c in 0..DIGIT_SIDE {
                let p = (c as f64 + 0.5, r as f64 + 0.5);
                let d2 = strokes
                    .iter()
                    .map(|s| segment_distance_sq(p, s.from, s.to))
                    .fold(f64::INFINITY, f64::min);
                let mut v = (-d2 / (2.0 * thickness * thickness)).exp();
                if v > 0.05 {
                    v = (v + pixel_noise.sample(&mut rng)).clamp(0.0, 1.0);
                } else {
                    v = 0.0;
                }
                features.push(v);
            }
        }
        if features[start..].iter().all(|&v| v == 0.0) {
            features[start + d / 2] = 1.0;
        }
        labels.push(if digit % 2 == 1 { 1.0 } else { -1.0 });
    }
    data::normalize_unit(&RawDataset::new(d, labels, features)?)
}

/// Two Gaussian blobs in `dim` dimensions with RBF similarities
/// `exp(−‖a − b‖² / (2·width²))`. About a third of the points are positive.
pub fn two_blob_similarity(n: usize, dim: usize, separation: f64, seed: u64) -> Result<SimilarityMatrix> {
    let mut rng = rng(seed);
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y = if i % 3 == 0 { 1.0 } else { -1.0 };
        let p: Vec<f64> = (0..dim)
            .map(|k| {
                let centre = if k == 0 { 0.5 * separation * y } else { 0.0 };
                centre + rng.sample::<f64, _>(StandardNormal)
            })
            .collect();
        points.push(p);
        labels.push(y);
    }
    let width2 = 2.0 * dim as f64;
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let d2: f64 = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            values[i * n + j] = (-d2 / width2).exp();
        }
    }
    SimilarityMatrix::new(n, values, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instances_are_reproducible_and_normalized() {
        let spec = InstanceSpec::new(12, 5);
        let a = random_instance(&mut rng(3), &spec).unwrap();
        let b = random_instance(&mut rng(3), &spec).unwrap();
        assert_eq!(a.raw, b.raw);
        assert!((a.data.radius() - 1.0).abs() < 1e-12);
        assert!(a.data.labels().contains(&1.0) && a.data.labels().contains(&-1.0));
    }

    #[test]
    fn mnist_style_shape() {
        let raw = mnist_style(50, 1).unwrap();
        assert_eq!(raw.d, 784);
        assert_eq!(raw.n(), 50);
        for i in 0..raw.n() {
            assert!((crate::linalg::norm(raw.row(i)) - 1.0).abs() < 1e-12);
            assert!(raw.row(i).iter().all(|&v| v >= 0.0));
        }
        assert!(raw.n_pos() > 10 && raw.n_pos() < 40);
    }

    #[test]
    fn blob_similarity_is_symmetric() {
        let sim = two_blob_similarity(9, 3, 2.0, 5).unwrap();
        for i in 0..9 {
            assert_eq!(sim.get(i, i), 1.0);
            for j in 0..9 {
                assert_eq!(sim.get(i, j), sim.get(j, i));
            }
        }
    }
}
