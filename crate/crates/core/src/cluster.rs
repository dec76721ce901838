//! Hard-EM (Lloyd) k-means over sampled pixels and silhouette analysis.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::colorspace::{range_of, PlaneImage};
use crate::error::{Error, Result};
use crate::raster::{LabelMap, BACKGROUND};

pub const DEFAULT_SAMPLE: usize = 2000;
pub const DEFAULT_RESTARTS: usize = 10;
pub const DEFAULT_MAX_ITER: usize = 100;

pub type Point = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KMeansOptions {
    pub restarts: usize,
    pub max_iter: usize,
    pub sample: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            restarts: DEFAULT_RESTARTS,
            max_iter: DEFAULT_MAX_ITER,
            sample: DEFAULT_SAMPLE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub centers: Vec<Point>,
    /// Pixel positions the assignments refer to.
    pub sampled_indices: Vec<usize>,
    pub wcss: f64,
}

#[inline]
fn dist2(a: &Point, b: &Point) -> f64 {
    let d0 = a[0] - b[0];
    let d1 = a[1] - b[1];
    let d2 = a[2] - b[2];
    d0 * d0 + d1 * d1 + d2 * d2
}

#[inline]
fn dist(a: &Point, b: &Point) -> f64 {
    dist2(a, b).sqrt()
}

fn nearest(p: &Point, centers: &[Point]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d = dist2(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Within-cluster sum of squared distances.
pub fn wcss(points: &[Point], assignments: &[usize], centers: &[Point]) -> f64 {
    points
        .iter()
        .zip(assignments)
        .map(|(p, &a)| dist2(p, &centers[a]))
        .sum()
}

/// k-means++ seeding.
pub fn kmeans_pp_init(points: &[Point], k: usize, rng: &mut impl Rng) -> Vec<Point> {
    let mut centers = Vec::with_capacity(k);
    centers.push(points[rng.random_range(0..points.len())]);
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[pick];
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, &c));
        }
        centers.push(c);
    }
    centers
}

/// One Lloyd run from fixed initial centers.
#[derive(Debug, Clone)]
pub struct LloydRun {
    pub assignments: Vec<usize>,
    pub centers: Vec<Point>,
    /// Objective after each assignment step.
    pub history: Vec<f64>,
}

pub fn lloyd(points: &[Point], init: Vec<Point>, max_iter: usize) -> LloydRun {
    let k = init.len();
    let mut centers = init;
    let mut assignments = vec![usize::MAX; points.len()];
    let mut history = Vec::new();
    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        for (p, a) in points.iter().zip(assignments.iter_mut()) {
            let (j, _) = nearest(p, &centers);
            if *a != j {
                *a = j;
                changed = true;
            }
        }
        history.push(wcss(points, &assignments, &centers));
        if !changed {
            break;
        }
        let mut sums = vec![[0.0; 3]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            for c in 0..3 {
                sums[a][c] += p[c];
            }
            counts[a] += 1;
        }
        for j in 0..k {
            if counts[j] > 0 {
                let n = counts[j] as f64;
                centers[j] = [sums[j][0] / n, sums[j][1] / n, sums[j][2] / n];
            }
        }
        // An empty cluster takes the point farthest from its center; its old
        // position has no members, so the objective is unchanged here.
        for j in 0..k {
            if counts[j] == 0 {
                let far = points
                    .iter()
                    .zip(&assignments)
                    .enumerate()
                    .map(|(i, (p, &a))| (i, dist2(p, &centers[a])))
                    .fold(
                        (0, -1.0),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
                centers[j] = points[far.0];
                counts[j] = 1;
            }
        }
    }
    LloydRun {
        assignments,
        centers,
        history,
    }
}

/// Best-of-restarts Lloyd on explicit points. Deterministic for a seed.
pub fn cluster_points(
    points: &[Point],
    k: usize,
    seed: u64,
    opts: &KMeansOptions,
) -> Result<ClusterResult> {
    if k == 0 || points.len() < k {
        return Err(Error::TooFewPixels {
            needed: k.max(1),
            got: points.len(),
        });
    }
    let runs: Vec<(f64, LloydRun)> = (0..opts.restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(seed ^ (r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let init = kmeans_pp_init(points, k, &mut rng);
            let run = lloyd(points, init, opts.max_iter);
            (wcss(points, &run.assignments, &run.centers), run)
        })
        .collect();
    let (best_wcss, best) = runs
        .into_iter()
        .fold(None::<(f64, LloydRun)>, |acc, cur| match acc {
            Some(a) if a.0 <= cur.0 => Some(a),
            _ => Some(cur),
        })
        .expect("at least one restart");
    Ok(ClusterResult {
        k,
        assignments: best.assignments,
        centers: best.centers,
        sampled_indices: (0..points.len()).collect(),
        wcss: best_wcss,
    })
}

/// Uniform sample of at most `max` eligible pixel positions, sorted.
pub fn sample_pixels(eligible: &[usize], max: usize, seed: u64) -> Vec<usize> {
    if eligible.len() <= max {
        return eligible.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = index::sample(&mut rng, eligible.len(), max)
        .into_iter()
        .map(|i| eligible[i])
        .collect();
    picked.sort_unstable();
    picked
}

/// Channels of the chosen pixels mapped to `[0, 1]` by the space's range.
pub fn unit_points(img: &PlaneImage, indices: &[usize]) -> Vec<Point> {
    let range = range_of(img.id);
    indices
        .iter()
        .map(|&i| {
            let p = img.pixel(i);
            [
                range.unit(0, p[0]),
                range.unit(1, p[1]),
                range.unit(2, p[2]),
            ]
        })
        .collect()
}

pub fn cluster_pixels(img: &PlaneImage, k: usize, seed: u64) -> Result<ClusterResult> {
    cluster_pixels_with(img, None, k, seed, &KMeansOptions::default())
}

/// Clusters a sample of pixels, optionally restricted to `eligible` positions.
pub fn cluster_pixels_with(
    img: &PlaneImage,
    eligible: Option<&[usize]>,
    k: usize,
    seed: u64,
    opts: &KMeansOptions,
) -> Result<ClusterResult> {
    let all: Vec<usize>;
    let eligible = match eligible {
        Some(e) => e,
        None => {
            all = (0..img.len()).collect();
            &all
        }
    };
    let sampled = sample_pixels(eligible, opts.sample, seed);
    let points = unit_points(img, &sampled);
    let mut result = cluster_points(&points, k, seed, opts)?;
    result.sampled_indices = sampled;
    Ok(result)
}

/// Denominator used for `s(i)`. `Printed` reproduces the literal
/// `max(a - b)` form, which collapses to `-1` whenever `a != b`; it exists
/// only for comparison runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SilhouetteForm {
    #[default]
    Standard,
    Printed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SilhouetteReport {
    pub k: usize,
    pub mean: f64,
    /// `None` for clusters with no members.
    pub per_cluster_mean: Vec<Option<f64>>,
    pub sample_size: usize,
    pub seed: u64,
    /// Set when fewer than two clusters are populated; `mean` is then 0.
    pub single_cluster: bool,
    #[serde(skip)]
    pub per_pixel: Vec<f64>,
}

impl SilhouetteReport {
    fn single(k: usize, n: usize, seed: u64) -> Self {
        Self {
            k,
            mean: 0.0,
            per_cluster_mean: vec![None; k],
            sample_size: n,
            seed,
            single_cluster: true,
            per_pixel: vec![0.0; n],
        }
    }
}

pub fn silhouette(result: &ClusterResult, points: &[Point]) -> Result<SilhouetteReport> {
    silhouette_with(result, points, SilhouetteForm::Standard, 0)
}

pub fn silhouette_with(
    result: &ClusterResult,
    points: &[Point],
    form: SilhouetteForm,
    seed: u64,
) -> Result<SilhouetteReport> {
    if points.len() != result.assignments.len() {
        return Err(Error::DimensionMismatch {
            left: (points.len(), 1),
            right: (result.assignments.len(), 1),
        });
    }
    let k = result.k;
    let n = points.len();
    let mut sizes = vec![0usize; k];
    for &a in &result.assignments {
        if a >= k {
            return Err(Error::Invariant(format!("assignment {a} >= k = {k}")));
        }
        sizes[a] += 1;
    }
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Ok(SilhouetteReport::single(k, n, seed));
    }

    let per_pixel: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let own = result.assignments[i];
            if sizes[own] <= 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            for (j, p) in points.iter().enumerate() {
                if j != i {
                    sums[result.assignments[j]] += dist(&points[i], p);
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own && sizes[c] > 0)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = match form {
                SilhouetteForm::Standard => a.max(b),
                SilhouetteForm::Printed => a - b,
            };
            if denom == 0.0 {
                0.0
            } else {
                (b - a) / denom
            }
        })
        .collect();

    let mut cluster_sum = vec![0.0; k];
    for (s, &a) in per_pixel.iter().zip(&result.assignments) {
        cluster_sum[a] += s;
    }
    let per_cluster_mean = (0..k)
        .map(|c| (sizes[c] > 0).then(|| cluster_sum[c] / sizes[c] as f64))
        .collect();
    Ok(SilhouetteReport {
        k,
        mean: per_pixel.iter().sum::<f64>() / n as f64,
        per_cluster_mean,
        sample_size: n,
        seed,
        single_cluster: false,
        per_pixel,
    })
}

/// Clusters the non-background pixels with `k` = number of labeled classes
/// and scores the partition.
pub fn discriminability(img: &PlaneImage, truth: &LabelMap, seed: u64) -> Result<SilhouetteReport> {
    discriminability_with(
        img,
        truth,
        seed,
        &KMeansOptions::default(),
        SilhouetteForm::Standard,
    )
}

pub fn discriminability_with(
    img: &PlaneImage,
    truth: &LabelMap,
    seed: u64,
    opts: &KMeansOptions,
    form: SilhouetteForm,
) -> Result<SilhouetteReport> {
    if (img.width, img.height) != truth.dims() {
        return Err(Error::DimensionMismatch {
            left: (img.width, img.height),
            right: truth.dims(),
        });
    }
    let k = truth.classes().len();
    let eligible: Vec<usize> = truth
        .labels
        .iter()
        .enumerate()
        .filter(|(_, &l)| l != BACKGROUND)
        .map(|(i, _)| i)
        .collect();
    if k <= 1 {
        let n = eligible.len().min(opts.sample);
        return Ok(SilhouetteReport::single(k.max(1), n, seed));
    }
    let result = cluster_pixels_with(img, Some(&eligible), k, seed, opts)?;
    let points = unit_points(img, &result.sampled_indices);
    silhouette_with(&result, &points, form, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(assign: Vec<usize>, k: usize) -> ClusterResult {
        let n = assign.len();
        ClusterResult {
            k,
            assignments: assign,
            centers: vec![[0.0; 3]; k],
            sampled_indices: (0..n).collect(),
            wcss: 0.0,
        }
    }

    #[test]
    fn perfect_separation_is_one() {
        let pts = vec![
            [0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0],
            [10.0, 0.0, 0.0],
            [10.0, 0.0, 0.0],
        ];
        let r = silhouette(&result(vec![0, 0, 1, 1], 2), &pts).unwrap();
        assert_eq!(r.per_pixel, vec![1.0; 4]);
        assert_eq!(r.mean, 1.0);
        assert_eq!(r.per_cluster_mean, vec![Some(1.0), Some(1.0)]);
    }

    #[test]
    fn identical_points_score_zero() {
        let pts = vec![[0.5; 3]; 4];
        let r = silhouette(&result(vec![0, 1, 0, 1], 2), &pts).unwrap();
        assert_eq!(r.per_pixel, vec![0.0; 4]);
        assert!(!r.single_cluster);
    }

    #[test]
    fn singleton_cluster_scores_zero() {
        let pts = vec![[0.0; 3], [0.1, 0.0, 0.0], [1.0, 0.0, 0.0]];
        let r = silhouette(&result(vec![0, 0, 1], 2), &pts).unwrap();
        assert_eq!(r.per_pixel[2], 0.0);
        assert!(r.per_pixel[0] > 0.0);
    }

    #[test]
    fn one_cluster_is_flagged() {
        let pts = vec![[0.0; 3], [1.0; 3]];
        let r = silhouette(&result(vec![0, 0], 1), &pts).unwrap();
        assert!(r.single_cluster);
        assert_eq!(r.mean, 0.0);
    }

    #[test]
    fn printed_form_collapses() {
        let pts = vec![[0.0; 3], [1.0, 0.0, 0.0], [5.0, 0.0, 0.0], [6.0, 0.0, 0.0]];
        let r = silhouette_with(
            &result(vec![0, 0, 1, 1], 2),
            &pts,
            SilhouetteForm::Printed,
            0,
        )
        .unwrap();
        assert!(r.per_pixel.iter().all(|&s| (s + 1.0).abs() < 1e-12));
    }

    #[test]
    fn k_one_center_is_mean() {
        let pts = vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let r = cluster_points(&pts, 1, 3, &KMeansOptions::default()).unwrap();
        assert!(r.assignments.iter().all(|&a| a == 0));
        for c in 0..3 {
            assert!((r.centers[0][c] - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn too_few_points() {
        let pts = vec![[0.0; 3]];
        assert!(matches!(
            cluster_points(&pts, 2, 0, &KMeansOptions::default()),
            Err(Error::TooFewPixels { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn lloyd_objective_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<Point> = (0..300)
            .map(|_| [rng.random(), rng.random(), rng.random()])
            .collect();
        for seed in 0..10 {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            let init = kmeans_pp_init(&pts, 6, &mut r);
            let run = lloyd(&pts, init, 100);
            for w in run.history.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "{:?}", run.history);
            }
        }
    }

    #[test]
    fn sampling_is_bounded_and_deterministic() {
        let eligible: Vec<usize> = (0..10_000).step_by(3).collect();
        let a = sample_pixels(&eligible, 500, 4);
        assert_eq!(a.len(), 500);
        assert_eq!(a, sample_pixels(&eligible, 500, 4));
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(
            sample_pixels(&eligible[..10], 500, 4),
            eligible[..10].to_vec()
        );
    }
}
