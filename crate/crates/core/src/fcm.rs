//! Fuzzy c-means over scalar intensities.
//!
//! The fit alternates the membership update
//! `u_nk = 1 / Σ_j (d_nk / d_nj)^(2/(m-1))` with the weighted centroid update
//! `c_k = Σ_n u_nk^m x_n / Σ_n u_nk^m`, recording the objective
//! `J = Σ_n Σ_k u_nk^m (x_n - c_k)^2` after every membership update.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};

const ROW_SUM_TOL: f64 = 1e-9;
const INIT_JITTER: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct FcmConfig {
    pub clusters: usize,
    /// Fuzzifier `m > 1`.
    pub fuzzifier: f64,
    /// Stop once the objective changes by less than this between iterations.
    pub tolerance: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for FcmConfig {
    fn default() -> Self {
        Self { clusters: 3, fuzzifier: 2.0, tolerance: 1e-9, max_iter: 300, seed: 0 }
    }
}

impl FcmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.clusters < 2 {
            return Err(invalid("clusters", "need at least 2 clusters"));
        }
        if !(self.fuzzifier > 1.0) || !self.fuzzifier.is_finite() {
            return Err(invalid("fuzzifier", "must be finite and greater than 1"));
        }
        if !(self.tolerance > 0.0) {
            return Err(invalid("tolerance", "must be positive"));
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter", "must be at least 1"));
        }
        Ok(())
    }
}

/// Point-major membership matrix: row `n` holds the memberships of point `n`
/// in every cluster and sums to one.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipMap {
    n_points: usize,
    clusters: usize,
    mu: Vec<f64>,
}

impl MembershipMap {
    pub fn new(n_points: usize, clusters: usize, mu: Vec<f64>) -> Result<Self> {
        if clusters == 0 {
            return Err(invalid("clusters", "must be positive"));
        }
        if mu.len() != n_points * clusters {
            return Err(Error::DimensionMismatch { expected: n_points * clusters, found: mu.len() });
        }
        for row in mu.chunks_exact(clusters) {
            if row.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return Err(invalid("memberships", "values must lie in [0, 1]"));
            }
            let s: f64 = row.iter().sum();
            if libm::fabs(s - 1.0) > ROW_SUM_TOL {
                return Err(invalid("memberships", "rows must sum to 1"));
            }
        }
        Ok(Self { n_points, clusters, mu })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn clusters(&self) -> usize {
        self.clusters
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.mu
    }

    #[inline]
    pub fn get(&self, n: usize, k: usize) -> f64 {
        self.mu[n * self.clusters + k]
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.mu[n * self.clusters..(n + 1) * self.clusters]
    }

    /// Memberships of every point in cluster `k` (the component of interest when `k` is the lesion cluster).
    pub fn column(&self, k: usize) -> Result<Vec<f64>> {
        self.check_cluster(k)?;
        Ok(self.mu.iter().skip(k).step_by(self.clusters).copied().collect())
    }

    pub(crate) fn check_cluster(&self, k: usize) -> Result<()> {
        if k < self.clusters {
            Ok(())
        } else {
            Err(Error::InvalidCluster { index: k, clusters: self.clusters })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcmResult {
    pub centroids: Vec<f64>,
    pub memberships: MembershipMap,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
}

#[inline]
fn weight(u: f64, m: f64) -> f64 {
    if m == 2.0 {
        u * u
    } else {
        libm::pow(u, m)
    }
}

/// Number of distinct values in `data`.
pub fn distinct_count(data: &[f64]) -> usize {
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    sorted.len()
}

/// Quantiles of the distinct data values plus seeded jitter.
fn initial_centroids(data: &[f64], clusters: usize, seed: u64) -> Vec<f64> {
    let mut levels = data.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..clusters)
        .map(|k| {
            let q = (k as f64 + 0.5) / clusters as f64;
            let idx = ((q * levels.len() as f64) as usize).min(levels.len() - 1);
            levels[idx] + rng.random_range(-INIT_JITTER..=INIT_JITTER)
        })
        .collect()
}

fn update_memberships(data: &[f64], centroids: &[f64], m: f64, mu: &mut [f64]) {
    let c = centroids.len();
    let exponent = 1.0 / (m - 1.0);
    let mut d2 = vec![0.0; c];
    for (x, row) in data.iter().zip(mu.chunks_exact_mut(c)) {
        let mut hit = None;
        for (k, &ck) in centroids.iter().enumerate() {
            d2[k] = (x - ck) * (x - ck);
            if d2[k] == 0.0 && hit.is_none() {
                hit = Some(k);
            }
        }
        if let Some(k) = hit {
            row.fill(0.0);
            row[k] = 1.0;
            continue;
        }
        for k in 0..c {
            let mut denom = 0.0;
            for j in 0..c {
                let ratio = d2[k] / d2[j];
                denom += if exponent == 1.0 { ratio } else { libm::pow(ratio, exponent) };
            }
            row[k] = 1.0 / denom;
        }
    }
}

fn update_centroids(data: &[f64], mu: &[f64], m: f64, centroids: &mut [f64]) {
    let c = centroids.len();
    for (k, ck) in centroids.iter_mut().enumerate() {
        let (mut num, mut den) = (0.0, 0.0);
        for (x, row) in data.iter().zip(mu.chunks_exact(c)) {
            let w = weight(row[k], m);
            num += w * x;
            den += w;
        }
        // an emptied cluster keeps its previous position
        if den > 0.0 {
            *ck = num / den;
        }
    }
}

fn objective_unchecked(data: &[f64], centroids: &[f64], mu: &[f64], m: f64) -> f64 {
    let c = centroids.len();
    data.iter()
        .zip(mu.chunks_exact(c))
        .map(|(x, row)| {
            row.iter()
                .zip(centroids)
                .map(|(&u, &ck)| weight(u, m) * (x - ck) * (x - ck))
                .sum::<f64>()
        })
        .sum()
}

/// Fuzzy c-means objective `Σ_n Σ_k u_nk^m (x_n - c_k)^2`.
pub fn fcm_objective(data: &[f64], centroids: &[f64], memberships: &MembershipMap, m: f64) -> Result<f64> {
    if memberships.n_points != data.len() {
        return Err(Error::DimensionMismatch { expected: data.len(), found: memberships.n_points });
    }
    if memberships.clusters != centroids.len() {
        return Err(Error::DimensionMismatch { expected: centroids.len(), found: memberships.clusters });
    }
    Ok(objective_unchecked(data, centroids, &memberships.mu, m))
}

/// Runs fuzzy c-means to convergence (objective change below tolerance) or `max_iter`.
///
/// A point that coincides exactly with a centroid gets membership 1 in that
/// centroid (the lowest-indexed one if several coincide) and 0 elsewhere.
/// The returned memberships are consistent with the returned centroids.
pub fn fcm_fit(data: &[f64], config: &FcmConfig) -> Result<FcmResult> {
    config.validate()?;
    let c = config.clusters;
    if data.len() < c {
        return Err(Error::DimensionMismatch { expected: c, found: data.len() });
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("clustering data"));
    }
    let distinct = distinct_count(data);
    if distinct < c {
        return Err(Error::TooFewDistinctValues { clusters: c, distinct });
    }

    let m = config.fuzzifier;
    let mut centroids = initial_centroids(data, c, config.seed);
    let mut mu = vec![0.0; data.len() * c];
    let mut trace = Vec::new();
    let mut iterations = 0;
    for it in 0..config.max_iter {
        update_memberships(data, &centroids, m, &mut mu);
        let j = objective_unchecked(data, &centroids, &mu, m);
        iterations = it + 1;
        let converged = trace.last().is_some_and(|&prev: &f64| libm::fabs(prev - j) < config.tolerance);
        trace.push(j);
        if converged || iterations == config.max_iter {
            break;
        }
        update_centroids(data, &mu, m, &mut centroids);
    }
    if centroids.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("centroids"));
    }
    Ok(FcmResult {
        centroids,
        memberships: MembershipMap { n_points: data.len(), clusters: c, mu },
        objective_trace: trace,
        iterations,
    })
}

/// Smooths memberships with their spatial neighbourhood.
///
/// For each pixel `n`, `h_nk` is the sum of cluster-`k` memberships over the
/// `window x window` square centred on `n` (truncated at the image border) and
/// the new membership is `sqrt(u_nk h_nk) / Σ_j sqrt(u_nj h_nj)`. The
/// geometric weighting leaves spatially constant maps unchanged and makes a
/// window of 1 the identity.
pub fn spatial_regularize(mm: &MembershipMap, width: usize, height: usize, window: usize) -> Result<MembershipMap> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(invalid("window", "must be odd and at least 1"));
    }
    if width * height != mm.n_points {
        return Err(Error::DimensionMismatch { expected: mm.n_points, found: width * height });
    }
    let c = mm.clusters;
    let r = window / 2;

    // Summed-area table per cluster keeps large windows cheap.
    let stride = width + 1;
    let mut table = vec![0.0; (height + 1) * stride * c];
    for y in 0..height {
        for x in 0..width {
            for k in 0..c {
                let at = |yy: usize, xx: usize| (yy * stride + xx) * c + k;
                table[at(y + 1, x + 1)] =
                    mm.get(y * width + x, k) + table[at(y, x + 1)] + table[at(y + 1, x)] - table[at(y, x)];
            }
        }
    }

    let mut out = vec![0.0; mm.mu.len()];
    let mut scores = vec![0.0; c];
    for y in 0..height {
        let (y0, y1) = (y.saturating_sub(r), (y + r + 1).min(height));
        for x in 0..width {
            let (x0, x1) = (x.saturating_sub(r), (x + r + 1).min(width));
            let n = y * width + x;
            let mut total = 0.0;
            for k in 0..c {
                let at = |yy: usize, xx: usize| table[(yy * stride + xx) * c + k];
                let h = if window == 1 {
                    mm.get(n, k)
                } else {
                    (at(y1, x1) - at(y0, x1) - at(y1, x0) + at(y0, x0)).max(0.0)
                };
                scores[k] = libm::sqrt(mm.get(n, k) * h);
                total += scores[k];
            }
            let row = &mut out[n * c..(n + 1) * c];
            if total > 0.0 {
                for (o, s) in row.iter_mut().zip(&scores) {
                    *o = s / total;
                }
            } else {
                row.copy_from_slice(mm.row(n));
            }
        }
    }
    Ok(MembershipMap { n_points: mm.n_points, clusters: c, mu: out })
}

/// Index of the brightest centroid; ties go to the lowest index.
pub fn select_lesion_cluster(result: &FcmResult) -> usize {
    let mut best = 0;
    for (k, &v) in result.centroids.iter().enumerate().skip(1) {
        if v > result.centroids[best] {
            best = k;
        }
    }
    best
}
