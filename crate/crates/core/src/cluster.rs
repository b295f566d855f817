//! Row clustering: k-means with distance-weighted seeding, a random-partition
//! baseline, and silhouette scoring for partition quality.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::stream::StreamMatrix;

/// A partition of matrix rows into `k` groups.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub k: usize,
    /// Row index to cluster index, every value below `k`.
    pub assignment: Vec<usize>,
    /// One centroid per cluster, each `cols` long.
    pub centroids: Vec<Vec<f64>>,
    /// Sum of squared distances from each row to its assigned centroid.
    pub objective: f64,
    /// Assign/update rounds performed after seeding.
    pub iterations: usize,
    /// Objective after seeding and after every round; never increases.
    pub objective_trace: Vec<f64>,
    pub seed: u64,
}

impl Clustering {
    /// Rows assigned to cluster `c`, ascending.
    pub fn members(&self, c: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &a)| a == c)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &a in &self.assignment {
            sizes[a] += 1;
        }
        sizes
    }
}

/// Silhouette values for one clustering.
#[derive(Debug, Clone, PartialEq)]
pub struct SilhouetteReport {
    pub per_point: Vec<f64>,
    pub per_cluster_mean: Vec<f64>,
    pub mean: f64,
}

fn row_f64(matrix: &StreamMatrix, i: usize) -> Vec<f64> {
    matrix.row(i).iter().map(|&v| f64::from(v)).collect()
}

fn sq_dist_to_centroid(row: &[u16], centroid: &[f64]) -> f64 {
    row.iter()
        .zip(centroid)
        .map(|(&v, &c)| {
            let d = f64::from(v) - c;
            d * d
        })
        .sum()
}

fn row_distance(a: &[u16], b: &[u16]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = f64::from(x) - f64::from(y);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

fn check_k(k: usize, rows: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if k > rows {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds the {rows} available rows"
        )));
    }
    Ok(())
}

/// Distance-weighted seeding: the first centroid is a uniformly random row,
/// each later one is drawn with probability proportional to the squared
/// distance to the nearest centroid chosen so far. If every remaining row
/// sits exactly on a chosen centroid, the draw falls back to uniform.
pub fn seed_centroids_pp(matrix: &StreamMatrix, k: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    check_k(k, matrix.rows())?;
    let rows = matrix.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let first = rng.gen_range(0..rows);
    let mut centroids = vec![row_f64(matrix, first)];
    let mut nearest_sq: Vec<f64> = (0..rows)
        .map(|i| sq_dist_to_centroid(matrix.row(i), &centroids[0]))
        .collect();

    while centroids.len() < k {
        let total: f64 = nearest_sq.iter().sum();
        let pick = if total <= 0.0 {
            rng.gen_range(0..rows)
        } else {
            let target = rng.gen::<f64>() * total;
            let mut cum = 0.0;
            let mut chosen = rows - 1;
            for (i, &w) in nearest_sq.iter().enumerate() {
                cum += w;
                if target < cum {
                    chosen = i;
                    break;
                }
            }
            chosen
        };
        let centroid = row_f64(matrix, pick);
        for (i, nearest) in nearest_sq.iter_mut().enumerate() {
            let d = sq_dist_to_centroid(matrix.row(i), &centroid);
            if d < *nearest {
                *nearest = d;
            }
        }
        centroids.push(centroid);
    }
    Ok(centroids)
}

/// Assigns every row to its nearest centroid by squared distance, breaking
/// ties toward the lowest centroid index.
pub fn assign(matrix: &StreamMatrix, centroids: &[Vec<f64>]) -> Result<Vec<usize>> {
    if centroids.is_empty() {
        return Err(Error::InvalidArgument("no centroids".into()));
    }
    for c in centroids {
        if c.len() != matrix.cols() {
            return Err(Error::InvalidArgument(format!(
                "centroid has {} components, matrix has {} columns",
                c.len(),
                matrix.cols()
            )));
        }
    }
    Ok((0..matrix.rows())
        .map(|i| {
            let row = matrix.row(i);
            let mut best = 0usize;
            let mut best_d = sq_dist_to_centroid(row, &centroids[0]);
            for (c, centroid) in centroids.iter().enumerate().skip(1) {
                let d = sq_dist_to_centroid(row, centroid);
                if d < best_d {
                    best = c;
                    best_d = d;
                }
            }
            best
        })
        .collect())
}

/// Recomputes centroids as the mean of their assigned rows. A cluster left
/// with no rows is re-seeded at the row farthest from its assigned centroid;
/// several empty clusters take successive farthest rows.
pub fn update_centroids(
    matrix: &StreamMatrix,
    assignment: &[usize],
    k: usize,
) -> Result<Vec<Vec<f64>>> {
    if assignment.len() != matrix.rows() {
        return Err(Error::InvalidArgument(format!(
            "assignment covers {} rows, matrix has {}",
            assignment.len(),
            matrix.rows()
        )));
    }
    if let Some(&bad) = assignment.iter().find(|&&a| a >= k) {
        return Err(Error::InvalidArgument(format!(
            "assignment value {bad} outside 0..{k}"
        )));
    }
    let cols = matrix.cols();
    let mut sums = vec![vec![0.0f64; cols]; k];
    let mut counts = vec![0usize; k];
    for (i, &a) in assignment.iter().enumerate() {
        counts[a] += 1;
        for (s, &v) in sums[a].iter_mut().zip(matrix.row(i)) {
            *s += f64::from(v);
        }
    }
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    for c in 0..k {
        if counts[c] == 0 {
            centroids.push(Vec::new());
        } else {
            let n = counts[c] as f64;
            centroids.push(sums[c].iter().map(|s| s / n).collect());
        }
    }

    let empties: Vec<usize> = (0..k).filter(|&c| counts[c] == 0).collect();
    if !empties.is_empty() {
        // Distance of each row to its own cluster's fresh mean.
        let mut dist: Vec<(f64, usize)> = assignment
            .iter()
            .enumerate()
            .filter(|(_, &a)| counts[a] > 0)
            .map(|(i, &a)| (sq_dist_to_centroid(matrix.row(i), &centroids[a]), i))
            .collect();
        dist.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        for (slot, c) in empties.into_iter().enumerate() {
            let (_, row) = dist.get(slot).copied().ok_or_else(|| {
                Error::InvalidArgument("more empty clusters than rows to re-seed from".into())
            })?;
            centroids[c] = row_f64(matrix, row);
        }
    }
    Ok(centroids)
}

fn objective_of(matrix: &StreamMatrix, assignment: &[usize], centroids: &[Vec<f64>]) -> f64 {
    assignment
        .iter()
        .enumerate()
        .map(|(i, &a)| sq_dist_to_centroid(matrix.row(i), &centroids[a]))
        .sum()
}

pub const DEFAULT_MAX_ITERS: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-6;

/// Full k-means: distance-weighted seeding, then alternating assign and
/// update steps until the assignment reaches a fixed point, the objective
/// improves by less than `tol`, or `max_iters` rounds have run.
pub fn kmeans(
    matrix: &StreamMatrix,
    k: usize,
    max_iters: usize,
    tol: f64,
    seed: u64,
) -> Result<Clustering> {
    check_k(k, matrix.rows())?;
    if max_iters == 0 {
        return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
    }
    if tol.is_nan() || tol < 0.0 {
        return Err(Error::InvalidArgument(format!("tol {tol} must be non-negative")));
    }

    let mut centroids = seed_centroids_pp(matrix, k, seed)?;
    let mut assignment = assign(matrix, &centroids)?;
    let mut objective = objective_of(matrix, &assignment, &centroids);
    let mut trace = vec![objective];
    let mut iterations = 0;

    for _ in 0..max_iters {
        let new_centroids = update_centroids(matrix, &assignment, k)?;
        let new_assignment = assign(matrix, &new_centroids)?;
        let new_objective = objective_of(matrix, &new_assignment, &new_centroids);
        debug_assert!(
            new_objective <= objective * (1.0 + 1e-12) + 1e-9,
            "objective increased: {objective} -> {new_objective}"
        );
        let fixed_point = new_assignment == assignment;
        let improvement = objective - new_objective;
        centroids = new_centroids;
        assignment = new_assignment;
        objective = new_objective;
        trace.push(objective);
        iterations += 1;
        if fixed_point || improvement < tol {
            break;
        }
    }

    Ok(Clustering {
        k,
        assignment,
        centroids,
        objective,
        iterations,
        objective_trace: trace,
        seed,
    })
}

const PARTITION_RETRIES: usize = 10_000;

/// Uniform random assignment baseline. Draws are repeated until every
/// cluster is non-empty, within a bounded retry budget.
pub fn random_partition(matrix: &StreamMatrix, k: usize, seed: u64) -> Result<Clustering> {
    check_k(k, matrix.rows())?;
    let rows = matrix.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = None;
    for _ in 0..PARTITION_RETRIES {
        let candidate: Vec<usize> = (0..rows).map(|_| rng.gen_range(0..k)).collect();
        let mut seen = vec![false; k];
        for &a in &candidate {
            seen[a] = true;
        }
        if seen.iter().all(|&s| s) {
            assignment = Some(candidate);
            break;
        }
    }
    let assignment = assignment.ok_or_else(|| {
        Error::InvalidArgument(format!(
            "no draw with all {k} clusters non-empty in {PARTITION_RETRIES} tries; k is too close to the row count {rows}"
        ))
    })?;
    let centroids = update_centroids(matrix, &assignment, k)?;
    let objective = objective_of(matrix, &assignment, &centroids);
    Ok(Clustering {
        k,
        assignment,
        centroids,
        objective,
        iterations: 0,
        objective_trace: vec![objective],
        seed,
    })
}

/// Silhouette score per row: `(y - x) / max(x, y)` where `x` is the mean
/// distance to the row's own cluster and `y` the smallest mean distance to
/// any other cluster. Rows in singleton clusters score 0.
pub fn silhouette(matrix: &StreamMatrix, clustering: &Clustering) -> Result<SilhouetteReport> {
    let k = clustering.k;
    if k < 2 {
        return Err(Error::InvalidArgument(
            "silhouette needs at least 2 clusters".into(),
        ));
    }
    let rows = matrix.rows();
    if clustering.assignment.len() != rows {
        return Err(Error::InvalidArgument(format!(
            "assignment covers {} rows, matrix has {rows}",
            clustering.assignment.len()
        )));
    }
    let sizes = clustering.cluster_sizes();
    if sizes.contains(&0) {
        return Err(Error::InvalidArgument(
            "silhouette needs every cluster non-empty".into(),
        ));
    }

    // Mean distance from each row to every cluster, one pass over pairs.
    let mut cluster_dist_sum = vec![vec![0.0f64; k]; rows];
    for i in 0..rows {
        for j in (i + 1)..rows {
            let d = row_distance(matrix.row(i), matrix.row(j));
            cluster_dist_sum[i][clustering.assignment[j]] += d;
            cluster_dist_sum[j][clustering.assignment[i]] += d;
        }
    }

    let mut per_point = Vec::with_capacity(rows);
    for (i, dist_row) in cluster_dist_sum.iter().enumerate() {
        let own = clustering.assignment[i];
        if sizes[own] == 1 {
            per_point.push(0.0);
            continue;
        }
        let x = dist_row[own] / (sizes[own] - 1) as f64;
        let y = (0..k)
            .filter(|&c| c != own)
            .map(|c| dist_row[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = x.max(y);
        per_point.push(if denom == 0.0 { 0.0 } else { (y - x) / denom });
    }

    let mut per_cluster_mean = vec![0.0f64; k];
    for (i, &s) in per_point.iter().enumerate() {
        per_cluster_mean[clustering.assignment[i]] += s;
    }
    for (m, &size) in per_cluster_mean.iter_mut().zip(&sizes) {
        *m /= size as f64;
    }
    let mean = per_point.iter().sum::<f64>() / rows as f64;

    Ok(SilhouetteReport {
        per_point,
        per_cluster_mean,
        mean,
    })
}

/// CSV form of a clustering and its silhouette values: one row per matrix
/// row, `row,cluster,silhouette` with a header line.
pub fn silhouette_csv(clustering: &Clustering, report: &SilhouetteReport) -> String {
    let mut out = String::from("row,cluster,silhouette\n");
    for (i, (&a, &s)) in clustering
        .assignment
        .iter()
        .zip(&report.per_point)
        .enumerate()
    {
        out.push_str(&format!("{i},{a},{s:.6}\n"));
    }
    out
}
