//! Conformation-ensemble evaluation.
//!
//! RMSD between two conformations is minimized over rigid motions with the
//! Kabsch algorithm (centroid subtraction, cross-covariance SVD, determinant
//! sign correction so reflections are excluded) restricted to heavy atoms.
//! COV counts references matched within a threshold, MAT averages best-match
//! RMSDs, MIS counts generated samples matching no reference. Distance
//! distributions are compared with the biased (V-statistic) squared-MMD
//! estimator under a Gaussian kernel, which is exactly zero for identical
//! sample sets; bandwidths come from the median heuristic on the pooled
//! sample. Edges touching hydrogen are ignored throughout.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::geom::{self, Mat3, Vec3};
use crate::molgraph::{Conformation, MolecularGraph};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("alignment needs at least 3 heavy atoms, got {got}")]
    TooFewAtoms { got: usize },
    #[error("conformation set is empty")]
    EmptySet,
    #[error("sample dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("kernel bandwidth must be positive, got {bandwidth}")]
    NonPositiveBandwidth { bandwidth: f64 },
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
}

/// Optimal rigid alignment of one conformation onto another.
#[derive(Debug, Clone)]
pub struct Alignment {
    pub rmsd: f64,
    /// Proper rotation applied to the first argument.
    pub rotation: Mat3,
    /// Translation applied after the rotation.
    pub translation: Vec3,
}

fn masked_centroid(coords: &[Vec3], mask: &[bool]) -> (Vec3, usize) {
    let mut c = [0.0; 3];
    let mut n = 0;
    for (p, &keep) in coords.iter().zip(mask) {
        if keep {
            c = geom::add(c, *p);
            n += 1;
        }
    }
    (geom::scale(c, 1.0 / n as f64), n)
}

/// Minimum RMSD over rotations and translations, restricted to atoms where
/// `heavy_mask` is true. Returns the minimizing motion mapping `r` onto
/// `r_hat`.
pub fn kabsch_rmsd(
    r: &Conformation,
    r_hat: &Conformation,
    heavy_mask: &[bool],
) -> Result<Alignment, MetricsError> {
    if r.num_atoms() != r_hat.num_atoms() {
        return Err(MetricsError::SizeMismatch {
            expected: r.num_atoms(),
            got: r_hat.num_atoms(),
        });
    }
    if heavy_mask.len() != r.num_atoms() {
        return Err(MetricsError::SizeMismatch {
            expected: r.num_atoms(),
            got: heavy_mask.len(),
        });
    }
    let (p_bar, n) = if r.num_atoms() == 0 {
        return Err(MetricsError::TooFewAtoms { got: 0 });
    } else {
        masked_centroid(&r.coords, heavy_mask)
    };
    if n < 3 {
        return Err(MetricsError::TooFewAtoms { got: n });
    }
    let (q_bar, _) = masked_centroid(&r_hat.coords, heavy_mask);

    // Cross-covariance H = sum p q^T over centered heavy atoms.
    let mut h = Matrix3::<f64>::zeros();
    for (i, &keep) in heavy_mask.iter().enumerate() {
        if !keep {
            continue;
        }
        let p = Vector3::from(geom::sub(r.coords[i], p_bar));
        let q = Vector3::from(geom::sub(r_hat.coords[i], q_bar));
        h += p * q.transpose();
    }
    let svd = h.svd(true, true);
    let u = svd.u.expect("svd of 3x3 produces u");
    let v_t = svd.v_t.expect("svd of 3x3 produces v_t");
    let v = v_t.transpose();
    let det = (v * u.transpose()).determinant();
    let sign = if det < 0.0 { -1.0 } else { 1.0 };
    let s = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, sign));
    let rot_m = v * s * u.transpose();

    let mut rotation = [[0.0; 3]; 3];
    for (i, row) in rotation.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = rot_m[(i, j)];
        }
    }
    let translation = geom::sub(q_bar, geom::mat_vec(&rotation, p_bar));

    let mut ss = 0.0;
    for (i, &keep) in heavy_mask.iter().enumerate() {
        if !keep {
            continue;
        }
        let mapped = geom::add(geom::mat_vec(&rotation, r.coords[i]), translation);
        let d = geom::sub(mapped, r_hat.coords[i]);
        ss += geom::dot(d, d);
    }
    Ok(Alignment {
        rmsd: (ss / n as f64).sqrt(),
        rotation,
        translation,
    })
}

/// Best-match RMSD of every reference against every generated conformation:
/// `table[ref_idx][gen_idx]`.
pub fn rmsd_table(
    generated: &[Conformation],
    reference: &[Conformation],
    heavy_mask: &[bool],
) -> Result<Vec<Vec<f64>>, MetricsError> {
    if generated.is_empty() || reference.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    reference
        .iter()
        .map(|r| {
            generated
                .iter()
                .map(|g| kabsch_rmsd(g, r, heavy_mask).map(|a| a.rmsd))
                .collect()
        })
        .collect()
}

fn row_minima(table: &[Vec<f64>]) -> Vec<f64> {
    table
        .iter()
        .map(|row| row.iter().copied().fold(f64::INFINITY, f64::min))
        .collect()
}

/// COV and MAT from a precomputed `table[ref][gen]`: the fraction (percent)
/// of references whose best match lies strictly below `delta`, and the mean
/// best-match RMSD.
pub fn cov_mat_from_table(table: &[Vec<f64>], delta: f64) -> (f64, f64) {
    let mins = row_minima(table);
    let covered = mins.iter().filter(|&&m| m < delta).count();
    let cov = 100.0 * covered as f64 / mins.len() as f64;
    let mat = mins.iter().sum::<f64>() / mins.len() as f64;
    (cov, mat)
}

/// MIS from a precomputed table: the fraction (percent) of generated
/// conformations farther than `delta` from every reference.
pub fn mis_from_table(table: &[Vec<f64>], delta: f64) -> f64 {
    let num_gen = table[0].len();
    let mismatched = (0..num_gen)
        .filter(|&g| table.iter().all(|row| row[g] > delta))
        .count();
    100.0 * mismatched as f64 / num_gen as f64
}

pub fn cov_mat(
    generated: &[Conformation],
    reference: &[Conformation],
    delta: f64,
    heavy_mask: &[bool],
) -> Result<(f64, f64), MetricsError> {
    Ok(cov_mat_from_table(
        &rmsd_table(generated, reference, heavy_mask)?,
        delta,
    ))
}

pub fn mis(
    generated: &[Conformation],
    reference: &[Conformation],
    delta: f64,
    heavy_mask: &[bool],
) -> Result<f64, MetricsError> {
    Ok(mis_from_table(
        &rmsd_table(generated, reference, heavy_mask)?,
        delta,
    ))
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Biased (V-statistic) squared-MMD estimate with the Gaussian kernel
/// `k(a, b) = exp(-||a - b||^2 / (2 bandwidth^2))`. Exactly zero when the two
/// sample sets are elementwise identical.
pub fn mmd(x: &[Vec<f64>], y: &[Vec<f64>], bandwidth: f64) -> Result<f64, MetricsError> {
    if x.is_empty() || y.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    if !(bandwidth > 0.0) {
        return Err(MetricsError::NonPositiveBandwidth { bandwidth });
    }
    let dim = x[0].len();
    for v in x.iter().chain(y) {
        if v.len() != dim {
            return Err(MetricsError::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
    }
    let gamma = 1.0 / (2.0 * bandwidth * bandwidth);
    let mean_kernel = |a: &[Vec<f64>], b: &[Vec<f64>]| -> f64 {
        let mut total = 0.0;
        for p in a {
            for q in b {
                total += (-gamma * sq_dist(p, q)).exp();
            }
        }
        total / (a.len() * b.len()) as f64
    };
    Ok(mean_kernel(x, x) + mean_kernel(y, y) - 2.0 * mean_kernel(x, y))
}

/// Median pairwise Euclidean distance of the pooled sample; falls back to 1
/// when every point coincides (the kernel value is then constant anyway).
pub fn median_heuristic_bandwidth(x: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
    let pooled: Vec<&Vec<f64>> = x.iter().chain(y).collect();
    let mut dists = Vec::with_capacity(pooled.len() * (pooled.len() - 1) / 2);
    for i in 0..pooled.len() {
        for j in (i + 1)..pooled.len() {
            dists.push(sq_dist(pooled[i], pooled[j]).sqrt());
        }
    }
    if dists.is_empty() {
        return 1.0;
    }
    let m = median(&mut dists);
    if m > 0.0 {
        m
    } else {
        1.0
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// MMD aggregates over heavy-edge distance distributions of two ensembles.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMmdReport {
    /// Mean over edges of the MMD between the two 1-D marginals.
    pub single: f64,
    /// Mean over unordered edge pairs of the MMD between 2-D joints; absent
    /// when the graph has fewer than two heavy edges.
    pub pair: Option<f64>,
    /// MMD between the full heavy-distance vectors.
    pub all: f64,
}

/// Builds heavy-atom edge distance samples from both conformation sets and
/// compares their Single/Pair/All distributions. Bandwidths are chosen per
/// comparison by the median heuristic.
pub fn distance_mmd_report(
    g: &MolecularGraph,
    generated: &[Conformation],
    reference: &[Conformation],
) -> Result<DistanceMmdReport, MetricsError> {
    if generated.is_empty() || reference.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    let heavy = g.heavy_mask();
    let edges: Vec<(usize, usize)> = g
        .edges()
        .iter()
        .filter(|e| heavy[e.i] && heavy[e.j])
        .map(|e| (e.i, e.j))
        .collect();
    if edges.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    let rows = |set: &[Conformation]| -> Result<Vec<Vec<f64>>, MetricsError> {
        set.iter()
            .map(|r| {
                if r.num_atoms() != g.num_atoms() {
                    return Err(MetricsError::SizeMismatch {
                        expected: g.num_atoms(),
                        got: r.num_atoms(),
                    });
                }
                Ok(edges
                    .iter()
                    .map(|&(i, j)| geom::distance(r.coords[i], r.coords[j]))
                    .collect())
            })
            .collect()
    };
    let gen_rows = rows(generated)?;
    let ref_rows = rows(reference)?;

    let columns = |rows: &[Vec<f64>], dims: &[usize]| -> Vec<Vec<f64>> {
        rows.iter()
            .map(|row| dims.iter().map(|&k| row[k]).collect())
            .collect()
    };
    let compare = |dims: &[usize]| -> Result<f64, MetricsError> {
        let x = columns(&gen_rows, dims);
        let y = columns(&ref_rows, dims);
        let bw = median_heuristic_bandwidth(&x, &y);
        mmd(&x, &y, bw)
    };

    let mut single_total = 0.0;
    for k in 0..edges.len() {
        single_total += compare(&[k])?;
    }
    let single = single_total / edges.len() as f64;

    let pair = if edges.len() < 2 {
        None
    } else {
        let mut total = 0.0;
        let mut count = 0;
        for k in 0..edges.len() {
            for l in (k + 1)..edges.len() {
                total += compare(&[k, l])?;
                count += 1;
            }
        }
        Some(total / count as f64)
    };

    let all_dims: Vec<usize> = (0..edges.len()).collect();
    let all = compare(&all_dims)?;

    Ok(DistanceMmdReport { single, pair, all })
}

/// Whole-test-set metrics: per-threshold COV/MIS, MAT, and MMD aggregates,
/// each reported as mean and median across molecules.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleMetricsReport {
    pub thresholds: Vec<f64>,
    pub num_molecules: usize,
    pub cov_mean: Vec<f64>,
    pub cov_median: Vec<f64>,
    pub mis_mean: Vec<f64>,
    pub mis_median: Vec<f64>,
    pub mat_mean: f64,
    pub mat_median: f64,
    pub mmd_single_mean: f64,
    pub mmd_single_median: f64,
    pub mmd_pair_mean: Option<f64>,
    pub mmd_pair_median: Option<f64>,
    pub mmd_all_mean: f64,
    pub mmd_all_median: f64,
}

fn mean_and_median(values: &[f64]) -> (f64, f64) {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let mut sorted = values.to_vec();
    (mean, median(&mut sorted))
}

/// Evaluates `(graph, generated, reference)` triples and aggregates across
/// molecules.
pub fn evaluate_ensembles(
    molecules: &[(&MolecularGraph, &[Conformation], &[Conformation])],
    thresholds: &[f64],
) -> Result<EnsembleMetricsReport, MetricsError> {
    if molecules.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    let mut cov_per_threshold = vec![Vec::new(); thresholds.len()];
    let mut mis_per_threshold = vec![Vec::new(); thresholds.len()];
    let mut mats = Vec::new();
    let mut singles = Vec::new();
    let mut pairs = Vec::new();
    let mut alls = Vec::new();

    for &(g, generated, reference) in molecules {
        let mask = g.heavy_mask();
        let table = rmsd_table(generated, reference, &mask)?;
        for (t, &delta) in thresholds.iter().enumerate() {
            let (cov, _) = cov_mat_from_table(&table, delta);
            cov_per_threshold[t].push(cov);
            mis_per_threshold[t].push(mis_from_table(&table, delta));
        }
        let mins = row_minima(&table);
        mats.push(mins.iter().sum::<f64>() / mins.len() as f64);
        let mmd_report = distance_mmd_report(g, generated, reference)?;
        singles.push(mmd_report.single);
        if let Some(p) = mmd_report.pair {
            pairs.push(p);
        }
        alls.push(mmd_report.all);
    }

    let mut cov_mean = Vec::new();
    let mut cov_median = Vec::new();
    let mut mis_mean = Vec::new();
    let mut mis_median = Vec::new();
    for t in 0..thresholds.len() {
        let (m, med) = mean_and_median(&cov_per_threshold[t]);
        cov_mean.push(m);
        cov_median.push(med);
        let (m, med) = mean_and_median(&mis_per_threshold[t]);
        mis_mean.push(m);
        mis_median.push(med);
    }
    let (mat_mean, mat_median) = mean_and_median(&mats);
    let (mmd_single_mean, mmd_single_median) = mean_and_median(&singles);
    let (mmd_pair_mean, mmd_pair_median) = if pairs.is_empty() {
        (None, None)
    } else {
        let (m, med) = mean_and_median(&pairs);
        (Some(m), Some(med))
    };
    let (mmd_all_mean, mmd_all_median) = mean_and_median(&alls);

    Ok(EnsembleMetricsReport {
        thresholds: thresholds.to_vec(),
        num_molecules: molecules.len(),
        cov_mean,
        cov_median,
        mis_mean,
        mis_median,
        mat_mean,
        mat_median,
        mmd_single_mean,
        mmd_single_median,
        mmd_pair_mean,
        mmd_pair_median,
        mmd_all_mean,
        mmd_all_median,
    })
}
