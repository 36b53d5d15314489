//! Summaries of a clustering timeline and of similarity matrices.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use super::{ClusterError, ClusterTimeline};
use crate::linalg::{symmetric_eigen, DenseMatrix};
use crate::networks::SimilarityMatrix;
use crate::{MonthKey, ProgramId};

/// Population standard deviation of the strictly upper-triangular entries.
pub fn matrix_stddev(m: &SimilarityMatrix) -> Result<f64, ClusterError> {
    let n = m.len();
    if n < 3 {
        return Err(ClusterError::TooFewPrograms(n));
    }
    let first = m.get(0, 1);
    // Shifted by the first entry, so equal entries give exactly 0.
    let values: Vec<f64> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .map(|(i, j)| m.get(i, j) - first)
        .collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / values.len() as f64;
    Ok(libm::sqrt(var))
}

/// Programs moving from one cluster to another between consecutive months.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SankeyFlow {
    pub from_month: MonthKey,
    pub to_month: MonthKey,
    pub from_cluster: usize,
    pub to_cluster: usize,
    pub programs: Vec<ProgramId>,
    pub count: usize,
}

/// Non-empty flows for each consecutive month pair, ordered by month pair
/// then `(from_cluster, to_cluster)`. Programs missing from either month
/// are not counted.
pub fn sankey_flows(timeline: &ClusterTimeline) -> Vec<SankeyFlow> {
    let mut flows = Vec::new();
    for pair in timeline.months.windows(2) {
        let (Some(from), Some(to)) = (timeline.assignments.get(&pair[0]), timeline.assignments.get(&pair[1])) else {
            continue;
        };
        let mut groups: BTreeMap<(usize, usize), Vec<ProgramId>> = BTreeMap::new();
        for (program, &a) in from {
            if let Some(&b) = to.get(program) {
                groups.entry((a, b)).or_default().push(program.clone());
            }
        }
        for ((from_cluster, to_cluster), programs) in groups {
            flows.push(SankeyFlow {
                from_month: pair[0].clone(),
                to_month: pair[1].clone(),
                from_cluster,
                to_cluster,
                count: programs.len(),
                programs,
            });
        }
    }
    flows
}

/// Programs projected onto the leading principal components of their
/// one-hot assignment histories.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaProjection {
    pub programs: Vec<ProgramId>,
    /// `programs.len() x dims`.
    pub coordinates: DenseMatrix,
    /// Variance captured by each component, descending.
    pub explained_variance: Vec<f64>,
}

impl PcaProjection {
    pub fn point(&self, i: usize) -> &[f64] {
        self.coordinates.row(i)
    }
}

/// One-hot history matrix: one row per program, `k` columns per month.
pub fn assignment_features(timeline: &ClusterTimeline) -> (Vec<ProgramId>, DenseMatrix) {
    let programs = timeline.programs();
    let k = timeline.k;
    let mut x = DenseMatrix::zeros(programs.len(), timeline.months.len() * k);
    for (m, month) in timeline.months.iter().enumerate() {
        let Some(labels) = timeline.assignments.get(month) else {
            continue;
        };
        for (i, program) in programs.iter().enumerate() {
            if let Some(&l) = labels.get(program) {
                x[(i, m * k + l)] = 1.0;
            }
        }
    }
    (programs, x)
}

pub fn pca_assignments(timeline: &ClusterTimeline, dims: usize) -> Result<PcaProjection, ClusterError> {
    let (programs, mut x) = assignment_features(timeline);
    let n = programs.len();
    if n < 2 {
        return Err(ClusterError::InsufficientData(format!("{n} programs, need at least 2")));
    }
    if timeline.months.len() < 2 {
        return Err(ClusterError::InsufficientData(format!(
            "{} months, need at least 2",
            timeline.months.len()
        )));
    }
    let d = x.cols();
    if dims == 0 || dims > d {
        return Err(ClusterError::InsufficientData(format!(
            "{dims} components requested from {d} features"
        )));
    }
    for j in 0..d {
        let mean = (0..n).map(|i| x[(i, j)]).sum::<f64>() / n as f64;
        for i in 0..n {
            x[(i, j)] -= mean;
        }
    }
    let cov = DenseMatrix::from_fn(d, d, |a, b| {
        (0..n).map(|i| x[(i, a)] * x[(i, b)]).sum::<f64>() / (n - 1) as f64
    });
    let eigen = symmetric_eigen(&cov).map_err(ClusterError::EigensolverFailure)?;
    let basis = DenseMatrix::from_fn(d, dims, |r, c| eigen.vectors[(r, c)]);
    let coordinates = x.matmul(&basis).expect("shapes agree");
    Ok(PcaProjection {
        programs,
        coordinates,
        explained_variance: eigen.values[..dims].iter().map(|v| v.max(0.0)).collect(),
    })
}
