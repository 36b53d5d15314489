//! Ng-Jordan-Weiss spectral embedding.

use alloc::format;
use alloc::vec::Vec;

use super::ClusterError;
use crate::linalg::{symmetric_eigen, DenseMatrix};
use crate::networks::SimilarityMatrix;
use crate::{MonthKey, ProgramId};

/// Eigenvectors whose eigenvalue is at most this fraction of the largest
/// carry no affinity structure and are zeroed in the embedding.
pub const NULL_EIGENVALUE_TOLERANCE: f64 = 1e-10;

/// Row-normalized coordinates of each program in the top-`k` eigenspace of
/// the normalized affinity.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub month: MonthKey,
    pub programs: Vec<ProgramId>,
    pub coordinates: DenseMatrix,
    /// The `k` leading eigenvalues of `D^-1/2 P D^-1/2`.
    pub eigenvalues: Vec<f64>,
    /// Rows that were zero before normalization.
    pub zero_rows: Vec<usize>,
}

impl Embedding {
    pub fn k(&self) -> usize {
        self.coordinates.cols()
    }
}

pub fn spectral_embed(p: &SimilarityMatrix, k: usize) -> Result<Embedding, ClusterError> {
    spectral_embed_values(p.month(), p.programs(), p.values(), k)
}

/// Embeds a raw affinity matrix; entries need only be finite, symmetric and
/// non-negative, so scaled copies of `P` are accepted.
pub fn spectral_embed_values(
    month: &MonthKey,
    programs: &[ProgramId],
    affinity: &DenseMatrix,
    k: usize,
) -> Result<Embedding, ClusterError> {
    let n = programs.len();
    if affinity.rows() != n || !affinity.is_square() {
        return Err(ClusterError::InvalidAffinity(format!(
            "{}x{} matrix for {n} programs",
            affinity.rows(),
            affinity.cols()
        )));
    }
    if k < 2 || k > n {
        return Err(ClusterError::InvalidK { k, n });
    }
    if affinity.as_slice().iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(ClusterError::InvalidAffinity("negative or non-finite entry".into()));
    }
    let degrees: Vec<f64> = (0..n).map(|i| affinity.row(i).iter().sum()).collect();
    if let Some(i) = degrees.iter().position(|&d| d <= 0.0) {
        return Err(ClusterError::IsolatedProgram(programs[i].clone()));
    }
    let inv_sqrt: Vec<f64> = degrees.iter().map(|&d| 1.0 / libm::sqrt(d)).collect();
    let normalized = DenseMatrix::from_fn(n, n, |i, j| inv_sqrt[i] * affinity[(i, j)] * inv_sqrt[j]);
    let eigen = symmetric_eigen(&normalized).map_err(ClusterError::EigensolverFailure)?;

    let top = eigen.values[0].abs().max(f64::MIN_POSITIVE);
    let mut coordinates = DenseMatrix::zeros(n, k);
    for j in 0..k {
        if eigen.values[j].abs() <= NULL_EIGENVALUE_TOLERANCE * top {
            continue;
        }
        for i in 0..n {
            coordinates[(i, j)] = eigen.vectors[(i, j)];
        }
    }
    let mut zero_rows = Vec::new();
    for i in 0..n {
        let norm = libm::sqrt(coordinates.row(i).iter().map(|x| x * x).sum());
        if norm == 0.0 {
            zero_rows.push(i);
        } else {
            coordinates.row_mut(i).iter_mut().for_each(|x| *x /= norm);
        }
    }
    Ok(Embedding {
        month: month.clone(),
        programs: programs.to_vec(),
        coordinates,
        eigenvalues: eigen.values[..k].to_vec(),
        zero_rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::networks::SimilarityKind;
    use alloc::string::ToString;

    fn programs(n: usize) -> Vec<ProgramId> {
        (0..n)
            .map(|i| ProgramId::new("NET", alloc::format!("P{i:02}")))
            .collect()
    }

    fn sim(values: DenseMatrix) -> SimilarityMatrix {
        let n = values.rows();
        SimilarityMatrix::new(
            "2020-01".parse().unwrap(),
            programs(n),
            values,
            SimilarityKind::Combined,
        )
        .unwrap()
    }

    fn dist(a: &[f64], b: &[f64]) -> f64 {
        libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
    }

    #[test]
    fn two_blocks_embed_to_two_points() {
        let p = sim(DenseMatrix::from_fn(
            6,
            6,
            |i, j| if (i < 3) == (j < 3) { 1.0 } else { 0.0 },
        ));
        let e = spectral_embed(&p, 2).unwrap();
        let c = &e.coordinates;
        for i in 0..3 {
            assert!(dist(c.row(0), c.row(i)) < 1e-9);
            assert!(dist(c.row(3), c.row(3 + i)) < 1e-9);
        }
        assert!(dist(c.row(0), c.row(3)) > 1.0);
        assert!(e.zero_rows.is_empty());
    }

    #[test]
    fn all_ones_embed_to_one_point() {
        let p = sim(DenseMatrix::from_fn(5, 5, |_, _| 1.0));
        let e = spectral_embed(&p, 3).unwrap();
        for i in 1..5 {
            assert!(dist(e.coordinates.row(0), e.coordinates.row(i)) < 1e-9);
        }
    }

    #[test]
    fn errors() {
        let p = sim(DenseMatrix::identity(3));
        assert_eq!(spectral_embed(&p, 1), Err(ClusterError::InvalidK { k: 1, n: 3 }));
        assert_eq!(spectral_embed(&p, 4), Err(ClusterError::InvalidK { k: 4, n: 3 }));
        let zero = DenseMatrix::zeros(3, 3);
        let err = spectral_embed_values(&"2020-01".parse().unwrap(), &programs(3), &zero, 2).unwrap_err();
        assert_eq!(err.to_string(), "program NET/P00 has zero total affinity");
    }
}
