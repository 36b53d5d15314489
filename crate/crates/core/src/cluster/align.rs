//! Cross-month label alignment.
//!
//! The first month keeps its labels. Each later month is relabeled by the
//! permutation that keeps the most programs on the label they carried the
//! last time they were seen; ties go to the lexicographically smallest
//! permutation.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::{adjusted_rand_index_maps, ClusterError};
use crate::{MonthKey, ProgramId};

/// Per-month cluster ids straight out of k-means.
pub type RawAssignments = BTreeMap<MonthKey, BTreeMap<ProgramId, usize>>;

/// Above this k, permutations are found by assignment instead of
/// enumeration.
const EXHAUSTIVE_MAX_K: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterTimeline {
    pub k: usize,
    pub months: Vec<MonthKey>,
    pub assignments: BTreeMap<MonthKey, BTreeMap<ProgramId, usize>>,
    /// ARI of each month's clusters against the program networks; months
    /// with fewer than two programs have no entry.
    pub ari_by_month: BTreeMap<MonthKey, f64>,
}

impl ClusterTimeline {
    /// Every program seen in any month, sorted.
    pub fn programs(&self) -> Vec<ProgramId> {
        let mut all: Vec<ProgramId> = self.assignments.values().flat_map(|m| m.keys().cloned()).collect();
        all.sort();
        all.dedup();
        all
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len())
        .rev()
        .find(|&j| p[j] > p[i - 1])
        .expect("pivot has a successor");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

fn score(weights: &[Vec<i64>], perm: &[usize]) -> i64 {
    perm.iter().enumerate().map(|(j, &c)| weights[j][c]).sum()
}

/// Maximum-weight perfect assignment on a square matrix. Returns the
/// column of each row and the total weight.
pub fn hungarian_max(weights: &[Vec<i64>]) -> (Vec<usize>, i64) {
    let n = weights.len();
    if n == 0 {
        return (Vec::new(), 0);
    }
    const INF: i64 = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = -weights[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        assignment[p[j] - 1] = j - 1;
    }
    let total = score(weights, &assignment);
    (assignment, total)
}

fn best_exhaustive(weights: &[Vec<i64>]) -> Vec<usize> {
    let k = weights.len();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = perm.clone();
    let mut best_score = score(weights, &perm);
    while next_permutation(&mut perm) {
        let s = score(weights, &perm);
        if s > best_score {
            best_score = s;
            best = perm.clone();
        }
    }
    best
}

/// Optimum of the rows `from..` restricted to unused columns.
fn sub_optimum(weights: &[Vec<i64>], from: usize, used: &[bool]) -> i64 {
    let cols: Vec<usize> = (0..used.len()).filter(|&c| !used[c]).collect();
    let sub: Vec<Vec<i64>> = weights[from..]
        .iter()
        .map(|row| cols.iter().map(|&c| row[c]).collect())
        .collect();
    hungarian_max(&sub).1
}

fn best_by_assignment(weights: &[Vec<i64>]) -> Vec<usize> {
    let k = weights.len();
    let optimum = hungarian_max(weights).1;
    let mut used = vec![false; k];
    let mut perm = Vec::with_capacity(k);
    let mut fixed = 0i64;
    for j in 0..k {
        for c in 0..k {
            if used[c] {
                continue;
            }
            used[c] = true;
            if fixed + weights[j][c] + sub_optimum(weights, j + 1, &used) == optimum {
                fixed += weights[j][c];
                perm.push(c);
                break;
            }
            used[c] = false;
        }
    }
    perm
}

/// Lexicographically smallest permutation `perm` (raw label `j` becomes
/// `perm[j]`) maximizing `sum_j weights[j][perm[j]]`.
fn best_permutation(weights: &[Vec<i64>]) -> Vec<usize> {
    if weights.len() <= EXHAUSTIVE_MAX_K {
        best_exhaustive(weights)
    } else {
        best_by_assignment(weights)
    }
}

pub fn align_labels(raw: &RawAssignments, k: usize) -> Result<ClusterTimeline, ClusterError> {
    if raw.is_empty() {
        return Err(ClusterError::EmptyTimeline);
    }
    for (month, labels) in raw {
        if let Some(&label) = labels.values().find(|&&l| l >= k) {
            return Err(ClusterError::KMismatch {
                month: month.clone(),
                label,
                k,
            });
        }
    }
    let mut last_label: BTreeMap<ProgramId, usize> = BTreeMap::new();
    let mut assignments = BTreeMap::new();
    for (month, labels) in raw {
        let mut overlap = vec![vec![0i64; k]; k];
        for (program, &raw_label) in labels {
            if let Some(&prev) = last_label.get(program) {
                overlap[raw_label][prev] += 1;
            }
        }
        let perm = best_permutation(&overlap);
        let aligned: BTreeMap<ProgramId, usize> = labels.iter().map(|(p, &l)| (p.clone(), perm[l])).collect();
        for (p, &l) in &aligned {
            last_label.insert(p.clone(), l);
        }
        assignments.insert(month.clone(), aligned);
    }

    let mut ari_by_month = BTreeMap::new();
    for (month, labels) in &assignments {
        if labels.len() < 2 {
            continue;
        }
        let networks: BTreeMap<&ProgramId, &str> = labels.keys().map(|p| (p, p.network.as_str())).collect();
        let clusters: BTreeMap<&ProgramId, usize> = labels.iter().map(|(p, &l)| (p, l)).collect();
        ari_by_month.insert(month.clone(), adjusted_rand_index_maps(&clusters, &networks)?);
    }
    Ok(ClusterTimeline {
        k,
        months: raw.keys().cloned().collect(),
        assignments,
        ari_by_month,
    })
}
