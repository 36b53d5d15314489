//! Adjusted Rand index, computed exactly in integer arithmetic.

use alloc::collections::BTreeMap;

use super::ClusterError;

fn choose2(n: u64) -> i128 {
    let n = n as i128;
    n * (n - 1) / 2
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

/// ARI as a reduced fraction `(numerator, denominator)`; `None` for the
/// degenerate case where the index is defined as 1.
pub fn ari_fraction<A: Ord, B: Ord>(a: &[A], b: &[B]) -> Result<Option<(i128, i128)>, ClusterError> {
    if a.len() != b.len() {
        return Err(ClusterError::ItemSetMismatch);
    }
    if a.len() < 2 {
        return Err(ClusterError::TooFewItems);
    }
    let mut joint: BTreeMap<(&A, &B), u64> = BTreeMap::new();
    let mut rows: BTreeMap<&A, u64> = BTreeMap::new();
    let mut cols: BTreeMap<&B, u64> = BTreeMap::new();
    for (x, y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: i128 = joint.values().map(|&n| choose2(n)).sum();
    let sa: i128 = rows.values().map(|&n| choose2(n)).sum();
    let sb: i128 = cols.values().map(|&n| choose2(n)).sum();
    let total = choose2(a.len() as u64);
    // (index - sa*sb/total) / ((sa+sb)/2 - sa*sb/total), scaled by 2*total.
    let num = 2 * index * total - 2 * sa * sb;
    let den = (sa + sb) * total - 2 * sa * sb;
    if den == 0 {
        return Ok(None);
    }
    let g = gcd(num, den);
    let sign = if den < 0 { -1 } else { 1 };
    Ok(Some((sign * num / g, sign * den / g)))
}

/// Adjusted Rand index of two labelings of the same items (by position).
/// Both-all-singletons and both-single-cluster inputs yield 1.
pub fn adjusted_rand_index<A: Ord, B: Ord>(a: &[A], b: &[B]) -> Result<f64, ClusterError> {
    Ok(match ari_fraction(a, b)? {
        None => 1.0,
        Some((num, den)) => num as f64 / den as f64,
    })
}

/// ARI of two keyed partitions, which must cover the same keys.
pub fn adjusted_rand_index_maps<K: Ord, A: Ord, B: Ord>(
    a: &BTreeMap<K, A>,
    b: &BTreeMap<K, B>,
) -> Result<f64, ClusterError> {
    if a.len() != b.len() || a.keys().zip(b.keys()).any(|(x, y)| x != y) {
        return Err(ClusterError::ItemSetMismatch);
    }
    let left: alloc::vec::Vec<&A> = a.values().collect();
    let right: alloc::vec::Vec<&B> = b.values().collect();
    adjusted_rand_index(&left, &right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn known_values() {
        assert_eq!(
            adjusted_rand_index(&['A', 'A', 'B', 'B'], &['A', 'B', 'A', 'B']).unwrap(),
            -0.5
        );
        let p = vec![0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3];
        assert_eq!(adjusted_rand_index(&p, &p).unwrap(), 1.0);
        let renamed: vec::Vec<u8> = p.iter().map(|&x| [9u8, 4, 7, 1][x]).collect();
        assert_eq!(adjusted_rand_index(&p, &renamed).unwrap(), 1.0);
    }

    #[test]
    fn degenerate_partitions() {
        assert_eq!(adjusted_rand_index(&[0, 1, 2], &[5, 6, 7]).unwrap(), 1.0);
        assert_eq!(adjusted_rand_index(&[0, 0, 0], &[1, 1, 1]).unwrap(), 1.0);
    }

    #[test]
    fn errors() {
        assert_eq!(adjusted_rand_index(&[0, 1], &[0]), Err(ClusterError::ItemSetMismatch));
        assert_eq!(adjusted_rand_index(&[0], &[0]), Err(ClusterError::TooFewItems));
        let a: BTreeMap<&str, u8> = [("x", 0), ("y", 1)].into_iter().collect();
        let b: BTreeMap<&str, u8> = [("x", 0), ("z", 1)].into_iter().collect();
        assert_eq!(adjusted_rand_index_maps(&a, &b), Err(ClusterError::ItemSetMismatch));
    }
}
