//! Finite partitions of `[n] = {1, ..., n}` and the coagulation algebra.
//!
//! Blocks are kept as ascending `Vec<usize>` and ordered by least element, so
//! two partitions are equal exactly when their block lists are equal.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartitionError {
    #[error("ground set size must be positive")]
    EmptyGroundSet,
    #[error("block {0} is empty")]
    EmptyBlock(usize),
    #[error("element {0} appears in more than one block")]
    Duplicate(usize),
    #[error("element {element} is outside [1, {n}]")]
    OutOfRange { element: usize, n: usize },
    #[error("element {0} is not covered by any block")]
    Gap(usize),
    #[error("restriction size {m} outside [1, {n}]")]
    RestrictionOutOfRange { m: usize, n: usize },
    #[error("ground sets differ: {0} vs {1}")]
    MismatchedSize(usize, usize),
    #[error("right operand has {right_n} elements but left operand has {left_blocks} blocks")]
    CoagIndexTooSmall { left_blocks: usize, right_n: usize },
    #[error("single block needs at least two elements, got {0}")]
    SingleBlockTooSmall(usize),
    #[error("expected exactly one non-singleton block, found {0}")]
    NotSingleBlock(usize),
    #[error("cannot parse partition text: {0}")]
    Parse(String),
}

/// A partition of `[n]` with blocks in canonical order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Validates and canonicalizes `blocks` as a partition of `[n]`.
    pub fn new(blocks: Vec<Vec<usize>>, n: usize) -> Result<Self, PartitionError> {
        if n == 0 {
            return Err(PartitionError::EmptyGroundSet);
        }
        let mut seen = vec![false; n + 1];
        let mut blocks = blocks;
        for (bi, block) in blocks.iter_mut().enumerate() {
            if block.is_empty() {
                return Err(PartitionError::EmptyBlock(bi));
            }
            for &e in block.iter() {
                if e == 0 || e > n {
                    return Err(PartitionError::OutOfRange { element: e, n });
                }
                if seen[e] {
                    return Err(PartitionError::Duplicate(e));
                }
                seen[e] = true;
            }
            block.sort_unstable();
        }
        if let Some(gap) = (1..=n).find(|&e| !seen[e]) {
            return Err(PartitionError::Gap(gap));
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        Ok(Partition { n, blocks })
    }

    /// Builds a partition from blocks already known to be valid; only sorts.
    pub(crate) fn from_blocks_unchecked(mut blocks: Vec<Vec<usize>>, n: usize) -> Self {
        for b in blocks.iter_mut() {
            b.sort_unstable();
        }
        blocks.retain(|b| !b.is_empty());
        blocks.sort_unstable_by_key(|b| b[0]);
        Partition { n, blocks }
    }

    /// Builds the partition whose block label of element `i` (1-based) is
    /// `labels[i - 1]`. Labels are arbitrary; blocks are canonicalized.
    pub fn from_labels<L: Copy + Eq + std::hash::Hash>(labels: &[L]) -> Result<Self, PartitionError> {
        if labels.is_empty() {
            return Err(PartitionError::EmptyGroundSet);
        }
        let mut index = std::collections::HashMap::new();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for (i, l) in labels.iter().enumerate() {
            let b = *index.entry(*l).or_insert_with(|| {
                blocks.push(Vec::new());
                blocks.len() - 1
            });
            blocks[b].push(i + 1);
        }
        // first-occurrence order is already least-element order
        Ok(Partition {
            n: labels.len(),
            blocks,
        })
    }

    /// `O_[n]`, the partition into singletons.
    pub fn singletons(n: usize) -> Self {
        Partition {
            n,
            blocks: (1..=n).map(|i| vec![i]).collect(),
        }
    }

    /// The one-block partition `{{1, ..., n}}`.
    pub fn one_block(n: usize) -> Self {
        Partition {
            n,
            blocks: vec![(1..=n).collect()],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// The `i`-th block, 1-based, if it exists.
    pub fn block(&self, i: usize) -> Option<&[usize]> {
        if i == 0 {
            return None;
        }
        self.blocks.get(i - 1).map(|b| b.as_slice())
    }

    /// 1-based index of the block holding `element`.
    pub fn block_of(&self, element: usize) -> Option<usize> {
        self.blocks
            .iter()
            .position(|b| b.binary_search(&element).is_ok())
            .map(|i| i + 1)
    }

    /// Block label (1-based) of every element, indexed by `element - 1`.
    pub fn labels(&self) -> Vec<usize> {
        let mut labels = vec![0; self.n];
        for (bi, b) in self.blocks.iter().enumerate() {
            for &e in b {
                labels[e - 1] = bi + 1;
            }
        }
        labels
    }

    pub fn is_singletons(&self) -> bool {
        self.blocks.len() == self.n
    }

    pub fn non_singleton_count(&self) -> usize {
        self.blocks.iter().filter(|b| b.len() > 1).count()
    }

    /// Block sizes in canonical block order.
    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.len()).collect()
    }

    /// Finite-`n` frequencies `|block| / n` as exact rationals `(numerator, n)`.
    pub fn block_frequencies(&self) -> Vec<(usize, usize)> {
        self.blocks.iter().map(|b| (b.len(), self.n)).collect()
    }

    /// Restriction to `[m]`.
    pub fn restrict(&self, m: usize) -> Result<Self, PartitionError> {
        if m == 0 || m > self.n {
            return Err(PartitionError::RestrictionOutOfRange { m, n: self.n });
        }
        let blocks = self
            .blocks
            .iter()
            .take_while(|b| b[0] <= m)
            .map(|b| b.iter().copied().take_while(|&e| e <= m).collect::<Vec<_>>())
            .collect();
        Ok(Partition { n: m, blocks })
    }

    /// Image under the relabelling `element -> perm[element - 1]`.
    pub fn permute(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n, "permutation length must equal n");
        let blocks = self
            .blocks
            .iter()
            .map(|b| b.iter().map(|&e| perm[e - 1]).collect())
            .collect();
        Partition::from_blocks_unchecked(blocks, self.n)
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.blocks {
            f.write_str("{")?;
            for (k, e) in b.iter().enumerate() {
                if k > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{e}")?;
            }
            f.write_str("}")?;
        }
        Ok(())
    }
}

impl FromStr for Partition {
    type Err = PartitionError;

    /// Parses the text form `{1,3}{2}{4}`; `n` is the largest element.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let mut blocks = Vec::new();
        let mut rest = s;
        while !rest.is_empty() {
            let body = rest
                .strip_prefix('{')
                .ok_or_else(|| PartitionError::Parse(s.to_string()))?;
            let close = body
                .find('}')
                .ok_or_else(|| PartitionError::Parse(s.to_string()))?;
            let block = body[..close]
                .split(',')
                .map(|t| t.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| PartitionError::Parse(s.to_string()))?;
            blocks.push(block);
            rest = &body[close + 1..];
        }
        let n = blocks.iter().flatten().copied().max().unwrap_or(0);
        Partition::new(blocks, n)
    }
}

/// `Coag(pi, pi_prime)`: block `i` of the result is the union of the blocks of
/// `pi` indexed by block `i` of `pi_prime`. Indices of `pi_prime` beyond the
/// block count of `pi` refer to empty blocks and contribute nothing.
pub fn coag(pi: &Partition, pi_prime: &Partition) -> Result<Partition, PartitionError> {
    let k = pi.block_count();
    if pi_prime.n < k {
        return Err(PartitionError::CoagIndexTooSmall {
            left_blocks: k,
            right_n: pi_prime.n,
        });
    }
    let mut blocks = Vec::with_capacity(pi_prime.block_count());
    for group in &pi_prime.blocks {
        let mut merged: Vec<usize> = group
            .iter()
            .take_while(|&&j| j <= k)
            .flat_map(|&j| pi.blocks[j - 1].iter().copied())
            .collect();
        if !merged.is_empty() {
            merged.sort_unstable();
            blocks.push(merged);
        }
    }
    blocks.sort_unstable_by_key(|b| b[0]);
    Ok(Partition { n: pi.n, blocks })
}

/// Largest `j <= n` such that the restrictions of both partitions to `[j]`
/// agree. The metric is `2^-j`.
pub fn distance_index(pi: &Partition, pi_prime: &Partition) -> Result<usize, PartitionError> {
    if pi.n != pi_prime.n {
        return Err(PartitionError::MismatchedSize(pi.n, pi_prime.n));
    }
    let a = pi.labels();
    let b = pi_prime.labels();
    // Canonical labels are assigned in first-occurrence order, so restrictions
    // to [j] agree iff the label prefixes of length j agree.
    Ok(a.iter().zip(&b).take_while(|(x, y)| x == y).count())
}

/// Encodes a level set `I` as `1_I`, the partition of `[n]` whose only
/// non-singleton block is `I`.
pub fn encode_single_block(members: &[usize], n: usize) -> Result<Partition, PartitionError> {
    let mut set = members.to_vec();
    set.sort_unstable();
    set.dedup();
    if set.len() < 2 {
        return Err(PartitionError::SingleBlockTooSmall(set.len()));
    }
    if let Some(&e) = set.iter().find(|&&e| e == 0 || e > n) {
        return Err(PartitionError::OutOfRange { element: e, n });
    }
    let mut blocks = Vec::with_capacity(n - set.len() + 1);
    let mut placed = false;
    for i in 1..=n {
        if set.binary_search(&i).is_ok() {
            if !placed {
                blocks.push(set.clone());
                placed = true;
            }
        } else {
            blocks.push(vec![i]);
        }
    }
    Ok(Partition { n, blocks })
}

/// Inverse of [`encode_single_block`].
pub fn decode_single_block(pi: &Partition) -> Result<Vec<usize>, PartitionError> {
    let mut big = pi.blocks.iter().filter(|b| b.len() > 1);
    match (big.next(), big.next()) {
        (Some(b), None) => Ok(b.clone()),
        (None, _) => Err(PartitionError::NotSingleBlock(0)),
        (Some(_), Some(_)) => Err(PartitionError::NotSingleBlock(pi.non_singleton_count())),
    }
}

/// Every partition of `[n]`, in restricted-growth-string order. Intended for
/// exhaustive oracles; the count is the Bell number of `n`.
pub fn enumerate_partitions(n: usize) -> Vec<Partition> {
    assert!(n >= 1 && n <= 12, "enumeration supported for 1 <= n <= 12");
    let mut out = Vec::new();
    let mut rgs = vec![0usize; n];
    fn rec(pos: usize, max: usize, rgs: &mut Vec<usize>, out: &mut Vec<Partition>) {
        let n = rgs.len();
        if pos == n {
            out.push(Partition::from_labels(rgs).expect("non-empty labels"));
            return;
        }
        for v in 0..=max + 1 {
            rgs[pos] = v;
            rec(pos + 1, max.max(v), rgs, out);
        }
    }
    // element 1 always carries label 0
    if n == 1 {
        out.push(Partition::singletons(1));
        return out;
    }
    rec(1, 0, &mut rgs, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Partition {
        s.parse().unwrap()
    }

    #[test]
    fn make_partition_canonical_order() {
        let pi = Partition::new(vec![vec![2], vec![3, 1]], 3).unwrap();
        assert_eq!(pi.blocks(), &[vec![1, 3], vec![2]]);
        assert_eq!(Partition::new(vec![vec![1], vec![2], vec![3]], 3).unwrap(), Partition::singletons(3));
    }

    #[test]
    fn make_partition_errors_name_offender() {
        assert_eq!(
            Partition::new(vec![vec![1, 2], vec![2, 3]], 3),
            Err(PartitionError::Duplicate(2))
        );
        assert_eq!(Partition::new(vec![vec![1], vec![3]], 3), Err(PartitionError::Gap(2)));
        assert_eq!(
            Partition::new(vec![vec![1, 4], vec![2, 3]], 3),
            Err(PartitionError::OutOfRange { element: 4, n: 3 })
        );
        assert!(matches!(Partition::new(vec![vec![], vec![1]], 1), Err(PartitionError::EmptyBlock(0))));
    }

    #[test]
    fn coag_examples() {
        assert_eq!(coag(&p("{1,3}{2}{4}"), &p("{1,2}{3}{4}")).unwrap(), p("{1,2,3}{4}"));
        // two lookdown events: the second event's partition on the left
        let later = p("{1,2,4}{3}{5}{6}{7}");
        let earlier = p("{1}{2,5,7}{3}{4}{6}");
        assert_eq!(coag(&later, &earlier).unwrap(), p("{1,2,4}{3,7}{5}{6}"));
    }

    #[test]
    fn coag_identities() {
        let pi = p("{1,4}{2}{3,5}");
        assert_eq!(coag(&pi, &Partition::singletons(3)).unwrap(), pi);
        assert_eq!(coag(&Partition::singletons(5), &pi).unwrap(), pi);
    }

    #[test]
    fn coag_rejects_short_right_operand() {
        assert!(matches!(
            coag(&Partition::singletons(4), &Partition::singletons(3)),
            Err(PartitionError::CoagIndexTooSmall { .. })
        ));
    }

    #[test]
    fn restrict_examples() {
        assert_eq!(p("{1,4}{2,3}").restrict(3).unwrap(), p("{1}{2,3}"));
        let pi = p("{1,4}{2,3}");
        assert_eq!(pi.restrict(4).unwrap(), pi);
        assert_eq!(p("{1,2,3}").restrict(1).unwrap(), p("{1}"));
        assert!(pi.restrict(0).is_err());
        assert!(pi.restrict(5).is_err());
    }

    #[test]
    fn distance_index_examples() {
        let pi = p("{1,3}{2}");
        assert_eq!(distance_index(&pi, &pi).unwrap(), 3);
        assert_eq!(distance_index(&p("{1,2}{3}"), &Partition::singletons(3)).unwrap(), 1);
        assert_eq!(distance_index(&p("{1}{2,3}"), &Partition::singletons(3)).unwrap(), 2);
        assert!(distance_index(&pi, &Partition::singletons(4)).is_err());
    }

    #[test]
    fn frequencies() {
        assert_eq!(Partition::singletons(4).block_frequencies(), vec![(1, 4); 4]);
        assert_eq!(p("{1,2,3}{4}").block_frequencies(), vec![(3, 4), (1, 4)]);
        assert_eq!(Partition::one_block(6).block_frequencies(), vec![(6, 6)]);
    }

    #[test]
    fn single_block_codec() {
        assert_eq!(encode_single_block(&[2, 5], 5).unwrap(), p("{1}{2,5}{3}{4}"));
        assert_eq!(decode_single_block(&p("{1}{2,5,7}{3}{4}{6}")).unwrap(), vec![2, 5, 7]);
        assert_eq!(decode_single_block(&Partition::singletons(4)), Err(PartitionError::NotSingleBlock(0)));
        assert_eq!(decode_single_block(&p("{1,2}{3,4}")), Err(PartitionError::NotSingleBlock(2)));
        assert_eq!(encode_single_block(&[3], 5), Err(PartitionError::SingleBlockTooSmall(1)));
    }

    #[test]
    fn text_round_trip() {
        let pi = p("{1,3}{2}{4}");
        assert_eq!(pi.to_string(), "{1,3}{2}{4}");
        assert!("{1,3}{2".parse::<Partition>().is_err());
    }

    #[test]
    fn bell_numbers() {
        let bell = [1, 2, 5, 15, 52, 203, 877];
        for (n, &b) in (1..=7).zip(bell.iter()) {
            assert_eq!(enumerate_partitions(n).len(), b);
        }
    }

    #[test]
    fn restriction_compatible_with_coag_exhaustive_p4() {
        let all = enumerate_partitions(4);
        for a in &all {
            for b in &all {
                let c = coag(a, b).unwrap();
                for m in 1..=4 {
                    let am = a.restrict(m).unwrap();
                    let bm = b.restrict(am.block_count()).unwrap();
                    assert_eq!(c.restrict(m).unwrap(), coag(&am, &bm).unwrap());
                }
            }
        }
    }

    #[test]
    fn distance_index_is_n_iff_equal() {
        let all = enumerate_partitions(4);
        for a in &all {
            for b in &all {
                assert_eq!(distance_index(a, b).unwrap() == 4, a == b);
            }
        }
    }
}
