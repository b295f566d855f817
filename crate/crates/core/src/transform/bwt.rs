//! Burrows-Wheeler block sort over 32-bit symbols with an explicit sentinel.
//!
//! The sentinel is a reserved value that never appears in data (delta-mapped
//! symbols stay at or below [`super::MAX_ZIGZAG_DELTA`]) and sorts strictly
//! before every other symbol. Appending it makes all rotations distinct, so
//! sorting rotations equals sorting suffixes and the inverse needs only the
//! row index of the unrotated sequence.

use crate::error::{Error, Result};

/// Reserved sentinel symbol, strictly smallest in sort order.
pub const SENTINEL: u32 = u32::MAX;

/// Sort key: the sentinel orders first, data symbols keep numeric order.
#[inline]
pub(crate) fn sym_key(s: u32) -> u64 {
    if s == SENTINEL {
        0
    } else {
        u64::from(s) + 1
    }
}

/// Output of the forward transform: the last column of the sorted rotation
/// matrix (sentinel included) and the row holding the unrotated sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BwtBlock {
    pub last_column: Vec<u32>,
    pub primary_index: usize,
}

/// Suffix array by prefix doubling, O(n log^2 n), any u64 key alphabet.
fn suffix_array(keys: &[u64]) -> Vec<u32> {
    let n = keys.len();
    let mut sa: Vec<u32> = (0..n as u32).collect();
    sa.sort_unstable_by_key(|&i| keys[i as usize]);

    let mut rank = vec![0u32; n];
    for w in 1..n {
        let prev = sa[w - 1] as usize;
        let cur = sa[w] as usize;
        rank[cur] = rank[prev] + u32::from(keys[cur] != keys[prev]);
    }

    let mut tmp = vec![0u32; n];
    let mut step = 1usize;
    while (rank[sa[n - 1] as usize] as usize) < n - 1 {
        let pair = |i: u32| -> (u32, i64) {
            let i = i as usize;
            let second = if i + step < n { rank[i + step] as i64 } else { -1 };
            (rank[i], second)
        };
        sa.sort_unstable_by_key(|&i| pair(i));
        tmp[sa[0] as usize] = 0;
        for w in 1..n {
            let prev = sa[w - 1];
            let cur = sa[w];
            tmp[cur as usize] = tmp[prev as usize] + u32::from(pair(cur) != pair(prev));
        }
        rank.copy_from_slice(&tmp);
        step <<= 1;
    }
    sa
}

/// Sorts all rotations of `seq` plus a trailing sentinel and returns the
/// last column together with the sorted position of the unrotated form.
pub fn bwt_forward(seq: &[u32]) -> Result<BwtBlock> {
    if seq.is_empty() {
        return Err(Error::InvalidArgument("cannot block-sort an empty sequence".into()));
    }
    if seq.contains(&SENTINEL) {
        return Err(Error::InvalidArgument(
            "sequence contains the reserved sentinel value".into(),
        ));
    }
    let n = seq.len();
    let total = n + 1;
    let mut keys = Vec::with_capacity(total);
    keys.extend(seq.iter().map(|&s| sym_key(s)));
    keys.push(sym_key(SENTINEL));

    let sa = suffix_array(&keys);

    let at = |i: usize| if i == n { SENTINEL } else { seq[i] };
    let mut last_column = Vec::with_capacity(total);
    let mut primary_index = 0;
    for (row, &start) in sa.iter().enumerate() {
        let start = start as usize;
        last_column.push(at((start + n) % total));
        if start == 0 {
            primary_index = row;
        }
    }
    Ok(BwtBlock {
        last_column,
        primary_index,
    })
}

/// Inverts the block sort by last-to-front walking.
pub fn bwt_inverse(block: &BwtBlock) -> Result<Vec<u32>> {
    let last = &block.last_column;
    let total = last.len();
    if total == 0 {
        return Err(Error::Corrupt("empty last column".into()));
    }
    let sentinels = last.iter().filter(|&&s| s == SENTINEL).count();
    if sentinels != 1 {
        return Err(Error::Corrupt(format!(
            "expected exactly one sentinel in the last column, found {sentinels}"
        )));
    }
    if block.primary_index >= total {
        return Err(Error::Corrupt(format!(
            "primary index {} outside column of length {total}",
            block.primary_index
        )));
    }

    // Occurrence counts per symbol, in sorted symbol order, give the start
    // of each symbol's range in the first column.
    let mut symbols: Vec<u32> = last.clone();
    symbols.sort_unstable_by_key(|&s| sym_key(s));
    symbols.dedup();
    let rank_of = |s: u32| symbols.binary_search_by_key(&sym_key(s), |&x| sym_key(x)).unwrap();

    let mut starts = vec![0usize; symbols.len() + 1];
    for &s in last {
        starts[rank_of(s) + 1] += 1;
    }
    for i in 0..symbols.len() {
        starts[i + 1] += starts[i];
    }

    let mut next = vec![0u32; total];
    let mut seen = vec![0usize; symbols.len()];
    for (i, &s) in last.iter().enumerate() {
        let r = rank_of(s);
        next[starts[r] + seen[r]] = i as u32;
        seen[r] += 1;
    }

    let mut out = Vec::with_capacity(total);
    let mut idx = next[block.primary_index];
    for _ in 0..total {
        out.push(last[idx as usize]);
        idx = next[idx as usize];
    }
    // A valid column reconstructs the sentinel-terminated sequence.
    if out.pop() != Some(SENTINEL) {
        return Err(Error::Corrupt(
            "last column does not invert to a sentinel-terminated sequence".into(),
        ));
    }
    if out.contains(&SENTINEL) {
        return Err(Error::Corrupt(
            "sentinel reappeared inside the reconstructed sequence".into(),
        ));
    }
    Ok(out)
}
