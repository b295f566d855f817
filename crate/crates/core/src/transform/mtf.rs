//! Move-to-front recoding. The working list starts as the ascending unique
//! symbols of the input (sentinel first when present); each symbol is
//! replaced by its current list position and moved to the front.
//!
//! Positions are tracked in a Fenwick tree over slots, so both directions
//! run in O((n + a) log (n + a)) instead of the naive O(n a) list scan.

use super::bwt::sym_key;
use crate::error::{Error, Result};

/// Move-to-front output: list positions plus the initial list itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MtfSeq {
    /// One position per input symbol, each below `alphabet.len()`.
    pub indices: Vec<u32>,
    /// Unique input symbols, ascending with the sentinel ordered first.
    pub alphabet: Vec<u32>,
}

struct Fenwick {
    tree: Vec<u32>,
}

impl Fenwick {
    fn new(slots: usize) -> Self {
        Fenwick {
            tree: vec![0; slots + 1],
        }
    }

    fn add(&mut self, slot: usize, delta: i32) {
        let mut i = slot + 1;
        while i < self.tree.len() {
            self.tree[i] = self.tree[i].wrapping_add(delta as u32);
            i += i & i.wrapping_neg();
        }
    }

    /// Occupied slots strictly before `slot`.
    fn prefix(&self, slot: usize) -> u32 {
        let mut i = slot;
        let mut sum = 0;
        while i > 0 {
            sum += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        sum
    }

    /// Slot of the k-th occupied position, 1-based k.
    fn select(&self, k: u32) -> usize {
        let mut pos = 0usize;
        let mut rem = k;
        let mut mask = (self.tree.len() - 1).next_power_of_two();
        while mask > 0 {
            let next = pos + mask;
            if next < self.tree.len() && self.tree[next] < rem {
                rem -= self.tree[next];
                pos = next;
            }
            mask >>= 1;
        }
        pos
    }
}

fn build_alphabet(seq: &[u32]) -> Vec<u32> {
    let mut alphabet = seq.to_vec();
    alphabet.sort_unstable_by_key(|&s| sym_key(s));
    alphabet.dedup();
    alphabet
}

pub fn mtf_forward(seq: &[u32]) -> Result<MtfSeq> {
    if seq.is_empty() {
        return Err(Error::InvalidArgument("cannot recode an empty sequence".into()));
    }
    let alphabet = build_alphabet(seq);
    let a = alphabet.len();
    let n = seq.len();

    // Slot layout: the list front moves left from slot n while the initial
    // alphabet occupies slots n..n+a; a symbol's list position is the count
    // of occupied slots before its own.
    let mut fen = Fenwick::new(n + a);
    let mut slot_of_rank: Vec<usize> = (0..a).map(|r| n + r).collect();
    for &slot in &slot_of_rank {
        fen.add(slot, 1);
    }

    let mut next_front = n;
    let mut indices = Vec::with_capacity(n);
    for &sym in seq {
        let rank = alphabet
            .binary_search_by_key(&sym_key(sym), |&x| sym_key(x))
            .expect("alphabet covers all input symbols");
        let slot = slot_of_rank[rank];
        indices.push(fen.prefix(slot));
        fen.add(slot, -1);
        next_front -= 1;
        fen.add(next_front, 1);
        slot_of_rank[rank] = next_front;
    }
    Ok(MtfSeq { indices, alphabet })
}

pub fn mtf_inverse(seq: &MtfSeq) -> Result<Vec<u32>> {
    let a = seq.alphabet.len();
    let n = seq.indices.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if a == 0 {
        return Err(Error::Corrupt("empty alphabet with non-empty indices".into()));
    }
    for pair in seq.alphabet.windows(2) {
        if sym_key(pair[0]) >= sym_key(pair[1]) {
            return Err(Error::Corrupt("alphabet is not strictly ascending".into()));
        }
    }

    let mut fen = Fenwick::new(n + a);
    const VACANT: u32 = u32::MAX;
    let mut rank_at_slot = vec![VACANT; n + a];
    for r in 0..a {
        fen.add(n + r, 1);
        rank_at_slot[n + r] = r as u32;
    }

    let mut next_front = n;
    let mut out = Vec::with_capacity(n);
    for &idx in &seq.indices {
        if idx as usize >= a {
            return Err(Error::Corrupt(format!(
                "list position {idx} outside alphabet of {a} symbols"
            )));
        }
        let slot = fen.select(idx + 1);
        let rank = rank_at_slot[slot];
        debug_assert_ne!(rank, VACANT);
        out.push(seq.alphabet[rank as usize]);
        fen.add(slot, -1);
        rank_at_slot[slot] = VACANT;
        next_front -= 1;
        fen.add(next_front, 1);
        rank_at_slot[next_front] = rank;
    }
    Ok(out)
}
