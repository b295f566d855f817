//! The archive container: grouping, transform chain, and wire format.
//!
//! Compression slices every stream into segments of at most `block_len`
//! symbols, clusters the segments by shape, and codes each cluster as one
//! unit: interleave the member segments column by column, take the first
//! derivative, block-sort, move-to-front, fold runs, then arithmetic-code
//! the result. Each cluster record carries everything needed to invert the
//! chain; segment membership plus the stream directory rebuilds the inputs
//! bit for bit.
//!
//! All multi-byte integers are little-endian; variable-length integers use
//! base-128 continuation bytes, low groups first.

use std::fmt;
use std::str::FromStr;

use crate::cluster::{kmeans, random_partition, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use crate::coder::{ac_decode, ac_encode, build_freq_model, Bitstream, FrequencyTable};
use crate::error::{Error, Result};
use crate::metrics::{entropy_from_counts, EntropyReport};
use crate::stream::{pad_to_matrix, CompressedStream, StreamMatrix, PAD_SYMBOL};
use crate::transform::bwt::{bwt_forward, bwt_inverse, BwtBlock, SENTINEL};
use crate::transform::mtf::{mtf_forward, mtf_inverse, MtfSeq};
use crate::transform::rle::{rle_decode, rle_encode_static, RleBlock, MIN_RUN_THRESHOLD};
use crate::transform::{
    deinterleave, first_derivative, interleave, inverse_derivative, DeltaSeq, InterleavedSeq,
};
use crate::wire::{varint_len, write_u16_le, write_u64_le, write_varint, ByteReader};

pub const ARCHIVE_MAGIC: &[u8; 4] = b"SMRC";
pub const FORMAT_VERSION: u8 = 1;

/// How segments are grouped before interleaving.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterMethod {
    KMeans,
    Random,
}

impl ClusterMethod {
    fn code(self) -> u8 {
        match self {
            ClusterMethod::KMeans => 0,
            ClusterMethod::Random => 1,
        }
    }

    fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(ClusterMethod::KMeans),
            1 => Some(ClusterMethod::Random),
            _ => None,
        }
    }
}

impl fmt::Display for ClusterMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClusterMethod::KMeans => "kmeans",
            ClusterMethod::Random => "rand",
        })
    }
}

impl FromStr for ClusterMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kmeans" => Ok(ClusterMethod::KMeans),
            "rand" => Ok(ClusterMethod::Random),
            other => Err(Error::InvalidArgument(format!(
                "unknown cluster method {other:?}; expected kmeans or rand"
            ))),
        }
    }
}

/// Whether run folding is forced or decided per cluster by measuring both
/// candidate encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RleMode {
    Static,
    Dynamic,
}

impl RleMode {
    fn code(self) -> u8 {
        match self {
            RleMode::Static => 0,
            RleMode::Dynamic => 1,
        }
    }

    fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(RleMode::Static),
            1 => Some(RleMode::Dynamic),
            _ => None,
        }
    }
}

impl fmt::Display for RleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RleMode::Static => "static",
            RleMode::Dynamic => "dynamic",
        })
    }
}

impl FromStr for RleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "static" => Ok(RleMode::Static),
            "dynamic" => Ok(RleMode::Dynamic),
            other => Err(Error::InvalidArgument(format!(
                "unknown run folding mode {other:?}; expected static or dynamic"
            ))),
        }
    }
}

/// Knobs for [`compress`]. The full config is echoed in the archive header
/// so a file documents how it was made; decompression itself only consults
/// `block_len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodecConfig {
    /// Requested cluster count; capped at the segment count.
    pub k: usize,
    pub cluster_method: ClusterMethod,
    pub rle_mode: RleMode,
    /// Runs shorter than this stay verbatim.
    pub rle_threshold: usize,
    /// Longest segment a stream is sliced into.
    pub block_len: usize,
    pub seed: u64,
}

impl Default for CodecConfig {
    fn default() -> Self {
        CodecConfig {
            k: 8,
            cluster_method: ClusterMethod::KMeans,
            rle_mode: RleMode::Dynamic,
            rle_threshold: 3,
            block_len: 1500,
            seed: 0,
        }
    }
}

impl CodecConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidArgument("cluster count must be at least 1".into()));
        }
        if self.block_len < 2 {
            return Err(Error::InvalidArgument(format!(
                "block length {} is too small; need at least 2",
                self.block_len
            )));
        }
        if self.rle_threshold < MIN_RUN_THRESHOLD {
            return Err(Error::InvalidArgument(format!(
                "run threshold {} is below the minimum {MIN_RUN_THRESHOLD}",
                self.rle_threshold
            )));
        }
        Ok(())
    }
}

/// One input stream's identity and exact length in the directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamEntry {
    pub id: u64,
    pub origin_len: u64,
}

/// One coded cluster. `members` are global segment indices in ascending
/// order; the remaining fields invert the transform chain.
#[derive(Debug, Clone)]
pub struct ClusterRecord {
    pub members: Vec<usize>,
    pub anchor: u16,
    pub primary_index: usize,
    /// Move-to-front alphabet without its leading sentinel.
    pub alphabet: Vec<u32>,
    pub run_encoded: bool,
    pub freq: FrequencyTable,
    pub token_count: usize,
    pub payload: Bitstream,
}

/// A compressed collection: config echo, stream directory, and one record
/// per non-empty cluster.
#[derive(Debug, Clone)]
pub struct Archive {
    pub config: CodecConfig,
    /// Width every segment is padded to before interleaving. At least 2 and
    /// at least the longest segment.
    pub effective_width: usize,
    pub directory: Vec<StreamEntry>,
    pub clusters: Vec<ClusterRecord>,
    /// Byte offset of each cluster record when parsed from a file; used to
    /// locate bad records in error reports. Empty for freshly built archives.
    record_offsets: Vec<usize>,
    /// Byte span of each record's coder payload when parsed from a file.
    #[cfg_attr(not(test), allow(dead_code))]
    payload_spans: Vec<(usize, usize)>,
}

impl Archive {
    /// Total symbols across the original streams.
    pub fn original_symbols(&self) -> u64 {
        self.directory.iter().map(|e| e.origin_len).sum()
    }

    /// Size of the original streams at 16 bits per symbol.
    pub fn original_bits(&self) -> u64 {
        self.original_symbols() * 16
    }

    /// Total coder payload bits, excluding headers and tables.
    pub fn payload_bits(&self) -> u64 {
        self.clusters.iter().map(|c| c.payload.bit_len() as u64).sum()
    }

    fn record_offset(&self, c: usize) -> usize {
        self.record_offsets.get(c).copied().unwrap_or(0)
    }

    /// Byte offset of each cluster record. Known only for parsed archives;
    /// empty on freshly built ones.
    pub fn parsed_record_offsets(&self) -> &[usize] {
        &self.record_offsets
    }

    #[cfg(test)]
    fn payload_span(&self, c: usize) -> Option<(usize, usize)> {
        self.payload_spans.get(c).copied()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(ARCHIVE_MAGIC);
        out.push(FORMAT_VERSION);
        out.push(self.config.cluster_method.code());
        out.push(self.config.rle_mode.code());
        write_varint(&mut out, self.config.k as u64);
        write_varint(&mut out, self.config.rle_threshold as u64);
        write_varint(&mut out, self.config.block_len as u64);
        write_u64_le(&mut out, self.config.seed);
        write_varint(&mut out, self.effective_width as u64);
        write_varint(&mut out, self.directory.len() as u64);
        for entry in &self.directory {
            write_varint(&mut out, entry.id);
            write_varint(&mut out, entry.origin_len);
        }
        write_varint(&mut out, self.clusters.len() as u64);
        for rec in &self.clusters {
            write_varint(&mut out, rec.members.len() as u64);
            for &m in &rec.members {
                write_varint(&mut out, m as u64);
            }
            write_u16_le(&mut out, rec.anchor);
            write_varint(&mut out, rec.primary_index as u64);
            write_varint(&mut out, rec.alphabet.len() as u64);
            for &sym in &rec.alphabet {
                write_varint(&mut out, u64::from(sym));
            }
            out.push(u8::from(rec.run_encoded));
            write_varint(&mut out, rec.freq.len() as u64);
            for (sym, count) in rec.freq.pairs() {
                write_varint(&mut out, u64::from(sym));
                write_varint(&mut out, u64::from(count));
            }
            write_varint(&mut out, rec.token_count as u64);
            write_varint(&mut out, rec.payload.bit_len() as u64);
            out.extend_from_slice(rec.payload.bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Archive> {
        let mut r = ByteReader::new(bytes);
        let magic = r.take(4)?;
        if magic != ARCHIVE_MAGIC {
            return Err(Error::BadFile("not an archive: bad magic".into()));
        }
        let version = r.read_u8()?;
        if version != FORMAT_VERSION {
            return Err(Error::Format {
                offset: r.offset() - 1,
                reason: format!("unsupported format version {version}"),
            });
        }
        let bad = |r: &ByteReader<'_>, reason: String| Error::Format {
            offset: r.offset(),
            reason,
        };

        let method_code = r.read_u8()?;
        let cluster_method = ClusterMethod::from_code(method_code)
            .ok_or_else(|| bad(&r, format!("unknown cluster method code {method_code}")))?;
        let mode_code = r.read_u8()?;
        let rle_mode = RleMode::from_code(mode_code)
            .ok_or_else(|| bad(&r, format!("unknown run folding code {mode_code}")))?;
        let k = r.read_len("cluster count")?;
        let rle_threshold = r.read_len("run threshold")?;
        let block_len = r.read_len("block length")?;
        let seed = r.read_u64_le()?;
        let config = CodecConfig {
            k,
            cluster_method,
            rle_mode,
            rle_threshold,
            block_len,
            seed,
        };
        config.validate().map_err(|e| bad(&r, e.to_string()))?;

        let effective_width = r.read_len("effective width")?;
        if effective_width < 2 || effective_width > block_len {
            return Err(bad(
                &r,
                format!("effective width {effective_width} outside [2, {block_len}]"),
            ));
        }

        let stream_count = r.read_len("stream count")?;
        let mut directory = Vec::with_capacity(stream_count.min(1 << 20));
        for _ in 0..stream_count {
            let id = r.read_varint()?;
            let origin_len = r.read_varint()?;
            directory.push(StreamEntry { id, origin_len });
        }
        let row_lens = segment_lengths(&directory, block_len, effective_width)
            .map_err(|e| bad(&r, e.to_string()))?;
        let total_rows = row_lens.len();

        let cluster_count = r.read_len("cluster record count")?;
        if cluster_count > total_rows {
            return Err(bad(
                &r,
                format!("{cluster_count} cluster records for {total_rows} segments"),
            ));
        }
        let mut clusters = Vec::with_capacity(cluster_count);
        let mut record_offsets = Vec::with_capacity(cluster_count);
        let mut payload_spans = Vec::with_capacity(cluster_count);
        for _ in 0..cluster_count {
            record_offsets.push(r.offset());
            let m = r.read_len("member count")?;
            if m == 0 {
                return Err(bad(&r, "empty cluster record".into()));
            }
            if m > total_rows {
                return Err(bad(&r, format!("{m} members for {total_rows} segments")));
            }
            let mut members = Vec::with_capacity(m);
            for _ in 0..m {
                let row = r.read_len("member index")?;
                if row >= total_rows {
                    return Err(bad(&r, format!("member index {row} out of range")));
                }
                if let Some(&prev) = members.last() {
                    if row <= prev {
                        return Err(bad(&r, format!("member index {row} not ascending")));
                    }
                }
                members.push(row);
            }
            let block_symbols = m * effective_width;

            let anchor = r.read_u16_le()?;
            let primary_index = r.read_len("block sort index")?;
            if primary_index >= block_symbols {
                return Err(bad(
                    &r,
                    format!("block sort index {primary_index} out of range"),
                ));
            }
            let alpha_len = r.read_len("alphabet size")?;
            if alpha_len > block_symbols {
                return Err(bad(
                    &r,
                    format!("alphabet of {alpha_len} symbols in a block of {block_symbols}"),
                ));
            }
            let mut alphabet = Vec::with_capacity(alpha_len);
            for _ in 0..alpha_len {
                let sym = r.read_varint()?;
                if sym > u64::from(crate::transform::MAX_ZIGZAG_DELTA) {
                    return Err(bad(&r, format!("alphabet symbol {sym} out of range")));
                }
                let sym = sym as u32;
                if let Some(&prev) = alphabet.last() {
                    if sym <= prev {
                        return Err(bad(&r, format!("alphabet symbol {sym} not ascending")));
                    }
                }
                alphabet.push(sym);
            }
            let flag = r.read_u8()?;
            let run_encoded = match flag {
                0 => false,
                1 => true,
                other => return Err(bad(&r, format!("bad run folding flag {other}"))),
            };
            let table_len = r.read_len("frequency table size")?;
            let mut pairs = Vec::with_capacity(table_len.min(1 << 20));
            for _ in 0..table_len {
                let sym = r.read_varint()?;
                let count = r.read_varint()?;
                if sym > u64::from(u32::MAX) || count > u64::from(u32::MAX) {
                    return Err(bad(&r, "frequency table entry out of range".into()));
                }
                pairs.push((sym as u32, count as u32));
            }
            let freq = FrequencyTable::from_counts(&pairs).map_err(|e| bad(&r, e.to_string()))?;
            // Forced folding can expand: a run of exactly 2 at threshold 2
            // becomes 3 tokens, and nothing grows faster, so 3/2 of the
            // block is the ceiling.
            let token_cap = block_symbols.saturating_mul(3) / 2;
            let token_count = r.read_len("token count")?;
            if token_count == 0 || token_count > token_cap {
                return Err(bad(
                    &r,
                    format!("token count {token_count} outside [1, {token_cap}]"),
                ));
            }
            let bit_len = r.read_len("payload bit length")?;
            if bit_len > r.remaining().saturating_mul(8) {
                return Err(bad(&r, format!("payload of {bit_len} bits is truncated")));
            }
            let payload_start = r.offset();
            let payload_bytes = r.take(bit_len.div_ceil(8))?;
            payload_spans.push((payload_start, r.offset()));
            let payload = Bitstream::from_bytes(payload_bytes.to_vec(), bit_len)
                .map_err(|e| bad(&r, e.to_string()))?;

            clusters.push(ClusterRecord {
                members,
                anchor,
                primary_index,
                alphabet,
                run_encoded,
                freq,
                token_count,
                payload,
            });
        }
        if r.remaining() != 0 {
            return Err(Error::Format {
                offset: r.offset(),
                reason: format!("{} trailing bytes after the last record", r.remaining()),
            });
        }
        Ok(Archive {
            config,
            effective_width,
            directory,
            clusters,
            record_offsets,
            payload_spans,
        })
    }
}

/// Per-segment true lengths, in global segment order. Errors if any segment
/// would be wider than `width`.
fn segment_lengths(
    directory: &[StreamEntry],
    block_len: usize,
    width: usize,
) -> Result<Vec<(usize, usize)>> {
    let mut rows = Vec::new();
    for (s, entry) in directory.iter().enumerate() {
        let mut rem = entry.origin_len;
        while rem > 0 {
            let len = rem.min(block_len as u64) as usize;
            if len > width {
                return Err(Error::Corrupt(format!(
                    "segment of {len} symbols exceeds the stored width {width}"
                )));
            }
            rows.push((s, len));
            rem -= len as u64;
        }
    }
    Ok(rows)
}

/// Transform stages whose intermediate sequences can be sampled for
/// entropy accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    /// Interleaved segments, before any transform.
    Interleaved,
    /// Zigzag first derivative of the interleaved sequence.
    Delta,
    /// Last column of the block sort.
    BlockSorted,
    /// Move-to-front indices.
    MoveToFront,
    /// Tokens after run folding (or verbatim when folding is skipped).
    RunFolded,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::Interleaved,
        Stage::Delta,
        Stage::BlockSorted,
        Stage::MoveToFront,
        Stage::RunFolded,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Interleaved => "interleaved",
            Stage::Delta => "delta",
            Stage::BlockSorted => "bwt",
            Stage::MoveToFront => "mtf",
            Stage::RunFolded => "rle",
        }
    }
}

/// Serialized bytes a record's model-plus-payload tail would take; the
/// dynamic folding decision compares these exactly.
fn coded_tail_bytes(freq: &FrequencyTable, token_count: usize, payload: &Bitstream) -> usize {
    let mut n = varint_len(freq.len() as u64);
    for (sym, count) in freq.pairs() {
        n += varint_len(u64::from(sym)) + varint_len(u64::from(count));
    }
    n + varint_len(token_count as u64)
        + varint_len(payload.bit_len() as u64)
        + payload.bit_len().div_ceil(8)
}

fn code_tokens(tokens: &[u32]) -> Result<(FrequencyTable, Bitstream)> {
    let freq = build_freq_model(tokens)?.fit_for_coding();
    let payload = ac_encode(tokens, &freq)?;
    Ok((freq, payload))
}

fn encode_cluster(
    sub: &StreamMatrix,
    members: Vec<usize>,
    config: &CodecConfig,
    observe: &mut dyn FnMut(Stage, &mut dyn Iterator<Item = u32>),
) -> Result<ClusterRecord> {
    let inter = interleave(sub)?;
    observe(
        Stage::Interleaved,
        &mut inter.symbols.iter().map(|&s| u32::from(s)),
    );
    let delta = first_derivative(&inter.symbols)?;
    observe(Stage::Delta, &mut delta.deltas.iter().copied());
    let sorted = bwt_forward(&delta.deltas)?;
    observe(Stage::BlockSorted, &mut sorted.last_column.iter().copied());
    let mtf = mtf_forward(&sorted.last_column)?;
    observe(Stage::MoveToFront, &mut mtf.indices.iter().copied());

    let marker = u32::try_from(mtf.alphabet.len())
        .map_err(|_| Error::InvalidArgument("alphabet too large".into()))?;
    let folded = rle_encode_static(&mtf.indices, config.rle_threshold, marker)?;
    let (run_encoded, tokens) = match config.rle_mode {
        RleMode::Static => (folded.run_encoded, folded.payload),
        RleMode::Dynamic => {
            // Folding wins only when the serialized record tail, measured in
            // exact bytes (model, counts, coder payload), comes out strictly
            // smaller than coding the indices verbatim.
            let (folded_freq, folded_bits) = code_tokens(&folded.payload)?;
            let (raw_freq, raw_bits) = code_tokens(&mtf.indices)?;
            let folded_size = coded_tail_bytes(&folded_freq, folded.payload.len(), &folded_bits);
            let raw_size = coded_tail_bytes(&raw_freq, mtf.indices.len(), &raw_bits);
            if folded.run_encoded && folded_size < raw_size {
                (true, folded.payload)
            } else {
                (false, mtf.indices.clone())
            }
        }
    };
    observe(Stage::RunFolded, &mut tokens.iter().copied());

    let (freq, payload) = code_tokens(&tokens)?;
    debug_assert!(mtf.alphabet[0] == SENTINEL);
    Ok(ClusterRecord {
        members,
        anchor: delta.anchor,
        primary_index: sorted.primary_index,
        alphabet: mtf.alphabet[1..].to_vec(),
        run_encoded,
        freq,
        token_count: tokens.len(),
        payload,
    })
}

fn compress_impl(
    streams: &[CompressedStream],
    config: &CodecConfig,
    observe: &mut dyn FnMut(Stage, &mut dyn Iterator<Item = u32>),
) -> Result<Archive> {
    config.validate()?;
    if streams.is_empty() {
        return Err(Error::NoStreams);
    }
    let directory: Vec<StreamEntry> = streams
        .iter()
        .map(|s| StreamEntry {
            id: s.id,
            origin_len: s.symbols.len() as u64,
        })
        .collect();

    let mut rows: Vec<&[u16]> = Vec::new();
    for s in streams {
        rows.extend(s.symbols.chunks(config.block_len));
    }
    let width = rows
        .iter()
        .map(|r| r.len())
        .max()
        .unwrap_or(0)
        .max(2)
        .min(config.block_len);

    let mut clusters = Vec::new();
    if !rows.is_empty() {
        let matrix = pad_to_matrix(&rows, width, PAD_SYMBOL)?;
        let k_eff = config.k.min(matrix.rows());
        let clustering = match config.cluster_method {
            ClusterMethod::KMeans => kmeans(&matrix, k_eff, DEFAULT_MAX_ITERS, DEFAULT_TOL, config.seed)?,
            ClusterMethod::Random => random_partition(&matrix, k_eff, config.seed)?,
        };
        for c in 0..k_eff {
            let members = clustering.members(c);
            if members.is_empty() {
                continue;
            }
            let sub = matrix.select_rows(&members);
            clusters.push(encode_cluster(&sub, members, config, observe)?);
        }
    }

    Ok(Archive {
        config: config.clone(),
        effective_width: width,
        directory,
        clusters,
        record_offsets: Vec::new(),
        payload_spans: Vec::new(),
    })
}

/// Compresses a collection of streams into an archive.
pub fn compress(streams: &[CompressedStream], config: &CodecConfig) -> Result<Archive> {
    compress_impl(streams, config, &mut |_, _| {})
}

/// Runs the compression pipeline while tallying symbol frequencies at every
/// transform stage, aggregated over all clusters. Reports come back in
/// [`Stage::ALL`] order. Needs at least one non-empty stream.
pub fn stage_entropies(
    streams: &[CompressedStream],
    config: &CodecConfig,
) -> Result<Vec<(Stage, EntropyReport)>> {
    use std::collections::HashMap;
    let mut tallies: Vec<(Stage, HashMap<u32, u64>)> =
        Stage::ALL.iter().map(|&s| (s, HashMap::new())).collect();
    compress_impl(streams, config, &mut |stage, symbols| {
        let tally = &mut tallies.iter_mut().find(|(s, _)| *s == stage).unwrap().1;
        for sym in symbols {
            *tally.entry(sym).or_insert(0) += 1;
        }
    })?;
    tallies
        .into_iter()
        .map(|(stage, tally)| {
            let report = entropy_from_counts(&tally).map_err(|_| {
                Error::InvalidArgument("no symbols to measure: all streams are empty".into())
            })?;
            Ok((stage, report))
        })
        .collect()
}

fn corruption(archive: &Archive, cluster: usize, err: Error) -> Error {
    Error::Corruption {
        cluster,
        offset: archive.record_offset(cluster),
        reason: err.to_string(),
    }
}

/// Rebuilds the original streams exactly. Any inconsistency in the archive
/// surfaces as an error naming the offending cluster record.
pub fn decompress(archive: &Archive) -> Result<Vec<CompressedStream>> {
    archive.config.validate()?;
    let width = archive.effective_width;
    let row_lens = segment_lengths(&archive.directory, archive.config.block_len, width)?;
    let total_rows = row_lens.len();

    let mut decoded_rows: Vec<Option<Vec<u16>>> = vec![None; total_rows];
    for (c, rec) in archive.clusters.iter().enumerate() {
        let fail = |e: Error| corruption(archive, c, e);
        let m = rec.members.len();
        let block_symbols = m * width;

        for &row in &rec.members {
            if row >= total_rows {
                return Err(fail(Error::Corrupt(format!(
                    "member index {row} out of range"
                ))));
            }
            if decoded_rows[row].is_some() {
                return Err(fail(Error::Corrupt(format!(
                    "segment {row} claimed by two clusters"
                ))));
            }
        }

        let tokens = ac_decode(&rec.payload, &rec.freq, rec.token_count).map_err(fail)?;
        let marker = u32::try_from(rec.alphabet.len() + 1)
            .map_err(|_| fail(Error::Corrupt("alphabet too large".into())))?;
        let indices = rle_decode(&RleBlock {
            run_encoded: rec.run_encoded,
            payload: tokens,
            marker,
        })
        .map_err(fail)?;
        if indices.len() != block_symbols {
            return Err(fail(Error::Corrupt(format!(
                "run folding expanded to {} symbols, expected {block_symbols}",
                indices.len()
            ))));
        }
        let mut alphabet = Vec::with_capacity(rec.alphabet.len() + 1);
        alphabet.push(SENTINEL);
        alphabet.extend_from_slice(&rec.alphabet);
        let last_column = mtf_inverse(&MtfSeq { indices, alphabet }).map_err(fail)?;
        let deltas = bwt_inverse(&BwtBlock {
            last_column,
            primary_index: rec.primary_index,
        })
        .map_err(fail)?;
        let symbols = inverse_derivative(&DeltaSeq {
            anchor: rec.anchor,
            deltas,
        })
        .map_err(fail)?;
        let padded_rows = deinterleave(&InterleavedSeq {
            symbols,
            rows: m,
            cols: width,
        })
        .map_err(fail)?;

        for (mut data, &row) in padded_rows.into_iter().zip(&rec.members) {
            data.truncate(row_lens[row].1);
            decoded_rows[row] = Some(data);
        }
    }

    let mut out: Vec<CompressedStream> = archive
        .directory
        .iter()
        .map(|e| CompressedStream::new(e.id, Vec::with_capacity(e.origin_len as usize)))
        .collect();
    for (row, info) in row_lens.iter().enumerate() {
        let data = decoded_rows[row].take().ok_or_else(|| {
            Error::Corrupt(format!("segment {row} is not covered by any cluster"))
        })?;
        out[info.0].symbols.extend_from_slice(&data);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::{generate_synthetic, SyntheticSpec};

    fn small_input() -> Vec<CompressedStream> {
        generate_synthetic(&SyntheticSpec {
            num_streams: 14,
            num_archetypes: 4,
            noise_level: 0.05,
            block_len: 300,
            seed: 9,
        })
        .unwrap()
    }

    fn small_config() -> CodecConfig {
        CodecConfig {
            k: 4,
            block_len: 300,
            ..CodecConfig::default()
        }
    }

    fn assert_streams_equal(a: &[CompressedStream], b: &[CompressedStream]) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert_eq!(x.id, y.id);
            assert_eq!(x.symbols, y.symbols);
        }
    }

    #[test]
    fn round_trips_across_methods_and_modes() {
        let streams = small_input();
        for method in [ClusterMethod::KMeans, ClusterMethod::Random] {
            for mode in [RleMode::Static, RleMode::Dynamic] {
                let config = CodecConfig {
                    cluster_method: method,
                    rle_mode: mode,
                    ..small_config()
                };
                let archive = compress(&streams, &config).unwrap();
                assert_streams_equal(&decompress(&archive).unwrap(), &streams);

                let bytes = archive.to_bytes();
                let parsed = Archive::from_bytes(&bytes).unwrap();
                assert_streams_equal(&decompress(&parsed).unwrap(), &streams);
                assert_eq!(parsed.to_bytes(), bytes);
            }
        }
    }

    #[test]
    fn compression_is_deterministic() {
        let streams = small_input();
        let a = compress(&streams, &small_config()).unwrap().to_bytes();
        let b = compress(&streams, &small_config()).unwrap().to_bytes();
        assert_eq!(a, b);
    }

    #[test]
    fn ragged_tiny_and_empty_streams_survive() {
        let streams = vec![
            CompressedStream::new(10, vec![]),
            CompressedStream::new(11, vec![42]),
            CompressedStream::new(12, (0..700).map(|i| (i * 3 % 999) as u16).collect()),
            CompressedStream::new(13, vec![65535, 0, 65535]),
            CompressedStream::new(14, vec![]),
        ];
        let config = CodecConfig {
            k: 3,
            block_len: 256,
            ..CodecConfig::default()
        };
        let archive = compress(&streams, &config).unwrap();
        let bytes = archive.to_bytes();
        let back = decompress(&Archive::from_bytes(&bytes).unwrap()).unwrap();
        assert_streams_equal(&back, &streams);
    }

    #[test]
    fn all_empty_collection_round_trips() {
        let streams = vec![
            CompressedStream::new(1, vec![]),
            CompressedStream::new(2, vec![]),
        ];
        let archive = compress(&streams, &CodecConfig::default()).unwrap();
        assert_eq!(archive.clusters.len(), 0);
        let back = decompress(&Archive::from_bytes(&archive.to_bytes()).unwrap()).unwrap();
        assert_streams_equal(&back, &streams);
    }

    #[test]
    fn no_streams_is_an_error() {
        assert!(matches!(
            compress(&[], &CodecConfig::default()),
            Err(Error::NoStreams)
        ));
    }

    #[test]
    fn oversized_k_is_capped_at_the_segment_count() {
        let streams = vec![
            CompressedStream::new(0, vec![1, 2, 3]),
            CompressedStream::new(1, vec![9, 9, 9]),
        ];
        let config = CodecConfig {
            k: 50,
            ..CodecConfig::default()
        };
        let archive = compress(&streams, &config).unwrap();
        assert!(archive.clusters.len() <= 2);
        assert_streams_equal(&decompress(&archive).unwrap(), &streams);
    }

    #[test]
    fn bad_configs_are_rejected() {
        let streams = vec![CompressedStream::new(0, vec![1, 2])];
        for config in [
            CodecConfig { k: 0, ..CodecConfig::default() },
            CodecConfig { block_len: 1, ..CodecConfig::default() },
            CodecConfig { rle_threshold: 1, ..CodecConfig::default() },
        ] {
            assert!(matches!(
                compress(&streams, &config),
                Err(Error::InvalidArgument(_))
            ));
        }
    }

    #[test]
    fn every_truncation_is_rejected() {
        let streams = small_input();
        let bytes = compress(&streams, &small_config()).unwrap().to_bytes();
        for cut in 0..bytes.len() {
            let err = Archive::from_bytes(&bytes[..cut])
                .and_then(|a| decompress(&a).map(|_| ()));
            assert!(err.is_err(), "truncation to {cut} bytes went unnoticed");
        }
    }

    // Flipping any byte outside the config echo and outside coder payloads
    // must either fail to parse, fail to decode, or change the output; the
    // config echo is not consulted during decoding, and a coder payload's
    // final bits can fall in its flush margin tail that decoding never
    // reads. Payload flips still must not panic or hang.
    #[test]
    fn byte_flips_never_pass_silently() {
        let streams = small_input();
        let archive = compress(&streams, &small_config()).unwrap();
        let bytes = archive.to_bytes();
        let parsed = Archive::from_bytes(&bytes).unwrap();

        let config_echo_end = 4 + 1 + 1 + 1
            + varint_len(parsed.config.k as u64)
            + varint_len(parsed.config.rle_threshold as u64)
            + varint_len(parsed.config.block_len as u64)
            + 8;
        let in_payload = |i: usize| {
            (0..parsed.clusters.len())
                .filter_map(|c| parsed.payload_span(c))
                .any(|(start, end)| (start..end).contains(&i))
        };

        for i in 0..bytes.len() {
            let mut mangled = bytes.clone();
            mangled[i] ^= 0x80;
            let outcome = Archive::from_bytes(&mangled).and_then(|a| decompress(&a));
            if i < config_echo_end || in_payload(i) {
                continue;
            }
            match outcome {
                Err(_) => {}
                Ok(out) => {
                    let differs = out.len() != streams.len()
                        || out
                            .iter()
                            .zip(&streams)
                            .any(|(a, b)| a.id != b.id || a.symbols != b.symbols);
                    assert!(differs, "flip of byte {i} was not detected");
                }
            }
        }
    }

    #[test]
    fn understated_width_is_rejected() {
        let streams = vec![CompressedStream::new(0, vec![1, 2, 3])];
        let archive = compress(&streams, &CodecConfig::default()).unwrap();
        assert_eq!(archive.effective_width, 3);
        let mut bytes = archive.to_bytes();
        let width_at = 4 + 1 + 1 + 1
            + varint_len(archive.config.k as u64)
            + varint_len(archive.config.rle_threshold as u64)
            + varint_len(archive.config.block_len as u64)
            + 8;
        assert_eq!(bytes[width_at], 3);
        bytes[width_at] = 2;
        assert!(Archive::from_bytes(&bytes).is_err());
    }

    #[test]
    fn dynamic_mode_never_serializes_larger_than_static() {
        let mut streams = small_input();
        // Heavy runs: constant streams fold well.
        streams.push(CompressedStream::new(90, vec![7; 600]));
        streams.push(CompressedStream::new(91, vec![7; 600]));
        let stat = compress(
            &streams,
            &CodecConfig { rle_mode: RleMode::Static, ..small_config() },
        )
        .unwrap();
        let dyn_ = compress(
            &streams,
            &CodecConfig { rle_mode: RleMode::Dynamic, ..small_config() },
        )
        .unwrap();
        assert!(dyn_.to_bytes().len() <= stat.to_bytes().len());
        assert_streams_equal(&decompress(&dyn_).unwrap(), &streams);
    }

    #[test]
    fn stage_reports_cover_every_stage() {
        let streams = small_input();
        let reports = stage_entropies(&streams, &small_config()).unwrap();
        assert_eq!(reports.len(), Stage::ALL.len());
        for (stage, report) in &reports {
            assert!(report.sample_count > 0, "{} is empty", stage.name());
            assert!(report.bits_per_symbol >= 0.0);
        }
        let interleaved = &reports[0].1;
        let total_padded: usize = {
            let archive = compress(&streams, &small_config()).unwrap();
            archive.clusters.iter().map(|c| c.members.len() * archive.effective_width).sum()
        };
        assert_eq!(interleaved.sample_count, total_padded);
    }

    #[test]
    fn archive_size_accessors_add_up() {
        let streams = small_input();
        let archive = compress(&streams, &small_config()).unwrap();
        let symbols: u64 = streams.iter().map(|s| s.symbols.len() as u64).sum();
        assert_eq!(archive.original_symbols(), symbols);
        assert_eq!(archive.original_bits(), symbols * 16);
        let payload: u64 = archive.clusters.iter().map(|c| c.payload.bit_len() as u64).sum();
        assert_eq!(archive.payload_bits(), payload);
        assert!((archive.to_bytes().len() as u64) * 8 > payload);
    }
}
