//! Stream ingestion and synthesis, plus the padded matrix layout that feeds
//! the transform stack.
//!
//! Every stream is a sequence of fixed-width 16-bit symbols. Collections are
//! read either from CSV (one stream per column, or the whole file as one
//! stream) or from the `raw16` binary framing written by [`write_raw16`].

use std::fs;
use std::io;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::wire::{write_u16_le, ByteReader};

/// Magic prefix of a raw16 stream collection file.
pub const RAW16_MAGIC: &[u8; 4] = b"SMS1";

/// One ingested symbol stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressedStream {
    pub id: u64,
    pub symbols: Vec<u16>,
}

impl CompressedStream {
    pub fn new(id: u64, symbols: Vec<u16>) -> Self {
        CompressedStream { id, symbols }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// How an input file maps onto streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    /// Binary framing: magic, stream count, then per stream a length and
    /// that many 16-bit little-endian words.
    Raw16,
    /// Text cells holding decimal unsigned integers in `0..=65535`.
    Csv { layout: CsvLayout, has_header: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsvLayout {
    /// Each column is one stream; short columns leave trailing cells empty.
    Columns,
    /// All cells of the file, in row-major order, form a single stream.
    Single,
}

/// Reads a stream collection from `path` in the given format.
pub fn load_streams(path: &Path, format: InputFormat) -> Result<Vec<CompressedStream>> {
    match format {
        InputFormat::Raw16 => {
            let bytes = fs::read(path)?;
            read_raw16(&bytes)
        }
        InputFormat::Csv { layout, has_header } => {
            let file = fs::File::open(path)?;
            read_csv(file, layout, has_header)
        }
    }
}

/// Parses CSV cells into streams. Empty cells are absent values, which is how
/// columns of different lengths are represented.
pub fn read_csv<R: io::Read>(
    reader: R,
    layout: CsvLayout,
    has_header: bool,
) -> Result<Vec<CompressedStream>> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    // With a header, the header width alone defines how many streams exist;
    // a file of empty columns still describes that many (empty) streams.
    let header_width = if has_header {
        let headers = csv_reader
            .headers()
            .map_err(|e| Error::BadFile(format!("csv parse error: {e}")))?;
        Some(headers.iter().filter(|h| !h.is_empty()).count())
    } else {
        None
    };

    let mut columns: Vec<Vec<u16>> = Vec::new();
    let mut single: Vec<u16> = Vec::new();
    let mut saw_data = false;

    for record in csv_reader.records() {
        let record = record.map_err(|e| Error::BadFile(format!("csv parse error: {e}")))?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(0);
        for (idx, cell) in record.iter().enumerate() {
            if cell.is_empty() {
                continue;
            }
            let value: u64 = cell.parse().map_err(|_| Error::Ingest {
                line,
                column: idx + 1,
                reason: format!("{cell:?} is not an unsigned integer"),
            })?;
            let value = u16::try_from(value).map_err(|_| Error::Ingest {
                line,
                column: idx + 1,
                reason: format!("{value} does not fit in 16 bits"),
            })?;
            saw_data = true;
            match layout {
                CsvLayout::Single => single.push(value),
                CsvLayout::Columns => {
                    if columns.len() <= idx {
                        columns.resize(idx + 1, Vec::new());
                    }
                    columns[idx].push(value);
                }
            }
        }
    }

    if !saw_data && header_width.unwrap_or(0) == 0 {
        return Err(Error::NoStreams);
    }
    let streams = match layout {
        CsvLayout::Single => vec![single],
        CsvLayout::Columns => {
            if let Some(width) = header_width {
                if columns.len() < width {
                    columns.resize(width, Vec::new());
                }
            }
            columns
        }
    };
    Ok(streams
        .into_iter()
        .enumerate()
        .map(|(i, symbols)| CompressedStream::new(i as u64, symbols))
        .collect())
}

/// Parses the raw16 framing. The whole buffer must be consumed.
pub fn read_raw16(bytes: &[u8]) -> Result<Vec<CompressedStream>> {
    if bytes.len() < 4 || &bytes[..4] != RAW16_MAGIC {
        return Err(Error::BadFile("missing raw16 magic".into()));
    }
    let mut r = ByteReader::new(&bytes[4..]);
    let bad = |e: Error| match e {
        Error::Format { offset, reason } => {
            Error::BadFile(format!("byte {}: {reason}", offset + 4))
        }
        other => other,
    };
    let count = r.read_u32_le().map_err(bad)? as usize;
    if count == 0 {
        return Err(Error::NoStreams);
    }
    let mut streams = Vec::with_capacity(count.min(1 << 16));
    for id in 0..count {
        let len = r.read_u32_le().map_err(bad)? as usize;
        if r.remaining() < len * 2 {
            return Err(Error::BadFile(format!(
                "stream {id} declares {len} symbols but only {} bytes remain",
                r.remaining()
            )));
        }
        let mut symbols = Vec::with_capacity(len);
        for _ in 0..len {
            symbols.push(r.read_u16_le().map_err(bad)?);
        }
        streams.push(CompressedStream::new(id as u64, symbols));
    }
    if r.remaining() != 0 {
        return Err(Error::BadFile(format!(
            "{} trailing bytes after the last stream",
            r.remaining()
        )));
    }
    Ok(streams)
}

/// Serializes streams into the raw16 framing. `read_raw16` inverts this
/// bit-exactly.
pub fn write_raw16(streams: &[CompressedStream]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(RAW16_MAGIC);
    out.extend_from_slice(&(streams.len() as u32).to_le_bytes());
    for s in streams {
        out.extend_from_slice(&(s.symbols.len() as u32).to_le_bytes());
        for &sym in &s.symbols {
            write_u16_le(&mut out, sym);
        }
    }
    out
}

/// Writes streams as CSV in the column layout, one header cell per stream.
/// Streams shorter than the longest leave their trailing cells empty.
pub fn write_csv(streams: &[CompressedStream]) -> String {
    let mut out = String::new();
    let header: Vec<String> = streams.iter().map(|s| format!("stream_{}", s.id)).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    let max_len = streams.iter().map(|s| s.len()).max().unwrap_or(0);
    for row in 0..max_len {
        let cells: Vec<String> = streams
            .iter()
            .map(|s| {
                s.symbols
                    .get(row)
                    .map(|v| v.to_string())
                    .unwrap_or_default()
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Row-padded rectangular view over a set of equal-or-shorter rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u16>,
    lengths: Vec<usize>,
    pad_symbol: u16,
}

impl StreamMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn pad_symbol(&self) -> u16 {
        self.pad_symbol
    }

    /// Pre-padding length of row `i`.
    pub fn length(&self, i: usize) -> usize {
        self.lengths[i]
    }

    /// Full padded row.
    pub fn row(&self, i: usize) -> &[u16] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Row truncated back to its pre-padding length.
    pub fn unpadded_row(&self, i: usize) -> &[u16] {
        &self.row(i)[..self.lengths[i]]
    }

    /// New matrix holding the selected rows of `self`, in the given order.
    pub fn select_rows(&self, which: &[usize]) -> StreamMatrix {
        let mut data = Vec::with_capacity(which.len() * self.cols);
        let mut lengths = Vec::with_capacity(which.len());
        for &r in which {
            data.extend_from_slice(self.row(r));
            lengths.push(self.lengths[r]);
        }
        StreamMatrix {
            rows: which.len(),
            cols: self.cols,
            data,
            lengths,
            pad_symbol: self.pad_symbol,
        }
    }
}

/// Default fill symbol for short rows.
pub const PAD_SYMBOL: u16 = 0;

/// Pads every row to `block_len` columns. Rows longer than `block_len` are
/// rejected; segmentation into blocks is the caller's job.
pub fn pad_to_matrix(rows: &[&[u16]], block_len: usize, pad_symbol: u16) -> Result<StreamMatrix> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("no rows to pad".into()));
    }
    if block_len == 0 {
        return Err(Error::InvalidArgument("block length must be at least 1".into()));
    }
    let mut data = Vec::with_capacity(rows.len() * block_len);
    let mut lengths = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        if row.len() > block_len {
            return Err(Error::StreamTooLong {
                id: i as u64,
                len: row.len(),
                block_len,
            });
        }
        data.extend_from_slice(row);
        data.resize(data.len() + (block_len - row.len()), pad_symbol);
        lengths.push(row.len());
    }
    Ok(StreamMatrix {
        rows: rows.len(),
        cols: block_len,
        data,
        lengths,
        pad_symbol,
    })
}

/// Parameters for the synthetic corpus generator.
///
/// Streams are noisy copies of `num_archetypes` archetype sequences, assigned
/// round-robin: stream `i` copies archetype `i % num_archetypes`. Archetypes
/// are bounded-step random walks spread across the 16-bit range, so streams
/// of the same archetype stay close while different archetypes stay apart.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub num_streams: usize,
    pub num_archetypes: usize,
    /// Fraction in `[0, 1]`; scales the per-symbol perturbation amplitude.
    pub noise_level: f64,
    /// Length of every generated stream.
    pub block_len: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            num_streams: 56,
            num_archetypes: 8,
            noise_level: 0.05,
            block_len: 1500,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    /// Ground-truth archetype of stream `i`.
    pub fn archetype_of(&self, i: usize) -> usize {
        i % self.num_archetypes
    }

    fn validate(&self) -> Result<()> {
        if self.num_archetypes == 0 {
            return Err(Error::InvalidArgument("num_archetypes must be at least 1".into()));
        }
        if self.num_archetypes > self.num_streams {
            return Err(Error::InvalidArgument(format!(
                "num_archetypes {} exceeds num_streams {}",
                self.num_archetypes, self.num_streams
            )));
        }
        if !(0.0..=1.0).contains(&self.noise_level) || self.noise_level.is_nan() {
            return Err(Error::InvalidArgument(format!(
                "noise_level {} outside [0, 1]",
                self.noise_level
            )));
        }
        if self.block_len == 0 {
            return Err(Error::InvalidArgument("block_len must be at least 1".into()));
        }
        Ok(())
    }
}

// Walk and noise amplitudes, in symbol units. Even at level 1.0 the noise
// amplitude stays an order of magnitude under the spacing between adjacent
// archetype base lines, so the groups remain separable at any level.
const WALK_STEP: i32 = 128;
const BASE_JITTER: i32 = 512;
const NOISE_SPAN: f64 = 400.0;

fn clamp16(v: i32) -> u16 {
    v.clamp(0, 65535) as u16
}

/// Deterministically generates a synthetic stream collection for `spec`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Vec<CompressedStream>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut archetypes = Vec::with_capacity(spec.num_archetypes);
    for a in 0..spec.num_archetypes {
        let base = ((a as i64 + 1) * 65536 / (spec.num_archetypes as i64 + 1)) as i32
            + rng.gen_range(-BASE_JITTER..=BASE_JITTER);
        let mut walk = Vec::with_capacity(spec.block_len);
        let mut v = base.clamp(0, 65535);
        for _ in 0..spec.block_len {
            walk.push(clamp16(v));
            v = (v + rng.gen_range(-WALK_STEP..=WALK_STEP)).clamp(0, 65535);
        }
        archetypes.push(walk);
    }

    let amp = (spec.noise_level * NOISE_SPAN).round() as i32;
    let mut streams = Vec::with_capacity(spec.num_streams);
    for i in 0..spec.num_streams {
        let archetype = &archetypes[spec.archetype_of(i)];
        let symbols = archetype
            .iter()
            .map(|&v| {
                if amp == 0 {
                    v
                } else {
                    clamp16(v as i32 + rng.gen_range(-amp..=amp))
                }
            })
            .collect();
        streams.push(CompressedStream::new(i as u64, symbols));
    }
    Ok(streams)
}
