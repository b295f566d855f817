//! Operator front end: dataset generation, compression, recovery, entropy
//! statistics, a config-grid benchmark sweep, and cluster-quality reports.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use smrc_core::cluster;
use smrc_core::{
    compress, decompress, generate_synthetic, load_streams, pad_to_matrix, shannon_entropy,
    stage_entropies, stream, write_csv, write_raw16, Archive, ClusterMethod, CodecConfig,
    CompressedStream, CsvLayout, Error, InputFormat, RleMode, Stage, SyntheticSpec,
};

#[derive(Parser)]
#[command(
    name = "smrc",
    version,
    about = "Re-compresses collections of 16-bit symbol streams by grouping \
             similar streams and coding each group as one block"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic collection: raw16 + csv data plus a ground-truth sidecar
    Gen(GenArgs),
    /// Compress a collection into an .smrc archive
    Compress(CompressArgs),
    /// Recover the original streams from an archive
    Decompress(DecompressArgs),
    /// Per-stream and per-stage entropy report with size accounting
    Stats(StatsArgs),
    /// Sweep a config grid; every cell is verified lossless before its ratio is reported
    Bench(BenchArgs),
    /// Compare grouped against random cluster assignment by silhouette score
    Silhouette(SilhouetteArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Raw16,
}

#[derive(Clone, Copy, ValueEnum)]
enum LayoutArg {
    /// Each column is one stream
    Columns,
    /// All cells in row-major order form a single stream
    Single,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ClusterArg {
    Kmeans,
    Rand,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RleArg {
    Static,
    Dynamic,
}

impl fmt::Display for ClusterArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        ClusterMethod::from(*self).fmt(f)
    }
}

impl fmt::Display for RleArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        RleMode::from(*self).fmt(f)
    }
}

impl From<ClusterArg> for ClusterMethod {
    fn from(a: ClusterArg) -> Self {
        match a {
            ClusterArg::Kmeans => ClusterMethod::KMeans,
            ClusterArg::Rand => ClusterMethod::Random,
        }
    }
}

impl From<RleArg> for RleMode {
    fn from(a: RleArg) -> Self {
        match a {
            RleArg::Static => RleMode::Static,
            RleArg::Dynamic => RleMode::Dynamic,
        }
    }
}

#[derive(Args)]
struct ConfigArgs {
    /// Number of clusters
    #[arg(long, default_value_t = 8)]
    k: usize,
    /// How stream segments are grouped
    #[arg(long, value_enum, default_value = "kmeans")]
    cluster: ClusterArg,
    /// Whether run folding is forced or decided per cluster by size
    #[arg(long, value_enum, default_value = "dynamic")]
    rle: RleArg,
    /// Minimum run length worth folding
    #[arg(long, default_value_t = 3)]
    threshold: usize,
    /// Longest segment a stream is sliced into
    #[arg(long, default_value_t = 1500)]
    block_len: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ConfigArgs {
    fn to_config(&self) -> CodecConfig {
        CodecConfig {
            k: self.k,
            cluster_method: self.cluster.into(),
            rle_mode: self.rle.into(),
            rle_threshold: self.threshold,
            block_len: self.block_len,
            seed: self.seed,
        }
    }
}

#[derive(Args)]
struct IngestArgs {
    /// Input format; defaults from the file extension (.csv / .raw16)
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// How CSV cells map onto streams
    #[arg(long, value_enum, default_value = "columns")]
    layout: LayoutArg,
    /// The CSV input has no header line
    #[arg(long)]
    no_header: bool,
}

impl IngestArgs {
    fn resolve(&self, path: &Path) -> Result<InputFormat, Error> {
        let format = self.format.or_else(|| format_from_ext(path));
        match format {
            Some(FormatArg::Raw16) => Ok(InputFormat::Raw16),
            Some(FormatArg::Csv) => Ok(InputFormat::Csv {
                layout: match self.layout {
                    LayoutArg::Columns => CsvLayout::Columns,
                    LayoutArg::Single => CsvLayout::Single,
                },
                has_header: !self.no_header,
            }),
            None => Err(Error::InvalidArgument(format!(
                "cannot infer the format of {}; pass --format",
                path.display()
            ))),
        }
    }
}

fn format_from_ext(path: &Path) -> Option<FormatArg> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => Some(FormatArg::Csv),
        Some("raw16") => Some(FormatArg::Raw16),
        _ => None,
    }
}

#[derive(Args)]
struct GenArgs {
    /// Output path base; writes BASE.raw16, BASE.csv and BASE.truth.csv
    out_base: PathBuf,
    #[arg(long, default_value_t = 56)]
    streams: usize,
    /// Number of distinct base shapes the streams are noisy copies of
    #[arg(long, default_value_t = 8)]
    archetypes: usize,
    /// Perturbation amplitude as a fraction in [0, 1]
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    /// Symbols per stream
    #[arg(long, default_value_t = 1500)]
    len: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct CompressArgs {
    input: PathBuf,
    /// Archive file to write
    #[arg(short, long)]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    ingest: IngestArgs,
}

#[derive(Args)]
struct DecompressArgs {
    input: PathBuf,
    /// Recovered data file to write
    #[arg(short, long)]
    out: PathBuf,
    /// Output format; defaults from the output extension
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Args)]
struct StatsArgs {
    input: PathBuf,
    /// Report file; stdout when omitted
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    ingest: IngestArgs,
}

#[derive(Args)]
struct BenchArgs {
    input: PathBuf,
    /// Report file; stdout when omitted
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Cluster counts to sweep
    #[arg(long, value_delimiter = ',', default_values_t = vec![2, 4, 6, 8, 10, 12])]
    k: Vec<usize>,
    /// Grouping methods to sweep
    #[arg(long, value_enum, value_delimiter = ',',
          default_values_t = vec![ClusterArg::Kmeans, ClusterArg::Rand])]
    cluster: Vec<ClusterArg>,
    /// Run-folding modes to sweep
    #[arg(long, value_enum, value_delimiter = ',',
          default_values_t = vec![RleArg::Static, RleArg::Dynamic])]
    rle: Vec<RleArg>,
    #[arg(long, default_value_t = 3)]
    threshold: usize,
    #[arg(long, default_value_t = 1500)]
    block_len: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    ingest: IngestArgs,
}

#[derive(Args)]
struct SilhouetteArgs {
    input: PathBuf,
    /// Report file; stdout when omitted
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Number of clusters; at least 2, since the score compares a row's own
    /// cluster against its nearest other cluster
    #[arg(long, default_value_t = 8)]
    k: usize,
    /// Seeds to evaluate, one report row each
    #[arg(long, value_delimiter = ',', default_values_t = vec![0u64])]
    seeds: Vec<u64>,
    /// Longest segment a stream is sliced into
    #[arg(long, default_value_t = 1500)]
    block_len: usize,
    /// Also write per-row scores of the first seed's grouped run here
    #[arg(long)]
    per_point: Option<PathBuf>,
    #[command(flatten)]
    ingest: IngestArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => run_gen(a),
        Command::Compress(a) => run_compress(a),
        Command::Decompress(a) => run_decompress(a),
        Command::Stats(a) => run_stats(a),
        Command::Bench(a) => run_bench(a),
        Command::Silhouette(a) => run_silhouette(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

/// 2 usage, 3 data, 4 corruption.
fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InvalidArgument(_) => 2,
        Error::Io(_)
        | Error::NoStreams
        | Error::Ingest { .. }
        | Error::BadFile(_)
        | Error::StreamTooLong { .. } => 3,
        Error::Corrupt(_) | Error::Format { .. } | Error::Corruption { .. } => 4,
    }
}

fn config_comment(c: &CodecConfig, source: &Path) -> String {
    format!(
        "# config: k={} cluster={} rle={} threshold={} block-len={} seed={} source={}",
        c.k,
        c.cluster_method,
        c.rle_mode,
        c.rle_threshold,
        c.block_len,
        c.seed,
        source.display()
    )
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn with_suffix(base: &Path, suffix: &str) -> PathBuf {
    let mut s = base.as_os_str().to_os_string();
    s.push(suffix);
    s.into()
}

fn run_gen(args: GenArgs) -> Result<(), Error> {
    let spec = SyntheticSpec {
        num_streams: args.streams,
        num_archetypes: args.archetypes,
        noise_level: args.noise,
        block_len: args.len,
        seed: args.seed,
    };
    let streams = generate_synthetic(&spec)?;
    let raw_path = with_suffix(&args.out_base, ".raw16");
    let csv_path = with_suffix(&args.out_base, ".csv");
    let truth_path = with_suffix(&args.out_base, ".truth.csv");
    fs::write(&raw_path, write_raw16(&streams))?;
    fs::write(&csv_path, write_csv(&streams))?;

    let mut truth = format!(
        "# gen: streams={} archetypes={} noise={} len={} seed={}\n",
        args.streams, args.archetypes, args.noise, args.len, args.seed
    );
    truth.push_str("stream,archetype\n");
    for (i, s) in streams.iter().enumerate() {
        truth.push_str(&format!("{},{}\n", s.id, spec.archetype_of(i)));
    }
    fs::write(&truth_path, truth)?;

    let symbols: usize = streams.iter().map(|s| s.len()).sum();
    println!(
        "generated streams={} symbols={symbols} raw16={} csv={} truth={}",
        streams.len(),
        raw_path.display(),
        csv_path.display(),
        truth_path.display()
    );
    Ok(())
}

fn ratio_or_zero(original_bits: u64, compressed_bits: u64) -> f64 {
    smrc_core::compression_ratio(original_bits, compressed_bits).unwrap_or(0.0)
}

fn run_compress(args: CompressArgs) -> Result<(), Error> {
    let format = args.ingest.resolve(&args.input)?;
    let streams = load_streams(&args.input, format)?;
    let config = args.config.to_config();
    let archive = compress(&streams, &config)?;
    let bytes = archive.to_bytes();
    fs::write(&args.out, &bytes)?;

    // Reparse the written bytes: verifies the file and yields record offsets.
    let parsed = Archive::from_bytes(&bytes)?;
    let offsets = parsed.parsed_record_offsets();
    let sizes: Vec<String> = offsets
        .iter()
        .enumerate()
        .map(|(i, &o)| (offsets.get(i + 1).copied().unwrap_or(bytes.len()) - o).to_string())
        .collect();
    println!(
        "compressed streams={} symbols={} original_bits={} container_bytes={} payload_bits={} \
         cr_container={:.6} cr_payload={:.6} clusters={} cluster_bytes={}",
        streams.len(),
        archive.original_symbols(),
        archive.original_bits(),
        bytes.len(),
        archive.payload_bits(),
        ratio_or_zero(archive.original_bits(), bytes.len() as u64 * 8),
        ratio_or_zero(archive.original_bits(), archive.payload_bits()),
        parsed.clusters.len(),
        if sizes.is_empty() { "-".into() } else { sizes.join(",") },
    );
    Ok(())
}

fn run_decompress(args: DecompressArgs) -> Result<(), Error> {
    let archive = Archive::from_bytes(&fs::read(&args.input)?)?;
    let streams = decompress(&archive)?;
    let format = args
        .format
        .or_else(|| format_from_ext(&args.out))
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "cannot infer the format of {}; pass --format",
                args.out.display()
            ))
        })?;
    match format {
        FormatArg::Csv => fs::write(&args.out, write_csv(&streams))?,
        FormatArg::Raw16 => fs::write(&args.out, write_raw16(&streams))?,
    }
    let symbols: usize = streams.iter().map(|s| s.len()).sum();
    println!(
        "recovered streams={} symbols={symbols} out={}",
        streams.len(),
        args.out.display()
    );
    Ok(())
}

fn run_stats(args: StatsArgs) -> Result<(), Error> {
    let format = args.ingest.resolve(&args.input)?;
    let streams = load_streams(&args.input, format)?;
    let config = args.config.to_config();

    let mut out = config_comment(&config, &args.input);
    out.push('\n');
    out.push_str("# streams\n");
    out.push_str("stream,n,bits_per_symbol,h_max\n");
    for s in &streams {
        if s.symbols.is_empty() {
            out.push_str(&format!("{},0,,\n", s.id));
        } else {
            let r = shannon_entropy(s.symbols.iter().map(|&v| u32::from(v)))?;
            out.push_str(&format!(
                "{},{},{:.6},{:.6}\n",
                s.id, r.sample_count, r.bits_per_symbol, r.h_max
            ));
        }
    }

    out.push_str("# stages\n");
    out.push_str("stage,symbols,bits_per_symbol,h_max\n");
    for (stage, r) in stage_entropies(&streams, &config)? {
        out.push_str(&format!(
            "{},{},{:.6},{:.6}\n",
            stage.name(),
            r.sample_count,
            r.bits_per_symbol,
            r.h_max
        ));
    }

    let archive = compress(&streams, &config)?;
    let container_bits = archive.to_bytes().len() as u64 * 8;
    out.push_str("# sizes\n");
    out.push_str("metric,value\n");
    out.push_str(&format!("original_bits,{}\n", archive.original_bits()));
    out.push_str(&format!("container_bits,{container_bits}\n"));
    out.push_str(&format!("payload_bits,{}\n", archive.payload_bits()));
    out.push_str(&format!(
        "cr_container,{:.6}\n",
        ratio_or_zero(archive.original_bits(), container_bits)
    ));
    out.push_str(&format!(
        "cr_payload,{:.6}\n",
        ratio_or_zero(archive.original_bits(), archive.payload_bits())
    ));
    emit(&args.out, &out)
}

struct BenchRow {
    k: usize,
    cluster: ClusterMethod,
    rle: RleMode,
    cr: f64,
    entropy_before: f64,
    entropy_after: f64,
    wall_ms: f64,
}

fn bench_cell(streams: &[CompressedStream], config: &CodecConfig) -> Result<BenchRow, Error> {
    let started = Instant::now();
    let archive = compress(streams, config)?;
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;
    let bytes = archive.to_bytes();

    // No ratio leaves this function without the cell having round-tripped.
    let back = decompress(&Archive::from_bytes(&bytes)?)?;
    let intact = back.len() == streams.len()
        && back
            .iter()
            .zip(streams)
            .all(|(a, b)| a.id == b.id && a.symbols == b.symbols);
    if !intact {
        return Err(Error::Corrupt(format!(
            "round trip mismatch at k={} cluster={} rle={}",
            config.k, config.cluster_method, config.rle_mode
        )));
    }

    let reports = stage_entropies(streams, config)?;
    let bits_at = |want: Stage| {
        reports
            .iter()
            .find(|(s, _)| *s == want)
            .map(|(_, r)| r.bits_per_symbol)
            .unwrap_or(0.0)
    };
    Ok(BenchRow {
        k: config.k,
        cluster: config.cluster_method,
        rle: config.rle_mode,
        cr: ratio_or_zero(archive.original_bits(), bytes.len() as u64 * 8),
        entropy_before: bits_at(Stage::Interleaved),
        entropy_after: bits_at(Stage::MoveToFront),
        wall_ms,
    })
}

fn run_bench(args: BenchArgs) -> Result<(), Error> {
    let format = args.ingest.resolve(&args.input)?;
    let streams = load_streams(&args.input, format)?;

    let mut ks = args.k.clone();
    ks.sort_unstable();
    ks.dedup();
    let mut cells = Vec::new();
    for &k in &ks {
        for &cluster in &args.cluster {
            for &rle in &args.rle {
                cells.push(CodecConfig {
                    k,
                    cluster_method: cluster.into(),
                    rle_mode: rle.into(),
                    rle_threshold: args.threshold,
                    block_len: args.block_len,
                    seed: args.seed,
                });
            }
        }
    }

    // Independent jobs; collection order is the deterministic construction
    // order, not completion order.
    let results: Vec<Result<BenchRow, Error>> = thread::scope(|scope| {
        let handles: Vec<_> = cells
            .iter()
            .map(|config| scope.spawn(|| bench_cell(&streams, config)))
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut rows = results.into_iter().collect::<Result<Vec<_>, Error>>()?;
    rows.sort_by_key(|r| {
        (
            r.k,
            r.cluster == ClusterMethod::Random,
            r.rle == RleMode::Dynamic,
        )
    });

    let record = format!(
        "{}-s{}",
        args.input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "input".into()),
        args.seed
    );
    let mut out = format!(
        "# config: k={} cluster={} rle={} threshold={} block-len={} seed={} source={}\n",
        ks.iter().map(ToString::to_string).collect::<Vec<_>>().join("/"),
        args.cluster.iter().map(ToString::to_string).collect::<Vec<_>>().join("/"),
        args.rle.iter().map(ToString::to_string).collect::<Vec<_>>().join("/"),
        args.threshold,
        args.block_len,
        args.seed,
        args.input.display()
    );
    out.push_str("record,k,cluster,rle,cr,entropy_before,entropy_after,wall_time_ms\n");
    for r in &rows {
        out.push_str(&format!(
            "{record},{},{},{},{:.6},{:.6},{:.6},{:.3}\n",
            r.k, r.cluster, r.rle, r.cr, r.entropy_before, r.entropy_after, r.wall_ms
        ));
    }
    emit(&args.out, &out)
}

fn run_silhouette(args: SilhouetteArgs) -> Result<(), Error> {
    if args.k < 2 {
        return Err(Error::InvalidArgument(
            "silhouette comparison needs k of at least 2".into(),
        ));
    }
    if args.block_len < 2 {
        return Err(Error::InvalidArgument("block-len must be at least 2".into()));
    }
    let format = args.ingest.resolve(&args.input)?;
    let streams = load_streams(&args.input, format)?;
    let segments: Vec<&[u16]> = streams
        .iter()
        .flat_map(|s| s.symbols.chunks(args.block_len))
        .collect();
    if segments.is_empty() {
        return Err(Error::NoStreams);
    }
    let width = segments.iter().map(|s| s.len()).max().unwrap_or(1);
    let matrix = pad_to_matrix(&segments, width, stream::PAD_SYMBOL)?;

    let mut out = format!(
        "# config: k={} seeds={} block-len={} source={}\n",
        args.k,
        args.seeds.iter().map(ToString::to_string).collect::<Vec<_>>().join("/"),
        args.block_len,
        args.input.display()
    );
    out.push_str("seed,k,kmeans_mean,rand_mean,delta\n");
    for (i, &seed) in args.seeds.iter().enumerate() {
        let grouped = cluster::kmeans(
            &matrix,
            args.k,
            cluster::DEFAULT_MAX_ITERS,
            cluster::DEFAULT_TOL,
            seed,
        )?;
        let random = cluster::random_partition(&matrix, args.k, seed)?;
        let grouped_score = cluster::silhouette(&matrix, &grouped)?;
        let random_score = cluster::silhouette(&matrix, &random)?;
        out.push_str(&format!(
            "{seed},{},{:.6},{:.6},{:.6}\n",
            args.k,
            grouped_score.mean,
            random_score.mean,
            grouped_score.mean - random_score.mean
        ));
        if i == 0 {
            if let Some(path) = &args.per_point {
                let mut detail = format!(
                    "# config: k={} seed={seed} block-len={} source={}\n",
                    args.k,
                    args.block_len,
                    args.input.display()
                );
                detail.push_str(&cluster::silhouette_csv(&grouped, &grouped_score));
                fs::write(path, detail)?;
            }
        }
    }
    emit(&args.out, &out)
}
