//! Drives the installed binary end to end through temp directories.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn smrc(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smrc"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary failed to launch")
}

fn run_ok(args: &[&str], dir: &Path) -> String {
    let out = smrc(args, dir);
    assert!(
        out.status.success(),
        "`smrc {}` failed: {}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn exit_code(args: &[&str], dir: &Path) -> i32 {
    smrc(args, dir).status.code().expect("killed by signal")
}

/// Splits a `key=value key=value` summary line.
fn parse_summary(line: &str) -> HashMap<String, String> {
    line.split_whitespace()
        .filter_map(|tok| tok.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn gen_corpus(dir: &Path, extra: &[&str]) -> PathBuf {
    let mut args = vec!["gen", "corpus"];
    args.extend_from_slice(extra);
    run_ok(&args, dir);
    dir.join("corpus")
}

#[test]
fn gen_is_deterministic_and_writes_ground_truth() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    gen_corpus(a.path(), &[]);
    gen_corpus(b.path(), &[]);
    for name in ["corpus.raw16", "corpus.csv", "corpus.truth.csv"] {
        let left = fs::read(a.path().join(name)).unwrap();
        let right = fs::read(b.path().join(name)).unwrap();
        assert!(left == right, "{name} differs between identical runs");
        assert!(!left.is_empty());
    }

    let truth = fs::read_to_string(a.path().join("corpus.truth.csv")).unwrap();
    let mut lines = truth.lines();
    assert!(lines.next().unwrap().starts_with("# gen:"));
    assert_eq!(lines.next().unwrap(), "stream,archetype");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 56);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(*row, format!("{i},{}", i % 8));
    }

    // Zero noise keeps copies of the same archetype identical.
    let c = tempfile::tempdir().unwrap();
    gen_corpus(
        c.path(),
        &["--streams", "4", "--archetypes", "2", "--noise", "0", "--len", "40"],
    );
    let streams =
        smrc_core::stream::read_raw16(&fs::read(c.path().join("corpus.raw16")).unwrap()).unwrap();
    assert_eq!(streams[0].symbols, streams[2].symbols);
    assert_eq!(streams[1].symbols, streams[3].symbols);
    assert_ne!(streams[0].symbols, streams[1].symbols);
}

#[test]
fn archive_round_trips_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let base = gen_corpus(dir.path(), &["--streams", "12", "--archetypes", "4", "--len", "400"]);
    let raw = format!("{}.raw16", base.display());
    let csv = format!("{}.csv", base.display());

    let summary = run_ok(
        &["compress", &raw, "-o", "a.smrc", "--k", "4"],
        dir.path(),
    );
    let kv = parse_summary(&summary);
    assert_eq!(kv["streams"], "12");
    assert_eq!(kv["symbols"], "4800");
    let container_bytes: u64 = kv["container_bytes"].parse().unwrap();
    assert_eq!(
        container_bytes,
        fs::metadata(dir.path().join("a.smrc")).unwrap().len()
    );
    let original_bits: f64 = kv["original_bits"].parse().unwrap();
    let cr: f64 = kv["cr_container"].parse().unwrap();
    assert!((cr - original_bits / (container_bytes as f64 * 8.0)).abs() < 1e-5);
    let payload_bits: f64 = kv["payload_bits"].parse().unwrap();
    let cr_payload: f64 = kv["cr_payload"].parse().unwrap();
    assert!((cr_payload - original_bits / payload_bits).abs() < 1e-5);
    let cluster_bytes: u64 = kv["cluster_bytes"]
        .split(',')
        .map(|s| s.parse::<u64>().unwrap())
        .sum();
    assert!(cluster_bytes < container_bytes);

    run_ok(&["decompress", "a.smrc", "-o", "back.raw16"], dir.path());
    assert!(fs::read(&raw).unwrap() == fs::read(dir.path().join("back.raw16")).unwrap());

    // Same through the text form, recovered bytes included.
    run_ok(&["compress", &csv, "-o", "b.smrc", "--k", "4"], dir.path());
    run_ok(&["decompress", "b.smrc", "-o", "back.csv"], dir.path());
    assert!(fs::read(&csv).unwrap() == fs::read(dir.path().join("back.csv")).unwrap());
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let base = gen_corpus(dir.path(), &["--streams", "4", "--archetypes", "2", "--len", "40"]);
    let raw = format!("{}.raw16", base.display());

    assert_eq!(exit_code(&["compress", &raw, "-o", "x.smrc", "--k", "0"], dir.path()), 2);
    assert_eq!(exit_code(&["silhouette", &raw, "--k", "1"], dir.path()), 2);
    assert_eq!(exit_code(&["gen", "bad", "--noise", "2.0"], dir.path()), 2);
    assert_eq!(exit_code(&["compress", &raw, "--bogus-flag"], dir.path()), 2);
    // Extensionless path with no --format is unusable.
    fs::copy(&raw, dir.path().join("noext")).unwrap();
    assert_eq!(exit_code(&["compress", "noext", "-o", "x.smrc"], dir.path()), 2);
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(exit_code(&["compress", "missing.raw16", "-o", "x.smrc"], dir.path()), 3);

    fs::write(dir.path().join("bad.csv"), "h1,h2\n70000,1\n").unwrap();
    assert_eq!(exit_code(&["compress", "bad.csv", "-o", "x.smrc"], dir.path()), 3);

    fs::write(dir.path().join("empty.csv"), "").unwrap();
    assert_eq!(exit_code(&["stats", "empty.csv"], dir.path()), 3);
}

#[test]
fn corruption_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let base = gen_corpus(dir.path(), &["--streams", "6", "--archetypes", "2", "--len", "80"]);
    let raw = format!("{}.raw16", base.display());
    run_ok(&["compress", &raw, "-o", "a.smrc", "--k", "2"], dir.path());

    let mut bytes = fs::read(dir.path().join("a.smrc")).unwrap();
    bytes.truncate(bytes.len() - 1);
    fs::write(dir.path().join("cut.smrc"), &bytes).unwrap();
    assert_eq!(exit_code(&["decompress", "cut.smrc", "-o", "y.raw16"], dir.path()), 4);

    // A file that is not an archive at all is a data error, not corruption.
    fs::write(dir.path().join("junk.smrc"), b"not an archive at all").unwrap();
    assert_eq!(exit_code(&["decompress", "junk.smrc", "-o", "z.raw16"], dir.path()), 3);
}

/// Section-splits a stats report: comment-headed tables keyed by name.
fn split_sections(report: &str) -> HashMap<String, Vec<String>> {
    let mut sections: HashMap<String, Vec<String>> = HashMap::new();
    let mut current = String::new();
    for line in report.lines() {
        if let Some(name) = line.strip_prefix("# ") {
            current = name.split(':').next().unwrap().to_string();
        } else if !current.is_empty() {
            sections.entry(current.clone()).or_default().push(line.to_string());
        }
    }
    sections
}

#[test]
fn stats_reports_consistent_tables() {
    let dir = tempfile::tempdir().unwrap();
    let base = gen_corpus(dir.path(), &["--streams", "12", "--archetypes", "4", "--len", "300"]);
    let csv = format!("{}.csv", base.display());
    let report = run_ok(&["stats", &csv, "--k", "4"], dir.path());
    assert!(report.starts_with("# config: k=4 cluster=kmeans rle=dynamic"));

    let sections = split_sections(&report);
    let streams = &sections["streams"];
    assert_eq!(streams[0], "stream,n,bits_per_symbol,h_max");
    assert_eq!(streams.len(), 1 + 12);
    for row in &streams[1..] {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells[1], "300");
        let bits: f64 = cells[2].parse().unwrap();
        let h_max: f64 = cells[3].parse().unwrap();
        assert!(bits >= 0.0 && bits <= h_max + 1e-9);
    }

    let stages = &sections["stages"];
    assert_eq!(stages[0], "stage,symbols,bits_per_symbol,h_max");
    let names: Vec<&str> = stages[1..].iter().map(|r| r.split(',').next().unwrap()).collect();
    assert_eq!(names, ["interleaved", "delta", "bwt", "mtf", "rle"]);
    let bits_of = |name: &str| -> f64 {
        stages[1..]
            .iter()
            .find(|r| r.starts_with(&format!("{name},")))
            .unwrap()
            .split(',')
            .nth(2)
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!(bits_of("mtf") < bits_of("interleaved"), "recoding did not reduce entropy");

    let sizes = &sections["sizes"];
    assert_eq!(sizes[0], "metric,value");
    let metric = |name: &str| -> f64 {
        sizes[1..]
            .iter()
            .find(|r| r.starts_with(&format!("{name},")))
            .unwrap()
            .split(',')
            .nth(1)
            .unwrap()
            .parse()
            .unwrap()
    };
    assert_eq!(metric("original_bits"), 12.0 * 300.0 * 16.0);
    let recomputed = metric("original_bits") / metric("payload_bits");
    assert!((metric("cr_payload") - recomputed).abs() < 1e-5);
    assert!(metric("cr_container") > 0.0);
    assert!(metric("cr_container") < metric("cr_payload"));
}

#[derive(Debug, PartialEq)]
struct BenchRow {
    record: String,
    k: usize,
    cluster: String,
    rle: String,
    cr: f64,
    entropy_before: f64,
    entropy_after: f64,
}

fn parse_bench(report: &str) -> Vec<BenchRow> {
    let mut lines = report.lines();
    assert!(lines.next().unwrap().starts_with("# config:"));
    assert_eq!(
        lines.next().unwrap(),
        "record,k,cluster,rle,cr,entropy_before,entropy_after,wall_time_ms"
    );
    lines
        .map(|line| {
            let c: Vec<&str> = line.split(',').collect();
            assert_eq!(c.len(), 8);
            let wall: f64 = c[7].parse().unwrap();
            assert!(wall >= 0.0);
            BenchRow {
                record: c[0].to_string(),
                k: c[1].parse().unwrap(),
                cluster: c[2].to_string(),
                rle: c[3].to_string(),
                cr: c[4].parse().unwrap(),
                entropy_before: c[5].parse().unwrap(),
                entropy_after: c[6].parse().unwrap(),
            }
        })
        .collect()
}

#[test]
fn bench_sweeps_the_grid_and_orders_the_groups() {
    let dir = tempfile::tempdir().unwrap();
    let base = gen_corpus(dir.path(), &[]);
    let raw = format!("{}.raw16", base.display());

    let report = run_ok(&["bench", &raw, "-o", "bench.csv"], dir.path());
    assert!(report.is_empty());
    let rows = parse_bench(&fs::read_to_string(dir.path().join("bench.csv")).unwrap());
    assert_eq!(rows.len(), 6 * 2 * 2);

    // Deterministic order: k ascending, then method, then folding mode.
    let shape: Vec<(usize, &str, &str)> = rows
        .iter()
        .map(|r| (r.k, r.cluster.as_str(), r.rle.as_str()))
        .collect();
    let mut expected = Vec::new();
    for k in [2, 4, 6, 8, 10, 12] {
        for cluster in ["kmeans", "rand"] {
            for rle in ["static", "dynamic"] {
                expected.push((k, cluster, rle));
            }
        }
    }
    assert_eq!(shape, expected);

    for r in &rows {
        assert_eq!(r.record, "corpus-s0");
        assert!(r.cr > 0.0);
        assert!(r.entropy_before > 0.0 && r.entropy_after > 0.0);
    }

    let avg = |cluster: &str, rle: &str| -> f64 {
        let vals: Vec<f64> = rows
            .iter()
            .filter(|r| r.cluster == cluster && r.rle == rle)
            .map(|r| r.cr)
            .collect();
        assert_eq!(vals.len(), 6);
        vals.iter().sum::<f64>() / vals.len() as f64
    };
    let dk = avg("kmeans", "dynamic");
    let sk = avg("kmeans", "static");
    let dr = avg("rand", "dynamic");
    let sr = avg("rand", "static");
    assert!(
        dk > sk && sk > dr && dr > sr,
        "group averages out of order: {dk} {sk} {dr} {sr}"
    );

    // Grid restriction flags cut the sweep down to the named cells.
    let small = run_ok(
        &["bench", &raw, "--k", "8", "--cluster", "kmeans", "--rle", "dynamic"],
        dir.path(),
    );
    let rows = parse_bench(&small);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].k, 8);
    assert!(rows[0].cr > 1.3);
}

#[test]
fn silhouette_ranks_grouped_above_random() {
    let dir = tempfile::tempdir().unwrap();
    let base = gen_corpus(dir.path(), &[]);
    let raw = format!("{}.raw16", base.display());

    let report = run_ok(
        &["silhouette", &raw, "--seeds", "0,1", "--per-point", "detail.csv"],
        dir.path(),
    );
    let mut lines = report.lines();
    assert!(lines.next().unwrap().starts_with("# config:"));
    assert_eq!(lines.next().unwrap(), "seed,k,kmeans_mean,rand_mean,delta");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    for (i, row) in rows.iter().enumerate() {
        let c: Vec<&str> = row.split(',').collect();
        assert_eq!(c[0], i.to_string());
        assert_eq!(c[1], "8");
        let grouped: f64 = c[2].parse().unwrap();
        let random: f64 = c[3].parse().unwrap();
        assert!(grouped > random, "seed {i}: grouped {grouped} not above random {random}");
        assert!((-1.0..=1.0).contains(&grouped) && (-1.0..=1.0).contains(&random));
    }

    // Identical flags reproduce the report byte for byte.
    let again = run_ok(&["silhouette", &raw, "--seeds", "0,1"], dir.path());
    assert_eq!(report, again);

    let detail = fs::read_to_string(dir.path().join("detail.csv")).unwrap();
    let mut lines = detail.lines();
    assert!(lines.next().unwrap().starts_with("# config:"));
    assert_eq!(lines.next().unwrap(), "row,cluster,silhouette");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 56);
    for row in rows {
        let c: Vec<&str> = row.split(',').collect();
        assert!(c[1].parse::<usize>().unwrap() < 8);
        let s: f64 = c[2].parse().unwrap();
        assert!((-1.0..=1.0).contains(&s));
    }
}
