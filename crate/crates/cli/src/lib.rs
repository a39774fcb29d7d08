//! File striping, shard I/O and the operations behind the `xmds` binary.
//! A file is cut into stripes of `k * column_bits` bits; each stripe is one
//! codeword and stripes are coded independently.

pub mod codec;
pub mod shard;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use xmds::evenodd::erasure_patterns;
use xmds::{AccessReport, CodeError};

use codec::{CodeSpec, Codec};
use shard::{read_shard, shard_path, unpack_bits, write_shard, Shard, ShardError, ShardHeader};

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_INSUFFICIENT_HELPERS: u8 = 2;
pub const EXIT_TOO_MANY_ERASURES: u8 = 3;

/// Maps an error to the process exit code.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        match cause.downcast_ref::<CodeError>() {
            Some(CodeError::InsufficientHelpers { .. } | CodeError::MissingHelper(_)) => {
                return EXIT_INSUFFICIENT_HELPERS
            }
            Some(CodeError::TooManyErasures { .. }) => return EXIT_TOO_MANY_ERASURES,
            _ => {}
        }
    }
    EXIT_USAGE
}

/// Splits the input into stripes and writes one shard per column.
pub fn encode_file(spec: &CodeSpec, input: &Path, outdir: &Path) -> Result<Vec<PathBuf>> {
    let data = fs::read(input).with_context(|| format!("reading {}", input.display()))?;
    fs::create_dir_all(outdir).with_context(|| format!("creating {}", outdir.display()))?;
    let columns = encode_bytes(spec, &data)?;
    let total_bits = data.len() as u64 * 8;
    columns
        .iter()
        .enumerate()
        .map(|(c, bits)| Ok(write_shard(outdir, &spec.header(c, total_bits), bits)?))
        .collect()
}

/// Column bit streams for `data`, the final stripe zero-padded.
pub fn encode_bytes(spec: &CodeSpec, data: &[u8]) -> Result<Vec<Vec<u8>>> {
    let codec = Codec::build(spec)?;
    let per_stripe = codec.stripe_info_bits();
    let mut bits = unpack_bits(data, data.len() * 8);
    let stripes = bits.len().div_ceil(per_stripe);
    bits.resize(stripes * per_stripe, 0);
    let mut columns = vec![Vec::with_capacity(stripes * codec.column_bits()); codec.n()];
    for chunk in bits.chunks(per_stripe) {
        for (dst, col) in columns.iter_mut().zip(codec.encode_stripe(chunk)?) {
            dst.extend(col);
        }
    }
    Ok(columns)
}

/// Shards found in a directory, indexed by column.
pub struct ShardSet {
    pub spec: CodeSpec,
    pub payload_len_bits: u64,
    pub columns: Vec<Option<Vec<u8>>>,
}

impl ShardSet {
    pub fn stripes(&self, codec: &Codec) -> usize {
        (self.payload_len_bits as usize).div_ceil(codec.stripe_info_bits())
    }

    pub fn available(&self) -> Vec<usize> {
        (0..self.columns.len())
            .filter(|&c| self.columns[c].is_some())
            .collect()
    }

    fn stripe(&self, s: usize, column_bits: usize) -> Vec<Option<&[u8]>> {
        self.columns
            .iter()
            .map(|c| {
                c.as_deref()
                    .map(|bits| &bits[s * column_bits..(s + 1) * column_bits])
            })
            .collect()
    }
}

/// Loads every `col_<i>.shard` in `dir` and checks they agree.
pub fn load_shards(dir: &Path) -> Result<ShardSet> {
    let mut found: Vec<(PathBuf, ShardHeader)> = Vec::new();
    let entries = fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))?;
    for entry in entries {
        let path = entry?.path();
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default();
        if name.starts_with("col_") && name.ends_with(".shard") {
            let bytes = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
            let header = ShardHeader::parse(&bytes, &path)?;
            found.push((path, header));
        }
    }
    let Some((first_path, first)) = found.first().cloned() else {
        bail!("no shards in {}", dir.display());
    };
    if let Some((path, _)) = found.iter().find(|(_, h)| !h.same_code(&first)) {
        return Err(ShardError::Inconsistent(first_path, path.clone()).into());
    }
    let spec = CodeSpec::from_header(&first);
    let codec = Codec::build(&spec)?;
    let stripes = (first.payload_len_bits as usize).div_ceil(codec.stripe_info_bits());
    let column_bits = stripes * codec.column_bits();
    let mut columns = vec![None; codec.n()];
    for (path, header) in &found {
        let c = header.column_index as usize;
        if c >= columns.len() || *path != shard_path(dir, c) {
            bail!("{} does not match its column index {c}", path.display());
        }
        let Shard { bits, .. } = read_shard(path, |_| column_bits)?;
        columns[c] = Some(bits);
    }
    Ok(ShardSet {
        spec,
        payload_len_bits: first.payload_len_bits,
        columns,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RepairSummary {
    pub code: CodeSpec,
    pub failed_column: usize,
    pub stripes: usize,
    pub helpers: Vec<usize>,
    /// False when no bandwidth-optimal plan fit the available helpers and
    /// the column was rebuilt by decoding.
    pub optimal_plan: bool,
    pub per_stripe: Option<AccessReport>,
    pub total: AccessReport,
}

/// Rebuilds column `failed` in memory. Any existing copy is ignored.
pub fn repair_shards(set: &ShardSet, failed: usize) -> Result<(Vec<u8>, RepairSummary)> {
    let codec = Codec::build(&set.spec)?;
    if failed >= codec.n() {
        bail!(CodeError::ColumnOutOfRange(failed));
    }
    let available: Vec<usize> = set
        .available()
        .into_iter()
        .filter(|&c| c != failed)
        .collect();
    let repairer = codec.repairer(failed, &available)?;
    let stripes = set.stripes(&codec);
    let cb = codec.column_bits();
    let mut column = Vec::with_capacity(stripes * cb);
    let mut total = AccessReport::default();
    let mut per_stripe: Option<AccessReport> = None;
    for s in 0..stripes {
        let mut cols = set.stripe(s, cb);
        cols[failed] = None;
        let (bits, report) = repairer.repair_stripe(&cols)?;
        column.extend(bits);
        total.merge(&report);
        match &per_stripe {
            None => per_stripe = Some(report),
            Some(first) if *first != report => {
                bail!("stripe {s} read a different pattern than stripe 0")
            }
            Some(_) => {}
        }
    }
    let summary = RepairSummary {
        code: set.spec,
        failed_column: failed,
        stripes,
        helpers: repairer.helpers(),
        optimal_plan: repairer.is_optimal_plan(),
        per_stripe,
        total,
    };
    Ok((column, summary))
}

pub fn default_report_path(dir: &Path, failed: usize) -> PathBuf {
    dir.join(format!("repair_col_{failed}.json"))
}

/// Repairs a shard on disk and writes the JSON report.
pub fn repair_dir(dir: &Path, failed: usize, report: Option<&Path>) -> Result<RepairSummary> {
    let set = load_shards(dir)?;
    let (bits, summary) = repair_shards(&set, failed)?;
    write_shard(dir, &set.spec.header(failed, set.payload_len_bits), &bits)?;
    let report_path = report.map_or_else(|| default_report_path(dir, failed), Path::to_path_buf);
    let json = serde_json::to_string_pretty(&summary)?;
    fs::write(&report_path, json + "\n")
        .with_context(|| format!("writing {}", report_path.display()))?;
    Ok(summary)
}

/// Reassembles the original bytes from the shards present.
pub fn decode_shards(set: &ShardSet) -> Result<Vec<u8>> {
    let codec = Codec::build(&set.spec)?;
    let decoder = codec.decoder(&set.available())?;
    let stripes = set.stripes(&codec);
    let cb = codec.column_bits();
    let mut bits = Vec::with_capacity(stripes * codec.stripe_info_bits());
    for s in 0..stripes {
        bits.extend(decoder.decode_stripe(&set.stripe(s, cb))?);
    }
    bits.truncate(set.payload_len_bits as usize);
    Ok(shard::pack_bits(&bits))
}

pub fn decode_dir(dir: &Path, output: &Path) -> Result<usize> {
    let set = load_shards(dir)?;
    let data = decode_shards(&set)?;
    fs::write(output, &data).with_context(|| format!("writing {}", output.display()))?;
    Ok(data.len())
}

/// Deletes the shards of the listed columns.
pub fn erase_dir(dir: &Path, columns: &[usize]) -> Result<()> {
    for &c in columns {
        let path = shard_path(dir, c);
        fs::remove_file(&path).with_context(|| format!("removing {}", path.display()))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyRow {
    pub check: String,
    pub detail: String,
    pub pass: bool,
}

/// Exhaustive decoding over every erasure pattern of size `n - k` and a
/// repair of every column, on seeded random stripes.
pub fn verify(spec: &CodeSpec, seed: u64, trials: usize) -> Result<Vec<VerifyRow>> {
    let codec = Codec::build(spec)?;
    let (n, k) = (codec.n(), codec.k());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stripes: Vec<(Vec<u8>, Vec<Vec<u8>>)> = (0..trials.max(1))
        .map(|_| {
            let info: Vec<u8> = (0..codec.stripe_info_bits())
                .map(|_| rng.gen_range(0..2))
                .collect();
            let cols = codec.encode_stripe(&info)?;
            Ok((info, cols))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for erased in erasure_patterns(n, n - k) {
        let available: Vec<usize> = (0..n).filter(|c| !erased.contains(c)).collect();
        let decoder = codec.decoder(&available)?;
        let pass = stripes.iter().all(|(info, cols)| {
            let view: Vec<Option<&[u8]>> = (0..n)
                .map(|c| (!erased.contains(&c)).then_some(&cols[c][..]))
                .collect();
            decoder.decode_stripe(&view).is_ok_and(|got| got == *info)
        });
        rows.push(VerifyRow {
            check: "decode".into(),
            detail: format!("erased {erased:?}"),
            pass,
        });
    }
    let all: Vec<usize> = (0..n).collect();
    for f in 0..n {
        let repairer = codec.repairer(f, &all)?;
        let mut report = None;
        let mut pass = true;
        for (_, cols) in &stripes {
            let mut view: Vec<Option<&[u8]>> = cols.iter().map(|c| Some(&c[..])).collect();
            view[f] = None;
            match repairer.repair_stripe(&view) {
                Ok((col, r)) => {
                    pass &= col == cols[f];
                    report = Some(r);
                }
                Err(_) => pass = false,
            }
        }
        let report = report.ok_or_else(|| anyhow!("no repair report for column {f}"))?;
        if spec.code == shard::CodeId::Multilayer {
            pass &= report.is_optimal() && report.uncoded;
        }
        rows.push(VerifyRow {
            check: "repair".into(),
            detail: format!(
                "column {f}: {} bits read, bound {}, ratio {}/{}",
                report.bits_transferred,
                report.optimal_bits,
                report.ratio.numer(),
                report.ratio.denom()
            ),
            pass,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchResult {
    pub code: CodeSpec,
    pub bytes: usize,
    pub stripes: usize,
    pub encode_secs: f64,
    pub repair_secs: Vec<f64>,
    pub decode_secs: f64,
    pub repair_bits_per_stripe: Vec<u64>,
}

/// Times encode, every single-column repair and an `r`-erasure decode on
/// seeded random data, all in memory.
pub fn bench(spec: &CodeSpec, bytes: usize, seed: u64) -> Result<BenchResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<u8> = (0..bytes).map(|_| rng.gen()).collect();
    let start = Instant::now();
    let columns = encode_bytes(spec, &data)?;
    let encode_secs = start.elapsed().as_secs_f64();
    let mut set = ShardSet {
        spec: *spec,
        payload_len_bits: bytes as u64 * 8,
        columns: columns.into_iter().map(Some).collect(),
    };
    let codec = Codec::build(spec)?;
    let mut repair_secs = Vec::new();
    let mut repair_bits_per_stripe = Vec::new();
    for f in 0..codec.n() {
        let start = Instant::now();
        let (_, summary) = repair_shards(&set, f)?;
        repair_secs.push(start.elapsed().as_secs_f64());
        repair_bits_per_stripe.push(summary.per_stripe.map_or(0, |r| r.bits_transferred));
    }
    for c in 0..codec.n() - codec.k() {
        set.columns[c] = None;
    }
    let start = Instant::now();
    let decoded = decode_shards(&set)?;
    let decode_secs = start.elapsed().as_secs_f64();
    if decoded != data {
        bail!("decoded data differs from the input");
    }
    Ok(BenchResult {
        code: *spec,
        bytes,
        stripes: set.stripes(&codec),
        encode_secs,
        repair_secs,
        decode_secs,
        repair_bits_per_stripe,
    })
}
