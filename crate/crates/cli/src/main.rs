use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use xmds::ring::is_prime;
use xmds_cli::codec::CodeSpec;
use xmds_cli::shard::CodeId;
use xmds_cli::{
    bench, decode_dir, encode_file, erase_dir, exit_code, repair_dir, verify, EXIT_USAGE,
};

/// Encode files into per-column shards with binary MDS array codes, and
/// repair or decode them while accounting for every bit read.
#[derive(Parser)]
#[command(name = "xmds", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CodeArgs {
    #[arg(long, value_enum, default_value = "multilayer")]
    code: CodeId,
    /// Information columns.
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// Parity columns.
    #[arg(long, default_value_t = 2)]
    r: usize,
    /// Helpers contacted per repair; defaults to k + r - 1.
    #[arg(long)]
    d: Option<usize>,
    /// Prime defining the ring F2[x]/(1 + x + ... + x^(p-1)).
    #[arg(long, default_value_t = 5, value_parser = parse_prime)]
    p: u32,
    /// Exponent of the coupling coefficient 1 + x^e.
    #[arg(long, default_value_t = 1)]
    e: u32,
    /// Number of coupling layers; defaults to one per partition.
    #[arg(long)]
    layers: Option<usize>,
}

impl CodeArgs {
    fn spec(&self) -> Result<CodeSpec> {
        CodeSpec::new(
            self.code,
            self.k,
            self.r,
            self.d,
            self.p,
            self.e,
            self.layers,
        )
    }
}

fn parse_prime(s: &str) -> Result<u32, String> {
    let p: u32 = s.parse().map_err(|e| format!("{e}"))?;
    if !is_prime(p) {
        return Err(format!("{p} is not prime"));
    }
    Ok(p)
}

#[derive(Subcommand)]
enum Command {
    /// Stripe a file across k + r shard files.
    Encode {
        #[command(flatten)]
        code: CodeArgs,
        input: PathBuf,
        outdir: PathBuf,
    },
    /// Delete the shards of the given columns.
    Erase {
        dir: PathBuf,
        #[arg(required = true)]
        columns: Vec<usize>,
    },
    /// Rebuild one shard from the others and write an access report.
    Repair {
        dir: PathBuf,
        failed: usize,
        /// Report path; defaults to <dir>/repair_col_<failed>.json.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Reassemble the original file from the shards present.
    Decode { dir: PathBuf, output: PathBuf },
    /// Check decoding from every erasure pattern and every column repair.
    Verify {
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random stripes per check.
        #[arg(long, default_value_t = 4)]
        trials: usize,
    },
    /// Time encode, repair and decode in memory.
    Bench {
        #[command(flatten)]
        code: CodeArgs,
        /// Input size in bytes.
        #[arg(long, default_value_t = 1 << 20)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Encode {
            code,
            input,
            outdir,
        } => {
            for path in encode_file(&code.spec()?, &input, &outdir)? {
                println!("{}", path.display());
            }
        }
        Command::Erase { dir, columns } => erase_dir(&dir, &columns)?,
        Command::Repair {
            dir,
            failed,
            report,
        } => {
            let summary = repair_dir(&dir, failed, report.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Decode { dir, output } => {
            let bytes = decode_dir(&dir, &output)?;
            println!("wrote {bytes} bytes to {}", output.display());
        }
        Command::Verify { code, seed, trials } => {
            let rows = verify(&code.spec()?, seed, trials)?;
            for row in &rows {
                println!(
                    "{:<6} {:<50} {}",
                    row.check,
                    row.detail,
                    if row.pass { "PASS" } else { "FAIL" }
                );
            }
            return Ok(rows.iter().all(|r| r.pass));
        }
        Command::Bench { code, size, seed } => {
            let result = bench(&code.spec()?, size, seed)?;
            println!("{}", serde_json::to_string_pretty(&result)?);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
