//! Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

#[path = "../../core/tests/support/tables.rs"]
mod tables;

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xmds::evenodd::erasure_patterns;
use xmds::multilayer::{build_multilayer, MultilayerCode};
use xmds::quad::{quad_encode, quad_transformed_encode, QuadCode};
use xmds::ring::Modulus;
use xmds::te2::Te2Code;
use xmds::transform::{transform_equivalence_check, Coupling, InstanceBundle, TransformSpec};
use xmds::{encode, CodeParams, CodewordArray, ErasurePattern, RingElement};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !($cond) {
            return Err(format!($($arg)+));
        }
    };
}

fn random_info(code: &MultilayerCode, rng: &mut ChaCha8Rng) -> Vec<Vec<RingElement>> {
    let m = code.params.modulus();
    (0..code.params.k)
        .map(|_| {
            (0..code.rows())
                .map(|_| RingElement::random(m, rng))
                .collect()
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let code = build_multilayer(4, 2, 5, 5, 1).map_err(|e| e.to_string())?;
    ensure!(
        code.params.layers == 3 && code.rows() == 8,
        "expected 3 layers and 8 rows"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cw = code
        .encode(&random_info(&code, &mut rng))
        .map_err(|e| e.to_string())?;
    for f in 0..6 {
        let plan = code.select_helpers(f).map_err(|e| e.to_string())?;
        let (col, r) = code.repair_column(&cw, &plan).map_err(|e| e.to_string())?;
        ensure!(col == cw.columns[f], "column {f} repaired incorrectly");
        ensure!(
            r.elements_read == 20,
            "column {f}: {} elements read",
            r.elements_read
        );
        ensure!(
            r.bits_transferred == 80 && r.optimal_bits == 80,
            "column {f}: {} bits",
            r.bits_transferred
        );
        ensure!(
            r.ratio == Ratio::new(1, 1) && r.uncoded,
            "column {f}: ratio {}",
            r.ratio
        );
    }
    Ok("6 columns, 20 elements = 80 bits each, ratio 1, uncoded".into())
}

fn criterion_2() -> Outcome {
    let grid = [
        (4, 2, 5, 5),
        (3, 2, 4, 5),
        (2, 2, 3, 3),
        (4, 3, 5, 5),
        (4, 3, 6, 5),
    ];
    let mut decodes = 0;
    for (k, r, d, p) in grid {
        let code = build_multilayer(k, r, d, p, 1).map_err(|e| e.to_string())?;
        let m = code.params.modulus();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut words: Vec<CodewordArray> = Vec::new();
        // Every unit position (the decoder is linear over the ring) plus random words.
        for c in 0..k {
            for row in 0..code.rows() {
                let mut info = vec![vec![RingElement::zero(m); code.rows()]; k];
                info[c][row] = RingElement::one(m);
                words.push(code.encode(&info).map_err(|e| e.to_string())?);
            }
        }
        for _ in 0..3 {
            words.push(
                code.encode(&random_info(&code, &mut rng))
                    .map_err(|e| e.to_string())?,
            );
        }
        for size in 0..=r {
            for erased in erasure_patterns(k + r, size) {
                let pattern =
                    ErasurePattern::new(erased.clone(), k + r, r).map_err(|e| e.to_string())?;
                for w in &words {
                    let info = code
                        .decode(w, &pattern)
                        .map_err(|e| format!("({k},{r},{d},{p}) {erased:?}: {e}"))?;
                    ensure!(
                        info == w.columns[..k],
                        "({k},{r},{d},{p}) erased {erased:?} decoded wrongly"
                    );
                    decodes += 1;
                }
            }
        }
    }
    Ok(format!(
        "5 parameter sets, {decodes} exact decodes over all erasure subsets"
    ))
}

fn criterion_3() -> Outcome {
    tables::single_layer_systematic_table()?;
    tables::single_layer_via_closed_form()?;
    tables::two_layers_of_the_first_transformation()?;
    tables::two_layer_systematic_table()?;
    tables::three_layer_systematic_table()?;
    Ok("single-, two- and three-layer tables match symbolically".into())
}

fn costs_and_round_trip(code: &QuadCode, words: &[Vec<Vec<u8>>]) -> Result<Vec<usize>, String> {
    let mut costs = Vec::new();
    for f in 0..4 {
        let recipe = code.repair_recipe(f).map_err(|e| e.to_string())?;
        for cw in words {
            let cols: Vec<Option<&[u8]>> = (0..4).map(|c| (c != f).then_some(&cw[c][..])).collect();
            let (col, report) = recipe.repair(&cols).map_err(|e| e.to_string())?;
            ensure!(col == cw[f], "column {f} repaired incorrectly");
            ensure!(
                report.bits_read as usize == recipe.bits(),
                "column {f} read count"
            );
        }
        costs.push(recipe.bits());
    }
    ensure!(code.check_mds().is_mds, "not MDS");
    Ok(costs)
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut col = || -> [u8; 8] { std::array::from_fn(|_| rng.gen_range(0..2)) };
    let base_words: Vec<Vec<Vec<u8>>> = (0..20)
        .map(|_| {
            quad_encode(&[col(), col()])
                .iter()
                .map(|c| c.to_vec())
                .collect()
        })
        .collect();
    let x4 = RingElement::monomial(Modulus::circulant(12).unwrap(), 4);
    let trans_words: Vec<Vec<Vec<u8>>> = (0..20)
        .map(|_| {
            quad_transformed_encode(&[col(), col()], &[col(), col()], &x4)
                .unwrap()
                .iter()
                .map(|pair| pair.concat())
                .collect()
        })
        .collect();
    let base = costs_and_round_trip(&QuadCode::base(), &base_words)?;
    ensure!(base[..2] == [12, 14], "base costs {base:?}");
    let trans = costs_and_round_trip(&QuadCode::transformed(), &trans_words)?;
    ensure!(trans == [24, 28, 24, 24], "transformed costs {trans:?}");
    Ok(format!("base {base:?}, transformed {trans:?}, both MDS"))
}

fn criterion_5() -> Outcome {
    let code = Te2Code::new(3, 5).map_err(|e| e.to_string())?;
    ensure!(code.check_mds().is_mds, "not MDS over 3-subsets");
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut costs = Vec::new();
    for f in 0..5 {
        let recipe = code.repair_recipe(f, None).map_err(|e| e.to_string())?;
        for _ in 0..10 {
            let info: Vec<u8> = (0..24).map(|_| rng.gen_range(0..2)).collect();
            let cw = code.encode(&info).map_err(|e| e.to_string())?;
            let cols: Vec<Option<&[u8]>> = (0..5).map(|c| (c != f).then_some(&cw[c][..])).collect();
            let (col, report) = recipe.repair(&cols).map_err(|e| e.to_string())?;
            ensure!(col == cw[f], "column {f} repaired incorrectly");
            if f >= 3 {
                ensure!(
                    report.ratio == Ratio::new(1, 1),
                    "column {f} ratio {}",
                    report.ratio
                );
            }
        }
        costs.push(recipe.bits());
    }
    ensure!(
        costs[1] == 20 && costs[3] == 16 && costs[4] == 16,
        "costs {costs:?}"
    );
    Ok(format!("repair bits {costs:?}, MDS over all 3-subsets"))
}

fn criterion_6() -> Outcome {
    let code = build_multilayer(4, 2, 5, 5, 1).map_err(|e| e.to_string())?;
    let expected = [
        (0, [0, 2, 4, 6]),
        (1, [1, 3, 5, 7]),
        (4, [0, 1, 2, 3]),
        (5, [4, 5, 6, 7]),
    ];
    for (f, rows) in expected {
        let plan = code.select_helpers(f).map_err(|e| e.to_string())?;
        for &h in &plan.helpers {
            ensure!(
                plan.row_set(h) == rows,
                "f={f} helper {h} rows {:?}",
                plan.row_set(h)
            );
        }
    }
    Ok("f=0,1,4,5 row sets match".into())
}

fn ring_properties() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for p in [3u32, 5, 7, 11, 13] {
        let m = Modulus::evenodd(p).map_err(|e| e.to_string())?;
        let one = RingElement::one(m);
        let zero = RingElement::zero(m);
        for _ in 0..300 {
            let [a, b, c] = [0; 3].map(|_| RingElement::random(m, &mut rng));
            ensure!(a + b == b + a && a * b == b * a, "commutativity, p={p}");
            ensure!(
                (a + b) + c == a + (b + c) && (a * b) * c == a * (b * c),
                "associativity, p={p}"
            );
            ensure!(a * (b + c) == a * b + a * c, "distributivity, p={p}");
            ensure!(a * one == a && a + zero == a, "identities, p={p}");
            ensure!(a + a == zero, "a + a != 0, p={p}");
            ensure!(a.shift_mul(p) == a, "x^p != 1, p={p}");
        }
    }
    for p in [3u32, 5, 7] {
        let m = Modulus::evenodd(p).map_err(|e| e.to_string())?;
        for bits in 1u128..1 << (p - 1) {
            let a = RingElement::from_bits(m, bits);
            let brute = (1u128..1 << (p - 1))
                .find(|&b| a * RingElement::from_bits(m, b) == RingElement::one(m));
            match (a.inverse(), brute) {
                (Ok(inv), Some(b)) => ensure!(
                    inv == RingElement::from_bits(m, b),
                    "p={p}: wrong inverse of {a}"
                ),
                (Err(_), None) => {}
                (got, want) => {
                    return Err(format!(
                        "p={p}: inverse of {a} gave {got:?}, search found {want:?}"
                    ))
                }
            }
        }
    }
    Ok(())
}

fn transform_properties() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let params = CodeParams::new(4, 2, 5, 5, 1, 0).map_err(|e| e.to_string())?;
    let m = params.modulus();
    for i in 0..100 {
        let spec =
            TransformSpec::with_default(&params, 2 * (i % 2), true).map_err(|e| e.to_string())?;
        let instances = (0..2)
            .map(|_| {
                let info: Vec<RingElement> =
                    (0..4).map(|_| RingElement::random(m, &mut rng)).collect();
                encode(&params, &info).unwrap()
            })
            .collect();
        ensure!(
            transform_equivalence_check(&InstanceBundle { instances }, &spec),
            "systematic form differs from the first transform on input {i}"
        );
    }
    for i in 0..1000 {
        let e = 1 + i % 4;
        let c = Coupling::default_for(m, e).map_err(|e| e.to_string())?;
        let (x, y) = (
            RingElement::random(m, &mut rng),
            RingElement::random(m, &mut rng),
        );
        let (u, v) = c.pair(x, y);
        ensure!(
            c.pair_solve(u, v) == (x, y),
            "pair_solve failed for {x}, {y}, e={e}"
        );
    }
    Ok(())
}

fn xmds(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_xmds"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(
        out.status.success(),
        "xmds {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    Ok(())
}

fn cli_round_trip() -> Result<(), String> {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let data: Vec<u8> = (0..1 << 20).map(|_| rng.gen()).collect();
    let input = dir.join("input.bin");
    fs::write(&input, &data).map_err(|e| e.to_string())?;
    let shards = dir.join("shards");
    let s = |p: &Path| p.to_str().unwrap().to_owned();
    xmds(&[
        "encode",
        "--k",
        "4",
        "--r",
        "2",
        "--d",
        "5",
        "--p",
        "5",
        &s(&input),
        &s(&shards),
    ])?;
    let original = fs::read(shards.join("col_2.shard")).map_err(|e| e.to_string())?;
    xmds(&["erase", &s(&shards), "2"])?;
    xmds(&["repair", &s(&shards), "2"])?;
    let repaired = fs::read(shards.join("col_2.shard")).map_err(|e| e.to_string())?;
    ensure!(repaired == original, "repaired shard differs");
    let report: serde_json::Value = serde_json::from_slice(
        &fs::read(shards.join("repair_col_2.json")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    ensure!(
        report["total"]["ratio"]["numerator"] == 1,
        "repair ratio is {}",
        report["total"]["ratio"]
    );
    ensure!(
        report["total"]["ratio"]["denominator"] == 1,
        "repair ratio is {}",
        report["total"]["ratio"]
    );
    xmds(&["erase", &s(&shards), "0", "5"])?;
    let output = dir.join("output.bin");
    xmds(&["decode", &s(&shards), &s(&output)])?;
    ensure!(
        fs::read(&output).map_err(|e| e.to_string())? == data,
        "decoded file differs"
    );
    Ok(())
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    ring_properties()?;
    transform_properties()?;
    cli_round_trip()?;
    let secs = start.elapsed().as_secs_f64();
    ensure!(start.elapsed().as_secs() < 60, "took {secs:.1}s");
    Ok(format!(
        "ring, transform and 1 MiB CLI round trip in {secs:.1}s"
    ))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("multilayer optimal repair, (4,2,5,5)", criterion_1),
        ("MDS over all erasure subsets", criterion_2),
        ("worked example tables", criterion_3),
        ("(4,2) example code repair counts", criterion_4),
        ("two-instance EVENODD repair counts", criterion_5),
        ("repair row sets", criterion_6),
        ("property suite and CLI round trip", criterion_7),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
