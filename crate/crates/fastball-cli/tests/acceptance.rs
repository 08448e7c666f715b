//! Acceptance suite: one test per release criterion. Each test prints a
//! `criterion NN` line with its measured values (visible with
//! `cargo test --test acceptance -- --nocapture`).

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::sync::{Mutex, MutexGuard};

use rand::{Rng, SeedableRng};
use tempfile::TempDir;

use fastball::bench::run_bench;
use fastball::enumerate::enumerate_space;
use fastball::fdsm::{
    accumulate_null, extract_backbone, project, required_samples, two_block_fixture,
    BackboneConfig, NullCounts,
};
use fastball::graph::{BipartiteGraph, DegreeSequences};
use fastball::sampler::{default_trades, sample_stream, SampleRng, SamplerConfig};
use fastball::trade::{
    curveball_trade_core, fastball_trade_core, intersection_size, Algorithm, Side, VictoryVector,
};
use fastball::verify::{default_battery, uniformity_test};

const DEMO_I: [u32; 4] = [0, 2, 4, 5];
const DEMO_J: [u32; 3] = [1, 3, 5];

// The speed criterion measures wall-clock time and the heavy criteria
// saturate every core; running them concurrently makes the timings lie.
// Each criterion takes this lock, so the suite runs one criterion at a time
// regardless of the harness thread count.
static EXCLUSIVE: Mutex<()> = Mutex::new(());

fn exclusive() -> MutexGuard<'static, ()> {
    EXCLUSIVE.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

fn all_victory_vectors(len: usize, i_count: usize) -> Vec<VictoryVector> {
    (0u32..1 << len)
        .filter(|mask| mask.count_ones() as usize == i_count)
        .map(|mask| {
            VictoryVector::from_slots(
                (0..len)
                    .map(|k| if mask >> k & 1 == 1 { Side::I } else { Side::J })
                    .collect(),
            )
        })
        .collect()
}

fn permutations(items: &[u32]) -> Vec<Vec<u32>> {
    fn heap(arr: &mut [u32], k: usize, out: &mut Vec<Vec<u32>>) {
        if k <= 1 {
            out.push(arr.to_vec());
            return;
        }
        for i in 0..k {
            heap(arr, k - 1, out);
            if k.is_multiple_of(2) {
                arr.swap(i, k - 1);
            } else {
                arr.swap(0, k - 1);
            }
        }
    }
    let mut arr = items.to_vec();
    let mut out = Vec::new();
    let n = arr.len();
    heap(&mut arr, n, &mut out);
    out
}

/// Criterion 1: on the demo trade instance, the outcome distribution of
/// fastball over all 10 victory vectors equals the outcome distribution of
/// curveball over all 120 shuffles. Exact multiset equality, zero tolerance.
#[test]
fn criterion_01_exact_trade_equivalence() {
    let _serial = exclusive();
    let mut fast: BTreeMap<(Vec<u32>, Vec<u32>), u64> = BTreeMap::new();
    let vectors = all_victory_vectors(5, 3);
    assert_eq!(vectors.len(), 10);
    for v in &vectors {
        let out = fastball_trade_core(&DEMO_I, &DEMO_J, v).unwrap();
        *fast.entry((out.new_i, out.new_j)).or_default() += 1;
    }

    let pool = [0u32, 1, 2, 3, 4];
    let shuffles = permutations(&pool);
    assert_eq!(shuffles.len(), 120);
    let mut curve: BTreeMap<(Vec<u32>, Vec<u32>), u64> = BTreeMap::new();
    for shuffled in &shuffles {
        let out = curveball_trade_core(&DEMO_I, &DEMO_J, shuffled).unwrap();
        *curve.entry((out.new_i, out.new_j)).or_default() += 1;
    }

    assert_eq!(fast.len(), 10);
    assert_eq!(curve.len(), 10);
    assert_eq!(
        fast.keys().collect::<Vec<_>>(),
        curve.keys().collect::<Vec<_>>()
    );
    assert!(fast.values().all(|&c| c == 1));
    assert!(
        curve.values().all(|&c| c == 12),
        "120 shuffles over 10 outcomes"
    );
    println!("criterion 01 PASS: 10 fastball outcomes == 10 curveball outcomes, exact");
}

/// Criterion 2: the subset-assignment law holds for every victory vector on
/// a fixed fuzz corpus of 200 pairs with |S| <= 8. Zero failures.
#[test]
fn criterion_02_subset_assignment_law_exhaustive() {
    let _serial = exclusive();
    let mut rng = SampleRng::seed_from_u64(0xFA57_BA11);
    let mut checked = 0u64;
    for _ in 0..200 {
        let shared_count = rng.gen_range(0..=4usize);
        let si = rng.gen_range(0..=8usize);
        let sj = rng.gen_range(0..=(8 - si));

        // Distinct values split into shared / i-only / j-only parts.
        let mut values: Vec<u32> = (0..100).collect();
        for k in (1..values.len()).rev() {
            let j = rng.gen_range(0..=k);
            values.swap(k, j);
        }
        let shared = &values[..shared_count];
        let only_i = &values[shared_count..shared_count + si];
        let only_j = &values[shared_count + si..shared_count + si + sj];
        let mut ni: Vec<u32> = shared.iter().chain(only_i).copied().collect();
        let mut nj: Vec<u32> = shared.iter().chain(only_j).copied().collect();
        ni.sort_unstable();
        nj.sort_unstable();

        let diff: Vec<u32> = {
            let mut d: Vec<u32> = only_i.iter().chain(only_j).copied().collect();
            d.sort_unstable();
            d
        };

        for victory in all_victory_vectors(si + sj, si) {
            let out = fastball_trade_core(&ni, &nj, &victory).unwrap();
            // Independent set-construction oracle.
            let mut want_i: Vec<u32> = shared.to_vec();
            let mut want_j: Vec<u32> = shared.to_vec();
            for (elem, side) in diff.iter().zip(victory.slots()) {
                match side {
                    Side::I => want_i.push(*elem),
                    Side::J => want_j.push(*elem),
                }
            }
            want_i.sort_unstable();
            want_j.sort_unstable();
            assert_eq!(out.new_i, want_i);
            assert_eq!(out.new_j, want_j);
            checked += 1;
        }
    }
    println!("criterion 02 PASS: subset-assignment law on {checked} (pair, vector) cases");
}

/// Criterion 3: 1000 random graphs (n <= 20, m <= 50), 5n trades each under
/// both algorithms; degrees bitwise unchanged.
#[test]
fn criterion_03_degree_preservation_fuzz() {
    let _serial = exclusive();
    let mut rng = SampleRng::seed_from_u64(3);
    for round in 0..1000u64 {
        let n = rng.gen_range(2..=20usize);
        let m = rng.gen_range(1..=50usize);
        let density = [0.1, 0.3, 0.5, 0.7, 0.9][round as usize % 5];
        let mut edges = Vec::new();
        for i in 0..n as u32 {
            for j in 0..m as u32 {
                if rng.gen_bool(density) {
                    edges.push((i, j));
                }
            }
        }
        let graph = BipartiteGraph::from_edge_list(&edges, n, m).unwrap();
        let before = graph.degrees();
        for algorithm in [Algorithm::Fastball, Algorithm::Curveball] {
            let config = SamplerConfig {
                algorithm,
                seed: round,
                trades_per_sample: None,
                chain: false,
            };
            let walked = fastball::sampler::randomize(&graph, default_trades(n), &config).unwrap();
            assert_eq!(walked.degrees(), before, "round {round} {algorithm}");
        }
    }
    println!("criterion 03 PASS: degrees preserved on 1000 fuzzed graphs, both kernels");
}

/// Criterion 4: empirical uniformity on four oracle-enumerated spaces
/// (sizes 2, 6, 10, 34), 1e5 samples each at 5n trades, chi-square
/// goodness-of-fit against uniform at significance 1e-3.
#[test]
fn criterion_04_empirical_uniformity() {
    let _serial = exclusive();
    let battery = default_battery();
    assert!(battery.len() >= 3);
    for (index, sequences) in battery.iter().enumerate() {
        let config = SamplerConfig::new(fastball::sampler::derive_stream_seed(40, index as u64));
        let report = uniformity_test(sequences, 100_000, 1e-3, &config).unwrap();
        assert!((2..=50).contains(&report.space_size));
        assert!(
            report.pass,
            "space {:?}/{:?} failed: {report:?}",
            report.sequences.top, report.sequences.bottom
        );
        println!(
            "criterion 04: space size {} chi2 {:.2} p {:.4} PASS",
            report.space_size, report.statistic, report.p_value
        );
    }
    println!(
        "criterion 04 PASS: uniformity at 1e5 samples on {} spaces",
        battery.len()
    );
}

/// Criterion 5: worst-case benchmark, 100 trades x 10 replications.
/// Fastball's mean must not exceed curveball's at any m in {1e3, 1e4, 1e5},
/// with a ratio of at least 1.3 at m = 1e3, and fastball's mean must grow
/// monotonically with m.
#[test]
fn criterion_05_speed_ratio() {
    let _serial = exclusive();
    let seed = 51;
    let mut fastball_means = Vec::new();
    for m in [1_000usize, 10_000, 100_000] {
        let fast = run_bench(Algorithm::Fastball, m, 100, 10, seed).unwrap();
        let curve = run_bench(Algorithm::Curveball, m, 100, 10, seed).unwrap();
        let ratio = curve.mean_ns() / fast.mean_ns();
        println!(
            "criterion 05: m={m} fastball {:.2} ms curveball {:.2} ms ratio {ratio:.2}",
            fast.mean_ns() / 1e6,
            curve.mean_ns() / 1e6
        );
        assert!(
            fast.mean_ns() <= curve.mean_ns(),
            "fastball slower than curveball at m={m}"
        );
        if m == 1_000 {
            assert!(ratio >= 1.3, "ratio {ratio} below 1.3 at m=1e3");
        }
        fastball_means.push(fast.mean_ns());
    }
    assert!(
        fastball_means.windows(2).all(|w| w[0] <= w[1]),
        "fastball mean not monotone in m: {fastball_means:?}"
    );
    println!("criterion 05 PASS");
}

/// Criterion 5, `--big` extension: ratio of at least 2.0 at m = 1e6.
/// Run with `cargo test --test acceptance -- --ignored`.
#[test]
#[ignore = "multi-minute m=1e6 sweep; part of the --big benchmark claim"]
fn criterion_05_big_speed_ratio() {
    let _serial = exclusive();
    let seed = 51;
    let m = 1_000_000;
    let fast = run_bench(Algorithm::Fastball, m, 100, 10, seed).unwrap();
    let curve = run_bench(Algorithm::Curveball, m, 100, 10, seed).unwrap();
    let ratio = curve.mean_ns() / fast.mean_ns();
    println!(
        "criterion 05 (big): m={m} fastball {:.2} ms curveball {:.2} ms ratio {ratio:.2}",
        fast.mean_ns() / 1e6,
        curve.mean_ns() / 1e6
    );
    assert!(ratio >= 2.0, "ratio {ratio} below 2.0 at m=1e6");
    println!("criterion 05 (big) PASS");
}

/// Criterion 6: the power calculation lands within 3% of the reference
/// count of 164,710 samples for alpha 0.05 / power 0.95 and is strictly
/// monotone over a 5x5 (alpha, power) grid.
#[test]
fn criterion_06_power_calculation() {
    let _serial = exclusive();
    let got = required_samples(0.05, 0.95).unwrap();
    let reference = 164_710f64;
    let deviation = (got as f64 - reference).abs() / reference;
    assert!(
        deviation <= 0.03,
        "required_samples(0.05, 0.95) = {got}, {:.2}% from 164710",
        deviation * 100.0
    );

    let alphas = [0.01, 0.025, 0.05, 0.075, 0.1];
    let powers = [0.8, 0.85, 0.9, 0.95, 0.99];
    let grid: Vec<Vec<u64>> = alphas
        .iter()
        .map(|&a| {
            powers
                .iter()
                .map(|&p| required_samples(a, p).unwrap())
                .collect()
        })
        .collect();
    for row in 0..5 {
        for col in 0..5 {
            if col > 0 {
                assert!(
                    grid[row][col] > grid[row][col - 1],
                    "not increasing in power"
                );
            }
            if row > 0 {
                assert!(
                    grid[row][col] < grid[row - 1][col],
                    "not decreasing in alpha"
                );
            }
        }
    }
    println!(
        "criterion 06 PASS: required_samples(0.05, 0.95) = {got} ({:+.2}% of 164710), grid monotone",
        (got as f64 - reference) / reference * 100.0
    );
}

/// Criterion 7: the mixing default is exactly five trades per top node.
#[test]
fn criterion_07_default_trades() {
    let _serial = exclusive();
    assert_eq!(default_trades(102), 510);
    println!("criterion 07 PASS: default_trades(102) = 510");
}

/// The reduced two-block instance: 2 blocks of 3 top nodes, private pools
/// {0,1} and {2,3}, every top node adjacent to its whole pool.
fn reduced_two_block() -> BipartiteGraph {
    let adj = vec![
        vec![0, 1],
        vec![0, 1],
        vec![0, 1],
        vec![2, 3],
        vec![2, 3],
        vec![2, 3],
    ];
    BipartiteGraph::from_adjacency(adj, 4).unwrap()
}

/// Criterion 8: exhaustive accumulation over an oracle-enumerated space
/// reproduces exact tail counts with zero tolerance, and Monte Carlo at
/// 1e5 samples matches the exact tail probabilities within 3 sigma.
#[test]
fn criterion_08_exact_null_equivalence() {
    let _serial = exclusive();
    // Exhaustive part, on two spaces inside the oracle guard.
    let three_by_three =
        enumerate_space(&DegreeSequences::new(vec![2, 2, 2], vec![2, 2, 2])).unwrap();
    assert_eq!(three_by_three.len(), 6);
    let reduced = reduced_two_block();
    let reduced_space = enumerate_space(&reduced.degrees()).unwrap();
    assert_eq!(reduced_space.len(), 1860);

    for (observed_graph, space) in [
        (&three_by_three[0], &three_by_three),
        (&reduced, &reduced_space),
    ] {
        let n = observed_graph.top_count();
        let obs = project(observed_graph);
        let mut counts = NullCounts::new(n);
        for g in space.iter() {
            accumulate_null(&obs, g, &mut counts).unwrap();
        }
        assert_eq!(counts.samples_seen(), space.len() as u64);
        for i in 0..n {
            for j in i + 1..n {
                let wo = obs.weight(i, j);
                let exact_ge = space
                    .iter()
                    .filter(|g| intersection_size(g.neighbors(i), g.neighbors(j)) as u32 >= wo)
                    .count() as u64;
                let exact_le = space
                    .iter()
                    .filter(|g| intersection_size(g.neighbors(i), g.neighbors(j)) as u32 <= wo)
                    .count() as u64;
                assert_eq!(counts.ge(i, j), exact_ge, "pair ({i},{j})");
                assert_eq!(counts.le(i, j), exact_le, "pair ({i},{j})");
            }
        }
    }

    // Frozen exact tails of the reduced instance, cross-checked against an
    // independent enumeration: within-block pairs have p_up = 168/1860 and
    // cross-block pairs p_low = 540/1860.
    let obs = project(&reduced);
    let mut exact = NullCounts::new(6);
    for g in &reduced_space {
        accumulate_null(&obs, g, &mut exact).unwrap();
    }
    assert_eq!(exact.ge(0, 1), 168);
    assert_eq!(exact.le(0, 3), 540);

    // The sign pattern recovered from the exact null: at alpha = 0.6 the
    // within-block pairs are +1 and the cross-block pairs are -1.
    let backbone = fastball::fdsm::Backbone::from_counts(&exact, 0.6, false).unwrap();
    for i in 0..6 {
        for j in i + 1..6 {
            let same_block = (i < 3) == (j < 3);
            assert_eq!(backbone.sign(i, j), if same_block { 1 } else { -1 });
        }
    }

    // Monte Carlo part: 1e5 samples against the exact tail probabilities.
    let samples = 100_000u64;
    let config = SamplerConfig::new(88);
    let mut mc = NullCounts::new(6);
    sample_stream(&reduced, samples, &config, |_, sample| {
        accumulate_null(&obs, sample, &mut mc)
    })
    .unwrap();
    let total = reduced_space.len() as f64;
    let mut worst_sigma = 0.0f64;
    for i in 0..6 {
        for j in i + 1..6 {
            for (got, exact_count) in [(mc.ge(i, j), exact.ge(i, j)), (mc.le(i, j), exact.le(i, j))]
            {
                let p = exact_count as f64 / total;
                let sigma = (p * (1.0 - p) / samples as f64).sqrt();
                let p_hat = got as f64 / samples as f64;
                if sigma > 0.0 {
                    let pull = (p_hat - p).abs() / sigma;
                    worst_sigma = worst_sigma.max(pull);
                    assert!(
                        pull <= 3.0,
                        "pair ({i},{j}): p_hat {p_hat:.5} vs exact {p:.5} is {pull:.2} sigma"
                    );
                } else {
                    assert_eq!(p_hat, p);
                }
            }
        }
    }
    println!(
        "criterion 08 PASS: exact tails reproduced (zero tolerance); MC worst pull {worst_sigma:.2} sigma"
    );
}

/// Criterion 9: the synthetic two-block fixture recovers its block structure:
/// at least 90% of within-block pairs signed +1 and at least 90% of
/// cross-block pairs signed -1, at alpha = 0.05 with 1e4 samples.
#[test]
fn criterion_09_backbone_recovery() {
    let _serial = exclusive();
    let fixture = two_block_fixture(10, 50, 30, 90);
    let sampler = SamplerConfig::new(91);
    let mut config = BackboneConfig::new(0.05, 10_000);
    config.threads = 4;
    let run = extract_backbone(&fixture, &sampler, &config).unwrap();

    let tops = 20;
    let mut within = (0u32, 0u32);
    let mut cross = (0u32, 0u32);
    for i in 0..tops {
        for j in i + 1..tops {
            let same_block = (i < 10) == (j < 10);
            let sign = run.backbone.sign(i, j);
            if same_block {
                within.1 += 1;
                within.0 += u32::from(sign == 1);
            } else {
                cross.1 += 1;
                cross.0 += u32::from(sign == -1);
            }
        }
    }
    // Sign soundness: every reported sign must be re-derivable from the
    // persisted tallies via the per-tail threshold rule.
    for i in 0..tops {
        for j in i + 1..tops {
            let expect = if run.counts.p_upper(i, j, false) < 0.025 {
                1
            } else if run.counts.p_lower(i, j, false) < 0.025 {
                -1
            } else {
                0
            };
            assert_eq!(
                run.backbone.sign(i, j),
                expect,
                "sign rule broken at ({i},{j})"
            );
        }
    }

    let within_rate = within.0 as f64 / within.1 as f64;
    let cross_rate = cross.0 as f64 / cross.1 as f64;
    println!(
        "criterion 09: within-block +1 on {}/{} ({:.0}%), cross-block -1 on {}/{} ({:.0}%)",
        within.0,
        within.1,
        within_rate * 100.0,
        cross.0,
        cross.1,
        cross_rate * 100.0
    );
    assert!(within_rate >= 0.9, "within-block recovery {within_rate}");
    assert!(cross_rate >= 0.9, "cross-block recovery {cross_rate}");
    println!("criterion 09 PASS");
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fastball"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn fastball");
    assert!(
        out.status.success(),
        "command failed: {:?}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn write_demo(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("demo.txt");
    fs::write(&path, "A a\nA c\nA e\nA f\nB b\nB d\nB f\n").unwrap();
    path
}

fn write_fixture(dir: &Path) -> std::path::PathBuf {
    let fixture = two_block_fixture(3, 5, 3, 17);
    let labeled = fastball::io::LabeledGraph::with_index_labels(fixture);
    let mut text = Vec::new();
    fastball::io::write_edge_list(&mut text, &labeled).unwrap();
    let path = dir.join("blocks.txt");
    fs::write(&path, text).unwrap();
    path
}

/// Criterion 10: every CLI command re-run with its echoed seed reproduces
/// byte-identical output, including under --threads 4.
#[test]
fn criterion_10_cli_determinism() {
    let _serial = exclusive();
    let dir = TempDir::new().unwrap();
    let demo = write_demo(dir.path());
    let blocks = write_fixture(dir.path());

    // sample: run without a seed, re-run with the echoed one.
    let first = run_ok(cli().args(["sample"]).arg(&demo).args(["--count", "5"]));
    let text = String::from_utf8(first.stdout.clone()).unwrap();
    let seed_field = text
        .lines()
        .next()
        .and_then(|l| l.split_whitespace().find(|t| t.starts_with("seed=")))
        .expect("header echoes the seed");
    let seed = seed_field.strip_prefix("seed=").unwrap();
    let second = run_ok(
        cli()
            .args(["sample"])
            .arg(&demo)
            .args(["--count", "5", "--seed", seed]),
    );
    assert_eq!(
        first.stdout, second.stdout,
        "sample not reproducible from echoed seed"
    );

    // sample under threads: byte-identical across re-runs and thread counts.
    let t4 = run_ok(cli().args(["sample"]).arg(&demo).args([
        "--count",
        "8",
        "--seed",
        "99",
        "--threads",
        "4",
    ]));
    let t4_again = run_ok(cli().args(["sample"]).arg(&demo).args([
        "--count",
        "8",
        "--seed",
        "99",
        "--threads",
        "4",
    ]));
    let t1 = run_ok(cli().args(["sample"]).arg(&demo).args([
        "--count",
        "8",
        "--seed",
        "99",
        "--threads",
        "1",
    ]));
    assert_eq!(t4.stdout, t4_again.stdout);
    assert_eq!(
        t4.stdout, t1.stdout,
        "sample output depends on thread count"
    );

    // backbone under threads.
    let backbone_args = |threads: &str| {
        let mut c = cli();
        c.arg("backbone").arg(&blocks).args([
            "--samples",
            "2000",
            "--seed",
            "7",
            "--alpha",
            "0.5",
            "--threads",
            threads,
        ]);
        c
    };
    let b4 = run_ok(&mut backbone_args("4"));
    let b4_again = run_ok(&mut backbone_args("4"));
    let b1 = run_ok(&mut backbone_args("1"));
    assert_eq!(b4.stdout, b4_again.stdout);
    assert_eq!(
        b4.stdout, b1.stdout,
        "backbone output depends on thread count"
    );

    // project: fully deterministic.
    let p1 = run_ok(cli().arg("project").arg(&demo));
    let p2 = run_ok(cli().arg("project").arg(&demo));
    assert_eq!(p1.stdout, p2.stdout);

    // verify: seeded battery reproduces byte for byte.
    let verify_args = [
        "--samples",
        "20000",
        "--seed",
        "11",
        "--space",
        "2,2,2/2,2,2",
    ];
    let v1 = run_ok(cli().arg("verify").args(verify_args));
    let v2 = run_ok(cli().arg("verify").args(verify_args));
    assert_eq!(v1.stdout, v2.stdout);

    println!("criterion 10 PASS: sample/backbone/project/verify byte-identical on re-run");
}
