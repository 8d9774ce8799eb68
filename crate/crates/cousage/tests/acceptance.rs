//! End-to-end acceptance checks, one PASS/FAIL line each.
//!
//! Expected values come from the set-based reference implementations in
//! `core/tests/common`, from hand enumeration, or from fixtures whose
//! outcome follows from their construction. The process exits non-zero
//! when any check fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use cousage::matrix_io::matrix_to_json;
use cousage::{load_matrix, MatrixFormat};
use cousage_core::baseline::{
    closed_itemsets, downward_closed, generate_rules, mine_frequent_itemsets, BaselineConfig,
};
use cousage_core::evaluation::{
    cross_validate, make_folds, mine_folds, sweep_max_epsilon, NoClock,
};
use cousage_core::metrics::{
    is_informative, puc, puc_indexed, PatternMetrics, INFORMATIVE_THRESHOLD,
};
use cousage_core::recommend::{
    eval_ranking, eval_ranking_with, sort_ranked, RankingEval, RecommendMode,
};
use cousage_core::simindex::{dist, usim};
use cousage_core::{
    epsilon_dbscan, run_dbscan, ClientId, DependencyMatrix, LibraryId, MiningConfig, MiningResult,
    Point, UsageVector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($msg)+));
        }
    };
}

/// Every mining result produced along the way, for the purity check.
#[derive(Default)]
struct Ctx {
    mined: Vec<(DependencyMatrix, MiningResult)>,
}

struct Criterion {
    id: &'static str,
    title: &'static str,
    limit: Option<Duration>,
    run: fn(&mut Ctx) -> Outcome,
}

fn main() {
    let secs = |s: u64| Some(Duration::from_secs(s));
    let criteria = [
        Criterion {
            id: "C1",
            title: "usage similarity",
            limit: secs(5),
            run: similarity,
        },
        Criterion {
            id: "C2",
            title: "worked example layers",
            limit: secs(1),
            run: worked_example,
        },
        Criterion {
            id: "C3",
            title: "dbscan vs connected components",
            limit: secs(30),
            run: dbscan_oracle,
        },
        Criterion {
            id: "C5",
            title: "cohesion oracle and threshold",
            limit: None,
            run: cohesion,
        },
        Criterion {
            id: "C6",
            title: "max-epsilon sweep trend",
            limit: secs(60),
            run: sweep_trend,
        },
        Criterion {
            id: "C7",
            title: "cross-validation",
            limit: None,
            run: cross_validation,
        },
        Criterion {
            id: "C8",
            title: "recommendation ranking",
            limit: None,
            run: recommendation,
        },
        Criterion {
            id: "C9",
            title: "itemset and rule baseline",
            limit: None,
            run: baseline,
        },
        Criterion {
            id: "C10",
            title: "byte-identical reruns",
            limit: None,
            run: determinism,
        },
        // last, so it sees every result mined above
        Criterion {
            id: "C4",
            title: "layer-0 purity",
            limit: None,
            run: layer_zero_purity,
        },
    ];

    panic::set_hook(Box::new(|_| {}));
    let mut ctx = Ctx::default();
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(|| (c.run)(&mut ctx)))
            .unwrap_or_else(|p| Err(format!("panicked: {}", panic_text(&p))));
        let took = start.elapsed();
        let outcome = match (outcome, c.limit) {
            (Ok(d), Some(limit)) if took > limit => {
                Err(format!("{d}; exceeded the {}s limit", limit.as_secs()))
            }
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!(
                "PASS {} {}: {detail} [{:.2}s]",
                c.id,
                c.title,
                took.as_secs_f64()
            ),
            Err(why) => {
                failed += 1;
                println!(
                    "FAIL {} {}: {why} [{:.2}s]",
                    c.id,
                    c.title,
                    took.as_secs_f64()
                );
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

fn panic_text(p: &Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<String>()
        .cloned()
        .or_else(|| p.downcast_ref::<&str>().map(|s| (*s).to_owned()))
        .unwrap_or_else(|| "non-string panic".into())
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_rows(r: &mut ChaCha8Rng, clients: usize, libs: usize, density: f64) -> Vec<Vec<bool>> {
    (0..clients)
        .map(|_| (0..libs).map(|_| r.gen_bool(density)).collect())
        .collect()
}

fn random_set(r: &mut ChaCha8Rng, len: usize, density: f64) -> BTreeSet<usize> {
    (0..len).filter(|_| r.gen_bool(density)).collect()
}

fn rows_of(m: &DependencyMatrix) -> Vec<Vec<bool>> {
    m.client_rows()
        .iter()
        .map(|row| {
            (0..m.library_count())
                .map(|l| row.binary_search(&l).is_ok())
                .collect()
        })
        .collect()
}

fn cols_of(m: &DependencyMatrix) -> Vec<BTreeSet<usize>> {
    (0..m.library_count())
        .map(|l| m.usage(l).iter_ones().collect())
        .collect()
}

fn names_of(m: &DependencyMatrix) -> Vec<String> {
    m.libraries()
        .iter()
        .map(|l| l.as_str().to_owned())
        .collect()
}

fn lib(name: &str) -> LibraryId {
    LibraryId::new(name).unwrap()
}

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

/// Distance `1 - n/d` as an exact fraction; two empty sets are at distance 1.
fn exact_dist(a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> (u128, u128) {
    match common::jaccard(a, b) {
        (_, 0) => (1, 1),
        (n, d) => ((d - n) as u128, d as u128),
    }
}

fn similarity(_: &mut Ctx) -> Outcome {
    // clients 1..8; one library used by C1, C2, C3, C6, the other by C1, C2
    let a = UsageVector::from_indices(8, [0, 1, 2, 5]);
    let b = UsageVector::from_indices(8, [0, 1]);
    ensure!(usim(&a, &b) == 0.5, "fixture usim {} != 0.5", usim(&a, &b));
    ensure!(usim(&b, &a) == 0.5, "fixture usim not symmetric");

    let mut r = rng(1);
    let mut worst = 0.0f64;
    for i in 0..10_000 {
        let len = r.gen_range(1..=96);
        let density = r.gen_range(0.02..0.9);
        let sets: Vec<BTreeSet<usize>> = (0..3).map(|_| random_set(&mut r, len, density)).collect();
        let v: Vec<UsageVector> = sets
            .iter()
            .map(|s| UsageVector::from_indices(len, s.iter().copied()))
            .collect();
        for (x, y) in [(0, 1), (1, 2), (0, 2)] {
            let s = usim(&v[x], &v[y]);
            ensure!(
                s.to_bits() == usim(&v[y], &v[x]).to_bits(),
                "triple {i}: usim not symmetric"
            );
            ensure!(
                s == common::jaccard_f64(&sets[x], &sets[y]),
                "triple {i}: usim {s} differs from set Jaccard"
            );
            ensure!(
                (0.0..=1.0).contains(&s),
                "triple {i}: usim {s} out of range"
            );
        }
        // all three orientations of the triangle, exactly and in floating point
        for (x, y, z) in [(0, 1, 2), (1, 0, 2), (0, 2, 1)] {
            let (pxz, qxz) = exact_dist(&sets[x], &sets[z]);
            let (pxy, qxy) = exact_dist(&sets[x], &sets[y]);
            let (pyz, qyz) = exact_dist(&sets[y], &sets[z]);
            ensure!(
                pxz * qxy * qyz <= pxy * qxz * qyz + pyz * qxz * qxy,
                "triple {i}: exact triangle inequality fails"
            );
            let slack = dist(&v[x], &v[z]) - dist(&v[x], &v[y]) - dist(&v[y], &v[z]);
            worst = worst.max(slack);
            ensure!(slack <= 1e-12, "triple {i}: triangle violated by {slack:e}");
        }
    }
    Ok(format!(
        "fixture usim 0.5; 10000 triples, worst float slack {worst:e}"
    ))
}

fn worked_example(ctx: &mut Ctx) -> Outcome {
    let m = load_matrix(&fixture("worked_example.json"), MatrixFormat::Json)
        .map_err(|e| e.to_string())?;
    let cfg = MiningConfig {
        max_epsilon: 0.55,
        epsilon_step: 0.25,
        min_pts: 2,
    };
    ensure!(
        cfg.schedule() == [0.0, 0.25, 0.5],
        "schedule {:?}",
        cfg.schedule()
    );
    let r = epsilon_dbscan(&m, &cfg).map_err(|e| e.to_string())?;

    let trace: Vec<(f64, usize, usize, usize)> = r
        .trace
        .iter()
        .map(|t| (t.epsilon, t.points_in, t.clusters, t.noise))
        .collect();
    ensure!(
        trace == [(0.0, 8, 2, 3), (0.25, 5, 0, 5), (0.5, 5, 1, 3)],
        "trace {trace:?}"
    );
    let got: BTreeSet<String> = r
        .patterns
        .iter()
        .map(|p| common::canonical(p.root()))
        .collect();
    let want: BTreeSet<String> = ["(0.5:(0:lib1,lib2,lib3),lib7)", "(0:lib4,lib5)"]
        .map(String::from)
        .into();
    ensure!(got == want, "patterns {got:?}");
    let noise: BTreeSet<&str> = r.noise.iter().map(LibraryId::as_str).collect();
    ensure!(noise == BTreeSet::from(["lib6", "lib8"]), "noise {noise:?}");

    let (oracle, oracle_noise) =
        common::replay_layers(&cols_of(&m), &names_of(&m), &cfg.schedule());
    ensure!(
        oracle == want,
        "replayed layers {oracle:?} disagree with the fixture expectation"
    );
    ensure!(
        oracle_noise
            .iter()
            .map(String::as_str)
            .collect::<BTreeSet<_>>()
            == noise,
        "replayed noise {oracle_noise:?}"
    );
    ctx.mined.push((m, r));
    Ok("{lib1,lib2,lib3} and {lib4,lib5} at 0, unchanged at 0.25, lib7 joins at 0.5".into())
}

fn dbscan_oracle(_: &mut Ctx) -> Outcome {
    let mut r = rng(3);
    let mut clustered = 0;
    for i in 0..1000 {
        let libs = r.gen_range(1..=40);
        let clients = r.gen_range(1..=20);
        let density = r.gen_range(0.05..0.7);
        let rows = random_rows(&mut r, clients, libs, density);
        let cols = common::columns(&rows, libs);
        let eps = match i % 3 {
            0 => f64::from(r.gen_range(0..=20u32)) / 20.0,
            1 => r.gen_range(0.0..=1.0),
            // exact Jaccard values put points on the ball boundary
            _ => {
                let d = r.gen_range(1..=20u32);
                f64::from(r.gen_range(0..=d)) / f64::from(d)
            }
        };
        let vectors: Vec<UsageVector> = cols
            .iter()
            .map(|c| UsageVector::from_indices(clients, c.iter().copied()))
            .collect();
        let got = run_dbscan(&vectors, eps, 2).map_err(|e| format!("instance {i}: {e}"))?;
        let comps = common::components(&cols, eps);
        let want_clusters: BTreeSet<Vec<usize>> =
            comps.iter().filter(|c| c.len() > 1).cloned().collect();
        let want_noise: Vec<usize> = comps
            .iter()
            .filter(|c| c.len() == 1)
            .map(|c| c[0])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let got_clusters: BTreeSet<Vec<usize>> = got.clusters.iter().cloned().collect();
        ensure!(
            got_clusters == want_clusters && got.noise == want_noise,
            "instance {i} (libs {libs}, clients {clients}, eps {eps}): {got:?} vs {want_clusters:?} / {want_noise:?}"
        );
        clustered += want_clusters.len();
    }
    Ok(format!(
        "1000/1000 instances agree ({clustered} clusters in total)"
    ))
}

fn cohesion(_: &mut Ctx) -> Outcome {
    let mut r = rng(5);
    let mut defined = 0;
    for i in 0..500 {
        let libs = r.gen_range(1..=12);
        let clients = r.gen_range(1..=25);
        let density = r.gen_range(0.1..0.8);
        let rows = random_rows(&mut r, clients, libs, density);
        let m = common::matrix(&rows, libs);
        let mut pattern = random_set(&mut r, libs, 0.4);
        if pattern.is_empty() {
            pattern.insert(r.gen_range(0..libs));
        }
        let scope = (i % 2 == 1).then(|| random_set(&mut r, clients, 0.5));
        let ids: Vec<LibraryId> = pattern.iter().map(|&l| common::lib_id(l)).collect();
        let scope_ids: Option<BTreeSet<ClientId>> = scope
            .as_ref()
            .map(|s| s.iter().map(|&c| m.clients()[c].clone()).collect());
        let got = puc(&ids, &m, scope_ids.as_ref()).map_err(|e| format!("pair {i}: {e}"))?;
        let want = common::puc_bruteforce(&pattern, &rows, scope.as_ref());
        match (got, want) {
            (None, None) => {}
            (Some(g), Some(w)) if (g - w).abs() <= 1e-12 => defined += 1,
            _ => return Err(format!("pair {i}: puc {got:?}, reference {want:?}")),
        }
    }

    // two clients: one uses both libraries, one uses a single one
    let m = DependencyMatrix::from_str_lists([("c1", vec!["a", "b"]), ("c2", vec!["a"])]).unwrap();
    let p = puc(&[lib("a"), lib("b")], &m, None).unwrap();
    ensure!(p == Some(0.75), "fixture puc {p:?}");
    ensure!(
        !is_informative(0.75, INFORMATIVE_THRESHOLD),
        "0.75 counted as informative"
    );
    ensure!(
        is_informative(0.75 + 1e-9, INFORMATIVE_THRESHOLD),
        "0.75 + 1e-9 not informative"
    );
    ensure!(
        !PatternMetrics::new(0.9, Some(0.75), INFORMATIVE_THRESHOLD).informative,
        "validation PUC of exactly 0.75 counted as informative"
    );
    ensure!(
        PatternMetrics::new(0.9, Some(0.75 + 1e-9), INFORMATIVE_THRESHOLD).informative,
        "validation PUC above 0.75 not informative"
    );
    Ok(format!(
        "500 pairs within 1e-12 ({defined} defined); 0.75 excluded, 0.75+1e-9 included"
    ))
}

/// Ten groups of twenty clients. Every client of a group uses the group's
/// core libraries; satellite libraries are used by nested prefixes of the
/// group's clients, so each one sits closer to the group than to any other
/// satellite and joins the group pattern at distance `1 - n/20`.
fn planted_sweep_corpus() -> DependencyMatrix {
    let mut rows: Vec<(String, Vec<String>)> = Vec::new();
    for g in 0..10usize {
        let core = 2 + g % 3;
        let mut sat: Vec<usize> = [18 - g, 13 - g / 2, 8 - g / 3, 3 + g % 2].into();
        sat.sort_unstable_by(|a, b| b.cmp(a));
        sat.dedup();
        for c in 0..20 {
            let mut libs: Vec<String> = (0..core).map(|i| format!("org.g{g}:core{i}")).collect();
            libs.extend(
                sat.iter()
                    .enumerate()
                    .filter(|&(_, &n)| c < n)
                    .map(|(j, _)| format!("org.g{g}:sat{j}")),
            );
            rows.push((format!("g{g}-client{c:02}"), libs));
        }
    }
    DependencyMatrix::from_str_lists(
        rows.iter()
            .map(|(c, l)| (c.as_str(), l.iter().map(String::as_str).collect::<Vec<_>>())),
    )
    .unwrap()
}

fn avg_puc_bruteforce(m: &DependencyMatrix, r: &MiningResult) -> Option<f64> {
    let rows = rows_of(m);
    let pucs: Vec<f64> = r
        .patterns
        .iter()
        .filter_map(|p| {
            let set: BTreeSet<usize> = p
                .members()
                .iter()
                .map(|l| m.library_index(l).unwrap())
                .collect();
            common::puc_bruteforce(&set, &rows, None)
        })
        .collect();
    (!pucs.is_empty()).then(|| pucs.iter().sum::<f64>() / pucs.len() as f64)
}

fn sweep_trend(ctx: &mut Ctx) -> Outcome {
    let m = planted_sweep_corpus();
    ensure!(
        m.client_count() == 200,
        "corpus has {} clients",
        m.client_count()
    );
    let grid: Vec<f64> = (1..=19).map(|i| f64::from(i) / 20.0).collect();
    let report = sweep_max_epsilon(&m, &grid, 0.05, 2, &NoClock).map_err(|e| e.to_string())?;
    let mut previous = f64::INFINITY;
    for row in &report.rows {
        let cfg = MiningConfig {
            max_epsilon: row.max_epsilon,
            epsilon_step: 0.05,
            min_pts: 2,
        };
        let mined = epsilon_dbscan(&m, &cfg).map_err(|e| e.to_string())?;
        let want = avg_puc_bruteforce(&m, &mined);
        let got = row.avg_puc;
        ensure!(
            row.pattern_count == mined.patterns.len()
                && matches!((got, want), (Some(g), Some(w)) if (g - w).abs() <= 1e-12),
            "max epsilon {}: sweep avg PUC {got:?}, recomputed {want:?}",
            row.max_epsilon
        );
        let g = got.unwrap();
        ensure!(
            g <= previous,
            "avg PUC rises to {g} at max epsilon {} (from {previous})",
            row.max_epsilon
        );
        previous = g;
        ctx.mined.push((m.clone(), mined));
    }
    let first = report.rows[0].avg_puc;
    ensure!(
        first == Some(1.0),
        "avg PUC at the smallest max epsilon is {first:?}"
    );
    let distinct: BTreeSet<u64> = report
        .rows
        .iter()
        .map(|r| r.avg_puc.unwrap().to_bits())
        .collect();
    ensure!(
        distinct.len() > 5,
        "only {} distinct averages; the corpus does not exercise the sweep",
        distinct.len()
    );

    // one step past 1 adds a pass at epsilon 1, which joins every used library
    let past_one = MiningConfig {
        max_epsilon: 1.05,
        epsilon_step: 0.05,
        min_pts: 2,
    };
    let mut r = rng(6);
    let mut corpora = vec![m.clone()];
    for _ in 0..20 {
        let (c, l) = (r.gen_range(2..=20), r.gen_range(2..=15));
        corpora.push(common::matrix(&random_rows(&mut r, c, l, 0.3), l).drop_unused_libraries());
    }
    for (i, c) in corpora.iter().enumerate() {
        let mined = epsilon_dbscan(c, &past_one).map_err(|e| e.to_string())?;
        ensure!(
            mined.patterns.len() == 1 && mined.noise.is_empty(),
            "corpus {i}: {} patterns and {} noise at max epsilon 1.05",
            mined.patterns.len(),
            mined.noise.len()
        );
    }
    Ok(format!(
        "avg PUC 1 at 0.05 falling to {:.4} at 0.95 over {} distinct values; single pattern past 1 on 21 corpora",
        previous,
        distinct.len()
    ))
}

fn cross_validation(_: &mut Ctx) -> Outcome {
    let cfg = MiningConfig::default();

    // disjoint client groups, each using exactly its own libraries
    let mut rows: Vec<(String, Vec<String>)> = Vec::new();
    for g in 0..6 {
        for c in 0..15 {
            rows.push((
                format!("m{g}-{c}"),
                (0..2 + g % 4).map(|i| format!("mod{g}:lib{i}")).collect(),
            ));
        }
    }
    let modular = DependencyMatrix::from_str_lists(
        rows.iter()
            .map(|(c, l)| (c.as_str(), l.iter().map(String::as_str).collect::<Vec<_>>())),
    )
    .unwrap();
    let cv = cross_validate(&modular, &cfg, 10, 42).map_err(|e| e.to_string())?;
    let agg = cv.aggregate;
    ensure!(
        agg.avg_puc_training == Some(1.0)
            && agg.avg_puc_validation == Some(1.0)
            && agg.avg_consistency == Some(1.0),
        "modular corpus aggregate {agg:?}"
    );
    for run in &cv.runs {
        for p in &run.patterns {
            ensure!(
                p.metrics.puc_training == 1.0
                    && p.metrics.puc_validation.is_none_or(|v| v == 1.0)
                    && p.metrics.consistency.is_none_or(|c| c == 1.0),
                "run {}: pattern {:?} has {:?}",
                run.fold,
                p.members,
                p.metrics
            );
        }
    }
    ensure!(
        cv == cross_validate(&modular, &cfg, 10, 42).map_err(|e| e.to_string())?,
        "CV not reproducible"
    );

    // breakage planted in the validation part of one fold: its clients use
    // only one library of the three the rest of the group uses together
    let clients: Vec<ClientId> = (0..60)
        .map(|c| ClientId::new(&format!("sys{c:02}")).unwrap())
        .collect();
    let plan = make_folds(&clients, 10, 7).map_err(|e| e.to_string())?;
    let broken_fold = plan.fold_of(0);
    let rows: Vec<(String, Vec<&str>)> = (0..60)
        .map(|c| {
            let libs = if c >= 30 {
                vec!["q1", "q2"]
            } else if plan.fold_of(c) == broken_fold {
                vec!["p1"]
            } else {
                vec!["p1", "p2", "p3"]
            };
            (clients[c].as_str().to_owned(), libs)
        })
        .collect();
    let broken =
        DependencyMatrix::from_str_lists(rows.iter().map(|(c, l)| (c.as_str(), l.clone())))
            .unwrap();
    let cv = cross_validate(&broken, &cfg, 10, 7).map_err(|e| e.to_string())?;
    let run = cv
        .runs
        .iter()
        .find(|r| r.fold == broken_fold)
        .ok_or("broken fold was skipped")?;
    let p = run
        .patterns
        .iter()
        .find(|p| p.members.contains(&lib("p1")))
        .ok_or("no pattern holds p1 in the broken fold")?;
    let (t, v) = (p.metrics.puc_training, p.metrics.puc_validation);
    ensure!(
        matches!(v, Some(v) if v < t),
        "broken fold: puc training {t}, validation {v:?}"
    );
    ensure!(
        cv == cross_validate(&broken, &cfg, 10, 7).map_err(|e| e.to_string())?,
        "CV not reproducible"
    );
    Ok(format!(
        "modular corpus T = V = consistency = 1 over {} runs; planted breakage T {t} > V {}",
        cv.runs.len(),
        v.unwrap()
    ))
}

/// Ten groups of five libraries, twenty clients each. Clients skip a group
/// library now and then and a quarter of them pick up one rarely used
/// library.
fn planted_recommendation_corpus() -> DependencyMatrix {
    let mut r = rng(8);
    let mut rows: Vec<(String, Vec<String>)> = Vec::new();
    for g in 0..10 {
        for c in 0..20 {
            let skip = r.gen_bool(0.3).then(|| r.gen_range(0..5));
            let mut libs: Vec<String> = (0..5)
                .filter(|&i| Some(i) != skip)
                .map(|i| format!("org.group{g}:lib{i}"))
                .collect();
            if r.gen_bool(0.25) {
                libs.push(format!("org.misc:rare{}", r.gen_range(0..40)));
            }
            rows.push((format!("g{g}-client{c:02}"), libs));
        }
    }
    DependencyMatrix::from_client_lists(rows.into_iter().map(|(c, libs)| {
        (
            ClientId::new(&c).unwrap(),
            libs.iter().map(|l| lib(l)).collect::<Vec<_>>(),
        )
    }))
    .unwrap()
}

/// Replayed pattern member sets and training usage by library name.
type FoldReference = (Vec<BTreeSet<String>>, BTreeMap<String, BTreeSet<usize>>);

/// Drop-half ranking with patterns replayed from plain sets and candidates
/// scored by brute force, sharing nothing with the recommender but the
/// split.
fn ranking_oracle(
    m: &DependencyMatrix,
    plan: &cousage_core::evaluation::FoldPlan,
    ks: &[usize],
    seed: u64,
    schedule: &[f64],
) -> Result<RankingEval, String> {
    let names = names_of(m);
    let all_cols = cols_of(m);
    let mut per_fold: BTreeMap<usize, FoldReference> = BTreeMap::new();
    for fold in 0..plan.k {
        let training: BTreeSet<usize> = plan.training(fold).into_iter().collect();
        let mut used: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
        for (name, col) in names.iter().zip(&all_cols) {
            let t: BTreeSet<usize> = col.intersection(&training).copied().collect();
            if !t.is_empty() {
                used.insert(name.clone(), t);
            }
        }
        let (n, c): (Vec<String>, Vec<BTreeSet<usize>>) = used.clone().into_iter().unzip();
        let patterns = common::replay(&c, &n, schedule)
            .into_iter()
            .filter(|p| p.composite)
            .map(|p| p.members)
            .collect();
        per_fold.insert(fold, (patterns, used));
    }
    let folds: Vec<usize> = (0..plan.k).collect();
    eval_ranking_with(m, plan, &folds, ks, seed, |fold, held| {
        let (patterns, used) = &per_fold[&fold];
        let retained: BTreeSet<String> = held
            .retained
            .iter()
            .map(|l| l.as_str().to_owned())
            .collect();
        let mut pool: BTreeSet<&String> = BTreeSet::new();
        for p in patterns.iter().filter(|p| !p.is_disjoint(&retained)) {
            pool.extend(p.difference(&retained));
        }
        let mut ranked: Vec<(LibraryId, f64)> = pool
            .into_iter()
            .map(|cand| {
                let score = retained
                    .iter()
                    .filter_map(|r| used.get(r))
                    .map(|r| common::jaccard_f64(&used[cand], r))
                    .fold(0.0, f64::max);
                (lib(cand), score)
            })
            .collect();
        sort_ranked(&mut ranked);
        Ok(ranked.into_iter().map(|(l, _)| l).collect())
    })
    .map_err(|e| e.to_string())
}

fn recall_monotone(e: &RankingEval) -> bool {
    e.recall_at_k.windows(2).all(|w| w[0].1 <= w[1].1)
        && e.recall_at_k.iter().all(|&(_, r)| (0.0..=1.0).contains(&r))
}

fn recommendation(ctx: &mut Ctx) -> Outcome {
    let cfg = MiningConfig::default();
    let ks = [1, 3, 5, 10];
    let seed = 21;

    let m = planted_recommendation_corpus();
    let plan = make_folds(m.clients(), 10, seed).map_err(|e| e.to_string())?;
    let folds = mine_folds(&m, &cfg, &plan).map_err(|e| e.to_string())?;
    let got = eval_ranking(&plan, &m, &folds, &ks, seed, RecommendMode::HoldoutSafe)
        .map_err(|e| e.to_string())?;
    let want = ranking_oracle(&m, &plan, &ks, seed, &cfg.schedule())?;
    ensure!(got == want, "planted corpus: {got:?}\nreference: {want:?}");
    let recall5 = got
        .recall_at_k
        .iter()
        .find(|&&(k, _)| k == 5)
        .map(|&(_, r)| r)
        .unwrap();
    ensure!(recall5 >= 0.9, "recall@5 {recall5} below 0.9");
    ensure!(
        recall_monotone(&got),
        "recall not monotone in k: {:?}",
        got.recall_at_k
    );
    for f in folds.into_iter().flatten() {
        ctx.mined.push((f.training, f.mining));
    }

    // Hand enumeration: twelve clients use exactly {a1, a2}, which always
    // form a pattern, so the dropped one is ranked first. Eight clients use
    // b plus a library nobody else uses; b never clusters and the unique
    // library is absent from training, so nothing is recommended.
    let mut rows: Vec<(String, Vec<String>)> = (0..12)
        .map(|c| (format!("a{c}"), vec!["a1".into(), "a2".into()]))
        .collect();
    rows.extend((0..8).map(|c| (format!("b{c}"), vec!["b".into(), format!("u{c}")])));
    let small = DependencyMatrix::from_str_lists(
        rows.iter()
            .map(|(c, l)| (c.as_str(), l.iter().map(String::as_str).collect::<Vec<_>>())),
    )
    .unwrap();
    let plan = make_folds(small.clients(), 5, 3).map_err(|e| e.to_string())?;
    let folds = mine_folds(&small, &cfg, &plan).map_err(|e| e.to_string())?;
    let got = eval_ranking(&plan, &small, &folds, &ks, 3, RecommendMode::HoldoutSafe)
        .map_err(|e| e.to_string())?;
    let hand = RankingEval {
        recall_at_k: ks.iter().map(|&k| (k, 12.0 / 20.0)).collect(),
        mrr: 12.0 / 20.0,
        system_count: 20,
        skipped: 0,
    };
    ensure!(
        got == hand,
        "20-client fixture: {got:?}, hand enumeration {hand:?}"
    );
    let oracle = ranking_oracle(&small, &plan, &ks, 3, &cfg.schedule())?;
    ensure!(
        oracle == hand,
        "reference ranking disagrees with hand enumeration: {oracle:?}"
    );
    for f in folds.into_iter().flatten() {
        ctx.mined.push((f.training, f.mining));
    }
    Ok(format!(
        "planted recall@5 {recall5:.4}, MRR {:.4} over {} systems, equal to the reference; fixture MRR 0.6 as enumerated",
        want.mrr, want.system_count
    ))
}

/// Frequent itemsets by enumerating every subset of the libraries.
fn powerset_itemsets(
    rows: &[Vec<bool>],
    libs: usize,
    minsup: f64,
) -> BTreeSet<(Vec<String>, usize)> {
    let n = rows.len();
    let mut out = BTreeSet::new();
    for mask in 1u32..(1 << libs) {
        let items: Vec<usize> = (0..libs).filter(|&l| mask & (1 << l) != 0).collect();
        let count = rows.iter().filter(|r| items.iter().all(|&l| r[l])).count();
        if count > 0 && count as f64 >= minsup * n as f64 - 1e-9 {
            out.insert((items.iter().map(|&l| common::lib_name(l)).collect(), count));
        }
    }
    out
}

fn baseline(_: &mut Ctx) -> Outcome {
    let defaults = BaselineConfig::default();
    let mut r = rng(9);
    let mut rule_count = 0;
    let mut itemset_count = 0;
    for i in 0..200 {
        let libs = r.gen_range(1..=10);
        let clients = r.gen_range(1..=30);
        let density = r.gen_range(0.1..0.9);
        let rows = random_rows(&mut r, clients, libs, density);
        let m = common::matrix(&rows, libs);
        let minsup = if i % 2 == 0 {
            defaults.minsup
        } else {
            r.gen_range(0.05..0.6)
        };

        let frequent =
            mine_frequent_itemsets(&m, minsup).map_err(|e| format!("fixture {i}: {e}"))?;
        ensure!(
            downward_closed(&frequent),
            "fixture {i}: frequent itemsets not downward closed"
        );
        let got: BTreeSet<(Vec<String>, usize)> = frequent
            .iter()
            .map(|s| {
                (
                    s.items.iter().map(|l| l.as_str().to_owned()).collect(),
                    s.count,
                )
            })
            .collect();
        let want = powerset_itemsets(&rows, libs, minsup);
        ensure!(
            got == want,
            "fixture {i} (minsup {minsup}): itemsets differ from the powerset"
        );
        itemset_count += got.len();

        let frequent = mine_frequent_itemsets(&m, defaults.minsup).map_err(|e| e.to_string())?;
        let rules = generate_rules(&closed_itemsets(&frequent), defaults.minconf)
            .map_err(|e| e.to_string())?;
        let count_of = |items: &[LibraryId]| {
            let idx: Vec<usize> = items.iter().map(|l| m.library_index(l).unwrap()).collect();
            rows.iter().filter(|r| idx.iter().all(|&l| r[l])).count()
        };
        for rule in &rules {
            let both: Vec<LibraryId> = rule
                .antecedent
                .iter()
                .chain(&rule.consequent)
                .cloned()
                .collect();
            let (z, x) = (count_of(&both), count_of(&rule.antecedent));
            let support = z as f64 / clients as f64;
            let confidence = z as f64 / x as f64;
            ensure!(
                !rule.antecedent.is_empty()
                    && !rule.consequent.is_empty()
                    && rule.antecedent.iter().all(|l| !rule.consequent.contains(l)),
                "fixture {i}: malformed rule {rule:?}"
            );
            ensure!(
                (rule.support - support).abs() <= 1e-12
                    && (rule.confidence - confidence).abs() <= 1e-12,
                "fixture {i}: rule {rule:?} has support {support}, confidence {confidence}"
            );
            ensure!(
                support >= defaults.minsup - 1e-12 && confidence >= defaults.minconf - 1e-12,
                "fixture {i}: rule {rule:?} below the default thresholds"
            );
        }
        rule_count += rules.len();
    }
    Ok(format!("200 fixtures: {itemset_count} itemsets equal the powerset, {rule_count} rules meet minsup 0.002 and minconf 0.8"))
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_cousage"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(out.stdout)
}

fn determinism(_: &mut Ctx) -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let matrix = dir.path().join("corpus.json");
    fs::write(&matrix, matrix_to_json(&planted_recommendation_corpus()))
        .map_err(|e| e.to_string())?;
    let m = matrix.to_str().unwrap();

    let run = |tag: &str| -> Result<Vec<(String, Vec<u8>)>, String> {
        let base = dir.path().join(tag);
        let p = |name: &str| base.join(name).to_str().unwrap().to_owned();
        fs::create_dir_all(&base).map_err(|e| e.to_string())?;
        run_cli(&["mine", "--matrix", m, "--out", &p("result.json")])?;
        run_cli(&["cv", "--matrix", m, "--seed", "5", "--out-dir", &p("cv")])?;
        run_cli(&["sweep", "--matrix", m, "--out", &p("sweep.csv")])?;
        let rec = run_cli(&[
            "recommend",
            "--matrix",
            m,
            "--result",
            &p("result.json"),
            "--seed-libs",
            "org.group3:lib0,org.group3:lib1",
        ])?;
        let mut files = vec![("recommend.csv".to_owned(), rec)];
        for name in [
            "result.json",
            "sweep.csv",
            "cv/cv_runs.csv",
            "cv/cv_summary.csv",
            "cv/cv_patterns.csv",
            "cv/ranking.csv",
        ] {
            files.push((
                name.to_owned(),
                fs::read(base.join(name)).map_err(|e| format!("{name}: {e}"))?,
            ));
        }
        Ok(files)
    };
    let a = run("first")?;
    let b = run("second")?;
    for ((name, x), (_, y)) in a.iter().zip(&b) {
        ensure!(x == y, "{name} differs between runs");
        ensure!(!x.is_empty(), "{name} is empty");
    }
    Ok(format!(
        "mine, cv, sweep and recommend: {} outputs identical across two runs",
        a.len()
    ))
}

fn composites<'a>(p: &'a Point, out: &mut Vec<&'a Point>) {
    if !p.is_atomic() {
        out.push(p);
        for c in p.children() {
            composites(c, out);
        }
    }
}

fn layer_zero_purity(ctx: &mut Ctx) -> Outcome {
    // corpora with duplicated columns so exact layers are plentiful
    let mut r = rng(10);
    for _ in 0..200 {
        let (clients, libs) = (r.gen_range(2..=15), r.gen_range(2..=10));
        let mut rows = random_rows(&mut r, clients, libs, 0.4);
        let copies = r.gen_range(1..=4);
        for _ in 0..copies {
            let src = r.gen_range(0..libs);
            for row in &mut rows {
                let v = row[src];
                row.push(v);
            }
        }
        let m = common::matrix(&rows, libs + copies);
        let mined = epsilon_dbscan(&m, &MiningConfig::default()).map_err(|e| e.to_string())?;
        ctx.mined.push((m, mined));
    }

    let mut checked = 0;
    for (i, (m, result)) in ctx.mined.iter().enumerate() {
        let rows = rows_of(m);
        for pattern in &result.patterns {
            let mut nodes = Vec::new();
            composites(pattern.root(), &mut nodes);
            for node in nodes.into_iter().filter(|n| n.formed_at() == Some(0.0)) {
                let leaves: BTreeSet<usize> = node
                    .leaves()
                    .iter()
                    .map(|l| m.library_index(l).unwrap())
                    .collect();
                let first = m.usage(*leaves.iter().next().unwrap());
                ensure!(
                    leaves.iter().all(|&l| m.usage(l) == first),
                    "result {i}: layer-0 members {:?} differ in usage",
                    node.leaves()
                );
                let idx: Vec<usize> = leaves.iter().copied().collect();
                ensure!(
                    puc_indexed(&idx, m, None) == Some(1.0)
                        && common::puc_bruteforce(&leaves, &rows, None) == Some(1.0),
                    "result {i}: layer-0 composite {:?} has PUC below 1",
                    node.leaves()
                );
                checked += 1;
            }
        }
    }
    ensure!(checked > 0, "no layer-0 composites were produced");
    Ok(format!(
        "{checked} layer-0 composites over {} mining results, all with identical usage and PUC 1",
        ctx.mined.len()
    ))
}
