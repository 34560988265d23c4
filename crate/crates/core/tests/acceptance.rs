//! One PASS/FAIL line per acceptance criterion.
//!
//! Criteria that need the real UCI heart-disease files read them from
//! `$HEART_DISEASE_DATA` or `<workspace>/data`. When neither exists those
//! criteria print FAIL with the reason and do not abort the run; every
//! other criterion must pass.

mod common;

use std::fmt::Display;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use common::oracles::{lr_gradient_check, naive_metrics, random_raw};
use common::stub::Stub;
use common::{mock_config, write_synthetic_uci};
use heartprompt::data::{binarize_target, knn_impute, load_path, stats, FeatureSchema};
use heartprompt::dk::{fixtures, render_dk, DkKind, DkOptions};
use heartprompt::experiment::{
    gen_dk, prepare_data, run_ml_baselines, run_prompt_grid, ExperimentConfig, LlmChoice, ReportKind, Runner,
    RunOptions,
};
use heartprompt::llm::{block_on, classify_batch, BatchOptions, Gateway, LlmConfig, MockPolicy, MockSpec};
use heartprompt::metrics::{classification_metrics, confusion, cost_metrics, ConfusionMatrix, CostWeights};
use heartprompt::models::{Family, ImportanceRanking};
use heartprompt::prompt::{assemble_prompt, Example, PromptSpec};
use heartprompt::rng::rng_from;
use heartprompt::DomainKnowledge;
use rand::Rng as _;

const DATASET_RUNTIME: Duration = Duration::from_secs(5);
const IMPUTATION_RUNTIME: Duration = Duration::from_secs(30);
const SEARCH_RUNTIME: Duration = Duration::from_secs(600);
const GRID_RUNTIME: Duration = Duration::from_secs(60);
const GRADIENT_RUNTIME: Duration = Duration::from_secs(5);
const METRIC_RUNTIME: Duration = Duration::from_secs(1);
const MIN_F1: f64 = 0.82;
const MIN_ACCURACY: f64 = 0.80;
const CSA_TOLERANCE: f64 = 1e-3;
const GRADIENT_TOLERANCE: f64 = 1e-5;

enum Outcome {
    Pass(String),
    Fail(String),
    /// Needs inputs this environment does not have.
    Unavailable(String),
}

fn verdict(ok: bool, detail: impl Display) -> Outcome {
    if ok {
        Outcome::Pass(detail.to_string())
    } else {
        Outcome::Fail(detail.to_string())
    }
}

fn real_data() -> Option<PathBuf> {
    let workspace = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data");
    std::env::var_os("HEART_DISEASE_DATA").map(PathBuf::from).into_iter().chain([workspace]).find(|p| p.exists())
}

const NO_DATA: &str = "UCI heart-disease files not found (set HEART_DISEASE_DATA or add <workspace>/data)";

fn criterion_1() -> Outcome {
    let Some(path) = real_data() else { return Outcome::Unavailable(NO_DATA.into()) };
    let start = Instant::now();
    let raw = match load_path(&path, &FeatureSchema::heart_disease()).and_then(binarize_target) {
        Ok(r) => r,
        Err(e) => return Outcome::Fail(format!("load failed: {e}")),
    };
    let s = stats(&raw);
    let elapsed = start.elapsed();
    verdict(
        s.n_total == 920
            && s.n_with_missing == 621
            && (0.77..=0.80).contains(&s.male_fraction)
            && elapsed < DATASET_RUNTIME,
        format!(
            "n_total={} n_with_missing={} male_fraction={:.4} in {elapsed:.2?}",
            s.n_total, s.n_with_missing, s.male_fraction
        ),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut failures = 0;
    for case in 0..200u64 {
        let mut rng = rng_from(0xACCE, &[case]);
        let k = rng.random_range(1..=5);
        let raw = random_raw(&mut rng, k);
        let ok = knn_impute(&raw, k).is_ok_and(|ds| {
            raw.rows.iter().zip(&ds.matrix).all(|(row, filled)| {
                row.cells.iter().zip(filled).all(|(c, v)| v.is_finite() && c.is_none_or(|o| o.to_bits() == v.to_bits()))
            })
        });
        failures += usize::from(!ok);
    }
    let dir = tempfile::tempdir().unwrap();
    let source = real_data().unwrap_or_else(|| write_synthetic_uci(dir.path(), 2));
    let full = load_path(&source, &FeatureSchema::heart_disease())
        .and_then(binarize_target)
        .and_then(|raw| knn_impute(&raw, 5).map(|ds| (raw.missing_cells(), ds)));
    let elapsed = start.elapsed();
    match full {
        Ok((before, ds)) => verdict(
            failures == 0 && ds.matrix.iter().flatten().all(|v| v.is_finite()) && elapsed < IMPUTATION_RUNTIME,
            format!(
                "{failures}/200 random datasets failed; {} rows with {before} gaps imputed to 0 missing cells in {elapsed:.2?}",
                ds.len()
            ),
        ),
        Err(e) => Outcome::Fail(format!("imputing the full table failed: {e}")),
    }
}

fn criterion_3() -> Outcome {
    let Some(path) = real_data() else { return Outcome::Unavailable(NO_DATA.into()) };
    let cfg = ExperimentConfig { data_path: path, ..ExperimentConfig::default() };
    let start = Instant::now();
    let result = prepare_data(&cfg).and_then(|data| run_ml_baselines(&cfg, &data).map(|r| (data, r)));
    let elapsed = start.elapsed();
    let (data, (ml, _)) = match result {
        Ok(r) => r,
        Err(e) => return Outcome::Fail(format!("pipeline failed: {e}")),
    };
    let pick = |f: Family| ml.rows.iter().find(|r| r.family == Some(f)).expect("family row").metrics;
    let (rf, gbt) = (pick(Family::Rf), pick(Family::Gbt));
    let ok_model = |m: heartprompt::MetricsRow| m.f1 >= MIN_F1 && m.accuracy >= MIN_ACCURACY;
    verdict(
        data.test_raw.len() == 184 && ok_model(rf) && ok_model(gbt) && elapsed < SEARCH_RUNTIME,
        format!(
            "RF F1={:.4} Acc={:.4}; GBT F1={:.4} Acc={:.4}; test={} rows; six-model search in {elapsed:.1?}",
            rf.f1,
            rf.accuracy,
            gbt.f1,
            gbt.accuracy,
            data.test_raw.len()
        ),
    )
}

fn criterion_4() -> Outcome {
    let expected = [
        include_str!("fixtures/dk1.txt"),
        include_str!("fixtures/dk2.txt"),
        include_str!("fixtures/dk3.txt"),
        include_str!("fixtures/dk4.txt"),
        include_str!("fixtures/dk5.txt"),
        include_str!("fixtures/dk6.txt"),
    ];
    let schema = FeatureSchema::heart_disease();
    let sources = [(&fixtures::RF_ORDER, Family::Rf), (&fixtures::LR_ORDER, Family::Lr), (&fixtures::XGB_ORDER, Family::Gbt)];
    let mut mismatched = Vec::new();
    for (i, (order, family)) in sources.into_iter().enumerate() {
        let ranking = ImportanceRanking::from_order(&schema, order, family).unwrap();
        for (j, kind) in [DkKind::Mlfi, DkKind::MlfiOrd].into_iter().enumerate() {
            let text = render_dk(&ranking, kind, &schema, &DkOptions::default()).unwrap().text;
            if text != expected[2 * i + j] {
                mismatched.push(format!("dk{}", 2 * i + j + 1));
            }
        }
    }
    verdict(mismatched.is_empty(), format!("dk1-dk6 byte-exact; mismatches: {mismatched:?}"))
}

fn criterion_5() -> Outcome {
    let schema = FeatureSchema::heart_disease();
    let ranking = ImportanceRanking::from_order(&schema, &fixtures::RF_ORDER, Family::Rf).unwrap();
    let dk1 = render_dk(&ranking, DkKind::Mlfi, &schema, &DkOptions::default()).unwrap();
    let examples = [
        ([57.0, 1.0, 2.0, 140.0, 265.0, 0.0, 1.0, 145.0, 1.0, 1.0, 2.0, 0.2, 5.8], 1),
        ([48.0, 1.0, 2.0, 130.0, 245.0, 0.0, 0.0, 160.0, 0.0, 0.0, 1.4, 0.2, 4.6], 0),
        ([44.0, 1.0, 4.0, 112.0, 290.0, 0.0, 2.0, 153.0, 0.0, 0.0, 1.0, 1.0, 3.0], 1),
    ]
    .map(|(x, label)| Example { features: x.to_vec(), label });
    let query = [46.0, 1.0, 3.0, 150.0, 163.0, 0.2, 0.0, 116.0, 0.0, 0.0, 2.2, 0.4, 6.2];
    let spec = PromptSpec { n_ex: 3, dk: dk1, seed: 0, paper_faithful: true };
    let text = assemble_prompt(&schema, &spec, &examples, &query).unwrap().text();
    let golden = include_str!("fixtures/reference_prompt_dk1.txt");
    verdict(text == golden, format!("verbatim-mode prompt, {} bytes vs golden {} bytes", text.len(), golden.len()))
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let w = CostWeights::default();
    let cm = ConfusionMatrix::new(91, 65, 15, 13);
    let c = classification_metrics(&cm);
    let k = cost_metrics(&cm, &w);
    let round4 = |v: f64| (v * 1e4).round() / 1e4;
    let classification_ok = [c.precision, c.recall, c.f1, c.accuracy].map(round4) == [0.8585, 0.8750, 0.8667, 0.8478];
    let cost_ok = (k.fp_cost - 3.0).abs() < 1e-12
        && (k.fn_cost - 10.4).abs() < 1e-12
        && round4(k.cost_sensitive_accuracy) == 0.9209;
    // Confusion matrices recovered from published rows: fp = FP cost / 0.2,
    // fn = FN cost / 0.8, tp from recall, tn = 184 - tp - fp - fn.
    let published = [
        ("RF", ConfusionMatrix::new(91, 65, 15, 13), 0.9208),
        ("XGB", ConfusionMatrix::new(91, 66, 14, 13), 0.9224),
        ("prompt-3", ConfusionMatrix::new(103, 18, 62, 1), 0.9016),
    ];
    let mut gaps = Vec::new();
    for (name, cm, reported) in published {
        let csa = cost_metrics(&cm, &w).cost_sensitive_accuracy;
        gaps.push(format!("{name} {csa:.4}/{reported}"));
        if (csa - reported).abs() > CSA_TOLERANCE {
            return Outcome::Fail(format!("{name}: csa {csa:.5} vs {reported}"));
        }
    }
    let elapsed = start.elapsed();
    verdict(
        classification_ok && cost_ok && elapsed < METRIC_RUNTIME,
        format!(
            "P/R/F1/Acc=({:.4}, {:.4}, {:.4}, {:.4}) costs=({:.1}, {:.1}, {:.4}); csa {}",
            c.precision,
            c.recall,
            c.f1,
            c.accuracy,
            k.fp_cost,
            k.fn_cost,
            k.cost_sensitive_accuracy,
            gaps.join(", ")
        ),
    )
}

fn criterion_7() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut notes = Vec::new();
    let mut ok = true;

    // (a) oracle mock over the full grid
    let cfg = mock_config(&dir.path().join("a"), 31);
    let table = match Runner::new(cfg, false).all() {
        Ok(t) => t,
        Err(e) => return Outcome::Fail(format!("oracle run failed: {e}")),
    };
    let prompt_rows: Vec<_> = table.rows_of(ReportKind::Prompt).chain(table.rows_of(ReportKind::PromptAverage)).collect();
    let perfect = prompt_rows.iter().all(|r| r.metrics.f1 == 1.0 && r.metrics.cost_sensitive_accuracy == 1.0);
    ok &= perfect && prompt_rows.len() == 40;
    notes.push(format!("(a) {} oracle rows perfect={perfect}", prompt_rows.len()));

    // (b) scripted replies against a hand-counted confusion matrix
    let schema = FeatureSchema::heart_disease();
    let spec = PromptSpec { n_ex: 0, dk: DomainKnowledge::none(), seed: 0, paper_faithful: false };
    let prompts: Vec<_> =
        (0..8).map(|i| assemble_prompt(&schema, &spec, &[], &[40.0 + f64::from(i); 13]).unwrap()).collect();
    let replies = ["1", "The answer is 0.", "0", "1", "I would say 1", "0", "Output: 1", "0"];
    let truth = [1, 1, 0, 0, 1, 1, 0, 0];
    // verdicts 1 0 0 1 1 0 1 0 give rows: tp, fn, tn, fp, tp, fn, fp, tn
    let expected = ConfusionMatrix::new(2, 2, 2, 2);
    let gw = Gateway::mock(MockPolicy::scripted(replies), "script", None);
    let opts = BatchOptions { max_in_flight: 1, ..BatchOptions::default() };
    let got = block_on(classify_batch(&gw, &prompts, &opts)).unwrap();
    let cm = confusion(&got.labels(), &truth).unwrap();
    let hand = [0.5, 0.5, 0.5, 0.5, 0.4, 1.6, 4.0 / 6.0];
    let metrics_ok = naive_metrics(&got.labels(), &truth, &CostWeights::default())
        .iter()
        .zip(hand)
        .all(|(a, b)| (a - b).abs() < 1e-12);
    ok &= cm == expected && metrics_ok;
    notes.push(format!("(b) scripted cm={cm:?} matches={}", cm == expected && metrics_ok));

    // (c) two full mock grids with the same seed
    let mut cfg = mock_config(&dir.path().join("c"), 77);
    cfg.llm = LlmChoice::Mock {
        mock: MockSpec::Rule { feature: "cp".into(), threshold: 4.0 },
        model_name: "rule".into(),
        max_in_flight: 8,
    };
    let runner = Runner::new(cfg.clone(), false);
    let setup = runner.prepare().and_then(|_| runner.train()).and_then(|_| runner.dk());
    if let Err(e) = setup {
        return Outcome::Fail(format!("grid setup failed: {e}"));
    }
    let mut reports = Vec::new();
    let mut slowest = Duration::ZERO;
    let mut cells = 0;
    for _ in 0..2 {
        let start = Instant::now();
        let grid = runner.grid().unwrap();
        slowest = slowest.max(start.elapsed());
        cells = grid.cells.iter().map(|c| c.records.len()).sum::<usize>();
        runner.report().unwrap();
        reports.push(std::fs::read(cfg.output_dir.join("report.csv")).unwrap());
    }
    let same = reports[0] == reports[1];
    ok &= same && cells == 7 * 5 * 184 && slowest < GRID_RUNTIME;
    notes.push(format!("(c) {cells} classifications, identical reports={same}, slowest grid {slowest:.2?}"));

    // (d) warm cache against a stub server
    let stub = Stub::start();
    let data = prepare_data(&cfg).unwrap();
    let dk = {
        let arts: Vec<_> = Family::ALL
            .iter()
            .map(|f| heartprompt::models::ModelArtifact::load(runner.paths.model(*f)).unwrap())
            .collect();
        gen_dk(&cfg, &data, &arts).unwrap()
    };
    let mut http_cfg = cfg.clone();
    http_cfg.n_ex_grid = vec![0, 2];
    http_cfg.cache_path = Some(dir.path().join("d/cache.jsonl"));
    http_cfg.llm = LlmChoice::Http(LlmConfig { base_url: stub.base_url(), backoff_base_ms: 1, ..LlmConfig::default() });
    let live = RunOptions { live: true, export_prompts: None };
    let (cold, err) = run_prompt_grid(&http_cfg, &data, &dk, &live).unwrap();
    let cold_calls = stub.calls();
    let (warm, err2) = run_prompt_grid(&http_cfg, &data, &dk, &live).unwrap();
    let warm_calls = stub.calls() - cold_calls;
    let same_cells = cold.cells.len() == warm.cells.len()
        && cold.cells.iter().zip(&warm.cells).all(|(a, b)| a.confusion == b.confusion);
    ok &= err.is_none() && err2.is_none() && warm_calls == 0 && cold_calls == 2 * 7 * 184 && same_cells;
    notes.push(format!("(d) cold run {cold_calls} calls, warm rerun {warm_calls} calls"));

    verdict(ok, notes.join("; "))
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let worst = lr_gradient_check(50, 8);
    let elapsed = start.elapsed();
    verdict(
        worst <= GRADIENT_TOLERANCE && elapsed < GRADIENT_RUNTIME,
        format!("max |analytic - central difference| = {worst:.3e} over 50 points in {elapsed:.2?}"),
    )
}

fn criterion_9() -> Outcome {
    let mut rng = rng_from(0x0AC1E, &[]);
    let w = CostWeights::default();
    let mut mismatches = 0;
    for _ in 0..200 {
        let n = rng.random_range(0..=200);
        let truth: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(0.5))).collect();
        let preds: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(0.5))).collect();
        let cm = confusion(&preds, &truth).unwrap();
        let c = classification_metrics(&cm);
        let k = cost_metrics(&cm, &w);
        let got = [c.precision, c.recall, c.f1, c.accuracy, k.fp_cost, k.fn_cost, k.cost_sensitive_accuracy];
        mismatches += usize::from(got != naive_metrics(&preds, &truth, &w));
    }
    verdict(mismatches == 0, format!("{mismatches}/200 pairs differ from the naive recount"))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("dataset facts", criterion_1),
        ("imputation", criterion_2),
        ("classical ML reproduction", criterion_3),
        ("DK golden texts", criterion_4),
        ("prompt golden file", criterion_5),
        ("metric identities", criterion_6),
        ("mock LLM properties", criterion_7),
        ("LR gradient check", criterion_8),
        ("metric brute-force oracle", criterion_9),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let n = i + 1;
        match check() {
            Outcome::Pass(detail) => println!("PASS {n} {name}: {detail}"),
            Outcome::Fail(detail) => {
                println!("FAIL {n} {name}: {detail}");
                failed.push(n);
            }
            Outcome::Unavailable(detail) => println!("FAIL {n} {name}: not evaluated, {detail}"),
        }
    }
    assert!(failed.is_empty(), "criteria {failed:?} failed");
}
