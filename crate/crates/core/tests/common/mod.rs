#![allow(dead_code)]

pub mod oracles;
pub mod stub;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use heartprompt::data::UCI_SITE_FILES;
use heartprompt::experiment::{ExperimentConfig, LlmChoice};
use heartprompt::llm::MockSpec;
use heartprompt::rng::{rng_from, Rng};
use rand::Rng as _;

/// Rows per site file, matching the real collection.
pub const SITE_ROWS: [usize; 4] = [303, 294, 123, 200];

fn normal(rng: &mut Rng, mean: f64, sd: f64) -> f64 {
    let u1: f64 = rng.random_range(f64::EPSILON..1.0);
    let u2: f64 = rng.random();
    mean + sd * (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn pick(rng: &mut Rng, weights: &[(f64, f64)]) -> f64 {
    let total: f64 = weights.iter().map(|w| w.1).sum();
    let mut u = rng.random_range(0.0..total);
    for &(v, w) in weights {
        if u < w {
            return v;
        }
        u -= w;
    }
    weights.last().unwrap().0
}

/// One synthetic patient: 13 attribute values (missing as `None`) and a 0-4 diagnosis.
fn patient(rng: &mut Rng, site: usize) -> (Vec<Option<f64>>, u8) {
    let sick = rng.random_bool(0.55);
    let s = f64::from(u8::from(sick));
    let age = normal(rng, 51.0 + 5.0 * s, 8.5).clamp(28.0, 77.0).round();
    let sex = f64::from(u8::from(rng.random_bool(if sick { 0.9 } else { 0.67 })));
    let cp = if sick { pick(rng, &[(1.0, 0.05), (2.0, 0.07), (3.0, 0.15), (4.0, 0.73)]) } else {
        pick(rng, &[(1.0, 0.08), (2.0, 0.35), (3.0, 0.35), (4.0, 0.22)])
    };
    let trestbps = normal(rng, 130.0 + 4.0 * s, 17.0).clamp(80.0, 200.0).round();
    let chol = normal(rng, 230.0 + 10.0 * s, 50.0).clamp(85.0, 600.0).round();
    let fbs = f64::from(u8::from(rng.random_bool(0.12 + 0.08 * s)));
    let restecg = pick(rng, &[(0.0, 0.6), (1.0, 0.2), (2.0, 0.2)]);
    let thalach = normal(rng, 150.0 - 22.0 * s, 20.0).clamp(60.0, 202.0).round();
    let exang = f64::from(u8::from(rng.random_bool(if sick { 0.6 } else { 0.14 })));
    let oldpeak = (normal(rng, 0.4 + 1.0 * s, 0.8).max(0.0) * 10.0).round() / 10.0;
    let slope = if sick { pick(rng, &[(1.0, 0.2), (2.0, 0.68), (3.0, 0.12)]) } else {
        pick(rng, &[(1.0, 0.65), (2.0, 0.3), (3.0, 0.05)])
    };
    let ca = if sick { pick(rng, &[(0.0, 0.35), (1.0, 0.3), (2.0, 0.2), (3.0, 0.15)]) } else {
        pick(rng, &[(0.0, 0.8), (1.0, 0.13), (2.0, 0.05), (3.0, 0.02)])
    };
    let thal = if sick { pick(rng, &[(3.0, 0.25), (6.0, 0.1), (7.0, 0.65)]) } else {
        pick(rng, &[(3.0, 0.8), (6.0, 0.05), (7.0, 0.15)])
    };
    let mut cells =
        vec![age, sex, cp, trestbps, chol, fbs, restecg, thalach, exang, oldpeak, slope, ca, thal].into_iter().map(Some).collect::<Vec<_>>();
    // Sites other than the first leave many ca/thal/slope cells blank.
    let drop = if site == 0 { [0.01, 0.01, 0.01] } else { [0.85, 0.65, 0.45] };
    for (col, p) in [11, 12, 10].into_iter().zip(drop) {
        if rng.random_bool(p) {
            cells[col] = None;
        }
    }
    for col in [3, 4, 5, 7] {
        if rng.random_bool(0.03) {
            cells[col] = None;
        }
    }
    let target = if sick { rng.random_range(1..=4) } else { 0 };
    (cells, target)
}

fn render(cells: &[Option<f64>], target: u8) -> String {
    let mut line = String::new();
    for c in cells {
        match c {
            Some(v) => write!(line, "{v:?},").unwrap(),
            None => line.push_str("?,"),
        }
    }
    write!(line, "{target}").unwrap();
    line
}

/// Writes four UCI-style site files of synthetic heart-disease-like data
/// (920 rows, header-less, `?` for missing cells) into `dir`.
pub fn write_synthetic_uci(dir: &Path, seed: u64) -> PathBuf {
    fs::create_dir_all(dir).unwrap();
    let mut rng = rng_from(seed, &[0xDA7A]);
    for (site, (file, rows)) in UCI_SITE_FILES.iter().zip(SITE_ROWS).enumerate() {
        let mut text = String::new();
        for _ in 0..rows {
            let (cells, target) = patient(&mut rng, site);
            text.push_str(&render(&cells, target));
            text.push('\n');
        }
        fs::write(dir.join(file), text).unwrap();
    }
    dir.to_path_buf()
}

/// Small, fast configuration over synthetic data with an oracle mock.
pub fn mock_config(root: &Path, seed: u64) -> ExperimentConfig {
    let data = write_synthetic_uci(&root.join("data"), seed);
    ExperimentConfig {
        data_path: data,
        seed,
        n_iter: 2,
        folds: 3,
        output_dir: root.join("out"),
        llm: LlmChoice::Mock { mock: MockSpec::Oracle, model_name: "mock".into(), max_in_flight: 8 },
        ..ExperimentConfig::default()
    }
}
