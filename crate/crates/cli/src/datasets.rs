//! Bundled desk-scale datasets.
//!
//! Synthetic stand-ins for the usual public benchmark tables, generated
//! deterministically from fixed seeds so the CSVs shipped under `data/`
//! can be regenerated and diffed at any time. Scales are kept small enough
//! for exact Shapley enumeration: the image-style table is a 500-row,
//! 36-feature grid meant to be explained through 9 contiguous feature
//! groups.

use std::fmt::Write as _;
use std::path::Path;

use shapbench_core::rng::StreamRng;

fn format_value(v: f64) -> String {
    // Fixed decimals keep the bundled files byte-stable and diff-friendly.
    format!("{v:.6}")
}

fn render_csv(header: &[&str], rows: &[Vec<f64>], class_col: Option<usize>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", header.join(","));
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(j, v)| {
                if Some(j) == class_col {
                    format!("{}", *v as i64)
                } else {
                    format_value(*v)
                }
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

/// Regression table in the shape of a housing dataset: 600 rows, 9
/// correlated features, linear signal plus mild interaction and noise.
pub fn california_style() -> String {
    let mut rng = StreamRng::derived(2024, "california", 0);
    let header = [
        "medinc", "houseage", "averooms", "avebedrms", "population", "aveoccup", "latitude",
        "longitude", "coastdist", "medval",
    ];
    let coeffs = [0.9, 0.1, 0.3, -0.2, -0.15, -0.3, -0.7, -0.65, -0.25];
    let mut rows = Vec::with_capacity(600);
    for _ in 0..600 {
        let geo = rng.standard_normal();
        let wealth = rng.standard_normal();
        let mut x = [0.0; 9];
        x[0] = wealth + 0.3 * rng.standard_normal();
        x[1] = rng.standard_normal();
        x[2] = 0.6 * wealth + 0.8 * rng.standard_normal();
        x[3] = 0.5 * x[2] + 0.6 * rng.standard_normal();
        x[4] = rng.standard_normal();
        x[5] = 0.4 * x[4] + 0.8 * rng.standard_normal();
        x[6] = geo + 0.2 * rng.standard_normal();
        x[7] = -0.8 * geo + 0.5 * rng.standard_normal();
        x[8] = 0.7 * geo.abs() + 0.4 * rng.standard_normal();
        let signal: f64 = x.iter().zip(&coeffs).map(|(v, c)| v * c).sum();
        let y = signal + 0.25 * x[0] * x[6] + 0.4 * rng.standard_normal();
        let mut row = x.to_vec();
        row.push(y);
        rows.push(row);
    }
    render_csv(&header, &rows, None)
}

/// Regression table in the shape of a clinical progression dataset:
/// 400 rows, 8 correlated features, strong linear signal. The mean-
/// imputation degradation trend is monotone on this table once averaged
/// over repetitions.
pub fn diabetes_style() -> String {
    let mut rng = StreamRng::derived(2024, "diabetes", 0);
    let header = ["age", "sex", "bmi", "bp", "s1", "s2", "s3", "s4", "y"];
    let coeffs = [0.3, 0.15, 1.0, 0.7, -0.5, 0.45, -0.35, 0.55];
    let mut rows = Vec::with_capacity(400);
    for _ in 0..400 {
        let health = rng.standard_normal();
        let mut x = [0.0; 8];
        x[0] = rng.standard_normal();
        x[1] = if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
        x[2] = 0.8 * health + 0.6 * rng.standard_normal();
        x[3] = 0.6 * health + 0.7 * rng.standard_normal();
        x[4] = 0.5 * health + 0.8 * rng.standard_normal();
        x[5] = 0.6 * x[4] + 0.6 * rng.standard_normal();
        x[6] = -0.4 * health + 0.8 * rng.standard_normal();
        x[7] = 0.5 * x[2] + 0.7 * rng.standard_normal();
        let signal: f64 = x.iter().zip(&coeffs).map(|(v, c)| v * c).sum();
        let y = signal + 0.35 * rng.standard_normal();
        let mut row = x.to_vec();
        row.push(y);
        rows.push(row);
    }
    render_csv(&header, &rows, None)
}

/// Classification table in the shape of a forensic glass dataset:
/// 214 rows, 9 features, 6 classes with the usual imbalanced sizes.
pub fn glass_style() -> String {
    let mut rng = StreamRng::derived(2024, "glass", 0);
    let header = ["ri", "na", "mg", "al", "si", "k", "ca", "ba", "fe", "class"];
    let class_sizes = [70usize, 76, 17, 13, 9, 29];
    // Deterministic class-mean layout, spread enough to be separable.
    let mut class_means = Vec::new();
    for c in 0..6 {
        let mut mu = [0.0; 9];
        for (j, entry) in mu.iter_mut().enumerate() {
            *entry = 1.6 * ((c * 9 + j) as f64 * 0.7).sin() + 0.5 * rng.standard_normal();
        }
        class_means.push(mu);
    }
    let mut rows = Vec::with_capacity(214);
    for (c, &size) in class_sizes.iter().enumerate() {
        for _ in 0..size {
            let mut row: Vec<f64> = (0..9)
                .map(|j| class_means[c][j] + 0.8 * rng.standard_normal())
                .collect();
            row.push(c as f64);
            rows.push(row);
        }
    }
    render_csv(&header, &rows, Some(9))
}

/// Classification table in the shape of a down-sampled digit-image set:
/// 500 rows, 36 pixel features on a 6x6 grid, 10 classes. Each class is a
/// smooth template pattern plus noise; exact Shapley explanation uses 9
/// contiguous groups of 4 pixels.
pub fn mnist_style() -> String {
    let mut rng = StreamRng::derived(2024, "mnist", 0);
    let mut header: Vec<String> = (0..36).map(|j| format!("px{j:02}")).collect();
    header.push("digit".to_string());
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();

    // Template intensity for digit d at pixel (r, c): a class-specific
    // low-frequency pattern in [0, 1].
    let template = |d: usize, r: usize, c: usize| -> f64 {
        let (rf, cf) = (r as f64 / 5.0, c as f64 / 5.0);
        let a = ((d as f64 + 1.0) * (rf * 2.3 + 0.4)).sin();
        let b = ((d as f64 * 0.7 + 0.3) * (cf * 2.9 + 0.8)).cos();
        (0.5 + 0.5 * a * b).clamp(0.0, 1.0)
    };

    let mut rows = Vec::with_capacity(500);
    for i in 0..500 {
        let digit = i % 10;
        let mut row: Vec<f64> = Vec::with_capacity(37);
        for r in 0..6 {
            for c in 0..6 {
                let v = template(digit, r, c) + 0.12 * rng.standard_normal();
                row.push(v.clamp(0.0, 1.0));
            }
        }
        row.push(digit as f64);
        rows.push(row);
    }
    render_csv(&header_refs, &rows, Some(36))
}

/// Write all four bundled tables into `dir`.
pub fn write_bundled(dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("california_style.csv"), california_style())?;
    std::fs::write(dir.join("diabetes_style.csv"), diabetes_style())?;
    std::fs::write(dir.join("glass_style.csv"), glass_style())?;
    std::fs::write(dir.join("mnist_style.csv"), mnist_style())?;
    Ok(())
}
