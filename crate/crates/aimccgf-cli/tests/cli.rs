use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use aimccgf::ed::EdOracle;
use aimccgf::model::{reference_state, AimParams, Filling};
use sha2::{Digest, Sha256};
use tempfile::TempDir;

const TWO_SITE: &str =
    "version = 1\n[model]\ninteraction = 8.0\nlevels = [4.0, 0.0]\nhybridization = [1.0]\n";

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aimccgf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_in(out: &Path, command: &str, config: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        command,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    run(&args)
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

/// `# key = value` comments, header and data rows of a stamped CSV file.
type StampedCsv = (Vec<(String, String)>, Vec<String>, Vec<Vec<String>>);

fn csv_rows(path: &Path) -> StampedCsv {
    let text = std::fs::read_to_string(path).unwrap();
    let comments = text
        .lines()
        .filter_map(|l| l.strip_prefix("# "))
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .unwrap()
        .iter()
        .map(str::to_string)
        .collect();
    let rows = reader
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect();
    (comments, header, rows)
}

fn comment<'a>(comments: &'a [(String, String)], key: &str) -> &'a str {
    &comments.iter().find(|(k, _)| k == key).unwrap().1
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[test]
fn validate_on_two_site_config_passes() {
    let out = TempDir::new().unwrap();
    let output = run_in(
        out.path(),
        "validate",
        &shipped("two_site.toml"),
        &["--format", "json"],
    );
    assert_eq!(code(&output), 0, "{}", stderr(&output));
    let report = json(&out.path().join("validate.json"));
    assert!(report["max_deviation"].as_f64().unwrap() <= 1e-6);
    assert_eq!(report["passed"], true);
}

#[test]
fn resources_report_contains_upsilon_and_config_hash() {
    let out = TempDir::new().unwrap();
    let config = shipped("two_site.toml");
    let output = run_in(out.path(), "resources", &config, &[]);
    assert_eq!(code(&output), 0, "{}", stderr(&output));
    let report = json(&out.path().join("resources.json"));
    assert!((report["upsilon"].as_f64().unwrap() - 10.0 / 3.0).abs() < 1e-14);
    assert_eq!(
        report["config_sha256"],
        sha256_hex(&std::fs::read(&config).unwrap())
    );
    let methods: Vec<&str> = report["methods"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m["method"].as_str().unwrap())
        .collect();
    assert_eq!(
        methods,
        [
            "trotter-givens",
            "taylor",
            "qubitization",
            "hadamard-per-term",
            "lcu-single-circuit"
        ]
    );
}

#[test]
fn greens_csv_has_documented_columns_and_full_precision() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, "two.toml", TWO_SITE);
    let output = run_in(dir.path(), "greens", &config, &["--seed", "11"]);
    assert_eq!(code(&output), 0, "{}", stderr(&output));
    let (comments, header, rows) = csv_rows(&dir.path().join("greens.csv"));
    assert_eq!(
        header,
        [
            "t",
            "ReG",
            "ImG",
            "ReG<",
            "ImG<",
            "ReG>",
            "ImG>",
            "stderr_Re",
            "stderr_Im"
        ]
    );
    assert_eq!(comment(&comments, "seed"), "11");
    assert_eq!(
        comment(&comments, "config_sha256"),
        sha256_hex(TWO_SITE.as_bytes())
    );
    assert_eq!(rows.len(), 201);
    let g0: f64 = rows[0][1].parse().unwrap();
    assert!((g0 - 1.0).abs() < 1e-10);
    for cell in &rows[7][1..] {
        let mantissa = cell
            .split('e')
            .next()
            .unwrap()
            .trim_start_matches('-')
            .replace('.', "");
        assert_eq!(mantissa.len(), 17, "{cell}");
    }
}

#[test]
fn zero_shots_falls_back_to_exact_mode() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, "two.toml", TWO_SITE);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(
        code(&run_in(&a, "greens", &config, &["--mode", "exact"])),
        0
    );
    assert_eq!(
        code(&run_in(
            &b,
            "greens",
            &config,
            &["--mode", "hadamard", "--shots", "0"]
        )),
        0
    );
    assert_eq!(
        std::fs::read(a.join("greens.csv")).unwrap(),
        std::fs::read(b.join("greens.csv")).unwrap()
    );
}

#[test]
fn same_config_and_seed_give_identical_bytes() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, "two.toml", TWO_SITE);
    let read = |sub: &str, seed: &str| {
        let out = dir.path().join(sub);
        let output = run_in(
            &out,
            "greens",
            &config,
            &[
                "--mode",
                "lcu",
                "--shots",
                "200",
                "--seed",
                seed,
                "--dump-lcu",
            ],
        );
        assert_eq!(code(&output), 0, "{}", stderr(&output));
        (
            std::fs::read(out.join("greens.csv")).unwrap(),
            std::fs::read(out.join("lcu.txt")).unwrap(),
        )
    };
    let first = read("a", "5");
    let second = read("b", "5");
    let other = read("c", "6");
    assert_eq!(first, second);
    assert_ne!(first.0, other.0);
}

#[test]
fn solve_cc_energy_matches_exact_ground_state() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, "two.toml", TWO_SITE);
    let output = run_in(dir.path(), "solve-cc", &config, &["--format", "json"]);
    assert_eq!(code(&output), 0, "{}", stderr(&output));
    let report = json(&dir.path().join("amplitudes.json"));
    let params = AimParams::new(8.0, vec![4.0, 0.0], vec![1.0]).unwrap();
    let reference = reference_state(&params, &Filling::Default).unwrap();
    let exact = EdOracle::new(&params, &reference).unwrap().ground().e0;
    assert!((report["e_cc"].as_f64().unwrap() - exact).abs() < 1e-8);
    assert_eq!(report["reference"], "0110");
    assert!(!report["amplitudes"].as_array().unwrap().is_empty());
}

#[test]
fn spectrum_writes_table_and_plot_script() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, "two.toml", TWO_SITE);
    let output = run_in(dir.path(), "spectrum", &config, &[]);
    assert_eq!(code(&output), 0, "{}", stderr(&output));
    let (_, header, rows) = csv_rows(&dir.path().join("spectrum.csv"));
    assert_eq!(header, ["omega", "A", "A_lehmann"]);
    assert!(!rows.is_empty());
    let script = std::fs::read_to_string(dir.path().join("plot_spectrum.py")).unwrap();
    assert!(script.contains("spectrum.csv"));
}

#[test]
fn trotter_ratio_writes_one_series_per_substep_count() {
    let dir = TempDir::new().unwrap();
    let text = format!("{TWO_SITE}[trotter]\nstep = 0.03\ntimesteps = 20\nsubsteps = [1, 4]\n");
    let config = write_config(&dir, "two.toml", &text);
    let output = run_in(dir.path(), "trotter-ratio", &config, &["--format", "json"]);
    assert_eq!(code(&output), 0, "{}", stderr(&output));
    let report = json(&dir.path().join("trotter_ratio.json"));
    let series = report["series"].as_array().unwrap();
    assert_eq!(series.len(), 2);
    let last = |s: &serde_json::Value| {
        *s["actual"]
            .as_array()
            .unwrap()
            .last()
            .unwrap()
            .as_f64()
            .as_ref()
            .unwrap()
    };
    let ratio = last(&series[0]) / last(&series[1]);
    assert!(
        (12.0..20.0).contains(&ratio),
        "error ratio {ratio} between one and four substeps"
    );
}

#[test]
fn unknown_key_is_a_config_error_with_line() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        &dir,
        "bad.toml",
        &format!("{TWO_SITE}[measurement]\nshotz = 3\n"),
    );
    let output = run_in(dir.path(), "greens", &config, &[]);
    assert_eq!(code(&output), 2);
    let message = stderr(&output);
    assert!(
        message.contains("line 7") && message.contains("shotz"),
        "{message}"
    );
}

#[test]
fn unsupported_version_and_missing_file_are_config_errors() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        &dir,
        "v2.toml",
        &TWO_SITE.replace("version = 1", "version = 2"),
    );
    assert_eq!(code(&run_in(dir.path(), "resources", &config, &[])), 2);
    let missing = dir.path().join("missing.toml");
    assert_eq!(code(&run_in(dir.path(), "resources", &missing, &[])), 2);
}

#[test]
fn validation_failure_has_its_own_exit_code() {
    let dir = TempDir::new().unwrap();
    let text = format!("{TWO_SITE}[evolution]\nmode = \"trotter\"\nstep = 0.1\nsubsteps = 1\n");
    let config = write_config(&dir, "coarse.toml", &text);
    let output = run_in(dir.path(), "validate", &config, &[]);
    assert_eq!(code(&output), 3, "{}", stderr(&output));
    assert!(dir.path().join("validate.csv").exists());
}

#[test]
fn convergence_failure_has_its_own_exit_code() {
    let dir = TempDir::new().unwrap();
    let text = format!("{TWO_SITE}[cc]\nmax_iterations = 1\ntolerance = 1e-16\n");
    let config = write_config(&dir, "strict.toml", &text);
    assert_eq!(code(&run_in(dir.path(), "solve-cc", &config, &[])), 4);
}
