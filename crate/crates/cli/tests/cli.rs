//! End-to-end tests of the `transval` binary: exit codes, output format,
//! determinism across invocations, and single-cell reruns from recorded
//! seed paths.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use transval_cli::config::{load_config, Overrides};
use transval_cli::runner::rerun_cell;
use transval_cli::table::{parse_results, HEADER};

const BIN: &str = env!("CARGO_BIN_EXE_transval");

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("transval-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn reference_config(out: &Path) -> String {
    format!(
        r#"
master_seed = 42
replications = 200
p_grid = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
output = "{}"

[data]
source = "cubic"
n = 10
m = 5
noise_sigma = 0.25

[[model]]
kind = "polyreg"
degree = 1
ridge = 0.01

[[model]]
kind = "polyreg"
degree = 2
ridge = 0.01

[[model]]
kind = "polyreg"
degree = 3
ridge = 0.01
"#,
        out.display()
    )
}

#[test]
fn sweep_emits_one_row_per_grid_cell() {
    let dir = tmp_dir("rows");
    let out = dir.join("out.csv");
    let config = write_config(&dir, &reference_config(&out));
    let result = run(&["sweep", "--config", config.to_str().unwrap()]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let table = parse_results(&text).unwrap();
    assert_eq!(table.rows.len(), 11 * 3 * 200);
    assert_eq!(table.selections.len(), 11);
    assert_eq!(table.models.len(), 3);
    assert!(table.knee.is_some());
    assert!(table.errors.is_empty());
    assert!(text.starts_with(HEADER));
}

#[test]
fn out_of_range_p_is_a_config_error() {
    let dir = tmp_dir("badp");
    let out = dir.join("out.csv");
    let body = reference_config(&out).replace("0.9, 1.0]", "0.9, 1.5]");
    let config = write_config(&dir, &body);
    let result = run(&["sweep", "--config", config.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("p_grid"), "{stderr}");
    assert!(!out.exists());
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tmp_dir("unknown");
    let out = dir.join("out.csv");
    let body = format!("{}\nmystery_knob = 3\n", reference_config(&out));
    let config = write_config(&dir, &body);
    let result = run(&["sweep", "--config", config.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn missing_config_file_is_an_io_error() {
    let result = run(&["sweep", "--config", "/nonexistent/config.toml"]);
    assert_eq!(result.status.code(), Some(4));
}

#[test]
fn identical_invocations_write_identical_bytes() {
    let dir = tmp_dir("rerun");
    let out1 = dir.join("a.csv");
    let out2 = dir.join("b.csv");
    let config = write_config(&dir, &reference_config(&out1));
    let first = run(&["sweep", "--config", config.to_str().unwrap()]);
    assert!(first.status.success());
    let second = run(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out2.to_str().unwrap(),
    ]);
    assert!(second.status.success());
    assert_eq!(std::fs::read(&out1).unwrap(), std::fs::read(&out2).unwrap());
}

#[test]
fn recorded_seed_path_reruns_the_cell_bit_exactly() {
    let dir = tmp_dir("cell");
    let out = dir.join("out.csv");
    let body = reference_config(&out).replace("replications = 200", "replications = 8");
    let config = write_config(&dir, &body);
    let result = run(&["sweep", "--config", config.to_str().unwrap()]);
    assert!(result.status.success());
    let table = parse_results(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let cfg = load_config(&config, &Overrides::default()).unwrap();
    for row in table.rows.iter().step_by(37) {
        let pi = cfg
            .p_grid
            .iter()
            .position(|p| p.to_bits() == row.p.to_bits())
            .unwrap();
        let cell = rerun_cell(&cfg, pi, row.model_id, row.replication).unwrap();
        assert_eq!(cell.seed_path, row.seed_path);
        let rerun = cell.result.unwrap();
        assert_eq!(rerun.val_loss.to_bits(), row.val_loss.to_bits());
        assert_eq!(rerun.leak_count, row.leak_count);
    }
}

#[test]
fn failing_cells_embed_errors_and_exit_3() {
    let dir = tmp_dir("fail");
    let out = dir.join("out.csv");
    let body = format!(
        r#"
master_seed = 9
replications = 3
p_grid = [0.0, 0.5, 1.0]
output = "{}"

[data]
source = "blobs"
n = 6
m = 4
classes = 2
dim = 2

[[model]]
kind = "knn"
k = 1

[[model]]
kind = "knn"
k = 50
"#,
        out.display()
    );
    let config = write_config(&dir, &body);
    let result = run(&["sweep", "--config", config.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(3));
    let table = parse_results(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(table.rows.len(), 3 * 2 * 3);
    // every k=50 cell failed; its rows carry NaN losses and an error record
    assert_eq!(table.errors.len(), 3 * 3);
    assert!(table.errors.iter().all(|e| e.model == 1));
    for row in table.rows.iter().filter(|r| r.model_id == 1) {
        assert!(row.val_loss.is_nan());
        assert!(!row.chosen);
    }
    // healthy model rows are intact
    assert!(table.rows.iter().filter(|r| r.model_id == 0).all(|r| r.val_loss.is_finite()));
    // no complete replication anywhere: all-none selection records
    assert!(table.selections.iter().all(|s| s.chosen.is_none()));
}

#[test]
fn knee_subcommand_matches_the_emitted_record() {
    let dir = tmp_dir("knee");
    let out = dir.join("out.csv");
    let body = reference_config(&out).replace("replications = 200", "replications = 30");
    let config = write_config(&dir, &body);
    assert!(run(&["sweep", "--config", config.to_str().unwrap()]).status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let record = text
        .lines()
        .find(|l| l.starts_with("# knee"))
        .expect("knee record present");
    let result = run(&["knee", out.to_str().unwrap()]);
    assert!(result.status.success());
    assert_eq!(String::from_utf8_lossy(&result.stdout).trim(), record);
}

#[test]
fn knee_subcommand_rejects_malformed_input() {
    let dir = tmp_dir("kneebad");
    let bad = dir.join("bad.csv");
    std::fs::write(&bad, "not,a,result,file\n").unwrap();
    let result = run(&["knee", bad.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(4));
}

#[test]
fn stability_subcommand_prints_records() {
    let dir = tmp_dir("stab");
    let out = dir.join("stab.csv");
    let body = format!(
        r#"
master_seed = 7
replications = 1
p_grid = [0.0]
output = "{}"

[data]
source = "cubic"
n = 10
m = 5
noise_sigma = 0.25

[[model]]
kind = "polyreg"
degree = 2
ridge = 1.0

[stability]
quantities = ["oaros-eps1", "erm-gap-eps2"]
n = 12
trials = 64
"#,
        out.display()
    );
    let config = write_config(&dir, &body);
    let result = run(&["stability", "--config", config.to_str().unwrap()]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("# stability,quantity=oaros-eps1,"), "{stdout}");
    assert!(stdout.contains("# stability,quantity=erm-gap-eps2,"), "{stdout}");
    let table = parse_results(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(table.stability.len(), 2);
    assert_eq!(table.stability[0].trials, 64);
}

#[test]
fn stability_subcommand_without_section_is_a_config_error() {
    let dir = tmp_dir("stabmissing");
    let out = dir.join("out.csv");
    let config = write_config(&dir, &reference_config(&out));
    let result = run(&["stability", "--config", config.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn gen_data_is_deterministic_and_counts_rows() {
    let dir = tmp_dir("gendata");
    let out = dir.join("unused.csv");
    let config = write_config(&dir, &reference_config(&out));
    let args = ["gen-data", "--config", config.to_str().unwrap(), "--count", "25"];
    let first = run(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, run(&args).stdout);
    let text = String::from_utf8(first.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 26);
    assert_eq!(lines[0], "feature_0,label");
    // a different seed changes the sample
    let other = run(&[
        "gen-data",
        "--config",
        config.to_str().unwrap(),
        "--count",
        "25",
        "--seed",
        "43",
    ]);
    assert_ne!(text, String::from_utf8(other.stdout).unwrap());
}

#[test]
fn procedure_override_is_validated_against_models() {
    let dir = tmp_dir("proc");
    let out = dir.join("out.csv");
    let config = write_config(&dir, &reference_config(&out));
    let result = run(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--procedure",
        "batch",
    ]);
    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("sgd-logistic"), "{stderr}");
}

#[test]
fn batch_sweep_runs_and_clamp_warns() {
    let dir = tmp_dir("batch");
    let out = dir.join("out.csv");
    let body = format!(
        r#"
master_seed = 11
procedure = "batch-sample"
replications = 2
p_grid = [0.0, 0.5, 1.0]
output = "{}"

[data]
source = "blobs"
n = 12
m = 6
classes = 2
dim = 2

[[model]]
kind = "sgd-logistic"
learning_rate = 0.1
epochs = 2
batch_size = 3
"#,
        out.display()
    );
    let config = write_config(&dir, &body);
    let result = run(&["sweep", "--config", config.to_str().unwrap()]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    // n/m = 2, so p=1.0 clamps (and p=0.5 sits exactly at 1.0, unclamped)
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("clamped"), "{stderr}");
    let table = parse_results(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(table.rows.len(), 3 * 2);
    // p=0 takes no validation batches; p=1 takes only validation batches
    let iterations = 2 * 12usize.div_ceil(3);
    for row in &table.rows {
        if row.p == 0.0 {
            assert_eq!(row.leak_count, 0);
        }
        if row.p == 1.0 {
            assert_eq!(row.leak_count, iterations);
        }
    }
}

#[test]
fn version_subcommand_prints_name_and_version() {
    let result = run(&["version"]);
    assert!(result.status.success());
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.starts_with("transval "), "{stdout}");
}
