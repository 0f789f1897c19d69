//! End-to-end checks of the command-line interface: exit codes, output
//! files, and flag handling.

use std::path::Path;
use std::process::{Command, Output};

fn platoon(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_platoon"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn generate_small(dir: &Path, name: &str) {
    let out = platoon(
        &["generate", "--hubs", "6", "--trucks", "20", "--seed", "3", "-o", name],
        dir,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn generate_writes_scenario_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = platoon(
        &["generate", "--trucks", "10", "--hubs", "4", "--seed", "1", "-o", "s.json"],
        dir.path(),
    );
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("4 hubs, 10 trucks"), "{stdout}");
    assert!(dir.path().join("s.json").exists());
}

#[test]
fn generate_preset_resolves_national_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = platoon(
        &["generate", "--preset", "sweden", "--seed", "1", "-o", "s.json"],
        dir.path(),
    );
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("105 hubs, 5000 trucks, 855 fleets"),
        "{stdout}"
    );

    let out = platoon(
        &["generate", "--preset", "nowhere", "--seed", "1", "-o", "s.json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("available: sweden"));
}

#[test]
fn generate_is_byte_deterministic_across_processes() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.json", "b.json"] {
        let out = platoon(
            &["generate", "--hubs", "9", "--trucks", "40", "--seed", "11", "-o", name],
            dir.path(),
        );
        assert!(out.status.success());
    }
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    let b = std::fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn missing_output_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = platoon(&["generate", "--trucks", "10", "--hubs", "4"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn run_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    generate_small(dir.path(), "s.json");
    let out = platoon(
        &["run", "s.json", "--scheme", "predictive", "-o", "results"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for file in ["metrics.json", "platoons.csv", "decisions.jsonl"] {
        assert!(dir.path().join("results").join(file).exists(), "{file} missing");
    }
    let metrics = std::fs::read_to_string(dir.path().join("results/metrics.json")).unwrap();
    assert!(metrics.contains("\"scheme\": \"predictive\""));
}

#[test]
fn unknown_scheme_lists_the_valid_names() {
    let dir = tempfile::tempdir().unwrap();
    generate_small(dir.path(), "s.json");
    let out = platoon(
        &["run", "s.json", "--scheme", "psychic", "-o", "results"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    for name in ["predictive", "spontaneous", "single-fleet"] {
        assert!(stderr.contains(name), "missing {name} in: {stderr}");
    }
}

#[test]
fn unreadable_scenario_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = platoon(
        &["run", "missing.json", "--scheme", "predictive", "-o", "results"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));

    std::fs::write(dir.path().join("broken.json"), "{not json").unwrap();
    let out = platoon(
        &["run", "broken.json", "--scheme", "predictive", "-o", "results"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compare_writes_three_scheme_rows() {
    let dir = tempfile::tempdir().unwrap();
    generate_small(dir.path(), "s.json");
    let out = platoon(&["compare", "s.json", "-o", "cmp"], dir.path());
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("cmp/compare.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("scheme,total_reward"));
    assert!(lines[1].starts_with("predictive,"));
    assert!(lines[2].starts_with("spontaneous,"));
    assert!(lines[3].starts_with("single-fleet,"));
}

#[test]
fn bench_emits_table_rows_with_matching_values() {
    let dir = tempfile::tempdir().unwrap();
    generate_small(dir.path(), "s.json");
    let out = platoon(
        &["bench", "s.json", "--samples", "4", "-o", "bench.csv"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("bench.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "case,n_tilde,N_i,enum_seconds,dp_seconds,values_equal");
    assert!(lines.len() > 1, "no benchmark rows");
    for line in &lines[1..] {
        assert!(line.ends_with(",true"), "oracle mismatch in row: {line}");
    }
}

#[test]
fn bench_with_zero_samples_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    generate_small(dir.path(), "s.json");
    let out = platoon(
        &["bench", "s.json", "--samples", "0", "-o", "bench.csv"],
        dir.path(),
    );
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("bench.csv")).unwrap();
    assert_eq!(csv, "case,n_tilde,N_i,enum_seconds,dp_seconds,values_equal\n");
}

#[test]
fn bench_marks_guard_tripped_cases_as_skipped() {
    let dir = tempfile::tempdir().unwrap();
    // denser scenario so some instance has at least a couple of options
    let out = platoon(
        &["generate", "--hubs", "6", "--trucks", "60", "--seed", "5", "-o", "d.json"],
        dir.path(),
    );
    assert!(out.status.success());
    let out = platoon(
        &["bench", "d.json", "--samples", "2", "--guard", "1", "-o", "bench.csv"],
        dir.path(),
    );
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("bench.csv")).unwrap();
    assert!(csv.contains("skipped"), "no skipped rows:\n{csv}");
}

#[test]
fn thread_cap_does_not_change_comparison_results() {
    let dir = tempfile::tempdir().unwrap();
    generate_small(dir.path(), "s.json");
    let parallel = platoon(&["compare", "s.json", "-o", "par"], dir.path());
    assert!(parallel.status.success());
    let sequential = Command::new(env!("CARGO_BIN_EXE_platoon"))
        .args(["compare", "s.json", "-o", "seq"])
        .env("PLATOON_THREADS", "1")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(sequential.status.success());
    let a = std::fs::read(dir.path().join("par/compare.csv")).unwrap();
    let b = std::fs::read(dir.path().join("seq/compare.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn scenario_config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("config.json"),
        r#"{"hub_count": 5, "truck_count": 12, "seed": 9}"#,
    )
    .unwrap();
    let out = platoon(
        &["generate", "--config", "config.json", "--trucks", "15", "-o", "s.json"],
        dir.path(),
    );
    assert!(out.status.success());
    // the flag overrides the config file's truck count
    assert!(String::from_utf8_lossy(&out.stdout).contains("5 hubs, 15 trucks"));
}
