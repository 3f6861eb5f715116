use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use causal_cohort::cohort::{discretize, load_csv, quantile_edges, summarize, Cell, Variable, VariableSummary};
use causal_cohort::effect::ate_stratified;
use causal_cohort::graph::{cpdag_of, structural_hamming_distance, Cpdag, GraphJson};
use causal_cohort::scm::fixtures;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_causal-cohort"))
}

fn ok(out: Output) -> Output {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn write_fixture_b_scm(dir: &Path) -> PathBuf {
    let path = dir.join("fixture_b.json");
    std::fs::write(&path, serde_json::to_string_pretty(&fixtures::fixture_b().to_file()).unwrap()).unwrap();
    path
}

fn simulate(scm: &Path, n: usize, seed: u64, out: &Path) {
    ok(bin()
        .args(["simulate", "--scm"])
        .arg(scm)
        .args(["--n", &n.to_string(), "--seed", &seed.to_string(), "--out"])
        .arg(out)
        .output()
        .unwrap());
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_zero_rows_gives_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let scm = write_fixture_b_scm(dir.path());
    let out = dir.path().join("empty.csv");
    simulate(&scm, 0, 1, &out);
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 1);
}

#[test]
fn simulate_is_byte_identical_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let scm = write_fixture_b_scm(dir.path());
    let (a, b, c) = (dir.path().join("a.csv"), dir.path().join("b.csv"), dir.path().join("c.csv"));
    simulate(&scm, 200, 42, &a);
    simulate(&scm, 200, 42, &b);
    simulate(&scm, 200, 43, &c);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn simulated_fixture_round_trips_through_load() {
    let dir = tempfile::tempdir().unwrap();
    let scm = write_fixture_b_scm(dir.path());
    let csv = dir.path().join("b.csv");
    let schema = dir.path().join("schema.json");
    ok(bin()
        .args(["simulate", "--scm"])
        .arg(&scm)
        .args(["--n", "1000", "--seed", "3", "--out"])
        .arg(&csv)
        .arg("--schema-out")
        .arg(&schema)
        .output()
        .unwrap());
    let vars = serde_json::from_str::<Vec<causal_cohort::cohort::Variable>>(&std::fs::read_to_string(&schema).unwrap())
        .unwrap();
    let table = load_csv(&csv, &vars).unwrap();
    let s = summarize(&table);
    assert_eq!(s.n_rows, 1000);
    let continuous = s.variables.iter().filter(|v| matches!(v, VariableSummary::Continuous { .. })).count();
    assert_eq!(continuous, 3);
}

#[test]
fn export_dot_renders_edges_and_roles() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.json");
    std::fs::write(&g, r#"{"nodes": ["A", "B", "C"], "directed": [["A", "B"]], "undirected": [["B", "C"]]}"#).unwrap();
    let out = dir.path().join("g.dot");
    ok(bin()
        .args(["export-dot", "--graph"])
        .arg(&g)
        .arg("--out")
        .arg(&out)
        .args(["--treatment", "A", "--outcome", "C"])
        .output()
        .unwrap());
    let dot = std::fs::read_to_string(&out).unwrap();
    assert!(dot.starts_with("digraph"));
    assert!(dot.contains("\"A\" -> \"B\";"));
    assert!(dot.contains("\"B\" -> \"C\" [dir=none];"));
    assert!(dot.contains("\"A\" [style=filled, fillcolor=blue"));
    assert!(dot.contains("\"C\" [style=filled, fillcolor=red"));
    assert!(!dot.contains("\"B\" [style"));
}

#[test]
fn export_dot_rejects_unknown_role_node() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.json");
    std::fs::write(&g, r#"{"nodes": ["A", "B"]}"#).unwrap();
    let out = bin()
        .args(["export-dot", "--graph"])
        .arg(&g)
        .arg("--out")
        .arg(dir.path().join("g.dot"))
        .args(["--treatment", "Q"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

const THREE_ROWS: &str = "drug_group,age,los_days\nHaloperidol,70,5.5\nNoDrug,NA,2\nOtherDrug,55,3.25\n";

fn explore_config(dir: &Path) -> PathBuf {
    std::fs::write(dir.join("tiny.csv"), THREE_ROWS).unwrap();
    let config = dir.join("study.json");
    std::fs::write(
        &config,
        r#"{
        "data": {"csv": "tiny.csv"},
        "variables": [
            {"name": "drug_group", "kind": "categorical", "levels": ["Haloperidol", "NoDrug", "OtherDrug"], "role": "treatment"},
            {"name": "age", "kind": "continuous", "unit": "years"},
            {"name": "los_days", "kind": "continuous", "role": "primary_outcome"}
        ],
        "stages": ["explore"]
    }"#,
    )
    .unwrap();
    config
}

#[test]
fn explore_only_run() {
    let dir = tempfile::tempdir().unwrap();
    let config = explore_config(dir.path());
    let out = dir.path().join("out");
    ok(bin().arg("run").arg("--config").arg(&config).arg("--out").arg(&out).output().unwrap());
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["status"], "ok");
    assert_eq!(report["summary"]["n_rows"], 3);
    assert!(report.get("graphs").is_none());
    assert!(report["provenance"]["started_unix"].is_u64());
    assert!(out.join("tables/summary.csv").exists());
    assert!(!out.join("graphs").exists());
}

#[test]
fn config_typo_fails_with_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    let config = explore_config(dir.path());
    let text = std::fs::read_to_string(&config).unwrap().replace("\"stages\"", "\"stage\"");
    std::fs::write(&config, text).unwrap();
    let out = bin().arg("run").arg("--config").arg(&config).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error[ConfigError]"));
}

#[test]
fn failing_stage_exits_nonzero_with_error_record() {
    let dir = tempfile::tempdir().unwrap();
    let config = explore_config(dir.path());
    // ANOVA of los_days by drug_group needs more rows than groups
    let text = std::fs::read_to_string(&config).unwrap().replace(
        r#""stages": ["explore"]"#,
        r#""stages": ["explore", "analytics"], "analytics": {"anova": [{"group": "drug_group", "value": "los_days"}]}"#,
    );
    std::fs::write(&config, text).unwrap();
    let out_dir = dir.path().join("o");
    let out = bin().arg("run").arg("--config").arg(&config).arg("--out").arg(&out_dir).output().unwrap();
    assert!(!out.status.success());
    let record = read_json(&out_dir.join("error.json"));
    assert_eq!(record["stage"], "analytics");
    assert_eq!(record["kind"], "DegenerateGroups");
    assert_eq!(record["stages_completed"], serde_json::json!(["explore"]));
    assert_eq!(read_json(&out_dir.join("report.json"))["status"], "failed");
}

fn dose_contrast(csv: &Path) -> f64 {
    let scm = fixtures::fixture_b();
    let table = load_csv(csv, scm.variables()).unwrap();
    let dose: Vec<Cell> = table.column(table.index_of("T").unwrap()).collect();
    let table = table.with_column(Variable::continuous("dose"), dose).unwrap();
    let table = discretize(&table, "T", &[-1.0, 1.0]).unwrap();
    let z: Vec<f64> = table.numeric("Z").unwrap().into_iter().flatten().collect();
    let table = discretize(&table, "Z", &quantile_edges(&z, 20)).unwrap();
    ate_stratified(&table, "T", "dose", &["Z"], "bin2", "bin0").unwrap().value
}

fn fixture_b_study(dir: &Path, n: usize) -> PathBuf {
    let scm = write_fixture_b_scm(dir);
    simulate(&scm, n, 11, &dir.join("b.csv"));
    let config = dir.join("study.json");
    std::fs::write(
        &config,
        r#"{
        "data": {"csv": "b.csv"},
        "variables": [
            {"name": "Z", "kind": "continuous"},
            {"name": "T", "kind": "continuous", "role": "treatment"},
            {"name": "Y", "kind": "continuous", "role": "primary_outcome"}
        ],
        "learners": {"config": {"alpha": 0.01}},
        "estimation": {
            "contrasts": [{"hi": "bin2", "lo": "bin0", "label": "high vs. low dose"}],
            "bins": {"T": [-1, 1], "Z": {"quantiles": 20}}
        },
        "analytics": {"correlation": true},
        "seeds": {"refutation": 5}
    }"#,
    )
    .unwrap();
    config
}

#[test]
fn full_pipeline_on_fixture_b() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture_b_study(dir.path(), 20_000);
    let out = dir.path().join("out");
    let stdout = ok(bin().arg("run").arg("--config").arg(&config).arg("--out").arg(&out).arg("--canonical").output().unwrap()).stdout;
    let stdout = String::from_utf8(stdout).unwrap();
    assert!(stdout.contains("P(Y | do(T)) = Σ_{Z} P(Y | T, Z) P(Z)"), "{stdout}");
    assert!(stdout.contains("Use a Placebo Treatment: "));

    let report = read_json(&out.join("report.json"));
    assert_eq!(report["status"], "ok");
    assert!(report["provenance"].get("started_unix").is_none());

    // every graph file reloads; the consensus is in the true equivalence class
    let truth = cpdag_of(fixtures::fixture_b().graph());
    for name in ["pc", "hill_climb", "tabu", "mmhc", "consensus", "consensus_dag"] {
        let json: GraphJson = serde_json::from_str(&std::fs::read_to_string(out.join(format!("graphs/{name}.json"))).unwrap()).unwrap();
        let g = Cpdag::from_json(&json).unwrap();
        assert!(std::fs::read_to_string(out.join(format!("graphs/{name}.dot"))).unwrap().starts_with("digraph"));
        if name == "consensus_dag" {
            assert_eq!(structural_hamming_distance(&cpdag_of(&g.to_dag().unwrap()), &truth).unwrap(), 0);
        }
    }

    // 1.5 per unit of dose; the same stratified contrast applied to T itself
    // gives how many units apart the two arms are
    let ate = report["estimation"]["ate"]["cells"][0]["estimate"]["value"].as_f64().unwrap();
    let units = dose_contrast(&dir.path().join("b.csv"));
    assert!((ate / units - 1.5).abs() < 0.1, "raw contrast {ate} over {units} units");

    let refutation = &report["refutations"][0]["report"];
    assert_eq!(refutation["pass_placebo"], true);
    assert_eq!(refutation["pass_subset"], true);

    let ate_csv = std::fs::read_to_string(out.join("tables/ate.csv")).unwrap();
    assert!(ate_csv.starts_with("contrast,Y\nhigh vs. low dose,"));
    for table in ["summary", "correlation", "ate", "refutation"] {
        let text = std::fs::read_to_string(out.join(format!("tables/{table}.csv"))).unwrap();
        let mut rows = csv::Reader::from_reader(text.as_bytes());
        let width = rows.headers().unwrap().len();
        for r in rows.records() {
            assert_eq!(r.unwrap().len(), width);
        }
    }
}

#[test]
fn canonical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture_b_study(dir.path(), 3_000);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        ok(bin().arg("run").arg("--config").arg(&config).arg("--out").arg(out).arg("--canonical").output().unwrap());
    }
    assert_eq!(std::fs::read(a.join("report.json")).unwrap(), std::fs::read(b.join("report.json")).unwrap());
}
