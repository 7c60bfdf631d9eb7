//! Acceptance gate for the binary: replay determinism of simulated runs,
//! plus an opt-in live smoke test that is excluded from CI.

use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use steerbench_core::dataset::{save_dataset, Dataset, McqItem};
use steerbench_core::evaluation::load_report;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_steerbench"))
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

fn write_synthetic_dataset(path: &Path, n: usize) {
    let items = (0..n)
        .map(|i| McqItem {
            id: format!("syn-{i:04}"),
            stem: format!("synthetic question {i}"),
            options: (0..4).map(|o| format!("candidate answer {i}-{o}")).collect(),
            gold_index: i % 4,
            language: "en".to_owned(),
            meta: serde_json::Map::new(),
        })
        .collect();
    save_dataset(&Dataset::new("synthetic", "", items).unwrap(), path).unwrap();
}

fn without_timestamp_lines(raw: &str) -> String {
    raw.lines()
        .filter(|line| !line.contains("\"generated_at\""))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Two identical simulated invocations must write byte-identical reports
/// except for the generation timestamp.
#[test]
fn criterion_09_replay_determinism_of_the_binary() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("synthetic.jsonl");
    let strategy = dir.path().join("strategy.json");
    write_synthetic_dataset(&data, 200);
    std::fs::write(
        &strategy,
        serde_json::to_string_pretty(&serde_json::json!({
            "label": "ensemble-x5",
            "template": "zero_shot",
            "ensemble": { "n_members": 5, "shuffle": true, "seed": 0, "early_stop_margin": null },
            "model_id": "o1-preview",
            "repeats": 3,
        }))
        .unwrap(),
    )
    .unwrap();

    let run = |report_name: &str| {
        let report = dir.path().join(report_name);
        let out = bin()
            .env_remove("STEERBENCH_API_KEY")
            .args([
                "run",
                data.to_str().unwrap(),
                "--strategy",
                strategy.to_str().unwrap(),
                "--out",
                report.to_str().unwrap(),
                "--simulate",
                "0.7",
                "--seed",
                "42",
            ])
            .output()
            .expect("spawn steerbench");
        assert!(
            out.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        (std::fs::read_to_string(&report).unwrap(), stdout(&out))
    };

    let (first_json, first_stdout) = run("first.json");
    let (second_json, second_stdout) = run("second.json");

    assert_eq!(
        without_timestamp_lines(&first_json),
        without_timestamp_lines(&second_json),
        "reports diverged beyond the timestamp"
    );
    assert_ne!(first_json, "", "report file is empty");

    // The only difference tolerated is the timestamp value itself.
    let mut a: serde_json::Value = serde_json::from_str(&first_json).unwrap();
    let mut b: serde_json::Value = serde_json::from_str(&second_json).unwrap();
    assert!(a.as_object_mut().unwrap().remove("generated_at").is_some());
    assert!(b.as_object_mut().unwrap().remove("generated_at").is_some());
    assert_eq!(a, b);

    // Printed numbers come from the report, so they match too (the
    // `report:` line differs only by the chosen output filename), and the
    // stdout cost line parses back to the report's exact total.
    let numbers = |s: &str| {
        s.lines()
            .filter(|l| !l.starts_with("report: "))
            .map(str::to_owned)
            .collect::<Vec<_>>()
    };
    assert_eq!(numbers(&first_stdout), numbers(&second_stdout));
    let report = load_report(&dir.path().join("first.json")).unwrap();
    let cost_line = first_stdout
        .lines()
        .find(|l| l.starts_with("total cost: $"))
        .unwrap();
    let printed: f64 = cost_line.trim_start_matches("total cost: $").parse().unwrap();
    assert_eq!(printed, report.total_cost_usd);
    assert_eq!(report.records.len(), 200 * 3);

    let elapsed = start.elapsed();
    println!("acceptance 09 replay determinism: PASS ({elapsed:.2?})");
    assert!(elapsed <= Duration::from_secs(60), "took {elapsed:?}");
}

/// Live smoke test, excluded from CI. Requires a funded key:
///
/// ```text
/// export STEERBENCH_API_KEY=sk-...
/// cargo test -p steerbench-cli --test acceptance -- --ignored --nocapture
/// ```
///
/// Runs ten questions zero-shot against the default endpoint with a
/// reasoning-model profile; asserts completion, nonzero reasoning tokens,
/// and a priced total — no accuracy threshold.
#[test]
#[ignore = "spends real API budget; needs STEERBENCH_API_KEY"]
fn criterion_10_live_smoke() {
    assert!(
        std::env::var("STEERBENCH_API_KEY").is_ok(),
        "set STEERBENCH_API_KEY to run the live smoke test"
    );
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("smoke.jsonl");
    let strategy = dir.path().join("strategy.json");
    let report_path = dir.path().join("report.json");

    let questions: [(&str, &[&str], usize); 10] = [
        ("Which organ secretes insulin?", &["Liver", "Pancreas", "Spleen", "Kidney"], 1),
        ("Which vitamin deficiency causes scurvy?", &["Vitamin A", "Vitamin B12", "Vitamin C", "Vitamin D"], 2),
        ("Which cell produces antibodies?", &["Plasma cell", "Neutrophil", "Platelet", "Erythrocyte"], 0),
        ("Which valve separates the left atrium and left ventricle?", &["Tricuspid", "Mitral", "Aortic", "Pulmonary"], 1),
        ("Which electrolyte disturbance classically causes peaked T waves?", &["Hypokalemia", "Hyperkalemia", "Hyponatremia", "Hypercalcemia"], 1),
        ("Which vessel carries oxygenated blood from the lungs?", &["Pulmonary artery", "Pulmonary vein", "Superior vena cava", "Coronary sinus"], 1),
        ("Which cranial nerve innervates the lateral rectus muscle?", &["III", "IV", "VI", "VII"], 2),
        ("Which hormone is deficient in diabetes insipidus?", &["Aldosterone", "Vasopressin", "Cortisol", "Oxytocin"], 1),
        ("Which bone is fractured in a boxer's fracture?", &["Scaphoid", "Fifth metacarpal", "Radius", "Hamate"], 1),
        ("Which organism causes syphilis?", &["Treponema pallidum", "Neisseria gonorrhoeae", "Chlamydia trachomatis", "Haemophilus ducreyi"], 0),
    ];
    let items = questions
        .iter()
        .enumerate()
        .map(|(i, (stem, options, gold))| McqItem {
            id: format!("smoke-{i:02}"),
            stem: (*stem).to_owned(),
            options: options.iter().map(|s| (*s).to_owned()).collect(),
            gold_index: *gold,
            language: "en".to_owned(),
            meta: serde_json::Map::new(),
        })
        .collect();
    save_dataset(&Dataset::new("smoke", "", items).unwrap(), &data).unwrap();
    std::fs::write(
        &strategy,
        serde_json::to_string_pretty(&serde_json::json!({
            "label": "live-smoke",
            "template": "zero_shot",
            "ensemble": { "n_members": 1, "shuffle": false, "seed": 0, "early_stop_margin": null },
            "model_id": "o1-preview",
            "repeats": 1,
        }))
        .unwrap(),
    )
    .unwrap();

    let out = bin()
        .args([
            "run",
            data.to_str().unwrap(),
            "--strategy",
            strategy.to_str().unwrap(),
            "--out",
            report_path.to_str().unwrap(),
        ])
        .output()
        .expect("spawn steerbench");
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let report = load_report(&report_path).unwrap();
    assert_eq!(report.records.len(), 10);
    let reasoning: u64 = report.records.iter().map(|r| r.usage_total.reasoning_tokens).sum();
    assert!(reasoning > 0, "reasoning-model profile returned no reasoning tokens");
    assert!(report.total_cost_usd > 0.0, "run was not priced");
    println!(
        "acceptance 10 live smoke: PASS (accuracy {:.2}, ${} spent, {reasoning} reasoning tokens)",
        report.mean_accuracy, report.total_cost_usd
    );
}
