use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use chromaprobe::harness::{self, ClusterRow, DetectRanking, DetectRow, Report, SearchRow};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chromaprobe"))
        .args(args)
        .output()
        .expect("spawn chromaprobe")
}

fn ok(args: &[&str]) -> String {
    let out = cli(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn full_pipeline_writes_consistent_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let out = tmp.path().join("out");
    let config = tmp.path().join("exp.json");
    std::fs::write(&config, r#"{"search": {"seeds": 3}}"#).unwrap();
    let common = [
        "--config",
        s(&config),
        "--spaces",
        "C1C2C3,HSV",
        "--bins",
        "16,32",
    ];

    let gen = ok(&[&["gen", "--out", s(&data)][..], &common].concat());
    assert!(gen.contains("36 image/label pairs"), "{gen}");
    assert!(data.join("manifest.json").is_file());

    ok(&[
        &["templates", "--out", s(&out), "--corpus", s(&data)][..],
        &common,
    ]
    .concat());
    let n_templates = std::fs::read_dir(out.join("templates")).unwrap().count();
    assert_eq!(n_templates, 12);

    let detect = ok(&[
        &["eval-detect", "--out", s(&out), "--corpus", s(&data)][..],
        &common,
    ]
    .concat());
    assert!(detect.contains("original top-3 F"));
    let rows: Vec<DetectRow> = harness::read_csv(&out.join(harness::DETECT_CSV)).unwrap();
    // images x configurations x bin sizes x template classes
    assert_eq!(rows.len(), 36 * 4 * 2 * n_templates);

    let ranking: DetectRanking = harness::read_json(&out.join(harness::DETECT_JSON)).unwrap();
    let mut sums: BTreeMap<(String, bool), (f64, f64, f64, usize)> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.tp + r.fn_ > 0) {
        let e = sums.entry((r.space.clone(), r.primed)).or_default();
        e.0 += r.recall;
        e.1 += r.precision;
        e.2 += r.fmeasure;
        e.3 += 1;
    }
    assert_eq!(sums.len(), ranking.entries.len());
    for e in &ranking.entries {
        let (r, p, f, n) = sums[&(e.space.clone(), e.primed)];
        let n_f = n as f64;
        assert_eq!(e.mean.n, n);
        assert!((e.mean.recall - r / n_f).abs() < 1e-9);
        assert!((e.mean.precision - p / n_f).abs() < 1e-9);
        assert!((e.mean.fmeasure - f / n_f).abs() < 1e-9);
    }

    ok(&[
        &["eval-cluster", "--out", s(&out), "--corpus", s(&data)][..],
        &common,
    ]
    .concat());
    let crow: Vec<ClusterRow> = harness::read_csv(&out.join(harness::CLUSTER_CSV)).unwrap();
    assert_eq!(crow.len(), 36 * 4);
    assert!(crow.iter().all(|r| (-1.0..=1.0).contains(&r.mean)));

    ok(&[&["search", "--out", s(&out)][..], &common].concat());
    let srows: Vec<SearchRow> = harness::read_csv(&out.join(harness::SEARCH_CSV)).unwrap();
    // baseline plus four configurations, 3 seeds x 4 starts each
    assert_eq!(srows.len(), 5 * 3 * 4);

    ok(&["report", "--out", s(&out)]);
    let report: Report = harness::read_json(&out.join(harness::REPORT_JSON)).unwrap();
    assert!(report.detection.is_some() && report.clustering.is_some() && report.search.is_some());
    assert_eq!(report.entries.len(), 4);
    assert!(report
        .entries
        .iter()
        .all(|e| e.mean_fmeasure.is_some() && e.mean_steps.is_some()));
}

#[test]
fn report_marks_missing_parts_null() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("exp.json");
    std::fs::write(&config, r#"{"search": {"seeds": 2}}"#).unwrap();
    ok(&[
        "search",
        "--out",
        s(tmp.path()),
        "--config",
        s(&config),
        "--spaces",
        "rg",
    ]);
    ok(&["report", "--out", s(tmp.path())]);
    let json: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join(harness::REPORT_JSON)).unwrap(),
    )
    .unwrap();
    assert!(json["detection"].is_null());
    assert!(json["clustering"].is_null());
    assert!(json["search"].is_object());
    assert!(json["entries"][0]["mean_fmeasure"].is_null());
    let csv = std::fs::read_to_string(tmp.path().join(harness::REPORT_CSV)).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn report_without_inputs_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cli(&["report", "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unpaired_corpus_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let img = chromaprobe::RasterImage::filled(4, 4, [255, 0, 0]).unwrap();
    img.save_png(&tmp.path().join("a_img.png")).unwrap();
    img.save_png(&tmp.path().join("b_img.png")).unwrap();
    chromaprobe::LabelMap::filled(4, 4, 0)
        .save_png(&tmp.path().join("a_label.png"))
        .unwrap();
    let out = cli(&[
        "eval-detect",
        "--corpus",
        s(tmp.path()),
        "--out",
        s(&tmp.path().join("o")),
        "--spaces",
        "rg",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("b"));
}

#[test]
fn bad_arguments_exit_with_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    let o = s(tmp.path());
    assert_eq!(
        cli(&["eval-detect", "--out", o, "--spaces", "nope"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        cli(&["eval-detect", "--out", o, "--bins", "17"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        cli(&["eval-detect", "--out", o, "--tau", "1.5"])
            .status
            .code(),
        Some(2)
    );
    let config = tmp.path().join("bad.json");
    std::fs::write(&config, r#"{"colour": 1}"#).unwrap();
    assert_eq!(
        cli(&["search", "--out", o, "--config", s(&config)])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn custom_world_needs_starts() {
    let tmp = tempfile::tempdir().unwrap();
    let world = tmp.path().join("world.json");
    std::fs::write(
        &world,
        serde_json::json!({
            "rows": ["#####", "#..b#", "#####"],
            "legend": {"#": "obstacle", ".": "free", "b": {"class": "b", "target": true}},
            "seed": 1
        })
        .to_string(),
    )
    .unwrap();
    let config = tmp.path().join("exp.json");
    std::fs::write(
        &config,
        format!(r#"{{"world": {:?}, "search": {{"seeds": 1}}}}"#, s(&world)),
    )
    .unwrap();
    let o = s(tmp.path());
    assert_eq!(
        cli(&["search", "--out", o, "--config", s(&config)])
            .status
            .code(),
        Some(2)
    );

    std::fs::write(
        &config,
        format!(
            r#"{{"world": {:?}, "starts": [[1, 1]], "search": {{"seeds": 1}}}}"#,
            s(&world)
        ),
    )
    .unwrap();
    ok(&[
        "search",
        "--out",
        o,
        "--config",
        s(&config),
        "--spaces",
        "C1C2C3",
    ]);
    let rows: Vec<SearchRow> = harness::read_csv(&tmp.path().join(harness::SEARCH_CSV)).unwrap();
    assert!(rows.iter().all(|r| r.found && r.steps == 0));
}
