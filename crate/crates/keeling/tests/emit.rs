use std::fs;
use std::path::Path;

use keeling::emit::{self, output_path, Format, Metadata};
use keeling::pipeline::{run_pipeline, PipelineConfig};
use keeling::{data::snapshot, Bundle};
use savgol_ci::Execution;

const SCHEMA: &str = include_str!("../schema/dataset.schema.json");

const FILES: [&str; 13] = [
    "fig1a_series",
    "fig1b_diff",
    "fig2a_sweep",
    "fig2b_sweep",
    "fig3a_filtered",
    "fig3b_residuals",
    "fig4a_qq",
    "fig4b_polysweep",
    "fig5_derivative_ci",
    "fig6_mc",
    "fig7_log2",
    "fig8_fracrate",
    "summary",
];

fn bundle(execution: Execution) -> Bundle {
    let config = PipelineConfig { trials: 200, seed: 9, execution, ..PipelineConfig::default() };
    run_pipeline(&snapshot(), &config).unwrap()
}

fn write(b: &Bundle, format: Format, dir: &Path) -> Vec<Vec<u8>> {
    let paths = emit::write_all(&emit::datasets(b), &Metadata::for_bundle(b), format, dir).unwrap();
    paths.iter().map(|p| fs::read(p).unwrap()).collect()
}

#[test]
fn one_file_per_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let b = bundle(Execution::default());
    let paths = emit::write_all(&emit::datasets(&b), &Metadata::for_bundle(&b), Format::Csv, dir.path()).unwrap();
    let names: Vec<_> = paths.iter().map(|p| p.file_stem().unwrap().to_str().unwrap().to_string()).collect();
    assert_eq!(names, FILES);
    let fig5 = fs::read_to_string(dir.path().join("fig5_derivative_ci.csv")).unwrap();
    assert_eq!(fig5.lines().next().unwrap(), "year,dyf,lo,hi,dy_raw");
    assert_eq!(fig5.lines().count(), 68);
    assert!(fig5.ends_with(",\n"));
}

#[test]
fn identical_runs_give_identical_bytes() {
    for format in [Format::Csv, Format::Json] {
        let (d1, d2, d3) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let first = write(&bundle(Execution::Parallel), format, d1.path());
        let second = write(&bundle(Execution::Parallel), format, d2.path());
        let sequential = write(&bundle(Execution::Sequential), format, d3.path());
        assert_eq!(first, second);
        assert_eq!(first, sequential);
    }
}

#[test]
fn json_validates_against_the_schema() {
    let schema: serde_json::Value = serde_json::from_str(SCHEMA).unwrap();
    let compiled = jsonschema::JSONSchema::compile(&schema).unwrap();
    let b = bundle(Execution::default());
    let meta = Metadata::for_bundle(&b);
    for d in emit::datasets(&b) {
        let text = emit::render(&d, &meta, Format::Json).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        if let Err(errors) = compiled.validate(&doc) {
            let msgs: Vec<String> = errors.map(|e| e.to_string()).collect();
            panic!("{}: {msgs:?}", d.name);
        }
        let width = doc["columns"].as_array().unwrap().len();
        assert!(doc["rows"].as_array().unwrap().iter().all(|r| r.as_array().unwrap().len() == width));
        assert_eq!(doc["dataset"], d.name);
        assert_eq!(doc["metadata"]["spec"]["m"], 9);
    }
    // a bare metadata block is valid too
    let bare = emit::render(&emit::series_table(&b.series), &Metadata::new("x"), Format::Json).unwrap();
    assert!(compiled.is_valid(&serde_json::from_str(&bare).unwrap()));
    let broken = serde_json::json!({"dataset": "x", "metadata": {}, "columns": [], "rows": []});
    assert!(!compiled.is_valid(&broken));
}

#[test]
fn json_mirrors_csv() {
    let b = bundle(Execution::default());
    let meta = Metadata::for_bundle(&b);
    let d = emit::frac_rate_table(&b.series, &b.anthropogenic, 0.95);
    let csv = emit::render(&d, &meta, Format::Csv).unwrap();
    let json: serde_json::Value = serde_json::from_str(&emit::render(&d, &meta, Format::Json).unwrap()).unwrap();
    for (line, row) in csv.lines().skip(1).zip(json["rows"].as_array().unwrap()) {
        let fields: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        let values: Vec<f64> = row.as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
        // serde_json's default float parser may be one ulp off
        assert!(fields.iter().zip(&values).all(|(a, b)| (a - b).abs() <= 1e-15 * a.abs()), "{fields:?} {values:?}");
    }
}

#[test]
fn prefix_or_directory() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(output_path(dir.path(), "summary", Format::Json), dir.path().join("summary.json"));
    assert_eq!(output_path(Path::new("out/run1_"), "summary", Format::Csv), Path::new("out/run1_summary.csv"));
    assert_eq!(output_path(Path::new("fresh/"), "summary", Format::Csv), Path::new("fresh/summary.csv"));
}

#[test]
fn unwritable_destination_is_an_emit_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let b = bundle(Execution::default());
    let err = emit::write_all(&emit::datasets(&b), &Metadata::for_bundle(&b), Format::Csv, &blocker.join("sub/"))
        .unwrap_err();
    assert!(err.to_string().starts_with("[emit]"), "{err}");
}
