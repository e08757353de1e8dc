use riskforest_cli::synth::{generate_synthetic, write_synthetic, LABEL_COLUMN};
use riskforest_cli::SyntheticSpec;
use riskforest_core::tabular::{load_csv, load_schema};

#[test]
fn identical_specs_give_identical_files() {
    let spec = SyntheticSpec { n_rows: 300, ..SyntheticSpec::default() };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    write_synthetic(&generate_synthetic(&spec).unwrap(), a.path()).unwrap();
    write_synthetic(&generate_synthetic(&spec).unwrap(), b.path()).unwrap();
    for name in ["data.csv", "schema.toml"] {
        assert_eq!(
            std::fs::read(a.path().join(name)).unwrap(),
            std::fs::read(b.path().join(name)).unwrap()
        );
    }
}

#[test]
fn positive_rate_is_respected() {
    let spec = SyntheticSpec { n_rows: 10_000, positive_rate: 0.2, ..SyntheticSpec::default() };
    let d = generate_synthetic(&spec).unwrap();
    let rate = d.labels().iter().filter(|&&l| l == 1).count() as f64 / d.n_rows() as f64;
    // binomial sd at n = 10000 is 0.004, so 0.02 is five sigma
    assert!((rate - 0.2).abs() <= 0.02, "positive rate {rate}");
}

#[test]
fn missing_rate_controls_blank_cells() {
    let none = generate_synthetic(&SyntheticSpec { missing_rate: 0.0, n_rows: 2000, ..Default::default() }).unwrap();
    assert_eq!(none.missing_count(), 0);
    let some = generate_synthetic(&SyntheticSpec { missing_rate: 0.1, n_rows: 2000, ..Default::default() }).unwrap();
    let cells = (some.n_rows() * some.n_features()) as f64;
    let rate = some.missing_count() as f64 / cells;
    assert!((rate - 0.1).abs() < 0.01, "missing rate {rate}");
}

#[test]
fn written_csv_reloads_to_the_same_dataset() {
    let d = generate_synthetic(&SyntheticSpec { n_rows: 200, ..Default::default() }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_synthetic(&d, dir.path()).unwrap();
    let schema = load_schema(dir.path().join("schema.toml")).unwrap();
    let back = load_csv(dir.path().join("data.csv"), &schema, LABEL_COLUMN).unwrap();
    assert_eq!(back, d);
}
