use num_complex::Complex64;
use vcpsense::rdm::{Rdm, RdmKind, RdmOrigin};
use vcpsense_experiments::output::{read_csv, read_rdm, write_rdm, write_table, Curve, COLUMNS, DOPPLER_SIGN};
use vcpsense_experiments::{emit_csv, ResultRow, ResultTable};

fn rows() -> Vec<ResultRow> {
    (0..3)
        .map(|i| ResultRow {
            sweep_name: "gamma0_db".into(),
            sweep_value: -30.0 + 5.0 * i as f64,
            metric: "sinr_db".into(),
            mean: 0.1 * i as f64 - 1.0 / 3.0,
            stderr: 0.25,
            trials: 50,
            seed: 7,
        })
        .collect()
}

#[test]
fn csv_has_canonical_header_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    emit_csv(&rows(), &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next().unwrap(), "sweep_name,sweep_value,metric,mean,stderr,trials,seed");
    assert_eq!(COLUMNS.join(","), text.lines().next().unwrap());
    assert_eq!(read_csv(&path).unwrap(), rows());
}

#[test]
fn empty_csv_still_has_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.csv");
    emit_csv(&[], &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap().trim(), COLUMNS.join(","));
    assert!(read_csv(&path).unwrap().is_empty());
}

#[test]
fn wrong_header_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "name,value\na,1\n").unwrap();
    let err = read_csv(&path).unwrap_err().to_string();
    assert!(err.contains("unexpected columns"), "{err}");
}

#[test]
fn table_writes_one_csv_per_curve_and_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let table = ResultTable {
        preset: "demo".into(),
        sweep_name: "gamma0_db".into(),
        curves: vec![
            Curve {
                name: "cos_ratio".into(),
                rows: rows(),
            },
            Curve {
                name: "vcp600_ccc".into(),
                rows: rows(),
            },
        ],
    };
    let files = write_table(&table, dir.path(), 50, 7, serde_json::json!({"seed": 7})).unwrap();
    let names: Vec<_> = files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    assert_eq!(names, ["demo__cos_ratio.csv", "demo__vcp600_ccc.csv"]);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("demo__manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["doppler_sign"], DOPPLER_SIGN);
    assert_eq!(manifest["trials"], 50);
    assert_eq!(manifest["config"]["seed"], 7);
    assert_eq!(manifest["files"].as_array().unwrap().len(), 2);
}

#[test]
fn rdm_dump_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let rdm = Rdm {
        values: ndarray::Array2::from_shape_fn((5, 7), |(k, l)| Complex64::new((k as f64 + 0.1).ln(), -(l as f64).sqrt() / 3.0)),
        delay_bin_s: 1.0 / 15.36e6,
        doppler_bin_hz: 333.3,
        kind: RdmKind::Ccc,
        origin: RdmOrigin::Vcp,
    };
    write_rdm(&rdm, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains(DOPPLER_SIGN));
    assert_eq!(read_rdm(&path).unwrap(), rdm);
}

#[test]
fn rdm_reader_names_problems() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    std::fs::write(&path, "# kind: ratio\nk,l,re,im\n").unwrap();
    let err = format!("{:#}", read_rdm(&path).unwrap_err());
    assert!(err.contains("origin") || err.contains("ndopp"), "{err}");
}
