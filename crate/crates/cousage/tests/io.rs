use std::path::{Path, PathBuf};

use cousage::matrix_io::{
    load_manifest_dir, matrix_to_csv, matrix_to_json, parse_json_matrix, read_csv_matrix,
};
use cousage::{load_matrix, write_matrix, Error, MatrixFormat};
use cousage_core::{ClientId, DependencyMatrix, LibraryId};
use proptest::prelude::*;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

#[test]
fn manifest_directory_matches_hand_built_matrix() {
    let (m, warnings) = load_manifest_dir(&fixture("poms")).unwrap();
    let expected = DependencyMatrix::from_str_lists([
        (
            "billing",
            vec![
                "junit:junit",
                "org.apache.commons:commons-email",
                "org.slf4j:slf4j-api",
            ],
        ),
        (
            "mailer",
            vec![
                "org.apache.commons:commons-email",
                "javax.mail:mail",
                "junit:junit",
            ],
        ),
        (
            "scheduler",
            vec!["org.quartz-scheduler:quartz", "org.slf4j:slf4j-api"],
        ),
    ])
    .unwrap();
    assert_eq!(m, expected);
    assert_eq!(warnings.len(), 1);
    assert!(warnings[0].contains("scheduler.xml"));
}

#[test]
fn format_is_inferred_from_path() {
    assert_eq!(
        MatrixFormat::from_path(&fixture("poms")),
        MatrixFormat::ManifestDir
    );
    assert_eq!(
        MatrixFormat::from_path(Path::new("m.CSV")),
        MatrixFormat::Csv
    );
    assert_eq!(
        MatrixFormat::from_path(Path::new("m.json")),
        MatrixFormat::Json
    );
}

#[test]
fn worked_example_fixture_loads() {
    let m = load_matrix(&fixture("worked_example.json"), MatrixFormat::Json).unwrap();
    assert_eq!((m.client_count(), m.library_count()), (8, 8));
    let s = m.stats();
    assert_eq!(s.avg_libs_per_client, 21.0 / 8.0);
    assert_eq!(s.median_libs_per_client, 2.5);
}

#[test]
fn missing_and_malformed_inputs_are_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let err = load_matrix(&missing, MatrixFormat::Json).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(!err.is_usage());

    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    assert!(load_matrix(&empty, MatrixFormat::Csv).is_err());

    let poms = dir.path().join("poms");
    std::fs::create_dir(&poms).unwrap();
    assert!(load_matrix(&poms, MatrixFormat::ManifestDir).is_err());
    std::fs::write(
        poms.join("broken.xml"),
        "<project>\n<dependencies>\n</project>\n",
    )
    .unwrap();
    match load_matrix(&poms, MatrixFormat::ManifestDir).unwrap_err() {
        Error::Xml { line, path, .. } => {
            assert_eq!(line, 3);
            assert!(path.ends_with("broken.xml"));
        }
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn files_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let m = load_matrix(&fixture("worked_example.json"), MatrixFormat::Json).unwrap();
    for (name, format) in [("m.csv", MatrixFormat::Csv), ("m.json", MatrixFormat::Json)] {
        let path = dir.path().join(name);
        write_matrix(&m, &path, format).unwrap();
        assert_eq!(load_matrix(&path, format).unwrap(), m);
    }
    assert!(write_matrix(&m, dir.path(), MatrixFormat::ManifestDir)
        .unwrap_err()
        .is_usage());
}

fn random_matrix() -> impl Strategy<Value = DependencyMatrix> {
    (1usize..12, 1usize..10).prop_flat_map(|(c, l)| {
        prop::collection::vec(prop::collection::vec(any::<bool>(), l), c).prop_map(move |rows| {
            let mut b = cousage_core::corpus::MatrixBuilder::new();
            for i in 0..l {
                b.declare_library(LibraryId::new(&format!("g{i}:a{i}")).unwrap())
                    .unwrap();
            }
            for (ci, row) in rows.iter().enumerate() {
                let libs = (0..l)
                    .filter(|&i| row[i])
                    .map(|i| LibraryId::new(&format!("g{i}:a{i}")).unwrap());
                b.add_client(ClientId::new(&format!("client-{ci}")).unwrap(), libs)
                    .unwrap();
            }
            b.build()
        })
    })
}

proptest! {
    #[test]
    fn csv_round_trip(m in random_matrix()) {
        let back = read_csv_matrix(matrix_to_csv(&m).as_bytes(), Path::new("m.csv")).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn json_round_trip(m in random_matrix()) {
        // JSON rows only name used libraries, so column order follows first
        // use and unused columns disappear
        let canonical = {
            let used = m.drop_unused_libraries();
            let rows: Vec<(ClientId, Vec<LibraryId>)> = used
                .clients()
                .iter()
                .zip(used.client_rows())
                .map(|(c, r)| (c.clone(), r.iter().map(|&l| used.libraries()[l].clone()).collect()))
                .collect();
            DependencyMatrix::from_client_lists(rows).unwrap()
        };
        let back = parse_json_matrix(&matrix_to_json(&m), Path::new("m.json")).unwrap();
        prop_assert_eq!(&back, &canonical);
        let again = parse_json_matrix(&matrix_to_json(&back), Path::new("m.json")).unwrap();
        prop_assert_eq!(again, back);
    }
}
