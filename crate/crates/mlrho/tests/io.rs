use mlrho::io::{
    partial_path, read_snapshot, read_weight_table, sidecar_path, write_snapshot, write_weight_table, LoadedWeight,
};
use mlrho::random::band_limited_pair;
use mlrho::weights_norms::WeightTable;
use mlrho::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn snapshot_roundtrip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.bin");
    let grid = Grid::new(8, 5.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let f = band_limited_pair(&grid, 3, 4, 1.0, &mut rng);
    write_snapshot(&path, &grid, 0.125, &f).unwrap();
    assert!(!partial_path(&path).exists());
    assert_eq!(std::fs::metadata(&path).unwrap().len(), 6 * 8 * 512);
    let s = read_snapshot(&path).unwrap();
    assert_eq!(s.grid, grid);
    assert_eq!(s.t, 0.125);
    for c in 0..3 {
        assert_eq!(s.fields.e().component(c), f.e().component(c));
        assert_eq!(s.fields.b().component(c), f.b().component(c));
    }
}

#[test]
fn truncated_snapshot_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.bin");
    let grid = Grid::new(8, 4.0).unwrap();
    write_snapshot(&path, &grid, 0.0, &FieldPair::zeros(&grid)).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
    assert_eq!(read_snapshot(&path).unwrap_err().code(), "E_FORMAT");
    std::fs::remove_file(sidecar_path(&path)).unwrap();
    assert_eq!(read_snapshot(&path).unwrap_err().code(), "E_IO");
}

#[test]
fn weight_table_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.bin");
    let dims = [3, 4, 5];
    let values = (0..60).map(|i| 1.0 + 0.1 * i as f64).collect();
    let w = LoadedWeight {
        table: WeightTable {
            dims,
            origin: [-1.0, -2.0, -3.0],
            spacing: [1.0, 0.5, 0.25],
            values,
        },
        c_w: 0.3,
        p_w: 4,
    };
    write_weight_table(&path, &w).unwrap();
    assert_eq!(read_weight_table(&path).unwrap(), w);
}

#[test]
fn nonpositive_weight_table_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let w = LoadedWeight {
        table: WeightTable {
            dims: [2, 2, 2],
            origin: [0.0; 3],
            spacing: [1.0; 3],
            values: vec![1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0],
        },
        c_w: 1.0,
        p_w: 2,
    };
    assert!(write_weight_table(&dir.path().join("w.bin"), &w).is_err());
}
