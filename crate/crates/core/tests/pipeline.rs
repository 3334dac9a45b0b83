//! End-to-end paths through the public API: files on disk, decomposition,
//! fields and bounds, under both execution policies.

use std::path::PathBuf;

use dae_pspec::fixtures::{jordan_example, oscillatory_example};
use dae_pspec::io::{field_csv, parse_field_csv, read_matrix};
use dae_pspec::linalg::{c64, re, CMatrix};
use dae_pspec::pencil::{decompose, finite_eigenvalues, Pencil};
use dae_pspec::pseudospectra::{pseudospectra_grid, GridSpec};
use dae_pspec::transient::{exp_norm_curve, time_grid};
use dae_pspec::Execution;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn load(name: &str) -> CMatrix {
    read_matrix(&data(name)).unwrap().to_dense()
}

#[test]
fn shipped_matrices_reproduce_the_fixtures() {
    for (stem, fixture) in [("jordan", jordan_example()), ("oscillatory", oscillatory_example())] {
        let a = load(&format!("{stem}_A.mtx"));
        let e = load(&format!("{stem}_E.mtx"));
        assert_eq!(&a, fixture.a(), "{stem} A");
        assert_eq!(&e, fixture.e(), "{stem} E");
    }
}

#[test]
fn file_pencil_has_the_expected_finite_spectrum() {
    let p = Pencil::new(load("oscillatory_A.mtx"), load("oscillatory_E.mtx")).unwrap();
    let fd = decompose(&p, re(0.0), None).unwrap();
    assert_eq!(fd.d, 1);
    let mut lam = finite_eigenvalues(&fd);
    lam.sort_by(|x, y| x.im.total_cmp(&y.im));
    for (got, want) in lam.iter().zip([c64(-1.0, -5.0), c64(-1.0, 5.0)]) {
        assert!((got - want).norm() < 1e-10, "{got} vs {want}");
    }
}

#[test]
fn policies_agree_bit_for_bit() {
    let fd = decompose(&jordan_example(), re(0.0), None).unwrap();
    let grid = GridSpec::new(-3.0, 1.0, -2.0, 2.0, 33, 29).unwrap();
    let a = pseudospectra_grid(&fd, &grid, Execution::Sequential).unwrap();
    let b = pseudospectra_grid(&fd, &grid, Execution::Parallel).unwrap();
    assert_eq!(a.sigmin, b.sigmin);
    let times = time_grid(5.0, 51);
    let ca = exp_norm_curve(&fd, &times, Execution::Sequential).unwrap();
    let cb = exp_norm_curve(&fd, &times, Execution::Parallel).unwrap();
    assert_eq!(ca.norms, cb.norms);
}

#[test]
fn csv_dump_round_trips_exactly() {
    let fd = decompose(&oscillatory_example(), re(0.0), None).unwrap();
    let grid = GridSpec::new(-2.0, 0.5, -6.0, 6.0, 17, 21).unwrap();
    let f = pseudospectra_grid(&fd, &grid, Execution::default()).unwrap();
    let rows = parse_field_csv(&field_csv(&f)).unwrap();
    assert_eq!(rows.len(), grid.len());
    for ((z, s), (zr, sr)) in f.points().zip(rows.iter().map(|r| (c64(r.0, r.1), r.2))) {
        assert_eq!(z, zr);
        assert_eq!(s, sr);
    }
}
