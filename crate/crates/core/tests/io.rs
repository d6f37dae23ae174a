use proptest::prelude::*;
use quench_core::boundary::BoundaryData;
use quench_core::solver::{solve, SolveConfig};
use quench_core::{Error, Grid, ProblemParams, ScalarField};

proptest! {
    #[test]
    fn field_files_round_trip_bit_exactly(
        v in prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 12),
        h in 1e-6f64..10.0,
        o in -1e3f64..1e3,
    ) {
        let g = Grid::new(&[3, 4], &[h, h / 3.0], &[o, -o]).unwrap();
        let u = ScalarField::new(g, v).unwrap();
        let mut buf = Vec::new();
        u.write_to(&mut buf).unwrap();
        let back = ScalarField::read_from(buf.as_slice()).unwrap();
        prop_assert_eq!(back.grid(), u.grid());
        for (a, b) in back.values().iter().zip(u.values()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

#[test]
fn saved_solution_feeds_back_as_boundary_data() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid::square(17, -1.0, 1.0).unwrap();
    let pr = ProblemParams::new(2.0, 1.0, 1.0, 1.0)
        .unwrap()
        .with_regularization(0.0, 1e-5)
        .unwrap();
    let g = BoundaryData::OddPolynomial { quadratic: 0.5, cubic: 0.1 }.sample(&grid, &pr).unwrap();
    let rep = solve(&g, &pr, &SolveConfig::default()).unwrap();
    let path = dir.path().join("u.field");
    rep.solution.save(&path).unwrap();

    let file = BoundaryData::File { path: path.clone() };
    let again = file.sample(&grid, &pr).unwrap();
    assert_eq!(again, rep.solution);

    let other = Grid::square(9, -1.0, 1.0).unwrap();
    assert!(matches!(file.sample(&other, &pr), Err(Error::GridMismatch(_))));
}

#[test]
fn boundary_specs_parse_from_tagged_json() {
    let b: BoundaryData = serde_json::from_str(r#"{"kind":"radial","radius":0.3}"#).unwrap();
    assert_eq!(b, BoundaryData::Radial { radius: 0.3, center: [0.0, 0.0], sign: 1.0 });
    assert!(serde_json::from_str::<BoundaryData>(r#"{"kind":"radial","radius":0.3,"rad":1}"#).is_err());
    assert!(serde_json::from_str::<BoundaryData>(r#"{"kind":"spiral"}"#).is_err());
}
