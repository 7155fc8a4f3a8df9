use supercocycle_cli::spec::{parse_chern_spec, parse_cocycle_spec, parse_euler_spec, parse_json, parse_model};
use supercocycle_core::chern::transgression_check;
use supercocycle_core::cocycles::{is_cocycle_k, reduce_class};
use supercocycle_core::euler::{euler_cocycle, holomorphy_defect};
use supercocycle_core::scalars::Scalar;
use supercocycle_core::Error;

fn data(name: &str) -> String {
    std::fs::read_to_string(format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

#[test]
fn model_shapes() {
    let chart = parse_model(&parse_json("3").unwrap()).unwrap();
    assert_eq!(chart.is_chart(), Some(3));
    assert_eq!(parse_model(&parse_json(r#"{"chart": 2}"#).unwrap()).unwrap().is_chart(), Some(2));
    let torus = parse_model(&parse_json(r#"{"torus": 2}"#).unwrap()).unwrap();
    assert!(torus.index("e1").is_some());
    let cdga = r#"{"generators": [{"name": "a", "degree": 2}, {"name": "b", "degree": 3}],
                   "differential": {"b": "a^2"}, "max_degree": 6}"#;
    let m = parse_model(&parse_json(cdga).unwrap()).unwrap();
    assert!(m.index("b").is_some() && m.is_chart().is_none());
}

#[test]
fn cdga_differential_must_be_constant_coefficient() {
    let bad = r#"{"generators": [{"name": "a", "degree": 2}, {"name": "b", "degree": 3}],
                  "differential": {"b": "ell*a^2"}, "max_degree": 6}"#;
    assert!(parse_model(&parse_json(bad).unwrap()).is_err());
}

#[test]
fn json_syntax_errors_carry_byte_offsets() {
    match parse_json("{\n  \"model\": 2,\n  oops\n}") {
        // Line 3 starts at byte 16; the stray token begins two bytes in.
        Err(Error::ParseError { pos, .. }) => assert_eq!(pos, 18),
        other => panic!("{other:?}"),
    }
}

#[test]
fn chern_file() {
    let a = parse_chern_spec(&data("chern_rank11.json")).unwrap();
    assert!(transgression_check(&a, None).unwrap().is_zero());
}

#[test]
fn chern_rejects_wrong_parity_blocks() {
    let text = r#"{"model": 2, "grading": [1, 1],
                   "components": [{"j": 0, "matrix": [["x1", "0"], ["0", "0"]]}]}"#;
    assert!(parse_chern_spec(text).is_err());
}

#[test]
fn euler_files() {
    let e = parse_euler_spec(&data("euler_chart6.json")).unwrap();
    assert!(e.h.is_none());
    assert!(holomorphy_defect(&e.curvature).unwrap().is_zero());
    assert!(euler_cocycle(&e.curvature, None).is_ok());
    let t = parse_euler_spec(&data("euler_torus.json")).unwrap();
    assert!(matches!(euler_cocycle(&t.curvature, None), Err(Error::NoWitness)));
}

#[test]
fn euler_validation() {
    let not_square = r#"{"model": 4, "rank": 2, "F": [["0", "d(x1)*d(x2)"]]}"#;
    assert!(matches!(parse_euler_spec(not_square), Err(Error::NotSquare)));
    let symmetric = r#"{"model": 4, "rank": 2, "F": [["0", "d(x1)*d(x2)"], ["d(x1)*d(x2)", "0"]]}"#;
    assert!(parse_euler_spec(symmetric).is_err());
    let with_h = r#"{"model": 4, "rank": 2, "F": [["0", "0"], ["0", "0"]], "H": "0"}"#;
    assert!(parse_euler_spec(with_h).unwrap().h.is_some());
}

#[test]
fn cocycle_files() {
    let k = parse_cocycle_spec(&data("cocycle_exact.json")).unwrap();
    assert!(is_cocycle_k(&k).unwrap());
    assert_eq!(reduce_class(&k).unwrap().class, Scalar::int(3));
    let broken = parse_cocycle_spec(&data("cocycle_broken.json")).unwrap();
    assert!(matches!(reduce_class(&broken), Err(Error::NotCocycle)));
    assert!(matches!(parse_cocycle_spec(&data("bad_expr.json")), Err(Error::ParseError { pos: 5, .. })));
    assert!(parse_cocycle_spec(r#"{"model": 2, "complex": "E", "Z": "1"}"#).is_err());
}
