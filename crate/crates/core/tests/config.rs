use rfd_nls::harness::{emit_report, parse_config, parse_config_str, RunConfig, VariantName};
use rfd_nls::{Error, ProblemId};

const MINIMAL: &str = r#"{ "problem": "cubic-sine", "J": 31, "N": 32 }"#;

#[test]
fn minimal_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config_str(MINIMAL).unwrap();
    assert_eq!(cfg.problem, ProblemId::CubicSine);
    assert_eq!((cfg.interior, cfg.steps), (31, 32));
    assert_eq!(cfg.variant, VariantName::SecondOrderInit);

    let path = dir.path().join("cfg.json");
    emit_report(&cfg, &path).unwrap();
    assert_eq!(parse_config(&path).unwrap(), cfg);
    // only the final file remains
    let names: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names, vec![std::ffi::OsString::from("cfg.json")]);
}

#[test]
fn full_config_round_trips() {
    let mut cfg = RunConfig::new(ProblemId::Soliton, 799, 10)
        .with_variant(VariantName::Mollified)
        .with_final_time(0.5);
    cfg.delta_star = Some(4.0);
    cfg.snapshot_times = vec![0.0, 0.25];
    cfg.seed = 7;
    cfg.levels = 3;
    let text = serde_json::to_string(&cfg).unwrap();
    assert_eq!(parse_config_str(&text).unwrap(), cfg);
}

#[test]
fn unknown_key_is_named() {
    let err = parse_config_str(r#"{ "problem": "zero", "J": 3, "N": 2, "tau": 0.1 }"#).unwrap_err();
    match err {
        Error::Config(msg) => assert!(msg.contains("unknown field `tau`"), "{msg}"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn missing_grid_size_is_rejected() {
    let err = parse_config_str(r#"{ "problem": "zero", "N": 2 }"#).unwrap_err();
    assert!(matches!(&err, Error::Config(m) if m.contains("missing field `J`")), "{err}");
}

#[test]
fn invalid_values_are_rejected() {
    for text in [
        r#"{ "problem": "nope", "J": 3, "N": 2 }"#,
        r#"{ "problem": "zero", "J": 0, "N": 2 }"#,
        r#"{ "problem": "zero", "J": 3, "N": 0 }"#,
        r#"{ "problem": "zero", "J": 3, "N": 2, "T": 0.0 }"#,
        r#"{ "problem": "zero", "J": 3, "N": 2, "delta_star": -1.0 }"#,
        r#"{ "problem": "zero", "J": 3, "N": 2, "variant": "rk4" }"#,
        "not json",
    ] {
        assert!(parse_config_str(text).is_err(), "{text}");
    }
    assert!(matches!(
        parse_config(std::path::Path::new("/nonexistent/cfg.json")),
        Err(Error::Io(_))
    ));
}

#[test]
fn output_dir_falls_back_to_environment() {
    let cfg = parse_config_str(MINIMAL).unwrap();
    std::env::set_var(rfd_nls::harness::OUTPUT_DIR_ENV, "/tmp/rfd-out");
    assert_eq!(cfg.resolve_output_dir(), std::path::PathBuf::from("/tmp/rfd-out"));
    let mut explicit = cfg.clone();
    explicit.output_dir = Some("here".into());
    assert_eq!(explicit.resolve_output_dir(), std::path::PathBuf::from("here"));
    std::env::remove_var(rfd_nls::harness::OUTPUT_DIR_ENV);
}
