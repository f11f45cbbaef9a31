use biot_precond::assembly::Formulation;
use biot_precond::sweep::{emit_table, run_sweep, SweepConfig, SweepResult, TableFormat};
use biot_precond::PrecKind;

fn point(precs: Vec<PrecKind>, n: usize) -> SweepConfig {
    SweepConfig {
        e_list: vec![3e4],
        nu_list: vec![0.4],
        kappa_list: vec![1e7],
        mesh_list: vec![n],
        preconditioners: precs,
        ..SweepConfig::default()
    }
}

#[test]
fn unpreconditioned_minres_is_far_slower() {
    let res = run_sweep(&point(vec![PrecKind::P1III, PrecKind::None], 16)).unwrap();
    assert_eq!(res.rows.len(), 2);
    let get = |k| res.rows.iter().find(|r| r.prec == k).unwrap();
    let (p1, none) = (get(PrecKind::P1III), get(PrecKind::None));
    assert!(p1.converged);
    assert!(!none.converged || none.iterations >= 5 * p1.iterations, "{} vs {}", none.iterations, p1.iterations);
    assert!(!res.all_converged() || none.converged);
}

#[test]
fn sweep_is_complete_and_deterministic() {
    let cfg = SweepConfig {
        e_list: vec![3e4, 3e6],
        nu_list: vec![0.4, 0.499],
        kappa_list: vec![1.0, 1e7],
        mesh_list: vec![4, 8],
        workers: Some(2),
        ..SweepConfig::default()
    };
    let a = run_sweep(&cfg).unwrap();
    let b = run_sweep(&cfg).unwrap();
    assert_eq!(a.rows.len(), cfg.num_points());
    assert_eq!(a.rows.len(), 2 * 2 * 2 * 2 * 3);
    let strip = |r: &SweepResult| {
        let mut r = r.clone();
        r.metadata.timestamp = None;
        r.rows.iter_mut().for_each(|row| row.wall_time_s = 0.0);
        emit_table(&r, TableFormat::Csv).unwrap()
    };
    assert_eq!(strip(&a), strip(&b));
    assert!(a.all_converged());
}

#[test]
fn condition_numbers_only_on_coarsest_mesh() {
    let mut cfg = point(vec![PrecKind::P1III], 4);
    cfg.mesh_list = vec![4, 8];
    cfg.with_condition_numbers = true;
    let res = run_sweep(&cfg).unwrap();
    for row in &res.rows {
        assert_eq!(row.cond_number.is_some(), row.n == 4);
    }
    let c = res.rows[0].cond_number.unwrap();
    assert!(c >= 1.0 && c.is_finite());
}

#[test]
fn two_field_sweep_and_roundtrips() {
    let mut cfg = point(vec![PrecKind::PII], 8);
    cfg.formulation = Formulation::TwoField;
    let res = run_sweep(&cfg).unwrap();
    assert!(res.all_converged());
    let csv = emit_table(&res, TableFormat::Csv).unwrap();
    let back = SweepResult::from_csv(&csv).unwrap();
    assert_eq!(back.rows.len(), 1);
    assert_eq!(back.rows[0].iterations, res.rows[0].iterations);
    let json = emit_table(&res, TableFormat::Json).unwrap();
    assert_eq!(SweepResult::from_json(&json).unwrap(), res);
}

#[test]
fn mismatched_formulation_is_rejected() {
    let mut cfg = point(vec![PrecKind::PII, PrecKind::P1III], 4);
    cfg.formulation = Formulation::ThreeField;
    let err = run_sweep(&cfg).unwrap_err();
    assert!(err.to_string().contains("pII"));
}

#[test]
fn unknown_config_fields_are_rejected() {
    assert!(SweepConfig::from_json(r#"{"E_list": [3e4], "mesh": [16]}"#).is_err());
    assert!(SweepConfig::from_json(r#"{"kappa_list": []}"#).is_err());
    let cfg = SweepConfig::from_json(r#"{"E_list": [3e5], "preconditioners": ["p3"]}"#).unwrap();
    assert_eq!(cfg.preconditioners, vec![PrecKind::P3III]);
    assert_eq!(cfg.mesh_list, vec![16, 32, 64]);
}
