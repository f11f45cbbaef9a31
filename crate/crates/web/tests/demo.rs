use biot_precond_web::{condition_number_impl, select_beta_impl, solve_footing_impl};

#[test]
fn beta_rules() {
    let lam = 0.4 * 3e4 / (1.4 * 0.2);
    assert!((select_beta_impl("max", 3e4, 0.4, 1e7).unwrap() - lam).abs() < 1e-9);
    assert_eq!(select_beta_impl("min", 3e6, 0.499, 1.0).unwrap(), 1.0);
    assert_eq!(select_beta_impl("kappa", 3e4, 0.4, 10.0).unwrap(), 10.0);
    assert!(select_beta_impl("median", 3e4, 0.4, 10.0).is_err());
    assert!(select_beta_impl("max", 3e4, 0.5, 10.0).is_err());
}

#[test]
fn footing_solution_shapes() {
    let s = solve_footing_impl(8, "p1", 3e4, 0.4, 1e3).unwrap();
    assert!(s.converged);
    assert_eq!(s.displacement.len(), 81);
    assert_eq!(s.pressure.len(), 128);
    assert_eq!(s.history.len(), s.iterations + 1);
    // the load pushes the top surface down
    let top_center = s.vertices.iter().position(|v| v[0] == 0.0 && v[1] == 4.0).unwrap();
    assert!(s.displacement[top_center][1] < 0.0);
    let json = serde_json::to_string(&s).unwrap();
    assert!(json.contains("\"iterations\""));
}

#[test]
fn two_field_solution_uses_cell_pressures() {
    let s = solve_footing_impl(8, "pII", 3e4, 0.4, 1e3).unwrap();
    assert!(s.converged);
    assert_eq!(s.pressure.len(), 128);
}

#[test]
fn condition_and_limits() {
    let c = condition_number_impl(4, "p2", 3e4, 0.49, 1e7).unwrap();
    assert!(c > 1.0 && c < 100.0);
    assert!(condition_number_impl(32, "p1", 3e4, 0.4, 1e7).is_err());
    assert!(solve_footing_impl(64, "p1", 3e4, 0.4, 1e7).is_err());
    assert!(solve_footing_impl(8, "p9", 3e4, 0.4, 1e7).is_err());
}
