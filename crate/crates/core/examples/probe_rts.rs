// scratch probe: lin/pw only with LP timing
use ccopf_core::*;

fn main() {
    let case = load_case_path(std::path::Path::new("cases/rts24_synthetic.json")).unwrap();
    let flow = build_flow_matrix(&case).unwrap();
    let fm = FluctuationModel::from_std_and_rho(&[9.4, 13.1], 0.2).unwrap();
    let thr = (1.5 * fm.total_std(), -1.5 * fm.total_std());
    let cfg = FormulationConfig::uniform(ConstraintKind::Linear, PolicyForm::Piecewise, 0.05, 0.5);
    let t = std::time::Instant::now();
    let r = solve(&case, &flow, &fm, &cfg, Some(thr), &SolveOptions::default()).unwrap();
    println!("status={:?} time={:?}", r.status, t.elapsed());
}
