use vvfrac::crack::{CrackComponent, CrackSet, OriginKind};
use vvfrac::domain::DomainSpec;
use vvfrac::errate::*;
use vvfrac::fem::{solve_equilibrium, SolverOptions};
use vvfrac::material::{unit_square_tension_profile, LoadTrajectory, MaterialModel};
use vvfrac::mesh::{build_mesh, MeshParams};

fn main() {
    let d = DomainSpec::unit_square(vec![0, 2], vec![]);
    let mat = MaterialModel::constant(1.0, 1.0, 1.0);
    let loads = LoadTrajectory::ramp_w(1.0, unit_square_tension_profile(0.05));
    let params = MeshParams { h: 1.0 / 64.0, tip_grading: 8.0 };
    for a in [0.2, 0.3, 0.4] {
        let t0 = std::time::Instant::now();
        let c = CrackComponent::new(vec![[0.0, 0.5], [a, 0.5]], OriginKind::BoundaryAnchored).unwrap();
        let crack = CrackSet::new(vec![c], 0.05).unwrap();
        let mesh = build_mesh(&d, &crack, params).unwrap();
        let u = solve_equilibrium(&mesh, &mat, &loads, 1.0, SolverOptions::default()).unwrap();
        let r = default_cutoff_radius(&mesh, &crack, 0, &loads).unwrap();
        let v = build_velocity_field(&mesh, &crack, 0, r, &loads).unwrap();
        let e = energy_release_rate(&mesh, &u, &mat, &loads, 1.0, &crack, 0, &v).unwrap();
        let fd = finite_difference_err(&d, &crack, 0, &mat, &loads, 1.0, params, 1e-3, SolverOptions::default()).unwrap();
        // cutoff doubling
        let v2 = build_velocity_field(&mesh, &crack, 0, 2.0 * r * 0.9, &loads);
        let g2 = v2.and_then(|v2| energy_release_rate(&mesh, &u, &mat, &loads, 1.0, &crack, 0, &v2)).map(|x| x.g);
        println!(
            "a={a}: nodes={} r={:.4} G={:.6} FD={:.6} rel={:.4}%  G(~2r)={:?} time={:.1}s",
            mesh.num_nodes(), r, e.g, fd, 100.0 * (e.g - fd).abs() / fd.abs(),
            g2.map(|g| format!("{:.6} ({:+.3}%)", g, 100.0*(g-e.g)/e.g)),
            t0.elapsed().as_secs_f64()
        );
    }
}
