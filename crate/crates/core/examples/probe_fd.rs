use vvfrac::crack::{CrackComponent, CrackSet, OriginKind};
use vvfrac::domain::DomainSpec;
use vvfrac::errate::*;
use vvfrac::fem::{solve_equilibrium, energies, SolverOptions};
use vvfrac::material::{unit_square_tension_profile, LoadTrajectory, MaterialModel};
use vvfrac::mesh::{build_mesh, MeshParams};

fn main() {
    let d = DomainSpec::unit_square(vec![0, 2], vec![]);
    let mat = MaterialModel::constant(1.0, 1.0, 1.0);
    let loads = LoadTrajectory::ramp_w(1.0, unit_square_tension_profile(0.05));
    let a: f64 = std::env::args().nth(1).unwrap().parse().unwrap();
    for hd in [64.0] {
        let params = MeshParams { h: 1.0 / hd, tip_grading: 8.0 };
        let c = CrackComponent::new(vec![[0.0, 0.5], [a, 0.5]], OriginKind::BoundaryAnchored).unwrap();
        let crack = CrackSet::new(vec![c], 0.05).unwrap();
        let mesh = build_mesh(&d, &crack, params).unwrap();
        let u = solve_equilibrium(&mesh, &mat, &loads, 1.0, SolverOptions::default()).unwrap();
        let r = default_cutoff_radius(&mesh, &crack, 0, &loads).unwrap();
        let v = build_velocity_field(&mesh, &crack, 0, r, &loads).unwrap();
        let e = energy_release_rate(&mesh, &u, &mat, &loads, 1.0, &crack, 0, &v).unwrap();
        print!("h=1/{hd}: G={:.6}", e.g);
        for delta in [5e-4, 1e-3, 2e-3, 4e-3] {
            let fd = finite_difference_err(&d, &crack, 0, &mat, &loads, 1.0, params, delta, SolverOptions::default()).unwrap();
            print!("  FD({delta:.0e})={:.6}", fd);
        }
        println!();
    }
}
