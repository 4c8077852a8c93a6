//! Energy release rates by the domain-integral derivative formula.
//!
//! The derivative of the elastic energy with respect to the arc length of
//! one crack component is assembled from four volume terms built on a
//! velocity field: a compactly supported vector field equal to the tip
//! tangent on a plateau disk around the tip and decaying to zero at the
//! cutoff radius. With `u` the equilibrium displacement and `rho` the
//! velocity field,
//!
//! ```text
//! dE/ds =  1/2 int (DC rho) Eu : Eu          (material gradient)
//!        -     int  C Eu : (grad u grad rho) (convection)
//!        + 1/2 int (C Eu : Eu) div rho       (dilation)
//!        +     int  f . (grad u rho)         (force)
//! ```
//!
//! and the energy release rate is `G = -dE/ds`. The stress `C Eu` acts on
//! the symmetric part of the gradient throughout. The value is independent
//! of how the crack might be extended; numerically this shows up as
//! insensitivity to the cutoff radius and plateau shape, which
//! [`extension_independence_check`] quantifies.

use serde::Serialize;

use crate::crack::{CrackComponent, CrackSet};
use crate::fem::{
    element_gradient, energies, solve_equilibrium, tri_quadrature, DisplacementField,
    SolverOptions,
};
use crate::geom::{add, dist, point_segment_distance, scale, Pt};
use crate::material::{LoadTrajectory, MaterialModel, ScalarField};
use crate::mesh::{build_mesh, CrackedMesh, MeshParams};
use crate::{Error, Result};

/// Compactly supported velocity field attached to one crack tip.
#[derive(Debug, Clone)]
pub struct VelocityField {
    pub tip: Pt,
    /// Unit tangent at the tip; the plateau value of the field.
    pub tangent: Pt,
    /// Cutoff radius: the field vanishes outside this disk.
    pub cutoff_radius: f64,
    /// Plateau radius: the field equals the tangent inside this disk.
    pub plateau_radius: f64,
    /// Nodal values, two components per node.
    pub nodal: Vec<f64>,
    pub component_index: usize,
}

/// Cubic ramp from 1 at `r_in` to 0 at `r`, continuously differentiable.
fn cutoff_profile(d: f64, r_in: f64, r: f64) -> f64 {
    if d <= r_in {
        1.0
    } else if d >= r {
        0.0
    } else {
        let s = (d - r_in) / (r - r_in);
        1.0 - s * s * (3.0 - 2.0 * s)
    }
}

/// Distance from a point to the mesh's outer boundary.
fn distance_to_mesh_boundary(mesh: &CrackedMesh, p: Pt) -> f64 {
    mesh.boundary_edges
        .iter()
        .map(|e| point_segment_distance(p, mesh.nodes[e.a], mesh.nodes[e.b]))
        .fold(f64::INFINITY, f64::min)
}

/// Default cutoff radius for tip `m`: slightly inside the smallest of the
/// distance to the boundary (less the boundary-datum support depth when a
/// boundary displacement is applied), the distance to the other components,
/// and `2 eta`.
pub fn default_cutoff_radius(
    mesh: &CrackedMesh,
    crack: &CrackSet,
    m: usize,
    loads: &LoadTrajectory,
) -> Result<f64> {
    let (tip, _) = crack.tip_and_tangent(m)?;
    let mut cap = 2.0 * crack.eta;
    let d_boundary = distance_to_mesh_boundary(mesh, tip);
    let w_depth = if loads.w_profile.is_zero() {
        0.0
    } else {
        crack.eta
    };
    cap = cap.min(d_boundary - w_depth);
    let d_other = crack.distance_to_other_components(tip, m);
    cap = cap.min(d_other);
    Ok(0.9 * cap)
}

/// Build the velocity field for tip `m` with cutoff radius `r`.
///
/// Fails with [`Error::TipTooClose`] when the disk of radius `r` reaches
/// the boundary, the support of the boundary datum, another component, or
/// when fewer than four local element sizes fit under `r`; results at such
/// configurations are not meaningful.
pub fn build_velocity_field(
    mesh: &CrackedMesh,
    crack: &CrackSet,
    m: usize,
    r: f64,
    loads: &LoadTrajectory,
) -> Result<VelocityField> {
    let (tip, tangent) = crack.tip_and_tangent(m)?;
    let d_boundary = distance_to_mesh_boundary(mesh, tip);
    if r >= d_boundary {
        return Err(Error::TipTooClose(format!(
            "cutoff radius {r:.4} reaches the boundary at distance {d_boundary:.4}"
        )));
    }
    if !loads.w_profile.is_zero() && r > d_boundary - crack.eta {
        return Err(Error::TipTooClose(format!(
            "cutoff radius {r:.4} overlaps the boundary-datum support (boundary at {d_boundary:.4}, support depth {:.4})",
            crack.eta
        )));
    }
    let d_other = crack.distance_to_other_components(tip, m);
    if r >= d_other {
        return Err(Error::TipTooClose(format!(
            "cutoff radius {r:.4} reaches another component at distance {d_other:.4}"
        )));
    }
    let local = if m < mesh.tip_nodes.len() {
        mesh.node_size[mesh.tip_nodes[m]]
    } else {
        mesh.size_near(tip)
    };
    if r < 4.0 * local {
        return Err(Error::TipTooClose(format!(
            "cutoff radius {r:.4} smaller than 4 local element sizes ({:.4})",
            4.0 * local
        )));
    }
    let r_in = 0.5 * r;
    let mut nodal = vec![0.0; 2 * mesh.num_nodes()];
    for (n, p) in mesh.nodes.iter().enumerate() {
        let phi = cutoff_profile(dist(*p, tip), r_in, r);
        if phi != 0.0 {
            nodal[2 * n] = phi * tangent[0];
            nodal[2 * n + 1] = phi * tangent[1];
        }
    }
    Ok(VelocityField {
        tip,
        tangent,
        cutoff_radius: r,
        plateau_radius: r_in,
        nodal,
        component_index: m,
    })
}

/// One tip's energy release rate with its term breakdown.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ErrEntry {
    /// Energy release rate `G = -dE/ds`; the sum of the four terms below.
    pub g: f64,
    /// `-1/2 int (DC rho) Eu : Eu`
    pub material_gradient: f64,
    /// `+ int C Eu : (grad u grad rho)`
    pub convection: f64,
    /// `-1/2 int (C Eu : Eu) div rho`
    pub dilation: f64,
    /// `- int f . (grad u rho)`
    pub force: f64,
    pub cutoff_radius: f64,
    pub plateau_radius: f64,
}

/// Energy release rate at tip `m` from an equilibrium state and a velocity
/// field built for that tip.
pub fn energy_release_rate(
    mesh: &CrackedMesh,
    u: &DisplacementField,
    material: &MaterialModel,
    loads: &LoadTrajectory,
    t: f64,
    crack: &CrackSet,
    m: usize,
    velocity: &VelocityField,
) -> Result<ErrEntry> {
    if velocity.component_index != m {
        return Err(Error::Mismatch(format!(
            "velocity field was built for tip {} but tip {m} was requested",
            velocity.component_index
        )));
    }
    let (tip, _) = crack.tip_and_tangent(m)?;
    if dist(tip, velocity.tip) > 1e-12 {
        return Err(Error::Mismatch(
            "velocity field tip does not match the crack tip".into(),
        ));
    }
    if u.num_nodes != mesh.num_nodes() {
        return Err(Error::Mismatch("displacement/mesh node count".into()));
    }
    let r = velocity.cutoff_radius;
    let (_, af, _) = loads.amplitudes(t);
    let force_on = af != 0.0 && !loads.f_profile.is_zero();
    let material_on = !(matches!(material.lambda, ScalarField::Constant(_))
        && matches!(material.mu, ScalarField::Constant(_)));

    let mut t_material = 0.0;
    let mut t_convection = 0.0;
    let mut t_dilation = 0.0;
    let mut t_force = 0.0;
    for tri in &mesh.tris {
        let p = [mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]];
        // Quick support rejection.
        let reach = r
            + dist(p[0], p[1])
                .max(dist(p[1], p[2]))
                .max(dist(p[2], p[0]));
        if dist(p[0], velocity.tip) > reach {
            continue;
        }
        let rho_nodes = [
            [velocity.nodal[2 * tri[0]], velocity.nodal[2 * tri[0] + 1]],
            [velocity.nodal[2 * tri[1]], velocity.nodal[2 * tri[1] + 1]],
            [velocity.nodal[2 * tri[2]], velocity.nodal[2 * tri[2] + 1]],
        ];
        let rho_zero = rho_nodes.iter().all(|v| v[0] == 0.0 && v[1] == 0.0);
        if rho_zero {
            continue;
        }
        let grho = element_gradient(mesh, &velocity.nodal, *tri);
        let grho_norm =
            grho[0][0].abs() + grho[0][1].abs() + grho[1][0].abs() + grho[1][1].abs();
        let area2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
            - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        let area = 0.5 * area2;
        let centroid = scale(add(add(p[0], p[1]), p[2]), 1.0 / 3.0);
        let (lambda, mu) = material.lame(centroid);
        let gu = element_gradient(mesh, &u.u, *tri);
        let div_u = gu[0][0] + gu[1][1];
        let eu01 = 0.5 * (gu[0][1] + gu[1][0]);
        let eu_frob2 = gu[0][0] * gu[0][0] + 2.0 * eu01 * eu01 + gu[1][1] * gu[1][1];

        if grho_norm != 0.0 {
            // grad u grad rho, entries (i,j) = du_i/dx_k drho_k/dx_j
            let mut gugr = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    gugr[i][j] = gu[i][0] * grho[0][j] + gu[i][1] * grho[1][j];
                }
            }
            // C Eu : (grad u grad rho): the stress is symmetric, so only
            // the symmetric part of the product contributes.
            let stress = [
                [lambda * div_u + 2.0 * mu * gu[0][0], 2.0 * mu * eu01],
                [2.0 * mu * eu01, lambda * div_u + 2.0 * mu * gu[1][1]],
            ];
            let ceu_gugr = stress[0][0] * gugr[0][0]
                + stress[1][1] * gugr[1][1]
                + stress[0][1] * (gugr[0][1] + gugr[1][0]);
            t_convection += -area * ceu_gugr;
            let div_rho = grho[0][0] + grho[1][1];
            let energy_density = lambda * div_u * div_u + 2.0 * mu * eu_frob2;
            t_dilation += 0.5 * area * energy_density * div_rho;
        }
        if material_on || force_on {
            let fd_step =
                (mesh.node_size[tri[0]] + mesh.node_size[tri[1]] + mesh.node_size[tri[2]]) / 3.0;
            for (q, shape) in tri_quadrature(p) {
                let rho_q = [
                    shape[0] * rho_nodes[0][0]
                        + shape[1] * rho_nodes[1][0]
                        + shape[2] * rho_nodes[2][0],
                    shape[0] * rho_nodes[0][1]
                        + shape[1] * rho_nodes[1][1]
                        + shape[2] * rho_nodes[2][1],
                ];
                if rho_q[0] == 0.0 && rho_q[1] == 0.0 {
                    continue;
                }
                if material_on {
                    let gl = material.lambda.grad(q, fd_step);
                    let gm = material.mu.grad(q, fd_step);
                    let dl = gl[0] * rho_q[0] + gl[1] * rho_q[1];
                    let dm = gm[0] * rho_q[0] + gm[1] * rho_q[1];
                    t_material += area / 3.0 * 0.5 * (dl * div_u * div_u + 2.0 * dm * eu_frob2);
                }
                if force_on {
                    let f = loads.f_at(t, q);
                    let gu_rho = [
                        gu[0][0] * rho_q[0] + gu[0][1] * rho_q[1],
                        gu[1][0] * rho_q[0] + gu[1][1] * rho_q[1],
                    ];
                    t_force += area / 3.0 * (f[0] * gu_rho[0] + f[1] * gu_rho[1]);
                }
            }
        }
    }
    let material_gradient = -t_material;
    let convection = -t_convection;
    let dilation = -t_dilation;
    let force = -t_force;
    Ok(ErrEntry {
        g: material_gradient + convection + dilation + force,
        material_gradient,
        convection,
        dilation,
        force,
        cutoff_radius: velocity.cutoff_radius,
        plateau_radius: velocity.plateau_radius,
    })
}

/// Per-tip outcome in a full report: tips whose velocity field cannot be
/// built are flagged, never silently zeroed.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TipErr {
    Ok(ErrEntry),
    Infeasible { reason: String },
}

impl TipErr {
    pub fn value(&self) -> Option<f64> {
        match self {
            TipErr::Ok(e) => Some(e.g),
            TipErr::Infeasible { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrReport {
    pub tips: Vec<TipErr>,
    pub t: f64,
}

impl ErrReport {
    /// All-tip values when every tip is feasible.
    pub fn values(&self) -> Option<Vec<f64>> {
        self.tips.iter().map(|t| t.value()).collect()
    }
}

/// Energy release rate vector over all tips, with default cutoff radii.
pub fn err_vector(
    mesh: &CrackedMesh,
    u: &DisplacementField,
    material: &MaterialModel,
    loads: &LoadTrajectory,
    t: f64,
    crack: &CrackSet,
) -> Result<ErrReport> {
    let mut tips = Vec::with_capacity(crack.num_tips());
    for m in 0..crack.num_tips() {
        let entry = default_cutoff_radius(mesh, crack, m, loads)
            .and_then(|r| build_velocity_field(mesh, crack, m, r, loads))
            .and_then(|v| energy_release_rate(mesh, u, material, loads, t, crack, m, &v));
        match entry {
            Ok(e) => tips.push(TipErr::Ok(e)),
            Err(Error::TipTooClose(reason)) => tips.push(TipErr::Infeasible { reason }),
            Err(e) => return Err(e),
        }
    }
    Ok(ErrReport { tips, t })
}

/// Cutoff sensitivity: the numerical surrogate for independence of the
/// crack's hypothetical extension. The velocity field is the only
/// extension-dependent ingredient of the formula, so the spread of `G`
/// over cutoff radii and plateau shapes measures the defect.
#[derive(Debug, Clone, Serialize)]
pub struct SensitivityReport {
    pub values_by_radius: Vec<(f64, f64)>,
    pub values_by_plateau: Vec<(f64, f64)>,
    /// Max relative spread over all evaluated velocity fields.
    pub relative_spread: f64,
}

pub fn extension_independence_check(
    mesh: &CrackedMesh,
    u: &DisplacementField,
    material: &MaterialModel,
    loads: &LoadTrajectory,
    t: f64,
    crack: &CrackSet,
    m: usize,
    radii: &[f64],
) -> Result<SensitivityReport> {
    if radii.len() < 2 {
        return Err(Error::Mismatch(
            "extension independence needs at least two radii".into(),
        ));
    }
    let mut values_by_radius = Vec::new();
    let mut all = Vec::new();
    for &r in radii {
        let v = build_velocity_field(mesh, crack, m, r, loads)?;
        let e = energy_release_rate(mesh, u, material, loads, t, crack, m, &v)?;
        values_by_radius.push((r, e.g));
        all.push(e.g);
    }
    // Plateau-shape perturbations at the largest radius.
    let r = radii.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (tip, tangent) = crack.tip_and_tangent(m)?;
    let mut values_by_plateau = Vec::new();
    for frac in [0.3, 0.5, 0.7] {
        let mut v = build_velocity_field(mesh, crack, m, r, loads)?;
        let r_in = frac * r;
        for (n, p) in mesh.nodes.iter().enumerate() {
            let phi = cutoff_profile(dist(*p, tip), r_in, r);
            v.nodal[2 * n] = phi * tangent[0];
            v.nodal[2 * n + 1] = phi * tangent[1];
        }
        v.plateau_radius = r_in;
        let e = energy_release_rate(mesh, u, material, loads, t, crack, m, &v)?;
        values_by_plateau.push((frac, e.g));
        all.push(e.g);
    }
    let max = all.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = all.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = all.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
    let relative_spread = if scale > 0.0 { (max - min) / scale } else { 0.0 };
    Ok(SensitivityReport {
        values_by_radius,
        values_by_plateau,
        relative_spread,
    })
}

/// Straight tangent prolongation of a component by `delta` (no
/// admissibility filtering; used by the finite-difference oracle).
pub fn extend_straight(component: &CrackComponent, delta: f64) -> Result<CrackComponent> {
    let tip = component.tip();
    let tan = component.tip_tangent();
    let mut verts = component.vertices().to_vec();
    crate::crack::append_merged(&mut verts, add(tip, scale(tan, delta)));
    CrackComponent::with_frozen_len(verts, component.origin_kind(), component.frozen_prefix_len())
}

/// Central finite difference of the elastic energy over tangent straight
/// extensions: `(E(l - delta) - E(l + delta)) / (2 delta)`, each energy
/// from its own conforming remesh and solve. The independent oracle for
/// the domain-integral value.
pub fn finite_difference_err(
    domain: &crate::domain::DomainSpec,
    crack: &CrackSet,
    m: usize,
    material: &MaterialModel,
    loads: &LoadTrajectory,
    t: f64,
    params: MeshParams,
    delta: f64,
    solver: SolverOptions,
) -> Result<f64> {
    let base = crack.component(m)?;
    let shorter = crack.with_component(m, base.truncate_at(base.length() - delta)?)?;
    let longer = crack.with_component(m, extend_straight(base, delta)?)?;
    let mut energies_pm = [0.0; 2];
    for (k, c) in [&shorter, &longer].into_iter().enumerate() {
        let mesh = build_mesh(domain, c, params)?;
        let u = solve_equilibrium(&mesh, material, loads, t, solver)?;
        let e = energies(&mesh, &u, material, loads, t, c)?;
        energies_pm[k] = e.elastic;
    }
    Ok((energies_pm[0] - energies_pm[1]) / (2.0 * delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crack::{CrackComponent, CrackSet, OriginKind};
    use crate::domain::DomainSpec;
    use crate::material::{unit_square_tension_profile, VecField};
    use crate::mesh::{build_mesh, MeshParams};

    fn tension_domain() -> DomainSpec {
        DomainSpec::unit_square(vec![0, 2], vec![])
    }

    fn edge_crack(a: f64) -> CrackSet {
        let c =
            CrackComponent::new(vec![[0.0, 0.5], [a, 0.5]], OriginKind::BoundaryAnchored).unwrap();
        CrackSet::new(vec![c], 0.05).unwrap()
    }

    fn setup(
        a: f64,
        h: f64,
        grading: f64,
    ) -> (
        DomainSpec,
        CrackSet,
        CrackedMesh,
        MaterialModel,
        LoadTrajectory,
    ) {
        let d = tension_domain();
        let crack = edge_crack(a);
        let mesh = build_mesh(
            &d,
            &crack,
            MeshParams {
                h,
                tip_grading: grading,
            },
        )
        .unwrap();
        let mat = MaterialModel::constant(1.0, 1.0, 1.0);
        let loads = LoadTrajectory::ramp_w(1.0, unit_square_tension_profile(0.05));
        (d, crack, mesh, mat, loads)
    }

    #[test]
    fn zero_loads_zero_err() {
        let (_, crack, mesh, mat, _) = setup(0.3, 1.0 / 16.0, 6.0);
        let loads = LoadTrajectory::ramp_w(1.0, VecField::zero());
        let u = solve_equilibrium(&mesh, &mat, &loads, 0.5, SolverOptions::default()).unwrap();
        let report = err_vector(&mesh, &u, &mat, &loads, 0.5, &crack).unwrap();
        let g = report.values().unwrap();
        assert_eq!(g, vec![0.0]);
    }

    #[test]
    fn constant_material_kills_gradient_and_force_terms() {
        let (_, crack, mesh, mat, loads) = setup(0.3, 1.0 / 16.0, 6.0);
        let u = solve_equilibrium(&mesh, &mat, &loads, 1.0, SolverOptions::default()).unwrap();
        let r = default_cutoff_radius(&mesh, &crack, 0, &loads).unwrap();
        let v = build_velocity_field(&mesh, &crack, 0, r, &loads).unwrap();
        let e = energy_release_rate(&mesh, &u, &mat, &loads, 1.0, &crack, 0, &v).unwrap();
        assert_eq!(e.material_gradient, 0.0);
        assert_eq!(e.force, 0.0);
        assert!(e.g > 0.0, "mode-I tension should drive the crack, G = {}", e.g);
        assert!((e.g - (e.material_gradient + e.convection + e.dilation + e.force)).abs() <= 1e-12);
    }

    #[test]
    fn velocity_field_has_plateau_and_support() {
        let (_, crack, mesh, _, loads) = setup(0.3, 1.0 / 16.0, 6.0);
        let v = build_velocity_field(&mesh, &crack, 0, 0.09, &loads).unwrap();
        let tip = crack.components[0].tip();
        for (n, p) in mesh.nodes.iter().enumerate() {
            let d = dist(*p, tip);
            let val = [v.nodal[2 * n], v.nodal[2 * n + 1]];
            let norm = val[0].hypot(val[1]);
            if d <= v.plateau_radius {
                assert!((norm - 1.0).abs() < 1e-12);
                assert!((val[0] - 1.0).abs() < 1e-12); // tangent = +x
            } else if d >= v.cutoff_radius {
                assert_eq!(norm, 0.0);
            } else {
                assert!(norm <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn divergence_integral_vanishes_for_interior_disk() {
        // The P1 interpolant of the velocity is continuous across the crack
        // and vanishes on the outer boundary, so its divergence integrates
        // to zero by the divergence theorem.
        let (_, crack, mesh, _, loads) = setup(0.3, 1.0 / 16.0, 6.0);
        let v = build_velocity_field(&mesh, &crack, 0, 0.09, &loads).unwrap();
        let mut total = 0.0;
        let mut magnitude = 0.0;
        for (ti, tri) in mesh.tris.iter().enumerate() {
            let g = element_gradient(&mesh, &v.nodal, *tri);
            let div = g[0][0] + g[1][1];
            let area = mesh.tri_area(ti);
            total += div * area;
            magnitude += div.abs() * area;
        }
        assert!(
            total.abs() <= 1e-12 * magnitude.max(1.0),
            "div integral {total} vs magnitude {magnitude}"
        );
    }

    #[test]
    fn infeasible_radius_is_flagged() {
        let (_, crack, mesh, _, loads) = setup(0.3, 1.0 / 16.0, 6.0);
        // Radius reaching the boundary (tip at (0.3, 0.5), boundary 0.5 away).
        let r = build_velocity_field(&mesh, &crack, 0, 0.55, &loads);
        assert!(matches!(r, Err(Error::TipTooClose(_))));
        // Radius below four local element sizes.
        let r = build_velocity_field(&mesh, &crack, 0, 0.01, &loads);
        assert!(matches!(r, Err(Error::TipTooClose(_))));
    }

    #[test]
    fn symmetric_interior_seed_has_symmetric_err() {
        let d = tension_domain();
        let eta = 0.04;
        let left =
            CrackComponent::new(vec![[0.5, 0.5], [0.35, 0.5]], OriginKind::InteriorSplit).unwrap();
        let right =
            CrackComponent::new(vec![[0.5, 0.5], [0.65, 0.5]], OriginKind::InteriorSplit).unwrap();
        let crack = CrackSet::new(vec![left, right], eta).unwrap();
        let mesh = build_mesh(
            &d,
            &crack,
            MeshParams {
                h: 1.0 / 48.0,
                tip_grading: 8.0,
            },
        )
        .unwrap();
        let mat = MaterialModel::constant(1.0, 1.0, 1.0);
        let loads = LoadTrajectory::ramp_w(1.0, unit_square_tension_profile(eta));
        let u = solve_equilibrium(&mesh, &mat, &loads, 1.0, SolverOptions::default()).unwrap();
        let report = err_vector(&mesh, &u, &mat, &loads, 1.0, &crack).unwrap();
        let g = report.values().expect("both tips feasible");
        assert_eq!(g.len(), 2);
        assert!(g[0] > 0.0 && g[1] > 0.0);
        let spread = (g[0] - g[1]).abs() / g[0].max(g[1]);
        assert!(
            spread < 0.01,
            "asymmetry {spread:.4} between {} and {}",
            g[0],
            g[1]
        );
    }

    #[test]
    fn coarse_fd_oracle_agreement() {
        // A loose desk-scale version of the oracle comparison; the
        // acceptance suite runs the strict one.
        let (d, crack, mesh, mat, loads) = setup(0.3, 1.0 / 32.0, 8.0);
        let u = solve_equilibrium(&mesh, &mat, &loads, 1.0, SolverOptions::default()).unwrap();
        let report = err_vector(&mesh, &u, &mat, &loads, 1.0, &crack).unwrap();
        let g = report.values().unwrap()[0];
        let fd = finite_difference_err(
            &d,
            &crack,
            0,
            &mat,
            &loads,
            1.0,
            MeshParams {
                h: 1.0 / 32.0,
                tip_grading: 8.0,
            },
            1e-3,
            SolverOptions::default(),
        )
        .unwrap();
        let rel = (g - fd).abs() / fd.abs().max(1e-12);
        assert!(rel < 0.05, "G = {g}, FD = {fd}, rel = {rel}");
    }

    #[test]
    fn quadratic_scaling_in_the_load() {
        let (_, crack, mesh, mat, loads) = setup(0.3, 1.0 / 16.0, 6.0);
        let u1 = solve_equilibrium(&mesh, &mat, &loads, 1.0, SolverOptions::default()).unwrap();
        let g1 = err_vector(&mesh, &u1, &mat, &loads, 1.0, &crack)
            .unwrap()
            .values()
            .unwrap()[0];
        let scaled = loads.scaled(2.0);
        let u2 = solve_equilibrium(&mesh, &mat, &scaled, 1.0, SolverOptions::default()).unwrap();
        let g2 = err_vector(&mesh, &u2, &mat, &scaled, 1.0, &crack)
            .unwrap()
            .values()
            .unwrap()[0];
        assert!(
            ((g2 / g1) - 4.0).abs() < 0.001 * 4.0,
            "G should scale quadratically: ratio {}",
            g2 / g1
        );
    }
}
