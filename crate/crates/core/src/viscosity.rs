//! Vanishing-viscosity families and arc-length parametrized evolutions.
//!
//! A family of discrete evolutions is computed for a ladder of viscosity
//! parameters `eps_j = eps0 / 2^j`. The finest member serves as the limit
//! proxy; a Cauchy certificate quantifies how close consecutive members
//! are in the Hausdorff metric away from propagation jumps.
//!
//! Reparametrization by `sigma(t) = t + sum_m (l_m(t) - l_m(0))` turns the
//! lengths into 1-Lipschitz functions of `sigma` with the exact identity
//! `t' + sum_m l_m' = 1` on every affine piece. Plateaus of the
//! reparametrized time encode jumps; sampling them with re-solved
//! equilibria at intermediate lengths exposes the transition states where
//! the release rate meets or exceeds the toughness.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crack::{crack_hausdorff, CrackSet};
use crate::errate::{err_vector, TipErr};
use crate::evolution::{
    check_discrete_griffith, run_discrete_evolution, viscous_energy_balance, EvalContext,
    EvolutionTrace, GriffithReport, SearchConfig, TimeGrid,
};
use crate::fem::{
    bilinear_energy, body_work, energies, interpolate_nodal, solve_equilibrium, traction_work,
};
use crate::geom::Pt;
use crate::mesh::build_mesh;
use crate::{Error, Result};

/// Evolutions for a decreasing viscosity ladder.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViscousFamily {
    pub members: Vec<EvolutionTrace>,
}

impl ViscousFamily {
    pub fn finest(&self) -> &EvolutionTrace {
        self.members.last().expect("family not empty")
    }

    pub fn epsilons(&self) -> Vec<f64> {
        self.members.iter().map(|m| m.eps).collect()
    }
}

/// Default first-rung viscosity: the penalty of a maximal step is
/// comparable to the surface energy it buys.
pub fn default_eps0(kappa2: f64, dt: f64, dl_max: f64) -> f64 {
    2.0 * kappa2 * dt / dl_max
}

/// Run the evolution for `eps_j = eps0 / 2^j`, `j = 0 .. ladder - 1`, on a
/// common time grid. Members are independent and may run concurrently.
pub fn run_family(
    initial: &CrackSet,
    grid: &TimeGrid,
    eps0: f64,
    ladder: usize,
    search: &SearchConfig,
    ctx: &EvalContext,
) -> Result<ViscousFamily> {
    if ladder == 0 || eps0 <= 0.0 {
        return Err(Error::Config(vec![
            "viscosity ladder needs eps0 > 0 and at least one member".into(),
        ]));
    }
    let epsilons: Vec<f64> = (0..ladder).map(|j| eps0 / 2f64.powi(j as i32)).collect();
    let members: Result<Vec<EvolutionTrace>> = if ctx.workers > 1 {
        epsilons
            .par_iter()
            .map(|&eps| run_discrete_evolution(initial, grid, eps, search, ctx))
            .collect()
    } else {
        epsilons
            .iter()
            .map(|&eps| run_discrete_evolution(initial, grid, eps, search, ctx))
            .collect()
    };
    Ok(ViscousFamily { members: members? })
}

// ---------------------------------------------------------------------------
// Reparametrization
// ---------------------------------------------------------------------------

/// One sample of the arc-length parametrized evolution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamSample {
    pub sigma: f64,
    pub t: f64,
    pub l: Vec<f64>,
    /// Right derivative of the reparametrized time on `[sigma, next)`.
    pub tt_prime: f64,
    /// Right derivatives of the lengths.
    pub l_prime: Vec<f64>,
    pub g: Vec<Option<f64>>,
    pub kappa_tip: Vec<f64>,
    /// Total energy at this state.
    pub total: f64,
    /// Combined loading power at this state (multiplied by `tt_prime` in
    /// the balance integral).
    pub power: f64,
    /// True for samples inserted inside a propagation transition.
    pub on_plateau: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParametrizedTrace {
    pub eps: f64,
    pub samples: Vec<ParamSample>,
    /// Total parametrized length `S = sigma(T)`.
    pub s_end: f64,
}

/// Reparametrize a trace by total arc length.
///
/// Sample `i` carries the right derivatives on the interval to sample
/// `i + 1`, computed as `dt / d` and `dl_m / d` with the common
/// denominator `d = dt + sum_m dl_m`, so the identity
/// `t' + |l'|_1 = 1` holds to roundoff on every piece. The last sample
/// repeats the preceding derivatives.
pub fn reparametrize(trace: &EvolutionTrace) -> ParametrizedTrace {
    let n = trace.steps.len();
    let mut samples = Vec::with_capacity(n);
    let mut sigma = 0.0;
    for i in 0..n {
        let s = &trace.steps[i];
        let (tt_prime, l_prime) = if i + 1 < n {
            let nxt = &trace.steps[i + 1];
            let dt = trace.time_nodes[i + 1] - trace.time_nodes[i];
            let mut d = dt;
            for dl in &nxt.delta_l {
                d += dl;
            }
            (dt / d, nxt.delta_l.iter().map(|dl| dl / d).collect())
        } else if let Some(prev) = samples.last() {
            let p: &ParamSample = prev;
            (p.tt_prime, p.l_prime.clone())
        } else {
            (1.0, vec![0.0; s.l.len()])
        };
        let power = s.work_w_rate - s.work_f_dot - s.work_f_wdot - s.work_g_dot - s.work_g_wdot;
        samples.push(ParamSample {
            sigma,
            t: s.t,
            l: s.l.clone(),
            tt_prime,
            l_prime,
            g: s.g.clone(),
            kappa_tip: s.kappa_tip.clone(),
            total: s.total,
            power,
            on_plateau: false,
        });
        if i + 1 < n {
            let nxt = &trace.steps[i + 1];
            let dt = trace.time_nodes[i + 1] - trace.time_nodes[i];
            let mut d = dt;
            for dl in &nxt.delta_l {
                d += dl;
            }
            sigma += d;
        }
    }
    ParametrizedTrace {
        eps: trace.eps,
        s_end: sigma,
        samples,
    }
}

/// Step indices whose growth exceeds the jump threshold
/// `5 * (median step growth + floor)`.
pub fn detect_jumps(trace: &EvolutionTrace, floor: f64) -> Vec<usize> {
    let mut growths: Vec<f64> = trace.steps[1..]
        .iter()
        .map(|s| s.delta_l.iter().sum::<f64>())
        .collect();
    if growths.is_empty() {
        return Vec::new();
    }
    let mut sorted = growths.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[sorted.len() / 2];
    let threshold = 5.0 * (median + floor);
    growths
        .drain(..)
        .enumerate()
        .filter(|(_, g)| *g > threshold)
        .map(|(i, _)| i + 1)
        .collect()
}

/// Insert `subsamples` evenly spaced sigma-samples inside each listed jump
/// step, reconstructing the intermediate cracks by truncation and
/// re-solving the equilibrium at the reparametrized time.
pub fn sample_jump_transitions(
    p: &ParametrizedTrace,
    trace: &EvolutionTrace,
    jump_steps: &[usize],
    subsamples: usize,
    ctx: &EvalContext,
) -> Result<ParametrizedTrace> {
    let mut samples = p.samples.clone();
    let mut inserted: Vec<(usize, ParamSample)> = Vec::new();
    for &step in jump_steps {
        if step == 0 || step >= trace.steps.len() {
            continue;
        }
        let a = &p.samples[step - 1];
        let b = &p.samples[step];
        for j in 1..=subsamples {
            let frac = j as f64 / (subsamples + 1) as f64;
            let sigma = a.sigma + frac * (b.sigma - a.sigma);
            let t = a.t + (sigma - a.sigma) * a.tt_prime;
            let l: Vec<f64> = a
                .l
                .iter()
                .zip(&a.l_prime)
                .map(|(l0, lp)| l0 + (sigma - a.sigma) * lp)
                .collect();
            // Intermediate crack: truncate the arrival state.
            let mut comps = Vec::new();
            for (m, comp) in trace.steps[step].crack.components.iter().enumerate() {
                comps.push(comp.truncate_at(l[m])?);
            }
            let crack = CrackSet::new(comps, trace.steps[step].crack.eta)?;
            let mesh = build_mesh(ctx.domain, &crack, ctx.mesh_params)?;
            let u = solve_equilibrium(&mesh, ctx.material, ctx.loads, t, ctx.solver)?;
            let e = energies(&mesh, &u, ctx.material, ctx.loads, t, &crack)?;
            let report = err_vector(&mesh, &u, ctx.material, ctx.loads, t, &crack)?;
            let g = report
                .tips
                .iter()
                .map(|te| match te {
                    TipErr::Ok(en) => Some(en.g),
                    TipErr::Infeasible { .. } => None,
                })
                .collect();
            let loads = ctx.loads;
            let wdot = interpolate_nodal(&mesh, |q| loads.w_dot_at(t, q));
            let power = bilinear_energy(&mesh, ctx.material, &u.u, &wdot)
                - body_work(&mesh, |q| loads.f_dot_at(t, q), &u.u)
                - body_work(&mesh, |q| loads.f_at(t, q), &wdot)
                - traction_work(&mesh, |q| loads.g_dot_at(t, q), &u.u)
                - traction_work(&mesh, |q| loads.g_at(t, q), &wdot);
            let kappa_tip = crack
                .components
                .iter()
                .map(|c| ctx.material.kappa_at(c.tip()))
                .collect();
            inserted.push((
                step,
                ParamSample {
                    sigma,
                    t,
                    l,
                    tt_prime: a.tt_prime,
                    l_prime: a.l_prime.clone(),
                    g,
                    kappa_tip,
                    total: e.total,
                    power,
                    on_plateau: true,
                },
            ));
        }
    }
    samples.extend(inserted.into_iter().map(|(_, s)| s));
    samples.sort_by(|x, y| x.sigma.partial_cmp(&y.sigma).unwrap());
    Ok(ParametrizedTrace {
        eps: p.eps,
        s_end: p.s_end,
        samples,
    })
}

// ---------------------------------------------------------------------------
// Family checks
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct FamilyGriffithReport {
    /// `(eps, activation report)` per family member.
    pub per_eps: Vec<(f64, GriffithReport)>,
    /// `eps * int |dl/dt|^2 dt` per member (bounded along the family).
    pub rate_diagnostics: Vec<f64>,
    pub all_ok: bool,
}

/// Check the viscous activation conditions on every family member and
/// report the rate-boundedness diagnostic.
pub fn viscous_griffith_check(family: &ViscousFamily, tol: f64) -> FamilyGriffithReport {
    let mut per_eps = Vec::new();
    let mut rate_diagnostics = Vec::new();
    for m in &family.members {
        let rep = check_discrete_griffith(m, tol);
        rate_diagnostics.push(2.0 * viscous_energy_balance(m).rate_diagnostic);
        per_eps.push((m.eps, rep));
    }
    let all_ok = per_eps.iter().all(|(_, r)| r.all_ok);
    FamilyGriffithReport {
        per_eps,
        rate_diagnostics,
        all_ok,
    }
}

// ---------------------------------------------------------------------------
// Limit extraction
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct CauchyCertificate {
    pub eps_coarse: f64,
    pub eps_fine: f64,
    /// Sup over sampled times, away from the jump windows, of the
    /// Hausdorff distance between the two piecewise-constant evolutions.
    pub sup_hausdorff: f64,
    /// Excluded step intervals `(t_lo, t_hi)`.
    pub jump_windows: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitExtraction {
    /// The finest-viscosity trace, serving as the limit proxy.
    pub limit_eps: f64,
    pub certificates: Vec<CauchyCertificate>,
    pub converged: bool,
    pub hausdorff_tol: f64,
}

/// Extract the vanishing-viscosity limit proxy with a Cauchy certificate.
///
/// Consecutive members are compared in the Hausdorff metric at every time
/// node outside the union of their jump windows (expanded by one step on
/// each side, since jump instants drift slightly with the viscosity).
/// Without a certificate below `hausdorff_tol` the extraction reports
/// non-convergence rather than accepting silently.
pub fn extract_limit(
    family: &ViscousFamily,
    hausdorff_tol: f64,
    jump_floor: f64,
    diam_omega: f64,
) -> Result<(EvolutionTrace, LimitExtraction)> {
    if family.members.len() < 3 {
        return Err(Error::Config(vec![
            "limit extraction needs at least three family members".into(),
        ]));
    }
    let densify = (hausdorff_tol / 4.0).max(1e-6);
    let mut certificates = Vec::new();
    for pair in family.members.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let mut windows: Vec<(f64, f64)> = Vec::new();
        for (trace, other) in [(a, b), (b, a)] {
            let _ = other;
            for &step in &detect_jumps(trace, jump_floor) {
                let lo = step.saturating_sub(2);
                let hi = (step + 1).min(trace.time_nodes.len() - 1);
                windows.push((trace.time_nodes[lo], trace.time_nodes[hi]));
            }
        }
        let mut sup = 0.0f64;
        let nodes = &b.time_nodes[..b.steps.len()];
        for &t in nodes {
            if windows.iter().any(|(lo, hi)| t > *lo && t <= *hi) {
                continue;
            }
            if t > a.time_nodes[a.steps.len() - 1] {
                break; // coarser trace stopped early
            }
            let d = crack_hausdorff(a.crack_at(t), b.crack_at(t), densify, diam_omega);
            sup = sup.max(d);
        }
        certificates.push(CauchyCertificate {
            eps_coarse: a.eps,
            eps_fine: b.eps,
            sup_hausdorff: sup,
            jump_windows: windows,
        });
    }
    let converged = certificates
        .iter()
        .all(|c| c.sup_hausdorff <= hausdorff_tol);
    let limit = family.finest().clone();
    Ok((
        limit,
        LimitExtraction {
            limit_eps: family.finest().eps,
            certificates,
            converged,
            hausdorff_tol,
        },
    ))
}

// ---------------------------------------------------------------------------
// Parametrized Griffith conditions
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct ParamGriffithEntry {
    pub sample: usize,
    pub sigma: f64,
    pub pg1_ok: bool,
    pub pg2_ok: bool,
    pub pg3_ok: bool,
    pub pg4_ok: bool,
    /// Worst signed defect over the clauses active at this sample
    /// (positive means violation).
    pub worst_defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamGriffithReport {
    pub entries: Vec<ParamGriffithEntry>,
    /// Residual of the parametrized energy balance at each sample.
    pub balance_residual: Vec<f64>,
    pub all_ok: bool,
    pub slope_floor: f64,
}

/// Check the parametrized activation conditions and the energy balance on
/// a parametrized trace. `kappa2` scales the tolerance; `slope_floor`
/// separates "positive" derivatives from zero at the discrete level.
pub fn parametrized_griffith_check(
    p: &ParametrizedTrace,
    tol: f64,
    slope_floor: f64,
    kappa2: f64,
) -> ParamGriffithReport {
    let band = tol * kappa2;
    let mut entries = Vec::new();
    for (i, s) in p.samples.iter().enumerate() {
        let pg1_ok = s.tt_prime >= 0.0 && s.l_prime.iter().all(|&x| x >= 0.0);
        let mut pg2_ok = true;
        let mut pg3_ok = true;
        let mut pg4_ok = true;
        let mut worst = f64::NEG_INFINITY;
        if s.tt_prime > slope_floor {
            for m in 0..s.l.len() {
                let Some(g) = s.g[m] else { continue };
                let defect = g - s.kappa_tip[m] - band;
                worst = worst.max(defect);
                if defect > 0.0 {
                    pg2_ok = false;
                }
                if s.l_prime[m] > slope_floor {
                    let defect3 = (g - s.kappa_tip[m]).abs() - band;
                    worst = worst.max(defect3);
                    if defect3 > 0.0 {
                        pg3_ok = false;
                    }
                }
            }
        } else {
            let growing: Vec<usize> = (0..s.l.len())
                .filter(|&m| s.l_prime[m] > slope_floor)
                .collect();
            if growing.is_empty() {
                pg4_ok = false;
                worst = worst.max(0.0);
            }
            for m in growing {
                let Some(g) = s.g[m] else { continue };
                let defect = s.kappa_tip[m] - g - band;
                worst = worst.max(defect);
                if defect > 0.0 {
                    pg4_ok = false;
                }
            }
        }
        entries.push(ParamGriffithEntry {
            sample: i,
            sigma: s.sigma,
            pg1_ok,
            pg2_ok,
            pg3_ok,
            pg4_ok,
            worst_defect: if worst == f64::NEG_INFINITY { 0.0 } else { worst },
        });
    }
    // Parametrized energy balance by trapezoid quadrature in sigma.
    let mut balance_residual = vec![0.0; p.samples.len()];
    let f0 = p.samples.first().map(|s| s.total).unwrap_or(0.0);
    let mut acc = 0.0;
    for i in 1..p.samples.len() {
        let (a, b) = (&p.samples[i - 1], &p.samples[i]);
        let ds = b.sigma - a.sigma;
        let integrand = |s: &ParamSample| {
            let mut v = s.power * s.tt_prime;
            for m in 0..s.l.len() {
                if let Some(g) = s.g[m] {
                    v -= (g - s.kappa_tip[m]) * s.l_prime[m];
                }
            }
            v
        };
        acc += 0.5 * ds * (integrand(a) + integrand(b));
        balance_residual[i] = b.total - (f0 + acc);
    }
    let all_ok = entries
        .iter()
        .all(|e| e.pg1_ok && e.pg2_ok && e.pg3_ok && e.pg4_ok);
    ParamGriffithReport {
        entries,
        balance_residual,
        all_ok,
        slope_floor,
    }
}

/// Columns `(sigma, t, l^m..., G^m..., kappa(P^m)...)` as CSV plot data.
pub fn parametrized_csv(p: &ParametrizedTrace) -> String {
    let m = p.samples.first().map(|s| s.l.len()).unwrap_or(0);
    let mut out = String::from("sigma,t");
    for i in 0..m {
        out.push_str(&format!(",l{i}"));
    }
    for i in 0..m {
        out.push_str(&format!(",g{i}"));
    }
    for i in 0..m {
        out.push_str(&format!(",kappa{i}"));
    }
    out.push('\n');
    for s in &p.samples {
        out.push_str(&format!("{},{}", s.sigma, s.t));
        for v in &s.l {
            out.push_str(&format!(",{v}"));
        }
        for g in &s.g {
            match g {
                Some(v) => out.push_str(&format!(",{v}")),
                None => out.push_str(","),
            }
        }
        for v in &s.kappa_tip {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crack::{CrackComponent, OriginKind};
    use crate::domain::DomainSpec;
    use crate::evolution::{StepRecord, TraceStatus};
    use approx::assert_relative_eq;

    /// Hand-built trace with prescribed lengths; everything else minimal.
    fn synthetic_trace(times: Vec<f64>, lengths: Vec<Vec<f64>>) -> EvolutionTrace {
        let comp = CrackComponent::new(vec![[0.0, 0.5], [0.3, 0.5]], OriginKind::BoundaryAnchored)
            .unwrap();
        let crack = CrackSet::new(vec![comp], 0.05).unwrap();
        let m = lengths[0].len();
        let steps: Vec<StepRecord> = times
            .iter()
            .zip(&lengths)
            .enumerate()
            .map(|(i, (t, l))| StepRecord {
                index: i,
                t: *t,
                crack: crack.clone(),
                l: l.clone(),
                delta_l: if i == 0 {
                    vec![0.0; m]
                } else {
                    l.iter()
                        .zip(&lengths[i - 1])
                        .map(|(a, b)| a - b)
                        .collect()
                },
                tips: vec![[0.3, 0.5]; m],
                g: vec![Some(0.5); m],
                kappa_tip: vec![1.0; m],
                elastic: 0.0,
                surface: l.iter().sum(),
                total: l.iter().sum(),
                work_w_rate: 0.0,
                work_f_dot: 0.0,
                work_f_wdot: 0.0,
                work_g_dot: 0.0,
                work_g_wdot: 0.0,
                objective: 0.0,
                evaluations: Vec::new(),
            })
            .collect();
        EvolutionTrace {
            eps: 0.1,
            time_nodes: times,
            steps,
            status: TraceStatus::Completed,
        }
    }

    #[test]
    fn no_growth_reparametrization_is_identity() {
        let trace = synthetic_trace(
            vec![0.0, 0.5, 1.0],
            vec![vec![0.3], vec![0.3], vec![0.3]],
        );
        let p = reparametrize(&trace);
        for s in &p.samples {
            assert_relative_eq!(s.sigma, s.t, epsilon = 1e-15);
            assert_relative_eq!(s.tt_prime, 1.0, epsilon = 1e-15);
            assert_eq!(s.l_prime, vec![0.0]);
        }
        assert_relative_eq!(p.s_end, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn parametrization_identity_exact_on_pieces() {
        let trace = synthetic_trace(
            vec![0.0, 0.25, 0.5, 1.0],
            vec![vec![0.3], vec![0.3], vec![0.55], vec![0.6]],
        );
        let p = reparametrize(&trace);
        for s in &p.samples {
            let total = s.tt_prime + s.l_prime.iter().sum::<f64>();
            assert!(
                (total - 1.0).abs() <= 1e-12,
                "identity defect {} at sigma {}",
                (total - 1.0).abs(),
                s.sigma
            );
        }
        // Slope-1 growth on a piece: t' = l' = 1/2.
        assert_relative_eq!(p.samples[1].tt_prime, 0.5, epsilon = 1e-12);
        assert_relative_eq!(p.samples[1].l_prime[0], 0.5, epsilon = 1e-12);
        // sigma accumulates dt + dl.
        assert_relative_eq!(p.s_end, 1.0 + 0.3, epsilon = 1e-12);
    }

    #[test]
    fn jump_detection_flags_large_steps() {
        let trace = synthetic_trace(
            vec![0.0, 0.25, 0.5, 0.75, 1.0],
            vec![
                vec![0.3],
                vec![0.302],
                vec![0.304],
                vec![0.504],
                vec![0.506],
            ],
        );
        let jumps = detect_jumps(&trace, 0.001);
        assert_eq!(jumps, vec![3]);
    }

    #[test]
    fn plateau_inserted_by_jump() {
        // A jump of mass 0.2 inserts a sigma-plateau of that length where
        // t' is small and l' is near one.
        let trace = synthetic_trace(
            vec![0.0, 0.5, 0.500001, 1.0],
            vec![vec![0.3], vec![0.3], vec![0.5], vec![0.5]],
        );
        let p = reparametrize(&trace);
        let plateau = &p.samples[1];
        assert!(plateau.tt_prime < 1e-4);
        assert!((plateau.l_prime[0] - 1.0).abs() < 1e-4);
        let sigma_len = p.samples[2].sigma - p.samples[1].sigma;
        assert_relative_eq!(sigma_len, 0.2, epsilon = 1e-5);
    }

    #[test]
    fn param_griffith_clauses() {
        // Subcritical no-growth trace: only pG2 active, holds when G < kappa.
        let trace = synthetic_trace(
            vec![0.0, 0.5, 1.0],
            vec![vec![0.3], vec![0.3], vec![0.3]],
        );
        let p = reparametrize(&trace);
        let report = parametrized_griffith_check(&p, 0.02, 1e-6, 1.0);
        assert!(report.all_ok);
        // Balance at the start is exactly zero.
        assert_eq!(report.balance_residual[0], 0.0);
    }

    #[test]
    fn end_to_end_family_and_limit() {
        // Desk-scale subcritical family: all members identical, certificate
        // zero, limit equals the initial crack at all times.
        let d = DomainSpec::unit_square(vec![0, 2], vec![]);
        let mat = crate::material::MaterialModel::constant(1.0, 1.0, 1.0);
        let loads = crate::material::LoadTrajectory::ramp_w(
            1.0,
            crate::material::unit_square_tension_profile(0.05),
        )
        .scaled(0.25);
        let ctx = EvalContext {
            domain: &d,
            material: &mat,
            loads: &loads,
            mesh_params: crate::mesh::MeshParams {
                h: 1.0 / 12.0,
                tip_grading: 6.0,
            },
            solver: crate::fem::SolverOptions::default(),
            workers: 1,
        };
        let comp = CrackComponent::new(vec![[0.0, 0.5], [0.3, 0.5]], OriginKind::BoundaryAnchored)
            .unwrap();
        let crack = CrackSet::new(vec![comp], 0.05).unwrap();
        let grid = TimeGrid::uniform(1.0, 3);
        let search = SearchConfig::for_mesh(1.0 / 12.0);
        let family = run_family(&crack, &grid, 0.4, 3, &search, &ctx).unwrap();
        assert_eq!(family.members.len(), 3);
        let rep = viscous_griffith_check(&family, 1e-3);
        assert!(rep.all_ok);
        let (limit, extraction) =
            extract_limit(&family, 1e-3, 0.01, d.diameter()).unwrap();
        assert!(extraction.converged);
        for c in &extraction.certificates {
            assert_eq!(c.sup_hausdorff, 0.0);
        }
        assert_eq!(limit.total_growth(), 0.0);
        // Subcritical: recorded G stays below kappa1 everywhere.
        for s in &limit.steps {
            for g in s.g.iter().flatten() {
                assert!(*g < 1.0);
            }
        }
    }
}
