//! Linear elasticity on cracked meshes: assembly, solves, energies.
//!
//! Piecewise-linear triangles with one-point stiffness quadrature (Lamé
//! fields at centroids) and three-point load quadrature. Crack faces carry
//! no coupling because their nodes are duplicated, so the crack is
//! traction-free by construction. Dirichlet data is eliminated from the
//! system, keeping it symmetric positive definite.

use serde::Serialize;

use crate::crack::CrackSet;
use crate::domain::BoundaryKind;
use crate::geom::{add, dist, scale, sub, Pt};
use crate::material::{LoadTrajectory, MaterialModel};
use crate::mesh::CrackedMesh;
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Sparse matrices and solvers
// ---------------------------------------------------------------------------

/// Compressed sparse row matrix with a full (both-triangles) pattern.
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    /// Build from unsorted triplets, summing duplicates.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Csr {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            per_row[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in &mut per_row {
            row.sort_unstable_by_key(|(j, _)| *j);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut v = 0.0;
                while k < row.len() && row[k].0 == j {
                    v += row[k].1;
                    k += 1;
                }
                col_idx.push(j);
                vals.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Csr {
            n,
            row_ptr,
            col_idx,
            vals,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.col_idx[k]];
            }
            y[i] = s;
        }
    }

    pub fn diag(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.col_idx[k] == i {
                    d[i] = self.vals[k];
                }
            }
        }
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    /// Direct factorization at desk scale, conjugate gradients above.
    Auto,
    Direct,
    Cg,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub kind: SolverKind,
    /// Residual tolerance relative to the load norm.
    pub rtol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            kind: SolverKind::Auto,
            rtol: 1e-10,
        }
    }
}

/// Past this many unknowns `Auto` switches from the profile factorization
/// to conjugate gradients.
const DIRECT_LIMIT: usize = 60_000;

fn solve_spd(a: &Csr, b: &[f64], opts: SolverOptions) -> Result<Vec<f64>> {
    let kind = match opts.kind {
        SolverKind::Auto => {
            if a.n <= DIRECT_LIMIT {
                SolverKind::Direct
            } else {
                SolverKind::Cg
            }
        }
        k => k,
    };
    match kind {
        SolverKind::Direct => skyline_solve(a, b),
        SolverKind::Cg => cg_jacobi(a, b, opts.rtol),
        SolverKind::Auto => unreachable!(),
    }
}

/// Jacobi-preconditioned conjugate gradients; deterministic.
fn cg_jacobi(a: &Csr, b: &[f64], rtol: f64) -> Result<Vec<f64>> {
    let n = a.n;
    let diag = a.diag();
    if diag.iter().any(|&d| d <= 0.0) {
        return Err(Error::Solve("non-positive diagonal entry".into()));
    }
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if bnorm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    let max_iter = 40 * n + 100;
    for _ in 0..max_iter {
        a.matvec(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(Error::Solve("matrix not positive definite in CG".into()));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rnorm <= rtol * bnorm {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Solve(format!(
        "CG did not reach rtol {rtol} in {max_iter} iterations"
    )))
}

/// Reverse Cuthill-McKee ordering of the matrix graph.
fn rcm_order(a: &Csr) -> Vec<usize> {
    let n = a.n;
    let degree = |i: usize| a.row_ptr[i + 1] - a.row_ptr[i];
    let mut order: Vec<usize> = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    loop {
        let Some(start) = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| (degree(i), i))
        else {
            break;
        };
        visited[start] = true;
        order.push(start);
        let mut head = order.len() - 1;
        while head < order.len() {
            let u = order[head];
            head += 1;
            let mut nbrs: Vec<usize> = (a.row_ptr[u]..a.row_ptr[u + 1])
                .map(|k| a.col_idx[k])
                .filter(|&v| !visited[v])
                .collect();
            nbrs.sort_unstable_by_key(|&v| (degree(v), v));
            for v in nbrs {
                if !visited[v] {
                    visited[v] = true;
                    order.push(v);
                }
            }
        }
    }
    order.reverse();
    order
}

/// Profile (skyline) Cholesky factorization with RCM reordering.
fn skyline_solve(a: &Csr, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.n;
    let order = rcm_order(a);
    let mut perm_inv = vec![0usize; n]; // perm_inv[old] = new
    for (new, &old) in order.iter().enumerate() {
        perm_inv[old] = new;
    }
    // Row profiles in the permuted numbering.
    let mut first = (0..n).collect::<Vec<usize>>();
    for i in 0..n {
        let pi = perm_inv[i];
        for k in a.row_ptr[i]..a.row_ptr[i + 1] {
            let pj = perm_inv[a.col_idx[k]];
            if pj < first[pi] {
                first[pi] = pj;
            }
        }
    }
    let mut start = vec![0usize; n + 1];
    for i in 0..n {
        start[i + 1] = start[i] + (i - first[i] + 1);
    }
    let nnz = start[n];
    if nnz > 400_000_000 {
        return Err(Error::Solve(format!(
            "skyline profile too large ({nnz} entries); use the CG solver"
        )));
    }
    let mut sky = vec![0.0f64; nnz];
    for i in 0..n {
        let pi = perm_inv[i];
        for k in a.row_ptr[i]..a.row_ptr[i + 1] {
            let pj = perm_inv[a.col_idx[k]];
            if pj <= pi {
                sky[start[pi] + (pj - first[pi])] = a.vals[k];
            }
        }
    }
    // Row-wise Cholesky.
    for i in 0..n {
        for j in first[i]..=i {
            let lo = first[i].max(first[j]);
            let mut s = sky[start[i] + (j - first[i])];
            for k in lo..j {
                s -= sky[start[i] + (k - first[i])] * sky[start[j] + (k - first[j])];
            }
            if j == i {
                if s <= 0.0 {
                    return Err(Error::Solve(
                        "matrix not positive definite in factorization".into(),
                    ));
                }
                sky[start[i] + (j - first[i])] = s.sqrt();
            } else {
                sky[start[i] + (j - first[i])] = s / sky[start[j] + (j - first[j])];
            }
        }
    }
    // Forward substitution L y = P b.
    let mut y = vec![0.0f64; n];
    for i in 0..n {
        let mut s = b[order[i]];
        for j in first[i]..i {
            s -= sky[start[i] + (j - first[i])] * y[j];
        }
        y[i] = s / sky[start[i] + (i - first[i])];
    }
    // Backward substitution L^T x = y, column oriented over the profile.
    for i in (0..n).rev() {
        y[i] /= sky[start[i] + (i - first[i])];
        let yi = y[i];
        for j in first[i]..i {
            y[j] -= sky[start[i] + (j - first[i])] * yi;
        }
    }
    let mut x = vec![0.0f64; n];
    for (new, &old) in order.iter().enumerate() {
        x[old] = y[new];
    }
    Ok(x)
}

// ---------------------------------------------------------------------------
// Elements
// ---------------------------------------------------------------------------

/// Plane-strain constitutive matrix on engineering strain `[exx, eyy, gxy]`.
fn d_matrix(lambda: f64, mu: f64) -> [[f64; 3]; 3] {
    [
        [lambda + 2.0 * mu, lambda, 0.0],
        [lambda, lambda + 2.0 * mu, 0.0],
        [0.0, 0.0, mu],
    ]
}

/// Constant strain-displacement matrix (3 x 6) and the signed area.
fn b_matrix(p: [Pt; 3]) -> ([[f64; 6]; 3], f64) {
    let area2 =
        (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let mut b = [[0.0; 6]; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let dn_dx = (p[j][1] - p[k][1]) / area2;
        let dn_dy = (p[k][0] - p[j][0]) / area2;
        b[0][2 * i] = dn_dx;
        b[1][2 * i + 1] = dn_dy;
        b[2][2 * i] = dn_dy;
        b[2][2 * i + 1] = dn_dx;
    }
    (b, 0.5 * area2)
}

fn element_stiffness(p: [Pt; 3], lambda: f64, mu: f64) -> ([[f64; 6]; 6], f64) {
    let (b, area) = b_matrix(p);
    let d = d_matrix(lambda, mu);
    let mut db = [[0.0; 6]; 3];
    for r in 0..3 {
        for c in 0..6 {
            for k in 0..3 {
                db[r][c] += d[r][k] * b[k][c];
            }
        }
    }
    let mut ke = [[0.0; 6]; 6];
    for r in 0..6 {
        for c in 0..6 {
            let mut s = 0.0;
            for k in 0..3 {
                s += b[k][r] * db[k][c];
            }
            ke[r][c] = s * area;
        }
    }
    (ke, area)
}

/// Edge-midpoint quadrature on a triangle: three points, weight `area/3`,
/// exact for quadratics. Returns `(point, shape values)`.
pub fn tri_quadrature(p: [Pt; 3]) -> [(Pt, [f64; 3]); 3] {
    let m01 = scale(add(p[0], p[1]), 0.5);
    let m12 = scale(add(p[1], p[2]), 0.5);
    let m20 = scale(add(p[2], p[0]), 0.5);
    [
        (m01, [0.5, 0.5, 0.0]),
        (m12, [0.0, 0.5, 0.5]),
        (m20, [0.5, 0.0, 0.5]),
    ]
}

/// Two-point Gauss rule on a segment: `(point, weight)` with weights
/// summing to the segment length.
pub fn segment_gauss2(a: Pt, b: Pt) -> [(Pt, f64); 2] {
    let len = dist(a, b);
    let g = 0.5 / 3.0f64.sqrt();
    let mid = scale(add(a, b), 0.5);
    let half = scale(sub(b, a), g);
    [(sub(mid, half), 0.5 * len), (add(mid, half), 0.5 * len)]
}

// ---------------------------------------------------------------------------
// Equilibrium
// ---------------------------------------------------------------------------

/// Nodal displacement solving the cracked equilibrium problem at time `t`.
#[derive(Debug, Clone)]
pub struct DisplacementField {
    /// Two components per node.
    pub u: Vec<f64>,
    pub t: f64,
    /// Discrete residual norm over free dofs after the solve.
    pub residual_norm: f64,
    /// Norm of the reduced right-hand side.
    pub load_norm: f64,
    pub num_nodes: usize,
}

impl DisplacementField {
    pub fn at_node(&self, n: usize) -> Pt {
        [self.u[2 * n], self.u[2 * n + 1]]
    }
}

struct Assembled {
    triplets: Vec<(usize, usize, f64)>,
    rhs: Vec<f64>,
}

fn assemble(
    mesh: &CrackedMesh,
    material: &MaterialModel,
    loads: &LoadTrajectory,
    t: f64,
) -> Assembled {
    let nd = 2 * mesh.num_nodes();
    let mut triplets = Vec::with_capacity(36 * mesh.tris.len());
    let mut rhs = vec![0.0; nd];
    let (_, af, ag) = loads.amplitudes(t);
    let body = af != 0.0 && !loads.f_profile.is_zero();
    for tri in &mesh.tris {
        let p = [mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]];
        let centroid = scale(add(add(p[0], p[1]), p[2]), 1.0 / 3.0);
        let (lambda, mu) = material.lame(centroid);
        let (ke, area) = element_stiffness(p, lambda, mu);
        for r in 0..6 {
            let gi = 2 * tri[r / 2] + r % 2;
            for c in 0..6 {
                let gj = 2 * tri[c / 2] + c % 2;
                triplets.push((gi, gj, ke[r][c]));
            }
        }
        if body {
            for (q, shape) in tri_quadrature(p) {
                let f = loads.f_at(t, q);
                for i in 0..3 {
                    rhs[2 * tri[i]] += area / 3.0 * shape[i] * f[0];
                    rhs[2 * tri[i] + 1] += area / 3.0 * shape[i] * f[1];
                }
            }
        }
    }
    if ag != 0.0 && !loads.g_profile.is_zero() {
        for e in &mesh.boundary_edges {
            if e.kind != BoundaryKind::Traction {
                continue;
            }
            let (a, b) = (mesh.nodes[e.a], mesh.nodes[e.b]);
            for (q, w) in segment_gauss2(a, b) {
                let g = loads.g_at(t, q);
                let la = dist(q, b) / dist(a, b);
                let lb = 1.0 - la;
                rhs[2 * e.a] += w * la * g[0];
                rhs[2 * e.a + 1] += w * la * g[1];
                rhs[2 * e.b] += w * lb * g[0];
                rhs[2 * e.b + 1] += w * lb * g[1];
            }
        }
    }
    Assembled { triplets, rhs }
}

/// Solve the equilibrium problem at time `t` on a conforming mesh.
pub fn solve_equilibrium(
    mesh: &CrackedMesh,
    material: &MaterialModel,
    loads: &LoadTrajectory,
    t: f64,
    opts: SolverOptions,
) -> Result<DisplacementField> {
    let dirichlet_nodes = mesh.dirichlet_nodes();
    if dirichlet_nodes.is_empty() {
        return Err(Error::InsufficientDirichlet);
    }
    let nd = 2 * mesh.num_nodes();
    let mut is_fixed = vec![false; nd];
    let mut u = vec![0.0; nd];
    for &n in &dirichlet_nodes {
        let w = loads.w_at(t, mesh.nodes[n]);
        is_fixed[2 * n] = true;
        is_fixed[2 * n + 1] = true;
        u[2 * n] = w[0];
        u[2 * n + 1] = w[1];
    }
    let asm = assemble(mesh, material, loads, t);

    // Reduced numbering for free dofs.
    let mut free_id = vec![usize::MAX; nd];
    let mut nf = 0;
    for i in 0..nd {
        if !is_fixed[i] {
            free_id[i] = nf;
            nf += 1;
        }
    }
    if nf == 0 {
        return Ok(DisplacementField {
            u,
            t,
            residual_norm: 0.0,
            load_norm: 0.0,
            num_nodes: mesh.num_nodes(),
        });
    }
    let mut reduced = Vec::with_capacity(asm.triplets.len());
    let mut rhs: Vec<f64> = (0..nd)
        .filter(|&i| !is_fixed[i])
        .map(|i| asm.rhs[i])
        .collect();
    for &(i, j, v) in &asm.triplets {
        match (is_fixed[i], is_fixed[j]) {
            (false, false) => reduced.push((free_id[i], free_id[j], v)),
            (false, true) => rhs[free_id[i]] -= v * u[j],
            _ => {}
        }
    }
    let a = Csr::from_triplets(nf, &reduced);
    let load_norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    let x = solve_spd(&a, &rhs, opts)?;
    let mut res = vec![0.0; nf];
    a.matvec(&x, &mut res);
    let residual_norm = res
        .iter()
        .zip(&rhs)
        .map(|(ax, b)| (b - ax) * (b - ax))
        .sum::<f64>()
        .sqrt();
    if load_norm > 0.0 && residual_norm > 100.0 * opts.rtol.max(1e-14) * load_norm {
        return Err(Error::Solve(format!(
            "residual {residual_norm:.3e} exceeds tolerance at load norm {load_norm:.3e}"
        )));
    }
    for i in 0..nd {
        if !is_fixed[i] {
            u[i] = x[free_id[i]];
        }
    }
    Ok(DisplacementField {
        u,
        t,
        residual_norm,
        load_norm,
        num_nodes: mesh.num_nodes(),
    })
}

/// Displacement gradient `du_i/dx_j` on a triangle (constant for P1).
pub fn element_gradient(mesh: &CrackedMesh, u: &[f64], tri: [usize; 3]) -> [[f64; 2]; 2] {
    let p = [mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]];
    let area2 =
        (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let mut g = [[0.0; 2]; 2];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let dn_dx = (p[j][1] - p[k][1]) / area2;
        let dn_dy = (p[k][0] - p[j][0]) / area2;
        for c in 0..2 {
            let ui = u[2 * tri[i] + c];
            g[c][0] += ui * dn_dx;
            g[c][1] += ui * dn_dy;
        }
    }
    g
}

// ---------------------------------------------------------------------------
// Energies
// ---------------------------------------------------------------------------

/// Energy bookkeeping for one configuration.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnergyReport {
    /// Stored elastic energy minus the work of the loads.
    pub elastic: f64,
    /// Toughness-weighted crack length.
    pub surface: f64,
    /// `elastic + surface`.
    pub total: f64,
    /// Strain energy `1/2 int C Eu : Eu`.
    pub strain_energy: f64,
    /// `int f . u`.
    pub body_work: f64,
    /// `int_{traction} g . u`.
    pub traction_work: f64,
}

/// The quadratic functional at `v`: strain energy minus load work.
/// Returns `(value, strain, body, traction)`.
fn functional_parts(
    mesh: &CrackedMesh,
    material: &MaterialModel,
    loads: &LoadTrajectory,
    t: f64,
    v: &[f64],
) -> (f64, f64, f64, f64) {
    let (_, af, ag) = loads.amplitudes(t);
    let body_on = af != 0.0 && !loads.f_profile.is_zero();
    let mut strain = 0.0;
    let mut body = 0.0;
    for tri in &mesh.tris {
        let p = [mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]];
        let centroid = scale(add(add(p[0], p[1]), p[2]), 1.0 / 3.0);
        let (lambda, mu) = material.lame(centroid);
        let (b, area) = b_matrix(p);
        let ve = [
            v[2 * tri[0]],
            v[2 * tri[0] + 1],
            v[2 * tri[1]],
            v[2 * tri[1] + 1],
            v[2 * tri[2]],
            v[2 * tri[2] + 1],
        ];
        let mut eps = [0.0; 3];
        for r in 0..3 {
            for c in 0..6 {
                eps[r] += b[r][c] * ve[c];
            }
        }
        let d = d_matrix(lambda, mu);
        let mut s = 0.0;
        for r in 0..3 {
            for c in 0..3 {
                s += eps[r] * d[r][c] * eps[c];
            }
        }
        strain += 0.5 * s * area;
        if body_on {
            for (q, shape) in tri_quadrature(p) {
                let f = loads.f_at(t, q);
                let uq = [
                    shape[0] * ve[0] + shape[1] * ve[2] + shape[2] * ve[4],
                    shape[0] * ve[1] + shape[1] * ve[3] + shape[2] * ve[5],
                ];
                body += area / 3.0 * (f[0] * uq[0] + f[1] * uq[1]);
            }
        }
    }
    let mut traction = 0.0;
    if ag != 0.0 && !loads.g_profile.is_zero() {
        for e in &mesh.boundary_edges {
            if e.kind != BoundaryKind::Traction {
                continue;
            }
            let (a, b) = (mesh.nodes[e.a], mesh.nodes[e.b]);
            for (q, w) in segment_gauss2(a, b) {
                let g = loads.g_at(t, q);
                let la = dist(q, b) / dist(a, b);
                let lb = 1.0 - la;
                let uq = [
                    la * v[2 * e.a] + lb * v[2 * e.b],
                    la * v[2 * e.a + 1] + lb * v[2 * e.b + 1],
                ];
                traction += w * (g[0] * uq[0] + g[1] * uq[1]);
            }
        }
    }
    (strain - body - traction, strain, body, traction)
}

/// The discrete quadratic functional at `v`.
pub fn functional_value(
    mesh: &CrackedMesh,
    material: &MaterialModel,
    loads: &LoadTrajectory,
    t: f64,
    v: &[f64],
) -> f64 {
    functional_parts(mesh, material, loads, t, v).0
}

/// Toughness-weighted surface energy of a crack set, by per-segment
/// two-point Gauss quadrature.
pub fn surface_energy(crack: &CrackSet, material: &MaterialModel) -> f64 {
    let mut k = 0.0;
    for c in &crack.components {
        for w in c.vertices().windows(2) {
            for (q, wt) in segment_gauss2(w[0], w[1]) {
                k += wt * material.kappa_at(q);
            }
        }
    }
    k
}

/// Full energy report at an equilibrium state.
pub fn energies(
    mesh: &CrackedMesh,
    u: &DisplacementField,
    material: &MaterialModel,
    loads: &LoadTrajectory,
    t: f64,
    crack: &CrackSet,
) -> Result<EnergyReport> {
    if u.num_nodes != mesh.num_nodes() {
        return Err(Error::Mismatch(format!(
            "displacement has {} nodes, mesh has {}",
            u.num_nodes,
            mesh.num_nodes()
        )));
    }
    if mesh.tip_nodes.len() != crack.components.len() {
        return Err(Error::Mismatch(format!(
            "mesh has {} tips, crack has {} components",
            mesh.tip_nodes.len(),
            crack.components.len()
        )));
    }
    for (tn, c) in mesh.tip_nodes.iter().zip(&crack.components) {
        if dist(mesh.nodes[*tn], c.tip()) > 1e-9 {
            return Err(Error::Mismatch("mesh tips do not match crack tips".into()));
        }
    }
    let (elastic, strain, body, traction) = functional_parts(mesh, material, loads, t, &u.u);
    let surface = surface_energy(crack, material);
    Ok(EnergyReport {
        elastic,
        surface,
        total: elastic + surface,
        strain_energy: strain,
        body_work: body,
        traction_work: traction,
    })
}

/// Nodal interpolant of a pointwise vector field.
pub fn interpolate_nodal(mesh: &CrackedMesh, f: impl Fn(Pt) -> Pt) -> Vec<f64> {
    let mut v = vec![0.0; 2 * mesh.num_nodes()];
    for (n, p) in mesh.nodes.iter().enumerate() {
        let val = f(*p);
        v[2 * n] = val[0];
        v[2 * n + 1] = val[1];
    }
    v
}

/// Elastic bilinear form `int C E(ua) : E(ub)` of two nodal fields.
pub fn bilinear_energy(mesh: &CrackedMesh, material: &MaterialModel, ua: &[f64], ub: &[f64]) -> f64 {
    let mut total = 0.0;
    for tri in &mesh.tris {
        let p = [mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]];
        let centroid = scale(add(add(p[0], p[1]), p[2]), 1.0 / 3.0);
        let (lambda, mu) = material.lame(centroid);
        let ga = element_gradient(mesh, ua, *tri);
        let gb = element_gradient(mesh, ub, *tri);
        let area = 0.5
            * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
                - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]));
        let div_a = ga[0][0] + ga[1][1];
        let div_b = gb[0][0] + gb[1][1];
        let ea01 = 0.5 * (ga[0][1] + ga[1][0]);
        let eb01 = 0.5 * (gb[0][1] + gb[1][0]);
        let contract = ga[0][0] * gb[0][0] + 2.0 * ea01 * eb01 + ga[1][1] * gb[1][1];
        total += area * (lambda * div_a * div_b + 2.0 * mu * contract);
    }
    total
}

/// `int f . v` over the body with the three-point rule, for a pointwise
/// field `f` and a nodal field `v`.
pub fn body_work(mesh: &CrackedMesh, f: impl Fn(Pt) -> Pt, v: &[f64]) -> f64 {
    let mut total = 0.0;
    for tri in &mesh.tris {
        let p = [mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]];
        let area = 0.5
            * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
                - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]));
        for (q, shape) in tri_quadrature(p) {
            let fq = f(q);
            let uq = [
                shape[0] * v[2 * tri[0]] + shape[1] * v[2 * tri[1]] + shape[2] * v[2 * tri[2]],
                shape[0] * v[2 * tri[0] + 1]
                    + shape[1] * v[2 * tri[1] + 1]
                    + shape[2] * v[2 * tri[2] + 1],
            ];
            total += area / 3.0 * (fq[0] * uq[0] + fq[1] * uq[1]);
        }
    }
    total
}

/// `int g . v` over the traction boundary for a pointwise field `g`.
pub fn traction_work(mesh: &CrackedMesh, g: impl Fn(Pt) -> Pt, v: &[f64]) -> f64 {
    let mut total = 0.0;
    for e in &mesh.boundary_edges {
        if e.kind != BoundaryKind::Traction {
            continue;
        }
        let (a, b) = (mesh.nodes[e.a], mesh.nodes[e.b]);
        for (q, w) in segment_gauss2(a, b) {
            let gq = g(q);
            let la = dist(q, b) / dist(a, b);
            let lb = 1.0 - la;
            let uq = [
                la * v[2 * e.a] + lb * v[2 * e.b],
                la * v[2 * e.a + 1] + lb * v[2 * e.b + 1],
            ];
            total += w * (gq[0] * uq[0] + gq[1] * uq[1]);
        }
    }
    total
}

/// Minimality test: any kinematically admissible field `v` has functional
/// value at least that of the equilibrium, up to roundoff.
pub fn test_function_energy_bound(
    mesh: &CrackedMesh,
    material: &MaterialModel,
    loads: &LoadTrajectory,
    t: f64,
    u: &DisplacementField,
    v: &[f64],
) -> bool {
    for n in mesh.dirichlet_nodes() {
        let w = loads.w_at(t, mesh.nodes[n]);
        if (v[2 * n] - w[0]).abs() > 1e-9 || (v[2 * n + 1] - w[1]).abs() > 1e-9 {
            return false;
        }
    }
    let fu = functional_value(mesh, material, loads, t, &u.u);
    let fv = functional_value(mesh, material, loads, t, v);
    let scale = 1.0 + fu.abs() + fv.abs();
    fv >= fu - 1e-10 * scale
}

/// Lift the boundary datum to all mesh nodes (used as a competitor field).
pub fn lift_dirichlet(mesh: &CrackedMesh, loads: &LoadTrajectory, t: f64) -> Vec<f64> {
    let mut v = vec![0.0; 2 * mesh.num_nodes()];
    for (n, p) in mesh.nodes.iter().enumerate() {
        let w = loads.w_at(t, *p);
        v[2 * n] = w[0];
        v[2 * n + 1] = w[1];
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crack::{CrackComponent, CrackSet, OriginKind};
    use crate::domain::DomainSpec;
    use crate::material::{LoadSample, ScalarField, VecField};
    use crate::mesh::{build_mesh, MeshParams};
    use approx::assert_relative_eq;

    fn tension_domain() -> DomainSpec {
        DomainSpec::unit_square(vec![0, 2], vec![])
    }

    fn no_crack() -> CrackSet {
        CrackSet::new(vec![], 0.05).unwrap()
    }

    fn edge_crack(a: f64) -> CrackSet {
        let c =
            CrackComponent::new(vec![[0.0, 0.5], [a, 0.5]], OriginKind::BoundaryAnchored).unwrap();
        CrackSet::new(vec![c], 0.05).unwrap()
    }

    fn constant_w(profile: VecField) -> LoadTrajectory {
        LoadTrajectory {
            horizon: 1.0,
            w_profile: profile,
            f_profile: VecField::zero(),
            g_profile: VecField::zero(),
            samples: vec![
                LoadSample {
                    t: 0.0,
                    w: 1.0,
                    f: 0.0,
                    g: 0.0,
                },
                LoadSample {
                    t: 1.0,
                    w: 1.0,
                    f: 0.0,
                    g: 0.0,
                },
            ],
        }
    }

    fn expr_field(s: &str) -> ScalarField {
        ScalarField::Expr {
            expr: crate::expr::Expr::parse(s).unwrap(),
            grad: None,
        }
    }

    #[test]
    fn zero_loads_zero_solution() {
        let d = tension_domain();
        let mesh = build_mesh(
            &d,
            &no_crack(),
            MeshParams {
                h: 0.15,
                tip_grading: 1.0,
            },
        )
        .unwrap();
        let mat = MaterialModel::constant(1.0, 1.0, 1.0);
        let loads = LoadTrajectory::ramp_w(1.0, VecField::zero());
        let u = solve_equilibrium(&mesh, &mat, &loads, 0.5, SolverOptions::default()).unwrap();
        assert!(u.u.iter().all(|&x| x.abs() < 1e-14));
        let e = energies(&mesh, &u, &mat, &loads, 0.5, &no_crack()).unwrap();
        assert_eq!(e.elastic, 0.0);
        assert_eq!(e.surface, 0.0);
    }

    #[test]
    fn affine_dirichlet_reproduced_exactly() {
        // w = A x with symmetric gradient A on the whole boundary, constant
        // material, no crack: u = w exactly and E = 1/2 C A : A * area.
        let d = DomainSpec::unit_square(vec![0, 1, 2, 3], vec![]);
        let mesh = build_mesh(
            &d,
            &no_crack(),
            MeshParams {
                h: 0.2,
                tip_grading: 1.0,
            },
        )
        .unwrap();
        let (lambda, mu) = (1.3, 0.9);
        let mat = MaterialModel::constant(lambda, mu, 1.0);
        let (a, b, c) = (0.02, -0.01, 0.005);
        let loads = constant_w(VecField(
            expr_field(&format!("{a}*x + {c}*y")),
            expr_field(&format!("{c}*x + {b}*y")),
        ));
        let u = solve_equilibrium(&mesh, &mat, &loads, 0.5, SolverOptions::default()).unwrap();
        for (n, p) in mesh.nodes.iter().enumerate() {
            assert_relative_eq!(u.u[2 * n], a * p[0] + c * p[1], epsilon = 1e-9);
            assert_relative_eq!(u.u[2 * n + 1], c * p[0] + b * p[1], epsilon = 1e-9);
        }
        let e = energies(&mesh, &u, &mat, &loads, 0.5, &no_crack()).unwrap();
        let tr: f64 = a + b;
        let frob: f64 = a * a + b * b + 2.0 * c * c;
        let expect = 0.5 * (lambda * tr * tr + 2.0 * mu * frob);
        assert_relative_eq!(e.elastic, expect, epsilon = 1e-10);
    }

    #[test]
    fn longer_crack_releases_energy() {
        let d = tension_domain();
        let mat = MaterialModel::constant(1.0, 1.0, 1.0);
        let loads =
            LoadTrajectory::ramp_w(1.0, crate::material::unit_square_tension_profile(0.05));
        let params = MeshParams {
            h: 1.0 / 16.0,
            tip_grading: 4.0,
        };
        let mut by_len = Vec::new();
        for a in [0.3, 0.5] {
            let crack = edge_crack(a);
            let mesh = build_mesh(&d, &crack, params).unwrap();
            let u = solve_equilibrium(&mesh, &mat, &loads, 1.0, SolverOptions::default()).unwrap();
            let e = energies(&mesh, &u, &mat, &loads, 1.0, &crack).unwrap();
            by_len.push(e.elastic);
        }
        assert!(
            by_len[1] < by_len[0],
            "E(long) = {} should be < E(short) = {}",
            by_len[1],
            by_len[0]
        );
    }

    #[test]
    fn surface_energy_constant_kappa() {
        let mat = MaterialModel::constant(1.0, 1.0, 2.5);
        let crack = edge_crack(0.4);
        assert_relative_eq!(surface_energy(&crack, &mat), 2.5 * 0.4, epsilon = 1e-12);
        let longer = edge_crack(0.45);
        assert_relative_eq!(
            surface_energy(&longer, &mat) - surface_energy(&crack, &mat),
            2.5 * 0.05,
            epsilon = 1e-12
        );
    }

    #[test]
    fn minimality_bound_holds() {
        let d = tension_domain();
        let crack = edge_crack(0.4);
        let mesh = build_mesh(
            &d,
            &crack,
            MeshParams {
                h: 0.1,
                tip_grading: 4.0,
            },
        )
        .unwrap();
        let mat = MaterialModel::constant(1.0, 1.0, 1.0);
        let loads =
            LoadTrajectory::ramp_w(1.0, crate::material::unit_square_tension_profile(0.05));
        let u = solve_equilibrium(&mesh, &mat, &loads, 1.0, SolverOptions::default()).unwrap();
        assert!(test_function_energy_bound(
            &mesh, &mat, &loads, 1.0, &u, &u.u
        ));
        let lift = lift_dirichlet(&mesh, &loads, 1.0);
        assert!(test_function_energy_bound(
            &mesh, &mat, &loads, 1.0, &u, &lift
        ));
        // u plus a bump vanishing on the Dirichlet part (deterministic
        // pseudo-random perturbation).
        let dir: std::collections::HashSet<usize> = mesh.dirichlet_nodes().into_iter().collect();
        let mut v = u.u.clone();
        let mut state = 0x9e3779b97f4a7c15u64;
        for n in 0..mesh.num_nodes() {
            if dir.contains(&n) {
                continue;
            }
            for c in 0..2 {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                let r = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                v[2 * n + c] += 1e-3 * r;
            }
        }
        assert!(test_function_energy_bound(&mesh, &mat, &loads, 1.0, &u, &v));
        let fu = functional_value(&mesh, &mat, &loads, 1.0, &u.u);
        let fv = functional_value(&mesh, &mat, &loads, 1.0, &v);
        assert!(fv > fu);
    }

    #[test]
    fn rigid_motion_gives_zero_energy() {
        let d = DomainSpec::unit_square(vec![0, 1, 2, 3], vec![]);
        let mesh = build_mesh(
            &d,
            &no_crack(),
            MeshParams {
                h: 0.2,
                tip_grading: 1.0,
            },
        )
        .unwrap();
        let mat = MaterialModel::constant(2.0, 1.0, 1.0);
        // Linearized rigid motion: translation plus infinitesimal rotation.
        let loads = constant_w(VecField(
            expr_field("0.01 - 0.03*y"),
            expr_field("-0.02 + 0.03*x"),
        ));
        let u = solve_equilibrium(&mesh, &mat, &loads, 0.0, SolverOptions::default()).unwrap();
        let e = energies(&mesh, &u, &mat, &loads, 0.0, &no_crack()).unwrap();
        assert!(e.elastic.abs() < 1e-12, "rigid motion energy {}", e.elastic);
    }

    #[test]
    fn missing_dirichlet_is_an_error() {
        let d = DomainSpec::unit_square(vec![], vec![]);
        let mesh = build_mesh(
            &d,
            &no_crack(),
            MeshParams {
                h: 0.2,
                tip_grading: 1.0,
            },
        )
        .unwrap();
        let mat = MaterialModel::constant(1.0, 1.0, 1.0);
        let loads = LoadTrajectory::ramp_w(1.0, VecField::zero());
        let r = solve_equilibrium(&mesh, &mat, &loads, 0.5, SolverOptions::default());
        assert!(matches!(r, Err(Error::InsufficientDirichlet)));
    }

    #[test]
    fn cg_and_direct_agree() {
        let d = tension_domain();
        let crack = edge_crack(0.35);
        let mesh = build_mesh(
            &d,
            &crack,
            MeshParams {
                h: 0.1,
                tip_grading: 4.0,
            },
        )
        .unwrap();
        let mat = MaterialModel::constant(1.0, 1.0, 1.0);
        let loads =
            LoadTrajectory::ramp_w(1.0, crate::material::unit_square_tension_profile(0.05));
        let ud = solve_equilibrium(
            &mesh,
            &mat,
            &loads,
            1.0,
            SolverOptions {
                kind: SolverKind::Direct,
                rtol: 1e-12,
            },
        )
        .unwrap();
        let uc = solve_equilibrium(
            &mesh,
            &mat,
            &loads,
            1.0,
            SolverOptions {
                kind: SolverKind::Cg,
                rtol: 1e-12,
            },
        )
        .unwrap();
        let scale = ud.u.iter().map(|x| x.abs()).fold(0.0f64, f64::max);
        for (a, b) in ud.u.iter().zip(&uc.u) {
            assert!((a - b).abs() <= 1e-8 * scale.max(1.0));
        }
    }

    #[test]
    fn energy_monotone_under_red_refinement() {
        // Nested spaces on a pure-Dirichlet problem: energy nonincreasing,
        // with shrinking increments.
        let d = tension_domain();
        let crack = edge_crack(0.4);
        let mat = MaterialModel::constant(1.0, 1.0, 1.0);
        let loads =
            LoadTrajectory::ramp_w(1.0, crate::material::unit_square_tension_profile(0.05));
        let mut mesh = build_mesh(
            &d,
            &crack,
            MeshParams {
                h: 0.14,
                tip_grading: 2.0,
            },
        )
        .unwrap();
        let mut prev = f64::INFINITY;
        let mut diffs = Vec::new();
        for _ in 0..3 {
            let u = solve_equilibrium(&mesh, &mat, &loads, 1.0, SolverOptions::default()).unwrap();
            let e = energies(&mesh, &u, &mat, &loads, 1.0, &crack).unwrap();
            assert!(e.elastic <= prev + 1e-12);
            if prev.is_finite() {
                diffs.push(prev - e.elastic);
            }
            prev = e.elastic;
            mesh = mesh.refine_uniform();
        }
        assert!(diffs[1] < diffs[0]);
    }
}
