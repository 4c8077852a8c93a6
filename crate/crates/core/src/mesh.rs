//! Crack-conforming triangulations.
//!
//! The mesher seeds a deterministic point set (boundary chains, crack
//! chains, graded rings around each tip, a hexagonal background lattice),
//! runs a constrained Delaunay triangulation with the boundary and crack
//! polylines as constraint edges, keeps the triangles inside the polygon,
//! and then duplicates the crack-face nodes so the two sides of each crack
//! are topologically disconnected. The crack is traction-free simply
//! because no coupling exists across duplicated nodes.
//!
//! Point seeding is a pure function of `(domain, crack, h, tip_grading)`;
//! the patch of ring points around a tip is anchored at the tip and aligned
//! with its tangent, so meshes for slightly extended cracks differ only by
//! a rigid shift of the tip neighborhood. Energy differences between such
//! meshes are then dominated by the physics, not by remeshing noise.

use std::collections::HashMap;

use spade::{ConstrainedDelaunayTriangulation, Point2 as SpadePoint, Triangulation};

use crate::crack::{CrackSet, OriginKind};
use crate::domain::{BoundaryKind, DomainSpec};
use crate::geom::{add, cross, dist, normalize, point_polyline_distance, scale, sub, Pt};
use crate::{Error, Result};

/// Rings of graded points placed around each crack tip.
const RING_COUNT: usize = 4;
/// Points per ring; gives a size growth factor of about two per ring.
const RING_POINTS: usize = 12;

#[derive(Debug, Clone, Copy)]
pub struct MeshParams {
    /// Target element size away from tips.
    pub h: f64,
    /// Near-tip refinement factor; element size near a tip is `<= h / tip_grading`.
    pub tip_grading: f64,
}

impl Default for MeshParams {
    fn default() -> Self {
        MeshParams {
            h: 0.05,
            tip_grading: 8.0,
        }
    }
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub kind: BoundaryKind,
    /// Index of the parent polygon edge.
    pub parent: usize,
}

/// A conforming triangulation of the cracked domain.
#[derive(Debug, Clone)]
pub struct CrackedMesh {
    pub nodes: Vec<Pt>,
    /// Triangles with positive (counterclockwise) orientation.
    pub tris: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Pairs `(minus_side_node, plus_side_node)` created by duplication.
    pub duplicated: Vec<(usize, usize)>,
    /// Tip node per crack component (empty when there is no crack).
    pub tip_nodes: Vec<usize>,
    /// Crack chain node ids per component, minus side (original nodes).
    pub crack_minus_nodes: Vec<Vec<usize>>,
    /// Crack chain node ids per component, plus side (duplicates where split).
    pub crack_plus_nodes: Vec<Vec<usize>>,
    /// Mean incident edge length per node.
    pub node_size: Vec<f64>,
    pub h: f64,
    pub tip_grading: f64,
}

impl CrackedMesh {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Sorted node ids lying on the Dirichlet part of the boundary.
    pub fn dirichlet_nodes(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .boundary_edges
            .iter()
            .filter(|e| e.kind == BoundaryKind::Dirichlet)
            .flat_map(|e| [e.a, e.b])
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn tri_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.tris[t];
        0.5 * cross(
            sub(self.nodes[b], self.nodes[a]),
            sub(self.nodes[c], self.nodes[a]),
        )
    }

    /// Largest node size among nodes within `r` of `center`.
    pub fn max_size_within(&self, center: Pt, r: f64) -> f64 {
        let mut m = 0.0f64;
        for (i, p) in self.nodes.iter().enumerate() {
            if dist(*p, center) <= r {
                m = m.max(self.node_size[i]);
            }
        }
        m
    }

    /// Local size at the node nearest to `p`.
    pub fn size_near(&self, p: Pt) -> f64 {
        let mut best = (f64::INFINITY, 0.0);
        for (i, q) in self.nodes.iter().enumerate() {
            let d = dist(*q, p);
            if d < best.0 {
                best = (d, self.node_size[i]);
            }
        }
        best.1
    }

    /// Red refinement: every triangle splits into four via edge midpoints.
    ///
    /// The refined space contains the coarse one, which makes elastic
    /// energies monotone under refinement. Duplicated crack chords on the
    /// two sides are distinct node pairs, so their midpoints are duplicated
    /// automatically.
    pub fn refine_uniform(&self) -> CrackedMesh {
        let mut nodes = self.nodes.clone();
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, nodes: &mut Vec<Pt>| -> usize {
            let key = (a.min(b), a.max(b));
            if let Some(&m) = midpoint.get(&key) {
                return m;
            }
            let p = scale(add(nodes[a], nodes[b]), 0.5);
            nodes.push(p);
            let id = nodes.len() - 1;
            midpoint.insert(key, id);
            id
        };
        let mut tris = Vec::with_capacity(self.tris.len() * 4);
        for &[a, b, c] in &self.tris {
            let ab = mid(a, b, &mut nodes);
            let bc = mid(b, c, &mut nodes);
            let ca = mid(c, a, &mut nodes);
            tris.push([a, ab, ca]);
            tris.push([ab, b, bc]);
            tris.push([ca, bc, c]);
            tris.push([ab, bc, ca]);
        }
        let mut boundary_edges = Vec::with_capacity(self.boundary_edges.len() * 2);
        for e in &self.boundary_edges {
            let m = mid(e.a, e.b, &mut nodes);
            boundary_edges.push(BoundaryEdge { a: e.a, b: m, ..*e });
            boundary_edges.push(BoundaryEdge { a: m, b: e.b, ..*e });
        }
        let mut duplicated = self.duplicated.clone();
        let chain_mid = |chain: &[usize], midpoint: &HashMap<(usize, usize), usize>| -> Vec<usize> {
            let mut out = Vec::with_capacity(chain.len() * 2);
            for w in chain.windows(2) {
                out.push(w[0]);
                let key = (w[0].min(w[1]), w[0].max(w[1]));
                out.push(*midpoint.get(&key).expect("crack edge was refined"));
            }
            out.extend(chain.last());
            out
        };
        let crack_minus_nodes: Vec<Vec<usize>> = self
            .crack_minus_nodes
            .iter()
            .map(|c| chain_mid(c, &midpoint))
            .collect();
        let crack_plus_nodes: Vec<Vec<usize>> = self
            .crack_plus_nodes
            .iter()
            .map(|c| chain_mid(c, &midpoint))
            .collect();
        for (mi, pl) in crack_minus_nodes.iter().zip(&crack_plus_nodes) {
            for (&a, &b) in mi.iter().zip(pl) {
                if a != b && !duplicated.contains(&(a, b)) {
                    duplicated.push((a, b));
                }
            }
        }
        let mut out = CrackedMesh {
            nodes,
            tris,
            boundary_edges,
            duplicated,
            tip_nodes: self.tip_nodes.clone(),
            crack_minus_nodes,
            crack_plus_nodes,
            node_size: Vec::new(),
            h: self.h / 2.0,
            tip_grading: self.tip_grading,
        };
        out.node_size = compute_node_sizes(&out.nodes, &out.tris);
        out
    }

    /// Export in the classic Triangle ASCII format: a `.node` and a `.ele`
    /// file next to each other.
    pub fn export_triangle(&self, base: &std::path::Path) -> Result<()> {
        use std::io::Write;
        let mut node = std::fs::File::create(base.with_extension("node"))?;
        writeln!(node, "{} 2 0 1", self.nodes.len())?;
        let on_boundary: std::collections::HashSet<usize> = self
            .boundary_edges
            .iter()
            .flat_map(|e| [e.a, e.b])
            .collect();
        for (i, p) in self.nodes.iter().enumerate() {
            let marker = if on_boundary.contains(&i) { 1 } else { 0 };
            writeln!(node, "{} {:.17e} {:.17e} {}", i, p[0], p[1], marker)?;
        }
        let mut ele = std::fs::File::create(base.with_extension("ele"))?;
        writeln!(ele, "{} 3 0", self.tris.len())?;
        for (i, t) in self.tris.iter().enumerate() {
            writeln!(ele, "{} {} {} {}", i, t[0], t[1], t[2])?;
        }
        Ok(())
    }
}

fn compute_node_sizes(nodes: &[Pt], tris: &[[usize; 3]]) -> Vec<f64> {
    let mut sum = vec![0.0f64; nodes.len()];
    let mut count = vec![0usize; nodes.len()];
    for t in tris {
        for i in 0..3 {
            let (a, b) = (t[i], t[(i + 1) % 3]);
            let d = dist(nodes[a], nodes[b]);
            sum[a] += d;
            sum[b] += d;
            count[a] += 1;
            count[b] += 1;
        }
    }
    sum.iter()
        .zip(&count)
        .map(|(s, c)| if *c > 0 { s / *c as f64 } else { 0.0 })
        .collect()
}

/// Graded ring radii and spacings around a tip for the given parameters.
fn ring_layout(h: f64, grading: f64) -> Vec<(f64, f64)> {
    let h_tip = h / grading.max(1.0);
    let gamma = grading.max(1.0).powf(1.0 / (RING_COUNT as f64 - 1.0));
    (1..=RING_COUNT)
        .map(|j| {
            let r = 1.6 * h_tip * gamma.powi(j as i32 - 1);
            let s = 2.0 * std::f64::consts::PI * r / RING_POINTS as f64;
            (r, s)
        })
        .collect()
}

/// Outermost ring radius; beyond it the size field is the background `h`.
fn patch_radius(h: f64, grading: f64) -> f64 {
    ring_layout(h, grading).last().map(|(r, _)| *r).unwrap_or(0.0)
}

/// Target element size at `p` for the given tips.
fn size_at(p: Pt, h: f64, grading: f64, tips: &[Pt]) -> f64 {
    let h_tip = h / grading.max(1.0);
    let r_out = patch_radius(h, grading);
    let mut s = h;
    for tip in tips {
        let d = dist(p, *tip);
        if d < r_out {
            s = s.min(h_tip.max(d * (h - h_tip) / r_out + h_tip * 0.5).min(h));
        }
    }
    s
}

struct PointBank {
    points: Vec<Pt>,
    lookup: HashMap<(i64, i64), usize>,
    quantum: f64,
}

impl PointBank {
    fn new(diam: f64) -> Self {
        PointBank {
            points: Vec::new(),
            lookup: HashMap::new(),
            quantum: diam * 1e-12,
        }
    }

    fn key(&self, p: Pt) -> (i64, i64) {
        (
            (p[0] / self.quantum).round() as i64,
            (p[1] / self.quantum).round() as i64,
        )
    }

    fn insert(&mut self, p: Pt) -> usize {
        let k = self.key(p);
        if let Some(&i) = self.lookup.get(&k) {
            return i;
        }
        self.points.push(p);
        let i = self.points.len() - 1;
        self.lookup.insert(k, i);
        i
    }

    fn get(&self, p: Pt) -> Option<usize> {
        self.lookup.get(&self.key(p)).copied()
    }
}

/// Resample a polyline: keep every original vertex, insert extra points so
/// local spacing respects the size field, and near the last vertex (the
/// tip) insert points at fixed arc distances from the tip so the tip
/// neighborhood translates rigidly when the curve extends straight.
fn resample_polyline(verts: &[Pt], h: f64, grading: f64, tips: &[Pt], graded_end: bool) -> Vec<Pt> {
    // Arc positions of the original vertices.
    let mut arcs = vec![0.0];
    for w in verts.windows(2) {
        arcs.push(arcs.last().unwrap() + dist(w[0], w[1]));
    }
    let total = *arcs.last().unwrap();
    let point_at = |s: f64| -> Pt {
        let s = s.clamp(0.0, total);
        let mut i = arcs.partition_point(|a| *a <= s);
        i = i.clamp(1, verts.len() - 1);
        let t = (s - arcs[i - 1]) / (arcs[i] - arcs[i - 1]);
        add(verts[i - 1], scale(sub(verts[i], verts[i - 1]), t))
    };

    let mut positions: Vec<f64> = arcs.clone();
    // Tip-anchored graded ladder: arc distances measured from the tip, so
    // the tip neighborhood translates rigidly when the curve extends
    // straight. Critical for clean finite differences of the energy.
    let mut ladder_low = total;
    if graded_end {
        let h_tip = h / grading.max(1.0);
        let r_lad = patch_radius(h, grading) + 4.0 * h;
        let mut d = h_tip;
        while d < r_lad.min(total) {
            positions.push(total - d);
            ladder_low = total - d;
            d += size_at(point_at(total - d), h, grading, tips);
        }
    }
    // Greedy forward fill anchored at the origin: positions depend only on
    // the size field along the way, never on the total length, so two
    // cracks sharing a prefix sample that prefix identically. The fill
    // stops short of the ladder; a joint cell bridges the remaining gap
    // with an even subdivision, keeping the fill/ladder interaction down
    // to a single deterministic cell.
    let mut s = 0.0;
    let mut s_last = 0.0;
    loop {
        let step = size_at(point_at(s), h, grading, tips);
        if s + 1.6 * step >= ladder_low {
            break;
        }
        s += step;
        s_last = s;
        positions.push(s);
    }
    let gap = ladder_low - s_last;
    if gap > 1e-12 {
        let step = size_at(point_at(0.5 * (s_last + ladder_low)), h, grading, tips);
        let n = (gap / step).round().max(1.0) as usize;
        for j in 1..n {
            positions.push(s_last + gap * j as f64 / n as f64);
        }
    }
    positions.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // Crowding cleanup around the (fixed) original vertices.
    let is_vertex = |s: f64| arcs.iter().any(|a| (a - s).abs() < 1e-12);
    let mut cleaned: Vec<f64> = Vec::with_capacity(positions.len());
    for s in positions {
        let s_local = size_at(point_at(s), h, grading, tips);
        if !is_vertex(s) && arcs.iter().any(|a| (a - s).abs() < 0.4 * s_local) {
            continue;
        }
        if let Some(&last) = cleaned.last() {
            if s - last < 1e-12 || (!is_vertex(s) && s - last < 0.3 * s_local) {
                continue;
            }
        }
        cleaned.push(s);
    }
    if (cleaned.last().unwrap() - total).abs() > 1e-12 {
        cleaned.push(total);
    }
    cleaned.iter().map(|&s| point_at(s)).collect()
}

/// Build a conforming mesh of the cracked domain.
///
/// Crack vertices must not coincide with polygon corners, and distinct
/// components may only meet at shared polyline vertices; both conditions
/// are reported as meshing errors with the offending location.
pub fn build_mesh(
    domain: &DomainSpec,
    crack: &CrackSet,
    params: MeshParams,
) -> Result<CrackedMesh> {
    let h = params.h;
    if !(h > 0.0) {
        return Err(Error::Meshing("mesh size h must be positive".into()));
    }
    let grading = params.tip_grading.max(1.0);
    let diam = domain.diameter();
    let snap = 1e-9 * diam;

    for (m, c) in crack.components.iter().enumerate() {
        for v in c.vertices() {
            if domain.distance_to_corners(*v) <= snap {
                return Err(Error::Meshing(format!(
                    "crack component {m} has a vertex at polygon corner ({:.6}, {:.6})",
                    v[0], v[1]
                )));
            }
        }
    }
    // Components may only meet at shared vertices (constraint edges must
    // not cross).
    for a in 0..crack.components.len() {
        for b in a + 1..crack.components.len() {
            let ca = crack.components[a].vertices();
            let cb = crack.components[b].vertices();
            for sa in ca.windows(2) {
                for sb in cb.windows(2) {
                    if let Some(p) =
                        crate::geom::segment_intersection(sa[0], sa[1], sb[0], sb[1], 1e-12)
                    {
                        let shared = ca.iter().any(|v| dist(*v, p) <= snap)
                            && cb.iter().any(|v| dist(*v, p) <= snap);
                        if !shared {
                            return Err(Error::Meshing(format!(
                                "components {a} and {b} cross away from a shared vertex at ({:.6}, {:.6})",
                                p[0], p[1]
                            )));
                        }
                    }
                }
            }
        }
    }

    let tips: Vec<Pt> = crack.components.iter().map(|c| c.tip()).collect();
    let mut bank = PointBank::new(diam);

    // Boundary chains, forced through crack anchor points.
    let polygon = domain.polygon();
    let mut boundary_chains: Vec<(usize, Vec<usize>)> = Vec::new();
    for e in 0..polygon.num_edges() {
        let (a, b) = polygon.edge(e);
        let len = dist(a, b);
        let dir = normalize(sub(b, a));
        let mut forced = vec![0.0, len];
        for c in &crack.components {
            if c.origin_kind() == OriginKind::BoundaryAnchored {
                let anchor = c.vertices()[0];
                if crate::geom::point_segment_distance(anchor, a, b) <= snap {
                    forced.push(crate::geom::dot(sub(anchor, a), dir));
                }
            }
        }
        forced.sort_by(|x, y| x.partial_cmp(y).unwrap());
        forced.dedup_by(|x, y| (*x - *y).abs() <= snap);
        let mut chain = Vec::new();
        for w in forced.windows(2) {
            let gap = w[1] - w[0];
            let mid = add(a, scale(dir, 0.5 * (w[0] + w[1])));
            let s_local = size_at(mid, h, grading, &tips);
            let n = (gap / s_local).ceil().max(1.0) as usize;
            for j in 0..n {
                let s = w[0] + gap * j as f64 / n as f64;
                chain.push(bank.insert(add(a, scale(dir, s))));
            }
        }
        chain.push(bank.insert(b));
        boundary_chains.push((e, chain));
    }

    // Crack chains.
    let mut crack_chains: Vec<Vec<usize>> = Vec::new();
    for c in &crack.components {
        let pts = resample_polyline(c.vertices(), h, grading, &tips, true);
        crack_chains.push(pts.into_iter().map(|p| bank.insert(p)).collect());
    }

    // Tip rings, aligned with the tip tangent and offset half a step so no
    // ring point falls on the crack line. Graded rings realize the size
    // grading; padding rings at background spacing extend the translating
    // patch so remeshing differences between nearby tip positions stay far
    // from the singularity.
    let mut rings = ring_layout(h, grading);
    let r_graded = patch_radius(h, grading);
    let mut r_pad = r_graded + 0.8 * h;
    while r_pad <= r_graded + 4.0 * h + 1e-12 {
        rings.push((r_pad, 0.9 * h));
        r_pad += 0.8 * h;
    }
    for (m, c) in crack.components.iter().enumerate() {
        let tip = c.tip();
        let tan = c.tip_tangent();
        let base_angle = tan[1].atan2(tan[0]);
        for (r, s) in &rings {
            let count = RING_POINTS
                .max((2.0 * std::f64::consts::PI * r / s).round() as usize);
            for i in 0..count {
                let th = base_angle
                    + (i as f64 + 0.5) * 2.0 * std::f64::consts::PI / count as f64;
                let p = add(tip, [r * th.cos(), r * th.sin()]);
                if !domain.contains(p) || domain.distance_to_boundary(p) < 0.5 * s {
                    continue;
                }
                let d_crack = crack
                    .components
                    .iter()
                    .map(|cc| point_polyline_distance(p, cc.vertices()))
                    .fold(f64::INFINITY, f64::min);
                if d_crack < 0.7 * s {
                    continue;
                }
                let near_other_tip = tips
                    .iter()
                    .enumerate()
                    .any(|(l, t)| l != m && dist(p, *t) < dist(p, tip));
                if near_other_tip {
                    continue;
                }
                bank.insert(p);
            }
        }
    }

    // Hexagonal background lattice.
    let (lo, hi) = polygon.bbox();
    let r_out = patch_radius(h, grading);
    let dy = h * 0.8660254037844386;
    let ny = ((hi[1] - lo[1]) / dy).ceil() as i64;
    let nx = ((hi[0] - lo[0]) / h).ceil() as i64 + 1;
    for j in 1..ny {
        let y = lo[1] + j as f64 * dy;
        let off = if j % 2 == 0 { 0.0 } else { 0.5 * h };
        for i in 0..nx {
            // Deterministic jitter breaks the cocircular degeneracies of a
            // perfect lattice, which would otherwise leave triangle flips
            // to floating-point ties.
            let mut hsh = (i as u64)
                .wrapping_mul(0x9e3779b97f4a7c15)
                .wrapping_add((j as u64).wrapping_mul(0xbf58476d1ce4e5b9));
            hsh ^= hsh >> 31;
            hsh = hsh.wrapping_mul(0x94d049bb133111eb);
            let jx = ((hsh & 0xffff) as f64 / 65535.0 - 0.5) * 0.12 * h;
            let jy = (((hsh >> 16) & 0xffff) as f64 / 65535.0 - 0.5) * 0.12 * h;
            let p = [lo[0] + off + i as f64 * h + jx, y + jy];
            if !domain.contains(p) || domain.distance_to_boundary(p) < 0.55 * h {
                continue;
            }
            if tips.iter().any(|t| dist(p, *t) < r_out + 4.55 * h) {
                continue;
            }
            let d_crack = crack
                .components
                .iter()
                .map(|c| point_polyline_distance(p, c.vertices()))
                .fold(f64::INFINITY, f64::min);
            if d_crack < 0.7 * h {
                continue;
            }
            bank.insert(p);
        }
    }

    // Constrained Delaunay triangulation.
    let mut cdt: ConstrainedDelaunayTriangulation<SpadePoint<f64>> =
        ConstrainedDelaunayTriangulation::new();
    let mut handles = Vec::with_capacity(bank.points.len());
    for p in &bank.points {
        let handle = cdt
            .insert(SpadePoint::new(p[0], p[1]))
            .map_err(|e| Error::Meshing(format!("point insertion failed: {e:?}")))?;
        handles.push(handle);
    }
    let constrain = |cdt: &mut ConstrainedDelaunayTriangulation<SpadePoint<f64>>,
                     chain: &[usize],
                     handles: &Vec<spade::handles::FixedVertexHandle>| {
        for w in chain.windows(2) {
            if w[0] != w[1] {
                cdt.add_constraint(handles[w[0]], handles[w[1]]);
            }
        }
    };
    for (_, chain) in &boundary_chains {
        constrain(&mut cdt, chain, &handles);
    }
    for chain in &crack_chains {
        constrain(&mut cdt, chain, &handles);
    }

    // Map handles to bank indices.
    let mut handle_to_id = vec![usize::MAX; cdt.num_vertices()];
    for (id, hdl) in handles.iter().enumerate() {
        handle_to_id[hdl.index()] = id;
    }

    let mut nodes = bank.points.clone();
    let mut tris: Vec<[usize; 3]> = Vec::new();
    for face in cdt.inner_faces() {
        let vs = face.vertices();
        let ids = [
            handle_to_id[vs[0].fix().index()],
            handle_to_id[vs[1].fix().index()],
            handle_to_id[vs[2].fix().index()],
        ];
        if ids.iter().any(|&i| i == usize::MAX) {
            return Err(Error::Meshing("triangulation produced unknown vertex".into()));
        }
        let centroid = scale(
            add(add(nodes[ids[0]], nodes[ids[1]]), nodes[ids[2]]),
            1.0 / 3.0,
        );
        if !polygon.contains(centroid) {
            continue;
        }
        let area = 0.5
            * cross(
                sub(nodes[ids[1]], nodes[ids[0]]),
                sub(nodes[ids[2]], nodes[ids[0]]),
            );
        if area > 0.0 {
            tris.push(ids);
        } else {
            tris.push([ids[0], ids[2], ids[1]]);
        }
    }
    if tris.is_empty() {
        return Err(Error::Meshing("no interior triangles".into()));
    }

    // Conformity: every crack chord must be a triangulation edge.
    let mut edge_set: std::collections::HashSet<(usize, usize)> = std::collections::HashSet::new();
    for t in &tris {
        for i in 0..3 {
            let (a, b) = (t[i], t[(i + 1) % 3]);
            edge_set.insert((a.min(b), a.max(b)));
        }
    }
    for (m, chain) in crack_chains.iter().enumerate() {
        for w in chain.windows(2) {
            if !edge_set.contains(&(w[0].min(w[1]), w[0].max(w[1]))) {
                let p = nodes[w[0]];
                return Err(Error::Meshing(format!(
                    "crack component {m} is not conforming near ({:.6}, {:.6})",
                    p[0], p[1]
                )));
            }
        }
    }

    // Duplication chains: boundary-anchored components stand alone;
    // interior-split components pair up through their shared origin.
    let mut node_tris: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for (ti, t) in tris.iter().enumerate() {
        for &n in t {
            node_tris[n].push(ti);
        }
    }
    let mut chains: Vec<Vec<usize>> = Vec::new();
    let mut used = vec![false; crack.components.len()];
    for (m, c) in crack.components.iter().enumerate() {
        if used[m] {
            continue;
        }
        match c.origin_kind() {
            OriginKind::BoundaryAnchored => {
                used[m] = true;
                chains.push(crack_chains[m].clone());
            }
            OriginKind::InteriorSplit => {
                let origin = c.vertices()[0];
                let partner = crack.components.iter().enumerate().position(|(l, cc)| {
                    l != m
                        && !used[l]
                        && cc.origin_kind() == OriginKind::InteriorSplit
                        && dist(cc.vertices()[0], origin) <= snap
                });
                let Some(l) = partner else {
                    return Err(Error::Meshing(format!(
                        "interior-split component {m} has no partner sharing its origin"
                    )));
                };
                used[m] = true;
                used[l] = true;
                let mut chain: Vec<usize> = crack_chains[m].iter().rev().copied().collect();
                chain.extend(crack_chains[l].iter().skip(1));
                chains.push(chain);
            }
        }
    }

    let mut duplicated: Vec<(usize, usize)> = Vec::new();
    let mut dup_of: HashMap<usize, usize> = HashMap::new();
    for chain in &chains {
        let n = chain.len();
        for (k, &v) in chain.iter().enumerate() {
            let anchored_start = k == 0 && {
                // The chain start is a tip for interior chains and a
                // boundary anchor for anchored chains; only the latter
                // splits.
                domain.distance_to_boundary(nodes[v]) <= snap
            };
            let interior_vertex = k > 0 && k < n - 1;
            if !(anchored_start || interior_vertex) {
                continue;
            }
            let p = nodes[v];
            let d_next = normalize(sub(nodes[chain[k + 1]], p));
            let d_prev = if k > 0 {
                Some(normalize(sub(nodes[chain[k - 1]], p)))
            } else {
                None
            };
            let is_plus = move |q: Pt| -> bool {
                match d_prev {
                    None => cross(d_next, sub(q, p)) > 0.0,
                    Some(d_prev) => {
                        let th_next = d_next[1].atan2(d_next[0]);
                        let th_prev = d_prev[1].atan2(d_prev[0]);
                        let d = sub(q, p);
                        let th_q = d[1].atan2(d[0]);
                        let two_pi = 2.0 * std::f64::consts::PI;
                        let ccw = |from: f64, to: f64| (to - from).rem_euclid(two_pi);
                        ccw(th_next, th_q) < ccw(th_next, th_prev)
                    }
                }
            };
            nodes.push(p);
            let dup = nodes.len() - 1;
            duplicated.push((v, dup));
            dup_of.insert(v, dup);
            for &ti in &node_tris[v] {
                let centroid = scale(
                    add(
                        add(nodes[tris[ti][0]], nodes[tris[ti][1]]),
                        nodes[tris[ti][2]],
                    ),
                    1.0 / 3.0,
                );
                if is_plus(centroid) {
                    for slot in tris[ti].iter_mut() {
                        if *slot == v {
                            *slot = dup;
                        }
                    }
                }
            }
        }
    }

    // Boundary edges, rerouting plus-side edges at split anchors.
    let mut boundary_edges = Vec::new();
    for (parent, chain) in &boundary_chains {
        let kind = domain.edge_kind(*parent);
        for w in chain.windows(2) {
            let mut ends = [w[0], w[1]];
            for i in 0..2 {
                let v = ends[i];
                let Some(&dup) = dup_of.get(&v) else { continue };
                // An anchor was split: boundary edges on the plus side of
                // the crack must reference the duplicate. Decide by the
                // side of the opposite endpoint relative to the first
                // crack chord leaving the anchor.
                let anchor = nodes[v];
                let other = nodes[ends[1 - i]];
                if let Some(ch) = chains.iter().find(|c| c.first() == Some(&v)) {
                    let d_next = normalize(sub(nodes[ch[1]], anchor));
                    if cross(d_next, sub(other, anchor)) > 0.0 {
                        ends[i] = dup;
                    }
                }
            }
            boundary_edges.push(BoundaryEdge {
                a: ends[0],
                b: ends[1],
                kind,
                parent: *parent,
            });
        }
    }

    let crack_minus_nodes = crack_chains.clone();
    let crack_plus_nodes: Vec<Vec<usize>> = crack_chains
        .iter()
        .map(|chain| {
            chain
                .iter()
                .map(|v| dup_of.get(v).copied().unwrap_or(*v))
                .collect()
        })
        .collect();
    let tip_nodes: Vec<usize> = crack_chains
        .iter()
        .map(|chain| *chain.last().unwrap())
        .collect();

    let node_size = compute_node_sizes(&nodes, &tris);
    Ok(CrackedMesh {
        nodes,
        tris,
        boundary_edges,
        duplicated,
        tip_nodes,
        crack_minus_nodes,
        crack_plus_nodes,
        node_size,
        h,
        tip_grading: grading,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crack::CrackComponent;
    use approx::assert_relative_eq;

    fn unit_domain() -> DomainSpec {
        DomainSpec::unit_square(vec![0, 2], vec![])
    }

    fn edge_crack(a: f64, eta: f64) -> CrackSet {
        let comp =
            CrackComponent::new(vec![[0.0, 0.5], [a, 0.5]], OriginKind::BoundaryAnchored).unwrap();
        CrackSet::new(vec![comp], eta).unwrap()
    }

    fn total_area(m: &CrackedMesh) -> f64 {
        (0..m.tris.len()).map(|t| m.tri_area(t)).sum()
    }

    #[test]
    fn plain_square_no_duplicates() {
        let crack = CrackSet::new(vec![], 0.05).unwrap();
        let m = build_mesh(
            &unit_domain(),
            &crack,
            MeshParams {
                h: 0.1,
                tip_grading: 1.0,
            },
        )
        .unwrap();
        assert!(m.duplicated.is_empty());
        assert_relative_eq!(total_area(&m), 1.0, epsilon = 1e-10);
        assert!(m.tris.iter().all(|_| true));
    }

    #[test]
    fn straight_crack_duplicates_interior_vertices() {
        let crack = edge_crack(0.5, 0.05);
        let m = build_mesh(
            &unit_domain(),
            &crack,
            MeshParams {
                h: 0.1,
                tip_grading: 4.0,
            },
        )
        .unwrap();
        // Area is preserved: the slit has measure zero.
        assert_relative_eq!(total_area(&m), 1.0, epsilon = 1e-10);
        // Every chain node except the tip is duplicated.
        let chain = &m.crack_minus_nodes[0];
        assert_eq!(m.duplicated.len(), chain.len() - 1);
        let tip = m.tip_nodes[0];
        assert!(m.duplicated.iter().all(|(a, b)| *a != tip && *b != tip));
        // Duplicates coincide geometrically.
        for (a, b) in &m.duplicated {
            assert_eq!(m.nodes[*a], m.nodes[*b]);
        }
        // Plus and minus chains share only the tip.
        let plus = &m.crack_plus_nodes[0];
        for (i, (a, b)) in chain.iter().zip(plus).enumerate() {
            if i == chain.len() - 1 {
                assert_eq!(a, b);
            } else {
                assert_ne!(a, b);
            }
        }
        // All triangles positively oriented.
        for t in 0..m.tris.len() {
            assert!(m.tri_area(t) > 0.0);
        }
    }

    #[test]
    fn tip_grading_controls_local_size() {
        let crack = edge_crack(0.5, 0.05);
        let h = 0.1;
        let m = build_mesh(
            &unit_domain(),
            &crack,
            MeshParams {
                h,
                tip_grading: 8.0,
            },
        )
        .unwrap();
        // The last crack chord realizes the near-tip element size.
        let chain = &m.crack_minus_nodes[0];
        let chord = dist(
            m.nodes[chain[chain.len() - 1]],
            m.nodes[chain[chain.len() - 2]],
        );
        assert!(chord <= h / 8.0 * 1.2, "tip chord {chord} too coarse");
    }

    #[test]
    fn refinement_quadruples_node_count_roughly() {
        let crack = edge_crack(0.4, 0.05);
        let p1 = MeshParams {
            h: 0.1,
            tip_grading: 4.0,
        };
        let p2 = MeshParams {
            h: 0.05,
            tip_grading: 4.0,
        };
        let m1 = build_mesh(&unit_domain(), &crack, p1).unwrap();
        let m2 = build_mesh(&unit_domain(), &crack, p2).unwrap();
        let ratio = m2.num_nodes() as f64 / m1.num_nodes() as f64;
        assert!(
            (2.8..=5.2).contains(&ratio),
            "node growth ratio {ratio} outside 4 +- 30%"
        );
    }

    #[test]
    fn red_refinement_preserves_structure() {
        let crack = edge_crack(0.4, 0.05);
        let m = build_mesh(
            &unit_domain(),
            &crack,
            MeshParams {
                h: 0.12,
                tip_grading: 2.0,
            },
        )
        .unwrap();
        let r = m.refine_uniform();
        assert_eq!(r.tris.len(), 4 * m.tris.len());
        assert_relative_eq!(total_area(&r), 1.0, epsilon = 1e-10);
        for t in 0..r.tris.len() {
            assert!(r.tri_area(t) > 0.0);
        }
        // Crack chain doubled, duplicate pairs still coincide.
        assert_eq!(
            r.crack_minus_nodes[0].len(),
            2 * m.crack_minus_nodes[0].len() - 1
        );
        for (a, b) in &r.duplicated {
            assert_eq!(r.nodes[*a], r.nodes[*b]);
        }
    }

    #[test]
    fn crack_through_corner_rejected() {
        let comp = CrackComponent::new(
            vec![[0.0, 0.0], [0.3, 0.3]],
            OriginKind::BoundaryAnchored,
        )
        .unwrap();
        let crack = CrackSet::new(vec![comp], 0.05).unwrap();
        let r = build_mesh(&unit_domain(), &crack, MeshParams::default());
        assert!(matches!(r, Err(Error::Meshing(_))));
    }

    #[test]
    fn interior_seed_duplicates_split_point() {
        let left = CrackComponent::new(
            vec![[0.5, 0.5], [0.35, 0.5]],
            OriginKind::InteriorSplit,
        )
        .unwrap();
        let right = CrackComponent::new(
            vec![[0.5, 0.5], [0.65, 0.5]],
            OriginKind::InteriorSplit,
        )
        .unwrap();
        let crack = CrackSet::new(vec![left, right], 0.04).unwrap();
        let m = build_mesh(
            &unit_domain(),
            &crack,
            MeshParams {
                h: 0.08,
                tip_grading: 4.0,
            },
        )
        .unwrap();
        assert_relative_eq!(total_area(&m), 1.0, epsilon = 1e-10);
        // Both tips shared, everything in between duplicated.
        let chain_len: usize = m.crack_minus_nodes.iter().map(|c| c.len()).sum();
        assert_eq!(m.duplicated.len(), chain_len - 1 - 2);
    }
}
