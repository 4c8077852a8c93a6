//! Admissible crack sets: curvature-bounded simple curves with clearance
//! constraints, Hausdorff distances between them, and constant-curvature
//! tip extensions.
//!
//! A crack set is a union of `M` polyline components, each parametrized from
//! its origin (a boundary anchor or an interior split point) to its tip. The
//! admissibility radius `eta` bounds the curvature by `1/eta`, demands the
//! tangent double-ball property along the curve, and keeps every point grown
//! beyond the initial crack at distance `>= 2*eta` from the boundary and
//! from the other components.

use serde::{Deserialize, Serialize};

use crate::domain::DomainSpec;
use crate::geom::{
    add, cross, dist, normalize, perp_left, point_polyline_distance, point_segment_distance,
    rotate, scale, segment_intersection, sub, Pt,
};
use crate::{Error, Result};

/// Snap tolerance for exact-predicate style geometric tests.
pub const SNAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OriginKind {
    /// The first vertex lies on the boundary of the domain.
    BoundaryAnchored,
    /// The first vertex is an interior split point shared with a sibling
    /// component; the two halves of an interior seed are stored separately.
    InteriorSplit,
}

/// One connected crack arc, stored as a polyline from origin to tip.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ComponentData", into = "ComponentData")]
pub struct CrackComponent {
    vertices: Vec<Pt>,
    /// Cumulative chord length at each vertex; `arc_lengths[0] == 0`.
    arc_lengths: Vec<f64>,
    origin_kind: OriginKind,
    /// Arc length of the initial-crack portion; never modified by growth.
    frozen_prefix_len: f64,
}

#[derive(Serialize, Deserialize)]
struct ComponentData {
    vertices: Vec<Pt>,
    origin_kind: OriginKind,
    frozen_prefix_len: f64,
}

impl TryFrom<ComponentData> for CrackComponent {
    type Error = Error;
    fn try_from(d: ComponentData) -> Result<Self> {
        CrackComponent::with_frozen_len(d.vertices, d.origin_kind, d.frozen_prefix_len)
    }
}

impl From<CrackComponent> for ComponentData {
    fn from(c: CrackComponent) -> Self {
        ComponentData {
            vertices: c.vertices,
            origin_kind: c.origin_kind,
            frozen_prefix_len: c.frozen_prefix_len,
        }
    }
}

impl CrackComponent {
    /// A component that is entirely initial crack (frozen up to its tip).
    pub fn new(vertices: Vec<Pt>, origin_kind: OriginKind) -> Result<Self> {
        let len = polyline_length(&vertices);
        CrackComponent::with_frozen_len(vertices, origin_kind, len)
    }

    pub fn with_frozen_len(
        vertices: Vec<Pt>,
        origin_kind: OriginKind,
        frozen_prefix_len: f64,
    ) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::DegenerateGeometry(
                "a crack component needs at least two vertices".into(),
            ));
        }
        let mut arc_lengths = Vec::with_capacity(vertices.len());
        arc_lengths.push(0.0);
        for w in vertices.windows(2) {
            let d = dist(w[0], w[1]);
            if d <= SNAP {
                return Err(Error::DegenerateGeometry(format!(
                    "zero-length segment at ({:.6}, {:.6})",
                    w[0][0], w[0][1]
                )));
            }
            arc_lengths.push(arc_lengths.last().unwrap() + d);
        }
        let total = *arc_lengths.last().unwrap();
        if !(0.0..=total + SNAP).contains(&frozen_prefix_len) {
            return Err(Error::DegenerateGeometry(format!(
                "frozen prefix length {frozen_prefix_len} outside [0, {total}]"
            )));
        }
        Ok(CrackComponent {
            vertices,
            arc_lengths,
            origin_kind,
            frozen_prefix_len: frozen_prefix_len.min(total),
        })
    }

    pub fn vertices(&self) -> &[Pt] {
        &self.vertices
    }

    pub fn arc_lengths(&self) -> &[f64] {
        &self.arc_lengths
    }

    pub fn origin_kind(&self) -> OriginKind {
        self.origin_kind
    }

    pub fn frozen_prefix_len(&self) -> f64 {
        self.frozen_prefix_len
    }

    /// Total chord length `l^m`.
    pub fn length(&self) -> f64 {
        *self.arc_lengths.last().unwrap()
    }

    pub fn tip(&self) -> Pt {
        *self.vertices.last().unwrap()
    }

    /// Unit direction of the last segment.
    pub fn tip_tangent(&self) -> Pt {
        let n = self.vertices.len();
        normalize(sub(self.vertices[n - 1], self.vertices[n - 2]))
    }

    /// Point at arc length `s` (clamped to `[0, length]`).
    pub fn point_at(&self, s: f64) -> Pt {
        let s = s.clamp(0.0, self.length());
        let i = match self
            .arc_lengths
            .binary_search_by(|a| a.partial_cmp(&s).unwrap())
        {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        if i + 1 >= self.vertices.len() {
            return self.tip();
        }
        let seg = sub(self.vertices[i + 1], self.vertices[i]);
        let t = (s - self.arc_lengths[i]) / (self.arc_lengths[i + 1] - self.arc_lengths[i]);
        add(self.vertices[i], scale(seg, t))
    }

    /// The prefix of the component up to arc length `s`. Used to reconstruct
    /// intermediate states along a propagation transition.
    pub fn truncate_at(&self, s: f64) -> Result<CrackComponent> {
        let s = s.clamp(0.0, self.length());
        let mut verts: Vec<Pt> = Vec::new();
        for (i, &a) in self.arc_lengths.iter().enumerate() {
            if a < s - SNAP {
                verts.push(self.vertices[i]);
            } else {
                break;
            }
        }
        verts.push(self.point_at(s));
        CrackComponent::with_frozen_len(verts, self.origin_kind, self.frozen_prefix_len.min(s))
    }

    /// Arc-length positions sampled at spacing `<= step`, always including
    /// every vertex. Returns `(arc_position, point)` pairs.
    pub fn sample(&self, step: f64) -> Vec<(f64, Pt)> {
        let mut out = Vec::new();
        for i in 0..self.vertices.len() - 1 {
            let a = self.arc_lengths[i];
            let b = self.arc_lengths[i + 1];
            let n = ((b - a) / step).ceil().max(1.0) as usize;
            for j in 0..n {
                let s = a + (b - a) * j as f64 / n as f64;
                out.push((s, self.point_at(s)));
            }
        }
        out.push((self.length(), self.tip()));
        out
    }

    /// Unit tangent at arc length `s`; at interior vertices the two segment
    /// directions are averaged.
    fn tangent_at(&self, s: f64) -> Pt {
        let n = self.vertices.len();
        for i in 1..n - 1 {
            if (s - self.arc_lengths[i]).abs() <= SNAP {
                let d0 = normalize(sub(self.vertices[i], self.vertices[i - 1]));
                let d1 = normalize(sub(self.vertices[i + 1], self.vertices[i]));
                return normalize(add(d0, d1));
            }
        }
        let i = match self
            .arc_lengths
            .binary_search_by(|a| a.partial_cmp(&s).unwrap())
        {
            Ok(i) => i.min(n - 2),
            Err(i) => (i - 1).min(n - 2),
        };
        normalize(sub(self.vertices[i + 1], self.vertices[i]))
    }

    fn segments(&self) -> impl Iterator<Item = (Pt, Pt)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }
}

fn polyline_length(vertices: &[Pt]) -> f64 {
    vertices.windows(2).map(|w| dist(w[0], w[1])).sum()
}

/// A union of `M` crack components with a common admissibility radius.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrackSet {
    pub components: Vec<CrackComponent>,
    pub eta: f64,
}

impl CrackSet {
    pub fn new(components: Vec<CrackComponent>, eta: f64) -> Result<Self> {
        if eta <= 0.0 {
            return Err(Error::DegenerateGeometry("eta must be positive".into()));
        }
        Ok(CrackSet { components, eta })
    }

    /// Number of crack tips `M`.
    pub fn num_tips(&self) -> usize {
        self.components.len()
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.length()).collect()
    }

    pub fn total_length(&self) -> f64 {
        self.components.iter().map(|c| c.length()).sum()
    }

    pub fn component(&self, m: usize) -> Result<&CrackComponent> {
        self.components.get(m).ok_or(Error::UnknownTip(m))
    }

    /// Tip point and unit tangent (direction of growth) for component `m`.
    pub fn tip_and_tangent(&self, m: usize) -> Result<(Pt, Pt)> {
        let c = self.component(m)?;
        Ok((c.tip(), c.tip_tangent()))
    }

    /// Minimum distance from `p` to the components except `skip`.
    pub fn distance_to_other_components(&self, p: Pt, skip: usize) -> f64 {
        self.components
            .iter()
            .enumerate()
            .filter(|(l, _)| *l != skip)
            .map(|(_, c)| point_polyline_distance(p, c.vertices()))
            .fold(f64::INFINITY, f64::min)
    }

    /// Replace component `m`; the replacement must extend the original.
    pub fn with_component(&self, m: usize, component: CrackComponent) -> Result<CrackSet> {
        let mut components = self.components.clone();
        *components.get_mut(m).ok_or(Error::UnknownTip(m))? = component;
        CrackSet::new(components, self.eta)
    }

    /// Prefix inclusion test: every component of `self` is a prefix of the
    /// corresponding component of `other` (vertex-exact on shared vertices).
    pub fn is_prefix_of(&self, other: &CrackSet) -> bool {
        if self.components.len() != other.components.len() {
            return false;
        }
        self.components.iter().zip(&other.components).all(|(a, b)| {
            a.vertices.len() <= b.vertices.len()
                && a.vertices[..a.vertices.len() - 1]
                    .iter()
                    .zip(&b.vertices)
                    .all(|(p, q)| dist(*p, *q) <= SNAP)
                && point_polyline_distance(a.tip(), b.vertices()) <= 1e-9
        })
    }
}

// ---------------------------------------------------------------------------
// Admissibility
// ---------------------------------------------------------------------------

/// Status of one admissibility constraint, labelled (a)-(f) as in the class
/// definition, plus a structural sanity entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintStatus {
    pub name: String,
    pub pass: bool,
    pub detail: String,
    /// Location of the first violation, when one exists.
    pub location: Option<Pt>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub pass: bool,
    pub constraints: Vec<ConstraintStatus>,
}

impl AdmissibilityReport {
    pub fn first_violation(&self) -> Option<&ConstraintStatus> {
        self.constraints.iter().find(|c| !c.pass)
    }
}

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
    location: Option<Pt>,
}

impl Check {
    fn ok(name: &'static str) -> Check {
        Check {
            name,
            pass: true,
            detail: String::new(),
            location: None,
        }
    }
    fn fail(name: &'static str, detail: String, location: Option<Pt>) -> Check {
        Check {
            name,
            pass: false,
            detail,
            location,
        }
    }
}

/// Check the admissibility constraints of a crack set in a domain.
///
/// Curvature and clearance tests are evaluated on samplings of spacing
/// `<= eta/10`; they are conservative at that resolution. A degenerate
/// representation (zero-length segment, empty set) is an error, not a
/// failed report.
pub fn check_admissible(crack: &CrackSet, domain: &DomainSpec) -> Result<AdmissibilityReport> {
    if crack.components.is_empty() {
        return Err(Error::DegenerateGeometry(
            "crack set has no components".into(),
        ));
    }
    if !domain.polygon().is_simple_ccw() {
        return Err(Error::DegenerateGeometry("domain polygon not simple".into()));
    }
    for c in &crack.components {
        // Re-validate structure so sets built from raw parts are caught.
        CrackComponent::with_frozen_len(
            c.vertices.clone(),
            c.origin_kind,
            c.frozen_prefix_len,
        )?;
    }

    let eta = crack.eta;
    let step = eta / 10.0;
    let boundary_snap = 1e-9 * domain.diameter().max(1.0);
    let mut checks: Vec<Check> = Vec::new();

    // Structure: no self-intersections within a component.
    checks.push(check_self_intersections(crack));
    // (a) each component meets the boundary in at most one endpoint.
    checks.push(check_boundary_contact(crack, domain, step, boundary_snap));
    // (b) positive length and connected complement.
    checks.push(check_complement_connected(crack, domain));
    // (c) curvature bound and double-ball property.
    checks.push(check_curvature(crack));
    checks.push(check_double_ball(crack, step));
    // (d)+(e) pairwise intersections confined to frozen prefixes.
    checks.push(check_pairwise_intersections(crack));
    // (f) 2-eta clearance of all grown material.
    checks.push(check_clearance(crack, domain, step));

    let constraints: Vec<ConstraintStatus> = checks
        .into_iter()
        .map(|c| ConstraintStatus {
            name: c.name.to_string(),
            pass: c.pass,
            detail: c.detail,
            location: c.location,
        })
        .collect();
    Ok(AdmissibilityReport {
        pass: constraints.iter().all(|c| c.pass),
        constraints,
    })
}

fn check_self_intersections(crack: &CrackSet) -> Check {
    for (m, c) in crack.components.iter().enumerate() {
        let segs: Vec<(Pt, Pt)> = c.segments().collect();
        for i in 0..segs.len() {
            for j in i + 2..segs.len() {
                if let Some(p) =
                    segment_intersection(segs[i].0, segs[i].1, segs[j].0, segs[j].1, SNAP)
                {
                    return Check::fail(
                        "structure:simple",
                        format!("component {m} self-intersects"),
                        Some(p),
                    );
                }
            }
        }
    }
    Check::ok("structure:simple")
}

fn check_boundary_contact(
    crack: &CrackSet,
    domain: &DomainSpec,
    step: f64,
    snap: f64,
) -> Check {
    for (m, c) in crack.components.iter().enumerate() {
        let anchored = c.origin_kind == OriginKind::BoundaryAnchored;
        if anchored && domain.distance_to_boundary(c.vertices[0]) > snap {
            return Check::fail(
                "a:boundary-contact",
                format!("component {m} is boundary-anchored but its origin is interior"),
                Some(c.vertices[0]),
            );
        }
        for (s, p) in c.sample(step) {
            if anchored && s <= snap {
                continue;
            }
            if domain.distance_to_boundary(p) <= snap || !domain.contains(p) {
                return Check::fail(
                    "a:boundary-contact",
                    format!("component {m} touches the boundary away from its anchor"),
                    Some(p),
                );
            }
        }
    }
    Check::ok("a:boundary-contact")
}

/// Flood fill on a coarse cell grid: cells crossed by the crack are blocked,
/// the rest must stay connected inside the polygon.
fn check_complement_connected(crack: &CrackSet, domain: &DomainSpec) -> Check {
    if crack.total_length() <= SNAP {
        return Check::fail(
            "b:positive-length",
            "crack set has zero length".into(),
            None,
        );
    }
    let (lo, hi) = domain.polygon().bbox();
    let cell = (crack.eta / 2.0).min(domain.diameter() / 64.0);
    let nx = (((hi[0] - lo[0]) / cell).ceil() as usize).max(4);
    let ny = (((hi[1] - lo[1]) / cell).ceil() as usize).max(4);
    let cx = (hi[0] - lo[0]) / nx as f64;
    let cy = (hi[1] - lo[1]) / ny as f64;
    let idx = |i: usize, j: usize| j * nx + i;
    // 0 = outside/blocked, 1 = open, 2 = visited
    let mut cells = vec![0u8; nx * ny];
    let half_diag = 0.5 * cx.hypot(cy);
    for j in 0..ny {
        for i in 0..nx {
            let center = [lo[0] + (i as f64 + 0.5) * cx, lo[1] + (j as f64 + 0.5) * cy];
            if !domain.contains(center) || domain.distance_to_boundary(center) < half_diag {
                continue;
            }
            let near_crack = crack
                .components
                .iter()
                .any(|c| point_polyline_distance(center, c.vertices()) < half_diag);
            if !near_crack {
                cells[idx(i, j)] = 1;
            }
        }
    }
    let Some(start) = cells.iter().position(|&c| c == 1) else {
        return Check::ok("b:connected-complement"); // nothing resolvable at this scale
    };
    let mut stack = vec![start];
    cells[start] = 2;
    while let Some(k) = stack.pop() {
        let (i, j) = (k % nx, k / nx);
        let push = |i2: usize, j2: usize, cells: &mut Vec<u8>, stack: &mut Vec<usize>| {
            let k2 = idx(i2, j2);
            if cells[k2] == 1 {
                cells[k2] = 2;
                stack.push(k2);
            }
        };
        if i > 0 {
            push(i - 1, j, &mut cells, &mut stack);
        }
        if i + 1 < nx {
            push(i + 1, j, &mut cells, &mut stack);
        }
        if j > 0 {
            push(i, j - 1, &mut cells, &mut stack);
        }
        if j + 1 < ny {
            push(i, j + 1, &mut cells, &mut stack);
        }
    }
    if let Some(k) = cells.iter().position(|&c| c == 1) {
        let (i, j) = (k % nx, k / nx);
        let p = [lo[0] + (i as f64 + 0.5) * cx, lo[1] + (j as f64 + 0.5) * cy];
        return Check::fail(
            "b:connected-complement",
            "the crack disconnects the domain at the sampling resolution".into(),
            Some(p),
        );
    }
    Check::ok("b:connected-complement")
}

fn check_curvature(crack: &CrackSet) -> Check {
    // Inscribed polygons of maximal-curvature arcs slightly exceed 1/eta in
    // the discrete estimate; allow 5 percent.
    let bound = 1.05 / crack.eta;
    for (m, c) in crack.components.iter().enumerate() {
        let v = c.vertices();
        for i in 1..v.len() - 1 {
            let d0 = sub(v[i], v[i - 1]);
            let d1 = sub(v[i + 1], v[i]);
            let turn = cross(d0, d1).atan2(crate::geom::dot(d0, d1)).abs();
            let mean = 0.5 * (dist(v[i], v[i - 1]) + dist(v[i + 1], v[i]));
            if turn / mean > bound {
                return Check::fail(
                    "c:curvature",
                    format!(
                        "component {m}: discrete curvature {:.3} exceeds 1/eta = {:.3}",
                        turn / mean,
                        1.0 / crack.eta
                    ),
                    Some(v[i]),
                );
            }
        }
    }
    Check::ok("c:curvature")
}

fn check_double_ball(crack: &CrackSet, step: f64) -> Check {
    let eta = crack.eta;
    // Chord sagitta of the sampling eats into the tangent-ball distance.
    let tol = step * step / (4.0 * eta) + 1e-9 * eta;
    for (m, c) in crack.components.iter().enumerate() {
        for (s, p) in c.sample(step) {
            let n = perp_left(c.tangent_at(s));
            for center in [add(p, scale(n, eta)), add(p, scale(n, -eta))] {
                let d = crack
                    .components
                    .iter()
                    .map(|cc| point_polyline_distance(center, cc.vertices()))
                    .fold(f64::INFINITY, f64::min);
                if d < eta - tol {
                    return Check::fail(
                        "c:double-ball",
                        format!(
                            "component {m}: tangent ball at arc {s:.4} penetrated by {:.2e}",
                            eta - d
                        ),
                        Some(p),
                    );
                }
            }
        }
    }
    Check::ok("c:double-ball")
}

fn check_pairwise_intersections(crack: &CrackSet) -> Check {
    let n = crack.components.len();
    for a in 0..n {
        for b in a + 1..n {
            let ca = &crack.components[a];
            let cb = &crack.components[b];
            let mut points: Vec<Pt> = Vec::new();
            for (p0, p1) in ca.segments() {
                for (q0, q1) in cb.segments() {
                    if let Some(p) = segment_intersection(p0, p1, q0, q1, SNAP) {
                        if !points.iter().any(|q| dist(*q, p) <= 1e-9) {
                            points.push(p);
                        }
                    }
                }
            }
            if points.len() > 1 {
                return Check::fail(
                    "d:pairwise-intersection",
                    format!(
                        "components {a} and {b} intersect in {} points",
                        points.len()
                    ),
                    Some(points[1]),
                );
            }
            if let Some(p) = points.first() {
                for (comp, label) in [(ca, a), (cb, b)] {
                    let s = arc_position(comp, *p);
                    if s > comp.frozen_prefix_len + 1e-9 {
                        return Check::fail(
                            "d:pairwise-intersection",
                            format!(
                                "components {a} and {b} intersect outside the frozen prefix of {label}"
                            ),
                            Some(*p),
                        );
                    }
                }
            }
        }
    }
    Check::ok("d:pairwise-intersection")
}

/// Arc-length position of the projection of `p` onto the component.
fn arc_position(c: &CrackComponent, p: Pt) -> f64 {
    let mut best = (f64::INFINITY, 0.0);
    for (i, w) in c.vertices().windows(2).enumerate() {
        let d = point_segment_distance(p, w[0], w[1]);
        if d < best.0 {
            let seg = sub(w[1], w[0]);
            let t = (crate::geom::dot(sub(p, w[0]), seg) / crate::geom::dot(seg, seg))
                .clamp(0.0, 1.0);
            best = (d, c.arc_lengths()[i] + t * dist(w[0], w[1]));
        }
    }
    best.1
}

fn check_clearance(crack: &CrackSet, domain: &DomainSpec, step: f64) -> Check {
    let clearance = 2.0 * crack.eta;
    for (m, c) in crack.components.iter().enumerate() {
        for (s, p) in c.sample(step) {
            if s <= c.frozen_prefix_len + SNAP {
                continue;
            }
            let db = domain.distance_to_boundary(p);
            if db < clearance {
                return Check::fail(
                    "f:clearance",
                    format!(
                        "component {m}: grown point at arc {s:.4} is {db:.4} from the boundary (< {clearance:.4})"
                    ),
                    Some(p),
                );
            }
            let dc = crack.distance_to_other_components(p, m);
            if dc < clearance {
                return Check::fail(
                    "f:clearance",
                    format!(
                        "component {m}: grown point at arc {s:.4} is {dc:.4} from another component (< {clearance:.4})"
                    ),
                    Some(p),
                );
            }
        }
    }
    Check::ok("f:clearance")
}

// ---------------------------------------------------------------------------
// Hausdorff distance
// ---------------------------------------------------------------------------

/// Densified samples of a polyline at spacing `<= tol`, vertices included.
fn densify(poly: &[Pt], tol: f64) -> Vec<Pt> {
    if poly.len() < 2 {
        return poly.to_vec();
    }
    let mut out = Vec::new();
    for w in poly.windows(2) {
        let d = dist(w[0], w[1]);
        let n = (d / tol).ceil().max(1.0) as usize;
        for j in 0..n {
            let t = j as f64 / n as f64;
            out.push(add(w[0], scale(sub(w[1], w[0]), t)));
        }
    }
    out.push(*poly.last().unwrap());
    out
}

fn directed_hausdorff(from: &[Vec<Pt>], to: &[Vec<Pt>], tol: f64) -> f64 {
    let mut sup = 0.0f64;
    for poly in from {
        for p in densify(poly, tol) {
            let d = to
                .iter()
                .map(|q| point_polyline_distance(p, q))
                .fold(f64::INFINITY, f64::min);
            sup = sup.max(d);
        }
    }
    sup
}

/// Hausdorff distance between two unions of polylines.
///
/// Samples at spacing `<= densify_tol` are measured against exact segment
/// distances, so the result is exact for the densified samplings. When one
/// set is empty the convention `d_H = diam_omega` applies; two empty sets
/// have distance zero.
pub fn hausdorff_distance(
    a: &[Vec<Pt>],
    b: &[Vec<Pt>],
    densify_tol: f64,
    diam_omega: f64,
) -> f64 {
    let a_empty = a.iter().all(|p| p.is_empty());
    let b_empty = b.iter().all(|p| p.is_empty());
    match (a_empty, b_empty) {
        (true, true) => 0.0,
        (true, false) | (false, true) => diam_omega,
        (false, false) => {
            if a == b {
                return 0.0; // identical representations: exactly zero
            }
            directed_hausdorff(a, b, densify_tol).max(directed_hausdorff(b, a, densify_tol))
        }
    }
}

/// Hausdorff distance between two crack sets.
pub fn crack_hausdorff(a: &CrackSet, b: &CrackSet, densify_tol: f64, diam_omega: f64) -> f64 {
    let pa: Vec<Vec<Pt>> = a.components.iter().map(|c| c.vertices().to_vec()).collect();
    let pb: Vec<Vec<Pt>> = b.components.iter().map(|c| c.vertices().to_vec()).collect();
    hausdorff_distance(&pa, &pb, densify_tol, diam_omega)
}

// ---------------------------------------------------------------------------
// Extensions
// ---------------------------------------------------------------------------

/// A tangent-continuous constant-curvature extension of one component.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtensionCandidate {
    pub component_index: usize,
    /// Actual polyline length increase (chord sum of the sampled arc).
    pub delta_length: f64,
    pub signed_curvature: f64,
    pub resulting_component: CrackComponent,
}

/// Append `p` to a polyline, merging the last vertex when it is exactly
/// collinear and interior (so straight growth never accumulates vertices;
/// the resulting point set is unchanged).
pub fn append_merged(verts: &mut Vec<Pt>, p: Pt) {
    if verts.len() >= 2 {
        let n = verts.len();
        let d0 = sub(verts[n - 1], verts[n - 2]);
        let d1 = sub(p, verts[n - 1]);
        if cross(d0, d1).abs() <= 1e-14 * (crate::geom::norm(d0) * crate::geom::norm(d1)).max(1e-300)
            && crate::geom::dot(d0, d1) > 0.0
        {
            verts.pop();
        }
    }
    verts.push(p);
}

/// Sample an arc of signed curvature `c` starting at `tip` with direction
/// `tangent`, of arc length `delta`. Returns the appended points.
fn arc_points(tip: Pt, tangent: Pt, c: f64, delta: f64, eta: f64) -> Vec<Pt> {
    if c.abs() < 1e-14 {
        return vec![add(tip, scale(tangent, delta))];
    }
    let n = ((delta / (eta / 10.0)).ceil() as usize).clamp(2, 64);
    let center = add(tip, scale(perp_left(tangent), 1.0 / c));
    let arm = sub(tip, center);
    (1..=n)
        .map(|j| {
            let phi = c * delta * j as f64 / n as f64;
            add(center, rotate(arm, phi))
        })
        .collect()
}

/// Closed-form tip tangent after extending with curvature `c` over arc
/// length `delta`: the smooth tangent rotates by `c * delta`.
pub fn arc_tangent_after(tangent: Pt, c: f64, delta: f64) -> Pt {
    rotate(tangent, c * delta)
}

/// Build admissible constant-curvature extensions at tip `m`.
///
/// Every combination of `lengths x curvatures` is generated; combinations
/// whose extended crack set fails the admissibility check are filtered out.
/// A zero length yields the unchanged crack and is always admissible (the
/// null extension). Curvatures must satisfy `|c| <= 1/eta`.
pub fn generate_extensions(
    crack: &CrackSet,
    m: usize,
    lengths: &[f64],
    curvatures: &[f64],
    domain: &DomainSpec,
) -> Result<Vec<ExtensionCandidate>> {
    let base = crack.component(m)?.clone();
    let (tip, tangent) = crack.tip_and_tangent(m)?;
    let mut out = Vec::new();
    let mut saw_zero = false;
    for &delta in lengths {
        if delta < 0.0 {
            return Err(Error::DegenerateGeometry(format!(
                "extension length {delta} is negative"
            )));
        }
        if delta <= SNAP {
            if !saw_zero {
                saw_zero = true;
                out.push(ExtensionCandidate {
                    component_index: m,
                    delta_length: 0.0,
                    signed_curvature: 0.0,
                    resulting_component: base.clone(),
                });
            }
            continue;
        }
        for &c in curvatures {
            if c.abs() > 1.0 / crack.eta + SNAP {
                return Err(Error::DegenerateGeometry(format!(
                    "curvature {c} exceeds the admissible bound 1/eta"
                )));
            }
            let mut verts = base.vertices().to_vec();
            let added = arc_points(tip, tangent, c, delta, crack.eta);
            let old_len = base.length();
            for p in added {
                append_merged(&mut verts, p);
            }
            let Ok(comp) =
                CrackComponent::with_frozen_len(verts, base.origin_kind(), base.frozen_prefix_len())
            else {
                continue;
            };
            let delta_actual = comp.length() - old_len;
            let extended = crack.with_component(m, comp.clone())?;
            match check_admissible(&extended, domain) {
                Ok(report) if report.pass => out.push(ExtensionCandidate {
                    component_index: m,
                    delta_length: delta_actual,
                    signed_curvature: c,
                    resulting_component: comp,
                }),
                _ => {}
            }
        }
    }
    if !saw_zero {
        out.insert(
            0,
            ExtensionCandidate {
                component_index: m,
                delta_length: 0.0,
                signed_curvature: 0.0,
                resulting_component: base,
            },
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_domain() -> DomainSpec {
        DomainSpec::unit_square(vec![], vec![])
    }

    fn straight_seed(len: f64, eta: f64) -> CrackSet {
        let comp = CrackComponent::new(
            vec![[0.0, 0.5], [len, 0.5]],
            OriginKind::BoundaryAnchored,
        )
        .unwrap();
        CrackSet::new(vec![comp], eta).unwrap()
    }

    #[test]
    fn straight_segment_is_admissible() {
        let crack = straight_seed(0.4, 0.05);
        let report = check_admissible(&crack, &unit_domain()).unwrap();
        assert!(report.pass, "{:?}", report.first_violation());
    }

    #[test]
    fn close_parallel_growth_fails_clearance() {
        let eta = 0.05;
        let c0 = CrackComponent::new(
            vec![[0.0, 0.5], [0.4, 0.5]],
            OriginKind::BoundaryAnchored,
        )
        .unwrap();
        // Second component grown beyond its frozen prefix, parallel at 0.05 < 2*eta.
        let c1 = CrackComponent::with_frozen_len(
            vec![[0.0, 0.55], [0.2, 0.55], [0.4, 0.55]],
            OriginKind::BoundaryAnchored,
            0.2,
        )
        .unwrap();
        let crack = CrackSet::new(vec![c0, c1], eta).unwrap();
        let report = check_admissible(&crack, &unit_domain()).unwrap();
        assert!(!report.pass);
        let clearance = report
            .constraints
            .iter()
            .find(|c| c.name == "f:clearance")
            .unwrap();
        assert!(!clearance.pass);
    }

    #[test]
    fn kink_fails_curvature_and_double_ball() {
        // One turning angle with discrete curvature 3/eta. The tangent-ball
        // construction at the kink vertex is the oracle: the ball center sits
        // at distance eta*cos(theta/2) < eta from the adjacent segments.
        let eta = 0.05f64;
        let seg = eta / 5.0;
        let theta = 3.0 / eta * seg; // 0.6 rad
        let p0 = [0.4, 0.5];
        let p1 = [0.4 + seg, 0.5];
        let dir = [theta.cos(), theta.sin()];
        let p2 = add(p1, scale(dir, seg));
        let comp = CrackComponent::new(
            vec![[0.0, 0.5], p0, p1, p2],
            OriginKind::BoundaryAnchored,
        )
        .unwrap();
        let crack = CrackSet::new(vec![comp], eta).unwrap();
        let report = check_admissible(&crack, &unit_domain()).unwrap();
        assert!(!report.pass);
        let v = report.first_violation().unwrap();
        assert!(
            v.name == "c:curvature" || v.name == "c:double-ball",
            "unexpected violation {}",
            v.name
        );
        // Oracle: exact tangent-ball penetration at the kink.
        let penetration = eta * (1.0 - (theta / 2.0).cos());
        assert!(penetration > 1e-4);
    }

    #[test]
    fn degenerate_segment_is_error_not_failure() {
        let e = CrackComponent::new(
            vec![[0.0, 0.5], [0.2, 0.5], [0.2, 0.5], [0.4, 0.5]],
            OriginKind::BoundaryAnchored,
        );
        assert!(matches!(e, Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn hausdorff_identity_translate_empty() {
        let seg = vec![vec![[0.0, 0.0], [1.0, 0.0]]];
        let shifted = vec![vec![[0.0, 0.3], [1.0, 0.3]]];
        let diam = 2.0f64.sqrt();
        assert_eq!(hausdorff_distance(&seg, &seg, 1e-3, diam), 0.0);
        assert_relative_eq!(
            hausdorff_distance(&seg, &shifted, 1e-3, diam),
            0.3,
            epsilon = 1e-12
        );
        let empty: Vec<Vec<Pt>> = vec![];
        assert_relative_eq!(hausdorff_distance(&seg, &empty, 1e-3, diam), diam);
        assert_eq!(hausdorff_distance(&empty, &empty, 1e-3, diam), 0.0);
    }

    #[test]
    fn hausdorff_is_symmetric() {
        let a = vec![vec![[0.1, 0.2], [0.5, 0.7], [0.9, 0.3]]];
        let b = vec![vec![[0.0, 0.0], [1.0, 1.0]]];
        let d1 = hausdorff_distance(&a, &b, 1e-3, 2.0);
        let d2 = hausdorff_distance(&b, &a, 1e-3, 2.0);
        assert_eq!(d1, d2);
    }

    #[test]
    fn zero_extension_always_returned() {
        let crack = straight_seed(0.4, 0.05);
        let cands =
            generate_extensions(&crack, 0, &[0.0, 0.1], &[0.0], &unit_domain()).unwrap();
        assert!(cands.iter().any(|c| c.delta_length == 0.0));
        let grown = cands.iter().find(|c| c.delta_length > 0.0).unwrap();
        assert_relative_eq!(grown.delta_length, 0.1, epsilon = 1e-12);
        let (tip, tan) = (
            grown.resulting_component.tip(),
            grown.resulting_component.tip_tangent(),
        );
        assert_relative_eq!(tip[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(tan[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn extension_toward_boundary_filtered() {
        // Tip at distance 2*eta + 0.01 from the right boundary; a straight
        // extension of 0.05 toward it must be filtered by clearance (f).
        let eta = 0.05;
        let tip_x = 1.0 - (2.0 * eta + 0.01);
        let crack = straight_seed(tip_x, eta);
        let cands =
            generate_extensions(&crack, 0, &[0.05], &[0.0], &unit_domain()).unwrap();
        assert!(cands.iter().all(|c| c.delta_length == 0.0));
        // Point-to-polygon oracle along the candidate arc: the endpoint
        // violates the clearance by construction.
        let end = [tip_x + 0.05, 0.5];
        assert!(unit_domain().distance_to_boundary(end) < 2.0 * eta);
    }

    #[test]
    fn arc_extension_tangent_matches_closed_form() {
        let eta = 0.05;
        let crack = straight_seed(0.3, eta);
        let c = 0.5 / eta;
        let delta = 0.04;
        let cands = generate_extensions(&crack, 0, &[delta], &[c], &unit_domain()).unwrap();
        let grown = cands.iter().find(|x| x.delta_length > 0.0).unwrap();
        // The polyline is the inscribed polygon of the arc: its last-chord
        // direction equals the smooth tangent at the end rotated back by
        // half the last sub-arc's turning.
        let n = ((delta / (eta / 10.0)).ceil() as usize).clamp(2, 64);
        let expect = rotate(
            arc_tangent_after([1.0, 0.0], c, delta),
            -0.5 * c * delta / n as f64,
        );
        let tan = grown.resulting_component.tip_tangent();
        assert_relative_eq!(tan[0], expect[0], epsilon = 1e-12);
        assert_relative_eq!(tan[1], expect[1], epsilon = 1e-12);
        // And the coarse closed-form check: rotation approximately c*delta.
        let smooth = arc_tangent_after([1.0, 0.0], c, delta);
        assert!(crate::geom::dot(tan, smooth) > (0.5f64 * c * delta / n as f64).cos() - 1e-9);
    }

    #[test]
    fn tip_and_tangent_on_circle_arc() {
        // Quarter circle of radius eta traversed from (0,0) heading +x.
        let eta = 0.2;
        let n = 64;
        let center = [0.0, eta];
        let mut verts = Vec::new();
        for j in 0..=n {
            let phi = std::f64::consts::FRAC_PI_2 * j as f64 / n as f64;
            verts.push(add(center, rotate([0.0, -eta], phi)));
        }
        let comp = CrackComponent::new(verts, OriginKind::BoundaryAnchored).unwrap();
        let crack = CrackSet::new(vec![comp], eta).unwrap();
        let (_, tan) = crack.tip_and_tangent(0).unwrap();
        // Tangent rotated by pi/2 (up to the inscribed-chord half-angle).
        let half = std::f64::consts::FRAC_PI_2 / n as f64 / 2.0;
        let expect = rotate([0.0, 1.0], -half);
        assert_relative_eq!(tan[0], expect[0], epsilon = 1e-12);
        assert_relative_eq!(tan[1], expect[1], epsilon = 1e-12);
    }

    #[test]
    fn truncate_preserves_prefix() {
        let crack = straight_seed(0.4, 0.05);
        let t = crack.components[0].truncate_at(0.25).unwrap();
        assert_relative_eq!(t.length(), 0.25, epsilon = 1e-12);
        assert_relative_eq!(t.tip()[0], 0.25, epsilon = 1e-12);
        let shorter = CrackSet::new(vec![t], 0.05).unwrap();
        assert!(shorter.is_prefix_of(&crack));
    }
}
