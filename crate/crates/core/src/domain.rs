//! The reference configuration: a polygonal body with a partitioned boundary.

use serde::{Deserialize, Serialize};

use crate::geom::{dist, Polygon, Pt};
use crate::{Error, Result};

/// Which load applies on a boundary edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Dirichlet,
    Traction,
    Free,
}

/// A simple polygon with a boundary partition into Dirichlet, traction and
/// free parts, each a union of whole polygon edges.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "DomainSpecData", into = "DomainSpecData")]
pub struct DomainSpec {
    polygon: Polygon,
    dirichlet_edges: Vec<usize>,
    traction_edges: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct DomainSpecData {
    polygon: Vec<Pt>,
    dirichlet_edges: Vec<usize>,
    #[serde(default)]
    traction_edges: Vec<usize>,
}

impl TryFrom<DomainSpecData> for DomainSpec {
    type Error = Error;
    fn try_from(d: DomainSpecData) -> Result<Self> {
        DomainSpec::new(d.polygon, d.dirichlet_edges, d.traction_edges)
    }
}

impl From<DomainSpec> for DomainSpecData {
    fn from(d: DomainSpec) -> Self {
        DomainSpecData {
            polygon: d.polygon.vertices,
            dirichlet_edges: d.dirichlet_edges,
            traction_edges: d.traction_edges,
        }
    }
}

impl DomainSpec {
    pub fn new(
        vertices: Vec<Pt>,
        mut dirichlet_edges: Vec<usize>,
        mut traction_edges: Vec<usize>,
    ) -> Result<Self> {
        let polygon = Polygon::new(vertices);
        if !polygon.is_simple_ccw() {
            return Err(Error::DegenerateGeometry(
                "domain polygon must be simple with counterclockwise orientation".into(),
            ));
        }
        let n = polygon.num_edges();
        dirichlet_edges.sort_unstable();
        dirichlet_edges.dedup();
        traction_edges.sort_unstable();
        traction_edges.dedup();
        let mut problems = Vec::new();
        for &e in dirichlet_edges.iter().chain(&traction_edges) {
            if e >= n {
                problems.push(format!("boundary edge index {e} out of range (< {n})"));
            }
        }
        // The traction part must stay away from the closure of the Dirichlet
        // part: at edge granularity, a traction edge may not coincide with or
        // touch a Dirichlet edge.
        for &t in &traction_edges {
            for &d in &dirichlet_edges {
                if t == d {
                    problems.push(format!("edge {t} is both Dirichlet and traction"));
                } else if (t + 1) % n == d || (d + 1) % n == t {
                    problems.push(format!(
                        "traction edge {t} touches the closure of Dirichlet edge {d}"
                    ));
                }
            }
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems));
        }
        Ok(DomainSpec {
            polygon,
            dirichlet_edges,
            traction_edges,
        })
    }

    pub fn unit_square(dirichlet_edges: Vec<usize>, traction_edges: Vec<usize>) -> Self {
        DomainSpec::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            dirichlet_edges,
            traction_edges,
        )
        .expect("unit square is valid")
    }

    pub fn polygon(&self) -> &Polygon {
        &self.polygon
    }

    pub fn edge_kind(&self, edge: usize) -> BoundaryKind {
        if self.dirichlet_edges.contains(&edge) {
            BoundaryKind::Dirichlet
        } else if self.traction_edges.contains(&edge) {
            BoundaryKind::Traction
        } else {
            BoundaryKind::Free
        }
    }

    pub fn has_dirichlet(&self) -> bool {
        !self.dirichlet_edges.is_empty()
    }

    pub fn diameter(&self) -> f64 {
        self.polygon.diameter()
    }

    pub fn contains(&self, p: Pt) -> bool {
        self.polygon.contains(p)
    }

    pub fn distance_to_boundary(&self, p: Pt) -> f64 {
        self.polygon.distance_to_boundary(p)
    }

    /// Distance from `p` to the nearest polygon vertex. Crack vertices may
    /// not coincide with polygon corners, see [`crate::mesh`].
    pub fn distance_to_corners(&self, p: Pt) -> f64 {
        self.polygon
            .vertices
            .iter()
            .map(|v| dist(*v, p))
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_adjacent_traction_and_dirichlet() {
        let r = DomainSpec::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![0],
            vec![1],
        );
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn accepts_separated_partition() {
        let d = DomainSpec::unit_square(vec![0], vec![2]);
        assert_eq!(d.edge_kind(0), BoundaryKind::Dirichlet);
        assert_eq!(d.edge_kind(2), BoundaryKind::Traction);
        assert_eq!(d.edge_kind(1), BoundaryKind::Free);
    }
}
