//! Narrow band of Cartesian lattice points around a surface.
//!
//! Lattice nodes sit at integer multiples of `dx` from the origin. The band
//! holds every node within `bandwidth = λ dx` of the surface, found by flood
//! fill from surface samples, followed by a closure pass that adds any node
//! needed by the tri-cubic interpolation stencils of `cp` and `c̄p` or by the
//! Laplacian rows evaluated at those stencil nodes.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::geometry::{reflect, ClosestPoint, Surface, Vec3};

/// Ambient dimension.
pub const DIM: usize = 3;

pub type Node = [i32; 3];

/// Face neighbour offsets of the 7-point Laplacian.
pub const FACE_OFFSETS: [Node; 6] = [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointKind {
    /// `cp(x)` lies in the interior of the surface.
    Interior,
    /// `cp(x)` lies on the boundary curve.
    Exterior,
}

/// Cached geometry of one band point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointInfo {
    pub kind: PointKind,
    pub cp: Vec3,
    pub cpbar: Vec3,
    pub distance: f64,
    pub on_boundary: bool,
    pub param: Option<[f64; 2]>,
}

#[derive(Clone, Debug)]
pub struct BandGrid {
    dx: f64,
    origin: Vec3,
    bandwidth: f64,
    points: Vec<Node>,
    index_of: HashMap<Node, usize>,
}

#[derive(Clone, Debug)]
pub struct Classification {
    points: Vec<PointInfo>,
}

/// `λ = sqrt((d-1)((p+1)/2)² + (q/2 + (p+1)/2)²)` for interpolation degree `p`
/// and Laplacian order `q`.
pub fn bandwidth_factor(interp_degree: usize, stencil_order: usize) -> f64 {
    let half_stencil = (interp_degree as f64 + 1.0) / 2.0;
    let d = DIM as f64;
    ((d - 1.0) * half_stencil * half_stencil + (stencil_order as f64 / 2.0 + half_stencil).powi(2)).sqrt()
}

impl BandGrid {
    /// Tri-cubic band with the 7-point Laplacian.
    pub fn build(surface: &Surface, dx: f64) -> Result<(BandGrid, Classification)> {
        build_band(surface, dx, 3, 2)
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.points
    }

    pub fn node(&self, i: usize) -> Node {
        self.points[i]
    }

    pub fn index(&self, node: &Node) -> Option<usize> {
        self.index_of.get(node).copied()
    }

    pub fn position(&self, i: usize) -> Vec3 {
        node_position(self.origin, self.dx, &self.points[i])
    }

    pub fn positions(&self) -> impl Iterator<Item = Vec3> + '_ {
        (0..self.len()).map(|i| self.position(i))
    }

    /// Lowest corner of the 4×4×4 interpolation block around `y`: the cell
    /// containing `y` is the second one along every axis.
    pub fn stencil_base(&self, y: &Vec3) -> Node {
        stencil_base(self.origin, self.dx, y)
    }
}

impl Classification {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn info(&self, i: usize) -> &PointInfo {
        &self.points[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &PointInfo> {
        self.points.iter()
    }

    pub fn kind(&self, i: usize) -> PointKind {
        self.points[i].kind
    }

    pub fn is_exterior(&self, i: usize) -> bool {
        self.points[i].kind == PointKind::Exterior
    }

    pub fn exterior_count(&self) -> usize {
        self.points.iter().filter(|p| p.kind == PointKind::Exterior).count()
    }

    /// Indicator of the exterior set, one entry per band point.
    pub fn exterior_indicator(&self) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| if p.kind == PointKind::Exterior { 1.0 } else { 0.0 })
            .collect()
    }

    pub fn closest_points(&self) -> Vec<Vec3> {
        self.points.iter().map(|p| p.cp).collect()
    }
}

fn node_position(origin: Vec3, dx: f64, n: &Node) -> Vec3 {
    origin + dx * Vec3::new(n[0] as f64, n[1] as f64, n[2] as f64)
}

fn stencil_base(origin: Vec3, dx: f64, y: &Vec3) -> Node {
    let rel = (y - origin) / dx;
    [
        rel.x.floor() as i32 - 1,
        rel.y.floor() as i32 - 1,
        rel.z.floor() as i32 - 1,
    ]
}

fn nearest_node(origin: Vec3, dx: f64, y: &Vec3) -> Node {
    let rel = (y - origin) / dx;
    [rel.x.round() as i32, rel.y.round() as i32, rel.z.round() as i32]
}

fn add(a: &Node, b: &Node) -> Node {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// Constructs the band and classifies each of its points.
pub fn build_band(
    surface: &Surface,
    dx: f64,
    interp_degree: usize,
    stencil_order: usize,
) -> Result<(BandGrid, Classification)> {
    if !(dx > 0.0 && dx.is_finite()) {
        return Err(Error::InvalidGrid(format!("dx must be positive, got {dx}")));
    }
    if interp_degree != 3 || stencil_order != 2 {
        return Err(Error::InvalidGrid(format!(
            "only tri-cubic interpolation with the second-order Laplacian is supported \
             (got degree {interp_degree}, order {stencil_order})"
        )));
    }
    let origin = Vec3::zeros();
    let bandwidth = bandwidth_factor(interp_degree, stencil_order) * dx;

    let mut cache: HashMap<Node, ClosestPoint> = HashMap::new();
    let query = |n: &Node, cache: &mut HashMap<Node, ClosestPoint>| -> Result<ClosestPoint> {
        if let Some(cp) = cache.get(n) {
            return Ok(*cp);
        }
        let cp = surface.closest_point(&node_position(origin, dx, n))?;
        cache.insert(*n, cp);
        Ok(cp)
    };

    // flood fill across faces from surface samples
    let mut in_band: HashMap<Node, ()> = HashMap::new();
    let mut queue = VecDeque::new();
    for y in surface.seed_points(dx) {
        let n = nearest_node(origin, dx, &y);
        if !in_band.contains_key(&n) && query(&n, &mut cache)?.distance <= bandwidth {
            in_band.insert(n, ());
            queue.push_back(n);
        }
    }
    while let Some(n) = queue.pop_front() {
        for off in &FACE_OFFSETS {
            let m = add(&n, off);
            if in_band.contains_key(&m) {
                continue;
            }
            if query(&m, &mut cache)?.distance <= bandwidth {
                in_band.insert(m, ());
                queue.push_back(m);
            }
        }
    }

    // closure: interpolation blocks of cp and c̄p, plus the face neighbours of every block node
    let mut cpbar: HashMap<Node, Vec3> = HashMap::with_capacity(in_band.len());
    let mut work: Vec<Node> = in_band.keys().copied().collect();
    work.sort_unstable();
    while let Some(n) = work.pop() {
        let cp = query(&n, &mut cache)?;
        let bar = if cp.on_boundary {
            let x = node_position(origin, dx, &n);
            surface.closest_point(&reflect(&x, &cp.point))?.point
        } else {
            cp.point
        };
        cpbar.insert(n, bar);
        let mut targets = vec![cp.point];
        if cp.on_boundary {
            targets.push(bar);
        }
        for y in targets {
            let base = stencil_base(origin, dx, &y);
            for a in 0..4 {
                for b in 0..4 {
                    for c in 0..4 {
                        let node = add(&base, &[a, b, c]);
                        for off in FACE_OFFSETS.iter().chain(std::iter::once(&[0, 0, 0])) {
                            let m = add(&node, off);
                            if !in_band.contains_key(&m) {
                                in_band.insert(m, ());
                                work.push(m);
                            }
                        }
                    }
                }
            }
        }
    }

    let mut points: Vec<Node> = in_band.into_keys().collect();
    points.sort_unstable();
    let index_of = points.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let infos = points
        .iter()
        .map(|n| {
            let cp = cache[n];
            PointInfo {
                kind: if cp.on_boundary { PointKind::Exterior } else { PointKind::Interior },
                cp: cp.point,
                cpbar: cpbar[n],
                distance: cp.distance,
                on_boundary: cp.on_boundary,
                param: cp.param,
            }
        })
        .collect();

    Ok((
        BandGrid {
            dx,
            origin,
            bandwidth,
            points,
            index_of,
        },
        Classification { points: infos },
    ))
}
