//! Axis-aligned bounding-box tree over triangles with closest-point queries.

use crate::asset::Mesh;
use crate::error::{Error, Result};
use crate::geom::Vec3;

const LEAF_SIZE: usize = 4;
/// Distances within this margin count as ties; ties go to the lower face index.
pub const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
struct Aabb {
    lo: Vec3,
    hi: Vec3,
}

impl Aabb {
    fn empty() -> Self {
        Self {
            lo: Vec3::repeat(f64::INFINITY),
            hi: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    fn grow(&mut self, p: &Vec3) {
        self.lo = self.lo.inf(p);
        self.hi = self.hi.sup(p);
    }

    fn contains(&self, o: &Aabb) -> bool {
        (0..3).all(|a| self.lo[a] <= o.lo[a] && self.hi[a] >= o.hi[a])
    }

    fn dist2(&self, p: &Vec3) -> f64 {
        let mut d = 0.0;
        for a in 0..3 {
            let v = if p[a] < self.lo[a] {
                self.lo[a] - p[a]
            } else if p[a] > self.hi[a] {
                p[a] - self.hi[a]
            } else {
                0.0
            };
            d += v * v;
        }
        d
    }
}

#[derive(Debug, Clone)]
enum Node {
    Inner { bounds: Aabb, left: usize, right: usize },
    Leaf { bounds: Aabb, start: usize, end: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Inner { bounds, .. } | Node::Leaf { bounds, .. } => bounds,
        }
    }
}

/// Result of a closest-triangle query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestHit {
    pub face: usize,
    pub point: Vec3,
    pub distance: f64,
}

/// BVH over a snapshot of triangle positions.
#[derive(Debug, Clone)]
pub struct TriangleBvh {
    nodes: Vec<Node>,
    /// Face indices permuted so that each leaf owns a contiguous range.
    order: Vec<usize>,
    tris: Vec<[Vec3; 3]>,
}

impl TriangleBvh {
    pub fn build(mesh: &Mesh) -> Result<Self> {
        if mesh.face_count() == 0 {
            return Err(Error::EmptyMesh);
        }
        let tris: Vec<[Vec3; 3]> = (0..mesh.face_count()).map(|f| mesh.triangle(f)).collect();
        let centroids: Vec<Vec3> = tris.iter().map(|t| (t[0] + t[1] + t[2]) / 3.0).collect();
        let mut order: Vec<usize> = (0..tris.len()).collect();
        let mut nodes = Vec::with_capacity(2 * tris.len() / LEAF_SIZE + 1);
        build_node(&tris, &centroids, &mut order, 0, tris.len(), &mut nodes);
        Ok(Self { nodes, order, tris })
    }

    pub fn face_count(&self) -> usize {
        self.tris.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Leaf face lists, in tree order.
    pub fn leaves(&self) -> Vec<Vec<usize>> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf { start, end, .. } => Some(self.order[*start..*end].to_vec()),
                _ => None,
            })
            .collect()
    }

    /// Every node's box contains its children's boxes and its triangles.
    pub fn check_bounds(&self) -> bool {
        self.nodes.iter().all(|n| match n {
            Node::Inner { bounds, left, right } => {
                bounds.contains(self.nodes[*left].bounds()) && bounds.contains(self.nodes[*right].bounds())
            }
            Node::Leaf { bounds, start, end } => self.order[*start..*end].iter().all(|&f| {
                let mut b = Aabb::empty();
                self.tris[f].iter().for_each(|p| b.grow(p));
                bounds.contains(&b)
            }),
        })
    }

    pub fn closest(&self, p: &Vec3) -> ClosestHit {
        self.closest_filtered(p, |_| true).expect("unfiltered query on non-empty tree")
    }

    /// Closest accepted face; `None` when the filter rejects every face.
    pub fn closest_filtered(&self, p: &Vec3, accept: impl Fn(usize) -> bool) -> Option<ClosestHit> {
        let mut best: Option<ClosestHit> = None;
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if let Some(b) = &best {
                let bound = b.distance + TIE_EPS;
                if node.bounds().dist2(p) > bound * bound {
                    continue;
                }
            }
            match node {
                Node::Leaf { start, end, .. } => {
                    for &f in &self.order[*start..*end] {
                        if !accept(f) {
                            continue;
                        }
                        let q = closest_point_on_triangle(p, &self.tris[f]);
                        let d = (q - p).norm();
                        if better(d, f, best.as_ref()) {
                            best = Some(ClosestHit { face: f, point: q, distance: d });
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    let dl = self.nodes[*left].bounds().dist2(p);
                    let dr = self.nodes[*right].bounds().dist2(p);
                    // visit the nearer child first
                    if dl <= dr {
                        stack.push(*right);
                        stack.push(*left);
                    } else {
                        stack.push(*left);
                        stack.push(*right);
                    }
                }
            }
        }
        best
    }
}

#[inline]
fn better(d: f64, f: usize, best: Option<&ClosestHit>) -> bool {
    match best {
        None => true,
        Some(b) => d < b.distance - TIE_EPS || (d <= b.distance + TIE_EPS && f < b.face),
    }
}

fn build_node(
    tris: &[[Vec3; 3]],
    centroids: &[Vec3],
    order: &mut [usize],
    start: usize,
    end: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let mut bounds = Aabb::empty();
    let mut cbounds = Aabb::empty();
    for &f in &order[start..end] {
        tris[f].iter().for_each(|p| bounds.grow(p));
        cbounds.grow(&centroids[f]);
    }
    let idx = nodes.len();
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf { bounds, start, end });
        return idx;
    }
    let extent = cbounds.hi - cbounds.lo;
    let axis = extent.imax();
    let mid = start + (end - start) / 2;
    // ties broken by face index keep the build deterministic
    order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
        centroids[a][axis].total_cmp(&centroids[b][axis]).then(a.cmp(&b))
    });
    nodes.push(Node::Leaf { bounds, start: 0, end: 0 });
    let left = build_node(tris, centroids, order, start, mid, nodes);
    let right = build_node(tris, centroids, order, mid, end, nodes);
    nodes[idx] = Node::Inner { bounds, left, right };
    idx
}

/// Closest point on a triangle (Voronoi-region walk).
pub fn closest_point_on_triangle(p: &Vec3, tri: &[Vec3; 3]) -> Vec3 {
    let [a, b, c] = *tri;
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

/// Exhaustive closest-face search with the same tie rule as the tree.
pub fn brute_force_closest(mesh: &Mesh, p: &Vec3) -> Option<ClosestHit> {
    let mut best: Option<ClosestHit> = None;
    for f in 0..mesh.face_count() {
        let q = closest_point_on_triangle(p, &mesh.triangle(f));
        let d = (q - p).norm();
        if better(d, f, best.as_ref()) {
            best = Some(ClosestHit { face: f, point: q, distance: d });
        }
    }
    best
}
