use nalgebra::{Point3, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::TriMesh;

const LEAF_SIZE: usize = 4;

/// Mean and maximum of the two-way closest-point distances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceDistance {
    pub mean: f64,
    pub max: f64,
}

/// Closest point to `p` on triangle `abc` (Ericson, Real-Time Collision
/// Detection, 5.1.5).
pub fn closest_point_on_triangle(
    p: &Point3<f64>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
) -> Point3<f64> {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
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
        return *c;
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

#[derive(Clone, Copy, Debug)]
struct Aabb {
    min: Point3<f64>,
    max: Point3<f64>,
}

impl Aabb {
    fn empty() -> Self {
        Aabb {
            min: Point3::from(Vector3::repeat(f64::INFINITY)),
            max: Point3::from(Vector3::repeat(f64::NEG_INFINITY)),
        }
    }

    fn grow(&mut self, p: &Point3<f64>) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    fn distance_squared(&self, p: &Point3<f64>) -> f64 {
        let below = self.min - p;
        let above = p - self.max;
        below.sup(&above).sup(&Vector3::zeros()).norm_squared()
    }
}

#[derive(Debug)]
enum Node {
    Leaf { bounds: Aabb, start: usize, end: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

/// Bounding-volume hierarchy over a mesh's triangles for closest-point
/// queries.
#[derive(Debug)]
pub struct TriangleIndex {
    triangles: Vec<[Point3<f64>; 3]>,
    nodes: Vec<Node>,
}

impl TriangleIndex {
    pub fn new(mesh: &TriMesh) -> Result<Self> {
        if mesh.triangles.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let mut triangles: Vec<[Point3<f64>; 3]> =
            (0..mesh.triangles.len()).map(|t| mesh.triangle(t)).collect();
        let mut nodes = Vec::with_capacity(2 * triangles.len() / LEAF_SIZE + 1);
        build(&mut triangles, 0, &mut nodes);
        Ok(TriangleIndex { triangles, nodes })
    }

    /// Distance from `p` to the closest point of any indexed triangle.
    pub fn distance(&self, p: &Point3<f64>) -> f64 {
        let mut best = f64::INFINITY;
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            match &self.nodes[n] {
                Node::Leaf { bounds, start, end } => {
                    if bounds.distance_squared(p) >= best {
                        continue;
                    }
                    for [a, b, c] in &self.triangles[*start..*end] {
                        let q = closest_point_on_triangle(p, a, b, c);
                        best = best.min((q - p).norm_squared());
                    }
                }
                Node::Inner { bounds, left, right } => {
                    if bounds.distance_squared(p) >= best {
                        continue;
                    }
                    let dl = self.nodes[*left].bounds().distance_squared(p);
                    let dr = self.nodes[*right].bounds().distance_squared(p);
                    // Visit the nearer child first.
                    if dl < dr {
                        stack.push(*right);
                        stack.push(*left);
                    } else {
                        stack.push(*left);
                        stack.push(*right);
                    }
                }
            }
        }
        best.sqrt()
    }
}

fn centroid(t: &[Point3<f64>; 3]) -> Point3<f64> {
    Point3::from((t[0].coords + t[1].coords + t[2].coords) / 3.0)
}

fn build(tris: &mut [[Point3<f64>; 3]], offset: usize, nodes: &mut Vec<Node>) -> usize {
    let mut bounds = Aabb::empty();
    let mut centers = Aabb::empty();
    for t in tris.iter() {
        t.iter().for_each(|p| bounds.grow(p));
        centers.grow(&centroid(t));
    }
    let id = nodes.len();
    if tris.len() <= LEAF_SIZE {
        nodes.push(Node::Leaf {
            bounds,
            start: offset,
            end: offset + tris.len(),
        });
        return id;
    }
    let extent = centers.max - centers.min;
    let axis = extent.imax();
    let mid = tris.len() / 2;
    tris.select_nth_unstable_by(mid, |a, b| centroid(a)[axis].total_cmp(&centroid(b)[axis]));
    nodes.push(Node::Leaf { bounds, start: 0, end: 0 });
    let (lo, hi) = tris.split_at_mut(mid);
    let left = build(lo, offset, nodes);
    let right = build(hi, offset + mid, nodes);
    nodes[id] = Node::Inner { bounds, left, right };
    id
}

fn sample_points(mesh: &TriMesh) -> Vec<Point3<f64>> {
    let mut pts = mesh.vertices.clone();
    pts.extend((0..mesh.triangles.len()).map(|t| centroid(&mesh.triangle(t))));
    pts
}

fn one_way(from: &TriMesh, to: &TriangleIndex) -> Vec<f64> {
    sample_points(from).par_iter().map(|p| to.distance(p)).collect()
}

/// Two-way surface-to-surface distance. Vertices and triangle centroids of
/// each mesh are measured against the other mesh's triangles; the mean and
/// max are over both directions together.
pub fn surface_to_surface_distance(a: &TriMesh, b: &TriMesh) -> Result<SurfaceDistance> {
    let index_a = TriangleIndex::new(a)?;
    let index_b = TriangleIndex::new(b)?;
    let ab = one_way(a, &index_b);
    let ba = one_way(b, &index_a);
    let sum_ab: f64 = ab.iter().sum();
    let sum_ba: f64 = ba.iter().sum();
    let max = ab.iter().chain(&ba).copied().fold(0.0, f64::max);
    Ok(SurfaceDistance {
        mean: (sum_ab + sum_ba) / (ab.len() + ba.len()) as f64,
        max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rbf::marching_cubes::extract_fn;
    use proptest::prelude::*;

    fn plane(z: f64, n: usize, half: f64) -> TriMesh {
        let mut vertices = Vec::new();
        for j in 0..=n {
            for i in 0..=n {
                let x = -half + 2.0 * half * i as f64 / n as f64;
                let y = -half + 2.0 * half * j as f64 / n as f64;
                vertices.push(Point3::new(x, y, z));
            }
        }
        let mut triangles = Vec::new();
        let id = |i: usize, j: usize| i + (n + 1) * j;
        for j in 0..n {
            for i in 0..n {
                triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        TriMesh { vertices, triangles }
    }

    fn sphere(r: f64) -> TriMesh {
        let h = 1.5;
        extract_fn(Point3::new(-h, -h, -h), Point3::new(h, h, h), [64; 3], 0.0, |p| {
            p.coords.norm() - r
        })
        .unwrap()
    }

    fn brute_force(p: &Point3<f64>, mesh: &TriMesh) -> f64 {
        (0..mesh.triangles.len())
            .map(|t| {
                let [a, b, c] = mesh.triangle(t);
                (closest_point_on_triangle(p, &a, &b, &c) - p).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn identical_meshes_are_zero() {
        let m = sphere(1.0);
        let d = surface_to_surface_distance(&m, &m).unwrap();
        // Centroids sit on their own triangle up to rounding.
        assert!(d.mean < 1e-12 && d.max < 1e-12, "{d:?}");
    }

    #[test]
    fn parallel_planes() {
        let d = surface_to_surface_distance(&plane(0.0, 40, 50.0), &plane(0.3, 40, 50.0)).unwrap();
        assert!((d.mean - 0.3).abs() < 0.003);
        assert!((d.max - 0.3).abs() < 0.003);
    }

    #[test]
    fn concentric_spheres() {
        let d = surface_to_surface_distance(&sphere(1.0), &sphere(1.1)).unwrap();
        assert!((d.mean - 0.1).abs() <= 0.01, "mean {}", d.mean);
    }

    #[test]
    fn empty_mesh_is_rejected() {
        let r = surface_to_surface_distance(&TriMesh::default(), &plane(0.0, 2, 1.0));
        assert!(matches!(r, Err(Error::EmptyMesh)));
    }

    #[test]
    fn closest_point_regions() {
        let (a, b, c) = (
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        );
        let q = |x, y, z| closest_point_on_triangle(&Point3::new(x, y, z), &a, &b, &c);
        assert_eq!(q(-1.0, -1.0, 0.0), a);
        assert_eq!(q(2.0, -0.5, 0.0), b);
        assert_eq!(q(0.25, 0.25, 3.0), Point3::new(0.25, 0.25, 0.0));
        assert_eq!(q(0.5, -2.0, 1.0), Point3::new(0.5, 0.0, 0.0));
        assert_eq!(q(1.0, 1.0, 0.0), Point3::new(0.5, 0.5, 0.0));
    }

    fn coarse_sphere(r: f64) -> TriMesh {
        extract_fn(Point3::new(-1.5, -1.5, -1.5), Point3::new(1.5, 1.5, 1.5), [16; 3], 0.0, |p| {
            p.coords.norm() - r
        })
        .unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn index_matches_brute_force(x in -2.0..2.0f64, y in -2.0..2.0f64, z in -2.0..2.0f64) {
            let m = coarse_sphere(0.8);
            let index = TriangleIndex::new(&m).unwrap();
            let p = Point3::new(x, y, z);
            prop_assert!((index.distance(&p) - brute_force(&p, &m)).abs() < 1e-12);
        }

        #[test]
        fn distance_is_symmetric(r in 0.5..1.2f64, shift in -0.2..0.2f64) {
            let a = coarse_sphere(1.0);
            let mut b = coarse_sphere(r);
            b.vertices.iter_mut().for_each(|v| v.x += shift);
            let ab = surface_to_surface_distance(&a, &b).unwrap();
            let ba = surface_to_surface_distance(&b, &a).unwrap();
            prop_assert_eq!(ab, ba);
        }
    }
}
