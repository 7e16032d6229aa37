//! Marching cubes over a regular lattice of scalar samples.
//!
//! The per-case triangle table is generated once from the cube topology
//! rather than transcribed: on every cube face the iso-segments cut off runs
//! of inside corners, so ambiguous faces are resolved identically by both
//! cubes sharing them and the output is watertight. Segments are chained into
//! loops around the cube and fan-triangulated. Triangles are wound so that
//! their normals point towards larger values.

use std::collections::HashMap;
use std::sync::OnceLock;

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};
use crate::mesh::TriMesh;

/// Regular sampling lattice spanning an axis-aligned box.
#[derive(Clone, Debug)]
pub struct Lattice {
    lower: Point3<f64>,
    step: Vector3<f64>,
    res: [usize; 3],
}

impl Lattice {
    pub fn new(lower: Point3<f64>, upper: Point3<f64>, res: [usize; 3]) -> Result<Self> {
        if res.iter().any(|&r| r < 2) {
            return Err(Error::invalid("lattice resolution must be at least 2 per axis"));
        }
        let extent = upper - lower;
        if extent.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::invalid("lattice box is degenerate"));
        }
        let step = Vector3::new(
            extent.x / (res[0] - 1) as f64,
            extent.y / (res[1] - 1) as f64,
            extent.z / (res[2] - 1) as f64,
        );
        Ok(Lattice { lower, step, res })
    }

    pub fn len(&self) -> usize {
        self.res[0] * self.res[1] * self.res[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn step(&self) -> &Vector3<f64> {
        &self.step
    }

    #[inline]
    fn linear(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.res[0] * (j + self.res[1] * k)
    }

    #[inline]
    fn point(&self, i: usize, j: usize, k: usize) -> Point3<f64> {
        self.lower
            + Vector3::new(
                i as f64 * self.step.x,
                j as f64 * self.step.y,
                k as f64 * self.step.z,
            )
    }

    /// Position of the sample with linear (x-fastest) index `idx`.
    pub fn point_at(&self, idx: usize) -> Point3<f64> {
        let i = idx % self.res[0];
        let j = (idx / self.res[0]) % self.res[1];
        let k = idx / (self.res[0] * self.res[1]);
        self.point(i, j, k)
    }
}

// Corner c sits at offset (c & 1, (c >> 1) & 1, (c >> 2) & 1).
const EDGES: [(u8, u8); 12] = [
    (0, 1),
    (2, 3),
    (4, 5),
    (6, 7),
    (0, 2),
    (1, 3),
    (4, 6),
    (5, 7),
    (0, 4),
    (1, 5),
    (2, 6),
    (3, 7),
];

fn edge_index(a: u8, b: u8) -> u8 {
    let (a, b) = if a < b { (a, b) } else { (b, a) };
    EDGES
        .iter()
        .position(|&e| e == (a, b))
        .expect("corners share an edge") as u8
}

/// Corner cycles of the six faces, counter-clockwise seen from outside.
fn face_cycles() -> [[u8; 4]; 6] {
    let mut faces = [[0u8; 4]; 6];
    for axis in 0..3 {
        let b = (axis + 1) % 3;
        let c = (axis + 2) % 3;
        for side in 0..2u8 {
            let mut cycle = [(0u8, 0u8), (1, 0), (1, 1), (0, 1)]
                .map(|(ub, uc)| (side << axis) | (ub << b) | (uc << c));
            if side == 0 {
                cycle.reverse();
            }
            faces[2 * axis + side as usize] = cycle;
        }
    }
    faces
}

/// Triangles (as edge-index triples) for one corner configuration; bit `c` of
/// `case` is set when corner `c` is inside (below the iso value).
fn triangulate_case(case: u8, faces: &[[u8; 4]; 6]) -> Vec<[u8; 3]> {
    let inside = |c: u8| case & (1 << c) != 0;
    let mut next: [Option<u8>; 12] = [None; 12];
    for cycle in faces {
        for start in 0..4 {
            let (a, b) = (cycle[start], cycle[(start + 1) % 4]);
            if inside(a) || !inside(b) {
                continue;
            }
            // Entering the inside region: walk to where it is left again.
            for step in 1..4 {
                let (c, d) = (cycle[(start + step) % 4], cycle[(start + step + 1) % 4]);
                if inside(c) && !inside(d) {
                    next[edge_index(a, b) as usize] = Some(edge_index(c, d));
                    break;
                }
            }
        }
    }
    let mut visited = [false; 12];
    let mut triangles = Vec::new();
    for start in 0..12u8 {
        if visited[start as usize] || next[start as usize].is_none() {
            continue;
        }
        let mut ring = vec![start];
        visited[start as usize] = true;
        let mut e = next[start as usize].expect("checked above");
        while e != start {
            visited[e as usize] = true;
            ring.push(e);
            e = next[e as usize].expect("iso-segments form closed loops");
        }
        for i in 1..ring.len() - 1 {
            triangles.push([ring[0], ring[i], ring[i + 1]]);
        }
    }
    triangles
}

fn case_table() -> &'static [Vec<[u8; 3]>] {
    static TABLE: OnceLock<Vec<Vec<[u8; 3]>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let faces = face_cycles();
        (0..=255u8).map(|case| triangulate_case(case, &faces)).collect()
    })
}

/// Extracts the `iso` level set of `values` sampled on `lattice`.
pub fn extract(lattice: &Lattice, values: &[f64], iso: f64) -> Result<TriMesh> {
    assert_eq!(values.len(), lattice.len(), "one value per lattice sample");
    let table = case_table();
    let [nx, ny, nz] = lattice.res;
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut vertex_of_edge: HashMap<(usize, u8), usize> = HashMap::new();

    let corner_offset = |c: u8| ((c & 1) as usize, ((c >> 1) & 1) as usize, ((c >> 2) & 1) as usize);

    for k in 0..nz - 1 {
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let mut case = 0u8;
                let mut corner_values = [0.0; 8];
                for c in 0..8u8 {
                    let (di, dj, dk) = corner_offset(c);
                    let v = values[lattice.linear(i + di, j + dj, k + dk)];
                    corner_values[c as usize] = v;
                    if v < iso {
                        case |= 1 << c;
                    }
                }
                let tris = &table[case as usize];
                if tris.is_empty() {
                    continue;
                }
                let mut local = [usize::MAX; 12];
                for tri in tris {
                    let mut ids = [0usize; 3];
                    for (slot, &edge) in ids.iter_mut().zip(tri) {
                        if local[edge as usize] == usize::MAX {
                            let (a, b) = EDGES[edge as usize];
                            let (ai, aj, ak) = corner_offset(a);
                            let axis = (a ^ b).trailing_zeros() as u8;
                            let key = (lattice.linear(i + ai, j + aj, k + ak), axis);
                            local[edge as usize] = *vertex_of_edge.entry(key).or_insert_with(|| {
                                let (va, vb) = (corner_values[a as usize], corner_values[b as usize]);
                                let t = ((iso - va) / (vb - va)).clamp(0.0, 1.0);
                                let pa = lattice.point(i + ai, j + aj, k + ak);
                                let (bi, bj, bk) = corner_offset(b);
                                let pb = lattice.point(i + bi, j + bj, k + bk);
                                vertices.push(pa + (pb - pa) * t);
                                vertices.len() - 1
                            });
                        }
                        *slot = local[edge as usize];
                    }
                    if ids[0] != ids[1] && ids[1] != ids[2] && ids[0] != ids[2] {
                        triangles.push(ids);
                    }
                }
            }
        }
    }
    if triangles.is_empty() {
        return Err(Error::EmptyIsosurface);
    }
    Ok(TriMesh {
        vertices,
        triangles,
    })
}

/// Marching cubes applied directly to a scalar function.
pub fn extract_fn(
    lower: Point3<f64>,
    upper: Point3<f64>,
    res: [usize; 3],
    iso: f64,
    f: impl Fn(&Point3<f64>) -> f64,
) -> Result<TriMesh> {
    let lattice = Lattice::new(lower, upper, res)?;
    let values: Vec<f64> = (0..lattice.len()).map(|i| f(&lattice.point_at(i))).collect();
    extract(&lattice, &values, iso)
}
