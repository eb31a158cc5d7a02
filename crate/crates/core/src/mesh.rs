//! Triangulations of the unit square.
//!
//! Conventions:
//! - triangles are stored counterclockwise;
//! - local edge `l` of a triangle runs from local vertex `l` to local vertex
//!   `(l + 1) % 3` (the CCW traversal);
//! - every global edge is oriented from its lower vertex index to its higher
//!   one, so orientation signs are a pure function of the connectivity.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// One edge of the triangulation, oriented low vertex index -> high.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub vertices: [usize; 2],
}

/// A conforming triangulation of the unit square.
#[derive(Clone, Debug)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    /// Vertex indices, counterclockwise.
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<Edge>,
    /// Per triangle: (global edge index, aligned) for local edges 0,1,2.
    /// `aligned` is true when the CCW traversal matches the global low->high
    /// direction.
    pub tri_edges: Vec<[(usize, bool); 3]>,
    /// Incident triangles per edge; boundary edges have one.
    pub edge_tris: Vec<(usize, Option<usize>)>,
    pub boundary_edge: Vec<bool>,
    pub boundary_vertex: Vec<bool>,
    pub h_max: f64,
}

impl Mesh {
    /// Uniform mesh: n x n subsquares, each split by the diagonal of
    /// positive slope (lower-left to upper-right corner).
    pub fn uniform_square(n: usize) -> Result<Mesh> {
        if n == 0 {
            return Err(Error::InvalidMesh("subdivision count must be >= 1".into()));
        }
        let np = n + 1;
        let mut vertices = Vec::with_capacity(np * np);
        for j in 0..np {
            for i in 0..np {
                vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
            }
        }
        let idx = |i: usize, j: usize| j * np + i;
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
        Self::from_cells(vertices, triangles)
    }

    /// Build connectivity from raw vertices and CCW triangles.
    pub fn from_cells(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>) -> Result<Mesh> {
        let mut edge_of: std::collections::HashMap<[usize; 2], usize> =
            std::collections::HashMap::new();
        let mut edges = Vec::new();
        let mut edge_tris: Vec<(usize, Option<usize>)> = Vec::new();
        let mut tri_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut te = [(0usize, false); 3];
            for l in 0..3 {
                let (a, b) = (tri[l], tri[(l + 1) % 3]);
                let key = [a.min(b), a.max(b)];
                let e = *edge_of.entry(key).or_insert_with(|| {
                    edges.push(Edge { vertices: key });
                    edge_tris.push((usize::MAX, None));
                    edges.len() - 1
                });
                te[l] = (e, a < b);
                if edge_tris[e].0 == usize::MAX {
                    edge_tris[e].0 = t;
                } else if edge_tris[e].1.is_none() {
                    edge_tris[e].1 = Some(t);
                } else {
                    return Err(Error::InvalidMesh(format!(
                        "edge {:?} incident to more than two triangles",
                        key
                    )));
                }
            }
            tri_edges.push(te);
        }
        let boundary_edge: Vec<bool> = edge_tris.iter().map(|&(_, snd)| snd.is_none()).collect();
        let mut boundary_vertex = vec![false; vertices.len()];
        for (e, edge) in edges.iter().enumerate() {
            if boundary_edge[e] {
                boundary_vertex[edge.vertices[0]] = true;
                boundary_vertex[edge.vertices[1]] = true;
            }
        }
        let h_max = edges
            .iter()
            .map(|e| {
                let [a, b] = e.vertices;
                dist(vertices[a], vertices[b])
            })
            .fold(0.0, f64::max);
        let mesh = Mesh {
            vertices,
            triangles,
            edges,
            tri_edges,
            edge_tris,
            boundary_edge,
            boundary_vertex,
            h_max,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Displace interior vertices by a seeded pseudo-random offset of
    /// magnitude <= amplitude * h_local, shrinking the displacement until
    /// all triangles keep positive area.
    pub fn perturb_interior(&self, amplitude: f64, seed: u64) -> Result<Mesh> {
        if !(0.0..0.5).contains(&amplitude) {
            return Err(Error::InvalidMesh(format!(
                "perturbation amplitude {} outside [0, 0.5)",
                amplitude
            )));
        }
        // Local h: shortest incident edge of the unperturbed mesh.
        let mut h_local = vec![f64::INFINITY; self.vertices.len()];
        for e in &self.edges {
            let [a, b] = e.vertices;
            let len = dist(self.vertices[a], self.vertices[b]);
            h_local[a] = h_local[a].min(len);
            h_local[b] = h_local[b].min(len);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut offsets = vec![[0.0f64; 2]; self.vertices.len()];
        for (v, off) in offsets.iter_mut().enumerate() {
            if self.boundary_vertex[v] {
                continue;
            }
            // Uniform in a disc of radius amplitude * h_local.
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            let rho = amplitude * h_local[v] * rng.gen_range(0.0f64..1.0).sqrt();
            *off = [rho * theta.cos(), rho * theta.sin()];
        }
        let mut scale = 1.0;
        for _ in 0..24 {
            let vertices: Vec<[f64; 2]> = self
                .vertices
                .iter()
                .zip(&offsets)
                .map(|(v, o)| [v[0] + scale * o[0], v[1] + scale * o[1]])
                .collect();
            let ok = self.triangles.iter().all(|tri| {
                signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]) > 1e-14
            });
            if ok {
                return Mesh::from_cells(vertices, self.triangles.clone());
            }
            scale *= 0.5;
        }
        Err(Error::PerturbationFailed(
            "no valid mesh after shrinking the displacement 24 times".into(),
        ))
    }

    /// Recompute boundary flags from edge incidence.
    pub fn classify_boundary(&self) -> (Vec<bool>, Vec<bool>) {
        (self.boundary_edge.clone(), self.boundary_vertex.clone())
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    /// Check the structural invariants; used after construction and in tests.
    pub fn validate(&self) -> Result<()> {
        for t in 0..self.triangles.len() {
            if self.triangle_area(t) <= 0.0 {
                return Err(Error::InvalidMesh(format!(
                    "triangle {} has non-positive area",
                    t
                )));
            }
        }
        let v = self.num_vertices() as i64;
        let e = self.num_edges() as i64;
        let t = self.num_triangles() as i64;
        if v - e + t != 1 {
            return Err(Error::InvalidMesh(format!(
                "Euler relation violated: V-E+T = {}",
                v - e + t
            )));
        }
        Ok(())
    }

    /// Plain-text dump: "v x y" per vertex, "t i j k" per triangle.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            out.push_str(&format!("v {:.17} {:.17}\n", v[0], v[1]));
        }
        for t in &self.triangles {
            out.push_str(&format!("t {} {} {}\n", t[0], t[1], t[2]));
        }
        out
    }

    /// Affine map data for a triangle: (origin, Jacobian columns, det).
    pub fn affine_map(&self, t: usize) -> AffineMap {
        let [a, b, c] = self.triangles[t];
        let p0 = self.vertices[a];
        let p1 = self.vertices[b];
        let p2 = self.vertices[c];
        let j = [[p1[0] - p0[0], p2[0] - p0[0]], [p1[1] - p0[1], p2[1] - p0[1]]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        AffineMap { origin: p0, j, det }
    }
}

/// The affine map x = origin + J * xhat from the reference triangle.
#[derive(Clone, Copy, Debug)]
pub struct AffineMap {
    pub origin: [f64; 2],
    /// Row-major 2x2 Jacobian.
    pub j: [[f64; 2]; 2],
    pub det: f64,
}

impl AffineMap {
    pub fn apply(&self, xhat: [f64; 2]) -> [f64; 2] {
        [
            self.origin[0] + self.j[0][0] * xhat[0] + self.j[0][1] * xhat[1],
            self.origin[1] + self.j[1][0] * xhat[0] + self.j[1][1] * xhat[1],
        ]
    }

    /// J^{-T} g, the push-forward of a reference gradient.
    pub fn grad(&self, g: [f64; 2]) -> [f64; 2] {
        let inv_det = 1.0 / self.det;
        [
            inv_det * (self.j[1][1] * g[0] - self.j[1][0] * g[1]),
            inv_det * (-self.j[0][1] * g[0] + self.j[0][0] * g[1]),
        ]
    }

    /// Contravariant Piola transform J v / det J.
    pub fn piola(&self, v: [f64; 2]) -> [f64; 2] {
        let inv_det = 1.0 / self.det;
        [
            inv_det * (self.j[0][0] * v[0] + self.j[0][1] * v[1]),
            inv_det * (self.j[1][0] * v[0] + self.j[1][1] * v[1]),
        ]
    }

    pub fn inverse_apply(&self, x: [f64; 2]) -> [f64; 2] {
        let d = [x[0] - self.origin[0], x[1] - self.origin[1]];
        let inv_det = 1.0 / self.det;
        [
            inv_det * (self.j[1][1] * d[0] - self.j[0][1] * d[1]),
            inv_det * (-self.j[1][0] * d[0] + self.j[0][0] * d[1]),
        ]
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}
