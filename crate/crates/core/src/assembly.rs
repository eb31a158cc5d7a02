//! Global assembly of the bilinear forms used by the mixed solvers.
//!
//! All assemblers return matrices over the *free* DOFs of the given spaces;
//! essential constraints are homogeneous, so elimination amounts to dropping
//! constrained rows and columns.

use crate::error::{Error, Result};
use crate::refelem::quadrature;
use crate::space::FeSpace;

/// Compressed sparse row matrix.
#[derive(Clone, Debug)]
pub struct SparseMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub vals: Vec<f64>,
}

impl SparseMatrix {
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> SparseMatrix {
        triplets.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_counts = vec![0usize; nrows];
        let mut col_idx: Vec<usize> = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut prev: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            debug_assert!(i < nrows && j < ncols);
            if prev == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                row_counts[i] += 1;
                col_idx.push(j);
                vals.push(v);
                prev = Some((i, j));
            }
        }
        let mut row_ptr = vec![0usize; nrows + 1];
        for i in 0..nrows {
            row_ptr[i + 1] = row_ptr[i] + row_counts[i];
        }
        SparseMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            vals,
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        for i in 0..self.nrows {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.col_idx[k]];
            }
            y[i] = acc;
        }
        y
    }

    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                y[self.col_idx[k]] += self.vals[k] * x[i];
            }
        }
        y
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                d[(i, self.col_idx[k])] += self.vals[k];
            }
        }
        d
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.push((i, self.col_idx[k], self.vals[k]));
            }
        }
        out
    }
}

fn check_same_mesh(a: &FeSpace, b: &FeSpace) -> Result<()> {
    if std::sync::Arc::ptr_eq(&a.mesh, &b.mesh) {
        Ok(())
    } else {
        Err(Error::MeshMismatch)
    }
}

/// Scatter a local element matrix into global triplets, applying orientation
/// signs and skipping constrained DOFs.
fn scatter(
    triplets: &mut Vec<(usize, usize, f64)>,
    rows: &FeSpace,
    cols: &FeSpace,
    t: usize,
    local: &[Vec<f64>],
) {
    for (li, &(gi, si)) in rows.cell_dofs[t].iter().enumerate() {
        let Some(ri) = rows.free_of_full[gi] else { continue };
        for (lj, &(gj, sj)) in cols.cell_dofs[t].iter().enumerate() {
            let Some(cj) = cols.free_of_full[gj] else { continue };
            let v = si * sj * local[li][lj];
            if v != 0.0 {
                triplets.push((ri, cj, v));
            }
        }
    }
}

/// Mass matrix (u, v) for a scalar or vector space.
pub fn assemble_mass(space: &FeSpace, quad_degree: usize) -> Result<SparseMatrix> {
    let rule = quadrature(quad_degree)?;
    let mesh = &space.mesh;
    let n = space.elem.ndofs;
    let mut triplets = Vec::new();
    let mut local = vec![vec![0.0; n]; n];
    if space.elem.is_scalar() {
        let (vals, _) = space.elem.tabulate_scalar(&rule.points);
        for t in 0..mesh.num_triangles() {
            let det = mesh.affine_map(t).det;
            for row in local.iter_mut() {
                row.iter_mut().for_each(|x| *x = 0.0);
            }
            for (q, b) in vals.iter().enumerate() {
                let w = rule.weights[q] * det;
                for i in 0..n {
                    for j in 0..n {
                        local[i][j] += w * b[i] * b[j];
                    }
                }
            }
            scatter(&mut triplets, space, space, t, &local);
        }
    } else {
        let (vals, _) = space.elem.tabulate_vector(&rule.points);
        for t in 0..mesh.num_triangles() {
            let map = mesh.affine_map(t);
            // Piola: v = J vhat / det, so v.w integrates to
            // w_q * (J vi).(J vj) / det on the physical triangle.
            for row in local.iter_mut() {
                row.iter_mut().for_each(|x| *x = 0.0);
            }
            for (q, b) in vals.iter().enumerate() {
                let w = rule.weights[q] / map.det;
                let mapped: Vec<[f64; 2]> = b
                    .iter()
                    .map(|&v| {
                        [
                            map.j[0][0] * v[0] + map.j[0][1] * v[1],
                            map.j[1][0] * v[0] + map.j[1][1] * v[1],
                        ]
                    })
                    .collect();
                for i in 0..n {
                    for j in 0..n {
                        local[i][j] += w * (mapped[i][0] * mapped[j][0] + mapped[i][1] * mapped[j][1]);
                    }
                }
            }
            scatter(&mut triplets, space, space, t, &local);
        }
    }
    Ok(SparseMatrix::from_triplets(space.n_free, space.n_free, triplets))
}

/// Coupling (curl sigma, v): rows indexed by the vector space `v_space`,
/// columns by the scalar space `sigma_space`.  curl s = (ds/dy, -ds/dx).
pub fn assemble_curl_coupling(
    v_space: &FeSpace,
    sigma_space: &FeSpace,
    quad_degree: usize,
) -> Result<SparseMatrix> {
    check_same_mesh(v_space, sigma_space)?;
    let rule = quadrature(quad_degree)?;
    let mesh = &v_space.mesh;
    let (nv, ns) = (v_space.elem.ndofs, sigma_space.elem.ndofs);
    let (vvals, _) = v_space.elem.tabulate_vector(&rule.points);
    let (_, sgrads) = sigma_space.elem.tabulate_scalar(&rule.points);
    let mut triplets = Vec::new();
    let mut local = vec![vec![0.0; ns]; nv];
    for t in 0..mesh.num_triangles() {
        let map = mesh.affine_map(t);
        for row in local.iter_mut() {
            row.iter_mut().for_each(|x| *x = 0.0);
        }
        for q in 0..rule.points.len() {
            let w = rule.weights[q] * map.det;
            let vs: Vec<[f64; 2]> = vvals[q].iter().map(|&v| map.piola(v)).collect();
            let curls: Vec<[f64; 2]> = sgrads[q]
                .iter()
                .map(|&g| {
                    let g = map.grad(g);
                    [g[1], -g[0]]
                })
                .collect();
            for i in 0..nv {
                for j in 0..ns {
                    local[i][j] += w * (vs[i][0] * curls[j][0] + vs[i][1] * curls[j][1]);
                }
            }
        }
        scatter(&mut triplets, v_space, sigma_space, t, &local);
    }
    Ok(SparseMatrix::from_triplets(
        v_space.n_free,
        sigma_space.n_free,
        triplets,
    ))
}

/// Coupling (div v, q): rows indexed by the DG space `q_space`, columns by
/// the vector space `v_space`.
pub fn assemble_div_pressure(
    q_space: &FeSpace,
    v_space: &FeSpace,
    quad_degree: usize,
) -> Result<SparseMatrix> {
    check_same_mesh(q_space, v_space)?;
    let rule = quadrature(quad_degree)?;
    let mesh = &q_space.mesh;
    let (nq, nv) = (q_space.elem.ndofs, v_space.elem.ndofs);
    let (qvals, _) = q_space.elem.tabulate_scalar(&rule.points);
    let (_, vdivs) = v_space.elem.tabulate_vector(&rule.points);
    let mut triplets = Vec::new();
    let mut local = vec![vec![0.0; nv]; nq];
    for t in 0..mesh.num_triangles() {
        // div v = divhat/det, and the det from the measure cancels it.
        for row in local.iter_mut() {
            row.iter_mut().for_each(|x| *x = 0.0);
        }
        for q in 0..rule.points.len() {
            let w = rule.weights[q];
            for i in 0..nq {
                for j in 0..nv {
                    local[i][j] += w * qvals[q][i] * vdivs[q][j];
                }
            }
        }
        scatter(&mut triplets, q_space, v_space, t, &local);
    }
    Ok(SparseMatrix::from_triplets(
        q_space.n_free,
        v_space.n_free,
        triplets,
    ))
}

/// Stiffness-like form (div u, div v) on a vector space.
pub fn assemble_divdiv(space: &FeSpace, quad_degree: usize) -> Result<SparseMatrix> {
    let rule = quadrature(quad_degree)?;
    let mesh = &space.mesh;
    let n = space.elem.ndofs;
    let (_, divs) = space.elem.tabulate_vector(&rule.points);
    let mut triplets = Vec::new();
    let mut local = vec![vec![0.0; n]; n];
    for t in 0..mesh.num_triangles() {
        let det = mesh.affine_map(t).det;
        for row in local.iter_mut() {
            row.iter_mut().for_each(|x| *x = 0.0);
        }
        for q in 0..rule.points.len() {
            let w = rule.weights[q] / det;
            for i in 0..n {
                for j in 0..n {
                    local[i][j] += w * divs[q][i] * divs[q][j];
                }
            }
        }
        scatter(&mut triplets, space, space, t, &local);
    }
    Ok(SparseMatrix::from_triplets(space.n_free, space.n_free, triplets))
}

/// Stiffness form (curl s, curl t) between two scalar spaces on the same
/// mesh (rows = `rows`, columns = `cols`; constraints may differ).  In 2D
/// this equals (grad s, grad t) because curl is a pointwise rotation of grad.
pub fn assemble_curlcurl(
    rows: &FeSpace,
    cols: &FeSpace,
    quad_degree: usize,
) -> Result<SparseMatrix> {
    check_same_mesh(rows, cols)?;
    let rule = quadrature(quad_degree)?;
    let mesh = &rows.mesh;
    let (nr, nc) = (rows.elem.ndofs, cols.elem.ndofs);
    let (_, rgrads) = rows.elem.tabulate_scalar(&rule.points);
    let (_, cgrads) = cols.elem.tabulate_scalar(&rule.points);
    let mut triplets = Vec::new();
    let mut local = vec![vec![0.0; nc]; nr];
    for t in 0..mesh.num_triangles() {
        let map = mesh.affine_map(t);
        for row in local.iter_mut() {
            row.iter_mut().for_each(|x| *x = 0.0);
        }
        for q in 0..rule.points.len() {
            let w = rule.weights[q] * map.det;
            let gr: Vec<[f64; 2]> = rgrads[q].iter().map(|&g| map.grad(g)).collect();
            let gc: Vec<[f64; 2]> = cgrads[q].iter().map(|&g| map.grad(g)).collect();
            for i in 0..nr {
                for j in 0..nc {
                    local[i][j] += w * (gr[i][0] * gc[j][0] + gr[i][1] * gc[j][1]);
                }
            }
        }
        scatter(&mut triplets, rows, cols, t, &local);
    }
    Ok(SparseMatrix::from_triplets(rows.n_free, cols.n_free, triplets))
}

/// Load vector (f, curl s) for a scalar space, f a physical vector field.
pub fn assemble_load_curl(
    space: &FeSpace,
    f: &dyn Fn(f64, f64) -> [f64; 2],
    quad_degree: usize,
) -> Result<Vec<f64>> {
    let rule = quadrature(quad_degree)?;
    let mesh = &space.mesh;
    let (_, grads) = space.elem.tabulate_scalar(&rule.points);
    let mut b = vec![0.0; space.n_free];
    for t in 0..mesh.num_triangles() {
        let map = mesh.affine_map(t);
        for (q, row) in grads.iter().enumerate() {
            let p = map.apply(rule.points[q]);
            let fv = f(p[0], p[1]);
            let w = rule.weights[q] * map.det;
            for (&(g, s), &gb) in space.cell_dofs[t].iter().zip(row) {
                if let Some(r) = space.free_of_full[g] {
                    let gr = map.grad(gb);
                    // curl s = (ds/dy, -ds/dx)
                    b[r] += w * s * (gr[1] * fv[0] - gr[0] * fv[1]);
                }
            }
        }
    }
    Ok(b)
}

/// Load vector (f, s) for a scalar space.
pub fn assemble_load_scalar(
    space: &FeSpace,
    f: &dyn Fn(f64, f64) -> f64,
    quad_degree: usize,
) -> Result<Vec<f64>> {
    let rule = quadrature(quad_degree)?;
    let mesh = &space.mesh;
    let (vals, _) = space.elem.tabulate_scalar(&rule.points);
    let mut b = vec![0.0; space.n_free];
    for t in 0..mesh.num_triangles() {
        let map = mesh.affine_map(t);
        for (q, row) in vals.iter().enumerate() {
            let p = map.apply(rule.points[q]);
            let w = rule.weights[q] * map.det * f(p[0], p[1]);
            for (&(g, s), &bi) in space.cell_dofs[t].iter().zip(row) {
                if let Some(r) = space.free_of_full[g] {
                    b[r] += w * s * bi;
                }
            }
        }
    }
    Ok(b)
}

/// Load vector (f, v) for a vector space.
pub fn assemble_load_vector(
    space: &FeSpace,
    f: &dyn Fn(f64, f64) -> [f64; 2],
    quad_degree: usize,
) -> Result<Vec<f64>> {
    let rule = quadrature(quad_degree)?;
    let mesh = &space.mesh;
    let (vals, _) = space.elem.tabulate_vector(&rule.points);
    let mut b = vec![0.0; space.n_free];
    for t in 0..mesh.num_triangles() {
        let map = mesh.affine_map(t);
        for (q, row) in vals.iter().enumerate() {
            let p = map.apply(rule.points[q]);
            let fv = f(p[0], p[1]);
            let w = rule.weights[q] * map.det;
            for (&(g, s), &vb) in space.cell_dofs[t].iter().zip(row) {
                if let Some(r) = space.free_of_full[g] {
                    let v = map.piola(vb);
                    b[r] += w * s * (v[0] * fv[0] + v[1] * fv[1]);
                }
            }
        }
    }
    Ok(b)
}

/// Builder for block-structured sparse systems (saddle points, multiplier
/// rows).  Block offsets are fixed by the row/column size lists.
pub struct BlockBuilder {
    row_off: Vec<usize>,
    col_off: Vec<usize>,
    nrows: usize,
    ncols: usize,
    triplets: Vec<(usize, usize, f64)>,
}

impl BlockBuilder {
    pub fn new(row_sizes: &[usize], col_sizes: &[usize]) -> BlockBuilder {
        let mut row_off = vec![0usize];
        for &s in row_sizes {
            row_off.push(row_off.last().unwrap() + s);
        }
        let mut col_off = vec![0usize];
        for &s in col_sizes {
            col_off.push(col_off.last().unwrap() + s);
        }
        BlockBuilder {
            nrows: *row_off.last().unwrap(),
            ncols: *col_off.last().unwrap(),
            row_off,
            col_off,
            triplets: Vec::new(),
        }
    }

    pub fn add(&mut self, bi: usize, bj: usize, m: &SparseMatrix, scale: f64) {
        assert_eq!(m.nrows, self.row_off[bi + 1] - self.row_off[bi]);
        assert_eq!(m.ncols, self.col_off[bj + 1] - self.col_off[bj]);
        for (i, j, v) in m.triplets() {
            self.triplets
                .push((self.row_off[bi] + i, self.col_off[bj] + j, scale * v));
        }
    }

    pub fn add_transpose(&mut self, bi: usize, bj: usize, m: &SparseMatrix, scale: f64) {
        assert_eq!(m.ncols, self.row_off[bi + 1] - self.row_off[bi]);
        assert_eq!(m.nrows, self.col_off[bj + 1] - self.col_off[bj]);
        for (i, j, v) in m.triplets() {
            self.triplets
                .push((self.row_off[bi] + j, self.col_off[bj] + i, scale * v));
        }
    }

    /// Place a vector as a column block (and nothing else in that block).
    pub fn add_column(&mut self, bi: usize, bj: usize, v: &[f64], scale: f64) {
        assert_eq!(v.len(), self.row_off[bi + 1] - self.row_off[bi]);
        assert_eq!(1, self.col_off[bj + 1] - self.col_off[bj]);
        for (i, &x) in v.iter().enumerate() {
            self.triplets
                .push((self.row_off[bi] + i, self.col_off[bj], scale * x));
        }
    }

    /// Place a vector as a row block.
    pub fn add_row(&mut self, bi: usize, bj: usize, v: &[f64], scale: f64) {
        assert_eq!(1, self.row_off[bi + 1] - self.row_off[bi]);
        assert_eq!(v.len(), self.col_off[bj + 1] - self.col_off[bj]);
        for (j, &x) in v.iter().enumerate() {
            self.triplets
                .push((self.row_off[bi], self.col_off[bj] + j, scale * x));
        }
    }

    pub fn build(self) -> SparseMatrix {
        SparseMatrix::from_triplets(self.nrows, self.ncols, self.triplets)
    }

    pub fn offsets(&self) -> (&[usize], &[usize]) {
        (&self.row_off, &self.col_off)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Mesh;
    use crate::refelem::Family;
    use crate::space::{Constraint, FeFunction, FeSpace};
    use rand::Rng;
    use rand::SeedableRng;
    use std::sync::Arc;

    fn mesh(n: usize) -> Arc<Mesh> {
        Arc::new(Mesh::uniform_square(n).unwrap())
    }

    fn random_fn(space: &Arc<FeSpace>, seed: u64) -> FeFunction {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let coeffs = (0..space.ndofs).map(|_| rng.gen_range(-1.0..1.0)).collect();
        FeFunction::from_coeffs(space.clone(), coeffs)
    }

    /// Quadrature integral of g over the mesh, g given in reference coords
    /// per triangle.
    fn integrate(m: &Mesh, deg: usize, g: &dyn Fn(usize, [f64; 2]) -> f64) -> f64 {
        let rule = quadrature(deg).unwrap();
        let mut acc = 0.0;
        for t in 0..m.num_triangles() {
            let det = m.affine_map(t).det;
            for (q, &p) in rule.points.iter().enumerate() {
                acc += rule.weights[q] * det * g(t, p);
            }
        }
        acc
    }

    #[test]
    fn triplet_dedup_and_matvec() {
        let a = SparseMatrix::from_triplets(
            2,
            2,
            vec![(0, 0, 1.0), (0, 0, 2.0), (1, 0, 4.0), (0, 1, -1.0)],
        );
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.matvec(&[1.0, 1.0]), vec![2.0, 4.0]);
        assert_eq!(a.matvec_transpose(&[1.0, 1.0]), vec![7.0, -1.0]);
    }

    #[test]
    fn dg0_mass_is_area_diagonal() {
        let m = mesh(3);
        let sp = Arc::new(FeSpace::new(m.clone(), Family::Discontinuous, 0, Constraint::None).unwrap());
        let mm = assemble_mass(&sp, 4).unwrap();
        assert_eq!(mm.nnz(), m.num_triangles());
        let total: f64 = mm.vals.iter().sum();
        assert!((total - 1.0).abs() < 1e-13);
        for t in 0..m.num_triangles() {
            let d = mm.to_dense()[(t, t)];
            assert!((d - m.triangle_area(t)).abs() < 1e-14);
        }
    }

    #[test]
    fn lagrange_mass_partition_of_unity() {
        let m = mesh(4);
        let sp = Arc::new(FeSpace::new(m, Family::Lagrange, 3, Constraint::None).unwrap());
        let mm = assemble_mass(&sp, 8).unwrap();
        let ones = vec![1.0; sp.n_free];
        let y = mm.matvec(&ones);
        let total: f64 = y.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rt_mass_matches_function_norm() {
        let m = mesh(3);
        for r in 1..=2 {
            let sp = Arc::new(FeSpace::new(m.clone(), Family::RaviartThomas, r, Constraint::None).unwrap());
            let f = random_fn(&sp, 11);
            let mm = assemble_mass(&sp, 2 * r + 4).unwrap();
            let x = f.reduced();
            let quad_form: f64 = mm.matvec(&x).iter().zip(&x).map(|(a, b)| a * b).sum();
            let direct = f.l2_norm(2 * r + 4).powi(2);
            assert!((quad_form - direct).abs() < 1e-12 * (1.0 + direct), "r={}", r);
        }
    }

    #[test]
    fn curl_coupling_matches_quadrature() {
        let m = mesh(2);
        let sig = Arc::new(FeSpace::new(m.clone(), Family::Lagrange, 2, Constraint::None).unwrap());
        let v = Arc::new(FeSpace::new(m.clone(), Family::RaviartThomas, 2, Constraint::None).unwrap());
        let c = assemble_curl_coupling(&v, &sig, 8).unwrap();
        let s = random_fn(&sig, 7);
        let u = random_fn(&v, 8);
        let via_matrix: f64 = c
            .matvec(&s.reduced())
            .iter()
            .zip(&u.reduced())
            .map(|(a, b)| a * b)
            .sum();
        let direct = integrate(&m, 10, &|t, p| {
            let g = s.eval_grad(t, p);
            let w = u.eval_vector(t, p);
            g[1] * w[0] - g[0] * w[1]
        });
        assert!((via_matrix - direct).abs() < 1e-11);
    }

    #[test]
    fn div_pressure_matches_quadrature() {
        let m = mesh(2);
        let qsp = Arc::new(FeSpace::new(m.clone(), Family::Discontinuous, 1, Constraint::None).unwrap());
        let v = Arc::new(FeSpace::new(m.clone(), Family::RaviartThomas, 2, Constraint::None).unwrap());
        let b = assemble_div_pressure(&qsp, &v, 8).unwrap();
        let p = random_fn(&qsp, 17);
        let u = random_fn(&v, 18);
        let via_matrix: f64 = b
            .matvec(&u.reduced())
            .iter()
            .zip(&p.reduced())
            .map(|(a, c)| a * c)
            .sum();
        let direct = integrate(&m, 10, &|t, x| p.eval_scalar(t, x) * u.eval_div(t, x));
        assert!((via_matrix - direct).abs() < 1e-11);
    }

    #[test]
    fn divdiv_matches_quadrature() {
        let m = mesh(2);
        let v = Arc::new(FeSpace::new(m.clone(), Family::RaviartThomas, 2, Constraint::None).unwrap());
        let d = assemble_divdiv(&v, 8).unwrap();
        let u = random_fn(&v, 23);
        let x = u.reduced();
        let via_matrix: f64 = d.matvec(&x).iter().zip(&x).map(|(a, b)| a * b).sum();
        let direct = integrate(&m, 10, &|t, p| u.eval_div(t, p).powi(2));
        assert!((via_matrix - direct).abs() < 1e-11);
    }

    #[test]
    fn curlcurl_kills_constants() {
        let m = mesh(3);
        let sp = Arc::new(FeSpace::new(m, Family::Lagrange, 2, Constraint::None).unwrap());
        let k = assemble_curlcurl(&sp, &sp, 6).unwrap();
        let ones = vec![1.0; sp.n_free];
        for y in k.matvec(&ones) {
            assert!(y.abs() < 1e-12);
        }
    }

    #[test]
    fn load_scalar_integrates_one() {
        let m = mesh(3);
        let sp = Arc::new(FeSpace::new(m, Family::Discontinuous, 0, Constraint::None).unwrap());
        let b = assemble_load_scalar(&sp, &|_, _| 1.0, 4).unwrap();
        let total: f64 = b.iter().sum();
        assert!((total - 1.0).abs() < 1e-13);
    }

    #[test]
    fn constrained_rows_are_dropped() {
        let m = mesh(3);
        let full = FeSpace::new(m.clone(), Family::Lagrange, 1, Constraint::None).unwrap();
        let zt = FeSpace::new(m, Family::Lagrange, 1, Constraint::ZeroTrace).unwrap();
        let m_full = assemble_mass(&full, 4).unwrap();
        let m_zt = assemble_mass(&zt, 4).unwrap();
        assert_eq!(m_full.nrows, 16);
        assert_eq!(m_zt.nrows, 4);
    }

    #[test]
    fn block_builder_layout() {
        let a = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 1, 2.0)]);
        let b = SparseMatrix::from_triplets(1, 2, vec![(0, 0, 3.0), (0, 1, 4.0)]);
        let mut bb = BlockBuilder::new(&[2, 1], &[2, 1]);
        bb.add(0, 0, &a, -1.0);
        bb.add(1, 0, &b, 1.0);
        bb.add_transpose(0, 1, &b, 1.0);
        let s = bb.build().to_dense();
        assert_eq!(s[(0, 0)], -1.0);
        assert_eq!(s[(1, 1)], -2.0);
        assert_eq!(s[(2, 0)], 3.0);
        assert_eq!(s[(2, 1)], 4.0);
        assert_eq!(s[(0, 2)], 3.0);
        assert_eq!(s[(1, 2)], 4.0);
    }
}
