//! Global finite element spaces.
//!
//! DOFs are laid out entity-by-entity: vertex DOFs first, then edge DOFs
//! grouped per global edge, then per-triangle interior DOFs.  Edge DOFs are
//! single-valued across elements because they are defined with respect to
//! the global low->high edge orientation: Lagrange edge nodes are slotted
//! along that direction, and Raviart-Thomas edge moments carry the sign
//! (-1)^(j+1) on triangles whose CCW traversal opposes it.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::refelem::{DofLoc, Family, ReferenceElement};

/// Essential-constraint specification for a space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Constraint {
    None,
    /// Zero trace on the boundary (Lagrange).
    ZeroTrace,
    /// Zero normal trace on the boundary (Raviart-Thomas).
    ZeroNormalTrace,
    /// Zero mean, enforced by a multiplier row in assembled systems (DG).
    MeanZero,
}

/// A global finite element space over a mesh.
#[derive(Clone, Debug)]
pub struct FeSpace {
    pub mesh: Arc<Mesh>,
    pub elem: ReferenceElement,
    pub constraint: Constraint,
    /// Total DOF count before constraint elimination.
    pub ndofs: usize,
    /// Per triangle: (global DOF, orientation sign) in local DOF order.
    pub cell_dofs: Vec<Vec<(usize, f64)>>,
    /// Constrained (eliminated) DOF indices, sorted.
    pub constrained: Vec<usize>,
    /// Map full DOF index -> free (reduced) index.
    pub free_of_full: Vec<Option<usize>>,
    pub n_free: usize,
}

impl FeSpace {
    pub fn new(
        mesh: Arc<Mesh>,
        family: Family,
        degree: usize,
        constraint: Constraint,
    ) -> Result<FeSpace> {
        match (family, constraint) {
            (Family::Lagrange, Constraint::None | Constraint::ZeroTrace) => {}
            (Family::RaviartThomas, Constraint::None | Constraint::ZeroNormalTrace) => {}
            (Family::Discontinuous, Constraint::None | Constraint::MeanZero) => {}
            _ => {
                return Err(Error::IncompatibleConstraint(format!(
                    "{:?} constraint on a {:?} space",
                    constraint, family
                )))
            }
        }
        let elem = match family {
            Family::Lagrange => ReferenceElement::lagrange(degree)?,
            Family::RaviartThomas => ReferenceElement::raviart_thomas(degree)?,
            Family::Discontinuous => ReferenceElement::discontinuous(degree)?,
        };
        let (nv, ne, nt) = elem.entity_dofs();
        let v_total = nv * mesh.num_vertices();
        let e_total = ne * mesh.num_edges();
        let ndofs = v_total + e_total + nt * mesh.num_triangles();

        let mut cell_dofs = Vec::with_capacity(mesh.num_triangles());
        for t in 0..mesh.num_triangles() {
            let tri = mesh.triangles[t];
            let dofs = elem
                .dof_locs
                .iter()
                .map(|&loc| match loc {
                    DofLoc::Vertex(lv) => (tri[lv] * nv, 1.0),
                    DofLoc::Edge(le, k) => {
                        let (edge, aligned) = mesh.tri_edges[t][le];
                        match family {
                            Family::Lagrange => {
                                let slot = if aligned { k } else { ne - 1 - k };
                                (v_total + edge * ne + slot, 1.0)
                            }
                            Family::RaviartThomas => {
                                let sign = if aligned {
                                    1.0
                                } else if k % 2 == 0 {
                                    -1.0
                                } else {
                                    1.0
                                };
                                (v_total + edge * ne + k, sign)
                            }
                            Family::Discontinuous => unreachable!(),
                        }
                    }
                    DofLoc::Interior(i) => (v_total + e_total + t * nt + i, 1.0),
                })
                .collect();
            cell_dofs.push(dofs);
        }

        let mut is_constrained = vec![false; ndofs];
        match constraint {
            Constraint::ZeroTrace => {
                for v in 0..mesh.num_vertices() {
                    if mesh.boundary_vertex[v] {
                        is_constrained[v] = true;
                    }
                }
                for e in 0..mesh.num_edges() {
                    if mesh.boundary_edge[e] {
                        for k in 0..ne {
                            is_constrained[v_total + e * ne + k] = true;
                        }
                    }
                }
            }
            Constraint::ZeroNormalTrace => {
                for e in 0..mesh.num_edges() {
                    if mesh.boundary_edge[e] {
                        for k in 0..ne {
                            is_constrained[v_total + e * ne + k] = true;
                        }
                    }
                }
            }
            Constraint::None | Constraint::MeanZero => {}
        }
        let constrained: Vec<usize> = (0..ndofs).filter(|&i| is_constrained[i]).collect();
        let mut free_of_full = vec![None; ndofs];
        let mut n_free = 0;
        for (i, slot) in free_of_full.iter_mut().enumerate() {
            if !is_constrained[i] {
                *slot = Some(n_free);
                n_free += 1;
            }
        }

        Ok(FeSpace {
            mesh,
            elem,
            constraint,
            ndofs,
            cell_dofs,
            constrained,
            free_of_full,
            n_free,
        })
    }

    pub fn family(&self) -> Family {
        self.elem.family
    }

    pub fn degree(&self) -> usize {
        self.elem.degree
    }

    /// Number of unconstrained DOFs; the dimension used in linear systems.
    /// A MeanZero space reports its full count minus one (the constraint is
    /// enforced by a multiplier, not by elimination).
    pub fn dim(&self) -> usize {
        match self.constraint {
            Constraint::MeanZero => self.ndofs - 1,
            _ => self.n_free,
        }
    }

    pub fn zero_function(self: &Arc<Self>) -> FeFunction {
        FeFunction {
            space: Arc::clone(self),
            coeffs: vec![0.0; self.ndofs],
        }
    }

    /// Scatter a reduced (free-DOF) vector into a full coefficient vector;
    /// constrained DOFs are zero (all essential conditions are homogeneous).
    pub fn function_from_reduced(self: &Arc<Self>, reduced: &[f64]) -> FeFunction {
        assert_eq!(reduced.len(), self.n_free);
        let mut coeffs = vec![0.0; self.ndofs];
        for (full, slot) in self.free_of_full.iter().enumerate() {
            if let Some(r) = slot {
                coeffs[full] = reduced[*r];
            }
        }
        FeFunction {
            space: Arc::clone(self),
            coeffs,
        }
    }

    /// Nodal/moment interpolation of a scalar function (Lagrange: nodal
    /// values; DG: elementwise L2 projection via the orthogonal basis).
    pub fn interpolate_scalar(self: &Arc<Self>, f: &dyn Fn(f64, f64) -> f64) -> FeFunction {
        assert!(self.elem.is_scalar());
        let mut coeffs = vec![0.0; self.ndofs];
        for t in 0..self.mesh.num_triangles() {
            let map = self.mesh.affine_map(t);
            let pulled = |x: f64, y: f64| {
                let p = map.apply([x, y]);
                f(p[0], p[1])
            };
            let local = self.elem.dofs_scalar(&pulled);
            for (ld, &(g, _)) in local.iter().zip(&self.cell_dofs[t]) {
                coeffs[g] = *ld;
            }
        }
        FeFunction {
            space: Arc::clone(self),
            coeffs,
        }
    }
}

/// A finite element function: a space plus a full coefficient vector.
#[derive(Clone, Debug)]
pub struct FeFunction {
    pub space: Arc<FeSpace>,
    pub coeffs: Vec<f64>,
}

impl FeFunction {
    pub fn from_coeffs(space: Arc<FeSpace>, coeffs: Vec<f64>) -> FeFunction {
        assert_eq!(coeffs.len(), space.ndofs);
        FeFunction { space, coeffs }
    }

    /// Gather the free-DOF part of the coefficient vector.
    pub fn reduced(&self) -> Vec<f64> {
        self.space
            .free_of_full
            .iter()
            .enumerate()
            .filter_map(|(full, slot)| slot.map(|_| self.coeffs[full]))
            .collect()
    }

    pub fn eval_scalar(&self, t: usize, xhat: [f64; 2]) -> f64 {
        let (vals, _) = self.space.elem.tabulate_scalar(&[xhat]);
        self.space.cell_dofs[t]
            .iter()
            .zip(&vals[0])
            .map(|(&(g, s), &b)| self.coeffs[g] * s * b)
            .sum()
    }

    pub fn eval_grad(&self, t: usize, xhat: [f64; 2]) -> [f64; 2] {
        let (_, grads) = self.space.elem.tabulate_scalar(&[xhat]);
        let map = self.space.mesh.affine_map(t);
        let mut g = [0.0, 0.0];
        for (&(gi, s), gb) in self.space.cell_dofs[t].iter().zip(&grads[0]) {
            g[0] += self.coeffs[gi] * s * gb[0];
            g[1] += self.coeffs[gi] * s * gb[1];
        }
        map.grad(g)
    }

    pub fn eval_vector(&self, t: usize, xhat: [f64; 2]) -> [f64; 2] {
        let (vals, _) = self.space.elem.tabulate_vector(&[xhat]);
        let map = self.space.mesh.affine_map(t);
        let mut v = [0.0, 0.0];
        for (&(gi, s), vb) in self.space.cell_dofs[t].iter().zip(&vals[0]) {
            v[0] += self.coeffs[gi] * s * vb[0];
            v[1] += self.coeffs[gi] * s * vb[1];
        }
        map.piola(v)
    }

    pub fn eval_div(&self, t: usize, xhat: [f64; 2]) -> f64 {
        let (_, divs) = self.space.elem.tabulate_vector(&[xhat]);
        let map = self.space.mesh.affine_map(t);
        let d: f64 = self.space.cell_dofs[t]
            .iter()
            .zip(&divs[0])
            .map(|(&(g, s), &b)| self.coeffs[g] * s * b)
            .sum();
        d / map.det
    }

    /// L2 norm of the function, integrated with the given quadrature degree.
    pub fn l2_norm(&self, quad_degree: usize) -> f64 {
        let rule = crate::refelem::quadrature(quad_degree).unwrap();
        let mut acc = 0.0;
        if self.space.elem.is_scalar() {
            let (vals, _) = self.space.elem.tabulate_scalar(&rule.points);
            for t in 0..self.space.mesh.num_triangles() {
                let det = self.space.mesh.affine_map(t).det;
                for (q, row) in vals.iter().enumerate() {
                    let v: f64 = self.space.cell_dofs[t]
                        .iter()
                        .zip(row)
                        .map(|(&(g, s), &b)| self.coeffs[g] * s * b)
                        .sum();
                    acc += rule.weights[q] * det * v * v;
                }
            }
        } else {
            let (vals, _) = self.space.elem.tabulate_vector(&rule.points);
            for t in 0..self.space.mesh.num_triangles() {
                let map = self.space.mesh.affine_map(t);
                for (q, row) in vals.iter().enumerate() {
                    let mut v = [0.0, 0.0];
                    for (&(g, s), vb) in self.space.cell_dofs[t].iter().zip(row) {
                        v[0] += self.coeffs[g] * s * vb[0];
                        v[1] += self.coeffs[g] * s * vb[1];
                    }
                    let v = map.piola(v);
                    acc += rule.weights[q] * map.det * (v[0] * v[0] + v[1] * v[1]);
                }
            }
        }
        acc.sqrt()
    }
}
