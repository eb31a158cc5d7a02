//! Reference-triangle bases and quadrature.
//!
//! The reference triangle has vertices (0,0), (1,0), (0,1).  Local edge `l`
//! runs from vertex `l` to vertex `(l+1) % 3`, matching the mesh convention,
//! and its unnormalized outward normal is the -90 degree rotation of the
//! edge vector (length factor included).
//!
//! Degree convention: Raviart-Thomas of degree `r` is the
//! family whose edge normal traces are polynomials of degree `r - 1`, so
//! `r = 1` is the lowest-order element with one degree of freedom per edge.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Bivariate polynomial in monomial form.
#[derive(Clone, Debug, Default)]
pub(crate) struct Poly2 {
    /// (x exponent, y exponent, coefficient)
    pub terms: Vec<(u32, u32, f64)>,
}

impl Poly2 {
    pub fn zero() -> Self {
        Poly2 { terms: Vec::new() }
    }

    pub fn monomial(a: u32, b: u32) -> Self {
        Poly2 {
            terms: vec![(a, b, 1.0)],
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(a, b, c)| c * x.powi(a as i32) * y.powi(b as i32))
            .sum()
    }

    pub fn dx(&self) -> Poly2 {
        Poly2 {
            terms: self
                .terms
                .iter()
                .filter(|&&(a, _, _)| a > 0)
                .map(|&(a, b, c)| (a - 1, b, c * a as f64))
                .collect(),
        }
    }

    pub fn dy(&self) -> Poly2 {
        Poly2 {
            terms: self
                .terms
                .iter()
                .filter(|&&(_, b, _)| b > 0)
                .map(|&(a, b, c)| (a, b - 1, c * b as f64))
                .collect(),
        }
    }

    pub fn add_scaled(&mut self, other: &Poly2, s: f64) {
        for &(a, b, c) in &other.terms {
            if let Some(t) = self.terms.iter_mut().find(|t| t.0 == a && t.1 == b) {
                t.2 += s * c;
            } else {
                self.terms.push((a, b, s * c));
            }
        }
    }

    /// Exact integral over the reference triangle via
    /// int x^a y^b = a! b! / (a+b+2)!.
    pub fn integrate_ref(&self) -> f64 {
        self.terms
            .iter()
            .map(|&(a, b, c)| c * monomial_integral(a, b))
            .sum()
    }

    pub fn mul(&self, other: &Poly2) -> Poly2 {
        let mut out = Poly2::zero();
        for &(a1, b1, c1) in &self.terms {
            for &(a2, b2, c2) in &other.terms {
                out.add_scaled(&Poly2::monomial(a1 + a2, b1 + b2), c1 * c2);
            }
        }
        out
    }
}

/// a! b! / (a+b+2)! as f64; exact integral of x^a y^b over the reference
/// triangle.
pub fn monomial_integral(a: u32, b: u32) -> f64 {
    // Compute a! b! / (a+b+2)! without large intermediates.
    let mut val = 1.0;
    // (a+b+2)! / b!  = (b+1)(b+2)...(a+b+2); divide a! by that product.
    let mut num = 1.0;
    for k in 1..=a {
        num *= k as f64;
    }
    let mut den = 1.0;
    for k in (b + 1)..=(a + b + 2) {
        den *= k as f64;
    }
    val *= num / den;
    val
}

/// Nodes and weights of the m-point Gauss-Legendre rule on [0,1].
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for k in 0..m {
        // Initial guess, then Newton on P_m.
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (m as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_deriv(m, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_and_deriv(m, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[k] = 0.5 * (1.0 - x); // map to [0,1]; order ascending
        weights[k] = 0.5 * w;
    }
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

fn legendre_and_deriv(m: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if m == 0 {
        return (1.0, 0.0);
    }
    for n in 1..m {
        let p2 = ((2 * n + 1) as f64 * x * p1 - n as f64 * p0) / (n + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Shifted Legendre polynomial L_j on [0,1].
pub fn shifted_legendre(j: usize, t: f64) -> f64 {
    let x = 2.0 * t - 1.0;
    let (mut p0, mut p1) = (1.0, x);
    match j {
        0 => 1.0,
        1 => x,
        _ => {
            for n in 1..j {
                let p2 = ((2 * n + 1) as f64 * x * p1 - n as f64 * p0) / (n + 1) as f64;
                p0 = p1;
                p1 = p2;
            }
            p1
        }
    }
}

/// Quadrature rule on the reference triangle.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    /// Every monomial of total degree <= `exactness` is integrated exactly.
    pub exactness: usize,
}

/// Conical-product rule exact to degree `d`; all weights positive.
pub fn quadrature(d: usize) -> Result<QuadratureRule> {
    if !(1..=20).contains(&d) {
        return Err(Error::UnsupportedElement(format!(
            "quadrature degree {} outside 1..=20",
            d
        )));
    }
    // Map (u,v) in [0,1]^2 to (u, v(1-u)); Jacobian (1-u) raises the
    // u-degree of the integrand by one.
    let m = (d + 2).div_ceil(2);
    let (nu, wu) = gauss_legendre(m);
    let (nv, wv) = gauss_legendre(m);
    let mut points = Vec::with_capacity(m * m);
    let mut weights = Vec::with_capacity(m * m);
    for (i, &u) in nu.iter().enumerate() {
        for (j, &v) in nv.iter().enumerate() {
            points.push([u, v * (1.0 - u)]);
            weights.push(wu[i] * wv[j] * (1.0 - u));
        }
    }
    Ok(QuadratureRule {
        points,
        weights,
        exactness: d,
    })
}

/// Element family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Lagrange,
    RaviartThomas,
    Discontinuous,
}

/// Which mesh entity a local DOF is attached to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DofLoc {
    Vertex(usize),
    /// (local edge, moment/node order along the local direction)
    Edge(usize, usize),
    Interior(usize),
}

/// Tabulated basis on the reference triangle.
#[derive(Clone, Debug)]
pub struct ReferenceElement {
    pub family: Family,
    /// Degree r for Lagrange/RT (see module docs); polynomial degree k for DG.
    pub degree: usize,
    pub ndofs: usize,
    pub dof_locs: Vec<DofLoc>,
    /// Scalar families: one polynomial per basis function.
    scalar_basis: Vec<Poly2>,
    /// RT: component polynomials and divergence per basis function.
    vector_basis: Vec<[Poly2; 2]>,
    vector_div: Vec<Poly2>,
}

/// Reference vertices and the local edge convention.
pub const REF_VERTICES: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// (tail, head) local vertices of each local edge.
pub const EDGE_VERTICES: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 0)];

/// Unnormalized outward normal of each reference edge (length included).
pub const EDGE_NORMALS: [[f64; 2]; 3] = [[0.0, -1.0], [1.0, 1.0], [-1.0, 0.0]];

impl ReferenceElement {
    pub fn lagrange(r: usize) -> Result<Self> {
        if !(1..=4).contains(&r) {
            return Err(Error::UnsupportedElement(format!(
                "Lagrange degree {} outside 1..=4",
                r
            )));
        }
        let (nodes, locs) = lagrange_nodes(r);
        let monos = monomials_up_to(r as u32);
        let n = nodes.len();
        debug_assert_eq!(n, monos.len());
        let v = DMatrix::from_fn(n, n, |i, j| monos[j].eval(nodes[i][0], nodes[i][1]));
        let inv = v
            .try_inverse()
            .ok_or_else(|| Error::UnsupportedElement("singular Lagrange Vandermonde".into()))?;
        let mut basis = Vec::with_capacity(n);
        for j in 0..n {
            let mut p = Poly2::zero();
            for (k, mono) in monos.iter().enumerate() {
                p.add_scaled(mono, inv[(k, j)]);
            }
            basis.push(p);
        }
        Ok(ReferenceElement {
            family: Family::Lagrange,
            degree: r,
            ndofs: n,
            dof_locs: locs,
            scalar_basis: basis,
            vector_basis: Vec::new(),
            vector_div: Vec::new(),
        })
    }

    pub fn raviart_thomas(r: usize) -> Result<Self> {
        if !(1..=4).contains(&r) {
            return Err(Error::UnsupportedElement(format!(
                "Raviart-Thomas degree {} outside 1..=4",
                r
            )));
        }
        // Local space P_{r-1}^2 + (x,y) * homogeneous P_{r-1}.
        let mut span: Vec<[Poly2; 2]> = Vec::new();
        for mono in monomials_up_to(r as u32 - 1) {
            span.push([mono.clone(), Poly2::zero()]);
            span.push([Poly2::zero(), mono]);
        }
        for a in (0..r as u32).rev() {
            let b = r as u32 - 1 - a;
            let m = Poly2::monomial(a, b);
            span.push([
                Poly2::monomial(a + 1, b),
                {
                    let mut p = Poly2::zero();
                    p.add_scaled(&Poly2::monomial(a, b + 1), 1.0);
                    p
                },
            ]);
            let _ = m;
        }
        let n = r * (r + 2);
        debug_assert_eq!(span.len(), n);

        // DOF functionals: r Legendre moments of the normal trace per edge,
        // then interior moments against monomial vector fields of P_{r-2}.
        let mut locs = Vec::with_capacity(n);
        for e in 0..3 {
            for j in 0..r {
                locs.push(DofLoc::Edge(e, j));
            }
        }
        let n_int = r * (r - 1);
        for i in 0..n_int {
            locs.push(DofLoc::Interior(i));
        }

        let (gl_n, gl_w) = gauss_legendre(r + 2);
        let tri_rule = quadrature((2 * r).max(1))?;
        let int_monos = if r >= 2 {
            monomials_up_to(r as u32 - 2)
        } else {
            Vec::new()
        };

        let apply_dof = |loc: DofLoc, field: &[Poly2; 2]| -> f64 {
            match loc {
                DofLoc::Edge(e, j) => {
                    let (ta, tb) = EDGE_VERTICES[e];
                    let a = REF_VERTICES[ta];
                    let b = REF_VERTICES[tb];
                    let nrm = EDGE_NORMALS[e];
                    let mut acc = 0.0;
                    for (k, &t) in gl_n.iter().enumerate() {
                        let x = a[0] + t * (b[0] - a[0]);
                        let y = a[1] + t * (b[1] - a[1]);
                        let vn = field[0].eval(x, y) * nrm[0] + field[1].eval(x, y) * nrm[1];
                        acc += gl_w[k] * vn * shifted_legendre(j, t);
                    }
                    acc
                }
                DofLoc::Interior(i) => {
                    let mono = &int_monos[i / 2];
                    let comp = i % 2;
                    let mut acc = 0.0;
                    for (k, p) in tri_rule.points.iter().enumerate() {
                        acc += tri_rule.weights[k]
                            * field[comp].eval(p[0], p[1])
                            * mono.eval(p[0], p[1]);
                    }
                    acc
                }
                DofLoc::Vertex(_) => unreachable!(),
            }
        };

        let d = DMatrix::from_fn(n, n, |i, j| apply_dof(locs[i], &span[j]));
        let inv = d
            .try_inverse()
            .ok_or_else(|| Error::UnsupportedElement("singular RT DOF matrix".into()))?;
        let mut basis = Vec::with_capacity(n);
        let mut divs = Vec::with_capacity(n);
        for j in 0..n {
            let mut fx = Poly2::zero();
            let mut fy = Poly2::zero();
            for (k, s) in span.iter().enumerate() {
                fx.add_scaled(&s[0], inv[(k, j)]);
                fy.add_scaled(&s[1], inv[(k, j)]);
            }
            let mut div = fx.dx();
            div.add_scaled(&fy.dy(), 1.0);
            basis.push([fx, fy]);
            divs.push(div);
        }
        Ok(ReferenceElement {
            family: Family::RaviartThomas,
            degree: r,
            ndofs: n,
            dof_locs: locs,
            scalar_basis: Vec::new(),
            vector_basis: basis,
            vector_div: divs,
        })
    }

    /// Discontinuous P_k; basis orthogonal in L2 of the reference triangle,
    /// first function identically 1.
    pub fn discontinuous(k: usize) -> Result<Self> {
        if k > 3 {
            return Err(Error::UnsupportedElement(format!(
                "discontinuous degree {} outside 0..=3",
                k
            )));
        }
        let monos = monomials_up_to(k as u32);
        let mut basis: Vec<Poly2> = Vec::with_capacity(monos.len());
        for mono in &monos {
            let mut p = mono.clone();
            for q in &basis {
                let num = p.mul(q).integrate_ref();
                let den = q.mul(q).integrate_ref();
                p.add_scaled(q, -num / den);
            }
            basis.push(p);
        }
        let n = basis.len();
        Ok(ReferenceElement {
            family: Family::Discontinuous,
            degree: k,
            ndofs: n,
            dof_locs: (0..n).map(DofLoc::Interior).collect(),
            scalar_basis: basis,
            vector_basis: Vec::new(),
            vector_div: Vec::new(),
        })
    }

    pub fn is_scalar(&self) -> bool {
        self.family != Family::RaviartThomas
    }

    /// Values and gradients of a scalar basis: `values[pt][basis]`.
    #[allow(clippy::type_complexity)]
    pub fn tabulate_scalar(&self, pts: &[[f64; 2]]) -> (Vec<Vec<f64>>, Vec<Vec<[f64; 2]>>) {
        assert!(self.is_scalar());
        let mut vals = Vec::with_capacity(pts.len());
        let mut grads = Vec::with_capacity(pts.len());
        let dxs: Vec<Poly2> = self.scalar_basis.iter().map(Poly2::dx).collect();
        let dys: Vec<Poly2> = self.scalar_basis.iter().map(Poly2::dy).collect();
        for p in pts {
            vals.push(
                self.scalar_basis
                    .iter()
                    .map(|b| b.eval(p[0], p[1]))
                    .collect(),
            );
            grads.push(
                dxs.iter()
                    .zip(&dys)
                    .map(|(dx, dy)| [dx.eval(p[0], p[1]), dy.eval(p[0], p[1])])
                    .collect(),
            );
        }
        (vals, grads)
    }

    /// Vector values and divergences of the RT basis: `values[pt][basis]`.
    #[allow(clippy::type_complexity)]
    pub fn tabulate_vector(&self, pts: &[[f64; 2]]) -> (Vec<Vec<[f64; 2]>>, Vec<Vec<f64>>) {
        assert_eq!(self.family, Family::RaviartThomas);
        let mut vals = Vec::with_capacity(pts.len());
        let mut divs = Vec::with_capacity(pts.len());
        for p in pts {
            vals.push(
                self.vector_basis
                    .iter()
                    .map(|b| [b[0].eval(p[0], p[1]), b[1].eval(p[0], p[1])])
                    .collect(),
            );
            divs.push(self.vector_div.iter().map(|d| d.eval(p[0], p[1])).collect());
        }
        (vals, divs)
    }

    /// Apply this element's DOF functionals to an arbitrary scalar function
    /// (Lagrange/DG).
    pub fn dofs_scalar(&self, f: &dyn Fn(f64, f64) -> f64) -> Vec<f64> {
        match self.family {
            Family::Lagrange => {
                let (nodes, _) = lagrange_nodes(self.degree);
                nodes.iter().map(|p| f(p[0], p[1])).collect()
            }
            Family::Discontinuous => {
                // Generous degree: the functional is also applied to smooth
                // non-polynomial data, where the quadrature error must stay
                // near machine precision on coarse meshes.
                let rule = quadrature((2 * self.degree + 14).min(20)).unwrap();
                self.scalar_basis
                    .iter()
                    .map(|q| {
                        let num: f64 = rule
                            .points
                            .iter()
                            .zip(&rule.weights)
                            .map(|(p, w)| w * f(p[0], p[1]) * q.eval(p[0], p[1]))
                            .sum();
                        num / q.mul(q).integrate_ref()
                    })
                    .collect()
            }
            Family::RaviartThomas => panic!("scalar DOFs on a vector element"),
        }
    }

    /// Apply this element's DOF functionals to an arbitrary vector function
    /// (RT only).
    pub fn dofs_vector(&self, f: &dyn Fn(f64, f64) -> [f64; 2]) -> Vec<f64> {
        assert_eq!(self.family, Family::RaviartThomas);
        let r = self.degree;
        let (gl_n, gl_w) = gauss_legendre(r + 8);
        let tri_rule = quadrature((2 * r + 14).min(20)).unwrap();
        let int_monos = if r >= 2 {
            monomials_up_to(r as u32 - 2)
        } else {
            Vec::new()
        };
        self.dof_locs
            .iter()
            .map(|&loc| match loc {
                DofLoc::Edge(e, j) => {
                    let (ta, tb) = EDGE_VERTICES[e];
                    let a = REF_VERTICES[ta];
                    let b = REF_VERTICES[tb];
                    let nrm = EDGE_NORMALS[e];
                    gl_n.iter()
                        .zip(&gl_w)
                        .map(|(&t, &w)| {
                            let x = a[0] + t * (b[0] - a[0]);
                            let y = a[1] + t * (b[1] - a[1]);
                            let v = f(x, y);
                            w * (v[0] * nrm[0] + v[1] * nrm[1]) * shifted_legendre(j, t)
                        })
                        .sum()
                }
                DofLoc::Interior(i) => {
                    let mono = &int_monos[i / 2];
                    let comp = i % 2;
                    tri_rule
                        .points
                        .iter()
                        .zip(&tri_rule.weights)
                        .map(|(p, &w)| w * f(p[0], p[1])[comp] * mono.eval(p[0], p[1]))
                        .sum()
                }
                DofLoc::Vertex(_) => unreachable!(),
            })
            .collect()
    }

    /// Counts of DOFs per mesh entity: (per vertex, per edge, per triangle).
    pub fn entity_dofs(&self) -> (usize, usize, usize) {
        match self.family {
            Family::Lagrange => (1, self.degree - 1, interior_count(self.degree)),
            Family::RaviartThomas => (0, self.degree, self.degree * (self.degree - 1)),
            Family::Discontinuous => (0, 0, self.ndofs),
        }
    }
}

fn interior_count(r: usize) -> usize {
    // Strict interior lattice points of the degree-r principal lattice.
    if r < 3 {
        0
    } else {
        (r - 1) * (r - 2) / 2
    }
}

/// Spec-level entry points mirroring the element evaluators.
#[allow(clippy::type_complexity)]
pub fn eval_lagrange(
    r: usize,
    pts: &[[f64; 2]],
) -> Result<(Vec<Vec<f64>>, Vec<Vec<[f64; 2]>>)> {
    Ok(ReferenceElement::lagrange(r)?.tabulate_scalar(pts))
}

#[allow(clippy::type_complexity)]
pub fn eval_rt(r: usize, pts: &[[f64; 2]]) -> Result<(Vec<Vec<[f64; 2]>>, Vec<Vec<f64>>)> {
    Ok(ReferenceElement::raviart_thomas(r)?.tabulate_vector(pts))
}

pub fn eval_dg(k: usize, pts: &[[f64; 2]]) -> Result<Vec<Vec<f64>>> {
    Ok(ReferenceElement::discontinuous(k)?.tabulate_scalar(pts).0)
}

/// Monomials x^a y^b, a+b <= d, graded order starting with 1, x, y, ...
fn monomials_up_to(d: u32) -> Vec<Poly2> {
    let mut out = Vec::new();
    for total in 0..=d {
        for a in (0..=total).rev() {
            out.push(Poly2::monomial(a, total - a));
        }
    }
    out
}

/// Lagrange nodes of degree r with their entity attachment, ordered
/// vertices, then edges (nodes along the local direction), then interior.
fn lagrange_nodes(r: usize) -> (Vec<[f64; 2]>, Vec<DofLoc>) {
    let mut nodes = Vec::new();
    let mut locs = Vec::new();
    for (v, p) in REF_VERTICES.iter().enumerate() {
        nodes.push(*p);
        locs.push(DofLoc::Vertex(v));
    }
    for (e, &(ta, tb)) in EDGE_VERTICES.iter().enumerate() {
        let a = REF_VERTICES[ta];
        let b = REF_VERTICES[tb];
        for k in 1..r {
            let t = k as f64 / r as f64;
            nodes.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
            locs.push(DofLoc::Edge(e, k - 1));
        }
    }
    let mut idx = 0;
    for i in 1..r {
        for j in 1..r {
            if i + j <= r.saturating_sub(1) {
                nodes.push([i as f64 / r as f64, j as f64 / r as f64]);
                locs.push(DofLoc::Interior(idx));
                idx += 1;
            }
        }
    }
    (nodes, locs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_points() -> Vec<[f64; 2]> {
        vec![
            [0.2, 0.3],
            [0.1, 0.05],
            [0.7, 0.1],
            [0.25, 0.6],
            [1.0 / 3.0, 1.0 / 3.0],
        ]
    }

    #[test]
    fn quadrature_centroid_rule() {
        let q = quadrature(1).unwrap();
        let total: f64 = q.weights.iter().sum();
        assert!((total - 0.5).abs() < 1e-15);
    }

    #[test]
    fn quadrature_exactness_sweep() {
        for d in 1..=20 {
            let q = quadrature(d).unwrap();
            for a in 0..=d as u32 {
                for b in 0..=(d as u32 - a) {
                    let approx: f64 = q
                        .points
                        .iter()
                        .zip(&q.weights)
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                        .sum();
                    let exact = monomial_integral(a, b);
                    assert!(
                        (approx - exact).abs() < 1e-14,
                        "d={} x^{} y^{}: {} vs {}",
                        d,
                        a,
                        b,
                        approx,
                        exact
                    );
                }
            }
        }
    }

    #[test]
    fn quadrature_degree_four_case() {
        let q = quadrature(4).unwrap();
        let approx: f64 = q
            .points
            .iter()
            .zip(&q.weights)
            .map(|(p, w)| w * p[0] * p[0] * p[1])
            .sum();
        assert!((approx - 1.0 / 60.0).abs() < 1e-15);
    }

    #[test]
    fn quadrature_rejects_out_of_range() {
        assert!(quadrature(0).is_err());
        assert!(quadrature(21).is_err());
    }

    #[test]
    fn lagrange_dimensions_and_duality() {
        for r in 1..=4 {
            let el = ReferenceElement::lagrange(r).unwrap();
            assert_eq!(el.ndofs, (r + 1) * (r + 2) / 2);
            let (nodes, _) = lagrange_nodes(r);
            let (vals, _) = el.tabulate_scalar(&nodes);
            for (i, row) in vals.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((v - expect).abs() < 1e-12, "r={} ({},{})", r, i, j);
                }
            }
        }
    }

    #[test]
    fn lagrange_partition_of_unity() {
        for r in 1..=4 {
            let el = ReferenceElement::lagrange(r).unwrap();
            let (vals, grads) = el.tabulate_scalar(&sample_points());
            for (row, grow) in vals.iter().zip(&grads) {
                let s: f64 = row.iter().sum();
                assert!((s - 1.0).abs() < 1e-13);
                let gx: f64 = grow.iter().map(|g| g[0]).sum();
                let gy: f64 = grow.iter().map(|g| g[1]).sum();
                assert!(gx.abs() < 1e-12 && gy.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lagrange_vertex_values_r1() {
        let el = ReferenceElement::lagrange(1).unwrap();
        let (vals, _) = el.tabulate_scalar(&[[0.0, 0.0]]);
        assert_eq!(vals[0].len(), 3);
        assert!((vals[0][0] - 1.0).abs() < 1e-14);
        assert!(vals[0][1].abs() < 1e-14 && vals[0][2].abs() < 1e-14);
    }

    #[test]
    fn lagrange_rejects_degree_five() {
        assert!(ReferenceElement::lagrange(5).is_err());
        assert!(ReferenceElement::raviart_thomas(5).is_err());
    }

    #[test]
    fn rt_dimension_and_duality() {
        for r in 1..=4 {
            let el = ReferenceElement::raviart_thomas(r).unwrap();
            assert_eq!(el.ndofs, r * (r + 2));
            // Duality against the element's own basis functions.
            for j in 0..el.ndofs {
                let field = el.vector_basis[j].clone();
                let dofs = el.dofs_vector(&move |x, y| {
                    [field[0].eval(x, y), field[1].eval(x, y)]
                });
                for (i, &d) in dofs.iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((d - expect).abs() < 1e-10, "r={} ({},{}): {}", r, i, j, d);
                }
            }
        }
    }

    #[test]
    fn rt_lowest_order_counts() {
        let el = ReferenceElement::raviart_thomas(1).unwrap();
        assert_eq!(el.ndofs, 3);
        let el = ReferenceElement::raviart_thomas(2).unwrap();
        assert_eq!(el.ndofs, 8);
        let (_, per_edge, interior) = el.entity_dofs();
        assert_eq!(per_edge, 2);
        assert_eq!(interior, 2);
    }

    #[test]
    fn rt_reproduces_constant_field() {
        for r in 1..=4 {
            let el = ReferenceElement::raviart_thomas(r).unwrap();
            let coeffs = el.dofs_vector(&|_, _| [1.0, 0.0]);
            let (vals, _) = el.tabulate_vector(&sample_points());
            for row in &vals {
                let mut v = [0.0, 0.0];
                for (c, b) in coeffs.iter().zip(row) {
                    v[0] += c * b[0];
                    v[1] += c * b[1];
                }
                assert!((v[0] - 1.0).abs() < 1e-12 && v[1].abs() < 1e-12, "r={}", r);
            }
        }
    }

    #[test]
    fn rt_divergence_lands_in_dg() {
        // Interpolate a P_r^2 field; its divergence must be degree r-1, and
        // the interpolant's divergence must match the L2 projection of it.
        for r in 1..=4 {
            let el = ReferenceElement::raviart_thomas(r).unwrap();
            for d in &el.vector_div {
                for &(a, b, c) in &d.terms {
                    assert!(
                        (a + b) as usize <= r - 1 || c.abs() < 1e-10,
                        "r={} div term x^{} y^{} coeff {}",
                        r,
                        a,
                        b,
                        c
                    );
                }
            }
        }
    }

    #[test]
    fn dg_basis_properties() {
        let el = ReferenceElement::discontinuous(0).unwrap();
        assert_eq!(el.ndofs, 1);
        let el = ReferenceElement::discontinuous(1).unwrap();
        assert_eq!(el.ndofs, 3);
        // First basis function is the constant 1.
        let (vals, _) = el.tabulate_scalar(&sample_points());
        for row in &vals {
            assert!((row[0] - 1.0).abs() < 1e-14);
        }
        // x is representable with zero residual.
        let coeffs = el.dofs_scalar(&|x, _| x);
        for (p, row) in sample_points().iter().zip(&vals) {
            let v: f64 = coeffs.iter().zip(row).map(|(c, b)| c * b).sum();
            assert!((v - p[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn dg_duality() {
        for k in 0..=3 {
            let el = ReferenceElement::discontinuous(k).unwrap();
            for j in 0..el.ndofs {
                let basis = el.scalar_basis[j].clone();
                let dofs = el.dofs_scalar(&move |x, y| basis.eval(x, y));
                for (i, &d) in dofs.iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((d - expect).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (n, w) = gauss_legendre(5);
        for d in 0..=9 {
            let approx: f64 = n.iter().zip(&w).map(|(&x, &wk)| wk * x.powi(d)).sum();
            let exact = 1.0 / (d as f64 + 1.0);
            assert!((approx - exact).abs() < 1e-14);
        }
    }
}
