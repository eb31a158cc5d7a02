//! Discrete solvers: vector Laplacian under three boundary-condition modes,
//! the Ciarlet-Raviart biharmonic system, and vorticity-velocity-pressure
//! Stokes.  Also the projection and discrete-Hodge operators used by the
//! structural verification suites.

use std::sync::Arc;

use crate::assembly::{
    assemble_curl_coupling, assemble_curlcurl, assemble_div_pressure, assemble_divdiv,
    assemble_load_curl, assemble_load_scalar, assemble_load_vector, assemble_mass, BlockBuilder,
};
use crate::error::Result;
use crate::linalg::sparse_symmetric_solve;
use crate::mesh::Mesh;
use crate::refelem::{quadrature, Family};
use crate::space::{Constraint, FeFunction, FeSpace};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BcMode {
    Electric,
    Magnetic,
    Dirichlet,
}

#[derive(Debug)]
pub struct VectorLaplaceSolution {
    pub sigma_h: FeFunction,
    pub u_h: FeFunction,
    pub bc_mode: BcMode,
}

#[derive(Debug)]
pub struct StokesSolution {
    pub sigma_h: FeFunction,
    pub u_h: FeFunction,
    pub p_h: FeFunction,
}

/// Decomposition v = curl rho_h + grad_h phi_h in the constrained complex.
#[derive(Debug)]
pub struct HodgeDecomposition {
    pub rho: FeFunction,
    pub phi: FeFunction,
    /// curl rho_h expressed in V0_h coefficients.
    pub curl_part: FeFunction,
    /// grad_h phi_h expressed in V0_h coefficients.
    pub grad_part: FeFunction,
}

fn quad_matrix(r: usize) -> usize {
    2 * r + 4
}

fn quad_load(r: usize) -> usize {
    (2 * r + 6).min(20)
}

/// The sigma/u space pair for a vector Laplacian BC mode.
pub fn vlap_spaces(
    mesh: &Arc<Mesh>,
    r: usize,
    bc: BcMode,
) -> Result<(Arc<FeSpace>, Arc<FeSpace>)> {
    let (sc, vc) = match bc {
        BcMode::Electric => (Constraint::None, Constraint::None),
        BcMode::Magnetic => (Constraint::ZeroTrace, Constraint::ZeroNormalTrace),
        BcMode::Dirichlet => (Constraint::None, Constraint::ZeroNormalTrace),
    };
    let sigma = Arc::new(FeSpace::new(mesh.clone(), Family::Lagrange, r, sc)?);
    let v = Arc::new(FeSpace::new(mesh.clone(), Family::RaviartThomas, r, vc)?);
    Ok((sigma, v))
}

/// Solve the mixed vector Laplacian: find sigma_h, u_h with
/// (sigma, tau) - (u, curl tau) = 0 and (curl sigma, v) + (div u, div v) = (f, v).
pub fn solve_vector_laplacian(
    mesh: &Arc<Mesh>,
    r: usize,
    bc: BcMode,
    f: &dyn Fn(f64, f64) -> [f64; 2],
) -> Result<VectorLaplaceSolution> {
    let (sigma_sp, v_sp) = vlap_spaces(mesh, r, bc)?;
    let qm = quad_matrix(r);
    let m = assemble_mass(&sigma_sp, qm)?;
    let c = assemble_curl_coupling(&v_sp, &sigma_sp, qm)?;
    let d = assemble_divdiv(&v_sp, qm)?;
    let (ns, nv) = (sigma_sp.n_free, v_sp.n_free);

    let mut bb = BlockBuilder::new(&[ns, nv], &[ns, nv]);
    bb.add(0, 0, &m, -1.0);
    bb.add_transpose(0, 1, &c, 1.0);
    bb.add(1, 0, &c, 1.0);
    bb.add(1, 1, &d, 1.0);
    let a = bb.build();

    let mut rhs = vec![0.0; ns + nv];
    let load = assemble_load_vector(&v_sp, f, quad_load(r))?;
    rhs[ns..].copy_from_slice(&load);

    let x = sparse_symmetric_solve(&a, &rhs)?;
    Ok(VectorLaplaceSolution {
        sigma_h: sigma_sp.function_from_reduced(&x[..ns]),
        u_h: v_sp.function_from_reduced(&x[ns..]),
        bc_mode: bc,
    })
}

/// Ciarlet-Raviart biharmonic: find sigma_h in Sigma_h, U_h in Sigma0_h with
/// (sigma, tau) - (curl U, curl tau) = 0 and (curl sigma, curl V) = (g, V).
pub fn solve_biharmonic_cr(
    mesh: &Arc<Mesh>,
    r: usize,
    g: &dyn Fn(f64, f64) -> f64,
) -> Result<(FeFunction, FeFunction)> {
    let sigma_sp = Arc::new(FeSpace::new(mesh.clone(), Family::Lagrange, r, Constraint::None)?);
    let u_sp = Arc::new(FeSpace::new(
        mesh.clone(),
        Family::Lagrange,
        r,
        Constraint::ZeroTrace,
    )?);
    let qm = quad_matrix(r);
    let m = assemble_mass(&sigma_sp, qm)?;
    let k = assemble_curlcurl(&u_sp, &sigma_sp, qm)?;
    let (ns, nu) = (sigma_sp.n_free, u_sp.n_free);

    let mut bb = BlockBuilder::new(&[ns, nu], &[ns, nu]);
    bb.add(0, 0, &m, -1.0);
    bb.add_transpose(0, 1, &k, 1.0);
    bb.add(1, 0, &k, 1.0);
    let a = bb.build();

    let mut rhs = vec![0.0; ns + nu];
    rhs[ns..].copy_from_slice(&assemble_load_scalar(&u_sp, g, quad_load(r))?);

    let x = sparse_symmetric_solve(&a, &rhs)?;
    Ok((
        sigma_sp.function_from_reduced(&x[..ns]),
        u_sp.function_from_reduced(&x[ns..]),
    ))
}

/// Vorticity-velocity-pressure Stokes: sigma_h in Sigma_h, u_h in V0_h,
/// p_h in S^_h (zero mean, enforced by a multiplier).
pub fn solve_stokes_vvp(
    mesh: &Arc<Mesh>,
    r: usize,
    f: &dyn Fn(f64, f64) -> [f64; 2],
) -> Result<StokesSolution> {
    let sigma_sp = Arc::new(FeSpace::new(mesh.clone(), Family::Lagrange, r, Constraint::None)?);
    let v_sp = Arc::new(FeSpace::new(
        mesh.clone(),
        Family::RaviartThomas,
        r,
        Constraint::ZeroNormalTrace,
    )?);
    let p_sp = Arc::new(FeSpace::new(
        mesh.clone(),
        Family::Discontinuous,
        r - 1,
        Constraint::MeanZero,
    )?);
    let qm = quad_matrix(r);
    let m = assemble_mass(&sigma_sp, qm)?;
    let c = assemble_curl_coupling(&v_sp, &sigma_sp, qm)?;
    let b = assemble_div_pressure(&p_sp, &v_sp, qm)?;
    let e = assemble_load_scalar(&p_sp, &|_, _| 1.0, qm)?;
    let (ns, nv, np) = (sigma_sp.n_free, v_sp.n_free, p_sp.n_free);

    // The pressure gauge is fixed by pinning one DOF with a multiplier (a
    // single-entry row keeps the factorization sparse; a mean-integral row
    // would couple every element and blow up fill-in).  The multiplier
    // vanishes at the solution because (div u_h, q) = 0 holds for all q, and
    // the zero-mean normalization is restored afterwards by a constant
    // shift.
    let mut pin = vec![0.0; np];
    pin[0] = 1.0;
    let mut bb = BlockBuilder::new(&[ns, nv, np, 1], &[ns, nv, np, 1]);
    bb.add(0, 0, &m, -1.0);
    bb.add_transpose(0, 1, &c, 1.0);
    bb.add(1, 0, &c, 1.0);
    bb.add_transpose(1, 2, &b, -1.0);
    bb.add(2, 1, &b, -1.0);
    bb.add_column(2, 3, &pin, 1.0);
    bb.add_row(3, 2, &pin, 1.0);
    let a = bb.build();

    let mut rhs = vec![0.0; ns + nv + np + 1];
    rhs[ns..ns + nv].copy_from_slice(&assemble_load_vector(&v_sp, f, quad_load(r))?);

    let x = sparse_symmetric_solve(&a, &rhs)?;
    // Shift p to zero mean: the first DG basis function on every element is
    // the constant 1, so a global constant shift touches one DOF per cell.
    let mut p = x[ns + nv..ns + nv + np].to_vec();
    let mean = crate::linalg::dot(&e, &p);
    let nloc = p_sp.elem.ndofs;
    for t in 0..mesh.num_triangles() {
        p[t * nloc] -= mean;
    }
    Ok(StokesSolution {
        sigma_h: sigma_sp.function_from_reduced(&x[..ns]),
        u_h: v_sp.function_from_reduced(&x[ns..ns + nv]),
        p_h: p_sp.function_from_reduced(&p),
    })
}

/// Elementwise L2 projection onto a discontinuous space.
pub fn project_l2(space: &Arc<FeSpace>, s: &dyn Fn(f64, f64) -> f64) -> Result<FeFunction> {
    assert_eq!(space.family(), Family::Discontinuous);
    Ok(space.interpolate_scalar(s))
}

/// Elliptic projection onto a Lagrange space: (curl P tau, curl rho) =
/// (curl tau, curl rho) for all rho; the unconstrained variant additionally
/// matches the mean of tau via a multiplier.
pub fn project_elliptic_sigma(
    space: &Arc<FeSpace>,
    tau: &dyn Fn(f64, f64) -> f64,
    grad_tau: &dyn Fn(f64, f64) -> [f64; 2],
) -> Result<FeFunction> {
    assert_eq!(space.family(), Family::Lagrange);
    let r = space.degree();
    let ql = quad_load(r);
    // (curl tau, curl rho) = (grad tau, grad rho) = (rot grad tau, curl rho).
    let curl_tau = |x: f64, y: f64| {
        let g = grad_tau(x, y);
        [g[1], -g[0]]
    };
    let b = assemble_load_curl(space, &curl_tau, ql)?;
    let k = assemble_curlcurl(space, space, quad_matrix(r))?;
    let n = space.n_free;
    match space.constraint {
        Constraint::ZeroTrace => {
            let x = sparse_symmetric_solve(&k, &b)?;
            Ok(space.function_from_reduced(&x))
        }
        Constraint::None => {
            let e = assemble_load_scalar(space, &|_, _| 1.0, quad_matrix(r))?;
            let mean_tau = integrate_fn(&space.mesh, tau, ql)?;
            let mut bb = BlockBuilder::new(&[n, 1], &[n, 1]);
            bb.add(0, 0, &k, 1.0);
            bb.add_column(0, 1, &e, 1.0);
            bb.add_row(1, 0, &e, 1.0);
            let a = bb.build();
            let mut rhs = vec![0.0; n + 1];
            rhs[..n].copy_from_slice(&b);
            rhs[n] = mean_tau;
            let x = sparse_symmetric_solve(&a, &rhs)?;
            Ok(space.function_from_reduced(&x[..n]))
        }
        _ => unreachable!("Lagrange spaces only support None/ZeroTrace"),
    }
}

/// Integral of a scalar function over the mesh.
pub fn integrate_fn(mesh: &Mesh, f: &dyn Fn(f64, f64) -> f64, quad_degree: usize) -> Result<f64> {
    let rule = quadrature(quad_degree)?;
    let mut acc = 0.0;
    for t in 0..mesh.num_triangles() {
        let map = mesh.affine_map(t);
        for (q, &p) in rule.points.iter().enumerate() {
            let x = map.apply(p);
            acc += rule.weights[q] * map.det * f(x[0], x[1]);
        }
    }
    Ok(acc)
}

/// Canonical RT interpolation from per-triangle reference-point evaluations
/// of a physical vector field.  Edge coefficients agree from both sides for
/// normal-continuous inputs; constrained DOFs are zeroed.
pub fn interpolate_rt_local(
    space: &Arc<FeSpace>,
    eval: &dyn Fn(usize, [f64; 2]) -> [f64; 2],
) -> FeFunction {
    assert_eq!(space.family(), Family::RaviartThomas);
    let mesh = &space.mesh;
    let mut coeffs = vec![0.0; space.ndofs];
    for t in 0..mesh.num_triangles() {
        let map = mesh.affine_map(t);
        // Inverse Piola: vhat = adj(J) v, with adj(J) = det * J^{-1}.
        let adj = [
            [map.j[1][1], -map.j[0][1]],
            [-map.j[1][0], map.j[0][0]],
        ];
        let pullback = |x: f64, y: f64| {
            let v = eval(t, [x, y]);
            [
                adj[0][0] * v[0] + adj[0][1] * v[1],
                adj[1][0] * v[0] + adj[1][1] * v[1],
            ]
        };
        let local = space.elem.dofs_vector(&pullback);
        for (ld, &(g, s)) in local.iter().zip(&space.cell_dofs[t]) {
            if space.free_of_full[g].is_some() {
                coeffs[g] = s * ld;
            }
        }
    }
    FeFunction::from_coeffs(space.clone(), coeffs)
}

/// Canonical RT interpolation Pi_h^V of a physical vector field given as a
/// callable: edge normal moments plus interior moments.
pub fn interpolate_rt_canonical(
    space: &Arc<FeSpace>,
    v: &dyn Fn(f64, f64) -> [f64; 2],
) -> FeFunction {
    let mesh = space.mesh.clone();
    interpolate_rt_local(space, &move |t, xhat| {
        let p = mesh.affine_map(t).apply(xhat);
        v(p[0], p[1])
    })
}

/// Shared machinery for P_{V0_h} and the discrete Hodge decomposition:
/// given the loads b_tau = (v, curl tau) on Sigma0_h and d_s = (div v, s) on
/// the full DG space, produce rho (curl potential) and g = grad_h phi along
/// with phi itself.
fn hodge_from_loads(
    sigma0: &Arc<FeSpace>,
    v0: &Arc<FeSpace>,
    s_sp: &Arc<FeSpace>,
    b_curl: &[f64],
    d: &[f64],
) -> Result<(FeFunction, FeFunction, FeFunction)> {
    let r = v0.degree();
    let qm = quad_matrix(r);

    // Curl part: (curl rho, curl tau) = (v, curl tau), SPD on Sigma0_h.
    let k = assemble_curlcurl(sigma0, sigma0, qm)?;
    let rho_red = sparse_symmetric_solve(&k, b_curl)?;
    let rho = sigma0.function_from_reduced(&rho_red);

    // Gradient part: (g, w) + (phi, div w) = 0, (div g, s) = d_s.  The phi
    // gauge is fixed by pinning one DOF (g does not see constant shifts of
    // phi since div V0_h has zero mean); phi is shifted to zero mean after
    // the solve.
    let m = assemble_mass(v0, qm)?;
    let b = assemble_div_pressure(s_sp, v0, qm)?;
    let e = assemble_load_scalar(s_sp, &|_, _| 1.0, qm)?;
    let (nv, np) = (v0.n_free, s_sp.n_free);
    let mut pin = vec![0.0; np];
    pin[0] = 1.0;
    let mut bb = BlockBuilder::new(&[nv, np, 1], &[nv, np, 1]);
    bb.add(0, 0, &m, 1.0);
    bb.add_transpose(0, 1, &b, 1.0);
    bb.add(1, 0, &b, 1.0);
    bb.add_column(1, 2, &pin, 1.0);
    bb.add_row(2, 1, &pin, 1.0);
    let a = bb.build();
    let mut rhs = vec![0.0; nv + np + 1];
    rhs[nv..nv + np].copy_from_slice(d);
    let x = sparse_symmetric_solve(&a, &rhs)?;
    let g = v0.function_from_reduced(&x[..nv]);
    let mut phi_red = x[nv..nv + np].to_vec();
    let mean = crate::linalg::dot(&e, &phi_red);
    let nloc = s_sp.elem.ndofs;
    for t in 0..v0.mesh.num_triangles() {
        phi_red[t * nloc] -= mean;
    }
    let phi = s_sp.function_from_reduced(&phi_red);
    Ok((rho, g, phi))
}

/// The constrained spaces (Sigma0_h, V0_h, S^_h) of the zero-trace complex.
pub fn constrained_complex(
    mesh: &Arc<Mesh>,
    r: usize,
) -> Result<(Arc<FeSpace>, Arc<FeSpace>, Arc<FeSpace>)> {
    let sigma0 = Arc::new(FeSpace::new(mesh.clone(), Family::Lagrange, r, Constraint::ZeroTrace)?);
    let v0 = Arc::new(FeSpace::new(
        mesh.clone(),
        Family::RaviartThomas,
        r,
        Constraint::ZeroNormalTrace,
    )?);
    let s = Arc::new(FeSpace::new(
        mesh.clone(),
        Family::Discontinuous,
        r - 1,
        Constraint::MeanZero,
    )?);
    Ok((sigma0, v0, s))
}

/// Projection P_{V0_h} of a smooth field with square-integrable divergence:
/// (v - Pv, curl tau) = 0 for tau in Sigma0_h, (div[v - Pv], s) = 0 for s.
pub fn project_pvh(
    mesh: &Arc<Mesh>,
    r: usize,
    v: &dyn Fn(f64, f64) -> [f64; 2],
    div_v: &dyn Fn(f64, f64) -> f64,
) -> Result<FeFunction> {
    let (sigma0, v0, s_sp) = constrained_complex(mesh, r)?;
    let ql = quad_load(r);
    let b_curl = assemble_load_curl(&sigma0, v, ql)?;
    let d = assemble_load_scalar(&s_sp, div_v, ql)?;
    let (rho, g, _phi) = hodge_from_loads(&sigma0, &v0, &s_sp, &b_curl, &d)?;
    let curl_rho = curl_to_v0(&rho, &v0);
    let coeffs = curl_rho
        .coeffs
        .iter()
        .zip(&g.coeffs)
        .map(|(a, b)| a + b)
        .collect();
    Ok(FeFunction::from_coeffs(v0, coeffs))
}

/// Express curl rho (rho a Lagrange function) exactly in RT coefficients.
pub fn curl_to_v0(rho: &FeFunction, v0: &Arc<FeSpace>) -> FeFunction {
    let rho = rho.clone();
    interpolate_rt_local(v0, &move |t, xhat| {
        let g = rho.eval_grad(t, xhat);
        [g[1], -g[0]]
    })
}

/// Decompose v in V0_h as curl rho_h + grad_h phi_h (discrete Hodge
/// decomposition of the constrained complex).
pub fn discrete_hodge_decompose(v: &FeFunction) -> Result<HodgeDecomposition> {
    let v0 = &v.space;
    assert_eq!(v0.family(), Family::RaviartThomas);
    assert_eq!(v0.constraint, Constraint::ZeroNormalTrace);
    let mesh = v0.mesh.clone();
    let r = v0.degree();
    let sigma0 = Arc::new(FeSpace::new(
        mesh.clone(),
        Family::Lagrange,
        r,
        Constraint::ZeroTrace,
    )?);
    let s_sp = Arc::new(FeSpace::new(
        mesh.clone(),
        Family::Discontinuous,
        r - 1,
        Constraint::MeanZero,
    )?);
    let qm = quad_matrix(r);
    let c = assemble_curl_coupling(v0, &sigma0, qm)?;
    let b = assemble_div_pressure(&s_sp, v0, qm)?;
    let x = v.reduced();
    let b_curl = c.matvec_transpose(&x);
    let d = b.matvec(&x);
    let (rho, g, phi) = hodge_from_loads(&sigma0, v0, &s_sp, &b_curl, &d)?;
    let curl_part = curl_to_v0(&rho, v0);
    Ok(HodgeDecomposition {
        rho,
        phi,
        curl_part,
        grad_part: g,
    })
}

/// Discrete gradient grad_h phi in V0_h: (grad_h phi, w) = -(phi, div w).
pub fn discrete_grad(phi: &FeFunction, v0: &Arc<FeSpace>) -> Result<FeFunction> {
    assert_eq!(phi.space.family(), Family::Discontinuous);
    let qm = quad_matrix(v0.degree());
    let m = assemble_mass(v0, qm)?;
    let b = assemble_div_pressure(&phi.space, v0, qm)?;
    let rhs: Vec<f64> = b
        .matvec_transpose(&phi.reduced())
        .iter()
        .map(|x| -x)
        .collect();
    let g = sparse_symmetric_solve(&m, &rhs)?;
    Ok(v0.function_from_reduced(&g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use std::f64::consts::PI;

    fn mesh(n: usize) -> Arc<Mesh> {
        Arc::new(Mesh::uniform_square(n).unwrap())
    }

    fn diff_norm(a: &FeFunction, b: &FeFunction, qdeg: usize) -> f64 {
        let coeffs: Vec<f64> = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x - y).collect();
        FeFunction::from_coeffs(a.space.clone(), coeffs).l2_norm(qdeg)
    }

    #[test]
    fn zero_load_gives_zero_solutions() {
        let m = mesh(3);
        for bc in [BcMode::Electric, BcMode::Magnetic, BcMode::Dirichlet] {
            let sol = solve_vector_laplacian(&m, 1, bc, &|_, _| [0.0, 0.0]).unwrap();
            assert!(sol.sigma_h.l2_norm(6) < 1e-10, "{:?}", bc);
            assert!(sol.u_h.l2_norm(6) < 1e-10, "{:?}", bc);
        }
        let (s, u) = solve_biharmonic_cr(&m, 1, &|_, _| 0.0).unwrap();
        assert!(s.l2_norm(6) < 1e-10 && u.l2_norm(6) < 1e-10);
        let st = solve_stokes_vvp(&m, 1, &|_, _| [0.0, 0.0]).unwrap();
        assert!(st.sigma_h.l2_norm(6) < 1e-10);
        assert!(st.u_h.l2_norm(6) < 1e-10);
        assert!(st.p_h.l2_norm(6) < 1e-10);
    }

    #[test]
    fn symmetrized_and_unsymmetrized_saddle_agree() {
        // The solver consumes the symmetrized form [[-M, C^T], [C, D]]; the
        // plain Galerkin form [[M, -C^T], [C, D]] must give the same
        // solution.
        let m = mesh(4);
        let f = |x: f64, y: f64| {
            [
                2.0 * PI * PI * (PI * x).cos() * (PI * y).sin(),
                4.0 * PI * PI * (PI * x).sin() * (PI * y).cos(),
            ]
        };
        let sol = solve_vector_laplacian(&m, 1, BcMode::Electric, &f).unwrap();

        let (sigma_sp, v_sp) = vlap_spaces(&m, 1, BcMode::Electric).unwrap();
        let qm = quad_matrix(1);
        let mm = assemble_mass(&sigma_sp, qm).unwrap();
        let c = assemble_curl_coupling(&v_sp, &sigma_sp, qm).unwrap();
        let d = assemble_divdiv(&v_sp, qm).unwrap();
        let (ns, nv) = (sigma_sp.n_free, v_sp.n_free);
        let mut bb = BlockBuilder::new(&[ns, nv], &[ns, nv]);
        bb.add(0, 0, &mm, 1.0);
        bb.add_transpose(0, 1, &c, -1.0);
        bb.add(1, 0, &c, 1.0);
        bb.add(1, 1, &d, 1.0);
        let a = bb.build();
        let mut rhs = vec![0.0; ns + nv];
        rhs[ns..].copy_from_slice(&assemble_load_vector(&v_sp, &f, quad_load(1)).unwrap());
        let x = crate::linalg::sparse_direct_solve(&a, &rhs).unwrap();

        let ds = diff_norm(&sigma_sp.function_from_reduced(&x[..ns]), &sol.sigma_h, 6);
        let du = diff_norm(&v_sp.function_from_reduced(&x[ns..]), &sol.u_h, 6);
        assert!(ds <= 1e-8 && du <= 1e-8, "sigma diff {}, u diff {}", ds, du);
    }

    #[test]
    fn electric_vlap_converges() {
        // u = (cos pi x sin pi y, 2 sin pi x cos pi y) is an eigenfunction:
        // f = 2 pi^2 u.
        let f = |x: f64, y: f64| {
            [
                2.0 * PI * PI * (PI * x).cos() * (PI * y).sin(),
                4.0 * PI * PI * (PI * x).sin() * (PI * y).cos(),
            ]
        };
        let exact = |x: f64, y: f64| {
            [
                (PI * x).cos() * (PI * y).sin(),
                2.0 * (PI * x).sin() * (PI * y).cos(),
            ]
        };
        let mut errs = Vec::new();
        for n in [4usize, 8] {
            let m = mesh(n);
            let sol = solve_vector_laplacian(&m, 1, BcMode::Electric, &f).unwrap();
            // L2 error by quadrature.
            let rule = quadrature(8).unwrap();
            let mut acc = 0.0;
            for t in 0..m.num_triangles() {
                let map = m.affine_map(t);
                for (q, &p) in rule.points.iter().enumerate() {
                    let xp = map.apply(p);
                    let uh = sol.u_h.eval_vector(t, p);
                    let ue = exact(xp[0], xp[1]);
                    acc += rule.weights[q]
                        * map.det
                        * ((uh[0] - ue[0]).powi(2) + (uh[1] - ue[1]).powi(2));
                }
            }
            errs.push(acc.sqrt());
        }
        let rate = (errs[0] / errs[1]).log2();
        assert!(rate > 0.8, "rate {} errs {:?}", rate, errs);
    }

    #[test]
    fn stokes_velocity_is_divergence_free() {
        let m = mesh(4);
        let f = |x: f64, y: f64| [(PI * y).sin(), (PI * x).cos() * y];
        let sol = solve_stokes_vvp(&m, 2, &f).unwrap();
        // div u_h in L2.
        let rule = quadrature(8).unwrap();
        let mut acc = 0.0;
        for t in 0..m.num_triangles() {
            let det = m.affine_map(t).det;
            for (q, &p) in rule.points.iter().enumerate() {
                acc += rule.weights[q] * det * sol.u_h.eval_div(t, p).powi(2);
            }
        }
        assert!(acc.sqrt() <= 1e-10, "div norm {}", acc.sqrt());
        // Mean of p_h.
        let mean = integrate_fn(&m, &|_, _| 0.0, 4).unwrap()
            + {
                let rule = quadrature(6).unwrap();
                let mut s = 0.0;
                for t in 0..m.num_triangles() {
                    let det = m.affine_map(t).det;
                    for (q, &p) in rule.points.iter().enumerate() {
                        s += rule.weights[q] * det * sol.p_h.eval_scalar(t, p);
                    }
                }
                s
            };
        assert!(mean.abs() <= 1e-12, "mean p {}", mean);
    }

    #[test]
    fn l2_projection_reproduces_polynomials_and_converges() {
        let m = mesh(4);
        let sp = Arc::new(FeSpace::new(m.clone(), Family::Discontinuous, 1, Constraint::None).unwrap());
        let p = project_l2(&sp, &|x, _| x).unwrap();
        for t in 0..m.num_triangles() {
            let map = m.affine_map(t);
            let xh = [0.3, 0.4];
            assert!((p.eval_scalar(t, xh) - map.apply(xh)[0]).abs() < 1e-12);
        }
        // sin(pi x), k=1: rate ~2.
        let mut errs = Vec::new();
        for n in [4usize, 8, 16] {
            let m = mesh(n);
            let sp =
                Arc::new(FeSpace::new(m.clone(), Family::Discontinuous, 1, Constraint::None).unwrap());
            let p = project_l2(&sp, &|x, _| (PI * x).sin()).unwrap();
            let rule = quadrature(10).unwrap();
            let mut acc = 0.0;
            for t in 0..m.num_triangles() {
                let map = m.affine_map(t);
                for (q, &pt) in rule.points.iter().enumerate() {
                    let xp = map.apply(pt);
                    let d = p.eval_scalar(t, pt) - (PI * xp[0]).sin();
                    acc += rule.weights[q] * map.det * d * d;
                }
            }
            errs.push(acc.sqrt());
        }
        let r1 = (errs[0] / errs[1]).log2();
        let r2 = (errs[1] / errs[2]).log2();
        assert!((r1 - 2.0).abs() < 0.2 && (r2 - 2.0).abs() < 0.1, "{:?}", errs);
    }

    #[test]
    fn elliptic_projection_full_space_reproduces_and_matches_mean() {
        let m = mesh(3);
        let sp = Arc::new(FeSpace::new(m.clone(), Family::Lagrange, 2, Constraint::None).unwrap());
        let tau = |x: f64, y: f64| x * x + y - 0.3;
        let gtau = |x: f64, _y: f64| [2.0 * x, 1.0];
        let p = project_elliptic_sigma(&sp, &tau, &gtau).unwrap();
        let interp = sp.interpolate_scalar(&tau);
        assert!(diff_norm(&p, &interp, 8) < 1e-10);
    }

    #[test]
    fn rt_interpolation_reproduces_and_commutes() {
        let m = mesh(8);
        let r = 2;
        let sp = Arc::new(FeSpace::new(m.clone(), Family::RaviartThomas, r, Constraint::None).unwrap());
        // Exact reproduction of P_{r-1}^2 fields.
        let v = |x: f64, y: f64| [1.0 + 2.0 * x - y, 0.5 * y + x];
        let pi = interpolate_rt_canonical(&sp, &v);
        let rule = quadrature(8).unwrap();
        for t in (0..m.num_triangles()).step_by(17) {
            for &p in &rule.points {
                let got = pi.eval_vector(t, p);
                let map = m.affine_map(t);
                let xp = map.apply(p);
                let want = v(xp[0], xp[1]);
                assert!((got[0] - want[0]).abs() < 1e-11 && (got[1] - want[1]).abs() < 1e-11);
            }
        }
        // Commutation div Pi v = P_S div v for a smooth field.
        let w = |x: f64, y: f64| [(PI * y).sin() * x, (PI * x).cos() * y * y];
        let div_w = |x: f64, y: f64| (PI * y).sin() + 2.0 * (PI * x).cos() * y;
        let piw = interpolate_rt_canonical(&sp, &w);
        let s_sp = Arc::new(FeSpace::new(m.clone(), Family::Discontinuous, r - 1, Constraint::None).unwrap());
        let ps = project_l2(&s_sp, &div_w).unwrap();
        let mut acc: f64 = 0.0;
        for t in 0..m.num_triangles() {
            let map = m.affine_map(t);
            for (q, &p) in rule.points.iter().enumerate() {
                let d = piw.eval_div(t, p) - ps.eval_scalar(t, p);
                acc += rule.weights[q] * map.det * d * d;
            }
        }
        assert!(acc.sqrt() <= 1e-10, "commutation residual {}", acc.sqrt());
    }

    #[test]
    fn pvh_commutes_with_curl() {
        // P_{V0_h} curl U = curl P_{Sigma0_h} U.
        let u_exact = |x: f64, y: f64| (PI * x).sin() * (PI * y).sin();
        let grad_u = |x: f64, y: f64| {
            [
                PI * (PI * x).cos() * (PI * y).sin(),
                PI * (PI * x).sin() * (PI * y).cos(),
            ]
        };
        let curl_u = move |x: f64, y: f64| {
            let g = grad_u(x, y);
            [g[1], -g[0]]
        };
        for r in 1..=2 {
            let m = mesh(4);
            let p1 = project_pvh(&m, r, &curl_u, &|_, _| 0.0).unwrap();
            let sigma0 = Arc::new(
                FeSpace::new(m.clone(), Family::Lagrange, r, Constraint::ZeroTrace).unwrap(),
            );
            let ps = project_elliptic_sigma(&sigma0, &u_exact, &grad_u).unwrap();
            let (_, v0, _) = constrained_complex(&m, r).unwrap();
            let p2 = curl_to_v0(&ps, &v0);
            assert!(diff_norm(&p1, &p2, 2 * r + 6) < 1e-9, "r={}", r);
        }
    }

    #[test]
    fn hodge_decomposition_reconstructs_and_is_orthogonal() {
        let m = mesh(4);
        let (_, v0, _) = constrained_complex(&m, 1).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let reduced: Vec<f64> = (0..v0.n_free).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v = v0.function_from_reduced(&reduced);
        let h = discrete_hodge_decompose(&v).unwrap();
        // Reconstruction.
        let recon: Vec<f64> = h
            .curl_part
            .coeffs
            .iter()
            .zip(&h.grad_part.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        let resid: Vec<f64> = recon.iter().zip(&v.coeffs).map(|(a, b)| a - b).collect();
        let resid_norm = FeFunction::from_coeffs(v0.clone(), resid).l2_norm(8);
        assert!(resid_norm <= 1e-10, "reconstruction residual {}", resid_norm);
        // L2 orthogonality of the parts.
        let mm = assemble_mass(&v0, 6).unwrap();
        let ip = crate::linalg::dot(
            &mm.matvec(&h.curl_part.reduced()),
            &h.grad_part.reduced(),
        );
        assert!(ip.abs() <= 1e-10, "parts not orthogonal: {}", ip);
    }

    #[test]
    fn hodge_pure_parts() {
        let m = mesh(4);
        let (sigma0, v0, s_sp) = constrained_complex(&m, 1).unwrap();
        // v = curl rho for random rho: phi must vanish.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let red: Vec<f64> = (0..sigma0.n_free).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let rho = sigma0.function_from_reduced(&red);
        let v = curl_to_v0(&rho, &v0);
        let h = discrete_hodge_decompose(&v).unwrap();
        assert!(h.phi.l2_norm(6) <= 1e-10, "phi norm {}", h.phi.l2_norm(6));
        // v = grad_h phi for random mean-zero phi: rho must vanish.
        let mut raw: Vec<f64> = (0..s_sp.n_free).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // Project out the mean so phi is admissible.
        let e = assemble_load_scalar(&s_sp, &|_, _| 1.0, 4).unwrap();
        let mm = assemble_mass(&s_sp, 4).unwrap();
        let mean = crate::linalg::dot(&e, &raw);
        // Subtract mean via the constant function's coefficient vector.
        let ones = sparse_symmetric_solve(&mm, &e).unwrap();
        for (x, o) in raw.iter_mut().zip(&ones) {
            *x -= mean * o;
        }
        let phi = s_sp.function_from_reduced(&raw);
        let g = discrete_grad(&phi, &v0).unwrap();
        let h = discrete_hodge_decompose(&g).unwrap();
        assert!(h.rho.l2_norm(6) <= 1e-9, "rho norm {}", h.rho.l2_norm(6));
    }

    #[test]
    fn curl_of_full_sigma_escapes_v0() {
        // A boundary-supported Lagrange basis function tau has curl tau with
        // nonzero boundary normal trace, so interpolation into V0_h loses
        // mass: the witness for curl Sigma_h not included in V0_h.
        let m = mesh(4);
        let sigma = Arc::new(FeSpace::new(m.clone(), Family::Lagrange, 1, Constraint::None).unwrap());
        let (_, v0, _) = constrained_complex(&m, 1).unwrap();
        let bv = (0..m.num_vertices()).find(|&v| m.boundary_vertex[v]).unwrap();
        let mut coeffs = vec![0.0; sigma.ndofs];
        coeffs[bv] = 1.0;
        let tau = FeFunction::from_coeffs(sigma, coeffs);
        let interp = curl_to_v0(&tau, &v0);
        // Residual of curl tau minus its constrained interpolant.
        let rule = quadrature(6).unwrap();
        let mut acc: f64 = 0.0;
        for t in 0..m.num_triangles() {
            let map = m.affine_map(t);
            for (q, &p) in rule.points.iter().enumerate() {
                let g = tau.eval_grad(t, p);
                let c = [g[1], -g[0]];
                let w = interp.eval_vector(t, p);
                acc += rule.weights[q] * map.det * ((c[0] - w[0]).powi(2) + (c[1] - w[1]).powi(2));
            }
        }
        assert!(acc.sqrt() > 1e-3, "witness residual unexpectedly small: {}", acc.sqrt());
    }

    #[test]
    fn discrete_poincare_ratio_is_stable() {
        let mut worst = Vec::new();
        for n in [2usize, 4] {
            let m = mesh(n);
            let (_, v0, s_sp) = constrained_complex(&m, 1).unwrap();
            let e = assemble_load_scalar(&s_sp, &|_, _| 1.0, 4).unwrap();
            let mut max_ratio: f64 = 0.0;
            let mm = assemble_mass(&s_sp, 4).unwrap();
            let ones = sparse_symmetric_solve(&mm, &e).unwrap();
            for i in 0..s_sp.n_free {
                let mut red = vec![0.0; s_sp.n_free];
                red[i] = 1.0;
                let mean = e[i];
                for (x, o) in red.iter_mut().zip(&ones) {
                    *x -= mean * o;
                }
                let phi = s_sp.function_from_reduced(&red);
                let pn = phi.l2_norm(4);
                if pn < 1e-12 {
                    continue;
                }
                let g = discrete_grad(&phi, &v0).unwrap();
                max_ratio = max_ratio.max(pn / g.l2_norm(4));
            }
            worst.push(max_ratio);
        }
        // Boundedness: the worst basis-direction ratio must not grow under
        // refinement (localized bumps only get steeper gradients).
        assert!(worst[1] <= 1.2 * worst[0], "Poincare ratios {:?}", worst);

        // Stability on a fixed smooth mean-zero field: the ratio converges
        // to its continuum value, so it is stable within 20% across levels.
        let mut ratios = Vec::new();
        for n in [4usize, 8] {
            let m = mesh(n);
            let (_, v0, s_sp) = constrained_complex(&m, 1).unwrap();
            let phi = project_l2(&s_sp, &|x, y| {
                (PI * x).sin() * (PI * y).sin() - 4.0 / (PI * PI)
            })
            .unwrap();
            let g = discrete_grad(&phi, &v0).unwrap();
            ratios.push(phi.l2_norm(8) / g.l2_norm(8));
        }
        let rel = (ratios[1] - ratios[0]).abs() / ratios[0];
        assert!(rel <= 0.2, "smooth-field Poincare ratios {:?}", ratios);
    }
}
