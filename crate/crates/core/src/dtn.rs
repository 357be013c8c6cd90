//! Dirichlet-to-Neumann maps: the one-sided maps Λ₁, Λ₂ on a separating
//! interface, their sum, the Neumann-to-Dirichlet inverse, the periodic map
//! Λ_τ, the partial map on one boundary face, and the perturbation
//! certificate ‖Λ₁⁻¹Λ₂ − cI‖ < 1 + c.
//!
//! All maps are Schur complements of the energy form, so they are congruent
//! to the mass-normalized maps and share their inertia. Sign convention: a
//! Dirichlet-outer 1D side of length a with V − λ = −C gives Λ → +√C·cot(√C a)
//! in the fine-grid limit; a Neumann-outer side of length b gives −√C·tan(√C b).

use nalgebra::DMatrix;

use crate::assemble::{
    assemble_global, assemble_periodic_parts, free_vertices, realize, BlockOperator, Potential,
    Realization,
};
use crate::error::{Error, Result};
use crate::grid::{Bc, GridDomain};
use crate::linalg::{schur_complement, solve, spectral_norm, SymMatrix};

/// Which realization a DtN map came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DtnSide {
    One,
    Two,
    Sum,
    Periodic,
    Partial,
}

/// A Dirichlet-to-Neumann map on an interface index set.
#[derive(Debug, Clone)]
pub struct DtnMap {
    pub matrix: SymMatrix,
    pub side: DtnSide,
    pub lambda: f64,
}

impl DtnMap {
    /// Interface size m.
    pub fn order(&self) -> usize {
        self.matrix.order()
    }
}

/// One-sided map Λ_side = D_side − B_sideᵀ A_side⁻¹ B_side.
pub fn dtn_side(blocks: &BlockOperator, side: u8) -> Result<DtnMap> {
    if blocks.sigma.is_empty() {
        return Err(Error::EmptyInterface);
    }
    let (a, b, d, tag) = match side {
        1 => (&blocks.a1, &blocks.b1, &blocks.d1, DtnSide::One),
        2 => (&blocks.a2, &blocks.b2, &blocks.d2, DtnSide::Two),
        _ => return Err(Error::InvalidInput(format!("side must be 1 or 2, got {side}"))),
    };
    let mut matrix = schur_complement(a, b, d)?;
    matrix.tag = format!("Lambda{side}(lambda={})", blocks.lambda);
    Ok(DtnMap { matrix, side: tag, lambda: blocks.lambda })
}

/// Λ₁ + Λ₂, cross-checked against the Schur complement of the full global
/// matrix onto Σ (the two routes must agree to 1e−10).
pub fn dtn_sum(blocks: &BlockOperator) -> Result<DtnMap> {
    let l1 = dtn_side(blocks, 1)?;
    let l2 = dtn_side(blocks, 2)?;
    let sum = SymMatrix::new(
        &l1.matrix.data + &l2.matrix.data,
        format!("Lambda1+Lambda2(lambda={})", blocks.lambda),
    );

    // Independent route: eliminate (Ω₁, Ω₂) jointly from the realized global
    // matrix in one block solve.
    let g = realize(blocks, Realization::G);
    let (n1, s, n2) = (blocks.i1.len(), blocks.sigma.len(), blocks.i2.len());
    let mut a = DMatrix::zeros(n1 + n2, n1 + n2);
    a.view_mut((0, 0), (n1, n1)).copy_from(&g.data.view((0, 0), (n1, n1)));
    a.view_mut((n1, n1), (n2, n2))
        .copy_from(&g.data.view((n1 + s, n1 + s), (n2, n2)));
    let mut b = DMatrix::zeros(n1 + n2, s);
    b.view_mut((0, 0), (n1, s)).copy_from(&g.data.view((0, n1), (n1, s)));
    b.view_mut((n1, 0), (n2, s))
        .copy_from(&g.data.view((n1 + s, n1), (n2, s)));
    let d = SymMatrix::new(g.data.view((n1, n1), (s, s)).into(), "G|sigma");
    let global = schur_complement(&SymMatrix::new(a, "G interior"), &b, &d)?;
    let gap = (&sum.data - &global.data).abs().max();
    let scale = sum.max_abs().max(global.max_abs()).max(1.0);
    assert!(
        gap <= 1e-10 * scale,
        "sum-of-sides and global-Schur routes disagree: {gap:.3e}"
    );
    Ok(DtnMap { matrix: sum, side: DtnSide::Sum, lambda: blocks.lambda })
}

/// Neumann-to-Dirichlet map Λ⁻¹, symmetrized.
pub fn ntd_map(dtn: &DtnMap) -> Result<SymMatrix> {
    let m = dtn.order();
    let inv = solve(&dtn.matrix.data, &DMatrix::identity(m, m)).map_err(|_| Error::Singular)?;
    let mut s = inv;
    for i in 0..m {
        for j in (i + 1)..m {
            let avg = 0.5 * (s[(i, j)] + s[(j, i)]);
            s[(i, j)] = avg;
            s[(j, i)] = avg;
        }
    }
    Ok(SymMatrix::new(s, format!("ntd({})", dtn.matrix.tag)))
}

/// Periodic quotient pieces: (L^P, the interior all-Dirichlet block L^D, Λ_τ).
pub fn periodic_parts(
    domain: &GridDomain,
    v: &Potential,
    lambda: f64,
) -> Result<(SymMatrix, SymMatrix, DtnMap)> {
    let (p, classes) = assemble_periodic_parts(domain, v, lambda)?;
    let seam: Vec<usize> = (0..classes.reps.len()).filter(|&k| classes.on_seam[k]).collect();
    let interior: Vec<usize> = (0..classes.reps.len()).filter(|&k| !classes.on_seam[k]).collect();
    if seam.is_empty() {
        return Err(Error::EmptyInterface);
    }
    let (na, ns) = (interior.len(), seam.len());
    let mut a = DMatrix::zeros(na, na);
    let mut b = DMatrix::zeros(na, ns);
    let mut d = DMatrix::zeros(ns, ns);
    for (i, &p_i) in interior.iter().enumerate() {
        for (j, &p_j) in interior.iter().enumerate() {
            a[(i, j)] = p.data[(p_i, p_j)];
        }
        for (j, &p_j) in seam.iter().enumerate() {
            b[(i, j)] = p.data[(p_i, p_j)];
        }
    }
    for (i, &p_i) in seam.iter().enumerate() {
        for (j, &p_j) in seam.iter().enumerate() {
            d[(i, j)] = p.data[(p_i, p_j)];
        }
    }
    let interior_m = SymMatrix::new(a, format!("D(lambda={lambda})"));
    let mut tau = schur_complement(
        &interior_m,
        &b,
        &SymMatrix::new(d, "P|seam"),
    )?;
    tau.tag = format!("LambdaTau(lambda={lambda})");
    Ok((p, interior_m, DtnMap { matrix: tau, side: DtnSide::Periodic, lambda }))
}

/// Λ_τ on the seam classes of a periodic domain.
pub fn dtn_periodic(domain: &GridDomain, v: &Potential, lambda: f64) -> Result<DtnMap> {
    Ok(periodic_parts(domain, v, lambda)?.2)
}

/// One boundary face of the bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Face {
    pub axis: usize,
    pub high: bool,
}

impl Face {
    pub fn opposite(self) -> Face {
        Face { axis: self.axis, high: !self.high }
    }
}

/// Partial-map pieces on an unrolled periodic domain: the mixed realization
/// L^{DN} (Neumann on Γ₁, Dirichlet on Γ₂), its interior Dirichlet block L^D,
/// and the partial map = Schur complement of L^{DN} onto Γ₁.
pub fn partial_parts(
    domain: &GridDomain,
    v: &Potential,
    lambda: f64,
    gamma1: Face,
) -> Result<(SymMatrix, SymMatrix, DtnMap)> {
    if domain.has_periodic() {
        return Err(Error::UnexpectedPeriodicMap);
    }
    if gamma1.axis >= domain.dim() {
        return Err(Error::InvalidInput(format!("axis {} out of range", gamma1.axis)));
    }
    let g1: Vec<usize> = domain
        .face_vertices(gamma1.axis, gamma1.high)
        .into_iter()
        .filter(|&vx| domain.label(vx).is_none())
        .collect();
    if g1.is_empty() {
        return Err(Error::EmptyInterface);
    }
    let mut work = domain.clone();
    for vx in work.face_vertices(gamma1.axis, !gamma1.high) {
        if work.label(vx).is_none() {
            work.set_label(vx, Some(Bc::Dirichlet));
        }
    }
    for &vx in &g1 {
        work.set_label(vx, Some(Bc::Neumann));
    }
    let dn = assemble_global(&work, v, lambda)?;

    let free = free_vertices(&work);
    let on_g1: Vec<bool> = free.iter().map(|vx| g1.contains(vx)).collect();
    let interior: Vec<usize> = (0..free.len()).filter(|&k| !on_g1[k]).collect();
    let boundary: Vec<usize> = (0..free.len()).filter(|&k| on_g1[k]).collect();
    let (na, ns) = (interior.len(), boundary.len());
    let mut a = DMatrix::zeros(na, na);
    let mut b = DMatrix::zeros(na, ns);
    let mut d = DMatrix::zeros(ns, ns);
    for (i, &f_i) in interior.iter().enumerate() {
        for (j, &f_j) in interior.iter().enumerate() {
            a[(i, j)] = dn.data[(f_i, f_j)];
        }
        for (j, &f_j) in boundary.iter().enumerate() {
            b[(i, j)] = dn.data[(f_i, f_j)];
        }
    }
    for (i, &f_i) in boundary.iter().enumerate() {
        for (j, &f_j) in boundary.iter().enumerate() {
            d[(i, j)] = dn.data[(f_i, f_j)];
        }
    }
    let interior_m = SymMatrix::new(a, format!("D(lambda={lambda})"));
    let mut partial = schur_complement(&interior_m, &b, &SymMatrix::new(d, "DN|gamma1"))?;
    partial.tag = format!("Lambda1Partial(lambda={lambda})");
    Ok((dn, interior_m, DtnMap { matrix: partial, side: DtnSide::Partial, lambda }))
}

/// Partial DtN map onto Γ₁ with Dirichlet imposed on the opposite face Γ₂.
pub fn dtn_partial(
    domain: &GridDomain,
    v: &Potential,
    lambda: f64,
    gamma1: Face,
) -> Result<DtnMap> {
    Ok(partial_parts(domain, v, lambda, gamma1)?.2)
}

/// Outcome of the perturbation certificate.
#[derive(Debug, Clone, Copy)]
pub struct Certificate {
    /// True when some c on the grid gives ‖Λ₁⁻¹Λ₂ − cI‖ < 1 + c.
    pub holds: bool,
    /// Most negative value of ‖Λ₁⁻¹Λ₂ − cI‖ − (1 + c) found.
    pub best_margin: f64,
    pub best_c: f64,
}

/// 64 logarithmically spaced points in [1e−3, 1e3] plus c = 1, where
/// doubling-like scenarios optimize.
pub fn default_c_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (0..64)
        .map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / 63.0))
        .collect();
    grid.push(1.0);
    grid
}

/// Theorem-perturb certificate in the coordinate spectral norm. A negative
/// margin at any c certifies Maslov index 0 for the pencil Λ₁ + t²Λ₂.
pub fn perturb_certificate(l1: &DtnMap, l2: &DtnMap, c_grid: &[f64]) -> Result<Certificate> {
    if l1.order() != l2.order() {
        return Err(Error::InvalidInput("interface sizes differ".into()));
    }
    if c_grid.is_empty() {
        return Err(Error::InvalidInput("empty c grid".into()));
    }
    let x = solve(&l1.matrix.data, &l2.matrix.data).map_err(|_| Error::Singular)?;
    let m = l1.order();
    let mut best_margin = f64::INFINITY;
    let mut best_c = c_grid[0];
    for &c in c_grid {
        let shifted = &x - DMatrix::identity(m, m) * c;
        let margin = spectral_norm(&shifted) - (1.0 + c);
        if margin < best_margin {
            best_margin = margin;
            best_c = c;
        }
    }
    Ok(Certificate { holds: best_margin < 0.0, best_margin, best_c })
}
