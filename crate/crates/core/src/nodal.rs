//! Eigenfunctions, nodal-domain counting, Courant's bound, and the
//! nodal-deficiency formula δ(φ_k) = Mor(Λ₊(ε) + Λ₋(ε)).

use crate::assemble::{
    assemble_blocks, assemble_global, free_vertices, lumped_mass, realize, Potential, Realization,
};
use crate::dtn::dtn_sum;
use crate::error::{Error, Result};
use crate::grid::{partition_by_sign, GridDomain};
use crate::linalg::{eigs, ldlt_inertia, SymMatrix, DEFAULT_ZERO_TOL};

/// Relative spectral-gap tolerance below which an eigenvalue is treated as
/// non-simple.
pub const DEFAULT_GAP_TOL: f64 = 1e-6;

/// Generalized eigenpairs of (K, M) with M the lumped mass: the discrete
/// eigenfunctions of −Δ + V.
#[derive(Debug, Clone)]
pub struct ModeBasis {
    /// Ascending generalized eigenvalues λ_1 ≤ λ_2 ≤ ...
    pub values: Vec<f64>,
    /// Lattice-indexed eigenvectors (zero at eliminated vertices), max-norm 1.
    pub modes: Vec<Vec<f64>>,
}

/// Solve the generalized problem K φ = λ M φ via M^{-1/2} K M^{-1/2}.
pub fn eigenmodes(domain: &GridDomain, v: &Potential) -> Result<ModeBasis> {
    let k = assemble_global(domain, v, 0.0)?;
    let mass = lumped_mass(domain);
    if mass.iter().any(|&m| !(m > 0.0)) {
        return Err(Error::InvalidInput("a free vertex carries zero mass".into()));
    }
    let n = k.order();
    let mut w = k.data;
    for i in 0..n {
        for j in 0..n {
            w[(i, j)] /= (mass[i] * mass[j]).sqrt();
        }
    }
    let e = eigs(&SymMatrix::new(w, "mass-normalized"))?;
    let free = free_vertices(domain);
    let mut modes = Vec::with_capacity(n);
    for col in 0..n {
        let mut phi = vec![0.0; domain.n_lattice()];
        for (row, &vx) in free.iter().enumerate() {
            phi[vx] = e.vectors[(row, col)] / mass[row].sqrt();
        }
        let peak = phi.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
        // Normalize and fix the sign deterministically: first entry of
        // largest magnitude is positive.
        let lead = phi
            .iter()
            .find(|&&x| x.abs() >= 0.5 * peak)
            .copied()
            .unwrap_or(1.0);
        let s = if lead < 0.0 { -1.0 / peak } else { 1.0 / peak };
        for x in &mut phi {
            *x *= s;
        }
        modes.push(phi);
    }
    Ok(ModeBasis { values: e.values, modes })
}

/// Nodal-domain count and per-vertex component labeling.
#[derive(Debug, Clone)]
pub struct NodalCount {
    pub n_plus: usize,
    pub n_minus: usize,
    pub n_total: usize,
    /// Component id per lattice vertex; None on the zero set / outside.
    pub component: Vec<Option<usize>>,
}

fn uf_find(parent: &mut Vec<usize>, mut v: usize) -> usize {
    while parent[v] != v {
        parent[v] = parent[parent[v]];
        v = parent[v];
    }
    v
}

/// Connected components of {values ≠ 0} over grid edges joining same-sign
/// vertices with |value| > zero_tol.
pub fn nodal_domains(
    domain: &GridDomain,
    values: &[f64],
    zero_tol: f64,
) -> Result<NodalCount> {
    let n = domain.n_lattice();
    if values.len() != n {
        return Err(Error::InvalidInput(format!(
            "values length {} != lattice size {n}",
            values.len()
        )));
    }
    let active = |v: usize| domain.in_mask(v) && values[v].abs() > zero_tol;
    if !(0..n).any(active) {
        return Err(Error::AllZero);
    }
    let mut parent: Vec<usize> = (0..n).collect();
    for (a, b) in domain.edges() {
        if active(a) && active(b) && values[a].signum() == values[b].signum() {
            let (ra, rb) = (uf_find(&mut parent, a), uf_find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut component = vec![None; n];
    let mut ids: Vec<usize> = Vec::new();
    let mut n_plus = 0;
    let mut n_minus = 0;
    for v in 0..n {
        if !active(v) {
            continue;
        }
        let r = uf_find(&mut parent, v);
        let id = match ids.iter().position(|&x| x == r) {
            Some(i) => i,
            None => {
                ids.push(r);
                if values[r] > 0.0 {
                    n_plus += 1;
                } else {
                    n_minus += 1;
                }
                ids.len() - 1
            }
        };
        component[v] = Some(id);
    }
    Ok(NodalCount { n_plus, n_minus, n_total: n_plus + n_minus, component })
}

/// Verification record for one eigenfunction.
#[derive(Debug, Clone)]
pub struct NodalReport {
    /// 1-based eigenvalue index.
    pub k: usize,
    pub lambda_k: f64,
    pub simple: bool,
    pub n_plus_domains: usize,
    pub n_minus_domains: usize,
    pub n_total: usize,
    /// δ(φ_k) = k − n(φ_k).
    pub deficiency_direct: i64,
    pub epsilon: f64,
    pub deficiency_dtn: Option<i64>,
    /// Set when the DtN route ran; true iff deficiency_dtn equals
    /// deficiency_direct and the side checks Mor(L^D_±) = n_± and
    /// Mor(L^G(ε)) = k all hold.
    pub agreement: Option<bool>,
    pub mor_d_plus: Option<usize>,
    pub mor_d_minus: Option<usize>,
    pub mor_g_eps: Option<usize>,
}

fn simple_at(values: &[f64], k: usize, gap_tol: f64) -> bool {
    let i = k - 1;
    let scale = values[i].abs().max(1.0);
    let below = if i == 0 { f64::INFINITY } else { values[i] - values[i - 1] };
    let above = if i + 1 == values.len() {
        f64::INFINITY
    } else {
        values[i + 1] - values[i]
    };
    below.min(above) > gap_tol * scale
}

fn basic_report(basis: &ModeBasis, domain: &GridDomain, k: usize) -> Result<NodalReport> {
    if k == 0 || k > basis.values.len() {
        return Err(Error::InvalidInput(format!("mode index {k} out of range")));
    }
    let phi = &basis.modes[k - 1];
    let count = nodal_domains(domain, phi, 1e-7)?;
    let epsilon = if k < basis.values.len() {
        0.5 * (basis.values[k] - basis.values[k - 1])
    } else {
        0.0
    };
    Ok(NodalReport {
        k,
        lambda_k: basis.values[k - 1],
        simple: simple_at(&basis.values, k, DEFAULT_GAP_TOL),
        n_plus_domains: count.n_plus,
        n_minus_domains: count.n_minus,
        n_total: count.n_total,
        deficiency_direct: k as i64 - count.n_total as i64,
        epsilon,
        deficiency_dtn: None,
        agreement: None,
        mor_d_plus: None,
        mor_d_minus: None,
        mor_g_eps: None,
    })
}

/// Courant check for the first `k_max` modes: n(φ_k) ≤ k, hard assertion.
pub fn courant_check(domain: &GridDomain, v: &Potential, k_max: usize) -> Result<Vec<NodalReport>> {
    let basis = eigenmodes(domain, v)?;
    if k_max == 0 || k_max > basis.values.len() {
        return Err(Error::InvalidInput(format!("k_max {k_max} out of range")));
    }
    let mut out = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let r = basic_report(&basis, domain, k)?;
        assert!(
            r.n_total <= k,
            "Courant bound violated: n(phi_{k}) = {} > {k}",
            r.n_total
        );
        out.push(r);
    }
    Ok(out)
}

/// Nodal-deficiency verification for mode k with ε = half the gap above λ_k.
pub fn nodal_deficiency_dtn(domain: &GridDomain, v: &Potential, k: usize) -> Result<NodalReport> {
    nodal_deficiency_dtn_with(domain, v, k, None)
}

/// Same with an explicit ε override (must stay inside the spectral gap).
pub fn nodal_deficiency_dtn_with(
    domain: &GridDomain,
    v: &Potential,
    k: usize,
    epsilon: Option<f64>,
) -> Result<NodalReport> {
    let basis = eigenmodes(domain, v)?;
    if k == 0 || k >= basis.values.len() {
        return Err(Error::InvalidInput(format!("mode index {k} out of range")));
    }
    if !simple_at(&basis.values, k, DEFAULT_GAP_TOL) {
        return Err(Error::NotSimple(k));
    }
    let mut report = basic_report(&basis, domain, k)?;
    let gap = basis.values[k] - basis.values[k - 1];
    let epsilon = epsilon.unwrap_or(0.5 * gap);
    if !(epsilon > 0.0) || epsilon >= gap {
        return Err(Error::InvalidInput(format!(
            "epsilon {epsilon} outside the spectral gap (0, {gap})"
        )));
    }
    report.epsilon = epsilon;
    let shift = basis.values[k - 1] + epsilon;
    let phi = &basis.modes[k - 1];
    let partition = partition_by_sign(domain, phi, 1e-7)?;

    if partition.sigma.is_empty() {
        // Ground-state convention: empty nodal set, Σ empty, index 0.
        report.deficiency_dtn = Some(0);
        report.agreement = Some(report.deficiency_direct == 0);
        return Ok(report);
    }

    let blocks = assemble_blocks(domain, v, &partition, shift)?;
    let tol = DEFAULT_ZERO_TOL;
    let mor_d_plus = ldlt_inertia(&realize(&blocks, Realization::D1), tol)?.mor();
    let mor_d_minus = ldlt_inertia(&realize(&blocks, Realization::D2), tol)?.mor();
    let mor_g_eps = ldlt_inertia(&realize(&blocks, Realization::G), tol)?.mor();
    let sum = dtn_sum(&blocks)?;
    let deficiency_dtn = ldlt_inertia(&sum.matrix, tol)?.mor() as i64;
    report.mor_d_plus = Some(mor_d_plus);
    report.mor_d_minus = Some(mor_d_minus);
    report.mor_g_eps = Some(mor_g_eps);
    report.deficiency_dtn = Some(deficiency_dtn);
    report.agreement = Some(
        deficiency_dtn == report.deficiency_direct
            && mor_d_plus == report.n_plus_domains
            && mor_d_minus == report.n_minus_domains
            && mor_g_eps == k,
    );
    Ok(report)
}
