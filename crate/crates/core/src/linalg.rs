//! Dense symmetric kernels: inertia by symmetric-pivoted LDL^T, a full
//! eigendecomposition used as the independent oracle, Schur complements,
//! linear solves, and the spectral norm.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Dense symmetric matrix with a provenance tag (which realization, which shift).
#[derive(Debug, Clone)]
pub struct SymMatrix {
    pub data: DMatrix<f64>,
    pub tag: String,
}

impl SymMatrix {
    pub fn new(data: DMatrix<f64>, tag: impl Into<String>) -> Self {
        debug_assert_eq!(data.nrows(), data.ncols());
        Self { data, tag: tag.into() }
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let data = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::new(data, "")
    }

    pub fn order(&self) -> usize {
        self.data.nrows()
    }

    /// Largest |m_ij| - m_ji| over the matrix; assembly should make this 0.
    pub fn asymmetry(&self) -> f64 {
        let n = self.order();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.data[(i, j)] - self.data[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
    }
}

/// Eigenvalue sign counts (n_minus, n_zero, n_plus) of a symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inertia {
    pub n_minus: usize,
    pub n_zero: usize,
    pub n_plus: usize,
    pub zero_tol: f64,
    /// Smallest |pivot or eigenvalue| that was classified nonzero.
    pub min_abs_nonzero: f64,
}

impl Inertia {
    /// Morse index: number of strictly negative eigenvalues.
    pub fn mor(&self) -> usize {
        self.n_minus
    }

    /// Mor_0 = Mor + dim ker: number of nonpositive eigenvalues.
    pub fn mor0(&self) -> usize {
        self.n_minus + self.n_zero
    }

    pub fn order(&self) -> usize {
        self.n_minus + self.n_zero + self.n_plus
    }
}

pub const DEFAULT_ZERO_TOL: f64 = 1e-9;

/// Bunch-Parlett threshold for choosing 1x1 vs 2x2 pivots.
const BP_ALPHA: f64 = 0.6403882032022076; // (1 + sqrt(17)) / 8

enum SignClass {
    Neg,
    Zero,
    Pos,
}

fn classify(value: f64, tol_abs: f64, min_nz: &mut f64) -> Result<SignClass> {
    let a = value.abs();
    if a <= tol_abs {
        return Ok(SignClass::Zero);
    }
    if a < 10.0 * tol_abs {
        return Err(Error::Indeterminate(a));
    }
    *min_nz = min_nz.min(a);
    Ok(if value < 0.0 { SignClass::Neg } else { SignClass::Pos })
}

/// Inertia via LDL^T with full symmetric (Bunch-Parlett) pivoting and
/// 1x1 / 2x2 pivot blocks. `zero_tol` is relative to the largest entry.
pub fn ldlt_inertia(m: &SymMatrix, zero_tol: f64) -> Result<Inertia> {
    let n = m.order();
    let scale = m.max_abs();
    let mut inertia = Inertia {
        n_minus: 0,
        n_zero: 0,
        n_plus: 0,
        zero_tol,
        min_abs_nonzero: f64::INFINITY,
    };
    if n == 0 {
        return Ok(inertia);
    }
    if scale == 0.0 {
        inertia.n_zero = n;
        return Ok(inertia);
    }
    let tol_abs = zero_tol * scale;
    let mut a = m.data.clone();

    let count = |class: SignClass, inertia: &mut Inertia| match class {
        SignClass::Neg => inertia.n_minus += 1,
        SignClass::Zero => inertia.n_zero += 1,
        SignClass::Pos => inertia.n_plus += 1,
    };

    let mut k = 0;
    while k < n {
        // Largest remaining diagonal and off-diagonal entries (column-major).
        let mut p = k;
        let mut dmax = 0.0f64;
        for i in k..n {
            let v = a[(i, i)].abs();
            if v > dmax {
                dmax = v;
                p = i;
            }
        }
        let (mut q, mut r) = (k, k);
        let mut omax = 0.0f64;
        for j in (k + 1)..n {
            for i in k..j {
                let v = a[(i, j)].abs();
                if v > omax {
                    omax = v;
                    q = i;
                    r = j;
                }
            }
        }
        if dmax.max(omax) <= tol_abs {
            inertia.n_zero += n - k;
            break;
        }
        if dmax >= BP_ALPHA * omax {
            // 1x1 pivot at p. Update the upper triangle and mirror, keeping
            // the trailing block exactly symmetric.
            sym_swap(&mut a, k, p);
            let d = a[(k, k)];
            count(classify(d, tol_abs, &mut inertia.min_abs_nonzero)?, &mut inertia);
            for j in (k + 1)..n {
                let f = a[(j, k)] / d;
                if f == 0.0 {
                    continue;
                }
                for i in (k + 1)..=j {
                    a[(i, j)] -= f * a[(i, k)];
                }
                for i in (k + 1)..j {
                    a[(j, i)] = a[(i, j)];
                }
            }
            k += 1;
        } else {
            // 2x2 pivot on (q, r); by the threshold test det < 0 always.
            sym_swap(&mut a, k, q);
            let r = if r == k { q } else { r };
            sym_swap(&mut a, k + 1, r);
            let (p11, p12, p22) = (a[(k, k)], a[(k, k + 1)], a[(k + 1, k + 1)]);
            let det = p11 * p22 - p12 * p12;
            let mid = 0.5 * (p11 + p22);
            let disc = (0.5 * (p11 - p22)).hypot(p12);
            for ev in [mid - disc, mid + disc] {
                count(classify(ev, tol_abs, &mut inertia.min_abs_nonzero)?, &mut inertia);
            }
            let (i11, i12, i22) = (p22 / det, -p12 / det, p11 / det);
            let mut l1 = vec![0.0f64; n];
            let mut l2 = vec![0.0f64; n];
            for i in (k + 2)..n {
                let (b1, b2) = (a[(i, k)], a[(i, k + 1)]);
                l1[i] = b1 * i11 + b2 * i12;
                l2[i] = b1 * i12 + b2 * i22;
            }
            for j in (k + 2)..n {
                let (c1, c2) = (a[(j, k)], a[(j, k + 1)]);
                for i in (k + 2)..=j {
                    a[(i, j)] -= l1[i] * c1 + l2[i] * c2;
                }
                for i in (k + 2)..j {
                    a[(j, i)] = a[(i, j)];
                }
            }
            k += 2;
        }
    }
    debug_assert_eq!(inertia.order(), n);
    Ok(inertia)
}

fn sym_swap(a: &mut DMatrix<f64>, i: usize, j: usize) {
    if i == j {
        return;
    }
    a.swap_rows(i, j);
    a.swap_columns(i, j);
}

/// Full eigendecomposition of a symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// Column k is the eigenvector of `values[k]`.
    pub vectors: DMatrix<f64>,
}

impl Eigen {
    /// Inertia by direct sign counting, with the same relative tolerance
    /// convention as `ldlt_inertia`. This is the oracle side of the pair.
    pub fn sign_counts(&self, zero_tol: f64) -> Inertia {
        let scale = self.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let tol_abs = zero_tol * scale;
        let mut out = Inertia {
            n_minus: 0,
            n_zero: 0,
            n_plus: 0,
            zero_tol,
            min_abs_nonzero: f64::INFINITY,
        };
        for &v in &self.values {
            if v.abs() <= tol_abs {
                out.n_zero += 1;
            } else {
                out.min_abs_nonzero = out.min_abs_nonzero.min(v.abs());
                if v < 0.0 {
                    out.n_minus += 1;
                } else {
                    out.n_plus += 1;
                }
            }
        }
        out
    }
}

/// Eigendecomposition with an explicit residual check
/// (||m v - mu v|| <= 1e-8 ||m|| per pair). The QR-based solver occasionally
/// returns inaccurate pairs; those inputs fall back to cyclic Jacobi.
pub fn eigs(m: &SymMatrix) -> Result<Eigen> {
    let n = m.order();
    if n == 0 {
        return Ok(Eigen { values: vec![], vectors: DMatrix::zeros(0, 0) });
    }
    if let Some(e) = m
        .data
        .clone()
        .try_symmetric_eigen(f64::EPSILON, 0)
        .map(|se| sort_pairs(se.eigenvalues.as_slice(), &se.eigenvectors))
        .filter(|e| residual_ok(m, e))
    {
        return Ok(e);
    }
    let (values, vectors) = jacobi_eigen(&m.data);
    let e = sort_pairs(&values, &vectors);
    if residual_ok(m, &e) {
        Ok(e)
    } else {
        Err(Error::EigNonConvergence)
    }
}

fn sort_pairs(values: &[f64], vectors: &DMatrix<f64>) -> Eigen {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let sorted: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
    let mut out = DMatrix::zeros(n, n);
    for (col, &i) in idx.iter().enumerate() {
        out.set_column(col, &vectors.column(i));
    }
    Eigen { values: sorted, vectors: out }
}

fn residual_ok(m: &SymMatrix, e: &Eigen) -> bool {
    let norm = e
        .values
        .iter()
        .fold(0.0f64, |a, &v| a.max(v.abs()));
    let bound = (1e-8 * norm.max(1e-300)).max(1e-12);
    (0..e.values.len()).all(|k| {
        let v = e.vectors.column(k);
        (&m.data * v - e.values[k] * v).norm() <= bound
    })
}

/// Cyclic Jacobi rotations; slow but dependable on any symmetric input.
fn jacobi_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut a = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let frob = a.norm().max(1e-300);
    for _sweep in 0..50 {
        let mut off = 0.0f64;
        for j in 1..n {
            for i in 0..j {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if (2.0 * off).sqrt() <= 1e-14 * frob {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = 0.5 * (a[(q, q)] - a[(p, p)]) / apq;
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[(i, i)]).collect(), v)
}

/// Solve A X = B for symmetric-or-general invertible A.
pub fn solve(a: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, rhs.ncols()));
    }
    let lu = a.clone().full_piv_lu();
    let u = lu.u();
    let mut umax = 0.0f64;
    let mut umin = f64::INFINITY;
    for i in 0..n {
        let d = u[(i, i)].abs();
        umax = umax.max(d);
        umin = umin.min(d);
    }
    if umax == 0.0 || umin <= 1e-12 * umax {
        return Err(Error::ASingular);
    }
    lu.solve(rhs).ok_or(Error::ASingular)
}

/// Schur complement D - B^T A^{-1} B, symmetrized to kill roundoff asymmetry.
///
/// `b` couples the eliminated block to the retained one (rows index A, columns
/// index D). Errors with `ASingular` when A is singular at the working
/// tolerance, mirroring the standing hypothesis that 0 is not a Dirichlet
/// eigenvalue.
pub fn schur_complement(a: &SymMatrix, b: &DMatrix<f64>, d: &SymMatrix) -> Result<SymMatrix> {
    debug_assert_eq!(a.order(), b.nrows());
    debug_assert_eq!(d.order(), b.ncols());
    let x = solve(&a.data, b)?;
    let mut s = &d.data - b.transpose() * x;
    let m = s.ncols();
    for i in 0..m {
        for j in (i + 1)..m {
            let avg = 0.5 * (s[(i, j)] + s[(j, i)]);
            s[(i, j)] = avg;
            s[(j, i)] = avg;
        }
    }
    Ok(SymMatrix::new(s, format!("schur({})", d.tag)))
}

/// Largest singular value via power iteration on m^T m, relative tol 1e-8.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    let n = m.ncols();
    if n == 0 || m.nrows() == 0 {
        return 0.0;
    }
    let g = m.transpose() * m;
    let mut v = nalgebra::DVector::from_fn(n, |i, _| 1.0 + (i as f64 + 1.0).sin() * 0.3);
    v /= v.norm();
    let mut prev = 0.0f64;
    for _ in 0..20_000 {
        let w = &g * &v;
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        v = w / nw;
        let ray = (v.transpose() * &g * &v)[(0, 0)];
        if (ray - prev).abs() <= 1e-8 * ray.abs().max(1e-300) {
            return ray.max(0.0).sqrt();
        }
        prev = ray;
    }
    prev.max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_sym(rng: &mut impl Rng, n: usize) -> SymMatrix {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = rng.gen_range(-1.0..1.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        SymMatrix::new(m, "rand")
    }

    #[test]
    fn inertia_diagonal() {
        let m = SymMatrix::from_rows(&[&[-1.0, 0.0, 0.0], &[0.0, 0.0, 0.0], &[0.0, 0.0, 2.0]]);
        let i = ldlt_inertia(&m, DEFAULT_ZERO_TOL).unwrap();
        assert_eq!((i.n_minus, i.n_zero, i.n_plus), (1, 1, 1));
    }

    #[test]
    fn inertia_forces_2x2_pivot() {
        let m = SymMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let i = ldlt_inertia(&m, DEFAULT_ZERO_TOL).unwrap();
        assert_eq!((i.n_minus, i.n_zero, i.n_plus), (1, 0, 1));
    }

    #[test]
    fn inertia_matches_eigs_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let m = random_sym(&mut rng, 12);
            let i = ldlt_inertia(&m, DEFAULT_ZERO_TOL).unwrap();
            let e = eigs(&m).unwrap().sign_counts(DEFAULT_ZERO_TOL);
            assert_eq!((i.n_minus, i.n_zero, i.n_plus), (e.n_minus, e.n_zero, e.n_plus));
        }
    }

    #[test]
    fn inertia_with_planted_kernel() {
        // S^T diag(-1,-1,0,0,1) S for random invertible S keeps inertia (2,2,1).
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                -1.0, -1.0, 0.0, 0.0, 1.0,
            ]));
            let s = DMatrix::from_fn(5, 5, |_, _| rng.gen_range(-1.0..1.0f64))
                + DMatrix::identity(5, 5) * 2.0;
            let m = SymMatrix::new(s.transpose() * d * s, "congruence");
            let i = ldlt_inertia(&m, 1e-12).unwrap();
            assert_eq!((i.n_minus, i.n_zero, i.n_plus), (2, 2, 1));
        }
    }

    #[test]
    fn congruence_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let m = random_sym(&mut rng, 9);
            let s = DMatrix::from_fn(9, 9, |_, _| rng.gen_range(-1.0..1.0f64))
                + DMatrix::identity(9, 9) * 3.0;
            let c = SymMatrix::new(s.transpose() * &m.data * s, "congruence");
            let i0 = ldlt_inertia(&m, DEFAULT_ZERO_TOL).unwrap();
            let i1 = ldlt_inertia(&c, DEFAULT_ZERO_TOL).unwrap();
            assert_eq!((i0.n_minus, i0.n_zero, i0.n_plus), (i1.n_minus, i1.n_zero, i1.n_plus));
        }
    }

    #[test]
    fn eigs_sorted_and_trivial_cases() {
        let m = SymMatrix::from_rows(&[&[3.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 2.0]]);
        let e = eigs(&m).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
        let one = SymMatrix::from_rows(&[&[-4.5]]);
        assert_eq!(eigs(&one).unwrap().values, vec![-4.5]);
    }

    #[test]
    fn eigs_second_difference_closed_form() {
        // Dirichlet second-difference matrix (1/h^2) tridiag(-1,2,-1) has
        // eigenvalues (4/h^2) sin^2(j pi h / 2).
        let n_cells = 64usize;
        let h = 1.0 / n_cells as f64;
        let n = n_cells - 1;
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 2.0 / (h * h);
            if i + 1 < n {
                m[(i, i + 1)] = -1.0 / (h * h);
                m[(i + 1, i)] = -1.0 / (h * h);
            }
        }
        let e = eigs(&SymMatrix::new(m, "second-difference")).unwrap();
        for j in 1..=n {
            let exact = (4.0 / (h * h)) * ((j as f64) * std::f64::consts::PI * h / 2.0).sin().powi(2);
            let got = e.values[j - 1];
            assert!((got - exact).abs() <= 1e-8 * exact.abs(), "j={j}: {got} vs {exact}");
        }
    }

    #[test]
    fn schur_hand_case_and_singular() {
        let a = SymMatrix::from_rows(&[&[2.0]]);
        let b = DMatrix::from_row_slice(1, 1, &[1.0]);
        let d = SymMatrix::from_rows(&[&[2.0]]);
        let s = schur_complement(&a, &b, &d).unwrap();
        assert!((s.data[(0, 0)] - 1.5).abs() < 1e-15);

        let a0 = SymMatrix::from_rows(&[&[0.0]]);
        assert!(matches!(schur_complement(&a0, &b, &d), Err(Error::ASingular)));
    }

    #[test]
    fn haynsworth_additivity_random_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let na = rng.gen_range(2..8);
            let nd = rng.gen_range(1..6);
            let a = {
                // Keep A comfortably invertible.
                let mut m = random_sym(&mut rng, na);
                for i in 0..na {
                    m.data[(i, i)] += if rng.gen_bool(0.5) { 3.0 } else { -3.0 };
                }
                m
            };
            let d = random_sym(&mut rng, nd);
            let b = DMatrix::from_fn(na, nd, |_, _| rng.gen_range(-1.0..1.0f64));
            let mut full = DMatrix::zeros(na + nd, na + nd);
            full.view_mut((0, 0), (na, na)).copy_from(&a.data);
            full.view_mut((0, na), (na, nd)).copy_from(&b);
            full.view_mut((na, 0), (nd, na)).copy_from(&b.transpose());
            full.view_mut((na, na), (nd, nd)).copy_from(&d.data);
            let full = SymMatrix::new(full, "block");
            let s = schur_complement(&a, &b, &d).unwrap();
            let i_full = ldlt_inertia(&full, DEFAULT_ZERO_TOL).unwrap();
            let i_a = ldlt_inertia(&a, DEFAULT_ZERO_TOL).unwrap();
            let i_s = ldlt_inertia(&s, DEFAULT_ZERO_TOL).unwrap();
            assert_eq!(i_full.n_minus, i_a.n_minus + i_s.n_minus);
            assert_eq!(i_full.n_plus, i_a.n_plus + i_s.n_plus);
        }
    }

    #[test]
    fn solve_basics_and_oracle() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]);
        let rhs = DMatrix::from_row_slice(2, 1, &[2.0, 4.0]);
        let x = solve(&a, &rhs).unwrap();
        assert!((x[(0, 0)] - 1.0).abs() < 1e-14 && (x[(1, 0)] - 1.0).abs() < 1e-14);

        let id = DMatrix::<f64>::identity(3, 3);
        let b = DMatrix::from_row_slice(3, 1, &[1.0, -2.0, 0.5]);
        assert_eq!(solve(&id, &b).unwrap(), b);

        // Random SPD vs eigendecomposition-based inverse.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = DMatrix::from_fn(20, 20, |_, _| rng.gen_range(-1.0..1.0f64));
        let spd = SymMatrix::new(&g * g.transpose() + DMatrix::identity(20, 20), "spd");
        let rhs = DMatrix::from_fn(20, 1, |_, _| rng.gen_range(-1.0..1.0f64));
        let x = solve(&spd.data, &rhs).unwrap();
        let e = eigs(&spd).unwrap();
        let mut inv = DMatrix::zeros(20, 20);
        for k in 0..20 {
            let v = e.vectors.column(k);
            inv += v * v.transpose() / e.values[k];
        }
        let x_oracle = inv * rhs;
        assert!((x - x_oracle).norm() < 1e-8);
    }

    #[test]
    fn spectral_norm_cases() {
        let d = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, -5.0]);
        assert!((spectral_norm(&d) - 5.0).abs() < 1e-7);

        let u = nalgebra::DVector::from_vec(vec![1.0, 2.0, 2.0]);
        let v = nalgebra::DVector::from_vec(vec![3.0, 4.0]);
        let m = &u * v.transpose();
        assert!((spectral_norm(&m) - u.norm() * v.norm()).abs() < 1e-7);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = DMatrix::from_fn(10, 10, |_, _| rng.gen_range(-1.0..1.0f64));
        let g = SymMatrix::new(m.transpose() * &m, "gram");
        let top = eigs(&g).unwrap().values.last().unwrap().max(0.0).sqrt();
        assert!((spectral_norm(&m) - top).abs() <= 1e-6 * top);
    }
}
