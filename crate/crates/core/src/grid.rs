//! Discrete domains: structured 1D/2D grids with boundary labels, separating
//! partitions, and periodic identifications.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outer boundary condition label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bc {
    Dirichlet,
    Neumann,
}

/// Per-side specification for rectangle/interval constructors. `Open` leaves
/// the side unlabeled so it can later be paired by `periodic_identification`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SideSpec {
    Dirichlet,
    Neumann,
    Open,
}

impl SideSpec {
    fn label(self) -> Option<Bc> {
        match self {
            SideSpec::Dirichlet => Some(Bc::Dirichlet),
            SideSpec::Neumann => Some(Bc::Neumann),
            SideSpec::Open => None,
        }
    }
}

/// Vertex set of a structured grid standing in for (M, ∂M, Σ_D ∪ Σ_N) with an
/// optional periodic identification of boundary faces.
#[derive(Debug, Clone)]
pub struct GridDomain {
    dim: usize,
    cells: [usize; 2],
    spacing: [f64; 2],
    mask: Vec<bool>,
    labels: Vec<Option<Bc>>,
    /// Pairs (Γ₁ vertex, Γ₂ = τ(Γ₁) vertex).
    pub periodic_pairs: Vec<(usize, usize)>,
}

impl GridDomain {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self, axis: usize) -> usize {
        self.cells[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.spacing[axis]
    }

    fn verts_axis(&self, axis: usize) -> usize {
        if axis < self.dim {
            self.cells[axis] + 1
        } else {
            1
        }
    }

    /// Total lattice vertex count (masked or not).
    pub fn n_lattice(&self) -> usize {
        self.verts_axis(0) * self.verts_axis(1)
    }

    pub fn vid(&self, ix: usize, iy: usize) -> usize {
        iy * self.verts_axis(0) + ix
    }

    pub fn coords_of(&self, v: usize) -> (usize, usize) {
        let w = self.verts_axis(0);
        (v % w, v / w)
    }

    pub fn pos_of(&self, v: usize) -> (f64, f64) {
        let (ix, iy) = self.coords_of(v);
        (ix as f64 * self.spacing[0], iy as f64 * self.spacing[1])
    }

    pub fn in_mask(&self, v: usize) -> bool {
        self.mask[v]
    }

    pub fn label(&self, v: usize) -> Option<Bc> {
        self.labels[v]
    }

    /// Relabel a vertex; used internally to impose auxiliary boundary
    /// conditions (e.g. Dirichlet on Γ₂ for the partial DtN map).
    pub(crate) fn set_label(&mut self, v: usize, label: Option<Bc>) {
        self.labels[v] = label;
    }

    /// In-mask and not eliminated by a Dirichlet label.
    pub fn is_free(&self, v: usize) -> bool {
        self.mask[v] && self.labels[v] != Some(Bc::Dirichlet)
    }

    pub fn vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_lattice()).filter(|&v| self.mask[v])
    }

    pub fn has_periodic(&self) -> bool {
        !self.periodic_pairs.is_empty()
    }

    pub fn is_paired(&self, v: usize) -> bool {
        self.periodic_pairs.iter().any(|&(a, b)| a == v || b == v)
    }

    /// In-mask lattice neighbors of `v`.
    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let (ix, iy) = self.coords_of(v);
        let mut out = Vec::with_capacity(4);
        if ix > 0 && self.mask[self.vid(ix - 1, iy)] {
            out.push(self.vid(ix - 1, iy));
        }
        if ix + 1 < self.verts_axis(0) && self.mask[self.vid(ix + 1, iy)] {
            out.push(self.vid(ix + 1, iy));
        }
        if self.dim == 2 {
            if iy > 0 && self.mask[self.vid(ix, iy - 1)] {
                out.push(self.vid(ix, iy - 1));
            }
            if iy + 1 < self.verts_axis(1) && self.mask[self.vid(ix, iy + 1)] {
                out.push(self.vid(ix, iy + 1));
            }
        }
        out
    }

    /// All in-mask lattice edges (v < w).
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for v in self.vertices() {
            for w in self.neighbors(v) {
                if v < w {
                    out.push((v, w));
                }
            }
        }
        out
    }

    /// A vertex is on the outer boundary if it sits on the lattice edge or has
    /// a masked-out lattice neighbor.
    pub fn is_outer(&self, v: usize) -> bool {
        if !self.mask[v] {
            return false;
        }
        let (ix, iy) = self.coords_of(v);
        if ix == 0 || ix + 1 == self.verts_axis(0) {
            return true;
        }
        if self.dim == 2 && (iy == 0 || iy + 1 == self.verts_axis(1)) {
            return true;
        }
        let mut missing = !self.mask[self.vid(ix - 1, iy)] || !self.mask[self.vid(ix + 1, iy)];
        if self.dim == 2 {
            missing |= !self.mask[self.vid(ix, iy - 1)] || !self.mask[self.vid(ix, iy + 1)];
        }
        missing
    }

    /// In-mask cells, each as the list of its corner vertex ids.
    pub fn cell_corners(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        if self.dim == 1 {
            for cx in 0..self.cells[0] {
                let (a, b) = (self.vid(cx, 0), self.vid(cx + 1, 0));
                if self.mask[a] && self.mask[b] {
                    out.push(vec![a, b]);
                }
            }
        } else {
            for cy in 0..self.cells[1] {
                for cx in 0..self.cells[0] {
                    let corners = vec![
                        self.vid(cx, cy),
                        self.vid(cx + 1, cy),
                        self.vid(cx, cy + 1),
                        self.vid(cx + 1, cy + 1),
                    ];
                    if corners.iter().all(|&c| self.mask[c]) {
                        out.push(corners);
                    }
                }
            }
        }
        out
    }

    /// Every outer vertex must carry a label or be periodically paired.
    pub fn validate_complete(&self) -> Result<()> {
        for v in self.vertices() {
            if self.is_outer(v) && self.labels[v].is_none() && !self.is_paired(v) {
                let (ix, iy) = self.coords_of(v);
                return Err(Error::InvalidInput(format!(
                    "outer vertex ({ix},{iy}) carries no boundary label and is not paired"
                )));
            }
        }
        Ok(())
    }

    fn validate_connected(&self) -> Result<()> {
        let n = self.n_lattice();
        let total = self.mask.iter().filter(|&&m| m).count();
        if total == 0 {
            return Err(Error::InvalidInput("empty mask".into()));
        }
        let start = (0..n).find(|&v| self.mask[v]).unwrap();
        let mut seen = vec![false; n];
        let mut stack = vec![start];
        seen[start] = true;
        let mut reached = 0;
        while let Some(v) = stack.pop() {
            reached += 1;
            for w in self.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        if reached != total {
            return Err(Error::Disconnected);
        }
        Ok(())
    }

    /// Vertices of a boundary face of the bounding box (in-mask only).
    pub fn face_vertices(&self, axis: usize, high: bool) -> Vec<usize> {
        let idx = if high { self.cells[axis] } else { 0 };
        let mut out = Vec::new();
        if axis == 0 {
            for iy in 0..self.verts_axis(1) {
                let v = self.vid(idx, iy);
                if self.mask[v] {
                    out.push(v);
                }
            }
        } else {
            for ix in 0..self.verts_axis(0) {
                let v = self.vid(ix, idx);
                if self.mask[v] {
                    out.push(v);
                }
            }
        }
        out
    }
}

/// 1D domain with n_cells+1 vertices and spacing length/n_cells.
pub fn build_interval(
    n_cells: usize,
    length: f64,
    bc_left: SideSpec,
    bc_right: SideSpec,
) -> Result<GridDomain> {
    if n_cells < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 cells, got {n_cells}")));
    }
    if !(length > 0.0) {
        return Err(Error::InvalidInput(format!("non-positive length {length}")));
    }
    let n = n_cells + 1;
    let mut labels = vec![None; n];
    labels[0] = bc_left.label();
    labels[n - 1] = bc_right.label();
    Ok(GridDomain {
        dim: 1,
        cells: [n_cells, 0],
        spacing: [length / n_cells as f64, 0.0],
        mask: vec![true; n],
        labels,
        periodic_pairs: Vec::new(),
    })
}

/// Full-mask rectangle. Sides are ordered left, right, bottom, top; corner
/// vertices take the label of the later side in that order.
pub fn build_rectangle(
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    sides: [SideSpec; 4],
) -> Result<GridDomain> {
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidInput(format!("degenerate rectangle {nx}x{ny}")));
    }
    if !(lx > 0.0) || !(ly > 0.0) {
        return Err(Error::InvalidInput("non-positive side length".into()));
    }
    let (wx, wy) = (nx + 1, ny + 1);
    let mut labels = vec![None; wx * wy];
    let vid = |ix: usize, iy: usize| iy * wx + ix;
    for iy in 0..wy {
        labels[vid(0, iy)] = sides[0].label();
        labels[vid(nx, iy)] = sides[1].label();
    }
    for ix in 0..wx {
        labels[vid(ix, 0)] = sides[2].label();
        labels[vid(ix, ny)] = sides[3].label();
    }
    // A corner on an Open side must stay open only if both of its sides are
    // open; the writes above already give labeled sides precedence except
    // when the open side comes later, so fix corners explicitly.
    for (ix, iy) in [(0, 0), (nx, 0), (0, ny), (nx, ny)] {
        let xside = if ix == 0 { sides[0] } else { sides[1] };
        let yside = if iy == 0 { sides[2] } else { sides[3] };
        labels[vid(ix, iy)] = xside.label().or(yside.label());
    }
    Ok(GridDomain {
        dim: 2,
        cells: [nx, ny],
        spacing: [lx / nx as f64, ly / ny as f64],
        mask: vec![true; wx * wy],
        labels,
        periodic_pairs: Vec::new(),
    })
}

/// Masked 2D domain with a uniform outer label. `mask[iy][ix]` marks vertex
/// (ix, iy) as in-domain; all rows must have equal length.
pub fn build_mask_domain(mask: &[Vec<bool>], h: f64, bc: Bc) -> Result<GridDomain> {
    if mask.len() < 2 || mask[0].len() < 2 {
        return Err(Error::InvalidInput("mask must be at least 2x2 vertices".into()));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidInput("non-positive spacing".into()));
    }
    let wy = mask.len();
    let wx = mask[0].len();
    if mask.iter().any(|row| row.len() != wx) {
        return Err(Error::InvalidInput("ragged mask".into()));
    }
    let mut flat = vec![false; wx * wy];
    for (iy, row) in mask.iter().enumerate() {
        for (ix, &m) in row.iter().enumerate() {
            flat[iy * wx + ix] = m;
        }
    }
    let mut domain = GridDomain {
        dim: 2,
        cells: [wx - 1, wy - 1],
        spacing: [h, h],
        mask: flat,
        labels: vec![None; wx * wy],
        periodic_pairs: Vec::new(),
    };
    domain.validate_connected()?;
    for v in 0..domain.n_lattice() {
        if domain.is_outer(v) {
            domain.labels[v] = Some(bc);
        }
    }
    Ok(domain)
}

/// Pair the two faces of `axis` by translation, producing the quotient
/// identification τ: Γ₁ → Γ₂. The faces must be open (unlabeled) away from
/// corners shared with a labeled transverse side.
pub fn periodic_identification(domain: &GridDomain, axis: usize) -> Result<GridDomain> {
    if axis >= domain.dim {
        return Err(Error::InvalidInput(format!("axis {axis} out of range")));
    }
    let low = domain.face_vertices(axis, false);
    let high = domain.face_vertices(axis, true);
    if low.len() != high.len() {
        return Err(Error::InvalidInput("face vertex counts differ".into()));
    }
    if low.is_empty() {
        return Err(Error::EmptyInterface);
    }
    let is_corner = |v: usize| {
        let (ix, iy) = domain.coords_of(v);
        domain.dim == 2
            && (ix == 0 || ix == domain.cells(0))
            && (iy == 0 || iy == domain.cells(1))
    };
    for &v in low.iter().chain(high.iter()) {
        if domain.label(v).is_some() && !is_corner(v) {
            return Err(Error::FaceAlreadyLabeled);
        }
        if domain.is_paired(v) {
            let other = domain.face_vertices(axis, true);
            // Already paired along this axis is an error; cross-axis corner
            // pairing (torus) is fine.
            if low.contains(&v) && other.contains(&v) {
                return Err(Error::FaceAlreadyLabeled);
            }
        }
    }
    if domain.dim == 1 && (domain.label(low[0]).is_some() || domain.label(high[0]).is_some()) {
        return Err(Error::FaceAlreadyLabeled);
    }
    let mut out = domain.clone();
    for (&a, &b) in low.iter().zip(high.iter()) {
        if !out.periodic_pairs.contains(&(a, b)) {
            out.periodic_pairs.push((a, b));
        }
    }
    Ok(out)
}

/// Labeling of free vertices into Ω₁ / Σ / Ω₂.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Omega1,
    Sigma,
    Omega2,
}

/// A vertex separator realizing the separating hypersurface. Only
/// free (non-eliminated) vertices carry a side label.
#[derive(Debug, Clone)]
pub struct Partition {
    pub side: Vec<Option<Side>>,
    /// Σ vertices, in grid order.
    pub sigma: Vec<usize>,
}

impl Partition {
    /// Swap the Ω₁/Ω₂ roles, leaving Σ fixed.
    pub fn swapped(&self) -> Partition {
        Partition {
            side: self
                .side
                .iter()
                .map(|s| {
                    s.map(|s| match s {
                        Side::Omega1 => Side::Omega2,
                        Side::Omega2 => Side::Omega1,
                        Side::Sigma => Side::Sigma,
                    })
                })
                .collect(),
            sigma: self.sigma.clone(),
        }
    }
}

/// Separator invariant: every free vertex is labeled, Σ avoids ∂M, and no
/// grid edge joins Ω₁ directly to Ω₂.
pub fn check_separator(domain: &GridDomain, partition: &Partition) -> Result<()> {
    for v in domain.vertices() {
        if domain.is_free(v) && partition.side[v].is_none() {
            return Err(Error::InvalidInput(format!("free vertex {v} has no side label")));
        }
    }
    for &s in &partition.sigma {
        if domain.label(s).is_some() || domain.is_paired(s) {
            return Err(Error::SigmaTouchesBoundary);
        }
        if partition.side[s] != Some(Side::Sigma) {
            return Err(Error::InvalidInput("sigma list and side labels disagree".into()));
        }
    }
    for (v, w) in domain.edges() {
        if let (Some(a), Some(b)) = (partition.side[v], partition.side[w]) {
            if matches!(
                (a, b),
                (Side::Omega1, Side::Omega2) | (Side::Omega2, Side::Omega1)
            ) {
                return Err(Error::InvalidInput(format!(
                    "edge {v}--{w} joins Omega1 directly to Omega2"
                )));
            }
        }
    }
    Ok(())
}

/// Split along the grid line `coordinate[axis] == index`. Σ is the set of
/// unlabeled in-mask vertices on the line; line vertices that land on ∂M must
/// be Dirichlet (they are eliminated and keep their outer label).
pub fn partition_by_line(domain: &GridDomain, axis: usize, index: usize) -> Result<Partition> {
    if axis >= domain.dim {
        return Err(Error::InvalidInput(format!("axis {axis} out of range")));
    }
    if index == 0 || index >= domain.cells(axis) {
        return Err(Error::InvalidInput(format!(
            "line index {index} not strictly inside the domain"
        )));
    }
    let n = domain.n_lattice();
    let mut side = vec![None; n];
    let mut sigma = Vec::new();
    for v in domain.vertices() {
        let c = domain.coords_of(v);
        let coord = if axis == 0 { c.0 } else { c.1 };
        if coord == index {
            match domain.label(v) {
                Some(Bc::Dirichlet) => {} // eliminated; keeps the outer label
                Some(Bc::Neumann) => return Err(Error::SigmaTouchesBoundary),
                None if domain.is_paired(v) => return Err(Error::SigmaTouchesBoundary),
                None => {
                    side[v] = Some(Side::Sigma);
                    sigma.push(v);
                }
            }
        } else if domain.is_free(v) {
            side[v] = Some(if coord < index { Side::Omega1 } else { Side::Omega2 });
        }
    }
    if sigma.is_empty() {
        return Err(Error::EmptyInterface);
    }
    let partition = Partition { side, sigma };
    check_separator(domain, &partition)?;
    Ok(partition)
}

/// Nodal partition: Ω₁ = {values > 0}, Ω₂ = {values < 0}, Σ = near-zero
/// vertices. Requires the zero set to be grid-aligned: any sign change must
/// pass through a vertex with |value| <= zero_tol.
pub fn partition_by_sign(
    domain: &GridDomain,
    values: &[f64],
    zero_tol: f64,
) -> Result<Partition> {
    let n = domain.n_lattice();
    if values.len() != n {
        return Err(Error::InvalidInput(format!(
            "values length {} != lattice size {n}",
            values.len()
        )));
    }
    let mut side = vec![None; n];
    let mut sigma = Vec::new();
    for v in domain.vertices() {
        if !domain.is_free(v) {
            continue;
        }
        if values[v].abs() <= zero_tol {
            if domain.label(v).is_some() || domain.is_paired(v) {
                return Err(Error::SigmaTouchesBoundary);
            }
            side[v] = Some(Side::Sigma);
            sigma.push(v);
        } else if values[v] > 0.0 {
            side[v] = Some(Side::Omega1);
        } else {
            side[v] = Some(Side::Omega2);
        }
    }
    for (v, w) in domain.edges() {
        if let (Some(a), Some(b)) = (side[v], side[w]) {
            if matches!(
                (a, b),
                (Side::Omega1, Side::Omega2) | (Side::Omega2, Side::Omega1)
            ) {
                return Err(Error::SignChangeWithoutSeparator(v, w));
            }
        }
    }
    let partition = Partition { side, sigma };
    check_separator(domain, &partition)?;
    Ok(partition)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_basics() {
        let d = build_interval(4, 1.0, SideSpec::Dirichlet, SideSpec::Dirichlet).unwrap();
        assert_eq!(d.n_lattice(), 5);
        assert!((d.spacing(0) - 0.25).abs() < 1e-15);
        assert_eq!(d.label(0), Some(Bc::Dirichlet));
        assert_eq!(d.label(4), Some(Bc::Dirichlet));
        assert!(d.validate_complete().is_ok());

        let tiny = build_interval(2, 1.0, SideSpec::Neumann, SideSpec::Neumann).unwrap();
        assert_eq!(tiny.n_lattice(), 3);

        assert!(build_interval(1, 1.0, SideSpec::Dirichlet, SideSpec::Dirichlet).is_err());
        assert!(build_interval(4, -1.0, SideSpec::Dirichlet, SideSpec::Dirichlet).is_err());
    }

    #[test]
    fn rectangle_counts() {
        let d = build_rectangle(4, 4, 1.0, 1.0, [SideSpec::Dirichlet; 4]).unwrap();
        assert_eq!(d.n_lattice(), 25);
        let interior = d
            .vertices()
            .filter(|&v| d.is_free(v))
            .count();
        assert_eq!(interior, 9);
        assert!(build_rectangle(1, 4, 1.0, 1.0, [SideSpec::Dirichlet; 4]).is_err());
    }

    #[test]
    fn rectangle_open_sides_incomplete_until_identified() {
        let d = build_rectangle(
            8,
            8,
            1.0,
            1.0,
            [SideSpec::Dirichlet, SideSpec::Open, SideSpec::Dirichlet, SideSpec::Open],
        )
        .unwrap();
        assert!(d.validate_complete().is_err());
    }

    #[test]
    fn mask_domains() {
        let n = 4;
        let mut mask = vec![vec![true; 2 * n + 1]; 2 * n + 1];
        for row in mask.iter_mut().take(2 * n + 1).skip(n + 1) {
            for m in row.iter_mut().take(2 * n + 1).skip(n + 1) {
                *m = false;
            }
        }
        let l_shape = build_mask_domain(&mask, 0.1, Bc::Dirichlet).unwrap();
        assert!(l_shape.validate_complete().is_ok());

        // Two blocks joined by a one-vertex-wide neck.
        let mut neck = vec![vec![false; 9]; 3];
        for row in neck.iter_mut() {
            for (ix, m) in row.iter_mut().enumerate() {
                *m = ix <= 2 || ix >= 6;
            }
        }
        for (ix, m) in neck[1].iter_mut().enumerate() {
            if (3..6).contains(&ix) {
                *m = true;
            }
        }
        assert!(build_mask_domain(&neck, 0.1, Bc::Dirichlet).is_ok());

        // Two disjoint blocks.
        let mut split = vec![vec![false; 9]; 3];
        for row in split.iter_mut() {
            for (ix, m) in row.iter_mut().enumerate() {
                *m = ix <= 2 || ix >= 6;
            }
        }
        assert!(matches!(
            build_mask_domain(&split, 0.1, Bc::Dirichlet),
            Err(Error::Disconnected)
        ));
    }

    #[test]
    fn line_partition_midpoint() {
        let d = build_interval(8, 2.0, SideSpec::Dirichlet, SideSpec::Dirichlet).unwrap();
        let p = partition_by_line(&d, 0, 4).unwrap();
        assert_eq!(p.sigma, vec![4]);
        assert!((d.pos_of(4).0 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn line_partition_rectangle_endpoint_conventions() {
        // Dirichlet outer labels: line endpoints on the boundary are
        // eliminated and excluded from Sigma.
        let d = build_rectangle(6, 4, 1.0, 1.0, [SideSpec::Dirichlet; 4]).unwrap();
        let p = partition_by_line(&d, 0, 3).unwrap();
        assert_eq!(p.sigma.len(), 3);

        // Neumann outer labels: the endpoints stay free and would break the
        // separator, so the split is rejected.
        let dn = build_rectangle(6, 4, 1.0, 1.0, [SideSpec::Neumann; 4]).unwrap();
        assert!(matches!(
            partition_by_line(&dn, 0, 3),
            Err(Error::SigmaTouchesBoundary)
        ));

        assert!(partition_by_line(&d, 0, 0).is_err());
        assert!(partition_by_line(&d, 0, 6).is_err());
    }

    #[test]
    fn sign_partition() {
        let d = build_interval(2, 1.0, SideSpec::Neumann, SideSpec::Neumann).unwrap();
        let p = partition_by_sign(&d, &[1.0, 0.0, -1.0], 1e-12).unwrap();
        assert_eq!(p.sigma, vec![1]);
        assert_eq!(p.side[0], Some(Side::Omega1));
        assert_eq!(p.side[2], Some(Side::Omega2));

        assert!(matches!(
            partition_by_sign(&d, &[1.0, 0.5, -1.0], 1e-8),
            Err(Error::SignChangeWithoutSeparator(_, _))
        ));
    }

    #[test]
    fn no_omega1_omega2_edges_after_any_partition() {
        let d = build_rectangle(8, 6, 1.0, 0.75, [SideSpec::Dirichlet; 4]).unwrap();
        let p = partition_by_line(&d, 1, 3).unwrap();
        for (v, w) in d.edges() {
            let pair = (p.side[v], p.side[w]);
            assert!(!matches!(
                pair,
                (Some(Side::Omega1), Some(Side::Omega2))
                    | (Some(Side::Omega2), Some(Side::Omega1))
            ));
        }
    }

    #[test]
    fn swapped_partition_swaps_sides_keeps_sigma() {
        let d = build_rectangle(6, 6, 1.0, 1.0, [SideSpec::Dirichlet; 4]).unwrap();
        let p = partition_by_line(&d, 0, 3).unwrap();
        let q = p.swapped();
        assert_eq!(p.sigma, q.sigma);
        for v in 0..d.n_lattice() {
            match p.side[v] {
                Some(Side::Omega1) => assert_eq!(q.side[v], Some(Side::Omega2)),
                Some(Side::Omega2) => assert_eq!(q.side[v], Some(Side::Omega1)),
                other => assert_eq!(q.side[v], other),
            }
        }
        assert!(check_separator(&d, &q).is_ok());
    }

    #[test]
    fn periodic_circle_and_torus() {
        let i = build_interval(8, 1.0, SideSpec::Open, SideSpec::Open).unwrap();
        let circle = periodic_identification(&i, 0).unwrap();
        assert_eq!(circle.periodic_pairs, vec![(0, 8)]);
        assert!(circle.validate_complete().is_ok());

        let labeled = build_interval(8, 1.0, SideSpec::Dirichlet, SideSpec::Open).unwrap();
        assert!(matches!(
            periodic_identification(&labeled, 0),
            Err(Error::FaceAlreadyLabeled)
        ));

        let r = build_rectangle(4, 4, 1.0, 1.0, [SideSpec::Open; 4]).unwrap();
        let cyl = periodic_identification(&r, 0).unwrap();
        let torus = periodic_identification(&cyl, 1).unwrap();
        assert!(torus.validate_complete().is_ok());
        // Quotient classes: union-find over the pairs.
        let n = torus.n_lattice();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut Vec<usize>, v: usize) -> usize {
            if p[v] != v {
                let r = find(p, p[v]);
                p[v] = r;
            }
            p[v]
        }
        for &(a, b) in &torus.periodic_pairs {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
            }
        }
        let classes: std::collections::HashSet<usize> =
            (0..n).map(|v| find(&mut parent, v)).collect();
        assert_eq!(classes.len(), 16); // 4x4 torus

        // Unrolling the circle reproduces the original vertex count.
        assert_eq!(circle.n_lattice() - circle.periodic_pairs.len(), 8);
    }
}
