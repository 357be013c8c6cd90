//! Scenario engine: strict configs, named verification scenarios mapping
//! one-to-one onto the index identities, randomized suites, and convergence
//! studies. Reports are structured JSON with stable field order; every
//! identity check compares independently computed sides.

use std::fmt;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assemble::{
    assemble_blocks, assemble_boundary_blocks, assemble_global, realize, BlockOperator, Potential,
    Realization,
};
use crate::dtn::{
    default_c_grid, dtn_side, dtn_sum, partial_parts, periodic_parts, perturb_certificate, Face,
};
use crate::error::{Error, Result};
use crate::grid::{
    build_interval, build_mask_domain, build_rectangle, partition_by_line,
    periodic_identification, Bc, GridDomain, Partition, SideSpec,
};
use crate::linalg::{ldlt_inertia, Inertia, SymMatrix, DEFAULT_ZERO_TOL};
use crate::maslov::{
    homotopy_boundary_check, maslov_beta, maslov_lambda_sweep, robin_sweep,
};
use crate::nodal::{courant_check, nodal_deficiency_dtn};

/// Scenario names, one per verified identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Mormas,
    Dnbracket,
    Friedlander,
    #[serde(rename = "doubled-1d")]
    Doubled1d,
    Perturb,
    Nodal,
    Periodic,
    Robin,
    Homotopy,
    LambdaSweep,
}

impl Scenario {
    pub fn parse(name: &str) -> Result<Scenario> {
        Ok(match name {
            "mormas" => Scenario::Mormas,
            "dnbracket" => Scenario::Dnbracket,
            "friedlander" => Scenario::Friedlander,
            "doubled-1d" => Scenario::Doubled1d,
            "perturb" => Scenario::Perturb,
            "nodal" => Scenario::Nodal,
            "periodic" => Scenario::Periodic,
            "robin" => Scenario::Robin,
            "homotopy" => Scenario::Homotopy,
            "lambda-sweep" => Scenario::LambdaSweep,
            other => return Err(Error::Config(format!("unknown scenario '{other}'"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Mormas => "mormas",
            Scenario::Dnbracket => "dnbracket",
            Scenario::Friedlander => "friedlander",
            Scenario::Doubled1d => "doubled-1d",
            Scenario::Perturb => "perturb",
            Scenario::Nodal => "nodal",
            Scenario::Periodic => "periodic",
            Scenario::Robin => "robin",
            Scenario::Homotopy => "homotopy",
            Scenario::LambdaSweep => "lambda-sweep",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Domain description; unknown keys are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainSpec {
    Interval {
        cells: usize,
        length: f64,
        /// left, right: "dirichlet" | "neumann" | "open".
        bc: [String; 2],
        #[serde(default)]
        periodic: bool,
    },
    Rectangle {
        cells: [usize; 2],
        lengths: [f64; 2],
        /// left, right, bottom, top.
        sides: [String; 4],
        #[serde(default)]
        periodic_axes: Vec<usize>,
    },
    Lshape { cells: usize, length: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialSpec {
    Constant { value: f64 },
    /// Lattice-indexed values.
    PerVertex { values: Vec<f64> },
    /// Per-vertex uniform in [−v_max, v_max], drawn from the scenario seed.
    Random { v_max: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionSpec {
    #[serde(default)]
    pub axis: usize,
    /// Grid line index; defaults to the midline.
    #[serde(default)]
    pub index: Option<usize>,
}

impl Default for PartitionSpec {
    fn default() -> Self {
        PartitionSpec { axis: 0, index: None }
    }
}

fn default_zero_tol() -> f64 {
    DEFAULT_ZERO_TOL
}
fn default_t_grid() -> usize {
    512
}
fn default_lambda_grid() -> usize {
    64
}
fn default_k_max() -> usize {
    8
}
fn default_theta_min() -> f64 {
    1e-4
}
fn default_theta_count() -> usize {
    40
}
fn default_perturb_amp() -> f64 {
    0.01
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    #[serde(default = "default_zero_tol")]
    pub zero_tol: f64,
    #[serde(default = "default_t_grid")]
    pub t_grid: usize,
    /// Nodal ε override; default is half the spectral gap.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Spectral shift λ of the assembled operator.
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "default_lambda_grid")]
    pub lambda_grid: usize,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default = "default_theta_min")]
    pub theta_min: f64,
    #[serde(default = "default_theta_count")]
    pub theta_count: usize,
    /// Relative size of the side-2 potential perturbation in the perturb
    /// scenario; 0 gives an exactly doubled pair.
    #[serde(default = "default_perturb_amp")]
    pub perturb_amp: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            zero_tol: default_zero_tol(),
            t_grid: default_t_grid(),
            epsilon: None,
            seed: 0,
            lambda: 0.0,
            lambda_grid: default_lambda_grid(),
            k_max: default_k_max(),
            theta_min: default_theta_min(),
            theta_count: default_theta_count(),
            perturb_amp: default_perturb_amp(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub domain: DomainSpec,
    pub potential: PotentialSpec,
    #[serde(default)]
    pub partition: PartitionSpec,
    #[serde(default)]
    pub numerics: Numerics,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<ScenarioConfig> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Built-in defaults per scenario, used when no config file is given.
    pub fn default_for(scenario: Scenario) -> ScenarioConfig {
        let dirichlet_rect = DomainSpec::Rectangle {
            cells: [20, 16],
            lengths: [1.0, 0.8],
            sides: ["dirichlet".into(), "dirichlet".into(), "dirichlet".into(), "dirichlet".into()],
            periodic_axes: vec![],
        };
        let (domain, potential, partition) = match scenario {
            Scenario::Doubled1d => (
                DomainSpec::Interval {
                    cells: 2000,
                    length: 2.0,
                    bc: ["dirichlet".into(), "neumann".into()],
                    periodic: false,
                },
                PotentialSpec::Constant { value: -1.44 },
                PartitionSpec { axis: 0, index: Some(1000) },
            ),
            Scenario::Friedlander | Scenario::Robin => (
                DomainSpec::Rectangle {
                    cells: [16, 12],
                    lengths: [1.0, 0.8],
                    sides: ["neumann".into(), "neumann".into(), "neumann".into(), "neumann".into()],
                    periodic_axes: vec![],
                },
                PotentialSpec::Constant { value: -50.0 },
                PartitionSpec::default(),
            ),
            Scenario::Nodal => (
                DomainSpec::Rectangle {
                    cells: [60, 36],
                    lengths: [1.0, 0.6],
                    sides: ["dirichlet".into(), "dirichlet".into(), "dirichlet".into(), "dirichlet".into()],
                    periodic_axes: vec![],
                },
                PotentialSpec::Constant { value: 0.0 },
                PartitionSpec::default(),
            ),
            Scenario::Periodic => (
                DomainSpec::Interval {
                    cells: 600,
                    length: 1.0,
                    bc: ["open".into(), "open".into()],
                    periodic: true,
                },
                PotentialSpec::Constant { value: -50.0 },
                PartitionSpec::default(),
            ),
            Scenario::LambdaSweep => (
                DomainSpec::Interval {
                    cells: 400,
                    length: 1.0,
                    bc: ["dirichlet".into(), "dirichlet".into()],
                    periodic: false,
                },
                PotentialSpec::Constant { value: -50.0 },
                PartitionSpec::default(),
            ),
            _ => (
                dirichlet_rect,
                PotentialSpec::Random { v_max: 200.0 },
                PartitionSpec { axis: 0, index: Some(10) },
            ),
        };
        ScenarioConfig {
            scenario,
            domain,
            potential,
            partition,
            numerics: Numerics::default(),
        }
    }
}

fn side_spec(name: &str) -> Result<SideSpec> {
    Ok(match name {
        "dirichlet" => SideSpec::Dirichlet,
        "neumann" => SideSpec::Neumann,
        "open" => SideSpec::Open,
        other => return Err(Error::Config(format!("unknown boundary label '{other}'"))),
    })
}

pub fn build_domain(spec: &DomainSpec) -> Result<GridDomain> {
    match spec {
        DomainSpec::Interval { cells, length, bc, periodic } => {
            let d = build_interval(*cells, *length, side_spec(&bc[0])?, side_spec(&bc[1])?)?;
            if *periodic {
                periodic_identification(&d, 0)
            } else {
                Ok(d)
            }
        }
        DomainSpec::Rectangle { cells, lengths, sides, periodic_axes } => {
            let s = [
                side_spec(&sides[0])?,
                side_spec(&sides[1])?,
                side_spec(&sides[2])?,
                side_spec(&sides[3])?,
            ];
            let mut d = build_rectangle(cells[0], cells[1], lengths[0], lengths[1], s)?;
            for &axis in periodic_axes {
                d = periodic_identification(&d, axis)?;
            }
            Ok(d)
        }
        DomainSpec::Lshape { cells, length } => {
            let n = *cells;
            if n < 2 || n % 2 != 0 {
                return Err(Error::Config("lshape cell count must be even and >= 2".into()));
            }
            let mut mask = vec![vec![true; n + 1]; n + 1];
            for row in mask.iter_mut().skip(n / 2 + 1) {
                for m in row.iter_mut().skip(n / 2 + 1) {
                    *m = false;
                }
            }
            build_mask_domain(&mask, length / n as f64, Bc::Dirichlet)
        }
    }
}

pub fn build_potential(spec: &PotentialSpec, domain: &GridDomain, seed: u64) -> Result<Potential> {
    Ok(match spec {
        PotentialSpec::Constant { value } => Potential::Constant(*value),
        PotentialSpec::PerVertex { values } => {
            if values.len() != domain.n_lattice() {
                return Err(Error::Config(format!(
                    "potential has {} values, lattice has {}",
                    values.len(),
                    domain.n_lattice()
                )));
            }
            Potential::PerVertex(values.clone())
        }
        PotentialSpec::Random { v_max } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Potential::PerVertex(
                (0..domain.n_lattice()).map(|_| rng.gen_range(-v_max..*v_max)).collect(),
            )
        }
    })
}

fn potential_scale(spec: &PotentialSpec) -> f64 {
    match spec {
        PotentialSpec::Constant { value } => value.abs().max(1.0),
        PotentialSpec::PerVertex { values } => {
            values.iter().fold(1.0f64, |a, &v| a.max(v.abs()))
        }
        PotentialSpec::Random { v_max } => v_max.max(1.0),
    }
}

pub fn build_partition_for(domain: &GridDomain, spec: &PartitionSpec) -> Result<Partition> {
    let index = spec.index.unwrap_or(domain.cells(spec.axis) / 2);
    partition_by_line(domain, spec.axis, index)
}

/// One computed inertia, keyed by realization name.
#[derive(Debug, Clone, Serialize)]
pub struct IndexEntry {
    pub name: String,
    pub mor: usize,
    pub mor0: usize,
    pub n_zero: usize,
}

impl IndexEntry {
    fn new(name: impl Into<String>, i: &Inertia) -> Self {
        IndexEntry { name: name.into(), mor: i.mor(), mor0: i.mor0(), n_zero: i.n_zero }
    }
}

/// One identity check; `relation` is "eq", "le", or "lt".
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub lhs: i64,
    pub rhs: i64,
    pub relation: String,
    pub pass: bool,
}

impl Check {
    fn eq(name: impl Into<String>, lhs: i64, rhs: i64) -> Check {
        Check { name: name.into(), lhs, rhs, relation: "eq".into(), pass: lhs == rhs }
    }

    fn le(name: impl Into<String>, lhs: i64, rhs: i64) -> Check {
        Check { name: name.into(), lhs, rhs, relation: "le".into(), pass: lhs <= rhs }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub version: String,
    pub config: ScenarioConfig,
    pub indices: Vec<IndexEntry>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub indeterminate: bool,
    pub pass: bool,
    /// Normalized to 0 when reports are compared byte-for-byte.
    pub wall_time_ms: u64,
}

struct Body {
    indices: Vec<IndexEntry>,
    checks: Vec<Check>,
    notes: Vec<String>,
}

impl Body {
    fn new() -> Body {
        Body { indices: vec![], checks: vec![], notes: vec![] }
    }
}

/// Retry a shift-dependent computation with seeded λ jitter of ±1e−6·scale
/// when the inertia engine reports a guard-band pivot.
fn with_jitter<T>(seed: u64, scale: f64, f: impl Fn(f64) -> Result<T>) -> Result<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let mut jitter = 0.0;
    let mut last = Error::Indeterminate(0.0);
    for _ in 0..6 {
        match f(jitter) {
            Err(Error::Indeterminate(x)) => {
                last = Error::Indeterminate(x);
                jitter = rng.gen_range(-1.0..1.0) * 1e-6 * scale;
            }
            other => return other,
        }
    }
    Err(last)
}

fn inertia_of(m: &SymMatrix, zero_tol: f64) -> Result<Inertia> {
    ldlt_inertia(m, zero_tol)
}

fn blocks_at(cfg: &ScenarioConfig, jitter: f64) -> Result<(GridDomain, Potential, BlockOperator)> {
    let domain = build_domain(&cfg.domain)?;
    let v = build_potential(&cfg.potential, &domain, cfg.numerics.seed)?;
    let partition = build_partition_for(&domain, &cfg.partition)?;
    let blocks = assemble_blocks(&domain, &v, &partition, cfg.numerics.lambda + jitter)?;
    Ok((domain, v, blocks))
}

fn scenario_mormas(cfg: &ScenarioConfig) -> Result<Body> {
    let tol = cfg.numerics.zero_tol;
    with_jitter(cfg.numerics.seed, potential_scale(&cfg.potential), |jit| {
        let (_, _, blocks) = blocks_at(cfg, jit)?;
        let g = inertia_of(&realize(&blocks, Realization::G), tol)?;
        let n1 = inertia_of(&realize(&blocks, Realization::N1), tol)?;
        let d2 = inertia_of(&realize(&blocks, Realization::D2), tol)?;
        let mas = maslov_beta(&blocks)?;
        let mut b = Body::new();
        b.indices.push(IndexEntry::new("L^G", &g));
        b.indices.push(IndexEntry::new("L^N_1", &n1));
        b.indices.push(IndexEntry::new("L^D_2", &d2));
        b.checks.push(Check::eq(
            "mormas: Mor(L^G) = Mor(L^N_1) + Mor(L^D_2) + Mas",
            g.mor() as i64,
            n1.mor() as i64 + d2.mor() as i64 + mas.index,
        ));
        b.checks.push(Check::eq(
            "mormas (strict-Mor index variant)",
            g.mor() as i64,
            n1.mor() as i64 + d2.mor() as i64 + mas.index_strict,
        ));
        if let Some(trace) = mas.trace_index {
            b.checks.push(Check::eq("crossing trace agrees with endpoint formula", trace, mas.index));
        } else {
            b.notes.push("crossing trace unreliable (endpoint kernel or degenerate crossing); endpoint formula used".into());
        }
        b.notes.push(format!(
            "Mas = {} (endpoint Mor0 formula), {} (strict), {} crossings traced",
            mas.index,
            mas.index_strict,
            mas.crossings.len()
        ));
        Ok(b)
    })
}

fn scenario_dnbracket(cfg: &ScenarioConfig) -> Result<Body> {
    let tol = cfg.numerics.zero_tol;
    with_jitter(cfg.numerics.seed, potential_scale(&cfg.potential), |jit| {
        let (_, _, blocks) = blocks_at(cfg, jit)?;
        let g = inertia_of(&realize(&blocks, Realization::G), tol)?;
        let d1 = inertia_of(&realize(&blocks, Realization::D1), tol)?;
        let d2 = inertia_of(&realize(&blocks, Realization::D2), tol)?;
        let n1 = inertia_of(&realize(&blocks, Realization::N1), tol)?;
        let n2 = inertia_of(&realize(&blocks, Realization::N2), tol)?;
        let sum = dtn_sum(&blocks)?;
        let ls = inertia_of(&sum.matrix, tol)?;
        let mut b = Body::new();
        for (name, i) in [
            ("L^G", &g),
            ("L^D_1", &d1),
            ("L^D_2", &d2),
            ("L^N_1", &n1),
            ("L^N_2", &n2),
            ("Lambda_1+Lambda_2", &ls),
        ] {
            b.indices.push(IndexEntry::new(name, i));
        }
        b.checks.push(Check::eq(
            "dnbracket: Mor(L^G) = Mor(L^D_1) + Mor(L^D_2) + Mor(Lambda_1+Lambda_2)",
            g.mor() as i64,
            d1.mor() as i64 + d2.mor() as i64 + ls.mor() as i64,
        ));
        b.checks.push(Check::le(
            "bracket lower: Mor(L^D_1) + Mor(L^D_2) <= Mor(L^G)",
            d1.mor() as i64 + d2.mor() as i64,
            g.mor() as i64,
        ));
        b.checks.push(Check::le(
            "bracket upper: Mor(L^G) <= Mor(L^N_1) + Mor(L^N_2)",
            g.mor() as i64,
            n1.mor() as i64 + n2.mor() as i64,
        ));
        if ls.mor() > 0 {
            b.checks.push(Check::le(
                "bracket strictness: Mor(L^D_1) + Mor(L^D_2) < Mor(L^G) since Mor(Lambda_1+Lambda_2) > 0",
                d1.mor() as i64 + d2.mor() as i64 + 1,
                g.mor() as i64,
            ));
        }
        b.notes.push(format!(
            "Mor0 variant: Mor0(L^G) = {}, Mor0(L^D_1)+Mor0(L^D_2)+Mor0(Lambda_1+Lambda_2) = {}",
            g.mor0(),
            d1.mor0() + d2.mor0() + ls.mor0()
        ));
        Ok(b)
    })
}

fn scenario_friedlander(cfg: &ScenarioConfig) -> Result<Body> {
    let tol = cfg.numerics.zero_tol;
    with_jitter(cfg.numerics.seed, potential_scale(&cfg.potential), |jit| {
        let domain = build_domain(&cfg.domain)?;
        let v = build_potential(&cfg.potential, &domain, cfg.numerics.seed)?;
        let lambda = cfg.numerics.lambda + jit;
        let n = inertia_of(&assemble_global(&domain, &v, lambda)?, tol)?;
        let mut dir = domain.clone();
        for vx in 0..dir.n_lattice() {
            if dir.label(vx) == Some(Bc::Neumann) {
                dir.set_label(vx, Some(Bc::Dirichlet));
            }
        }
        let d = inertia_of(&assemble_global(&dir, &v, lambda)?, tol)?;
        let blocks = assemble_boundary_blocks(&domain, &v, lambda)?;
        let l = dtn_side(&blocks, 1)?;
        let li = inertia_of(&l.matrix, tol)?;
        let mut b = Body::new();
        b.indices.push(IndexEntry::new("L^N", &n));
        b.indices.push(IndexEntry::new("L^D", &d));
        b.indices.push(IndexEntry::new("Lambda", &li));
        b.checks.push(Check::eq(
            "friedlander (strict): Mor(L^N) - Mor(L^D) = Mor(Lambda)",
            n.mor() as i64 - d.mor() as i64,
            li.mor() as i64,
        ));
        let mor0_matches = n.mor() as i64 - d.mor() as i64 == li.mor0() as i64;
        b.notes.push(format!(
            "Mor0 variant: Mor(L^N) - Mor(L^D) = {} vs Mor0(Lambda) = {} ({}; dim ker Lambda = {})",
            n.mor() as i64 - d.mor() as i64,
            li.mor0(),
            if mor0_matches { "matches" } else { "differs" },
            li.n_zero
        ));
        Ok(b)
    })
}

fn scenario_doubled_1d(cfg: &ScenarioConfig) -> Result<Body> {
    let c = match cfg.potential {
        PotentialSpec::Constant { value } if value < 0.0 => -value,
        _ => return Err(Error::Config("doubled-1d needs a constant negative potential".into())),
    };
    let length = match cfg.domain {
        DomainSpec::Interval { length, .. } => length,
        _ => return Err(Error::Config("doubled-1d needs an interval domain".into())),
    };
    let mut b = scenario_mormas(cfg)?;
    // Continuum prediction for x = √C·ℓ/2: the pencil cot(x) + t²·(−tan(x))
    // crosses zero at t* = |cot x|, which lies in (0, 1) iff x mod π is in
    // (π/4, π/2) ∪ (π/2, 3π/4). The crossing is positive on the first arc
    // (matching traces a = b) and negative on the second (a = −b), so the
    // signed index is +1, −1, or 0. The unsigned indicator of Ccondition
    // (π/4 + nπ ≤ x ≤ π/2 + nπ) only sees the a = b branch; when the two
    // disagree we report it rather than reconcile.
    let x = c.sqrt() * length / 2.0;
    let frac = x.rem_euclid(std::f64::consts::PI);
    let expected = if (std::f64::consts::FRAC_PI_4..=std::f64::consts::FRAC_PI_2).contains(&frac)
    {
        1i64
    } else if (std::f64::consts::FRAC_PI_2..=0.75 * std::f64::consts::PI).contains(&frac) {
        -1
    } else {
        0
    };
    let unsigned_indicator =
        (std::f64::consts::FRAC_PI_4..=std::f64::consts::FRAC_PI_2).contains(&frac) as i64;
    let computed = with_jitter(cfg.numerics.seed, c, |jit| {
        let (_, _, blocks) = blocks_at(cfg, jit)?;
        maslov_beta(&blocks)
    })?;
    b.checks.push(Check::eq(
        "doubled-1d: Maslov index equals the signed crossing prediction",
        computed.index,
        expected,
    ));
    if expected != unsigned_indicator {
        b.notes.push(format!(
            "unsigned Ccondition indicator reads {unsigned_indicator} at x = {x:.4} but the a = -b crossing branch carries sign -1; signed index {expected} confirmed by Mor(L^G) - Mor(L^N_1) - Mor(L^D_2)"
        ));
    }
    if computed.index != 0 {
        if let Some(cr) = computed.crossings.first() {
            let t_star = (x.cos() / x.sin()).abs();
            let hit = (cr.t - t_star).abs() <= 1e-3;
            b.checks.push(Check::eq(
                "doubled-1d: crossing parameter within 1e-3 of |cot(sqrt(C) l / 2)|",
                hit as i64,
                1,
            ));
            b.notes.push(format!("crossing at t = {:.6}, continuum t* = {t_star:.6}", cr.t));
        }
    }
    Ok(b)
}

fn scenario_perturb(cfg: &ScenarioConfig) -> Result<Body> {
    let tol = cfg.numerics.zero_tol;
    with_jitter(cfg.numerics.seed, potential_scale(&cfg.potential), |jit| {
        let domain = build_domain(&cfg.domain)?;
        // Near-doubled potential: symmetric about the split, then a small
        // perturbation on side 2 so Λ₂ ≈ Λ₁.
        let axis = cfg.partition.axis;
        let index = cfg.partition.index.unwrap_or(domain.cells(axis) / 2);
        if 2 * index != domain.cells(axis) {
            return Err(Error::Config("perturb needs a symmetric split".into()));
        }
        let base = build_potential(&cfg.potential, &domain, cfg.numerics.seed)?;
        let scale = potential_scale(&cfg.potential);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.numerics.seed.wrapping_add(1));
        let mid = index as f64 * domain.spacing(axis);
        let vals: Vec<f64> = (0..domain.n_lattice())
            .map(|vx| {
                let (x, y) = domain.pos_of(vx);
                let c = if axis == 0 { x } else { y };
                // Mirror onto side 1 to symmetrize.
                let mirrored = if c > mid { 2.0 * mid - c } else { c };
                let (mx, my) = if axis == 0 { (mirrored, y) } else { (x, mirrored) };
                let ix = (mx / domain.spacing(0)).round() as usize;
                let iy = if domain.dim() == 2 { (my / domain.spacing(1)).round() as usize } else { 0 };
                let sym = base.at(domain.vid(ix, iy));
                let noise: f64 = rng.gen_range(-1.0..1.0);
                if c > mid { sym + cfg.numerics.perturb_amp * scale * noise } else { sym }
            })
            .collect();
        let v = Potential::PerVertex(vals);
        let partition = build_partition_for(&domain, &cfg.partition)?;
        let blocks = assemble_blocks(&domain, &v, &partition, cfg.numerics.lambda + jit)?;
        let l1 = dtn_side(&blocks, 1)?;
        let l2 = dtn_side(&blocks, 2)?;
        let cert = perturb_certificate(&l1, &l2, &default_c_grid())?;
        let mut b = Body::new();
        b.notes.push(format!(
            "certificate: holds = {}, best margin = {:.6e} at c = {:.6e}",
            cert.holds, cert.best_margin, cert.best_c
        ));
        if cert.holds {
            let mas = maslov_beta(&blocks)?;
            let g = inertia_of(&realize(&blocks, Realization::G), tol)?;
            let n1 = inertia_of(&realize(&blocks, Realization::N1), tol)?;
            let d2 = inertia_of(&realize(&blocks, Realization::D2), tol)?;
            b.indices.push(IndexEntry::new("L^G", &g));
            b.indices.push(IndexEntry::new("L^N_1", &n1));
            b.indices.push(IndexEntry::new("L^D_2", &d2));
            b.checks.push(Check::eq("perturb: certificate holds => Maslov index 0", mas.index, 0));
            b.checks.push(Check::eq(
                "perturb: Mor(L^G) = Mor(L^N_1) + Mor(L^D_2)",
                g.mor() as i64,
                n1.mor() as i64 + d2.mor() as i64,
            ));
            if cfg.numerics.perturb_amp == 0.0 {
                // Exactly doubled: both sides carry the same operator, so
                // the decomposition reads Mor(L^G) = Mor(L^D) + Mor(L^N)
                // for the one-sided realizations.
                let d1 = inertia_of(&realize(&blocks, Realization::D1), tol)?;
                let n2 = inertia_of(&realize(&blocks, Realization::N2), tol)?;
                b.checks.push(Check::eq(
                    "perturb (symmetric): Mor(L^D_1) = Mor(L^D_2)",
                    d1.mor() as i64,
                    d2.mor() as i64,
                ));
                b.checks.push(Check::eq(
                    "perturb (symmetric): Mor(L^N_1) = Mor(L^N_2)",
                    n1.mor() as i64,
                    n2.mor() as i64,
                ));
                b.checks.push(Check::eq(
                    "perturb (symmetric): Mor(L^G) = Mor(L^D) + Mor(L^N)",
                    g.mor() as i64,
                    d1.mor() as i64 + n1.mor() as i64,
                ));
            }
        } else {
            b.notes.push("certificate does not hold; implication untested".into());
        }
        Ok(b)
    })
}

fn scenario_nodal(cfg: &ScenarioConfig) -> Result<Body> {
    let domain = build_domain(&cfg.domain)?;
    let v = build_potential(&cfg.potential, &domain, cfg.numerics.seed)?;
    let k_max = cfg.numerics.k_max;
    let reports = courant_check(&domain, &v, k_max)?;
    let mut b = Body::new();
    for r in &reports {
        b.checks.push(Check::le(
            format!("courant: n(phi_{}) <= {}", r.k, r.k),
            r.n_total as i64,
            r.k as i64,
        ));
        if !r.simple {
            b.notes.push(format!("mode {} not simple; deficiency route skipped", r.k));
            continue;
        }
        match nodal_deficiency_dtn(&domain, &v, r.k) {
            Ok(d) => {
                b.checks.push(Check::eq(
                    format!("deficiency: delta(phi_{}) = Mor(Lambda_+ + Lambda_-)", r.k),
                    d.deficiency_direct,
                    d.deficiency_dtn.unwrap_or(i64::MIN),
                ));
                if let (Some(p), Some(m), Some(g)) = (d.mor_d_plus, d.mor_d_minus, d.mor_g_eps) {
                    b.checks.push(Check::eq(
                        format!("deficiency sides: Mor(L^D_+) = n_+ at k = {}", r.k),
                        p as i64,
                        d.n_plus_domains as i64,
                    ));
                    b.checks.push(Check::eq(
                        format!("deficiency sides: Mor(L^D_-) = n_- at k = {}", r.k),
                        m as i64,
                        d.n_minus_domains as i64,
                    ));
                    b.checks.push(Check::eq(
                        format!("deficiency shift: Mor(L^G(eps)) = k at k = {}", r.k),
                        g as i64,
                        r.k as i64,
                    ));
                }
            }
            Err(Error::SignChangeWithoutSeparator(_, _)) => {
                b.notes.push(format!("mode {}: nodal set not grid-aligned; skipped", r.k));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(b)
}

fn scenario_periodic(cfg: &ScenarioConfig) -> Result<Body> {
    let tol = cfg.numerics.zero_tol;
    with_jitter(cfg.numerics.seed, potential_scale(&cfg.potential), |jit| {
        let domain = build_domain(&cfg.domain)?;
        let v = build_potential(&cfg.potential, &domain, cfg.numerics.seed)?;
        let lambda = cfg.numerics.lambda + jit;
        let (p, interior, tau) = periodic_parts(&domain, &v, lambda)?;
        let ip = inertia_of(&p, tol)?;
        let id = inertia_of(&interior, tol)?;
        let it = inertia_of(&tau.matrix, tol)?;
        let mut b = Body::new();
        b.indices.push(IndexEntry::new("L^P", &ip));
        b.indices.push(IndexEntry::new("L^D", &id));
        b.indices.push(IndexEntry::new("Lambda_tau", &it));
        b.checks.push(Check::eq(
            "thmPeriodic (strict): Mor(L^P) = Mor(L^D) + Mor(Lambda_tau)",
            ip.mor() as i64,
            id.mor() as i64 + it.mor() as i64,
        ));
        b.notes.push(format!(
            "Mor0 variant: Mor(L^P) = {} vs Mor(L^D) + Mor0(Lambda_tau) = {} (dim ker Lambda_tau = {})",
            ip.mor(),
            id.mor() + it.mor0(),
            it.n_zero
        ));

        // PFriedlander on the unrolled domain, single-axis identifications only.
        let axes: Vec<usize> = match &cfg.domain {
            DomainSpec::Interval { periodic: true, .. } => vec![0],
            DomainSpec::Rectangle { periodic_axes, .. } => periodic_axes.clone(),
            _ => vec![],
        };
        if axes.len() == 1 {
            let unrolled_spec = match cfg.domain.clone() {
                DomainSpec::Interval { cells, length, bc, .. } => {
                    DomainSpec::Interval { cells, length, bc, periodic: false }
                }
                DomainSpec::Rectangle { cells, lengths, sides, .. } => {
                    DomainSpec::Rectangle { cells, lengths, sides, periodic_axes: vec![] }
                }
                other => other,
            };
            let unrolled = build_domain(&unrolled_spec)?;
            let (dn, dpart, partial) =
                partial_parts(&unrolled, &v, lambda, Face { axis: axes[0], high: false })?;
            let idn = inertia_of(&dn, tol)?;
            let idp = inertia_of(&dpart, tol)?;
            let ipart = inertia_of(&partial.matrix, tol)?;
            b.indices.push(IndexEntry::new("L^DN", &idn));
            b.indices.push(IndexEntry::new("L^D (unrolled)", &idp));
            b.indices.push(IndexEntry::new("Lambda_1-partial", &ipart));
            b.checks.push(Check::eq(
                "PFriedlander: Mor(L^DN) = Mor(L^D) + Mor(Lambda_1-partial)",
                idn.mor() as i64,
                idp.mor() as i64 + ipart.mor() as i64,
            ));
        }
        Ok(b)
    })
}

fn scenario_robin(cfg: &ScenarioConfig) -> Result<Body> {
    let domain = build_domain(&cfg.domain)?;
    let v = build_potential(&cfg.potential, &domain, cfg.numerics.seed)?;
    let n = cfg.numerics.theta_count.max(2);
    let lo = cfg.numerics.theta_min;
    let hi = std::f64::consts::FRAC_PI_2;
    let grid: Vec<f64> = (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect();
    let r = robin_sweep(&domain, &v, &grid)?;
    let mut b = Body::new();
    b.checks.push(Check::eq(
        "robin plateau: Mor(L^R) as theta -> 0+ equals Mor(L^D)",
        r.plateau as i64,
        r.mor_dirichlet as i64,
    ));
    b.checks.push(Check::eq(
        "robin crossings: #(sigma(Lambda) in (-cot eps, 0]) = Mor0(Lambda)",
        r.lambda_window_count as i64,
        r.mor0_lambda as i64,
    ));
    b.checks.push(Check::eq("robin monotone in theta", r.monotone as i64, 1));
    b.checks.push(Check::eq(
        "friedlander (strict): Mor(L^N) - Mor(L^D) = Mor(Lambda)",
        r.friedlander_difference,
        r.mor_lambda as i64,
    ));
    b.notes.push(format!(
        "Mor(L^N) = {}, Mor(L^D) = {}, Mor(Lambda) = {}, Mor0(Lambda) = {} (the stated form of Friedlander uses Mor0)",
        r.mor_neumann, r.mor_dirichlet, r.mor_lambda, r.mor0_lambda
    ));
    b.notes.push(format!(
        "theta sweep: Mor {} -> {} over {} grid points",
        r.plateau,
        r.mor_by_theta.last().unwrap().1,
        r.mor_by_theta.len()
    ));
    Ok(b)
}

fn scenario_homotopy(cfg: &ScenarioConfig) -> Result<Body> {
    with_jitter(cfg.numerics.seed, potential_scale(&cfg.potential), |jit| {
        let (_, _, blocks) = blocks_at(cfg, jit)?;
        let r = homotopy_boundary_check(&blocks)?;
        let mut b = Body::new();
        b.checks.push(Check::eq(
            "homotopy rectangle: Mor0(Lambda_1) + Mas = Mor0(Lambda_1+Lambda_2)",
            r.mas_bottom + r.mas_right,
            r.mas_top,
        ));
        b.checks.push(Check::eq("s_floor bounds all pencil eigenvalues", r.s_floor_valid as i64, 1));
        b.notes.push(format!(
            "edges: bottom = {}, right = {}, top = {}; s_floor = {:.6e}",
            r.mas_bottom, r.mas_right, r.mas_top, r.s_floor
        ));
        Ok(b)
    })
}

fn scenario_lambda_sweep(cfg: &ScenarioConfig) -> Result<Body> {
    let domain = build_domain(&cfg.domain)?;
    let v = build_potential(&cfg.potential, &domain, cfg.numerics.seed)?;
    let lambda_floor = v.inf_on(&domain) - 1.0;
    let sweep = maslov_lambda_sweep(
        |lambda| assemble_global(&domain, &v, lambda),
        lambda_floor,
        cfg.numerics.lambda_grid,
    )?;
    let mut b = Body::new();
    let total: usize = sweep.crossings.iter().map(|c| c.kernel_dim).sum();
    b.checks.push(Check::eq(
        "lambda-sweep: crossing count equals Mor at lambda = 0",
        total as i64,
        sweep.mor_at_zero as i64,
    ));
    b.checks.push(Check::eq("lambda-sweep monotone", sweep.monotone as i64, 1));
    b.checks.push(Check::eq(
        "lambdaMaslov: Mas(mu(lambda); beta(1)) = -Mor(L^G)",
        sweep.index,
        -(sweep.mor_at_zero as i64),
    ));
    b.notes.push(format!(
        "lambda_floor = {lambda_floor}, Mor = {}, Mor0 = {}, crossings at {:?}",
        sweep.mor_at_zero,
        sweep.mor0_at_zero,
        sweep.crossings.iter().map(|c| (c.t * 1e6).round() / 1e6).collect::<Vec<_>>()
    ));
    Ok(b)
}

/// Run one scenario; Indeterminate results become a non-pass report rather
/// than an error (CLI exit code 2).
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioReport> {
    let start = std::time::Instant::now();
    let body = match cfg.scenario {
        Scenario::Mormas => scenario_mormas(cfg),
        Scenario::Dnbracket => scenario_dnbracket(cfg),
        Scenario::Friedlander => scenario_friedlander(cfg),
        Scenario::Doubled1d => scenario_doubled_1d(cfg),
        Scenario::Perturb => scenario_perturb(cfg),
        Scenario::Nodal => scenario_nodal(cfg),
        Scenario::Periodic => scenario_periodic(cfg),
        Scenario::Robin => scenario_robin(cfg),
        Scenario::Homotopy => scenario_homotopy(cfg),
        Scenario::LambdaSweep => scenario_lambda_sweep(cfg),
    };
    let (body, indeterminate) = match body {
        Ok(b) => (b, false),
        Err(Error::Indeterminate(_)) => (Body::new(), true),
        Err(e) => return Err(e),
    };
    let pass = !indeterminate && body.checks.iter().all(|c| c.pass);
    Ok(ScenarioReport {
        scenario: cfg.scenario.name().into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        indices: body.indices,
        checks: body.checks,
        notes: body.notes,
        indeterminate,
        pass,
        wall_time_ms: start.elapsed().as_millis() as u64,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseSummary {
    pub case: usize,
    pub scenario: String,
    pub checks: usize,
    pub pass: bool,
    pub indeterminate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub count: usize,
    pub version: String,
    pub cases: Vec<CaseSummary>,
    pub total_checks: usize,
    pub passed_cases: usize,
    pub pass: bool,
}

/// Build the randomized configs for one suite case: a shared rectangle with
/// per-vertex V, exercised by mormas + dnbracket + friedlander + homotopy.
pub fn suite_case_configs(rng: &mut ChaCha8Rng) -> Vec<ScenarioConfig> {
    let nx = rng.gen_range(4..=40usize);
    let ny = rng.gen_range(4..=40usize);
    let lx = rng.gen_range(0.6..1.4);
    let ly = rng.gen_range(0.4..1.0);
    let n_lattice = (nx + 1) * (ny + 1);
    let values: Vec<f64> = (0..n_lattice).map(|_| rng.gen_range(-200.0..200.0)).collect();
    let axis = rng.gen_range(0..2usize);
    let index = rng.gen_range(1..if axis == 0 { nx } else { ny });
    let seed = rng.gen::<u64>();
    let dirichlet = DomainSpec::Rectangle {
        cells: [nx, ny],
        lengths: [lx, ly],
        sides: ["dirichlet".into(), "dirichlet".into(), "dirichlet".into(), "dirichlet".into()],
        periodic_axes: vec![],
    };
    let neumann = DomainSpec::Rectangle {
        cells: [nx, ny],
        lengths: [lx, ly],
        sides: ["neumann".into(), "neumann".into(), "neumann".into(), "neumann".into()],
        periodic_axes: vec![],
    };
    let potential = PotentialSpec::PerVertex { values };
    let partition = PartitionSpec { axis, index: Some(index) };
    let numerics = Numerics { seed, ..Numerics::default() };
    vec![
        ScenarioConfig {
            scenario: Scenario::Mormas,
            domain: dirichlet.clone(),
            potential: potential.clone(),
            partition: partition.clone(),
            numerics: numerics.clone(),
        },
        ScenarioConfig {
            scenario: Scenario::Dnbracket,
            domain: dirichlet.clone(),
            potential: potential.clone(),
            partition: partition.clone(),
            numerics: numerics.clone(),
        },
        ScenarioConfig {
            scenario: Scenario::Friedlander,
            domain: neumann,
            potential: potential.clone(),
            partition: PartitionSpec::default(),
            numerics: numerics.clone(),
        },
        ScenarioConfig {
            scenario: Scenario::Homotopy,
            domain: dirichlet,
            potential,
            partition,
            numerics,
        },
    ]
}

/// Run `count` randomized cases; any identity violation aborts with the
/// offending config serialized for replay. Scenarios run concurrently up to
/// a worker cap; results are merged in job order, so the report does not
/// depend on scheduling.
pub fn run_suite(seed: u64, count: usize) -> Result<SuiteReport> {
    if count == 0 {
        return Err(Error::Config("suite count must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jobs: Vec<(usize, ScenarioConfig)> = (0..count)
        .flat_map(|case| {
            suite_case_configs(&mut rng).into_iter().map(move |cfg| (case, cfg))
        })
        .collect();

    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(8);
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots: Vec<std::sync::Mutex<Option<Result<ScenarioReport>>>> =
        (0..jobs.len()).map(|_| std::sync::Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= jobs.len() {
                    break;
                }
                *slots[i].lock().unwrap() = Some(run_scenario(&jobs[i].1));
            });
        }
    });

    let mut cases = Vec::new();
    let mut total_checks = 0;
    let mut passed_cases = 0;
    let mut case_pass = true;
    for (i, (case, cfg)) in jobs.iter().enumerate() {
        let report = slots[i].lock().unwrap().take().expect("worker filled every slot")?;
        total_checks += report.checks.len();
        if !report.pass && !report.indeterminate {
            return Err(Error::InvalidInput(format!(
                "suite case {case} scenario {} failed; replay config:\n{}",
                cfg.scenario,
                cfg.to_toml()
            )));
        }
        case_pass &= report.pass;
        cases.push(CaseSummary {
            case: *case,
            scenario: cfg.scenario.name().into(),
            checks: report.checks.len(),
            pass: report.pass,
            indeterminate: report.indeterminate,
        });
        let last_of_case = jobs.get(i + 1).map(|(c, _)| c != case).unwrap_or(true);
        if last_of_case {
            if case_pass {
                passed_cases += 1;
            }
            case_pass = true;
        }
    }
    Ok(SuiteReport {
        seed,
        count,
        version: env!("CARGO_PKG_VERSION").into(),
        cases,
        total_checks,
        passed_cases,
        pass: passed_cases == count,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub value: i64,
    pub continuum: i64,
    pub matches: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceTable {
    pub scenario: String,
    pub rows: Vec<ConvergenceRow>,
    /// Smallest listed N from which every larger N matches the continuum.
    pub stable_from: Option<usize>,
}

/// Grid-refinement study for the scenarios with closed-form continuum answers.
pub fn convergence_study(scenario: Scenario, n_list: &[usize]) -> Result<ConvergenceTable> {
    if n_list.is_empty() {
        return Err(Error::Config("empty N list".into()));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("N list must be strictly increasing".into()));
    }
    let mut rows = Vec::new();
    match scenario {
        Scenario::Doubled1d => {
            // ℓ = 2, C = 1.44: continuum index = 1 (√C ℓ/2 = 1.2 ∈ (π/4, π/2)).
            for &n in n_list {
                let d = build_interval(n, 2.0, SideSpec::Dirichlet, SideSpec::Neumann)?;
                let p = partition_by_line(&d, 0, n / 2)?;
                let blocks = assemble_blocks(&d, &Potential::Constant(-1.44), &p, 0.0)?;
                let index = maslov_beta(&blocks)?.index;
                rows.push(ConvergenceRow { n, value: index, continuum: 1, matches: index == 1 });
            }
        }
        Scenario::Friedlander => {
            // 1D, C = 50: Mor(L^N) − Mor(L^D) = 3 − 2 = 1.
            for &n in n_list {
                let dn = build_interval(n, 1.0, SideSpec::Neumann, SideSpec::Neumann)?;
                let dd = build_interval(n, 1.0, SideSpec::Dirichlet, SideSpec::Dirichlet)?;
                let v = Potential::Constant(-50.0);
                let mn = ldlt_inertia(&assemble_global(&dn, &v, 0.0)?, DEFAULT_ZERO_TOL)?.mor();
                let md = ldlt_inertia(&assemble_global(&dd, &v, 0.0)?, DEFAULT_ZERO_TOL)?.mor();
                let diff = mn as i64 - md as i64;
                rows.push(ConvergenceRow { n, value: diff, continuum: 1, matches: diff == 1 });
            }
        }
        other => {
            return Err(Error::Config(format!(
                "convergence study supports doubled-1d and friedlander, not {other}"
            )))
        }
    }
    let stable_from = rows
        .iter()
        .position(|r| rows.iter().skip_while(|q| q.n < r.n).all(|q| q.matches))
        .map(|i| rows[i].n);
    Ok(ConvergenceTable { scenario: scenario.name().into(), rows, stable_from })
}
