use std::fmt;

use crate::divergences::binary_entropy;
use crate::error::{domain, Result};
use crate::optimize::bisect_root;

/// Cells of the sign-change scan on `[-1, 1]`.
pub const ROOT_SCAN_CELLS: usize = 10_000;

/// Half-width of the band around a phase boundary that is flagged.
pub const BOUNDARY_BAND: f64 = 1e-9;

const ROOT_TOL: f64 = 1e-12;

/// Mean-field spin model behind `E exp{a n (mu_hat - mu)^2}` for `±1`
/// spins with mean `mu`: field `B = atanh(mu) - 2 a mu`, coupling `J = 2a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurieWeissParams {
    mu: f64,
    a: f64,
    field: f64,
    coupling: f64,
}

impl CurieWeissParams {
    pub fn new(mu: f64, a: f64) -> Result<Self> {
        if !(mu.abs() < 1.0) {
            return Err(domain(format!("mu must lie in (-1, 1), got {mu}")));
        }
        if !(a >= 0.0 && a.is_finite()) {
            return Err(domain(format!("a must be finite and nonnegative, got {a}")));
        }
        Ok(Self {
            mu,
            a,
            field: mu.atanh() - 2.0 * a * mu,
            coupling: 2.0 * a,
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn field(&self) -> f64 {
        self.field
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    /// `h2((1 + m)/2) + B m + (J/2) m^2`.
    pub fn free_energy(&self, m: f64) -> f64 {
        binary_entropy((1.0 + m) / 2.0) + self.field * m + 0.5 * self.coupling * m * m
    }
}

/// `a0(mu) = atanh(mu) / (2 mu)`, where the field vanishes; `1/2` at `mu = 0`.
pub fn a0(mu: f64) -> f64 {
    if mu == 0.0 {
        0.5
    } else {
        mu.atanh() / (2.0 * mu)
    }
}

/// A fixed point of `m = tanh(J m + B)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnetizationRoot {
    pub m: f64,
    /// `|d/dm tanh(J m + B)| < 1`.
    pub stable: bool,
    pub free_energy: f64,
}

/// All fixed points and the one that dominates the partition function.
#[derive(Debug, Clone, PartialEq)]
pub struct Magnetization {
    pub roots: Vec<MagnetizationRoot>,
    pub dominant: usize,
}

impl Magnetization {
    pub fn dominant_m(&self) -> f64 {
        self.roots[self.dominant].m
    }
}

/// Roots of `m - tanh(J m + B)` by a sign-change scan over `cells` cells and
/// bisection. The dominant root maximizes the free energy; on exact ties the
/// smaller `m` wins.
pub fn magnetization_roots_with(params: &CurieWeissParams, cells: usize) -> Magnetization {
    let (j, b) = (params.coupling, params.field);
    let g = |m: f64| m - (j * m + b).tanh();
    let h = 2.0 / cells as f64;
    let mut ms: Vec<f64> = Vec::new();
    let mut prev = (-1.0, g(-1.0));
    for i in 1..=cells {
        let x = if i == cells { 1.0 } else { -1.0 + h * i as f64 };
        let v = g(x);
        if prev.1 == 0.0 {
            ms.push(prev.0);
        } else if prev.1 * v < 0.0 {
            ms.push(bisect_root(g, prev.0, x, ROOT_TOL).expect("bracketed root"));
        }
        prev = (x, v);
    }
    if prev.1 == 0.0 {
        ms.push(prev.0);
    }
    let roots: Vec<MagnetizationRoot> = ms
        .into_iter()
        .map(|m| {
            let th = (j * m + b).tanh();
            MagnetizationRoot {
                m,
                stable: j * (1.0 - th * th) < 1.0,
                free_energy: params.free_energy(m),
            }
        })
        .collect();
    let mut dominant = 0;
    for (i, r) in roots.iter().enumerate() {
        if r.free_energy > roots[dominant].free_energy {
            dominant = i;
        }
    }
    Magnetization { roots, dominant }
}

/// [`magnetization_roots_with`] on [`ROOT_SCAN_CELLS`] cells.
pub fn magnetization_roots(params: &CurieWeissParams) -> Magnetization {
    magnetization_roots_with(params, ROOT_SCAN_CELLS)
}

/// The five regions of the `(mu, a)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    /// `a < 1/2`: a single fixed point.
    Paramagnetic,
    /// `mu > 0`, `1/2 < a < a0(mu)`.
    PositiveMLowA,
    /// `mu < 0`, `a > a0(mu)`.
    PositiveMHighA,
    /// `mu < 0`, `1/2 < a < a0(mu)`.
    NegativeMLowA,
    /// `mu > 0`, `a > a0(mu)`.
    NegativeMHighA,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Paramagnetic => "paramagnetic",
            Phase::PositiveMLowA => "positive-m-low-a",
            Phase::PositiveMHighA => "positive-m-high-a",
            Phase::NegativeMLowA => "negative-m-low-a",
            Phase::NegativeMHighA => "negative-m-high-a",
        }
    }

    /// Sign of the dominant magnetization, 0 for the paramagnetic phase.
    pub fn sign(&self) -> i8 {
        match self {
            Phase::Paramagnetic => 0,
            Phase::PositiveMLowA | Phase::PositiveMHighA => 1,
            Phase::NegativeMLowA | Phase::NegativeMHighA => -1,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A classified point of the phase diagram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseLabel {
    pub phase: Phase,
    /// Within [`BOUNDARY_BAND`] of `a = 1/2`, `a = a0(mu)` or the `mu = 0` line.
    pub boundary: bool,
    /// Within the band of `(mu, a) = (0, 1/2)`.
    pub multicritical: bool,
    pub dominant_m: f64,
}

/// Labels `(mu, a)` by the comparisons of `a` with `1/2` and `a0(mu)` and the
/// sign of `mu`. Points on a boundary take the label of the side with the
/// larger `a` or, on the `mu = 0` line, of `mu > 0`, and carry the flag.
pub fn classify_phase(mu: f64, a: f64) -> Result<PhaseLabel> {
    let params = CurieWeissParams::new(mu, a)?;
    let dominant_m = magnetization_roots(&params).dominant_m();
    let a0 = a0(mu);
    let near_half = (a - 0.5).abs() <= BOUNDARY_BAND;
    let multicritical = near_half && mu.abs() <= BOUNDARY_BAND;
    let phase = if a < 0.5 - BOUNDARY_BAND {
        Phase::Paramagnetic
    } else if a < a0 - BOUNDARY_BAND {
        if mu > 0.0 {
            Phase::PositiveMLowA
        } else {
            Phase::NegativeMLowA
        }
    } else if mu >= 0.0 {
        Phase::NegativeMHighA
    } else {
        Phase::PositiveMHighA
    };
    let boundary = near_half
        || (a >= 0.5 && (a - a0).abs() <= BOUNDARY_BAND)
        || (a > 0.5 && mu.abs() <= BOUNDARY_BAND);
    Ok(PhaseLabel {
        phase,
        boundary,
        multicritical,
        dominant_m,
    })
}

/// One row of a phase-diagram export.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseRow {
    pub mu: f64,
    pub a: f64,
    pub label: PhaseLabel,
}

/// Classifies every point of a `mu x a` lattice, `mu` varying slowest.
pub fn phase_diagram(mus: &[f64], as_: &[f64]) -> Result<Vec<PhaseRow>> {
    use rayon::prelude::*;
    let pts: Vec<(f64, f64)> = mus
        .iter()
        .flat_map(|&m| as_.iter().map(move |&a| (m, a)))
        .collect();
    pts.par_iter()
        .map(|&(mu, a)| classify_phase(mu, a).map(|label| PhaseRow { mu, a, label }))
        .collect()
}
