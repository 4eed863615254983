//! Verdict and classification records shared by every analysis module, plus
//! the per-half-space sign scan that all separability tests reduce to.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::{Cap, HalfSpace};

/// Version tag written into every JSON report.
pub const SCHEMA_VERSION: u32 = 1;

/// One sample point of a witness: where it is and the signed difference
/// `u(σ_H x) − u(x)` observed there.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessPoint {
    pub location: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<Vec<usize>>,
    pub difference: f64,
}

/// A half-space on which `u∘σ_H − u` takes strictly positive and strictly
/// negative values (beyond tolerance).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub halfspace: HalfSpace,
    /// Line angle for circle reflections.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
    pub above: WitnessPoint,
    pub below: WitnessPoint,
    /// `min(above.difference, −below.difference)`.
    pub strength: f64,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "half-space n={:?} c={} has u(σx)-u(x) = {:+.3e} at {:?} and {:+.3e} at {:?}",
            self.halfspace.normal(),
            self.halfspace.offset(),
            self.above.difference,
            self.above.location,
            self.below.difference,
            self.below.location
        )
    }
}

/// Which side of the separability dichotomy a half-space satisfies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// All differences within tolerance.
    Equal,
    /// `u(x) ≥ u(σ_H x)` on H, strictly somewhere.
    Dominates,
    /// `u(x) ≤ u(σ_H x)` on H, strictly somewhere.
    Dominated,
    /// Strict differences of both signs.
    Mixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityReport {
    pub separable: bool,
    /// Absolute tolerance actually applied to differences.
    pub tolerance: f64,
    pub halfspaces_tested: usize,
    pub equal_branches: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

/// 1-D profile samples, e.g. values along a meridian from the max axis.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Profile {
    pub abscissa: Vec<f64>,
    pub values: Vec<f64>,
}

impl Profile {
    /// Largest increase between consecutive samples (0 for a nonincreasing profile).
    pub fn max_increase(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    pub fn is_nonincreasing(&self, tol: f64) -> bool {
        self.max_increase() <= tol
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Symmetry {
    Constant,
    Radial { center: Vec<f64> },
    Axial { direction: Vec<f64> },
}

impl Symmetry {
    pub fn name(&self) -> &'static str {
        match self {
            Symmetry::Constant => "constant",
            Symmetry::Radial { .. } => "radial",
            Symmetry::Axial { .. } => "axial",
        }
    }
}

/// Per-shell axis data inside a ball report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellAxis {
    pub shell: usize,
    pub radius: f64,
    pub constant: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<Profile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisReport {
    pub symmetry: Symmetry,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_cap: Option<Cap>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_cap: Option<Cap>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<Profile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub shells: Vec<ShellAxis>,
    /// Named diagnostic residuals (mirror error, ring spread, …).
    pub residuals: BTreeMap<String, f64>,
}

impl AxisReport {
    pub fn constant() -> Self {
        AxisReport {
            symmetry: Symmetry::Constant,
            max_cap: None,
            min_cap: None,
            profile: None,
            shells: vec![],
            residuals: BTreeMap::new(),
        }
    }

    pub fn axis(&self) -> Option<&[f64]> {
        match &self.symmetry {
            Symmetry::Axial { direction } => Some(direction),
            _ => None,
        }
    }
}

/// Running sign classification of `u(σ_H x) − u(x)` over one half-space.
#[derive(Clone, Copy, Debug)]
pub(crate) struct SignScan {
    tol: f64,
    pub pos: Option<(usize, f64)>,
    pub neg: Option<(usize, f64)>,
}

impl SignScan {
    pub fn new(tol: f64) -> Self {
        SignScan {
            tol,
            pos: None,
            neg: None,
        }
    }

    pub fn push(&mut self, i: usize, diff: f64) {
        if diff > self.tol {
            if self.pos.map_or(true, |(_, d)| diff > d) {
                self.pos = Some((i, diff));
            }
        } else if diff < -self.tol && self.neg.map_or(true, |(_, d)| diff < d) {
            self.neg = Some((i, diff));
        }
    }

    pub fn branch(&self) -> Branch {
        match (self.pos, self.neg) {
            (None, None) => Branch::Equal,
            (Some(_), None) => Branch::Dominated,
            (None, Some(_)) => Branch::Dominates,
            (Some(_), Some(_)) => Branch::Mixed,
        }
    }

    pub fn strength(&self) -> f64 {
        match (self.pos, self.neg) {
            (Some((_, p)), Some((_, n))) => p.min(-n),
            _ => 0.0,
        }
    }
}

/// Keeps the strongest violation seen; earlier candidates win near-ties so the
/// choice does not depend on rounding noise.
#[derive(Default)]
pub(crate) struct WitnessPicker {
    pub best: Option<Witness>,
}

impl WitnessPicker {
    pub fn offer(&mut self, w: Witness) {
        let replace = match &self.best {
            None => true,
            Some(b) => w.strength > b.strength * (1.0 + 1e-9) + 1e-300,
        };
        if replace {
            self.best = Some(w);
        }
    }
}

/// Relative spread `(max − min) / scale` of a sample.
pub fn relative_spread(values: &[f64], scale: f64) -> f64 {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if values.is_empty() {
        0.0
    } else {
        (hi - lo) / scale
    }
}
