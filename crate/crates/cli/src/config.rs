//! Run configuration, read from a single JSON file.

use std::path::{Path, PathBuf};

use itep_core::geometry::{Ball, Ellipsoid, ImplicitShape, Torus};
use itep_core::inverse::{FitOptions, SpectrumEntry};
use itep_core::medium::check_direction;
use itep_core::radial_ode::OdeOptions;
use itep_core::tunneling::{Anchoring, TunnelOptions};
use itep_core::{
    AngularOrder, Complex64, MediumField, ProfileFamily, RootOptions, SearchRectangle, SimpleDomain, Vec3,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub medium: MediumField,
    /// Empty means: the support of the medium.
    #[serde(default)]
    pub domain: DomainConfig,
    pub directions: Directions,
    /// Inclusive `[l_min, l_max]`.
    pub l_range: [u32; 2],
    pub rectangle: SearchRectangle,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldConfig>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainConfig {
    pub balls: Vec<Ball>,
    pub ellipsoids: Vec<Ellipsoid>,
    pub tori: Vec<Torus>,
}

impl DomainConfig {
    pub fn is_empty(&self) -> bool {
        self.balls.is_empty() && self.ellipsoids.is_empty() && self.tori.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Directions {
    List(Vec<Vec3>),
    Fibonacci { fibonacci: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub l_max: u32,
    pub anchoring: Anchoring,
    pub roots: RootOptions,
    pub ode: OdeOptions,
    pub propagation_tol: f64,
    pub dedup_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let t = TunnelOptions::default();
        Self {
            l_max: 32,
            anchoring: t.anchoring,
            roots: t.roots,
            ode: t.ode,
            propagation_tol: t.propagation_tol,
            dedup_tol: t.dedup_tol,
        }
    }
}

impl Tolerances {
    pub fn tunnel(&self) -> TunnelOptions {
        TunnelOptions {
            anchoring: self.anchoring,
            roots: self.roots,
            ode: self.ode,
            propagation_tol: self.propagation_tol,
            dedup_tol: self.dedup_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub radii: Vec<f64>,
    #[serde(default = "default_sector")]
    pub sector: [f64; 2],
    /// Order of the determinant; defaults to the lower end of `l_range`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<u32>,
    /// Replaces the determinant by `sin(frequency k)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<Synthetic>,
}

fn default_sector() -> [f64; 2] {
    [-0.1, 0.1]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Synthetic {
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub family: ProfileFamily,
    pub init: Vec<f64>,
    pub bounds: Vec<[f64; 2]>,
    #[serde(default)]
    pub target: FitTarget,
    /// Orders used in the fit; defaults to `l_range`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orders: Option<Vec<u32>>,
    #[serde(default)]
    pub options: FitOptions,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum FitTarget {
    /// Propagating eigenvalues of `medium` along the first direction.
    #[default]
    Medium,
    Eigenvalues {
        values: Vec<TargetEigenvalue>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetEigenvalue {
    pub l: u32,
    pub k: [f64; 2],
    #[serde(default = "one")]
    pub multiplicity: u32,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub k: [f64; 2],
    #[serde(default)]
    pub l: u32,
    #[serde(default)]
    pub coefficients: Coefficients,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Index into the direction list.
    #[serde(default)]
    pub direction: usize,
}

fn default_samples() -> usize {
    200
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coefficients {
    /// `a = 1`; `b` matches `w` to `v` at the end of each inside interval.
    #[default]
    Auto,
    Fixed {
        a: [f64; 2],
        b: [f64; 2],
    },
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Parses and validates.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.medium.validate().map_err(|e| bad(e.to_string()))?;
        let [lo, hi] = self.l_range;
        if lo > hi {
            return Err(bad(format!("l_range [{lo}, {hi}] is empty")));
        }
        self.orders()?;
        let dirs = self.directions()?;
        if let Some(d) = &self.density {
            if d.radii.len() < 3 || d.radii.windows(2).any(|w| !(w[1] > w[0])) || !(d.radii[0] > 0.0) {
                return Err(bad("density.radii needs at least 3 strictly increasing positive radii"));
            }
            let [a, b] = d.sector;
            if !(a < b) || b - a > std::f64::consts::PI {
                return Err(bad(format!("density.sector [{a}, {b}] must be nonempty and at most pi wide")));
            }
            if let Some(s) = d.synthetic {
                if !(s.frequency > 0.0 && s.frequency.is_finite()) {
                    return Err(bad("density.synthetic.frequency must be positive"));
                }
            }
        }
        if let Some(f) = &self.fit {
            let dim = f.family.dimension();
            if f.init.len() != dim || f.bounds.len() != dim {
                return Err(bad(format!("fit: family takes {dim} parameters")));
            }
            for (i, (x, [lo, hi])) in f.init.iter().zip(&f.bounds).enumerate() {
                if !(lo < hi) || !(*lo > 0.0) || !(x >= lo && x <= hi) {
                    return Err(bad(format!("fit: parameter {i} init {x} not inside bounds [{lo}, {hi}]")));
                }
            }
            f.family.profile(&f.init).map_err(|e| bad(format!("fit: {e}")))?;
            if let FitTarget::Eigenvalues { values } = &f.target {
                if values.is_empty() {
                    return Err(bad("fit.target.values is empty"));
                }
            }
        }
        if let Some(f) = &self.field {
            if f.direction >= dirs.len() {
                return Err(bad(format!("field.direction {} out of range", f.direction)));
            }
            if f.samples < 2 {
                return Err(bad("field.samples must be at least 2"));
            }
            AngularOrder::with_max(f.l, self.tolerances.l_max).map_err(|e| bad(e.to_string()))?;
        }
        self.domain()?;
        Ok(())
    }

    pub fn orders(&self) -> Result<Vec<AngularOrder>, CliError> {
        (self.l_range[0]..=self.l_range[1])
            .map(|l| AngularOrder::with_max(l, self.tolerances.l_max).map_err(|e| bad(e.to_string())))
            .collect()
    }

    /// Unit directions; explicit vectors are normalized.
    pub fn directions(&self) -> Result<Vec<Vec3>, CliError> {
        let v = match &self.directions {
            Directions::List(list) => list
                .iter()
                .map(|d| {
                    let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                    if !(n > 0.0 && n.is_finite()) {
                        return Err(bad(format!("direction {d:?} has no length")));
                    }
                    Ok([d[0] / n, d[1] / n, d[2] / n])
                })
                .collect::<Result<Vec<_>, _>>()?,
            Directions::Fibonacci { fibonacci } => fibonacci_sphere(*fibonacci),
        };
        if v.is_empty() {
            return Err(bad("no directions"));
        }
        for d in &v {
            check_direction(*d).map_err(|e| bad(e.to_string()))?;
        }
        Ok(v)
    }

    pub fn domain(&self) -> Result<SimpleDomain, CliError> {
        let d = if self.domain.is_empty() {
            SimpleDomain::from_medium(&self.medium)
        } else {
            let mut shapes: Vec<std::sync::Arc<dyn ImplicitShape>> = Vec::new();
            shapes.extend(self.domain.ellipsoids.iter().map(|e| std::sync::Arc::new(*e) as _));
            shapes.extend(self.domain.tori.iter().map(|t| std::sync::Arc::new(*t) as _));
            SimpleDomain::new(self.domain.balls.clone(), shapes)
        };
        d.map_err(|e| bad(format!("domain: {e}")))
    }

    pub fn fit_targets(&self) -> Option<Vec<SpectrumEntry>> {
        match &self.fit.as_ref()?.target {
            FitTarget::Medium => None,
            FitTarget::Eigenvalues { values } => Some(
                values
                    .iter()
                    .map(|v| SpectrumEntry {
                        k: Complex64::new(v.k[0], v.k[1]),
                        l: AngularOrder::new(v.l).expect("order"),
                        multiplicity: v.multiplicity,
                    })
                    .collect(),
            ),
        }
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// `n` nearly uniform points on the unit sphere.
pub fn fibonacci_sphere(n: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            let v = [rho * phi.cos(), rho * phi.sin(), z];
            let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            [v[0] / len, v[1] / len, v[2] / len]
        })
        .collect()
}
