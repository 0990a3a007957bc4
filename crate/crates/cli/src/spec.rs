//! Manifold spec files.
//!
//! A spec is a TOML document with four top-level keys and one payload table
//! named after the kind:
//!
//! ```toml
//! name = "bernoulli"
//! kind = "exponential_family"
//! seed = 7
//! checks = ["cumulants", "metric_pd"]
//!
//! [tolerances]            # optional, overrides per check
//! cumulants = 1e-6
//!
//! [exponential_family]
//! statistics = [[0.0, 1.0]]   # n rows of m values X_j(ω)
//! base = [1.0, 1.0]           # optional base weights
//! beta = [0.0]
//! spin_block = 1              # optional spin coordinates for the extended bracket
//! ```
//!
//! Payload tables per kind:
//!
//! | kind | table keys |
//! |------|------------|
//! | `exponential_family` | `statistics`, `base`?, `beta`, `spin_block`? |
//! | `cone_potential` | `potential` (`orthant`), `dims` |
//! | `explicit_metric` | `metric`, `dim`, `hamiltonian`?, `adapted_potential`? |
//! | `algebra` | `potential` + `metric` + `coefficient`? + `points`, or `product` + `pairing` |
//! | `lattice` | `components`, `sites`, `metric`, `b` |
//!
//! Potentials, metrics and brackets are referenced by id; the ids are listed
//! in [`crate::registry`].

use std::collections::BTreeMap;
use std::fmt;

use serde::Deserialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::registry;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("schema error in `{field}`: {message}")]
    Schema { field: String, message: String },
}

impl SpecError {
    fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Schema { field: field.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    ExponentialFamily,
    ConePotential,
    ExplicitMetric,
    Algebra,
    Lattice,
}

impl Kind {
    pub const ALL: [Kind; 5] =
        [Kind::ExponentialFamily, Kind::ConePotential, Kind::ExplicitMetric, Kind::Algebra, Kind::Lattice];

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::ExponentialFamily => "exponential_family",
            Kind::ConePotential => "cone_potential",
            Kind::ExplicitMetric => "explicit_metric",
            Kind::Algebra => "algebra",
            Kind::Lattice => "lattice",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyPayload {
    pub statistics: Vec<Vec<f64>>,
    #[serde(default)]
    pub base: Option<Vec<f64>>,
    pub beta: Vec<f64>,
    #[serde(default)]
    pub spin_block: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConePayload {
    pub potential: String,
    pub dims: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricPayload {
    pub metric: String,
    pub dim: usize,
    #[serde(default)]
    pub hamiltonian: Option<String>,
    #[serde(default)]
    pub adapted_potential: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraPayload {
    #[serde(default)]
    pub potential: Option<String>,
    #[serde(default)]
    pub coefficient: f64,
    #[serde(default)]
    pub metric: Option<String>,
    #[serde(default)]
    pub points: Vec<Vec<f64>>,
    /// `p[i][j][k]`, the `k`-th component of `e_i ∘ e_j`, flattened.
    #[serde(default)]
    pub product: Option<Vec<f64>>,
    #[serde(default)]
    pub pairing: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticePayload {
    pub components: usize,
    /// Increasing lattice sizes; the first and last are compared.
    pub sites: Vec<usize>,
    pub metric: String,
    pub b: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    ExponentialFamily(FamilyPayload),
    ConePotential(ConePayload),
    ExplicitMetric(MetricPayload),
    Algebra(AlgebraPayload),
    Lattice(LatticePayload),
}

impl Payload {
    pub fn kind(&self) -> Kind {
        match self {
            Payload::ExponentialFamily(_) => Kind::ExponentialFamily,
            Payload::ConePotential(_) => Kind::ConePotential,
            Payload::ExplicitMetric(_) => Kind::ExplicitMetric,
            Payload::Algebra(_) => Kind::Algebra,
            Payload::Lattice(_) => Kind::Lattice,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldSpec {
    pub name: String,
    pub payload: Payload,
    pub checks: Vec<String>,
    /// Overrides of the registry defaults.
    pub tolerances: BTreeMap<String, f64>,
    pub seed: u64,
    /// SHA-256 of the source text, lowercase hex.
    pub hash: String,
}

impl ManifoldSpec {
    pub fn kind(&self) -> Kind {
        self.payload.kind()
    }

    /// Tolerance for `check`: the spec override or the registry default.
    pub fn tolerance(&self, check: &str) -> Option<f64> {
        self.tolerances
            .get(check)
            .copied()
            .or_else(|| registry::check(check).map(|c| c.tolerance))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    name: String,
    kind: Kind,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    checks: Vec<String>,
    #[serde(default)]
    tolerances: BTreeMap<String, f64>,
    exponential_family: Option<FamilyPayload>,
    cone_potential: Option<ConePayload>,
    explicit_metric: Option<MetricPayload>,
    algebra: Option<AlgebraPayload>,
    lattice: Option<LatticePayload>,
}

pub fn load_manifold_spec(text: &str) -> Result<ManifoldSpec, SpecError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
        let offset = e.span().map(|s| s.start).unwrap_or(0);
        let (line, column) = line_column(text, offset);
        SpecError::Parse { line, column, message: e.message().to_string() }
    })?;
    let raw: RawSpec = table.try_into().map_err(|e: toml::de::Error| schema_from_serde(e.message()))?;
    let hash = format!("{:x}", Sha256::digest(text.as_bytes()));
    build(raw, hash)
}

pub fn load_manifold_spec_file(path: &std::path::Path) -> Result<ManifoldSpec, crate::CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| crate::CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(load_manifold_spec(&text)?)
}

/// 1-based line and column of a byte offset.
fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn schema_from_serde(message: &str) -> SpecError {
    let field = message
        .split('`')
        .nth(1)
        .map(str::to_string)
        .unwrap_or_else(|| "<root>".to_string());
    SpecError::schema(field, message.trim())
}

fn build(raw: RawSpec, hash: String) -> Result<ManifoldSpec, SpecError> {
    let present: Vec<Kind> = [
        (Kind::ExponentialFamily, raw.exponential_family.is_some()),
        (Kind::ConePotential, raw.cone_potential.is_some()),
        (Kind::ExplicitMetric, raw.explicit_metric.is_some()),
        (Kind::Algebra, raw.algebra.is_some()),
        (Kind::Lattice, raw.lattice.is_some()),
    ]
    .into_iter()
    .filter_map(|(k, p)| p.then_some(k))
    .collect();
    if let Some(other) = present.iter().find(|&&k| k != raw.kind) {
        return Err(SpecError::schema(
            other.as_str(),
            format!("payload table does not match kind `{}`", raw.kind),
        ));
    }
    let missing = || SpecError::schema(raw.kind.as_str(), "payload table is missing");
    let payload = match raw.kind {
        Kind::ExponentialFamily => Payload::ExponentialFamily(validate_family(raw.exponential_family.ok_or_else(missing)?)?),
        Kind::ConePotential => Payload::ConePotential(validate_cone(raw.cone_potential.ok_or_else(missing)?)?),
        Kind::ExplicitMetric => Payload::ExplicitMetric(validate_metric(raw.explicit_metric.ok_or_else(missing)?)?),
        Kind::Algebra => Payload::Algebra(validate_algebra(raw.algebra.ok_or_else(missing)?)?),
        Kind::Lattice => Payload::Lattice(validate_lattice(raw.lattice.ok_or_else(missing)?)?),
    };

    let mut seen = std::collections::BTreeSet::new();
    for name in &raw.checks {
        let field = format!("checks.{name}");
        let info = registry::check(name).ok_or_else(|| SpecError::schema(&field, "unknown check name"))?;
        if !info.kinds.contains(&raw.kind) {
            return Err(SpecError::schema(field, format!("check does not apply to kind `{}`", raw.kind)));
        }
        if !seen.insert(name.as_str()) {
            return Err(SpecError::schema(field, "check listed twice"));
        }
    }
    for (name, &tol) in &raw.tolerances {
        let field = format!("tolerances.{name}");
        if registry::check(name).is_none() {
            return Err(SpecError::schema(field, "unknown check name"));
        }
        if !(tol.is_finite() && tol > 0.0) {
            return Err(SpecError::schema(field, format!("tolerance must be positive and finite, got {tol}")));
        }
    }

    Ok(ManifoldSpec { name: raw.name, payload, checks: raw.checks, tolerances: raw.tolerances, seed: raw.seed, hash })
}

fn all_finite<'a>(field: &str, values: impl IntoIterator<Item = &'a f64>) -> Result<(), SpecError> {
    if values.into_iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(SpecError::schema(field, "entries must be finite"))
    }
}

fn validate_family(p: FamilyPayload) -> Result<FamilyPayload, SpecError> {
    let n = p.statistics.len();
    if n == 0 || n > registry::MAX_DIM {
        return Err(SpecError::schema(
            "exponential_family.statistics",
            format!("need between 1 and {} statistics", registry::MAX_DIM),
        ));
    }
    let m = p.statistics[0].len();
    if m == 0 || m > registry::MAX_SAMPLE_SPACE || p.statistics.iter().any(|r| r.len() != m) {
        return Err(SpecError::schema(
            "exponential_family.statistics",
            format!("rows must share a length between 1 and {}", registry::MAX_SAMPLE_SPACE),
        ));
    }
    all_finite("exponential_family.statistics", p.statistics.iter().flatten())?;
    if let Some(base) = &p.base {
        if base.len() != m || base.iter().any(|&w| !(w.is_finite() && w > 0.0)) {
            return Err(SpecError::schema("exponential_family.base", format!("need {m} positive finite weights")));
        }
    }
    if p.beta.len() != n {
        return Err(SpecError::schema("exponential_family.beta", format!("expected {n} entries, found {}", p.beta.len())));
    }
    all_finite("exponential_family.beta", &p.beta)?;
    if p.spin_block == Some(0) {
        return Err(SpecError::schema("exponential_family.spin_block", "must be at least 1 when present"));
    }
    Ok(p)
}

fn validate_cone(p: ConePayload) -> Result<ConePayload, SpecError> {
    if !registry::CONE_POTENTIALS.contains(&p.potential.as_str()) {
        return Err(SpecError::schema("cone_potential.potential", format!("unknown potential id `{}`", p.potential)));
    }
    if p.dims.is_empty() || p.dims.iter().any(|&d| d == 0 || d > registry::MAX_DIM) {
        return Err(SpecError::schema("cone_potential.dims", format!("dimensions must lie in 1..={}", registry::MAX_DIM)));
    }
    Ok(p)
}

fn validate_metric(p: MetricPayload) -> Result<MetricPayload, SpecError> {
    let allowed = registry::metric_dims(&p.metric)
        .ok_or_else(|| SpecError::schema("explicit_metric.metric", format!("unknown metric id `{}`", p.metric)))?;
    if p.dim == 0 || p.dim > registry::MAX_DIM || !allowed.contains(&p.dim) {
        return Err(SpecError::schema("explicit_metric.dim", format!("metric `{}` is not defined in dimension {}", p.metric, p.dim)));
    }
    if let Some(h) = &p.hamiltonian {
        if !registry::HAMILTONIANS.contains(&h.as_str()) {
            return Err(SpecError::schema("explicit_metric.hamiltonian", format!("unknown hamiltonian id `{h}`")));
        }
    }
    if let Some(a) = &p.adapted_potential {
        if registry::adapted_potential(a).is_none() {
            return Err(SpecError::schema("explicit_metric.adapted_potential", format!("unknown potential id `{a}`")));
        }
    }
    Ok(p)
}

fn validate_algebra(p: AlgebraPayload) -> Result<AlgebraPayload, SpecError> {
    all_finite("algebra.coefficient", [&p.coefficient])?;
    match (&p.potential, &p.product) {
        (Some(id), None) => {
            let dim = registry::algebra_potential_dim(id)
                .ok_or_else(|| SpecError::schema("algebra.potential", format!("unknown potential id `{id}`")))?;
            let metric = p.metric.as_deref().ok_or_else(|| SpecError::schema("algebra.metric", "required with a potential"))?;
            if !registry::ALGEBRA_METRICS.contains(&metric) {
                return Err(SpecError::schema("algebra.metric", format!("unknown metric id `{metric}`")));
            }
            if p.pairing.is_some() {
                return Err(SpecError::schema("algebra.pairing", "only used with explicit structure constants"));
            }
            if p.points.iter().any(|x| x.len() != dim) {
                return Err(SpecError::schema("algebra.points", format!("points must have {dim} coordinates")));
            }
            all_finite("algebra.points", p.points.iter().flatten())?;
        }
        (None, Some(product)) => {
            let pairing = p.pairing.as_ref().ok_or_else(|| SpecError::schema("algebra.pairing", "required with a product"))?;
            let n = pairing.len();
            if n == 0 || n > registry::MAX_DIM || pairing.iter().any(|r| r.len() != n) {
                return Err(SpecError::schema("algebra.pairing", "must be a square matrix"));
            }
            if product.len() != n * n * n {
                return Err(SpecError::schema("algebra.product", format!("expected {} entries", n * n * n)));
            }
            all_finite("algebra.product", product)?;
            all_finite("algebra.pairing", pairing.iter().flatten())?;
            if p.metric.is_some() || !p.points.is_empty() {
                return Err(SpecError::schema("algebra", "`metric` and `points` only apply to potentials"));
            }
        }
        _ => return Err(SpecError::schema("algebra", "give either `potential` or `product`, not both")),
    }
    Ok(p)
}

fn validate_lattice(p: LatticePayload) -> Result<LatticePayload, SpecError> {
    if p.components == 0 || p.components > registry::MAX_DIM {
        return Err(SpecError::schema("lattice.components", format!("must lie in 1..={}", registry::MAX_DIM)));
    }
    if p.sites.is_empty()
        || p.sites.iter().any(|&n| !(4..=registry::MAX_LATTICE).contains(&n))
        || p.sites.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(SpecError::schema(
            "lattice.sites",
            format!("sizes must increase strictly within 4..={}", registry::MAX_LATTICE),
        ));
    }
    if !registry::LATTICE_METRICS.contains(&p.metric.as_str()) {
        return Err(SpecError::schema("lattice.metric", format!("unknown metric id `{}`", p.metric)));
    }
    if !registry::LATTICE_B.contains(&p.b.as_str()) {
        return Err(SpecError::schema("lattice.b", format!("unknown tensor id `{}`", p.b)));
    }
    Ok(p)
}
