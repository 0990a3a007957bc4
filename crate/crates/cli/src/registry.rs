//! Fixed tables: check names with their defaults, and the ids a spec may use
//! to reference potentials, metrics and lattice tensors.

use std::ops::RangeInclusive;

use frobsym_core::frobenius::{antidiagonal_metric, cubic_potential3, ProductTensor};
use frobsym_core::geometry::{MetricField, PotentialField};
use frobsym_core::poisson::LatticeBracket;
use frobsym_core::Result;
use nalgebra::DMatrix;

use crate::spec::Kind;

pub const MAX_DIM: usize = 6;
pub const MAX_SAMPLE_SPACE: usize = 64;
pub const MAX_LATTICE: usize = 64;

/// Static description of one check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckInfo {
    pub name: &'static str,
    /// Section or equation of the source text the check verifies.
    pub anchor: &'static str,
    pub tolerance: f64,
    pub kinds: &'static [Kind],
    pub summary: &'static str,
}

use Kind::{Algebra, ConePotential as Cone, ExplicitMetric as Metric, ExponentialFamily as Family, Lattice};

pub const CHECKS: &[CheckInfo] = &[
    CheckInfo {
        name: "gibbs_normalization",
        anchor: "Eq. (E:3)",
        tolerance: 1e-12,
        kinds: &[Family],
        summary: "|Σ p_ω - 1| of the Gibbs density",
    },
    CheckInfo {
        name: "cumulants",
        anchor: "Eq. (E:3); Eq. (Pot)",
        tolerance: 1e-6,
        kinds: &[Family],
        summary: "cumulant tensors of order 1-3 against finite differences of the potential (relative)",
    },
    CheckInfo {
        name: "cumulant4",
        anchor: "§ Gromov–Witten invariants Ỹₙ",
        tolerance: 1e-4,
        kinds: &[Family],
        summary: "fourth cumulant against finite differences of the potential (relative)",
    },
    CheckInfo {
        name: "metric_pd",
        anchor: "draft §, g_ij = ∂_i∂_j φ",
        tolerance: 1e12,
        kinds: &[Family, Cone, Metric],
        summary: "condition number of the metric; infinite when not positive definite",
    },
    CheckInfo {
        name: "legendre_roundtrip",
        anchor: "draft §, dual coordinates (θ,η)",
        tolerance: 1e-8,
        kinds: &[Family],
        summary: "|β - β(η(β))| through the double Legendre transform",
    },
    CheckInfo {
        name: "dual_connections",
        anchor: "draft §, dual connections and dual potentials φ,ψ",
        tolerance: 1e-6,
        kinds: &[Family],
        summary: "duality residual and curvature of both dual connections",
    },
    CheckInfo {
        name: "pairing_invariance",
        anchor: "§3, Frobenius algebra pairing condition",
        tolerance: 1e-10,
        kinds: &[Family, Cone, Algebra],
        summary: "|⟨a∘b,c⟩ - ⟨a,b∘c⟩| of the algebra built from third derivatives",
    },
    CheckInfo {
        name: "extended_bracket",
        anchor: "§3, spin-extended phase space",
        tolerance: 1e-6,
        kinds: &[Family],
        summary: "bracket laws on (z, p, Λ) with observables built from the potential",
    },
    CheckInfo {
        name: "flatness",
        anchor: "§2.1, flat, torsionless",
        tolerance: 1e-6,
        kinds: &[Cone, Metric],
        summary: "Riemann and torsion residuals of the Levi-Civita connection",
    },
    CheckInfo {
        name: "metric_compatibility",
        anchor: "§2.1, flat, torsionless",
        tolerance: 1e-6,
        kinds: &[Cone, Metric],
        summary: "|∇g| of the Levi-Civita connection",
    },
    CheckInfo {
        name: "cone_unit",
        anchor: "draft §, cone multiplication a∘b = −Γab",
        tolerance: 1e-10,
        kinds: &[Cone],
        summary: "|x∘a - a| at the base point x",
    },
    CheckInfo {
        name: "frobenius_axioms",
        anchor: "Eq. (Asso)",
        tolerance: 1e-10,
        kinds: &[Cone, Algebra],
        summary: "commutativity, associativity and invariance of the tangent algebra",
    },
    CheckInfo {
        name: "automorphism_invariance",
        anchor: "draft §, ln φ(Ax) = ln φ(x) − ln det A",
        tolerance: 1e-10,
        kinds: &[Cone],
        summary: "invariance residual for random positive diagonal automorphisms",
    },
    CheckInfo {
        name: "flat_pencil",
        anchor: "§3, flat-pencil proposition",
        tolerance: 1e-6,
        kinds: &[Metric],
        summary: "curvature of g, ∂₁g and five sampled combinations",
    },
    CheckInfo {
        name: "energy_drift",
        anchor: "§2.2, 𝓗(x,p) = ½⟨p,p⟩",
        tolerance: 1e-6,
        kinds: &[Metric],
        summary: "max |H - H₀| over 10⁴ steps at dt = 1e-3",
    },
    CheckInfo {
        name: "drift_order",
        anchor: "§2.2, Hamiltonian recollections",
        tolerance: 0.2,
        kinds: &[Metric],
        summary: "|slope - 2| of log drift against log dt",
    },
    CheckInfo {
        name: "evolution",
        anchor: "§3, Hamiltonian vector fields and symplectic gradient",
        tolerance: 1e-6,
        kinds: &[Metric],
        summary: "dQ/ds from one short step against {H, Q}",
    },
    CheckInfo {
        name: "canonical_bracket",
        anchor: "§3, canonical bracket and chain rule",
        tolerance: 1e-6,
        kinds: &[Metric],
        summary: "antisymmetry, chain rule, Leibniz and Jacobi of the canonical bracket",
    },
    CheckInfo {
        name: "so3_bracket",
        anchor: "§3, {Λ_i, Λ_j} = −Λ_k γ^k_ij",
        tolerance: 1e-6,
        kinds: &[Metric],
        summary: "bracket laws of the extended bracket with so(3) structure constants",
    },
    CheckInfo {
        name: "paracomplex_bracket",
        anchor: "§3, paracomplex bracket",
        tolerance: 1e-10,
        kinds: &[Metric],
        summary: "|{ξ,ξ}| and |{ξ,η} + {η,ξ}| for the metric's para-Hermitian product",
    },
    CheckInfo {
        name: "paracomplex_closedness",
        anchor: "§2.2, Dolbeault (1,1)-form and Ω_C",
        tolerance: 1e-5,
        kinds: &[Metric],
        summary: "|dΩ| of the realified form of an adapted-coordinate potential",
    },
    CheckInfo {
        name: "dbar_splitting",
        anchor: "§2.2, d′ + d″ splitting",
        tolerance: 1e-5,
        kinds: &[Metric],
        summary: "d′², d″² and d′d″ + d″d′ on test forms",
    },
    CheckInfo {
        name: "lorentz_legendre",
        anchor: "§2.3, Lagrangian, momentum and Hamiltonian",
        tolerance: 1e-12,
        kinds: &[Metric],
        summary: "H = 1 at a timelike and H = 0 at the reversed-sign unit velocity",
    },
    CheckInfo {
        name: "wdvv",
        anchor: "Eq. (WDVV)",
        tolerance: 1e-8,
        kinds: &[Algebra],
        summary: "relative WDVV residual at the listed and sampled points",
    },
    CheckInfo {
        name: "lattice_skew",
        anchor: "Eq. (E:p)",
        tolerance: 1e-10,
        kinds: &[Lattice],
        summary: "‖B + Bᵀ‖ of the constant-coefficient operator",
    },
    CheckInfo {
        name: "lattice_jacobi",
        anchor: "Eq. (E:p)",
        tolerance: 0.25,
        kinds: &[Lattice],
        summary: "Jacobi residual on the finest lattice over the coarsest",
    },
    CheckInfo {
        name: "lattice_weak_antisymmetry",
        anchor: "Eq. (E:p); Eq. (E:b)",
        tolerance: 0.25,
        kinds: &[Lattice],
        summary: "h|φᵀ(B + Bᵀ)ψ| on smooth covectors, finest lattice over coarsest",
    },
    CheckInfo {
        name: "symmetrization",
        anchor: "Eq. (E:b)",
        tolerance: 1e-8,
        kinds: &[Lattice],
        summary: "|b^ij_k + b^ji_k - ∂_k g^ij| at sampled states",
    },
    CheckInfo {
        name: "novikov",
        anchor: "§3, Novikov algebra identities",
        tolerance: 1e-10,
        kinds: &[Lattice],
        summary: "left symmetry and right identity of b",
    },
];

pub fn check(name: &str) -> Option<&'static CheckInfo> {
    CHECKS.iter().find(|c| c.name == name)
}

pub const CONE_POTENTIALS: &[&str] = &["orthant"];
pub const HAMILTONIANS: &[&str] = &["harmonic_oscillator"];
pub const ALGEBRA_METRICS: &[&str] = &["antidiagonal", "identity"];
pub const LATTICE_METRICS: &[&str] = &["linear_diagonal", "constant"];
/// `half_gradient`: `b^{ii}_i = ½`; `doubled`: `b^{ii}_i = 2`, violating the
/// symmetrization condition of the linear diagonal metric.
pub const LATTICE_B: &[&str] = &["half_gradient", "doubled"];

/// Metric ids: `euclidean` (any dimension), `off_diagonal_linear`
/// (`[[0, x¹], [x¹, 0]]`), `polar` (Euclidean plane in polar coordinates),
/// `sphere` (round metric, curved).
pub fn metric_dims(id: &str) -> Option<RangeInclusive<usize>> {
    match id {
        "euclidean" => Some(1..=MAX_DIM),
        "off_diagonal_linear" | "polar" | "sphere" => Some(2..=2),
        _ => None,
    }
}

pub fn metric_field(id: &str, dim: usize) -> Option<MetricField> {
    Some(match id {
        "euclidean" => MetricField::euclidean(dim),
        "off_diagonal_linear" => MetricField::new(2, |u| DMatrix::from_row_slice(2, 2, &[0.0, u[0], u[0], 0.0])),
        "polar" => MetricField::new(2, |u| DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, u[0] * u[0]])),
        "sphere" => MetricField::new(2, |u| DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, u[0].sin().powi(2)])),
        _ => return None,
    })
}

/// Box from which sample points are drawn for a metric id.
pub fn metric_sample_box(id: &str) -> (f64, f64) {
    match id {
        "sphere" => (0.4, 1.2),
        _ => (0.5, 2.0),
    }
}

/// Potentials in adapted coordinates `(z₊, z₋)`, with their half dimension.
pub fn adapted_potential(id: &str) -> Option<(usize, PotentialField)> {
    match id {
        "product_square" => Some((1, PotentialField::new(2, |z| (z[0] * z[1]).powi(2)))),
        "coupled_quartic" => Some((2, coupled_quartic())),
        _ => None,
    }
}

/// `(z₊¹z₋¹)² + (z₊²z₋²)² + (z₊¹+z₊²)²(z₋¹+z₋²)²` with its analytic Hessian.
fn coupled_quartic() -> PotentialField {
    PotentialField::new(4, |z| {
        let (s, t) = (z[0] + z[1], z[2] + z[3]);
        (z[0] * z[2]).powi(2) + (z[1] * z[3]).powi(2) + (s * t).powi(2)
    })
    .with_hessian(|z| {
        let (p1, p2, m1, m2) = (z[0], z[1], z[2], z[3]);
        let (s, t) = (p1 + p2, m1 + m2);
        let st = 4.0 * s * t;
        let (tt, ss) = (2.0 * t * t, 2.0 * s * s);
        DMatrix::from_row_slice(
            4,
            4,
            &[
                2.0 * m1 * m1 + tt, tt, 4.0 * p1 * m1 + st, st,
                tt, 2.0 * m2 * m2 + tt, st, 4.0 * p2 * m2 + st,
                4.0 * p1 * m1 + st, st, 2.0 * p1 * p1 + ss, ss,
                st, 4.0 * p2 * m2 + st, ss, 2.0 * p2 * p2 + ss,
            ],
        )
    })
}

/// `cubic3`: `½x₁²x₃ + ½x₁x₂² + c·x₂²x₃²`.
pub fn algebra_potential_dim(id: &str) -> Option<usize> {
    match id {
        "cubic3" => Some(3),
        _ => None,
    }
}

pub fn algebra_potential(id: &str, coefficient: f64) -> Option<PotentialField> {
    match id {
        "cubic3" => Some(cubic_potential3(coefficient)),
        _ => None,
    }
}

pub fn algebra_metric(id: &str, dim: usize) -> Option<MetricField> {
    match id {
        "antidiagonal" => Some(antidiagonal_metric(dim)),
        "identity" => Some(MetricField::euclidean(dim)),
        _ => None,
    }
}

/// Contravariant lattice metric `g^{ij}(u)`: `diag(u)` or `diag(1, 2, ...)`.
pub fn lattice_metric(id: &str) -> Option<fn(&[f64]) -> DMatrix<f64>> {
    match id {
        "linear_diagonal" => Some(|u| DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(u))),
        "constant" => Some(|u| DMatrix::from_fn(u.len(), u.len(), |i, j| if i == j { (i + 1) as f64 } else { 0.0 })),
        _ => None,
    }
}

pub fn lattice_b(id: &str, components: usize) -> Option<ProductTensor> {
    let diagonal = |v: f64| ProductTensor::from_fn(components, move |i, j, k| if i == j && j == k { v } else { 0.0 });
    match id {
        "half_gradient" => Some(diagonal(0.5)),
        "doubled" => Some(diagonal(2.0)),
        _ => None,
    }
}

pub fn lattice(metric: &str, b: &str, components: usize, sites: usize) -> Option<Result<LatticeBracket>> {
    let g = lattice_metric(metric)?;
    let b = lattice_b(b, components)?;
    Some(LatticeBracket::new(sites, g, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_names_are_unique() {
        for (i, a) in CHECKS.iter().enumerate() {
            assert!(CHECKS[i + 1..].iter().all(|b| b.name != a.name), "{}", a.name);
            assert!(a.tolerance > 0.0 && !a.kinds.is_empty() && !a.anchor.is_empty());
        }
    }

    #[test]
    fn every_kind_has_checks() {
        for kind in Kind::ALL {
            assert!(CHECKS.iter().any(|c| c.kinds.contains(&kind)), "{kind}");
        }
    }
}
