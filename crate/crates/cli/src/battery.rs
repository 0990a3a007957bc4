//! Runs the checks named in a spec and collects report rows.
//!
//! Checks run on a rayon pool; rows come back in spec order. Every check
//! draws its sample points from its own ChaCha8 stream, seeded from the spec
//! seed and the check name, so results do not depend on scheduling.

use std::time::Instant;

use frobsym_core::fd::{self, Stencil};
use frobsym_core::frobenius::{
    algebra_at, algebra_from_potential, novikov_residuals, wdvv_residual, FrobeniusAlgebra, ProductTensor,
};
use frobsym_core::geometry::{
    automorphism_invariance_residual, cone_multiply, cone_structure, curvature_flatness, dual_connections,
    flat_pencil_check, hessian_log_metric, metric_compatibility_residual, orthant_potential, MetricField,
    PotentialField,
};
use frobsym_core::linalg;
use frobsym_core::paracomplex::ParaVector;
use frobsym_core::poisson::{
    bracket_property_residuals, evolution_derivative, paracomplex_bracket, paracomplex_bracket_via_conjugate,
    smooth_covector, smooth_state, Bracket, LatticeBracket, Observable, StructureConstants,
};
use frobsym_core::statmanifold::ExponentialFamily;
use frobsym_core::symplectic::{
    closedness_residual, dbar_split_residuals, dolbeault_metric, drift_order, integrate, legendre_hamiltonian,
    paracomplex_two_form, DenseForm, HamiltonianSystem, LorentzLagrangian, PhasePoint,
};
use frobsym_core::{Error, Result};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::registry::{self, CheckInfo};
use crate::report::{Header, Report, Row};
use crate::spec::{AlgebraPayload, ConePayload, FamilyPayload, LatticePayload, ManifoldSpec, MetricPayload, Payload};

/// Overrides applied on top of a spec.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Multiplies every tolerance.
    pub tol_scale: f64,
    /// Base step of the finite-difference oracle in the cumulant checks,
    /// divided by the largest `|X_j(ω)|` before use.
    pub fd_step: Option<f64>,
    /// Worker threads; `None` reads `FROBSYM_THREADS`, then uses rayon's default.
    pub threads: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { tol_scale: 1.0, fd_step: None, threads: None }
    }
}

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn threads_from_env() -> Option<usize> {
    std::env::var("FROBSYM_THREADS").ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Seed of the stream used by `check`.
pub fn check_seed(seed: u64, check: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(check.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

pub fn run_battery(spec: &ManifoldSpec, opts: &RunOptions) -> Report {
    let run = || spec.checks.par_iter().map(|name| run_one(spec, name, opts)).collect::<Vec<_>>();
    let threads = opts.threads.or_else(threads_from_env);
    let rows = match threads.map(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build()) {
        Some(Ok(pool)) => pool.install(run),
        _ => run(),
    };
    Report {
        header: Header {
            name: spec.name.clone(),
            kind: spec.kind().as_str().to_string(),
            spec_hash: spec.hash.clone(),
            seed: spec.seed,
            version: VERSION.to_string(),
            checks: rows.len(),
        },
        rows,
    }
}

enum Outcome {
    Value { residual: f64, detail: String },
    Skip(String),
}

fn value(residual: f64, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome::Value { residual, detail: detail.into() })
}

fn run_one(spec: &ManifoldSpec, name: &str, opts: &RunOptions) -> Row {
    let info: &CheckInfo = registry::check(name).expect("spec validation admits only registered checks");
    let tolerance = spec.tolerance(name).unwrap_or(info.tolerance) * opts.tol_scale;
    let mut rng = ChaCha8Rng::seed_from_u64(check_seed(spec.seed, name));
    let start = Instant::now();
    let outcome = dispatch(&spec.payload, name, &mut rng, opts);
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    let mut row = match outcome {
        Ok(Outcome::Value { residual, detail }) => Row::evaluated(name, residual, tolerance, detail, info.anchor),
        Ok(Outcome::Skip(reason)) => Row::skipped(name, tolerance, reason, info.anchor),
        Err(e) => Row::evaluated(name, f64::NAN, tolerance, format!("error: {e}"), info.anchor),
    };
    row.runtime_ms = (elapsed * 1e3).round() / 1e3;
    row
}

fn dispatch(payload: &Payload, name: &str, rng: &mut ChaCha8Rng, opts: &RunOptions) -> Result<Outcome> {
    match payload {
        Payload::ExponentialFamily(p) => family_check(p, name, rng, opts),
        Payload::ConePotential(p) => cone_check(p, name, rng),
        Payload::ExplicitMetric(p) => metric_check(p, name, rng),
        Payload::Algebra(p) => algebra_check(p, name, rng),
        Payload::Lattice(p) => lattice_check(p, name, rng),
    }
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

fn fmt_point(x: &[f64]) -> String {
    let parts: Vec<String> = x.iter().map(|v| format!("{v:.4}")).collect();
    format!("({})", parts.join(", "))
}

fn unknown(name: &str) -> Error {
    Error::InvalidInput(format!("check `{name}` is not routed for this kind"))
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |a: f64, v| if v.is_nan() { f64::NAN } else { a.max(v) })
}

/// Condition number of a symmetric matrix, infinite unless positive definite.
fn pd_condition(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = linalg::symmetric_eigenvalues(m);
    let (lo, hi) = (eig.min(), eig.max());
    (if lo > 0.0 { hi / lo } else { f64::INFINITY }, lo)
}

fn all_indices(n: usize, order: usize) -> Vec<Vec<usize>> {
    // non-decreasing multi-indices cover a symmetric tensor
    let mut out = Vec::new();
    let mut idx = vec![0; order];
    loop {
        out.push(idx.clone());
        let Some(pos) = (0..order).rev().find(|&p| idx[p] + 1 < n) else { return out };
        let v = idx[pos] + 1;
        for slot in &mut idx[pos..] {
            *slot = v;
        }
    }
}

// ---------------------------------------------------------------- families

fn family(p: &FamilyPayload) -> Result<ExponentialFamily> {
    match &p.base {
        Some(base) => ExponentialFamily::with_base(&p.statistics, base.clone()),
        None => ExponentialFamily::new(&p.statistics),
    }
}

fn family_points(p: &FamilyPayload, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut pts = vec![p.beta.clone()];
    pts.extend((0..3).map(|_| uniform(rng, p.beta.len(), -1.5, 1.5)));
    pts
}

fn family_check(p: &FamilyPayload, name: &str, rng: &mut ChaCha8Rng, opts: &RunOptions) -> Result<Outcome> {
    let fam = family(p)?;
    let n = fam.dim();
    let points = family_points(p, rng);
    match name {
        "gibbs_normalization" => {
            let mut worst: f64 = 0.0;
            for b in &points {
                worst = worst.max((fam.gibbs_density(b)?.iter().sum::<f64>() - 1.0).abs());
            }
            value(worst, format!("{} points", points.len()))
        }
        "cumulants" | "cumulant4" => {
            let orders: &[usize] = if name == "cumulants" { &[1, 2, 3] } else { &[4] };
            let phi = |b: &[f64]| fam.potential(b).unwrap_or(f64::NAN);
            // β enters only through β·X, so the step shrinks with the largest statistic
            let spread = p.statistics.iter().flatten().fold(1.0f64, |a, v| a.max(v.abs()));
            let mut worst: f64 = 0.0;
            let mut at = String::new();
            for b in &points {
                for &order in orders {
                    let t = fam.cumulant_tensor(b, order)?;
                    let step = opts.fd_step.unwrap_or(if order == 1 { 1e-3 } else { 1e-2 }) / spread;
                    for idx in all_indices(n, order) {
                        let analytic = t.get(&idx);
                        let numeric = fd::nested_partial(&phi, b, &idx, Stencil::Central4, step);
                        let rel = (analytic - numeric).abs() / analytic.abs().max(1.0);
                        if !(rel <= worst) {
                            worst = rel;
                            at = format!("order {order} index {idx:?} at β = {}", fmt_point(b));
                        }
                    }
                }
            }
            value(worst, at)
        }
        "metric_pd" => {
            let mut worst: f64 = 0.0;
            let mut min_eig = f64::INFINITY;
            for b in &points {
                let (cond, lo) = pd_condition(&fam.metric(b)?);
                worst = worst.max(cond);
                min_eig = min_eig.min(lo);
            }
            value(worst, format!("smallest eigenvalue {min_eig:.3e}"))
        }
        "legendre_roundtrip" => {
            let mut worst: f64 = 0.0;
            for b in &points {
                let eta = fam.dual_coordinates(b)?.eta;
                let back = fam.beta_from_eta(&eta, &vec![0.0; n])?;
                worst = worst.max(max_of(back.iter().zip(b).map(|(x, y)| (x - y).abs())));
            }
            value(worst, format!("{} points", points.len()))
        }
        "dual_connections" => {
            let (mut d, mut e, mut m) = (0.0f64, 0.0f64, 0.0f64);
            for b in &points {
                let dc = dual_connections(&fam, b)?;
                d = d.max(dc.duality_residual);
                e = e.max(dc.exponential_curvature);
                m = m.max(dc.mixture_curvature);
            }
            value(max_of([d, e, m]), format!("duality {d:.2e}, exponential {e:.2e}, mixture {m:.2e}"))
        }
        "pairing_invariance" => {
            let mut worst: f64 = 0.0;
            for b in &points {
                let alg = algebra_from_potential(&fam.cumulant_tensor(b, 3)?, &fam.metric(b)?)?;
                worst = worst.max(alg.pairing_invariance_residual());
            }
            value(worst, "algebra of the third cumulant with the Fisher pairing")
        }
        "extended_bracket" => {
            let Some(m) = p.spin_block else {
                return Ok(Outcome::Skip("no spin_block in the payload".into()));
            };
            let gamma = if m == 3 { StructureConstants::so3() } else { StructureConstants::zero(m) };
            let obs = spin_observables(&fam, m);
            let samples: Vec<Vec<f64>> = (0..3)
                .map(|_| {
                    let mut y = uniform(rng, n, -1.0, 1.0);
                    y.extend(uniform(rng, n + m, -1.0, 1.0));
                    y
                })
                .collect();
            let r = bracket_property_residuals(&Bracket::Extended { n, gamma }, [&obs[0], &obs[1], &obs[2]], &samples)?;
            value(
                r.max(),
                format!(
                    "m' = {m}; antisymmetry {:.2e}, chain {:.2e}, Leibniz {:.2e}, Jacobi {:.2e}",
                    r.antisymmetry, r.chain_rule, r.leibniz, r.jacobi
                ),
            )
        }
        _ => Err(unknown(name)),
    }
}

/// Observables on `(z, p, Λ)` built from the family potential.
fn spin_observables(fam: &ExponentialFamily, m: usize) -> [Observable; 3] {
    let n = fam.dim();
    let (f1, f2) = (fam.clone(), fam.clone());
    let a = Observable::new(move |y| f1.potential(&y[..n]).unwrap_or(f64::NAN) + y[2 * n] * y[n])
        .with_gradient(move |y| {
            let mut g = vec![0.0; 2 * n + m];
            let mean = f2.mean(&y[..n]).unwrap_or_else(|_| vec![f64::NAN; n]);
            for (gi, mi) in g.iter_mut().zip(mean) {
                *gi = -mi;
            }
            g[n] = y[2 * n];
            g[2 * n] = y[n];
            g
        });
    let b = Observable::new(move |y| 0.5 * y[n..2 * n].iter().map(|v| v * v).sum::<f64>() + y[2 * n] * y[2 * n] * y[0]);
    let c = Observable::new(move |y| (0..n).map(|i| y[i] * y[n + i]).sum::<f64>() + y[2 * n + m - 1]);
    [a, b, c]
}

// ------------------------------------------------------------------- cones

fn cone_algebra(phi: &PotentialField, x: &[f64]) -> Result<FrobeniusAlgebra> {
    let n = phi.dim();
    let gamma = cone_structure(phi, x)?;
    // cone_structure already carries the sign of a∘b = -Γab
    let product = ProductTensor::from_fn(n, |i, j, k| gamma.get(k, i, j));
    FrobeniusAlgebra::new(product, hessian_log_metric(phi).value(x)?)
}

fn cone_check(p: &ConePayload, name: &str, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut notes = Vec::new();
    for &n in &p.dims {
        let phi = orthant_potential(n);
        let samples: Vec<Vec<f64>> = (0..4).map(|_| uniform(rng, n, 0.5, 3.0)).collect();
        let metric = hessian_log_metric(&phi);
        let mut note = String::new();
        let r = match name {
            "metric_pd" => {
                let mut c: f64 = 0.0;
                for x in &samples {
                    c = c.max(pd_condition(&metric.value(x)?).0);
                }
                c
            }
            "flatness" => {
                let rep = curvature_flatness(&metric, &samples, 1e-6)?;
                rep.riemann_max_abs.max(rep.torsion_max_abs)
            }
            "metric_compatibility" => {
                max_of(samples.iter().map(|x| metric_compatibility_residual(&metric, x)).collect::<Result<Vec<_>>>()?)
            }
            "cone_unit" => {
                let mut w: f64 = 0.0;
                for x in &samples {
                    let a = uniform(rng, n, -2.0, 2.0);
                    let xa = cone_multiply(&phi, x, x, &a)?;
                    w = w.max(max_of(xa.iter().zip(&a).map(|(u, v)| (u - v).abs() / v.abs().max(1.0))));
                }
                w
            }
            "frobenius_axioms" | "pairing_invariance" => {
                let mut w: f64 = 0.0;
                for x in &samples {
                    let ax = cone_algebra(&phi, x)?.axioms();
                    w = w.max(if name == "pairing_invariance" {
                        ax.pairing_invariance
                    } else {
                        max_of([ax.commutativity, ax.associativity, ax.pairing_invariance])
                    });
                }
                w
            }
            "automorphism_invariance" => {
                let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(uniform(rng, n, 0.5, 2.0)));
                if n > 1 {
                    let mut shear = DMatrix::identity(n, n);
                    shear[(0, n - 1)] = 0.5;
                    let s = automorphism_invariance_residual(&phi, &shear, &samples)?;
                    note = format!(" (shear {s:.2e})");
                }
                automorphism_invariance_residual(&phi, &diag, &samples)?
            }
            _ => return Err(unknown(name)),
        };
        notes.push(format!("n={n}: {r:.2e}{note}"));
        worst = max_of([worst, r]);
    }
    value(worst, notes.join("; "))
}

// ----------------------------------------------------------------- metrics

fn metric_samples(p: &MetricPayload, rng: &mut ChaCha8Rng, count: usize) -> Vec<Vec<f64>> {
    let (lo, hi) = registry::metric_sample_box(&p.metric);
    (0..count).map(|_| uniform(rng, p.dim, lo, hi)).collect()
}

fn metric_check(p: &MetricPayload, name: &str, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let metric: MetricField = registry::metric_field(&p.metric, p.dim).expect("validated metric id");
    let n = p.dim;
    match name {
        "metric_pd" => {
            let mut c: f64 = 0.0;
            for x in metric_samples(p, rng, 4) {
                c = c.max(pd_condition(&metric.value(&x)?).0);
            }
            value(c, format!("metric `{}`", p.metric))
        }
        "flatness" => {
            let rep = curvature_flatness(&metric, &metric_samples(p, rng, 4), 1e-6)?;
            value(
                rep.riemann_max_abs.max(rep.torsion_max_abs),
                format!("Riemann {:.2e}, torsion {:.2e}", rep.riemann_max_abs, rep.torsion_max_abs),
            )
        }
        "metric_compatibility" => {
            let r = metric_samples(p, rng, 4)
                .iter()
                .map(|x| metric_compatibility_residual(&metric, x))
                .collect::<Result<Vec<_>>>()?;
            value(max_of(r), format!("metric `{}`", p.metric))
        }
        "flat_pencil" => {
            let samples = metric_samples(p, rng, 3);
            let lambdas = uniform(rng, 5, -0.4, 2.0);
            let rep = flat_pencil_check(&metric, 0, &lambdas, &samples, 1e-6)?;
            value(
                rep.max_residual(),
                format!("g {:.2e}, ∂₁g {:.2e}, λ = {}", rep.metric_residual, rep.derivative_residual, fmt_point(&lambdas)),
            )
        }
        "energy_drift" | "drift_order" | "evolution" => {
            if p.hamiltonian.is_none() {
                return Ok(Outcome::Skip("no hamiltonian in the payload".into()));
            }
            let sys = HamiltonianSystem::harmonic_oscillator();
            let y0 = PhasePoint::new(vec![1.0; n], vec![0.0; n])?;
            match name {
                "energy_drift" => {
                    let t = integrate(&sys, &y0, 1e-3, 10_000)?;
                    value(t.max_energy_drift, "10000 steps, dt = 1e-3")
                }
                "drift_order" => {
                    let dts = [1e-3, 2e-3, 5e-3, 1e-2];
                    let slope = drift_order(&sys, &y0, 10.0, &dts)?;
                    value((slope - 2.0).abs(), format!("slope {slope:.4} over dt ∈ [1e-3, 1e-2]"))
                }
                _ => {
                    let h = sys.observable(n);
                    let dt = 1e-6;
                    let mut worst: f64 = 0.0;
                    for _ in 0..3 {
                        let z = uniform(rng, n, -1.0, 1.0);
                        let pm = uniform(rng, n, -1.0, 1.0);
                        let y = PhasePoint::new(z, pm)?;
                        let flat = y.flat();
                        let next = integrate(&sys, &y, dt, 1)?.records[1].clone();
                        let moved: Vec<f64> = next.z.iter().chain(&next.p).copied().collect();
                        for (i, (a, b)) in moved.iter().zip(&flat).enumerate() {
                            let d = evolution_derivative(&h, &Observable::coordinate(i), &flat)?;
                            worst = worst.max(((a - b) / dt - d).abs());
                        }
                    }
                    value(worst, "one step of dt = 1e-6 at 3 points")
                }
            }
        }
        "canonical_bracket" => {
            let obs = phase_observables(n, 0);
            let samples: Vec<Vec<f64>> = (0..3).map(|_| uniform(rng, 2 * n, -1.5, 1.5)).collect();
            let r = bracket_property_residuals(&Bracket::Canonical { n }, [&obs[0], &obs[1], &obs[2]], &samples)?;
            value(r.max(), bracket_detail(&r))
        }
        "so3_bracket" => {
            let obs = phase_observables(n, 3);
            let samples: Vec<Vec<f64>> = (0..3).map(|_| uniform(rng, 2 * n + 3, -1.5, 1.5)).collect();
            let br = Bracket::Extended { n, gamma: StructureConstants::so3() };
            let r = bracket_property_residuals(&br, [&obs[0], &obs[1], &obs[2]], &samples)?;
            value(r.max(), bracket_detail(&r))
        }
        "paracomplex_bracket" => {
            let mut worst: f64 = 0.0;
            for _ in 0..16 {
                let x = metric_samples(p, rng, 1).remove(0);
                let g = metric.value(&x)?;
                let xi = ParaVector::from_parts(&uniform(rng, n, -5.0, 5.0), &uniform(rng, n, -5.0, 5.0))?;
                let eta = ParaVector::from_parts(&uniform(rng, n, -5.0, 5.0), &uniform(rng, n, -5.0, 5.0))?;
                let self_pair = paracomplex_bracket(&g, &xi, &xi)?.abs();
                let ab = paracomplex_bracket(&g, &xi, &eta)?;
                let ba = paracomplex_bracket(&g, &eta, &xi)?;
                let via = paracomplex_bracket_via_conjugate(&g, &xi, &eta)?;
                let agree = (via.re - ab).abs().max(via.im.abs()) / ab.abs().max(1.0);
                worst = max_of([worst, self_pair, (ab + ba).abs(), agree]);
            }
            value(worst, "16 random pairs; {ξ,ξ}, antisymmetry and the conjugate route")
        }
        "paracomplex_closedness" => {
            let Some(id) = &p.adapted_potential else {
                return Ok(Outcome::Skip("no adapted_potential in the payload".into()));
            };
            let (m, phi) = registry::adapted_potential(id).expect("validated potential id");
            let form = paracomplex_two_form(m, dolbeault_metric(phi));
            let samples: Vec<Vec<f64>> = (0..3).map(|_| uniform(rng, 2 * m, -1.0, 1.0)).collect();
            value(closedness_residual(&form, &samples)?, format!("potential `{id}`, m = {m}"))
        }
        "dbar_splitting" => {
            let forms2 = [
                DenseForm::function(2, |z| z[0] * z[1]),
                DenseForm::function(2, |z| z[0].sin() * z[1].cos()),
            ];
            let forms4 = [
                DenseForm::function(4, |z| z[0] * z[0] * z[3] + z[1] * z[2].exp()),
                DenseForm::one_form(4, |z| vec![z[1] * z[2], z[0].sin() * z[3], z[3] * z[3], (z[0] - z[2]).cos()]),
            ];
            let s2: Vec<Vec<f64>> = (0..2).map(|_| uniform(rng, 2, -1.0, 1.0)).collect();
            let s4: Vec<Vec<f64>> = (0..2).map(|_| uniform(rng, 4, -1.0, 1.0)).collect();
            let (a, b) = (dbar_split_residuals(&forms2, &s2)?, dbar_split_residuals(&forms4, &s4)?);
            value(
                a.max().max(b.max()),
                format!(
                    "d′² {:.2e}, d″² {:.2e}, anticommutator {:.2e}",
                    a.d_plus_squared.max(b.d_plus_squared),
                    a.d_minus_squared.max(b.d_minus_squared),
                    a.anticommutator.max(b.anticommutator)
                ),
            )
        }
        "lorentz_legendre" => {
            let lag = LorentzLagrangian::minkowski();
            let z = [0.0; 4];
            let h1 = legendre_hamiltonian(&lag, &[1.0, 0.0, 0.0, 0.0], &z)?.h;
            let h0 = legendre_hamiltonian(&lag, &[0.0, 0.0, 0.0, 1.0], &z)?.h;
            value(max_of([(h1 - 1.0).abs(), h0.abs()]), format!("H(e₁) = {h1}, H(e₄) = {h0}"))
        }
        _ => Err(unknown(name)),
    }
}

/// Polynomial observables on `n` positions, `n` momenta and `spin` trailing
/// coordinates.
fn phase_observables(n: usize, spin: usize) -> [Observable; 3] {
    let last = n - 1;
    let s = 2 * n;
    let a = Observable::new(move |y| {
        let extra = if spin > 0 { y[s] * y[s] * y[s + spin - 1] } else { 0.0 };
        y[0] * y[0] * y[n + last] + y[n] - y[last] * y[n] + extra
    });
    let b = Observable::new(move |y| {
        let extra = if spin > 1 { y[s] * y[s + 1] - y[0] * y[s + 1] * y[s + 1] } else { 0.0 };
        y[n] * y[last] - y[0] * y[n + last] * y[n + last] + 0.5 * y[last].powi(3) + extra
    });
    let c = Observable::new(move |y| {
        let extra = if spin > 0 { y[s..s + spin].iter().product::<f64>() + y[s + spin - 1].powi(2) } else { 0.0 };
        (0..n).map(|i| y[i] * y[n + i]).product::<f64>() + y[0] + extra
    });
    [a, b, c]
}

fn bracket_detail(r: &frobsym_core::poisson::BracketResiduals) -> String {
    format!(
        "antisymmetry {:.2e}, chain {:.2e}, Leibniz {:.2e}, Jacobi {:.2e}",
        r.antisymmetry, r.chain_rule, r.leibniz, r.jacobi
    )
}

// ---------------------------------------------------------------- algebras

fn algebra_check(p: &AlgebraPayload, name: &str, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    if let Some(product) = &p.product {
        let pairing = p.pairing.as_ref().expect("validated pairing");
        let n = pairing.len();
        let g = DMatrix::from_fn(n, n, |i, j| pairing[i][j]);
        let alg = FrobeniusAlgebra::new(ProductTensor::from_data(n, product.clone())?, g)?;
        let ax = alg.axioms();
        return match name {
            "pairing_invariance" => value(ax.pairing_invariance, "explicit structure constants"),
            "frobenius_axioms" => value(
                max_of([ax.commutativity, ax.associativity, ax.pairing_invariance]),
                format!("commutativity {:.2e}, associativity {:.2e}", ax.commutativity, ax.associativity),
            ),
            "wdvv" => Ok(Outcome::Skip("no potential: WDVV needs third derivatives".into())),
            _ => Err(unknown(name)),
        };
    }
    let id = p.potential.as_deref().expect("validated potential");
    let dim = registry::algebra_potential_dim(id).expect("validated potential id");
    let phi = registry::algebra_potential(id, p.coefficient).expect("validated potential id");
    let metric = registry::algebra_metric(p.metric.as_deref().expect("validated metric"), dim).expect("validated metric id");
    let mut points = p.points.clone();
    points.extend((0..4).map(|_| uniform(rng, dim, -1.5, 1.5)));
    let mut worst: f64 = 0.0;
    let mut at = String::new();
    for x in &points {
        let r = match name {
            "wdvv" => {
                let w = wdvv_residual(&phi, &metric, x)?;
                (w.relative, format!("max abs {:.3e}", w.max_abs))
            }
            "frobenius_axioms" => {
                let ax = algebra_at(&phi, &metric, x)?.axioms();
                (max_of([ax.commutativity, ax.associativity, ax.pairing_invariance]), format!("associativity {:.3e}", ax.associativity))
            }
            "pairing_invariance" => (algebra_at(&phi, &metric, x)?.pairing_invariance_residual(), String::new()),
            _ => return Err(unknown(name)),
        };
        if !(r.0 <= worst) {
            worst = r.0;
            at = format!("worst at {} {}", fmt_point(x), r.1);
        }
    }
    let detail = if at.is_empty() { format!("{} points", points.len()) } else { format!("{} points, {}", points.len(), at.trim_end()) };
    value(worst, detail)
}

// ----------------------------------------------------------------- lattice

fn build_lattice(p: &LatticePayload, sites: usize) -> Result<LatticeBracket> {
    registry::lattice(&p.metric, &p.b, p.components, sites).expect("validated lattice ids")
}

fn lattice_jacobi(lb: &LatticeBracket) -> Result<f64> {
    let u = smooth_state(lb);
    let [x, y, z] = [(1.0, 0.1), (2.0, 0.7), (1.0, 1.9)].map(|(f, ph)| smooth_covector(lb, f, ph));
    Ok(lb.check(&u, [&x, &y, &z])?.jacobi)
}

fn lattice_check(p: &LatticePayload, name: &str, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let (coarse, fine) = (p.sites[0], *p.sites.last().expect("validated sites"));
    let r = p.components;
    let g = registry::lattice_metric(&p.metric).expect("validated metric id");
    let b = registry::lattice_b(&p.b, r).expect("validated tensor id");
    match name {
        "lattice_skew" => {
            let lb = build_lattice(p, fine)?;
            let u = smooth_state(&lb);
            let mean = vec![2.0; r];
            let frozen = g(&mean);
            let constant = LatticeBracket::new(fine, move |_| frozen.clone(), ProductTensor::zeros(r))?;
            let op = constant.assemble(&u)?;
            value((&op + op.transpose()).amax(), format!("N = {fine}, g frozen at u = 2"))
        }
        "lattice_jacobi" => {
            if coarse == fine {
                return Ok(Outcome::Skip("needs at least two lattice sizes".into()));
            }
            let (jc, jf) = (lattice_jacobi(&build_lattice(p, coarse)?)?, lattice_jacobi(&build_lattice(p, fine)?)?);
            let ratio = jf / jc;
            value(ratio, format!("N = {coarse}: {jc:.3e}, N = {fine}: {jf:.3e}, reduction {:.1}×", jc / jf))
        }
        "lattice_weak_antisymmetry" => {
            if coarse == fine {
                return Ok(Outcome::Skip("needs at least two lattice sizes".into()));
            }
            let weak = |sites: usize| -> Result<f64> {
                let lb = build_lattice(p, sites)?;
                let u = smooth_state(&lb);
                let [x, y, z] = [(1.0, 0.1), (2.0, 0.7), (1.0, 1.9)].map(|(f, ph)| smooth_covector(&lb, f, ph));
                Ok(lb.check(&u, [&x, &y, &z])?.weak_antisymmetry)
            };
            let (wc, wf) = (weak(coarse)?, weak(fine)?);
            value(wf / wc, format!("N = {coarse}: {wc:.3e}, N = {fine}: {wf:.3e}"))
        }
        "symmetrization" | "novikov" => {
            let field = MetricField::new(r, g);
            let mut worst: f64 = 0.0;
            for _ in 0..4 {
                let u = uniform(rng, r, 1.0, 3.0);
                let res = novikov_residuals(&b, &field, &u)?;
                worst = worst.max(if name == "novikov" { res.left_symmetry.max(res.right_identity) } else { res.symmetrization });
            }
            value(worst, format!("tensor `{}` against metric `{}`", p.b, p.metric))
        }
        _ => Err(unknown(name)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_index_enumeration() {
        assert_eq!(all_indices(2, 2), vec![vec![0, 0], vec![0, 1], vec![1, 1]]);
        assert_eq!(all_indices(3, 3).len(), 10);
        assert_eq!(all_indices(1, 4), vec![vec![0; 4]]);
    }

    #[test]
    fn check_seeds_differ_by_name() {
        assert_ne!(check_seed(1, "wdvv"), check_seed(1, "flatness"));
        assert_eq!(check_seed(1, "wdvv"), check_seed(1, "wdvv"));
    }
}
