//! Deterministic tensor quadrature and a seeded Monte Carlo engine.
//!
//! Velocity integrals use Gauss-Hermite nodes (weight e^{-x^2}), internal
//! energies Gauss-Laguerre (weight e^{-I}), the unit sphere a product
//! Gauss-Legendre (cos theta) x uniform (phi) rule, and the energy-split
//! parameters R, r Gauss-Legendre on [0,1].

use crate::error::{KineticError, Result};
use nalgebra::{DMatrix, Vector3};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Orders and scalings for the deterministic rules plus the Monte Carlo
/// fallback parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    /// Gauss-Hermite order per velocity axis.
    pub hermite_order: usize,
    /// Gauss-Laguerre order for internal-energy integrals.
    pub laguerre_order: usize,
    /// Gauss-Legendre order in cos(theta) for the sphere rule.
    pub sphere_theta: usize,
    /// Number of uniform azimuthal nodes for the sphere rule.
    pub sphere_phi: usize,
    /// Gauss-Legendre order on [0,1] for the R and r parameters.
    pub legendre_order: usize,
    /// Velocity scaling applied on top of the per-mass rescaling.
    pub velocity_scale: f64,
    /// Internal-energy scaling.
    pub energy_scale: f64,
    /// Seed for the Monte Carlo engine.
    pub mc_seed: u64,
    /// Sample count for the Monte Carlo engine.
    pub mc_samples: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            hermite_order: 10,
            laguerre_order: 5,
            sphere_theta: 3,
            sphere_phi: 6,
            legendre_order: 3,
            velocity_scale: 1.0,
            energy_scale: 1.0,
            mc_seed: 7,
            mc_samples: 200_000,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.hermite_order == 0
            || self.laguerre_order == 0
            || self.sphere_theta == 0
            || self.sphere_phi == 0
            || self.legendre_order == 0
        {
            return Err(KineticError::parameter("all quadrature orders must be >= 1"));
        }
        if self.velocity_scale <= 0.0 || self.energy_scale <= 0.0 {
            return Err(KineticError::parameter("quadrature scales must be positive"));
        }
        Ok(())
    }

    /// Copy with every deterministic order doubled (for nested error estimates).
    pub fn refined(&self) -> Self {
        QuadratureSpec {
            hermite_order: self.hermite_order * 2,
            laguerre_order: self.laguerre_order * 2,
            sphere_theta: self.sphere_theta * 2,
            sphere_phi: self.sphere_phi * 2,
            legendre_order: self.legendre_order * 2,
            ..self.clone()
        }
    }
}

/// Integration domain selector for [`build_rule`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// R^3 against the natural Gaussian weight (nodes carry e^{x^2}-corrected weights).
    Velocity3,
    /// R_+ against the natural e^{-I} weight (weights corrected likewise).
    Energy,
    /// Unit sphere S^2, plain surface measure.
    Sphere,
    /// [0,1], plain Lebesgue measure.
    UnitInterval,
}

/// Nodes and weights of a (possibly composite) rule. Weights are plain
/// Lebesgue/surface weights: `integrate` is just the weighted sum of the
/// integrand at the nodes.
#[derive(Debug, Clone)]
pub struct NodeSet {
    pub dim: usize,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl NodeSet {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Tensor product of two rules.
    pub fn tensor(&self, other: &NodeSet) -> NodeSet {
        let mut nodes = Vec::with_capacity(self.len() * other.len());
        let mut weights = Vec::with_capacity(self.len() * other.len());
        for (na, wa) in self.nodes.iter().zip(&self.weights) {
            for (nb, wb) in other.nodes.iter().zip(&other.weights) {
                let mut n = na.clone();
                n.extend_from_slice(nb);
                nodes.push(n);
                weights.push(wa * wb);
            }
        }
        NodeSet {
            dim: self.dim + other.dim,
            nodes,
            weights,
        }
    }
}

/// One-dimensional Gaussian rule: nodes and weights for the stated weight
/// function via the Golub-Welsch eigenvalue method.
#[derive(Debug, Clone)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1d {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn golub_welsch(diag: &[f64], offdiag: &[f64], mu0: f64) -> Rule1d {
    let n = diag.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = diag[i];
    }
    for i in 0..n - 1 {
        m[(i, i + 1)] = offdiag[i];
        m[(i + 1, i)] = offdiag[i];
    }
    let eig = m.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let x = eig.eigenvalues[j];
            let v0 = eig.eigenvectors[(0, j)];
            (x, mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Rule1d {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

/// Gauss-Hermite rule for weight e^{-x^2} on (-inf, inf).
pub fn gauss_hermite(order: usize) -> Rule1d {
    let diag = vec![0.0; order];
    let offdiag: Vec<f64> = (1..order).map(|k| (k as f64 / 2.0).sqrt()).collect();
    golub_welsch(&diag, &offdiag, std::f64::consts::PI.sqrt())
}

/// Generalized Gauss-Laguerre rule for weight x^a e^{-x} on (0, inf).
pub fn gauss_laguerre(order: usize, a: f64) -> Rule1d {
    let diag: Vec<f64> = (0..order).map(|k| 2.0 * k as f64 + a + 1.0).collect();
    let offdiag: Vec<f64> = (1..order)
        .map(|k| (k as f64 * (k as f64 + a)).sqrt())
        .collect();
    golub_welsch(&diag, &offdiag, statrs::function::gamma::gamma(a + 1.0))
}

/// Gauss-Legendre rule on [0,1] with unit weight.
pub fn gauss_legendre_unit(order: usize) -> Rule1d {
    let diag = vec![0.0; order];
    let offdiag: Vec<f64> = (1..order)
        .map(|k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        })
        .collect();
    let r = golub_welsch(&diag, &offdiag, 2.0);
    Rule1d {
        nodes: r.nodes.iter().map(|x| 0.5 * (x + 1.0)).collect(),
        weights: r.weights.iter().map(|w| 0.5 * w).collect(),
    }
}

/// Gauss-Legendre rule on [a,b] with unit weight.
pub fn gauss_legendre(order: usize, a: f64, b: f64) -> Rule1d {
    let unit = gauss_legendre_unit(order);
    Rule1d {
        nodes: unit.nodes.iter().map(|x| a + (b - a) * x).collect(),
        weights: unit.weights.iter().map(|w| (b - a) * w).collect(),
    }
}

/// Product rule on S^2: Gauss-Legendre in cos(theta), uniform in phi.
/// Weights sum to 4*pi.
pub struct SphereRule {
    pub directions: Vec<Vector3<f64>>,
    pub weights: Vec<f64>,
}

pub fn sphere_rule(n_theta: usize, n_phi: usize) -> SphereRule {
    let ct = gauss_legendre(n_theta, -1.0, 1.0);
    let mut directions = Vec::with_capacity(n_theta * n_phi);
    let mut weights = Vec::with_capacity(n_theta * n_phi);
    let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
    for (c, wc) in ct.nodes.iter().zip(&ct.weights) {
        let s = (1.0 - c * c).max(0.0).sqrt();
        for k in 0..n_phi {
            let phi = dphi * (k as f64 + 0.5);
            directions.push(Vector3::new(s * phi.cos(), s * phi.sin(), *c));
            weights.push(wc * dphi);
        }
    }
    SphereRule {
        directions,
        weights,
    }
}

/// Gauss-Hermite rule rescaled so that plain weights integrate functions
/// decaying like e^{-m x^2 / 2}: node x -> sqrt(2/m)*scale*x, weight
/// w -> w * e^{x^2} * sqrt(2/m) * scale.
pub fn hermite_scaled(order: usize, mass: f64, scale: f64) -> Rule1d {
    let base = gauss_hermite(order);
    let c = (2.0 / mass).sqrt() * scale;
    Rule1d {
        nodes: base.nodes.iter().map(|x| c * x).collect(),
        weights: base
            .nodes
            .iter()
            .zip(&base.weights)
            .map(|(x, w)| w * (x * x).exp() * c)
            .collect(),
    }
}

/// Gauss-Laguerre rule with plain weights for integrands decaying like
/// e^{-I/scale}: node y -> scale*y, weight w -> w * e^{y} * scale.
pub fn laguerre_scaled(order: usize, scale: f64) -> Rule1d {
    let base = gauss_laguerre(order, 0.0);
    Rule1d {
        nodes: base.nodes.iter().map(|y| scale * y).collect(),
        weights: base
            .nodes
            .iter()
            .zip(&base.weights)
            .map(|(y, w)| w * y.exp() * scale)
            .collect(),
    }
}

/// Build a composite rule for one of the supported domains.
pub fn build_rule(spec: &QuadratureSpec, domain: Domain) -> Result<NodeSet> {
    spec.validate()?;
    match domain {
        Domain::Velocity3 => {
            let r = hermite_scaled(spec.hermite_order, 1.0, spec.velocity_scale);
            let axis = NodeSet {
                dim: 1,
                nodes: r.nodes.iter().map(|x| vec![*x]).collect(),
                weights: r.weights.clone(),
            };
            Ok(axis.tensor(&axis).tensor(&axis))
        }
        Domain::Energy => {
            let r = laguerre_scaled(spec.laguerre_order, spec.energy_scale);
            Ok(NodeSet {
                dim: 1,
                nodes: r.nodes.iter().map(|x| vec![*x]).collect(),
                weights: r.weights,
            })
        }
        Domain::Sphere => {
            let s = sphere_rule(spec.sphere_theta, spec.sphere_phi);
            Ok(NodeSet {
                dim: 3,
                nodes: s
                    .directions
                    .iter()
                    .map(|d| vec![d.x, d.y, d.z])
                    .collect(),
                weights: s.weights,
            })
        }
        Domain::UnitInterval => {
            let r = gauss_legendre_unit(spec.legendre_order);
            Ok(NodeSet {
                dim: 1,
                nodes: r.nodes.iter().map(|x| vec![*x]).collect(),
                weights: r.weights,
            })
        }
    }
}

/// Pairwise (cascade) summation: deterministic and accurate independent of
/// evaluation order elsewhere.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Weighted sum of `integrand` over the rule's nodes. Errors on the first
/// non-finite evaluation, identifying the node.
pub fn integrate(rule: &NodeSet, mut integrand: impl FnMut(&[f64]) -> f64) -> Result<f64> {
    let mut terms = Vec::with_capacity(rule.len());
    for (i, (node, w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        let v = integrand(node);
        if !v.is_finite() {
            return Err(KineticError::NonFiniteNode {
                node_index: i,
                species: 0,
                detail: format!("integrand value {v} at node {:?}", node),
            });
        }
        terms.push(v * w);
    }
    Ok(pairwise_sum(&terms))
}

/// Result of an integration with an attached error estimate.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Seeded Monte Carlo mean estimator over `samples` draws of `f(rng)`.
/// Returns the mean and its estimated standard error.
pub fn monte_carlo_mean(seed: u64, samples: usize, mut f: impl FnMut(&mut ChaCha8Rng) -> f64) -> Estimate {
    assert!(samples > 1, "need at least two samples");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for _ in 0..samples {
        let v = f(&mut rng);
        sum += v;
        sumsq += v * v;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = ((sumsq / n) - mean * mean).max(0.0) * n / (n - 1.0);
    Estimate {
        value: mean,
        error: (var / n).sqrt(),
    }
}

/// Uniform direction on S^2.
pub fn random_unit_vector(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    let c: f64 = rng.gen_range(-1.0..1.0);
    let phi: f64 = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
    let s = (1.0 - c * c).max(0.0).sqrt();
    Vector3::new(s * phi.cos(), s * phi.sin(), c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hermite_integrates_gaussian_moments() {
        let r = gauss_hermite(10);
        let total: f64 = r.weights.iter().sum();
        assert_abs_diff_eq!(total, std::f64::consts::PI.sqrt(), epsilon = 1e-12);
        // int x^2 e^{-x^2} = sqrt(pi)/2
        let m2: f64 = r
            .nodes
            .iter()
            .zip(&r.weights)
            .map(|(x, w)| w * x * x)
            .sum();
        assert_abs_diff_eq!(m2, std::f64::consts::PI.sqrt() / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn laguerre_degree_one_exact() {
        let r = gauss_laguerre(5, 0.0);
        let m1: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x).sum();
        assert_abs_diff_eq!(m1, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn generalized_laguerre_total_mass() {
        // int I^{a} e^{-I} dI = Gamma(a+1); a = 1 for delta = 4
        let r = gauss_laguerre(6, 1.0);
        let total: f64 = r.weights.iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn sphere_rule_measures_4pi() {
        let s = sphere_rule(4, 8);
        let total: f64 = s.weights.iter().sum();
        assert_abs_diff_eq!(total, 4.0 * std::f64::consts::PI, epsilon = 1e-12);
        // first spherical harmonics integrate to zero
        let z: f64 = s
            .directions
            .iter()
            .zip(&s.weights)
            .map(|(d, w)| w * d.z)
            .sum();
        assert_abs_diff_eq!(z, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn legendre_unit_interval() {
        let r = gauss_legendre_unit(4);
        let total: f64 = r.weights.iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-13);
        let m3: f64 = r
            .nodes
            .iter()
            .zip(&r.weights)
            .map(|(x, w)| w * x * x * x)
            .sum();
        assert_abs_diff_eq!(m3, 0.25, epsilon = 1e-13);
    }

    #[test]
    fn velocity3_gaussian_second_moment() {
        let spec = QuadratureSpec::default();
        let rule = build_rule(&spec, Domain::Velocity3).unwrap();
        // <|xi|^2> under (2pi)^{-3/2} e^{-|xi|^2/2} is 3
        let norm = (2.0 * std::f64::consts::PI).powf(-1.5);
        let v = integrate(&rule, |x| {
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            norm * (-r2 / 2.0).exp() * r2
        })
        .unwrap();
        assert_abs_diff_eq!(v, 3.0, epsilon = 1e-10);
    }

    #[test]
    fn integrate_flags_non_finite_nodes() {
        let spec = QuadratureSpec::default();
        let rule = build_rule(&spec, Domain::UnitInterval).unwrap();
        let err = integrate(&rule, |_| f64::NAN).unwrap_err();
        assert!(matches!(err, KineticError::NonFiniteNode { .. }));
    }

    #[test]
    fn mc_is_reproducible_and_consistent() {
        let a = monte_carlo_mean(42, 50_000, |rng| {
            let x: f64 = rng.gen_range(0.0..1.0);
            x * x
        });
        let b = monte_carlo_mean(42, 50_000, |rng| {
            let x: f64 = rng.gen_range(0.0..1.0);
            x * x
        });
        assert_eq!(a.value, b.value);
        assert!((a.value - 1.0 / 3.0).abs() < 3.0 * a.error);
    }

    #[test]
    fn determinism_of_built_rules() {
        let spec = QuadratureSpec::default();
        let a = build_rule(&spec, Domain::Velocity3).unwrap();
        let b = build_rule(&spec, Domain::Velocity3).unwrap();
        assert_eq!(a.nodes, b.nodes);
        assert_eq!(a.weights, b.weights);
    }

    #[test]
    fn zero_order_rejected() {
        let spec = QuadratureSpec {
            hermite_order: 0,
            ..Default::default()
        };
        assert!(build_rule(&spec, Domain::Velocity3).is_err());
    }
}
