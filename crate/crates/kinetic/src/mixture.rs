//! Species and mixture definitions, the weighted Hilbert-space inner
//! product, Maxwellian equilibria, and macroscopic moments.
//!
//! Monatomic species carry no internal-energy coordinate: every operation
//! drops the I-integration and I-dependent factors for them. Units use
//! k_B = 1 throughout.

use std::sync::Arc;

use nalgebra::Vector3;
use statrs::function::gamma::gamma;

use crate::error::{KineticError, Result};
use crate::quadrature::{hermite_scaled, laguerre_scaled, pairwise_sum, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpeciesKind {
    Monatomic,
    Polyatomic,
}

/// One species: mass, kind, internal degrees of freedom and number density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeciesSpec {
    pub mass: f64,
    pub kind: SpeciesKind,
    /// Internal degrees of freedom delta >= 2; forced to 2 for monatomic.
    pub dof: f64,
    pub number_density: f64,
}

impl SpeciesSpec {
    pub fn monatomic(mass: f64, number_density: f64) -> Result<Self> {
        SpeciesSpec::new(mass, SpeciesKind::Monatomic, 2.0, number_density)
    }

    pub fn polyatomic(mass: f64, dof: f64, number_density: f64) -> Result<Self> {
        SpeciesSpec::new(mass, SpeciesKind::Polyatomic, dof, number_density)
    }

    pub fn new(mass: f64, kind: SpeciesKind, dof: f64, number_density: f64) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(KineticError::parameter(format!("mass must be > 0, got {mass}")));
        }
        if !(number_density > 0.0) {
            return Err(KineticError::parameter(format!(
                "number density must be > 0, got {number_density}"
            )));
        }
        if !(dof >= 2.0) {
            return Err(KineticError::parameter(format!("dof must be >= 2, got {dof}")));
        }
        if kind == SpeciesKind::Monatomic && dof != 2.0 {
            return Err(KineticError::parameter(
                "monatomic species must have dof = 2",
            ));
        }
        Ok(SpeciesSpec {
            mass,
            kind,
            dof,
            number_density,
        })
    }

    pub fn is_polyatomic(&self) -> bool {
        self.kind == SpeciesKind::Polyatomic
    }
}

/// Ordered list of species, monatomic first.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    species: Vec<SpeciesSpec>,
    s0: usize,
    s1: usize,
}

impl MixtureSpec {
    pub fn new(species: Vec<SpeciesSpec>) -> Result<Self> {
        if species.is_empty() {
            return Err(KineticError::parameter("mixture needs at least one species"));
        }
        let s0 = species
            .iter()
            .take_while(|s| s.kind == SpeciesKind::Monatomic)
            .count();
        if species[s0..].iter().any(|s| s.kind == SpeciesKind::Monatomic) {
            return Err(KineticError::parameter(
                "species must be ordered with all monatomic species first",
            ));
        }
        let s1 = species.len() - s0;
        Ok(MixtureSpec { species, s0, s1 })
    }

    pub fn species(&self) -> &[SpeciesSpec] {
        &self.species
    }

    pub fn len(&self) -> usize {
        self.species.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn monatomic_count(&self) -> usize {
        self.s0
    }

    pub fn polyatomic_count(&self) -> usize {
        self.s1
    }
}

/// One particle state. `internal_energy` is ignored by all operations when
/// the species is monatomic; constructors set it to 0 in that case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    /// Zero-based species index.
    pub species: usize,
    pub xi: Vector3<f64>,
    pub internal_energy: f64,
}

impl PhasePoint {
    pub fn monatomic(species: usize, xi: Vector3<f64>) -> Self {
        PhasePoint {
            species,
            xi,
            internal_energy: 0.0,
        }
    }

    pub fn polyatomic(species: usize, xi: Vector3<f64>, internal_energy: f64) -> Self {
        PhasePoint {
            species,
            xi,
            internal_energy,
        }
    }
}

type Field = Arc<dyn Fn(&Vector3<f64>, f64) -> f64 + Send + Sync>;

/// Per-species scalar field f_alpha(xi) or f_alpha(xi, I), evaluator-based.
#[derive(Clone)]
pub struct DistributionFunction {
    components: Vec<Field>,
}

impl DistributionFunction {
    pub fn from_components(components: Vec<Field>) -> Self {
        DistributionFunction { components }
    }

    /// Builds each component from a plain closure.
    pub fn from_fns<F>(fns: Vec<F>) -> Self
    where
        F: Fn(&Vector3<f64>, f64) -> f64 + Send + Sync + 'static,
    {
        DistributionFunction {
            components: fns.into_iter().map(|f| Arc::new(f) as Field).collect(),
        }
    }

    pub fn zero(species_count: usize) -> Self {
        DistributionFunction {
            components: (0..species_count)
                .map(|_| Arc::new(|_: &Vector3<f64>, _: f64| 0.0) as Field)
                .collect(),
        }
    }

    pub fn species_count(&self) -> usize {
        self.components.len()
    }

    pub fn eval(&self, species: usize, xi: &Vector3<f64>, internal_energy: f64) -> f64 {
        (self.components[species])(xi, internal_energy)
    }

    pub fn eval_point(&self, p: &PhasePoint) -> f64 {
        self.eval(p.species, &p.xi, p.internal_energy)
    }

    pub fn scale(&self, a: f64) -> Self {
        let components = self
            .components
            .iter()
            .map(|c| {
                let c = c.clone();
                Arc::new(move |xi: &Vector3<f64>, i: f64| a * c(xi, i)) as Field
            })
            .collect();
        DistributionFunction { components }
    }

    pub fn add(&self, other: &DistributionFunction) -> Self {
        assert_eq!(self.components.len(), other.components.len());
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| {
                let a = a.clone();
                let b = b.clone();
                Arc::new(move |xi: &Vector3<f64>, i: f64| a(xi, i) + b(xi, i)) as Field
            })
            .collect();
        DistributionFunction { components }
    }

    /// Pointwise product with another distribution, component by component.
    pub fn mul(&self, other: &DistributionFunction) -> Self {
        assert_eq!(self.components.len(), other.components.len());
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| {
                let a = a.clone();
                let b = b.clone();
                Arc::new(move |xi: &Vector3<f64>, i: f64| a(xi, i) * b(xi, i)) as Field
            })
            .collect();
        DistributionFunction { components }
    }

    pub fn component(&self, species: usize) -> Field {
        self.components[species].clone()
    }
}

impl std::fmt::Debug for DistributionFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "DistributionFunction({} species)", self.components.len())
    }
}

/// Evaluates the Maxwellian component of one species at (xi, I).
pub fn maxwellian_value(
    sp: &SpeciesSpec,
    n: f64,
    u: &Vector3<f64>,
    temperature: f64,
    xi: &Vector3<f64>,
    internal_energy: f64,
) -> f64 {
    let m = sp.mass;
    let t = temperature;
    let c2 = (xi - u).norm_squared();
    let velocity_part =
        n * m.powf(1.5) / (2.0 * std::f64::consts::PI * t).powf(1.5) * (-m * c2 / (2.0 * t)).exp();
    match sp.kind {
        SpeciesKind::Monatomic => velocity_part,
        SpeciesKind::Polyatomic => {
            let d = sp.dof;
            let internal_part = internal_energy.powf(d / 2.0 - 1.0) * (-internal_energy / t).exp()
                / (t.powf(d / 2.0) * gamma(d / 2.0));
            velocity_part * internal_part
        }
    }
}

/// Maxwellian distribution with per-species densities `n`, common mean
/// velocity `u` and temperature `temperature` (k_B = 1).
pub fn maxwellian(
    mixture: &MixtureSpec,
    n: &[f64],
    u: &Vector3<f64>,
    temperature: f64,
) -> Result<DistributionFunction> {
    if n.len() != mixture.len() {
        return Err(KineticError::parameter(
            "density vector length must match species count",
        ));
    }
    if n.iter().any(|v| !(*v > 0.0)) {
        return Err(KineticError::parameter("densities must be positive"));
    }
    if !(temperature > 0.0) {
        return Err(KineticError::parameter("temperature must be positive"));
    }
    let u = *u;
    let components = mixture
        .species()
        .iter()
        .zip(n)
        .map(|(sp, &na)| {
            let sp = *sp;
            Arc::new(move |xi: &Vector3<f64>, i: f64| maxwellian_value(&sp, na, &u, temperature, xi, i))
                as Field
        })
        .collect();
    Ok(DistributionFunction::from_components(components))
}

/// The s+4 generators of the collision invariants: e_1..e_s, m xi_x,
/// m xi_y, m xi_z and m|xi|^2 + 2I (I dropped on monatomic components).
pub fn collision_invariants(mixture: &MixtureSpec) -> Vec<DistributionFunction> {
    let s = mixture.len();
    let mut out = Vec::with_capacity(s + 4);
    for k in 0..s {
        let components = (0..s)
            .map(|a| {
                let v = if a == k { 1.0 } else { 0.0 };
                Arc::new(move |_: &Vector3<f64>, _: f64| v) as Field
            })
            .collect();
        out.push(DistributionFunction::from_components(components));
    }
    for axis in 0..3 {
        let components = mixture
            .species()
            .iter()
            .map(|sp| {
                let m = sp.mass;
                Arc::new(move |xi: &Vector3<f64>, _: f64| m * xi[axis]) as Field
            })
            .collect();
        out.push(DistributionFunction::from_components(components));
    }
    let components = mixture
        .species()
        .iter()
        .map(|sp| {
            let m = sp.mass;
            let poly = sp.is_polyatomic();
            Arc::new(move |xi: &Vector3<f64>, i: f64| {
                m * xi.norm_squared() + if poly { 2.0 * i } else { 0.0 }
            }) as Field
        })
        .collect();
    out.push(DistributionFunction::from_components(components));
    out
}

/// Integrates `f(xi, I)` over the phase space of one species with the
/// mass-scaled Hermite (and, for polyatomic, Laguerre) tensor rule.
pub fn integrate_species(
    sp: &SpeciesSpec,
    species_index: usize,
    quad: &QuadratureSpec,
    f: impl Fn(&Vector3<f64>, f64) -> f64,
) -> Result<f64> {
    quad.validate()?;
    let hr = hermite_scaled(quad.hermite_order, sp.mass, quad.velocity_scale);
    let energy_rule = if sp.is_polyatomic() {
        let lr = laguerre_scaled(quad.laguerre_order, quad.energy_scale);
        lr.nodes.into_iter().zip(lr.weights).collect::<Vec<_>>()
    } else {
        vec![(0.0, 1.0)]
    };
    let mut terms =
        Vec::with_capacity(hr.len() * hr.len() * hr.len() * energy_rule.len());
    let mut node_index = 0usize;
    for (x, wx) in hr.nodes.iter().zip(&hr.weights) {
        for (y, wy) in hr.nodes.iter().zip(&hr.weights) {
            for (z, wz) in hr.nodes.iter().zip(&hr.weights) {
                let xi = Vector3::new(*x, *y, *z);
                let w3 = wx * wy * wz;
                for (i, wi) in &energy_rule {
                    let v = f(&xi, *i);
                    if !v.is_finite() {
                        return Err(KineticError::NonFiniteNode {
                            node_index,
                            species: species_index,
                            detail: format!("value {v} at xi = {:?}, I = {i}", xi),
                        });
                    }
                    terms.push(v * w3 * wi);
                    node_index += 1;
                }
            }
        }
    }
    Ok(pairwise_sum(&terms))
}

/// Inner product on the mixture Hilbert space: sum over species of the
/// phase-space integral of f_alpha * g_alpha.
pub fn inner_product(
    f: &DistributionFunction,
    g: &DistributionFunction,
    mixture: &MixtureSpec,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let mut per_species = Vec::with_capacity(mixture.len());
    for (a, sp) in mixture.species().iter().enumerate() {
        per_species.push(integrate_species(sp, a, quad, |xi, i| {
            f.eval(a, xi, i) * g.eval(a, xi, i)
        })?);
    }
    Ok(pairwise_sum(&per_species))
}

/// Macroscopic moments of a distribution: per-species densities, mixture
/// mean velocity and translational temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub n: Vec<f64>,
    pub u: Vector3<f64>,
    pub temperature: f64,
}

pub fn moments(
    f: &DistributionFunction,
    mixture: &MixtureSpec,
    quad: &QuadratureSpec,
) -> Result<Moments> {
    let s = mixture.len();
    let mut n = Vec::with_capacity(s);
    let mut momentum = Vector3::zeros();
    let mut rho = 0.0;
    for (a, sp) in mixture.species().iter().enumerate() {
        n.push(integrate_species(sp, a, quad, |xi, i| f.eval(a, xi, i))?);
        for axis in 0..3 {
            momentum[axis] +=
                integrate_species(sp, a, quad, |xi, i| sp.mass * xi[axis] * f.eval(a, xi, i))?;
        }
        rho += sp.mass * n[a];
    }
    if rho <= 0.0 {
        return Err(KineticError::domain("nonpositive total mass density"));
    }
    let u = momentum / rho;
    let n_total: f64 = n.iter().sum();
    let mut energy = 0.0;
    for (a, sp) in mixture.species().iter().enumerate() {
        energy += integrate_species(sp, a, quad, |xi, i| {
            sp.mass * (xi - u).norm_squared() * f.eval(a, xi, i)
        })?;
    }
    Ok(Moments {
        n,
        u,
        temperature: energy / (3.0 * n_total),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mono_mix() -> MixtureSpec {
        MixtureSpec::new(vec![SpeciesSpec::monatomic(1.0, 1.0).unwrap()]).unwrap()
    }

    fn mono_poly_mix() -> MixtureSpec {
        MixtureSpec::new(vec![
            SpeciesSpec::monatomic(1.0, 1.0).unwrap(),
            SpeciesSpec::polyatomic(2.0, 4.0, 0.5).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn species_validation() {
        assert!(SpeciesSpec::monatomic(0.0, 1.0).is_err());
        assert!(SpeciesSpec::polyatomic(1.0, 1.5, 1.0).is_err());
        assert!(SpeciesSpec::new(1.0, SpeciesKind::Monatomic, 4.0, 1.0).is_err());
        assert!(SpeciesSpec::polyatomic(1.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn mixture_ordering_enforced() {
        let poly = SpeciesSpec::polyatomic(1.0, 4.0, 1.0).unwrap();
        let mono = SpeciesSpec::monatomic(1.0, 1.0).unwrap();
        assert!(MixtureSpec::new(vec![poly, mono]).is_err());
        let mix = MixtureSpec::new(vec![mono, poly]).unwrap();
        assert_eq!(mix.monatomic_count(), 1);
        assert_eq!(mix.polyatomic_count(), 1);
        assert!(MixtureSpec::new(vec![]).is_err());
    }

    #[test]
    fn inner_product_zero_field() {
        let mix = mono_mix();
        let z = DistributionFunction::zero(1);
        let v = inner_product(&z, &z, &mix, &QuadratureSpec::default()).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn inner_product_maxwellian_squared() {
        // int M^2 dxi = (m/(4 pi))^{3/2} for n=1, T=1, u=0; m=1 -> 0.0224...
        let mix = mono_mix();
        let m = maxwellian(&mix, &[1.0], &Vector3::zeros(), 1.0).unwrap();
        let quad = QuadratureSpec {
            hermite_order: 40,
            ..Default::default()
        };
        let v = inner_product(&m, &m, &mix, &quad).unwrap();
        let exact = (1.0 / (4.0 * std::f64::consts::PI)).powf(1.5);
        assert_abs_diff_eq!(v, exact, epsilon = 1e-10);
        assert_abs_diff_eq!(exact, 0.02244839, epsilon = 1e-7);
    }

    #[test]
    fn inner_product_disjoint_species() {
        let mix = mono_poly_mix();
        let m = maxwellian(&mix, &[1.0, 1.0], &Vector3::zeros(), 1.0).unwrap();
        let c0 = m.component(0);
        let c1 = m.component(1);
        let sqrt_m = DistributionFunction::from_components(vec![
            Arc::new(move |xi: &Vector3<f64>, i: f64| c0(xi, i).sqrt()),
            Arc::new(|_: &Vector3<f64>, _: f64| 0.0),
        ]);
        let e2_weighted = DistributionFunction::from_components(vec![
            Arc::new(|_: &Vector3<f64>, _: f64| 0.0),
            Arc::new(move |xi: &Vector3<f64>, i: f64| c1(xi, i).sqrt()),
        ]);
        let v = inner_product(&sqrt_m, &e2_weighted, &mix, &QuadratureSpec::default()).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn maxwellian_pointwise_value() {
        let mix = mono_mix();
        let m = maxwellian(&mix, &[1.0], &Vector3::zeros(), 1.0).unwrap();
        let v = m.eval(0, &Vector3::zeros(), 0.0);
        let exact = (2.0 * std::f64::consts::PI).powf(-1.5);
        assert_abs_diff_eq!(v, exact, epsilon = 1e-15);
        assert_abs_diff_eq!(exact, 0.06349364, epsilon = 1e-7);
    }

    #[test]
    fn maxwellian_internal_energy_prefactor() {
        let mix2 = MixtureSpec::new(vec![SpeciesSpec::polyatomic(1.0, 2.0, 1.0).unwrap()]).unwrap();
        let mix4 = MixtureSpec::new(vec![SpeciesSpec::polyatomic(1.0, 4.0, 1.0).unwrap()]).unwrap();
        let m2 = maxwellian(&mix2, &[1.0], &Vector3::zeros(), 1.0).unwrap();
        let m4 = maxwellian(&mix4, &[1.0], &Vector3::zeros(), 1.0).unwrap();
        let at0 = Vector3::zeros();
        // delta = 2: I^0 factor, finite at I = 0; delta = 4: I^1 factor, zero.
        assert!(m2.eval(0, &at0, 0.0) > 0.0);
        assert_eq!(m4.eval(0, &at0, 0.0), 0.0);
    }

    #[test]
    fn maxwellian_parameter_errors() {
        let mix = mono_mix();
        assert!(maxwellian(&mix, &[0.0], &Vector3::zeros(), 1.0).is_err());
        assert!(maxwellian(&mix, &[1.0], &Vector3::zeros(), 0.0).is_err());
        assert!(maxwellian(&mix, &[1.0, 1.0], &Vector3::zeros(), 1.0).is_err());
    }

    #[test]
    fn maxwellian_moment_round_trip() {
        let mix = mono_poly_mix();
        let u = Vector3::new(0.3, -0.2, 0.1);
        let temperature = 1.4;
        let n = [1.0, 0.5];
        let m = maxwellian(&mix, &n, &u, temperature).unwrap();
        let quad = QuadratureSpec {
            hermite_order: 40,
            laguerre_order: 40,
            ..Default::default()
        };
        let mom = moments(&m, &mix, &quad).unwrap();
        for a in 0..2 {
            assert_abs_diff_eq!(mom.n[a], n[a], epsilon = 1e-6 * n[a]);
        }
        assert_abs_diff_eq!((mom.u - u).norm(), 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(mom.temperature, temperature, epsilon = 1e-6 * temperature);
    }

    #[test]
    fn invariant_count_and_energy_form() {
        let mix = mono_poly_mix();
        let inv = collision_invariants(&mix);
        assert_eq!(inv.len(), 6);
        let energy = &inv[5];
        let xi = Vector3::new(1.0, 2.0, 2.0);
        // m_1 |xi|^2 on the monatomic component, m_2 |xi|^2 + 2I on the polyatomic one
        assert_abs_diff_eq!(energy.eval(0, &xi, 5.0), 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(energy.eval(1, &xi, 5.0), 28.0, epsilon = 1e-15);

        let mono = mono_mix();
        assert_eq!(collision_invariants(&mono).len(), 5);
    }

    #[test]
    fn inner_product_symmetric_bilinear() {
        let mix = mono_mix();
        let quad = QuadratureSpec::default();
        let m = maxwellian(&mix, &[1.0], &Vector3::zeros(), 1.0).unwrap();
        let f = m.clone();
        let g = maxwellian(&mix, &[0.7], &Vector3::new(0.2, 0.0, 0.0), 1.3).unwrap();
        let fg = inner_product(&f, &g, &mix, &quad).unwrap();
        let gf = inner_product(&g, &f, &mix, &quad).unwrap();
        assert_abs_diff_eq!(fg, gf, epsilon = 1e-14);
        let f2 = f.scale(2.0);
        let f2g = inner_product(&f2, &g, &mix, &quad).unwrap();
        assert_abs_diff_eq!(f2g, 2.0 * fg, epsilon = 1e-14 * fg.abs().max(1.0));
        let sum = f.add(&g);
        let sum_g = inner_product(&sum, &g, &mix, &quad).unwrap();
        let gg = inner_product(&g, &g, &mix, &quad).unwrap();
        assert_abs_diff_eq!(sum_g, fg + gg, epsilon = 1e-13);
    }
}
