//! Pointwise evaluation of the collision operator Q via the four reduced
//! case forms, the weak form and its symmetrized version, the entropy
//! production functional, and a seeded Monte Carlo oracle.

use nalgebra::Vector3;
use rand::Rng;
use statrs::distribution::{Continuous, Gamma, Normal};

use crate::error::{KineticError, Result};
use crate::geometry::{
    case_type, primed_state, CaseType, CollisionEvent, CollisionPair, CollisionParams,
};
use crate::mixture::{DistributionFunction, MixtureSpec, PhasePoint, SpeciesSpec};
use crate::quadrature::{
    gauss_legendre_unit, hermite_scaled, laguerre_scaled, monte_carlo_mean, pairwise_sum,
    random_unit_vector, sphere_rule, Estimate, QuadratureSpec,
};
use crate::xsection::{collision_weight, collision_weight_reduced, CrossSectionModel};

/// Result of a pointwise Q evaluation: total over partners, per-partner
/// breakdown, the loss-term magnitude (for relative comparisons) and a
/// coarse-rule error estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct QEvaluation {
    pub total: f64,
    pub per_partner: Vec<f64>,
    pub loss_magnitude: f64,
    pub error: f64,
}

fn ipow(spec: &SpeciesSpec, i: f64) -> f64 {
    if spec.is_polyatomic() {
        i.powf(spec.dof / 2.0 - 1.0)
    } else {
        1.0
    }
}

/// Unprimed I-power product of an event.
fn unprimed_ipow(event: &CollisionEvent) -> f64 {
    ipow(&event.spec_a, event.pair.a.internal_energy)
        * ipow(&event.spec_b, event.pair.b.internal_energy)
}

/// Gain and loss parts of the multiplied-out integrand
/// collision_weight * Lambda(f) * I-powers for one event.
pub fn lambda_parts(
    f: &DistributionFunction,
    model: &CrossSectionModel,
    event: &CollisionEvent,
) -> (f64, f64) {
    let a = event.pair.a.species;
    let b = event.pair.b.species;
    let gain = f.eval_point(&event.primed_a)
        * f.eval_point(&event.primed_b)
        * unprimed_ipow(event)
        * collision_weight_reduced(model, event);
    let loss = f.eval(a, &event.pair.a.xi, event.pair.a.internal_energy)
        * f.eval(b, &event.pair.b.xi, event.pair.b.internal_energy)
        * collision_weight(model, event);
    (gain, loss)
}

/// Weighted Lambda for the quadratic operator.
pub fn lambda_weighted(
    f: &DistributionFunction,
    model: &CrossSectionModel,
    event: &CollisionEvent,
) -> f64 {
    let (gain, loss) = lambda_parts(f, model, event);
    gain - loss
}

/// Weighted symmetric bilinear Lambda: gain/loss built from
/// f'h'_* + h'f'_* and f h_* + h f_*. Equals twice the quadratic form at
/// h = f.
pub fn lambda_bilinear_weighted(
    f: &DistributionFunction,
    h: &DistributionFunction,
    model: &CrossSectionModel,
    event: &CollisionEvent,
) -> f64 {
    let a = event.pair.a.species;
    let b = event.pair.b.species;
    let fp = f.eval_point(&event.primed_a);
    let fps = f.eval_point(&event.primed_b);
    let hp = h.eval_point(&event.primed_a);
    let hps = h.eval_point(&event.primed_b);
    let fu = f.eval(a, &event.pair.a.xi, event.pair.a.internal_energy);
    let fus = f.eval(b, &event.pair.b.xi, event.pair.b.internal_energy);
    let hu = h.eval(a, &event.pair.a.xi, event.pair.a.internal_energy);
    let hus = h.eval(b, &event.pair.b.xi, event.pair.b.internal_energy);
    (fp * hps + hp * fps) * unprimed_ipow(event) * collision_weight_reduced(model, event)
        - (fu * hus + hu * fus) * collision_weight(model, event)
}

/// Compensated (Kahan-Neumaier) accumulator.
#[derive(Debug, Clone, Copy, Default)]
struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Integrates `k` simultaneous integrands over all collision events with the
/// first particle fixed at `at` and the partner species `b_species` swept by
/// the tensor rule over (xi_*, [I_*], omega, [R], [r]).
pub fn integrate_pair_fixed_multi(
    mixture: &MixtureSpec,
    at: &PhasePoint,
    b_species: usize,
    quad: &QuadratureSpec,
    k: usize,
    mut integrand: impl FnMut(&CollisionEvent, &mut [f64]),
) -> Result<Vec<f64>> {
    quad.validate()?;
    let spec_a = &mixture.species()[at.species];
    let spec_b = &mixture.species()[b_species];
    let case = case_type(spec_a, spec_b);

    let hb = hermite_scaled(quad.hermite_order, spec_b.mass, quad.velocity_scale);
    let energy_rule: Vec<(f64, f64)> = if spec_b.is_polyatomic() {
        let lr = laguerre_scaled(quad.laguerre_order, quad.energy_scale);
        lr.nodes.into_iter().zip(lr.weights).collect()
    } else {
        vec![(0.0, 1.0)]
    };
    let sphere = sphere_rule(quad.sphere_theta, quad.sphere_phi);
    let leg = gauss_legendre_unit(quad.legendre_order);
    let leg_pairs: Vec<(f64, f64)> = leg.nodes.into_iter().zip(leg.weights).collect();
    // substitute R = u^2: the integrand depends on sqrt(R) through |g'|,
    // so the rule in u sees a smooth function
    let r_kin_rule: Vec<(Option<f64>, f64)> = if case != CaseType::MonoMono {
        leg_pairs
            .iter()
            .map(|(u, w)| (Some(u * u), 2.0 * u * w))
            .collect()
    } else {
        vec![(None, 1.0)]
    };
    let r_int_rule: Vec<(Option<f64>, f64)> = if case == CaseType::PolyPoly {
        leg_pairs.iter().map(|(x, w)| (Some(*x), *w)).collect()
    } else {
        vec![(None, 1.0)]
    };

    let mut sums = vec![KahanSum::default(); k];
    let mut values = vec![0.0; k];
    let mut node_index = 0usize;
    for (x, wx) in hb.nodes.iter().zip(&hb.weights) {
        for (y, wy) in hb.nodes.iter().zip(&hb.weights) {
            for (z, wz) in hb.nodes.iter().zip(&hb.weights) {
                let xi_star = Vector3::new(*x, *y, *z);
                let w3 = wx * wy * wz;
                for (i_star, wi) in &energy_rule {
                    let pair = CollisionPair {
                        a: *at,
                        b: PhasePoint {
                            species: b_species,
                            xi: xi_star,
                            internal_energy: *i_star,
                        },
                    };
                    for (omega, wo) in sphere.directions.iter().zip(&sphere.weights) {
                        for (r_kin, wrk) in &r_kin_rule {
                            for (r_int, wri) in &r_int_rule {
                                let params = CollisionParams {
                                    omega: *omega,
                                    r_kinetic: *r_kin,
                                    r_internal: *r_int,
                                };
                                let event = primed_state(mixture, &pair, &params)?;
                                integrand(&event, &mut values);
                                let w = w3 * wi * wo * wrk * wri;
                                for (acc, v) in sums.iter_mut().zip(&values) {
                                    if !v.is_finite() {
                                        return Err(KineticError::NonFiniteNode {
                                            node_index,
                                            species: b_species,
                                            detail: format!(
                                                "integrand value {v} at xi_* = {:?}, I_* = {i_star}",
                                                xi_star
                                            ),
                                        });
                                    }
                                    acc.add(v * w);
                                }
                                node_index += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(sums.iter().map(|s| s.value()).collect())
}

/// Scalar convenience wrapper around [`integrate_pair_fixed_multi`].
pub fn integrate_pair_fixed(
    mixture: &MixtureSpec,
    at: &PhasePoint,
    b_species: usize,
    quad: &QuadratureSpec,
    mut integrand: impl FnMut(&CollisionEvent) -> f64,
) -> Result<f64> {
    let v = integrate_pair_fixed_multi(mixture, at, b_species, quad, 1, |ev, out| {
        out[0] = integrand(ev)
    })?;
    Ok(v[0])
}

/// Integrates `k` simultaneous integrands over the full double phase space:
/// z = (xi, I) of species `a_species` and the partner variables of
/// `b_species`.
pub fn integrate_pair_double_multi(
    mixture: &MixtureSpec,
    a_species: usize,
    b_species: usize,
    quad: &QuadratureSpec,
    k: usize,
    mut integrand: impl FnMut(&CollisionEvent, &mut [f64]),
) -> Result<Vec<f64>> {
    let spec_a = &mixture.species()[a_species];
    let ha = hermite_scaled(quad.hermite_order, spec_a.mass, quad.velocity_scale);
    let energy_rule: Vec<(f64, f64)> = if spec_a.is_polyatomic() {
        let lr = laguerre_scaled(quad.laguerre_order, quad.energy_scale);
        lr.nodes.into_iter().zip(lr.weights).collect()
    } else {
        vec![(0.0, 1.0)]
    };
    let mut per_node: Vec<Vec<f64>> = Vec::new();
    for (x, wx) in ha.nodes.iter().zip(&ha.weights) {
        for (y, wy) in ha.nodes.iter().zip(&ha.weights) {
            for (z, wz) in ha.nodes.iter().zip(&ha.weights) {
                let w3 = wx * wy * wz;
                for (i, wi) in &energy_rule {
                    let at = PhasePoint {
                        species: a_species,
                        xi: Vector3::new(*x, *y, *z),
                        internal_energy: *i,
                    };
                    let inner =
                        integrate_pair_fixed_multi(mixture, &at, b_species, quad, k, &mut integrand)?;
                    per_node.push(inner.iter().map(|v| v * w3 * wi).collect());
                }
            }
        }
    }
    Ok((0..k)
        .map(|j| {
            let column: Vec<f64> = per_node.iter().map(|row| row[j]).collect();
            pairwise_sum(&column)
        })
        .collect())
}

/// Halves all deterministic orders (floor 2) for nested error estimates.
pub fn coarsen(quad: &QuadratureSpec) -> QuadratureSpec {
    QuadratureSpec {
        hermite_order: (quad.hermite_order / 2).max(2),
        laguerre_order: (quad.laguerre_order / 2).max(2),
        sphere_theta: (quad.sphere_theta / 2).max(2),
        sphere_phi: (quad.sphere_phi / 2).max(2),
        legendre_order: (quad.legendre_order / 2).max(2),
        ..quad.clone()
    }
}

fn q_point_value(
    f: &DistributionFunction,
    at: &PhasePoint,
    mixture: &MixtureSpec,
    model: &CrossSectionModel,
    quad: &QuadratureSpec,
) -> Result<(Vec<f64>, f64)> {
    let mut per_partner = Vec::with_capacity(mixture.len());
    let mut loss_magnitude = 0.0;
    let mut negative_seen = false;
    for b in 0..mixture.len() {
        let v = integrate_pair_fixed_multi(mixture, at, b, quad, 2, |ev, out| {
            let fu = f.eval(at.species, &ev.pair.a.xi, ev.pair.a.internal_energy);
            let fus = f.eval(b, &ev.pair.b.xi, ev.pair.b.internal_energy);
            let fp = f.eval_point(&ev.primed_a);
            let fps = f.eval_point(&ev.primed_b);
            if fu < 0.0 || fus < 0.0 || fp < 0.0 || fps < 0.0 {
                negative_seen = true;
            }
            let gain = fp * fps * unprimed_ipow(ev) * collision_weight_reduced(model, ev);
            let loss = fu * fus * collision_weight(model, ev);
            out[0] = gain - loss;
            out[1] = loss;
        })?;
        if negative_seen {
            return Err(KineticError::domain(
                "distribution is negative at a quadrature node",
            ));
        }
        per_partner.push(v[0]);
        loss_magnitude += v[1].abs();
    }
    Ok((per_partner, loss_magnitude))
}

/// Q_alpha(f,f) at one phase point for alpha = at.species.
pub fn q_point(
    f: &DistributionFunction,
    at: &PhasePoint,
    mixture: &MixtureSpec,
    model: &CrossSectionModel,
    quad: &QuadratureSpec,
) -> Result<QEvaluation> {
    let (per_partner, loss_magnitude) = q_point_value(f, at, mixture, model, quad)?;
    let total = pairwise_sum(&per_partner);
    let (coarse, _) = q_point_value(f, at, mixture, model, &coarsen(quad))?;
    let error = (total - pairwise_sum(&coarse)).abs();
    Ok(QEvaluation {
        total,
        per_partner,
        loss_magnitude,
        error,
    })
}

/// The symmetric bilinear combination Q_alpha(f,h) + Q_alpha(h,f) at one
/// phase point; equals 2 Q_alpha(f,f) at h = f.
pub fn q_point_bilinear_sym(
    f: &DistributionFunction,
    h: &DistributionFunction,
    at: &PhasePoint,
    mixture: &MixtureSpec,
    model: &CrossSectionModel,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let mut per_partner = Vec::with_capacity(mixture.len());
    for b in 0..mixture.len() {
        per_partner.push(integrate_pair_fixed(mixture, at, b, quad, |ev| {
            lambda_bilinear_weighted(f, h, model, ev)
        })?);
    }
    Ok(pairwise_sum(&per_partner))
}

fn weak_form_value(
    f: &DistributionFunction,
    g: &DistributionFunction,
    mixture: &MixtureSpec,
    model: &CrossSectionModel,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let s = mixture.len();
    let mut terms = Vec::with_capacity(s * s);
    for a in 0..s {
        for b in 0..s {
            let v = integrate_pair_double_multi(mixture, a, b, quad, 1, |ev, out| {
                out[0] = lambda_weighted(f, model, ev)
                    * g.eval(a, &ev.pair.a.xi, ev.pair.a.internal_energy);
            })?;
            terms.push(v[0]);
        }
    }
    Ok(pairwise_sum(&terms))
}

/// (Q(f,f), g) by direct integration of Lambda(f) g_alpha against the
/// parametrized measure, with a nested-rule error estimate.
pub fn weak_form(
    f: &DistributionFunction,
    g: &DistributionFunction,
    mixture: &MixtureSpec,
    model: &CrossSectionModel,
    quad: &QuadratureSpec,
) -> Result<Estimate> {
    let value = weak_form_value(f, g, mixture, model, quad)?;
    let coarse = weak_form_value(f, g, mixture, model, &coarsen(quad))?;
    Ok(Estimate {
        value,
        error: (value - coarse).abs(),
    })
}

/// Delta_{ab}(g) = g_a + g_b* - g'_a - g'_b* for one event.
pub fn invariant_defect(g: &DistributionFunction, event: &CollisionEvent) -> f64 {
    let a = event.pair.a.species;
    let b = event.pair.b.species;
    g.eval(a, &event.pair.a.xi, event.pair.a.internal_energy)
        + g.eval(b, &event.pair.b.xi, event.pair.b.internal_energy)
        - g.eval_point(&event.primed_a)
        - g.eval_point(&event.primed_b)
}

fn weak_form_symmetrized_value(
    f: &DistributionFunction,
    g: &DistributionFunction,
    mixture: &MixtureSpec,
    model: &CrossSectionModel,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let s = mixture.len();
    let mut terms = Vec::with_capacity(s * s);
    for a in 0..s {
        for b in 0..s {
            let v = integrate_pair_double_multi(mixture, a, b, quad, 1, |ev, out| {
                out[0] = 0.25 * lambda_weighted(f, model, ev) * invariant_defect(g, ev);
            })?;
            terms.push(v[0]);
        }
    }
    Ok(pairwise_sum(&terms))
}

/// (Q(f,f), g) via the symmetrized quarter-sum over Delta(g).
pub fn weak_form_symmetrized(
    f: &DistributionFunction,
    g: &DistributionFunction,
    mixture: &MixtureSpec,
    model: &CrossSectionModel,
    quad: &QuadratureSpec,
) -> Result<Estimate> {
    let value = weak_form_symmetrized_value(f, g, mixture, model, quad)?;
    let coarse = weak_form_symmetrized_value(f, g, mixture, model, &coarsen(quad))?;
    Ok(Estimate {
        value,
        error: (value - coarse).abs(),
    })
}

/// Weak form against many test functions in one sweep over events
/// (one value per entry of `gs`), using the direct (non-symmetrized) path.
pub fn weak_form_many(
    f: &DistributionFunction,
    gs: &[DistributionFunction],
    mixture: &MixtureSpec,
    model: &CrossSectionModel,
    quad: &QuadratureSpec,
) -> Result<Vec<f64>> {
    let s = mixture.len();
    let k = gs.len();
    let mut totals = vec![0.0; k];
    for a in 0..s {
        for b in 0..s {
            let v = integrate_pair_double_multi(mixture, a, b, quad, k, |ev, out| {
                let lam = lambda_weighted(f, model, ev);
                for (j, g) in gs.iter().enumerate() {
                    out[j] = lam * g.eval(a, &ev.pair.a.xi, ev.pair.a.internal_energy);
                }
            })?;
            for j in 0..k {
                totals[j] += v[j];
            }
        }
    }
    Ok(totals)
}

/// Entropy production W[f] = (Q(f,f), log(phi^{-1} f)) evaluated through the
/// symmetrized form, whose integrand is pointwise nonpositive. Requires f
/// strictly positive on the quadrature nodes.
pub fn entropy_production(
    f: &DistributionFunction,
    mixture: &MixtureSpec,
    model: &CrossSectionModel,
    quad: &QuadratureSpec,
) -> Result<Estimate> {
    let value = entropy_value(f, mixture, model, quad)?;
    let coarse = entropy_value(f, mixture, model, &coarsen(quad))?;
    Ok(Estimate {
        value,
        error: (value - coarse).abs(),
    })
}

fn entropy_value(
    f: &DistributionFunction,
    mixture: &MixtureSpec,
    model: &CrossSectionModel,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let s = mixture.len();
    let mut nonpositive_seen = false;
    let mut terms = Vec::with_capacity(s * s);
    for a in 0..s {
        for b in 0..s {
            let spec_a = mixture.species()[a];
            let spec_b = mixture.species()[b];
            let v = integrate_pair_double_multi(mixture, a, b, quad, 1, |ev, out| {
                let fu = f.eval(a, &ev.pair.a.xi, ev.pair.a.internal_energy);
                let fus = f.eval(b, &ev.pair.b.xi, ev.pair.b.internal_energy);
                let fp = f.eval_point(&ev.primed_a);
                let fps = f.eval_point(&ev.primed_b);
                if fu <= 0.0 || fus <= 0.0 || fp <= 0.0 || fps <= 0.0 {
                    nonpositive_seen = true;
                    out[0] = 0.0;
                    return;
                }
                // x = F F_*, y = F' F'_* with F = f / I^{d/2-1}
                let x = fu * fus
                    / (ipow(&spec_a, ev.pair.a.internal_energy)
                        * ipow(&spec_b, ev.pair.b.internal_energy));
                let y = fp * fps
                    / (ipow(&spec_a, ev.primed_a.internal_energy)
                        * ipow(&spec_b, ev.primed_b.internal_energy));
                let weighted_y =
                    fp * fps * unprimed_ipow(ev) * collision_weight_reduced(model, ev);
                let weighted_x = fu * fus * collision_weight(model, ev);
                out[0] = 0.25 * (weighted_y - weighted_x) * (x / y).ln();
            })?;
            if nonpositive_seen {
                return Err(KineticError::domain(
                    "entropy production requires strictly positive f on all nodes",
                ));
            }
            terms.push(v[0]);
        }
    }
    Ok(pairwise_sum(&terms))
}

/// Seeded Monte Carlo estimate of Q_alpha(f,f) at a phase point: importance
/// sampling over (xi_*, [I_*], omega, [R], [r]) with Gaussian, Gamma and
/// uniform proposals. Independent of the tensor-rule code path.
pub fn q_point_mc(
    f: &DistributionFunction,
    at: &PhasePoint,
    mixture: &MixtureSpec,
    model: &CrossSectionModel,
    seed: u64,
    samples: usize,
) -> Result<Estimate> {
    let mut value = 0.0;
    let mut variance = 0.0;
    for b in 0..mixture.len() {
        let spec_a = mixture.species()[at.species];
        let spec_b = mixture.species()[b];
        let case = case_type(&spec_a, &spec_b);
        let sd = (2.0 / spec_b.mass).sqrt();
        let normal = Normal::new(0.0, sd).expect("valid normal");
        let gamma = if spec_b.is_polyatomic() {
            Some(Gamma::new(spec_b.dof / 2.0, 0.5).expect("valid gamma"))
        } else {
            None
        };
        let mixture = mixture.clone();
        let at = *at;
        let est = monte_carlo_mean(seed.wrapping_add(b as u64), samples, move |rng| {
            let xi_star = Vector3::new(rng.sample(normal), rng.sample(normal), rng.sample(normal));
            let mut pdf = normal.pdf(xi_star.x) * normal.pdf(xi_star.y) * normal.pdf(xi_star.z);
            let i_star = match &gamma {
                Some(g) => {
                    let i: f64 = rng.sample(*g);
                    pdf *= g.pdf(i);
                    i
                }
                None => 0.0,
            };
            let omega = random_unit_vector(rng);
            pdf *= 1.0 / (4.0 * std::f64::consts::PI);
            let r_kinetic =
                (case != CaseType::MonoMono).then(|| rng.gen_range(0.0..1.0));
            let r_internal = (case == CaseType::PolyPoly).then(|| rng.gen_range(0.0..1.0));
            let pair = CollisionPair {
                a: at,
                b: PhasePoint {
                    species: b,
                    xi: xi_star,
                    internal_energy: i_star,
                },
            };
            let params = CollisionParams {
                omega,
                r_kinetic,
                r_internal,
            };
            let event = primed_state(&mixture, &pair, &params).expect("sampled params valid");
            lambda_weighted(f, model, &event) / pdf
        });
        value += est.value;
        variance += est.error * est.error;
    }
    Ok(Estimate {
        value,
        error: variance.sqrt(),
    })
}
