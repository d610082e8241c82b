//! The linearized operator L = nu - K around the normalized Maxwellian
//! (u = 0, T = 1): collision frequency nu, operator action via the bilinear
//! Q, the closed-form loss kernel k1 with its Hilbert-Schmidt norm, and the
//! collision-frequency sandwich scan.

use nalgebra::Vector3;
use rand::Rng;
use statrs::distribution::{Continuous, Gamma, Normal};
use std::sync::Arc;

use crate::error::{KineticError, Result};
use crate::geometry::{case_type, CaseType};
use crate::mixture::{maxwellian, DistributionFunction, MixtureSpec, PhasePoint};
use crate::operator::{integrate_pair_fixed, q_point_bilinear_sym};
use crate::quadrature::{
    gauss_legendre, monte_carlo_mean, pairwise_sum, Estimate, QuadratureSpec,
};
use crate::xsection::{collision_weight, CrossSectionModel};

/// Linearization around M with u = 0, T = 1 and the species' own densities.
#[derive(Debug, Clone)]
pub struct LinearizationContext {
    pub mixture: MixtureSpec,
    pub model: CrossSectionModel,
    pub quad: QuadratureSpec,
    maxwellian: DistributionFunction,
}

impl LinearizationContext {
    pub fn new(
        mixture: MixtureSpec,
        model: CrossSectionModel,
        quad: QuadratureSpec,
    ) -> Result<Self> {
        if model.species_count() != mixture.len() {
            return Err(KineticError::parameter(
                "cross-section matrix size must match species count",
            ));
        }
        quad.validate()?;
        let n: Vec<f64> = mixture.species().iter().map(|s| s.number_density).collect();
        let m = maxwellian(&mixture, &n, &Vector3::zeros(), 1.0)?;
        Ok(LinearizationContext {
            mixture,
            model,
            quad,
            maxwellian: m,
        })
    }

    pub fn maxwellian(&self) -> &DistributionFunction {
        &self.maxwellian
    }

    /// M_alpha at a phase point.
    pub fn maxwellian_at(&self, p: &PhasePoint) -> f64 {
        self.maxwellian.eval_point(p)
    }

    /// Pointwise product M^{1/2} h.
    pub fn weight_by_sqrt_maxwellian(&self, h: &DistributionFunction) -> DistributionFunction {
        let components = (0..self.mixture.len())
            .map(|a| {
                let m = self.maxwellian.component(a);
                let hc = h.component(a);
                Arc::new(move |xi: &Vector3<f64>, i: f64| m(xi, i).sqrt() * hc(xi, i))
                    as Arc<dyn Fn(&Vector3<f64>, f64) -> f64 + Send + Sync>
            })
            .collect();
        DistributionFunction::from_components(components)
    }
}

/// Collision frequency nu_alpha(xi, I): loss-term quadrature of the
/// partner Maxwellian against the collision weight.
pub fn nu(ctx: &LinearizationContext, at: &PhasePoint) -> Result<f64> {
    let mut terms = Vec::with_capacity(ctx.mixture.len());
    for b in 0..ctx.mixture.len() {
        terms.push(integrate_pair_fixed(
            &ctx.mixture,
            at,
            b,
            &ctx.quad,
            |ev| {
                collision_weight(&ctx.model, ev)
                    * ctx
                        .maxwellian
                        .eval(b, &ev.pair.b.xi, ev.pair.b.internal_energy)
            },
        )?);
    }
    Ok(pairwise_sum(&terms))
}

/// Seeded Monte Carlo oracle for nu via the reduced integral over
/// (xi_*, I_*, I', I'_*): independent of the (R, r) tensor parametrization.
pub fn nu_mc(
    ctx: &LinearizationContext,
    at: &PhasePoint,
    seed: u64,
    samples: usize,
) -> Result<Estimate> {
    let mut value = 0.0;
    let mut variance = 0.0;
    let spec_a = ctx.mixture.species()[at.species];
    for b in 0..ctx.mixture.len() {
        let spec_b = ctx.mixture.species()[b];
        let case = case_type(&spec_a, &spec_b);
        let sd = (2.0 / spec_b.mass).sqrt();
        let normal = Normal::new(0.0, sd).expect("valid normal");
        let gamma = spec_b
            .is_polyatomic()
            .then(|| Gamma::new(spec_b.dof / 2.0, 0.5).expect("valid gamma"));
        let mu = spec_a.mass * spec_b.mass / (spec_a.mass + spec_b.mass);
        let c_ab = ctx.model.c(at.species, b);
        let model = ctx.model.clone();
        let m_field = ctx.maxwellian.component(b);
        let at = *at;
        let est = monte_carlo_mean(seed.wrapping_add(1 + b as u64), samples, move |rng| {
            let xi_star =
                Vector3::new(rng.sample(normal), rng.sample(normal), rng.sample(normal));
            let mut pdf = normal.pdf(xi_star.x) * normal.pdf(xi_star.y) * normal.pdf(xi_star.z);
            let i_star = match &gamma {
                Some(g) => {
                    let i: f64 = rng.sample(*g);
                    pdf *= g.pdf(i);
                    i
                }
                None => 0.0,
            };
            let g_norm = (at.xi - xi_star).norm();
            let mut energy = 0.5 * mu * g_norm * g_norm;
            if spec_a.is_polyatomic() {
                energy += at.internal_energy;
            }
            if spec_b.is_polyatomic() {
                energy += i_star;
            }
            // primed internal energies from the flat (I', I'_*) measure
            let (i_prime, i_star_prime, extent) = match case {
                CaseType::MonoMono => (0.0, 0.0, 1.0),
                CaseType::MonoPoly => (0.0, rng.gen_range(0.0..1.0) * energy, energy),
                CaseType::PolyMono => (rng.gen_range(0.0..1.0) * energy, 0.0, energy),
                CaseType::PolyPoly => {
                    let mut u1: f64 = rng.gen_range(0.0..1.0);
                    let mut u2: f64 = rng.gen_range(0.0..1.0);
                    if u1 + u2 > 1.0 {
                        u1 = 1.0 - u1;
                        u2 = 1.0 - u2;
                    }
                    (u1 * energy, u2 * energy, energy * energy / 2.0)
                }
            };
            if energy == 0.0 || g_norm == 0.0 {
                return 0.0;
            }
            let sigma = crate::xsection::sigma_raw(
                &model, &spec_a, &spec_b, c_ab, g_norm, at.internal_energy, i_star, i_prime,
                i_star_prime,
            )
            .unwrap_or(0.0);
            let m_star = m_field(&xi_star, i_star);
            4.0 * std::f64::consts::PI * m_star * sigma * g_norm * extent / pdf
        });
        value += est.value;
        variance += est.error * est.error;
    }
    Ok(Estimate {
        value,
        error: variance.sqrt(),
    })
}

/// L_alpha h at a phase point via (dec2):
/// L h = -M^{-1/2} (Q(M, M^{1/2}h) + Q(M^{1/2}h, M)).
pub fn l_apply(ctx: &LinearizationContext, h: &DistributionFunction, at: &PhasePoint) -> Result<f64> {
    let weighted = ctx.weight_by_sqrt_maxwellian(h);
    let q2 = q_point_bilinear_sym(
        ctx.maxwellian(),
        &weighted,
        at,
        &ctx.mixture,
        &ctx.model,
        &ctx.quad,
    )?;
    let m = ctx.maxwellian_at(at);
    if m <= 0.0 {
        return Err(KineticError::domain(
            "Maxwellian vanishes at the evaluation point",
        ));
    }
    Ok(-q2 / m.sqrt())
}

/// K_alpha h = nu_alpha h_alpha - L_alpha h at a phase point.
pub fn k_apply(ctx: &LinearizationContext, h: &DistributionFunction, at: &PhasePoint) -> Result<f64> {
    let nu_at = nu(ctx, at)?;
    let l = l_apply(ctx, h, at)?;
    Ok(nu_at * h.eval_point(at) - l)
}

const KERNEL_ORDER: usize = 16;

/// Closed-form loss-part kernel k_{alpha beta 1}(zeta, zeta_*) of the
/// symmetrized K: 4 pi (M_alpha M_beta*)^{1/2} times the integral of
/// sigma |g| over the admissible (I', I'_*) region (the omega integral is
/// analytic since sigma is isotropic in omega).
pub fn k1_kernel(ctx: &LinearizationContext, zeta: &PhasePoint, zeta_star: &PhasePoint) -> Result<f64> {
    let spec_a = ctx.mixture.species()[zeta.species];
    let spec_b = ctx.mixture.species()[zeta_star.species];
    let case = case_type(&spec_a, &spec_b);
    let mu = spec_a.mass * spec_b.mass / (spec_a.mass + spec_b.mass);
    let g_norm = (zeta.xi - zeta_star.xi).norm();
    let i = if spec_a.is_polyatomic() {
        zeta.internal_energy
    } else {
        0.0
    };
    let i_star = if spec_b.is_polyatomic() {
        zeta_star.internal_energy
    } else {
        0.0
    };
    let energy = 0.5 * mu * g_norm * g_norm + i + i_star;
    let c_ab = ctx.model.c(zeta.species, zeta_star.species);
    let eta = ctx.model.eta;

    // sigma |g| = C |g'| E^{-eta/2} Upsilon, so the |g| prefactor cancels and
    // the |g| = 0 limit is regular.
    let sigma_g = |i_prime: f64, i_star_prime: f64| -> f64 {
        let g_prime_sq = g_norm * g_norm - 2.0 * (i_prime + i_star_prime - i - i_star) / mu;
        if g_prime_sq <= 0.0 {
            return 0.0;
        }
        let mut upsilon = energy.powf(-eta / 2.0);
        if spec_a.is_polyatomic() {
            upsilon *= i_prime.powf(spec_a.dof / 2.0 - 1.0) / energy.powf(spec_a.dof / 2.0);
        }
        if spec_b.is_polyatomic() {
            upsilon *= i_star_prime.powf(spec_b.dof / 2.0 - 1.0) / energy.powf(spec_b.dof / 2.0);
        }
        c_ab * g_prime_sq.sqrt() * upsilon
    };

    // substitution t = L (1 - u^2) smooths the sqrt(L - t) factor of |g'|
    // at the upper endpoint: int_0^L f(t) dt = int_0^1 f(L(1-u^2)) 2Lu du
    let unit = gauss_legendre(KERNEL_ORDER, 0.0, 1.0);
    let inner = match case {
        CaseType::MonoMono => sigma_g(0.0, 0.0),
        CaseType::MonoPoly | CaseType::PolyMono => {
            if energy == 0.0 {
                0.0
            } else {
                let terms: Vec<f64> = unit
                    .nodes
                    .iter()
                    .zip(&unit.weights)
                    .map(|(u, w)| {
                        let t = energy * (1.0 - u * u);
                        let (ip, isp) = if case == CaseType::PolyMono {
                            (t, 0.0)
                        } else {
                            (0.0, t)
                        };
                        w * 2.0 * energy * u * sigma_g(ip, isp)
                    })
                    .collect();
                pairwise_sum(&terms)
            }
        }
        CaseType::PolyPoly => {
            if energy == 0.0 {
                0.0
            } else {
                let mut terms = Vec::with_capacity(KERNEL_ORDER * KERNEL_ORDER);
                for (v, wv) in unit.nodes.iter().zip(&unit.weights) {
                    let t = energy * (1.0 - v * v);
                    let rem = energy - t;
                    for (u, wu) in unit.nodes.iter().zip(&unit.weights) {
                        let s = rem * (1.0 - u * u);
                        terms.push(
                            wv * 2.0 * energy * v * wu * 2.0 * rem * u * sigma_g(t, s),
                        );
                    }
                }
                pairwise_sum(&terms)
            }
        }
    };

    let m_a = ctx.maxwellian.eval(zeta.species, &zeta.xi, zeta.internal_energy);
    let m_b = ctx
        .maxwellian
        .eval(zeta_star.species, &zeta_star.xi, zeta_star.internal_energy);
    Ok(4.0 * std::f64::consts::PI * (m_a * m_b).sqrt() * inner)
}

/// Builds a composite Gauss-Legendre rule over doubling panels
/// [0,4],[4,8],[8,16],... up to `t_max`, so that enlarging the truncation
/// only appends nodes.
fn panel_rule(t_max: f64, order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let mut lo = 0.0;
    let mut hi = 4.0_f64.min(t_max);
    loop {
        let r = gauss_legendre(order, lo, hi);
        nodes.extend(r.nodes);
        weights.extend(r.weights);
        if hi >= t_max {
            break;
        }
        lo = hi;
        hi = (hi * 2.0).min(t_max);
    }
    (nodes, weights)
}

/// Squared Hilbert-Schmidt norm of k1 for one species pair over the
/// truncated domain |G|, |g| <= truncation and I, I_* <= truncation.
/// The kernel depends only on (|G|, |g|, I, I_*), reducing the integral to
/// at most four dimensions.
pub fn hs_norm_k1(
    ctx: &LinearizationContext,
    a_species: usize,
    b_species: usize,
    truncation: f64,
) -> Result<f64> {
    if !(truncation > 0.0) {
        return Err(KineticError::parameter("truncation must be positive"));
    }
    let spec_a = ctx.mixture.species()[a_species];
    let spec_b = ctx.mixture.species()[b_species];
    let m_total = spec_a.mass + spec_b.mass;
    let order = 10;
    let (gn, gw) = panel_rule(truncation, order);
    let energy_rule = |poly: bool| -> (Vec<f64>, Vec<f64>) {
        if poly {
            panel_rule(truncation, order)
        } else {
            (vec![0.0], vec![1.0])
        }
    };
    let (in_, iw) = energy_rule(spec_a.is_polyatomic());
    let (isn, isw) = energy_rule(spec_b.is_polyatomic());

    let four_pi = 4.0 * std::f64::consts::PI;
    let mut outer = Vec::with_capacity(gn.len());
    for (cg, wcg) in gn.iter().zip(&gw) {
        // center-of-mass speed |G|
        let mut mid = Vec::with_capacity(gn.len());
        for (rg, wrg) in gn.iter().zip(&gw) {
            // relative speed |g|
            let xi = Vector3::new(rg * spec_b.mass / m_total, 0.0, *cg);
            let xi_star = Vector3::new(-rg * spec_a.mass / m_total, 0.0, *cg);
            let mut inner = Vec::with_capacity(in_.len() * isn.len());
            for (i, wi) in in_.iter().zip(&iw) {
                for (is, wis) in isn.iter().zip(&isw) {
                    let k = k1_kernel(
                        ctx,
                        &PhasePoint {
                            species: a_species,
                            xi,
                            internal_energy: *i,
                        },
                        &PhasePoint {
                            species: b_species,
                            xi: xi_star,
                            internal_energy: *is,
                        },
                    )?;
                    inner.push(wi * wis * k * k);
                }
            }
            mid.push(wrg * rg * rg * pairwise_sum(&inner));
        }
        outer.push(wcg * cg * cg * pairwise_sum(&mid));
    }
    Ok(four_pi * four_pi * pairwise_sum(&outer))
}

/// Gain part of K plus the k1-kernel loss part, for a purely monatomic
/// mixture: an independent plumbing check against [`k_apply`].
pub fn k_apply_via_kernel(
    ctx: &LinearizationContext,
    h: &DistributionFunction,
    at: &PhasePoint,
) -> Result<f64> {
    if ctx.mixture.polyatomic_count() != 0 {
        return Err(KineticError::parameter(
            "kernel-split K evaluation implemented for monatomic mixtures only",
        ));
    }
    let m = &ctx.maxwellian;
    let m_at = ctx.maxwellian_at(at);
    let mut gain_terms = Vec::with_capacity(ctx.mixture.len());
    for b in 0..ctx.mixture.len() {
        gain_terms.push(integrate_pair_fixed(
            &ctx.mixture,
            at,
            b,
            &ctx.quad,
            |ev| {
                let mp = m.eval_point(&ev.primed_a);
                let mps = m.eval_point(&ev.primed_b);
                // (1/sqrt(M)) [ M' sqrt(M'_*) h'_* + sqrt(M') M'_* h' ] cw,
                // the gain part of Q(M, M^{1/2}h) + Q(M^{1/2}h, M)
                let cw = collision_weight(&ctx.model, ev);
                (mp * mps.sqrt() * h.eval_point(&ev.primed_b)
                    + mp.sqrt() * mps * h.eval_point(&ev.primed_a))
                    * cw
                    / m_at.sqrt()
            },
        )?);
    }
    let gain = pairwise_sum(&gain_terms);

    // loss part: integral of k1(zeta, zeta_*) h(zeta_*) over zeta_*
    let mut loss_terms = Vec::with_capacity(ctx.mixture.len());
    for b in 0..ctx.mixture.len() {
        let spec_b = &ctx.mixture.species()[b];
        let hr = crate::quadrature::hermite_scaled(
            ctx.quad.hermite_order,
            spec_b.mass,
            ctx.quad.velocity_scale,
        );
        let mut terms = Vec::with_capacity(hr.len().pow(3));
        for (x, wx) in hr.nodes.iter().zip(&hr.weights) {
            for (y, wy) in hr.nodes.iter().zip(&hr.weights) {
                for (z, wz) in hr.nodes.iter().zip(&hr.weights) {
                    let zs = PhasePoint::monatomic(b, Vector3::new(*x, *y, *z));
                    let k = k1_kernel(ctx, at, &zs)?;
                    terms.push(wx * wy * wz * k * h.eval_point(&zs));
                }
            }
        }
        loss_terms.push(pairwise_sum(&terms));
    }
    let loss = pairwise_sum(&loss_terms);
    Ok(gain - loss)
}

/// One row of a collision-frequency scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuRow {
    pub species: usize,
    pub xi_norm: f64,
    pub internal_energy: f64,
    pub nu: f64,
    pub ratio: f64,
}

/// Scan result: ratio statistics for nu / (1 + |xi| + sqrt I)^exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct NuBoundReport {
    pub rows: Vec<NuRow>,
    pub c_min: f64,
    pub c_max: f64,
    /// Worst per-species c_max / c_min: the sandwich constants of the bound
    /// are species-dependent, so pooling species would inflate the spread.
    pub max_species_ratio: f64,
    /// Largest relative change of the ratio between the half-radius and
    /// full-radius grid points (flatness of the ratio at the boundary).
    pub max_outer_slope: f64,
    pub exponent: f64,
    pub pass: bool,
}

/// Grid of |xi| and I values for the scan. Monatomic species only use the
/// I = 0 slice.
#[derive(Debug, Clone, PartialEq)]
pub struct NuGrid {
    pub xi_values: Vec<f64>,
    pub i_values: Vec<f64>,
}

impl NuGrid {
    pub fn regular(xi_max: f64, xi_steps: usize, i_max: f64, i_steps: usize) -> Result<Self> {
        if xi_steps == 0 || i_steps == 0 || !(xi_max > 0.0) || !(i_max > 0.0) {
            return Err(KineticError::parameter("grid must be nonempty"));
        }
        Ok(NuGrid {
            xi_values: (0..=xi_steps)
                .map(|k| xi_max * k as f64 / xi_steps as f64)
                .collect(),
            i_values: (0..=i_steps)
                .map(|k| i_max * k as f64 / i_steps as f64)
                .collect(),
        })
    }
}

/// Scans nu over the grid against the weight (1 + |xi| + sqrt I)^exponent.
pub fn nu_bound_scan_exponent(
    ctx: &LinearizationContext,
    grid: &NuGrid,
    exponent: f64,
) -> Result<NuBoundReport> {
    if grid.xi_values.is_empty() || grid.i_values.is_empty() {
        return Err(KineticError::parameter("empty scan grid"));
    }
    let mut rows = Vec::new();
    let mut c_min = f64::INFINITY;
    let mut c_max = 0.0_f64;
    let mut max_species_ratio = 0.0_f64;
    for (a, spec) in ctx.mixture.species().iter().enumerate() {
        let mut s_min = f64::INFINITY;
        let mut s_max = 0.0_f64;
        let i_values: &[f64] = if spec.is_polyatomic() {
            &grid.i_values
        } else {
            &grid.i_values[..1]
        };
        for &i in i_values {
            for &x in &grid.xi_values {
                let at = PhasePoint {
                    species: a,
                    xi: Vector3::new(x, 0.0, 0.0),
                    internal_energy: i,
                };
                let v = nu(ctx, &at)?;
                if !(v > 0.0) {
                    return Err(KineticError::domain(format!(
                        "nonpositive collision frequency {v} at |xi| = {x}, I = {i}"
                    )));
                }
                let weight = if spec.is_polyatomic() {
                    (1.0 + x + i.sqrt()).powf(exponent)
                } else {
                    (1.0 + x).powf(exponent)
                };
                let ratio = v / weight;
                c_min = c_min.min(ratio);
                c_max = c_max.max(ratio);
                s_min = s_min.min(ratio);
                s_max = s_max.max(ratio);
                rows.push(NuRow {
                    species: a,
                    xi_norm: x,
                    internal_energy: i,
                    nu: v,
                    ratio,
                });
            }
        }
        max_species_ratio = max_species_ratio.max(s_max / s_min);
    }

    // boundary flatness: compare the ratio at the outermost grid point with
    // the one nearest to half the radius, along I = 0 and (for polyatomic
    // species) along the (|xi|, I) diagonal
    let mut max_outer_slope = 0.0_f64;
    let xi_end = *grid.xi_values.last().unwrap();
    let xi_mid = nearest(&grid.xi_values, xi_end / 2.0);
    let i_end = *grid.i_values.last().unwrap();
    let i_mid = nearest(&grid.i_values, i_end / 4.0);
    for (a, spec) in ctx.mixture.species().iter().enumerate() {
        let find = |xi: f64, i: f64| -> f64 {
            rows.iter()
                .find(|r| r.species == a && r.xi_norm == xi && r.internal_energy == i)
                .map(|r| r.ratio)
                .unwrap()
        };
        let slope0 = (find(xi_end, 0.0) / find(xi_mid, 0.0) - 1.0).abs();
        max_outer_slope = max_outer_slope.max(slope0);
        if spec.is_polyatomic() {
            let slope_d = (find(xi_end, i_end) / find(xi_mid, i_mid) - 1.0).abs();
            max_outer_slope = max_outer_slope.max(slope_d);
        }
    }

    let pass = c_max.is_finite() && max_species_ratio <= 10.0 && max_outer_slope <= 0.05;
    Ok(NuBoundReport {
        rows,
        c_min,
        c_max,
        max_species_ratio,
        max_outer_slope,
        exponent,
        pass,
    })
}

/// Scan with the theorem's exponent 1 - eta.
pub fn nu_bound_scan(ctx: &LinearizationContext, grid: &NuGrid) -> Result<NuBoundReport> {
    nu_bound_scan_exponent(ctx, grid, 1.0 - ctx.model.eta)
}

fn nearest(values: &[f64], target: f64) -> f64 {
    *values
        .iter()
        .min_by(|a, b| {
            (*a - target)
                .abs()
                .partial_cmp(&(*b - target).abs())
                .unwrap()
        })
        .unwrap()
}
