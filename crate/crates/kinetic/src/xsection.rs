//! Scattering cross sections of the hard-potential-with-cutoff family,
//! the per-case multiplied-out collision weights, and the structural
//! residual checks (microreversibility, detailed-balance bound).

use crate::error::{KineticError, Result};
use crate::geometry::{CaseType, CollisionEvent};
use crate::mixture::SpeciesSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    HardPotentialCutoff,
}

/// Cross-section model sigma = C_ab (|g'|/|g|) E^{-eta/2} Upsilon with a
/// symmetric positive coefficient matrix and 0 <= eta < 1. `gamma_check`
/// is only used by the bound-verification scan.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSectionModel {
    pub kind: ModelKind,
    c: Vec<Vec<f64>>,
    pub eta: f64,
    pub gamma_check: f64,
}

impl CrossSectionModel {
    pub fn new(c: Vec<Vec<f64>>, eta: f64, gamma_check: f64) -> Result<Self> {
        let s = c.len();
        if s == 0 || c.iter().any(|row| row.len() != s) {
            return Err(KineticError::parameter("C must be a square matrix"));
        }
        for i in 0..s {
            for j in 0..s {
                if !(c[i][j] > 0.0) {
                    return Err(KineticError::parameter("C entries must be positive"));
                }
                if (c[i][j] - c[j][i]).abs() > 1e-14 * c[i][j].abs() {
                    return Err(KineticError::parameter("C must be symmetric"));
                }
            }
        }
        if !(0.0..1.0).contains(&eta) {
            return Err(KineticError::parameter(format!(
                "eta must lie in [0,1), got {eta}"
            )));
        }
        if !(gamma_check > 0.0 && gamma_check < 1.0) {
            return Err(KineticError::parameter(format!(
                "gamma must lie in (0,1), got {gamma_check}"
            )));
        }
        Ok(CrossSectionModel {
            kind: ModelKind::HardPotentialCutoff,
            c,
            eta,
            gamma_check,
        })
    }

    pub fn species_count(&self) -> usize {
        self.c.len()
    }

    pub fn c(&self, a: usize, b: usize) -> f64 {
        self.c[a][b]
    }
}

/// Energy factors entering the cross section: calE and calE_star are 1 for
/// monatomic indices and the total energy otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyFactors {
    pub energy: f64,
    pub cal_e: f64,
    pub cal_e_star: f64,
    pub upsilon: f64,
}

fn upsilon_raw(
    spec_a: &SpeciesSpec,
    spec_b: &SpeciesSpec,
    energy: f64,
    i_prime: f64,
    i_star_prime: f64,
) -> (f64, f64, f64) {
    let cal_e = if spec_a.is_polyatomic() { energy } else { 1.0 };
    let cal_e_star = if spec_b.is_polyatomic() { energy } else { 1.0 };
    let mut upsilon = 1.0;
    if spec_a.is_polyatomic() {
        upsilon *= i_prime.powf(spec_a.dof / 2.0 - 1.0) / cal_e.powf(spec_a.dof / 2.0);
    }
    if spec_b.is_polyatomic() {
        upsilon *= i_star_prime.powf(spec_b.dof / 2.0 - 1.0) / cal_e_star.powf(spec_b.dof / 2.0);
    }
    (cal_e, cal_e_star, upsilon)
}

pub fn energy_factors(event: &CollisionEvent) -> EnergyFactors {
    let (cal_e, cal_e_star, upsilon) = upsilon_raw(
        &event.spec_a,
        &event.spec_b,
        event.energy,
        event.primed_a.internal_energy,
        event.primed_b.internal_energy,
    );
    EnergyFactors {
        energy: event.energy,
        cal_e,
        cal_e_star,
        upsilon,
    }
}

/// Cross section from raw collision variables. `g_norm` is the pre-collision
/// relative speed; the primed internal energies determine the gap. Errors
/// when the kinetic energy cannot cover the gap (the indicator set).
#[allow(clippy::too_many_arguments)]
pub fn sigma_raw(
    model: &CrossSectionModel,
    spec_a: &SpeciesSpec,
    spec_b: &SpeciesSpec,
    c_ab: f64,
    g_norm: f64,
    i: f64,
    i_star: f64,
    i_prime: f64,
    i_star_prime: f64,
) -> Result<f64> {
    if g_norm == 0.0 {
        return Ok(0.0);
    }
    let mu = spec_a.mass * spec_b.mass / (spec_a.mass + spec_b.mass);
    let mut energy = 0.5 * mu * g_norm * g_norm;
    let mut delta_i = 0.0;
    if spec_a.is_polyatomic() {
        energy += i;
        delta_i += i_prime - i;
    }
    if spec_b.is_polyatomic() {
        energy += i_star;
        delta_i += i_star_prime - i_star;
    }
    let g_prime_sq = g_norm * g_norm - 2.0 * delta_i / mu;
    if g_prime_sq <= 0.0 {
        return Err(KineticError::domain(format!(
            "kinetic energy cannot cover the internal-energy gap: mu|g|^2 = {}, 2 delta I = {}",
            mu * g_norm * g_norm,
            2.0 * delta_i
        )));
    }
    let (_, _, upsilon) = upsilon_raw(spec_a, spec_b, energy, i_prime, i_star_prime);
    Ok(c_ab * (g_prime_sq.sqrt() / g_norm) * energy.powf(-model.eta / 2.0) * upsilon)
}

/// Cross section for a resolved event. |g| = 0 returns 0 (degenerate,
/// measure-zero); an energy gap exceeding the kinetic energy is a domain
/// error.
pub fn sigma(model: &CrossSectionModel, event: &CollisionEvent) -> Result<f64> {
    let a = event.pair.a.species;
    let b = event.pair.b.species;
    sigma_raw(
        model,
        &event.spec_a,
        &event.spec_b,
        model.c(a, b),
        event.g.norm(),
        event.pair.a.internal_energy,
        event.pair.b.internal_energy,
        event.primed_a.internal_energy,
        event.primed_b.internal_energy,
    )
}

/// Product of the internal-energy measure weights I^(delta/2 - 1) for the
/// polyatomic participants of a collision, evaluated at (i, i_star).
pub fn i_power_product(event: &CollisionEvent, i: f64, i_star: f64) -> f64 {
    let mut p = 1.0;
    if event.spec_a.is_polyatomic() {
        p *= i.powf(event.spec_a.dof / 2.0 - 1.0);
    }
    if event.spec_b.is_polyatomic() {
        p *= i_star.powf(event.spec_b.dof / 2.0 - 1.0);
    }
    p
}

/// |LHS - RHS| of the microreversibility identity, comparing the forward
/// cross section with the one for the reversed collision.
pub fn microreversibility_residual(
    model: &CrossSectionModel,
    event: &CollisionEvent,
) -> Result<f64> {
    let (i, i_star) = (
        event.pair.a.internal_energy,
        event.pair.b.internal_energy,
    );
    let (i_prime, i_star_prime) = (
        event.primed_a.internal_energy,
        event.primed_b.internal_energy,
    );
    let g = event.g.norm();
    let g_prime = event.g_prime_norm;
    if g == 0.0 || g_prime == 0.0 {
        return Ok(0.0);
    }
    let c_ab = model.c(event.pair.a.species, event.pair.b.species);
    // The forward cross section uses the stably stored |g'|: reconstructing
    // it from |g|^2 - 2 delta I / mu amplifies roundoff by 1/R for
    // near-degenerate splits. The reverse direction is an independent
    // sigma_raw evaluation from the reverse event's own variables, so the
    // identity stays a genuine two-sided check.
    let forward = {
        let e = event.energy;
        let (_, _, ups) = upsilon_raw(&event.spec_a, &event.spec_b, e, i_prime, i_star_prime);
        c_ab * (g_prime / g) * e.powf(-model.eta / 2.0) * ups
    };
    let reverse = sigma_raw(
        model,
        &event.spec_a,
        &event.spec_b,
        c_ab,
        g_prime,
        i_prime,
        i_star_prime,
        i,
        i_star,
    )?;
    let lhs = i_power_product(event, i, i_star) * g * g * forward;
    let rhs = i_power_product(event, i_prime, i_star_prime) * g_prime * g_prime * reverse;
    Ok((lhs - rhs).abs())
}

/// Fully multiplied-out gain/loss weight for the reduced case forms:
/// mono/mono sigma|g|; mixed sigma|g|E; poly/poly sigma|g|E^2(1-R).
/// All removable parameter singularities have been cancelled; |g| = 0 or
/// an exhausted indicator gives weight 0.
pub fn collision_weight(model: &CrossSectionModel, event: &CollisionEvent) -> f64 {
    let g = event.g.norm();
    if g == 0.0 || event.g_prime_norm == 0.0 {
        return 0.0;
    }
    let a = event.pair.a.species;
    let b = event.pair.b.species;
    let (_, _, upsilon) = upsilon_raw(
        &event.spec_a,
        &event.spec_b,
        event.energy,
        event.primed_a.internal_energy,
        event.primed_b.internal_energy,
    );
    let sigma = model.c(a, b) * (event.g_prime_norm / g)
        * event.energy.powf(-model.eta / 2.0)
        * upsilon;
    match event.case {
        CaseType::MonoMono => sigma * g,
        CaseType::MonoPoly | CaseType::PolyMono => sigma * g * event.energy,
        CaseType::PolyPoly => {
            sigma * g * event.energy * event.energy * (1.0 - event.params.r_kinetic.unwrap())
        }
    }
}

/// [`collision_weight`] divided by (I')^{d_a/2-1} (I'_*)^{d_b/2-1} in closed
/// form. The primed powers cancel against the cross section, so this stays
/// finite on the whole parameter cube; it multiplies the gain term after the
/// unprimed I-powers have been attached.
pub fn collision_weight_reduced(model: &CrossSectionModel, event: &CollisionEvent) -> f64 {
    let g = event.g.norm();
    if g == 0.0 {
        return 0.0;
    }
    let energy = event.energy;
    let mut denom = 1.0;
    if event.spec_a.is_polyatomic() {
        denom *= energy.powf(event.spec_a.dof / 2.0);
    }
    if event.spec_b.is_polyatomic() {
        denom *= energy.powf(event.spec_b.dof / 2.0);
    }
    let base = model.c(event.pair.a.species, event.pair.b.species)
        * event.g_prime_norm
        * energy.powf(-model.eta / 2.0)
        / denom;
    match event.case {
        CaseType::MonoMono => base,
        CaseType::MonoPoly | CaseType::PolyMono => base * energy,
        CaseType::PolyPoly => {
            base * energy * energy * (1.0 - event.params.r_kinetic.unwrap())
        }
    }
}

/// Literal B_i weight times its adjacent (R, r)-power factors, kept as an
/// independently coded oracle for [`collision_weight`]. Singular at the
/// parameter boundaries for dof > 2; callers must stay inside (0,1).
pub fn literal_collision_weight(model: &CrossSectionModel, event: &CollisionEvent) -> Result<f64> {
    let sigma = sigma(model, event)?;
    let g = event.g.norm();
    let mu = event.reduced_mass;
    let energy = event.energy;
    match event.case {
        CaseType::MonoMono => Ok(sigma * g),
        CaseType::MonoPoly => {
            let r_kin = event.params.r_kinetic.unwrap();
            let d_b = event.spec_b.dof;
            let i_star_prime = event.primed_b.internal_energy;
            let b1 = sigma * (2.0 / mu).sqrt() * g * energy.powf((d_b + 1.0) / 2.0)
                / (i_star_prime.powf(d_b / 2.0 - 1.0) * event.g_prime_norm);
            Ok(b1 * (1.0 - r_kin).powf(d_b / 2.0 - 1.0) * r_kin.sqrt())
        }
        CaseType::PolyMono => {
            let r_kin = event.params.r_kinetic.unwrap();
            let d_a = event.spec_a.dof;
            let i_prime = event.primed_a.internal_energy;
            let b1 = sigma * (2.0 / mu).sqrt() * g * energy.powf((d_a + 1.0) / 2.0)
                / (i_prime.powf(d_a / 2.0 - 1.0) * event.g_prime_norm);
            Ok(b1 * (1.0 - r_kin).powf(d_a / 2.0 - 1.0) * r_kin.sqrt())
        }
        CaseType::PolyPoly => {
            let r_kin = event.params.r_kinetic.unwrap();
            let r_int = event.params.r_internal.unwrap();
            let (d_a, d_b) = (event.spec_a.dof, event.spec_b.dof);
            let i_prime = event.primed_a.internal_energy;
            let i_star_prime = event.primed_b.internal_energy;
            let b2 = sigma * (2.0 / mu).sqrt() * g * energy.powf((d_a + d_b + 1.0) / 2.0)
                / (i_prime.powf(d_a / 2.0 - 1.0)
                    * i_star_prime.powf(d_b / 2.0 - 1.0)
                    * event.g_prime_norm);
            Ok(b2
                * r_int.powf(d_a / 2.0 - 1.0)
                * (1.0 - r_int).powf(d_b / 2.0 - 1.0)
                * (1.0 - r_kin).powf((d_a + d_b) / 2.0 - 1.0)
                * r_kin.sqrt())
        }
    }
}

/// Result of scanning the detailed hard-potential bound over a batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub max_ratio: f64,
    pub events_checked: usize,
}

/// Checks sigma <= C (Psi + Psi^{gamma/2}) Upsilon / |g|^2 with
/// Psi = |g||g'|, reporting the largest fitted constant over the batch.
pub fn bound_check_est1(model: &CrossSectionModel, events: &[CollisionEvent]) -> Result<BoundReport> {
    bound_check_with(events, model.gamma_check, |ev| sigma(model, ev))
}

/// Bound scan against an arbitrary cross-section evaluator (used for
/// negative controls).
pub fn bound_check_with(
    events: &[CollisionEvent],
    gamma: f64,
    mut sigma_fn: impl FnMut(&CollisionEvent) -> Result<f64>,
) -> Result<BoundReport> {
    if events.is_empty() {
        return Err(KineticError::parameter("bound check needs a nonempty batch"));
    }
    let mut max_ratio: f64 = 0.0;
    let mut checked = 0;
    for ev in events {
        let g = ev.g.norm();
        if g == 0.0 || ev.g_prime_norm == 0.0 {
            continue;
        }
        let s = sigma_fn(ev)?;
        let factors = energy_factors(ev);
        if factors.upsilon == 0.0 {
            continue;
        }
        let psi = g * ev.g_prime_norm;
        let ratio = s * g * g / (factors.upsilon * (psi + psi.powf(gamma / 2.0)));
        max_ratio = max_ratio.max(ratio);
        checked += 1;
    }
    if checked == 0 {
        return Err(KineticError::parameter("no in-domain events in batch"));
    }
    Ok(BoundReport {
        max_ratio,
        events_checked: checked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{primed_state, random_event, CollisionPair, CollisionParams};
    use crate::mixture::{MixtureSpec, PhasePoint, SpeciesSpec};
    use approx::assert_abs_diff_eq;
    use nalgebra::Vector3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(s: usize, eta: f64) -> CrossSectionModel {
        CrossSectionModel::new(vec![vec![1.0; s]; s], eta, 0.5).unwrap()
    }

    fn poly_pair_mix() -> MixtureSpec {
        MixtureSpec::new(vec![
            SpeciesSpec::polyatomic(2.0, 2.0, 1.0).unwrap(),
            SpeciesSpec::polyatomic(2.0, 2.0, 1.0).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn model_validation() {
        assert!(CrossSectionModel::new(vec![vec![1.0, 2.0], vec![3.0, 1.0]], 0.0, 0.5).is_err());
        assert!(CrossSectionModel::new(vec![vec![1.0]], 1.0, 0.5).is_err());
        assert!(CrossSectionModel::new(vec![vec![1.0]], 0.5, 1.0).is_err());
        assert!(CrossSectionModel::new(vec![vec![-1.0]], 0.0, 0.5).is_err());
        assert!(CrossSectionModel::new(vec![vec![1.0], vec![1.0]], 0.0, 0.5).is_err());
    }

    #[test]
    fn energy_factors_mono_mono() {
        let mix = MixtureSpec::new(vec![SpeciesSpec::monatomic(1.0, 1.0).unwrap()]).unwrap();
        let pair = CollisionPair {
            a: PhasePoint::monatomic(0, Vector3::new(1.0, 0.0, 0.0)),
            b: PhasePoint::monatomic(0, Vector3::new(-1.0, 0.0, 0.0)),
        };
        let ev = primed_state(&mix, &pair, &CollisionParams::mono_mono(Vector3::z())).unwrap();
        let f = energy_factors(&ev);
        assert_eq!(f.cal_e, 1.0);
        assert_eq!(f.cal_e_star, 1.0);
        assert_eq!(f.upsilon, 1.0);
    }

    #[test]
    fn energy_factors_poly_poly_example() {
        // mu = 1, |g| = 2, I = 1, I_* = 0.5, delta = 2 -> Upsilon = 1/E^2 = 1/3.5^2
        let mix = poly_pair_mix();
        let pair = CollisionPair {
            a: PhasePoint::polyatomic(0, Vector3::new(1.0, 0.0, 0.0), 1.0),
            b: PhasePoint::polyatomic(1, Vector3::new(-1.0, 0.0, 0.0), 0.5),
        };
        let ev = primed_state(
            &mix,
            &pair,
            &CollisionParams::poly_poly(Vector3::z(), 0.4, 0.3),
        )
        .unwrap();
        let f = energy_factors(&ev);
        assert_abs_diff_eq!(f.energy, 3.5, epsilon = 1e-15);
        assert_abs_diff_eq!(f.upsilon, 1.0 / (3.5 * 3.5), epsilon = 1e-15);
        assert_abs_diff_eq!(f.upsilon, 0.08163, epsilon = 1e-5);
        // primed-side recomputation gives the same total energy
        let e_primed = 0.5 * ev.reduced_mass * ev.g_prime_norm * ev.g_prime_norm
            + ev.primed_a.internal_energy
            + ev.primed_b.internal_energy;
        assert_abs_diff_eq!(e_primed, f.energy, epsilon = 1e-14);
    }

    #[test]
    fn sigma_hard_sphere_constant_and_eta_half_value() {
        let mix = MixtureSpec::new(vec![SpeciesSpec::monatomic(2.0, 1.0).unwrap()]).unwrap();
        let pair = |gx: f64| CollisionPair {
            a: PhasePoint::monatomic(0, Vector3::new(gx / 2.0, 0.0, 0.0)),
            b: PhasePoint::monatomic(0, Vector3::new(-gx / 2.0, 0.0, 0.0)),
        };
        let omega = Vector3::z();
        let m0 = model(1, 0.0);
        for gx in [0.5, 2.0, 7.0] {
            let ev = primed_state(&mix, &pair(gx), &CollisionParams::mono_mono(omega)).unwrap();
            assert_abs_diff_eq!(sigma(&m0, &ev).unwrap(), 1.0, epsilon = 1e-14);
        }
        // eta = 0.5, m = (2,2) => mu = 1, |g| = 2, E = 2 -> sigma = 2^{-1/4}
        let m_half = model(1, 0.5);
        let ev = primed_state(&mix, &pair(2.0), &CollisionParams::mono_mono(omega)).unwrap();
        assert_abs_diff_eq!(
            sigma(&m_half, &ev).unwrap(),
            2.0_f64.powf(-0.25),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(2.0_f64.powf(-0.25), 0.8409, epsilon = 1e-4);
    }

    #[test]
    fn microreversibility_exact_for_e1() {
        let mix = MixtureSpec::new(vec![
        SpeciesSpec::monatomic(0.8, 1.0).unwrap(),
            SpeciesSpec::polyatomic(1.7, 3.0, 1.0).unwrap(),
        ])
        .unwrap();
        let m = model(2, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            for _ in 0..500 {
                let ev = random_event(&mix, a, b, 4.0, 8.0, &mut rng).unwrap();
                if ev.g.norm() < 1e-6 || ev.g_prime_norm < 1e-6 {
                    continue;
                }
                let res = microreversibility_residual(&m, &ev).unwrap();
                let scale = i_power_product(&ev, ev.pair.a.internal_energy, ev.pair.b.internal_energy)
                    * ev.g.norm_squared()
                    * sigma(&m, &ev).unwrap();
                assert!(res <= 1e-12 * scale.max(1e-300), "residual {res} vs scale {scale}");
            }
        }
    }

    #[test]
    fn microreversibility_detects_broken_model() {
        // perturbed sigma~ = sigma * (1 + I') breaks the identity
        let mix = poly_pair_mix();
        let m = model(2, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ev = random_event(&mix, 0, 1, 3.0, 5.0, &mut rng).unwrap();
        let (i, i_star) = (ev.pair.a.internal_energy, ev.pair.b.internal_energy);
        let (ip, isp) = (
            ev.primed_a.internal_energy,
            ev.primed_b.internal_energy,
        );
        let g = ev.g.norm();
        let gp = ev.g_prime_norm;
        let fwd = sigma_raw(&m, &ev.spec_a, &ev.spec_b, 1.0, g, i, i_star, ip, isp).unwrap()
            * (1.0 + ip);
        let rev = sigma_raw(&m, &ev.spec_a, &ev.spec_b, 1.0, gp, ip, isp, i, i_star).unwrap()
            * (1.0 + i);
        let lhs = i_power_product(&ev, i, i_star) * g * g * fwd;
        let rhs = i_power_product(&ev, ip, isp) * gp * gp * rev;
        assert!((lhs - rhs).abs() > 1e-6 * lhs.abs());
    }

    #[test]
    fn species_swap_symmetry() {
        let mix = MixtureSpec::new(vec![
            SpeciesSpec::polyatomic(1.0, 3.0, 1.0).unwrap(),
            SpeciesSpec::polyatomic(2.5, 5.0, 1.0).unwrap(),
        ])
        .unwrap();
        let m = model(2, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let ev = random_event(&mix, 0, 1, 4.0, 6.0, &mut rng).unwrap();
            let s_ab = sigma(&m, &ev).unwrap();
            let swapped_pair = CollisionPair {
                a: ev.pair.b,
                b: ev.pair.a,
            };
            let swapped_params = CollisionParams::poly_poly(
                -ev.params.omega,
                ev.params.r_kinetic.unwrap(),
                1.0 - ev.params.r_internal.unwrap(),
            );
            let swapped = primed_state(&mix, &swapped_pair, &swapped_params).unwrap();
            let s_ba = sigma(&m, &swapped).unwrap();
            assert!((s_ab - s_ba).abs() <= 1e-13 * s_ab.abs().max(1e-300));
        }
    }

    #[test]
    fn same_species_swap_symmetry() {
        let mix = MixtureSpec::new(vec![SpeciesSpec::polyatomic(1.3, 4.0, 1.0).unwrap()]).unwrap();
        let m = model(1, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..200 {
            let ev = random_event(&mix, 0, 0, 4.0, 6.0, &mut rng).unwrap();
            let s = sigma(&m, &ev).unwrap();
            // (I <-> I_*) together with (I' <-> I'_*)
            let s_swapped = sigma_raw(
                &m,
                &ev.spec_a,
                &ev.spec_b,
                1.0,
                ev.g.norm(),
                ev.pair.b.internal_energy,
                ev.pair.a.internal_energy,
                ev.primed_b.internal_energy,
                ev.primed_a.internal_energy,
            )
            .unwrap();
            assert!((s - s_swapped).abs() <= 1e-13 * s.abs().max(1e-300));
        }
    }

    #[test]
    fn collision_weight_matches_literal_oracle() {
        let mix = MixtureSpec::new(vec![
            SpeciesSpec::monatomic(1.0, 1.0).unwrap(),
            SpeciesSpec::polyatomic(2.0, 2.0, 1.0).unwrap(),
            SpeciesSpec::polyatomic(1.5, 2.0, 1.0).unwrap(),
        ])
        .unwrap();
        let m = model(3, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 2)] {
            for _ in 0..200 {
                let ev = random_event(&mix, a, b, 4.0, 6.0, &mut rng).unwrap();
                if ev.g_prime_norm < 1e-8 {
                    continue;
                }
                let fast = collision_weight(&m, &ev);
                let literal = literal_collision_weight(&m, &ev).unwrap();
                assert!(
                    (fast - literal).abs() <= 1e-13 * fast.abs().max(1e-300),
                    "fast {fast} vs literal {literal}"
                );
            }
        }
    }

    #[test]
    fn collision_weight_continuous_at_boundaries() {
        let mix = MixtureSpec::new(vec![
            SpeciesSpec::polyatomic(1.0, 4.0, 1.0).unwrap(),
            SpeciesSpec::polyatomic(2.0, 5.0, 1.0).unwrap(),
        ])
        .unwrap();
        let m = model(2, 0.0);
        let pair = CollisionPair {
            a: PhasePoint::polyatomic(0, Vector3::new(1.0, 0.5, 0.0), 2.0),
            b: PhasePoint::polyatomic(1, Vector3::new(-0.5, 0.0, 0.3), 1.0),
        };
        for (r_kin, r_int) in [(1.0, 0.5), (0.5, 0.0), (0.5, 1.0), (0.0, 0.5), (1e-15, 0.5)] {
            let ev = primed_state(
                &mix,
                &pair,
                &CollisionParams::poly_poly(Vector3::z(), r_kin, r_int),
            )
            .unwrap();
            let w = collision_weight(&m, &ev);
            assert!(w.is_finite(), "weight not finite at R={r_kin}, r={r_int}");
            if r_kin == 1.0 {
                assert_eq!(w, 0.0);
            }
        }
    }

    #[test]
    fn reduced_weight_times_primed_powers_is_full_weight() {
        let mix = MixtureSpec::new(vec![
            SpeciesSpec::monatomic(1.0, 1.0).unwrap(),
            SpeciesSpec::polyatomic(2.0, 5.0, 1.0).unwrap(),
        ])
        .unwrap();
        let m = model(2, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            for _ in 0..200 {
                let ev = random_event(&mix, a, b, 4.0, 6.0, &mut rng).unwrap();
                let full = collision_weight(&m, &ev);
                let reduced = collision_weight_reduced(&m, &ev)
                    * i_power_product(&ev, ev.primed_a.internal_energy, ev.primed_b.internal_energy);
                assert!(
                    (full - reduced).abs() <= 1e-12 * full.abs().max(1e-300),
                    "full {full} vs reduced path {reduced}"
                );
            }
        }
    }

    #[test]
    fn bound_check_hard_sphere_and_negative_control() {
        let mix = MixtureSpec::new(vec![
            SpeciesSpec::monatomic(1.0, 1.0).unwrap(),
            SpeciesSpec::polyatomic(2.0, 4.0, 1.0).unwrap(),
        ])
        .unwrap();
        let m = model(2, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let mut events = Vec::new();
        for (a, b) in [(0, 0), (0, 1), (1, 1)] {
            for _ in 0..500 {
                events.push(random_event(&mix, a, b, 8.0, 20.0, &mut rng).unwrap());
            }
        }
        let report = bound_check_est1(&m, &events).unwrap();
        assert!(report.max_ratio <= 1.0 + 1e-12, "ratio {}", report.max_ratio);

        // negative control: sigma~ = sigma E^2 escapes any fitted constant
        let small = bound_check_with(&events[..], 0.5, |ev| {
            Ok(sigma(&m, ev)? * ev.energy * ev.energy)
        })
        .unwrap();
        assert!(small.max_ratio > 10.0 * report.max_ratio);

        assert!(bound_check_est1(&m, &[]).is_err());
    }

    #[test]
    fn bound_check_mono_mono_reduction() {
        // Psi = |g|^2 and Upsilon = 1 for mono/mono batches
        let mix = MixtureSpec::new(vec![SpeciesSpec::monatomic(1.0, 1.0).unwrap()]).unwrap();
        let m = model(1, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let ev = random_event(&mix, 0, 0, 5.0, 0.0, &mut rng).unwrap();
        let f = energy_factors(&ev);
        assert_eq!(f.upsilon, 1.0);
        assert_abs_diff_eq!(
            ev.g.norm() * ev.g_prime_norm,
            ev.g.norm_squared(),
            epsilon = 1e-12
        );
        let report = bound_check_est1(&m, &[ev]).unwrap();
        assert!(report.max_ratio <= 1.0 + 1e-12);
    }

    #[test]
    fn sigma_domain_error_outside_indicator() {
        let mix = poly_pair_mix();
        let m = model(2, 0.0);
        let spec = mix.species()[0];
        // gap larger than the kinetic energy
        let err = sigma_raw(&m, &spec, &spec, 1.0, 1.0, 0.0, 0.0, 10.0, 10.0);
        assert!(err.is_err());
    }

    #[test]
    fn random_eta_and_masses_keep_weight_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..50 {
            let mix = MixtureSpec::new(vec![
                SpeciesSpec::polyatomic(rng.gen_range(0.5..4.0), rng.gen_range(2.0..6.0), 1.0)
                    .unwrap(),
            ])
            .unwrap();
            let m = model(1, rng.gen_range(0.0..0.99));
            let ev = random_event(&mix, 0, 0, 5.0, 10.0, &mut rng).unwrap();
            assert!(collision_weight(&m, &ev).is_finite());
        }
    }
}
