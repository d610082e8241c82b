//! The collision transformation: from an unprimed pair and parameters
//! (omega, R, r) to the post-collisional pair, total energy, internal-energy
//! gap and the parametrized measure weight, case by case for
//! mono/mono, mono/poly, poly/mono and poly/poly collisions.

use nalgebra::Vector3;
use rand::Rng;

use crate::error::{KineticError, Result};
use crate::mixture::{MixtureSpec, PhasePoint, SpeciesSpec};

pub const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Which of the four case forms applies, keyed by (alpha kind, beta kind).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseType {
    MonoMono,
    MonoPoly,
    PolyMono,
    PolyPoly,
}

pub fn case_type(a: &SpeciesSpec, b: &SpeciesSpec) -> CaseType {
    match (a.is_polyatomic(), b.is_polyatomic()) {
        (false, false) => CaseType::MonoMono,
        (false, true) => CaseType::MonoPoly,
        (true, false) => CaseType::PolyMono,
        (true, true) => CaseType::PolyPoly,
    }
}

/// Unprimed collision partners; `a` is species alpha, `b` species beta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionPair {
    pub a: PhasePoint,
    pub b: PhasePoint,
}

/// Collision parameters: scattering direction omega, kinetic-energy fraction
/// R (absent for mono/mono) and internal-energy split r (poly/poly only).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionParams {
    pub omega: Vector3<f64>,
    pub r_kinetic: Option<f64>,
    pub r_internal: Option<f64>,
}

impl CollisionParams {
    pub fn mono_mono(omega: Vector3<f64>) -> Self {
        CollisionParams {
            omega,
            r_kinetic: None,
            r_internal: None,
        }
    }

    pub fn mixed(omega: Vector3<f64>, r_kinetic: f64) -> Self {
        CollisionParams {
            omega,
            r_kinetic: Some(r_kinetic),
            r_internal: None,
        }
    }

    pub fn poly_poly(omega: Vector3<f64>, r_kinetic: f64, r_internal: f64) -> Self {
        CollisionParams {
            omega,
            r_kinetic: Some(r_kinetic),
            r_internal: Some(r_internal),
        }
    }

    fn validate(&self, case: CaseType) -> Result<()> {
        if (self.omega.norm() - 1.0).abs() > 1e-12 {
            return Err(KineticError::parameter(format!(
                "omega must be a unit vector, |omega| = {}",
                self.omega.norm()
            )));
        }
        let needs_r_kin = case != CaseType::MonoMono;
        let needs_r_int = case == CaseType::PolyPoly;
        match (needs_r_kin, self.r_kinetic) {
            (true, Some(r)) if (0.0..=1.0).contains(&r) => {}
            (true, Some(r)) => {
                return Err(KineticError::parameter(format!("R must lie in [0,1], got {r}")))
            }
            (true, None) => return Err(KineticError::parameter("R required for this case")),
            (false, Some(_)) => {
                return Err(KineticError::parameter("R not admissible for mono/mono"))
            }
            (false, None) => {}
        }
        match (needs_r_int, self.r_internal) {
            (true, Some(r)) if (0.0..=1.0).contains(&r) => {}
            (true, Some(r)) => {
                return Err(KineticError::parameter(format!("r must lie in [0,1], got {r}")))
            }
            (true, None) => return Err(KineticError::parameter("r required for poly/poly")),
            (false, Some(_)) => {
                return Err(KineticError::parameter("r only admissible for poly/poly"))
            }
            (false, None) => {}
        }
        Ok(())
    }
}

/// A fully resolved collision: unprimed pair, parameters, primed pair and
/// the derived scalars used by cross sections and operator quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionEvent {
    pub pair: CollisionPair,
    pub params: CollisionParams,
    pub primed_a: PhasePoint,
    pub primed_b: PhasePoint,
    /// Relative velocity g = xi - xi_*.
    pub g: Vector3<f64>,
    pub g_prime_norm: f64,
    /// Center-of-mass velocity.
    pub center_of_mass: Vector3<f64>,
    /// Total collision energy E = mu |g|^2 / 2 + I + I_* (I-terms per case).
    pub energy: f64,
    /// Internal-energy gap: 0, I'_* - I_*, I' - I or I' + I'_* - I - I_*.
    pub delta_i: f64,
    pub reduced_mass: f64,
    pub case: CaseType,
    pub spec_a: SpeciesSpec,
    pub spec_b: SpeciesSpec,
}

impl CollisionEvent {
    /// Mass-normalized gap: delta_i / mu.
    pub fn delta_i_tilde(&self) -> f64 {
        self.delta_i / self.reduced_mass
    }
}

/// mu = m_a m_b / (m_a + m_b).
pub fn reduced_mass(m_a: f64, m_b: f64) -> Result<f64> {
    if !(m_a > 0.0 && m_b > 0.0) {
        return Err(KineticError::parameter(format!(
            "masses must be positive, got ({m_a}, {m_b})"
        )));
    }
    Ok(m_a * m_b / (m_a + m_b))
}

/// Total collision energy with I-terms included per case.
pub fn total_energy(mixture: &MixtureSpec, pair: &CollisionPair) -> f64 {
    let sa = &mixture.species()[pair.a.species];
    let sb = &mixture.species()[pair.b.species];
    let mu = sa.mass * sb.mass / (sa.mass + sb.mass);
    let g2 = (pair.a.xi - pair.b.xi).norm_squared();
    let mut e = 0.5 * mu * g2;
    if sa.is_polyatomic() {
        e += pair.a.internal_energy;
    }
    if sb.is_polyatomic() {
        e += pair.b.internal_energy;
    }
    e
}

/// Applies the collision map and fills in every derived quantity.
pub fn primed_state(
    mixture: &MixtureSpec,
    pair: &CollisionPair,
    params: &CollisionParams,
) -> Result<CollisionEvent> {
    let spec_a = mixture.species()[pair.a.species];
    let spec_b = mixture.species()[pair.b.species];
    let case = case_type(&spec_a, &spec_b);
    params.validate(case)?;

    let (m_a, m_b) = (spec_a.mass, spec_b.mass);
    let m_total = m_a + m_b;
    let mu = m_a * m_b / m_total;
    let g = pair.a.xi - pair.b.xi;
    let center_of_mass = (m_a * pair.a.xi + m_b * pair.b.xi) / m_total;
    let energy = total_energy(mixture, pair);

    let (g_prime_norm, i_prime, i_star_prime, delta_i) = match case {
        CaseType::MonoMono => (g.norm(), 0.0, 0.0, 0.0),
        CaseType::MonoPoly => {
            let r_kin = params.r_kinetic.unwrap();
            let i_star_prime = (1.0 - r_kin) * energy;
            (
                (2.0 * r_kin * energy / mu).sqrt(),
                0.0,
                i_star_prime,
                i_star_prime - pair.b.internal_energy,
            )
        }
        CaseType::PolyMono => {
            let r_kin = params.r_kinetic.unwrap();
            let i_prime = (1.0 - r_kin) * energy;
            (
                (2.0 * r_kin * energy / mu).sqrt(),
                i_prime,
                0.0,
                i_prime - pair.a.internal_energy,
            )
        }
        CaseType::PolyPoly => {
            let r_kin = params.r_kinetic.unwrap();
            let r_int = params.r_internal.unwrap();
            let internal = (1.0 - r_kin) * energy;
            let i_prime = r_int * internal;
            let i_star_prime = internal - i_prime;
            (
                (2.0 * r_kin * energy / mu).sqrt(),
                i_prime,
                i_star_prime,
                i_prime + i_star_prime - pair.a.internal_energy - pair.b.internal_energy,
            )
        }
    };

    let (xi_prime, xi_star_prime) = if case == CaseType::MonoMono && g.norm() == 0.0 {
        (pair.a.xi, pair.b.xi)
    } else {
        (
            center_of_mass + params.omega * (m_b / m_total) * g_prime_norm,
            center_of_mass - params.omega * (m_a / m_total) * g_prime_norm,
        )
    };

    Ok(CollisionEvent {
        pair: *pair,
        params: *params,
        primed_a: PhasePoint {
            species: pair.a.species,
            xi: xi_prime,
            internal_energy: i_prime,
        },
        primed_b: PhasePoint {
            species: pair.b.species,
            xi: xi_star_prime,
            internal_energy: i_star_prime,
        },
        g,
        g_prime_norm,
        center_of_mass,
        energy,
        delta_i,
        reduced_mass: mu,
        case,
        spec_a,
        spec_b,
    })
}

/// Jacobian factor of the parametrized collision measure:
/// poly/poly (sqrt2/mu^{3/2}) E^{5/2}(1-R)R^{1/2};
/// mixed sqrt2 (E/mu)^{3/2} R^{1/2}; mono/mono |g|^2.
pub fn measure_weight(event: &CollisionEvent) -> f64 {
    match event.case {
        CaseType::MonoMono => event.g.norm_squared(),
        CaseType::MonoPoly | CaseType::PolyMono => {
            let r_kin = event.params.r_kinetic.unwrap();
            SQRT_2 * (event.energy / event.reduced_mass).powf(1.5) * r_kin.sqrt()
        }
        CaseType::PolyPoly => {
            let r_kin = event.params.r_kinetic.unwrap();
            SQRT_2 / event.reduced_mass.powf(1.5)
                * event.energy.powf(2.5)
                * (1.0 - r_kin)
                * r_kin.sqrt()
        }
    }
}

/// Uniform direction on the unit sphere.
pub fn random_direction(rng: &mut impl Rng) -> Vector3<f64> {
    let c: f64 = rng.gen_range(-1.0..=1.0);
    let phi: f64 = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
    let s = (1.0 - c * c).max(0.0).sqrt();
    Vector3::new(s * phi.cos(), s * phi.sin(), c)
}

/// Random collision event between the given species pair, with velocities
/// bounded by `xi_max` per component and internal energies by `i_max`.
pub fn random_event(
    mixture: &MixtureSpec,
    species_a: usize,
    species_b: usize,
    xi_max: f64,
    i_max: f64,
    rng: &mut impl Rng,
) -> Result<CollisionEvent> {
    let spec_a = &mixture.species()[species_a];
    let spec_b = &mixture.species()[species_b];
    let case = case_type(spec_a, spec_b);
    let rand_xi = |rng: &mut dyn rand::RngCore| {
        Vector3::new(
            rng.gen_range(-xi_max..=xi_max),
            rng.gen_range(-xi_max..=xi_max),
            rng.gen_range(-xi_max..=xi_max),
        )
    };
    let a = PhasePoint {
        species: species_a,
        xi: rand_xi(rng),
        internal_energy: if spec_a.is_polyatomic() {
            rng.gen_range(0.0..=i_max)
        } else {
            0.0
        },
    };
    let b = PhasePoint {
        species: species_b,
        xi: rand_xi(rng),
        internal_energy: if spec_b.is_polyatomic() {
            rng.gen_range(0.0..=i_max)
        } else {
            0.0
        },
    };
    let params = CollisionParams {
        omega: random_direction(rng),
        r_kinetic: (case != CaseType::MonoMono).then(|| rng.gen_range(0.0..=1.0)),
        r_internal: (case == CaseType::PolyPoly).then(|| rng.gen_range(0.0..=1.0)),
    };
    primed_state(mixture, &CollisionPair { a, b }, &params)
}

/// Relative error of momentum and energy conservation for one event:
/// returns (momentum_residual, energy_residual), both relative.
pub fn conservation_residuals(event: &CollisionEvent) -> (f64, f64) {
    let (m_a, m_b) = (event.spec_a.mass, event.spec_b.mass);
    let before = m_a * event.pair.a.xi + m_b * event.pair.b.xi;
    let after = m_a * event.primed_a.xi + m_b * event.primed_b.xi;
    let p_res = (before - after).norm() / before.norm().max(1.0);

    let term = |p: &PhasePoint, spec: &SpeciesSpec| {
        0.5 * spec.mass * p.xi.norm_squared()
            + if spec.is_polyatomic() {
                p.internal_energy
            } else {
                0.0
            }
    };
    let e_before = term(&event.pair.a, &event.spec_a) + term(&event.pair.b, &event.spec_b);
    let e_after = term(&event.primed_a, &event.spec_a) + term(&event.primed_b, &event.spec_b);
    let e_res = (e_before - e_after).abs() / e_before.abs().max(1.0);
    (p_res, e_res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixture::SpeciesSpec;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_poly(m_a: f64, m_b: f64) -> MixtureSpec {
        MixtureSpec::new(vec![
            SpeciesSpec::polyatomic(m_a, 2.0, 1.0).unwrap(),
            SpeciesSpec::polyatomic(m_b, 2.0, 1.0).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn reduced_mass_values() {
        assert_eq!(reduced_mass(1.0, 1.0).unwrap(), 0.5);
        assert_eq!(reduced_mass(2.0, 2.0).unwrap(), 1.0);
        assert_eq!(reduced_mass(1.0, 3.0).unwrap(), 0.75);
        assert!(reduced_mass(0.0, 1.0).is_err());
        assert!(reduced_mass(1.0, -2.0).is_err());
    }

    #[test]
    fn total_energy_values() {
        let mono = MixtureSpec::new(vec![SpeciesSpec::monatomic(1.0, 1.0).unwrap()]).unwrap();
        let p = PhasePoint::monatomic(0, Vector3::new(1.0, 0.0, 0.0));
        let pair = CollisionPair { a: p, b: p };
        assert_eq!(total_energy(&mono, &pair), 0.0);

        // mu = 1 (m = 2, 2), |g| = 2, I = 1, I_* = 0.5 -> E = 3.5
        let mix = two_poly(2.0, 2.0);
        let pair = CollisionPair {
            a: PhasePoint::polyatomic(0, Vector3::new(1.0, 0.0, 0.0), 1.0),
            b: PhasePoint::polyatomic(1, Vector3::new(-1.0, 0.0, 0.0), 0.5),
        };
        assert_abs_diff_eq!(total_energy(&mix, &pair), 3.5, epsilon = 1e-15);

        // mono(alpha)/poly(beta): E excludes I_alpha and includes I_*
        let mp = MixtureSpec::new(vec![
            SpeciesSpec::monatomic(2.0, 1.0).unwrap(),
            SpeciesSpec::polyatomic(2.0, 2.0, 1.0).unwrap(),
        ])
        .unwrap();
        let pair = CollisionPair {
            a: PhasePoint {
                species: 0,
                xi: Vector3::new(1.0, 0.0, 0.0),
                internal_energy: 99.0,
            },
            b: PhasePoint::polyatomic(1, Vector3::new(-1.0, 0.0, 0.0), 0.5),
        };
        assert_abs_diff_eq!(total_energy(&mp, &pair), 2.5, epsilon = 1e-15);
    }

    #[test]
    fn mono_mono_identity_direction() {
        let mono = MixtureSpec::new(vec![SpeciesSpec::monatomic(1.0, 1.0).unwrap()]).unwrap();
        let a = PhasePoint::monatomic(0, Vector3::new(1.0, 2.0, 0.0));
        let b = PhasePoint::monatomic(0, Vector3::new(-1.0, 0.5, 0.0));
        let g = a.xi - b.xi;
        let params = CollisionParams::mono_mono(g / g.norm());
        let ev = primed_state(&mono, &CollisionPair { a, b }, &params).unwrap();
        assert_abs_diff_eq!((ev.primed_a.xi - a.xi).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!((ev.primed_b.xi - b.xi).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn poly_poly_boundary_r_one() {
        let mix = two_poly(1.0, 1.0);
        let pair = CollisionPair {
            a: PhasePoint::polyatomic(0, Vector3::new(1.0, 0.0, 0.0), 1.0),
            b: PhasePoint::polyatomic(1, Vector3::new(-1.0, 0.0, 0.0), 1.0),
        };
        let params = CollisionParams::poly_poly(Vector3::new(0.0, 0.0, 1.0), 1.0, 0.3);
        let ev = primed_state(&mix, &pair, &params).unwrap();
        assert_eq!(ev.primed_a.internal_energy, 0.0);
        assert_eq!(ev.primed_b.internal_energy, 0.0);
        assert_abs_diff_eq!(
            0.5 * ev.reduced_mass * ev.g_prime_norm * ev.g_prime_norm,
            ev.energy,
            epsilon = 1e-14
        );
        assert_eq!(measure_weight(&ev), 0.0);
    }

    #[test]
    fn poly_poly_worked_example() {
        let mix = two_poly(1.0, 1.0);
        let pair = CollisionPair {
            a: PhasePoint::polyatomic(0, Vector3::new(1.0, 0.0, 0.0), 1.0),
            b: PhasePoint::polyatomic(1, Vector3::new(-1.0, 0.0, 0.0), 1.0),
        };
        let params = CollisionParams::poly_poly(Vector3::new(0.0, 1.0, 0.0), 0.5, 0.5);
        let ev = primed_state(&mix, &pair, &params).unwrap();
        assert_abs_diff_eq!(ev.energy, 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ev.g_prime_norm, 6.0_f64.sqrt(), epsilon = 1e-15);
        let expected = Vector3::new(0.0, 6.0_f64.sqrt() / 2.0, 0.0);
        assert_abs_diff_eq!((ev.primed_a.xi - expected).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((ev.primed_b.xi + expected).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ev.primed_a.internal_energy, 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(ev.primed_b.internal_energy, 0.75, epsilon = 1e-15);
        let (p_res, e_res) = conservation_residuals(&ev);
        assert!(p_res <= 1e-13 && e_res <= 1e-13);
    }

    #[test]
    fn measure_weight_values() {
        // poly/poly, mu = 1, E = 1, R = 1/4 -> 3 sqrt2 / 8
        let mix = two_poly(2.0, 2.0);
        // choose |g| and I so that E = 1: g = 0, I = 0.6, I_* = 0.4
        let pair = CollisionPair {
            a: PhasePoint::polyatomic(0, Vector3::zeros(), 0.6),
            b: PhasePoint::polyatomic(1, Vector3::zeros(), 0.4),
        };
        let params = CollisionParams::poly_poly(Vector3::new(1.0, 0.0, 0.0), 0.25, 0.5);
        let ev = primed_state(&mix, &pair, &params).unwrap();
        assert_abs_diff_eq!(ev.energy, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            measure_weight(&ev),
            3.0 * SQRT_2 / 8.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(3.0 * SQRT_2 / 8.0, 0.5303, epsilon = 1e-4);

        // mono/mono, |g| = 2 -> 4
        let mono = MixtureSpec::new(vec![SpeciesSpec::monatomic(1.0, 1.0).unwrap()]).unwrap();
        let pair = CollisionPair {
            a: PhasePoint::monatomic(0, Vector3::new(1.0, 0.0, 0.0)),
            b: PhasePoint::monatomic(0, Vector3::new(-1.0, 0.0, 0.0)),
        };
        let params = CollisionParams::mono_mono(Vector3::new(0.0, 0.0, 1.0));
        let ev = primed_state(&mono, &pair, &params).unwrap();
        assert_abs_diff_eq!(measure_weight(&ev), 4.0, epsilon = 1e-15);
    }

    #[test]
    fn params_validation() {
        let mono = MixtureSpec::new(vec![SpeciesSpec::monatomic(1.0, 1.0).unwrap()]).unwrap();
        let pair = CollisionPair {
            a: PhasePoint::monatomic(0, Vector3::new(1.0, 0.0, 0.0)),
            b: PhasePoint::monatomic(0, Vector3::new(-1.0, 0.0, 0.0)),
        };
        // non-unit omega
        let bad = CollisionParams::mono_mono(Vector3::new(0.0, 0.0, 2.0));
        assert!(primed_state(&mono, &pair, &bad).is_err());
        // R supplied for mono/mono
        let bad = CollisionParams::mixed(Vector3::new(0.0, 0.0, 1.0), 0.5);
        assert!(primed_state(&mono, &pair, &bad).is_err());

        let mix = two_poly(1.0, 1.0);
        let ppair = CollisionPair {
            a: PhasePoint::polyatomic(0, Vector3::new(1.0, 0.0, 0.0), 1.0),
            b: PhasePoint::polyatomic(1, Vector3::new(-1.0, 0.0, 0.0), 1.0),
        };
        // missing r for poly/poly
        let bad = CollisionParams::mixed(Vector3::new(0.0, 0.0, 1.0), 0.5);
        assert!(primed_state(&mix, &ppair, &bad).is_err());
        // R out of range
        let bad = CollisionParams::poly_poly(Vector3::new(0.0, 0.0, 1.0), 1.5, 0.5);
        assert!(primed_state(&mix, &ppair, &bad).is_err());
    }

    #[test]
    fn conservation_random_events() {
        let mix = MixtureSpec::new(vec![
            SpeciesSpec::monatomic(0.7, 1.0).unwrap(),
            SpeciesSpec::polyatomic(2.3, 3.0, 1.0).unwrap(),
        ])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            for _ in 0..1000 {
                let ev = random_event(&mix, a, b, 5.0, 10.0, &mut rng).unwrap();
                let (p_res, e_res) = conservation_residuals(&ev);
                assert!(p_res <= 1e-12, "momentum residual {p_res}");
                assert!(e_res <= 1e-12, "energy residual {e_res}");
                // E from primed variables matches E from unprimed ones
                let e_primed = 0.5 * ev.reduced_mass * ev.g_prime_norm * ev.g_prime_norm
                    + ev.primed_a.internal_energy
                    + ev.primed_b.internal_energy;
                assert!((e_primed - ev.energy).abs() <= 1e-12 * ev.energy.max(1.0));
            }
        }
    }

    #[test]
    fn involution_round_trip() {
        let mix = two_poly(1.0, 3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let ev = random_event(&mix, 0, 1, 4.0, 6.0, &mut rng).unwrap();
            if ev.energy < 1e-9 {
                continue;
            }
            let g_hat = ev.g / ev.g.norm();
            let r_back = 0.5 * ev.reduced_mass * ev.g.norm_squared() / ev.energy;
            let r_int_back = if r_back < 1.0 {
                ev.pair.a.internal_energy / ((1.0 - r_back) * ev.energy)
            } else {
                0.5
            };
            let back_pair = CollisionPair {
                a: ev.primed_a,
                b: ev.primed_b,
            };
            let back_params = CollisionParams::poly_poly(g_hat, r_back, r_int_back);
            let back = primed_state(&mix, &back_pair, &back_params).unwrap();
            assert!((back.primed_a.xi - ev.pair.a.xi).norm() <= 1e-10);
            assert!((back.primed_b.xi - ev.pair.b.xi).norm() <= 1e-10);
            assert!((back.primed_a.internal_energy - ev.pair.a.internal_energy).abs() <= 1e-10);
            assert!((back.primed_b.internal_energy - ev.pair.b.internal_energy).abs() <= 1e-10);
        }
    }
}
