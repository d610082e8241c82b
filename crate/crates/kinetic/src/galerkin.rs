//! Galerkin discretization of the linearized operator: a species-pure
//! orthonormal basis b_i = M^{1/2} phi_i of Hermite (velocity) x Laguerre
//! (internal energy) polynomials, and assembly of the nu, K and L matrices
//! with the symmetrized quadratic-form quadrature
//! (L h, g) = 1/4 sum_{ab} int Delta(h/M^{1/2}) Delta(g/M^{1/2}) dA~.

use nalgebra::{DMatrix, DVector, Vector3};
use statrs::function::gamma::gamma;

use crate::error::{KineticError, Result};
use crate::geometry::{case_type, primed_state, CaseType, CollisionPair, CollisionParams};
use crate::linearized::{nu, LinearizationContext};
use crate::mixture::{MixtureSpec, PhasePoint};
use crate::quadrature::{
    gauss_hermite, gauss_laguerre, gauss_legendre_unit, hermite_scaled, laguerre_scaled,
    sphere_rule, QuadratureSpec,
};
use crate::xsection::collision_weight_reduced;

/// One basis polynomial: species index, Hermite degrees per velocity axis
/// and Laguerre degree in the internal energy (q = 0 for monatomic).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisFunction {
    pub species: usize,
    pub k: [usize; 3],
    pub q: usize,
}

impl BasisFunction {
    /// Combined polynomial degree k1 + k2 + k3 + 2q.
    pub fn degree(&self) -> usize {
        self.k[0] + self.k[1] + self.k[2] + 2 * self.q
    }
}

/// Orthonormal polynomial basis phi_i with respect to the normalized
/// Maxwellian measure; b_i = M^{1/2} phi_i are orthonormal in L^2.
#[derive(Debug, Clone)]
pub struct GalerkinBasis {
    pub order: usize,
    pub functions: Vec<BasisFunction>,
    per_species: Vec<Vec<usize>>,
    /// Laguerre normalization sqrt(q! Gamma(a+1) / Gamma(q+a+1)) per species.
    lag_norms: Vec<Vec<f64>>,
    mixture: MixtureSpec,
}

/// Orthonormal Hermite values He_k(x)/sqrt(k!) for k = 0..=n_max
/// (orthonormal against the standard normal density).
fn hermite_orthonormal(x: f64, n_max: usize, out: &mut [f64]) {
    out[0] = 1.0;
    if n_max >= 1 {
        out[1] = x;
    }
    for k in 1..n_max {
        out[k + 1] = (x * out[k] - (k as f64).sqrt() * out[k - 1]) / ((k + 1) as f64).sqrt();
    }
}

/// Generalized Laguerre values L_q^(a)(x) for q = 0..=q_max (unnormalized).
fn laguerre_values(x: f64, a: f64, q_max: usize, out: &mut [f64]) {
    out[0] = 1.0;
    if q_max >= 1 {
        out[1] = 1.0 + a - x;
    }
    for q in 1..q_max {
        let qf = q as f64;
        out[q + 1] = ((2.0 * qf + a + 1.0 - x) * out[q] - (qf + a) * out[q - 1]) / (qf + 1.0);
    }
}

impl GalerkinBasis {
    /// All combined degrees <= order per species; order >= 2 so that the
    /// s+4 collision invariants lie in the span.
    pub fn new(mixture: &MixtureSpec, order: usize) -> Result<Self> {
        if order < 2 {
            return Err(KineticError::parameter(
                "basis order must be >= 2 to contain the collision invariants",
            ));
        }
        if order > 12 {
            return Err(KineticError::parameter("basis order must be <= 12"));
        }
        let mut functions = Vec::new();
        let mut per_species = Vec::new();
        let mut lag_norms = Vec::new();
        for (s, spec) in mixture.species().iter().enumerate() {
            let mut mine = Vec::new();
            let q_max = if spec.is_polyatomic() { order / 2 } else { 0 };
            for q in 0..=q_max {
                for k1 in 0..=(order - 2 * q) {
                    for k2 in 0..=(order - 2 * q - k1) {
                        for k3 in 0..=(order - 2 * q - k1 - k2) {
                            mine.push(functions.len());
                            functions.push(BasisFunction {
                                species: s,
                                k: [k1, k2, k3],
                                q,
                            });
                        }
                    }
                }
            }
            per_species.push(mine);
            let a = spec.dof / 2.0 - 1.0;
            lag_norms.push(
                (0..=q_max)
                    .map(|q| {
                        (gamma(q as f64 + 1.0) * gamma(a + 1.0) / gamma(q as f64 + a + 1.0)).sqrt()
                    })
                    .collect(),
            );
        }
        Ok(GalerkinBasis {
            order,
            functions,
            per_species,
            lag_norms,
            mixture: mixture.clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// Global indices of the basis functions living on one species.
    pub fn species_indices(&self, species: usize) -> &[usize] {
        &self.per_species[species]
    }

    /// Values of all basis polynomials of `species` at (xi, I), in the
    /// order given by [`Self::species_indices`].
    pub fn eval_species(&self, species: usize, xi: &Vector3<f64>, i: f64, out: &mut [f64]) {
        let spec = &self.mixture.species()[species];
        let n = self.order;
        let sm = spec.mass.sqrt();
        let mut he = [[0.0; 16]; 3];
        for axis in 0..3 {
            hermite_orthonormal(sm * xi[axis], n, &mut he[axis][..=n]);
        }
        let q_max = if spec.is_polyatomic() { n / 2 } else { 0 };
        let mut lag = [0.0; 16];
        laguerre_values(i, spec.dof / 2.0 - 1.0, q_max, &mut lag[..=q_max]);
        let inv_sqrt_n = 1.0 / spec.number_density.sqrt();
        for (slot, &gi) in self.per_species[species].iter().enumerate() {
            let f = &self.functions[gi];
            let mut v = inv_sqrt_n * he[0][f.k[0]] * he[1][f.k[1]] * he[2][f.k[2]];
            if spec.is_polyatomic() {
                v *= lag[f.q] * self.lag_norms[species][f.q];
            }
            out[slot] = v;
        }
    }

    /// Value of a single basis polynomial at a phase point (0 if the point
    /// belongs to a different species).
    pub fn eval_one(&self, index: usize, p: &PhasePoint) -> f64 {
        let f = &self.functions[index];
        if f.species != p.species {
            return 0.0;
        }
        let mut buf = vec![0.0; self.per_species[f.species].len()];
        self.eval_species(f.species, &p.xi, p.internal_energy, &mut buf);
        let slot = self.per_species[f.species]
            .iter()
            .position(|&g| g == index)
            .unwrap();
        buf[slot]
    }
}

/// Assembled Galerkin matrices and the spectrum of L.
#[derive(Debug, Clone)]
pub struct GalerkinSystem {
    pub basis: GalerkinBasis,
    pub nu_matrix: DMatrix<f64>,
    pub k_matrix: DMatrix<f64>,
    pub l_matrix: DMatrix<f64>,
    /// Eigenvalues of L, ascending.
    pub eigenvalues: Vec<f64>,
    /// Max deviation of the Gram matrix from the identity.
    pub gram_residual: f64,
}

impl GalerkinSystem {
    pub fn l_norm(&self) -> f64 {
        self.eigenvalues
            .iter()
            .fold(0.0_f64, |a, &e| a.max(e.abs()))
    }

    /// Number of eigenvalues below `threshold_factor * ||L||`.
    pub fn kernel_count(&self, threshold_factor: f64) -> usize {
        let cut = threshold_factor * self.l_norm();
        self.eigenvalues.iter().filter(|&&e| e < cut).count()
    }

    /// Smallest eigenvalue above the kernel threshold.
    pub fn spectral_gap(&self, threshold_factor: f64) -> f64 {
        let cut = threshold_factor * self.l_norm();
        self.eigenvalues
            .iter()
            .copied()
            .find(|&e| e >= cut)
            .unwrap_or(f64::NAN)
    }
}

/// Quadrature nodes (xi, I) and weights absorbing the full Maxwellian of
/// one species, so that sum w P(z) ~ int M_s P dz for polynomials P.
fn maxwellian_rule(
    ctx: &LinearizationContext,
    species: usize,
    h_order: usize,
    l_order: usize,
) -> (Vec<PhasePoint>, Vec<f64>) {
    let spec = &ctx.mixture.species()[species];
    let gh = gauss_hermite(h_order);
    // y = sqrt(m) xi standard normal: node xi = sqrt(2/m) x, weight w/sqrt(pi)
    let c = (2.0 / spec.mass).sqrt();
    let axis_nodes: Vec<f64> = gh.nodes.iter().map(|x| c * x).collect();
    let axis_weights: Vec<f64> = gh
        .weights
        .iter()
        .map(|w| w / std::f64::consts::PI.sqrt())
        .collect();
    let energy: Vec<(f64, f64)> = if spec.is_polyatomic() {
        let a = spec.dof / 2.0 - 1.0;
        let gl = gauss_laguerre(l_order, a);
        let norm = gamma(a + 1.0);
        gl.nodes
            .iter()
            .zip(&gl.weights)
            .map(|(x, w)| (*x, w / norm))
            .collect()
    } else {
        vec![(0.0, 1.0)]
    };
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (x, wx) in axis_nodes.iter().zip(&axis_weights) {
        for (y, wy) in axis_nodes.iter().zip(&axis_weights) {
            for (z, wz) in axis_nodes.iter().zip(&axis_weights) {
                for (i, wi) in &energy {
                    points.push(PhasePoint {
                        species,
                        xi: Vector3::new(*x, *y, *z),
                        internal_energy: *i,
                    });
                    weights.push(spec.number_density * wx * wy * wz * wi);
                }
            }
        }
    }
    (points, weights)
}

/// Gram matrix (b_i, b_j); should be the identity up to quadrature error.
fn gram_matrix(ctx: &LinearizationContext, basis: &GalerkinBasis) -> DMatrix<f64> {
    let n = basis.len();
    let mut g = DMatrix::zeros(n, n);
    let order = basis.order + 2;
    for s in 0..ctx.mixture.len() {
        let idx = basis.species_indices(s);
        let mut vals = vec![0.0; idx.len()];
        let (points, weights) = maxwellian_rule(ctx, s, order, order);
        for (p, w) in points.iter().zip(&weights) {
            basis.eval_species(s, &p.xi, p.internal_energy, &mut vals);
            for (a, &gi) in idx.iter().enumerate() {
                for (b, &gj) in idx.iter().enumerate().skip(a) {
                    g[(gi, gj)] += w * vals[a] * vals[b];
                }
            }
        }
        for (a, &gi) in idx.iter().enumerate() {
            for &gj in idx.iter().skip(a + 1) {
                g[(gj, gi)] = g[(gi, gj)];
            }
        }
    }
    g
}

/// Coordinates of the s+4 invariant directions M^{1/2} psi in the basis:
/// v_i = (M^{1/2} psi, b_i) = int M psi phi_i dz.
pub fn invariant_coordinates(
    ctx: &LinearizationContext,
    basis: &GalerkinBasis,
) -> Vec<DVector<f64>> {
    let invariants = crate::mixture::collision_invariants(&ctx.mixture);
    let mut out = vec![DVector::zeros(basis.len()); invariants.len()];
    let order = basis.order + 2;
    for s in 0..ctx.mixture.len() {
        let idx = basis.species_indices(s);
        let mut vals = vec![0.0; idx.len()];
        let (points, weights) = maxwellian_rule(ctx, s, order, order);
        for (p, w) in points.iter().zip(&weights) {
            basis.eval_species(s, &p.xi, p.internal_energy, &mut vals);
            for (k, psi) in invariants.iter().enumerate() {
                let pv = psi.eval_point(p);
                for (a, &gi) in idx.iter().enumerate() {
                    out[k][gi] += w * pv * vals[a];
                }
            }
        }
    }
    out
}

/// Internal quadrature orders for the high-dimensional L assembly. The
/// kernel, symmetry and positivity of L hold pointwise (exact collision
/// invariance and nonnegative weights), so moderate orders suffice; only
/// nonzero eigenvalues carry quadrature error.
struct AssemblyOrders {
    hermite: usize,
    laguerre: usize,
    sphere_theta: usize,
    sphere_phi: usize,
    legendre: usize,
}

impl Default for AssemblyOrders {
    fn default() -> Self {
        AssemblyOrders {
            hermite: 5,
            laguerre: 3,
            sphere_theta: 4,
            sphere_phi: 8,
            legendre: 3,
        }
    }
}

/// L_ij = 1/4 sum_{ab} int Delta(phi_i) Delta(phi_j) w~, where in the
/// (omega, R, r) parametrization the regularized dA~ weight reads
/// w~ = sqrt(M M_* M' M'_*) (I I')^{d_a/4-1/2} (I_* I'_*)^{d_b/4-1/2} cw_red.
fn assemble_l(
    ctx: &LinearizationContext,
    basis: &GalerkinBasis,
    orders: &AssemblyOrders,
) -> Result<DMatrix<f64>> {
    let n = basis.len();
    let mut l = DMatrix::zeros(n, n);
    let mixture = &ctx.mixture;
    let m = ctx.maxwellian();
    let sphere = sphere_rule(orders.sphere_theta, orders.sphere_phi);
    let unit = gauss_legendre_unit(orders.legendre);

    for alpha in 0..mixture.len() {
        let spec_a = mixture.species()[alpha];
        for beta in 0..mixture.len() {
            let spec_b = mixture.species()[beta];
            let case = case_type(&spec_a, &spec_b);
            let ea = spec_a.dof / 4.0 - 0.5;
            let eb = spec_b.dof / 4.0 - 0.5;

            // involved global indices: species-pure basis functions of
            // alpha and beta (deduplicated when alpha == beta)
            let mut involved: Vec<usize> = basis.species_indices(alpha).to_vec();
            if beta != alpha {
                involved.extend_from_slice(basis.species_indices(beta));
            }
            let ni = involved.len();
            let na = basis.species_indices(alpha).len();
            let mut block = DMatrix::zeros(ni, ni);

            // sqrt(M) decays at twice the Maxwellian length scale
            let ha = hermite_scaled(orders.hermite, spec_a.mass, std::f64::consts::SQRT_2);
            let hb = hermite_scaled(orders.hermite, spec_b.mass, std::f64::consts::SQRT_2);
            let energy_rule = |poly: bool| -> Vec<(f64, f64)> {
                if poly {
                    let r = laguerre_scaled(orders.laguerre, 2.0);
                    r.nodes.into_iter().zip(r.weights).collect()
                } else {
                    vec![(0.0, 1.0)]
                }
            };
            let ia_rule = energy_rule(spec_a.is_polyatomic());
            let ib_rule = energy_rule(spec_b.is_polyatomic());
            // R = u^2 substitution smooths the sqrt(R) dependence of |g'|
            let r_rule: Vec<(Option<f64>, f64)> = match case {
                CaseType::MonoMono => vec![(None, 1.0)],
                _ => unit
                    .nodes
                    .iter()
                    .zip(&unit.weights)
                    .map(|(u, w)| (Some(u * u), 2.0 * u * w))
                    .collect(),
            };
            let rr_rule: Vec<(Option<f64>, f64)> = match case {
                CaseType::PolyPoly => unit
                    .nodes
                    .iter()
                    .zip(&unit.weights)
                    .map(|(x, w)| (Some(*x), *w))
                    .collect(),
                _ => vec![(None, 1.0)],
            };

            let nb = basis.species_indices(beta).len();
            let mut vals_a = vec![0.0; na];
            let mut vals_b = vec![0.0; nb];
            let mut vals_ap = vec![0.0; na];
            let mut vals_bp = vec![0.0; nb];
            let mut delta = vec![0.0; ni];

            for (xa, wxa) in ha.nodes.iter().zip(&ha.weights) {
                for (ya, wya) in ha.nodes.iter().zip(&ha.weights) {
                    for (za, wza) in ha.nodes.iter().zip(&ha.weights) {
                        let xi_a = Vector3::new(*xa, *ya, *za);
                        for (i_a, wia) in &ia_rule {
                            let z = PhasePoint {
                                species: alpha,
                                xi: xi_a,
                                internal_energy: *i_a,
                            };
                            let w_z = wxa * wya * wza * wia;
                            let m_z = m.eval_point(&z);
                            basis.eval_species(alpha, &z.xi, z.internal_energy, &mut vals_a);
                            for (xb, wxb) in hb.nodes.iter().zip(&hb.weights) {
                                for (yb, wyb) in hb.nodes.iter().zip(&hb.weights) {
                                    for (zb, wzb) in hb.nodes.iter().zip(&hb.weights) {
                                        let xi_b = Vector3::new(*xb, *yb, *zb);
                                        for (i_b, wib) in &ib_rule {
                                            let zs = PhasePoint {
                                                species: beta,
                                                xi: xi_b,
                                                internal_energy: *i_b,
                                            };
                                            let w_zs = wxb * wyb * wzb * wib;
                                            let m_zs = m.eval_point(&zs);
                                            basis.eval_species(
                                                beta,
                                                &zs.xi,
                                                zs.internal_energy,
                                                &mut vals_b,
                                            );
                                            let pair = CollisionPair { a: z, b: zs };
                                            for (omega, w_om) in
                                                sphere.directions.iter().zip(&sphere.weights)
                                            {
                                                for (r_k, w_r) in &r_rule {
                                                    for (r_i, w_rr) in &rr_rule {
                                                        let params = CollisionParams {
                                                            omega: *omega,
                                                            r_kinetic: *r_k,
                                                            r_internal: *r_i,
                                                        };
                                                        let ev = primed_state(
                                                            mixture, &pair, &params,
                                                        )?;
                                                        let cw_red = collision_weight_reduced(
                                                            &ctx.model, &ev,
                                                        );
                                                        if cw_red == 0.0 {
                                                            continue;
                                                        }
                                                        let mp = m.eval_point(&ev.primed_a);
                                                        let mps = m.eval_point(&ev.primed_b);
                                                        let mut wt = (m_z * m_zs * mp * mps)
                                                            .sqrt()
                                                            * cw_red;
                                                        if spec_a.is_polyatomic() {
                                                            wt *= (z.internal_energy
                                                                * ev.primed_a.internal_energy)
                                                                .powf(ea);
                                                        }
                                                        if spec_b.is_polyatomic() {
                                                            wt *= (zs.internal_energy
                                                                * ev.primed_b.internal_energy)
                                                                .powf(eb);
                                                        }
                                                        let scale = 0.25
                                                            * w_z
                                                            * w_zs
                                                            * w_om
                                                            * w_r
                                                            * w_rr
                                                            * wt;
                                                        if scale == 0.0 {
                                                            continue;
                                                        }
                                                        basis.eval_species(
                                                            alpha,
                                                            &ev.primed_a.xi,
                                                            ev.primed_a.internal_energy,
                                                            &mut vals_ap,
                                                        );
                                                        basis.eval_species(
                                                            beta,
                                                            &ev.primed_b.xi,
                                                            ev.primed_b.internal_energy,
                                                            &mut vals_bp,
                                                        );
                                                        if beta == alpha {
                                                            for t in 0..na {
                                                                delta[t] = vals_a[t]
                                                                    - vals_ap[t]
                                                                    + vals_b[t]
                                                                    - vals_bp[t];
                                                            }
                                                        } else {
                                                            for t in 0..na {
                                                                delta[t] =
                                                                    vals_a[t] - vals_ap[t];
                                                            }
                                                            for t in 0..nb {
                                                                delta[na + t] =
                                                                    vals_b[t] - vals_bp[t];
                                                            }
                                                        }
                                                        for p in 0..ni {
                                                            let dp = scale * delta[p];
                                                            if dp == 0.0 {
                                                                continue;
                                                            }
                                                            for q in p..ni {
                                                                block[(p, q)] +=
                                                                    dp * delta[q];
                                                            }
                                                        }
                                                    }
                                                }
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }

            for p in 0..ni {
                for q in p..ni {
                    let v: f64 = block[(p, q)];
                    l[(involved[p], involved[q])] += v;
                    if p != q {
                        l[(involved[q], involved[p])] += v;
                    }
                }
            }
        }
    }
    Ok(l)
}

/// nu matrix (nu b_i, b_j): species-block-diagonal multiplication operator.
fn assemble_nu(ctx: &LinearizationContext, basis: &GalerkinBasis) -> Result<DMatrix<f64>> {
    let n = basis.len();
    let mut out = DMatrix::zeros(n, n);
    // moderate inner quadrature: nu is smooth and only feeds K = nu - L
    let inner_quad = QuadratureSpec {
        hermite_order: 6,
        laguerre_order: 3,
        sphere_theta: 3,
        sphere_phi: 6,
        legendre_order: 3,
        ..ctx.quad.clone()
    };
    let inner_ctx = LinearizationContext::new(
        ctx.mixture.clone(),
        ctx.model.clone(),
        inner_quad,
    )?;
    let order = basis.order + 1;
    for s in 0..ctx.mixture.len() {
        let idx = basis.species_indices(s);
        let mut vals = vec![0.0; idx.len()];
        let (points, weights) = maxwellian_rule(ctx, s, order, order);
        for (p, w) in points.iter().zip(&weights) {
            let nu_p = nu(&inner_ctx, p)?;
            basis.eval_species(s, &p.xi, p.internal_energy, &mut vals);
            for (a, &gi) in idx.iter().enumerate() {
                for (b, &gj) in idx.iter().enumerate().skip(a) {
                    out[(gi, gj)] += w * nu_p * vals[a] * vals[b];
                }
            }
        }
        for (a, &gi) in idx.iter().enumerate() {
            for &gj in idx.iter().skip(a + 1) {
                out[(gj, gi)] = out[(gi, gj)];
            }
        }
    }
    Ok(out)
}

/// Assembles the full Galerkin system: Gram check, L by the symmetrized
/// Lemma-2 quadrature, nu as a multiplication operator, K = nu - L, and
/// the sorted spectrum of L.
pub fn galerkin_assemble(ctx: &LinearizationContext, basis_order: usize) -> Result<GalerkinSystem> {
    let basis = GalerkinBasis::new(&ctx.mixture, basis_order)?;
    let gram = gram_matrix(ctx, &basis);
    let mut gram_residual = 0.0_f64;
    for i in 0..basis.len() {
        for j in 0..basis.len() {
            let target = if i == j { 1.0 } else { 0.0 };
            gram_residual = gram_residual.max((gram[(i, j)] - target).abs());
        }
    }
    if gram_residual > 1e-8 {
        return Err(KineticError::parameter(format!(
            "basis Gram matrix deviates from identity by {gram_residual:.3e}; basis is not orthonormal"
        )));
    }

    let l_matrix = assemble_l(ctx, &basis, &AssemblyOrders::default())?;
    let nu_matrix = assemble_nu(ctx, &basis)?;
    let k_matrix = &nu_matrix - &l_matrix;

    let sym = l_matrix.clone().symmetric_eigen();
    let mut eigenvalues: Vec<f64> = sym.eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(|a, b| a.partial_cmp(b).unwrap());

    Ok(GalerkinSystem {
        basis,
        nu_matrix,
        k_matrix,
        l_matrix,
        eigenvalues,
        gram_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixture::SpeciesSpec;
    use crate::xsection::CrossSectionModel;
    use approx::assert_abs_diff_eq;

    fn mono_ctx() -> LinearizationContext {
        let mix = MixtureSpec::new(vec![SpeciesSpec::monatomic(1.0, 1.0).unwrap()]).unwrap();
        let model = CrossSectionModel::new(vec![vec![1.0]], 0.0, 0.5).unwrap();
        LinearizationContext::new(mix, model, QuadratureSpec::default()).unwrap()
    }

    #[test]
    fn basis_counts() {
        let mono = MixtureSpec::new(vec![SpeciesSpec::monatomic(1.0, 1.0).unwrap()]).unwrap();
        assert_eq!(GalerkinBasis::new(&mono, 4).unwrap().len(), 35);
        let poly = MixtureSpec::new(vec![SpeciesSpec::polyatomic(1.0, 4.0, 1.0).unwrap()]).unwrap();
        assert_eq!(GalerkinBasis::new(&poly, 4).unwrap().len(), 46);
        assert!(GalerkinBasis::new(&mono, 1).is_err());
    }

    #[test]
    fn gram_is_identity() {
        let mix = MixtureSpec::new(vec![
            SpeciesSpec::monatomic(1.0, 1.0).unwrap(),
            SpeciesSpec::polyatomic(2.0, 4.0, 0.5).unwrap(),
        ])
        .unwrap();
        let model = CrossSectionModel::new(vec![vec![1.0, 1.0], vec![1.0, 1.0]], 0.0, 0.5).unwrap();
        let ctx = LinearizationContext::new(mix.clone(), model, QuadratureSpec::default()).unwrap();
        let basis = GalerkinBasis::new(&mix, 4).unwrap();
        let g = gram_matrix(&ctx, &basis);
        for i in 0..basis.len() {
            for j in 0..basis.len() {
                let target = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(g[(i, j)], target, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn mono_order2_spectrum_structure() {
        let ctx = mono_ctx();
        let sys = galerkin_assemble(&ctx, 2).unwrap();
        assert_eq!(sys.basis.len(), 10);

        // exact symmetry by construction
        for i in 0..10 {
            for j in 0..10 {
                assert_abs_diff_eq!(
                    sys.l_matrix[(i, j)],
                    sys.l_matrix[(j, i)],
                    epsilon = 1e-13 * sys.l_norm()
                );
            }
        }
        // PSD and exactly s+4 = 5 kernel directions
        assert!(sys.eigenvalues[0] >= -1e-8 * sys.l_norm());
        assert_eq!(sys.kernel_count(1e-6), 5);
        assert!(sys.spectral_gap(1e-6) >= 10.0 * 1e-6 * sys.l_norm());

        // K = nu - L by construction
        let diff = &sys.nu_matrix - &sys.k_matrix - &sys.l_matrix;
        assert!(diff.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn invariants_lie_in_kernel() {
        let ctx = mono_ctx();
        let sys = galerkin_assemble(&ctx, 2).unwrap();
        let coords = invariant_coordinates(&ctx, &sys.basis);
        assert_eq!(coords.len(), 5);
        for v in &coords {
            let norm = v.norm();
            assert!(norm > 0.0);
            let residual = (&sys.l_matrix * v).norm();
            assert!(
                residual <= 1e-6 * norm * sys.l_norm(),
                "kernel residual {residual} vs {}",
                norm * sys.l_norm()
            );
        }
    }

    #[test]
    fn eval_one_matches_eval_species() {
        let mix = MixtureSpec::new(vec![SpeciesSpec::polyatomic(1.3, 5.0, 0.7).unwrap()]).unwrap();
        let basis = GalerkinBasis::new(&mix, 4).unwrap();
        let p = PhasePoint::polyatomic(0, Vector3::new(0.4, -0.2, 0.9), 1.7);
        let idx = basis.species_indices(0);
        let mut vals = vec![0.0; idx.len()];
        basis.eval_species(0, &p.xi, p.internal_energy, &mut vals);
        for (slot, &gi) in idx.iter().enumerate() {
            assert_abs_diff_eq!(basis.eval_one(gi, &p), vals[slot], epsilon = 1e-14);
        }
        let other = PhasePoint::monatomic(1, Vector3::zeros());
        let _ = other;
    }
}
