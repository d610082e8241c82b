//! Verification CLI: `verify` runs the invariant suites, `nu-table` emits a
//! collision-frequency scan, `spectrum` assembles the Galerkin system and
//! reports the spectrum of L.
//!
//! Exit codes: 0 = all checks pass, 1 = an assertion failed, 2 = usage or
//! configuration error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use kinetic::config::{load_config, RunConfig};
use kinetic::galerkin::{galerkin_assemble, invariant_coordinates};
use kinetic::geometry::{conservation_residuals, random_event};
use kinetic::linearized::{
    hs_norm_k1, nu, nu_bound_scan, LinearizationContext, NuGrid,
};
use kinetic::mixture::{
    collision_invariants, maxwellian, DistributionFunction, PhasePoint,
};
use kinetic::operator::{
    entropy_production, q_point, weak_form, weak_form_many, weak_form_symmetrized,
};
use kinetic::quadrature::QuadratureSpec;
use kinetic::xsection::{i_power_product, microreversibility_residual, sigma};
use kinetic::KineticError;

#[derive(Parser)]
#[command(name = "kinetic", about = "Boltzmann collision operator verification tool")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the verification suites and write report.txt plus per-suite CSV.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (created if missing).
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Suites to run (default: all). Known names: conservation,
        /// microreversibility, equilibrium, weak-form, entropy, galerkin,
        /// nu-bounds, hs.
        #[arg(long = "suite")]
        suites: Vec<String>,
    },
    /// Scan the collision frequency over a (|xi|, I) grid and write CSV.
    NuTable {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long = "grid-xi-max", default_value_t = 8.0)]
        grid_xi_max: f64,
        #[arg(long = "grid-i-max", default_value_t = 16.0)]
        grid_i_max: f64,
    },
    /// Assemble the Galerkin system and report the spectrum of L.
    Spectrum {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long = "basis-order", default_value_t = 4)]
        basis_order: usize,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                KineticError::Config(_) | KineticError::Parameter(_) => 2,
                _ => 1,
            }
        }
    };
    std::process::exit(code);
}

fn execute(cli: Cli) -> kinetic::Result<i32> {
    match cli.command {
        Command::Verify {
            config,
            out,
            suites,
        } => cmd_verify(&config, &out, &suites),
        Command::NuTable {
            config,
            out,
            grid_xi_max,
            grid_i_max,
        } => cmd_nu_table(&config, &out, grid_xi_max, grid_i_max),
        Command::Spectrum {
            config,
            out,
            basis_order,
        } => cmd_spectrum(&config, &out, basis_order),
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> kinetic::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}

/// Full-precision scientific notation (17 significant digits).
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Reduced deterministic quadrature for scan-style outputs: nu is smooth,
/// and the table is for shape inspection rather than tight tolerances.
fn scan_quad(base: &QuadratureSpec) -> QuadratureSpec {
    QuadratureSpec {
        hermite_order: 6,
        laguerre_order: 3,
        sphere_theta: 3,
        sphere_phi: 6,
        legendre_order: 6,
        ..base.clone()
    }
}

struct Suite {
    pass: bool,
    lines: Vec<String>,
    csv: Option<(&'static str, String)>,
}

fn cmd_verify(config: &Path, out: &Path, selected: &[String]) -> kinetic::Result<i32> {
    let cfg = load_config(config)?;
    const ALL: &[&str] = &[
        "conservation",
        "microreversibility",
        "equilibrium",
        "weak-form",
        "entropy",
        "galerkin",
        "nu-bounds",
        "hs",
    ];
    let run_list: Vec<&str> = if selected.is_empty() {
        ALL.to_vec()
    } else {
        let mut list = Vec::new();
        for s in selected {
            match ALL.iter().find(|n| *n == s) {
                Some(n) => list.push(*n),
                None => {
                    return Err(KineticError::Config(format!(
                        "unknown suite `{s}`; known suites: {}",
                        ALL.join(", ")
                    )))
                }
            }
        }
        list
    };

    let mut report = String::new();
    let mut all_pass = true;
    for name in run_list {
        let suite = match name {
            "conservation" => suite_conservation(&cfg)?,
            "microreversibility" => suite_microreversibility(&cfg)?,
            "equilibrium" => suite_equilibrium(&cfg)?,
            "weak-form" => suite_weak_form(&cfg)?,
            "entropy" => suite_entropy(&cfg)?,
            "galerkin" => suite_galerkin(&cfg)?,
            "nu-bounds" => suite_nu_bounds(&cfg)?,
            "hs" => suite_hs(&cfg)?,
            _ => unreachable!(),
        };
        let status = if suite.pass { "PASS" } else { "FAIL" };
        let header = format!("suite {name}: {status}");
        println!("{header}");
        writeln!(report, "{header}").unwrap();
        for line in &suite.lines {
            println!("  {line}");
            writeln!(report, "  {line}").unwrap();
        }
        if let Some((file, contents)) = suite.csv {
            write_file(out, file, &contents)?;
        }
        all_pass &= suite.pass;
    }
    writeln!(
        report,
        "overall: {}",
        if all_pass { "PASS" } else { "FAIL" }
    )
    .unwrap();
    write_file(out, "report.txt", &report)?;
    Ok(if all_pass { 0 } else { 1 })
}

fn suite_conservation(cfg: &RunConfig) -> kinetic::Result<Suite> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.quad.mc_seed);
    let mut csv = String::from("species_a,species_b,max_momentum_residual,max_energy_residual\n");
    let mut worst = 0.0_f64;
    for a in 0..cfg.mixture.len() {
        for b in 0..cfg.mixture.len() {
            let mut max_p = 0.0_f64;
            let mut max_e = 0.0_f64;
            for _ in 0..10_000 {
                let ev = random_event(&cfg.mixture, a, b, 3.0, 4.0, &mut rng)?;
                let (p, e) = conservation_residuals(&ev);
                max_p = max_p.max(p);
                max_e = max_e.max(e);
            }
            writeln!(csv, "{a},{b},{},{}", num(max_p), num(max_e)).unwrap();
            worst = worst.max(max_p).max(max_e);
        }
    }
    Ok(Suite {
        pass: worst <= 1e-12,
        lines: vec![format!(
            "max momentum/energy residual over 10000 events per pair: {:.3e} (tol 1e-12)",
            worst
        )],
        csv: Some(("conservation.csv", csv)),
    })
}

fn suite_microreversibility(cfg: &RunConfig) -> kinetic::Result<Suite> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.quad.mc_seed.wrapping_add(1));
    let mut worst = 0.0_f64;
    for a in 0..cfg.mixture.len() {
        for b in 0..cfg.mixture.len() {
            for _ in 0..2_000 {
                let ev = random_event(&cfg.mixture, a, b, 3.0, 4.0, &mut rng)?;
                let g = ev.g.norm();
                if g == 0.0 || ev.g_prime_norm == 0.0 {
                    continue;
                }
                let residual = microreversibility_residual(&cfg.model, &ev)?;
                let scale = i_power_product(
                    &ev,
                    ev.pair.a.internal_energy,
                    ev.pair.b.internal_energy,
                ) * g
                    * g
                    * sigma(&cfg.model, &ev)?;
                if scale > 0.0 {
                    worst = worst.max(residual / scale);
                }
            }
        }
    }
    Ok(Suite {
        pass: worst <= 1e-12,
        lines: vec![format!(
            "max relative (mr) residual over 2000 events per pair: {:.3e} (tol 1e-12)",
            worst
        )],
        csv: None,
    })
}

fn random_points(cfg: &RunConfig, rng: &mut ChaCha8Rng, per_species: usize) -> Vec<PhasePoint> {
    let mut pts = Vec::new();
    for (s, spec) in cfg.mixture.species().iter().enumerate() {
        for _ in 0..per_species {
            let xi = Vector3::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            let i = if spec.is_polyatomic() {
                rng.gen_range(0.05..3.0)
            } else {
                0.0
            };
            pts.push(PhasePoint {
                species: s,
                xi,
                internal_energy: i,
            });
        }
    }
    pts
}

fn suite_equilibrium(cfg: &RunConfig) -> kinetic::Result<Suite> {
    let n: Vec<f64> = cfg
        .mixture
        .species()
        .iter()
        .map(|s| s.number_density)
        .collect();
    let m = maxwellian(&cfg.mixture, &n, &Vector3::new(0.2, -0.1, 0.0), 1.3)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.quad.mc_seed.wrapping_add(2));
    let mut worst = 0.0_f64;
    let mut csv = String::from("species,xi_x,xi_y,xi_z,internal_energy,q_total,loss,relative\n");
    for p in random_points(cfg, &mut rng, 5) {
        let q = q_point(&m, &p, &cfg.mixture, &cfg.model, &cfg.quad)?;
        let rel = q.total.abs() / q.loss_magnitude.max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            p.species,
            num(p.xi.x),
            num(p.xi.y),
            num(p.xi.z),
            num(p.internal_energy),
            num(q.total),
            num(q.loss_magnitude),
            num(rel)
        )
        .unwrap();
    }
    Ok(Suite {
        pass: worst <= 1e-6,
        lines: vec![format!(
            "max |Q(M,M)| / loss over 5 points per species: {:.3e} (tol 1e-6)",
            worst
        )],
        csv: Some(("equilibrium.csv", csv)),
    })
}

/// Gentle two-Maxwellian test distribution shared by the weak-form and
/// entropy suites.
fn test_distribution(cfg: &RunConfig, shift: f64) -> kinetic::Result<DistributionFunction> {
    let n: Vec<f64> = cfg
        .mixture
        .species()
        .iter()
        .map(|s| 0.5 * s.number_density)
        .collect();
    let a = maxwellian(&cfg.mixture, &n, &Vector3::new(0.3 + shift, 0.0, 0.0), 1.0)?;
    let b = maxwellian(&cfg.mixture, &n, &Vector3::new(-0.2, 0.1 * shift, 0.0), 1.0)?;
    Ok(a.add(&b))
}

/// Small rule for the weak-form and entropy suites: their checks are either
/// pointwise sign-definite or judged against the rule's own error estimate,
/// so a fine rule adds cost without discriminating power.
fn verify_quad(cfg: &RunConfig) -> QuadratureSpec {
    QuadratureSpec {
        hermite_order: 5,
        laguerre_order: 2,
        sphere_theta: 3,
        sphere_phi: 6,
        legendre_order: 2,
        ..cfg.quad.clone()
    }
}

fn suite_weak_form(cfg: &RunConfig) -> kinetic::Result<Suite> {
    let quad = verify_quad(cfg);
    let mut lines = Vec::new();
    let mut pass = true;

    // path agreement on two test pairs
    let mut worst_gap = 0.0_f64;
    for shift in [0.0, 0.4] {
        let f = test_distribution(cfg, shift)?;
        let g = test_distribution(cfg, shift + 0.7)?;
        let direct = weak_form(&f, &g, &cfg.mixture, &cfg.model, &quad)?;
        let sym = weak_form_symmetrized(&f, &g, &cfg.mixture, &cfg.model, &quad)?;
        let gap = (direct.value - sym.value).abs();
        let budget = 3.0 * (direct.error + sym.error) + 1e-10;
        worst_gap = worst_gap.max(gap / budget);
        if gap > budget {
            pass = false;
        }
    }
    lines.push(format!(
        "weak_form vs symmetrized: worst gap/budget = {:.3e} (must be <= 1)",
        worst_gap
    ));

    // invariants annihilate the weak form up to quadrature resolution
    let f = test_distribution(cfg, 0.0)?;
    let invariants = collision_invariants(&cfg.mixture);
    let defects = weak_form_many(&f, &invariants, &cfg.mixture, &cfg.model, &quad)?;
    let scale = weak_form(&f, &invariants[invariants.len() - 1], &cfg.mixture, &cfg.model, &quad)?
        .error
        .max(1e-12);
    let worst = defects.iter().fold(0.0_f64, |a, d| a.max(d.abs()));
    let tol = (10.0 * scale).max(1e-4);
    if worst > tol {
        pass = false;
    }
    lines.push(format!(
        "max invariant defect: {:.3e} (tol {:.3e} at this rule)",
        worst, tol
    ));

    Ok(Suite {
        pass,
        lines,
        csv: None,
    })
}

fn suite_entropy(cfg: &RunConfig) -> kinetic::Result<Suite> {
    let quad = verify_quad(cfg);
    let mut worst = f64::NEG_INFINITY;
    for shift in [0.0, 0.3, 0.8] {
        let f = test_distribution(cfg, shift)?;
        let w = entropy_production(&f, &cfg.mixture, &cfg.model, &quad)?;
        worst = worst.max(w.value);
    }
    let n: Vec<f64> = cfg
        .mixture
        .species()
        .iter()
        .map(|s| s.number_density)
        .collect();
    let m = maxwellian(&cfg.mixture, &n, &Vector3::zeros(), 1.0)?;
    let at_eq = entropy_production(&m, &cfg.mixture, &cfg.model, &quad)?;
    let pass = worst <= 1e-8 && at_eq.value.abs() <= 1e-8;
    Ok(Suite {
        pass,
        lines: vec![
            format!("max entropy production over test states: {:.3e} (tol +1e-8)", worst),
            format!("|W[M]| = {:.3e} (tol 1e-8)", at_eq.value.abs()),
        ],
        csv: None,
    })
}

fn suite_galerkin(cfg: &RunConfig) -> kinetic::Result<Suite> {
    let ctx = LinearizationContext::new(cfg.mixture.clone(), cfg.model.clone(), cfg.quad.clone())?;
    let sys = galerkin_assemble(&ctx, 2)?;
    let norm = sys.l_norm();
    let mut sym = 0.0_f64;
    for i in 0..sys.basis.len() {
        for j in 0..sys.basis.len() {
            sym = sym.max((sys.l_matrix[(i, j)] - sys.l_matrix[(j, i)]).abs());
        }
    }
    let min_eig = sys.eigenvalues[0];
    let expected_kernel = cfg.mixture.len() + 4;
    let kernel = sys.kernel_count(1e-6);
    let gap = sys.spectral_gap(1e-6);
    let coords = invariant_coordinates(&ctx, &sys.basis);
    let worst_res = coords
        .iter()
        .map(|v| (&sys.l_matrix * v).norm() / (v.norm() * norm))
        .fold(0.0_f64, f64::max);
    let pass = sym <= 1e-8 * norm
        && min_eig >= -1e-8 * norm
        && kernel == expected_kernel
        && gap >= 10.0 * 1e-6 * norm
        && worst_res <= 1e-6;
    Ok(Suite {
        pass,
        lines: vec![
            format!("basis size {} (order 2), ||L|| = {:.4e}", sys.basis.len(), norm),
            format!("symmetry residual {:.3e}, min eigenvalue {:.3e}", sym, min_eig),
            format!(
                "kernel eigenvalues below 1e-6 ||L||: {} (expected {}), gap {:.4e}",
                kernel, expected_kernel, gap
            ),
            format!("max invariant kernel residual: {:.3e} (tol 1e-6)", worst_res),
        ],
        csv: None,
    })
}

fn nu_csv(report: &kinetic::linearized::NuBoundReport) -> String {
    let mut csv = String::from("species,xi_norm,internal_energy,nu,ratio\n");
    for r in &report.rows {
        writeln!(
            csv,
            "{},{},{},{},{}",
            r.species,
            num(r.xi_norm),
            num(r.internal_energy),
            num(r.nu),
            num(r.ratio)
        )
        .unwrap();
    }
    csv
}

fn suite_nu_bounds(cfg: &RunConfig) -> kinetic::Result<Suite> {
    let ctx = LinearizationContext::new(
        cfg.mixture.clone(),
        cfg.model.clone(),
        scan_quad(&cfg.quad),
    )?;
    // constants over the required domain; flatness of the ratio is a
    // far-field property, measured on a grid extended to |xi| = 20
    let grid_req = NuGrid::regular(8.0, 8, 16.0, 4)?;
    let grid_ext = NuGrid::regular(20.0, 10, 16.0, 4)?;
    let req = nu_bound_scan(&ctx, &grid_req)?;
    let ext = nu_bound_scan(&ctx, &grid_ext)?;
    // monotone growth along I = 0 beyond |xi| = 2
    let mut monotone = true;
    for s in 0..cfg.mixture.len() {
        let mut last: Option<f64> = None;
        for r in req.rows.iter().filter(|r| {
            r.species == s && r.internal_energy == 0.0 && r.xi_norm >= 2.0
        }) {
            if let Some(prev) = last {
                if r.nu <= prev {
                    monotone = false;
                }
            }
            last = Some(r.nu);
        }
    }
    let pass = req.max_species_ratio <= 10.0 && ext.max_outer_slope <= 0.05 && monotone;
    Ok(Suite {
        pass,
        lines: vec![
            format!(
                "ratio nu/(1+|xi|+sqrt I)^{:.2}: c in [{:.4e}, {:.4e}], \
                 worst per-species c_max/c_min = {:.3}",
                req.exponent,
                req.c_min,
                req.c_max,
                req.max_species_ratio
            ),
            format!(
                "far-field flatness {:.3e} (tol 0.05), monotone beyond |xi|=2: {}",
                ext.max_outer_slope, monotone
            ),
        ],
        csv: Some(("nu_bounds.csv", nu_csv(&req))),
    })
}

fn suite_hs(cfg: &RunConfig) -> kinetic::Result<Suite> {
    let ctx = LinearizationContext::new(cfg.mixture.clone(), cfg.model.clone(), cfg.quad.clone())?;
    let mut csv = String::from("species_a,species_b,truncation,hs_norm_squared\n");
    let mut worst_increment = 0.0_f64;
    for a in 0..cfg.mixture.len() {
        for b in 0..cfg.mixture.len() {
            // the slowest truncation tail is the internal-energy one,
            // ~ I exp(-I); beyond I = 16 it drops below 1e-3 relative
            let mut values = Vec::new();
            for t in [8.0, 16.0, 32.0] {
                let v = hs_norm_k1(&ctx, a, b, t)?;
                writeln!(csv, "{a},{b},{},{}", num(t), num(v)).unwrap();
                values.push(v);
            }
            let increment = (values[2] - values[1]) / values[2].max(f64::MIN_POSITIVE);
            worst_increment = worst_increment.max(increment);
        }
    }
    Ok(Suite {
        pass: worst_increment <= 1e-3,
        lines: vec![format!(
            "worst relative increment 16 -> 32 of the squared HS norm: {:.3e} (tol 1e-3)",
            worst_increment
        )],
        csv: Some(("hs_norm.csv", csv)),
    })
}

fn cmd_nu_table(config: &Path, out: &Path, xi_max: f64, i_max: f64) -> kinetic::Result<i32> {
    let cfg = load_config(config)?;
    if !(xi_max > 0.0) || !(i_max > 0.0) {
        return Err(KineticError::Config(
            "grid bounds must be positive".into(),
        ));
    }
    let ctx = LinearizationContext::new(
        cfg.mixture.clone(),
        cfg.model.clone(),
        scan_quad(&cfg.quad),
    )?;
    let xi_steps = (xi_max / 0.25).round().max(1.0) as usize;
    let i_steps = (i_max / 1.0).round().max(1.0) as usize;
    let exponent = 1.0 - cfg.model.eta;
    let mut csv = String::from("species,xi_norm,internal_energy,nu,ratio\n");
    for (s, spec) in cfg.mixture.species().iter().enumerate() {
        for kx in 0..=xi_steps {
            let x = xi_max * kx as f64 / xi_steps as f64;
            // monatomic nu is independent of I; evaluate once per |xi|
            let mut nu_mono = None;
            for ki in 0..=i_steps {
                let i = i_max * ki as f64 / i_steps as f64;
                let v = if spec.is_polyatomic() {
                    nu(
                        &ctx,
                        &PhasePoint {
                            species: s,
                            xi: Vector3::new(x, 0.0, 0.0),
                            internal_energy: i,
                        },
                    )?
                } else {
                    match nu_mono {
                        Some(v) => v,
                        None => {
                            let v = nu(&ctx, &PhasePoint::monatomic(s, Vector3::new(x, 0.0, 0.0)))?;
                            nu_mono = Some(v);
                            v
                        }
                    }
                };
                let weight = if spec.is_polyatomic() {
                    (1.0 + x + i.sqrt()).powf(exponent)
                } else {
                    (1.0 + x).powf(exponent)
                };
                writeln!(
                    csv,
                    "{s},{},{},{},{}",
                    num(x),
                    num(i),
                    num(v),
                    num(v / weight)
                )
                .unwrap();
            }
        }
    }
    write_file(out, "nu_table.csv", &csv)?;
    println!(
        "wrote nu_table.csv: {} rows",
        cfg.mixture.len() * (xi_steps + 1) * (i_steps + 1)
    );
    Ok(0)
}

fn cmd_spectrum(config: &Path, out: &Path, basis_order: usize) -> kinetic::Result<i32> {
    let cfg = load_config(config)?;
    let ctx = LinearizationContext::new(cfg.mixture.clone(), cfg.model.clone(), cfg.quad.clone())?;
    let sys = galerkin_assemble(&ctx, basis_order)?;
    let norm = sys.l_norm();

    let mut csv = String::from("index,eigenvalue\n");
    for (k, e) in sys.eigenvalues.iter().enumerate() {
        writeln!(csv, "{k},{}", num(*e)).unwrap();
    }
    write_file(out, "eigenvalues.csv", &csv)?;

    let mut sym = 0.0_f64;
    for i in 0..sys.basis.len() {
        for j in 0..sys.basis.len() {
            sym = sym.max((sys.l_matrix[(i, j)] - sys.l_matrix[(j, i)]).abs());
        }
    }
    let expected_kernel = cfg.mixture.len() + 4;
    let kernel = sys.kernel_count(1e-6);
    let coords = invariant_coordinates(&ctx, &sys.basis);
    let worst_res = coords
        .iter()
        .map(|v| (&sys.l_matrix * v).norm() / (v.norm() * norm))
        .fold(0.0_f64, f64::max);

    let mut summary = String::new();
    writeln!(summary, "basis order: {} ({} functions)", basis_order, sys.basis.len()).unwrap();
    writeln!(summary, "||L|| = {}", num(norm)).unwrap();
    writeln!(summary, "symmetry residual = {}", num(sym)).unwrap();
    writeln!(summary, "min eigenvalue = {}", num(sys.eigenvalues[0])).unwrap();
    writeln!(
        summary,
        "kernel eigenvalues below 1e-6 ||L||: {kernel} (expected {expected_kernel})"
    )
    .unwrap();
    writeln!(summary, "spectral gap = {}", num(sys.spectral_gap(1e-6))).unwrap();
    writeln!(summary, "max invariant kernel residual = {}", num(worst_res)).unwrap();
    write_file(out, "spectrum_summary.txt", &summary)?;
    print!("{summary}");

    let pass = sym <= 1e-8 * norm
        && sys.eigenvalues[0] >= -1e-8 * norm
        && kernel == expected_kernel
        && worst_res <= 1e-6;
    Ok(if pass { 0 } else { 1 })
}
