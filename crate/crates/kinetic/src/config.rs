//! Plain key=value run configuration with [section] headers.
//!
//! Sections: `[species.N]` (N = 1..s, in mixture order), `[model]` and
//! `[quadrature]`. Unknown sections or keys are rejected. `#` starts a
//! comment; blank lines are ignored.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{KineticError, Result};
use crate::mixture::{MixtureSpec, SpeciesKind, SpeciesSpec};
use crate::quadrature::QuadratureSpec;
use crate::xsection::CrossSectionModel;

/// Parsed and validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mixture: MixtureSpec,
    pub model: CrossSectionModel,
    pub quad: QuadratureSpec,
}

fn config_err(line_no: usize, msg: impl std::fmt::Display) -> KineticError {
    KineticError::Config(format!("line {line_no}: {msg}"))
}

#[derive(Debug, Default)]
struct Section {
    // key -> (line number, value)
    entries: BTreeMap<String, (usize, String)>,
}

impl Section {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.remove(key)
    }

    fn take_f64(&mut self, key: &str) -> Result<Option<f64>> {
        match self.take(key) {
            None => Ok(None),
            Some((ln, v)) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| config_err(ln, format!("invalid number for `{key}`: {v}"))),
        }
    }

    fn take_usize(&mut self, key: &str) -> Result<Option<usize>> {
        match self.take(key) {
            None => Ok(None),
            Some((ln, v)) => v
                .parse::<usize>()
                .map(Some)
                .map_err(|_| config_err(ln, format!("invalid integer for `{key}`: {v}"))),
        }
    }

    fn require_f64(&mut self, key: &str, section: &str) -> Result<f64> {
        self.take_f64(key)?
            .ok_or_else(|| KineticError::Config(format!("[{section}] is missing key `{key}`")))
    }

    fn reject_unknown(&self, section: &str) -> Result<()> {
        if let Some((key, (ln, _))) = self.entries.iter().next() {
            return Err(config_err(
                *ln,
                format!("unknown key `{key}` in section [{section}]"),
            ));
        }
        Ok(())
    }
}

/// Parses configuration text into a validated [`RunConfig`].
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| config_err(line_no, "unterminated section header"))?
                .trim()
                .to_string();
            if sections.contains_key(&name) {
                return Err(config_err(line_no, format!("duplicate section [{name}]")));
            }
            sections.insert(name.clone(), Section::default());
            current = Some(name);
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| config_err(line_no, format!("expected key = value, got `{line}`")))?;
        let section = current
            .as_ref()
            .ok_or_else(|| config_err(line_no, "key outside of any [section]"))?;
        let sec = sections.get_mut(section).unwrap();
        let key = key.trim().to_string();
        if sec.entries.contains_key(&key) {
            return Err(config_err(line_no, format!("duplicate key `{key}`")));
        }
        sec.entries
            .insert(key, (line_no, value.trim().to_string()));
    }

    // species sections must be [species.1] .. [species.s]
    let mut species = Vec::new();
    for n in 1.. {
        let name = format!("species.{n}");
        let Some(mut sec) = sections.remove(&name) else {
            break;
        };
        let mass = sec.require_f64("mass", &name)?;
        let density = sec.require_f64("density", &name)?;
        let (kind_ln, kind_str) = sec
            .take("kind")
            .ok_or_else(|| KineticError::Config(format!("[{name}] is missing key `kind`")))?;
        let kind = match kind_str.as_str() {
            "monatomic" => SpeciesKind::Monatomic,
            "polyatomic" => SpeciesKind::Polyatomic,
            other => {
                return Err(config_err(
                    kind_ln,
                    format!("kind must be monatomic or polyatomic, got `{other}`"),
                ))
            }
        };
        let dof = sec.take_f64("dof")?;
        sec.reject_unknown(&name)?;
        let spec = match kind {
            SpeciesKind::Monatomic => {
                if let Some(d) = dof {
                    if d != 2.0 {
                        return Err(KineticError::Config(format!(
                            "[{name}]: monatomic species must have dof = 2, got {d}"
                        )));
                    }
                }
                SpeciesSpec::monatomic(mass, density)?
            }
            SpeciesKind::Polyatomic => {
                let d = dof.ok_or_else(|| {
                    KineticError::Config(format!("[{name}] is missing key `dof`"))
                })?;
                SpeciesSpec::polyatomic(mass, d, density)?
            }
        };
        species.push(spec);
    }
    if species.is_empty() {
        return Err(KineticError::Config(
            "config must contain at least [species.1]".into(),
        ));
    }
    let s = species.len();
    let mixture = MixtureSpec::new(species)?;

    // [model]: eta, gamma, c.1 .. c.s (rows of the C matrix)
    let mut model_sec = sections
        .remove("model")
        .ok_or_else(|| KineticError::Config("config must contain a [model] section".into()))?;
    let eta = model_sec.require_f64("eta", "model")?;
    let gamma = model_sec.take_f64("gamma")?.unwrap_or(0.5);
    let mut c = Vec::with_capacity(s);
    for n in 1..=s {
        let key = format!("c.{n}");
        let (ln, row) = model_sec
            .take(&key)
            .ok_or_else(|| KineticError::Config(format!("[model] is missing key `{key}`")))?;
        let parsed: Vec<f64> = row
            .split_whitespace()
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| config_err(ln, format!("invalid number in `{key}`: {v}")))
            })
            .collect::<Result<_>>()?;
        if parsed.len() != s {
            return Err(config_err(
                ln,
                format!("`{key}` must have {s} entries, got {}", parsed.len()),
            ));
        }
        c.push(parsed);
    }
    model_sec.reject_unknown("model")?;
    let model = CrossSectionModel::new(c, eta, gamma)?;

    // [quadrature]: optional overrides of the defaults
    let mut quad = QuadratureSpec::default();
    if let Some(mut sec) = sections.remove("quadrature") {
        if let Some(v) = sec.take_usize("hermite_order")? {
            quad.hermite_order = v;
        }
        if let Some(v) = sec.take_usize("laguerre_order")? {
            quad.laguerre_order = v;
        }
        if let Some(v) = sec.take_usize("sphere_theta")? {
            quad.sphere_theta = v;
        }
        if let Some(v) = sec.take_usize("sphere_phi")? {
            quad.sphere_phi = v;
        }
        if let Some(v) = sec.take_usize("legendre_order")? {
            quad.legendre_order = v;
        }
        if let Some(v) = sec.take_f64("velocity_scale")? {
            quad.velocity_scale = v;
        }
        if let Some(v) = sec.take_f64("energy_scale")? {
            quad.energy_scale = v;
        }
        if let Some((ln, v)) = sec.take("mc_seed") {
            quad.mc_seed = v
                .parse::<u64>()
                .map_err(|_| config_err(ln, format!("invalid integer for `mc_seed`: {v}")))?;
        }
        if let Some(v) = sec.take_usize("mc_samples")? {
            quad.mc_samples = v;
        }
        sec.reject_unknown("quadrature")?;
        quad.validate()?;
    }

    if let Some((name, sec)) = sections.iter().next() {
        let ln = sec.entries.values().map(|(l, _)| *l).min().unwrap_or(0);
        return Err(KineticError::Config(format!(
            "unknown section [{name}] (near line {ln})"
        )));
    }

    Ok(RunConfig {
        mixture,
        model,
        quad,
    })
}

/// Reads and parses a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        KineticError::Config(format!("cannot read {}: {e}", path.display()))
    })?;
    parse_config(&text)
}
