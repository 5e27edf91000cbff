//! TOML scenario files.

use std::path::{Path, PathBuf};

use mlrho::evolution::check_horizon_for;
use mlrho::initial_data::{coulomb_soliton, plane_wave};
use mlrho::io::{read_snapshot, read_weight_table};
use mlrho::source_operator::{check_support, discretize_all};
use mlrho::*;
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_coupling")]
    pub coupling: Coupling,
    pub grid: GridSection,
    #[serde(default)]
    pub weight: WeightSection,
    #[serde(default)]
    pub particles: Vec<ParticleSection>,
    #[serde(default)]
    pub fields: FieldSection,
    #[serde(default)]
    pub evolve: EvolveSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum Coupling {
    Preset(String),
    Matrix(Vec<Vec<f64>>),
}

fn default_coupling() -> Coupling {
    Coupling::Preset("ML".into())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
    pub length: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSection {
    #[serde(default = "default_weight")]
    pub kind: String,
    /// Binary table for `kind = "tabulated"`.
    pub file: Option<PathBuf>,
}

fn default_weight() -> String {
    "constant".into()
}

impl Default for WeightSection {
    fn default() -> Self {
        WeightSection {
            kind: default_weight(),
            file: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleSection {
    pub mass: f64,
    pub charge: f64,
    pub radius: f64,
    #[serde(default)]
    pub q: [f64; 3],
    #[serde(default)]
    pub p: [f64; 3],
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recipe {
    #[default]
    Soliton,
    SolitonPlaneWave,
    Files,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneWaveSection {
    pub mode: [i64; 3],
    pub polarization: [f64; 3],
    pub amplitude: f64,
    /// Field slot the wave is added to.
    #[serde(default)]
    pub slot: usize,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    #[serde(default)]
    pub recipe: Recipe,
    pub plane_wave: Option<PlaneWaveSection>,
    /// One snapshot per charge for `recipe = "files"`.
    #[serde(default)]
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSection {
    #[serde(default = "default_scheme")]
    pub scheme: String,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_duration")]
    pub duration: f64,
    #[serde(default = "default_tol")]
    pub picard_tol: f64,
    #[serde(default = "default_max_iter")]
    pub picard_max_iter: usize,
    #[serde(default = "default_nodes")]
    pub quad_nodes: usize,
    #[serde(default = "default_true")]
    pub contraction_guard: bool,
    #[serde(default = "default_dt_min")]
    pub dt_min: f64,
}

fn default_scheme() -> String {
    "picard".into()
}
fn default_dt() -> f64 {
    0.01
}
fn default_duration() -> f64 {
    1.0
}
fn default_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    60
}
fn default_nodes() -> usize {
    4
}
fn default_true() -> bool {
    true
}
fn default_dt_min() -> f64 {
    1e-6
}

impl Default for EvolveSection {
    fn default() -> Self {
        EvolveSection {
            scheme: default_scheme(),
            dt: default_dt(),
            duration: default_duration(),
            picard_tol: default_tol(),
            picard_max_iter: default_max_iter(),
            quad_nodes: default_nodes(),
            contraction_guard: true,
            dt_min: default_dt_min(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// Accepted steps between trajectory and diagnostics rows.
    #[serde(default = "default_every")]
    pub every: usize,
    /// Output rows between field snapshots; 0 disables snapshots.
    #[serde(default)]
    pub snapshot_every: usize,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_every() -> usize {
    1
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: default_dir(),
            every: default_every(),
            snapshot_every: 0,
        }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Default)]
pub struct Overrides {
    pub scheme: Option<String>,
    pub dt: Option<f64>,
    pub duration: Option<f64>,
    pub out_dir: Option<PathBuf>,
}

/// Everything needed to start a run.
pub struct Prepared {
    pub phi: PhaseSpacePoint,
    pub model: Model,
    pub cfg: EvolveConfig,
    pub out_dir: PathBuf,
    pub snapshot_every: usize,
    pub plane_wave_corrected: bool,
}

fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| config(e.message().replace('\n', " ")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn apply(&mut self, o: Overrides) {
        if let Some(s) = o.scheme {
            self.evolve.scheme = s;
        }
        if let Some(dt) = o.dt {
            self.evolve.dt = dt;
        }
        if let Some(t) = o.duration {
            self.evolve.duration = t;
        }
        if let Some(d) = o.out_dir {
            self.output.dir = d;
        }
    }

    pub fn evolve_config(&self) -> Result<EvolveConfig> {
        let cfg = EvolveConfig {
            scheme: self.evolve.scheme.parse()?,
            dt: self.evolve.dt,
            duration: self.evolve.duration,
            picard_tol: self.evolve.picard_tol,
            picard_max_iter: self.evolve.picard_max_iter,
            quad_nodes: self.evolve.quad_nodes,
            contraction_guard: self.evolve.contraction_guard,
            dt_min: self.evolve.dt_min,
            output_every: self.output.every,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks that need no grid allocation.
    pub fn validate(&self) -> Result<EvolveConfig> {
        let n = self.grid.n;
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("n must be a power of two >= 8, got {n}")));
        }
        if !(self.grid.length > 0.0 && self.grid.length.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "length must be positive, got {}",
                self.grid.length
            )));
        }
        let cfg = self.evolve_config()?;
        let dx = self.grid.length / n as f64;
        for (i, p) in self.particles.iter().enumerate() {
            if p.mass == 0.0 || !p.mass.is_finite() {
                return Err(Error::Domain(format!("particle {i}: mass must be nonzero and finite")));
            }
            if !(p.charge.is_finite() && p.q.iter().chain(&p.p).all(|v| v.is_finite())) {
                return Err(Error::Domain(format!("particle {i}: non-finite entry")));
            }
            check_support(p.radius, dx, self.grid.length)?;
        }
        let r_max = self.particles.iter().map(|p| p.radius).fold(0.0, f64::max);
        check_horizon_for(self.grid.length, r_max, cfg.duration.abs(), cfg.dt)?;
        match &self.coupling {
            Coupling::Preset(name) => {
                CouplingMatrix::from_preset(name, self.particles.len())?;
            }
            Coupling::Matrix(rows) => {
                if rows.len() != self.particles.len() {
                    return Err(config(format!(
                        "coupling matrix has {} rows for {} particles",
                        rows.len(),
                        self.particles.len()
                    )));
                }
            }
        }
        self.weight.kind.parse::<WeightKind>()?;
        match self.fields.recipe {
            Recipe::SolitonPlaneWave => match &self.fields.plane_wave {
                Some(pw) if pw.slot < self.particles.len().max(1) => {}
                Some(pw) => return Err(config(format!("plane wave slot {} has no field", pw.slot))),
                None => return Err(config("recipe soliton_plane_wave needs a [fields.plane_wave] table")),
            },
            Recipe::Files => {
                if self.fields.files.len() != self.particles.len() {
                    return Err(config(format!(
                        "recipe files needs one snapshot per particle, got {}",
                        self.fields.files.len()
                    )));
                }
            }
            Recipe::Soliton => {}
        }
        Ok(cfg)
    }

    /// Validate, then build the grid, initial state and model. Relative input
    /// paths resolve against `base`; the output directory is taken as given.
    pub fn prepare(&self, base: &Path) -> Result<Prepared> {
        let cfg = self.validate()?;
        let grid = Grid::new(self.grid.n, self.grid.length)?;
        let shapes: Vec<ChargeShape> = self
            .particles
            .iter()
            .map(|p| ChargeShape::new(p.radius, p.charge))
            .collect();
        let shapes = discretize_all(&shapes, &grid)?;
        let particles = self
            .particles
            .iter()
            .map(|p| ParticleState::new(p.q, p.p, p.mass))
            .collect::<Result<Vec<_>>>()?;
        let mut corrected = false;
        let fields = match self.fields.recipe {
            Recipe::Files => self
                .fields
                .files
                .iter()
                .map(|f| {
                    let snap = read_snapshot(&base.join(f))?;
                    if snap.grid != grid {
                        return Err(Error::Structure(format!(
                            "snapshot {} uses a different grid",
                            f.display()
                        )));
                    }
                    Ok(snap.fields)
                })
                .collect::<Result<Vec<_>>>()?,
            Recipe::Soliton | Recipe::SolitonPlaneWave => {
                let mut fields = particles
                    .iter()
                    .zip(&shapes)
                    .map(|(p, s)| coulomb_soliton(p, s))
                    .collect::<Result<Vec<_>>>()?;
                if let (Recipe::SolitonPlaneWave, Some(pw)) = (&self.fields.recipe, &self.fields.plane_wave) {
                    let wave = plane_wave(&grid, pw.mode, pw.polarization, pw.amplitude)?;
                    corrected = wave.corrected;
                    if let Some(f) = fields.get_mut(pw.slot) {
                        *f = f.plus_scaled(1.0, &wave.fields);
                    }
                }
                fields
            }
        };
        let weight = match self.weight.kind.parse::<WeightKind>()? {
            WeightKind::Constant => WeightSource::Constant,
            WeightKind::InverseQuadratic => WeightSource::InverseQuadratic,
            WeightKind::Tabulated => {
                let file = self
                    .weight
                    .file
                    .as_ref()
                    .ok_or_else(|| config("tabulated weight needs `file`"))?;
                let loaded = read_weight_table(&base.join(file))?;
                WeightSource::Tabulated {
                    table: loaded.table,
                    c_w: loaded.c_w,
                    p_w: loaded.p_w,
                }
            }
        };
        let weight = make_weight(&weight, &grid)?;
        let coupling = match &self.coupling {
            Coupling::Preset(name) => CouplingMatrix::from_preset(name, particles.len())?,
            Coupling::Matrix(rows) => CouplingMatrix::custom(rows.clone())?,
        };
        let phi = PhaseSpacePoint::new(grid, particles, fields)?;
        let model = Model::new(shapes, coupling, weight)?;
        model.check(&phi)?;
        Ok(Prepared {
            phi,
            model,
            cfg,
            out_dir: self.output.dir.clone(),
            snapshot_every: self.output.snapshot_every,
            plane_wave_corrected: corrected,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[grid]
n = 16
length = 16.0

[[particles]]
mass = 1.0
charge = 1.0
radius = 2.0
"#;

    #[test]
    fn minimal_parses_with_defaults() {
        let s = Scenario::parse(MINIMAL).unwrap();
        assert_eq!(s.particles.len(), 1);
        assert_eq!(s.evolve.dt, 0.01);
        assert!(matches!(s.coupling, Coupling::Preset(ref p) if p == "ML"));
        s.validate().unwrap();
    }

    #[test]
    fn unknown_key_is_named() {
        let err = Scenario::parse(&format!("copling = \"ML\"\n{MINIMAL}")).unwrap_err();
        assert_eq!(err.code(), "E_CONFIG");
        assert!(err.to_string().contains("copling"), "{err}");
    }

    #[test]
    fn horizon_reports_safe_duration() {
        let mut s = Scenario::parse(MINIMAL).unwrap();
        s.evolve.duration = 3.0;
        let err = s.validate().unwrap_err();
        assert_eq!(err.code(), "E_HORIZON");
    }

    #[test]
    fn oversized_support_is_rejected() {
        let s = Scenario::parse(&MINIMAL.replace("radius = 2.0", "radius = 5.0")).unwrap();
        assert_eq!(s.validate().unwrap_err().code(), "E_GEOMETRY");
    }
}
