//! Run configuration: a strict TOML schema with one section per module.
//!
//! Unknown keys anywhere are rejected so that a typo in a study never
//! silently falls back to a default.

use mdfrac_core::models::flow::Scheme;
use mdfrac_core::{Error, Result};
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Flow,
    Transport,
    Poromech,
    Sneddon,
    Mandel,
    Benchmark,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Flow => "flow",
            ModelKind::Transport => "transport",
            ModelKind::Poromech => "poromech",
            ModelKind::Sneddon => "sneddon",
            ModelKind::Mandel => "mandel",
            ModelKind::Benchmark => "benchmark",
        }
    }

    /// Sections this model reads.
    fn sections(self) -> &'static [&'static str] {
        match self {
            ModelKind::Flow => &["mesh", "flow", "boundary"],
            ModelKind::Transport => &["mesh", "flow", "boundary", "transport"],
            ModelKind::Poromech => &["mesh", "flow", "poromech"],
            ModelKind::Sneddon => &["mesh", "sneddon", "study"],
            ModelKind::Mandel => &["mesh", "mandel"],
            ModelKind::Benchmark => &["mesh", "flow", "study"],
        }
    }

    /// Models with their own built-in geometry.
    fn builtin_geometry(self) -> bool {
        matches!(self, ModelKind::Sneddon | ModelKind::Mandel | ModelKind::Benchmark)
    }
}

/// A scalar applied to every fracture, or one value per fracture.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PerFracture {
    One(f64),
    Many(Vec<f64>),
}

impl PerFracture {
    pub fn expand(&self, n: usize, what: &str) -> Result<Vec<f64>> {
        match self {
            PerFracture::One(v) => Ok(vec![*v; n]),
            PerFracture::Many(v) if v.len() == n => Ok(v.clone()),
            PerFracture::Many(v) => Err(Error::Config(format!("flow.{what}: expected {n} values (one per fracture), got {}", v.len()))),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub network: Option<PathBuf>,
    pub msh: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshSection {
    /// Uniform target size; `h_min`, `h_frac` and `h_bound` override it.
    pub h: Option<f64>,
    pub h_min: Option<f64>,
    pub h_frac: Option<f64>,
    pub h_bound: Option<f64>,
    pub grading: f64,
    pub smoothing_passes: usize,
    /// Fracture cells per matrix face.
    pub refine: usize,
}

impl Default for MeshSection {
    fn default() -> Self {
        MeshSection { h: None, h_min: None, h_frac: None, h_bound: None, grading: 1.0, smoothing_passes: 3, refine: 1 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowSection {
    pub scheme: String,
    pub matrix_perm: f64,
    pub fracture_perm: PerFracture,
    pub normal_perm: PerFracture,
    pub aperture: PerFracture,
}

impl Default for FlowSection {
    fn default() -> Self {
        FlowSection {
            scheme: "tpfa".into(),
            matrix_perm: 1.0,
            fracture_perm: PerFracture::One(1e3),
            normal_perm: PerFracture::One(1e3),
            aperture: PerFracture::One(1e-2),
        }
    }
}

/// Boundary data per side: at most one of pressure and flux (outward flux
/// density); unset sides are closed. Concentrations apply on inflow.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySection {
    pub left_pressure: Option<f64>,
    pub right_pressure: Option<f64>,
    pub bottom_pressure: Option<f64>,
    pub top_pressure: Option<f64>,
    pub left_flux: Option<f64>,
    pub right_flux: Option<f64>,
    pub bottom_flux: Option<f64>,
    pub top_flux: Option<f64>,
    pub left_concentration: Option<f64>,
    pub right_concentration: Option<f64>,
    pub bottom_concentration: Option<f64>,
    pub top_concentration: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransportSection {
    pub porosity: f64,
    pub fracture_porosity: f64,
    pub diffusivity: f64,
    pub interface_diffusivity: f64,
    /// `unit` or `exp`.
    pub viscosity: String,
    pub dt: f64,
    pub end_time: f64,
    pub initial_concentration: f64,
    pub newton_tol: f64,
    pub max_iterations: usize,
}

impl Default for TransportSection {
    fn default() -> Self {
        TransportSection {
            porosity: 0.2,
            fracture_porosity: 1.0,
            diffusivity: 0.0,
            interface_diffusivity: 0.0,
            viscosity: "exp".into(),
            dt: 0.01,
            end_time: 0.1,
            initial_concentration: 0.0,
            newton_tol: 1e-10,
            max_iterations: 30,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleItem {
    pub start: f64,
    pub rates: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PoromechSection {
    pub lambda: f64,
    pub shear_modulus: f64,
    pub biot_alpha: f64,
    pub storage: f64,
    pub friction: f64,
    pub c_n: f64,
    pub c_t: f64,
    pub residual_aperture: f64,
    /// `[sxx, syy, sxy]`, compression negative.
    pub background_stress: [f64; 3],
    pub dt: f64,
    pub end_time: f64,
    /// Defaults to injection into the first fracture until t = 2.
    pub schedule: Option<Vec<ScheduleItem>>,
    pub newton_tol: f64,
    pub max_iterations: usize,
    pub patience: usize,
}

impl Default for PoromechSection {
    fn default() -> Self {
        PoromechSection {
            lambda: 1.0,
            shear_modulus: 1.0,
            biot_alpha: 0.8,
            storage: 0.1,
            friction: 0.5,
            c_n: 1.0,
            c_t: 1.0,
            residual_aperture: 1e-2,
            background_stress: [-1.0, -0.6, 0.0],
            dt: 0.1,
            end_time: 10.0,
            schedule: None,
            newton_tol: 1e-8,
            max_iterations: 40,
            patience: 15,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SneddonSection {
    pub nu: f64,
    pub shear_modulus: f64,
    pub p0: f64,
    pub length: f64,
    /// Degrees against the x axis.
    pub angle: f64,
    pub center: [f64; 2],
    pub subdivisions: usize,
}

impl Default for SneddonSection {
    fn default() -> Self {
        SneddonSection { nu: 0.25, shear_modulus: 1.0, p0: 1e-3, length: 0.3, angle: 0.0, center: [0.5, 0.5], subdivisions: 1000 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MandelSection {
    pub a: f64,
    pub b: f64,
    pub force: f64,
    pub shear_modulus: f64,
    pub lambda: f64,
    pub biot_alpha: f64,
    pub biot_modulus: f64,
    pub mobility: f64,
    pub sample_times: Vec<f64>,
    pub dt: f64,
    pub num_roots: usize,
}

impl Default for MandelSection {
    fn default() -> Self {
        MandelSection {
            a: 1.0,
            b: 1.0,
            force: 1.0,
            shear_modulus: 1.0,
            lambda: 1.0,
            biot_alpha: 1.0,
            biot_modulus: 10.0,
            mobility: 1.0,
            sample_times: vec![0.01, 0.1, 0.5, 1.0],
            dt: 0.0025,
            num_roots: 200,
        }
    }
}

/// Convergence study settings. Benchmark studies use `levels`,
/// `reference_h`, `schemes` and `profile_points`; Sneddon studies use
/// `fracture_cells`, `angles`, `seeds`, `far_field_ratio` and `grading`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    pub levels: Option<Vec<f64>>,
    pub reference_h: Option<f64>,
    pub schemes: Option<Vec<String>>,
    pub profile_points: Option<usize>,
    pub fracture_cells: Option<Vec<usize>>,
    pub angles: Option<Vec<f64>>,
    pub seeds: Option<Vec<u64>>,
    pub far_field_ratio: Option<f64>,
    pub grading: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: ModelKind,
    seed: Option<u64>,
    #[serde(default)]
    paths: Paths,
    mesh: Option<MeshSection>,
    flow: Option<FlowSection>,
    boundary: Option<BoundarySection>,
    transport: Option<TransportSection>,
    poromech: Option<PoromechSection>,
    sneddon: Option<SneddonSection>,
    mandel: Option<MandelSection>,
    study: Option<StudySection>,
}

/// A validated configuration with paths resolved against the config file.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: ModelKind,
    pub seed: u64,
    pub network: Option<PathBuf>,
    pub msh: Option<PathBuf>,
    pub output: PathBuf,
    pub mesh: MeshSection,
    pub flow: FlowSection,
    pub boundary: BoundarySection,
    pub transport: TransportSection,
    pub poromech: PoromechSection,
    pub sneddon: SneddonSection,
    pub mandel: MandelSection,
    pub study: StudySection,
}

/// Command-line overrides of config values.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub scheme: Option<String>,
}

impl RunConfig {
    pub fn load(path: &Path, ov: &Overrides) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read config file {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base, ov).map_err(|e| e.context(format!("config file {}", path.display())))
    }

    pub fn parse(text: &str, base: &Path, ov: &Overrides) -> Result<RunConfig> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
        let model = raw.model;
        let present = [
            ("mesh", raw.mesh.is_some()),
            ("flow", raw.flow.is_some()),
            ("boundary", raw.boundary.is_some()),
            ("transport", raw.transport.is_some()),
            ("poromech", raw.poromech.is_some()),
            ("sneddon", raw.sneddon.is_some()),
            ("mandel", raw.mandel.is_some()),
            ("study", raw.study.is_some()),
        ];
        for (name, is_set) in present {
            if is_set && !model.sections().contains(&name) {
                return Err(Error::Config(format!("section [{name}] does not apply to model '{}'", model.name())));
            }
        }
        let resolve = |p: &PathBuf| if p.is_absolute() { p.clone() } else { base.join(p) };
        let network = raw.paths.network.as_ref().map(resolve);
        let msh = raw.paths.msh.as_ref().map(resolve);
        if model.builtin_geometry() {
            if network.is_some() || msh.is_some() {
                return Err(Error::Config(format!("model '{}' has a built-in geometry and takes no network or msh file", model.name())));
            }
        } else if network.is_none() {
            return Err(Error::Config(format!("model '{}' needs paths.network", model.name())));
        }
        for p in network.iter().chain(&msh) {
            if !p.is_file() {
                return Err(Error::Config(format!("file not found: {}", p.display())));
            }
        }
        let output = match (&ov.output, &raw.paths.output) {
            (Some(o), _) => o.clone(),
            (None, Some(o)) => resolve(o),
            (None, None) => base.join("output"),
        };
        let mut flow = raw.flow.unwrap_or_default();
        if let Some(s) = &ov.scheme {
            flow.scheme = s.clone();
        }
        flow.scheme.parse::<Scheme>()?;
        let transport = raw.transport.unwrap_or_default();
        transport.viscosity.parse::<mdfrac_core::models::transport::ViscosityLaw>()?;
        let mesh = raw.mesh.unwrap_or_default();
        if mesh.refine == 0 {
            return Err(Error::Config("mesh.refine must be at least 1".into()));
        }
        let boundary = raw.boundary.unwrap_or_default();
        let b = &boundary;
        for (side, p, q) in [
            ("left", b.left_pressure, b.left_flux),
            ("right", b.right_pressure, b.right_flux),
            ("bottom", b.bottom_pressure, b.bottom_flux),
            ("top", b.top_pressure, b.top_flux),
        ] {
            if p.is_some() && q.is_some() {
                return Err(Error::Config(format!("boundary: both {side}_pressure and {side}_flux are set")));
            }
        }
        Ok(RunConfig {
            model,
            seed: ov.seed.or(raw.seed).unwrap_or(0),
            network,
            msh,
            output,
            mesh,
            flow,
            boundary,
            transport,
            poromech: raw.poromech.unwrap_or_default(),
            sneddon: raw.sneddon.unwrap_or_default(),
            mandel: raw.mandel.unwrap_or_default(),
            study: raw.study.unwrap_or_default(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        RunConfig::parse(text, Path::new("/nonexistent"), &Overrides::default())
    }

    #[test]
    fn unknown_keys_are_named() {
        let e = parse("model = \"mandel\"\n[mandel]\nshear_modulos = 2.0\n").unwrap_err();
        assert!(matches!(e, Error::Config(_)));
        assert!(e.to_string().contains("shear_modulos"), "{e}");
    }

    #[test]
    fn sections_of_other_models_are_rejected() {
        let e = parse("model = \"mandel\"\n[poromech]\n").unwrap_err();
        assert!(e.to_string().contains("[poromech]"), "{e}");
    }

    #[test]
    fn overrides_win() {
        let ov = Overrides { output: Some("/tmp/x".into()), seed: Some(9), scheme: Some("mpfa".into()) };
        let c = RunConfig::parse("model = \"benchmark\"\nseed = 3\n[flow]\nscheme = \"tpfa\"\n", Path::new("/a"), &ov).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.flow.scheme, "mpfa");
        assert_eq!(c.output, PathBuf::from("/tmp/x"));
        let c = parse("model = \"benchmark\"\n").unwrap();
        assert_eq!(c.output, PathBuf::from("/nonexistent/output"));
    }

    #[test]
    fn bad_values_are_config_errors() {
        assert!(parse("model = \"benchmark\"\n[flow]\nscheme = \"fem\"\n").is_err());
        assert!(parse("model = \"flow\"\n").unwrap_err().to_string().contains("paths.network"));
        assert!(parse("model = \"flow\"\n[paths]\nnetwork = \"missing.txt\"\n").unwrap_err().to_string().contains("missing.txt"));
        assert!(parse("model = \"stokes\"\n").is_err());
    }

    #[test]
    fn per_fracture_values_expand() {
        assert_eq!(PerFracture::One(2.0).expand(3, "x").unwrap(), vec![2.0; 3]);
        assert!(PerFracture::Many(vec![1.0, 2.0]).expand(3, "x").is_err());
    }
}
