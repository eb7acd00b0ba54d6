//! System description files (TOML) and trajectory CSV output.
//!
//! A system file provides either an explicit `[[bodies]]`/`[[joints]]`
//! listing or a `[chain]` block that expands through the chain builder.
//! Optional `[langevin]` and `[propensity]` blocks configure the bath and
//! the statistical-potential hook; file paths inside the description are
//! resolved relative to the description file itself.

use crate::chain::{ChainModel, ChainPreset};
use crate::error::{Error, Result};
use crate::landscape::{io::read_library, ChainLandscape};
use crate::multibody::{
    EulerParams, Joint, JointKind, JointSpring, LangevinBath, MultibodySystem, RigidBody,
};
use nalgebra::{Matrix3, Vector3};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemFile {
    #[serde(default = "default_version")]
    format_version: u32,
    gravity: Option<[f64; 3]>,
    #[serde(default)]
    bodies: Vec<BodySpec>,
    #[serde(default)]
    joints: Vec<JointSpec>,
    chain: Option<ChainSpec>,
    langevin: Option<LangevinSpec>,
    propensity: Option<PropensitySpec>,
}

fn default_version() -> u32 {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BodySpec {
    mass: f64,
    inertia_diag: [f64; 3],
    position: [f64; 3],
    orientation: Option<[f64; 4]>,
    velocity: Option<[f64; 3]>,
    angular_velocity: Option<[f64; 3]>,
    #[serde(default)]
    points: BTreeMap<String, [f64; 3]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointSpec {
    kind: String,
    body_i: usize,
    body_j: usize,
    axis_i: [f64; 3],
    axis_j: [f64; 3],
    anchor_i: [f64; 3],
    anchor_j: [f64; 3],
    spring: Option<SpringSpecToml>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpringSpecToml {
    stiffness: f64,
    rest_length: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainSpec {
    sequence: String,
    joint: String,
    preset: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LangevinSpec {
    rho: f64,
    beta_thermo: f64,
    seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PropensitySpec {
    library: String,
    sequence: Option<String>,
}

/// A loaded system: either explicit bodies/joints or a chain model with its
/// dihedral bookkeeping.
pub enum LoadedSystem {
    Explicit(MultibodySystem),
    Chain(ChainModel),
}

impl LoadedSystem {
    pub fn system(&self) -> &MultibodySystem {
        match self {
            LoadedSystem::Explicit(s) => s,
            LoadedSystem::Chain(c) => c.system(),
        }
    }

    pub fn system_mut(&mut self) -> &mut MultibodySystem {
        match self {
            LoadedSystem::Explicit(s) => s,
            LoadedSystem::Chain(c) => c.system_mut(),
        }
    }

    pub fn chain(&self) -> Option<&ChainModel> {
        match self {
            LoadedSystem::Explicit(_) => None,
            LoadedSystem::Chain(c) => Some(c),
        }
    }
}

pub fn parse_joint_kind(text: &str) -> Result<JointKind> {
    match text {
        "revolute" => Ok(JointKind::Revolute),
        "cylindrical" => Ok(JointKind::Cylindrical),
        other => Err(Error::Format(format!(
            "unknown joint kind {other:?} (expected revolute or cylindrical)"
        ))),
    }
}

/// Load and wire a system description file.
pub fn load_system_file(path: &Path) -> Result<LoadedSystem> {
    let text = std::fs::read_to_string(path)?;
    let spec: SystemFile =
        toml::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    if spec.format_version != 1 {
        return Err(Error::Format(format!(
            "unsupported system file version {}",
            spec.format_version
        )));
    }
    let base = path.parent().unwrap_or_else(|| Path::new("."));

    let mut loaded = match (&spec.chain, spec.bodies.is_empty()) {
        (Some(chain), true) => {
            let preset = match &chain.preset {
                Some(p) => ChainPreset::load(&base.join(p))?,
                None => ChainPreset::default(),
            };
            let kind = parse_joint_kind(&chain.joint)?;
            LoadedSystem::Chain(ChainModel::from_text_sequence(&chain.sequence, kind, &preset)?)
        }
        (None, false) => {
            let mut bodies = Vec::with_capacity(spec.bodies.len());
            for b in &spec.bodies {
                let mut body = RigidBody::new(
                    b.mass,
                    Matrix3::from_diagonal(&Vector3::from_column_slice(&b.inertia_diag)),
                )?;
                body.position = Vector3::from_column_slice(&b.position);
                if let Some(o) = b.orientation {
                    body.orientation = EulerParams::from_array(o).normalized();
                }
                if let Some(v) = b.velocity {
                    body.velocity = Vector3::from_column_slice(&v);
                }
                if let Some(w) = b.angular_velocity {
                    body.angular_velocity = Vector3::from_column_slice(&w);
                }
                for (name, p) in &b.points {
                    body.attach_point(name.clone(), Vector3::from_column_slice(p));
                }
                bodies.push(body);
            }
            let mut joints = Vec::with_capacity(spec.joints.len());
            for j in &spec.joints {
                let kind = parse_joint_kind(&j.kind)?;
                let spring = j.spring.as_ref().map(|s| JointSpring {
                    stiffness: s.stiffness,
                    rest_length: s.rest_length,
                });
                joints.push(Joint {
                    kind,
                    body_i: j.body_i,
                    body_j: j.body_j,
                    axis_i: Vector3::from_column_slice(&j.axis_i),
                    axis_j: Vector3::from_column_slice(&j.axis_j),
                    anchor_i: Vector3::from_column_slice(&j.anchor_i),
                    anchor_j: Vector3::from_column_slice(&j.anchor_j),
                    spring,
                });
            }
            LoadedSystem::Explicit(MultibodySystem::new(bodies, joints)?)
        }
        (Some(_), false) => {
            return Err(Error::Format(
                "a system file provides either [chain] or [[bodies]], not both".into(),
            ));
        }
        (None, true) => {
            return Err(Error::Format(
                "a system file needs a [chain] block or [[bodies]] entries".into(),
            ));
        }
    };

    if let Some(g) = spec.gravity {
        loaded.system_mut().gravity = Vector3::from_column_slice(&g);
    }
    if let Some(l) = &spec.langevin {
        loaded.system_mut().set_langevin(Some(LangevinBath {
            rho: l.rho,
            beta_thermo: l.beta_thermo,
            seed: l.seed,
        }));
    }
    if let Some(p) = &spec.propensity {
        let library = Arc::new(read_library(&base.join(&p.library))?);
        let sequence = match (&p.sequence, &spec.chain) {
            (Some(s), _) => crate::chain::parse_sequence(s)?,
            (None, Some(c)) => crate::chain::parse_sequence(&c.sequence)?,
            (None, None) => {
                return Err(Error::Format(
                    "[propensity] needs a sequence when no [chain] block is present".into(),
                ));
            }
        };
        let landscape = ChainLandscape::new(library, sequence)?;
        loaded.system_mut().set_propensity(Some(Arc::new(landscape)))?;
    }
    Ok(loaded)
}

/// Trajectory CSV header:
/// `t,angle_0,...[,length_0,...],energy,phi_inf,phidot_inf`.
pub fn write_trajectory_header(w: &mut impl Write, sys: &MultibodySystem) -> Result<()> {
    write!(w, "t")?;
    for k in 0..sys.joints().len() {
        write!(w, ",angle_{k}")?;
    }
    if sys.joints().iter().any(|j| j.kind == JointKind::Cylindrical) {
        for k in 0..sys.joints().len() {
            write!(w, ",length_{k}")?;
        }
    }
    writeln!(w, ",energy,phi_inf,phidot_inf")?;
    Ok(())
}

/// One trajectory row at the current state. Energy is kinetic + spring +
/// propensity.
pub fn write_trajectory_row(w: &mut impl Write, sys: &MultibodySystem) -> Result<()> {
    write!(w, "{}", sys.time())?;
    for a in sys.joint_angles() {
        write!(w, ",{a}")?;
    }
    if sys.joints().iter().any(|j| j.kind == JointKind::Cylindrical) {
        for l in sys.joint_lengths() {
            write!(w, ",{l}")?;
        }
    }
    let energy = sys.kinetic_energy() + sys.spring_energy() + sys.propensity_energy();
    let (phi_inf, phidot_inf) = sys.constraint_violation();
    writeln!(w, ",{energy},{phi_inf},{phidot_inf}")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_explicit_two_body_system() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("system.toml");
        std::fs::write(
            &path,
            r#"
format_version = 1
gravity = [0.0, -1.0, 0.0]

[[bodies]]
mass = 1.0
inertia_diag = [1.0, 1.0, 1.0]
position = [0.0, 0.0, 0.0]

[[bodies]]
mass = 2.0
inertia_diag = [1.0, 1.0, 1.0]
position = [1.0, 0.0, 0.0]
velocity = [0.0, 0.1, 0.0]

[[joints]]
kind = "revolute"
body_i = 0
body_j = 1
axis_i = [0.0, 0.0, 1.0]
axis_j = [0.0, 0.0, 1.0]
anchor_i = [0.5, 0.0, 0.0]
anchor_j = [-0.5, 0.0, 0.0]
"#,
        )
        .unwrap();
        let loaded = load_system_file(&path).unwrap();
        let sys = loaded.system();
        assert_eq!(sys.bodies().len(), 2);
        assert_eq!(sys.joints().len(), 1);
        assert_eq!(sys.gravity.y, -1.0);
        assert_eq!(sys.bodies()[1].mass(), 2.0);
        assert!(loaded.chain().is_none());
    }

    #[test]
    fn loads_chain_block_with_langevin() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("chain.toml");
        std::fs::write(
            &path,
            r#"
[chain]
sequence = "GLY-ALA"
joint = "revolute"

[langevin]
rho = 0.5
beta_thermo = 2.0
seed = 7
"#,
        )
        .unwrap();
        let loaded = load_system_file(&path).unwrap();
        assert_eq!(loaded.system().bodies().len(), 5);
        assert_eq!(loaded.system().joints().len(), 4);
        assert!(loaded.chain().is_some());
        let bath = loaded.system().langevin().unwrap();
        assert_eq!(bath.seed, 7);
    }

    #[test]
    fn rejects_ambiguous_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.toml");
        std::fs::write(&path, "format_version = 1\n").unwrap();
        assert!(load_system_file(&path).is_err());
    }

    #[test]
    fn trajectory_format() {
        let loaded = {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("chain.toml");
            std::fs::write(&path, "[chain]\nsequence = \"GLY\"\njoint = \"revolute\"\n").unwrap();
            load_system_file(&path).unwrap()
        };
        let mut buf = Vec::new();
        write_trajectory_header(&mut buf, loaded.system()).unwrap();
        write_trajectory_row(&mut buf, loaded.system()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,angle_0,angle_1,energy,phi_inf,phidot_inf");
        assert!(lines.next().unwrap().starts_with("0,"));
    }
}
