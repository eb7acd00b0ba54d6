//! Coarse-grained open-chain builders and conformation kinematics.
//!
//! The default refinement splits an n-residue chain into 2n+1 bodies: even
//! body indices are peptide planes (the terminal ones capped with a phantom
//! backbone point so every dihedral has four atoms), odd indices are the
//! C_alpha bodies. Joint 2r is the N-C_alpha bond of residue r (phi), joint
//! 2r+1 the C_alpha-C bond (psi).
//!
//! Joint coordinates are deviations from the reference configuration: the
//! fully extended planar zigzag measures Theta = 0 even though its raw
//! four-point dihedrals are pi (trans). A worked example: rotating the
//! downstream bodies of joint k by +0.3 rad about the bond axis takes the
//! raw dihedral from pi to pi + 0.3 and the joint coordinate from 0 to 0.3.

use crate::angles::wrap;
use crate::chain::conformation::{four_point_dihedral, Conformation};
use crate::chain::preset::{parse_sequence, ChainPreset, STANDARD_RESIDUES};
use crate::error::{Error, Result};
use crate::multibody::{
    EulerParams, Joint, JointKind, JointSpring, MultibodySystem, RigidBody,
};
use nalgebra::{Matrix3, Vector3};

/// Which body layout a chain uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainRefinement {
    /// 2n+1 bodies: peptide planes alternating with C_alpha bodies.
    Backbone2n1,
    /// 5 backbone atoms per residue as a serial chain (5n bodies); count
    /// reproduction preset, no phi/psi bookkeeping.
    AtomicBackbone,
}

/// A point fixed on some body, addressed by body index and point name.
#[derive(Debug, Clone, Copy)]
struct PointRef {
    body: usize,
    name: &'static str,
}

/// A built coarse-grained chain: the multibody system plus the reference
/// data needed to measure and impose conformations.
pub struct ChainModel {
    sequence: Vec<String>,
    joint_kind: JointKind,
    refinement: ChainRefinement,
    preset: ChainPreset,
    system: MultibodySystem,
    /// Reference world pose per body.
    ref_poses: Vec<(Vector3<f64>, EulerParams)>,
    /// Reference world axis and anchor per joint (for the screw composition).
    ref_screws: Vec<(Vector3<f64>, Vector3<f64>)>,
    /// Dihedral quadruples per joint (Backbone2n1 only).
    dihedral_points: Vec<[PointRef; 4]>,
    /// Raw reference dihedrals (Backbone2n1 only).
    ref_dihedrals: Vec<f64>,
}

/// Build the default 2n+1-body chain model for a residue sequence.
pub fn build_chain_model(
    sequence: &[String],
    joint_kind: JointKind,
    preset: &ChainPreset,
) -> Result<ChainModel> {
    build_with_refinement(sequence, joint_kind, preset, ChainRefinement::Backbone2n1)
}

/// Build the 5-atoms-per-residue serial chain (5n bodies, 5n-1 joints).
pub fn build_atomic_chain(
    sequence: &[String],
    joint_kind: JointKind,
    preset: &ChainPreset,
) -> Result<ChainModel> {
    build_with_refinement(sequence, joint_kind, preset, ChainRefinement::AtomicBackbone)
}

pub fn build_with_refinement(
    sequence: &[String],
    joint_kind: JointKind,
    preset: &ChainPreset,
    refinement: ChainRefinement,
) -> Result<ChainModel> {
    preset.validate()?;
    if sequence.is_empty() {
        return Err(Error::InvalidArgument("empty residue sequence".into()));
    }
    for kind in sequence {
        if !STANDARD_RESIDUES.contains(&kind.as_str()) {
            return Err(Error::Config(format!("unknown residue kind {kind:?}")));
        }
    }
    match refinement {
        ChainRefinement::Backbone2n1 => build_backbone_2n1(sequence, joint_kind, preset),
        ChainRefinement::AtomicBackbone => build_atomic(sequence, joint_kind, preset),
    }
}

/// Planar zigzag direction of bond `t` (alternating above/below the x axis).
fn zigzag_dir(t: i64, half_angle: f64) -> Vector3<f64> {
    if t.rem_euclid(2) == 0 {
        Vector3::new(half_angle.cos(), half_angle.sin(), 0.0)
    } else {
        Vector3::new(half_angle.cos(), -half_angle.sin(), 0.0)
    }
}

struct Backbone {
    n_pos: Vec<Vector3<f64>>,
    ca_pos: Vec<Vector3<f64>>,
    c_pos: Vec<Vector3<f64>>,
    c_phantom: Vector3<f64>,
    n_phantom: Vector3<f64>,
}

fn backbone_geometry(n: usize, preset: &ChainPreset) -> Backbone {
    let half = preset.zigzag_half_angle_deg.to_radians();
    let mut n_pos = Vec::with_capacity(n);
    let mut ca_pos = Vec::with_capacity(n);
    let mut c_pos = Vec::with_capacity(n);
    let mut p = Vector3::zeros();
    for r in 0..n {
        let t0 = 3 * r as i64;
        n_pos.push(p);
        p += preset.bond_n_ca * zigzag_dir(t0, half);
        ca_pos.push(p);
        p += preset.bond_ca_c * zigzag_dir(t0 + 1, half);
        c_pos.push(p);
        if r + 1 < n {
            p += preset.bond_c_n * zigzag_dir(t0 + 2, half);
        }
    }
    let c_phantom = n_pos[0] - preset.bond_c_n * zigzag_dir(-1, half);
    let n_phantom = c_pos[n - 1] + preset.bond_c_n * zigzag_dir(3 * n as i64 - 1, half);
    Backbone {
        n_pos,
        ca_pos,
        c_pos,
        c_phantom,
        n_phantom,
    }
}

fn make_body(preset: &ChainPreset, origin: Vector3<f64>) -> Result<RigidBody> {
    let mut b = RigidBody::new(
        preset.mass,
        Matrix3::from_diagonal(&Vector3::new(
            preset.inertia_diag[0],
            preset.inertia_diag[1],
            preset.inertia_diag[2],
        )),
    )?;
    b.position = origin;
    Ok(b)
}

fn build_backbone_2n1(
    sequence: &[String],
    joint_kind: JointKind,
    preset: &ChainPreset,
) -> Result<ChainModel> {
    let n = sequence.len();
    let geo = backbone_geometry(n, preset);

    // bodies: plane_0, Ca_0, plane_1, Ca_1, ..., plane_n
    let mut bodies = Vec::with_capacity(2 * n + 1);
    for r in 0..=n {
        // peptide-plane body r: contains C of residue r-1 and N of residue r
        let (c_point, n_point) = if r == 0 {
            (geo.c_phantom, geo.n_pos[0])
        } else if r == n {
            (geo.c_pos[n - 1], geo.n_phantom)
        } else {
            (geo.c_pos[r - 1], geo.n_pos[r])
        };
        let mut plane = make_body(preset, c_point)?;
        plane.attach_point("C", Vector3::zeros());
        plane.attach_point("N", n_point - c_point);
        bodies.push(plane);
        if r < n {
            let mut ca = make_body(preset, geo.ca_pos[r])?;
            ca.attach_point("CA", Vector3::zeros());
            bodies.push(ca);
        }
    }
    // reorder: bodies were pushed as plane, Ca, plane, Ca, ..., plane giving
    // indices plane_r -> 2r, Ca_r -> 2r+1 (0-based), which is the layout
    // documented above.

    let mut joints = Vec::with_capacity(2 * n);
    let mut ref_screws = Vec::with_capacity(2 * n);
    let mut dihedral_points = Vec::with_capacity(2 * n);
    for r in 0..n {
        // phi joint: plane_r (2r) to Ca_r (2r+1), axis N_r -> Ca_r
        let plane_idx = 2 * r;
        let ca_idx = 2 * r + 1;
        let axis = (geo.ca_pos[r] - geo.n_pos[r]).normalize();
        let plane_origin = bodies[plane_idx].position;
        let ca_origin = bodies[ca_idx].position;
        let (anchor_i, anchor_j) = match joint_kind {
            JointKind::Revolute => {
                // shared point at N_r
                (geo.n_pos[r] - plane_origin, geo.n_pos[r] - ca_origin)
            }
            JointKind::Cylindrical => {
                // anchors at N_r (plane side) and Ca_r (Ca side)
                (geo.n_pos[r] - plane_origin, Vector3::zeros())
            }
        };
        let spring = (joint_kind == JointKind::Cylindrical).then(|| JointSpring {
            stiffness: preset.spring_n_ca.stiffness,
            rest_length: preset.spring_n_ca.rest_length,
        });
        joints.push(match joint_kind {
            JointKind::Revolute => {
                Joint::revolute(plane_idx, ca_idx, axis, axis, anchor_i, anchor_j)
            }
            JointKind::Cylindrical => {
                Joint::cylindrical(plane_idx, ca_idx, axis, axis, anchor_i, anchor_j, spring)
            }
        });
        ref_screws.push((axis, geo.n_pos[r]));
        dihedral_points.push([
            PointRef { body: plane_idx, name: "C" },
            PointRef { body: plane_idx, name: "N" },
            PointRef { body: ca_idx, name: "CA" },
            PointRef { body: plane_idx + 2, name: "C" },
        ]);

        // psi joint: Ca_r (2r+1) to plane_{r+1} (2r+2), axis Ca_r -> C_r
        let next_plane = 2 * r + 2;
        let axis = (geo.c_pos[r] - geo.ca_pos[r]).normalize();
        let next_origin = bodies[next_plane].position;
        let (anchor_i, anchor_j) = match joint_kind {
            JointKind::Revolute => (geo.ca_pos[r] - ca_origin, geo.ca_pos[r] - next_origin),
            JointKind::Cylindrical => (Vector3::zeros(), geo.c_pos[r] - next_origin),
        };
        let spring = (joint_kind == JointKind::Cylindrical).then(|| JointSpring {
            stiffness: preset.spring_ca_c.stiffness,
            rest_length: preset.spring_ca_c.rest_length,
        });
        joints.push(match joint_kind {
            JointKind::Revolute => {
                Joint::revolute(ca_idx, next_plane, axis, axis, anchor_i, anchor_j)
            }
            JointKind::Cylindrical => {
                Joint::cylindrical(ca_idx, next_plane, axis, axis, anchor_i, anchor_j, spring)
            }
        });
        ref_screws.push((axis, geo.ca_pos[r]));
        dihedral_points.push([
            PointRef { body: plane_idx, name: "N" },
            PointRef { body: ca_idx, name: "CA" },
            PointRef { body: next_plane, name: "C" },
            PointRef { body: next_plane, name: "N" },
        ]);
    }

    let ref_poses: Vec<(Vector3<f64>, EulerParams)> = bodies
        .iter()
        .map(|b| (b.position, EulerParams::identity()))
        .collect();
    let system = MultibodySystem::new(bodies, joints)?;

    let mut model = ChainModel {
        sequence: sequence.to_vec(),
        joint_kind,
        refinement: ChainRefinement::Backbone2n1,
        preset: preset.clone(),
        system,
        ref_poses,
        ref_screws,
        dihedral_points,
        ref_dihedrals: Vec::new(),
    };
    model.ref_dihedrals = (0..model.system.joints().len())
        .map(|k| model.raw_dihedral(k))
        .collect::<Result<Vec<_>>>()?;
    Ok(model)
}

fn build_atomic(
    sequence: &[String],
    joint_kind: JointKind,
    preset: &ChainPreset,
) -> Result<ChainModel> {
    let n = sequence.len();
    let half = preset.zigzag_half_angle_deg.to_radians();
    // serial H-N-CA-C-O chain per residue, O linked to the next residue's H
    let bond_h_n = 1.01;
    let bond_c_o = 1.23;
    let bond_o_h = 1.00;
    let lengths_cycle = [
        bond_h_n,
        preset.bond_n_ca,
        preset.bond_ca_c,
        bond_c_o,
        bond_o_h,
    ];

    let total = 5 * n;
    let mut positions = Vec::with_capacity(total);
    let mut p = Vector3::zeros();
    for t in 0..total {
        positions.push(p);
        if t + 1 < total {
            let cycle = t % 5;
            p += lengths_cycle[cycle] * zigzag_dir(t as i64, half);
        }
    }

    let mut bodies = Vec::with_capacity(total);
    for pos in &positions {
        let mut b = make_body(preset, *pos)?;
        b.attach_point("P", Vector3::zeros());
        bodies.push(b);
    }

    let mut joints = Vec::with_capacity(total - 1);
    let mut ref_screws = Vec::with_capacity(total - 1);
    for t in 0..total - 1 {
        let axis = (positions[t + 1] - positions[t]).normalize();
        let spring_for = |cycle: usize| -> JointSpring {
            match cycle {
                1 => JointSpring {
                    stiffness: preset.spring_n_ca.stiffness,
                    rest_length: preset.spring_n_ca.rest_length,
                },
                2 => JointSpring {
                    stiffness: preset.spring_ca_c.stiffness,
                    rest_length: preset.spring_ca_c.rest_length,
                },
                _ => JointSpring {
                    stiffness: 300.0,
                    rest_length: lengths_cycle[cycle],
                },
            }
        };
        joints.push(match joint_kind {
            JointKind::Revolute => Joint::revolute(
                t,
                t + 1,
                axis,
                axis,
                Vector3::zeros(),
                positions[t] - positions[t + 1],
            ),
            JointKind::Cylindrical => Joint::cylindrical(
                t,
                t + 1,
                axis,
                axis,
                Vector3::zeros(),
                Vector3::zeros(),
                Some(spring_for(t % 5)),
            ),
        });
        ref_screws.push((axis, positions[t]));
    }

    let ref_poses: Vec<(Vector3<f64>, EulerParams)> = bodies
        .iter()
        .map(|b| (b.position, EulerParams::identity()))
        .collect();
    let system = MultibodySystem::new(bodies, joints)?;
    Ok(ChainModel {
        sequence: sequence.to_vec(),
        joint_kind,
        refinement: ChainRefinement::AtomicBackbone,
        preset: preset.clone(),
        system,
        ref_poses,
        ref_screws,
        dihedral_points: Vec::new(),
        ref_dihedrals: Vec::new(),
    })
}

impl ChainModel {
    pub fn from_text_sequence(
        text: &str,
        joint_kind: JointKind,
        preset: &ChainPreset,
    ) -> Result<Self> {
        build_chain_model(&parse_sequence(text)?, joint_kind, preset)
    }

    pub fn sequence(&self) -> &[String] {
        &self.sequence
    }

    pub fn joint_kind(&self) -> JointKind {
        self.joint_kind
    }

    pub fn refinement(&self) -> ChainRefinement {
        self.refinement
    }

    pub fn preset(&self) -> &ChainPreset {
        &self.preset
    }

    pub fn system(&self) -> &MultibodySystem {
        &self.system
    }

    pub fn system_mut(&mut self) -> &mut MultibodySystem {
        &mut self.system
    }

    pub fn body_count(&self) -> usize {
        self.system.bodies().len()
    }

    pub fn joint_count(&self) -> usize {
        self.system.joints().len()
    }

    fn point_world(&self, p: &PointRef) -> Vector3<f64> {
        self.system.bodies()[p.body]
            .attached_point_world(p.name)
            .expect("chain bodies carry their named points")
    }

    /// Raw four-point dihedral of joint `k` (Backbone2n1).
    fn raw_dihedral(&self, k: usize) -> Result<f64> {
        let pts = &self.dihedral_points[k];
        four_point_dihedral(
            &self.point_world(&pts[0]),
            &self.point_world(&pts[1]),
            &self.point_world(&pts[2]),
            &self.point_world(&pts[3]),
        )
        .map_err(|_| {
            Error::DegenerateGeometry(format!(
                "dihedral of joint {k} undefined: collinear atoms around body {}",
                pts[1].body
            ))
        })
    }

    /// Measure the joint parameters of the current state.
    ///
    /// For the 2n+1 refinement the angles come from the four-point dihedral
    /// cosines (sign via the scalar triple product), reported as deviations
    /// from the reference so the extended chain reads zero. The atomic
    /// refinement reports the generic joint rotation angles. Cylindrical
    /// chains interleave the axial lengths.
    pub fn measure_dihedrals(&self) -> Result<Conformation> {
        let angles: Vec<f64> = match self.refinement {
            ChainRefinement::Backbone2n1 => (0..self.joint_count())
                .map(|k| Ok(wrap(self.raw_dihedral(k)? - self.ref_dihedrals[k])))
                .collect::<Result<Vec<_>>>()?,
            ChainRefinement::AtomicBackbone => self.system.joint_angles(),
        };
        match self.joint_kind {
            JointKind::Revolute => Ok(Conformation::revolute(angles)),
            JointKind::Cylindrical => {
                let lengths = self.system.joint_lengths();
                Conformation::from_parts(JointKind::Cylindrical, &angles, Some(&lengths))
            }
        }
    }

    /// Impose joint parameters by rotating (and for cylindrical chains
    /// sliding) every downstream sub-chain about each joint axis in turn,
    /// starting from the reference configuration. Velocities are zeroed; the
    /// result satisfies the constraints to rounding.
    pub fn apply_conformation(&mut self, conf: &Conformation) -> Result<()> {
        if conf.joint_kind() != self.joint_kind {
            return Err(Error::InvalidArgument(
                "conformation joint kind does not match the chain".into(),
            ));
        }
        if conf.joint_count() != self.joint_count() {
            return Err(Error::InvalidArgument(format!(
                "conformation has {} joints, chain has {}",
                conf.joint_count(),
                self.joint_count()
            )));
        }

        // accumulated screw transform (rotation q, translation t)
        let mut q_acc = EulerParams::identity();
        let mut t_acc = Vector3::zeros();
        let compose =
            |q: &EulerParams, t: &Vector3<f64>, q2: &EulerParams, t2: &Vector3<f64>| {
                (q.mul(q2).normalized(), t + q.rotation_matrix() * t2)
            };

        // body 0 stays at reference
        {
            let (pos, ori) = self.ref_poses[0];
            let b = &mut self.system.bodies_mut()[0];
            b.position = pos;
            b.orientation = ori;
        }
        for k in 0..self.joint_count() {
            let (axis, anchor) = self.ref_screws[k];
            let theta = conf.angle(k);
            let slide = match conf.length(k) {
                Some(d) => d - self.system.joint_ref_length(k),
                None => 0.0,
            };
            let rot = EulerParams::from_axis_angle(&axis, theta);
            let a = rot.rotation_matrix();
            let screw_t = anchor - a * anchor + slide * axis;
            let (q_new, t_new) = compose(&q_acc, &t_acc, &rot, &screw_t);
            q_acc = q_new;
            t_acc = t_new;

            let (ref_pos, ref_ori) = self.ref_poses[k + 1];
            let b = &mut self.system.bodies_mut()[k + 1];
            b.position = q_acc.rotation_matrix() * ref_pos + t_acc;
            b.orientation = q_acc.mul(&ref_ori).normalized();
        }
        self.system.zero_velocities();
        Ok(())
    }
}
