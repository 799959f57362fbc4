//! Bundled experiment instances S1 and S2.
//!
//! S1 is five two-state chains with distinct reward pairs; S2 is the
//! two-state theta family at theta = [0.5, 1, 7, 5, 3] with rewards (1, 2).

use crate::chain::{theta_arm, Arm};
use crate::sim::BanditInstance;

/// (p01, p10, r0, r1) per arm.
pub const S1_PARAMS: [(f64, f64, f64, f64); 5] = [
    (0.3, 0.5, 1.0, 1.2),
    (0.2, 0.6, 1.0, 1.7),
    (0.6, 0.3, 1.0, 1.5),
    (0.7, 0.2, 1.0, 1.8),
    (0.4, 0.8, 1.0, 1.3),
];

/// Theta per arm; the family fixes rewards to (1, 2).
pub const S2_THETAS: [f64; 5] = [0.5, 1.0, 7.0, 5.0, 3.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    S1,
    S2,
}

impl Preset {
    /// Case-insensitive lookup; returns `None` for unknown names.
    pub fn from_name(name: &str) -> Option<Preset> {
        match name.to_ascii_uppercase().as_str() {
            "S1" => Some(Preset::S1),
            "S2" => Some(Preset::S2),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::S1 => "S1",
            Preset::S2 => "S2",
        }
    }

    pub fn instance(self) -> BanditInstance {
        match self {
            Preset::S1 => s1(),
            Preset::S2 => s2(),
        }
    }

    /// The theta parameters behind the preset, when it is a theta family.
    pub fn thetas(self) -> Option<Vec<f64>> {
        match self {
            Preset::S1 => None,
            Preset::S2 => Some(S2_THETAS.to_vec()),
        }
    }
}

pub fn s1() -> BanditInstance {
    let arms = S1_PARAMS
        .iter()
        .map(|&(p01, p10, r0, r1)| {
            Arm::two_state(p01, p10, r0, r1).expect("S1 parameters form valid chains")
        })
        .collect();
    BanditInstance::new(arms).expect("S1 has five arms")
}

pub fn s2() -> BanditInstance {
    let arms = S2_THETAS
        .iter()
        .map(|&t| theta_arm(t).expect("S2 thetas lie inside (0, 10)"))
        .collect();
    BanditInstance::new(arms).expect("S2 has five arms")
}
