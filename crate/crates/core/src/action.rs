use serde::{Deserialize, Serialize};

/// High-level longitudinal actions available to every agent. Each variant is a
/// fixed acceleration command held for one simulator step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Accelerate,
    Decelerate,
    Brake,
    Maintain,
}

impl Action {
    pub const COUNT: usize = 4;
    pub const ALL: [Action; 4] = [
        Action::Accelerate,
        Action::Decelerate,
        Action::Brake,
        Action::Maintain,
    ];

    /// Dense index used for Q-vector addressing.
    pub fn index(self) -> usize {
        match self {
            Action::Accelerate => 0,
            Action::Decelerate => 1,
            Action::Brake => 2,
            Action::Maintain => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }

    /// Longitudinal acceleration in m/s².
    pub fn acceleration(self) -> f64 {
        match self {
            Action::Accelerate => 1.0,
            Action::Decelerate => -1.0,
            Action::Brake => -5.0,
            Action::Maintain => 0.0,
        }
    }
}
