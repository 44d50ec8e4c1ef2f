//! Shared fixtures for the criterion benches.

use phalanx_core::design::PhalanxTriple;
use phalanx_core::HandModel;

pub fn thumb_design() -> PhalanxTriple {
    PhalanxTriple::new(17, 17, 17)
}

pub fn finger_design() -> PhalanxTriple {
    PhalanxTriple::new(15, 15, 15)
}

pub fn model() -> HandModel {
    HandModel::default()
}
