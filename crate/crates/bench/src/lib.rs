//! Shared inputs for the criterion benches.

use folia_core::catalog;
use folia_core::fields::FramedScene;

pub fn tilted() -> FramedScene {
    catalog::t3_tilted()
}

pub fn random_q2() -> FramedScene {
    catalog::random_scene(2, 11, 0.15, false)
}
