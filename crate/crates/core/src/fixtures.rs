//! Reference scenarios shipped with the crate.
//!
//! All four place A at rest at x = 0 and B at rest at x = 2 in 1+1
//! dimensions, so B's worldline meets the lightcones of an event on A at
//! t = 1 at proper times −1 and 3.

use crate::scenario::{parse_scenario, Scenario};

pub const BELL_SIGMA_Z: &str = include_str!("../fixtures/bell_sigma_z.scn");
pub const BELL_SIGMA_X: &str = include_str!("../fixtures/bell_sigma_x.scn");
pub const EPR_TEST: &str = include_str!("../fixtures/epr_test.scn");
pub const FOLIATION_DEMO: &str = include_str!("../fixtures/foliation_demo.scn");

/// Angle between the two measurement axes in [`EPR_TEST`].
pub const EPR_THETA: f64 = std::f64::consts::FRAC_PI_3;

pub fn bell_sigma_z() -> Scenario {
    parse_scenario(BELL_SIGMA_Z).expect("fixture parses")
}

pub fn bell_sigma_x() -> Scenario {
    parse_scenario(BELL_SIGMA_X).expect("fixture parses")
}

pub fn epr_test() -> Scenario {
    parse_scenario(EPR_TEST).expect("fixture parses")
}

pub fn foliation_demo() -> Scenario {
    parse_scenario(FOLIATION_DEMO).expect("fixture parses")
}
