#![allow(dead_code)]

use std::sync::OnceLock;

use implosion::profile::{find_profile, ProfileConfig, ProfileCurve, ProfileSolution};
use implosion::{derive, Parameters, Regime};

/// Speed of the first smooth profile for (d, ell) = (3, 2), from an independent SciPy shooting
/// script (LSODA on the same planar system, bisection on the sonic miss distance).
pub const R1_ORACLE: f64 = 1.143517346180555;

pub struct Fixture {
    pub params: Parameters,
    pub solution: ProfileSolution,
}

impl Fixture {
    pub fn curve(&self) -> &ProfileCurve {
        &self.solution.curve
    }
}

pub fn fixture() -> &'static Fixture {
    static CELL: OnceLock<Fixture> = OnceLock::new();
    CELL.get_or_init(|| {
        let base = derive(3, 2.0, 0.0, 0.0, Regime::Euler).unwrap();
        let solution = find_profile(&base, &ProfileConfig::default()).unwrap();
        let params = base.with_speed(solution.curve.r).unwrap();
        Fixture { params, solution }
    })
}
