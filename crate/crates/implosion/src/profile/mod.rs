//! Self-similar profile construction.

mod branch;
mod curve;
mod origin;
mod physical;
mod shoot;

pub use branch::{branch_series, BranchSeries};
pub use curve::{build_curve, find_profile, Crossing, Local, ProfileCurve, ProfileSolution, RejectedRoot};
pub use origin::{origin_series, OriginSeries};
pub use physical::{
    dampen, profile_at, reconstruct_physical, renormalized_from_hat, rho_hat_dampened, smoothstep, DampenedProfile,
    Dampening, PhysicalProfile, CUT_HI, CUT_LO,
};
pub use shoot::{
    integrate_to_sonic, origin_rhs, resonance, scan_speeds, shoot, shoot_speed, ProfileConfig, Shot, SonicApproach,
    SonicClass, SpeedRoot,
};
