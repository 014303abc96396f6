pub mod cutting;
pub mod euler_limit;
pub mod kinetic_limit;
pub mod mc_scaling;
pub mod nsf_limit;
pub mod witnesses;
