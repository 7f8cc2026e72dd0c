//! Benchmark targets with reference values.

mod ar;
mod bessel;
mod gh;
mod mixture;
mod sensor;

pub use ar::{make_ar4_target, ArGhModel, AR_OBSERVATIONS, AR_TRUE_COEFFS, DATA_STREAM};
pub use bessel::{bessel_k, bessel_k0, bessel_k1, ln_bessel_k, ln_bessel_k0};
pub use gh::{gh_log_pdf, gh_sample, GhParams, GhSampler, GH_GRID_HALF_WIDTH, GH_GRID_POINTS};
pub use mixture::{
    make_bimodal_1d, make_mog3_nd, make_mog3_nd_with_scale, make_mog5_2d, Covariance,
    GaussianMixtureTarget, MOG3_LOCATIONS, MOG3_MAX_DIM, MOG3_SCALE, MOG5_COVS, MOG5_MEANS,
};
pub use sensor::{
    make_sensor_target, range_measurement, SensorModel, SENSOR_GRID_HI, SENSOR_GRID_LO,
    SENSOR_GRID_POINTS, SENSOR_MEASUREMENTS, SENSOR_NOISE_STD, SENSOR_POSITIONS, SENSOR_PRIOR_STD,
    SENSOR_TRUE_POSITION, SQUARED_DISTANCE_FLOOR,
};
