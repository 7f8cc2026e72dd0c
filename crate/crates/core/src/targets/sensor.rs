//! Range-only sensor network localization.

use std::io::{self, Write};

use super::ar::DATA_STREAM;
use crate::gaussian::LN_2PI;
use crate::rng::RngStream;
use crate::target::Target;
use rand_distr::{Distribution, StandardNormal};

pub const SENSOR_POSITIONS: [[f64; 2]; 6] = [
    [1.0, -8.0],
    [8.0, 10.0],
    [-15.0, -7.0],
    [-8.0, 1.0],
    [10.0, 0.0],
    [0.0, 10.0],
];
pub const SENSOR_TRUE_POSITION: [f64; 2] = [3.5, 3.5];
pub const SENSOR_NOISE_STD: f64 = 5.0;
pub const SENSOR_PRIOR_STD: f64 = 10.0;
pub const SENSOR_MEASUREMENTS: usize = 60;
pub const SQUARED_DISTANCE_FLOOR: f64 = 1e-6;

/// Grid used for the reference posterior mean.
pub const SENSOR_GRID_LO: f64 = -2.0;
pub const SENSOR_GRID_HI: f64 = 9.0;
pub const SENSOR_GRID_POINTS: usize = 2001;

/// `-20 ln max(|x - h|^2, 1e-6)`.
#[inline]
pub fn range_measurement(x: &[f64], h: &[f64; 2]) -> f64 {
    let d2 = (x[0] - h[0]).powi(2) + (x[1] - h[1]).powi(2);
    -20.0 * d2.max(SQUARED_DISTANCE_FLOOR).ln()
}

#[derive(Debug, Clone)]
pub struct SensorModel {
    measurements: Vec<Vec<f64>>,
    /// Per sensor: `(sum y, sum y^2)`.
    stats: Vec<(f64, f64)>,
    log_norm: f64,
    seed: u64,
    known_mean: Vec<f64>,
}

impl SensorModel {
    pub fn generate(seed: u64, per_sensor: usize) -> Self {
        let mut rng = RngStream::new(seed, DATA_STREAM);
        let measurements: Vec<Vec<f64>> = SENSOR_POSITIONS
            .iter()
            .map(|h| {
                let clean = range_measurement(&SENSOR_TRUE_POSITION, h);
                (0..per_sensor)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        clean + SENSOR_NOISE_STD * z
                    })
                    .collect()
            })
            .collect();
        Self::from_measurements(seed, measurements)
    }

    pub fn from_measurements(seed: u64, measurements: Vec<Vec<f64>>) -> Self {
        let stats = measurements
            .iter()
            .map(|ys| (ys.iter().sum(), ys.iter().map(|y| y * y).sum()))
            .collect();
        let n: usize = measurements.iter().map(Vec::len).sum();
        let log_norm = -(n as f64) * (0.5 * LN_2PI + SENSOR_NOISE_STD.ln())
            - (LN_2PI + 2.0 * SENSOR_PRIOR_STD.ln());
        let mut model = Self {
            measurements,
            stats,
            log_norm,
            seed,
            known_mean: Vec::new(),
        };
        model.known_mean = model.grid_posterior_mean();
        model
    }

    pub fn measurements(&self) -> &[Vec<f64>] {
        &self.measurements
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn log_prior(x: &[f64]) -> f64 {
        -(LN_2PI + 2.0 * SENSOR_PRIOR_STD.ln())
            - 0.5 * (x[0] * x[0] + x[1] * x[1]) / (SENSOR_PRIOR_STD * SENSOR_PRIOR_STD)
    }

    /// Posterior mean from a `2001 x 2001` grid over `[-2, 9]^2`.
    pub fn grid_posterior_mean(&self) -> Vec<f64> {
        let n = SENSOR_GRID_POINTS;
        let h = (SENSOR_GRID_HI - SENSOR_GRID_LO) / (n - 1) as f64;
        let coords: Vec<f64> = (0..n).map(|i| SENSOR_GRID_LO + i as f64 * h).collect();
        let mut log_p = Vec::with_capacity(n * n);
        for &a in &coords {
            for &b in &coords {
                log_p.push(self.log_density(&[a, b]));
            }
        }
        let max = log_p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (mut z, mut m0, mut m1) = (0.0, 0.0, 0.0);
        for (i, &a) in coords.iter().enumerate() {
            for (j, &b) in coords.iter().enumerate() {
                let p = (log_p[i * n + j] - max).exp();
                z += p;
                m0 += p * a;
                m1 += p * b;
            }
        }
        vec![m0 / z, m1 / z]
    }

    /// `sensor_id,index,value` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "index,value,sensor_id")?;
        for (j, ys) in self.measurements.iter().enumerate() {
            for (r, y) in ys.iter().enumerate() {
                writeln!(out, "{},{},{}", r + 1, y, j + 1)?;
            }
        }
        Ok(())
    }
}

impl Target for SensorModel {
    fn dim(&self) -> usize {
        2
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        if x.len() != 2 || !x[0].is_finite() || !x[1].is_finite() {
            return f64::NEG_INFINITY;
        }
        let inv_two_var = 0.5 / (SENSOR_NOISE_STD * SENSOR_NOISE_STD);
        let mut sse = 0.0;
        for ((h, (sy, syy)), ys) in SENSOR_POSITIONS
            .iter()
            .zip(&self.stats)
            .zip(&self.measurements)
        {
            let g = range_measurement(x, h);
            sse += syy - 2.0 * g * sy + ys.len() as f64 * g * g;
        }
        self.log_norm
            - inv_two_var * sse
            - 0.5 * (x[0] * x[0] + x[1] * x[1]) / (SENSOR_PRIOR_STD * SENSOR_PRIOR_STD)
    }

    fn known_mean(&self) -> Option<&[f64]> {
        Some(&self.known_mean)
    }
}

/// Sensor data regenerated from `seed`, 60 measurements per sensor.
pub fn make_sensor_target(seed: u64) -> SensorModel {
    SensorModel::generate(seed, SENSOR_MEASUREMENTS)
}
