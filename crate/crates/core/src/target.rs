use std::fmt;
use std::sync::Arc;

/// An unnormalized log density `log pi(x)` on `R^dim`.
///
/// Implementations return `-inf` where the density vanishes and never NaN.
/// `known_z` and `known_mean` are only used for scoring estimates.
pub trait Target: Send + Sync {
    fn dim(&self) -> usize;

    fn log_density(&self, x: &[f64]) -> f64;

    fn known_z(&self) -> Option<f64> {
        None
    }

    fn known_mean(&self) -> Option<&[f64]> {
        None
    }
}

impl<T: Target + ?Sized> Target for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn log_density(&self, x: &[f64]) -> f64 {
        (**self).log_density(x)
    }
    fn known_z(&self) -> Option<f64> {
        (**self).known_z()
    }
    fn known_mean(&self) -> Option<&[f64]> {
        (**self).known_mean()
    }
}

impl<T: Target + ?Sized> Target for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn log_density(&self, x: &[f64]) -> f64 {
        (**self).log_density(x)
    }
    fn known_z(&self) -> Option<f64> {
        (**self).known_z()
    }
    fn known_mean(&self) -> Option<&[f64]> {
        (**self).known_mean()
    }
}

type LogDensityFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A target built from a closure.
#[derive(Clone)]
pub struct FnTarget {
    dim: usize,
    f: Arc<LogDensityFn>,
    known_z: Option<f64>,
    known_mean: Option<Vec<f64>>,
}

impl FnTarget {
    pub fn new(dim: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            dim,
            f: Arc::new(f),
            known_z: None,
            known_mean: None,
        }
    }

    pub fn with_known_z(mut self, z: f64) -> Self {
        self.known_z = Some(z);
        self
    }

    pub fn with_known_mean(mut self, mean: Vec<f64>) -> Self {
        self.known_mean = Some(mean);
        self
    }
}

impl fmt::Debug for FnTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnTarget")
            .field("dim", &self.dim)
            .field("known_z", &self.known_z)
            .field("known_mean", &self.known_mean)
            .finish_non_exhaustive()
    }
}

impl Target for FnTarget {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let v = (self.f)(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }

    fn known_z(&self) -> Option<f64> {
        self.known_z
    }

    fn known_mean(&self) -> Option<&[f64]> {
        self.known_mean.as_deref()
    }
}

/// Wraps a target and counts evaluations. One counter per run.
pub struct CountingTarget<'a> {
    inner: &'a dyn Target,
    evals: u64,
}

impl<'a> CountingTarget<'a> {
    pub fn new(inner: &'a dyn Target) -> Self {
        Self { inner, evals: 0 }
    }

    #[inline]
    pub fn log_density(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        self.inner.log_density(x)
    }

    pub fn evals(&self) -> u64 {
        self.evals
    }

    pub fn target(&self) -> &'a dyn Target {
        self.inner
    }
}
