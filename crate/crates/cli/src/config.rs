//! Flat `key=value` experiment configuration.
//!
//! One key per line; repeating a list key extends its grid. `#` starts a
//! comment and a `[id]` line is shorthand for `experiment=id`. Keys absent
//! from the text take the defaults of the chosen experiment.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use pmc_core::ResampleKernel;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid grid: {0}")]
    Grid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentId {
    Zc1d,
    Mog5_2d,
    Mog3Nd,
    Ar4,
    Sensors,
    VarianceOrdering,
    DimensionSweep,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 7] = [
        Self::Zc1d,
        Self::Mog5_2d,
        Self::Mog3Nd,
        Self::Ar4,
        Self::Sensors,
        Self::VarianceOrdering,
        Self::DimensionSweep,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Zc1d => "zc_1d",
            Self::Mog5_2d => "mog5_2d",
            Self::Mog3Nd => "mog3_nd",
            Self::Ar4 => "ar4",
            Self::Sensors => "sensors",
            Self::VarianceOrdering => "variance_ordering",
            Self::DimensionSweep => "dimension_sweep",
        }
    }

    /// Static normalizing-constant studies on the 1D bimodal target.
    pub fn is_z_study(self) -> bool {
        matches!(self, Self::Zc1d | Self::VarianceOrdering)
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| format!("unknown experiment '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeName {
    Standard,
    Dm,
    Gr,
    Lr,
    Smc,
    DmSmc,
    GrSmc,
    LrSmc,
    /// Baseline SMC on the tempered ladder.
    SmcTempered,
}

impl SchemeName {
    pub const ALL: [SchemeName; 9] = [
        Self::Standard,
        Self::Dm,
        Self::Gr,
        Self::Lr,
        Self::Smc,
        Self::DmSmc,
        Self::GrSmc,
        Self::LrSmc,
        Self::SmcTempered,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Standard => "Standard",
            Self::Dm => "DM",
            Self::Gr => "GR",
            Self::Lr => "LR",
            Self::Smc => "SMC",
            Self::DmSmc => "DM-SMC",
            Self::GrSmc => "GR-SMC",
            Self::LrSmc => "LR-SMC",
            Self::SmcTempered => "SMC-T",
        }
    }

    /// Schemes whose proposals draw one sample each, so `K` does not apply.
    pub fn single_sample(self) -> bool {
        matches!(
            self,
            Self::Standard | Self::Dm | Self::Smc | Self::DmSmc | Self::SmcTempered
        )
    }

    pub fn is_smc(self) -> bool {
        matches!(
            self,
            Self::Smc | Self::DmSmc | Self::GrSmc | Self::LrSmc | Self::SmcTempered
        )
    }
}

impl fmt::Display for SchemeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeName {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown scheme '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub experiment: ExperimentId,
    pub schemes: Vec<SchemeName>,
    pub n: Vec<usize>,
    pub k: Vec<usize>,
    pub sigma: Vec<f64>,
    /// Total target evaluations per run.
    pub budget: u64,
    pub reps: usize,
    pub seed: u64,
    pub output: String,
    /// State dimensions, used by the `D`-dimensional mixture experiments.
    pub dims: Vec<usize>,
    /// Scenarios of the 1D bimodal studies.
    pub scenarios: Vec<u8>,
    pub kernel: ResampleKernel,
    pub mh_steps: usize,
    /// Lower corner of the initial-mean box, per coordinate.
    pub init_lo: f64,
    pub init_hi: f64,
}

pub const DEFAULT_SEED: u64 = 20170101;
const ALL_PMC: [SchemeName; 4] = [
    SchemeName::Standard,
    SchemeName::Dm,
    SchemeName::Gr,
    SchemeName::Lr,
];
const ALL_SMC: [SchemeName; 4] = [
    SchemeName::Smc,
    SchemeName::DmSmc,
    SchemeName::GrSmc,
    SchemeName::LrSmc,
];

impl ExperimentSpec {
    /// The published grid of each experiment.
    pub fn defaults(experiment: ExperimentId) -> Self {
        let base = Self {
            experiment,
            schemes: ALL_PMC.to_vec(),
            n: vec![100],
            k: vec![20],
            sigma: vec![5.0],
            budget: 200_000,
            reps: 100,
            seed: DEFAULT_SEED,
            output: format!("{experiment}.csv"),
            dims: Vec::new(),
            scenarios: Vec::new(),
            kernel: ResampleKernel::Multinomial,
            mh_steps: 1,
            init_lo: -6.0,
            init_hi: 6.0,
        };
        match experiment {
            ExperimentId::Zc1d => Self {
                schemes: Vec::new(),
                n: vec![2],
                k: Vec::new(),
                sigma: Vec::new(),
                budget: 0,
                reps: 200_000,
                scenarios: vec![1, 2],
                init_lo: 0.0,
                init_hi: 0.0,
                ..base
            },
            ExperimentId::VarianceOrdering => Self {
                scenarios: vec![2],
                ..Self::defaults(ExperimentId::Zc1d)
            }
            .renamed(experiment),
            ExperimentId::Mog5_2d => Self {
                schemes: ALL_PMC.iter().chain(&ALL_SMC).copied().collect(),
                k: vec![2, 5, 20, 100, 500],
                sigma: vec![1.0, 2.0, 5.0, 10.0, 20.0, 70.0],
                reps: 500,
                init_lo: -4.0,
                init_hi: 4.0,
                ..base
            },
            ExperimentId::Mog3Nd => Self {
                schemes: ALL_PMC
                    .iter()
                    .chain(&ALL_SMC)
                    .copied()
                    .chain([SchemeName::SmcTempered])
                    .collect(),
                n: vec![100, 1000],
                k: vec![2, 10, 20, 100],
                sigma: vec![1.0, 5.0, 20.0],
                reps: 200,
                dims: vec![10],
                ..base
            },
            ExperimentId::Ar4 => Self {
                schemes: ALL_PMC.to_vec(),
                n: vec![100, 1000, 5000],
                k: vec![5, 10, 50, 100],
                sigma: vec![5.0],
                reps: 500,
                ..base
            },
            ExperimentId::Sensors => Self {
                n: vec![100, 500],
                k: vec![20, 50, 100, 200],
                sigma: vec![1.0, 2.0],
                reps: 500,
                init_lo: 1.0,
                init_hi: 5.0,
                ..base
            },
            ExperimentId::DimensionSweep => Self {
                dims: (1..=50).collect(),
                ..base
            },
        }
    }

    fn renamed(mut self, experiment: ExperimentId) -> Self {
        self.experiment = experiment;
        self.output = format!("{experiment}.csv");
        self
    }

    /// Check the grid; the message names the first offending entry.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Grid(msg));
        if self.reps == 0 {
            return bad("R=0".into());
        }
        if self.n.is_empty() || self.n.contains(&0) {
            return bad(format!(
                "N={:?} must be a nonempty list of positive counts",
                self.n
            ));
        }
        if self.experiment.is_z_study() {
            if self.scenarios.is_empty() {
                return bad("scenario list is empty".into());
            }
            if let Some(s) = self.scenarios.iter().find(|s| !matches!(s, 1 | 2)) {
                return bad(format!("scenario={s} (expected 1 or 2)"));
            }
            if self.n != [2] {
                return bad(format!(
                    "N={:?} (the bimodal population has 2 proposals)",
                    self.n
                ));
            }
            return Ok(());
        }
        if self.schemes.is_empty() {
            return bad("scheme list is empty".into());
        }
        if self.k.contains(&0) {
            return bad("K=0".into());
        }
        if self.k.is_empty() && self.schemes.iter().any(|s| !s.single_sample()) {
            return bad("K list is empty but a multi-sample scheme is selected".into());
        }
        if let Some(s) = self.sigma.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return bad(format!("sigma={s}"));
        }
        if self.sigma.is_empty() {
            return bad("sigma list is empty".into());
        }
        if self.budget == 0 {
            return bad("L=0".into());
        }
        if !(self.init_lo.is_finite() && self.init_hi.is_finite() && self.init_lo <= self.init_hi) {
            return bad(format!("init box [{}, {}]", self.init_lo, self.init_hi));
        }
        let uses_dims = matches!(
            self.experiment,
            ExperimentId::Mog3Nd | ExperimentId::DimensionSweep
        );
        if uses_dims {
            if self.dims.is_empty() {
                return bad("dim list is empty".into());
            }
            if let Some(d) = self.dims.iter().find(|d| !(1..=50).contains(*d)) {
                return bad(format!("dim={d} (expected 1..=50)"));
            }
        } else if !self.dims.is_empty() {
            return bad(format!("dim is not used by {}", self.experiment));
        }
        if self.schemes.contains(&SchemeName::SmcTempered) && !uses_dims {
            return bad(format!(
                "scheme=SMC-T needs a tempering ladder, which {} lacks",
                self.experiment
            ));
        }
        Ok(())
    }
}

fn kernel_name(k: ResampleKernel) -> &'static str {
    match k {
        ResampleKernel::Multinomial => "multinomial",
        ResampleKernel::Residual => "residual",
        ResampleKernel::Stratified => "stratified",
    }
}

fn parse_kernel(s: &str) -> Result<ResampleKernel, String> {
    match s {
        "multinomial" => Ok(ResampleKernel::Multinomial),
        "residual" => Ok(ResampleKernel::Residual),
        "stratified" => Ok(ResampleKernel::Stratified),
        _ => Err(format!("unknown kernel '{s}'")),
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    v.parse()
        .map_err(|e| format!("{key}: cannot parse '{v}': {e}"))
}

/// Accepts plain integers and scientific shorthand such as `2e5`.
fn parse_count(key: &str, v: &str) -> Result<u64, String> {
    if let Ok(n) = v.parse::<u64>() {
        return Ok(n);
    }
    let f: f64 = parse_num(key, v)?;
    if f >= 0.0 && f.fract() == 0.0 && f < u64::MAX as f64 {
        Ok(f as u64)
    } else {
        Err(format!("{key}: '{v}' is not a nonnegative integer"))
    }
}

const KEYS: [&str; 15] = [
    "experiment",
    "scheme",
    "N",
    "K",
    "sigma",
    "L",
    "R",
    "seed",
    "output",
    "dim",
    "scenario",
    "kernel",
    "mh_steps",
    "init_lo",
    "init_hi",
];

pub fn parse_config(text: &str) -> Result<ExperimentSpec, ConfigError> {
    parse_config_with(text, None)
}

/// Parse, letting `experiment` take precedence over the text's own choice.
pub fn parse_config_with(
    text: &str,
    experiment: Option<ExperimentId>,
) -> Result<ExperimentSpec, ConfigError> {
    let mut entries: Vec<(usize, String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(inner) = content.strip_prefix('[') {
            let id = inner.strip_suffix(']').ok_or_else(|| ConfigError::Parse {
                line,
                msg: format!("unterminated section header '{content}'"),
            })?;
            entries.push((line, "experiment".into(), id.trim().into()));
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Parse {
            line,
            msg: format!("expected key=value, found '{content}'"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(ConfigError::Parse {
                line,
                msg: format!("unknown key '{key}'"),
            });
        }
        if value.is_empty() {
            return Err(ConfigError::Parse {
                line,
                msg: format!("empty value for '{key}'"),
            });
        }
        entries.push((line, key.into(), value.into()));
    }

    let mut chosen = None;
    for (line, key, value) in &entries {
        if key == "experiment" {
            let id: ExperimentId = value
                .parse()
                .map_err(|msg| ConfigError::Parse { line: *line, msg })?;
            if chosen.is_some_and(|c| c != id) {
                return Err(ConfigError::Parse {
                    line: *line,
                    msg: "one config describes one experiment".into(),
                });
            }
            chosen = Some(id);
        }
    }
    let id = experiment.or(chosen).ok_or_else(|| ConfigError::Parse {
        line: 0,
        msg: "no experiment selected".into(),
    })?;

    let mut spec = ExperimentSpec::defaults(id);
    let mut seen: Vec<&str> = Vec::new();
    for (line, key, value) in &entries {
        let at = |msg: String| ConfigError::Parse { line: *line, msg };
        let first = !seen.contains(&key.as_str());
        let scalar_repeat = || at(format!("'{key}' takes a single value"));
        match key.as_str() {
            "experiment" => {}
            "scheme" => {
                if first {
                    spec.schemes.clear();
                }
                spec.schemes.push(value.parse().map_err(at)?);
            }
            "N" => {
                if first {
                    spec.n.clear();
                }
                spec.n.push(parse_count(key, value).map_err(at)? as usize);
            }
            "K" => {
                if first {
                    spec.k.clear();
                }
                spec.k.push(parse_count(key, value).map_err(at)? as usize);
            }
            "sigma" => {
                if first {
                    spec.sigma.clear();
                }
                spec.sigma.push(parse_num(key, value).map_err(at)?);
            }
            "dim" => {
                if first {
                    spec.dims.clear();
                }
                spec.dims
                    .push(parse_count(key, value).map_err(at)? as usize);
            }
            "scenario" => {
                if first {
                    spec.scenarios.clear();
                }
                spec.scenarios.push(parse_num(key, value).map_err(at)?);
            }
            _ if !first => return Err(scalar_repeat()),
            "L" => spec.budget = parse_count(key, value).map_err(at)?,
            "R" => spec.reps = parse_count(key, value).map_err(at)? as usize,
            "seed" => spec.seed = parse_num(key, value).map_err(at)?,
            "output" => spec.output = value.clone(),
            "kernel" => spec.kernel = parse_kernel(value).map_err(at)?,
            "mh_steps" => spec.mh_steps = parse_count(key, value).map_err(at)? as usize,
            "init_lo" => spec.init_lo = parse_num(key, value).map_err(at)?,
            "init_hi" => spec.init_hi = parse_num(key, value).map_err(at)?,
            _ => unreachable!("key list checked above"),
        }
        seen.push(key.as_str());
    }
    spec.validate()?;
    Ok(spec)
}

/// Serialize a spec so that `parse_config(&emit(s)) == s`.
pub fn emit(spec: &ExperimentSpec) -> String {
    let mut out = String::new();
    let mut line = |k: &str, v: &dyn fmt::Display| {
        let _ = writeln!(out, "{k}={v}");
    };
    line("experiment", &spec.experiment);
    for s in &spec.schemes {
        line("scheme", s);
    }
    for n in &spec.n {
        line("N", n);
    }
    for k in &spec.k {
        line("K", k);
    }
    for s in &spec.sigma {
        line("sigma", s);
    }
    for d in &spec.dims {
        line("dim", d);
    }
    for s in &spec.scenarios {
        line("scenario", s);
    }
    line("L", &spec.budget);
    line("R", &spec.reps);
    line("seed", &spec.seed);
    line("output", &spec.output);
    line("kernel", &kernel_name(spec.kernel));
    line("mh_steps", &spec.mh_steps);
    line("init_lo", &spec.init_lo);
    line("init_hi", &spec.init_hi);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mog5_defaults() {
        let s = parse_config("experiment=mog5_2d").unwrap();
        assert_eq!(s.n, vec![100]);
        assert_eq!(s.budget, 200_000);
        assert_eq!(s.sigma, vec![1.0, 2.0, 5.0, 10.0, 20.0, 70.0]);
        assert_eq!(s.reps, 500);
        for scheme in ALL_PMC.iter().chain(&ALL_SMC) {
            assert!(s.schemes.contains(scheme));
        }
    }

    #[test]
    fn zero_k_is_rejected() {
        assert!(matches!(
            parse_config("experiment=mog5_2d\nK=0"),
            Err(ConfigError::Grid(_))
        ));
    }

    #[test]
    fn every_default_validates_and_round_trips() {
        for id in ExperimentId::ALL {
            let spec = ExperimentSpec::defaults(id);
            spec.validate().unwrap();
            assert_eq!(parse_config(&emit(&spec)).unwrap(), spec, "{id}");
        }
    }

    #[test]
    fn repeated_keys_form_grids() {
        let s = parse_config("[ar4]\n# comment\nN=100\nN=1000  # trailing\nK=100\nsigma=5\nL=2e5")
            .unwrap();
        assert_eq!(s.experiment, ExperimentId::Ar4);
        assert_eq!(s.n, vec![100, 1000]);
        assert_eq!(s.k, vec![100]);
        assert_eq!(s.budget, 200_000);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_config("experiment=ar4\n\nbogus=1").unwrap_err();
        assert_eq!(
            err,
            ConfigError::Parse {
                line: 3,
                msg: "unknown key 'bogus'".into()
            }
        );
        let err = parse_config("experiment=ar4\nR=1\nR=2").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 3, .. }));
        let err = parse_config("experiment=ar4\nsigma=abc").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 2, .. }));
        assert!(parse_config("N=5").is_err());
    }

    #[test]
    fn override_takes_precedence() {
        let s = parse_config_with("experiment=ar4\nR=3", Some(ExperimentId::Sensors)).unwrap();
        assert_eq!(s.experiment, ExperimentId::Sensors);
        assert_eq!(s.reps, 3);
    }

    #[test]
    fn tempering_needs_a_ladder() {
        assert!(parse_config("experiment=mog5_2d\nscheme=SMC-T").is_err());
        assert!(parse_config("experiment=mog3_nd\nscheme=SMC-T").is_ok());
    }
}
