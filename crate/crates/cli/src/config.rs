use clap::ValueEnum;
use smoothdist_core::{Error, Result, WeightSide};

/// Largest modulus a report accepts; the reconstruction check and spectrum
/// cost phi(q)^2 character evaluations.
pub const MAX_MODULUS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Side {
    Lower,
    Upper,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Lower => "lower",
            Side::Upper => "upper",
        }
    }
}

impl From<Side> for WeightSide {
    fn from(side: Side) -> WeightSide {
        match side {
            Side::Lower => WeightSide::Lower,
            Side::Upper => WeightSide::Upper,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

impl OutputFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            OutputFormat::Json => "json",
            OutputFormat::Csv => "csv",
        }
    }
}

/// One run's worth of parameters, shared by every subcommand.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub x: f64,
    pub y: f64,
    pub q: u64,
    pub epsilon: f64,
    pub side: Side,
    /// Order bound for the problem-character scan.
    pub b_order: u64,
    /// Multiplier on the default flagging threshold sqrt(u) / (40 B^2).
    pub threshold_scale: f64,
    /// Central-band parameter; defaults to 1/sqrt(epsilon) when absent.
    pub u_central: Option<f64>,
    pub format: OutputFormat,
    pub seed: u64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.x.is_finite() && self.x > 1.0) {
            return Err(Error::domain(format!("x = {} must be a finite number > 1", self.x)));
        }
        if !(self.y.is_finite() && self.y >= 2.0) {
            return Err(Error::domain(format!("y = {} must be a finite number >= 2", self.y)));
        }
        if self.q < 1 {
            return Err(Error::domain("q must be >= 1"));
        }
        if self.q > MAX_MODULUS {
            return Err(Error::capacity(format!(
                "q = {} exceeds the report limit {MAX_MODULUS}",
                self.q
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(Error::domain(format!(
                "epsilon = {} must lie strictly between 0 and 1/2",
                self.epsilon
            )));
        }
        if self.b_order < 1 {
            return Err(Error::domain("B must be >= 1"));
        }
        if !(self.threshold_scale.is_finite() && self.threshold_scale > 0.0) {
            return Err(Error::domain(format!(
                "threshold scale {} must be a finite number > 0",
                self.threshold_scale
            )));
        }
        if let Some(u) = self.u_central {
            if !(u.is_finite() && u > 0.0) {
                return Err(Error::domain(format!("U = {u} must be a finite number > 0")));
            }
        }
        Ok(())
    }

    /// The central-band parameter as configured, before any clamping to the
    /// admissible range [1, sqrt(u)].
    pub fn u_requested(&self) -> f64 {
        self.u_central.unwrap_or(1.0 / self.epsilon.sqrt())
    }
}
