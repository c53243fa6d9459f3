//! Point-process samplers for the vehicle data-extraction process.
//!
//! Three kinds of arrival stream feed the simulator: homogeneous Poisson,
//! non-homogeneous Poisson (sampled by thinning), and deterministic.
//! Sampler state is a counter-based generator, so every vehicle stream can be
//! given its own substream and replays are bit-identical for a fixed seed.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};
use crate::numerics::integrate;

/// Time-varying intensity for the non-homogeneous kind.
pub type IntensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum ProcessKind {
    /// Constant rate Λ; exponential interarrival gaps.
    HomogeneousPoisson { rate: f64 },
    /// Constant gap 1/rate between events.
    Deterministic { rate: f64 },
    /// Intensity Λ(t), thinned against a caller-supplied bound that must
    /// dominate Λ over `lookahead` seconds past the current time.
    NonhomogeneousPoisson {
        intensity: IntensityFn,
        intensity_sup: f64,
        lookahead: f64,
    },
}

impl fmt::Debug for ProcessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProcessKind::HomogeneousPoisson { rate } => {
                write!(f, "HomogeneousPoisson {{ rate: {rate} }}")
            }
            ProcessKind::Deterministic { rate } => write!(f, "Deterministic {{ rate: {rate} }}"),
            ProcessKind::NonhomogeneousPoisson {
                intensity_sup,
                lookahead,
                ..
            } => write!(
                f,
                "NonhomogeneousPoisson {{ intensity_sup: {intensity_sup}, lookahead: {lookahead} }}"
            ),
        }
    }
}

/// An arrival process description plus its stream seed.
#[derive(Debug, Clone)]
pub struct ArrivalProcess {
    pub kind: ProcessKind,
    pub seed: u64,
}

impl ArrivalProcess {
    pub fn homogeneous(rate: f64, seed: u64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::Argument(format!(
                "arrival rate must be positive and finite, got {rate}"
            )));
        }
        Ok(Self {
            kind: ProcessKind::HomogeneousPoisson { rate },
            seed,
        })
    }

    pub fn deterministic(rate: f64, seed: u64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::Argument(format!(
                "arrival rate must be positive and finite, got {rate}"
            )));
        }
        Ok(Self {
            kind: ProcessKind::Deterministic { rate },
            seed,
        })
    }

    pub fn nonhomogeneous(
        intensity: IntensityFn,
        intensity_sup: f64,
        lookahead: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(intensity_sup > 0.0) || !intensity_sup.is_finite() {
            return Err(Error::Argument(format!(
                "intensity bound must be positive and finite, got {intensity_sup}"
            )));
        }
        if !(lookahead > 0.0) {
            return Err(Error::Argument(format!(
                "lookahead window must be positive, got {lookahead}"
            )));
        }
        Ok(Self {
            kind: ProcessKind::NonhomogeneousPoisson {
                intensity,
                intensity_sup,
                lookahead,
            },
            seed,
        })
    }

    /// Sampler on substream 0.
    pub fn sampler(&self) -> ArrivalSampler {
        self.sampler_for_stream(0)
    }

    /// Independent sampler substream; distinct streams never share draws.
    pub fn sampler_for_stream(&self, stream: u64) -> ArrivalSampler {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        ArrivalSampler {
            kind: self.kind.clone(),
            rng,
        }
    }

    /// Expected number of events in `[a, b)`: the integral of the intensity.
    /// For the homogeneous and deterministic kinds this is `rate · (b - a)`.
    pub fn count_measure(&self, a: f64, b: f64) -> Result<f64> {
        if !(0.0 <= a) || a > b {
            return Err(Error::Interval { a, b });
        }
        match &self.kind {
            ProcessKind::HomogeneousPoisson { rate } | ProcessKind::Deterministic { rate } => {
                Ok(rate * (b - a))
            }
            ProcessKind::NonhomogeneousPoisson { intensity, .. } => {
                let f = intensity.clone();
                integrate(move |t| f(t), a, b, 1e-10)
            }
        }
    }
}

/// Stateful sampler; single-owner because the generator advances on use.
#[derive(Debug, Clone)]
pub struct ArrivalSampler {
    kind: ProcessKind,
    rng: ChaCha8Rng,
}

impl ArrivalSampler {
    /// Draws the gap to the next arrival after time `now`.
    pub fn sample_interarrival(&mut self, now: f64) -> Result<f64> {
        if !(now >= 0.0) {
            return Err(Error::Argument(format!(
                "current time must be >= 0, got {now}"
            )));
        }
        match &self.kind {
            ProcessKind::Deterministic { rate } => Ok(1.0 / rate),
            ProcessKind::HomogeneousPoisson { rate } => {
                let exp = Exp::new(*rate).expect("rate validated at construction");
                Ok(exp.sample(&mut self.rng))
            }
            ProcessKind::NonhomogeneousPoisson {
                intensity,
                intensity_sup,
                lookahead,
            } => {
                let sup = *intensity_sup;
                let exp = Exp::new(sup).expect("bound validated at construction");
                let mut t = now;
                loop {
                    t += exp.sample(&mut self.rng);
                    if t - now > *lookahead {
                        return Err(Error::UnboundedIntensity(format!(
                            "no candidate accepted within the certified window of {lookahead} s \
                             past t = {now}"
                        )));
                    }
                    let lam = intensity(t);
                    if !lam.is_finite() || lam < 0.0 {
                        return Err(Error::Domain(format!(
                            "intensity returned {lam} at t = {t}"
                        )));
                    }
                    if lam > sup * (1.0 + 1e-9) {
                        return Err(Error::UnboundedIntensity(format!(
                            "intensity {lam} at t = {t} exceeds the declared bound {sup}"
                        )));
                    }
                    if self.rng.random::<f64>() * sup < lam {
                        return Ok(t - now);
                    }
                }
            }
        }
    }
}
