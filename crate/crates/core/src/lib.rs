//! Monte-Carlo simulation and analysis of multiphoton harmonic generation
//! driven by light with strong photon-number fluctuations.
//!
//! The crate is organised along the optical chain:
//!
//! * [`lightmodel`]: source statistics (coherent, thermal, bright squeezed
//!   vacuum and the Gaussian-quadrature continuum between them), exact
//!   correlation functions and reproducible per-pulse sampling.
//! * [`nonlinear`]: absorber, harmonic generator, attenuator and beam sampler.
//! * [`detection`]: charge-integrating detectors, gated click-detector pairs
//!   and post-selection windows.
//! * [`analysis`]: correlation-function estimators with bootstrap errors,
//!   power-law fits, statistical efficiencies and harmonic g⁽²⁾ prediction.
//! * [`scenario`]: declarative scenario files, presets and the batch runner
//!   behind the `hgsim` command-line tool.

pub mod analysis;
pub mod detection;
pub mod error;
pub mod lightmodel;
pub mod nonlinear;
pub mod rng;
pub mod scenario;

pub use analysis::{Bootstrap, EstimateWithError, PowerLawFit};
pub use detection::{ChargeDetectorSpec, ClickPairSpec, Window};
pub use error::{Error, Result};
pub use lightmodel::{LightKind, LightModel, PulseEnsemble};
pub use nonlinear::StageSpec;
pub use scenario::ScenarioConfig;
