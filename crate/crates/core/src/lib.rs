//! Exact Wasserstein projection of a discrete joint measure onto the couplings
//! of prescribed marginals.
//!
//! The projection ("shadow") is composed from per-block optimal transport
//! plans: each plan `γ_i ∈ Π(μ_i, ρ_i)` is disintegrated into a kernel, and the
//! kernels are glued along `ρ`. A dense LP over the multimarginal problem is
//! provided as an independent check, together with stability and
//! sample-complexity experiments and a command-line front end.
//!
//! Everything numeric is generic over [`Scalar`] (`f64` and `f32`); the
//! aliases below fix `f64`.
//!
//! ```
//! use shadowproj::{compose_shadow, Exponent, Marginals, Measure, JointMeasure, Metric};
//!
//! let spec = Metric::new(Exponent::Finite(2.0), vec![1, 1]).unwrap();
//! let rho = JointMeasure::new(Measure::dirac(vec![0.0, 0.0]).unwrap(), spec.clone()).unwrap();
//! let mu = Marginals::new(
//!     vec![Measure::dirac(vec![1.0]).unwrap(), Measure::dirac(vec![0.0]).unwrap()],
//!     &spec,
//! )
//! .unwrap();
//! let s = compose_shadow(&rho, &mu, &spec).unwrap();
//! assert_eq!(s.value, 1.0);
//! ```

pub mod cli;
pub mod complexity;
pub mod error;
pub mod fit;
pub mod instances;
pub mod io;
pub mod measures;
pub mod oracle;
pub mod ot;
pub mod plot;
pub mod rng;
pub mod scalar;
pub mod shadow;
pub mod stability;

pub use error::{Error, Result};
pub use measures::Exponent;
pub use oracle::project_oracle;
pub use ot::{solve as solve_transport, wasserstein};
pub use scalar::Scalar;
pub use shadow::{compose_shadow, is_map_induced};

pub type Measure = measures::DiscreteMeasure<f64>;
pub type JointMeasure = measures::ProductMeasure<f64>;
pub type Marginals = measures::MarginalVector<f64>;
pub type Metric = measures::MetricSpec<f64>;
pub type Plan = ot::TransportPlan<f64>;
pub type Shadow = shadow::ShadowResult<f64>;
pub type Certificate = oracle::ProjectionCertificate<f64>;
pub type Report = stability::StabilityReport<f64>;
