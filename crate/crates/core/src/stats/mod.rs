//! Statistics kit: Welch and Kolmogorov–Smirnov tests, kernel densities,
//! GSE bootstrap, ordering-effect analysis and the special functions they
//! need.

pub mod bootstrap;
pub mod kde;
pub mod ks;
pub mod ordering;
pub mod special;
pub mod welch;

pub use bootstrap::{bootstrap_gse_diff, BootstrapConfig, BootstrapResult};
pub use kde::{kde, silverman_bandwidth, DensityCurve, KdeOptions};
pub use ks::{ks_statistic, ks_two_sample};
pub use ordering::{ordering_effect_analysis, OrderingAnalysis, OrderingKey, OrderingTest};
pub use special::{ln_gamma, regularized_incomplete_beta, student_t_cdf};
pub use welch::{welch_t, welch_t_from_moments, welch_t_from_summary, Alternative, Moments, TestResult};
