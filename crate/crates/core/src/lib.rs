//! Nonmonotone descent with Zhang-Hager averaging: the averaged-decrease
//! framework, three solvers that fit it, and checkers that verify solver
//! traces against the framework conditions and the predicted KL rates.
//!
//! ```
//! use zhd_core::problems::{make_test_problem, ParamMap};
//! use zhd_core::solvers::{pgm_solve, PgmParams};
//! use zhd_core::conformance::{run_conformance, ConformanceOptions};
//!
//! let p = make_test_problem("lasso", &ParamMap::new()).unwrap();
//! let trace = pgm_solve(p.composite().unwrap(), &p.x0, &PgmParams::default()).unwrap();
//! let report = run_conformance(&trace, &ConformanceOptions::default()).unwrap();
//! assert!(report.sandwich.passed);
//! ```

pub mod averager;
pub mod conformance;
pub mod constants;
pub mod error;
pub mod kl;
pub mod problems;
pub mod schedule;
pub mod solvers;
pub mod trace;
pub mod vector;

pub use averager::{ZhAveragerP, ZhAveragerQ};
pub use error::{Error, Result};
pub use kl::KlProfile;
pub use schedule::{ErrorSchedule, PositiveSequence, SumBehavior};
pub use trace::{Trace, TraceRecord};
pub use vector::Vector;
