//! Numerical verification of metric connections with torsion on
//! pseudo-Riemannian coordinate charts.
//!
//! The library builds explicit Lorentzian (and general pseudo-Riemannian)
//! metrics from closed-form expressions, equips them with metric connections
//! whose torsion splits into a vectorial and a totally skew part, and then
//! certifies curvature and parallelism identities numerically at sampled
//! chart points. A catalog of ready-made charts, a geodesic integrator with
//! blow-up diagnostics, and a check runner with reproducible JSON reports sit
//! on top.

pub mod catalog;
pub mod chart;
pub mod check;
pub mod connection;
pub mod expr;
pub mod geodesic;
pub mod jsonio;
pub mod lorentz;
pub mod sample;
pub mod synth;
pub mod tensor;
pub mod torsion;

pub use chart::{MetricSpec, MetricValue, WittFrame};
pub use expr::{Expr, Jet2};
pub use tensor::{MultiForm, Tensor3, Tensor4, Tensor5};
