//! Zero-shot regression with side information.
//!
//! The crate fits regressors `f(x, s)` on instances `x` of observed targets,
//! each target described by a side-information vector `s`, and predicts for
//! targets never seen during training. The central piece is the DSIL kernel
//!
//! ```text
//! K((x, s), (x', s')) = 1 + <x, x'> + <s, s'> + Σ_i Σ_j (x_j s_i)(x'_j s'_i)
//! ```
//!
//! available in three numerically equivalent formulations
//! ([`kernels::DsilFormulation`]). Baselines, two-stage methods, synthetic
//! data generators and a zero-shot benchmark harness are included.
//!
//! ```
//! use zsk::datagen::toy_dataset;
//! use zsk::methods::{Method, ZeroShotRegressor};
//! use zsk::svr::SvrConfig;
//!
//! let ds = toy_dataset();
//! let cfg = SvrConfig::default().with_c(1e6).with_epsilon(0.01);
//! let model = ZeroShotRegressor::fit(&ds, "DSIL".parse().unwrap(), &cfg).unwrap();
//! let y = model.predict(&[3.0], &[2.0]).unwrap();
//! assert!((y - 12.0).abs() < 0.5);
//! ```

pub mod config;
pub mod data;
pub mod datagen;
pub mod error;
pub mod evaluation;
pub mod kernels;
pub mod methods;
pub mod persist;
pub mod svr;

pub use data::{load_dataset, save_dataset, SideInfoTable, TargetSlice, ZeroShotDataset};
pub use error::{Result, ZskError};
pub use kernels::{DsilFormulation, JointPoint, KernelSpec};
pub use methods::{Method, ZeroShotRegressor};
pub use svr::{SvrConfig, SvrModel};
