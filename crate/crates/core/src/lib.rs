//! Decentralized linearly separable computation over a prime field.
//!
//! `N` workers each hold a cyclic subset of `K` datasets. Any `Nr` of them
//! respond, broadcast coded combinations of their local messages, and every
//! worker recovers the `Kc` demanded linear combinations `F W`.

pub mod assignment;
pub mod costs;
pub mod example1;
pub mod field;
pub mod linalg;
pub mod scheme;
pub mod seed;
pub mod simulator;
pub mod verify;

pub use assignment::{mod1, CyclicAssignment, ParamError, SystemParams};
pub use costs::{cost_table, r_cec, r_cyc_star, r_dec, Cost, CostPoint, Sweep};
pub use field::{FieldElement, FieldError, FieldModulus, DEFAULT_Q};
pub use linalg::{LinalgError, Matrix, SubspaceBasis};
pub use scheme::{DemandMatrix, MessageSet, Regime, SchemeError, WorkerEncoding};
pub use simulator::{exhaustive_stragglers, SchemeKind, SimConfig, SimError, SimulationReport};
