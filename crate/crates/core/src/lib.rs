//! Λ-coalescents and the flows that carry them: exchangeable partitions,
//! bridges, the lookdown graph and the Λ-Fleming-Viot process.

pub mod bridge;
pub mod cli;
pub mod coalescent;
pub mod flemingviot;
pub mod lookdown;
pub mod measure;
pub mod partition;
pub mod quadrature;
pub mod rates;
pub mod rng;
pub mod validate;
