//! Instance generators and file ingestion.

mod duplicated;
mod hard;
mod linear;
mod link;
mod softplus;

pub use duplicated::{make_duplicated_instance, ChainSum, DuplicatedInstance};
pub use hard::{
    chain_alpha, default_dim, make_hard_instance, prog_alpha, sample_orthogonal, HardInstance,
    HardInstanceConfig, ProgressReport,
};
pub use linear::{load_linear_csv, parse_linear_csv, LinearInstance, LINEAR_CSV_HEADER};
pub use link::{link_psi, Link};
pub use softplus::SoftplusInstance;
