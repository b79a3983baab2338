//! Gaussian scene representation, initialization and PLY storage.

pub mod cloud;
pub mod init;
pub mod ply;
pub mod sh;

pub use cloud::{bounding_radius, covariance_from_params, density_at, Gaussian, GaussianCloud, SH_LEN};
pub use init::init_from_points;
pub use ply::{load_ply, read_ply, save_ply, write_ply};
pub use sh::{sh_to_rgb, ShBasis};
