//! Numerical primitives shared by the statistical modules: SPD
//! factorization and solves, distribution quantiles, seeded multivariate
//! normal sampling, and empirical quantiles.

mod linalg;
mod quantile;
mod rng;
mod special;

pub use linalg::{cholesky, spd_solve, spd_solve_matrix, LowerTriangularFactor, SpdMatrix};
pub(crate) use linalg::factor_symmetric;
pub use quantile::{
    chi_square_cdf, chi_square_quantile, chi_square_sf, empirical_quantile, normal_cdf, normal_pdf,
    normal_quantile, normal_sf,
};
pub(crate) use quantile::order_statistic_index;
pub use rng::{mvn_draw, mvn_sample, RngStream};
pub use special::{gamma_p, gamma_q, ln_gamma};
