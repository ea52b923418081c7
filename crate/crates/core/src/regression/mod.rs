//! Regularized estimation: centering/scaling, the λ grid, lasso and
//! non-negative lasso paths, the elastic net with cross-validation, and the
//! OLS refit scored by BIC.

mod cd;
mod center;
mod enet;
mod grid;
mod ols;

pub use cd::{
    lasso_path, lasso_path_with, objective, solve_penalized, Convergence, LassoPath, PathDiagnostics,
    SolveStats, SolverOptions,
};
pub use center::{center_and_scale, CenteredData};
pub use enet::{
    elastic_net_cv, elastic_net_cv_with, elastic_net_lambda_grid, fit_elastic_net, CvPoint, EnetProblem, Gram,
    ElasticNetFit, ElasticNetOptions, DEFAULT_ALPHAS,
};
pub use grid::LambdaGrid;
pub use ols::{bic, ols_refit_bic, RefitModel, RSS_FLOOR};
