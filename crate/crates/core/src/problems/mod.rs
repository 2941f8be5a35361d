//! Problem generators: 2-D test functions, the noisy regression stream and
//! online convex quadratics.

mod online_convex;
mod regression;
mod test_functions;

pub use online_convex::{make_online_convex_losses, OnlineConvexSpec, QuadraticLoss};
pub use regression::{
    generate_regression_stream, regression_target, train_regression, RegressionBatch, RegressionRun,
    RegressionSpec, RegressionStream,
};
pub use test_functions::{
    eval_test_function, inject_coordinate_noise, run_test_function, TestFunction, TestFunctionRun,
    TestFunctionSpec, DEFAULT_NOISE_RATIOS, NOISE_HALF_WIDTH,
};
