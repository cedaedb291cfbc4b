//! The built-in three-agent demonstration market used by the golden
//! transcript and the test suite.

use crate::market::Market;
use crate::matrix::Mat;

/// Product features: performance, design, brand (rows = products).
pub fn features() -> Mat {
    Mat::from_rows(&[
        vec![8.5, 1.5, 8.0],
        vec![1.5, 8.5, 7.5],
        vec![5.5, 5.5, 9.0],
    ])
    .expect("static data")
}

/// Agent feature weights (rows = agents).
pub fn preferences() -> Mat {
    Mat::from_rows(&[
        vec![8.0, 2.0, 7.0],
        vec![2.0, 8.0, 7.0],
        vec![5.0, 5.0, 8.0],
    ])
    .expect("static data")
}

pub fn capacities() -> Vec<usize> {
    vec![1, 1, 1]
}

pub fn market() -> Market {
    Market::validate(features(), preferences(), capacities()).expect("static market is valid")
}
