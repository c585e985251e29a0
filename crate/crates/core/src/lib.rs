pub mod bn;
pub mod cli;
pub mod interchange;
pub mod metrics;
pub mod model;
pub mod service;
