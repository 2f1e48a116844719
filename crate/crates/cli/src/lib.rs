//! Driver for the Bianchi group pipeline: reports, cache and the bundled expected values.

pub mod expected;
pub mod report;
pub mod verify;
