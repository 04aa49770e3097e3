//! Library surface of the `gdrm` command line tool.
//!
//! The binary is a thin argument parser over these modules:
//!
//! - [`container`]: the on-disk capture format for a packet stream
//! - [`channel`]: a seeded lossy-channel simulation over a container
//! - [`pipeline`]: directory tree to container and back
//! - [`inspect`]: human-readable dumps of a container
//!
//! Everything here is also exercised directly by the integration
//! tests, so the binary stays free of logic worth testing.

pub mod channel;
pub mod container;
pub mod inspect;
pub mod pipeline;
