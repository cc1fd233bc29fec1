//! Shared fixtures for the criterion benches.

use std::sync::Arc;

use ncstokes_core::mesh::{Domain, Mesh};

/// `n x n` mesh of the default `[0, 2] x [0, 1]` domain.
pub fn mesh(n: usize) -> Arc<Mesh> {
    Arc::new(Mesh::uniform(Domain::default(), n, n).expect("valid mesh size"))
}
