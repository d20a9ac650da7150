//! Backend-free stand-in for the registry crate of the same name. The solver
//! only needs the crate to exist; `crates/core/build.rs` links the system
//! BLAS/LAPACK libraries directly.
#![no_std]
