fn main() {
    // Clarabel's SDP support calls into system LAPACK/BLAS.
    println!("cargo:rustc-link-lib=lapack");
    println!("cargo:rustc-link-lib=blas");
}
