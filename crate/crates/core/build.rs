// LAPACK and BLAS come from the system OpenBLAS; override the library name
// with CPD_LAPACK_LIB (e.g. "lapack" for reference LAPACK plus BLAS).
fn main() {
    println!("cargo:rerun-if-env-changed=CPD_LAPACK_LIB");
    let lib = std::env::var("CPD_LAPACK_LIB").unwrap_or_else(|_| "openblas".into());
    for name in lib.split(',') {
        println!("cargo:rustc-link-lib=dylib={}", name.trim());
    }
}
