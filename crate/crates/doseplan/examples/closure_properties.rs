//! Minimum-entropy closure in isolation.
//!
//! Prints the Eddington factor and flux-aligned diffusion tensor entries
//! across the anisotropy range, from the isotropic limit (chi = 1/3,
//! D = I/3) to the free-streaming limit (chi = 1, D = f f^T / |f|^2).
//!
//! Run with: cargo run --release --example closure_properties

use doseplan::physics::{eddington_factor, eddington_tensor};

fn main() -> doseplan::Result<()> {
    println!("{:>6}  {:>10}  {:>10}  {:>10}  {:>10}", "|f|", "chi", "D_xx", "D_yy", "trace");
    for i in 0..=10 {
        let f = i as f64 / 10.0;
        // keep strictly inside the realizable ball at the endpoint
        let fx = f.min(1.0 - 1e-12);
        let chi = eddington_factor(fx)?;
        let t = eddington_tensor(1.0, [fx, 0.0])?;
        let trace = t.dxx + t.dyy + t.dzz;
        println!("{f:>6.2}  {chi:>10.6}  {:>10.6}  {:>10.6}  {trace:>10.6}", t.dxx, t.dyy);
    }
    Ok(())
}
