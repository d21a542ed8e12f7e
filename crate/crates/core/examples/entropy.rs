//! Entropy of the normalized round sphere and its first variation.

use solitonkit::cli::studies::entropy_check;
use solitonkit::soliton_core::{GridModel, BASE_FACTOR};

fn main() -> solitonkit::Result<()> {
    let check = entropy_check(&GridModel::unit_sphere(), 64, 6, 7, BASE_FACTOR)?;
    println!("f = {:.10} (log 2 = {:.10})", check.f_value, 2f64.ln());
    println!("W = {:.6}, expected {:.6}, error {:.2e}", check.w, check.expected_w, check.w_error);
    println!("residual |S1| = {:.2e}, |S2| = {:.2e}, tolerance {:.2e}", check.residual[0], check.residual[1], check.certificate.tolerance);
    let dw: Vec<String> = check.dw.iter().map(|x| format!("{x:.2e}")).collect();
    println!("|dW| along tangent directions: {}", dw.join(", "));
    Ok(())
}
