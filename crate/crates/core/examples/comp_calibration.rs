//! Fits the coefficient tying the linearized residuals together and checks
//! the resulting identity at the round sphere.

use solitonkit::cli::studies::comp_study;
use solitonkit::soliton_core::{GridModel, BASE_FACTOR};

fn main() -> solitonkit::Result<()> {
    let study = comp_study(4, 7, 32, &GridModel::unit_sphere(), &[32, 64], BASE_FACTOR)?;
    for row in &study.comm_rows {
        let cands: Vec<String> = row.candidates.iter().map(|(k, w)| format!("k = {k}: {w:.2e}")).collect();
        println!("res {:>3}: {}", row.resolution, cands.join(", "));
    }
    println!("refinement ratios {:.2?}", study.comm_ratios);
    println!("{}", study.finding);
    Ok(())
}
