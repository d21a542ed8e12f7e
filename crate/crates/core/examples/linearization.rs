//! Assembled linearization of the soliton residual against central differences.

use solitonkit::cli::studies::linearization_study;
use solitonkit::soliton_core::{GridModel, BASE_FACTOR};

fn main() -> solitonkit::Result<()> {
    let study = linearization_study(&GridModel::unit_sphere(), &[32, 64], &[1e-3, 1e-4], 4, 7, BASE_FACTOR)?;
    for row in &study.rows {
        println!("res {:>3} eps {:.0e}: worst {:.3e}, mean {:.3e}, max |dW| {:.1e}", row.resolution, row.eps, row.worst, row.mean, row.dw_max);
    }
    for row in &study.alt_rows {
        println!("res {:>3}: unsimplified form differs by {:.3e}", row.resolution, row.worst);
    }
    Ok(())
}
