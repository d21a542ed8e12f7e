//! The twisted Bianchi identity on a non-soliton pair, under refinement.

use solitonkit::cli::studies::bianchi_study;
use solitonkit::soliton_core::GridModel;

fn main() -> solitonkit::Result<()> {
    let model = GridModel::ConformalTorus { seed: 7, amplitude: 0.3 };
    let study = bianchi_study(&model, &[32, 64, 128], 7)?;
    for row in &study.rows {
        println!("res {:>3}: residual {:.3e}, relative {:.3e}", row.resolution, row.residual, row.relative);
    }
    println!("refinement ratios {:.2?}", study.ratios);
    Ok(())
}
