//! Splits random symmetric tensors into a slice part and a Lie-derivative part.

use solitonkit::cli::studies::slice_study;
use solitonkit::soliton_core::GridModel;

fn main() -> solitonkit::Result<()> {
    for model in [GridModel::standard_torus(), GridModel::unit_sphere()] {
        let study = slice_study(&model, 32, 3, 7)?;
        println!(
            "{}: divergence {:.1e}, idempotence {:.1e}, orthogonality {:.1e}, {} near-null modes deflated",
            study.model,
            study.worst(|r| r.divergence),
            study.worst(|r| r.idempotence),
            study.worst(|r| r.orthogonality),
            study.deflated
        );
    }
    Ok(())
}
