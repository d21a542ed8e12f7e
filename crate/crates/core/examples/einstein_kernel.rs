//! Gap-certified dimension of the infinitesimal Einstein deformations of `S^2`.

use solitonkit::deformation_kernel::{compute_e, KernelSettings};
use solitonkit::soliton_core::GridModel;

fn main() -> solitonkit::Result<()> {
    let basis = compute_e(&GridModel::unit_sphere(), 32, &KernelSettings::default())?;
    println!("dim E = {:?} ({:?})", basis.dimension(), basis.decision.status);
    println!("gap ratio {:.3e}, noise floor {:.3e}", basis.gap_ratio().unwrap_or(f64::NAN), basis.decision.noise_floor);
    let smallest: Vec<String> = basis.singular_values.iter().take(4).map(|x| format!("{x:.3e}")).collect();
    println!("smallest singular values {}", smallest.join(", "));
    Ok(())
}
