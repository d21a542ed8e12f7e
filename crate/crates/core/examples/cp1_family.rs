//! The infinitesimal soliton deformations of the Killing-normalized `CP^1`
//! spanned by first eigenfunctions.

use solitonkit::deformation_kernel::{cp_family, span_residuals};
use solitonkit::discrete_ops::Geometry;
use solitonkit::soliton_core::GridModel;

fn main() -> solitonkit::Result<()> {
    let mut previous: Option<std::collections::BTreeMap<String, f64>> = None;
    for res in [64, 128] {
        let basis = cp_family(res)?;
        let geo = Geometry::new(GridModel::killing_sphere().metric(res)?);
        let residuals = span_residuals(&geo, &basis.generators)?;
        println!("res {res}: dim {:?}, gap ratio {:.3e}", basis.dimension(), basis.gap_ratio().unwrap_or(f64::NAN));
        for (name, r) in &residuals {
            match &previous {
                Some(p) => println!("    {name:<22} {r:.3e}  ratio {:.2}", p[name] / r),
                None => println!("    {name:<22} {r:.3e}"),
            }
        }
        previous = Some(residuals);
    }
    Ok(())
}
