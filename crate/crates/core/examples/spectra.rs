//! Exact Laplace spectra of the rank-one models, and whether 1 is an eigenvalue
//! once the metric is normalized to `Ric = g`.

use solitonkit::model_spaces::{closed_form_spectrum, make_model, spectrum_contains, MetricTag, ModelName, Rational};

fn main() -> solitonkit::Result<()> {
    let models = [ModelName::unit_sphere(2), ModelName::Cp1Killing, ModelName::HpnSpectral { n: 2 }, ModelName::Cap2Spectral];
    for name in models {
        let model = make_model(name)?;
        let table = closed_form_spectrum(&model, 12)?;
        let normalized = table.renormalized(MetricTag::Normalized).unwrap_or_else(|_| table.clone());
        let first: Vec<String> = normalized.rows.iter().take(4).map(|r| r.eigenvalue.to_string()).collect();
        let one = spectrum_contains(&normalized, Rational::from_integer(1))?;
        println!("{:<14} {:<10} lambda = {:<28} 1 in spectrum: {one}", model.name.label(), normalized.metric_tag, first.join(", "));
    }
    print!("{}", closed_form_spectrum(&make_model(ModelName::unit_sphere(3))?, 3)?.to_csv_string());
    Ok(())
}
