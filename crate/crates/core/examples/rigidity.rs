//! Rigidity verdicts for the rank-one models, plus pinching and diameter tests.

use solitonkit::model_spaces::{make_model, ModelName, Rational};
use solitonkit::rigidity::{diameter_functional_refined, diameter_test, diameter_threshold, pinching_test, rank_one_verdict};
use solitonkit::soliton_core::GridModel;

fn main() -> solitonkit::Result<()> {
    for name in [ModelName::unit_sphere(2), ModelName::CpnSymbolic { n: 2 }, ModelName::HpnSpectral { n: 2 }] {
        let verdict = rank_one_verdict(&make_model(name)?)?;
        println!("{}: {:?}", verdict.model.name.label(), verdict.overall);
        for c in &verdict.criteria {
            println!("    {:<24} {:?}", c.name, c.outcome);
        }
    }
    let pinched = pinching_test(4, Rational::new(3, 10), Rational::from_integer(1))?;
    println!("pinching n = 4, K in [3/10, 1]: {:?}", pinched.outcome);
    let grid = diameter_functional_refined(&GridModel::unit_sphere(), 64)?;
    println!("grid D(S^2) = {:.4} against threshold {:.6}: {:?}", grid.value, diameter_threshold(), diameter_test(Some(&grid)).outcome);
    Ok(())
}
