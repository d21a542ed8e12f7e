//! Weight-multiset count of `dim Hom_K(g, S^2 m*)` and `dim Z` for `CP^n`.

use solitonkit::rep_weights::{adjoint_module, dim_z_cpn, k_decompose};

fn main() -> solitonkit::Result<()> {
    for n in 2..=5 {
        let d = dim_z_cpn(n)?;
        println!("CP^{n}: m = {}, dim Z = {}, dim ker T = {}", d.m, d.dim_z, d.dim_ker_t);
        for s in &d.shared_constituents {
            println!("    shared {:?} (dim {}) with multiplicities {} and {}", s.highest_weight.0, s.dim, s.mult_a, s.mult_b);
        }
    }
    let parts = k_decompose(&adjoint_module(3)?)?;
    let summary: Vec<String> = parts.iter().map(|c| format!("{}x{:?}", c.multiplicity, c.highest_weight.0)).collect();
    println!("su(4) restricted to K: {}", summary.join(" + "));
    Ok(())
}
