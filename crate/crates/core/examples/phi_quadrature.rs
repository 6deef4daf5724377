// The subordination scale `Phi` built from `psi_c = r^beta*` and the log-corrected jump
// scale, compared against its closed form `r^beta* log(1/r)`.

use hklab::gasket::GasketParams;
use hklab::scale::{certify_doubling, phi_from_scales, probe_grid, ScaleFunction};

pub fn run() -> hklab::Result<()> {
    let p = GasketParams::from_tau(0.6)?;
    let b = p.beta_star;
    let knee = (-2.0 / b).exp();
    let psi_c = ScaleFunction::power(b);
    let psi_j = ScaleFunction::power_log(1.0, b, 2.0, knee);
    let grid = probe_grid(1e-6, 1.0, 8);
    let phi = phi_from_scales(&psi_c, &psi_j, &grid)?;
    let mut worst = 0.0_f64;
    for &r in grid.iter().filter(|&&r| r <= knee) {
        let exact = r.powf(b) * (1.0 / r).ln();
        worst = worst.max((phi.phi.value(r) / exact - 1.0).abs());
    }
    let cert = certify_doubling(&phi.phi, &grid)?;
    println!("max relative error below e^(-2/beta*) = {knee:.4}: {worst:e}");
    println!("Phi <= {:.4} psi_j, comparison constant {:.4}", phi.comp2, phi.comp3);
    println!("doubling exponents of Phi: [{:.4}, {:.4}], C = {:.4}", cert.beta1, cert.beta2, cert.c);
    assert!(worst < 0.01);
    Ok(())
}

#[allow(dead_code)]
fn main() -> hklab::Result<()> {
    run()
}
