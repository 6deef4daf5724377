// Renormalization solution and the gasket exponents across the admissible range of
// `tau`, including which of the two chain exponents wins.

use hklab::gasket::{solve_renormalization, GasketParams};

pub fn run() -> hklab::Result<()> {
    println!("{:>6} {:>9} {:>9} {:>8} {:>8} {:>8} {:>8}", "tau", "sigma", "lambda", "alpha*", "beta*", "gamma1", "gamma2");
    for k in 1..10 {
        let tau = 0.5 + 0.05 * k as f64;
        let (sigma, lambda) = solve_renormalization(tau)?;
        let p = GasketParams::from_tau(tau)?;
        assert!(p.residuals().all_within(1e-9));
        println!(
            "{tau:>6.2} {sigma:>9.5} {lambda:>9.5} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
            p.alpha_star, p.beta_star, p.gamma1, p.gamma2
        );
    }
    // tau = 1/2 carries no resistance form
    assert!(solve_renormalization(0.5).is_err());
    let p = GasketParams::from_tau(0.6)?;
    println!("tau=0.6: alpha* = ln3/ln(5/3) = {}, gamma = ln2/ln(5/3) = {}", p.alpha_star, p.gamma1);
    Ok(())
}

#[allow(dead_code)]
fn main() -> hklab::Result<()> {
    run()
}
