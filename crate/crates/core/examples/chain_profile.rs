// Chain distances `d_eps` between the gasket corners: the ratio `d_eps/eps` keeps
// growing as `eps` shrinks, at the rate `(d/eps)^gamma` of the chain exponent.

use hklab::chain::{chain_profile, fit_rho_exponent, geometric_eps_grid, FitConfig};
use hklab::gasket::{build_gasket, GasketParams};

pub fn run() -> hklab::Result<()> {
    let p = GasketParams::from_tau(0.6)?;
    let g = build_gasket(&p, 5)?;
    let space = g.resistance_space()?;
    let space = space.scaled(1.0 / space.diameter());
    let [a, b, c] = g.corners;
    let pairs = [(b, c), (a, b), (a, c)];
    let grid = geometric_eps_grid(1.5 * space.min_separation(), 1.0, 0.6);
    let profile = chain_profile(&space, &pairs, &grid)?;
    println!("{:>10} {:>12} {:>12} {:>12}", "eps", "p2-p3", "p1-p2", "p1-p3");
    for (j, eps) in grid.iter().enumerate() {
        let ratio = |i: usize| profile.values[i][j].map_or(f64::INFINITY, |v| v / eps);
        println!("{eps:>10.4e} {:>12.4} {:>12.4} {:>12.4}", ratio(0), ratio(1), ratio(2));
    }
    let fit = fit_rho_exponent(&profile, &FitConfig::default())?;
    println!("fitted gamma {:.4} (gamma1 {:.4}) from {} samples", fit.gamma, p.gamma1, fit.n_samples);
    Ok(())
}

#[allow(dead_code)]
fn main() -> hklab::Result<()> {
    run()
}
