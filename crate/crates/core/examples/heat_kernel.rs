// Heat kernels of the gasket diffusion and of the jump process with the log-corrected
// jump scale, with the Markov checks and a truncated-spectrum control that breaks them.

use hklab::gasket::GasketParams;
use hklab::heat::{kernel_from_spectrum, markov_checks, Modes};
use hklab::study::{HeatStudy, OperatorChoice, PairPolicy, ScaleConfig, TimeGrid};

pub fn run() -> hklab::Result<()> {
    let p = GasketParams::from_tau(0.6)?;
    for op in [OperatorChoice::Local, OperatorChoice::Jump] {
        let s = HeatStudy::new(&p, 4, op, &ScaleConfig::default(), &PairPolicy::default(), 1, &TimeGrid::default())?;
        let grid = s.kernel()?;
        let m = markov_checks(&grid);
        println!(
            "{op:?}: n={} lambda_1={:.4} t in [{:.3e}, {:.3e}] ({} times)",
            s.graph.len(),
            s.spectrum.eigenvalues[1],
            s.t_grid[0],
            s.t_grid[s.t_grid.len() - 1],
            s.t_grid.len()
        );
        println!(
            "  positivity {:e} symmetry {:e} conservativeness {:e} semigroup {}",
            m.positivity,
            m.symmetry,
            m.conservativeness,
            m.ck_status()
        );
        assert!(m.pass(1e-10, 1e-8));
        let half = kernel_from_spectrum(&s.spectrum, &s.t_grid, &s.sources, Modes::Top(0.5))?;
        println!("  top half of the modes only: conservativeness {:.3}", markov_checks(&half).conservativeness);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> hklab::Result<()> {
    run()
}
