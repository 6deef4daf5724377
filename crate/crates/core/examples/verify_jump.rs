// The jump heat kernel against the mixed family (jump term plus a Gaussian-type term)
// and against the pure stable-like family, broken down by regime.

use hklab::gasket::GasketParams;
use hklab::study::{HeatStudy, OperatorChoice, PairPolicy, ScaleConfig, TimeGrid};
use hklab::verify::{Family, Thresholds};

pub fn run() -> hklab::Result<()> {
    let p = GasketParams::from_tau(0.6)?;
    let s = HeatStudy::new(&p, 4, OperatorChoice::Jump, &ScaleConfig::default(), &PairPolicy::default(), 1, &TimeGrid::default())?;
    let grid = s.kernel()?;
    for family in [Family::SplusHk, Family::StableLike] {
        let r = s.fit(&grid, family, 0.25, Thresholds::default())?;
        println!(
            "{family}: C={:.3} upper {:.3} lower {:.3} pass={} (near {} / jump {} / exponential {})",
            r.constants.c,
            r.max_upper_ratio,
            r.max_lower_ratio,
            r.pass,
            r.regimes.near_diagonal,
            r.regimes.jump_dominated,
            r.regimes.exponential
        );
        for (regime, ratios) in &r.by_regime {
            println!("  {:<15} upper {:.3} lower {:.3}", regime.name(), ratios.upper, ratios.lower);
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> hklab::Result<()> {
    run()
}
