// Weighted gasket networks level by level: size, corner resistances, diameter and the
// growth of ball volumes in the resistance metric.

use hklab::gasket::{build_gasket, GasketParams};
use hklab::heat::BallVolumes;
use hklab::numeric::linear_fit;

pub fn run() -> hklab::Result<()> {
    let p = GasketParams::from_tau(0.6)?;
    for level in 1..=5 {
        let g = build_gasket(&p, level)?;
        let r = g.effective_resistance(g.corners[0], g.corners[1])?;
        let space = g.resistance_space()?;
        println!(
            "level {level}: {:>4} vertices {:>4} edges  R(p1,p2) = {r:.12}  diam = {:.6}  h = {:.3e}",
            g.len(),
            g.edges.len(),
            space.diameter(),
            space.min_separation()
        );
    }

    // V(x, r) ~ r^alpha* between a few lattice spacings and the diameter
    let g = build_gasket(&p, 6)?;
    let space = g.resistance_space()?;
    let space = space.scaled(1.0 / space.diameter());
    let vols = BallVolumes::new(&space, &g.measure)?;
    let h = space.min_separation();
    let radii: Vec<f64> = (0..12).map(|k| 4.0 * h * (0.25 / (4.0 * h)).powf(k as f64 / 11.0)).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = radii
        .iter()
        .map(|&r| (r.ln(), (0..g.len()).map(|x| vols.volume(x, r)).sum::<f64>().ln() - (g.len() as f64).ln()))
        .unzip();
    let slope = linear_fit(&xs, &ys).1;
    println!("mean ball volume slope {slope:.4} vs alpha* {:.4}", p.alpha_star);
    Ok(())
}

#[allow(dead_code)]
fn main() -> hklab::Result<()> {
    run()
}
