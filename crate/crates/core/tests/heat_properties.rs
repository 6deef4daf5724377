//! Invariants of gasket heat kernels beyond the Markov suite.

use hklab::gasket::{build_gasket, GasketParams};
use hklab::heat::{markov_checks, BallVolumes};
use hklab::numeric::linear_fit;
use hklab::study::{near_diagonal_floor, HeatStudy, OperatorChoice, PairPolicy, ScaleConfig, TimeGrid};

fn study(tau: f64, level: usize, op: OperatorChoice) -> HeatStudy {
    let p = GasketParams::from_tau(tau).unwrap();
    HeatStudy::new(&p, level, op, &ScaleConfig::default(), &PairPolicy::default(), 1, &TimeGrid::default()).unwrap()
}

#[test]
fn near_diagonal_floor_is_stable_across_levels() {
    let floors: Vec<f64> = [4, 5, 6]
        .into_iter()
        .map(|level| {
            let s = study(0.6, level, OperatorChoice::Local);
            let obs = s.observations(&s.kernel().unwrap()).unwrap();
            near_diagonal_floor(&obs, &s.volumes().unwrap(), s.scales.psi_c.as_ref().unwrap()).unwrap()
        })
        .collect();
    let hi = floors.iter().copied().fold(0.0, f64::max);
    let lo = floors.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(lo > 0.0, "{floors:?}");
    assert!(hi / lo < 2.0, "{floors:?}");
}

#[test]
fn ball_volumes_grow_like_alpha_star() {
    let p = GasketParams::from_tau(0.6).unwrap();
    let g = build_gasket(&p, 6).unwrap();
    let space = g.resistance_space().unwrap();
    let space = space.scaled(1.0 / space.diameter());
    let vols = BallVolumes::new(&space, &g.measure).unwrap();
    let h = space.min_separation();
    let (xs, ys): (Vec<f64>, Vec<f64>) = (0..12)
        .map(|k| 4.0 * h * (0.25 / (4.0 * h)).powf(k as f64 / 11.0))
        .map(|r| (r.ln(), ((0..g.len()).map(|x| vols.volume(x, r)).sum::<f64>() / g.len() as f64).ln()))
        .unzip();
    let slope = linear_fit(&xs, &ys).1;
    assert!((slope / p.alpha_star - 1.0).abs() < 0.07, "{slope} vs {}", p.alpha_star);
}

#[test]
fn kernels_are_markov_off_the_symmetric_point() {
    for op in [OperatorChoice::Local, OperatorChoice::Jump] {
        let s = study(0.55, 5, op);
        let m = markov_checks(&s.kernel().unwrap());
        assert!(m.pass(1e-10, 1e-8), "{op:?}: {m:?}");
    }
}

#[test]
fn diagonal_kernel_decreases_in_time() {
    let s = study(0.6, 4, OperatorChoice::Jump);
    let grid = s.kernel().unwrap();
    // p_t(x, x) decreases in t
    for &x in &s.sources {
        let i = grid.source_index(x).unwrap();
        for k in 1..s.t_grid.len() {
            assert!(grid.p(k, i, x) <= grid.p(k - 1, i, x) * (1.0 + 1e-12));
        }
    }
}
