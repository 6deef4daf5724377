// Suprema `sup_sigma [rho(d)/rho(sigma) - t/Phi(sigma)]` against their power-law closed
// form, and the minimax window that localizes the maximiser.

use hklab::scale::{minimax_window, variational_sup, MinimaxParams, ScaleFunction, SupMode};

pub fn run() -> hklab::Result<()> {
    let (g, b) = (1.356915448856724, 3.150660103087124);
    let rho = ScaleFunction::power(g);
    let phi = ScaleFunction::power(b);
    let k = g / (b - g);
    let mut worst = 0.0_f64;
    for d in [0.01, 0.1, 1.0, 10.0] {
        for t in [1e-4, 1e-2, 1.0] {
            let s = variational_sup(&rho, &phi, d, t, SupMode::Rho);
            let exact = (g / b).powf(k) * (1.0 - g / b) * (d.powf(b) / t).powf(k);
            worst = worst.max((s.value / exact - 1.0).abs());
            println!("d={d:<5} t={t:<6} sup={:.6e} closed form={exact:.6e} argmax={:.4e}", s.value, s.argmax_sigma);
        }
    }
    assert!(worst < 1e-6, "{worst}");

    let quad = ScaleFunction::power(2.0);
    let params = MinimaxParams { beta_star: 2.0, c_phi: 1.0, beta2: 2.0 };
    let w = minimax_window(&quad, 4.0, 1.0, params)?;
    println!(
        "window [{:.4}, {:.4}]: restricted {:.6} full {:.6} >= {:.4}",
        w.sigma1, w.sigma_hi, w.sup_restricted, w.sup_full, w.lower_bound
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> hklab::Result<()> {
    run()
}
