// Certify a fit with the Kuhn-Tucker conditions. The data comes from a
// system with no lag-1 term and a slight deficit at lag 1, so the
// constrained minimizer sits on the boundary h_1 = 0.

use nnfir::stats::{gen_inputs, InputLaw, Purpose, StreamId};
use nnfir::{apply_t, fit, kkt_report, FitConfig, ImpulseResponse, SignalMatrix};

pub fn run_example() -> nnfir::Result<()> {
    let u = gen_inputs(12, 4, &InputLaw::default(), &mut StreamId::new(5, 0, 0, Purpose::Inputs).rng())?;
    let clean = apply_t(&ImpulseResponse::new(vec![1.0, 0.0, 0.5])?, &u)?;
    // Shrink outputs that the lag-1 input drives hardest, pushing the
    // unconstrained optimum for h_1 below zero.
    let y = SignalMatrix::new(
        clean.rows(),
        clean.cols(),
        (0..clean.rows())
            .flat_map(|i| (0..clean.cols()).map(move |j| (i, j)))
            .map(|(i, j)| {
                let lag1 = if i >= 1 { u.get(i - 1, j) } else { 0.0 };
                clean.get(i, j) * (1.0 - 0.03 * lag1 / 10.0)
            })
            .collect(),
    )?;

    let result = fit(&u, &y, 2, &FitConfig { max_iterations: 200_000, ..FitConfig::default() })?;
    let report = kkt_report(&result.h_hat, &u, &y)?;
    println!("status {}  iterations {}", result.status.as_str(), result.iterations_used);
    for k in 0..=2 {
        let class = if report.on_boundary[k] { "boundary" } else { "interior" };
        println!(
            "h_{k} = {:<12.4e} g_{k} = {:>11.3e}  {class:<8}  r_{k} = {:.2e}",
            result.h_hat[k], report.gradient[k], report.residuals[k]
        );
    }
    println!("residual {:.2e}", report.residual);

    // A point off the minimizer fails the check.
    let mut off = result.h_hat.as_slice().to_vec();
    off[0] *= 1.1;
    let off_report = kkt_report(&ImpulseResponse::new(off)?, &u, &y)?;
    println!("perturbed h_0 by 10%: residual {:.2e}", off_report.residual);
    assert!(off_report.residual > 1e-3);
    Ok(())
}

fn main() -> nnfir::Result<()> {
    run_example()
}
