// Fit q = 5 from noiseless data with m = 5 experiments of horizon N = 10
// and watch the iterates approach the true impulse response.

use nnfir::stats::{gen_inputs, InputLaw, Purpose, StreamId};
use nnfir::{apply_t, fit, FitConfig, ImpulseResponse};

pub fn run_example() -> nnfir::Result<()> {
    let h_star = ImpulseResponse::new(vec![1.0, 0.8, 0.6, 0.4, 0.3, 0.2])?;
    let u = gen_inputs(10, 5, &InputLaw::default(), &mut StreamId::new(42, 0, 0, Purpose::Inputs).rng())?;
    let y = apply_t(&h_star, &u)?;

    let config = FitConfig { trace: true, ..FitConfig::default() };
    let result = fit(&u, &y, 5, &config)?;
    let iterates = result.iterate_trace.as_ref().expect("trace requested");

    println!("{:>6}  {:>60}  {:>12}", "t", "h^t", "F(h^t)");
    for t in [0, 1, 2, 5, 10, 20, 50, 100, 200, result.iterations_used] {
        if t > result.iterations_used {
            continue;
        }
        let h: Vec<String> = iterates[t].as_slice().iter().map(|v| format!("{v:.6}")).collect();
        println!("{t:>6}  {:>60}  {:>12.4e}", h.join(" "), result.divergence_trace[t].to_f64());
    }
    let err = result.h_hat.max_abs_diff(&h_star);
    println!("status {}  max |h - h*| = {err:.2e}  kkt residual {:.2e}", result.status.as_str(), result.kkt_residual);
    assert!(err < 1e-6);
    Ok(())
}

fn main() -> nnfir::Result<()> {
    run_example()
}
