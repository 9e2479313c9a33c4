// Consistency of the fitted impulse response in the three large-sample
// regimes. Errors shrink along each ladder and the normalized errors stay
// in a band.
//
// `cargo run --release --example consistency_regimes -- 500` runs 500
// replications per scale (the default is 60).

use nnfir::stats::{run_regime, Execution, InputLaw, NoiseModel, Regime, RegimeSpec, Scale};
use nnfir::{FitConfig, ImpulseResponse};

fn ladder(regime: Regime) -> Vec<Scale> {
    match regime {
        Regime::ColumnsIid => vec![Scale::new(10, 5), Scale::new(10, 20), Scale::new(10, 80)],
        Regime::RowsIid => vec![Scale::new(20, 2), Scale::new(80, 2), Scale::new(320, 2)],
        Regime::ArrayIid => vec![Scale::new(10, 5), Scale::new(20, 10), Scale::new(40, 20)],
    }
}

pub fn run_with(replications: usize) -> nnfir::Result<()> {
    let h_star = ImpulseResponse::new(vec![1.0, 0.8, 0.6, 0.4, 0.3, 0.2])?;
    for regime in Regime::ALL {
        let spec = RegimeSpec {
            regime,
            scales: ladder(regime),
            replications,
            h_star: h_star.clone(),
            noise: NoiseModel::default(),
            inputs: InputLaw::default(),
            seed: 7,
        };
        let report = run_regime(&spec, &FitConfig::default(), Execution::Parallel)?;
        println!("{regime}");
        for s in &report.scales {
            let t = s.truth.as_ref().expect("known truth");
            let scaled: Vec<String> = t.scaled_rmse.iter().map(|v| format!("{v:.3}")).collect();
            println!(
                "  N={:<4} m={:<4} rmse {:.4e}  sqrt(scale)*rmse [{}]  min eig {:.2e}",
                s.n,
                s.m,
                t.rmse_norm,
                scaled.join(" "),
                s.scaled_covariance_min_eigenvalue
            );
        }
        println!(
            "  rmse decreasing: {}   band (max/min of scaled rmse): {:.2}",
            report.rmse_decreasing.unwrap_or(false),
            report.scaled_rmse_band.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

pub fn run_example() -> nnfir::Result<()> {
    run_with(20)
}

fn main() -> nnfir::Result<()> {
    let reps = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(60);
    run_with(reps)
}
