// Fit a moving average of order 5 to data from a first-order recursive
// system. There is no true h, but the estimates still settle on a
// best approximation: the spread across replications and the gap between
// the two halves of the replications both shrink as N grows. With m = 10
// and N = 8 some fits land on the boundary.

use nnfir::stats::{run_misspecified, Execution, Generator, InputLaw, MisspecifiedSpec, NoiseModel, Scale};
use nnfir::FitConfig;

pub fn run_with(replications: usize) -> nnfir::Result<()> {
    let generator = Generator::Iir { a: 0.5, b: vec![1.0, 0.5] };
    let spec = MisspecifiedSpec {
        q: 5,
        scales: vec![Scale::new(8, 10), Scale::new(50, 10)],
        replications,
        noise: NoiseModel::default(),
        inputs: InputLaw::default(),
        seed: 3,
    };
    let report = run_misspecified(&generator, &spec, &FitConfig::default(), Execution::Parallel)?;
    for s in &report.scales {
        let mean: Vec<String> = s.mean_estimate.iter().map(|v| format!("{v:.4}")).collect();
        println!("N={:<3} m={:<3} mean h [{}]", s.n, s.m, mean.join(" "));
        println!(
            "          spread {:.4}  half gap {:.5}  boundary counts {:?}",
            s.spread, s.half_gap, s.boundary_counts
        );
    }
    println!("spread shrinks {}  half gap shrinks {}", report.spread_shrinks, report.half_gap_shrinks);
    Ok(())
}

pub fn run_example() -> nnfir::Result<()> {
    run_with(40)
}

fn main() -> nnfir::Result<()> {
    let reps = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    run_with(reps)
}
