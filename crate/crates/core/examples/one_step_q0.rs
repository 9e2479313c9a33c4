// With q = 0 the model is a single gain and the first update lands on the
// closed-form minimizer sum(Y) / sum(U).

use nnfir::{fit, kkt_residual, FitConfig, ImpulseResponse, SignalMatrix};

pub fn run_example() -> nnfir::Result<()> {
    let u = SignalMatrix::from_rows(&[vec![1.0, 2.0], vec![0.5, 3.0], vec![4.0, 1.0]])?;
    let y = SignalMatrix::from_rows(&[vec![2.1, 3.9], vec![1.2, 6.3], vec![7.7, 2.2]])?;

    let config = FitConfig { trace: true, initial_h: Some(ImpulseResponse::new(vec![17.0])?), ..FitConfig::default() };
    let result = fit(&u, &y, 0, &config)?;

    let closed_form = y.total() / u.total();
    println!("iterations  {}", result.iterations_used);
    println!("h^0         {}", result.iterate_trace.as_ref().unwrap()[0][0]);
    println!("h^1         {}", result.h_hat[0]);
    println!("sum Y/sum U {closed_form}");
    println!("kkt         {:.1e}", kkt_residual(&result.h_hat, &u, &y)?);
    assert_eq!(result.iterations_used, 1);
    assert!((result.h_hat[0] - closed_form).abs() <= 4.0 * f64::EPSILON * closed_form);
    Ok(())
}

fn main() -> nnfir::Result<()> {
    run_example()
}
