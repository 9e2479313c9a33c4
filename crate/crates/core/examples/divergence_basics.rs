// The I-divergence and its extended-value conventions.

use nnfir::divergence::ExtendedNonnegReal;
use nnfir::i_divergence;

pub fn run_example() -> nnfir::Result<()> {
    let cases: [(&str, Vec<f64>, Vec<f64>); 5] = [
        ("identical", vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]),
        ("scalar 2 vs 1", vec![2.0], vec![1.0]),
        ("zero data", vec![0.0, 0.0], vec![5.0, 0.0]),
        ("p / 0", vec![1.0, 1.0], vec![1.0, 0.0]),
        ("unnormalized", vec![1.0, 1.0], vec![2.0, 2.0]),
    ];
    for (name, m, n) in &cases {
        let d = i_divergence(m, n)?;
        println!("{name:<14} I(M||N) = {d}");
    }

    // Not symmetric.
    let a = i_divergence(&[1.0, 4.0], &[2.0, 2.0])?;
    let b = i_divergence(&[2.0, 2.0], &[1.0, 4.0])?;
    println!("I(a||b) = {a}, I(b||a) = {b}");

    assert_eq!(i_divergence(&[1.0], &[0.0])?, ExtendedNonnegReal::Infinite);
    assert!(i_divergence(&[1.0], &[-1.0]).is_err());
    Ok(())
}

fn main() -> nnfir::Result<()> {
    run_example()
}
