// The file workflow behind the `nnfir` binary: simulate a dataset, fit it,
// then check the fit with the KKT command. Each step returns the exit
// code the binary would.

use std::fs;

use nnfir::cli::{run, EXIT_OK};

pub fn run_example() -> nnfir::Result<()> {
    let dir = tempfile::tempdir()?;
    let d = dir.path().display().to_string();

    let code = run([
        "nnfir", "simulate", "--n", "10", "--m", "5", "--h-star", "1,0.8,0.6,0.4,0.3,0.2", "--sigma", "0.1",
        "--seed", "11", "--out-dir", &d,
    ]);
    assert_eq!(code, EXIT_OK);

    let fit_dir = format!("{d}/fit");
    let code = run(["nnfir", "fit", &format!("{d}/U.csv"), &format!("{d}/Y.csv"), "--q", "5", "--out-dir", &fit_dir]);
    assert_eq!(code, EXIT_OK);
    println!("{}", fs::read_to_string(format!("{fit_dir}/h_hat.json"))?);

    let trace = fs::read_to_string(format!("{fit_dir}/trace.csv"))?;
    println!("trace.csv has {} rows; header: {}", trace.lines().count() - 1, trace.lines().next().unwrap_or(""));

    let code = run(["nnfir", "kkt", &format!("{d}/U.csv"), &format!("{d}/Y.csv"), &format!("{fit_dir}/h_hat.json")]);
    assert_eq!(code, EXIT_OK);
    Ok(())
}

fn main() -> nnfir::Result<()> {
    run_example()
}
