//! Simulate labelled data from the spiky truth and write it as CSV.
//!
//! ```bash
//! cargo run --example simulate_data -- data.csv
//! ```

use besov_classify::io::write_dataset;
use besov_classify::model::{make_truth, simulate, MuSpec, TruthName, TruthParams};

fn main() -> besov_classify::Result<()> {
    let truth = make_truth(TruthName::SpikyPiecewiseLinear, &TruthParams::default_for(1))?;
    let mu = MuSpec::PiecewiseConstant {
        weights: vec![1.0, 3.0],
    };
    let data = simulate(&truth, &mu, 2000, 11)?;

    let ones = data.labels().iter().filter(|&&y| y == 1).count();
    println!("n = {}, share of ones {:.3}", data.n(), ones as f64 / data.n() as f64);
    for k in 0..5 {
        let x = k as f64 / 4.0;
        println!("f0({x:.2}) = {:.4}", truth.prob(&[x])?);
    }

    if let Some(path) = std::env::args().nth(1) {
        write_dataset(&path, &data)?;
        println!("wrote {path}");
    }
    Ok(())
}
