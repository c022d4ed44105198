//! A reduced experiment sweep printed as CSV.
//!
//! cargo run --release --example experiment_sweep

use evac_core::experiment::{report, run_experiment, ReportFormat, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = Scenario {
        headcounts: vec![25, 100],
        deltas: vec![9.0, 36.0, 144.0],
        replications: 10,
        ..Scenario::default()
    };
    let table = run_experiment(&scenario)?;
    report(&table, ReportFormat::Csv, std::io::stdout().lock())?;
    Ok(())
}
