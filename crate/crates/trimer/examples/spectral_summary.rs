//! One-call spectral picture of a parameter point.
//!
//! `phase_point` bundles the whole analysis of one `(gamma, lambda, K)`
//! triple: essential-spectrum branches and gap, the bound states below the
//! bands, and the bound states inside the gap window, each with location,
//! multiplicity, and parity.  It is the engine behind the `phase-scan`
//! subcommand of the CLI; this example drives it directly at two points on
//! either side of the below-band threshold.
//!
//! Run with: `cargo run --release --example spectral_summary`

use trimer::bound_states::{phase_point, GapWindow};
use trimer::dispersion::ModelParams;
use trimer::torus_grid::make_grid;

fn main() {
    let grid = make_grid(8, 0.5).unwrap();
    let window = GapWindow::default();
    for (gamma, lambda) in [(2.0, 60.0), (6.0, 60.0)] {
        let params = ModelParams::new(gamma, lambda, [0.0; 3]).unwrap();
        let report = phase_point(&params, window, &grid).unwrap();
        println!("gamma = {gamma}, lambda = {lambda}, K = 0  ({:.1} s)", report.elapsed_seconds);
        println!(
            "  two-particle branch  [{:.6}, {:.6}]",
            report.bands.two_particle.0, report.bands.two_particle.1
        );
        println!(
            "  three-particle branch [{:.6}, {:.6}]",
            report.bands.three_particle.0, report.bands.three_particle.1
        );
        match report.bands.gap {
            Some((a, b)) => println!("  gap                  ({a:.6}, {b:.6})"),
            None => println!("  gap                  closed"),
        }
        println!("  below the bands: {} state(s)", report.below.len());
        for s in &report.below {
            println!(
                "    z = {:.8}  multiplicity {}  parity {}",
                s.z, s.multiplicity, s.parity.label()
            );
        }
        println!("  inside the gap window: {} state(s)", report.gap_states.len());
        for s in &report.gap_states {
            println!(
                "    z = {:.8}  multiplicity {}  parity {}",
                s.z, s.multiplicity, s.parity.label()
            );
        }
        println!();
    }
}
