//! Bound states below the essential spectrum and the mass-ratio threshold.
//!
//! Below both essential-spectrum branches the Birman-Schwinger curves are
//! monotone in `z`, so each crossing of one is a genuine discrete
//! eigenvalue of the three-body operator.  At total quasi-momentum zero
//! the sign laws put every below-band state into the *odd* sectors, and
//! the three axis sectors are exchanged by the cubic symmetry: crossings
//! come in triply degenerate odd multiplets.
//!
//! Whether any crossing exists at all is a mass-ratio question.  For a
//! light third particle (large `gamma`) the effective attraction between
//! the two fermions wins and a below-band triplet appears; for comparable
//! masses it never reaches one.  The example contrasts `gamma = 2`
//! (no states) with `gamma = 6` (one triply degenerate odd state) at the
//! same coupling.
//!
//! Run with: `cargo run --release --example below_band_states`

use std::time::Instant;

use trimer::bound_states::solve_below;
use trimer::dispersion::ModelParams;
use trimer::torus_grid::make_grid;
use trimer::two_body::essential_spectrum;

fn main() {
    let grid = make_grid(12, 0.0).unwrap();
    for gamma in [2.0, 6.0] {
        let params = ModelParams::new(gamma, 60.0, [0.0; 3]).unwrap();
        let bands = essential_spectrum(&params);
        let edge = bands.two_particle.0.min(bands.three_particle.0);
        let t0 = Instant::now();
        let states = solve_below(&params, &grid).unwrap();
        println!(
            "gamma = {gamma}: {} bound state(s) below the bands (edge {edge:.6}, {:.1} s)",
            states.len(),
            t0.elapsed().as_secs_f64()
        );
        for s in &states {
            println!(
                "  z = {:.9}  (edge - {:.6})  multiplicity {}  parity {}  residual {:.2e}",
                s.z,
                edge - s.z,
                s.multiplicity,
                s.parity.label(),
                s.residual
            );
            let tags: Vec<&str> = s.sector_tags.iter().map(|t| t.label()).collect();
            println!("    sectors: {}", tags.join(", "));
        }
        println!();
    }
    println!("(the threshold mass ratio for the first below-band state at K = 0");
    println!(" lies between these two; see the critical_ratios example)");
}
