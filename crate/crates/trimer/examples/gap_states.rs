//! Bound states inside the spectral gap at strong coupling.
//!
//! Once the coupling separates the two essential-spectrum branches, the
//! open interval between the pair branch and the free branch can hold
//! discrete eigenvalues: a light pair orbited by the spectator, embedded
//! energetically *above* the pair continuum's top edge.  At total
//! quasi-momentum zero the gap sign laws select the *even* sectors, and
//! states are certified inside a sublinear window
//! `(tau_max, tau_max + sqrt(lambda))` whose distance to the upper branch
//! grows linearly in the coupling, so the certification never collides
//! with the free band.
//!
//! The number of gap states again grows with the mass ratio: none for
//! comparable masses, several even multiplets for a light spectator.
//!
//! Run with: `cargo run --release --example gap_states`

use std::time::Instant;

use trimer::bound_states::{solve_gap, GapWindow};
use trimer::dispersion::ModelParams;
use trimer::torus_grid::make_grid;
use trimer::two_body::essential_spectrum;

fn main() {
    let grid = make_grid(10, 0.5).unwrap();
    let window = GapWindow::default();
    let lambda = 200.0;
    println!(
        "coupling lambda = {lambda}, certification window (tau_max, tau_max + {:.3})",
        window.t_lambda(lambda)
    );
    println!();
    for gamma in [1.0, 6.0] {
        let params = ModelParams::new(gamma, lambda, [0.0; 3]).unwrap();
        let bands = essential_spectrum(&params);
        let (tau_max, e_min) = bands.gap.expect("gap must be open at this coupling");
        let t0 = Instant::now();
        let states = solve_gap(&params, window, &grid).unwrap();
        println!(
            "gamma = {gamma}: gap ({tau_max:.6}, {e_min:.6}), {} state(s) in the window ({:.1} s)",
            states.len(),
            t0.elapsed().as_secs_f64()
        );
        for s in &states {
            println!(
                "  z = {:.9}  (tau_max + {:.6})  multiplicity {}  parity {}  residual {:.2e}",
                s.z,
                s.z - tau_max,
                s.multiplicity,
                s.parity.label(),
                s.residual
            );
        }
        println!();
    }
}
