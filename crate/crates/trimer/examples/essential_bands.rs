//! Essential-spectrum bands and the opening of the spectral gap.
//!
//! By the three-body HVZ decomposition the essential spectrum is the union
//! of two branches: the *two-particle* branch `[tau_min, tau_max]` swept
//! out by a bound light pair plus a free spectator, and the
//! *three-particle* branch `[E_min, E_max]` of three free particles.  The
//! pair branch moves down linearly in the coupling while the free branch
//! stays put, so beyond a finite coupling the two separate and a gap
//! opens.  Everything below `tau_min` and everything inside the gap is
//! available for genuine three-body bound states.
//!
//! The example tabulates both branches against the coupling at fixed mass
//! ratio and locates the gap threshold by bisection.
//!
//! Run with: `cargo run --release --example essential_bands`

use trimer::dispersion::ModelParams;
use trimer::two_body::essential_spectrum;

fn main() {
    let gamma = 6.0;
    println!("mass ratio gamma = {gamma}, total quasi-momentum K = 0");
    println!();
    println!(
        "{:>8}  {:>26}  {:>22}  {:>12}",
        "lambda", "two-particle branch", "three-particle branch", "gap width"
    );
    for lambda in [5.0, 10.0, 20.0, 40.0, 80.0, 160.0] {
        let params = ModelParams::new(gamma, lambda, [0.0; 3]).unwrap();
        let bands = essential_spectrum(&params);
        let gap = match bands.gap {
            Some((a, b)) => format!("{:>12.6}", b - a),
            None => format!("{:>12}", "closed"),
        };
        println!(
            "{lambda:>8.1}  [{:>11.6}, {:>11.6}]  [{:>9.6}, {:>9.6}]  {gap}",
            bands.two_particle.0, bands.two_particle.1,
            bands.three_particle.0, bands.three_particle.1,
        );
    }

    // Bisect the coupling at which the gap opens (tau_max crosses E_min).
    let (mut lo, mut hi) = (5.0f64, 40.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let params = ModelParams::new(gamma, mid, [0.0; 3]).unwrap();
        if essential_spectrum(&params).gap.is_some() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    println!();
    println!("gap opens at lambda = {:.6} (for gamma = {gamma})", 0.5 * (lo + hi));
}
