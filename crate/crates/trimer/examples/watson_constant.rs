//! The Watson constant and the lattice Green's function moments.
//!
//! The mean of `1/eps` over the momentum torus, with
//! `eps(p) = 3 - cos p1 - cos p2 - cos p3`, is a classical lattice constant
//! (the simple-cubic Watson integral).  It controls the strong-coupling
//! asymptotics of every bound state in this crate, so two independent
//! routes to it are provided:
//!
//! * a Laplace-transform route, reducing the triple integral to a single
//!   integral of a product of modified Bessel functions `exp(-t) I_0(t)`;
//! * a torus-grid route, a half-offset Riemann sum whose leading `1/n`
//!   singular-cell deficit is cancelled by Richardson extrapolation.
//!
//! The example prints both, their agreement, and the grid route's
//! convergence history, then a few of the Bessel moments
//! `J_{m}(alpha) = mean of exp(-alpha) ... /eps`-type integrals used by the
//! critical-mass-ratio machinery.
//!
//! Run with: `cargo run --release --example watson_constant`

use trimer::special::{j_moment, watson_grid, watson_w};

fn main() {
    let w = watson_w();
    println!("Watson constant (Bessel route):    {w:.15}");
    println!();
    println!("grid-extrapolation route:");
    println!("{:>6}  {:>22}  {:>12}", "n", "estimate", "error");
    for n in [8usize, 16, 32, 64, 128] {
        let est = watson_grid(n).unwrap();
        println!("{n:>6}  {est:>22.15}  {:>12.3e}", est - w);
    }
    println!();
    println!("Bessel moments J_m(alpha) (first-order poles against cos-powers):");
    for (orders, alpha) in [
        ([0u32, 0, 0], 0.0),
        ([1, 0, 0], 0.0),
        ([1, 1, 0], 0.0),
        ([2, 0, 0], 0.0),
        ([0, 0, 0], 1.0),
    ] {
        let j = j_moment(orders, alpha).unwrap();
        println!("  J_{}{}{}({alpha:3.1}) = {j:.15}", orders[0], orders[1], orders[2]);
    }
    println!();
    println!(
        "half the sine-squared moment (J_000 - J_200)/2 = {:.15}",
        (j_moment([0, 0, 0], 0.0).unwrap() - j_moment([2, 0, 0], 0.0).unwrap()) / 2.0
    );
}
