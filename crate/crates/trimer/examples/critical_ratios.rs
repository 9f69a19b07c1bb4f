//! Critical mass ratios from the deep-coupling limit operator.
//!
//! As the coupling grows, the Birman-Schwinger operator at the relevant
//! spectral depth converges to a six-dimensional *limit operator* built
//! from lattice Green's function moments, parametrized by a depth variable
//! `alpha >= 0`.  Its three positive eigenvalue curves decide everything
//! asymptotically: a bound-state family exists at mass ratio `gamma`
//! exactly when `gamma` exceeds the reciprocal of the corresponding
//! curve's supremum over `alpha`.
//!
//! This yields closed-form critical constants at total quasi-momentum
//! zero (via the Watson-type moments) and scanned constants at general
//! `K`.  The example prints both routes and their agreement, then the
//! limit functions themselves on a few depths.
//!
//! Run with: `cargo run --release --example critical_ratios`

use trimer::birman_schwinger::{limit_curve_sup, limit_funcs, Region};
use trimer::bound_states::{critical_gammas, critical_gammas_scanned, Gamma2Flag};

fn print_constants(tag: &str, c: &trimer::bound_states::CriticalGammas) {
    println!("{tag}");
    println!("  below-band nonexistence  gamma_1       = {:.9}", c.gamma1);
    println!("  below-band existence     gamma_1~      = {:.9}", c.gamma1_tilde);
    let flag = match c.gamma2_flag {
        Gamma2Flag::Exact => "exact",
        Gamma2Flag::LowerBoundFromSup => "lower bound from the curve supremum",
    };
    println!("  gap nonexistence         gamma_2       = {:.9}  ({flag})", c.gamma2);
    println!("  gap existence            gamma_2~      = {:.9}", c.gamma2_tilde);
}

fn main() {
    let exact = critical_gammas([0.0; 3]).unwrap();
    let scanned = critical_gammas_scanned([0.0; 3]).unwrap();
    print_constants("closed-form constants at K = 0:", &exact);
    println!();
    print_constants("same constants from the generic curve scanner:", &scanned);
    println!();
    println!(
        "largest relative disagreement: {:.2e}",
        [
            (exact.gamma1, scanned.gamma1),
            (exact.gamma1_tilde, scanned.gamma1_tilde),
            (exact.gamma2_tilde, scanned.gamma2_tilde),
        ]
        .iter()
        .map(|(a, b)| ((a - b) / a).abs())
        .fold(0.0, f64::max)
    );

    println!();
    let k = [1.0, 0.5, -2.0];
    let scan = limit_curve_sup(k, Region::Below).unwrap();
    println!("general K = ({}, {}, {}), below-band branch:", k[0], k[1], k[2]);
    for i in 0..3 {
        println!(
            "  curve {}: sup = {:.9} at alpha = {:.6}  ->  critical gamma = {:.9}",
            i + 1,
            scan.sup[i],
            scan.alpha_star[i],
            1.0 / scan.sup[i]
        );
    }

    println!();
    println!("limit functions (e1, e3, beta-bar) against the depth alpha:");
    println!("{:>8}  {:>14}  {:>14}  {:>14}", "alpha", "e1", "e3", "beta-bar");
    for alpha in [0.0, 0.3, 1.0, 3.0] {
        let (e1, e3, bbar) = limit_funcs(alpha).unwrap();
        println!("{alpha:>8.2}  {e1:>14.9}  {e3:>14.9}  {bbar:>14.9}");
    }
}
