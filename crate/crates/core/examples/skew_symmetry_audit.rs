//! Checks that `Ṁ − 2C` is skew-symmetric for the two-link model, and that
//! the check catches a corrupted Coriolis matrix.

use hgsmc::analysis::{check_skew_symmetry, check_skew_symmetry_with};
use hgsmc::dynamics::TwoLinkParams;

fn main() {
    let p = TwoLinkParams::default();
    let good = check_skew_symmetry(&p, 10_000);
    println!("analytic C:     max |v'(Mdot - 2C)v| / |v|^2 = {good:.3e}");

    let flipped = check_skew_symmetry_with(&p, 10_000, 1, &|p, q, qd| -p.coriolis_matrix(q, qd));
    println!("sign-flipped C: max |v'(Mdot - 2C)v| / |v|^2 = {flipped:.3e}");

    let (lo, hi) = p.inertia_eigen_range();
    println!("eigenvalues of M over q2: [{lo:.4}, {hi:.4}]");
}
