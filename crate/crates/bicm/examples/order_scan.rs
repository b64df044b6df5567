//! Scratch scan of quadrature order vs accuracy on the identities the
//! acceptance suite checks. Not part of the test suite.

use bicm::constellation::{Constellation, Family, Labeling};
use bicm::infotheory::{self, Snr};
use bicm::quadrature::QuadratureRule;

fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| {
            10.0_f64.powf(
                lo.log10() + (hi.log10() - lo.log10()) * k as f64 / (count - 1) as f64,
            )
        })
        .collect()
}

fn main() {
    let bpsk = Constellation::build(Family::Pam, 1, Labeling::Gray).unwrap();
    let qpsk = Constellation::build(Family::Psk, 2, Labeling::Gray).unwrap();
    let qam_gray = Constellation::build(Family::Qam, 4, Labeling::Gray).unwrap();
    let qam_sp = Constellation::build(Family::Qam, 4, Labeling::SetPartitioning).unwrap();
    let grid = log_grid(0.01, 100.0, 20);

    for order in [32usize, 48, 64, 96, 128] {
        let rule = QuadratureRule::gauss_hermite(order).unwrap();

        // Criterion 1: I-MMSE via central differences.
        let mut worst_imse = 0.0f64;
        let mut worst_imse_at = (String::new(), 0.0);
        for (name, c) in [("bpsk", &bpsk), ("qpsk", &qpsk), ("qam16g", &qam_gray)] {
            for &s in &grid {
                let h = (1e-4 * s).max(1e-6);
                let hi = infotheory::mi_cm(c.points(), Snr::new(s + h).unwrap(), &rule).unwrap();
                let lo = infotheory::mi_cm(c.points(), Snr::new(s - h).unwrap(), &rule).unwrap();
                let fd = (hi - lo) / (2.0 * h);
                let mmse = infotheory::mmse_cm(c.points(), Snr::new(s).unwrap(), &rule).unwrap();
                let err = (fd - mmse).abs();
                if err > worst_imse {
                    worst_imse = err;
                    worst_imse_at = (name.to_string(), s);
                }
            }
        }

        // Criterion 2: Theorem derivative vs FD of the decomposition.
        let mut worst_thm = 0.0f64;
        let mut worst_thm_at = (String::new(), 0.0);
        for (name, c) in [("qam16g", &qam_gray), ("qam16sp", &qam_sp)] {
            for &s in &grid {
                let h = (1e-4 * s).max(1e-6);
                let hi = infotheory::mi_bicm_decomposed(c, Snr::new(s + h).unwrap(), &rule).unwrap();
                let lo = infotheory::mi_bicm_decomposed(c, Snr::new(s - h).unwrap(), &rule).unwrap();
                let fd = (hi - lo) / (2.0 * h);
                let d = infotheory::bicm_mi_derivative(c, Snr::new(s).unwrap(), &rule).unwrap();
                let err = (fd - d).abs();
                if err > worst_thm {
                    worst_thm = err;
                    worst_thm_at = (name.to_string(), s);
                }
            }
        }

        // Criterion 3: direct vs decomposed BICM MI.
        let mut worst_decomp = 0.0f64;
        for c in [&qam_gray, &qam_sp] {
            for &s in &grid {
                let a = infotheory::mi_bicm_direct(c, Snr::new(s).unwrap(), &rule).unwrap();
                let b = infotheory::mi_bicm_decomposed(c, Snr::new(s).unwrap(), &rule).unwrap();
                worst_decomp = worst_decomp.max((a - b).abs());
            }
        }

        println!(
            "order {order:3}: imse {worst_imse:.3e} ({} snr {:.3}), thm {worst_thm:.3e} ({} snr {:.3}), decomp {worst_decomp:.3e}",
            worst_imse_at.0, worst_imse_at.1, worst_thm_at.0, worst_thm_at.1
        );
    }

    // Criterion 7 self-consistency: order 32 vs 64 on the MMSE integrand.
    let r32 = QuadratureRule::gauss_hermite(32).unwrap();
    let r64 = QuadratureRule::gauss_hermite(64).unwrap();
    let r96 = QuadratureRule::gauss_hermite(96).unwrap();
    let r128 = QuadratureRule::gauss_hermite(128).unwrap();
    let s10 = Snr::new(10.0).unwrap();
    let a = infotheory::mmse_cm(qam_gray.points(), s10, &r32).unwrap();
    let b = infotheory::mmse_cm(qam_gray.points(), s10, &r64).unwrap();
    let c96 = infotheory::mmse_cm(qam_gray.points(), s10, &r96).unwrap();
    let c128 = infotheory::mmse_cm(qam_gray.points(), s10, &r128).unwrap();
    println!("mmse 16qam snr10: n32 {a:.12e}  n64 {b:.12e}  |diff| {:.3e}", (a - b).abs());
    println!("                  n96-n128 diff {:.3e}", (c96 - c128).abs());

    // Same self-consistency per snr for BPSK (worst geometry).
    for s in [0.5, 1.0, 2.0, 3.0, 5.0, 10.0] {
        let snr = Snr::new(s).unwrap();
        let a = infotheory::mmse_cm(bpsk.points(), snr, &r32).unwrap();
        let b = infotheory::mmse_cm(bpsk.points(), snr, &r64).unwrap();
        let c = infotheory::mmse_cm(bpsk.points(), snr, &r128).unwrap();
        println!("bpsk mmse snr {s:5.2}: n32-n64 {:.3e}   n64-n128 {:.3e}", (a - b).abs(), (b - c).abs());
    }

    // Criterion 5b: Gray derivative vs CM mmse, relative, 15..25 dB.
    for order in [32usize, 64, 96] {
        let rule = QuadratureRule::gauss_hermite(order).unwrap();
        print!("rel gap order {order}: ");
        for db in [15.0, 17.5, 20.0, 22.5, 25.0] {
            let s = Snr::from_db(db).unwrap();
            let d = infotheory::bicm_mi_derivative(&qam_gray, s, &rule).unwrap();
            let m = infotheory::mmse_cm(qam_gray.points(), s, &rule).unwrap();
            print!("{db}dB {:.4}  ", (d - m).abs() / m);
        }
        println!();
    }

    // Criterion 5c: SP vs Gray separation in [0, 10] dB.
    let rule = QuadratureRule::gauss_hermite(64).unwrap();
    let mut max_sep = 0.0f64;
    for k in 0..11 {
        let s = Snr::from_db(k as f64).unwrap();
        let g = infotheory::bicm_mi_derivative(&qam_gray, s, &rule).unwrap();
        let p = infotheory::bicm_mi_derivative(&qam_sp, s, &rule).unwrap();
        max_sep = max_sep.max((g - p).abs() / g.abs().max(p.abs()));
    }
    println!("sp-vs-gray max relative separation in [0,10] dB: {max_sep:.4}");
}
