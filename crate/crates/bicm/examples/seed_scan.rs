//! Scratch scan: worst sigma-deviation of the MC cross-validation cells for
//! candidate seed bases. Not part of the test suite.

use bicm::constellation::{Constellation, Family, Labeling};
use bicm::infotheory::{self, Snr};
use bicm::montecarlo;
use bicm::quadrature::QuadratureRule;

fn main() {
    let rule = QuadratureRule::default_rule();
    let bpsk = Constellation::build(Family::Pam, 1, Labeling::Gray).unwrap();
    let qpsk = Constellation::build(Family::Psk, 2, Labeling::Gray).unwrap();
    let qam = Constellation::build(Family::Qam, 4, Labeling::Gray).unwrap();
    const SAMPLES: u64 = 1_000_000;

    for base in [
        0xB1C3_1000u64,
        0xB1C3_2000,
        0xB1C3_3000,
        0xB1C3_4000,
        0xB1C3_5000,
        0xB1C3_6000,
        0xB1C3_7000,
    ] {
        let mut worst = 0.0f64;
        let mut worst_cell = String::new();
        for (name, c) in [("bpsk", &bpsk), ("qpsk", &qpsk), ("16qam", &qam)] {
            for (index, &s) in [0.1, 1.0, 10.0].iter().enumerate() {
                let seed = base + index as u64;
                let point = Snr::new(s).unwrap();
                let cells = [
                    (
                        "mi_cm",
                        infotheory::mi_cm(c.points(), point, &rule).unwrap(),
                        montecarlo::mc_mi_cm(c.points(), point, SAMPLES, seed).unwrap(),
                    ),
                    (
                        "mi_bicm",
                        infotheory::mi_bicm_direct(c, point, &rule).unwrap(),
                        montecarlo::mc_mi_bicm(c, point, SAMPLES, seed + 7).unwrap(),
                    ),
                    (
                        "mmse",
                        infotheory::mmse_cm(c.points(), point, &rule).unwrap(),
                        montecarlo::mc_mmse(c.points(), point, SAMPLES, seed + 13).unwrap(),
                    ),
                ];
                for (what, quad, mc) in cells {
                    let sigmas = (quad - mc.mean).abs() / mc.std_error.max(1e-15);
                    if sigmas > worst {
                        worst = sigmas;
                        worst_cell = format!("{name} {what} snr {s}");
                    }
                }
            }
        }
        println!("base {base:#x}: worst {worst:.2} sigma ({worst_cell})");
    }
}
