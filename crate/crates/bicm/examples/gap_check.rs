use bicm::constellation::{Constellation, Family, Labeling};
use bicm::infotheory::{self, Snr};
use bicm::quadrature::QuadratureRule;

fn main() {
    let qam_gray = Constellation::build(Family::Qam, 4, Labeling::Gray).unwrap();
    let rule = QuadratureRule::gauss_hermite(96).unwrap();
    for db in [15.0, 16.25, 17.5, 18.75, 20.0, 21.25, 22.5, 23.0, 24.0] {
        let s = Snr::from_db(db).unwrap();
        let d = infotheory::bicm_mi_derivative(&qam_gray, s, &rule).unwrap();
        let m = infotheory::mmse_cm(qam_gray.points(), s, &rule).unwrap();
        println!("{db:6.2} dB: deriv {d:.6e} mmse {m:.6e} rel {:.3e}", (d - m).abs() / m);
    }
}
