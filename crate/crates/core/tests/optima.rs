use kazcert::certify::{round_and_repair, verify_certificate, CertifierConfig};
use kazcert::presets::{build_complex, preset_presentation};
use kazcert::rat;
use kazcert::solver::{solve, SolverConfig};
use kazcert::sos::{encode, EncodeOptions, SosMode};

/// Smallest nonzero eigenvalue of `2 - t - t⁻¹` over the characters of Z/n.
fn character_gap(n: usize) -> f64 {
    (1..n)
        .map(|j| 2.0 - 2.0 * (2.0 * std::f64::consts::PI * j as f64 / n as f64).cos())
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn cyclic_certificates_reach_the_character_gap() {
    for n in 2..=6usize {
        let c = build_complex(preset_presentation(&format!("cyclic:{n}")).unwrap(), 1).unwrap();
        // B_d is the whole group once d ≥ n/2
        let d = n.div_ceil(2).max(1);
        for mode in [SosMode::OzawaT, SosMode::BracketTn(1)] {
            let p = encode(&c, mode, &EncodeOptions { half_radius: Some(d), ..Default::default() }).unwrap();
            let s = solve(&p, &SolverConfig::default());
            let cert = round_and_repair(&s, &p, &c, &CertifierConfig::default()).unwrap();
            let eps = rat::to_f64(&cert.epsilon);
            let gap = character_gap(n);
            assert!(eps <= gap + 1e-9 && eps >= gap - 1e-6, "Z/{n} {mode:?}: ε̂ = {eps}, gap {gap}");
            assert!(verify_certificate(&cert, &c).unwrap().accepted());
        }
    }
}

#[test]
fn radius_one_is_too_small_for_z4() {
    let c = build_complex(preset_presentation("cyclic:4").unwrap(), 0).unwrap();
    let p = encode(&c, SosMode::OzawaT, &EncodeOptions::default()).unwrap();
    assert_eq!(p.half_radius(), 1);
    let s = solve(&p, &SolverConfig::default());
    assert!(s.epsilon.abs() < 1e-6, "{}", s.epsilon);
    assert!(round_and_repair(&s, &p, &c, &CertifierConfig::default()).is_err());
}
