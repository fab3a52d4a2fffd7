use maskgrid::families::{composite_family, qubit_anchor};
use maskgrid::geometry::{masking_constraints, spherical_circle_check};
use maskgrid::masker::{compose_even_odd, qubit_circle_masker, Masker};
use maskgrid::protocol::{codebook_leakage, decode_fidelities, SecretFamily};
use maskgrid::reduce::is_masked_set;
use maskgrid::search::{find_masker_for_circle, masking_objective, SearchConfig};
use maskgrid::statespace::{angles_to_amplitudes, wrap_phase, HyperAngles};
use proptest::prelude::*;
use std::f64::consts::TAU;

fn composite(n: usize, alphas: &[f64], seed: u64) -> (Masker, Vec<maskgrid::PureState>) {
    let qs: Vec<_> = alphas.iter().map(|&a| qubit_circle_masker(a)).collect();
    let m = compose_even_odd(&qs, n).unwrap();
    let blocks = alphas.len();
    let anchors = vec![qubit_anchor(); blocks];
    let lead = (n % 2 == 1).then_some(0.3);
    let rest = 1.0 - lead.map_or(0.0, |l| l * l);
    let weights = vec![(rest / blocks as f64).sqrt(); blocks];
    let fam = composite_family(alphas, &anchors, &weights, lead, 12, seed).unwrap();
    (m, fam)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn composed_maskers_mask_composite_families(
        n in 2usize..=7,
        a in 0.0f64..TAU,
        b in 0.0f64..TAU,
        c in 0.0f64..TAU,
        seed in 0u64..1000,
    ) {
        let alphas = [a, b, c][..n / 2].to_vec();
        let (m, fam) = composite(n, &alphas, seed);
        prop_assert!(is_masked_set(&m, &fam, 1e-9).unwrap());
        prop_assert!(codebook_leakage(&m, &fam).unwrap().max() < 1e-12);
    }

    #[test]
    fn json_roundtrip_preserves_masking(alpha in 0.0f64..TAU, seed in 0u64..1000) {
        let m = qubit_circle_masker(alpha);
        let back = Masker::from_json(&m.to_json(), false).unwrap();
        let anchor = HyperAngles::new(vec![0.4], vec![wrap_phase(alpha + 0.3)]).unwrap();
        let fam = maskgrid::families::qubit_circle_family(alpha, &anchor, 10, seed).unwrap();
        prop_assert!(masking_objective(&back, &fam).unwrap() < 1e-20);
    }
}

#[test]
fn circle_constraints_search_then_share() {
    let anchor = angles_to_amplitudes(&qubit_anchor());
    let cons = masking_constraints(&qubit_circle_masker(0.0), Some(&anchor)).unwrap();
    let cfg = SearchConfig {
        seed: 3,
        ..SearchConfig::default()
    };
    let found = find_masker_for_circle(&cons, 2, &cfg).unwrap();
    assert!(found.converged && found.objective < 1e-8);

    let fam = maskgrid::families::qubit_circle_family(0.0, &qubit_anchor(), 8, 9).unwrap();
    assert!(spherical_circle_check(&fam, &cons, 1e-10));
    let family = SecretFamily::new(qubit_circle_masker(0.0), fam, anchor).unwrap();
    assert!(decode_fidelities(&family)
        .unwrap()
        .iter()
        .all(|&f| f > 1.0 - 1e-12));
}
