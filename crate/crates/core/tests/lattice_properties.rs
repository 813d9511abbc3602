use proptest::prelude::*;
use pstlab::lattice::{
    c0_from_c_max, design_array, pst_coupling_spectrum, pst_time, spacing_from_coupling, z_pst, DecayLaw,
    ROUND_TRIP_RTOL,
};

fn odd_n() -> impl Strategy<Value = usize> {
    (1usize..13).prop_map(|k| 2 * k + 1)
}

proptest! {
    #[test]
    fn designed_gaps_reproduce_target_couplings(
        n in odd_n(),
        d_min in 5.0f64..20.0,
        a in 0.5f64..10.0,
        b in 0.05f64..0.5,
    ) {
        let design = design_array(n, d_min, a, b).unwrap();
        let law = DecayLaw::new(a, b).unwrap();
        let c_max = law.coupling(d_min).unwrap();
        let target = pst_coupling_spectrum(n, c0_from_c_max(n, c_max)).unwrap();
        for (got, want) in design.couplings_with(&law).iter().zip(target.couplings()) {
            prop_assert!((got - want).abs() <= ROUND_TRIP_RTOL * want, "{got} vs {want}");
        }
    }

    #[test]
    fn spacings_and_couplings_are_mirror_symmetric(n in odd_n(), d_min in 5.0f64..20.0, b in 0.05f64..0.5) {
        let design = design_array(n, d_min, 3.6, b).unwrap();
        let s = design.spacings_um();
        for k in 0..s.len() {
            prop_assert!((s[k] - s[s.len() - 1 - k]).abs() <= 1e-9);
        }
        prop_assert!(design.coupling_spectrum().is_mirror_symmetric(1e-12));
        let spec = pst_coupling_spectrum(n + 1, 1.0).unwrap();
        prop_assert!(spec.is_mirror_symmetric(1e-12));
    }

    #[test]
    fn transfer_lengths_agree(n in 2usize..40, c_max in 0.01f64..5.0) {
        let odd = n | 1;
        let t = pst_time(c0_from_c_max(odd, c_max)).unwrap();
        let z = z_pst(odd, c_max).unwrap();
        prop_assert!((t - z).abs() <= 1e-12 * z, "{t} vs {z}");
    }

    #[test]
    fn spacing_is_smallest_at_centre(n in odd_n(), d_min in 5.0f64..20.0, b in 0.05f64..0.5) {
        let s: Vec<f64> = (1..n).map(|k| spacing_from_coupling(k, n, d_min, b).unwrap()).collect();
        let mid = (n - 1) / 2;
        for k in 1..mid {
            prop_assert!(s[k - 1] > s[k] - 1e-12);
        }
        for k in mid..s.len() - 1 {
            prop_assert!(s[k + 1] > s[k] - 1e-12);
        }
        let min = s.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert!((min - d_min).abs() <= 1e-9);
    }
}

#[test]
fn even_sites_refused_for_spacings() {
    assert!(spacing_from_coupling(1, 4, 12.0, 0.19).is_err());
    assert!(design_array(4, 12.0, 3.6, 0.19).is_err());
    assert!(pst_coupling_spectrum(4, 1.0).is_ok());
}
