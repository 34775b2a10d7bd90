use harperband::eigen::{hermitian_eigenvalues, DenseMatrix};
use harperband::quantum::*;
use harperband::TrigSymbol;
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

/// Almost-Mathieu matrix built by hand: ψ_{j+1} + ψ_{j−1} + 2α cos(x₀ + jh) ψ_j
/// with ψ_{j+η} = e^{iθ} ψ_j.
fn hofstadter(alpha: f64, eta: usize, x0: f64, theta: f64) -> Vec<f64> {
    let h = 2.0 * PI / eta as f64;
    let mut m = DenseMatrix::zeros(eta);
    for j in 0..eta {
        m[(j, j)] += Complex64::new(2.0 * alpha * (x0 + j as f64 * h).cos(), 0.0);
        let up = (j + 1) % eta;
        let phase = if j + 1 == eta { Complex64::from_polar(1.0, theta) } else { Complex64::new(1.0, 0.0) };
        m[(j, up)] += phase;
        m[(up, j)] += phase.conj();
    }
    hermitian_eigenvalues(&m).unwrap()
}

#[test]
fn harper_matches_hand_built_hofstadter() {
    for eta in [3usize, 5, 8] {
        let f = FluxContext::new(eta).unwrap();
        for &k1 in &k_axis(8) {
            for &k2 in &k_axis(8) {
                let got = spectrum_at(&TrigSymbol::harper(0.5), f, Quasimomentum::new(k1, k2)).unwrap();
                let want = hofstadter(0.5, eta, -f.h() * k1 / (2.0 * PI), k2);
                for (a, b) in got.iter().zip(&want) {
                    assert!((a - b).abs() < 1e-10, "eta={eta} k=({k1},{k2}): {a} vs {b}");
                }
            }
        }
    }
}

/// Symmetric splitting e^{inx/2} e^{imp̂} e^{inx/2} applied to a sampled
/// plane wave, compared with the assembled row action on the comb.
#[test]
fn weyl_action_matches_symmetric_split_on_plane_waves() {
    let eta = 9usize;
    let f = FluxContext::new(eta).unwrap();
    let h = f.h();
    let terms = [(2i32, 3i32), (-1, 4), (3, -2)];
    let xi = 0.37;
    for (t, &(m, n)) in terms.iter().enumerate() {
        let sym = TrigSymbol::from_coeffs(
            [((m, n), Complex64::new(0.5, 0.0)), ((-m, -n), Complex64::new(0.5, 0.0))]
                .into_iter()
                .collect(),
        )
        .unwrap();
        let k = Quasimomentum::new(0.3 * t as f64 - 0.4, 0.7);
        let x0 = -h * k.k1 / (2.0 * PI);
        // comb samples of a Bloch plane wave: ψ(x) = e^{iξ x}, k₂ fixed by ξ
        let k2 = (xi * 2.0 * PI) % (2.0 * PI);
        let k = Quasimomentum::new(k.k1, k2);
        let psi = |x: f64| Complex64::from_polar(1.0, xi * x);
        let split = |x: f64, mm: i32, nn: i32| {
            let half = |y: f64| Complex64::from_polar(1.0, nn as f64 * y / 2.0);
            half(x) * half(x + mm as f64 * h) * psi(x + mm as f64 * h)
        };
        let bm = bloch_matrix(&sym, f, k).unwrap();
        for i in 0..eta {
            let xi_site = x0 + i as f64 * h;
            let direct = (split(xi_site, m, n) + split(xi_site, -m, -n)) * 0.5;
            let mut row = Complex64::new(0.0, 0.0);
            for j in 0..eta {
                row += bm.matrix()[(i, j)] * psi(x0 + j as f64 * h);
            }
            assert!((row - direct).norm() < 1e-12, "term {t} row {i}: {row} vs {direct}");
        }
    }
}

#[test]
fn harper_eta4_total_bandwidth_stable_under_refinement() {
    let f = FluxContext::new(4).unwrap();
    let s = TrigSymbol::harper(0.5);
    let coarse = band_structure(&s, f, KGrid::square(16)).unwrap();
    let fine = band_structure(&s, f, KGrid::square(64)).unwrap();
    assert!(coarse.merged.len() <= 4);
    assert!((coarse.total_bandwidth() - fine.total_bandwidth()).abs() < 1e-6);
    let refined = band_structure_refined(&s, f, 8, 64, 1e-6).unwrap();
    assert!((refined.total_bandwidth() - fine.total_bandwidth()).abs() < 1e-6);
}

#[test]
fn x_free_symbol_fills_minus_two_to_two() {
    let s = TrigSymbol::from_cosines(&[((1, 0), 2.0)]).unwrap();
    for eta in [3usize, 6] {
        let t = band_structure(&s, FluxContext::new(eta).unwrap(), KGrid::square(32)).unwrap();
        let lo = t.merged.first().unwrap().lo;
        let hi = t.merged.last().unwrap().hi;
        assert!((lo + 2.0).abs() < 0.05 && (hi - 2.0).abs() < 0.05);
        // every gap is a grid artefact
        assert!(t.gaps.iter().all(|g| g.width() < 0.1));
    }
}

#[test]
fn widths_near_harper_alternates() {
    let eta = 64;
    let f = FluxContext::new(eta).unwrap();
    let t = band_structure(&TrigSymbol::harper(0.5), f, KGrid::new(2, 64)).unwrap();
    let items = widths_near(&t, 1.0, 5.0 * f.h()).unwrap();
    assert!(items.len() >= 3);
    for w in items.windows(2) {
        assert_ne!(w[0].kind, w[1].kind);
    }
}

#[test]
fn band_count_is_eta() {
    for eta in [1usize, 2, 7] {
        let t = band_structure(&TrigSymbol::harper(0.3), FluxContext::new(eta).unwrap(), KGrid::square(4)).unwrap();
        assert_eq!(t.band_ranges.len(), eta);
        assert!(t.energies.iter().all(|row| row.len() == eta && row.windows(2).all(|w| w[0] <= w[1])));
    }
}

#[test]
fn parallel_result_is_deterministic() {
    let f = FluxContext::new(12).unwrap();
    let s = TrigSymbol::from_cosines(&[((1, 0), 2.0), ((0, 1), 1.3), ((1, 1), 0.4)]).unwrap();
    let a = band_structure(&s, f, KGrid::square(8)).unwrap();
    let b = band_structure(&s, f, KGrid::square(8)).unwrap();
    assert_eq!(a.energies, b.energies);
}

fn symbol_strategy() -> impl Strategy<Value = TrigSymbol> {
    prop::collection::vec(((-2i32..=2, -2i32..=2), -1.0f64..1.0), 1..5)
        .prop_map(|terms| TrigSymbol::from_cosines(&terms).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bloch_matrix_is_hermitian(s in symbol_strategy(), eta in 1usize..10, k1 in -PI..PI, k2 in -PI..PI) {
        let f = FluxContext::new(eta).unwrap();
        let raw = bloch_matrix_with_phase_sign(&s, f, Quasimomentum::new(k1, k2), 1.0);
        prop_assert!(raw.is_ok());
    }

    #[test]
    fn spectrum_is_two_pi_periodic_in_k(s in symbol_strategy(), eta in 1usize..9, k1 in -PI..PI, k2 in -PI..PI) {
        let f = FluxContext::new(eta).unwrap();
        let base = spectrum_at(&s, f, Quasimomentum::new(k1, k2)).unwrap();
        // shifting by 2π before reduction must not change the eigenvalue set
        for (d1, d2) in [(2.0 * PI, 0.0), (0.0, 2.0 * PI)] {
            let q = Quasimomentum { k1: k1 + d1, k2: k2 + d2 };
            let other = bloch_matrix(&s, f, q).unwrap().eigenvalues().unwrap();
            for (a, b) in base.iter().zip(&other) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn translation_by_lattice_step_preserves_spectrum(s in symbol_strategy(), eta in 2usize..8, l in -3i64..4) {
        let f = FluxContext::new(eta).unwrap();
        let shifted = s.shift_x(f.h() * l as f64);
        let a = band_structure(&s, f, KGrid::square(4)).unwrap();
        let b = band_structure(&shifted, f, KGrid::square(4)).unwrap();
        let mut ea: Vec<f64> = a.energies.concat();
        let mut eb: Vec<f64> = b.energies.concat();
        ea.sort_by(f64::total_cmp);
        eb.sort_by(f64::total_cmp);
        for (x, y) in ea.iter().zip(&eb) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }
}
