mod common;

use carnot_core::{casimir_brackets, leaf_classify, AlgebraSpec, LeafClass, SkewMatrix};
use carnot_core::lie_structure::KERNEL_TOL;
use common::{gaussian_vec, null_direction_3, random_skew};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn residual(m: &SkewMatrix, a: &[f64]) -> f64 {
    m.apply(a).iter().map(|x| x * x).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn kernel_dimension_parity(k in 2usize..8, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_skew(&mut rng, k);
        let n = m.kernel_basis(KERNEL_TOL).dim();
        prop_assert_eq!(n % 2, k % 2);
    }

    #[test]
    fn casimir_vectors_annihilated(k in 2usize..8, rank_drop in 0usize..3, seed in any::<u64>()) {
        // force a kernel by zeroing the last rows/columns
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = AlgebraSpec::new(k).unwrap();
        let dead = rank_drop.min(k);
        let upper: Vec<f64> = spec.pairs()
            .map(|(_, j)| if j >= k - dead { 0.0 } else { gaussian_vec(&mut rng, 1)[0] })
            .collect();
        let m = SkewMatrix::from_upper(spec, &upper).unwrap();
        let basis = m.kernel_basis(KERNEL_TOL);
        let sigma = m.sigma_max();
        for (i, a) in basis.vectors.iter().enumerate() {
            prop_assert!(residual(&m, a) <= 1e-10 * sigma.max(1.0));
            for (j, b) in basis.vectors.iter().enumerate() {
                let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                prop_assert!((d - expected).abs() <= 1e-12);
            }
            let first = a.iter().find(|x| x.abs() > 1e-12).unwrap();
            prop_assert!(*first > 0.0);
        }
    }

    #[test]
    fn bracket_of_casimir_is_minus_m_a(k in 2usize..7, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = AlgebraSpec::new(k).unwrap();
        let table = spec.bracket_table();
        let m = random_skew(&mut rng, k);
        let h = gaussian_vec(&mut rng, k);
        // arbitrary a: identity {I_a, h_i} = -(M a)_i
        let a = gaussian_vec(&mut rng, k);
        let br = casimir_brackets(&table, &m, &a, &h).unwrap();
        let ma = m.apply(&a);
        for (b, x) in br.iter().zip(&ma) {
            prop_assert!((b + x).abs() <= 1e-12 * (1.0 + x.abs()));
        }
        // kernel vectors Poisson-commute with every h_i
        for a in m.kernel_basis(KERNEL_TOL).vectors {
            for b in casimir_brackets(&table, &m, &a, &h).unwrap() {
                prop_assert!(b.abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn rank3_kernel_is_one_dimensional(h in prop::array::uniform3(-10.0f64..10.0)) {
        let m = SkewMatrix::from_upper(AlgebraSpec::new(3).unwrap(), &h).unwrap();
        let norm = h.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assume!(norm >= 1e-8);
        let basis = m.kernel_basis(KERNEL_TOL);
        prop_assert_eq!(basis.dim(), 1);
        let oracle = null_direction_3(h[0], h[1], h[2]);
        for (x, y) in basis.vectors[0].iter().zip(&oracle) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }
}

#[test]
fn leaf_branches_match_null_space_oracle() {
    let spec = AlgebraSpec::new(3).unwrap();
    let zero = SkewMatrix::zero(spec);
    assert_eq!(leaf_classify(&zero, &[1.0, 2.0, 3.0]).unwrap(), LeafClass::ZeroDim { point: [1.0, 2.0, 3.0] });

    let cases: [[f64; 3]; 6] = [
        [1.0, 0.0, 0.0],
        [0.0, -2.0, 0.0],
        [0.0, 0.0, 0.5],
        [1.0, 1.0, 1.0],
        [0.3, -1.7, 2.2],
        [-4.0, 0.1, -0.01],
    ];
    let h = [0.7, -0.2, 1.3];
    for upper in cases {
        let m = SkewMatrix::from_upper(spec, &upper).unwrap();
        let oracle = null_direction_3(upper[0], upper[1], upper[2]);
        match leaf_classify(&m, &h).unwrap() {
            LeafClass::TwoDim { casimir, level, h_ij } => {
                for (x, y) in casimir.iter().zip(&oracle) {
                    assert!((x - y).abs() < 1e-12, "{upper:?}: {casimir:?} vs {oracle:?}");
                }
                let expected: f64 = oracle.iter().zip(&h).map(|(a, b)| a * b).sum();
                assert!((level - expected).abs() < 1e-12);
                assert_eq!(h_ij, upper);
            }
            other => panic!("{upper:?}: {other:?}"),
        }
    }
}
