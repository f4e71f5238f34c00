use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use twospin::oracle::{degenerate_groups, exact_spectrum};
use twospin::sampling::random_spec;
use twospin::{IntegrableModel, SiteList, Spin};

/// The eigenbasis of H block-diagonalizes every transfer-matrix coefficient.
#[test]
fn charges_are_block_diagonal_in_hamiltonian_eigenbasis() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let half = Spin::HALF;
    let clusters = [
        SiteList::spin_half(2, 1).unwrap(),
        SiteList::spin_half(2, 2).unwrap(),
        SiteList::new(vec![half, Spin::ONE], vec![half]).unwrap(),
    ];
    for sites in clusters {
        let model = IntegrableModel::new(random_spec(sites, &mut rng)).unwrap();
        let h = model.hamiltonian().unwrap();
        let spectrum = exact_spectrum(&h, true).unwrap();
        let values = spectrum.real().unwrap();
        let vecs = spectrum.eigenvectors.as_ref().unwrap();
        let groups = degenerate_groups(values, 1e-8 * h.max_abs());
        let charges = model.charges().unwrap();
        for c in [&charges.c0, &charges.c1] {
            let rotated = vecs.adjoint() * c.matrix() * vecs;
            let mut worst = 0.0_f64;
            for (gi, a) in groups.iter().enumerate() {
                for (gj, b) in groups.iter().enumerate() {
                    if gi == gj {
                        continue;
                    }
                    for i in a.clone() {
                        for j in b.clone() {
                            worst = worst.max(rotated[(i, j)].norm());
                        }
                    }
                }
            }
            assert!(worst <= 1e-8 * c.max_abs().max(1.0), "off-block entry {worst:.3e}");
        }
    }
}
