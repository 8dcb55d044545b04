use mfode_core::encoding::{eval_f_direct, eval_f_tensor, norm_closure};
use mfode_core::experiments::catalog;
use mfode_core::linalg::{norm, normalized, CMatrix, C64};
use mfode_core::meanfield::{
    apply_generator, assemble_dense, effective_generator, evolve_exact, product_state, reduce_site, trotter_step,
    MultiCopyState,
};
use mfode_core::reference::rk4_oracle;
use mfode_core::AugmentedSystem;
use proptest::prelude::*;
use proptest::test_runner::RngSeed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CAP: usize = 1 << 16;

fn random_vec(seed: u64, len: usize) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

fn state(aug: &AugmentedSystem, n: usize, seed: u64) -> MultiCopyState {
    MultiCopyState::new(n, aug.dim, random_vec(seed, aug.dim.pow(n as u32)), CAP).unwrap()
}

fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Swap the digits of sites `i` and `j` in every basis index.
fn swap_sites(psi: &MultiCopyState, i: usize, j: usize) -> MultiCopyState {
    let (n, d) = (psi.copies(), psi.dim());
    let amps = psi.amplitudes();
    let mut out = vec![C64::new(0.0, 0.0); amps.len()];
    for (idx, a) in amps.iter().enumerate() {
        let mut digits: Vec<usize> = (0..n).map(|s| (idx / d.pow((n - 1 - s) as u32)) % d).collect();
        digits.swap(i, j);
        let target = digits.iter().fold(0, |acc, &x| acc * d + x);
        out[target] = *a;
    }
    MultiCopyState::new(n, d, out, CAP).unwrap()
}

fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

fn outer(dim: usize, r: usize, c: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    m[(r, c)] = C64::new(1.0, 0.0);
    m
}

/// Dense `L` for `m = 1` built from explicit Kronecker products.
fn kronecker_generator(aug: &AugmentedSystem, n: usize) -> CMatrix {
    let d = aug.dim;
    let size = d.pow(n as u32);
    let mut total = CMatrix::zeros(size, size);
    for t in 0..n {
        for s in (0..n).filter(|&s| s != t) {
            for mono in &aug.monomials {
                let mut op = CMatrix::identity(1, 1);
                for site in 0..n {
                    let factor = if site == t {
                        outer(d, mono.row, mono.col)
                    } else if site == s {
                        outer(d, mono.conj_idx[0], mono.unconj_idx[0])
                    } else {
                        CMatrix::identity(d, d)
                    };
                    op = kron(&op, &factor);
                }
                total += op * mono.coeff;
            }
        }
    }
    total / C64::new((n - 1) as f64, 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 48,
        rng_seed: RngSeed::Fixed(0x5eed),
        ..ProptestConfig::default()
    })]

    #[test]
    fn tensor_contraction_matches_direct(seed in 0u64..10_000, d in 1usize..4, m in 1usize..3) {
        let aug = catalog::random_system(d, m, 5, seed);
        let x = random_vec(seed ^ 0xabc, aug.dim);
        let a = eval_f_tensor(&aug, &x).unwrap();
        let b = eval_f_direct(&aug, &x).unwrap();
        prop_assert!(max_diff(a.as_slice(), b.as_slice()) < 1e-12);
    }

    #[test]
    fn generator_is_linear(seed in 0u64..10_000, n in 2usize..5) {
        let aug = catalog::random_system(1, 1, 3, seed);
        let (p, q) = (state(&aug, n, seed + 1), state(&aug, n, seed + 2));
        let (a, b) = (C64::new(0.3, -1.2), C64::new(-0.7, 0.4));
        let mix: Vec<C64> = p.amplitudes().iter().zip(q.amplitudes()).map(|(x, y)| a * x + b * y).collect();
        let lhs = apply_generator(&aug, &MultiCopyState::new(n, aug.dim, mix, CAP).unwrap()).unwrap();
        let (lp, lq) = (apply_generator(&aug, &p).unwrap(), apply_generator(&aug, &q).unwrap());
        let rhs: Vec<C64> = lp.amplitudes().iter().zip(lq.amplitudes()).map(|(x, y)| a * x + b * y).collect();
        prop_assert!(max_diff(lhs.amplitudes(), &rhs) < 1e-12);
    }

    #[test]
    fn generator_commutes_with_site_swaps(seed in 0u64..10_000, n in 3usize..5, m in 1usize..3) {
        prop_assume!(n > m);
        let aug = catalog::random_system(1, m, 3, seed);
        let psi = state(&aug, n, seed + 7);
        let (i, j) = ((seed % n as u64) as usize, ((seed / 7 + 1) % n as u64) as usize);
        let a = apply_generator(&aug, &swap_sites(&psi, i, j)).unwrap();
        let b = swap_sites(&apply_generator(&aug, &psi).unwrap(), i, j);
        prop_assert!(max_diff(a.amplitudes(), b.amplitudes()) < 1e-12);
    }

    #[test]
    fn dense_kronecker_oracle(seed in 0u64..10_000, n in 2usize..4) {
        let aug = catalog::random_system(1, 1, 4, seed);
        let oracle = kronecker_generator(&aug, n);
        let dense = assemble_dense(&aug, n).unwrap();
        prop_assert!(max_diff(oracle.as_slice(), dense.as_slice()) < 1e-12);
        let psi = state(&aug, n, seed + 3);
        let v = CMatrix::from_column_slice(psi.len(), 1, psi.amplitudes());
        let expect = &oracle * v;
        let got = apply_generator(&aug, &psi).unwrap();
        prop_assert!(max_diff(expect.as_slice(), got.amplitudes()) < 1e-12);
    }

    #[test]
    fn trotter_error_is_second_order(seed in 0u64..10_000) {
        let aug = catalog::random_system(1, 1, 3, seed);
        let psi = state(&aug, 3, seed + 5).normalized();
        let err = |dt: f64| {
            let a = evolve_exact(&aug, &psi, dt).unwrap();
            let b = trotter_step(&aug, &psi, dt).unwrap();
            norm(&a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| x - y).collect::<Vec<_>>())
        };
        let (coarse, fine) = (err(1e-2), err(1e-3));
        // nilpotent generators make the first-order step exact
        if coarse < 1e-14 {
            prop_assert!(fine < 1e-14);
        } else {
            let ratio = coarse / fine;
            prop_assert!(ratio > 60.0 && ratio < 160.0, "ratio {}", ratio);
        }
    }

    #[test]
    fn reduced_derivative_is_effective_generator(seed in 0u64..10_000, n in 2usize..5) {
        let aug = catalog::random_system(1, 1, 3, seed);
        let x = normalized(&random_vec(seed + 11, aug.dim));
        let psi = product_state(&x, n, CAP).unwrap();
        let h = 1e-5;
        // terms away from site 0 only rescale its reduced state, so compare
        // trace-normalized derivatives
        let reduced = |t: f64| reduce_site(&evolve_exact(&aug, &psi, t).unwrap(), 0).unwrap().matrix;
        let numeric = (reduced(h) - reduced(-h)) / C64::new(2.0 * h, 0.0);
        let a = effective_generator(&aug, &x).unwrap();
        let rho = CMatrix::from_column_slice(aug.dim, 1, &x);
        let rho = &rho * rho.adjoint();
        let raw = -(&a * &rho + &rho * a.adjoint());
        let expect = &raw - &rho * raw.trace();
        let diff = max_diff(numeric.as_slice(), expect.as_slice());
        prop_assert!(diff < 1e-7, "diff {diff:e}\n{numeric}\n{expect}");
    }
}

#[test]
fn norm_closure_rk4_keeps_unit_norm() {
    let aug = catalog::scalar_decay();
    let closed = norm_closure(&aug, 2f64.powi(-12)).unwrap();
    let traj = rk4_oracle(&closed, 2).unwrap();
    let c0 = closed.initial_state[0];
    for (k, x) in traj.states.iter().enumerate() {
        assert_eq!(x[0], c0, "constant coordinate moved at step {k}");
        assert!((norm(x) - 1.0).abs() < 1e-4, "norm {} at step {k}", norm(x));
        let t = k as f64 * closed.dt;
        let user = closed.descale(x)[0].re;
        assert!((user - (-t).exp()).abs() < 1e-4, "x({t}) = {user}");
    }
}
