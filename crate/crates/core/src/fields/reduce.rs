//! Order-deterministic reductions.
//!
//! The summation tree depends only on the input length, never on the number
//! of worker threads, so every reduction is bitwise reproducible.

use super::{Grid, ScalarField, NG};
use rayon::prelude::*;

const LEAF: usize = 32;
const PAR_MIN: usize = 1 << 14;

/// Pairwise (cascade) sum with a fixed split point at `n / 2`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n <= LEAF {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let (lo, hi) = xs.split_at(n / 2);
    if n >= PAR_MIN {
        let (a, b) = rayon::join(|| pairwise_sum(lo), || pairwise_sum(hi));
        a + b
    } else {
        pairwise_sum(lo) + pairwise_sum(hi)
    }
}

/// Pairwise sum of `f(i, j)` over interior cells in row-major order.
pub fn reduce_cells(grid: Grid, f: impl Fn(isize, isize) -> f64 + Sync) -> f64 {
    let nx = grid.nx;
    let mut vals = vec![0.0; grid.cells()];
    vals.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        for (i, v) in row.iter_mut().enumerate() {
            *v = f(i as isize, j as isize);
        }
    });
    pairwise_sum(&vals)
}

/// Midpoint rule over the interior.
pub fn integrate(s: &ScalarField) -> f64 {
    let g = s.grid;
    let stride = g.stride();
    reduce_cells(g, |i, j| {
        s.data[(j as usize + NG) * stride + i as usize + NG]
    }) * g.cell_area()
}

/// Exact maximum of `|s|` over interior cells.
pub fn sup_norm(s: &ScalarField) -> f64 {
    s.interior().fold(0.0, |m: f64, v| m.max(v.abs()))
}

pub fn l2_norm(s: &ScalarField) -> f64 {
    integrate(&s.map(|v| v * v)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::BoundaryMode;
    use proptest::prelude::*;

    #[test]
    fn constant_on_unit_square() {
        let g = Grid::unit_square(16, BoundaryMode::Physical).unwrap();
        assert_eq!(integrate(&ScalarField::constant(g, 1.0)), 1.0);
    }

    #[test]
    fn midpoint_exact_for_linear() {
        let g = Grid::unit_square(64, BoundaryMode::Physical).unwrap();
        let s = ScalarField::from_fn(g, |x, _| x);
        assert_eq!(integrate(&s), 0.5);
    }

    #[test]
    fn norms_of_simple_fields() {
        let g = Grid::unit_square(8, BoundaryMode::Periodic).unwrap();
        assert_eq!(sup_norm(&ScalarField::constant(g, -2.0)), 2.0);
        assert_eq!(sup_norm(&ScalarField::zeros(g)), 0.0);
        assert_eq!(l2_norm(&ScalarField::zeros(g)), 0.0);
        assert!((l2_norm(&ScalarField::constant(g, 3.0)) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn same_bits_across_pool_sizes() {
        let xs: Vec<f64> = (0..200_000)
            .map(|k| ((k as f64) * 0.7133).sin() * 1e3 + 1e-7 * k as f64)
            .collect();
        let sums: Vec<u64> = [1, 2, 8]
            .iter()
            .map(|&n| {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .unwrap()
                    .install(|| pairwise_sum(&xs))
                    .to_bits()
            })
            .collect();
        assert!(sums.windows(2).all(|w| w[0] == w[1]));
    }

    proptest! {
        #[test]
        fn sup_norm_matches_naive_scan(vals in proptest::collection::vec(-1e6f64..1e6, 64)) {
            let g = Grid::unit_square(8, BoundaryMode::Periodic).unwrap();
            let s = ScalarField::from_cells(g, |i, j| vals[(j * 8 + i) as usize]);
            let mut naive = 0.0f64;
            for v in &vals {
                if v.abs() > naive {
                    naive = v.abs();
                }
            }
            prop_assert_eq!(sup_norm(&s), naive);
        }

        #[test]
        fn pairwise_close_to_naive(vals in proptest::collection::vec(-1.0f64..1.0, 0..500)) {
            let naive: f64 = vals.iter().sum();
            prop_assert!((pairwise_sum(&vals) - naive).abs() <= 1e-12 * (1.0 + vals.len() as f64));
        }
    }
}
