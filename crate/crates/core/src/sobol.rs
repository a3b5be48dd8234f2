//! Sobol low-discrepancy sequence in up to 64 dimensions, optionally with a
//! seeded linear matrix scramble plus digital shift.
//!
//! Direction numbers are the Joe–Kuo "new-joe-kuo-6.21201" set. Points are
//! produced in Gray-code order, which is what most reference generators emit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 64;

const BITS: usize = 32;
const SCALE: f64 = 4294967296.0; // 2^32

// (primitive polynomial, initial direction integers m_1..m_s) for dims 1..63.
// Dimension 0 is the van der Corput sequence.
const TABLE: [(u32, &[u32]); MAX_DIM - 1] = [
    (3, &[1]),
    (7, &[1, 3]),
    (11, &[1, 3, 1]),
    (13, &[1, 1, 1]),
    (19, &[1, 1, 3, 3]),
    (25, &[1, 3, 5, 13]),
    (37, &[1, 1, 5, 5, 17]),
    (41, &[1, 1, 5, 5, 5]),
    (47, &[1, 1, 7, 11, 19]),
    (55, &[1, 1, 5, 1, 1]),
    (59, &[1, 1, 1, 3, 11]),
    (61, &[1, 3, 5, 5, 31]),
    (67, &[1, 3, 3, 9, 7, 49]),
    (91, &[1, 1, 1, 15, 21, 21]),
    (97, &[1, 3, 1, 13, 27, 49]),
    (103, &[1, 1, 1, 15, 7, 5]),
    (109, &[1, 3, 1, 15, 13, 25]),
    (115, &[1, 1, 5, 5, 19, 61]),
    (131, &[1, 3, 7, 11, 23, 15, 103]),
    (137, &[1, 3, 7, 13, 13, 15, 69]),
    (143, &[1, 1, 3, 13, 7, 35, 63]),
    (145, &[1, 3, 5, 9, 1, 25, 53]),
    (157, &[1, 3, 1, 13, 9, 35, 107]),
    (167, &[1, 3, 1, 5, 27, 61, 31]),
    (171, &[1, 1, 5, 11, 19, 41, 61]),
    (185, &[1, 3, 5, 3, 3, 13, 69]),
    (191, &[1, 1, 7, 13, 1, 19, 1]),
    (193, &[1, 3, 7, 5, 13, 19, 59]),
    (203, &[1, 1, 3, 9, 25, 29, 41]),
    (211, &[1, 3, 5, 13, 23, 1, 55]),
    (213, &[1, 3, 7, 3, 13, 59, 17]),
    (229, &[1, 3, 1, 3, 5, 53, 69]),
    (239, &[1, 1, 5, 5, 23, 33, 13]),
    (241, &[1, 1, 7, 7, 1, 61, 123]),
    (247, &[1, 1, 7, 9, 13, 61, 49]),
    (253, &[1, 3, 3, 5, 3, 55, 33]),
    (285, &[1, 3, 1, 15, 31, 13, 49, 245]),
    (299, &[1, 3, 5, 15, 31, 59, 63, 97]),
    (301, &[1, 3, 1, 11, 11, 11, 77, 249]),
    (333, &[1, 3, 1, 11, 27, 43, 71, 9]),
    (351, &[1, 1, 7, 15, 21, 11, 81, 45]),
    (355, &[1, 3, 7, 3, 25, 31, 65, 79]),
    (357, &[1, 3, 1, 1, 19, 11, 3, 205]),
    (361, &[1, 1, 5, 9, 19, 21, 29, 157]),
    (369, &[1, 3, 7, 11, 1, 33, 89, 185]),
    (391, &[1, 3, 3, 3, 15, 9, 79, 71]),
    (397, &[1, 3, 7, 11, 15, 39, 119, 27]),
    (425, &[1, 1, 3, 1, 11, 31, 97, 225]),
    (451, &[1, 1, 1, 3, 23, 43, 57, 177]),
    (463, &[1, 3, 7, 7, 17, 17, 37, 71]),
    (487, &[1, 3, 1, 5, 27, 63, 123, 213]),
    (501, &[1, 1, 3, 5, 11, 43, 53, 133]),
    (529, &[1, 3, 5, 5, 29, 17, 47, 173, 479]),
    (539, &[1, 3, 3, 11, 3, 1, 109, 9, 69]),
    (545, &[1, 1, 1, 5, 17, 39, 23, 5, 343]),
    (557, &[1, 3, 1, 5, 25, 15, 31, 103, 499]),
    (563, &[1, 1, 1, 11, 11, 17, 63, 105, 183]),
    (601, &[1, 1, 5, 11, 9, 29, 97, 231, 363]),
    (607, &[1, 1, 5, 15, 19, 45, 41, 7, 383]),
    (617, &[1, 3, 7, 7, 31, 19, 83, 137, 221]),
    (623, &[1, 1, 1, 3, 23, 15, 111, 223, 83]),
    (631, &[1, 1, 5, 13, 31, 15, 55, 25, 161]),
    (637, &[1, 1, 3, 13, 25, 47, 39, 87, 257]),
];

fn direction_numbers(dim: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim == 0 {
        for (k, vk) in v.iter_mut().enumerate() {
            *vk = 1 << (BITS - 1 - k);
        }
        return v;
    }
    let (poly, m) = TABLE[dim - 1];
    let s = m.len();
    for k in 0..s.min(BITS) {
        v[k] = m[k] << (BITS - 1 - k);
    }
    for k in s..BITS {
        let mut x = v[k - s] ^ (v[k - s] >> s);
        for j in 1..s {
            if (poly >> (s - j)) & 1 == 1 {
                x ^= v[k - j];
            }
        }
        v[k] = x;
    }
    v
}

/// Sobol generator. Iterating yields successive points.
#[derive(Clone, Debug)]
pub struct Sobol {
    directions: Vec<[u32; BITS]>,
    shift: Vec<u32>,
    scrambled: bool,
    next: u64,
}

impl Sobol {
    /// The plain sequence. Iteration starts at index 1, skipping the origin.
    pub fn new(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Sobol {
            directions: (0..dim).map(direction_numbers).collect(),
            shift: vec![0; dim],
            scrambled: false,
            next: 1,
        })
    }

    /// Linear-matrix scrambled and digitally shifted sequence. Iteration
    /// starts at index 0; every coordinate lies strictly inside (0, 1).
    pub fn scrambled<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Self> {
        check_dim(dim)?;
        let mut directions = Vec::with_capacity(dim);
        let mut shift = Vec::with_capacity(dim);
        for d in 0..dim {
            // Lower-triangular binary matrix with unit diagonal; row i acts on
            // bit i counted from the most significant end.
            let rows: Vec<u32> = (0..BITS)
                .map(|i| {
                    let above = if i == 0 { 0 } else { rng.random::<u32>() & !(u32::MAX >> i) };
                    above | (1 << (BITS - 1 - i))
                })
                .collect();
            let v = direction_numbers(d);
            let mut sv = [0u32; BITS];
            for (k, out) in sv.iter_mut().enumerate() {
                for (i, row) in rows.iter().enumerate() {
                    if (row & v[k]).count_ones() % 2 == 1 {
                        *out |= 1 << (BITS - 1 - i);
                    }
                }
            }
            directions.push(sv);
            shift.push(rng.random::<u32>());
        }
        Ok(Sobol {
            directions,
            shift,
            scrambled: true,
            next: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.directions.len()
    }

    /// Integer coordinates (scaled by 2^32) of the point at `index`.
    pub fn raw_point(&self, index: u64) -> Vec<u32> {
        let gray = index ^ (index >> 1);
        self.directions
            .iter()
            .zip(&self.shift)
            .map(|(v, &s)| {
                let mut x = s;
                let mut g = gray;
                let mut k = 0;
                while g != 0 && k < BITS {
                    if g & 1 == 1 {
                        x ^= v[k];
                    }
                    g >>= 1;
                    k += 1;
                }
                x
            })
            .collect()
    }

    /// The point at `index` of the underlying sequence.
    pub fn point(&self, index: u64) -> Vec<f64> {
        let half = if self.scrambled { 0.5 } else { 0.0 };
        self.raw_point(index)
            .into_iter()
            .map(|x| (x as f64 + half) / SCALE)
            .collect()
    }

    /// The next `n` points.
    pub fn take_points(&mut self, n: usize) -> Vec<Vec<f64>> {
        self.by_ref().take(n).collect()
    }
}

impl Iterator for Sobol {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        let p = self.point(self.next);
        self.next += 1;
        Some(p)
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::input(format!(
            "Sobol dimension must be in 1..={MAX_DIM}, got {dim}"
        )));
    }
    Ok(())
}

/// `n` scrambled Sobol points in the open unit cube, determined by `seed`.
pub fn sobol_init(dim: usize, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::input("need at least one initial point"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(Sobol::scrambled(dim, &mut rng)?.take_points(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_opening() {
        let pts = Sobol::new(1).unwrap().take_points(4);
        let flat: Vec<f64> = pts.into_iter().map(|p| p[0]).collect();
        assert_eq!(flat, vec![0.5, 0.75, 0.25, 0.375]);
    }

    #[test]
    fn first_rows_match_reference_generator() {
        // Rows 1..=9 of the five-dimensional reference sequence.
        let expected = [
            [0.5, 0.5, 0.5, 0.5, 0.5],
            [0.75, 0.25, 0.25, 0.25, 0.75],
            [0.25, 0.75, 0.75, 0.75, 0.25],
            [0.375, 0.375, 0.625, 0.875, 0.375],
            [0.875, 0.875, 0.125, 0.375, 0.875],
            [0.625, 0.125, 0.875, 0.625, 0.625],
            [0.125, 0.625, 0.375, 0.125, 0.125],
            [0.1875, 0.3125, 0.9375, 0.4375, 0.5625],
            [0.6875, 0.8125, 0.4375, 0.9375, 0.0625],
        ];
        let got = Sobol::new(5).unwrap().take_points(9);
        for (g, e) in got.iter().zip(expected.iter()) {
            assert_eq!(g.as_slice(), e.as_slice());
        }
    }

    #[test]
    fn deep_indices_all_dimensions() {
        let s = Sobol::new(MAX_DIM).unwrap();
        let at_1000: [u32; 64] = [
            943718400, 415236096, 2227175424, 2906652672, 1203765248, 3896508416, 197132288,
            3862953984, 2151677952, 297795584, 364904448, 1094713344, 692060160, 1648361472,
            616562688, 1589641216, 3091202048, 1480589312, 4257218560, 3116367872, 2243952640,
            2361393152, 4081057792, 2319450112, 2503999488, 3896508416, 171966464, 4206886912,
            255852544, 1463812096, 633339904, 624951296, 1270874112, 2545942528, 3443523584,
            3309305856, 3644850176, 3569352704, 1321205760, 2059403264, 3921674240, 1094713344,
            4123000832, 3015704576, 3611295744, 398458880, 3745513472, 3946840064, 4290772992,
            2059403264, 1514143744, 2218786816, 3233808384, 1883242496, 541065216, 3829399552,
            1950351360, 339738624, 3795845120, 2453667840, 1916796928, 2587885568, 1111490560,
            1916796928,
        ];
        let at_1024: [u32; 64] = [
            6291456, 1616904192, 1923088384, 2090860544, 2392850432, 3625975808, 1038090240,
            2522873856, 2992635904, 2883584000, 3529506816, 3957325824, 3034578944, 1453326336,
            568328192, 3680501760, 3672113152, 849346560, 2313158656, 1486880768, 2254438400,
            526385152, 3546284032, 2162163712, 3462397952, 832569344, 3265265664, 3605004288,
            1352663040, 186646528, 4271898624, 4150263808, 1625292800, 3407872000, 845152256,
            2879389696, 3642753024, 1927282688, 996147200, 534773760, 1801453568, 354418688,
            3433037824, 3831496704, 1751121920, 446693376, 677380096, 81788928, 4250927104,
            329252864, 2170552320, 3265265664, 752877568, 3961520128, 1411383296, 1918894080,
            2854223872, 2254438400, 559939584, 1633681408, 220200960, 3680501760, 2975858688,
            4150263808,
        ];
        assert_eq!(s.raw_point(1000), at_1000.to_vec());
        assert_eq!(s.raw_point(1024), at_1024.to_vec());
    }

    #[test]
    fn dimension_cap() {
        assert!(Sobol::new(65).is_err());
        assert!(Sobol::new(0).is_err());
        assert!(matches!(sobol_init(65, 3, 0), Err(Error::Input(_))));
    }

    #[test]
    fn scrambled_is_reproducible_and_interior() {
        let a = sobol_init(7, 50, 42).unwrap();
        let b = sobol_init(7, 50, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sobol_init(7, 50, 43).unwrap());
        assert!(a.iter().flatten().all(|&v| v > 0.0 && v < 1.0));
        let one = sobol_init(4, 1, 9).unwrap();
        assert_eq!(one, sobol_init(4, 1, 9).unwrap());
    }

    #[test]
    fn scramble_keeps_stratification() {
        // Each dyadic interval of width 1/16 holds exactly one of the first 16 points.
        let pts = sobol_init(5, 16, 3).unwrap();
        for d in 0..5 {
            let mut cells = [0; 16];
            for p in &pts {
                cells[(p[d] * 16.0) as usize] += 1;
            }
            assert!(cells.iter().all(|&c| c == 1), "dimension {d}");
        }
    }

    // Star discrepancy via the critical boxes anchored at the origin whose
    // upper corners are built from point coordinates (and 1).
    fn star_discrepancy(pts: &[Vec<f64>]) -> f64 {
        let n = pts.len() as f64;
        let d = pts[0].len();
        let mut grids: Vec<Vec<f64>> = (0..d)
            .map(|k| {
                let mut g: Vec<f64> = pts.iter().map(|p| p[k]).collect();
                g.push(1.0);
                g.sort_by(f64::total_cmp);
                g
            })
            .collect();
        for g in &mut grids {
            g.dedup();
        }
        let mut worst: f64 = 0.0;
        let mut idx = vec![0usize; d];
        loop {
            let corner: Vec<f64> = (0..d).map(|k| grids[k][idx[k]]).collect();
            let vol: f64 = corner.iter().product();
            let open = pts
                .iter()
                .filter(|p| p.iter().zip(&corner).all(|(a, b)| a < b))
                .count() as f64;
            let closed = pts
                .iter()
                .filter(|p| p.iter().zip(&corner).all(|(a, b)| a <= b))
                .count() as f64;
            worst = worst.max(vol - open / n).max(closed / n - vol);
            let mut k = 0;
            loop {
                if k == d {
                    return worst;
                }
                idx[k] += 1;
                if idx[k] < grids[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    fn median(mut v: Vec<f64>) -> f64 {
        v.sort_by(f64::total_cmp);
        let n = v.len();
        0.5 * (v[(n - 1) / 2] + v[n / 2])
    }

    #[test]
    fn lower_discrepancy_than_uniform() {
        let sobol: Vec<f64> = (0..100)
            .map(|s| star_discrepancy(&sobol_init(3, 9, s).unwrap()))
            .collect();
        let iid: Vec<f64> = (0..100)
            .map(|s| {
                let mut rng = ChaCha8Rng::seed_from_u64(1000 + s);
                let pts: Vec<Vec<f64>> =
                    (0..9).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
                star_discrepancy(&pts)
            })
            .collect();
        let fixed_seed = star_discrepancy(&sobol_init(3, 9, 0).unwrap());
        assert!(median(sobol.clone()) < median(iid.clone()));
        assert!(fixed_seed < median(iid));
    }
}
