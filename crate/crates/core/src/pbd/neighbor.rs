use crate::Vec3;

/// Compressed per-particle neighbor lists, each sorted ascending.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NeighborLists {
    pub(crate) offsets: Vec<usize>,
    pub(crate) indices: Vec<usize>,
    /// For entry `e` of row `i` pointing at `j`, the entry of row `j` that
    /// points back at `i`.
    pub(crate) mirror: Vec<usize>,
    /// First entry of each row pointing at a higher index.
    pub(crate) upper: Vec<usize>,
}

impl NeighborLists {
    pub fn len(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.indices[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn to_vecs(&self) -> Vec<Vec<usize>> {
        (0..self.len())
            .map(|i| self.neighbors(i).to_vec())
            .collect()
    }
}

type Cell = (i64, i64, i64);

/// Uniform-grid neighbor search: for each particle, every other particle
/// within `radius` (inclusive).
pub fn neighbor_search(positions: &[Vec3], radius: f64) -> NeighborLists {
    assert!(radius > 0.0, "neighbor radius must be positive");
    let n = positions.len();
    // Slightly oversized cells keep every in-range pair within adjacent cells
    // even after rounding in the division.
    let inv_cell = 1.0 / (radius * (1.0 + 1e-6));
    let cell_of = |p: Vec3| -> Cell {
        (
            (p.x * inv_cell).floor() as i64,
            (p.y * inv_cell).floor() as i64,
            (p.z * inv_cell).floor() as i64,
        )
    };

    let raw: Vec<Cell> = positions.iter().map(|&p| cell_of(p)).collect();
    let lo = raw.iter().fold((i64::MAX, i64::MAX, i64::MAX), |m, c| {
        (m.0.min(c.0), m.1.min(c.1), m.2.min(c.2))
    });
    // Packed (cell, index) keys sort in the same order as the tuples.
    let mut keys: Vec<u128> = raw
        .iter()
        .enumerate()
        .map(|(i, c)| {
            ((c.0 - lo.0) as u128) << 96
                | ((c.1 - lo.1) as u128) << 64
                | ((c.2 - lo.2) as u128) << 32
                | i as u128
        })
        .collect();
    keys.sort_unstable();
    let order: Vec<(Cell, usize)> = keys
        .iter()
        .map(|&k| {
            let i = (k & 0xffff_ffff) as usize;
            (raw[i], i)
        })
        .collect();
    let sorted: Vec<Vec3> = order.iter().map(|&(_, i)| positions[i]).collect();
    // Start slot of every occupied cell, plus a sentinel.
    let mut cells: Vec<(Cell, usize)> = Vec::new();
    for (slot, &(cell, _)) in order.iter().enumerate() {
        if cells.last().map_or(true, |c| c.0 != cell) {
            cells.push((cell, slot));
        }
    }
    let slot_range = |lo: Cell, hi: Cell| -> (usize, usize) {
        let a = cells.partition_point(|c| c.0 < lo);
        let b = cells.partition_point(|c| c.0 <= hi);
        let start = cells.get(a).map_or(n, |c| c.1);
        let end = cells.get(b).map_or(n, |c| c.1);
        (start, end)
    };

    // Each pair is found once: from the lexicographically smaller cell, or
    // from the earlier slot within one cell. Cells sharing (x, y) are
    // contiguous, so the 13 forward cells form five slot ranges.
    let r2 = radius * radius;
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    let mut ranges = Vec::with_capacity(5);
    for (c, &((x, y, z), start)) in cells.iter().enumerate() {
        let end = cells.get(c + 1).map_or(n, |c| c.1);
        ranges.clear();
        ranges.push(slot_range((x, y, z + 1), (x, y, z + 1)));
        for (dx, dy) in [(0, 1), (1, -1), (1, 0), (1, 1)] {
            ranges.push(slot_range((x + dx, y + dy, z - 1), (x + dx, y + dy, z + 1)));
        }
        for s in start..end {
            let p = sorted[s];
            let i = order[s].1;
            let own = (s + 1, end);
            for &(a, b) in std::iter::once(&own).chain(ranges.iter()) {
                for t in a..b {
                    if (sorted[t] - p).length_squared() <= r2 {
                        let j = order[t].1;
                        pairs.push((i.min(j) as u32, i.max(j) as u32));
                    }
                }
            }
        }
    }

    // Bucket the higher index of every pair under its lower index. Buckets
    // are short, so insertion sort is cheap.
    let mut upper_start = vec![0usize; n + 1];
    for &(i, _) in &pairs {
        upper_start[i as usize + 1] += 1;
    }
    for i in 0..n {
        upper_start[i + 1] += upper_start[i];
    }
    let mut fill = upper_start[..n].to_vec();
    let mut upper = vec![0u32; pairs.len()];
    for &(i, j) in &pairs {
        upper[fill[i as usize]] = j;
        fill[i as usize] += 1;
    }
    for i in 0..n {
        let bucket = &mut upper[upper_start[i]..upper_start[i + 1]];
        for k in 1..bucket.len() {
            let v = bucket[k];
            let mut m = k;
            while m > 0 && bucket[m - 1] > v {
                bucket[m] = bucket[m - 1];
                m -= 1;
            }
            bucket[m] = v;
        }
    }

    let mut offsets = vec![0; n + 1];
    for &(i, j) in &pairs {
        offsets[i as usize + 1] += 1;
        offsets[j as usize + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    // Filling rows in ascending (i, j) order leaves every row sorted: row `k`
    // receives its lower neighbors first, then its higher ones, each ascending.
    let mut cursor = offsets[..n].to_vec();
    let mut indices = vec![0; pairs.len() * 2];
    let mut mirror = vec![0; pairs.len() * 2];
    let mut first_upper = vec![0; n];
    for i in 0..n {
        // Every lower neighbor of `i` was filled by an earlier row.
        first_upper[i] = cursor[i];
        for &j in &upper[upper_start[i]..upper_start[i + 1]] {
            let j = j as usize;
            let (a, b) = (cursor[i], cursor[j]);
            indices[a] = j;
            indices[b] = i;
            mirror[a] = b;
            mirror[b] = a;
            cursor[i] += 1;
            cursor[j] += 1;
        }
    }
    NeighborLists {
        offsets,
        indices,
        mirror,
        upper: first_upper,
    }
}

/// O(N²) reference scan with the same inclusion test.
pub fn brute_force_neighbors(positions: &[Vec3], radius: f64) -> Vec<Vec<usize>> {
    let r2 = radius * radius;
    positions
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            positions
                .iter()
                .enumerate()
                .filter(|&(j, &q)| j != i && (q - p).length_squared() <= r2)
                .map(|(j, _)| j)
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pair_inside_radius() {
        let p = [Vec3::ZERO, Vec3::new(0.09, 0.0, 0.0)];
        let nl = neighbor_search(&p, 0.1);
        assert_eq!(nl.neighbors(0), &[1]);
        assert_eq!(nl.neighbors(1), &[0]);
    }

    #[test]
    fn pair_outside_radius() {
        let p = [Vec3::ZERO, Vec3::new(0.0, 0.11, 0.0)];
        let nl = neighbor_search(&p, 0.1);
        assert!(nl.neighbors(0).is_empty());
        assert!(nl.neighbors(1).is_empty());
    }

    #[test]
    fn empty_input() {
        let nl = neighbor_search(&[], 1.0);
        assert!(nl.is_empty());
    }

    #[test]
    fn fifty_random_particles_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let p: Vec<Vec3> = (0..50)
            .map(|_| {
                Vec3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                )
            })
            .collect();
        let nl = neighbor_search(&p, 0.4);
        assert_eq!(nl.to_vecs(), brute_force_neighbors(&p, 0.4));
    }

    #[test]
    fn mirror_entries_point_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p: Vec<Vec3> = (0..40)
            .map(|_| Vec3::new(rng.gen_range(0.0..0.5), rng.gen_range(0.0..0.5), 0.0))
            .collect();
        let nl = neighbor_search(&p, 0.15);
        for i in 0..nl.len() {
            for e in nl.offsets[i]..nl.offsets[i + 1] {
                let m = nl.mirror[e];
                assert_eq!(nl.indices[m], i);
                assert_eq!(nl.mirror[m], e);
            }
        }
    }

    #[test]
    fn negative_coordinates_and_cell_boundaries() {
        let p = [
            Vec3::new(-0.1, -0.1, -0.1),
            Vec3::new(0.0, -0.1, -0.1),
            Vec3::new(0.1, -0.1, -0.1),
            Vec3::new(0.2, -0.1, -0.1),
        ];
        let nl = neighbor_search(&p, 0.1);
        assert_eq!(nl.to_vecs(), brute_force_neighbors(&p, 0.1));
    }
}
