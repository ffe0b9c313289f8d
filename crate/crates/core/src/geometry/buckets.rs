//! Uniform bucket grids over item ranges, used to find segments near a
//! coordinate without scanning every wall.

/// 1-D grid; item `i` is registered in every cell its range overlaps.
#[derive(Debug, Clone)]
pub(crate) struct Buckets {
    lo: f64,
    inv: f64,
    cells: Vec<Vec<u32>>,
}

/// Upper bound on total registrations, trading query cost for memory.
const BUDGET: f64 = 4.0e6;

impl Buckets {
    pub fn build(ranges: &[(f64, f64)], pad: f64) -> Self {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut span = 0.0;
        for &(a, b) in ranges {
            lo = lo.min(a - pad);
            hi = hi.max(b + pad);
            span += b - a + 2.0 * pad;
        }
        if ranges.is_empty() || !(hi > lo) {
            return Self { lo: 0.0, inv: 0.0, cells: vec![(0..ranges.len() as u32).collect()] };
        }
        let len = hi - lo;
        let by_budget = if span > 0.0 { BUDGET * len / span } else { f64::INFINITY };
        let n = (2.0 * ranges.len() as f64).min(by_budget).clamp(1.0, 65536.0) as usize;
        let mut out = Self { lo, inv: n as f64 / len, cells: vec![Vec::new(); n] };
        for (i, &(a, b)) in ranges.iter().enumerate() {
            let (c0, c1) = (out.cell(a - pad), out.cell(b + pad));
            for c in &mut out.cells[c0..=c1] {
                c.push(i as u32);
            }
        }
        out
    }

    fn cell(&self, v: f64) -> usize {
        let c = ((v - self.lo) * self.inv).floor();
        if c.is_nan() || c < 0.0 {
            0
        } else {
            (c as usize).min(self.cells.len() - 1)
        }
    }

    /// Items whose padded range may contain `v`.
    pub fn at(&self, v: f64) -> &[u32] {
        &self.cells[self.cell(v)]
    }

    /// Items whose padded range may meet `[a, b]`; may repeat items.
    pub fn range(&self, a: f64, b: f64) -> impl Iterator<Item = u32> + '_ {
        let (c0, c1) = (self.cell(a), self.cell(b));
        self.cells[c0..=c1].iter().flatten().copied()
    }
}

/// 2-D grid over axis-aligned item boxes `[x0, y0, x1, y1]`.
#[derive(Debug, Clone)]
pub(crate) struct Grid {
    lo: [f64; 2],
    inv: [f64; 2],
    n: [usize; 2],
    cells: Vec<Vec<u32>>,
}

impl Grid {
    pub fn build(items: &[[f64; 4]], pad: f64) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for b in items {
            for k in 0..2 {
                lo[k] = lo[k].min(b[k] - pad);
                hi[k] = hi[k].max(b[k + 2] + pad);
            }
        }
        if items.is_empty() {
            return Self { lo: [0.0; 2], inv: [0.0; 2], n: [1, 1], cells: vec![Vec::new()] };
        }
        let len = [(hi[0] - lo[0]).max(pad), (hi[1] - lo[1]).max(pad)];
        // square-ish cells, about two items per cell before budget capping
        let mut side = ((items.len() as f64 * 2.0).sqrt()).clamp(1.0, 1024.0);
        loop {
            let cost: f64 = items
                .iter()
                .map(|b| (((b[2] - b[0] + 2.0 * pad) / len[0] * side).ceil() + 1.0) * (((b[3] - b[1] + 2.0 * pad) / len[1] * side).ceil() + 1.0))
                .sum();
            if cost <= BUDGET || side <= 1.0 {
                break;
            }
            side = (side / 2.0).max(1.0);
        }
        let n = [side as usize, side as usize];
        let mut g = Self { lo, inv: [n[0] as f64 / len[0], n[1] as f64 / len[1]], n, cells: vec![Vec::new(); n[0] * n[1]] };
        for (i, b) in items.iter().enumerate() {
            let (i0, i1) = (g.idx(0, b[0] - pad), g.idx(0, b[2] + pad));
            let (j0, j1) = (g.idx(1, b[1] - pad), g.idx(1, b[3] + pad));
            for j in j0..=j1 {
                for ii in i0..=i1 {
                    g.cells[j * n[0] + ii].push(i as u32);
                }
            }
        }
        g
    }

    fn idx(&self, k: usize, v: f64) -> usize {
        let c = ((v - self.lo[k]) * self.inv[k]).floor();
        if c.is_nan() || c < 0.0 {
            0
        } else {
            (c as usize).min(self.n[k] - 1)
        }
    }

    pub fn at(&self, x: &[f64]) -> &[u32] {
        &self.cells[self.idx(1, x[1]) * self.n[0] + self.idx(0, x[0])]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bucket_finds_overlapping_ranges() {
        let ranges: Vec<(f64, f64)> = (0..100).map(|i| (i as f64, i as f64 + 0.5)).collect();
        let b = Buckets::build(&ranges, 0.0);
        for i in 0..100 {
            let v = i as f64 + 0.25;
            assert!(b.at(v).contains(&(i as u32)));
        }
        let long = Buckets::build(&[(0.0, 10.0), (4.0, 4.5)], 0.0);
        assert!(long.at(9.9).contains(&0));
        assert!(long.at(4.2).contains(&1));
    }

    #[test]
    fn grid_finds_boxes() {
        let items: Vec<[f64; 4]> = (0..50)
            .map(|i| {
                let x = i as f64 * 0.02;
                [x, 0.0, x, 1.0]
            })
            .collect();
        let g = Grid::build(&items, 1e-9);
        for i in 0..50 {
            assert!(g.at(&[i as f64 * 0.02, 0.37]).contains(&(i as u32)));
        }
    }
}
