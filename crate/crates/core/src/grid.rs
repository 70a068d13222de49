//! Worst case of `|P_{x,y}(τ)|` over a tensor grid in `(x, y)`.
//!
//! Only the `x`/`y` variables that actually occur in `P` are gridded. The
//! search is branch and bound over blocks of grid indices: an interval
//! enclosure of `P` on a block gives a lower bound for `|P|` there, and blocks
//! that cannot beat the current minimum are skipped. The result is the exact
//! grid minimum (up to floating-point evaluation), not an approximation of it.

use crate::poly::{CompiledPoly, Interval, Polynomial, Role};

#[derive(Debug, Clone)]
pub struct XyGrid {
    dim: usize,
    /// Slot positions of the gridded variables.
    active: Vec<usize>,
    /// Grid coordinates of each active variable.
    values: Vec<Vec<f64>>,
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mid = 0.5 * (lo + hi);
    (0..=2 * n)
        .map(|k| {
            if k == n {
                mid
            } else {
                mid + 0.5 * (hi - lo) * (k as f64 - n as f64) / n as f64
            }
        })
        .collect()
}

impl XyGrid {
    /// `2 * grid_n + 1` equally spaced points on `[−r, r]` for every `x`/`y`
    /// variable used by `p`.
    pub fn new(p: &Polynomial, r: f64, grid_n: usize) -> Self {
        let rect = vec![Interval::symmetric(r); 2 * p.dim()];
        XyGrid::over(p, &rect, grid_n)
    }

    /// Grid over an axis-parallel rectangle given as one interval per `x`/`y`
    /// slot (`2d` entries).
    pub fn over(p: &Polynomial, rect: &[Interval], grid_n: usize) -> Self {
        let dim = p.dim();
        assert_eq!(rect.len(), 2 * dim, "rectangle needs 2d sides");
        let active: Vec<usize> = p
            .variables()
            .into_iter()
            .filter(|v| v.role != Role::Tau)
            .map(|v| v.position(dim).expect("variable of p"))
            .collect();
        let n = grid_n.max(1);
        let values = active
            .iter()
            .map(|&pos| axis(rect[pos].lo, rect[pos].hi, n))
            .collect();
        XyGrid {
            dim,
            active,
            values,
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.active.is_empty()
    }

    /// Number of grid points actually visited by a brute-force search.
    pub fn num_points(&self) -> usize {
        self.values.iter().map(Vec::len).product()
    }

    /// Interval boxes for all `3d` slots: the τ part from `tau`, the active
    /// `(x, y)` variables over the full grid range, the rest pinned at 0.
    pub fn enclosure(&self, tau: &[Interval]) -> Vec<Interval> {
        let mut b = vec![Interval::point(0.0); 3 * self.dim];
        b[2 * self.dim..].copy_from_slice(tau);
        for (&pos, v) in self.active.iter().zip(&self.values) {
            b[pos] = Interval::new(v[0], v[v.len() - 1]);
        }
        b
    }

    /// Grid points along each active variable, as `(slot, coordinates)`.
    pub fn axes(&self) -> impl Iterator<Item = (usize, &[f64])> {
        self.active.iter().copied().zip(self.values.iter().map(Vec::as_slice))
    }

    fn point_buffer(&self, tau: &[f64]) -> Vec<f64> {
        let mut pt = vec![0.0; 3 * self.dim];
        pt[2 * self.dim..].copy_from_slice(tau);
        pt
    }

    /// `min |P|` over the grid at a fixed τ.
    pub fn min_abs(&self, p: &CompiledPoly, tau: &[f64]) -> f64 {
        self.search(p, tau, 0.0)
    }

    /// Whether some grid point has `|P| < eps`.
    pub fn has_below(&self, p: &CompiledPoly, tau: &[f64], eps: f64) -> bool {
        self.search(p, tau, eps) < eps
    }

    /// Branch and bound. Stops as soon as a value below `stop` is found, so
    /// `stop = 0` gives the exact minimum.
    fn search(&self, p: &CompiledPoly, tau: &[f64], stop: f64) -> f64 {
        let mut pt = self.point_buffer(tau);
        if self.active.is_empty() {
            return p.eval(&pt).abs();
        }
        let mut best = f64::INFINITY;
        let mut boxes = vec![Interval::point(0.0); 3 * self.dim];
        for (b, &t) in boxes[2 * self.dim..].iter_mut().zip(tau) {
            *b = Interval::point(t);
        }
        let mut stack: Vec<Vec<(usize, usize)>> =
            vec![self.values.iter().map(|v| (0, v.len() - 1)).collect()];
        while let Some(block) = stack.pop() {
            for ((&pos, &(lo, hi)), v) in self.active.iter().zip(&block).zip(&self.values) {
                pt[pos] = v[(lo + hi) / 2];
            }
            let v = p.eval(&pt).abs();
            if v < best {
                best = v;
                if best < stop {
                    return best;
                }
            }
            if block.iter().all(|&(lo, hi)| lo == hi) {
                continue;
            }
            for ((&pos, &(lo, hi)), v) in self.active.iter().zip(&block).zip(&self.values) {
                boxes[pos] = Interval::new(v[lo], v[hi]);
            }
            if p.eval_interval(&boxes).mig() >= best.max(stop) {
                continue;
            }
            let (axis, &(lo, hi)) = block
                .iter()
                .enumerate()
                .max_by_key(|(_, (lo, hi))| hi - lo)
                .unwrap();
            let mid = (lo + hi) / 2;
            let mut left = block.clone();
            left[axis] = (lo, mid);
            let mut right = block;
            right[axis] = (mid + 1, hi);
            stack.push(right);
            stack.push(left);
        }
        best
    }

    /// Exhaustive minimum, for cross-checking.
    pub fn min_abs_brute(&self, p: &CompiledPoly, tau: &[f64]) -> f64 {
        let mut pt = self.point_buffer(tau);
        let mut best = f64::INFINITY;
        for flat in 0..self.num_points() {
            let mut rest = flat;
            for (&pos, v) in self.active.iter().zip(&self.values) {
                pt[pos] = v[rest % v.len()];
                rest /= v.len();
            }
            best = best.min(p.eval(&pt).abs());
        }
        best
    }
}
