//! Minimum disk cover of the user set (candidate centers are user positions)
//! and the hexagonal cellular baseline.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{within, Point2};

/// Hard upper limit for the bitmask branch-and-bound.
pub const EXACT_HARD_CAP: usize = 64;

/// Uniform bucket grid over a point set with per-cell contiguous index lists.
#[derive(Debug, Clone)]
struct Grid {
    ox: f64,
    oy: f64,
    /// Column width and row height.
    sx: f64,
    sy: f64,
    nx: usize,
    ny: usize,
    start: Vec<u32>,
    /// Slot to original index; slots are ordered row-major by cell.
    items: Vec<u32>,
    /// Point coordinates in slot order.
    pts: Vec<Point2>,
}

/// `floor` without a libm call (the baseline target has no rounding
/// instruction); exact for magnitudes below 2^52.
#[inline]
fn ffloor(x: f64) -> f64 {
    let t = x as i64 as f64;
    if t > x {
        t - 1.0
    } else {
        t
    }
}

#[inline]
fn fceil(x: f64) -> f64 {
    -ffloor(-x)
}

impl Grid {
    fn build(points: &[Point2], (sx, sy): (f64, f64)) -> Self {
        let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for p in points {
            x0 = x0.min(p.x);
            y0 = y0.min(p.y);
            x1 = x1.max(p.x);
            y1 = y1.max(p.y);
        }
        if points.is_empty() {
            (x0, y0, x1, y1) = (0.0, 0.0, 0.0, 0.0);
        }
        let nx = (((x1 - x0) / sx).floor() as usize + 1).max(1);
        let ny = (((y1 - y0) / sy).floor() as usize + 1).max(1);
        let mut g = Grid {
            ox: x0,
            oy: y0,
            sx,
            sy,
            nx,
            ny,
            start: vec![0; nx * ny + 1],
            items: vec![0; points.len()],
            pts: vec![Point2::ORIGIN; points.len()],
        };
        let cells: Vec<usize> = points.iter().map(|p| g.cell_of(*p)).collect();
        for &c in &cells {
            g.start[c + 1] += 1;
        }
        for i in 0..nx * ny {
            g.start[i + 1] += g.start[i];
        }
        let mut fill = g.start.clone();
        for (i, &c) in cells.iter().enumerate() {
            g.items[fill[c] as usize] = i as u32;
            g.pts[fill[c] as usize] = points[i];
            fill[c] += 1;
        }
        g
    }

    fn cell_of(&self, p: Point2) -> usize {
        let ix = (((p.x - self.ox) / self.sx).floor().max(0.0) as usize).min(self.nx - 1);
        let iy = (((p.y - self.oy) / self.sy).floor().max(0.0) as usize).min(self.ny - 1);
        iy * self.nx + ix
    }

    /// Slot range covering cells `ix0..=ix1` of row `iy`.
    fn slots(&self, iy: usize, ix0: usize, ix1: usize) -> std::ops::Range<usize> {
        let base = iy * self.nx;
        self.start[base + ix0] as usize..self.start[base + ix1 + 1] as usize
    }

    fn margin(&self, r: f64) -> f64 {
        1e-9 * (r + self.sx + self.sy + self.ox.abs().max(self.oy.abs()))
    }

    /// Visits every row that may intersect the disk with the column range of
    /// cells touching it and the sub-range of cells lying fully inside it.
    fn scan_disk(&self, c: Point2, r: f64, mut row: impl FnMut(usize, usize, usize, Option<(usize, usize)>)) {
        let eps = self.margin(r);
        let fy0 = ffloor((c.y - r - eps - self.oy) / self.sy);
        let fy1 = ffloor((c.y + r + eps - self.oy) / self.sy);
        if fy1 < 0.0 || fy0 > (self.ny - 1) as f64 {
            return;
        }
        let iy0 = fy0.max(0.0) as usize;
        let iy1 = (fy1 as usize).min(self.ny - 1);
        let last = (self.nx - 1) as f64;
        for iy in iy0..=iy1 {
            let y0 = self.oy + iy as f64 * self.sy - eps;
            let y1 = self.oy + (iy + 1) as f64 * self.sy + eps;
            let near = if c.y < y0 {
                y0 - c.y
            } else if c.y > y1 {
                c.y - y1
            } else {
                0.0
            };
            if near > r + eps {
                continue;
            }
            let far = (c.y - y0).abs().max((c.y - y1).abs());
            let w_out = (r * r - near * near).max(0.0).sqrt() + eps;
            let fx0 = ffloor((c.x - w_out - self.ox) / self.sx);
            let fx1 = ffloor((c.x + w_out - self.ox) / self.sx);
            if fx1 < 0.0 || fx0 > last {
                continue;
            }
            let ix0 = fx0.max(0.0) as usize;
            let ix1 = (fx1 as usize).min(self.nx - 1);
            let mut inner = None;
            if far < r {
                let w_in = (r * r - far * far).sqrt() - eps;
                if w_in > 0.0 {
                    let lo = fceil((c.x - w_in - self.ox + eps) / self.sx);
                    let hi = ffloor((c.x + w_in - self.ox - eps) / self.sx) - 1.0;
                    let lo = lo.max(ix0 as f64);
                    let hi = hi.min(ix1 as f64);
                    if lo <= hi {
                        inner = Some((lo as usize, hi as usize));
                    }
                }
            }
            row(iy, ix0, ix1, inner);
        }
    }

    /// Calls `f` with the original index of every point within `r` of `c`.
    fn for_each_in_disk(&self, c: Point2, r: f64, mut f: impl FnMut(usize)) {
        self.scan_disk(c, r, |iy, ix0, ix1, _| {
            for slot in self.slots(iy, ix0, ix1) {
                if within(self.pts[slot], c, r) {
                    f(self.items[slot] as usize);
                }
            }
        });
    }
}

/// Cell shape for a point set queried with disks of radius `r`. Rows are
/// sized to balance per-row overhead against exact checks in the boundary
/// band; columns are narrow so the band is tight.
fn grid_pitch(points: &[Point2], r: f64) -> (f64, f64) {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in points {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    let (w, h) = ((x1 - x0).max(0.0), (y1 - y0).max(0.0));
    let density = points.len() as f64 / (w * h).max(r * r);
    let sy = (40.0 / density).sqrt().clamp(r / 128.0, r / 2.0);
    let mut sx = sy / 4.0;
    // Bound the cell array for very wide, sparse inputs.
    let rows = h / sy + 1.0;
    if rows * (w / sx + 1.0) > 4e6 {
        sx = w / (4e6 / rows);
    }
    (sx, sy)
}

/// Implicit boolean matrix `d_kl = 1` iff users `k` and `l` are within `r`.
#[derive(Debug, Clone)]
pub struct CoverageMatrix {
    points: Vec<Point2>,
    radius: f64,
    grid: Grid,
}

impl CoverageMatrix {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn get(&self, k: usize, l: usize) -> bool {
        within(self.points[k], self.points[l], self.radius)
    }

    /// Sorted column support of row `k`.
    pub fn neighbors(&self, k: usize) -> Vec<usize> {
        let mut v = Vec::new();
        self.grid
            .for_each_in_disk(self.points[k], self.radius, |i| v.push(i));
        v.sort_unstable();
        v
    }

    /// Materializes the full matrix (small instances only).
    pub fn to_dense(&self) -> Vec<Vec<bool>> {
        (0..self.len())
            .map(|k| (0..self.len()).map(|l| self.get(k, l)).collect())
            .collect()
    }
}

pub fn coverage_matrix(points: &[Point2], r: f64) -> Result<CoverageMatrix> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::arg("coverage_matrix", format!("radius must be > 0, got {r}")));
    }
    if points.is_empty() {
        return Err(Error::arg("coverage_matrix", "no users"));
    }
    let grid = Grid::build(points, grid_pitch(points, r));
    Ok(CoverageMatrix {
        points: points.to_vec(),
        radius: r,
        grid,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeploymentMethod {
    GdcGreedy,
    GdcExact,
    Hex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeploymentPlan {
    pub method: DeploymentMethod,
    pub radius: f64,
    pub centers: Vec<Point2>,
    /// User indices used as centers (empty for the hex baseline).
    pub center_users: Vec<usize>,
}

impl DeploymentPlan {
    pub fn count(&self) -> usize {
        self.centers.len()
    }
}

/// Users left uncovered by `centers` at radius `r`, checked on raw coordinates.
pub fn uncovered_users(points: &[Point2], centers: &[Point2], r: f64) -> Vec<usize> {
    if centers.is_empty() {
        return (0..points.len()).collect();
    }
    let grid = Grid::build(centers, (r.max(1e-9), r.max(1e-9)));
    let mut out = Vec::new();
    for (k, &p) in points.iter().enumerate() {
        let mut hit = false;
        grid.for_each_in_disk(p, r, |_| hit = true);
        if !hit {
            out.push(k);
        }
    }
    out
}

struct GreedyState<'a> {
    d: &'a CoverageMatrix,
    /// Grid-ordered coordinates split by axis; covered users are moved to
    /// infinity so the disk test rejects them without a separate flag.
    xs: Vec<f64>,
    ys: Vec<f64>,
    uncov: Vec<u32>,
    prefix: Vec<u32>,
}

impl<'a> GreedyState<'a> {
    fn new(d: &'a CoverageMatrix) -> Self {
        let g = &d.grid;
        let uncov: Vec<u32> = (0..g.nx * g.ny).map(|c| g.start[c + 1] - g.start[c]).collect();
        let mut st = GreedyState {
            d,
            xs: g.pts.iter().map(|p| p.x).collect(),
            ys: g.pts.iter().map(|p| p.y).collect(),
            uncov,
            prefix: vec![0; g.ny * (g.nx + 1)],
        };
        for iy in 0..g.ny {
            st.rebuild_row(iy);
        }
        st
    }

    fn rebuild_row(&mut self, iy: usize) {
        let nx = self.d.grid.nx;
        let base = iy * (nx + 1);
        self.prefix[base] = 0;
        for ix in 0..nx {
            self.prefix[base + ix + 1] = self.prefix[base + ix] + self.uncov[iy * nx + ix];
        }
    }

    fn row_sum(&self, iy: usize, lo: usize, hi: usize) -> u32 {
        let base = iy * (self.d.grid.nx + 1);
        self.prefix[base + hi + 1] - self.prefix[base + lo]
    }

    /// Upper bound on the uncovered count: everything in touching cells.
    fn bound(&self, c: Point2, r: f64) -> u32 {
        let mut n = 0;
        self.d.grid.scan_disk(c, r, |iy, ix0, ix1, _| {
            n += self.row_sum(iy, ix0, ix1);
        });
        n
    }

    fn count(&self, c: Point2) -> u32 {
        let g = &self.d.grid;
        let r = self.d.radius;
        let mut n = 0;
        let r2 = r * r;
        let partial = |slots: std::ops::Range<usize>| {
            let xs = &self.xs[slots.clone()];
            let ys = &self.ys[slots];
            xs.iter()
                .zip(ys)
                .map(|(&x, &y)| {
                    let dx = x - c.x;
                    let dy = y - c.y;
                    (dx * dx + dy * dy <= r2) as u32
                })
                .sum::<u32>()
        };
        g.scan_disk(c, r, |iy, ix0, ix1, inner| match inner {
            Some((lo, hi)) => {
                n += self.row_sum(iy, lo, hi);
                let row = g.slots(iy, ix0, ix1);
                let mid = g.slots(iy, lo, hi);
                n += partial(row.start..mid.start) + partial(mid.end..row.end);
            }
            None => n += partial(g.slots(iy, ix0, ix1)),
        });
        n
    }

    fn select(&mut self, c: Point2) -> usize {
        let g = &self.d.grid;
        let r = self.d.radius;
        let mut rows = Vec::new();
        let mut newly = 0;
        g.scan_disk(c, r, |iy, ix0, ix1, _| {
            rows.push((iy, ix0, ix1));
        });
        for (iy, ix0, ix1) in rows {
            for ix in ix0..=ix1 {
                for slot in g.slots(iy, ix, ix) {
                    if within(Point2::new(self.xs[slot], self.ys[slot]), c, r) {
                        self.xs[slot] = f64::INFINITY;
                        self.ys[slot] = f64::INFINITY;
                        self.uncov[iy * g.nx + ix] -= 1;
                        newly += 1;
                    }
                }
            }
            self.rebuild_row(iy);
        }
        newly
    }
}

/// Greedy max-coverage disk cover followed by removal of redundant disks.
/// Ties are broken toward the lowest user id.
pub fn gdc_greedy(d: &CoverageMatrix) -> DeploymentPlan {
    let order = greedy_order(d);
    let kept = prune_redundant(d, &order);
    plan_from_users(d, kept, DeploymentMethod::GdcGreedy)
}

/// Selection order of the plain greedy, before pruning.
pub fn greedy_order(d: &CoverageMatrix) -> Vec<usize> {
    let g = &d.grid;
    let r = d.radius;
    let mut st = GreedyState::new(d);
    let ncell = g.nx * g.ny;
    let reach = 0.5 * g.sx.hypot(g.sy) + g.margin(r);
    let center = |cell: usize| {
        Point2::new(
            g.ox + ((cell % g.nx) as f64 + 0.5) * g.sx,
            g.oy + ((cell / g.nx) as f64 + 0.5) * g.sy,
        )
    };
    let members = |cell: usize| g.start[cell] as usize..g.start[cell + 1] as usize;
    let min_id: Vec<usize> = (0..ncell)
        .map(|c| members(c).map(|s| g.items[s] as usize).min().unwrap_or(usize::MAX))
        .collect();
    // The heap works on grid cells. key[c] bounds the best count of any
    // candidate in cell c from above; once exact, best[c] is the lowest id
    // attaining it. A bound entry carries the cell's lowest id so it pops
    // ahead of any exact entry it could tie with.
    let mut key = vec![0u32; ncell];
    let mut best = min_id.clone();
    let mut exact = vec![false; ncell];
    let mut fresh = vec![0usize; ncell];
    let mut heap = BinaryHeap::new();
    for c in 0..ncell {
        if !members(c).is_empty() {
            key[c] = st.bound(center(c), r + reach);
            heap.push((key[c], Reverse(best[c]), c));
        }
    }
    let mut picks: Vec<Point2> = Vec::new();
    let mut remaining = d.len();
    let mut chosen = Vec::new();
    while remaining > 0 {
        let Some((kv, Reverse(tb), c)) = heap.pop() else {
            break;
        };
        if kv != key[c] || tb != best[c] || kv == 0 {
            continue;
        }
        let epoch = picks.len();
        if fresh[c] < epoch {
            let cc = center(c);
            let touched = picks[fresh[c]..]
                .iter()
                .any(|&p| within(p, cc, 2.0 * r + reach));
            fresh[c] = epoch;
            if touched {
                key[c] = st.bound(cc, r + reach).min(key[c]);
                best[c] = min_id[c];
                exact[c] = false;
                heap.push((key[c], Reverse(best[c]), c));
                continue;
            }
        }
        if exact[c] {
            let k = best[c];
            remaining -= st.select(d.points[k]);
            chosen.push(k);
            picks.push(d.points[k]);
            heap.push((kv, Reverse(tb), c));
        } else {
            let (mut bk, mut bid) = (0u32, usize::MAX);
            for slot in members(c) {
                let id = g.items[slot] as usize;
                let n = st.count(g.pts[slot]);
                if n > bk || (n == bk && id < bid) {
                    (bk, bid) = (n, id);
                }
            }
            key[c] = bk;
            best[c] = bid;
            exact[c] = true;
            heap.push((bk, Reverse(bid), c));
        }
    }
    chosen
}

/// Drops disks whose users are all covered by other selected disks, scanning
/// from the last selected to the first.
fn prune_redundant(d: &CoverageMatrix, order: &[usize]) -> Vec<usize> {
    let mut mult = vec![0u32; d.len()];
    let members: Vec<Vec<usize>> = order.iter().map(|&c| d.neighbors(c)).collect();
    for m in &members {
        for &i in m {
            mult[i] += 1;
        }
    }
    let mut keep = vec![true; order.len()];
    for j in (0..order.len()).rev() {
        if members[j].iter().all(|&i| mult[i] >= 2) {
            keep[j] = false;
            for &i in &members[j] {
                mult[i] -= 1;
            }
        }
    }
    order
        .iter()
        .zip(keep)
        .filter_map(|(&c, k)| k.then_some(c))
        .collect()
}

fn plan_from_users(d: &CoverageMatrix, users: Vec<usize>, method: DeploymentMethod) -> DeploymentPlan {
    DeploymentPlan {
        method,
        radius: d.radius,
        centers: users.iter().map(|&k| d.points[k]).collect(),
        center_users: users,
    }
}

fn bitmasks(d: &CoverageMatrix) -> Vec<u64> {
    (0..d.len())
        .map(|k| {
            (0..d.len())
                .filter(|&l| d.get(k, l))
                .fold(0u64, |m, l| m | (1 << l))
        })
        .collect()
}

/// Lower bound on the cover size of the users in `unc`: the larger of the
/// counting bound and a greedy packing of users with pairwise disjoint
/// candidate sets.
fn mask_lower_bound(cover: &[u64], unc: u64) -> usize {
    if unc == 0 {
        return 0;
    }
    let n = unc.count_ones() as usize;
    let maxcov = cover
        .iter()
        .map(|&c| (c & unc).count_ones() as usize)
        .max()
        .unwrap_or(1)
        .max(1);
    let counting = n.div_ceil(maxcov);
    let mut users: Vec<usize> = (0..cover.len()).filter(|&u| unc >> u & 1 == 1).collect();
    users.sort_by_key(|&u| (cover[u].count_ones(), u));
    let mut used = 0u64;
    let mut packing = 0;
    for u in users {
        if cover[u] & used == 0 {
            used |= cover[u];
            packing += 1;
        }
    }
    counting.max(packing)
}

/// Lower bound on the optimal cover size of the whole instance (K <= 64).
pub fn cover_lower_bound(d: &CoverageMatrix) -> Result<usize> {
    if d.len() > EXACT_HARD_CAP {
        return Err(Error::ExactCapExceeded {
            k: d.len(),
            cap: EXACT_HARD_CAP,
        });
    }
    let cover = bitmasks(d);
    let all = if d.len() == 64 { u64::MAX } else { (1u64 << d.len()) - 1 };
    Ok(mask_lower_bound(&cover, all))
}

struct BranchAndBound<'a> {
    cover: &'a [u64],
    best: Vec<usize>,
}

impl BranchAndBound<'_> {
    fn search(&mut self, unc: u64, chosen: &mut Vec<usize>) {
        if unc == 0 {
            if chosen.len() < self.best.len() {
                self.best = chosen.clone();
            }
            return;
        }
        if chosen.len() + mask_lower_bound(self.cover, unc) >= self.best.len() {
            return;
        }
        let branch_user = (0..self.cover.len())
            .filter(|&u| unc >> u & 1 == 1)
            .min_by_key(|&u| (self.cover[u].count_ones(), u))
            .expect("unc is non-empty");
        let mut cands: Vec<usize> = (0..self.cover.len())
            .filter(|&c| self.cover[branch_user] >> c & 1 == 1)
            .collect();
        cands.sort_by_key(|&c| (Reverse((self.cover[c] & unc).count_ones()), c));
        for c in cands {
            chosen.push(c);
            self.search(unc & !self.cover[c], chosen);
            chosen.pop();
        }
    }
}

/// Provably minimal disk cover by branch-and-bound. Refuses instances larger
/// than `cap` (itself limited to 64).
pub fn gdc_exact(d: &CoverageMatrix, cap: usize) -> Result<DeploymentPlan> {
    let cap = cap.min(EXACT_HARD_CAP);
    if d.len() > cap {
        return Err(Error::ExactCapExceeded { k: d.len(), cap });
    }
    let cover = bitmasks(d);
    let incumbent = gdc_greedy(d).center_users;
    let mut bb = BranchAndBound {
        cover: &cover,
        best: incumbent,
    };
    let all = if d.len() == 64 { u64::MAX } else { (1u64 << d.len()) - 1 };
    bb.search(all, &mut Vec::new());
    let mut best = bb.best;
    best.sort_unstable();
    Ok(plan_from_users(d, best, DeploymentMethod::GdcExact))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetCheck {
    pub instances: usize,
    pub greedy_optimal: usize,
    pub max_excess: usize,
}

/// Validates the greedy on random sub-instances small enough for the exact
/// solver.
pub fn subset_check<R: Rng + ?Sized>(
    points: &[Point2],
    r: f64,
    instances: usize,
    size: usize,
    rng: &mut R,
) -> Result<SubsetCheck> {
    let size = size.min(points.len()).min(EXACT_HARD_CAP);
    let mut out = SubsetCheck {
        instances,
        greedy_optimal: 0,
        max_excess: 0,
    };
    for _ in 0..instances {
        let idx = sample(rng, points.len(), size);
        let sub: Vec<Point2> = idx.iter().map(|i| points[i]).collect();
        let d = coverage_matrix(&sub, r)?;
        let g = gdc_greedy(&d).count();
        let e = gdc_exact(&d, EXACT_HARD_CAP)?.count();
        if g == e {
            out.greedy_optimal += 1;
        }
        out.max_excess = out.max_excess.max(g - e);
    }
    Ok(out)
}

/// Hexagonal cell of circumradius `r` (pointy orientation) around `c`.
fn hexagon(c: Point2, r: f64) -> [Point2; 6] {
    std::array::from_fn(|k| {
        let a = (30.0 + 60.0 * k as f64).to_radians();
        Point2::new(c.x + r * a.cos(), c.y + r * a.sin())
    })
}

/// Distance from `p` to a convex polygon (0 inside).
fn polygon_distance(p: Point2, poly: &[Point2]) -> f64 {
    let n = poly.len();
    let mut inside = true;
    let mut best = f64::INFINITY;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let ab = b - a;
        let ap = p - a;
        if ab.x * ap.y - ab.y * ap.x < 0.0 {
            inside = false;
        }
        let t = ((ap.x * ab.x + ap.y * ab.y) / (ab.x * ab.x + ab.y * ab.y)).clamp(0.0, 1.0);
        best = best.min(p.dist(a + ab * t));
    }
    if inside {
        0.0
    } else {
        best
    }
}

fn lattice_point(q: i64, s: i64, r: f64) -> Point2 {
    let pitch = 3f64.sqrt() * r;
    Point2::new(pitch * (q as f64 + 0.5 * s as f64), 1.5 * r * s as f64)
}

fn tier(q: i64, s: i64) -> i64 {
    (q.abs() + s.abs() + (q + s).abs()) / 2
}

fn ring(t: i64) -> impl Iterator<Item = (i64, i64)> {
    (-t..=t).flat_map(move |q| (-t..=t).map(move |s| (q, s))).filter(move |&(q, s)| tier(q, s) == t)
}

/// Number of tiers needed so the hexagonal cluster covers a disk of radius
/// `big_r` (0 means the central cell alone).
pub fn hex_tiers(big_r: f64, r: f64) -> usize {
    let mut t = 0i64;
    loop {
        let reach = ring(t + 1)
            .map(|(q, s)| polygon_distance(Point2::ORIGIN, &hexagon(lattice_point(q, s, r), r)))
            .fold(f64::INFINITY, f64::min);
        if reach >= big_r {
            return t as usize;
        }
        t += 1;
    }
}

/// Conventional cellular layout: hexagonal cells of circumradius `r` (disk
/// spacing sqrt(3) r) covering the disk of radius `big_r` around `center`,
/// keeping only cells that intersect the disk.
pub fn hex_baseline(big_r: f64, r: f64, center: Point2) -> Result<DeploymentPlan> {
    if !(big_r > 0.0) || !(r > 0.0) {
        return Err(Error::arg("hex_baseline", "radii must be > 0"));
    }
    let centers = if r >= big_r {
        vec![center]
    } else {
        let t = hex_tiers(big_r, r) as i64;
        let mut v = Vec::new();
        for q in -t..=t {
            for s in -t..=t {
                if tier(q, s) > t {
                    continue;
                }
                let p = lattice_point(q, s, r);
                if polygon_distance(Point2::ORIGIN, &hexagon(p, r)) < big_r {
                    v.push(center + p);
                }
            }
        }
        v
    };
    Ok(DeploymentPlan {
        method: DeploymentMethod::Hex,
        radius: r,
        centers,
        center_users: Vec::new(),
    })
}
