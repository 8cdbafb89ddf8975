//! Scale-reduced Volterra lattice for Hardy perturbations.
//!
//! Because p(t,r,s) = t^{−d/α} p(1, r t^{−1/α}, s t^{−1/α}) and the potential
//! κ z^{−α} has the same homogeneity, every Duhamel iterate is determined by
//! its unit-time slice. Writing G_n(r,s) = p_n(1,r,s)/p(1,r,s), the Duhamel
//! step becomes a two-dimensional linear map
//!
//!   G_n(r,s) = ∫₀¹dτ ∫dz z^{2ζ} [p(τ,r,z) p(1−τ,z,s)/p(1,r,s)] κ z^{−α}
//!              · G_{n−1}(z c, s c),     c = (1−τ)^{−1/α},
//!
//! whose bridge weights are positive and of unit order, so no iterate ever
//! under- or overflows. The lattice stores these weights once for every
//! pair of nodes on a log-spaced grid, and applying the map is a weighted
//! contraction against the previous iterate, read by cubic interpolation in
//! log coordinates.
//!
//! The stored table is H = G / W(r, s) with W = (1 + 1/(rs))^η, which
//! absorbs the (rs)^{−η} behaviour of the full solution wherever rs is small
//! (including r large with s small), so that H is smooth and tends to
//! constants at the edges of the grid, where it is held constant.
//!
//! Values at arbitrary points are obtained by Nyström interpolation: the
//! row of the map for that exact point is assembled on demand and applied
//! to the table, so point values inherit the accuracy of the quadrature
//! rather than that of table interpolation.

use crate::error::{HardyError, Result};
use crate::krylov::{gmres, KrylovStats};
use crate::quadrature::gauss_legendre_unit;

use super::KernelEvaluator;

/// Resolution of the lattice and of the per-pair quadrature rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    /// Grid nodes per decade in x.
    pub per_decade: usize,
    pub x_min: f64,
    pub x_max: f64,
    /// Width of the panels of the rule in ln τ.
    pub time_panel: f64,
    /// Gauss–Legendre nodes per time panel.
    pub time_order: usize,
    /// Gauss–Legendre nodes per spatial panel.
    pub space_order: usize,
}

impl Default for LatticeSpec {
    fn default() -> Self {
        Self { per_decade: 5, x_min: 1e-4, x_max: 1e4, time_panel: 2.0, time_order: 4, space_order: 8 }
    }
}

impl LatticeSpec {
    /// Lattice whose discretisation error is expected to be around
    /// `rel_tol`: one step of refinement per factor ten.
    pub fn for_tolerance(rel_tol: f64) -> Self {
        let base = Self::default();
        if rel_tol >= 1e-3 {
            base
        } else if rel_tol >= 1e-4 {
            Self { per_decade: 6, time_panel: 1.5, time_order: 5, ..base }
        } else {
            Self { per_decade: 8, time_panel: 1.25, time_order: 6, space_order: 10, ..base }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.per_decade < 2 || self.time_order < 2 || self.space_order < 2 {
            return Err(HardyError::Config("lattice orders must be at least 2".into()));
        }
        if !(self.x_min > 0.0 && self.x_max > self.x_min * 1e3) {
            return Err(HardyError::Config("lattice window must span at least three decades".into()));
        }
        if !(self.time_panel > 0.0) {
            return Err(HardyError::Config("time panel width must be positive".into()));
        }
        Ok(())
    }
}

/// Cubic Lagrange weights for fractional grid position `f` on n ≥ 4 nodes,
/// clamped to the grid. Returns the index of the first of four nodes.
#[inline]
pub(super) fn lagrange(f: f64, n: usize) -> (usize, [f64; 4]) {
    let f = f.clamp(0.0, (n - 1) as f64);
    let i = (f.floor() as usize).clamp(1, n - 3);
    let t = f - i as f64;
    let w = [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ];
    (i - 1, w)
}

/// ln W at (u, v) = (ln r, ln s), W = (1 + 1/(rs))^η.
#[inline]
pub(super) fn ln_weight(eta: f64, u: f64, v: f64) -> f64 {
    if eta == 0.0 {
        0.0
    } else {
        eta * (-(u + v)).exp().ln_1p()
    }
}

/// One time node of one row: the y-interpolation is shared by all its
/// spatial entries.
#[derive(Debug, Clone, Copy)]
pub(super) struct TimeBlock {
    pub iy: u32,
    pub wy: [f32; 4],
    /// −ln(1−τ)/α, the log-scale shift into the remaining-time frame.
    pub shift: f32,
    pub start: u32,
    pub len: u32,
}

/// The quadrature entries of one output point.
#[derive(Debug, Clone, Default)]
pub(super) struct Row {
    pub blocks: Vec<TimeBlock>,
    pub fz: Vec<f32>,
    pub wz: Vec<f32>,
}

/// Log-spaced nodes u_k = u0 + k h.
#[derive(Debug, Clone, Copy)]
pub(super) struct Grid {
    pub u0: f64,
    pub h: f64,
    pub n: usize,
}

impl Grid {
    pub fn u(&self, k: usize) -> f64 {
        self.u0 + self.h * k as f64
    }

    pub fn position(&self, u: f64) -> f64 {
        (u - self.u0) / self.h
    }
}

/// The assembled linear map H ↦ K H on the N×N lattice, together with the
/// base kernel it was built from.
#[derive(Debug, Clone)]
pub struct DuhamelLattice<K> {
    kernel: K,
    spec: LatticeSpec,
    pub(super) grid: Grid,
    pub(super) eta_w: f64,
    kappa: f64,
    dim: f64,
    eps: f64,
    rule_t: (Vec<f64>, Vec<f64>),
    rule_z: (Vec<f64>, Vec<f64>),
    /// Upper-triangle rows (i ≤ j) in row-major order, entries packed.
    pub(super) pairs: Vec<(u32, u32)>,
    pub(super) blocks: Vec<Vec<TimeBlock>>,
    pub(super) fz: Vec<f32>,
    pub(super) wz: Vec<f32>,
}

/// Entries below this weight are dropped; the weights of a row sum to a
/// number of order one.
const PRUNE: f64 = 1e-14;

impl<K: KernelEvaluator> DuhamelLattice<K> {
    /// Assembles the lattice for the potential κ z^{−α} over `kernel`.
    ///
    /// `eta_w` is the exponent of the origin weight; pass the η of the
    /// coupling so that its (rs)^{−η} singularity is absorbed exactly.
    ///
    /// # Errors
    /// Configuration errors for an invalid spec or an origin exponent that
    /// makes the sub-grid tail non-integrable.
    pub fn build(kernel: K, kappa: f64, eta_w: f64, spec: LatticeSpec) -> Result<Self> {
        spec.validate()?;
        let alpha = kernel.alpha();
        let dim = 2.0 * kernel.zeta() + 1.0;
        // Below the lowest spatial breakpoint the z-integrand behaves like
        // z^ε in dz/z; ε > 0 is needed for the analytic tail node.
        let eps = dim - alpha - eta_w;
        if !(eps > 0.0) {
            return Err(HardyError::Config(format!("origin exponent {eta_w} leaves no integrable tail")));
        }
        let decades = (spec.x_max / spec.x_min).log10();
        let n = (decades * spec.per_decade as f64).round() as usize + 1;
        let u0 = spec.x_min.ln();
        let grid = Grid { u0, h: (spec.x_max.ln() - u0) / (n - 1) as f64, n };
        let mut lattice = Self {
            kernel,
            spec,
            grid,
            eta_w,
            kappa,
            dim,
            eps,
            rule_t: gauss_legendre_unit(spec.time_order),
            rule_z: gauss_legendre_unit(spec.space_order),
            pairs: Vec::with_capacity(n * (n + 1) / 2),
            blocks: Vec::with_capacity(n * (n + 1) / 2),
            fz: Vec::new(),
            wz: Vec::new(),
        };
        let mut scratch = Scratch::default();
        let mut row = Row::default();
        for i in 0..n {
            for j in i..n {
                row.blocks.clear();
                row.fz.clear();
                row.wz.clear();
                lattice.assemble(grid.u(i), grid.u(j), &mut row, &mut scratch);
                let offset = lattice.fz.len() as u32;
                lattice.blocks.push(row.blocks.iter().map(|b| TimeBlock { start: b.start + offset, ..*b }).collect());
                lattice.fz.extend_from_slice(&row.fz);
                lattice.wz.extend_from_slice(&row.wz);
                lattice.pairs.push((i as u32, j as u32));
            }
        }
        Ok(lattice)
    }

    /// Quadrature entries of the map at (r, s) = (e^{ur}, e^{us}), with the
    /// factor κ left out and the weights referred to H = G/W.
    pub(super) fn assemble(&self, ur: f64, us: f64, row: &mut Row, scratch: &mut Scratch) {
        let kernel = &self.kernel;
        let alpha = kernel.alpha();
        let (r, s) = (ur.exp(), us.exp());
        let grid = self.grid;
        let lp1 = kernel.ln_density(1.0, r, s);
        let lw_out = ln_weight(self.eta_w, ur, us);
        let mut times = std::mem::take(&mut scratch.times);
        time_rule(r, s, alpha, &self.spec, &self.rule_t, &mut times);
        for &(tau, tau1, wt) in &times {
            space_rule(alpha, r, s, tau, tau1, &self.rule_z, scratch);
            let shift = -tau1.ln() / alpha;
            let uy = us + shift;
            let (iy, wy) = lagrange(grid.position(uy), grid.n);
            let start = row.fz.len();
            let mut push = |l: f64, wl: f64| {
                let z = l.exp();
                let lb = self.dim * l + kernel.ln_density(tau, r, z) + kernel.ln_density(tau1, z, s) - lp1;
                let uz = l + shift;
                let w = wl * wt * (lb - alpha * l + ln_weight(self.eta_w, uz, uy) - lw_out).exp();
                if w > PRUNE && w.is_finite() {
                    row.fz.push(grid.position(uz) as f32);
                    row.wz.push(w as f32);
                }
            };
            for (&l, &wl) in scratch.nodes_l.iter().zip(&scratch.nodes_w) {
                push(l, wl);
            }
            // Below the lowest breakpoint the integrand decays like z^ε.
            push(scratch.bps[0], 1.0 / self.eps);
            let len = row.fz.len() - start;
            if len > 0 {
                row.blocks.push(TimeBlock {
                    iy: iy as u32,
                    wy: wy.map(|v| v as f32),
                    shift: shift as f32,
                    start: start as u32,
                    len: len as u32,
                });
            }
        }
        scratch.times = times;
        // Short-time layers below the time rule: the bridge is a point mass
        // at the near endpoint, to first order in the layer width.
        let tail_r = time_floor(r, alpha);
        let tail_s = time_floor(s, alpha);
        for (tau1, l, w) in [(1.0, ur, tail_r * (-alpha * ur).exp()), (tail_s, us, tail_s)] {
            let shift = -f64::ln(tau1) / alpha;
            let (uz, uy) = (l + shift, us + shift);
            let w = if tau1 == 1.0 { w } else { w * (-alpha * us + ln_weight(self.eta_w, uz, uy) - lw_out).exp() };
            let (iy, wy) = lagrange(grid.position(uy), grid.n);
            if w > PRUNE && w.is_finite() {
                row.blocks.push(TimeBlock {
                    iy: iy as u32,
                    wy: wy.map(|v| v as f32),
                    shift: shift as f32,
                    start: row.fz.len() as u32,
                    len: 1,
                });
                row.fz.push(grid.position(uz) as f32);
                row.wz.push(w as f32);
            }
        }
    }

    /// A fresh row for the exact point (r, s).
    pub(super) fn row_at(&self, r: f64, s: f64) -> Row {
        let mut row = Row::default();
        self.assemble(r.ln(), s.ln(), &mut row, &mut Scratch::default());
        row
    }

    /// G_{n+1}(r, s) = κ·(K-row at (r,s))·H_n, i.e. the next ratio iterate at
    /// an arbitrary point.
    pub(super) fn apply_row(&self, row: &Row, h: &[f64]) -> f64 {
        let mut col = vec![0.0; self.grid.n];
        self.kappa * contract(&row.blocks, &row.fz, &row.wz, h, self.grid.n, &mut col)
    }

    /// The row collapsed onto the table cells: for every table h,
    /// `apply_row(row, h)` equals κ·Σ c_k h_k up to rounding. Worth it when
    /// one row meets many tables.
    pub(super) fn row_weights(&self, row: &Row) -> Vec<f64> {
        let n = self.grid.n;
        let mut c = vec![0.0; n * n];
        let mut col = vec![0.0; n];
        for b in &row.blocks {
            col.fill(0.0);
            let range = b.start as usize..(b.start + b.len) as usize;
            for (&f, &w) in row.fz[range.clone()].iter().zip(&row.wz[range]) {
                let (ix, wx) = lagrange(f64::from(f), n);
                let w = f64::from(w);
                for (a, wa) in wx.iter().enumerate() {
                    col[ix + a] += w * wa;
                }
            }
            let iy = b.iy as usize;
            for (k, &ck) in col.iter().enumerate() {
                if ck != 0.0 {
                    for (bb, &wy) in b.wy.iter().enumerate() {
                        c[k * n + iy + bb] += ck * f64::from(wy);
                    }
                }
            }
        }
        c
    }

    /// κ·Σ c_k h_k for weights from [`Self::row_weights`].
    pub(super) fn apply_weights(&self, c: &[f64], h: &[f64]) -> f64 {
        self.kappa * c.iter().zip(h).map(|(a, b)| a * b).sum::<f64>()
    }

    /// G(r, s) = 1 + (K G)(r, s) at an arbitrary point, from the table `h`
    /// of the solution (Nyström interpolation).
    pub fn nystrom(&self, h: &[f64], r: f64, s: f64) -> f64 {
        1.0 + self.weight(r, s) * self.apply_row(&self.row_at(r, s), h)
    }

    /// W(r, s), the origin weight relating H and G.
    pub fn weight(&self, r: f64, s: f64) -> f64 {
        ln_weight(self.eta_w, r.ln(), s.ln()).exp()
    }

    pub fn kernel(&self) -> &K {
        &self.kernel
    }
}

impl<K> DuhamelLattice<K> {
    pub fn size(&self) -> usize {
        self.grid.n
    }

    pub fn entries(&self) -> usize {
        self.wz.len()
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Grid node positions.
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.grid.n).map(|k| self.grid.u(k).exp()).collect()
    }

    /// The table of the zeroth iterate G₀ ≡ 1.
    pub fn identity_table(&self) -> Vec<f64> {
        let n = self.grid.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = (-ln_weight(self.eta_w, self.grid.u(i), self.grid.u(j))).exp();
            }
        }
        out
    }

    /// out = K h (both symmetric N×N tables, row-major).
    pub fn apply(&self, h: &[f64], out: &mut [f64]) {
        let n = self.grid.n;
        let mut col = vec![0.0; n];
        for (&(i, j), blocks) in self.pairs.iter().zip(&self.blocks) {
            let v = self.kappa * contract(blocks, &self.fz, &self.wz, h, n, &mut col);
            let (i, j) = (i as usize, j as usize);
            out[i * n + j] = v;
            out[j * n + i] = v;
        }
    }

    /// G(r, s) read from table `h` by cubic interpolation (cheaper and less
    /// accurate than the Nyström value).
    pub fn interpolate(&self, h: &[f64], r: f64, s: f64) -> f64 {
        let n = self.grid.n;
        let (ur, us) = (r.ln(), s.ln());
        let (i, wi) = lagrange(self.grid.position(ur), n);
        let (j, wj) = lagrange(self.grid.position(us), n);
        let mut acc = 0.0;
        for (a, wa) in wi.iter().enumerate() {
            let row = &h[(i + a) * n + j..(i + a) * n + j + 4];
            acc += wa * (wj[0] * row[0] + wj[1] * row[1] + wj[2] * row[2] + wj[3] * row[3]);
        }
        acc * ln_weight(self.eta_w, ur, us).exp()
    }

    /// Solves (I − K) H = H₀ for the table of the full perturbed ratio.
    ///
    /// # Errors
    /// Convergence error if GMRES stalls.
    pub fn solve(&self, tol: f64) -> Result<(Vec<f64>, KrylovStats)> {
        let b = self.identity_table();
        let mut x = b.clone();
        let stats = gmres(
            |v, out| {
                self.apply(v, out);
                for (o, vi) in out.iter_mut().zip(v) {
                    *o = vi - *o;
                }
            },
            &b,
            &mut x,
            40,
            800,
            tol,
        )?;
        Ok((x, stats))
    }

    /// Largest |G| over table nodes with both coordinates in [lo, hi].
    pub fn sup_norm(&self, h: &[f64], lo: f64, hi: f64) -> f64 {
        let n = self.grid.n;
        let inside = |k: usize| {
            let u = self.grid.u(k);
            u >= lo.ln() - 1e-9 && u <= hi.ln() + 1e-9
        };
        let mut m: f64 = 0.0;
        for i in (0..n).filter(|&i| inside(i)) {
            for j in (0..n).filter(|&j| inside(j)) {
                let g = h[i * n + j] * ln_weight(self.eta_w, self.grid.u(i), self.grid.u(j)).exp();
                m = m.max(g.abs());
            }
        }
        m
    }
}

/// Σ over blocks and entries of w · H(z c, s c), without the factor κ.
#[inline]
pub(super) fn contract(blocks: &[TimeBlock], fz: &[f32], wz: &[f32], h: &[f64], n: usize, col: &mut [f64]) -> f64 {
    let mut acc = 0.0;
    for b in blocks {
        let iy = b.iy as usize;
        let wy = b.wy.map(f64::from);
        for (k, c) in col.iter_mut().enumerate() {
            let hr = &h[k * n + iy..k * n + iy + 4];
            *c = wy[0] * hr[0] + wy[1] * hr[1] + wy[2] * hr[2] + wy[3] * hr[3];
        }
        let range = b.start as usize..(b.start + b.len) as usize;
        let mut part = 0.0;
        for (&f, &w) in fz[range.clone()].iter().zip(&wz[range]) {
            let (ix, wx) = lagrange(f64::from(f), n);
            part += f64::from(w) * (wx[0] * col[ix] + wx[1] * col[ix + 1] + wx[2] * col[ix + 2] + wx[3] * col[ix + 3]);
        }
        acc += part;
    }
    acc
}

/// Reusable buffers for row assembly.
#[derive(Debug, Default)]
pub(super) struct Scratch {
    times: Vec<(f64, f64, f64)>,
    bps: Vec<f64>,
    nodes_l: Vec<f64>,
    nodes_w: Vec<f64>,
}

/// Start of the time rule near either end, relative to the time scale of
/// the endpoint; the layer below is covered by a single endpoint entry.
const TIME_FLOOR: f64 = 1e-5;

fn time_floor(x: f64, alpha: f64) -> f64 {
    TIME_FLOOR * x.min(1.0).powf(alpha)
}

/// Time nodes (τ, 1−τ, weight) on (0, 1): composite Gauss–Legendre in ln τ on
/// (0, ½] and in ln(1−τ) on [½, 1), each starting at 1e−9·min(1, x)^α for
/// the endpoint position x it resolves. 1−τ is carried separately so that
/// it never cancels.
fn time_rule(r: f64, s: f64, alpha: f64, spec: &LatticeSpec, rule: &(Vec<f64>, Vec<f64>), out: &mut Vec<(f64, f64, f64)>) {
    out.clear();
    let (gx, gw) = rule;
    for (x, mirrored) in [(r, false), (s, true)] {
        let lmin = time_floor(x, alpha).ln();
        let lmax = 0.5f64.ln();
        let panels = ((lmax - lmin) / spec.time_panel).ceil().max(1.0) as usize;
        let hp = (lmax - lmin) / panels as f64;
        for p in 0..panels {
            for (x, w) in gx.iter().zip(gw) {
                let e = (lmin + hp * (p as f64 + x)).exp();
                let wt = hp * w * e;
                out.push(if mirrored { (1.0 - e, e, wt) } else { (e, 1.0 - e, wt) });
            }
        }
    }
}

/// Nodes in ln z for the bridge integral: decade breakpoints over
/// [10⁻⁵·min, 10²·max] of the four scales, refined geometrically around r
/// (width τ^{1/α}), s (width (1−τ)^{1/α}) and the interpolated position
/// (1−τ)r + τs where a light-tailed bridge concentrates (width
/// (τ(1−τ))^{1/α}); Gauss–Legendre per panel.
fn space_rule(alpha: f64, r: f64, s: f64, tau: f64, tau1: f64, rule: &(Vec<f64>, Vec<f64>), scratch: &mut Scratch) {
    let (gx, gw) = rule;
    let a = tau.powf(1.0 / alpha);
    let b = tau1.powf(1.0 / alpha);
    let lo = r.min(s).min(a).min(b) * 1e-5;
    let hi = r.max(s).max(a).max(b) * 1e2;
    let bps = &mut scratch.bps;
    bps.clear();
    let mut e = lo.log10().floor();
    while 10f64.powf(e) < hi * 10.0 {
        bps.push(10f64.powf(e));
        e += 1.0;
    }
    let mid = tau1 * r + tau * s;
    let mid_width = (tau * tau1).powf(1.0 / alpha);
    // Only a light-tailed bridge concentrates between the endpoints; heavy
    // tails keep it near r and s.
    let centres = if alpha == 2.0 { 3 } else { 2 };
    for &(c, w) in [(r, a), (s, b), (mid, mid_width)].iter().take(centres) {
        let mut k = 0.25 * w;
        while k < c {
            bps.push(c - k);
            bps.push(c + k);
            k *= 2.0;
        }
        bps.push(c);
    }
    for v in bps.iter_mut() {
        *v = v.clamp(lo, hi).ln();
    }
    bps.sort_by(f64::total_cmp);
    bps.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    scratch.nodes_l.clear();
    scratch.nodes_w.clear();
    for pair in bps.windows(2) {
        let (l1, l2) = (pair[0], pair[1]);
        for (x, w) in gx.iter().zip(gw) {
            scratch.nodes_l.push(l1 + (l2 - l1) * x);
            scratch.nodes_w.push((l2 - l1) * w);
        }
    }
}
