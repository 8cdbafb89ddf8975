//! The truncated-potential construction for repulsive couplings.
//!
//! For κ < 0 the perturbed kernel is the decreasing limit of the kernels
//! for the bounded potentials q_L = |κ| / (z^α + |κ|/L), a smooth cut of
//! |κ| z^{−α} at height L (a sharp min(·, L) would put a kink at a
//! level-dependent radius between fixed lattice nodes). Truncation breaks
//! scaling only through the level: at unit time the kernel for level L and
//! time t is that of level ℓ = L t. In the Duhamel step the remaining time
//! 1 − τ therefore sees level ℓ(1 − τ) ≤ ℓ, so the family of unit-time
//! ratio tables G_ℓ can be solved level by level, upwards on a geometric
//! ladder, each level coupling only to itself and to lower levels through
//! interpolation in ln ℓ. Below the first rung the dependence on ℓ is
//! linear to first order, G_ℓ ≈ 1 + (ℓ/ℓ₀)(G_{ℓ₀} − 1).
//!
//! Each rung is a bounded perturbation, summed by GMRES on the same
//! lattice entries as the unbounded problem; only the per-entry factor
//! x/(1 + x), x = ℓ z^α/|κ|, and the level mixing differ.

use crate::error::{HardyError, Result};
use crate::krylov::gmres;

use super::lattice::{lagrange, DuhamelLattice, TimeBlock};
use super::{EngineSpec, KernelEvaluator};

/// Outcome of the truncated-potential construction.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationCheck {
    /// Unit-time truncation levels ℓ that were solved.
    pub levels: Vec<f64>,
    /// Largest relative change of G between the last two levels on the
    /// comparison window.
    pub last_change: f64,
    /// Largest relative difference between the last level and the resolvent
    /// sum on the comparison window.
    pub discrepancy: f64,
    /// Whether G_ℓ was nonincreasing in ℓ (up to `spec.rel_tol`) on the
    /// window, as the construction requires.
    pub monotone: bool,
}

const FIRST_LEVEL: f64 = 1e-2;
const LEVELS_PER_DECADE: f64 = 2.0;
const LAST_LEVEL: f64 = 1e9;
/// Both coordinates of the comparison window lie in [WINDOW_LO, WINDOW_HI].
const WINDOW_LO: f64 = 5e-2;
const WINDOW_HI: f64 = 2e1;

/// Interpolation weights in ln ℓ: position `x` on the ladder (in rungs),
/// current rung `k`. Returns (rung, weight) pairs, with `None` standing for
/// the unperturbed table.
///
/// Interpolation is linear: G_ℓ changes by tens of percent per rung where
/// the truncation bites, and higher-order rules overshoot there and break
/// the monotonicity in ℓ. Convex weights keep the ordering of the tables.
fn level_weights(x: f64, k: usize, step: f64, out: &mut Vec<(Option<usize>, f64)>) {
    out.clear();
    if x < 0.0 {
        let a = (x * step).exp();
        out.push((Some(0), a));
        out.push((None, 1.0 - a));
        return;
    }
    if k == 0 {
        out.push((Some(0), 1.0));
        return;
    }
    let i = (x.floor() as usize).min(k - 1);
    let f = x - i as f64;
    out.push((Some(i), 1.0 - f));
    out.push((Some(i + 1), f));
}

struct Rung<'a, K> {
    lattice: &'a DuhamelLattice<K>,
    level: f64,
    k: usize,
    step: f64,
    abs_kappa: f64,
    alpha: f64,
    /// zc^α per lattice entry, zc being the scaled intermediate point.
    zpow: &'a [f64],
}

impl<K: KernelEvaluator> Rung<'_, K> {
    /// Σ_row κ·w·min(1, ℓ z^α/|κ|)·Σ_j a_j H_j(zc, sc) over the mixing
    /// terms for which `tables(j)` supplies a table.
    fn contract<'t>(
        &self,
        blocks: &[TimeBlock],
        tables: &dyn Fn(Option<usize>) -> Option<&'t [f64]>,
        col: &mut [f64],
        weights: &mut Vec<(Option<usize>, f64)>,
    ) -> f64 {
        let lat = self.lattice;
        let n = lat.grid.n;
        let mut acc = 0.0;
        for b in blocks {
            let tau1 = (-self.alpha * f64::from(b.shift)).exp();
            let x = self.k as f64 + tau1.ln() / self.step;
            level_weights(x, self.k, self.step, weights);
            col.iter_mut().for_each(|c| *c = 0.0);
            let mut any = false;
            let iy = b.iy as usize;
            let wy = b.wy.map(f64::from);
            for &(j, a) in weights.iter() {
                let Some(h) = tables(j) else { continue };
                any = true;
                for (kk, c) in col.iter_mut().enumerate() {
                    let hr = &h[kk * n + iy..kk * n + iy + 4];
                    *c += a * (wy[0] * hr[0] + wy[1] * hr[1] + wy[2] * hr[2] + wy[3] * hr[3]);
                }
            }
            if !any {
                continue;
            }
            let range = b.start as usize..(b.start + b.len) as usize;
            // z^α = τ₁·zc^α for the unscaled point z.
            let c = self.level * tau1 / self.abs_kappa;
            let mut part = 0.0;
            for ((&f, &w), &zp) in lat.fz[range.clone()].iter().zip(&lat.wz[range.clone()]).zip(&self.zpow[range]) {
                let x = c * zp;
                let cut = x / (1.0 + x);
                let (ix, wx) = lagrange(f64::from(f), n);
                part += f64::from(w) * cut * (wx[0] * col[ix] + wx[1] * col[ix + 1] + wx[2] * col[ix + 2] + wx[3] * col[ix + 3]);
            }
            acc += part;
        }
        -self.abs_kappa * acc
    }
}

/// Relative sup-difference of two H tables on the window, in G units.
fn window_difference<K>(lattice: &DuhamelLattice<K>, a: &[f64], b: &[f64]) -> f64 {
    let g = lattice.grid;
    let inside = |k: usize| (WINDOW_LO.ln() - 1e-9..=WINDOW_HI.ln() + 1e-9).contains(&g.u(k));
    let mut m: f64 = 0.0;
    for i in (0..g.n).filter(|&i| inside(i)) {
        for j in (0..g.n).filter(|&j| inside(j)) {
            let idx = i * g.n + j;
            m = m.max(((a[idx] - b[idx]) / b[idx]).abs());
        }
    }
    m
}

/// Largest increase of `next` over `prev` relative to `prev`, on the window.
fn window_increase<K>(lattice: &DuhamelLattice<K>, next: &[f64], prev: &[f64]) -> f64 {
    let g = lattice.grid;
    let inside = |k: usize| (WINDOW_LO.ln() - 1e-9..=WINDOW_HI.ln() + 1e-9).contains(&g.u(k));
    let mut m: f64 = 0.0;
    for i in (0..g.n).filter(|&i| inside(i)) {
        for j in (0..g.n).filter(|&j| inside(j)) {
            let idx = i * g.n + j;
            m = m.max((next[idx] - prev[idx]) / prev[idx]);
        }
    }
    m
}

/// Climbs the ladder until the truncated tables agree with `resolvent` to
/// half the gate and have stopped moving, or the ladder ends.
pub(super) fn run<K: KernelEvaluator>(lattice: &DuhamelLattice<K>, resolvent: &[f64], spec: &EngineSpec) -> Result<TruncationCheck> {
    let kappa = lattice.kappa();
    if !(kappa < 0.0) {
        return Err(HardyError::domain("the truncated-potential construction is for repulsive couplings"));
    }
    let n = lattice.grid.n;
    let alpha = lattice.kernel().alpha();
    let step = std::f64::consts::LN_10 / LEVELS_PER_DECADE;
    let h0 = lattice.identity_table();
    let g = lattice.grid;
    let zpow: Vec<f64> = lattice.fz.iter().map(|&f| (alpha * (g.u0 + g.h * f64::from(f))).exp()).collect();
    let mut rungs: Vec<Vec<f64>> = Vec::new();
    let mut levels = Vec::new();
    let mut col = vec![0.0; n];
    let mut weights = Vec::new();
    let mut last_change = f64::INFINITY;
    let mut discrepancy = f64::INFINITY;
    let mut monotone = true;
    let mut k = 0;
    loop {
        let level = FIRST_LEVEL * (step * k as f64).exp();
        if level > LAST_LEVEL {
            break;
        }
        let rung = Rung { lattice, level, k, step, abs_kappa: -kappa, alpha, zpow: &zpow };
        // Known part: H₀ plus the contributions of lower rungs.
        let mut rhs = h0.clone();
        {
            let lower = |j: Option<usize>| -> Option<&[f64]> {
                match j {
                    None => Some(&h0[..]),
                    Some(j) if j < k => Some(&rungs[j][..]),
                    Some(_) => None,
                }
            };
            for (&(i, j), blocks) in lattice.pairs.iter().zip(&lattice.blocks) {
                let v = rung.contract(blocks, &lower, &mut col, &mut weights);
                let (i, j) = (i as usize, j as usize);
                rhs[i * n + j] += v;
                if i != j {
                    rhs[j * n + i] += v;
                }
            }
        }
        // The tables span orders of magnitude (H ~ 1/W where the cut is
        // active), so the solve runs in units of the previous rung: the
        // unknown is X/D with D = |X_{k−1}|, which is O(1) everywhere and
        // makes the relative residual an entrywise accuracy.
        let scale: Vec<f64> = rungs.last().unwrap_or(&h0).iter().map(|v| v.abs().max(1e-300)).collect();
        let scaled_rhs: Vec<f64> = rhs.iter().zip(&scale).map(|(b, d)| b / d).collect();
        let mut y = vec![1.0; n * n];
        let mut v_full = vec![0.0; n * n];
        gmres(
            |v, out| {
                for ((f, a), d) in v_full.iter_mut().zip(v).zip(&scale) {
                    *f = a * d;
                }
                let vf = &v_full[..];
                let own = |j: Option<usize>| -> Option<&[f64]> { (j == Some(k)).then_some(vf) };
                for (&(i, j), blocks) in lattice.pairs.iter().zip(&lattice.blocks) {
                    let c = rung.contract(blocks, &own, &mut col, &mut weights);
                    let (i, j) = (i as usize, j as usize);
                    out[i * n + j] = v[i * n + j] - c / scale[i * n + j];
                    out[j * n + i] = v[j * n + i] - c / scale[j * n + i];
                }
            },
            &scaled_rhs,
            &mut y,
            30,
            300,
            1e-2 * spec.rel_tol,
        )?;
        let x: Vec<f64> = y.iter().zip(&scale).map(|(a, d)| a * d).collect();
        if let Some(prev) = rungs.last() {
            last_change = window_difference(lattice, &x, prev);
            if window_increase(lattice, &x, prev) > spec.rel_tol {
                monotone = false;
            }
        }
        discrepancy = window_difference(lattice, &x, resolvent);
        rungs.push(x);
        levels.push(level);
        k += 1;
        if discrepancy <= 0.5 * spec.truncation_gate && last_change <= 0.5 * spec.truncation_gate {
            break;
        }
    }
    Ok(TruncationCheck { levels, last_change, discrepancy, monotone })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_weights_interpolate_polynomials() {
        let mut w = Vec::new();
        for &(x, k) in &[(2.3, 5usize), (4.7, 5), (0.4, 1), (1.5, 2), (0.0, 0), (3.0, 3)] {
            level_weights(x, k, 0.5, &mut w);
            let total: f64 = w.iter().map(|p| p.1).sum();
            assert!((total - 1.0).abs() < 1e-12);
            if k >= 1 {
                let lin: f64 = w.iter().map(|&(j, a)| a * j.unwrap() as f64).sum();
                assert!((lin - x).abs() < 1e-12);
            }
            assert!(w.iter().all(|&(j, a)| j.map_or(true, |j| j <= k) && (0.0..=1.0).contains(&a)));
        }
        level_weights(-2.0, 3, 0.5, &mut w);
        assert!((w[0].1 - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(w[1].0, None);
    }
}
