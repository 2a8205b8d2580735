//! Node detection: sub-grid localization of density zeros.

use crate::fields::{Point, ScalarField};

/// A detected density zero. `quality` is the RMS residual of the quadratic
/// fit used to refine the position; small means locally parabolic.
#[derive(Debug, Clone, Copy)]
pub struct NodeEstimate {
    pub position: Point,
    pub rho_min: f64,
    pub quality: f64,
}

/// Find grid-local minima below `threshold` (relative to max rho) and refine
/// each to sub-grid precision with a least-squares quadratic over its 3x3
/// neighborhood. Two classes of false positives are filtered: trough-shaped
/// minima (nodal lines, well walls) by their vanishing tangential curvature,
/// and one-sided terrace edges by a fitted minimum diving below zero.
/// Duplicates within one grid spacing merge, keeping the deepest.
pub fn detect_nodes(rho: &ScalarField, threshold: f64) -> Vec<NodeEstimate> {
    assert!(threshold > 0.0 && threshold < 1.0, "threshold must sit in (0, 1)");
    let g = rho.grid;
    let rho_max = rho.max_value();
    if rho_max <= 0.0 {
        return Vec::new();
    }
    let cut = threshold * rho_max;
    let (hx, hy) = (g.hx(), g.hy());

    let mut found: Vec<NodeEstimate> = Vec::new();
    for j in 1..g.ny - 1 {
        for i in 1..g.nx - 1 {
            let center = rho.at(i, j);
            if center >= cut {
                continue;
            }
            // ties are allowed (a node centered between lattice points makes
            // equal-value neighbor cells) but at least one neighbor must rise
            let mut le_all = true;
            let mut lt_any = false;
            for (di, dj) in NEIGHBORS {
                let n = rho.at((i as isize + di) as usize, (j as isize + dj) as usize);
                le_all &= center <= n;
                lt_any |= center < n;
            }
            if !le_all || !lt_any {
                continue;
            }

            // quadratic fit q = a + b u + c w + d u^2 + e u w + f w^2 on the
            // 3x3 patch, offsets u, w in {-1, 0, 1} grid units
            let mut s_q = 0.0;
            let mut s_uq = 0.0;
            let mut s_wq = 0.0;
            let mut s_uuq = 0.0;
            let mut s_uwq = 0.0;
            let mut s_wwq = 0.0;
            let mut patch_max = 0.0f64;
            for dj in -1i32..=1 {
                for di in -1i32..=1 {
                    let q = rho.at((i as i32 + di) as usize, (j as i32 + dj) as usize);
                    let (u, w) = (di as f64, dj as f64);
                    s_q += q;
                    s_uq += u * q;
                    s_wq += w * q;
                    s_uuq += u * u * q;
                    s_uwq += u * w * q;
                    s_wwq += w * w * q;
                    patch_max = patch_max.max(q);
                }
            }
            // normal equations decouple by parity; the even block solves in
            // closed form, the odd terms are single divisions
            let (a, d, f) = solve_even_block(s_q, s_uuq, s_wwq);
            let b = s_uq / 6.0;
            let c = s_wq / 6.0;
            let e = s_uwq / 4.0;

            // Hessian [[2d, e], [e, 2f]]: demand genuinely bowl-shaped
            let tr = d + f;
            let det = 4.0 * d * f - e * e;
            let disc = ((d - f).powi(2) + e * e).sqrt();
            let lam_min = tr - disc;
            let lam_max = tr + disc;
            if !(lam_max > 0.0) || lam_min < 0.05 * lam_max {
                continue;
            }

            // minimum of the fit, kept within the patch
            let du = ((-2.0 * b * f + c * e) / det).clamp(-1.0, 1.0);
            let dw = ((-2.0 * c * d + b * e) / det).clamp(-1.0, 1.0);

            // a fit whose minimum dives below zero is chasing a one-sided
            // feature (a wall corner, a terrace edge), not a density zero
            let fit_min = a + b * du + c * dw + d * du * du + e * du * dw + f * dw * dw;
            if fit_min < -0.02 * patch_max {
                continue;
            }

            let mut ss = 0.0;
            for dj in -1i32..=1 {
                for di in -1i32..=1 {
                    let q = rho.at((i as i32 + di) as usize, (j as i32 + dj) as usize);
                    let (u, w) = (di as f64, dj as f64);
                    let fit = a + b * u + c * w + d * u * u + e * u * w + f * w * w;
                    ss += (fit - q).powi(2);
                }
            }

            found.push(NodeEstimate {
                position: Point::new(g.x(i) + du * hx, g.y(j) + dw * hy),
                rho_min: center,
                quality: (ss / 9.0).sqrt(),
            });
        }
    }

    // merge duplicates within one grid spacing, keeping the deepest
    found.sort_by(|p, q| p.rho_min.total_cmp(&q.rho_min));
    let h = g.h_max();
    let mut kept: Vec<NodeEstimate> = Vec::new();
    for cand in found {
        if kept.iter().all(|k| k.position.dist(cand.position) > h) {
            kept.push(cand);
        }
    }
    kept
}

const NEIGHBORS: [(isize, isize); 8] =
    [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

/// Least squares for the even block: minimize over (a, d, f) with moments
/// S = [sum q, sum u^2 q, sum w^2 q] and Gram [[9,6,6],[6,6,4],[6,4,6]],
/// whose inverse is [[20,-12,-12],[-12,18,0],[-12,0,18]] / 36.
fn solve_even_block(s_q: f64, s_uuq: f64, s_wwq: f64) -> (f64, f64, f64) {
    let a = (5.0 * s_q - 3.0 * s_uuq - 3.0 * s_wwq) / 9.0;
    let d = (-2.0 * s_q + 3.0 * s_uuq) / 6.0;
    let f = (-2.0 * s_q + 3.0 * s_wwq) / 6.0;
    (a, d, f)
}
