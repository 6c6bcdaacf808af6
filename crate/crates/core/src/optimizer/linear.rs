//! Trust-region minimization on linear interpolation models.
//!
//! The iterate carries a simplex of `n + 1` points: the best point found so
//! far (the base) and `n` displacements from it. The linear interpolant
//! through the simplex gives a gradient estimate; each trust-region step
//! moves along its negative by a step length that lies between `rho` and
//! the initial radius, doubling after good steps and halving after poor
//! ones. Once a poor step is taken at length `rho`, the simplex geometry is
//! repaired or `rho` is halved. `rho` never grows.

use super::Recorder;
use crate::error::Result;
use crate::scalar::Scalar;

/// Simplex acceptance: vertex heights at least `ALPHA·rho`, edges at most `BETA·rho`.
const ALPHA: f64 = 0.25;
const BETA: f64 = 2.1;
/// Length of a geometry-repair step, in units of `rho`.
const GAMMA: f64 = 0.5;
/// Distance scale when choosing which vertex to drop.
const DELTA: f64 = 1.1;
/// Steps whose actual/predicted reduction falls below this are "poor".
const POOR_RATIO: f64 = 0.1;
/// Steps at or above this ratio double the step length.
const GOOD_RATIO: f64 = 0.3;

struct Simplex<S> {
    base: Vec<S>,
    f_base: S,
    disp: Vec<Vec<S>>,
    f_disp: Vec<S>,
}

fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

fn norm<S: Scalar>(a: &[S]) -> S {
    dot(a, a).sqrt()
}

fn add<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    a.iter().zip(b).map(|(x, y)| *x + *y).collect()
}

fn sub<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    a.iter().zip(b).map(|(x, y)| *x - *y).collect()
}

/// Inverse of the matrix whose columns are `cols`, by Gauss-Jordan with
/// partial pivoting. Returned row-major.
fn inverse_of_columns<S: Scalar>(cols: &[Vec<S>]) -> Option<Vec<Vec<S>>> {
    let n = cols.len();
    // a[i][j] = cols[j][i], augmented with identity
    let mut a: Vec<Vec<S>> = (0..n)
        .map(|i| {
            let mut row: Vec<S> = (0..n).map(|j| cols[j][i]).collect();
            row.extend((0..n).map(|j| if i == j { S::one() } else { S::zero() }));
            row
        })
        .collect();
    let scale = a
        .iter()
        .flat_map(|r| r[..n].iter())
        .fold(S::zero(), |m, v| m.max(v.abs()));
    if !(scale > S::zero()) {
        return None;
    }
    let tiny = scale * S::epsilon() * S::lit(n as f64 * 16.0);
    for col in 0..n {
        let piv = (col..n).max_by(|&r, &s| {
            a[r][col]
                .abs()
                .partial_cmp(&a[s][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[piv][col].abs() <= tiny {
            return None;
        }
        a.swap(col, piv);
        let p = a[col][col];
        for v in a[col].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != col {
                let factor = a[r][col];
                if factor != S::zero() {
                    for c in 0..2 * n {
                        let delta = factor * a[col][c];
                        a[r][c] -= delta;
                    }
                }
            }
        }
    }
    Some(a.into_iter().map(|row| row[n..].to_vec()).collect())
}

impl<S: Scalar> Simplex<S> {
    /// Makes the lowest-valued vertex the base.
    fn reorder(&mut self) {
        let mut k = None;
        let mut best = self.f_base;
        for (j, &f) in self.f_disp.iter().enumerate() {
            if f < best {
                best = f;
                k = Some(j);
            }
        }
        if let Some(k) = k {
            let shift = self.disp[k].clone();
            self.base = add(&self.base, &shift);
            for (j, d) in self.disp.iter_mut().enumerate() {
                if j == k {
                    *d = shift.iter().map(|v| -*v).collect();
                } else {
                    *d = sub(d, &shift);
                }
            }
            std::mem::swap(&mut self.f_base, &mut self.f_disp[k]);
        }
    }
}

enum Next {
    TrustRegion,
    Repair,
}

pub(super) fn run<S: Scalar, F: FnMut(&[S]) -> S>(
    rec: &mut Recorder<S, F>,
    x0: &[S],
    rho_beg: S,
    rho_end: S,
) -> Result<(S, bool)> {
    let n = x0.len();
    let mut rho = rho_beg;
    let mut delta_step = rho_beg;
    let (alpha, beta, gamma, delta) = (S::lit(ALPHA), S::lit(BETA), S::lit(GAMMA), S::lit(DELTA));

    let f0 = rec.eval(x0)?;
    let mut sx = Simplex {
        base: x0.to_vec(),
        f_base: f0,
        disp: Vec::with_capacity(n),
        f_disp: Vec::with_capacity(n),
    };
    for j in 0..n {
        if rec.exhausted() {
            return Ok((rho, false));
        }
        let mut d = vec![S::zero(); n];
        d[j] = rho;
        let f = rec.eval(&add(&sx.base, &d))?;
        sx.disp.push(d);
        sx.f_disp.push(f);
    }

    let mut next = Next::TrustRegion;
    loop {
        if rec.exhausted() {
            return Ok((rho, false));
        }
        sx.reorder();

        let inv = match inverse_of_columns(&sx.disp) {
            Some(inv) => inv,
            None => {
                // degenerate simplex: rebuild it axis-aligned around the base
                for j in 0..n {
                    if rec.exhausted() {
                        return Ok((rho, false));
                    }
                    let mut d = vec![S::zero(); n];
                    d[j] = rho;
                    sx.f_disp[j] = rec.eval(&add(&sx.base, &d))?;
                    sx.disp[j] = d;
                }
                continue;
            }
        };
        let heights: Vec<S> = inv.iter().map(|row| S::one() / norm(row)).collect();
        let edges: Vec<S> = sx.disp.iter().map(|d| norm(d)).collect();
        let acceptable = heights.iter().all(|&h| h >= alpha * rho) && edges.iter().all(|&e| e <= beta * delta_step);

        match next {
            Next::Repair => {
                if acceptable {
                    if rho <= rho_end {
                        return Ok((rho, true));
                    }
                    rho = rho * S::lit(0.5);
                    if rho <= S::lit(1.5) * rho_end {
                        rho = rho_end;
                    }
                    delta_step = rho;
                    next = Next::TrustRegion;
                    continue;
                }
                let (j_long, e_long) =
                    edges.iter().enumerate().fold(
                        (0, S::neg_infinity()),
                        |acc, (j, &e)| if e > acc.1 { (j, e) } else { acc },
                    );
                let j = if e_long > beta * delta_step {
                    j_long
                } else {
                    heights
                        .iter()
                        .enumerate()
                        .fold((0, S::infinity()), |acc, (j, &h)| if h < acc.1 { (j, h) } else { acc })
                        .0
                };
                // unit normal to the face opposite vertex j, on vertex j's side
                let d: Vec<S> = inv[j].iter().map(|v| *v * heights[j] * gamma * rho).collect();
                let f = rec.eval(&add(&sx.base, &d))?;
                sx.disp[j] = d;
                sx.f_disp[j] = f;
                next = Next::TrustRegion;
            }
            Next::TrustRegion => {
                let df: Vec<S> = sx.f_disp.iter().map(|f| *f - sx.f_base).collect();
                let mut g = vec![S::zero(); n];
                for (row, dfj) in inv.iter().zip(&df) {
                    for (gi, r) in g.iter_mut().zip(row) {
                        *gi += *dfj * *r;
                    }
                }
                let gnorm = norm(&g);
                if !(gnorm > S::zero()) || !gnorm.is_finite() {
                    next = Next::Repair;
                    continue;
                }
                let step: Vec<S> = g.iter().map(|v| -*v * delta_step / gnorm).collect();
                let x_new = add(&sx.base, &step);
                let f_new = rec.eval(&x_new)?;
                let predicted = delta_step * gnorm;
                let actual = sx.f_base - f_new;
                let ratio = actual / predicted;

                let improved = f_new < sx.f_base;
                let mut best_j = None;
                let mut best_score = S::zero();
                for j in 0..n {
                    let mut score = dot(&inv[j], &step).abs();
                    let dist = if improved {
                        norm(&sub(&sx.disp[j], &step))
                    } else {
                        edges[j]
                    };
                    let w = (dist / (delta * delta_step)).max(S::one());
                    score *= w * w;
                    if score > best_score {
                        best_score = score;
                        best_j = Some(j);
                    }
                }
                match (improved, best_j) {
                    (true, Some(j)) => {
                        for (k, d) in sx.disp.iter_mut().enumerate() {
                            if k != j {
                                *d = sub(d, &step);
                            }
                        }
                        sx.disp[j] = step.iter().map(|v| -*v).collect();
                        sx.f_disp[j] = sx.f_base;
                        sx.base = x_new;
                        sx.f_base = f_new;
                    }
                    (false, Some(j)) if best_score > S::one() => {
                        sx.disp[j] = step;
                        sx.f_disp[j] = f_new;
                    }
                    _ => {}
                }
                next = Next::TrustRegion;
                if ratio >= S::lit(GOOD_RATIO) {
                    delta_step = (delta_step * S::lit(2.0)).min(rho_beg);
                } else if ratio <= S::lit(POOR_RATIO) {
                    if delta_step > rho {
                        delta_step = (delta_step * S::lit(0.5)).max(rho);
                    } else {
                        next = Next::Repair;
                    }
                }
            }
        }
    }
}
