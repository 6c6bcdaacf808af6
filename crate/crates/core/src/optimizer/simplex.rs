//! Nelder-Mead downhill simplex.

use super::Recorder;
use crate::error::Result;
use crate::scalar::Scalar;

pub(super) fn run<S: Scalar, F: FnMut(&[S]) -> S>(
    rec: &mut Recorder<S, F>,
    x0: &[S],
    step: S,
    tol: S,
) -> Result<(S, bool)> {
    let n = x0.len();
    let half = S::lit(0.5);
    let two = S::lit(2.0);

    let mut pts: Vec<(Vec<S>, S)> = Vec::with_capacity(n + 1);
    pts.push((x0.to_vec(), rec.eval(x0)?));
    for j in 0..n {
        if rec.exhausted() {
            return Ok((step, false));
        }
        let mut x = x0.to_vec();
        x[j] += step;
        let f = rec.eval(&x)?;
        pts.push((x, f));
    }

    loop {
        pts.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let size = pts[1..]
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(&pts[0].0)
                    .map(|(a, b)| (*a - *b).abs())
                    .fold(S::zero(), S::max)
            })
            .fold(S::zero(), S::max);
        if size <= tol {
            return Ok((size, true));
        }
        if rec.exhausted() {
            return Ok((size, false));
        }

        let mut centroid = vec![S::zero(); n];
        for (x, _) in &pts[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += *v;
            }
        }
        let inv_n = S::one() / S::lit(n as f64);
        centroid.iter_mut().for_each(|c| *c *= inv_n);
        let worst = pts[n].clone();
        let along = |t: S| -> Vec<S> { centroid.iter().zip(&worst.0).map(|(c, w)| *c + t * (*c - *w)).collect() };

        let xr = along(S::one());
        let fr = rec.eval(&xr)?;
        if fr < pts[0].1 {
            if rec.exhausted() {
                pts[n] = (xr, fr);
                continue;
            }
            let xe = along(two);
            let fe = rec.eval(&xe)?;
            pts[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < pts[n - 1].1 {
            pts[n] = (xr, fr);
        } else {
            if rec.exhausted() {
                continue;
            }
            let (xc, fc) = if fr < worst.1 {
                let x = along(half);
                let f = rec.eval(&x)?;
                (x, f)
            } else {
                let x = along(-half);
                let f = rec.eval(&x)?;
                (x, f)
            };
            if fc < worst.1.min(fr) {
                pts[n] = (xc, fc);
            } else {
                let best = pts[0].0.clone();
                for p in pts.iter_mut().skip(1) {
                    if rec.exhausted() {
                        break;
                    }
                    let x: Vec<S> = best.iter().zip(&p.0).map(|(b, v)| *b + half * (*v - *b)).collect();
                    let f = rec.eval(&x)?;
                    *p = (x, f);
                }
            }
        }
    }
}
