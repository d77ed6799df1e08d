//! Unconstrained minimisers used by the likelihood fits: Nelder–Mead and a
//! BFGS polish with central-difference gradients.
//!
//! Objective values that are not finite are treated as `+inf`, so an
//! objective can signal an invalid region by returning NaN or infinity.

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Stop when the simplex diameter (max-norm) falls below this.
    pub xtol: f64,
    /// ...and the spread of function values below this.
    pub ftol: f64,
    /// Initial simplex edge, relative to `max(|x_i|, 1)`.
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            max_evals: 20_000,
            xtol: 1e-9,
            ftol: 1e-11,
            initial_step: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub iterations: usize,
    pub converged: bool,
}

fn clean(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

/// Nelder–Mead with dimension-adaptive coefficients (Gao & Han).
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], opts: &NelderMeadOptions) -> Minimum {
    let n = x0.len();
    let nf = n as f64;
    let (alpha, gamma) = (1.0, 1.0 + 2.0 / nf);
    let (rho, sigma) = (0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf);
    let evals = std::cell::Cell::new(0usize);
    let eval = |x: &[f64]| {
        evals.set(evals.get() + 1);
        clean(f(x))
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += opts.initial_step * x[i].abs().max(1.0);
        let v = eval(&x);
        simplex.push((x, v));
    }

    let mut iterations = 0;
    let mut converged = false;
    while evals.get() < opts.max_evals {
        iterations += 1;
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let diam = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if diam <= opts.xtol * (1.0 + simplex[0].0.iter().fold(0.0f64, |m, v| m.max(v.abs())))
            && (worst - best).abs() <= opts.ftol * (1.0 + best.abs())
        {
            converged = best.is_finite();
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / nf)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let xr = along(alpha);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(alpha * gamma);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        // contraction, outside or inside
        let (xc, fc) = if fr < simplex[n].1 {
            let xc = along(alpha * rho);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(-rho);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < fr.min(simplex[n].1) {
            simplex[n] = (xc, fc);
            continue;
        }
        // shrink toward the best vertex
        let x_best = simplex[0].0.clone();
        for v in simplex.iter_mut().skip(1) {
            for (xi, bi) in v.0.iter_mut().zip(&x_best) {
                *xi = bi + sigma * (*xi - bi);
            }
            v.1 = eval(&v.0);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = simplex.swap_remove(0);
    Minimum {
        x,
        f: fx,
        evals: evals.get(),
        iterations,
        converged,
    }
}

/// Central-difference gradient with steps `cbrt(eps) * max(|x_i|, 1)`.
pub fn fd_gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> Vec<f64> {
    let h0 = f64::EPSILON.cbrt();
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = h0 * x[i].abs().max(1.0);
            xp[i] = x[i] + h;
            let fp = f(&xp);
            xp[i] = x[i] - h;
            let fm = f(&xp);
            xp[i] = x[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Stop when `max |g_i| <= gtol * (1 + |f|)`.
    pub gtol: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions {
            max_iter: 200,
            gtol: 1e-9,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// BFGS with finite-difference gradients and Armijo backtracking. Meant as a
/// polish after Nelder–Mead; never returns a point worse than `x0`.
pub fn bfgs<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], opts: &BfgsOptions) -> Minimum {
    let n = x0.len();
    let obj = |x: &[f64]| clean(f(x));
    let mut x = x0.to_vec();
    let mut fx = obj(&x);
    let mut evals = 1;
    let mut g = fd_gradient(&obj, &x);
    evals += 2 * n;
    let mut hinv = vec![vec![0.0; n]; n];
    for (i, row) in hinv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..opts.max_iter {
        iterations = it + 1;
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !gmax.is_finite() {
            break;
        }
        if gmax <= opts.gtol * (1.0 + fx.abs()) {
            converged = true;
            break;
        }
        let mut d: Vec<f64> = hinv.iter().map(|row| -dot(row, &g)).collect();
        let mut slope = dot(&d, &g);
        if slope >= 0.0 {
            // not a descent direction: reset to steepest descent
            for (i, row) in hinv.iter_mut().enumerate() {
                row.iter_mut().for_each(|v| *v = 0.0);
                row[i] = 1.0;
            }
            d = g.iter().map(|v| -v).collect();
            slope = dot(&d, &g);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            let fnew = obj(&xn);
            evals += 1;
            if fnew <= fx + 1e-4 * step * slope {
                accepted = Some((xn, fnew));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fnew)) = accepted else {
            // line search failed: the gradient is at noise level
            converged = gmax <= 1e-6 * (1.0 + fx.abs());
            break;
        };
        let gn = fd_gradient(&obj, &xn);
        evals += 2 * n;
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if it == 0 {
                // scale the initial inverse Hessian
                let scale = sy / dot(&y, &y);
                for (i, row) in hinv.iter_mut().enumerate() {
                    row.iter_mut().for_each(|v| *v = 0.0);
                    row[i] = scale;
                }
            }
            let hy: Vec<f64> = hinv.iter().map(|row| dot(row, &y)).collect();
            let yhy = dot(&y, &hy);
            let rho = 1.0 / sy;
            for i in 0..n {
                for j in 0..n {
                    hinv[i][j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
                }
            }
        }
        let moved = (fx - fnew).abs();
        x = xn;
        fx = fnew;
        g = gn;
        if moved == 0.0 && s.iter().all(|v| v.abs() < 1e-15) {
            break;
        }
    }
    Minimum {
        x,
        f: fx,
        evals,
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let m = nelder_mead(rosenbrock, &[-1.2, 1.0], &NelderMeadOptions::default());
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6, "{:?}", m.x);
    }

    #[test]
    fn nelder_mead_respects_infeasible_region() {
        // minimum of (x-2)^2 restricted to x > 0 via +inf outside
        let f = |x: &[f64]| if x[0] <= 0.0 { f64::NAN } else { (x[0] - 2.0).powi(2) + x[1] * x[1] };
        let m = nelder_mead(f, &[0.5, 1.0], &NelderMeadOptions::default());
        assert!((m.x[0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn bfgs_quadratic() {
        let f = |x: &[f64]| 3.0 * (x[0] - 1.0).powi(2) + (x[1] + 2.0).powi(2) + x[0] * x[1];
        let m = bfgs(f, &[0.0, 0.0], &BfgsOptions::default());
        // 6(x-1) + y = 0 and 2(y+2) + x = 0
        let (x0, y0) = (16.0 / 11.0, -30.0 / 11.0);
        assert!((m.x[0] - x0).abs() < 1e-6 && (m.x[1] - y0).abs() < 1e-6, "{:?}", m.x);
    }

    #[test]
    fn gradient_of_quadratic() {
        let f = |x: &[f64]| x[0] * x[0] + 3.0 * x[1];
        let g = fd_gradient(&f, &[2.0, -1.0]);
        assert!((g[0] - 4.0).abs() < 1e-8 && (g[1] - 3.0).abs() < 1e-8);
    }
}
