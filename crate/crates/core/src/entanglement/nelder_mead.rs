//! Nelder-Mead simplex minimizer, optionally with the dimension-adaptive
//! coefficients of Gao & Han.

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    /// Relative perturbation of nonzero coordinates in the initial simplex.
    pub initial_step: f64,
    /// Absolute perturbation of (near-)zero coordinates.
    pub zero_step: f64,
    pub adaptive: bool,
    pub max_evals: usize,
    /// Stop when the simplex diameter falls below this.
    pub xatol: f64,
    /// Stop when the spread of function values falls below this.
    pub fatol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { initial_step: 0.05, zero_step: 2.5e-4, adaptive: false, max_evals: 400, xatol: 1e-8, fatol: 1e-12 }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
}

pub fn minimize<F>(f: F, x0: &[f64], opts: &NelderMeadOptions) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let nf = n as f64;
    let (alpha, beta, gamma, delta) =
        if opts.adaptive { (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf) } else { (1.0, 2.0, 0.5, 0.5) };

    let evals = std::cell::Cell::new(0usize);
    let eval = |x: &[f64]| {
        evals.set(evals.get() + 1);
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        if x[i] != 0.0 {
            x[i] *= 1.0 + opts.initial_step;
        } else {
            x[i] = opts.zero_step;
        }
        let v = eval(&x);
        simplex.push((x, v));
    }

    let combine = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(ai, bi)| ai + t * (bi - ai)).collect()
    };

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if evals.get() >= opts.max_evals || (diameter <= opts.xatol && (worst - best).abs() <= opts.fatol) {
            break;
        }
        if diameter <= opts.xatol * 1e-3 {
            break;
        }

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            centroid.iter_mut().zip(x).for_each(|(c, xi)| *c += xi / nf);
        }
        let xr = combine(&centroid, &simplex[n].0, -alpha);
        let fr = eval(&xr);

        if fr < simplex[0].1 {
            let xe = combine(&centroid, &simplex[n].0, -alpha * beta);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        if fr < simplex[n].1 {
            let xc = combine(&centroid, &xr, gamma);
            let fc = eval(&xc);
            if fc <= fr {
                simplex[n] = (xc, fc);
                continue;
            }
        } else {
            let xc = combine(&centroid, &simplex[n].0, gamma);
            let fc = eval(&xc);
            if fc < simplex[n].1 {
                simplex[n] = (xc, fc);
                continue;
            }
        }
        // Shrink towards the best vertex.
        let x_best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x = combine(&x_best, &vertex.0, delta);
            let v = eval(&x);
            *vertex = (x, v);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    Minimum { x, value, evals: evals.get() }
}
