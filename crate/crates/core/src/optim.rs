//! Derivative-free Nelder–Mead minimisation.

use alloc::vec::Vec;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Settings {
    /// Absolute spread of function values across the simplex.
    pub f_tol: f64,
    /// Largest coordinate distance from the best vertex.
    pub x_tol: f64,
    pub max_evals: usize,
    pub step: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            f_tol: 1e-10,
            x_tol: 1e-8,
            max_evals: 10_000,
            step: 0.25,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

pub(crate) fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    settings: Settings,
) -> Outcome {
    let d = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() { f64::INFINITY } else { v }
    };
    if d == 0 {
        let v = eval(x0, &mut evals);
        return Outcome { x: Vec::new(), f: v, evals, converged: true };
    }

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    simplex.push(x0.to_vec());
    for i in 0..d {
        let mut v = x0.to_vec();
        v[i] += settings.step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v, &mut evals)).collect();

    loop {
        // order vertices best to worst; ties keep insertion order
        let mut idx: Vec<usize> = (0..=d).collect();
        idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
        values = idx.iter().map(|&i| values[i]).collect();

        let spread = values[d] - values[0];
        let diameter = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| libm::fabs(a - b)))
            .fold(0.0, f64::max);
        if spread.abs() < settings.f_tol && diameter < settings.x_tol {
            return Outcome { x: simplex[0].clone(), f: values[0], evals, converged: true };
        }
        if evals >= settings.max_evals {
            return Outcome { x: simplex[0].clone(), f: values[0], evals, converged: false };
        }

        let centroid: Vec<f64> = (0..d)
            .map(|j| simplex[..d].iter().map(|v| v[j]).sum::<f64>() / d as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[d])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(1.0);
        let fr = eval(&xr, &mut evals);
        if fr < values[0] {
            let xe = along(2.0);
            let fe = eval(&xe, &mut evals);
            if fe < fr {
                simplex[d] = xe;
                values[d] = fe;
            } else {
                simplex[d] = xr;
                values[d] = fr;
            }
            continue;
        }
        if fr < values[d - 1] {
            simplex[d] = xr;
            values[d] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[d] {
            let xc = along(0.5);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = along(-0.5);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < values[d].min(fr) {
            simplex[d] = xc;
            values[d] = fc;
            continue;
        }
        // shrink toward the best vertex
        for i in 1..=d {
            let v: Vec<f64> = simplex[i]
                .iter()
                .zip(&simplex[0])
                .map(|(x, b)| b + 0.5 * (x - b))
                .collect();
            values[i] = eval(&v, &mut evals);
            simplex[i] = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let out = nelder_mead(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.2, 1.0],
            Settings::default(),
        );
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-5 && (out.x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn kink_at_zero() {
        let out = nelder_mead(|x| 3.0 * x[0].abs() + 1.0, &[1.0], Settings::default());
        assert!(out.converged);
        assert!(out.x[0].abs() < 1e-8);
    }

    #[test]
    fn budget_exhausted() {
        let s = Settings { max_evals: 10, ..Settings::default() };
        let out = nelder_mead(|x| x[0] * x[0] + x[1] * x[1], &[5.0, 5.0], s);
        assert!(!out.converged);
        assert!(out.evals >= 10);
    }
}
