//! Derivative-free simplex descent with dimension-adaptive coefficients.

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimises `objective` from `start`, with initial edge lengths `step`.
///
/// Stops when the spread of simplex values drops below `tol` or after
/// `max_iter` iterations.
pub fn minimize<F: FnMut(&[f64]) -> f64>(mut objective: F, start: &[f64], step: f64, tol: f64, max_iter: usize) -> SimplexResult {
    let n = start.len();
    let nf = n as f64;
    let (reflect, expand) = (1.0, 1.0 + 2.0 / nf);
    let contract = 0.75 - 0.5 / nf;
    let shrink = 1.0 - 1.0 / nf.max(2.0);

    let mut points: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    points.push(start.to_vec());
    for i in 0..n {
        let mut p = start.to_vec();
        p[i] += if p[i] + step <= 1.0 { step } else { -step };
        points.push(p);
    }
    let mut values: Vec<f64> = points.iter().map(|p| objective(p)).collect();
    let mut order: Vec<usize> = (0..=n).collect();
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let (best, worst, second) = (order[0], order[n], order[n.saturating_sub(1)]);
        if (values[worst] - values[best]).abs() <= tol {
            converged = true;
            break;
        }
        iterations += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &i in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&points[i]) {
                *c += x / nf;
            }
        }
        let along = |t: f64, out: &mut Vec<f64>, w: &[f64]| {
            for k in 0..n {
                out[k] = centroid[k] + t * (w[k] - centroid[k]);
            }
        };

        along(-reflect, &mut trial, &points[worst]);
        let fr = objective(&trial);
        if fr < values[best] {
            let reflected = trial.clone();
            along(-expand, &mut trial, &points[worst]);
            let fe = objective(&trial);
            if fe < fr {
                points[worst].copy_from_slice(&trial);
                values[worst] = fe;
            } else {
                points[worst] = reflected;
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[second] {
            points[worst].copy_from_slice(&trial);
            values[worst] = fr;
            continue;
        }
        let outside = fr < values[worst];
        along(if outside { -contract * reflect } else { contract }, &mut trial, &points[worst]);
        let fc = objective(&trial);
        if fc < fr.min(values[worst]) {
            points[worst].copy_from_slice(&trial);
            values[worst] = fc;
            continue;
        }
        let anchor = points[best].clone();
        for &i in &order[1..] {
            for k in 0..n {
                points[i][k] = anchor[k] + shrink * (points[i][k] - anchor[k]);
            }
            values[i] = objective(&points[i]);
        }
    }
    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    SimplexResult { x: points[best].clone(), value: values[best], iterations, converged }
}
