//! Nelder-Mead downhill simplex with restart on collapse.

/// Coefficients and stopping rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexSettings {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Edge length of the initial (and every rebuilt) simplex.
    pub initial_scale: f64,
    /// A simplex whose largest vertex distance from the best vertex falls
    /// below this is rebuilt around the best vertex.
    pub collapse_diameter: f64,
    pub max_evaluations: usize,
}

impl Default for SimplexSettings {
    fn default() -> Self {
        Self {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            initial_scale: 0.1,
            collapse_diameter: 1e-8,
            max_evaluations: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexOutcome {
    pub best: Vec<f64>,
    pub best_value: f64,
    pub evaluations: usize,
    pub rebuilds: usize,
    /// `(evaluation index, value)` at every strict improvement of the best
    /// value; the first entry is the starting point.
    pub improvements: Vec<(usize, f64)>,
}

struct Budgeted<F> {
    f: F,
    used: usize,
    limit: usize,
    best: Vec<f64>,
    best_value: f64,
    improvements: Vec<(usize, f64)>,
}

impl<F: FnMut(&[f64]) -> f64> Budgeted<F> {
    fn eval(&mut self, x: &[f64]) -> Option<f64> {
        if self.used >= self.limit {
            return None;
        }
        self.used += 1;
        let v = (self.f)(x);
        let v = if v.is_finite() { v } else { f64::INFINITY };
        if v < self.best_value || self.improvements.is_empty() {
            self.best_value = v;
            self.best.clear();
            self.best.extend_from_slice(x);
            self.improvements.push((self.used, v));
        }
        Some(v)
    }
}

fn initial_simplex(center: &[f64], scale: f64) -> Vec<Vec<f64>> {
    let n = center.len();
    let mut verts = vec![center.to_vec()];
    for i in 0..n {
        let mut v = center.to_vec();
        v[i] += scale;
        verts.push(v);
    }
    verts
}

/// Minimizes `f` from `x0`, spending at most `settings.max_evaluations`
/// function calls. Non-finite values are treated as `+inf`.
pub fn minimize<F>(f: F, x0: &[f64], settings: &SimplexSettings) -> SimplexOutcome
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut b = Budgeted {
        f,
        used: 0,
        limit: settings.max_evaluations,
        best: x0.to_vec(),
        best_value: f64::INFINITY,
        improvements: Vec::new(),
    };
    let mut rebuilds = 0;

    let finish = |b: Budgeted<F>, rebuilds| SimplexOutcome {
        best: b.best,
        best_value: b.best_value,
        evaluations: b.used,
        rebuilds,
        improvements: b.improvements,
    };

    if n == 0 {
        b.eval(x0);
        return finish(b, rebuilds);
    }

    let mut verts = initial_simplex(x0, settings.initial_scale);
    let mut vals = Vec::with_capacity(n + 1);
    for v in &verts {
        match b.eval(v) {
            Some(fv) => vals.push(fv),
            None => return finish(b, rebuilds),
        }
    }

    loop {
        // Order vertices by value; ties keep their index order.
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
        verts = idx.iter().map(|&i| verts[i].clone()).collect();
        vals = idx.iter().map(|&i| vals[i]).collect();

        let diameter = verts[1..]
            .iter()
            .map(|v| dist(v, &verts[0]))
            .fold(0.0, f64::max);
        if diameter < settings.collapse_diameter {
            rebuilds += 1;
            let center = verts[0].clone();
            let f0 = vals[0];
            verts = initial_simplex(&center, settings.initial_scale);
            vals = vec![f0];
            for v in &verts[1..] {
                match b.eval(v) {
                    Some(fv) => vals.push(fv),
                    None => return finish(b, rebuilds),
                }
            }
            continue;
        }

        let mut centroid = vec![0.0; n];
        for v in &verts[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let worst = verts[n].clone();
        let along = |t: f64, to: &[f64]| -> Vec<f64> {
            centroid.iter().zip(to).map(|(c, x)| c + t * (x - c)).collect()
        };

        let xr = along(-settings.reflection, &worst);
        let Some(fr) = b.eval(&xr) else { return finish(b, rebuilds) };

        if fr < vals[0] {
            let xe = along(settings.expansion, &xr);
            let Some(fe) = b.eval(&xe) else { return finish(b, rebuilds) };
            if fe < fr {
                verts[n] = xe;
                vals[n] = fe;
            } else {
                verts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            verts[n] = xr;
            vals[n] = fr;
            continue;
        }
        let accepted = if fr < vals[n] {
            let xc = along(settings.contraction, &xr);
            let Some(fc) = b.eval(&xc) else { return finish(b, rebuilds) };
            if fc <= fr {
                verts[n] = xc;
                vals[n] = fc;
                true
            } else {
                false
            }
        } else {
            let xc = along(settings.contraction, &worst);
            let Some(fc) = b.eval(&xc) else { return finish(b, rebuilds) };
            if fc < vals[n] {
                verts[n] = xc;
                vals[n] = fc;
                true
            } else {
                false
            }
        };
        if !accepted {
            let best = verts[0].clone();
            for i in 1..=n {
                let shrunk: Vec<f64> = best
                    .iter()
                    .zip(&verts[i])
                    .map(|(b0, x)| b0 + settings.shrink * (x - b0))
                    .collect();
                let Some(fs) = b.eval(&shrunk) else { return finish(b, rebuilds) };
                verts[i] = shrunk;
                vals[i] = fs;
            }
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
