use super::{check_termination, evaluate_all, Bounds, Evaluation, OptimError, Progress, RunReport, TerminationCriteria, TerminationReason};

/// A cell of the unit-cube partition. Side `i` has length `3^-levels[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperRect {
    pub center: Vec<f64>,
    pub levels: Vec<u32>,
    pub f_center: f64,
}

impl HyperRect {
    pub fn side_lengths(&self) -> Vec<f64> {
        self.levels.iter().map(|&k| side(k)).collect()
    }

    pub fn volume(&self) -> f64 {
        self.levels.iter().map(|&k| side(k)).product()
    }

    /// Half the diagonal. Depends only on the multiset of levels so equal
    /// shapes compare equal exactly.
    pub fn size(&self) -> f64 {
        let mut l = self.levels.clone();
        l.sort_unstable();
        0.5 * l.iter().map(|&k| side(k) * side(k)).sum::<f64>().sqrt()
    }
}

fn side(level: u32) -> f64 {
    3f64.powi(-(level as i32))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectOptions {
    pub max_evals: usize,
    pub max_iters: usize,
    /// Stall tolerance; see [`TerminationCriteria`].
    pub tol: f64,
    pub stall_window: usize,
    /// Required improvement for potential optimality, relative to
    /// `|f_min - f_median|`.
    pub epsilon: f64,
}

impl Default for DirectOptions {
    fn default() -> Self {
        let t = TerminationCriteria::default();
        Self {
            max_evals: 1000,
            max_iters: t.max_iters,
            tol: t.stall_tol,
            stall_window: t.stall_window,
            epsilon: 1e-4,
        }
    }
}

pub fn direct_minimize<F>(f: F, bounds: &Bounds, max_evals: usize, max_iters: usize, tol: f64) -> Result<RunReport, OptimError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let opts = DirectOptions {
        max_evals,
        max_iters,
        tol,
        ..DirectOptions::default()
    };
    direct_minimize_with(f, bounds, &opts, |_| {})
}

/// DIRECT with an observer called on the partition after every iteration.
pub fn direct_minimize_with<F, O>(f: F, bounds: &Bounds, opts: &DirectOptions, mut observe: O) -> Result<RunReport, OptimError>
where
    F: Fn(&[f64]) -> f64 + Sync,
    O: FnMut(&[HyperRect]),
{
    if opts.max_evals == 0 {
        return Err(OptimError::InvalidParameter("max_evals must be at least 1".into()));
    }
    if !(opts.epsilon >= 0.0) {
        return Err(OptimError::InvalidParameter(format!("epsilon must be >= 0, got {}", opts.epsilon)));
    }
    let criteria = TerminationCriteria {
        max_iters: opts.max_iters,
        max_evals: opts.max_evals,
        stall_window: opts.stall_window,
        stall_tol: opts.tol,
    };
    let n = bounds.dim();
    let center = vec![0.5; n];
    let first = evaluate_all(&f, vec![bounds.from_unit(&center)]);
    let mut log: Vec<Evaluation> = first;
    let mut rects = vec![HyperRect {
        center,
        levels: vec![0; n],
        f_center: log[0].f,
    }];
    let mut best = 0usize;
    let mut history = vec![log[0].f];
    let mut iterations = 0;
    observe(&rects);

    let termination = loop {
        let progress = Progress {
            iteration: iterations,
            evaluations: log.len(),
            best_history: &history,
        };
        if let Some(r) = check_termination(&progress, &criteria) {
            break r;
        }
        let selected = potentially_optimal(&rects, opts.epsilon);
        let remaining = opts.max_evals - log.len();
        let mut plans = Vec::new();
        let mut points = Vec::new();
        let mut used = 0;
        for r in selected {
            let dims = longest_dims(&rects[r]);
            if used + 2 * dims.len() > remaining {
                break;
            }
            used += 2 * dims.len();
            let delta = side(rects[r].levels[dims[0]] + 1);
            for &i in &dims {
                for s in [-1.0, 1.0] {
                    let mut c = rects[r].center.clone();
                    c[i] += s * delta;
                    points.push(c);
                }
            }
            plans.push((r, dims));
        }
        if plans.is_empty() {
            break TerminationReason::MaxEvals;
        }
        let mapped = points.iter().map(|c| bounds.from_unit(c)).collect();
        let evals = evaluate_all(&f, mapped);
        let mut k = 0;
        for (r, dims) in plans {
            let m = dims.len();
            let values: Vec<f64> = evals[k..k + 2 * m].iter().map(|e| e.f).collect();
            let centers = &points[k..k + 2 * m];
            trisect(&mut rects, r, &dims, centers, &values);
            k += 2 * m;
        }
        for e in evals {
            if e.f < log[best].f {
                best = log.len();
            }
            log.push(e);
        }
        iterations += 1;
        history.push(log[best].f);
        observe(&rects);
    };

    Ok(RunReport {
        algorithm: "direct".into(),
        best_x: log[best].x.clone(),
        best_f: log[best].f,
        evaluations: log.len(),
        iterations,
        termination,
        log,
        best_history: history,
    })
}

fn longest_dims(r: &HyperRect) -> Vec<usize> {
    let min = *r.levels.iter().min().expect("non-empty");
    (0..r.levels.len()).filter(|&i| r.levels[i] == min).collect()
}

/// Splits rectangle `r` along `dims`, best child value first, so the best
/// children keep the largest cells. `centers`/`values` hold the minus and
/// plus child for each entry of `dims` in order.
fn trisect(rects: &mut Vec<HyperRect>, r: usize, dims: &[usize], centers: &[Vec<f64>], values: &[f64]) {
    let mut order: Vec<usize> = (0..dims.len()).collect();
    let w = |j: usize| values[2 * j].min(values[2 * j + 1]);
    order.sort_by(|&a, &b| w(a).total_cmp(&w(b)).then(a.cmp(&b)));
    for j in order {
        rects[r].levels[dims[j]] += 1;
        let levels = rects[r].levels.clone();
        for c in 0..2 {
            rects.push(HyperRect {
                center: centers[2 * j + c].clone(),
                levels: levels.clone(),
                f_center: values[2 * j + c],
            });
        }
    }
}

/// Indices of potentially optimal rectangles, largest first.
fn potentially_optimal(rects: &[HyperRect], epsilon: f64) -> Vec<usize> {
    // Infinite centers compete as the worst finite value.
    let finite: Vec<f64> = rects.iter().map(|r| r.f_center).filter(|v| v.is_finite()).collect();
    let worst = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let value = |r: &HyperRect| if r.f_center.is_finite() { r.f_center } else { worst };
    if finite.is_empty() {
        let mut idx: Vec<usize> = (0..rects.len()).collect();
        idx.sort_by(|&a, &b| rects[b].size().total_cmp(&rects[a].size()).then(a.cmp(&b)));
        return idx.into_iter().take(1).collect();
    }

    // Best rectangle of each size.
    let mut groups: Vec<(f64, f64, usize)> = Vec::new();
    for (i, r) in rects.iter().enumerate() {
        let (d, v) = (r.size(), value(r));
        match groups.iter_mut().find(|g| g.0 == d) {
            Some(g) => {
                if v < g.1 {
                    *g = (d, v, i);
                }
            }
            None => groups.push((d, v, i)),
        }
    }
    groups.sort_by(|a, b| a.0.total_cmp(&b.0));

    let f_min = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let mut sorted = finite.clone();
    sorted.sort_by(f64::total_cmp);
    let f_median = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
    };
    let threshold = f_min - epsilon * (f_min - f_median).abs();

    let mut out = Vec::new();
    for (j, &(dj, fj, idx)) in groups.iter().enumerate() {
        let k_low = groups[..j]
            .iter()
            .map(|&(di, fi, _)| (fj - fi) / (dj - di))
            .fold(f64::NEG_INFINITY, f64::max);
        let k_high = groups[j + 1..]
            .iter()
            .map(|&(di, fi, _)| (fi - fj) / (di - dj))
            .fold(f64::INFINITY, f64::min);
        let ok = if j + 1 == groups.len() {
            true
        } else {
            k_high > 0.0 && k_low <= k_high && fj - k_high * dj <= threshold
        };
        if ok {
            out.push(idx);
        }
    }
    out.reverse();
    out
}
