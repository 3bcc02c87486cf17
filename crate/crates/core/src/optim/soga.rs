use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{check_termination, evaluate_all, Bounds, Evaluation, OptimError, Progress, RunReport, TerminationCriteria, TerminationReason};

/// GA individual; lower fitness is better.
#[derive(Debug, Clone, PartialEq)]
pub struct Genome {
    pub genes: Vec<f64>,
    pub fitness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SogaOptions {
    pub pop_size: usize,
    pub max_iters: usize,
    pub max_evals: usize,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    pub crossover_rate: f64,
    pub tournament_size: usize,
    /// Blend crossover extension on each side of the parent interval.
    pub blend_alpha: f64,
    /// Gaussian mutation std as a fraction of the bound range.
    pub perturb_scale: f64,
    /// Probability that a mutation perturbs rather than re-initializes.
    pub perturb_fraction: f64,
    pub tol: f64,
    pub stall_window: usize,
    pub seed: u64,
}

impl Default for SogaOptions {
    fn default() -> Self {
        let t = TerminationCriteria::default();
        Self {
            pop_size: 50,
            max_iters: t.max_iters,
            max_evals: t.max_evals,
            mutation_rate: 0.1,
            crossover_rate: 0.9,
            tournament_size: 2,
            blend_alpha: 0.5,
            perturb_scale: 0.1,
            perturb_fraction: 0.5,
            tol: t.stall_tol,
            stall_window: t.stall_window,
            seed: 0,
        }
    }
}

impl SogaOptions {
    fn validate(&self) -> Result<(), OptimError> {
        let bad = |m: String| Err(OptimError::InvalidParameter(m));
        if self.pop_size < 2 {
            return bad(format!("pop_size must be at least 2, got {}", self.pop_size));
        }
        if self.tournament_size == 0 {
            return bad("tournament_size must be positive".into());
        }
        for (name, p) in [
            ("mutation_rate", self.mutation_rate),
            ("crossover_rate", self.crossover_rate),
            ("perturb_fraction", self.perturb_fraction),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if !(self.blend_alpha >= 0.0) || !(self.perturb_scale > 0.0) {
            return bad("blend_alpha must be >= 0 and perturb_scale > 0".into());
        }
        Ok(())
    }
}

pub fn soga_minimize<F>(
    f: F,
    bounds: &Bounds,
    pop_size: usize,
    max_iters: usize,
    mutation_rate: f64,
    crossover_rate: f64,
    seed: u64,
) -> Result<RunReport, OptimError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let opts = SogaOptions {
        pop_size,
        max_iters,
        mutation_rate,
        crossover_rate,
        seed,
        ..SogaOptions::default()
    };
    soga_minimize_with(f, bounds, &opts, |_| {})
}

/// Genetic algorithm with an observer called on each generation, starting
/// with the initial population.
pub fn soga_minimize_with<F, O>(f: F, bounds: &Bounds, opts: &SogaOptions, mut observe: O) -> Result<RunReport, OptimError>
where
    F: Fn(&[f64]) -> f64 + Sync,
    O: FnMut(&[Genome]),
{
    opts.validate()?;
    let criteria = TerminationCriteria {
        max_iters: opts.max_iters,
        max_evals: opts.max_evals,
        stall_window: opts.stall_window,
        stall_tol: opts.tol,
    };
    let n = bounds.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let init_count = opts.pop_size.min(opts.max_evals);
    let init: Vec<Vec<f64>> = (0..init_count)
        .map(|_| (0..n).map(|i| uniform_gene(&mut rng, bounds, i)).collect())
        .collect();
    let mut log: Vec<Evaluation> = evaluate_all(&f, init);
    let mut pop: Vec<Genome> = log
        .iter()
        .map(|e| Genome {
            genes: e.x.clone(),
            fitness: e.f,
        })
        .collect();
    let mut best = first_min(&log);
    let mut history = vec![log[best].f];
    let mut iterations = 0;
    observe(&pop);

    let termination = if init_count < opts.pop_size {
        TerminationReason::MaxEvals
    } else {
        loop {
            let progress = Progress {
                iteration: iterations,
                evaluations: log.len(),
                best_history: &history,
            };
            if let Some(r) = check_termination(&progress, &criteria) {
                break r;
            }
            let offspring = opts.pop_size - 1;
            if opts.max_evals - log.len() < offspring {
                break TerminationReason::MaxEvals;
            }
            let mut children = Vec::with_capacity(offspring + 1);
            while children.len() < offspring {
                let a = tournament(&pop, opts.tournament_size, &mut rng);
                let b = tournament(&pop, opts.tournament_size, &mut rng);
                let (mut c1, mut c2) = if rng.random::<f64>() < opts.crossover_rate {
                    blend(&pop[a].genes, &pop[b].genes, opts.blend_alpha, bounds, &mut rng)
                } else {
                    (pop[a].genes.clone(), pop[b].genes.clone())
                };
                mutate(&mut c1, opts, bounds, &mut rng);
                mutate(&mut c2, opts, bounds, &mut rng);
                children.push(c1);
                children.push(c2);
            }
            children.truncate(offspring);
            let evals = evaluate_all(&f, children);
            let elite = pop[first_min_genome(&pop)].clone();
            pop.clear();
            pop.push(elite);
            for e in evals {
                pop.push(Genome {
                    genes: e.x.clone(),
                    fitness: e.f,
                });
                if e.f < log[best].f {
                    best = log.len();
                }
                log.push(e);
            }
            iterations += 1;
            history.push(log[best].f);
            observe(&pop);
        }
    };

    Ok(RunReport {
        algorithm: "soga".into(),
        best_x: log[best].x.clone(),
        best_f: log[best].f,
        evaluations: log.len(),
        iterations,
        termination,
        log,
        best_history: history,
    })
}

fn uniform_gene(rng: &mut ChaCha8Rng, bounds: &Bounds, i: usize) -> f64 {
    rng.random_range(bounds.lower()[i]..=bounds.upper()[i])
}

fn first_min(log: &[Evaluation]) -> usize {
    (1..log.len()).fold(0, |b, i| if log[i].f < log[b].f { i } else { b })
}

fn first_min_genome(pop: &[Genome]) -> usize {
    (1..pop.len()).fold(0, |b, i| if pop[i].fitness < pop[b].fitness { i } else { b })
}

fn tournament(pop: &[Genome], size: usize, rng: &mut ChaCha8Rng) -> usize {
    let mut winner = rng.random_range(0..pop.len());
    for _ in 1..size {
        let c = rng.random_range(0..pop.len());
        if pop[c].fitness < pop[winner].fitness {
            winner = c;
        }
    }
    winner
}

/// BLX-alpha: each child gene is uniform on the parent interval widened by
/// `alpha` times its length on both sides, clipped to the bounds.
fn blend(a: &[f64], b: &[f64], alpha: f64, bounds: &Bounds, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = Vec::with_capacity(a.len());
    let mut c2 = Vec::with_capacity(a.len());
    for i in 0..a.len() {
        let (lo, hi) = (a[i].min(b[i]), a[i].max(b[i]));
        let ext = alpha * (hi - lo);
        let (lo, hi) = (lo - ext, hi + ext);
        for c in [&mut c1, &mut c2] {
            let t: f64 = rng.random();
            c.push(bounds.clip(i, lo + t * (hi - lo)));
        }
    }
    (c1, c2)
}

fn mutate(genes: &mut [f64], opts: &SogaOptions, bounds: &Bounds, rng: &mut ChaCha8Rng) {
    for (i, g) in genes.iter_mut().enumerate() {
        if rng.random::<f64>() >= opts.mutation_rate {
            continue;
        }
        if rng.random::<f64>() < opts.perturb_fraction {
            let z: f64 = rng.sample(StandardNormal);
            *g = bounds.clip(i, *g + z * opts.perturb_scale * bounds.range(i));
        } else {
            *g = uniform_gene(rng, bounds, i);
        }
    }
}
