//! Least squares over the probability simplex.
//!
//! Minimizes `||y - A w||^2` subject to `w >= 0`, `sum w = 1` by projected
//! gradient with Armijo backtracking from several random starts, then tries
//! an exact solve on the support of the best iterate.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};

/// Regression problem: `targets ≈ sum_k w_k * columns[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub targets: Vec<f64>,
    pub columns: Vec<Vec<f64>>,
}

impl Design {
    pub fn new(targets: Vec<f64>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::InvalidInput("design has no columns".into()));
        }
        if let Some(c) = columns.iter().find(|c| c.len() != targets.len()) {
            return Err(Error::InvalidInput(format!(
                "column of length {} does not match {} targets",
                c.len(),
                targets.len()
            )));
        }
        Ok(Design { targets, columns })
    }

    pub fn rows(&self) -> usize {
        self.targets.len()
    }

    pub fn predict(&self, w: &[f64]) -> Vec<f64> {
        (0..self.rows())
            .map(|i| self.columns.iter().zip(w).map(|(c, wk)| wk * c[i]).sum())
            .collect()
    }

    /// Sum of squared residuals.
    pub fn sse(&self, w: &[f64]) -> f64 {
        self.predict(w)
            .iter()
            .zip(&self.targets)
            .map(|(p, t)| (p - t) * (p - t))
            .sum()
    }

    pub fn mse(&self, w: &[f64]) -> f64 {
        if self.rows() == 0 {
            0.0
        } else {
            self.sse(w) / self.rows() as f64
        }
    }
}

/// Solver settings.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    /// Stop once one iteration lowers the objective by less than this.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub restarts: usize,
    /// Use scaled edge flows as inputs (otherwise plain interventional PMFs).
    pub use_scaling: bool,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            tolerance: 1e-10,
            max_iterations: 10_000,
            restarts: 5,
            use_scaling: true,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::InvalidInput(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidInput("at least one restart is required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClspSolution {
    pub weights: Vec<f64>,
    pub mse: f64,
    /// Objective (sum of squared residuals) per iteration of the winning start.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `max_k |w_k - proj(w - grad)_k|`; zero exactly at a stationary point.
    pub kkt_residual: f64,
}

/// Euclidean projection onto `{w >= 0, sum w = 1}` (sort-based, exact).
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    let mut w: Vec<f64> = v.iter().map(|&x| (x - theta).max(0.0)).collect();
    // Remove rounding drift so the sum is 1 to the last bit we can control.
    let s: f64 = w.iter().sum();
    if s > 0.0 && s != 1.0 {
        w.iter_mut().for_each(|x| *x /= s);
    }
    w
}

/// Quadratic form `f(w) = w'Gw - 2b'w + c` equal to the sum of squares.
struct Quadratic {
    g: DMatrix<f64>,
    b: DVector<f64>,
    c: f64,
}

impl Quadratic {
    fn new(design: &Design) -> Self {
        let k = design.columns.len();
        let g = DMatrix::from_fn(k, k, |i, j| dot(&design.columns[i], &design.columns[j]));
        let b = DVector::from_fn(k, |i, _| dot(&design.columns[i], &design.targets));
        let c = dot(&design.targets, &design.targets);
        Quadratic { g, b, c }
    }

    fn value(&self, w: &DVector<f64>) -> f64 {
        (w.dot(&(&self.g * w)) - 2.0 * self.b.dot(w) + self.c).max(0.0)
    }

    fn gradient(&self, w: &DVector<f64>) -> DVector<f64> {
        2.0 * (&self.g * w - &self.b)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn project(v: &DVector<f64>) -> DVector<f64> {
    DVector::from_vec(project_simplex(v.as_slice()))
}

fn kkt_residual(q: &Quadratic, w: &DVector<f64>) -> f64 {
    let step = project(&(w - q.gradient(w)));
    (w - step).amax()
}

struct Run {
    w: DVector<f64>,
    trace: Vec<f64>,
    iterations: usize,
    converged: bool,
}

fn projected_gradient(q: &Quadratic, start: DVector<f64>, config: &FitConfig) -> Run {
    let mut w = start;
    let mut f = q.value(&w);
    let mut trace = vec![f];
    let lipschitz = 2.0 * q.g.trace().max(f64::MIN_POSITIVE);
    let mut t = 1.0 / lipschitz;
    for it in 1..=config.max_iterations {
        let g = q.gradient(&w);
        let mut accepted = None;
        t *= 2.0;
        for _ in 0..60 {
            let cand = project(&(&w - t * &g));
            let d = &cand - &w;
            let fc = q.value(&cand);
            if fc <= f + g.dot(&d) + d.norm_squared() / (2.0 * t) {
                accepted = Some((cand, fc, d.amax()));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, fc, moved)) = accepted else {
            return Run {
                w,
                trace,
                iterations: it,
                converged: true,
            };
        };
        // Rounding in the quadratic form can make a null step look like a rise.
        let fc = fc.min(f);
        let decrease = f - fc;
        w = cand;
        f = fc;
        trace.push(f);
        if decrease <= config.tolerance || moved <= 1e-15 {
            return Run {
                w,
                trace,
                iterations: it,
                converged: true,
            };
        }
    }
    Run {
        w,
        trace,
        iterations: config.max_iterations,
        converged: false,
    }
}

/// Exact minimizer of `f` on the affine hull of the support of `w`, if it
/// stays inside the simplex.
fn polish(q: &Quadratic, w: &DVector<f64>) -> Option<DVector<f64>> {
    let support: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 0.0).collect();
    let s = support.len();
    if s == 0 {
        return None;
    }
    // [2 G_S  1] [w_S]   [2 b_S]
    // [1'     0] [mu ] = [1    ]
    let mut kkt = DMatrix::zeros(s + 1, s + 1);
    let mut rhs = DVector::zeros(s + 1);
    for (a, &i) in support.iter().enumerate() {
        for (b, &j) in support.iter().enumerate() {
            kkt[(a, b)] = 2.0 * q.g[(i, j)];
        }
        kkt[(a, s)] = 1.0;
        kkt[(s, a)] = 1.0;
        rhs[a] = 2.0 * q.b[i];
    }
    rhs[s] = 1.0;
    let sol = kkt.svd(true, true).solve(&rhs, 1e-14).ok()?;
    if (0..s).any(|a| !sol[a].is_finite() || sol[a] < 0.0) {
        return None;
    }
    let mut out = DVector::zeros(w.len());
    for (a, &i) in support.iter().enumerate() {
        out[i] = sol[a];
    }
    let total = out.sum();
    if total <= 0.0 {
        return None;
    }
    Some(out / total)
}

/// Solves the simplex-constrained least-squares problem.
pub fn solve_clsp(design: &Design, config: &FitConfig) -> Result<ClspSolution> {
    config.validate()?;
    let k = design.columns.len();
    if k == 0 {
        return Err(Error::InvalidInput("design has no columns".into()));
    }
    if k == 1 {
        let w = vec![1.0];
        let sse = design.sse(&w);
        return Ok(ClspSolution {
            mse: design.mse(&w),
            weights: w,
            trace: vec![sse],
            iterations: 0,
            converged: true,
            kkt_residual: 0.0,
        });
    }
    let q = Quadratic::new(design);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best: Option<Run> = None;
    for _ in 0..config.restarts {
        let raw: Vec<f64> = (0..k).map(|_| Exp1.sample(&mut rng)).collect();
        let start = DVector::from_vec(project_simplex(&raw));
        let run = projected_gradient(&q, start, config);
        let better = best
            .as_ref()
            .is_none_or(|b| design.sse(run.w.as_slice()) < design.sse(b.w.as_slice()));
        if better {
            best = Some(run);
        }
    }
    let mut run = best.expect("at least one restart");
    if let Some(p) = polish(&q, &run.w) {
        let before = design.sse(run.w.as_slice());
        let after = design.sse(p.as_slice());
        if after < before {
            run.w = DVector::from_vec(project_simplex(p.as_slice()));
            run.trace.push(after.min(*run.trace.last().expect("non-empty")));
        }
    }
    let weights: Vec<f64> = run.w.iter().copied().collect();
    Ok(ClspSolution {
        mse: design.mse(&weights),
        kkt_residual: kkt_residual(&q, &run.w),
        weights,
        trace: run.trace,
        iterations: run.iterations,
        converged: run.converged,
    })
}
