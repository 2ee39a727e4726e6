//! Randomized invariant suite over small instances solved exactly.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{euclidean_distance, Point, Tiling};
use crate::sampling::rng_for;
use crate::solvers::{
    approx_tsp_path, grid_tour, tsp_bruteforce, tsp_exact, tsp_value, two_opt, BRUTEFORCE_MAX_N, REL_TOL,
};
use crate::weights::{verify_equivalence, Exponent, WeightFunction, WeightKind};

const KINDS: [WeightKind; 3] = [
    WeightKind::Euclidean,
    WeightKind::CoordinateMetric,
    WeightKind::RadialMetric,
];
const ALPHAS: [f64; 4] = [0.5, 1.0, 1.5, 2.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteConfig {
    /// Largest instance size exercised.
    pub max_n: usize,
    /// Random instances per property.
    pub instances: usize,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            max_n: 10,
            instances: 100,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyResult {
    pub name: String,
    pub checked: usize,
    pub failures: usize,
    /// The first violation found.
    pub witness: Option<String>,
}

impl PropertyResult {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.checked > 0
    }

    /// One line: `PASS name (k checks)` or `FAIL ...` with the witness.
    pub fn line(&self) -> String {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        match &self.witness {
            Some(w) => format!(
                "{status} {} ({} checks, {} failures): {w}",
                self.name, self.checked, self.failures
            ),
            None => format!("{status} {} ({} checks)", self.name, self.checked),
        }
    }
}

struct Tally {
    name: &'static str,
    checked: usize,
    failures: usize,
    witness: Option<String>,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally {
            name,
            checked: 0,
            failures: 0,
            witness: None,
        }
    }

    fn check(&mut self, ok: bool, witness: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failures += 1;
            if self.witness.is_none() {
                self.witness = Some(witness());
            }
        }
    }

    fn finish(self) -> PropertyResult {
        PropertyResult {
            name: self.name.to_string(),
            checked: self.checked,
            failures: self.failures,
            witness: self.witness,
        }
    }
}

fn le(a: f64, b: f64) -> bool {
    a <= b + REL_TOL * a.abs().max(b.abs())
}

fn random_points(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<Point> {
    (0..n)
        .map(|_| Point::new(rng.random_range(lo..hi), rng.random_range(lo..hi)))
        .collect()
}

fn builtin(kind: WeightKind) -> WeightFunction {
    WeightFunction::builtin(kind).expect("builtin weight")
}

fn exp(alpha: f64) -> Exponent {
    Exponent::new(alpha).expect("valid exponent")
}

/// Runs every property; the suite passes when every result passes.
pub fn run_suite(cfg: &SuiteConfig) -> Result<Vec<PropertyResult>> {
    if cfg.max_n < 5 {
        return Err(Error::invalid("max_n must be >= 5"));
    }
    if cfg.max_n > BRUTEFORCE_MAX_N {
        return Err(Error::invalid(format!("max_n must be <= {BRUTEFORCE_MAX_N}")));
    }
    if cfg.instances == 0 {
        return Err(Error::invalid("instances must be >= 1"));
    }
    Ok(vec![
        weight_constants(cfg)?,
        oracle_equivalence(cfg)?,
        dominance(cfg)?,
        subadditivity(cfg)?,
        monotonicity(cfg)?,
        one_node_removal(cfg)?,
        scaling(cfg)?,
        translation(cfg)?,
        sandwich(cfg)?,
        approx_path_bound(cfg)?,
    ])
}

/// Stream offsets keep the properties' random instances independent.
fn rng(cfg: &SuiteConfig, property: u64) -> ChaCha8Rng {
    rng_for(cfg.seed, property)
}

fn weight_constants(cfg: &SuiteConfig) -> Result<PropertyResult> {
    let mut t = Tally::new("weight_constants");
    for (i, kind) in KINDS.into_iter().enumerate() {
        let report = verify_equivalence(&builtin(kind), 100 * cfg.instances, cfg.seed + i as u64)?;
        t.check(report.passed, || format!("{kind:?}: {:?}", report.violations.first()));
    }
    Ok(t.finish())
}

fn oracle_equivalence(cfg: &SuiteConfig) -> Result<PropertyResult> {
    let mut t = Tally::new("oracle_equivalence");
    let mut rng = rng(cfg, 1);
    let top = cfg.max_n.min(9);
    for i in 0..cfg.instances {
        let n = 5 + i % (top - 4);
        let kind = KINDS[i % 3];
        let alpha = exp(ALPHAS[(i / 3) % 4]);
        let pts = random_points(&mut rng, n, -0.5, 0.5);
        let wf = builtin(kind);
        let a = tsp_exact(&pts, &wf, alpha)?;
        let b = tsp_bruteforce(&pts, &wf, alpha)?;
        t.check((a.weight - b.weight).abs() <= REL_TOL * b.weight, || {
            format!("n={n} {kind:?} alpha={}: {} vs {}", alpha.get(), a.weight, b.weight)
        });
    }
    Ok(t.finish())
}

fn dominance(cfg: &SuiteConfig) -> Result<PropertyResult> {
    let mut t = Tally::new("dominance");
    let mut rng = rng(cfg, 2);
    for i in 0..cfg.instances {
        let n = 2 + i % (cfg.max_n - 1);
        let wf = builtin(KINDS[i % 3]);
        let alpha = exp(ALPHAS[(i / 3) % 4]);
        let pts = random_points(&mut rng, n, -0.5, 0.5);
        let tiling = Tiling::with_cells_per_side(1 + i % 3)?;
        let opt = tsp_exact(&pts, &wf, alpha)?.weight;
        let g = grid_tour(&pts, &wf, alpha, &tiling)?;
        let polished = two_opt(&pts, &g, &wf, alpha)?;
        t.check(le(opt, polished.weight) && le(polished.weight, g.weight), || {
            format!("n={n}: optimum {opt}, two_opt {}, grid {}", polished.weight, g.weight)
        });
    }
    Ok(t.finish())
}

fn subadditivity(cfg: &SuiteConfig) -> Result<PropertyResult> {
    let mut t = Tally::new("subadditivity");
    let mut rng = rng(cfg, 3);
    // Both parts need an edge to cut, so each holds at least two nodes.
    for i in 0..cfg.instances {
        let n = 4 + i % (cfg.max_n - 3);
        let j = rng.random_range(2..=n - 2);
        let wf = builtin(KINDS[i % 3]);
        let alpha = exp(ALPHAS[(i / 3) % 4]);
        let pts = random_points(&mut rng, n, -0.5, 0.5);
        let whole = tsp_value(&pts, &wf, alpha)?;
        let left = tsp_value(&pts[..j], &wf, alpha)?;
        let right = tsp_value(&pts[j..], &wf, alpha)?;
        let slack = alpha.pow(wf.c2() * std::f64::consts::SQRT_2);
        t.check(le(whole, left + right + slack), || {
            format!("n={n} j={j}: {whole} > {left} + {right} + {slack}")
        });
    }
    Ok(t.finish())
}

fn monotonicity(cfg: &SuiteConfig) -> Result<PropertyResult> {
    let mut t = Tally::new("metric_monotonicity");
    let mut rng = rng(cfg, 4);
    for i in 0..cfg.instances {
        let wf = builtin(KINDS[i % 3]);
        let alpha = exp([0.5, 0.75, 1.0][(i / 3) % 3]);
        let pts = random_points(&mut rng, cfg.max_n, -0.5, 0.5);
        let mut prev = 0.0;
        for j in 1..=cfg.max_n {
            let cur = tsp_value(&pts[..j], &wf, alpha)?;
            t.check(le(prev, cur), || {
                format!("{:?} alpha={} j={j}: {prev} > {cur}", wf.kind(), alpha.get())
            });
            prev = cur;
        }
    }
    Ok(t.finish())
}

fn one_node_removal(cfg: &SuiteConfig) -> Result<PropertyResult> {
    let mut t = Tally::new("one_node_removal");
    let mut rng = rng(cfg, 5);
    for i in 0..cfg.instances {
        let n = 3 + i % (cfg.max_n - 2);
        let wf = builtin(KINDS[i % 3]);
        let alpha = exp(ALPHAS[(i / 3) % 4]);
        let pts = random_points(&mut rng, n, -0.5, 0.5);
        let full = tsp_exact(&pts, &wf, alpha)?;
        let j = rng.random_range(0..n);
        let (u, v) = full.neighbors(j).expect("node is on the tour");
        let rest: Vec<Point> = pts
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != j)
            .map(|(_, &p)| p)
            .collect();
        let reduced = tsp_value(&rest, &wf, alpha)?;
        let bound = full.weight + alpha.pow(wf.c2() * euclidean_distance(pts[u], pts[v]));
        t.check(le(reduced, bound), || format!("n={n} j={j}: {reduced} > {bound}"));
    }
    Ok(t.finish())
}

fn scaling(cfg: &SuiteConfig) -> Result<PropertyResult> {
    let mut t = Tally::new("scaling");
    let mut rng = rng(cfg, 6);
    let kinds = [WeightKind::Euclidean, WeightKind::RadialMetric];
    for i in 0..cfg.instances {
        let n = 3 + i % (cfg.max_n - 2);
        let wf = builtin(kinds[i % 2]);
        let alpha = exp(ALPHAS[(i / 2) % 4]);
        let pts = random_points(&mut rng, n, -0.5, 0.5);
        let base = tsp_exact(&pts, &wf, alpha)?;
        for a in [0.5, 0.25] {
            let scaled: Vec<Point> = pts.iter().map(|p| p.scaled(a)).collect();
            let s = tsp_exact(&scaled, &wf, alpha)?;
            let expected = alpha.pow(a) * base.weight;
            t.check(
                (s.weight - expected).abs() <= REL_TOL * expected && s.order == base.order,
                || {
                    format!(
                        "n={n} a={a}: {} vs {expected}, orders {:?} / {:?}",
                        s.weight, s.order, base.order
                    )
                },
            );
        }
    }
    Ok(t.finish())
}

fn translation(cfg: &SuiteConfig) -> Result<PropertyResult> {
    let mut t = Tally::new("translation");
    let mut rng = rng(cfg, 7);
    let wf = builtin(WeightKind::RadialMetric);
    let h0 = wf.h0().expect("radial metric declares h0");
    for i in 0..cfg.instances {
        let n = 3 + i % (cfg.max_n - 2);
        let alpha = exp(ALPHAS[i % 4]);
        let pts = random_points(&mut rng, n, -0.25, 0.25);
        let (bx, by) = (rng.random_range(-0.25..0.25), rng.random_range(-0.25..0.25));
        let moved: Vec<Point> = pts.iter().map(|p| p.translated(bx, by)).collect();
        let base = tsp_value(&pts, &wf, alpha)?;
        let shifted = tsp_value(&moved, &wf, alpha)?;
        let bound = alpha.pow(h0) * base;
        t.check(le(shifted, bound), || {
            format!("n={n} b=({bx}, {by}): {shifted} > {bound}")
        });
    }
    Ok(t.finish())
}

fn sandwich(cfg: &SuiteConfig) -> Result<PropertyResult> {
    let mut t = Tally::new("euclidean_sandwich");
    let mut rng = rng(cfg, 8);
    let euclid = builtin(WeightKind::Euclidean);
    for i in 0..cfg.instances {
        let n = 2 + i % (cfg.max_n - 1);
        let wf = builtin(KINDS[i % 3]);
        let alpha = exp(ALPHAS[(i / 3) % 4]);
        let pts = random_points(&mut rng, n, -0.5, 0.5);
        let d = tsp_value(&pts, &euclid, alpha)?;
        let h = tsp_value(&pts, &wf, alpha)?;
        let (lo, hi) = (alpha.pow(wf.c1()) * d, alpha.pow(wf.c2()) * d);
        t.check(le(lo, h) && le(h, hi), || {
            format!("n={n} {:?}: {h} outside [{lo}, {hi}]", wf.kind())
        });
    }
    Ok(t.finish())
}

fn approx_path_bound(cfg: &SuiteConfig) -> Result<PropertyResult> {
    let mut t = Tally::new("approx_path_bound");
    let mut rng = rng(cfg, 9);
    let top = cfg.max_n.min(9);
    let mut i = 0;
    while t.checked < cfg.instances {
        let n = 3 + i % (top - 2);
        let wf = builtin(KINDS[i % 3]);
        let alpha = exp(ALPHAS[(i / 3) % 4]);
        let tiling = Tiling::with_cells_per_side(1 + i % 2)?;
        i += 1;
        let mut pts = random_points(&mut rng, n, -0.5, 0.5);
        // Put a few nodes near node 0 so the inside path is often non-trivial.
        let close = rng.random_range(0..n.min(4));
        let centre = pts[0];
        for p in pts.iter_mut().skip(1).take(close) {
            let dx = rng.random_range(-0.05..0.05);
            let dy = rng.random_range(-0.05..0.05);
            *p = Point::new((centre.x + dx).clamp(-0.5, 0.5), (centre.y + dy).clamp(-0.5, 0.5));
        }
        pts[1..].shuffle(&mut rng);
        let (_, rec) = match approx_tsp_path(&pts, &wf, alpha, &tiling) {
            Ok(v) => v,
            Err(Error::Degenerate(_)) => continue,
            Err(e) => return Err(e),
        };
        let opt = tsp_exact(&pts, &wf, alpha)?.weight;
        let slack = (2 * rec.n_in + 2) as f64 * alpha.pow(wf.c2() * std::f64::consts::SQRT_2);
        let gap = (rec.closed_weight() - opt).abs();
        t.check(gap <= slack, || {
            format!("n={n} N_in={}: |{} - {opt}| > {slack}", rec.n_in, rec.closed_weight())
        });
    }
    Ok(t.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let results = run_suite(&SuiteConfig {
            max_n: 7,
            instances: 12,
            seed: 3,
        })
        .unwrap();
        assert_eq!(results.len(), 10);
        for r in &results {
            assert!(r.passed(), "{}", r.line());
        }
    }

    #[test]
    fn rejects_bad_config() {
        assert!(run_suite(&SuiteConfig {
            max_n: 4,
            ..Default::default()
        })
        .is_err());
        assert!(run_suite(&SuiteConfig {
            max_n: 11,
            ..Default::default()
        })
        .is_err());
        assert!(run_suite(&SuiteConfig {
            instances: 0,
            ..Default::default()
        })
        .is_err());
    }

    #[test]
    fn line_format() {
        let r = PropertyResult {
            name: "x".into(),
            checked: 3,
            failures: 1,
            witness: Some("w".into()),
        };
        assert_eq!(r.line(), "FAIL x (3 checks, 1 failures): w");
    }
}
