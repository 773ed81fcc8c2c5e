//! GRADE: a differential-evolution variant whose crossover steps from the
//! worse of two parents through the better one. CERAF turns it into a
//! multi-start method by fencing off optima that have stopped improving.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Individual, SearchBox, Trial};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradeConfig {
    /// Population size; `None` means ten per dimension.
    pub pop_size: Option<usize>,
    pub mutation_fraction: f64,
    /// Mutation step `k` is drawn from `(k_range.0, k_range.1]`.
    pub k_range: (f64, f64),
    /// Crossover step `c` is drawn from `[c_range.0, c_range.1]`.
    pub c_range: (f64, f64),
    pub generations: usize,
    /// Improvement below which a generation counts as stagnant.
    pub precision: f64,
    pub ceraf: bool,
    pub stagnation_window: usize,
    /// Initial zone diameter as a fraction of each axis range.
    pub zone_fraction: f64,
    pub zone_shrink: f64,
    pub seed: u64,
}

impl Default for GradeConfig {
    fn default() -> Self {
        GradeConfig {
            pop_size: None,
            mutation_fraction: 0.1,
            k_range: (0.0, 1.0),
            c_range: (0.0, 2.0),
            generations: 200,
            precision: 1e-3,
            ceraf: true,
            stagnation_window: 100,
            zone_fraction: 0.5,
            zone_shrink: 0.995,
            seed: 0,
        }
    }
}

impl GradeConfig {
    pub fn population(&self, dim: usize) -> usize {
        self.pop_size.unwrap_or(10 * dim)
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("grade: {m}")));
        if self.population(dim) < 4 {
            return bad("population must be at least 4");
        }
        if !(0.0..=1.0).contains(&self.mutation_fraction) {
            return bad("mutation fraction outside [0, 1]");
        }
        if !(self.k_range.0 < self.k_range.1) || !(self.c_range.0 <= self.c_range.1) {
            return bad("empty k or c range");
        }
        if !(self.precision > 0.0) {
            return bad("precision must be positive");
        }
        if !(self.zone_fraction > 0.0 && self.zone_fraction <= 1.0) || !(self.zone_shrink > 0.0 && self.zone_shrink < 1.0) {
            return bad("zone fraction in (0, 1] and shrink in (0, 1) required");
        }
        if self.stagnation_window == 0 {
            return bad("stagnation window must be positive");
        }
        Ok(())
    }
}

/// `y + k (y - z)`, clipped to the box.
pub fn mutate(y: &[f64], z: &[f64], k: f64, bx: &SearchBox) -> Vec<f64> {
    let mut x: Vec<f64> = y.iter().zip(z).map(|(a, b)| a + k * (a - b)).collect();
    bx.clip(&mut x);
    x
}

/// Steps from the worse of `y`, `z` through the better one by `c` times their
/// distance, clipped to the box. Ties count `y` as the better.
pub fn crossover(y: &[f64], z: &[f64], c: f64, f_y: f64, f_z: f64, bx: &SearchBox) -> Vec<f64> {
    let (best, worst) = if f_y <= f_z { (y, z) } else { (z, y) };
    let mut x: Vec<f64> = best.iter().zip(worst).map(|(b, w)| b + c * (b - w)).collect();
    bx.clip(&mut x);
    x
}

/// Deletes the worse of two random members until `target` remain. The first
/// of two equal members survives, so the best never leaves.
pub fn tournament_select(mut pop: Vec<Individual>, target: usize, rng: &mut impl Rng) -> Vec<Individual> {
    while pop.len() > target.max(1) {
        let i = rng.gen_range(0..pop.len());
        let mut j = rng.gen_range(0..pop.len() - 1);
        if j >= i {
            j += 1;
        }
        let loser = if pop[j].f >= pop[i].f { j } else { i };
        pop.remove(loser);
    }
    pop
}

/// Exclusion ellipsoid around a recorded optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub center: Vec<f64>,
    pub value: f64,
    /// Per-axis diameter.
    pub diameter: Vec<f64>,
}

impl Zone {
    pub fn contains(&self, x: &[f64]) -> bool {
        let s: f64 = x
            .iter()
            .zip(&self.center)
            .zip(&self.diameter)
            .map(|((v, c), d)| ((v - c) / (0.5 * d)).powi(2))
            .sum();
        s < 1.0
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CerafMemory {
    pub zones: Vec<Zone>,
    /// Consecutive stagnant generations of the current start.
    pub stagnant: usize,
}

impl CerafMemory {
    pub fn new() -> Self {
        Self::default()
    }

    fn inside(&self, x: &[f64]) -> Option<usize> {
        self.zones.iter().position(|z| z.contains(x))
    }

    fn record(&mut self, best: &Individual, bx: &SearchBox, fraction: f64) {
        self.zones.push(Zone {
            center: best.x.clone(),
            value: best.f,
            diameter: (0..bx.dim()).map(|i| fraction * bx.range(i)).collect(),
        });
    }

    /// Uniform point outside every zone; gives up after a fixed number of
    /// draws and returns the last one.
    fn free_point(&self, bx: &SearchBox, rng: &mut impl Rng) -> Vec<f64> {
        let mut x = bx.sample(rng);
        for _ in 0..10_000 {
            if self.inside(&x).is_none() {
                break;
            }
            x = bx.sample(rng);
        }
        x
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradeOutcome {
    /// Best individual evaluated in this run, over all restarts.
    pub best: Individual,
    pub generations: usize,
    pub evaluations: usize,
    /// Zones recorded by this run.
    pub new_zones: usize,
}

#[derive(Clone, Copy, PartialEq)]
enum Origin {
    Mutation,
    Crossover,
}

/// Evolves a population for `config.generations` generations. With CERAF on,
/// children falling in a zone are redrawn outside all zones (shrinking the
/// zone if the child came from crossover), and a start whose best improves by
/// less than `precision` for `stagnation_window` generations is recorded as a
/// zone and restarted.
pub fn grade_run<F>(mut objective: F, bx: &SearchBox, config: &GradeConfig, ceraf: &mut CerafMemory) -> Result<GradeOutcome>
where
    F: FnMut(&[f64]) -> Trial,
{
    let dim = bx.dim();
    config.validate(dim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.population(dim);
    let n_mut = (config.mutation_fraction * n as f64).round() as usize;
    let mut evaluations = 0;
    let mut eval = |x: Vec<f64>, evaluations: &mut usize| {
        *evaluations += 1;
        let t = objective(&x);
        Individual::new(x, t)
    };
    let fresh = |ceraf: &CerafMemory, rng: &mut ChaCha8Rng| {
        if config.ceraf {
            ceraf.free_point(bx, rng)
        } else {
            bx.sample(rng)
        }
    };

    let mut pop: Vec<Individual> = (0..n)
        .map(|_| {
            let x = fresh(ceraf, &mut rng);
            eval(x, &mut evaluations)
        })
        .collect();
    let mut best = best_of(&pop).clone();
    let mut anchor = best.f;
    let zones_before = ceraf.zones.len();
    ceraf.stagnant = 0;

    for _ in 0..config.generations {
        let mut children = Vec::with_capacity(n);
        for m in 0..n {
            let (x, origin) = if m < n_mut {
                let y = &pop[rng.gen_range(0..pop.len())].x;
                let z = bx.sample(&mut rng);
                let k = config.k_range.1 - rng.gen::<f64>() * (config.k_range.1 - config.k_range.0);
                (mutate(y, &z, k, bx), Origin::Mutation)
            } else {
                let i = rng.gen_range(0..pop.len());
                let mut j = rng.gen_range(0..pop.len() - 1);
                if j >= i {
                    j += 1;
                }
                let c = rng.gen_range(config.c_range.0..=config.c_range.1);
                (crossover(&pop[i].x, &pop[j].x, c, pop[i].f, pop[j].f, bx), Origin::Crossover)
            };
            let x = match (config.ceraf, ceraf.inside(&x)) {
                (true, Some(zi)) => {
                    if origin == Origin::Crossover {
                        for d in &mut ceraf.zones[zi].diameter {
                            *d *= config.zone_shrink;
                        }
                    }
                    ceraf.free_point(bx, &mut rng)
                }
                _ => x,
            };
            children.push(eval(x, &mut evaluations));
        }
        pop.extend(children);
        pop = tournament_select(pop, n, &mut rng);

        let current = best_of(&pop).clone();
        if current.f < best.f {
            best = current.clone();
        }
        if anchor - current.f > config.precision {
            anchor = current.f;
            ceraf.stagnant = 0;
        } else {
            ceraf.stagnant += 1;
        }
        if config.ceraf && ceraf.stagnant >= config.stagnation_window {
            ceraf.record(&current, bx, config.zone_fraction);
            pop = (0..n)
                .map(|_| {
                    let x = fresh(ceraf, &mut rng);
                    eval(x, &mut evaluations)
                })
                .collect();
            let restart = best_of(&pop);
            if restart.f < best.f {
                best = restart.clone();
            }
            anchor = restart.f;
            ceraf.stagnant = 0;
        }
    }
    Ok(GradeOutcome {
        best,
        generations: config.generations,
        evaluations,
        new_zones: ceraf.zones.len() - zones_before,
    })
}

fn best_of(pop: &[Individual]) -> &Individual {
    pop.iter().fold(&pop[0], |b, p| if p.f < b.f { p } else { b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn square() -> SearchBox {
        SearchBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap()
    }

    fn wide() -> SearchBox {
        SearchBox::new(vec![-10.0, -10.0], vec![10.0, 10.0]).unwrap()
    }

    fn ind(f: f64) -> Individual {
        Individual::new(vec![f, 0.0], Trial::value(f))
    }

    #[test]
    fn mutation_by_hand() {
        assert_eq!(mutate(&[2.0, 2.0], &[1.0, 0.0], 0.5, &wide()), vec![2.5, 3.0]);
        assert_eq!(mutate(&[0.3, -0.2], &[1.0, 0.0], 0.0, &square()), vec![0.3, -0.2]);
    }

    #[test]
    fn crossover_by_hand() {
        let b = wide();
        assert_eq!(crossover(&[1.0, 1.0], &[0.0, 0.0], 1.0, 0.0, 1.0, &b), vec![2.0, 2.0]);
        assert_eq!(crossover(&[1.0, 1.0], &[0.0, 0.0], 1.0, 1.0, 0.0, &b), vec![-1.0, -1.0]);
        assert_eq!(crossover(&[1.0, 1.0], &[0.0, 0.0], 0.0, 1.0, 0.0, &b), vec![0.0, 0.0]);
    }

    proptest! {
        #[test]
        fn operators_stay_in_box(
            y in prop::array::uniform2(-1.0f64..1.0),
            z in prop::array::uniform2(-1.0f64..1.0),
            k in 0.0f64..1.0,
            c in 0.0f64..2.0,
            fy in -5.0f64..5.0,
            fz in -5.0f64..5.0,
        ) {
            let b = square();
            prop_assert!(b.contains(&mutate(&y, &z, k, &b)));
            prop_assert!(b.contains(&crossover(&y, &z, c, fy, fz, &b)));
        }

        #[test]
        fn crossover_ignores_argument_order(
            y in prop::array::uniform2(-1.0f64..1.0),
            z in prop::array::uniform2(-1.0f64..1.0),
            c in 0.0f64..2.0,
            fy in -5.0f64..5.0,
            fz in -5.0f64..5.0,
        ) {
            prop_assume!(fy != fz);
            let b = square();
            prop_assert_eq!(crossover(&y, &z, c, fy, fz, &b), crossover(&z, &y, c, fz, fy, &b));
        }
    }

    #[test]
    fn mutation_clipping_over_many_draws() {
        let b = square();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let y = b.sample(&mut rng);
            let z = b.sample(&mut rng);
            let x = mutate(&y, &z, rng.gen::<f64>() * 5.0, &b);
            assert!(b.contains(&x));
        }
    }

    #[test]
    fn tournament_deletes_the_worse() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = tournament_select(vec![ind(3.0), ind(5.0)], 1, &mut rng);
        assert_eq!(out[0].f, 3.0);
        let same = tournament_select(vec![ind(1.0); 6], 3, &mut rng);
        assert_eq!(same.len(), 3);
        assert!(same.iter().all(|p| p.f == 1.0));
    }

    #[test]
    fn tournament_keeps_the_best() {
        for seed in 0..1000u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pop: Vec<Individual> = (0..40).map(|_| ind(rng.gen_range(0.0..10.0))).collect();
            let min = pop.iter().map(|p| p.f).fold(f64::INFINITY, f64::min);
            let out = tournament_select(pop, 20, &mut rng);
            assert_eq!(out.len(), 20);
            assert!(out.iter().any(|p| p.f == min));
        }
    }

    fn sphere(x: &[f64]) -> Trial {
        Trial::value(x.iter().map(|v| v * v).sum())
    }

    #[test]
    fn finds_sphere_minimum() {
        let mut hits = 0;
        for seed in 0..100 {
            let cfg = GradeConfig {
                precision: 1e-6,
                seed,
                ..GradeConfig::default()
            };
            let out = grade_run(sphere, &square(), &cfg, &mut CerafMemory::new()).unwrap();
            if out.best.f < 1e-4 {
                hits += 1;
            }
        }
        assert!(hits >= 95, "{hits}/100");
    }

    /// Deeper well at (-0.5, -0.5), shallower at (0.5, 0.5).
    fn two_wells(x: &[f64]) -> Trial {
        let g = |cx: f64, cy: f64, depth: f64| depth * (-((x[0] - cx).powi(2) + (x[1] - cy).powi(2)) / 0.02).exp();
        Trial::value(-g(-0.5, -0.5, 1.0) - g(0.5, 0.5, 0.7))
    }

    #[test]
    fn ceraf_records_both_basins() {
        let near = |z: &Zone, c: f64| (z.center[0] - c).abs() < 0.1 && (z.center[1] - c).abs() < 0.1;
        let mut hits = 0;
        for seed in 0..100 {
            let cfg = GradeConfig {
                generations: 500,
                precision: 1e-6,
                seed,
                ..GradeConfig::default()
            };
            let mut mem = CerafMemory::new();
            grade_run(two_wells, &square(), &cfg, &mut mem).unwrap();
            if mem.zones.iter().any(|z| near(z, -0.5)) && mem.zones.iter().any(|z| near(z, 0.5)) {
                hits += 1;
            }
        }
        assert!(hits >= 90, "{hits}/100");
    }

    #[test]
    fn no_candidate_evaluated_inside_a_zone() {
        let cfg = GradeConfig {
            generations: 400,
            precision: 1e-6,
            seed: 5,
            ..GradeConfig::default()
        };
        let mut mem = CerafMemory::new();
        grade_run(two_wells, &square(), &cfg, &mut mem).unwrap();
        let k = mem.zones.len();
        assert!(k > 0);
        let mut seen = Vec::new();
        let log = |x: &[f64]| {
            seen.push(x.to_vec());
            two_wells(x)
        };
        grade_run(log, &square(), &GradeConfig { seed: 6, ..cfg }, &mut mem).unwrap();
        // Zones only shrink, so being outside the final zone is the weaker check.
        for x in &seen {
            for z in &mem.zones[..k] {
                assert!(!z.contains(x), "{x:?} inside zone at {:?}", z.center);
            }
        }
    }

    #[test]
    fn zone_diameters_shrink_but_stay_positive() {
        let cfg = GradeConfig {
            generations: 500,
            precision: 1e-6,
            seed: 9,
            ..GradeConfig::default()
        };
        let mut mem = CerafMemory::new();
        grade_run(two_wells, &square(), &cfg, &mut mem).unwrap();
        for z in &mem.zones {
            for d in &z.diameter {
                assert!(*d > 0.0 && *d <= 0.5 * 2.0);
            }
        }
    }

    #[test]
    fn same_seed_same_run() {
        let cfg = GradeConfig {
            seed: 42,
            ..GradeConfig::default()
        };
        let a = grade_run(two_wells, &square(), &cfg, &mut CerafMemory::new()).unwrap();
        let b = grade_run(two_wells, &square(), &cfg, &mut CerafMemory::new()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.best.f.to_bits(), b.best.f.to_bits());
    }

    #[test]
    fn rejects_tiny_population() {
        let cfg = GradeConfig {
            pop_size: Some(3),
            ..GradeConfig::default()
        };
        assert!(grade_run(sphere, &square(), &cfg, &mut CerafMemory::new()).is_err());
    }
}
