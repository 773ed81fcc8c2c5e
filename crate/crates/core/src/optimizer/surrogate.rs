//! Surrogate-assisted loop: fit the network to the true evaluations, let
//! GRADE minimize the network, then spend true evaluations on its optimum, a
//! random point and an extrapolated descent step.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::grade::{grade_run, CerafMemory, GradeConfig};
use super::rbfn::{rbfn_fit, Surrogate, RBFN_LAMBDA};
use super::{distance, Individual, SearchBox, Trial};
use crate::error::Result;

/// Default limit on true objective evaluations.
pub const EVAL_CAP: usize = 155;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateConfig {
    pub initial: usize,
    pub cap: usize,
    pub lambda: f64,
    /// Settings of the inner GRADE runs; `seed` and `precision` are replaced
    /// per cycle.
    pub grade: GradeConfig,
    pub seed: u64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        SurrogateConfig {
            initial: 10,
            cap: EVAL_CAP,
            lambda: RBFN_LAMBDA,
            grade: GradeConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Init,
    Optimum,
    Random,
    Descent,
}

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Source::Init => "init",
            Source::Optimum => "optimum",
            Source::Random => "random",
            Source::Descent => "descent",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub index: usize,
    pub x: Vec<f64>,
    pub f: f64,
    pub penalized: bool,
    pub source: Source,
    /// Whether the point became a network center.
    pub center: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateOutcome {
    /// Best true evaluation.
    pub best: Individual,
    pub evaluations: usize,
    pub success: bool,
    pub cycles: usize,
    pub trace: Vec<TraceRecord>,
    pub zones: usize,
}

struct Loop<'a, F> {
    objective: F,
    bx: &'a SearchBox,
    cap: usize,
    precision: f64,
    trace: Vec<TraceRecord>,
    centers: Vec<Vec<f64>>,
    values: Vec<f64>,
    best: Option<Individual>,
    success: bool,
}

impl<F: FnMut(&[f64]) -> Trial> Loop<'_, F> {
    fn done(&self) -> bool {
        self.success || self.trace.len() >= self.cap
    }

    fn seen(&self, x: &[f64]) -> bool {
        let tol = 1e-10 * self.bx.diagonal();
        self.trace.iter().any(|r| distance(&r.x, x) <= tol)
    }

    /// True evaluation at `x` unless it repeats an earlier one.
    fn evaluate(&mut self, x: Vec<f64>, source: Source) {
        if self.done() || self.seen(&x) {
            return;
        }
        let trial = (self.objective)(&x);
        let ind = Individual::new(x, trial);
        let center = !ind.penalized || source == Source::Optimum;
        if center {
            self.centers.push(ind.x.clone());
            self.values.push(ind.f);
        }
        self.trace.push(TraceRecord {
            index: self.trace.len(),
            x: ind.x.clone(),
            f: ind.f,
            penalized: ind.penalized,
            source,
            center,
        });
        if !ind.penalized && ind.f < self.precision {
            self.success = true;
        }
        if self.best.as_ref().map_or(true, |b| ind.f < b.f) {
            self.best = Some(ind);
        }
    }
}

/// Minimizes `objective` over `bx`, stopping at the first true value below
/// `precision` (success) or when another evaluation would exceed the cap.
/// A penalized point becomes a center only when it is the network optimum.
pub fn surrogate_optimize<F>(objective: F, bx: &SearchBox, config: &SurrogateConfig, precision: f64) -> Result<SurrogateOutcome>
where
    F: FnMut(&[f64]) -> Trial,
{
    let mut grade = GradeConfig {
        precision,
        ..config.grade.clone()
    };
    grade.validate(bx.dim())?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut lp = Loop {
        objective,
        bx,
        cap: config.cap,
        precision,
        trace: Vec::new(),
        centers: Vec::new(),
        values: Vec::new(),
        best: None,
        success: false,
    };
    for x in bx.latin_hypercube(config.initial, &mut rng) {
        lp.evaluate(x, Source::Init);
    }

    let mut ceraf = CerafMemory::new();
    let mut previous: Option<Vec<f64>> = lp.best.as_ref().map(|b| b.x.clone());
    let mut cycles = 0;
    while !lp.done() {
        cycles += 1;
        let net: Option<Surrogate> = if lp.centers.is_empty() {
            None
        } else {
            Some(rbfn_fit(bx, &lp.centers, &lp.values, config.lambda)?)
        };
        grade.seed = rng.gen();
        let inner = grade_run(
            |x: &[f64]| Trial::value(net.as_ref().map_or(0.0, |s| s.eval(x))),
            bx,
            &grade,
            &mut ceraf,
        )?;
        let optimum = inner.best.x;
        let random = bx.sample(&mut rng);
        let mut descent: Vec<f64> = match &previous {
            Some(p) => optimum.iter().zip(p).map(|(a, b)| 2.0 * a - b).collect(),
            None => optimum.clone(),
        };
        bx.clip(&mut descent);
        lp.evaluate(optimum.clone(), Source::Optimum);
        lp.evaluate(random, Source::Random);
        lp.evaluate(descent, Source::Descent);
        previous = Some(optimum);
    }
    let best = match lp.best {
        Some(b) => b,
        None => Individual::new(vec![f64::NAN; bx.dim()], Trial::value(f64::INFINITY)),
    };
    Ok(SurrogateOutcome {
        evaluations: lp.trace.len(),
        success: lp.success,
        best,
        cycles,
        trace: lp.trace,
        zones: ceraf.zones.len(),
    })
}

/// `eval_index,x1,..,xD,f,penalized,source`.
pub fn write_trace_csv(out: &mut impl Write, trace: &[TraceRecord]) -> std::io::Result<()> {
    let dim = trace.first().map_or(2, |r| r.x.len());
    let xs: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
    writeln!(out, "eval_index,{},f,penalized,source", xs.join(","))?;
    for r in trace {
        let xs: Vec<String> = r.x.iter().map(|v| format!("{v:.17e}")).collect();
        writeln!(out, "{},{},{:.17e},{},{}", r.index, xs.join(","), r.f, r.penalized, r.source.name())?;
    }
    Ok(())
}
