//! Pareto-optimal controller synthesis: objective evaluation, an NSGA-II
//! search over genotypes and an exhaustive oracle for small design spaces.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_bigint::BigUint;

use crate::design::{build_ctmc, build_reward_structures, design_space_size, ControllerGenotype, ObjectiveRewards, ProblemSpec};
use crate::pareto::{crowding_distance, dominates, fast_nondominated_sort, hypervolume, ObjectiveVector};
use crate::rng::SimRng;
use crate::transient::{cumulative_occupancy, reward_from_occupancy, SolverSettings};
use crate::{Error, Result};

/// Objectives of one controller from precomputed reward structures.
pub fn evaluate_with(
    spec: &ProblemSpec,
    rewards: &ObjectiveRewards,
    genotype: &ControllerGenotype,
    settings: &SolverSettings,
) -> Result<ObjectiveVector> {
    let ctmc = build_ctmc(spec, genotype)?;
    let occupancy = cumulative_occupancy(&ctmc, spec.horizon_t, settings)?;
    let [n, p, r] = rewards
        .as_array()
        .map(|x| reward_from_occupancy(&ctmc, &occupancy, x, settings.epsilon).map(|v| v.value));
    Ok(ObjectiveVector::new(n?, p?, r?))
}

/// Nuisance, progress and risk accumulated over `[0, horizon_T]`.
pub fn evaluate(spec: &ProblemSpec, genotype: &ControllerGenotype, settings: &SolverSettings) -> Result<ObjectiveVector> {
    let rewards = build_reward_structures(spec)?;
    evaluate_with(spec, &rewards, genotype, settings)
}

/// Batch objective evaluation. Implementations may cache and parallelize but
/// must return, for each genotype, exactly what [`evaluate`] returns.
pub trait Evaluator {
    fn evaluate_all(&mut self, genotypes: &[ControllerGenotype]) -> Result<Vec<ObjectiveVector>>;

    /// Distinct genotypes evaluated so far.
    fn evaluations(&self) -> usize;

    fn solver_settings(&self) -> SolverSettings;
}

/// Single-threaded evaluator with a cache keyed by genotype.
pub struct CachedEvaluator<'a> {
    spec: &'a ProblemSpec,
    rewards: ObjectiveRewards,
    settings: SolverSettings,
    cache: BTreeMap<Vec<u32>, ObjectiveVector>,
}

impl<'a> CachedEvaluator<'a> {
    pub fn new(spec: &'a ProblemSpec, settings: SolverSettings) -> Result<Self> {
        settings.check()?;
        Ok(CachedEvaluator {
            spec,
            rewards: build_reward_structures(spec)?,
            settings,
            cache: BTreeMap::new(),
        })
    }
}

impl Evaluator for CachedEvaluator<'_> {
    fn evaluate_all(&mut self, genotypes: &[ControllerGenotype]) -> Result<Vec<ObjectiveVector>> {
        genotypes
            .iter()
            .map(|g| {
                if let Some(v) = self.cache.get(&g.options) {
                    return Ok(*v);
                }
                let v = evaluate_with(self.spec, &self.rewards, g, &self.settings)?;
                self.cache.insert(g.options.clone(), v);
                Ok(v)
            })
            .collect()
    }

    fn evaluations(&self) -> usize {
        self.cache.len()
    }

    fn solver_settings(&self) -> SolverSettings {
        self.settings
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaSettings {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_probability: f64,
    /// `None` means `1 / genotype length`.
    pub mutation_probability_per_gene: Option<f64>,
    pub tournament_size: usize,
    pub seed: u64,
}

impl Default for GaSettings {
    fn default() -> Self {
        GaSettings {
            population_size: 100,
            generations: 200,
            crossover_probability: 0.9,
            mutation_probability_per_gene: None,
            tournament_size: 2,
            seed: 1,
        }
    }
}

impl GaSettings {
    pub fn check(&self) -> Result<()> {
        if self.population_size == 0 {
            return Err(Error::input("population is empty"));
        }
        if self.population_size < 4 || !self.population_size.is_multiple_of(2) {
            return Err(Error::input(format!(
                "population_size must be even and >= 4 (minimum 4), got {}",
                self.population_size
            )));
        }
        let probability = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::input(format!("{name} must lie in [0, 1], got {p}")))
            }
        };
        probability("crossover_probability", self.crossover_probability)?;
        if let Some(p) = self.mutation_probability_per_gene {
            probability("mutation_probability_per_gene", p)?;
        }
        if self.tournament_size == 0 {
            return Err(Error::input("tournament_size must be >= 1"));
        }
        Ok(())
    }

    pub fn mutation_rate(&self, genotype_len: usize) -> f64 {
        self.mutation_probability_per_gene
            .unwrap_or(1.0 / genotype_len.max(1) as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontMetadata {
    pub ga: Option<GaSettings>,
    pub solver: SolverSettings,
    /// Distinct genotypes evaluated.
    pub evaluations: usize,
    pub design_space_size: String,
    /// Filled in by callers that can read a clock.
    pub wall_clock_seconds: Option<f64>,
}

/// Mutually non-dominated controllers with their objectives.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoFront {
    pub entries: Vec<(ControllerGenotype, ObjectiveVector)>,
    pub metadata: FrontMetadata,
}

impl ParetoFront {
    pub fn objectives(&self) -> Vec<ObjectiveVector> {
        self.entries.iter().map(|(_, o)| *o).collect()
    }

    /// Distinct objective vectors, sorted.
    pub fn objective_set(&self) -> Vec<ObjectiveVector> {
        let mut v = self.objectives();
        v.sort_by(objective_order);
        v.dedup_by(|a, b| a.bits() == b.bits());
        v
    }

    /// For each entry, whether another entry has the identical objective vector.
    pub fn duplicate_flags(&self) -> Vec<bool> {
        let mut counts: BTreeMap<[u64; 3], usize> = BTreeMap::new();
        for (_, o) in &self.entries {
            *counts.entry(o.bits()).or_default() += 1;
        }
        self.entries.iter().map(|(_, o)| counts[&o.bits()] > 1).collect()
    }

    pub fn hypervolume(&self, reference: &ObjectiveVector) -> Result<f64> {
        hypervolume(&self.objective_set(), reference)
    }
}

/// Ascending nuisance, then descending progress, then ascending risk.
pub fn objective_order(a: &ObjectiveVector, b: &ObjectiveVector) -> Ordering {
    a.nuisance
        .total_cmp(&b.nuisance)
        .then(b.progress.total_cmp(&a.progress))
        .then(a.risk.total_cmp(&b.risk))
}

/// A reference point weakly dominated by every controller of `spec`, padded
/// against solver rounding.
pub fn reference_point(spec: &ProblemSpec) -> ObjectiveVector {
    let (nuisance, _, risk) = spec.objective_bounds();
    let pad = |x: f64| x * (1.0 + 1e-6) + 1e-9;
    ObjectiveVector::new(pad(nuisance), 0.0, pad(risk))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Duplicates {
    /// One genotype per objective vector, the lexicographically smallest.
    KeepSmallest,
    KeepAll,
}

/// Running set of non-dominated `(genotype, objectives)` pairs.
#[derive(Debug, Clone)]
struct Archive {
    entries: Vec<(ControllerGenotype, ObjectiveVector)>,
    duplicates: Duplicates,
}

impl Archive {
    fn new(duplicates: Duplicates) -> Self {
        Archive {
            entries: Vec::new(),
            duplicates,
        }
    }

    fn offer(&mut self, genotype: &ControllerGenotype, objectives: ObjectiveVector) {
        if self.entries.iter().any(|(_, o)| dominates(o, &objectives)) {
            return;
        }
        let bits = objectives.bits();
        if let Some(slot) = self.entries.iter_mut().find(|(_, o)| o.bits() == bits) {
            match self.duplicates {
                Duplicates::KeepSmallest => {
                    if *genotype < slot.0 {
                        slot.0 = genotype.clone();
                    }
                    return;
                }
                Duplicates::KeepAll => {
                    if self.entries.iter().any(|(g, _)| g == genotype) {
                        return;
                    }
                }
            }
        }
        self.entries.retain(|(_, o)| !dominates(&objectives, o));
        self.entries.push((genotype.clone(), objectives));
    }

    fn objective_set(&self) -> Vec<ObjectiveVector> {
        let mut v: Vec<_> = self.entries.iter().map(|(_, o)| *o).collect();
        v.sort_by(objective_order);
        v.dedup_by(|a, b| a.bits() == b.bits());
        v
    }

    fn into_sorted(mut self) -> Vec<(ControllerGenotype, ObjectiveVector)> {
        self.entries
            .sort_by(|a, b| objective_order(&a.1, &b.1).then_with(|| a.0.cmp(&b.0)));
        self.entries
    }
}

/// Per-generation summary of the archive.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgressRecord {
    pub generation: usize,
    pub evaluations: usize,
    pub archive_size: usize,
    pub hypervolume: f64,
    pub min_nuisance: f64,
    pub max_progress: f64,
    pub min_risk: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisOutcome {
    pub front: ParetoFront,
    pub progress: Vec<ProgressRecord>,
}

fn random_genotype(spec: &ProblemSpec, rng: &mut SimRng) -> ControllerGenotype {
    let count = spec.option_count() as u64;
    ControllerGenotype::new((0..spec.genotype_len()).map(|_| rng.below(count) as u32).collect())
}

struct Ranked {
    rank: Vec<usize>,
    crowding: Vec<f64>,
}

fn rank_population(objs: &[ObjectiveVector]) -> (Vec<Vec<usize>>, Ranked) {
    let fronts = fast_nondominated_sort(objs);
    let mut rank = alloc::vec![0; objs.len()];
    let mut crowding = alloc::vec![0.0; objs.len()];
    for (r, front) in fronts.iter().enumerate() {
        let members: Vec<_> = front.iter().map(|&i| objs[i]).collect();
        for (&i, d) in front.iter().zip(crowding_distance(&members)) {
            rank[i] = r;
            crowding[i] = d;
        }
    }
    (fronts, Ranked { rank, crowding })
}

/// Crowded comparison: lower rank first, then larger crowding distance.
fn crowded_better(r: &Ranked, a: usize, b: usize) -> bool {
    match r.rank[a].cmp(&r.rank[b]) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => match r.crowding[a].total_cmp(&r.crowding[b]) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => a < b,
        },
    }
}

fn tournament(r: &Ranked, size: usize, rng: &mut SimRng) -> usize {
    let n = r.rank.len() as u64;
    let mut best = rng.below(n) as usize;
    for _ in 1..size {
        let c = rng.below(n) as usize;
        if crowded_better(r, c, best) {
            best = c;
        }
    }
    best
}

fn progress_record(generation: usize, archive: &Archive, evaluations: usize, reference: &ObjectiveVector) -> Result<ProgressRecord> {
    let objs = archive.objective_set();
    Ok(ProgressRecord {
        generation,
        evaluations,
        archive_size: archive.entries.len(),
        hypervolume: hypervolume(&objs, reference)?,
        min_nuisance: objs.iter().map(|o| o.nuisance).fold(f64::INFINITY, f64::min),
        max_progress: objs.iter().map(|o| o.progress).fold(f64::NEG_INFINITY, f64::max),
        min_risk: objs.iter().map(|o| o.risk).fold(f64::INFINITY, f64::min),
    })
}

/// NSGA-II over controller genotypes.
///
/// Uniform random initialization, tournaments on (rank, crowding), uniform
/// crossover, per-gene uniform-reset mutation and (mu + lambda) survivor
/// selection. Every evaluated genotype is offered to an external
/// non-dominated archive, which is returned with one genotype (the
/// lexicographically smallest) per distinct objective vector. `observer` sees
/// one record per generation, generation 0 being the initial population.
pub fn nsga2_with(
    spec: &ProblemSpec,
    ga: &GaSettings,
    evaluator: &mut dyn Evaluator,
    reference: &ObjectiveVector,
    observer: &mut dyn FnMut(&ProgressRecord),
) -> Result<SynthesisOutcome> {
    ga.check()?;
    spec.checked()?;
    let mut rng = SimRng::new(ga.seed);
    let count = spec.option_count() as u64;
    let mutation = ga.mutation_rate(spec.genotype_len());
    let mut archive = Archive::new(Duplicates::KeepSmallest);
    let mut progress = Vec::new();

    let mut population: Vec<ControllerGenotype> =
        (0..ga.population_size).map(|_| random_genotype(spec, &mut rng)).collect();
    let mut objectives = evaluator.evaluate_all(&population)?;
    for (g, o) in population.iter().zip(&objectives) {
        archive.offer(g, *o);
    }
    let record = progress_record(0, &archive, evaluator.evaluations(), reference)?;
    observer(&record);
    progress.push(record);
    let (_, mut ranked) = rank_population(&objectives);

    for generation in 1..=ga.generations {
        let mut offspring = Vec::with_capacity(ga.population_size);
        while offspring.len() < ga.population_size {
            let a = &population[tournament(&ranked, ga.tournament_size, &mut rng)];
            let b = &population[tournament(&ranked, ga.tournament_size, &mut rng)];
            let (mut c1, mut c2) = (a.clone(), b.clone());
            if rng.chance(ga.crossover_probability) {
                for i in 0..c1.options.len() {
                    if rng.chance(0.5) {
                        core::mem::swap(&mut c1.options[i], &mut c2.options[i]);
                    }
                }
            }
            for child in [&mut c1, &mut c2] {
                for gene in child.options.iter_mut() {
                    if rng.chance(mutation) {
                        *gene = rng.below(count) as u32;
                    }
                }
            }
            offspring.push(c1);
            if offspring.len() < ga.population_size {
                offspring.push(c2);
            }
        }
        let child_objectives = evaluator.evaluate_all(&offspring)?;
        for (g, o) in offspring.iter().zip(&child_objectives) {
            archive.offer(g, *o);
        }

        population.extend(offspring);
        objectives.extend(child_objectives);
        let (fronts, merged) = rank_population(&objectives);
        let mut survivors = Vec::with_capacity(ga.population_size);
        for front in fronts {
            if survivors.len() + front.len() <= ga.population_size {
                survivors.extend(front);
            } else {
                let mut rest = front;
                rest.sort_by(|&a, &b| {
                    merged.crowding[b].total_cmp(&merged.crowding[a]).then(a.cmp(&b))
                });
                rest.truncate(ga.population_size - survivors.len());
                survivors.extend(rest);
            }
            if survivors.len() == ga.population_size {
                break;
            }
        }
        population = survivors.iter().map(|&i| population[i].clone()).collect();
        objectives = survivors.iter().map(|&i| objectives[i]).collect();
        ranked = rank_population(&objectives).1;

        let record = progress_record(generation, &archive, evaluator.evaluations(), reference)?;
        observer(&record);
        progress.push(record);
    }

    Ok(SynthesisOutcome {
        front: ParetoFront {
            entries: archive.into_sorted(),
            metadata: FrontMetadata {
                ga: Some(*ga),
                solver: evaluator.solver_settings(),
                evaluations: evaluator.evaluations(),
                design_space_size: design_space_size(spec).to_string(),
                wall_clock_seconds: None,
            },
        },
        progress,
    })
}

/// [`nsga2_with`] using a [`CachedEvaluator`] and [`reference_point`].
pub fn nsga2(spec: &ProblemSpec, ga: &GaSettings, solver: &SolverSettings) -> Result<ParetoFront> {
    let mut evaluator = CachedEvaluator::new(spec, *solver)?;
    Ok(nsga2_with(spec, ga, &mut evaluator, &reference_point(spec), &mut |_| {})?.front)
}

/// Genotypes in lexicographic order, in batches.
pub struct GenotypeEnumerator {
    next: Option<Vec<u32>>,
    radix: u32,
}

impl GenotypeEnumerator {
    pub fn new(spec: &ProblemSpec) -> Self {
        GenotypeEnumerator {
            next: Some(alloc::vec![0; spec.genotype_len()]),
            radix: spec.option_count() as u32,
        }
    }
}

impl Iterator for GenotypeEnumerator {
    type Item = ControllerGenotype;

    fn next(&mut self) -> Option<ControllerGenotype> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut carry = true;
        for digit in succ.iter_mut().rev() {
            *digit += 1;
            if *digit < self.radix {
                carry = false;
                break;
            }
            *digit = 0;
        }
        if !carry {
            self.next = Some(succ);
        }
        Some(ControllerGenotype::new(current))
    }
}

const ENUMERATION_BATCH: usize = 512;

/// The exact Pareto set by evaluating every genotype; refuses when the design
/// space has more than `limit` members. Genotypes with identical objective
/// vectors are all kept.
pub fn exhaustive_pareto_with(
    spec: &ProblemSpec,
    evaluator: &mut dyn Evaluator,
    limit: u64,
) -> Result<ParetoFront> {
    spec.checked()?;
    let size = design_space_size(spec);
    if size > BigUint::from(limit) {
        return Err(Error::Resource {
            what: String::from("exhaustive enumeration of the design space"),
            required: format!("{size} genotypes"),
            cap: format!("{limit} (raise the limit to enumerate)"),
        });
    }
    let mut archive = Archive::new(Duplicates::KeepAll);
    let mut batch = Vec::with_capacity(ENUMERATION_BATCH);
    let mut genotypes = GenotypeEnumerator::new(spec).peekable();
    while genotypes.peek().is_some() {
        batch.clear();
        batch.extend(genotypes.by_ref().take(ENUMERATION_BATCH));
        let objs = evaluator.evaluate_all(&batch)?;
        for (g, o) in batch.iter().zip(objs) {
            archive.offer(g, o);
        }
    }
    Ok(ParetoFront {
        entries: archive.into_sorted(),
        metadata: FrontMetadata {
            ga: None,
            solver: evaluator.solver_settings(),
            evaluations: evaluator.evaluations(),
            design_space_size: size.to_string(),
            wall_clock_seconds: None,
        },
    })
}

pub fn exhaustive_pareto(spec: &ProblemSpec, solver: &SolverSettings, limit: u64) -> Result<ParetoFront> {
    let mut evaluator = CachedEvaluator::new(spec, *solver)?;
    exhaustive_pareto_with(spec, &mut evaluator, limit)
}
