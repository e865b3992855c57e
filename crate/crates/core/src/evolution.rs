//! Guided aging evolution with zero-cost proxy filtering, plus the plain
//! regularized-evolution and random-search baselines.
//!
//! A guided run scores `init_candidates` random architectures with the proxy,
//! trains the best `pop_size` of them, then repeats: tournament-select a
//! parent, score `gen_size` single-edge mutants, train only the best-scoring
//! mutant, append it on the right and evict one survivor (the oldest by
//! default). With `guided = false`, `gen_size = 1` and
//! `init_candidates = pop_size` this is exactly regularized evolution.
//!
//! Every random decision draws from a substream keyed by its role and index
//! (candidate `i`, cycle `c`, child `j`), so parallel and sequential child
//! scoring produce identical trajectories.

use std::collections::VecDeque;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cellspace::{mutate, random_arch, ArchEncoding, SpaceDescriptor};
use crate::error::{Error, Result};
use crate::oracle::{FitnessOracle, FitnessRecord};
use crate::par::{self, Execution};
use crate::rng::Stream;
use crate::zeroproxy::{ProxyScore, ProxyScorer};

/// Substream labels. Candidate `i` draws from `root.split(INIT).split(i)`;
/// cycle `c` selects with `root.split(CYCLE).split(c).split(SELECT)` and
/// mutates child `j` with `...split(c).split(CHILD).split(j)`; each scored
/// architecture passes `split(SCORE)` of its own stream to the scorer.
pub mod labels {
    pub const INIT: u64 = 0x1;
    pub const CYCLE: u64 = 0x2;
    pub const SELECT: u64 = 0x3;
    pub const CHILD: u64 = 0x4;
    pub const SCORE: u64 = 0x5;
    pub const PLACEHOLDER: u64 = 0x6;
    pub const RANDOM_SEARCH: u64 = 0x7;
}

use labels::{
    CHILD as L_CHILD, CYCLE as L_CYCLE, INIT as L_INIT, PLACEHOLDER as L_PLACEHOLDER,
    RANDOM_SEARCH as L_RANDOM_SEARCH, SCORE as L_SCORE, SELECT as L_SELECT,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParentMode {
    #[default]
    Tournament,
    Highest,
    Lowest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemovalMode {
    #[default]
    Oldest,
    Highest,
    Lowest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub pop_size: usize,
    pub tournament_size: usize,
    pub cycles: usize,
    /// Children scored per cycle; defaults to `pop_size`.
    pub gen_size: Option<usize>,
    /// Proxy-scored architectures at initialization; defaults to `cycles`.
    pub init_candidates: Option<usize>,
    pub parent_mode: ParentMode,
    pub removal_mode: RemovalMode,
    pub guided: bool,
    pub seed: u64,
    /// When set, the trained initial population counts toward the `cycles`
    /// budget (history is capped at `cycles`); otherwise `cycles` evolution
    /// cycles run after initialization.
    pub budget_counts_init: bool,
    /// Simulated seconds charged per proxy evaluation.
    pub proxy_cost_s: f64,
    pub execution: Execution,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            pop_size: 10,
            tournament_size: 5,
            cycles: 200,
            gen_size: None,
            init_candidates: None,
            parent_mode: ParentMode::Tournament,
            removal_mode: RemovalMode::Oldest,
            guided: true,
            seed: 0,
            budget_counts_init: true,
            proxy_cost_s: 0.05,
            execution: Execution::Parallel,
        }
    }
}

impl SearchConfig {
    /// Plain regularized evolution with the given sizes.
    pub fn rea(pop_size: usize, tournament_size: usize, cycles: usize) -> Self {
        Self {
            pop_size,
            tournament_size,
            cycles,
            gen_size: Some(1),
            init_candidates: Some(pop_size),
            guided: false,
            ..Self::default()
        }
    }

    pub fn gen_size(&self) -> usize {
        if self.guided {
            self.gen_size.unwrap_or(self.pop_size)
        } else {
            1
        }
    }

    pub fn init_candidates(&self) -> usize {
        if self.guided {
            self.init_candidates.unwrap_or(self.cycles)
        } else {
            self.pop_size
        }
    }

    /// Evolution cycles a fresh run executes.
    pub fn evolution_cycles(&self) -> usize {
        if self.budget_counts_init {
            self.cycles - self.pop_size
        } else {
            self.cycles
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.tournament_size < 1 {
            return fail("tournament_size must be >= 1".into());
        }
        if self.pop_size < 1 {
            return fail("pop_size must be >= 1".into());
        }
        if self.budget_counts_init && self.cycles < self.pop_size {
            return fail(format!("cycles {} must be >= pop_size {}", self.cycles, self.pop_size));
        }
        if self.gen_size() < 1 {
            return fail("gen_size must be >= 1".into());
        }
        if !(self.proxy_cost_s >= 0.0) {
            return fail("proxy_cost_s must be >= 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Init,
    Cycle(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub arch: ArchEncoding,
    /// Validation accuracy; set once the individual is trained.
    pub fitness: Option<f64>,
    pub test_acc: Option<f64>,
    pub proxy: ProxyScore,
    pub birth_index: u64,
    pub origin: Origin,
}

impl Individual {
    fn candidate(arch: ArchEncoding, proxy: ProxyScore, birth_index: u64, origin: Origin) -> Self {
        Self {
            arch,
            fitness: None,
            test_acc: None,
            proxy,
            birth_index,
            origin,
        }
    }

    fn train(&mut self, record: &FitnessRecord) {
        self.fitness = Some(record.val_acc);
        self.test_acc = Some(record.test_acc);
    }

    /// Fitness of a population member.
    pub fn fit(&self) -> f64 {
        self.fitness.expect("population members are trained")
    }
}

/// Age-ordered population, oldest at the front.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Population {
    members: VecDeque<Individual>,
}

impl Population {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_members(members: impl IntoIterator<Item = Individual>) -> Self {
        Self {
            members: members.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn push_youngest(&mut self, ind: Individual) {
        self.members.push_back(ind);
    }

    pub fn members(&self) -> impl Iterator<Item = &Individual> {
        self.members.iter()
    }

    pub fn get(&self, i: usize) -> Option<&Individual> {
        self.members.get(i)
    }

    fn extreme(&self, highest: bool) -> usize {
        let mut best = 0;
        for (i, m) in self.members.iter().enumerate() {
            let b = &self.members[best];
            let better = if highest { m.fit() > b.fit() } else { m.fit() < b.fit() };
            if better || (m.fit() == b.fit() && m.birth_index < b.birth_index) {
                best = i;
            }
        }
        best
    }
}

/// One trained architecture in a run's history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub event_index: usize,
    /// 0 for the initial population, otherwise the 1-based evolution cycle.
    pub cycle: usize,
    pub arch: ArchEncoding,
    pub proxy: Option<f64>,
    pub fitness: f64,
    pub best_so_far: f64,
    pub simulated_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub events: Vec<Event>,
    pub best: Individual,
    pub proxy_evaluations: usize,
    pub cycles_executed: usize,
    pub train_time_s: f64,
    pub proxy_time_s: f64,
}

impl Trajectory {
    pub fn simulated_time_s(&self) -> f64 {
        self.train_time_s + self.proxy_time_s
    }

    pub fn final_fitness(&self) -> f64 {
        self.best.fit()
    }

    pub fn final_test_acc(&self) -> f64 {
        self.best.test_acc.expect("best individual is trained")
    }

    /// Best-so-far after initialization followed by one point per evolution cycle.
    pub fn curve(&self) -> Vec<(usize, f64, f64)> {
        let mut out: Vec<(usize, f64, f64)> = Vec::new();
        for e in &self.events {
            match out.last_mut() {
                Some(last) if last.0 == e.cycle => {
                    last.1 = e.best_so_far;
                    last.2 = e.simulated_time_s;
                }
                _ => out.push((e.cycle, e.best_so_far, e.simulated_time_s)),
            }
        }
        out
    }
}

/// Running history plus accounting shared by all methods.
struct Recorder {
    history: Vec<Individual>,
    events: Vec<Event>,
    best: Option<usize>,
    proxy_evaluations: usize,
    train_time_s: f64,
    proxy_time_s: f64,
    proxy_cost_s: f64,
}

impl Recorder {
    fn new(proxy_cost_s: f64) -> Self {
        Self {
            history: Vec::new(),
            events: Vec::new(),
            best: None,
            proxy_evaluations: 0,
            train_time_s: 0.0,
            proxy_time_s: 0.0,
            proxy_cost_s,
        }
    }

    fn charge_proxy(&mut self, count: usize) {
        self.proxy_evaluations += count;
        self.proxy_time_s += count as f64 * self.proxy_cost_s;
    }

    fn record(&mut self, ind: &Individual, train_time_s: f64, cycle: usize) {
        self.train_time_s += train_time_s;
        self.history.push(ind.clone());
        let idx = self.history.len() - 1;
        let improves = match self.best {
            None => true,
            Some(b) => {
                let cur = &self.history[b];
                ind.fit() > cur.fit() || (ind.fit() == cur.fit() && ind.birth_index < cur.birth_index)
            }
        };
        if improves {
            self.best = Some(idx);
        }
        let best = self.history[self.best.expect("set above")].fit();
        self.events.push(Event {
            event_index: self.events.len(),
            cycle,
            arch: ind.arch,
            proxy: ind.proxy.value,
            fitness: ind.fit(),
            best_so_far: best,
            simulated_time_s: self.train_time_s + self.proxy_time_s,
        });
    }

    fn finish(self, cycles_executed: usize) -> Result<Trajectory> {
        let best = self
            .best
            .map(|b| self.history[b].clone())
            .ok_or_else(|| Error::Config("search trained no architectures".into()))?;
        Ok(Trajectory {
            events: self.events,
            best,
            proxy_evaluations: self.proxy_evaluations,
            cycles_executed,
            train_time_s: self.train_time_s,
            proxy_time_s: self.proxy_time_s,
        })
    }
}

/// Outcome of [`init_population`].
#[derive(Debug, Clone, PartialEq)]
pub struct InitOutcome {
    pub population: Population,
    /// Trained individuals in birth order.
    pub history: Vec<Individual>,
    /// Every candidate sampled, kept or not.
    pub candidates: Vec<Individual>,
    pub proxy_evaluations: usize,
}

/// Sample candidates, keep the `pop_size` best by proxy and train them.
pub fn init_population(
    cfg: &SearchConfig,
    oracle: &dyn FitnessOracle,
    scorer: &dyn ProxyScorer,
    rng: &Stream,
) -> Result<InitOutcome> {
    cfg.validate()?;
    let n = cfg.init_candidates();
    if n < cfg.pop_size {
        return Err(Error::Config(format!("init_candidates {n} must be >= pop_size {}", cfg.pop_size)));
    }
    let init = rng.split(L_INIT);
    let guided = cfg.guided;
    let scored: Vec<Result<Individual>> = par::map_indexed(n, cfg.execution, |i| {
        let mut s = init.split(i as u64);
        let arch = random_arch(&mut s);
        let proxy = if guided {
            scorer.score(&arch, &mut s.split(L_SCORE))?
        } else {
            ProxyScore::finite(s.split(L_PLACEHOLDER).uniform())
        };
        Ok(Individual::candidate(arch, proxy, i as u64, Origin::Init))
    });
    let candidates: Vec<Individual> = scored.into_iter().collect::<Result<_>>()?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        candidates[b]
            .proxy
            .rank_cmp(&candidates[a].proxy)
            .then(candidates[a].birth_index.cmp(&candidates[b].birth_index))
    });
    let mut kept: Vec<usize> = order[..cfg.pop_size].to_vec();
    kept.sort_unstable();

    let mut population = Population::new();
    let mut history = Vec::with_capacity(kept.len());
    for i in kept {
        let mut ind = candidates[i].clone();
        ind.train(&oracle.query(&ind.arch));
        population.push_youngest(ind.clone());
        history.push(ind);
    }
    Ok(InitOutcome {
        population,
        history,
        candidates,
        proxy_evaluations: if guided { n } else { 0 },
    })
}

/// Pick a parent according to `cfg.parent_mode`.
pub fn tournament_select<'p>(pop: &'p Population, cfg: &SearchConfig, rng: &mut Stream) -> &'p Individual {
    assert!(!pop.is_empty(), "selection from an empty population");
    match cfg.parent_mode {
        ParentMode::Tournament => {
            let mut best = &pop.members[rng.index(pop.len())];
            for _ in 1..cfg.tournament_size {
                let c = &pop.members[rng.index(pop.len())];
                if c.fit() > best.fit() {
                    best = c;
                }
            }
            best
        }
        ParentMode::Highest => &pop.members[pop.extreme(true)],
        ParentMode::Lowest => &pop.members[pop.extreme(false)],
    }
}

/// Best child of one generation.
#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    pub arch: ArchEncoding,
    pub proxy: ProxyScore,
    pub child_index: usize,
    /// All children in index order.
    pub children: Vec<(ArchEncoding, ProxyScore)>,
    pub proxy_evaluations: usize,
}

/// Mutate the parent `gen_size` times and keep the best-scoring child.
pub fn spawn_generation(
    parent: &Individual,
    cfg: &SearchConfig,
    scorer: &dyn ProxyScorer,
    rng: &Stream,
) -> Result<Generation> {
    let children_stream = rng.split(L_CHILD);
    let guided = cfg.guided;
    let results: Vec<Result<(ArchEncoding, ProxyScore)>> =
        par::map_indexed(cfg.gen_size(), cfg.execution, |j| {
            let mut s = children_stream.split(j as u64);
            let arch = mutate(&parent.arch, &mut s);
            let proxy = if guided {
                scorer.score(&arch, &mut s.split(L_SCORE))?
            } else {
                ProxyScore::sentinel()
            };
            Ok((arch, proxy))
        });
    let children: Vec<(ArchEncoding, ProxyScore)> = results.into_iter().collect::<Result<_>>()?;
    let mut best = 0;
    for (j, (_, p)) in children.iter().enumerate().skip(1) {
        if p.rank_cmp(&children[best].1).is_gt() {
            best = j;
        }
    }
    Ok(Generation {
        arch: children[best].0,
        proxy: children[best].1.clone(),
        child_index: best,
        proxy_evaluations: if guided { children.len() } else { 0 },
        children,
    })
}

/// Evict one individual from a population that is one over capacity.
pub fn remove_survivor(pop: &mut Population, cfg: &SearchConfig) -> Individual {
    assert!(!pop.is_empty(), "removal from an empty population");
    let idx = match cfg.removal_mode {
        RemovalMode::Oldest => 0,
        RemovalMode::Highest => pop.extreme(true),
        RemovalMode::Lowest => pop.extreme(false),
    };
    pop.members.remove(idx).expect("index in range")
}

/// Run one search. With `initial` set, that population (re-queried on
/// `oracle`) replaces initialization and forms the first history entries.
pub fn run_search(
    cfg: &SearchConfig,
    oracle: &dyn FitnessOracle,
    scorer: &dyn ProxyScorer,
    rng: &Stream,
    initial: Option<&Population>,
) -> Result<Trajectory> {
    run_search_with_population(cfg, oracle, scorer, rng, initial).map(|(t, _)| t)
}

/// [`run_search`] that also returns the final population.
pub fn run_search_with_population(
    cfg: &SearchConfig,
    oracle: &dyn FitnessOracle,
    scorer: &dyn ProxyScorer,
    rng: &Stream,
    initial: Option<&Population>,
) -> Result<(Trajectory, Population)> {
    cfg.validate()?;
    let mut rec = Recorder::new(cfg.proxy_cost_s);
    let mut next_birth;
    let mut pop = match initial {
        None => {
            next_birth = cfg.init_candidates() as u64;
            let init = init_population(cfg, oracle, scorer, rng)?;
            rec.charge_proxy(init.proxy_evaluations);
            for ind in &init.history {
                rec.record(ind, oracle.query(&ind.arch).train_time_s, 0);
            }
            init.population
        }
        Some(loaded) => {
            if loaded.len() != cfg.pop_size {
                return Err(Error::Config(format!(
                    "checkpoint holds {} individuals, pop_size is {}",
                    loaded.len(),
                    cfg.pop_size
                )));
            }
            next_birth = loaded.members().map(|m| m.birth_index + 1).max().unwrap_or(0);
            let mut pop = Population::new();
            for ind in loaded.members() {
                let mut ind = ind.clone();
                let r = oracle.query(&ind.arch);
                ind.train(&r);
                rec.record(&ind, r.train_time_s, 0);
                pop.push_youngest(ind);
            }
            pop
        }
    };
    let cycles_stream = rng.split(L_CYCLE);
    let mut cycle = 0;
    loop {
        let done = if cfg.budget_counts_init {
            rec.history.len() >= cfg.cycles
        } else {
            cycle >= cfg.cycles
        };
        if done {
            break;
        }
        cycle += 1;
        let cs = cycles_stream.split(cycle as u64);
        let parent = tournament_select(&pop, cfg, &mut cs.split(L_SELECT)).clone();
        let generation = spawn_generation(&parent, cfg, scorer, &cs)?;
        rec.charge_proxy(generation.proxy_evaluations);
        let record = oracle.query(&generation.arch);
        let mut child = Individual::candidate(generation.arch, generation.proxy, next_birth, Origin::Cycle(cycle));
        next_birth += 1;
        child.train(&record);
        rec.record(&child, record.train_time_s, cycle);
        pop.push_youngest(child);
        remove_survivor(&mut pop, cfg);
    }
    Ok((rec.finish(cycle)?, pop))
}

/// `cycles` independent uniform samples, each trained; returns the best.
/// The first sample plays the role of the initial point of the curve.
pub fn random_search(cfg: &SearchConfig, oracle: &dyn FitnessOracle, rng: &Stream) -> Result<Trajectory> {
    if cfg.cycles < 1 {
        return Err(Error::Config("random search needs cycles >= 1".into()));
    }
    let s = rng.split(L_RANDOM_SEARCH);
    let mut rec = Recorder::new(cfg.proxy_cost_s);
    for i in 0..cfg.cycles {
        let arch = random_arch(&mut s.split(i as u64));
        let r = oracle.query(&arch);
        let origin = if i == 0 { Origin::Init } else { Origin::Cycle(i) };
        let mut ind = Individual::candidate(arch, ProxyScore::sentinel(), i as u64, origin);
        ind.train(&r);
        rec.record(&ind, r.train_time_s, i);
    }
    rec.finish(cfg.cycles - 1)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum ProxyField {
    Value(f64),
    Tag(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointEntry {
    arch: ArchEncoding,
    fitness: f64,
    proxy: ProxyField,
    birth_index: u64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointFile {
    space: SpaceDescriptor,
    individuals: Vec<CheckpointEntry>,
}

pub fn checkpoint_to_json(pop: &Population) -> Result<String> {
    let individuals = pop
        .members()
        .map(|m| CheckpointEntry {
            arch: m.arch,
            fitness: m.fit(),
            proxy: match m.proxy.value {
                Some(v) => ProxyField::Value(v),
                None => ProxyField::Tag("sentinel".into()),
            },
            birth_index: m.birth_index,
        })
        .collect();
    let file = CheckpointFile {
        space: SpaceDescriptor::default(),
        individuals,
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn checkpoint_from_json(text: &str) -> Result<Population> {
    let file: CheckpointFile = serde_json::from_str(text)?;
    if file.space != SpaceDescriptor::default() {
        return Err(Error::SpaceMismatch(format!(
            "checkpoint space {:?} differs from {:?}",
            file.space,
            SpaceDescriptor::default()
        )));
    }
    let mut members = Vec::with_capacity(file.individuals.len());
    for (i, e) in file.individuals.into_iter().enumerate() {
        let proxy = match e.proxy {
            ProxyField::Value(v) => ProxyScore::finite(v),
            ProxyField::Tag(t) if t == "sentinel" => ProxyScore::sentinel(),
            ProxyField::Tag(t) => {
                return Err(Error::Benchmark(format!("individual {i}: unknown proxy tag {t:?}")))
            }
        };
        members.push(Individual {
            arch: e.arch,
            fitness: Some(e.fitness),
            test_acc: None,
            proxy,
            birth_index: e.birth_index,
            origin: Origin::Init,
        });
    }
    Ok(Population::from_members(members))
}

pub fn save_checkpoint(pop: &Population, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, checkpoint_to_json(pop)?).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Population> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    checkpoint_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cellspace::SPACE_SIZE;

    struct HashOracle;

    impl FitnessOracle for HashOracle {
        fn query(&self, arch: &ArchEncoding) -> FitnessRecord {
            let mut s = Stream::new(arch.ordinal() as u64);
            let val = 100.0 * s.uniform();
            FitnessRecord {
                val_acc: val,
                test_acc: val,
                train_time_s: 1.0 + s.uniform(),
            }
        }
    }

    fn ordinal_scorer(arch: &ArchEncoding, _: &mut Stream) -> Result<ProxyScore> {
        Ok(ProxyScore::finite(arch.ordinal() as f64))
    }

    fn never_called(_: &ArchEncoding, _: &mut Stream) -> Result<ProxyScore> {
        panic!("scorer must not be called")
    }

    fn member(fit: f64, birth: u64) -> Individual {
        Individual {
            arch: ArchEncoding::from_ordinal(birth as usize).unwrap(),
            fitness: Some(fit),
            test_acc: Some(fit),
            proxy: ProxyScore::sentinel(),
            birth_index: birth,
            origin: Origin::Init,
        }
    }

    fn small(cycles: usize) -> SearchConfig {
        SearchConfig {
            pop_size: 10,
            tournament_size: 5,
            cycles,
            ..SearchConfig::default()
        }
    }

    #[test]
    fn tournament_picks_best_with_expected_frequency() {
        let pop = Population::from_members((0..10).map(|i| member(i as f64, i)));
        let cfg = small(20);
        let mut rng = Stream::new(3);
        let trials = 100_000;
        let hits = (0..trials)
            .filter(|_| tournament_select(&pop, &cfg, &mut rng).birth_index == 9)
            .count();
        let p = 1.0 - 0.9f64.powi(5);
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        let freq = hits as f64 / trials as f64;
        assert!((freq - p).abs() < 4.0 * sigma, "freq {freq} vs {p}");
    }

    #[test]
    fn tournament_ties_go_to_first_drawn() {
        let pop = Population::from_members((0..4).map(|i| member(1.0, i)));
        let cfg = SearchConfig { tournament_size: 3, ..small(20) };
        let mut a = Stream::new(9);
        let mut b = a;
        let winner = tournament_select(&pop, &cfg, &mut a).birth_index;
        assert_eq!(winner as usize, b.index(4));
    }

    #[test]
    fn deterministic_parent_modes() {
        let pop = Population::from_members([member(3.0, 0), member(7.0, 1), member(7.0, 2), member(1.0, 3)]);
        let mut rng = Stream::new(0);
        let hi = SearchConfig { parent_mode: ParentMode::Highest, ..small(20) };
        let lo = SearchConfig { parent_mode: ParentMode::Lowest, ..small(20) };
        assert_eq!(tournament_select(&pop, &hi, &mut rng).birth_index, 1);
        assert_eq!(tournament_select(&pop, &lo, &mut rng).birth_index, 3);
        assert_eq!(rng.draws(), 0);
    }

    #[test]
    fn removal_modes() {
        let base = Population::from_members([member(3.0, 0), member(9.0, 1), member(1.0, 2), member(9.0, 3)]);
        for (mode, gone) in [(RemovalMode::Oldest, 0), (RemovalMode::Highest, 1), (RemovalMode::Lowest, 2)] {
            let mut pop = base.clone();
            let cfg = SearchConfig { removal_mode: mode, ..small(20) };
            assert_eq!(remove_survivor(&mut pop, &cfg).birth_index, gone);
            assert_eq!(pop.len(), 3);
        }
    }

    #[test]
    fn best_scoring_child_is_kept() {
        let parent = member(50.0, 0);
        let cfg = small(20);
        let rng = Stream::new(17);
        let generation = spawn_generation(&parent, &cfg, &ordinal_scorer, &rng).unwrap();
        assert_eq!(generation.children.len(), 10);
        assert_eq!(generation.proxy_evaluations, 10);
        let best = generation.children.iter().map(|c| c.0.ordinal()).max().unwrap();
        assert_eq!(generation.arch.ordinal(), best);
        assert_eq!(generation.children[generation.child_index].0, generation.arch);
        for (child, _) in &generation.children {
            assert_eq!(child.hamming(&parent.arch), 1);
        }
    }

    #[test]
    fn child_ties_and_sentinels_resolve_to_lowest_index() {
        let parent = member(50.0, 0);
        let cfg = small(20);
        let rng = Stream::new(5);
        let flat = |_: &ArchEncoding, _: &mut Stream| Ok(ProxyScore::finite(1.0));
        assert_eq!(spawn_generation(&parent, &cfg, &flat, &rng).unwrap().child_index, 0);
        let dead = |_: &ArchEncoding, _: &mut Stream| Ok(ProxyScore::sentinel());
        assert_eq!(spawn_generation(&parent, &cfg, &dead, &rng).unwrap().child_index, 0);
        let mostly_dead = |a: &ArchEncoding, _: &mut Stream| {
            Ok(if a.ordinal() % 3 == 0 { ProxyScore::finite(-1e9) } else { ProxyScore::sentinel() })
        };
        let g = spawn_generation(&parent, &cfg, &mostly_dead, &rng).unwrap();
        if let Some(j) = g.children.iter().position(|c| c.0.ordinal() % 3 == 0) {
            assert_eq!(g.child_index, j);
        }
    }

    #[test]
    fn init_keeps_top_candidates_by_proxy() {
        let cfg = SearchConfig { cycles: 200, ..small(200) };
        let rng = Stream::new(11);
        let out = init_population(&cfg, &HashOracle, &ordinal_scorer, &rng).unwrap();
        assert_eq!(out.candidates.len(), 200);
        assert_eq!(out.proxy_evaluations, 200);
        let mut ranked: Vec<&Individual> = out.candidates.iter().collect();
        ranked.sort_by(|a, b| b.arch.ordinal().cmp(&a.arch.ordinal()).then(a.birth_index.cmp(&b.birth_index)));
        let mut expected: Vec<u64> = ranked[..10].iter().map(|c| c.birth_index).collect();
        expected.sort_unstable();
        let kept: Vec<u64> = out.population.members().map(|m| m.birth_index).collect();
        assert_eq!(kept, expected);
        assert!(out.population.members().all(|m| m.fitness.is_some()));
    }

    #[test]
    fn run_accounting_invariants() {
        let cfg = small(60);
        let traj = run_search(&cfg, &HashOracle, &ordinal_scorer, &Stream::new(2), None).unwrap();
        assert_eq!(traj.events.len(), 60);
        assert_eq!(traj.cycles_executed, 50);
        assert_eq!(traj.proxy_evaluations, 60 + 50 * 10);
        let train: f64 = traj.events.iter().map(|e| HashOracle.query(&e.arch).train_time_s).sum();
        assert!((traj.train_time_s - train).abs() < 1e-9);
        assert!((traj.proxy_time_s - 0.05 * 560.0).abs() < 1e-9);
        assert_eq!(traj.events.last().unwrap().simulated_time_s, traj.simulated_time_s());
        for w in traj.events.windows(2) {
            assert!(w[1].best_so_far >= w[0].best_so_far);
            assert!(w[1].simulated_time_s > w[0].simulated_time_s);
        }
        let best = traj.events.iter().map(|e| e.fitness).fold(f64::MIN, f64::max);
        assert_eq!(traj.final_fitness(), best);
        assert_eq!(traj.curve().len(), 51);
    }

    #[test]
    fn unguided_run_is_plain_regularized_evolution() {
        let cfg = SearchConfig::rea(10, 5, 40);
        let traj = run_search(&cfg, &HashOracle, &never_called, &Stream::new(4), None).unwrap();
        assert_eq!(traj.proxy_evaluations, 0);
        assert_eq!(traj.proxy_time_s, 0.0);
        assert_eq!(traj.events.len(), 40);
    }

    #[test]
    fn budget_excluding_init_runs_all_cycles() {
        let cfg = SearchConfig { budget_counts_init: false, ..SearchConfig::rea(10, 5, 30) };
        let traj = run_search(&cfg, &HashOracle, &never_called, &Stream::new(4), None).unwrap();
        assert_eq!(traj.cycles_executed, 30);
        assert_eq!(traj.events.len(), 40);
    }

    #[test]
    fn execution_modes_agree() {
        let seq = SearchConfig { execution: Execution::Sequential, ..small(50) };
        let par = SearchConfig { execution: Execution::Parallel, ..small(50) };
        let a = run_search(&seq, &HashOracle, &ordinal_scorer, &Stream::new(8), None).unwrap();
        let b = run_search(&par, &HashOracle, &ordinal_scorer, &Stream::new(8), None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn random_search_finds_max_of_samples() {
        let cfg = small(100);
        let traj = random_search(&cfg, &HashOracle, &Stream::new(1)).unwrap();
        assert_eq!(traj.events.len(), 100);
        assert_eq!(traj.proxy_evaluations, 0);
        let best = traj.events.iter().map(|e| e.fitness).fold(f64::MIN, f64::max);
        assert_eq!(traj.final_fitness(), best);
        assert_eq!(traj.curve().len(), 1 + traj.cycles_executed);
    }

    #[test]
    fn checkpoint_round_trip_and_transfer() {
        let cfg = small(40);
        let (_, pop) = run_search_with_population(&cfg, &HashOracle, &ordinal_scorer, &Stream::new(6), None).unwrap();
        assert_eq!(pop.len(), 10);
        let json = checkpoint_to_json(&pop).unwrap();
        let back = checkpoint_from_json(&json).unwrap();
        let strip = |p: &Population| -> Vec<(ArchEncoding, Option<f64>, Option<f64>, u64)> {
            p.members().map(|m| (m.arch, m.fitness, m.proxy.value, m.birth_index)).collect()
        };
        assert_eq!(strip(&back), strip(&pop));

        let max_birth = pop.members().map(|m| m.birth_index).max().unwrap();
        let transfer_cfg = SearchConfig { budget_counts_init: false, ..small(5) };
        let (traj, after) =
            run_search_with_population(&transfer_cfg, &HashOracle, &ordinal_scorer, &Stream::new(7), Some(&back))
                .unwrap();
        assert_eq!(traj.events.len(), 15);
        assert_eq!(traj.proxy_evaluations, 50);
        assert!(after.members().filter(|m| m.birth_index > max_birth).count() == 5);
    }

    #[test]
    fn checkpoint_rejects_foreign_space() {
        let json = r#"{"space":{"nodes":5,"ops":["none"]},"individuals":[]}"#;
        assert!(matches!(checkpoint_from_json(json), Err(Error::SpaceMismatch(_))));
        let json = r#"{"space":{"nodes":4,"ops":["none","skip_connect","nor_conv_1x1","nor_conv_3x3","avg_pool_3x3"]},
            "individuals":[{"arch":"|none~0|+|none~0|none~1|+|none~0|none~1|none~2|","fitness":1.0,"proxy":"bogus","birth_index":0}]}"#;
        assert!(checkpoint_from_json(json).is_err());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = [
            SearchConfig { tournament_size: 0, ..small(20) },
            SearchConfig { cycles: 5, ..small(5) },
            SearchConfig { init_candidates: Some(3), ..small(20) },
            SearchConfig { gen_size: Some(0), ..small(20) },
        ];
        for cfg in bad {
            assert!(run_search(&cfg, &HashOracle, &ordinal_scorer, &Stream::new(0), None).is_err());
        }
        assert!(SPACE_SIZE > 0);
    }
}
