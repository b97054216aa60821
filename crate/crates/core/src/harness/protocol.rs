use std::collections::{BTreeSet, HashMap};
use std::ops::Range;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::fit::{
    argmin_grid, dynamic_loss_table, oracle_predictions, score, static_predictions, ActionCounts, DynamicModel, EquilibriumTable,
    SessionPreds,
};
use super::report::{aggregate_rows, CellError, EvalReport, GameRow, LeakageAudit, SweepRow, SweepTable};
use super::roster::ModelKind;
use crate::data::{make_splits, windowize, Corpus, SplitMode, SplitSpec};
use crate::equilibrium::{self, Concept};
use crate::error::{Error, Result};
use crate::game::{Game2x2, MixedStrategy};
use crate::metrics::MetricSums;
use crate::neural::{encode_samples, train, EncodedSet, EncodingMode, FeatureEncoding, ModelSpec};
use crate::seed;

/// A roster entry together with the encoding it uses (ignored by non-neural
/// models).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Entry {
    pub kind: ModelKind,
    pub mode: EncodingMode,
}

impl Entry {
    pub fn label(&self) -> String {
        self.kind.label(self.mode)
    }
}

/// Entries for a roster: neural models once per mode, others once.
pub fn expand_roster(roster: &[ModelKind], modes: &[EncodingMode]) -> Vec<Entry> {
    let mut out = Vec::new();
    for &kind in roster {
        if kind.is_neural() {
            out.extend(modes.iter().map(|&mode| Entry { kind, mode }));
        } else {
            out.push(Entry { kind, mode: EncodingMode::ActionOnly });
        }
    }
    out
}

/// Every session of a corpus windowed and encoded once; each session owns a
/// contiguous block of rows.
pub struct EncodedCorpus {
    pub set: EncodedSet,
    pub ranges: Vec<Range<usize>>,
}

impl EncodedCorpus {
    pub fn build(corpus: &Corpus, enc: FeatureEncoding, trim: usize) -> Result<Self> {
        let mut set = EncodedSet { dim: enc.dim(), features: Vec::new(), targets: Vec::new(), groups: Vec::new() };
        let mut ranges = Vec::with_capacity(corpus.sessions.len());
        let mut next_group = 0u32;
        for s in &corpus.sessions {
            let game = corpus.game(&s.game_id).ok_or_else(|| Error::Validation(format!("unknown game {}", s.game_id)))?;
            let samples = windowize(std::slice::from_ref(s), game, enc.k, trim)?;
            let part = encode_samples(&samples, std::slice::from_ref(game), enc)?;
            let start = set.len();
            set.features.extend_from_slice(&part.features);
            set.targets.extend_from_slice(&part.targets);
            set.groups.extend(part.groups.iter().map(|g| g + next_group));
            next_group += part.groups.iter().max().map_or(0, |g| g + 1);
            ranges.push(start..set.len());
        }
        Ok(Self { set, ranges })
    }

    fn rows(&self, sessions: &[usize]) -> Vec<usize> {
        sessions.iter().flat_map(|&s| self.ranges[s].clone()).collect()
    }
}

/// Per-corpus state shared by every cell of a run.
struct Context<'a> {
    config: &'a ExperimentConfig,
    corpus: &'a Corpus,
    k: usize,
    game_of: Vec<usize>,
    counts: Vec<ActionCounts>,
    dynamic: HashMap<ModelKind, (Vec<DynamicModel>, Vec<Vec<f64>>)>,
    equilibria: HashMap<ModelKind, EquilibriumTable>,
    encoded: HashMap<EncodingMode, EncodedCorpus>,
}

/// Sessions scored together, with the sessions that informed the forecast.
struct Unit {
    sums: MetricSums,
    train: Vec<usize>,
    test: Vec<usize>,
}

struct Cell {
    entry: Entry,
    split: SplitSpec,
}

struct CellOutcome {
    label: String,
    game: String,
    split: String,
    result: Result<Vec<Unit>>,
}

impl<'a> Context<'a> {
    fn new(config: &'a ExperimentConfig, corpus: &'a Corpus, entries: &[Entry], k: usize) -> Result<Self> {
        let game_of = corpus
            .sessions
            .iter()
            .map(|s| {
                corpus
                    .games
                    .iter()
                    .position(|g| g.id == s.game_id)
                    .ok_or_else(|| Error::Validation(format!("unknown game {}", s.game_id)))
            })
            .collect::<Result<Vec<_>>>()?;
        let counts = corpus.sessions.iter().map(|s| ActionCounts::of(s, config.trim)).collect();
        let mut ctx = Self {
            config,
            corpus,
            k,
            game_of,
            counts,
            dynamic: HashMap::new(),
            equilibria: HashMap::new(),
            encoded: HashMap::new(),
        };
        let games: Vec<&Game2x2> = ctx.game_of.iter().map(|&g| &corpus.games[g]).collect();
        for e in entries {
            if let Some(grid) = DynamicModel::grid(e.kind) {
                ctx.dynamic.entry(e.kind).or_insert_with(|| {
                    let table = dynamic_loss_table(&grid, &games, &corpus.sessions, config.trim);
                    (grid, table)
                });
            }
            if let Some(c) = e.kind.concept().filter(|c| *c != Concept::Nash) {
                ctx.equilibria.entry(e.kind).or_insert_with(|| EquilibriumTable::build(c, &corpus.games));
            }
            if e.kind.is_neural() && !ctx.encoded.contains_key(&e.mode) {
                let enc = EncodedCorpus::build(corpus, FeatureEncoding::new(e.mode, k), config.trim)?;
                ctx.encoded.insert(e.mode, enc);
            }
        }
        Ok(ctx)
    }

    fn sessions_where(&self, f: impl Fn(&crate::data::Session) -> bool) -> Vec<usize> {
        (0..self.corpus.sessions.len()).filter(|&i| f(&self.corpus.sessions[i])).collect()
    }

    fn game_index(&self, id: &str) -> usize {
        self.corpus.games.iter().position(|g| g.id == id).expect("split games come from the corpus")
    }

    fn pooled(&self, sessions: &[usize]) -> ActionCounts {
        let mut c = ActionCounts::default();
        for &s in sessions {
            c.add(&self.counts[s]);
        }
        c
    }

    /// Training sessions grouped by game, with pooled counts.
    fn counts_by_game(&self, sessions: &[usize]) -> Vec<(usize, ActionCounts)> {
        let mut out: Vec<(usize, ActionCounts)> = Vec::new();
        for &s in sessions {
            let g = self.game_of[s];
            match out.iter_mut().find(|(x, _)| *x == g) {
                Some((_, c)) => c.add(&self.counts[s]),
                None => out.push((g, self.counts[s])),
            }
        }
        out
    }

    fn score_sessions(&self, sessions: &[usize], mut preds: impl FnMut(usize) -> Result<SessionPreds>) -> Result<MetricSums> {
        let mut sums = MetricSums::default();
        for &s in sessions {
            let session = &self.corpus.sessions[s];
            let p = preds(s)?;
            sums += score(&self.corpus.games[self.game_of[s]], session, self.config.trim, &p)?;
        }
        Ok(sums)
    }

    fn static_unit(&self, train: Vec<usize>, test: Vec<usize>, row: MixedStrategy, col: MixedStrategy) -> Result<Unit> {
        let trim = self.config.trim;
        let sums = self.score_sessions(&test, |s| Ok(static_predictions(&self.corpus.sessions[s], trim, row, col)))?;
        Ok(Unit { sums, train, test })
    }

    fn run_cell(&self, cell: &Cell) -> Result<Vec<Unit>> {
        let split = &cell.split;
        let train = self.sessions_where(|s| split.is_train(s));
        let test = self.sessions_where(|s| split.is_test(s));
        if test.is_empty() {
            return Err(Error::Validation(format!("split {} has no test sessions", split.label())));
        }
        let test_game = self.game_index(&split.test_game);
        let game = &self.corpus.games[test_game];
        let trim = self.config.trim;
        let kind = cell.entry.kind;
        let unit = match kind {
            ModelKind::Random => self.static_unit(vec![], test, MixedStrategy::UNIFORM, MixedStrategy::UNIFORM)?,
            ModelKind::Oracle => {
                let sums = self.score_sessions(&test, |s| Ok(oracle_predictions(&self.corpus.sessions[s], trim)))?;
                Unit { sums, train: vec![], test }
            }
            ModelKind::BestStatic => {
                let (row, col) = self.pooled(&test).frequencies()?;
                self.static_unit(vec![], test, row, col)?
            }
            ModelKind::BestStaticTrain => {
                let (row, col) = self.pooled(&train).frequencies()?;
                self.static_unit(train, test, row, col)?
            }
            ModelKind::Nash => {
                let eq = equilibrium::nash_mixed(game)?;
                self.static_unit(vec![], test, eq.row, eq.col)?
            }
            ModelKind::Qre | ModelKind::Pse | ModelKind::Ase | ModelKind::Ibe => {
                let table = &self.equilibria[&kind];
                let by_game = self.counts_by_game(&train);
                let i = if table.grid.len() == 1 { 0 } else { table.fit(&by_game)? };
                // a held-out game seen in training (game-specific protocol)
                // keeps its best-fitting fixed point
                let profile = match by_game.iter().find(|(g, _)| *g == test_game) {
                    Some((_, c)) => match &table.solutions[i][test_game] {
                        Ok(ps) => ps
                            .iter()
                            .min_by(|a, b| c.loss(a.row, a.col).total_cmp(&c.loss(b.row, b.col)))
                            .copied()
                            .ok_or_else(|| Error::Inapplicable { concept: kind.to_string(), reason: "no fixed point".into() })?,
                        Err(e) => return Err(Error::Inapplicable { concept: kind.to_string(), reason: e.clone() }),
                    },
                    None => table.select(i, test_game)?,
                };
                self.static_unit(train, test, profile.row, profile.col)?
            }
            ModelKind::Rl | ModelKind::Nfp | ModelKind::Inertia | ModelKind::Mf => {
                let (grid, table) = &self.dynamic[&kind];
                let i = argmin_grid(table, &train).ok_or_else(|| Error::Validation(format!("no finite training loss for {kind}")))?;
                let m = grid[i];
                let sums = self.score_sessions(&test, |s| Ok(m.predictions(&self.corpus.games[self.game_of[s]], &self.corpus.sessions[s], trim)))?;
                Unit { sums, train, test }
            }
            ModelKind::Mlp | ModelKind::Cnn => self.neural_unit(cell, train, test)?,
            ModelKind::CnnGs => {
                // trained on other sessions of the held-out game, one network
                // per held-out session
                let same_game = self.sessions_where(|s| s.game_id == split.test_game);
                if same_game.len() < 2 {
                    return Err(Error::Config(format!("cnn_gs needs at least 2 sessions of game {}", split.test_game)));
                }
                let mut units = Vec::new();
                for &s in &test {
                    let tr: Vec<usize> = same_game.iter().copied().filter(|&x| x != s).collect();
                    units.push(self.neural_unit(cell, tr, vec![s])?);
                }
                return Ok(units);
            }
        };
        Ok(vec![unit])
    }

    fn neural_unit(&self, cell: &Cell, train_sessions: Vec<usize>, test: Vec<usize>) -> Result<Unit> {
        if train_sessions.is_empty() {
            return Err(Error::Validation(format!("split {} has no training sessions", cell.split.label())));
        }
        let entry = cell.entry;
        let arch = entry.kind.architecture().expect("neural entry");
        let spec = ModelSpec { architecture: arch, ..ModelSpec::mlp(FeatureEncoding::new(entry.mode, self.k)) };
        let enc = &self.encoded[&entry.mode];
        let train_set = enc.set.subset(&enc.rows(&train_sessions));
        let test_names: Vec<&str> = test.iter().map(|&s| self.corpus.sessions[s].session_id.as_str()).collect();
        let label = format!("train/{}/k{}/{}/{}", entry.label(), self.k, cell.split.test_game, test_names.join("+"));
        let config = crate::neural::TrainConfig { seed: seed::derive(self.config.seed, &label), ..self.config.training.clone() };
        let (model, _) = train(&spec, &train_set, &config)?;
        let sums = self.score_sessions(&test, |s| {
            let preds = model.predict_set(&enc.set.subset(&enc.rows(&[s])))?;
            Ok(by_pair(&preds, self.corpus.sessions[s].pairs.len()))
        })?;
        Ok(Unit { sums, train: train_sessions, test })
    }
}

/// Regroups forecasts in sample order (pair, period, role) per pair.
fn by_pair(preds: &[MixedStrategy], pairs: usize) -> SessionPreds {
    let per_pair = (preds.len() / pairs.max(1)).max(1);
    preds.chunks(per_pair).map(|c| c.chunks_exact(2).map(|p| [p[0], p[1]]).collect()).collect()
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Runs every entry on every split of `mode` and assembles the report.
pub fn run_protocol(config: &ExperimentConfig, corpus: &Corpus, mode: SplitMode, entries: &[Entry], k: usize) -> Result<EvalReport> {
    if entries.is_empty() {
        return Err(Error::Config("model roster is empty".into()));
    }
    let splits = make_splits(&corpus.sessions, mode)?;
    pool(config.jobs())?.install(|| {
        let ctx = Context::new(config, corpus, entries, k)?;
        let cells: Vec<Cell> = entries
            .iter()
            .flat_map(|&entry| splits.iter().map(move |split| Cell { entry, split: split.clone() }))
            .collect();
        let outcomes: Vec<CellOutcome> = cells
            .par_iter()
            .map(|cell| CellOutcome {
                label: cell.entry.label(),
                game: cell.split.test_game.clone(),
                split: cell.split.label(),
                result: ctx.run_cell(cell),
            })
            .collect();
        Ok(assemble(&ctx, mode, k, outcomes))
    })
}

type UnitGroup = ((String, String), Vec<(f64, f64, f64)>, usize);

fn assemble(ctx: &Context, mode: SplitMode, k: usize, outcomes: Vec<CellOutcome>) -> EvalReport {
    let tag = |s: usize| {
        let x = &ctx.corpus.sessions[s];
        (x.game_id.clone(), x.session_id.clone())
    };
    let mut audit = LeakageAudit::default();
    let mut errors = Vec::new();
    // (label, game) -> (unit metrics, steps); kept in first-seen order
    let mut groups: Vec<UnitGroup> = Vec::new();
    let mut failed: BTreeSet<(String, String)> = BTreeSet::new();
    for o in outcomes {
        let units = match o.result {
            Ok(u) => u,
            Err(e) => {
                errors.push(CellError { model: o.label.clone(), split: o.split, message: e.to_string() });
                failed.insert((o.label, o.game));
                continue;
            }
        };
        let key = (o.label.clone(), o.game.clone());
        let mut metrics = Vec::new();
        let mut steps = 0;
        let mut bad = None;
        for u in &units {
            audit.cells += 1;
            let train: BTreeSet<_> = u.train.iter().map(|&s| tag(s)).collect();
            for t in u.test.iter().map(|&s| tag(s)) {
                if train.contains(&t) {
                    audit.violations.push(format!("{} on {}: session {}/{} used for training and testing", o.label, o.split, t.0, t.1));
                }
            }
            match u.sums.econ.ratio() {
                Ok(v) => metrics.push((u.sums.mean_loss(), u.sums.accuracy(), v)),
                Err(e) => bad = Some(e),
            }
            steps += u.sums.steps;
        }
        if let Some(e) = bad {
            errors.push(CellError { model: o.label.clone(), split: o.split, message: e.to_string() });
            failed.insert(key);
            continue;
        }
        match groups.iter_mut().find(|(k, _, _)| *k == key) {
            Some((_, m, s)) => {
                m.extend(metrics);
                *s += steps;
            }
            None => groups.push((key, metrics, steps)),
        }
    }
    debug_assert!(audit.is_clean(), "leakage: {:?}", audit.violations);
    let rows: Vec<GameRow> = groups
        .into_iter()
        .filter(|(key, _, _)| !failed.contains(key))
        .map(|((model, game), m, steps)| {
            let n = m.len() as f64;
            GameRow {
                model,
                game,
                steps,
                loss: m.iter().map(|x| x.0).sum::<f64>() / n,
                accuracy: m.iter().map(|x| x.1).sum::<f64>() / n,
                econ_value: m.iter().map(|x| x.2).sum::<f64>() / n,
            }
        })
        .collect();
    EvalReport { protocol: mode, k, aggregates: aggregate_rows(&rows), rows, errors, audit }
}

/// Leave-one-game-out evaluation of the configured roster.
pub fn run_cross_game(config: &ExperimentConfig, corpus: &Corpus) -> Result<EvalReport> {
    config.validate()?;
    run_protocol(config, corpus, SplitMode::CrossGame, &expand_roster(&config.roster, &config.modes), config.k)
}

/// Leave-one-session-out evaluation within each game.
pub fn run_game_specific(config: &ExperimentConfig, corpus: &Corpus) -> Result<EvalReport> {
    config.validate()?;
    run_protocol(config, corpus, SplitMode::GameSpecific, &expand_roster(&config.roster, &config.modes), config.k)
}

/// Cross-game runs of the roster's networks for every `(k, mode)`. The CNN
/// needs `k >= 9`; shorter histories use the MLP in its place. Without a
/// network in the roster the CNN is used.
pub fn sweep_history_length(config: &ExperimentConfig, corpus: &Corpus) -> Result<SweepTable> {
    let mut nets: Vec<ModelKind> = config.roster.iter().copied().filter(|m| matches!(m, ModelKind::Mlp | ModelKind::Cnn)).collect();
    if nets.is_empty() {
        nets.push(ModelKind::Cnn);
    }
    let mut table = SweepTable::default();
    for &k in &config.sweep_k {
        if k == 0 {
            return Err(Error::Config("history lengths must be at least 1".into()));
        }
        for &mode in &config.modes {
            let mut kinds: Vec<ModelKind> = Vec::new();
            for &n in &nets {
                let n = if n.architecture().is_some_and(|a| k < a.min_k()) { ModelKind::Mlp } else { n };
                if !kinds.contains(&n) {
                    kinds.push(n);
                }
            }
            let entries: Vec<Entry> = kinds.iter().map(|&kind| Entry { kind, mode }).collect();
            let report = run_protocol(config, corpus, SplitMode::CrossGame, &entries, k)?;
            table.errors.extend(report.errors);
            table.audit.cells += report.audit.cells;
            table.audit.violations.extend(report.audit.violations);
            for e in &entries {
                if let Some(a) = report.aggregates.iter().find(|a| a.model == e.label()) {
                    table.rows.push(SweepRow {
                        k,
                        mode: mode.to_string(),
                        model: e.kind.name().into(),
                        steps: a.steps,
                        loss: a.loss,
                        accuracy: a.accuracy,
                        econ_value: a.econ_value,
                    });
                }
            }
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{CorpusShape, Generator, PlayerPair, Session};
    use crate::game::Action;
    use crate::harness::config::{CorpusConfig, SyntheticConfig};

    fn config(generator: Generator, roster: Vec<ModelKind>, shape: CorpusShape) -> ExperimentConfig {
        let text = "roster = [\"random\"]\n[corpus]\ngames = \"g\"\nsessions = \"s\"\n";
        let mut c = ExperimentConfig::from_toml(text).unwrap();
        c.roster = roster;
        c.seed = 17;
        c.k = 9;
        c.corpus = CorpusConfig { games: None, sessions: None, synthetic: Some(SyntheticConfig { generator, shape }) };
        c.training.max_epochs = 2;
        c.training.max_batches_per_epoch = Some(4);
        c.validate().unwrap();
        c
    }

    #[test]
    fn random_model_scores_log_two() {
        let cfg = config(Generator::Iid { p: 0.5 }, vec![ModelKind::Random], CorpusShape::uniform(3, 2, 2, 40));
        let corpus = cfg.build_corpus().unwrap();
        let r = run_cross_game(&cfg, &corpus).unwrap();
        assert_eq!(r.rows.len(), 3);
        for row in &r.rows {
            assert!((row.loss - std::f64::consts::LN_2).abs() < 1e-12);
            assert!((0.0..=100.0).contains(&row.accuracy));
            assert_eq!(row.steps, 2 * 2 * 2 * 20);
        }
    }

    #[test]
    fn test_empirical_best_static_on_iid() {
        let cfg = config(Generator::Iid { p: 0.7 }, vec![ModelKind::BestStatic, ModelKind::BestStaticTrain], CorpusShape::uniform(3, 4, 4, 200));
        let corpus = cfg.build_corpus().unwrap();
        let r = run_cross_game(&cfg, &corpus).unwrap();
        let a = r.aggregate("best_static_test_empirical").unwrap();
        let n = a.steps as f64;
        assert!((a.accuracy - 70.0).abs() < 100.0 * 3.0 * (0.21 / n).sqrt() + 0.5, "{a:?}");
        let t = r.aggregate("best_static_train").unwrap();
        assert!((t.accuracy - 70.0).abs() < 2.0, "{t:?}");
    }

    #[test]
    fn both_protocols_are_leak_free_and_oracle_is_perfect() {
        let roster = vec![
            ModelKind::Oracle,
            ModelKind::Nash,
            ModelKind::Qre,
            ModelKind::Ibe,
            ModelKind::BestStaticTrain,
            ModelKind::Inertia,
            ModelKind::Mf,
            ModelKind::Mlp,
            ModelKind::CnnGs,
        ];
        let cfg = config(Generator::InertiaAgent { stay_prob: 0.8 }, roster, CorpusShape::uniform(2, 3, 1, 40));
        let corpus = cfg.build_corpus().unwrap();
        for r in [run_cross_game(&cfg, &corpus).unwrap(), run_game_specific(&cfg, &corpus).unwrap()] {
            assert!(r.succeeded(), "{:?}", r.errors);
            assert!(r.audit.is_clean());
            assert!(r.audit.cells >= r.rows.len());
            for row in r.rows.iter().filter(|x| x.model == "oracle") {
                assert_eq!(row.econ_value, 100.0);
                assert_eq!(row.accuracy, 100.0);
            }
            assert_eq!(r.rows.len(), 9 * 2);
        }
    }

    #[test]
    fn failing_cells_are_isolated() {
        // a game whose only equilibrium is pure has no mixed Nash profile
        let pure = Game2x2::new("p", [[3.0, 3.0], [0.0, 0.0]], [[3.0, 0.0], [3.0, 0.0]]).unwrap();
        let mixed = Game2x2 { id: "m".into(), ..Game2x2::matching_pennies() };
        let seq = |n: usize| (0..n).map(|t| Action::from_index((t % 3 == 0) as u8).unwrap()).collect::<Vec<_>>();
        let pair = PlayerPair { row: seq(30), col: seq(30) };
        let mut sessions = Vec::new();
        for g in ["p", "m"] {
            for s in 1..=2 {
                sessions.push(Session::new(g, s.to_string(), vec![pair.clone()], 30).unwrap());
            }
        }
        let corpus = Corpus::new(vec![pure, mixed], sessions).unwrap();
        let cfg = config(Generator::Iid { p: 0.5 }, vec![ModelKind::Nash, ModelKind::Random], CorpusShape::uniform(1, 1, 1, 30));
        let r = run_cross_game(&cfg, &corpus).unwrap();
        assert_eq!(r.errors.len(), 1);
        assert_eq!(r.errors[0].model, "nash");
        assert!(r.row("nash", "m").is_some() && r.row("nash", "p").is_none());
        assert_eq!(r.rows.iter().filter(|x| x.model == "random").count(), 2);
    }

    #[test]
    fn identical_sessions_give_identical_session_metrics() {
        let cfg = config(Generator::Iid { p: 0.5 }, vec![ModelKind::Inertia, ModelKind::Qre], CorpusShape::uniform(1, 1, 1, 30));
        let g = Game2x2 { id: "1".into(), ..Game2x2::new("x", [[4.0, 0.0], [1.0, 2.0]], [[0.0, 3.0], [2.0, 1.0]]).unwrap() };
        let s = crate::data::synth_generate(
            &crate::data::SynthSpec { generator: Generator::InertiaAgent { stay_prob: 0.8 }, shape: CorpusShape::uniform(1, 1, 4, 60), games: vec![g.clone()] },
            3,
        )
        .unwrap()
        .remove(0);
        let sessions = (1..=12).map(|i| Session { session_id: i.to_string(), ..s.clone() }).collect();
        let corpus = Corpus::new(vec![g], sessions).unwrap();
        let entries = expand_roster(&cfg.roster, &cfg.modes);
        let ctx = Context::new(&cfg, &corpus, &entries, cfg.k).unwrap();
        for entry in entries {
            let losses: Vec<f64> = make_splits(&corpus.sessions, SplitMode::GameSpecific)
                .unwrap()
                .into_iter()
                .map(|split| ctx.run_cell(&Cell { entry, split }).unwrap()[0].sums.mean_loss())
                .collect();
            let mean = losses.iter().sum::<f64>() / 12.0;
            let var = losses.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / 12.0;
            assert!(var < 1e-20, "{entry:?} {losses:?}");
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let cfg = config(Generator::InertiaAgent { stay_prob: 0.9 }, vec![ModelKind::Cnn, ModelKind::Rl], CorpusShape::uniform(2, 2, 1, 40));
        let corpus = cfg.build_corpus().unwrap();
        let a = run_cross_game(&cfg, &corpus).unwrap();
        let b = run_cross_game(&cfg, &corpus).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 4);
    }

    #[test]
    fn sweep_falls_back_to_mlp_below_nine() {
        let mut cfg = config(Generator::InertiaAgent { stay_prob: 0.9 }, vec![ModelKind::Cnn], CorpusShape::uniform(2, 1, 1, 40));
        cfg.sweep_k = vec![1, 9];
        let corpus = cfg.build_corpus().unwrap();
        let t = sweep_history_length(&cfg, &corpus).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!((t.rows[0].k, t.rows[0].model.as_str()), (1, "mlp"));
        assert_eq!((t.rows[1].k, t.rows[1].model.as_str()), (9, "cnn"));
        assert!(t.audit.is_clean());
    }

    #[test]
    fn protocol_preconditions() {
        let cfg = config(Generator::Iid { p: 0.5 }, vec![ModelKind::Random], CorpusShape::uniform(1, 1, 1, 30));
        let corpus = cfg.build_corpus().unwrap();
        assert!(matches!(run_cross_game(&cfg, &corpus), Err(Error::Config(_))));
        assert!(matches!(run_game_specific(&cfg, &corpus), Err(Error::Config(_))));
        assert!(matches!(run_protocol(&cfg, &corpus, SplitMode::CrossGame, &[], 1), Err(Error::Config(_))));
    }
}
