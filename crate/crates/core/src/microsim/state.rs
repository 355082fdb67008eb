use log::debug;
use rand::seq::index::sample;
use rand::Rng;

use super::{listen, speak, Spin};
use crate::error::{invalid, Error, Result};
use crate::geometry::{min_image, Graph};
use crate::rng::{stream_rng, Purpose, SimRng};

/// How the interacting pair is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairSelection {
    /// Speaker uniform over agents, listener uniform over the speaker's
    /// neighbors.
    #[default]
    Node,
    /// Uniform random edge with uniform random orientation.
    Edge,
}

/// Initial opinion layouts.
#[derive(Debug, Clone, PartialEq)]
pub enum Initializer {
    /// Each agent independently A with probability `p_a`, otherwise B.
    RandomAB { p_a: f64 },
    /// A inside the disk, B outside.
    Disk { cx: f64, cy: f64, radius: f64 },
    /// A for `x0 <= x < x1`, B elsewhere.
    Stripe { x0: f64, x1: f64 },
    Uniform(Spin),
    /// `round(q n)` agents committed to `opinion`, everyone else holds the
    /// opposite opinion.
    Committed { q: f64, opinion: Spin },
}

impl Default for Initializer {
    fn default() -> Self {
        Initializer::RandomAB { p_a: 0.5 }
    }
}

#[derive(Debug, Clone)]
pub struct MicroState {
    spins: Vec<Spin>,
    committed: Vec<bool>,
    committed_opinion: Spin,
    counts: [usize; 3],
    interactions: u64,
    rng: SimRng,
    selection: PairSelection,
    resampled_speakers: u64,
}

/// Macroscopic counts at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables {
    pub t: f64,
    pub n_a: usize,
    pub n_b: usize,
    pub n_ab: usize,
    pub magnetization: f64,
    pub domain_size_a: f64,
}

impl Observables {
    pub fn n(&self) -> usize {
        self.n_a + self.n_b + self.n_ab
    }

    pub fn is_consensus(&self) -> bool {
        self.n_a == self.n() || self.n_b == self.n()
    }
}

impl MicroState {
    /// Wraps explicit spins with the given dynamics generator. Nobody is
    /// committed.
    pub fn new(spins: Vec<Spin>, rng: SimRng) -> Self {
        let mut counts = [0; 3];
        for s in &spins {
            counts[s.index()] += 1;
        }
        let n = spins.len();
        MicroState {
            spins,
            committed: vec![false; n],
            committed_opinion: Spin::A,
            counts,
            interactions: 0,
            rng,
            selection: PairSelection::Node,
            resampled_speakers: 0,
        }
    }

    /// Lays out opinions with the init stream of `(seed, replica)` and seeds
    /// the dynamics stream of the same pair.
    pub fn initialize(g: &Graph, init: &Initializer, seed: u64, replica: u64) -> Result<Self> {
        let mut init_rng = stream_rng(seed, Purpose::Init, replica);
        let n = g.n();
        let spins: Vec<Spin> = match *init {
            Initializer::RandomAB { p_a } => {
                if !(0.0..=1.0).contains(&p_a) {
                    return Err(invalid("p_a", format!("must lie in [0,1], got {p_a}")));
                }
                (0..n)
                    .map(|_| if init_rng.gen_bool(p_a) { Spin::A } else { Spin::B })
                    .collect()
            }
            Initializer::Disk { cx, cy, radius } => g
                .positions()
                .iter()
                .map(|p| {
                    let d = min_image(p.x() - cx).hypot(min_image(p.y() - cy));
                    if d < radius {
                        Spin::A
                    } else {
                        Spin::B
                    }
                })
                .collect(),
            Initializer::Stripe { x0, x1 } => g
                .positions()
                .iter()
                .map(|p| if p.x() >= x0 && p.x() < x1 { Spin::A } else { Spin::B })
                .collect(),
            Initializer::Uniform(s) => vec![s; n],
            Initializer::Committed { .. } => vec![Spin::B; n],
        };
        let mut state = MicroState::new(spins, stream_rng(seed, Purpose::Dynamics, replica));
        if let Initializer::Committed { q, opinion } = *init {
            let mut rng = stream_rng(seed, Purpose::Committed, replica);
            seed_committed(&mut state, q, opinion, &mut rng)?;
        }
        Ok(state)
    }

    pub fn with_selection(mut self, selection: PairSelection) -> Self {
        self.selection = selection;
        self
    }

    pub fn n(&self) -> usize {
        self.spins.len()
    }

    pub fn spins(&self) -> &[Spin] {
        &self.spins
    }

    pub fn spin(&self, i: usize) -> Spin {
        self.spins[i]
    }

    pub fn is_committed(&self, i: usize) -> bool {
        self.committed[i]
    }

    pub fn committed_count(&self) -> usize {
        self.committed.iter().filter(|&&c| c).count()
    }

    pub fn committed_opinion(&self) -> Spin {
        self.committed_opinion
    }

    pub fn count(&self, s: Spin) -> usize {
        self.counts[s.index()]
    }

    pub fn interactions(&self) -> u64 {
        self.interactions
    }

    /// Elapsed time; one unit is `n` interactions.
    pub fn t(&self) -> f64 {
        self.interactions as f64 / self.n() as f64
    }

    /// How many times a drawn speaker had no neighbors and was redrawn.
    pub fn resampled_speakers(&self) -> u64 {
        self.resampled_speakers
    }

    pub fn is_consensus(&self) -> bool {
        let n = self.n();
        self.count(Spin::A) == n || self.count(Spin::B) == n
    }

    pub fn observables(&self) -> Observables {
        let n = self.n() as f64;
        let (a, b, ab) = (self.count(Spin::A), self.count(Spin::B), self.count(Spin::AB));
        Observables {
            t: self.t(),
            n_a: a,
            n_b: b,
            n_ab: ab,
            magnetization: (a as f64 - b as f64) / n,
            domain_size_a: (a as f64 + 0.5 * ab as f64) / n,
        }
    }

    fn set_spin(&mut self, i: usize, s: Spin) {
        self.counts[self.spins[i].index()] -= 1;
        self.counts[s.index()] += 1;
        self.spins[i] = s;
    }

    fn draw_pair(&mut self, g: &Graph) -> Result<(usize, usize)> {
        if g.edge_count() == 0 {
            return Err(Error::AllIsolated);
        }
        match self.selection {
            PairSelection::Node => loop {
                let speaker = self.rng.gen_range(0..g.n());
                let nb = g.neighbors(speaker);
                if nb.is_empty() {
                    self.resampled_speakers += 1;
                    continue;
                }
                let listener = nb[self.rng.gen_range(0..nb.len())] as usize;
                return Ok((speaker, listener));
            },
            PairSelection::Edge => {
                let k = self.rng.gen_range(0..g.directed_edge_count());
                Ok(g.directed_edge(k))
            }
        }
    }

    /// One speaker–listener interaction. A committed listener keeps its
    /// opinion, but the interaction still advances the clock and consumes
    /// the same random draws.
    pub fn step(&mut self, g: &Graph) -> Result<()> {
        debug_assert_eq!(g.n(), self.n());
        let (speaker, listener) = self.draw_pair(g)?;
        let word = speak(self.spins[speaker], &mut self.rng);
        if !self.committed[listener] {
            let s = listen(self.spins[listener], word);
            if s != self.spins[listener] {
                self.set_spin(listener, s);
            }
        }
        self.interactions += 1;
        Ok(())
    }

    /// Runs `count` interactions.
    pub fn advance(&mut self, g: &Graph, count: u64) -> Result<()> {
        for _ in 0..count {
            self.step(g)?;
        }
        Ok(())
    }
}

/// Samples collected by [`run`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub samples: Vec<Observables>,
    /// True when `stop` ended the run before `t_max`.
    pub stopped: bool,
}

/// Steps the dynamics up to `t_max`, recording observables at `t = 0` and
/// every `sample_every` time units. `stop` is checked at every sample.
pub fn run<F>(state: &mut MicroState, g: &Graph, t_max: f64, sample_every: f64, mut stop: F) -> Result<RunRecord>
where
    F: FnMut(&MicroState) -> bool,
{
    if !(t_max > 0.0) {
        return Err(invalid("t_max", format!("must be positive, got {t_max}")));
    }
    if !(sample_every > 0.0) {
        return Err(invalid("sample_every", format!("must be positive, got {sample_every}")));
    }
    let n = state.n() as f64;
    let per_sample = ((sample_every * n).round() as u64).max(1);
    let end = state.interactions + (t_max * n).round() as u64;
    let mut samples = vec![state.observables()];
    if stop(state) {
        return Ok(RunRecord { samples, stopped: true });
    }
    while state.interactions < end {
        let chunk = per_sample.min(end - state.interactions);
        state.advance(g, chunk)?;
        samples.push(state.observables());
        if stop(state) {
            return Ok(RunRecord { samples, stopped: true });
        }
    }
    if state.resampled_speakers > 0 {
        debug!("{} speakers redrawn because they were isolated", state.resampled_speakers);
    }
    Ok(RunRecord { samples, stopped: false })
}

/// Commits exactly `round(q n)` uniformly chosen agents to `opinion`; all
/// other agents are reset to the opposite opinion and uncommitted.
pub fn seed_committed<R: Rng + ?Sized>(state: &mut MicroState, q: f64, opinion: Spin, rng: &mut R) -> Result<()> {
    if !(0.0..=1.0).contains(&q) {
        return Err(invalid("q", format!("committed fraction must lie in [0,1], got {q}")));
    }
    if opinion == Spin::AB {
        return Err(invalid("opinion", "agents can only be committed to A or B"));
    }
    let n = state.n();
    let k = ((q * n as f64).round() as usize).min(n);
    let other = opinion.opposite();
    for i in 0..n {
        state.committed[i] = false;
        state.set_spin(i, other);
    }
    for i in sample(rng, n, k) {
        state.committed[i] = true;
        state.set_spin(i, opinion);
    }
    state.committed_opinion = opinion;
    Ok(())
}

/// First integer time at which at least a fraction `alpha` of agents hold
/// the same opinion, or `None` if that does not happen by `t_max`.
///
/// With committed agents present the target is their opinion; otherwise
/// either opinion counts.
pub fn alpha_consensus_time(state: &mut MicroState, g: &Graph, alpha: f64, t_max: f64) -> Result<Option<f64>> {
    if !(alpha > 0.5 && alpha <= 1.0) {
        return Err(invalid("alpha", format!("must lie in (0.5, 1], got {alpha}")));
    }
    let n = state.n();
    let threshold = alpha * n as f64;
    let target = (state.committed_count() > 0).then_some(state.committed_opinion);
    let reached = |s: &MicroState| -> bool {
        let count = match target {
            Some(op) => s.count(op),
            None => s.count(Spin::A).max(s.count(Spin::B)),
        };
        count as f64 >= threshold
    };
    let end = state.interactions + (t_max * n as f64).round() as u64;
    loop {
        if reached(state) {
            return Ok(Some(state.t()));
        }
        if state.interactions >= end {
            return Ok(None);
        }
        let chunk = (n as u64).min(end - state.interactions);
        state.advance(g, chunk)?;
    }
}

/// Average spin over the neighbors of node `i`.
pub fn local_mean_field_micro(state: &MicroState, g: &Graph, i: usize) -> Result<f64> {
    let nb = g.neighbors(i);
    if nb.is_empty() {
        return Err(Error::IsolatedNode(i));
    }
    let sum: i64 = nb.iter().map(|&j| state.spins[j as usize].value() as i64).sum();
    Ok(sum as f64 / nb.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_rgg, TorusPoint};
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn pair_graph() -> Graph {
        Graph::from_positions(vec![TorusPoint::new(0.1, 0.1), TorusPoint::new(0.1, 0.15)], 0.1, 0).unwrap()
    }

    fn rng(seed: u64) -> SimRng {
        SimRng::seed_from_u64(seed)
    }

    #[test]
    fn pair_interaction_neutralizes_listener() {
        let g = pair_graph();
        let mut st = MicroState::new(vec![Spin::A, Spin::B], rng(0));
        // whichever node speaks, the other becomes neutral
        st.step(&g).unwrap();
        assert_eq!(st.count(Spin::AB), 1);
        assert!((st.t() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn committed_listener_is_unmoved() {
        let g = pair_graph();
        let mut st = MicroState::new(vec![Spin::A, Spin::B], rng(1));
        st.committed = vec![true, true];
        for _ in 0..100 {
            st.step(&g).unwrap();
        }
        assert_eq!(st.spins(), &[Spin::A, Spin::B]);
        assert_eq!(st.interactions(), 100);
    }

    #[test]
    fn consensus_is_absorbing() {
        let g = build_rgg(500, 0.08, 2).unwrap();
        for s in [Spin::A, Spin::B] {
            let mut st = MicroState::new(vec![s; 500], rng(3));
            st.advance(&g, 10_000).unwrap();
            assert!(st.spins().iter().all(|&x| x == s));
        }
    }

    #[test]
    fn all_isolated_is_an_error() {
        let g = Graph::from_positions(vec![TorusPoint::new(0.1, 0.1), TorusPoint::new(0.6, 0.6)], 0.1, 0).unwrap();
        let mut st = MicroState::new(vec![Spin::A, Spin::B], rng(0));
        assert!(matches!(st.step(&g), Err(Error::AllIsolated)));
    }

    #[test]
    fn isolated_speakers_are_redrawn() {
        let pos = vec![TorusPoint::new(0.1, 0.1), TorusPoint::new(0.1, 0.15), TorusPoint::new(0.6, 0.6)];
        let g = Graph::from_positions(pos, 0.1, 0).unwrap();
        let mut st = MicroState::new(vec![Spin::A, Spin::A, Spin::B], rng(5));
        st.advance(&g, 1000).unwrap();
        assert!(st.resampled_speakers() > 0);
        assert_eq!(st.spin(2), Spin::B);
    }

    #[test]
    fn run_stops_immediately_at_consensus() {
        let g = build_rgg(200, 0.1, 1).unwrap();
        let mut st = MicroState::initialize(&g, &Initializer::Uniform(Spin::A), 1, 0).unwrap();
        let rec = run(&mut st, &g, 100.0, 1.0, MicroState::is_consensus).unwrap();
        assert!(rec.stopped);
        assert_eq!(rec.samples.len(), 1);
        assert_eq!(rec.samples[0].t, 0.0);
        assert!(rec.samples[0].is_consensus());
    }

    #[test]
    fn run_samples_on_schedule() {
        let g = build_rgg(1000, 0.05, 1).unwrap();
        let mut st = MicroState::initialize(&g, &Initializer::default(), 1, 0).unwrap();
        let rec = run(&mut st, &g, 10.0, 2.5, |_| false).unwrap();
        let ts: Vec<f64> = rec.samples.iter().map(|o| o.t).collect();
        assert_eq!(ts, vec![0.0, 2.5, 5.0, 7.5, 10.0]);
        for o in &rec.samples {
            assert_eq!(o.n(), 1000);
            assert!((0.0..=1.0).contains(&o.domain_size_a));
        }
    }

    #[test]
    fn committed_seeding_counts() {
        let g = build_rgg(2000, 0.05, 1).unwrap();
        let mut st = MicroState::initialize(&g, &Initializer::default(), 1, 0).unwrap();
        let mut r = rng(9);
        seed_committed(&mut st, 0.0, Spin::A, &mut r).unwrap();
        assert_eq!(st.committed_count(), 0);
        assert_eq!(st.count(Spin::B), 2000);

        seed_committed(&mut st, 0.1, Spin::A, &mut r).unwrap();
        assert_eq!(st.committed_count(), 200);
        assert_eq!(st.count(Spin::A), 200);
        assert_eq!(st.count(Spin::B), 1800);
        assert!((0..2000).all(|i| st.is_committed(i) == (st.spin(i) == Spin::A)));

        seed_committed(&mut st, 1.0, Spin::A, &mut r).unwrap();
        assert_eq!(st.count(Spin::A), 2000);
        assert!(st.is_consensus());
        assert!(seed_committed(&mut st, 1.5, Spin::A, &mut r).is_err());
    }

    #[test]
    fn alpha_consensus_from_consensus_is_zero() {
        let g = build_rgg(300, 0.1, 1).unwrap();
        let mut st = MicroState::initialize(&g, &Initializer::Uniform(Spin::A), 1, 0).unwrap();
        assert_eq!(alpha_consensus_time(&mut st, &g, 0.9, 10.0).unwrap(), Some(0.0));
        assert!(alpha_consensus_time(&mut st, &g, 0.5, 10.0).is_err());
    }

    #[test]
    fn alpha_consensus_targets_committed_opinion() {
        // 90% of agents hold B at t = 0, which must not count as consensus
        let g = build_rgg(500, 0.1, 1).unwrap();
        let mut st = MicroState::initialize(&g, &Initializer::Committed { q: 0.1, opinion: Spin::A }, 1, 0).unwrap();
        assert_eq!(st.count(Spin::B), 450);
        let t = alpha_consensus_time(&mut st, &g, 0.9, 1.0).unwrap();
        assert_eq!(t, None);
        assert!((st.t() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mean_field_examples() {
        let pos: Vec<TorusPoint> = (0..6).map(|i| TorusPoint::new(0.5 + 0.001 * i as f64, 0.5)).collect();
        let g = Graph::from_positions(pos, 0.05, 0).unwrap();
        let st = MicroState::new(vec![Spin::A, Spin::A, Spin::AB, Spin::AB, Spin::B, Spin::A], rng(0));
        // node 0 sees {+1, 0, 0, -1, +1}
        assert!((local_mean_field_micro(&st, &g, 0).unwrap() - 0.2).abs() < 1e-15);
        let st = MicroState::new(vec![Spin::A; 6], rng(0));
        assert_eq!(local_mean_field_micro(&st, &g, 3).unwrap(), 1.0);

        let g2 = pair_graph();
        let st = MicroState::new(vec![Spin::A, Spin::B], rng(0));
        assert_eq!(local_mean_field_micro(&st, &g2, 0).unwrap(), -1.0);
        let lonely = Graph::from_positions(vec![TorusPoint::new(0.1, 0.1), TorusPoint::new(0.6, 0.6)], 0.1, 0).unwrap();
        assert!(matches!(local_mean_field_micro(&st, &lonely, 0), Err(Error::IsolatedNode(0))));
    }

    #[test]
    fn seeded_runs_are_reproducible() {
        let g = build_rgg(1000, 0.06, 4).unwrap();
        let go = || {
            let mut st = MicroState::initialize(&g, &Initializer::default(), 17, 2).unwrap();
            run(&mut st, &g, 20.0, 1.0, |_| false).unwrap()
        };
        assert_eq!(go(), go());
    }

    #[test]
    fn edge_selection_runs() {
        let g = build_rgg(1000, 0.06, 4).unwrap();
        let mut st = MicroState::initialize(&g, &Initializer::default(), 3, 0).unwrap().with_selection(PairSelection::Edge);
        st.advance(&g, 20_000).unwrap();
        assert_eq!(st.observables().n(), 1000);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn counts_are_conserved_and_committed_are_frozen(seed in any::<u64>(), q in 0.0f64..0.3, edge in any::<bool>()) {
            let g = build_rgg(400, 0.09, seed).unwrap();
            let mut st = MicroState::initialize(&g, &Initializer::Committed { q, opinion: Spin::A }, seed, 0).unwrap();
            if edge {
                st = st.with_selection(PairSelection::Edge);
            }
            let committed: Vec<usize> = (0..400).filter(|&i| st.is_committed(i)).collect();
            for _ in 0..50 {
                st.advance(&g, 97).unwrap();
                let o = st.observables();
                prop_assert_eq!(o.n_a + o.n_b + o.n_ab, 400);
                let recount = st.spins().iter().filter(|&&s| s == Spin::A).count();
                prop_assert_eq!(recount, o.n_a);
                for &i in &committed {
                    prop_assert_eq!(st.spin(i), Spin::A);
                }
            }
        }
    }
}
