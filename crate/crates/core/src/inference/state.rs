use std::collections::{BTreeMap, HashMap};
use std::hash::{BuildHasherDefault, DefaultHasher};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use super::marginal::{restaurant_loglik, GlobalWeights};
use super::PosteriorSample;
use crate::error::{Error, Result};
use crate::math::{ln_rising, sample_categorical, sample_log_categorical, slice_sample};
use crate::model::{
    candidate_start, links_to_clusters, ClusterId, CollapsedCounts, EdgeSequence, Hyperparams,
    Side, TimedEdge, VertexId,
};

type FastMap<K, V> = HashMap<K, V, BuildHasherDefault<DefaultHasher>>;

const SIDES: [Side; 2] = Side::BOTH;

fn side_vertex(e: &TimedEdge, s: usize) -> VertexId {
    if s == 0 {
        e.sender
    } else {
        e.recipient
    }
}

/// One connected component of the link graph with its vertex tallies and
/// cached per-side log marginal likelihood.
#[derive(Debug, Clone, Default)]
struct Component {
    members: Vec<usize>,
    tally: [FastMap<VertexId, u32>; 2],
    loglik: [f64; 2],
}

impl Component {
    fn from_members(members: Vec<usize>, edges: &[TimedEdge]) -> Self {
        let mut c = Component {
            members,
            ..Default::default()
        };
        for &m in &c.members {
            for s in 0..2 {
                *c.tally[s].entry(side_vertex(&edges[m], s)).or_insert(0) += 1;
            }
        }
        c
    }

    fn size(&self) -> u32 {
        self.members.len() as u32
    }

    fn total_loglik(&self) -> f64 {
        self.loglik[0] + self.loglik[1]
    }

    fn refresh(&mut self, beta: &[f64], rest: f64, hp: &Hyperparams) {
        for (s, side) in SIDES.into_iter().enumerate() {
            // sorted so the float sum does not depend on map layout
            let mut cells: Vec<(VertexId, u32)> =
                self.tally[s].iter().map(|(&v, &n)| (v, n)).collect();
            cells.sort_unstable();
            self.loglik[s] =
                restaurant_loglik(cells, |v| weight_of(beta, rest, v), hp.tau_for(side));
        }
    }
}

fn weight_of(beta: &[f64], rest: f64, v: VertexId) -> f64 {
    beta.get(v as usize).copied().unwrap_or(rest)
}

/// Per-side log likelihood of the union of two components.
fn merged_loglik(
    a: &Component,
    b: &Component,
    beta: &[f64],
    rest: f64,
    hp: &Hyperparams,
) -> [f64; 2] {
    let mut out = [0.0; 2];
    for (s, side) in SIDES.into_iter().enumerate() {
        let tau = hp.tau_for(side);
        let (small, large) = if a.tally[s].len() <= b.tally[s].len() {
            (a, b)
        } else {
            (b, a)
        };
        let mut ll = large.loglik[s];
        let mut cells: Vec<(VertexId, u32)> =
            small.tally[s].iter().map(|(&v, &n)| (v, n)).collect();
        cells.sort_unstable();
        for (v, n_small) in cells {
            let n_large = large.tally[s].get(&v).copied().unwrap_or(0);
            let x = tau * weight_of(beta, rest, v);
            ll += ln_rising(x, n_large + n_small) - ln_rising(x, n_large);
        }
        ll += ln_rising(tau, large.size()) - ln_rising(tau, large.size() + small.size());
        out[s] = ll;
    }
    out
}

/// Draws the number of tables for `n` customers of one dish in one
/// restaurant, where `concentration` is `tau * beta_v`: customer `l`
/// (zero-based) opens a table with probability
/// `concentration / (concentration + l)`.
pub fn sample_table_count<R: Rng + ?Sized>(n: u32, concentration: f64, rng: &mut R) -> u32 {
    if n == 0 {
        return 0;
    }
    let mut tables = 1;
    for l in 1..n {
        if rng.random::<f64>() * (concentration + l as f64) < concentration {
            tables += 1;
        }
    }
    tables
}

/// Full state of one Gibbs chain.
///
/// Alongside the links and cluster labels the chain keeps explicit weights
/// of the global vertex distribution. Link moves are exact Gibbs steps given
/// those weights; tables are drawn given the weights and the weights given
/// the tables.
#[derive(Debug, Clone)]
pub struct ChainState {
    edges: Vec<TimedEdge>,
    times: Vec<f64>,
    hp: Hyperparams,
    links: Vec<usize>,
    clusters: Vec<ClusterId>,
    components: BTreeMap<ClusterId, Component>,
    weights: GlobalWeights,
    beta: Vec<f64>,
    counts: CollapsedCounts,
    window_start: Vec<usize>,
    /// Sum of decay weights over the (pruned) earlier customers.
    decay_sums: Vec<f64>,
    rng: ChaCha8Rng,
    sweep_index: usize,
    mark: Vec<bool>,
}

impl ChainState {
    /// Starts from all self-links.
    pub fn new(edges: &EdgeSequence, hp: Hyperparams, rng: ChaCha8Rng) -> Result<Self> {
        Self::from_links(edges, (0..edges.len()).collect(), hp, rng)
    }

    pub fn from_links(
        edges: &EdgeSequence,
        links: Vec<usize>,
        hp: Hyperparams,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        hp.validate()?;
        if links.len() != edges.len() {
            return Err(Error::input("link vector length differs from edge count"));
        }
        let clusters = links_to_clusters(&links)?;
        let times = edges.times();
        let n = edges.len();
        let window_start: Vec<usize> = (0..n)
            .map(|i| candidate_start(&times, i, &hp.decay))
            .collect();
        let decay_sums = (0..n)
            .map(|i| {
                (window_start[i]..i)
                    .map(|j| hp.decay.eval_unchecked(times[i] - times[j]))
                    .sum()
            })
            .collect();
        let edge_vec = edges.edges().to_vec();
        let mut by_label: BTreeMap<ClusterId, Vec<usize>> = BTreeMap::new();
        for (i, &k) in clusters.iter().enumerate() {
            by_label.entry(k).or_default().push(i);
        }
        let components = by_label
            .into_iter()
            .map(|(k, members)| (k, Component::from_members(members, &edge_vec)))
            .collect();
        let counts = CollapsedCounts::from_assignment(&edge_vec, &clusters)?;
        let weights = GlobalWeights::from_tables(&counts, hp.gamma);
        let bound = edges.vertex_bound();
        let mut state = Self {
            beta: weights.dense(bound),
            edges: edge_vec,
            times,
            hp,
            links,
            clusters,
            components,
            weights,
            counts,
            window_start,
            decay_sums,
            rng,
            sweep_index: 0,
            mark: vec![false; n],
        };
        state.resample_tables()?;
        state.resample_global_weights();
        state.refresh_logliks();
        Ok(state)
    }

    pub fn hp(&self) -> &Hyperparams {
        &self.hp
    }

    pub fn links(&self) -> &[usize] {
        &self.links
    }

    pub fn clusters(&self) -> &[ClusterId] {
        &self.clusters
    }

    pub fn counts(&self) -> &CollapsedCounts {
        &self.counts
    }

    pub fn global_weights(&self) -> &GlobalWeights {
        &self.weights
    }

    pub fn n_clusters(&self) -> usize {
        self.components.len()
    }

    pub fn sweep_index(&self) -> usize {
        self.sweep_index
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Replaces the global weights, e.g. to condition on known values.
    pub fn set_global_weights(&mut self, weights: GlobalWeights) {
        self.beta = weights.dense(self.beta.len());
        self.weights = weights;
        self.refresh_logliks();
    }

    pub fn snapshot(&self, chain: usize, seed: u64) -> PosteriorSample {
        PosteriorSample {
            chain,
            seed,
            sweep: self.sweep_index,
            links: self.links.clone(),
            clusters: self.clusters.clone(),
            counts: self.counts.clone(),
            hp: self.hp,
        }
    }

    /// One sweep: every link in shuffled order, then tables, optional
    /// hyperparameter moves, and global weights.
    pub fn sweep(&mut self, hyper_resample: bool) -> Result<()> {
        let mut order: Vec<usize> = (0..self.edges.len()).collect();
        order.shuffle(&mut self.rng);
        for i in order {
            self.gibbs_resample_link(i)?;
        }
        self.resample_tables()?;
        if hyper_resample {
            self.resample_hyperparams();
        }
        self.resample_global_weights();
        self.refresh_logliks();
        self.sweep_index += 1;
        if cfg!(debug_assertions) {
            self.audit()?;
        }
        Ok(())
    }

    /// Resamples the link of customer `i` from its full conditional: the
    /// seating prior times the likelihood ratio of joining the target's
    /// component.
    pub fn gibbs_resample_link(&mut self, i: usize) -> Result<()> {
        if i >= self.edges.len() {
            return Err(Error::input(format!("customer {i} out of range")));
        }
        self.detach(i);
        let t_i = self.times[i];
        let start = self.window_start[i];
        let mut labels: Vec<ClusterId> = Vec::new();
        let mut sums: Vec<f64> = Vec::new();
        let mut slot: FastMap<ClusterId, usize> = FastMap::default();
        for j in start..i {
            let w = self.hp.decay.eval_unchecked(t_i - self.times[j]);
            if w <= 0.0 {
                continue;
            }
            let k = self.clusters[j];
            let idx = *slot.entry(k).or_insert_with(|| {
                labels.push(k);
                sums.push(0.0);
                labels.len() - 1
            });
            sums[idx] += w;
        }
        let own = &self.components[&i];
        let rest = self.weights.rest();
        let mut merged = Vec::with_capacity(labels.len());
        let mut log_w = Vec::with_capacity(labels.len() + 1);
        for (&k, &s) in labels.iter().zip(&sums) {
            let other = &self.components[&k];
            let m = merged_loglik(own, other, &self.beta, rest, &self.hp);
            log_w.push(s.ln() + m[0] + m[1] - own.total_loglik() - other.total_loglik());
            merged.push(m);
        }
        log_w.push(self.hp.alpha.ln());
        let choice = sample_log_categorical(&log_w, &mut self.rng)
            .ok_or_else(|| Error::invariant(format!("link weights of customer {i} degenerate")))?;
        if choice == labels.len() {
            return Ok(());
        }
        let target = labels[choice];
        let candidates: Vec<usize> = (start..i).filter(|&j| self.clusters[j] == target).collect();
        let decay_w: Vec<f64> = candidates
            .iter()
            .map(|&j| self.hp.decay.eval_unchecked(t_i - self.times[j]))
            .collect();
        let pick = sample_categorical(&decay_w, &mut self.rng).expect("target has positive weight");
        self.links[i] = candidates[pick];
        self.merge_into(target, i, merged[choice]);
        Ok(())
    }

    /// Cuts the link of `i`, making it the root of its own component.
    fn detach(&mut self, i: usize) {
        let old = self.links[i];
        if old == i {
            return;
        }
        let root = self.clusters[i];
        let mut comp = self
            .components
            .remove(&root)
            .expect("component of a linked customer");
        let pos = comp.members.partition_point(|&m| m < i);
        let mut subtree = vec![i];
        let mut remaining = comp.members[..pos].to_vec();
        self.mark[i] = true;
        for &m in &comp.members[pos + 1..] {
            if self.mark[self.links[m]] {
                self.mark[m] = true;
                subtree.push(m);
            } else {
                remaining.push(m);
            }
        }
        for &m in &subtree {
            self.mark[m] = false;
            self.clusters[m] = i;
            for s in 0..2 {
                let v = side_vertex(&self.edges[m], s);
                let n = comp.tally[s].get_mut(&v).expect("member vertex tallied");
                *n -= 1;
                if *n == 0 {
                    comp.tally[s].remove(&v);
                }
            }
        }
        comp.members = remaining;
        let mut split = Component::from_members(subtree, &self.edges);
        comp.refresh(&self.beta, self.weights.rest(), &self.hp);
        split.refresh(&self.beta, self.weights.rest(), &self.hp);
        self.components.insert(root, comp);
        self.components.insert(i, split);
        self.links[i] = i;
    }

    fn merge_into(&mut self, target: ClusterId, source: ClusterId, loglik: [f64; 2]) {
        let src = self.components.remove(&source).expect("source component");
        for &m in &src.members {
            self.clusters[m] = target;
        }
        let dst = self.components.get_mut(&target).expect("target component");
        for s in 0..2 {
            for (&v, &n) in &src.tally[s] {
                *dst.tally[s].entry(v).or_insert(0) += n;
            }
        }
        let mut members = Vec::with_capacity(dst.members.len() + src.members.len());
        let (mut a, mut b) = (dst.members.iter().peekable(), src.members.iter().peekable());
        while let (Some(&&x), Some(&&y)) = (a.peek(), b.peek()) {
            if x < y {
                members.push(x);
                a.next();
            } else {
                members.push(y);
                b.next();
            }
        }
        members.extend(a);
        members.extend(b);
        dst.members = members;
        dst.loglik = loglik;
    }

    /// Draws table counts for every occupied (cluster, side, vertex) cell
    /// given the current global weights, and rebuilds the franchise counts.
    pub fn resample_tables(&mut self) -> Result<()> {
        let mut cells = Vec::new();
        for (&k, comp) in &self.components {
            for (s, side) in SIDES.into_iter().enumerate() {
                let tau = self.hp.tau_for(side);
                let mut tally: Vec<(VertexId, u32)> =
                    comp.tally[s].iter().map(|(&v, &n)| (v, n)).collect();
                tally.sort_unstable();
                for (v, n) in tally {
                    let conc = tau * weight_of(&self.beta, self.weights.rest(), v);
                    let t = sample_table_count(n, conc, &mut self.rng);
                    cells.push((side, k, v, n, t));
                }
            }
        }
        self.counts = CollapsedCounts::from_cells(cells)?;
        Ok(())
    }

    /// Draws global weights from `Dirichlet(m_1, ..., m_V, gamma)` given the
    /// table counts.
    pub fn resample_global_weights(&mut self) {
        let mut draws: BTreeMap<VertexId, f64> = BTreeMap::new();
        let mut total = 0.0;
        for v in self.counts.seen_vertices() {
            let m = self.counts.global_tables(v) as f64;
            let g = Gamma::new(m, 1.0)
                .expect("positive table count")
                .sample(&mut self.rng);
            let g = g.max(f64::MIN_POSITIVE);
            total += g;
            draws.insert(v, g);
        }
        let rest = Gamma::new(self.hp.gamma, 1.0)
            .expect("gamma validated")
            .sample(&mut self.rng)
            .max(f64::MIN_POSITIVE);
        total += rest;
        for w in draws.values_mut() {
            *w = (*w / total).max(f64::MIN_POSITIVE);
        }
        self.weights = GlobalWeights::new(draws, rest / total);
        self.beta = self.weights.dense(self.beta.len());
    }

    /// Tables, then global weights, holding links fixed.
    pub fn resample_auxiliary(&mut self) -> Result<()> {
        self.resample_tables()?;
        self.resample_global_weights();
        self.refresh_logliks();
        Ok(())
    }

    fn refresh_logliks(&mut self) {
        let rest = self.weights.rest();
        for comp in self.components.values_mut() {
            comp.refresh(&self.beta, rest, &self.hp);
        }
    }

    /// Slice-sampling moves on `alpha`, `tau` (per side when split) and
    /// `gamma`, each under a Gamma(1, 1) prior, in log space. The decay scale
    /// is left alone.
    pub fn resample_hyperparams(&mut self) {
        let n_self = self
            .links
            .iter()
            .enumerate()
            .filter(|(i, &c)| *i == c)
            .count() as f64;
        let sums = &self.decay_sums;
        let log_alpha = |u: f64| {
            let a = u.exp();
            n_self * u - sums.iter().map(|s| (a + s).ln()).sum::<f64>() - a + u
        };
        let u = slice_sample(self.hp.alpha.ln(), log_alpha, 1.0, &mut self.rng);
        self.hp.alpha = u.exp();

        let restaurants = |side: Side| -> Vec<(f64, u32)> {
            self.counts
                .clusters()
                .into_iter()
                .map(|k| {
                    let c = self.counts.cluster_total(side, k);
                    (c.tables as f64, c.customers)
                })
                .collect()
        };
        let log_tau = |rows: &[(f64, u32)]| {
            let rows = rows.to_vec();
            move |u: f64| {
                let t = u.exp();
                rows.iter()
                    .map(|&(tables, n)| tables * u - ln_rising(t, n))
                    .sum::<f64>()
                    - t
                    + u
            }
        };
        if self.hp.tau_recipient.is_some() {
            let rows_s = restaurants(Side::Sender);
            let rows_r = restaurants(Side::Recipient);
            let u = slice_sample(self.hp.tau.ln(), log_tau(&rows_s), 1.0, &mut self.rng);
            self.hp.tau = u.exp();
            let tr = self.hp.tau_recipient.expect("checked above");
            let u = slice_sample(tr.ln(), log_tau(&rows_r), 1.0, &mut self.rng);
            self.hp.tau_recipient = Some(u.exp());
        } else {
            let mut rows = restaurants(Side::Sender);
            rows.extend(restaurants(Side::Recipient));
            let u = slice_sample(self.hp.tau.ln(), log_tau(&rows), 1.0, &mut self.rng);
            self.hp.tau = u.exp();
        }

        let n_vertices = self.counts.n_seen_vertices() as f64;
        let total_tables = self.counts.total_tables() as u32;
        let log_gamma = |u: f64| {
            let g = u.exp();
            n_vertices * u - ln_rising(g, total_tables) - g + u
        };
        let u = slice_sample(self.hp.gamma.ln(), log_gamma, 1.0, &mut self.rng);
        self.hp.gamma = u.exp();
    }

    /// Log seating prior of the current links.
    pub fn log_prior(&self) -> f64 {
        let ln_alpha = self.hp.alpha.ln();
        (0..self.links.len())
            .map(|i| {
                let c = self.links[i];
                let w = if c == i {
                    ln_alpha
                } else {
                    self.hp
                        .decay
                        .ln_eval_unchecked(self.times[i] - self.times[c])
                };
                w - (self.hp.alpha + self.decay_sums[i]).ln()
            })
            .sum()
    }

    /// Log seating prior plus the log likelihood of all vertices given the
    /// global weights.
    pub fn log_joint(&self) -> f64 {
        self.log_prior()
            + self
                .components
                .values()
                .map(Component::total_loglik)
                .sum::<f64>()
    }

    /// Recomputes everything from scratch and compares with the maintained
    /// state.
    pub fn audit(&self) -> Result<()> {
        let expected = links_to_clusters(&self.links)?;
        if expected != self.clusters {
            return Err(Error::invariant("cluster labels out of sync with links"));
        }
        let rebuilt = CollapsedCounts::from_assignment(&self.edges, &self.clusters)?;
        if !rebuilt.same_customers(&self.counts) {
            return Err(Error::invariant(
                "franchise counts out of sync with clusters",
            ));
        }
        self.counts.check_invariants()?;
        let labels: Vec<ClusterId> = self.components.keys().copied().collect();
        if labels != rebuilt.clusters() {
            return Err(Error::invariant("component set out of sync with clusters"));
        }
        for (&k, comp) in &self.components {
            for (s, &side) in SIDES.iter().enumerate() {
                let same = comp.tally[s].len() == rebuilt.restaurant(side, k).count()
                    && rebuilt
                        .restaurant(side, k)
                        .all(|(v, c)| comp.tally[s].get(&v) == Some(&c.customers));
                if !same {
                    return Err(Error::invariant(format!(
                        "tally of component {k} out of sync"
                    )));
                }
            }
            if comp.members.iter().any(|&m| self.clusters[m] != k)
                || comp.size() != rebuilt.cluster_size(k)
            {
                return Err(Error::invariant(format!(
                    "members of component {k} out of sync"
                )));
            }
            let mut fresh = comp.clone();
            fresh.refresh(&self.beta, self.weights.rest(), &self.hp);
            let (a, b) = (fresh.total_loglik(), comp.total_loglik());
            if (a - b).abs() > 1e-8 * a.abs().max(1.0) {
                return Err(Error::invariant(format!(
                    "cached likelihood of component {k} is stale: {b} vs {a}"
                )));
            }
        }
        Ok(())
    }
}
