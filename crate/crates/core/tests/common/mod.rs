//! Brute-force reference computations shared by the integration tests.
//!
//! Nothing here calls into the sampler or the predictive code. Every
//! quantity is written out directly from its definition.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

#[derive(Clone, Copy, Debug)]
pub enum Decay {
    Identity,
    Exponential(f64),
    Logistic(f64),
    Window(f64),
}

impl Decay {
    pub fn eval(self, d: f64) -> f64 {
        if d.is_infinite() {
            return 0.0;
        }
        match self {
            Decay::Identity => 1.0,
            Decay::Exponential(a) => (-d / a).exp(),
            Decay::Logistic(a) => (-d + a).exp() / (1.0 + (-d + a).exp()),
            Decay::Window(a) => {
                if d < a {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Params {
    pub gamma: f64,
    pub tau: f64,
    pub alpha: f64,
    pub decay: Decay,
}

/// `(sender, recipient, time)`.
pub type Edge = (u32, u32, f64);

/// Prior probability of a full link vector.
pub fn link_prior(edges: &[Edge], links: &[usize], p: &Params) -> f64 {
    let mut prob = 1.0;
    for i in 0..edges.len() {
        let mut norm = p.alpha;
        for j in 0..i {
            norm += p.decay.eval(edges[i].2 - edges[j].2);
        }
        let w = if links[i] == i {
            p.alpha
        } else {
            p.decay.eval(edges[i].2 - edges[links[i]].2)
        };
        prob *= w / norm;
    }
    prob
}

/// Canonical cluster labels (smallest member index) via union-find.
pub fn partition_of(links: &[usize]) -> Vec<usize> {
    let n = links.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            x = p[x];
        }
        x
    }
    for (i, &l) in links.iter().enumerate() {
        let (a, b) = (find(&mut parent, i), find(&mut parent, l));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut smallest: HashMap<usize, usize> = HashMap::new();
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    for (i, &r) in roots.iter().enumerate() {
        smallest.entry(r).or_insert(i);
    }
    roots.iter().map(|r| smallest[r]).collect()
}

/// Exact marginal probability of the observed vertices given a cluster
/// assignment, summing over every table choice of every customer in the
/// Chinese restaurant franchise.
pub fn exact_marginal(edges: &[Edge], clusters: &[usize], gamma: f64, tau: f64) -> f64 {
    // customers as (restaurant key, vertex)
    let customers: Vec<((usize, usize), u32)> = edges
        .iter()
        .zip(clusters)
        .flat_map(|(e, &k)| [((0, k), e.0), ((1, k), e.1)])
        .collect();
    #[derive(Clone, Default)]
    struct St {
        cell: HashMap<((usize, usize), u32), u32>,
        rest: HashMap<(usize, usize), u32>,
        dish: HashMap<u32, u32>,
        tables: u32,
    }
    fn rec(idx: usize, cs: &[((usize, usize), u32)], st: &St, gamma: f64, tau: f64) -> f64 {
        if idx == cs.len() {
            return 1.0;
        }
        let (r, v) = cs[idx];
        let n_kv = *st.cell.get(&(r, v)).unwrap_or(&0) as f64;
        let n_k = *st.rest.get(&r).unwrap_or(&0) as f64;
        let m_v = *st.dish.get(&v).unwrap_or(&0) as f64;
        let m = st.tables as f64;
        let mut total = 0.0;
        if n_kv > 0.0 {
            let mut next = st.clone();
            *next.cell.entry((r, v)).or_insert(0) += 1;
            *next.rest.entry(r).or_insert(0) += 1;
            total += n_kv / (n_k + tau) * rec(idx + 1, cs, &next, gamma, tau);
        }
        let top = if m_v > 0.0 { m_v } else { gamma };
        let mut next = st.clone();
        *next.cell.entry((r, v)).or_insert(0) += 1;
        *next.rest.entry(r).or_insert(0) += 1;
        *next.dish.entry(v).or_insert(0) += 1;
        next.tables += 1;
        total += tau / (n_k + tau) * top / (m + gamma) * rec(idx + 1, cs, &next, gamma, tau);
        total
    }
    rec(0, &customers, &St::default(), gamma, tau)
}

/// Every link vector of `n` customers.
pub fn all_link_vectors(n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for i in 0..n {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..=i).map(move |j| {
                    let mut v = prefix.clone();
                    v.push(j);
                    v
                })
            })
            .collect();
    }
    out
}

/// Exact posterior over partitions: seating prior times franchise marginal,
/// summed over link vectors inducing the same partition.
pub fn partition_posterior(edges: &[Edge], p: &Params) -> BTreeMap<Vec<usize>, f64> {
    let mut prior: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    for links in all_link_vectors(edges.len()) {
        *prior.entry(partition_of(&links)).or_insert(0.0) += link_prior(edges, &links, p);
    }
    let mut post: BTreeMap<Vec<usize>, f64> = prior
        .into_iter()
        .map(|(z, pr)| {
            let lik = exact_marginal(edges, &z, p.gamma, p.tau);
            (z, pr * lik)
        })
        .collect();
    let total: f64 = post.values().sum();
    for v in post.values_mut() {
        *v /= total;
    }
    post
}

/// Exact marginal probability of the data: sum over all link vectors.
pub fn evidence(edges: &[Edge], p: &Params) -> f64 {
    all_link_vectors(edges.len())
        .iter()
        .map(|links| {
            link_prior(edges, links, p)
                * exact_marginal(edges, &partition_of(links), p.gamma, p.tau)
        })
        .sum()
}

pub fn total_variation(a: &BTreeMap<Vec<usize>, f64>, b: &BTreeMap<Vec<usize>, f64>) -> f64 {
    let keys: std::collections::BTreeSet<&Vec<usize>> = a.keys().chain(b.keys()).collect();
    0.5 * keys
        .into_iter()
        .map(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs())
        .sum::<f64>()
}

/// Closed-form CRP seating: probability of joining each existing cluster
/// (by size) and of opening a new one, for customer number `i + 1`.
pub fn crp_seating(sizes: &[usize], alpha: f64) -> (Vec<f64>, f64) {
    let n: usize = sizes.iter().sum();
    let denom = n as f64 + alpha;
    (
        sizes.iter().map(|&s| s as f64 / denom).collect(),
        alpha / denom,
    )
}

/// Posterior-predictive probability of a test edge at `time` given a fixed
/// training partition with one table per occupied (side, cluster, vertex)
/// cell. Cluster weights are the decayed link masses of training edges not
/// later than `time`, plus `alpha` for a fresh cluster.
pub fn heldout_edge_prob(train: &[Edge], clusters: &[usize], test: Edge, p: &Params) -> f64 {
    let mut weight: BTreeMap<Option<usize>, f64> = BTreeMap::new();
    weight.insert(None, p.alpha);
    for (j, e) in train.iter().enumerate() {
        if e.2 <= test.2 {
            *weight.entry(Some(clusters[j])).or_insert(0.0) += p.decay.eval(test.2 - e.2);
        }
    }
    let z: f64 = weight.values().sum();

    // m_v: number of cells (side, cluster) in which v occurs
    let mut cells = std::collections::BTreeSet::new();
    for (j, e) in train.iter().enumerate() {
        cells.insert((0, clusters[j], e.0));
        cells.insert((1, clusters[j], e.1));
    }
    let m_total = cells.len() as f64;
    let m_of = |v: u32| cells.iter().filter(|c| c.2 == v).count() as f64;
    let p_h = |v: u32| {
        let m = m_of(v);
        if m > 0.0 {
            m / (m_total + p.gamma)
        } else {
            p.gamma / (m_total + p.gamma)
        }
    };
    let franchise = |side: usize, k: Option<usize>, v: u32| {
        let (mut n_kv, mut n_k) = (0.0, 0.0);
        if let Some(k) = k {
            for (j, e) in train.iter().enumerate() {
                if clusters[j] == k {
                    n_k += 1.0;
                    if (if side == 0 { e.0 } else { e.1 }) == v {
                        n_kv += 1.0;
                    }
                }
            }
        }
        (n_kv + p.tau * p_h(v)) / (n_k + p.tau)
    };
    weight
        .iter()
        .map(|(&k, &w)| w / z * franchise(0, k, test.0) * franchise(1, k, test.1))
        .sum()
}
