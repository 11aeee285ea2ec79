use serde::{Deserialize, Serialize};

use super::types::ClusterId;
use crate::error::{Error, Result};

/// Maps a link vector to cluster labels.
///
/// Every customer links to an earlier customer or to itself, so the link
/// graph is a forest whose roots are the self-links; each tree is one
/// cluster, labeled by its root, which is also its smallest member.
pub fn links_to_clusters(links: &[usize]) -> Result<Vec<ClusterId>> {
    let mut clusters = Vec::with_capacity(links.len());
    for (i, &c) in links.iter().enumerate() {
        if c > i {
            return Err(Error::invariant(format!(
                "customer {i} links forward to {c}"
            )));
        }
        let label = if c == i { i } else { clusters[c] };
        clusters.push(label);
    }
    Ok(clusters)
}

/// Customer links and the cluster labels they induce.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeatingState {
    links: Vec<usize>,
    clusters: Vec<ClusterId>,
}

impl SeatingState {
    pub fn from_links(links: Vec<usize>) -> Result<Self> {
        let clusters = links_to_clusters(&links)?;
        Ok(Self { links, clusters })
    }

    /// Every customer sits alone.
    pub fn all_self_links(n: usize) -> Self {
        Self {
            links: (0..n).collect(),
            clusters: (0..n).collect(),
        }
    }

    pub fn links(&self) -> &[usize] {
        &self.links
    }

    pub fn clusters(&self) -> &[ClusterId] {
        &self.clusters
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn n_clusters(&self) -> usize {
        self.links
            .iter()
            .enumerate()
            .filter(|(i, &c)| *i == c)
            .count()
    }

    /// Appends a customer linking to `link`; returns its cluster.
    pub fn push(&mut self, link: usize) -> Result<ClusterId> {
        let i = self.links.len();
        if link > i {
            return Err(Error::invariant(format!(
                "customer {i} links forward to {link}"
            )));
        }
        let label = if link == i { i } else { self.clusters[link] };
        self.links.push(link);
        self.clusters.push(label);
        Ok(label)
    }

    pub fn check(&self) -> Result<()> {
        let expected = links_to_clusters(&self.links)?;
        if expected != self.clusters {
            return Err(Error::invariant("cluster labels disagree with links"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_examples() {
        assert_eq!(links_to_clusters(&[0, 1, 2]).unwrap(), vec![0, 1, 2]);
        assert_eq!(links_to_clusters(&[0, 0, 1]).unwrap(), vec![0, 0, 0]);
        assert_eq!(links_to_clusters(&[0, 1, 0, 1]).unwrap(), vec![0, 1, 0, 1]);
    }

    #[test]
    fn forward_link_rejected() {
        assert!(links_to_clusters(&[0, 2, 2]).is_err());
        let mut s = SeatingState::all_self_links(2);
        assert!(s.push(5).is_err());
        assert_eq!(s.push(0).unwrap(), 0);
        assert_eq!(s.n_clusters(), 2);
    }

    fn union_find_labels(links: &[usize]) -> Vec<usize> {
        let mut parent: Vec<usize> = (0..links.len()).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let next = p[y];
                p[y] = r;
                y = next;
            }
            r
        }
        for (i, &c) in links.iter().enumerate() {
            let a = find(&mut parent, i);
            let b = find(&mut parent, c);
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let roots: Vec<usize> = (0..links.len()).map(|i| find(&mut parent, i)).collect();
        // canonical label: smallest member of each component
        let mut smallest = vec![usize::MAX; links.len()];
        for (i, &r) in roots.iter().enumerate() {
            smallest[r] = smallest[r].min(i);
        }
        roots.iter().map(|&r| smallest[r]).collect()
    }

    fn link_vectors() -> impl Strategy<Value = Vec<usize>> {
        prop::collection::vec(any::<prop::sample::Index>(), 1..200).prop_map(|idx| {
            idx.iter()
                .enumerate()
                .map(|(i, ix)| ix.index(i + 1))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn agrees_with_union_find(links in link_vectors()) {
            let z = links_to_clusters(&links).unwrap();
            prop_assert_eq!(&z, &union_find_labels(&links));
            // relabeling a canonical labeling is a no-op
            let again: Vec<usize> = z.iter().map(|&k| z[k]).collect();
            prop_assert_eq!(again, z);
        }
    }
}
