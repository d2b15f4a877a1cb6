//! Finite graphs and exact enumeration of particle configuration spaces.
//!
//! Two kinds of spaces are supported: exclusion-type spaces where every site
//! carries a composition of `2j` particles over `n + 1` species (species 0
//! plays the role of holes), and walker-type sectors where the total number
//! of particles of each species is fixed across the graph.
//!
//! Ordering convention, fixed so that every matrix built on top of a space is
//! reproducible bit-for-bit: compositions at a single site (or of a single
//! species across sites) are ordered lexicographically *descending* on
//! `(c_0, c_1, ...)`, so rank 0 is `(total, 0, ..., 0)`. Sites are combined
//! by mixed radix with site 1 most significant; walker sectors combine
//! species by mixed radix with species 1 most significant.

use crate::error::{Error, Result};

/// Default cap on enumerated state-space sizes.
pub const DEFAULT_SIZE_CAP: u128 = 10_000_000;

/// A finite undirected graph on sites `1..=L`, stored zero-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    num_sites: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Build a graph from 1-based endpoint pairs.
    ///
    /// Rejects out-of-range endpoints, self-loops, and duplicate edges
    /// (regardless of orientation).
    pub fn new(num_sites: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut normalized = Vec::with_capacity(edges.len());
        for &(x, y) in edges {
            if x == 0 || x > num_sites {
                return Err(Error::EndpointOutOfRange { site: x, num_sites });
            }
            if y == 0 || y > num_sites {
                return Err(Error::EndpointOutOfRange { site: y, num_sites });
            }
            if x == y {
                return Err(Error::SelfLoop { site: x });
            }
            let e = (x.min(y) - 1, x.max(y) - 1);
            if normalized.contains(&e) {
                return Err(Error::DuplicateEdge { x, y });
            }
            normalized.push(e);
        }
        normalized.sort_unstable();
        Ok(Graph {
            num_sites,
            edges: normalized,
        })
    }

    /// Two sites joined by one edge.
    pub fn edge() -> Self {
        Self::new(2, &[(1, 2)]).expect("static graph")
    }

    /// Path on `k` sites.
    pub fn path(k: usize) -> Self {
        let edges: Vec<_> = (1..k).map(|x| (x, x + 1)).collect();
        Self::new(k, &edges).expect("static graph")
    }

    /// Cycle on `k >= 3` sites.
    pub fn cycle(k: usize) -> Self {
        assert!(k >= 3, "a cycle needs at least 3 sites");
        let mut edges: Vec<_> = (1..k).map(|x| (x, x + 1)).collect();
        edges.push((k, 1));
        Self::new(k, &edges).expect("static graph")
    }

    /// Complete graph on `k` sites.
    pub fn complete(k: usize) -> Self {
        let mut edges = Vec::new();
        for x in 1..=k {
            for y in (x + 1)..=k {
                edges.push((x, y));
            }
        }
        Self::new(k, &edges).expect("static graph")
    }

    /// Parse the plain-text edge-list format: first line `L`, then one
    /// 1-based `x y` pair per line. Blank lines and `#` comments are skipped.
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let first = lines
            .next()
            .ok_or_else(|| Error::Parse("empty edge-list document".into()))?;
        let num_sites: usize = first
            .parse()
            .map_err(|_| Error::Parse(format!("bad site count line: {first:?}")))?;
        let mut edges = Vec::new();
        for line in lines {
            let mut it = line.split_whitespace();
            let x = it.next().and_then(|t| t.parse().ok());
            let y = it.next().and_then(|t| t.parse().ok());
            match (x, y, it.next()) {
                (Some(x), Some(y), None) => edges.push((x, y)),
                _ => return Err(Error::Parse(format!("bad edge line: {line:?}"))),
            }
        }
        Self::new(num_sites, &edges)
    }

    /// Render in the same edge-list format accepted by [`Graph::from_edge_list`].
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{}\n", self.num_sites);
        for &(x, y) in &self.edges {
            out.push_str(&format!("{} {}\n", x + 1, y + 1));
        }
        out
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    /// Edges as zero-based `(x, y)` pairs with `x < y`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
}

/// Particle counts at a single site (or for a single species across sites).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SiteConfig {
    counts: Vec<u32>,
}

impl SiteConfig {
    pub fn new(counts: Vec<u32>) -> Self {
        SiteConfig { counts }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

impl From<Vec<u32>> for SiteConfig {
    fn from(counts: Vec<u32>) -> Self {
        SiteConfig::new(counts)
    }
}

/// A full particle configuration, stored site-major: entry `x * per_site + c`
/// is the count of species `c` at site `x` (species 0 = holes in exclusion
/// mode; walker mode has no hole species).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Config {
    per_site: usize,
    data: Vec<u32>,
}

impl Config {
    pub fn new(per_site: usize, data: Vec<u32>) -> Self {
        assert_eq!(data.len() % per_site, 0);
        Config { per_site, data }
    }

    pub fn num_sites(&self) -> usize {
        self.data.len() / self.per_site
    }

    pub fn site(&self, x: usize) -> &[u32] {
        &self.data[x * self.per_site..(x + 1) * self.per_site]
    }

    pub fn site_config(&self, x: usize) -> SiteConfig {
        SiteConfig::new(self.site(x).to_vec())
    }

    pub fn site_mut(&mut self, x: usize) -> &mut [u32] {
        &mut self.data[x * self.per_site..(x + 1) * self.per_site]
    }

    pub fn data(&self) -> &[u32] {
        &self.data
    }
}

/// Which process family a space enumerates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Mode {
    /// Exclusion space: each site carries a composition of `capacity`
    /// particles over `species + 1` classes (class 0 = holes).
    Sep { species: usize, capacity: u32 },
    /// Walker sector: `totals[i]` particles of species `i + 1` distributed
    /// over the sites.
    Irw { species: usize, totals: Vec<u32> },
}

/// An exactly enumerated, rank-indexed configuration space.
#[derive(Debug, Clone)]
pub struct ConfigSpace {
    mode: Mode,
    graph: Graph,
    size: usize,
    /// Exclusion mode: per-site states in rank order; walker mode: per-species
    /// occupation vectors in rank order.
    block_tables: Vec<Vec<SiteConfig>>,
}

// Binomial coefficient, exact in u128 at the scales the size cap admits.
fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k {
        acc = acc * (n - k + i) as u128 / i as u128;
    }
    acc
}

/// Number of weak compositions of `total` into `parts` parts.
pub fn count_compositions(total: u32, parts: usize) -> u128 {
    if parts == 0 {
        return u128::from(total == 0);
    }
    binomial(total as u64 + parts as u64 - 1, parts as u64 - 1)
}

/// Rank of a weak composition in descending-lexicographic order.
pub fn rank_composition(c: &[u32]) -> usize {
    let mut rank: u128 = 0;
    let mut remaining: u32 = c.iter().sum();
    for (pos, &ci) in c.iter().enumerate() {
        let tail = c.len() - pos - 1;
        // Compositions with a larger entry at this position come first.
        for v in (ci + 1)..=remaining {
            rank += count_compositions(remaining - v, tail);
        }
        remaining -= ci;
    }
    rank as usize
}

/// Inverse of [`rank_composition`].
pub fn unrank_composition(total: u32, parts: usize, mut rank: usize) -> Vec<u32> {
    let mut c = vec![0u32; parts];
    let mut remaining = total;
    for pos in 0..parts {
        let tail = parts - pos - 1;
        if tail == 0 {
            c[pos] = remaining;
            break;
        }
        let mut v = remaining;
        loop {
            let block = count_compositions(remaining - v, tail) as usize;
            if rank < block {
                c[pos] = v;
                remaining -= v;
                break;
            }
            rank -= block;
            v -= 1;
        }
    }
    c
}

/// All weak compositions of `total` into `parts` parts, in rank order.
pub fn compositions_desc(total: u32, parts: usize) -> Vec<SiteConfig> {
    let n = count_compositions(total, parts) as usize;
    (0..n)
        .map(|r| SiteConfig::new(unrank_composition(total, parts, r)))
        .collect()
}

/// Enumerate the exclusion space over `graph` with `species >= 1` particle
/// species plus holes and per-site capacity `capacity >= 1`.
pub fn enumerate_sep(graph: &Graph, species: usize, capacity: u32) -> Result<ConfigSpace> {
    enumerate_sep_capped(graph, species, capacity, DEFAULT_SIZE_CAP)
}

pub fn enumerate_sep_capped(
    graph: &Graph,
    species: usize,
    capacity: u32,
    cap: u128,
) -> Result<ConfigSpace> {
    assert!(species >= 1, "at least one particle species");
    assert!(capacity >= 1, "site capacity must be positive");
    let per_site = count_compositions(capacity, species + 1);
    let size = per_site
        .checked_pow(graph.num_sites() as u32)
        .ok_or(Error::SpaceTooLarge {
            size: u128::MAX,
            cap,
        })?;
    if size > cap {
        return Err(Error::SpaceTooLarge { size, cap });
    }
    let table = compositions_desc(capacity, species + 1);
    Ok(ConfigSpace {
        mode: Mode::Sep { species, capacity },
        graph: graph.clone(),
        size: size as usize,
        block_tables: vec![table; graph.num_sites()],
    })
}

/// Enumerate the walker sector over `graph` with the given per-species
/// particle totals (an all-zero sector is the one-point space).
pub fn enumerate_irw_sector(graph: &Graph, species: usize, totals: &[u32]) -> Result<ConfigSpace> {
    enumerate_irw_sector_capped(graph, species, totals, DEFAULT_SIZE_CAP)
}

pub fn enumerate_irw_sector_capped(
    graph: &Graph,
    species: usize,
    totals: &[u32],
    cap: u128,
) -> Result<ConfigSpace> {
    assert!(species >= 1, "at least one particle species");
    if totals.len() != species {
        return Err(Error::DimensionMismatch {
            expected: species,
            found: totals.len(),
        });
    }
    let sites = graph.num_sites();
    let mut size: u128 = 1;
    let mut block_tables = Vec::with_capacity(species);
    for &n_i in totals {
        size = size
            .checked_mul(count_compositions(n_i, sites))
            .ok_or(Error::SpaceTooLarge {
                size: u128::MAX,
                cap,
            })?;
        if size > cap {
            return Err(Error::SpaceTooLarge { size, cap });
        }
        block_tables.push(compositions_desc(n_i, sites));
    }
    Ok(ConfigSpace {
        mode: Mode::Irw {
            species,
            totals: totals.to_vec(),
        },
        graph: graph.clone(),
        size: size as usize,
        block_tables,
    })
}

impl ConfigSpace {
    pub fn mode(&self) -> &Mode {
        &self.mode
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Number of species classes stored per site (`n + 1` for exclusion
    /// spaces, `n` for walker sectors).
    pub fn per_site(&self) -> usize {
        match self.mode {
            Mode::Sep { species, .. } => species + 1,
            Mode::Irw { species, .. } => species,
        }
    }

    pub fn species(&self) -> usize {
        match self.mode {
            Mode::Sep { species, .. } | Mode::Irw { species, .. } => species,
        }
    }

    /// Per-site state table for exclusion spaces (all compositions of the
    /// capacity, in rank order).
    pub fn site_table(&self) -> Result<&[SiteConfig]> {
        match self.mode {
            Mode::Sep { .. } => Ok(&self.block_tables[0]),
            Mode::Irw { .. } => Err(Error::WrongMode("per-site table is exclusion-only")),
        }
    }

    pub fn rank(&self, cfg: &Config) -> Result<usize> {
        self.validate(cfg)?;
        Ok(self.rank_unchecked(cfg))
    }

    fn rank_unchecked(&self, cfg: &Config) -> usize {
        match &self.mode {
            Mode::Sep { .. } => {
                let base = self.block_tables[0].len();
                let mut rank = 0usize;
                for x in 0..self.graph.num_sites() {
                    rank = rank * base + rank_composition(cfg.site(x));
                }
                rank
            }
            Mode::Irw { species, .. } => {
                let sites = self.graph.num_sites();
                let mut rank = 0usize;
                for i in 0..*species {
                    let occ: Vec<u32> = (0..sites).map(|x| cfg.site(x)[i]).collect();
                    rank = rank * self.block_tables[i].len() + rank_composition(&occ);
                }
                rank
            }
        }
    }

    pub fn unrank(&self, mut rank: usize) -> Config {
        assert!(rank < self.size, "rank {rank} out of range");
        let sites = self.graph.num_sites();
        let per_site = self.per_site();
        let mut data = vec![0u32; sites * per_site];
        match &self.mode {
            Mode::Sep { .. } => {
                let base = self.block_tables[0].len();
                for x in (0..sites).rev() {
                    let site_rank = rank % base;
                    rank /= base;
                    data[x * per_site..(x + 1) * per_site]
                        .copy_from_slice(self.block_tables[0][site_rank].counts());
                }
            }
            Mode::Irw { species, .. } => {
                for i in (0..*species).rev() {
                    let base = self.block_tables[i].len();
                    let sp_rank = rank % base;
                    rank /= base;
                    for (x, &c) in self.block_tables[i][sp_rank].counts().iter().enumerate() {
                        data[x * per_site + i] = c;
                    }
                }
            }
        }
        Config::new(per_site, data)
    }

    /// Membership check: per-site totals in exclusion mode, per-species
    /// totals in walker mode.
    pub fn validate(&self, cfg: &Config) -> Result<()> {
        if cfg.per_site != self.per_site() || cfg.num_sites() != self.graph.num_sites() {
            return Err(Error::DimensionMismatch {
                expected: self.per_site() * self.graph.num_sites(),
                found: cfg.data.len(),
            });
        }
        match &self.mode {
            Mode::Sep { capacity, .. } => {
                for x in 0..cfg.num_sites() {
                    let total: u32 = cfg.site(x).iter().sum();
                    if total != *capacity {
                        return Err(Error::TotalMismatch {
                            expected: *capacity,
                            found: total,
                        });
                    }
                }
            }
            Mode::Irw { totals, .. } => {
                for (i, &n_i) in totals.iter().enumerate() {
                    let total: u32 = (0..cfg.num_sites()).map(|x| cfg.site(x)[i]).sum();
                    if total != n_i {
                        return Err(Error::TotalMismatch {
                            expected: n_i,
                            found: total,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = Config> + '_ {
        (0..self.size).map(|r| self.unrank(r))
    }

    /// Human-readable parameter echo used in exports and reports.
    pub fn describe(&self) -> String {
        match &self.mode {
            Mode::Sep { species, capacity } => format!(
                "sep n={} two_j={} sites={} edges={} size={}",
                species,
                capacity,
                self.graph.num_sites(),
                self.graph.edges().len(),
                self.size
            ),
            Mode::Irw { species, totals } => format!(
                "irw n={} totals={:?} sites={} edges={} size={}",
                species,
                totals,
                self.graph.num_sites(),
                self.graph.edges().len(),
                self.size
            ),
        }
    }
}
