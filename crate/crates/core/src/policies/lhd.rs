//! Least hit density. Folios are grouped into classes by their age at last
//! hit; each class tracks hits and evictions per coarsened age. Periodic
//! reconfiguration ages those counts and republishes per-age hit densities,
//! which eviction reads through Score mode. All state is fixed point.

use rustc_hash::FxHashMap;

use crate::api::{
    CgroupInfo, EvictionContext, EvictionLists, IterOptions, IterVerdict, ListId, Policy, PolicyError,
    RemovalReason, DEFAULT_SCAN_LIMIT,
};
use crate::types::{FolioId, FolioView};

pub const NUM_CLASSES: usize = 16;
pub const MAX_AGE: usize = 256;
pub const SCALE: u64 = 1 << 20;
pub const EWMA_DECAY: (u64, u64) = (9, 10);
pub const RECONFIG_INTERVAL: u64 = 1 << 20;
pub const DESK_RECONFIG_INTERVAL: u64 = 1 << 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LhdMeta {
    pub last_access_tick: u64,
    pub age_at_last_hit: usize,
    pub hit_count: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassStats {
    pub hits: Vec<u64>,
    pub evictions: Vec<u64>,
    pub hit_density: Vec<u64>,
}

impl Default for ClassStats {
    fn default() -> Self {
        Self {
            hits: vec![0; MAX_AGE],
            evictions: vec![0; MAX_AGE],
            hit_density: vec![0; MAX_AGE],
        }
    }
}

/// Class of a folio: 0 if never hit, else 1 + floor(log2(age_at_last_hit + 1))
/// clamped to 1..=15.
pub fn classify(meta: &LhdMeta) -> usize {
    if meta.hit_count == 0 {
        return 0;
    }
    let log = (meta.age_at_last_hit as u64 + 1).ilog2() as usize;
    (1 + log).clamp(1, NUM_CLASSES - 1)
}

fn scale_down(x: u64) -> u64 {
    let (num, den) = EWMA_DECAY;
    (u128::from(x) * u128::from(num) / u128::from(den)) as u64
}

fn saturate(x: u128) -> u64 {
    u64::try_from(x).unwrap_or(u64::MAX)
}

/// Hit density for every age given per-age hit and eviction counts.
///
/// With H(a) and E(a) the suffix sums of hits and of all events from age a,
/// and L(a) = sum over t >= a of (t - a + 1) * events(t), the density is
/// (H/E * SCALE) * SCALE / (L/E * SCALE), zero where E(a) = 0.
pub fn compute_densities(hits: &[u64], evictions: &[u64]) -> Vec<u64> {
    let n = hits.len().min(evictions.len());
    let mut out = vec![0u64; n];
    let scale = u128::from(SCALE);
    let (mut h, mut e, mut l) = (0u128, 0u128, 0u128);
    for a in (0..n).rev() {
        h += u128::from(hits[a]);
        e += u128::from(hits[a]) + u128::from(evictions[a]);
        l += e;
        if e == 0 {
            continue;
        }
        let hit_prob = h * scale / e;
        let lifetime = (l * scale / e).max(1);
        out[a] = saturate(hit_prob * scale / lifetime);
    }
    out
}

#[derive(Debug)]
pub struct Lhd {
    list: Option<ListId>,
    meta: FxHashMap<FolioId, LhdMeta>,
    classes: Vec<ClassStats>,
    tick: u64,
    age_granularity: u64,
    admissions_since_reconfig: u64,
    reconfig_interval: u64,
    reconfigurations: u64,
    scan_window: usize,
}

impl Default for Lhd {
    fn default() -> Self {
        Self::new(RECONFIG_INTERVAL, DEFAULT_SCAN_LIMIT)
    }
}

impl Lhd {
    pub fn new(reconfig_interval: u64, scan_window: usize) -> Self {
        Self {
            list: None,
            meta: FxHashMap::default(),
            classes: vec![ClassStats::default(); NUM_CLASSES],
            tick: 0,
            age_granularity: 1,
            admissions_since_reconfig: 0,
            reconfig_interval: reconfig_interval.max(1),
            reconfigurations: 0,
            scan_window,
        }
    }

    pub fn classes(&self) -> &[ClassStats] {
        &self.classes
    }

    pub fn classes_mut(&mut self) -> &mut [ClassStats] {
        &mut self.classes
    }

    pub fn meta(&self, id: FolioId) -> Option<&LhdMeta> {
        self.meta.get(&id)
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn age_granularity(&self) -> u64 {
        self.age_granularity
    }

    pub fn reconfigurations(&self) -> u64 {
        self.reconfigurations
    }

    pub fn age_bucket(&self, age: u64) -> usize {
        usize::try_from(age / self.age_granularity)
            .unwrap_or(usize::MAX)
            .min(MAX_AGE - 1)
    }

    /// Published density for a folio's current class and age.
    pub fn density_of(&self, meta: &LhdMeta) -> u64 {
        let age = self.age_bucket(self.tick - meta.last_access_tick);
        self.classes[classify(meta)].hit_density[age]
    }

    /// Ages every count by the decay factor and republishes densities.
    pub fn reconfigure(&mut self) {
        for class in &mut self.classes {
            for x in class.hits.iter_mut().chain(class.evictions.iter_mut()) {
                *x = scale_down(*x);
            }
            class.hit_density = compute_densities(&class.hits, &class.evictions);
        }
        self.admissions_since_reconfig = 0;
        self.reconfigurations += 1;
    }
}

impl Policy for Lhd {
    fn name(&self) -> &str {
        "lhd"
    }

    fn policy_init(&mut self, lists: &mut EvictionLists, cgroup: CgroupInfo) -> Result<(), PolicyError> {
        self.list = Some(lists.list_create());
        self.age_granularity = (cgroup.limit_pages / MAX_AGE as u64).max(1);
        Ok(())
    }

    fn evict_folios(&mut self, lists: &mut EvictionLists, ctx: &mut EvictionContext) {
        let list = self.list.expect("lhd used before policy_init");
        let this = &*self;
        let window = self.scan_window.max(ctx.remaining());
        let _ = lists.list_iterate(list, &IterOptions::score(window), ctx, |_, id| {
            let density = this.meta.get(&id).map_or(0, |m| this.density_of(m));
            IterVerdict::Score(i64::try_from(density).unwrap_or(i64::MAX))
        });
    }

    fn folio_added(&mut self, lists: &mut EvictionLists, folio: &FolioView) {
        let list = self.list.expect("lhd used before policy_init");
        self.tick += 1;
        let _ = lists.list_add(list, folio.id, true);
        self.meta.insert(
            folio.id,
            LhdMeta {
                last_access_tick: self.tick,
                age_at_last_hit: 0,
                hit_count: 0,
            },
        );
        self.admissions_since_reconfig += 1;
    }

    fn folio_accessed(&mut self, _: &mut EvictionLists, folio: &FolioView) {
        self.tick += 1;
        let Some(meta) = self.meta.get(&folio.id).copied() else {
            return;
        };
        let age = self.age_bucket(self.tick - meta.last_access_tick);
        let class = classify(&meta);
        let slot = &mut self.classes[class].hits[age];
        *slot = slot.saturating_add(SCALE);
        self.meta.insert(
            folio.id,
            LhdMeta {
                last_access_tick: self.tick,
                age_at_last_hit: age,
                hit_count: meta.hit_count + 1,
            },
        );
    }

    fn folio_removed(&mut self, folio: &FolioView, reason: RemovalReason) {
        let Some(meta) = self.meta.remove(&folio.id) else {
            return;
        };
        if reason == RemovalReason::Evicted {
            let age = self.age_bucket(self.tick - meta.last_access_tick);
            let slot = &mut self.classes[classify(&meta)].evictions[age];
            *slot = slot.saturating_add(SCALE);
        }
    }

    fn maintenance_due(&self) -> bool {
        self.admissions_since_reconfig >= self.reconfig_interval
    }

    fn run_maintenance(&mut self) {
        self.reconfigure();
    }
}
