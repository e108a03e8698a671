//! Monte Carlo network realizations with pilot assignment and the asymptotic
//! pilot-contamination SINR.
//!
//! A station is added at the window center so the tagged cell is a typical
//! cell. Only stations outside the guard band get a cell and users.

mod experiment;
mod pcf;
mod stats;

use rand::seq::index;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::coverage_se::NetworkConfig;
use crate::error::{ensure, Error, Result};
use crate::geometry::{
    sample_ppp, CellBuilder, CellGeometry, Point, PointPattern, RegionKind, RegionSampler, Window,
};
use crate::numerics::RngStream;
use crate::pilots::GroupInclusion;

pub use experiment::{run_experiment, CoverageTally, SimulationCounts, SimulationSummary, Tally};
pub use pcf::{
    estimate_pcf, fit_pcf_prototype, pcf_prototype, pcf_residual, sample_interferer_distances,
    sample_pcf_patterns, InterfererSample, PcfEstimate, PcfFit, PcfPatterns, MIN_PCF_REALIZATIONS,
};
pub use stats::{kl_divergence, ks_kl, sample_cell_areas, AreaSamples, KsKl, MIN_KS_SAMPLES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReuseMode {
    /// Fractional pilot reuse: CC pool shared by all cells, CE pools split in groups.
    #[default]
    Fpr,
    /// Every user draws from all `B` pilots.
    Reuse1,
}

impl std::str::FromStr for ReuseMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fpr" => Ok(ReuseMode::Fpr),
            "reuse1" => Ok(ReuseMode::Reuse1),
            other => Err(Error::Invalid(format!(
                "unknown mode '{other}' (expected fpr or reuse1)"
            ))),
        }
    }
}

impl std::fmt::Display for ReuseMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ReuseMode::Fpr => "fpr",
            ReuseMode::Reuse1 => "reuse1",
        })
    }
}

/// How cells pick their CE pilot group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CeGroupMode {
    /// Independent uniform group per cell.
    #[default]
    Random,
    /// All cells use group 0.
    SameSet,
}

impl CeGroupMode {
    /// Analytical group inclusion matching this mode.
    pub fn paired_inclusion(self) -> GroupInclusion {
        match self {
            CeGroupMode::Random => GroupInclusion::InverseReuse,
            CeGroupMode::SameSet => GroupInclusion::One,
        }
    }
}

/// Network parameters plus simulator knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub network: NetworkConfig,
    pub mode: ReuseMode,
    pub ce_group_mode: CeGroupMode,
    /// Window half-width in units of `1/sqrt(lambda0)`.
    pub window_scaled: f64,
    /// Guard band in units of `1/sqrt(lambda0)`.
    pub guard_scaled: f64,
    pub thresholds_db: Vec<f64>,
    /// PCF bin edges in units of `1/sqrt(lambda0)`.
    pub pcf_edges_scaled: Vec<f64>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            network: NetworkConfig::default(),
            mode: ReuseMode::Fpr,
            ce_group_mode: CeGroupMode::Random,
            window_scaled: 8.0,
            guard_scaled: 3.0,
            thresholds_db: vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0],
            pcf_edges_scaled: (0..=25).map(|i| i as f64 * 0.1).collect(),
        }
    }
}

impl SimulationConfig {
    pub fn window(&self) -> Result<Window> {
        let s = 1.0 / self.network.lambda0.sqrt();
        Window::new(self.window_scaled * s, self.guard_scaled * s)
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        self.window()?;
        ensure(
            !self.pcf_edges_scaled.is_empty()
                && self.pcf_edges_scaled.windows(2).all(|w| w[0] < w[1]),
            "pcf_edges_scaled",
            self.pcf_edges_scaled.len() as f64,
            "nonempty increasing grid",
        )?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct User {
    pub position: Point,
    /// Index into [`Realization::cells`].
    pub cell: usize,
    pub kind: RegionKind,
    pub pilot: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    pub bs_pattern: PointPattern,
    /// Cells of all stations outside the guard band.
    pub cells: Vec<CellGeometry>,
    pub users: Vec<User>,
    /// CE group per cell; `None` in reuse-1 mode.
    pub ce_group_per_cell: Vec<Option<u32>>,
    /// Index of the cell of the station at the window center.
    pub tagged: usize,
    pub mode: ReuseMode,
    pub alpha: f64,
    pub b_c: u32,
    pub seed: u64,
    pub stream_id: u64,
    /// User indices per pilot.
    by_pilot: Vec<Vec<usize>>,
}

impl Realization {
    pub fn tagged_cell(&self) -> &CellGeometry {
        &self.cells[self.tagged]
    }

    /// Users on `pilot`, any cell.
    pub fn users_on_pilot(&self, pilot: u32) -> impl Iterator<Item = &User> {
        self.by_pilot
            .get(pilot as usize)
            .into_iter()
            .flatten()
            .map(|&i| &self.users[i])
    }

    /// Pool the pilot belongs to under this realization's mode.
    pub fn pilot_kind(&self, pilot: u32) -> Option<RegionKind> {
        match self.mode {
            ReuseMode::Fpr if pilot < self.b_c => Some(RegionKind::CC),
            ReuseMode::Fpr => Some(RegionKind::CE),
            ReuseMode::Reuse1 => None,
        }
    }

    /// Users of the tagged cell.
    pub fn tagged_users(&self) -> impl Iterator<Item = &User> {
        self.users.iter().filter(move |u| u.cell == self.tagged)
    }
}

/// Zero-truncated Poisson draw with mean parameter `mu` of the parent law.
pub fn sample_zero_truncated_poisson(mu: f64, stream: &mut RngStream) -> Result<u64> {
    ensure(mu > 0.0 && mu.is_finite(), "mu", mu, "mu > 0")?;
    if mu < 1.0 {
        // Inverse-CDF walk: P(N = 1) = mu / (e^mu - 1).
        let u = stream.uniform();
        let mut p = mu / mu.exp_m1();
        let mut cum = p;
        let mut n = 1u64;
        while u >= cum && p > 0.0 {
            n += 1;
            p *= mu / n as f64;
            cum += p;
        }
        return Ok(n);
    }
    let pois = Poisson::new(mu).map_err(|e| Error::Invalid(format!("poisson mean {mu}: {e}")))?;
    loop {
        let n = pois.sample(stream) as u64;
        if n >= 1 {
            return Ok(n);
        }
    }
}

fn assign_pilots(users: &mut [User], offset: u32, pool: u32, stream: &mut RngStream) {
    let k = users.len().min(pool as usize);
    if k == 0 {
        return;
    }
    let picks = index::sample(stream, pool as usize, k);
    for (u, p) in users.iter_mut().zip(picks.iter()) {
        u.pilot = Some(offset + p as u32);
    }
}

/// One network realization with users and pilots.
pub fn run_realization(config: &SimulationConfig, stream: &mut RngStream) -> Result<Realization> {
    let net = &config.network;
    let plan = net.plan;
    let window = config.window()?;
    let mut pattern = sample_ppp(net.lambda0, window, stream)?;
    pattern.points.insert(0, Point::ORIGIN);
    let builder = CellBuilder::new(&pattern);
    let interior = pattern.interior_indices();
    let mut cells = Vec::with_capacity(interior.len());
    for &i in &interior {
        cells.push(CellGeometry::new(&builder.voronoi(i)?, net.r_c));
    }
    let tagged = cells
        .iter()
        .position(|c| c.bs_index == 0)
        .ok_or_else(|| Error::Invalid("center station is not interior".into()))?;

    let mut users = Vec::new();
    let mut groups = Vec::with_capacity(cells.len());
    for (ci, cell) in cells.iter().enumerate() {
        let sampler = RegionSampler::new(cell);
        let start = users.len();
        let mut n_cc = 0;
        for kind in [RegionKind::CC, RegionKind::CE] {
            let area = cell.area(kind);
            if area <= 0.0 || (kind == RegionKind::CE && !cell.has_ce_region) {
                continue;
            }
            let n = sample_zero_truncated_poisson(net.lambda_u * area, stream)?;
            for _ in 0..n {
                let position = match sampler.sample(kind, stream) {
                    Ok(p) => p,
                    // Slivers below floating-point resolution hold no users.
                    Err(Error::EmptyRegion { .. }) => break,
                    Err(e) => return Err(e),
                };
                users.push(User {
                    position,
                    cell: ci,
                    kind,
                    pilot: None,
                });
            }
            if kind == RegionKind::CC {
                n_cc = users.len() - start;
            }
        }
        let own = &mut users[start..];
        match config.mode {
            ReuseMode::Fpr => {
                let group = match config.ce_group_mode {
                    CeGroupMode::Random => stream.index(plan.beta_f as usize) as u32,
                    CeGroupMode::SameSet => 0,
                };
                groups.push(Some(group));
                let (cc, ce) = own.split_at_mut(n_cc);
                assign_pilots(cc, 0, plan.b_c, stream);
                assign_pilots(ce, plan.b_c + group * plan.b_e, plan.b_e, stream);
            }
            ReuseMode::Reuse1 => {
                groups.push(None);
                // Users are exchangeable, so a random subset gets the pilots.
                let k = own.len().min(plan.b as usize);
                for i in 0..k {
                    let j = i + stream.index(own.len() - i);
                    own.swap(i, j);
                }
                assign_pilots(&mut own[..k], 0, plan.b, stream);
            }
        }
    }

    let mut by_pilot = vec![Vec::new(); plan.b as usize];
    for (i, u) in users.iter().enumerate() {
        if let Some(p) = u.pilot {
            by_pilot[p as usize].push(i);
        }
    }
    Ok(Realization {
        bs_pattern: pattern,
        cells,
        users,
        ce_group_per_cell: groups,
        tagged,
        mode: config.mode,
        alpha: net.alpha,
        b_c: plan.b_c,
        seed: stream.seed(),
        stream_id: stream.stream_id(),
        by_pilot,
    })
}

/// SINR of the tagged cell's user on `pilot`: `d00^{-2 alpha}` over the sum of
/// `d0j^{-2 alpha}` for other cells' users on that pilot. `None` when the
/// tagged cell has no `kind` user on the pilot; `+inf` without interferers.
pub fn tagged_sinr(real: &Realization, kind: RegionKind, pilot: u32) -> Option<f64> {
    if real.pilot_kind(pilot).is_some_and(|k| k != kind) {
        return None;
    }
    let bs = real.tagged_cell().center;
    let mut own = None;
    let mut interference = 0.0;
    let two_alpha = 2.0 * real.alpha;
    for u in real.users_on_pilot(pilot) {
        let g = u.position.dist(bs).powf(-two_alpha);
        if u.cell == real.tagged {
            own = Some((u.kind, g));
        } else {
            interference += g;
        }
    }
    match own {
        Some((k, g)) if k == kind => Some(if interference > 0.0 {
            g / interference
        } else {
            f64::INFINITY
        }),
        _ => None,
    }
}
