//! Users, instances, cost models and solver configuration, plus instance
//! file I/O and seeded random generation.

use std::fmt;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weber::Point;

/// A terrestrial user: planar location and traffic weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct User {
    pub id: u64,
    pub x: f64,
    pub y: f64,
    pub w: f64,
}

impl User {
    pub fn new(id: u64, x: f64, y: f64, w: f64) -> Self {
        User { id, x, y, w }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// Where in an input file a record came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Line(usize),
    Record(usize),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Line(l) => write!(f, "line {l}"),
            Location::Record(r) => write!(f, "users[{r}]"),
        }
    }
}

/// The full problem input. Users keep their file order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Instance {
    users: Vec<User>,
}

#[derive(Deserialize)]
struct InstanceFile {
    users: Vec<User>,
}

impl Instance {
    /// Validates ids, weights and coordinates.
    pub fn new(users: Vec<User>) -> Result<Self> {
        let locations: Vec<Location> = (0..users.len()).map(Location::Record).collect();
        Self::validated(users, &locations, Path::new("<memory>"))
    }

    fn validated(users: Vec<User>, locations: &[Location], path: &Path) -> Result<Self> {
        if users.is_empty() {
            return Err(Error::InvalidInstance("instance has no users".into()));
        }
        let mut seen = std::collections::HashSet::with_capacity(users.len());
        for (u, loc) in users.iter().zip(locations) {
            for (field, v) in [("x", u.x), ("y", u.y), ("w", u.w)] {
                if !v.is_finite() {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        location: loc.to_string(),
                        field: field.into(),
                        message: format!("value {v} is not finite"),
                    });
                }
            }
            if u.w <= 0.0 {
                return Err(Error::NonPositiveWeight {
                    path: path.to_path_buf(),
                    location: loc.to_string(),
                    id: u.id,
                    weight: u.w,
                });
            }
            if !seen.insert(u.id) {
                return Err(Error::DuplicateId {
                    path: path.to_path_buf(),
                    location: loc.to_string(),
                    id: u.id,
                });
            }
        }
        Ok(Instance { users })
    }

    pub fn users(&self) -> &[User] {
        &self.users
    }

    pub fn n(&self) -> usize {
        self.users.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.users.iter().map(|u| u.w).sum()
    }
}

/// Link cost `w^link_exponent * dist(P, C)` and station cost
/// `es_fixed + es_rate * W^es_exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostModel {
    pub link_exponent: f64,
    pub es_fixed: f64,
    pub es_rate: f64,
    pub es_exponent: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            link_exponent: 1.0,
            es_fixed: 5.0,
            es_rate: 2.0,
            es_exponent: 0.5,
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<()> {
        let ok = self.link_exponent >= 0.0
            && self.es_fixed >= 0.0
            && self.es_rate >= 0.0
            && self.es_exponent > 0.0
            && self.es_exponent <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("cost model out of range: {self:?}")))
        }
    }

    /// Effective Weber weight of a user under this model.
    pub fn link_weight(&self, w: f64) -> f64 {
        if self.link_exponent == 1.0 {
            w
        } else {
            w.powf(self.link_exponent)
        }
    }

    pub fn link_cost(&self, w: f64, p: Point, c: Point) -> f64 {
        self.link_weight(w) * p.distance(c)
    }

    pub fn es_cost(&self, total_weight: f64) -> f64 {
        self.es_fixed + self.es_rate * total_weight.powf(self.es_exponent)
    }
}

/// Designer floors below which a cluster is not split further.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    pub min_weight: f64,
    pub min_users: usize,
    pub max_depth: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            min_weight: 0.0,
            min_users: 1,
            max_depth: 6,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        if self.min_weight < 0.0 || self.min_users == 0 || self.max_depth == 0 {
            return Err(Error::InvalidArgument(format!("thresholds out of range: {self:?}")));
        }
        Ok(())
    }

    /// Whether a cluster with these totals is indivisible by fiat.
    pub fn blocks(&self, users: usize, weight: f64) -> bool {
        weight < self.min_weight || users < self.min_users
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SweepStrategy {
    /// Evaluate the split cost at every candidate angle.
    #[default]
    FullScan,
    /// Run the Fibonacci search when a coarse probe suggests a bimodal,
    /// non-shallow profile on a large enough cluster.
    FibonacciIfBimodal,
}

impl std::str::FromStr for SweepStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "fullscan" | "full" => Ok(SweepStrategy::FullScan),
            "fibonacciifbimodal" | "fibonacci" | "fib" => Ok(SweepStrategy::FibonacciIfBimodal),
            _ => Err(Error::InvalidArgument(format!("unknown sweep strategy `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub sweep_strategy: SweepStrategy,
    pub bimodal_range_cutoff: f64,
    pub bimodal_n_cutoff: usize,
    pub refine_max_passes: usize,
    pub rng_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            epsilon: 1e-7,
            sweep_strategy: SweepStrategy::FullScan,
            bimodal_range_cutoff: 0.05,
            bimodal_n_cutoff: 25,
            refine_max_passes: 50,
            rng_seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epsilon.is_nan() || self.epsilon <= 0.0
            || !(self.bimodal_range_cutoff > 0.0 && self.bimodal_range_cutoff < 1.0)
            || self.refine_max_passes == 0
        {
            return Err(Error::InvalidArgument(format!("solver config out of range: {self:?}")));
        }
        Ok(())
    }
}

/// Everything a solve needs besides the instance. The JSON form is a flat
/// object using the field names of the three parts.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Config {
    #[serde(flatten)]
    pub cost: CostModel,
    #[serde(flatten)]
    pub thresholds: Thresholds,
    #[serde(flatten)]
    pub solver: SolverConfig,
}

impl Config {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Config = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.cost.validate()?;
        self.thresholds.validate()?;
        self.solver.validate()
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Reads a JSON (`{"users": [...]}`) or CSV (`id,x,y,w`) instance file,
/// chosen by extension.
pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if is_csv(path) {
        parse_instance_csv(&text, path)
    } else {
        parse_instance_json(&text, path)
    }
}

pub fn parse_instance_json(text: &str, path: &Path) -> Result<Instance> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        location: Location::Line(e.line()).to_string(),
        field: "users".into(),
        message: e.to_string(),
    })?;
    let locations: Vec<Location> = (0..file.users.len()).map(Location::Record).collect();
    Instance::validated(file.users, &locations, path)
}

pub fn parse_instance_csv(text: &str, path: &Path) -> Result<Instance> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .clone();
    let mut users = Vec::new();
    let mut locations = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let user: User = record.deserialize(Some(&headers)).map_err(|e| {
            let field = match e.kind() {
                csv::ErrorKind::Deserialize { err, .. } => err
                    .field()
                    .and_then(|i| headers.get(i as usize))
                    .unwrap_or("record")
                    .to_string(),
                _ => "record".to_string(),
            };
            Error::Parse {
                path: path.to_path_buf(),
                location: Location::Line(line).to_string(),
                field,
                message: e.to_string(),
            }
        })?;
        users.push(user);
        locations.push(Location::Line(line));
    }
    Instance::validated(users, &locations, path)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        path: path.to_path_buf(),
        location: Location::Line(line).to_string(),
        field: "record".into(),
        message: e.to_string(),
    }
}

/// Serialized form written by [`save_instance`].
pub fn instance_to_string(instance: &Instance, csv: bool) -> Result<String> {
    if csv {
        let mut out = String::from("id,x,y,w\n");
        for u in &instance.users {
            out.push_str(&format!("{},{},{},{}\n", u.id, u.x, u.y, u.w));
        }
        Ok(out)
    } else {
        let mut s = serde_json::to_string_pretty(instance)?;
        s.push('\n');
        Ok(s)
    }
}

pub fn save_instance(instance: &Instance, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = instance_to_string(instance, is_csv(path))?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Axis-aligned region for generated users.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BoundingBox {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        BoundingBox {
            min_x,
            min_y,
            max_x,
            max_y,
        }
    }

    pub fn square(side: f64) -> Self {
        Self::new(0.0, 0.0, side, side)
    }

    pub fn is_empty(&self) -> bool {
        !(self.min_x < self.max_x && self.min_y < self.max_y)
    }
}

fn check_weights(weight_range: (f64, f64)) -> Result<()> {
    let (lo, hi) = weight_range;
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "weight range [{lo}, {hi}) must be a nonempty positive interval"
        )));
    }
    Ok(())
}

/// Uniform users in `region` with uniform weights; ids `1..=n`.
pub fn generate_instance(
    n: usize,
    seed: u64,
    region: BoundingBox,
    weight_range: (f64, f64),
) -> Result<Instance> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if region.is_empty() {
        return Err(Error::InvalidArgument(format!("empty region {region:?}")));
    }
    check_weights(weight_range)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let users = (1..=n as u64)
        .map(|id| {
            let x = rng.random_range(region.min_x..region.max_x);
            let y = rng.random_range(region.min_y..region.max_y);
            let w = rng.random_range(weight_range.0..weight_range.1);
            User::new(id, x, y, w)
        })
        .collect();
    Instance::new(users)
}

/// Two Gaussian clouds centred at `(±separation/2, 0)`. Users `1..=ceil(n/2)`
/// belong to the left cloud, the rest to the right one.
pub fn generate_two_blobs(
    n: usize,
    seed: u64,
    separation: f64,
    spread: f64,
    weight_range: (f64, f64),
) -> Result<Instance> {
    if n < 2 {
        return Err(Error::InvalidArgument("two blobs need at least 2 users".into()));
    }
    check_weights(weight_range)?;
    let noise = Normal::new(0.0, spread)
        .map_err(|e| Error::InvalidArgument(format!("spread {spread}: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let left = n.div_ceil(2);
    let users = (1..=n)
        .map(|i| {
            let cx = if i <= left { -separation / 2.0 } else { separation / 2.0 };
            let x = cx + noise.sample(&mut rng);
            let y = noise.sample(&mut rng);
            let w = rng.random_range(weight_range.0..weight_range.1);
            User::new(i as u64, x, y, w)
        })
        .collect();
    Instance::new(users)
}
