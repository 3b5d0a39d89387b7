use rand::distr::weighted::WeightedIndex;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Dataset, ObservationSpec};
use crate::error::{Error, Result};
use crate::rng::{rng_from, stream, Rng};
use crate::stl::{BoxRegion, Trajectory};

/// One branch of the scenario: the boxes a trajectory passes through after
/// leaving the start region, in order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Route {
    #[serde(default)]
    pub name: String,
    pub via: Vec<BoxRegion>,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorConfig {
    pub n_trajectories: usize,
    pub waypoints: usize,
    /// Observation noise, position units.
    pub noise_std: f64,
    /// Jitter on interpolated waypoints; via points are never jittered.
    pub jitter_std: f64,
    pub observation_fraction: f64,
    pub seed: u64,
    /// Via points are drawn uniformly from each box shrunk by this fraction
    /// of its extent on every side.
    pub via_inset: f64,
    pub start: BoxRegion,
    pub routes: Vec<Route>,
}

fn bx(low: [f64; 2], high: [f64; 2]) -> BoxRegion {
    BoxRegion { low, high }
}

impl GeneratorConfig {
    /// Boxes of the default scenario, in atom order: the north and east via
    /// boxes, then the north, east and south goals.
    pub fn default_boxes() -> [BoxRegion; 5] {
        [
            bx([3.0, 6.0], [5.0, 8.0]),
            bx([4.0, 4.0], [6.0, 6.0]),
            bx([7.0, 8.0], [9.0, 10.0]),
            bx([8.0, 4.0], [10.0, 6.0]),
            bx([7.0, 0.0], [9.0, 2.0]),
        ]
    }
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        let [via_n, via_e, goal_n, goal_e, goal_s] = Self::default_boxes();
        Self {
            n_trajectories: 2000,
            waypoints: 20,
            noise_std: 0.05,
            jitter_std: 0.1,
            observation_fraction: 0.5,
            seed: 7,
            via_inset: 0.1,
            start: bx([0.5, 4.5], [1.5, 5.5]),
            routes: vec![
                Route {
                    name: "north".into(),
                    via: vec![via_n, goal_n],
                    weight: 0.3,
                },
                Route {
                    name: "east".into(),
                    via: vec![via_e, goal_e],
                    weight: 0.4,
                },
                Route {
                    name: "south".into(),
                    via: vec![bx([3.0, 2.0], [5.0, 4.0]), goal_s],
                    weight: 0.3,
                },
            ],
        }
    }
}

impl GeneratorConfig {
    pub fn observation_spec(&self) -> ObservationSpec {
        ObservationSpec {
            fraction: self.observation_fraction,
            noise_std: self.noise_std,
            seed: crate::rng::derive_seed(self.seed, &[stream::OBSERVE]),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.n_trajectories == 0 {
            return cfg("n_trajectories must be >= 1".into());
        }
        if self.waypoints < 2 {
            return cfg(format!("waypoints {} must be >= 2", self.waypoints));
        }
        if !(self.jitter_std >= 0.0 && self.jitter_std.is_finite()) {
            return cfg(format!("jitter_std {} must be finite and >= 0", self.jitter_std));
        }
        if !(0.0..0.5).contains(&self.via_inset) {
            return cfg(format!("via_inset {} must lie in [0, 0.5)", self.via_inset));
        }
        self.observation_spec().validate()?;
        self.start
            .validate()
            .map_err(|e| Error::Config(format!("start region: {e}")))?;
        if self.routes.is_empty() {
            return cfg("at least one route is required".into());
        }
        for (i, r) in self.routes.iter().enumerate() {
            if !(r.weight > 0.0 && r.weight.is_finite()) {
                return cfg(format!("route {i} weight {} must be positive", r.weight));
            }
            if r.via.is_empty() {
                return cfg(format!("route {i} has no via boxes"));
            }
            if r.via.len() + 1 > self.waypoints {
                return cfg(format!(
                    "route {i} needs {} waypoints but only {} are generated",
                    r.via.len() + 1,
                    self.waypoints
                ));
            }
            for b in &r.via {
                b.validate()
                    .map_err(|e| Error::Config(format!("route {i}: {e}")))?;
            }
        }
        Ok(())
    }
}

fn sample_in(b: &BoxRegion, inset: f64, rng: &mut Rng) -> [f64; 2] {
    let mut p = [0.0; 2];
    for (k, v) in p.iter_mut().enumerate() {
        let ext = b.high[k] - b.low[k];
        let (lo, hi) = (b.low[k] + inset * ext, b.high[k] - inset * ext);
        *v = if hi > lo { rng.random_range(lo..hi) } else { 0.5 * (lo + hi) };
    }
    p
}

/// Waypoint indices for the anchor points, proportional to arc length and
/// strictly increasing, first at 0 and last at `t_len - 1`.
fn anchor_indices(points: &[[f64; 2]], t_len: usize) -> Vec<usize> {
    let k = points.len();
    let mut cum = vec![0.0];
    for w in points.windows(2) {
        let d = ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt();
        cum.push(cum.last().unwrap() + d);
    }
    let total = *cum.last().unwrap();
    let mut idx: Vec<usize> = cum
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let frac = if total > 0.0 { s / total } else { j as f64 / (k - 1) as f64 };
            (frac * (t_len - 1) as f64).round() as usize
        })
        .collect();
    idx[0] = 0;
    for j in 1..k {
        idx[j] = idx[j].max(idx[j - 1] + 1);
    }
    idx[k - 1] = t_len - 1;
    for j in (0..k - 1).rev() {
        idx[j] = idx[j].min(idx[j + 1] - 1);
    }
    idx
}

fn one_trajectory(cfg: &GeneratorConfig, route: &Route, rng: &mut Rng, id: String) -> Result<Trajectory> {
    let mut anchors = vec![sample_in(&cfg.start, cfg.via_inset, rng)];
    anchors.extend(route.via.iter().map(|b| sample_in(b, cfg.via_inset, rng)));
    let idx = anchor_indices(&anchors, cfg.waypoints);
    let jitter = (cfg.jitter_std > 0.0).then(|| Normal::new(0.0, cfg.jitter_std).expect("validated"));
    let mut states = Vec::with_capacity(cfg.waypoints);
    for seg in 0..anchors.len() - 1 {
        let (i0, i1) = (idx[seg], idx[seg + 1]);
        let (p0, p1) = (anchors[seg], anchors[seg + 1]);
        for t in i0..i1 {
            let u = (t - i0) as f64 / (i1 - i0) as f64;
            let mut s = vec![p0[0] + u * (p1[0] - p0[0]), p0[1] + u * (p1[1] - p0[1])];
            if t != i0 {
                if let Some(n) = &jitter {
                    s[0] += n.sample(rng);
                    s[1] += n.sample(rng);
                }
            }
            states.push(s);
        }
    }
    states.push(anchors.last().unwrap().to_vec());
    Trajectory::new(id, states)
}

/// Route-based piecewise-linear trajectories, deterministic in `config.seed`.
pub fn generate(config: &GeneratorConfig) -> Result<Dataset> {
    config.validate()?;
    let weights = WeightedIndex::new(config.routes.iter().map(|r| r.weight))
        .map_err(|e| Error::Config(format!("route weights: {e}")))?;
    let mut rng = rng_from(config.seed, &[stream::GENERATE]);
    let trajectories = (0..config.n_trajectories)
        .map(|i| {
            let route = &config.routes[weights.sample(&mut rng)];
            one_trajectory(config, route, &mut rng, format!("traj{i:05}"))
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(trajectories, config.observation_spec(), Some(config.seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::Atom;

    #[test]
    fn paper_scale_shape() {
        let d = generate(&GeneratorConfig::default()).unwrap();
        assert_eq!(d.len(), 2000);
        assert!(d.trajectories().iter().all(|x| x.len() == 20 && x.dim() == 2));
        assert!(d.observations().iter().all(|o| o.prefix.len() == 10));
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = GeneratorConfig {
            n_trajectories: 1,
            noise_std: 0.0,
            ..Default::default()
        };
        assert_eq!(generate(&cfg).unwrap(), generate(&cfg).unwrap());
        let other = GeneratorConfig { seed: 8, ..cfg.clone() };
        assert_ne!(generate(&cfg).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn via_box_is_always_visited() {
        let b = bx([4.0, 4.0], [6.0, 6.0]);
        let cfg = GeneratorConfig {
            n_trajectories: 200,
            noise_std: 0.0,
            jitter_std: 0.5,
            routes: vec![Route {
                name: "only".into(),
                via: vec![b, bx([8.0, 4.0], [10.0, 6.0])],
                weight: 1.0,
            }],
            ..Default::default()
        };
        let d = generate(&cfg).unwrap();
        let atom = Atom::eventually_in_box("b", b);
        for x in d.trajectories() {
            assert!(atom.robustness(x).unwrap() > 0.0);
        }
    }

    #[test]
    fn anchors_are_strictly_increasing() {
        let pts = [[0.0, 0.0], [0.0, 0.0], [10.0, 0.0], [10.0, 0.1]];
        let idx = anchor_indices(&pts, 5);
        assert_eq!(idx.first(), Some(&0));
        assert_eq!(idx.last(), Some(&4));
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn infeasible_configs() {
        let base = GeneratorConfig::default();
        for cfg in [
            GeneratorConfig { n_trajectories: 0, ..base.clone() },
            GeneratorConfig { waypoints: 2, ..base.clone() },
            GeneratorConfig { observation_fraction: 1.0, ..base.clone() },
            GeneratorConfig { noise_std: -1.0, ..base.clone() },
            GeneratorConfig { routes: vec![], ..base.clone() },
        ] {
            assert!(matches!(generate(&cfg), Err(Error::Config(_))), "{cfg:?}");
        }
    }
}
