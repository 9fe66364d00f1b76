//! Run configuration: one optional JSON file plus flag overrides, and the
//! little parsers for points exchanged as comma-separated decimals.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use renorm_core::{
    CompactConvexSet, Point, ProjectionOptions, SchemeConfig, TheoremOptions, ToleranceConfig,
};
use serde::{Deserialize, Serialize};

/// Solver and assertion knobs. Every field has a default, so a config file
/// only names the ones it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceBlock {
    /// Relative accuracy promised by the gauge evaluators.
    pub gauge_rel_tol: f64,
    /// Interval width at which 1-D searches stop.
    pub line_search_tol: f64,
    /// Slack used when asserting certified inequalities.
    pub cert_gap_tol: f64,
    /// Slack granted to each separation conclusion.
    pub conclusion_tol: f64,
    /// Parameter-space tolerance of the nearest point solvers.
    pub param_tol: f64,
    /// Gauge evaluation budget per projection query.
    pub max_evals: usize,
    /// Seeded restarts of the polytope projection solver.
    pub restarts: usize,
    /// Sample count for the sampled hypotheses.
    pub samples: usize,
}

impl Default for ToleranceBlock {
    fn default() -> Self {
        let tol = ToleranceConfig::default();
        let proj = ProjectionOptions::default();
        let thm = TheoremOptions::default();
        ToleranceBlock {
            gauge_rel_tol: tol.gauge_rel_tol,
            line_search_tol: tol.line_search_tol,
            cert_gap_tol: tol.cert_gap_tol,
            conclusion_tol: thm.conclusion_tol,
            param_tol: proj.param_tol,
            max_evals: proj.max_evals,
            restarts: proj.restarts,
            samples: thm.samples,
        }
    }
}

/// Target set for the projection experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    /// Symmetric segment `[-scale v, scale v]` along the shared direction;
    /// a missing scale means `rho / 4`.
    Segment {
        #[serde(default)]
        scale: Option<f64>,
    },
    /// Explicit vertex list, one coordinate row per vertex.
    Polytope { vertices: Vec<Vec<f64>> },
}

/// One experiment's worth of settings. The JSON schema is exactly this
/// struct; flags override individual fields after loading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub rho: f64,
    /// Ladder depth `N`.
    pub levels: usize,
    /// Ambient dimension `d`.
    pub dim: usize,
    pub seed: u64,
    /// 1-based coordinate of the shared direction; `None` picks
    /// `levels + 3`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetSpec>,
    pub tolerance: ToleranceBlock,
    /// JSON report path for `experiment`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Ladder CSV path for `experiment`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            rho: 0.2,
            levels: 4,
            dim: 8,
            seed: 7,
            v_index: None,
            target: None,
            tolerance: ToleranceBlock::default(),
            out: None,
            csv: None,
        }
    }
}

impl RunConfig {
    /// Reads the file if given, otherwise starts from the defaults.
    pub fn load(path: Option<&Path>) -> anyhow::Result<RunConfig> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                let cfg: RunConfig = serde_json::from_str(&text)
                    .with_context(|| format!("parsing config {}", p.display()))?;
                Ok(cfg)
            }
        }
    }

    /// Shared-direction coordinate, resolved.
    pub fn v_index(&self) -> usize {
        self.v_index.unwrap_or(self.levels + 3)
    }

    /// Scheme shape, validated.
    pub fn scheme(&self) -> anyhow::Result<SchemeConfig> {
        let scheme = SchemeConfig {
            rho: self.rho,
            levels: self.levels,
            dim: self.dim,
            v_index: self.v_index(),
        };
        scheme.validate()?;
        Ok(scheme)
    }

    pub fn tolerances(&self) -> ToleranceConfig {
        ToleranceConfig {
            gauge_rel_tol: self.tolerance.gauge_rel_tol,
            line_search_tol: self.tolerance.line_search_tol,
            cert_gap_tol: self.tolerance.cert_gap_tol,
        }
    }

    pub fn projection_options(&self) -> ProjectionOptions {
        ProjectionOptions {
            param_tol: self.tolerance.param_tol,
            max_evals: self.tolerance.max_evals,
            restarts: self.tolerance.restarts,
            seed: self.seed,
        }
    }

    pub fn theorem_options(&self) -> TheoremOptions {
        TheoremOptions {
            samples: self.tolerance.samples,
            seed: self.seed,
            conclusion_tol: self.tolerance.conclusion_tol,
            projection: self.projection_options(),
        }
    }

    /// Builds the target set in the ambient dimension. The default is the
    /// segment of half-width `rho / 4` along the shared direction.
    pub fn target_set(&self) -> anyhow::Result<CompactConvexSet> {
        let v = Point::basis(self.dim, self.v_index() - 1);
        let segment = |scale: f64| -> anyhow::Result<CompactConvexSet> {
            if !(scale > 0.0 && scale.is_finite()) {
                bail!("segment scale must be a positive number, got {scale}");
            }
            Ok(CompactConvexSet::segment(v.scale(-scale), v.scale(scale))?)
        };
        match &self.target {
            None => segment(self.rho / 4.0),
            Some(TargetSpec::Segment { scale }) => segment(scale.unwrap_or(self.rho / 4.0)),
            Some(TargetSpec::Polytope { vertices }) => {
                if vertices.is_empty() {
                    bail!("polytope target needs at least one vertex");
                }
                let points = vertices
                    .iter()
                    .map(|row| Ok(Point::new(row.clone())?))
                    .collect::<anyhow::Result<Vec<Point>>>()?;
                Ok(CompactConvexSet::polytope(points)?)
            }
        }
    }
}

/// Parses one point from comma-separated decimals.
pub fn parse_point(text: &str) -> anyhow::Result<Point> {
    let coords = text
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .with_context(|| format!("bad coordinate {:?}", tok.trim()))
        })
        .collect::<anyhow::Result<Vec<f64>>>()?;
    Ok(Point::new(coords)?)
}

/// Reads points from a file: one per line, comma-separated coordinates;
/// blank lines and `#` comments are skipped.
pub fn read_points(path: &Path) -> anyhow::Result<Vec<Point>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading points {}", path.display()))?;
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        points.push(parse_point(line).with_context(|| format!("line {}", i + 1))?);
    }
    if points.is_empty() {
        bail!("no points in {}", path.display());
    }
    Ok(points)
}

/// Reads modulus pairs from a file: `x ; y ; delta` per line, each point
/// comma-separated; blank lines and `#` comments are skipped.
pub fn read_pairs(path: &Path) -> anyhow::Result<Vec<(Point, Point, f64)>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading pairs {}", path.display()))?;
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(';').collect();
        if fields.len() != 3 {
            bail!(
                "line {}: expected `x ; y ; delta`, got {} fields",
                i + 1,
                fields.len()
            );
        }
        let x = parse_point(fields[0]).with_context(|| format!("line {}, x", i + 1))?;
        let y = parse_point(fields[1]).with_context(|| format!("line {}, y", i + 1))?;
        let delta = fields[2]
            .trim()
            .parse::<f64>()
            .with_context(|| format!("line {}, delta", i + 1))?;
        pairs.push((x, y, delta));
    }
    if pairs.is_empty() {
        bail!("no pairs in {}", path.display());
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_every_field() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.rho, 0.2);
        assert_eq!(cfg.levels, 4);
        assert_eq!(cfg.dim, 8);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.v_index(), 7);
        let scheme = cfg.scheme().unwrap();
        assert_eq!(scheme.v_index, 7);
    }

    #[test]
    fn partial_file_round_trips() {
        let cfg: RunConfig = serde_json::from_str(r#"{"rho": 0.1, "seed": 42}"#).unwrap();
        assert_eq!(cfg.rho, 0.1);
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.levels, 4);
        let echoed = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&echoed).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = serde_json::from_str::<RunConfig>(r#"{"rhoo": 0.1}"#).unwrap_err();
        assert!(err.to_string().contains("rhoo"), "{err}");
    }

    #[test]
    fn default_target_is_the_shared_segment() {
        let cfg = RunConfig::default();
        let set = cfg.target_set().unwrap();
        let ends = set.extreme_points();
        assert_eq!(ends.len(), 2);
        assert_eq!(ends[0].coords()[6], -0.05);
        assert_eq!(ends[1].coords()[6], 0.05);
    }

    #[test]
    fn polytope_target_parses() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"dim": 3, "levels": 1, "v_index": 3,
                "target": {"kind": "polytope", "vertices": [[0.1,0,0],[0,0.1,0]]}}"#,
        )
        .unwrap();
        let set = cfg.target_set().unwrap();
        assert_eq!(set.extreme_points().len(), 2);
        assert_eq!(set.dim(), 3);
    }

    #[test]
    fn point_parsing_reports_the_bad_token() {
        let err = parse_point("0.5, oops, 1").unwrap_err();
        assert!(format!("{err:#}").contains("oops"), "{err:#}");
        let p = parse_point("0.5, -1.25, 1").unwrap();
        assert_eq!(p.coords(), &[0.5, -1.25, 1.0]);
    }
}
