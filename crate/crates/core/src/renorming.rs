//! The renorming scheme: a ladder of blueprint gauges smoothed into
//! locally uniformly rotund terms and capped by a Euclidean floor.
//!
//! Level `n` (1-based) of the scheme places a blueprint tuple on the
//! coordinate axes: `e_n = u_n`, `h_n = u_{n+1}`, all self-dual, with a
//! shared transversal direction `v = u_{v_index}` kept clear of every
//! `e_n, h_n`. The offsets shrink geometrically, `t_n = 2^{-n} rho / 16`,
//! and each level carries a smoothing weight `eta_n = t_n rho / 25600`,
//! well inside the window `eta_n < t_n rho / 12800` that the separation
//! analysis tolerates.
//!
//! The level-`n` term is `|x|_n = sqrt(gauge_n(x)^2 + eta_n ||x||^2)`, a
//! strictly convex perturbation sandwiched by
//! `gauge_n <= |.|_n <= (1 + eta_n) gauge_n`. The composite norm takes the
//! maximum of all terms together with the floor `(1 - rho/8)^{-1} ||x||`,
//! which pins the overall distortion to
//! `(1 - rho/8)^{-1} ||x|| <= |||x||| <= (1 - rho/8)^{-1} (1 - rho)^{-1} ||x||`.

use serde::{Deserialize, Serialize};

use crate::blueprint::{AlphaTuple, BlueprintNorm};
use crate::geometry::{euclid_norm, Functional, Gauge, Point, ToleranceConfig};
use crate::{Error, Result};

/// Identifies one term of the composite: `TermId(n)` with `n >= 1` is the
/// level-`n` rotund term, `TermId(0)` the Euclidean floor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TermId(pub usize);

/// Shape of one scheme instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub rho: f64,
    /// Number of ladder levels `N`.
    pub levels: usize,
    /// Ambient dimension `d`.
    pub dim: usize,
    /// 1-based coordinate carrying the shared direction `v`; must avoid the
    /// coordinates `1..=levels+1` used by the `e_n` and `h_n`.
    pub v_index: usize,
}

impl SchemeConfig {
    /// Default instance: `rho = 0.2`, four levels in R^8, `v = u_7`.
    pub fn canonical() -> Self {
        SchemeConfig {
            rho: 0.2,
            levels: 4,
            dim: 8,
            v_index: 7,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < 0.25) {
            return Err(Error::constraint(
                "0 < rho < 1/4",
                format!("rho = {}", self.rho),
            ));
        }
        if self.levels == 0 {
            return Err(Error::constraint("levels >= 1", "levels = 0".to_string()));
        }
        if self.dim < self.levels + 3 {
            return Err(Error::constraint(
                "dim >= levels + 3",
                format!("dim = {}, levels = {}", self.dim, self.levels),
            ));
        }
        if self.v_index <= self.levels + 1 || self.v_index > self.dim {
            return Err(Error::constraint(
                "levels + 1 < v_index <= dim",
                format!(
                    "v_index = {}, levels = {}, dim = {}",
                    self.v_index, self.levels, self.dim
                ),
            ));
        }
        Ok(())
    }

    /// Offset of level `n`.
    pub fn t(&self, n: usize) -> f64 {
        self.rho / 16.0 * 0.5f64.powi(n as i32)
    }

    /// Smoothing weight of level `n`.
    pub fn eta(&self, n: usize) -> f64 {
        self.t(n) * self.rho / 25600.0
    }
}

/// One locally uniformly rotund term `sqrt(gauge_n^2 + eta_n ||.||^2)`.
#[derive(Debug, Clone)]
pub struct LurNorm {
    term: TermId,
    blueprint: BlueprintNorm,
    /// Level offset `t_n`.
    pub t: f64,
    /// Smoothing weight; also the strict convexity modulus of the squared
    /// term (`Q(x, y) >= eta ||x - y||^2`).
    pub eta: f64,
}

impl LurNorm {
    pub fn new(term: TermId, blueprint: BlueprintNorm, eta: f64) -> Result<Self> {
        let t = blueprint.alpha().t;
        let rho = blueprint.alpha().rho;
        if !(eta > 0.0 && eta < t * rho / 12800.0) {
            return Err(Error::constraint(
                "0 < eta < t rho / 12800",
                format!("eta = {eta}, window = {}", t * rho / 12800.0),
            ));
        }
        let ceiling = 1.0 / (1.0 - rho / 8.0) - 1.0;
        if eta >= ceiling {
            return Err(Error::constraint(
                "eta < (1 - rho/8)^{-1} - 1",
                format!("eta = {eta}, ceiling = {ceiling}"),
            ));
        }
        Ok(LurNorm {
            term,
            blueprint,
            t,
            eta,
        })
    }

    pub fn term(&self) -> TermId {
        self.term
    }

    pub fn blueprint(&self) -> &BlueprintNorm {
        &self.blueprint
    }
}

impl Gauge for LurNorm {
    fn dim(&self) -> usize {
        self.blueprint.dim()
    }

    fn rel_tol(&self) -> f64 {
        self.blueprint.rel_tol()
    }

    fn gauge(&self, x: &Point) -> Result<f64> {
        let g = self.blueprint.gauge(x)?;
        let n = euclid_norm(x);
        Ok((g * g + self.eta * n * n).sqrt())
    }
}

/// Maximum of all rotund terms and the Euclidean floor.
#[derive(Debug, Clone)]
pub struct CompositeNorm {
    config: SchemeConfig,
    terms: Vec<LurNorm>,
    /// Coefficient of the Euclidean floor, `(1 - rho/8)^{-1}`.
    pub euclid_factor: f64,
}

impl CompositeNorm {
    pub fn build(config: SchemeConfig, tol: ToleranceConfig) -> Result<Self> {
        config.validate()?;
        tol.validate()?;
        let d = config.dim;
        let v = Point::basis(d, config.v_index - 1);
        let v_star = Functional::basis(d, config.v_index - 1);
        let mut terms = Vec::with_capacity(config.levels);
        for n in 1..=config.levels {
            let alpha = AlphaTuple::new(
                v.clone(),
                v_star.clone(),
                Point::basis(d, n - 1),
                Functional::basis(d, n - 1),
                Point::basis(d, n),
                Functional::basis(d, n),
                config.t(n),
                config.rho,
            )?;
            let blueprint = BlueprintNorm::new(alpha, tol.clone())?;
            terms.push(LurNorm::new(TermId(n), blueprint, config.eta(n))?);
        }
        Ok(CompositeNorm {
            euclid_factor: 1.0 / (1.0 - config.rho / 8.0),
            config,
            terms,
        })
    }

    pub fn canonical() -> Result<Self> {
        CompositeNorm::build(SchemeConfig::canonical(), ToleranceConfig::default())
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.config
    }

    pub fn terms(&self) -> &[LurNorm] {
        &self.terms
    }

    pub fn term(&self, id: TermId) -> Result<&LurNorm> {
        if id.0 == 0 || id.0 > self.terms.len() {
            return Err(Error::constraint(
                "term index in 1..=levels",
                format!("requested term {}, levels = {}", id.0, self.terms.len()),
            ));
        }
        Ok(&self.terms[id.0 - 1])
    }

    /// Term ids whose value at `x` comes within relative `slack` of the
    /// maximum; `TermId(0)` denotes the Euclidean floor.
    pub fn active_terms(&self, x: &Point, slack: f64) -> Result<Vec<TermId>> {
        let mut values = vec![(TermId(0), self.euclid_factor * euclid_norm(x))];
        for term in &self.terms {
            values.push((term.term(), term.gauge(x)?));
        }
        let max = values.iter().map(|(_, v)| *v).fold(0.0f64, f64::max);
        Ok(values
            .into_iter()
            .filter(|(_, v)| *v >= max * (1.0 - slack))
            .map(|(id, _)| id)
            .collect())
    }
}

impl Gauge for CompositeNorm {
    fn dim(&self) -> usize {
        self.config.dim
    }

    fn rel_tol(&self) -> f64 {
        self.terms
            .first()
            .map(|t| t.rel_tol())
            .unwrap_or(1e-10)
    }

    fn gauge(&self, x: &Point) -> Result<f64> {
        self.check_dim(x, "composite norm")?;
        let mut best = self.euclid_factor * euclid_norm(x);
        for term in &self.terms {
            best = best.max(term.gauge(x)?);
        }
        Ok(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::sample_unit_ball;

    #[test]
    fn canonical_ladder_scalars() {
        let c = SchemeConfig::canonical();
        c.validate().unwrap();
        let want_t = [0.00625, 0.003125, 0.0015625, 0.00078125];
        for (n, w) in (1..=4).zip(want_t) {
            assert!((c.t(n) - w).abs() <= 1e-18, "t_{n}");
        }
        assert!((c.eta(1) - 4.8828125e-8).abs() <= 1e-20);
        assert!(c.eta(1) < c.t(1) * c.rho / 12800.0);
    }

    #[test]
    fn config_rejections() {
        let mut c = SchemeConfig::canonical();
        c.dim = 6;
        assert!(matches!(
            c.validate(),
            Err(Error::Constraint { name: "dim >= levels + 3", .. })
        ));
        let mut c = SchemeConfig::canonical();
        c.v_index = 3;
        assert!(matches!(
            c.validate(),
            Err(Error::Constraint { name: "levels + 1 < v_index <= dim", .. })
        ));
        let mut c = SchemeConfig::canonical();
        c.rho = 0.25;
        assert!(c.validate().is_err());
    }

    #[test]
    fn rotund_term_sandwich() {
        let composite = CompositeNorm::canonical().unwrap();
        let term = composite.term(TermId(1)).unwrap();
        for x in sample_unit_ball(23, 120, 8) {
            let g = term.blueprint().gauge(&x).unwrap();
            let l = term.gauge(&x).unwrap();
            assert!(l >= g - 1e-12, "lower sandwich at {:?}", x.coords());
            assert!(
                l <= (1.0 + term.eta) * g + 1e-12,
                "upper sandwich: {l} vs {}",
                (1.0 + term.eta) * g
            );
        }
    }

    #[test]
    fn composite_distortion_window() {
        let composite = CompositeNorm::canonical().unwrap();
        let lo = 1.0 / 0.975;
        let hi = 1.0 / (0.975 * 0.8);
        for x in sample_unit_ball(29, 120, 8) {
            let n = euclid_norm(&x);
            if n < 1e-6 {
                continue;
            }
            let c = composite.gauge(&x).unwrap();
            assert!(c >= lo * n - 1e-9, "floor at {:?}", x.coords());
            assert!(c <= hi * n + 1e-9, "cap: {} vs {}", c / n, hi);
        }
    }

    #[test]
    fn shared_direction_touches_the_floor() {
        let composite = CompositeNorm::canonical().unwrap();
        let v = Point::basis(8, 6);
        let c = composite.gauge(&v).unwrap();
        assert!((c - 1.0 / 0.975).abs() <= 1e-9, "composite(v) = {c}");
        let active = composite.active_terms(&v, 1e-6).unwrap();
        assert_eq!(active, vec![TermId(0)]);
    }

    #[test]
    fn glued_vertex_activates_its_own_level() {
        let composite = CompositeNorm::canonical().unwrap();
        let y1 = composite.term(TermId(1)).unwrap().blueprint().points().y_plus.clone();
        let active = composite.active_terms(&y1, 1e-6).unwrap();
        assert_eq!(active, vec![TermId(1)]);
        let c = composite.gauge(&y1).unwrap();
        assert!((c - 1.0).abs() <= 1e-6, "composite(y_plus) = {c}");
    }

    #[test]
    fn cross_level_vertices_are_inert() {
        let composite = CompositeNorm::canonical().unwrap();
        let y1 = composite.term(TermId(1)).unwrap().blueprint().points().y_plus.clone();
        for m in 2..=4 {
            let g = composite.term(TermId(m)).unwrap().blueprint().gauge(&y1).unwrap();
            assert!(
                (g - euclid_norm(&y1)).abs() <= 1e-10,
                "level {m} should see only the Euclidean ball: {g}"
            );
        }
    }

    #[test]
    fn term_lookup_bounds() {
        let composite = CompositeNorm::canonical().unwrap();
        assert!(composite.term(TermId(0)).is_err());
        assert!(composite.term(TermId(5)).is_err());
        assert_eq!(composite.term(TermId(4)).unwrap().term(), TermId(4));
    }
}
