//! Model incidence manifolds in a fixed chart.
//!
//! `Z` is parametrized by `(x, t)` with `x` in `R^d`. The projections are
//! `pi1(x, t) = x`, `pi2(x, t) = x + gamma(t)` and the slicing submersion on
//! `Y` is `Pi(y) = y_1`. Curves satisfy `gamma_1(t) = t`, which makes
//! `Pi(pi2(x, t)) = x_1 + t` and pins the flow of `V1` to unit speed in the
//! `Pi` direction.
//!
//! In this chart `V1 = d/dt` spans the kernel of `D pi1` and
//! `V2 = d/dt - sum_i gamma_i'(t) d/dx_i` spans the kernel of `D pi2`. Both
//! fields depend on `t` only, so every iterated commutator is again a field
//! whose components are polynomials in `t`; `PolyField` exploits that.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::Poly;

/// Largest supported `dim Z = d + 1`.
pub const MAX_DIM: usize = 6;

/// Highest curve degree accepted by [`ModelFamily::new`].
pub const MAX_DEGREE: usize = 8;

/// Default RK4 steps per unit time.
pub const DEFAULT_STEPS_PER_UNIT: usize = 32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("point {point:?} lies outside the chart domain")]
    OutsideDomain { point: Vec<f64> },
    #[error("trajectory left the chart domain at time {exit_time}")]
    Boundary { exit_time: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, GeometryError>;

/// On-disk form of a model: `{"d": 2, "curve": [[0,1],[0,0,1]], "domain": [[-1,1],...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub d: usize,
    pub curve: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Vec<[f64; 2]>>,
}

/// A translation-invariant incidence relation given by a polynomial curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelSpec", into = "ModelSpec")]
pub struct ModelFamily {
    name: Option<String>,
    d: usize,
    curve: Vec<Poly>,
    dcurve: Vec<Poly>,
    domain: Vec<[f64; 2]>,
}

impl TryFrom<ModelSpec> for ModelFamily {
    type Error = GeometryError;

    fn try_from(spec: ModelSpec) -> Result<Self> {
        let mut model = ModelFamily::new(
            spec.d,
            spec.curve.into_iter().map(Poly::new).collect(),
            spec.domain,
        )?;
        model.name = spec.name;
        Ok(model)
    }
}

impl From<ModelFamily> for ModelSpec {
    fn from(m: ModelFamily) -> Self {
        ModelSpec {
            name: m.name,
            d: m.d,
            curve: m.curve.into_iter().map(Vec::from).collect(),
            domain: Some(m.domain),
        }
    }
}

impl ModelFamily {
    /// Builds a model, validating `gamma_1(t) = t`, the degree cap and the domain box.
    /// `domain` defaults to `[-1, 1]^(d+1)`.
    pub fn new(d: usize, curve: Vec<Poly>, domain: Option<Vec<[f64; 2]>>) -> Result<Self> {
        if d < 2 {
            return Err(GeometryError::InvalidModel(format!("d must be >= 2, got {d}")));
        }
        if d + 1 > MAX_DIM {
            return Err(GeometryError::InvalidModel(format!(
                "d + 1 = {} exceeds the supported maximum {MAX_DIM}",
                d + 1
            )));
        }
        if curve.len() != d {
            return Err(GeometryError::InvalidModel(format!(
                "expected {d} curve coordinates, got {}",
                curve.len()
            )));
        }
        if curve[0] != Poly::new(vec![0.0, 1.0]) {
            return Err(GeometryError::InvalidModel(
                "the first curve coordinate must be exactly t".into(),
            ));
        }
        for (i, p) in curve.iter().enumerate() {
            if !p.is_finite() {
                return Err(GeometryError::InvalidModel(format!(
                    "curve coordinate {} has non-finite coefficients",
                    i + 1
                )));
            }
            if p.degree() > MAX_DEGREE {
                return Err(GeometryError::InvalidModel(format!(
                    "curve coordinate {} has degree {} > {MAX_DEGREE}",
                    i + 1,
                    p.degree()
                )));
            }
        }
        let domain = domain.unwrap_or_else(|| vec![[-1.0, 1.0]; d + 1]);
        if domain.len() != d + 1 {
            return Err(GeometryError::InvalidModel(format!(
                "domain must have {} axes, got {}",
                d + 1,
                domain.len()
            )));
        }
        if domain
            .iter()
            .any(|[lo, hi]| !(lo.is_finite() && hi.is_finite() && lo < hi))
        {
            return Err(GeometryError::InvalidModel("domain bounds must satisfy lo < hi".into()));
        }
        let dcurve = curve.iter().map(Poly::derivative).collect();
        Ok(ModelFamily { name: None, d, curve, dcurve, domain })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// `dim Z`.
    pub fn dim(&self) -> usize {
        self.d + 1
    }

    pub fn curve(&self) -> &[Poly] {
        &self.curve
    }

    pub fn domain(&self) -> &[[f64; 2]] {
        &self.domain
    }

    pub fn gamma(&self, t: f64) -> Vec<f64> {
        self.curve.iter().map(|p| p.eval(t)).collect()
    }

    pub fn gamma_prime(&self, t: f64) -> Vec<f64> {
        self.dcurve.iter().map(|p| p.eval(t)).collect()
    }

    /// `x + gamma(t)`.
    pub fn pi2(&self, z: &ZPoint) -> Vec<f64> {
        z.x.iter().zip(&self.curve).map(|(x, p)| x + p.eval(z.t)).collect()
    }

    /// `Pi(pi2(z)) = x_1 + t`.
    pub fn pi_pi2(&self, z: &ZPoint) -> f64 {
        z.x[0] + self.curve[0].eval(z.t)
    }

    /// Whether the chart coordinates `(x, t)` lie in the domain box.
    pub fn contains_coords(&self, coords: &[f64]) -> bool {
        coords
            .iter()
            .zip(&self.domain)
            .all(|(c, [lo, hi])| *c >= *lo && *c <= *hi)
    }

    pub fn contains(&self, z: &ZPoint) -> bool {
        z.x.len() == self.d && z.t.is_finite() && self.contains_coords(&z.coords())
    }

    fn check_point(&self, z: &ZPoint) -> Result<()> {
        if z.x.len() != self.d {
            return Err(GeometryError::InvalidArgument(format!(
                "point has {} x-coordinates, model has d = {}",
                z.x.len(),
                self.d
            )));
        }
        if !self.contains(z) {
            return Err(GeometryError::OutsideDomain { point: z.coords() });
        }
        Ok(())
    }

    /// Velocity of `a1 V1 + a2 V2` at parameter `t`, written into `out[..d+1]`.
    #[inline]
    pub(crate) fn velocity(&self, t: f64, a1: f64, a2: f64, out: &mut [f64]) {
        for (o, dp) in out.iter_mut().zip(&self.dcurve) {
            *o = -a2 * dp.eval(t);
        }
        out[self.d] = a1 + a2;
    }

    /// One classical RK4 step of the autonomous system `phi' = a1 V1 + a2 V2`.
    #[inline]
    fn rk4_step(&self, state: &mut [f64], a1: f64, a2: f64, dt: f64) {
        let n = self.dim();
        let td = self.d;
        let mut k1 = [0.0; MAX_DIM];
        let mut k2 = [0.0; MAX_DIM];
        let mut k3 = [0.0; MAX_DIM];
        let mut k4 = [0.0; MAX_DIM];
        let t0 = state[td];
        self.velocity(t0, a1, a2, &mut k1);
        self.velocity(t0 + 0.5 * dt * k1[td], a1, a2, &mut k2);
        self.velocity(t0 + 0.5 * dt * k2[td], a1, a2, &mut k3);
        self.velocity(t0 + dt * k3[td], a1, a2, &mut k4);
        for i in 0..n {
            state[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }

    /// Integrates constant controls in place. On a domain exit the state is
    /// left at the first offending step and the elapsed time is returned.
    pub(crate) fn flow_in_place(
        &self,
        state: &mut [f64],
        a1: f64,
        a2: f64,
        duration: f64,
        steps: usize,
    ) -> std::result::Result<(), f64> {
        let steps = steps.max(1);
        let dt = duration / steps as f64;
        for k in 0..steps {
            self.rk4_step(state, a1, a2, dt);
            if !self.contains_coords(&state[..self.dim()]) {
                return Err((k + 1) as f64 * dt.abs());
            }
        }
        Ok(())
    }
}

/// Built-in models, addressable by name from scenario files.
pub mod catalog {
    use super::*;

    pub const NAMES: [&str; 4] = ["parabola", "cubic", "flat-cubic", "quartic"];

    /// `gamma(t) = (t, t^2)`.
    pub fn parabola() -> ModelFamily {
        ModelFamily::new(2, vec![Poly::monomial(1.0, 1), Poly::monomial(1.0, 2)], None)
            .expect("parabola is valid")
            .with_name("parabola")
    }

    /// Moment curve `gamma(t) = (t, t^2, t^3)`.
    pub fn cubic() -> ModelFamily {
        ModelFamily::new(
            3,
            vec![Poly::monomial(1.0, 1), Poly::monomial(1.0, 2), Poly::monomial(1.0, 3)],
            None,
        )
        .expect("cubic is valid")
        .with_name("cubic")
    }

    /// `gamma(t) = (t, t^3)`: the bracket condition needs depth 3 at `t = 0`.
    pub fn flat_cubic() -> ModelFamily {
        ModelFamily::new(2, vec![Poly::monomial(1.0, 1), Poly::monomial(1.0, 3)], None)
            .expect("flat-cubic is valid")
            .with_name("flat-cubic")
    }

    /// `gamma(t) = (t, t^2, t^4)`; its fields are not quadratic in `t`, so
    /// centered differences of `V2` carry a genuine `h^2` error term.
    pub fn quartic() -> ModelFamily {
        ModelFamily::new(
            3,
            vec![Poly::monomial(1.0, 1), Poly::monomial(1.0, 2), Poly::monomial(1.0, 4)],
            None,
        )
        .expect("quartic is valid")
        .with_name("quartic")
    }

    pub fn by_name(name: &str) -> Option<ModelFamily> {
        match name {
            "parabola" => Some(parabola()),
            "cubic" => Some(cubic()),
            "flat-cubic" => Some(flat_cubic()),
            "quartic" => Some(quartic()),
            _ => None,
        }
    }
}

/// A point of `Z` in chart coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZPoint {
    pub x: Vec<f64>,
    pub t: f64,
}

impl ZPoint {
    pub fn new(x: Vec<f64>, t: f64) -> Self {
        ZPoint { x, t }
    }

    pub fn origin(d: usize) -> Self {
        ZPoint { x: vec![0.0; d], t: 0.0 }
    }

    /// `(x_1, ..., x_d, t)`.
    pub fn coords(&self) -> Vec<f64> {
        let mut c = self.x.clone();
        c.push(self.t);
        c
    }

    pub fn from_coords(coords: &[f64]) -> Self {
        let (t, x) = coords.split_last().expect("coordinates are non-empty");
        ZPoint { x: x.to_vec(), t: *t }
    }

    pub fn distance_sup(&self, other: &ZPoint) -> f64 {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// A tangent vector at a base point; components ordered `(x_1..x_d, t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    pub base: ZPoint,
    pub components: Vec<f64>,
}

impl TangentVector {
    pub fn norm_sup(&self) -> f64 {
        self.components.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// Index of one of the two fibre fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Field {
    V1,
    V2,
}

impl Field {
    pub fn from_index(i: usize) -> Result<Field> {
        match i {
            1 => Ok(Field::V1),
            2 => Ok(Field::V2),
            _ => Err(GeometryError::InvalidArgument(format!("field index must be 1 or 2, got {i}"))),
        }
    }
}

/// A vector field on `Z` whose components are polynomials in `t` alone.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyField {
    pub comps: Vec<Poly>,
}

impl PolyField {
    pub fn v1(model: &ModelFamily) -> Self {
        let mut comps = vec![Poly::zero(); model.d];
        comps.push(Poly::constant(1.0));
        PolyField { comps }
    }

    pub fn v2(model: &ModelFamily) -> Self {
        let mut comps: Vec<Poly> = model.dcurve.iter().map(|p| p.scale(-1.0)).collect();
        comps.push(Poly::constant(1.0));
        PolyField { comps }
    }

    pub fn of(model: &ModelFamily, f: Field) -> Self {
        match f {
            Field::V1 => Self::v1(model),
            Field::V2 => Self::v2(model),
        }
    }

    /// `[X, Y] = DY.X - DX.Y`. Only `d/dt` acts, so this is `X_t Y' - Y_t X'`.
    pub fn bracket(&self, other: &PolyField) -> PolyField {
        let n = self.comps.len();
        let xt = &self.comps[n - 1];
        let yt = &other.comps[n - 1];
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(xc, yc)| xt.mul(&yc.derivative()).sub(&yt.mul(&xc.derivative())))
            .collect();
        PolyField { comps }
    }

    pub fn scale(&self, s: f64) -> PolyField {
        PolyField { comps: self.comps.iter().map(|p| p.scale(s)).collect() }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        self.comps.iter().map(|p| p.eval(t)).collect()
    }
}

/// `(V1(z), V2(z))`.
pub fn eval_fields(model: &ModelFamily, z: &ZPoint) -> Result<(TangentVector, TangentVector)> {
    model.check_point(z)?;
    let n = model.dim();
    let mut v1 = vec![0.0; n];
    let mut v2 = vec![0.0; n];
    model.velocity(z.t, 1.0, 0.0, &mut v1);
    model.velocity(z.t, 0.0, 1.0, &mut v2);
    Ok((
        TangentVector { base: z.clone(), components: v1 },
        TangentVector { base: z.clone(), components: v2 },
    ))
}

/// `D pi1 . v` (drop the `t` component).
pub fn dpi1(model: &ModelFamily, v: &TangentVector) -> Vec<f64> {
    v.components[..model.d].to_vec()
}

/// `D pi2 . v = v_x + gamma'(t) v_t`.
pub fn dpi2(model: &ModelFamily, v: &TangentVector) -> Vec<f64> {
    let vt = v.components[model.d];
    model
        .gamma_prime(v.base.t)
        .iter()
        .zip(&v.components)
        .map(|(g, vx)| vx + g * vt)
        .collect()
}

/// RK4 integration of `phi' = a1 V1 + a2 V2` for constant controls.
pub fn flow(
    model: &ModelFamily,
    z: &ZPoint,
    controls: (f64, f64),
    duration: f64,
    steps: usize,
) -> Result<ZPoint> {
    if steps == 0 {
        return Err(GeometryError::InvalidArgument("steps must be >= 1".into()));
    }
    if !(duration.abs() <= 1.0) {
        return Err(GeometryError::InvalidArgument(format!("|duration| must be <= 1, got {duration}")));
    }
    model.check_point(z)?;
    let mut state = z.coords();
    model
        .flow_in_place(&mut state, controls.0, controls.1, duration, steps)
        .map_err(|exit_time| GeometryError::Boundary { exit_time })?;
    Ok(ZPoint::from_coords(&state))
}

fn field_at(model: &ModelFamily, f: Field, coords: &[f64]) -> Vec<f64> {
    let n = model.dim();
    let mut out = vec![0.0; n];
    let t = coords[n - 1];
    match f {
        Field::V1 => model.velocity(t, 1.0, 0.0, &mut out),
        Field::V2 => model.velocity(t, 0.0, 1.0, &mut out),
    }
    out
}

/// `[Vi, Vj](z)` by centred differences of the field components with step `h`.
pub fn lie_bracket(model: &ModelFamily, z: &ZPoint, i: usize, j: usize, h: f64) -> Result<TangentVector> {
    if !(h > 0.0) {
        return Err(GeometryError::InvalidArgument(format!("step h must be positive, got {h}")));
    }
    model.check_point(z)?;
    let (fi, fj) = (Field::from_index(i)?, Field::from_index(j)?);
    let n = model.dim();
    let c = z.coords();
    let xi = field_at(model, fi, &c);
    let xj = field_at(model, fj, &c);
    // directional derivative of field `g` along `dir`, one partial at a time
    let dderiv = |g: Field, dir: &[f64]| -> Vec<f64> {
        let mut acc = vec![0.0; n];
        for m in 0..n {
            if dir[m] == 0.0 {
                continue;
            }
            let mut plus = c.clone();
            let mut minus = c.clone();
            plus[m] += h;
            minus[m] -= h;
            let gp = field_at(model, g, &plus);
            let gm = field_at(model, g, &minus);
            for k in 0..n {
                acc[k] += dir[m] * (gp[k] - gm[k]) / (2.0 * h);
            }
        }
        acc
    };
    let a = dderiv(fj, &xi);
    let b = dderiv(fi, &xj);
    Ok(TangentVector {
        base: z.clone(),
        components: a.iter().zip(&b).map(|(p, q)| p - q).collect(),
    })
}

/// `[Vi, Vj](z)` from the exact polynomial bracket.
pub fn symbolic_bracket(model: &ModelFamily, z: &ZPoint, i: usize, j: usize) -> Result<TangentVector> {
    model.check_point(z)?;
    let xi = PolyField::of(model, Field::from_index(i)?);
    let xj = PolyField::of(model, Field::from_index(j)?);
    Ok(TangentVector { base: z.clone(), components: xi.bracket(&xj).eval(z.t) })
}

/// A bracket word such as `[V1,[V1,V2]]`, stored as its letters left to right.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BracketWord(pub Vec<Field>);

impl BracketWord {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of occurrences of `V1` and `V2`.
    pub fn counts(&self) -> (usize, usize) {
        let n1 = self.0.iter().filter(|f| **f == Field::V1).count();
        (n1, self.0.len() - n1)
    }
}

impl std::fmt::Display for BracketWord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = |x: &Field| match x {
            Field::V1 => "V1",
            Field::V2 => "V2",
        };
        let n = self.0.len();
        for (k, x) in self.0.iter().enumerate() {
            if k + 1 < n {
                write!(f, "[{},", name(x))?;
            } else {
                write!(f, "{}", name(x))?;
            }
        }
        for _ in 1..n {
            write!(f, "]")?;
        }
        Ok(())
    }
}

/// All right-nested brackets of length `1..=depth`, with their symbolic fields.
/// Right-nested words span the Lie algebra generated by `V1, V2`.
pub fn bracket_table(model: &ModelFamily, depth: usize, scales: [f64; 2]) -> Vec<(BracketWord, PolyField)> {
    let base = [
        (Field::V1, PolyField::v1(model).scale(scales[0])),
        (Field::V2, PolyField::v2(model).scale(scales[1])),
    ];
    let mut out: Vec<(BracketWord, PolyField)> =
        base.iter().map(|(f, p)| (BracketWord(vec![*f]), p.clone())).collect();
    let mut level = out.clone();
    for _ in 1..depth {
        let mut next = Vec::new();
        // [Vi, Vi] vanishes and is skipped
        for (f, p) in &base {
            for (word, field) in &level {
                if word.len() == 1 && word.0[0] == *f {
                    continue;
                }
                let mut letters = vec![*f];
                letters.extend(word.0.iter().copied());
                next.push((BracketWord(letters), p.bracket(field)));
            }
        }
        out.extend(next.iter().cloned());
        level = next;
    }
    out
}

fn matrix_rank(vectors: &[Vec<f64>], n: usize) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(n, vectors.len(), |r, c| vectors[c][r]);
    let svd = m.svd(false, false);
    let smax = svd.singular_values.iter().fold(0.0_f64, |a, b| a.max(*b));
    if smax == 0.0 {
        return 0;
    }
    svd.singular_values.iter().filter(|s| **s > 1e-9 * smax).count()
}

/// Rank of the span of `V1, V2` and their brackets up to length `depth` at `z`.
pub fn bracket_rank(model: &ModelFamily, z: &ZPoint, depth: usize) -> Result<usize> {
    bracket_rank_scaled(model, z, depth, [1.0, 1.0])
}

/// [`bracket_rank`] for the rescaled pair `(s1 V1, s2 V2)`.
pub fn bracket_rank_scaled(model: &ModelFamily, z: &ZPoint, depth: usize, scales: [f64; 2]) -> Result<usize> {
    if depth == 0 {
        return Err(GeometryError::InvalidArgument("depth must be >= 1".into()));
    }
    if scales.iter().any(|s| *s == 0.0 || !s.is_finite()) {
        return Err(GeometryError::InvalidArgument("field scales must be finite and nonzero".into()));
    }
    model.check_point(z)?;
    let vectors: Vec<Vec<f64>> =
        bracket_table(model, depth, scales).iter().map(|(_, f)| f.eval(z.t)).collect();
    Ok(matrix_rank(&vectors, model.dim()))
}

/// Brackets chosen greedily, largest weight `delta1^n1 delta2^n2` first, until
/// they span the tangent space at `z`. Returns the chosen words and weights,
/// or `None` if `max_depth` is not enough.
pub fn weighted_bracket_basis(
    model: &ModelFamily,
    z: &ZPoint,
    delta1: f64,
    delta2: f64,
    max_depth: usize,
) -> Result<Option<Vec<(BracketWord, f64)>>> {
    model.check_point(z)?;
    let n = model.dim();
    let mut table: Vec<(BracketWord, f64, Vec<f64>)> = bracket_table(model, max_depth, [1.0, 1.0])
        .into_iter()
        .map(|(w, f)| {
            let (n1, n2) = w.counts();
            let weight = delta1.powi(n1 as i32) * delta2.powi(n2 as i32);
            (w, weight, f.eval(z.t))
        })
        .collect();
    table.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.len().cmp(&b.0.len())));
    let mut chosen: Vec<Vec<f64>> = Vec::new();
    let mut basis = Vec::new();
    for (word, weight, v) in table {
        chosen.push(v);
        if matrix_rank(&chosen, n) == chosen.len() {
            basis.push((word, weight));
            if basis.len() == n {
                return Ok(Some(basis));
            }
        } else {
            chosen.pop();
        }
    }
    Ok(None)
}

/// `|Pi pi2(exp(s V1) z) - Pi pi2(z) - s|`.
pub fn check_v1_normalization(model: &ModelFamily, z: &ZPoint, s: f64) -> Result<f64> {
    let steps = ((s.abs() * DEFAULT_STEPS_PER_UNIT as f64).ceil() as usize).max(1);
    let moved = flow(model, z, (1.0, 0.0), s, steps)?;
    Ok((model.pi_pi2(&moved) - model.pi_pi2(z) - s).abs())
}
