//! Manifold configuration: chart, metric component table, domain and
//! periodic identifications.
//!
//! Config files are TOML with four sections:
//!
//! ```toml
//! [manifold]
//! name = "sphere-stereographic"
//! dim = 2
//! coords = ["x1", "x2"]
//! signature = [2, 0]          # (positive, negative) eigenvalue counts
//! time_coord = "t"            # Lorentzian charts only
//!
//! [metric]                    # g<i><j> (1-based), i <= j; missing off-diagonals are 0
//! g11 = "4/(1+x1^2+x2^2)^2"
//! g22 = "4/(1+x1^2+x2^2)^2"
//!
//! [domain]                    # all optional
//! box = [[-1e3, 1e3], [-1e3, 1e3]]
//! inequalities = ["1 - x1^2"] # each expression must be > 0
//! excluded_balls = [{ center = [1.0, 0.0], radius = 0.05 }]
//! sample_box = [[-2, 2], [-2, 2]]   # validation lattice extent
//!
//! [periodic]                  # optional, coordinate name -> period
//! x1 = 1.0
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::dual::{Dual, Real, MAX_DIM};
use crate::error::{ConfigError, EvalError, GeometryError};
use crate::expr::{parse_expr, Expr};

pub(crate) type Mat<T> = [[T; MAX_DIM]; MAX_DIM];
/// `(g, g⁻¹, ∂g)` at a point.
pub(crate) type Jet<T> = (Mat<T>, Mat<T>, [Mat<T>; MAX_DIM]);

/// Condition number above which a metric matrix is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

const LATTICE_PER_DIM: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub positive: usize,
    pub negative: usize,
}

impl Signature {
    pub fn is_riemannian(&self) -> bool {
        self.negative == 0
    }

    pub fn is_lorentzian(&self) -> bool {
        self.negative == 1 && self.positive >= 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone)]
pub struct Domain {
    bounds: Vec<(f64, f64)>,
    inequalities: Vec<Expr>,
    excluded: Vec<Ball>,
}

/// The manifold `(M, g)` in a single chart.
#[derive(Debug, Clone)]
pub struct MetricSpec {
    name: String,
    dim: usize,
    coords: Vec<String>,
    /// Upper triangle, row-major: (0,0), (0,1), .., (1,1), ..
    components: Vec<Expr>,
    constants: Vec<Option<f64>>,
    signature: Signature,
    time_coord: Option<usize>,
    domain: Domain,
    periods: Vec<Option<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    manifold: RawManifold,
    metric: BTreeMap<String, RawComponent>,
    #[serde(default)]
    domain: RawDomain,
    #[serde(default)]
    periodic: BTreeMap<String, f64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawComponent {
    Text(String),
    Number(f64),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifold {
    #[serde(default)]
    name: Option<String>,
    dim: usize,
    #[serde(default)]
    coords: Option<Vec<String>>,
    signature: [usize; 2],
    #[serde(default)]
    time_coord: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    #[serde(rename = "box", default)]
    bounds: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    inequalities: Vec<String>,
    #[serde(default)]
    excluded_balls: Vec<Ball>,
    #[serde(default)]
    sample_box: Option<Vec<[f64; 2]>>,
}

/// Parses a manifold config and validates it on a deterministic lattice.
pub fn parse_metric(config: &str) -> Result<MetricSpec, ConfigError> {
    let raw: RawConfig = toml::from_str(config).map_err(|e| ConfigError::Format(e.to_string()))?;
    let m = &raw.manifold;
    let n = m.dim;
    if n < 2 {
        return Err(ConfigError::Format(format!("dim must be >= 2, got {n}")));
    }
    if n > MAX_DIM {
        return Err(ConfigError::Format(format!(
            "dim {n} exceeds the supported maximum {MAX_DIM}"
        )));
    }
    let coords = match &m.coords {
        Some(c) => c.clone(),
        None => (1..=n).map(|i| format!("x{i}")).collect(),
    };
    if coords.len() != n {
        return Err(ConfigError::Format(format!(
            "{} coordinate names for dim {n}",
            coords.len()
        )));
    }
    for (i, c) in coords.iter().enumerate() {
        if coords[..i].contains(c) {
            return Err(ConfigError::Format(format!("duplicate coordinate `{c}`")));
        }
    }
    let signature = Signature {
        positive: m.signature[0],
        negative: m.signature[1],
    };
    if signature.positive + signature.negative != n {
        return Err(ConfigError::Format(format!(
            "signature ({},{}) does not add up to dim {n}",
            signature.positive, signature.negative
        )));
    }
    let time_coord = match &m.time_coord {
        Some(name) => Some(
            coords
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| ConfigError::Format(format!("unknown time coordinate `{name}`")))?,
        ),
        None if signature.is_lorentzian() => {
            return Err(ConfigError::Format(
                "Lorentzian charts must declare manifold.time_coord".into(),
            ))
        }
        None => None,
    };

    // Component table.
    let mut table: BTreeMap<(usize, usize), (String, Expr)> = BTreeMap::new();
    for (key, value) in &raw.metric {
        let (i, j) = component_index(key, n).ok_or_else(|| ConfigError::Format(format!("bad metric key `{key}`")))?;
        let text = match value {
            RawComponent::Text(s) => s.clone(),
            RawComponent::Number(x) => format!("{x:?}"),
        };
        let e = parse_expr(&text, &coords).map_err(|source| ConfigError::Expr {
            name: key.clone(),
            source,
        })?;
        table.insert((i, j), (key.clone(), e));
    }
    let mut components = Vec::with_capacity(n * (n + 1) / 2);
    let mut mirrored = Vec::new();
    for i in 0..n {
        for j in i..n {
            let upper = table.get(&(i, j)).map(|(_, e)| e.clone());
            let lower = if i != j {
                table.get(&(j, i)).map(|(_, e)| e.clone())
            } else {
                None
            };
            let e = match (upper, lower) {
                (Some(u), Some(l)) => {
                    mirrored.push((i, j, u.clone(), l));
                    u
                }
                (Some(u), None) => u,
                (None, Some(l)) => l,
                (None, None) if i != j => parse_expr("0", &coords).expect("literal"),
                (None, None) => {
                    return Err(ConfigError::Format(format!(
                        "missing diagonal component g{}{}",
                        i + 1,
                        i + 1
                    )))
                }
            };
            components.push(e);
        }
    }
    let constants = components.iter().map(Expr::as_constant).collect();

    // Domain.
    let d = &raw.domain;
    let bounds = match &d.bounds {
        Some(b) => {
            if b.len() != n {
                return Err(ConfigError::Domain(format!("box has {} ranges for dim {n}", b.len())));
            }
            b.iter()
                .map(|[lo, hi]| {
                    if lo < hi {
                        Ok((*lo, *hi))
                    } else {
                        Err(ConfigError::Domain(format!("empty box range [{lo}, {hi}]")))
                    }
                })
                .collect::<Result<Vec<_>, _>>()?
        }
        None => vec![(f64::NEG_INFINITY, f64::INFINITY); n],
    };
    let inequalities = d
        .inequalities
        .iter()
        .enumerate()
        .map(|(k, s)| {
            parse_expr(s, &coords).map_err(|source| ConfigError::Expr {
                name: format!("domain.inequalities[{k}]"),
                source,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    for ball in &d.excluded_balls {
        if ball.center.len() != n || !(ball.radius > 0.0) {
            return Err(ConfigError::Domain(format!("bad excluded ball {ball:?}")));
        }
        for (c, (lo, hi)) in ball.center.iter().zip(&bounds) {
            if c - ball.radius <= *lo || c + ball.radius >= *hi {
                return Err(ConfigError::Domain(format!(
                    "excluded ball {ball:?} is not inside the coordinate box"
                )));
            }
        }
    }
    let mut periods = vec![None; n];
    for (name, p) in &raw.periodic {
        let i = coords
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| ConfigError::Format(format!("unknown periodic coordinate `{name}`")))?;
        if !(*p > 0.0) {
            return Err(ConfigError::Format(format!("period of `{name}` must be positive")));
        }
        periods[i] = Some(*p);
    }

    let spec = MetricSpec {
        name: m.name.clone().unwrap_or_else(|| "manifold".into()),
        dim: n,
        coords,
        components,
        constants,
        signature,
        time_coord,
        domain: Domain {
            bounds,
            inequalities,
            excluded: d.excluded_balls.clone(),
        },
        periods,
    };

    let sample_box = match &d.sample_box {
        Some(b) if b.len() == n => b.iter().map(|r| (r[0], r[1])).collect(),
        Some(_) => return Err(ConfigError::Domain("sample_box dimension mismatch".into())),
        None => (0..n)
            .map(|i| match spec.periods[i] {
                Some(p) => (0.0, p),
                None => (spec.domain.bounds[i].0.max(-2.0), spec.domain.bounds[i].1.min(2.0)),
            })
            .collect::<Vec<_>>(),
    };
    spec.validate(&sample_box, &mirrored)?;
    Ok(spec)
}

fn component_index(key: &str, n: usize) -> Option<(usize, usize)> {
    let rest = key.strip_prefix('g')?;
    let (a, b) = if let Some(r) = rest.strip_prefix('_') {
        let mut it = r.split('_');
        let a = it.next()?;
        let b = it.next()?;
        if it.next().is_some() {
            return None;
        }
        (a.parse::<usize>().ok()?, b.parse::<usize>().ok()?)
    } else {
        let bytes = rest.as_bytes();
        if bytes.len() != 2 || !bytes.iter().all(u8::is_ascii_digit) {
            return None;
        }
        ((bytes[0] - b'0') as usize, (bytes[1] - b'0') as usize)
    };
    if a == 0 || b == 0 || a > n || b > n {
        return None;
    }
    Some((a - 1, b - 1))
}

impl MetricSpec {
    pub fn from_file(path: impl AsRef<Path>) -> Result<MetricSpec, ConfigError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| ConfigError::Format(format!("{}: {e}", path.as_ref().display())))?;
        parse_metric(&text)
    }

    /// One of the configs shipped in `manifolds/`.
    pub fn builtin(name: &str) -> Option<MetricSpec> {
        let text = match name {
            "euclid" => include_str!("../../../manifolds/euclid.toml"),
            "minkowski" => include_str!("../../../manifolds/minkowski.toml"),
            "sphere" => include_str!("../../../manifolds/sphere.toml"),
            "torus" => include_str!("../../../manifolds/torus.toml"),
            "punctured-plane" => include_str!("../../../manifolds/punctured-plane.toml"),
            "punctured-mink" => include_str!("../../../manifolds/punctured-mink.toml"),
            "conformal-mink" => include_str!("../../../manifolds/conformal-mink.toml"),
            _ => return None,
        };
        Some(parse_metric(text).expect("shipped config is valid"))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    pub fn time_coord(&self) -> Option<usize> {
        self.time_coord
    }

    pub fn periods(&self) -> &[Option<f64>] {
        &self.periods
    }

    pub fn excluded_balls(&self) -> &[Ball] {
        &self.domain.excluded
    }

    pub fn is_periodic(&self) -> bool {
        self.periods.iter().any(Option::is_some)
    }

    /// Component expression `g_ij` (symmetric access).
    pub fn component(&self, i: usize, j: usize) -> &Expr {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        &self.components[upper_index(self.dim, i, j)]
    }

    /// Coordinates with periodic entries reduced into `[0, period)`.
    pub fn reduce(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.periods)
            .map(|(&xi, p)| match p {
                Some(p) => xi - p * (xi / p).floor(),
                None => xi,
            })
            .collect()
    }

    /// `a − b`, with periodic coordinates taken to the nearest image.
    pub fn chart_difference(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter()
            .zip(b)
            .zip(&self.periods)
            .map(|((x, y), p)| {
                let d = x - y;
                match p {
                    Some(p) => d - p * (d / p).round(),
                    None => d,
                }
            })
            .collect()
    }

    /// Length scale of the thinnest domain feature, used to subsample
    /// integrator steps when looking for domain exits.
    pub(crate) fn feature_scale(&self) -> f64 {
        let mut s = f64::INFINITY;
        for b in &self.domain.excluded {
            s = s.min(b.radius);
        }
        if !self.domain.inequalities.is_empty() {
            s = s.min(0.1);
        }
        s
    }

    /// Signed distance-like margin to the nearest domain constraint:
    /// positive strictly inside, `+inf` when unconstrained.
    pub fn margin(&self, x: &[f64]) -> f64 {
        if x.len() != self.dim || x.iter().any(|v| !v.is_finite()) {
            return f64::NEG_INFINITY;
        }
        let mut m = f64::INFINITY;
        for (i, (lo, hi)) in self.domain.bounds.iter().enumerate() {
            if self.periods[i].is_none() {
                m = m.min(x[i] - lo).min(hi - x[i]);
            }
        }
        for ball in &self.domain.excluded {
            let d2: f64 = x
                .iter()
                .zip(&ball.center)
                .zip(&self.periods)
                .map(|((xi, ci), p)| {
                    let mut d = xi - ci;
                    if let Some(p) = p {
                        d -= p * (d / p).round();
                    }
                    d * d
                })
                .sum();
            m = m.min(d2.sqrt() - ball.radius);
        }
        if !self.domain.inequalities.is_empty() {
            let xr = self.reduce(x);
            for ineq in &self.domain.inequalities {
                match crate::expr::eval_dual(ineq, &xr) {
                    Ok(d) => {
                        let g = d.partials.iter().map(|p| p * p).sum::<f64>().sqrt();
                        let dist = if g > 1e-12 { d.value / g } else { d.value * 1e12 };
                        m = m.min(dist);
                    }
                    Err(_) => return f64::NEG_INFINITY,
                }
            }
        }
        m
    }

    /// Metric components and their first partials at `x`, over any scalar.
    /// `dg[m][i][j] = ∂_m g_ij`.
    pub(crate) fn metric_jet<T: Real>(&self, x: &[T]) -> Result<Jet<T>, GeometryError> {
        let n = self.dim;
        let zero = T::cst(0.0);
        let mut seeded = [Dual::constant(zero); MAX_DIM];
        for i in 0..n {
            let mut xi = x[i];
            if let Some(p) = self.periods[i] {
                let k = (xi.re() / p).floor();
                xi = xi - T::cst(p * k);
            }
            seeded[i] = Dual::variable(xi, i);
        }
        let mut g = [[zero; MAX_DIM]; MAX_DIM];
        let mut dg = [[[zero; MAX_DIM]; MAX_DIM]; MAX_DIM];
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                let v = match self.constants[k] {
                    Some(c) => Dual::constant(T::cst(c)),
                    None => self.components[k].eval(&seeded[..n])?,
                };
                g[i][j] = v.re;
                g[j][i] = v.re;
                for m in 0..n {
                    dg[m][i][j] = v.eps[m];
                    dg[m][j][i] = v.eps[m];
                }
                k += 1;
            }
        }
        let ginv = invert(&g, n).map_err(|cond| GeometryError::SingularMetric { cond })?;
        Ok((g, ginv, dg))
    }

    /// Plain metric matrix at `x` (no domain check).
    pub(crate) fn metric_matrix(&self, x: &[f64]) -> Result<DMatrix<f64>, EvalError> {
        let n = self.dim;
        let xr = self.reduce(x);
        let mut g = DMatrix::zeros(n, n);
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                let v = match self.constants[k] {
                    Some(c) => c,
                    None => self.components[k].eval_f64(&xr)?,
                };
                g[(i, j)] = v;
                g[(j, i)] = v;
                k += 1;
            }
        }
        Ok(g)
    }

    fn validate(&self, sample_box: &[(f64, f64)], mirrored: &[(usize, usize, Expr, Expr)]) -> Result<(), ConfigError> {
        let n = self.dim;
        let total = LATTICE_PER_DIM.pow(n as u32);
        let mut checked = 0;
        for idx in 0..total {
            let mut rem = idx;
            let mut x = vec![0.0; n];
            for (i, xi) in x.iter_mut().enumerate() {
                let k = rem % LATTICE_PER_DIM;
                rem /= LATTICE_PER_DIM;
                let (lo, hi) = sample_box[i];
                *xi = lo + (k as f64 + 0.5) / LATTICE_PER_DIM as f64 * (hi - lo);
            }
            if self.margin(&x) <= 0.0 {
                continue;
            }
            checked += 1;
            let xr = self.reduce(&x);
            for (i, j, u, l) in mirrored {
                let a = u.eval_f64(&xr);
                let b = l.eval_f64(&xr);
                let same = match (a, b) {
                    (Ok(a), Ok(b)) => (a - b).abs() <= 1e-12 * (1.0 + a.abs()),
                    _ => false,
                };
                if !same {
                    return Err(ConfigError::Asymmetric(format!(
                        "g{}{} != g{}{} at {x:?}",
                        i + 1,
                        j + 1,
                        j + 1,
                        i + 1
                    )));
                }
            }
            let g = self
                .metric_matrix(&x)
                .map_err(|_| ConfigError::Degenerate { point: x.clone() })?;
            let cond = condition_number(&g);
            if !(cond <= MAX_CONDITION) {
                return Err(ConfigError::Degenerate { point: x });
            }
            let eig = SymmetricEigen::new(g);
            let pos = eig.eigenvalues.iter().filter(|&&e| e > 0.0).count();
            let neg = eig.eigenvalues.iter().filter(|&&e| e < 0.0).count();
            if pos != self.signature.positive || neg != self.signature.negative {
                return Err(ConfigError::Signature {
                    pos: self.signature.positive,
                    neg: self.signature.negative,
                    found_pos: pos,
                    found_neg: neg,
                    point: x,
                });
            }
        }
        if checked == 0 {
            return Err(ConfigError::EmptyDomain);
        }
        Ok(())
    }
}

fn upper_index(n: usize, i: usize, j: usize) -> usize {
    i * n - i * (i + 1) / 2 + j
}

/// 1-norm condition number; infinite for singular matrices.
pub fn condition_number(g: &DMatrix<f64>) -> f64 {
    let norm1 = |m: &DMatrix<f64>| {
        (0..m.ncols())
            .map(|j| m.column(j).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    match g.clone().lu().try_inverse() {
        Some(inv) if inv.iter().all(|v| v.is_finite()) => norm1(g) * norm1(&inv),
        _ => f64::INFINITY,
    }
}

/// Gauss-Jordan inverse with partial pivoting on the real parts.
pub(crate) fn invert<T: Real>(a: &Mat<T>, n: usize) -> Result<Mat<T>, f64> {
    let zero = T::cst(0.0);
    let one = T::cst(1.0);
    let mut m = *a;
    let mut inv = [[zero; MAX_DIM]; MAX_DIM];
    for (i, row) in inv.iter_mut().enumerate().take(n) {
        row[i] = one;
    }
    let scale = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| a[i][j].re().abs())
        .fold(0.0, f64::max);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&r, &s| m[r][col].re().abs().total_cmp(&m[s][col].re().abs()))
            .expect("nonempty");
        if !(m[piv][col].re().abs() > 1e-300 * scale.max(1e-300)) {
            return Err(f64::INFINITY);
        }
        m.swap(col, piv);
        inv.swap(col, piv);
        let p = one / m[col][col];
        for j in 0..n {
            m[col][j] = m[col][j] * p;
            inv[col][j] = inv[col][j] * p;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                for j in 0..n {
                    m[r][j] = m[r][j] - f * m[col][j];
                    inv[r][j] = inv[r][j] - f * inv[col][j];
                }
            }
        }
    }
    Ok(inv)
}
