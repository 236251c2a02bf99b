//! Exact point–line incidences in the rational plane, the Szemerédi–Trotter
//! bound `4p^{2/3}l^{2/3} + 4p + l`, and the two configurations used to pass
//! from sum/product information to incidences.

use std::collections::{HashMap, HashSet};

use num_bigint::BigUint;
use num_integer::Roots;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::RepHistogram;
use crate::error::{Error, Result};
use crate::exact;
use crate::sets::{combine, int, rat, FiniteRealSet, Rational, SetOp};

/// Default cap on membership tests, `|L| · #distinct x-coordinates of P`.
pub const DEFAULT_INCIDENCE_CAP: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point {
    #[serde(with = "exact::serde_rational")]
    pub x: Rational,
    #[serde(with = "exact::serde_rational")]
    pub y: Rational,
}

impl Point {
    pub fn new(x: Rational, y: Rational) -> Self {
        Point { x, y }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Line {
    /// `y = slope·x + intercept`.
    Graph {
        #[serde(with = "exact::serde_rational")]
        slope: Rational,
        #[serde(with = "exact::serde_rational")]
        intercept: Rational,
    },
    /// `x = at`.
    Vertical {
        #[serde(with = "exact::serde_rational")]
        at: Rational,
    },
}

impl Line {
    pub fn graph(slope: Rational, intercept: Rational) -> Self {
        Line::Graph { slope, intercept }
    }

    /// The line `ux + vy = w`.
    pub fn from_implicit(u: &Rational, v: &Rational, w: &Rational) -> Result<Self> {
        if !v.is_zero() {
            Ok(Line::Graph { slope: -(u / v), intercept: w / v })
        } else if !u.is_zero() {
            Ok(Line::Vertical { at: w / u })
        } else {
            Err(Error::domain("0·x + 0·y = w is not a line"))
        }
    }

    /// `(u, v, w)` with `ux + vy = w`.
    pub fn implicit(&self) -> (Rational, Rational, Rational) {
        match self {
            Line::Graph { slope, intercept } => (-slope.clone(), Rational::one(), intercept.clone()),
            Line::Vertical { at } => (Rational::one(), Rational::zero(), at.clone()),
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        match self {
            Line::Graph { slope, intercept } => p.y == slope * &p.x + intercept,
            Line::Vertical { at } => p.x == *at,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PointSet {
    points: Vec<Point>,
}

impl PointSet {
    pub fn new(points: impl IntoIterator<Item = Point>) -> Self {
        let mut points: Vec<Point> = points.into_iter().collect();
        points.sort_unstable();
        points.dedup();
        PointSet { points }
    }

    /// `X × Y`.
    pub fn grid(xs: &FiniteRealSet, ys: &FiniteRealSet) -> Self {
        let points = xs.iter().flat_map(|x| ys.iter().map(move |y| Point::new(x.clone(), y.clone()))).collect();
        PointSet { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn distinct_x(&self) -> usize {
        let mut n = 0;
        let mut last: Option<&Rational> = None;
        for p in &self.points {
            if last != Some(&p.x) {
                n += 1;
                last = Some(&p.x);
            }
        }
        n
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LineSet {
    lines: Vec<Line>,
}

impl LineSet {
    pub fn new(lines: impl IntoIterator<Item = Line>) -> Self {
        let mut lines: Vec<Line> = lines.into_iter().collect();
        lines.sort_unstable();
        lines.dedup();
        LineSet { lines }
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }
}

/// `#{(p, ℓ) ∈ P × L : p ∈ ℓ}`. Points are grouped by `x`, so each
/// non-vertical line costs one exact membership test per distinct `x`.
pub fn count_incidences(points: &PointSet, lines: &LineSet, cap: Option<u128>) -> Result<u64> {
    if points.is_empty() || lines.is_empty() {
        return Ok(0);
    }
    let cap = cap.unwrap_or(DEFAULT_INCIDENCE_CAP);
    let needed = lines.len() as u128 * points.distinct_x() as u128;
    if needed > cap {
        return Err(Error::ResourceLimit { what: "incidence membership tests", needed, cap });
    }
    let mut columns: Vec<(&Rational, HashSet<&Rational>)> = Vec::new();
    for p in points.points() {
        match columns.last_mut() {
            Some((x, ys)) if **x == p.x => {
                ys.insert(&p.y);
            }
            _ => columns.push((&p.x, HashSet::from([&p.y]))),
        }
    }
    let column_of: HashMap<&Rational, usize> = columns.iter().enumerate().map(|(i, (x, _))| (*x, i)).collect();
    let total: u64 = lines
        .lines()
        .par_iter()
        .map(|line| match line {
            Line::Vertical { at } => column_of.get(at).map_or(0, |&i| columns[i].1.len() as u64),
            Line::Graph { slope, intercept } => {
                columns.iter().filter(|(x, ys)| ys.contains(&(slope * *x + intercept))).count() as u64
            }
        })
        .sum();
    Ok(total)
}

/// `4p^{2/3}l^{2/3} + 4p + l`, compared against integer counts exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StBound {
    pub p: u64,
    pub l: u64,
    /// The bound when `p²l²` is a perfect cube.
    #[serde(with = "exact::serde_opt_rational")]
    pub exact: Option<Rational>,
    /// The bound to 12 significant digits.
    pub approx: String,
}

impl StBound {
    pub fn new(p: u64, l: u64) -> Self {
        let linear = 4 * p as u128 + l as u128;
        let exact = (p as u128 * l as u128).checked_pow(2).and_then(|cube| {
            let root = cube.cbrt();
            (root * root * root == cube).then(|| Rational::from_integer((4 * root + linear).into()))
        });
        let approx = if let Some(v) = &exact {
            exact::sig12(num_traits::ToPrimitive::to_f64(v).unwrap_or(f64::INFINITY))
        } else {
            exact::sig12(4.0 * ((p as f64) * (l as f64)).powf(2.0 / 3.0) + linear as f64)
        };
        StBound { p, l, exact, approx }
    }

    /// `count ≤ 4p^{2/3}l^{2/3} + 4p + l`, decided by comparing cubes.
    pub fn admits(&self, count: u64) -> bool {
        let linear = 4 * self.p as u128 + self.l as u128;
        let count = count as u128;
        if count <= linear {
            return true;
        }
        let excess = BigUint::from(count - linear);
        let rhs = BigUint::from(64u32) * BigUint::from(self.p).pow(2) * BigUint::from(self.l).pow(2);
        excess.pow(3) <= rhs
    }
}

pub fn st_bound(p: u64, l: u64) -> StBound {
    StBound::new(p, l)
}

/// Points, lines, and the incidence floor the construction guarantees.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncidenceConfig {
    pub points: PointSet,
    pub lines: LineSet,
    pub floor: u64,
}

/// Exact count against both the construction floor and the bound.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncidenceCheck {
    pub points: usize,
    pub lines: usize,
    pub count: u64,
    pub floor: u64,
    pub bound: StBound,
    pub floor_holds: bool,
    pub bound_holds: bool,
}

impl IncidenceCheck {
    pub fn holds(&self) -> bool {
        self.floor_holds && self.bound_holds
    }
}

pub fn check_config(cfg: &IncidenceConfig, cap: Option<u128>) -> Result<IncidenceCheck> {
    let count = count_incidences(&cfg.points, &cfg.lines, cap)?;
    let bound = st_bound(cfg.points.len() as u64, cfg.lines.len() as u64);
    Ok(IncidenceCheck {
        points: cfg.points.len(),
        lines: cfg.lines.len(),
        count,
        floor: cfg.floor,
        floor_holds: count >= cfg.floor,
        bound_holds: bound.admits(count),
        bound,
    })
}

/// `P = (A+A) × AA`, `L = {y = a(x − c) : a, c ∈ A}`; each line carries the
/// `|A|` points `(b + c, ab)`, so the floor is `|A|·|L|`.
pub fn elekes_config(a: &FiniteRealSet) -> Result<IncidenceConfig> {
    if a.is_empty() {
        return Err(Error::domain("incidence configuration needs a nonempty set"));
    }
    if a.contains_zero() {
        return Err(Error::domain("incidence configuration needs 0 ∉ A"));
    }
    let points = PointSet::grid(&combine(a, a, SetOp::Sum)?, &combine(a, a, SetOp::Prod)?);
    let lines = LineSet::new(a.iter().flat_map(|s| a.iter().map(move |c| Line::graph(s.clone(), -(s * c)))));
    let floor = a.len() as u64 * lines.len() as u64;
    Ok(IncidenceConfig { points, lines, floor })
}

/// `P = Q × {x : r_{A−B}(x) ≥ τ}`, `L = {y = x/r − b : r ∈ R, b ∈ B}`, with
/// floor `tτ·#{x : r_{A−B}(x) ≥ τ}` once `A ⊆ {r_{Q/R} ≥ t}` is checked.
pub fn dstar_config(
    q: &FiniteRealSet,
    r: &FiniteRealSet,
    b: &FiniteRealSet,
    a: &FiniteRealSet,
    t: u64,
    tau: u64,
) -> Result<IncidenceConfig> {
    if q.is_empty() || r.is_empty() || b.is_empty() || a.is_empty() {
        return Err(Error::domain("configuration needs nonempty Q, R, B, A"));
    }
    if r.contains_zero() {
        return Err(Error::domain("configuration needs 0 ∉ R"));
    }
    if t == 0 || tau == 0 {
        return Err(Error::domain("t and τ must be positive"));
    }
    let quot = RepHistogram::build(q, r, SetOp::Quot)?;
    if let Some(x) = a.iter().find(|x| quot.count(x) < t) {
        return Err(Error::domain(format!("A ⊄ {{r_(Q/R) ≥ {t}}}: r({x}) = {}", quot.count(x))));
    }
    let diff = RepHistogram::build(a, b, SetOp::Diff)?;
    let popular = diff.level_set_at_least(tau);
    let points = PointSet::grid(q, &popular);
    let lines =
        LineSet::new(r.iter().flat_map(|rr| b.iter().map(move |bb| Line::graph(Rational::one() / rr, -bb.clone()))));
    let floor = t * tau * popular.len() as u64;
    Ok(IncidenceConfig { points, lines, floor })
}

/// Seeded random configuration: points on a small integer grid, lines with
/// small rational slopes and integer intercepts, so incidences are frequent.
pub fn random_config(seed: u64, max_points: usize, max_lines: usize) -> IncidenceConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let np = rng.gen_range(1..=max_points.max(1));
    let nl = rng.gen_range(1..=max_lines.max(1));
    let side = ((np as f64).sqrt().ceil() as i64).max(2);
    let points = PointSet::new((0..np).map(|_| Point::new(int(rng.gen_range(0..side)), int(rng.gen_range(0..side)))));
    let lines = LineSet::new((0..nl).map(|_| {
        if rng.gen_ratio(1, 20) {
            Line::Vertical { at: int(rng.gen_range(0..side)) }
        } else {
            let slope = rat(rng.gen_range(-3..=3), rng.gen_range(1..=3));
            Line::graph(slope, int(rng.gen_range(-side..=side)))
        }
    }));
    IncidenceConfig { points, lines, floor: 0 }
}

/// Image of a configuration under `(x, y) ↦ M(x, y) + e` with `M` invertible.
pub fn affine_image(cfg: &IncidenceConfig, m: [[Rational; 2]; 2], e: [Rational; 2]) -> Result<IncidenceConfig> {
    let det = &m[0][0] * &m[1][1] - &m[0][1] * &m[1][0];
    if det.is_zero() {
        return Err(Error::domain("affine map must be invertible"));
    }
    let inv = [[&m[1][1] / &det, -(&m[0][1] / &det)], [-(&m[1][0] / &det), &m[0][0] / &det]];
    let points = PointSet::new(
        cfg.points
            .points()
            .iter()
            .map(|p| Point::new(&m[0][0] * &p.x + &m[0][1] * &p.y + &e[0], &m[1][0] * &p.x + &m[1][1] * &p.y + &e[1])),
    );
    let lines = cfg
        .lines
        .lines()
        .iter()
        .map(|l| {
            let (u, v, w) = l.implicit();
            let nu = &u * &inv[0][0] + &v * &inv[1][0];
            let nv = &u * &inv[0][1] + &v * &inv[1][1];
            let nw = &w + &nu * &e[0] + &nv * &e[1];
            Line::from_implicit(&nu, &nv, &nw)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IncidenceConfig { points, lines: LineSet::new(lines), floor: cfg.floor })
}
