//! Query-dependent binary-input discrete memoryless channels.
//!
//! The oracle's yes/no answer `x` travels through a channel whose transition
//! law depends on the Lebesgue measure `a` of the posed query. The reference
//! family is the binary symmetric channel with crossover `h(a)`; a general
//! row-stochastic family (piecewise-linear in `a`) sits behind the same
//! interface.
//!
//! Everything here works in nats. Infinite information densities and
//! divergences (noiseless channels) are clamped to [`SATURATION`] so that
//! threshold comparisons stay well-defined.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Magnitude used in place of an infinite log-likelihood.
pub const SATURATION: f64 = 1e9;

const ROW_TOLERANCE: f64 = 1e-12;

pub fn saturate(v: f64) -> f64 {
    if v.is_nan() {
        v
    } else {
        v.clamp(-SATURATION, SATURATION)
    }
}

pub fn is_saturated(v: f64) -> bool {
    v.abs() >= SATURATION
}

/// Crossover probability as a function of the query measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum HFunction {
    Affine { c0: f64, c1: f64 },
    Constant { q: f64 },
}

impl HFunction {
    pub fn affine(c0: f64, c1: f64) -> Result<Self> {
        let h = HFunction::Affine { c0, c1 };
        h.validate()?;
        Ok(h)
    }

    pub fn constant(q: f64) -> Result<Self> {
        let h = HFunction::Constant { q };
        h.validate()?;
        Ok(h)
    }

    pub fn eval(&self, p: f64) -> f64 {
        match *self {
            HFunction::Affine { c0, c1 } => c0 + c1 * p,
            HFunction::Constant { q } => q,
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match *self {
            HFunction::Affine { c1, .. } => c1.abs(),
            HFunction::Constant { .. } => 0.0,
        }
    }

    /// An affine map attains its extremes at the endpoints, so checking
    /// `h(0)` and `h(1)` covers all of `[0, 1]`.
    pub fn validate(&self) -> Result<()> {
        for p in [0.0, 1.0] {
            let v = self.eval(p);
            if !(0.0..=0.5).contains(&v) {
                return domain(format!("h({p}) = {v} lies outside [0, 0.5]"));
            }
        }
        Ok(())
    }
}

/// Row-stochastic matrices anchored at query measures, linearly
/// interpolated in between and held constant outside the anchors.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFamily {
    knots: Vec<(f64, [Vec<f64>; 2])>,
    outputs: usize,
}

impl MatrixFamily {
    pub fn new(mut knots: Vec<(f64, [Vec<f64>; 2])>) -> Result<Self> {
        if knots.is_empty() {
            return domain("matrix family needs at least one knot");
        }
        let outputs = knots[0].1[0].len();
        if outputs < 2 {
            return domain("output alphabet must have at least two symbols");
        }
        for (a, rows) in &knots {
            if !(0.0..=1.0).contains(a) {
                return domain(format!("knot measure {a} outside [0, 1]"));
            }
            for row in rows {
                if row.len() != outputs {
                    return domain("all rows must share one output alphabet");
                }
                check_row(row)?;
            }
        }
        knots.sort_by(|l, r| l.0.total_cmp(&r.0));
        Ok(Self { knots, outputs })
    }

    fn rows_at(&self, a: f64) -> [Vec<f64>; 2] {
        let first = &self.knots[0];
        let last = &self.knots[self.knots.len() - 1];
        if a <= first.0 {
            return first.1.clone();
        }
        if a >= last.0 {
            return last.1.clone();
        }
        let hi = self.knots.partition_point(|k| k.0 <= a);
        let (a0, r0) = &self.knots[hi - 1];
        let (a1, r1) = &self.knots[hi];
        let t = (a - a0) / (a1 - a0);
        let mix = |x: usize| -> Vec<f64> {
            r0[x]
                .iter()
                .zip(&r1[x])
                .map(|(u, v)| (1.0 - t) * u + t * v)
                .collect()
        };
        [mix(0), mix(1)]
    }
}

fn check_row(row: &[f64]) -> Result<()> {
    if row.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return domain("transition probabilities must lie in [0, 1]");
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_TOLERANCE {
        return domain(format!("transition row sums to {sum}, not 1"));
    }
    Ok(())
}

/// A binary-input channel whose law is indexed by the query measure.
#[derive(Debug, Clone, PartialEq)]
pub enum Channel {
    BinarySymmetric(HFunction),
    Matrix(MatrixFamily),
}

impl Channel {
    pub fn bsc(h: HFunction) -> Result<Self> {
        h.validate()?;
        Ok(Channel::BinarySymmetric(h))
    }

    pub fn noiseless() -> Self {
        Channel::BinarySymmetric(HFunction::Constant { q: 0.0 })
    }

    pub fn output_size(&self) -> usize {
        match self {
            Channel::BinarySymmetric(_) => 2,
            Channel::Matrix(m) => m.outputs,
        }
    }

    /// The fixed channel seen by a query of measure `a`.
    pub fn at(&self, a: f64) -> Result<ChannelMatrix> {
        if !(0.0..=1.0).contains(&a) {
            return domain(format!("query measure {a} outside [0, 1]"));
        }
        let rows = match self {
            Channel::BinarySymmetric(h) => {
                let q = h.eval(a);
                [vec![1.0 - q, q], vec![q, 1.0 - q]]
            }
            Channel::Matrix(m) => m.rows_at(a),
        };
        Ok(ChannelMatrix { rows })
    }

    /// `P^{h(a)}(y | x)`.
    pub fn transition(&self, x: bool, y: usize, a: f64) -> Result<f64> {
        if y >= self.output_size() {
            return domain(format!("output symbol {y} outside alphabet"));
        }
        Ok(self.at(a)?.prob(x, y))
    }

    pub fn sample_response<R: Rng + ?Sized>(&self, x: bool, a: f64, rng: &mut R) -> Result<usize> {
        Ok(self.at(a)?.sample(x, rng))
    }

    /// `log P^{h(p)}(y|x) / P^{h(p)}_Y(y)` with `P_X = Bern(p)`.
    pub fn info_density(&self, p: f64, x: bool, y: usize) -> Result<f64> {
        if y >= self.output_size() {
            return domain(format!("output symbol {y} outside alphabet"));
        }
        let m = self.at(p)?;
        let py = m.output_marginal(p);
        let pyx = m.prob(x, y);
        match (pyx > 0.0, py[y] > 0.0) {
            (true, true) => Ok(saturate((pyx / py[y]).ln())),
            (true, false) => Ok(SATURATION),
            (false, true) => Ok(-SATURATION),
            (false, false) => domain(format!("symbol {y} is unreachable at bias {p}")),
        }
    }

    pub fn mutual_information(&self, p: f64) -> Result<f64> {
        Ok(self.at(p)?.mutual_information(p))
    }
}

/// Transition rows for one fixed query measure.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    rows: [Vec<f64>; 2],
}

impl ChannelMatrix {
    pub fn row(&self, x: bool) -> &[f64] {
        &self.rows[x as usize]
    }

    pub fn prob(&self, x: bool, y: usize) -> f64 {
        self.rows[x as usize][y]
    }

    pub fn outputs(&self) -> usize {
        self.rows[0].len()
    }

    pub fn output_marginal(&self, p: f64) -> Vec<f64> {
        self.rows[0]
            .iter()
            .zip(&self.rows[1])
            .map(|(r0, r1)| (1.0 - p) * r0 + p * r1)
            .collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, x: bool, rng: &mut R) -> usize {
        let row = self.row(x);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (y, &w) in row.iter().enumerate() {
            acc += w;
            if u < acc {
                return y;
            }
        }
        // u landed in the rounding gap above the cumulative sum
        row.iter().rposition(|&w| w > 0.0).unwrap_or(row.len() - 1)
    }

    pub fn mutual_information(&self, p: f64) -> f64 {
        let py = self.output_marginal(p);
        let mut total = 0.0;
        for (x, px) in [(false, 1.0 - p), (true, p)] {
            if px <= 0.0 {
                continue;
            }
            for (y, &pyx) in self.row(x).iter().enumerate() {
                if pyx > 0.0 {
                    total += px * pyx * (pyx / py[y]).ln();
                }
            }
        }
        total.max(0.0)
    }

    /// Information-density lookup table at input bias `p`.
    pub fn info_density_table(&self, p: f64) -> Result<InfoDensityTable> {
        if !(p > 0.0 && p < 1.0) {
            return domain(format!("input bias {p} must lie strictly inside (0, 1)"));
        }
        let py = self.output_marginal(p);
        let entry = |x: bool, y: usize| {
            let pyx = self.prob(x, y);
            match (pyx > 0.0, py[y] > 0.0) {
                (true, true) => saturate((pyx / py[y]).ln()),
                (true, false) => SATURATION,
                (false, true) => -SATURATION,
                // never sampled, the value is irrelevant
                (false, false) => 0.0,
            }
        };
        let n = self.outputs();
        Ok(InfoDensityTable {
            bias: p,
            values: [
                (0..n).map(|y| entry(false, y)).collect(),
                (0..n).map(|y| entry(true, y)).collect(),
            ],
        })
    }

    /// Law of `ı(X;Y)` under `Bern(p) × P_{Y|X}` as (value, probability) atoms.
    pub fn info_density_distribution(&self, p: f64) -> Result<Vec<(f64, f64)>> {
        let table = self.info_density_table(p)?;
        let mut atoms = Vec::new();
        for (x, px) in [(false, 1.0 - p), (true, p)] {
            for (y, &pyx) in self.row(x).iter().enumerate() {
                let w = px * pyx;
                if w > 0.0 {
                    atoms.push((table.get(x, y), w));
                }
            }
        }
        Ok(atoms)
    }

    /// Law of `log P_{Y|X=num}(Y) / P_{Y|X=den}(Y)` with `Y ~ P_{Y|X=num}`.
    pub fn llr_distribution(&self, num: bool, den: bool) -> Vec<(f64, f64)> {
        self.row(num)
            .iter()
            .zip(self.row(den))
            .filter(|(&pn, _)| pn > 0.0)
            .map(|(&pn, &pd)| {
                let v = if pd > 0.0 { saturate((pn / pd).ln()) } else { SATURATION };
                (v, pn)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfoDensityTable {
    bias: f64,
    values: [Vec<f64>; 2],
}

impl InfoDensityTable {
    pub fn get(&self, x: bool, y: usize) -> f64 {
        self.values[x as usize][y]
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    /// `E[ı(X;Y)]`, which equals the mutual information at this bias.
    pub fn expectation(&self, m: &ChannelMatrix) -> f64 {
        let mut e = 0.0;
        for (x, px) in [(false, 1.0 - self.bias), (true, self.bias)] {
            for (y, &pyx) in m.row(x).iter().enumerate() {
                if pyx > 0.0 {
                    e += px * pyx * self.get(x, y);
                }
            }
        }
        e
    }
}

/// `D(P‖Q)` in nats, saturated at [`SATURATION`] when `Q` misses support of `P`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return domain("distributions live on different alphabets");
    }
    let mut d = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Ok(SATURATION);
            }
            d += pi * (pi / qi).ln();
        }
    }
    Ok(saturate(d.max(0.0)))
}

/// `min{ E[(X⁺)²] / E[X], esssup X }` for a finite distribution given as
/// (value, probability) atoms.
pub fn b_constant(atoms: &[(f64, f64)]) -> Result<f64> {
    let mean: f64 = atoms.iter().map(|(v, w)| v * w).sum();
    if !(mean > 0.0) {
        return domain(format!("b(.) needs a positive mean, got {mean}"));
    }
    let second: f64 = atoms.iter().map(|(v, w)| v.max(0.0).powi(2) * w).sum();
    let esssup = atoms
        .iter()
        .filter(|(_, w)| *w > 0.0)
        .map(|(v, _)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((second / mean).min(esssup))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capacity {
    pub value: f64,
    pub bias: f64,
}

const GRID_STEP: f64 = 1e-3;
const REFINE_TOL: f64 = 1e-9;

/// `max_p E[ı^{h(p)}(X;Y)]`: a 1e-3 grid followed by golden-section
/// refinement around the best grid point.
pub fn capacity(channel: &Channel) -> Result<Capacity> {
    let mi = |p: f64| channel.mutual_information(p);
    let n = (1.0 / GRID_STEP).round() as usize;
    let mut best = Capacity { value: f64::NEG_INFINITY, bias: 0.0 };
    for i in 0..=n {
        let p = i as f64 / n as f64;
        let v = mi(p)?;
        if v > best.value {
            best = Capacity { value: v, bias: p };
        }
    }
    let lo = (best.bias - GRID_STEP).max(0.0);
    let hi = (best.bias + GRID_STEP).min(1.0);
    let (p, v) = golden_max(lo, hi, |p| mi(p).unwrap_or(f64::NEG_INFINITY));
    if v > best.value {
        best = Capacity { value: v, bias: p };
    }
    Ok(best)
}

fn golden_max(mut a: f64, mut b: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > REFINE_TOL {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let p = 0.5 * (a + b);
    (p, f(p))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairDivergence {
    pub value: f64,
    pub accept_symbol: bool,
    pub reject_symbol: bool,
}

/// The ordered input pair maximizing `D(P_{Y|X=x} ‖ P_{Y|X=x'})`.
/// Ties go to the lexicographically smaller pair; identical rows give
/// zero with the pair `(0, 1)`.
pub fn max_pair_kl(m: &ChannelMatrix) -> Result<PairDivergence> {
    let mut best = PairDivergence { value: 0.0, accept_symbol: false, reject_symbol: true };
    for (x, xp) in [(false, true), (true, false)] {
        let d = kl_divergence(m.row(x), m.row(xp))?;
        if d > best.value {
            best = PairDivergence { value: d, accept_symbol: x, reject_symbol: xp };
        }
    }
    Ok(best)
}

/// Constants every downstream stage needs, all evaluated at the
/// capacity-achieving bias.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConstants {
    pub capacity: f64,
    pub p_star: f64,
    pub c_tilde: f64,
    pub accept_symbol: bool,
    pub reject_symbol: bool,
    /// `D(P_{Y|X=x_A} ‖ P_{Y|X=x_R})`
    pub d_accept: f64,
    /// `D(P_{Y|X=x_R} ‖ P_{Y|X=x_A})`
    pub d_reject: f64,
    pub b: f64,
    pub b_accept: f64,
    pub b_reject: f64,
}

impl ChannelConstants {
    pub fn compute(channel: &Channel) -> Result<Self> {
        let cap = capacity(channel)?;
        if !(cap.value > 0.0) {
            return Err(Error::Degenerate("capacity is zero".into()));
        }
        let m = channel.at(cap.bias)?;
        let pair = max_pair_kl(&m)?;
        if !(pair.value > 0.0) {
            return Err(Error::Degenerate("output rows are identical".into()));
        }
        let (xa, xr) = (pair.accept_symbol, pair.reject_symbol);
        Ok(Self {
            capacity: cap.value,
            p_star: cap.bias,
            c_tilde: pair.value,
            accept_symbol: xa,
            reject_symbol: xr,
            d_accept: kl_divergence(m.row(xa), m.row(xr))?,
            d_reject: kl_divergence(m.row(xr), m.row(xa))?,
            b: b_constant(&m.info_density_distribution(cap.bias)?)?,
            b_accept: b_constant(&m.llr_distribution(xa, xr))?,
            b_reject: b_constant(&m.llr_distribution(xr, xa))?,
        })
    }

    /// `C / C̃`, taken as zero when `C̃` is saturated.
    pub fn rate_ratio(&self) -> f64 {
        if is_saturated(self.c_tilde) {
            0.0
        } else {
            self.capacity / self.c_tilde
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn affine() -> Channel {
        Channel::bsc(HFunction::affine(0.1, 0.3).unwrap()).unwrap()
    }

    fn constant(q: f64) -> Channel {
        Channel::bsc(HFunction::constant(q).unwrap()).unwrap()
    }

    fn bsc_capacity(q: f64) -> f64 {
        let xlogx = |v: f64| if v > 0.0 { v * v.ln() } else { 0.0 };
        2f64.ln() + xlogx(q) + xlogx(1.0 - q)
    }

    #[test]
    fn transition_examples() {
        let ch = affine();
        assert_abs_diff_eq!(ch.transition(false, 1, 0.0).unwrap(), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(ch.transition(false, 0, 0.0).unwrap(), 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(ch.transition(true, 0, 1.0).unwrap(), 0.4, epsilon = 1e-15);
    }

    #[test]
    fn transition_rejects_out_of_range() {
        let ch = affine();
        assert!(matches!(ch.transition(false, 0, 1.5), Err(Error::Domain(_))));
        assert!(matches!(ch.transition(false, 2, 0.5), Err(Error::Domain(_))));
        assert!(HFunction::affine(0.3, 0.3).is_err());
        assert!(HFunction::constant(-0.1).is_err());
    }

    #[test]
    fn sampling_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let noiseless = Channel::noiseless();
        for _ in 0..100 {
            assert_eq!(noiseless.sample_response(true, 0.3, &mut rng).unwrap(), 1);
        }
        let n = 100_000;
        let freq = |ch: &Channel, a: f64, rng: &mut ChaCha8Rng| {
            (0..n).filter(|_| ch.sample_response(false, a, rng).unwrap() == 1).count() as f64 / n as f64
        };
        assert_abs_diff_eq!(freq(&constant(0.5), 0.5, &mut rng), 0.5, epsilon = 0.005);
        assert_abs_diff_eq!(freq(&affine(), 0.5, &mut rng), 0.25, epsilon = 0.005);
    }

    #[test]
    fn info_density_examples() {
        let useless = constant(0.5);
        for x in [false, true] {
            for y in 0..2 {
                assert_abs_diff_eq!(useless.info_density(0.5, x, y).unwrap(), 0.0, epsilon = 1e-15);
            }
        }
        let ch = constant(0.1);
        assert_abs_diff_eq!(ch.info_density(0.5, false, 0).unwrap(), 1.8f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(ch.info_density(0.5, false, 1).unwrap(), 0.2f64.ln(), epsilon = 1e-12);
        let noiseless = Channel::noiseless();
        assert_eq!(noiseless.info_density(0.5, false, 1).unwrap(), -SATURATION);
        assert_eq!(noiseless.info_density(0.0, true, 1).unwrap(), SATURATION);
        assert!(noiseless.info_density(0.0, false, 1).is_err());
    }

    #[test]
    fn kl_examples() {
        let p = [0.3, 0.7];
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        // term-by-term: 0.1 ln(0.1/0.4) + 0.9 ln(0.9/0.6)
        let expected = 0.1 * (0.25f64).ln() + 0.9 * (1.5f64).ln();
        assert_abs_diff_eq!(kl_divergence(&[0.9, 0.1], &[0.6, 0.4]).unwrap(), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(expected, 0.2263, epsilon = 1e-4);
        assert_abs_diff_eq!(
            kl_divergence(&[0.9, 0.1], &[0.1, 0.9]).unwrap(),
            0.8 * 9f64.ln(),
            epsilon = 1e-12
        );
        assert_eq!(kl_divergence(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), SATURATION);
        assert!(kl_divergence(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn capacity_examples() {
        let c = capacity(&Channel::noiseless()).unwrap();
        assert_abs_diff_eq!(c.value, 2f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(c.bias, 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(capacity(&constant(0.5)).unwrap().value, 0.0, epsilon = 1e-15);
        for q in [0.05, 0.1, 0.25] {
            assert_abs_diff_eq!(capacity(&constant(q)).unwrap().value, bsc_capacity(q), epsilon = 1e-9);
        }
    }

    #[test]
    fn capacity_matches_dense_grid_oracle() {
        // independent oracle: BSC mutual information written from scratch on a 1e-4 grid
        let h2 = |v: f64| {
            let t = |u: f64| if u > 0.0 { -u * u.ln() } else { 0.0 };
            t(v) + t(1.0 - v)
        };
        let oracle = (0..=10_000)
            .map(|i| {
                let p = i as f64 / 10_000.0;
                let q = 0.1 + 0.3 * p;
                h2(p * (1.0 - q) + (1.0 - p) * q) - h2(q)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let c = capacity(&affine()).unwrap();
        assert!(c.value >= oracle - 1e-12);
        assert_abs_diff_eq!(c.value, oracle, epsilon = 1e-7);
    }

    #[test]
    fn pair_kl_examples() {
        let pair = max_pair_kl(&constant(0.5).at(0.5).unwrap()).unwrap();
        assert_eq!(pair.value, 0.0);
        assert_eq!((pair.accept_symbol, pair.reject_symbol), (false, true));
        let pair = max_pair_kl(&constant(0.1).at(0.5).unwrap()).unwrap();
        assert_abs_diff_eq!(pair.value, 0.8 * 9f64.ln(), epsilon = 1e-12);
        assert_eq!((pair.accept_symbol, pair.reject_symbol), (false, true));
        let pair = max_pair_kl(&Channel::noiseless().at(0.5).unwrap()).unwrap();
        assert_eq!(pair.value, SATURATION);
    }

    #[test]
    fn b_constant_examples() {
        assert_eq!(b_constant(&[(1.0, 1.0)]).unwrap(), 1.0);
        assert_abs_diff_eq!(b_constant(&[(1.0, 0.5), (2.0, 0.5)]).unwrap(), 5.0 / 3.0, epsilon = 1e-15);
        assert_eq!(b_constant(&[(-1.0, 0.5), (3.0, 0.5)]).unwrap(), 3.0);
        assert!(b_constant(&[(-1.0, 0.5), (1.0, 0.5)]).is_err());
    }

    #[test]
    fn constants_for_bsc() {
        let k = ChannelConstants::compute(&constant(0.1)).unwrap();
        assert_abs_diff_eq!(k.capacity, bsc_capacity(0.1), epsilon = 1e-9);
        assert_abs_diff_eq!(k.d_accept, k.d_reject, epsilon = 1e-12);
        // two-point LLR law: ratio branch (1-q)/(1-2q)·ln 9 exceeds esssup ln 9
        assert_abs_diff_eq!(k.b_accept, 9f64.ln(), epsilon = 1e-12);
        assert!(k.b > 0.0);
        assert!(ChannelConstants::compute(&constant(0.5)).is_err());
    }

    #[test]
    fn matrix_family_interpolates() {
        let fam = MatrixFamily::new(vec![
            (0.0, [vec![0.9, 0.1, 0.0], vec![0.1, 0.8, 0.1]]),
            (1.0, [vec![0.7, 0.2, 0.1], vec![0.1, 0.6, 0.3]]),
        ])
        .unwrap();
        let ch = Channel::Matrix(fam);
        assert_abs_diff_eq!(ch.transition(false, 0, 0.5).unwrap(), 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(ch.transition(true, 2, 0.25).unwrap(), 0.15, epsilon = 1e-15);
        assert!(MatrixFamily::new(vec![(0.0, [vec![0.5, 0.6], vec![0.5, 0.5]])]).is_err());
    }

    #[test]
    fn capacity_invariant_under_output_relabeling() {
        let rows = [vec![0.7, 0.2, 0.1], vec![0.1, 0.3, 0.6]];
        let base = Channel::Matrix(MatrixFamily::new(vec![(0.0, rows.clone())]).unwrap());
        let perm = [2usize, 0, 1];
        let permuted = [
            perm.iter().map(|&i| rows[0][i]).collect::<Vec<_>>(),
            perm.iter().map(|&i| rows[1][i]).collect::<Vec<_>>(),
        ];
        let other = Channel::Matrix(MatrixFamily::new(vec![(0.0, permuted)]).unwrap());
        let (a, b) = (capacity(&base).unwrap(), capacity(&other).unwrap());
        assert_abs_diff_eq!(a.value, b.value, epsilon = 1e-12);
    }

    #[test]
    fn mutual_information_nonnegative_on_grid() {
        for ch in [affine(), constant(0.1), constant(0.5), Channel::noiseless()] {
            for i in 1..100 {
                let p = i as f64 / 100.0;
                let m = ch.at(p).unwrap();
                let table = m.info_density_table(p).unwrap();
                let e = table.expectation(&m);
                assert!(e >= -1e-15);
                assert_abs_diff_eq!(e, m.mutual_information(p), epsilon = 1e-12);
            }
        }
        for i in 1..100 {
            let p = i as f64 / 100.0;
            assert_abs_diff_eq!(constant(0.5).mutual_information(p).unwrap(), 0.0, epsilon = 1e-15);
        }
    }

    fn distribution(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.01f64..1.0, n).prop_map(|v| {
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn rows_sum_to_one(x in any::<bool>(), a in 0.0f64..=1.0, c0 in 0.0f64..0.25, c1 in 0.0f64..0.25) {
            let ch = Channel::bsc(HFunction::affine(c0, c1).unwrap()).unwrap();
            let m = ch.at(a).unwrap();
            let s: f64 = m.row(x).iter().sum();
            prop_assert!((s - 1.0).abs() <= 1e-12);
            prop_assert!(m.row(x).iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    proptest! {
        #[test]
        fn kl_nonnegative((p, q) in (2usize..6).prop_flat_map(|n| (distribution(n), distribution(n)))) {
            let d = kl_divergence(&p, &q).unwrap();
            prop_assert!(d >= 0.0);
            prop_assert!(kl_divergence(&p, &p).unwrap().abs() < 1e-15);
            if p.iter().zip(&q).any(|(a, b)| (a - b).abs() > 1e-6) {
                prop_assert!(d > 0.0);
            }
        }

        #[test]
        fn b_bounded_by_esssup(atoms in proptest::collection::vec((0.01f64..10.0, 0.01f64..1.0), 1..6)) {
            let b = b_constant(&atoms).unwrap();
            let esssup = atoms.iter().map(|a| a.0).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(b <= esssup);
        }

        #[test]
        fn b_of_point_mass(c in 0.001f64..100.0) {
            prop_assert!((b_constant(&[(c, 1.0)]).unwrap() - c).abs() <= 1e-12 * c);
        }
    }
}
