//! Piecewise-constant speed profiles and water-filling.
//!
//! A [`StepFunction`] is non-negative, constant on half-open pieces `[t_i, t_{i+1})`
//! and zero outside its support. It is always kept canonical: adjacent pieces with
//! equal values are merged and zero pieces at either end are trimmed, so two
//! functions are pointwise equal iff they are structurally equal.

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::scalar::{Scalar, Show};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StepFunction {
    breaks: Vec<Scalar>,
    values: Vec<Scalar>,
}

/// Result of pouring a volume into a window of a profile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fill {
    pub level: Scalar,
    pub delta: StepFunction,
}

impl StepFunction {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `value` on `[start, end)`, zero elsewhere.
    pub fn constant(start: Scalar, end: Scalar, value: Scalar) -> Result<Self> {
        Self::from_pieces(vec![(start, end, value)])
    }

    /// Builds from pieces sorted by start and pairwise disjoint; gaps are zero.
    pub fn from_pieces(pieces: Vec<(Scalar, Scalar, Scalar)>) -> Result<Self> {
        let mut prev_end: Option<&Scalar> = None;
        for (a, b, v) in &pieces {
            if a >= b {
                return Err(empty_window(a, b));
            }
            if v.is_negative() {
                return Err(Error::NegativeProfile);
            }
            if prev_end.is_some_and(|e| a < e) {
                return Err(Error::Invariant("profile pieces overlap".into()));
            }
            prev_end = Some(b);
        }
        Ok(Self::canonical(pieces))
    }

    fn canonical(pieces: Vec<(Scalar, Scalar, Scalar)>) -> Self {
        let mut out = Self::default();
        for (a, b, v) in pieces {
            if let Some(end) = out.breaks.last().cloned() {
                if end < a {
                    out.push_piece(end, a.clone(), Scalar::zero());
                }
            }
            out.push_piece(a, b, v);
        }
        let lead = out.values.iter().take_while(|v| v.is_zero()).count();
        out.values.drain(..lead);
        out.breaks.drain(..lead);
        while out.values.last().is_some_and(|v| v.is_zero()) {
            out.values.pop();
            out.breaks.pop();
        }
        if out.values.is_empty() {
            out.breaks.clear();
        }
        out
    }

    fn push_piece(&mut self, a: Scalar, b: Scalar, v: Scalar) {
        if self.breaks.is_empty() {
            self.breaks.extend([a, b]);
            self.values.push(v);
        } else if self.values.last() == Some(&v) {
            *self.breaks.last_mut().expect("nonempty") = b;
        } else {
            self.breaks.push(b);
            self.values.push(v);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    /// `[t_0, t_k)`, or `None` for the zero function.
    pub fn support(&self) -> Option<(&Scalar, &Scalar)> {
        Some((self.breaks.first()?, self.breaks.last()?))
    }

    pub fn breakpoints(&self) -> &[Scalar] {
        &self.breaks
    }

    pub fn pieces(&self) -> impl Iterator<Item = (&Scalar, &Scalar, &Scalar)> {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, v)| (&self.breaks[i], &self.breaks[i + 1], v))
    }

    pub fn value_at(&self, t: &Scalar) -> Scalar {
        if self.is_zero() || t < &self.breaks[0] || t >= self.breaks.last().expect("nonempty") {
            return Scalar::zero();
        }
        let idx = self.breaks.partition_point(|b| b <= t) - 1;
        self.values[idx].clone()
    }

    /// Pieces exactly covering `[start, end)`, including zero stretches outside the support.
    pub fn pieces_over(&self, start: &Scalar, end: &Scalar) -> Vec<(Scalar, Scalar, Scalar)> {
        let mut cuts: Vec<Scalar> = vec![start.clone()];
        cuts.extend(self.breaks.iter().filter(|b| *b > start && *b < end).cloned());
        cuts.push(end.clone());
        cuts.windows(2)
            .map(|w| {
                let v = self.value_at(&w[0]);
                (w[0].clone(), w[1].clone(), v)
            })
            .collect()
    }

    /// `∫ f(v(t)) dt` over the support; `f(0)` contributes nothing outside it.
    pub fn integral_with(&self, f: impl Fn(&Scalar) -> Scalar) -> Scalar {
        self.pieces()
            .map(|(a, b, v)| (b - a) * f(v))
            .fold(Scalar::zero(), |acc, x| acc + x)
    }

    pub fn integral(&self) -> Scalar {
        self.integral_with(Clone::clone)
    }

    /// Minimum value over `[start, end]`, counting the outside of the support as zero.
    pub fn window_min(&self, start: &Scalar, end: &Scalar) -> Result<Scalar> {
        if start >= end {
            return Err(empty_window(start, end));
        }
        Ok(self
            .pieces_over(start, end)
            .into_iter()
            .map(|(_, _, v)| v)
            .min()
            .expect("nonempty window"))
    }

    /// Water-fills `volume` into `[start, end]`: returns the level `L` with
    /// `∫ max(L - v, 0) = volume` over the window and the added profile.
    pub fn fill(&self, start: &Scalar, end: &Scalar, volume: &Scalar) -> Result<Fill> {
        if start >= end {
            return Err(empty_window(start, end));
        }
        if volume.is_negative() {
            return Err(Error::NegativeVolume(Show(volume).to_string()));
        }
        let pieces = self.pieces_over(start, end);
        let mut by_value: Vec<(Scalar, Scalar)> = pieces.iter().map(|(a, b, v)| (v.clone(), b - a)).collect();
        by_value.sort();
        if volume.is_zero() {
            return Ok(Fill {
                level: by_value[0].0.clone(),
                delta: StepFunction::zero(),
            });
        }

        let mut covered = Scalar::zero();
        let mut weighted = Scalar::zero();
        let mut level = None;
        for (i, (v, len)) in by_value.iter().enumerate() {
            covered += len;
            weighted += v * len;
            let enough = match by_value.get(i + 1) {
                Some((next, _)) => &covered * next - &weighted >= *volume,
                None => true,
            };
            if enough {
                level = Some((volume + &weighted) / &covered);
                break;
            }
        }
        let level = level.expect("last piece always terminates the sweep");
        let delta = Self::canonical(
            pieces
                .into_iter()
                .map(|(a, b, v)| {
                    let d = if v < level { &level - v } else { Scalar::zero() };
                    (a, b, d)
                })
                .collect(),
        );
        Ok(Fill { level, delta })
    }

    fn combine(&self, other: &Self, op: impl Fn(Scalar, Scalar) -> Scalar) -> Vec<(Scalar, Scalar, Scalar)> {
        let mut cuts: Vec<Scalar> = self.breaks.iter().chain(other.breaks.iter()).cloned().collect();
        cuts.sort();
        cuts.dedup();
        cuts.windows(2)
            .map(|w| {
                let v = op(self.value_at(&w[0]), other.value_at(&w[0]));
                (w[0].clone(), w[1].clone(), v)
            })
            .collect()
    }

    pub fn add(&self, delta: &Self) -> Self {
        Self::canonical(self.combine(delta, |a, b| a + b))
    }

    /// Pointwise difference; fails if it would go negative anywhere.
    pub fn subtract(&self, delta: &Self) -> Result<Self> {
        let pieces = self.combine(delta, |a, b| a - b);
        if pieces.iter().any(|(_, _, v)| v.is_negative()) {
            return Err(Error::NegativeProfile);
        }
        Ok(Self::canonical(pieces))
    }

    /// Pointwise `self <= other`.
    pub fn le(&self, other: &Self) -> bool {
        self.combine(other, |a, b| a - b)
            .iter()
            .all(|(_, _, v)| !v.is_positive())
    }
}

fn empty_window(start: &Scalar, end: &Scalar) -> Error {
    Error::EmptyWindow {
        start: Show(start).to_string(),
        end: Show(end).to_string(),
    }
}
