//! Discretised time grids and speed sets used by the exact dynamic programs.

use std::collections::{HashMap, HashSet};

use crate::scalar::{int, Scalar};

/// Sorted, deduplicated set of grid times with O(1) membership lookup.
#[derive(Debug, Clone, Default)]
pub struct TimeGrid {
    points: Vec<Scalar>,
    index: HashMap<Scalar, usize>,
}

impl TimeGrid {
    pub fn from_points(mut points: Vec<Scalar>) -> Self {
        points.sort();
        points.dedup();
        let index = points.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        Self { points, index }
    }

    /// `{ a + l (b - a) / k : a <= b in omega, 1 <= k <= max_parts, 0 <= l <= k }`.
    pub fn subdivisions(omega: &[Scalar], max_parts: u64) -> Self {
        let mut points = omega.to_vec();
        for (x, a) in omega.iter().enumerate() {
            for b in &omega[x + 1..] {
                let span = b - a;
                for k in 1..=max_parts {
                    let step = &span / int(k as i64);
                    for l in 1..k {
                        points.push(a + &step * int(l as i64));
                    }
                }
            }
        }
        Self::from_points(points)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn get(&self, i: usize) -> &Scalar {
        &self.points[i]
    }

    pub fn points(&self) -> &[Scalar] {
        &self.points
    }

    pub fn index_of(&self, t: &Scalar) -> Option<usize> {
        self.index.get(t).copied()
    }

    pub fn contains(&self, t: &Scalar) -> bool {
        self.index.contains_key(t)
    }

    /// Index of the first point `>= t`.
    pub fn lower_bound(&self, t: &Scalar) -> usize {
        self.points.partition_point(|p| p < t)
    }
}

/// Finite set of admissible constant speeds.
#[derive(Debug, Clone, Default)]
pub struct SpeedSet {
    speeds: Vec<Scalar>,
    members: HashSet<Scalar>,
}

impl SpeedSet {
    /// `{ l * unit / (b - a) : 1 <= l <= multiples, a < b in omega }`.
    pub fn from_omega(omega: &[Scalar], unit: &Scalar, multiples: u64) -> Self {
        let mut speeds = Vec::new();
        for (x, a) in omega.iter().enumerate() {
            for b in &omega[x + 1..] {
                let base = unit / (b - a);
                for l in 1..=multiples {
                    speeds.push(&base * int(l as i64));
                }
            }
        }
        speeds.sort();
        speeds.dedup();
        let members = speeds.iter().cloned().collect();
        Self { speeds, members }
    }

    pub fn contains(&self, s: &Scalar) -> bool {
        self.members.contains(s)
    }

    pub fn speeds(&self) -> &[Scalar] {
        &self.speeds
    }

    pub fn len(&self) -> usize {
        self.speeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speeds.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    #[test]
    fn halves_of_one_span() {
        let g = TimeGrid::subdivisions(&[int(0), int(2)], 2);
        assert_eq!(g.points(), &[int(0), int(1), int(2)]);
        assert_eq!(g.index_of(&int(1)), Some(1));
        assert_eq!(g.lower_bound(&ratio(1, 2)), 1);
    }

    #[test]
    fn speeds_over_three_points() {
        let s = SpeedSet::from_omega(&[int(0), int(1), int(3)], &int(2), 1);
        assert_eq!(s.speeds(), &[ratio(2, 3), int(1), int(2)]);
        let unit = SpeedSet::from_omega(&[int(0), int(1)], &int(1), 1);
        assert_eq!(unit.speeds(), &[int(1)]);
    }
}
