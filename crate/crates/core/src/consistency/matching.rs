use serde::{Deserialize, Serialize};

use crate::geometry::{angular_difference, Minutia, MinutiaeSet};

use super::{lsa, ConsistencyError};

/// Side length of the tolerance box, in pixels.
pub const DEFAULT_BOX_SIZE: f64 = 9.0;

/// Positional (and optionally angular) tolerance for a matched pair.
///
/// The default reads "a box of size 9 pixels" as a 9×9 box centred on the
/// expected minutia, i.e. a half-width of 4.5. [`MatchTolerance::half_width_nine`]
/// gives the wider reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchTolerance {
    pub box_half_width: f64,
    #[serde(default)]
    pub angle_tolerance: Option<f64>,
}

impl Default for MatchTolerance {
    fn default() -> Self {
        MatchTolerance {
            box_half_width: DEFAULT_BOX_SIZE / 2.0,
            angle_tolerance: None,
        }
    }
}

impl MatchTolerance {
    pub fn new(box_half_width: f64, angle_tolerance: Option<f64>) -> Result<Self, ConsistencyError> {
        let t = MatchTolerance {
            box_half_width,
            angle_tolerance,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn half_width_nine() -> Self {
        MatchTolerance {
            box_half_width: DEFAULT_BOX_SIZE,
            angle_tolerance: None,
        }
    }

    pub fn validate(&self) -> Result<(), ConsistencyError> {
        if !(self.box_half_width > 0.0 && self.box_half_width.is_finite()) {
            return Err(ConsistencyError::InvalidTolerance(format!(
                "box half-width must be positive, got {}",
                self.box_half_width
            )));
        }
        if let Some(a) = self.angle_tolerance {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(ConsistencyError::InvalidTolerance(format!(
                    "angle tolerance must be non-negative, got {a}"
                )));
            }
        }
        Ok(())
    }

    pub fn accepts(&self, expected: &Minutia, generated: &Minutia) -> bool {
        let dx = generated.x - expected.x;
        let dy = generated.y - expected.y;
        dx.abs() <= self.box_half_width
            && dy.abs() <= self.box_half_width
            && self
                .angle_tolerance
                .is_none_or(|tol| angular_difference(expected.theta, generated.theta) <= tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub expected_id: String,
    pub generated_id: String,
    /// Generated minus expected position.
    pub dx: f64,
    pub dy: f64,
}

impl MatchedPair {
    pub fn displacement(&self) -> f64 {
        self.dx.hypot(self.dy)
    }
}

/// One-to-one correspondence between an expected and a generated set.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Assignment {
    pub pairs: Vec<MatchedPair>,
    pub unmatched_expected: Vec<String>,
    pub unmatched_generated: Vec<String>,
}

impl Assignment {
    pub fn total_displacement(&self) -> f64 {
        self.pairs.iter().map(MatchedPair::displacement).sum()
    }

    pub fn partner_of_expected(&self, id: &str) -> Option<&str> {
        self.pairs
            .iter()
            .find(|p| p.expected_id == id)
            .map(|p| p.generated_id.as_str())
    }

    pub fn partner_of_generated(&self, id: &str) -> Option<&str> {
        self.pairs
            .iter()
            .find(|p| p.generated_id == id)
            .map(|p| p.expected_id.as_str())
    }

    /// Every expected id referenced by the assignment.
    pub fn expected_ids(&self) -> impl Iterator<Item = &str> {
        self.pairs
            .iter()
            .map(|p| p.expected_id.as_str())
            .chain(self.unmatched_expected.iter().map(String::as_str))
    }

    pub fn generated_ids(&self) -> impl Iterator<Item = &str> {
        self.pairs
            .iter()
            .map(|p| p.generated_id.as_str())
            .chain(self.unmatched_generated.iter().map(String::as_str))
    }
}

fn sorted_by_id(set: &MinutiaeSet) -> Vec<&Minutia> {
    let mut v: Vec<&Minutia> = set.iter().collect();
    v.sort_by(|a, b| a.id.cmp(&b.id));
    v
}

/// Pairs expected and generated minutiae one-to-one inside the tolerance box.
///
/// The assignment has maximum cardinality and, among those, minimum total
/// Euclidean displacement. Both sets are visited in ascending id order, so
/// the result is independent of input ordering.
pub fn match_minutiae(
    expected: &MinutiaeSet,
    generated: &MinutiaeSet,
    tol: &MatchTolerance,
) -> Assignment {
    let exp = sorted_by_id(expected);
    let gen = sorted_by_id(generated);

    let feasible: Vec<Vec<Option<f64>>> = exp
        .iter()
        .map(|e| {
            gen.iter()
                .map(|g| tol.accepts(e, g).then(|| (g.x - e.x).hypot(g.y - e.y)))
                .collect()
        })
        .collect();

    let mut matched_gen_for_exp: Vec<Option<usize>> = vec![None; exp.len()];
    let any_feasible = feasible.iter().flatten().any(Option::is_some);
    if any_feasible {
        let max_d = feasible
            .iter()
            .flatten()
            .flatten()
            .fold(0.0f64, |a, &b| a.max(b));
        let rows_are_expected = exp.len() <= gen.len();
        let k = exp.len().min(gen.len());
        // Any infeasible edge costs more than every feasible edge combined, so
        // the optimum first maximises the number of feasible pairs.
        let big = (k as f64 + 1.0) * (max_d + 1.0);
        let edge = |e: usize, g: usize| feasible[e][g].unwrap_or(big);
        let cost: Vec<Vec<f64>> = if rows_are_expected {
            (0..exp.len())
                .map(|e| (0..gen.len()).map(|g| edge(e, g)).collect())
                .collect()
        } else {
            (0..gen.len())
                .map(|g| (0..exp.len()).map(|e| edge(e, g)).collect())
                .collect()
        };
        for (row, col) in lsa::solve(&cost).into_iter().enumerate() {
            let (e, g) = if rows_are_expected { (row, col) } else { (col, row) };
            if feasible[e][g].is_some() {
                matched_gen_for_exp[e] = Some(g);
            }
        }
    }

    let mut assignment = Assignment::default();
    let mut gen_used = vec![false; gen.len()];
    for (e, slot) in matched_gen_for_exp.iter().enumerate() {
        match slot {
            Some(g) => {
                gen_used[*g] = true;
                assignment.pairs.push(MatchedPair {
                    expected_id: exp[e].id.clone(),
                    generated_id: gen[*g].id.clone(),
                    dx: gen[*g].x - exp[e].x,
                    dy: gen[*g].y - exp[e].y,
                });
            }
            None => assignment.unmatched_expected.push(exp[e].id.clone()),
        }
    }
    assignment.unmatched_generated = gen
        .iter()
        .zip(&gen_used)
        .filter(|(_, used)| !**used)
        .map(|(g, _)| g.id.clone())
        .collect();
    assignment
}
