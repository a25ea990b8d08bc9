use serde::Serialize;

use super::{estimate, Budget, Category, CostTable, ResourceError, ResourceVector};
use crate::ir::Graph;

/// Largest replication factor probed by [`scaling_headroom`].
const MAX_REPLICATION: u64 = 1 << 16;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiffRow {
    pub category: Category,
    pub before: u64,
    pub after: u64,
    pub delta: i64,
    /// `delta` as a percentage of the budget.
    pub delta_percent: f64,
    pub before_percent: f64,
    pub after_percent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiffReport {
    pub rows: Vec<DiffRow>,
    /// Categories in which `after` exceeds the budget.
    pub over_budget: Vec<Category>,
}

impl DiffReport {
    pub fn row(&self, c: Category) -> &DiffRow {
        self.rows
            .iter()
            .find(|r| r.category == c)
            .expect("one row per category")
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|r| r.delta == 0)
    }
}

pub fn compare(before: &ResourceVector, after: &ResourceVector, budget: &Budget) -> DiffReport {
    let rows = Category::ALL
        .iter()
        .map(|&c| {
            let (b, a) = (before.get(c), after.get(c));
            let delta = a as i64 - b as i64;
            DiffRow {
                category: c,
                before: b,
                after: a,
                delta,
                delta_percent: 100.0 * delta as f64 / budget.capacity().get(c) as f64,
                before_percent: before.percent_of(budget, c),
                after_percent: after.percent_of(budget, c),
            }
        })
        .collect();
    let over_budget = Category::ALL
        .into_iter()
        .filter(|c| after.get(*c) > budget.capacity().get(*c))
        .collect();
    DiffReport { rows, over_budget }
}

/// Largest `r` for which `build(r)` fits the budget in every category.
///
/// The cost of one replica is taken from the `r = 1` and `r = 2` builds and
/// extrapolated linearly; the guess is then confirmed against real builds.
pub fn scaling_headroom<E: std::fmt::Display>(
    build: &dyn Fn(u32) -> Result<Graph, E>,
    costs: &CostTable,
    budget: &Budget,
) -> Result<u32, ResourceError> {
    let cost = |r: u32| -> Result<ResourceVector, ResourceError> {
        let g = build(r).map_err(|e| ResourceError::Build(e.to_string()))?;
        estimate(&g, costs)
    };
    let one = cost(1)?;
    if !one.fits(budget) {
        return Ok(0);
    }
    let two = cost(2)?;
    let mut guess = MAX_REPLICATION;
    for c in Category::ALL {
        let per = two.get(c).saturating_sub(one.get(c));
        if per == 0 {
            continue;
        }
        let base = one.get(c).saturating_sub(per);
        let cap = budget.capacity().get(c);
        guess = guess.min(cap.saturating_sub(base) / per);
    }
    let mut r = guess.max(1) as u32;
    while r > 1 && !cost(r)?.fits(budget) {
        r -= 1;
    }
    while (r as u64) < MAX_REPLICATION && cost(r + 1)?.fits(budget) {
        r += 1;
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_vectors_give_zero_diff() {
        let v = ResourceVector {
            lut_logic: 10,
            dsp: 4,
            ..Default::default()
        };
        let d = compare(&v, &v, &Budget::default());
        assert!(d.is_zero());
        assert!(d.over_budget.is_empty());
    }

    #[test]
    fn over_budget_is_flagged() {
        let after = ResourceVector {
            dsp: 2881,
            ..Default::default()
        };
        let d = compare(&ResourceVector::ZERO, &after, &Budget::default());
        assert_eq!(d.over_budget, vec![Category::Dsp]);
        assert_eq!(d.row(Category::Dsp).delta, 2881);
    }

    #[test]
    fn percentages_are_of_budget() {
        let after = ResourceVector {
            dsp: 1440,
            ..Default::default()
        };
        let d = compare(&ResourceVector::ZERO, &after, &Budget::default());
        assert_eq!(d.row(Category::Dsp).delta_percent, 50.0);
        assert_eq!(d.row(Category::Dsp).after_percent, 50.0);
    }
}
