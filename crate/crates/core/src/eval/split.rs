use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::RoleLabel;

/// Minimum members per role for a stratified split.
pub const MIN_PER_CLASS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitPlan {
    /// Train, validation and test shares.
    pub ratios: [f64; 3],
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitPlan {
    fn default() -> Self {
        SplitPlan {
            ratios: [0.8, 0.1, 0.1],
            seed: 1,
            stratified: true,
        }
    }
}

impl SplitPlan {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.ratios.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
            return Err(EvalError::InvalidPlan(format!("each ratio must be in (0, 1), got {:?}", self.ratios)));
        }
        let sum: f64 = self.ratios.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(EvalError::InvalidPlan(format!("ratios must sum to 1, got {sum}")));
        }
        Ok(())
    }

    /// Sizes for `n` items: floor train, floor validation, remainder test.
    pub fn sizes(&self, n: usize) -> [usize; 3] {
        let train = (n as f64 * self.ratios[0]).floor() as usize;
        let val = ((n as f64 * self.ratios[1]).floor() as usize).min(n - train);
        [train, val, n - train - val]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

/// Splits labeled developers into disjoint train, validation and test sets.
///
/// The split totals always match [`SplitPlan::sizes`]. Stratified splits then
/// give each role a count within one member of its proportional share of
/// each total. The result depends only on the
/// set of inputs and the seed, not on their order.
pub fn split(developers: &[(String, RoleLabel)], plan: &SplitPlan) -> Result<Split, EvalError> {
    plan.validate()?;
    let mut items: Vec<&(String, RoleLabel)> = developers.iter().collect();
    items.sort();
    items.dedup_by(|a, b| a.0 == b.0);
    if items.len() != developers.len() {
        return Err(EvalError::InvalidPlan("duplicate developer ids".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut out = Split::default();
    let totals = plan.sizes(items.len());

    if !plan.stratified {
        items.shuffle(&mut rng);
        let ids: Vec<String> = items.iter().map(|(id, _)| id.clone()).collect();
        out.train = ids[..totals[0]].to_vec();
        out.val = ids[totals[0]..totals[0] + totals[1]].to_vec();
        out.test = ids[totals[0] + totals[1]..].to_vec();
    } else {
        let mut groups: BTreeMap<RoleLabel, Vec<String>> = BTreeMap::new();
        for (id, role) in &items {
            groups.entry(*role).or_default().push(id.clone());
        }
        if let Some((role, ids)) = groups.iter().find(|(_, ids)| ids.len() < MIN_PER_CLASS) {
            return Err(EvalError::TooFewPerClass {
                role: *role,
                count: ids.len(),
            });
        }
        let counts = apportion(&groups.values().map(Vec::len).collect::<Vec<_>>(), totals);
        for ((_, mut ids), [tr, va, _]) in groups.into_iter().zip(counts) {
            ids.shuffle(&mut rng);
            let test = ids.split_off(tr + va);
            let val = ids.split_off(tr);
            out.train.extend(ids);
            out.val.extend(val);
            out.test.extend(test);
        }
    }
    out.train.sort();
    out.val.sort();
    out.test.sort();
    Ok(out)
}

/// Per-group `[train, val, test]` counts whose column sums equal `totals`.
///
/// A group's quota in each part is its size times that part's realized
/// share `totals[p] / n`, so quotas add up exactly along both axes. Every
/// cell starts at the floor of its quota. The members left over
/// in each group are then handed out one per cell, matched against the
/// columns still short of their totals, so cells end at floor or ceiling.
fn apportion(group_sizes: &[usize], totals: [usize; 3]) -> Vec<[usize; 3]> {
    let n: usize = totals.iter().sum();
    let quotas: Vec<[f64; 3]> = group_sizes
        .iter()
        .map(|&g| totals.map(|t| (g * t) as f64 / n as f64))
        .collect();
    let mut counts: Vec<[usize; 3]> = quotas.iter().map(|q| q.map(|x| x.floor() as usize)).collect();
    let mut spare: Vec<usize> = group_sizes
        .iter()
        .zip(&counts)
        .map(|(&n, c)| n.saturating_sub(c.iter().sum()))
        .collect();
    let mut short: [usize; 3] =
        std::array::from_fn(|p| totals[p].saturating_sub(counts.iter().map(|c| c[p]).sum()));

    // Cells by decreasing fractional remainder, so larger remainders win.
    let mut cells: Vec<(usize, usize)> = (0..group_sizes.len()).flat_map(|g| (0..3).map(move |p| (g, p))).collect();
    let frac = |&(g, p): &(usize, usize)| quotas[g][p] - quotas[g][p].floor();
    cells.sort_by(|a, b| frac(b).total_cmp(&frac(a)).then(a.cmp(b)));

    let mut raised = vec![[false; 3]; group_sizes.len()];
    for &(g, p) in &cells {
        if spare[g] > 0 && short[p] > 0 {
            raised[g][p] = true;
            spare[g] -= 1;
            short[p] -= 1;
        }
    }
    // Augmenting paths: move a raise from column q to p where a group can
    // give up q and another spare-holding group can take q.
    loop {
        let Some(p) = (0..3).find(|&p| short[p] > 0) else { break };
        let mut moved = false;
        'search: for g in 0..group_sizes.len() {
            if spare[g] == 0 || raised[g][p] {
                continue;
            }
            // Direct: g takes p.
            raised[g][p] = true;
            spare[g] -= 1;
            short[p] -= 1;
            moved = true;
            break 'search;
        }
        if !moved {
            'swap: for h in 0..group_sizes.len() {
                if raised[h][p] {
                    continue;
                }
                for q in 0..3 {
                    if q == p || !raised[h][q] {
                        continue;
                    }
                    if let Some(g) = (0..group_sizes.len()).find(|&g| spare[g] > 0 && !raised[g][q]) {
                        raised[h][q] = false;
                        raised[h][p] = true;
                        raised[g][q] = true;
                        spare[g] -= 1;
                        short[p] -= 1;
                        moved = true;
                        break 'swap;
                    }
                }
            }
        }
        if !moved {
            // No floor/ceiling assignment exists; give the column whatever is left.
            for g in 0..group_sizes.len() {
                while spare[g] > 0 && short[p] > 0 {
                    counts[g][p] += 1;
                    spare[g] -= 1;
                    short[p] -= 1;
                }
            }
            if short[p] > 0 {
                break;
            }
        }
    }
    for (c, r) in counts.iter_mut().zip(&raised) {
        for p in 0..3 {
            c[p] += usize::from(r[p]);
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn devs(per_role: &[usize]) -> Vec<(String, RoleLabel)> {
        per_role
            .iter()
            .enumerate()
            .flat_map(|(r, &n)| (0..n).map(move |i| (format!("r{r}-{i:04}"), RoleLabel::ALL[r])))
            .collect()
    }

    #[test]
    fn global_sizes() {
        let plan = SplitPlan::default();
        assert_eq!(plan.sizes(1272), [1017, 127, 128]);
        let s = split(&devs(&[300, 520, 75, 150, 227]), &plan).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (1017, 127, 128));
    }

    #[test]
    fn too_few_per_class() {
        let err = split(&devs(&[10, 2, 10]), &SplitPlan::default()).unwrap_err();
        assert!(matches!(err, EvalError::TooFewPerClass { role: RoleLabel::Frontend, count: 2 }));
        let plan = SplitPlan {
            stratified: false,
            ..Default::default()
        };
        assert!(split(&devs(&[10, 2, 10]), &plan).is_ok());
    }

    #[test]
    fn invalid_ratios() {
        let plan = SplitPlan {
            ratios: [0.8, 0.05, 0.05],
            ..Default::default()
        };
        assert!(matches!(split(&devs(&[5]), &plan), Err(EvalError::InvalidPlan(_))));
    }

    proptest! {
        #[test]
        fn stratified_invariants(sizes in proptest::collection::vec(3usize..60, 1..6), seed in 0u64..1000) {
            let all = devs(&sizes);
            let plan = SplitPlan { seed, ..Default::default() };
            let s = split(&all, &plan).unwrap();
            let n = all.len();
            prop_assert_eq!([s.train.len(), s.val.len(), s.test.len()], plan.sizes(n));
            let mut seen = HashSet::new();
            for id in s.train.iter().chain(&s.val).chain(&s.test) {
                prop_assert!(seen.insert(id.clone()));
            }
            prop_assert_eq!(seen.len(), n);
            for (r, &size) in sizes.iter().enumerate() {
                let prefix = format!("r{r}-");
                for (part, ids) in [&s.train, &s.val, &s.test].into_iter().enumerate() {
                    let got = ids.iter().filter(|id| id.starts_with(&prefix)).count() as f64;
                    let exact = (size * plan.sizes(n)[part]) as f64 / n as f64;
                    prop_assert!((got - exact).abs() <= 1.0 + 1e-9, "role {} part {}: {} vs {}", r, part, got, exact);
                }
            }
            let mut reversed = all.clone();
            reversed.reverse();
            prop_assert_eq!(split(&reversed, &plan).unwrap(), s);
        }
    }
}
