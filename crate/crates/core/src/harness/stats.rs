//! Success ratios, gaze-time moments, two-way ANOVA on binary outcomes and
//! Bonferroni-corrected pairwise proportion tests.

use std::collections::BTreeMap;

use serde::{Serialize, Serializer};
use statrs::distribution::{ContinuousCDF, FisherSnedecor, Normal};

use crate::controller::Method;
use crate::error::{Error, Result};
use crate::harness::trial::TrialRecord;
use crate::srm::ViewingSituation;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellStats {
    pub method: Method,
    pub situation: ViewingSituation,
    pub n: usize,
    pub mean_success: f64,
    pub sd_success: f64,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance; zero for fewer than two values.
fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

fn outcome(r: &TrialRecord) -> f64 {
    if r.responded {
        1.0
    } else {
        0.0
    }
}

fn cells(records: &[TrialRecord]) -> BTreeMap<(Method, ViewingSituation), Vec<f64>> {
    let mut map: BTreeMap<_, Vec<f64>> = BTreeMap::new();
    for r in records {
        map.entry((r.method, r.situation)).or_default().push(outcome(r));
    }
    map
}

/// Per-cell success mean and sample SD, in method then situation order.
pub fn success_ratio(records: &[TrialRecord]) -> Result<Vec<CellStats>> {
    if records.is_empty() {
        return Err(Error::EmptyCell("no records".into()));
    }
    Ok(cells(records)
        .into_iter()
        .map(|((method, situation), xs)| CellStats {
            method,
            situation,
            n: xs.len(),
            mean_success: mean(&xs),
            sd_success: sample_variance(&xs).sqrt(),
        })
        .collect())
}

/// Mean of the four situation success ratios of `method`.
pub fn overall_ratio(records: &[TrialRecord], method: Method) -> Result<f64> {
    let cells = cells(records);
    let mut total = 0.0;
    for s in ViewingSituation::ALL {
        let xs = cells.get(&(method, s)).ok_or(Error::MissingSituation(s))?;
        total += mean(xs);
    }
    Ok(total / 4.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GazeStats {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
}

/// Gaze-time mean and sample variance over the successful trials of
/// `method`.
pub fn gaze_stats(records: &[TrialRecord], method: Method) -> Result<GazeStats> {
    let xs: Vec<f64> = records
        .iter()
        .filter(|r| r.method == method && r.responded)
        .filter_map(|r| r.gaze_time)
        .collect();
    if xs.is_empty() {
        return Err(Error::NoSuccessfulTrials);
    }
    Ok(GazeStats {
        n: xs.len(),
        mean: mean(&xs),
        variance: sample_variance(&xs),
    })
}

/// F statistic; infinite when the within-cell variance is zero but the
/// effect is not. Serialized as the string `"inf"` in that case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FStat(pub f64);

impl FStat {
    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }
}

impl Serialize for FStat {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Effect {
    pub ss: f64,
    pub df: usize,
    pub ms: f64,
    pub f: FStat,
    pub p: f64,
    /// F value at which p = 0.01.
    pub f_crit_01: f64,
    pub eta_squared: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Anova {
    /// First factor (rows of the grid).
    pub a: Effect,
    /// Second factor (columns).
    pub b: Effect,
    pub interaction: Effect,
    pub ss_within: f64,
    pub df_within: usize,
    pub ss_total: f64,
}

fn effect(ss: f64, df: usize, ms_within: f64, df_within: usize, ss_total: f64) -> Effect {
    let ms = if df > 0 { ss / df as f64 } else { 0.0 };
    // Sums of squares that should be zero come out at rounding level.
    let zero = ss.abs() <= 1e-12 * ss_total.max(1.0);
    let f = if ms_within > 0.0 {
        if zero {
            0.0
        } else {
            ms / ms_within
        }
    } else if zero {
        0.0
    } else {
        f64::INFINITY
    };
    let (p, f_crit_01) = match FisherSnedecor::new(df.max(1) as f64, df_within.max(1) as f64) {
        Ok(dist) => {
            let p = if f.is_infinite() { 0.0 } else { dist.sf(f) };
            (p, dist.inverse_cdf(0.99))
        }
        Err(_) => (f64::NAN, f64::NAN),
    };
    Effect {
        ss: if zero { 0.0 } else { ss },
        df,
        ms,
        f: FStat(f),
        p,
        f_crit_01,
        eta_squared: if ss_total > 0.0 { ss / ss_total } else { 0.0 },
    }
}

/// Two-way fixed-effects ANOVA on a balanced grid `cells[a][b]` of
/// observations.
pub fn anova_two_way(cells: &[Vec<Vec<f64>>]) -> Result<Anova> {
    let a = cells.len();
    let b = cells.first().map_or(0, Vec::len);
    if a < 2 || b < 2 {
        return Err(Error::UnbalancedDesign("need at least two levels of each factor".into()));
    }
    let n = cells[0][0].len();
    if n < 2 {
        return Err(Error::UnbalancedDesign("need at least two observations per cell".into()));
    }
    for (i, row) in cells.iter().enumerate() {
        if row.len() != b {
            return Err(Error::UnbalancedDesign(format!("row {i} has {} cells, expected {b}", row.len())));
        }
        if let Some(j) = row.iter().position(|c| c.len() != n) {
            return Err(Error::UnbalancedDesign(format!(
                "cell ({i}, {j}) has {} observations, expected {n}",
                row[j].len()
            )));
        }
    }
    let cell_mean: Vec<Vec<f64>> = cells.iter().map(|row| row.iter().map(|c| mean(c)).collect()).collect();
    let grand = cell_mean.iter().flatten().sum::<f64>() / (a * b) as f64;
    let row_mean: Vec<f64> = cell_mean.iter().map(|r| mean(r)).collect();
    let col_mean: Vec<f64> = (0..b).map(|j| cell_mean.iter().map(|r| r[j]).sum::<f64>() / a as f64).collect();
    let nf = n as f64;

    let ss_a = b as f64 * nf * row_mean.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_b = a as f64 * nf * col_mean.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let mut ss_ab = 0.0;
    let mut ss_within = 0.0;
    let mut ss_total = 0.0;
    for i in 0..a {
        for j in 0..b {
            let m = cell_mean[i][j];
            ss_ab += nf * (m - row_mean[i] - col_mean[j] + grand).powi(2);
            for y in &cells[i][j] {
                ss_within += (y - m).powi(2);
                ss_total += (y - grand).powi(2);
            }
        }
    }
    let df_within = a * b * (n - 1);
    let ms_within = if ss_within > 1e-12 * ss_total.max(1.0) {
        ss_within / df_within as f64
    } else {
        0.0
    };
    Ok(Anova {
        a: effect(ss_a, a - 1, ms_within, df_within, ss_total),
        b: effect(ss_b, b - 1, ms_within, df_within, ss_total),
        interaction: effect(ss_ab, (a - 1) * (b - 1), ms_within, df_within, ss_total),
        ss_within,
        df_within,
        ss_total,
    })
}

/// ANOVA with methods as the first factor and situations as the second.
pub fn anova_from_records(records: &[TrialRecord]) -> Result<Anova> {
    let cells = cells(records);
    let methods: Vec<Method> = Method::ALL.into_iter().filter(|m| cells.keys().any(|k| k.0 == *m)).collect();
    let situations: Vec<ViewingSituation> = ViewingSituation::ALL
        .into_iter()
        .filter(|s| cells.keys().any(|k| k.1 == *s))
        .collect();
    let mut grid = Vec::with_capacity(methods.len());
    for m in &methods {
        let mut row = Vec::with_capacity(situations.len());
        for s in &situations {
            let c = cells
                .get(&(*m, *s))
                .ok_or_else(|| Error::UnbalancedDesign(format!("cell {m}/{s} is empty")))?;
            row.push(c.clone());
        }
        grid.push(row);
    }
    anova_two_way(&grid)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    /// Which set of comparisons the correction was applied over.
    pub family: String,
    pub a: String,
    pub b: String,
    pub success_a: f64,
    pub success_b: f64,
    pub n_a: usize,
    pub n_b: usize,
    pub z: f64,
    pub p: f64,
    pub p_adjusted: f64,
    pub significant: bool,
}

/// Two-sided pooled two-proportion z-test.
pub fn two_proportion_z(x_a: f64, n_a: usize, x_b: f64, n_b: usize) -> (f64, f64) {
    let (na, nb) = (n_a as f64, n_b as f64);
    let pooled = (x_a + x_b) / (na + nb);
    let se = (pooled * (1.0 - pooled) * (1.0 / na + 1.0 / nb)).sqrt();
    if se == 0.0 {
        return (0.0, 1.0);
    }
    let z = (x_a / na - x_b / nb) / se;
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    (z, 2.0 * normal.sf(z.abs()))
}

fn family(name: String, groups: &[(String, Vec<f64>)], alpha: f64, out: &mut Vec<Comparison>) {
    let m = groups.len() * groups.len().saturating_sub(1) / 2;
    for i in 0..groups.len() {
        for j in i + 1..groups.len() {
            let (la, a) = &groups[i];
            let (lb, b) = &groups[j];
            let (xa, xb) = (a.iter().sum::<f64>(), b.iter().sum::<f64>());
            let (z, p) = two_proportion_z(xa, a.len(), xb, b.len());
            let p_adjusted = (p * m as f64).min(1.0);
            out.push(Comparison {
                family: name.clone(),
                a: la.clone(),
                b: lb.clone(),
                success_a: xa / a.len() as f64,
                success_b: xb / b.len() as f64,
                n_a: a.len(),
                n_b: b.len(),
                z,
                p,
                p_adjusted,
                significant: p_adjusted < alpha,
            });
        }
    }
}

/// Pairwise comparisons: methods within each situation, situations within
/// each method, and methods pooled over situations. Each family is
/// corrected for its own number of pairs.
pub fn bonferroni(records: &[TrialRecord], alpha: f64) -> Vec<Comparison> {
    let cells = cells(records);
    let methods: Vec<Method> = Method::ALL.into_iter().filter(|m| cells.keys().any(|k| k.0 == *m)).collect();
    let situations: Vec<ViewingSituation> = ViewingSituation::ALL
        .into_iter()
        .filter(|s| cells.keys().any(|k| k.1 == *s))
        .collect();
    let mut out = Vec::new();
    for s in &situations {
        let groups: Vec<_> = methods
            .iter()
            .filter_map(|m| cells.get(&(*m, *s)).map(|c| (m.to_string(), c.clone())))
            .collect();
        family(format!("methods within {s}"), &groups, alpha, &mut out);
    }
    for m in &methods {
        let groups: Vec<_> = situations
            .iter()
            .filter_map(|s| cells.get(&(*m, *s)).map(|c| (s.to_string(), c.clone())))
            .collect();
        family(format!("situations within {m}"), &groups, alpha, &mut out);
    }
    let pooled: Vec<_> = methods
        .iter()
        .map(|m| {
            let xs: Vec<f64> = cells
                .iter()
                .filter(|(k, _)| k.0 == *m)
                .flat_map(|(_, v)| v.iter().copied())
                .collect();
            (m.to_string(), xs)
        })
        .collect();
    family("methods overall".into(), &pooled, alpha, &mut out);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Overall {
    /// Pooled success ratio per method that covers all four situations.
    pub success_ratio: BTreeMap<Method, f64>,
    pub gaze: BTreeMap<Method, GazeStats>,
}

/// The method x situation ANOVA with its factors named.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MethodSituationAnova {
    pub method: Effect,
    pub situation: Effect,
    pub interaction: Effect,
    pub ss_within: f64,
    pub df_within: usize,
    pub ss_total: f64,
}

impl From<Anova> for MethodSituationAnova {
    fn from(a: Anova) -> Self {
        Self {
            method: a.a,
            situation: a.b,
            interaction: a.interaction,
            ss_within: a.ss_within,
            df_within: a.df_within,
            ss_total: a.ss_total,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub overall: Overall,
    /// Absent when the design cannot support it (one level or one trial per
    /// cell, or missing cells).
    pub anova: Option<MethodSituationAnova>,
    pub bonferroni: Vec<Comparison>,
}

pub fn stats_report(records: &[TrialRecord]) -> StatsReport {
    let mut success_ratio = BTreeMap::new();
    let mut gaze = BTreeMap::new();
    for m in Method::ALL {
        if let Ok(r) = overall_ratio(records, m) {
            success_ratio.insert(m, r);
        }
        if let Ok(g) = gaze_stats(records, m) {
            gaze.insert(m, g);
        }
    }
    StatsReport {
        overall: Overall { success_ratio, gaze },
        anova: anova_from_records(records).ok().map(Into::into),
        bonferroni: bonferroni(records, 0.05),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(method: Method, situation: ViewingSituation, responded: bool, gaze: Option<f64>) -> TrialRecord {
        TrialRecord {
            trial_id: 0,
            method,
            situation,
            responded,
            responding_action: None,
            response_latency: None,
            gaze_time: gaze,
            seed: 0,
        }
    }

    #[test]
    fn cell_mean_and_sd() {
        let all: Vec<_> = (0..12).map(|_| record(Method::M1, ViewingSituation::Central, true, None)).collect();
        let c = success_ratio(&all).unwrap();
        assert_eq!((c[0].mean_success, c[0].sd_success), (1.0, 0.0));

        let mut eleven = all.clone();
        eleven[0].responded = false;
        let c = success_ratio(&eleven).unwrap()[0];
        assert!((c.mean_success - 11.0 / 12.0).abs() < 1e-12);
        // sqrt(12 * (11/12) * (1/12) / 11)
        assert!((c.sd_success - (1.0f64 / 12.0).sqrt()).abs() < 1e-12);
        assert!((c.sd_success - 0.29).abs() < 0.005);
        assert!(success_ratio(&[]).is_err());
    }

    #[test]
    fn overall_ratio_uses_equal_cell_weights() {
        let mut rs = Vec::new();
        for (s, k) in ViewingSituation::ALL.into_iter().zip([23, 21, 2, 2]) {
            for i in 0..25 {
                rs.push(record(Method::M1, s, i < k, None));
            }
        }
        assert!((overall_ratio(&rs, Method::M1).unwrap() - 0.48).abs() < 1e-12);
        rs.retain(|r| r.situation != ViewingSituation::OutOfView);
        assert!(matches!(
            overall_ratio(&rs, Method::M1),
            Err(Error::MissingSituation(ViewingSituation::OutOfView))
        ));
    }

    #[test]
    fn gaze_single_record() {
        let rs = [record(Method::M4, ViewingSituation::Central, true, Some(2.0))];
        let g = gaze_stats(&rs, Method::M4).unwrap();
        assert_eq!((g.n, g.mean, g.variance), (1, 2.0, 0.0));
        assert!(matches!(gaze_stats(&rs, Method::M3), Err(Error::NoSuccessfulTrials)));
    }

    #[test]
    fn anova_identical_outcomes() {
        let grid = vec![vec![vec![1.0; 3]; 4]; 4];
        let r = anova_two_way(&grid).unwrap();
        for e in [r.a, r.b, r.interaction] {
            assert_eq!(e.f.0, 0.0);
        }
    }

    #[test]
    fn anova_factor_a_only_gives_infinite_f() {
        let grid = vec![vec![vec![1.0, 1.0], vec![1.0, 1.0]], vec![vec![0.0, 0.0], vec![0.0, 0.0]]];
        let r = anova_two_way(&grid).unwrap();
        // Hand computation: grand mean 0.5, SS_A = 2 * 2 * 2 * 0.25 = 2.
        assert!((r.a.ss - 2.0).abs() < 1e-12);
        assert_eq!(r.b.ss, 0.0);
        assert_eq!(r.interaction.ss, 0.0);
        assert_eq!(r.ss_within, 0.0);
        assert!(r.a.f.is_infinite());
        assert_eq!(r.b.f.0, 0.0);
        assert_eq!(serde_json::to_value(r.a.f).unwrap(), "inf");
        assert_eq!(r.a.p, 0.0);
    }

    /// Textbook decomposition computed from raw deviations.
    fn oracle(grid: &[Vec<Vec<f64>>]) -> (f64, f64, f64, f64) {
        let all: Vec<f64> = grid.iter().flatten().flatten().copied().collect();
        let g = mean(&all);
        let b = grid[0].len();
        let mut ss_a = 0.0;
        for row in grid {
            let v: Vec<f64> = row.iter().flatten().copied().collect();
            ss_a += v.len() as f64 * (mean(&v) - g).powi(2);
        }
        let mut ss_b = 0.0;
        for j in 0..b {
            let v: Vec<f64> = grid.iter().flat_map(|row| row[j].iter().copied()).collect();
            ss_b += v.len() as f64 * (mean(&v) - g).powi(2);
        }
        let ss_w: f64 = grid
            .iter()
            .flatten()
            .map(|c| c.iter().map(|y| (y - mean(c)).powi(2)).sum::<f64>())
            .sum();
        let ss_t: f64 = all.iter().map(|y| (y - g).powi(2)).sum();
        (ss_a, ss_b, ss_t - ss_a - ss_b - ss_w, ss_w)
    }

    #[test]
    fn anova_matches_oracle_and_reference_value() {
        let grid = vec![
            vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]],
            vec![vec![2.0, 2.0, 5.0], vec![9.0, 7.0, 8.0]],
            vec![vec![0.0, 1.0, 1.0], vec![3.0, 3.0, 6.0]],
        ];
        let r = anova_two_way(&grid).unwrap();
        let (a, b, ab, w) = oracle(&grid);
        assert!((r.a.ss - a).abs() < 1e-9);
        assert!((r.b.ss - b).abs() < 1e-9);
        assert!((r.interaction.ss - ab).abs() < 1e-9);
        assert!((r.ss_within - w).abs() < 1e-9);
        assert_eq!((r.a.df, r.b.df, r.interaction.df, r.df_within), (2, 1, 2, 12));
        // F(3, 176) at p = 0.01 is about 3.89.
        let e = effect(1.0, 3, 1.0, 176, 10.0);
        assert!((e.f_crit_01 - 3.894).abs() < 0.01, "{}", e.f_crit_01);
    }

    #[test]
    fn unbalanced_rejected() {
        let grid = vec![vec![vec![1.0, 0.0], vec![1.0]], vec![vec![0.0, 0.0], vec![1.0, 1.0]]];
        assert!(matches!(anova_two_way(&grid), Err(Error::UnbalancedDesign(_))));
    }

    #[test]
    fn z_test_reference() {
        // 90/100 vs 70/100: pooled 0.8, se = sqrt(0.8*0.2*0.02) = 0.05657.
        let (z, p) = two_proportion_z(90.0, 100, 70.0, 100);
        assert!((z - 3.5355).abs() < 1e-3);
        assert!((p - 4.07e-4).abs() < 1e-5, "{p}");
        assert_eq!(two_proportion_z(5.0, 5, 5.0, 5), (0.0, 1.0));
    }

    #[test]
    fn bonferroni_families() {
        let mut rs = Vec::new();
        for m in Method::ALL {
            for s in ViewingSituation::ALL {
                for i in 0..10 {
                    rs.push(record(m, s, i < 5 + m.index(), None));
                }
            }
        }
        let c = bonferroni(&rs, 0.05);
        assert_eq!(c.len(), 4 * 6 + 4 * 6 + 6);
        assert!(c.iter().all(|x| x.p_adjusted >= x.p && x.p_adjusted <= 1.0));
        assert!(c.iter().all(|x| x.p_adjusted == (x.p * 6.0).min(1.0)));
    }

    proptest! {
        #[test]
        fn anova_sums_of_squares_add_up(
            data in proptest::collection::vec(proptest::bool::ANY, 3 * 4 * 5),
        ) {
            let mut it = data.into_iter().map(|b| if b { 1.0 } else { 0.0 });
            let grid: Vec<Vec<Vec<f64>>> = (0..3).map(|_| (0..4).map(|_| (0..5).map(|_| it.next().unwrap()).collect()).collect()).collect();
            let r = anova_two_way(&grid).unwrap();
            let sum = r.a.ss + r.b.ss + r.interaction.ss + r.ss_within;
            prop_assert!((sum - r.ss_total).abs() < 1e-9);
            for e in [r.a, r.b, r.interaction] {
                prop_assert!(e.f.0 >= 0.0);
                prop_assert!(e.eta_squared >= 0.0 && e.eta_squared <= 1.0 + 1e-12);
            }
        }
    }
}
