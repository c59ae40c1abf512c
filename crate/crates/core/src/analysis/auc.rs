use crate::error::domain;
use crate::Result;

/// Area under the ROC curve as the Mann-Whitney statistic: the probability
/// that a random positive scores above a random negative, ties counting one half.
pub fn auc(scores: &[f64], targets: &[bool]) -> Result<f64> {
    if scores.len() != targets.len() {
        return Err(domain(format!("{} scores for {} targets", scores.len(), targets.len())));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(domain("AUC scores contain NaN"));
    }
    let n_pos = targets.iter().filter(|&&t| t).count() as u128;
    let n_neg = targets.len() as u128 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(domain("AUC needs both used and unused targets"));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Twice the rank sum of positives, with tied groups sharing their mean rank.
    let mut twice_rank_sum: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1 ..= j+1, mean = (i + j + 2) / 2
        let positives = order[i..=j].iter().filter(|&&k| targets[k]).count() as u128;
        twice_rank_sum += positives * (i as u128 + j as u128 + 2);
        i = j + 1;
    }
    let twice_u = twice_rank_sum - n_pos * (n_pos + 1);
    Ok(twice_u as f64 / (2 * n_pos * n_neg) as f64)
}
