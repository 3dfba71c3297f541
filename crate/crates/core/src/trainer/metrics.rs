use super::EpisodeLog;

/// Trailing mean; the first `window - 1` entries average the available prefix.
pub fn moving_average(xs: &[f64], window: usize) -> Vec<f64> {
    assert!(window >= 1, "window must be at least 1");
    let mut out = Vec::with_capacity(xs.len());
    let mut sum = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        sum += x;
        if i >= window {
            sum -= xs[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotStats {
    /// Inclusive episode range.
    pub first: usize,
    pub last: usize,
    pub count: usize,
    pub mean_time: f64,
    pub mean_eod: f64,
    /// Mean of `N + tau * EOD`.
    pub mean_weighted: f64,
}

/// Per-slot means over logs whose episode index falls in each inclusive range.
pub fn aggregate_slots(logs: &[EpisodeLog], slots: &[(usize, usize)], dt: f64, tau: f64) -> Vec<SlotStats> {
    slots
        .iter()
        .map(|&(first, last)| {
            let sel: Vec<&EpisodeLog> = logs.iter().filter(|l| (first..=last).contains(&l.episode)).collect();
            let n = sel.len();
            let avg = |f: &dyn Fn(&EpisodeLog) -> f64| if n == 0 { f64::NAN } else { sel.iter().map(|l| f(l)).sum::<f64>() / n as f64 };
            SlotStats {
                first,
                last,
                count: n,
                mean_time: avg(&|l| l.time_cost(dt)),
                mean_eod: avg(&|l| l.eod_hat),
                mean_weighted: avg(&|l| l.steps as f64 + tau * l.eod_hat),
            }
        })
        .collect()
}
