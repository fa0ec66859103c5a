//! Access-point scheduling: one user per beam by largest reported CQI.

use crate::model::Mode;
use crate::qbc::CsiReport;

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleResult {
    /// `assignment[m]` is the user served on beam `m`, if any reported it.
    pub assignment: Vec<Option<usize>>,
    /// Reported CQI of the assigned user (0 for unassigned beams).
    pub cqi: Vec<f64>,
    pub mode: Mode,
}

impl ScheduleResult {
    pub fn assigned_beams(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(m, u)| u.map(|u| (m, u)))
    }

    pub fn unassigned_count(&self) -> usize {
        self.assignment.iter().filter(|u| u.is_none()).count()
    }
}

/// Per-beam argmax of CQI over the reports that chose that beam. Ties go
/// to the lowest user index whatever the arrival order.
pub fn schedule_users(reports: &[CsiReport], m: usize, mode: Mode) -> ScheduleResult {
    let entries: Vec<(usize, usize, f64)> = reports.iter().map(|r| (r.user, r.cdi, r.cqi)).collect();
    schedule_entries(&entries, m, mode)
}

/// Same rule on bare `(user, cdi, cqi)` triples.
pub fn schedule_entries(entries: &[(usize, usize, f64)], m: usize, mode: Mode) -> ScheduleResult {
    let mut assignment: Vec<Option<usize>> = vec![None; m];
    let mut cqi = vec![0.0; m];
    for &(user, cdi, q) in entries {
        assert!(cdi < m, "report for beam {cdi} with only {m} beams");
        let better = match assignment[cdi] {
            None => true,
            Some(cur) => q > cqi[cdi] || (q == cqi[cdi] && user < cur),
        };
        if better {
            assignment[cdi] = Some(user);
            cqi[cdi] = q;
        }
    }
    ScheduleResult {
        assignment,
        cqi,
        mode,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{derive_trial_rng, Purpose};
    use crate::numerics::ComplexVector;

    fn rep(user: usize, cdi: usize, cqi: f64) -> CsiReport {
        CsiReport {
            user,
            cdi,
            cqi,
            combiner: ComplexVector::zeros(1),
        }
    }

    #[test]
    fn single_report() {
        let s = schedule_users(&[rep(3, 1, 0.7)], 4, Mode::Conventional);
        assert_eq!(s.assignment, vec![None, Some(3), None, None]);
        assert_eq!(s.unassigned_count(), 3);
    }

    #[test]
    fn larger_cqi_wins_and_ties_go_low() {
        let s = schedule_users(&[rep(0, 2, 3.0), rep(1, 2, 2.0)], 4, Mode::Cooperative);
        assert_eq!(s.assignment[2], Some(0));
        let s = schedule_users(&[rep(7, 0, 1.0), rep(2, 0, 1.0)], 2, Mode::Cooperative);
        assert_eq!(s.assignment[0], Some(2));
        assert_eq!(s.mode, Mode::Cooperative);
    }

    fn random_reports(t: u64, m: usize) -> Vec<CsiReport> {
        let mut rng = derive_trial_rng(5, t, Purpose::Test(3));
        let k = 1 + (rng.next_u64() % 20) as usize;
        let mut users: Vec<usize> = (0..k).map(|u| u * 3 + 1).collect();
        // Shuffle arrival order.
        for i in (1..users.len()).rev() {
            users.swap(i, (rng.next_u64() % (i as u64 + 1)) as usize);
        }
        users
            .into_iter()
            .map(|u| {
                // Coarse CQIs so ties actually happen.
                let cqi = (rng.uniform() * 4.0).floor();
                rep(u, (rng.next_u64() % m as u64) as usize, cqi)
            })
            .collect()
    }

    #[test]
    fn matches_exhaustive_oracle() {
        let m = 4;
        for t in 0..1000 {
            let reports = random_reports(t, m);
            let s = schedule_users(&reports, m, Mode::Conventional);
            for beam in 0..m {
                let best = reports
                    .iter()
                    .filter(|r| r.cdi == beam)
                    .max_by(|a, b| a.cqi.total_cmp(&b.cqi).then(b.user.cmp(&a.user)))
                    .map(|r| r.user);
                assert_eq!(s.assignment[beam], best);
            }
            let mut seen: Vec<usize> = s.assigned_beams().map(|(_, u)| u).collect();
            let n = seen.len();
            seen.sort();
            seen.dedup();
            assert_eq!(seen.len(), n);
        }
    }

    #[test]
    fn invariant_under_positive_rescaling() {
        for t in 0..200 {
            let reports = random_reports(t, 4);
            let scaled: Vec<CsiReport> = reports
                .iter()
                .map(|r| rep(r.user, r.cdi, r.cqi * 7.25))
                .collect();
            assert_eq!(
                schedule_users(&reports, 4, Mode::Conventional).assignment,
                schedule_users(&scaled, 4, Mode::Conventional).assignment
            );
        }
    }
}
