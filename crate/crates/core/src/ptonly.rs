//! PT-only: the BD-PT problem with every multi-user mode removed, leaving
//! silence and the `K_bs * K_mu` single-user modes.
//!
//! This is a reconstruction. The original formulation of the scheme is not
//! available, and restricting the full problem's candidate set is the
//! natural reading of "same objective and constraints, only the mode
//! probabilities tunable".

use alloc::vec::Vec;

use crate::bdpt::{argmin_with_ties, evaluate_single_user, ModeChoice, ModeEvaluation};
use crate::candidates::FrameCandidates;
use crate::qos::UserQos;
use crate::Result;

pub fn ptonly_mode_choice(cands: &FrameCandidates, lambda: &[f64], qos: &[UserQos]) -> Result<ModeChoice> {
    let mut evaluations = Vec::with_capacity(1 + cands.single_user.len());
    evaluations.push(ModeEvaluation::silence(lambda));
    evaluations.extend(cands.single_user.iter().map(|c| evaluate_single_user(c, lambda, qos)));
    let (tied, chosen) = argmin_with_ties(evaluations.iter().map(|e| e.score), cands.tie_key)?;
    Ok(ModeChoice { evaluations, tied, chosen })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::candidates::{enumerate_candidates, CandidateFamilies, CandidateId};
    use crate::channel::{sample_channel, tests::line_scenario};
    use crate::selection::PriorityOrder;

    #[test]
    fn silence_with_zero_multipliers_and_exhaustive_min() {
        let sc = line_scenario(5, 3, 3, 1);
        let qos = sc.user_qos().unwrap();
        let st = sample_channel(&sc, 2, 3);
        let c = enumerate_candidates(&st, &sc, &PriorityOrder::identity(3), CandidateFamilies::PTONLY, 1).unwrap();
        let ch = ptonly_mode_choice(&c, &[0.0; 3], &qos).unwrap();
        assert_eq!(ch.best().id, CandidateId::Silence);

        let ch = ptonly_mode_choice(&c, &[40.0, 5.0, 300.0], &qos).unwrap();
        assert_eq!(ch.evaluations.len(), 16);
        let min = ch.evaluations.iter().map(|e| e.score).fold(f64::INFINITY, f64::min);
        assert_eq!(ch.best().score, min);
    }
}
