//! Oracle equivalence for the Bayes filter: the incremental update must
//! match the posterior computed by brute-force enumeration of all state
//! paths, for every feasible observation sequence on small instances.

use cogvid_core::belief::{update, Belief};
use cogvid_core::channel::{ChannelModel, TransitionMatrix};
use cogvid_core::sensing::{observation_kernel, Observation, ObservationKernel, SensorDesign};

/// Posterior of the state after `obs.len()` slots by summing over every
/// state path, or `None` when the sequence has probability zero.
fn path_enumeration_posterior(
    init: &[f64],
    a: &TransitionMatrix,
    kernel: &ObservationKernel,
    obs: &[Observation],
) -> Option<Vec<f64>> {
    let s = a.size();
    let k = obs.len();
    let n_paths = s.pow((k + 1) as u32);
    let mut post = vec![0.0f64; s];
    let mut total = 0.0f64;
    for code in 0..n_paths {
        let mut digits = Vec::with_capacity(k + 1);
        let mut c = code;
        for _ in 0..=k {
            digits.push(c % s);
            c /= s;
        }
        let mut w = init[digits[0]];
        for t in 1..=k {
            w *= a.get(digits[t - 1], digits[t]) * kernel.prob(digits[t], obs[t - 1]);
            if w == 0.0 {
                break;
            }
        }
        if w > 0.0 {
            post[digits[k]] += w;
            total += w;
        }
    }
    if total <= 0.0 {
        return None;
    }
    for v in &mut post {
        *v /= total;
    }
    Some(post)
}

fn all_observation_sequences(s: usize, len: usize) -> Vec<Vec<Observation>> {
    let symbols: Vec<Observation> = (0..s).map(|c| Observation::from_column(c, s)).collect();
    let mut seqs = vec![Vec::new()];
    for _ in 0..len {
        let mut next = Vec::with_capacity(seqs.len() * s);
        for seq in &seqs {
            for &sym in &symbols {
                let mut e = seq.clone();
                e.push(sym);
                next.push(e);
            }
        }
        seqs = next;
    }
    seqs
}

fn check_all_sequences(
    init: Vec<f64>,
    model: &ChannelModel,
    kernel: &ObservationKernel,
    max_len: usize,
) {
    let s = model.state_count();
    let a = &model.transition;
    for len in 1..=max_len {
        for obs_seq in all_observation_sequences(s, len) {
            let want = path_enumeration_posterior(&init, a, kernel, &obs_seq);
            let mut belief = Ok(Belief::from_probs(init.clone()).unwrap());
            for &y in &obs_seq {
                belief = match belief {
                    Ok(b) => update(&b, a, kernel, y),
                    e @ Err(_) => e,
                };
                if belief.is_err() {
                    break;
                }
            }
            match (want, belief) {
                (Some(w), Ok(b)) => {
                    for (i, (&wv, &bv)) in w.iter().zip(b.probs()).enumerate() {
                        assert!(
                            (wv - bv).abs() < 1e-9,
                            "state {i} after {obs_seq:?}: filter {bv} vs oracle {wv}"
                        );
                    }
                }
                (None, Err(_)) => {} // both agree the sequence is impossible
                (w, b) => panic!("feasibility mismatch on {obs_seq:?}: oracle {w:?}, filter {b:?}"),
            }
        }
    }
}

#[test]
fn two_state_filter_matches_path_enumeration() {
    let a = TransitionMatrix::from_rows(&[&[0.9, 0.1], &[0.5, 0.5]]).unwrap();
    let model = ChannelModel::new(vec![1.0], vec![0.1], a, 1.0e6, 0.1).unwrap();
    let sensor = SensorDesign::new(0.4, 0.064).unwrap();
    let kernel = observation_kernel(&model, &sensor, 0.1).unwrap();
    check_all_sequences(vec![1.0, 0.0], &model, &kernel, 6);
    check_all_sequences(vec![0.3, 0.7], &model, &kernel, 6);
}

#[test]
fn three_state_filter_matches_path_enumeration() {
    let a =
        TransitionMatrix::from_rows(&[&[0.7, 0.2, 0.1], &[0.15, 0.75, 0.1], &[0.45, 0.45, 0.1]])
            .unwrap();
    let model = ChannelModel::new(vec![0.5, 1.5], vec![0.2, 0.1], a, 1.0e6, 0.1).unwrap();
    let sensor = SensorDesign::new(0.3, 0.064).unwrap();
    let kernel = observation_kernel(&model, &sensor, 0.5).unwrap();
    check_all_sequences(vec![1.0, 0.0, 0.0], &model, &kernel, 5);
    check_all_sequences(vec![0.2, 0.3, 0.5], &model, &kernel, 5);
}

#[test]
fn impossible_sequences_error_out() {
    // noiseless quantization: an acknowledgment for level 1 right after an
    // acknowledgment for level 0 is impossible when the chain cannot hop
    let a = TransitionMatrix::from_rows(&[&[0.9, 0.0, 0.1], &[0.0, 0.9, 0.1], &[0.5, 0.5, 0.0]])
        .unwrap();
    let model = ChannelModel::new(vec![0.5, 1.5], vec![0.2, 0.1], a, 1.0e6, 0.1).unwrap();
    let sensor = SensorDesign::new(0.3, 0.064).unwrap();
    let kernel = observation_kernel(&model, &sensor, 0.0).unwrap();
    let b = Belief::from_probs(vec![1.0, 0.0, 0.0]).unwrap();
    let b = update(&b, &model.transition, &kernel, Observation::GainLevel(0)).unwrap();
    assert!(update(&b, &model.transition, &kernel, Observation::GainLevel(1)).is_err());
}
