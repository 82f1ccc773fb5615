//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use antijam::env::{step, Action, EnvConfig, EnvError, State};
use antijam::nn::{Mlp, Sample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `(next buffer, next energy, delivered, dropped)` computed from the slot
/// rules with signed arithmetic and explicit clamps.
pub fn reference_step(
    cfg: &EnvConfig,
    jammed: bool,
    d: i64,
    e: i64,
    action: usize,
    level: usize,
    arrivals: i64,
) -> (i64, i64, i64, i64) {
    let cost = cfg.at_cost_per_packet as i64;
    let dt = cfg.dt_hat as i64;
    let at_packets = if cost == 0 { d.min(dt) } else { d.min(dt).min(e / cost) };
    let (mut delivered, mut de) = (0i64, 0i64);
    match (action, jammed) {
        (1, false) => {
            delivered = at_packets;
            de = -at_packets * cost;
        }
        (1, true) if cfg.at_under_jamming_wastes_energy => de = -at_packets * cost,
        (2, true) => de = cfg.eh_table[level] as i64,
        (3, true) => delivered = d.min(cfg.ambc_table[level] as i64),
        (m, true) if m >= 4 => {
            let ra = cfg.ra[m - 4];
            if e >= ra.energy_cost as i64 {
                delivered = d.min(ra.packets as i64);
                de = -(ra.energy_cost as i64);
            }
        }
        _ => {}
    }
    let d_mid = d - delivered;
    let d_next = (d_mid + arrivals).min(cfg.d_max as i64);
    let dropped = d_mid + arrivals - d_next;
    let e_next = (e + de).clamp(0, cfg.e_max as i64);
    (d_next, e_next, delivered, dropped)
}

/// Exhaustive grid over states, actions, jamming levels and arrivals
/// `0..=d_max`. Returns the number of cases checked.
pub fn env_grid_check(cfg: &EnvConfig) -> Result<usize, String> {
    let space = cfg.state_space();
    let levels = cfg.num_levels();
    let mut cases = 0;
    for s in space.iter() {
        for a in 0..cfg.num_actions() {
            let action = cfg.action(a).map_err(|e| e.to_string())?;
            for level in 0..levels {
                for k in 0..=cfg.d_max {
                    cases += 1;
                    let next_level = (level + k as usize) % levels;
                    let res = step(cfg, &s, action, level, k, next_level);
                    if (level > 0) != s.jammed {
                        match res {
                            Err(EnvError::InconsistentJamLevel { .. }) => continue,
                            other => return Err(format!("{s:?} level {level}: expected rejection, got {other:?}")),
                        }
                    }
                    let o = res.map_err(|e| format!("{s:?} {action:?} level {level}: {e}"))?;
                    let (d, e) = (s.buffer as i64, s.energy as i64);
                    let (d2, e2, delivered, dropped) =
                        reference_step(cfg, s.jammed, d, e, a, level, k as i64);
                    let want = State::new(next_level > 0, d2 as u32, e2 as u32);
                    let ctx = || format!("{s:?} {} level {level} arrivals {k}", action.name());
                    if o.next != want || o.delivered as i64 != delivered || o.dropped as i64 != dropped {
                        return Err(format!("{}: got {o:?}, want {want:?} delivered {delivered} dropped {dropped}", ctx()));
                    }
                    if o.reward != o.delivered {
                        return Err(format!("{}: reward differs from delivered", ctx()));
                    }
                    if o.delivered as i64 + o.dropped as i64 + o.next.buffer as i64 - d != k as i64 {
                        return Err(format!("{}: packet conservation violated", ctx()));
                    }
                    if o.next.buffer > cfg.d_max || o.next.energy > cfg.e_max {
                        return Err(format!("{}: bounds violated", ctx()));
                    }
                    if e - o.energy_spent as i64 + o.energy_harvested as i64 != o.next.energy as i64 {
                        return Err(format!("{}: energy bookkeeping violated", ctx()));
                    }
                    if o.delivered > s.buffer {
                        return Err(format!("{}: delivered more than buffered", ctx()));
                    }
                }
            }
        }
    }
    // Impossible indices are rejected rather than clamped.
    let s = State::new(false, 0, 0);
    if step(cfg, &s, Action::Idle, levels, 0, 0).is_ok()
        || step(cfg, &State::new(false, cfg.d_max + 1, 0), Action::Idle, 0, 0, 0).is_ok()
        || step(cfg, &s, Action::RateAdapted(cfg.ra.len() as u8 + 1), 0, 0, 0).is_ok()
    {
        return Err("out-of-range inputs were accepted".into());
    }
    Ok(cases)
}

fn forward_reference(net: &Mlp<f64>, x: &[f64], pre: &mut Vec<f64>) -> Vec<f64> {
    let mut a = x.to_vec();
    let n = net.layers().len();
    for (li, layer) in net.layers().iter().enumerate() {
        let mut z = layer.biases.clone();
        for (i, ai) in a.iter().enumerate() {
            for (o, zo) in z.iter_mut().enumerate() {
                *zo += layer.weights[i * layer.outputs + o] * ai;
            }
        }
        if li + 1 < n {
            pre.extend(&z);
            a = z.iter().map(|v| v.max(0.0)).collect();
        } else {
            a = z;
        }
    }
    a
}

fn loss_reference(net: &Mlp<f64>, xs: &[Vec<f64>], actions: &[usize], targets: &[f64]) -> f64 {
    let mut pre = Vec::new();
    xs.iter()
        .zip(actions)
        .zip(targets)
        .map(|((x, a), y)| (forward_reference(net, x, &mut pre)[*a] - y).powi(2))
        .sum::<f64>()
        / xs.len() as f64
}

/// Largest relative error between analytic gradients and central finite
/// differences over `nets` random networks and batches.
pub fn gradient_check(nets: usize, seed: u64, h: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut built = 0;
    while built < nets {
        let depth = rng.random_range(1..=3);
        let mut sizes = vec![rng.random_range(1..=4)];
        for _ in 0..depth {
            sizes.push(rng.random_range(1..=12));
        }
        sizes.push(rng.random_range(1..=6));
        let net = Mlp::<f64>::init(&sizes, &mut rng).unwrap();
        let batch = rng.random_range(1..=8);
        let xs: Vec<Vec<f64>> = (0..batch)
            .map(|_| (0..sizes[0]).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let actions: Vec<usize> = (0..batch).map(|_| rng.random_range(0..*sizes.last().unwrap())).collect();
        let targets: Vec<f64> = (0..batch).map(|_| rng.random_range(-2.0..2.0)).collect();

        // Keep every hidden pre-activation well away from the ReLU kink so the
        // finite difference never straddles it.
        let mut pre = Vec::new();
        for x in &xs {
            forward_reference(&net, x, &mut pre);
        }
        if pre.iter().any(|z| z.abs() < 1e-3) {
            continue;
        }
        built += 1;

        let samples: Vec<Sample<f64>> = xs
            .iter()
            .zip(&actions)
            .zip(&targets)
            .map(|((x, a), y)| Sample { features: x, action: *a, target: *y })
            .collect();
        let (loss, grad) = net.loss_and_gradient(&samples).unwrap();
        let ref_loss = loss_reference(&net, &xs, &actions, &targets);
        assert!((loss - ref_loss).abs() <= 1e-12 * ref_loss.abs().max(1.0));

        let analytic: Vec<f64> = grad.params().copied().collect();
        for (p, g) in analytic.iter().enumerate() {
            let mut plus = net.clone();
            *plus.params_mut().nth(p).unwrap() += h;
            let mut minus = net.clone();
            *minus.params_mut().nth(p).unwrap() -= h;
            let numeric = (loss_reference(&plus, &xs, &actions, &targets)
                - loss_reference(&minus, &xs, &actions, &targets))
                / (2.0 * h);
            let err = (g - numeric).abs() / g.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(err);
        }
    }
    worst
}
