//! Acceptance suite: prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::hint::black_box;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use thermoml_core::activeinf::{fe_value_iteration, value_iteration, DiscreteMDP, GenerativeModel, RewardSign};
use thermoml_core::anneal::{anneal, AnnealConfig, CoolingSchedule};
use thermoml_core::bm::BoltzmannMachine;
use thermoml_core::boost::{boost3, boost_error_bound, threshold_dataset, NoisyThresholdLearner};
use thermoml_core::conv::{conv_fft, conv_naive};
use thermoml_core::digest::{brute_force_min_energy, DigestLandscape, DoubleDigestInstance};
use thermoml_core::info::{entropy_shannon, ib_objective, kl_divergence, mutual_information};
use thermoml_core::ising::{
    empirical_distribution, metropolis_chain, metropolis_transition_probability, partition_exact, Beta, ChainConfig,
    CouplingGraph, SpinConfig,
};
use thermoml_core::marl::{mf_actor_critic_grad, run_ising_game, GameConfig, IsingGameEnv, LearningRate, NeighborGraph};
use thermoml_core::meanfield::{mean_field_update, FactorizedPosterior, LogTable};
use thermoml_core::{DiscreteDistribution, JointDistribution, RngStream};

type Outcome = (bool, String);

fn spins(index: usize, n: usize) -> Vec<f64> {
    (0..n).map(|i| if index >> i & 1 == 1 { -1.0 } else { 1.0 }).collect()
}

fn ising_energy_oracle(s: &[f64], edges: &[(usize, usize, f64)], h: &[f64]) -> f64 {
    -edges.iter().map(|&(i, j, c)| c * s[i] * s[j]).sum::<f64>() - s.iter().zip(h).map(|(a, b)| a * b).sum::<f64>()
}

fn gibbs_oracle(n: usize, edges: &[(usize, usize, f64)], h: &[f64], beta: f64) -> Vec<f64> {
    let w: Vec<f64> = (0..1 << n).map(|k| (-beta * ising_energy_oracle(&spins(k, n), edges, h)).exp()).collect();
    let z: f64 = w.iter().sum();
    w.iter().map(|x| x / z).collect()
}

fn criterion_1() -> Outcome {
    let edges = [(0, 1, 1.0), (1, 2, 1.0)];
    let oracle = gibbs_oracle(3, &edges, &[0.0; 3], 1.0);
    let graph = CouplingGraph::chain(3, 1.0, 0.0).unwrap();
    let beta = Beta::new(1.0).unwrap();
    let (_, exact) = partition_exact(&graph, beta).unwrap();
    let exact_gap = exact.probs().iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let start = Instant::now();
    let cfg = ChainConfig {
        steps: 1_100_000,
        burn_in: 100_000,
        thin: 1,
    };
    let run = metropolis_chain(&graph, beta, cfg, &mut RngStream::new(20_240_601, 0), None).unwrap();
    let empirical = empirical_distribution(&run.samples, 3).unwrap();
    let elapsed = start.elapsed();
    let tv = 0.5 * empirical.probs().iter().zip(exact.probs()).map(|(a, b)| (a - b).abs()).sum::<f64>();
    let pass = tv < 0.01 && elapsed < Duration::from_secs(10) && exact_gap < 1e-12 && run.samples.len() == 1_000_000;
    (
        pass,
        format!(
            "TV = {tv:.5} (< 0.01) over {} samples, exact vs oracle {exact_gap:.1e}, {:.2}s (< 10s)",
            run.samples.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2() -> Outcome {
    let n = 4;
    let edges: Vec<(usize, usize, f64)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j, 1.0))).collect();
    let graph = CouplingGraph::complete(n, 1.0, 0.0).unwrap();
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    for beta in [0.5, 1.0, 2.0] {
        let pi = gibbs_oracle(n, &edges, &[0.0; 4], beta);
        let b = Beta::new(beta).unwrap();
        for a in 0..1usize << n {
            for site in 0..n {
                let c = a ^ (1 << site);
                let sa = SpinConfig::from_index(a, n);
                let sc = SpinConfig::from_index(c, n);
                let forward = pi[a] * metropolis_transition_probability(&sa, &sc, &graph, b).unwrap();
                let backward = pi[c] * metropolis_transition_probability(&sc, &sa, &graph, b).unwrap();
                worst = worst.max((forward - backward).abs());
                pairs += 1;
            }
        }
    }
    (worst <= 1e-12, format!("max |π(a)P(a→b) − π(b)P(b→a)| = {worst:.2e} (<= 1e-12) over {pairs} ordered pairs"))
}

fn time_per_call(f: &dyn Fn()) -> f64 {
    let mut best = f64::INFINITY;
    for _ in 0..5 {
        let mut reps = 0u32;
        let start = Instant::now();
        while reps == 0 || start.elapsed() < Duration::from_millis(30) {
            f();
            reps += 1;
        }
        best = best.min(start.elapsed().as_secs_f64() / reps as f64);
    }
    best
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut rng = RngStream::new(314, 0);
    let max_n = 1usize << 14;
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let (la, lb) = if i == 0 { (max_n, max_n) } else { (1 + rng.below(max_n), 1 + rng.below(max_n)) };
        let a: Vec<f64> = (0..la).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
        let b: Vec<f64> = (0..lb).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
        let fast = conv_fft(&a, &b).unwrap();
        let slow = conv_naive(&a, &b).unwrap();
        assert_eq!(fast.len(), slow.len());
        worst = fast.iter().zip(&slow).map(|(x, y)| (x - y).abs()).fold(worst, f64::max);
    }

    let sizes = [1usize << 12, 1 << 13, 1 << 14, 1 << 15];
    let mut fft_t = Vec::new();
    let mut naive_t = Vec::new();
    for &n in &sizes {
        let a: Vec<f64> = (0..n).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
        fft_t.push(time_per_call(&|| {
            black_box(conv_fft(black_box(&a), black_box(&b)).unwrap());
        }));
        naive_t.push(time_per_call(&|| {
            black_box(conv_naive(black_box(&a), black_box(&b)).unwrap());
        }));
    }
    let mean_ratio = |t: &[f64]| t.windows(2).map(|w| w[1] / w[0]).sum::<f64>() / 3.0;
    let (rf, rn) = (mean_ratio(&fft_t), mean_ratio(&naive_t));
    let elapsed = start.elapsed();
    let pass = worst <= 1e-9 && rf <= 2.6 && rn >= 3.5 && elapsed < Duration::from_secs(60);
    (
        pass,
        format!(
            "max |fft − naive| = {worst:.2e} (<= 1e-9), mean t(2n)/t(n): fft {rf:.3} (<= 2.6), naive {rn:.3} (>= 3.5), {:.1}s (< 60s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut rng = RngStream::new(4242, 0);
    let schedule = CoolingSchedule::Geometric { t0: 5.0, ratio: 0.995 };
    let cfg = AnnealConfig {
        sweeps: 1000,
        proposals_per_sweep: 100,
    };
    let (mut solved, mut attainable) = (0, 0);
    for k in 0..50u64 {
        let n_a = 2 + rng.below(5);
        let n_b = 2 + rng.below(5);
        let (instance, _) = DoubleDigestInstance::random(60, n_a, n_b, &mut rng).unwrap();
        let (min, _) = brute_force_min_energy(&instance, true);
        attainable += (min == 0.0) as usize;
        let res = anneal(&DigestLandscape { instance: &instance }, &schedule, cfg, &mut RngStream::new(4242, k + 1)).unwrap();
        solved += (res.best_energy == 0.0) as usize;
    }
    let elapsed = start.elapsed();
    let pass = solved * 100 >= 95 * 50 && attainable == 50 && elapsed < Duration::from_secs(120);
    (
        pass,
        format!(
            "energy 0 reached on {solved}/50 (>= 95%), brute force attains 0 on {attainable}/50, {:.1}s (< 120s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_5() -> Outcome {
    let oracle = |g: f64| {
        let e = 0.5 - g;
        3.0 * e * e - 2.0 * e * e * e
    };
    let mut worst: f64 = 0.0;
    for (g, stated) in [(0.0, 0.5), (0.1, 0.352), (0.5, 0.0)] {
        let b = boost_error_bound(g).unwrap();
        worst = worst.max((b - stated).abs()).max((b - oracle(g)).abs());
    }
    let learner = NoisyThresholdLearner::new(0.5, 0.1).unwrap();
    let mut good = 0;
    let mut errs = Vec::new();
    for seed in 0..20 {
        let mut rng = RngStream::new(seed, 0);
        let data = threshold_dataset(10_000, 0.5, &mut rng).unwrap();
        let (_, diag) = boost3(&learner, &data, &mut rng).unwrap();
        good += (diag.final_err <= 0.402) as usize;
        errs.push(diag.final_err);
    }
    let max_err = errs.iter().copied().fold(0.0, f64::max);
    (
        worst <= 1e-12 && good >= 18,
        format!("bound error {worst:.1e} (<= 1e-12), final error <= 0.402 on {good}/20 seeds (>= 18), worst {max_err:.4}"),
    )
}

fn bm_nll_oracle(p: &[f64], nv: usize, nh: usize, data: &[Vec<u8>]) -> f64 {
    let (a, rest) = p.split_at(nv);
    let (b, w) = rest.split_at(nh);
    let neg_energy = |v: &[f64], h: &[f64]| {
        let mut s: f64 = a.iter().zip(v).map(|(x, y)| x * y).sum::<f64>() + b.iter().zip(h).map(|(x, y)| x * y).sum::<f64>();
        for i in 0..nv {
            for j in 0..nh {
                s += v[i] * w[i * nh + j] * h[j];
            }
        }
        s
    };
    let bits = |k: usize, n: usize| (0..n).map(|i| (k >> i & 1) as f64).collect::<Vec<_>>();
    let marginal = |v: &[f64]| (0..1 << nh).map(|k| neg_energy(v, &bits(k, nh)).exp()).sum::<f64>();
    let z: f64 = (0..1 << nv).map(|k| marginal(&bits(k, nv))).sum();
    let ll: f64 = data
        .iter()
        .map(|v| {
            let v: Vec<f64> = v.iter().map(|&x| x as f64).collect();
            marginal(&v).ln() - z.ln()
        })
        .sum();
    -ll / data.len() as f64
}

fn rel_err(g: &[f64], fd: &[f64]) -> f64 {
    let diff = g.iter().zip(fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let norm = fd.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / norm.max(1e-300)
}

fn criterion_6() -> Outcome {
    let (nv, nh) = (2, 2);
    let data = vec![vec![1, 0], vec![1, 1], vec![0, 1], vec![1, 0]];
    let mut rng = RngStream::new(66, 0);
    let mut worst_bm: f64 = 0.0;
    let step = 1e-5;
    for _ in 0..20 {
        let m = BoltzmannMachine::random(nv, nh, 1.0, &mut rng);
        let g = m.nll_gradient(&data).unwrap().flatten();
        let p = m.parameters();
        let fd: Vec<f64> = (0..p.len())
            .map(|k| {
                let mut up = p.clone();
                let mut down = p.clone();
                up[k] += step;
                down[k] -= step;
                (bm_nll_oracle(&up, nv, nh, &data) - bm_nll_oracle(&down, nv, nh, &data)) / (2.0 * step)
            })
            .collect();
        worst_bm = worst_bm.max(rel_err(&g, &fd));
    }

    let objective = |logits: &[f64], a: usize, q: f64| {
        let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + logits.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
        q * (logits[a] - lse)
    };
    let mut worst_ac: f64 = 0.0;
    for _ in 0..20 {
        let n = 2 + rng.below(4);
        let logits: Vec<f64> = (0..n).map(|_| rng.uniform_range(-2.0, 2.0)).collect();
        let a = rng.below(n);
        let q = rng.uniform_range(-3.0, 3.0);
        let g = mf_actor_critic_grad(&logits, a, q).unwrap();
        let fd: Vec<f64> = (0..n)
            .map(|k| {
                let mut up = logits.clone();
                let mut down = logits.clone();
                up[k] += step;
                down[k] -= step;
                (objective(&up, a, q) - objective(&down, a, q)) / (2.0 * step)
            })
            .collect();
        worst_ac = worst_ac.max(rel_err(&g, &fd));
    }
    (
        worst_bm < 1e-5 && worst_ac < 1e-6,
        format!("BM gradient rel. error {worst_bm:.2e} (< 1e-5), actor-critic rel. error {worst_ac:.2e} (< 1e-6)"),
    )
}

/// Best value over all deterministic policies of a two-state MDP, each
/// solved as a 2×2 linear system.
fn policy_enumeration(t: &[Vec<Vec<f64>>], r: &[Vec<f64>], gamma: f64) -> [f64; 2] {
    let n_actions = r[0].len();
    let mut best = [f64::NEG_INFINITY; 2];
    for a0 in 0..n_actions {
        for a1 in 0..n_actions {
            let acts = [a0, a1];
            let m = |s: usize, s2: usize| (s == s2) as u8 as f64 - gamma * t[s][acts[s]][s2];
            let rhs = [r[0][a0], r[1][a1]];
            let det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
            let v0 = (rhs[0] * m(1, 1) - m(0, 1) * rhs[1]) / det;
            let v1 = (m(0, 0) * rhs[1] - m(1, 0) * rhs[0]) / det;
            best[0] = best[0].max(v0);
            best[1] = best[1].max(v1);
        }
    }
    best
}

fn criterion_7() -> Outcome {
    let gamma = 0.9;
    // action 0 stays, action 1 moves; only state 1 pays
    let t = vec![
        vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        vec![vec![0.0, 1.0], vec![1.0, 0.0]],
    ];
    let r = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
    let mdp = DiscreteMDP::new(t.clone(), r.clone(), gamma).unwrap();
    let rep = value_iteration(&mdp, 1e-12).unwrap();
    let exact = policy_enumeration(&t, &r, gamma);
    let gap = rep.values.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let ratio = rep.diffs.windows(2).filter(|w| w[0] > 0.0).map(|w| w[1] / w[0]).fold(0.0, f64::max);

    let likelihood = vec![vec![0.8, 0.2], vec![0.3, 0.7]];
    let transition = vec![
        vec![vec![0.9, 0.1], vec![0.2, 0.8]],
        vec![vec![0.5, 0.5], vec![0.6, 0.4]],
    ];
    let reward = vec![vec![1.0, -0.5], vec![0.2, 2.0]];
    let prior = DiscreteDistribution::new(vec![0.5, 0.5]).unwrap();
    let model = GenerativeModel::new(prior, likelihood.clone(), transition.clone(), reward.clone(), RewardSign::AsGiven).unwrap();
    let tol = 1e-10;
    let fe = fe_value_iteration(&model, gamma, tol).unwrap();
    let cost = |s: usize, a: usize| {
        let expected: f64 = (0..2).map(|o| likelihood[s][o] * reward[s][o]).sum();
        let entropy: f64 = transition[a][s].iter().filter(|&&q| q > 0.0).map(|&q| -q * q.ln()).sum();
        expected + entropy
    };
    let residual = (0..2)
        .map(|s| {
            let backup = (0..2)
                .map(|a| cost(s, a) + gamma * (0..2).map(|s2| transition[a][s][s2] * fe.values[s2]).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            (backup - fe.values[s]).abs()
        })
        .fold(0.0, f64::max);
    (
        gap <= 1e-8 && ratio <= gamma + 1e-9 && residual < tol,
        format!(
            "|V − V_enum| = {gap:.2e} (<= 1e-8), max sweep ratio {ratio:.9} (<= {}), free-energy residual {residual:.2e} (< {tol:e})",
            gamma + 1e-9
        ),
    )
}

fn criterion_8() -> Outcome {
    let p = [0.4, 0.1, 0.1, 0.4];
    let table = LogTable::from_probabilities(vec![2, 2], &p).unwrap();
    let start = FactorizedPosterior::new(vec![
        DiscreteDistribution::new(vec![0.7, 0.3]).unwrap(),
        DiscreteDistribution::new(vec![0.45, 0.55]).unwrap(),
    ]);
    let run = mean_field_update(&start, &table, 200).unwrap();
    let kl = *run.kl_history.last().unwrap();
    let kl_of = |x: f64, y: f64| {
        let q = [x * y, x * (1.0 - y), (1.0 - x) * y, (1.0 - x) * (1.0 - y)];
        q.iter().zip(&p).filter(|(qi, _)| **qi > 0.0).map(|(qi, pi)| qi * (qi / pi).ln()).sum::<f64>()
    };
    let mut grid_min = f64::INFINITY;
    for i in 0..=1000 {
        for j in 0..=1000 {
            grid_min = grid_min.min(kl_of(i as f64 / 1000.0, j as f64 / 1000.0));
        }
    }
    let increases = run.kl_history.windows(2).filter(|w| w[1] > w[0] + 1e-12).count();
    let largest = run.kl_history.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    (
        (kl - grid_min).abs() <= 1e-4 && increases == 0 && kl > 0.0,
        format!(
            "converged KL {kl:.6} vs grid minimum {grid_min:.6} (gap {:.1e} <= 1e-4), {increases} of {} sweeps increase KL by more than 1e-12 (largest step {largest:.1e})",
            (kl - grid_min).abs(),
            run.kl_history.len() - 1
        ),
    )
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let env = IsingGameEnv::new(NeighborGraph::torus(4).unwrap(), 1.0).unwrap();
    let cfg = GameConfig {
        episodes: 500,
        steps_per_episode: 10,
        learning_rate: LearningRate::Constant(0.1),
        gamma: 0.9,
        schedule: CoolingSchedule::geometric_between(10.0, 0.1, 500).unwrap(),
        bins: GameConfig::DEFAULT_BINS,
    };
    let mut ordered = 0;
    let mut finals = Vec::new();
    for seed in 0..10 {
        let run = run_ising_game(&env, &cfg, &mut RngStream::new(seed, 9)).unwrap();
        let m = run.magnetization.last().unwrap().abs();
        ordered += (m > 0.9) as usize;
        finals.push(format!("{m:.3}"));
    }
    let elapsed = start.elapsed();
    (
        ordered >= 8 && elapsed < Duration::from_secs(120),
        format!(
            "|m| > 0.9 on {ordered}/10 seeds (>= 8) [{}], {:.1}s (< 120s)",
            finals.join(" "),
            elapsed.as_secs_f64()
        ),
    )
}

fn random_probs(rng: &mut RngStream, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| if rng.bernoulli(0.1) { 0.0 } else { rng.uniform() + 1e-3 }).collect();
    let s: f64 = w.iter().sum();
    if s == 0.0 {
        return vec![1.0 / n as f64; n];
    }
    w.iter().map(|x| x / s).collect()
}

fn h_nats(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

fn criterion_10() -> Outcome {
    let mut rng = RngStream::new(1010, 0);
    let (mut max_ok, mut kl_ok, mut mi_ok, mut ib_ok) = (0, 0, 0, 0);
    let mut worst_mi: f64 = 0.0;
    let trials = 1000;
    for _ in 0..trials {
        let n = 2 + rng.below(9);
        let p = DiscreteDistribution::new(random_probs(&mut rng, n)).unwrap();
        max_ok += (entropy_shannon(&p, 2.0).unwrap() <= (n as f64).log2() + 1e-12) as usize;

        let q_probs: Vec<f64> = {
            let w: Vec<f64> = (0..n).map(|_| rng.uniform() + 1e-3).collect();
            let s: f64 = w.iter().sum();
            w.iter().map(|x| x / s).collect()
        };
        let q = DiscreteDistribution::new(q_probs).unwrap();
        kl_ok += (kl_divergence(&p, &q).unwrap() >= 0.0) as usize;

        let (rows, cols) = (2 + rng.below(4), 2 + rng.below(4));
        let flat = random_probs(&mut rng, rows * cols);
        let joint = JointDistribution::new(rows, cols, flat.clone()).unwrap();
        let px: Vec<f64> = (0..rows).map(|r| flat[r * cols..(r + 1) * cols].iter().sum()).collect();
        let py: Vec<f64> = (0..cols).map(|c| (0..rows).map(|r| flat[r * cols + c]).sum()).collect();
        let via_entropies = h_nats(&px) + h_nats(&py) - h_nats(&flat);
        let via_kl: f64 = (0..rows)
            .flat_map(|r| (0..cols).map(move |c| (r, c)))
            .filter(|&(r, c)| flat[r * cols + c] > 0.0)
            .map(|(r, c)| {
                let pxy = flat[r * cols + c];
                pxy * (pxy / (px[r] * py[c])).ln()
            })
            .sum();
        let mi = mutual_information(&joint);
        let gap = (mi - via_entropies).abs().max((mi - via_kl).abs());
        worst_mi = worst_mi.max(gap);
        mi_ok += (gap <= 1e-10) as usize;

        let t = 2 + rng.below(3);
        let xt = JointDistribution::new(rows, t, random_probs(&mut rng, rows * t)).unwrap();
        let ty = JointDistribution::new(t, cols, random_probs(&mut rng, t * cols)).unwrap();
        ib_ok += ((ib_objective(&xt, &ty, 0.0).unwrap() - mutual_information(&xt)).abs() <= 1e-15) as usize;
    }
    let all = [max_ok, kl_ok, mi_ok, ib_ok].iter().all(|&c| c == trials);
    (
        all,
        format!(
            "over {trials} draws: H <= log n {max_ok}, KL >= 0 {kl_ok}, MI formulas agree {mi_ok} (worst {worst_mi:.1e}), IB(β=0) = I(X;T) {ib_ok}"
        ),
    )
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn thermoml(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_thermoml"))
        .args(args)
        .output()
        .expect("binary runs")
        .status
        .code()
        .unwrap_or(-1)
}

fn dir_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

fn criterion_11() -> Outcome {
    let samples = [
        ("entropy", "entropy.toml", "csv"),
        ("ising", "ising.toml", "csv"),
        ("anneal", "anneal.toml", "json"),
        ("digest", "digest.toml", "csv"),
        ("ebm", "ebm_losses.toml", "json"),
        ("ebm", "ebm_train.toml", "csv"),
        ("conv", "conv.toml", "csv"),
        ("boost", "boost.toml", "csv"),
        ("activeinf", "activeinf.toml", "csv"),
        ("activeinf", "free_energy.toml", "json"),
        ("marl", "marl.toml", "csv"),
    ];
    let tmp = tempfile::tempdir().unwrap();
    let mut identical = 0;
    let mut problems = Vec::new();
    for (k, (sub, file, format)) in samples.iter().enumerate() {
        let first = tmp.path().join(format!("{k}-first"));
        let replayed = tmp.path().join(format!("{k}-replay"));
        let cfg = configs().join(file);
        let code = thermoml(&[sub, "--config", cfg.to_str().unwrap(), "--seed", "11", "--out", first.to_str().unwrap(), "--format", format]);
        let before = dir_files(&first);
        let same_dir = thermoml(&[sub, "--config", cfg.to_str().unwrap(), "--seed", "11", "--out", first.to_str().unwrap(), "--format", format]);
        let manifest = first.join("manifest.json");
        let replay = thermoml(&["replay", "--manifest", manifest.to_str().unwrap(), "--out", replayed.to_str().unwrap()]);
        let mut after = dir_files(&replayed);
        // the manifest records its own output directory; everything else must match
        let strip = |files: &mut Vec<(String, Vec<u8>)>| files.retain(|(n, _)| n != "manifest.json");
        let rerun_same = before == dir_files(&first);
        let mut before_artifacts = before.clone();
        strip(&mut before_artifacts);
        strip(&mut after);
        if code == 0 && same_dir == 0 && replay == 0 && rerun_same && before_artifacts == after && !after.is_empty() {
            identical += 1;
        } else {
            problems.push(format!("{file} (exit {code}/{same_dir}/{replay})"));
        }
    }
    (
        identical == samples.len(),
        format!(
            "{identical}/{} manifests re-run byte-identically (all files incl. manifest in place, all artifacts via replay){}",
            samples.len(),
            if problems.is_empty() { String::new() } else { format!("; differing: {}", problems.join(", ")) }
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("exact-vs-sampled Gibbs", criterion_1),
        ("detailed balance", criterion_2),
        ("FFT correctness and scaling", criterion_3),
        ("double digest annealing", criterion_4),
        ("boosting bound", criterion_5),
        ("gradient oracles", criterion_6),
        ("value iteration", criterion_7),
        ("mean-field VI", criterion_8),
        ("MF-MARL Ising game", criterion_9),
        ("information-theory suite", criterion_10),
        ("reproducibility", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (pass, detail) = match catch_unwind(AssertUnwindSafe(check)) {
            Ok(outcome) => outcome,
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        failed += !pass as usize;
        println!("{} criterion {:>2} ({name}): {detail}", if pass { "PASS" } else { "FAIL" }, i + 1);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
