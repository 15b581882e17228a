//! Acceptance suite. Runs every criterion, prints one line each, and exits
//! non-zero if any failed.

use std::path::PathBuf;
use std::time::Instant;

use dmimo_core::bdpt::{evaluate_multi_user, optimal_power_split, stationary_zeta};
use dmimo_core::candidates::CandidateId;
use dmimo_core::channel::{stacked_channel, Scenario};
use dmimo_core::harness::{interference_radius, interfering_area, training_frames_range};
use dmimo_core::linalg::CMat;
use dmimo_core::rates::{bd_precoders, bd_rate, mimo_capacity, rate_derivative, waterfill, Link};
use dmimo_core::scheme::decide;
use dmimo_core::selection::PriorityOrder;
use dmimo_core::tdma::{tdma_objective, time_shares};
use dmimo_core::{ChannelState, Scheme};
use dmimo_sim::config::ScenarioFile;
use dmimo_sim::runner::{RunOptions, Runner};
use dmimo_sim::sweep::{sweep, SweepRow};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BT: f64 = 1000.0;

type Outcome = Result<String, String>;

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

fn sorted_snrs(rng: &mut ChaCha8Rng, z: usize) -> Vec<f64> {
    let mut s: Vec<f64> = (0..z).map(|_| log_uniform(rng, 1e-2, 1e2)).collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

fn gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    // Box-Muller, unit total variance
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    let r = (-u1.ln()).sqrt();
    let a = std::f64::consts::TAU * u2;
    Complex64::new(r * a.cos(), r * a.sin())
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| gaussian(rng))
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let (fx, fa, fb) = (f(x), f(a.min(b)), f(a.max(b)));
    [(x, fx), (a, fa), (b, fb)].into_iter().fold((x, fx), |best, p| if p.1 < best.1 { p } else { best })
}

fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut css = 0.0;
    let mut tau = 0.0;
    for (i, &x) in u.iter().enumerate() {
        css += x;
        let t = (css - 1.0) / (i + 1) as f64;
        if x - t > 0.0 {
            tau = t;
        }
    }
    v.iter().map(|x| (x - tau).max(0.0)).collect()
}

/// `ln det(A)` of a Hermitian positive-definite matrix by Cholesky.
fn ln_det_hpd(a: &CMat) -> f64 {
    let n = a.rows();
    let mut l = CMat::zeros(n, n);
    let mut out = 0.0;
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        let d = d.sqrt();
        l[(j, j)] = Complex64::new(d, 0.0);
        out += 2.0 * d.ln();
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / d;
        }
    }
    out
}

fn c1_waterfill() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for case in 0..1000 {
        let z = rng.random_range(1..=6);
        let snrs = sorted_snrs(&mut rng, z);
        let p = log_uniform(&mut rng, 1e-2, 1e2);
        let w = waterfill(&snrs, p, BT).map_err(|e| e.to_string())?;
        // KKT
        let sum: f64 = w.powers.iter().sum();
        check((sum - p).abs() <= 1e-9 * p, format!("case {case}: sum of powers {sum} != {p}"))?;
        for (j, (&e, &r)) in snrs.iter().zip(&w.powers).enumerate() {
            check(r >= 0.0, format!("case {case}: negative power"))?;
            if r > 0.0 {
                check((1.0 / e + r - w.water_level).abs() <= 1e-9 * w.water_level, format!("case {case}: level on {j}"))?;
            } else {
                check(1.0 / e >= w.water_level * (1.0 - 1e-12), format!("case {case}: dry channel {j} below level"))?;
            }
        }
        check((w.closed_form_rate(BT) - w.rate).abs() <= 1e-9 * w.rate, format!("case {case}: closed form"))?;
        // pairwise exchange ascent with a 1-D search per pair
        let f = |rho: &[f64]| snrs.iter().zip(rho).map(|(e, r)| (e * r).ln_1p()).sum::<f64>();
        let mut rho = vec![p / z as f64; z];
        let mut best = f(&rho);
        for _ in 0..200 {
            let before = best;
            for i in 0..z {
                for j in i + 1..z {
                    let pool = rho[i] + rho[j];
                    let g = |t: f64| -((snrs[i] * t).ln_1p() + (snrs[j] * (pool - t)).ln_1p());
                    let (t, _) = golden_min(g, 0.0, pool, 90);
                    rho[i] = t;
                    rho[j] = pool - t;
                }
            }
            best = f(&rho);
            if best - before <= 1e-15 * best {
                break;
            }
        }
        let direct = BT * best;
        let rel = (w.rate - direct).abs() / direct;
        worst = worst.max(rel);
        check(rel <= 1e-6, format!("case {case}: rate {} vs direct {direct}", w.rate))?;
    }
    Ok(format!("1000 instances, worst relative gap {worst:.1e}"))
}

fn c2_bd_orthogonality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = 0.0f64;
    let mut singles = 0;
    let mut funded = 0;
    for case in 0..1000 {
        let kbs = rng.random_range(1..=4);
        let kmu = rng.random_range(1..=4);
        let tx: Vec<usize> = (0..kbs).map(|_| rng.random_range(1..=4)).collect();
        let rx: Vec<usize> = (0..kmu).map(|_| rng.random_range(1..=3)).collect();
        let mut blocks = Vec::new();
        for &n in &rx {
            for &m in &tx {
                let scale = log_uniform(&mut rng, 1e-2, 1e2).sqrt();
                let mut h = random_matrix(&mut rng, n, m);
                for c in 0..m {
                    h.col_mut(c).iter_mut().for_each(|x| *x *= scale);
                }
                blocks.push(h);
            }
        }
        let state = ChannelState::from_blocks(kbs, blocks, case);
        let bs_set: Vec<usize> = {
            let s: Vec<usize> = (0..kbs).filter(|_| rng.random_bool(0.6)).collect();
            if s.is_empty() { vec![0] } else { s }
        };
        let users: Vec<usize> = {
            let s: Vec<usize> = (0..kmu).filter(|_| rng.random_bool(0.6)).collect();
            if s.is_empty() { vec![rng.random_range(0..kmu)] } else { s }
        };
        let set = bd_precoders(&state, &bs_set, &users).map_err(|e| e.to_string())?;
        for p in &set.precoders {
            let Some(g) = &p.precoder else { continue };
            funded += 1;
            for &i in users.iter().filter(|&&i| i != p.user) {
                let hi = stacked_channel(&state, &bs_set, i).map_err(|e| e.to_string())?;
                let leak = hi.mul(g).frobenius_sq().sqrt();
                let scale = hi.frobenius_sq().sqrt().max(1.0);
                worst = worst.max(leak / scale);
                check(leak <= 1e-9 * scale, format!("case {case}: leakage {leak:e} into user {i}"))?;
            }
        }
        if users.len() == 1 {
            singles += 1;
            let h = stacked_channel(&state, &bs_set, users[0]).map_err(|e| e.to_string())?;
            let power = log_uniform(&mut rng, 1e-2, 1e2);
            let r = bd_rate(&set.precoders[0], power, BT).map_err(|e| e.to_string())?;
            let cap = mimo_capacity(&h, power, BT).map_err(|e| e.to_string())?;
            // log-det of I + H Xi H^H with the water-filled covariance
            let link = Link::from_channel(&h);
            let wf = link.waterfill(power, BT).ok_or("dead link")?;
            let d = &link.directions;
            let xi = CMat::from_fn(d.rows(), d.rows(), |a, b| {
                (0..d.cols()).map(|z| d[(a, z)] * d[(b, z)].conj() * wf.powers[z]).sum()
            });
            let mut cov = h.mul(&xi).mul(&h.adjoint());
            for k in 0..cov.rows() {
                cov[(k, k)] += 1.0;
            }
            let logdet = BT * ln_det_hpd(&cov);
            check((r - cap).abs() <= 1e-9 * cap, format!("case {case}: singleton rate {r} vs capacity {cap}"))?;
            check((cap - logdet).abs() <= 1e-9 * cap, format!("case {case}: capacity {cap} vs log det {logdet}"))?;
            if h.rows() == 1 {
                let closed = BT * (power * h.frobenius_sq()).ln_1p();
                check((cap - closed).abs() <= 1e-9 * cap, format!("case {case}: MISO capacity {cap} vs {closed}"))?;
            }
        }
    }
    Ok(format!("1000 instances ({funded} precoders, {singles} singleton sets), worst leakage {worst:.1e}"))
}

fn c3_derivative() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst = 0.0f64;
    for case in 0..200 {
        let z = rng.random_range(1..=6);
        let snrs = sorted_snrs(&mut rng, z);
        let p = log_uniform(&mut rng, 1e-2, 1e2);
        let w = waterfill(&snrs, p, BT).map_err(|e| e.to_string())?;
        let h = 1e-4 * p;
        let up = waterfill(&snrs, p + h, BT).map_err(|e| e.to_string())?.rate;
        let down = waterfill(&snrs, p - h, BT).map_err(|e| e.to_string())?.rate;
        let fd = (up - down) / (2.0 * h);
        let an = rate_derivative(&w, BT);
        let rel = (fd - an).abs() / an;
        worst = worst.max(rel);
        check(rel <= 1e-5, format!("case {case}: BT/mu {an} vs finite difference {fd}"))?;
    }
    Ok(format!("200 instances, worst relative gap {worst:.1e}"))
}

fn diag_link(snrs: Vec<f64>) -> Link {
    let z = snrs.len();
    Link { snrs, directions: CMat::identity(z) }
}

fn c4_power_split() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let (mut worst_obj, mut worst_stat) = (0.0f64, 0.0f64);
    for case in 0..200 {
        let links: Vec<Link> = (0..2)
            .map(|_| {
                let z = rng.random_range(1..=3);
                diag_link(sorted_snrs(&mut rng, z))
            })
            .collect();
        let lambda: Vec<f64> = (0..2).map(|_| log_uniform(&mut rng, 0.1, 100.0)).collect();
        let theta: Vec<f64> = (0..2).map(|_| log_uniform(&mut rng, 5e-5, 5e-3)).collect();
        let p = log_uniform(&mut rng, 1e-1, 1e2);
        let refs: Vec<Option<&Link>> = links.iter().map(Some).collect();
        let split = optimal_power_split(&refs, &lambda, &theta, p, BT).map_err(|e| e.to_string())?;
        let obj = |p1: f64| {
            lambda[0] * (-theta[0] * links[0].rate(p1, BT)).exp()
                + lambda[1] * (-theta[1] * links[1].rate((p - p1).max(0.0), BT)).exp()
        };
        let got: f64 = (0..2).map(|n| lambda[n] * (-theta[n] * split.users[n].rate).exp()).sum();
        let (_, brute) = golden_min(obj, 0.0, p, 200);
        let gap = got - brute;
        worst_obj = worst_obj.max(gap);
        check(gap <= 1e-4, format!("case {case}: objective {got} vs golden-section {brute}"))?;
        check((split.total_power() - p).abs() <= 1e-9 * p, format!("case {case}: budget not spent"))?;
        for (n, u) in split.users.iter().enumerate() {
            if u.power > 0.0 {
                let z = stationary_zeta(BT, lambda[n], theta[n], u.water_level, u.rate);
                let rel = (z - split.zeta).abs() / split.zeta;
                worst_stat = worst_stat.max(rel);
                check(rel <= 1e-6, format!("case {case}: user {n} stationarity {z} vs zeta {}", split.zeta))?;
            }
        }
    }
    Ok(format!("200 instances, worst excess {worst_obj:.1e}, worst stationarity gap {worst_stat:.1e}"))
}

fn c5_time_shares() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst = 0.0f64;
    for case in 0..200 {
        let k = rng.random_range(1..=3);
        let rates: Vec<f64> = (0..k).map(|_| log_uniform(&mut rng, 10.0, 5000.0)).collect();
        let lambda: Vec<f64> = (0..k).map(|_| log_uniform(&mut rng, 0.1, 10.0)).collect();
        let theta: Vec<f64> = (0..k).map(|n| log_uniform(&mut rng, 0.1, 10.0) / rates[n]).collect();
        let ts = time_shares(&rates, &lambda, &theta);
        let sum: f64 = ts.shares.iter().sum();
        check((sum - 1.0).abs() <= 1e-9, format!("case {case}: shares sum to {sum}"))?;
        let got = tdma_objective(&rates, &ts.shares, &lambda, &theta);
        // projected gradient on the simplex
        let lip = (0..k).map(|n| lambda[n] * (theta[n] * rates[n]).powi(2)).fold(0.0, f64::max);
        let mut t = vec![1.0 / k as f64; k];
        for _ in 0..20_000 {
            let step: Vec<f64> = (0..k)
                .map(|n| t[n] + lambda[n] * theta[n] * rates[n] * (-theta[n] * t[n] * rates[n]).exp() / lip)
                .collect();
            t = project_simplex(&step);
        }
        let pg = tdma_objective(&rates, &t, &lambda, &theta);
        let gap = got - pg;
        worst = worst.max(gap);
        check(gap <= 1e-5, format!("case {case}: objective {got} vs projected gradient {pg}"))?;
    }
    Ok(format!("200 instances, worst excess {worst:.1e}"))
}

fn c6_mode_choice() -> Outcome {
    let file = ScenarioFile::load(&scenario_path("default.toml")).map_err(|e| e.to_string())?;
    let scenario = file.scenario().map_err(|e| e.to_string())?;
    let qos = scenario.user_qos().map_err(|e| e.to_string())?;
    let (kbs, kmu) = (scenario.num_bs(), scenario.num_users());
    let priority = PriorityOrder { order: vec![2, 0, 1], fractions: vec![0.33, 0.30, 0.34] };
    let lambdas = [[11.0, 8.6, 11.9], [47.0, 43.0, 48.0], [0.5, 200.0, 3.0]];
    let mut counts = Vec::new();
    for scheme in Scheme::ALL {
        let frames = training_frames_range(&scenario, scheme, &priority, 77, 0..10_000).map_err(|e| e.to_string())?;
        let mut checked = 0;
        for (f, cands) in frames.iter().enumerate() {
            let lambda = &lambdas[f % lambdas.len()];
            let d = decide(scheme, cands, lambda, &qos, BT).map_err(|e| e.to_string())?;
            // recompute every candidate score independently
            let mut scores: Vec<(CandidateId, f64)> = vec![(CandidateId::Silence, lambda.iter().sum())];
            match scheme {
                Scheme::Tdma => {
                    let theta: Vec<f64> = qos.iter().map(|q| q.theta).collect();
                    for c in &cands.tdma {
                        let rates = c.rates();
                        let ts = time_shares(&rates, lambda, &theta);
                        scores.push((CandidateId::Tdma { l: c.l }, c.l as f64 + tdma_objective(&rates, &ts.shares, lambda, &theta)));
                    }
                }
                _ => {
                    if scheme == Scheme::BdPt {
                        for c in &cands.multi_user {
                            let e = evaluate_multi_user(c, lambda, &qos, BT).map_err(|e| e.to_string())?;
                            scores.push((e.id, e.score));
                        }
                    }
                    for c in &cands.single_user {
                        let l = c.mode.cardinality();
                        let r = c.link.rate(scenario.total_power(l), BT);
                        let others: f64 = (0..kmu).filter(|&j| j != c.user).map(|j| lambda[j]).sum();
                        let s = l as f64 + lambda[c.user] * (-qos[c.user].theta * r).exp() + others;
                        scores.push((CandidateId::SingleUser { l, user: c.user }, s));
                    }
                }
            }
            check(scores.len() <= 1 + kbs + kbs * kmu, format!("{scheme} frame {f}: {} candidates", scores.len()))?;
            check(scores.len() == d.scores.len(), format!("{scheme} frame {f}: candidate count mismatch"))?;
            let min = scores.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
            check((d.score - min).abs() <= 1e-12 * min.abs().max(1.0), format!("{scheme} frame {f}: chose {} over min {min}", d.score))?;
            let chosen = scores.iter().find(|s| s.0 == d.id).ok_or(format!("{scheme} frame {f}: chosen mode not a candidate"))?;
            check((chosen.1 - min).abs() <= 1e-12 * min.abs().max(1.0), format!("{scheme} frame {f}: chosen mode not minimal"))?;
            checked += 1;
        }
        counts.push(format!("{scheme} {checked}"));
    }
    Ok(format!("frames checked: {}", counts.join(", ")))
}

fn c7_convergence() -> Outcome {
    let file = ScenarioFile::load(&scenario_path("default.toml")).map_err(|e| e.to_string())?;
    let scenario = file.scenario().map_err(|e| e.to_string())?;
    let options = RunOptions { train_frames: 4000, eval_frames: 20_000, area: None, ..RunOptions::default() };
    let runner = Runner::new(options).map_err(|e| e.to_string())?;
    let (priority, _) = runner.priority(&scenario).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    for scheme in Scheme::ALL {
        let state = runner.train(&scenario, scheme, &priority).map_err(|e| e.to_string())?;
        check(state.status == dmimo_core::TrainStatus::Converged, format!("{scheme}: training ended {:?}", state.status))?;
        let policy = dmimo_core::harness::Policy { scheme, lambda: state.lambda.clone(), priority: priority.clone() };
        let m = runner.evaluate(&scenario, &policy).map_err(|e| e.to_string())?;
        let s = m.max_slack();
        check(s <= 1e-2, format!("{scheme}: out-of-sample slack {s:.3e}"))?;
        parts.push(format!("{scheme} {} iters, slack {s:.1e}", state.iterations));
    }
    Ok(parts.join("; "))
}

fn sweep_rows(name: &str, param: &str, values: &[f64], schemes: &[Scheme], area: bool) -> Result<Vec<SweepRow>, String> {
    let file = ScenarioFile::load(&scenario_path(name)).map_err(|e| e.to_string())?;
    let mut options = RunOptions { train_frames: 4000, eval_frames: 4000, ..RunOptions::default() };
    if !area {
        options.area = None;
    }
    sweep(&file, param, values, schemes, &options).map_err(|e| e.to_string())
}

fn row<'a>(rows: &'a [SweepRow], scheme: Scheme, value: f64) -> &'a SweepRow {
    rows.iter().find(|r| r.scheme == scheme && r.value == value).expect("row present")
}

fn two_se(a: &SweepRow, b: &SweepRow, area: bool) -> f64 {
    let (x, y) = if area {
        (a.metrics.avg_interfering_area_se, b.metrics.avg_interfering_area_se)
    } else {
        (a.metrics.avg_bs_usage_se, b.metrics.avg_bs_usage_se)
    };
    2.0 * (x * x + y * y).sqrt()
}

/// Successive values of a metric never move against `dir` by more than two
/// standard errors.
fn monotone(rows: &[SweepRow], scheme: Scheme, values: &[f64], area: bool, dir: f64) -> Result<(), String> {
    for w in values.windows(2) {
        let (a, b) = (row(rows, scheme, w[0]), row(rows, scheme, w[1]));
        let (va, vb) = if area {
            (a.metrics.avg_interfering_area, b.metrics.avg_interfering_area)
        } else {
            (a.metrics.avg_bs_usage, b.metrics.avg_bs_usage)
        };
        let what = if area { "area" } else { "L_bar" };
        check(dir * (vb - va) >= -two_se(a, b, area), format!("{scheme}: {what} {va:.4} -> {vb:.4} at {} -> {}", w[0], w[1]))?;
    }
    Ok(())
}

const LOADS: [f64; 4] = [50.0, 100.0, 150.0, 200.0];

fn c8_load_trends(rows: &[SweepRow]) -> Outcome {
    for scheme in Scheme::ALL {
        monotone(rows, scheme, &LOADS, false, 1.0)?;
    }
    let common: Vec<f64> =
        LOADS.iter().copied().filter(|&v| row(rows, Scheme::BdPt, v).feasible() && row(rows, Scheme::Tdma, v).feasible()).collect();
    let top = *common.last().ok_or("no load where both BD-PT and TDMA are feasible")?;
    let (b, t) = (row(rows, Scheme::BdPt, top), row(rows, Scheme::Tdma, top));
    check(
        b.metrics.avg_bs_usage <= t.metrics.avg_bs_usage + two_se(b, t, false),
        format!("at {top} kbps BD-PT L_bar {} > TDMA {}", b.metrics.avg_bs_usage, t.metrics.avg_bs_usage),
    )?;
    for &v in &common {
        let (b, t) = (row(rows, Scheme::BdPt, v), row(rows, Scheme::Tdma, v));
        let dl = t.metrics.avg_bs_usage - b.metrics.avg_bs_usage;
        let da = t.metrics.avg_interfering_area - b.metrics.avg_interfering_area;
        if dl.abs() > two_se(b, t, false) {
            check(dl * da > 0.0, format!("at {v} kbps area ordering disagrees with L_bar ordering"))?;
        }
    }
    Ok(format!(
        "highest common feasible load {top} kbps: BD-PT L_bar {:.3}, TDMA {:.3}; area {:.0} vs {:.0} m^2",
        b.metrics.avg_bs_usage, t.metrics.avg_bs_usage, b.metrics.avg_interfering_area, t.metrics.avg_interfering_area
    ))
}

fn c9_stringent(rows: &[SweepRow]) -> Outcome {
    let kbs = 5.0;
    let (moderate, high) = (100.0, 300.0);
    check(!row(rows, Scheme::PtOnly, moderate).feasible(), format!("PT-only converged at {moderate} kbps"))?;
    check(row(rows, Scheme::BdPt, moderate).feasible(), format!("BD-PT not feasible at {moderate} kbps"))?;
    let t = row(rows, Scheme::Tdma, high);
    let b = row(rows, Scheme::BdPt, high);
    check(t.metrics.avg_bs_usage >= kbs - 2.0 * t.metrics.avg_bs_usage_se - 1e-12, format!("TDMA L_bar {} at {high} kbps", t.metrics.avg_bs_usage))?;
    check(b.feasible(), format!("BD-PT not feasible at {high} kbps"))?;
    Ok(format!(
        "PT-only infeasible at {moderate} kbps; at {high} kbps TDMA L_bar {:.3}, BD-PT L_bar {:.3} (converged)",
        t.metrics.avg_bs_usage, b.metrics.avg_bs_usage
    ))
}

const KAPPAS: [f64; 4] = [0.0, 1.0, 2.0, 4.0];

fn c10_kappa(rows: &[SweepRow]) -> Outcome {
    let mut parts = Vec::new();
    for scheme in [Scheme::BdPt, Scheme::Tdma] {
        for &k in &KAPPAS {
            check(row(rows, scheme, k).feasible(), format!("{scheme} infeasible at kappa {k}"))?;
        }
        monotone(rows, scheme, &KAPPAS, false, -1.0)?;
        monotone(rows, scheme, &KAPPAS, true, 1.0)?;
        let (a, b) = (row(rows, scheme, 0.0), row(rows, scheme, 4.0));
        parts.push(format!(
            "{scheme} L_bar {:.3}->{:.3}, area {:.0}->{:.0}",
            a.metrics.avg_bs_usage, b.metrics.avg_bs_usage, a.metrics.avg_interfering_area, b.metrics.avg_interfering_area
        ));
    }
    Ok(parts.join("; "))
}

fn c11_area() -> Outcome {
    let mut worst = 0.0f64;
    for &(p, eta) in &[(1.0, 4.0), (3.0, 4.0), (2.0, 3.0), (5.0, 3.5), (1.0, 2.5)] {
        let g = Scenario::calibrated_gain(50.0, eta);
        let a = interfering_area(&[[12.3, -7.9]], &[p], g, eta, 1.0, 1.0).map_err(|e| e.to_string())?;
        let r = interference_radius(p, g, eta, 1.0);
        let disc = std::f64::consts::PI * r * r;
        let rel = (a - disc).abs() / disc;
        worst = worst.max(rel);
        check(rel <= 0.01, format!("P={p}, eta={eta}: grid {a:.1} vs disc {disc:.1}"))?;
    }
    Ok(format!("5 cases, worst relative error {worst:.1e}"))
}

fn c12_dominance(load: &[SweepRow], stringent: &[SweepRow]) -> Outcome {
    let mut shared = 0;
    for rows in [load, stringent] {
        for p in rows.iter().filter(|r| r.scheme == Scheme::PtOnly && r.feasible()) {
            let b = row(rows, Scheme::BdPt, p.value);
            if !b.feasible() {
                continue;
            }
            shared += 1;
            check(
                p.metrics.avg_bs_usage >= b.metrics.avg_bs_usage - two_se(p, b, false),
                format!("{} = {}: PT-only {} < BD-PT {}", p.param, p.value, p.metrics.avg_bs_usage, b.metrics.avg_bs_usage),
            )?;
        }
    }
    check(shared > 0, "no shared feasible grid point")?;
    Ok(format!("{shared} shared feasible points"))
}

fn main() {
    let mut failures = 0;
    let mut report = |n: usize, name: &str, t: Instant, r: Outcome| {
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(msg) => println!("criterion {n:>2} PASS  {name}: {msg} [{secs:.1} s]"),
            Err(msg) => {
                failures += 1;
                println!("criterion {n:>2} FAIL  {name}: {msg} [{secs:.1} s]");
            }
        }
    };
    let t = Instant::now();
    report(1, "water-filling oracle", t, c1_waterfill());
    let t = Instant::now();
    report(2, "BD orthogonality", t, c2_bd_orthogonality());
    let t = Instant::now();
    report(3, "rate derivative", t, c3_derivative());
    let t = Instant::now();
    report(4, "power-split oracle", t, c4_power_split());
    let t = Instant::now();
    report(5, "time-share oracle", t, c5_time_shares());
    let t = Instant::now();
    report(6, "mode-choice exactness", t, c6_mode_choice());
    let t = Instant::now();
    report(7, "dual convergence", t, c7_convergence());

    let t = Instant::now();
    let load = sweep_rows("default.toml", "load_kbps", &LOADS, &Scheme::ALL, true);
    match &load {
        Ok(rows) => report(8, "load trends", t, c8_load_trends(rows)),
        Err(e) => report(8, "load trends", t, Err(e.clone())),
    }
    let t = Instant::now();
    let stringent = sweep_rows("stringent_qos.toml", "load_kbps", &[100.0, 300.0], &Scheme::ALL, false);
    match &stringent {
        Ok(rows) => report(9, "stringent-QoS regime", t, c9_stringent(rows)),
        Err(e) => report(9, "stringent-QoS regime", t, Err(e.clone())),
    }
    let t = Instant::now();
    let r = sweep_rows("power_slope.toml", "kappa", &KAPPAS, &[Scheme::BdPt, Scheme::Tdma], true).and_then(|rows| c10_kappa(&rows));
    report(10, "kappa trends", t, r);
    let t = Instant::now();
    report(11, "interfering-area geometry", t, c11_area());
    let t = Instant::now();
    let r = match (&load, &stringent) {
        (Ok(a), Ok(b)) => c12_dominance(a, b),
        _ => Err("sweeps unavailable".into()),
    };
    report(12, "candidate-set dominance", t, r);

    println!("acceptance: {} of 12 criteria passed", 12 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
