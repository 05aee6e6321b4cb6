//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

mod common;

use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_2;
use std::time::{Duration, Instant};

use coarray_lab::beamform::{
    image_addition_output, min_rank_synthesis, synthesized_beampattern, u_grid, ComponentSet,
    MinRankOptions,
};
use coarray_lab::coarray::{asymptotic_redundancy_estimate, redundancy_pattern, sum_coarray};
use coarray_lab::geometry::{
    nested, nonoverlapping_mra, symmetric_from_generator, symmetric_na_min_redundancy, ula,
    SymmetricNaParams,
};
use coarray_lab::linalg::{numerical_rank, CMatrix};
use coarray_lab::manifold::{
    coarray_identity_residual, coarray_steering, complex_gaussian, compression_operator, noise_rng,
    steering_vector_u, Scatterer, Scene, WaveformMatrix,
};
use coarray_lab::mra::{search_fully_overlapping, Budget};
use coarray_lab::{ActiveArrayPair, ArrayConfig, C64};
use common::{best_symmetric_na, naive_mra, sums_cover};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        detail: detail.into(),
    }
}

fn run(id: usize, name: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = f();
    let took = start.elapsed();
    let in_time = took <= limit;
    let ok = o.ok && in_time;
    println!(
        "criterion {id:>2} {} {name}: {} [{:.3} s, limit {} s]",
        if ok { "PASS" } else { "FAIL" },
        o.detail,
        took.as_secs_f64(),
        limit.as_secs_f64()
    );
    ok
}

fn rng(stream: u64) -> ChaCha8Rng {
    noise_rng(0xACCE_97A4, stream)
}

fn shared(p: &[u32]) -> ActiveArrayPair {
    ActiveArrayPair::shared(ArrayConfig::new(p.to_vec()).unwrap())
}

fn random_config(r: &mut ChaCha8Rng, max_len: usize, max_pos: u32) -> ArrayConfig {
    let len = r.random_range(1..=max_len);
    ArrayConfig::from_positions((0..len).map(|_| r.random_range(0..=max_pos))).unwrap()
}

fn c1_two_sensor_pattern() -> Outcome {
    let p = redundancy_pattern(&shared(&[0, 1]));
    let want = vec![vec![1, 0, 0, 0], vec![0, 1, 1, 0], vec![0, 0, 0, 1]];
    let ok = p.to_dense() == want && p.multiplicities() == [1, 2, 1];
    outcome(
        ok,
        format!("Υ = {:?}, υ = {:?}", p.to_dense(), p.multiplicities()),
    )
}

fn c2_eleven_sensor_mra() -> Outcome {
    let want: BTreeSet<Vec<u32>> = [
        vec![0, 1, 2, 3, 7, 11, 15, 17, 20, 21, 22],
        vec![0, 1, 2, 3, 7, 11, 15, 19, 20, 21, 22],
        vec![0, 1, 2, 5, 7, 11, 15, 17, 20, 21, 22],
        vec![0, 1, 2, 5, 8, 11, 14, 17, 20, 21, 22],
        vec![0, 1, 3, 4, 6, 11, 13, 18, 19, 21, 22],
        vec![0, 1, 3, 4, 9, 11, 13, 18, 19, 21, 22],
    ]
    .into_iter()
    .collect();
    let sol = search_fully_overlapping(11, Budget::default()).unwrap();
    let got: BTreeSet<Vec<u32>> = sol.configs.iter().map(|c| c.positions().to_vec()).collect();
    let eleven = sol.complete && sol.aperture == 22 && got == want;

    let mut oracle_ok = true;
    for n in 1..=8 {
        let (a, all) = naive_mra(n);
        let s = search_fully_overlapping(n, Budget::default()).unwrap();
        let mine: BTreeSet<Vec<u32>> = s
            .with_mirrors()
            .iter()
            .map(|c| c.positions().to_vec())
            .collect();
        oracle_ok &= s.aperture as u32 == a && mine == all;
    }
    outcome(
        eleven && oracle_ok,
        format!(
            "n=11 aperture {} with {} mirror classes ({} nodes), expected sets {}; oracle n<=8 {}",
            sol.aperture,
            got.len(),
            sol.stats.nodes,
            if got == want { "matched" } else { "differ" },
            if oracle_ok { "matched" } else { "differs" }
        ),
    )
}

fn c3_symmetric_na() -> Outcome {
    let mut bad = Vec::new();
    for n in 2..=64 {
        let (params, s) = symmetric_na_min_redundancy(n).unwrap();
        let size = SymmetricNaParams::closed_form(n)
            .unwrap()
            .sum_coarray_size();
        let sum = sum_coarray(&ActiveArrayPair::shared(s.clone()));
        let brute = sums_cover(s.positions(), size) && sum.len() == size;
        if s.len() != n || !sum.contiguous || !brute || params.n_total != n {
            bad.push(n);
        }
    }
    let mut grid_bad = Vec::new();
    for n in 4..=16 {
        let (_, s) = symmetric_na_min_redundancy(n).unwrap();
        if s.aperture() != best_symmetric_na(n) {
            grid_bad.push(n);
        }
    }
    outcome(
        bad.is_empty() && grid_bad.is_empty(),
        format!("size mismatches {bad:?}; grid-optimality misses {grid_bad:?}"),
    )
}

fn c4_asymptotic() -> Outcome {
    let family = |n| symmetric_na_min_redundancy(n).map(|(_, s)| s);
    let est = asymptotic_redundancy_estimate(family, [100, 200, 500, 1000]).unwrap();
    let r: Vec<f64> = est
        .iter()
        .map(|(_, r)| *r.numer() as f64 / *r.denom() as f64)
        .collect();
    let last = *r.last().unwrap();
    let monotone = r.windows(2).all(|w| w[0] < w[1] && w[1] < 2.0);
    outcome(
        (1.9..=2.0).contains(&last) && monotone,
        format!("R(100, 200, 500, 1000) = {r:.5?}"),
    )
}

fn c5_nonoverlapping() -> Outcome {
    let mut r = rng(5);
    let mut fails = Vec::new();
    let mut draws = Vec::new();
    while draws.len() < 20 {
        let nt = r.random_range(1..=200usize);
        let nr = r.random_range(1..=200usize);
        if nt * nr > 200 {
            continue;
        }
        draws.push((nt, nr));
        let pair = nonoverlapping_mra(nt, nr).unwrap();
        let s = sum_coarray(&pair);
        let exact = s.positions == (0..(nt * nr) as i64).collect::<Vec<_>>()
            && s.multiplicities.iter().all(|&m| m == 1);
        if !exact {
            fails.push((nt, nr));
        }
    }
    outcome(fails.is_empty(), format!("20 draws, failures {fails:?}"))
}

fn c6_factorization() -> Outcome {
    let mut r = rng(6);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let pair =
            ActiveArrayPair::new(random_config(&mut r, 10, 40), random_config(&mut r, 10, 40));
        let angles: Vec<f64> = (0..32)
            .map(|_| r.random_range(-FRAC_PI_2..FRAC_PI_2))
            .collect();
        worst = worst.max(coarray_identity_residual(&pair, &angles).unwrap());
    }
    outcome(
        worst < 1e-12,
        format!("max residual {worst:.2e} (tol 1e-12)"),
    )
}

fn c7_sufficient_condition() -> Outcome {
    let mut r = rng(7);
    let mut violations = 0;
    for _ in 0..500 {
        let g = nested(r.random_range(0..6), r.random_range(1..6)).unwrap();
        let a = g.aperture();
        let mut pos = g.positions().to_vec();
        for _ in 0..r.random_range(0..4) {
            pos.push(r.random_range(0..=a));
        }
        let g = ArrayConfig::from_positions(pos).unwrap();
        let prefix = sum_coarray(&ActiveArrayPair::shared(g.clone())).contiguous_prefix_len as u32;
        let offset = r.random_range(0..=prefix);
        let s = symmetric_from_generator(&g, offset);
        if !sums_cover(s.positions(), 2 * s.aperture() as usize + 1) {
            violations += 1;
        }
    }
    let mut counterexamples = 0;
    for _ in 0..200 {
        let g = nested(r.random_range(0..6), r.random_range(1..6)).unwrap();
        let prefix = sum_coarray(&ActiveArrayPair::shared(g.clone())).contiguous_prefix_len as u32;
        let s = symmetric_from_generator(&g, prefix + r.random_range(1..5));
        if !sums_cover(s.positions(), 2 * s.aperture() as usize + 1) {
            counterexamples += 1;
        }
    }
    outcome(
        violations == 0 && counterexamples > 0,
        format!("500 draws, {violations} violations; {counterexamples}/200 adversarial draws non-contiguous"),
    )
}

fn c8_image_addition() -> Outcome {
    let opts = MinRankOptions::default();
    let ula9 = ActiveArrayPair::shared(ula(9).unwrap());
    let mra6_cfg = ArrayConfig::new(vec![0, 1, 3, 5, 7, 8]).unwrap();
    let found = search_fully_overlapping(6, Budget::default())
        .unwrap()
        .with_mirrors()
        .contains(&mra6_cfg);
    let mra6 = ActiveArrayPair::shared(mra6_cfg);

    let p_ula = redundancy_pattern(&ula9);
    let p_mra = redundancy_pattern(&mra6);
    let target: Vec<C64> = p_ula
        .multiplicities()
        .iter()
        .map(|&m| C64::new(m as f64, 0.0))
        .collect();
    let same_support = p_ula.positions() == p_mra.positions();

    let r_ula = min_rank_synthesis(&target, &p_ula, &opts).unwrap();
    let r_mra = match min_rank_synthesis(&target, &p_mra, &opts) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("MRA synthesis failed: {e}")),
    };
    let us = u_grid(1024);
    let h_ula = synthesized_beampattern(&r_ula.components, &ula9, &us).unwrap();
    let h_mra = synthesized_beampattern(&r_mra.components, &mra6, &us).unwrap();
    let diff = h_ula
        .iter()
        .zip(&h_mra)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let ok = found
        && same_support
        && r_ula.components.q() == 1
        && r_mra.components.q() == 2
        && r_ula.residual < 1e-9
        && r_mra.residual < 1e-9
        && diff < 1e-8;
    outcome(
        ok,
        format!(
            "ULA Q={} res {:.1e}; MRA Q={} res {:.1e}; pattern max diff {diff:.1e} (tol 1e-8)",
            r_ula.components.q(),
            r_ula.residual,
            r_mra.components.q(),
            r_mra.residual
        ),
    )
}

fn c9_ula_universality() -> Outcome {
    let mut r = rng(9);
    let mut worst_q = 0;
    let mut failures = 0;
    let mut hist = [0usize; 3];
    for k in 0..50u64 {
        let n = r.random_range(4..=9);
        let pattern = redundancy_pattern(&ActiveArrayPair::shared(ula(n).unwrap()));
        let target = complex_gaussian(&mut r, 1.0, pattern.rows());
        let opts = MinRankOptions {
            seed: k,
            ..MinRankOptions::default()
        };
        match min_rank_synthesis(&target, &pattern, &opts) {
            Ok(res) if res.components.q() <= 2 && res.residual <= opts.tol => {
                worst_q = worst_q.max(res.components.q());
                hist[res.components.q()] += 1;
            }
            _ => failures += 1,
        }
    }
    outcome(
        failures == 0,
        format!(
            "50 targets, {failures} failures, Q=1: {}, Q=2: {}, max Q {worst_q}",
            hist[1], hist[2]
        ),
    )
}

fn c10_end_to_end() -> Outcome {
    let mut r = rng(10);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let pair = ActiveArrayPair::new(random_config(&mut r, 8, 20), random_config(&mut r, 8, 20));
        let q = r.random_range(1..=3);
        let wt = complex_gaussian(&mut r, 1.0, pair.n_tx() * q);
        let wr = complex_gaussian(&mut r, 1.0, pair.n_rx() * q);
        let comps = ComponentSet::new(
            CMatrix::from_column_slice(pair.n_tx(), q, &wt),
            CMatrix::from_column_slice(pair.n_rx(), q, &wr),
        )
        .unwrap();
        let k = r.random_range(0..=5);
        let mut angles: Vec<f64> = (0..k).map(|_| r.random_range(-1.5..1.5)).collect();
        angles.sort_by(f64::total_cmp);
        angles.dedup();
        let gammas = complex_gaussian(&mut r, 1.0, angles.len());
        let scene = Scene::new(
            angles
                .iter()
                .zip(&gammas)
                .map(|(&theta_rad, &gamma)| Scatterer { theta_rad, gamma })
                .collect(),
        )
        .unwrap();
        let out = image_addition_output(&pair, &scene, &comps, 8, 0.0, 1).unwrap();
        let pattern = redundancy_pattern(&pair);
        let ws = comps.coarray_weights(&pattern).unwrap();
        let a_sigma = coarray_steering(&pattern, &angles).unwrap();
        let mut want = C64::new(0.0, 0.0);
        for (k, g) in gammas.iter().enumerate() {
            let h: C64 = ws
                .iter()
                .enumerate()
                .map(|(l, w)| w.conj() * a_sigma[(l, k)])
                .sum();
            want += g * h;
        }
        worst = worst.max((out.total - want).norm());
    }

    let cfg_tx = ArrayConfig::new(vec![0, 1, 4, 6]).unwrap();
    let cfg_rx = ArrayConfig::new(vec![0, 2, 3]).unwrap();
    let pair = ActiveArrayPair::new(cfg_tx.clone(), cfg_rx.clone());
    let phi = 0.37f64;
    let at = steering_vector_u(cfg_tx.positions(), phi.sin());
    let ar = steering_vector_u(cfg_rx.positions(), phi.sin());
    let comps = ComponentSet::new(
        CMatrix::from_column_slice(4, 1, &at),
        CMatrix::from_column_slice(3, 1, &ar),
    )
    .unwrap();
    let scene = Scene::new(vec![Scatterer {
        theta_rad: phi,
        gamma: C64::new(1.0, 0.0),
    }])
    .unwrap();
    let matched = image_addition_output(&pair, &scene, &comps, 16, 0.0, 1)
        .unwrap()
        .total;
    let matched_err = (matched - C64::new(12.0, 0.0)).norm();
    outcome(
        worst < 1e-10 && matched_err < 1e-12,
        format!("max |ȳ − w_Σᴴ A_Σ γ| {worst:.1e} (tol 1e-10); matched case {matched:.3} vs 12"),
    )
}

fn c11_compression() -> Outcome {
    let mut r = rng(11);
    let mut bound_violations = 0;
    let mut equality_misses = 0;
    let mut draws = 0;
    for _ in 0..20 {
        let pair = ActiveArrayPair::new(random_config(&mut r, 6, 15), random_config(&mut r, 6, 15));
        let n_tx = pair.n_tx();
        let n_sigma = redundancy_pattern(&pair).rows();
        for ns in 1..=n_tx {
            let t = n_tx + r.random_range(0..3);
            let a = CMatrix::from_column_slice(t, ns, &complex_gaussian(&mut r, 1.0, t * ns));
            let b = CMatrix::from_column_slice(ns, n_tx, &complex_gaussian(&mut r, 1.0, ns * n_tx));
            let wf = WaveformMatrix::custom(a * b).unwrap();
            let (_, rank) = compression_operator(&pair, &wf).unwrap();
            if rank > (wf.rank() * pair.n_rx()).min(n_sigma) {
                bound_violations += 1;
            }
            draws += 1;
        }
    }
    for (nt, nr) in [(2, 3), (3, 3), (4, 2), (5, 4)] {
        let pair = nonoverlapping_mra(nt, nr).unwrap();
        let n_sigma = redundancy_pattern(&pair).rows();
        for ns in 1..=nt {
            let t = nt + 2;
            let a = CMatrix::from_column_slice(t, ns, &complex_gaussian(&mut r, 1.0, t * ns));
            let b = CMatrix::from_column_slice(ns, nt, &complex_gaussian(&mut r, 1.0, ns * nt));
            let s = a * b;
            let ns_actual = numerical_rank(&s);
            let (_, rank) =
                compression_operator(&pair, &WaveformMatrix::custom(s).unwrap()).unwrap();
            if rank != (ns_actual * nr).min(n_sigma) {
                equality_misses += 1;
            }
        }
    }
    outcome(
        bound_violations == 0 && equality_misses == 0,
        format!("{draws} random draws, {bound_violations} bound violations; {equality_misses} equality misses on non-redundant pairs"),
    )
}

fn main() {
    let secs = Duration::from_secs;
    let results = [
        run(
            1,
            "two-sensor ULA redundancy pattern",
            Duration::from_millis(1),
            c1_two_sensor_pattern,
        ),
        run(
            2,
            "11-sensor MRA set and n<=8 oracle",
            secs(60),
            c2_eleven_sensor_mra,
        ),
        run(3, "closed-form symmetric NA", secs(10), c3_symmetric_na),
        run(4, "asymptotic redundancy", secs(1), c4_asymptotic),
        run(5, "non-overlapping MRA bound", secs(1), c5_nonoverlapping),
        run(
            6,
            "co-array factorization identity",
            secs(5),
            c6_factorization,
        ),
        run(
            7,
            "symmetric-array sufficient condition",
            secs(10),
            c7_sufficient_condition,
        ),
        run(8, "image addition ULA vs MRA", secs(30), c8_image_addition),
        run(9, "ULA universality", secs(60), c9_ula_universality),
        run(10, "end-to-end beamformer output", secs(10), c10_end_to_end),
        run(11, "compression operator rank", secs(5), c11_compression),
    ];
    let passed = results.iter().filter(|&&ok| ok).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
