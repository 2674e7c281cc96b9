//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::{FRAC_PI_4, PI, SQRT_2};
use std::process::ExitCode;

use blindpol_core::adversary::{intercept_resend, pns_monte_carlo};
use blindpol_core::channel::{beam_split, sample_photon_count};
use blindpol_core::estimation::{
    attack1_eve_means, attack2_eve_mean, final_pass_tap_intensity, full_sphere_fidelity,
};
use blindpol_core::polarization::rotate;
use blindpol_core::protocol::{
    alice_encode, alice_prepare, bob_scramble, bob_unscramble, decode_two_pulse, run_basic_round,
    run_two_pulse_round, two_pulse_prekey, verify_keys, TwoPulseSecrets,
};
use blindpol_core::rng::stream;
use blindpol_core::{
    attack1_bound, attack2_bound, equatorial_fidelity, expected_fidelity, run_session, Attack,
    BlockIndex, ChannelConfig, Mode, PartyStreams, PnsStrategy, PolarizationAngle, Pulse, Round,
    SessionConfig, Source,
};
use rand::Rng;

struct Report {
    failed: usize,
}

impl Report {
    fn check(&mut self, id: &str, name: &str, pass: bool, detail: String) {
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {id:>2} {name}: {detail}");
        if !pass {
            self.failed += 1;
        }
    }
}

fn angle(rng: &mut impl Rng) -> PolarizationAngle {
    PolarizationAngle::uniform(rng)
}

fn c1(r: &mut Report) {
    let f0 = equatorial_fidelity(0);
    let f1 = equatorial_fidelity(1);
    let f2 = equatorial_fidelity(2);
    let want2 = 0.5 + SQRT_2 / 4.0;
    r.check(
        "1",
        "fidelity spot values",
        f0 == 0.5 && f1 == 0.75 && (f2 - want2).abs() < 1e-12,
        format!("I(0)={f0} I(1)={f1} I(2)={f2:.15} (want {want2:.15})"),
    );
}

fn c2(r: &mut Report) {
    let ie = attack1_bound(0.5, 2.83).unwrap().i_e;
    r.check(
        "2",
        "attack 1 at (0.5, 2.83)",
        (0.65..=0.75).contains(&ie),
        format!("i_e={ie:.6} in [0.65, 0.75]"),
    );
}

fn c3(r: &mut Report) {
    let ie = attack2_bound(0.5, 2.83).unwrap().i_e;
    r.check(
        "3",
        "attack 2 at (0.5, 2.83)",
        (0.81..=0.85).contains(&ie),
        format!("i_e={ie:.6} in [0.81, 0.85]"),
    );
}

fn c4(r: &mut Report) {
    let limit = attack1_bound(0.999, 2.83).unwrap().i_e;
    let steps = 100_000;
    let (mut best, mut arg) = (f64::NEG_INFINITY, 0.0);
    for i in 1..steps {
        let eta2 = i as f64 / steps as f64;
        let v = final_pass_tap_intensity(eta2, 2.83);
        if v > best {
            best = v;
            arg = eta2;
        }
    }
    r.check(
        "4",
        "limit and argmax",
        (limit - 0.5).abs() <= 0.01 && (arg - 2.0 / 3.0).abs() <= 2e-3,
        format!("i_e(0.999)={limit:.6}, argmax eta2={arg:.5}"),
    );
}

fn c5(r: &mut Report) {
    let mut rng = stream(5, 4);
    let pulse = Pulse::new(1.0, PolarizationAngle::ZERO);
    let draws = 100_000;
    let zeros = (0..draws)
        .filter(|_| sample_photon_count(&pulse, &mut rng) == 0)
        .count();
    let freq = zeros as f64 / draws as f64;
    r.check(
        "5",
        "vacuum fraction",
        (freq - 0.368).abs() <= 0.006,
        format!("{freq:.5} (0.368 ± 0.006)"),
    );
}

fn c6(r: &mut Report) {
    let channel = ChannelConfig::lossless(Attack::None, 6);
    let mut streams = PartyStreams::new(6);
    let mut secrets = stream(6, 10);
    let (mut ka, mut kb) = (Vec::new(), Vec::new());
    for _ in 0..1000 {
        let (theta, phi, k) = (angle(&mut secrets), angle(&mut secrets), secrets.random());
        let round =
            run_basic_round(theta, phi, k, &Source::SinglePhoton, &channel, &mut streams).unwrap();
        ka.push(k);
        kb.push(round.outcome.bit());
    }
    let agree = ka.iter().zip(&kb).filter(|(a, b)| Some(**a) == **b).count();
    let kb: Vec<bool> = kb.into_iter().map(|b| b.unwrap_or(false)).collect();
    let verified = verify_keys(&ka, &kb).verified;

    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let (theta, phi, k) = (
            angle(&mut secrets),
            angle(&mut secrets),
            secrets.random::<bool>(),
        );
        let end = bob_unscramble(
            alice_encode(bob_scramble(alice_prepare(theta), phi), theta, k),
            phi,
        );
        let want = if k { -FRAC_PI_4 } else { FRAC_PI_4 };
        worst = worst.max(end.angle.circular_distance(PolarizationAngle::new(want)));
    }
    r.check(
        "6",
        "protocol correctness",
        agree == 1000 && verified && worst < 1e-12,
        format!("agreement {agree}/1000, hash verified={verified}, max closure error {worst:.2e}"),
    );
}

fn c7(r: &mut Report) {
    let channel = ChannelConfig::lossless(Attack::None, 7);
    let mut streams = PartyStreams::new(7);
    let mut secrets = stream(7, 10);
    let mut ok = 0;
    for s in [false, true] {
        for k in [false, true] {
            for b in [BlockIndex::First, BlockIndex::Second] {
                let algebra = decode_two_pulse(s, b, two_pulse_prekey(s, k, b)) == k;
                let round = run_two_pulse_round(
                    TwoPulseSecrets {
                        theta1: angle(&mut secrets),
                        theta2: angle(&mut secrets),
                        phi: angle(&mut secrets),
                        s,
                        k,
                        b,
                    },
                    &Source::SinglePhoton,
                    &channel,
                    &mut streams,
                )
                .unwrap();
                if algebra && round.decoded.bit() == Some(k) {
                    ok += 1;
                }
            }
        }
    }
    r.check(
        "7",
        "two-pulse truth table",
        ok == 8,
        format!("{ok}/8 combinations decode to k"),
    );
}

fn c8(r: &mut Report) {
    let mut rng = stream(8, 3);
    let rounds = 100_000;
    let mean: f64 = (0..rounds)
        .map(|_| intercept_resend(&Pulse::new(1.0, angle(&mut rng)), &mut rng).fidelity)
        .sum::<f64>()
        / rounds as f64;
    let failures = (0..1000u64)
        .filter(|&seed| {
            let config = SessionConfig::new(
                128,
                Mode::Basic,
                Source::SinglePhoton,
                ChannelConfig::lossless(Attack::intercept_resend(), seed),
            );
            !run_session(&config).unwrap().verified
        })
        .count();
    r.check(
        "8",
        "intercept-resend",
        (mean - 0.75).abs() <= 0.005 && failures >= 999,
        format!("mean fidelity {mean:.5}, hash failures {failures}/1000"),
    );
}

fn c9(r: &mut Report) {
    let blind = run_session(&SessionConfig::new(
        10_000,
        Mode::TwoPulse,
        Source::SinglePhoton,
        ChannelConfig::lossless(Attack::Impersonation { knows_s: false }, 9),
    ))
    .unwrap();
    let informed = run_session(&SessionConfig::new(
        1000,
        Mode::TwoPulse,
        Source::SinglePhoton,
        ChannelConfig::lossless(Attack::Impersonation { knows_s: true }, 9),
    ))
    .unwrap();
    let (qb, qi) = (blind.qber(), informed.qber());
    r.check(
        "9",
        "impersonation",
        (qb - 0.5).abs() <= 0.02 && !blind.verified && qi == 0.0 && informed.verified,
        format!(
            "blind error {qb:.4} verified={}, knows_s error {qi} verified={}",
            blind.verified, informed.verified
        ),
    );
}

/// Independent reference for the Poisson-weighted series: first 30 terms,
/// Poisson weights by recurrence and binomials by exact products.
fn brute_force_series(mean: f64) -> f64 {
    let binomial =
        |n: u64, k: u64| -> f64 { (1..=k).fold(1.0, |acc, i| acc * (n + 1 - i) as f64 / i as f64) };
    let mut weight = (-mean).exp();
    let mut total = 0.0;
    for n in 0..30u64 {
        let fidelity = if n == 0 {
            0.5
        } else {
            let s: f64 = (0..n)
                .map(|l| (binomial(n, l) * binomial(n, l + 1)).sqrt())
                .sum();
            0.5 + s / 2f64.powi(n as i32 + 1)
        };
        total += weight * fidelity;
        weight *= mean / (n + 1) as f64;
    }
    total
}

fn c10(r: &mut Report) {
    let mut worst_gap: f64 = 0.0;
    let mut worst_rel: f64 = 0.0;
    let mut worst_at = String::new();
    for eta2 in [0.4, 0.5, 2.0 / 3.0] {
        for alpha in [1.0, 2.0, 2.83, 4.0] {
            for strategy in [PnsStrategy::BeamSplitter, PnsStrategy::EqualShare] {
                let est = pns_monte_carlo(strategy, eta2, alpha, 100_000, 10).unwrap();
                worst_rel = worst_rel.max(est.gap / est.analytic.i_e);
                if est.gap > worst_gap {
                    worst_gap = est.gap;
                    worst_at = format!("{} ({eta2:.3}, {alpha})", strategy.label());
                }
            }
        }
    }

    // The 30-term oracle truncates at n = 29, so only means whose Poisson
    // tail past 29 is negligible (well under 1e-12) are compared.
    let mut means = Vec::new();
    for eta2 in [0.4, 0.5, 2.0 / 3.0] {
        for alpha in [1.0, 2.0, 2.83] {
            means.extend(attack1_eve_means(eta2, alpha));
            means.push(attack2_eve_mean(eta2, alpha));
        }
    }
    means.extend([0.0, 0.1, 1.0, 3.0, 5.0]);
    let series_err = means
        .iter()
        .map(|&m| (expected_fidelity(m) - brute_force_series(m)).abs())
        .fold(0.0, f64::max);
    r.check(
        "10",
        "oracle equivalence",
        worst_gap <= 0.01 && series_err <= 1e-10,
        format!(
            "max MC gap {worst_gap:.5} at {worst_at} (max relative {:.3}%), series vs 30-term oracle {series_err:.2e}",
            100.0 * worst_rel
        ),
    );
}

fn chi_square_uniform(angles: &[f64], bins: usize) -> f64 {
    let mut counts = vec![0usize; bins];
    for &a in angles {
        let i = ((a / (2.0 * PI)) * bins as f64) as usize;
        counts[i.min(bins - 1)] += 1;
    }
    let expected = angles.len() as f64 / bins as f64;
    counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum()
}

fn c11(r: &mut Report) {
    let mut rng = stream(11, 10);
    let mut energy_err: f64 = 0.0;
    let mut group_err: f64 = 0.0;
    for _ in 0..10_000 {
        let p = Pulse::new(rng.random_range(0.0..6.0), angle(&mut rng));
        let (t, f) = beam_split(p, rng.random_range(0.0..=1.0)).unwrap();
        energy_err = energy_err.max((t.mean_photons() + f.mean_photons() - p.mean_photons()).abs());

        let (a, b) = (angle(&mut rng), angle(&mut rng));
        let s = p.state();
        let composed = rotate(rotate(s, a), b)
            .angle
            .circular_distance(rotate(s, a + b).angle);
        let inverse = rotate(rotate(s, a), -a).angle.circular_distance(s.angle);
        let commute = (a + b).circular_distance(b + a);
        let identity = rotate(s, PolarizationAngle::ZERO)
            .angle
            .circular_distance(s.angle);
        group_err = group_err
            .max(composed)
            .max(inverse)
            .max(commute)
            .max(identity);
    }

    let dominated = (1..=200).all(|n| equatorial_fidelity(n) >= full_sphere_fidelity(n));

    // χ²(0.999, 19) for 20 bins.
    const CRITICAL: f64 = 43.82;
    let transcript = run_session(&SessionConfig::new(
        20_000,
        Mode::Basic,
        Source::SinglePhoton,
        ChannelConfig::lossless(Attack::None, 11),
    ))
    .unwrap();
    let mut chi = [0.0; 3];
    for (pass, slot) in chi.iter_mut().enumerate() {
        let angles: Vec<f64> = transcript
            .rounds
            .iter()
            .map(|round| match round {
                Round::Basic(b) => b.pass_angles[pass].radians(),
                Round::TwoPulse(_) => unreachable!(),
            })
            .collect();
        *slot = chi_square_uniform(&angles, 20);
    }
    let uniform = chi.iter().all(|&c| c < CRITICAL);

    let config = SessionConfig::new(
        256,
        Mode::TwoPulse,
        Source::Coherent { alpha: 1.5 },
        ChannelConfig::from_eta2(0.7, Attack::None, 12).unwrap(),
    );
    let jsonl = |c: &SessionConfig| {
        let mut buf = Vec::new();
        run_session(c).unwrap().write_jsonl(&mut buf).unwrap();
        buf
    };
    let reproducible = jsonl(&config) == jsonl(&config);
    let other = SessionConfig {
        channel: ChannelConfig {
            seed: 13,
            ..config.channel
        },
        ..config
    };
    let distinct = jsonl(&config) != jsonl(&other);

    r.check(
        "11",
        "property suites",
        energy_err <= 1e-12 && group_err <= 1e-12 && dominated && uniform && reproducible && distinct,
        format!(
            "energy {energy_err:.1e}, group laws {group_err:.1e}, equatorial >= sphere {dominated}, \
             chi2 per pass [{:.1}, {:.1}, {:.1}] < {CRITICAL}, reproducible {reproducible}, seed-sensitive {distinct}",
            chi[0], chi[1], chi[2]
        ),
    );
}

fn shape(r: &mut Report) {
    let alphas: Vec<f64> = (0..=120).map(|i| i as f64 * 0.05).collect();
    let etas = [0.4, 0.5, 2.0 / 3.0, 0.9];
    let mut ok = true;
    for &eta2 in &etas {
        let a1: Vec<f64> = alphas
            .iter()
            .map(|&a| attack1_bound(eta2, a).unwrap().i_e)
            .collect();
        let a2: Vec<f64> = alphas
            .iter()
            .map(|&a| attack2_bound(eta2, a).unwrap().i_e)
            .collect();
        ok &= a1.windows(2).all(|w| w[1] >= w[0] - 1e-12);
        ok &= a2.windows(2).all(|w| w[1] >= w[0] - 1e-12);
        ok &= a1.iter().zip(&a2).all(|(x, y)| y >= &(x - 1e-12));
    }
    for &alpha in &alphas {
        let col: Vec<f64> = etas
            .iter()
            .map(|&e| attack2_bound(e, alpha).unwrap().i_e)
            .collect();
        ok &= col.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    }
    r.check(
        "S",
        "curve shape",
        ok,
        "monotone in alpha, attack 2 >= attack 1, attack 2 nonincreasing in eta2".into(),
    );
}

fn main() -> ExitCode {
    let mut r = Report { failed: 0 };
    c1(&mut r);
    c2(&mut r);
    c3(&mut r);
    c4(&mut r);
    c5(&mut r);
    c6(&mut r);
    c7(&mut r);
    c8(&mut r);
    c9(&mut r);
    c10(&mut r);
    c11(&mut r);
    shape(&mut r);
    if r.failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} criteria failed", r.failed);
        ExitCode::FAILURE
    }
}
