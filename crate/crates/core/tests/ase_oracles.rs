use mcwave::ase::{
    awgn_constrained_capacity, estimate_ase, estimate_ase_gaussian_inputs, gaussian_info, subcarrier_sinr, LinkScenario,
};
use mcwave::channel::{realize_channel, ChannelProfile, ETU_DELAYS_NS, ETU_POWERS_DB};
use mcwave::constellation::Constellation;
use mcwave::presets::{preset_link, Preset};
use mcwave::pulse::{make_pulse, PulseKind};
use mcwave::receiver::{build_observation, required_window, EqualizerKind, MmseSolver};
use mcwave::rng::{complex_gaussian, rng_for};
use mcwave::waveform::lattice_phase;
use mcwave::{Complex64, FrameConfig, Scheme};

/// Nodes and weights for `int exp(-x^2) f(x) dx`.
fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let nf = n as f64;
    let mut z: f64 = 0.0;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (pim4, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-14 {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn qpsk_capacity_quadrature(es_n0_db: f64) -> f64 {
    let n0 = 10f64.powf(-es_n0_db / 10.0);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let pts = [Complex64::new(s, s), Complex64::new(-s, s), Complex64::new(-s, -s), Complex64::new(s, -s)];
    let (nodes, weights) = gauss_hermite(48);
    let mut loss = 0.0;
    for x in pts {
        for (u, wu) in nodes.iter().zip(&weights) {
            for (v, wv) in nodes.iter().zip(&weights) {
                let w = Complex64::new(*u, *v) * n0.sqrt();
                let sum: f64 = pts.iter().map(|xp| (-((x - xp + w).norm_sqr() - w.norm_sqr()) / n0).exp()).sum();
                loss += wu * wv / std::f64::consts::PI * sum.log2();
            }
        }
    }
    2.0 - loss / 4.0
}

#[test]
fn hermite_rule_integrates_moments() {
    let (x, w) = gauss_hermite(48);
    let m0: f64 = w.iter().sum();
    let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
    assert!((m0 - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    assert!((m2 - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-12);
}

#[test]
fn qpsk_awgn_matches_quadrature() {
    let c = Constellation::qam(4).unwrap();
    for snr in [-5.0, 0.0, 5.0, 10.0] {
        let oracle = qpsk_capacity_quadrature(snr);
        let (mc, hw) = awgn_constrained_capacity(&c, snr, 400_000, 11).unwrap();
        assert!((mc - oracle).abs() < 0.01, "Es/N0={snr}: {mc} vs {oracle}");
        assert!(hw < 0.01);
    }
}

/// Rect pulse without prefix: every subcarrier sees exactly P / sigma^2.
fn clean_link(equalizer: EqualizerKind, evm: f64, order: usize) -> LinkScenario {
    let n = 32;
    let cfg = FrameConfig {
        scheme: Scheme::FbmcQam,
        subcarriers: n,
        delta_t: 1.0,
        delta_f: 1.0,
        samples_per_symbol: n,
        grid_divisor: 1,
        dft_len: n,
        half_len: 2,
        cp_len: 0,
        constellation_order: order,
        power: 1.0,
        symbol_period: n as f64 / 1.92e6,
        guard_efficiency: 1.0,
        rx_offset: 0,
        max_frame_samples: 1 << 20,
    };
    let pulse = make_pulse(PulseKind::Rect, n, 1, 0.0).unwrap();
    let profile = ChannelProfile::flat(0.0, cfg.sample_period()).without_fading();
    let mut sc = LinkScenario::new("clean", cfg, pulse, profile, equalizer);
    sc.evm = evm;
    sc
}

#[test]
fn gaussian_inputs_without_interference() {
    let sc = clean_link(EqualizerKind::Mmse, 0.0, 4);
    let c = estimate_ase_gaussian_inputs(&sc, &[0.0], 1, 32, 1).unwrap();
    assert!((c.points[0].ase - 1.0).abs() < 1e-9, "{}", c.points[0].ase);
}

#[test]
fn gaussian_inputs_interference_equal_to_noise() {
    let sc = clean_link(EqualizerKind::Mf, 1.0, 4);
    let c = estimate_ase_gaussian_inputs(&sc, &[0.0], 1, 32, 1).unwrap();
    assert!((c.points[0].ase - 1.5f64.log2()).abs() < 1e-9, "{}", c.points[0].ase);
}

#[test]
fn gaussian_estimator_matches_log_snr() {
    let sc = clean_link(EqualizerKind::Mmse, 0.0, 4);
    let snrs = [-5.0, 0.0, 5.0, 10.0, 20.0];
    let c = estimate_ase_gaussian_inputs(&sc, &snrs, 2, 64, 3).unwrap();
    for (p, s) in c.points.iter().zip(snrs) {
        let want = (1.0 + 10f64.powf(s / 10.0)).log2();
        assert!((p.ase - want).abs() < 0.02, "{s} dB: {} vs {want}", p.ase);
    }
}

#[test]
fn noiseless_ofdm_carries_two_bits() {
    let mut sc = preset_link(Preset::Ofdm, 4, 0.0, 3).unwrap();
    sc.evm = 0.0;
    // the last ETU tap (5 us) outlasts the 9-sample prefix; keep the rest
    sc.profile = ChannelProfile::from_db(&ETU_DELAYS_NS[..8], &ETU_POWERS_DB[..8], 0.0, sc.frame.sample_period()).unwrap();
    assert!(sc.profile.span_samples() <= sc.frame.cp_len);
    let c = estimate_ase(&sc, &[150.0], 2, 128, 5).unwrap();
    let per_symbol = c.points[0].ase / sc.normalization();
    assert!((per_symbol - 2.0).abs() < 1e-6, "{per_symbol}");
}

#[test]
fn vanishing_snr_gives_zero() {
    let sc = clean_link(EqualizerKind::Mmse, 0.0, 16);
    let c = estimate_ase(&sc, &[-60.0], 2, 64, 5).unwrap();
    assert!(c.points[0].ase < 1e-3, "{}", c.points[0].ase);
}

#[test]
fn gaussian_sinr_matches_simulated_information() {
    // random frequency-selective channel, MMSE filter; simulate Gaussian
    // symbols and measure the empirical Gaussian information
    let sc = preset_link(Preset::FbmcQam, 4, 0.0, 8).unwrap();
    let cfg = &sc.frame;
    let span = sc.profile.span_samples();
    let ch = realize_channel(&sc.profile, cfg.frame_samples(sc.pulse.len()) + span, 17).unwrap();
    let l = required_window(sc.pulse.len(), span, cfg);
    let noise = sc.noise_var(25.0);
    let model = build_observation(&ch, &sc.pulse, cfg, l, 0, noise, 0.0).unwrap();
    let g = MmseSolver::new(&model).filter(&model, noise).unwrap();
    let sinr = subcarrier_sinr(&model, &g, 0, 0.0, noise);
    let predicted: f64 = sinr.iter().map(|s| (1.0 + s).log2()).sum::<f64>() / sinr.len() as f64;

    let n = cfg.subcarriers;
    let mut rng = rng_for(23, &[]);
    let trials = 300;
    let mut zs = vec![Vec::new(); n];
    let mut xs = vec![Vec::new(); n];
    for _ in 0..trials {
        let d: Vec<Complex64> = (0..model.h.ncols()).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let rot: Vec<Complex64> = model
            .blocks
            .iter()
            .flat_map(|&b| (0..n).map(move |k| lattice_phase(cfg.density(), k, b)))
            .zip(&d)
            .map(|(p, x)| p * x)
            .collect();
        let y: Vec<Complex64> = (0..model.h.nrows())
            .map(|i| (0..model.h.ncols()).map(|j| model.h[(i, j)] * rot[j]).sum::<Complex64>() + complex_gaussian(&mut rng, noise))
            .collect();
        for k in 0..n {
            let z: Complex64 = (0..y.len()).map(|i| g[(k, i)] * y[i]).sum::<Complex64>() * lattice_phase(cfg.density(), k, 0).conj();
            zs[k].push(z);
            xs[k].push(d[model.target_pos * n + k]);
        }
    }
    let mut total = 0.0;
    for k in 0..n {
        let m = trials as f64;
        let beta = zs[k].iter().zip(&xs[k]).map(|(z, x)| z * x.conj()).sum::<Complex64>()
            / xs[k].iter().map(|x| x.norm_sqr()).sum::<f64>();
        let n0 = zs[k].iter().zip(&xs[k]).map(|(z, x)| (z - beta * x).norm_sqr()).sum::<f64>() / m;
        total += zs[k].iter().zip(&xs[k]).map(|(z, x)| gaussian_info(*z, *x, beta, n0)).sum::<f64>() / m;
    }
    let empirical = total / n as f64;
    assert!((empirical - predicted).abs() < 0.02, "{empirical} vs {predicted}");
}

#[test]
fn ceilings_and_orderings() {
    let snr = [0.0, 10.0, 20.0, 30.0];
    let mut sc = preset_link(Preset::FbmcQam, 16, 0.0, 6).unwrap();
    let mmse = estimate_ase(&sc, &snr, 3, 256, 9).unwrap();
    sc.equalizer = EqualizerKind::Mf;
    let mf = estimate_ase(&sc, &snr, 3, 256, 9).unwrap();
    sc.equalizer = EqualizerKind::Mmse;
    sc.evm = 0.0;
    let clean = estimate_ase(&sc, &snr, 3, 256, 9).unwrap();
    let gauss = estimate_ase_gaussian_inputs(&sc, &snr, 3, 256, 9).unwrap();
    for i in 0..snr.len() {
        let (a, b) = (&mmse.points[i], &mf.points[i]);
        assert!(a.ase <= 4.0 + 1e-9);
        assert!(a.ase + a.half_width + b.half_width >= b.ase, "MMSE below MF at {}", snr[i]);
        assert!(clean.points[i].ase + clean.points[i].half_width + a.half_width >= a.ase, "EVM helped at {}", snr[i]);
        assert!(clean.points[i].ase <= gauss.points[i].ase + clean.points[i].half_width, "above Gaussian bound");
        if i > 0 {
            let prev = &mmse.points[i - 1];
            assert!(a.ase + a.half_width + prev.half_width >= prev.ase, "not monotone");
        }
    }
}

#[test]
fn oqam_ceiling_per_real_symbol() {
    let sc = preset_link(Preset::FbmcOqam, 4, 0.0, 22).unwrap();
    let c = estimate_ase(&sc, &[40.0], 1, 128, 2).unwrap();
    // one bit per real symbol, two real symbols per complex slot
    assert!(c.points[0].ase <= 2.0 + 1e-9);
    assert!(c.points[0].ase > 1.8);
}

#[test]
fn bad_requests() {
    let sc = clean_link(EqualizerKind::Mmse, 0.0, 4);
    assert!(estimate_ase(&sc, &[0.0], 0, 10, 1).is_err());
    assert!(estimate_ase(&sc, &[0.0], 1, 0, 1).is_err());
    assert!(estimate_ase(&sc, &[5.0, 1.0], 1, 10, 1).is_err());
}
