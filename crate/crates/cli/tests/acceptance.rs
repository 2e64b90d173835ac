//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary so
//! the lines show up under `cargo test` without `--nocapture`.

use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use cwspin_core::oracle::{
    brute_force_free_energy, enumerate, exact_free_energy, paramagnet_gaussian_check,
};
use cwspin_core::solver::{
    critical_coupling, critical_temperature, minimize, spinodal_temperature, Classification,
};
use cwspin_core::{
    FiniteNEnsemble, FreeEnergy, ModelParams, MomentVector, SpinQuantum, SpinSystem, TrigPoly,
    WeightVector,
};

const BIN: &str = env!("CARGO_BIN_EXE_cwspin");

type InverseRows = Vec<(u32, Vec<Vec<f64>>)>;
type MapRows = Vec<(u32, Vec<(f64, Vec<f64>)>)>;
type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() < tol
}

fn reference(t: f64) -> ModelParams {
    ModelParams::new(SpinQuantum::ONE, 0.0, 1.0, t)
}

fn spin(twice_l: u32) -> SpinQuantum {
    SpinQuantum::new(twice_l).unwrap()
}

fn run_cli(args: &[&str]) -> (Vec<u8>, bool) {
    let out = Command::new(BIN).args(args).output().expect("cwspin runs");
    (out.stdout, out.status.success())
}

fn critical_temperatures() -> Outcome {
    let start = Instant::now();
    let ms = spinodal_temperature(&reference(0.2)).unwrap();
    let c = critical_temperature(&reference(0.2)).unwrap();
    let elapsed = start.elapsed();
    let (t_ms, m_ms) = (ms.value, ms.order_param.as_slice()[1]);
    let (t_c, m_c) = (c.value, c.order_param.as_slice()[1]);
    let tol = 5e-6;
    check(
        within(t_ms, 0.328257, tol)
            && within(m_ms, 0.0634132, tol)
            && within(t_c, 0.228165, tol)
            && within(m_c, 0.00304442, tol)
            && elapsed < Duration::from_secs(5),
        format!(
            "T_ms = {t_ms:.7}, m2_ms = {m_ms:.7}, T_c = {t_c:.7}, m2_c = {m_c:.8}, {elapsed:.2?}"
        ),
    )
}

fn critical_coupling_at_04() -> Outcome {
    let p = critical_coupling(&reference(0.4)).unwrap();
    let (g_c, barrier) = (p.value, p.order_param.as_slice()[1]);
    let half = critical_coupling(&reference(0.2)).unwrap();
    check(
        within(g_c, 0.170642, 5e-6) && within(barrier, 0.4352046, 5e-6),
        format!(
            "g_c(0.4) = {g_c:.7} at m2 = {barrier:.7}, target 0.170642 at 0.4352046 \
             (T = 0.2 gives 2 g_c = {:.6} at m2 = {:.7})",
            2.0 * half.value,
            half.order_param.as_slice()[1]
        ),
    )
}

fn figure_one_state() -> Outcome {
    let minima = minimize(&reference(0.2)).unwrap();
    let global = minima.iter().find(|m| {
        m.classification == Classification::Global && m.m_star.as_slice()[0].abs() < 1e-8
    });
    let para = minima
        .iter()
        .find(|m| (m.m_star.as_slice()[1] - 2.0 / 3.0).abs() < 1e-6);
    let (Some(global), Some(para)) = (global, para) else {
        return check(false, "global or paramagnetic minimum missing");
    };
    let m2 = global.m_star.as_slice()[1];
    let mut ok = within(m2, 0.00114849, 1e-6)
        && within(global.f_value, -0.2502251, 1e-6)
        && para.classification == Classification::Local
        && within(para.f_value, -0.219722, 1e-6);
    let mut worst = 0.0f64;
    for sign in [1.0, -1.0] {
        let want = [sign * (1.0 - 1.5 * m2), 1.0 - m2 / 2.0];
        match minima.iter().find(|m| m.m_star.as_slice()[0] * sign > 0.5) {
            Some(img) => {
                let d = (img.m_star.as_slice()[0] - want[0])
                    .abs()
                    .max((img.m_star.as_slice()[1] - want[1]).abs())
                    .max((img.f_value - global.f_value).abs());
                worst = worst.max(d);
                ok &= img.classification == Classification::Global;
            }
            None => ok = false,
        }
    }
    check(
        ok && worst < 1e-8,
        format!(
            "global (0, {m2:.8}) F = {:.7}, paramagnet F = {:.6}, orbit mismatch {worst:.1e}",
            global.f_value, para.f_value
        ),
    )
}

fn symmetry_suite() -> Outcome {
    let start = Instant::now();
    let mut worst = [0.0f64; 4];
    let mut ok = true;
    for tl in 1..=5u32 {
        let l = tl.to_string();
        let (out, success) = run_cli(&[
            "symcheck",
            "--l",
            &l,
            "--samples",
            "1000",
            "--seed",
            "7",
            "--g",
            "0.3",
            "--j2",
            "0.2",
        ]);
        ok &= success;
        let report: Value = serde_json::from_slice(&out).unwrap_or(Value::Null);
        for (i, key) in [
            "sector_shift",
            "map_order",
            "paramagnet_fixed",
            "weights_roundtrip",
        ]
        .iter()
        .enumerate()
        {
            match report["results"][key]["max_deviation"].as_f64() {
                Some(d) => worst[i] = worst[i].max(d),
                None => ok = false,
            }
        }
    }
    let elapsed = start.elapsed();
    check(
        ok && worst[0] < 1e-9
            && worst[1] < 1e-9
            && worst[2] < 1e-10
            && worst[3] < 1e-9
            && elapsed < Duration::from_secs(10),
        format!(
            "shift {:.1e}, map order {:.1e}, paramagnet {:.1e}, roundtrip {:.1e}, {elapsed:.2?}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn q(n: f64, d: f64) -> f64 {
    n / d
}

fn closed_forms() -> Outcome {
    let mut worst = 0.0f64;
    let mut cmp = |got: &[f64], want: &[f64]| {
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(want) {
            worst = worst.max((g - w).abs());
        }
    };
    let (r2, r3, r5) = (2f64.sqrt(), 3f64.sqrt(), 5f64.sqrt());

    let t = TrigPoly::new(spin(2));
    cmp(&t.cos_coeffs, &[1.0, 0.0, -1.5]);
    cmp(&t.sin_coeffs, &[0.0, r3 / 2.0, 0.0]);
    let t = TrigPoly::new(spin(3));
    cmp(&t.cos_coeffs, &[5.0 / (4.0 * r2), 0.0, -1.0 / r2, 0.0]);
    cmp(
        &t.sin_coeffs,
        &[0.0, 13.0 / (6.0 * r2), 0.0, -4.0 / (6.0 * r2)],
    );
    let t = TrigPoly::new(spin(4));
    cmp(
        &t.cos_coeffs,
        &[
            1.0,
            0.0,
            -(75.0 - 17.0 * r5) / 48.0,
            0.0,
            5.0 * (3.0 - r5) / 48.0,
        ],
    );
    cmp(
        &t.sin_coeffs,
        &[
            0.0,
            (2.0 * (325.0 + 31.0 * r5)).sqrt() / 24.0,
            0.0,
            -(10.0 * (5.0 - r5)).sqrt() / 24.0,
            0.0,
        ],
    );
    let t = TrigPoly::new(spin(5));
    cmp(
        &t.cos_coeffs,
        &[
            441.0 / 256.0 / r3,
            0.0,
            -29.0 / 32.0 / r3,
            0.0,
            1.0 / 16.0 / r3,
            0.0,
        ],
    );
    cmp(
        &t.sin_coeffs,
        &[0.0, 2009.0 / 1920.0, 0.0, -3.0 / 16.0, 0.0, 1.0 / 120.0],
    );

    let inverse: InverseRows = vec![
        (
            2,
            vec![
                vec![0.0, -0.5, 0.5],
                vec![1.0, 0.0, -1.0],
                vec![0.0, 0.5, 0.5],
            ],
        ),
        (
            3,
            vec![
                vec![q(-3., 48.), q(2., 48.), q(12., 48.), q(-8., 48.)],
                vec![q(9., 16.), q(-18., 16.), q(-4., 16.), q(8., 16.)],
                vec![q(9., 16.), q(18., 16.), q(-4., 16.), q(-8., 16.)],
                vec![q(-3., 48.), q(-2., 48.), q(12., 48.), q(8., 48.)],
            ],
        ),
        (
            4,
            vec![
                vec![0.0, q(2., 24.), q(-1., 24.), q(-2., 24.), q(1., 24.)],
                vec![0.0, q(-4., 6.), q(4., 6.), q(1., 6.), q(-1., 6.)],
                vec![1.0, 0.0, q(-5., 4.), 0.0, q(1., 4.)],
                vec![0.0, q(4., 6.), q(4., 6.), q(-1., 6.), q(-1., 6.)],
                vec![0.0, q(-2., 24.), q(-1., 24.), q(2., 24.), q(1., 24.)],
            ],
        ),
        (5, {
            let half = |s: f64| {
                vec![
                    q(75., 128.),
                    s * q(75., 64.),
                    q(-17., 48.),
                    -s * q(17., 24.),
                    q(1., 24.),
                    s * q(1., 12.),
                ]
            };
            let three = |s: f64| {
                vec![
                    q(-25., 256.),
                    -s * q(25., 384.),
                    q(13., 32.),
                    s * q(13., 48.),
                    q(-1., 16.),
                    -s * q(1., 24.),
                ]
            };
            let five = |s: f64| {
                vec![
                    q(3., 256.),
                    s * q(3., 640.),
                    q(-5., 96.),
                    -s * q(1., 48.),
                    q(1., 48.),
                    s * q(1., 120.),
                ]
            };
            vec![
                five(-1.),
                three(-1.),
                half(-1.),
                half(1.),
                three(1.),
                five(1.),
            ]
        }),
    ];
    for (tl, rows) in &inverse {
        let sys = SpinSystem::new(spin(*tl));
        for (i, row) in rows.iter().enumerate() {
            cmp(sys.inverse().row(i), row);
        }
    }

    let maps: MapRows = vec![
        (2, vec![(1.0, vec![-0.5, -1.5]), (1.0, vec![0.5, -0.5])]),
        (
            3,
            vec![
                (1.25, vec![q(7., 6.), -1.0, q(-2., 3.)]),
                (1.25, vec![q(13., 6.), 0.0, q(-2., 3.)]),
                (q(35., 16.), vec![q(91., 24.), q(-7., 4.), q(-13., 6.)]),
            ],
        ),
        (
            4,
            vec![
                (1.0, vec![q(17., 12.), q(5., 24.), q(-5., 12.), q(-5., 24.)]),
                (
                    1.0,
                    vec![q(29., 12.), q(29., 24.), q(-5., 12.), q(-5., 24.)],
                ),
                (
                    1.0,
                    vec![q(71., 12.), q(107., 24.), q(-23., 12.), q(-35., 24.)],
                ),
                (
                    1.0,
                    vec![q(113., 12.), q(209., 24.), q(-17., 12.), q(-41., 24.)],
                ),
            ],
        ),
        (
            5,
            vec![
                (
                    q(119., 128.),
                    vec![
                        q(311., 320.),
                        q(5., 16.),
                        q(1., 8.),
                        q(-1., 8.),
                        q(-1., 20.),
                    ],
                ),
                (
                    q(119., 128.),
                    vec![
                        q(631., 320.),
                        q(21., 16.),
                        q(1., 8.),
                        q(-1., 8.),
                        q(-1., 20.),
                    ],
                ),
                (
                    q(161., 512.),
                    vec![
                        q(3489., 1280.),
                        q(387., 64.),
                        q(71., 32.),
                        q(-39., 32.),
                        q(-39., 80.),
                    ],
                ),
                (
                    q(-77., 256.),
                    vec![
                        q(2227., 640.),
                        q(377., 32.),
                        q(101., 16.),
                        q(-21., 16.),
                        q(-37., 40.),
                    ],
                ),
                (
                    q(-12901., 2048.),
                    vec![
                        q(10651., 5120.),
                        q(10865., 256.),
                        q(2941., 128.),
                        q(-1021., 128.),
                        q(-1341., 320.),
                    ],
                ),
            ],
        ),
    ];
    for (tl, rows) in &maps {
        let sys = SpinSystem::new(spin(*tl));
        let map = sys.permutation_map_m();
        for (k, (offset, row)) in rows.iter().enumerate() {
            cmp(&[map.offset[k]], &[*offset]);
            cmp(map.matrix.row(k), row);
        }
    }
    check(
        worst < 1e-10,
        format!("largest coefficient deviation {worst:.1e} over l = 1, 3/2, 2, 5/2"),
    )
}

fn derivatives() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut g_err, mut h_err) = (0.0f64, 0.0f64);
    for tl in 1..=5u32 {
        let l = spin(tl);
        for _ in 0..100 {
            let raw: Vec<f64> = (0..l.n_states())
                .map(|_| rng.gen_range(0.05..1.0))
                .collect();
            let total: f64 = raw.iter().sum();
            let x = WeightVector::new(l, raw.iter().map(|v| v / total).collect()).unwrap();
            let sys = SpinSystem::new(l);
            let m = sys.weights_to_moments(&x).unwrap();
            let twice_s = l
                .spectrum_twice()
                .nth(rng.gen_range(0..l.n_states()))
                .unwrap();
            let params = ModelParams::new(
                l,
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.0..2.0),
                rng.gen_range(0.05..1.5),
            )
            .with_coupling(rng.gen_range(0.0..1.0), twice_s);
            let f = FreeEnergy::new(params).unwrap();
            let eval = f.evaluate(&m).unwrap();
            let (grad, hess) = (eval.gradient.unwrap(), eval.hessian.unwrap());
            let shifted = |i: usize, h: f64| {
                let mut v = m.as_slice().to_vec();
                v[i] += h;
                MomentVector::new(l, v).unwrap()
            };
            for i in 0..l.n_moments() {
                let h = 1e-6 * (1.0 + m.as_slice()[i].abs());
                let fd = (f.value(&shifted(i, h)).unwrap() - f.value(&shifted(i, -h)).unwrap())
                    / (2.0 * h);
                g_err = g_err.max((fd - grad[i]).abs() / grad[i].abs().max(1.0));
                let gp = f.evaluate(&shifted(i, h)).unwrap().gradient.unwrap();
                let gm = f.evaluate(&shifted(i, -h)).unwrap().gradient.unwrap();
                for j in 0..l.n_moments() {
                    let fd = (gp[j] - gm[j]) / (2.0 * h);
                    h_err = h_err.max((fd - hess[(i, j)]).abs() / hess[(i, j)].abs().max(1.0));
                }
            }
        }
    }
    // Spin-1 stability diagonals on m1 = 0.
    let mut diag_err = 0.0f64;
    let (j2, j4) = (0.1, 1.0);
    for &(t, m2) in &[(0.2, 0.00114849), (0.25, 0.05), (0.4, 0.3), (0.1, 0.8)] {
        let f = FreeEnergy::new(ModelParams::new(SpinQuantum::ONE, j2, j4, t)).unwrap();
        let h = f
            .evaluate(&MomentVector::new(SpinQuantum::ONE, vec![0.0, m2]).unwrap())
            .unwrap()
            .hessian
            .unwrap();
        let u = 1.0 - 1.5 * m2;
        let d11 = t / m2 - 0.75 * j2 - 0.75 * j4 * u * u;
        let d22 = t / (m2 * (1.0 - m2)) - 2.25 * j2 - 6.75 * j4 * u * u;
        diag_err = diag_err
            .max((h[(0, 0)] - d11).abs())
            .max((h[(1, 1)] - d22).abs());
    }
    check(
        g_err < 1e-5 && h_err < 1e-4 && diag_err < 1e-8,
        format!("gradient {g_err:.1e}, Hessian {h_err:.1e}, spin-1 diagonals {diag_err:.1e}"),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut brute = 0.0f64;
    for n in 1..=8 {
        let p = ModelParams::new(SpinQuantum::ONE, 0.3, 1.0, 0.25).with_coupling(0.1, 2);
        let exact = exact_free_energy(&FiniteNEnsemble::new(p.clone(), n).unwrap()).unwrap();
        let raw = brute_force_free_energy(&p, n).unwrap();
        brute = brute.max(((exact - raw) / raw).abs());
    }
    let mut count = 0.0f64;
    for (tl, n) in [(1u32, 40u32), (2, 100), (3, 30), (4, 20), (5, 12), (6, 8)] {
        let l = spin(tl);
        let want = n as f64 * (l.n_states() as f64).ln();
        let got = enumerate::<f64>(l, n).unwrap().ln_total_degeneracy();
        count = count.max(((got - want) / want).abs());
    }
    let f400 = exact_free_energy(&FiniteNEnsemble::new(reference(0.2), 400).unwrap()).unwrap();
    check(
        brute < 1e-12 && count < 1e-9 && within(f400, -0.2502251, 0.01),
        format!("brute force {brute:.1e}, sum of degeneracies {count:.1e}, F(N = 400) = {f400:.7}"),
    )
}

fn paramagnet_fluctuations() -> Outcome {
    let dev = paramagnet_gaussian_check::<f64>(1000).unwrap();
    check(
        dev < 0.02,
        format!("largest relative variance deviation {dev:.1e} at N = 1000"),
    )
}

fn cli_determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("cwspin-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let paths = [dir.join("a.json"), dir.join("b.json")];
    let mut ok = true;
    for p in &paths {
        ok &= run_cli(&["symcheck", "--seed", "42", "--out", p.to_str().unwrap()]).1;
    }
    let a = std::fs::read(&paths[0]).unwrap_or_default();
    let b = std::fs::read(&paths[1]).unwrap_or_default();
    let identical = !a.is_empty() && a == b;
    let start = Instant::now();
    let (grid, success) = run_cli(&["landscape", "--resolution", "201"]);
    let elapsed = start.elapsed();
    let rows = grid.iter().filter(|&&c| c == b'\n').count();
    std::fs::remove_dir_all(&dir).ok();
    check(
        ok && identical && success && rows == 201 * 201 + 4 && elapsed < Duration::from_secs(10),
        format!("symcheck reports identical: {identical}, landscape 201 x 201 in {elapsed:.2?}"),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1  critical temperatures", critical_temperatures),
        ("1  critical coupling at T = 0.4", critical_coupling_at_04),
        ("2  T = 0.2 minima and orbit", figure_one_state),
        ("3  symmetry suite", symmetry_suite),
        ("4  closed forms", closed_forms),
        ("5  derivatives", derivatives),
        ("6  oracle equivalence", oracle_equivalence),
        ("7  paramagnet fluctuations", paramagnet_fluctuations),
        ("8  CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let outcome = run();
        println!(
            "{} {name}: {}",
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail
        );
        failed += usize::from(!outcome.pass);
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
