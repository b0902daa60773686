//! Acceptance gate: one line per criterion, nonzero exit if any fails.
//!
//! Reference values are computed here from first principles (direct sums,
//! Simpson rules on smooth pieces, moment algebra) rather than taken from
//! the library.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use cantor_lp::fourier::{expected_mu_hat, mu_hat};
use cantor_lp::measure::{Atom, CubeMeasure};
use cantor_lp::quadrature::QuadratureSpec;
use cantor_lp::tree::BranchingSequence;
use cantor_lp::verify::{run_check, CheckResult, CheckSpec, Status, SuiteContext};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn reference() -> SuiteContext {
    SuiteContext {
        seq: BranchingSequence::new(1, 4.0, 6.0, vec![32, 64, 64, 64], 4),
        seed: 1,
        quadrature: QuadratureSpec::default(),
    }
}

fn run(name: &str) -> CheckResult {
    let r = run_check(&CheckSpec::named(name).unwrap(), &reference());
    assert_eq!(
        r.status,
        Status::Pass,
        "{name}: {:?} {:?}",
        r.status,
        r.details
    );
    r
}

fn value(r: &CheckResult, q: &str) -> f64 {
    r.value(q)
        .unwrap_or_else(|| panic!("{} has no quantity {q}", r.name))
}

fn sinc(t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        (PI * t).sin() / (PI * t)
    }
}

/// Composite Simpson rule with `n` (even) intervals.
fn simpson<T>(f: impl Fn(f64) -> T, a: f64, b: f64, n: usize) -> T
where
    T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Copy,
{
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s = s + f(a + i as f64 * h) * w;
    }
    s * (h / 3.0)
}

fn log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn c1_exact_identities() -> String {
    let mass = run("check_layer_mass");
    let cover = run("check_covering_sum");
    // Completed layers of M = (32, 64, 64, ...) hold 32 * 64^(n-1) equal cubes.
    for n in 1..=3usize {
        let count = 32.0 * 64f64.powi(n as i32 - 1);
        assert_eq!(count * (1.0 / count), 1.0);
        assert!((value(&mass, &format!("layer_{n}_sum")) - 1.0).abs() <= 1e-12);
        assert_eq!(value(&mass, &format!("layer_{n}_exact_deviation")), 0.0);
        let want = (n as f64).powf(-0.5);
        let got = value(&cover, &format!("layer_{n}_sum"));
        assert!((got - want).abs() <= 1e-12, "layer {n}: {got} vs {want}");
    }
    format!("layer 3 covering sum {:.15}", value(&cover, "layer_3_sum"))
}

fn c2_fourier_oracle() -> String {
    run("check_fourier_oracle");
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..4 {
        let n = rng.gen_range(1..=8);
        let atoms: Vec<Atom> = (0..n)
            .map(|_| {
                let side = rng.gen_range(0.01..0.5);
                Atom::new(vec![rng.gen_range(0.0..1.0 - side)], side, 1.0 / n as f64)
            })
            .collect();
        let mu = CubeMeasure::new(1, atoms.clone()).unwrap();
        for _ in 0..25 {
            let xi = rng.gen_range(-50.0..50.0);
            // Brute force: int e^{-2 pi i x xi} dmu over each atom's density.
            let brute: Complex64 = atoms
                .iter()
                .map(|a| {
                    let density = a.mass / a.side;
                    simpson(
                        |x| Complex64::from_polar(density, -2.0 * PI * x * xi),
                        a.corner[0],
                        a.corner[0] + a.side,
                        4000,
                    )
                })
                .sum();
            let got = mu_hat(&mu, &[xi]);
            worst = worst.max((got - brute).norm() / brute.norm());
        }
    }
    assert!(worst < 1e-6, "max relative error {worst}");
    format!("100 frequencies, max rel err {worst:.2e}")
}

fn c3_expectation_identity() -> String {
    run("check_expectation_identity");
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let rhos = [0.05f64, 0.1, 0.25, 0.4];
    for i in 0..50 {
        let rho = rhos[i % rhos.len()];
        // Density of beta + rho U: the overlap of [0, 1 - rho] and [x - rho, x]
        // divided by rho (1 - rho); linear on each of three pieces.
        let density =
            |x: f64| ((1.0 - rho).min(x) - (x - rho).max(0.0)).max(0.0) / (rho * (1.0 - rho));
        let xi: f64 = rng.gen_range(-20.0..20.0);
        let f = |x: f64| Complex64::from_polar(density(x), -2.0 * PI * x * xi);
        let brute = simpson(f, 0.0, rho, 20_000)
            + simpson(f, rho, 1.0 - rho, 20_000)
            + simpson(f, 1.0 - rho, 1.0, 20_000);
        let got = expected_mu_hat(rho, &[xi]).unwrap();
        worst = worst.max((got - brute).norm() / brute.norm());
    }
    assert!(worst < 1e-8, "max relative error {worst}");

    // The mean over draws does not depend on M.
    let (rho, xi) = (0.2, 1.7);
    let want = expected_mu_hat(rho, &[xi]).unwrap();
    for m in [1usize, 2, 16] {
        let draws = 20_000;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut sq = 0.0;
        for _ in 0..draws {
            let z: Complex64 = (0..m)
                .map(|_| {
                    let beta: f64 = rng.gen_range(0.0..1.0 - rho);
                    let x = beta + rho / 2.0;
                    Complex64::from_polar(sinc(rho * xi), -2.0 * PI * x * xi)
                })
                .sum::<Complex64>()
                / m as f64;
            acc += z;
            sq += (z - want).norm_sqr();
        }
        let mean = acc / draws as f64;
        let se = (sq / draws as f64 / draws as f64).sqrt();
        assert!((mean - want).norm() < 5.0 * se, "M = {m}: {mean} vs {want}");
    }
    format!("50 frequencies, rel err {worst:.2e} against the ramp density")
}

/// `int E|mu_hat - E mu_hat|^4` for `d = 1` from the moments of one summand
/// `X = a (e_beta - phi)`:
/// `E|S|^4 = [M E|X|^4 + 2M(M-1) (E|X|^2)^2 + M(M-1) |E X^2|^2] / M^4`.
fn np_exact(m: f64, rho: f64) -> f64 {
    let lam = |t: f64| Complex64::from_polar(sinc(t), -PI * t);
    let integrand = |xi: f64| {
        let a = lam(rho * xi);
        let phi = lam((1.0 - rho) * xi);
        let phi2 = lam(2.0 * (1.0 - rho) * xi);
        let p2 = phi.norm_sqr();
        let a2 = a.norm_sqr();
        let e2 = a2 * (1.0 - p2);
        let ex2 = (a * a * (phi2 - phi * phi)).norm();
        let e4 = a2
            * a2
            * ((1.0 + p2).powi(2) - 4.0 * (1.0 + p2) * p2
                + 2.0 * p2
                + 2.0 * (phi2 * phi.conj() * phi.conj()).re);
        (m * e4 + 2.0 * m * (m - 1.0) * e2 * e2 + m * (m - 1.0) * ex2 * ex2) / m.powi(4)
    };
    2.0 * simpson(integrand, 0.0, 4000.0, 800_000)
}

fn c4_np_scaling() -> String {
    let r = run("check_np_scaling");
    let ms = value(&r, "m_slope");
    let rs = value(&r, "rho_slope");
    assert!((ms + 2.0).abs() <= 0.15, "slope in M {ms}");
    assert!((rs + 1.0).abs() <= 0.3, "slope in rho {rs}");

    let sweep = r.sweep("np_scaling_m").unwrap();
    let (m, v, e) = (
        sweep.column("M").unwrap(),
        sweep.column("value").unwrap(),
        sweep.column("stderr").unwrap(),
    );
    let mut exact = Vec::new();
    for i in 0..m.len() {
        let want = np_exact(m[i], 0.1);
        assert!(
            (v[i] - want).abs() <= 4.0 * e[i] + 2e-3 * want,
            "M = {}: {} +- {} vs exact {want}",
            m[i],
            v[i],
            e[i]
        );
        exact.push((m[i], want));
    }
    let exact_slope = log_slope(&exact);
    assert!(
        (exact_slope + 2.0).abs() < 0.05,
        "exact slope {exact_slope}"
    );
    format!("slopes {ms:.3} (M), {rs:.3} (rho); exact-moment slope {exact_slope:.3}")
}

fn c5_ooo_scaling() -> String {
    let r = run("check_ooo_scaling");
    let slope = value(&r, "slope");
    assert!((slope - 0.75).abs() <= 0.1, "slope {slope}");
    // |lambda0_hat(xi) - E mu_hat(xi)| = |sinc(xi) - sinc(rho xi) sinc((1-rho) xi)|.
    let pts: Vec<(f64, f64)> = [0.02, 0.04, 0.08, 0.16]
        .iter()
        .map(|&rho| {
            let f = |x: f64| (sinc(x) - sinc(rho * x) * sinc((1.0 - rho) * x)).powi(4);
            (rho, (2.0 * simpson(f, 0.0, 2000.0, 2_000_000)).powf(0.25))
        })
        .collect();
    let own = log_slope(&pts);
    assert!((own - 0.75).abs() <= 0.1, "oracle slope {own}");
    assert!((own - slope).abs() < 0.01, "check {slope} vs oracle {own}");
    format!("slope {slope:.4}, oracle {own:.4}")
}

fn c6_ep_bound() -> String {
    let r = run("check_ep_bound");
    let c = value(&r, "constant");
    assert_eq!(value(&r, "envelope_violations"), 0.0);
    assert_eq!(value(&r, "product_envelope_violations"), 0.0);
    let mut own = Vec::new();
    for &rho in &[0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.45] {
        let f = |x: f64| (sinc(rho * x) * sinc((1.0 - rho) * x)).powi(4);
        let v = 2.0 * simpson(f, 0.0, 4000.0, 4_000_000);
        assert!(v <= c * (1.0 + 1e-3), "rho = {rho}: {v} above {c}");
        own.push((rho, v));
    }
    let slope = log_slope(&own);
    assert!(slope >= -0.1, "decreasing trend {slope}");
    // Pointwise: |E mu_hat(xi)| <= min(1, 1/(pi (1-rho) |xi|)).
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let mut violations = 0;
    for _ in 0..10_000 {
        let rho = rng.gen_range(0.01..0.49);
        let xi: f64 = rng.gen_range(-200.0..200.0);
        let env = (1.0f64).min(1.0 / (PI * (1.0 - rho) * xi.abs()));
        if expected_mu_hat(rho, &[xi]).unwrap().norm() > env * (1.0 + 1e-12) {
            violations += 1;
        }
    }
    assert_eq!(violations, 0);
    format!("constant {c:.4}, oracle log-slope {slope:.3}, 0 of 10^4 violations")
}

fn c7_mz() -> String {
    let r = run("check_mz");
    // E S^4 for Rademacher sums by direct summation over the binomial law.
    for m in [4u32, 16, 256] {
        let mut s = 0.0;
        let mut logc = 0.0f64;
        for k in 0..=m {
            if k > 0 {
                logc += ((m - k + 1) as f64).ln() - (k as f64).ln();
            }
            let x = 2.0 * k as f64 - m as f64;
            s += (logc - m as f64 * 2f64.ln()).exp() * x.powi(4);
        }
        let mf = m as f64;
        assert!((s - (3.0 * mf * mf - 2.0 * mf)).abs() < 1e-9 * s);
    }
    let limit = value(&r, "bernoulli_ratio_limit");
    assert!((limit - 3.0).abs() <= 0.1, "{limit}");
    let slope = value(&r, "uniform_slope");
    assert!(slope.abs() <= 0.1, "{slope}");
    // Uniform on [-1, 1]: E S^4 = M/5 + M(M-1)/3, so ratio 1/M + 5(M-1)/(3M).
    let sw = r.sweep("mz_uniform").unwrap();
    let (m, ratio, err) = (
        sw.column("M").unwrap(),
        sw.column("ratio").unwrap(),
        sw.column("ratio_stderr").unwrap(),
    );
    for i in 0..m.len() {
        let want = 1.0 / m[i] + 5.0 * (m[i] - 1.0) / (3.0 * m[i]);
        assert!(
            (ratio[i] - want).abs() < 5.0 * err[i],
            "M = {}: {} vs {want}",
            m[i],
            ratio[i]
        );
    }
    format!("Rademacher ratio {limit:.4}, uniform slope {slope:.4}")
}

fn c8_ras() -> String {
    let r = run("check_ras_increment");
    assert_eq!(value(&r, "lp1_strictly_decreasing"), 1.0);
    let lp1 = r
        .sweep("ras_increment")
        .unwrap()
        .column("lp1_power")
        .unwrap();
    assert!(lp1.windows(2).all(|w| w[1] < w[0]), "{lp1:?}");
    let s = value(&r, "ratio_slope");
    assert!(s <= 0.15);
    // b^p l^{-d-p/p'} r^{p/p'} at the root: r = M^{-1}, p/p' = 3.
    let last = value(&r, "second_term_last");
    assert!((last - 64f64.powi(-6)).abs() < 1e-12 * last);
    format!(
        "ratio slope {s:.3}, max ratio {:.3}",
        value(&r, "ratio_max")
    )
}

fn c9_pre_selection() -> String {
    let r = run("check_pre_selection");
    let rate = value(&r, "acceptance_rate");
    // Markov: P(X > 3 EX) < 1/3 for each norm; union bound leaves 1/3.
    let markov = 1.0 - 2.0 / 3.0;
    assert!((value(&r, "markov_rate") - markov).abs() < 1e-15);
    assert!(rate >= 0.2, "{rate}");
    format!("acceptance {rate:.2} over 100 trials (union bound {markov:.3})")
}

fn c10_series() -> String {
    let r = run("check_series_bound");
    let s: f64 = (0..=40).map(|n| (n + 1) as f64 / 2f64.powi(n)).sum();
    // Remainder sum_{n > N} (n+1) 2^{-n} = (N+3) 2^{-N}.
    assert!(((4.0 - s) - 43.0 / 2f64.powi(40)).abs() < 1e-14);
    assert!((s - 4.0).abs() <= 1e-10);
    assert!((value(&r, "partial_sum_40") - s).abs() < 1e-14);
    for n in 0..=3 {
        let q = r.quantity(&format!("layer_{n}_sum")).unwrap();
        assert_eq!(q.ok, Some(true));
    }
    format!("partial sum at N = 40 is 4 - {:.2e}", 4.0 - s)
}

fn c11_pplus() -> String {
    let r = run("check_pplus");
    let v = value(&r, "sum_lp_power_last");
    // Disjoint supports: ||f||^4 + ||g_j||^4 = 1 + 1.
    assert!(v <= 2.0 + 1e-3, "{v}");
    assert!((v - 2.0).abs() < 1e-12);
    format!("||f + g_1024||_4^4 = {v}")
}

fn c12_determinism() -> String {
    let exe = env!("CARGO_BIN_EXE_cantor-lp");
    let dir = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("run{i}"));
        let status = Command::new(exe)
            .args(["verify", "--seed", "1", "--out"])
            .arg(&out)
            .output()
            .unwrap();
        assert_eq!(
            status.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&status.stderr)
        );
        reports.push(std::fs::read(out.join("report.json")).unwrap());
        let mut tables: Vec<_> = std::fs::read_dir(out.join("tables"))
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        tables.sort();
        for t in tables {
            reports.push(std::fs::read(&t).unwrap());
        }
    }
    let half = reports.len() / 2;
    assert_eq!(reports[..half], reports[half..]);
    format!(
        "{} identical files, report {} bytes",
        half,
        reports[0].len()
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> String);
    let criteria: [Criterion; 12] = [
        ("exact layer and covering identities", c1_exact_identities),
        (
            "closed-form transform against brute force",
            c2_fourier_oracle,
        ),
        ("expected transform identity", c3_expectation_identity),
        ("deviation scaling in M and rho", c4_np_scaling),
        ("mean-transform approximation rate", c5_ooo_scaling),
        ("bounded L_4 norm of the mean transform", c6_ep_bound),
        ("moment inequality", c7_mz),
        ("increment growth at the root", c8_ras),
        ("pilot-threshold acceptance rate", c9_pre_selection),
        ("layer series bound", c10_series),
        ("asymptotic additivity of L_p^p", c11_pplus),
        ("byte-identical verify reports", c12_determinism),
    ];
    let list = std::env::args().any(|a| a == "--list");
    if list {
        for (i, (name, _)) in criteria.iter().enumerate() {
            println!("criterion_{}: {name}", i + 1);
        }
        return;
    }
    println!("running {} acceptance criteria", criteria.len());
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS {:>2} {name} ({secs:.1}s): {msg}", i + 1),
            Err(e) => {
                failed += 1;
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("FAIL {:>2} {name} ({secs:.1}s): {msg}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
