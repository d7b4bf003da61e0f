//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 on any failure.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use statrs::function::gamma::ln_gamma;

use thetalat::asymptotics::{df_contour, df_estimate, poincare_estimate};
use thetalat::corpus::generate_ranks;
use thetalat::enumeration::{
    enumerate_ball_with, first_minimum, h0_ar, successive_minima_with, EnumerationConfig,
};
use thetalat::lattice::{Lattice, OrthogonalLattice};
use thetalat::rational::{rat, Rational};
use thetalat::reduction::hkz_reduce;
use thetalat::thermo::{
    an_exact, builtin_gaussian, builtin_geometric, builtin_oscillator, entropy, from_lattice, lattice_measure_for,
    legendre_roundtrip, log_binomial, profile, second_law_check, zero_temperature_report, DiscreteMeasure,
    PowerTable,
};
use thetalat::theta::{comparison_audit, theta_with, transference_audit, ThetaOptions};
use thetalat::Verdict;

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: u64) -> std::result::Result<(), String> {
    ensure(elapsed <= Duration::from_secs(limit_s), || format!("runtime {elapsed:.1?} exceeds {limit_s} s"))
}

fn e<E: std::fmt::Display>(x: E) -> String {
    x.to_string()
}

/// 50 lattices of each rank 2..=6, entries in [−3, 3].
fn main_corpus() -> Vec<Lattice> {
    generate_ranks(2024, 2..=6, 50, 3).expect("corpus")
}

fn small_corpus(max_rank: usize, per_rank: usize) -> Vec<Lattice> {
    generate_ranks(99, 1..=max_rank, per_rank, 3).expect("corpus")
}

fn c1_hkz() -> Check {
    let start = Instant::now();
    let corpus = main_corpus();
    let mut worst: f64 = 0.0;
    for (i, l) in corpus.iter().enumerate() {
        let r = hkz_reduce(l).map_err(e)?;
        ensure(r.is_unimodular(), || format!("item {i}: reduced basis is not a basis"))?;
        ensure(r.product_bound_holds(l), || format!("item {i}: product bound fails"))?;
        worst = worst.max(r.product_ratio(l));
    }
    within(start.elapsed(), 60)?;
    Ok(format!("{} lattices, max ratio {worst:.4}, {:.1?}", corpus.len(), start.elapsed()))
}

fn log_ball_volume(n: f64) -> f64 {
    0.5 * n * PI.ln() - ln_gamma(0.5 * n + 1.0)
}

fn c2_minkowski() -> Check {
    let mut worst = f64::NEG_INFINITY;
    for (i, l) in main_corpus().iter().enumerate() {
        let n = l.rank() as f64;
        let lam = first_minimum(l).map_err(e)?.value;
        let rhs = 2.0 * (-(log_ball_volume(n)) / n).exp() * l.covolume().powf(1.0 / n);
        ensure(lam <= rhs * (1.0 + 1e-12), || format!("item {i}: lambda_1 {lam} > {rhs}"))?;
        worst = worst.max(lam / rhs);
    }
    let n = 400.0;
    let ratio = 2.0 * (-log_ball_volume(n) / n).exp() / (2.0 * n / (std::f64::consts::E * PI)).sqrt();
    ensure((0.98..=1.02).contains(&ratio), || format!("asymptotic ratio {ratio} at n=400"))?;
    Ok(format!("max lambda_1/bound {worst:.4}; n=400 ratio {ratio:.6}"))
}

/// Direct series only, with an absolute tolerance of 1e-12 times a pilot value.
fn theta_direct(l: &Lattice, t: f64) -> std::result::Result<f64, String> {
    let coarse = ThetaOptions { tol: 1e-3, allow_poisson: false, ..Default::default() };
    let pilot = theta_with(l, t, None, &coarse).map_err(e)?.value;
    let fine = ThetaOptions { tol: 1e-12 * pilot, ..coarse };
    Ok(theta_with(l, t, None, &fine).map_err(e)?.value)
}

fn c3_poisson() -> Check {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (i, l) in small_corpus(5, 8).iter().enumerate() {
        let d = l.dual();
        let n = l.rank() as f64;
        for t in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let lhs = theta_direct(l, t)?;
            let rhs = (-l.log_covolume() - 0.5 * n * f64::ln(t)).exp() * theta_direct(&d, 1.0 / t)?;
            let r = (lhs - rhs).abs() / lhs;
            ensure(r < 1e-9, || format!("item {i} t={t}: residual {r:e}"))?;
            worst = worst.max(r);
        }
    }
    within(start.elapsed(), 30)?;
    Ok(format!("max relative residual {worst:.2e}, {:.1?}", start.elapsed()))
}

fn c4_prr() -> Check {
    let opts = ThetaOptions::default();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for l in small_corpus(4, 6) {
        for t in [-1.0, 0.0, 1.0] {
            let lt = l.twist(t);
            let h0 = theta_with(&lt, 1.0, None, &opts).map_err(e)?.log_value;
            let h1 = theta_with(&lt.dual(), 1.0, None, &opts).map_err(e)?.log_value;
            let r = (h0 - h1 - lt.degree()).abs();
            ensure(r < 1e-9, || format!("twist {t}: residual {r:e}"))?;
            worst = worst.max(r);
            count += 1;
        }
    }
    Ok(format!("{count} lattices, max residual {worst:.2e}"))
}

fn c5_transference() -> Check {
    let cfg = EnumerationConfig::default();
    let (mut sharp, mut interval, mut na) = (0, 0, 0);
    for (i, l) in small_corpus(4, 6).iter().enumerate() {
        for v in transference_audit(l, cfg).map_err(e)? {
            match v.verdict {
                Verdict::Verified => sharp += 1,
                Verdict::VerifiedUpToBound => interval += 1,
                Verdict::NotApplicable => na += 1,
                Verdict::Violated => return Err(format!("item {i}: {} lhs={} rhs={}", v.name, v.lhs, v.rhs)),
            }
        }
    }
    let mut worst: f64 = 0.0;
    for degrees in [vec![0.0, 0.0], vec![1.0, -0.5, 0.25], vec![2.0, 1.0, 0.0, -1.0], vec![0.3, 0.3, -0.7]] {
        let o = OrthogonalLattice::new(degrees).map_err(e)?;
        let l = o.to_lattice();
        let lam = successive_minima_with(&l, cfg).map_err(e)?;
        let dual = successive_minima_with(&l.dual(), cfg).map_err(e)?;
        let n = lam.len();
        for i in 0..n {
            let p = lam[i].value * dual[n - 1 - i].value;
            worst = worst.max((p - 1.0).abs());
        }
    }
    ensure(worst < 1e-12, || format!("orthogonal equality off by {worst:e}"))?;
    Ok(format!("{sharp} verified, {interval} verified_up_to_bound, {na} not_applicable; orthogonal |prod-1| {worst:.1e}"))
}

fn c6_comparison() -> Check {
    let cfg = EnumerationConfig::default();
    let mut total = 0;
    for (i, l) in small_corpus(4, 5).iter().enumerate() {
        for v in comparison_audit(l, cfg).map_err(e)? {
            ensure(!v.is_violated(), || format!("item {i}: {} lhs={} rhs={}", v.name, v.lhs, v.rhs))?;
            total += 1;
        }
    }
    let z = Lattice::identity(1);
    let rep = enumerate_ball_with(&z, &rat(1), cfg, false).map_err(e)?;
    ensure(rep.count == 3, || format!("#{{|v|^2 <= 1}} = {}", rep.count))?;
    let h_ar = h0_ar(&z, &rat(1)).map_err(e)?;
    ensure(h_ar == 3f64.ln(), || format!("h0_Ar(Z) = {h_ar}"))?;
    let th = theta_with(&z, 1.0, None, &ThetaOptions { tol: 1e-13, ..Default::default() }).map_err(e)?;
    let want = (1.0 + 2.0 * (1..=6).map(|k| (-PI * (k * k) as f64).exp()).sum::<f64>()).ln();
    ensure(th.truncation_error_bound < 1e-12, || format!("tail certificate {:e}", th.truncation_error_bound))?;
    ensure((th.log_value - want).abs() < 1e-12, || format!("h0_theta(Z) = {} vs {want}", th.log_value))?;
    Ok(format!("{total} comparison verdicts; h0_Ar(Z) = log 3, h0_theta(Z) tail {:.1e}", th.truncation_error_bound))
}

fn c7_legendre() -> Check {
    let g = profile(&builtin_geometric(4000).map_err(e)?);
    let mut worst: f64 = 0.0;
    for en in [0.5, 1.0, 2.0] {
        let s = entropy(&g, en).map_err(e)?.s;
        let want = (1.0 + en) * (1.0 + en).ln() - en * en.ln();
        worst = worst.max((s - want).abs());
    }
    ensure(worst < 1e-8, || format!("geometric entropy off by {worst:e}"))?;
    let mut lattices = vec![Lattice::identity(1), Lattice::identity(2)];
    lattices.extend(small_corpus(3, 2));
    let mut rt: f64 = 0.0;
    let betas = [0.5, 0.75, 1.0, 1.5, 2.0];
    for l in &lattices {
        let p = profile(&from_lattice(l, 0.25).map_err(e)?);
        // Geometric energy grid covering U(β) for β in [0.3, 2.5].
        let (lo, hi) = (p.u(2.5).map_err(e)?, p.u(0.3).map_err(e)?);
        let e_grid: Vec<f64> = (0..=120).map(|k| lo * (hi / lo).powf(k as f64 / 120.0)).collect();
        rt = rt.max(legendre_roundtrip(&p, &betas, &e_grid).map_err(e)?);
    }
    ensure(rt < 1e-6, || format!("round-trip residual {rt:e}"))?;
    Ok(format!("geometric max error {worst:.1e}; lattice round-trip {rt:.1e}"))
}

fn c8_convergence() -> Check {
    let start = Instant::now();
    let z = Lattice::identity(1);
    let cfg = EnumerationConfig::default();
    let k_max = 256;
    let (m, _) = lattice_measure_for(&z, PI, PI * k_max as f64 * (1.0 + 1e-9), cfg).map_err(e)?;
    let s = entropy(&profile(&m), PI).map_err(e)?.s;
    let table = PowerTable::new(&m, k_max, k_max).map_err(e)?;
    for k in [1usize, 2, 3, 4, 5] {
        let exact = h0_ar(&z.power(k), &Rational::from_integer(k.into())).map_err(e)?;
        let dp = table.log_an(k, PI).map_err(e)?;
        ensure((exact - dp).abs() < 1e-12, || format!("k={k}: DP {dp} vs enumeration {exact}"))?;
    }
    let mut prev = f64::NEG_INFINITY;
    let mut k = 1;
    while k <= k_max {
        let v = table.log_an(k, PI).map_err(e)? / k as f64;
        ensure(v >= prev - 1e-12, || format!("decrease at k={k}: {v} < {prev}"))?;
        prev = v;
        k *= 2;
    }
    let gap = s - prev;
    ensure(gap.abs() < 0.02, || format!("gap {gap} at k=256"))?;
    let mut chernoff = f64::NEG_INFINITY;
    for k in 1..=k_max {
        chernoff = chernoff.max(table.log_an(k, PI).map_err(e)? / k as f64 - s);
    }
    ensure(chernoff <= 1e-12, || format!("Chernoff violated by {chernoff}"))?;
    within(start.elapsed(), 120)?;
    Ok(format!("S(pi) = {s:.9}, gap at 256 = {gap:.5}, max (1/k)log A_k - S = {chernoff:.3e}, {:.1?}", start.elapsed()))
}

fn two_atoms() -> DiscreteMeasure {
    DiscreteMeasure::with_exact(1.0, vec![(rat(0), 1.0), (rat(1), 1.0)], false).expect("measure")
}

fn log_binomial_prefix(n: u64, k_max: u64) -> f64 {
    let terms: Vec<f64> = (0..=k_max).map(|k| log_binomial(n, k)).collect();
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
}

fn c9_darwin_fowler() -> Check {
    let m = two_atoms();
    let p = profile(&m);
    let est = df_estimate(&p, 1.0, 0.25, 400).map_err(e)?;
    let exact = log_binomial_prefix(400, 100);
    let ratio = (exact - est.log_estimate).exp();
    ensure((ratio - 1.0).abs() < 0.05, || format!("A_400/df = {ratio}"))?;
    let mut worst: f64 = 0.0;
    for en in [0.3, 0.5] {
        let c = df_contour(&m, en, 10, 200).map_err(e)?;
        let dp = an_exact(&m, en, 10).map_err(e)?.log_an;
        let rel = (c.log_value - dp).exp_m1().abs();
        ensure(rel < 1e-6, || format!("E={en}: contour vs DP relative {rel:e}"))?;
        worst = worst.max(rel);
    }
    Ok(format!("A_400/df = {ratio:.5}, contour vs DP {worst:.1e}"))
}

fn c10_poincare() -> Check {
    let m = 1.0 / (2.0 * PI);
    let g = builtin_gaussian(1, m).map_err(e)?;
    let n = 200usize;
    let mut worst: f64 = 0.0;
    for en in [0.5, 1.0, 3.0] {
        let est = poincare_estimate(&g, en, n).map_err(e)?;
        let nf = n as f64;
        let exact = 0.5 * nf * (nf * en).ln() - ln_gamma(0.5 * nf + 1.0);
        let ratio = (exact - est.log_estimate).exp();
        ensure((ratio - 1.0).abs() < 0.02, || format!("E={en}: exact/asymptotic {ratio}"))?;
        worst = worst.max((ratio - 1.0).abs());
    }
    Ok(format!("max |exact/asymptotic - 1| = {worst:.2e}"))
}

fn c11_planck() -> Check {
    let (h, nu) = (1.3, 0.7);
    let p = profile(&builtin_oscillator(h, nu, 4000).map_err(e)?);
    let hv = h * nu;
    let mut worst: f64 = 0.0;
    for k in 0..=200 {
        let beta = 0.1 * (100f64).powf(k as f64 / 200.0);
        let u = p.u(beta).map_err(e)?;
        let want = hv / 2.0 + hv * (-beta * hv).exp() / (-(-beta * hv).exp_m1());
        worst = worst.max((u - want).abs());
    }
    ensure(worst < 1e-12, || format!("max |U - closed form| = {worst:e}"))?;
    Ok(format!("max |U - closed form| = {worst:.1e} on 201 points"))
}

fn c12_second_law() -> Check {
    let cfg = EnumerationConfig::default();
    let z = Lattice::identity(1);
    let zt = z.twist(1.0);
    let (m1, _) = lattice_measure_for(&z, PI, 0.0, cfg).map_err(e)?;
    let (m2, _) = lattice_measure_for(&zt, PI, 0.0, cfg).map_err(e)?;
    let rep = second_law_check(&profile(&m1), &profile(&m2), PI, 400).map_err(e)?;
    for v in &rep.verdicts {
        ensure(v.passed(), || format!("{}: lhs={} rhs={}", v.name, v.lhs, v.rhs))?;
    }
    let sum = z.direct_sum(&zt);
    let (ms, _) = lattice_measure_for(&sum, PI, 0.0, cfg).map_err(e)?;
    let s_sum = entropy(&profile(&ms), PI).map_err(e)?.s;
    let d = (rep.s_max - s_sum).abs();
    ensure(d < 1e-6, || format!("tropical max {} vs direct-sum entropy {s_sum}", rep.s_max))?;
    let du = (rep.e1 - rep.u1).abs();
    ensure(du < 1e-6, || format!("maximizer {} vs U1 {}", rep.e1, rep.u1))?;
    Ok(format!("max = {:.10}, direct sum {s_sum:.10}, |E1 - U1| = {du:.1e}", rep.s_max))
}

fn c13_third_law() -> Check {
    let cfg = EnumerationConfig::default();
    let osc = profile(&builtin_oscillator(1.0, 1.0, 4000).map_err(e)?);
    let zl = profile(&lattice_measure_for(&Lattice::identity(1), 1.0, 0.0, cfg).map_err(e)?.0);
    let beta = 50.0;
    let mut out = Vec::new();
    for (name, p) in [("oscillator", osc), ("Z", zl)] {
        let rep = zero_temperature_report(&p, &[beta]).map_err(e)?;
        let r = rep.rows[0];
        ensure(r.beta_times_excess.abs() < 1e-6, || format!("{name}: beta(U - H_min) = {}", r.beta_times_excess))?;
        ensure(r.heat_capacity.abs() < 1e-6, || format!("{name}: heat capacity {}", r.heat_capacity))?;
        // S(U(β)) = Ψ(β) + βU(β).
        let ds = r.s_minus_log_wmin.abs();
        ensure(ds < 1e-6, || format!("{name}: |S(U) - log mu(E_min)| = {ds}"))?;
        let u = p.u(beta).map_err(e)?;
        if u > p.h_min() {
            let s = entropy(&p, u).map_err(e)?.s;
            let d = (s - p.w_min().ln()).abs();
            ensure(d < 1e-6, || format!("{name}: solved S(U) - log mu(E_min) = {d}"))?;
        }
        out.push(format!("{name}: {:.1e}/{:.1e}/{ds:.1e}", r.beta_times_excess, r.heat_capacity));
    }
    Ok(out.join("; "))
}

fn fingerprint() -> Vec<u64> {
    let cfg = EnumerationConfig::default();
    let mut fp = Vec::new();
    let ls = generate_ranks(5, [5usize, 6], 2, 3).expect("corpus");
    for l in &ls {
        let rep = enumerate_ball_with(l, &rat(30), cfg, true).expect("census");
        fp.push(rep.count);
        for w in rep.witnesses.iter().flatten() {
            fp.extend(w.iter().map(|&c| c as u64));
        }
        let th = theta_with(l, 0.7, None, &ThetaOptions::default()).expect("theta");
        fp.push(th.value.to_bits());
        let red = hkz_reduce(l).expect("hkz");
        fp.extend(red.basis.columns().into_iter().flatten().map(|c| c as u64));
        let m = from_lattice(l, 0.5).expect("measure");
        fp.extend(m.atoms().iter().map(|a| a.w.to_bits()));
    }
    let g = builtin_geometric(2000).expect("geometric");
    let a = an_exact(&g, 1.0, 700).expect("dp");
    fp.push(a.log_an.to_bits());
    let t = PowerTable::new(&two_atoms(), 600, 600).expect("table");
    fp.push(t.log_range(600, 0, 600).to_bits());
    fp
}

fn c14_determinism() -> Check {
    let run = |threads: usize| -> std::result::Result<Vec<u64>, String> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(e)?;
        Ok(pool.install(fingerprint))
    };
    let one = run(1)?;
    let four = run(4)?;
    ensure(one == four, || "outputs differ between 1 and 4 threads".into())?;
    Ok(format!("{} words identical across 1 and 4 threads", one.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 14] = [
        ("HKZ product bound", c1_hkz),
        ("Hermite-Minkowski bound", c2_minkowski),
        ("Poisson functional equation", c3_poisson),
        ("Poisson-Riemann-Roch", c4_prr),
        ("Banaszczyk transference", c5_transference),
        ("comparison bounds and Z spot values", c6_comparison),
        ("Legendre duality", c7_legendre),
        ("convergence of (1/k)h0_Ar(Z^k, k)", c8_convergence),
        ("Darwin-Fowler", c9_darwin_fowler),
        ("Poincare vs exact Gaussian", c10_poincare),
        ("Planck oscillator", c11_planck),
        ("second law", c12_second_law),
        ("third law", c13_third_law),
        ("determinism across thread counts", c14_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let t = start.elapsed();
        match res {
            Ok(d) => println!("PASS {:>2} {name}: {d} [{t:.2?}]", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {d} [{t:.2?}]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
