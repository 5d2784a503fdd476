//! End-to-end acceptance runs through the `lfl` binary. Prints one
//! `criterion N ... PASS|FAIL` line per criterion and exits non-zero if any
//! failed. Runs without the libtest harness so the lines are always shown.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use lfl_core::partitions::moments_from_cumulants;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tempfile::TempDir;

const ATOM_AT_ONE: &str = r#"jump_law = { kind = "atoms", atoms = [{ position = 1.0, weight = 1.0 }] }"#;

fn base(alpha: f64, sigma2: f64, lambda: f64, l: usize, a: f64, seed: u64, n: usize) -> String {
    format!(
        "[model]\nalpha = {alpha}\nm0 = 1.0\n\n[noise]\nsigma2 = {sigma2}\nlambda = {lambda}\n{ATOM_AT_ONE}\n\n\
         [lattice]\nd = 3\nL = {l}\na = {a}\n\n[run]\nseed = {seed}\nn_samples = {n}\n\n"
    )
}

struct Run {
    code: i32,
    out: PathBuf,
    stderr: String,
    elapsed: Duration,
}

impl Run {
    fn json(&self, name: &str) -> Value {
        let text =
            fs::read_to_string(self.out.join(name)).unwrap_or_else(|e| panic!("{name}: {e}; stderr: {}", self.stderr));
        serde_json::from_str(&text).unwrap()
    }
}

fn lfl(dir: &Path, config: &str, args: &[&str], out: &str) -> Run {
    let cfg = dir.join(format!("{out}.toml"));
    fs::write(&cfg, config).unwrap();
    let out = dir.join(out);
    let start = Instant::now();
    let o = Command::new(env!("CARGO_BIN_EXE_lfl"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    Run {
        code: o.status.code().unwrap_or(-1),
        out,
        stderr: String::from_utf8_lossy(&o.stderr).into_owned(),
        elapsed: start.elapsed(),
    }
}

static REPORTED: AtomicBool = AtomicBool::new(false);

fn verdict(n: u32, title: &str, ok: bool, detail: impl AsRef<str>) {
    REPORTED.store(true, Ordering::SeqCst);
    println!(
        "criterion {n:>2} {title}: {} ({})",
        if ok { "PASS" } else { "FAIL" },
        detail.as_ref()
    );
    assert!(ok, "criterion {n} failed: {}", detail.as_ref());
}

fn main() {
    let criteria: [(u32, fn()); 10] = [
        (1, c01_noise_characteristic_functional),
        (2, c02_two_point_function),
        (3, c03_four_point_cumulant),
        (4, c04_green_function_cross_validation),
        (5, c05_free_field_reflection_positive),
        (6, c06_steep_gaussian_witness),
        (7, c07_poisson_scan),
        (8, c08_spacelike_vanishing),
        (9, c09_moment_cumulant_combinatorics),
        (10, c10_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = Vec::new();
    for (n, run) in criteria {
        let name = format!("c{n:02}");
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        REPORTED.store(false, Ordering::SeqCst);
        if std::panic::catch_unwind(run).is_err() {
            if !REPORTED.load(Ordering::SeqCst) {
                println!("criterion {n:>2}: FAIL (aborted before a verdict, see the panic above)");
            }
            failed.push(n);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all selected criteria passed");
    } else {
        println!("acceptance: FAILED criteria {failed:?}");
        std::process::exit(1);
    }
}

fn sci(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.2e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

fn c01_noise_characteristic_functional() {
    let dir = TempDir::new().unwrap();
    let cfg = format!(
        "{}[noise_check]\nn_draws = 100000\ntest_functions = [\n\
         {{ kind = \"constant\", value = 0.05 }},\n\
         {{ kind = \"gaussian\", amplitude = 0.5, width = 0.5 }},\n\
         {{ kind = \"cosine\", amplitude = 6.0, mode = [1, 0, 2] }},\n]\n",
        base(0.75, 0.5, 1.5, 8, 0.5, 11, 1)
            .replace(ATOM_AT_ONE, r#"jump_law = { kind = "uniform", lo = 0.5, hi = 2.0 }"#)
    );
    let r = lfl(dir.path(), &cfg, &["noise-check"], "out");
    let rows = r.json("noise_check.json")["rows"].as_array().unwrap().clone();
    let zs: Vec<f64> = rows.iter().map(|r| f(&r["z"])).collect();
    let ok = r.code == 0 && rows.len() == 3 && zs.iter().all(|&z| z <= 3.0) && r.elapsed < Duration::from_secs(60);
    verdict(1, "noise law", ok, format!("z = {zs:.2?}, {:.1?}", r.elapsed));
}

fn c02_two_point_function() {
    let dir = TempDir::new().unwrap();
    let sets = "[cumulants]\npoint_sets = [\n\
        [[0,0,0],[0,0,0]], [[0,0,0],[1,0,0]], [[0,0,0],[0,1,1]], [[0,0,0],[2,0,0]],\n\
        [[0,0,0],[1,1,1]], [[0,0,0],[0,3,0]], [[0,0,0],[2,2,0]], [[0,0,0],[0,0,4]],\n]\n";
    let mut worst = Vec::new();
    let mut ok = true;
    for (name, sigma2, lambda) in [("gaussian", 1.0, 0.0), ("poisson", 0.0, 2.0)] {
        let r = lfl(
            dir.path(),
            &(base(0.75, sigma2, lambda, 16, 0.5, 5, 10_000) + sets),
            &["cumulants"],
            name,
        );
        let doc = r.json("cumulants.json");
        let rel = doc["rows"]
            .as_array()
            .unwrap()
            .iter()
            .map(|r| f(&r["relative_error"]))
            .fold(0.0, f64::max);
        ok &= r.code == 0 && rel <= 0.05 && r.elapsed < Duration::from_secs(300);
        worst.push(format!("{name} max rel {rel:.2e} in {:.1?}", r.elapsed));
    }
    verdict(2, "two-point agreement", ok, worst.join("; "));
}

fn c03_four_point_cumulant() {
    let dir = TempDir::new().unwrap();
    let sets = "[cumulants]\npoint_sets = [\n\
        [[0,0,0],[0,0,0],[0,0,0],[0,0,0]],\n\
        [[0,0,0],[0,0,0],[1,0,0],[1,0,0]],\n\
        [[0,0,0],[1,0,0],[0,1,0],[0,0,1]],\n]\n";
    let poisson = lfl(
        dir.path(),
        &(base(0.75, 0.0, 2.0, 8, 0.5, 9, 100_000) + sets),
        &["cumulants"],
        "poisson",
    );
    let gauss = lfl(
        dir.path(),
        &(base(0.75, 1.0, 0.0, 8, 0.5, 9, 100_000) + sets),
        &["cumulants"],
        "gaussian",
    );
    let p = poisson.json("cumulants.json");
    let g = gauss.json("cumulants.json");
    let rel: Vec<f64> = p["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| f(&r["relative_error"]))
        .collect();
    let z: Vec<f64> = g["rows"].as_array().unwrap().iter().map(|r| f(&r["z"]).abs()).collect();
    let exact_zero = g["rows"].as_array().unwrap().iter().all(|r| f(&r["analytic"]) == 0.0);
    let ok = poisson.code == 0
        && gauss.code == 0
        && rel.iter().all(|&e| e <= 0.15)
        && exact_zero
        && z.iter().all(|&z| z <= 4.0)
        && poisson.elapsed + gauss.elapsed < Duration::from_secs(1800);
    verdict(
        3,
        "four-point cumulant",
        ok,
        format!("lambda=2 rel {}; lambda=0 |z| {z:.2?}", sci(&rel)),
    );
}

fn c04_green_function_cross_validation() {
    let dir = TempDir::new().unwrap();
    let cfg = base(0.5, 1.0, 0.0, 48, 0.125, 1, 1)
        + "[spectral]\nq2 = [0.0, 0.01, 0.5, 1.0, 4.0, 25.0, 100.0, 1000.0]\nalphas = [0.3, 0.5, 0.75, 0.9]\n\
           separations = [[8,0,0],[0,10,0],[0,0,12],[8,8,0],[10,0,10],[14,0,0],[0,16,0],[12,12,0],[0,0,20],[24,0,0]]\n\
           kl_tolerance = 1e-6\ngreen_tolerance = 1e-3\n";
    let r = lfl(dir.path(), &cfg, &["spectral"], "out");
    let doc = r.json("spectral.json");
    let worst = |key: &str| {
        doc[key]
            .as_array()
            .unwrap()
            .iter()
            .map(|r| f(&r["relative_error"]))
            .fold(0.0, f64::max)
    };
    let (kl, green) = (worst("identity"), worst("green"));
    let ok = r.code == 0
        && doc["green"].as_array().unwrap().len() == 10
        && kl <= 1e-6
        && green <= 1e-3
        && r.elapsed < Duration::from_secs(60);
    verdict(
        4,
        "Green-function cross-validation",
        ok,
        format!("identity {kl:.1e}, separations {green:.1e}"),
    );
}

fn c05_free_field_reflection_positive() {
    let dir = TempDir::new().unwrap();
    let cfg = base(0.5, 1.0, 0.0, 16, 0.5, 3, 1)
        + "[rp]\nbasis = { kind = \"points\", points = [[1,0,0],[1,1,0],[1,0,1],[2,0,0],[2,1,1],[3,0,0]], \
           max_degree = 2, constant = true }\ncentered = true\nexpect = \"no_witness\"\n";
    let r = lfl(dir.path(), &cfg, &["rp-check"], "out");
    let doc = r.json("rp_check.json");
    let (min, norm) = (f(&doc["min_eig"]), f(&doc["norm"]));
    let ok = r.code == 0 && doc["max_degree"] == 2 && min >= -1e-8 * norm && r.elapsed < Duration::from_secs(60);
    verdict(
        5,
        "reflection positivity, free field",
        ok,
        format!("min_eig {min:.2e}, norm {norm:.2e}"),
    );
}

fn c06_steep_gaussian_witness() {
    let dir = TempDir::new().unwrap();
    let cfg = base(0.75, 1.0, 0.0, 14, 0.5, 3, 1)
        + "[rp]\nbasis = { kind = \"time_slices\", times = [1, 2, 3, 4, 5, 6] }\ncentered = true\n\
           verify_samples = 20000\ntranslation = \"time\"\nexpect = \"negative\"\n";
    let r = lfl(dir.path(), &cfg, &["rp-check"], "out");
    let doc = r.json("rp_check.json");
    let status = doc["verification"]["status"].as_str().unwrap_or("none").to_string();
    let archive = r.json("witnesses.json");
    let ok = r.code == 0
        && f(&doc["min_eig"]) < 0.0
        && status == "confirmed"
        && archive.as_array().is_some_and(|a| a.len() == 1)
        && r.elapsed < Duration::from_secs(60);
    verdict(
        6,
        "reflection positivity fails for alpha > 1/2",
        ok,
        format!(
            "relative min_eig {:.2e}, witness {status}, {:.1?}",
            f(&doc["relative_min_eig"]),
            r.elapsed
        ),
    );
}

fn c07_poisson_scan() {
    let dir = TempDir::new().unwrap();
    let cfg = base(0.5, 0.0, 1.0, 8, 0.5, 21, 1)
        + "[rp_scan]\nalphas = [0.5]\nlambdas = [1.0, 10.0, 100.0]\n\
           basis = { kind = \"points\", points = [[1,0,0],[1,1,0],[1,0,1],[1,1,1],[2,0,0],[2,1,1]], max_degree = 2, constant = false }\n\
           centered = true\nverify_samples = 20000\ntranslation = \"all\"\n\n[verify]\nn_samples = 20000\ntranslation = \"all\"\n";
    let r = lfl(dir.path(), &cfg, &["rp-scan"], "scan");
    let doc = r.json("rp_scan.json");
    let rows = doc["rows"].as_array().unwrap();
    let complete = rows.len() == 3 && rows.iter().all(|r| r["error"].is_null());
    let csv = fs::read_to_string(r.out.join("rp_scan.csv")).unwrap();
    let trajectory: Vec<String> = rows
        .iter()
        .map(|row| {
            let s = &row["summary"];
            format!(
                "lambda {}: {:.1e} {}",
                row["lambda"],
                f(&s["relative_min_eig"]),
                row["verification"]["status"].as_str().unwrap_or("-")
            )
        })
        .collect();

    // Every negative entry is archived with its re-verification, none of
    // which contradicts the analytic value.
    let negative = rows
        .iter()
        .filter(|r| r["summary"]["verdict"] == "negative_witness")
        .count();
    let mut integrity = r.code == 0 && csv.lines().count() == 4;
    if negative > 0 {
        let archive = r.json("witnesses.json");
        let recs = archive.as_array().unwrap();
        integrity &= recs.len() == negative;
        integrity &= recs
            .iter()
            .all(|w| w["verification"].is_object() && w["verification"]["status"] != "refuted");
        // An independent re-run on the archive agrees on the analytic values.
        let witness = r.out.join("witnesses.json");
        let v = lfl(
            dir.path(),
            &cfg,
            &["verify-witness", "--witness", witness.to_str().unwrap()],
            "verify",
        );
        let again = v.json("verification.json");
        let results = again["results"].as_array().unwrap();
        integrity &= (v.code == 0 || v.code == 3) && results.len() == recs.len();
        for (w, res) in recs.iter().zip(results) {
            integrity &= res["status"] != "refuted" && f(&res["analytic"]) == f(&w["verification"]["analytic"]);
        }
    } else {
        integrity &= !r.out.join("witnesses.json").exists();
    }
    verdict(
        7,
        "Poisson reflection-positivity scan",
        complete && integrity,
        trajectory.join("; "),
    );
}

fn c08_spacelike_vanishing() {
    let dir = TempDir::new().unwrap();
    let cfg =
        base(0.5, 0.0, 1.0, 8, 0.5, 2, 1) + "[baumann]\nepsilons = [0.5, 0.05, 0.005]\nsamples = 1000000\nmass = 1.0\n";
    let r = lfl(dir.path(), &cfg, &["baumann"], "out");
    let doc = r.json("baumann.json");
    let values = |k: &str| -> Vec<f64> { doc[k].as_array().unwrap().iter().map(|e| f(&e["value"])).collect() };
    let ok = r.code == 0
        && doc["verdict"] == "PASS"
        && doc["control_vanishing"] == "FAIL"
        && r.elapsed < Duration::from_secs(1800);
    verdict(
        8,
        "spacelike Wightman pairing vanishes",
        ok,
        format!(
            "spacelike {}, control {}",
            sci(&values("spacelike")),
            sci(&values("control"))
        ),
    );
}

/// Moment as the sum over all set partitions, enumerated by restricted growth strings.
fn moment_by_enumeration(n: usize, kappa: &BTreeMap<u32, f64>) -> f64 {
    fn rec(i: usize, n: usize, blocks: &mut Vec<u32>, kappa: &BTreeMap<u32, f64>) -> f64 {
        if i == n {
            return blocks.iter().map(|b| kappa[b]).product();
        }
        let mut total = 0.0;
        for j in 0..blocks.len() {
            blocks[j] |= 1 << i;
            total += rec(i + 1, n, blocks, kappa);
            blocks[j] &= !(1 << i);
        }
        blocks.push(1 << i);
        total += rec(i + 1, n, blocks, kappa);
        blocks.pop();
        total
    }
    rec(0, n, &mut Vec::new(), kappa)
}

fn c09_moment_cumulant_combinatorics() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut mismatches = 0;
    let mut checked = 0;
    for n in 1..=6usize {
        for _ in 0..100 {
            // Small integers keep every partial sum exact in f64.
            let kappa: BTreeMap<u32, f64> = (1..1u32 << n)
                .map(|m| (m, rng.random_range(-5i32..=5) as f64))
                .collect();
            let fast = moments_from_cumulants(n, |m| kappa.get(&m).copied()).unwrap();
            if fast != moment_by_enumeration(n, &kappa) {
                mismatches += 1;
            }
            checked += 1;
        }
    }
    let elapsed = start.elapsed();
    verdict(
        9,
        "moment-cumulant combinatorics",
        mismatches == 0 && elapsed < Duration::from_secs(1),
        format!("{checked} assignments, {mismatches} mismatches, {elapsed:.1?}"),
    );
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

fn c10_determinism() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let shared = d.join("shared");
    fs::create_dir_all(&shared).unwrap();

    // Shared inputs: an ensemble file and a witness archive.
    let model = base(0.75, 0.5, 1.0, 8, 0.5, 17, 200);
    let seed_run = lfl(d, &model, &["sample"], "seed_sample");
    assert_eq!(seed_run.code, 0, "{}", seed_run.stderr);
    let ensemble = shared.join("ensemble.lflb");
    fs::copy(seed_run.out.join("ensemble.lflb"), &ensemble).unwrap();
    let rp = "[rp]\nbasis = { kind = \"time_slices\", times = [1, 2, 3] }\nverify_samples = 400\n";
    let seed_rp = lfl(d, &(model.clone() + rp), &["rp-check"], "seed_rp");
    let witness = shared.join("witnesses.json");
    fs::copy(seed_rp.out.join("witnesses.json"), &witness).unwrap();

    let cfg = format!(
        "{model}[noise_check]\nn_draws = 2000\ntest_functions = [{{ kind = \"constant\", value = 0.05 }}]\n\n\
         [cumulants]\npoint_sets = [[[0,0,0],[1,0,0]], [[0,0,0],[0,0,0],[1,0,0]]]\nensemble = {:?}\n\n\
         [schwinger]\npoint_sets = [[[0,0,0],[1,0,0],[0,1,0],[0,0,1]]]\n\n\
         {rp}\n\
         [rp_scan]\nalphas = [0.5, 0.75]\nlambdas = [0.5, 2.0]\n\
         basis = {{ kind = \"points\", points = [[1,0,0],[2,0,0],[1,1,0]], max_degree = 2, constant = false }}\nverify_samples = 300\n\n\
         [baumann]\nepsilons = [0.5, 0.05, 0.005]\nsamples = 20000\n\n\
         [spectral]\nq2 = [0.0, 1.0]\nseparations = [[2,0,0]]\ngreen_tolerance = 1.0\n\n\
         [verify]\nn_samples = 300\n",
        ensemble.to_str().unwrap(),
    );
    let commands: [&[&str]; 9] = [
        &["noise-check"],
        &["sample"],
        &["cumulants"],
        &["schwinger"],
        &["rp-check"],
        &["rp-scan"],
        &["baumann"],
        &["spectral"],
        &["verify-witness", "--witness", witness.to_str().unwrap()],
    ];
    let mut differing = Vec::new();
    for args in commands {
        let name = args[0];
        let runs: Vec<Run> = [("a", "1"), ("b", "1"), ("c", "4")]
            .iter()
            .map(|(tag, w)| {
                let mut a = args.to_vec();
                a.extend(["--workers", w]);
                lfl(d, &cfg, &a, &format!("{name}_{tag}"))
            })
            .collect();
        let snaps: Vec<_> = runs.iter().map(|r| snapshot(&r.out)).collect();
        let codes: Vec<i32> = runs.iter().map(|r| r.code).collect();
        if snaps[0].is_empty()
            || snaps[0] != snaps[1]
            || snaps[0] != snaps[2]
            || codes[0] != codes[1]
            || codes[0] != codes[2]
        {
            differing.push(format!("{name} (exit {codes:?})"));
        }
    }
    verdict(
        10,
        "determinism across runs and worker counts",
        differing.is_empty(),
        if differing.is_empty() {
            "9 commands byte-identical".to_string()
        } else {
            format!("differs: {}", differing.join(", "))
        },
    );
}
