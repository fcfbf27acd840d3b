//! Acceptance criteria 1-8. Runs without the libtest harness so every
//! criterion prints exactly one PASS/FAIL line; exits non-zero on any FAIL.

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use xray_cluster::clustering::{
    agglomerative, birch, gmm, kmeans, normalized_laplacian, rbf_affinity, Algorithm, ClusterConfig, ClusterModel,
    CovarianceMode, FeatureMatrix, KMeansInit, Linkage,
};
use xray_cluster::cnn::{
    conv2d, dense, init_weights, load_weights, maxpool2d, save_weights, Activation, CnnSpec, Conv3x3, DenseLayer,
    Network, Shape,
};
use xray_cluster::imaging::{save_pgm, PixelTensor};
use xray_cluster::metrics::silhouette;
use xray_cluster::numerics::{cholesky, make_rng, sym_eigen, Matrix, RngStream, SymMatrix};
use xray_cluster::pipeline::{
    extract_features, preprocess_all, read_features, render_chart_svg, render_report_csv, sweep, synth_blobs,
    synth_images, write_features, SweepConfig,
};
use xray_cluster_cli::{run_with, EXIT_DATA};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: u64) -> Result<(), String> {
    check(elapsed < Duration::from_secs(limit_s), || {
        format!("took {:.2}s, limit {limit_s}s", elapsed.as_secs_f64())
    })
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn random_rows(rng: &mut RngStream, n: usize, d: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| scale * rng.next_uniform()).collect()).collect()
}

/// Textbook silhouette: quadratic loops, no shared code with the library.
fn naive_silhouette(rows: &[Vec<f64>], labels: &[usize]) -> f64 {
    let n = rows.len();
    let k = labels.iter().max().unwrap() + 1;
    let mut total = 0.0;
    for i in 0..n {
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for j in 0..n {
            if j != i {
                sums[labels[j]] += dist(&rows[i], &rows[j]);
                counts[labels[j]] += 1;
            }
        }
        let own = labels[i];
        if counts[own] == 0 {
            continue;
        }
        let a = sums[own] / counts[own] as f64;
        let b = (0..k)
            .filter(|&c| c != own && counts[c] > 0)
            .map(|c| sums[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    total / n as f64
}

fn c1_silhouette_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let mut rng = make_rng(seed);
        let n = 2 + rng.next_below(59);
        let d = 1 + rng.next_below(8);
        let k = 2 + rng.next_below(5);
        let rows = random_rows(&mut rng, n, d, 10.0);
        let mut labels: Vec<usize> = (0..n).map(|_| rng.next_below(k)).collect();
        labels[0] = 0;
        labels[1] = 1;
        let fm = FeatureMatrix::from_rows(&rows).unwrap();
        let got = silhouette(&fm, &labels).map_err(|e| format!("seed {seed}: {e}"))?.mean;
        let want = naive_silhouette(&rows, &labels);
        worst = worst.max((got - want).abs());
        check((got - want).abs() <= 1e-9, || format!("seed {seed}: {got} vs oracle {want}"))?;
    }
    within(start.elapsed(), 5)?;
    Ok(format!("100 datasets, max |diff| {worst:.1e}, {:.2}s", start.elapsed().as_secs_f64()))
}

fn labelled_sse(rows: &[Vec<f64>], labels: &[usize], k: usize) -> f64 {
    let d = rows[0].len();
    let mut total = 0.0;
    for c in 0..k {
        let members: Vec<&Vec<f64>> = rows.iter().zip(labels).filter(|(_, &l)| l == c).map(|(r, _)| r).collect();
        if members.is_empty() {
            continue;
        }
        let mean: Vec<f64> = (0..d).map(|j| members.iter().map(|r| r[j]).sum::<f64>() / members.len() as f64).collect();
        total += members.iter().map(|r| dist(r, &mean).powi(2)).sum::<f64>();
    }
    total
}

fn c2_kmeans_global_optimum() -> Outcome {
    let start = Instant::now();
    for seed in 0..50u64 {
        let mut rng = make_rng(1000 + seed);
        let rows = random_rows(&mut rng, 8, 2, 10.0);
        let mut best = f64::INFINITY;
        for mask in 1u32..255 {
            let labels: Vec<usize> = (0..8).map(|i| ((mask >> i) & 1) as usize).collect();
            best = best.min(labelled_sse(&rows, &labels, 2));
        }
        let cfg = ClusterConfig {
            k: 2,
            seed,
            init: KMeansInit::PlusPlus,
            n_init: 10,
            ..ClusterConfig::default()
        };
        let fm = FeatureMatrix::from_rows(&rows).unwrap();
        let r = kmeans(&fm, &cfg).map_err(|e| format!("seed {seed}: {e}"))?;
        let got = labelled_sse(&rows, &r.labels, 2);
        check((got - best).abs() <= 1e-9, || format!("seed {seed}: SSE {got} vs enumerated minimum {best}"))?;
    }
    within(start.elapsed(), 5)?;
    Ok(format!("50 instances at the enumerated minimum, {:.2}s", start.elapsed().as_secs_f64()))
}

fn c3_em_monotone() -> Outcome {
    let start = Instant::now();
    let mut steps = 0;
    let mut worst = 0.0f64;
    for seed in 0..50u64 {
        let (fm, _) = synth_blobs(50, 2, 2, 3.0, 1.0, seed).unwrap();
        for mode in [CovarianceMode::Tied, CovarianceMode::Diag, CovarianceMode::Full] {
            let cfg = ClusterConfig {
                k: 2,
                seed,
                tol: 1e-10,
                max_iters: 500,
                ..ClusterConfig::default()
            };
            let r = gmm(&fm, &cfg, mode).map_err(|e| format!("seed {seed} {mode:?}: {e}"))?;
            for w in r.objective_trace.windows(2) {
                steps += 1;
                worst = worst.max(w[0] - w[1]);
                check(w[1] >= w[0] - 1e-9, || format!("seed {seed} {mode:?}: {} -> {}", w[0], w[1]))?;
            }
        }
    }
    within(start.elapsed(), 30)?;
    Ok(format!("{steps} EM steps, largest drop {worst:.1e}, {:.2}s", start.elapsed().as_secs_f64()))
}

/// Members of each dendrogram node, using the id scheme leaf `< n`, merge `t` -> `n + t`.
fn node_members(n: usize, merges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut nodes: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for &(a, b) in merges {
        let mut m = nodes[a].clone();
        m.extend(&nodes[b]);
        nodes.push(m);
    }
    nodes
}

fn c4_structural_invariants() -> Outcome {
    let start = Instant::now();
    let mut rng = make_rng(4);
    for trial in 0..10u64 {
        // K-Means objective never rises.
        let (fm, _) = synth_blobs(30, 3, 3, 2.0, 1.0, trial).unwrap();
        let r = kmeans(&fm, &ClusterConfig::with_k(4)).map_err(|e| e.to_string())?;
        for w in r.objective_trace.windows(2) {
            check(w[1] <= w[0] + 1e-9 * w[0].abs(), || format!("kmeans SSE rose {} -> {}", w[0], w[1]))?;
        }

        // Dendrogram heights and the average-linkage recurrence.
        let n = 10 + rng.next_below(21);
        let rows = random_rows(&mut rng, n, 3, 5.0);
        let fm = FeatureMatrix::from_rows(&rows).unwrap();
        for linkage in [Linkage::Average, Linkage::Ward] {
            let r = agglomerative(&fm, &ClusterConfig::with_k(2), linkage).map_err(|e| e.to_string())?;
            let Some(ClusterModel::Dendrogram(dg)) = r.model else {
                return Err("agglomerative returned no dendrogram".into());
            };
            check(dg.merges.len() == n - 1, || "incomplete dendrogram".into())?;
            for w in dg.merges.windows(2) {
                check(w[1].height >= w[0].height - 1e-12, || format!("{linkage:?} heights not monotone"))?;
            }
            if linkage == Linkage::Average {
                let pairs: Vec<_> = dg.merges.iter().map(|m| (m.cluster_a, m.cluster_b)).collect();
                let nodes = node_members(n, &pairs);
                for m in &dg.merges {
                    let (a, b) = (&nodes[m.cluster_a], &nodes[m.cluster_b]);
                    let direct = a.iter().flat_map(|&i| b.iter().map(move |&j| (i, j))).map(|(i, j)| dist(&rows[i], &rows[j])).sum::<f64>()
                        / (a.len() * b.len()) as f64;
                    check((m.height - direct).abs() <= 1e-9, || format!("average linkage {} vs direct {direct}", m.height))?;
                }
            }
        }

        // CF additivity and the leaf radius bound.
        let (fm, _) = synth_blobs(40, 3, 2, 6.0, 1.0, trial).unwrap();
        let cfg = ClusterConfig {
            birch_threshold: Some(0.8),
            birch_branching: 4,
            ..ClusterConfig::with_k(3)
        };
        let r = birch(&fm, &cfg).map_err(|e| e.to_string())?;
        let Some(ClusterModel::CfTree(stats)) = r.model else {
            return Err("birch returned no CF tree".into());
        };
        let n_sum: usize = stats.leaf_entries.iter().map(|e| e.n).sum();
        check(n_sum == fm.n(), || format!("leaf N sums to {n_sum}, expected {}", fm.n()))?;
        for j in 0..fm.d() {
            let ls: f64 = stats.leaf_entries.iter().map(|e| e.ls[j]).sum();
            let want: f64 = (0..fm.n()).map(|i| fm.row(i)[j]).sum();
            check((ls - want).abs() <= 1e-9 * (1.0 + want.abs()), || format!("LS[{j}] {ls} vs {want}"))?;
        }
        let ss: f64 = stats.leaf_entries.iter().map(|e| e.ss).sum();
        let want: f64 = fm.values().as_slice().iter().map(|v| v * v).sum();
        check((ss - want).abs() <= 1e-9 * (1.0 + want), || format!("SS {ss} vs {want}"))?;
        for e in &stats.leaf_entries {
            check(e.n == 1 || e.radius() <= stats.threshold + 1e-9, || {
                format!("leaf radius {} above threshold {}", e.radius(), stats.threshold)
            })?;
        }

        // Laplacian spectrum is non-negative.
        let (fm, _) = synth_blobs(12, 2, 3, 4.0, 1.0, trial).unwrap();
        let (lap, _) = normalized_laplacian(&rbf_affinity(fm.values(), 1.5));
        let eig = sym_eigen(&lap).map_err(|e| e.to_string())?;
        check(eig.values[0] >= -1e-8, || format!("Laplacian eigenvalue {}", eig.values[0]))?;

        // Eigen residual and Cholesky round trip on random SPD matrices.
        let m = 2 + rng.next_below(19);
        let b = Matrix::from_rows(&random_rows(&mut rng, m, m, 2.0));
        let mut spd = b.matmul(&b.transpose());
        for i in 0..m {
            spd.row_mut(i)[i] += 1.0;
        }
        let sym = SymMatrix::new(spd.clone());
        let eig = sym_eigen(&sym).map_err(|e| e.to_string())?;
        for (j, &lambda) in eig.values.iter().enumerate() {
            let v = eig.vectors.column(j);
            let av = spd.mul_vec(&v);
            let res = av.iter().zip(&v).map(|(a, x)| (a - lambda * x).abs()).fold(0.0, f64::max);
            check(res <= 1e-8, || format!("eigen residual {res:e} for n = {m}"))?;
        }
        let l = cholesky(&sym).map_err(|e| e.to_string())?;
        let diff = l.matmul(&l.transpose()).max_abs_diff(sym.as_matrix());
        check(diff <= 1e-10, || format!("Cholesky round trip error {diff:e}"))?;
    }
    Ok(format!("10 trials of every invariant, {:.2}s", start.elapsed().as_secs_f64()))
}

fn c5_synthetic_trend() -> Outcome {
    let start = Instant::now();
    let (fm, truth) = synth_blobs(150, 2, 16, 10.0, 1.0, 7).unwrap();
    let rows: Vec<Vec<f64>> = (0..fm.n()).map(|i| fm.row(i).to_vec()).collect();
    let ceiling = naive_silhouette(&rows, &truth);
    let cfg = SweepConfig {
        seed: 7,
        ..SweepConfig::default()
    };
    let report = sweep(&fm, &cfg).map_err(|e| e.to_string())?;
    let mut low = Vec::new();
    let mut at2 = Vec::new();
    for row in report.rows.iter().filter(|r| r.k == 2) {
        let s = row.silhouette.unwrap_or(f64::NAN);
        at2.push(format!("{}={s:.4}", row.algorithm.cli_name()));
        if !(s >= 0.90) {
            low.push(row.algorithm.cli_name());
        }
    }
    let km: Vec<f64> = report
        .rows
        .iter()
        .filter(|r| r.algorithm == Algorithm::KMeans)
        .map(|r| r.silhouette.unwrap_or(f64::NAN))
        .collect();
    let peak = km[1..].iter().all(|&s| km[0] > s);
    within(start.elapsed(), 60)?;
    let detail = format!(
        "k=2 [{}]; kmeans k=2..6 {km:.4?}; ground-truth labelling scores {ceiling:.4}",
        at2.join(" ")
    );
    check(low.is_empty(), || format!("below 0.90 at k=2: {}; {detail}", low.join(",")))?;
    check(peak, || format!("kmeans silhouette does not peak at k=2; {detail}"))?;
    Ok(detail)
}

fn end_to_end(seed: u64) -> Result<(Vec<u8>, Vec<u8>, FeatureMatrix), String> {
    let imgs = synth_images(60, 128, seed).map_err(|e| e.to_string())?;
    let inputs: Vec<_> = imgs.into_iter().map(|s| (s.id, s.image, None)).collect();
    let tensors: Vec<(String, PixelTensor)> = preprocess_all(&inputs, 128).map_err(|e| e.to_string())?;
    let spec = CnnSpec::default();
    let net = Network::new(&spec, &init_weights(&spec, seed)).map_err(|e| e.to_string())?;
    let fm = extract_features(&net, &tensors).map_err(|e| e.to_string())?;
    let cfg = SweepConfig {
        seed,
        ..SweepConfig::default()
    };
    let report = sweep(&fm, &cfg).map_err(|e| e.to_string())?;
    Ok((render_report_csv(&report), render_chart_svg(&report), fm))
}

fn c6_end_to_end() -> Outcome {
    let start = Instant::now();
    let (csv_a, svg_a, fm) = end_to_end(6)?;
    let first = start.elapsed();
    let (csv_b, svg_b, _) = end_to_end(6)?;
    check(csv_a == csv_b && svg_a == svg_b, || "outputs differ between runs".into())?;
    let text = String::from_utf8(csv_a.clone()).unwrap();
    let rows = text.lines().count() - 1;
    check(rows == 45, || format!("{rows} report rows"))?;
    let blank = text.lines().skip(1).filter(|l| l.split(',').nth(2) == Some("")).count();
    let polylines = String::from_utf8(svg_a).unwrap().matches("<polyline").count();
    check(polylines == 9, || format!("{polylines} polylines"))?;
    // Importing the exported features must give the same report.
    let imported = read_features(&write_features(&fm)).map_err(|e| e.to_string())?;
    let again = sweep(&imported, &SweepConfig { seed: 6, ..SweepConfig::default() }).map_err(|e| e.to_string())?;
    check(render_report_csv(&again) == csv_a, || "imported features give a different report".into())?;
    within(first, 120)?;
    Ok(format!("45 rows ({blank} blank), 9 polylines, identical reruns, single run {:.1}s", first.as_secs_f64()))
}

fn c7_cnn() -> Outcome {
    let mut rng = make_rng(77);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (c, h, w, o) = (1 + rng.next_below(4), 2 + rng.next_below(7), 2 + rng.next_below(7), 1 + rng.next_below(5));
        let input = Activation::from_vec(c, h, w, (0..c * h * w).map(|_| rng.next_gaussian()).collect());
        let conv = Conv3x3 {
            out_channels: o,
            in_channels: c,
            kernels: (0..o * c * 9).map(|_| rng.next_gaussian()).collect(),
            biases: (0..o).map(|_| rng.next_gaussian()).collect(),
        };
        let got = conv2d(&input, &conv).map_err(|e| e.to_string())?;
        for co in 0..o {
            for y in 0..h {
                for x in 0..w {
                    let mut acc = conv.biases[co];
                    for ci in 0..c {
                        for ky in 0..3 {
                            for kx in 0..3 {
                                let (sy, sx) = (y as isize + ky as isize - 1, x as isize + kx as isize - 1);
                                if sy >= 0 && sx >= 0 && (sy as usize) < h && (sx as usize) < w {
                                    acc += conv.kernels[((co * c + ci) * 3 + ky) * 3 + kx]
                                        * input.data[(ci * h + sy as usize) * w + sx as usize];
                                }
                            }
                        }
                    }
                    worst = worst.max((got.data[(co * h + y) * w + x] - acc).abs());
                }
            }
        }
        let even = Activation::from_vec(c, 2 * h, 2 * w, (0..c * 4 * h * w).map(|_| rng.next_gaussian()).collect());
        let pooled = maxpool2d(&even).map_err(|e| e.to_string())?;
        for ci in 0..c {
            for y in 0..h {
                for x in 0..w {
                    let mut m = f64::NEG_INFINITY;
                    for dy in 0..2 {
                        for dx in 0..2 {
                            m = m.max(even.data[(ci * 2 * h + 2 * y + dy) * 2 * w + 2 * x + dx]);
                        }
                    }
                    worst = worst.max((pooled.data[(ci * h + y) * w + x] - m).abs());
                }
            }
        }
        let (i, j) = (1 + rng.next_below(30), 1 + rng.next_below(10));
        let layer = DenseLayer {
            out_features: j,
            in_features: i,
            weights: (0..i * j).map(|_| rng.next_gaussian()).collect(),
            biases: (0..j).map(|_| rng.next_gaussian()).collect(),
        };
        let v: Vec<f64> = (0..i).map(|_| rng.next_gaussian()).collect();
        let out = dense(&v, &layer).map_err(|e| e.to_string())?;
        for r in 0..j {
            let mut acc = layer.biases[r];
            for q in 0..i {
                acc += layer.weights[r * i + q] * v[q];
            }
            worst = worst.max((out[r] - acc).abs());
        }
    }
    check(worst <= 1e-12, || format!("max deviation from loop oracle {worst:e}"))?;

    let spec = CnnSpec::default();
    let net = Network::new(&spec, &init_weights(&spec, 1)).map_err(|e| e.to_string())?;
    let zero = PixelTensor {
        height: 128,
        width: 128,
        channels: 1,
        values: vec![0.0; 128 * 128],
    };
    let (out, shapes) = net.forward_traced(&zero).map_err(|e| e.to_string())?;
    let sp = |s: usize, c: usize| Shape::Spatial {
        height: s,
        width: s,
        channels: c,
    };
    let want = vec![sp(64, 64), sp(32, 64), sp(16, 128), sp(8, 128), Shape::Flat(8192), Shape::Flat(64), Shape::Flat(16)];
    check(shapes == want && spec.shape_chain() == want, || format!("shape chain {shapes:?}"))?;
    check(out == vec![0.0; 16], || format!("zero input gave {out:?}"))?;
    Ok(format!("oracle deviation {worst:.1e}; chain 64x64x64 -> ... -> 16; zero in, zero out"))
}

fn cli(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["xray-cluster"];
    argv.extend_from_slice(args);
    let code = run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(err).unwrap())
}

fn c8_formats() -> Outcome {
    let spec = CnnSpec::default();
    let ws = init_weights(&spec, 8);
    let back = load_weights(&save_weights(&ws), &spec).map_err(|e| e.to_string())?;
    check(ws.bit_eq(&back), || "weight round trip is not bit-exact".into())?;

    let mut rng = make_rng(8);
    let rows: Vec<Vec<f64>> = (0..50)
        .map(|_| (0..16).map(|_| f64::from_bits(rng.next_u64() >> 2) * if rng.next_uniform() < 0.5 { -1.0 } else { 1.0 }).collect())
        .collect();
    let fm = FeatureMatrix::from_rows(&rows).unwrap();
    let read = read_features(&write_features(&fm)).map_err(|e| e.to_string())?;
    let worst = fm
        .values()
        .as_slice()
        .iter()
        .zip(read.values().as_slice())
        .map(|(a, b)| if *a == 0.0 { b.abs() } else { ((a - b) / a).abs() })
        .fold(0.0, f64::max);
    check(read.ids() == fm.ids() && worst <= 1e-15, || format!("feature round trip relative error {worst:e}"))?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |name: &str| dir.path().join(name);
    let s = |path: &Path| path.to_str().unwrap().to_string();
    fs::write(p("w.bin"), b"XXXX\x01\x00\x00\x00\x00").unwrap();
    fs::write(p("empty.csv"), "path,crop_x,crop_y,crop_w,crop_h,age,sex\n").unwrap();
    let (code, err) = cli(&["extract", "--weights", &s(&p("w.bin")), "--manifest", &s(&p("empty.csv")), "--out", &s(&p("o.csv"))]);
    check(code == EXIT_DATA && err.contains("bad magic") && err.contains("byte 0"), || format!("bad magic: exit {code}, {err}"))?;

    fs::write(p("ragged.csv"), "id,f0,f1\na,1,2\nb,3\n").unwrap();
    let (code, err) = cli(&["sweep", "--features", &s(&p("ragged.csv"))]);
    check(code == EXIT_DATA && err.contains("line 3"), || format!("ragged CSV: exit {code}, {err}"))?;

    let mut pgm = save_pgm(&xray_cluster::imaging::ImageGray::filled(4, 4, 9).unwrap());
    pgm.pop();
    fs::write(p("t.pgm"), &pgm).unwrap();
    fs::write(p("m.csv"), "path,crop_x,crop_y,crop_w,crop_h,age,sex\nt.pgm,,,,,,\n").unwrap();
    let (code, err) = cli(&["preprocess", "--manifest", &s(&p("m.csv")), "--out", &s(&p("pp"))]);
    let last = pgm.len();
    check(code == EXIT_DATA && err.contains(&format!("byte {last}")), || format!("truncated PGM: exit {code}, {err}"))?;
    Ok("weights bit-exact, features bit-exact, bad magic/ragged/truncated exit 2 with positions".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("silhouette matches naive oracle", c1_silhouette_oracle),
        ("k-means reaches enumerated optimum", c2_kmeans_global_optimum),
        ("EM log-likelihood monotone", c3_em_monotone),
        ("structural invariants", c4_structural_invariants),
        ("synthetic blobs score high and peak at k = 2", c5_synthetic_trend),
        ("end-to-end pipeline", c6_end_to_end),
        ("CNN correctness", c7_cnn),
        ("format fidelity", c8_formats),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
