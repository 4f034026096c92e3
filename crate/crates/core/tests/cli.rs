use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_feec-swe")).args(args).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("case.cfg");
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn run_writes_csv_vtk_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        &format!(
            "test_case = geostrophic_balance\nmesh = hex\nnx = 6\nny = 6\ndt = 600\nn_steps = 4\nsnapshot_every = 2\noutput_dir = {}\n",
            out.display()
        ),
    );
    let o = bin(&["run", &cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["steps"], 4);
    let on_disk: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(on_disk, summary);

    let csv = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "step,time,mass,energy,enstrophy,total_vorticity,q_min,q_max,d_min");
    assert_eq!(lines.count(), 5);
    for s in [0, 2, 4] {
        let vtk = fs::read_to_string(out.join(format!("snapshot_{s:06}.vtk"))).unwrap();
        assert!(vtk.starts_with("# vtk DataFile Version"));
    }
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mesh = quad\nnx_cells = 4\n");
    let o = bin(&["run", &cfg]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("nx_cells"));
}

#[test]
fn exported_matrices_compose_to_zero() {
    let dir = tempfile::tempdir().unwrap();
    let mdir = dir.path().join("m");
    let mesh = dir.path().join("mesh.txt");
    let o = bin(&["export-mesh", "--kind", "tri", "--nx", "4", "--ny", "3", "--out", mesh.to_str().unwrap(), "--matrices", mdir.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(fs::metadata(&mesh).unwrap().len() > 0);

    let read = |name: &str| -> Vec<(usize, usize, f64)> {
        fs::read_to_string(mdir.join(name))
            .unwrap()
            .lines()
            .map(|l| {
                let f: Vec<&str> = l.split_whitespace().collect();
                assert_eq!(f.len(), 3, "{l}");
                (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap())
            })
            .collect()
    };
    for m in ["M0.txt", "M1.txt", "M2.txt"] {
        let entries = read(m);
        for &(i, j, v) in &entries {
            let t = entries.iter().find(|e| e.0 == j && e.1 == i).map_or(0.0, |e| e.2);
            assert!((v - t).abs() <= 1e-14 * v.abs().max(1e-300), "{m} not symmetric at ({i},{j})");
        }
    }
    // D12·D01 from the dumped entries
    let (d01, d12) = (read("D01.txt"), read("D12.txt"));
    let mut prod = std::collections::HashMap::new();
    for &(c, e, a) in &d12 {
        for &(_, v, b) in d01.iter().filter(|x| x.0 == e) {
            *prod.entry((c, v)).or_insert(0.0) += a * b;
        }
    }
    let scale = d12.iter().map(|x| x.2.abs()).fold(0.0, f64::max);
    assert!(prod.values().all(|p: &f64| p.abs() <= 1e-12 * scale));
}
