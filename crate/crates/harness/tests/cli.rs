use std::path::Path;
use std::process::{Command, Output};

use wqed_harness::config::{ExperimentConfig, Kind};
use wqed_harness::HarnessError;

fn wqed(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wqed"))
        .args(args)
        .env("WQED_OUT", out)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn config_key(text: &str) -> String {
    match ExperimentConfig::parse(text) {
        Err(HarnessError::Config { key, .. }) => key,
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn invalid_configs_name_the_offending_key() {
    let cases = [
        ("[model]\ng_prime = 1\n", "experiment.kind"),
        ("[experiment]\nkind = nonsense\n", "experiment.kind"),
        ("[experiment]\nkind = emission\n", "model.g_prime"),
        ("[experiment]\nkind = emission\n[model]\ng_prime = -1\n", "model.g_prime"),
        ("[experiment]\nkind = emission\n[model]\ng_prime = 1\nJ = zero\n", "model.J"),
        ("[experiment]\nkind = emission\n[model]\ng_prime = 1\n[scan]\nt_max = -3\n", "scan.t_max"),
        ("[experiment]\nkind = emission\n[model]\ng_prime = 1\n[scan]\ntmax = 3\n", "scan.tmax"),
        ("[experiment]\nkind = b2b\n[model]\ng_prime = 0.5\n", "packet.k0"),
        ("[experiment]\nkind = b2b\n[model]\ng_prime = 0.5\n[packet]\nk0 = 1\n", "packet.s"),
        ("[experiment]\nkind = b2b\n[model]\ng_prime = 0.5\n[packet]\nk0 = 1\ns = 0.1\n", "packet.s"),
        ("[experiment]\nkind = b2b\n[model]\ng_prime = 0.5\n[packet]\nk0 = 9\ns = 12\n", "packet.k0"),
        ("[experiment]\nkind = b2b\n[model]\ng_prime = 0.5\n[packet]\nk0_list = 1, x\ns = 12\n", "packet.k0_list"),
        ("[experiment]\nkind = b2b\n[model]\ng_prime = 0.5\n[packet]\nk0 = 1\ns = 12\n[scan]\nbranch = up\n", "scan.branch"),
        ("[experiment]\nkind = b2b\n[model]\ng_prime = 0.5\n[packet]\nk0 = 1\ns = 12\n[quadrature]\neta = 0\n", "quadrature.eta"),
        (
            "[experiment]\nkind = compare\n[model]\ng_prime = 0.5\n[packet]\nk0 = 1\ns = 12\n[scan]\nchannel = b2b\n[sim]\nN = 600\n",
            "sim.N",
        ),
        (
            "[experiment]\nkind = compare\n[model]\ng_prime = 0.5\n[packet]\nk0 = 1\ns = 12\n[scan]\nchannel = b2b\n[sim]\nN = 101\ntotal_time = 500\n",
            "sim.total_time",
        ),
        ("[experiment]\nkind = bound-energies\n[model]\ng_prime = 1\n", "model.g_prime"),
    ];
    for (text, key) in cases {
        assert_eq!(config_key(text), key, "{text}");
    }
}

#[test]
fn valid_config_round_trip() {
    let c = ExperimentConfig::parse(
        "[experiment]\nkind = b2b\nid = weak\n[model]\ng_prime = 0.5\n[packet]\nk0_list = pi/6, pi/2\ns = 12\n[vertex]\norder = 2\n[quadrature]\neta = 1e-4\n",
    )
    .unwrap();
    assert_eq!(c.kind, Kind::B2b);
    assert_eq!(c.packets.len(), 2);
    assert_eq!(c.packets[0].xc, -60.0);
    assert_eq!(c.order.0, 2);
    assert_eq!(c.quadrature.eta, 1e-4);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");

    let bad = write(
        dir.path(),
        "bad.ini",
        "[experiment]\nkind = emission\n[model]\ng_prime = -2\n",
    );
    let o = wqed(&["emission", "--config", &bad], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("model.g_prime"));

    // a kind that does not match the subcommand is a config error too
    let good = write(
        dir.path(),
        "good.ini",
        "[experiment]\nkind = emission\n[model]\ng_prime = 2\n[scan]\nt_max = 5\npoints = 11\n",
    );
    assert_eq!(wqed(&["b2b", "--config", &good], &out).status.code(), Some(2));
    assert_eq!(wqed(&["emission", "--config", &good], &out).status.code(), Some(0));
    assert!(out.join("emission.csv").exists());

    // the emission series needs Omega = 0: a numeric failure, and nothing is left behind
    let numeric = write(
        dir.path(),
        "numeric.ini",
        "[experiment]\nkind = emission\nid = detuned\n[model]\ng_prime = 2\nOmega = 0.5\n",
    );
    assert_eq!(wqed(&["run", "--config", &numeric], &out).status.code(), Some(3));
    assert!(!out.join("detuned.csv").exists());

    // a comparison outside its tolerance
    let strict = write(
        dir.path(),
        "strict.ini",
        "[experiment]\nkind = compare\nid = strict\n[model]\ng_prime = 1\n[packet]\nk0 = pi/2\ns = 6\n[scan]\nchannel = one-photon\ntolerance = 1e-15\n[sim]\nN = 201\ndt = 1\n",
    );
    let o = wqed(&["compare", "--config", &strict], &out);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
    let report = std::fs::read_to_string(out.join("strict.report")).unwrap();
    assert!(report.contains("pass = false"));
    for key in ["eta = ", "order = ", "dt = ", "N = 201", "krylovDim = 30"] {
        assert!(report.contains(key), "{key} missing from report");
    }
}

#[test]
fn csv_output_is_deterministic_and_labelled() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "be.ini",
        "[experiment]\nkind = bound-energies\n[scan]\ng_prime_list = 1, 2\npoints = 7\n",
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(wqed(&["bound-energies", "--config", &cfg], &a).status.success());
    assert!(wqed(
        &["--out", b.to_str().unwrap(), "run", "--config", &cfg],
        &dir.path().join("ignored")
    )
    .status
    .success());
    let x = std::fs::read(a.join("bound-energies.csv")).unwrap();
    let y = std::fs::read(b.join("bound-energies.csv")).unwrap();
    assert_eq!(x, y);
    let text = String::from_utf8(x).unwrap();
    assert!(text.contains("# figure: "));
    assert!(text.contains("omega_plus [J]"));
    assert!(text.contains("# provenance: eta=-"));
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 14);
    // g' = 2, Omega = 0 sits in the middle of the second block
    let mid: Vec<f64> = rows[10].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(mid[1], 0.0);
    assert!((mid[2] - (2.0 + 20f64.sqrt()).sqrt()).abs() < 1e-12);
}
