use std::path::PathBuf;

use cubic_disc::hk_curvature::kappa;
use cubic_disc::irrep_so4::s_hat;
use cubic_disc::model_spaces::{compact, split};
use cubic_disc::reports::{io_roundtrip, load, save, Stored};
use cubic_disc::{Error, Exact};

struct TempDir(PathBuf);

impl TempDir {
    fn new(tag: &str) -> Self {
        let p = std::env::temp_dir().join(format!("cubic-disc-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&p).unwrap();
        TempDir(p)
    }
    fn file(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }
}

impl Drop for TempDir {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

#[test]
fn quartic_and_curvature_round_trip() {
    let dir = TempDir::new("io-tensors");
    let s = s_hat::<Exact>();
    for (name, value) in [("s.json", Stored::Quartic(s.clone())), ("k.json", Stored::Curvature(kappa(&s)))] {
        let path = dir.file(name);
        save(&path, &value).unwrap();
        assert_eq!(load(&path).unwrap(), value);
        assert!(io_roundtrip(&path).unwrap());
    }
}

#[test]
fn coframe_survives_save_and_load() {
    let dir = TempDir::new("io-coframe");
    for (name, cs) in [("compact.json", compact::<Exact>()), ("split.json", split::<Exact>())] {
        let path = dir.file(name);
        save(&path, &Stored::Coframe(cs.clone())).unwrap();
        let Stored::Coframe(back) = load(&path).unwrap() else { panic!("wrong kind") };
        assert_eq!(back, cs);
        for (label, r) in back.d_squared_check() {
            assert_eq!(r.exact_zero, Some(true), "{name}: d² ≠ 0 in {label}");
        }
    }
}

#[test]
fn coframe_file_format() {
    let dir = TempDir::new("io-format");
    let path = dir.file("compact.json");
    save(&path, &Stored::Coframe(compact::<Exact>())).unwrap();
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["kind"], "coframe");
    assert_eq!(v["value"]["labels"].as_array().unwrap().len(), 14);
    assert_eq!(v["value"]["labels"][0], "psi1");
    assert!(v["value"]["d"]["psi1"].is_array());
}

#[test]
fn truncated_file_reports_location() {
    let dir = TempDir::new("io-truncated");
    let path = dir.file("s.json");
    save(&path, &Stored::Quartic(s_hat())).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, &text[..text.len() / 2]).unwrap();
    match load(&path) {
        Err(Error::Parse(msg)) => {
            let loc = format!("{}:", path.display());
            assert!(msg.starts_with(&loc), "{msg}");
            let rest: Vec<&str> = msg[loc.len()..].splitn(3, ':').collect();
            assert!(rest[0].parse::<usize>().is_ok() && rest[1].parse::<usize>().is_ok(), "{msg}");
        }
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn invalid_contents_are_rejected() {
    let dir = TempDir::new("io-invalid");
    let path = dir.file("x.json");
    std::fs::write(&path, r#"{"kind": "teapot", "value": {}}"#).unwrap();
    assert!(matches!(load(&path), Err(Error::Parse(_))));
    assert!(matches!(load(&dir.file("absent.json")), Err(Error::Io(_))));
}
