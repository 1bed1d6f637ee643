//! Runs the `obfw` binary end to end on loopback.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::process::{Child, Command, Output, Stdio};
use std::thread::sleep;
use std::time::{Duration, Instant};

fn obfw() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_obfw"));
    c.env_remove("OBFW_CONFIG");
    c
}

fn run(args: &[&str]) -> Output {
    obfw().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// `n` distinct free ports; the listeners are held until all are chosen.
fn free_ports(n: usize) -> Vec<u16> {
    let held: Vec<TcpListener> = (0..n).map(|_| TcpListener::bind("127.0.0.1:0").unwrap()).collect();
    held.iter().map(|l| l.local_addr().unwrap().port()).collect()
}

/// Kills the daemons when the test ends, pass or fail.
struct Daemons(Vec<Child>);

impl Drop for Daemons {
    fn drop(&mut self) {
        for c in &mut self.0 {
            let _ = c.kill();
            let _ = c.wait();
        }
    }
}

struct Deployment {
    dir: tempfile::TempDir,
    config: PathBuf,
    gateway_listen: u16,
    m: usize,
}

impl Deployment {
    fn new(scheme: &str, m: usize, mode: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let ports = free_ports(2 * m + 2);
        let servers: Vec<String> = (1..=m)
            .map(|i| format!(r#"{{"index": {i}, "mesh": "127.0.0.1:{}", "admin": "127.0.0.1:{}"}}"#, ports[2 * i], ports[2 * i + 1]))
            .collect();
        let gateway_listen = ports[0];
        let json = format!(
            r#"{{
  "test_mode": true,
  "firewall": {{
    "scheme": {scheme},
    "m": {m},
    "modulus": 11,
    "bloom": {{"beta": 2000, "kappa": 4, "eta": 100}},
    "mode": "{mode}",
    "share_dir": "{}",
    "psk": "000102030405060708090a0b0c0d0e0f",
    "timeout_ms": 5000,
    "gateway": {{"mesh": "127.0.0.1:{}", "listen": "127.0.0.1:{gateway_listen}"}},
    "servers": [{}]
  }}
}}"#,
            dir.path().join("shares").display(),
            ports[1],
            servers.join(", ")
        );
        let config = dir.path().join("run.json");
        std::fs::write(&config, json).unwrap();
        Deployment { dir, config, gateway_listen, m }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn cfg(&self) -> &str {
        self.config.to_str().unwrap()
    }

    fn init(&self, blacklist: &str) -> Output {
        let list = self.path("blacklist.txt");
        std::fs::write(&list, blacklist).unwrap();
        run(&["--config", self.cfg(), "--seed", "5eed", "fw-init", list.to_str().unwrap()])
    }

    fn serve(&self, cheat: Option<(usize, u128)>) -> Daemons {
        Daemons(
            (1..=self.m)
                .map(|i| {
                    let mut c = obfw();
                    c.args(["--config", self.cfg(), "serve", "--index", &i.to_string()]);
                    if let Some((who, offset)) = cheat {
                        if who == i {
                            c.args(["--cheat-offset", &offset.to_string()]);
                        }
                    }
                    c.stderr(Stdio::null()).spawn().unwrap()
                })
                .collect(),
        )
    }

    fn check(&self, addr: &str) -> Output {
        run(&["--config", self.cfg(), "gateway", "--check", addr])
    }
}

const BLACKLIST: &str = "# known bad\n203.0.113.7\n198.51.100.23\n\n192.0.2.200\n";

#[test]
fn init_writes_one_share_file_per_server() {
    let d = Deployment::new(r#""additive""#, 3, "sum");
    let o = d.init(BLACKLIST);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("3 addresses"));
    for i in 1..=3 {
        assert!(d.path(&format!("shares/server-{i}.shares")).exists());
    }
    assert!(d.path("shares/admin.filter").exists());
    assert!(d.init("").status.success());
}

#[test]
fn malformed_blacklist_line_is_a_usage_error() {
    let d = Deployment::new(r#""additive""#, 3, "sum");
    let o = d.init("10.0.0.1\n10.0.0.300\n");
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("blacklist.txt:2:"), "{}", stderr(&o));
}

#[test]
fn configuration_errors_exit_2() {
    let d = Deployment::new(r#""additive""#, 3, "product");
    d.init(BLACKLIST);
    let bad = Deployment::new(r#"{"shamir": {"reveal_size": 3}}"#, 3, "berlekamp_welch");
    assert_eq!(bad.init(BLACKLIST).status.code(), Some(2));
    let o = run(&["--role", "gateway", "--config", d.cfg(), "fw-init", "x"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(run(&["gateway"]).status.code(), Some(2));
    assert_eq!(run(&["compare", "alg9", "1", "2"]).status.code(), Some(2));

    let text = std::fs::read_to_string(&d.config).unwrap().replace("\"test_mode\": true", "\"test_mode\": false");
    std::fs::write(&d.config, text).unwrap();
    let o = run(&["--config", d.cfg(), "--seed", "1", "fw-init", d.path("blacklist.txt").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn blacklisted_address_blocks_and_updates_take_effect() {
    let d = Deployment::new(r#""additive""#, 3, "sum");
    assert!(d.init(BLACKLIST).status.success());
    let _servers = d.serve(None);

    let o = d.check("203.0.113.7");
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "BLOCK\n");
    let o = d.check("8.8.4.4");
    assert_eq!(stdout(&o), "FORWARD\n", "{}", stderr(&o));

    let o = run(&["--config", d.cfg(), "admin-update", "8.8.4.4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&d.check("8.8.4.4")), "BLOCK\n");
    assert_eq!(stdout(&d.check("198.51.100.23")), "BLOCK\n");
}

#[test]
fn gateway_line_protocol() {
    let d = Deployment::new(r#"{"shamir": {"reveal_size": 3}}"#, 5, "product");
    assert!(d.init(BLACKLIST).status.success());
    let mut daemons = d.serve(None);
    let log = std::fs::File::create(d.path("gateway.log")).unwrap();
    daemons.0.push(obfw().args(["--config", d.cfg(), "gateway"]).stderr(log).spawn().unwrap());

    let deadline = Instant::now() + Duration::from_secs(10);
    let stream = loop {
        match TcpStream::connect(("127.0.0.1", d.gateway_listen)) {
            Ok(s) => break s,
            Err(_) if Instant::now() < deadline => sleep(Duration::from_millis(50)),
            Err(e) => panic!("gateway never listened: {e}"),
        }
    };
    stream.set_read_timeout(Some(Duration::from_secs(20))).unwrap();
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut ask = |line: &str| {
        (&stream).write_all(format!("{line}\n").as_bytes()).unwrap();
        let mut reply = String::new();
        reader.read_line(&mut reply).unwrap();
        reply
    };
    assert_eq!(ask("CHECK 192.0.2.200"), "BLOCK\n");
    assert_eq!(ask("CHECK 1.1.1.1"), "FORWARD\n");
    assert!(ask("HELLO").starts_with("ERROR"));
    assert!(ask("CHECK 1.2.3").starts_with("ERROR"));
}

#[test]
fn cheating_server_raises_an_alert() {
    let d = Deployment::new(r#"{"shamir": {"reveal_size": 3}}"#, 7, "product");
    assert!(d.init(BLACKLIST).status.success());
    let _servers = d.serve(Some((4, 3)));
    let o = d.check("203.0.113.7");
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert_eq!(stdout(&o), "ALERT 4\n");
}

#[test]
fn unreachable_servers_are_transport_errors() {
    let d = Deployment::new(r#""additive""#, 3, "sum");
    let text = std::fs::read_to_string(&d.config).unwrap().replace("\"timeout_ms\": 5000", "\"timeout_ms\": 300");
    std::fs::write(&d.config, text).unwrap();
    assert!(d.init(BLACKLIST).status.success());
    assert_eq!(d.check("203.0.113.7").status.code(), Some(3));
    let o = run(&["--config", d.cfg(), "admin-update", "8.8.4.4"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn compare_prints_the_relation() {
    let o = run(&["compare", "alg4", "15", "13", "--l", "5"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "a >= b\n");
    for v in ["alg5", "alg6", "alg7"] {
        assert_eq!(stdout(&run(&["compare", v, "13", "15", "--l", "5"])), "a < b\n", "{v}");
    }
    assert_eq!(run(&["compare", "alg4", "32", "1", "--l", "5"]).status.code(), Some(2));
}

#[test]
fn compare_writes_a_transcript() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    let o = run(&["--seed", "7", "--transcript", path.to_str().unwrap(), "compare", "alg5", "3", "4", "--l", "8"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert!(v.is_object());
}

fn bench_rows(args: &[&str]) -> Vec<Vec<String>> {
    let o = run(args);
    assert!(o.status.success(), "{}", stderr(&o));
    stdout(&o).lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn bench_matches_closed_forms() {
    let rows = bench_rows(&["bench", "alg4", "8,16,32", "--format", "csv"]);
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert_eq!((r[3].as_str(), r[5].as_str(), r[7].as_str()), (r[4].as_str(), "5", "ok"), "{r:?}");
    }
    let rows = bench_rows(&["bench", "alg5", "8,16", "--format", "csv"]);
    assert!(rows.iter().all(|r| r[3] == r[4] && r[5] == "4"));
    let rows = bench_rows(&["bench", "alg6", "8", "--m", "3,5", "--format", "csv"]);
    assert!(rows.iter().all(|r| r[7] == "MISMATCH"));
    assert_eq!(run(&["bench", "alg6", "8", "--strict"]).status.code(), Some(1));
    let o = run(&["bench", "alg7", "8"]);
    assert!(stdout(&o).contains("tree fan-in") && stdout(&o).contains("108864"));
}
