//! Firewall commands: admin setup and updates, the server daemon and the
//! gateway.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{Ipv4Addr, TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use obfw::bloom::BloomFilter;
use obfw::firewall::{
    encode_update, fw_init, fw_update, gateway_eval, serve as serve_session, EvalMode, EvalVerdict, FirewallConfig, ServeOptions,
    ServerShares, ShareStore, GATEWAY,
};
use obfw::net::{proto, run_tcp_party, PartyId, TcpMesh, Transcript};
use obfw::sharing::RandomSource;

use crate::config::FirewallSection;
use crate::{CliError, Env};

/// Longest admin message a server reads.
const MAX_ADMIN_BYTES: u64 = 1 << 20;

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Usage(format!("{}: {e}", path.display()))
}

fn rng_for(env: &Env, label: &[u8]) -> RandomSource {
    match env.seed {
        Some(s) => RandomSource::from_u64(s).derive(label),
        None => RandomSource::from_entropy(),
    }
}

/// Appends one compact JSON transcript per session.
struct TranscriptLog(Option<Mutex<File>>);

impl TranscriptLog {
    fn open(path: Option<&PathBuf>) -> Result<Self, CliError> {
        let file = path
            .map(|p| OpenOptions::new().create(true).append(true).open(p).map_err(io_err(p)))
            .transpose()?;
        Ok(TranscriptLog(file.map(Mutex::new)))
    }

    fn write(&self, t: &Transcript) {
        if let Some(f) = &self.0 {
            let mut line = serde_json::to_vec(t).expect("transcript serializes");
            line.push(b'\n');
            let _ = f.lock().unwrap().write_all(&line);
        }
    }
}

fn parse_blacklist(path: &Path) -> Result<Vec<Ipv4Addr>, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let addr = line
            .parse()
            .map_err(|_| CliError::Usage(format!("{}:{}: {line:?} is not a dotted-quad address", path.display(), i + 1)))?;
        out.push(addr);
    }
    Ok(out)
}

pub fn init(env: &Env, blacklist: &Path) -> Result<(), CliError> {
    let fw = env.config()?.firewall()?;
    let config = fw.config()?;
    let list = parse_blacklist(blacklist)?;
    if list.len() as u64 > config.bloom.eta {
        eprintln!("obfw: warning: {} addresses exceed the sized η = {}", list.len(), config.bloom.eta);
    }
    let mut rng = rng_for(env, b"fw-init");
    let master: [u8; 16] = rng.derive(b"master key").seed()[..16].try_into().unwrap();
    let (filter, servers) = fw_init(&config, &list, master, &mut rng)?;
    fs::create_dir_all(&fw.share_dir).map_err(io_err(&fw.share_dir))?;
    for s in &servers {
        let path = fw.share_file(s.index);
        s.write_to(File::create(&path).map_err(io_err(&path))?)?;
    }
    let path = fw.filter_file();
    filter
        .write_to(File::create(&path).map_err(io_err(&path))?)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let path = fw.seq_file();
    fs::write(&path, "0\n").map_err(io_err(&path))?;
    println!(
        "{} addresses, β = {}, κ = {}: {} share files in {}",
        list.len(),
        config.bloom.beta,
        config.bloom.kappa,
        servers.len(),
        fw.share_dir.display()
    );
    Ok(())
}

fn same_deployment(a: &FirewallConfig, b: &FirewallConfig) -> bool {
    a.scheme == b.scheme && a.m == b.m && a.field == b.field && a.bloom.beta == b.bloom.beta && a.bloom.kappa == b.bloom.kappa
}

fn mesh_for(fw: &FirewallSection, me: PartyId) -> Result<Arc<TcpMesh>, CliError> {
    let timeout = Duration::from_millis(fw.timeout_ms);
    let listen = if me == GATEWAY { fw.gateway.mesh } else { fw.server(me as usize)?.mesh };
    let mesh = TcpMesh::bind_with(me, listen, timeout, timeout)?;
    for s in &fw.servers {
        if s.index != me as usize {
            mesh.add_peer(s.index as PartyId, s.mesh);
        }
    }
    if me != GATEWAY {
        mesh.add_peer(GATEWAY, fw.gateway.mesh);
    }
    Ok(mesh)
}

fn handle_admin(store: &ShareStore, psk: &[u8], stream: TcpStream) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?.take(MAX_ADMIN_BYTES));
    let mut text = String::new();
    reader.read_line(&mut text)?;
    reader.read_line(&mut text)?;
    let reply = match store.apply_admin(psk, &text) {
        Ok(d) => format!("OK {}\n", d.seq),
        Err(e) => format!("ERR {e}\n"),
    };
    (&stream).write_all(reply.as_bytes())
}

pub fn serve(env: &Env, index: usize, cheat_offset: Option<u128>) -> Result<(), CliError> {
    let fw = env.config()?.firewall()?;
    if cheat_offset.is_some() && !env.test_mode() {
        return Err(CliError::Usage("--cheat-offset needs \"test_mode\": true".into()));
    }
    let config = fw.config()?;
    let path = fw.share_file(index);
    let shares = ServerShares::read_from(File::open(&path).map_err(io_err(&path))?)?;
    if shares.index != index || !same_deployment(&shares.config, &config) {
        return Err(CliError::Usage(format!("{} does not belong to server {index} of this configuration", path.display())));
    }
    let store = Arc::new(ShareStore::new(shares));
    let psk = fw.psk()?;
    let endpoints = fw.server(index)?;
    let mesh = mesh_for(fw, index as PartyId)?;
    mesh.announce_sessions(true);

    let admin = TcpListener::bind(endpoints.admin).map_err(|e| CliError::Transport(format!("bind {}: {e}", endpoints.admin)))?;
    {
        let store = store.clone();
        thread::spawn(move || {
            for stream in admin.incoming().flatten() {
                let (store, psk) = (store.clone(), psk.clone());
                thread::spawn(move || {
                    if let Err(e) = handle_admin(&store, &psk, stream) {
                        eprintln!("obfw: admin connection: {e}");
                    }
                });
            }
        });
    }
    eprintln!("server {index}: mesh {}, admin {}", mesh.local_addr(), endpoints.admin);

    let mode = EvalMode::from(fw.mode);
    let opts = ServeOptions { result_offset: cheat_offset.unwrap_or(0), ..Default::default() };
    let log = Arc::new(TranscriptLog::open(env.transcript.as_ref())?);
    let seed = env.seed;
    loop {
        let Some(ann) = mesh.accept_session(Duration::from_secs(1)) else { continue };
        if ![mode.protocol(), proto::MAJORITY_VOTE].contains(&ann.tag.protocol) {
            eprintln!("obfw: ignoring session {} opened with protocol {}", ann.session, ann.tag.protocol);
            mesh.close_session(ann.session);
            continue;
        }
        let (mesh, store, log) = (mesh.clone(), store.clone(), log.clone());
        thread::spawn(move || {
            let snapshot = store.snapshot();
            let mut rng = match seed {
                Some(s) => RandomSource::from_u64(s).derive(&ann.session.to_le_bytes()).for_party(index as PartyId),
                None => RandomSource::from_entropy(),
            };
            let (res, transcript) =
                run_tcp_party(&mesh, ann.session, |ctx| async move { serve_session(&ctx, &snapshot, mode, &opts, &mut rng).await });
            mesh.close_session(ann.session);
            log.write(&transcript);
            if let Err(e) = res {
                eprintln!("obfw: session {}: {e}", ann.session);
            }
        });
    }
}

struct Gateway {
    mesh: Arc<TcpMesh>,
    config: FirewallConfig,
    mode: EvalMode,
    next: AtomicU64,
    log: TranscriptLog,
}

impl Gateway {
    fn check(&self, addr: Ipv4Addr) -> Result<EvalVerdict, CliError> {
        let session = self.next.fetch_add(1, Ordering::SeqCst);
        let (config, mode) = (self.config, self.mode);
        let (res, transcript) = run_tcp_party(&self.mesh, session, |ctx| async move { gateway_eval(&ctx, &config, addr, mode).await });
        self.mesh.close_session(session);
        self.log.write(&transcript);
        Ok(res?)
    }

    fn client(&self, stream: TcpStream) -> std::io::Result<()> {
        let reader = BufReader::new(stream.try_clone()?);
        let mut out = stream;
        for line in reader.lines() {
            let line = line?;
            let reply = match line.trim().strip_prefix("CHECK ").map(|a| a.trim().parse::<Ipv4Addr>()) {
                Some(Ok(addr)) => match self.check(addr) {
                    Ok(v) => v.line(),
                    Err(e) => format!("ERROR {e}"),
                },
                _ => "ERROR expected: CHECK <dotted-quad>".to_string(),
            };
            out.write_all(format!("{reply}\n").as_bytes())?;
        }
        Ok(())
    }
}

pub fn gateway(env: &Env, check: &[Ipv4Addr]) -> Result<(), CliError> {
    let fw = env.config()?.firewall()?;
    let mesh = mesh_for(fw, GATEWAY)?;
    // Servers ignore messages of sessions they have closed, so a restarted
    // gateway must not reuse ids.
    let base = match env.seed {
        Some(s) => s << 32,
        None => u64::from_le_bytes(RandomSource::from_entropy().seed()[..8].try_into().unwrap()) & !0xffff_ffff,
    };
    let gw = Arc::new(Gateway {
        mesh,
        config: fw.config()?,
        mode: fw.mode.into(),
        next: AtomicU64::new(base),
        log: TranscriptLog::open(env.transcript.as_ref())?,
    });
    if !check.is_empty() {
        let mut alert = false;
        for &addr in check {
            let v = gw.check(addr)?;
            println!("{}", v.line());
            alert |= v.alert;
        }
        return if alert { Err(CliError::Protocol("servers disagreed".into())) } else { Ok(()) };
    }
    let listener = TcpListener::bind(fw.gateway.listen).map_err(|e| CliError::Transport(format!("bind {}: {e}", fw.gateway.listen)))?;
    eprintln!("gateway: mesh {}, clients {}", gw.mesh.local_addr(), fw.gateway.listen);
    for stream in listener.incoming().flatten() {
        let gw = gw.clone();
        thread::spawn(move || {
            let _ = gw.client(stream);
        });
    }
    Ok(())
}

pub fn admin_update(env: &Env, addr: Ipv4Addr) -> Result<(), CliError> {
    let fw = env.config()?.firewall()?;
    let config = fw.config()?;
    let psk = fw.psk()?;
    let path = fw.filter_file();
    let mut filter = BloomFilter::read_from(File::open(&path).map_err(io_err(&path))?, config.bloom.eta)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let seq_path = fw.seq_file();
    let last: u64 = match fs::read_to_string(&seq_path) {
        Ok(s) => s.trim().parse().map_err(|_| CliError::Usage(format!("{}: not a number", seq_path.display())))?,
        Err(_) => 0,
    };
    let seq = last + 1;
    let mut rng = rng_for(env, &seq.to_le_bytes());
    let deltas = fw_update(&config, filter.indexer(), addr, seq, &mut rng)?;
    // Burn the sequence number before anything is sent.
    fs::write(&seq_path, format!("{seq}\n")).map_err(io_err(&seq_path))?;

    let timeout = Duration::from_millis(fw.timeout_ms);
    let mut unreachable = Vec::new();
    let mut rejected = Vec::new();
    for d in &deltas {
        let ep = fw.server(d.index)?;
        let reply = TcpStream::connect_timeout(&ep.admin, timeout).and_then(|mut s| {
            s.set_read_timeout(Some(timeout))?;
            s.write_all(encode_update(&psk, d).as_bytes())?;
            let mut line = String::new();
            BufReader::new(s).read_line(&mut line)?;
            Ok(line)
        });
        match reply {
            Ok(line) if line.starts_with("OK") => {}
            Ok(line) => rejected.push(format!("server {}: {}", d.index, line.trim())),
            Err(e) => unreachable.push(format!("server {}: {e}", d.index)),
        }
    }
    filter.insert(&addr.octets());
    filter
        .write_to(File::create(&path).map_err(io_err(&path))?)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    if !unreachable.is_empty() {
        return Err(CliError::Transport(unreachable.join("; ")));
    }
    if !rejected.is_empty() {
        return Err(CliError::Protocol(rejected.join("; ")));
    }
    println!("{addr} added on {} servers (seq {seq})", deltas.len());
    Ok(())
}
