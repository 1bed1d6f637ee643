//! TCP transport: a full mesh of point-to-point connections carrying the
//! same envelopes as the simulator, one magic-prefixed record per message.
//!
//! Each party opens one outgoing connection per peer on first use and reads
//! every accepted connection on its own thread. Incoming envelopes are
//! queued per `(session, sender)`, so any number of sessions share the mesh.

use std::cell::RefCell;
use std::collections::{HashMap, HashSet, VecDeque};
use std::future::Future;
use std::io::BufReader;
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::pin::pin;
use std::rc::Rc;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::task::{Context, Poll, Wake, Waker};
use std::thread::{self, Thread};
use std::time::{Duration, Instant};

use super::ctx::{PartyCtx, RecvKey, Transport};
use super::envelope::{Envelope, PartyId, Tag};
use super::transcript::Transcript;
use super::{NetError, ProtocolError};

/// First message seen for a session nobody has claimed yet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionAnnouncement {
    pub session: u64,
    pub tag: Tag,
    pub sender: PartyId,
}

#[derive(Default)]
struct Inbox {
    queues: HashMap<(u64, PartyId), VecDeque<Envelope>>,
    wakers: Vec<Waker>,
    known: HashSet<u64>,
    closed: HashSet<u64>,
    announcements: VecDeque<SessionAnnouncement>,
    errors: Vec<NetError>,
}

pub struct TcpMesh {
    me: PartyId,
    local: SocketAddr,
    peers: Mutex<HashMap<PartyId, SocketAddr>>,
    writers: Mutex<HashMap<PartyId, TcpStream>>,
    readers: Mutex<Vec<(Option<SocketAddr>, TcpStream)>>,
    inbox: Mutex<Inbox>,
    arrivals: Condvar,
    announce: AtomicBool,
    shutdown: AtomicBool,
    pub connect_timeout: Duration,
    pub recv_timeout: Duration,
}

impl TcpMesh {
    /// Bind the listening socket and start accepting peers.
    pub fn bind(me: PartyId, listen: SocketAddr) -> Result<Arc<TcpMesh>, NetError> {
        Self::bind_with(me, listen, Duration::from_secs(10), Duration::from_secs(30))
    }

    /// [`TcpMesh::bind`] with explicit connect and receive timeouts.
    pub fn bind_with(me: PartyId, listen: SocketAddr, connect_timeout: Duration, recv_timeout: Duration) -> Result<Arc<TcpMesh>, NetError> {
        let listener = TcpListener::bind(listen).map_err(|e| NetError::Io(format!("bind {listen}: {e}")))?;
        let local = listener.local_addr().map_err(|e| NetError::Io(e.to_string()))?;
        let mesh = Arc::new(TcpMesh {
            me,
            local,
            peers: Mutex::new(HashMap::new()),
            writers: Mutex::new(HashMap::new()),
            readers: Mutex::new(Vec::new()),
            inbox: Mutex::new(Inbox::default()),
            arrivals: Condvar::new(),
            announce: AtomicBool::new(false),
            shutdown: AtomicBool::new(false),
            connect_timeout,
            recv_timeout,
        });
        let weak = Arc::downgrade(&mesh);
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Some(mesh) = weak.upgrade() else { break };
                if mesh.shutdown.load(Ordering::SeqCst) {
                    break;
                }
                if let Ok(stream) = stream {
                    let m = mesh.clone();
                    thread::spawn(move || m.read_loop(stream));
                }
            }
        });
        Ok(mesh)
    }

    pub fn me(&self) -> PartyId {
        self.me
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.local
    }

    pub fn add_peer(&self, id: PartyId, addr: SocketAddr) {
        self.peers.lock().unwrap().insert(id, addr);
    }

    /// Queue first messages of unknown sessions for [`TcpMesh::accept_session`].
    pub fn announce_sessions(&self, on: bool) {
        self.announce.store(on, Ordering::SeqCst);
    }

    /// Transport-level errors seen by reader threads (e.g. corrupt frames).
    pub fn errors(&self) -> Vec<NetError> {
        self.inbox.lock().unwrap().errors.clone()
    }

    pub fn shutdown(&self) {
        self.shutdown.store(true, Ordering::SeqCst);
        // Unblock the accept loop.
        let _ = TcpStream::connect_timeout(&self.local, Duration::from_millis(200));
        for (_, s) in self.writers.lock().unwrap().drain() {
            let _ = s.shutdown(std::net::Shutdown::Both);
        }
        for (_, s) in self.readers.lock().unwrap().drain(..) {
            let _ = s.shutdown(std::net::Shutdown::Both);
        }
    }

    fn read_loop(&self, stream: TcpStream) {
        let _ = stream.set_nodelay(true);
        let mut reader = BufReader::new(match stream.try_clone() {
            Ok(s) => s,
            Err(_) => return,
        });
        let peer = stream.peer_addr().ok();
        if let Ok(s) = stream.try_clone() {
            self.readers.lock().unwrap().push((peer, s));
        }
        loop {
            match Envelope::read_record(&mut reader) {
                Ok(Some(env)) => self.deliver(env),
                Ok(None) => break,
                Err(e) => {
                    self.inbox.lock().unwrap().errors.push(e);
                    let _ = stream.shutdown(std::net::Shutdown::Both);
                    break;
                }
            }
            if self.shutdown.load(Ordering::SeqCst) {
                break;
            }
        }
        self.readers.lock().unwrap().retain(|(p, _)| *p != peer);
    }

    fn deliver(&self, env: Envelope) {
        let mut inbox = self.inbox.lock().unwrap();
        if inbox.closed.contains(&env.session) {
            return;
        }
        if inbox.known.insert(env.session) && self.announce.load(Ordering::SeqCst) {
            inbox.announcements.push_back(SessionAnnouncement {
                session: env.session,
                tag: env.tag,
                sender: env.sender,
            });
        }
        inbox.queues.entry((env.session, env.sender)).or_default().push_back(env);
        for w in inbox.wakers.drain(..) {
            w.wake();
        }
        self.arrivals.notify_all();
    }

    /// Claim a session id for locally initiated work.
    pub fn open_session(&self, session: u64) {
        self.inbox.lock().unwrap().known.insert(session);
    }

    /// Drop queued state of a finished session and ignore late messages.
    pub fn close_session(&self, session: u64) {
        let mut inbox = self.inbox.lock().unwrap();
        inbox.queues.retain(|(s, _), _| *s != session);
        inbox.closed.insert(session);
    }

    /// Wait for the first message of a session this party did not open.
    pub fn accept_session(&self, timeout: Duration) -> Option<SessionAnnouncement> {
        let deadline = Instant::now() + timeout;
        let mut inbox = self.inbox.lock().unwrap();
        loop {
            if let Some(a) = inbox.announcements.pop_front() {
                return Some(a);
            }
            let now = Instant::now();
            if now >= deadline || self.shutdown.load(Ordering::SeqCst) {
                return None;
            }
            inbox = self.arrivals.wait_timeout(inbox, deadline - now).unwrap().0;
        }
    }

    pub fn send_envelope(&self, to: PartyId, env: &Envelope) -> Result<(), NetError> {
        let mut writers = self.writers.lock().unwrap();
        // A restarted peer leaves a half-closed writer behind; writes to it
        // would vanish, so reconnect instead.
        if writers.get(&to).is_some_and(peer_closed) {
            writers.remove(&to);
        }
        if !writers.contains_key(&to) {
            let addr = *self.peers.lock().unwrap().get(&to).ok_or(NetError::UnknownPeer(to))?;
            let stream = self.connect(addr)?;
            writers.insert(to, stream);
        }
        let stream = writers.get_mut(&to).unwrap();
        if let Err(e) = env.write_record(stream) {
            writers.remove(&to);
            return Err(NetError::Io(format!("send to {to}: {e}")));
        }
        Ok(())
    }

    fn connect(&self, addr: SocketAddr) -> Result<TcpStream, NetError> {
        let deadline = Instant::now() + self.connect_timeout;
        loop {
            match TcpStream::connect_timeout(&addr, Duration::from_millis(500)) {
                Ok(s) => {
                    let _ = s.set_nodelay(true);
                    return Ok(s);
                }
                Err(e) if Instant::now() >= deadline => {
                    return Err(NetError::ConnectFail(format!("{addr}: {e}")))
                }
                Err(_) => thread::sleep(Duration::from_millis(50)),
            }
        }
    }

    fn take(&self, key: &RecvKey, waker: &Waker) -> Option<Envelope> {
        let mut inbox = self.inbox.lock().unwrap();
        let q = inbox.queues.get_mut(&(key.session, key.from));
        if let Some(q) = q {
            if let Some(pos) = q.iter().position(|e| e.tag == key.tag) {
                return q.remove(pos);
            }
        }
        inbox.wakers.push(waker.clone());
        None
    }
}

/// Nothing is ever read from an outgoing connection, so pending EOF or an
/// error there means the peer went away.
fn peer_closed(stream: &TcpStream) -> bool {
    if stream.set_nonblocking(true).is_err() {
        return true;
    }
    let closed = match stream.peek(&mut [0u8; 1]) {
        Ok(_) => true,
        Err(e) => e.kind() != std::io::ErrorKind::WouldBlock,
    };
    let _ = stream.set_nonblocking(false);
    closed
}

/// One party's view of the mesh within a session.
struct TcpTransport {
    mesh: Arc<TcpMesh>,
    waiting: RefCell<Option<(RecvKey, Instant)>>,
}

impl Transport for TcpTransport {
    fn send(&self, to: PartyId, env: Envelope) -> Result<(), NetError> {
        self.mesh.send_envelope(to, &env)
    }

    fn poll_recv(&self, me: PartyId, key: RecvKey, cx: &mut Context<'_>) -> Poll<Result<Envelope, ProtocolError>> {
        if let Some(env) = self.mesh.take(&key, cx.waker()) {
            *self.waiting.borrow_mut() = None;
            return Poll::Ready(Ok(env));
        }
        let mut waiting = self.waiting.borrow_mut();
        let deadline = match *waiting {
            Some((k, d)) if k == key => d,
            _ => {
                let d = Instant::now() + self.mesh.recv_timeout;
                *waiting = Some((key, d));
                d
            }
        };
        if Instant::now() >= deadline {
            *waiting = None;
            return Poll::Ready(Err(ProtocolError::PartyTimeout { party: me, from: key.from, tag: key.tag }));
        }
        Poll::Pending
    }
}

struct ThreadWaker(Thread);

impl Wake for ThreadWaker {
    fn wake(self: Arc<Self>) {
        self.0.unpark();
    }
}

/// Drive a future on the current thread, re-polling at least every 20 ms
/// so receive deadlines are noticed.
pub fn block_on<F: Future>(fut: F) -> F::Output {
    let waker = Waker::from(Arc::new(ThreadWaker(thread::current())));
    let mut cx = Context::from_waker(&waker);
    let mut fut = pin!(fut);
    loop {
        if let Poll::Ready(v) = fut.as_mut().poll(&mut cx) {
            return v;
        }
        thread::park_timeout(Duration::from_millis(20));
    }
}

/// Run one party of one session over the mesh and return its output with
/// the transcript of what it sent and received.
pub fn run_tcp_party<T, F, Fut>(mesh: &Arc<TcpMesh>, session: u64, f: F) -> (T, Transcript)
where
    F: FnOnce(PartyCtx) -> Fut,
    Fut: Future<Output = T>,
{
    mesh.open_session(session);
    let log = Rc::new(RefCell::new(Transcript::default()));
    let transport = Rc::new(TcpTransport { mesh: mesh.clone(), waiting: RefCell::new(None) });
    let ctx = PartyCtx::new(mesh.me, session, transport, log.clone());
    let out = block_on(f(ctx));
    let transcript = log.borrow().clone();
    (out, transcript)
}

/// A full TCP mesh on 127.0.0.1 for running whole sessions in one process,
/// one thread per party.
pub struct Loopback {
    meshes: Vec<Arc<TcpMesh>>,
}

impl Loopback {
    pub fn new(ids: &[PartyId]) -> Result<Self, NetError> {
        let meshes = ids
            .iter()
            .map(|&id| TcpMesh::bind(id, SocketAddr::from(([127, 0, 0, 1], 0))))
            .collect::<Result<Vec<_>, _>>()?;
        for a in &meshes {
            for b in &meshes {
                if a.me != b.me {
                    a.add_peer(b.me, b.local);
                }
            }
        }
        Ok(Loopback { meshes })
    }

    pub fn mesh(&self, id: PartyId) -> Option<&Arc<TcpMesh>> {
        self.meshes.iter().find(|m| m.me == id)
    }

    /// Run one session: every party calls `f` with its own context. Outputs
    /// come back in the order the parties were given to [`Loopback::new`],
    /// with the transcripts of all parties merged.
    pub fn run<T, F, Fut>(&self, session: u64, f: F) -> (Vec<(PartyId, T)>, Transcript)
    where
        T: Send,
        F: Fn(PartyId, PartyCtx) -> Fut + Sync,
        Fut: Future<Output = T>,
    {
        let results: Vec<(PartyId, T, Transcript)> = thread::scope(|s| {
            let handles: Vec<_> = self
                .meshes
                .iter()
                .map(|mesh| {
                    let f = &f;
                    s.spawn(move || {
                        let (out, t) = run_tcp_party(mesh, session, |ctx| f(mesh.me, ctx));
                        (mesh.me, out, t)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("party thread panicked")).collect()
        });
        let mut transcript = Transcript::default();
        let mut outputs = Vec::new();
        for (id, out, t) in results {
            transcript.merge(t);
            outputs.push((id, out));
        }
        for m in &self.meshes {
            m.close_session(session);
        }
        (outputs, transcript)
    }
}

impl Drop for Loopback {
    fn drop(&mut self) {
        for m in &self.meshes {
            m.shutdown();
        }
    }
}
