//! Newline-delimited JSON worker protocol.
//!
//! Request: `{"id":u64,"kind":"expectation"|"overlap","circuit":..|"circuits":[a,b],
//! "qubit":?,"noise":?,"shots":?,"seed":?}`.
//! Response: `{"id":u64,"value":f64}` or `{"id":u64,"error":string}`.
//!
//! A request without `noise` runs under the worker's default noise (set at
//! start-up) or ideally when the worker has none.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{evaluate_expectation, evaluate_kernel, ExecMode, Executor, ExpectationJob, KernelJob};
use crate::simulator::{Circuit, NoiseModel};

pub const KIND_EXPECTATION: &str = "expectation";
pub const KIND_OVERLAP: &str = "overlap";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circuit: Option<Circuit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circuits: Option<Vec<Circuit>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubit: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Borrowing twin of [`Request`] used on the sending side.
#[derive(Serialize)]
struct OutRequest<'a> {
    id: u64,
    kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    circuit: Option<&'a Circuit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    circuits: Option<[&'a Circuit; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    qubit: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    noise: Option<&'a NoiseModel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shots: Option<u32>,
    seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub id: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Response {
    fn ok(id: u64, value: f64) -> Self {
        Response { id: Some(id), value: Some(value), error: None }
    }

    fn err(id: Option<u64>, message: impl Into<String>) -> Self {
        Response { id, value: None, error: Some(message.into()) }
    }
}

/// Drops one connection without answering once `after` requests have been
/// served in total. Used to exercise the client's restart path.
#[derive(Debug)]
pub struct FaultInjector {
    remaining: AtomicU64,
    fired: AtomicBool,
}

impl FaultInjector {
    pub fn new(after: u64) -> Self {
        FaultInjector { remaining: AtomicU64::new(after), fired: AtomicBool::new(false) }
    }

    pub fn fired(&self) -> bool {
        self.fired.load(Ordering::SeqCst)
    }

    fn should_drop(&self) -> bool {
        if self.fired() {
            return false;
        }
        let left = self.remaining.fetch_sub(1, Ordering::SeqCst);
        left == 0 && !self.fired.swap(true, Ordering::SeqCst)
    }
}

#[derive(Debug, Clone, Default)]
pub struct WorkerOptions {
    pub noise: Option<NoiseModel>,
    pub fault: Option<Arc<FaultInjector>>,
}

/// Evaluates one request against the local simulator.
pub fn worker_call(request: &Request, default_noise: Option<&NoiseModel>) -> Response {
    let id = request.id;
    let noise = request.noise.as_ref().or(default_noise);
    if let Some(n) = noise {
        if let Err(e) = n.validate() {
            return Response::err(Some(id), e.to_string());
        }
    }
    let mode = match noise {
        Some(n) => ExecMode::Noisy { noise: n.clone(), shots: request.shots },
        None => ExecMode::Ideal,
    };
    let seed = request.seed.unwrap_or(0);
    let result = match request.kind.as_str() {
        KIND_EXPECTATION => match &request.circuit {
            Some(c) => evaluate_expectation(
                &mode,
                &ExpectationJob { circuit: c.clone(), qubit: request.qubit.unwrap_or(0), seed },
            ),
            None => Err(Error::validation("expectation request without `circuit`")),
        },
        KIND_OVERLAP => match request.circuits.as_deref() {
            Some([a, b]) => evaluate_kernel(&mode, &KernelJob { a: a.clone(), b: b.clone(), seed }),
            _ => Err(Error::validation("overlap request needs exactly two `circuits`")),
        },
        _ => return Response::err(Some(id), "unknown kind"),
    };
    match result {
        Ok(v) => Response::ok(id, v),
        Err(e) => Response::err(Some(id), e.to_string()),
    }
}

fn parse_line(line: &str, options: &WorkerOptions) -> Response {
    let value: serde_json::Value = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(e) => return Response::err(None, format!("malformed message: {e}")),
    };
    let id = value.get("id").and_then(serde_json::Value::as_u64);
    match serde_json::from_value::<Request>(value) {
        Ok(r) => worker_call(&r, options.noise.as_ref()),
        Err(e) => Response::err(id, format!("malformed request: {e}")),
    }
}

/// Serves requests from `reader` until end of input; returns the number of
/// requests answered. Blank lines are ignored.
pub fn worker_serve<R: BufRead, W: Write>(reader: R, mut writer: W, options: &WorkerOptions) -> Result<u64> {
    let mut served = 0;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if options.fault.as_ref().is_some_and(|f| f.should_drop()) {
            return Err(Error::Service("injected fault: connection dropped".into()));
        }
        let response = parse_line(&line, options);
        serde_json::to_writer(&mut writer, &response)?;
        writer.write_all(b"\n")?;
        writer.flush()?;
        served += 1;
    }
    Ok(served)
}

/// TCP front end: one thread per connection.
pub struct WorkerServer {
    listener: TcpListener,
    options: Arc<WorkerOptions>,
}

impl WorkerServer {
    pub fn bind(address: &str, options: WorkerOptions) -> Result<Self> {
        let listener =
            TcpListener::bind(address).map_err(|e| Error::Service(format!("cannot bind `{address}`: {e}")))?;
        Ok(WorkerServer { listener, options: Arc::new(options) })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.listener.local_addr()?)
    }

    /// Accepts connections until `stop` is set.
    fn accept_loop(&self, stop: &AtomicBool) {
        for stream in self.listener.incoming() {
            if stop.load(Ordering::SeqCst) {
                break;
            }
            let Ok(stream) = stream else { continue };
            let options = Arc::clone(&self.options);
            std::thread::spawn(move || {
                let _ = stream.set_nodelay(true);
                let Ok(read_half) = stream.try_clone() else {
                    return;
                };
                let _ = worker_serve(BufReader::new(read_half), &stream, &options);
                let _ = stream.shutdown(std::net::Shutdown::Both);
            });
        }
    }

    /// Blocks serving forever.
    pub fn serve(self) -> Result<()> {
        self.accept_loop(&AtomicBool::new(false));
        Ok(())
    }

    pub fn spawn(self) -> Result<WorkerHandle> {
        let addr = self.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let flag = Arc::clone(&stop);
        let thread = std::thread::spawn(move || self.accept_loop(&flag));
        Ok(WorkerHandle { addr, stop, thread: Some(thread) })
    }
}

/// Background server; stops accepting when dropped.
pub struct WorkerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl WorkerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn shutdown(&mut self) {
        if let Some(t) = self.thread.take() {
            self.stop.store(true, Ordering::SeqCst);
            let _ = TcpStream::connect(self.addr);
            let _ = t.join();
        }
    }
}

impl Drop for WorkerHandle {
    fn drop(&mut self) {
        self.shutdown();
    }
}

struct Connection {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

impl Connection {
    fn open(address: &str) -> Result<Self> {
        let addr = address
            .to_socket_addrs()
            .map_err(|e| Error::Service(format!("cannot resolve `{address}`: {e}")))?
            .next()
            .ok_or_else(|| Error::Service(format!("no address for `{address}`")))?;
        let stream =
            TcpStream::connect(addr).map_err(|e| Error::Service(format!("cannot connect to {address}: {e}")))?;
        stream.set_nodelay(true)?;
        Ok(Connection { reader: BufReader::new(stream.try_clone()?), writer: stream })
    }
}

/// Executor that ships every circuit to a remote worker. Batches are
/// pipelined over pooled connections; a failed batch is resent once on a
/// fresh connection.
pub struct RemoteExecutor {
    name: String,
    mode: ExecMode,
    address: String,
    pool: Mutex<Vec<Connection>>,
    next_id: AtomicU64,
}

impl RemoteExecutor {
    pub fn new(name: impl Into<String>, mode: ExecMode, address: impl Into<String>) -> Self {
        RemoteExecutor {
            name: name.into(),
            mode,
            address: address.into(),
            pool: Mutex::new(Vec::new()),
            next_id: AtomicU64::new(1),
        }
    }

    pub fn address(&self) -> &str {
        &self.address
    }

    fn exchange(&self, conn: &mut Connection, lines: &[Vec<u8>], first_id: u64) -> Result<Vec<f64>> {
        let killer = conn.writer.try_clone()?;
        let writer = &mut conn.writer;
        let reader = &mut conn.reader;
        let (sent, received) = std::thread::scope(|s| {
            let w = s.spawn(move || -> std::io::Result<()> {
                for l in lines {
                    writer.write_all(l)?;
                }
                writer.flush()
            });
            let mut values: HashMap<u64, f64> = HashMap::with_capacity(lines.len());
            let mut read = || -> Result<()> {
                let mut buf = String::new();
                while values.len() < lines.len() {
                    buf.clear();
                    if reader.read_line(&mut buf)? == 0 {
                        return Err(Error::Service("worker closed the connection".into()));
                    }
                    let r: Response = serde_json::from_str(&buf)
                        .map_err(|e| Error::Service(format!("bad response from worker: {e}")))?;
                    match (r.id, r.value, r.error) {
                        (_, _, Some(e)) => return Err(Error::Service(format!("worker error: {e}"))),
                        (Some(id), Some(v), None) if (first_id..first_id + lines.len() as u64).contains(&id) => {
                            values.insert(id, v);
                        }
                        _ => return Err(Error::Service("unexpected response id".into())),
                    }
                }
                Ok(())
            };
            let received = read().map(|_| values);
            if received.is_err() {
                // unblocks the writer if the worker stopped reading
                let _ = killer.shutdown(std::net::Shutdown::Both);
            }
            (w.join().expect("writer thread"), received)
        });
        let values = received?;
        sent.map_err(|e| Error::Service(format!("send failed: {e}")))?;
        Ok((0..lines.len() as u64).map(|i| values[&(first_id + i)]).collect())
    }

    fn attempt(&self, lines: &[Vec<u8>], first_id: u64, fresh: bool) -> Result<Vec<f64>> {
        let pooled = if fresh { None } else { self.pool.lock().unwrap().pop() };
        let mut conn = match pooled {
            Some(c) => c,
            None => Connection::open(&self.address)?,
        };
        let values = self.exchange(&mut conn, lines, first_id)?;
        self.pool.lock().unwrap().push(conn);
        Ok(values)
    }

    fn run<'a>(&self, count: usize, build: impl Fn(u64, usize) -> OutRequest<'a>) -> Result<Vec<f64>> {
        if count == 0 {
            return Ok(Vec::new());
        }
        let first_id = self.next_id.fetch_add(count as u64, Ordering::Relaxed);
        let lines = (0..count)
            .map(|i| {
                let mut l = serde_json::to_vec(&build(first_id + i as u64, i))?;
                l.push(b'\n');
                Ok(l)
            })
            .collect::<Result<Vec<_>>>()?;
        match self.attempt(&lines, first_id, false) {
            Ok(v) => Ok(v),
            Err(Error::Service(first)) => self
                .attempt(&lines, first_id, true)
                .map_err(|e| Error::Service(format!("{e} (after retry; first attempt: {first})"))),
            Err(e) => Err(e),
        }
    }
}

impl Executor for RemoteExecutor {
    fn name(&self) -> &str {
        &self.name
    }

    fn mode(&self) -> &ExecMode {
        &self.mode
    }

    fn expectation_batch(&self, jobs: &[ExpectationJob]) -> Result<Vec<f64>> {
        let noise = self.mode.noise();
        let shots = self.mode.shots();
        self.run(jobs.len(), |id, i| OutRequest {
            id,
            kind: KIND_EXPECTATION,
            circuit: Some(&jobs[i].circuit),
            circuits: None,
            qubit: Some(jobs[i].qubit),
            noise,
            shots,
            seed: jobs[i].seed,
        })
    }

    fn kernel_batch(&self, jobs: &[KernelJob]) -> Result<Vec<f64>> {
        let noise = self.mode.noise();
        let shots = self.mode.shots();
        self.run(jobs.len(), |id, i| OutRequest {
            id,
            kind: KIND_OVERLAP,
            circuit: None,
            circuits: Some([&jobs[i].a, &jobs[i].b]),
            qubit: None,
            noise,
            shots,
            seed: jobs[i].seed,
        })
    }
}
