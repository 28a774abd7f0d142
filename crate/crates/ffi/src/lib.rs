//! C ABI over the `perisim` library.
//!
//! Topologies are opaque heap handles created by `perisim_topology_*`
//! constructors and released with [`perisim_topology_free`]. Every fallible
//! call returns a [`PerisimStatus`]; on failure the message is kept per
//! thread and can be copied out with [`perisim_last_error_message`]. Panics
//! never cross the boundary, they surface as `PERISIM_STATUS_INTERNAL`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use perisim::advantage::AdvantageEvaluator;
use perisim::liveness::{derive_schedule, LiveNetParams};
use perisim::topology::{enrich_with_hubs, generate_graph, GraphModel, GraphSpec, SourceDestSpec, Topology};
use perisim::{Error, NodeId};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PerisimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InstanceTooLarge = 3,
    Parse = 4,
    Io = 5,
    Disconnected = 6,
    BufferTooSmall = 7,
    Internal = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PerisimGraphModel {
    ErdosRenyi = 0,
    RandomRegular = 1,
    BarabasiAlbert = 2,
    WattsStrogatz = 3,
}

fn graph_model(raw: u32) -> Result<GraphModel, Fail> {
    match raw {
        x if x == PerisimGraphModel::ErdosRenyi as u32 => Ok(GraphModel::ErdosRenyi),
        x if x == PerisimGraphModel::RandomRegular as u32 => Ok(GraphModel::RandomRegular),
        x if x == PerisimGraphModel::BarabasiAlbert as u32 => Ok(GraphModel::BarabasiAlbert),
        x if x == PerisimGraphModel::WattsStrogatz as u32 => Ok(GraphModel::WattsStrogatz),
        other => Err(Fail(PerisimStatus::InvalidArgument, format!("unknown graph model {other}"))),
    }
}

/// Opaque graph handle.
pub struct PerisimTopology {
    inner: Topology,
}

/// Victim-discovery schedule; see `perisim_liveness_schedule`.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PerisimSchedule {
    pub epsilon: f64,
    pub rounds: u32,
    pub delta1: f64,
    pub delta2: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub gamma: f64,
    pub mu: f64,
    pub zeta: f64,
    pub total_time: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> PerisimStatus {
    match e {
        Error::InvalidParameter(_) | Error::NodeOutOfRange { .. } | Error::InvalidEdge(..) => {
            PerisimStatus::InvalidArgument
        }
        Error::InstanceTooLarge { .. } => PerisimStatus::InstanceTooLarge,
        Error::Parse { .. } => PerisimStatus::Parse,
        Error::Io(_) => PerisimStatus::Io,
        Error::Disconnected { .. } => PerisimStatus::Disconnected,
    }
}

struct Fail(PerisimStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(PerisimStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PerisimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PerisimStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".to_string());
            PerisimStatus::Internal
        }
    }
}

/// Borrow `len` elements; a zero length accepts a null pointer.
unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn topology_arg<'a>(t: *const PerisimTopology) -> Result<&'a Topology, Fail> {
    t.as_ref().map(|h| &h.inner).ok_or_else(|| null("topology"))
}

fn node_ids(ids: &[u32]) -> Vec<NodeId> {
    ids.iter().map(|&i| NodeId(i)).collect()
}

unsafe fn hand_out(t: Topology, out: *mut *mut PerisimTopology) {
    *out = Box::into_raw(Box::new(PerisimTopology { inner: t }));
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length plus one,
/// or 0 when there is no pending error.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn perisim_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes_with_nul();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len);
                ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n - 1) = 0;
            }
            bytes.len()
        }
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn perisim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Generates a connected random graph; `model` is a `PerisimGraphModel`
/// value.
///
/// # Safety
/// `out` must be a valid pointer to write the new handle to.
#[no_mangle]
pub unsafe extern "C" fn perisim_topology_generate(
    model: u32,
    node_count: usize,
    avg_degree: f64,
    seed: u64,
    out: *mut *mut PerisimTopology,
) -> PerisimStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let t = generate_graph(&GraphSpec::new(graph_model(model)?, node_count, avg_degree, seed))?;
        hand_out(t, out);
        Ok(())
    })
}

/// Builds a graph from parallel endpoint arrays. `weights` may be null for
/// unit weights.
///
/// # Safety
/// `us`, `vs` (and `weights` when non-null) must each hold `edge_count`
/// elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn perisim_topology_from_edges(
    node_count: usize,
    us: *const u32,
    vs: *const u32,
    weights: *const f64,
    edge_count: usize,
    out: *mut *mut PerisimTopology,
) -> PerisimStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let us = slice_arg(us, edge_count, "us")?;
        let vs = slice_arg(vs, edge_count, "vs")?;
        let ws = if weights.is_null() { None } else { Some(slice_arg(weights, edge_count, "weights")?) };
        let mut t = Topology::empty(node_count);
        for i in 0..edge_count {
            t.add_edge(NodeId(us[i]), NodeId(vs[i]), ws.map_or(1.0, |w| w[i]))?;
        }
        hand_out(t, out);
        Ok(())
    })
}

/// New handle with `count` extra hub nodes of `degree` random links each.
///
/// # Safety
/// `topology` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn perisim_topology_enrich_hubs(
    topology: *const PerisimTopology,
    count: usize,
    degree: usize,
    seed: u64,
    out: *mut *mut PerisimTopology,
) -> PerisimStatus {
    guard(|| {
        let t = topology_arg(topology)?;
        if out.is_null() {
            return Err(null("out"));
        }
        hand_out(enrich_with_hubs(t, count, degree, seed)?, out);
        Ok(())
    })
}

/// # Safety
/// `topology` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn perisim_topology_node_count(
    topology: *const PerisimTopology,
    out: *mut usize,
) -> PerisimStatus {
    guard(|| {
        let t = topology_arg(topology)?;
        *out.as_mut().ok_or_else(|| null("out"))? = t.node_count();
        Ok(())
    })
}

/// # Safety
/// `topology` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn perisim_topology_edge_count(
    topology: *const PerisimTopology,
    out: *mut usize,
) -> PerisimStatus {
    guard(|| {
        let t = topology_arg(topology)?;
        *out.as_mut().ok_or_else(|| null("out"))? = t.edge_count();
        Ok(())
    })
}

/// Releases a handle. Null is a no-op.
///
/// # Safety
/// `topology` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn perisim_topology_free(topology: *mut PerisimTopology) {
    if !topology.is_null() {
        drop(Box::from_raw(topology));
    }
}

/// Adversarial advantage of `peers` over the given source and destination
/// sets, with penalty `tau`.
///
/// # Safety
/// Arrays must hold the stated number of elements; `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn perisim_advantage(
    topology: *const PerisimTopology,
    sources: *const u32,
    source_count: usize,
    destinations: *const u32,
    destination_count: usize,
    peers: *const u32,
    peer_count: usize,
    tau: f64,
    out_value: *mut f64,
) -> PerisimStatus {
    guard(|| {
        let t = topology_arg(topology)?;
        let sd = SourceDestSpec::new(
            node_ids(slice_arg(sources, source_count, "sources")?),
            node_ids(slice_arg(destinations, destination_count, "destinations")?),
        )?;
        let peers = node_ids(slice_arg(peers, peer_count, "peers")?);
        let out = out_value.as_mut().ok_or_else(|| null("out_value"))?;
        *out = AdvantageEvaluator::new(t, &sd, tau)?.evaluate(&peers)?.value();
        Ok(())
    })
}

/// Greedy peer selection of size `k`; writes the peers in selection order to
/// `out_peers`, which must have room for `out_capacity >= k` ids.
///
/// # Safety
/// Arrays must hold the stated number of elements; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn perisim_greedy(
    topology: *const PerisimTopology,
    sources: *const u32,
    source_count: usize,
    destinations: *const u32,
    destination_count: usize,
    k: usize,
    tau: f64,
    out_peers: *mut u32,
    out_capacity: usize,
    out_value: *mut f64,
) -> PerisimStatus {
    guard(|| {
        let t = topology_arg(topology)?;
        if out_capacity < k {
            return Err(Fail(
                PerisimStatus::BufferTooSmall,
                format!("need room for {k} peers, got {out_capacity}"),
            ));
        }
        if out_peers.is_null() && k > 0 {
            return Err(null("out_peers"));
        }
        let value = out_value.as_mut().ok_or_else(|| null("out_value"))?;
        let sd = SourceDestSpec::new(
            node_ids(slice_arg(sources, source_count, "sources")?),
            node_ids(slice_arg(destinations, destination_count, "destinations")?),
        )?;
        let ev = AdvantageEvaluator::new(t, &sd, tau)?;
        let (order, trace) = ev.greedy_trace(k)?;
        for (i, p) in order.iter().enumerate() {
            *out_peers.add(i) = p.0;
        }
        *value = *trace.last().expect("greedy trace is non-empty") as f64 / 2.0;
        Ok(())
    })
}

/// Discovery schedule for failure probability `epsilon`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn perisim_liveness_schedule(
    epsilon: f64,
    lambda: f64,
    nu: f64,
    q: f64,
    d: u32,
    out: *mut PerisimSchedule,
) -> PerisimStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let s = derive_schedule(epsilon, &LiveNetParams::new(lambda, nu, q, d))?;
        *out = PerisimSchedule {
            epsilon: s.epsilon,
            rounds: s.k,
            delta1: s.delta1,
            delta2: s.delta2,
            eps1: s.eps1,
            eps2: s.eps2,
            gamma: s.gamma,
            mu: s.mu,
            zeta: s.zeta,
            total_time: s.total_time(),
        };
        Ok(())
    })
}
