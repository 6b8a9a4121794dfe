"""Bulk-synchronous farm skeleton: one master, P workers, per-iteration
macro-steps (send orders, process, receive results, evaluate) separated by
a full barrier.

Two interchangeable backends execute the same workload callbacks and must
produce identical outputs: ``sequential-sim`` runs everything in-process
with a deterministic synthetic clock, ``worker-pool`` runs workers in
spawned processes connected by pipes and reports measured timings.

Workload protocol (duck-typed):

    workload.cohort_count                      -> int
    workload.init(p_workers, partition)        -> setup  (picklable)
    workload.make_order()                      -> Order
    workload.merge_results(list[WorkerResult]) -> merged
    workload.evaluate(merged)                  -> None
    workload.exit_check()                      -> bool
    workload.finalize()                        -> final state

    setup.init_state(worker_id, cohorts)       -> state
    setup.process_order(state, order)          -> (state, bests)

``process_order`` must be pure in (state, order): replaying a recorded
order stream bit-reproduces the results.
"""

from __future__ import annotations

import os
import pickle
import statistics
import struct
import time
import traceback
from dataclasses import dataclass, field

import numpy as np

from .lp import DenseLP, SparseDelta, _readonly, delta_between

_PAIR = np.dtype([("i", "<u4"), ("v", "<f8")])

ORDER_FRAME = b"O"
PING_FRAME = b"P"
STOP_FRAME = b"S"
RESULT_FRAME = b"R"
PONG_FRAME = b"p"
ERROR_FRAME = b"E"


class BsfWorkerError(RuntimeError):
    """A worker failed; the run is aborted (no fault tolerance)."""


@dataclass(frozen=True)
class Order:
    """Master-to-worker message: the new cross center plus sparse data deltas."""

    theta: np.ndarray
    delta: SparseDelta
    clock: int

    def __post_init__(self):
        object.__setattr__(self, "theta", _readonly(self.theta))
        if self.clock < 0:
            raise ValueError("clock must be nonnegative")


@dataclass(frozen=True)
class WorkerResult:
    worker_id: int
    bests: tuple


def make_order(prev: DenseLP, next_lp: DenseLP, center, clock: int) -> Order:
    """Order that turns a worker holding ``prev`` into one holding ``next_lp``
    with the cross centered at ``center``. A stationary problem yields empty
    delta sections: only the center is transmitted."""
    return Order(theta=np.asarray(center, dtype=np.float64),
                 delta=delta_between(prev, next_lp), clock=clock)


@dataclass(frozen=True)
class RunMetrics:
    """Per-iteration cost parameters, averaged over the iterative process.

    Durations are nanoseconds. ``t_w_ns`` is always ``p_workers`` times the
    mean per-worker order-execution time ``t_v_ns``.
    """

    p_workers: int
    latency_ns: float
    t_s_ns: float
    t_v_ns: float
    t_r_ns: float
    t_p_ns: float
    t_w_ns: float
    iter_ns: float = 0.0
    t_v_spread_ns: float = 0.0
    iterations: int = 0

    CSV_HEADER = "P,L_ns,ts_ns,tv_ns,tr_ns,tp_ns,tw_ns"

    def csv_row(self) -> str:
        return (f"{self.p_workers},{self.latency_ns!r},{self.t_s_ns!r},{self.t_v_ns!r},"
                f"{self.t_r_ns!r},{self.t_p_ns!r},{self.t_w_ns!r}")


def metrics_to_csv(rows, path) -> None:
    with open(path, "w") as fh:
        fh.write(RunMetrics.CSV_HEADER + "\n")
        for r in rows:
            fh.write(r.csv_row() + "\n")


@dataclass(frozen=True)
class SimTiming:
    """Synthetic per-unit costs charged by the sequential simulator."""

    latency_ns: float = 10_000.0
    send_ns: float = 2_000.0
    work_ns_per_cohort: float = 100_000.0
    recv_ns: float = 2_000.0
    evaluate_ns: float = 10_000.0


@dataclass
class BsfRecorder:
    """Captures the order stream and per-iteration results for replay."""

    orders: list = field(default_factory=list)
    results: list = field(default_factory=list)


# --- wire format ------------------------------------------------------------
# Orders: little-endian, length-prefixed sections. Layout:
#   u32 n | n x f64 theta | u64 clock
#   u32 count_a | count_a x (u32 row*n+col, f64 value)
#   u32 count_b | count_b x (u32 index, f64 value)
#   u32 count_c | count_c x (u32 index, f64 value)


def _pairs_to_bytes(idx: np.ndarray, vals: np.ndarray) -> bytes:
    rec = np.empty(len(idx), dtype=_PAIR)
    rec["i"] = idx
    rec["v"] = vals
    return struct.pack("<I", len(idx)) + rec.tobytes()


def order_to_bytes(order: Order) -> bytes:
    n = order.theta.shape[0]
    d = order.delta
    head = struct.pack("<I", n) + order.theta.astype("<f8").tobytes()
    head += struct.pack("<Q", order.clock)
    body = _pairs_to_bytes(d.a_rows * n + d.a_cols, d.a_vals)
    body += _pairs_to_bytes(d.b_idx, d.b_vals)
    body += _pairs_to_bytes(d.c_idx, d.c_vals)
    return head + body


def order_from_bytes(buf: bytes) -> Order:
    (n,) = struct.unpack_from("<I", buf, 0)
    off = 4
    theta = np.frombuffer(buf, dtype="<f8", count=n, offset=off).copy()
    off += 8 * n
    (clock,) = struct.unpack_from("<Q", buf, off)
    off += 8
    sections = []
    for _ in range(3):
        (count,) = struct.unpack_from("<I", buf, off)
        off += 4
        rec = np.frombuffer(buf, dtype=_PAIR, count=count, offset=off)
        off += count * _PAIR.itemsize
        sections.append((rec["i"].astype(np.int64), rec["v"].astype(np.float64)))
    if off != len(buf):
        raise ValueError("trailing bytes in order frame")
    (a_idx, a_vals), (b_idx, b_vals), (c_idx, c_vals) = sections
    delta = SparseDelta(a_idx // n, a_idx % n, a_vals, b_idx, b_vals, c_idx, c_vals)
    return Order(theta=theta, delta=delta, clock=int(clock))


def save_order_stream(path, orders) -> None:
    with open(path, "wb") as fh:
        fh.write(struct.pack("<I", len(orders)))
        for frame in orders:
            fh.write(struct.pack("<I", len(frame)))
            fh.write(frame)


def load_order_stream(path) -> list[bytes]:
    with open(path, "rb") as fh:
        (count,) = struct.unpack("<I", fh.read(4))
        frames = []
        for _ in range(count):
            (size,) = struct.unpack("<I", fh.read(4))
            frames.append(fh.read(size))
    return frames


def replay_orders(setup, worker_id: int, cohorts, order_frames) -> list[tuple]:
    """Re-run a recorded order stream against a fresh worker state."""
    state = setup.init_state(worker_id, tuple(cohorts))
    out = []
    for frame in order_frames:
        state, bests = setup.process_order(state, order_from_bytes(frame))
        out.append(tuple(bests))
    return out


# --- partitioning -----------------------------------------------------------


def block_partition(n_items: int, p: int) -> list[list[int]]:
    """Contiguous blocks; the first ``n_items % p`` workers take one extra."""
    if p < 1:
        raise ValueError("need at least one worker")
    if n_items < p:
        raise ValueError(f"cannot split {n_items} cohorts over {p} workers")
    base, extra = divmod(n_items, p)
    parts = []
    start = 0
    for w in range(p):
        size = base + (1 if w < extra else 0)
        parts.append(list(range(start, start + size)))
        start += size
    return parts


# --- sequential simulator ---------------------------------------------------


def _run_sim(workload, p_workers: int, timing: SimTiming, recorder: BsfRecorder | None):
    partition = block_partition(workload.cohort_count, p_workers)
    setup = workload.init(p_workers, partition)
    states = [setup.init_state(w, tuple(partition[w])) for w in range(p_workers)]
    work_ns = [timing.work_ns_per_cohort * len(partition[w]) for w in range(p_workers)]
    iterations = 0
    while True:
        order = workload.make_order()
        frame = order_to_bytes(order)
        if recorder is not None:
            recorder.orders.append(frame)
        results = []
        for w in range(p_workers):
            states[w], bests = setup.process_order(states[w], order_from_bytes(frame))
            results.append(WorkerResult(w, tuple(bests)))
        if len(results) != p_workers:  # barrier: all results before evaluate
            raise BsfWorkerError("missing worker results at barrier")
        if recorder is not None:
            recorder.results.append(list(results))
        workload.evaluate(workload.merge_results(results))
        iterations += 1
        if workload.exit_check():
            break
    t_v = statistics.fmean(work_ns)
    iter_ns = (p_workers * (timing.send_ns + timing.latency_ns) + max(work_ns)
               + timing.latency_ns + p_workers * timing.recv_ns + timing.evaluate_ns)
    metrics = RunMetrics(
        p_workers=p_workers,
        latency_ns=timing.latency_ns,
        t_s_ns=timing.send_ns,
        t_v_ns=t_v,
        t_r_ns=p_workers * timing.recv_ns,
        t_p_ns=timing.evaluate_ns,
        t_w_ns=p_workers * t_v,
        iter_ns=iter_ns,
        t_v_spread_ns=float(max(work_ns) - min(work_ns)),
        iterations=iterations,
    )
    return workload.finalize(), metrics


# --- worker pool ------------------------------------------------------------


def _worker_main(conn, worker_id: int, cohorts, setup_blob: bytes) -> None:
    try:
        setup = pickle.loads(setup_blob)
        state = setup.init_state(worker_id, tuple(cohorts)) if setup is not None else None
        while True:
            msg = conn.recv_bytes()
            tag = msg[:1]
            if tag == ORDER_FRAME:
                t0 = time.perf_counter_ns()
                order = order_from_bytes(msg[1:])
                state, bests = setup.process_order(state, order)
                t_v = time.perf_counter_ns() - t0
                payload = pickle.dumps((worker_id, tuple(bests)), protocol=pickle.HIGHEST_PROTOCOL)
                conn.send_bytes(RESULT_FRAME + struct.pack("<Q", t_v) + payload)
            elif tag == PING_FRAME:
                conn.send_bytes(PONG_FRAME)
            elif tag == STOP_FRAME:
                return
            else:
                raise RuntimeError(f"unknown frame tag {tag!r}")
    except EOFError:
        pass
    except BaseException:
        try:
            conn.send_bytes(ERROR_FRAME + traceback.format_exc().encode())
        except Exception:
            pass
    finally:
        try:
            conn.close()
        except Exception:
            pass


class _Pool:
    """Spawned worker processes, one duplex pipe each."""

    def __init__(self, p_workers: int, partition, setup):
        import multiprocessing as mp

        # keep worker math on one BLAS thread: deterministic reductions and
        # no oversubscription underneath the process-level parallelism
        for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, "1")
        ctx = mp.get_context("spawn")
        blob = pickle.dumps(setup, protocol=pickle.HIGHEST_PROTOCOL)
        self.conns = []
        self.procs = []
        children = []
        for w in range(p_workers):
            parent, child = ctx.Pipe(duplex=True)
            proc = ctx.Process(
                target=_worker_main,
                args=(child, w, tuple(partition[w]) if partition else (), blob),
                daemon=True,
            )
            proc.start()
            children.append(child)
            self.conns.append(parent)
            self.procs.append(proc)
        for child in children:
            child.close()

    def recv(self, w: int) -> bytes:
        msg = self.conns[w].recv_bytes()
        if msg[:1] == ERROR_FRAME:
            raise BsfWorkerError(f"worker {w} failed:\n{msg[1:].decode(errors='replace')}")
        return msg

    def check_alive(self) -> None:
        for w, proc in enumerate(self.procs):
            if not proc.is_alive() and proc.exitcode not in (0, None):
                raise BsfWorkerError(f"worker {w} died with exit code {proc.exitcode}")

    def ping_latency_ns(self, rounds: int = 1000) -> float:
        """Median one-byte ping-pong round trip over worker 0, halved."""
        samples = []
        for _ in range(rounds):
            t0 = time.perf_counter_ns()
            self.conns[0].send_bytes(PING_FRAME)
            msg = self.recv(0)
            if msg != PONG_FRAME:
                raise BsfWorkerError("unexpected reply to ping")
            samples.append(time.perf_counter_ns() - t0)
        return statistics.median(samples) / 2.0

    def shutdown(self) -> None:
        for conn in self.conns:
            try:
                conn.send_bytes(STOP_FRAME)
            except (BrokenPipeError, OSError):
                pass
        for proc in self.procs:
            proc.join(timeout=10)
        for proc in self.procs:
            if proc.is_alive():
                proc.terminate()
                proc.join(timeout=5)
        for conn in self.conns:
            try:
                conn.close()
            except Exception:
                pass


def _run_pool(workload, p_workers: int, recorder: BsfRecorder | None, latency_rounds: int = 1000):
    partition = block_partition(workload.cohort_count, p_workers)
    setup = workload.init(p_workers, partition)
    pool = _Pool(p_workers, partition, setup)
    try:
        latency = pool.ping_latency_ns(latency_rounds)
        send_ns: list[float] = []
        recv_ns_total = 0.0
        eval_ns: list[float] = []
        iter_ns: list[float] = []
        tv_by_worker = [[] for _ in range(p_workers)]
        iterations = 0
        while True:
            iter_start = time.perf_counter_ns()
            order = workload.make_order()
            frame = ORDER_FRAME + order_to_bytes(order)
            if recorder is not None:
                recorder.orders.append(frame[1:])
            for w in range(p_workers):
                t0 = time.perf_counter_ns()
                try:
                    pool.conns[w].send_bytes(frame)
                except (BrokenPipeError, OSError) as exc:
                    pool.check_alive()
                    raise BsfWorkerError(f"worker {w} pipe closed: {exc}") from exc
                send_ns.append(time.perf_counter_ns() - t0)
            results, received = [None] * p_workers, 0
            pending = set(range(p_workers))
            idle_pause = 0.00002
            while pending:
                progressed = False
                for w in sorted(pending):
                    if pool.conns[w].poll(0):
                        t0 = time.perf_counter_ns()
                        msg = pool.recv(w)
                        recv_ns_total += time.perf_counter_ns() - t0
                        if msg[:1] != RESULT_FRAME:
                            raise BsfWorkerError(f"unexpected frame {msg[:1]!r} from worker {w}")
                        (t_v,) = struct.unpack_from("<Q", msg, 1)
                        wid, bests = pickle.loads(msg[9:])
                        tv_by_worker[w].append(t_v)
                        results[w] = WorkerResult(wid, bests)
                        pending.discard(w)
                        received += 1
                        progressed = True
                if pending and not progressed:
                    for w in sorted(pending):
                        if not pool.procs[w].is_alive() and not pool.conns[w].poll(0):
                            raise BsfWorkerError(
                                f"worker {w} exited before answering "
                                f"(exit code {pool.procs[w].exitcode})")
                    time.sleep(idle_pause)
                    idle_pause = min(idle_pause * 2, 0.0002)
            if received != p_workers:  # barrier: evaluate only after all results
                raise BsfWorkerError("barrier violated: missing results")
            if recorder is not None:
                recorder.results.append(list(results))
            t0 = time.perf_counter_ns()
            workload.evaluate(workload.merge_results(results))
            eval_ns.append(time.perf_counter_ns() - t0)
            iterations += 1
            iter_ns.append(time.perf_counter_ns() - iter_start)
            if workload.exit_check():
                break
        worker_means = [statistics.fmean(v) for v in tv_by_worker]
        t_v = statistics.fmean(worker_means)
        metrics = RunMetrics(
            p_workers=p_workers,
            latency_ns=latency,
            t_s_ns=max(0.0, statistics.fmean(send_ns) - latency),
            t_v_ns=t_v,
            t_r_ns=max(0.0, recv_ns_total / iterations - p_workers * latency),
            t_p_ns=statistics.fmean(eval_ns),
            t_w_ns=p_workers * t_v,
            iter_ns=statistics.fmean(iter_ns),
            t_v_spread_ns=float(max(worker_means) - min(worker_means)),
            iterations=iterations,
        )
        return workload.finalize(), metrics
    finally:
        pool.shutdown()


BACKENDS = ("sequential-sim", "worker-pool")
_BACKEND_ALIASES = {"sim": "sequential-sim", "pool": "worker-pool"}


def run_bsf(workload, p_workers: int, backend: str = "sequential-sim", *,
            sim_timing: SimTiming | None = None, recorder: BsfRecorder | None = None,
            latency_rounds: int = 1000):
    """Run a workload through the farm; returns (final state, RunMetrics).

    Both backends produce identical workload outputs; only the metrics
    differ (synthetic for the simulator, measured for the pool).
    """
    backend = _BACKEND_ALIASES.get(backend, backend)
    if backend not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}, got {backend!r}")
    if p_workers < 1:
        raise ValueError("need at least one worker")
    if workload.cohort_count < p_workers:
        raise ValueError(
            f"worker count {p_workers} exceeds cohort count {workload.cohort_count}")
    if backend == "sequential-sim":
        return _run_sim(workload, p_workers, sim_timing or SimTiming(), recorder)
    return _run_pool(workload, p_workers, recorder, latency_rounds)


class _NullSetup:
    def init_state(self, worker_id, cohorts):
        return None

    def process_order(self, state, order):
        return None, ()


def measure_latency(backend: str = "sequential-sim", *, sim_timing: SimTiming | None = None,
                    rounds: int = 1000) -> float:
    """Estimated one-byte message latency (ns) for the given transport."""
    backend = _BACKEND_ALIASES.get(backend, backend)
    if backend == "sequential-sim":
        return (sim_timing or SimTiming()).latency_ns
    pool = _Pool(1, [[0]], _NullSetup())
    try:
        return pool.ping_latency_ns(rounds)
    finally:
        pool.shutdown()


@dataclass(frozen=True)
class BsfExecutor:
    """A configured backend choice, passed to the solvers that need one."""

    backend: str = "sequential-sim"
    p_workers: int = 1
    sim_timing: SimTiming = field(default_factory=SimTiming)
    latency_rounds: int = 1000

    def run(self, workload, recorder: BsfRecorder | None = None):
        return run_bsf(workload, self.p_workers, self.backend,
                       sim_timing=self.sim_timing, recorder=recorder,
                       latency_rounds=self.latency_rounds)

    def measure_latency(self) -> float:
        return measure_latency(self.backend, sim_timing=self.sim_timing,
                               rounds=self.latency_rounds)
