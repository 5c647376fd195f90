"""
FitzHugh-Nagumo integration on a masked lattice.

    du/dt = c1 u (u - a)(1 - u) - c2 u v + I + D_u lap(u)
    dv/dt = b (u - v)

Explicit Euler in time, five-node Laplacian in space. Neighbours that are
off-grid or non-conductive contribute zero flux, which is the discrete form
of an impermeable (zero normal derivative) boundary around every strand.

Only conductive nodes are integrated; the others hold exactly 0 forever.
Every step reads the previous buffers and writes fresh ones, so the result
does not depend on node visiting order or on how rows are split between
workers.

Checkpoint layout (``MYCOSTATE1``)::

    b"MYCOSTATE1\\n"
    b"<rows> <cols> <iteration>\\n"
    u  as rows*cols little-endian float64, row-major
    v  as rows*cols little-endian float64, row-major
"""
from __future__ import annotations

import dataclasses
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np

from .errors import GridFormatError, IntegrationDiverged
from .ingest import ConductiveGrid

STATE_MAGIC = b"MYCOSTATE1"
DEFAULT_CADENCE = 100


@dataclass(frozen=True)
class FhnParams:
    D_u: float = 1.0
    a: float = 0.13
    b: float = 0.013
    c1: float = 0.26
    c2: float = 0.05
    I: float = 0.0
    dt: float = 0.015
    dx: float = 2.0

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise ValueError("; ".join(problems))

    def problems(self):
        out = []
        if not self.dt > 0:
            out.append("dt must be positive")
        if not self.dx > 0:
            out.append("dx must be positive")
        if not self.D_u >= 0:
            out.append("D_u must be non-negative")
        if not 0 < self.a < 1:
            out.append("a must lie in (0, 1)")
        return out

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


class FieldState:
    """Excitation ``u`` and recovery ``v`` over a grid, plus the step counter.

    Fields are available both as full ``(rows, cols)`` arrays (``u``, ``v``)
    and as vectors over the conductive nodes in row-major order (``u_nodes``,
    ``v_nodes``); whichever form is missing is built on first access. Treat
    the arrays as read-only: states handed to observers during :func:`run`
    share buffers with the integrator.
    """

    def __init__(self, grid, u=None, v=None, iteration=0, *, u_nodes=None, v_nodes=None):
        if (u is None) != (v is None) or (u_nodes is None) != (v_nodes is None) or (u is None and u_nodes is None):
            raise ValueError("give either full u and v arrays or u_nodes and v_nodes")
        self.grid = grid
        self._u, self._v = u, v
        self._u_nodes, self._v_nodes = u_nodes, v_nodes
        self.iteration = int(iteration)

    def _scatter(self, nodes):
        full = np.zeros(self.grid.shape)
        full.ravel()[topology(self.grid).idx] = nodes
        return full

    @property
    def u(self):
        if self._u is None:
            self._u = self._scatter(self._u_nodes)
        return self._u

    @property
    def v(self):
        if self._v is None:
            self._v = self._scatter(self._v_nodes)
        return self._v

    @property
    def u_nodes(self):
        if self._u_nodes is None:
            self._u_nodes = np.ascontiguousarray(self._u, dtype=np.float64).ravel()[topology(self.grid).idx]
        return self._u_nodes

    @property
    def v_nodes(self):
        if self._v_nodes is None:
            self._v_nodes = np.ascontiguousarray(self._v, dtype=np.float64).ravel()[topology(self.grid).idx]
        return self._v_nodes

    @property
    def mask(self):
        return self.grid.mask

    def copy(self):
        return FieldState(self.grid, self.u.copy(), self.v.copy(), self.iteration)

    def __repr__(self):
        return f"FieldState(shape={self.grid.shape}, iteration={self.iteration})"


class _Topology:
    """Conductive nodes in row-major order and their 4-neighbour lists.

    ``nbr[p, q]`` is the node index of neighbour ``q`` (up, down, left, right)
    of node ``p``, or ``p`` itself when that neighbour is off-grid or
    non-conductive: the self term ``u_p - u_p`` is exactly zero, which gives
    the zero-flux rule without a branch.
    """

    def __init__(self, mask):
        rows, cols = mask.shape
        flat = mask.ravel()
        idx = np.flatnonzero(flat)
        n = idx.size
        position = np.full(flat.size, -1, dtype=np.int64)
        position[idx] = np.arange(n)
        r, c = np.divmod(idx, cols)
        nbr = np.repeat(np.arange(n, dtype=np.int32)[:, None], 4, axis=1)
        for q, (dr, dc) in enumerate(((-1, 0), (1, 0), (0, -1), (0, 1))):
            rr, cc = r + dr, c + dc
            inside = (rr >= 0) & (rr < rows) & (cc >= 0) & (cc < cols)
            target = np.where(inside, rr * cols + cc, 0)
            ok = inside & flat[target]
            nbr[ok, q] = position[target[ok]]
        self.idx = idx.astype(np.int64)
        self.nbr = np.ascontiguousarray(nbr)
        self.node_rows = r
        self.position = position


def topology(grid):
    topo = getattr(grid, "_topology", None)
    if topo is None:
        topo = _Topology(grid.mask)
        object.__setattr__(grid, "_topology", topo)
    return topo


@numba.njit(nogil=True, cache=True)
def _euler_kernel(u, v, un, vn, nbr, lo, hi, dt, dx2, D, a, b, c1, c2, I):
    for p in range(lo, hi):
        c = u[p]
        lap = (u[nbr[p, 0]] - c) + (u[nbr[p, 1]] - c) + (u[nbr[p, 2]] - c) + (u[nbr[p, 3]] - c)
        react = c1 * c * (c - a) * (1.0 - c) - c2 * c * v[p] + I
        un[p] = c + dt * (react + D * (lap / dx2))
        vn[p] = v[p] + dt * b * (c - v[p])


def init_state(grid: ConductiveGrid) -> FieldState:
    grid.require_nonempty()
    shape = grid.shape
    return FieldState(grid, np.zeros(shape), np.zeros(shape), 0)


def masked_laplacian(state, node, dx=2.0):
    """Zero-flux five-node Laplacian of ``u`` at one conductive node."""
    i, j = node
    mask = state.grid.mask
    if not mask[i, j]:
        raise ValueError(f"node {node} is not conductive")
    rows, cols = mask.shape
    u = state.u
    total = 0.0
    for di, dj in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        ni, nj = i + di, j + dj
        if 0 <= ni < rows and 0 <= nj < cols and mask[ni, nj]:
            total += u[ni, nj] - u[i, j]
    return total / (dx * dx)


def _kernel_args(params):
    p = params
    return (p.dt, p.dx * p.dx, p.D_u, p.a, p.b, p.c1, p.c2, p.I)


def _partition(topo, workers):
    """Split the conductive-node list into contiguous row blocks."""
    n = topo.idx.size
    if workers <= 1 or n == 0:
        return [(0, n)]
    rows = topo.node_rows
    first, last = int(rows[0]), int(rows[-1]) + 1
    cuts = np.linspace(first, last, workers + 1).round().astype(np.int64)
    bounds = np.searchsorted(rows, cuts, side="left")
    bounds[0], bounds[-1] = 0, n
    return [(int(bounds[k]), int(bounds[k + 1])) for k in range(workers) if bounds[k + 1] > bounds[k]]


def _check_finite(u, v, iteration):
    if not (np.isfinite(u).all() and np.isfinite(v).all()):
        raise IntegrationDiverged(iteration)


def step(state: FieldState, params: FhnParams) -> FieldState:
    topo = topology(state.grid)
    u, v = state.u_nodes, state.v_nodes
    un, vn = np.empty_like(u), np.empty_like(v)
    _euler_kernel(u, v, un, vn, topo.nbr, 0, u.size, *_kernel_args(params))
    _check_finite(un, vn, state.iteration + 1)
    return FieldState(state.grid, iteration=state.iteration + 1, u_nodes=un, v_nodes=vn)


def observer_every(observer, default):
    every = getattr(observer, "every", None)
    return default if every is None else int(every)


def run(state, params, steps, observers=(), every=DEFAULT_CADENCE, workers=1,
        sample_initial=False):
    """Advance ``state`` by ``steps`` Euler steps and return the final state.

    Each observer is called as ``observer(state)`` whenever the absolute
    iteration is a multiple of its cadence: the observer's own ``every``
    attribute when set (use 1 for per-iteration accumulators), otherwise
    ``every``. With ``sample_initial`` the cadence observers also see the
    starting state. The input state is not modified.

    Rows are split into ``workers`` contiguous blocks that are integrated
    concurrently; output is bit-identical for any worker count.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if every < 1:
        raise ValueError("observer cadence must be >= 1")
    grid = state.grid
    topo = topology(grid)
    cadences = [(obs, observer_every(obs, every)) for obs in observers]
    u = state.u_nodes.copy()
    v = state.v_nodes.copy()
    n = u.size
    if sample_initial:
        view = FieldState(grid, iteration=state.iteration, u_nodes=u, v_nodes=v)
        for obs, k in cadences:
            if state.iteration % k == 0:
                obs(view)
    if steps == 0:
        return FieldState(grid, iteration=state.iteration, u_nodes=u, v_nodes=v)

    un, vn = np.empty_like(u), np.empty_like(v)
    args = _kernel_args(params)
    nbr = topo.nbr
    blocks = _partition(topo, workers)
    pool = ThreadPoolExecutor(max_workers=len(blocks)) if len(blocks) > 1 else None
    try:
        it = state.iteration
        for _ in range(steps):
            if pool is None:
                _euler_kernel(u, v, un, vn, nbr, 0, n, *args)
            else:
                futures = [pool.submit(_euler_kernel, u, v, un, vn, nbr, lo, hi, *args) for lo, hi in blocks]
                for f in futures:
                    f.result()
            u, un = un, u
            v, vn = vn, v
            it += 1
            if it % every == 0:
                _check_finite(u, v, it)
            view = None
            for obs, k in cadences:
                if it % k == 0:
                    if view is None:
                        view = FieldState(grid, iteration=it, u_nodes=u, v_nodes=v)
                    obs(view)
    finally:
        if pool is not None:
            pool.shutdown()
    _check_finite(u, v, it)
    return FieldState(grid, iteration=it, u_nodes=u, v_nodes=v)


# -- checkpoints --------------------------------------------------------------

def save_checkpoint(state, path):
    rows, cols = state.u.shape
    with open(path, "wb") as fh:
        fh.write(STATE_MAGIC + b"\n")
        fh.write(f"{rows} {cols} {state.iteration}\n".encode("ascii"))
        fh.write(np.ascontiguousarray(state.u, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(state.v, dtype="<f8").tobytes())


def load_checkpoint(path, grid):
    with open(path, "rb") as fh:
        if fh.readline().rstrip(b"\n") != STATE_MAGIC:
            raise GridFormatError(f"{path}: missing {STATE_MAGIC.decode()} header")
        try:
            rows, cols, iteration = (int(t) for t in fh.readline().split())
        except ValueError as exc:
            raise GridFormatError(f"{path}: bad checkpoint header") from exc
        payload = fh.read()
    n = rows * cols
    if len(payload) != 16 * n:
        raise GridFormatError(f"{path}: expected {16 * n} data bytes, found {len(payload)}")
    if (rows, cols) != grid.shape:
        raise GridFormatError(f"{path}: checkpoint is {rows}x{cols}, grid is {grid.rows}x{grid.cols}")
    data = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    u = data[:n].reshape(rows, cols).copy()
    v = data[n:].reshape(rows, cols).copy()
    return FieldState(grid, u, v, iteration)
