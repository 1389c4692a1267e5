"""Bloch-periodic eigen-solves of the unit cell and band-gap search."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fem import assemble_plane_stress
from .mesh import Mesh, UnitCell, build_unit_cell_mesh

log = logging.getLogger(__name__)

DENSE_MAX_RESOLUTION = 16
ZERO_TOL = 1e-6
RESIDUAL_TOL = 1e-6


class BandSolveError(RuntimeError):
    def __init__(self, k_index: int, residual: float, detail: str = ""):
        msg = f"eigensolve failed at k-point {k_index} (relative residual {residual:.3e})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.k_index = k_index
        self.residual = residual


def high_symmetry_path(period_a: float, samples_per_segment: int = 16):
    """Gamma -> X -> M -> Gamma.

    Returns ``(k, segment, fraction)``. Shared corners are emitted once, at
    the start of the segment that begins there, except the final Gamma.
    """
    g = np.pi / period_a
    corners = np.array([[0.0, 0.0], [g, 0.0], [g, g], [0.0, 0.0]])
    ks, segs, fracs = [], [], []
    n = int(samples_per_segment)
    for s in range(3):
        stop = n + 1 if s == 2 else n
        for j in range(stop):
            t = j / n
            ks.append((1 - t) * corners[s] + t * corners[s + 1])
            segs.append(s)
            fracs.append(t)
    return np.array(ks), np.array(segs), np.array(fracs)


@dataclass
class BlochProblem:
    cell: UnitCell
    mesh_resolution: int = 32
    k_path: np.ndarray | None = None
    n_bands: int = 12
    samples_per_segment: int = 16
    incompatible_modes: bool = True  # bending enrichment of the bilinear element
    segment: np.ndarray | None = field(default=None, repr=False)
    fraction: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.mesh_resolution < 16:
            raise ValueError("mesh_resolution must be >= 16")
        if self.k_path is None:
            self.k_path, self.segment, self.fraction = high_symmetry_path(
                self.cell.period_a, self.samples_per_segment
            )
        self.k_path = np.atleast_2d(np.asarray(self.k_path, dtype=float))
        bz = np.pi / self.cell.period_a
        if np.any(np.abs(self.k_path) > bz * (1 + 1e-12)):
            raise ValueError("k vectors must lie in the first Brillouin zone")
        if self.segment is None:
            self.segment = np.zeros(len(self.k_path), dtype=int)
            self.fraction = np.linspace(0.0, 1.0, len(self.k_path))


@dataclass
class BandStructure:
    k_samples: np.ndarray  # (n_k, 2) rad/m
    frequencies: np.ndarray  # (n_k, n_bands) Hz
    segment: np.ndarray
    fraction: np.ndarray
    residuals: np.ndarray

    def shifted(self, df: float) -> "BandStructure":
        return BandStructure(
            self.k_samples, self.frequencies + df, self.segment, self.fraction, self.residuals
        )

    def rows(self):
        """(segment, k fraction, band index, frequency_Hz) tuples in k order."""
        for i in range(len(self.k_samples)):
            for b, f in enumerate(self.frequencies[i]):
                yield int(self.segment[i]), float(self.fraction[i]), b, float(f)


def _periodic_map(mesh: Mesh):
    """For every node: (master node, x-shift count, y-shift count).

    Right-boundary nodes map to their left partner, then top-boundary nodes to
    their bottom partner; the top-right corner lands on the bottom-left one.
    """
    n = mesh.n_nodes
    master = np.arange(n)
    sx = np.zeros(n, dtype=int)
    sy = np.zeros(n, dtype=int)
    lr = dict((int(r), int(l)) for l, r in mesh.left_right)
    bt = dict((int(t), int(b)) for b, t in mesh.bottom_top)
    for node in range(n):
        m = node
        if m in lr:
            m = lr[m]
            sx[node] = 1
        if m in bt:
            m = bt[m]
            sy[node] = 1
        master[node] = m
    return master, sx, sy


class _Reducer:
    def __init__(self, mesh: Mesh):
        master, sx, sy = _periodic_map(mesh)
        masters = np.unique(master)
        index = -np.ones(mesh.n_nodes, dtype=int)
        index[masters] = np.arange(len(masters))
        self.n_full = 2 * mesh.n_nodes
        self.n_red = 2 * len(masters)
        self.rows = np.concatenate([2 * np.arange(mesh.n_nodes), 2 * np.arange(mesh.n_nodes) + 1])
        red = index[master]
        self.cols = np.concatenate([2 * red, 2 * red + 1])
        shift = np.stack([sx, sy], axis=1) * mesh.period
        self.shift = np.concatenate([shift, shift])

    def T(self, k) -> sp.csr_matrix:
        phase = np.exp(1j * (self.shift @ np.asarray(k, dtype=float)))
        return sp.csr_matrix(
            (phase, (self.rows, self.cols)), shape=(self.n_full, self.n_red)
        )


def _solve_one(Kk, Mk, n_bands, dense):
    if dense:
        w, v = sla.eigh(Kk.toarray(), Mk.toarray(), subset_by_index=[0, n_bands - 1])
    else:
        # shift slightly below zero: K(Gamma) is singular
        sigma = -1e-3
        # fixed start vector: ARPACK's random default makes repeated runs differ in the last bits
        v0 = np.ones(Kk.shape[0], dtype=Kk.dtype)
        w, v = spla.eigsh(Kk.tocsc(), k=n_bands, M=Mk.tocsc(), sigma=sigma, which="LM", v0=v0)
        order = np.argsort(w)
        w, v = w[order], v[:, order]
    # normwise backward error; stays meaningful for the zero (rigid) modes
    r = Kk @ v - (Mk @ v) * w
    k_norm = spla.norm(Kk, 1)
    m_norm = spla.norm(Mk, 1)
    denom = (k_norm + np.abs(w) * m_norm) * np.linalg.norm(v, axis=0)
    resid = float(np.max(np.linalg.norm(r, axis=0) / denom))
    return w, resid


def solve_bands(problem: BlochProblem, *, workers: int = 1, dense: bool | None = None) -> BandStructure:
    """Lowest ``n_bands`` Bloch frequencies at every k of ``problem.k_path``.

    Operators are non-dimensionalised by ``E d`` and ``rho d a^2``, so the
    eigenvalue is ``omega^2 rho a^2 / E`` and the plate thickness drops out.
    """
    cell = problem.cell
    mat = cell.material
    mesh = build_unit_cell_mesh(cell, problem.mesh_resolution)
    K, M = assemble_plane_stress(mesh, mat, thickness=1.0,
                                 incompatible=problem.incompatible_modes)
    a = cell.period_a
    K = K / mat.youngs_modulus
    M = M / (mat.mass_density * a * a)
    scale = np.sqrt(mat.youngs_modulus / (mat.mass_density * a * a))
    reducer = _Reducer(mesh)
    if dense is None:
        dense = problem.mesh_resolution <= DENSE_MAX_RESOLUTION
    n_bands = problem.n_bands

    def task(i):
        T = reducer.T(problem.k_path[i])
        TH = T.conj().T.tocsr()
        Kk = (TH @ K @ T).tocsr()
        Mk = (TH @ M @ T).tocsr()
        Kk = 0.5 * (Kk + Kk.conj().T)
        Mk = 0.5 * (Mk + Mk.conj().T)
        try:
            lam, resid = _solve_one(Kk, Mk, n_bands, dense)
        except (spla.ArpackNoConvergence, np.linalg.LinAlgError) as exc:
            raise BandSolveError(i, float("nan"), str(exc)) from exc
        if resid > RESIDUAL_TOL:
            raise BandSolveError(i, resid)
        floor = ZERO_TOL * np.max(np.abs(lam))
        if np.any(lam < -floor):
            raise BandSolveError(i, resid, f"negative eigenvalue {lam.min():.3e}")
        lam = np.clip(lam, 0.0, None)
        return np.sort(np.sqrt(lam) * scale / (2 * np.pi)), resid

    n_k = len(problem.k_path)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(task, range(n_k)))
    else:
        results = [task(i) for i in range(n_k)]
    freqs = np.array([r[0] for r in results])
    resid = np.array([r[1] for r in results])
    log.debug("solved %d k-points, max residual %.2e", n_k, resid.max())
    return BandStructure(
        k_samples=problem.k_path.copy(),
        frequencies=freqs,
        segment=np.asarray(problem.segment).copy(),
        fraction=np.asarray(problem.fraction).copy(),
        residuals=resid,
    )


def find_gap(bands: BandStructure, search_range: tuple[float, float]):
    """Widest band-free interval inside ``search_range``, or ``None``.

    Each band occupies ``[min_k f, max_k f]``. Nothing is known above the
    lowest point of the highest computed band, so the search stops there.
    """
    lo, hi = search_range
    f = bands.frequencies
    hi = min(hi, float(f[:, -1].min()))
    if hi <= lo:
        return None
    spans = sorted(zip(f.min(axis=0), f.max(axis=0)))
    best = None
    cursor = lo
    for b_lo, b_hi in spans:
        if b_lo > cursor:
            g_lo, g_hi = cursor, min(b_lo, hi)
            if g_hi > g_lo and (best is None or g_hi - g_lo > best[1] - best[0]):
                best = (g_lo, g_hi)
        cursor = max(cursor, b_hi)
        if cursor >= hi:
            break
    if cursor < hi and (best is None or hi - cursor > best[1] - best[0]):
        best = (cursor, hi)
    if best is None:
        return None
    return {"gap_low": float(best[0]), "gap_high": float(best[1])}
