"""Brute-force oracle: the two-excitation sector of a finite periodic ring.

Every analytic result in this package ultimately reduces to statements
about the infinite-chain Hamiltonian.  This module diagonalizes the same
Hamiltonian exactly on a ring of N cavities, with no spinor formalism in
common with the solver modules, so agreement is genuine evidence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .bands import band_structure
from .bound_states import BoundState, find_bound_states
from .errors import OracleMismatchError, ParameterError
from .model import SQRT2, ModelParams

__all__ = [
    "TwoExcitationBasis",
    "MomentumSector",
    "OracleComparison",
    "EdgeCheckReport",
    "build_hamiltonian",
    "translation_operator",
    "momentum_blocks",
    "ring_embedding",
    "compare_bound_state",
    "band_edge_check",
    "jc_pair_levels",
]


class TwoExcitationBasis:
    """Ordered basis of the N = 2 polariton sector on a ring.

    Three families: photon pairs a_m+ a_n+ |G> with m <= n (the m = n
    state carries 1/sqrt(2)), photon-TLS products over all (m, n), and
    TLS pairs with m < n (one TLS cannot be excited twice).
    """

    def __init__(self, N: int):
        if N < 3:
            raise ParameterError(f"ring needs at least 3 cavities, got {N}")
        self.N = int(N)
        self.states = []
        for m in range(N):
            for n in range(m, N):
                self.states.append(("pp", m, n))
        for m in range(N):
            for n in range(N):
                self.states.append(("mix", m, n))
        for m in range(N):
            for n in range(m + 1, N):
                self.states.append(("tt", m, n))
        self.index = {s: i for i, s in enumerate(self.states)}
        self.dim = len(self.states)
        assert self.dim == 2 * N * N

    def pp(self, m: int, n: int) -> int:
        m, n = m % self.N, n % self.N
        return self.index[("pp", min(m, n), max(m, n))]

    def mix(self, photon: int, tls: int) -> int:
        return self.index[("mix", photon % self.N, tls % self.N)]

    def tt(self, m: int, n: int) -> int:
        m, n = m % self.N, n % self.N
        return self.index[("tt", min(m, n), max(m, n))]

    def translate(self, i: int) -> int:
        kind, m, n = self.states[i]
        m, n = (m + 1) % self.N, (n + 1) % self.N
        if kind != "mix" and m > n:
            m, n = n, m
        return self.index[(kind, m, n)]


def build_hamiltonian(N: int, params: ModelParams) -> sp.csr_matrix:
    """Sparse two-excitation Hamiltonian of the ring (K plays no role here).

    Element conventions: photon energy is the zero of the rotating frame,
    a TLS excitation costs delta, the vertical coupling is g with the
    sqrt(2) enhancement on doubly occupied photon states, and photons hop
    with amplitude xi between neighbors.  Both orientations of every
    off-diagonal element are generated independently, so Hermiticity of
    the result checks the matrix-element algebra.
    """
    basis = TwoExcitationBasis(N)
    g, xi, delta = params.g, params.xi, params.delta
    rows, cols, vals = [], [], []

    def put(r, c, v):
        rows.append(r)
        cols.append(c)
        vals.append(v)

    for col, (kind, m, n) in enumerate(basis.states):
        if kind == "pp":
            if m == n:
                put(basis.mix(m, m), col, SQRT2 * g)
                for step in (1, -1):
                    put(basis.pp(m + step, m), col, SQRT2 * xi)
            else:
                put(basis.mix(n, m), col, g)
                put(basis.mix(m, n), col, g)
                for site, other in ((m, n), (n, m)):
                    for step in (1, -1):
                        dest = (site + step) % N
                        amp = SQRT2 * xi if dest == other else xi
                        put(basis.pp(dest, other), col, amp)
        elif kind == "mix":
            put(col, col, delta)
            if m == n:
                put(basis.pp(m, m), col, SQRT2 * g)
            else:
                put(basis.pp(m, n), col, g)
                put(basis.tt(m, n), col, g)
            for step in (1, -1):
                put(basis.mix(m + step, n), col, xi)
        else:
            put(col, col, 2.0 * delta)
            put(basis.mix(m, n), col, g)
            put(basis.mix(n, m), col, g)

    h = sp.csr_matrix(
        (vals, (rows, cols)), shape=(basis.dim, basis.dim), dtype=float
    )
    h.sum_duplicates()
    return h


def translation_operator(N: int) -> sp.csr_matrix:
    basis = TwoExcitationBasis(N)
    rows = [basis.translate(i) for i in range(basis.dim)]
    return sp.csr_matrix(
        (np.ones(basis.dim), (rows, np.arange(basis.dim))),
        shape=(basis.dim, basis.dim),
    )


@dataclass(frozen=True)
class MomentumSector:
    """One total-momentum block of the ring Hamiltonian."""

    n: int
    momentum: float
    block: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray        # columns, in the sector basis
    projector: sp.csr_matrix        # sector basis -> full basis

    @property
    def dim(self) -> int:
        return self.block.shape[0]


def _orbits(basis: TwoExcitationBasis):
    seen = np.zeros(basis.dim, dtype=bool)
    orbits = []
    for start in range(basis.dim):
        if seen[start]:
            continue
        cycle = [start]
        seen[start] = True
        i = basis.translate(start)
        while i != start:
            seen[i] = True
            cycle.append(i)
            i = basis.translate(i)
        orbits.append(cycle)
    return orbits


def momentum_blocks(h: sp.spmatrix, N: int, only=None) -> list:
    """Block-diagonalize the ring Hamiltonian over total momentum.

    The translation operator is a permutation; its orbits give the
    momentum basis directly, including the short orbits of antipodal
    pair states.  A nonzero commutator means the Hamiltonian was not
    built translation-covariantly, which is an implementation bug, not
    a data condition.
    """
    basis = TwoExcitationBasis(N)
    t1 = translation_operator(N)
    comm = (h @ t1 - t1 @ h)
    norm = abs(comm).max() if comm.nnz else 0.0
    if norm > 1e-12:
        raise RuntimeError(
            f"Hamiltonian does not commute with translation: |[H,T]| = {norm:.3g}"
        )
    orbits = _orbits(basis)
    wanted = range(N) if only is None else only
    sectors = []
    for n in wanted:
        k = 2.0 * math.pi * n / N
        cols_r, cols_c, cols_v = [], [], []
        j = 0
        for cycle in orbits:
            length = len(cycle)
            if (n * length) % N != 0:
                continue
            phase = np.exp(-1j * k * np.arange(length)) / math.sqrt(length)
            cols_r.extend(cycle)
            cols_c.extend([j] * length)
            cols_v.extend(phase)
            j += 1
        proj = sp.csr_matrix(
            (cols_v, (cols_r, cols_c)), shape=(basis.dim, j), dtype=complex
        )
        block = (proj.getH() @ (h @ proj)).toarray()
        herm = np.abs(block - block.conj().T).max()
        if herm > 1e-13:
            raise RuntimeError(
                f"momentum block n={n} not Hermitian: defect {herm:.3g}"
            )
        block = 0.5 * (block + block.conj().T)
        vals, vecs = np.linalg.eigh(block)
        sectors.append(MomentumSector(
            n=n, momentum=k, block=block,
            eigenvalues=vals, eigenvectors=vecs, projector=proj,
        ))
    return sectors


def ring_embedding(state: BoundState, N: int) -> np.ndarray:
    """Wrap the infinite-chain bound state onto the ring basis.

    Sums the relative-coordinate amplitudes over all separations with the
    ring's modular arithmetic, applying only local operator conversions
    (the sqrt(2) of a doubly occupied cavity; no doubly excited TLS), so
    image contributions beyond one winding accumulate automatically.
    Returned vector is unnormalized.
    """
    params = state.params
    n_k = params.K * N / (2.0 * math.pi)
    if abs(n_k - round(n_k)) > 1e-9:
        raise ParameterError(
            f"K = {params.K} is not a ring momentum for N = {N}"
        )
    basis = TwoExcitationBasis(N)
    span = max(int(math.ceil(40.0 / state.decay_rate)), 2 * N)
    ls = np.arange(-span, span + 1)
    betas = state.wavefunction(ls)
    psi = np.zeros(basis.dim, dtype=complex)
    half_k = 0.5 * params.K
    for l, beta in zip(ls, betas):
        p, d_sym, d_asy, t = beta
        for m in range(N):
            com = np.exp(1j * (params.K * m + half_k * l))
            other = m + l
            if l == 0:
                psi[basis.pp(m, m)] += com * SQRT2 * p
                psi[basis.mix(m, m)] += com * SQRT2 * d_sym
                continue
            psi[basis.pp(m, other)] += com * p
            psi[basis.mix(m, other)] += com * (d_sym + d_asy) / SQRT2
            psi[basis.mix(other, m)] += com * (d_sym - d_asy) / SQRT2
            if (other - m) % N != 0:
                psi[basis.tt(m, other)] += com * t
    return psi


@dataclass(frozen=True)
class OracleComparison:
    """Finite-size agreement row for one ring size."""

    N: int
    energy: float
    error: float
    overlap: float


def compare_bound_state(analytic: BoundState, N_list) -> tuple:
    """Match the analytic bound state against rings of increasing size.

    For each N, picks the in-gap eigenvalue of the matching momentum
    sector nearest the analytic energy and computes the overlap with the
    wrapped analytic wavefunction.  Errors are expected to fall with N.
    """
    params = analytic.params
    gap = band_structure(params).gap_at(analytic.energy)
    if gap is None:
        raise OracleMismatchError(
            f"analytic energy {analytic.energy} is not inside any gap"
        )
    rows = []
    for N in N_list:
        n_k = params.K * N / (2.0 * math.pi)
        if abs(n_k - round(n_k)) > 1e-9:
            raise ParameterError(
                f"K = {params.K} is not a ring momentum for N = {N}"
            )
        h = build_hamiltonian(N, params)
        sector = momentum_blocks(h, N, only=[int(round(n_k)) % N])[0]
        inside = (sector.eigenvalues > gap.lo) & (sector.eigenvalues < gap.hi)
        if not inside.any():
            raise OracleMismatchError(
                f"no ring eigenvalue inside gap ({gap.lo:.6g}, {gap.hi:.6g}) "
                f"at N = {N}"
            )
        evals = sector.eigenvalues[inside]
        pick = int(np.argmin(np.abs(evals - analytic.energy)))
        vec_full = sector.projector @ sector.eigenvectors[:, inside][:, pick]
        psi = ring_embedding(analytic, N)
        ov = abs(np.vdot(vec_full, psi)) ** 2 / np.vdot(psi, psi).real
        rows.append(OracleComparison(
            N=int(N),
            energy=float(evals[pick]),
            error=float(abs(evals[pick] - analytic.energy)),
            overlap=float(ov),
        ))
    return tuple(rows)


@dataclass(frozen=True)
class EdgeCheckReport:
    """Spectral placement audit of the K = 0 ring sector."""

    N: int
    violations: tuple        # eigenvalues neither near a band nor deep in a gap
    in_gap: tuple            # eigenvalues strictly inside gaps (by the margin)
    expected_bound_count: int
    band_counts: tuple       # eigenvalues attributed to each band, low to high

    @property
    def ok(self) -> bool:
        return not self.violations and \
            len(self.in_gap) == self.expected_bound_count


def band_edge_check(params: ModelParams, N: int) -> EdgeCheckReport:
    """Audit the ring spectrum against the analytic bands and gaps.

    Finite-size effects push edge states out of the bands by O(1/N), so
    band membership carries a 5g/N margin; an eigenvalue must clear the
    same margin inside a gap to count as a bound-state candidate.
    """
    tol = 5.0 * params.g / N
    bands = band_structure(params)
    h = build_hamiltonian(N, params)
    sector = momentum_blocks(h, N, only=[0])[0]
    expected = sum(
        len(find_bound_states(params, gap)) for gap in bands.gaps
    )
    violations, in_gap = [], []
    band_counts = [0] * len(bands.bands)
    for e in sector.eigenvalues:
        picked = False
        for i, band in enumerate(bands.bands):
            if band.lo - tol <= e <= band.hi + tol:
                band_counts[i] += 1
                picked = True
                break
        if picked:
            continue
        gap = bands.gap_at(e)
        if gap is not None and gap.contains(e, margin=tol):
            in_gap.append(float(e))
        else:
            violations.append(float(e))
    return EdgeCheckReport(
        N=int(N),
        violations=tuple(violations),
        in_gap=tuple(in_gap),
        expected_bound_count=int(expected),
        band_counts=tuple(band_counts),
    )


def jc_pair_levels(params: ModelParams, N: int) -> tuple:
    """Closed-form two-excitation spectrum of the uncoupled (xi = 0) ring.

    Two excitations either share a cavity (the n = 2 dressed doublet) or
    occupy two independent cavities (sums of n = 1 dressed energies).
    Returns (energy, multiplicity) pairs, merged when values coincide.
    """
    d, g = params.delta, params.g
    one = [0.5 * (d + s * math.sqrt(d * d + 4.0 * g * g)) for s in (1, -1)]
    two = [0.5 * (d + s * math.sqrt(d * d + 8.0 * g * g)) for s in (1, -1)]
    pairs = N * (N - 1) // 2
    raw = [
        (one[0] + one[0], pairs),
        (one[0] + one[1], 2 * pairs),
        (one[1] + one[1], pairs),
        (two[0], N),
        (two[1], N),
    ]
    raw.sort()
    merged = []
    for e, mult in raw:
        if merged and abs(e - merged[-1][0]) < 1e-12 * max(1.0, params.g):
            merged[-1][1] += mult
        else:
            merged.append([e, mult])
    return tuple((float(e), int(m)) for e, m in merged)
