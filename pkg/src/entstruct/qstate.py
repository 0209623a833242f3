"""Multi-qudit pure states and density matrices.

Flat indices are mixed-radix with site 1 most significant, and every
user-facing index is 1-based; internal numpy arrays are 0-based.  Dense
storage only, capped at total dimension 4096.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .partitions import DomainError, Partition

MAX_TOTAL_DIM = 4096

NORM_TOL = 1e-12
HERM_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-9


@dataclass(frozen=True)
class LocalDims:
    """Per-site local dimensions d_i >= 2."""

    dims: tuple[int, ...]

    @staticmethod
    def of(dims) -> "LocalDims":
        dims = tuple(int(d) for d in dims)
        if not dims or any(d < 2 for d in dims):
            raise DomainError(f"local dimensions must all be >= 2, got {dims}")
        D = math.prod(dims)
        if D > MAX_TOTAL_DIM:
            raise DomainError(f"total dimension {D} exceeds cap {MAX_TOTAL_DIM}")
        return LocalDims(dims)

    @staticmethod
    def qubits(n: int) -> "LocalDims":
        return LocalDims.of((2,) * n)

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def D(self) -> int:
        return math.prod(self.dims)


def flat_index(digits, dims: LocalDims, one_based: bool = True) -> int:
    """Mixed-radix flat index of per-site digits, site 1 most significant."""
    digits = tuple(digits)
    if len(digits) != dims.n:
        raise DomainError(f"expected {dims.n} digits, got {len(digits)}")
    idx = 0
    for d, base in zip(digits, dims.dims):
        if not 0 <= d < base:
            raise DomainError(f"digit {d} out of range for local dimension {base}")
        idx = idx * base + d
    return idx + 1 if one_based else idx


def multi_index(index: int, dims: LocalDims, one_based: bool = True) -> tuple[int, ...]:
    """Inverse of flat_index."""
    idx = index - 1 if one_based else index
    if not 0 <= idx < dims.D:
        raise DomainError(f"index {index} out of range")
    digits = []
    for base in reversed(dims.dims):
        digits.append(idx % base)
        idx //= base
    return tuple(reversed(digits))


@dataclass(frozen=True)
class PureState:
    dims: LocalDims
    amplitudes: np.ndarray

    @staticmethod
    def of(dims: LocalDims, amplitudes) -> "PureState":
        vec = np.asarray(amplitudes, dtype=complex).reshape(-1)
        if vec.shape[0] != dims.D:
            raise DomainError(f"amplitude vector length {vec.shape[0]} != {dims.D}")
        if abs(np.linalg.norm(vec) - 1.0) > NORM_TOL:
            raise DomainError("state vector is not normalized")
        return PureState(dims, vec)

    def projector(self) -> "DensityMatrix":
        return DensityMatrix.of(self.dims, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityMatrix:
    dims: LocalDims
    matrix: np.ndarray

    @staticmethod
    def of(dims: LocalDims, matrix) -> "DensityMatrix":
        mat = np.asarray(matrix, dtype=complex)
        D = dims.D
        if mat.shape != (D, D):
            raise DomainError(f"matrix shape {mat.shape} != ({D}, {D})")
        if np.max(np.abs(mat - mat.conj().T)) > HERM_TOL:
            raise DomainError("matrix is not Hermitian")
        if abs(np.trace(mat).real - 1.0) > TRACE_TOL:
            raise DomainError("matrix trace differs from 1")
        if np.linalg.eigvalsh(mat)[0] < -PSD_TOL:
            raise DomainError("matrix has a significantly negative eigenvalue")
        return DensityMatrix(dims, mat)

    def entry(self, m: int, n: int) -> complex:
        """1-based entry rho_{m,n}."""
        return complex(self.matrix[m - 1, n - 1])


def maximally_mixed(dims: LocalDims) -> DensityMatrix:
    D = dims.D
    return DensityMatrix(dims, np.eye(D, dtype=complex) / D)


# ---------------------------------------------------------------------------
# named state families


def _ghz(n: int) -> PureState:
    dims = LocalDims.qubits(n)
    vec = np.zeros(dims.D, dtype=complex)
    vec[0] = vec[-1] = 1 / math.sqrt(2)
    return PureState.of(dims, vec)


def _w(n: int) -> PureState:
    dims = LocalDims.qubits(n)
    vec = np.zeros(dims.D, dtype=complex)
    for i in range(n):
        vec[1 << i] = 1 / math.sqrt(n)
    return PureState.of(dims, vec)


def _dicke(n: int, k: int) -> PureState:
    if not 0 <= k <= n:
        raise DomainError(f"Dicke excitation count {k} out of range")
    dims = LocalDims.qubits(n)
    vec = np.zeros(dims.D, dtype=complex)
    hits = [i for i in range(dims.D) for _ in [0] if bin(i).count("1") == k]
    vec[hits] = 1 / math.sqrt(len(hits))
    return PureState.of(dims, vec)


def _linear_cluster(n: int) -> PureState:
    # CZ chain applied to |+>^n
    dims = LocalDims.qubits(n)
    vec = np.full(dims.D, 1 / math.sqrt(dims.D), dtype=complex)
    for i in range(dims.D):
        bits = [(i >> (n - 1 - s)) & 1 for s in range(n)]
        flips = sum(bits[s] & bits[s + 1] for s in range(n - 1))
        if flips % 2:
            vec[i] = -vec[i]
    return PureState.of(dims, vec)


def _cl5s() -> PureState:
    dims = LocalDims.qubits(5)
    vec = np.zeros(dims.D, dtype=complex)
    for ket in ("00000", "01111", "10011", "11100"):
        vec[int(ket, 2)] = 0.5
    return PureState.of(dims, vec)


def _qutrit_w(shifted: bool = False) -> PureState:
    dims = LocalDims.of((3, 3, 3, 3))
    vec = np.zeros(dims.D, dtype=complex)
    amp = 1 / (2 * math.sqrt(2))
    for site in range(4):
        for digit in (1, 2):
            digits = [0, 0, 0, 0]
            digits[site] = digit
            vec[flat_index(digits, dims, one_based=False)] = amp
    if shifted:
        shifted_vec = np.zeros_like(vec)
        for i in np.nonzero(vec)[0]:
            digits = multi_index(int(i), dims, one_based=False)
            moved = tuple((d + 1) % 3 for d in digits)
            shifted_vec[flat_index(moved, dims, one_based=False)] = vec[i]
        vec = shifted_vec
    return PureState.of(dims, vec)


_FAMILIES = {
    "ghz": lambda n=None, k=None: _ghz(_need_n(n, "ghz")),
    "w": lambda n=None, k=None: _w(_need_n(n, "w")),
    "dicke": lambda n=None, k=None: _dicke(_need_n(n, "dicke"), _need_k(k)),
    "cluster": lambda n=None, k=None: _linear_cluster(_need_n(n, "cluster")),
    "cl5s": lambda n=None, k=None: _cl5s(),
    "qutrit_w": lambda n=None, k=None: _qutrit_w(False),
    "qutrit_w_shifted": lambda n=None, k=None: _qutrit_w(True),
}


def _need_n(n, family):
    if n is None or n < 1:
        raise DomainError(f"family {family!r} needs a positive n")
    return int(n)


def _need_k(k):
    if k is None:
        raise DomainError("Dicke states need the excitation count k")
    return int(k)


def make_state(family: str, n: int | None = None, k: int | None = None) -> PureState:
    """Construct a named pure state family ('ghz', 'w', 'dicke', 'cluster', 'cl5s', ...)."""
    key = family.strip().lower().replace("-", "_")
    if key not in _FAMILIES:
        raise DomainError(f"unknown state family {family!r}; known: {sorted(_FAMILIES)}")
    return _FAMILIES[key](n=n, k=k)


# ---------------------------------------------------------------------------
# mixtures and distances


def mix(rho: DensityMatrix, sigma: DensityMatrix, t: float) -> DensityMatrix:
    """Convex combination t*rho + (1-t)*sigma."""
    if rho.dims != sigma.dims:
        raise DomainError("dimension mismatch in mix")
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"mixing parameter t={t} outside [0, 1]")
    return DensityMatrix(rho.dims, t * rho.matrix + (1.0 - t) * sigma.matrix)


def white_noise(psi: PureState, t: float) -> DensityMatrix:
    """t |psi><psi| + (1-t) I/D."""
    return mix(psi.projector(), maximally_mixed(psi.dims), t)


def fidelity(a: DensityMatrix, b: DensityMatrix) -> float:
    """Uhlmann fidelity F(a,b) = (tr sqrt(sqrt(a) b sqrt(a)))^2, clipped to [0,1]."""
    if a.dims != b.dims:
        raise DomainError("dimension mismatch in fidelity")
    vals_a, vecs_a = np.linalg.eigh(a.matrix)
    if vals_a[0] < -PSD_TOL or np.linalg.eigvalsh(b.matrix)[0] < -PSD_TOL:
        raise DomainError("fidelity needs positive semidefinite inputs")
    sqrt_a = (vecs_a * np.sqrt(np.clip(vals_a, 0, None))) @ vecs_a.conj().T
    inner = sqrt_a @ b.matrix @ sqrt_a
    vals = np.linalg.eigvalsh((inner + inner.conj().T) / 2)
    root = np.sqrt(np.clip(vals, 0, None)).sum()
    return float(min(max(root * root, 0.0), 1.0))


def frobenius_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    if a.dims != b.dims:
        raise DomainError("dimension mismatch in frobenius_distance")
    return float(np.linalg.norm(a.matrix - b.matrix))


# ---------------------------------------------------------------------------
# product-state helpers (used by witnesses' soundness checks and the certifier)


def haar_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    vec = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return vec / np.linalg.norm(vec)


def block_index_maps(partition: Partition, dims: LocalDims) -> list[np.ndarray]:
    """For each block, the strides embedding its digits into the full flat index."""
    maps = []
    strides = np.ones(dims.n, dtype=np.int64)
    for s in range(dims.n - 2, -1, -1):
        strides[s] = strides[s + 1] * dims.dims[s + 1]
    for block in partition.blocks:
        sites = [s - 1 for s in block]
        block_dims = [dims.dims[s] for s in sites]
        size = math.prod(block_dims)
        offsets = np.zeros(size, dtype=np.int64)
        for local in range(size):
            rem = local
            for s, bd in zip(reversed(sites), reversed(block_dims)):
                offsets[local] += (rem % bd) * strides[s]
                rem //= bd
        maps.append(offsets)
    return maps


def product_state(partition: Partition, block_states, dims: LocalDims) -> np.ndarray:
    """Full state vector of a product of per-block states (0-based amplitudes)."""
    full = np.zeros(dims.D, dtype=complex)
    maps = block_index_maps(partition, dims)
    indices = np.zeros(1, dtype=np.int64)
    values = np.ones(1, dtype=complex)
    for offsets, state in zip(maps, block_states):
        state = np.asarray(state, dtype=complex).reshape(-1)
        indices = (indices[:, None] + offsets[None, :]).reshape(-1)
        values = (values[:, None] * state[None, :]).reshape(-1)
    full[indices] = values
    return full


def random_product_state(partition: Partition, dims: LocalDims, rng: np.random.Generator) -> np.ndarray:
    blocks = [haar_state(math.prod(dims.dims[s - 1] for s in b), rng) for b in partition.blocks]
    return product_state(partition, blocks, dims)


# ---------------------------------------------------------------------------
# state JSON interface


def state_from_json(obj: dict) -> DensityMatrix:
    """Load {"family","n","k","t","noise"} or {"dims","matrix"} (row-major [re,im])."""
    if "family" in obj:
        psi = make_state(obj["family"], n=obj.get("n"), k=obj.get("k"))
        t = float(obj.get("t", 1.0))
        noise = obj.get("noise", "white")
        if noise != "white":
            raise DomainError(f"unknown noise model {noise!r}")
        return white_noise(psi, t)
    if "dims" in obj and "matrix" in obj:
        dims = LocalDims.of(obj["dims"])
        raw = np.asarray(obj["matrix"], dtype=float)
        if raw.shape != (dims.D, dims.D, 2):
            raise DomainError(f"matrix field must be shape ({dims.D},{dims.D},2)")
        return DensityMatrix.of(dims, raw[..., 0] + 1j * raw[..., 1])
    raise DomainError("state JSON needs either 'family' or 'dims'+'matrix'")


def state_to_json(rho: DensityMatrix) -> dict:
    mat = np.stack([rho.matrix.real, rho.matrix.imag], axis=-1)
    return {"dims": list(rho.dims.dims), "matrix": mat.tolist()}
