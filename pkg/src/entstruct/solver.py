"""Facade over the conic solver: LPs and complex-Hermitian SDPs.

Programs are stated over scalar variables plus complex Hermitian PSD blocks.
Each Hermitian block is parametrized by d*d reals (column-major upper
triangle: diagonal entries, and (re, im) pairs for i<j) and its PSD
constraint is imposed on the real symmetric lift [[A, -B], [B, A]], so no
complex support is required from the backend (Clarabel).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

try:
    import clarabel
except ImportError as exc:  # pragma: no cover
    raise ImportError("the 'clarabel' solver backend is required") from exc


@dataclass
class SolverSettings:
    tol: float = 1e-8
    max_iter: int = 200_000
    verbose: bool = False


DEFAULT_LP_TOL = 1e-8
DEFAULT_SDP_TOL = 1e-7


class SolverError(RuntimeError):
    """The backend failed numerically (distinct from clean infeasibility)."""


def block_param_count(d: int) -> int:
    return d * d


def block_entry_param(d: int, i: int, j: int) -> tuple[int, str]:
    """Parameter index and kind ('diag' or 're'; imag sits at +1) for entry (i, j), i <= j."""
    if i > j:
        raise ValueError("use i <= j")
    base = j * j  # params consumed by columns 0..j-1: sum(2k+1)
    if i == j:
        return base + 2 * j, "diag"
    return base + 2 * i, "re"


def pack_hermitian(mat: np.ndarray) -> np.ndarray:
    d = mat.shape[0]
    out = np.empty(d * d)
    pos = 0
    for j in range(d):
        for i in range(j):
            out[pos] = mat[i, j].real
            out[pos + 1] = mat[i, j].imag
            pos += 2
        out[pos] = mat[j, j].real
        pos += 1
    return out

def unpack_hermitian(params: np.ndarray, d: int) -> np.ndarray:
    mat = np.zeros((d, d), dtype=complex)
    pos = 0
    for j in range(d):
        for i in range(j):
            mat[i, j] = params[pos] + 1j * params[pos + 1]
            mat[j, i] = params[pos] - 1j * params[pos + 1]
            pos += 2
        mat[j, j] = params[pos]
        pos += 1
    return mat


@dataclass
class ConicProgram:
    """maximize objective . x over scalars and Hermitian PSD blocks.

    The raw variable vector is [scalars | block_0 params | block_1 params ...],
    with the parametrization of `pack_hermitian`.  A_eq x = b_eq and
    A_ub x <= b_ub are affine; every listed block is constrained PSD.
    """

    num_scalars: int
    block_dims: list[int] = field(default_factory=list)
    objective: np.ndarray | None = None
    A_eq: sparse.spmatrix | None = None
    b_eq: np.ndarray | None = None
    A_ub: sparse.spmatrix | None = None
    b_ub: np.ndarray | None = None

    @property
    def num_vars(self) -> int:
        return self.num_scalars + sum(block_param_count(d) for d in self.block_dims)

    def block_offset(self, k: int) -> int:
        return self.num_scalars + sum(block_param_count(d) for d in self.block_dims[:k])

    def validate(self) -> None:
        n = self.num_vars
        if n == 0:
            raise ValueError("program has no variables")
        if self.objective is None or len(self.objective) != n:
            raise ValueError("objective length mismatch")
        for A, b, name in ((self.A_eq, self.b_eq, "eq"), (self.A_ub, self.b_ub, "ub")):
            if (A is None) != (b is None):
                raise ValueError(f"{name}: matrix and rhs must come together")
            if A is not None and (A.shape[1] != n or A.shape[0] != len(b)):
                raise ValueError(f"{name}: constraint dimensions inconsistent")


@dataclass
class SolveResult:
    status: str  # optimal | infeasible | unbounded | numeric_failure
    objective: float | None
    x: np.ndarray | None
    scalars: np.ndarray | None
    blocks: list[np.ndarray] | None
    eq_duals: np.ndarray | None
    ub_duals: np.ndarray | None
    eq_residual: float
    ub_residual: float
    psd_residual: float
    solver_status: str = ""


def _triu_index(i: int, j: int) -> int:
    # column-major packed upper triangle, i <= j
    return j * (j + 1) // 2 + i

def _psd_lift_rows(d: int, var_offset: int, row_offset: int):
    """COO triplets of -L mapping block params to svec([[A,-B],[B,A]])."""
    rows, cols, vals = [], [], []
    s2 = math.sqrt(2.0)
    pos = var_offset
    for j in range(d):
        for i in range(j):
            # real part: A_ij at (i,j) and (d+i, d+j)
            rows += [row_offset + _triu_index(i, j), row_offset + _triu_index(d + i, d + j)]
            cols += [pos, pos]
            vals += [-s2, -s2]
            # imaginary part: S[i, d+j] = -im, S[j, d+i] = +im
            rows += [row_offset + _triu_index(i, d + j), row_offset + _triu_index(j, d + i)]
            cols += [pos + 1, pos + 1]
            vals += [s2, -s2]
            pos += 2
        rows += [row_offset + _triu_index(j, j), row_offset + _triu_index(d + j, d + j)]
        cols += [pos, pos]
        vals += [-1.0, -1.0]
        # S[j, d+j] = -B_jj = 0: no entry needed
        pos += 1
    return rows, cols, vals


def solve(p: ConicProgram, tol: float | None = None, settings: SolverSettings | None = None) -> SolveResult:
    """Solve the program with Clarabel; deterministic for identical inputs."""
    p.validate()
    settings = settings or SolverSettings()
    tol = tol if tol is not None else (DEFAULT_SDP_TOL if p.block_dims else DEFAULT_LP_TOL)
    n = p.num_vars
    m_eq = 0 if p.A_eq is None else p.A_eq.shape[0]
    m_ub = 0 if p.A_ub is None else p.A_ub.shape[0]
    parts, bs, cones = [], [], []
    if m_eq:
        parts.append(sparse.csc_matrix(p.A_eq))
        bs.append(np.asarray(p.b_eq, dtype=float))
        cones.append(clarabel.ZeroConeT(m_eq))
    if m_ub:
        parts.append(sparse.csc_matrix(p.A_ub))
        bs.append(np.asarray(p.b_ub, dtype=float))
        cones.append(clarabel.NonnegativeConeT(m_ub))
    row_offset = 0
    rows, cols, vals = [], [], []
    for k, d in enumerate(p.block_dims):
        off = p.block_offset(k)
        if d == 1:
            rows.append(row_offset)
            cols.append(off)
            vals.append(-1.0)
            row_offset += 1
            cones.append(clarabel.NonnegativeConeT(1))
        elif d == 2:
            # params [t00, re01, im01, t11]; PSD iff (t00+t11, t00-t11, 2re, 2im) in SOC
            soc = [(0, 1.0), (3, 1.0)], [(0, 1.0), (3, -1.0)], [(1, 2.0)], [(2, 2.0)]
            for i, entries in enumerate(soc):
                for j, v in entries:
                    rows.append(row_offset + i)
                    cols.append(off + j)
                    vals.append(-v)
            row_offset += 4
            cones.append(clarabel.SecondOrderConeT(4))
        else:
            r, c, v = _psd_lift_rows(d, off, row_offset)
            rows += r
            cols += c
            vals += v
            row_offset += 2 * d * (2 * d + 1) // 2
            cones.append(clarabel.PSDTriangleConeT(2 * d))
    if p.block_dims:
        parts.append(sparse.coo_matrix((vals, (rows, cols)), shape=(row_offset, n)).tocsc())
        bs.append(np.zeros(row_offset))
    A = sparse.vstack(parts).tocsc() if parts else sparse.csc_matrix((0, n))
    b = np.concatenate(bs) if bs else np.zeros(0)
    cfg = clarabel.DefaultSettings()
    cfg.verbose = settings.verbose
    cfg.max_iter = settings.max_iter
    cfg.tol_feas = tol
    cfg.tol_gap_abs = tol
    cfg.tol_gap_rel = tol
    q = -np.asarray(p.objective, dtype=float)
    sol = clarabel.DefaultSolver(sparse.csc_matrix((n, n)), q, A, b, cones, cfg).solve()
    status_name = str(sol.status)
    if status_name in ("Solved", "AlmostSolved"):
        status = "optimal"
    elif status_name in ("PrimalInfeasible", "AlmostPrimalInfeasible"):
        status = "infeasible"
    elif status_name in ("DualInfeasible", "AlmostDualInfeasible"):
        status = "unbounded"
    else:
        status = "numeric_failure"
    if status != "optimal":
        return SolveResult(status, None, None, None, None, None, None,
                           math.inf, math.inf, math.inf, status_name)
    x = np.asarray(sol.x)
    z = np.asarray(sol.z)
    scalars = x[: p.num_scalars]
    blocks = [
        unpack_hermitian(x[p.block_offset(k): p.block_offset(k) + block_param_count(d)], d)
        for k, d in enumerate(p.block_dims)
    ]
    eq_res = float(np.max(np.abs(p.A_eq @ x - p.b_eq))) if m_eq else 0.0
    ub_res = float(np.max(np.maximum(p.A_ub @ x - p.b_ub, 0.0))) if m_ub else 0.0
    psd_res = 0.0
    for blk in blocks:
        w = np.linalg.eigvalsh(blk)
        psd_res = max(psd_res, float(max(0.0, -w[0])))
    return SolveResult(
        status="optimal",
        objective=float(-sol.obj_val),
        x=x,
        scalars=scalars,
        blocks=blocks,
        eq_duals=z[:m_eq] if m_eq else np.zeros(0),
        ub_duals=z[m_eq: m_eq + m_ub] if m_ub else np.zeros(0),
        eq_residual=eq_res,
        ub_residual=ub_res,
        psd_residual=psd_res,
        solver_status=status_name,
    )


def dump_program(p: ConicProgram, path: str) -> None:
    """Plain sparse text dump: one 'i j value' line per nonzero, per section."""
    with open(path, "w") as fh:
        fh.write(f"scalars {p.num_scalars}\nblocks {' '.join(map(str, p.block_dims))}\n")
        fh.write("objective\n")
        for j, v in enumerate(p.objective):
            if v != 0:
                fh.write(f"{j} {v!r}\n")
        for name, A, b in (("eq", p.A_eq, p.b_eq), ("ub", p.A_ub, p.b_ub)):
            if A is None:
                continue
            coo = sparse.coo_matrix(A)
            fh.write(f"{name} {A.shape[0]}\n")
            for i, j, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{i} {j} {v!r}\n")
            fh.write(f"{name}_rhs\n")
            for i, v in enumerate(b):
                if v != 0:
                    fh.write(f"{i} {v!r}\n")
