"""Outer-polytope membership tests.

For a pair set P and a maximal partition gamma, every digit-swap inequality
|rho_{m,n}| <= (rho_{d1,d1} + rho_{d2,d2})/2 is a half-space over the
coordinates (moduli of the P entries, 'appeared' diagonal entries); together
with positivity, the modulus cap 1/2 and the diagonal-sum facet they bound a
polytope containing every state compatible with gamma.  A state of the class
must lie in the convex hull of these polytopes over Gamma^max, which is
decided by one LP in the disjunctive (scaled-copy) formulation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .partitions import DomainError, Partition, StructureClass, gamma_max
from .qstate import DensityMatrix, LocalDims
from .solver import ConicProgram, solve
from .witness import _check_pair, candidate_sets


@dataclass(frozen=True)
class Coordinates:
    """Point of a state: |rho_{m,n}| per pair, then the appeared diagonals."""

    pairs: tuple[tuple[int, int], ...]
    appeared: tuple[int, ...]
    values: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.pairs) + len(self.appeared)


@dataclass(frozen=True)
class HPolytope:
    """Half-space list A x <= b over the Coordinates space."""

    partition: Partition
    pairs: tuple[tuple[int, int], ...]
    appeared: tuple[int, ...]
    A: np.ndarray
    b: np.ndarray

    def contains(self, point: np.ndarray, tol: float = 1e-9) -> bool:
        return bool(np.all(self.A @ point <= self.b + tol))

    def to_text(self) -> str:
        lines = []
        for row, rhs in zip(self.A, self.b):
            lines.append(" ".join(repr(float(v)) for v in row) + f" <= {rhs!r}")
        return "\n".join(lines)


@dataclass
class HullProblem:
    polytopes: list[HPolytope]
    point: Coordinates


def appeared_diagonals(pairs, gammas, dims: LocalDims) -> tuple[int, ...]:
    """Union of swap diagonals over all pairs and partitions, plus the pair indices."""
    cands = candidate_sets(pairs, gammas, dims)
    out = set()
    for p in pairs:
        out.update(_check_pair(p, dims.D))
    for opts in cands.values():
        for o in opts:
            out.update(o.diags)
    return tuple(sorted(out))


def theta_gamma(pairs, gamma: Partition, dims: LocalDims,
                appeared: tuple[int, ...] | None = None) -> HPolytope:
    """H-representation of the partition's polytope, all distinct swaps included."""
    pairs = tuple(_check_pair(p, dims.D) for p in pairs)
    if appeared is None:
        appeared = appeared_diagonals(pairs, [gamma], dims)
    cands = candidate_sets(pairs, [gamma], dims)
    n_mod = len(pairs)
    n_dia = len(appeared)
    dia_pos = {d: n_mod + i for i, d in enumerate(appeared)}
    rows = []
    rhs = []
    for j, pair in enumerate(pairs):
        opts = cands[(pair, gamma)]
        if not opts:
            raise DomainError(f"pair {pair} admits no inequality under {gamma}")
        for o in opts:
            row = np.zeros(n_mod + n_dia)
            row[j] = 1.0
            for d in (o.d1, o.d2):
                if d not in dia_pos:
                    raise DomainError(f"diagonal {d} missing from the appeared set")
            row[dia_pos[o.d1]] -= 0.5
            row[dia_pos[o.d2]] -= 0.5
            rows.append(row)
            rhs.append(0.0)
    eye = np.eye(n_mod + n_dia)
    for i in range(n_mod + n_dia):
        rows.append(-eye[i])
        rhs.append(0.0)
    for i in range(n_mod):
        rows.append(eye[i])
        rhs.append(0.5)
    diag_sum = np.zeros(n_mod + n_dia)
    diag_sum[n_mod:] = 1.0
    rows.append(diag_sum)
    rhs.append(1.0)
    return HPolytope(gamma, pairs, tuple(appeared), np.array(rows), np.array(rhs))


def state_point(rho: DensityMatrix, pairs, appeared) -> Coordinates:
    pairs = tuple(_check_pair(p, rho.dims.D) for p in pairs)
    vals = [abs(rho.matrix[m - 1, n - 1]) for m, n in pairs]
    vals += [rho.matrix[d - 1, d - 1].real for d in appeared]
    return Coordinates(pairs, tuple(appeared), np.array(vals))


def build_hull_problem(pairs, cls_or_gammas, dims: LocalDims,
                       rho: DensityMatrix | None = None) -> HullProblem:
    """Shared-coordinate polytopes for every maximal partition, plus the point."""
    if isinstance(cls_or_gammas, StructureClass):
        gammas = gamma_max(cls_or_gammas, dims.n)
    else:
        gammas = list(cls_or_gammas)
    if not gammas:
        raise DomainError("no partitions to build polytopes from")
    pairs = tuple(_check_pair(p, dims.D) for p in pairs)
    appeared = appeared_diagonals(pairs, gammas, dims)
    polys = [theta_gamma(pairs, g, dims, appeared) for g in gammas]
    point = state_point(rho, pairs, appeared) if rho is not None else None
    return HullProblem(polys, point)


def hull_member(problem: HullProblem, tol: float = 1e-9):
    """LP membership in conv(union of polytopes); returns (bool, certificate).

    Feasibility is tested by minimizing the l1 error of expressing the point
    as sum_g y_g with y_g in lambda_g * Theta_g and sum lambda = 1.  On
    failure the duals of the matching rows give a separating functional,
    which is re-certified by maximizing it over each polytope.
    """
    if problem.point is None:
        raise DomainError("hull problem carries no point")
    x = problem.point.values
    dim = len(x)
    K = len(problem.polytopes)
    # variables: y_1..y_K (dim each), lambda (K), u+ (dim), u- (dim)
    n_vars = K * dim + K + 2 * dim
    lam0 = K * dim
    up0 = lam0 + K
    um0 = up0 + dim
    rows, cols, vals, b_ub = [], [], [], []
    r = 0
    for k, poly in enumerate(problem.polytopes):
        A = poly.A
        for i in range(A.shape[0]):
            for j in np.nonzero(A[i])[0]:
                rows.append(r)
                cols.append(k * dim + j)
                vals.append(A[i, j])
            if poly.b[i] != 0.0:
                rows.append(r)
                cols.append(lam0 + k)
                vals.append(-poly.b[i])
            b_ub.append(0.0)
            r += 1
    for k in range(K):
        rows.append(r)
        cols.append(lam0 + k)
        vals.append(-1.0)
        b_ub.append(0.0)
        r += 1
    A_ub = sparse.coo_matrix((vals, (rows, cols)), shape=(r, n_vars)).tocsc()
    erows, ecols, evals = [], [], []
    for i in range(dim):
        for k in range(K):
            erows.append(i)
            ecols.append(k * dim + i)
            evals.append(1.0)
        erows += [i, i]
        ecols += [up0 + i, um0 + i]
        evals += [1.0, -1.0]
    for k in range(K):
        erows.append(dim)
        ecols.append(lam0 + k)
        evals.append(1.0)
    A_eq = sparse.coo_matrix((evals, (erows, ecols)), shape=(dim + 1, n_vars)).tocsc()
    b_eq = np.concatenate([x, [1.0]])
    # u's must be sign-constrained: append -u <= 0 rows
    extra_rows, extra_cols = [], []
    for i in range(2 * dim):
        extra_rows.append(i)
        extra_cols.append(up0 + i)
    A_sign = sparse.coo_matrix((-np.ones(2 * dim), (extra_rows, extra_cols)),
                               shape=(2 * dim, n_vars)).tocsc()
    A_ub = sparse.vstack([A_ub, A_sign]).tocsc()
    b_ub = np.concatenate([b_ub, np.zeros(2 * dim)])
    obj = np.zeros(n_vars)
    obj[up0:] = -1.0  # maximize -(sum u) == minimize l1 error
    prog = ConicProgram(num_scalars=n_vars, objective=obj,
                        A_eq=A_eq, b_eq=b_eq, A_ub=A_ub, b_ub=b_ub)
    res = solve(prog, tol=min(tol, 1e-9))
    if res.status != "optimal":
        raise RuntimeError(f"hull membership LP failed: {res.status} ({res.solver_status})")
    err = -res.objective
    if err <= tol:
        lam = res.x[lam0: lam0 + K]
        return True, {"member": True, "l1_error": err, "lambdas": lam.tolist()}
    a = np.asarray(res.eq_duals[:dim])
    support = max(_support_value(poly, a) for poly in problem.polytopes)
    gap = float(a @ x - support)
    if gap < 0:
        a, support = -a, max(_support_value(poly, -a) for poly in problem.polytopes)
        gap = float(a @ x - support)
    return False, {
        "member": False,
        "l1_error": err,
        "separating": a.tolist(),
        "hull_support": support,
        "gap": gap,
    }


def _support_value(poly: HPolytope, a: np.ndarray) -> float:
    n = len(a)
    prog = ConicProgram(
        num_scalars=n,
        objective=a.astype(float),
        A_ub=sparse.csc_matrix(poly.A),
        b_ub=poly.b.astype(float),
    )
    res = solve(prog, tol=1e-9)
    if res.status != "optimal":
        raise RuntimeError(f"support LP failed: {res.status}")
    return float(res.objective)


def vertex_oracle_member(problem: HullProblem, tol: float = 1e-7) -> bool:
    """Cross-check via explicit vertex enumeration; coordinate dim <= 6 only."""
    from scipy.optimize import linprog
    from scipy.spatial import HalfspaceIntersection

    x = problem.point.values
    dim = len(x)
    if dim > 6:
        raise DomainError("vertex oracle limited to coordinate dimension <= 6")
    all_vertices = []
    for poly in problem.polytopes:
        # Chebyshev center as the required interior point
        norms = np.linalg.norm(poly.A, axis=1, keepdims=True)
        res = linprog(
            c=np.concatenate([np.zeros(dim), [-1.0]]),
            A_ub=np.hstack([poly.A, norms]),
            b_ub=poly.b,
            bounds=[(None, None)] * dim + [(0, None)],
            method="highs",
        )
        if not res.success or res.x[-1] <= 1e-12:
            continue  # empty interior; the polytope is degenerate at this dim
        hs = HalfspaceIntersection(
            np.hstack([poly.A, -poly.b[:, None]]), res.x[:dim]
        )
        all_vertices.extend(hs.intersections)
    if not all_vertices:
        return False
    V = np.array(all_vertices)
    res = linprog(
        c=np.zeros(len(V)),
        A_eq=np.vstack([V.T, np.ones(len(V))]),
        b_eq=np.concatenate([x, [1.0]]),
        bounds=[(0, None)] * len(V),
        method="highs",
    )
    if res.status == 0:
        return True
    if res.status == 2:
        return False
    raise RuntimeError(f"vertex oracle LP failed with status {res.status}")
