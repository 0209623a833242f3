"""Hyperplane criteria  c * sum_{(m,n) in P} |rho_{m,n}|  <=  alpha . diag(rho).

A witness is built from one digit-swap inequality per (off-diagonal pair,
partition) and holds for every mixture of product states compatible with the
structure class; a positive margin therefore certifies that a state is *not*
in the class.  The construction follows three steps: collect the candidate
inequalities, take the column-wise maximum of the trivial rows (eta), then
assemble one summed row per maximal partition with a greedy choice guided by
an exact-cover reduction of each pair's options.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import dlx
from .partitions import DomainError, Partition, StructureClass, gamma_max
from .qstate import DensityMatrix, LocalDims, PureState, flat_index, multi_index


class GenerationError(RuntimeError):
    """Witness generation failed for a specific pair/partition combination."""


@dataclass(frozen=True)
class ElementInequality:
    """|rho_{m,n}| <= (rho_{d1,d1} + rho_{d2,d2})/2 from swapping digits on one block."""

    pair: tuple[int, int]
    d1: int
    d2: int
    block: tuple[int, ...]
    partition: Partition | None = None

    @property
    def trivial(self) -> bool:
        return {self.d1, self.d2} == set(self.pair)

    @property
    def diags(self) -> tuple[int, int]:
        return tuple(sorted((self.d1, self.d2)))


@dataclass(frozen=True)
class HyperplaneWitness:
    dims: LocalDims
    cls: StructureClass
    pairs: tuple[tuple[int, int], ...]
    multiplier: int
    alpha: np.ndarray
    eta: np.ndarray = field(repr=False, default=None)

    def to_json(self) -> dict:
        kind_short = {"producible": "prod", "partitionable": "part", "stretchable": "str"}
        return {
            "dims": list(self.dims.dims),
            "class": {"kind": kind_short[self.cls.kind], "k": self.cls.k},
            "P": [list(p) for p in self.pairs],
            "multiplier": self.multiplier,
            "alpha": [float(a) for a in self.alpha],
        }

    @staticmethod
    def from_json(obj: dict) -> "HyperplaneWitness":
        dims = LocalDims.of(obj["dims"])
        cls = StructureClass.parse(f"{obj['class']['kind']}:{obj['class']['k']}")
        pairs = tuple(tuple(int(x) for x in p) for p in obj["P"])
        alpha = np.asarray(obj["alpha"], dtype=float)
        if alpha.shape != (dims.D,):
            raise DomainError("alpha length does not match total dimension")
        return HyperplaneWitness(dims, cls, pairs, int(obj["multiplier"]), alpha)


def _check_pair(pair, D) -> tuple[int, int]:
    m, n = int(pair[0]), int(pair[1])
    if not (1 <= m <= D and 1 <= n <= D) or m == n:
        raise DomainError(f"invalid element pair {pair}")
    return (m, n) if m < n else (n, m)


def swap_inequality(pair, block, dims: LocalDims, partition: Partition | None = None) -> ElementInequality:
    """Digit-swap inequality for one block: d1 carries n's digits on the block, d2 m's."""
    m, n = _check_pair(pair, dims.D)
    block = tuple(sorted(int(s) for s in block))
    if not block or any(not 1 <= s <= dims.n for s in block):
        raise DomainError(f"invalid block {block}")
    md = list(multi_index(m, dims))
    nd = list(multi_index(n, dims))
    d1 = md[:]
    d2 = nd[:]
    for s in block:
        d1[s - 1] = nd[s - 1]
        d2[s - 1] = md[s - 1]
    return ElementInequality(
        (m, n), flat_index(d1, dims), flat_index(d2, dims), block, partition
    )


def candidate_sets(pairs, gammas, dims: LocalDims) -> dict:
    """Deduplicated inequalities per (pair, partition), one per distinct block swap."""
    if not pairs:
        raise DomainError("empty pair set")
    if len({g.n for g in gammas}) > 1 or (gammas and gammas[0].n != dims.n):
        raise DomainError("partitions and dims disagree on the party count")
    out = {}
    for pair in pairs:
        pair = _check_pair(pair, dims.D)
        for gamma in gammas:
            seen = set()
            opts = []
            for block in gamma.blocks:
                ineq = swap_inequality(pair, block, dims, gamma)
                if ineq.diags not in seen:
                    seen.add(ineq.diags)
                    opts.append(ineq)
            out[(pair, gamma)] = opts
    return out


def _trivial_vec(pair, D) -> np.ndarray:
    v = np.zeros(D)
    v[pair[0] - 1] += 0.5
    v[pair[1] - 1] += 0.5
    return v


def build_eta(pairs, gammas, dims: LocalDims, cands=None) -> np.ndarray:
    """Column-wise max over partitions of the summed forced-trivial inequalities.

    A pair is forced trivial for a partition when every block swap returns the
    pair itself (its differing sites sit inside a single block).
    """
    cands = cands if cands is not None else candidate_sets(pairs, gammas, dims)
    eta = np.zeros(dims.D)
    for gamma in gammas:
        row = np.zeros(dims.D)
        for pair in pairs:
            pair = _check_pair(pair, dims.D)
            opts = cands[(pair, gamma)]
            if all(o.trivial for o in opts):
                row += _trivial_vec(pair, dims.D)
        eta = np.maximum(eta, row)
    return eta


def _pair_cover(pair, gammas, cands, used_columns):
    """Minimal set of non-trivial inequality options covering every partition.

    Prefers exact covers (dancing links); falls back to a greedy set cover.
    Partitions admitting only the trivial inequality impose no constraint.
    `used_columns` breaks ties toward diagonals other pairs already touch.
    """
    coverage: dict[tuple[int, int], set] = {}
    for gamma in gammas:
        for o in cands[(pair, gamma)]:
            if not o.trivial:
                coverage.setdefault(o.diags, set()).add(gamma)
    universe = set().union(*coverage.values()) if coverage else set()
    if not universe:
        return set()

    def option_key(diags):
        fresh = sum(1 for d in diags if d not in used_columns)
        return (fresh, diags)

    covers = dlx.exact_covers(
        sorted(universe), {diags: cov for diags, cov in coverage.items()}, limit=5000
    )
    if covers:
        best = min(
            covers,
            key=lambda sol: (len(sol), sorted(option_key(d) for d in sol)),
        )
        return set(best)
    # greedy minimum cover
    chosen: set[tuple[int, int]] = set()
    remaining = set(universe)
    while remaining:
        best = max(
            coverage,
            key=lambda diags: (
                len(coverage[diags] & remaining),
                -option_key(diags)[0],
                tuple(-d for d in diags),
            ),
        )
        chosen.add(best)
        remaining -= coverage[best]
    return chosen


def _pair_order(pairs, gammas, cands):
    """Pairs sorted by descending count of partitions admitting a trivial option."""

    def trivial_count(pair):
        return sum(
            1 for g in gammas if any(o.trivial for o in cands[(pair, g)])
        )

    return sorted(pairs, key=lambda p: (-trivial_count(p), p))


def _option_vec(opt: ElementInequality, D) -> np.ndarray:
    v = np.zeros(D)
    v[opt.d1 - 1] += 0.5
    v[opt.d2 - 1] += 0.5
    return v


_JOINT_LIMIT = 20000


def _row_key(row, alpha_run, tau, pair_diag, trivials, misses, freq_sum, diags_trace):
    eff = np.maximum(alpha_run, row)
    delta = eff - alpha_run
    return (
        float(delta[pair_diag].sum()),
        float(np.maximum(row - tau, 0.0).sum()),
        trivials,
        float(delta.sum()),
        int(((eff > 0) & (alpha_run == 0)).sum()),
        misses,
        -freq_sum,
        diags_trace,
    )


def _assemble_sum_rows(pairs, gammas, dims, cands, eta, covers):
    """One summed row per partition; returns (rows, alpha).

    Forced-trivial pairs are placed first.  The remaining choices per row are
    optimized jointly (exhaustively for small rows) against a static target
    profile: eta plus weight 1/2 on the pooled cover columns.  Keeping rows
    under that profile maximizes column sharing across partitions; weight
    added to the pair diagonals is penalized first since it weakens the
    criterion on exactly the states the pair set targets.
    """
    D = dims.D
    pair_diag = np.zeros(D, dtype=bool)
    for m, n in pairs:
        pair_diag[m - 1] = pair_diag[n - 1] = True
    tau = eta.copy()
    for cover in covers.values():
        for diags in cover:
            for d in diags:
                tau[d - 1] = max(tau[d - 1], 0.5)
    freq: dict = {}
    for (pair, _), opts in cands.items():
        for o in opts:
            freq[(pair, o.diags)] = freq.get((pair, o.diags), 0) + 1
    order = _pair_order(pairs, gammas, cands)
    alpha_run = eta.copy()
    rows = []
    for gamma in gammas:
        base = np.zeros(D)
        elective = []
        for pair in order:
            opts = cands[(pair, gamma)]
            if not opts:
                raise GenerationError(f"no inequality for pair {pair} under {gamma}")
            if all(o.trivial for o in opts):
                base += _trivial_vec(pair, D)
            else:
                elective.append((pair, opts))
        row = _best_row(base, elective, alpha_run, tau, pair_diag, covers, freq, D)
        rows.append(row)
        alpha_run = np.maximum(alpha_run, row)
    return rows, alpha_run


def _best_row(base, elective, alpha_run, tau, pair_diag, covers, freq, D):
    n_combos = 1
    for _, opts in elective:
        n_combos *= len(opts)
        if n_combos > _JOINT_LIMIT:
            break
    if n_combos > _JOINT_LIMIT:
        return _best_row_greedy(base, elective, alpha_run, tau, pair_diag, covers, freq, D)
    best_key, best_row = None, base
    stack = [(base, 0, 0, 0, 0, ())]
    while stack:
        row, i, trivials, misses, fsum, trace = stack.pop()
        if i == len(elective):
            key = _row_key(row, alpha_run, tau, pair_diag, trivials, misses, fsum, trace)
            if best_key is None or key < best_key:
                best_key, best_row = key, row
            continue
        pair, opts = elective[i]
        for o in reversed(opts):
            miss = 0 if (o.trivial or o.diags in covers[pair]) else 1
            stack.append(
                (
                    row + _option_vec(o, D),
                    i + 1,
                    trivials + (1 if o.trivial else 0),
                    misses + miss,
                    fsum + freq.get((pair, o.diags), 0),
                    trace + (o.diags,),
                )
            )
    return best_row


def _best_row_greedy(base, elective, alpha_run, tau, pair_diag, covers, freq, D):
    row = base
    for pair, opts in elective:
        best_key, best = None, None
        for o in opts:
            miss = 0 if (o.trivial or o.diags in covers[pair]) else 1
            key = _row_key(
                row + _option_vec(o, D),
                alpha_run,
                tau,
                pair_diag,
                1 if o.trivial else 0,
                miss,
                freq.get((pair, o.diags), 0),
                (o.diags,),
            )
            if best_key is None or key < best_key:
                best_key, best = key, o
        row = row + _option_vec(best, D)
    return row


def _assemble_fixed_rhs(pairs, gammas, dims, cands, eta):
    """Common-RHS mode: sum c inequalities per partition; the LHS gains a factor c.

    The multiplicity c and the per-partition choices are picked to minimize
    the threshold proxy  sum(alpha) / (c*|P| - weight on the pair diagonals).
    """
    D = dims.D
    pair_diag = np.zeros(D, dtype=bool)
    for m, n in pairs:
        pair_diag[m - 1] = pair_diag[n - 1] = True
    per_gamma = {}
    freq: dict = {}
    for gamma in gammas:
        opts = []
        for pair in pairs:
            opts.extend(o for o in cands[(pair, gamma)] if not o.trivial)
        if not opts:
            raise GenerationError(f"no non-trivial inequality available under {gamma}")
        per_gamma[gamma] = opts
        for o in opts:
            freq[(o.pair, o.diags)] = freq.get((o.pair, o.diags), 0) + 1
    c_max = min(len(v) for v in per_gamma.values())
    best = None
    for c in range(1, c_max + 1):
        alpha_run = eta.copy()
        for gamma in gammas:
            row = np.zeros(D)
            chosen = set()
            for _ in range(c):
                cur_eff = np.maximum(alpha_run, row)
                best_key, pick = None, None
                for o in per_gamma[gamma]:
                    if o.diags in chosen:
                        continue
                    new_eff = np.maximum(alpha_run, row + _option_vec(o, D))
                    delta = new_eff - cur_eff
                    key = (
                        float(delta[pair_diag].sum()),
                        float(delta.sum()),
                        int((new_eff > 0).sum() - (cur_eff > 0).sum()),
                        -freq.get((o.pair, o.diags), 0),
                        o.diags,
                    )
                    if best_key is None or key < best_key:
                        best_key, pick = key, o
                if pick is None:
                    break
                chosen.add(pick.diags)
                row += _option_vec(pick, D)
            alpha_run = np.maximum(alpha_run, row)
        denom = c * len(pairs) - float(alpha_run[pair_diag].sum())
        score = float("inf") if denom <= 0 else float(alpha_run.sum()) / denom
        if best is None or (score, c) < (best[0], best[1]):
            best = (score, c, alpha_run)
    return best[1], best[2]


def generate_witness(pairs, cls: StructureClass, dims: LocalDims, mode: str = "sum") -> HyperplaneWitness:
    """Build the criterion  c * sum |rho_{m,n}| <= alpha . diag(rho)  for the class."""
    pairs = tuple(sorted(_check_pair(p, dims.D) for p in pairs))
    if not pairs:
        raise DomainError("empty pair set")
    gammas = gamma_max(cls, dims.n)
    if not gammas:
        raise GenerationError(f"class {cls.short()} has no maximal partitions for n={dims.n}")
    cands = candidate_sets(pairs, gammas, dims)
    eta = build_eta(pairs, gammas, dims, cands)
    if mode == "sum":
        used: set[int] = set(np.nonzero(eta)[0] + 1)
        covers = {}
        for pair in _pair_order(pairs, gammas, cands):
            covers[pair] = _pair_cover(pair, gammas, cands, used)
            for diags in covers[pair]:
                used.update(diags)
        _, alpha = _assemble_sum_rows(pairs, gammas, dims, cands, eta, covers)
        multiplier = 1
    elif mode == "fixed_rhs":
        multiplier, alpha = _assemble_fixed_rhs(pairs, gammas, dims, cands, eta)
    else:
        raise DomainError(f"unknown mode {mode!r}")
    return HyperplaneWitness(dims, cls, pairs, multiplier, alpha, eta)


def default_pairs(psi: PureState, cap: int = 32) -> list[tuple[int, int]]:
    """Off-diagonal support of |psi><psi|, strongest moduli first, capped."""
    amp = psi.amplitudes
    support = [i for i in np.nonzero(np.abs(amp) > 1e-12)[0]]
    scored = []
    for a in range(len(support)):
        for b in range(a + 1, len(support)):
            i, j = int(support[a]), int(support[b])
            scored.append((-abs(amp[i] * amp[j]), (i + 1, j + 1)))
    scored.sort()
    return [pair for _, pair in scored[:cap]]


def evaluate(w: HyperplaneWitness, rho: DensityMatrix, real_part: bool = False) -> float:
    """Margin c*sum|rho_{m,n}| - alpha.diag(rho); positive means 'not in class'.

    With real_part=True the modulus is replaced by its measurable lower bound
    (rho_{m,n} + rho_{n,m})/2.
    """
    if rho.dims != w.dims:
        raise DomainError("witness and state dimensions differ")
    lhs = 0.0
    for m, n in w.pairs:
        entry = rho.matrix[m - 1, n - 1]
        lhs += entry.real if real_part else abs(entry)
    rhs = float(w.alpha @ rho.matrix.diagonal().real)
    return w.multiplier * lhs - rhs


def _rationalize(x: float, max_den: int = 10**9):
    frac = Fraction(x).limit_denominator(max_den)
    if abs(float(frac) - x) <= 1e-12 * max(1.0, abs(x)):
        return frac
    return None


def noise_threshold(w: HyperplaneWitness, pure: PureState, noise: DensityMatrix):
    """Least t in [0,1] with positive margin for t|psi><psi| + (1-t)*noise.

    Returns an exact Fraction when the margin is affine in t with rational
    data, a float from bisection otherwise, or None when no t is detected.
    """
    if pure.dims != w.dims or noise.dims != w.dims:
        raise DomainError("dimension mismatch in noise_threshold")
    amp = pure.amplitudes
    off_noise = max(abs(noise.matrix[m - 1, n - 1]) for m, n in w.pairs)
    if off_noise <= 1e-14:
        # margin(t) = t*(c*L - alpha.s + alpha.g) - alpha.g, affine in t
        L = sum(abs(amp[m - 1]) * abs(amp[n - 1]) for m, n in w.pairs)
        s = float(w.alpha @ (np.abs(amp) ** 2))
        g = float(w.alpha @ noise.matrix.diagonal().real)
        rL, rs, rg = _rationalize(float(L)), _rationalize(s), _rationalize(g)
        if rL is not None and rs is not None and rg is not None:
            slope = w.multiplier * rL - rs + rg
            if slope <= 0 or rg / slope > 1:
                return None
            return rg / slope
        slope = w.multiplier * L - s + g
        if slope <= 0 or g / slope > 1:
            return None
        return g / slope

    def margin(t):
        mat = t * np.outer(amp, amp.conj()) + (1 - t) * noise.matrix
        lhs = sum(abs(mat[m - 1, n - 1]) for m, n in w.pairs)
        return w.multiplier * lhs - float(w.alpha @ mat.diagonal().real)

    # the margin is convex in t, so the positive region ends at t=1 if anywhere
    if margin(1.0) <= 0:
        return None if margin(0.0) <= 0 else 0.0
    lo, hi = 0.0, 1.0
    if margin(lo) > 0:
        return 0.0
    while hi - lo > 1e-10:
        mid = (lo + hi) / 2
        if margin(mid) > 0:
            hi = mid
        else:
            lo = mid
    return hi
