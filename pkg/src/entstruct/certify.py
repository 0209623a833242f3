"""Inner-polytope certification of entanglement structure.

Certifies that rho(t) = t*rho + (1-t)*sigma stays in a structure class by
maintaining a polytope of explicit in-class product states: gradient descent
moves the polytope's mixture toward the segment [sigma, rho] and then toward
rho, and a per-block SDP maximizes t subject to an exact decomposition
rho(t) = sum_i (fixed factors)_i (x) tau_i with tau_i >= 0.  The returned t
is a sound lower bound because the decomposition is itself an in-class state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import sparse

from .partitions import DomainError, Partition, StructureClass, gamma_max
from .qstate import DensityMatrix, LocalDims, fidelity, haar_state, maximally_mixed, product_state
from .solver import ConicProgram, SolverSettings, block_entry_param, block_param_count, solve

# single-qubit Pauli eigenstates (I +/- sigma_{x,y,z})/2, as state vectors
_S2 = 1 / math.sqrt(2)
MUB_QUBIT_STATES = (
    np.array([_S2, _S2], dtype=complex),        # +x
    np.array([_S2, -_S2], dtype=complex),       # -x
    np.array([_S2, 1j * _S2], dtype=complex),   # +y
    np.array([_S2, -1j * _S2], dtype=complex),  # -y
    np.array([1.0, 0.0], dtype=complex),        # +z
    np.array([0.0, 1.0], dtype=complex),        # -z
)


@dataclass(frozen=True)
class ProductVertex:
    partition: Partition
    block_states: tuple[np.ndarray, ...]


@dataclass
class InnerPolytope:
    dims: LocalDims
    vertices: list[ProductVertex]
    weights: np.ndarray

    def mixture(self) -> np.ndarray:
        out = np.zeros((self.dims.D, self.dims.D), dtype=complex)
        for w, v in zip(self.weights, self.vertices):
            vec = product_state(v.partition, v.block_states, self.dims)
            out += w * np.outer(vec, vec.conj())
        return out

    def mixture_dm(self) -> DensityMatrix:
        return DensityMatrix(self.dims, self.mixture())


@dataclass
class CertifyConfig:
    r: float = 0.05
    max_outer_iters: int = 3
    descent_steps: int = 600
    lr: float = 0.2
    restarts: int = 5
    rng_seed: int = 0
    sdp_tol: float = 1e-7
    fidelity_min: float = 0.9999
    num_vertices: int | None = None     # initial vertex count; default 2*D
    keep_vertices: int = 256            # cap when rebuilding from SDP eigen-splits
    mub_budget: int = 1296              # product terms; full set used when it fits
    sweep_tol: float = 1e-5
    prune_tol: float = 1e-9

    def __post_init__(self):
        if self.r <= 0 or self.restarts < 1:
            raise DomainError("need r > 0 and restarts >= 1")


@dataclass(frozen=True)
class DecompositionTerm:
    """One summand (tensor product of fixed pure blocks) x tau on the free block."""

    partition: Partition
    fixed_blocks: tuple[tuple[tuple[int, ...], np.ndarray], ...]
    free_sites: tuple[int, ...]
    tau: np.ndarray


@dataclass
class Certificate:
    t_lower: float
    cls: StructureClass
    dims: LocalDims
    terms: list[DecompositionTerm] = field(default_factory=list)
    fidelity: float = 0.0
    trace_residual: float = math.inf
    seed: int = 0

    def to_json(self) -> dict:
        kind_short = {"producible": "prod", "partitionable": "part", "stretchable": "str"}
        vertices = []
        taus = []
        for term in self.terms:
            vertices.append(
                {
                    "partition": str(term.partition),
                    "fixed_blocks": [
                        {"sites": list(sites), "state": _cvec(vec)}
                        for sites, vec in term.fixed_blocks
                    ],
                    "free_sites": list(term.free_sites),
                }
            )
            taus.append(_cmat(term.tau))
        return {
            "t_lower": self.t_lower,
            "class": {"kind": kind_short[self.cls.kind], "k": self.cls.k},
            "dims": list(self.dims.dims),
            "vertices": vertices,
            "tau": taus,
            "fidelity": self.fidelity,
            "trace_residual": self.trace_residual,
            "seed": self.seed,
        }


def _cvec(v):
    return [[float(x.real), float(x.imag)] for x in v]

def _cmat(m):
    return [[[float(x.real), float(x.imag)] for x in row] for row in m]


# ---------------------------------------------------------------------------
# polytope initialization and gradient descent


def init_polytope(cls: StructureClass, dims: LocalDims, num_vertices: int,
                  rng: np.random.Generator) -> InnerPolytope:
    """Haar-random block states over the class's maximal partitions, cycled."""
    if num_vertices < 1:
        raise DomainError("need at least one vertex")
    gammas = gamma_max(cls, dims.n)
    if not gammas:
        raise DomainError(f"class {cls.short()} admits no partitions for n={dims.n}")
    vertices = []
    for i in range(num_vertices):
        partition = gammas[i % len(gammas)]
        blocks = tuple(
            haar_state(math.prod(dims.dims[s - 1] for s in b), rng) for b in partition.blocks
        )
        vertices.append(ProductVertex(partition, blocks))
    return InnerPolytope(dims, vertices, np.full(num_vertices, 1.0 / num_vertices))


def distance_to_segment(varrho: DensityMatrix, rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Frobenius distance from varrho to the segment between sigma and rho."""
    if varrho.dims != rho.dims or rho.dims != sigma.dims:
        raise DomainError("dimension mismatch")
    return float(
        _segment_distance_np(varrho.matrix, rho.matrix, sigma.matrix)
    )


def _segment_distance_np(v, r, s):
    d = r - s
    denom = np.vdot(d, d).real
    if denom < 1e-30:
        return np.linalg.norm(v - s)
    proj = np.clip(np.vdot(d, v - s).real / denom, 0.0, 1.0)
    return np.linalg.norm(v - (s + proj * d))


def _torch():
    import torch

    torch.set_default_dtype(torch.float64)
    return torch


def descend(polytope: InnerPolytope, objective: str, rho: DensityMatrix,
            sigma: DensityMatrix, config: CertifyConfig) -> InnerPolytope:
    """First-order descent of block states and weights on the chosen loss.

    objective 'segment' minimizes distance to the segment [sigma, rho];
    'target' minimizes ||rho - varrho|| and falls back to the segment loss
    whenever the segment distance exceeds config.r.  The step size halves on
    any loss increase, so accepted losses are non-increasing per stage.
    """
    if objective not in ("segment", "target"):
        raise DomainError(f"unknown descent objective {objective!r}")
    torch = _torch()
    dims = polytope.dims
    rho_t = torch.tensor(rho.matrix)
    sigma_t = torch.tensor(sigma.matrix)
    seg_t = rho_t - sigma_t
    seg_norm2 = torch.vdot(seg_t.reshape(-1), seg_t.reshape(-1)).real.clamp_min(1e-30)

    groups: dict[Partition, list[int]] = {}
    for i, v in enumerate(polytope.vertices):
        groups.setdefault(v.partition, []).append(i)
    params = []
    group_data = []
    for partition, idxs in groups.items():
        blocks = []
        for b_i in range(len(partition.blocks)):
            stack = np.stack([polytope.vertices[i].block_states[b_i] for i in idxs])
            tensor = torch.tensor(stack, requires_grad=True)
            blocks.append(tensor)
            params.append(tensor)
        site_order = [s for block in partition.blocks for s in block]
        perm = [site_order.index(s) for s in range(1, dims.n + 1)]
        group_data.append((idxs, blocks, perm))
    logits = torch.tensor(np.log(np.maximum(polytope.weights, 1e-12)), requires_grad=True)
    params.append(logits)

    site_dims = list(dims.dims)

    def mixture():
        w = torch.softmax(logits, dim=0)
        out = torch.zeros((dims.D, dims.D), dtype=torch.complex128)
        for idxs, blocks, perm in group_data:
            psi = None
            for tensor in blocks:
                normed = tensor / torch.linalg.norm(tensor, dim=1, keepdim=True)
                psi = normed if psi is None else torch.einsum(
                    "na,nb->nab", psi, normed
                ).reshape(len(idxs), -1)
            axis_sites = _order_sites(perm)
            psi = psi.reshape([len(idxs)] + [site_dims[s] for s in axis_sites])
            psi = psi.permute([0] + [1 + perm[k] for k in range(dims.n)]).reshape(len(idxs), dims.D)
            wi = w[idxs].to(torch.complex128)
            out = out + torch.einsum("n,na,nb->ab", wi, psi, psi.conj())
        return out

    def loss_fn(force_segment=False):
        varrho = mixture()
        if objective == "segment" or force_segment:
            diff = varrho - sigma_t
            proj = torch.clamp(
                torch.vdot(seg_t.reshape(-1), diff.reshape(-1)).real / seg_norm2, 0.0, 1.0
            )
            resid = varrho - (sigma_t + proj * seg_t)
        else:
            resid = varrho - rho_t
        return torch.linalg.norm(resid.reshape(-1))

    lr = config.lr
    force_segment = False
    for _ in range(config.descent_steps):
        if objective == "target":
            with torch.no_grad():
                seg_d = _segment_distance_np(mixture().numpy(), rho.matrix, sigma.matrix)
            force_segment = seg_d > config.r
        loss = loss_fn(force_segment)
        for par in params:
            par.grad = None
        loss.backward()
        with torch.no_grad():
            saved = [par.detach().clone() for par in params]
            grads = [par.grad.clone() for par in params]
            accepted = False
            while lr >= 1e-12:
                for par, old, g in zip(params, saved, grads):
                    par.copy_(old - lr * g)
                if loss_fn(force_segment).item() <= loss.item() + 1e-14:
                    accepted = True
                    lr = min(lr * 1.2, 1.0)
                    break
                lr *= 0.5
            if not accepted:
                for par, old in zip(params, saved):
                    par.copy_(old)
                break
    with torch.no_grad():
        w = torch.softmax(logits, dim=0).numpy()
        vertices = list(polytope.vertices)
        for (idxs, blocks, _), partition in zip(group_data, groups):
            for pos, i in enumerate(idxs):
                new_blocks = tuple(
                    (blk[pos] / torch.linalg.norm(blk[pos])).numpy() for blk in blocks
                )
                vertices[i] = ProductVertex(partition, new_blocks)
    return InnerPolytope(dims, vertices, w / w.sum())


def _order_sites(perm):
    # inverse description: position p holds site index order[p]
    order = [0] * len(perm)
    for site, pos in enumerate(perm):
        order[pos] = site
    return order


# ---------------------------------------------------------------------------
# SDP step


def _interleave_map(fixed_sites: list[int], free_sites: list[int], dims: LocalDims) -> np.ndarray:
    """perm_map[a, b] = 0-based canonical flat index with fixed digits a, free digits b."""
    strides = np.ones(dims.n, dtype=np.int64)
    for s in range(dims.n - 2, -1, -1):
        strides[s] = strides[s + 1] * dims.dims[s + 1]

    def offsets(sites):
        site_dims = [dims.dims[s - 1] for s in sites]
        size = math.prod(site_dims) if sites else 1
        out = np.zeros(size, dtype=np.int64)
        for local in range(size):
            rem = local
            for s, sd in zip(reversed(sites), reversed(site_dims)):
                out[local] += (rem % sd) * strides[s - 1]
                rem //= sd
        return out

    fa = offsets(fixed_sites)
    fb = offsets(free_sites)
    return fa[:, None] + fb[None, :]


def mub_product_terms(dims: LocalDims, free_site: int, budget: int,
                      rng: np.random.Generator) -> list[tuple[tuple[int, ...], np.ndarray]]:
    """Pauli-eigenstate products over the sites other than free_site.

    Returns (choice labels, fixed state vector) pairs.  The full 6^(n-1) set
    is used when it fits the budget; otherwise all sigma_z products (whose
    hull contains the maximally mixed state, keeping the SDP feasible) plus a
    seeded random sample of the rest.
    """
    if any(d != 2 for d in dims.dims):
        return []
    others = [s for s in range(1, dims.n + 1) if s != free_site]
    n_oth = len(others)
    total = 6 ** n_oth
    if total <= budget:
        choices = [_digits(i, 6, n_oth) for i in range(total)]
    else:
        z_only = [_digits(i, 2, n_oth) for i in range(2 ** n_oth)]
        choices = [tuple(4 + c for c in ch) for ch in z_only]  # indices 4,5 are +/-z
        seen = set(choices)
        while len(choices) < budget:
            cand = tuple(int(x) for x in rng.integers(0, 6, size=n_oth))
            if cand not in seen:
                seen.add(cand)
                choices.append(cand)
    out = []
    for ch in choices:
        vec = np.ones(1, dtype=complex)
        for c in ch:
            vec = np.kron(vec, MUB_QUBIT_STATES[c])
        out.append((ch, vec))
    return out


def _digits(i: int, base: int, n: int) -> tuple[int, ...]:
    out = []
    for _ in range(n):
        out.append(i % base)
        i //= base
    return tuple(reversed(out))


def _row_maps(D: int):
    row_re = -np.ones((D, D), dtype=np.int64)
    row_im = -np.ones((D, D), dtype=np.int64)
    counter = 0
    for p in range(D):
        for q in range(p, D):
            row_re[p, q] = counter
            counter += 1
            if q > p:
                row_im[p, q] = counter
                counter += 1
    return row_re, row_im, counter


def _term_columns(outer: np.ndarray, perm_map: np.ndarray, d: int, col0: int,
                  row_re, row_im, rows, cols, vals):
    """Append COO entries mapping one term's tau params onto the equality rows."""
    F = outer.shape[0]
    for b in range(d):
        for b2 in range(d):
            p_idx = perm_map[:, b][:, None] + np.zeros((1, F), dtype=np.int64)
            q_idx = perm_map[:, b2][None, :] + np.zeros((F, 1), dtype=np.int64)
            mask = p_idx <= q_idx
            if not mask.any():
                continue
            pv = p_idx[mask]
            qv = q_idx[mask]
            c0 = outer[mask]
            i, j = min(b, b2), max(b, b2)
            idx, kind = block_entry_param(d, i, j)
            rre = row_re[pv, qv]
            rim = row_im[pv, qv]
            has_im = rim >= 0
            if kind == "diag":
                rows.extend(rre.tolist())
                cols.extend([col0 + idx] * len(rre))
                vals.extend(c0.real.tolist())
                rows.extend(rim[has_im].tolist())
                cols.extend([col0 + idx] * int(has_im.sum()))
                vals.extend(c0.imag[has_im].tolist())
            else:
                sign = 1.0 if b < b2 else -1.0  # tau_{b,b2} = re + sign*1j*im
                rows.extend(rre.tolist())
                cols.extend([col0 + idx] * len(rre))
                vals.extend(c0.real.tolist())
                rows.extend(rre.tolist())
                cols.extend([col0 + idx + 1] * len(rre))
                vals.extend((-sign * c0.imag).tolist())
                rows.extend(rim[has_im].tolist())
                cols.extend([col0 + idx] * int(has_im.sum()))
                vals.extend(c0.imag[has_im].tolist())
                rows.extend(rim[has_im].tolist())
                cols.extend([col0 + idx + 1] * int(has_im.sum()))
                vals.extend((sign * c0.real[has_im]).tolist())


def sdp_step(polytope: InnerPolytope, free_site: int, rho: DensityMatrix,
             sigma: DensityMatrix, config: CertifyConfig,
             rng: np.random.Generator | None = None):
    """Maximize t with rho(t) = sum_i fixed_i (x) tau_i, tau_i PSD, t <= 1.

    Each vertex frees the block of its partition containing free_site; for
    all-qubit systems the sum is augmented with Pauli-eigenstate products
    carrying their own free-site tau, which keeps the program feasible.
    Returns (t, terms, result); t is None on clean infeasibility.
    """
    dims = polytope.dims
    D = dims.D
    rng = rng if rng is not None else np.random.default_rng(config.rng_seed)
    row_re, row_im, n_rows = _row_maps(D)
    target_dir = rho.matrix - sigma.matrix

    specs = []  # (partition, fixed_blocks, free_sites, free_dim, outer, perm_map)
    for v in polytope.vertices:
        free_block = v.partition.block_of(free_site)
        fixed_sites = [s for s in range(1, dims.n + 1) if s not in free_block]
        fixed_blocks = tuple(
            (b, v.block_states[i])
            for i, b in enumerate(v.partition.blocks)
            if b != free_block
        )
        fvec = _fixed_vector(fixed_blocks, fixed_sites, dims)
        d_free = math.prod(dims.dims[s - 1] for s in free_block)
        perm_map = _interleave_map(fixed_sites, sorted(free_block), dims)
        specs.append((v.partition, fixed_blocks, tuple(sorted(free_block)), d_free,
                      np.outer(fvec, fvec.conj()), perm_map))

    singletons = Partition.of(dims.n, [[s] for s in range(1, dims.n + 1)])
    mub_sites = [s for s in range(1, dims.n + 1) if s != free_site]
    for labels, fvec in mub_product_terms(dims, free_site, config.mub_budget, rng):
        fixed_blocks = tuple(
            ((s,), MUB_QUBIT_STATES[c]) for s, c in zip(mub_sites, labels)
        )
        perm_map = _interleave_map(mub_sites, [free_site], dims)
        specs.append((singletons, fixed_blocks, (free_site,), dims.dims[free_site - 1],
                      np.outer(fvec, fvec.conj()), perm_map))

    block_dims = [spec[3] for spec in specs]
    prog = ConicProgram(num_scalars=1, block_dims=block_dims)
    rows, cols, vals = [], [], []
    b_eq = np.zeros(n_rows)
    # -t*(rho-sigma)_{pq} + sum(terms) = sigma_{pq}
    for p in range(D):
        for q in range(p, D):
            entry = target_dir[p, q]
            r = row_re[p, q]
            if entry.real != 0.0:
                rows.append(r); cols.append(0); vals.append(-entry.real)
            b_eq[r] = sigma.matrix[p, q].real
            ri = row_im[p, q]
            if ri >= 0:
                if entry.imag != 0.0:
                    rows.append(ri); cols.append(0); vals.append(-entry.imag)
                b_eq[ri] = sigma.matrix[p, q].imag
    for k, (_, _, _, d_free, outer, perm_map) in enumerate(specs):
        _term_columns(outer, perm_map, d_free, prog.block_offset(k), row_re, row_im,
                      rows, cols, vals)
    prog.A_eq = sparse.coo_matrix((vals, (rows, cols)), shape=(n_rows, prog.num_vars)).tocsc()
    prog.b_eq = b_eq
    prog.A_ub = sparse.coo_matrix(([1.0], ([0], [0])), shape=(1, prog.num_vars)).tocsc()
    prog.b_ub = np.array([1.0])
    obj = np.zeros(prog.num_vars)
    obj[0] = 1.0
    prog.objective = obj
    result = solve(prog, tol=config.sdp_tol, settings=SolverSettings(tol=config.sdp_tol))
    if result.status == "infeasible":
        return None, [], result
    if result.status != "optimal":
        raise RuntimeError(f"SDP solver failure: {result.solver_status}")
    t = float(result.scalars[0])
    terms = [
        DecompositionTerm(partition, fixed_blocks, free_sites, tau)
        for (partition, fixed_blocks, free_sites, _, _, _), tau in zip(specs, result.blocks)
    ]
    return t, terms, result


def _fixed_vector(fixed_blocks, fixed_sites, dims: LocalDims) -> np.ndarray:
    """Tensor the fixed block states into a vector over fixed_sites (ascending)."""
    if not fixed_blocks:
        return np.ones(1, dtype=complex)
    sub_dims = [dims.dims[s - 1] for s in fixed_sites]
    pos = {s: i for i, s in enumerate(fixed_sites)}
    vec = np.ones(1, dtype=complex)
    order: list[int] = []
    for sites, state in fixed_blocks:
        vec = np.kron(vec, np.asarray(state, dtype=complex).reshape(-1))
        order.extend(pos[s] for s in sites)
    shape = []
    for sites, _ in fixed_blocks:
        shape.extend(dims.dims[s - 1] for s in sites)
    vec = vec.reshape(shape)
    vec = np.moveaxis(vec, range(len(order)), order)
    return vec.reshape(-1)


def reconstruct(terms, dims: LocalDims) -> np.ndarray:
    """Sum of fixed (x) tau contributions as a full matrix."""
    out = np.zeros((dims.D, dims.D), dtype=complex)
    for term in terms:
        fixed_sites = [s for s in range(1, dims.n + 1) if s not in term.free_sites]
        fvec = _fixed_vector(term.fixed_blocks, fixed_sites, dims)
        perm_map = _interleave_map(fixed_sites, list(term.free_sites), dims)
        idx = perm_map.reshape(-1)  # row-major (fixed, free) matches the kron order
        out[np.ix_(idx, idx)] += np.kron(np.outer(fvec, fvec.conj()), term.tau)
    return out


def _split_terms(terms, prune_tol: float):
    """Eigen-split each term's tau into pure product vertices with weights."""
    vertices = []
    weights = []
    for term in terms:
        tau = (term.tau + term.tau.conj().T) / 2
        w, vecs = np.linalg.eigh(tau)
        n = len(term.free_sites) + sum(len(s) for s, _ in term.fixed_blocks)
        for k in range(len(w)):
            if w[k] > prune_tol:
                by_sites = {tuple(sorted(s)): np.asarray(st, dtype=complex)
                            for s, st in term.fixed_blocks}
                by_sites[tuple(sorted(term.free_sites))] = vecs[:, k]
                partition = Partition.of(n, list(by_sites))
                blocks = tuple(by_sites[b] for b in partition.blocks)
                vertices.append(ProductVertex(partition, blocks))
                weights.append(float(w[k]))
    return vertices, np.array(weights)


def _lift_vertex(vertex: ProductVertex, gammas, counter: int, dims: LocalDims) -> ProductVertex:
    """Coarsen a vertex's partition to a maximal one it refines.

    A product over a refinement is a product over the coarser partition, so
    lifting is always valid; it restores large free blocks for later SDP
    steps (a vertex left on singletons could never re-entangle).
    """
    from .partitions import refines

    if vertex.partition in gammas:
        return vertex
    targets = [g for g in gammas if refines(vertex.partition, g)]
    if not targets:
        return vertex
    target = targets[counter % len(targets)]
    blocks = []
    for tb in target.blocks:
        inner = [(b, st) for b, st in zip(vertex.partition.blocks, vertex.block_states)
                 if set(b) <= set(tb)]
        blocks.append(_fixed_vector(tuple(inner), list(tb), dims))
    return ProductVertex(target, tuple(blocks))


def certify(rho: DensityMatrix, sigma: DensityMatrix | None, cls: StructureClass,
            config: CertifyConfig | None = None) -> Certificate:
    """Full pipeline: init, two-stage descent, SDP sweeps; best t over restarts."""
    config = config or CertifyConfig()
    dims = rho.dims
    sigma = sigma if sigma is not None else maximally_mixed(dims)
    if sigma.dims != dims:
        raise DomainError("sigma dimension mismatch")
    cls.validate_for(dims.n)
    num_vertices = config.num_vertices or 2 * dims.D
    gammas = gamma_max(cls, dims.n)
    best_t = 0.0
    best_terms: list[DecompositionTerm] = []
    for restart in range(config.restarts):
        rng = np.random.default_rng((config.rng_seed, restart))
        polytope = init_polytope(cls, dims, num_vertices, rng)
        prev_best = 0.0
        for _ in range(config.max_outer_iters):
            polytope = descend(polytope, "segment", rho, sigma, config)
            polytope = descend(polytope, "target", rho, sigma, config)
            for site in range(1, dims.n + 1):
                t, terms, _ = sdp_step(polytope, site, rho, sigma, config, rng)
                if t is None:
                    continue
                if t > best_t:
                    best_t, best_terms = t, terms
                vertices, weights = _split_terms(terms, config.prune_tol)
                if vertices:
                    keep = np.argsort(weights)[::-1][: config.keep_vertices]
                    polytope = InnerPolytope(
                        dims,
                        [_lift_vertex(vertices[i], gammas, pos, dims)
                         for pos, i in enumerate(keep)],
                        weights[keep] / weights[keep].sum(),
                    )
            if best_t - prev_best < config.sweep_tol:
                break
            prev_best = best_t
    cert = Certificate(best_t, cls, dims, best_terms, seed=config.rng_seed)
    if best_terms:
        fid, resid = validate_certificate(cert, rho, sigma)
        cert.fidelity = fid
        cert.trace_residual = resid
    return cert


def validate_certificate(cert: Certificate, rho: DensityMatrix,
                         sigma: DensityMatrix | None = None) -> tuple[float, float]:
    """Rebuild the decomposition; returns (fidelity to rho(t_lower), |trace-1|)."""
    if not cert.terms:
        raise DomainError("certificate has an empty decomposition")
    dims = cert.dims
    sigma = sigma if sigma is not None else maximally_mixed(dims)
    for i, term in enumerate(cert.terms):
        w = np.linalg.eigvalsh((term.tau + term.tau.conj().T) / 2)
        if w[0] < -1e-7:
            raise DomainError(f"tau block {i} is not PSD (min eigenvalue {w[0]:.2e})")
    recon = reconstruct(cert.terms, dims)
    tr = float(np.trace(recon).real)
    target = cert.t_lower * rho.matrix + (1 - cert.t_lower) * sigma.matrix
    normed = recon / tr
    fid = fidelity(DensityMatrix(dims, (normed + normed.conj().T) / 2),
                   DensityMatrix(dims, target))
    return fid, abs(tr - 1.0)
