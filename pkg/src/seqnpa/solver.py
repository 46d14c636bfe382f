"""Block-diagonal SDP solving with certified dual bounds.

Standard form: optimize tr(C X) over block-diagonal symmetric X >= 0
subject to sparse equality constraints tr(A_k X) = b_k.  Simple rows
(fixed entries and two-entry proportionality ties) are merged away by an
affine union-find before the numerical backend runs; the backend is cvxpy
with CLARABEL for small blocks and SCS for large ones.  Feasibility and
optimality are re-checked from the returned iterates, multipliers for the
original rows are recovered by sparse least squares, and
verified_dual_bound turns any multiplier vector into a bound that does
not rely on the solver having converged.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

Entry = tuple[int, int, int]  # (block, row, col) with row <= col

_SQRT2 = np.sqrt(2.0)


@dataclass
class SdpStandardForm:
    """tr(C X) objective and tr(A_k X) = b_k rows over upper-triangle entries.

    Coefficient dicts store symmetric-matrix values: an off-diagonal entry
    (i, j) holds half of the coefficient its X_ij entry receives in the
    trace, so tr(A X) = sum_e coeff_e * X_e * (1 if diag else 2).
    """

    block_sizes: list[int]
    objective: dict[Entry, float]
    constraints: list[tuple[dict[Entry, float], float]]
    sense: str = "max"
    objective_offset: float = 0.0
    trace_table: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.sense not in ("max", "min"):
            raise ValueError(f"unknown sense {self.sense!r}")


@dataclass
class SolverConfig:
    solver: str = "auto"  # auto | CLARABEL | SCS
    feas_tol: float = 1e-7
    gap_tol: float = 1e-6
    max_iter: int = 200_000
    verbose: bool = False
    fallback: Optional[str] = "SCS"
    # interior-point cost grows with the square of the total vectorized PSD
    # cone size, so large problems go to the first-order backend
    ipm_svec_limit: int = 5000
    # extra keyword settings forwarded verbatim to the first-order backend
    # (e.g. {"scale": 1000.0} — ill-conditioned guessing programs converge
    # far faster when the initial primal/dual scale is set high)
    scs_options: Optional[dict] = None


@dataclass
class SdpSolution:
    status: str  # optimal | infeasible | max_iter | numerical_failure
    value: Optional[float]
    blocks: Optional[list[np.ndarray]]
    y: Optional[np.ndarray]  # multipliers for the original constraint rows
    dual_value: Optional[float]
    gap: Optional[float]
    eq_residual: Optional[float]
    min_eig: Optional[float]
    solver_name: str = ""
    # raw backend iterate for warm starting a structurally identical solve
    warm: Optional[dict] = None


def _entry_index(form: SdpStandardForm) -> dict[Entry, int]:
    """Deterministic numbering of every upper-triangle entry of every block.

    Unconstrained entries are genuine variables; dropping them would
    silently pin them to zero and over-constrain the problem.
    """
    ents: dict[Entry, int] = {}
    for blk, s in enumerate(form.block_sizes):
        for i in range(s):
            for j in range(i, s):
                ents[(blk, i, j)] = len(ents)
    return ents


def _entry_coeff(e: Entry, matval: float) -> float:
    return matval if e[1] == e[2] else 2.0 * matval


def _min_eig(blocks: list[np.ndarray]) -> float:
    vals = [np.linalg.eigvalsh(m)[0] for m in blocks if m.size]
    return min(vals) if vals else 0.0


class _Merge:
    """Affine union-find over entry variables: val(e) = mult * val(root).

    Roots may additionally be fixed to constants.  Two-entry homogeneous
    rows become unions, single-entry rows become fixes; everything else is
    kept as a general row over the surviving roots.
    """

    def __init__(self, n: int):
        self.parent: dict[int, tuple[int, float]] = {}
        self.fixed: dict[int, float] = {}
        self.n = n

    def find(self, i: int) -> tuple[int, float]:
        m = 1.0
        path = []
        while i in self.parent:
            path.append((i, m))
            r, mm = self.parent[i]
            m *= mm
            i = r
        # path compression: node value = (m_total / m_sofar) * val(root)
        for node, m_sofar in path:
            self.parent[node] = (i, m / m_sofar)
        return i, m

    def resolve(self, items: list[tuple[int, float]], rhs: float):
        acc: dict[int, float] = {}
        const = 0.0
        for v, c in items:
            r, m = self.find(v)
            if r in self.fixed:
                const += c * m * self.fixed[r]
            else:
                acc[r] = acc.get(r, 0.0) + c * m
        if acc:
            top = max(abs(c) for c in acc.values())
            acc = {v: c for v, c in acc.items() if abs(c) > 1e-12 * top}
        return acc, rhs - const


def _merge_presolve(form: SdpStandardForm, ents: dict[Entry, int],
                    feas_tol: float):
    """Absorb fix/tie rows; returns (merge, general rows, status).

    General rows keep their original constraint index so multipliers can be
    reported against the input ordering.
    """
    merge = _Merge(len(ents))
    pending: list[tuple[int, list[tuple[int, float]], float]] = []
    for k, (row, rhs) in enumerate(form.constraints):
        items = [(ents[e], _entry_coeff(e, c)) for e, c in row.items()]
        pending.append((k, items, rhs))
    general: list[tuple[int, dict[int, float], float]] = []
    changed = True
    while changed:
        changed = False
        nxt = []
        for k, items, rhs in pending:
            acc, need = merge.resolve(items, rhs)
            if not acc:
                if abs(need) > feas_tol:
                    return merge, [], "infeasible"
                continue
            if len(acc) == 1:
                (v, c), = acc.items()
                merge.fixed[v] = need / c
                changed = True
                continue
            if len(acc) == 2 and abs(need) < 1e-12:
                (v1, c1), (v2, c2) = acc.items()
                merge.parent[v2] = (v1, -c1 / c2)
                changed = True
                continue
            nxt.append((k, items, rhs))
        pending = nxt
    for k, items, rhs in pending:
        acc, need = merge.resolve(items, rhs)
        if not acc:
            if abs(need) > feas_tol:
                return merge, [], "infeasible"
            continue
        general.append((k, acc, need))
    return merge, general, "ok"


def _drop_dependent(general, feas_tol: float):
    """Keep a maximal independent subset of the general rows.

    Dense pivoted QR on the row space (the interior-point path only sees
    problems small enough for this); inconsistency shows up as the
    right-hand side increasing the augmented rank.
    """
    from scipy.linalg import qr

    if not general:
        return general, "ok"
    cols = sorted({v for _, acc, _ in general for v in acc})
    cidx = {v: i for i, v in enumerate(cols)}
    m, n = len(general), len(cols)
    M = np.zeros((m, n + 1))
    for r, (_, acc, need) in enumerate(general):
        for v, c in acc.items():
            M[r, cidx[v]] = c
        M[r, n] = need

    def qr_rank(mat):
        _, R, piv = qr(mat.T, mode="economic", pivoting=True)
        d = np.abs(np.diag(R))
        if d.size == 0 or d[0] == 0.0:
            return 0, piv
        tol = max(mat.shape) * np.finfo(float).eps * d[0]
        return int(np.sum(d > tol)), piv

    rank_a, piv = qr_rank(M[:, :n])
    rank_aug, _ = qr_rank(M)
    if rank_aug > rank_a:
        return [], "infeasible"
    keep_idx = sorted(piv[:rank_a])
    return [general[i] for i in keep_idx], "ok"


def _collect_roots(form: SdpStandardForm, ents: dict[Entry, int],
                   merge: _Merge) -> dict[int, int]:
    roots = set()
    for k in ents.values():
        r, _ = merge.find(k)
        if r not in merge.fixed:
            roots.add(r)
    return {r: i for i, r in enumerate(sorted(roots))}


class _ReducedModel:
    """Model over the surviving roots: A_eq y = rhs, X_blk(y) >= 0."""

    def __init__(self, form: SdpStandardForm, ents, merge, rows):
        self.form = form
        self.ents = ents
        self.merge = merge
        self.rows = rows
        self.ridx = _collect_roots(form, ents, merge)
        n = self.n = len(self.ridx)

        ri, ci, vv, rhs = [], [], [], []
        for r, (_, acc, need) in enumerate(rows):
            rhs.append(need)
            for v, c in acc.items():
                ri.append(r)
                ci.append(self.ridx[v])
                vv.append(c)
        self.A_eq = sp.csr_matrix((vv, (ri, ci)), shape=(len(rhs), n))
        self.rhs = np.array(rhs)

        # per block: sparse map root vector -> svec(X) plus the constant part
        # (svec: upper triangle row-major, off-diagonals scaled by sqrt(2))
        self.svec_maps = []
        self.svec_consts = []
        for blk, s in enumerate(form.block_sizes):
            pi, pj, pv = [], [], []
            consts = np.zeros(s * (s + 1) // 2)
            pos = 0
            for i in range(s):
                for j in range(i, s):
                    w = 1.0 if i == j else _SQRT2
                    r, m = merge.find(ents[(blk, i, j)])
                    if r in merge.fixed:
                        consts[pos] += w * m * merge.fixed[r]
                    else:
                        pi.append(pos)
                        pj.append(self.ridx[r])
                        pv.append(w * m)
                    pos += 1
            self.svec_maps.append(
                sp.csc_matrix((pv, (pi, pj)), shape=(len(consts), n)))
            self.svec_consts.append(consts)

        self.cobj = np.zeros(n)
        self.coff = 0.0
        for e, v in form.objective.items():
            c = _entry_coeff(e, v)
            r, m = merge.find(ents[e])
            if r in merge.fixed:
                self.coff += c * m * merge.fixed[r]
            else:
                self.cobj[self.ridx[r]] += c * m

    def blocks_from(self, yv: np.ndarray) -> list[np.ndarray]:
        blocks = []
        for blk, s in enumerate(self.form.block_sizes):
            vec = self.svec_maps[blk] @ yv + self.svec_consts[blk]
            X = np.zeros((s, s))
            pos = 0
            for i in range(s):
                for j in range(i, s):
                    val = vec[pos] if i == j else vec[pos] / _SQRT2
                    X[i, j] = val
                    X[j, i] = val
                    pos += 1
            blocks.append(X)
        return blocks


def solve(form: SdpStandardForm, config: SolverConfig = SolverConfig(),
          warm: Optional[dict] = None) -> SdpSolution:
    ents = _entry_index(form)
    if not ents:
        return SdpSolution("optimal", form.objective_offset, [], np.zeros(0),
                           form.objective_offset, 0.0, 0.0, 0.0, "trivial")

    primary = config.solver
    if primary == "auto":
        svec_total = sum(s * (s + 1) // 2 for s in form.block_sizes)
        primary = "SCS" if svec_total > config.ipm_svec_limit else "CLARABEL"

    merge, general, mstatus = _merge_presolve(form, ents, config.feas_tol)
    if mstatus == "infeasible":
        return SdpSolution("infeasible", None, None, None, None, None,
                           None, None, "presolve")

    attempts = [primary] + (
        [config.fallback] if config.fallback and config.fallback != primary
        else []
    )
    last_sol: Optional[SdpSolution] = None
    for backend in attempts:
        rows = general
        if backend == "CLARABEL":
            rows, dstatus = _drop_dependent(general, config.feas_tol)
            if dstatus == "infeasible":
                return SdpSolution("infeasible", None, None, None, None,
                                   None, None, None, "presolve")
        model = _ReducedModel(form, ents, merge, rows)
        if backend == "SCS":
            sol = _solve_scs(model, config, warm)
        else:
            sol = _solve_cvxpy(model, backend, config)
        if sol is None:
            continue
        if sol.status in ("optimal", "infeasible"):
            return sol
        last_sol = sol
    return last_sol or SdpSolution("numerical_failure", None, None, None,
                                   None, None, None, None, attempts[-1])


def _solve_cvxpy(model: _ReducedModel, backend: str,
                 config: SolverConfig) -> Optional[SdpSolution]:
    import cvxpy as cp

    form = model.form
    y = cp.Variable(model.n)
    cons = []
    if len(model.rhs):
        cons.append(model.A_eq @ y == model.rhs)
    psd_cons = []
    for blk, s in enumerate(form.block_sizes):
        # rebuild the dense symmetric matrix expression from the svec map
        vec = model.svec_maps[blk] @ y + model.svec_consts[blk]
        pos = 0
        idx = np.zeros((s, s), dtype=int)
        scale = np.zeros((s, s))
        for i in range(s):
            for j in range(i, s):
                idx[i, j] = idx[j, i] = pos
                scale[i, j] = scale[j, i] = 1.0 if i == j else 1.0 / _SQRT2
                pos += 1
        gather = sp.csr_matrix(
            (scale.ravel(), (np.arange(s * s), idx.ravel())),
            shape=(s * s, pos))
        con = cp.reshape(gather @ vec, (s, s), order="C") >> 0
        psd_cons.append(con)
        cons.append(con)
    objective = (cp.Maximize(model.cobj @ y) if form.sense == "max"
                 else cp.Minimize(model.cobj @ y))
    problem = cp.Problem(objective, cons)
    try:
        problem.solve(solver=backend, verbose=config.verbose)
    except cp.error.SolverError:
        return None
    status = problem.status
    if status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
        return SdpSolution("infeasible", None, None, None, None, None,
                           None, None, backend)
    if status in (cp.UNBOUNDED, cp.UNBOUNDED_INACCURATE):
        return SdpSolution("numerical_failure", None, None, None, None,
                           None, None, None, backend)
    if y.value is None:
        return None
    z_psd = [np.asarray(c.dual_value) for c in psd_cons
             if c.dual_value is not None]
    raw = "optimal" if status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE) else status
    return _finalize(model, np.asarray(y.value).ravel(), z_psd, raw, backend,
                     config, None)


def _solve_scs(model: _ReducedModel, config: SolverConfig,
               warm: Optional[dict]) -> Optional[SdpSolution]:
    import scs

    form = model.form
    n = model.n
    # SCS: min c'u s.t. Au + s = b, s in (zero cone, PSD cones).
    # PSD slack: s = svec(X(u)) = svec_consts + svec_map u  =>  A = -svec_map.
    blocks_a = [model.A_eq] + [-M for M in model.svec_maps]
    b = np.concatenate([model.rhs] + model.svec_consts)
    A = sp.vstack(blocks_a, format="csc")
    sgn = -1.0 if form.sense == "max" else 1.0
    c = sgn * model.cobj
    cone = {"z": len(model.rhs), "s": list(form.block_sizes)}
    work = scs.SCS(
        {"A": A, "b": b, "c": c},
        cone,
        verbose=config.verbose,
        max_iters=config.max_iter,
        eps_abs=config.gap_tol / 10,
        eps_rel=config.gap_tol / 10,
        **(config.scs_options or {}),
    )
    if warm and len(warm.get("x", ())) == n:
        out = work.solve(warm_start=True, x=warm["x"], y=warm["y"], s=warm["s"])
    else:
        out = work.solve()
    status = out["info"]["status"].lower()
    if "infeasible" in status:
        return SdpSolution("infeasible", None, None, None, None, None,
                           None, None, "SCS")
    if "unbounded" in status:
        return SdpSolution("numerical_failure", None, None, None, None,
                           None, None, None, "SCS")
    if out["x"] is None or np.any(np.isnan(out["x"])):
        return None
    yv = np.asarray(out["x"]).ravel()
    # dual vector: zero-cone part then svec(Z) per PSD block
    dual = np.asarray(out["y"]).ravel()
    z_psd = []
    off = len(model.rhs)
    for s_ in form.block_sizes:
        ln = s_ * (s_ + 1) // 2
        vec = dual[off:off + ln]
        off += ln
        Z = np.zeros((s_, s_))
        pos = 0
        for i in range(s_):
            for j in range(i, s_):
                v = vec[pos] if i == j else vec[pos] / _SQRT2
                Z[i, j] = v
                Z[j, i] = v
                pos += 1
        z_psd.append(Z)
    raw = "optimal" if "solved" in status else status
    if "solved" in status and "inaccurate" in status:
        raw = "inaccurate"
    warm_out = {"x": out["x"], "y": out["y"], "s": out["s"]}
    return _finalize(model, yv, z_psd, raw, "SCS", config, warm_out)


def _finalize(model: _ReducedModel, yv: np.ndarray, z_psd, raw_status: str,
              backend: str, config: SolverConfig,
              warm_out: Optional[dict]) -> SdpSolution:
    form = model.form
    blocks = model.blocks_from(yv)
    value = float(model.cobj @ yv) + model.coff + form.objective_offset
    eq_res = _equality_residual(form, blocks)
    meig = _min_eig(blocks)

    mult = None
    dual_value = None
    gap = None
    if len(z_psd) == len(form.block_sizes):
        mult = _recover_multipliers(form, z_psd)
        b = np.array([r for _, r in form.constraints])
        dual_value = float(b @ mult) + form.objective_offset
        gap = (dual_value - value) if form.sense == "max" else (value - dual_value)

    tol = max(config.feas_tol, 100 * config.gap_tol)
    ok_checks = eq_res <= tol and meig >= -tol
    if raw_status == "optimal" and ok_checks:
        final = "optimal"
    elif raw_status == "inaccurate":
        final = "optimal" if ok_checks else "max_iter"
    else:
        final = "numerical_failure" if not ok_checks else "optimal"
    return SdpSolution(final, value, blocks, mult, dual_value, gap, eq_res,
                       meig, backend, warm_out)


def _equality_residual(form: SdpStandardForm, blocks: list[np.ndarray]) -> float:
    worst = 0.0
    for row, rhs in form.constraints:
        val = 0.0
        for (blk, i, j), c in row.items():
            val += c * blocks[blk][i, j] * (1.0 if i == j else 2.0)
        worst = max(worst, abs(val - rhs))
    return worst


def _svec_index(form: SdpStandardForm):
    """Entry -> position in the scaled vectorization (tr(MN) = svec dot)."""
    idx = {}
    pos = 0
    for blk, s in enumerate(form.block_sizes):
        for i in range(s):
            for j in range(i, s):
                idx[(blk, i, j)] = pos
                pos += 1
    return idx, pos


def _svec_of_rows(form: SdpStandardForm):
    idx, dim = _svec_index(form)
    ri, ci, vv = [], [], []
    for k, (row, _) in enumerate(form.constraints):
        for e, c in row.items():
            w = c if e[1] == e[2] else _SQRT2 * c
            ri.append(idx[e])
            ci.append(k)
            vv.append(w)
    return sp.csr_matrix((vv, (ri, ci)),
                         shape=(dim, len(form.constraints))), idx, dim


def _svec_matrix(form: SdpStandardForm, blocks: list[np.ndarray],
                 idx, dim) -> np.ndarray:
    out = np.zeros(dim)
    for blk, s in enumerate(form.block_sizes):
        M = blocks[blk]
        for i in range(s):
            for j in range(i, s):
                v = M[i, j] if i == j else _SQRT2 * 0.5 * (M[i, j] + M[j, i])
                out[idx[(blk, i, j)]] = v
    return out


def _recover_multipliers(form: SdpStandardForm, z_psd: list[np.ndarray]) -> np.ndarray:
    """Least-squares multipliers from stationarity sum_k y_k A_k = C + Z.

    The PSD-cone dual Z comes from the backend; its sign convention is
    resolved by taking whichever orientation leaves the smaller residual
    slack deficit.  Any output is safe: verified_dual_bound penalizes
    inexactness through the eigenvalue correction.
    """
    from scipy.sparse.linalg import lsmr

    S, idx, dim = _svec_of_rows(form)
    cvec = np.zeros(dim)
    sgn = 1.0 if form.sense == "max" else -1.0
    for e, c in form.objective.items():
        cvec[idx[e]] = sgn * (c if e[1] == e[2] else _SQRT2 * c)
    zvec = _svec_matrix(form, [np.real((z + z.T) / 2) for z in z_psd], idx, dim)

    best_y = None
    best_lam = -np.inf
    for zs in (1.0, -1.0):
        rhs = cvec + zs * zvec
        y = lsmr(S, rhs, atol=1e-12, btol=1e-12, maxiter=2000)[0]
        lam = _min_eig(_dual_slack(form, y))
        if lam > best_lam:
            best_lam = lam
            best_y = y
    return best_y


def _dual_slack(form: SdpStandardForm, y: np.ndarray) -> list[np.ndarray]:
    """Z = sum_k y_k A_k - C as dense blocks (for 'min': C - sum y A)."""
    blocks = [np.zeros((s, s)) for s in form.block_sizes]

    def put(e: Entry, v: float):
        blk, i, j = e
        blocks[blk][i, j] += v
        if i != j:
            blocks[blk][j, i] += v

    for yk, (row, _) in zip(y, form.constraints):
        if yk == 0.0:
            continue
        for e, c in row.items():
            put(e, yk * c)
    sgn = 1.0 if form.sense == "max" else -1.0
    for e, c in form.objective.items():
        put(e, -sgn * c)
    if sgn < 0:
        blocks = [-m for m in blocks]
    return blocks


def warm_from_blocks(form: SdpStandardForm, blocks,
                     feas_tol: float = 1e-7) -> Optional[dict]:
    """First-order warm start (x, y, s) from explicit feasible blocks.

    The blocks must satisfy the problem's equalities; the dual part of the
    start is cold (zero).  Returns None if the presolve finds the problem
    infeasible, which a valid primal point rules out anyway.
    """
    ents = _entry_index(form)
    merge, general, mstatus = _merge_presolve(form, ents, feas_tol)
    if mstatus == "infeasible":
        return None
    model = _ReducedModel(form, ents, merge, general)
    entry_of = {k: e for e, k in ents.items()}
    x = np.zeros(model.n)
    for r, col in model.ridx.items():
        blk, i, j = entry_of[r]
        x[col] = blocks[blk][i, j]
    s_zero = model.rhs - model.A_eq @ x
    s_psd = [model.svec_maps[b] @ x + model.svec_consts[b]
             for b in range(len(form.block_sizes))]
    s = np.concatenate([s_zero] + s_psd)
    return {"x": x, "y": np.zeros_like(s), "s": s}


def verified_dual_bound(form: SdpStandardForm, sol: SdpSolution,
                        trace_bound: Optional[float] = None) -> float:
    """Bound on the optimum valid for ANY multiplier vector y.

    For maximization, with Z = sum y_k A_k - C and any feasible X with
    tr(X) <= tau:  tr(C X) <= b.y - min(0, lambda_min(Z)) * tau.  The
    default tau sums the block sizes (moment-matrix diagonals lie in
    [0, 1]).  Mirrored for minimization.
    """
    if sol.y is None:
        raise ValueError("solution carries no multipliers")
    tau = trace_bound if trace_bound is not None else float(sum(form.block_sizes))
    lam = min(0.0, _min_eig(_dual_slack(form, sol.y)))
    b = np.array([rhs for _, rhs in form.constraints])
    if form.sense == "max":
        bound = float(b @ sol.y) - lam * tau
    else:
        bound = float(b @ sol.y) + lam * tau
    return bound + form.objective_offset


# --- SDPA sparse format -------------------------------------------------------

_MAX_SENSE_MARK = "maximization problem: objective negated on export"


def export_sdpa(form: SdpStandardForm, path: str) -> None:
    """Write the problem in SDPA sparse (.dat-s) format.

    Entry lines are `k blk i j v` with 1-based indices and 17 significant
    digits; the objective carries k = 0 and is negated for maximization,
    as recorded in the leading comment.
    """
    lines = [f'"{_MAX_SENSE_MARK}' if form.sense == "max"
             else '"minimization problem']
    lines.append(f"{len(form.constraints)} = m")
    lines.append(f"{len(form.block_sizes)} = nblocks")
    lines.append(" ".join(str(s) for s in form.block_sizes))
    lines.append(" ".join(f"{rhs:.17g}" for _, rhs in form.constraints))
    sgn = -1.0 if form.sense == "max" else 1.0
    for e, v in sorted(form.objective.items()):
        blk, i, j = e
        lines.append(f"0 {blk + 1} {i + 1} {j + 1} {sgn * v:.17g}")
    for k, (row, _) in enumerate(form.constraints, start=1):
        for e, v in sorted(row.items()):
            blk, i, j = e
            lines.append(f"{k} {blk + 1} {i + 1} {j + 1} {v:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def import_sdpa(path: str) -> SdpStandardForm:
    maximize = False
    with open(path) as fh:
        raw = fh.readlines()
    body: list[str] = []
    for line in raw:
        stripped = line.strip()
        if stripped.startswith(('"', "*")):
            if _MAX_SENSE_MARK in stripped:
                maximize = True
            continue
        if stripped:
            body.append(stripped)
    m = int(body[0].split()[0])
    nblocks = int(body[1].split()[0])
    sizes = [abs(int(tok)) for tok in body[2].replace(",", " ").split()]
    if len(sizes) != nblocks:
        raise ValueError("block size line does not match block count")
    rhs = [float(tok) for tok in body[3].replace(",", " ").split()]
    if len(rhs) != m:
        raise ValueError("rhs line does not match constraint count")
    objective: dict[Entry, float] = {}
    rows: list[dict[Entry, float]] = [dict() for _ in range(m)]
    sgn = -1.0 if maximize else 1.0
    for line in body[4:]:
        k, blk, i, j, v = line.replace(",", " ").split()
        k, blk, i, j = int(k), int(blk) - 1, int(i) - 1, int(j) - 1
        if i > j:
            i, j = j, i
        entry = (blk, i, j)
        if k == 0:
            objective[entry] = objective.get(entry, 0.0) + sgn * float(v)
        else:
            rows[k - 1][entry] = rows[k - 1].get(entry, 0.0) + float(v)
    return SdpStandardForm(
        block_sizes=sizes,
        objective=objective,
        constraints=[(row, r) for row, r in zip(rows, rhs)],
        sense="max" if maximize else "min",
    )
