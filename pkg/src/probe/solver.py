"""Reachability and expected-reward solvers over chain views.

Every query is the least nonnegative fixpoint of one linear system

    x_s = c_s + sum_t W(s,t) * x_t

over the non-absorbing states, where absorbing states carry fixed values
folded into c.  Mass trapped in weight-1 self-loops (expandable states,
abort) has no escape and no reward, so its value is 0 — the least fixpoint
handles it without special casing.

Two solution paths, chosen by model size:

* exact — restrict to states with a path to positive c, decompose into
  strongly connected components, and solve each component densely over
  rationals in reverse topological order.
* float — resolve acyclic levels by direct back-substitution (one pass,
  vectorized); any cyclic remainder is iterated with sparse Jacobi sweeps
  starting from 0, which converge to the least fixpoint from below.

Models with nondeterminism go through plain min/max value iteration over
the actions instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import sparse

from .model import ChainView, PartialModel

ZERO = Fraction(0)
ONE = Fraction(1)


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverLimits:
    epsilon: float = 1e-10
    max_iterations: int = 10_000_000
    exact_threshold: int = 50_000
    # dense elimination is quadratic in component size; larger components
    # force the float path
    max_component: int = 4_000


DEFAULT_LIMITS = SolverLimits()


def _as_chain(view) -> ChainView:
    if isinstance(view, ChainView):
        return view
    if hasattr(view, "induced_chain"):
        return view.induced_chain({})
    raise TypeError(f"expected a model or chain view, got {type(view).__name__}")


def _is_nondet_model(view) -> bool:
    return not isinstance(view, ChainView) and bool(view.nondet_states())


# -- public queries -------------------------------------------------------------


def reach_probability(view, targets, mode: str = "min", limits: SolverLimits = DEFAULT_LIMITS):
    """Probability of reaching any target state from the initial state."""
    targets = set(targets)
    if _is_nondet_model(view):
        absorbing = {t: ONE for t in targets}
        absorbing.setdefault(view.sink_id, ZERO)
        return _mdp_value_iteration(view, absorbing, {}, mode, limits)[0]
    chain = _as_chain(view)
    absorbing = {t: ONE for t in targets}
    absorbing.setdefault(chain.sink_id, ZERO)
    return solve_system(chain, absorbing, {}, limits)


def expected_reward_to_sink(view, mode: str = "min", limits: SolverLimits = DEFAULT_LIMITS):
    """Expected reward accumulated over paths that reach the end state.

    Rewards sit on terminated states only; paths that never reach the end
    state (trapped mass) contribute 0.
    """
    if _is_nondet_model(view):
        return _mdp_value_iteration(
            view, {view.sink_id: ZERO}, view.rewards, mode, limits
        )[0]
    chain = _as_chain(view)
    return solve_system(chain, {chain.sink_id: ZERO}, chain.rewards, limits)


def solve_system(chain: ChainView, absorbing, rewards, limits: SolverLimits = DEFAULT_LIMITS):
    """Value of the initial state; exact below the size threshold."""
    if chain.state_count <= limits.exact_threshold:
        try:
            return solve_exact(chain, absorbing, rewards, limits)[0]
        except SolverError:
            pass  # oversized component: fall through to the float path
    return solve_float(chain, absorbing, rewards, limits)[0]


# -- exact path -------------------------------------------------------------------


def solve_exact(chain: ChainView, absorbing, rewards, limits: SolverLimits = DEFAULT_LIMITS):
    """All state values as exact rationals (dict, 0 omitted for clarity of
    access via .get)."""
    n = chain.state_count
    c: dict[int, Fraction] = {}
    edges: dict[int, list] = {}
    for sid, dist in chain.distributions():
        if sid in absorbing:
            continue
        acc = rewards.get(sid, ZERO)
        row = []
        for w, t in dist:
            if t in absorbing:
                acc += w * absorbing[t]
            elif t == sid and w == 1:
                row = []  # weight-1 self-loop: trapped, value 0
                acc = ZERO
                break
            else:
                row.append((w, t))
        if acc:
            c[sid] = acc
        if row:
            edges[sid] = row

    # restrict to states with a path to positive immediate contribution
    preds: dict[int, list] = {}
    for sid, row in edges.items():
        for w, t in row:
            preds.setdefault(t, []).append((sid, w))
    support: set[int] = set(c)
    queue = list(c)
    while queue:
        t = queue.pop()
        for p, _ in preds.get(t, ()):
            if p not in support:
                support.add(p)
                queue.append(p)

    values: dict[int, Fraction] = {a: v for a, v in absorbing.items() if v}
    for comp in _tarjan(support, edges):
        if len(comp) > limits.max_component:
            raise SolverError(
                f"strongly connected component of {len(comp)} states exceeds "
                f"the dense elimination limit {limits.max_component}"
            )
        _solve_component(comp, edges, c, values)
    out = {sid: values.get(sid, ZERO) for sid in range(n)}
    return out


def _tarjan(nodes, edges):
    """Strongly connected components of the subgraph on ``nodes``, emitted
    with every component's successors before it (reverse topological)."""
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        work = [(root, iter(edges.get(root, ())))]
        while work:
            node, it = work[-1]
            advanced = False
            for _, child in it:
                if child not in nodes:
                    continue
                if child not in index:
                    index[child] = low[child] = counter
                    counter += 1
                    stack.append(child)
                    on_stack.add(child)
                    work.append((child, iter(edges.get(child, ()))))
                    advanced = True
                    break
                if child in on_stack and index[child] < low[node]:
                    low[node] = index[child]
            if advanced:
                continue
            work.pop()
            if work and low[node] < low[work[-1][0]]:
                low[work[-1][0]] = low[node]
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                yield comp


def _solve_component(comp, edges, c, values):
    if len(comp) == 1:
        sid = comp[0]
        acc = c.get(sid, ZERO)
        self_w = ZERO
        for w, t in edges.get(sid, ()):
            if t == sid:
                self_w += w
            else:
                acc += w * values.get(t, ZERO)
        values[sid] = acc / (1 - self_w) if self_w else acc
        return
    pos = {sid: i for i, sid in enumerate(comp)}
    m = len(comp)
    a = [[ZERO] * m for _ in range(m)]
    b = [ZERO] * m
    for sid in comp:
        i = pos[sid]
        a[i][i] = ONE
        acc = c.get(sid, ZERO)
        for w, t in edges.get(sid, ()):
            j = pos.get(t)
            if j is None:
                acc += w * values.get(t, ZERO)
            else:
                a[i][j] -= w
        b[i] = acc
    x = _gauss(a, b)
    for sid, v in zip(comp, x):
        values[sid] = v


def _gauss(a, b):
    """In-place Gaussian elimination with partial pivoting, exact."""
    m = len(b)
    for col in range(m):
        piv = max(range(col, m), key=lambda r: abs(a[r][col]))
        if a[piv][col] == 0:
            raise SolverError("singular component system")
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            b[col], b[piv] = b[piv], b[col]
        inv = 1 / a[col][col]
        arow = a[col]
        for r in range(col + 1, m):
            f = a[r][col]
            if f == 0:
                continue
            f *= inv
            brow = a[r]
            for k in range(col, m):
                if arow[k]:
                    brow[k] -= f * arow[k]
            b[r] -= f * b[col]
    x = [ZERO] * m
    for i in range(m - 1, -1, -1):
        acc = b[i]
        row = a[i]
        for k in range(i + 1, m):
            if row[k]:
                acc -= row[k] * x[k]
        x[i] = acc / row[i]
    return x


# -- float path -----------------------------------------------------------------


def solve_float(chain: ChainView, absorbing, rewards, limits: SolverLimits = DEFAULT_LIMITS):
    """All state values as a float vector, converged from below."""
    n = chain.state_count
    c = np.zeros(n)
    diag = np.zeros(n)
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    fixed = np.zeros(n, dtype=bool)
    for a, v in absorbing.items():
        fixed[a] = True
        c[a] = float(v)
    for sid, r in rewards.items():
        if not fixed[sid]:
            c[sid] = float(r)
    for sid, dist in chain.distributions():
        if fixed[sid]:
            continue
        for w, t in dist:
            wf = float(w)
            if t == sid:
                if wf >= 1.0:
                    # trapped: no escape, value 0 regardless of c (rewards
                    # never sit on self-looping states)
                    c[sid] = 0.0
                else:
                    diag[sid] += wf
            elif fixed[t]:
                c[sid] += wf * float(absorbing[t])
            else:
                rows.append(sid)
                cols.append(t)
                vals.append(wf)

    w_mat = sparse.csr_matrix(
        (np.asarray(vals), (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))),
        shape=(n, n),
    )
    del rows, cols, vals

    # back-substitute every state whose successors all resolve (Kahn order);
    # plain Python lists beat per-element numpy indexing on this pass
    wt = w_mat.T.tocsr()
    t_indptr = wt.indptr.tolist()
    t_indices = wt.indices.tolist()
    t_data = wt.data.tolist()
    out_count = np.diff(w_mat.indptr).tolist()
    acc = c.tolist()
    scale = (1.0 / (1.0 - diag)).tolist()
    xs = [0.0] * n
    resolved = bytearray(n)
    stack = []
    for sid, is_fixed in enumerate(fixed.tolist()):
        if is_fixed:
            xs[sid] = acc[sid]
            resolved[sid] = 1
        elif out_count[sid] == 0:
            stack.append(sid)
    while stack:
        t = stack.pop()
        if resolved[t]:
            continue
        resolved[t] = 1
        xt = acc[t] * scale[t]
        xs[t] = xt
        if xt:
            for k in range(t_indptr[t], t_indptr[t + 1]):
                p = t_indices[k]
                acc[p] += t_data[k] * xt
                out_count[p] -= 1
                if out_count[p] == 0:
                    stack.append(p)
        else:
            for k in range(t_indptr[t], t_indptr[t + 1]):
                p = t_indices[k]
                out_count[p] -= 1
                if out_count[p] == 0:
                    stack.append(p)

    x = np.asarray(xs)
    todo = np.flatnonzero(np.frombuffer(resolved, dtype=np.uint8) == 0)
    if not todo.size:
        return x

    # cyclic remainder: Jacobi sweeps on the unresolved subsystem, from 0
    sub = w_mat[todo][:, todo].tocsr()
    # contributions from resolved neighbors are constants now
    keep = np.array(x)
    keep[todo] = 0.0
    base = c[todo] + (w_mat[todo] @ keep)
    sub_scale = np.asarray(scale)[todo]
    y = np.zeros(todo.size)
    eps = limits.epsilon
    for _ in range(limits.max_iterations):
        y_next = (base + sub @ y) * sub_scale
        delta = float(np.max(np.abs(y_next - y)))
        y = y_next
        if delta < eps:
            break
    else:
        raise SolverError("value iteration did not converge within the cap")
    x[todo] = y
    return x


def jacobi_history(chain: ChainView, absorbing, rewards, sweeps: int):
    """First ``sweeps`` Jacobi iterates from 0 (small models; soundness tests)."""
    n = chain.state_count
    c = np.zeros(n)
    w = np.zeros((n, n))
    for a, v in absorbing.items():
        c[a] = float(v)
    for sid, dist in chain.distributions():
        if sid in absorbing:
            continue
        c[sid] = float(rewards.get(sid, 0))
        for wt, t in dist:
            if t == sid and float(wt) >= 1.0:
                c[sid] = 0.0
            elif t in absorbing:
                c[sid] += float(wt) * float(absorbing[t])
            else:
                w[sid, t] += float(wt)
    x = np.zeros(n)
    history = []
    for _ in range(sweeps):
        x = c + w @ x
        for a, v in absorbing.items():
            x[a] = float(v)
        history.append(x.copy())
    return history


# -- nondeterministic models -------------------------------------------------------


def _mdp_value_iteration(model: PartialModel, absorbing, rewards, mode: str, limits: SolverLimits):
    """Min/max value iteration over actions, from 0 (converges from below)."""
    if mode not in ("min", "max"):
        raise ValueError(f"mode must be 'min' or 'max', got {mode!r}")
    pick = min if mode == "min" else max
    n = model.state_count
    x = [0.0] * n
    fixed = {a: float(v) for a, v in absorbing.items()}
    for a, v in fixed.items():
        x[a] = v
    prepared: list = []
    for sid in range(n):
        if sid in fixed:
            prepared.append(None)
            continue
        options = []
        for _, dist in model.successors(sid):
            base = float(rewards.get(sid, 0))
            edges = []
            trapped = False
            for w, t in dist:
                wf = float(w)
                if t == sid and wf >= 1.0:
                    trapped = True
                    break
                edges.append((wf, t))
            options.append((0.0, ()) if trapped else (base, tuple(edges)))
        prepared.append(options)
    eps = limits.epsilon
    for _ in range(limits.max_iterations):
        delta = 0.0
        nxt = list(x)
        for sid, options in enumerate(prepared):
            if options is None:
                continue
            val = pick(
                base + sum(w * x[t] for w, t in edges) for base, edges in options
            )
            d = abs(val - x[sid])
            if d > delta:
                delta = d
            nxt[sid] = val
        x = nxt
        if delta < eps:
            return x
    raise SolverError("value iteration did not converge within the cap")
