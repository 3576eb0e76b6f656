"""Hot loops, each with a numba body and a numpy / plain-Python fallback.

Public wrappers dispatch on :func:`perco._accel.use_numba`. Where a kernel
vectorises naturally (connected components, the subsampling sums) the
fallback is written in numpy; graph searches fall back to the same loop body
run as ordinary Python via ``.py_func``. Both paths return identical results,
which ``tests/test_backends.py`` checks.
"""

import numpy as np

from . import _accel
from ._accel import njit

# ---------------------------------------------------------------------------
# union-find
# ---------------------------------------------------------------------------


@njit
def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@njit
def _components_nb(n, eu, ev):
    parent = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    for i in range(eu.shape[0]):
        a = _find(parent, eu[i])
        b = _find(parent, ev[i])
        if a == b:
            continue
        if size[a] < size[b]:
            a, b = b, a
        parent[b] = a
        size[a] += size[b]
    # relabel by the smallest member
    label = np.empty(n, dtype=np.int64)
    low = np.full(n, n, dtype=np.int64)
    for v in range(n):
        r = _find(parent, v)
        if v < low[r]:
            low[r] = v
    for v in range(n):
        label[v] = low[_find(parent, v)]
    return label


def _components_numpy(n, eu, ev):
    label = np.arange(n, dtype=np.int64)
    if len(eu) == 0:
        return label
    while True:
        m = np.minimum(label[eu], label[ev])
        np.minimum.at(label, eu, m)
        np.minimum.at(label, ev, m)
        while True:
            jumped = label[label]
            if np.array_equal(jumped, label):
                break
            label = jumped
        if np.array_equal(label[eu], label[ev]):
            return label


def components(n: int, eu: np.ndarray, ev: np.ndarray) -> np.ndarray:
    """Connected-component label per vertex: the smallest vertex id in its component."""
    eu = np.ascontiguousarray(eu, dtype=np.int64)
    ev = np.ascontiguousarray(ev, dtype=np.int64)
    if _accel.use_numba():
        return _components_nb(n, eu, ev)
    return _components_numpy(n, eu, ev)


# ---------------------------------------------------------------------------
# p-sweep (edges added in label order, snapshots at grid points)
# ---------------------------------------------------------------------------

SWEEP_FIELDS = ("n_clusters", "n_heavy_proxy", "max_weight", "max_size", "apex_reach", "n_rim_heavy")


@njit
def _sweep_nb(n, eu, ev, snaps, depth, wt, heavy0, rim0):
    parent = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    weight = wt.copy()
    heavy = heavy0.copy()
    maxd = depth.copy()
    rimc = rim0.astype(np.int64)
    ncl = n
    nheavy = 0
    nrimheavy = 0
    maxw = 0
    for v in range(n):
        if heavy[v]:
            nheavy += 1
            nrimheavy += rimc[v]
        if weight[v] > maxw:
            maxw = weight[v]
    maxs = 1 if n > 0 else 0
    out = np.empty((snaps.shape[0], 6), dtype=np.int64)
    e = 0
    for s in range(snaps.shape[0]):
        while e < snaps[s]:
            a = _find(parent, eu[e])
            b = _find(parent, ev[e])
            e += 1
            if a == b:
                continue
            if size[a] < size[b]:
                a, b = b, a
            parent[b] = a
            ncl -= 1
            if heavy[a] and heavy[b]:
                nheavy -= 1
            elif heavy[a]:
                nrimheavy += rimc[b]
            elif heavy[b]:
                nrimheavy += rimc[a]
            heavy[a] = heavy[a] or heavy[b]
            size[a] += size[b]
            weight[a] += weight[b]
            rimc[a] += rimc[b]
            if maxd[b] > maxd[a]:
                maxd[a] = maxd[b]
            if weight[a] > maxw:
                maxw = weight[a]
            if size[a] > maxs:
                maxs = size[a]
        out[s, 0] = ncl
        out[s, 1] = nheavy
        out[s, 2] = maxw
        out[s, 3] = maxs
        out[s, 4] = maxd[_find(parent, 0)]
        out[s, 5] = nrimheavy
    return out


def _sweep_numpy(n, eu, ev, snaps, depth, wt, heavy0, rim0):
    out = np.empty((len(snaps), 6), dtype=np.int64)
    for s, c in enumerate(snaps):
        lab = _components_numpy(n, eu[:c], ev[:c])
        roots, inv = np.unique(lab, return_inverse=True)
        heavy = np.bincount(inv, weights=heavy0, minlength=len(roots)) > 0
        weight = np.bincount(inv, weights=wt, minlength=len(roots))
        size = np.bincount(inv, minlength=len(roots))
        rimc = np.bincount(inv, weights=rim0, minlength=len(roots))
        apex_members = lab == lab[0]
        out[s] = (
            len(roots),
            heavy.sum(),
            int(weight.max()),
            size.max(),
            depth[apex_members].max(),
            int(rimc[heavy].sum()),
        )
    return out


def sweep(n, eu, ev, snaps, depth, wt, heavy, rim) -> np.ndarray:
    """Union edges in the given order, recording statistics after ``snaps[s]`` edges.

    Returns an int64 array with one row per snapshot and columns
    :data:`SWEEP_FIELDS`. ``apex_reach`` is the deepest level of the cluster of
    vertex 0; ``n_rim_heavy`` counts rim vertices lying in heavy clusters.
    """
    args = (
        n,
        np.ascontiguousarray(eu, dtype=np.int64),
        np.ascontiguousarray(ev, dtype=np.int64),
        np.ascontiguousarray(snaps, dtype=np.int64),
        np.ascontiguousarray(depth, dtype=np.int64),
        np.ascontiguousarray(wt, dtype=np.int64),
        np.ascontiguousarray(heavy, dtype=np.bool_),
        np.ascontiguousarray(rim, dtype=np.bool_),
    )
    if _accel.use_numba():
        return _sweep_nb(*args)
    return _sweep_numpy(*args)


# ---------------------------------------------------------------------------
# shortest paths
# ---------------------------------------------------------------------------


@njit
def _bfs(indptr, nbr, src, maxdist):
    n = indptr.shape[0] - 1
    dist = np.full(n, -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    dist[src] = 0
    queue[0] = src
    head, tail = 0, 1
    while head < tail:
        v = queue[head]
        head += 1
        if maxdist >= 0 and dist[v] >= maxdist:
            continue
        for j in range(indptr[v], indptr[v + 1]):
            u = nbr[j]
            if dist[u] < 0:
                dist[u] = dist[v] + 1
                queue[tail] = u
                tail += 1
    return dist


def bfs(indptr, nbr, src: int, maxdist: int = -1) -> np.ndarray:
    """Hop distances from ``src`` (``-1`` when unreached or beyond ``maxdist``)."""
    return _accel.pick(_bfs)(indptr, nbr, src, maxdist)


@njit
def _dial(indptr, nbr, eid, labels, src, max_label):
    # bucket queue over integer distances; labels are >= 0
    n = indptr.shape[0] - 1
    inf = np.iinfo(np.int64).max
    dist = np.full(n, inf, dtype=np.int64)
    done = np.zeros(n, dtype=np.bool_)
    nb = max_label + 1
    # circular buckets stored as linked lists
    head = np.full(nb, -1, dtype=np.int64)
    cap = 4 * (n + eid.shape[0]) + 4
    node = np.empty(cap, dtype=np.int64)
    nxt = np.empty(cap, dtype=np.int64)
    used = 0
    dist[src] = 0
    node[0] = src
    nxt[0] = -1
    head[0] = 0
    used = 1
    pending = 1
    d = 0
    while pending > 0:
        b = d % nb
        while head[b] >= 0:
            item = head[b]
            head[b] = nxt[item]
            pending -= 1
            v = node[item]
            if done[v] or dist[v] != d:
                continue
            done[v] = True
            for j in range(indptr[v], indptr[v + 1]):
                u = nbr[j]
                nd = d + labels[eid[j]]
                if nd < dist[u]:
                    dist[u] = nd
                    if used == cap:
                        # compact: rebuild free list is overkill; grow instead
                        node2 = np.empty(cap * 2, dtype=np.int64)
                        nxt2 = np.empty(cap * 2, dtype=np.int64)
                        node2[:cap] = node
                        nxt2[:cap] = nxt
                        node, nxt = node2, nxt2
                        cap *= 2
                    bb = nd % nb
                    node[used] = u
                    nxt[used] = head[bb]
                    head[bb] = used
                    used += 1
                    pending += 1
        d += 1
    for v in range(n):
        if dist[v] == inf:
            dist[v] = -1
    return dist


def labeled_distances(indptr, nbr, eid, labels, src: int) -> np.ndarray:
    """Shortest-path distances with nonnegative integer edge labels (Dial's buckets)."""
    labels = np.ascontiguousarray(labels, dtype=np.int64)
    if len(labels) and labels.min() < 0:
        raise ValueError("labels must be nonnegative")
    max_label = int(labels.max()) if len(labels) else 0
    return _accel.pick(_dial)(indptr, nbr, eid, labels, src, max_label)


# ---------------------------------------------------------------------------
# lexicographically minimal geodesics inside a subgraph
# ---------------------------------------------------------------------------


@njit
def _geodesics(indptr, nbr, xs, ys):
    # one BFS from each y (early exit once x's layer is settled), then a greedy
    # descent from x choosing the smallest admissible vertex
    n = indptr.shape[0] - 1
    m = xs.shape[0]
    dist = np.full(n, -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    lengths = np.zeros(m, dtype=np.int64)
    cap = 4 * m + 16
    flat = np.empty(cap, dtype=np.int64)
    used = 0
    for p in range(m):
        x, y = xs[p], ys[p]
        dist[y] = 0
        queue[0] = y
        head, tail = 0, 1
        stop = -1
        while head < tail:
            v = queue[head]
            head += 1
            if stop >= 0 and dist[v] >= stop:
                break
            for j in range(indptr[v], indptr[v + 1]):
                u = nbr[j]
                if dist[u] < 0:
                    dist[u] = dist[v] + 1
                    queue[tail] = u
                    tail += 1
                    if u == x:
                        stop = dist[u]
        if dist[x] < 0:
            lengths[p] = -1
        else:
            L = dist[x] + 1
            if used + L > cap:
                while used + L > cap:
                    cap *= 2
                grown = np.empty(cap, dtype=np.int64)
                grown[:used] = flat[:used]
                flat = grown
            cur = x
            flat[used] = cur
            for k in range(1, L):
                best = -1
                for j in range(indptr[cur], indptr[cur + 1]):
                    u = nbr[j]
                    if dist[u] == dist[cur] - 1 and (best < 0 or u < best):
                        best = u
                cur = best
                flat[used + k] = cur
            used += L
            lengths[p] = L
        for i in range(tail):
            dist[queue[i]] = -1
    return lengths, flat[:used].copy()


def geodesics(indptr, nbr, xs, ys):
    """Lexicographically minimal shortest paths ``x -> y`` for each pair.

    Returns ``(lengths, flat)`` where ``lengths[i]`` is the number of vertices
    on path ``i`` (``-1`` if disconnected) and ``flat`` concatenates the paths.
    """
    xs = np.ascontiguousarray(xs, dtype=np.int64)
    ys = np.ascontiguousarray(ys, dtype=np.int64)
    return _accel.pick(_geodesics)(indptr, nbr, xs, ys)


# ---------------------------------------------------------------------------
# connected subsets containing a root
# ---------------------------------------------------------------------------


@njit
def _lt128(a, b, c, d):
    """Exact test a*b < c*d for nonnegative int64 values."""
    mask = np.uint64(0xFFFFFFFF)
    s32 = np.uint64(32)
    hi1, lo1 = _mul128(np.uint64(a), np.uint64(b), mask, s32)
    hi2, lo2 = _mul128(np.uint64(c), np.uint64(d), mask, s32)
    if hi1 != hi2:
        return hi1 < hi2
    return lo1 < lo2


@njit
def _mul128(a, b, mask, s32):
    a_lo, a_hi = a & mask, a >> s32
    b_lo, b_hi = b & mask, b >> s32
    ll = a_lo * b_lo
    lh = a_lo * b_hi
    hl = a_hi * b_lo
    hh = a_hi * b_hi
    mid = (ll >> s32) + (lh & mask) + (hl & mask)
    lo = (ll & mask) | ((mid & mask) << s32)
    hi = hh + (lh >> s32) + (hl >> s32) + (mid >> s32)
    return hi, lo


@njit
def _enumerate_connected(indptr, nbr, wt, root, k, cap):
    """Visit every connected vertex set containing ``root`` with at most ``k`` vertices.

    Classic extension-set search: each set is produced once because a vertex,
    once skipped as an extension at some level, stays excluded below it.
    Tracks the outer vertex boundary weight incrementally.
    """
    n = indptr.shape[0] - 1
    maxdeg = 0
    for v in range(n):
        if indptr[v + 1] - indptr[v] > maxdeg:
            maxdeg = indptr[v + 1] - indptr[v]
    buf = np.empty(k * (k * maxdeg + 1) + 1, dtype=np.int64)
    start = np.zeros(k + 1, dtype=np.int64)
    end = np.zeros(k + 1, dtype=np.int64)
    pos = np.zeros(k + 1, dtype=np.int64)
    members = np.empty(k, dtype=np.int64)
    visited = np.zeros(n, dtype=np.bool_)
    in_set = np.zeros(n, dtype=np.bool_)
    adj = np.zeros(n, dtype=np.int64)

    best_b = np.full(k + 1, -1, dtype=np.int64)
    best_w = np.ones(k + 1, dtype=np.int64)
    witness = np.full((k + 1, k), -1, dtype=np.int64)
    counts = np.zeros(k + 1, dtype=np.int64)

    B = 0
    W = 0
    total = 0
    complete = True

    # add root
    in_set[root] = True
    visited[root] = True
    members[0] = root
    W += wt[root]
    for j in range(indptr[root], indptr[root + 1]):
        u = nbr[j]
        adj[u] += 1
        if adj[u] == 1 and not in_set[u]:
            B += wt[u]
    start[0] = 0
    e = 0
    for j in range(indptr[root], indptr[root + 1]):
        u = nbr[j]
        if not visited[u]:
            visited[u] = True
            buf[e] = u
            e += 1
    end[0] = e
    pos[0] = 0
    size = 1
    counts[1] += 1
    total += 1
    best_b[1] = B
    best_w[1] = W
    witness[1, 0] = root

    level = 0
    while level >= 0:
        if size == k or pos[level] >= end[level] - start[level] or not complete:
            # undo this level
            # unmark the candidates this level introduced
            if level == 0:
                for i in range(start[0], end[0]):
                    visited[buf[i]] = False
                visited[root] = False
                level -= 1
                continue
            newfrom = start[level] + (end[level - 1] - start[level - 1] - pos[level - 1])
            for i in range(newfrom, end[level]):
                visited[buf[i]] = False
            w = members[size - 1]
            for j in range(indptr[w], indptr[w + 1]):
                u = nbr[j]
                adj[u] -= 1
                if adj[u] == 0 and not in_set[u]:
                    B -= wt[u]
            in_set[w] = False
            if adj[w] > 0:
                B += wt[w]
            W -= wt[w]
            size -= 1
            level -= 1
            continue
        i = pos[level]
        pos[level] += 1
        w = buf[start[level] + i]
        # children's candidates: remaining tail, then fresh neighbours of w
        ns = end[level]
        tail_from = start[level] + i + 1
        e = ns
        for t in range(tail_from, end[level]):
            buf[e] = buf[t]
            e += 1
        for j in range(indptr[w], indptr[w + 1]):
            u = nbr[j]
            if not visited[u]:
                visited[u] = True
                buf[e] = u
                e += 1
        # add w to the set
        if adj[w] > 0:
            B -= wt[w]
        in_set[w] = True
        W += wt[w]
        for j in range(indptr[w], indptr[w + 1]):
            u = nbr[j]
            adj[u] += 1
            if adj[u] == 1 and not in_set[u]:
                B += wt[u]
        members[size] = w
        size += 1
        level += 1
        start[level] = ns
        end[level] = e
        pos[level] = 0
        counts[size] += 1
        total += 1
        if best_b[size] < 0 or _lt128(B, best_w[size], best_b[size], W):
            best_b[size] = B
            best_w[size] = W
            for t in range(size):
                witness[size, t] = members[t]
        if total >= cap:
            complete = False
    return best_b, best_w, witness, counts, complete


def enumerate_connected(indptr, nbr, wt, root: int, k: int, cap: int):
    """Per-size minimum of boundary/set weight over connected sets containing ``root``.

    Returns ``(best_boundary, best_weight, witness, counts, complete)``, each
    indexed by set size ``1..k``.
    """
    wt = np.ascontiguousarray(wt, dtype=np.int64)
    return _accel.pick(_enumerate_connected)(indptr, nbr, wt, root, k, cap)


# ---------------------------------------------------------------------------
# subsampled weighted sums
# ---------------------------------------------------------------------------


@njit
def _subsample_nb(key, weights, c, replicas, first):
    N = weights.shape[0]
    out = np.empty(replicas, dtype=np.float64)
    g = np.uint64(0x9E3779B97F4A7C15)
    k = np.uint64(key)
    for r in range(replicas):
        s = 0.0
        base = np.uint64((first + r) * N)
        for i in range(N):
            z = k + (base + np.uint64(i)) * g + g
            z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
            z = z ^ (z >> np.uint64(31))
            u = np.float64(z >> np.uint64(11)) * (1.0 / 9007199254740992.0)
            if u < c:
                s += weights[i]
            else:
                s += 0.0
        out[r] = s
    return out


def _subsample_numpy(key, weights, c, replicas, first, chunk=64):
    from .rng import _uniform_numpy

    N = len(weights)
    out = np.empty(replicas, dtype=np.float64)
    for lo in range(0, replicas, chunk):
        hi = min(replicas, lo + chunk)
        counters = np.arange((first + lo) * N, (first + hi) * N, dtype=np.uint64)
        keep = _uniform_numpy(key, counters).reshape(hi - lo, N) < c
        out[lo:hi] = np.cumsum(np.where(keep, weights, 0.0), axis=1)[:, -1]
    return out


def subsample_sums(key: int, weights: np.ndarray, c: float, replicas: int, first: int = 0) -> np.ndarray:
    """``W_N = sum_n Y_n w_n`` per replica with ``Y_n ~ Bernoulli(c)`` from stream ``key``.

    Draw ``n`` of replica ``r`` uses counter ``r*N + n``; sums are accumulated
    in index order on both backends so results match bit for bit.
    """
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    if _accel.use_numba():
        return _subsample_nb(np.uint64(key), weights, float(c), replicas, first)
    return _subsample_numpy(key, weights, float(c), replicas, first)
