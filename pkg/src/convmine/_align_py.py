"""Pure-Python twin of ``_align_ext``; same signature, same results."""

import math

import numpy as np

BACKEND = "python"


def batch_costs(events, offsets, init, final, closure, sync_offsets, sync_src, sync_dst, log_cost):
    events = np.asarray(events).tolist()
    offsets = np.asarray(offsets).tolist()
    closure = np.asarray(closure, dtype=np.float64)
    n_places = closure.shape[0]
    # per target place: (source, cost) pairs with a finite model path
    into = [
        [(p, float(closure[p, q])) for p in range(n_places) if math.isfinite(closure[p, q])]
        for q in range(n_places)
    ]
    sync_offsets = np.asarray(sync_offsets).tolist()
    sync_src = np.asarray(sync_src).tolist()
    sync_dst = np.asarray(sync_dst).tolist()
    sync = [
        list(zip(sync_src[a:b], sync_dst[a:b]))
        for a, b in zip(sync_offsets, sync_offsets[1:])
    ]
    start = [float(closure[init, q]) for q in range(n_places)]
    inf = math.inf
    out = np.empty(len(offsets) - 1, dtype=np.float64)
    for k in range(len(offsets) - 1):
        cur = start
        for lab in events[offsets[k]:offsets[k + 1]]:
            nxt = [c + log_cost for c in cur]
            if lab >= 0:
                for p, q in sync[lab]:
                    if cur[p] < nxt[q]:
                        nxt[q] = cur[p]
            cur = [min((nxt[p] + c for p, c in row), default=inf) for row in into]
        out[k] = cur[final]
    return out
