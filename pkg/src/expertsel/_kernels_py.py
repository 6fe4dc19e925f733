"""Pure numpy versions of the compiled kernels."""

import numpy as np

# candidate block size keeps the (cells x candidates) temporaries near 32 MiB
_BLOCK_ELEMENTS = 1 << 22


def score_candidates(a, b, c, d):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    n = c.shape[0]
    err = np.empty(n)
    fp = np.empty(n)
    step = max(1, _BLOCK_ELEMENTS // max(1, a.shape[0]))
    for lo in range(0, n, step):
        cs = c[lo:lo + step]
        ds = d[lo:lo + step]
        e = np.zeros(cs.shape[0])
        f = np.zeros(cs.shape[0])
        for cc, dd in ((cs, ds), (1.0 - cs, 1.0 - ds)):
            x = a[:, None] * cc[None, :]
            y = b[:, None] * dd[None, :]
            b_min = y <= x
            e += np.where(b_min, y, x).sum(axis=0)
            f += np.where(b_min, y, 0.0).sum(axis=0)
        err[lo:lo + step] = e
        fp[lo:lo + step] = f
    return err, fp

