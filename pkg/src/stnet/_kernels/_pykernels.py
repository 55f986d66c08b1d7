"""Pure-numpy kernels. Reference behaviour for the compiled backend.

All kernels use the 5-D layout (N, D, H, W, C); 2-D callers pass D == 1.
"""

import numpy as np


def _out(size, k, s):
    return (size - k) // s + 1


def im2col(xp, kd, kh, kw, sd, sh, sw):
    """Patch matrix of shape (N*Do*Ho*Wo, kd*kh*kw*C), patch order (kd, kh, kw, C)."""
    n, d, h, w, c = xp.shape
    do, ho, wo = _out(d, kd, sd), _out(h, kh, sh), _out(w, kw, sw)
    cols = np.empty((n, do, ho, wo, kd, kh, kw, c), dtype=xp.dtype)
    for a in range(kd):
        for b in range(kh):
            for e in range(kw):
                cols[:, :, :, :, a, b, e, :] = xp[
                    :,
                    a:a + sd * (do - 1) + 1:sd,
                    b:b + sh * (ho - 1) + 1:sh,
                    e:e + sw * (wo - 1) + 1:sw,
                    :,
                ]
    return cols.reshape(n * do * ho * wo, kd * kh * kw * c)


def col2im(cols, xshape, kd, kh, kw, sd, sh, sw):
    """Adjoint of :func:`im2col`: scatter-add patches back into an input-shaped array."""
    n, d, h, w, c = xshape
    do, ho, wo = _out(d, kd, sd), _out(h, kh, sh), _out(w, kw, sw)
    cols = cols.reshape(n, do, ho, wo, kd, kh, kw, c)
    dx = np.zeros(xshape, dtype=cols.dtype)
    for a in range(kd):
        for b in range(kh):
            for e in range(kw):
                dx[
                    :,
                    a:a + sd * (do - 1) + 1:sd,
                    b:b + sh * (ho - 1) + 1:sh,
                    e:e + sw * (wo - 1) + 1:sw,
                    :,
                ] += cols[:, :, :, :, a, b, e, :]
    return dx


def maxpool_forward(x, pd, ph, pw):
    """Non-overlapping max pool; trailing cells that do not fill a window are dropped.

    Returns the pooled tensor and, per output cell, the flat offset of the
    winning element inside its (pd, ph, pw) window (first maximum wins).
    """
    n, d, h, w, c = x.shape
    do, ho, wo = d // pd, h // ph, w // pw
    xc = x[:, :do * pd, :ho * ph, :wo * pw, :]
    win = (
        xc.reshape(n, do, pd, ho, ph, wo, pw, c)
        .transpose(0, 1, 3, 5, 7, 2, 4, 6)
        .reshape(n, do, ho, wo, c, pd * ph * pw)
    )
    idx = win.argmax(axis=-1)
    out = np.take_along_axis(win, idx[..., None], axis=-1)[..., 0]
    return np.ascontiguousarray(out), idx.astype(np.int64)


def maxpool_backward(dy, idx, xshape, pd, ph, pw):
    n, do, ho, wo, c = dy.shape
    g = np.zeros((n, do, ho, wo, c, pd * ph * pw), dtype=dy.dtype)
    np.put_along_axis(g, idx[..., None], dy[..., None], axis=-1)
    g = (
        g.reshape(n, do, ho, wo, c, pd, ph, pw)
        .transpose(0, 1, 5, 2, 6, 3, 7, 4)
        .reshape(n, do * pd, ho * ph, wo * pw, c)
    )
    dx = np.zeros(xshape, dtype=dy.dtype)
    dx[:, :do * pd, :ho * ph, :wo * pw, :] = g
    return dx
