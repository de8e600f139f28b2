"""Counter-based random number generation for reproducible parallel Monte Carlo.

Every variate consumed by a simulation is a pure function of
(master_seed, path_index, position), where position indexes the path's
noise sequence (step_index * increments_per_step + component).  Worker
count and scheduling therefore cannot change a single sample: any fixed
partition of the path set yields bit-identical ensembles.

The generator is Philox4x32-10.  The integer rounds run through a tiled
numba kernel when numba is importable and through a vectorized numpy path
otherwise; the two are bit-identical (tested), so the accelerator never
affects results.  Known-answer vectors from the reference implementation
are pinned in the test suite.

Box-Muller runs in float32 (the float64 libm on typical hosts is an order
of magnitude slower and the 1e-7 quantization is far below every Monte
Carlo tolerance in this package); outputs are float64 arrays.
"""

import numpy as np

try:
    import numba

    _HAVE_NUMBA = True
except Exception:  # pragma: no cover - environment without numba
    _HAVE_NUMBA = False

_M0 = 0xD2511F53
_M1 = 0xCD9E8D57
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_MASK32 = 0xFFFFFFFF
_INV32 = np.float32(1.0 / 4294967296.0)
_HALF = np.float32(0.5)
_TWO_PI = np.float32(2.0 * np.pi)


def _philox10_numpy(c0, c1, c2, c3, k0, k1):
    """Reference implementation on uint64 arrays holding 32-bit lanes."""
    m0 = np.uint64(_M0)
    m1 = np.uint64(_M1)
    mask = np.uint64(_MASK32)
    s32 = np.uint64(32)
    for r in range(10):
        kk0 = np.uint64((k0 + r * _W0) & _MASK32)
        kk1 = np.uint64((k1 + r * _W1) & _MASK32)
        p0 = (c0 & mask) * m0
        p1 = (c2 & mask) * m1
        c0 = (p1 >> s32) ^ (c1 & mask) ^ kk0
        c1 = p1 & mask
        c2 = (p0 >> s32) ^ (c3 & mask) ^ kk1
        c3 = p0 & mask
    return c0, c1, c2, c3


if _HAVE_NUMBA:
    _NB_M0 = np.uint64(_M0)
    _NB_M1 = np.uint64(_M1)
    _NB_W0 = np.uint64(_W0)
    _NB_W1 = np.uint64(_W1)
    _NB_MASK = np.uint64(_MASK32)
    _NB_S32 = np.uint64(32)

    @numba.njit(cache=True)
    def _philox10_kernel(c0, c1, c2, c3, k0, k1, o0, o1, o2, o3):  # pragma: no cover
        # Round-major over cache-sized tiles so LLVM vectorizes each pass.
        n = c0.size
        tile = 2048
        b0 = np.empty(tile, np.uint64)
        b1 = np.empty(tile, np.uint64)
        b2 = np.empty(tile, np.uint64)
        b3 = np.empty(tile, np.uint64)
        for start in range(0, n, tile):
            m = min(tile, n - start)
            for i in range(m):
                b0[i] = c0[start + i]
                b1[i] = c1[start + i]
                b2[i] = c2[start + i]
                b3[i] = c3[start + i]
            kk0 = k0
            kk1 = k1
            for _ in range(10):
                for i in range(m):
                    p0 = (b0[i] & _NB_MASK) * _NB_M0
                    p1 = (b2[i] & _NB_MASK) * _NB_M1
                    b0[i] = (p1 >> _NB_S32) ^ b1[i] ^ kk0
                    b1[i] = p1 & _NB_MASK
                    x2 = (p0 >> _NB_S32) ^ b3[i] ^ kk1
                    b3[i] = p0 & _NB_MASK
                    b2[i] = x2
                kk0 = (kk0 + _NB_W0) & _NB_MASK
                kk1 = (kk1 + _NB_W1) & _NB_MASK
            for i in range(m):
                o0[start + i] = b0[i]
                o1[start + i] = b1[i]
                o2[start + i] = b2[i]
                o3[start + i] = b3[i]


def _philox10(c0, c1, c2, c3, k0, k1):
    if _HAVE_NUMBA:
        shape = c0.shape
        flat = [np.ascontiguousarray(c.ravel()) for c in (c0, c1, c2, c3)]
        outs = [np.empty(flat[0].size, dtype=np.uint64) for _ in range(4)]
        _philox10_kernel(flat[0], flat[1], flat[2], flat[3],
                         np.uint64(k0), np.uint64(k1), *outs)
        return tuple(o.reshape(shape) for o in outs)
    return _philox10_numpy(c0, c1, c2, c3, k0, k1)


def philox4x32(c0, c1, c2, c3, k0, k1):
    """One Philox4x32-10 block on broadcastable inputs; four uint64 words out.

    Inputs are interpreted mod 2**32.  Exposed mainly so the known-answer
    vectors can be checked.
    """
    mask = np.uint64(_MASK32)
    arrs = [np.asarray(c, dtype=np.uint64) & mask for c in (c0, c1, c2, c3)]
    arrs = [np.array(a) for a in np.broadcast_arrays(*arrs)]
    return _philox10(*arrs, int(k0) & _MASK32, int(k1) & _MASK32)


def _split_seed(master_seed):
    s = int(master_seed) & 0xFFFFFFFFFFFFFFFF
    return s & _MASK32, s >> 32


def _blocks_to_normals(words):
    """Map four uint64 word arrays to four float64 normals via Box-Muller."""
    x0, x1, x2, x3 = words
    u0 = (x0.astype(np.float32) + _HALF) * _INV32
    u1 = (x1.astype(np.float32) + _HALF) * _INV32
    u2 = (x2.astype(np.float32) + _HALF) * _INV32
    u3 = (x3.astype(np.float32) + _HALF) * _INV32
    r0 = np.sqrt(np.float32(-2.0) * np.log(u0))
    r1 = np.sqrt(np.float32(-2.0) * np.log(u2))
    a0 = _TWO_PI * u1
    a1 = _TWO_PI * u3
    z = np.empty(x0.shape + (4,), dtype=np.float32)
    z[..., 0] = r0 * np.cos(a0)
    z[..., 1] = r0 * np.sin(a0)
    z[..., 2] = r1 * np.cos(a1)
    z[..., 3] = r1 * np.sin(a1)
    return z


def path_step_normals(master_seed, path_indices, step_start, step_count,
                      per_step):
    """Normal increments for a contiguous range of steps of many paths.

    Returns shape (n_paths, step_count, per_step) float64.  Increment j of
    step k occupies position k*per_step + j of the path's noise sequence;
    four sequence positions per Philox block.  Slicing any step range of any
    path subset always reproduces the same values.
    """
    paths = np.asarray(path_indices, dtype=np.uint64).reshape(-1, 1)
    k0, k1 = _split_seed(master_seed)
    m0 = step_start * per_step
    m1 = (step_start + step_count) * per_step
    b0 = m0 // 4
    nb = (m1 + 3) // 4 - b0
    mask = np.uint64(_MASK32)
    s32 = np.uint64(32)
    blk = (np.uint64(b0) + np.arange(nb, dtype=np.uint64)).reshape(1, -1)
    c0 = np.broadcast_to(blk & mask, (paths.shape[0], nb))
    c1 = np.broadcast_to(blk >> s32, (paths.shape[0], nb))
    c2 = np.broadcast_to(paths & mask, (paths.shape[0], nb))
    c3 = np.broadcast_to(paths >> s32, (paths.shape[0], nb))
    words = _philox10(np.array(c0), np.array(c1), np.array(c2), np.array(c3),
                      k0, k1)
    z = _blocks_to_normals(words).reshape(paths.shape[0], nb * 4)
    off = m0 - 4 * b0
    out = z[:, off:off + (m1 - m0)].astype(np.float64)
    return out.reshape(paths.shape[0], step_count, per_step)


def normals(master_seed, path_indices, step_indices, count):
    """Standard normal increments keyed by (seed, path, step, lane).

    path_indices and step_indices broadcast against each other; the result
    has shape ``broadcast(path, step) + (count,)``.  Used for one-shot draws
    (synthetic samples, resampling); simulators use path_step_normals.
    """
    k0, k1 = _split_seed(master_seed)
    path = np.asarray(path_indices, dtype=np.uint64)
    step = np.asarray(step_indices, dtype=np.uint64)
    shape = np.broadcast_shapes(path.shape, step.shape)
    mask = np.uint64(_MASK32)
    s32 = np.uint64(32)
    blocks = (count + 3) // 4
    z = np.empty(shape + (count,), dtype=np.float64)
    for lane in range(blocks):
        c0 = np.broadcast_to(step & mask, shape)
        c1 = np.broadcast_to(step >> s32, shape)
        c2 = np.broadcast_to(path & mask, shape)
        c3 = np.broadcast_to((path >> s32) ^ np.uint64(lane), shape)
        words = _philox10(np.array(c0), np.array(c1), np.array(c2),
                          np.array(c3), k0, k1)
        zz = _blocks_to_normals(words)
        take = min(4, count - 4 * lane)
        z[..., 4 * lane:4 * lane + take] = zz[..., :take].astype(np.float64)
    return z


def uniforms(master_seed, path_indices, step_indices, lane=0):
    """Four open-(0,1) float64 uniforms per (path, step) pair for one lane."""
    k0, k1 = _split_seed(master_seed)
    path = np.asarray(path_indices, dtype=np.uint64)
    step = np.asarray(step_indices, dtype=np.uint64)
    shape = np.broadcast_shapes(path.shape, step.shape)
    mask = np.uint64(_MASK32)
    s32 = np.uint64(32)
    c0 = np.broadcast_to(step & mask, shape)
    c1 = np.broadcast_to(step >> s32, shape)
    c2 = np.broadcast_to(path & mask, shape)
    c3 = np.broadcast_to((path >> s32) ^ np.uint64(lane), shape)
    words = _philox10(np.array(c0), np.array(c1), np.array(c2), np.array(c3),
                      k0, k1)
    return [(w.astype(np.float64) + 0.5) * float(_INV32) for w in words]


def substream_seed(master_seed, tag):
    """Derive a decorrelated 64-bit seed for an auxiliary stream.

    Used where an estimator needs its own randomness (resampling, synthetic
    draws) that must not touch the simulation streams.
    """
    k0, k1 = _split_seed(master_seed)
    t = int(tag)
    x0, x1, _, _ = philox4x32(t & _MASK32, t >> 32, 0x5EED, 0xA0, k0, k1)
    return (int(x0) << 32) | int(x1)
