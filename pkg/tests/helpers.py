"""Shared test oracles and audit wrappers.

These stay deliberately independent of the library's implementation paths:
the brute-force matcher enumerates every candidate and picks the tuple
minimum, and the counting wrapper audits query traffic from outside.
"""

import numpy as np

from mesampler.motion import to_gray
from mesampler.oracle import ToyLinearSoftmax


def brute_force_block_match(ref, cur, block_size, radius):
    """Reference SAD search: list every candidate, take the lexicographic
    minimum of (sad, |u|+|v|, scan index)."""
    rg = to_gray(ref)
    cg = to_gray(cur)
    h, w = cg.shape
    field = np.zeros((h, w, 2))
    for by in range(0, h, block_size):
        bh = min(block_size, h - by)
        for bx in range(0, w, block_size):
            bw = min(block_size, w - bx)
            candidates = []
            scan = 0
            for v in range(-radius, radius + 1):
                for u in range(-radius, radius + 1):
                    sy, sx = by - v, bx - u
                    if sy < 0 or sx < 0 or sy + bh > h or sx + bw > w:
                        scan += 1
                        continue
                    sad = 0.0
                    for i in range(bh):
                        for j in range(bw):
                            sad += abs(cg[by + i, bx + j] - rg[sy + i, sx + j])
                    candidates.append((sad, abs(u) + abs(v), scan, u, v))
                    scan += 1
            _, _, _, u, v = min(candidates)
            field[by : by + bh, bx : bx + bw, 0] = u
            field[by : by + bh, bx : bx + bw, 1] = v
    return field


class CountingWrapper:
    """Independent query auditor around any oracle."""

    def __init__(self, inner):
        self.inner = inner
        self.count = 0

    @property
    def num_classes(self):
        return self.inner.num_classes

    @property
    def query_count(self):
        return self.count

    def query(self, video):
        self.count += 1
        return self.inner.query(video)


def pinned_margin_oracle(shape, seed=7, margin=0.1, scale=4.0):
    """Two-class linear toy whose clean margin at the all-0.5 video is
    exactly ``margin``; returns (oracle, label)."""
    x0 = np.full(shape, 0.5)
    oracle = ToyLinearSoftmax.from_seed(shape, num_classes=2, seed=seed, scale=scale)
    l = oracle.weights @ x0.ravel() + oracle.bias
    y = int(np.argmax(l))
    oracle.bias[1 - y] += (l[y] - l[1 - y]) - margin
    return oracle, y
