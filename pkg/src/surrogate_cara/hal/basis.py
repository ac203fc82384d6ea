"""Data-adaptive spline bases for the Highly Adaptive Lasso.

Zero-order columns are tensor products of indicators 1(u_j <= x_j); first
order columns are tensor products of hinges (x_j - u_j)_+ .  Knots are
taken from observed points projected onto each section (subset of
covariate indices).
"""
from dataclasses import dataclass
from itertools import combinations

import numpy as np


@dataclass(frozen=True)
class HalBasis:
    order: int
    sections: tuple  # tuple of index tuples, one per knot group
    knots: tuple  # knots[g] is an (m_g, |sections[g]|) array
    cap: int
    n_features: int

    @property
    def n_columns(self):
        return int(sum(k.shape[0] for k in self.knots))

    def column_sections(self):
        out = []
        for s, k in zip(self.sections, self.knots):
            out.extend([s] * k.shape[0])
        return out

    def evaluate(self, x):
        """Design matrix without the intercept column, shape (n, n_columns)."""
        x = _as_2d(x)
        if x.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {x.shape[1]}")
        n = x.shape[0]
        blocks = []
        for s, u in zip(self.sections, self.knots):
            if u.shape[0] == 0:
                continue
            col = np.ones((n, u.shape[0]))
            for jj, j in enumerate(s):
                diff = x[:, j][:, None] - u[:, jj][None, :]
                if self.order == 0:
                    col *= diff >= 0
                else:
                    col *= np.maximum(diff, 0.0)
            blocks.append(col)
        if not blocks:
            return np.zeros((n, 0))
        return np.hstack(blocks)


def _as_2d(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    return x


def _thin(points, keep):
    """Evenly spaced subsample of lexicographically sorted unique points."""
    m = points.shape[0]
    if keep >= m:
        return points
    idx = np.unique(np.round(np.linspace(0, m - 1, keep)).astype(np.int64))
    return points[idx]


def _allocate(sizes, cap):
    # water-filling: small sections keep everything, the rest split evenly
    alloc = [0] * len(sizes)
    remaining = cap
    todo = sorted(range(len(sizes)), key=lambda g: sizes[g])
    while todo:
        share = remaining // len(todo)
        g = todo[0]
        if sizes[g] <= share:
            alloc[g] = sizes[g]
            remaining -= sizes[g]
            todo.pop(0)
        else:
            for g in todo:
                alloc[g] = share
            leftover = remaining - share * len(todo)
            for g in reversed(todo):  # largest sections absorb the remainder
                if leftover == 0:
                    break
                alloc[g] += 1
                leftover -= 1
            break
    return alloc


def build_basis(x, order=1, cap=100, max_degree=None):
    """Build a HAL basis from the rows of ``x``.

    ``max_degree`` bounds the section size; by default all nonempty
    subsets are used for order 0 and univariate sections for order 1.
    """
    if order not in (0, 1):
        raise ValueError("only zero- and first-order splines are supported")
    x = _as_2d(x)
    n, d = x.shape
    if n < 1:
        raise ValueError("need at least one observation")
    if max_degree is None:
        max_degree = d if order == 0 else 1
    sections = [s for r in range(1, min(max_degree, d) + 1) for s in combinations(range(d), r)]
    candidates = []
    for s in sections:
        pts = np.unique(x[:, list(s)], axis=0)  # sorted lexicographically
        candidates.append(pts)
    alloc = _allocate([c.shape[0] for c in candidates], cap)
    knots = tuple(_thin(c, a) for c, a in zip(candidates, alloc))
    return HalBasis(order=order, sections=tuple(sections), knots=knots, cap=cap, n_features=d)
