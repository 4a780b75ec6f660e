"""Dyadic intervals and cubes with exact rational endpoints."""

from dataclasses import dataclass
from functools import cached_property
from fractions import Fraction
from itertools import product

from .measure import to_fraction

MAX_DEPTH = 40


def _root(root):
    a, b = (to_fraction(v) for v in root)
    if not a < b:
        raise ValueError(f"root interval must have a < b, got [{a}, {b})")
    return a, b


@dataclass(frozen=True, order=True)
class DyadicInterval:
    """The interval root_a + |root|·[j/2^m, (j+1)/2^m)."""

    root: tuple
    m: int
    j: int

    def __post_init__(self):
        if self.m < 0 or not 0 <= self.j < 2 ** self.m:
            raise IndexError(f"index j={self.j} out of range at depth m={self.m}")

    @cached_property
    def length(self):
        return (self.root[1] - self.root[0]) / 2 ** self.m

    @cached_property
    def left(self):
        return self.root[0] + self.j * self.length

    @cached_property
    def right(self):
        return self.root[0] + (self.j + 1) * self.length

    @cached_property
    def center(self):
        return self.left + self.length / 2

    @cached_property
    def frame(self):
        """(center, length): the affine map t = (x - center)/length."""
        return self.center, self.length

    def children(self):
        return [DyadicInterval(self.root, self.m + 1, 2 * self.j),
                DyadicInterval(self.root, self.m + 1, 2 * self.j + 1)]

    def parent(self):
        if self.m == 0:
            return None
        return DyadicInterval(self.root, self.m - 1, self.j // 2)

    def ancestors(self):
        """Strict ancestors, nearest first."""
        out, q = [], self.parent()
        while q is not None:
            out.append(q)
            q = q.parent()
        return out

    def contains(self, other):
        """True if ``other`` is a (not necessarily strict) descendant."""
        return other.m >= self.m and other.j >> (other.m - self.m) == self.j

    def contains_point(self, x):
        return self.left <= x < self.right

    def side_of(self, descendant):
        """0 if ``descendant`` lies in the left child, 1 if in the right child."""
        if not (self.contains(descendant) and descendant.m > self.m):
            raise ValueError("not a strict descendant")
        return (descendant.j >> (descendant.m - self.m - 1)) & 1

    def label(self):
        return f"{self.m}:{self.j}"

    def __str__(self):
        return f"[{self.left}, {self.right})"


def interval_at(root, m, j):
    return DyadicInterval(_root(root), m, j)


def descendants(root, depth):
    """All intervals of depth ≤ ``depth`` in (m, j) order."""
    if depth > MAX_DEPTH:
        raise ValueError(f"depth {depth} exceeds maximum {MAX_DEPTH}")
    r = _root(root)
    return [DyadicInterval(r, m, j) for m in range(depth + 1) for j in range(2 ** m)]


def parse_label(root, label):
    """Parse the "m:j" interval encoding."""
    try:
        m, j = (int(s) for s in label.split(":"))
    except ValueError as exc:
        raise ValueError(f"interval must be given as m:j, got {label!r}") from exc
    return interval_at(root, m, j)


@dataclass(frozen=True, order=True)
class DyadicCube:
    """Product of same-depth dyadic intervals, one per axis (n ≤ 3)."""

    axes: tuple

    def __post_init__(self):
        if not 1 <= len(self.axes) <= 3:
            raise ValueError("cubes are supported for 1 ≤ n ≤ 3")
        if len({ax.m for ax in self.axes}) != 1:
            raise ValueError("all axes must share the same depth")

    @property
    def n(self):
        return len(self.axes)

    @property
    def m(self):
        return self.axes[0].m

    @property
    def side(self):
        return self.axes[0].length

    def children(self):
        """The 2^n children; axis 0 varies slowest."""
        return [DyadicCube(tuple(c)) for c in product(*(ax.children() for ax in self.axes))]

    def parent(self):
        if self.m == 0:
            return None
        return DyadicCube(tuple(ax.parent() for ax in self.axes))


def cube_at(root_box, m, index):
    """Cube at depth m with per-axis indices ``index`` inside ``root_box``."""
    return DyadicCube(tuple(interval_at(r, m, j) for r, j in zip(root_box, index)))


def children(Q):
    return Q.children()


def unit_interval():
    return (Fraction(0), Fraction(1))
