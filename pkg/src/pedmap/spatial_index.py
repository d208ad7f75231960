"""Ball tree over geographic points with the haversine metric.

Each tree node bounds its subtree by a ball: a center point plus the maximum
haversine distance from that center to any point below it. Because haversine
satisfies the triangle inequality on the sphere, the standard lower bound

    dist(query, center) - radius

prunes exactly, so queries return the same distances as a linear scan.

Construction splits a node by the farthest-point-pair heuristic: take the
node's first point, find its farthest point A, find A's farthest point B, and
partition by proximity to A versus B. Seeding with the first point (rather
than a random one) keeps construction deterministic for a given input order.
"""

from __future__ import annotations

from typing import NamedTuple, Optional, Sequence

from .geodesy import GeoPoint, haversine_distance

DEFAULT_LEAF_SIZE = 16


class NeighborResult(NamedTuple):
    node_index: int
    distance: float


class _Ball:
    __slots__ = ("center", "radius", "left", "right", "indices")

    def __init__(self, center: GeoPoint, radius: float):
        self.center = center
        self.radius = radius
        self.left: Optional[_Ball] = None
        self.right: Optional[_Ball] = None
        self.indices: Optional[list[int]] = None  # set on leaves only


class BallTree:
    """Immutable nearest-neighbor index over a fixed list of points.

    Built once, then safe for unlimited concurrent queries. An empty point
    list yields an empty tree whose queries return no neighbors.
    """

    def __init__(self, points: Sequence[GeoPoint], leaf_size: int = DEFAULT_LEAF_SIZE):
        if leaf_size < 1:
            raise ValueError("leaf_size must be >= 1")
        self._points = list(points)
        self.leaf_size = leaf_size
        self._root = self._build(list(range(len(self._points)))) if self._points else None

    def __len__(self) -> int:
        return len(self._points)

    @property
    def points(self) -> list[GeoPoint]:
        return self._points

    def _make_ball(self, indices: list[int]) -> _Ball:
        pts = self._points
        n = len(indices)
        center = GeoPoint(
            sum(pts[i].lat for i in indices) / n,
            sum(pts[i].lon for i in indices) / n,
        )
        radius = max(haversine_distance(center, pts[i]) for i in indices)
        return _Ball(center, radius)

    def _split(self, indices: list[int]) -> tuple[list[int], list[int]]:
        pts = self._points
        seed = pts[indices[0]]
        a_idx = max(indices, key=lambda i: haversine_distance(seed, pts[i]))
        a = pts[a_idx]
        dist_a = {i: haversine_distance(a, pts[i]) for i in indices}
        b_idx = max(indices, key=lambda i: dist_a[i])
        b = pts[b_idx]
        left: list[int] = []
        right: list[int] = []
        for i in indices:
            (left if dist_a[i] <= haversine_distance(b, pts[i]) else right).append(i)
        if not left or not right:
            # All points tied (e.g. duplicates): halve to guarantee progress.
            mid = len(indices) // 2
            return indices[:mid], indices[mid:]
        return left, right

    def _build(self, root_indices: list[int]) -> _Ball:
        # Iterative construction: a degenerate split sequence must not hit the
        # interpreter recursion limit.
        root = self._make_ball(root_indices)
        stack: list[tuple[_Ball, list[int]]] = [(root, root_indices)]
        while stack:
            ball, indices = stack.pop()
            if len(indices) <= self.leaf_size:
                ball.indices = indices
                continue
            left_idx, right_idx = self._split(indices)
            ball.left = self._make_ball(left_idx)
            ball.right = self._make_ball(right_idx)
            stack.append((ball.left, left_idx))
            stack.append((ball.right, right_idx))
        return root

    def nearest(self, query: GeoPoint) -> Optional[NeighborResult]:
        """The indexed point minimizing haversine distance to ``query``.

        Ties break toward the lowest point index; returns None on an empty tree.
        """
        if self._root is None:
            return None
        pts = self._points
        best_dist = float("inf")
        best_idx = -1
        root_lb = haversine_distance(query, self._root.center) - self._root.radius
        stack: list[tuple[float, _Ball]] = [(root_lb, self._root)]
        while stack:
            lb, ball = stack.pop()
            if lb > best_dist:
                continue
            if ball.indices is not None:
                for i in ball.indices:
                    d = haversine_distance(query, pts[i])
                    if d < best_dist or (d == best_dist and i < best_idx):
                        best_dist = d
                        best_idx = i
            else:
                left, right = ball.left, ball.right
                lb_left = haversine_distance(query, left.center) - left.radius
                lb_right = haversine_distance(query, right.center) - right.radius
                # Push the farther child first so the nearer one is explored next.
                if lb_left <= lb_right:
                    stack.append((lb_right, right))
                    stack.append((lb_left, left))
                else:
                    stack.append((lb_left, left))
                    stack.append((lb_right, right))
        return NeighborResult(best_idx, best_dist)

    def within_radius(self, query: GeoPoint, radius_m: float) -> list[NeighborResult]:
        """All indexed points within ``radius_m`` meters, sorted by ascending distance."""
        if radius_m < 0:
            raise ValueError("radius must be >= 0")
        if self._root is None:
            return []
        pts = self._points
        hits: list[NeighborResult] = []
        stack = [self._root]
        while stack:
            ball = stack.pop()
            if haversine_distance(query, ball.center) - ball.radius > radius_m:
                continue
            if ball.indices is not None:
                for i in ball.indices:
                    d = haversine_distance(query, pts[i])
                    if d <= radius_m:
                        hits.append(NeighborResult(i, d))
            else:
                stack.append(ball.left)
                stack.append(ball.right)
        hits.sort(key=lambda r: (r.distance, r.node_index))
        return hits


def build_index(points: Sequence[GeoPoint], leaf_size: int = DEFAULT_LEAF_SIZE) -> BallTree:
    """Build a ball tree over ``points``; deterministic for a given input order."""
    return BallTree(points, leaf_size=leaf_size)


def nearest_brute_force(points: Sequence[GeoPoint], query: GeoPoint) -> Optional[NeighborResult]:
    """Linear-scan nearest neighbor; the reference semantics for ``BallTree.nearest``."""
    best: Optional[NeighborResult] = None
    for i, p in enumerate(points):
        d = haversine_distance(query, p)
        if best is None or d < best.distance:
            best = NeighborResult(i, d)
    return best
