"""Hierarchical cube structure adapted to a discrete measure.

Cells are built per level from greedy farthest-point nets of the atoms,
nested inside the previous level's cells.  Each cube carries a ball whose
28-fold enlargement contains all its members; sibling balls inflated five
times stay disjoint because the net separation is ten cube radii.  The
support is rescaled to unit diameter for the level geometry; all stored
lengths are in original units.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .measure import Ball, DiscreteMeasure
from .reduction import deterministic_sum

__all__ = [
    "Cube",
    "Lattice",
    "build",
    "doubling_check",
    "maximal_doubling",
    "first_doubling_ancestor",
    "density_chain_report",
    "small_boundary_report",
    "delta_mu",
]

BIG_BALL_FACTOR = 28
DEFAULT_SEPARATION = 10.0
DEFAULT_DOUBLING_CONSTANT = 128.0


@dataclass
class Cube:
    id: int
    level: int
    center: complex
    radius: float  # original units; radius / lattice.rescale in [A0^-k, C0 A0^-k]
    members: np.ndarray
    parent: int | None
    children: list[int] = field(default_factory=list)
    doubling: bool = False

    @property
    def n_members(self) -> int:
        return int(self.members.size)


@dataclass
class Lattice:
    mu: DiscreteMeasure
    c0: float
    a0: float
    separation: float
    doubling_constant: float
    rescale: float
    cubes: list[Cube]
    levels: list[list[int]]
    report: dict

    @property
    def root(self) -> Cube:
        return self.cubes[self.levels[0][0]]

    def ball(self, qid: int) -> Ball:
        q = self.cubes[qid]
        return Ball(q.center, q.radius)

    def big_ball(self, qid: int, factor: float = 1.0) -> Ball:
        """``factor`` times the 28-fold companion ball."""
        q = self.cubes[qid]
        return Ball(q.center, factor * BIG_BALL_FACTOR * q.radius)

    def mass(self, qid: int) -> float:
        return float(self.mu.weights[self.cubes[qid].members].sum())

    def theta(self, ball: Ball) -> float:
        return self.mu.mass_in(ball) / ball.radius

    def theta_2b(self, qid: int) -> float:
        return self.theta(self.big_ball(qid, 2.0))

    def set_diameter(self, qid: int) -> float:
        q = self.cubes[qid]
        if q.n_members < 2:
            return 0.0
        pts = self.mu.points[q.members]
        return float(np.max(np.abs(pts[:, None] - pts[None, :])))

    def is_ancestor(self, aid: int, qid: int) -> bool:
        """Whether ``aid`` is ``qid`` or one of its ancestors."""
        cur: int | None = qid
        while cur is not None:
            if cur == aid:
                return True
            cur = self.cubes[cur].parent
        return False

    def chain(self, qid: int, pid: int) -> list[int]:
        """Cube ids from ``qid`` up to ``pid`` inclusive."""
        out = []
        cur: int | None = qid
        while cur is not None:
            out.append(cur)
            if cur == pid:
                return out
            cur = self.cubes[cur].parent
        raise ValueError(f"cube {pid} is not an ancestor of cube {qid}")

    def descendants(self, qid: int) -> list[int]:
        out = []
        stack = [qid]
        while stack:
            cur = stack.pop()
            out.append(cur)
            stack.extend(self.cubes[cur].children)
        return out

    def to_json(self) -> str:
        records = []
        for q in self.cubes:
            records.append(
                {
                    "id": q.id,
                    "level": q.level,
                    "center": [q.center.real, q.center.imag],
                    "r": q.radius,
                    "members": [int(m) for m in q.members],
                    "doubling": bool(q.doubling),
                    "parent": q.parent,
                }
            )
        payload = {
            "c0": self.c0,
            "a0": self.a0,
            "separation": self.separation,
            "doubling_constant": self.doubling_constant,
            "rescale": self.rescale,
            "cubes": records,
        }
        return json.dumps(payload, sort_keys=True)


def _greedy_net(points: np.ndarray, indices: np.ndarray, sep: float) -> list[int]:
    """Greedy farthest-point subset with pairwise distances >= sep.

    Seeded at the lowest atom index; each step adds the member farthest
    from the chosen set (ties to the lowest index) while that distance
    still clears the separation.
    """
    order = np.argsort(indices, kind="stable")
    idx = indices[order]
    pts = points[order]
    chosen = [0]
    dist = np.abs(pts - pts[0])
    while True:
        far = int(np.argmax(dist))  # argmax takes the lowest index on ties
        if dist[far] < sep:
            break
        chosen.append(far)
        dist = np.minimum(dist, np.abs(pts - pts[far]))
    return [int(idx[c]) for c in chosen]


def build(
    mu: DiscreteMeasure,
    c0: float = 2.0,
    a0: float = 8.0,
    k_max: int | None = None,
    separation: float = DEFAULT_SEPARATION,
    doubling_constant: float = DEFAULT_DOUBLING_CONSTANT,
) -> Lattice:
    """Build the cube hierarchy down to single-atom cells (or ``k_max``)."""
    if len(mu) == 0:
        raise ValueError("cannot build a lattice on the empty measure")
    if not (a0 > c0 > 1):
        raise ValueError("need a0 > c0 > 1")
    rescale = mu.diameter if mu.diameter > 0 else 1.0
    if k_max is not None and len(mu) > 1:
        if separation * a0 ** (-k_max) * rescale < mu.scale:
            raise ValueError("k_max probes below the discretization scale")

    pts = mu.points
    n = len(mu)
    # root: center minimizing the maximal member distance, ties lowest index
    if n == 1:
        root_center_idx = 0
        max_dist = 0.0
    else:
        dmat = np.abs(pts[:, None] - pts[None, :])
        worst = dmat.max(axis=1)
        root_center_idx = int(np.argmin(worst))
        max_dist = float(worst[root_center_idx])
    r_root = min(c0, max(1.0, (max_dist / rescale) * (1 + 1e-9)))
    cubes: list[Cube] = [
        Cube(0, 0, complex(pts[root_center_idx]), r_root * rescale,
             np.arange(n), None)
    ]
    levels: list[list[int]] = [[0]]

    k = 0
    while True:
        prev = levels[-1]
        if all(cubes[q].n_members == 1 for q in prev):
            break
        if k_max is not None and k >= k_max:
            break
        k += 1
        sep = separation * a0 ** (-k) * rescale
        radius = a0 ** (-k) * rescale
        new_level: list[int] = []
        for pid in prev:
            parent = cubes[pid]
            midx = parent.members
            net = _greedy_net(pts, midx, sep)
            centers = pts[np.array(net)]
            # nearest net point, ties to the lowest net atom index
            d = np.abs(pts[midx][:, None] - centers[None, :])
            assign = np.argmin(d, axis=1)
            for ci, atom in enumerate(net):
                cell = midx[assign == ci]
                cid = len(cubes)
                cubes.append(
                    Cube(cid, k, complex(pts[atom]), radius, np.sort(cell), pid)
                )
                parent.children.append(cid)
                new_level.append(cid)
        levels.append(new_level)

    lattice = Lattice(
        mu, c0, a0, separation, doubling_constant, rescale, cubes, levels, {}
    )
    for q in cubes:
        q.doubling = _doubling_raw(lattice, q.id)
    lattice.report = _build_report(lattice)
    return lattice


def _doubling_raw(lattice: Lattice, qid: int) -> bool:
    mu = lattice.mu
    b = lattice.ball(qid)
    return mu.mass_in(b.scaled(100)) <= lattice.doubling_constant * mu.mass_in(b)


def doubling_check(lattice: Lattice, qid: int) -> bool:
    """Re-evaluate the doubling inequality and refresh the cube flag."""
    flag = _doubling_raw(lattice, qid)
    lattice.cubes[qid].doubling = flag
    return flag


def _build_report(lattice: Lattice) -> dict:
    mu = lattice.mu
    report = {
        "sibling_5b_violations": [],
        "level_5b_violations": [],
        "core_ball_leaks": [],
        "member_radius_violations": [],
        "n_cubes": len(lattice.cubes),
        "n_levels": len(lattice.levels),
    }
    for lvl in lattice.levels:
        for qid in lvl:
            q = lattice.cubes[qid]
            pts = mu.points[q.members]
            if pts.size and np.max(np.abs(pts - q.center)) > BIG_BALL_FACTOR * q.radius:
                report["member_radius_violations"].append(qid)
            inside = np.flatnonzero(np.abs(mu.points - q.center) < q.radius)
            if not np.all(np.isin(inside, q.members)):
                report["core_ball_leaks"].append(qid)
        for i, a in enumerate(lvl):
            for b in lvl[i + 1 :]:
                qa, qb = lattice.cubes[a], lattice.cubes[b]
                if abs(qa.center - qb.center) < 5 * (qa.radius + qb.radius):
                    report["level_5b_violations"].append((a, b))
                    if qa.parent == qb.parent:
                        report["sibling_5b_violations"].append((a, b))
    return report


def maximal_doubling(lattice: Lattice, qid: int) -> list[int]:
    """Maximal doubling cubes inside ``qid`` (including itself)."""
    out: list[int] = []
    stack = [qid]
    while stack:
        cur = stack.pop()
        if lattice.cubes[cur].doubling:
            out.append(cur)
        else:
            stack.extend(lattice.cubes[cur].children)
    return sorted(out)


def doubling_coverage(lattice: Lattice, qid: int) -> float:
    """Mass fraction of ``qid`` covered by its maximal doubling cubes."""
    total = lattice.mass(qid)
    if total == 0:
        return 1.0
    covered = sum(lattice.mass(q) for q in maximal_doubling(lattice, qid))
    return covered / total


def first_doubling_ancestor(lattice: Lattice, qid: int) -> int:
    cur: int | None = qid
    while cur is not None:
        if lattice.cubes[cur].doubling:
            return cur
        cur = lattice.cubes[cur].parent
    raise ValueError("no doubling ancestor (the root is not doubling)")


def density_chain_report(lattice: Lattice, qid: int, pid: int) -> dict:
    """Densities of the 100-fold balls along a chain of non-doubling
    intermediate cubes, with the summed-density ratio to the top cube."""
    chain = lattice.chain(qid, pid)
    for mid in chain[1:-1]:
        if lattice.cubes[mid].doubling:
            raise ValueError(f"intermediate cube {mid} is doubling")
    thetas = [
        lattice.theta(lattice.ball(c).scaled(100)) for c in chain
    ]
    theta_top = thetas[-1]
    level_gap = lattice.cubes[qid].level - lattice.cubes[pid].level
    mass_q = lattice.mu.mass_in(lattice.ball(qid).scaled(100))
    mass_p = lattice.mu.mass_in(lattice.ball(pid).scaled(100))
    bound_rhs = lattice.a0 ** (-20 * (level_gap - 1)) * mass_p
    return {
        "chain": chain,
        "thetas": thetas,
        "sum_thetas": deterministic_sum(thetas),
        "ratio": deterministic_sum(thetas) / theta_top if theta_top > 0 else np.inf,
        "mass_bound_lhs": mass_q,
        "mass_bound_rhs": bound_rhs,
        "mass_bound_holds": mass_q <= bound_rhs,
    }


def small_boundary_report(lattice: Lattice, qid: int, l: int) -> dict:
    """Masses of the interior/exterior collars of width A0^(-k-l) and the
    reference bound with unit implicit constant.  Diagnostic only: atomic
    measures generically violate the bound at fine l."""
    if l < 0:
        raise ValueError("l must be >= 0")
    mu = lattice.mu
    q = lattice.cubes[qid]
    width = lattice.a0 ** (-(q.level + l)) * lattice.rescale
    below_resolution = width < mu.scale
    inside = np.zeros(len(mu), dtype=bool)
    inside[q.members] = True
    pts_in = mu.points[inside]
    pts_out = mu.points[~inside]
    if pts_in.size and pts_out.size:
        cross = np.abs(pts_out[:, None] - pts_in[None, :])
        ext_mass = float(mu.weights[~inside][cross.min(axis=1) < width].sum())
        int_mass = float(mu.weights[inside][cross.min(axis=0) < width].sum())
    else:
        ext_mass = 0.0
        int_mass = 0.0
    rhs_base = lattice.c0 ** (-7) * lattice.a0  # unit implicit constant
    rhs = rhs_base ** (-l) * mu.mass_in(lattice.ball(qid).scaled(90))
    return {
        "cube": qid,
        "l": l,
        "width": width,
        "ext_mass": ext_mass,
        "int_mass": int_mass,
        "bound_rhs": rhs,
        "holds": ext_mass + int_mass <= rhs,
        "below_resolution": below_resolution,
    }


def delta_mu(lattice: Lattice, qid: int, tid: int) -> float:
    """Weighted sum of reciprocal distances to the small cube's center over
    the annulus between the doubled companion balls."""
    if not lattice.is_ancestor(tid, qid):
        raise ValueError("second cube must contain the first")
    mu = lattice.mu
    z_q = lattice.cubes[qid].center
    outer = lattice.big_ball(tid, 2.0)
    inner = lattice.big_ball(qid, 2.0)
    d_out = np.abs(mu.points - outer.center)
    d_in = np.abs(mu.points - inner.center)
    in_annulus = (d_out < outer.radius) & ~(d_in < inner.radius)
    if not np.any(in_annulus):
        return 0.0
    dist = np.abs(mu.points[in_annulus] - z_q)
    return deterministic_sum(mu.weights[in_annulus] / dist)
