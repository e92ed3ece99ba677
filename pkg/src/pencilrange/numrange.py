"""Rectangular numerical range of a matrix pencil (A, B).

For rectangular A, B of equal shape the two-norm numerical range is

    W(A; B) = { theta : ||A - lam*B||_2 >= |theta - lam| for every lam },

an intersection of disks D(lam, ||A - lam*B||_2) over the complex plane.
It is nonempty only when ||B||_2 >= 1, which is why pencils get scaled
before any query.  Membership of a point theta reduces to the sign of

    delta = inf_lam  ||A - lam*B||_2 - |theta - lam|,

a global minimization this module performs with a coarse polar grid plus
simplex refinement of the best seeds.  A closed-form Frobenius-norm disk
that always contains W(A; B) provides the cheap pre-test, and two boundary
tracers (one for the classical square-matrix range, one polygonal
over-approximation of W itself) support plotting and cross-checks.

Delta values reported here are achieved function values, so a negative
delta certifies theta outside W; 'inside' verdicts rest on the grid plus
refinement having located the global minimum.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ._svd import _as_matrix, compress_rows, pencil_sigma_batch, spectral_norm
from .errors import NumericError
from .pencil import PencilPair, build_block_hankel
from .signal import Signal

__all__ = [
    "FrobeniusDisk",
    "MembershipConfig",
    "MembershipResult",
    "GridField",
    "ensure_scaled",
    "frobenius_disk",
    "frobenius_disk_from_signal",
    "membership",
    "membership_many",
    "g_map",
    "mpm_eigenvalues",
    "classical_range_boundary",
    "rect_range_boundary",
]

VERDICT_INSIDE = "inside"
VERDICT_OUTSIDE = "outside"
VERDICT_BOUNDARY = "boundary"

STAGE_DISK = "disk-reject"
STAGE_TWO_NORM = "two-norm"


@dataclass
class FrobeniusDisk:
    """Closed disk |z - center| <= radius in the complex plane."""

    center: complex
    radius: float

    def contains(self, z: complex, tol: float = 0.0) -> bool:
        return abs(z - self.center) <= self.radius + tol


@dataclass
class MembershipConfig:
    """Tuning knobs for the membership search.

    radial/angular set the coarse polar grid density, seeds the number of
    grid minima refined by the simplex stage, refine_tol its geometric
    stopping size.  radius_override replaces the derived search radius.
    """

    radial: int = 18
    angular: int = 36
    seeds: int = 8
    refine_tol: float = 1e-9
    max_refine_iter: int = 250
    radius_override: float | None = None


@dataclass
class MembershipResult:
    theta: complex
    delta: float
    lambda_star: complex
    verdict: str
    stage: str = STAGE_TWO_NORM
    search_radius: float = 0.0
    bound_type: str = "derived"

    @property
    def is_member(self) -> bool:
        """Boundary verdicts count as members."""
        return self.verdict != VERDICT_OUTSIDE


@dataclass
class GridField:
    """Scalar field sampled on a cartesian grid; values[i, j] belongs to
    the point re_axis[i] + 1j * im_axis[j]."""

    re_axis: np.ndarray
    im_axis: np.ndarray
    values: np.ndarray


def ensure_scaled(pair: PencilPair, D: float = 2.0) -> PencilPair:
    """Return a pencil with ||B||_2 >= 1, scaling both halves if needed.

    A pencil already satisfying the bound is returned as-is.  Otherwise both
    halves are multiplied by D / ||B||_2 with D > 1, which leaves the
    generalized eigenvalues untouched and makes the numerical range nonempty.
    """
    if not D > 1.0:
        raise ValueError(f"D must be > 1, got {D}")
    norm_b = spectral_norm(pair.b)
    if norm_b >= 1.0:
        return pair
    if norm_b == 0.0:
        raise NumericError("cannot scale a pencil with B = 0")
    alpha = D / norm_b
    return PencilPair(
        pair.a * alpha,
        pair.b * alpha,
        s=pair.s,
        n=pair.n,
        K=pair.K,
        scale=pair.scale * alpha,
    )


def frobenius_disk(pair: PencilPair) -> FrobeniusDisk:
    """Disk guaranteed to contain the two-norm numerical range.

    center = <A, B> / ||B||_F^2 with <A, B> = trace(B^H A), and

    radius = ||A - center*B||_F * sqrt(||B||_F^2 - 1) / ||B||_F.

    Requires ||B||_F >= 1; run ensure_scaled first when in doubt.
    """
    a = _as_matrix(pair.a)
    b = _as_matrix(pair.b)
    bf2 = float(np.vdot(b, b).real)
    if bf2 < 1.0:
        raise NumericError(f"||B||_F = {np.sqrt(bf2):.3g} < 1: disk undefined; scale the pencil first")
    center = complex(np.vdot(b, a) / bf2)
    radius = float(np.linalg.norm(a - center * b) * np.sqrt((bf2 - 1.0) / bf2))
    return FrobeniusDisk(center, radius)


def frobenius_disk_from_signal(signal: Signal, s: int, n: int) -> FrobeniusDisk:
    """The same disk computed straight from the samples.

    Writing eta_d for the number of block positions on the d-th
    anti-diagonal of either pencil half, the matrix inner products collapse
    to weighted sums over consecutive vector samples:

        S1 = sum_d eta_d ||y_d||^2          (= ||B||_F^2)
        Sc = sum_d eta_d  y_d^H y_{d+1}     (= <A, B>)
        S2 = sum_d eta_d ||y_{d+1}||^2      (= ||A||_F^2)

    giving center = Sc / S1 and
    radius = sqrt(S2 - |Sc|^2 / S1) * sqrt((S1 - 1) / S1).
    """
    if s < 1 or n < 1:
        raise ValueError(f"s and n must be >= 1, got s={s}, n={n}")
    if signal.T < s + n:
        raise ValueError(f"need s+n={s + n} samples, signal has T={signal.T}")
    y = signal.samples[: s + n]
    d = np.arange(s + n - 1)
    eta = np.minimum(d, s - 1) - np.maximum(0, d - (n - 1)) + 1
    norms2 = np.sum(np.abs(y) ** 2, axis=1)
    inner = np.sum(np.conj(y[:-1]) * y[1:], axis=1)
    s1 = float(np.dot(eta, norms2[:-1]))
    s2 = float(np.dot(eta, norms2[1:]))
    sc = complex(np.dot(eta, inner))
    if s1 < 1.0:
        raise NumericError(f"||B||_F^2 = {s1:.3g} < 1: disk undefined; scale the signal first")
    center = sc / s1
    radius = float(np.sqrt(max(s2 - abs(sc) ** 2 / s1, 0.0)) * np.sqrt((s1 - 1.0) / s1))
    return FrobeniusDisk(center, radius)


# ---------------------------------------------------------------------------
# Membership: sign of inf_lam ||A - lam*B||_2 - |theta - lam|.


@dataclass
class _PreparedPencil:
    a: np.ndarray
    b: np.ndarray
    norm_a: float
    norm_b: float
    smin_b: float
    tol: float


def _prepare(pair: PencilPair) -> _PreparedPencil:
    a, b = compress_rows(pair.a, pair.b)
    norm_b = float(np.linalg.svd(b, compute_uv=False)[0])
    if norm_b < 1.0 - 1e-12:
        raise NumericError(f"||B||_2 = {norm_b:.6g} < 1: scale the pencil before membership queries")
    norm_a = float(np.linalg.svd(a, compute_uv=False)[0])
    smin_b = float(np.linalg.svd(b, compute_uv=False)[-1])
    return _PreparedPencil(a, b, norm_a, norm_b, smin_b, tol=1e-7 * (1.0 + norm_a))


def _search_radius(prep: _PreparedPencil, theta_abs: float, cfg: MembershipConfig) -> tuple[float, str]:
    """Radius such that every lam with f_theta(lam) < 0 satisfies |lam| <= R.

    The spectral norm dominates the scaled term: ||A - lam*B||_2 >=
    |lam| ||B||_2 - ||A||_2, so with |theta - lam| <= |theta| + |lam| any
    lam achieving f_theta < 0 has |lam| < (||A||_2 + |theta|)/(||B||_2 - 1)
    whenever ||B||_2 > 1.  At ||B||_2 = 1 the growth rate vanishes and a
    generous heuristic takes over.
    """
    if cfg.radius_override is not None:
        return float(cfg.radius_override), "override"
    if prep.norm_b > 1.0 + 1e-9:
        return (prep.norm_a + theta_abs) / (prep.norm_b - 1.0), "derived"
    return 4.0 * (prep.norm_a + theta_abs) + 1.0, "heuristic"


def _coarse_grid(R: float, cfg: MembershipConfig) -> tuple[np.ndarray, np.ndarray]:
    """Polar grid on |lam| <= R plus the origin, with a per-point cell size.

    Radii are quadratically spaced so the region near the origin, where the
    minima of interest concentrate for scaled pencils, is sampled densely.
    """
    idx = np.arange(1, cfg.radial + 1, dtype=np.float64)
    radii = R * (idx / cfg.radial) ** 2
    angles = np.exp(2j * np.pi * np.arange(cfg.angular) / cfg.angular)
    pts = (radii[:, None] * angles[None, :]).ravel()
    gaps = np.diff(radii, prepend=0.0)
    arc = radii * (2.0 * np.pi / cfg.angular)
    cell = np.repeat(np.maximum(gaps, arc), cfg.angular)
    return np.concatenate([[0.0 + 0.0j], pts]), np.concatenate([[radii[0]], cell])


def _pick_seeds(fvals: np.ndarray, pts: np.ndarray, cell: np.ndarray, k: int) -> list[int]:
    """Indices of the k best grid values, skipping same-cell duplicates."""
    order = np.argsort(fvals)[: max(6 * k, 24)]
    kept: list[int] = []
    for i in order:
        if len(kept) == k:
            break
        if all(abs(pts[i] - pts[j]) > 0.75 * max(cell[i], cell[j]) for j in kept):
            kept.append(int(i))
    return kept


def _nelder_mead_batch(eval_rows, seeds_xy, scales, xatol, maxiter):
    """Minimize many 2-d functions in lockstep with one simplex per row.

    eval_rows(rows, pts) evaluates the function attached to each row index
    at the (len(rows), 2) points.  Returns best points and values.
    """
    n = seeds_xy.shape[0]
    sim = np.repeat(seeds_xy[:, None, :], 3, axis=1)
    sim[:, 1, 0] += scales
    sim[:, 2, 1] += scales
    rows3 = np.repeat(np.arange(n), 3)
    vals = eval_rows(rows3, sim.reshape(-1, 2)).reshape(n, 3)
    active = np.ones(n, dtype=bool)

    for _ in range(maxiter):
        order = np.argsort(vals, axis=1)
        vals = np.take_along_axis(vals, order, axis=1)
        sim = np.take_along_axis(sim, order[:, :, None], axis=1)

        diam = np.maximum(
            np.hypot(*(sim[:, 1] - sim[:, 0]).T), np.hypot(*(sim[:, 2] - sim[:, 0]).T)
        )
        active &= diam > xatol
        act = np.flatnonzero(active)
        if act.size == 0:
            break

        best, second, worst = vals[act, 0], vals[act, 1], vals[act, 2]
        centroid = sim[act, :2].mean(axis=1)
        xr = 2.0 * centroid - sim[act, 2]
        fr = eval_rows(act, xr)

        expand = fr < best
        if np.any(expand):
            sub = act[expand]
            xe = 3.0 * centroid[expand] - 2.0 * sim[sub, 2]
            fe = eval_rows(sub, xe)
            take_e = fe < fr[expand]
            new_x = np.where(take_e[:, None], xe, xr[expand])
            new_f = np.where(take_e, fe, fr[expand])
            sim[sub, 2] = new_x
            vals[sub, 2] = new_f

        reflect = (~expand) & (fr < second)
        if np.any(reflect):
            sub = act[reflect]
            sim[sub, 2] = xr[reflect]
            vals[sub, 2] = fr[reflect]

        contract = (~expand) & (~reflect)
        if np.any(contract):
            sub = act[contract]
            out_mask = fr[contract] < worst[contract]
            base = np.where(out_mask[:, None], xr[contract], sim[sub, 2])
            xc = 0.5 * (centroid[contract] + base)
            fc = eval_rows(sub, xc)
            limit = np.where(out_mask, fr[contract], worst[contract])
            accept = fc <= limit
            good = sub[accept]
            sim[good, 2] = xc[accept]
            vals[good, 2] = fc[accept]
            shrink = sub[~accept]
            if shrink.size:
                sim[shrink, 1] = 0.5 * (sim[shrink, 0] + sim[shrink, 1])
                sim[shrink, 2] = 0.5 * (sim[shrink, 0] + sim[shrink, 2])
                rows2 = np.repeat(shrink, 2)
                vals[shrink, 1:] = eval_rows(rows2, sim[shrink, 1:].reshape(-1, 2)).reshape(-1, 2)

    order = np.argsort(vals, axis=1)
    vals = np.take_along_axis(vals, order, axis=1)
    sim = np.take_along_axis(sim, order[:, :, None], axis=1)
    return sim[:, 0, :], vals[:, 0]


def _verdict(delta: float, tol: float) -> str:
    if delta < -tol:
        return VERDICT_OUTSIDE
    if delta <= tol:
        return VERDICT_BOUNDARY
    return VERDICT_INSIDE


def membership_many(
    pair: PencilPair, thetas, cfg: MembershipConfig | None = None
) -> list[MembershipResult]:
    """Membership test for many candidate points against one pencil.

    Identical contract to calling membership() per point, but the spectral
    norms on the coarse grid are shared across candidates, which is where
    nearly all the work lives.  The shared grid spans the largest search
    radius among the candidates; every candidate's own certified region is
    therefore covered.
    """
    cfg = cfg or MembershipConfig()
    prep = _prepare(pair)
    thetas = np.asarray(thetas, dtype=np.complex128).ravel()
    if thetas.size == 0:
        return []

    per_theta = [_search_radius(prep, abs(t), cfg) for t in thetas]
    r_shared = max(r for r, _ in per_theta)
    pts, cell = _coarse_grid(r_shared, cfg)
    svals = pencil_sigma_batch(prep.a, prep.b, pts, which="max")

    # a decisively negative grid value already certifies 'outside'; only the
    # best seed is then refined (for delta), saving the other simplex runs
    decisive = max(1e-4 * (1.0 + prep.norm_a), 50.0 * prep.tol)

    seed_rows: list[int] = []
    seed_pts: list[complex] = []
    seed_cells: list[float] = []
    for i, theta in enumerate(thetas):
        f = svals - np.abs(theta - pts)
        take = 1 if f.min() < -decisive else cfg.seeds
        for j in _pick_seeds(f, pts, cell, take):
            seed_rows.append(i)
            seed_pts.append(complex(pts[j]))
            seed_cells.append(float(cell[j]))

    seed_rows_arr = np.asarray(seed_rows)
    seed_theta = thetas[seed_rows_arr]

    def eval_rows(rows, xy):
        lam = xy[:, 0] + 1j * xy[:, 1]
        s = pencil_sigma_batch(prep.a, prep.b, lam, which="max")
        return s - np.abs(seed_theta[rows] - lam)

    seeds_xy = np.column_stack(
        [np.real(np.asarray(seed_pts)), np.imag(np.asarray(seed_pts))]
    )
    best_xy, best_val = _nelder_mead_batch(
        eval_rows,
        seeds_xy,
        0.5 * np.asarray(seed_cells),
        xatol=cfg.refine_tol,
        maxiter=cfg.max_refine_iter,
    )

    results = []
    for i, theta in enumerate(thetas):
        mine = np.flatnonzero(seed_rows_arr == i)
        j = mine[np.argmin(best_val[mine])]
        delta = float(best_val[j])
        lam_star = complex(best_xy[j, 0], best_xy[j, 1])
        radius, bound = per_theta[i]
        results.append(
            MembershipResult(
                theta=complex(theta),
                delta=delta,
                lambda_star=lam_star,
                verdict=_verdict(delta, prep.tol),
                stage=STAGE_TWO_NORM,
                search_radius=radius,
                bound_type=bound,
            )
        )
    return results


def membership(
    pair: PencilPair, theta: complex, cfg: MembershipConfig | None = None
) -> MembershipResult:
    """Decide whether theta lies in the two-norm numerical range of the pencil.

    delta is the smallest value of ||A - lam*B||_2 - |theta - lam| found by
    the coarse grid plus simplex refinement; its sign gives the verdict,
    with |delta| <= 1e-7 * (1 + ||A||_2) reported as a boundary case (and
    treated as membership downstream).  Deterministic for a fixed config.
    """
    return membership_many(pair, [theta], cfg)[0]


def g_map(pair: PencilPair, re_axis, im_axis) -> GridField:
    """Smallest singular value of A - lam*B over a cartesian grid of lam."""
    re_axis = np.asarray(re_axis, dtype=np.float64).ravel()
    im_axis = np.asarray(im_axis, dtype=np.float64).ravel()
    if re_axis.size == 0 or im_axis.size == 0:
        raise ValueError("grid axes must be nonempty")
    if np.any(np.diff(re_axis) <= 0) or np.any(np.diff(im_axis) <= 0):
        raise ValueError("grid axes must be strictly increasing")
    a, b = compress_rows(pair.a, pair.b)
    lam = re_axis[:, None] + 1j * im_axis[None, :]
    vals = pencil_sigma_batch(a, b, lam.ravel(), which="min").reshape(lam.shape)
    return GridField(re_axis=re_axis, im_axis=im_axis, values=vals)


def _equilibrate_pair(a: np.ndarray, b: np.ndarray, passes: int = 2):
    """Joint diagonal row/column scaling of (A, B).

    Both matrices receive the same invertible scalings D1 (rows) and
    D2 (columns), so the pencil D1 (A - lam B) D2 drops rank at exactly
    the same lam as A - lam B.  Balancing the row and column norms keeps
    tiny-but-informative singular directions from drowning in roundoff
    when the mode cluster makes B badly conditioned.
    """
    a = a.copy()
    b = b.copy()
    for _ in range(passes):
        row = np.sqrt(
            np.linalg.norm(a, axis=1) ** 2 + np.linalg.norm(b, axis=1) ** 2
        )
        row[row == 0] = 1.0
        a /= row[:, None]
        b /= row[:, None]
        col = np.sqrt(
            np.linalg.norm(a, axis=0) ** 2 + np.linalg.norm(b, axis=0) ** 2
        )
        col[col == 0] = 1.0
        a /= col[None, :]
        b /= col[None, :]
    return a, b


def mpm_eigenvalues(pair: PencilPair, rcond: float = 1e-10) -> np.ndarray:
    """Eigenvalues of pinv(B) @ A, the matrix-pencil frequency estimates.

    The evaluation equilibrates the pair with diagonal scalings (which
    leave the pencil eigenvalues unchanged) and solves the reduced r x r
    problem on the numerical row/column space of B, where r is the rank
    at relative threshold ``rcond``.  The remaining n - r eigenvalues of
    pinv(B) @ A are zeros and are returned as such; a rank-deficient B is
    additionally reported with a warning, because those padded zeros are
    artifacts of the pseudoinverse rather than signal frequencies.
    """
    a = _as_matrix(pair.a)
    b = _as_matrix(pair.b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: A {a.shape} vs B {b.shape}")
    n = b.shape[1]
    ae, be = _equilibrate_pair(a, b)
    u, sv, vh = np.linalg.svd(be, full_matrices=False)
    rank = int(np.sum(sv > rcond * sv[0])) if sv[0] > 0 else 0
    if rank < n:
        warnings.warn(
            "B is numerically rank-deficient; spurious eigenvalues may appear",
            stacklevel=2,
        )
    if rank == 0:
        return np.zeros(n, dtype=np.complex128)
    reduced = (u[:, :rank].conj().T @ ae @ vh[:rank].conj().T) / sv[:rank, None]
    eigs = np.linalg.eigvals(reduced)
    if rank < n:
        eigs = np.concatenate([eigs, np.zeros(n - rank, dtype=np.complex128)])
    return eigs


def classical_range_boundary(mat, n_angles: int = 256) -> np.ndarray:
    """Boundary points of the classical numerical range of a square matrix.

    For each rotation angle the extreme eigenvector of the Hermitian part of
    e^{-i phi} M gives one boundary point x^H M x; the returned points trace
    the convex boundary counterclockwise.
    """
    m = _as_matrix(mat)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix must be square, got {m.shape}")
    if n_angles < 3:
        raise ValueError("need at least 3 angles")
    pts = np.empty(n_angles, dtype=np.complex128)
    for k in range(n_angles):
        phi = 2.0 * np.pi * k / n_angles
        rotated = np.exp(-1j * phi) * m
        herm = 0.5 * (rotated + rotated.conj().T)
        _, vecs = np.linalg.eigh(herm)
        x = vecs[:, -1]
        pts[k] = complex(x.conj() @ m @ x)
    return pts


def rect_range_boundary(
    pair: PencilPair,
    area_tol: float = 0.01,
    max_rounds: int = 7,
    quad_segs: int = 64,
) -> np.ndarray:
    """Polygonal over-approximation of the two-norm numerical range.

    Intersects the disks D(lam, ||A - lam*B||_2) for lam on successively
    denser rings around the Frobenius-disk center until the polygon area
    changes by less than area_tol (relative).  The Frobenius disk itself
    joins the intersection, so the polygon always sits inside it while
    containing the true range.  An empty intersection returns an empty
    array.  membership() stays authoritative for point decisions.
    """
    from shapely.geometry import Point

    prep = _prepare(pair)
    disk = frobenius_disk(pair)

    # circumscribe: the buffer polygon is inscribed in the circle, so grow
    # the radius enough that the polygon still covers the true disk
    grow = 1.0 / np.cos(np.pi / (4.0 * quad_segs)) + 1e-12

    def disk_poly(center: complex, radius: float):
        pad = 1e-12 * (1.0 + abs(center))
        return Point(center.real, center.imag).buffer(radius * grow + pad, quad_segs=quad_segs)

    region = disk_poly(disk.center, disk.radius)
    scale = max(disk.radius, 1e-6 * (1.0 + abs(disk.center)))
    prev_area = region.area
    for round_no in range(max_rounds):
        n_ang = 8 * 2**round_no
        offset = np.pi / n_ang * (round_no % 2)
        angles = 2.0 * np.pi * np.arange(n_ang) / n_ang + offset
        rings = np.concatenate(
            [[0.0], scale * np.array([0.5, 1.0, 2.0, 4.0])]
        ) if round_no == 0 else scale * np.array([0.5, 1.0, 2.0, 4.0])
        lams = (disk.center + np.outer(rings, np.exp(1j * angles))).ravel()
        svals = pencil_sigma_batch(prep.a, prep.b, lams, which="max")
        for lam, s in zip(lams, svals):
            region = region.intersection(disk_poly(complex(lam), float(s)))
            if region.is_empty:
                return np.empty(0, dtype=np.complex128)
        area = region.area
        if prev_area > 0 and (prev_area - area) / prev_area < area_tol and round_no > 0:
            break
        prev_area = area
    if region.is_empty or region.area == 0.0:
        return np.empty(0, dtype=np.complex128)
    if region.geom_type != "Polygon":
        region = max(region.geoms, key=lambda g: g.area)
    xy = np.asarray(region.exterior.coords)[:-1]
    return xy[:, 0] + 1j * xy[:, 1]
