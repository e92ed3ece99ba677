"""Acceptance gate: nine end-to-end checks with pinned tolerances and budgets.

Each test prints one ``ACCEPTANCE k: PASS|FAIL`` line with the measured
numbers, then asserts.  Heavy Monte Carlo inputs are shared through
module-scoped fixtures so the whole gate stays inside its runtime budgets.

Check 08b encodes an equal-performance expectation between the membership
classifier and the projection baseline at low SNR that this implementation
does not reproduce: at and below the noise floor the membership test accepts
nearly every candidate while the residual comparison sits near a coin flip.
The test reports the measured gap instead of widening the tolerance, so it
is expected to fail; the analysis lives alongside the test body.
"""

from __future__ import annotations

import time
import warnings

import numpy as np
import pytest
from scipy.optimize import minimize
from shapely.geometry import Point, Polygon

from pencilrange.classify import CrnrConfig, disk_geometry_sweep, error_rate_sweep
from pencilrange.fixtures import load_class
from pencilrange.numrange import (
    MembershipConfig,
    classical_range_boundary,
    ensure_scaled,
    frobenius_disk,
    frobenius_disk_from_signal,
    g_map,
    membership,
    membership_many,
    mpm_eigenvalues,
)
from pencilrange.pencil import (
    PencilPair,
    build_block_hankel,
    cadzow_denoise,
    hankel_singular_values,
    split_pencil,
)
from pencilrange.signal import Mode, Signal, add_awgn, synth_mixture

SEED = 20260816


def _report(tag: str, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {tag}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{tag}: {detail}"


def _uniform_disk(rng: np.random.Generator, count: int) -> np.ndarray:
    return np.sqrt(rng.random(count)) * np.exp(2j * np.pi * rng.random(count))


def _unit_residue_signal(class_name: str, T: int) -> Signal:
    cls = load_class(class_name)
    return synth_mixture([Mode(z, np.ones(1)) for z in cls.freqs], T)


# ---------------------------------------------------------------------------
# 1. rank identity of the noiseless block-Hankel matrix


def test_01_rank_identity_on_random_mixtures():
    rng = np.random.default_rng(SEED + 1)
    t0 = time.monotonic()
    worst = 0.0
    for _ in range(50):
        m = int(rng.integers(1, 11))
        n = int(rng.integers(m, m + 8))
        s = int(rng.integers(n + m, n + m + 8))
        zs = _uniform_disk(rng, m)
        residues = (0.5 + rng.random(m)) * np.exp(2j * np.pi * rng.random(m))
        sig = synth_mixture([Mode(z, np.atleast_1d(c)) for z, c in zip(zs, residues)], s + n)
        sv = hankel_singular_values(build_block_hankel(sig, s, n))
        worst = max(worst, float(sv[m] / sv[0]))
    elapsed = time.monotonic() - t0
    _report(
        "01 rank identity",
        worst < 1e-8 and elapsed < 10.0,
        f"worst sigma_(M+1)/sigma_1 = {worst:.2e} over 50 mixtures, {elapsed:.1f} s",
    )


# ---------------------------------------------------------------------------
# 2. noiseless eigenvalue recovery on the first bundled class


def test_02_noiseless_eigenvalue_recovery():
    t0 = time.monotonic()
    cls = load_class("z1")
    sig = _unit_residue_signal("z1", 60)
    denoised = cadzow_denoise(build_block_hankel(sig, 40, 20), 10)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        eigs = mpm_eigenvalues(split_pencil(denoised.hankel))
    worst = max(float(np.min(np.abs(eigs - z))) for z in cls.freqs)
    elapsed = time.monotonic() - t0
    _report(
        "02 eigenvalue recovery",
        eigs.size >= len(cls) and worst <= 1e-6 and elapsed < 5.0,
        f"worst nearest-neighbor error {worst:.2e} across {len(cls)} frequencies, {elapsed:.1f} s",
    )


# ---------------------------------------------------------------------------
# 3. closed-form disk from samples equals the matrix form


def test_03_disk_closed_form_matches_matrix_form():
    rng = np.random.default_rng(SEED + 3)
    t0 = time.monotonic()
    worst = 0.0
    for trial in range(100):
        k = 1 if trial % 2 == 0 else 3
        T = int(rng.integers(12, 31))
        samples = (rng.standard_normal((T, k)) + 1j * rng.standard_normal((T, k))) / np.sqrt(2.0)
        sig = Signal(samples)
        n = int(rng.integers(1, T // 2))
        s = T - n
        direct = frobenius_disk_from_signal(sig, s, n)
        via_matrix = frobenius_disk(split_pencil(build_block_hankel(sig, s, n)))
        scale = abs(via_matrix.center) + via_matrix.radius
        err = (
            abs(direct.center - via_matrix.center) + abs(direct.radius - via_matrix.radius)
        ) / scale
        worst = max(worst, err)
    elapsed = time.monotonic() - t0
    _report(
        "03 disk closed form",
        worst < 1e-10 and elapsed < 5.0,
        f"worst relative deviation {worst:.2e} over 100 signals, {elapsed:.1f} s",
    )


# ---------------------------------------------------------------------------
# 4 + 5. shared battery: 20 random scaled pencils, dense-lambda oracle,
# containment chain data.  The oracle reproduces the membership functional
# f_theta(lam) = ||A - lam B||_2 - |theta - lam| on a 100k-point random
# cloud inside the certified search radius, then polishes every near-zero
# cell with a local simplex search so the comparison is settled by values,
# not by grid luck.


@pytest.fixture(scope="module")
def pencil_battery():
    rng = np.random.default_rng(SEED)
    cfg = MembershipConfig()
    cloud_size = 100_000
    battery = {
        "pairs": [],
        "disks": [],
        "thetas": [],
        "results": [],
        "brute": [],
        "tols": [],
        "unit_results": [],
        "polygons": [],
    }
    t_oracle = 0.0

    for _ in range(20):
        a = rng.standard_normal((6, 4)) + 1j * rng.standard_normal((6, 4))
        b = rng.standard_normal((6, 4)) + 1j * rng.standard_normal((6, 4))
        pair = ensure_scaled(PencilPair(a, b, 6, 4, 1), 2.0)
        disk = frobenius_disk(pair)
        half = 1.5 * disk.radius
        res = np.linspace(disk.center.real - half, disk.center.real + half, 41)
        ims = np.linspace(disk.center.imag - half, disk.center.imag + half, 41)
        thetas = (res[:, None] + 1j * ims[None, :]).ravel()

        t0 = time.monotonic()
        results = membership_many(pair, thetas, cfg)

        norm_a = float(np.linalg.norm(pair.a, 2))
        norm_b = float(np.linalg.norm(pair.b, 2))
        tol = 1e-7 * (1.0 + norm_a)
        radius = max((norm_a + abs(t)) / (norm_b - 1.0) for t in thetas)
        u = rng.random(cloud_size)
        phi = rng.random(cloud_size) * 2 * np.pi
        lams = radius * np.sqrt(u) * np.exp(1j * phi)
        sv = np.linalg.svd(
            pair.a[None] - lams[:, None, None] * pair.b[None], compute_uv=False
        )[:, 0]
        brute = np.full(thetas.size, np.inf)
        argmin = np.zeros(thetas.size, dtype=int)
        for k in range(0, cloud_size, 10_000):
            d = sv[None, k : k + 10_000] - np.abs(thetas[:, None] - lams[None, k : k + 10_000])
            chunk_min = d.min(axis=1)
            better = chunk_min < brute
            argmin[better] = k + d.argmin(axis=1)[better]
            brute = np.minimum(brute, chunk_min)

        def f_of(theta):
            def f(xy):
                lam = complex(xy[0], xy[1])
                return float(
                    np.linalg.svd(pair.a - lam * pair.b, compute_uv=False)[0]
                ) - abs(theta - lam)

            return f

        for i in np.flatnonzero(np.abs(brute) < 0.02):
            start = lams[argmin[i]]
            opt = minimize(
                f_of(thetas[i]),
                [start.real, start.imag],
                method="Nelder-Mead",
                options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 400},
            )
            brute[i] = min(brute[i], float(opt.fun))
        t_oracle += time.monotonic() - t0

        unit = PencilPair(pair.a / norm_b, pair.b / norm_b, pair.s, pair.n, pair.K)
        polygon = Polygon(
            [(p.real, p.imag) for p in classical_range_boundary(np.linalg.pinv(unit.b) @ unit.a)]
        ).buffer(1e-6)

        battery["pairs"].append(pair)
        battery["disks"].append(disk)
        battery["thetas"].append(thetas)
        battery["results"].append(results)
        battery["brute"].append(brute)
        battery["tols"].append(tol)
        battery["unit_results"].append(membership_many(unit, thetas, cfg))
        battery["polygons"].append(polygon)

    battery["t_oracle"] = t_oracle
    return battery


def test_04_membership_matches_dense_lambda_oracle(pencil_battery):
    total = disagreements = 0
    worst = 0.0
    for results, brute, tol in zip(
        pencil_battery["results"], pencil_battery["brute"], pencil_battery["tols"]
    ):
        member = np.array([r.is_member for r in results])
        oracle_member = brute >= -tol
        deltas = np.minimum(np.array([r.delta for r in results]), brute)
        disagree = member != oracle_member
        total += member.size
        disagreements += int(disagree.sum())
        if disagree.any():
            worst = max(worst, float(np.abs(deltas[disagree]).max()))
    agreement = 1.0 - disagreements / total
    elapsed = pencil_battery["t_oracle"]
    _report(
        "04 membership vs brute force",
        agreement >= 0.995 and (disagreements == 0 or worst < 1e-5) and elapsed < 120.0,
        f"{agreement:.4%} agreement over {total} cells, {disagreements} disagreements"
        f" (worst |delta| {worst:.2e}), oracle {elapsed:.1f} s",
    )


def test_05_containment_chain(pencil_battery):
    inside_scaled = disk_violations = 0
    for results, disk in zip(pencil_battery["results"], pencil_battery["disks"]):
        for r in results:
            if r.is_member:
                inside_scaled += 1
                if abs(r.theta - disk.center) > disk.radius + 1e-8:
                    disk_violations += 1

    inside_unit = polygon_violations = 0
    for results, polygon in zip(pencil_battery["unit_results"], pencil_battery["polygons"]):
        for r in results:
            if r.is_member:
                inside_unit += 1
                if not polygon.contains(Point(r.theta.real, r.theta.imag)):
                    polygon_violations += 1

    # Random rectangular pencils brought down to spectral norm 1 have an
    # essentially empty two-norm range (every grid point earns an exact
    # negative certificate), which would leave the polygon check vacuous.
    # A planted family with an eigenvector along the top right-singular
    # direction of B guarantees members at norm 1, so the check has teeth.
    rng = np.random.default_rng(SEED + 5)
    planted_inside = 0
    for _ in range(20):
        b = rng.standard_normal((6, 4)) + 1j * rng.standard_normal((6, 4))
        b = b / np.linalg.norm(b, 2)
        v1 = np.linalg.svd(b)[2][0].conj()
        basis = np.column_stack([v1, rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))])
        eigs = _uniform_disk(rng, 4)
        g = basis @ np.diag(eigs) @ np.linalg.inv(basis)
        pair = PencilPair(b @ g, b, 6, 4, 1)
        result = membership(pair, eigs[0])
        polygon = Polygon(
            [(p.real, p.imag) for p in classical_range_boundary(np.linalg.pinv(b) @ (b @ g))]
        ).buffer(1e-6)
        if result.is_member:
            planted_inside += 1
            if not polygon.contains(Point(eigs[0].real, eigs[0].imag)):
                polygon_violations += 1

    _report(
        "05 containment chain",
        disk_violations == 0 and polygon_violations == 0 and planted_inside == 20,
        f"disk bound: {inside_scaled} members, {disk_violations} violations; "
        f"norm-1 polygon: {inside_unit} grid + {planted_inside} planted members, "
        f"{polygon_violations} violations",
    )


# ---------------------------------------------------------------------------
# 6. planted generalized eigenpairs must be accepted


def test_06_planted_eigenpairs_accepted():
    rng = np.random.default_rng(SEED + 6)
    checked = violations = 0
    for _ in range(200):
        rows = int(rng.integers(5, 9))
        cols = int(rng.integers(3, rows))
        b = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
        g = rng.standard_normal((cols, cols)) + 1j * rng.standard_normal((cols, cols))
        eigvals, eigvecs = np.linalg.eig(g)
        thetas = []
        for i in range(cols):
            x = eigvecs[:, i] / np.linalg.norm(eigvecs[:, i])
            if np.linalg.norm(b @ x) >= 1.0 + 1e-9:
                thetas.append(eigvals[i])
        if not thetas:
            continue
        results = membership_many(PencilPair(b @ g, b, rows, cols, 1), thetas)
        checked += len(results)
        violations += sum(not r.is_member for r in results)
    _report(
        "06 planted eigenpairs",
        checked > 0 and violations == 0,
        f"{checked} eigenpairs with ||Bx|| >= 1 across 200 pencils, {violations} rejections",
    )


# ---------------------------------------------------------------------------
# 7. disk geometry versus SNR


@pytest.fixture(scope="module")
def disk_trends():
    cfg = CrnrConfig(s=40, n=20, order=10)
    t0 = time.monotonic()
    report = disk_geometry_sweep(load_class("z1"), [0.0, 10.0, 20.0, 30.0], 500, cfg, seed=SEED)
    elapsed = time.monotonic() - t0
    clean = frobenius_disk_from_signal(_unit_residue_signal("z1", 60), 40, 20)
    return {"report": report, "elapsed": elapsed, "clean": clean}


def test_07_disk_geometry_trends(disk_trends):
    report = disk_trends["report"]
    raw = report.disk_radius_mean["raw"]
    cad = report.disk_radius_mean["cadzow"]
    monotone = all(raw[i + 1] <= raw[i] + 1e-12 for i in range(len(raw) - 1))
    denoised_tighter = all(c <= r + 1e-12 for c, r in zip(cad, raw))
    clean = disk_trends["clean"]
    center_err = abs(report.disk_center_mean["cadzow"][-1] - clean.center) / abs(clean.center)
    elapsed = disk_trends["elapsed"]
    _report(
        "07 disk trends",
        monotone and denoised_tighter and center_err <= 0.05 and elapsed < 600.0,
        f"raw radii {[round(v, 3) for v in raw]}, denoised {[round(v, 3) for v in cad]}, "
        f"30 dB center error {center_err:.4f}, {elapsed:.0f} s",
    )


# ---------------------------------------------------------------------------
# 8. classification error-rate trends, shared across the three sub-checks


SNR_GRID = [-5.0, 0.0, 5.0, 10.0, 15.0, 20.0]


@pytest.fixture(scope="module")
def class_sweeps():
    z1 = load_class("z1")
    z2 = load_class("z2")
    light = MembershipConfig(radial=12, angular=24, seeds=4)
    t0 = time.monotonic()
    known = error_rate_sweep(
        z1, z2, SNR_GRID, 500, CrnrConfig(s=40, n=20, order=10, membership=light), seed=SEED
    )
    estimated = error_rate_sweep(
        z1, z2, SNR_GRID, 500, CrnrConfig(s=40, n=20, order=None, membership=light), seed=SEED
    )
    elapsed = time.monotonic() - t0
    return {"known": known, "estimated": estimated, "elapsed": elapsed}


def test_08a_error_rate_monotone_in_snr(class_sweeps):
    rates = class_sweeps["known"].error_rate["crnr"]
    rises = [rates[i + 1] - rates[i] for i in range(len(rates) - 1) if rates[i + 1] > rates[i]]
    elapsed = class_sweeps["elapsed"]
    _report(
        "08a error rate monotone",
        len(rises) <= 1 and all(r <= 0.02 for r in rises) and elapsed < 1800.0,
        f"rates {rates}, {len(rises)} inversions {[round(r, 4) for r in rises]}, "
        f"both sweeps {elapsed:.0f} s",
    )


def test_08b_known_order_matches_projection_baseline_at_low_snr(class_sweeps):
    # Designed-red analysis: with the class geometry bundled here, the
    # membership classifier accepts nearly every candidate at and below the
    # noise floor (error rate close to 1 at -5 and 0 dB) while the projection
    # baseline compares two residuals and stays near 0.5 regardless of SNR.
    # The measured gap is therefore around 0.5-0.6, far above the 0.05 band
    # this check pins.  The tolerance is kept as pinned rather than widened
    # to fit; the numbers below document the actual behavior.
    crnr = class_sweeps["known"].error_rate["crnr"]
    glrt = class_sweeps["known"].error_rate["glrt"]
    gap = max(abs(crnr[i] - glrt[i]) for i in range(2))
    _report(
        "08b low-SNR gap vs baseline",
        gap <= 0.05,
        f"crnr {crnr[:2]} vs baseline {glrt[:2]} at -5/0 dB, gap {gap:.3f} (band 0.05)",
    )


def test_08c_estimated_order_beats_projection_baseline(class_sweeps):
    crnr = class_sweeps["estimated"].error_rate["crnr"]
    glrt = class_sweeps["estimated"].error_rate["glrt"]
    high = [i for i, snr in enumerate(SNR_GRID) if snr >= 10.0]
    ok = all(crnr[i] <= glrt[i] + 1e-12 for i in high)
    _report(
        "08c estimated order comparison",
        ok,
        f"crnr {[crnr[i] for i in high]} vs baseline {[glrt[i] for i in high]} at >= 10 dB",
    )


# ---------------------------------------------------------------------------
# 9. eigenvalue landscape map: minima sit on the true modes


def test_09_mode_map_minima_at_true_modes():
    t0 = time.monotonic()
    cls = load_class("four_mode")
    sig = _unit_residue_signal("four_mode", 36)
    axis = np.linspace(-1.0, 1.0, 41)
    field = g_map(split_pencil(build_block_hankel(sig, 32, 4)), axis, axis)

    mode_cells = {
        (int(np.argmin(np.abs(axis - z.real))), int(np.argmin(np.abs(axis - z.imag))))
        for z in cls.freqs
    }
    flat_order = np.argsort(field.values, axis=None)
    smallest = {tuple(map(int, np.unravel_index(k, field.values.shape))) for k in flat_order[:4]}
    mode_values = [float(field.values[i, j]) for i, j in mode_cells]

    noisy = add_awgn(sig, 30.0, seed=SEED)
    noisy_field = g_map(split_pencil(build_block_hankel(noisy, 32, 4)), axis, axis)
    noisy_min = float(noisy_field.values.min())
    elapsed = time.monotonic() - t0

    _report(
        "09 mode map",
        smallest == mode_cells
        and all(v < 1e-8 for v in mode_values)
        and noisy_min > 0.0
        and elapsed < 60.0,
        f"four smallest cells {'match' if smallest == mode_cells else 'differ from'} the mode"
        f" cells (values {[f'{v:.1e}' for v in mode_values]}), 30 dB map min {noisy_min:.2e},"
        f" {elapsed:.1f} s",
    )
