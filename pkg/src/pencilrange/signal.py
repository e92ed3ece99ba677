"""Damped-sinusoid mixtures: containers, synthesis, noise and JSON codecs.

A signal is a length-T sequence of K-dimensional complex samples

    y_t = sum_i c_i * z_i**(t - tau_i)   for t >= tau_i,  else no contribution,

where each mode carries a complex frequency ``z_i``, one residue per look
(``c_i`` is a K-vector) and an integer onset delay ``tau_i``.  The JSON
layout used on disk keeps real and imaginary parts as two-element lists so
files stay diffable and round-trip exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError, SchemaError

__all__ = [
    "Mode",
    "Signal",
    "SignalMeta",
    "CandidateClass",
    "synth_mixture",
    "add_awgn",
    "scale_signal",
    "signal_to_dict",
    "signal_from_dict",
    "signal_to_json",
    "signal_from_json",
    "class_to_dict",
    "class_from_dict",
    "class_to_json",
    "class_from_json",
]


@dataclass
class Mode:
    """One damped complex exponential.

    Args:
        z: complex frequency (pole).
        residues: complex amplitude per look, shape (K,).
        delay: integer onset; samples before it receive no contribution.
    """

    z: complex
    residues: np.ndarray
    delay: int = 0

    def __post_init__(self):
        self.z = complex(self.z)
        self.residues = np.atleast_1d(np.asarray(self.residues, dtype=np.complex128))
        if self.residues.ndim != 1:
            raise ValueError("residues must be a 1-d complex vector")
        self.delay = int(self.delay)
        if self.delay < 0:
            raise ValueError(f"delay must be >= 0, got {self.delay}")


@dataclass
class SignalMeta:
    """Provenance carried alongside the samples (never used by algorithms)."""

    modes: list[Mode] | None = None
    snr_db: float | None = None
    seed: int | None = None
    scale: complex = 1.0 + 0.0j


@dataclass
class Signal:
    """T samples of a K-look signal, samples[t, k] complex."""

    samples: np.ndarray
    meta: SignalMeta = field(default_factory=SignalMeta)

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=np.complex128))
        if self.samples.ndim != 2:
            raise ValueError("samples must have shape (T, K)")

    @property
    def T(self) -> int:
        return self.samples.shape[0]

    @property
    def K(self) -> int:
        return self.samples.shape[1]


@dataclass
class CandidateClass:
    """A named set of pairwise-distinct candidate complex frequencies."""

    name: str
    freqs: np.ndarray

    def __post_init__(self):
        self.freqs = np.atleast_1d(np.asarray(self.freqs, dtype=np.complex128))
        if self.freqs.size < 1:
            raise ValueError("a candidate class needs at least one frequency")
        if len(set(self.freqs.tolist())) != self.freqs.size:
            raise ValueError(f"class {self.name!r} repeats a frequency")

    def __len__(self) -> int:
        return self.freqs.size


def synth_mixture(modes: list[Mode], T: int, K: int = 1) -> Signal:
    """Sum the modes into a noiseless signal of T samples and K looks.

    Every mode's residue vector must have length K.  Contributions start at
    the mode's delay: sample t gets ``c_i * z_i**(t - tau_i)`` once
    ``t >= tau_i`` and nothing before that.
    """
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    samples = np.zeros((T, K), dtype=np.complex128)
    for mode in modes:
        if mode.residues.size != K:
            raise ValueError(
                f"mode at z={mode.z} has {mode.residues.size} residues, expected K={K}"
            )
        if mode.delay >= T:
            continue
        t = np.arange(T - mode.delay)
        samples[mode.delay :, :] += np.power(mode.z, t)[:, None] * mode.residues[None, :]
    return Signal(samples, SignalMeta(modes=[_copy_mode(m) for m in modes]))


def _copy_mode(m: Mode) -> Mode:
    return Mode(m.z, m.residues.copy(), m.delay)


def add_awgn(signal: Signal, snr_db: float, seed: int | None = None) -> Signal:
    """Add circularly-symmetric complex white Gaussian noise at a target SNR.

    The noise variance is set so that the mean squared sample magnitude of
    the *input* over all T*K entries, divided by the per-entry noise
    variance, equals 10**(snr_db / 10).  ``snr_db = math.inf`` is the
    no-noise sentinel and returns an identical copy.  Real and imaginary
    parts each carry half the variance.  Output is deterministic per seed.
    """
    meta = SignalMeta(
        modes=None if signal.meta.modes is None else [_copy_mode(m) for m in signal.meta.modes],
        snr_db=float(snr_db),
        seed=seed,
        scale=signal.meta.scale,
    )
    if math.isinf(snr_db) and snr_db > 0:
        return Signal(signal.samples.copy(), meta)
    power = float(np.mean(np.abs(signal.samples) ** 2))
    if power == 0.0:
        raise NumericError("SNR is undefined for an all-zero signal")
    sigma2 = power / (10.0 ** (snr_db / 10.0))
    rng = np.random.default_rng(seed)
    shape = signal.samples.shape
    noise = rng.normal(scale=np.sqrt(sigma2 / 2.0), size=(2, *shape))
    return Signal(signal.samples + noise[0] + 1j * noise[1], meta)


def scale_signal(signal: Signal, alpha: complex) -> Signal:
    """Multiply every sample by a nonzero complex alpha, tracking it in meta."""
    alpha = complex(alpha)
    if alpha == 0:
        raise ValueError("alpha must be nonzero")
    meta = SignalMeta(
        modes=None if signal.meta.modes is None else [_copy_mode(m) for m in signal.meta.modes],
        snr_db=signal.meta.snr_db,
        seed=signal.meta.seed,
        scale=signal.meta.scale * alpha,
    )
    return Signal(signal.samples * alpha, meta)


# ---------------------------------------------------------------------------
# JSON codecs.  Complex scalars are stored as [re, im]; sample order is
# t-major (t outer loop, look index inner).


def _c2p(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _p2c(pair, where: str) -> complex:
    if (
        not isinstance(pair, (list, tuple))
        or len(pair) != 2
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in pair)
    ):
        raise SchemaError("expected a [re, im] number pair", field=where)
    return complex(pair[0], pair[1])


def signal_to_dict(signal: Signal) -> dict:
    flat = signal.samples.reshape(-1)
    doc = {
        "T": signal.T,
        "K": signal.K,
        "samples": [_c2p(z) for z in flat],
        "meta": None,
    }
    meta = signal.meta
    if meta is not None:
        doc["meta"] = {
            "modes": None
            if meta.modes is None
            else [
                {
                    "z": _c2p(m.z),
                    "residues": [_c2p(c) for c in m.residues],
                    "delay": m.delay,
                }
                for m in meta.modes
            ],
            "snr_db": meta.snr_db,
            "seed": meta.seed,
            "scale": _c2p(meta.scale),
        }
    return doc


def signal_from_dict(doc: dict) -> Signal:
    if not isinstance(doc, dict):
        raise SchemaError("signal document must be a JSON object")
    for key in ("T", "K", "samples"):
        if key not in doc:
            raise SchemaError("missing required key", field=key)
    T, K = doc["T"], doc["K"]
    if not isinstance(T, int) or not isinstance(K, int) or T < 1 or K < 1:
        raise SchemaError("T and K must be positive integers", field="T/K")
    raw = doc["samples"]
    if not isinstance(raw, list) or len(raw) != T * K:
        raise SchemaError(f"expected {T * K} sample pairs, got {len(raw) if isinstance(raw, list) else type(raw).__name__}", field="samples")
    flat = np.array([_p2c(p, f"samples[{i}]") for i, p in enumerate(raw)], dtype=np.complex128)
    meta = SignalMeta()
    m = doc.get("meta")
    if m is not None:
        if not isinstance(m, dict):
            raise SchemaError("must be an object or null", field="meta")
        modes = None
        if m.get("modes") is not None:
            modes = []
            for i, md in enumerate(m["modes"]):
                if not isinstance(md, dict) or "z" not in md or "residues" not in md:
                    raise SchemaError("each mode needs z and residues", field=f"meta.modes[{i}]")
                modes.append(
                    Mode(
                        _p2c(md["z"], f"meta.modes[{i}].z"),
                        [_p2c(c, f"meta.modes[{i}].residues") for c in md["residues"]],
                        md.get("delay", 0),
                    )
                )
        scale = m.get("scale")
        meta = SignalMeta(
            modes=modes,
            snr_db=m.get("snr_db"),
            seed=m.get("seed"),
            scale=1.0 + 0.0j if scale is None else _p2c(scale, "meta.scale"),
        )
    return Signal(flat.reshape(T, K), meta)


def class_to_dict(cls: CandidateClass) -> dict:
    return {"name": cls.name, "freqs": [_c2p(z) for z in cls.freqs]}


def class_from_dict(doc: dict) -> CandidateClass:
    if not isinstance(doc, dict):
        raise SchemaError("class document must be a JSON object")
    if "name" not in doc or "freqs" not in doc:
        raise SchemaError("class file needs 'name' and 'freqs'")
    if not isinstance(doc["name"], str):
        raise SchemaError("must be a string", field="name")
    if not isinstance(doc["freqs"], list) or not doc["freqs"]:
        raise SchemaError("must be a nonempty list", field="freqs")
    freqs = [_p2c(p, f"freqs[{i}]") for i, p in enumerate(doc["freqs"])]
    try:
        return CandidateClass(doc["name"], freqs)
    except ValueError as exc:
        raise SchemaError(str(exc), field="freqs") from exc


def signal_to_json(signal: Signal, indent: int | None = 2) -> str:
    return json.dumps(signal_to_dict(signal), indent=indent)


def signal_from_json(text: str) -> Signal:
    return signal_from_dict(_loads(text))


def class_to_json(cls: CandidateClass, indent: int | None = 2) -> str:
    return json.dumps(class_to_dict(cls), indent=indent)


def class_from_json(text: str) -> CandidateClass:
    return class_from_dict(_loads(text))


def _loads(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
