"""Bundled class files and reference signals used by tests and the CLI."""

from __future__ import annotations

from importlib import resources

from ..signal import CandidateClass, Signal, class_from_json, signal_from_json

__all__ = ["fixture_text", "load_class", "load_signal", "available"]

_CLASSES = ("z1", "z2", "four_mode")
_SIGNALS = ("z1_noiseless_t60",)


def available() -> dict[str, tuple[str, ...]]:
    return {"classes": _CLASSES, "signals": _SIGNALS}


def fixture_text(name: str) -> str:
    path = resources.files(__package__).joinpath(f"{name}.json")
    try:
        return path.read_text()
    except FileNotFoundError:
        raise KeyError(f"no bundled fixture named {name!r}") from None


def load_class(name: str) -> CandidateClass:
    """One of the bundled candidate classes: z1, z2 or four_mode."""
    if name not in _CLASSES:
        raise KeyError(f"unknown class fixture {name!r}; have {_CLASSES}")
    return class_from_json(fixture_text(name))


def load_signal(name: str) -> Signal:
    """One of the bundled signals, e.g. z1_noiseless_t60."""
    if name not in _SIGNALS:
        raise KeyError(f"unknown signal fixture {name!r}; have {_SIGNALS}")
    return signal_from_json(fixture_text(name))
