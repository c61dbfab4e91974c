"""Potentials ``psi_s = -g_r(s) tau_min h - s log|T'|`` and their building blocks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import expr as _expr
from .cf import as_word, cylinder, last_convergent, _log_int
from .growth import g

KINDS = ("const", "logT", "logB", "expr")

DEFAULT_TAU_GRID = 10_001


@dataclass(frozen=True)
class FunctionSpec:
    """A user function of ``x`` on [0, 1].

    ``kind`` is one of ``const`` (value c), ``logT`` (h = log|T'| = -2 log x,
    kept symbolic so anchors use the exact identity), ``logB`` (the constant
    log B) or ``expr`` (parsed expression).
    """

    kind: str
    value: float = 0.0
    node: Optional[object] = field(default=None, compare=False)
    source: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown function kind {self.kind!r}")

    @property
    def constant_value(self) -> Optional[float]:
        if self.kind == "const":
            return self.value
        if self.kind == "logB":
            return math.log(self.value)
        return None

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "logT":
            with np.errstate(divide="ignore"):
                return -2.0 * np.log(x)
        c = self.constant_value
        if c is not None:
            return np.full(x.shape, c)
        return _expr.evaluate(self.node, x)

    def descriptor(self) -> str:
        if self.kind == "logT":
            return "logT"
        if self.kind == "logB":
            return f"logB:{self.value!r}"
        if self.kind == "const":
            return f"const:{self.value!r}"
        return f"expr:{self.source}"


def parse_function(src: str) -> FunctionSpec:
    """Parse an expression in ``x`` into a :class:`FunctionSpec`."""
    node = _expr.parse(src)
    return FunctionSpec("expr", node=node, source=src)


def constant(c: float) -> FunctionSpec:
    return FunctionSpec("const", float(c))


def log_derivative() -> FunctionSpec:
    return FunctionSpec("logT")


def log_constant(B: float) -> FunctionSpec:
    if not B > 1:
        raise ValueError("log B needs B > 1")
    return FunctionSpec("logB", float(B))


def parse_descriptor(text: str) -> FunctionSpec:
    """Parse a CLI descriptor: ``logT``, ``logB:3``, ``const:0.5``, ``expr:...``."""
    text = text.strip()
    if text == "logT":
        return log_derivative()
    kind, sep, rest = text.partition(":")
    if not sep:
        raise ValueError(f"bad function descriptor {text!r}")
    if kind == "logB":
        return log_constant(float(rest))
    if kind == "const":
        return constant(float(rest))
    if kind == "expr":
        return parse_function(rest)
    raise ValueError(f"bad function descriptor {text!r}")


def _interior_grid(n: int) -> np.ndarray:
    return (np.arange(n) + 0.5) / n


def validate(spec: FunctionSpec, role: str, grid_size: int = 1001) -> None:
    """Check the sign requirement for a role (``"h"``: > 0, ``"tau"``: >= 0)."""
    if role not in ("h", "tau"):
        raise ValueError("role must be 'h' or 'tau'")
    if spec.kind == "logT":
        if role == "tau":
            raise ValueError("logT is unbounded and cannot be used as tau")
        return
    xs = _interior_grid(grid_size)
    vals = spec(xs)
    if not np.all(np.isfinite(vals)):
        i = int(np.argmax(~np.isfinite(vals)))
        raise ValueError(f"{role} is not finite at x = {xs[i]}")
    if role == "h" and np.any(vals <= 0):
        i = int(np.argmax(vals <= 0))
        raise ValueError(f"h must be positive, h({xs[i]}) = {vals[i]}")
    if role == "tau" and np.any(vals < 0):
        i = int(np.argmax(vals < 0))
        raise ValueError(f"tau must be non-negative, tau({xs[i]}) = {vals[i]}")


def tau_min(spec: FunctionSpec, grid_size: int = DEFAULT_TAU_GRID) -> tuple[float, float, float]:
    """Minimum of ``spec`` over a uniform closed grid on [0, 1].

    Returns
    -------
    value, argmin, spacing
        The grid minimum, where it occurred, and the grid spacing, so the
        caller knows how coarse the estimate is.
    """
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    c = spec.constant_value
    if c is not None:
        return c, 0.0, 1.0 / (grid_size - 1)
    if spec.kind == "logT":
        raise ValueError("logT has no minimum to extract on [0, 1] (it is 0 at 1, infinite at 0)")
    xs = np.linspace(0.0, 1.0, grid_size)
    vals = spec(xs)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ValueError(f"tau is not finite at grid point x = {xs[i]}")
    i = int(np.argmin(vals))
    return float(vals[i]), float(xs[i]), 1.0 / (grid_size - 1)


def orbit(w: Sequence[int]) -> list[Fraction]:
    """Exact Gauss orbit ``z, Tz, ..., T^{n-1} z`` of the anchor ``z = [w]``."""
    pts = []
    x = Fraction(0)
    for a in reversed(w):
        x = 1 / (a + x)
        pts.append(x)
    pts.reverse()
    return pts


def ergodic_sum(f: FunctionSpec, w: Sequence[int]) -> float:
    """``S_n f(z)`` at the anchor ``z = p_n/q_n`` of ``w``.

    ``logT`` uses ``S_n log|T'|(z) = 2 log q_n``; constants give ``n c``;
    expressions are summed along the exact rational orbit.
    """
    w = as_word(w)
    if not w:
        raise ValueError("ergodic_sum needs a nonempty word")
    if f.kind == "logT":
        return 2.0 * _log_int(last_convergent(w).q)
    c = f.constant_value
    if c is not None:
        return len(w) * c
    pts = np.array([float(p) for p in orbit(w)])
    vals = f(pts)
    if not np.all(np.isfinite(vals)):
        raise ValueError("function is not finite along the orbit")
    return float(math.fsum(vals))


@dataclass(frozen=True)
class PotentialSpec:
    """Data for ``psi_s(x) = -g_r(s) tau_min h(x) - s log|T'(x)|``."""

    r: int
    tau: FunctionSpec
    h: FunctionSpec
    tau_min: float
    tau_argmin: float = 0.0
    tau_grid: int = DEFAULT_TAU_GRID

    @property
    def separable(self) -> Optional[str]:
        """How ``S_n h`` at anchors depends on the word.

        ``"q"`` when it is a multiple of ``log q_n``, ``"n"`` when it only
        depends on the length, ``None`` otherwise.
        """
        if self.h.kind == "logT":
            return "q"
        if self.h.constant_value is not None:
            return "n"
        return None

    def coefficient(self, s: float) -> float:
        """The weight ``g_r(s) tau_min`` in front of ``S_n h``."""
        return g(self.r, s) * self.tau_min

    def describe(self) -> dict:
        return {
            "r": self.r,
            "tau": self.tau.descriptor(),
            "h": self.h.descriptor(),
            "tau_min": self.tau_min,
            "tau_grid": self.tau_grid,
        }


def make_potential(r: int, tau, h, grid_size: int = DEFAULT_TAU_GRID) -> PotentialSpec:
    """Build a :class:`PotentialSpec`; ``tau``/``h`` may be specs, numbers or descriptors."""
    if int(r) != r or r < 1:
        raise ValueError("r must be a positive integer")
    tau = _coerce(tau)
    h = _coerce(h)
    validate(tau, "tau")
    validate(h, "h")
    value, where, _ = tau_min(tau, grid_size)
    return PotentialSpec(int(r), tau, h, value, where, grid_size)


def _coerce(f) -> FunctionSpec:
    if isinstance(f, FunctionSpec):
        return f
    if isinstance(f, (int, float)):
        return constant(f)
    return parse_descriptor(str(f))


def psi_eval(pspec: PotentialSpec, s: float, w: Sequence[int]) -> float:
    """``S_n psi_s(z) = -g_r(s) tau_min S_n h(z) - 2 s log q_n`` at the anchor of ``w``."""
    w = as_word(w)
    coef = pspec.coefficient(s)
    sh = ergodic_sum(pspec.h, w) if coef != 0.0 else 0.0
    return -coef * sh - 2.0 * s * _log_int(last_convergent(w).q)


@dataclass
class VariationReport:
    depths: list
    variations: list
    tempered: bool
    samples: int
    cylinders: list

    def as_dict(self) -> dict:
        return {
            "depths": self.depths,
            "variations": self.variations,
            "tempered": self.tempered,
            "samples_per_cylinder": self.samples,
            "cylinders": self.cylinders,
        }


def variation_profile(
    f: FunctionSpec,
    depth: int,
    samples_per_cylinder: int = 8,
    alphabet: Sequence[int] = (1, 2, 3, 4),
    seed: int = 0,
) -> VariationReport:
    """Estimate ``Var_n(f)`` for n = 1..depth over cylinders of a finite alphabet.

    Each cylinder is probed at both endpoints plus uniform interior samples,
    so the values are lower estimates of the true suprema. The number of
    probes is reported alongside.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    rng = np.random.default_rng(seed)
    alphabet = tuple(sorted(set(int(a) for a in alphabet)))
    words = [()]
    depths, variations, counts = [], [], []
    for n in range(1, depth + 1):
        words = [w + (a,) for w in words for a in alphabet]
        lo = np.array([float(cylinder(w).lo) for w in words])
        hi = np.array([float(cylinder(w).hi) for w in words])
        u = rng.random((len(words), samples_per_cylinder))
        pts = np.concatenate([lo[:, None], hi[:, None], lo[:, None] + u * (hi - lo)[:, None]], axis=1)
        # the 0 endpoint is only reachable for the empty word; guard anyway
        pts = np.clip(pts, np.nextafter(0.0, 1.0), 1.0)
        vals = f(pts)
        osc = np.nanmax(vals, axis=1) - np.nanmin(vals, axis=1)
        depths.append(n)
        variations.append(float(np.max(osc)))
        counts.append(len(words))
    v = np.array(variations)
    finite = bool(np.isfinite(v[0]))
    decaying = bool(v[-1] <= v[0] and (len(v) < 2 or v[-1] <= 0.5 * v[0] + 1e-15))
    return VariationReport(depths, variations, finite and decaying, samples_per_cylinder, counts)
