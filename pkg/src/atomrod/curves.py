"""Smooth framed curves with closed-form frames and stretch primitives.

Recovery constructions need arc-length parametrised centrelines that are C^3
with C^2 frames; this module provides straight lines, circular arcs and
helices, all with constant curvatures/torsion, exact frames, and the closed
form of s -> integral_0^s R(u) g du used for the axial stretch term.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .discrete_ops import SkewParam
from .errors import ValidationError
from .rod import FramedCurve


@dataclass(frozen=True)
class Line:
    """Straight rod along the first column of a constant frame."""

    frame: np.ndarray = field(default_factory=lambda: np.eye(3))
    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))

    @property
    def params(self) -> SkewParam:
        return SkewParam(0.0, 0.0, 0.0)

    def point(self, s):
        s = np.asarray(s, dtype=float)
        return self.origin + np.multiply.outer(s, self.frame[:, 0])

    def rotation(self, s):
        s = np.asarray(s, dtype=float)
        return np.broadcast_to(self.frame, s.shape + (3, 3)).copy()

    def stretch_primitive(self, s, g) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return np.multiply.outer(s, self.frame @ np.asarray(g, dtype=float))


@dataclass(frozen=True)
class Helix:
    """Arc-length helix of radius r and axial rise h per unit winding length.

    Frenet-framed: constant curvature r / (r^2 + h^2) and torsion
    h / (r^2 + h^2).  ``Arc`` is the planar case h = 0.
    """

    radius: float
    rise: float = 0.0

    def __post_init__(self):
        if self.radius <= 0:
            raise ValidationError("helix radius must be positive")

    @property
    def _w(self) -> float:
        return float(np.hypot(self.radius, self.rise))

    @property
    def params(self) -> SkewParam:
        w2 = self._w**2
        return SkewParam(self.radius / w2, 0.0, self.rise / w2)

    def point(self, s):
        s = np.asarray(s, dtype=float)
        r, h, w = self.radius, self.rise, self._w
        t = s / w
        return np.stack([r * np.cos(t), r * np.sin(t), h * t], axis=-1)

    def rotation(self, s):
        """Frenet frames (tangent | normal | binormal), shape s.shape + (3, 3)."""
        s = np.asarray(s, dtype=float)
        r, h, w = self.radius, self.rise, self._w
        t = s / w
        sin, cos = np.sin(t), np.cos(t)
        tang = np.stack([-r / w * sin, r / w * cos, np.full_like(t, h / w)], axis=-1)
        norm = np.stack([-cos, -sin, np.zeros_like(t)], axis=-1)
        binorm = np.stack([h / w * sin, -h / w * cos, np.full_like(t, r / w)], axis=-1)
        return np.stack([tang, norm, binorm], axis=-1)

    def stretch_primitive(self, s, g) -> np.ndarray:
        """integral_0^s R(u) g du, componentwise closed form."""
        s = np.asarray(s, dtype=float)
        g = np.asarray(g, dtype=float).reshape(3)
        r, h, w = self.radius, self.rise, self._w
        t = s / w
        sin, cos = np.sin(t), np.cos(t)
        # integral of the tangent is the chord: point(s) - point(0)
        int_t = self.point(s) - self.point(0.0)
        int_n = np.stack([-w * sin, w * (cos - 1.0), np.zeros_like(t)], axis=-1)
        int_b = np.stack([h * (1.0 - cos), -h * sin, r * t], axis=-1)
        return g[0] * int_t + g[1] * int_n + g[2] * int_b


def Arc(radius: float) -> Helix:
    """Planar circular arc of the given radius."""
    return Helix(radius=radius, rise=0.0)


def sample_curve(curve, length: float, n: int) -> FramedCurve:
    """Framed curve with n segments sampled from a smooth curve."""
    s = np.linspace(0.0, length, n + 1)
    return FramedCurve(x=s, y=curve.point(s), frames=curve.rotation(s))


def parse_curve(spec: str):
    """Parse 'line', 'arc:R' or 'helix:R,H' command-line curve specifications."""
    text = spec.strip().lower()
    if text == "line":
        return Line()
    if text.startswith("arc:"):
        return Arc(float(text.split(":", 1)[1]))
    if text.startswith("helix:"):
        parts = text.split(":", 1)[1].split(",")
        if len(parts) != 2:
            raise ValidationError("helix spec must be 'helix:radius,rise'")
        return Helix(float(parts[0]), float(parts[1]))
    raise ValidationError(f"unknown curve spec {spec!r}")
