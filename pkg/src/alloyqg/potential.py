"""Alloy-type random potentials ``W(omega) = sum_e omega_e u_e``.

Single-site profiles and coupling densities are piecewise constant, stored as
``(start, stop, value)`` segments.  Sampling draws one coupling per edge by
inverting the piecewise-linear CDF, consuming uniforms in canonical edge order
from a generator keyed by ``(master_seed, index)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Hashable, Optional

import numpy as np

from .errors import (
    AlloyConfigError,
    CoordinateOutOfRange,
    MissingEdgeEntry,
    ProfileOutOfBounds,
    SupportTooShort,
)

_TOL = 1e-12


def _segments(segs):
    out = tuple((float(a), float(b), float(v)) for a, b, v in segs)
    for a, b, _ in out:
        if not b > a:
            raise AlloyConfigError(f"segment [{a}, {b}] is empty")
    return tuple(sorted(out))


@dataclass(frozen=True)
class SingleSitePotential:
    """Piecewise-constant ``u_e`` on ``[0, l_e]``; zero off its segments.

    ``edge`` is None for a template shared by every edge of a lattice.
    """

    edge: Optional[Hashable]
    support: tuple
    segments: tuple
    c_minus: float
    c_plus: float

    def __post_init__(self):
        object.__setattr__(self, "support", (float(self.support[0]), float(self.support[1])))
        object.__setattr__(self, "segments", _segments(self.segments))

    @classmethod
    def full_edge(cls, edge, length, value=1.0):
        return cls(edge, (0.0, length), ((0.0, length, value),), value, value)

    @classmethod
    def indicator(cls, edge, a, b, value=1.0):
        return cls(edge, (a, b), ((a, b, value),), value, value)

    @property
    def support_length(self) -> float:
        return self.support[1] - self.support[0]

    def breakpoints(self) -> list:
        pts = {self.support[0], self.support[1]}
        for a, b, _ in self.segments:
            pts.update((a, b))
        return sorted(pts)

    def __call__(self, x: float) -> float:
        for i, (a, b, v) in enumerate(self.segments):
            last = i == len(self.segments) - 1
            if a <= x < b or (last and x == b):
                return v
        return 0.0

    def sup(self) -> float:
        return max((abs(v) for _, _, v in self.segments), default=0.0)


@dataclass(frozen=True)
class CouplingLaw:
    """Law of one coupling constant on ``[omega_minus, omega_plus]``.

    ``omega_minus == omega_plus`` is accepted as a frozen (point-mass) law for
    deterministic reference runs; it is not absolutely continuous.
    """

    omega_minus: float
    omega_plus: float
    density: tuple = ()
    c_g: float = float("inf")

    def __post_init__(self):
        if self.omega_minus > self.omega_plus:
            raise AlloyConfigError("omega_minus > omega_plus")
        dens = self.density
        if not dens and not self.degenerate:
            width = self.omega_plus - self.omega_minus
            dens = ((self.omega_minus, self.omega_plus, 1.0 / width),)
        object.__setattr__(self, "density", _segments(dens) if dens else ())
        if self.c_g == float("inf") and self.density:
            object.__setattr__(self, "c_g", max(v for _, _, v in self.density))

    @classmethod
    def uniform(cls, omega_minus=0.0, omega_plus=1.0):
        return cls(omega_minus, omega_plus)

    @property
    def degenerate(self) -> bool:
        return self.omega_minus == self.omega_plus

    def problems(self) -> list:
        out = []
        if self.degenerate:
            return out
        mass = 0.0
        for a, b, v in self.density:
            if a < self.omega_minus - _TOL or b > self.omega_plus + _TOL:
                out.append(AlloyConfigError(f"density segment [{a}, {b}] outside the coupling range"))
            if v < 0 or v > self.c_g + _TOL:
                out.append(AlloyConfigError(f"density value {v} outside [0, c_g={self.c_g}]"))
            mass += (b - a) * v
        if abs(mass - 1.0) > 1e-9:
            out.append(AlloyConfigError(f"density integrates to {mass}, not 1"))
        return out

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        if self.degenerate:
            return (t >= self.omega_minus).astype(float)
        out = np.zeros_like(t)
        for a, b, v in self.density:
            out += v * (np.clip(t, a, b) - a)
        return out

    def mean(self) -> float:
        if self.degenerate:
            return self.omega_minus
        return sum(v * (b * b - a * a) / 2 for a, b, v in self.density)

    def inverse_cdf(self, u):
        u = np.asarray(u, dtype=float)
        if self.degenerate:
            return np.full_like(u, self.omega_minus)
        segs = [(a, b, v) for a, b, v in self.density if v > 0]
        masses = np.array([(b - a) * v for a, b, v in segs])
        cum = np.concatenate([[0.0], np.cumsum(masses)])
        u = u * cum[-1]
        k = np.clip(np.searchsorted(cum, u, side="right") - 1, 0, len(segs) - 1)
        starts = np.array([a for a, _, _ in segs])
        dens = np.array([v for _, _, v in segs])
        x = starts[k] + (u - cum[k]) / dens[k]
        return np.clip(x, self.omega_minus, self.omega_plus)


@dataclass(frozen=True)
class AlloyConfig:
    """Single-site potentials and coupling laws for a family of edges.

    ``sites`` maps edge id to its potential.  Edges without an entry fall back
    to ``template``; with ``default_sites`` set they get ``u_e = 1`` on the
    whole edge.  ``edge_laws`` overrides ``law`` per edge.
    """

    law: CouplingLaw
    s: float
    sites: dict = field(default_factory=dict)
    template: Optional[SingleSitePotential] = None
    default_sites: bool = False
    edge_laws: dict = field(default_factory=dict)

    @classmethod
    def default(cls, law=None):
        return cls(law or CouplingLaw.uniform(), s=0.0, default_sites=True)

    def has_site(self, edge_id) -> bool:
        return edge_id in self.sites or self.template is not None or self.default_sites

    def site(self, edge) -> SingleSitePotential:
        if edge.id in self.sites:
            return self.sites[edge.id]
        if self.template is not None:
            return replace(self.template, edge=edge.id)
        if self.default_sites:
            return SingleSitePotential.full_edge(edge.id, edge.length)
        raise MissingEdgeEntry(f"no single-site potential for edge {edge.id!r}")

    def law_for(self, edge_id) -> CouplingLaw:
        return self.edge_laws.get(edge_id, self.law)

    def c_plus(self, view=None) -> float:
        if view is not None:
            return max(self.site(e).c_plus for e in view.edges)
        vals = [u.c_plus for u in self.sites.values()]
        if self.template is not None:
            vals.append(self.template.c_plus)
        if self.default_sites:
            vals.append(1.0)
        return max(vals)

    def potential_bound(self, view=None) -> float:
        """``K = max(|omega_-|, |omega_+|) * c_+``."""
        laws = [self.law, *self.edge_laws.values()]
        w = max(max(abs(l.omega_minus), abs(l.omega_plus)) for l in laws)
        return w * self.c_plus(view)


@dataclass
class ValidationReport:
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations

    def raise_first(self):
        if self.violations:
            raise self.violations[0]


def validate_alloy_config(config: AlloyConfig, view) -> ValidationReport:
    bad = []
    for law in {id(l): l for l in [config.law, *config.edge_laws.values()]}.values():
        bad.extend(law.problems())
    for e in view.edges:
        if not config.has_site(e.id):
            bad.append(MissingEdgeEntry(f"no single-site potential for edge {e.id!r}"))
            continue
        u = config.site(e)
        a, b = u.support
        if not u.c_minus > 0 or u.c_plus < u.c_minus:
            bad.append(ProfileOutOfBounds(
                f"edge {e.id!r}: need c_plus >= c_minus > 0, got {u.c_minus}, {u.c_plus}"))
        if a < -_TOL or b > e.length + _TOL or b < a:
            bad.append(ProfileOutOfBounds(f"edge {e.id!r}: support [{a}, {b}] not inside [0, {e.length}]"))
        if u.support_length < config.s - _TOL:
            bad.append(SupportTooShort(f"edge {e.id!r}: |S_e| = {u.support_length} < s = {config.s}"))
        for lo, hi, v in u.segments:
            if lo < -_TOL or hi > e.length + _TOL:
                bad.append(ProfileOutOfBounds(f"edge {e.id!r}: segment [{lo}, {hi}] leaves the edge"))
            if v < 0 or v > u.c_plus + _TOL:
                bad.append(ProfileOutOfBounds(f"edge {e.id!r}: profile value {v} outside [0, {u.c_plus}]"))
        # profile >= c_minus on the support: check every piece between breakpoints
        pts = [p for p in u.breakpoints() if a <= p <= b]
        for lo, hi in zip(pts[:-1], pts[1:]):
            if hi - lo > _TOL and u((lo + hi) / 2) < u.c_minus - _TOL:
                bad.append(ProfileOutOfBounds(
                    f"edge {e.id!r}: profile below c_minus = {u.c_minus} on [{lo}, {hi}]"))
                break
    return ValidationReport(bad)


@dataclass(frozen=True)
class DisorderSample:
    omega: dict
    seed: Optional[tuple] = None

    def __getitem__(self, edge_id) -> float:
        return self.omega[edge_id]

    def with_value(self, edge_id, value) -> "DisorderSample":
        om = dict(self.omega)
        om[edge_id] = float(value)
        return DisorderSample(om, None)


def sample_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(master_seed), int(index)])))


def sample_disorder(config: AlloyConfig, view, master_seed: int, index: int) -> DisorderSample:
    rng = sample_rng(master_seed, index)
    ids = view.edge_ids
    u = rng.random(len(ids))
    omega = {}
    for eid, ui in zip(ids, u):
        omega[eid] = float(config.law_for(eid).inverse_cdf(ui))
    return DisorderSample(omega, (int(master_seed), int(index)))


def constant_sample(view, value: float) -> DisorderSample:
    return DisorderSample({eid: float(value) for eid in view.edge_ids})


def potential_value(config: AlloyConfig, sample: DisorderSample, edge, x: float) -> float:
    if x < 0 or x > edge.length:
        raise CoordinateOutOfRange(f"x = {x} outside [0, {edge.length}] on edge {edge.id!r}")
    return sample[edge.id] * config.site(edge)(x)


# -- file format ------------------------------------------------------------

def _segs_from_json(items):
    return [(d["from"], d["to"], d["value"]) for d in items]


def _site_from_json(d, edge=None):
    return SingleSitePotential(edge, tuple(d["support"]), _segs_from_json(d["profile"]),
                               float(d["c_minus"]), float(d["c_plus"]))


def alloy_from_dict(doc: dict) -> AlloyConfig:
    ld = doc["law"]
    law = CouplingLaw(float(ld["omega_minus"]), float(ld["omega_plus"]),
                      tuple(_segs_from_json(ld.get("density", []))),
                      float(ld.get("c_g", float("inf"))))
    sites = doc.get("sites", "default")
    s = float(doc.get("s", 0.0))
    if sites == "default":
        return AlloyConfig(law, s, default_sites=True)
    if isinstance(sites, dict) and "template" in sites:
        return AlloyConfig(law, s, template=_site_from_json(sites["template"]))
    table = {str(d["edge"]): _site_from_json(d, str(d["edge"])) for d in sites}
    return AlloyConfig(law, s, sites=table)


def load_alloy(path) -> AlloyConfig:
    with open(path) as fh:
        return alloy_from_dict(json.load(fh))
