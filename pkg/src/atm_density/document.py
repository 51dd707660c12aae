"""JSON map documents.

A document stores one or more triangular maps (several for a composed
Linear+ATM fit). Reals are written with ``repr`` precision so a round trip
reproduces every coefficient bit for bit.
"""
from __future__ import annotations

import json

import numpy as np

from .basis import FeatureExpansion, check_family
from .data import Standardization
from .multiindex import DownwardClosedSet
from .rectifier import MapComponent, check_g
from .transport import ComposedMap, TriangularMap

FORMAT_VERSION = 1


class DocumentError(ValueError):
    """A map document is malformed or has an unsupported version."""


def _floats(values):
    return [float(v) for v in np.asarray(values, dtype=float).reshape(-1)]


def _stage_to_dict(tmap: TriangularMap) -> dict:
    comps = []
    for i, comp in enumerate(tmap.components):
        comps.append({
            "index": tmap.m_y + i + 1,
            "family": comp.f.family,
            "g": comp.g,
            "quad_tol": comp.quad_tol,
            "features": [{"alpha": [int(a) for a in alpha], "coeff": float(c)}
                         for alpha, c in zip(comp.f.index_set, comp.f.coeffs)],
        })
    return {
        "dimension": tmap.n_inputs,
        "m_y": tmap.m_y,
        "components": comps,
        "standardization": {"mean": _floats(tmap.standardization.mean),
                            "std": _floats(tmap.standardization.std)},
    }


def to_dict(tmap, provenance: dict | None = None) -> dict:
    stages = tmap.stages if isinstance(tmap, ComposedMap) else (tmap,)
    return {
        "version": FORMAT_VERSION,
        "dimension": stages[0].n_inputs,
        "m_y": stages[0].m_y,
        "stages": [_stage_to_dict(s) for s in stages],
        "provenance": provenance or {},
    }


def dumps(tmap, provenance: dict | None = None) -> str:
    return json.dumps(to_dict(tmap, provenance), indent=1, sort_keys=True) + "\n"


def _require(obj, key, kind, where):
    if not isinstance(obj, dict) or key not in obj:
        raise DocumentError(f"{where}: missing field {key!r}")
    val = obj[key]
    if kind is float:
        ok = isinstance(val, (int, float)) and not isinstance(val, bool)
    elif kind is int:
        ok = isinstance(val, int) and not isinstance(val, bool)
    else:
        ok = isinstance(val, kind)
    if not ok:
        raise DocumentError(f"{where}: field {key!r} has the wrong type")
    return val


def _stage_from_dict(doc, where) -> TriangularMap:
    n_inputs = _require(doc, "dimension", int, where)
    m_y = _require(doc, "m_y", int, where)
    if not 0 <= m_y < n_inputs:
        raise DocumentError(f"{where}: invalid conditional split {m_y} for dimension {n_inputs}")
    std_doc = _require(doc, "standardization", dict, where)
    mean = np.array(_require(std_doc, "mean", list, where), dtype=float)
    std = np.array(_require(std_doc, "std", list, where), dtype=float)
    if mean.shape != (n_inputs,) or std.shape != (n_inputs,) or not np.all(std > 0):
        raise DocumentError(f"{where}: standardization does not match dimension {n_inputs}")
    comps_doc = _require(doc, "components", list, where)
    if len(comps_doc) != n_inputs - m_y:
        raise DocumentError(f"{where}: expected {n_inputs - m_y} components, found {len(comps_doc)}")
    comps = []
    for i, cdoc in enumerate(comps_doc):
        cw = f"{where}, component {i + 1}"
        k = _require(cdoc, "index", int, cw)
        if k != m_y + i + 1:
            raise DocumentError(f"{cw}: index {k} out of order")
        try:
            family = check_family(_require(cdoc, "family", str, cw))
            g = check_g(_require(cdoc, "g", str, cw))
        except ValueError as err:
            raise DocumentError(f"{cw}: {err}") from None
        quad_tol = float(cdoc.get("quad_tol", 1e-3))
        alphas, coeffs = [], []
        for feat in _require(cdoc, "features", list, cw):
            alpha = _require(feat, "alpha", list, cw)
            if len(alpha) != k or not all(isinstance(a, int) and not isinstance(a, bool) and a >= 0
                                          for a in alpha):
                raise DocumentError(f"{cw}: bad multi-index {alpha!r}")
            alphas.append(tuple(alpha))
            coeffs.append(float(_require(feat, "coeff", float, cw)))
        try:
            index_set = DownwardClosedSet(k, alphas)
        except ValueError as err:
            raise DocumentError(f"{cw}: {err}") from None
        if len(index_set) != len(alphas):
            raise DocumentError(f"{cw}: duplicate multi-indices")
        order = {a: c for a, c in zip(alphas, coeffs)}
        c = np.array([order[a] for a in index_set], dtype=float)
        try:
            comps.append(MapComponent(FeatureExpansion(index_set, c, family), g, quad_tol))
        except ValueError as err:
            raise DocumentError(f"{cw}: {err}") from None
    return TriangularMap(tuple(comps), Standardization(mean, std), m_y)


def from_dict(doc):
    if not isinstance(doc, dict):
        raise DocumentError("map document must be a JSON object")
    version = _require(doc, "version", int, "document")
    if version != FORMAT_VERSION:
        raise DocumentError(f"unsupported document version {version}")
    stages = _require(doc, "stages", list, "document")
    if not stages:
        raise DocumentError("document has no stages")
    maps = [_stage_from_dict(s, f"stage {i + 1}") for i, s in enumerate(stages)]
    if len(maps) == 1:
        return maps[0]
    for m in maps[1:]:
        if m.m_y or m.n_inputs != maps[0].n_inputs or maps[0].m_y:
            raise DocumentError("composed stages must be joint maps of equal dimension")
    return ComposedMap(tuple(maps))


def loads(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise DocumentError(f"invalid JSON: {err}") from None
    return from_dict(doc)


def save(path, tmap, provenance: dict | None = None):
    with open(path, "w") as fh:
        fh.write(dumps(tmap, provenance))


def load(path):
    with open(path) as fh:
        return loads(fh.read())
