"""JSON body files: schema, parsing into bodies, and serialisation back.

A file looks like ``{"dim": 2, "bodies": [{"kind": "axis_box", "lo": [0, 0], "hi": [1, 1]}]}``.
Every body may carry ``"errors": {"eps_p": .., "eps_v": .., "eps_s": ..}``.
An optional top-level ``"meta"`` object is ignored by the parser.
"""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema

from .bodies import AffineBody, AxisBox, Ball, Body, BoxBallProduct, CoBox, OracleErrors, make_box_ball
from .exceptions import SpecParseError, UnionVolError
from .weak_oracles import HPolytope

__all__ = ["SCHEMA_VERSION", "BODY_FILE_SCHEMA", "parse_bodies", "load_bodies", "body_to_spec", "dump_bodies"]

SCHEMA_VERSION = 1

_vector = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_box = {
    "type": "object",
    "required": ["lo", "hi"],
    "properties": {"lo": _vector, "hi": _vector},
}
_ball = {
    "type": "object",
    "required": ["center", "radius"],
    "properties": {"center": _vector, "radius": {"type": "number", "exclusiveMinimum": 0}},
}
_errors = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "eps_p": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "eps_v": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "eps_s": {"type": "number", "minimum": 0},
    },
}


def _kind(name, schema):
    return {"if": {"properties": {"kind": {"const": name}}}, "then": schema}


BODY_FILE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["dim", "bodies"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "dim": {"type": "integer", "minimum": 1},
        "bodies": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/body"}},
        "meta": {"type": "object"},
    },
    "additionalProperties": False,
    "$defs": {
        "body": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["axis_box", "ball", "box_ball", "affine", "cobox", "hpolytope"]},
                "errors": _errors,
            },
            "allOf": [
                _kind("axis_box", _box),
                _kind("ball", _ball),
                _kind("box_ball", {
                    "type": "object",
                    "properties": {
                        "box": _box,
                        "ball": _ball,
                        "perm": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                    },
                    "anyOf": [{"required": ["box"]}, {"required": ["ball"]}],
                }),
                _kind("affine", {
                    "type": "object",
                    "required": ["base", "matrix"],
                    "properties": {
                        "base": {"$ref": "#/$defs/body"},
                        "matrix": {"type": "array", "items": _vector, "minItems": 1},
                        "offset": _vector,
                    },
                }),
                _kind("cobox", {
                    "type": "object",
                    "required": ["p"],
                    "properties": {"p": {"type": "array", "minItems": 1,
                                         "items": {"type": "number", "minimum": 0, "maximum": 1}}},
                }),
                _kind("hpolytope", {
                    "type": "object",
                    "required": ["A", "b"],
                    "properties": {
                        "A": {"type": "array", "items": _vector, "minItems": 1},
                        "b": _vector,
                        "bbox": _box,
                        "fill_lower_bound": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                        "volume": {"type": "number", "exclusiveMinimum": 0},
                    },
                }),
            ],
        }
    },
}

_validator = jsonschema.Draft202012Validator(BODY_FILE_SCHEMA)


def _pointer(path) -> str:
    return "/" + "/".join(str(p) for p in path) if path else "/"


def _build(spec: dict, pointer: str) -> Body:
    errors = OracleErrors(**spec["errors"]) if "errors" in spec else None
    kind = spec["kind"]
    try:
        if kind == "axis_box":
            return AxisBox(spec["lo"], spec["hi"], errors)
        if kind == "ball":
            return Ball(spec["center"], spec["radius"], errors)
        if kind == "box_ball":
            box = AxisBox(spec["box"]["lo"], spec["box"]["hi"]) if "box" in spec else None
            ball = Ball(spec["ball"]["center"], spec["ball"]["radius"]) if "ball" in spec else None
            return make_box_ball(box, ball, spec.get("perm"), errors)
        if kind == "affine":
            base = _build(spec["base"], pointer + "/base")
            return AffineBody(base, spec["matrix"], spec.get("offset"), errors)
        if kind == "cobox":
            return CoBox(spec["p"], errors)
        if kind == "hpolytope":
            bbox = AxisBox(spec["bbox"]["lo"], spec["bbox"]["hi"]) if "bbox" in spec else None
            return HPolytope(spec["A"], spec["b"], bbox, spec.get("fill_lower_bound"),
                             volume_estimate=spec.get("volume"), errors=errors)
    except UnionVolError as exc:
        raise SpecParseError(str(exc), pointer) from None
    raise SpecParseError(f"unknown kind {kind!r}", pointer + "/kind")


def parse_bodies(doc) -> list[Body]:
    """Validate a body document (already decoded from JSON) and build its bodies.

    Raises:
        SpecParseError: on schema violations, invalid payloads and dimension
            mismatches; ``pointer`` locates the offending element.
    """
    error = jsonschema.exceptions.best_match(_validator.iter_errors(doc))
    if error is not None:
        raise SpecParseError(error.message, _pointer(error.absolute_path))
    dim = doc["dim"]
    bodies = []
    for i, spec in enumerate(doc["bodies"]):
        pointer = f"/bodies/{i}"
        body = _build(spec, pointer)
        if body.dim != dim:
            raise SpecParseError(f"body has dimension {body.dim}, file declares dim={dim}", pointer)
        bodies.append(body)
    return bodies


def load_bodies(path) -> list[Body]:
    """Read and parse a JSON body file."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SpecParseError(f"invalid JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})") from None
    return parse_bodies(doc)


def _errors_spec(body: Body) -> dict:
    return {} if body.errors.exact else {"errors": body.errors.to_dict()}


def body_to_spec(body: Body) -> dict:
    """The JSON description of a body; inverse of the parser for every supported kind."""
    if isinstance(body, AxisBox):
        spec = {"kind": "axis_box", "lo": body.lo.tolist(), "hi": body.hi.tolist()}
    elif isinstance(body, Ball):
        spec = {"kind": "ball", "center": body.center.tolist(), "radius": body.radius}
    elif isinstance(body, BoxBallProduct):
        spec = {
            "kind": "box_ball",
            "box": {"lo": body.box.lo.tolist(), "hi": body.box.hi.tolist()},
            "ball": {"center": body.ball.center.tolist(), "radius": body.ball.radius},
            "perm": body.perm.tolist(),
        }
    elif isinstance(body, AffineBody):
        spec = {"kind": "affine", "base": body_to_spec(body.base), "matrix": body.matrix.tolist(),
                "offset": body.offset.tolist()}
    elif isinstance(body, CoBox):
        spec = {"kind": "cobox", "p": body.p.tolist()}
    elif isinstance(body, HPolytope):
        spec = {"kind": "hpolytope", "A": body.A.tolist(), "b": body.b.tolist(),
                "bbox": {"lo": body.bbox.lo.tolist(), "hi": body.bbox.hi.tolist()}}
        if body.fill_lower_bound is not None:
            spec["fill_lower_bound"] = body.fill_lower_bound
        if body.volume_estimate is not None:
            spec["volume"] = body.volume_estimate
    else:
        raise SpecParseError(f"{type(body).__name__} has no JSON representation")
    spec.update(_errors_spec(body))
    return spec


def dump_bodies(bodies, meta: dict | None = None) -> dict:
    """A body document for ``bodies``; ``meta`` is stored verbatim."""
    bodies = list(bodies)
    dims = {b.dim for b in bodies}
    if len(dims) != 1:
        raise SpecParseError(f"bodies have mixed dimensions {sorted(dims)}")
    doc = {"schema_version": SCHEMA_VERSION, "dim": dims.pop(), "bodies": [body_to_spec(b) for b in bodies]}
    if meta is not None:
        doc["meta"] = meta
    return doc

