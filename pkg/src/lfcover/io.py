"""Reading and writing the JSON file formats, with content hashes."""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Any

from . import bits
from .cert import LambdaCertificate, certificate_from_json, certificate_to_json, verify_certificate
from .cover import Cover, cover_from_json, cover_to_json
from .preunif import DerivationTrace, PreUniformity, lambda_coreflection, preunif_from_json, preunif_to_json
from .space import FiniteSpace, ProductSpace, space_from_json, space_to_json

OUT_DIR_ENV = "LFCOVER_OUT_DIR"


def dumps(obj: Any) -> str:
    """Canonical serialization: sorted keys, no whitespace."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def content_hash(obj: Any) -> str:
    return hashlib.sha256(dumps(obj).encode()).hexdigest()[:16]


def read_json(path: str | os.PathLike) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ValueError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def _inline_space(obj: Any, base: Path) -> Any:
    """A space field may hold a path to a space file instead of the space itself."""
    if isinstance(obj, str):
        return read_json(base / obj)
    if isinstance(obj, dict) and "product" in obj:
        return {"product": [_inline_space(f, base) for f in obj["product"]]}
    return obj


def _expand(obj: Any, base: Path) -> Any:
    if isinstance(obj, dict):
        out = dict(obj)
        if "space" in out:
            out["space"] = _inline_space(out["space"], base)
        if "product" in out:
            out["product"] = [_inline_space(f, base) for f in out["product"]]
        if "preuniformity" in out and isinstance(out["preuniformity"], str):
            out["preuniformity"] = read_json(base / out["preuniformity"])
        return out
    return obj


class Loaded:
    """An input file: the parsed object (with referenced files inlined) and its hash."""

    def __init__(self, path: str | os.PathLike):
        self.path = Path(path)
        self.obj = _expand(read_json(self.path), self.path.parent)
        self.hash = content_hash(self.obj)


def load_space(path) -> tuple[FiniteSpace, Loaded]:
    f = Loaded(path)
    return space_from_json(f.obj), f


def load_cover(path, space: FiniteSpace | None = None) -> tuple[Cover, Loaded]:
    f = Loaded(path)
    cover = cover_from_json(f.obj, None if "space" in f.obj else space)
    if space is not None and cover.space != space:
        raise ValueError(f"{path}: cover lives on a different space")
    return cover, f


def load_preunif(path) -> tuple[PreUniformity, Loaded]:
    f = Loaded(path)
    return preunif_from_json(f.obj), f


def load_certificate(path) -> tuple[LambdaCertificate, Loaded]:
    f = Loaded(path)
    return certificate_from_json(f.obj), f


def load_basic_sets(path, product: ProductSpace) -> tuple[list[dict[int, int]], Loaded]:
    """One ``{"support": {"i": [subset]}}`` object or a list of them."""
    from .prodcomb import basic_set

    f = Loaded(path)
    items = f.obj if isinstance(f.obj, list) else [f.obj]
    out = []
    for item in items:
        if not isinstance(item, dict) or not isinstance(item.get("support"), dict):
            raise ValueError(f"{path}: basic set needs a 'support' object")
        try:
            cons = {int(k): bits.mask_of(v) for k, v in item["support"].items()}
        except (TypeError, ValueError):
            raise ValueError(f"{path}: support keys must be factor indices") from None
        out.append(basic_set(product, cons))
    return out, f


def basic_set_to_json(b) -> dict:
    return {"support": {str(i): bits.members(m) for i, m in b.constraints}}


def trace_to_json(trace: DerivationTrace) -> dict:
    out = trace.to_json()
    out["space"] = space_to_json(trace.stages[0].space)
    return out


def check_trace_json(obj: dict) -> bool:
    """Recompute the derivation from the first stage and compare every stage."""
    space = space_from_json(obj["space"])
    first = preunif_from_json({"mode": obj["mode"], "basis": obj["stages"][0]["basis"]}, space)
    _, trace = lambda_coreflection(first, fast=obj["fast"])
    return trace_to_json(trace) == obj


def out_dir(override: str | None = None) -> Path:
    d = Path(override or os.environ.get(OUT_DIR_ENV) or "lfcover-out")
    d.mkdir(parents=True, exist_ok=True)
    return d


def write_json(directory: Path, name: str, obj: Any) -> str:
    path = directory / name
    path.write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    return name


def roundtrip_ok(kind: str, obj: Any) -> bool:
    """Reload an emitted artifact, re-validate it, and compare the re-serialization."""
    if kind == "space":
        return space_to_json(space_from_json(obj)) == obj
    if kind == "cover":
        return cover_to_json(cover_from_json(obj)) == obj
    if kind == "preuniformity":
        return preunif_to_json(preunif_from_json(obj)) == obj
    if kind == "certificate":
        cert = certificate_from_json(obj)
        return certificate_to_json(cert) == obj and bool(verify_certificate(cert))
    if kind == "trace":
        return check_trace_json(obj)
    raise ValueError(f"unknown artifact kind {kind!r}")
