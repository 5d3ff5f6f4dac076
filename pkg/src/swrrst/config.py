"""Run configuration: JSON in, validated canonical form out.

Unknown keys are rejected at every level, and every block is filled with
defaults, so that ``RunConfig.from_dict(c.to_dict()) == c`` and the canonical
dictionary (and its hash) identify a run.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import ConfigError

__all__ = ["RunConfig", "canonical_json", "dumps"]

_DEFAULTS: dict[str, Any] = {
    "input": {"path": None, "format": "fcidump"},
    "partition": {"n": None, "k": None, "orbital_energies": None, "ordering": None},
    "h0": {"epsilon": None},
    "solver": {
        "l": 2,
        "domain": "eod",
        "tol": 1e-10,
        "max_iter": 100,
        "body_rank": 2,
        "bch_rank_cap": 3,
        "level_shift": 0.0,
        "denominator_floor": 1e-8,
        "acceleration": True,
        "diis_window": 6,
    },
    "g": {"tol": 1e-12, "max_body_rank": None},
    "auxiliary": None,
    "evolution": {"t": None, "r": 64, "m": 6, "sectors": None, "shots": None, "trotter_r": [8, 16, 32]},
    "output": {"dir": "swrrst-out"},
    "seed": 0,
}

_TYPES = {
    ("input", "path"): (str,),
    ("input", "format"): (str,),
    ("partition", "n"): (int, type(None)),
    ("partition", "k"): (int,),
    ("partition", "ordering"): (list, type(None)),
    ("partition", "orbital_energies"): (list, type(None)),
    ("h0", "epsilon"): (list, type(None)),
    ("solver", "l"): (int,),
    ("solver", "domain"): (str,),
    ("solver", "tol"): (float, int),
    ("solver", "max_iter"): (int,),
    ("solver", "body_rank"): (int,),
    ("solver", "bch_rank_cap"): (int, type(None)),
    ("solver", "level_shift"): (float, int),
    ("solver", "denominator_floor"): (float, int),
    ("solver", "acceleration"): (bool,),
    ("solver", "diis_window"): (int,),
    ("g", "tol"): (float, int),
    ("g", "max_body_rank"): (int, type(None)),
    ("evolution", "t"): (float, int, type(None)),
    ("evolution", "r"): (int,),
    ("evolution", "m"): (int,),
    ("evolution", "sectors"): (list, type(None)),
    ("evolution", "shots"): (int, type(None)),
    ("evolution", "trotter_r"): (list,),
    ("output", "dir"): (str,),
}


def _check_type(path, value):
    allowed = _TYPES[path]
    if isinstance(value, bool) and bool not in allowed:
        ok = False
    else:
        ok = isinstance(value, allowed)
    if not ok:
        names = "/".join("null" if t is type(None) else t.__name__ for t in allowed)
        raise ConfigError(f"{'.'.join(path)} must be {names}, got {value!r}")


def _merge(block: str, given: Any) -> dict:
    if not isinstance(given, dict):
        raise ConfigError(f"{block} must be an object")
    defaults = _DEFAULTS[block]
    unknown = sorted(set(given) - set(defaults))
    if unknown:
        raise ConfigError(f"unknown key(s) in {block}: {', '.join(unknown)}")
    out = copy.deepcopy(defaults)
    out.update(copy.deepcopy(given))
    for key, value in out.items():
        if value is None:
            continue
        _check_type((block, key), value)
        if float in _TYPES[(block, key)] and isinstance(value, int):
            out[key] = float(value)
    return out


def _auxiliary(aux: Any) -> dict | None:
    if aux is None:
        return None
    if not isinstance(aux, dict) or set(aux) - {"terms", "rank"}:
        raise ConfigError("auxiliary must be an object with keys 'terms' and optional 'rank'")
    terms = aux.get("terms")
    if not isinstance(terms, list) or not terms:
        raise ConfigError("auxiliary.terms must be a non-empty list")
    clean = []
    for i, t in enumerate(terms):
        if not isinstance(t, dict) or set(t) != {"c", "a", "coeff"}:
            raise ConfigError(f"auxiliary.terms[{i}] needs exactly 'c', 'a' and 'coeff'")
        coeff = t["coeff"]
        if isinstance(coeff, (int, float)) and not isinstance(coeff, bool):
            coeff = [float(coeff), 0.0]
        if not (isinstance(coeff, list) and len(coeff) == 2 and all(isinstance(x, (int, float)) for x in coeff)):
            raise ConfigError(f"auxiliary.terms[{i}].coeff must be a number or [re, im]")
        for side in ("c", "a"):
            if not isinstance(t[side], list) or not all(isinstance(p, int) and p >= 1 for p in t[side]):
                raise ConfigError(f"auxiliary.terms[{i}].{side} must list 1-based spin-orbitals")
        clean.append({"c": list(t["c"]), "a": list(t["a"]), "coeff": [float(coeff[0]), float(coeff[1])]})
    rank = aux.get("rank")
    if rank is not None and (not isinstance(rank, int) or rank < 1):
        raise ConfigError("auxiliary.rank must be a positive integer or null")
    return {"terms": clean, "rank": rank}


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration; construct with :meth:`from_dict` or :meth:`load`."""

    data: dict = field(repr=False)
    base_dir: str = field(default=".", compare=False)

    @classmethod
    def from_dict(cls, raw: dict) -> RunConfig:
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a JSON object")
        unknown = sorted(set(raw) - set(_DEFAULTS))
        if unknown:
            raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")
        data: dict[str, Any] = {}
        for block in ("input", "partition", "h0", "solver", "g", "evolution", "output"):
            data[block] = _merge(block, raw.get(block, {}))
        data["auxiliary"] = _auxiliary(raw.get("auxiliary"))
        seed = raw.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        data["seed"] = seed
        cls._validate(data)
        return cls(data)

    @staticmethod
    def _validate(d: dict) -> None:
        if d["input"]["path"] is None:
            raise ConfigError("input.path is required")
        if d["input"]["format"] not in ("fcidump", "tensor-text"):
            raise ConfigError("input.format must be 'fcidump' or 'tensor-text'")
        part = d["partition"]
        if part["k"] is None or part["k"] < 0:
            raise ConfigError("partition.k (number of external orbitals) is required and must be >= 0")
        if part["n"] is not None and part["n"] < part["k"]:
            raise ConfigError("partition.n must be >= partition.k")
        s = d["solver"]
        if s["l"] < 1:
            raise ConfigError("solver.l must be >= 1")
        if s["domain"] not in ("eod", "od"):
            raise ConfigError("solver.domain must be 'eod' or 'od'")
        if s["tol"] <= 0 or s["max_iter"] < 0 or s["body_rank"] < 1 or s["diis_window"] < 1:
            raise ConfigError("solver.tol, max_iter, body_rank and diis_window must be positive")
        if s["level_shift"] < 0:
            raise ConfigError("solver.level_shift must be >= 0")
        e = d["evolution"]
        if e["r"] < 2 or e["r"] % 2:
            raise ConfigError("evolution.r must be even and >= 2")
        if e["m"] < 1:
            raise ConfigError("evolution.m must be >= 1")
        if any(not isinstance(r, int) or r < 2 or r % 2 for r in e["trotter_r"]):
            raise ConfigError("evolution.trotter_r entries must be even integers >= 2")
        if e["sectors"] is not None and any(not isinstance(n, int) or n < 0 for n in e["sectors"]):
            raise ConfigError("evolution.sectors must list electron counts")
        if e["t"] is not None and (e["t"] <= 0 or not math.isfinite(e["t"])):
            raise ConfigError("evolution.t must be positive")

    @classmethod
    def load(cls, path: str | Path) -> RunConfig:
        """Read a JSON config; relative input paths resolve against its directory."""
        try:
            raw = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        cfg = cls.from_dict(raw)
        object.__setattr__(cfg, "base_dir", str(Path(path).resolve().parent))
        return cfg

    @property
    def input_path(self) -> Path:
        p = Path(self.data["input"]["path"])
        return p if p.is_absolute() else Path(self.base_dir) / p

    def replace(self, path: tuple[str, ...], value) -> RunConfig:
        data = copy.deepcopy(self.data)
        node = data
        for key in path[:-1]:
            node = node[key]
        node[path[-1]] = value
        out = RunConfig.from_dict(data)
        object.__setattr__(out, "base_dir", self.base_dir)
        return out

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)

    def to_json(self) -> str:
        return canonical_json(self.data)

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    def __getitem__(self, key):
        return self.data[key]

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.to_json() == other.to_json()

    def __hash__(self):
        return hash(self.to_json())


def _encode(obj, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1)) if indent else ""
    end = "\n" + " " * (indent * level) if indent else ""
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if hasattr(obj, "item") and not isinstance(obj, (list, dict)):
        obj = obj.item()
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if math.isfinite(obj):
            text = format(obj, ".17g")
            return text if any(ch in text for ch in ".en") else text + ".0"
        return json.dumps(str(obj))
    if isinstance(obj, complex):
        return _encode([obj.real, obj.imag], indent, level)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        sep = ": " if indent else ":"
        items = [f"{pad}{json.dumps(str(k))}{sep}{_encode(obj[k], indent, level + 1)}" for k in sorted(obj, key=str)]
        return "{" + ",".join(items) + end + "}"
    if isinstance(obj, (list, tuple)) or hasattr(obj, "tolist"):
        seq = obj.tolist() if hasattr(obj, "tolist") else obj
        if not seq:
            return "[]"
        return "[" + ",".join(f"{pad}{_encode(x, indent, level + 1)}" for x in seq) + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """Deterministic JSON: sorted keys, floats with 17 significant digits."""
    return _encode(obj, indent, 0)


def canonical_json(obj) -> str:
    return _encode(obj, 0, 0)
