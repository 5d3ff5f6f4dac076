"""Readers and writers for integral files.

Two formats are supported:

``fcidump``
    The usual ``&FCI ... &END`` header followed by ``value i j k l`` records
    over spatial orbitals in chemists' notation, 1-based, with 8-fold
    permutational symmetry.  ``i j 0 0`` is a one-electron integral and
    ``0 0 0 0`` the core energy; orbital-energy records ``i 0 0 0`` are ignored.
    Spatial orbital ``P`` becomes spin-orbitals ``2P`` (alpha) and ``2P+1``
    (beta).

``tensor-text``
    A direct spin-orbital dump (1-based, every nonzero element listed)::

        N 4
        CONST -1.5
        H 1 1 -0.5
        V 1 2 1 2 0.25 0.0
"""

from __future__ import annotations

import re
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ParseError, ValidationError
from .operators import ManyBodyTensors

__all__ = ["load_integrals", "read_fcidump", "read_tensor_text", "spatial_to_spin", "write_fcidump", "write_tensor_text"]

_HEADER_KEY = re.compile(r"([A-Za-z0-9_]+)\s*=\s*([^=]*?)(?=,?\s*[A-Za-z0-9_]+\s*=|$)")


def load_integrals(path: str | Path, fmt: str = "fcidump", ordering: Sequence[int] | None = None,
                   atol: float = 1e-10) -> ManyBodyTensors:
    """Read integrals from ``path`` and validate their symmetries.

    ``ordering`` (fcidump only) lists the source spatial orbitals, 0-based, in
    the order they should occupy; put active orbitals first.
    """
    text = Path(path).read_text()
    if fmt == "fcidump":
        tensors = read_fcidump(text, ordering)
    elif fmt == "tensor-text":
        if ordering is not None:
            raise ValidationError("orbital reordering is only supported for fcidump input")
        tensors = read_tensor_text(text)
    else:
        raise ValidationError(f"unknown integral format {fmt!r}")
    tensors.validate(atol)
    return tensors


def _float(tok: str, lineno: int) -> float:
    try:
        return float(tok.replace("D", "E").replace("d", "e"))
    except ValueError:
        raise ParseError(f"not a number: {tok!r}", lineno) from None


def _int(tok: str, lineno: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"not an integer index: {tok!r}", lineno) from None


def read_fcidump(text: str, ordering: Sequence[int] | None = None) -> ManyBodyTensors:
    lines = text.splitlines()
    header = []
    body_start = None
    for i, line in enumerate(lines):
        header.append(line)
        if re.search(r"&END|^\s*/\s*$", line, re.IGNORECASE):
            body_start = i + 1
            break
    if body_start is None or not header[0].lstrip().upper().startswith("&FCI"):
        raise ParseError("missing &FCI ... &END header", 1)
    joined = " ".join(header)
    joined = re.sub(r"&FCI|&END", " ", joined, flags=re.IGNORECASE).strip()
    fields = {k.upper(): v.strip().rstrip(",") for k, v in _HEADER_KEY.findall(joined)}
    if "NORB" not in fields:
        raise ParseError("header lacks NORB", 1)
    norb = _int(fields["NORB"], 1)
    if norb < 1:
        raise ParseError(f"NORB must be positive, got {norb}", 1)

    h = np.zeros((norb, norb))
    eri = np.zeros((norb,) * 4)
    core = 0.0
    for lineno in range(body_start + 1, len(lines) + 1):
        parts = lines[lineno - 1].split()
        if not parts:
            continue
        if len(parts) != 5:
            raise ParseError(f"expected 'value i j k l', got {len(parts)} fields", lineno)
        val = _float(parts[0], lineno)
        i, j, k, l = (_int(t, lineno) for t in parts[1:])
        if any(x < 0 or x > norb for x in (i, j, k, l)):
            raise ParseError(f"orbital index outside 0..{norb}", lineno)
        if i and j and k and l:
            i, j, k, l = i - 1, j - 1, k - 1, l - 1
            for a, b, c, d in ((i, j, k, l), (j, i, l, k), (k, l, i, j), (l, k, j, i)):
                eri[a, b, c, d] = eri[b, a, c, d] = eri[a, b, d, c] = eri[b, a, d, c] = val
        elif i and j and not k and not l:
            h[i - 1, j - 1] = h[j - 1, i - 1] = val
        elif not (i or j or k or l):
            core += val
        elif i and not (j or k or l):
            continue
        else:
            raise ParseError(f"unsupported index pattern {i} {j} {k} {l}", lineno)

    if ordering is not None:
        perm = [int(p) for p in ordering]
        if sorted(perm) != list(range(norb)):
            raise ValidationError(f"ordering must be a permutation of range({norb})")
        h = h[np.ix_(perm, perm)]
        eri = eri[np.ix_(perm, perm, perm, perm)]
    return spatial_to_spin(h, eri, core)


def spatial_to_spin(h: np.ndarray, eri: np.ndarray, constant: float = 0.0) -> ManyBodyTensors:
    """Spin-orbital tensors from spatial integrals in chemists' notation.

    ``v[p, q, r, s] = <pq|rs> - <pq|sr>`` with ``<pq|rs> = (pr|qs)`` for
    matching spins; spin-orbital ``2P + s`` holds spatial orbital ``P``.
    """
    n = h.shape[0]
    spin = np.arange(2 * n) % 2
    spat = np.arange(2 * n) // 2
    same = spin[:, None] == spin[None, :]
    h_so = np.where(same, h[np.ix_(spat, spat)], 0.0)
    # <pq|rs> over spin-orbitals
    phys = eri[np.ix_(spat, spat, spat, spat)].transpose(0, 2, 1, 3)
    phys = phys * same[:, None, :, None] * same[None, :, None, :]
    v = phys - phys.transpose(0, 1, 3, 2)
    return ManyBodyTensors(h_so, v, constant=float(constant))


def read_tensor_text(text: str) -> ManyBodyTensors:
    n = None
    const = 0.0
    h = v = None
    for lineno, line in enumerate(text.splitlines(), 1):
        parts = line.split("#", 1)[0].split()
        if not parts:
            continue
        tag = parts[0].upper()
        if tag == "N":
            if len(parts) != 2:
                raise ParseError("expected 'N count'", lineno)
            n = _int(parts[1], lineno)
            if n < 1:
                raise ParseError("N must be positive", lineno)
            h = np.zeros((n, n), dtype=complex)
            v = np.zeros((n,) * 4, dtype=complex)
            continue
        if n is None:
            raise ParseError("the first record must be 'N count'", lineno)
        if tag == "CONST":
            if len(parts) != 2:
                raise ParseError("expected 'CONST value'", lineno)
            const = _float(parts[1], lineno)
            continue
        width = {"H": 2, "V": 4}.get(tag)
        if width is None:
            raise ParseError(f"unknown record {parts[0]!r}", lineno)
        if len(parts) not in (width + 2, width + 3):
            raise ParseError(f"{tag} record needs {width} indices and a value", lineno)
        idx = tuple(_int(t, lineno) - 1 for t in parts[1:1 + width])
        if any(not 0 <= i < n for i in idx):
            raise ParseError(f"index outside 1..{n}", lineno)
        re_ = _float(parts[1 + width], lineno)
        im = _float(parts[2 + width], lineno) if len(parts) == width + 3 else 0.0
        (h if tag == "H" else v)[idx] = complex(re_, im)
    if n is None:
        raise ParseError("empty tensor file", 1)
    if not np.iscomplexobj(h) or not (np.any(h.imag) or np.any(v.imag)):
        h, v = h.real, v.real
    return ManyBodyTensors(h, v, constant=const)


def _num(x: complex) -> str:
    x = complex(x)
    return f"{x.real:.17g}" if x.imag == 0 else f"{x.real:.17g} {x.imag:.17g}"


def write_tensor_text(t: ManyBodyTensors, atol: float = 0.0) -> str:
    lines = [f"N {t.n_modes}", f"CONST {float(np.real(t.constant)):.17g}"]
    h = np.asarray(t.h)
    for p, q in zip(*np.nonzero(np.abs(h) > atol)):
        lines.append(f"H {p + 1} {q + 1} {_num(h[p, q])}")
    if t.v is not None:
        v = np.asarray(t.v)
        for idx in zip(*np.nonzero(np.abs(v) > atol)):
            lines.append("V " + " ".join(str(i + 1) for i in idx) + f" {_num(v[idx])}")
    return "\n".join(lines) + "\n"


def write_fcidump(h: np.ndarray, eri: np.ndarray, core: float = 0.0, nelec: int = 0, ms2: int = 0,
                  atol: float = 1e-14) -> str:
    """FCIDUMP text for real spatial integrals (unique 8-fold representatives only)."""
    n = h.shape[0]
    out = [f"&FCI NORB={n},NELEC={nelec},MS2={ms2},", "&END"]
    for i in range(n):
        for j in range(i + 1):
            for k in range(n):
                for l in range(k + 1):
                    if i * (i + 1) // 2 + j < k * (k + 1) // 2 + l:
                        continue
                    if abs(eri[i, j, k, l]) > atol:
                        out.append(f"{eri[i, j, k, l]:.17g} {i + 1} {j + 1} {k + 1} {l + 1}")
    for i in range(n):
        for j in range(i + 1):
            if abs(h[i, j]) > atol:
                out.append(f"{h[i, j]:.17g} {i + 1} {j + 1} 0 0")
    out.append(f"{core:.17g} 0 0 0 0")
    return "\n".join(out) + "\n"
