"""Line-oriented snapshot files.

Layout::

    # qae-snapshot v1
    dim 2
    budget 12 10000
    kraft_mass 791/4096
    entries 20
    001 state 2;1/1+0/1i,0/1+0/1i
    ...

Projector outputs list their basis vectors separated by ``|``.  On load the
Kraft mass is recomputed and every program is re-decoded, so a file that
was edited by hand cannot pass as a machine snapshot.
"""

from __future__ import annotations

import hashlib
import os
from fractions import Fraction
from pathlib import Path

from .errors import IntegrityError, ParseError
from .machine import EnumerationSnapshot, MachineOutput, SnapshotEntry, decode

FORMAT_LINE = "# qae-snapshot v1"


def dumps_snapshot(snap: EnumerationSnapshot) -> str:
    km = snap.kraft_mass
    lines = [
        FORMAT_LINE,
        f"dim {snap.dim}",
        f"budget {snap.budget[0]} {snap.budget[1]}",
        f"kraft_mass {km.numerator}/{km.denominator}",
        f"entries {len(snap.entries)}",
    ]
    for e in snap.entries:
        lines.append(f"{e.program} {e.output.kind} {e.output.encode()}")
    return "\n".join(lines) + "\n"


def _header(lines: list[str], idx: int, key: str) -> list[str]:
    if idx >= len(lines):
        raise ParseError(f"missing '{key}' header", line=idx + 1)
    parts = lines[idx].split()
    if not parts or parts[0] != key:
        raise ParseError(f"expected '{key}' header", line=idx + 1)
    return parts[1:]


def loads_snapshot(text: str) -> EnumerationSnapshot:
    lines = text.splitlines()
    if not lines or lines[0].strip() != FORMAT_LINE:
        raise ParseError("not a qae snapshot (bad format line)", line=1)
    try:
        (dim,) = map(int, _header(lines, 1, "dim"))
        max_len, max_steps = map(int, _header(lines, 2, "budget"))
        (km_text,) = _header(lines, 3, "kraft_mass")
        declared = Fraction(km_text)
        (count,) = map(int, _header(lines, 4, "entries"))
    except ParseError:
        raise
    except ValueError as exc:
        raise ParseError(f"bad header value: {exc}") from None
    body = lines[5:]
    if len(body) < count:
        raise ParseError(f"truncated: {count} entries declared, {len(body)} present", line=len(lines) + 1)
    if len(body) > count:
        raise ParseError("trailing data after the declared entries", line=5 + count + 1)
    entries = []
    for k, line in enumerate(body, start=6):
        parts = line.split(" ", 2)
        if len(parts) != 3:
            raise ParseError("expected '<bits> <kind> <encoding>'", line=k)
        bits, kind, enc = parts
        try:
            out = MachineOutput.parse(kind, enc)
        except (ParseError, ValueError) as exc:
            raise ParseError(str(exc), line=k) from None
        res = decode(bits, dim)
        if not res:
            raise IntegrityError(f"line {k}: program {bits} does not halt ({res.reason.value})")
        if res.key != out.key:
            raise IntegrityError(f"line {k}: stored output differs from the decoded output")
        entries.append(SnapshotEntry(bits, out))
    snap = EnumerationSnapshot(dim, (max_len, max_steps), tuple(entries))
    if snap.kraft_mass != declared:
        raise IntegrityError(f"kraft_mass header {declared} but entries sum to {snap.kraft_mass}")
    return snap


def save_snapshot(snap: EnumerationSnapshot, path) -> str:
    """Write atomically; returns the SHA-256 digest of the bytes written."""
    data = dumps_snapshot(snap).encode()
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)
    return hashlib.sha256(data).hexdigest()


def load_snapshot(path) -> EnumerationSnapshot:
    return loads_snapshot(Path(path).read_text())
