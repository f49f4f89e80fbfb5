"""Fused spill files: raw concatenated payloads plus a JSON-lines sidecar index."""

import json
import os
from dataclasses import dataclass, field

from ..checksum import fnv1a64
from ..errors import SpillFileCorrupt, SpillFileMissing


@dataclass(frozen=True)
class SpillAddress:
    file_id: int
    offset: int
    length: int
    checksum: int


@dataclass
class SpillFile:
    file_id: int
    path: str
    objects: list = field(default_factory=list)   # (object_id, offset, length)
    total_bytes: int = 0
    tail: bool = False
    direct: bool = False
    live: set = field(default_factory=set)

    @property
    def index_path(self):
        return self.path + ".idx.jsonl"


def write_spill_file(directory, file_id, items, *, tail=False, direct=False):
    """Write ``items`` (``(object_id, payload)`` pairs) into one file.

    Returns the ``SpillFile`` and a dict of ``SpillAddress`` by object id.
    """
    path = os.path.join(directory, f"spill-{file_id:08d}.bin")
    f = SpillFile(file_id, path, tail=tail, direct=direct)
    addrs = {}
    offset = 0
    with open(path, "wb") as data, open(f.index_path, "w") as index:
        for oid, payload in items:
            data.write(payload)
            n = len(payload)
            crc = fnv1a64(payload)
            index.write(json.dumps({"object_id": f"{oid:032x}", "offset": offset,
                                    "length": n, "checksum": f"{crc:016x}"}) + "\n")
            f.objects.append((oid, offset, n))
            f.live.add(oid)
            addrs[oid] = SpillAddress(file_id, offset, n, crc)
            offset += n
    f.total_bytes = offset
    return f, addrs


def read_index(index_path):
    with open(index_path) as fh:
        rows = [json.loads(line) for line in fh if line.strip()]
    for r in rows:
        r["object_id"] = int(r["object_id"], 16)
        r["checksum"] = int(r["checksum"], 16)
    return rows


def read_spilled(path, addr):
    """Read one payload back and verify its checksum."""
    try:
        with open(path, "rb") as fh:
            fh.seek(addr.offset)
            payload = fh.read(addr.length)
    except FileNotFoundError as exc:
        raise SpillFileMissing(path) from exc
    if len(payload) != addr.length or fnv1a64(payload) != addr.checksum:
        raise SpillFileCorrupt(f"{path} @ {addr.offset}")
    return payload


def delete_spill_file(f):
    for p in (f.path, f.index_path):
        try:
            os.remove(p)
        except FileNotFoundError:
            pass
