"""Reader and writer for AEC1 embedding containers.

Layout: b"AEC1", little-endian u64 header length, UTF-8 JSON header
({"version": 1, "dtype": "f32le", "shape": [...], "keys": [...], ...}),
then the row-major float32 little-endian payload.

    python3 aec_loader.py FILE            print shape and keys
    python3 aec_loader.py FILE --check    also verify every value is finite
"""

import json
import struct
import sys

import numpy as np

MAGIC = b"AEC1"
VERSION = 1


def load(path):
    """Returns (array, keys, header)."""
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != MAGIC:
        raise ValueError(f"bad magic {blob[:4]!r}")
    (hlen,) = struct.unpack("<Q", blob[4:12])
    header = json.loads(blob[12 : 12 + hlen].decode("utf-8"))
    if header.get("version") != VERSION:
        raise ValueError(f"unsupported version {header.get('version')}")
    if header.get("dtype") != "f32le":
        raise ValueError(f"unsupported dtype {header.get('dtype')}")
    shape = tuple(header["shape"])
    payload = blob[12 + hlen :]
    expected = int(np.prod(shape)) * 4
    if len(payload) != expected:
        raise ValueError(f"payload is {len(payload)} bytes, expected {expected}")
    array = np.frombuffer(payload, dtype="<f4").reshape(shape)
    keys = header["keys"]
    if len(keys) != shape[0]:
        raise ValueError("key count does not match the leading dimension")
    return array, keys, header


def save(path, array, keys, **meta):
    array = np.ascontiguousarray(array, dtype="<f4")
    if len(keys) != array.shape[0]:
        raise ValueError("key count does not match the leading dimension")
    header = dict(meta)
    header.update(version=VERSION, dtype="f32le", shape=list(array.shape), keys=list(keys))
    raw = json.dumps(header).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<Q", len(raw)))
        f.write(raw)
        f.write(array.tobytes())


def main(argv):
    if not argv:
        print(__doc__.strip())
        return 2
    array, keys, _ = load(argv[0])
    if "--check" in argv[1:] and not np.isfinite(array).all():
        print("non-finite values", file=sys.stderr)
        return 1
    print("shape", list(array.shape))
    for k in keys:
        print(k)
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
