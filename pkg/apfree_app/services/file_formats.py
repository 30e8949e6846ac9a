"""
File formats: function tables, support files and product functions.

Function file layout (little-endian):
    magic "FPFN" | u16 version | u16 p | u16 n | u8 kind | 3 zero bytes | payload
The payload lists p^n entries in table order: booleans packed least
significant bit first, reals as float64, complex values as float64 pairs.
"""
import json
import logging
import struct

import numpy as np

from apfree_app.services.analysis.funcspace import DenseFunction
from apfree_app.services.structure.products import ProductFunction
from apfree_app.utils.constants import (
    FUNCTION_FILE_HEADER,
    FUNCTION_FILE_MAGIC,
    FUNCTION_FILE_VERSION,
    FUNCTION_KIND_CODES,
    FUNCTION_KINDS,
)
from apfree_app.utils.errors import FormatError, PreconditionError

logger = logging.getLogger(__name__)

HEADER_SIZE = struct.calcsize(FUNCTION_FILE_HEADER)


def _payload_size(kind, size):
    if kind == 'boolean':
        return (size + 7) // 8
    return size * (8 if kind == 'real' else 16)


def encode_function(f):
    """Serialize a DenseFunction to bytes."""
    header = struct.pack(FUNCTION_FILE_HEADER, FUNCTION_FILE_MAGIC, FUNCTION_FILE_VERSION,
                         f.p, f.n, FUNCTION_KIND_CODES[f.kind], b'\x00' * 3)
    if f.kind == 'boolean':
        payload = np.packbits(f.values.astype(np.uint8), bitorder='little').tobytes()
    elif f.kind == 'real':
        payload = f.values.astype('<f8').tobytes()
    else:
        payload = f.values.astype('<c16').tobytes()
    return header + payload


def decode_function(data):
    """Parse bytes into a DenseFunction, rejecting anything that would not round-trip."""
    if len(data) < HEADER_SIZE:
        raise FormatError(f"File too short for header ({len(data)} bytes)")
    magic, version, p, n, code, reserved = struct.unpack(FUNCTION_FILE_HEADER, data[:HEADER_SIZE])
    if magic != FUNCTION_FILE_MAGIC:
        raise FormatError(f"Bad magic {magic!r}, expected {FUNCTION_FILE_MAGIC!r}")
    if version != FUNCTION_FILE_VERSION:
        raise FormatError(f"Unsupported version {version}")
    if code not in FUNCTION_KINDS:
        raise FormatError(f"Unknown kind byte {code}")
    if reserved != b'\x00' * 3:
        raise FormatError("Reserved header bytes must be zero")
    kind = FUNCTION_KINDS[code]
    size = p ** n
    payload = data[HEADER_SIZE:]
    expected = _payload_size(kind, size)
    if len(payload) != expected:
        raise FormatError(f"Payload has {len(payload)} bytes, header implies {expected}")

    if kind == 'boolean':
        bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8), bitorder='little')
        if bits[size:].any():
            raise FormatError("Padding bits after the last entry must be zero")
        values = bits[:size].astype(np.float64)
    elif kind == 'real':
        values = np.frombuffer(payload, dtype='<f8')
    else:
        values = np.frombuffer(payload, dtype='<c16')
    try:
        return DenseFunction(p, n, values, kind=kind)
    except PreconditionError as e:
        raise FormatError(f"Invalid function table: {e}")


def load_function(path):
    with open(path, 'rb') as handle:
        data = handle.read()
    f = decode_function(data)
    logger.debug(f"Loaded {f!r} from {path}")
    return f


def store_function(f, path):
    with open(path, 'wb') as handle:
        handle.write(encode_function(f))


def _read_json(path):
    try:
        with open(path, 'r', encoding='utf-8') as handle:
            return json.load(handle)
    except json.JSONDecodeError as e:
        raise FormatError(f"Invalid JSON in {path}: {e}")


def load_support(path):
    """
    Support file: {"alphabet_sizes": [...], "support": [[...], ...]}, or a
    bare list of tuples, or {"p": P, "differences": [...]} for a progression
    distribution. Returns (support, alphabet_sizes).
    """
    data = _read_json(path)
    if isinstance(data, list):
        support = [tuple(int(s) for s in atom) for atom in data]
        return support, None
    if not isinstance(data, dict):
        raise FormatError("Support file must hold a list or an object")
    if 'p' in data:
        from apfree_app.services.progressions.aps import restricted_ap_distribution
        try:
            mu = restricted_ap_distribution(int(data['p']), tuple(data.get('differences', (0, 1, 2))))
        except PreconditionError as e:
            raise FormatError(str(e))
        return list(mu.support), mu.alphabet_sizes
    if 'support' not in data:
        raise FormatError("Support file needs a 'support' field")
    try:
        support = [tuple(int(s) for s in atom) for atom in data['support']]
    except (TypeError, ValueError) as e:
        raise FormatError(f"Malformed support atoms: {e}")
    sizes = data.get('alphabet_sizes')
    return support, tuple(int(m) for m in sizes) if sizes else None


def load_product(path):
    data = _read_json(path)
    try:
        return ProductFunction.from_dict(data)
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"Malformed product function: {e}")


def store_product(P, path):
    with open(path, 'w', encoding='utf-8') as handle:
        json.dump(P.to_dict(), handle)


def load_json_object(path):
    data = _read_json(path)
    if not isinstance(data, dict):
        raise FormatError(f"{path} must hold a JSON object")
    return data
