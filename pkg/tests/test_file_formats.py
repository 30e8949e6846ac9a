import json
import struct

import numpy as np
from pytest import mark, raises

from apfree_app.services.algebra.groups import FiniteAbelianGroup
from apfree_app.services.analysis.funcspace import DenseFunction
from apfree_app.services.file_formats import (
    HEADER_SIZE,
    decode_function,
    encode_function,
    load_function,
    load_json_object,
    load_product,
    load_support,
    store_function,
    store_product,
)
from apfree_app.services.structure.products import ProductFunction
from apfree_app.utils.errors import FormatError


def test_header_layout():
    data = encode_function(DenseFunction.indicator(3, 2, [1, 8]))
    assert HEADER_SIZE == 14
    assert data[:4] == b'FPFN'
    assert struct.unpack('<HHHB', data[4:11]) == (1, 3, 2, 0)
    assert data[11:14] == b'\x00\x00\x00'
    # 9 entries packed least significant bit first
    assert data[14:] == bytes([0b00000010, 0b00000001])


@mark.parametrize("kind, values", [
    ('boolean', [0, 1, 1, 0, 0, 0, 1, 0, 1]),
    ('real', [0.5, -1.25, 3.0, 0, 0, 0, 1e-300, 2.0, 7.5]),
    ('complex', [1j, 2, 0, 0, 0, 0, -1 - 1j, 0.5j, 3]),
])
def test_encoding_is_byte_stable(kind, values):
    f = DenseFunction(3, 2, values, kind=kind)
    data = encode_function(f)
    g = decode_function(data)
    assert g.kind == kind
    assert encode_function(g) == data


def test_store_and_load(tmp_path):
    f = DenseFunction.indicator(5, 2, [0, 7, 24])
    path = tmp_path / 'set.fpfn'
    store_function(f, str(path))
    assert load_function(str(path)).equals(f)


def corrupt(data, offset, value):
    data = bytearray(data)
    data[offset] = value
    return bytes(data)


def test_bad_magic():
    data = corrupt(encode_function(DenseFunction.indicator(3, 1, [0])), 0, ord('X'))
    with raises(FormatError):
        decode_function(data)


def test_reserved_bytes_must_be_zero():
    data = corrupt(encode_function(DenseFunction.indicator(3, 1, [0])), 12, 1)
    with raises(FormatError):
        decode_function(data)


def test_unknown_kind():
    data = corrupt(encode_function(DenseFunction.indicator(3, 1, [0])), 10, 7)
    with raises(FormatError):
        decode_function(data)


def test_padding_bits_must_be_zero():
    data = encode_function(DenseFunction.indicator(3, 1, [0]))
    with raises(FormatError):
        decode_function(data[:-1] + bytes([0b10000001]))


def test_payload_length_must_match():
    data = encode_function(DenseFunction(3, 1, [0.0, 1.0, 2.0]))
    with raises(FormatError):
        decode_function(data[:-1])
    with raises(FormatError):
        decode_function(data + b'\x00')


def test_truncated_header():
    with raises(FormatError):
        decode_function(b'FPFN')


def test_invalid_prime_is_a_format_error():
    data = struct.pack('<4sHHHB3s', b'FPFN', 1, 4, 1, 1, b'\x00' * 3) + np.zeros(4).tobytes()
    with raises(FormatError):
        decode_function(data)


def test_support_files(tmp_path):
    listed = tmp_path / 'listed.json'
    listed.write_text(json.dumps([[0, 0, 0], [1, 1, 1]]))
    assert load_support(str(listed)) == ([(0, 0, 0), (1, 1, 1)], None)

    sized = tmp_path / 'sized.json'
    sized.write_text(json.dumps({'alphabet_sizes': [2, 3], 'support': [[0, 2], [1, 0]]}))
    assert load_support(str(sized)) == ([(0, 2), (1, 0)], (2, 3))

    progression = tmp_path / 'ap.json'
    progression.write_text(json.dumps({'p': 5}))
    support, sizes = load_support(str(progression))
    assert sizes == (5, 5, 5)
    assert len(support) == 15


@mark.parametrize("content", ['{"alphabet_sizes": [2]}', '3', '{"support": [["a"]]}', '{broken'])
def test_bad_support_files(tmp_path, content):
    path = tmp_path / 'bad.json'
    path.write_text(content)
    with raises(FormatError):
        load_support(str(path))


def test_product_files(tmp_path):
    P = ProductFunction.from_root_indices(FiniteAbelianGroup((5,)), 5, [[0, 1, 2, 3, 4], [1, 1, 0, 0, 2]])
    path = tmp_path / 'product.json'
    store_product(P, str(path))
    assert np.allclose(load_product(str(path)).values(), P.values())


def test_product_file_from_root_indices(tmp_path):
    path = tmp_path / 'product.json'
    path.write_text(json.dumps({'group': [3], 'p': 3, 'root_indices': [[0, 1, 2]]}))
    P = load_product(str(path))
    assert P.n == 1
    assert np.array_equal(P.root_indices(), [[0, 1, 2]])


def test_json_object_required(tmp_path):
    path = tmp_path / 'config.json'
    path.write_text('[1, 2]')
    with raises(FormatError):
        load_json_object(str(path))
