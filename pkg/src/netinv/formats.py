"""Binary file formats: tensors (LBTF), model archives (LBNN) and the
big-endian IDX image/label containers, plus PGM and CSV writers.

LBTF:  magic ``LBTF`` | u32-le rank | rank x u64-le dims | row-major f64-le payload
LBNN:  magic ``LBNN`` | u32-le layer count | per layer:
       u8 operator kind (0 dense, 1 conv, 2 transpose conv) | u8 activation tag |
       u32-le stride (conv kinds only) | weights as LBTF | bias as LBTF
IDX:   u32-be magic (0x00000803 images, 0x00000801 labels) | u32-be dims | u8 payload

The archive does not carry convolution padding (fixed at 1) nor penalty
parameters, so only the canonical BoxIndicator(0, 1) and L1Penalty(1)
can be archived; parameterised variants are rejected at write time.
"""

import csv
import math
import struct

import numpy as np

from .linops import Conv2d, ConvTranspose2d, DenseAffine
from .network import Layer, Network
from .penalties import BoxIndicator, L1Penalty, NonNegIndicator, ZeroPenalty

TENSOR_MAGIC = b"LBTF"
MODEL_MAGIC = b"LBNN"
IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


class FormatError(ValueError):
    """Malformed or truncated binary input."""


# ---------------------------------------------------------------------------
# LBTF tensors

def tensor_to_bytes(arr) -> bytes:
    arr = np.asarray(arr, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("refusing to serialise non-finite tensor entries")
    head = TENSOR_MAGIC + struct.pack("<I", arr.ndim)
    dims = struct.pack(f"<{arr.ndim}Q", *arr.shape)
    payload = arr.astype("<f8").tobytes(order="C")
    return head + dims + payload


def tensor_from_bytes(buf: bytes, offset: int = 0):
    """Parse one LBTF block; returns (array, next_offset)."""
    if buf[offset : offset + 4] != TENSOR_MAGIC:
        raise FormatError(f"bad tensor magic {buf[offset:offset + 4]!r}")
    offset += 4
    (rank,) = struct.unpack_from("<I", buf, offset)
    offset += 4
    if len(buf) < offset + 8 * rank:
        raise FormatError("truncated tensor header")
    dims = struct.unpack_from(f"<{rank}Q", buf, offset)
    offset += 8 * rank
    count = int(np.prod(dims)) if rank else 1
    nbytes = 8 * count
    if len(buf) < offset + nbytes:
        raise FormatError(
            f"truncated tensor payload: expected {nbytes} bytes, "
            f"got {len(buf) - offset}"
        )
    arr = np.frombuffer(buf, dtype="<f8", count=count, offset=offset)
    offset += nbytes
    arr = arr.astype(np.float64).reshape(dims)
    if not np.all(np.isfinite(arr)):
        raise FormatError("tensor payload contains non-finite entries")
    return arr, offset


def write_tensor(path, arr):
    with open(path, "wb") as f:
        f.write(tensor_to_bytes(arr))


def read_tensor(path):
    with open(path, "rb") as f:
        buf = f.read()
    arr, offset = tensor_from_bytes(buf)
    if offset != len(buf):
        raise FormatError(f"{len(buf) - offset} trailing bytes after tensor")
    return arr


# ---------------------------------------------------------------------------
# LBNN model archives

def _penalty_to_tag(penalty) -> int:
    if isinstance(penalty, ZeroPenalty):
        return 0
    if isinstance(penalty, NonNegIndicator):
        return 1
    if isinstance(penalty, BoxIndicator):
        if (penalty.lo, penalty.hi) != (0.0, 1.0):
            raise ValueError(
                "model archives carry no penalty parameters; only "
                "BoxIndicator(0, 1) can be archived"
            )
        return 2
    if isinstance(penalty, L1Penalty):
        if penalty.lam != 1.0:
            raise ValueError(
                "model archives carry no penalty parameters; only "
                "L1Penalty(1) can be archived"
            )
        return 3
    raise ValueError(f"unknown penalty {penalty!r}")


def _penalty_from_tag(tag: int):
    if tag == 0:
        return ZeroPenalty()
    if tag == 1:
        return NonNegIndicator()
    if tag == 2:
        return BoxIndicator(0.0, 1.0)
    if tag == 3:
        return L1Penalty(1.0)
    raise FormatError(f"unknown activation tag {tag}")


def network_to_bytes(net: Network) -> bytes:
    out = [MODEL_MAGIC, struct.pack("<I", len(net.layers))]
    for layer in net.layers:
        op = layer.op
        out.append(struct.pack("<BB", op.kind_tag, _penalty_to_tag(layer.penalty)))
        if isinstance(op, (Conv2d, ConvTranspose2d)):
            if op.padding != 1:
                raise ValueError(
                    "model archives fix convolution padding at 1, "
                    f"got padding={op.padding}"
                )
            out.append(struct.pack("<I", op.stride))
            out.append(tensor_to_bytes(op.kernel))
        else:
            out.append(tensor_to_bytes(op.weight))
        out.append(tensor_to_bytes(op.bias))
    return b"".join(out)


def network_from_bytes(buf: bytes, input_shape=None) -> Network:
    """Rebuild a network archive.

    The byte format carries no spatial dimensions, so a network whose
    first layer is convolutional needs ``input_shape`` (e.g. (1, 28, 28));
    later shapes are propagated along the chain.
    """
    if buf[:4] != MODEL_MAGIC:
        raise FormatError(f"bad model magic {buf[:4]!r}")
    (count,) = struct.unpack_from("<I", buf, 4)
    offset = 8
    layers = []
    carry = tuple(input_shape) if input_shape is not None else None
    for i in range(count):
        if len(buf) < offset + 2:
            raise FormatError(f"truncated layer header at layer {i}")
        kind, act = struct.unpack_from("<BB", buf, offset)
        offset += 2
        if kind in (1, 2):
            (stride,) = struct.unpack_from("<I", buf, offset)
            offset += 4
            kernel, offset = tensor_from_bytes(buf, offset)
            bias, offset = tensor_from_bytes(buf, offset)
            cin = kernel.shape[1] if kind == 1 else kernel.shape[0]
            if carry is not None and len(carry) == 1:
                # the archive holds no spatial dims; a flat predecessor is
                # unfolded assuming square images
                side = int(round(math.sqrt(carry[0] / cin)))
                if cin * side * side != carry[0]:
                    raise FormatError(
                        f"layer {i}: cannot unfold {carry[0]} entries into "
                        f"{cin} square channels"
                    )
                carry = (cin, side, side)
            if carry is None or len(carry) != 3:
                raise FormatError(
                    f"layer {i} is convolutional but no (C, H, W) input "
                    "shape is available; pass input_shape="
                )
            hw = carry[1:]
            if kind == 1:
                op = Conv2d(kernel, hw, stride=stride, padding=1, bias=bias)
            else:
                op = ConvTranspose2d(kernel, hw, stride=stride, padding=1, bias=bias)
        elif kind == 0:
            weight, offset = tensor_from_bytes(buf, offset)
            bias, offset = tensor_from_bytes(buf, offset)
            in_shape = None
            if carry is not None and int(np.prod(carry)) == weight.shape[1]:
                in_shape = carry
            op = DenseAffine(weight, bias=bias, input_shape=in_shape)
        else:
            raise FormatError(f"unknown operator kind tag {kind}")
        layers.append(Layer(op, _penalty_from_tag(act)))
        carry = op.output_shape
    if offset != len(buf):
        raise FormatError(f"{len(buf) - offset} trailing bytes after model")
    return Network(layers)


def write_network(path, net: Network):
    with open(path, "wb") as f:
        f.write(network_to_bytes(net))


def read_network(path, input_shape=None) -> Network:
    with open(path, "rb") as f:
        buf = f.read()
    return network_from_bytes(buf, input_shape=input_shape)


# ---------------------------------------------------------------------------
# IDX containers

def read_idx_raw(path):
    """Parse an IDX file into the raw u8 array."""
    with open(path, "rb") as f:
        buf = f.read()
    if len(buf) < 4:
        raise FormatError("truncated IDX header")
    (magic,) = struct.unpack_from(">I", buf, 0)
    if magic == IDX_IMAGES_MAGIC:
        ndim = 3
    elif magic == IDX_LABELS_MAGIC:
        ndim = 1
    else:
        raise FormatError(f"bad IDX magic 0x{magic:08x}")
    if len(buf) < 4 + 4 * ndim:
        raise FormatError("truncated IDX dimension header")
    dims = struct.unpack_from(f">{ndim}I", buf, 4)
    offset = 4 + 4 * ndim
    expected = int(np.prod(dims))
    actual = len(buf) - offset
    if actual != expected:
        raise FormatError(
            f"truncated IDX payload: expected {expected} bytes, got {actual}"
        )
    return np.frombuffer(buf, dtype=np.uint8, offset=offset).reshape(dims)


def load_idx(path):
    """Load an IDX file; images are scaled to [0, 1], labels stay integer."""
    raw = read_idx_raw(path)
    if raw.ndim == 3:
        return raw.astype(np.float64) / 255.0
    return raw.astype(np.int64)


def write_idx(path, arr):
    """Write a u8 array as IDX (3-D arrays as images, 1-D as labels)."""
    arr = np.asarray(arr)
    if arr.dtype != np.uint8:
        raise ValueError(f"IDX payload must be uint8, got {arr.dtype}")
    if arr.ndim == 3:
        magic = IDX_IMAGES_MAGIC
    elif arr.ndim == 1:
        magic = IDX_LABELS_MAGIC
    else:
        raise ValueError(f"IDX arrays must be 1-D or 3-D, got {arr.ndim}-D")
    with open(path, "wb") as f:
        f.write(struct.pack(">I", magic))
        f.write(struct.pack(f">{arr.ndim}I", *arr.shape))
        f.write(arr.tobytes(order="C"))


# ---------------------------------------------------------------------------
# PGM images and CSV tables

def write_pgm(x, path, peak=1.0):
    """Binary P5 image; values are clamped from [0, peak] onto [0, 255]."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {x.shape}")
    h, w = x.shape
    scaled = np.clip(x / peak, 0.0, 1.0) * 255.0
    data = np.rint(scaled).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(data.tobytes(order="C"))


def write_csv(rows, path, header=None):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        if header is not None:
            writer.writerow(header)
        for row in rows:
            writer.writerow([str(v) for v in row])
