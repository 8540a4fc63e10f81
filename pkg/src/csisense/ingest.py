"""Readers and writers for CSI traces.

Two formats are supported:

* the framed binary beamforming-feedback log written by the Intel 5300 CSI
  tool (``log_to_file``), decoded bit-exactly;
* a portable line-delimited text format used for synthetic data and fixtures.

Binary framing is a sequence of ``{u16 big-endian size, u8 code, size-1 bytes}``.
Records with code ``0xBB`` carry a 20-byte little-endian header followed by a
packed CSI payload.
"""
from __future__ import annotations

import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional
from urllib.parse import quote, unquote

import numpy as np

from .core import DEFAULT_SUBCARRIERS, CsiFrame, Trace, TraceMeta

log = logging.getLogger(__name__)

BFEE_CODE = 0xBB
BFEE_HEADER = struct.Struct("<IHHBBBBBbBBHH")
OUTER_SIZE = struct.Struct(">H")

TEXT_MAGIC = "CSITRACE/1"


class ParseError(ValueError):
    """Raised on truncated or unparseable input; carries a byte offset or line number."""

    def __init__(self, message: str, offset: Optional[int] = None, line: Optional[int] = None):
        where = ""
        if offset is not None:
            where = f" at byte offset {offset}"
        elif line is not None:
            where = f" at line {line}"
        super().__init__(message + where)
        self.offset = offset
        self.line = line


class MalformedRecordError(ParseError):
    pass


@dataclass(frozen=True)
class BfeeRecord:
    timestamp_low: int
    bfee_count: int
    n_rx: int
    n_tx: int
    rssi_a: int
    rssi_b: int
    rssi_c: int
    noise: int
    agc: int
    antenna_sel: int
    len: int
    rate_flags: int
    payload: bytes
    reserved: int = 0

    @staticmethod
    def expected_len(n_rx: int, n_tx: int, n_subcarriers: int = DEFAULT_SUBCARRIERS) -> int:
        return (n_subcarriers * (n_rx * n_tx * 8 * 2 + 3) + 7) // 8

    def to_bytes(self) -> bytes:
        """Serialise as one framed log entry (outer size + code + header + payload)."""
        body = BFEE_HEADER.pack(
            self.timestamp_low, self.bfee_count, self.reserved, self.n_rx, self.n_tx,
            self.rssi_a, self.rssi_b, self.rssi_c, self.noise, self.agc,
            self.antenna_sel, self.len, self.rate_flags,
        ) + self.payload
        return OUTER_SIZE.pack(len(body) + 1) + bytes([BFEE_CODE]) + body

    @classmethod
    def from_body(cls, body: bytes, offset: int = 0) -> "BfeeRecord":
        if len(body) < BFEE_HEADER.size:
            raise MalformedRecordError("bfee record shorter than its header", offset=offset)
        (ts, count, reserved, n_rx, n_tx, ra, rb, rc, noise, agc, sel, length, rate) = \
            BFEE_HEADER.unpack_from(body)
        return cls(ts, count, n_rx, n_tx, ra, rb, rc, noise, agc, sel, length, rate,
                   bytes(body[BFEE_HEADER.size:]), reserved)


def antenna_permutation(antenna_sel: int, n_rx: int) -> list:
    """Physical rx index for each decoded rx slot.

    Firmware reports garbage selection bits when fewer than three chains are
    active, so a code that is not a permutation of ``range(n_rx)`` falls back
    to identity order.
    """
    perm = [(antenna_sel >> (2 * i)) & 0x3 for i in range(n_rx)]
    if sorted(perm) != list(range(n_rx)):
        return list(range(n_rx))
    return perm


def decode_bfee(record: BfeeRecord, timestamp: float = 0.0,
                n_subcarriers: int = DEFAULT_SUBCARRIERS) -> CsiFrame:
    n_rx, n_tx = record.n_rx, record.n_tx
    if not (1 <= n_rx <= 3 and 1 <= n_tx <= 3):
        raise MalformedRecordError(f"invalid antenna counts n_rx={n_rx} n_tx={n_tx}")
    expected = BfeeRecord.expected_len(n_rx, n_tx, n_subcarriers)
    payload = record.payload
    if record.len != expected or len(payload) != record.len:
        raise MalformedRecordError(
            f"payload length mismatch: len field {record.len}, expected {expected}, got {len(payload)} bytes"
        )
    perm = antenna_permutation(record.antenna_sel, n_rx)
    csi = np.empty((n_subcarriers, n_rx, n_tx), dtype=np.complex128)
    nbytes = len(payload)

    def component(cursor: int) -> int:
        idx, rem = cursor >> 3, cursor & 7
        if idx >= nbytes or (rem and idx + 1 >= nbytes):
            raise MalformedRecordError(f"bit cursor {cursor} overruns {nbytes}-byte payload")
        v = payload[idx] >> rem
        if rem:
            v |= payload[idx + 1] << (8 - rem)
        v &= 0xFF
        return v - 256 if v & 0x80 else v

    cursor = 0
    for sc in range(n_subcarriers):
        cursor += 3
        for j in range(n_rx):
            for k in range(n_tx):
                re = component(cursor)
                im = component(cursor + 8)
                csi[sc, perm[j], k] = complex(re, im)
                cursor += 16
    return CsiFrame(timestamp, csi, record.rssi_a, record.rssi_b, record.rssi_c, record.agc)


def encode_bfee(frame: CsiFrame, antenna_sel: int = 0, timestamp_low: int = 0, bfee_count: int = 0,
                rssi=(0, 0, 0), noise: int = 0, agc: int = 0, rate_flags: int = 0) -> BfeeRecord:
    """Pack a frame into a bfee record; the exact inverse of :func:`decode_bfee`."""
    m = frame.matrix
    n_sc, n_rx, n_tx = m.shape
    re, im = m.real, m.imag
    if not (np.all(re == np.round(re)) and np.all(im == np.round(im))):
        raise ValueError("CSI entries must be integral to fit the 8-bit wire format")
    if re.min() < -128 or re.max() > 127 or im.min() < -128 or im.max() > 127:
        raise ValueError("CSI entries out of signed 8-bit range")
    if not 0 <= antenna_sel <= 0xFF:
        raise ValueError("antenna_sel must fit in one byte")
    perm = antenna_permutation(antenna_sel, n_rx)
    length = BfeeRecord.expected_len(n_rx, n_tx, n_sc)
    # one spare byte absorbs the high half of the final component
    buf = bytearray(length + 1)
    cursor = 0
    for sc in range(n_sc):
        cursor += 3
        for j in range(n_rx):
            for k in range(n_tx):
                for value in (int(re[sc, perm[j], k]), int(im[sc, perm[j], k])):
                    bits = (value & 0xFF) << (cursor & 7)
                    buf[cursor >> 3] |= bits & 0xFF
                    buf[(cursor >> 3) + 1] |= bits >> 8
                    cursor += 8
    ra = frame.rssi_a if frame.rssi_a is not None else rssi[0]
    rb = frame.rssi_b if frame.rssi_b is not None else rssi[1]
    rc = frame.rssi_c if frame.rssi_c is not None else rssi[2]
    g = frame.agc if frame.agc is not None else agc
    return BfeeRecord(timestamp_low & 0xFFFFFFFF, bfee_count & 0xFFFF, n_rx, n_tx, ra, rb, rc,
                      noise, g, antenna_sel, length, rate_flags, bytes(buf[:length]))


def encode_log(frames, antenna_sel: int = 0, start_us: int = 0) -> bytes:
    """Serialise frames as a binary log, timestamps in whole microseconds."""
    out = bytearray()
    for i, f in enumerate(frames):
        ts = (start_us + int(round(f.timestamp * 1e6))) & 0xFFFFFFFF
        out += encode_bfee(f, antenna_sel, timestamp_low=ts, bfee_count=i).to_bytes()
    return bytes(out)


def iter_records(data: bytes, strict: bool = False) -> Iterator[tuple]:
    """Yield ``(offset, BfeeRecord)`` for every CSI record in a framed log."""
    view = memoryview(data)
    cur, n = 0, len(data)
    while cur < n:
        if n - cur < 3:
            _truncated(f"{n - cur} trailing bytes cannot hold a record frame", cur, strict)
            return
        size = OUTER_SIZE.unpack_from(view, cur)[0]
        code = view[cur + 2]
        if size < 1:
            _truncated("record size field is zero", cur, strict)
            return
        end = cur + 2 + size
        if end > n:
            _truncated(f"record of {size} bytes exceeds remaining {n - cur - 2}", cur, strict)
            return
        if code == BFEE_CODE:
            try:
                yield cur, BfeeRecord.from_body(bytes(view[cur + 3:end]), offset=cur)
            except MalformedRecordError:
                if strict:
                    raise
                log.warning("skipping malformed record at byte offset %d", cur)
        cur = end


def _truncated(msg: str, offset: int, strict: bool):
    if strict:
        raise ParseError("truncated record: " + msg, offset=offset)
    log.warning("truncated log tail at byte offset %d: %s", offset, msg)


def parse_log(data: bytes, strict: bool = False, meta: Optional[TraceMeta] = None,
              nominal_rate: float = 100.0) -> Trace:
    """Decode a framed CSI log into a :class:`Trace`.

    Timestamps come from ``timestamp_low`` (microseconds, u32) unwrapped
    across rollovers and shifted so the first frame sits at 0 s. Frames
    whose timestamp does not advance are skipped in lenient mode.
    """
    frames = []
    last_low = None
    elapsed = 0
    for offset, rec in iter_records(data, strict):
        try:
            if last_low is not None:
                step = (rec.timestamp_low - last_low) & 0xFFFFFFFF
                if step == 0:
                    raise MalformedRecordError("timestamp does not advance", offset=offset)
            else:
                step = 0
            frame = decode_bfee(rec)
        except MalformedRecordError as exc:
            if strict:
                raise MalformedRecordError(str(exc), offset=offset) from exc
            log.warning("skipping malformed record at byte offset %d: %s", offset, exc)
            continue
        elapsed += step
        last_low = rec.timestamp_low
        frames.append(CsiFrame(elapsed / 1e6, frame.matrix, frame.rssi_a, frame.rssi_b,
                               frame.rssi_c, frame.agc))
    return Trace.from_frames(frames, nominal_rate, meta)


def read_log(path, strict: bool = False, **kw) -> Trace:
    return parse_log(Path(path).read_bytes(), strict=strict, **kw)


# -- portable text format ---------------------------------------------------

def _header_line(trace: Trace) -> str:
    n_sc, n_rx, n_tx = trace.dims
    m = trace.meta
    fields = [
        TEXT_MAGIC,
        f"rate={trace.nominal_rate!r}",
        f"subcarriers={n_sc}",
        f"rx={n_rx}",
        f"tx={n_tx}",
        f"subject={quote(m.subject_id, safe='')}",
        f"label={quote(m.label, safe='')}",
        f"session={quote(m.session, safe='')}",
    ]
    for k in sorted(m.attributes):
        fields.append(f"attr.{quote(str(k), safe='')}={quote(str(m.attributes[k]), safe='')}")
    return " ".join(fields)


def format_trace(trace: Trace, decimals: Optional[int] = 6) -> str:
    """Render a trace in the text format.

    ``decimals`` fixes the number of digits after the point for CSI values
    (timestamps get three more); ``None`` writes shortest exact reprs.
    """
    lines = [_header_line(trace)]
    flat = trace.csi.reshape(len(trace), int(np.prod(trace.dims)))
    pairs = np.empty((flat.shape[0], flat.shape[1] * 2))
    pairs[:, 0::2] = flat.real
    pairs[:, 1::2] = flat.imag
    if decimals is None:
        tfmt = vfmt = repr
    else:
        tfmt = f"{{:.{decimals + 3}f}}".format
        vfmt = f"{{:.{decimals}f}}".format
    for t, row in zip(trace.timestamps.tolist(), pairs.tolist()):
        lines.append(tfmt(t) + " " + " ".join(map(vfmt, row)))
    return "\n".join(lines) + "\n"


def write_trace(trace: Trace, path, decimals: Optional[int] = 6) -> None:
    Path(path).write_text(format_trace(trace, decimals))


def parse_trace_text(text: str) -> Trace:
    lines = text.splitlines()
    if not lines or not lines[0].startswith(TEXT_MAGIC):
        raise ParseError(f"missing {TEXT_MAGIC} header", line=1)
    header = {}
    attrs = {}
    for tok in lines[0].split()[1:]:
        key, sep, value = tok.partition("=")
        if not sep:
            raise ParseError(f"header token {tok!r} is not key=value", line=1)
        if key.startswith("attr."):
            attrs[unquote(key[5:])] = unquote(value)
        else:
            header[key] = value
    try:
        rate = float(header.get("rate", 100.0))
        dims = (int(header.get("subcarriers", DEFAULT_SUBCARRIERS)),
                int(header.get("rx", 1)), int(header.get("tx", 1)))
    except ValueError as exc:
        raise ParseError(f"bad header value: {exc}", line=1) from None
    meta = TraceMeta(
        subject_id=unquote(header.get("subject", "")),
        label=unquote(header.get("label", "")),
        session=unquote(header.get("session", "")),
        attributes=attrs,
    )
    width = 1 + 2 * dims[0] * dims[1] * dims[2]
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != width:
            raise ParseError(f"expected {width} values, found {len(parts)}", line=lineno)
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
    if not rows:
        return Trace([], [], rate, meta, dims=dims)
    arr = np.asarray(rows)
    csi = (arr[:, 1::2] + 1j * arr[:, 2::2]).reshape((len(rows),) + dims)
    try:
        return Trace(arr[:, 0], csi, rate, meta)
    except ValueError as exc:
        raise ParseError(str(exc), line=2) from None


def read_trace(path) -> Trace:
    return parse_trace_text(Path(path).read_text())
