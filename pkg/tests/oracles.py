"""Independent reference implementations used only by the tests.

Nothing here imports gridforge, so a bug in the package cannot leak
into the expected values.
"""

from __future__ import annotations

import math
import struct
from fractions import Fraction


# -- FCFS prefix packing --------------------------------------------------


def prefix_packing(jobs, resources, granularity, tcomm, memory_rules=True):
    """Brute-force FCFS prefix packing.

    ``jobs`` is a list of (job_id, mi, memory); ``resources`` a list of
    (resource_id, mips, bandwidth, memory). On each resource visit every
    prefix length of the remaining jobs is tried and the longest one whose
    every shorter prefix is also feasible is taken. A full cycle of empty
    visits moves the head job to overflow.

    Returns (groups, overflow), groups as (resource_id, [job_ids]).
    """
    g = Fraction(granularity)
    t = Fraction(tcomm)

    def fits(batch, res):
        _, mips, bw, mem = res
        mi = sum((Fraction(j[1]) for j in batch), Fraction(0))
        ms = sum((Fraction(j[2]) for j in batch), Fraction(0))
        if mi > Fraction(mips) * g:
            return False
        if memory_rules and (ms > Fraction(mem) or ms > Fraction(bw) * t):
            return False
        return True

    remaining = list(jobs)
    groups, overflow = [], []
    if not resources:
        return groups, [j[0] for j in remaining]
    visit = 0
    empty_streak = 0
    while remaining:
        res = resources[visit % len(resources)]
        visit += 1
        feasible = [fits(remaining[:k], res) for k in range(1, len(remaining) + 1)]
        take = 0
        for ok in feasible:
            if not ok:
                break
            take += 1
        if take:
            groups.append((res[0], [j[0] for j in remaining[:take]]))
            remaining = remaining[take:]
            empty_streak = 0
        else:
            empty_streak += 1
            if empty_streak == len(resources):
                overflow.append(remaining.pop(0)[0])
                empty_streak = 0
    return groups, overflow


# -- MD5 (RFC 1321), written out longhand ----------------------------------

_S = [7, 12, 17, 22] * 4 + [5, 9, 14, 20] * 4 + [4, 11, 16, 23] * 4 + [6, 10, 15, 21] * 4
_K = [int(abs(math.sin(i + 1)) * 2**32) & 0xFFFFFFFF for i in range(64)]


def _rotl(x, c):
    x &= 0xFFFFFFFF
    return ((x << c) | (x >> (32 - c))) & 0xFFFFFFFF


def md5(message: bytes) -> bytes:
    a0, b0, c0, d0 = 0x67452301, 0xEFCDAB89, 0x98BADCFE, 0x10325476
    msg = bytearray(message)
    bit_len = (8 * len(message)) & 0xFFFFFFFFFFFFFFFF
    msg.append(0x80)
    while len(msg) % 64 != 56:
        msg.append(0)
    msg += struct.pack("<Q", bit_len)
    for off in range(0, len(msg), 64):
        m = struct.unpack("<16I", msg[off:off + 64])
        a, b, c, d = a0, b0, c0, d0
        for i in range(64):
            if i < 16:
                f, g = (b & c) | (~b & d), i
            elif i < 32:
                f, g = (d & b) | (~d & c), (5 * i + 1) % 16
            elif i < 48:
                f, g = b ^ c ^ d, (3 * i + 5) % 16
            else:
                f, g = c ^ (b | ~d), (7 * i) % 16
            f = (f + a + _K[i] + m[g]) & 0xFFFFFFFF
            a, d, c = d, c, b
            b = (b + _rotl(f, _S[i])) & 0xFFFFFFFF
        a0 = (a0 + a) & 0xFFFFFFFF
        b0 = (b0 + b) & 0xFFFFFFFF
        c0 = (c0 + c) & 0xFFFFFFFF
        d0 = (d0 + d) & 0xFFFFFFFF
    return struct.pack("<4I", a0, b0, c0, d0)


# -- raw PKCS#1 v1.5 verification ------------------------------------------

DIGEST_INFO = {
    "md5": bytes.fromhex("3020300c06082a864886f70d020505000410"),
    "sha256": bytes.fromhex("3031300d060960864801650304020105000420"),
}


def pkcs1_v15_verify(digest: bytes, signature: bytes, n: int, e: int, alg: str) -> bool:
    """Textbook RSA: s^e mod n must equal 00 01 FF..FF 00 || DigestInfo || H."""
    k = (n.bit_length() + 7) // 8
    if len(signature) != k:
        return False
    s = int.from_bytes(signature, "big")
    if s >= n:
        return False
    em = pow(s, e, n).to_bytes(k, "big")
    t = DIGEST_INFO[alg] + digest
    expected = b"\x00\x01" + b"\xff" * (k - len(t) - 3) + b"\x00" + t
    return em == expected
