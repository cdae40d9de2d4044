"""Reference implementations written independently of the package.

They follow the textbook definitions directly (generator matrix products,
likelihood sums over all completions) and are only practical for small N.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def generator_matrix(N: int) -> np.ndarray:
    F = np.array([[1, 0], [1, 1]], dtype=np.int64)
    G = np.array([[1]], dtype=np.int64)
    while G.shape[0] < N:
        G = np.kron(G, F)
    return G


def encode_matrix(u) -> np.ndarray:
    u = np.asarray(u, dtype=np.int64)
    return (u @ generator_matrix(u.shape[-1])) % 2


def crc_long_division(bits, generator: int, width: int) -> list[int]:
    """Remainder of msg(x) * x^width mod g(x), MSB first."""
    reg = 0
    for b in list(bits) + [0] * width:
        reg = (reg << 1) | int(b)
        if reg >> width & 1:
            reg ^= generator
    return [(reg >> (width - 1 - k)) & 1 for k in range(width)]


def _channel_table(channel_kind: str, param: float):
    """Output alphabet as (symbol, W(y|0), W(y|1))."""
    if channel_kind == "bsc":
        return [(0, 1 - param, param), (1, param, 1 - param)]
    if channel_kind == "bec":
        return [(0, 1 - param, 0.0), (1, 0.0, 1 - param), (2, param, param)]
    raise ValueError(channel_kind)


def _all_outputs(table, N):
    syms = range(len(table))
    for ys in itertools.product(syms, repeat=N):
        yield ys


def exact_sc_bler_bruteforce(info_set, N: int, channel_kind: str, param: float,
                             all_messages: bool = False) -> float:
    """Exact SC block error rate by likelihood sums over all completions.

    Each SC decision compares P(y, u_1^{i-1}, u_i=b) summed over every
    completion u_{i+1}^N; ties are resolved by a fair coin. With
    ``all_messages`` the rate is averaged over every information word
    instead of assuming the all-zero word.
    """
    table = _channel_table(channel_kind, param)
    info = set(info_set)
    G = generator_matrix(N)
    all_u = np.array(list(itertools.product((0, 1), repeat=N)), dtype=np.int64)
    all_x = (all_u @ G) % 2
    # W(y|x) per output pattern and codeword
    w0 = np.array([t[1] for t in table])
    w1 = np.array([t[2] for t in table])
    if all_messages:
        k = len(info)
        msgs = list(itertools.product((0, 1), repeat=k))
    else:
        msgs = [tuple([0] * len(info))]
    order = sorted(info)
    total = 0.0
    for msg in msgs:
        u_true = np.zeros(N, dtype=np.int64)
        for pos, b in zip(order, msg):
            u_true[pos - 1] = b
        x_true = (u_true @ G) % 2
        for ys in _all_outputs(table, N):
            ys = np.array(ys)
            p_y = np.prod(np.where(x_true == 0, w0[ys], w1[ys]))
            if p_y == 0:
                continue
            lik = np.prod(np.where(all_x == 0, w0[ys][None, :], w1[ys][None, :]), axis=1)
            # probability that SC decodes u_true, tracking fair-coin ties
            p_ok = 1.0
            mask = np.ones(len(all_u), dtype=bool)
            for i in range(N):
                if (i + 1) not in info:
                    mask &= all_u[:, i] == 0
                    continue
                p0 = lik[mask & (all_u[:, i] == 0)].sum()
                p1 = lik[mask & (all_u[:, i] == 1)].sum()
                want = u_true[i]
                right, wrong = (p0, p1) if want == 0 else (p1, p0)
                # sums over different completions round differently, so
                # compare with a relative tolerance
                if abs(right - wrong) <= 1e-12 * (right + wrong):
                    p_ok *= 0.5
                elif right > wrong:
                    pass
                else:
                    p_ok = 0.0
                    break
                mask &= all_u[:, i] == want
            total += p_y * (1.0 - p_ok)
    return total / len(msgs)


def genie_decision_llrs_bruteforce(ys, N: int, channel_kind: str, param: float) -> np.ndarray:
    """L_i = ln P(y, u_1^{i-1}=0, u_i=0) / P(y, u_1^{i-1}=0, u_i=1), all completions free."""
    table = _channel_table(channel_kind, param)
    w0 = np.array([t[1] for t in table])
    w1 = np.array([t[2] for t in table])
    G = generator_matrix(N)
    all_u = np.array(list(itertools.product((0, 1), repeat=N)), dtype=np.int64)
    all_x = (all_u @ G) % 2
    ys = np.asarray(ys)
    lik = np.prod(np.where(all_x == 0, w0[ys][None, :], w1[ys][None, :]), axis=1)
    out = np.zeros(N)
    prefix = np.ones(len(all_u), dtype=bool)
    for i in range(N):
        p0 = lik[prefix & (all_u[:, i] == 0)].sum()
        p1 = lik[prefix & (all_u[:, i] == 1)].sum()
        out[i] = math.log(p0) - math.log(p1) if p0 > 0 and p1 > 0 else (math.inf if p1 == 0 else -math.inf)
        prefix &= all_u[:, i] == 0
    return out


def bec_erasure_probabilities(N: int, eps: float) -> np.ndarray:
    """Exact bit-channel erasure probabilities by brute-force density evolution.

    Enumerates every erasure pattern and asks whether u_i is determined by
    the observed code bits and the (known) previous inputs.
    """
    G = generator_matrix(N)
    out = np.zeros(N)
    for pattern in itertools.product((0, 1), repeat=N):
        erased = np.array(pattern, dtype=bool)
        w = np.prod(np.where(erased, eps, 1 - eps))
        rows = G[:, ~erased]   # observed columns
        for i in range(N):
            # u_i is recoverable iff row i is not in the GF(2) span of rows i+1..N
            # restricted to the observed columns
            if _in_span(rows[i], rows[i + 1:]):
                out[i] += w
    return out


def _in_span(v: np.ndarray, basis: np.ndarray) -> bool:
    if basis.size == 0 or v.size == 0:
        return not v.any()
    m = np.vstack([basis, v]) % 2
    return _rank(m) == _rank(basis % 2)


def _rank(m: np.ndarray) -> int:
    m = m.copy() % 2
    r = 0
    rows, cols = m.shape
    for c in range(cols):
        piv = next((k for k in range(r, rows) if m[k, c]), None)
        if piv is None:
            continue
        m[[r, piv]] = m[[piv, r]]
        for k in range(rows):
            if k != r and m[k, c]:
                m[k] ^= m[r]
        r += 1
    return r
